//! Grid-based 1-D wavefunction simulation of measurement, free fall, and
//! interference, with decoherence applied as diagonal Gaussian blurring.

pub mod oracle;

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::params::{ExperimentConfig, CODATA};
use crate::protocol::{self, ProtocolError, PulsePlan, RegimeBounds, SlitGeometry};
use crate::rates::{self, LocalizationRates};

/// Uniform position grid of a power-of-two point count, centered on x = 0
/// (x_j = (j - N/2) dx).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(n: usize, dx: f64) -> Grid {
        assert!(n.is_power_of_two() && n >= 16, "grid size must be a power of two");
        assert!(dx > 0.0 && dx.is_finite());
        Grid { n, dx }
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx
    }

    pub fn span(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Angular wavenumbers in FFT bin order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|j| {
                let f = if j < n / 2 { j } else { j - n };
                2.0 * PI * f as f64 / self.span()
            })
            .collect()
    }
}

/// Discretized wavefunction; amplitudes carry dimension m^(-1/2) so that
/// sum |psi_j|^2 dx = 1.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub grid: Grid,
    pub psi: Vec<Complex64>,
    pub mass: f64,
}

/// Position probability density q_j >= 0 with sum q_j dx = 1.
#[derive(Debug, Clone)]
pub struct PositionDistribution {
    pub grid: Grid,
    pub q: Vec<f64>,
}

/// Interference-pattern summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FringeReport {
    /// Fringe spacing from the dominant spectral peak [m]; 0 when undetectable.
    pub spacing: f64,
    /// (max - min)/(max + min) over the central fringes.
    pub visibility: f64,
    /// RMS width of the full pattern [m].
    pub envelope_width: f64,
    /// False when no spectral peak rises above the noise floor; visibility is
    /// then reported as 0.
    pub detectable: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum WaveError {
    #[error("grid span {span:.3e} m below the required {need:.3e} m")]
    GridTooSmall { span: f64, need: f64 },
    #[error("pattern needs {needed} grid points, above the 2^22 cap")]
    GridTooLarge { needed: usize },
    #[error("relative boundary amplitude {amplitude:.3e} above 1e-6: wraparound")]
    Wraparound { amplitude: f64 },
    #[error("post-measurement norm {norm:.3e} below 1e-12: outcome essentially impossible here")]
    ImprobableOutcome { norm: f64 },
    #[error("blur kernel sigma_b = {sigma_b:.3e} m too wide for grid span {span:.3e} m")]
    KernelTooWide { sigma_b: f64, span: f64 },
}

impl WaveState {
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    fn renormalize(&mut self) {
        let s = self.norm().sqrt();
        for a in &mut self.psi {
            *a /= s;
        }
    }

    pub fn density(&self) -> PositionDistribution {
        PositionDistribution {
            grid: self.grid,
            q: self.psi.iter().map(|a| a.norm_sqr()).collect(),
        }
    }
}

impl PositionDistribution {
    pub fn total(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.grid.dx
    }

    /// n-th central moment <x^n> (about x = 0), normalized by the total.
    pub fn moment(&self, n: i32) -> f64 {
        let mut s = 0.0;
        for (j, &q) in self.q.iter().enumerate() {
            s += self.grid.x(j).powi(n) * q;
        }
        s * self.grid.dx / self.total()
    }
}

/// Normalized Gaussian packet psi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2/4sigma^2).
/// The grid must span at least 8 sigma.
pub fn gaussian_wavefunction(sigma: f64, grid: Grid, mass: f64) -> Result<WaveState, WaveError> {
    chirped_gaussian(sigma, 0.0, grid, mass)
}

/// Gaussian packet carrying a quadratic phase theta (x/sigma)^2 — the form a
/// freely expanded packet takes, with theta = cxp/(2 hbar).
///
/// Sampled pointwise only: for large theta the phase is not resolvable by the
/// grid in its tails, so states built here must be amplitude-localized (e.g.
/// by a measurement) before any spectral operation.
pub fn chirped_gaussian(
    sigma: f64,
    theta: f64,
    grid: Grid,
    mass: f64,
) -> Result<WaveState, WaveError> {
    assert!(sigma > 0.0);
    if grid.span() < 8.0 * sigma {
        return Err(WaveError::GridTooSmall {
            span: grid.span(),
            need: 8.0 * sigma,
        });
    }
    let mut state = WaveState {
        grid,
        psi: (0..grid.n)
            .map(|j| {
                let xt = grid.x(j) / sigma;
                Complex64::from_polar((-xt * xt / 4.0).exp(), theta * xt * xt)
            })
            .collect(),
        mass,
    };
    state.renormalize();
    Ok(state)
}

/// Apply the pulsed squared-position measurement kernel
/// M(x) = exp[-i phi xt^2 - (p_L - chi xt^2)^2], xt = x/sigma,
/// and renormalize. The second return value is the unnormalized weight
/// integral |M psi|^2 dx; sampled over outcomes it carries variance 1/4 about
/// chi xt^2 — the physical outcome noise is 1/2, so distribution builders add
/// the remaining 1/4 analytically.
pub fn apply_measurement(
    state: &WaveState,
    p_l: f64,
    chi: f64,
    phi: f64,
    sigma: f64,
) -> Result<(WaveState, f64), WaveError> {
    assert!(chi > 0.0 && sigma > 0.0);
    let mut out = state.clone();
    for (j, a) in out.psi.iter_mut().enumerate() {
        let xt2 = (out.grid.x(j) / sigma).powi(2);
        let m = Complex64::from_polar((-(p_l - chi * xt2).powi(2)).exp(), -phi * xt2);
        *a *= m;
    }
    let weight = out.norm();
    if weight < 1e-12 {
        return Err(WaveError::ImprobableOutcome { norm: weight });
    }
    out.renormalize();
    Ok((out, weight))
}

/// Exact spectral free flight for time t: multiply the momentum amplitudes by
/// exp(-i hbar k^2 t / 2m). Errors if probability has reached the grid
/// boundary afterwards (periodic wraparound would corrupt the pattern).
pub fn free_propagate(state: &WaveState, t: f64) -> Result<WaveState, WaveError> {
    assert!(t >= 0.0);
    let n = state.grid.n;
    let mut buf = state.psi.clone();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let coeff = CODATA.hbar * t / (2.0 * state.mass);
    for (a, k) in buf.iter_mut().zip(state.grid.wavenumbers()) {
        *a *= Complex64::from_polar(1.0, -coeff * k * k);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for a in &mut buf {
        *a *= scale;
    }
    let out = WaveState {
        grid: state.grid,
        psi: buf,
        mass: state.mass,
    };
    let peak = out.psi.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let edge = out.psi[0].norm().max(out.psi[n - 1].norm());
    if edge > 1e-6 * peak {
        return Err(WaveError::Wraparound {
            amplitude: edge / peak,
        });
    }
    Ok(out)
}

/// Diagonal decoherence kernel width sigma_b = (2 hbar/m) sqrt(t^3 Lambda / 3).
pub fn blur_width(t: f64, lambda: f64, mass: f64) -> f64 {
    2.0 * CODATA.hbar / mass * (t.powi(3) * lambda / 3.0).sqrt()
}

/// Convolve the density with exp(-y^2/sigma_b^2)/(sigma_b sqrt(pi)) — a kernel
/// of variance sigma_b^2/2 — via its spectral factor exp(-k^2 sigma_b^2 / 4).
/// Total probability is preserved exactly (the DC component is untouched);
/// the result is nonnegative up to roundoff once sigma_b covers a few cells.
pub fn blur(
    dist: &PositionDistribution,
    sigma_b: f64,
) -> Result<PositionDistribution, WaveError> {
    assert!(sigma_b >= 0.0);
    if sigma_b == 0.0 {
        return Ok(dist.clone());
    }
    if sigma_b * 4.0 > dist.grid.span() {
        return Err(WaveError::KernelTooWide {
            sigma_b,
            span: dist.grid.span(),
        });
    }
    let n = dist.grid.n;
    let mut buf: Vec<Complex64> = dist.q.iter().map(|&q| Complex64::new(q, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (a, k) in buf.iter_mut().zip(dist.grid.wavenumbers()) {
        *a *= (-k * k * sigma_b * sigma_b / 4.0).exp();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(PositionDistribution {
        grid: dist.grid,
        q: buf.iter().map(|a| a.re * scale).collect(),
    })
}

/// Fringe spacing from the dominant nonzero spatial frequency (parabolically
/// refined), visibility from the extrema of the central fringes.
pub fn extract_fringes(dist: &PositionDistribution) -> FringeReport {
    let n = dist.grid.n;
    let envelope_width = dist.moment(2).sqrt();
    let mut buf: Vec<Complex64> = dist.q.iter().map(|&q| Complex64::new(q, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|a| a.norm()).collect();
    let half = mag.len();

    let undetectable = FringeReport {
        spacing: 0.0,
        visibility: 0.0,
        envelope_width,
        detectable: false,
    };
    if half < 4 {
        return undetectable;
    }
    // Walk down the DC lobe to its first local minimum, then take the global
    // maximum beyond it as the fringe frequency.
    let mut start = 1;
    while start + 1 < half && mag[start + 1] <= mag[start] {
        start += 1;
    }
    let mut peak = start;
    for b in start..half {
        if mag[b] > mag[peak] {
            peak = b;
        }
    }
    if peak < 2 || peak + 1 >= half || mag[peak] < 1e-6 * mag[0] {
        return undetectable;
    }
    let (ym, y0, yp) = (mag[peak - 1], mag[peak], mag[peak + 1]);
    let den = ym - 2.0 * y0 + yp;
    let delta = if den.abs() > 0.0 { 0.5 * (ym - yp) / den } else { 0.0 };
    let mut spacing = dist.grid.span() / (peak as f64 + delta);

    // With few fringes under the envelope the spectral lobe is broad and its
    // peak is pulled toward the envelope scale; the pattern's first side
    // maximum is the sharper spacing estimate when one exists.
    let mut side: Option<usize> = None;
    for j in 1..n - 1 {
        let x = dist.grid.x(j);
        if x < 0.55 * spacing || x > 1.5 * spacing {
            continue;
        }
        if dist.q[j] >= dist.q[j - 1]
            && dist.q[j] >= dist.q[j + 1]
            && side.map_or(true, |s| dist.q[j] > dist.q[s])
        {
            side = Some(j);
        }
    }
    if let Some(j) = side {
        let den = dist.q[j - 1] - 2.0 * dist.q[j] + dist.q[j + 1];
        spacing = if den < 0.0 {
            dist.grid.x(j) + 0.5 * (dist.q[j - 1] - dist.q[j + 1]) / den * dist.grid.dx
        } else {
            dist.grid.x(j)
        };
    }

    let mut vmax = f64::MIN;
    let mut vmin = f64::MAX;
    for (j, &q) in dist.q.iter().enumerate() {
        let ax = dist.grid.x(j).abs();
        if ax <= 0.6 * spacing {
            vmax = vmax.max(q);
        }
        if ax <= 1.2 * spacing {
            vmin = vmin.min(q);
        }
    }
    if !(vmax > 0.0) || vmin == f64::MAX {
        return undetectable;
    }
    FringeReport {
        spacing,
        visibility: (vmax - vmin) / (vmax + vmin),
        envelope_width,
        detectable: true,
    }
}

/// Grid sized for the whole pipeline: wide enough for the pre-measurement
/// packet (>= 12 sigma), the slit pair, and the spread packets after the
/// fall; fine enough for >= 8 points per slit width and per fringe.
pub fn simulation_grid(
    sigma: f64,
    separation: f64,
    width: f64,
    fringe_spacing: f64,
    t2: f64,
    mass: f64,
) -> Result<Grid, WaveError> {
    let spread = (width.powi(2) + (CODATA.hbar * t2 / (2.0 * width * mass)).powi(2)).sqrt();
    let half = (6.0 * sigma).max(0.5 * separation + 6.0 * width + 9.0 * spread);
    let dx = (width / 8.0).min(fringe_spacing / 8.0);
    let needed = (2.0 * half / dx).ceil() as usize;
    if needed > 1 << 22 {
        return Err(WaveError::GridTooLarge { needed });
    }
    Ok(Grid::new(needed.next_power_of_two().max(64), dx))
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Plan(#[from] ProtocolError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(
        "slit separation {d:.3e} m outside the operational window [{lo:.3e}, {hi:.3e}] m"
    )]
    NotOperational { d: f64, lo: f64, hi: f64 },
}

/// Everything one protocol run produces: the plan, the slit geometry, the
/// three detection-plane densities (no decoherence / standard / standard+CSL),
/// and fringe reports both raw and folded with the detector resolution.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub plan: PulsePlan,
    pub slit: SlitGeometry,
    pub rates: LocalizationRates,
    pub bounds: RegimeBounds,
    pub sigma_b_standard: f64,
    pub sigma_b_csl: f64,
    /// Blur width equivalent of the detector kernel (std delta_x/2).
    pub sigma_b_detector: f64,
    pub ideal: PositionDistribution,
    pub standard: PositionDistribution,
    pub csl: PositionDistribution,
    pub fringes_ideal: FringeReport,
    pub fringes_standard: FringeReport,
    pub fringes_csl: FringeReport,
    /// Reports after additionally folding the detector resolution.
    pub folded_ideal: FringeReport,
    pub folded_standard: FringeReport,
    pub folded_csl: FringeReport,
}

/// Run the full protocol for the configured slit: plan the pulse, build the
/// expanded (chirped) packet, apply the measurement at the outcome that
/// places the slits at d, fall for t_2, and blur with sigma_b(Lambda_sd) and
/// sigma_b(Lambda_sd + Lambda_CSL).
///
/// With `force` the consistency band and the operational-window check are
/// reported-but-ignored rather than fatal.
pub fn simulate_protocol(
    cfg: &ExperimentConfig,
    force: bool,
) -> Result<SimulationOutput, SimulateError> {
    let dq = crate::params::derive(cfg);
    let plan = protocol::plan_pulse_unchecked(cfg, &dq);
    if !force {
        plan.check()?;
    }
    let rates = rates::localization_rates(cfg, &dq, plan.n_ph);
    let bounds = protocol::regime_bounds(cfg, &dq, &plan, &rates);
    let d = cfg.protocol.slit.separation(cfg.sphere.radius);
    if !force && !bounds.window_contains(d) {
        return Err(SimulateError::NotOperational {
            d,
            lo: bounds.d_min,
            hi: bounds.upper(),
        });
    }
    let slit = plan.slit_for_separation(d)?;
    let grid = simulation_grid(
        plan.sigma,
        slit.separation,
        slit.width,
        slit.fringe_spacing,
        plan.t2,
        dq.mass,
    )?;

    let expanded = chirped_gaussian(plan.sigma, plan.chirp_phase, grid, dq.mass)?;
    let (measured, _weight) =
        apply_measurement(&expanded, slit.outcome, plan.chi, plan.phi, plan.sigma)?;
    let fallen = free_propagate(&measured, plan.t2)?;
    let ideal = fallen.density();

    let sigma_b_standard = blur_width(plan.t2, rates.lambda_sd, dq.mass);
    let sigma_b_csl = blur_width(plan.t2, rates.lambda_sd + rates.lambda_csl, dq.mass);
    // Gaussian detector kernel of std delta_x/2, expressed in blur convention.
    let sigma_b_detector = cfg.protocol.detector_resolution / 2.0f64.sqrt();
    let standard = blur(&ideal, sigma_b_standard)?;
    let csl = blur(&ideal, sigma_b_csl)?;

    let folded = |d: &PositionDistribution| -> Result<FringeReport, WaveError> {
        Ok(extract_fringes(&blur(d, sigma_b_detector)?))
    };
    Ok(SimulationOutput {
        plan,
        slit,
        rates,
        bounds,
        sigma_b_standard,
        sigma_b_csl,
        sigma_b_detector,
        fringes_ideal: extract_fringes(&ideal),
        fringes_standard: extract_fringes(&standard),
        fringes_csl: extract_fringes(&csl),
        folded_ideal: folded(&ideal)?,
        folded_standard: folded(&standard)?,
        folded_csl: folded(&csl)?,
        ideal,
        standard,
        csl,
    })
}
