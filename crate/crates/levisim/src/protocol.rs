//! Pulse planning, slit geometry, and operational-regime bounds for the
//! squared-position measurement.

use std::f64::consts::PI;

use serde::Serialize;

use crate::gaussian::GaussianState;
use crate::params::{DerivedQuantities, ExperimentConfig, CODATA};
use crate::rates::{self, LocalizationRates};

/// Self-consistent pulse and timing parameters for one sphere/cavity pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulsePlan {
    /// Photons in the measurement pulse, n_ph = (2 n_bar + 1)/(32 pi C_l (k_c x_0)^2).
    pub n_ph: f64,
    /// Dark expansion time before the pulse,
    /// t_1 = sqrt(16 kappa C_l k_c^2 / (omega_t^2 (2 n_bar + 1)^2 Lambda_sc/n_ph)).
    pub t1: f64,
    /// Pulse length tau = 2 pi / kappa.
    pub tau: f64,
    /// Width of the pure expanded packet, sigma = sqrt(vx(t_1)) at n_bar = 0.
    pub sigma: f64,
    /// Measurement strength chi = 2 sqrt(C_q_bar), dimensionless.
    pub chi: f64,
    /// Enhanced quadratic cooperativity C_q_bar = C_l (k_c sigma)^2 = chi^2/4.
    pub c_q_bar: f64,
    /// Deterministic phase applied by the pulse, phi = g_q_bar sqrt(n_ph) tau [rad].
    pub phi: f64,
    /// Enhanced measurement rate Gamma_bar = Lambda_sc(n_ph) <x^2(t_1)>, with
    /// the thermal (occupation-weighted) variance [1/s].
    pub gamma_bar: f64,
    /// Free-fall time after the pulse, t_2 = m sigma^2 / (hbar chi).
    pub t2: f64,
    /// Consistency diagnostic tau * Gamma_bar; the plan is valid when this
    /// sits in [1/3, 3].
    pub tau_gamma: f64,
    /// Trap motion accumulated during the pulse, omega_t tau / 4; must stay
    /// below 0.05 for the frozen-trap treatment of the pulse to hold.
    pub trap_phase: f64,
    /// Quadratic phase the expanded pure packet carries at t_1, in units of
    /// (x/sigma)^2: cxp(t_1) / (2 hbar). The pulse phase phi is designed to
    /// cancel it.
    pub chirp_phase: f64,
    /// chirp_phase - phi: the quadratic phase left on the packet after the
    /// pulse. Reported, not enforced; n_ph and t_1 satisfy the cancellation
    /// only approximately.
    pub residual_phase: f64,
}

/// Double-slit geometry implied by one measurement outcome.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlitGeometry {
    /// Slit separation d = 2 sigma sqrt(p_L / chi) [m].
    pub separation: f64,
    /// Single-slit packet width sigma_2 = sigma^2 / (2 d chi) [m].
    pub width: f64,
    /// The dimensionless outcome p_L that produced this geometry.
    pub outcome: f64,
    /// Far-field fringe spacing x_f = 2 pi hbar t_2 / (m d) [m].
    pub fringe_spacing: f64,
}

/// Lower and upper limits on the slit separation d for a resolvable,
/// coherence-preserving double slit. Unconstrained bounds are +inf.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeBounds {
    /// d_min = sigma sqrt(2/chi): below this the two peaks are not resolved.
    pub d_min: f64,
    /// d_max_a = sigma: the outcome must be typical of the expanded packet.
    pub d_max_a: f64,
    /// d_max_b = xi_l: the packet's coherence length after expansion and pulse.
    pub d_max_b: f64,
    /// d_max_c = 2 pi hbar t_2 / (m delta_x): fringes wider than the detector.
    pub d_max_c: f64,
    /// d_max_d = (pi/2) sqrt(3/(t_2 Lambda_sd)): blurring during the fall.
    pub d_max_d: f64,
    /// Same form as d_max_d with the collapse-model rate alone. Reported
    /// separately and never gates `operational`.
    pub d_max_csl: f64,
    /// True when d_min < min(d_max_a..d), i.e. the window is non-empty.
    pub operational: bool,
}

/// One diameter of a regime scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    /// Sphere diameter [m].
    pub diameter: f64,
    pub n_ph: f64,
    pub t1: f64,
    pub t2: f64,
    pub chi: f64,
    pub bounds: RegimeBounds,
    /// Planning failure for this diameter, if any; the numbers above are
    /// still the (unchecked) plan values.
    pub error: Option<String>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProtocolError {
    #[error(
        "pulse/measurement band violated: tau*Gamma_bar = {tau_gamma:.3e} outside [1/3, 3] \
         (inconsistent cavity/sphere combination)"
    )]
    MeasurementBand { tau_gamma: f64 },
    #[error("trap not frozen during the pulse: omega_t*tau/4 = {phase:.3e} >= 0.05")]
    TrapMotion { phase: f64 },
    #[error("outcome p_L = {p_l:.3e} is not positive; no resolved double slit")]
    NonpositiveOutcome { p_l: f64 },
}

/// Fix n_ph, t_1, tau, chi, phi, and t_2 from the config without validating
/// the consistency band; see [`plan_pulse`].
pub fn plan_pulse_unchecked(cfg: &ExperimentConfig, dq: &DerivedQuantities) -> PulsePlan {
    let n_bar = cfg.trap.occupation;
    let q = 2.0 * n_bar + 1.0;
    let c_l = rates::coupling_rates(dq, 1.0, dq.x0).c_l;
    let kx = dq.k_c * dq.x0;
    let n_ph = q / (32.0 * PI * c_l * kx * kx);
    let lambda1 = rates::photon_scattering_rate_per_photon(dq);
    let t1 = (16.0 * dq.kappa * c_l * dq.k_c.powi(2)
        / (dq.omega_t.powi(2) * q * q * lambda1))
        .sqrt();
    let pure = GaussianState::thermal(dq.x0, 0.0, dq.mass).evolve(t1, 0.0);
    let sigma = pure.position_std();
    let thermal = GaussianState::thermal(dq.x0, n_bar, dq.mass).evolve(t1, 0.0);
    let (lambda_sc, _) = rates::photon_scattering_rate(dq, n_ph);
    let gamma_bar = lambda_sc * thermal.vx;
    let tau = 2.0 * PI / dq.kappa;
    let cr = rates::coupling_rates(dq, n_ph, sigma);
    let chi = 2.0 * cr.c_q_bar.sqrt();
    let phi = cr.g_q_bar * n_ph.sqrt() * tau;
    let chirp_phase = pure.cxp / (2.0 * CODATA.hbar);
    PulsePlan {
        n_ph,
        t1,
        tau,
        sigma,
        chi,
        c_q_bar: cr.c_q_bar,
        phi,
        gamma_bar,
        t2: dq.mass * sigma * sigma / (CODATA.hbar * chi),
        tau_gamma: tau * gamma_bar,
        trap_phase: dq.omega_t * tau / 4.0,
        chirp_phase,
        residual_phase: chirp_phase - phi,
    }
}

/// Plan the pulse and validate its consistency band. Fails when
/// tau*Gamma_bar leaves [1/3, 3] or the trap moves appreciably during tau.
pub fn plan_pulse(
    cfg: &ExperimentConfig,
    dq: &DerivedQuantities,
) -> Result<PulsePlan, ProtocolError> {
    let plan = plan_pulse_unchecked(cfg, dq);
    plan.check()?;
    Ok(plan)
}

impl PulsePlan {
    pub fn check(&self) -> Result<(), ProtocolError> {
        if !(self.tau_gamma >= 1.0 / 3.0 && self.tau_gamma <= 3.0) {
            return Err(ProtocolError::MeasurementBand {
                tau_gamma: self.tau_gamma,
            });
        }
        if !(self.trap_phase < 0.05) {
            return Err(ProtocolError::TrapMotion {
                phase: self.trap_phase,
            });
        }
        Ok(())
    }

    /// Outcome that puts the slits at separation d: p_L = chi (d / 2 sigma)^2.
    pub fn outcome_for_separation(&self, d: f64) -> f64 {
        self.chi * (d / (2.0 * self.sigma)).powi(2)
    }

    /// Slit geometry for outcome p_L at this plan's sigma, t_2, and mass
    /// m = hbar chi t_2 / sigma^2.
    pub fn slit_for_outcome(&self, p_l: f64) -> Result<SlitGeometry, ProtocolError> {
        let mass = CODATA.hbar * self.chi * self.t2 / (self.sigma * self.sigma);
        slit_from_outcome(p_l, self.chi, self.sigma, self.t2, mass)
    }

    pub fn slit_for_separation(&self, d: f64) -> Result<SlitGeometry, ProtocolError> {
        self.slit_for_outcome(self.outcome_for_separation(d))
    }
}

/// Geometry of the double slit heralded by outcome p_L > 0:
/// d = 2 sigma sqrt(p_L/chi), sigma_2 = sigma^2/(2 d chi), x_f = 2 pi hbar t_2/(m d).
pub fn slit_from_outcome(
    p_l: f64,
    chi: f64,
    sigma: f64,
    t2: f64,
    mass: f64,
) -> Result<SlitGeometry, ProtocolError> {
    if !(p_l > 0.0) {
        return Err(ProtocolError::NonpositiveOutcome { p_l });
    }
    let d = 2.0 * sigma * (p_l / chi).sqrt();
    Ok(SlitGeometry {
        separation: d,
        width: sigma * sigma / (2.0 * d * chi),
        outcome: p_l,
        fringe_spacing: 2.0 * PI * CODATA.hbar * t2 / (mass * d),
    })
}

/// Mean and variance of the outcome p_L = chi x^2/sigma^2 + shot noise for a
/// zero-mean Gaussian state of position variance vx:
/// <p_L> = chi vx/sigma^2, var = 1/2 + 2 chi^2 (vx/sigma^2)^2.
pub fn outcome_distribution(vx: f64, sigma: f64, chi: f64) -> (f64, f64) {
    let r = vx / (sigma * sigma);
    (chi * r, 0.5 + 2.0 * (chi * r).powi(2))
}

/// Separation bounds for a resolvable double slit that stays coherent through
/// expansion, pulse, and fall. The coherence length xi_l is evaluated on the
/// thermal state after expansion under Lambda_sd and a pulse under
/// Lambda_sd + Lambda_sc.
pub fn regime_bounds(
    cfg: &ExperimentConfig,
    dq: &DerivedQuantities,
    plan: &PulsePlan,
    rates: &LocalizationRates,
) -> RegimeBounds {
    let xi_l = GaussianState::thermal(dq.x0, cfg.trap.occupation, dq.mass)
        .evolve(plan.t1, rates.lambda_sd)
        .evolve(plan.tau, rates.lambda_sd + rates.lambda_sc)
        .coherence_length();
    let blur_bound = |lambda: f64| {
        if lambda > 0.0 {
            PI / 2.0 * (3.0 / (plan.t2 * lambda)).sqrt()
        } else {
            f64::INFINITY
        }
    };
    let d_min = plan.sigma * (2.0 / plan.chi).sqrt();
    let d_max_a = plan.sigma;
    let d_max_c = 2.0 * PI * CODATA.hbar * plan.t2 / (dq.mass * cfg.protocol.detector_resolution);
    let d_max_d = blur_bound(rates.lambda_sd);
    let upper = d_max_a.min(xi_l).min(d_max_c).min(d_max_d);
    RegimeBounds {
        d_min,
        d_max_a,
        d_max_b: xi_l,
        d_max_c,
        d_max_d,
        d_max_csl: blur_bound(rates.lambda_csl),
        operational: d_min < upper,
    }
}

impl RegimeBounds {
    /// Smallest of the four gating upper bounds (CSL excluded).
    pub fn upper(&self) -> f64 {
        self.d_max_a.min(self.d_max_b).min(self.d_max_c).min(self.d_max_d)
    }

    pub fn window_contains(&self, d: f64) -> bool {
        self.d_min < d && d < self.upper()
    }
}

/// One RegimeBounds row per sphere diameter, re-deriving and re-planning at
/// each point. Rows are computed independently (in parallel) and returned in
/// input order; planning failures are recorded in the row.
pub fn scan_regime(cfg: &ExperimentConfig, diameters: &[f64]) -> Vec<ScanRow> {
    use rayon::prelude::*;
    diameters
        .par_iter()
        .map(|&diameter| {
            let mut row_cfg = *cfg;
            row_cfg.sphere.radius = diameter / 2.0;
            let dq = crate::params::derive(&row_cfg);
            let plan = plan_pulse_unchecked(&row_cfg, &dq);
            let rates = rates::localization_rates(&row_cfg, &dq, plan.n_ph);
            let mut bounds = regime_bounds(&row_cfg, &dq, &plan, &rates);
            let error = plan.check().err().map(|e| e.to_string());
            bounds.operational &= error.is_none();
            ScanRow {
                diameter,
                n_ph: plan.n_ph,
                t1: plan.t1,
                t2: plan.t2,
                chi: plan.chi,
                bounds,
                error,
            }
        })
        .collect()
}

/// Log-spaced diameter grid, n >= 2 points from lo to hi inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
