//! Brute-force density-matrix evolution of free flight with position
//! localization, used by the test suite to validate the analytic paths.
//!
//! In centroid/offset coordinates u = (x+x')/2, v = x - x' the equation
//! d rho/dt = (i hbar/m) d^2 rho/du dv - Lambda v^2 rho is solved exactly:
//! Fourier transforming u -> k turns it into advection of v along
//! characteristics with closed-form accumulated damping,
//! rho~(k, v, t) = exp[-Lambda t (v^2 + v v0 + v0^2)/3] rho~(k, v0, 0),
//! v0 = v - hbar k t/m. The implementation applies that map in bounded time
//! steps so the circular v-shift never wraps significant amplitude.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::params::CODATA;

/// Rectangular (u, v) grid, centered: u_i = (i - n_u/2) du, v_j = (j - n_v/2) dv.
#[derive(Debug, Clone, Copy)]
pub struct DensityGrid {
    pub n_u: usize,
    pub du: f64,
    pub n_v: usize,
    pub dv: f64,
}

impl DensityGrid {
    pub fn u(&self, i: usize) -> f64 {
        (i as f64 - (self.n_u / 2) as f64) * self.du
    }

    pub fn v(&self, j: usize) -> f64 {
        (j as f64 - (self.n_v / 2) as f64) * self.dv
    }
}

fn fft_freqs(n: usize, d: f64) -> Vec<f64> {
    let ni = n as i64;
    (0..ni)
        .map(|j| {
            let f = if j < ni / 2 { j } else { j - ni };
            2.0 * PI * f as f64 / (n as f64 * d)
        })
        .collect()
}

/// rho(u, v) = psi(u + v/2) conj psi(u - v/2), evaluated exactly at the grid's
/// half-offset points via the supplied closure. No normalization is applied.
pub fn density_from_wavefunction(
    grid: &DensityGrid,
    psi: impl Fn(f64) -> Complex64,
) -> Array2<Complex64> {
    Array2::from_shape_fn((grid.n_u, grid.n_v), |(i, j)| {
        let (u, v) = (grid.u(i), grid.v(j));
        psi(u + v / 2.0) * psi(u - v / 2.0).conj()
    })
}

/// Gaussian state with second moments (vx, vp, cxp):
/// rho(u, v) = exp[-u^2/(2 vx) - det v^2/(2 hbar^2 vx) + i cxp u v/(hbar vx)],
/// unnormalized.
pub fn gaussian_density(grid: &DensityGrid, vx: f64, vp: f64, cxp: f64) -> Array2<Complex64> {
    let h = CODATA.hbar;
    let det = vx * vp - cxp * cxp;
    Array2::from_shape_fn((grid.n_u, grid.n_v), |(i, j)| {
        let (u, v) = (grid.u(i), grid.v(j));
        let mag = (-u * u / (2.0 * vx) - det * v * v / (2.0 * h * h * vx)).exp();
        Complex64::from_polar(mag, cxp * u * v / (h * vx))
    })
}

/// Scale rho so that its diagonal integrates to one.
pub fn normalize_trace(rho: &mut Array2<Complex64>, grid: &DensityGrid) {
    let tr: f64 = (0..grid.n_u).map(|i| rho[[i, grid.n_v / 2]].re).sum::<f64>() * grid.du;
    rho.mapv_inplace(|a| a / tr);
}

/// Position density rho(u, u), real part of the v = 0 column.
pub fn diagonal(rho: &Array2<Complex64>, grid: &DensityGrid) -> Vec<f64> {
    (0..grid.n_u).map(|i| rho[[i, grid.n_v / 2]].re).collect()
}

/// Off-diagonal profile rho(0, v) along the u = 0 row.
pub fn coherence_profile(rho: &Array2<Complex64>, grid: &DensityGrid) -> Vec<Complex64> {
    rho.row(grid.n_u / 2).to_vec()
}

/// Evolve rho for time t under mass m and localization rate lambda using the
/// exact factorization above, time-stepped so that per-step shear stays below
/// an eighth of the v-span and damping exponents stay representable.
pub fn evolve_density(
    rho: &mut Array2<Complex64>,
    grid: &DensityGrid,
    mass: f64,
    t: f64,
    lambda: f64,
) {
    assert!(t >= 0.0 && lambda >= 0.0);
    if t == 0.0 {
        return;
    }
    let (n_u, n_v) = (grid.n_u, grid.n_v);
    let v_half = n_v as f64 * grid.dv / 2.0;
    let k_u_max = PI / grid.du;
    let shear_total = CODATA.hbar * k_u_max * t / mass;
    let mut steps = (shear_total / (v_half / 4.0)).ceil() as usize;
    steps = steps.max((lambda * t * v_half * v_half / 200.0).ceil() as usize);
    steps = steps.max(1);
    let ts = t / steps as f64;

    let mut planner = FftPlanner::new();
    let fft_u = planner.plan_fft_forward(n_u);
    let ifft_u = planner.plan_fft_inverse(n_u);
    let fft_v = planner.plan_fft_forward(n_v);
    let ifft_v = planner.plan_fft_inverse(n_v);
    let k_u = fft_freqs(n_u, grid.du);
    let k_v = fft_freqs(n_v, grid.dv);
    let v: Vec<f64> = (0..n_v).map(|j| grid.v(j)).collect();

    // u -> k_u once; the per-step v-operations never mix k_u bins.
    let mut col = vec![Complex64::ZERO; n_u];
    for j in 0..n_v {
        for i in 0..n_u {
            col[i] = rho[[i, j]];
        }
        fft_u.process(&mut col);
        for i in 0..n_u {
            rho[[i, j]] = col[i];
        }
    }

    for _ in 0..steps {
        for i in 0..n_u {
            let delta = CODATA.hbar * k_u[i] * ts / mass;
            let row = rho.row_mut(i).into_slice().expect("row-major layout");
            // Damping split symmetrically around the shift:
            // g(v0) h(v) = exp[-(lambda ts/3)(v^2 + v v0 + v0^2)], v0 = v - delta.
            let half = lambda * ts / 2.0;
            for (a, &vv) in row.iter_mut().zip(&v) {
                *a *= (-half * (vv * vv + delta * vv / 3.0)).exp();
            }
            fft_v.process(row);
            for (a, &kv) in row.iter_mut().zip(&k_v) {
                *a *= Complex64::from_polar(1.0, -kv * delta);
            }
            ifft_v.process(row);
            let scale = 1.0 / n_v as f64;
            for (a, &vv) in row.iter_mut().zip(&v) {
                *a *= scale * (-half * (vv * vv - delta * vv / 3.0)).exp();
            }
        }
    }

    for j in 0..n_v {
        for i in 0..n_u {
            col[i] = rho[[i, j]];
        }
        ifft_u.process(&mut col);
        let scale = 1.0 / n_u as f64;
        for i in 0..n_u {
            rho[[i, j]] = col[i] * scale;
        }
    }
}

/// Direct RK4 integration of
/// d rho/dt = (i hbar/2m)(d^2/dx^2 - d^2/dx'^2) rho - Lambda (x-x')^2 rho
/// on a square (x, x') grid with spectral derivatives. Slow; validates the
/// exact factorization above on small grids.
pub fn evolve_density_rk4(
    rho: &mut Array2<Complex64>,
    dx: f64,
    mass: f64,
    t: f64,
    lambda: f64,
    steps: usize,
) {
    let n = rho.nrows();
    assert_eq!(n, rho.ncols());
    assert!(n <= 256, "RK4 oracle is for small validation grids");
    let k = fft_freqs(n, dx);
    let x: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n / 2) as f64) * dx)
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let h = t / steps as f64;
    let kin = CODATA.hbar / (2.0 * mass);

    let rhs = |r: &Array2<Complex64>| -> Array2<Complex64> {
        let mut ddx = r.clone();
        // d^2/dx^2: FFT down columns (axis 0).
        let mut col = vec![Complex64::ZERO; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = ddx[[i, j]];
            }
            fft.process(&mut col);
            for i in 0..n {
                col[i] *= -k[i] * k[i];
            }
            ifft.process(&mut col);
            for i in 0..n {
                ddx[[i, j]] = col[i] / n as f64;
            }
        }
        // d^2/dx'^2: FFT along contiguous rows (axis 1).
        let mut ddxp = r.clone();
        for i in 0..n {
            let row = ddxp.row_mut(i).into_slice().expect("row-major layout");
            fft.process(row);
            for (a, &kk) in row.iter_mut().zip(&k) {
                *a *= -kk * kk;
            }
            ifft.process(row);
            for a in row.iter_mut() {
                *a /= n as f64;
            }
        }
        Array2::from_shape_fn((n, n), |(i, j)| {
            let sep = x[i] - x[j];
            Complex64::i() * kin * (ddx[[i, j]] - ddxp[[i, j]]) - lambda * sep * sep * r[[i, j]]
        })
    };

    for _ in 0..steps {
        let k1 = rhs(rho);
        let k2 = rhs(&(&*rho + &(&k1 * Complex64::new(h / 2.0, 0.0))));
        let k3 = rhs(&(&*rho + &(&k2 * Complex64::new(h / 2.0, 0.0))));
        let k4 = rhs(&(&*rho + &(&k3 * Complex64::new(h, 0.0))));
        *rho = &*rho
            + &((k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                * Complex64::new(h / 6.0, 0.0));
    }
}
