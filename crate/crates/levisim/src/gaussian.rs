//! Closed-form second-moment evolution of Gaussian states in free flight.

use serde::Serialize;

use crate::params::CODATA;

/// Centered second moments of a single-mode Gaussian state:
/// vx = <x^2>, vp = <p^2>, cxp = <xp + px>/2, all SI.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianState {
    pub vx: f64,
    pub vp: f64,
    pub cxp: f64,
    pub mass: f64,
}

/// a*b - c*c without catastrophic cancellation (Kahan's algorithm).
///
/// The moment determinant contracts by many orders of magnitude relative to
/// the products once the state has expanded; a naive evaluation loses most of
/// its significant digits.
fn kahan_det(a: f64, b: f64, c: f64) -> f64 {
    let w = c * c;
    let e = c.mul_add(c, -w);
    let f = a.mul_add(b, -w);
    f - e
}

impl GaussianState {
    /// Thermal state of a harmonic trap with ground-state width x_0 and mean
    /// occupation n_bar: vx = x_0^2 (2 n_bar + 1), vp = hbar^2 (2 n_bar + 1)/(4 x_0^2).
    pub fn thermal(x0: f64, occupation: f64, mass: f64) -> Self {
        let q = 2.0 * occupation + 1.0;
        GaussianState {
            vx: x0 * x0 * q,
            vp: CODATA.hbar.powi(2) / (4.0 * x0 * x0) * q,
            cxp: 0.0,
            mass,
        }
    }

    /// Moments after free flight of duration t >= 0 under localization rate
    /// lambda >= 0 [1/(m^2 s)]:
    ///
    ///   vx(t)  = vx + 2 cxp t/m + vp t^2/m^2 + 2 hbar^2 lambda t^3 / (3 m^2)
    ///   vp(t)  = vp + 2 hbar^2 lambda t
    ///   cxp(t) = cxp + vp t/m + hbar^2 lambda t^2/m
    ///
    /// This solves d(vx)/dt = 2 cxp/m, d(vp)/dt = 2 hbar^2 lambda,
    /// d(cxp)/dt = vp/m exactly, so composing evolutions is associative up to
    /// rounding.
    pub fn evolve(&self, t: f64, lambda: f64) -> Self {
        let m = self.mass;
        let h2l = CODATA.hbar.powi(2) * lambda;
        GaussianState {
            vx: self.vx
                + 2.0 * self.cxp * t / m
                + self.vp * (t / m).powi(2)
                + 2.0 * h2l * t.powi(3) / (3.0 * m * m),
            vp: self.vp + 2.0 * h2l * t,
            cxp: self.cxp + self.vp * t / m + h2l * t * t / m,
            mass: m,
        }
    }

    /// det Sigma = vx vp - cxp^2, evaluated cancellation-safely.
    pub fn determinant(&self) -> f64 {
        kahan_det(self.vx, self.vp, self.cxp)
    }

    /// Expectation of the parity operator about the origin,
    /// <P> = hbar / (2 sqrt(det Sigma)); coincides with the state purity.
    pub fn parity_expectation(&self) -> f64 {
        CODATA.hbar / (2.0 * self.determinant().sqrt())
    }

    /// Spatial coherence length xi = sqrt(8 vx) <P>: the off-diagonal distance
    /// at which the position density matrix has decayed.
    pub fn coherence_length(&self) -> f64 {
        (8.0 * self.vx).sqrt() * self.parity_expectation()
    }

    pub fn position_std(&self) -> f64 {
        self.vx.sqrt()
    }
}
