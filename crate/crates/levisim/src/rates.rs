//! Optomechanical coupling rates and position-localization (decoherence) rates.
//!
//! Localization rates Lambda are the coefficients of the double-commutator
//! term in d rho/dt = (i/2m hbar)[rho, p^2] - Lambda [x, [x, rho]], with units
//! 1/(m^2 s); off-diagonal elements at separation v decay as exp(-Lambda v^2 t).

use serde::Serialize;

use crate::params::{
    DerivedQuantities, EnvironmentParams, ExperimentConfig, ProtocolParams, SphereParams, CODATA,
};

/// Cavity-light coupling strengths for a pulse of n_ph photons and a
/// wavepacket of width sigma.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CouplingRates {
    /// Linear coupling g = x_0 sqrt(n_ph) eps_c k_c^2 c V / (4 V_c) [rad/s].
    pub g: f64,
    /// Quadratic coupling g_q = k_c x_0 g [rad/s].
    pub g_q: f64,
    /// Quadratic coupling enhanced by the expanded state, g_q (sigma/x_0)^2 [rad/s].
    pub g_q_bar: f64,
    /// Linear cooperativity C_l = g^2 / (kappa Gamma), Gamma = Lambda_sc x_0^2.
    /// Independent of n_ph: both g^2 and Lambda_sc scale linearly with it.
    pub c_l: f64,
    /// Enhanced quadratic cooperativity C_q_bar = C_l (k_c sigma)^2.
    pub c_q_bar: f64,
}

/// Blackbody localization rates [1/(m^2 s)].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlackbodyRates {
    /// Scattering of thermal photons, prop. to R^6 T_e^9.
    pub scattering: f64,
    /// Emission from the internal temperature, prop. to R^3 T_i^6.
    pub emission: f64,
    /// Absorption of environmental photons, prop. to R^3 T_e^6.
    pub absorption: f64,
}

/// Every localization rate relevant to the protocol [1/(m^2 s)].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalizationRates {
    /// Cavity-light scattering during the pulse, prop. to n_ph.
    pub lambda_sc: f64,
    /// Residual-gas collisions.
    pub lambda_air: f64,
    pub lambda_bb_scattering: f64,
    pub lambda_bb_emission: f64,
    pub lambda_bb_absorption: f64,
    /// Standard-decoherence total during dark free fall: gas plus blackbody.
    /// Light scattering is excluded; no drive is on while the sphere falls.
    pub lambda_sd: f64,
    /// Collapse-model rate at the configured enhancement factor.
    pub lambda_csl: f64,
}

/// Cavity linewidth contribution from light scattered by the sphere,
/// kappa_sc = eps_c^2 V^2 k_c^4 c / (16 pi V_c) [rad/s]. Per-photon quantity.
pub fn kappa_scattering(eps_c: f64, volume: f64, v_c: f64, k_c: f64) -> f64 {
    eps_c.powi(2) * volume.powi(2) * k_c.powi(4) * CODATA.c / (16.0 * std::f64::consts::PI * v_c)
}

/// Recoil localization rate from drive photons scattered by the sphere,
/// Lambda_sc = eps_c^2 n_ph c V^2 k_c^6 / (6 pi V_c), plus the matching
/// linewidth contribution kappa_sc. Returned as (Lambda_sc, kappa_sc).
pub fn photon_scattering_rate(dq: &DerivedQuantities, n_ph: f64) -> (f64, f64) {
    (
        n_ph * photon_scattering_rate_per_photon(dq),
        kappa_scattering(dq.eps_c, dq.volume, dq.v_c, dq.k_c),
    )
}

/// Lambda_sc / n_ph = eps_c^2 c V^2 k_c^6 / (6 pi V_c).
pub fn photon_scattering_rate_per_photon(dq: &DerivedQuantities) -> f64 {
    dq.eps_c.powi(2) * CODATA.c * dq.volume.powi(2) * dq.k_c.powi(6)
        / (6.0 * std::f64::consts::PI * dq.v_c)
}

/// Linear coupling per sqrt photon, g / sqrt(n_ph) = x_0 eps_c k_c^2 c V / (4 V_c).
fn coupling_per_photon(dq: &DerivedQuantities) -> f64 {
    dq.x0 * dq.eps_c * dq.k_c.powi(2) * CODATA.c * dq.volume / (4.0 * dq.v_c)
}

/// Coupling strengths and cooperativities for a pulse of n_ph photons acting
/// on a state expanded to width sigma.
///
/// C_l is computed from per-photon quantities so that it is bit-identical for
/// every n_ph, not merely equal up to rounding.
pub fn coupling_rates(dq: &DerivedQuantities, n_ph: f64, sigma: f64) -> CouplingRates {
    let g1 = coupling_per_photon(dq);
    let lambda1 = photon_scattering_rate_per_photon(dq);
    let g = g1 * n_ph.sqrt();
    let g_q = dq.k_c * dq.x0 * g;
    let ratio2 = (sigma / dq.x0).powi(2);
    let c_l = g1 * g1 / (dq.kappa * lambda1 * dq.x0 * dq.x0);
    CouplingRates {
        g,
        g_q,
        g_q_bar: g_q * ratio2,
        c_l,
        c_q_bar: c_l * (dq.k_c * sigma).powi(2),
    }
}

/// Sideband-cooling floor n_bar = (kappa / 4 omega_t)^2 + 1/C_l and whether
/// the cavity is in the resolved-sideband regime (kappa < omega_t).
pub fn cooling_occupation(dq: &DerivedQuantities, c_l: f64) -> (f64, bool) {
    let n_bar = (dq.kappa / (4.0 * dq.omega_t)).powi(2) + 1.0 / c_l;
    (n_bar, dq.kappa < dq.omega_t)
}

/// Localization rate from residual-gas collisions,
/// Lambda_air = 8 sqrt(2 pi) m_a v-bar P R^2 / (3 sqrt(3) hbar^2).
pub fn air_rate(env: &EnvironmentParams, radius: f64) -> f64 {
    let c = CODATA;
    8.0 * (2.0 * std::f64::consts::PI).sqrt() * env.gas_mass * env.mean_gas_speed * env.pressure
        * radius.powi(2)
        / (3.0 * 3.0f64.sqrt() * c.hbar.powi(2))
}

/// Blackbody localization rates for a sphere in the point-dipole limit.
///
/// Scattering: 8! zeta(9) (8/(9 pi)) c R^6 Re[(eps-1)/(eps+2)]^2 (k_B T_e/(hbar c))^9.
/// Emission/absorption: (16 pi^5/189) c R^3 Im[(eps-1)/(eps+2)] (k_B T/(hbar c))^6,
/// with T the internal temperature for emission and T_e for absorption.
pub fn blackbody_rates(sphere: &SphereParams, env: &EnvironmentParams) -> BlackbodyRates {
    let c = CODATA;
    let cm = (sphere.epsilon_bb - 1.0) / (sphere.epsilon_bb + 2.0);
    let r = sphere.radius;
    // 8! zeta(9) 8 / (9 pi)
    const SCATTER_PREFACTOR: f64 = 11_431.17;
    let thermal_k = |t: f64| c.k_b * t / (c.hbar * c.c);
    let scattering =
        SCATTER_PREFACTOR * c.c * r.powi(6) * cm.re.powi(2) * thermal_k(env.temperature).powi(9);
    let emission_prefactor = 16.0 * std::f64::consts::PI.powi(5) / 189.0 * c.c * r.powi(3) * cm.im;
    BlackbodyRates {
        scattering,
        emission: emission_prefactor * thermal_k(sphere.internal_temperature).powi(6),
        absorption: emission_prefactor * thermal_k(env.temperature).powi(6),
    }
}

/// Sphere form factor of the collapse model: 1 at x << 1 (point particle),
/// 6/x^4 at x >> 1, 0.62 at x = 1.
///
/// f(x) = (6/x^4) [1 - 2/x^2 + (1 + 2/x^2) exp(-x^2)]; evaluated by its
/// alternating series 6 sum_k (-1)^k (k+1) x^(2k) / (k+3)! for small x where
/// the closed form cancels catastrophically.
pub fn csl_shape_function(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "shape function needs x >= 0");
    let u = x * x;
    if u < 0.5 {
        let mut term = 1.0f64;
        let mut sum = 1.0;
        let mut k = 0u32;
        while term.abs() > 1e-18 {
            let kf = f64::from(k);
            term *= -u * (kf + 2.0) / ((kf + 1.0) * (kf + 4.0));
            sum += term;
            k += 1;
        }
        sum
    } else {
        let eu = (-u).exp();
        6.0 / (u * u) * (1.0 - 2.0 / u + (1.0 + 2.0 / u) * eu)
    }
}

/// Collapse-model localization rate
/// Lambda = (m/m_0)^2 lambda alpha f(sqrt(alpha) R) / 2,
/// with lambda = enhancement * lambda_0.
pub fn csl_rate(sphere: &SphereParams, protocol: &ProtocolParams) -> f64 {
    let mass = sphere.density * 4.0 / 3.0 * std::f64::consts::PI * sphere.radius.powi(3);
    let lambda = protocol.csl_enhancement * protocol.csl_lambda0;
    let x = protocol.csl_alpha.sqrt() * sphere.radius;
    (mass / CODATA.m0).powi(2) * lambda * protocol.csl_alpha * csl_shape_function(x) / 2.0
}

/// All localization rates for one config, with the light-scattering term at
/// the given pulse photon number.
pub fn localization_rates(
    cfg: &ExperimentConfig,
    dq: &DerivedQuantities,
    n_ph: f64,
) -> LocalizationRates {
    let (lambda_sc, _) = photon_scattering_rate(dq, n_ph);
    let lambda_air = air_rate(&cfg.environment, cfg.sphere.radius);
    let bb = blackbody_rates(&cfg.sphere, &cfg.environment);
    LocalizationRates {
        lambda_sc,
        lambda_air,
        lambda_bb_scattering: bb.scattering,
        lambda_bb_emission: bb.emission,
        lambda_bb_absorption: bb.absorption,
        lambda_sd: lambda_air + bb.scattering + bb.emission + bb.absorption,
        lambda_csl: csl_rate(&cfg.sphere, &cfg.protocol),
    }
}
