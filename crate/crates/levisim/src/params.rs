//! Experiment configuration, physical constants, and derived cavity/sphere quantities.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rates;

/// Fundamental constants, CODATA 2018. Fixed at build time, never configurable.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalConstants {
    /// Reduced Planck constant [J s].
    pub hbar: f64,
    /// Speed of light in vacuum [m/s].
    pub c: f64,
    /// Boltzmann constant [J/K].
    pub k_b: f64,
    /// Nucleon (proton) mass [kg], reference mass of the collapse-rate parameter.
    pub m0: f64,
    /// One torr in pascal, exact definition 101325/760.
    pub torr_pa: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    c: 299_792_458.0,
    k_b: 1.380_649e-23,
    m0: 1.672_621_923_69e-27,
    torr_pa: 101_325.0 / 760.0,
};

/// Dielectric nanosphere under study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    /// Radius R [m].
    pub radius: f64,
    /// Bulk density [kg/m^3].
    pub density: f64,
    /// Relative permittivity at the cavity wavelength.
    pub epsilon_r: Complex64,
    /// Permittivity averaged over the blackbody spectrum.
    pub epsilon_bb: Complex64,
    /// Internal (bulk) temperature [K], sets thermal emission.
    pub internal_temperature: f64,
}

/// Measurement cavity geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Finesse F of the bare cavity.
    pub finesse: f64,
    /// Mirror spacing L [m].
    pub length: f64,
    /// Mode waist w [m].
    pub waist: f64,
    /// Drive wavelength lambda_c [m].
    pub wavelength: f64,
}

/// Harmonic trap releasing the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// Trap frequency omega_t [rad/s].
    pub omega_t: f64,
    /// Phonon occupation n-bar reached before release.
    pub occupation: f64,
}

/// Residual gas and radiation environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// Gas pressure [Pa].
    pub pressure: f64,
    /// Environment temperature T_e [K].
    pub temperature: f64,
    /// Mean gas-molecule mass m_a [kg].
    pub gas_mass: f64,
    /// Mean gas speed v-bar [m/s]; defaults to sqrt(3 k_B T_e / m_a).
    pub mean_gas_speed: f64,
}

/// Target slit separation, either absolute or relative to the sphere diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlitSpec {
    Separation(f64),
    OverDiameter(f64),
}

impl SlitSpec {
    /// Absolute separation d [m] for a sphere of radius R.
    pub fn separation(&self, radius: f64) -> f64 {
        match *self {
            SlitSpec::Separation(d) => d,
            SlitSpec::OverDiameter(r) => r * 2.0 * radius,
        }
    }
}

/// Protocol targets and collapse-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Detector position resolution delta-x [m].
    pub detector_resolution: f64,
    /// Target slit separation.
    pub slit: SlitSpec,
    /// Collapse-rate enhancement factor lambda/lambda_0.
    pub csl_enhancement: f64,
    /// Localization parameter alpha [1/m^2] of the collapse model.
    pub csl_alpha: f64,
    /// Bare collapse rate lambda_0 [1/s].
    pub csl_lambda0: f64,
}

/// Fully validated experiment description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sphere: SphereParams,
    pub cavity: CavityParams,
    pub trap: TrapParams,
    pub environment: EnvironmentParams,
    pub protocol: ProtocolParams,
}

/// Quantities computed once from the config and used everywhere downstream.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivedQuantities {
    /// Sphere volume V [m^3].
    pub volume: f64,
    /// Sphere mass m = rho V [kg].
    pub mass: f64,
    /// Zero-point width x_0 = sqrt(hbar / (2 m omega_t)) [m].
    pub x0: f64,
    /// Cavity wavenumber k_c = 2 pi / lambda_c [1/m].
    pub k_c: f64,
    /// Cavity mode volume V_c = pi w^2 L / 4 [m^3].
    pub v_c: f64,
    /// Dielectric factor eps_c = 3 Re[(eps_r - 1)/(eps_r + 2)].
    pub eps_c: f64,
    /// Mirror-loss amplitude decay rate kappa_m = pi c / (2 L F) [rad/s].
    pub kappa_mirror: f64,
    /// Sphere-scattering contribution to the cavity linewidth [rad/s].
    pub kappa_sc: f64,
    /// Total cavity amplitude decay rate kappa = kappa_m + kappa_sc [rad/s].
    pub kappa: f64,
    /// Trap frequency [rad/s], carried along for the rate formulas.
    pub omega_t: f64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(field, format!("must be positive, got {value:e}")))
    }
}

fn require_nonnegative(field: &'static str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(field, format!("must be nonnegative, got {value:e}")))
    }
}

// ---------------------------------------------------------------------------
// On-disk representation. All fields carry their unit in the name, except
// pressure which is unit-tagged because both torr and pascal are in common use.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sphere: RawSphere,
    cavity: RawCavity,
    trap: RawTrap,
    environment: RawEnvironment,
    protocol: RawProtocol,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSphere {
    radius_m: f64,
    density_kg_m3: f64,
    /// [re, im] relative permittivity at the drive wavelength.
    epsilon_r: (f64, f64),
    /// [re, im] permittivity averaged over the blackbody spectrum.
    epsilon_bb: (f64, f64),
    internal_temperature_k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    finesse: f64,
    length_m: f64,
    waist_m: f64,
    wavelength_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    /// Trap frequency omega_t / 2 pi [Hz].
    frequency_hz: f64,
    occupation: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    pressure: RawPressure,
    temperature_k: f64,
    gas_mass_kg: f64,
    mean_gas_speed_m_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPressure {
    value: f64,
    unit: PressureUnit,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PressureUnit {
    Torr,
    Pa,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    detector_resolution_m: f64,
    slit_separation_m: Option<f64>,
    slit_over_diameter: Option<f64>,
    csl_enhancement: Option<f64>,
    csl_alpha_m2: Option<f64>,
    csl_lambda0_s: Option<f64>,
}

/// Default internal temperature [K] for a sphere heated by the trapping light.
const DEFAULT_INTERNAL_TEMPERATURE: f64 = 206.0;
/// Default collapse-model localization parameter [1/m^2], 1/sqrt(alpha) = 100 nm.
const DEFAULT_CSL_ALPHA: f64 = 1e14;
/// Default bare collapse rate [1/s].
const DEFAULT_CSL_LAMBDA0: f64 = 2.2e-17;

impl TryFrom<RawConfig> for ExperimentConfig {
    type Error = ConfigError;

    fn try_from(raw: RawConfig) -> Result<Self, ConfigError> {
        let epsilon_r = Complex64::new(raw.sphere.epsilon_r.0, raw.sphere.epsilon_r.1);
        if epsilon_r.re <= 1.0 {
            return Err(invalid(
                "sphere.epsilon_r",
                "real part must exceed 1 (vacuum) for a trappable dielectric",
            ));
        }
        if epsilon_r.im < 0.0 {
            return Err(invalid("sphere.epsilon_r", "imaginary part must be >= 0"));
        }
        let sphere = SphereParams {
            radius: require_positive("sphere.radius_m", raw.sphere.radius_m)?,
            density: require_positive("sphere.density_kg_m3", raw.sphere.density_kg_m3)?,
            epsilon_r,
            epsilon_bb: Complex64::new(raw.sphere.epsilon_bb.0, raw.sphere.epsilon_bb.1),
            internal_temperature: require_positive(
                "sphere.internal_temperature_k",
                raw.sphere
                    .internal_temperature_k
                    .unwrap_or(DEFAULT_INTERNAL_TEMPERATURE),
            )?,
        };

        let cavity = CavityParams {
            finesse: require_positive("cavity.finesse", raw.cavity.finesse)?,
            length: require_positive("cavity.length_m", raw.cavity.length_m)?,
            waist: require_positive("cavity.waist_m", raw.cavity.waist_m)?,
            wavelength: require_positive("cavity.wavelength_m", raw.cavity.wavelength_m)?,
        };
        if cavity.finesse < 1.0 {
            return Err(invalid("cavity.finesse", "must be >= 1"));
        }

        let trap = TrapParams {
            omega_t: 2.0 * std::f64::consts::PI
                * require_positive("trap.frequency_hz", raw.trap.frequency_hz)?,
            occupation: require_nonnegative("trap.occupation", raw.trap.occupation)?,
        };

        let pressure_pa = match raw.environment.pressure.unit {
            PressureUnit::Torr => raw.environment.pressure.value * CODATA.torr_pa,
            PressureUnit::Pa => raw.environment.pressure.value,
        };
        let temperature = require_positive("environment.temperature_k", raw.environment.temperature_k)?;
        let gas_mass = require_positive("environment.gas_mass_kg", raw.environment.gas_mass_kg)?;
        let environment = EnvironmentParams {
            pressure: require_nonnegative("environment.pressure", pressure_pa)?,
            temperature,
            gas_mass,
            mean_gas_speed: match raw.environment.mean_gas_speed_m_s {
                Some(v) => require_positive("environment.mean_gas_speed_m_s", v)?,
                None => (3.0 * CODATA.k_b * temperature / gas_mass).sqrt(),
            },
        };

        let slit = match (raw.protocol.slit_separation_m, raw.protocol.slit_over_diameter) {
            (Some(d), None) => SlitSpec::Separation(require_positive("protocol.slit_separation_m", d)?),
            (None, Some(r)) => {
                SlitSpec::OverDiameter(require_positive("protocol.slit_over_diameter", r)?)
            }
            (None, None) => {
                return Err(invalid(
                    "protocol",
                    "one of slit_separation_m or slit_over_diameter is required",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "protocol",
                    "slit_separation_m and slit_over_diameter are mutually exclusive",
                ))
            }
        };
        let protocol = ProtocolParams {
            detector_resolution: require_positive(
                "protocol.detector_resolution_m",
                raw.protocol.detector_resolution_m,
            )?,
            slit,
            csl_enhancement: require_nonnegative(
                "protocol.csl_enhancement",
                raw.protocol.csl_enhancement.unwrap_or(1.0),
            )?,
            csl_alpha: require_positive(
                "protocol.csl_alpha_m2",
                raw.protocol.csl_alpha_m2.unwrap_or(DEFAULT_CSL_ALPHA),
            )?,
            csl_lambda0: require_positive(
                "protocol.csl_lambda0_s",
                raw.protocol.csl_lambda0_s.unwrap_or(DEFAULT_CSL_LAMBDA0),
            )?,
        };

        Ok(ExperimentConfig {
            sphere,
            cavity,
            trap,
            environment,
            protocol,
        })
    }
}

/// Parse and validate a TOML config from a string.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<inline>"),
        source: Box::new(e),
    })?;
    raw.try_into()
}

/// Load and validate a TOML config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_owned(),
        source: Box::new(e),
    })?;
    raw.try_into()
}

/// Compute every derived quantity. Pure; call once per config.
pub fn derive(cfg: &ExperimentConfig) -> DerivedQuantities {
    let c = CODATA;
    let volume = 4.0 / 3.0 * std::f64::consts::PI * cfg.sphere.radius.powi(3);
    let mass = cfg.sphere.density * volume;
    let x0 = (c.hbar / (2.0 * mass * cfg.trap.omega_t)).sqrt();
    let k_c = 2.0 * std::f64::consts::PI / cfg.cavity.wavelength;
    let v_c = std::f64::consts::PI * cfg.cavity.waist.powi(2) * cfg.cavity.length / 4.0;
    let cm = (cfg.sphere.epsilon_r - 1.0) / (cfg.sphere.epsilon_r + 2.0);
    let eps_c = 3.0 * cm.re;
    let kappa_mirror =
        std::f64::consts::PI * c.c / (2.0 * cfg.cavity.length * cfg.cavity.finesse);
    let kappa_sc = rates::kappa_scattering(eps_c, volume, v_c, k_c);
    DerivedQuantities {
        volume,
        mass,
        x0,
        k_c,
        v_c,
        eps_c,
        kappa_mirror,
        kappa_sc,
        kappa: kappa_mirror + kappa_sc,
        omega_t: cfg.trap.omega_t,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const SILICA40_TOML: &str = include_str!("../fixtures/silica40.toml");

    #[test]
    fn silica40_fixture_parses() {
        let cfg = parse_config(SILICA40_TOML).unwrap();
        assert!((cfg.sphere.radius - 20e-9).abs() < 1e-24);
        assert!((cfg.trap.omega_t - 2.0 * std::f64::consts::PI * 135e3).abs() < 1e-6);
        // 1e-16 torr stored in pascal.
        let expect_pa = 1e-16 * 101_325.0 / 760.0;
        assert!((cfg.environment.pressure - expect_pa).abs() / expect_pa < 1e-12);
        assert!((cfg.environment.pressure - 1.333e-14).abs() / 1.333e-14 < 1e-3);
        // Default mean speed sqrt(3 k_B T / m_a) at 4.5 K for m_a = 4.6495e-26 kg.
        assert!((cfg.environment.mean_gas_speed - 63.3).abs() < 0.5);
    }

    #[test]
    fn derived_match_hand_evaluation() {
        let cfg = parse_config(SILICA40_TOML).unwrap();
        let dq = derive(&cfg);
        // m = rho 4/3 pi R^3 at R = 20 nm, rho = 2201 kg/m^3.
        assert!((dq.mass - 7.4e-20).abs() / 7.4e-20 < 0.01);
        // eps_c for eps_r = 2.1: 3 * 1.1 / 4.1.
        assert!((dq.eps_c - 0.805).abs() < 1e-3);
        // Zero-point width at omega_t/2pi = 135 kHz.
        assert!((dq.x0 - 2.9e-11).abs() / 2.9e-11 < 0.01);
        // Mode volume (pi/4) w^2 L.
        assert!((dq.v_c - 3.53e-18).abs() / 3.53e-18 < 0.01);
        // Total linewidth dominated by mirror loss; kappa/2pi near 2.8e8 Hz.
        let kappa_2pi = dq.kappa / (2.0 * std::f64::consts::PI);
        assert!((kappa_2pi - 2.8e8).abs() / 2.8e8 < 0.10);
        assert!(dq.kappa_sc < 0.01 * dq.kappa_mirror);
    }

    #[test]
    fn pressure_in_pascal_accepted() {
        let text = SILICA40_TOML.replace(
            r#"pressure = { value = 1e-16, unit = "torr" }"#,
            r#"pressure = { value = 1.333e-14, unit = "pa" }"#,
        );
        let cfg = parse_config(&text).unwrap();
        assert!((cfg.environment.pressure - 1.333e-14).abs() < 1e-20);
    }

    #[test]
    fn rejects_nonphysical_values() {
        for (from, to) in [
            ("radius_m = 20e-9", "radius_m = -20e-9"),
            ("density_kg_m3 = 2201.0", "density_kg_m3 = 0.0"),
            ("frequency_hz = 135e3", "frequency_hz = -1.0"),
            ("epsilon_r = [2.1, 2.5e-10]", "epsilon_r = [0.9, 0.0]"),
        ] {
            let text = SILICA40_TOML.replace(from, to);
            assert!(parse_config(&text).is_err(), "accepted {to}");
        }
    }

    #[test]
    fn rejects_ambiguous_slit() {
        let text = SILICA40_TOML.replace(
            "slit_over_diameter = 1.0",
            "slit_over_diameter = 1.0\nslit_separation_m = 40e-9",
        );
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = format!("{SILICA40_TOML}\n[extra]\nx = 1\n");
        assert!(parse_config(&text).is_err());
    }
}
