//! Run provenance: tool version, config fingerprint, command line, and the
//! fixed interpretation choices baked into every number this tool emits.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Conventions that change the numbers if read differently. Recorded with
/// every output so results can be compared across tool versions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Interpretation {
    /// How `trap.frequency_hz` is read.
    pub trap_frequency: &'static str,
    /// Mass-distribution form factor used for the collapse rate.
    pub collapse_shape: &'static str,
    /// Detector response folded into reported interference patterns.
    pub detector_kernel: &'static str,
    /// Source of the mean gas speed when not given explicitly.
    pub gas_speed: &'static str,
}

pub const INTERPRETATION: Interpretation = Interpretation {
    trap_frequency: "omega_t = 2 pi * trap.frequency_hz",
    collapse_shape: "homogeneous sphere form factor, series below u = 0.5",
    detector_kernel: "Gaussian of std detector_resolution_m / sqrt(2)",
    gas_speed: "sqrt(3 k_B T_e / m_a) unless mean_gas_speed_m_s is set",
};

/// Provenance block embedded in JSON outputs and written as a sidecar for CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the raw config file bytes.
    pub config_sha256: String,
    pub interpretation: Interpretation,
    /// RFC 3339 UTC time of the run; informational only, never affects output.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(config_text: &str, args: impl IntoIterator<Item = String>) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: args.into_iter().collect::<Vec<_>>().join(" "),
            config_sha256: hex,
            interpretation: INTERPRETATION,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_hex() {
        let m = RunManifest::new("abc", ["levisim".into(), "derive".into()]);
        assert_eq!(
            m.config_sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m.command, "levisim derive");
        assert!(m.timestamp.contains('T'));
    }

    #[test]
    fn serializes_with_interpretation_block() {
        let m = RunManifest::new("x", ["t".into()]);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("trap_frequency"));
        assert!(json.contains("omega_t"));
    }
}
