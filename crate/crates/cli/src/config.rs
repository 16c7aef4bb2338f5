//! Configuration file schema and flag merging.
//!
//! A single TOML file drives every subcommand; command-line flags override
//! file values. Unknown keys are rejected with the offending key named. The
//! merged effective config is re-serialized and embedded into every output
//! for provenance, and re-parsing that echo yields an equal config.

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use shifted_waring::model::{validate_instance, Instance, Precision, RawInstance};
use shifted_waring::Rat;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub s: u32,
    pub k: u32,
    pub theta: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PrecisionSection {
    pub start_bits: u32,
    pub cap_bits: u32,
}

impl Default for PrecisionSection {
    fn default() -> Self {
        PrecisionSection { start_bits: 128, cap_bits: 4096 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub max_candidates: u64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection { max_candidates: 100_000_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct WitnessSection {
    pub m_lo: Option<u64>,
    pub m_hi: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub tau: Option<String>,
    pub eta: Option<String>,
    pub eta_coeff: Option<String>,
    pub radius: Option<String>,
    pub radius_coeff: Option<String>,
    pub algorithm: Option<String>,
    /// Present: profile mode over tau_m for m in [m_lo, m_hi].
    pub m_lo: Option<u64>,
    pub m_hi: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySection {
    pub headroom: String,
    pub c0: String,
}

impl Default for CertifySection {
    fn default() -> Self {
        CertifySection { headroom: "1/2".into(), c0: "1/4".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub m_lo: Option<u64>,
    pub m_hi: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub m: Option<u64>,
    pub grid_points: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub m_samples: Vec<u64>,
    pub alphas: Vec<String>,
    pub betas: Vec<String>,
    pub coeff: String,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            m_samples: vec![20, 40, 60],
            alphas: vec!["0".into(), "1/2".into(), "3/2".into()],
            betas: vec!["-1".into(), "0".into(), "1".into()],
            coeff: "1".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub instance: InstanceSection,
    #[serde(default)]
    pub precision: PrecisionSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub witness: WitnessSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub phase: PhaseSection,
}

impl Config {
    pub fn parse_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| anyhow!("config parse error: {e}"))
    }

    pub fn from_file(path: &str) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {path}"))?;
        Config::parse_toml(&text)
    }

    /// Canonical TOML echo of the effective config.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn instance(&self) -> Result<Instance> {
        Ok(validate_instance(&RawInstance {
            s: self.instance.s,
            k: self.instance.k,
            theta: self.instance.theta.clone(),
        })?)
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.precision.start_bits, self.precision.cap_bits)
    }
}

pub fn parse_rat(text: &str, what: &str) -> Result<Rat> {
    Rat::parse(text).map_err(|e| anyhow!("{what}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[instance]\ns = 2\nk = 2\ntheta = [\"0.3\", \"0.7\"]\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = Config::parse_toml(MINIMAL).unwrap();
        assert_eq!(c.precision.start_bits, 128);
        assert_eq!(c.precision.cap_bits, 4096);
        assert_eq!(c.budget.max_candidates, 100_000_000);
        assert_eq!(c.certify.headroom, "1/2");
        let inst = c.instance().unwrap();
        assert_eq!(inst.s(), 2);
    }

    #[test]
    fn theta_length_mismatch_names_theta() {
        let text = "[instance]\ns = 3\nk = 2\ntheta = [\"0.3\", \"0.7\"]\n";
        let c = Config::parse_toml(text).unwrap();
        let err = c.instance().unwrap_err();
        assert!(err.to_string().contains("theta"));
    }

    #[test]
    fn unknown_key_rejected_with_name() {
        let text = format!("{MINIMAL}[search]\nkhat = 3\n");
        let err = Config::parse_toml(&text).unwrap_err();
        assert!(err.to_string().contains("khat"), "{err}");
    }

    #[test]
    fn effective_config_round_trips() {
        let c = Config::parse_toml(MINIMAL).unwrap();
        let echo = c.to_toml();
        let back = Config::parse_toml(&echo).unwrap();
        assert_eq!(back, c);
    }
}
