use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wildcard_core::scenarios::{LeakageScenario, RbScenario, TotalErrorScenario};
use wildcard_core::stats::DEFAULT_ALPHA;
use wildcard_core::wildcard::{Objective, WildcardFamily};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    RbDephasing,
    TotalError,
    GstLeakage,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RbDephasing => "rb-dephasing",
            Self::TotalError => "total-error",
            Self::GstLeakage => "gst-leakage",
            Self::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// One rate per gate label.
    #[default]
    PerGate,
    /// One rate shared by every gate label.
    Tied,
}

/// Analysis of an externally supplied dataset and model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub dataset: PathBuf,
    pub model: PathBuf,
    #[serde(default)]
    pub family: FamilyKind,
    #[serde(default = "yes")]
    pub spam: bool,
}

fn yes() -> bool {
    true
}

/// Contents of a `--config` TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Shots per circuit (N); overrides the scenario preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// RB sequences per depth (K).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_depth: Option<usize>,
    /// RB depths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<usize>>,
    /// Longest germ power in GST designs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<RbScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_error: Option<TotalErrorScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gst_leakage: Option<LeakageScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_objective() -> String {
    "l1".into()
}

/// A scenario with every override applied for one seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum Resolved {
    RbDephasing(RbScenario),
    TotalError(TotalErrorScenario),
    GstLeakage(LeakageScenario),
    Custom(CustomConfig),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.seeds.is_empty() {
            return bad("`seeds` must not be empty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("`alpha` must lie in (0, 1), got {}", self.alpha));
        }
        self.objective
            .parse::<Objective>()
            .map_err(|e| CliError::Usage(format!("invalid objective: {e}")))?;
        if self.shots == Some(0) {
            return bad("`shots` must be positive".into());
        }
        if self.per_depth == Some(0) {
            return bad("`per_depth` must be positive".into());
        }
        if let Some(d) = &self.depths {
            if d.is_empty() || d.contains(&0) {
                return bad("`depths` must be a nonempty list of positive depths".into());
            }
        }
        if self.max_depth == Some(0) {
            return bad("`max_depth` must be positive".into());
        }
        let present = [
            ("rb", self.rb.is_some(), ScenarioKind::RbDephasing),
            ("total_error", self.total_error.is_some(), ScenarioKind::TotalError),
            ("gst_leakage", self.gst_leakage.is_some(), ScenarioKind::GstLeakage),
            ("custom", self.custom.is_some(), ScenarioKind::Custom),
        ];
        for (table, set, kind) in present {
            if set && kind != self.scenario {
                return bad(format!("table [{table}] does not apply to scenario `{}`", self.scenario.name()));
            }
        }
        if self.scenario == ScenarioKind::Custom && self.custom.is_none() {
            return bad("scenario `custom` needs a [custom] table with `dataset` and `model`".into());
        }
        Ok(())
    }

    /// Scenario for `seed` with the top-level overrides applied.
    pub fn resolve(&self, seed: u64) -> Resolved {
        match self.scenario {
            ScenarioKind::RbDephasing => {
                let mut s = self.rb.clone().unwrap_or_default();
                s.seed = seed;
                s.alpha = self.alpha;
                if let Some(n) = self.shots {
                    s.shots = n;
                }
                if let Some(k) = self.per_depth {
                    s.per_depth = k;
                }
                if let Some(d) = &self.depths {
                    s.depths = d.clone();
                }
                Resolved::RbDephasing(s)
            }
            ScenarioKind::TotalError => {
                let mut s = self.total_error.clone().unwrap_or_default();
                s.seed = seed;
                s.alpha = self.alpha;
                if let Some(n) = self.shots {
                    s.shots = n;
                }
                if let Some(m) = self.max_depth {
                    s.max_depth = m;
                }
                Resolved::TotalError(s)
            }
            ScenarioKind::GstLeakage => {
                let mut s = self.gst_leakage.clone().unwrap_or_default();
                s.seed = seed;
                s.alpha = self.alpha;
                if let Some(n) = self.shots {
                    s.shots = n;
                }
                if let Some(m) = self.max_depth {
                    s.max_depth = m;
                }
                Resolved::GstLeakage(s)
            }
            ScenarioKind::Custom => Resolved::Custom(self.custom.clone().expect("validated")),
        }
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        toml::to_string(&canonical).expect("config serializes")
    }
}

impl Resolved {
    pub fn family(&self, gate_labels: &[String]) -> Result<WildcardFamily, CliError> {
        Ok(match self {
            Self::RbDephasing(s) => s.family()?,
            Self::TotalError(s) => s.family()?,
            Self::GstLeakage(s) => s.family()?,
            Self::Custom(c) => match c.family {
                FamilyKind::PerGate => WildcardFamily::per_gate(gate_labels, c.spam)?,
                FamilyKind::Tied if c.spam => WildcardFamily::tied(gate_labels)?,
                FamilyKind::Tied => {
                    let assignment = gate_labels.iter().map(|l| (l.clone(), 0)).collect();
                    WildcardFamily::new(vec!["gate".into()], assignment, None)?
                }
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_presets() {
        let cfg = RunConfig::parse("scenario = \"rb-dephasing\"").unwrap();
        assert_eq!(cfg.seeds, vec![1]);
        match cfg.resolve(7) {
            Resolved::RbDephasing(s) => {
                assert_eq!(s.seed, 7);
                assert_eq!(s, RbScenario { seed: 7, ..RbScenario::default() });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_reach_the_scenario() {
        let cfg = RunConfig::parse(
            "scenario = \"rb-dephasing\"\nshots = 500\nper_depth = 3\ndepths = [1, 4]\n[rb]\ndephasing = 0.05\n",
        )
        .unwrap();
        let Resolved::RbDephasing(s) = cfg.resolve(1) else { panic!() };
        assert_eq!((s.shots, s.per_depth, s.depths.clone(), s.dephasing), (500, 3, vec![1, 4], 0.05));
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        for text in [
            "scenario = \"nope\"",
            "scenario = \"rb-dephasing\"\nalpha = 1.5",
            "scenario = \"rb-dephasing\"\nobjective = \"weighted:\"",
            "scenario = \"rb-dephasing\"\n[gst_leakage]\nshots = 5",
            "scenario = \"custom\"",
            "scenario = \"rb-dephasing\"\nunknown = 1",
            "scenario = \"rb-dephasing\"\nseeds = []",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Usage(_))), "{text}");
        }
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::parse("scenario = \"total-error\"\nout = \"a\"").unwrap();
        let b = RunConfig::parse("scenario = \"total-error\"\nout = \"b\"").unwrap();
        let c = RunConfig::parse("scenario = \"total-error\"\nshots = 10").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn canonical_toml_round_trips() {
        let cfg = RunConfig::parse("scenario = \"gst-leakage\"\nseeds = [3, 4]\n[gst_leakage]\nmax_depth = 16\n").unwrap();
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }
}
