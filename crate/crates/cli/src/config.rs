//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "lorenz-st-iqtransformer"
//! regime = "ST"                  # or "LT"
//! output_dir = "runs/lorenz-st"  # optional, relative to this file
//!
//! [dataset]
//! lookback = 5
//! horizon = 1
//! split = 0.75                   # optional
//! target = "curtailment_setpoint" # optional, forecast one channel
//! normalization = "minmax01"     # or "standardize"
//!
//! [dataset.source]
//! kind = "lorenz"                # "surrogate" or "csv" (with `path`, optional `schema`)
//! n_points = 1000
//! dt = 0.01
//!
//! [model]
//! kind = "iqtransformer"
//! blocks = 2
//! d_model = 9
//! d_ff = 12
//! n_qubits = 3
//! p_enc = 1
//! p_vqc = 3
//!
//! [training]
//! epochs = 50
//! batch_size = 128
//! lr = 5e-4                      # optional
//! seeds = [0, 1, 2]              # optional, default 0..=9
//! grad_method = "adjoint"        # or "parameter_shift"
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qforecast::data::{DatasetSpec, Source};
use qforecast::models::Architecture;
use qforecast::train::{ExperimentSpec, Regime, TrainingSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: String,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub model: Architecture,
    pub training: TrainingSpec,
}

impl ConfigFile {
    /// Parses and validates, resolving relative paths against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ConfigFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Source::Csv { path: p, .. } = &mut cfg.dataset.source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.spec().validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            name: self.name.clone(),
            regime: self.regime,
            dataset: self.dataset.clone(),
            model: self.model.clone(),
            training: self.training.clone(),
        }
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LORENZ: &str = r#"
name = "t"
regime = "ST"
[dataset]
lookback = 5
horizon = 1
[dataset.source]
kind = "lorenz"
[model]
kind = "itransformer"
blocks = 2
d_model = 9
d_ff = 12
[training]
epochs = 1
batch_size = 8
"#;

    #[test]
    fn parses_with_defaults() {
        let c: ConfigFile = toml::from_str(LORENZ).unwrap();
        assert_eq!(c.training.seeds, (0..10).collect::<Vec<u64>>());
        assert_eq!(c.dataset.split, 0.75);
        match c.dataset.source {
            Source::Lorenz(p) => assert_eq!(p.n_points, 1000),
            _ => panic!(),
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        for (from, to) in [
            ("epochs = 1", "epochs = 1\nmomentum = 0.9"),
            ("d_ff = 12", "d_ff = 12\nheads = 2"),
            ("kind = \"lorenz\"", "kind = \"lorenz\"\nrho2 = 1"),
            ("horizon = 1", "horizon = 1\nstride = 2"),
        ] {
            let text = LORENZ.replace(from, to);
            assert!(toml::from_str::<ConfigFile>(&text).is_err(), "accepted {to}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let c: ConfigFile = toml::from_str(LORENZ).unwrap();
        let again: ConfigFile = toml::from_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn shipped_configs_load_and_build() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = ConfigFile::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            let (channels, target) = match cfg.dataset.source {
                Source::Lorenz(_) => (3, None),
                _ => (7, Some(6)),
            };
            let mc = cfg.spec().model_config(channels, cfg.dataset.target.as_ref().and(target));
            qforecast::models::build_model(&mc, 0).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(cfg.training.epochs >= 10);
            n += 1;
        }
        assert_eq!(n, 18);
    }
}
