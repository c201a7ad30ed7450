//! Run configuration file (TOML).
//!
//! Every table is optional and falls back to its defaults. Unknown keys are
//! rejected so a typo never silently selects a default.
//!
//! ```toml
//! networks = ["mlp_emg_b", "cnn_aps"]
//! out_dir = "runs/demo"
//!
//! [data]
//! n_per_class_session = 40
//! seed = 7
//!
//! [train]
//! epochs = 20
//!
//! [sweep]
//! sigmas = [0, 100, 200, 300, 400, 500]
//! seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
//!
//! [sweep.device]
//! n_states = 256
//!
//! [fxp.weights]
//! word_length = 16
//! fraction_length = 13
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xbar_core::bench::{BenchNetwork, SweepConfig, SyntheticConfig};
use xbar_core::cost::CostParams;
use xbar_core::fxp::FormatTable;
use xbar_core::nn::TrainConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub networks: Vec<BenchNetwork>,
    pub out_dir: Option<PathBuf>,
    pub data: SyntheticConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub cost: CostParams,
    pub fxp: FormatTable,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            networks: BenchNetwork::ALL.to_vec(),
            out_dir: None,
            data: SyntheticConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
            cost: CostParams::default(),
            fxp: FormatTable::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.networks.is_empty() {
            return Err(CliError::Config("`networks` is empty".into()));
        }
        let mut seen = self.networks.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.networks.len() {
            return Err(CliError::Config("`networks` lists a network twice".into()));
        }
        let sections: [(&str, xbar_core::Result<()>); 5] = [
            ("data", self.data.validate()),
            ("train", self.train.validate()),
            ("sweep", self.sweep.validate()),
            ("cost", self.cost.validate()),
            ("fxp", self.fxp.validate()),
        ];
        for (name, r) in sections {
            r.map_err(|e| CliError::Config(format!("[{name}] {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn module_doc_example_parses() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = RunConfig::parse(&example).unwrap();
        assert_eq!(cfg.networks, vec![BenchNetwork::MlpEmgB, BenchNetwork::CnnAps]);
        assert_eq!(cfg.sweep.seeds.len(), 10);
    }

    #[test]
    fn rejections() {
        for bad in [
            "netwrks = []",
            "networks = []",
            "networks = [\"mlp_emg_a\", \"mlp_emg_a\"]",
            "networks = [\"resnet\"]",
            "[cost]\np_adc = -1.0",
            "[fxp.weights]\nword_length = 8\nfraction_length = 8",
            "[sweep]\nsigmas = [-5]",
            "[sweep.device]\nr_on_mean = 3000",
            "[train]\nepochs = 0",
            "[data]\nbogus = 1",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(CliError::Config(_))), "{bad}");
        }
    }
}
