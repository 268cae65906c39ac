//! TOML run configuration. Every table is optional; see the README for the
//! grammar.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aprank::samplers::Variant;
use serde::{Deserialize, Serialize};

pub const OUT_DIR_ENV: &str = "APRANK_OUT_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
}

/// Either a CSV file with its schema, or inline counts (one row per category).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub items: Option<usize>,
    pub counts: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    pub lambda: Option<f64>,
    pub scale: f64,
    pub weights: Option<Vec<f64>>,
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            lambda: None,
            scale: 1.0,
            weights: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// CSV of `g` rows with `p!` probabilities each; uniform when absent.
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub iterations: u64,
    pub burnin: u64,
    pub thin: u64,
    pub chains: usize,
    pub variant: Option<String>,
    /// Starting central ranks (lexicographic indices); prior draw when absent.
    pub start: Option<Vec<usize>>,
    pub batches: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            iterations: 10_000,
            burnin: 0,
            thin: 1,
            chains: 1,
            variant: None,
            start: None,
            batches: aprank::estimators::DEFAULT_BATCHES,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub central_ranks: Option<Vec<usize>>,
    pub per_category: Option<Vec<u64>>,
    /// Fixed `θ`; drawn from `Dirichlet(a)` when absent.
    pub theta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSection {
    pub lambda0: f64,
    pub inner_iterations: u64,
    pub final_iterations: u64,
    pub max_iters: usize,
    pub plateau_window: usize,
    pub plateau_range: f64,
    pub search_interval: [f64; 2],
}

impl Default for EmSection {
    fn default() -> Self {
        EmSection {
            lambda0: 1.0,
            inner_iterations: 2_000,
            final_iterations: 20_000,
            max_iters: 50,
            plateau_window: 5,
            plateau_range: 0.05,
            search_interval: [0.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub state_cap: usize,
    pub kernel_cap: usize,
    pub mc_draws: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            state_cap: aprank::oracle::DEFAULT_STATE_CAP,
            kernel_cap: aprank::oracle::DEFAULT_KERNEL_CAP,
            mc_draws: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Directory holding `trace_*.csv`; defaults to the output directory.
    pub traces: Option<PathBuf>,
    pub max_lag: usize,
    /// `θ` component (lexicographic index) monitored by ACF and PSRF.
    pub component: usize,
    /// Retained-draw range `[start, end)` copied into the report.
    pub window: Option<[usize; 2]>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            traces: None,
            max_lag: 50,
            component: 1,
            window: None,
        }
    }
}

impl RunConfig {
    /// Parses a config file, or the `[config]` table of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text)?;
        if value.contains_key("manifest") {
            let inner = value
                .get("config")
                .and_then(|v| v.as_table())
                .context("manifest has no [config] table")?;
            return Ok(inner.clone().try_into()?);
        }
        Ok(value.try_into()?)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.data.path);
        fix(&mut self.data.schema);
        fix(&mut self.prior.path);
        fix(&mut self.diagnose.traces);
        fix(&mut self.out);
    }

    pub fn variant(&self, default: Variant) -> Result<Variant> {
        match &self.chain.variant {
            Some(v) => Ok(v.parse()?),
            None => Ok(default),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.chain;
        if c.iterations == 0 || c.thin == 0 || c.chains == 0 {
            bail!("chain: iterations, thin and chains must be positive");
        }
        if c.burnin >= c.iterations {
            bail!("chain: burnin {} must be below iterations {}", c.burnin, c.iterations);
        }
        if c.batches < 2 {
            bail!("chain: batches must be at least 2");
        }
        if let Some(v) = &c.variant {
            v.parse::<Variant>()?;
        }
        let h = &self.hyper;
        if h.lambda.is_some() && h.weights.is_some() {
            bail!("hyper: give lambda or weights, not both");
        }
        if let Some(l) = h.lambda {
            if !l.is_finite() || l < 0.0 {
                bail!("hyper: lambda must be finite and nonnegative");
            }
        }
        if !(h.scale.is_finite() && h.scale > 0.0) {
            bail!("hyper: scale must be positive");
        }
        let d = &self.data;
        if d.path.is_some() && d.counts.is_some() {
            bail!("data: give path or counts, not both");
        }
        if d.counts.is_some() && d.items.is_none() {
            bail!("data: inline counts need items");
        }
        let e = &self.em;
        if !(e.search_interval[0] >= 0.0 && e.search_interval[1] > e.search_interval[0]) {
            bail!("em: search_interval must satisfy 0 <= lo < hi");
        }
        if e.inner_iterations == 0 || e.final_iterations == 0 || e.max_iters == 0 {
            bail!("em: iteration counts must be positive");
        }
        if self.diagnose.component == 0 {
            bail!("diagnose: component is a 1-based index");
        }
        if let Some([a, b]) = self.diagnose.window {
            if a >= b {
                bail!("diagnose: window start must be below its end");
            }
        }
        Ok(())
    }
}
