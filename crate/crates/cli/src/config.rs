//! Run configuration: one TOML file, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rlmine::agent::{AgentTrainConfig, CurriculumStage, SeedConfig};
use rlmine::embedding::EmbedTrainConfig;
use rlmine::search::SearchConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Overrides `paths.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "RLMINE_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Every phase seed is derived from this one.
    pub seed: u64,
    /// Head predicates to hold out, mine and evaluate; empty means all.
    pub predicates: Vec<String>,
    /// Heads mined concurrently.
    pub jobs: usize,
    pub paths: Paths,
    pub load: LoadSection,
    pub embedding: EmbedTrainConfig,
    pub seeds: SeedConfig,
    pub agent: AgentTrainConfig,
    pub curriculum: CurriculumSection,
    pub search: SearchConfig,
    pub eval: EvalSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Tab-separated triples. Relative paths resolve against the config file.
    pub kg: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadSection {
    pub allow_literals: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumSection {
    pub stages: Vec<CurriculumStage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Fraction of each head predicate's facts held out before training.
    pub holdout_ratio: f64,
    /// Rules per head listed in the report.
    pub report_top: usize,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            kg: PathBuf::from("data/toy.tsv"),
            output_dir: PathBuf::from("rlmine-out"),
        }
    }
}

impl Default for CurriculumSection {
    fn default() -> Self {
        CurriculumSection {
            stages: CurriculumStage::scaled([300, 300, 300, 1200]),
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            holdout_ratio: 0.3,
            report_top: 20,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            predicates: Vec::new(),
            jobs: 1,
            paths: Paths::default(),
            load: LoadSection::default(),
            embedding: EmbedTrainConfig {
                dim: 32,
                negatives: 8,
                epochs: 100,
                eta: 2.0,
                ..EmbedTrainConfig::default()
            },
            seeds: SeedConfig {
                count: 200,
                pool: 5000,
                ..SeedConfig::default()
            },
            agent: AgentTrainConfig {
                token_dim: 16,
                hidden: 16,
                batch_size: 32,
                learning_rate: 0.003,
                ..AgentTrainConfig::default()
            },
            curriculum: CurriculumSection::default(),
            search: SearchConfig {
                length: 4,
                ..SearchConfig::default()
            },
            eval: EvalSection::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub time_limit: Option<f64>,
    pub predicates: Option<Vec<String>>,
    pub length: Option<usize>,
}

/// SplitMix64 step, used to give every phase its own stream. Kept to 63
/// bits because TOML integers are signed.
fn derive_seed(seed: u64, phase: u64) -> u64 {
    let mut z = seed.wrapping_add(phase.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) >> 1
}

pub mod phase_seed {
    pub const SPLIT: u64 = 1;
    pub const EMBED: u64 = 2;
    pub const SEEDS: u64 = 3;
    pub const AGENT: u64 = 4;
}

impl RunConfig {
    /// Reads `path`, or the defaults when `None`. Relative paths inside the
    /// file are resolved against its directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.paths.kg.is_relative() {
            cfg.paths.kg = base.join(&cfg.paths.kg);
        }
        if cfg.paths.output_dir.is_relative() {
            cfg.paths.output_dir = base.join(&cfg.paths.output_dir);
        }
        Ok(cfg)
    }

    /// Applies flags and the output-directory variable, then derives the
    /// per-phase seeds.
    pub fn resolve(mut self, o: &Overrides, env_output: Option<PathBuf>) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
        if let Some(t) = o.time_limit {
            self.search.time_limit_secs = Some(t);
        }
        if let Some(p) = &o.predicates {
            self.predicates = p.clone();
        }
        if let Some(l) = o.length {
            self.search.length = l;
        }
        if let Some(dir) = env_output {
            self.paths.output_dir = dir;
        }
        self.embedding.seed = derive_seed(self.seed, phase_seed::EMBED);
        self.agent.seed = derive_seed(self.seed, phase_seed::AGENT);
        self
    }

    pub fn phase_seed(&self, phase: u64) -> u64 {
        derive_seed(self.seed, phase)
    }

    /// Checks every section up front so that no phase fails on a bad value
    /// after hours of work.
    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            bail!("jobs: must be at least 1");
        }
        self.embedding.validate().context("embedding")?;
        self.seeds.validate().context("seeds")?;
        self.agent.validate().context("agent")?;
        if self.curriculum.stages.is_empty() {
            bail!("curriculum.stages: at least one stage is required");
        }
        for (i, s) in self.curriculum.stages.iter().enumerate() {
            s.validate().with_context(|| format!("curriculum.stages[{i}]"))?;
        }
        self.search.validate().context("search")?;
        if !(0.0..1.0).contains(&self.eval.holdout_ratio) {
            bail!("eval.holdout_ratio: must be in [0, 1)");
        }
        if self.predicates.iter().any(|p| p.trim().is_empty()) {
            bail!("predicates: names must not be empty");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration, in hex.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// The full-scale settings for comparison, as commented TOML.
pub fn paper_reference() -> String {
    let cfg = RunConfig {
        embedding: EmbedTrainConfig::paper_scale(),
        seeds: SeedConfig::default(),
        agent: AgentTrainConfig::paper_scale(),
        curriculum: CurriculumSection {
            stages: CurriculumStage::paper_stages(),
        },
        search: SearchConfig::default(),
        ..RunConfig::default()
    };
    let mut out = String::from("# Full-scale reference values (not in effect):\n");
    for line in cfg.to_toml().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}
