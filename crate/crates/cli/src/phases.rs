//! Pipeline phases. Each reads its prerequisites from the output directory,
//! writes its artifacts atomically and records itself in the manifest.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlmine::agent::{
    read_agent_checkpoint, sample_seed_rules, train_agent, write_agent_checkpoint, ValueNetwork,
};
use rlmine::embedding::{read_checkpoint, train_transe_logged, write_checkpoint, EmbeddingModel};
use rlmine::eval::{
    apply_rules, link_prediction, precision_curve, predictive_power, write_predictions, EvalSplit, Prediction,
};
use rlmine::kg::{Fact, KnowledgeGraph, LoadOptions, PredicateId, SymbolTable};
use rlmine::rule::Rule;
use rlmine::search::{mine_all, read_rules, write_rules, MinedRule};
use serde::Serialize;

use crate::config::{phase_seed, RunConfig};
use crate::manifest::{digest_file, digests, write_atomic, Manifest, PhaseRecord};

pub const ENTITIES: &str = "entities.txt";
pub const PREDICATES: &str = "predicates.txt";
pub const TRAIN: &str = "train.tsv";
pub const HELD_OUT: &str = "heldout.tsv";
pub const EMBEDDING: &str = "embedding.bin";
pub const EMBEDDING_LOSS: &str = "embedding_loss.tsv";
pub const SEEDS: &str = "seeds.txt";
pub const AGENT: &str = "agent.bin";
pub const TRAINING_LOG: &str = "training_log.tsv";
pub const RULES_DIR: &str = "rules";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const PREDICTION_RULES: &str = "prediction_rules.tsv";
pub const METRICS_TXT: &str = "metrics.txt";
pub const METRICS_JSON: &str = "metrics.json";
pub const REPORT_DIR: &str = "report";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Load,
    Embed,
    Seeds,
    TrainAgent,
    Mine,
    Predict,
    Evaluate,
    Report,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Load,
        Phase::Embed,
        Phase::Seeds,
        Phase::TrainAgent,
        Phase::Mine,
        Phase::Predict,
        Phase::Evaluate,
        Phase::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Load => "load",
            Phase::Embed => "embed",
            Phase::Seeds => "seeds",
            Phase::TrainAgent => "train-agent",
            Phase::Mine => "mine",
            Phase::Predict => "predict",
            Phase::Evaluate => "evaluate",
            Phase::Report => "report",
        }
    }
}

/// A phase ran before the phase producing one of its inputs.
#[derive(Debug)]
pub struct MissingPrerequisite {
    pub artifact: PathBuf,
    pub phase: Phase,
}

impl fmt::Display for MissingPrerequisite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "missing {}; run `rlmine {}` first",
            self.artifact.display(),
            self.phase.name()
        )
    }
}

impl std::error::Error for MissingPrerequisite {}

pub struct Pipeline {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RuleRecord {
    head: u32,
    head_name: String,
    body: Vec<u32>,
    rule: String,
    supp: usize,
    body_count: usize,
    conf: f64,
    pca_conf: f64,
    hc: f64,
    rho: f64,
    score: f64,
    emit_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
struct Metrics {
    heads: usize,
    held_out_facts: usize,
    rules: usize,
    predictions: usize,
    new_predictions: usize,
    predicted_held_out: usize,
    predicted_held_out_quality: usize,
    mrr: f64,
    hits_at_1: f64,
    hits_at_10: f64,
    queries: usize,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        let out = cfg.paths.output_dir.clone();
        Pipeline { cfg, out }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, phase: Phase) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(MissingPrerequisite { artifact: p, phase }.into())
        }
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            allow_literals: self.cfg.load.allow_literals,
        }
    }

    pub fn run(&self, phase: Phase) -> Result<()> {
        let start = Instant::now();
        log::info!("phase={} step=start", phase.name());
        let mut rec = match phase {
            Phase::Load => self.load()?,
            Phase::Embed => self.embed()?,
            Phase::Seeds => self.seeds()?,
            Phase::TrainAgent => self.train_agent()?,
            Phase::Mine => self.mine()?,
            Phase::Predict => self.predict()?,
            Phase::Evaluate => self.evaluate()?,
            Phase::Report => self.report()?,
        };
        rec.config_fingerprint = self.cfg.fingerprint();
        rec.wall_secs = start.elapsed().as_secs_f64();
        Manifest::record(&self.out, phase.name(), rec)?;
        log::info!("phase={} step=done secs={:.3}", phase.name(), start.elapsed().as_secs_f64());
        Ok(())
    }

    fn record(&self, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PhaseRecord> {
        Ok(PhaseRecord {
            inputs: digests(&self.out, inputs)?,
            outputs: digests(&self.out, outputs)?,
            ..Default::default()
        })
    }

    /// Head predicates named in the config, or every original predicate.
    fn heads(&self, kg: &KnowledgeGraph) -> Result<Vec<PredicateId>> {
        if self.cfg.predicates.is_empty() {
            return Ok(kg.original_predicates());
        }
        let mut heads = Vec::new();
        for name in &self.cfg.predicates {
            let p = kg
                .parse_predicate(name.trim())
                .with_context(|| format!("predicates: unknown predicate `{name}`"))?;
            if p.is_inverse() {
                bail!("predicates: `{name}` is an inverse; heads must be original predicates");
            }
            if !heads.contains(&p) {
                heads.push(p);
            }
        }
        Ok(heads)
    }

    // ---- load

    fn load(&self) -> Result<PhaseRecord> {
        let src = &self.cfg.paths.kg;
        let kg = KnowledgeGraph::load_triples(reader(src)?, &self.load_options())
            .with_context(|| format!("loading {}", src.display()))?;
        if kg.is_empty() {
            bail!("{} contains no facts", src.display());
        }
        let heads = self.heads(&kg)?;
        let split = EvalSplit::new(&kg, &heads, self.cfg.eval.holdout_ratio, self.cfg.phase_seed(phase_seed::SPLIT));
        log::info!(
            "phase=load facts={} entities={} predicates={} held_out={}",
            kg.num_facts(),
            kg.num_entities(),
            kg.num_base_predicates(),
            split.held_out.len()
        );
        let mut buf = Vec::new();
        kg.entities().write_to(&mut buf)?;
        write_atomic(&self.path(ENTITIES), &buf)?;
        buf.clear();
        kg.predicates().write_to(&mut buf)?;
        write_atomic(&self.path(PREDICATES), &buf)?;
        buf.clear();
        split.train.write_triples(&mut buf)?;
        write_atomic(&self.path(TRAIN), &buf)?;
        buf.clear();
        let held = KnowledgeGraph::from_parts(
            kg.entities().clone(),
            kg.predicates().clone(),
            split.held_out.iter().copied(),
        )?;
        held.write_triples(&mut buf)?;
        write_atomic(&self.path(HELD_OUT), &buf)?;

        let mut rec = self.record(
            &[],
            &[self.path(ENTITIES), self.path(PREDICATES), self.path(TRAIN), self.path(HELD_OUT)],
        )?;
        rec.inputs.insert(src.to_string_lossy().into_owned(), digest_file(src)?);
        Ok(rec)
    }

    fn symbols(&self) -> Result<(SymbolTable, SymbolTable)> {
        let ent = SymbolTable::read_from(reader(&self.require(ENTITIES, Phase::Load)?)?)?;
        let pred = SymbolTable::read_from(reader(&self.require(PREDICATES, Phase::Load)?)?)?;
        Ok((ent, pred))
    }

    fn read_graph(&self, name: &str, ent: &SymbolTable, pred: &SymbolTable) -> Result<KnowledgeGraph> {
        let path = self.require(name, Phase::Load)?;
        let kg = KnowledgeGraph::load_triples_with_symbols(reader(&path)?, &self.load_options(), ent.clone(), pred.clone())
            .with_context(|| format!("reading {}", path.display()))?;
        if kg.num_entities() != ent.len() || kg.num_base_predicates() != pred.len() {
            bail!("{} uses symbols missing from {ENTITIES}/{PREDICATES}; rerun `rlmine load`", path.display());
        }
        Ok(kg)
    }

    fn train_graph(&self) -> Result<KnowledgeGraph> {
        let (ent, pred) = self.symbols()?;
        self.read_graph(TRAIN, &ent, &pred)
    }

    fn split(&self) -> Result<EvalSplit> {
        let (ent, pred) = self.symbols()?;
        let train = self.read_graph(TRAIN, &ent, &pred)?;
        let held = self.read_graph(HELD_OUT, &ent, &pred)?;
        let mut held_out: Vec<Fact> = held.facts().to_vec();
        held_out.sort_unstable();
        Ok(EvalSplit {
            train,
            held_out,
            ratio: self.cfg.eval.holdout_ratio,
            seed: self.cfg.phase_seed(phase_seed::SPLIT),
        })
    }

    // ---- embed

    fn embed(&self) -> Result<PhaseRecord> {
        let kg = self.train_graph()?;
        let (model, losses) = train_transe_logged::<f32>(&kg, &self.cfg.embedding)?;
        log::info!(
            "phase=embed epochs={} final_loss={:.6}",
            losses.len(),
            losses.last().copied().unwrap_or(f64::NAN)
        );
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &model, kg.entities(), kg.predicates())?;
        write_atomic(&self.path(EMBEDDING), &buf)?;
        let mut text = String::from("epoch\tloss\n");
        for (i, l) in losses.iter().enumerate() {
            text.push_str(&format!("{i}\t{l:.6}\n"));
        }
        write_atomic(&self.path(EMBEDDING_LOSS), text.as_bytes())?;
        self.record(
            &[self.path(TRAIN)],
            &[self.path(EMBEDDING), self.path(EMBEDDING_LOSS)],
        )
    }

    fn embedding(&self, kg: &KnowledgeGraph) -> Result<EmbeddingModel<f32>> {
        let path = self.require(EMBEDDING, Phase::Embed)?;
        let ck = read_checkpoint::<f32, _>(reader(&path)?)?;
        if ck.entities != *kg.entities() || ck.predicates != *kg.predicates() {
            bail!("{} was trained on a different graph; rerun `rlmine embed`", path.display());
        }
        Ok(ck.model)
    }

    // ---- seeds

    fn seeds(&self) -> Result<PhaseRecord> {
        let kg = self.train_graph()?;
        let model = self.embedding(&kg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.phase_seed(phase_seed::SEEDS));
        let sample = sample_seed_rules(&kg, &model, &self.cfg.seeds, &mut rng)?;
        log::info!(
            "phase=seeds rules={} threshold={:.6} partial={}",
            sample.rules.len(),
            sample.threshold,
            sample.partial
        );
        let mut text = String::new();
        for r in &sample.rules {
            text.push_str(&r.to_text(&kg));
            text.push('\n');
        }
        write_atomic(&self.path(SEEDS), text.as_bytes())?;
        let mut rec = self.record(&[self.path(TRAIN), self.path(EMBEDDING)], &[self.path(SEEDS)])?;
        rec.notes.insert("partial".into(), sample.partial.into());
        Ok(rec)
    }

    fn read_seeds(&self, kg: &KnowledgeGraph) -> Result<Vec<Rule>> {
        let path = self.require(SEEDS, Phase::Seeds)?;
        let mut out = Vec::new();
        for (i, line) in reader(&path)?.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(Rule::parse(&line, kg).with_context(|| format!("{}:{}", path.display(), i + 1))?);
        }
        Ok(out)
    }

    // ---- train-agent

    fn train_agent(&self) -> Result<PhaseRecord> {
        let kg = self.train_graph()?;
        let model = self.embedding(&kg)?;
        let seeds = self.read_seeds(&kg)?;
        let stages = &self.cfg.curriculum.stages;
        let outcome = train_agent::<f32, _>(&kg, &model, &seeds, stages, &self.cfg.agent)?;
        let last = stages.len() - 1;
        log::info!(
            "phase=train-agent episodes={} last_stage_mean_reward={:.6}",
            outcome.log.records.len(),
            outcome.log.tail_mean(last, 1000).unwrap_or(f64::NAN)
        );
        let mut buf = Vec::new();
        write_agent_checkpoint(&mut buf, &outcome.network, kg.predicates(), &self.cfg.agent.fingerprint(stages))?;
        write_atomic(&self.path(AGENT), &buf)?;
        buf.clear();
        outcome.log.write_to(&mut buf)?;
        write_atomic(&self.path(TRAINING_LOG), &buf)?;
        self.record(
            &[self.path(TRAIN), self.path(EMBEDDING), self.path(SEEDS)],
            &[self.path(AGENT), self.path(TRAINING_LOG)],
        )
    }

    fn network(&self, kg: &KnowledgeGraph) -> Result<ValueNetwork<f32>> {
        let path = self.require(AGENT, Phase::TrainAgent)?;
        let ck = read_agent_checkpoint::<f32, _>(reader(&path)?)?;
        if ck.predicates != *kg.predicates() {
            bail!("{} was trained on a different graph; rerun `rlmine train-agent`", path.display());
        }
        Ok(ck.network)
    }

    // ---- mine

    fn rule_file_stem(kg: &KnowledgeGraph, head: PredicateId) -> String {
        format!("{:03}_{}", head.base_index(), sanitize(&kg.predicate_name(head)))
    }

    fn mine(&self) -> Result<PhaseRecord> {
        let kg = self.train_graph()?;
        let model = self.embedding(&kg)?;
        let net = self.network(&kg)?;
        let heads = self.heads(&kg)?;
        let outcomes = mine_all(&kg, &heads, &self.cfg.search, &net, &model, self.cfg.jobs)?;

        let dir = self.path(RULES_DIR);
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        let mut outputs = Vec::new();
        let mut truncated = Vec::new();
        let mut failed = Vec::new();
        for o in &outcomes {
            let stem = Self::rule_file_stem(&kg, o.head);
            let name = kg.predicate_name(o.head);
            log::info!(
                "phase=mine head={name} rules={} truncated={} explored={} evaluated={}",
                o.rules.len(),
                o.truncated,
                o.counters.explored,
                o.counters.evaluated
            );
            if o.truncated {
                truncated.push(serde_json::Value::from(name.clone()));
            }
            if let Some(e) = &o.error {
                failed.push(serde_json::Value::from(format!("{name}: {e}")));
            }
            let mut buf = Vec::new();
            write_rules(&mut buf, &kg, &o.rules)?;
            let rules_path = dir.join(format!("{stem}.rules"));
            write_atomic(&rules_path, &buf)?;
            let mut jsonl = String::new();
            for r in &o.rules {
                let rec = RuleRecord {
                    head: r.rule.head.0,
                    head_name: name.clone(),
                    body: r.rule.body.iter().map(|p| p.0).collect(),
                    rule: r.rule.to_text(&kg),
                    supp: r.stats.supp,
                    body_count: r.stats.body_count,
                    conf: r.stats.conf,
                    pca_conf: r.stats.pca_conf,
                    hc: r.stats.hc,
                    rho: r.rho,
                    score: r.score,
                    emit_secs: r.emitted_secs,
                };
                jsonl.push_str(&serde_json::to_string(&rec)?);
                jsonl.push('\n');
            }
            let side = dir.join(format!("{stem}.jsonl"));
            write_atomic(&side, jsonl.as_bytes())?;
            outputs.push(rules_path);
            outputs.push(side);
        }
        let mut rec = self.record(
            &[self.path(TRAIN), self.path(EMBEDDING), self.path(AGENT)],
            &outputs,
        )?;
        rec.notes.insert("truncated_heads".into(), truncated.into());
        if !failed.is_empty() {
            rec.notes.insert("failed_heads".into(), failed.clone().into());
            Manifest::record(&self.out, Phase::Mine.name(), rec)?;
            bail!("mining failed for {} head(s); see the manifest", failed.len());
        }
        Ok(rec)
    }

    /// Every rule file in id order, concatenated.
    fn read_all_rules(&self, kg: &KnowledgeGraph) -> Result<(Vec<MinedRule>, Vec<PathBuf>)> {
        let dir = self.require(RULES_DIR, Phase::Mine)?;
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "rules"))
            .collect();
        files.sort();
        let mut rules = Vec::new();
        for f in &files {
            rules.extend(read_rules(reader(f)?, kg).with_context(|| format!("reading {}", f.display()))?);
        }
        Ok((rules, files))
    }

    // ---- predict

    fn predict(&self) -> Result<PhaseRecord> {
        let kg = self.train_graph()?;
        let (rules, files) = self.read_all_rules(&kg)?;
        let preds = apply_rules(&kg, &rules);
        log::info!(
            "phase=predict rules={} predictions={} new={}",
            rules.len(),
            preds.len(),
            preds.iter().filter(|p| !p.known).count()
        );
        let mut buf = Vec::new();
        write_predictions(&mut buf, &kg, &preds)?;
        write_atomic(&self.path(PREDICTIONS), &buf)?;
        let mut index = String::from("id\trule\tscore\n");
        for (i, r) in rules.iter().enumerate() {
            index.push_str(&format!("{i}\t{}\t{:.6}\n", r.rule.display(&kg), r.score));
        }
        write_atomic(&self.path(PREDICTION_RULES), index.as_bytes())?;
        let mut inputs = files;
        inputs.push(self.path(TRAIN));
        self.record(&inputs, &[self.path(PREDICTIONS), self.path(PREDICTION_RULES)])
    }

    // ---- evaluate

    fn evaluate(&self) -> Result<PhaseRecord> {
        let split = self.split()?;
        let (rules, files) = self.read_all_rules(&split.train)?;
        let preds = apply_rules(&split.train, &rules);
        let power = predictive_power(&split, &rules);
        let ranking = link_prediction(&split, &rules);
        let heads: HashSet<PredicateId> = split.held_out.iter().map(|f| f.predicate).collect();
        let m = Metrics {
            heads: heads.len(),
            held_out_facts: split.held_out.len(),
            rules: rules.len(),
            predictions: preds.len(),
            new_predictions: preds.iter().filter(|p| !p.known).count(),
            predicted_held_out: power.facts,
            predicted_held_out_quality: power.quality_facts,
            mrr: ranking.mrr,
            hits_at_1: ranking.hits_at_1,
            hits_at_10: ranking.hits_at_10,
            queries: ranking.queries,
        };
        log::info!(
            "phase=evaluate mrr={:.6} hits_at_10={:.6} predicted_held_out={}",
            m.mrr,
            m.hits_at_10,
            m.predicted_held_out
        );
        let text = format!(
            "heads={}\nheld_out_facts={}\nrules={}\npredictions={}\nnew_predictions={}\n\
             predicted_held_out={}\npredicted_held_out_quality={}\nmrr={:.6}\nhits_at_1={:.6}\n\
             hits_at_10={:.6}\nqueries={}\n",
            m.heads,
            m.held_out_facts,
            m.rules,
            m.predictions,
            m.new_predictions,
            m.predicted_held_out,
            m.predicted_held_out_quality,
            m.mrr,
            m.hits_at_1,
            m.hits_at_10,
            m.queries
        );
        write_atomic(&self.path(METRICS_TXT), text.as_bytes())?;
        let mut json = serde_json::to_string_pretty(&m)?;
        json.push('\n');
        write_atomic(&self.path(METRICS_JSON), json.as_bytes())?;
        let mut inputs = files;
        inputs.extend([self.path(TRAIN), self.path(HELD_OUT)]);
        self.record(&inputs, &[self.path(METRICS_TXT), self.path(METRICS_JSON)])
    }

    // ---- report

    fn report(&self) -> Result<PhaseRecord> {
        let split = self.split()?;
        let kg = &split.train;
        let (rules, files) = self.read_all_rules(kg)?;
        let log_path = self.require(TRAINING_LOG, Phase::TrainAgent)?;
        let dir = self.path(REPORT_DIR);

        // mined-rule tables
        let mut by_head: BTreeMap<PredicateId, Vec<&MinedRule>> = BTreeMap::new();
        for r in &rules {
            by_head.entry(r.rule.head).or_default().push(r);
        }
        let mut md = String::from("# Mined rules\n");
        for (head, rs) in &by_head {
            md.push_str(&format!(
                "\n## {} ({} rules)\n\n| # | rule | supp | conf | hc | rho | score |\n|---|---|---|---|---|---|---|\n",
                kg.predicate_name(*head),
                rs.len()
            ));
            for (i, r) in rs.iter().take(self.cfg.eval.report_top).enumerate() {
                md.push_str(&format!(
                    "| {} | `{}` | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                    i + 1,
                    r.rule.display(kg),
                    r.stats.supp,
                    r.stats.conf,
                    r.stats.hc,
                    r.rho,
                    r.score
                ));
            }
        }
        write_atomic(&dir.join("rules.md"), md.as_bytes())?;

        // reward series with a trailing moving average
        const WINDOW: usize = 100;
        let mut rewards = String::from("episode\tstage\tepsilon\treward\treward_avg100\n");
        let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
        let mut sum = 0.0;
        for line in reader(&log_path)?.lines() {
            let line = line?;
            if line.starts_with('#') || line.starts_with("episode") || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 4 {
                bail!("{}: malformed line `{line}`", log_path.display());
            }
            let r: f64 = f[3].parse().with_context(|| format!("{}: bad reward", log_path.display()))?;
            window.push_back(r);
            sum += r;
            if window.len() > WINDOW {
                sum -= window.pop_front().unwrap_or(0.0);
            }
            rewards.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6}\n",
                f[0],
                f[1],
                f[2],
                f[3],
                sum / window.len() as f64
            ));
        }
        write_atomic(&dir.join("rewards.tsv"), rewards.as_bytes())?;

        // precision of new predictions against the held-out facts
        let preds: Vec<Prediction> = apply_rules(kg, &rules);
        let curve = precision_curve(&preds, &split.held_out_set());
        let mut prec = String::from("rank\tcd\thit\tprecision\n");
        let mut hits = 0usize;
        for (i, (cd, hit)) in curve.iter().enumerate() {
            hits += usize::from(*hit);
            prec.push_str(&format!(
                "{}\t{cd:.6}\t{}\t{:.6}\n",
                i + 1,
                u8::from(*hit),
                hits as f64 / (i + 1) as f64
            ));
        }
        write_atomic(&dir.join("precision.tsv"), prec.as_bytes())?;

        let mut inputs = files;
        inputs.extend([self.path(TRAIN), self.path(HELD_OUT), log_path]);
        self.record(
            &inputs,
            &[dir.join("rules.md"), dir.join("rewards.tsv"), dir.join("precision.tsv")],
        )
    }
}
