//! Evaluation runs, reports and their renderings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bleu::{corpus_bleu, BleuResult, Smoothing};
use crate::corpus::{load_goals, load_predictions, parse_predictions, PredictionFormat, PredictionSet};
use crate::db::load_database;
use crate::diversity::{diversity, DiversityReport};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::normalize::NormalizedUtterance;
use crate::ontology::{SlotOntology, BUNDLED_ONTOLOGY};
use crate::success::{
    annotate_active_domains, evaluate_dialogue, normalize_dialogue, rates_from_outcomes, DialogueOutcome, DomainSource,
    MatchPolicy,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_NAME: &str = "mwzeval";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub bleu: bool,
    pub success: bool,
    pub richness: bool,
}

impl Metrics {
    pub fn any(&self) -> bool {
        self.bleu || self.success || self.richness
    }

    fn names(&self) -> Vec<String> {
        [
            ("bleu", self.bleu),
            ("success", self.success),
            ("richness", self.richness),
        ]
        .into_iter()
        .filter(|(_, on)| *on)
        .map(|(n, _)| n.to_string())
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub metrics: Metrics,
    pub predictions: Vec<PathBuf>,
    pub prediction_format: PredictionFormat,
    pub goals: PathBuf,
    pub db: PathBuf,
    /// Ground-truth turns in prediction format. Needed for BLEU; also the
    /// source of annotated domains under [`DomainSource::GroundTruth`].
    pub references: Option<PathBuf>,
    pub style: String,
    pub reference_style: String,
    pub policy: MatchPolicy,
    pub smoothing: Smoothing,
    pub ontology: Option<PathBuf>,
}

impl EvalConfig {
    /// A config reading `goals.json`, `db/` and
    /// `references/<reference_style>.json` from `data_dir`.
    pub fn from_data_dir(data_dir: &Path, predictions: Vec<PathBuf>, reference_style: &str) -> Self {
        let references = data_dir.join("references").join(format!("{reference_style}.json"));
        EvalConfig {
            metrics: Metrics::default(),
            predictions,
            prediction_format: PredictionFormat::Native,
            goals: data_dir.join("goals.json"),
            db: data_dir.join("db"),
            references: references.is_file().then_some(references),
            style: "mwz22".into(),
            reference_style: reference_style.into(),
            policy: MatchPolicy::standard(),
            smoothing: Smoothing::Exp,
            ontology: None,
        }
    }

    /// Checks metric selection and that every input path exists.
    pub fn validate(&self) -> Result<()> {
        if !self.metrics.any() {
            return Err(Error::Validation("no metric enabled".into()));
        }
        if self.predictions.is_empty() {
            return Err(Error::Validation("no prediction files given".into()));
        }
        if self.metrics.bleu && self.references.is_none() {
            return Err(Error::Validation("BLEU needs a reference file".into()));
        }
        if !(0.0..=100.0).contains(&self.policy.threshold) {
            return Err(Error::Validation(format!(
                "threshold {} outside [0, 100]",
                self.policy.threshold
            )));
        }
        let files = self
            .predictions
            .iter()
            .chain([&self.goals])
            .chain(self.references.iter())
            .chain(self.ontology.iter());
        for path in files {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        if !self.db.is_dir() {
            return Err(Error::io(
                &self.db,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitInfo {
    pub name: String,
    pub version: String,
}

/// The settings that must agree for two reports to be comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub metrics: Vec<String>,
    pub style: String,
    pub reference_style: String,
    pub prediction_format: PredictionFormat,
    pub policy: MatchPolicy,
    pub smoothing: Smoothing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessBlock {
    pub inform: f64,
    pub success: f64,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemReport {
    pub name: String,
    pub predictions_digest: String,
    pub dialogues: usize,
    pub turns: usize,
    pub missing_turns: usize,
    pub flagged_states: usize,
    pub coverage: f64,
    pub coverage_incomplete: bool,
    pub bleu: Option<BleuResult>,
    pub success: Option<SuccessBlock>,
    pub richness: Option<DiversityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub schema_version: u32,
    pub toolkit: ToolkitInfo,
    pub config: ConfigEcho,
    /// SHA-256 of shared inputs, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub systems: Vec<SystemReport>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Parses and schema-checks a report.
    pub fn from_json(text: &str, location: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(text).map_err(|e| Error::json(location, &e))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::format(
                location,
                format!("unsupported schema_version {}", report.schema_version),
            ));
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }
}

/// A report plus the per-dialogue outcomes behind its Success block.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub details: BTreeMap<String, Vec<DialogueOutcome>>,
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads every input once and computes the enabled metrics per system.
pub fn run(config: &EvalConfig) -> Result<Evaluation> {
    config.validate()?;
    let mut inputs = BTreeMap::new();
    let ontology = match &config.ontology {
        Some(path) => {
            inputs.insert("ontology".to_string(), digest_file(path)?);
            SlotOntology::load(path)?
        }
        None => {
            inputs.insert("ontology".to_string(), hex::encode(Sha256::digest(BUNDLED_ONTOLOGY)));
            SlotOntology::bundled().clone()
        }
    };
    for style in [&config.style, &config.reference_style] {
        if !ontology.has_style(style) {
            return Err(Error::Validation(format!("unknown style `{style}`")));
        }
    }

    inputs.insert("goals".into(), digest_file(&config.goals)?);
    let goals = load_goals(&config.goals, &ontology)?;
    let db = load_database(&config.db)?;
    for domain in Domain::DATABASED {
        for name in [format!("{domain}.json"), format!("{domain}_db.json")] {
            let path = config.db.join(&name);
            if path.is_file() {
                inputs.insert(format!("db/{name}"), digest_file(&path)?);
                break;
            }
        }
    }
    let references = match &config.references {
        Some(path) => {
            inputs.insert("references".into(), digest_file(path)?);
            let mut refs = parse_predictions(
                &read(path)?,
                &path.display().to_string(),
                PredictionFormat::Native,
                "references",
            )?;
            for dialogue in refs.dialogues.values_mut() {
                if dialogue.turns.iter().all(|t| t.active_domain.is_none()) {
                    annotate_active_domains(dialogue);
                }
            }
            Some(refs)
        }
        None => None,
    };

    let mut systems = Vec::new();
    let mut details = BTreeMap::new();
    for path in &config.predictions {
        let predictions = load_predictions(path, config.prediction_format)?;
        let (system, outcomes) = evaluate_system(config, &predictions, &goals, &db, &ontology, references.as_ref())?;
        let mut system = system;
        system.predictions_digest = digest_file(path)?;
        if let Some(outcomes) = outcomes {
            details.insert(system.name.clone(), outcomes);
        }
        systems.push(system);
    }
    let names: std::collections::BTreeSet<&str> = systems.iter().map(|s| s.name.as_str()).collect();
    if names.len() != systems.len() {
        return Err(Error::Validation("two prediction files share a system name".into()));
    }

    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        toolkit: ToolkitInfo {
            name: TOOLKIT_NAME.into(),
            version: TOOLKIT_VERSION.into(),
        },
        config: ConfigEcho {
            metrics: config.metrics.names(),
            style: config.style.clone(),
            reference_style: config.reference_style.clone(),
            prediction_format: config.prediction_format,
            policy: config.policy,
            smoothing: config.smoothing,
        },
        inputs,
        systems,
        warnings: db.warnings.clone(),
    };
    Ok(Evaluation { report, details })
}

fn evaluate_system(
    config: &EvalConfig,
    predictions: &PredictionSet,
    goals: &crate::corpus::Goals,
    db: &crate::db::Database,
    ontology: &SlotOntology,
    references: Option<&PredictionSet>,
) -> Result<(SystemReport, Option<Vec<DialogueOutcome>>)> {
    let mut normalized: BTreeMap<&str, Vec<NormalizedUtterance>> = BTreeMap::new();
    for (id, dialogue) in &predictions.dialogues {
        if !goals.contains_key(id) {
            return Err(Error::Validation(format!(
                "{}: no goal for dialogue {id}",
                predictions.system_name
            )));
        }
        normalized.insert(id, normalize_dialogue(dialogue, ontology, &config.style)?);
    }
    let turns: usize = predictions.dialogues.values().map(|d| d.turns.len()).sum();
    let all_turns = || predictions.dialogues.values().flat_map(|d| &d.turns);
    let coverage = predictions.coverage(goals.keys());

    let reference_of = |id: &str| -> Result<&crate::corpus::Dialogue> {
        let refs = references.ok_or_else(|| Error::Validation("no reference file".into()))?;
        let dialogue = refs
            .dialogues
            .get(id)
            .ok_or_else(|| Error::Validation(format!("dialogue {id} missing from references")))?;
        if dialogue.turns.len() != predictions.dialogues[id].turns.len() {
            return Err(Error::Validation(format!(
                "dialogue {id}: {} predicted turns but {} reference turns",
                predictions.dialogues[id].turns.len(),
                dialogue.turns.len()
            )));
        }
        Ok(dialogue)
    };

    let bleu = if config.metrics.bleu {
        let mut hyps = Vec::with_capacity(turns);
        let mut refs = Vec::with_capacity(turns);
        for (id, responses) in &normalized {
            let reference = reference_of(id)?;
            for (hyp, ref_response) in
                responses
                    .iter()
                    .zip(normalize_dialogue(reference, ontology, &config.reference_style)?)
            {
                hyps.push(hyp.text.clone());
                refs.push(ref_response.text);
            }
        }
        Some(corpus_bleu(&hyps, &refs, config.smoothing).map_err(|e| e.at(&predictions.system_name))?)
    } else {
        None
    };

    let mut outcomes = None;
    let success = if config.metrics.success {
        let mut list = Vec::with_capacity(normalized.len());
        for (id, responses) in &normalized {
            let mut dialogue = predictions.dialogues[*id].clone();
            if config.policy.domain_source == DomainSource::GroundTruth {
                match references {
                    Some(_) => {
                        for (turn, gt) in dialogue.turns.iter_mut().zip(&reference_of(id)?.turns) {
                            turn.active_domain = gt.active_domain;
                        }
                    }
                    None => annotate_active_domains(&mut dialogue),
                }
            }
            list.push(evaluate_dialogue(
                &dialogue,
                responses,
                &goals[*id],
                db,
                &config.policy,
            )?);
        }
        let rates = rates_from_outcomes(list, coverage);
        outcomes = Some(rates.outcomes);
        Some(SuccessBlock {
            inform: rates.inform,
            success: rates.success,
            evaluated: rates.evaluated,
        })
    } else {
        None
    };

    let richness = if config.metrics.richness {
        let all: Vec<NormalizedUtterance> = normalized.values().flatten().cloned().collect();
        Some(diversity(&all).map_err(|e| e.at(&predictions.system_name))?)
    } else {
        None
    };

    Ok((
        SystemReport {
            name: predictions.system_name.clone(),
            predictions_digest: String::new(),
            dialogues: predictions.dialogues.len(),
            turns,
            missing_turns: all_turns().filter(|t| t.is_missing()).count(),
            flagged_states: all_turns().filter(|t| t.state_flagged).count(),
            coverage,
            coverage_incomplete: coverage < 1.0,
            bleu,
            success,
            richness,
        },
        outcomes,
    ))
}

const METRIC_COLUMNS: [&str; 9] = [
    "bleu",
    "inform",
    "success",
    "unique_tokens",
    "unique_trigrams",
    "token_entropy",
    "conditional_bigram_entropy",
    "msttr_50",
    "avg_turn_length",
];

/// Metric values in [`METRIC_COLUMNS`] order; `None` when a system lacks the block.
fn metric_values(s: &SystemReport) -> Vec<(&'static str, Option<f64>)> {
    let r = s.richness.as_ref();
    vec![
        ("bleu", s.bleu.as_ref().map(|b| b.score)),
        ("inform", s.success.as_ref().map(|b| b.inform)),
        ("success", s.success.as_ref().map(|b| b.success)),
        ("unique_tokens", r.map(|r| r.unique_tokens as f64)),
        ("unique_trigrams", r.map(|r| r.unique_trigrams as f64)),
        ("token_entropy", r.map(|r| r.token_entropy)),
        ("conditional_bigram_entropy", r.map(|r| r.conditional_bigram_entropy)),
        ("msttr_50", r.and_then(|r| r.msttr_50)),
        ("avg_turn_length", r.map(|r| r.avg_turn_length)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn fmt_value(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |v| format!("{v:.digits$}"))
}

/// Renders a report. JSON is canonical; CSV and the text table are views.
pub fn render(report: &EvalReport, format: OutputFormat) -> String {
    if format == OutputFormat::Json {
        return report.to_json();
    }
    let used: Vec<&str> = METRIC_COLUMNS
        .into_iter()
        .filter(|c| {
            report
                .systems
                .iter()
                .any(|s| metric_values(s).iter().any(|(n, v)| n == c && v.is_some()))
        })
        .collect();
    let mut header = vec!["system".to_string(), "coverage".to_string()];
    header.extend(used.iter().map(|c| c.to_string()));
    let rows: Vec<Vec<String>> = report
        .systems
        .iter()
        .map(|s| {
            let values = metric_values(s);
            let mut row = vec![s.name.clone()];
            let coverage = format!("{:.4}", s.coverage);
            row.push(if s.coverage_incomplete && format == OutputFormat::Table {
                format!("{coverage}*")
            } else {
                coverage
            });
            for c in &used {
                let v = values.iter().find(|(n, _)| n == c).and_then(|(_, v)| *v);
                let digits = if c.starts_with("unique") { 0 } else { 2 };
                row.push(fmt_value(v, digits));
            }
            row
        })
        .collect();
    match format {
        OutputFormat::Csv => {
            header.push("coverage_incomplete".into());
            let rows: Vec<Vec<String>> = rows
                .into_iter()
                .zip(&report.systems)
                .map(|(mut row, s)| {
                    row.push(s.coverage_incomplete.to_string());
                    row
                })
                .collect();
            csv_text(&header, &rows)
        }
        _ => {
            let mut out = aligned(&header, &rows);
            if report.systems.iter().any(|s| s.coverage_incomplete) {
                out.push_str("* predictions cover only part of the benchmark\n");
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub system: String,
    pub value: f64,
}

/// Systems ordered best first for each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub metrics: BTreeMap<String, Vec<RankedEntry>>,
}

fn differing_fields(a: &Value, b: &Value, prefix: &str, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                differing_fields(
                    x.get(k).unwrap_or(&Value::Null),
                    y.get(k).unwrap_or(&Value::Null),
                    &path,
                    out,
                );
            }
        }
        _ if a != b => out.push(prefix.to_string()),
        _ => {}
    }
}

/// Ranks all systems of `reports` per metric, higher first, ties by name.
/// Reports must share their config and shared-input digests.
pub fn compare(reports: &[EvalReport]) -> Result<Ranking> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Empty("no reports to compare".into()))?;
    let shared = |r: &EvalReport| serde_json::json!({ "config": r.config, "inputs": r.inputs });
    let base = shared(first);
    let mut differing = Vec::new();
    for report in &reports[1..] {
        differing_fields(&base, &shared(report), "", &mut differing);
    }
    if !differing.is_empty() {
        differing.sort();
        differing.dedup();
        return Err(Error::ConfigMismatch(differing));
    }
    let systems: Vec<&SystemReport> = reports.iter().flat_map(|r| &r.systems).collect();
    let mut metrics: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
    for system in &systems {
        for (name, value) in metric_values(system) {
            if let Some(value) = value {
                metrics.entry(name.to_string()).or_default().push(RankedEntry {
                    system: system.name.clone(),
                    value,
                });
            }
        }
    }
    for entries in metrics.values_mut() {
        entries.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.system.cmp(&b.system)));
    }
    Ok(Ranking { metrics })
}

/// Renders a ranking as JSON, CSV (metric, rank, system, value) or text.
pub fn render_ranking(ranking: &Ranking, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(ranking).expect("rankings serialize");
            text.push('\n');
            text
        }
        _ => {
            let header: Vec<String> = ["metric", "rank", "system", "value"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = ranking
                .metrics
                .iter()
                .flat_map(|(metric, entries)| {
                    entries.iter().enumerate().map(move |(i, e)| {
                        vec![
                            metric.clone(),
                            (i + 1).to_string(),
                            e.system.clone(),
                            format!("{:.2}", e.value),
                        ]
                    })
                })
                .collect();
            if format == OutputFormat::Csv {
                csv_text(&header, &rows)
            } else {
                aligned(&header, &rows)
            }
        }
    }
}
