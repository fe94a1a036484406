//! Command-line front end for the evaluation toolkit.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mwzeval::bleu::Smoothing;
use mwzeval::corpus::{load_goals, PredictionFormat};
use mwzeval::db::{load_database, SearchMode, DEFAULT_THRESHOLD};
use mwzeval::domain::Domain;
use mwzeval::error::{Error, Result};
use mwzeval::normalize::normalize_with;
use mwzeval::ontology::SlotOntology;
use mwzeval::overlap::analyze_folds;
use mwzeval::report::{compare, render, render_ranking, run, EvalConfig, EvalReport, Metrics, OutputFormat};
use mwzeval::success::MatchPolicy;

#[derive(Parser)]
#[command(name = "mwzeval", version, about = "Evaluate MultiWOZ-style dialogue system outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score prediction files with BLEU, Inform/Success and lexical diversity.
    Evaluate(EvaluateArgs),
    /// Normalize delexicalized utterances, one per line.
    Normalize(NormalizeArgs),
    /// List database entities matching a set of constraints.
    QueryDb(QueryArgs),
    /// Measure goal overlap between dataset folds.
    Overlap(OverlapArgs),
    /// Rank the systems of several reports per metric.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Table,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Table => OutputFormat::Table,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    Exp,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// Versioned native format.
    Native,
    /// Unversioned format of older evaluation scripts.
    Mwzeval,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction files; each is one system named after its file stem.
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
    /// Directory holding goals.json, db/ and references/<style>.json.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Goal file, overriding the data directory.
    #[arg(long)]
    goals: Option<PathBuf>,
    /// Database directory, overriding the data directory.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Reference turns, overriding the data directory.
    #[arg(long)]
    references: Option<PathBuf>,
    #[arg(long)]
    bleu: bool,
    #[arg(long)]
    success: bool,
    #[arg(long)]
    richness: bool,
    /// Intersection matching, name-only queries and ground-truth domains.
    #[arg(long, conflicts_with = "legacy_sampling")]
    optimistic: bool,
    /// Judge one randomly drawn offered entity, as older scripts did.
    #[arg(long)]
    legacy_sampling: bool,
    #[arg(long, default_value_t = 0, requires = "legacy_sampling")]
    seed: u64,
    /// Placeholder style of the predictions.
    #[arg(long, default_value = "mwz22")]
    style: String,
    /// Reference set to score BLEU against.
    #[arg(long, default_value = "mwz22")]
    reference_style: String,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write per-dialogue Inform/Success outcomes here as JSON.
    #[arg(long)]
    details: Option<PathBuf>,
    /// Fuzzy match threshold for database values, 0 to 100.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "exp")]
    smoothing: SmoothingArg,
    /// Placeholder mapping file replacing the bundled one.
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "native")]
    input_format: InputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Input file; standard input when absent.
    input: Option<PathBuf>,
    #[arg(long, default_value = "mwz22")]
    style: String,
    #[arg(long)]
    ontology: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    domain: String,
    /// Comma-separated slot=value pairs, or a JSON object.
    #[arg(long, default_value = "")]
    constraints: String,
    /// Query by name or train ID only when one is given.
    #[arg(long)]
    reduced: bool,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct OverlapArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    ontology: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

fn load_ontology(path: Option<&Path>) -> Result<SlotOntology> {
    match path {
        Some(path) => SlotOntology::load(path),
        None => Ok(SlotOntology::bundled().clone()),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    if args.data.is_none() && (args.goals.is_none() || args.db.is_none()) {
        return Err(Error::Validation("give --data, or both --goals and --db".into()));
    }
    let mut config = EvalConfig::from_data_dir(
        args.data.as_deref().unwrap_or(Path::new("")),
        args.predictions,
        &args.reference_style,
    );
    if args.data.is_none() {
        config.references = None;
    }
    if let Some(goals) = args.goals {
        config.goals = goals;
    }
    if let Some(db) = args.db {
        config.db = db;
    }
    if let Some(references) = args.references {
        config.references = Some(references);
    }
    config.metrics = Metrics {
        bleu: args.bleu,
        success: args.success,
        richness: args.richness,
    };
    config.policy = if args.optimistic {
        MatchPolicy::optimistic()
    } else if args.legacy_sampling {
        MatchPolicy::legacy_sampling(args.seed)
    } else {
        MatchPolicy::standard()
    };
    config.policy.threshold = args.threshold;
    config.smoothing = match args.smoothing {
        SmoothingArg::None => Smoothing::None,
        SmoothingArg::Exp => Smoothing::Exp,
    };
    config.prediction_format = match args.input_format {
        InputFormat::Native => PredictionFormat::Native,
        InputFormat::Mwzeval => PredictionFormat::Mwzeval,
    };
    config.style = args.style;
    config.ontology = args.ontology;

    let evaluation = run(&config)?;
    for warning in &evaluation.report.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(path) = &args.details {
        let mut text = serde_json::to_string_pretty(&evaluation.details).expect("outcomes serialize");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    emit(&render(&evaluation.report, args.format.into()), args.output.as_deref())
}

fn normalize(args: NormalizeArgs) -> Result<()> {
    let ontology = load_ontology(args.ontology.as_deref())?;
    let reader: Box<dyn BufRead> = match &args.input {
        Some(path) => Box::new(io::BufReader::new(
            std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
        )),
        None => Box::new(io::stdin().lock()),
    };
    let location = args
        .input
        .as_ref()
        .map_or("<stdin>".to_string(), |p| p.display().to_string());
    let mut out = String::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&location, e))?;
        let u = normalize_with(&ontology, &line, &args.style).map_err(|e| e.at(format!("{location}:{}", i + 1)))?;
        out.push_str(&u.text);
        out.push('\n');
    }
    emit(&out, None)
}

fn parse_constraints(text: &str) -> Result<BTreeMap<String, String>> {
    let text = text.trim();
    if text.starts_with('{') {
        let map: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("--constraints: {e}")))?;
        return map
            .into_iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => Ok((k, s)),
                serde_json::Value::Number(n) => Ok((k, n.to_string())),
                other => Err(Error::Validation(format!(
                    "--constraints: {k} has non-scalar value {other}"
                ))),
            })
            .collect();
    }
    text.split(',')
        .filter(|pair| !pair.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("--constraints: expected slot=value, got `{pair}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn query_db(args: QueryArgs) -> Result<()> {
    let domain: Domain = args
        .domain
        .parse()
        .map_err(|_| Error::Validation(format!("unknown domain `{}`", args.domain)))?;
    let constraints = parse_constraints(&args.constraints)?;
    let db = load_database(&args.db)?;
    let mode = if args.reduced {
        SearchMode::Reduced
    } else {
        SearchMode::Full
    };
    let result = db.query(domain, &constraints, mode, args.threshold)?;
    let entities: Vec<_> = db
        .table(domain)
        .iter()
        .filter(|e| result.entity_ids.contains(&e.id))
        .collect();
    let value = serde_json::json!({
        "domain": domain,
        "constraints": constraints,
        "count": entities.len(),
        "entities": entities,
    });
    emit(
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&value).expect("query results serialize")
        ),
        None,
    )
}

fn overlap(args: OverlapArgs) -> Result<()> {
    let ontology = load_ontology(args.ontology.as_deref())?;
    let report = analyze_folds(
        &load_goals(&args.train, &ontology)?,
        &load_goals(&args.valid, &ontology)?,
        &load_goals(&args.test, &ontology)?,
    )?;
    emit(
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("overlap reports serialize")
        ),
        None,
    )
}

fn compare_reports(args: CompareArgs) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            EvalReport::from_json(&text, &path.display().to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    emit(&render_ranking(&compare(&reports)?, args.format.into()), None)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => evaluate(args),
        Command::Normalize(args) => normalize(args),
        Command::QueryDb(args) => query_db(args),
        Command::Overlap(args) => overlap(args),
        Command::Compare(args) => compare_reports(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
