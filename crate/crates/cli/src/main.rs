use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seqpredict::alignment::{Aligner, MoveCostScheme, SearchBudget};
use seqpredict::discovery::{inductive_miner, tree_to_net, ProcessTree};
use seqpredict::eventlog::{load_database, IngestionOptions, LogFormat, Sequence};
use seqpredict::harness::{evaluate, grid_search, run_benchmark, BenchConfig};
use seqpredict::methods::{GridSpec, MethodSpec};
use seqpredict::persist::{load_model, save_model};
use seqpredict::petrinet::{load_pnml, save_pnml};
use seqpredict::predictors::Predictor;
use seqpredict::SequenceDatabase;

#[derive(Parser)]
#[command(name = "seqpredict", version, about = "Next-symbol prediction over sequence databases")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LogArgs {
    /// `line` or `csv`; inferred from the extension by default.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, default_value = "case")]
    case_column: String,
    #[arg(long, default_value = "activity")]
    activity_column: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
}

impl LogArgs {
    fn load(&self, path: &Path) -> Result<SequenceDatabase> {
        let format = match self.format.as_deref() {
            None => LogFormat::from_path(path),
            Some("line") => LogFormat::Line,
            Some("csv") => LogFormat::Csv,
            Some(other) => bail!("unknown log format `{other}`"),
        };
        let options = IngestionOptions {
            case_column: self.case_column.clone(),
            activity_column: self.activity_column.clone(),
            timestamp_column: self.timestamp_column.clone(),
        };
        load_database(path, format, &options).with_context(|| format!("loading {}", path.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark described by a TOML file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Exit successfully even when some cells fail.
        #[arg(long)]
        keep_going: bool,
        /// Also score the first symbol of every sequence.
        #[arg(long)]
        include_empty_prefix: bool,
    },
    /// Fit a predictor and save it as a model file.
    Fit {
        #[arg(long)]
        train: PathBuf,
        /// Method name, e.g. `markov`, `akom`, `hmm`, `automaton`, `petri-empirical`.
        #[arg(long, conflicts_with = "spec")]
        method: Option<String>,
        /// Hyper-parameter as `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// TOML file holding a full method table.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// PNML net for Petri-net methods instead of discovering one.
        #[arg(long = "model", value_name = "PNML")]
        net: Option<PathBuf>,
        /// Noise threshold when a Petri-net method discovers its net.
        #[arg(long)]
        noise_threshold: Option<f64>,
        /// Pick hyper-parameters from the method's default grid.
        #[arg(long)]
        tune: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        log: LogArgs,
    },
    /// Predict next-symbol distributions with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Space-separated prefix; repeatable. `""` is the empty prefix.
        #[arg(long)]
        prefix: Vec<String>,
        /// Score every prediction point of this log instead.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        include_empty_prefix: bool,
        #[command(flatten)]
        log_args: LogArgs,
    },
    /// Align every sequence of a log against a PNML net and write CSV.
    Align {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Compute prefix-alignments instead of full alignments.
        #[arg(long)]
        prefix: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        log_args: LogArgs,
    },
    /// Discover a process tree and its Petri net from a log.
    Discover {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise_threshold: f64,
        /// Where to write the PNML net.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        log_args: LogArgs,
    },
    /// Translate a process tree such as `seq(a, and(b, c))` into PNML.
    Convert {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn method_table(method: &str, params: &[String], net: Option<&Path>, noise: Option<f64>) -> Result<MethodSpec> {
    let mut table = toml::Table::new();
    table.insert("method".into(), toml::Value::String(method.into()));
    for p in params {
        let (key, value) = p.split_once('=').with_context(|| format!("parameter `{p}` is not KEY=VALUE"))?;
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.into()));
        table.insert(key.trim().into(), parsed);
    }
    match (net, noise) {
        (Some(_), Some(_)) => bail!("--model and --noise-threshold are exclusive"),
        (Some(path), None) => {
            let mut t = toml::Table::new();
            t.insert("source".into(), "pnml".into());
            t.insert("path".into(), path.display().to_string().into());
            table.insert("net".into(), t.into());
        }
        (None, Some(noise)) => {
            let mut t = toml::Table::new();
            t.insert("source".into(), "discover".into());
            t.insert("noise".into(), noise.into());
            table.insert("net".into(), t.into());
        }
        (None, None) => {}
    }
    let spec: MethodSpec = table.try_into().context("invalid method parameters")?;
    Ok(spec)
}

fn bench(config_path: &Path, output_dir: Option<PathBuf>, keep_going: bool, include_empty: bool) -> Result<ExitCode> {
    let mut config = BenchConfig::load(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    if include_empty {
        config.include_empty_prefix = true;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    let dir = output_dir
        .or_else(|| config.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("bench-results"));
    let report = run_benchmark(&config, base)?;
    report.write_outputs(&dir)?;
    print!("{}", report.markdown());
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let failed = report.failed_cells();
    eprintln!("wrote {}", dir.display());
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see warnings.log", report.cells.len());
        if !keep_going {
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench { config, output_dir, keep_going, include_empty_prefix } => {
            bench(&config, output_dir, keep_going, include_empty_prefix)
        }
        Command::Fit { train, method, params, spec, net, noise_threshold, tune, seed, out, log } => {
            let spec = match (method, spec) {
                (Some(m), None) => method_table(&m, &params, net.as_deref(), noise_threshold)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                _ => bail!("give either --method or --spec"),
            };
            let db = log.load(&train)?;
            let alphabet = db.alphabet();
            let model = if tune {
                let grid = GridSpec::default_for(&spec).with_context(|| format!("{spec} has no default grid"))?;
                let outcome = grid_search(&grid.configurations(&spec)?, &db, &alphabet, seed, false)?;
                eprintln!("selected {}", outcome.spec);
                outcome.model
            } else {
                spec.fit(&db, &alphabet, seed)?
            };
            save_model(&model, &out)?;
            eprintln!("saved {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { model, prefix, log, include_empty_prefix, log_args } => {
            let model = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            if let Some(path) = log {
                let db = log_args.load(&path)?;
                println!("mean Brier score: {}", evaluate(&model, &db, include_empty_prefix)?);
            }
            let mut stdout = std::io::stdout().lock();
            for p in &prefix {
                let seq = Sequence::parse(p);
                writeln!(stdout, "{p}\t{}", model.predict(&seq)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Align { net, log, prefix, out, log_args } => {
            let apn = load_pnml(&net).with_context(|| format!("loading {}", net.display()))?;
            let db = log_args.load(&log)?;
            let aligner = Aligner::new(&apn, MoveCostScheme::default(), SearchBudget::default())?;
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(std::fs::File::create(path)?),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["sequence", "multiplicity", "cost", "final_marking", "moves"])?;
            for (seq, n) in db.iter() {
                let result = if prefix { aligner.prefix_align(seq) } else { aligner.align(seq) };
                let text = Sequence::new(seq.to_vec()).to_string();
                match result {
                    Ok(a) => w.write_record([
                        text,
                        n.to_string(),
                        a.cost.to_string(),
                        apn.net.format_marking(&a.final_marking),
                        a.display(&apn).to_string(),
                    ])?,
                    Err(e) => {
                        log::warn!("{text}: {e}");
                        w.write_record([text, n.to_string(), String::new(), String::new(), format!("error: {e}")])?
                    }
                }
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Discover { log, noise_threshold, out, log_args } => {
            let db = log_args.load(&log)?;
            let tree = inductive_miner(&db, noise_threshold);
            println!("{tree}");
            if let Some(path) = out {
                save_pnml(&tree_to_net(&tree), &path)?;
                eprintln!("saved {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Convert { tree, out } => {
            let tree = ProcessTree::parse(&tree)?;
            save_pnml(&tree_to_net(&tree), &out)?;
            eprintln!("saved {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
