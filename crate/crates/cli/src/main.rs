use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iw_core::config::EngineConfig;
use iw_core::engine::Workspace;
use iw_core::graph::build_graph;
use iw_core::insight::extract_all;
use iw_core::narrator::{describe, InsightDescription, NarrationContext};
use iw_core::registry::ProviderRegistry;
use iw_core::table::{enumerate_subspaces, load_table_from_str, Schema, Table};
use iw_core::Error;
use iw_service::AppState;

#[derive(Parser)]
#[command(name = "iw", version, about = "Mine, describe and explore insights in tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// CSV table to analyse.
    #[arg(long)]
    input: PathBuf,
    /// JSON schema hints for the table's columns.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Engine configuration (TOML, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Indent JSON documents. JSON lines output is unaffected.
    #[arg(long)]
    pretty: bool,
    /// Force the deterministic stub providers.
    #[arg(long)]
    offline: bool,
}

#[derive(Args, Default)]
struct Tuning {
    /// Structural step for candidate filtering.
    #[arg(long)]
    step: Option<usize>,
    /// Weight of the user-query path in the merge.
    #[arg(long)]
    alpha: Option<f64>,
    /// Retrieval depth per path.
    #[arg(long)]
    k: Option<usize>,
    /// Size of the candidate subset shown to the model.
    #[arg(long = "K")]
    top_k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the insight catalog as JSON lines.
    Extract(Common),
    /// Write the subspace graph.
    Graph(Common),
    /// Write insight descriptions as JSON lines.
    Describe {
        #[command(flatten)]
        common: Common,
        /// Only this insight.
        #[arg(long)]
        insight: Option<String>,
        /// One rendered line per insight instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Run one query turn and print the recommendation.
    Recommend {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tuning: Tuning,
        /// Focused insight id; defaults to the highest-ranked seed.
        #[arg(long)]
        focus: Option<String>,
        /// The user's question.
        #[arg(long, default_value = "")]
        query: String,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        offline: bool,
        /// Address to bind, e.g. 127.0.0.1:8080 (port 0 picks a free one).
        #[arg(long)]
        bind: Option<String>,
        /// Directory for session snapshots.
        #[arg(long)]
        persist: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Ingest(String),
    #[error("{0}")]
    Provider(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Ingest(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Ingest(_) => CliError::Ingest(msg),
            Error::Provider { .. } => CliError::Provider(msg),
            Error::Config(_) | Error::Lookup(_) | Error::InvalidLocator(_) => CliError::Usage(msg),
            _ => CliError::Internal(msg),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_config(path: Option<&Path>, offline: bool, tuning: &Tuning) -> CliResult<EngineConfig> {
    let mut cfg = match path {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    cfg.offline |= offline;
    if let Some(s) = tuning.step {
        cfg.reasoner.step = s;
    }
    if let Some(a) = tuning.alpha {
        cfg.merge.alpha = a;
    }
    if let Some(k) = tuning.k {
        cfg.merge.k = k;
    }
    if let Some(k) = tuning.top_k {
        cfg.merge.top_k = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_input(c: &Common) -> CliResult<(String, Option<Schema>)> {
    let csv = std::fs::read_to_string(&c.input)
        .map_err(|e| CliError::Ingest(format!("cannot read {}: {e}", c.input.display())))?;
    let hints = match &c.schema {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Ingest(format!("cannot read {}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Ingest(format!("schema {}: {e}", p.display())))?)
        }
        None => None,
    };
    Ok((csv, hints))
}

fn load(c: &Common) -> CliResult<Table> {
    let (csv, hints) = read_input(c)?;
    Ok(load_table_from_str(&csv, hints.as_ref()).map_err(Error::from)?)
}

fn emit(c: &Common, text: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Internal(format!("write failed: {e}"));
    match &c.output {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io)
        }
    }
}

fn json_doc<T: serde::Serialize>(value: &T, pretty: bool) -> CliResult<String> {
    let mut s = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Extract(c) => {
            let cfg = load_config(c.config.as_deref(), c.offline, &Tuning::default())?;
            let catalog = extract_all(&load(&c)?, &cfg.extraction)?;
            emit(&c, &catalog.to_jsonl())
        }
        Command::Graph(c) => {
            let cfg = load_config(c.config.as_deref(), c.offline, &Tuning::default())?;
            let table = load(&c)?;
            let graph = build_graph(&enumerate_subspaces(&table, cfg.extraction.max_locator_length));
            let mut text = graph.to_json(c.pretty);
            text.push('\n');
            emit(&c, &text)
        }
        Command::Describe { common: c, insight, text } => {
            let cfg = load_config(c.config.as_deref(), c.offline, &Tuning::default())?;
            let table = load(&c)?;
            let catalog = extract_all(&table, &cfg.extraction)?;
            let ctx = NarrationContext::from_table(&table);
            let picked: Vec<InsightDescription> = match &insight {
                Some(id) => {
                    let ins = catalog
                        .get(id)
                        .ok_or_else(|| CliError::Usage(format!("insight {id} is not in the catalog")))?;
                    vec![describe(ins, &ctx)]
                }
                None => catalog.insights().iter().map(|i| describe(i, &ctx)).collect(),
            };
            let out = if text {
                picked.iter().map(|d| d.render() + "\n").collect()
            } else {
                InsightDescription::to_jsonl(&picked)
            };
            emit(&c, &out)
        }
        Command::Recommend {
            common: c,
            tuning,
            focus,
            query,
        } => {
            let cfg = load_config(c.config.as_deref(), c.offline, &tuning)?;
            let providers = ProviderRegistry::default().resolve(&cfg)?;
            let (csv, hints) = read_input(&c)?;
            let ws = Workspace::from_csv(&csv, hints.as_ref(), &cfg, providers.embedding.as_ref())?;
            let focus = match focus {
                Some(f) => f,
                None => ws
                    .seed_ids()
                    .into_iter()
                    .next()
                    .ok_or_else(|| CliError::Usage("the table yields no insights to focus on".into()))?,
            };
            let outcome = ws.run_turn(&focus, &query, None, &[], &providers)?;
            emit(&c, &json_doc(&outcome.recommendation, c.pretty)?)
        }
        Command::Serve {
            config,
            offline,
            bind,
            persist,
            tuning,
        } => {
            let mut cfg = load_config(config.as_deref(), offline, &tuning)?;
            if let Some(b) = bind {
                cfg.service.bind = b;
            }
            if let Some(p) = persist {
                cfg.persistence_dir = Some(p);
            }
            serve(cfg)
        }
    }
}

fn serve(cfg: EngineConfig) -> CliResult<()> {
    let state = AppState::new(cfg.clone(), &ProviderRegistry::default())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.service.bind)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {}: {e}", cfg.service.bind)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        iw_service::serve(listener, state)
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iw: {e}");
            ExitCode::from(e.code())
        }
    }
}
