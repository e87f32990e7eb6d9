use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{ArgGroup, Parser, Subcommand};

use chemvecrag_core::panel::export_heatmap;

use crate::config::{Config, RecordKind};
use crate::error::{ErrorClass, ServiceError};
use crate::service::{QuerySpec, SearchRequest, Service};

#[derive(Debug, Parser)]
#[command(
    name = "chemvecrag",
    version,
    about = "Chemistry-aware vector search and retrieval agents"
)]
pub struct Cli {
    /// Config file; defaults to $CHEMVECRAG_CONFIG, then ./chemvecrag.toml.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed and insert records from a file.
    Ingest {
        #[arg(long)]
        collection: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<RecordKind>,
    },
    /// Search one collection and print the hits as JSON.
    #[command(group(ArgGroup::new("query").required(true).args(["smiles", "image", "expr"])))]
    Query {
        #[arg(long)]
        collection: String,
        #[arg(long)]
        smiles: Option<String>,
        #[arg(long)]
        image: Option<String>,
        /// JSON query expression, e.g. '{"avg":["CCO","CCN"]}'.
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// e.g. "mw:[200,300]".
        #[arg(long)]
        filter: Option<String>,
        /// Write the similarity panel as CSV.
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        target_mw: Option<f64>,
        #[arg(long)]
        ef_search: Option<usize>,
        #[arg(long)]
        nprobe: Option<usize>,
    },
    /// Answer a question and print the report.
    Ask {
        #[arg(long)]
        question: String,
        /// Write the node trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u32>,
    },
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> ServiceError {
    ServiceError::data("io", format!("{}: {e}", path.display()))
}

fn open(config: Option<PathBuf>) -> Result<Service, ServiceError> {
    let path = Config::locate(config.as_deref());
    Service::open(Config::load(&path)?)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), ServiceError> {
    let write = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| ServiceError::backend("io", e.to_string()))
    };
    match cli.command {
        Command::Ingest {
            collection,
            input,
            kind,
        } => {
            let service = open(cli.config)?;
            let text = std::fs::read_to_string(&input).map_err(|e| io_error(&input, e))?;
            let n = service.ingest_text(&collection, kind, &text)?;
            write(out, &format!("inserted {n}\n"))
        }
        Command::Query {
            collection,
            smiles,
            image,
            expr,
            k,
            filter,
            panel,
            target_mw,
            ef_search,
            nprobe,
        } => {
            let query = match (smiles, image, expr) {
                (Some(s), _, _) => QuerySpec::Smiles(s),
                (_, Some(p), _) => QuerySpec::Image(p),
                (_, _, Some(e)) => QuerySpec::Expr(
                    serde_json::from_str(&e)
                        .map_err(|e| ServiceError::new(ErrorClass::Usage, "bad_expression", e.to_string()))?,
                ),
                _ => unreachable!("clap requires one query form"),
            };
            let req = SearchRequest {
                filter,
                target_mw,
                panel: panel.is_some(),
                ef_search,
                nprobe,
                ..SearchRequest::new(query, k)
            };
            let service = open(cli.config)?;
            let resp = service.search(&collection, &req)?;
            if let (Some(path), Some(p)) = (&panel, &resp.panel) {
                export_heatmap(p, path).map_err(|e| ServiceError::data("io", format!("{}: {e}", path.display())))?;
            }
            let json = serde_json::to_string_pretty(&resp).expect("response serializes");
            write(out, &format!("{json}\n"))
        }
        Command::Ask { question, trace } => {
            if question.trim().is_empty() {
                return Err(ServiceError::usage("question is empty"));
            }
            let service = open(cli.config)?;
            let resp = service.ask(&question)?;
            if let Some(path) = &trace {
                std::fs::write(path, resp.trace_jsonl()).map_err(|e| io_error(path, e))?;
            }
            write(out, &resp.report)?;
            write(out, "\n")
        }
        Command::Serve { port } => {
            let service = open(cli.config)?;
            let port = port.unwrap_or(service.config().port);
            let port = u16::try_from(port)
                .ok()
                .filter(|&p| p != 0)
                .ok_or_else(|| ServiceError::usage(format!("port {port} is outside 1..=65535")))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| ServiceError::backend("io", e.to_string()))?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                    .await
                    .map_err(|e| ServiceError::backend("io", format!("bind port {port}: {e}")))?;
                eprintln!(
                    "listening on {}",
                    listener.local_addr().map(|a| a.to_string()).unwrap_or_default()
                );
                crate::http::serve(Arc::new(service), listener)
                    .await
                    .map_err(|e| ServiceError::backend("io", e.to_string()))
            })
        }
    }
}

/// Runs the CLI and returns the process exit code: 0 success, 2 usage,
/// 3 data, 4 backend.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.class.exit_code()
        }
    }
}
