use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use navslice_cli::docs::*;
use navslice_cli::error::*;
use navslice_cli::store::{load_trace_file, trace_id};
use navslice_cli::{api, ops, TraceStore};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "navslice", version, about = "Check navigation models and slice their counterexamples")]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Model-check a property; counterexamples go to the trace store.
    Check {
        spec: PathBuf,
        #[arg(long)]
        prop: String,
        #[arg(long)]
        budget_states: Option<usize>,
        #[arg(long)]
        budget_depth: Option<usize>,
        #[arg(long, default_value = ".navslice")]
        store: PathBuf,
    },
    /// Slice a trace at a state (index or `last`) with a filtering pattern.
    Slice {
        trace: PathBuf,
        state: String,
        pattern: String,
        /// States, ending at the criterion, covered by the summary metrics.
        #[arg(long, default_value_t = default_window())]
        window: usize,
        /// Where to write the sliced trace (default: next to the trace).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the navigation graph in DOT.
    RenderGraph { spec: PathBuf },
    /// Replay a sliced trace from random refills of its holes.
    ReplayVerify {
        slice: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value = ".navslice")]
        store: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::Load(format!("{}: {e}", path.display())))
}

fn emit<T: serde::Serialize>(format: Format, doc: &T, text: impl FnOnce() -> String) {
    match format {
        Format::Json => print!("{}", to_json(doc)),
        Format::Text => print!("{}", text()),
    }
}

fn run(cli: Cli) -> Result<u8, AppError> {
    let format = cli.format;
    match cli.cmd {
        Cmd::Check { spec, prop, budget_states, budget_depth, store } => {
            let store = TraceStore::open(store)?;
            let req = CheckRequest {
                spec: read(&spec)?,
                property: prop,
                budget: BudgetDoc { max_states: budget_states, max_depth: budget_depth },
            };
            let v = ops::check(&store, &spec.display().to_string(), &req)?;
            let path = v.trace_id.as_ref().map(|id| store.path(id));
            emit(format, &v, || {
                let mut s = format!("{}: {}\n", v.verdict, v.property);
                s += &format!("  {} states, {} product nodes, depth {}\n", v.stats.states, v.stats.product_nodes, v.stats.max_depth);
                if let Some(r) = &v.reason {
                    s += &format!("  budget exhausted: {r}\n");
                }
                if let (Some(p), Some(n)) = (&path, v.trace_states) {
                    s += &format!("  counterexample of {n} states, lasso from {}\n", v.lasso_start.unwrap_or(n - 1));
                    s += &format!("  trace written to {}\n", p.display());
                }
                s
            });
            Ok(match v.verdict.as_str() {
                "fulfilled" => EXIT_FULFILLED,
                "refuted" => EXIT_REFUTED,
                _ => EXIT_EXHAUSTED,
            })
        }
        Cmd::Slice { trace, state, pattern, window, out } => {
            let t = load_trace_file(&trace)?;
            let doc = ops::slice(&trace_id(&t.to_json()), &t, &SliceRequest { state, pattern, window })?;
            let out = out.unwrap_or_else(|| trace.with_extension(format!("slice-{}.json", doc.sliced.state_index)));
            fs::write(&out, to_json(&doc))?;
            let m = doc.window_metrics;
            emit(format, &doc, || {
                format!(
                    "state {}, last {} states: |T| = {}, |T•| = {}, ratio = {:.3}, reduction = {:.1}%\nsliced trace written to {}\n",
                    doc.sliced.state_index,
                    doc.window,
                    m.original,
                    m.sliced,
                    m.ratio,
                    m.reduction,
                    out.display()
                )
            });
            Ok(EXIT_FULFILLED)
        }
        Cmd::RenderGraph { spec } => {
            let g = ops::graph(&spec.display().to_string(), &read(&spec)?)?;
            emit(format, &g, || g.dot.clone());
            Ok(0)
        }
        Cmd::ReplayVerify { slice, samples, seed } => {
            let doc: SliceDoc = serde_json::from_str(&read(&slice)?)
                .map_err(|e| AppError::Load(format!("{}: {e}", slice.display())))?;
            let r = ops::replay(&doc, samples, seed)?;
            emit(format, &r, || {
                let mut s = format!("{}/{} refills agree at state {}\n", r.agreed, r.samples, r.state_index);
                for f in r.failures.iter().take(5) {
                    s += &format!("  sample {}: {}\n", f.sample, f.message);
                }
                s
            });
            Ok(if r.ok { 0 } else { 1 })
        }
        Cmd::Serve { bind, store } => {
            let store = TraceStore::open(store)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, api::router(store)).await
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match format {
                Format::Json => print!("{}", to_json(&ErrorDoc { error: e.body() })),
                Format::Text => eprintln!("error: {e}"),
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}
