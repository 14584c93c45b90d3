use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use webmap::config::EngineConfig;
use webmap::ingest::recluster;
use webmap::store::{cluster_path, write_json, write_signposts};
use webmap::{api, ingest, Store, WebmapError};
use webmap_core::overlay::resolve_query;

const DATA_DIR_ENV: &str = "WEBMAP_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "webmap",
    version,
    about = "Build and browse a WebMap semantic overlay",
    arg_required_else_help = true
)]
struct Cli {
    /// Engine config file.
    #[arg(long, global = true, default_value = "webmap.toml")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr (-vv for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a config file with every default spelled out.
    Init {
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Read the configured corpora and rebuild the data dir.
    Ingest,
    /// Map a query to a cluster and rank its documents.
    Query {
        #[arg(required = true)]
        text: Vec<String>,
        /// Derive the query TRC on this peer's graph.
        #[arg(long)]
        peer: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Follow a document's source topics back through its cluster.
    Trace {
        doc_id: String,
        #[arg(long, default_value_t = api::DEFAULT_TRACE_DEPTH)]
        depth: usize,
        #[arg(long)]
        json: bool,
    },
    /// Re-run subcluster detection on one cluster file.
    Subcluster {
        #[arg(long)]
        cluster: String,
        #[arg(long)]
        peer: Option<String>,
    },
    /// Write a cluster's keyword/source-topic files and its document links.
    ExportSignpost {
        #[arg(long)]
        cluster: String,
        #[arg(long)]
        peer: Option<String>,
        /// Output directory; JSON goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the read-only JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<WebmapError> for Failure {
    fn from(e: WebmapError) -> Self {
        if e.is_user_error() {
            Failure::User(e.into())
        } else {
            Failure::Internal(e.into())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(e)) => {
            eprintln!("webmap: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("webmap: internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Init { force } => init(&cli.config, *force),
        Command::Ingest => {
            let cfg = engine_config(cli)?;
            let report = ingest::ingest(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(())
        }
        Command::Query { text, peer, json } => {
            let store = open_store(cli)?;
            let state = api::ApiState::new(store)?;
            let result = resolve_query(
                &state.store.map,
                &state.provider,
                &state.selector,
                &text.join(" "),
                peer.as_deref(),
            )
            .map_err(WebmapError::from)?;
            if *json {
                print_json(&result);
            } else {
                println!("cluster {} on {}", result.trc, result.cluster.peer_id);
                for d in &result.documents {
                    println!("{:>8.4}  {}  {}  {}", d.score, d.doc_id, d.title, d.url);
                }
                for r in &result.related_clusters {
                    println!("related {} on {}", r.trc, r.peer_id);
                }
            }
            Ok(())
        }
        Command::Trace {
            doc_id,
            depth,
            json,
        } => {
            let store = open_store(cli)?;
            let trace = store.trace(doc_id, *depth)?;
            if *json {
                print_json(&trace);
            } else {
                println!("{}", trace.chain[0]);
                for hop in &trace.hops {
                    println!("-> {} ({:.3})", hop.to_doc, hop.overlap_score);
                }
            }
            Ok(())
        }
        Command::Subcluster { cluster, peer } => {
            let mut store = open_store(cli)?;
            let at = store.cluster_ref(cluster, peer.as_deref())?;
            let provider = store.config.provider()?;
            let config = store.config.clone();
            let outcome = recluster(&mut store.map, &at, &provider, &config)?;
            let data_dir = store.config.data_dir();
            write_json(
                &cluster_path(&data_dir, &at),
                store.map.cluster(&at).map_err(WebmapError::from)?,
            )?;
            print_json(&serde_json::json!({
                "cluster": at,
                "subclusters": outcome.records,
                "reclustering_queue": outcome.reclustering_queue,
            }));
            Ok(())
        }
        Command::ExportSignpost { cluster, peer, out } => {
            let store = open_store(cli)?;
            let at = store.cluster_ref(cluster, peer.as_deref())?;
            let sp = store.signposts.get(&at).cloned().unwrap_or_default();
            match out {
                Some(dir) => {
                    write_signposts(dir, &sp)?;
                    eprintln!(
                        "wrote {} document files to {}",
                        sp.docs.len(),
                        dir.display()
                    );
                }
                None => print_json(&serde_json::json!({
                    "cluster": at,
                    "documents": sp.docs.values().collect::<Vec<_>>(),
                    "doclinks": sp.links,
                })),
            }
            Ok(())
        }
        Command::Serve { port, host } => {
            let store = open_store(cli)?;
            let state = api::ApiState::new(store)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.into()))?;
            rt.block_on(api::serve(state, SocketAddr::new(*host, *port)))?;
            Ok(())
        }
    }
}

fn init(path: &Path, force: bool) -> Outcome {
    if path.exists() && !force {
        return Err(Failure::User(anyhow!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    std::fs::write(path, EngineConfig::default().to_toml())
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::User)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn engine_config(cli: &Cli) -> Result<EngineConfig, Failure> {
    let mut cfg = EngineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = env_data_dir() {
        cfg.data_dir = dir;
    }
    Ok(cfg)
}

fn env_data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(|v| std::path::absolute(PathBuf::from(&v)).unwrap_or_else(|_| v.into()))
}

/// Loads the data dir named by the environment, or by the config file.
fn open_store(cli: &Cli) -> Result<Store, Failure> {
    let data_dir = match env_data_dir() {
        Some(dir) => dir,
        None => EngineConfig::load(&cli.config)?.data_dir(),
    };
    let mut store = Store::load(&data_dir)?;
    if let Some(seed) = cli.seed {
        store.config.seed = seed;
    }
    Ok(store)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("output serializes")
    );
}
