use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use factledger_core::config::AppConfig;
use factledger_core::platform::Platform;
use factledger_core::service::{self, AppState, Telemetry};
use factledger_core::txflow::NetworkConfig;
use factledger_cli::client::Client;
use factledger_cli::voters::{SimError, VoterPolicy};
use factledger_cli::{corpus, demo, ingest, verify, voters, Failure};

#[derive(Debug, Parser)]
#[command(name = "factledger", version, about = "Run and drive a factledger fact-checking network")]
struct Cli {
    /// Base URL of a running service.
    #[arg(long, global = true, env = "FACTLEDGER_API", default_value = "http://127.0.0.1:8080")]
    api: String,
    /// Curator account used by `ingest` and `simulate-voters`.
    #[arg(long, global = true, env = "FACTLEDGER_USER", default_value = "admin")]
    user: String,
    #[arg(long, global = true, env = "FACTLEDGER_CREDENTIAL", default_value = "")]
    credential: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start the peers, the orderer and the API service.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Register every entry of a JSON Lines corpus.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 32)]
        concurrency: usize,
    },
    /// Run scripted fact-checkers until every open news item is labeled.
    SimulateVoters {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Ground-truth labels; overrides the policy's `corpus`.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify the block logs of a data directory offline.
    Verify {
        #[arg(long)]
        data_dir: PathBuf,
        /// Config whose network section (organisations, endorsement) applies.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic labeled corpus.
    GenCorpus {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scripted end-to-end run on an in-process network.
    Demo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        posts: usize,
        /// Persist block logs here; must be empty or absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match runtime.block_on(dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

async fn dispatch(cli: Cli) -> Result<(), Failure> {
    let api = Client::new(&cli.api);
    match cli.command {
        Command::Run { config } => run(config).await,
        Command::Ingest { corpus, concurrency } => {
            let lines = corpus::read(&corpus).map_err(|e| Failure::Usage(format!("{}: {e}", corpus.display())))?;
            let curator = login(&api, &cli.user, &cli.credential).await?;
            let mut out = std::io::stdout().lock();
            let s = ingest::ingest(&curator, lines, concurrency, &mut out).await;
            let _ = writeln!(
                out,
                "summary: {} entries, {} registered, {} duplicates, {} failed",
                s.total, s.registered, s.duplicates, s.failed
            );
            if s.failed > 0 {
                return Err(Failure::Runtime(format!("{} entries failed", s.failed)));
            }
            Ok(())
        }
        Command::SimulateVoters { n, policy, corpus: labels_from, seed } => {
            let mut policy = match policy {
                Some(p) => VoterPolicy::load(&p).map_err(Failure::Usage)?,
                None => VoterPolicy::default(),
            };
            if let Some(c) = labels_from {
                policy.corpus = Some(c);
            }
            if let Some(s) = seed {
                policy.seed = s;
            }
            let mut labels = HashMap::new();
            if let Some(path) = &policy.corpus {
                let lines = corpus::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                for e in lines.into_iter().filter_map(|(_, e)| e.ok()) {
                    if let Some(l) = e.label {
                        labels.insert(e.content, l);
                    }
                }
            }
            let curator = login(&api, &cli.user, &cli.credential).await?;
            let mut out = std::io::stdout().lock();
            match voters::simulate(&api, &curator, n, &policy, &labels, &mut out).await {
                Ok(s) => {
                    let _ = writeln!(out, "finalized {} news with {} votes", s.finalized, s.votes_cast);
                    for (verdict, count) in &s.verdicts {
                        let _ = writeln!(out, "verdict {verdict}: {count}");
                    }
                    for (id, balance) in &s.balances {
                        let _ = writeln!(out, "balance {id}: {balance}");
                    }
                    let _ = writeln!(out, "tokens minted {} held {}", s.total_minted, s.sum_of_balances);
                    Ok(())
                }
                Err(SimError::Timeout { open }) => {
                    Err(Failure::Runtime(format!("timeout: {open} news item(s) still under analysis")))
                }
                Err(SimError::Api(e)) => Err(Failure::Runtime(e.to_string())),
            }
        }
        Command::Verify { data_dir, config, json } => {
            let network = match config {
                Some(p) => AppConfig::load(&p).map_err(|e| Failure::Usage(e.to_string()))?.network,
                None => NetworkConfig::default(),
            };
            let report = verify::verify_dir(&data_dir, &network).map_err(Failure::Runtime)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            } else {
                for l in &report.logs {
                    match l.report.first_bad_height() {
                        None => println!("{}: ok, {} blocks, tip {}", l.org, l.blocks(), l.tip.unwrap_or_default()),
                        Some(h) => println!("{}: corrupted at height {h}", l.org),
                    }
                }
                if !report.replicas_agree {
                    println!("replicas disagree on tip or state");
                }
            }
            match (report.is_ok(), report.first_bad_height()) {
                (true, _) => {
                    println!("ok");
                    Ok(())
                }
                (false, Some(h)) => Err(Failure::Verification(format!("first bad height {h}"))),
                (false, None) => Err(Failure::Verification("replicas diverge".into())),
            }
        }
        Command::GenCorpus { n, seed, out } => {
            let text = corpus::to_jsonl(&corpus::generate(n, seed));
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Demo { seed, posts, data_dir } => {
            // An existing chain would be replayed and break reproducibility.
            if let Some(d) = &data_dir {
                if std::fs::read_dir(d).is_ok_and(|mut e| e.next().is_some()) {
                    return Err(Failure::Usage(format!("{} is not empty; demo needs a fresh data dir", d.display())));
                }
            }
            let mut out = std::io::stdout().lock();
            demo::run(seed, posts, data_dir.as_deref(), &mut out).map(|_| ()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

async fn login(api: &Client, user: &str, credential: &str) -> Result<Client, Failure> {
    api.login(user, credential).await.map_err(|e| Failure::Runtime(format!("login as {user}: {e}")))
}

async fn run(path: PathBuf) -> Result<(), Failure> {
    let config = AppConfig::load(&path).map_err(|e| Failure::Usage(format!("bad config: {e}")))?;
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    if config.curators.is_empty() {
        eprintln!("warning: no curator.<name> entries configured; nobody can log in as curator");
    }
    let platform = Arc::new(Platform::from_config(&config).map_err(|e| Failure::Runtime(e.to_string()))?);
    let telemetry = Telemetry::new(config.request_log.as_deref()).map_err(|e| Failure::Runtime(e.to_string()))?;
    let state = Arc::new(AppState::new(platform.clone(), &config, telemetry));
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| Failure::Runtime(format!("bind {}: {e}", config.bind)))?;
    let addr = listener.local_addr().map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("listening on http://{addr}");
    println!("height {}", platform.network().height());
    let _ = std::io::stdout().flush();
    service::serve(state, listener, terminated()).await.map_err(|e| Failure::Runtime(e.to_string()))
}

/// Resolves on Ctrl-C, or SIGTERM on unix.
async fn terminated() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        if let Ok(mut term) = signal(SignalKind::terminate()) {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                _ = term.recv() => {}
            }
            return;
        }
    }
    let _ = tokio::signal::ctrl_c().await;
}

