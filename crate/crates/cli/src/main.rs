//! `bubblelab` command-line entry point.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a data error
//! (unreadable or invalid input, failed replay, aborted session).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bubblelab_core::agents::{run_simulation, Roster};
use bubblelab_core::analytics::{build_report, export_figure_data, BatchSummary, DecompositionBasis, MetricsReport};
use bubblelab_core::session::{export::write_trades_csv, replay, EventLog, SessionConfig};
use bubblelab_server::{Server, ServerOptions};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bubblelab", version, about = "Laboratory double-auction asset market")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a live session for networked clients.
    Serve {
        /// `default` or a TOML/JSON session config file.
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Where the event log is written when the session ends.
        #[arg(long)]
        log: PathBuf,
        /// Seconds between periods during which clients show the summary.
        #[arg(long, default_value_t = 10)]
        summary_pause: u64,
        /// Seconds a seat may stay disconnected before the session aborts.
        #[arg(long, default_value_t = 60)]
        disconnect_grace: u64,
        /// Start trading without waiting for questionnaires.
        #[arg(long)]
        no_questionnaire: bool,
    },
    /// Run simulated sessions with a roster of automated agents.
    Simulate {
        #[arg(long, default_value = "default")]
        config: String,
        /// A preset (all-fundamentalist, all-zic, speculator-majority) or a roster file.
        #[arg(long)]
        roster: String,
        #[arg(long, conflicts_with = "seeds", required_unless_present = "seeds")]
        seed: Option<u64>,
        /// Inclusive range `A..B`.
        #[arg(long, value_parser = parse_seed_range)]
        seeds: Option<(u64, u64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a log and print its metrics.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = Basis::PerTrader)]
        basis: Basis,
        /// Also write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a log reproduces itself when re-driven.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Write figure data and the trade list as CSV.
    ExportFigures {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Basis {
    PerTrader,
    PerTrade,
}

impl From<Basis> for DecompositionBasis {
    fn from(b: Basis) -> Self {
        match b {
            Basis::PerTrader => DecompositionBasis::PerTrader,
            Basis::PerTrade => DecompositionBasis::PerTrade,
        }
    }
}

fn parse_seed_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start seed: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end seed: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn load_config(spec: &str) -> Result<SessionConfig> {
    if spec == "default" {
        Ok(SessionConfig::default())
    } else {
        SessionConfig::load(Path::new(spec)).with_context(|| format!("loading config {spec}"))
    }
}

fn load_log(path: &Path) -> Result<EventLog> {
    EventLog::load(path).with_context(|| format!("reading log {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Serve {
            config,
            bind,
            log,
            summary_pause,
            disconnect_grace,
            no_questionnaire,
        } => serve(
            load_config(&config)?,
            &bind,
            &log,
            ServerOptions {
                summary_pause_ms: summary_pause * 1000,
                disconnect_grace_ms: disconnect_grace * 1000,
                require_questionnaires: !no_questionnaire,
                ..ServerOptions::default()
            },
        ),
        Command::Simulate {
            config,
            roster,
            seed,
            seeds,
            out,
        } => {
            let config = load_config(&config)?;
            let roster = Roster::resolve(&roster, config.n_traders)?;
            let (first, last) = seeds.unwrap_or_else(|| {
                let s = seed.expect("clap requires --seed or --seeds");
                (s, s)
            });
            simulate(&config, &roster, first, last, seeds.is_some(), &out)
        }
        Command::Analyze { log, basis, out } => {
            let log = load_log(&log)?;
            let report = build_report(log.records(), basis.into())?;
            print!("{}", report.summary_table());
            if let Some(out) = out {
                write(&out, &report.to_json())?;
            }
            Ok(())
        }
        Command::Replay { log } => {
            let log = load_log(&log)?;
            replay(log.records())?;
            println!("replay OK");
            Ok(())
        }
        Command::ExportFigures { log, out } => {
            let log = load_log(&log)?;
            let report = build_report(log.records(), DecompositionBasis::default())?;
            let (f1, f2) = export_figure_data(&report, &out)
                .with_context(|| format!("writing figures to {}", out.display()))?;
            let trades = out.join("trades.csv");
            let file = fs::File::create(&trades)
                .with_context(|| format!("creating {}", trades.display()))?;
            write_trades_csv(log.records(), file)?;
            for p in [f1, f2, trades] {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn serve(config: SessionConfig, bind: &str, log_path: &Path, options: ServerOptions) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    let outcome = rt.block_on(async {
        let server = Server::bind(config, bind, options).await?;
        println!("listening on {}", server.local_addr()?);
        for (i, token) in server.seat_tokens().iter().enumerate() {
            println!("seat {} token {token}", i + 1);
        }
        anyhow::Ok(server.run().await)
    })?;
    outcome
        .log
        .save(log_path)
        .with_context(|| format!("writing log {}", log_path.display()))?;
    println!("log written to {}", log_path.display());
    match outcome.aborted {
        Some(reason) => bail!("session aborted: {reason}"),
        None => Ok(()),
    }
}

fn simulate(
    config: &SessionConfig,
    roster: &Roster,
    first: u64,
    last: u64,
    batch: bool,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let seeds: Vec<u64> = (first..=last).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = seeds.len().div_ceil(workers).max(1);

    let results: Vec<Result<(u64, MetricsReport)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&seed| simulate_one(config, roster, seed, out))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap_or_else(|_| vec![Err(anyhow!("worker panicked"))]))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;

    if batch {
        let summary = BatchSummary::from_reports(&reports);
        write(&out.join("aggregate.json"), &summary.to_json())?;
        print!("{}", summary.table());
    } else if let Some((_, report)) = reports.first() {
        print!("{}", report.summary_table());
    }
    Ok(())
}

fn simulate_one(config: &SessionConfig, roster: &Roster, seed: u64, out: &Path) -> Result<(u64, MetricsReport)> {
    let log = run_simulation(config, roster, seed).with_context(|| format!("seed {seed}"))?;
    let log_path = out.join(format!("seed-{seed}.jsonl"));
    log.save(&log_path)
        .with_context(|| format!("writing {}", log_path.display()))?;
    let report = build_report(log.records(), DecompositionBasis::default())?;
    write(&out.join(format!("seed-{seed}.report.json")), &report.to_json())?;
    Ok((seed, report))
}
