use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use competency_core::simulate::SimulationConfig;
use competency_core::time::{self, parse_timestamp};
use competency_core::{CourseDocument, CourseId, InteractionEvent, StudentId, Timestamp};
use competency_service::{serve, AppendOutcome, ServeError, Store};

#[derive(Parser)]
#[command(
    name = "competency",
    version,
    about = "Competency graph, progress and learning-path service"
)]
struct Cli {
    /// Directory holding course documents and event logs.
    #[arg(long, global = true, env = "DATA_DIR", default_value = "./data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Import a course document (JSON).
    Import { file: PathBuf },
    /// Generate seeded student events for a course.
    Simulate(SimulateArgs),
    /// Print a student's progress and learning path as JSON.
    Report {
        #[arg(long)]
        course: CourseId,
        #[arg(long)]
        student: StudentId,
        /// Query instant (RFC 3339); defaults to now.
        #[arg(long, value_parser = parse_at)]
        at: Option<Timestamp>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    course: CourseId,
    #[arg(long)]
    students: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    /// Write JSONL to this file instead of stdout.
    #[arg(long, group = "sink")]
    emit: Option<PathBuf>,
    /// POST the batch to a running service at this base URL.
    #[arg(long, group = "sink")]
    post: Option<String>,
    /// Append the batch to the local store.
    #[arg(long, group = "sink")]
    append: bool,
    /// Instant of the first step (RFC 3339).
    #[arg(long, value_parser = parse_at)]
    start: Option<Timestamp>,
    #[arg(long, default_value_t = 0.8)]
    min_score: f64,
    #[arg(long, default_value_t = 1.0)]
    max_score: f64,
}

fn parse_at(raw: &str) -> Result<Timestamp, String> {
    parse_timestamp(raw).map_err(|e| e.to_string())
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_jsonl(out: impl Write, events: &[InteractionEvent]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(out);
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn run_simulate(store: &Store, args: SimulateArgs) -> anyhow::Result<()> {
    let config = SimulationConfig {
        start: args.start,
        min_score: args.min_score,
        max_score: args.max_score,
        ..SimulationConfig::new(args.students, args.steps, args.seed)
    };
    let events = store.simulate(&args.course, &config)?;
    if let Some(path) = args.emit {
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(file, &events)?;
        eprintln!("wrote {} events to {}", events.len(), path.display());
    } else if let Some(base) = args.post {
        let url = format!(
            "{}/courses/{}/events",
            base.trim_end_matches('/'),
            args.course
        );
        let response = reqwest::blocking::Client::new()
            .post(&url)
            .json(&events)
            .send()
            .with_context(|| format!("posting to {url}"))?;
        let status = response.status();
        let body = response.text()?;
        if !status.is_success() {
            bail!("{url} answered {status}: {body}");
        }
        let outcome: AppendOutcome = serde_json::from_str(&body)?;
        print_json(&outcome)?;
    } else if args.append {
        print_json(&store.append_events(&args.course, events)?)?;
    } else {
        write_jsonl(io::stdout().lock(), &events)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let store = Store::open(&cli.data_dir)?;
    match cli.command {
        Command::Serve { port, host } => {
            let runtime = tokio::runtime::Runtime::new()?;
            let addr = SocketAddr::new(host, port);
            let result: Result<(), ServeError> =
                runtime.block_on(serve(Arc::new(store), addr, async {
                    let _ = tokio::signal::ctrl_c().await;
                }));
            result?;
        }
        Command::Import { file } => {
            let raw =
                std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let doc: CourseDocument = serde_json::from_slice(&raw)
                .map_err(|e| anyhow::anyhow!("SCHEMA_VIOLATION: {}: {e}", file.display()))?;
            let outcome = store.import_course(&doc)?;
            print_json(&outcome)?;
        }
        Command::Simulate(args) => run_simulate(&store, args)?,
        Command::Report {
            course,
            student,
            at,
        } => {
            let at = at.unwrap_or_else(time::now);
            print_json(&store.report(&course, &student, at)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e
                .downcast_ref::<competency_service::StoreError>()
                .map(|s| s.code())
                .or_else(|| e.downcast_ref::<ServeError>().map(|s| s.code()));
            match code {
                Some(code) => eprintln!("error [{code}]: {e:#}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
