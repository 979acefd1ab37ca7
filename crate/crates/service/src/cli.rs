use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use truckmotion_core::ingest::{split_sources, PositionSample};
use truckmotion_core::synthlab::{gen_movement, gen_static, sweep_csv, MovementScript, SweepSpec};

use crate::analysis::Analysis;
use crate::api::{router, AppState};
use crate::config::AnalysisConfig;
use crate::session::{load_root, read_log, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "truckmotion", version, about = "Motion analysis for industrial trucks from indoor-positioning logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute frames, events, KPIs, heatmaps and trajectory of a log.
    Analyze(AnalyzeArgs),
    /// Run the static manipulation sweep and write its CSV table.
    StaticBench(StaticBenchArgs),
    /// Generate a synthetic position log.
    Synth(SynthArgs),
    /// Serve the HTTP and live-stream API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Position log (.csv or .jsonl).
    pub input: PathBuf,
    /// Analysis config JSON; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Source to analyze when the log holds several.
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Args)]
pub struct StaticBenchArgs {
    /// Sweep spec JSON; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Static,
    Movement,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    /// Movement script JSON; the built-in warehouse scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output log; `.csv` writes CSV, anything else JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    /// Gaussian position noise per axis, mm.
    #[arg(long, default_value_t = 2.0)]
    pub noise: f64,
    /// Static recording length, s.
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    /// Also write the ground-truth events of a movement script here.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Data root with one directory per recording.
    #[arg(long, default_value = "data")]
    pub root: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::StaticBench(a) => static_bench(&a),
        Command::Synth(a) => synth(&a),
        Command::Serve(a) => serve(&a),
    }
}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let config = match &args.config {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    };
    let samples = pick_source(read_log(&args.input)?, args.source.as_deref(), &args.input)?;
    let analysis = Analysis::run(&samples, &config).with_context(|| format!("analysis of {} failed", args.input.display()))?;
    let written = analysis.write_artifacts(&args.out)?;
    println!(
        "{} frames, {} events -> {} ({})",
        analysis.frames.len(),
        analysis.stack.len(),
        args.out.display(),
        written.join(", ")
    );
    Ok(())
}

fn pick_source(samples: Vec<PositionSample>, wanted: Option<&str>, path: &Path) -> anyhow::Result<Vec<PositionSample>> {
    let mut sources = split_sources(samples);
    match wanted {
        Some(id) => sources
            .remove(id)
            .with_context(|| format!("{} has no source `{id}`", path.display())),
        None if sources.len() == 1 => Ok(sources.into_values().next().expect("one source")),
        None => bail!(
            "{} holds several sources ({}); pick one with --source",
            path.display(),
            sources.keys().cloned().collect::<Vec<_>>().join(", ")
        ),
    }
}

fn static_bench(args: &StaticBenchArgs) -> anyhow::Result<()> {
    let mut spec = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<SweepSpec>(&text).with_context(|| format!("invalid sweep spec {}", p.display()))?
        }
        None => SweepSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let csv = sweep_csv(&spec.run()?);
    match &args.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn write_samples(path: &Path, samples: &[PositionSample]) -> anyhow::Result<()> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let body = if is_csv {
        let with_fork = samples.iter().all(|s| s.fork_z.is_some());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t", "x", "y", "z"];
        if with_fork {
            header.push("fork_z");
        }
        header.push("id");
        w.write_record(&header)?;
        for s in samples {
            let mut row = vec![s.t.to_string(), s.x.to_string(), s.y.to_string(), s.z.to_string()];
            if let (true, Some(f)) = (with_fork, s.fork_z) {
                row.push(f.to_string());
            }
            row.push(s.source_id.clone());
            w.write_record(&row)?;
        }
        String::from_utf8(w.into_inner()?)?
    } else {
        samples.iter().map(|s| s.to_json_line() + "\n").collect()
    };
    std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    match args.kind {
        SynthKind::Static => {
            let samples = gen_static(args.duration, args.rate, args.noise, args.seed)?;
            write_samples(&args.out, &samples)?;
            println!("{} samples -> {}", samples.len(), args.out.display());
        }
        SynthKind::Movement => {
            let script = match &args.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("invalid movement script {}", p.display()))?
                }
                None => MovementScript::warehouse_demo(),
            };
            let out = gen_movement(&script, args.rate, args.noise, args.seed)?;
            write_samples(&args.out, &out.samples)?;
            if let Some(r) = &args.reference {
                std::fs::write(r, out.reference.to_jsonl()).with_context(|| format!("cannot write {}", r.display()))?;
            }
            println!(
                "{} samples, {} reference events -> {}",
                out.samples.len(),
                out.reference.len(),
                args.out.display()
            );
        }
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let sessions = load_root(&args.root).with_context(|| format!("cannot load data root {}", args.root.display()))?;
    tracing::info!(count = sessions.len(), root = %args.root.display(), "sessions loaded");
    let state = AppState::new(SessionStore::new(sessions), Some(args.root.clone()));
    let addr = SocketAddr::new(args.host, args.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot bind {addr}"))?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
