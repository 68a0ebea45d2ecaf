use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use chrono::{Local, NaiveDateTime, TimeDelta};
use clap::{Args, Parser, Subcommand};
use probmusic::combinatorics::{abbreviate, MultiplicityReport};
use probmusic::generator::{generate_piece, GenParams, MAX_STREAMS};
use probmusic::midi::{assemble_smf, expected_piece_seconds, TimingConfig};
use probmusic::notation::{format_mscore, TIMESTAMP_FORMAT};
use probmusic::playback::{list_ports, open_device, play_piece, PlaybackState, SystemClock};
use probmusic::spec::{parse_spec, serialize_spec, validate_spec, CompositionSpec};
use probmusic_service::{AppState, DeviceFactory, ServiceConfig, DEFAULT_PORT};

#[derive(Debug, Parser)]
#[command(
    name = "probmusic",
    version,
    about = "Randomized multi-stream MIDI music"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a piece and print it in normalized form.
    Parse { file: PathBuf },
    /// Print the word alphabet and the number of possible performances.
    Info {
        file: PathBuf,
        #[command(flatten)]
        shape: Shape,
    },
    /// Print one score per stream.
    Generate {
        file: PathBuf,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seed: SeedArg,
        /// Start time shown in the headers, `YYYY/MM/DD HH:MM:SS` (default: now).
        #[arg(long, value_parser = parse_start)]
        start: Option<NaiveDateTime>,
    },
    /// Write a type-1 Standard MIDI File.
    Render {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        timing: TimingArgs,
    },
    /// Play a piece on a MIDI output until it ends or Ctrl-C.
    Play {
        file: PathBuf,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        timing: TimingArgs,
        #[command(flatten)]
        device: DeviceArg,
    },
    /// Run the HTTP playlist service.
    Serve {
        /// Library directory of `.pm` files.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        timing: TimingArgs,
        #[command(flatten)]
        device: DeviceArg,
    },
    /// List MIDI output ports.
    Ports,
}

#[derive(Debug, Args)]
struct Shape {
    /// Words per stream.
    #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u64).range(1..))]
    length: u64,
    /// Number of concurrent streams.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=MAX_STREAMS as u64))]
    threads: u64,
    /// Seconds between stream starts.
    #[arg(long, default_value_t = 3.0, value_parser = parse_stagger)]
    stagger: f64,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed; drawn and reported on stderr when absent.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TimingArgs {
    #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u32).range(20..=300))]
    bpm: u32,
    #[arg(long, default_value_t = 480, value_parser = clap::value_parser!(u16).range(1..=0x7fff))]
    ppq: u16,
}

#[derive(Debug, Args)]
struct DeviceArg {
    /// Output: port index, path, name fragment, `null` or `log`.
    #[arg(long)]
    device: Option<String>,
}

fn parse_stagger(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err("expected a non-negative number of seconds".into()),
    }
}

fn parse_start(s: &str) -> Result<NaiveDateTime, String> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .map_err(|e| format!("expected YYYY/MM/DD HH:MM:SS ({e})"))
}

impl Shape {
    fn params(&self, seed: u64) -> GenParams {
        GenParams {
            length_ms: self.length as usize,
            streams_k: self.threads as usize,
            stagger_s: self.stagger,
            master_seed: seed,
            ..GenParams::default()
        }
    }
}

impl SeedArg {
    fn resolve(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let nanos = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or_default();
            let seed = nanos >> 11;
            eprintln!("seed: {seed}");
            seed
        })
    }
}

impl TimingArgs {
    fn config(&self) -> TimingConfig {
        TimingConfig {
            bpm: self.bpm,
            ppq: self.ppq,
            ..TimingConfig::default()
        }
    }
}

fn stream_start(start: NaiveDateTime, index: usize, params: &GenParams) -> NaiveDateTime {
    start + TimeDelta::milliseconds((index as f64 * params.stagger_s * 1000.0).round() as i64)
}

fn load(path: &Path) -> anyhow::Result<CompositionSpec> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => anyhow!("{}: file not found", path.display()),
        _ => anyhow!("{}: {e}", path.display()),
    })?;
    parse_spec(&text).with_context(|| format!("{}", path.display()))
}

fn run(command: Command) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match command {
        Command::Parse { file } => {
            let spec = load(&file)?;
            let violations = validate_spec(&spec);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{}: {v}", file.display());
                }
                bail!("{}: {} problem(s) found", file.display(), violations.len());
            }
            write!(out, "{}", serialize_spec(&spec))?;
        }
        Command::Info { file, shape } => {
            let spec = load(&file)?;
            let params = shape.params(0);
            let r = MultiplicityReport::new(&spec, shape.length, shape.threads);
            let seconds = expected_piece_seconds(&spec, &params, &TimingConfig::default());
            writeln!(out, "title: {}", spec.title)?;
            writeln!(out, "n={} od={} i={} w={}", r.n, r.od, r.i, r.w)?;
            writeln!(out, "length={} threads={}", r.ms, r.k)?;
            writeln!(
                out,
                "per-stream: {} ({} digits)",
                abbreviate(&r.per_stream),
                r.decimal_digits_per_stream
            )?;
            writeln!(
                out,
                "total: {} ({} digits)",
                abbreviate(&r.total),
                r.decimal_digits_total
            )?;
            writeln!(out, "expected duration at 120 bpm: {seconds:.1} s")?;
        }
        Command::Generate {
            file,
            shape,
            seed,
            start,
        } => {
            let spec = load(&file)?;
            let params = shape.params(seed.resolve());
            let start = start.unwrap_or_else(|| Local::now().naive_local());
            for m in generate_piece(&spec, &params)? {
                write!(
                    out,
                    "{}",
                    format_mscore(&m, stream_start(start, m.stream_index, &params))
                )?;
            }
        }
        Command::Render {
            file,
            out: path,
            shape,
            seed,
            timing,
        } => {
            let spec = load(&file)?;
            let params = shape.params(seed.resolve());
            let mscores = generate_piece(&spec, &params)?;
            let bytes = assemble_smf(&mscores, &params, &timing.config())?.to_bytes()?;
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Command::Play {
            file,
            shape,
            seed,
            timing,
            device,
        } => {
            let spec = load(&file)?;
            let params = shape.params(seed.resolve());
            let mscores = generate_piece(&spec, &params)?;
            let output = open_device(device.device.as_deref())?;
            let start = Local::now().naive_local();
            let session = play_piece(
                spec.title.clone(),
                &mscores,
                &params,
                &timing.config(),
                output,
                Arc::new(SystemClock::new()),
            )?;
            for m in &mscores {
                write!(
                    out,
                    "{}",
                    format_mscore(m, stream_start(start, m.stream_index, &params))
                )?;
            }
            out.flush()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let waiter = session.clone();
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = tokio::task::spawn_blocking(move || waiter.wait()) => {}
                }
            });
            if session.stop() != PlaybackState::Stopped {
                bail!("playback did not stop cleanly");
            }
        }
        Command::Serve {
            dir,
            port,
            host,
            timing,
            device,
        } => {
            // Fail early if the output cannot be opened at all.
            open_device(device.device.as_deref())?;
            let selector = device.device;
            let devices: DeviceFactory = Arc::new(move || open_device(selector.as_deref()));
            let mut config = ServiceConfig::new(&dir);
            config.timing = timing.config();
            let state = AppState::new(config, devices, Arc::new(SystemClock::new()))?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                tracing::info!(
                    "serving {} on http://{}",
                    dir.display(),
                    listener.local_addr()?
                );
                probmusic_service::serve(listener, Arc::new(state)).await
            })?;
        }
        Command::Ports => {
            for (i, p) in list_ports().iter().enumerate() {
                writeln!(out, "{i}: {}", p.display())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
