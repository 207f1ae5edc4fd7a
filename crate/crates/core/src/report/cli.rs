//! The `zombiesim` command line.
//!
//! Exit status is 0 on success, 1 for usage or configuration problems and 2
//! when a run fails at runtime (for example an unwritable output directory).

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analytic::{chain_monte_carlo, extinction_probability, ChainKernel, ChainSpec};
use crate::engine::Simulation;
use crate::intervention::InterventionKind;
use crate::montecarlo::run_batch_with_progress;
use crate::rng::mix_seed;
use crate::worldmap::{save_raster, synthetic_world, Cell, Placement, Rect, SyntheticSpec};

use super::config::{ConfigError, RunConfig};
use super::frame::{frame_file_name, read_snapshots, render_frame, write_snapshot_rows, Snapshot, SNAPSHOT_HEADER};
use super::write_batch_csv;

/// Reference zombie-win probability printed next to the chain results.
pub const REFERENCE_ZOMBIE_WIN: f64 = 0.691;

#[derive(Debug, Parser)]
#[command(name = "zombiesim", version, about = "Agent-based zombie outbreak simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic map CSV.
    GenMap(GenMapArgs),
    /// Run one simulation and print its outcome.
    Run(RunArgs),
    /// Run a batch and write runs.csv, trajectories.csv and histograms.csv.
    Batch(BatchArgs),
    /// Analytic models.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
    /// Turn a snapshot CSV into PPM frames.
    Render(RenderArgs),
    /// Print the effective configuration with all defaults filled in.
    Config {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GenMapArgs {
    #[arg(long)]
    width: u32,
    #[arg(long)]
    height: u32,
    #[arg(long)]
    population: u64,
    /// Concentrate the population around X,Y instead of spreading it evenly.
    #[arg(long, value_parser = parse_cell)]
    hotspot: Option<Cell>,
    #[arg(long, default_value_t = 5.0)]
    decay_km: f64,
    /// Quarantine rectangle X0,Y0,X1,Y1 (half-open).
    #[arg(long, value_parser = parse_rect)]
    quarantine: Option<Rect>,
    /// Impassable rectangle X0,Y0,X1,Y1; may be repeated.
    #[arg(long, value_parser = parse_rect)]
    impassable: Vec<Rect>,
    #[arg(long, value_parser = parse_cell)]
    origin: Option<Cell>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    config: PathBuf,
    /// Scenario kind: none, strict or leaky.
    #[arg(long)]
    scenario: Option<InterventionKind>,
    #[arg(long)]
    max_steps: Option<u32>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    /// Stream seed; defaults to the seed of batch run `--run-id`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    run_id: u32,
    /// Write a PPM frame per recorded step into this directory.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Write occupied-cell snapshots to this CSV file.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Record frames and snapshots every k-th step.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    every: u32,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// No per-run progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Extinction probability of the early-outbreak chain.
    Chain {
        #[arg(long, default_value_t = 0.246341)]
        q: f64,
        #[arg(long, default_value_t = 5)]
        cap: u32,
        /// Also estimate each kernel by simulating this many chains.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    snapshots: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_numbers<const N: usize>(s: &str) -> Result<[u32; N], String> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| format!("expected {N} comma-separated integers"))
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let [x, y] = parse_numbers::<2>(s)?;
    Ok(Cell::new(x, y))
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let [x0, y0, x1, y1] = parse_numbers::<4>(s)?;
    Ok(Rect { x0, y0, x1, y1 })
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_out(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), Failure> {
    out.write_fmt(text).map_err(runtime)
}

/// Runs the command line `args` (including the program name).
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::GenMap(a) => gen_map(a, out),
        Command::Run(a) => run_one(a, out),
        Command::Batch(a) => batch(a, out),
        Command::Analyze { what: Analyze::Chain { q, cap, trials, seed } } => chain(q, cap, trials, seed, out),
        Command::Render(a) => render(a, out),
        Command::Config { config } => RunConfig::load(config)
            .map_err(Failure::from)
            .and_then(|c| write_out(out, format_args!("{}", c.to_toml_string()))),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn gen_map(a: GenMapArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = SyntheticSpec {
        width: a.width,
        height: a.height,
        placement: match a.hotspot {
            Some(center) => Placement::Hotspot { center, decay_km: a.decay_km },
            None => Placement::Uniform,
        },
        total_population: a.population,
        quarantine: a.quarantine,
        impassable: a.impassable,
        origin: a.origin,
    };
    let world = synthetic_world(&spec).map_err(|e| Failure::Config(e.to_string()))?;
    save_raster(&world, &a.out).map_err(runtime)?;
    write_out(
        out,
        format_args!(
            "wrote {} ({}x{}, {} passable cells, population {}, origin {})\n",
            a.out.display(),
            world.width(),
            world.height(),
            world.passable_count(),
            world.total_population(),
            world.origin()
        ),
    )
}

fn load_with_overrides(o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&o.config)?;
    if let Some(kind) = o.scenario {
        cfg.scenario.kind = kind;
    }
    if let Some(m) = o.max_steps {
        cfg.engine.max_steps = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(a: RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = load_with_overrides(&a.common)?;
    let world = cfg.load_world()?;
    let sim = Simulation::new(&world, cfg.scenario, cfg.behavior, cfg.movement, cfg.engine)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let seed = a.seed.unwrap_or_else(|| mix_seed(cfg.batch.base_seed, u64::from(a.run_id)));

    if let Some(dir) = &a.frames {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    let mut snapshots = match &a.snapshots {
        Some(path) => {
            let mut f = fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            writeln!(f, "{SNAPSHOT_HEADER}").map_err(runtime)?;
            Some(std::io::BufWriter::new(f))
        }
        None => None,
    };
    let mut failure: Option<Failure> = None;
    let outcome = sim.run_observed(seed, |state| {
        if failure.is_some() || !state.step().is_multiple_of(a.every) || (a.frames.is_none() && snapshots.is_none()) {
            return;
        }
        let snap = Snapshot::capture(state, &world);
        if let Some(dir) = &a.frames {
            let path = dir.join(frame_file_name(snap.step));
            let written = render_frame(&snap, &world)
                .map_err(runtime)
                .and_then(|img| fs::write(&path, img).map_err(|e| runtime(format!("{}: {e}", path.display()))));
            if let Err(e) = written {
                failure = Some(e);
            }
        }
        if let Some(w) = snapshots.as_mut() {
            if let Err(e) = write_snapshot_rows(&snap, w) {
                failure = Some(runtime(e));
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(mut w) = snapshots {
        w.flush().map_err(runtime)?;
    }
    let last = outcome.trajectory.last().map(|p| p.counts).unwrap_or_default();
    let border = outcome.first_border_step.map_or_else(|| "none".to_string(), |b| b.to_string());
    write_out(
        out,
        format_args!(
            "seed = {seed}\nscenario = {}\nwinner = {}\nend_step = {}\npeak_zombies = {}\nfirst_border_step = {border}\n\
             healthy = {}\nincubating = {}\nzombies = {}\ndead_zombies = {}\n",
            cfg.scenario.kind,
            outcome.winner.as_str(),
            outcome.end_step,
            outcome.peak_zombies,
            last.healthy,
            last.incubating,
            last.zombies,
            last.dead_zombies,
        ),
    )
}

fn batch(a: BatchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = load_with_overrides(&a.common)?;
    if let Some(n) = a.runs {
        cfg.batch.n_runs = n;
    }
    if let Some(p) = a.parallel {
        cfg.batch.max_parallel_runs = p;
    }
    if let Some(s) = a.seed {
        cfg.batch.base_seed = s;
    }
    if let Some(dir) = a.out {
        cfg.output.dir = dir;
    }
    cfg.validate()?;
    let world = cfg.load_world()?;
    let bc = cfg.batch_config();
    let total = bc.n_runs;
    let done = std::sync::atomic::AtomicU32::new(0);
    let summary = run_batch_with_progress(&world, &bc, |r| {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        if !a.quiet {
            eprintln!("run {} finished ({k}/{total}): {} at step {}", r.run_id, r.outcome.winner.as_str(), r.outcome.end_step);
        }
    })
    .map_err(|e| Failure::Config(e.to_string()))?;
    write_batch_csv(&summary, &cfg.output.dir).map_err(runtime)?;
    let median = summary
        .median_end_step(crate::Winner::Zombies)
        .map_or_else(|| "none".to_string(), |m| m.to_string());
    write_out(
        out,
        format_args!(
            "scenario = {}\nn_runs = {}\nhumans_won = {}\nzombies_won = {}\nunresolved = {}\n\
             zombie_win_fraction = {:.4}\nmedian_zombie_end_step = {median}\n\
             first_border_before_activation = {:.4}\noutput = {}\n",
            cfg.scenario.kind,
            summary.n_runs(),
            summary.humans_won,
            summary.zombies_won,
            summary.unresolved,
            summary.fraction(crate::Winner::Zombies),
            summary.first_border_before(cfg.scenario.activation_step),
            cfg.output.dir.display(),
        ),
    )
}

fn chain(q: f64, cap: u32, trials: Option<u64>, seed: u64, out: &mut dyn Write) -> Result<(), Failure> {
    write_out(out, format_args!("q = {q}, cap = {cap}\n"))?;
    write_out(out, format_args!("{:<16} {:>12} {:>12}", "kernel", "extinction", "zombie_win"))?;
    if trials.is_some() {
        write_out(out, format_args!(" {:>14}", "mc_zombie_win"))?;
    }
    write_out(out, format_args!("\n"))?;
    for kernel in ChainKernel::ALL {
        let spec = ChainSpec::new(q, cap, kernel);
        let r = extinction_probability(&spec).map_err(|e| Failure::Config(e.to_string()))?;
        write_out(
            out,
            format_args!("{:<16} {:>12.6} {:>12.6}", kernel.name(), r.extinction_probability, r.zombie_win_probability),
        )?;
        if let Some(n) = trials {
            let e = chain_monte_carlo(&spec, n, seed).map_err(|e| Failure::Config(e.to_string()))?;
            write_out(out, format_args!(" {:>14.6}", 1.0 - e))?;
        }
        write_out(out, format_args!("\n"))?;
    }
    write_out(out, format_args!("{:<16} {:>12} {:>12.3}\n", "reference", "", REFERENCE_ZOMBIE_WIN))
}

fn render(a: RenderArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = RunConfig::load(&a.config)?;
    let world = cfg.load_world()?;
    let file = fs::File::open(&a.snapshots).map_err(|e| Failure::Config(format!("{}: {e}", a.snapshots.display())))?;
    let frames = read_snapshots(BufReader::new(file), world.width(), world.height())
        .map_err(|e| Failure::Config(format!("{}: {e}", a.snapshots.display())))?;
    fs::create_dir_all(&a.out).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;
    for snap in &frames {
        let path: PathBuf = Path::new(&a.out).join(frame_file_name(snap.step));
        let img = render_frame(snap, &world).map_err(runtime)?;
        fs::write(&path, img).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    write_out(out, format_args!("wrote {} frames to {}\n", frames.len(), a.out.display()))
}
