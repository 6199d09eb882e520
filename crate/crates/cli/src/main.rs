//! `homeworld` — operator frontend for the household-agent simulator.
//!
//! Subcommands: `gen-bench` writes a benchmark suite, `run` executes one
//! and reports metrics, `report` re-scores saved traces, `solve` is the
//! interactive instruction loop on a scene, and `validate-dataset` audits
//! an instruction/plan corpus. Every command is deterministic under fixed
//! seeds and inputs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homeworld_core::bench::{generate, score, BenchConfig, Benchmark, BenchmarkEpisode, Report};
use homeworld_core::exec::{EpisodeConfig, EpisodeTrace};
use homeworld_core::observe::NoiseConfig;
use homeworld_core::registry::ClassRegistry;
use homeworld_core::replan::{BuiltinSimilarity, Similarity};

use homeworld::dataset::qa_dataset;
use homeworld::http::{EmbedSimilarity, PlannerClient};
use homeworld::repl::{solve_loop, Solver};
use homeworld::runner::{
    read_jsonl, render_summary, run_suite, write_json, write_jsonl, write_report_csv,
    ArtifactError,
};
use homeworld::scene_file::load_scene;

const EXIT_HELP: &str = "Exit codes:
  0  success; every configured floor was met
  1  IO or runtime failure
  2  usage error
  3  a configured floor was missed";

#[derive(Parser)]
#[command(name = "homeworld", version, about, after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a benchmark file and write report.json, report.csv, and
    /// traces.jsonl.
    Run(RunArgs),
    /// Read instructions on standard input and execute each against a
    /// scene.
    Solve(SolveArgs),
    /// Audit a JSONL instruction/plan dataset and print the findings.
    ValidateDataset(ValidateDatasetArgs),
    /// Generate a deterministic benchmark suite file.
    GenBench(GenBenchArgs),
    /// Re-score an existing trace file against its benchmark.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn enabled(self) -> bool {
        self == Toggle::On
    }
}

/// Episode knobs shared by `run` and `solve`.
#[derive(Args)]
struct EpisodeFlags {
    /// Substitute a similar confirmed class when a search exhausts
    /// exploration.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    replan: Toggle,
    /// Corrective map overwrite on the channel of the active search.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    map_correction: Toggle,
    /// Probability that a visible object is missed in a frame.
    #[arg(long, default_value_t = 0.0)]
    noise_miss: f32,
    /// Probability that a detection is mislabeled as a sibling class.
    #[arg(long, default_value_t = 0.0)]
    noise_mis: f32,
    /// Pixel count a sighting must strictly exceed to confirm a class.
    #[arg(long)]
    pixel_threshold: Option<u32>,
    /// Actions a single search may spend before substitution triggers.
    #[arg(long)]
    explore_budget: Option<u32>,
    /// Ceiling on attempted actions per episode.
    #[arg(long)]
    max_steps: Option<u32>,
}

impl EpisodeFlags {
    fn episode_config(&self, noise_seed: u64) -> EpisodeConfig {
        let mut cfg = EpisodeConfig {
            replan_enabled: self.replan.enabled(),
            map_correction_enabled: self.map_correction.enabled(),
            ..EpisodeConfig::default()
        };
        if self.noise_miss > 0.0 || self.noise_mis > 0.0 {
            cfg.noise =
                NoiseConfig { p_miss: self.noise_miss, p_mis: self.noise_mis, seed: noise_seed };
        }
        if let Some(p) = self.pixel_threshold {
            cfg.pixel_threshold = p;
        }
        if let Some(b) = self.explore_budget {
            cfg.explore_budget = b;
        }
        if let Some(m) = self.max_steps {
            cfg.max_steps = m;
        }
        cfg
    }
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark file: JSONL, one episode per line.
    #[arg(long)]
    bench: PathBuf,
    /// Detector noise seed.
    #[arg(long, env = "HOMEWORLD_SEED", default_value_t = 0)]
    seed: u64,
    /// Parallel episode workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    episode: EpisodeFlags,
    /// Minimum success rate; below it the exit code is 3.
    #[arg(long)]
    sr_floor: Option<f32>,
    /// Embedding service URL; the builtin vector table when absent.
    #[arg(long)]
    embed_endpoint: Option<String>,
    /// Directory for report.json, report.csv, and traces.jsonl.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Scene file to solve instructions against.
    #[arg(long)]
    scene: PathBuf,
    /// Detector noise seed.
    #[arg(long, env = "HOMEWORLD_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    episode: EpisodeFlags,
    /// External planner URL for instructions the template parser rejects.
    #[arg(long)]
    planner_endpoint: Option<String>,
    /// Embedding service URL; the builtin vector table when absent.
    #[arg(long)]
    embed_endpoint: Option<String>,
    /// Directory for per-instruction semantic-map snapshots (PGM).
    #[arg(long)]
    map_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateDatasetArgs {
    /// Dataset file: JSONL of {"instruction", "subgoals"} records.
    #[arg(long)]
    dataset: PathBuf,
    /// Minimum valid fraction; below it the exit code is 3.
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
    /// Also write the QA report as JSON to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenBenchArgs {
    /// Destination benchmark file (JSONL).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24)]
    episodes: u32,
    /// Master seed; every episode derives its own stream.
    #[arg(long, env = "HOMEWORLD_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    width: usize,
    #[arg(long, default_value_t = 20)]
    height: usize,
    /// Unrelated small objects per scene.
    #[arg(long, default_value_t = 2)]
    distractors: u32,
    /// Every Nth episode gets a scene/instruction mismatch (0 disables).
    #[arg(long, default_value_t = 4)]
    mismatch_every: u32,
}

#[derive(Args)]
struct ReportArgs {
    /// Benchmark file the traces belong to.
    #[arg(long)]
    bench: PathBuf,
    /// Trace file from an earlier run.
    #[arg(long)]
    traces: PathBuf,
    /// Minimum success rate; below it the exit code is 3.
    #[arg(long)]
    sr_floor: Option<f32>,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

type CliResult = Result<i32, Box<dyn std::error::Error>>;

fn create_dir(path: &Path) -> Result<(), ArtifactError> {
    fs::create_dir_all(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn make_similarity(endpoint: Option<&str>) -> Box<dyn Similarity + Sync> {
    match endpoint {
        Some(url) => Box::new(EmbedSimilarity::new(url)),
        None => Box::new(BuiltinSimilarity::load()),
    }
}

/// Score, write artifacts, print the summary, and apply the SR floor.
fn finish_report(
    bench: &Benchmark,
    traces: &[EpisodeTrace],
    out: Option<&Path>,
    sr_floor: Option<f32>,
) -> CliResult {
    let report: Report = score(bench, traces)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("report.json"), &report)?;
        write_report_csv(&dir.join("report.csv"), &report)?;
        write_jsonl(&dir.join("traces.jsonl"), traces)?;
        println!("wrote {}", dir.join("report.json").display());
    }
    print!("{}", render_summary(&report));
    match sr_floor {
        Some(floor) if report.sr < floor => {
            println!("SR {:.4} is below the floor {floor:.4}", report.sr);
            Ok(3)
        }
        _ => Ok(0),
    }
}

fn cmd_run(args: RunArgs) -> CliResult {
    let registry = ClassRegistry::builtin();
    let episodes: Vec<BenchmarkEpisode> = read_jsonl(&args.bench)?;
    let bench = Benchmark { seed: args.seed, episodes };
    let cfg = args.episode.episode_config(args.seed);
    let similarity = make_similarity(args.embed_endpoint.as_deref());
    let traces = run_suite(&bench, &cfg, args.jobs, &registry, similarity.as_ref());
    finish_report(&bench, &traces, Some(&args.out), args.sr_floor)
}

fn cmd_solve(args: SolveArgs) -> CliResult {
    let registry = ClassRegistry::builtin();
    let scene = load_scene(&args.scene, &registry)?;
    let similarity = make_similarity(args.embed_endpoint.as_deref());
    let planner = args.planner_endpoint.as_deref().map(PlannerClient::new);
    let solver = Solver {
        scene: &scene,
        registry: &registry,
        similarity: similarity.as_ref(),
        planner: planner.as_ref(),
        cfg: args.episode.episode_config(args.seed),
        map_out: args.map_out,
    };
    let stdin = io::stdin();
    let stdout = io::stdout();
    solve_loop(&solver, &mut stdin.lock(), &mut stdout.lock())?;
    Ok(0)
}

fn cmd_validate_dataset(args: ValidateDatasetArgs) -> CliResult {
    let registry = ClassRegistry::builtin();
    let report = qa_dataset(&args.dataset, &registry)?;
    print!("{}", report.render_table());
    if let Some(path) = &args.out {
        write_json(path, &report)?;
        println!("wrote {}", path.display());
    }
    if report.valid_fraction() < args.floor {
        println!(
            "valid fraction {:.4} is below the floor {:.4}",
            report.valid_fraction(),
            args.floor
        );
        return Ok(3);
    }
    Ok(0)
}

fn cmd_gen_bench(args: GenBenchArgs) -> CliResult {
    let registry = ClassRegistry::builtin();
    let similarity = BuiltinSimilarity::load();
    let cfg = BenchConfig {
        episodes: args.episodes,
        seed: args.seed,
        width: args.width,
        height: args.height,
        distractors: args.distractors,
        mismatch_every: args.mismatch_every,
    };
    let bench = generate(&cfg, &registry, &similarity)?;
    write_jsonl(&args.out, &bench.episodes)?;
    println!(
        "wrote {} episodes to {} (seed {})",
        bench.episodes.len(),
        args.out.display(),
        args.seed
    );
    Ok(0)
}

fn cmd_report(args: ReportArgs) -> CliResult {
    let episodes: Vec<BenchmarkEpisode> = read_jsonl(&args.bench)?;
    let traces: Vec<EpisodeTrace> = read_jsonl(&args.traces)?;
    let bench = Benchmark { seed: 0, episodes };
    finish_report(&bench, &traces, args.out.as_deref(), args.sr_floor)
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Solve(args) => cmd_solve(args),
        Command::ValidateDataset(args) => cmd_validate_dataset(args),
        Command::GenBench(args) => cmd_gen_bench(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            1
        }
    };
    process::exit(code);
}
