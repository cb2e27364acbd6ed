use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qumf::config::RunConfig;
use qumf::datagen::Dataset;
use qumf::eval::{misclassification, Labeling};
use qumf::experiment::{
    evaluate_selection, generate_dataset, hypothesis_pool, run_grid, summarize, write_rows_csv,
    write_summary_csv,
};
use qumf::geometry::{ModelSet, PointSet};
use qumf::preference::PreferenceMatrix;
use qumf::solver::solve_with_samples;
use qumf::Error;

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_GUARD: u8 = 4;

/// Multi-model fitting as a QUBO, solved by simulated annealing.
#[derive(Parser)]
#[command(name = "qumf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point set and its ground-truth models.
    Generate(GenerateArgs),
    /// Sample a hypothesis pool from a point set.
    Hypothesize(HypothesizeArgs),
    /// Select models for a point set from a hypothesis pool.
    Fit(FitArgs),
    /// Run a trial grid and write per-trial and summary CSV files.
    Bench(BenchArgs),
    /// Score a labeling against ground-truth labels.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// `star` or `clutter`.
    #[arg(long, default_value = "star")]
    dataset: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Points on the model(s).
    #[arg(long, default_value_t = 250)]
    n: usize,
    /// Uniform outliers, clutter dataset only.
    #[arg(long, default_value_t = 0)]
    clutter: usize,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives points.json and gt_models.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HypothesizeArgs {
    #[arg(long)]
    points: PathBuf,
    /// Ground-truth models to include in the pool.
    #[arg(long)]
    gt_models: Option<PathBuf>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_ground_truth: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Solver settings shared by `fit` and `bench`; each overrides the config file.
#[derive(Args)]
struct SolverArgs {
    /// `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `qumf` or `dequmf`.
    #[arg(long)]
    method: Option<String>,
    /// `sa` or `exhaustive`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    anneals: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    #[arg(long)]
    subproblem_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    models: PathBuf,
    /// Report inliers and outliers of a single model.
    #[arg(long)]
    single_model: bool,
    /// Also write the final solve's samples to samples.json.
    #[arg(long)]
    dump_samples: bool,
    /// Also write the preference matrix to preference.json.
    #[arg(long)]
    dump_preference: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    clutter: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Comma-separated pool sizes.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    no_ground_truth: bool,
    /// Write zero wall-clock times so output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Output directory; receives trials.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// labeling.json from `fit`.
    #[arg(long)]
    labels: PathBuf,
    /// Point set carrying ground-truth labels.
    #[arg(long)]
    points: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let file = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_points(path: &Path) -> Result<PointSet, Error> {
    let set: PointSet = read_json(path)?;
    set.validate()?;
    Ok(set)
}

fn load_models(path: &Path) -> Result<ModelSet, Error> {
    let set: ModelSet = read_json(path)?;
    set.validate()?;
    Ok(set)
}

impl SolverArgs {
    fn run_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.method {
            cfg.method = v.parse()?;
        }
        if let Some(v) = &self.backend {
            cfg.backend = v.parse()?;
        }
        macro_rules! copy {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        copy!(
            lambda,
            epsilon,
            anneals,
            sweeps,
            beta_start,
            beta_end,
            subproblem_size,
            seed
        );
        Ok(cfg)
    }
}

fn generate(args: GenerateArgs) -> Result<(), Error> {
    let mut cfg = RunConfig {
        dataset: args.dataset.parse()?,
        k: args.k,
        n: args.n,
        clutter: args.clutter,
        ..Default::default()
    };
    if let Some(s) = args.noise_sigma {
        cfg.noise_sigma = s;
    }
    let data = generate_dataset(&cfg, args.seed)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("points.json"), &data.point_set())?;
    write_json(
        &args.out.join("gt_models.json"),
        &ModelSet {
            models: data.gt_models,
        },
    )?;
    Ok(())
}

fn hypothesize(args: HypothesizeArgs) -> Result<(), Error> {
    let points = load_points(&args.points)?;
    let gt_models = match &args.gt_models {
        Some(path) => load_models(path)?.models,
        None => Vec::new(),
    };
    let n = points.points.len();
    let data = Dataset {
        points: points.points,
        gt_labels: points.gt_labels.unwrap_or_else(|| vec![-1; n]),
        gt_models,
    };
    let cfg = RunConfig {
        include_ground_truth: !args.no_ground_truth && !data.gt_models.is_empty(),
        ..Default::default()
    };
    let pool = hypothesis_pool(&cfg, &data, args.m, args.seed)?;
    write_json(&args.out, &ModelSet { models: pool })
}

fn fit(args: FitArgs) -> Result<(), Error> {
    let cfg = args.solver.run_config()?;
    let points = load_points(&args.points)?;
    let models = load_models(&args.models)?;
    let p = PreferenceMatrix::build(&points.points, &models.models, cfg.epsilon)?;
    let (sel, samples) = solve_with_samples(&p, &cfg.solve_config(cfg.seed))?;
    let outcome = evaluate_selection(&p, &sel, points.gt_labels.as_deref(), args.single_model)?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("config.txt"), cfg.to_text())?;
    write_json(&args.out.join("selection.json"), &outcome.selection)?;
    write_json(&args.out.join("labeling.json"), &outcome.labeling)?;
    if let Some(report) = &outcome.report {
        write_json(&args.out.join("report.json"), report)?;
    }
    if let Some(single) = &outcome.single_model {
        write_json(&args.out.join("single_model.json"), single)?;
    }
    if args.dump_samples {
        if let Some(samples) = &samples {
            write_json(&args.out.join("samples.json"), samples)?;
        }
    }
    if args.dump_preference {
        fs::write(
            args.out.join("preference.json"),
            serde_json::to_string_pretty(&p.to_json())? + "\n",
        )?;
    }
    let error = outcome
        .error_percent
        .map_or("n/a".to_string(), |e| format!("{e:.4}"));
    say!(
        "selected {} of {} models, energy {:.6}, error {error}",
        sel.selected.len(),
        p.m(),
        sel.final_energy
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let mut cfg = args.solver.run_config()?;
    if let Some(v) = &args.dataset {
        cfg.dataset = v.parse()?;
    }
    if let Some(v) = &args.m {
        cfg.set("m", v)?;
    }
    if args.no_ground_truth {
        cfg.include_ground_truth = false;
    }
    macro_rules! copy {
        ($($f:ident),*) => { $(if let Some(v) = args.$f { cfg.$f = v; })* };
    }
    copy!(k, n, clutter, noise_sigma, trials);
    cfg.validate()?;

    let rows = run_grid(&cfg)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("config.txt"), cfg.to_text())?;
    write_rows_csv(
        &rows,
        File::create(args.out.join("trials.csv"))?,
        !args.no_timing,
    )?;
    let summary = summarize(&rows);
    write_summary_csv(&summary, File::create(args.out.join("summary.csv"))?)?;
    for s in &summary {
        say!(
            "m={} trials={} failures={} mean={:.3}% median={:.3}%",
            s.m,
            s.trials,
            s.failures,
            s.mean,
            s.median
        );
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Error> {
    let labeling: Labeling = read_json(&args.labels)?;
    let points = load_points(&args.points)?;
    let gt = points
        .gt_labels
        .ok_or_else(|| Error::Parse(format!("{} has no gt_labels", args.points.display())))?;
    let report = misclassification(&labeling.labels, &gt)?;
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => say!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_guard() {
        EXIT_GUARD
    } else if matches!(e, Error::InvalidConfig(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Hypothesize(a) => hypothesize(a),
        Command::Fit(a) => fit(a),
        Command::Bench(a) => bench(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
