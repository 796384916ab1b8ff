use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphpred::eval::{
    loo_cv, pairwise_wilcoxon, report_table, results_csv, CorrectionMode, EvalConfig, Method, Problem,
};
use graphpred::generators::{generate_ba_dataset, generate_gol_dataset, BaParams, GolParams, NoiseMode, Pattern};
use graphpred::graph::{load_dataset, load_sequences, save_dataset, LabeledSequence};
use graphpred::repr::{
    alignment_distance_matrix, eigenvalue_correct_clip, rbf_matrix, read_matrix_csv, spectrum_bounds, write_matrix_csv,
    AlignmentCosts, Disconnected, Role, SquareMatrix,
};

#[derive(Parser)]
#[command(name = "graphpred", version, about = "Time series prediction for graphs")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Leave-one-trajectory-out evaluation of prediction methods.
    Evaluate(EvaluateArgs),
    /// Write distance, similarity and kernel matrices.
    Matrix(MatrixArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ba,
    Gol,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    seed: u64,
    /// Number of trajectories (default 20 for ba, 30 for gol).
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, required_if_eq("model", "ba"))]
    m0: Option<usize>,
    #[arg(long, required_if_eq("model", "ba"))]
    k: Option<usize>,
    #[arg(long, required_if_eq("model", "ba"))]
    m: Option<usize>,
    /// Side length of the square grid.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value = "feedback", value_parser = parse_noise_mode)]
    noise_mode: NoiseMode,
    /// Omit the initial placement, leaving `steps` snapshots per trajectory.
    #[arg(long)]
    drop_initial: bool,
    /// Patterns to cycle through (default: all six).
    #[arg(long, value_delimiter = ',', value_parser = parse_pattern)]
    pattern: Vec<Pattern>,
    /// Output file (default: <model>.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Representation {
    Histogram,
    Alignment,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisconnectedArg {
    Drop,
    Count,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    Auto,
    Never,
    Always,
}

#[derive(Args)]
struct ReprArgs {
    #[arg(long, value_enum, default_value = "histogram")]
    representation: Representation,
    /// Histogram handling of node pairs without a path.
    #[arg(long, value_enum, default_value = "drop")]
    disconnected: DisconnectedArg,
    #[arg(long, default_value_t = 1.0)]
    mismatch: f64,
    #[arg(long, default_value_t = 0.5)]
    gap_open: f64,
    #[arg(long, default_value_t = 0.5)]
    gap_extend: f64,
}

impl ReprArgs {
    fn costs(&self) -> AlignmentCosts {
        AlignmentCosts {
            mismatch: self.mismatch,
            gap_open: self.gap_open,
            gap_extend: self.gap_extend,
            ..AlignmentCosts::default()
        }
    }

    fn problem(&self, data: &Path) -> Result<Problem> {
        let d = load_dataset(data).with_context(|| format!("loading {}", data.display()))?;
        let problems = graphpred::graph::validate_dataset(&d);
        if !problems.is_empty() {
            bail!("invalid dataset {}:\n  {}", data.display(), problems.join("\n  "));
        }
        Ok(match self.representation {
            Representation::Histogram => Problem::from_histograms_with(&d, self.disconnected.into())?,
            Representation::Alignment => Problem::from_alignment(&d, &self.costs())?,
        })
    }
}

impl From<DisconnectedArg> for Disconnected {
    fn from(a: DisconnectedArg) -> Self {
        match a {
            DisconnectedArg::Drop => Disconnected::Drop,
            DisconnectedArg::Count => Disconnected::Count,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset file.
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    data: Option<PathBuf>,
    /// Precomputed distance matrix CSV, with --lengths.
    #[arg(long, requires = "lengths")]
    matrix: Option<PathBuf>,
    /// Trajectory lengths of the matrix rows, in order.
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<usize>,
    #[command(flatten)]
    repr: ReprArgs,
    #[arg(long, value_delimiter = ',', default_value = "identity,1nn,kr,gpr,rbcm")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Outer folds evaluated in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "auto")]
    correction: CorrectionArg,
    /// Fix ψ to this multiple of d̄ instead of searching it.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Override the rBCM cluster count.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long, conflicts_with = "sequences", required_unless_present = "sequences")]
    data: Option<PathBuf>,
    /// LabeledSequence file, compared by alignment.
    #[arg(long)]
    sequences: Option<PathBuf>,
    #[command(flatten)]
    repr: ReprArgs,
    /// RBF bandwidth as a multiple of d̄.
    #[arg(long, default_value_t = 0.3)]
    bandwidth: f64,
    /// Report the smallest eigenvalue of the similarity matrix.
    #[arg(long)]
    check_psd: bool,
    #[arg(long, default_value = "matrices")]
    out: PathBuf,
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    Pattern::parse(s).map_err(|e| e.to_string())
}

fn parse_noise_mode(s: &str) -> Result<NoiseMode, String> {
    NoiseMode::parse(s).map_err(|e| e.to_string())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let (dataset, default_out) = match a.model {
        Model::Ba => {
            let p = BaParams {
                m0: a.m0.expect("required by clap"),
                k: a.k.expect("required by clap"),
                m: a.m.expect("required by clap"),
                seed: a.seed,
            };
            (generate_ba_dataset(&p, a.trajectories.unwrap_or(20))?, "ba.json")
        }
        Model::Gol => {
            let patterns = if a.pattern.is_empty() {
                Pattern::ALL.to_vec()
            } else {
                a.pattern
            };
            let p = GolParams {
                width: a.grid,
                height: a.grid,
                pattern: patterns[0],
                steps: a.steps,
                noise_rate: a.noise,
                noise_mode: a.noise_mode,
                seed: a.seed,
            };
            (
                generate_gol_dataset(&p, &patterns, a.trajectories.unwrap_or(30), a.drop_initial)?,
                "gol.json",
            )
        }
    };
    let out = a.out.unwrap_or_else(|| default_out.into());
    save_dataset(&dataset, &out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {}: {} snapshots in {} trajectories",
        out.display(),
        dataset.snapshot_count(),
        dataset.trajectories.len()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let problem = match (&a.data, &a.matrix) {
        (Some(data), _) => a.repr.problem(data)?,
        (None, Some(matrix)) => {
            let d = read_matrix_csv(matrix, Role::Dissimilarity)
                .with_context(|| format!("reading {}", matrix.display()))?;
            let ids = (0..a.lengths.len()).map(|j| format!("t{j}")).collect();
            Problem::new(d, a.lengths.clone(), ids)?
        }
        (None, None) => unreachable!("clap requires --data or --matrix"),
    };
    let cfg = EvalConfig {
        trials: a.trials,
        seed: a.seed,
        jobs: a.jobs.max(1),
        correction: match a.correction {
            CorrectionArg::Auto => CorrectionMode::Auto,
            CorrectionArg::Never => CorrectionMode::Never,
            CorrectionArg::Always => CorrectionMode::Always,
        },
        fixed_bandwidth: a.bandwidth,
        clusters: a.clusters,
        ..EvalConfig::default()
    };
    let mut methods = a.methods.clone();
    methods.dedup();
    let mut results = Vec::new();
    for m in methods {
        log::info!("evaluating {m} on {} trajectories", problem.n_trajectories());
        results.push(loo_cv(&problem, m, &cfg).with_context(|| format!("evaluating {m}"))?);
    }

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let table = report_table(&results);
    write(&a.out.join("results.csv"), &results_csv(&results))?;
    write(&a.out.join("summary.txt"), &table.to_text())?;
    write(&a.out.join("summary.csv"), &table.to_csv())?;
    let mut tests = String::from("method_a,method_b,n,w_plus,p_value\n");
    for (x, y, w) in pairwise_wilcoxon(&results)? {
        tests.push_str(&format!("{x},{y},{},{},{}\n", w.n, w.w_plus, w.p_value));
    }
    write(&a.out.join("wilcoxon.csv"), &tests)?;
    print!("{}", table.to_text());
    Ok(())
}

fn matrix(a: MatrixArgs) -> Result<()> {
    let (distances, ids) = match (&a.data, &a.sequences) {
        (Some(data), _) => {
            let p = a.repr.problem(data)?;
            let ids: Vec<String> = p
                .trajectory_ids
                .iter()
                .zip(&p.lengths)
                .flat_map(|(id, &len)| (0..len).map(move |s| format!("{id}/{s}")))
                .collect();
            (p.distances, ids)
        }
        (None, Some(path)) => {
            let seqs = load_sequences(path).with_context(|| format!("loading {}", path.display()))?;
            let ids = seqs.iter().map(|s: &LabeledSequence| s.id.clone()).collect();
            (alignment_distance_matrix(&seqs, &a.repr.costs())?, ids)
        }
        (None, None) => unreachable!("clap requires --data or --sequences"),
    };
    let all: Vec<usize> = (0..distances.n()).collect();
    let mean = distances.off_diagonal_mean(&all);
    if mean.is_nan() || mean <= 0.0 {
        bail!("all distances are zero; cannot normalize");
    }
    let similarity = rbf_matrix(&distances.scaled(1.0 / mean), a.bandwidth)?;
    let (min_eig, max_abs) = spectrum_bounds(&similarity);
    let needs_correction = min_eig < -1e-8 * max_abs;
    let kernel = if needs_correction {
        eigenvalue_correct_clip(&similarity)
    } else {
        SquareMatrix::new(Role::Kernel, similarity.data.clone())?
    };

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_matrix_csv(&distances, a.out.join("distance.csv"))?;
    write_matrix_csv(&similarity, a.out.join("similarity.csv"))?;
    write_matrix_csv(&kernel, a.out.join("kernel.csv"))?;
    let meta = serde_json::json!({
        "mean_distance": mean,
        "bandwidth": a.bandwidth * mean,
        "min_eigenvalue": min_eig,
        "max_abs_eigenvalue": max_abs,
        "corrected": needs_correction,
        "ids": ids,
    });
    write(&a.out.join("meta.json"), &serde_json::to_string_pretty(&meta)?)?;
    println!(
        "wrote {}x{} matrices to {} (mean distance {mean:.6})",
        distances.n(),
        distances.n(),
        a.out.display()
    );
    if a.check_psd {
        println!(
            "min eigenvalue {min_eig:.3e} (max |eigenvalue| {max_abs:.3e}): {}",
            if needs_correction {
                "correction applied"
            } else {
                "no correction needed"
            }
        );
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Matrix(a) => matrix(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
