use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gsr_core::data::io::{
    read_features, read_mask, read_matrix, write_bundle, write_graph_dense, write_graph_edges,
    write_matrix,
};
use gsr_core::data::{
    build_knn_graph, sample_mask, synth_instance, GraphBuildSpec, Metric, Normalization,
    SmoothRecipe, SyntheticSpec,
};
use gsr_core::solvers::{anomaly_detect_constrained, SolverConfig};
use gsr_core::{GraphShift, IndexMask};
use gsr_experiment::error::{ExperimentError, EXIT_NONCONVERGENCE};
use gsr_experiment::metrics::score_entries;
use gsr_experiment::runner::{load_graph, GraphSource, RatioSummary};
use gsr_experiment::{
    combine_opinions, run_experiment, solve, write_report, CombineMethod, ExperimentSpec, SolverId,
    TaskKind,
};
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(
    name = "gsr",
    version,
    about = "Graph signal recovery by graph total variation"
)]
struct Cli {
    /// Seed for synthetic data and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file: solver configuration for the solver commands, experiment
    /// spec for `run`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a k-nearest-neighbor graph from a feature table.
    BuildGraph(BuildGraphArgs),
    /// Draw a synthetic instance and write it as a bundle directory.
    Synth(SynthArgs),
    /// Recover missing entries of graph signals.
    Inpaint(InpaintArgs),
    /// Complete a graph signal matrix.
    Complete(CompleteArgs),
    /// Detect sparse outliers in graph signals.
    Detect(DetectArgs),
    /// Inpaint with outliers among the measurements.
    Robust(RobustArgs),
    /// Combine expert opinions into labels.
    Combine(CombineArgs),
    /// Score an estimate against the ground truth.
    Eval(EvalArgs),
    /// Run an experiment spec.
    Run(RunArgs),
}

#[derive(Args)]
struct BuildGraphArgs {
    /// Feature CSV, one row per node; empty cells are missing.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::L2)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = NormArg::Row)]
    normalization: NormArg,
    #[arg(long)]
    symmetrize: bool,
    /// Write an edge list instead of a dense matrix.
    #[arg(long)]
    edges: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L2,
    L1,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Row,
    Column,
    None,
}

#[derive(Args)]
struct SynthArgs {
    /// Graph file; without it a knn graph over random points is built.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    signals: usize,
    /// Number of smooth eigenmodes.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Outliers per column.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    /// Fraction of accessible entries in the written mask.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    graph: PathBuf,
    /// Measurement matrix (CSV).
    #[arg(long)]
    signal: PathBuf,
    /// Accessible entries; all entries if omitted.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct Weights {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct InpaintArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = InpaintMethod::Gtvr)]
    method: InpaintMethod,
    #[command(flatten)]
    weights: Weights,
}

#[derive(Clone, Copy, ValueEnum)]
enum InpaintMethod {
    Gtvm,
    Gtvr,
    Constrained,
    Admm,
    Lapr,
}

#[derive(Args)]
struct CompleteArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = CompleteMethod::Gmcr)]
    method: CompleteMethod,
    #[command(flatten)]
    weights: Weights,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompleteMethod {
    Gmcm,
    Gmcr,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    /// Sparsity weight.
    #[arg(long, conflicts_with = "eta")]
    beta: Option<f64>,
    /// Smoothness budget: `S₂(t − e) ≤ eta²` (single signal only).
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct RobustArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    weights: Weights,
}

#[derive(Args)]
struct CombineArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Items x experts matrix with entries ±1.
    #[arg(long)]
    opinions: PathBuf,
    #[arg(long, value_enum, default_value_t = CombineArg::GmcrDenoise)]
    method: CombineArg,
    #[command(flatten)]
    weights: Weights,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    Avg,
    GtvrDenoise,
    GmcrDenoise,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// Score only the entries outside this mask.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Regression)]
    kind: KindArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Classification,
    Regression,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (alternative to --config).
    spec: Option<PathBuf>,
}

fn solver_config(cli: &Cli, w: &Weights) -> anyhow::Result<SolverConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?
        }
        None => SolverConfig::default(),
    };
    if let Some(v) = w.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = w.beta {
        cfg.beta = v;
    }
    if let Some(v) = w.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = w.epsilon {
        cfg.epsilon = v;
    }
    cfg.validate()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(cfg)
}

fn out_path(cli: &Cli) -> anyhow::Result<&Path> {
    cli.out.as_deref().context("--out is required")
}

fn load(inputs: &Inputs) -> anyhow::Result<(GraphShift, DMatrix<f64>, IndexMask)> {
    let a = load_graph(&inputs.graph)?;
    let t = read_matrix(&inputs.signal).map_err(ExperimentError::from)?;
    let mask = match &inputs.mask {
        Some(p) => read_mask(p, t.nrows(), t.ncols()).map_err(ExperimentError::from)?,
        None => IndexMask::full(t.nrows(), t.ncols()),
    };
    Ok((a, t, mask))
}

fn run_solver(cli: &Cli, id: SolverId, inputs: &Inputs, w: &Weights) -> anyhow::Result<bool> {
    let cfg = solver_config(cli, w)?;
    let (a, t, mask) = load(inputs)?;
    let s = solve(id, &t, &mask, &a, &cfg)?;
    let out = out_path(cli)?;
    write_matrix(out, &s.x).map_err(ExperimentError::from)?;
    if let Some(e) = &s.e {
        write_matrix(&sibling(out, "outliers"), e).map_err(ExperimentError::from)?;
    }
    log::info!(
        "{}: {} iterations, converged = {}",
        id.name(),
        s.iterations,
        s.converged
    );
    Ok(s.converged)
}

/// `dir/name.csv` → `dir/name.<tag>.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn print_summary(summary: &[RatioSummary]) {
    println!("ratio\ttrials\tacc\tmse\trmse\tmae");
    for s in summary {
        let m = &s.metrics;
        println!(
            "{}\t{}\t{:.4}\t{:.6}\t{:.6}\t{:.6}",
            s.ratio, s.trials, m.acc, m.mse, m.rmse, m.mae
        );
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::BuildGraph(args) => {
            let table = read_features(&args.features).map_err(ExperimentError::from)?;
            let spec = GraphBuildSpec {
                k: args.k,
                metric: match args.metric {
                    MetricArg::L2 => Metric::L2,
                    MetricArg::L1 => Metric::L1,
                },
                normalization: match args.normalization {
                    NormArg::Row => Normalization::Row,
                    NormArg::Column => Normalization::Column,
                    NormArg::None => Normalization::None,
                },
                symmetrize: args.symmetrize,
                ..GraphBuildSpec::default()
            };
            let a = build_knn_graph(&table, &spec).map_err(ExperimentError::from)?;
            let out = out_path(cli)?;
            if args.edges {
                write_graph_edges(out, &a).map_err(ExperimentError::from)?;
            } else {
                write_graph_dense(out, &a).map_err(ExperimentError::from)?;
            }
        }
        Command::Synth(args) => {
            let signal = SyntheticSpec {
                nodes: args.nodes,
                signals: args.signals,
                recipe: SmoothRecipe::Eigen { modes: args.modes },
                noise_std: args.noise,
                outliers: args.outliers,
                seed: cli.seed,
                ..SyntheticSpec::default()
            };
            let source = match &args.graph {
                Some(path) => GraphSource::File { path: path.clone() },
                None => GraphSource::Knn {
                    dims: 2,
                    build: GraphBuildSpec::default(),
                    seed: cli.seed,
                },
            };
            let a = match &source {
                GraphSource::File { path } => load_graph(path)?,
                GraphSource::Knn { dims, build, seed } => {
                    gsr_experiment::runner::knn_graph(args.nodes, *dims, build, *seed)?
                }
                GraphSource::Cycle => GraphShift::cycle(args.nodes),
            };
            let signal = SyntheticSpec {
                nodes: a.size(),
                ..signal
            };
            let inst = synth_instance(&signal, &a).map_err(ExperimentError::from)?;
            let mask = if args.ratio < 1.0 {
                sample_mask(signal.nodes, signal.signals, args.ratio, cli.seed)
                    .map_err(ExperimentError::from)?
            } else {
                IndexMask::full(signal.nodes, signal.signals)
            };
            let echo =
                serde_json::json!({ "graph": source, "signal": signal, "ratio": args.ratio });
            write_bundle(out_path(cli)?, &a, &inst, &mask, &echo).map_err(ExperimentError::from)?;
        }
        Command::Inpaint(args) => {
            let id = match args.method {
                InpaintMethod::Gtvm => SolverId::Gtvm,
                InpaintMethod::Gtvr => SolverId::Gtvr,
                InpaintMethod::Constrained => SolverId::GtvConstrained,
                InpaintMethod::Admm => SolverId::Admm,
                InpaintMethod::Lapr => SolverId::Lapr,
            };
            return run_solver(cli, id, &args.inputs, &args.weights);
        }
        Command::Complete(args) => {
            let id = match args.method {
                CompleteMethod::Gmcm => SolverId::Gmcm,
                CompleteMethod::Gmcr => SolverId::Gmcr,
            };
            return run_solver(cli, id, &args.inputs, &args.weights);
        }
        Command::Robust(args) => {
            return run_solver(cli, SolverId::Rgtvr, &args.inputs, &args.weights)
        }
        Command::Detect(args) => {
            let weights = Weights {
                alpha: None,
                beta: args.beta,
                gamma: None,
                epsilon: None,
            };
            let cfg = solver_config(cli, &weights)?;
            let a = load_graph(&args.graph)?;
            let t = read_matrix(&args.signal).map_err(ExperimentError::from)?;
            let (x, e, converged) = match args.eta {
                Some(eta) => {
                    let r = anomaly_detect_constrained(&t, &a, eta, &cfg)
                        .map_err(ExperimentError::from)?;
                    (r.x, r.e, r.converged)
                }
                None => {
                    let s = solve(
                        SolverId::Anomaly,
                        &t,
                        &IndexMask::full(t.nrows(), t.ncols()),
                        &a,
                        &cfg,
                    )?;
                    let e = s.e.expect("detection returns outliers");
                    (s.x, e, s.converged)
                }
            };
            let out = out_path(cli)?;
            write_matrix(out, &e).map_err(ExperimentError::from)?;
            write_matrix(&sibling(out, "signal"), &x).map_err(ExperimentError::from)?;
            return Ok(converged);
        }
        Command::Combine(args) => {
            let cfg = solver_config(cli, &args.weights)?;
            let a = load_graph(&args.graph)?;
            let t = read_matrix(&args.opinions).map_err(ExperimentError::from)?;
            let method = match args.method {
                CombineArg::Avg => CombineMethod::Avg,
                CombineArg::GtvrDenoise => CombineMethod::GtvrDenoise,
                CombineArg::GmcrDenoise => CombineMethod::GmcrDenoise,
            };
            let c = combine_opinions(&t, &a, method, &cfg)?;
            let labels = DMatrix::from_column_slice(c.labels.len(), 1, c.labels.as_slice());
            write_matrix(out_path(cli)?, &labels).map_err(ExperimentError::from)?;
            return Ok(c.converged);
        }
        Command::Eval(args) => {
            let truth = read_matrix(&args.truth).map_err(ExperimentError::from)?;
            let est = read_matrix(&args.estimate).map_err(ExperimentError::from)?;
            let (n, l) = truth.shape();
            let entries: Vec<(usize, usize)> = match &args.mask {
                Some(p) => read_mask(p, n, l)
                    .map_err(ExperimentError::from)?
                    .complement_entries()
                    .collect(),
                None => (0..l).flat_map(|j| (0..n).map(move |i| (i, j))).collect(),
            };
            let kind = match args.kind {
                KindArg::Classification => TaskKind::Classification,
                KindArg::Regression => TaskKind::Regression,
            };
            let m = score_entries(&truth, &est, &entries, kind)?;
            let text = serde_json::to_string_pretty(&m)?;
            match &cli.out {
                Some(path) => fs::write(path, text + "\n")?,
                None => println!("{text}"),
            }
        }
        Command::Run(args) => {
            let path = args
                .spec
                .as_ref()
                .or(cli.config.as_ref())
                .context("run needs a spec file")?;
            let mut spec = ExperimentSpec::from_file(path)?;
            if cli.out.is_some() {
                spec.out = cli.out.clone();
            }
            let Some(dir) = spec.out.clone() else {
                bail!(ExperimentError::Config(
                    "no output directory (--out or spec.out)".into()
                ));
            };
            let report = run_experiment(&spec)?;
            write_report(&report, &dir)?;
            print_summary(&report.summary);
            return Ok(report.all_converged);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: a solver did not converge");
            ExitCode::from(EXIT_NONCONVERGENCE as u8)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<ExperimentError>()
                .map(ExperimentError::exit_code)
                .unwrap_or(3);
            ExitCode::from(code as u8)
        }
    }
}
