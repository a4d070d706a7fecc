//! Spec-driven experiment sweeps: labeling ratios × trials, with optional
//! corruption and hyperparameter selection, written as `report.json` and
//! `trials.csv`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gsr_core::data::io::{read_graph, read_matrix};
use gsr_core::data::rng::{stream_rng, Stream};
use gsr_core::data::{
    build_knn_graph, corrupt_labels, sample_mask, synth_instance, FeatureTable, GraphBuildSpec,
    LabelKind, SyntheticSpec,
};
use gsr_core::solvers::SolverConfig;
use gsr_core::{normalize_shift, GraphShift, IndexMask};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, GridSpec, DEFAULT_SPLIT};
use crate::error::{ExperimentError, Result, StageExt};
use crate::metrics::{mean_metrics, quantize, score_entries, Metrics, TaskKind};
use crate::opinions::{combine_opinions, label_accuracy, synth_experts, CombineMethod, ExpertSpec};
use crate::solve::{solve, SolverId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Inpaint,
    Complete,
    Detect,
    RobustInpaint,
    CombineOpinions,
}

impl Task {
    pub fn default_solver(self) -> SolverId {
        match self {
            Task::Inpaint => SolverId::Gtvr,
            Task::Complete => SolverId::Gmcr,
            Task::Detect => SolverId::Anomaly,
            Task::RobustInpaint => SolverId::Rgtvr,
            Task::CombineOpinions => SolverId::Gmcr,
        }
    }

    /// Tasks that see every measurement; their ratio list must be `[1]`.
    fn uses_full_data(self) -> bool {
        matches!(self, Task::Detect | Task::CombineOpinions)
    }
}

/// Graph for synthetic signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSource {
    /// k-nearest-neighbor graph over uniform random points in `[0, 1]^dims`.
    Knn {
        dims: usize,
        #[serde(default)]
        build: GraphBuildSpec,
        #[serde(default)]
        seed: u64,
    },
    /// Directed cycle.
    Cycle,
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    /// Trial `k` draws the signal with seed `signal.seed + k`.
    Synthetic {
        graph: GraphSource,
        signal: SyntheticSpec,
    },
    /// Measurements and, optionally, the ground truth. Without a truth file
    /// the measurements are scored against themselves.
    Files {
        graph: PathBuf,
        measurements: PathBuf,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
    /// Trial `k` draws the instance with seed `experts.seed + k`.
    Experts { experts: ExpertSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: Task,
    pub data: DataSource,
    #[serde(default)]
    pub kind: TaskKind,
    /// Defaults to the task's usual solver.
    #[serde(default)]
    pub solver: Option<SolverId>,
    #[serde(default)]
    pub combine: CombineMethod,
    #[serde(default)]
    pub config: SolverConfig,
    /// Optional grid around `config`, searched by cross-validation or, with
    /// `oracle_select`, against the ground truth.
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_split")]
    pub cv_split: f64,
    /// Select grid points by their score against the ground truth. Reports
    /// label such runs `oracle`.
    #[serde(default)]
    pub oracle_select: bool,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    /// Fraction of accessible measurements to corrupt.
    #[serde(default)]
    pub corruption: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Record wall-clock times; off by default so reports are reproducible.
    #[serde(default)]
    pub record_timing: bool,
    /// Also write every objective trace to `traces.csv`.
    #[serde(default)]
    pub write_traces: bool,
}

fn default_split() -> f64 {
    DEFAULT_SPLIT
}

fn default_ratios() -> Vec<f64> {
    vec![1.0]
}

fn default_trials() -> usize {
    1
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn solver(&self) -> SolverId {
        self.solver.unwrap_or(self.task.default_solver())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.ratios.is_empty() {
            return bad("ratio list is empty".into());
        }
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("ratio {r} outside (0, 1]"));
        }
        if self.task.uses_full_data() && self.ratios.iter().any(|r| *r != 1.0) {
            return bad(format!(
                "{:?} uses all measurements; ratios must be [1]",
                self.task
            ));
        }
        if !(0.0..1.0).contains(&self.corruption) {
            return bad(format!("corruption fraction {}", self.corruption));
        }
        if !(self.cv_split > 0.0 && self.cv_split < 1.0) {
            return bad(format!("cv_split {}", self.cv_split));
        }
        let experts = matches!(self.data, DataSource::Experts { .. });
        if experts != (self.task == Task::CombineOpinions) {
            return bad("expert data goes with the combine-opinions task only".into());
        }
        if !self.grid.is_empty() && self.task.uses_full_data() && !self.oracle_select {
            return bad(format!(
                "{:?} has no held-out data for cross-validation; use oracle_select",
                self.task
            ));
        }
        self.config
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        match &self.data {
            DataSource::Synthetic { graph, signal } => {
                signal
                    .validate()
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
                if let GraphSource::File { path } = graph {
                    require_file(path)?;
                }
                if let GraphSource::Knn { dims, .. } = graph {
                    if *dims == 0 {
                        return bad("knn graph needs dims >= 1".into());
                    }
                }
            }
            DataSource::Files {
                graph,
                measurements,
                truth,
            } => {
                require_file(graph)?;
                require_file(measurements)?;
                match truth {
                    Some(p) => require_file(p)?,
                    None if self.oracle_select => {
                        return bad("oracle_select needs a truth file".into());
                    }
                    None => {}
                }
            }
            DataSource::Experts { experts } => experts.validate()?,
        }
        Ok(())
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!(
            "missing file {}",
            path.display()
        )))
    }
}

/// How the solver weights of a trial were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Fixed,
    Cv,
    Oracle,
}

/// One row of `trials.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub ratio: f64,
    pub seed: u64,
    pub acc: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub final_objective: Option<f64>,
}

impl TrialRow {
    pub fn metrics(&self) -> Metrics {
        Metrics {
            acc: self.acc,
            mse: self.mse,
            rmse: self.rmse,
            mae: self.mae,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub ratio: f64,
    pub trials: usize,
    pub converged: usize,
    pub metrics: Metrics,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub version: String,
    pub task: Task,
    pub solver: String,
    pub selection: Selection,
    pub spec: ExperimentSpec,
    pub summary: Vec<RatioSummary>,
    pub overall: Metrics,
    pub all_converged: bool,
    /// Present when `write_traces` is set.
    pub traces_file: Option<String>,
    pub trials: Vec<TrialRow>,
    #[serde(skip)]
    pub traces: Vec<Vec<f64>>,
}

struct Prepared {
    graph: GraphShift,
    truth: DMatrix<f64>,
    t: DMatrix<f64>,
    /// True outliers, for detection.
    outliers: DMatrix<f64>,
}

/// k-nearest-neighbor graph over `n` uniform random points in `[0, 1]^dims`.
pub fn knn_graph(n: usize, dims: usize, build: &GraphBuildSpec, seed: u64) -> Result<GraphShift> {
    let mut rng = stream_rng(seed, Stream::Graph);
    let points = DMatrix::from_fn(n, dims, |_, _| rng.random::<f64>());
    let table = FeatureTable::new(points).stage("graph")?;
    build_knn_graph(&table, build).stage("graph")
}

/// Reads a graph file and scales it to unit spectral radius if it is not
/// normalized already.
pub fn load_graph(path: &Path) -> Result<GraphShift> {
    let a = read_graph(path).stage("graph")?;
    if a.is_normalized() {
        return Ok(a);
    }
    log::info!("normalizing graph {}", path.display());
    normalize_shift(&a).stage("graph")
}

fn fixed_graph(data: &DataSource) -> Result<Option<GraphShift>> {
    match data {
        DataSource::Synthetic { graph, signal } => Ok(Some(match graph {
            GraphSource::Knn { dims, build, seed } => knn_graph(signal.nodes, *dims, build, *seed)?,
            GraphSource::Cycle => GraphShift::cycle(signal.nodes),
            GraphSource::File { path } => load_graph(path)?,
        })),
        DataSource::Files { graph, .. } => Ok(Some(load_graph(graph)?)),
        DataSource::Experts { .. } => Ok(None),
    }
}

fn prepare(spec: &ExperimentSpec, graph: Option<&GraphShift>, trial: usize) -> Result<Prepared> {
    let mut p = match &spec.data {
        DataSource::Synthetic { signal, .. } => {
            let graph = graph.expect("synthetic data has a graph").clone();
            let s = SyntheticSpec {
                seed: signal.seed.wrapping_add(trial as u64),
                ..signal.clone()
            };
            let inst = synth_instance(&s, &graph).stage("synthetic data")?;
            Prepared {
                graph,
                truth: inst.x0,
                t: inst.t,
                outliers: inst.e,
            }
        }
        DataSource::Files {
            measurements,
            truth,
            ..
        } => {
            let graph = graph.expect("file data has a graph").clone();
            let t = read_matrix(measurements).stage("measurements")?;
            let truth = match truth {
                Some(path) => read_matrix(path).stage("truth")?,
                None => t.clone(),
            };
            if truth.shape() != t.shape() || t.nrows() != graph.size() {
                return Err(ExperimentError::Data(format!(
                    "measurements {:?}, truth {:?}, graph with {} nodes",
                    t.shape(),
                    truth.shape(),
                    graph.size()
                )));
            }
            Prepared {
                outliers: &t - &truth,
                graph,
                truth,
                t,
            }
        }
        DataSource::Experts { experts } => {
            let s = ExpertSpec {
                seed: experts.seed.wrapping_add(trial as u64),
                ..experts.clone()
            };
            let inst = synth_experts(&s)?;
            let n = inst.truth.len();
            Prepared {
                graph: inst.graph,
                truth: DMatrix::from_column_slice(n, 1, inst.truth.as_slice()),
                outliers: DMatrix::zeros(n, s.experts),
                t: inst.opinions,
            }
        }
    };
    if spec.kind == TaskKind::Classification && spec.task != Task::CombineOpinions {
        p.truth = p.truth.map(quantize);
        p.t = p.t.map(quantize);
    }
    Ok(p)
}

struct Estimate {
    /// Compared against the truth on the scored entries.
    value: DMatrix<f64>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn estimate(
    spec: &ExperimentSpec,
    p: &Prepared,
    mask: &IndexMask,
    t: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<Estimate> {
    if spec.task == Task::CombineOpinions {
        let c = combine_opinions(t, &p.graph, spec.combine, cfg)?;
        let n = c.labels.len();
        return Ok(Estimate {
            value: DMatrix::from_column_slice(n, 1, c.labels.as_slice()),
            iterations: c.iterations,
            converged: c.converged,
            trace: c.trace,
        });
    }
    let s = solve(spec.solver(), t, mask, &p.graph, cfg)?;
    let value = if spec.task == Task::Detect {
        s.e.unwrap_or_else(|| t - &s.x)
    } else {
        s.x
    };
    Ok(Estimate {
        value,
        iterations: s.iterations,
        converged: s.converged,
        trace: s.trace,
    })
}

fn scored_entries(
    spec: &ExperimentSpec,
    mask: &IndexMask,
    shape: (usize, usize),
) -> Vec<(usize, usize)> {
    let hidden: Vec<(usize, usize)> = if spec.task.uses_full_data() {
        Vec::new()
    } else {
        mask.complement_entries().collect()
    };
    if hidden.is_empty() {
        (0..shape.1)
            .flat_map(|j| (0..shape.0).map(move |i| (i, j)))
            .collect()
    } else {
        hidden
    }
}

fn score(
    spec: &ExperimentSpec,
    p: &Prepared,
    est: &Estimate,
    entries: &[(usize, usize)],
) -> Result<Metrics> {
    match spec.task {
        Task::Detect => score_entries(&p.outliers, &est.value, entries, TaskKind::Regression),
        Task::CombineOpinions => {
            let mut m = score_entries(&p.truth, &est.value, entries, TaskKind::Classification)?;
            m.acc = label_accuracy(&p.truth.column(0).into(), &est.value.column(0).into());
            Ok(m)
        }
        _ => score_entries(&p.truth, &est.value, entries, spec.kind),
    }
}

struct TrialOutcome {
    row: TrialRow,
    trace: Vec<f64>,
}

fn run_trial(
    spec: &ExperimentSpec,
    graph: Option<&GraphShift>,
    grid: &[SolverConfig],
    ratio: f64,
    trial: usize,
    index: usize,
) -> Result<TrialOutcome> {
    let start = Instant::now();
    let seed = spec.seed.wrapping_add(index as u64);
    let p = prepare(spec, graph, trial)?;
    let (n, l) = p.t.shape();
    let mask = if ratio < 1.0 {
        sample_mask(n, l, ratio, seed).stage("mask")?
    } else {
        IndexMask::full(n, l)
    };
    let t = if spec.corruption > 0.0 {
        let kind = match spec.kind {
            TaskKind::Classification => LabelKind::Classification,
            TaskKind::Regression => LabelKind::Regression,
        };
        corrupt_labels(&p.t, &mask, spec.corruption, kind, seed)
            .stage("corruption")?
            .t
    } else {
        p.t.clone()
    };
    let entries = scored_entries(
        spec,
        &mask,
        if spec.task == Task::CombineOpinions {
            (n, 1)
        } else {
            (n, l)
        },
    );

    let cfg = if grid.len() == 1 {
        grid[0].clone()
    } else if spec.oracle_select {
        let scores = grid
            .par_iter()
            .map(|cfg| {
                let est = estimate(spec, &p, &mask, &t, cfg)?;
                let m = score(spec, &p, &est, &entries)?;
                Ok(if spec.task == Task::CombineOpinions {
                    -m.acc
                } else {
                    m.mse
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s < scores[best] {
                best = k;
            }
        }
        grid[best].clone()
    } else {
        cross_validate(
            &t,
            &mask,
            &p.graph,
            spec.solver(),
            grid,
            spec.cv_split,
            seed,
        )?
        .config
    };

    let est = estimate(spec, &p, &mask, &t, &cfg)?;
    let m = score(spec, &p, &est, &entries)?;
    let wall_ms = if spec.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(TrialOutcome {
        row: TrialRow {
            trial,
            ratio,
            seed,
            acc: m.acc,
            mse: m.mse,
            rmse: m.rmse,
            mae: m.mae,
            iterations: est.iterations,
            converged: est.converged,
            wall_ms,
            alpha: cfg.alpha,
            beta: cfg.beta,
            gamma: cfg.gamma,
            epsilon: cfg.epsilon,
            final_objective: est.trace.last().copied(),
        },
        trace: est.trace,
    })
}

/// Runs every ratio × trial combination. Trial `k` of ratio index `r` uses
/// seed `spec.seed + r · trials + k` for its mask, corruption and
/// validation split; its data depend on `k` only, so all ratios see the same
/// signals. Trials run in parallel and are reported in index order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricReport> {
    spec.validate()?;
    let graph = fixed_graph(&spec.data)?;
    let grid = spec.grid.expand(&spec.config);
    let selection = match (grid.len(), spec.oracle_select) {
        (1, _) => Selection::Fixed,
        (_, true) => Selection::Oracle,
        _ => Selection::Cv,
    };
    let jobs: Vec<(usize, f64, usize)> = spec
        .ratios
        .iter()
        .enumerate()
        .flat_map(|(r, &ratio)| (0..spec.trials).map(move |k| (r * spec.trials + k, ratio, k)))
        .collect();
    let mut outcomes = jobs
        .par_iter()
        .map(|&(index, ratio, trial)| {
            run_trial(spec, graph.as_ref(), &grid, ratio, trial, index).map(|o| (index, o))
        })
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|(index, _)| *index);

    let (rows, traces): (Vec<TrialRow>, Vec<Vec<f64>>) =
        outcomes.into_iter().map(|(_, o)| (o.row, o.trace)).unzip();
    let summary = spec
        .ratios
        .iter()
        .enumerate()
        .map(|(r, &ratio)| {
            let part = &rows[r * spec.trials..(r + 1) * spec.trials];
            let metrics: Vec<Metrics> = part.iter().map(TrialRow::metrics).collect();
            RatioSummary {
                ratio,
                trials: part.len(),
                converged: part.iter().filter(|t| t.converged).count(),
                metrics: mean_metrics(&metrics),
                mean_iterations: part.iter().map(|t| t.iterations as f64).sum::<f64>()
                    / part.len() as f64,
            }
        })
        .collect();
    let all: Vec<Metrics> = rows.iter().map(TrialRow::metrics).collect();
    let all_converged = rows.iter().all(|r| r.converged);
    let solver = if spec.task == Task::CombineOpinions {
        spec.combine.name()
    } else {
        spec.solver().name()
    };
    Ok(MetricReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: spec.task,
        solver: solver.to_string(),
        selection,
        spec: spec.clone(),
        summary,
        overall: mean_metrics(&all),
        all_converged,
        traces_file: spec.write_traces.then(|| TRACES_FILE.to_string()),
        trials: rows,
        traces,
    })
}

pub const REPORT_FILE: &str = "report.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRACES_FILE: &str = "traces.csv";

/// Writes `report.json`, `trials.csv` and, if requested, `traces.csv`.
pub fn write_report(report: &MetricReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join(REPORT_FILE),
        serde_json::to_string_pretty(report)? + "\n",
    )?;
    let mut w = csv::Writer::from_path(dir.join(TRIALS_FILE))?;
    for row in &report.trials {
        w.serialize(row)?;
    }
    w.flush()?;
    if report.traces_file.is_some() {
        let mut w = csv::Writer::from_path(dir.join(TRACES_FILE))?;
        w.write_record(["row", "iteration", "objective"])?;
        for (k, trace) in report.traces.iter().enumerate() {
            for (it, v) in trace.iter().enumerate() {
                w.write_record([k.to_string(), (it + 1).to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsr_core::data::SmoothRecipe;

    fn synthetic(task: Task) -> ExperimentSpec {
        ExperimentSpec {
            task,
            data: DataSource::Synthetic {
                graph: GraphSource::Knn {
                    dims: 2,
                    build: GraphBuildSpec::default(),
                    seed: 1,
                },
                signal: SyntheticSpec {
                    nodes: 30,
                    signals: 1,
                    recipe: SmoothRecipe::Eigen { modes: Some(3) },
                    ..SyntheticSpec::default()
                },
            },
            kind: TaskKind::Regression,
            solver: None,
            combine: CombineMethod::default(),
            config: SolverConfig::with_weights(1.0, 0.0, 0.0),
            grid: GridSpec::default(),
            cv_split: DEFAULT_SPLIT,
            oracle_select: false,
            ratios: vec![1.0],
            corruption: 0.0,
            trials: 1,
            seed: 0,
            out: None,
            record_timing: false,
            write_traces: false,
        }
    }

    #[test]
    fn full_information_is_perfect() {
        let mut spec = synthetic(Task::Inpaint);
        spec.solver = Some(SolverId::Gtvm);
        let report = run_experiment(&spec).unwrap();
        let row = &report.trials[0];
        assert_eq!(row.mse, 0.0);
        assert_eq!(row.acc, 1.0);
        assert!(report.all_converged);
    }

    #[test]
    fn rows_are_ordered_and_consistent() {
        let mut spec = synthetic(Task::Inpaint);
        spec.ratios = vec![0.3, 0.6];
        spec.trials = 3;
        spec.grid.alpha = vec![0.1, 1.0];
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.selection, Selection::Cv);
        assert_eq!(report.trials.len(), 6);
        for (k, row) in report.trials.iter().enumerate() {
            assert_eq!(row.trial, k % 3);
            assert_eq!(row.seed, k as u64);
            assert!((row.rmse * row.rmse - row.mse).abs() <= 1e-12 * (1.0 + row.mse));
            assert!(row.mae <= row.rmse + 1e-15);
        }
        for s in &report.summary {
            assert!(
                (s.metrics.rmse * s.metrics.rmse - s.metrics.mse).abs()
                    <= 1e-12 * (1.0 + s.metrics.mse)
            );
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let mut spec = synthetic(Task::Complete);
        spec.data = DataSource::Synthetic {
            graph: GraphSource::Cycle,
            signal: SyntheticSpec {
                nodes: 12,
                signals: 4,
                noise_std: 0.05,
                ..SyntheticSpec::default()
            },
        };
        spec.config = SolverConfig::with_weights(1.0, 0.1, 0.0);
        spec.ratios = vec![0.5];
        spec.trials = 2;
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = synthetic(Task::Inpaint);
        spec.trials = 0;
        assert_eq!(spec.validate().unwrap_err().exit_code(), 2);
        let mut spec = synthetic(Task::Inpaint);
        spec.ratios = vec![0.0];
        assert!(spec.validate().is_err());
        let mut spec = synthetic(Task::Detect);
        spec.ratios = vec![0.5];
        assert!(spec.validate().is_err());
        let mut spec = synthetic(Task::CombineOpinions);
        assert!(spec.validate().is_err());
        spec.data = DataSource::Experts {
            experts: ExpertSpec::default(),
        };
        spec.grid.alpha = vec![1.0, 2.0];
        assert!(spec.validate().is_err());
        spec.oracle_select = true;
        spec.validate().unwrap();
        let mut spec = synthetic(Task::Inpaint);
        spec.data = DataSource::Files {
            graph: PathBuf::from("/nonexistent/graph.csv"),
            measurements: PathBuf::from("/nonexistent/t.csv"),
            truth: None,
        };
        assert!(matches!(spec.validate(), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{
            "task": "robust-inpaint",
            "data": {"source": "synthetic",
                     "graph": {"kind": "knn", "dims": 2, "build": {"k": 6}},
                     "signal": {"nodes": 40, "recipe": {"kind": "eigen", "modes": 3}}},
            "config": {"alpha": 1.0, "gamma": 0.5},
            "ratios": [0.2, 0.4],
            "corruption": 0.3,
            "trials": 2,
            "seed": 7
        }"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.solver(), SolverId::Rgtvr);
        assert_eq!(spec.config.gamma, 0.5);
        let again = ExperimentSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let err = ExperimentSpec::from_json(
            r#"{"task": "inpaint", "data": {"source": "experts", "experts": {}}, "bogus": 1}"#,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
