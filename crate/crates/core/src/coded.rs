//! Straggler-tolerant coded matrix-vector multiplication on an elastic pool.
//!
//! The rows of `A` are split into `F` tasks. Each task is cut into `L - E`
//! pieces and encoded into `N_max` shards with a real MDS generator; machine
//! `n` always computes shard `n - 1` of every task it holds. Because every task
//! is held by `L` machines, any `E` missing machines still leave `L - E`
//! shards per task, which is enough to decode. Joins and leaves only change
//! which tasks a machine holds, never the encoding.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{ElasticEngine, ElasticTrace, EngineError, Strategy};
use crate::tas::{MachineId, TaskAllocation};

#[derive(Debug, Error)]
pub enum CodedError {
    #[error("straggler tolerance E = {e} must be below L = {l}")]
    ToleranceTooLarge { e: usize, l: usize },
    #[error("N_max = {n_max} is below L = {l}")]
    TooFewShards { n_max: usize, l: usize },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("generator is not MDS: rows {0:?} are singular")]
    NotMds(Vec<usize>),
    #[error("allocation does not fit the job: {0}")]
    AllocationMismatch(String),
    #[error("machine {machine} has no shard (N_max = {n_max})")]
    LabelOutOfRange { machine: MachineId, n_max: usize },
    #[error("task {task} is unrecoverable: {received} of {needed} shards arrived")]
    Insufficient {
        task: usize,
        received: usize,
        needed: usize,
    },
    #[error("decoding system for task {0} is singular")]
    Singular(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// `N_max x k` real generator; any `k` rows are invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    matrix: DMatrix<f64>,
}

impl Generator {
    /// Vandermonde rows `(1, x_j, x_j², ..)` at points `x_j = 2j/(N_max+1) - 1`,
    /// `j = 1..=N_max`, spread evenly inside `(-1, 1)`.
    pub fn vandermonde(n_shards: usize, k: usize) -> Self {
        let matrix = DMatrix::from_fn(n_shards, k, |j, i| {
            let x = 2.0 * (j + 1) as f64 / (n_shards + 1) as f64 - 1.0;
            x.powi(i as i32)
        });
        Generator { matrix }
    }

    /// Custom generator, checked for the MDS property.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CodedError> {
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(CodedError::Dimensions("generator rows must be nonempty and equal length".into()));
        }
        let matrix = DMatrix::from_fn(rows.len(), k, |j, i| rows[j][i]);
        let generator = Generator { matrix };
        if let Some(bad) = generator.singular_subset() {
            return Err(CodedError::NotMds(bad));
        }
        Ok(generator)
    }

    pub fn n_shards(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of shards needed to decode a task.
    pub fn recovery_threshold(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn submatrix(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.matrix.ncols(), |r, c| self.matrix[(rows[r], c)])
    }

    fn subsets(&self) -> Vec<Vec<usize>> {
        let k = self.recovery_threshold();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(k);
        fn rec(n: usize, k: usize, from: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if current.len() == k {
                out.push(current.clone());
                return;
            }
            for i in from..n {
                current.push(i);
                rec(n, k, i + 1, current, out);
                current.pop();
            }
        }
        rec(self.n_shards(), k, 0, &mut current, &mut out);
        out
    }

    fn singular_subset(&self) -> Option<Vec<usize>> {
        self.subsets().into_iter().find(|rows| {
            let sv = self.submatrix(rows).singular_values();
            sv.min() <= 1e-12 * sv.max().max(1.0)
        })
    }

    /// Largest 2-norm condition number over all `k`-row subsets.
    pub fn worst_condition_number(&self) -> f64 {
        self.subsets()
            .iter()
            .map(|rows| {
                let sv = self.submatrix(rows).singular_values();
                sv.max() / sv.min()
            })
            .fold(0.0, f64::max)
    }
}

/// `A` after padding, partitioning and encoding.
#[derive(Debug, Clone)]
pub struct EncodedMatrix {
    original_rows: usize,
    n_tasks: usize,
    redundancy: usize,
    straggler_tolerance: usize,
    piece_rows: usize,
    generator: Generator,
    /// `shards[task][shard]`, each `piece_rows x cols`.
    shards: Vec<Vec<DMatrix<f64>>>,
}

/// Encodes `A` with the default Vandermonde generator.
pub fn encode_matrix(
    a: &DMatrix<f64>,
    n_tasks: usize,
    redundancy: usize,
    straggler_tolerance: usize,
    n_max: usize,
) -> Result<EncodedMatrix, CodedError> {
    if straggler_tolerance >= redundancy {
        return Err(CodedError::ToleranceTooLarge {
            e: straggler_tolerance,
            l: redundancy,
        });
    }
    if n_max < redundancy {
        return Err(CodedError::TooFewShards { n_max, l: redundancy });
    }
    let generator = Generator::vandermonde(n_max, redundancy - straggler_tolerance);
    encode_matrix_with(a, n_tasks, redundancy, straggler_tolerance, generator)
}

/// Encodes `A` with an explicit generator of `L - E` columns.
pub fn encode_matrix_with(
    a: &DMatrix<f64>,
    n_tasks: usize,
    redundancy: usize,
    straggler_tolerance: usize,
    generator: Generator,
) -> Result<EncodedMatrix, CodedError> {
    if straggler_tolerance >= redundancy {
        return Err(CodedError::ToleranceTooLarge {
            e: straggler_tolerance,
            l: redundancy,
        });
    }
    let k = redundancy - straggler_tolerance;
    if generator.recovery_threshold() != k {
        return Err(CodedError::Dimensions(format!(
            "generator has {} columns, expected L - E = {k}",
            generator.recovery_threshold()
        )));
    }
    if generator.n_shards() < redundancy {
        return Err(CodedError::TooFewShards {
            n_max: generator.n_shards(),
            l: redundancy,
        });
    }
    if n_tasks == 0 || a.nrows() == 0 {
        return Err(CodedError::Dimensions("empty matrix or zero tasks".into()));
    }
    let block = n_tasks * k;
    let padded_rows = a.nrows().div_ceil(block) * block;
    let piece_rows = padded_rows / block;
    let cols = a.ncols();
    let row = |r: usize, c: usize| if r < a.nrows() { a[(r, c)] } else { 0.0 };
    let shards = (0..n_tasks)
        .map(|task| {
            let pieces: Vec<DMatrix<f64>> = (0..k)
                .map(|p| {
                    let base = (task * k + p) * piece_rows;
                    DMatrix::from_fn(piece_rows, cols, |r, c| row(base + r, c))
                })
                .collect();
            (0..generator.n_shards())
                .map(|j| {
                    let mut shard = DMatrix::zeros(piece_rows, cols);
                    for (p, piece) in pieces.iter().enumerate() {
                        shard += piece * generator.matrix[(j, p)];
                    }
                    shard
                })
                .collect()
        })
        .collect();
    Ok(EncodedMatrix {
        original_rows: a.nrows(),
        n_tasks,
        redundancy,
        straggler_tolerance,
        piece_rows,
        generator,
        shards,
    })
}

/// One shard product returned by a worker.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtaskResult {
    pub task: usize,
    pub shard: usize,
    pub block: DVector<f64>,
}

impl EncodedMatrix {
    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_shards(&self) -> usize {
        self.generator.n_shards()
    }

    pub fn recovery_threshold(&self) -> usize {
        self.redundancy - self.straggler_tolerance
    }

    pub fn shard(&self, task: usize, shard: usize) -> &DMatrix<f64> {
        &self.shards[task][shard]
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Rows of each encoded shard.
    pub fn piece_rows(&self) -> usize {
        self.piece_rows
    }

    fn check_allocation(&self, alloc: &TaskAllocation) -> Result<(), CodedError> {
        if alloc.redundancy() != self.redundancy || alloc.n_tasks() != self.n_tasks {
            return Err(CodedError::AllocationMismatch(format!(
                "allocation has (L, F) = ({}, {}), job has ({}, {})",
                alloc.redundancy(),
                alloc.n_tasks(),
                self.redundancy,
                self.n_tasks
            )));
        }
        if let Some(&m) = alloc.machines().iter().find(|m| m.0 == 0 || m.0 as usize > self.n_shards()) {
            return Err(CodedError::LabelOutOfRange {
                machine: m,
                n_max: self.n_shards(),
            });
        }
        Ok(())
    }

    /// Shard products computed by every responsive machine, in parallel.
    pub fn worker_results(
        &self,
        x: &DVector<f64>,
        alloc: &TaskAllocation,
        stragglers: &BTreeSet<MachineId>,
    ) -> Result<Vec<SubtaskResult>, CodedError> {
        self.check_allocation(alloc)?;
        if x.len() != self.shards[0][0].ncols() {
            return Err(CodedError::Dimensions(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.shards[0][0].ncols()
            )));
        }
        let workers: Vec<(MachineId, Vec<usize>)> = alloc
            .iter()
            .filter(|(id, _)| !stragglers.contains(id))
            .map(|(id, set)| (id, set.iter().collect()))
            .collect();
        Ok(workers
            .par_iter()
            .flat_map_iter(|(id, tasks)| {
                let shard = id.0 as usize - 1;
                tasks.iter().map(move |&task| SubtaskResult {
                    task,
                    shard,
                    block: &self.shards[task][shard] * x,
                })
            })
            .collect())
    }

    /// Decodes `A x` from worker results, using the lowest shard indices of
    /// each task.
    pub fn decode(&self, mut results: Vec<SubtaskResult>) -> Result<DVector<f64>, CodedError> {
        let k = self.recovery_threshold();
        results.sort_by_key(|r| (r.task, r.shard));
        let mut out = DVector::zeros(self.n_tasks * k * self.piece_rows);
        let mut start = 0;
        for task in 0..self.n_tasks {
            let end = start + results[start..].iter().take_while(|r| r.task == task).count();
            let received = &results[start..end];
            start = end;
            if received.len() < k {
                return Err(CodedError::Insufficient {
                    task,
                    received: received.len(),
                    needed: k,
                });
            }
            let used = &received[..k];
            let rows: Vec<usize> = used.iter().map(|r| r.shard).collect();
            let system = self.generator.submatrix(&rows);
            let rhs = DMatrix::from_fn(k, self.piece_rows, |i, r| used[i].block[r]);
            let pieces = system.lu().solve(&rhs).ok_or(CodedError::Singular(task))?;
            for p in 0..k {
                for r in 0..self.piece_rows {
                    out[(task * k + p) * self.piece_rows + r] = pieces[(p, r)];
                }
            }
        }
        Ok(out.rows(0, self.original_rows).into_owned())
    }

    /// One full round: workers compute, the master decodes.
    pub fn multiply(
        &self,
        x: &DVector<f64>,
        alloc: &TaskAllocation,
        stragglers: &BTreeSet<MachineId>,
    ) -> Result<DVector<f64>, CodedError> {
        self.decode(self.worker_results(x, alloc, stragglers)?)
    }
}

/// An encoded matrix together with the vector to multiply.
#[derive(Debug, Clone)]
pub struct CodedJob {
    pub matrix: EncodedMatrix,
    pub x: DVector<f64>,
}

pub fn encode_job(
    a: &DMatrix<f64>,
    x: &DVector<f64>,
    n_tasks: usize,
    redundancy: usize,
    straggler_tolerance: usize,
    n_max: usize,
) -> Result<CodedJob, CodedError> {
    if x.len() != a.ncols() {
        return Err(CodedError::Dimensions(format!(
            "A has {} columns, x has length {}",
            a.ncols(),
            x.len()
        )));
    }
    Ok(CodedJob {
        matrix: encode_matrix(a, n_tasks, redundancy, straggler_tolerance, n_max)?,
        x: x.clone(),
    })
}

/// Computes `A x` under `alloc` with `stragglers` never responding.
pub fn execute_round(
    job: &CodedJob,
    alloc: &TaskAllocation,
    stragglers: &BTreeSet<MachineId>,
) -> Result<DVector<f64>, CodedError> {
    job.matrix.multiply(&job.x, alloc, stragglers)
}

/// `max_i |a_i - b_i| / max(max_i |b_i|, tiny)`.
pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}

// ---------------------------------------------------------------------------
// Gradient-descent linear regression
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StragglerPolicy {
    None,
    /// `E` machines drawn uniformly from the active pool each round.
    RandomEachRound { seed: u64 },
    /// The same machines every round (ignored while inactive).
    Fixed(BTreeSet<MachineId>),
}

#[derive(Debug, Clone)]
pub struct RegressionConfig {
    pub straggler_tolerance: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub stragglers: StragglerPolicy,
    pub strategy: Strategy,
}

#[derive(Debug, Clone)]
pub struct RegressionRun {
    /// Weights before the first step and after every step.
    pub trajectory: Vec<DVector<f64>>,
    pub events_applied: usize,
    pub rounds: usize,
}

impl RegressionRun {
    pub fn final_weights(&self) -> &DVector<f64> {
        self.trajectory.last().expect("trajectory holds the initial weights")
    }
}

/// Iteration before which event `i` of `n_events` fires, spacing events
/// evenly through the run.
pub fn event_schedule(n_events: usize, steps: usize) -> Vec<usize> {
    (0..n_events).map(|i| (i + 1) * steps / (n_events + 1)).collect()
}

/// Gradient descent on `|Xw - y|²/2` where `XᵀX`, `Xᵀy` and every `XᵀX w`
/// are computed by coded rounds on the machine pool evolving under `trace`.
pub fn elastic_linear_regression(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    trace: &ElasticTrace,
    config: &RegressionConfig,
) -> Result<RegressionRun, CodedError> {
    if x.nrows() != y.len() {
        return Err(CodedError::Dimensions(format!(
            "X has {} rows, y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    let init = &trace.initial;
    let joins = trace
        .events
        .iter()
        .filter(|e| matches!(e, crate::tas::ElasticEvent::Join { .. }))
        .count();
    let n_max = init.nmax.unwrap_or(init.n0 + joins);
    let (f, l, e) = (init.n_tasks, init.redundancy, config.straggler_tolerance);
    let mut engine = ElasticEngine::new(init, config.strategy)?;
    let mut rng = match config.stragglers {
        StragglerPolicy::RandomEachRound { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut rounds = 0;
    let mut draw_stragglers = |alloc: &TaskAllocation, rounds: &mut usize| -> BTreeSet<MachineId> {
        *rounds += 1;
        match (&config.stragglers, rng.as_mut()) {
            (StragglerPolicy::RandomEachRound { .. }, Some(rng)) => alloc
                .machines()
                .choose_multiple(rng, e.min(alloc.n_machines()))
                .copied()
                .collect(),
            (StragglerPolicy::Fixed(set), _) => set.clone(),
            _ => BTreeSet::new(),
        }
    };

    let xt = x.transpose();
    let xt_coded = encode_matrix(&xt, f, l, e, n_max)?;
    let d = x.ncols();
    let mut gram = DMatrix::zeros(d, d);
    for j in 0..d {
        let col: DVector<f64> = x.column(j).into_owned();
        let s = draw_stragglers(engine.allocation(), &mut rounds);
        gram.set_column(j, &xt_coded.multiply(&col, engine.allocation(), &s)?);
    }
    let s = draw_stragglers(engine.allocation(), &mut rounds);
    let xty = xt_coded.multiply(y, engine.allocation(), &s)?;
    let gram_coded = encode_matrix(&gram, f, l, e, n_max)?;

    let schedule = event_schedule(trace.events.len(), config.steps);
    let mut next_event = 0;
    let mut w = DVector::zeros(d);
    let mut trajectory = vec![w.clone()];
    for step in 0..config.steps {
        while next_event < schedule.len() && schedule[next_event] == step {
            engine.apply(&trace.events[next_event])?;
            next_event += 1;
        }
        let s = draw_stragglers(engine.allocation(), &mut rounds);
        let aw = gram_coded.multiply(&w, engine.allocation(), &s)?;
        w -= (aw - &xty) * config.learning_rate;
        trajectory.push(w.clone());
    }
    while next_event < trace.events.len() {
        engine.apply(&trace.events[next_event])?;
        next_event += 1;
    }
    Ok(RegressionRun {
        trajectory,
        events_applied: next_event,
        rounds,
    })
}

/// Reference gradient descent with direct products.
pub fn plain_gradient_descent(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    steps: usize,
    learning_rate: f64,
) -> Vec<DVector<f64>> {
    let gram = x.transpose() * x;
    let xty = x.transpose() * y;
    let mut w = DVector::zeros(x.ncols());
    let mut trajectory = vec![w.clone()];
    for _ in 0..steps {
        w -= (&gram * &w - &xty) * learning_rate;
        trajectory.push(w.clone());
    }
    trajectory
}

// ---------------------------------------------------------------------------
// Delimited numeric text
// ---------------------------------------------------------------------------

/// Parses rows of numbers separated by commas and/or whitespace. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CodedError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| CodedError::Parse {
                    line: i + 1,
                    message: format!("'{s}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CodedError::Parse {
                    line: i + 1,
                    message: format!("expected {} values, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Parses a vector written either as one column or one row.
pub fn parse_vector(text: &str) -> Result<DVector<f64>, CodedError> {
    let m = parse_matrix(text)?;
    if m.ncols() == 1 || m.nrows() == 1 {
        Ok(DVector::from_iterator(m.len(), m.iter().copied()))
    } else {
        Err(CodedError::Dimensions(format!("expected a vector, found {}x{}", m.nrows(), m.ncols())))
    }
}

/// Comma-separated rows with full precision.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}
