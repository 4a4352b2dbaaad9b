//! Task allocation schemes.
//!
//! An `(N, L, F)` task allocation scheme assigns a subset of the task indices
//! `{0, .., F-1}` to each of `N` machines such that
//!
//! * every machine holds exactly `L*F/N` tasks (load balancing), and
//! * every task is held by exactly `L` machines (L-redundancy).
//!
//! Machines carry stable global labels ([`MachineId`]) that survive the
//! departure of other machines. Inside an allocation the machines are kept in
//! ascending label order, and the 1-based rank of a label in that order is its
//! *position*; cyclic constructions are defined in terms of positions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable global label of a machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MachineId(pub u32);

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl From<u32> for MachineId {
    fn from(v: u32) -> Self {
        MachineId(v)
    }
}

/// Sorted, duplicate-free set of task indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskSet(Vec<usize>);

impl TaskSet {
    pub fn new() -> Self {
        TaskSet(Vec::new())
    }

    /// Builds a set from already sorted, duplicate-free indices.
    fn from_sorted(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        TaskSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, task: usize) -> bool {
        self.0.binary_search(&task).is_ok()
    }

    /// `|self \ other|`.
    pub fn difference_len(&self, other: &TaskSet) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() {
            if j == b.len() {
                count += a.len() - i;
                break;
            }
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    count += 1;
                    i += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        count
    }

    /// `|self Δ other|`, computed by a sorted merge.
    pub fn symmetric_difference_len(&self, other: &TaskSet) -> usize {
        self.difference_len(other) + other.difference_len(self)
    }

    pub fn intersection(&self, other: &TaskSet) -> TaskSet {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        TaskSet::from_sorted(out)
    }

    pub fn union(&self, other: &TaskSet) -> TaskSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn difference(&self, other: &TaskSet) -> TaskSet {
        TaskSet::from_sorted(self.iter().filter(|t| !other.contains(*t)).collect())
    }

    pub fn is_subset(&self, other: &TaskSet) -> bool {
        self.difference_len(other) == 0
    }
}

impl FromIterator<usize> for TaskSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        TaskSet(v)
    }
}

impl<const K: usize> From<[usize; K]> for TaskSet {
    fn from(a: [usize; K]) -> Self {
        a.into_iter().collect()
    }
}

impl From<RangeInclusive<usize>> for TaskSet {
    fn from(r: RangeInclusive<usize>) -> Self {
        r.collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TasError {
    #[error("parameter {0} must be positive")]
    ZeroParameter(&'static str),
    #[error("allocation has no machines")]
    NoMachines,
    #[error("machine {0} appears more than once")]
    DuplicateMachine(MachineId),
    #[error("machine {machine} lists task {task} more than once")]
    DuplicateTask { machine: MachineId, task: usize },
    #[error("machine {machine} holds task {task}, outside [0, {n_tasks})")]
    TaskOutOfRange {
        machine: MachineId,
        task: usize,
        n_tasks: usize,
    },
    #[error("document declares {declared} machines but lists {actual}")]
    MachineCountMismatch { declared: usize, actual: usize },
    #[error("not a valid task allocation scheme: {0}")]
    Invalid(ValidationReport),
    #[error("{which} = {machines} does not divide L*F = {product}")]
    NotDivisible {
        which: &'static str,
        machines: usize,
        product: usize,
    },
    #[error("machine counts {from} and {to} do not differ by exactly one")]
    NotAdjacent { from: usize, to: usize },
    #[error("allocations disagree on parameters: (L, F) = ({l_old}, {f_old}) vs ({l_new}, {f_new})")]
    ParameterMismatch {
        l_old: usize,
        f_old: usize,
        l_new: usize,
        f_new: usize,
    },
    #[error("machine label sets do not differ by exactly the {0}")]
    LabelMismatch(String),
    #[error("unknown machine {0}")]
    UnknownMachine(MachineId),
}

/// A single failed TAS axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    /// `L > N`.
    RedundancyExceedsMachines { redundancy: usize, machines: usize },
    /// `N` does not divide `L*F`.
    LoadNotIntegral { machines: usize, product: usize },
    /// Load balancing fails at one machine.
    LoadBalancing {
        machine: MachineId,
        size: usize,
        expected: usize,
    },
    /// L-redundancy fails at one task.
    Redundancy {
        task: usize,
        count: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RedundancyExceedsMachines { redundancy, machines } => {
                write!(f, "redundancy L={redundancy} exceeds N={machines}")
            }
            Violation::LoadNotIntegral { machines, product } => {
                write!(f, "load balancing: N={machines} does not divide L*F={product}")
            }
            Violation::LoadBalancing {
                machine,
                size,
                expected,
            } => write!(
                f,
                "load balancing: machine {machine} holds {size} tasks, expected {expected}"
            ),
            Violation::Redundancy {
                task,
                count,
                expected,
            } => write!(
                f,
                "L-redundancy: task {task} covered {count} times, expected {expected}"
            ),
        }
    }
}

/// Outcome of [`TaskAllocation::validate`]. Violations are data, not errors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// An assignment of task sets to labelled machines, with parameters `L` and `F`.
///
/// Construction only checks well-formedness (distinct labels, task indices in
/// range). Whether the TAS axioms hold is answered by [`validate`](Self::validate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TasDocument", into = "TasDocument")]
pub struct TaskAllocation {
    redundancy: usize,
    n_tasks: usize,
    machines: Vec<MachineId>,
    task_sets: Vec<TaskSet>,
}

impl TaskAllocation {
    pub fn new<I>(redundancy: usize, n_tasks: usize, entries: I) -> Result<Self, TasError>
    where
        I: IntoIterator<Item = (MachineId, TaskSet)>,
    {
        if redundancy == 0 {
            return Err(TasError::ZeroParameter("L"));
        }
        if n_tasks == 0 {
            return Err(TasError::ZeroParameter("F"));
        }
        let mut entries: Vec<(MachineId, TaskSet)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(TasError::NoMachines);
        }
        entries.sort_by_key(|(id, _)| *id);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TasError::DuplicateMachine(w[0].0));
            }
        }
        for (id, set) in &entries {
            if let Some(&task) = set.as_slice().last() {
                if task >= n_tasks {
                    return Err(TasError::TaskOutOfRange {
                        machine: *id,
                        task,
                        n_tasks,
                    });
                }
            }
        }
        let (machines, task_sets) = entries.into_iter().unzip();
        Ok(TaskAllocation {
            redundancy,
            n_tasks,
            machines,
            task_sets,
        })
    }

    /// Labels the sets `1, 2, .., N` in order.
    pub fn from_sets(
        redundancy: usize,
        n_tasks: usize,
        sets: Vec<TaskSet>,
    ) -> Result<Self, TasError> {
        Self::new(
            redundancy,
            n_tasks,
            sets.into_iter()
                .enumerate()
                .map(|(i, s)| (MachineId(i as u32 + 1), s)),
        )
    }

    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn redundancy(&self) -> usize {
        self.redundancy
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    /// Machine labels in ascending order.
    pub fn machines(&self) -> &[MachineId] {
        &self.machines
    }

    pub fn task_sets(&self) -> &[TaskSet] {
        &self.task_sets
    }

    pub fn iter(&self) -> impl Iterator<Item = (MachineId, &TaskSet)> {
        self.machines.iter().copied().zip(self.task_sets.iter())
    }

    pub fn task_set(&self, machine: MachineId) -> Option<&TaskSet> {
        self.index_of(machine).map(|i| &self.task_sets[i])
    }

    pub fn contains(&self, machine: MachineId) -> bool {
        self.index_of(machine).is_some()
    }

    /// 1-based rank of `machine` among the active labels.
    pub fn position(&self, machine: MachineId) -> Option<usize> {
        self.index_of(machine).map(|i| i + 1)
    }

    fn index_of(&self, machine: MachineId) -> Option<usize> {
        self.machines.binary_search(&machine).ok()
    }

    /// `L*F/N` when integral.
    pub fn load(&self) -> Option<usize> {
        let product = self.redundancy * self.n_tasks;
        product.is_multiple_of(self.n_machines()).then(|| product / self.n_machines())
    }

    /// Number of machines holding each task.
    pub fn coverage(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_tasks];
        for set in &self.task_sets {
            for t in set.iter() {
                counts[t] += 1;
            }
        }
        counts
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.n_machines();
        let mut violations = Vec::new();
        if self.redundancy > n {
            violations.push(Violation::RedundancyExceedsMachines {
                redundancy: self.redundancy,
                machines: n,
            });
        }
        match self.load() {
            None => violations.push(Violation::LoadNotIntegral {
                machines: n,
                product: self.redundancy * self.n_tasks,
            }),
            Some(load) => {
                for (id, set) in self.iter() {
                    if set.len() != load {
                        violations.push(Violation::LoadBalancing {
                            machine: id,
                            size: set.len(),
                            expected: load,
                        });
                    }
                }
            }
        }
        for (task, &count) in self.coverage().iter().enumerate() {
            if count != self.redundancy {
                violations.push(Violation::Redundancy {
                    task,
                    count,
                    expected: self.redundancy,
                });
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), TasError> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(TasError::Invalid(report))
        }
    }

    /// The `F x N` binary matrix with `b[f][n] = 1` iff task `f` is held by the
    /// machine at position `n + 1`.
    pub fn incidence_matrix(&self) -> Result<IncidenceMatrix, TasError> {
        self.ensure_valid()?;
        let mut rows = vec![vec![0u8; self.n_machines()]; self.n_tasks];
        for (n, set) in self.task_sets.iter().enumerate() {
            for t in set.iter() {
                rows[t][n] = 1;
            }
        }
        Ok(IncidenceMatrix {
            machines: self.machines.clone(),
            rows,
        })
    }

    /// Assembles an allocation from a label-ordered map without checks.
    pub(crate) fn from_parts(
        redundancy: usize,
        n_tasks: usize,
        parts: BTreeMap<MachineId, TaskSet>,
    ) -> Self {
        let (machines, task_sets) = parts.into_iter().unzip();
        TaskAllocation {
            redundancy,
            n_tasks,
            machines,
            task_sets,
        }
    }

    pub fn label_set(&self) -> BTreeSet<MachineId> {
        self.machines.iter().copied().collect()
    }
}

/// Binary task-by-machine incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub machines: Vec<MachineId>,
    pub rows: Vec<Vec<u8>>,
}

impl IncidenceMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.machines.len()
    }

    pub fn row_weight(&self, task: usize) -> usize {
        self.rows[task].iter().map(|&b| b as usize).sum()
    }

    pub fn column_weight(&self, col: usize) -> usize {
        self.rows.iter().map(|r| r[col] as usize).sum()
    }
}

impl fmt::Display for IncidenceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|b| b.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// One machine joining or leaving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ElasticEvent {
    /// A machine joins; the label is assigned by the engine when omitted.
    Join {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        machine: Option<MachineId>,
    },
    Leave { machine: MachineId },
}

impl ElasticEvent {
    pub fn leave(machine: u32) -> Self {
        ElasticEvent::Leave {
            machine: MachineId(machine),
        }
    }

    pub fn join() -> Self {
        ElasticEvent::Join { machine: None }
    }

    pub fn join_as(machine: u32) -> Self {
        ElasticEvent::Join {
            machine: Some(MachineId(machine)),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ElasticEvent::Join { .. } => "join",
            ElasticEvent::Leave { .. } => "leave",
        }
    }
}

/// `|L*F/n_from - L*F/n_to|` for adjacent machine counts.
pub fn necessary_load_change(
    n_from: usize,
    n_to: usize,
    redundancy: usize,
    n_tasks: usize,
) -> Result<usize, TasError> {
    if n_from.abs_diff(n_to) != 1 {
        return Err(TasError::NotAdjacent {
            from: n_from,
            to: n_to,
        });
    }
    let product = redundancy * n_tasks;
    for (which, machines) in [("n_from", n_from), ("n_to", n_to)] {
        if machines == 0 || !product.is_multiple_of(machines) {
            return Err(TasError::NotDivisible {
                which,
                machines,
                product,
            });
        }
    }
    Ok((product / n_from).abs_diff(product / n_to))
}

/// Per-machine task movement during one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MachineChange {
    /// Tasks dropped: `|S \ S'|`.
    pub abandoned: usize,
    /// Tasks taken on: `|S' \ S|`.
    pub acquired: usize,
    /// `abandoned + acquired - Δ`.
    pub waste: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionOutcome {
    pub old_alloc: TaskAllocation,
    pub new_alloc: TaskAllocation,
    /// The machine that joined or left.
    pub event: ElasticEvent,
    pub per_machine_waste: BTreeMap<MachineId, usize>,
    pub total_waste: usize,
    pub necessary_load_change: usize,
}

impl TransitionOutcome {
    /// Abandon/acquire counts for every machine present before and after.
    pub fn changes(&self) -> BTreeMap<MachineId, MachineChange> {
        self.per_machine_waste
            .iter()
            .map(|(&id, &waste)| {
                let old = self.old_alloc.task_set(id).expect("surviving machine");
                let new = self.new_alloc.task_set(id).expect("surviving machine");
                let change = MachineChange {
                    abandoned: old.difference_len(new),
                    acquired: new.difference_len(old),
                    waste,
                };
                (id, change)
            })
            .collect()
    }
}

/// Measures the transition waste between two allocations by direct set
/// arithmetic.
///
/// `leaver = Some(id)` describes a departure of `id`; `None` describes a join,
/// where `new` must contain exactly one label not present in `old`.
pub fn transition_waste(
    old: &TaskAllocation,
    new: &TaskAllocation,
    leaver: Option<MachineId>,
) -> Result<TransitionOutcome, TasError> {
    old.ensure_valid()?;
    new.ensure_valid()?;
    if old.redundancy != new.redundancy || old.n_tasks != new.n_tasks {
        return Err(TasError::ParameterMismatch {
            l_old: old.redundancy,
            f_old: old.n_tasks,
            l_new: new.redundancy,
            f_new: new.n_tasks,
        });
    }
    let old_labels = old.label_set();
    let new_labels = new.label_set();
    let event = match leaver {
        Some(id) => {
            if !old_labels.contains(&id) {
                return Err(TasError::UnknownMachine(id));
            }
            let mut expected = old_labels.clone();
            expected.remove(&id);
            if expected != new_labels {
                return Err(TasError::LabelMismatch(format!("leaving machine {id}")));
            }
            ElasticEvent::Leave { machine: id }
        }
        None => {
            let added: Vec<_> = new_labels.difference(&old_labels).copied().collect();
            if added.len() != 1 || !old_labels.is_subset(&new_labels) {
                return Err(TasError::LabelMismatch("joining machine".into()));
            }
            ElasticEvent::Join {
                machine: Some(added[0]),
            }
        }
    };
    let delta = necessary_load_change(
        old.n_machines(),
        new.n_machines(),
        old.redundancy,
        old.n_tasks,
    )?;
    let mut per_machine_waste = BTreeMap::new();
    for (id, old_set) in old.iter() {
        let Some(new_set) = new.task_set(id) else {
            continue;
        };
        let moved = old_set.symmetric_difference_len(new_set);
        // |S Δ S'| >= ||S| - |S'|| = Δ
        assert!(moved >= delta, "symmetric difference below necessary load change");
        per_machine_waste.insert(id, moved - delta);
    }
    let total_waste = per_machine_waste.values().sum();
    Ok(TransitionOutcome {
        old_alloc: old.clone(),
        new_alloc: new.clone(),
        event,
        per_machine_waste,
        total_waste,
        necessary_load_change: delta,
    })
}

/// Smallest multiple of `lcm{N(N+1) : N in machine_range}` that is at least
/// `min_tasks`. Dummy tasks fill the gap.
pub fn padded_task_count(min_tasks: usize, machine_range: RangeInclusive<usize>) -> usize {
    let step = machine_range.fold(1usize, |acc, n| acc.lcm(&(n * (n + 1))));
    min_tasks.div_ceil(step).max(1) * step
}

/// Wire form of a [`TaskAllocation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TasDocument {
    pub n_machines: usize,
    pub redundancy: usize,
    pub n_tasks: usize,
    pub machines: Vec<MachineEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineEntry {
    pub id: MachineId,
    pub tasks: Vec<usize>,
}

impl From<TaskAllocation> for TasDocument {
    fn from(a: TaskAllocation) -> Self {
        TasDocument {
            n_machines: a.n_machines(),
            redundancy: a.redundancy,
            n_tasks: a.n_tasks,
            machines: a
                .machines
                .into_iter()
                .zip(a.task_sets)
                .map(|(id, set)| MachineEntry { id, tasks: set.0 })
                .collect(),
        }
    }
}

impl TryFrom<TasDocument> for TaskAllocation {
    type Error = TasError;

    fn try_from(doc: TasDocument) -> Result<Self, Self::Error> {
        if doc.n_machines != doc.machines.len() {
            return Err(TasError::MachineCountMismatch {
                declared: doc.n_machines,
                actual: doc.machines.len(),
            });
        }
        let mut entries = Vec::with_capacity(doc.machines.len());
        for m in doc.machines {
            let set: TaskSet = m.tasks.iter().copied().collect();
            if set.len() != m.tasks.len() {
                let mut seen = BTreeSet::new();
                let task = m.tasks.iter().copied().find(|t| !seen.insert(*t)).unwrap();
                return Err(TasError::DuplicateTask {
                    machine: m.id,
                    task,
                });
            }
            entries.push((m.id, set));
        }
        TaskAllocation::new(doc.redundancy, doc.n_tasks, entries)
    }
}

impl TaskAllocation {
    /// Canonical JSON text (ascending labels and task indices).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("allocation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> TaskAllocation {
        TaskAllocation::from_sets(
            2,
            6,
            vec![
                TaskSet::from([0, 1, 2, 3]),
                TaskSet::from([2, 3, 4, 5]),
                TaskSet::from([4, 5, 0, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn example1_is_a_tas() {
        assert!(example1().validate().is_ok());
    }

    #[test]
    fn full_replication_is_a_tas() {
        let a = TaskAllocation::from_sets(2, 2, vec![TaskSet::from([0, 1]), TaskSet::from([0, 1])])
            .unwrap();
        assert!(a.validate().is_ok());
        let m = a.incidence_matrix().unwrap();
        assert!(m.rows.iter().all(|r| r.iter().all(|&b| b == 1)));
    }

    #[test]
    fn coverage_violations_are_reported() {
        let a = TaskAllocation::from_sets(
            2,
            6,
            vec![
                TaskSet::from([0, 1, 2, 3]),
                TaskSet::from([2, 3, 4, 5]),
                TaskSet::from([4, 5, 0, 2]),
            ],
        )
        .unwrap();
        let report = a.validate();
        assert_eq!(
            report.violations,
            vec![
                Violation::Redundancy {
                    task: 1,
                    count: 1,
                    expected: 2
                },
                Violation::Redundancy {
                    task: 2,
                    count: 3,
                    expected: 2
                },
            ]
        );
    }

    #[test]
    fn load_and_divisibility_violations() {
        let a = TaskAllocation::from_sets(1, 4, vec![TaskSet::from([0, 1, 2]), TaskSet::from([3])])
            .unwrap();
        assert!(matches!(
            a.validate().violations[0],
            Violation::LoadBalancing { size: 3, expected: 2, .. }
        ));
        let b = TaskAllocation::from_sets(
            1,
            4,
            vec![TaskSet::from([0, 1]), TaskSet::from([2]), TaskSet::from([3])],
        )
        .unwrap();
        assert!(matches!(
            b.validate().violations[0],
            Violation::LoadNotIntegral { machines: 3, product: 4 }
        ));
        let c = TaskAllocation::from_sets(3, 2, vec![TaskSet::from([0, 1]), TaskSet::from([0, 1])])
            .unwrap();
        assert!(matches!(
            c.validate().violations[0],
            Violation::RedundancyExceedsMachines { .. }
        ));
    }

    #[test]
    fn malformed_allocations_are_rejected() {
        assert_eq!(
            TaskAllocation::from_sets(1, 2, vec![TaskSet::from([0, 2])]),
            Err(TasError::TaskOutOfRange {
                machine: MachineId(1),
                task: 2,
                n_tasks: 2
            })
        );
        assert_eq!(
            TaskAllocation::new(
                1,
                2,
                vec![(MachineId(1), TaskSet::from([0])), (MachineId(1), TaskSet::from([1]))]
            ),
            Err(TasError::DuplicateMachine(MachineId(1)))
        );
        assert_eq!(
            TaskAllocation::from_sets(0, 2, vec![]),
            Err(TasError::ZeroParameter("L"))
        );
    }

    #[test]
    fn incidence_matrix_of_example1() {
        let m = example1().incidence_matrix().unwrap();
        let expected: Vec<Vec<u8>> = vec![
            vec![1, 0, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
            vec![1, 1, 0],
            vec![0, 1, 1],
            vec![0, 1, 1],
        ];
        assert_eq!(m.rows, expected);
        assert!((0..3).all(|c| m.column_weight(c) == 4));
        assert!((0..6).all(|r| m.row_weight(r) == 2));
    }

    #[test]
    fn load_change_values() {
        assert_eq!(necessary_load_change(5, 4, 3, 20), Ok(3));
        assert_eq!(necessary_load_change(2, 1, 1, 2), Ok(1));
        assert_eq!(necessary_load_change(3, 4, 2, 6), Ok(1));
        assert_eq!(
            necessary_load_change(5, 3, 3, 20),
            Err(TasError::NotAdjacent { from: 5, to: 3 })
        );
        assert_eq!(
            necessary_load_change(4, 3, 1, 4),
            Err(TasError::NotDivisible {
                which: "n_to",
                machines: 3,
                product: 4
            })
        );
        assert!(matches!(
            necessary_load_change(3, 4, 1, 4),
            Err(TasError::NotDivisible { which: "n_from", .. })
        ));
    }

    #[test]
    fn example2_join_waste_is_six() {
        let s4 = TaskAllocation::from_sets(
            2,
            6,
            vec![
                TaskSet::from([0, 1, 2]),
                TaskSet::from([0, 1, 2]),
                TaskSet::from([3, 4, 5]),
                TaskSet::from([3, 4, 5]),
            ],
        )
        .unwrap();
        let out = transition_waste(&example1(), &s4, None).unwrap();
        assert_eq!(out.necessary_load_change, 1);
        assert_eq!(out.total_waste, 6);
        assert_eq!(
            out.per_machine_waste.values().copied().collect::<Vec<_>>(),
            vec![0, 4, 2]
        );
        assert_eq!(
            out.event,
            ElasticEvent::Join {
                machine: Some(MachineId(4))
            }
        );
    }

    #[test]
    fn label_mismatch_is_an_error() {
        let a = example1();
        assert!(matches!(
            transition_waste(&a, &a, None),
            Err(TasError::LabelMismatch(_))
        ));
        assert_eq!(
            transition_waste(&a, &a, Some(MachineId(9))).unwrap_err(),
            TasError::UnknownMachine(MachineId(9))
        );
    }

    #[test]
    fn set_arithmetic() {
        let a = TaskSet::from([1, 3, 5, 7]);
        let b = TaskSet::from([3, 4, 5]);
        assert_eq!(a.symmetric_difference_len(&b), 3);
        assert_eq!(a.intersection(&b), TaskSet::from([3, 5]));
        assert_eq!(a.union(&b), TaskSet::from([1, 3, 4, 5, 7]));
        assert_eq!(a.difference(&b), TaskSet::from([1, 7]));
        assert!(TaskSet::from([3, 5]).is_subset(&a));
    }

    #[test]
    fn padding_reaches_the_lcm() {
        // lcm(4*5, 5*6) = 60
        assert_eq!(padded_task_count(20, 4..=5), 60);
        assert_eq!(padded_task_count(61, 4..=5), 120);
        assert_eq!(padded_task_count(0, 2..=2), 6);
    }

    #[test]
    fn json_round_trip_and_duplicate_detection() {
        let a = example1();
        let text = a.to_json();
        assert!(text.contains("\"n_machines\": 3"));
        assert_eq!(TaskAllocation::from_json(&text).unwrap(), a);
        let bad = r#"{"n_machines":1,"redundancy":1,"n_tasks":2,"machines":[{"id":1,"tasks":[0,0]}]}"#;
        assert!(TaskAllocation::from_json(bad)
            .unwrap_err()
            .to_string()
            .contains("more than once"));
        let count = r#"{"n_machines":2,"redundancy":1,"n_tasks":1,"machines":[{"id":1,"tasks":[0]}]}"#;
        assert!(TaskAllocation::from_json(count).is_err());
    }

    #[test]
    fn events_serialize_with_kind_tag() {
        let text = serde_json::to_string(&ElasticEvent::leave(5)).unwrap();
        assert_eq!(text, r#"{"kind":"leave","machine":5}"#);
        let join: ElasticEvent = serde_json::from_str(r#"{"kind":"join"}"#).unwrap();
        assert_eq!(join, ElasticEvent::join());
    }
}
