//! Event-driven elasticity engine.
//!
//! The engine keeps a live allocation and rewrites it after every join or
//! leave according to a [`Strategy`]. Waste is always measured on the actual
//! before/after allocations.
//!
//! The zero-waste strategies walk a [`TransitionTree`]: the root is the
//! allocation for the largest machine count, each child is the zero-waste
//! leave of one machine, and a join of the machine that left last returns to
//! the parent, which undoes the leave at no cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configurations::{configuration_allocation, ConfigError, ZwrFamily};
use crate::cyclic::{
    cyclic_tas, detect_shift, optimal_shift_join, optimal_shift_leave, CyclicError,
    ShiftedCyclicParams,
};
use crate::tas::{
    transition_waste, ElasticEvent, MachineId, TaskAllocation, TasError, TransitionOutcome,
};
use crate::zero_waste::{
    min_waste_leave, zero_waste_join, zero_waste_leave, HallWitness, ZeroWasteError,
};

// ---------------------------------------------------------------------------
// Transition tree
// ---------------------------------------------------------------------------

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    /// Machine whose departure produced this node.
    pub removed: Option<MachineId>,
    pub depth: usize,
    pub alloc: TaskAllocation,
    children: BTreeMap<MachineId, NodeId>,
}

impl TreeNode {
    pub fn children(&self) -> impl Iterator<Item = (MachineId, NodeId)> + '_ {
        self.children.iter().map(|(&m, &n)| (m, n))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("root allocation: {0}")]
    Root(TasError),
    #[error("n_min = {n_min} exceeds the root machine count {n_max}")]
    FloorAboveRoot { n_min: usize, n_max: usize },
    #[error("join at the root of the transition tree")]
    JoinAtRoot,
    #[error("node {node} already has {n_min} machines; no further leaves")]
    DepthLimit { node: NodeId, n_min: usize },
    #[error("machine {machine} is not active at node {node}")]
    UnknownMachine { node: NodeId, machine: MachineId },
    #[error("join of machine {got} at a node that expects machine {expected}")]
    JoinMismatch { expected: MachineId, got: MachineId },
    #[error("no zero-waste leave of machine {leaver} after removals {path:?}: {witness}")]
    Infeasible {
        node: NodeId,
        path: Vec<MachineId>,
        leaver: MachineId,
        witness: HallWitness,
    },
    #[error(transparent)]
    ZeroWaste(ZeroWasteError),
}

/// Lazily expanded tree of zero-waste removal sequences. Children are keyed by
/// the leaving machine under their parent, so a node is identified by its
/// ordered removal sequence.
#[derive(Debug, Clone)]
pub struct TransitionTree {
    nodes: Vec<TreeNode>,
    n_min: usize,
}

/// Tree rooted at `root` that allows leaves down to `n_min` machines.
pub fn build_transition_tree(root: TaskAllocation, n_min: usize) -> Result<TransitionTree, TreeError> {
    root.ensure_valid().map_err(TreeError::Root)?;
    if n_min > root.n_machines() {
        return Err(TreeError::FloorAboveRoot {
            n_min,
            n_max: root.n_machines(),
        });
    }
    Ok(TransitionTree {
        nodes: vec![TreeNode {
            parent: None,
            removed: None,
            depth: 0,
            alloc: root,
            children: BTreeMap::new(),
        }],
        n_min,
    })
}

impl TransitionTree {
    pub const ROOT: NodeId = 0;

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    /// Removal sequence from the root to `id`.
    pub fn path(&self, mut id: NodeId) -> Vec<MachineId> {
        let mut path = Vec::new();
        while let Some(m) = self.nodes[id].removed {
            path.push(m);
            id = self.nodes[id].parent.expect("non-root node has a parent");
        }
        path.reverse();
        path
    }

    /// Child for `leaver`, created on first use.
    pub fn child(&mut self, id: NodeId, leaver: MachineId) -> Result<NodeId, TreeError> {
        if let Some(&c) = self.nodes[id].children.get(&leaver) {
            return Ok(c);
        }
        let node = &self.nodes[id];
        if !node.alloc.contains(leaver) {
            return Err(TreeError::UnknownMachine {
                node: id,
                machine: leaver,
            });
        }
        if node.alloc.n_machines() <= self.n_min {
            return Err(TreeError::DepthLimit {
                node: id,
                n_min: self.n_min,
            });
        }
        let alloc = match zero_waste_leave(&node.alloc, leaver) {
            Ok(leave) => leave.outcome.new_alloc,
            Err(ZeroWasteError::Infeasible { witness, .. }) => {
                return Err(TreeError::Infeasible {
                    node: id,
                    path: self.path(id),
                    leaver,
                    witness,
                })
            }
            Err(e) => return Err(TreeError::ZeroWaste(e)),
        };
        let child = TreeNode {
            parent: Some(id),
            removed: Some(leaver),
            depth: node.depth + 1,
            alloc,
            children: BTreeMap::new(),
        };
        let cid = self.nodes.len();
        self.nodes.push(child);
        self.nodes[id].children.insert(leaver, cid);
        Ok(cid)
    }

    /// Follows one event: a leave goes to the child, a join to the parent.
    pub fn navigate(&mut self, id: NodeId, event: &ElasticEvent) -> Result<NodeId, TreeError> {
        match *event {
            ElasticEvent::Leave { machine } => self.child(id, machine),
            ElasticEvent::Join { machine } => {
                let node = &self.nodes[id];
                let (Some(parent), Some(removed)) = (node.parent, node.removed) else {
                    return Err(TreeError::JoinAtRoot);
                };
                match machine {
                    Some(m) if m != removed => Err(TreeError::JoinMismatch {
                        expected: removed,
                        got: m,
                    }),
                    _ => Ok(parent),
                }
            }
        }
    }

    /// Expands every node down to `n_min` machines. Returns the node count.
    pub fn expand_all(&mut self) -> Result<usize, TreeError> {
        let mut next = 0;
        while next < self.nodes.len() {
            if self.nodes[next].alloc.n_machines() > self.n_min {
                let machines = self.nodes[next].alloc.machines().to_vec();
                for m in machines {
                    self.child(next, m)?;
                }
            }
            next += 1;
        }
        Ok(self.nodes.len())
    }
}

/// `1 + sum_{h=1}^{n_max-n_min} prod_{i=0}^{h-1} (n_max - i)`.
pub fn expected_node_count(n_max: usize, n_min: usize) -> u128 {
    let mut total = 1u128;
    let mut level = 1u128;
    for i in 0..n_max.saturating_sub(n_min) {
        level *= (n_max - i) as u128;
        total += level;
    }
    total
}

/// Feasibility of zero-waste leaves below a range floor, explored over every
/// ordered removal sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeLevel {
    pub machines: usize,
    /// Removal sequences reaching this machine count.
    pub reached: usize,
    /// Leave attempts from this machine count that had no zero-waste option.
    pub failed_leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub levels: Vec<ProbeLevel>,
    /// Whether the state budget or the deadline stopped the search early.
    pub truncated: bool,
}

/// Tries every removal order from `root` down to `floor` machines (or until
/// `max_states` states were visited). Leaves that fail a divisibility
/// precondition count as failed.
pub fn probe_leave_depth(root: &TaskAllocation, floor: usize, max_states: usize) -> ProbeReport {
    probe_leave_depth_until(root, floor, max_states, None)
}

/// [`probe_leave_depth`] that also stops once `deadline` has passed.
pub fn probe_leave_depth_until(
    root: &TaskAllocation,
    floor: usize,
    max_states: usize,
    deadline: Option<Instant>,
) -> ProbeReport {
    let top = root.n_machines();
    let floor = floor.max(1).min(top);
    let mut levels: Vec<ProbeLevel> = (floor..=top)
        .rev()
        .map(|machines| ProbeLevel {
            machines,
            reached: 0,
            failed_leaves: 0,
        })
        .collect();
    let mut budget = max_states;
    let mut truncated = false;
    let mut stack = vec![root.clone()];
    while let Some(alloc) = stack.pop() {
        if budget == 0 || deadline.is_some_and(|d| Instant::now() >= d) {
            truncated = true;
            break;
        }
        budget -= 1;
        let n = alloc.n_machines();
        let level = top - n;
        levels[level].reached += 1;
        if n <= floor {
            continue;
        }
        for &m in alloc.machines().iter().rev() {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                truncated = true;
                break;
            }
            match zero_waste_leave(&alloc, m) {
                Ok(leave) => stack.push(leave.outcome.new_alloc),
                Err(_) => levels[level].failed_leaves += 1,
            }
        }
    }
    ProbeReport { levels, truncated }
}

// ---------------------------------------------------------------------------
// Traces and strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Cyclic,
    ShiftedCyclic,
    ZeroWaste,
    ZeroWasteWithFallback,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Cyclic,
        Strategy::ShiftedCyclic,
        Strategy::ZeroWaste,
        Strategy::ZeroWasteWithFallback,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Cyclic => "cyclic",
            Strategy::ShiftedCyclic => "shifted_cyclic",
            Strategy::ZeroWaste => "zero_waste",
            Strategy::ZeroWasteWithFallback => "zero_waste_with_fallback",
        }
    }

    fn uses_tree(&self) -> bool {
        matches!(self, Strategy::ZeroWaste | Strategy::ZeroWasteWithFallback)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// Starting state of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceInitial {
    pub n0: usize,
    #[serde(rename = "L")]
    pub redundancy: usize,
    #[serde(rename = "F")]
    pub n_tasks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Upper bound on active machines; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    /// Lower bound for the zero-waste strategies; defaults to `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmin: Option<usize>,
    /// Explicit starting allocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<TaskAllocation>,
    /// Start from a configuration-based allocation instead of a cyclic one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<ZwrFamily>,
}

impl TraceInitial {
    pub fn new(n0: usize, redundancy: usize, n_tasks: usize) -> Self {
        TraceInitial {
            n0,
            redundancy,
            n_tasks,
            strategy: None,
            nmax: None,
            nmin: None,
            seed: None,
            configuration: None,
        }
    }

    /// The allocation the trace starts from.
    pub fn allocation(&self) -> Result<TaskAllocation, EngineError> {
        let alloc = if let Some(seed) = &self.seed {
            seed.clone()
        } else if let Some(family) = self.configuration {
            let config = family
                .configuration()
                .ok_or_else(|| EngineError::Setup(format!("no construction for {family}")))??;
            configuration_allocation(&config, self.n_tasks)?
        } else {
            cyclic_tas(self.n0, self.redundancy, self.n_tasks).map_err(|e| EngineError::Setup(e.to_string()))?
        };
        if alloc.n_machines() != self.n0
            || alloc.redundancy() != self.redundancy
            || alloc.n_tasks() != self.n_tasks
        {
            return Err(EngineError::Setup(format!(
                "starting allocation is ({}, {}, {}), trace declares ({}, {}, {})",
                alloc.n_machines(),
                alloc.redundancy(),
                alloc.n_tasks(),
                self.n0,
                self.redundancy,
                self.n_tasks
            )));
        }
        alloc.ensure_valid()?;
        Ok(alloc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElasticTrace {
    pub initial: TraceInitial,
    #[serde(default)]
    pub events: Vec<ElasticEvent>,
}

impl ElasticTrace {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Failure inside one transition.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepFailure {
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error(transparent)]
    ZeroWaste(#[from] ZeroWasteError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Tas(#[from] TasError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid starting state: {0}")]
    Setup(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("starting allocation: {0}")]
    Tas(#[from] TasError),
    #[error("event {index}: machine {machine} is not active")]
    UnknownMachine { index: usize, machine: MachineId },
    #[error("event {index}: machine {machine} is already active")]
    MachineActive { index: usize, machine: MachineId },
    #[error("event {index}: leaving would drop below {floor} machines")]
    BelowFloor { index: usize, floor: usize },
    #[error("event {index}: joining would exceed {n_max} machines")]
    AboveMax { index: usize, n_max: usize },
    #[error("event {index}: no zero-waste transition for leaving machine {leaver}: {witness}")]
    Infeasible {
        index: usize,
        leaver: MachineId,
        witness: HallWitness,
    },
    #[error("event {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: StepFailure,
    },
}

/// One applied event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub index: usize,
    pub kind: &'static str,
    pub machine: MachineId,
    pub n_before: usize,
    pub n_after: usize,
    pub waste: usize,
    pub delta: usize,
    /// False when no zero-waste transition existed.
    pub feasible: bool,
    /// True when the minimum-waste fallback was used.
    pub degraded: bool,
    /// Shift of the new allocation under the shifted cyclic strategy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MachineStats {
    pub abandoned: usize,
    pub acquired: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub strategy: Strategy,
    pub records: Vec<EventRecord>,
    pub cumulative_waste: usize,
    pub machine_stats: BTreeMap<MachineId, MachineStats>,
    pub final_alloc: TaskAllocation,
}

impl SimulationReport {
    /// `event_index kind machine waste delta feasible`, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("event_index\tkind\tmachine\twaste\tdelta\tfeasible\n");
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.index, r.kind, r.machine, r.waste, r.delta, r.feasible
            ));
        }
        out
    }
}

struct TreeCursor {
    tree: TransitionTree,
    node: NodeId,
}

/// Live state of one trace under one strategy.
pub struct ElasticEngine {
    strategy: Strategy,
    n_max: Option<usize>,
    n_min: usize,
    alloc: TaskAllocation,
    /// Current shift, when the live allocation is a shifted cyclic scheme.
    shift: Option<usize>,
    cursor: Option<TreeCursor>,
    next_index: usize,
}

impl ElasticEngine {
    pub fn new(initial: &TraceInitial, strategy: Strategy) -> Result<Self, EngineError> {
        let alloc = initial.allocation()?;
        let n_min = initial.nmin.unwrap_or(initial.redundancy).max(initial.redundancy);
        if let Some(n_max) = initial.nmax {
            if alloc.n_machines() > n_max {
                return Err(EngineError::Setup(format!(
                    "starts with {} machines, above nmax = {n_max}",
                    alloc.n_machines()
                )));
            }
        }
        let cursor = if strategy.uses_tree() {
            let floor = n_min.min(alloc.n_machines());
            let tree = build_transition_tree(alloc.clone(), floor)
                .map_err(|e| EngineError::Setup(e.to_string()))?;
            Some(TreeCursor {
                tree,
                node: TransitionTree::ROOT,
            })
        } else {
            None
        };
        Ok(ElasticEngine {
            strategy,
            n_max: initial.nmax,
            n_min,
            shift: detect_shift(&alloc),
            alloc,
            cursor,
            next_index: 0,
        })
    }

    pub fn allocation(&self) -> &TaskAllocation {
        &self.alloc
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn shift(&self) -> Option<usize> {
        self.shift
    }

    fn free_label(&self) -> MachineId {
        (1u32..)
            .map(MachineId)
            .find(|m| !self.alloc.contains(*m))
            .expect("labels are unbounded")
    }

    /// Applies one event and returns its record together with the measured
    /// transition.
    pub fn apply(&mut self, event: &ElasticEvent) -> Result<(EventRecord, TransitionOutcome), EngineError> {
        let index = self.next_index;
        let n = self.alloc.n_machines();
        let l = self.alloc.redundancy();
        let step = |source: StepFailure| EngineError::Step { index, source };
        let (machine, leaving) = match *event {
            ElasticEvent::Leave { machine } => {
                if !self.alloc.contains(machine) {
                    return Err(EngineError::UnknownMachine { index, machine });
                }
                let floor = if self.strategy.uses_tree() { self.n_min } else { l };
                if n <= floor {
                    return Err(EngineError::BelowFloor { index, floor });
                }
                (machine, true)
            }
            ElasticEvent::Join { machine } => {
                if let Some(n_max) = self.n_max {
                    if n >= n_max {
                        return Err(EngineError::AboveMax { index, n_max });
                    }
                }
                let label = match machine {
                    Some(m) => m,
                    None => self
                        .cursor
                        .as_ref()
                        .and_then(|c| c.tree.node(c.node).removed)
                        .unwrap_or_else(|| self.free_label()),
                };
                if self.alloc.contains(label) {
                    return Err(EngineError::MachineActive {
                        index,
                        machine: label,
                    });
                }
                (label, false)
            }
        };

        let mut feasible = true;
        let mut degraded = false;
        let outcome = match self.strategy {
            Strategy::Cyclic => {
                let labels = self.next_labels(machine, leaving);
                let new = ShiftedCyclicParams::new(labels.len(), l, self.alloc.n_tasks(), 0)
                    .and_then(|p| p.build_with_labels(&labels))
                    .map_err(|e| step(e.into()))?;
                self.shift = Some(0);
                self.measure(&new, machine, leaving).map_err(step)?
            }
            Strategy::ShiftedCyclic => {
                let (new, shift) = self.shifted_step(machine, leaving).map_err(step)?;
                self.shift = Some(shift);
                self.measure(&new, machine, leaving).map_err(step)?
            }
            Strategy::ZeroWaste | Strategy::ZeroWasteWithFallback => {
                let resolved = if leaving {
                    ElasticEvent::Leave { machine }
                } else {
                    ElasticEvent::Join {
                        machine: Some(machine),
                    }
                };
                let cursor = self.cursor.as_mut().expect("tree strategies keep a cursor");
                let on_tree = leaving || cursor.tree.node(cursor.node).removed == Some(machine);
                let navigated = on_tree.then(|| {
                    cursor.tree.navigate(cursor.node, &resolved).map(|next| {
                        cursor.node = next;
                        cursor.tree.node(next).alloc.clone()
                    })
                });
                match navigated {
                    Some(Ok(new)) => self.measure(&new, machine, leaving).map_err(step)?,
                    Some(Err(TreeError::Infeasible { witness, .. })) => {
                        if self.strategy == Strategy::ZeroWaste {
                            return Err(EngineError::Infeasible {
                                index,
                                leaver: machine,
                                witness,
                            });
                        }
                        feasible = false;
                        degraded = true;
                        let out = min_waste_leave(&self.alloc, machine).map_err(|e| step(e.into()))?;
                        self.reroot(out.new_alloc.clone()).map_err(step)?;
                        out
                    }
                    Some(Err(e)) => return Err(step(e.into())),
                    None => {
                        let out = zero_waste_join(&self.alloc, machine).map_err(|e| step(e.into()))?;
                        self.reroot(out.new_alloc.clone()).map_err(step)?;
                        out
                    }
                }
            }
        };

        let record = EventRecord {
            index,
            kind: if leaving { "leave" } else { "join" },
            machine,
            n_before: n,
            n_after: outcome.new_alloc.n_machines(),
            waste: outcome.total_waste,
            delta: outcome.necessary_load_change,
            feasible,
            degraded,
            shift: (self.strategy == Strategy::ShiftedCyclic).then_some(self.shift).flatten(),
        };
        self.alloc = outcome.new_alloc.clone();
        if !matches!(self.strategy, Strategy::Cyclic | Strategy::ShiftedCyclic) {
            self.shift = None;
        }
        self.next_index += 1;
        debug_assert!(self.alloc.validate().is_ok());
        Ok((record, outcome))
    }

    fn next_labels(&self, machine: MachineId, leaving: bool) -> Vec<MachineId> {
        let mut labels: BTreeSet<MachineId> = self.alloc.label_set();
        if leaving {
            labels.remove(&machine);
        } else {
            labels.insert(machine);
        }
        labels.into_iter().collect()
    }

    fn measure(&self, new: &TaskAllocation, machine: MachineId, leaving: bool) -> Result<TransitionOutcome, StepFailure> {
        Ok(transition_waste(&self.alloc, new, leaving.then_some(machine))?)
    }

    fn reroot(&mut self, alloc: TaskAllocation) -> Result<(), StepFailure> {
        let floor = self.n_min.min(alloc.n_machines());
        let tree = build_transition_tree(alloc, floor)?;
        self.cursor = Some(TreeCursor {
            tree,
            node: TransitionTree::ROOT,
        });
        Ok(())
    }

    /// New shifted cyclic allocation. Uses the optimal-shift rule when the
    /// live allocation is itself shifted cyclic, the divisibility conditions
    /// hold and a joining machine takes the last position; otherwise searches
    /// all shifts for the least waste.
    fn shifted_step(&self, machine: MachineId, leaving: bool) -> Result<(TaskAllocation, usize), StepFailure> {
        let n = self.alloc.n_machines();
        let (l, f) = (self.alloc.redundancy(), self.alloc.n_tasks());
        let labels = self.next_labels(machine, leaving);
        let planned = self.shift.and_then(|prev| {
            if leaving {
                let position = self.alloc.position(machine)?;
                optimal_shift_leave(n, l, f, prev, position).ok()
            } else if labels.last() == Some(&machine) {
                optimal_shift_join(n, l, f, prev).ok()
            } else {
                None
            }
        });
        let n_new = labels.len();
        if let Some(plan) = planned {
            let new = ShiftedCyclicParams::new(n_new, l, f, plan.shift)?.build_with_labels(&labels)?;
            return Ok((new, plan.shift));
        }
        let mut best: Option<(usize, usize, TaskAllocation)> = None;
        for shift in 0..f {
            let new = ShiftedCyclicParams::new(n_new, l, f, shift)?.build_with_labels(&labels)?;
            let waste = self.measure(&new, machine, leaving)?.total_waste;
            if best.as_ref().is_none_or(|(w, _, _)| waste < *w) {
                best = Some((waste, shift, new));
            }
        }
        let (_, shift, new) = best.expect("F > 0 gives at least one shift");
        Ok((new, shift))
    }
}

/// Runs every event of `trace` under `strategy`.
pub fn run_trace(trace: &ElasticTrace, strategy: Strategy) -> Result<SimulationReport, EngineError> {
    let mut engine = ElasticEngine::new(&trace.initial, strategy)?;
    let mut records = Vec::with_capacity(trace.events.len());
    let mut machine_stats: BTreeMap<MachineId, MachineStats> = BTreeMap::new();
    for event in &trace.events {
        let (record, outcome) = engine.apply(event)?;
        for (id, change) in outcome.changes() {
            let stats = machine_stats.entry(id).or_default();
            stats.abandoned += change.abandoned;
            stats.acquired += change.acquired;
        }
        records.push(record);
    }
    Ok(SimulationReport {
        strategy,
        cumulative_waste: records.iter().map(|r| r.waste).sum(),
        records,
        machine_stats,
        final_alloc: engine.alloc,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyRow {
    pub strategy: Strategy,
    pub cumulative_waste: usize,
    /// Events without a zero-waste option (degraded or aborting).
    pub infeasible_events: usize,
    pub completed_events: usize,
    pub per_event_waste: Vec<usize>,
    /// Error that stopped this strategy early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyComparison {
    pub rows: Vec<StrategyRow>,
}

impl StrategyComparison {
    pub fn row(&self, strategy: Strategy) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("strategy\tcumulative_waste\tinfeasible\tcompleted\tper_event_waste\tstatus\n");
        for r in &self.rows {
            let per: Vec<String> = r.per_event_waste.iter().map(|w| w.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.strategy,
                r.cumulative_waste,
                r.infeasible_events,
                r.completed_events,
                per.join(","),
                r.aborted.as_deref().unwrap_or("ok")
            ));
        }
        out
    }
}

impl fmt::Display for StrategyComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<26} {:>10} {:>10} {:>9}  status", "strategy", "waste", "infeasible", "events")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<26} {:>10} {:>10} {:>9}  {}",
                r.strategy.name(),
                r.cumulative_waste,
                r.infeasible_events,
                r.completed_events,
                r.aborted.as_deref().unwrap_or("ok")
            )?;
        }
        Ok(())
    }
}

/// Runs the trace under every strategy. Errors stop only the affected
/// strategy and are recorded in its row.
pub fn compare_strategies(trace: &ElasticTrace) -> StrategyComparison {
    let rows = Strategy::ALL
        .into_iter()
        .map(|strategy| {
            let mut row = StrategyRow {
                strategy,
                cumulative_waste: 0,
                infeasible_events: 0,
                completed_events: 0,
                per_event_waste: Vec::new(),
                aborted: None,
            };
            let mut engine = match ElasticEngine::new(&trace.initial, strategy) {
                Ok(e) => e,
                Err(e) => {
                    row.aborted = Some(e.to_string());
                    return row;
                }
            };
            for event in &trace.events {
                match engine.apply(event) {
                    Ok((record, _)) => {
                        row.cumulative_waste += record.waste;
                        row.per_event_waste.push(record.waste);
                        row.completed_events += 1;
                        if !record.feasible {
                            row.infeasible_events += 1;
                        }
                    }
                    Err(e) => {
                        if matches!(e, EngineError::Infeasible { .. }) {
                            row.infeasible_events += 1;
                        }
                        row.aborted = Some(e.to_string());
                        break;
                    }
                }
            }
            row
        })
        .collect();
    StrategyComparison { rows }
}
