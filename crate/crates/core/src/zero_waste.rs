//! Zero-waste reallocation.
//!
//! A join is always possible without waste once `N(N+1)` divides `L*F`: each
//! machine, in ascending label order, donates its lowest-index tasks that no
//! earlier machine has donated. A leave is possible without waste exactly when
//! the tasks of the leaving machine can be handed to the survivors so that each
//! survivor receives `Δ` tasks it does not already hold, i.e. when the
//! transition graph has a perfect `Δ`-matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::flow::FlowNetwork;
use crate::tas::{transition_waste, MachineId, TaskAllocation, TaskSet, TasError, TransitionOutcome};

/// A set of surviving machines whose combined neighbourhood is too small.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HallWitness {
    pub machines: Vec<MachineId>,
    pub neighbors: Vec<usize>,
    pub delta: usize,
}

impl HallWitness {
    /// `|Γ(J)| < Δ|J|`.
    pub fn is_violation(&self) -> bool {
        self.neighbors.len() < self.delta * self.machines.len()
    }
}

impl fmt::Display for HallWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.machines.iter().map(|m| m.to_string()).collect();
        write!(
            f,
            "machines {{{}}} can absorb only {} tasks, need {}",
            ids.join(", "),
            self.neighbors.len(),
            self.delta * self.machines.len()
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZeroWasteError {
    #[error(transparent)]
    Tas(#[from] TasError),
    #[error("machine {0} is already active")]
    MachineExists(MachineId),
    #[error("{divisor} does not divide L*F = {product}")]
    NotDivisible { divisor: usize, product: usize },
    #[error("a leave needs at least two machines and L < N")]
    TooFewMachines,
    #[error("no zero-waste reallocation for leaving machine {leaver}: {witness}")]
    Infeasible {
        leaver: MachineId,
        witness: HallWitness,
    },
    #[error("malformed transition graph: {0}")]
    MalformedGraph(String),
    #[error("subset enumeration over {machines} machines exceeds the limit of {limit}")]
    TooLarge { machines: usize, limit: usize },
    #[error("greedy donation stalled at machine {0}")]
    GreedyStalled(MachineId),
}

fn divides(divisor: usize, product: usize) -> Result<usize, ZeroWasteError> {
    if divisor == 0 || !product.is_multiple_of(divisor) {
        Err(ZeroWasteError::NotDivisible { divisor, product })
    } else {
        Ok(product / divisor)
    }
}

/// Adds `new_machine` with zero waste.
pub fn zero_waste_join(
    alloc: &TaskAllocation,
    new_machine: MachineId,
) -> Result<TransitionOutcome, ZeroWasteError> {
    alloc.ensure_valid()?;
    if alloc.contains(new_machine) {
        return Err(ZeroWasteError::MachineExists(new_machine));
    }
    let n = alloc.n_machines();
    let per_donor = divides(n * (n + 1), alloc.redundancy() * alloc.n_tasks())?;
    let mut donated = BTreeSet::new();
    let mut parts = BTreeMap::new();
    for (id, set) in alloc.iter() {
        let gift: Vec<usize> = set
            .iter()
            .filter(|t| !donated.contains(t))
            .take(per_donor)
            .collect();
        if gift.len() < per_donor {
            return Err(ZeroWasteError::GreedyStalled(id));
        }
        donated.extend(gift.iter().copied());
        let gift: TaskSet = gift.into_iter().collect();
        parts.insert(id, set.difference(&gift));
    }
    parts.insert(new_machine, donated.into_iter().collect());
    let new = TaskAllocation::from_parts(alloc.redundancy(), alloc.n_tasks(), parts);
    let outcome = transition_waste(alloc, &new, None)?;
    debug_assert_eq!(outcome.total_waste, 0);
    Ok(outcome)
}

/// Bipartite graph between surviving machines and the leaver's tasks, with an
/// edge when the machine does not hold the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionGraph {
    leaver: MachineId,
    delta: usize,
    machines: Vec<MachineId>,
    tasks: Vec<usize>,
    /// Per machine (same order as `machines`), sorted neighbouring tasks.
    adjacency: Vec<Vec<usize>>,
}

impl TransitionGraph {
    /// Builds a graph from explicit parts. Requires `|tasks| = Δ|machines|`
    /// and edges between listed vertices only.
    pub fn new(
        leaver: MachineId,
        delta: usize,
        machines: Vec<MachineId>,
        tasks: Vec<usize>,
        edges: impl IntoIterator<Item = (MachineId, usize)>,
    ) -> Result<Self, ZeroWasteError> {
        let machine_set: BTreeSet<_> = machines.iter().copied().collect();
        let task_set: BTreeSet<_> = tasks.iter().copied().collect();
        if machine_set.len() != machines.len() || task_set.len() != tasks.len() {
            return Err(ZeroWasteError::MalformedGraph("duplicate vertex".into()));
        }
        if tasks.len() != delta * machines.len() {
            return Err(ZeroWasteError::MalformedGraph(format!(
                "{} tasks cannot be split into {} groups of {delta}",
                tasks.len(),
                machines.len()
            )));
        }
        let machines: Vec<MachineId> = machine_set.into_iter().collect();
        let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); machines.len()];
        for (m, t) in edges {
            let i = machines
                .binary_search(&m)
                .map_err(|_| ZeroWasteError::MalformedGraph(format!("unknown machine {m}")))?;
            if !task_set.contains(&t) {
                return Err(ZeroWasteError::MalformedGraph(format!("unknown task {t}")));
            }
            adjacency[i].insert(t);
        }
        Ok(TransitionGraph {
            leaver,
            delta,
            machines,
            tasks: task_set.into_iter().collect(),
            adjacency: adjacency.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn leaver(&self) -> MachineId {
        self.leaver
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn machines(&self) -> &[MachineId] {
        &self.machines
    }

    pub fn tasks(&self) -> &[usize] {
        &self.tasks
    }

    pub fn neighbors(&self, machine: MachineId) -> &[usize] {
        match self.machines.binary_search(&machine) {
            Ok(i) => &self.adjacency[i],
            Err(_) => &[],
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (MachineId, usize)> + '_ {
        self.machines
            .iter()
            .zip(&self.adjacency)
            .flat_map(|(&m, ts)| ts.iter().map(move |&t| (m, t)))
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// `Γ(J)` for a set of machines.
    pub fn neighborhood(&self, machines: &[MachineId]) -> BTreeSet<usize> {
        machines
            .iter()
            .flat_map(|&m| self.neighbors(m).iter().copied())
            .collect()
    }
}

/// Transition graph for `leaver` departing from `alloc`.
pub fn build_transition_graph(
    alloc: &TaskAllocation,
    leaver: MachineId,
) -> Result<TransitionGraph, ZeroWasteError> {
    alloc.ensure_valid()?;
    let Some(leaving_set) = alloc.task_set(leaver) else {
        return Err(TasError::UnknownMachine(leaver).into());
    };
    let n = alloc.n_machines();
    if n < 2 {
        return Err(ZeroWasteError::TooFewMachines);
    }
    let delta = divides(n * (n - 1), alloc.redundancy() * alloc.n_tasks())?;
    let survivors: Vec<(MachineId, &TaskSet)> =
        alloc.iter().filter(|(id, _)| *id != leaver).collect();
    let edges: Vec<(MachineId, usize)> = survivors
        .iter()
        .flat_map(|(id, set)| {
            leaving_set
                .iter()
                .filter(|t| !set.contains(*t))
                .map(move |t| (*id, t))
        })
        .collect();
    TransitionGraph::new(
        leaver,
        delta,
        survivors.iter().map(|(id, _)| *id).collect(),
        leaving_set.as_slice().to_vec(),
        edges,
    )
}

/// Assignment of every task of the leaver to exactly one survivor, `Δ` each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaMatching {
    pub delta: usize,
    /// Task index to receiving machine.
    pub assignment: BTreeMap<usize, MachineId>,
}

impl DeltaMatching {
    /// Tasks handed to `machine`, ascending.
    pub fn tasks_for(&self, machine: MachineId) -> Vec<usize> {
        self.assignment
            .iter()
            .filter(|(_, &m)| m == machine)
            .map(|(&t, _)| t)
            .collect()
    }

    /// Checks the matching against `graph`, describing the first defect.
    pub fn verify(&self, graph: &TransitionGraph) -> Result<(), String> {
        let mut received: BTreeMap<MachineId, usize> =
            graph.machines().iter().map(|&m| (m, 0)).collect();
        for (&t, &m) in &self.assignment {
            if graph.tasks().binary_search(&t).is_err() {
                return Err(format!("task {t} is not in the graph"));
            }
            if graph.neighbors(m).binary_search(&t).is_err() {
                return Err(format!("({m}, {t}) is not an edge"));
            }
            *received.get_mut(&m).expect("neighbor lookup found the machine") += 1;
        }
        if self.assignment.len() != graph.tasks().len() {
            return Err("not every task is assigned".into());
        }
        if let Some((m, count)) = received.iter().find(|(_, &c)| c != graph.delta()) {
            return Err(format!("machine {m} receives {count} tasks"));
        }
        Ok(())
    }
}

/// Finds a perfect `Δ`-matching by max flow, or a Hall violator from the
/// minimum cut.
pub fn find_delta_matching(graph: &TransitionGraph) -> Result<DeltaMatching, HallWitness> {
    let m = graph.machines().len();
    let t = graph.tasks().len();
    let (source, sink) = (0, m + t + 1);
    let mut net = FlowNetwork::new(m + t + 2);
    for i in 0..m {
        net.add_edge(source, 1 + i, graph.delta() as i64, 0);
    }
    let mut handles = Vec::new();
    for (i, ts) in graph.adjacency.iter().enumerate() {
        for task in ts {
            let j = graph.tasks().binary_search(task).expect("task vertex");
            // uncapacitated so that the minimum cut never crosses the middle
            let h = net.add_edge(1 + i, 1 + m + j, i64::MAX / 4, 0);
            handles.push((i, *task, h));
        }
    }
    for j in 0..t {
        net.add_edge(1 + m + j, sink, 1, 0);
    }
    let flow = net.max_flow(source, sink);
    if flow as usize == t {
        let assignment = handles
            .into_iter()
            .filter(|&(_, _, h)| net.flow(h) > 0)
            .map(|(i, task, _)| (task, graph.machines()[i]))
            .collect();
        return Ok(DeltaMatching {
            delta: graph.delta(),
            assignment,
        });
    }
    let reach = net.residual_reachable(source);
    let machines: Vec<MachineId> = (0..m)
        .filter(|&i| reach[1 + i])
        .map(|i| graph.machines()[i])
        .collect();
    let neighbors: Vec<usize> = graph.neighborhood(&machines).into_iter().collect();
    let witness = HallWitness {
        machines,
        neighbors,
        delta: graph.delta(),
    };
    assert!(witness.is_violation(), "min-cut side is not a Hall violator");
    Err(witness)
}

/// Result of a Hall-condition check for one leaver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HallCheck {
    pub leaver: MachineId,
    pub feasible: bool,
    pub witness: Option<HallWitness>,
}

/// Decides whether `leaver` can depart without waste (max-flow based).
pub fn hall_feasible_for_leaver(
    alloc: &TaskAllocation,
    leaver: MachineId,
) -> Result<HallCheck, ZeroWasteError> {
    let graph = build_transition_graph(alloc, leaver)?;
    let witness = find_delta_matching(&graph).err();
    Ok(HallCheck {
        leaver,
        feasible: witness.is_none(),
        witness,
    })
}

/// Largest survivor count accepted by [`hall_feasible_by_enumeration`].
pub const ENUMERATION_LIMIT: usize = 22;

/// Decides the same question by checking `|Γ(J)| >= Δ|J|` for every nonempty
/// subset `J` of survivors. Exponential; intended as a cross-check.
pub fn hall_feasible_by_enumeration(
    alloc: &TaskAllocation,
    leaver: MachineId,
) -> Result<HallCheck, ZeroWasteError> {
    let graph = build_transition_graph(alloc, leaver)?;
    let m = graph.machines().len();
    if m > ENUMERATION_LIMIT {
        return Err(ZeroWasteError::TooLarge {
            machines: m,
            limit: ENUMERATION_LIMIT,
        });
    }
    let index: BTreeMap<usize, usize> = graph
        .tasks()
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i))
        .collect();
    let masks: Vec<Vec<u64>> = graph
        .adjacency
        .iter()
        .map(|ts| {
            let mut mask = vec![0u64; graph.tasks().len().div_ceil(64)];
            for t in ts {
                let i = index[t];
                mask[i / 64] |= 1 << (i % 64);
            }
            mask
        })
        .collect();
    let words = graph.tasks().len().div_ceil(64);
    for subset in 1u64..(1u64 << m) {
        let mut union = vec![0u64; words];
        let mut size = 0;
        for (i, mask) in masks.iter().enumerate() {
            if subset >> i & 1 == 1 {
                size += 1;
                for (u, w) in union.iter_mut().zip(mask) {
                    *u |= w;
                }
            }
        }
        let reach: u32 = union.iter().map(|w| w.count_ones()).sum();
        if (reach as usize) < graph.delta() * size {
            let machines: Vec<MachineId> = (0..m)
                .filter(|i| subset >> i & 1 == 1)
                .map(|i| graph.machines()[i])
                .collect();
            let neighbors = graph.neighborhood(&machines).into_iter().collect();
            return Ok(HallCheck {
                leaver,
                feasible: false,
                witness: Some(HallWitness {
                    machines,
                    neighbors,
                    delta: graph.delta(),
                }),
            });
        }
    }
    Ok(HallCheck {
        leaver,
        feasible: true,
        witness: None,
    })
}

/// A group of machines whose common tasks exceed `(N - |I|)Δ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectionWitness {
    pub machines: Vec<MachineId>,
    pub common_tasks: usize,
    pub bound: usize,
}

/// Result of the all-leavers check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllLeaversCheck {
    pub feasible: bool,
    pub witness: Option<IntersectionWitness>,
}

/// Decides whether every machine can leave without waste, using the
/// intersection bound `|∩_{i∈I} S_i| <= (N - |I|)Δ` over groups `I` of size at
/// least two. Groups larger than `L` have empty intersection, so the search is
/// a depth-first walk that stops at depth `L` or at an empty intersection.
pub fn hall_feasible_all_leavers(alloc: &TaskAllocation) -> Result<AllLeaversCheck, ZeroWasteError> {
    alloc.ensure_valid()?;
    let n = alloc.n_machines();
    if n < 2 {
        return Err(ZeroWasteError::TooFewMachines);
    }
    let delta = divides(n * (n - 1), alloc.redundancy() * alloc.n_tasks())?;
    let sets = alloc.task_sets();
    let mut chosen = Vec::new();
    let witness = intersection_search(sets, n, delta, alloc.redundancy(), None, 0, &mut chosen)
        .map(|(idx, common)| IntersectionWitness {
            machines: idx.iter().map(|&i| alloc.machines()[i]).collect(),
            common_tasks: common,
            bound: (n - idx.len()) * delta,
        });
    Ok(AllLeaversCheck {
        feasible: witness.is_none(),
        witness,
    })
}

fn intersection_search(
    sets: &[TaskSet],
    n: usize,
    delta: usize,
    max_depth: usize,
    current: Option<&TaskSet>,
    from: usize,
    chosen: &mut Vec<usize>,
) -> Option<(Vec<usize>, usize)> {
    if chosen.len() == max_depth {
        return None;
    }
    for j in from..sets.len() {
        let next = match current {
            None => sets[j].clone(),
            Some(c) => c.intersection(&sets[j]),
        };
        if next.is_empty() {
            continue;
        }
        chosen.push(j);
        if chosen.len() >= 2 && next.len() > (n - chosen.len()) * delta {
            return Some((chosen.clone(), next.len()));
        }
        if let Some(found) =
            intersection_search(sets, n, delta, max_depth, Some(&next), j + 1, chosen)
        {
            return Some(found);
        }
        chosen.pop();
    }
    None
}

/// A zero-waste leave together with the matching that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroWasteLeave {
    pub outcome: TransitionOutcome,
    pub matching: DeltaMatching,
}

/// Removes `leaver` with zero waste, or reports a Hall violator.
pub fn zero_waste_leave(
    alloc: &TaskAllocation,
    leaver: MachineId,
) -> Result<ZeroWasteLeave, ZeroWasteError> {
    let graph = build_transition_graph(alloc, leaver)?;
    let matching = find_delta_matching(&graph)
        .map_err(|witness| ZeroWasteError::Infeasible { leaver, witness })?;
    debug_assert_eq!(matching.verify(&graph), Ok(()));
    let parts: BTreeMap<MachineId, TaskSet> = alloc
        .iter()
        .filter(|(id, _)| *id != leaver)
        .map(|(id, set)| {
            let gained: TaskSet = matching.tasks_for(id).into_iter().collect();
            (id, set.union(&gained))
        })
        .collect();
    let new = TaskAllocation::from_parts(alloc.redundancy(), alloc.n_tasks(), parts);
    let outcome = transition_waste(alloc, &new, Some(leaver))?;
    debug_assert_eq!(outcome.total_waste, 0);
    Ok(ZeroWasteLeave { outcome, matching })
}

/// Removes `leaver` with the least possible waste. Each survivor may drop
/// tasks it holds; every dropped task costs two units of waste (it must be
/// replaced by one extra acquisition). Solved as a min-cost flow.
pub fn min_waste_leave(
    alloc: &TaskAllocation,
    leaver: MachineId,
) -> Result<TransitionOutcome, ZeroWasteError> {
    alloc.ensure_valid()?;
    if !alloc.contains(leaver) {
        return Err(TasError::UnknownMachine(leaver).into());
    }
    let n = alloc.n_machines();
    let (l, f) = (alloc.redundancy(), alloc.n_tasks());
    if n < 2 || l > n - 1 {
        return Err(ZeroWasteError::TooFewMachines);
    }
    let load = divides(n - 1, l * f)?;
    let survivors: Vec<(MachineId, &TaskSet)> =
        alloc.iter().filter(|(id, _)| *id != leaver).collect();
    let m = survivors.len();
    let (source, sink) = (0, m + f + 1);
    let mut net = FlowNetwork::new(m + f + 2);
    let mut handles = Vec::with_capacity(m * f);
    for (i, (_, set)) in survivors.iter().enumerate() {
        net.add_edge(source, 1 + i, load as i64, 0);
        for t in 0..f {
            let cost = if set.contains(t) { 0 } else { 1 };
            handles.push((i, t, net.add_edge(1 + i, 1 + m + t, 1, cost)));
        }
    }
    for t in 0..f {
        net.add_edge(1 + m + t, sink, l as i64, 0);
    }
    let (flow, _) = net.min_cost_flow(source, sink, (l * f) as i64);
    assert_eq!(flow as usize, l * f, "min-cost flow could not place every copy");
    let mut new_sets = vec![Vec::new(); m];
    for (i, t, h) in handles {
        if net.flow(h) > 0 {
            new_sets[i].push(t);
        }
    }
    let parts = survivors
        .iter()
        .zip(new_sets)
        .map(|((id, _), ts)| (*id, ts.into_iter().collect()))
        .collect();
    let new = TaskAllocation::from_parts(l, f, parts);
    Ok(transition_waste(alloc, &new, Some(leaver))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::cyclic_tas;

    #[test]
    fn greedy_join_on_cyclic_4_2_20() {
        let a = cyclic_tas(4, 2, 20).unwrap();
        let out = zero_waste_join(&a, MachineId(5)).unwrap();
        assert_eq!(out.total_waste, 0);
        assert!(out.new_alloc.validate().is_ok());
        assert_eq!(out.new_alloc.task_set(MachineId(5)).unwrap().len(), 8);
        // machine 1 holds 0..=9 and donates its two lowest tasks
        assert_eq!(
            out.new_alloc.task_set(MachineId(1)).unwrap(),
            &TaskSet::from(2..=9)
        );
    }

    #[test]
    fn join_rejects_duplicates_and_indivisible_parameters() {
        let a = cyclic_tas(4, 2, 20).unwrap();
        assert_eq!(
            zero_waste_join(&a, MachineId(2)).unwrap_err(),
            ZeroWasteError::MachineExists(MachineId(2))
        );
        let b = cyclic_tas(4, 1, 4).unwrap();
        assert!(matches!(
            zero_waste_join(&b, MachineId(5)),
            Err(ZeroWasteError::NotDivisible { divisor: 20, .. })
        ));
    }

    #[test]
    fn cyclic_5_3_20_leave_of_machine_5() {
        let a = cyclic_tas(5, 3, 20).unwrap();
        let graph = build_transition_graph(&a, MachineId(5)).unwrap();
        assert_eq!(graph.delta(), 3);
        assert_eq!(graph.tasks().len(), 12);
        let leave = zero_waste_leave(&a, MachineId(5)).unwrap();
        assert_eq!(leave.outcome.total_waste, 0);
        assert_eq!(leave.matching.verify(&graph), Ok(()));
        assert!(leave.outcome.new_alloc.validate().is_ok());
    }

    #[test]
    fn full_replication_has_no_edges() {
        let a = cyclic_tas(3, 3, 6).unwrap();
        let graph = build_transition_graph(&a, MachineId(1)).unwrap();
        assert_eq!(graph.n_edges(), 0);
        let err = find_delta_matching(&graph).unwrap_err();
        assert!(err.is_violation());
        assert!(!hall_feasible_by_enumeration(&a, MachineId(1)).unwrap().feasible);
    }

    #[test]
    fn empty_graph_has_empty_matching() {
        let g = TransitionGraph::new(MachineId(1), 0, vec![MachineId(2)], vec![], []).unwrap();
        let m = find_delta_matching(&g).unwrap();
        assert!(m.assignment.is_empty());
        assert_eq!(m.verify(&g), Ok(()));
    }

    #[test]
    fn malformed_graph_is_rejected() {
        assert!(TransitionGraph::new(MachineId(1), 2, vec![MachineId(2)], vec![0], []).is_err());
        assert!(TransitionGraph::new(
            MachineId(1),
            1,
            vec![MachineId(2)],
            vec![0],
            [(MachineId(3), 0)]
        )
        .is_err());
    }

    #[test]
    fn leave_requires_integral_delta() {
        // Δ = 8/12 is not integral
        let a = cyclic_tas(4, 2, 4).unwrap();
        assert!(matches!(
            zero_waste_leave(&a, MachineId(1)),
            Err(ZeroWasteError::NotDivisible { divisor: 12, .. })
        ));
    }

    #[test]
    fn paired_scheme_cannot_lose_a_machine() {
        // (4, 2, 12): machines 1,2 hold tasks 0..6, machines 3,4 hold 6..12
        let lo = TaskSet::from(0..=5);
        let hi = TaskSet::from(6..=11);
        let a = TaskAllocation::from_sets(2, 12, vec![lo.clone(), lo, hi.clone(), hi]).unwrap();
        let check = hall_feasible_for_leaver(&a, MachineId(1)).unwrap();
        assert!(!check.feasible);
        let w = check.witness.unwrap();
        assert!(w.is_violation());
        assert_eq!(w.machines, vec![MachineId(2)]);
        assert!(matches!(
            zero_waste_leave(&a, MachineId(1)),
            Err(ZeroWasteError::Infeasible { .. })
        ));
        let all = hall_feasible_all_leavers(&a).unwrap();
        assert!(!all.feasible);
        assert_eq!(all.witness.unwrap().machines, vec![MachineId(1), MachineId(2)]);

        let fallback = min_waste_leave(&a, MachineId(1)).unwrap();
        assert!(fallback.new_alloc.validate().is_ok());
        assert!(fallback.total_waste > 0);
    }

    #[test]
    fn min_waste_matches_zero_when_feasible() {
        let a = cyclic_tas(5, 3, 20).unwrap();
        assert_eq!(min_waste_leave(&a, MachineId(2)).unwrap().total_waste, 0);
    }
}
