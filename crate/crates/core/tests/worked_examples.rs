mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use etas_core::cyclic::{cyclic_tas, detect_shift, optimal_shift_leave, shifted_cyclic_tas};
use etas_core::zero_waste::{build_transition_graph, DeltaMatching};
use etas_core::{transition_waste, MachineId};

fn range(a: usize, b: usize) -> BTreeSet<usize> {
    (a..=b).collect()
}

#[test]
fn four_machine_cyclic_layout() {
    let alloc = cyclic_tas(4, 3, 20).unwrap();
    let expected = vec![
        range(0, 14),
        range(5, 19),
        range(10, 19).union(&range(0, 4)).copied().collect(),
        range(15, 19).union(&range(0, 9)).copied().collect(),
    ];
    assert_eq!(sets_of(&alloc), expected);
}

#[test]
fn shift_seventeen_layout() {
    let alloc = shifted_cyclic_tas(4, 3, 20, 17).unwrap();
    let wrap = |a: usize, b: usize| -> BTreeSet<usize> { range(17, 19).union(&range(a, b)).copied().collect() };
    let expected = vec![
        wrap(0, 11),
        range(2, 16),
        wrap(0, 1).union(&range(7, 16)).copied().collect(),
        wrap(0, 6).union(&range(12, 16)).copied().collect(),
    ];
    assert_eq!(sets_of(&alloc), expected);
    assert_eq!(detect_shift(&alloc), Some(17));
}

#[test]
fn optimal_leave_shift_for_last_machine_is_seventeen() {
    let plan = optimal_shift_leave(5, 3, 20, 0, 5).unwrap();
    assert_eq!(plan.shift, 17);
    assert_eq!(plan.predicted_waste, 0);
}

#[test]
fn third_machine_changes_under_plain_cyclic_leave() {
    let old = cyclic_tas(5, 3, 20).unwrap();
    let new = cyclic_tas(4, 3, 20).unwrap();
    let outcome = transition_waste(&old, &new, Some(MachineId(5))).unwrap();
    let change = &outcome.changes()[&MachineId(3)];
    assert_eq!((change.abandoned, change.acquired, change.waste), (2, 5, 4));
    let before = old.task_set(MachineId(3)).unwrap();
    let after = outcome.new_alloc.task_set(MachineId(3)).unwrap();
    assert_eq!(before.difference(after).as_slice(), &[8, 9]);
    assert_eq!(after.difference(before).as_slice(), &[0, 1, 2, 3, 4]);
    assert_eq!(outcome.total_waste, 12);
    assert_eq!(outcome.necessary_load_change, 3);
}

#[test]
fn transition_graph_neighbourhood_of_first_machine() {
    let alloc = cyclic_tas(5, 3, 20).unwrap();
    let graph = build_transition_graph(&alloc, MachineId(5)).unwrap();
    assert_eq!(graph.delta(), 3);
    assert_eq!(graph.neighbors(MachineId(1)), &[16, 17, 18, 19]);
    assert_eq!(graph.tasks(), &[0, 1, 2, 3, 4, 5, 6, 7, 16, 17, 18, 19]);
}

#[test]
fn hand_built_matching_verifies() {
    let alloc = cyclic_tas(5, 3, 20).unwrap();
    let graph = build_transition_graph(&alloc, MachineId(5)).unwrap();
    let pairs = [
        (1, 17), (1, 18), (1, 19),
        (2, 2), (2, 3), (2, 16),
        (3, 0), (3, 1), (3, 7),
        (4, 4), (4, 5), (4, 6),
    ];
    let assignment: BTreeMap<usize, MachineId> = pairs.iter().map(|&(m, t)| (t, MachineId(m))).collect();
    let matching = DeltaMatching { delta: 3, assignment };
    assert_eq!(matching.verify(&graph), Ok(()));

    let mut bad = matching.clone();
    bad.assignment.insert(8, MachineId(1));
    assert!(bad.verify(&graph).is_err());
}

#[test]
fn scaled_two_redundant_leave_needs_integral_delta() {
    // (4,2,8) cyclic has N(N-1) = 12 not dividing LF = 16; (4,2,24) does.
    assert!(build_transition_graph(&cyclic_tas(4, 2, 8).unwrap(), MachineId(1)).is_err());
    let alloc = cyclic_tas(4, 2, 24).unwrap();
    let graph = build_transition_graph(&alloc, MachineId(1)).unwrap();
    assert_eq!(graph.delta(), 4);
    let sets = sets_of(&alloc);
    assert!(hall_by_subsets(&sets, 0, 2, 24));
}
