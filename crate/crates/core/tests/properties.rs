mod common;

use std::collections::BTreeSet;

use common::*;
use etas_core::coded::{encode_matrix, relative_error, CodedError, Generator};
use etas_core::configurations::{
    configuration_allocation, family_zero_waste_range, fano_plane, projective_plane, truncated_plane_q2, truncated_plane_q2_minus_1,
    zero_waste_range, Configuration, ZwrFamily,
};
use etas_core::cyclic::{cyclic_tas, optimal_shift_leave, shifted_cyclic_tas};
use etas_core::engine::{ElasticEngine, EngineError, Strategy as Policy, TraceInitial};
use etas_core::random::random_tas_seeded;
use etas_core::zero_waste::{hall_feasible_all_leavers, zero_waste_join, zero_waste_leave};
use etas_core::{transition_waste, ElasticEvent, MachineId, TaskAllocation, TaskSet};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(N, L, F, seed)` with `L < N <= 7`, `F <= 42` and `N | LF`.
fn tas_params() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..=7)
        .prop_flat_map(|n| (Just(n), 1..n, 1usize..=42, any::<u64>()))
        .prop_filter("N | LF", |&(n, l, f, _)| (l * f) % n == 0)
}

/// Same, additionally with `N(N-1) | LF` so leaves have an integral `Δ`.
fn leave_params() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (3usize..=7)
        .prop_flat_map(|n| (Just(n), 1..n, 1usize..=42, any::<u64>()))
        .prop_filter("N(N-1) | LF", |&(n, l, f, _)| (l * f) % (n * (n - 1)) == 0)
}

fn check_configuration(c: &Configuration) {
    let lines: Vec<BTreeSet<usize>> = c.lines.iter().map(|l| l.iter().copied().collect()).collect();
    assert_eq!(lines.len(), c.n_points);
    assert!(lines.iter().all(|l| l.len() == c.line_size));
    for p in 1..=c.n_points {
        assert_eq!(lines.iter().filter(|l| l.contains(&p)).count(), c.line_size, "degree of point {p}");
    }
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            assert!(lines[i].intersection(&lines[j]).count() <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_allocations_validate((n, l, f, seed) in tas_params()) {
        let alloc = random_tas_seeded(n, l, f, seed).unwrap();
        prop_assert!(is_tas(&sets_of(&alloc), l, f));
        prop_assert!(alloc.validate().is_ok());
        let m = alloc.incidence_matrix().unwrap();
        for t in 0..f {
            prop_assert_eq!(m.row_weight(t), l);
        }
        for c in 0..n {
            prop_assert_eq!(m.column_weight(c), l * f / n);
        }
        let back = TaskAllocation::from_json(&alloc.to_json()).unwrap();
        prop_assert_eq!(back, alloc);
    }

    #[test]
    fn waste_is_nonnegative_symmetric_and_zero_iff_nested(
        (n, l, f, seed) in leave_params(),
        pick in any::<prop::sample::Index>(),
    ) {
        let old = random_tas_seeded(n, l, f, seed).unwrap();
        let leaver = old.machines()[pick.index(n)];
        let labels: Vec<MachineId> = old.machines().iter().copied().filter(|&m| m != leaver).collect();
        let smaller = random_tas_seeded(n - 1, l, f, seed ^ 1).unwrap();
        let new = TaskAllocation::new(l, f, labels.iter().copied().zip(smaller.task_sets().iter().cloned())).unwrap();

        let leave = transition_waste(&old, &new, Some(leaver)).unwrap();
        let join = transition_waste(&new, &old, None).unwrap();
        prop_assert_eq!(&leave.per_machine_waste, &join.per_machine_waste);
        prop_assert_eq!(leave.total_waste, labelled_waste(&old, &new));
        for (&m, &w) in &leave.per_machine_waste {
            let (a, b) = (old.task_set(m).unwrap(), new.task_set(m).unwrap());
            prop_assert_eq!(w == 0, a.is_subset(b));
        }
    }

    #[test]
    fn zero_waste_leave_only_adds_tasks((n, l, f, seed) in leave_params()) {
        let alloc = random_tas_seeded(n, l, f, seed).unwrap();
        for &m in alloc.machines() {
            let sets = sets_of(&alloc);
            let i = alloc.position(m).unwrap() - 1;
            match zero_waste_leave(&alloc, m) {
                Ok(leave) => {
                    prop_assert!(hall_by_subsets(&sets, i, l, f));
                    let new = &leave.outcome.new_alloc;
                    prop_assert!(is_tas(&sets_of(new), l, f));
                    for (id, set) in new.iter() {
                        prop_assert!(alloc.task_set(id).unwrap().is_subset(set));
                    }
                }
                Err(_) => prop_assert!(!hall_by_subsets(&sets, i, l, f)),
            }
        }
    }

    #[test]
    fn zero_waste_join_only_drops_tasks(
        (n, l, f, seed) in (2usize..=6)
            .prop_flat_map(|n| (Just(n), 1..=n, 1usize..=42, any::<u64>()))
            .prop_filter("N(N+1) | LF", |&(n, l, f, _)| (l * f) % (n * (n + 1)) == 0),
    ) {
        let alloc = random_tas_seeded(n, l, f, seed).unwrap();
        let out = zero_waste_join(&alloc, MachineId(100)).unwrap();
        prop_assert_eq!(out.total_waste, 0);
        prop_assert!(is_tas(&sets_of(&out.new_alloc), l, f));
        for (id, set) in alloc.iter() {
            prop_assert!(out.new_alloc.task_set(id).unwrap().is_subset(set));
        }
    }

    #[test]
    fn cyclic_is_unshifted_and_optimal_leave_is_position_free(
        (l, n, c) in (2usize..=5).prop_flat_map(|l| (Just(l), l + 1..=8, 1usize..=2)),
        prev in 0usize..100,
    ) {
        let f = n * (n - 1) * c;
        prop_assert_eq!(cyclic_tas(n, l, f).unwrap(), shifted_cyclic_tas(n, l, f, 0).unwrap());
        let prev = prev % f;
        let first = optimal_shift_leave(n, l, f, prev, 1).unwrap().predicted_waste;
        for p in 1..=n {
            let plan = optimal_shift_leave(n, l, f, prev, p).unwrap();
            prop_assert_eq!(plan.predicted_waste, first);
            prop_assert_eq!(leave_waste(n, l, f, p, prev, plan.shift), first);
        }
    }

    #[test]
    fn engine_keeps_allocations_valid(steps in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1..8)) {
        let (l, f) = (3, 420);
        let mut initial = TraceInitial::new(5, l, f);
        initial.nmax = Some(7);
        initial.nmin = Some(3);
        for strategy in Policy::ALL {
            let mut engine = ElasticEngine::new(&initial, strategy).unwrap();
            for (join, pick) in &steps {
                let n = engine.allocation().n_machines();
                let event = if (*join && n < 7) || n <= 3 {
                    ElasticEvent::join()
                } else {
                    ElasticEvent::Leave { machine: engine.allocation().machines()[pick.index(n)] }
                };
                let before = engine.allocation().clone();
                match engine.apply(&event) {
                    Ok((record, outcome)) => {
                        prop_assert!(is_tas(&sets_of(engine.allocation()), l, f));
                        prop_assert_eq!(record.waste, labelled_waste(&before, &outcome.new_alloc));
                        if strategy == Policy::ZeroWaste {
                            prop_assert_eq!(record.waste, 0);
                        }
                    }
                    Err(EngineError::Infeasible { .. }) if strategy == Policy::ZeroWaste => break,
                    Err(e) => prop_assert!(false, "{strategy}: {e}"),
                }
            }
        }
    }

    #[test]
    fn fano_range_walk_has_no_waste(steps in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1..16)) {
        let mut initial = TraceInitial::new(7, 3, 420);
        initial.configuration = Some(ZwrFamily::L3 { n_max: 7 });
        initial.nmax = Some(7);
        initial.nmin = Some(5);
        let mut engine = ElasticEngine::new(&initial, Policy::ZeroWaste).unwrap();
        for (join, pick) in steps {
            let n = engine.allocation().n_machines();
            let event = if (join && n < 7) || n == 5 {
                ElasticEvent::join()
            } else {
                ElasticEvent::Leave { machine: engine.allocation().machines()[pick.index(n)] }
            };
            let before = engine.allocation().clone();
            let (record, outcome) = engine.apply(&event).unwrap();
            prop_assert_eq!(record.waste, 0);
            prop_assert_eq!(labelled_waste(&before, &outcome.new_alloc), 0);
        }
    }

    #[test]
    fn coded_rounds_match_direct_product(
        (n, seed) in (3usize..=7, any::<u64>()),
        stragglers in prop::collection::btree_set(1u32..=7, 0..=1),
    ) {
        let (l, e, f) = (3, 1, 2 * n);
        let alloc = random_tas_seeded(n, l, f, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(5 + n, 4, |_, _| rng.gen_range(-1.0..1.0));
        let x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let coded = encode_matrix(&a, f, l, e, n).unwrap();
        let stragglers: BTreeSet<MachineId> = stragglers.into_iter().filter(|&s| s as usize <= n).map(MachineId).collect();
        let got = coded.multiply(&x, &alloc, &stragglers).unwrap();
        prop_assert!(relative_error(&got, &(&a * &x)) <= 1e-9);
    }
}

#[test]
fn configurations_are_well_formed() {
    check_configuration(&fano_plane());
    for q in [2, 3, 4, 5, 7, 8] {
        check_configuration(&projective_plane(q).unwrap());
        check_configuration(&truncated_plane_q2(q).unwrap());
        check_configuration(&truncated_plane_q2_minus_1(q).unwrap());
    }
    let fano = fano_plane();
    let pg2 = projective_plane(2).unwrap();
    assert_eq!(fano.point_degrees(), pg2.point_degrees());
    assert_eq!(fano.intersection_profile(), pg2.intersection_profile());
}

#[test]
fn family_table_matches_general_range() {
    for n_max in 7..=30 {
        assert_eq!(family_zero_waste_range(ZwrFamily::L3 { n_max }).unwrap(), zero_waste_range(n_max, 3).unwrap());
        assert_eq!(family_zero_waste_range(ZwrFamily::L4 { n_max }).unwrap(), zero_waste_range(n_max, 4).unwrap());
    }
    for q in 2..=12 {
        for family in [ZwrFamily::Projective { q }, ZwrFamily::QSquared { q }, ZwrFamily::QSquaredMinusOne { q }] {
            let (n_max, l) = family.parameters();
            let r = family_zero_waste_range(family).unwrap();
            assert_eq!(r, zero_waste_range(n_max, l).unwrap(), "{family}");
            assert!(r.redundancy <= r.n_min && r.discriminant >= 0);
        }
    }
}

#[test]
fn configuration_allocations_survive_any_single_leave() {
    for q in [2, 3, 4] {
        for config in [projective_plane(q).unwrap(), truncated_plane_q2(q).unwrap()] {
            let (v, k) = (config.n_points, config.line_size);
            if zero_waste_range(v, k).unwrap().removable == 0 {
                continue;
            }
            let f = v * (v - 1);
            let alloc = configuration_allocation(&config, f).unwrap();
            assert!(hall_feasible_all_leavers(&alloc).unwrap().feasible, "v={v} k={k}");
        }
    }
}

#[test]
fn generator_rows_are_mds_and_well_conditioned() {
    for n_max in 3..=9 {
        for k in 1..=3.min(n_max) {
            let g = Generator::vandermonde(n_max, k);
            assert_eq!(g.recovery_threshold(), k);
            assert!(g.worst_condition_number() < 1e4, "n_max={n_max} k={k}");
        }
    }
}

#[test]
fn broken_redundancy_is_not_recoverable() {
    let alloc = cyclic_tas(5, 3, 20).unwrap();
    let mut entries: Vec<(MachineId, TaskSet)> = alloc.iter().map(|(m, s)| (m, s.clone())).collect();
    entries[0].1 = entries[0].1.iter().filter(|&t| t != 0).collect();
    let broken = TaskAllocation::new(3, 20, entries).unwrap();
    assert!(!broken.validate().violations.is_empty());

    let a = DMatrix::from_fn(20, 3, |i, j| (i * 3 + j) as f64);
    let x = DVector::from_element(3, 1.0);
    let coded = encode_matrix(&a, 20, 3, 1, 5).unwrap();
    let holders: Vec<MachineId> = broken.iter().filter(|(_, s)| s.contains(0)).map(|(m, _)| m).collect();
    assert_eq!(holders.len(), 2);
    let err = coded.multiply(&x, &broken, &BTreeSet::from([holders[0]])).unwrap_err();
    assert!(matches!(err, CodedError::Insufficient { task: 0, received: 1, needed: 2 }));
    assert!(coded.multiply(&x, &alloc, &BTreeSet::from([holders[0]])).is_ok());
}

#[test]
fn shifted_never_worse_than_plain_cyclic_on_single_events() {
    use etas_core::engine::{run_trace, ElasticTrace};
    for l in 2..=5 {
        for n in l + 1..=8 {
            let mut events = vec![(n * (n + 1), ElasticEvent::join())];
            if n >= l + 2 {
                events.extend((1..=n as u32).map(|p| (n * (n - 1), ElasticEvent::leave(p))));
            }
            for (f, event) in events {
                let trace = ElasticTrace { initial: TraceInitial::new(n, l, f), events: vec![event] };
                let plain = run_trace(&trace, Policy::Cyclic).unwrap().cumulative_waste;
                let shifted = run_trace(&trace, Policy::ShiftedCyclic).unwrap().cumulative_waste;
                assert!(shifted <= plain, "N={n} L={l} F={f} {event:?}: {shifted} > {plain}");
            }
        }
    }
}
