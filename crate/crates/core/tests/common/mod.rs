//! Brute-force oracles written independently of the library code paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use etas_core::{MachineId, TaskAllocation};

pub type Sets = Vec<BTreeSet<usize>>;

/// Shifted cyclic task sets built straight from the definition.
pub fn cyclic_sets(n: usize, l: usize, f: usize, shift: usize) -> Sets {
    (0..n)
        .map(|i| {
            (0..l * f / n)
                .map(|j| (i * (f / n) + shift + j) % f)
                .collect()
        })
        .collect()
}

/// Waste of `old -> new` where `pairs` lists `(old index, new index)` of the
/// surviving machines.
pub fn waste(old: &Sets, new: &Sets, pairs: &[(usize, usize)], delta: usize) -> usize {
    pairs
        .iter()
        .map(|&(a, b)| old[a].symmetric_difference(&new[b]).count() - delta)
        .sum()
}

/// Cyclic join waste `N -> N+1` with shifts `prev -> next`.
pub fn join_waste(n: usize, l: usize, f: usize, prev: usize, next: usize) -> usize {
    let old = cyclic_sets(n, l, f, prev);
    let new = cyclic_sets(n + 1, l, f, next);
    let delta = l * f / n - l * f / (n + 1);
    let pairs: Vec<_> = (0..n).map(|i| (i, i)).collect();
    waste(&old, &new, &pairs, delta)
}

/// Cyclic leave waste `N -> N-1` when 1-based `position` leaves and later
/// machines move down one place.
pub fn leave_waste(n: usize, l: usize, f: usize, position: usize, prev: usize, next: usize) -> usize {
    let old = cyclic_sets(n, l, f, prev);
    let new = cyclic_sets(n - 1, l, f, next);
    let delta = l * f / (n - 1) - l * f / n;
    let pairs: Vec<_> = (0..n)
        .filter(|&i| i != position - 1)
        .map(|i| (i, if i < position - 1 { i } else { i - 1 }))
        .collect();
    waste(&old, &new, &pairs, delta)
}

pub fn sets_of(alloc: &TaskAllocation) -> Sets {
    alloc
        .task_sets()
        .iter()
        .map(|s| s.iter().collect())
        .collect()
}

/// Measured waste between two labelled allocations, by label.
pub fn labelled_waste(old: &TaskAllocation, new: &TaskAllocation) -> usize {
    let l = old.redundancy();
    let f = old.n_tasks();
    let delta = (l * f / old.n_machines()).abs_diff(l * f / new.n_machines());
    let old_sets: BTreeMap<MachineId, BTreeSet<usize>> =
        old.iter().map(|(m, s)| (m, s.iter().collect())).collect();
    new.iter()
        .filter_map(|(m, s)| {
            let before = old_sets.get(&m)?;
            let after: BTreeSet<usize> = s.iter().collect();
            Some(before.symmetric_difference(&after).count() - delta)
        })
        .sum()
}

/// Every task covered `L` times and every machine holding `LF/N` tasks.
pub fn is_tas(sets: &Sets, l: usize, f: usize) -> bool {
    let n = sets.len();
    if !(l * f).is_multiple_of(n) || sets.iter().any(|s| s.len() != l * f / n) {
        return false;
    }
    (0..f).all(|t| sets.iter().filter(|s| s.contains(&t)).count() == l)
}

/// Hall's condition for a zero-waste leave, by enumerating every subset of
/// survivors.
pub fn hall_by_subsets(sets: &Sets, leaver: usize, l: usize, f: usize) -> bool {
    let n = sets.len();
    let delta = l * f / (n * (n - 1));
    let survivors: Vec<usize> = (0..n).filter(|&i| i != leaver).collect();
    (1u32..(1 << survivors.len())).all(|mask| {
        let chosen: Vec<usize> = (0..survivors.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| survivors[b])
            .collect();
        let reach: BTreeSet<usize> = chosen
            .iter()
            .flat_map(|&u| sets[leaver].iter().filter(move |t| !sets[u].contains(t)))
            .copied()
            .collect();
        reach.len() >= delta * chosen.len()
    })
}

/// Runs one acceptance criterion, prints a single PASS/FAIL line and fails
/// the test on error or when the runtime limit (if any) is exceeded.
pub fn criterion<F>(id: &str, title: &str, limit: Option<Duration>, body: F)
where
    F: FnOnce() -> Result<String, String> + std::panic::UnwindSafe,
{
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(body);
    let elapsed = start.elapsed();
    let result = match outcome {
        Ok(Ok(detail)) => match limit {
            Some(limit) if elapsed > limit => Err(format!("{detail}; took {elapsed:?}, limit {limit:?}")),
            _ => Ok(detail),
        },
        Ok(Err(e)) => Err(e),
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    match &result {
        Ok(detail) => println!("[PASS] {id} {title} ({elapsed:.2?}): {detail}"),
        Err(e) => println!("[FAIL] {id} {title} ({elapsed:.2?}): {e}"),
    }
    if let Err(e) = result {
        panic!("{id} failed: {e}");
    }
}

/// `Err` with `msg` unless `cond`.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
