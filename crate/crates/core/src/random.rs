//! Seeded random task allocation schemes.
//!
//! Every task is copied `L` times, the copies are shuffled into `N` machines of
//! `L*F/N` slots each, and duplicate copies on a machine are then repaired by
//! random swaps with other machines. Plain shuffle-and-reject almost never
//! succeeds beyond toy sizes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tas::{TaskAllocation, TaskSet, TasError};

const SWAP_ATTEMPTS: usize = 10_000;
const RESTARTS: usize = 100;

/// Uniformly shuffled `(N, L, F)` allocation drawn from `rng`.
pub fn random_tas<R: Rng + ?Sized>(
    n_machines: usize,
    redundancy: usize,
    n_tasks: usize,
    rng: &mut R,
) -> Result<TaskAllocation, TasError> {
    if n_machines == 0 {
        return Err(TasError::ZeroParameter("N"));
    }
    if redundancy == 0 {
        return Err(TasError::ZeroParameter("L"));
    }
    if n_tasks == 0 {
        return Err(TasError::ZeroParameter("F"));
    }
    let product = redundancy * n_tasks;
    if !product.is_multiple_of(n_machines) {
        return Err(TasError::NotDivisible {
            which: "N",
            machines: n_machines,
            product,
        });
    }
    if redundancy > n_machines {
        return Err(TasError::Invalid(crate::tas::ValidationReport {
            violations: vec![crate::tas::Violation::RedundancyExceedsMachines {
                redundancy,
                machines: n_machines,
            }],
        }));
    }
    let load = product / n_machines;
    for _ in 0..RESTARTS {
        let mut slots: Vec<usize> = (0..n_tasks)
            .flat_map(|t| std::iter::repeat_n(t, redundancy))
            .collect();
        slots.shuffle(rng);
        let mut machines: Vec<Vec<usize>> = slots.chunks(load).map(<[usize]>::to_vec).collect();
        if repair(&mut machines, rng) {
            let sets = machines.into_iter().map(TaskSet::from_iter).collect();
            let alloc = TaskAllocation::from_sets(redundancy, n_tasks, sets)?;
            debug_assert!(alloc.validate().is_ok());
            return Ok(alloc);
        }
    }
    unreachable!("repair did not converge after {RESTARTS} restarts")
}

/// Convenience wrapper seeding a ChaCha generator.
pub fn random_tas_seeded(
    n_machines: usize,
    redundancy: usize,
    n_tasks: usize,
    seed: u64,
) -> Result<TaskAllocation, TasError> {
    random_tas(n_machines, redundancy, n_tasks, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Swaps duplicate copies away until every machine holds distinct tasks.
fn repair<R: Rng + ?Sized>(machines: &mut [Vec<usize>], rng: &mut R) -> bool {
    for _ in 0..SWAP_ATTEMPTS {
        let Some((a, i)) = find_duplicate(machines) else {
            return true;
        };
        let task = machines[a][i];
        let b = rng.gen_range(0..machines.len());
        if b == a || machines[b].contains(&task) {
            continue;
        }
        let j = rng.gen_range(0..machines[b].len());
        let other = machines[b][j];
        if machines[a].contains(&other) {
            continue;
        }
        machines[a][i] = other;
        machines[b][j] = task;
    }
    find_duplicate(machines).is_none()
}

fn find_duplicate(machines: &[Vec<usize>]) -> Option<(usize, usize)> {
    machines.iter().enumerate().find_map(|(m, slots)| {
        (1..slots.len())
            .find(|&i| slots[..i].contains(&slots[i]))
            .map(|i| (m, i))
    })
}
