//! Cyclic and shifted cyclic allocation schemes.
//!
//! The machine at position `n` (1-based) of an `N`-machine shifted cyclic
//! scheme with shift `δ` holds the modular interval of length `L*F/N` that
//! starts at `(n-1)*F/N + δ`. The closed-form waste expressions here are kept
//! independent of the brute-force path: they never call into the allocation
//! builders.

use std::io::{self, Write};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::tas::{transition_waste, MachineId, TaskAllocation, TaskSet, TasError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CyclicError {
    #[error("{divisor} does not divide F = {n_tasks}")]
    NotDivisible { divisor: usize, n_tasks: usize },
    #[error("requires {requirement}, got N = {n_machines}, L = {redundancy}")]
    Precondition {
        requirement: &'static str,
        n_machines: usize,
        redundancy: usize,
    },
    #[error("leaving position {position} outside 1..={n_machines}")]
    InvalidPosition { position: usize, n_machines: usize },
    #[error("expected {expected} labels, got {actual}")]
    LabelCount { expected: usize, actual: usize },
    #[error(transparent)]
    Tas(#[from] TasError),
}

/// `{start, start+1, .., start+len-1} mod n_tasks` as an explicit set.
pub fn modular_interval(start: usize, len: usize, n_tasks: usize) -> TaskSet {
    (0..len.min(n_tasks)).map(|i| (start + i) % n_tasks).collect()
}

/// Parameters of an `(N, L, F)` shifted cyclic scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftedCyclicParams {
    pub n_machines: usize,
    pub redundancy: usize,
    pub n_tasks: usize,
    /// Shift, reduced modulo `F`.
    pub shift: usize,
}

impl ShiftedCyclicParams {
    pub fn new(
        n_machines: usize,
        redundancy: usize,
        n_tasks: usize,
        shift: usize,
    ) -> Result<Self, CyclicError> {
        if n_machines == 0 {
            return Err(TasError::ZeroParameter("N").into());
        }
        if redundancy == 0 {
            return Err(TasError::ZeroParameter("L").into());
        }
        if n_tasks == 0 {
            return Err(TasError::ZeroParameter("F").into());
        }
        if redundancy > n_machines {
            return Err(CyclicError::Precondition {
                requirement: "L <= N",
                n_machines,
                redundancy,
            });
        }
        if !n_tasks.is_multiple_of(n_machines) {
            return Err(CyclicError::NotDivisible {
                divisor: n_machines,
                n_tasks,
            });
        }
        Ok(ShiftedCyclicParams {
            n_machines,
            redundancy,
            n_tasks,
            shift: shift % n_tasks,
        })
    }

    pub fn load(&self) -> usize {
        self.redundancy * self.n_tasks / self.n_machines
    }

    /// Task set of the machine at 1-based `position`.
    pub fn task_set(&self, position: usize) -> TaskSet {
        let start = (position - 1) * (self.n_tasks / self.n_machines) + self.shift;
        modular_interval(start, self.load(), self.n_tasks)
    }

    /// Builds the scheme on labels `1..=N`.
    pub fn build(&self) -> TaskAllocation {
        let labels: Vec<MachineId> = (1..=self.n_machines as u32).map(MachineId).collect();
        self.build_with_labels(&labels)
            .expect("default labels are distinct and sized")
    }

    /// Builds the scheme on arbitrary labels; positions follow ascending label
    /// order.
    pub fn build_with_labels(&self, labels: &[MachineId]) -> Result<TaskAllocation, CyclicError> {
        if labels.len() != self.n_machines {
            return Err(CyclicError::LabelCount {
                expected: self.n_machines,
                actual: labels.len(),
            });
        }
        let mut sorted = labels.to_vec();
        sorted.sort();
        let entries = sorted
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, self.task_set(i + 1)));
        Ok(TaskAllocation::new(self.redundancy, self.n_tasks, entries)?)
    }
}

/// The unshifted `(N, L, F)` cyclic scheme on labels `1..=N`.
pub fn cyclic_tas(
    n_machines: usize,
    redundancy: usize,
    n_tasks: usize,
) -> Result<TaskAllocation, CyclicError> {
    Ok(ShiftedCyclicParams::new(n_machines, redundancy, n_tasks, 0)?.build())
}

pub fn shifted_cyclic_tas(
    n_machines: usize,
    redundancy: usize,
    n_tasks: usize,
    shift: usize,
) -> Result<TaskAllocation, CyclicError> {
    Ok(ShiftedCyclicParams::new(n_machines, redundancy, n_tasks, shift)?.build())
}

fn require_divides(divisor: usize, n_tasks: usize) -> Result<(), CyclicError> {
    if divisor == 0 || !n_tasks.is_multiple_of(divisor) {
        Err(CyclicError::NotDivisible { divisor, n_tasks })
    } else {
        Ok(())
    }
}

fn require(
    ok: bool,
    requirement: &'static str,
    n_machines: usize,
    redundancy: usize,
) -> Result<(), CyclicError> {
    if ok {
        Ok(())
    } else {
        Err(CyclicError::Precondition {
            requirement,
            n_machines,
            redundancy,
        })
    }
}

fn require_join(n: usize, l: usize, f: usize, strict: bool) -> Result<(), CyclicError> {
    require(l >= 1, "L >= 1", n, l)?;
    if strict {
        require(n > l, "N > L", n, l)?;
    } else {
        require(n >= l, "N >= L", n, l)?;
    }
    require_divides(n * (n + 1), f)
}

fn require_leave(n: usize, l: usize, f: usize, min_gap: usize) -> Result<(), CyclicError> {
    require(l >= 1, "L >= 1", n, l)?;
    require(
        n >= l + min_gap,
        if min_gap == 2 { "N >= L + 2" } else { "N >= L + 1" },
        n,
        l,
    )?;
    require_divides(n * (n - 1), f)
}

fn require_position(position: usize, n: usize) -> Result<(), CyclicError> {
    if position == 0 || position > n {
        Err(CyclicError::InvalidPosition {
            position,
            n_machines: n,
        })
    } else {
        Ok(())
    }
}

/// Waste of the cyclic `N -> N+1` join: `(N-1)F/(N+1)`.
pub fn cyclic_join_waste(n: usize, l: usize, f: usize) -> Result<usize, CyclicError> {
    require_join(n, l, f, true)?;
    Ok((n - 1) * f / (n + 1))
}

/// Waste of the cyclic `N -> N-1` transition when the machine at position
/// `position` leaves and later machines shift down one position.
pub fn cyclic_leave_waste(
    n: usize,
    l: usize,
    f: usize,
    position: usize,
) -> Result<usize, CyclicError> {
    require_leave(n, l, f, 2)?;
    require_position(position, n)?;
    let p = position;
    let head = (p - 1) * p.saturating_sub(2);
    let tail = if p < n - l {
        (n - l - p) * (n - l - p + 1)
    } else {
        0
    };
    Ok((head + tail) * f / (n * (n - 1)))
}

/// Mean of [`cyclic_leave_waste`] over a uniformly random leaving position.
pub fn cyclic_leave_waste_average(n: usize, l: usize, f: usize) -> Result<Ratio<u64>, CyclicError> {
    require_leave(n, l, f, 2)?;
    let (n, l, f) = (n as u64, l as u64, f as u64);
    let first = Ratio::new(n - 2, 3 * n);
    let second = Ratio::new((n - l - 1) * (n - l) * (n - l + 1), 3 * (n - 1) * n * n);
    Ok((first + second) * Ratio::from_integer(f))
}

/// A shift together with the waste it is predicted to achieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftPlan {
    pub shift: usize,
    pub predicted_waste: usize,
}

/// Best shift for the `N -> N+1` join from a scheme with shift `prev_shift`.
pub fn optimal_shift_join(
    n: usize,
    l: usize,
    f: usize,
    prev_shift: usize,
) -> Result<ShiftPlan, CyclicError> {
    require_join(n, l, f, false)?;
    let step = f / (n * (n + 1));
    let shift = (prev_shift + (n + l - 1) / 2 * step) % f;
    let gap = n - l;
    let predicted_waste = if gap % 2 == 1 {
        (gap - 1) * (gap + 1) * f / (2 * n * (n + 1))
    } else {
        gap * gap * f / (2 * n * (n + 1))
    };
    Ok(ShiftPlan {
        shift,
        predicted_waste,
    })
}

/// Best shift for the `N -> N-1` transition when position `position` leaves.
pub fn optimal_shift_leave(
    n: usize,
    l: usize,
    f: usize,
    prev_shift: usize,
    position: usize,
) -> Result<ShiftPlan, CyclicError> {
    require_leave(n, l, f, 1)?;
    require_position(position, n)?;
    let step = (f / (n * (n - 1))) as i64;
    let offset = (n - position) as i64 - ((n + l - 2) / 2) as i64;
    let shift = (prev_shift as i64 + offset * step).rem_euclid(f as i64) as usize;
    let gap = n - l;
    let predicted_waste = if gap % 2 == 1 {
        (gap - 1) * (gap - 1) * f / (2 * n * (n - 1))
    } else {
        gap * (gap - 2) * f / (2 * n * (n - 1))
    };
    Ok(ShiftPlan {
        shift,
        predicted_waste,
    })
}

/// Waste measured for one candidate shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftWaste {
    pub shift: usize,
    pub waste: usize,
}

/// Measured join waste from `(N, prev_shift)` to `(N+1, δ)` for every `δ`.
pub fn shift_waste_profile(
    n: usize,
    l: usize,
    f: usize,
    prev_shift: usize,
) -> Result<Vec<ShiftWaste>, CyclicError> {
    require(n >= l, "N >= L", n, l)?;
    let old = shifted_cyclic_tas(n, l, f, prev_shift)?;
    ShiftedCyclicParams::new(n + 1, l, f, 0)?;
    (0..f)
        .map(|shift| {
            let new = shifted_cyclic_tas(n + 1, l, f, shift)?;
            let waste = transition_waste(&old, &new, None)?.total_waste;
            Ok(ShiftWaste { shift, waste })
        })
        .collect()
}

/// Measured leave waste from `(N, prev_shift)` to `(N-1, δ)` for every `δ`,
/// with the machine at `position` leaving.
pub fn shift_waste_profile_leave(
    n: usize,
    l: usize,
    f: usize,
    prev_shift: usize,
    position: usize,
) -> Result<Vec<ShiftWaste>, CyclicError> {
    require(n > l, "N > L", n, l)?;
    require_position(position, n)?;
    let old = shifted_cyclic_tas(n, l, f, prev_shift)?;
    let leaver = old.machines()[position - 1];
    let labels: Vec<MachineId> = old
        .machines()
        .iter()
        .copied()
        .filter(|&m| m != leaver)
        .collect();
    ShiftedCyclicParams::new(n - 1, l, f, 0)?;
    (0..f)
        .map(|shift| {
            let new = ShiftedCyclicParams::new(n - 1, l, f, shift)?.build_with_labels(&labels)?;
            let waste = transition_waste(&old, &new, Some(leaver))?.total_waste;
            Ok(ShiftWaste { shift, waste })
        })
        .collect()
}

/// Smallest-waste entry of a profile; ties go to the smallest shift.
pub fn best_shift(profile: &[ShiftWaste]) -> Option<ShiftWaste> {
    profile.iter().copied().min_by_key(|s| (s.waste, s.shift))
}

/// Join waste from shift 0 to shift `delta`, as a sum of piecewise terms in
/// the relative shift. Requires `N(N+1) | F`.
pub fn shift_waste_sum_formula(
    n: usize,
    l: usize,
    f: usize,
    delta: usize,
) -> Result<usize, CyclicError> {
    require_join(n, l, f, false)?;
    let (ni, li, fi) = (n as i128, l as i128, f as i128);
    let d = fi / (ni * (ni + 1));
    let x = (delta % f) as i128;
    let big = li * ni * d;
    let mut total: i128 = 0;
    for k in 0..ni {
        // k = n - 1
        let lo = k * d;
        let start = (k + li) * d;
        let far = (k + li + li * ni) * d;
        let wrap = fi + k * d - big;
        if lo > x {
            total += 2 * (lo - x);
        }
        if 2 * l < n + 1 {
            if start <= x && x < far {
                total += 2 * (x - start);
            }
            if far <= x && x <= wrap {
                total += 2 * big;
            }
            if wrap < x {
                total += 2 * (fi + k * d - x);
            }
        } else {
            if start <= x && x <= wrap {
                total += 2 * (x - start);
            }
            if wrap < x && x < far {
                total += 2 * (ni - li) * fi / ni;
            }
            if far <= x {
                total += 2 * (fi + k * d - x);
            }
        }
    }
    Ok(total as usize)
}

/// The quadratic that the join-waste profile follows on
/// `L*d <= δ < (N-1)*d`, `d = F/(N(N+1))`; `None` outside that interval.
pub fn shift_waste_quadratic(
    n: usize,
    l: usize,
    f: usize,
    delta: usize,
) -> Result<Option<Ratio<i128>>, CyclicError> {
    require_join(n, l, f, false)?;
    let (ni, li) = (n as i128, l as i128);
    let d = (f / (n * (n + 1))) as i128;
    let x = delta as i128;
    if x < li * d || x >= (ni - 1) * d {
        return Ok(None);
    }
    let numerator =
        2 * x * x - 2 * (ni + li - 1) * x * d + (ni * (ni - 1) + li * (li - 1)) * d * d;
    Ok(Some(Ratio::new(numerator, d)))
}

/// Recovers `δ` if `alloc` equals a shifted cyclic scheme on its own labels.
pub fn detect_shift(alloc: &TaskAllocation) -> Option<usize> {
    let n = alloc.n_machines();
    let (l, f) = (alloc.redundancy(), alloc.n_tasks());
    let params = ShiftedCyclicParams::new(n, l, f, 0).ok()?;
    let first = alloc.task_sets().first()?;
    if first.len() != params.load() {
        return None;
    }
    first.iter().find(|&start| {
        let candidate = ShiftedCyclicParams { shift: start, ..params };
        alloc
            .task_sets()
            .iter()
            .enumerate()
            .all(|(i, set)| *set == candidate.task_set(i + 1))
    })
}

/// Writes a profile as `delta<TAB>waste` lines with a header.
pub fn write_profile_tsv<W: Write>(profile: &[ShiftWaste], mut out: W) -> io::Result<()> {
    writeln!(out, "delta\twaste")?;
    for s in profile {
        writeln!(out, "{}\t{}", s.shift, s.waste)?;
    }
    Ok(())
}
