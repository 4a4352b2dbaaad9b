//! Symmetric combinatorial configurations and zero-waste ranges.
//!
//! A symmetric `(v, k)` configuration has `v` points and `v` lines, every line
//! holds `k` points, every point lies on `k` lines, and two points share at
//! most one line. Using the lines as task sets over a partition of the tasks
//! into `v` blocks gives an allocation whose task sets overlap in at most one
//! block, which keeps zero-waste leaves feasible over a range of machine
//! counts.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite_field::{FieldError, FiniteField};
use crate::tas::{TaskAllocation, TaskSet, TasError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("not a configuration: {0}")]
    Invalid(String),
    #[error("{n_points} points do not divide F = {n_tasks}")]
    NotDivisible { n_points: usize, n_tasks: usize },
    #[error("zero-waste range needs L >= 2 and N_max >= 3, got L = {redundancy}, N_max = {n_max}")]
    OutOfRange { n_max: usize, redundancy: usize },
    #[error("negative discriminant {0}")]
    NegativeDiscriminant(i128),
    #[error(transparent)]
    Tas(#[from] TasError),
}

/// Points are `1..=n_points`; each line is a sorted list of points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    #[serde(rename = "v")]
    pub n_points: usize,
    #[serde(rename = "k")]
    pub line_size: usize,
    pub lines: Vec<Vec<usize>>,
}

impl Configuration {
    pub fn new(n_points: usize, line_size: usize, lines: Vec<Vec<usize>>) -> Result<Self, ConfigError> {
        let lines = lines
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l
            })
            .collect();
        let config = Configuration {
            n_points,
            line_size,
            lines,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks line sizes, point degrees and the one-line-per-pair rule.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        let mut degree = vec![0usize; self.n_points + 1];
        for (i, line) in self.lines.iter().enumerate() {
            let distinct: BTreeSet<_> = line.iter().collect();
            if line.len() != self.line_size || distinct.len() != line.len() {
                return invalid(format!("line {} does not have {} distinct points", i + 1, self.line_size));
            }
            for &p in line {
                if p == 0 || p > self.n_points {
                    return invalid(format!("line {} has point {p} outside 1..={}", i + 1, self.n_points));
                }
                degree[p] += 1;
            }
        }
        let r = self.lines.len() * self.line_size / self.n_points.max(1);
        if let Some(p) = (1..=self.n_points).find(|&p| degree[p] != r) {
            return invalid(format!("point {p} lies on {} lines, expected {r}", degree[p]));
        }
        for (i, a) in self.lines.iter().enumerate() {
            for (j, b) in self.lines.iter().enumerate().skip(i + 1) {
                if common(a, b) > 1 {
                    return invalid(format!("lines {} and {} share two points", i + 1, j + 1));
                }
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.lines.len() == self.n_points
    }

    /// Number of lines through each point, indexed by point - 1.
    pub fn point_degrees(&self) -> Vec<usize> {
        let mut degree = vec![0; self.n_points];
        for p in self.lines.iter().flatten() {
            degree[p - 1] += 1;
        }
        degree
    }

    /// Sorted multiset of pairwise line intersection sizes. Isomorphic
    /// configurations have equal profiles.
    pub fn intersection_profile(&self) -> Vec<usize> {
        let mut profile = Vec::new();
        for (i, a) in self.lines.iter().enumerate() {
            for b in &self.lines[i + 1..] {
                profile.push(common(a, b));
            }
        }
        profile.sort_unstable();
        profile
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "({}, {}) configuration", self.n_points, self.line_size)?;
        for (i, line) in self.lines.iter().enumerate() {
            let pts: Vec<String> = line.iter().map(|p| p.to_string()).collect();
            writeln!(f, "  line {}: {{{}}}", i + 1, pts.join(", "))?;
        }
        Ok(())
    }
}

fn common(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|p| b.binary_search(p).is_ok()).count()
}

pub fn fano_plane() -> Configuration {
    Configuration {
        n_points: 7,
        line_size: 3,
        lines: vec![
            vec![1, 2, 3],
            vec![1, 4, 5],
            vec![1, 6, 7],
            vec![2, 4, 6],
            vec![2, 5, 7],
            vec![3, 5, 6],
            vec![3, 4, 7],
        ],
    }
}

/// Normalized nonzero vectors of GF(q)^3 (first nonzero coordinate 1) in
/// lexicographic order.
fn normalized_triples(q: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(q * q + q + 1);
    for x in 0..q {
        for y in 0..q {
            for z in 0..q {
                let v = [x, y, z];
                if v.iter().find(|&&c| c != 0) == Some(&1) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// The projective plane over GF(q): a `(q²+q+1, q+1)` configuration.
pub fn projective_plane(q: usize) -> Result<Configuration, ConfigError> {
    let field = FiniteField::new(q)?;
    let points = normalized_triples(q);
    let lines = points
        .iter()
        .map(|dual| {
            points
                .iter()
                .enumerate()
                .filter(|(_, p)| field.dot(dual, *p) == 0)
                .map(|(i, _)| i + 1)
                .collect()
        })
        .collect();
    Configuration::new(points.len(), q + 1, lines)
}

/// Removes point 1 and every line through it. Returns the remaining lines
/// and the removed lines (in original order), both still on original labels.
fn remove_first_point(plane: &Configuration) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    plane.lines.iter().cloned().partition(|l| !l.contains(&1))
}

/// Relabels points in ascending order; keeps line order.
fn relabel(lines: Vec<Vec<usize>>, dropped: &BTreeSet<usize>, n_points: usize, line_size: usize) -> Result<Configuration, ConfigError> {
    let kept: Vec<usize> = (1..=n_points).filter(|p| !dropped.contains(p)).collect();
    let new_label = |p: usize| kept.binary_search(&p).expect("kept point") + 1;
    let lines = lines
        .into_iter()
        .map(|l| l.into_iter().filter(|p| !dropped.contains(p)).map(new_label).collect())
        .collect();
    Configuration::new(kept.len(), line_size, lines)
}

/// `(q², q)` configuration: the projective plane without point 1, without the
/// lines through it, and without the points of the first of those lines.
pub fn truncated_plane_q2(q: usize) -> Result<Configuration, ConfigError> {
    let plane = projective_plane(q)?;
    let (kept, through) = remove_first_point(&plane);
    let dropped: BTreeSet<usize> = through[0].iter().copied().collect();
    relabel(kept, &dropped, plane.n_points, q)
}

/// `(q²-1, q)` configuration: as [`truncated_plane_q2`], but the extra removed
/// line is the first line not through point 1, which is also discarded.
pub fn truncated_plane_q2_minus_1(q: usize) -> Result<Configuration, ConfigError> {
    let plane = projective_plane(q)?;
    let (mut kept, _) = remove_first_point(&plane);
    let extra = kept.remove(0);
    let mut dropped: BTreeSet<usize> = extra.into_iter().collect();
    dropped.insert(1);
    relabel(kept, &dropped, plane.n_points, q)
}

/// Allocation whose machine `n` holds the task blocks of the points on line
/// `n`. Block `p` is `[(p-1)F/v, pF/v)`.
pub fn configuration_allocation(config: &Configuration, n_tasks: usize) -> Result<TaskAllocation, ConfigError> {
    config.validate()?;
    if !config.is_symmetric() {
        return Err(ConfigError::Invalid("configuration is not symmetric".into()));
    }
    let v = config.n_points;
    if n_tasks == 0 || !n_tasks.is_multiple_of(v) {
        return Err(ConfigError::NotDivisible {
            n_points: v,
            n_tasks,
        });
    }
    let block = n_tasks / v;
    let sets = config
        .lines
        .iter()
        .map(|line| {
            line.iter()
                .flat_map(|&p| (p - 1) * block..p * block)
                .collect::<TaskSet>()
        })
        .collect();
    let alloc = TaskAllocation::from_sets(config.line_size, n_tasks, sets)?;
    alloc.ensure_valid()?;
    Ok(alloc)
}

/// A zero-waste range `[n_min, n_max]` for redundancy `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZwrResult {
    pub n_max: usize,
    pub n_min: usize,
    pub redundancy: usize,
    pub removable: usize,
    pub discriminant: i128,
}

/// `L n (L n + 8L² - 16L + 6) + (2L - 1)²`.
pub fn zwr_discriminant(n_max: usize, redundancy: usize) -> i128 {
    let (n, l) = (n_max as i128, redundancy as i128);
    l * n * (l * n + 8 * l * l - 16 * l + 6) + (2 * l - 1) * (2 * l - 1)
}

/// `floor((numerator - sqrt(disc)) / denominator)` for `disc >= 0`,
/// `denominator > 0`, computed exactly.
fn floor_sub_sqrt_div(numerator: i128, disc: i128, denominator: i128) -> i128 {
    // m is admissible iff m * den <= num - sqrt(disc)
    let admissible = |m: i128| {
        let rest = numerator - m * denominator;
        rest >= 0 && rest * rest >= disc
    };
    let estimate = ((numerator as f64 - (disc as f64).sqrt()) / denominator as f64).floor() as i128;
    let mut m = estimate;
    while !admissible(m) {
        m -= 1;
    }
    while admissible(m + 1) {
        m += 1;
    }
    m
}

/// Zero-waste range of a symmetric `(n_max, L)` configuration.
///
/// `R = 1 + floor((3L n - 2n - 2L + 1 - sqrt(Δ)) / (4L - 2))` with `Δ` from
/// [`zwr_discriminant`]. The range is clipped so that it never goes below `L`.
pub fn zero_waste_range(n_max: usize, redundancy: usize) -> Result<ZwrResult, ConfigError> {
    zwr_from_discriminant(n_max, redundancy, zwr_discriminant(n_max, redundancy))
}

fn zwr_from_discriminant(n_max: usize, redundancy: usize, disc: i128) -> Result<ZwrResult, ConfigError> {
    if redundancy < 2 || n_max < 3 {
        return Err(ConfigError::OutOfRange { n_max, redundancy });
    }
    if disc < 0 {
        return Err(ConfigError::NegativeDiscriminant(disc));
    }
    let (n, l) = (n_max as i128, redundancy as i128);
    let numerator = 3 * l * n - 2 * n - 2 * l + 1;
    let r = 1 + floor_sub_sqrt_div(numerator, disc, 4 * l - 2);
    let removable = (r.max(0) as usize).min(n_max.saturating_sub(redundancy));
    Ok(ZwrResult {
        n_max,
        n_min: n_max - removable,
        redundancy,
        removable,
        discriminant: disc,
    })
}

/// Configuration families with known zero-waste ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ZwrFamily {
    /// Any `(N, 3)` configuration.
    L3 { n_max: usize },
    /// Any `(N, 4)` configuration.
    L4 { n_max: usize },
    /// Projective plane `(q²+q+1, q+1)`.
    Projective { q: usize },
    /// Truncated plane `(q², q)`.
    QSquared { q: usize },
    /// Truncated plane `(q²-1, q)`.
    QSquaredMinusOne { q: usize },
}

impl ZwrFamily {
    /// `(N_max, L)` of the family member.
    pub fn parameters(&self) -> (usize, usize) {
        match *self {
            ZwrFamily::L3 { n_max } => (n_max, 3),
            ZwrFamily::L4 { n_max } => (n_max, 4),
            ZwrFamily::Projective { q } => (q * q + q + 1, q + 1),
            ZwrFamily::QSquared { q } => (q * q, q),
            ZwrFamily::QSquaredMinusOne { q } => (q * q - 1, q),
        }
    }

    /// Family-specific discriminant polynomial.
    pub fn discriminant(&self) -> i128 {
        match *self {
            ZwrFamily::L3 { n_max } => {
                let n = n_max as i128;
                9 * n * n + 90 * n + 25
            }
            ZwrFamily::L4 { n_max } => {
                let n = n_max as i128;
                16 * n * n + 280 * n + 49
            }
            ZwrFamily::Projective { q } => {
                let q = q as i128;
                poly(q, &[0, 4, 16, 24, 24, 12, 1])
            }
            ZwrFamily::QSquared { q } => {
                let q = q as i128;
                poly(q, &[1, -4, 4, 6, -16, 8, 1])
            }
            ZwrFamily::QSquaredMinusOne { q } => {
                let q = q as i128;
                poly(q, &[1, -10, 21, -2, -18, 8, 1])
            }
        }
    }

    /// Builds the configuration itself where a construction is available.
    pub fn configuration(&self) -> Option<Result<Configuration, ConfigError>> {
        match *self {
            ZwrFamily::L3 { n_max: 7 } => Some(Ok(fano_plane())),
            ZwrFamily::L3 { .. } | ZwrFamily::L4 { .. } => None,
            ZwrFamily::Projective { q } => Some(projective_plane(q)),
            ZwrFamily::QSquared { q } => Some(truncated_plane_q2(q)),
            ZwrFamily::QSquaredMinusOne { q } => Some(truncated_plane_q2_minus_1(q)),
        }
    }
}

impl fmt::Display for ZwrFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZwrFamily::L3 { n_max } => write!(f, "L3(n_max={n_max})"),
            ZwrFamily::L4 { n_max } => write!(f, "L4(n_max={n_max})"),
            ZwrFamily::Projective { q } => write!(f, "projective(q={q})"),
            ZwrFamily::QSquared { q } => write!(f, "q_squared(q={q})"),
            ZwrFamily::QSquaredMinusOne { q } => write!(f, "q_squared_minus_1(q={q})"),
        }
    }
}

/// Coefficients low to high.
fn poly(x: i128, coeffs: &[i128]) -> i128 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * x + c)
}

/// Zero-waste range of a family member via its own discriminant polynomial.
pub fn family_zero_waste_range(family: ZwrFamily) -> Result<ZwrResult, ConfigError> {
    if let ZwrFamily::Projective { q } | ZwrFamily::QSquared { q } | ZwrFamily::QSquaredMinusOne { q } = family {
        if q < 2 {
            return Err(ConfigError::OutOfRange {
                n_max: family.parameters().0,
                redundancy: q,
            });
        }
    }
    let (n_max, redundancy) = family.parameters();
    zwr_from_discriminant(n_max, redundancy, family.discriminant())
}

/// Least `F` divisible by `N(N-1)` for every `N` in `(n_min, n_max]` and by
/// `n_max` itself.
pub fn zwr_task_count(n_min: usize, n_max: usize) -> usize {
    ((n_min + 1).max(2)..=n_max).fold(n_max.max(1), |acc, n| acc.lcm(&(n * (n - 1))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fano_is_valid() {
        let fano = fano_plane();
        fano.validate().unwrap();
        assert_eq!(fano.point_degrees(), vec![3; 7]);
        assert_eq!(fano.intersection_profile(), vec![1; 21]);
    }

    #[test]
    fn projective_planes() {
        let p2 = projective_plane(2).unwrap();
        assert_eq!((p2.n_points, p2.line_size), (7, 3));
        assert_eq!(p2.intersection_profile(), fano_plane().intersection_profile());
        assert_eq!(p2.point_degrees(), fano_plane().point_degrees());
        let p3 = projective_plane(3).unwrap();
        assert_eq!((p3.n_points, p3.line_size), (13, 4));
        assert!(p3.intersection_profile().iter().all(|&c| c == 1));
        for q in [4, 5, 7, 8, 9] {
            let p = projective_plane(q).unwrap();
            assert_eq!(p.n_points, q * q + q + 1);
        }
        assert!(matches!(projective_plane(6), Err(ConfigError::Field(_))));
    }

    #[test]
    fn truncated_planes() {
        for q in [2, 3, 4, 5] {
            let a = truncated_plane_q2(q).unwrap();
            assert_eq!((a.n_points, a.line_size, a.lines.len()), (q * q, q, q * q));
            assert!(a.point_degrees().iter().all(|&d| d == q));
            let b = truncated_plane_q2_minus_1(q).unwrap();
            assert_eq!((b.n_points, b.line_size, b.lines.len()), (q * q - 1, q, q * q - 1));
            assert!(b.point_degrees().iter().all(|&d| d == q));
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        assert!(Configuration::new(3, 2, vec![vec![1, 2], vec![1, 2], vec![3, 3]]).is_err());
        assert!(Configuration::new(4, 3, vec![vec![1, 2, 3], vec![1, 2, 4], vec![1, 3, 4], vec![2, 3, 4]]).is_err());
    }

    #[test]
    fn configuration_allocation_on_fano() {
        let a = configuration_allocation(&fano_plane(), 14).unwrap();
        assert_eq!(a.task_sets()[0], TaskSet::from(0..=5));
        assert_eq!(a.task_sets()[1], TaskSet::from([0, 1, 6, 7, 8, 9]));
        let singles = configuration_allocation(&fano_plane(), 7).unwrap();
        assert_eq!(singles.task_sets()[3], TaskSet::from([1, 3, 5]));
        assert!(matches!(
            configuration_allocation(&fano_plane(), 10),
            Err(ConfigError::NotDivisible { .. })
        ));
    }

    #[test]
    fn ranges_for_named_examples() {
        let fano = zero_waste_range(7, 3).unwrap();
        assert_eq!((fano.discriminant, fano.removable, fano.n_min), (1096, 2, 5));
        let p3 = zero_waste_range(13, 4).unwrap();
        assert_eq!((p3.discriminant, p3.removable, p3.n_min), (6393, 4, 9));
        assert!(zero_waste_range(2, 3).is_err());
        assert!(zero_waste_range(7, 1).is_err());
    }

    #[test]
    fn exact_floor_handles_perfect_squares() {
        // (10 - 4) / 3 = 2 exactly
        assert_eq!(floor_sub_sqrt_div(10, 16, 3), 2);
        assert_eq!(floor_sub_sqrt_div(10, 17, 3), 1);
        assert_eq!(floor_sub_sqrt_div(1, 16, 2), -2);
    }

    #[test]
    fn family_polynomials_reduce_to_general_discriminant() {
        for q in 2..=12 {
            for family in [
                ZwrFamily::Projective { q },
                ZwrFamily::QSquared { q },
                ZwrFamily::QSquaredMinusOne { q },
                ZwrFamily::L3 { n_max: q + 3 },
                ZwrFamily::L4 { n_max: q + 3 },
            ] {
                let (n, l) = family.parameters();
                assert_eq!(family.discriminant(), zwr_discriminant(n, l), "{family}");
                assert_eq!(family_zero_waste_range(family).unwrap(), zero_waste_range(n, l).unwrap());
            }
        }
    }

    #[test]
    fn task_count_helper() {
        assert_eq!(zwr_task_count(5, 7), 210);
        assert_eq!(420 % zwr_task_count(5, 7), 0);
        assert_eq!(zwr_task_count(7, 7), 7);
    }
}
