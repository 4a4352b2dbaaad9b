//! Arithmetic in GF(q) for small prime powers `q`.
//!
//! An element of GF(p^k) is encoded as the integer `sum c_i p^i` of its
//! coefficient vector modulo a monic irreducible polynomial of degree `k`.
//! Addition and multiplication are tabulated.

use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime power")]
    NotPrimePower(usize),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge(usize),
}

/// `(p, k)` with `q = p^k`, if `q` is a prime power.
pub fn prime_power(q: usize) -> Option<(usize, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut rest, mut k) = (q, 0);
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

#[derive(Debug, Clone)]
pub struct FiniteField {
    order: usize,
    characteristic: usize,
    add: Vec<usize>,
    mul: Vec<usize>,
}

impl FiniteField {
    pub fn new(q: usize) -> Result<Self, FieldError> {
        let (p, k) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        if q > MAX_ORDER {
            return Err(FieldError::TooLarge(q));
        }
        let k = k as usize;
        let modulus = irreducible(p, k);
        let digits = |mut e: usize| -> Vec<usize> {
            (0..k)
                .map(|_| {
                    let d = e % p;
                    e /= p;
                    d
                })
                .collect()
        };
        let encode = |c: &[usize]| c.iter().rev().fold(0, |acc, &d| acc * p + d);
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = encode(&sum);
                mul[a * q + b] = encode(&poly_mul_mod(&da, &db, &modulus, p));
            }
        }
        Ok(FiniteField {
            order: q,
            characteristic: p,
            add,
            mul,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn characteristic(&self) -> usize {
        self.characteristic
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.order + b]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    pub fn neg(&self, a: usize) -> usize {
        (0..self.order).find(|&b| self.add(a, b) == 0).unwrap()
    }

    pub fn inv(&self, a: usize) -> Option<usize> {
        (a != 0).then(|| (1..self.order).find(|&b| self.mul(a, b) == 1).unwrap())
    }

    /// `x*y + ... ` for equal-length vectors.
    pub fn dot(&self, x: &[usize], y: &[usize]) -> usize {
        x.iter()
            .zip(y)
            .fold(0, |acc, (&a, &b)| self.add(acc, self.mul(a, b)))
    }
}

/// Product of two residues modulo the monic `modulus` (coefficients low to high).
fn poly_mul_mod(a: &[usize], b: &[usize], modulus: &[usize], p: usize) -> Vec<usize> {
    let k = modulus.len() - 1;
    let mut prod = vec![0; 2 * k.max(1)];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&mut prod, modulus, p);
    prod.truncate(k);
    prod.resize(k, 0);
    prod
}

/// Reduces `value` in place modulo the monic `modulus`.
fn poly_rem(value: &mut [usize], modulus: &[usize], p: usize) {
    let k = modulus.len() - 1;
    for top in (k..value.len()).rev() {
        let c = value[top];
        if c == 0 {
            continue;
        }
        for (i, &m) in modulus.iter().enumerate() {
            let idx = top - k + i;
            value[idx] = (value[idx] + p * p - c * m % p) % p;
        }
    }
}

/// First monic irreducible polynomial of degree `k` over Z_p in enumeration
/// order, found by trial division by every monic polynomial of degree up to
/// `k/2`.
fn irreducible(p: usize, k: usize) -> Vec<usize> {
    if k == 1 {
        return vec![0, 1];
    }
    let monic = |degree: usize, index: usize| -> Vec<usize> {
        let mut c = Vec::with_capacity(degree + 1);
        let mut rest = index;
        for _ in 0..degree {
            c.push(rest % p);
            rest /= p;
        }
        c.push(1);
        c
    };
    (0..p.pow(k as u32))
        .map(|i| monic(k, i))
        .find(|candidate| {
            (1..=k / 2).all(|d| {
                (0..p.pow(d as u32)).all(|j| {
                    let divisor = monic(d, j);
                    let mut rem = candidate.clone();
                    poly_rem(&mut rem, &divisor, p);
                    rem[..d].iter().any(|&c| c != 0)
                })
            })
        })
        .expect("an irreducible polynomial exists for every degree")
}
