//! A parameter set chosen step by step: Γ, then b, N_dec, 𝖽, γ and last β.

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{LabError, Result};

use super::inequalities::{beta_rates, check_inequalities, entries_at, gamma_conditions, Entry};
use super::params::ParameterSet;

/// γ is searched among k/2^GAMMA_BITS.
const GAMMA_BITS: usize = 32;
const MAX_B: u64 = 100_000;
const MAX_STEP: u64 = 10_000;

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn find<'a>(es: &'a [Entry], id: &str) -> &'a Entry {
    es.iter().find(|e| e.id == id).expect("known id")
}

/// Smallest positive integer passing every listed inequality.
fn least(p: &ParameterSet, ids: &[&str], set: impl Fn(&mut ParameterSet, u64)) -> Option<u64> {
    let mut trial = p.clone();
    (1..=MAX_STEP).find(|&v| {
        set(&mut trial, v);
        let es = entries_at(&trial, &int(1));
        ids.iter().all(|id| find(&es, id).holds())
    })
}

/// Each γ condition is affine in γ; returns the supremum of admissible γ
/// in (0, 1), or None when some condition fails for every small γ.
fn gamma_bound(p: &ParameterSet) -> Option<BigRational> {
    let zero = gamma_conditions(p, &BigRational::zero());
    let unit = gamma_conditions(p, &BigRational::one());
    let mut sup = BigRational::one();
    for (c0, c1) in zero.iter().zip(&unit) {
        // f(γ) = lhs − rhs = f0 + γ(f1 − f0) must be negative
        let f0 = -c0.slack();
        let slope = -c1.slack() - &f0;
        if f0 >= BigRational::zero() {
            return None;
        }
        if slope.is_positive() {
            sup = sup.min(-f0 / slope);
        }
    }
    Some(sup)
}

/// Largest k/2^GAMMA_BITS strictly below `sup`.
fn dyadic_below(sup: &BigRational) -> Option<BigRational> {
    let den = num::pow(BigInt::from(2), GAMMA_BITS);
    let scaled = sup * BigRational::from_integer(den.clone());
    let mut k = scaled.floor().to_integer();
    if BigRational::from_integer(k.clone()) == scaled {
        k -= 1;
    }
    (k.is_positive()).then(|| BigRational::new(k, den))
}

/// The recipe for b ≥ b_min. β is 1 plus half the room left at β' = 1,
/// measured in units of the fastest-falling slack.
pub fn suggest_from(dim: usize, b_min: u64) -> Result<ParameterSet> {
    for b in b_min..=MAX_B {
        let mut p = ParameterSet {
            a: BigInt::from(1024),
            b,
            beta: int(2),
            big_gamma: BigRational::new(1.into(), 2.into()),
            gamma: BigRational::new(1.into(), 2.into()),
            n_dec: 1,
            d: 1,
            c_r: BigRational::new(1.into(), 10.into()),
            dim,
        };
        let Some(n_dec) = least(&p, &["4"], |t, v| t.n_dec = v) else { continue };
        p.n_dec = n_dec;
        let Some(d) = least(&p, &["8", "9"], |t, v| t.d = v) else { continue };
        p.d = d;
        let Some(gamma) = gamma_bound(&p).and_then(|s| dyadic_below(&s)) else { continue };
        p.gamma = gamma;
        let at_one = entries_at(&p, &int(1));
        if !at_one.iter().all(Entry::holds) {
            continue;
        }
        let min_slack = at_one.iter().map(Entry::slack).min().expect("nonempty");
        let rate = beta_rates(&p).into_iter().max().expect("nonempty");
        let margin = if rate.is_positive() { min_slack / rate } else { BigRational::one() };
        p.beta = int(1) + margin / int(2);
        if check_inequalities(&p).passed() {
            return Ok(p);
        }
    }
    Err(LabError::ParameterCondition(format!("no admissible base below {MAX_B}")))
}

/// Γ = 1/2 and the first b above 600 for which the remaining steps succeed.
pub fn suggest_parameters(dim: usize) -> Result<ParameterSet> {
    if dim != 2 && dim != 3 {
        return Err(LabError::BadDimension(dim));
    }
    suggest_from(dim, 601)
}
