//! Koszul signs, shifted prefixes and tensor words.
//!
//! Every sign used by the differentials and products is built from the helpers here: adjacent
//! swaps of homogeneous symbols and the prefix parities of shifted bar degrees.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("prefix length {index} exceeds the {len} available degrees")]
    IndexOutOfRange { index: usize, len: usize },
}

/// `(-1)^exponent` as a scalar.
pub fn sign(exponent: i64) -> Scalar {
    if exponent.rem_euclid(2) == 0 {
        Scalar::one()
    } else {
        -Scalar::one()
    }
}

/// `(-1)^exponent` as an integer.
pub fn sign_i(exponent: i64) -> i64 {
    if exponent.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

pub fn is_odd(value: i64) -> bool {
    value.rem_euclid(2) == 1
}

/// Sign of moving a symbol of degree `dega` past one of degree `degb`.
pub fn koszul_swap_sign(dega: i64, degb: i64) -> i64 {
    sign_i(dega * degb)
}

/// Parity of `|a_1| + ... + |a_i| - i`, returned as `true` when odd.
pub fn epsilon_prefix(bar_degrees: &[i64], index: usize) -> Result<bool, SignError> {
    if index > bar_degrees.len() {
        return Err(SignError::IndexOutOfRange { index, len: bar_degrees.len() });
    }
    let total: i64 = bar_degrees[..index].iter().map(|d| d - 1).sum();
    Ok(is_odd(total))
}

/// Sign of permuting homogeneous symbols: `order[j]` is the original position of the symbol
/// that ends up in slot `j`. Computed as a product of adjacent swaps (bubble sort).
pub fn permutation_sign(degrees: &[i64], order: &[usize]) -> i64 {
    let mut current: Vec<usize> = (0..degrees.len()).collect();
    let target_rank: Vec<usize> = {
        let mut rank = vec![0; order.len()];
        for (slot, original) in order.iter().enumerate() {
            rank[*original] = slot;
        }
        rank
    };
    let mut total = 1;
    let mut swapped = true;
    while swapped {
        swapped = false;
        for j in 0..current.len().saturating_sub(1) {
            if target_rank[current[j]] > target_rank[current[j + 1]] {
                total *= koszul_swap_sign(degrees[current[j]], degrees[current[j + 1]]);
                current.swap(j, j + 1);
                swapped = true;
            }
        }
    }
    total
}

/// Sign of the inclusion `U^v (x) V^v -> (V (x) U)^v`, `a (x) b -> (v (x) u -> b(v) a(u))`.
/// The rule carries no sign of its own; degree bookkeeping only decides which evaluations
/// can be nonzero.
pub fn dual_pairing_embed(_f_deg: i64, _g_deg: i64) -> i64 {
    1
}

/// Evaluates `sigma(alpha (x) beta)(v (x) u)` for functionals given by their values.
pub fn sigma_evaluate<FA, FB>(alpha: FA, beta: FB, v: usize, u: usize) -> Scalar
where
    FA: Fn(usize) -> Scalar,
    FB: Fn(usize) -> Scalar,
{
    beta(v) * alpha(u) * Scalar::from_integer(dual_pairing_embed(0, 0).into())
}

/// Matrix of the dual differential `d(alpha)(x) = -(-1)^{|alpha|} alpha(d x)` on the dual
/// basis. `differential[j]` lists `d(e_j)`; the result lists `d(e_j^*)` over dual basis indices.
/// The dual functional `e_j^*` has degree `-degrees[j]`.
pub fn dual_differential(degrees: &[i64], differential: &[Vec<(usize, Scalar)>]) -> Vec<Vec<(usize, Scalar)>> {
    let mut out = vec![Vec::new(); degrees.len()];
    // d(e_j^*)(e_i) = -(-1)^{|e_j^*|} e_j^*(d e_i), nonzero when d e_i has an e_j component.
    for (source, images) in differential.iter().enumerate() {
        for (target, coeff) in images {
            let value = -sign(-degrees[*target]) * coeff;
            if !value.is_zero() {
                out[*target].push((source, value));
            }
        }
    }
    out
}

/// A tensor word: bar slots (basis indices of non-unit elements) followed by a tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub bars: Vec<u16>,
    pub tail: u16,
}

impl Word {
    pub fn new(bars: Vec<u16>, tail: u16) -> Self {
        Word { bars, tail }
    }

    pub fn tail_only(tail: u16) -> Self {
        Word { bars: Vec::new(), tail }
    }

    pub fn bar_length(&self) -> usize {
        self.bars.len()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bars
            .len()
            .cmp(&other.bars.len())
            .then_with(|| self.bars.cmp(&other.bars))
            .then_with(|| self.tail.cmp(&other.tail))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order on input sequences of bar slots: length first, then lexicographic.
pub fn bars_order(left: &[u16], right: &[u16]) -> Ordering {
    left.len().cmp(&right.len()).then_with(|| left.cmp(right))
}
