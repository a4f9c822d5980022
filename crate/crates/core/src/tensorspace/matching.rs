use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::operator::{copies, Operator, C64, ONE};
use super::permutation::{digits, Permutation};
use crate::error::{invalid, Result};
use crate::limits::Limits;

/// A perfect matching on `{0, ..., 2n-1}`. Points `0..n` index the ket
/// (row) tensor factors and `n..2n` the bra (column) factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    /// Validates that `pairs` partition `[2n]` for `n = pairs.len()`.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let points = 2 * pairs.len();
        let mut seen = vec![false; points];
        for &(a, b) in &pairs {
            for p in [a, b] {
                if p >= points || seen[p] {
                    return invalid(format!("{pairs:?} is not a perfect matching of [{points}]"));
                }
                seen[p] = true;
            }
        }
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        Ok(Matching { pairs })
    }

    /// The matching whose operator is `P_d(π)`: ket slot `π(j)` is tied to
    /// bra slot `j`.
    pub fn from_permutation(pi: &Permutation) -> Self {
        let n = pi.len();
        let pairs = (0..n).map(|j| (pi.apply(j), n + j)).collect();
        Matching::new(pairs).expect("permutation pairing is a perfect matching")
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of pairs `n`.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }
}

/// All `(2n-1)!!` perfect matchings of `[2n]`; the lowest free point is
/// paired first, partners in increasing order.
pub fn enumerate_matchings(n: usize, limits: &Limits) -> Result<Vec<Matching>> {
    limits.check_matching(n)?;
    let mut out = Vec::new();
    let mut free: Vec<usize> = (0..2 * n).collect();
    let mut cur = Vec::with_capacity(n);
    pair_up(&mut free, &mut cur, &mut out);
    Ok(out)
}

fn pair_up(free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Matching>) {
    if free.is_empty() {
        out.push(Matching { pairs: cur.clone() });
        return;
    }
    let first = free.remove(0);
    for k in 0..free.len() {
        let partner = free.remove(k);
        cur.push((first, partner));
        pair_up(free, cur, out);
        cur.pop();
        free.insert(k, partner);
    }
    free.insert(0, first);
}

/// `σ_M = Σ_{i compatible with M} |i_1 … i_n⟩⟨i_{n+1} … i_{2n}|`.
pub fn matching_operator(d: usize, m: &Matching, limits: &Limits) -> Result<Operator> {
    let n = m.n();
    let dim = limits.power_dim(d, n)?;
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let mut assignment = vec![0; n];
    let mut string = vec![0; 2 * n];
    for code in 0..d.pow(n as u32) {
        digits(d, n, code, &mut assignment);
        for (&(a, b), &letter) in m.pairs().iter().zip(&assignment) {
            string[a] = letter;
            string[b] = letter;
        }
        let row = string[..n].iter().fold(0, |acc, &c| acc * d + c);
        let col = string[n..].iter().fold(0, |acc, &c| acc * d + c);
        out[(row, col)] += ONE;
    }
    Ok(Operator::square_unchecked(out, copies(d, n)))
}

/// `Σ_{M ∈ 𝓜_{2n}} σ_M`.
pub fn matching_sum(d: usize, n: usize, limits: &Limits) -> Result<Operator> {
    let dim = limits.power_dim(d, n)?;
    let mut acc = Operator::zeros(copies(d, n), copies(d, n));
    debug_assert_eq!(acc.nrows(), dim);
    for m in enumerate_matchings(n, limits)? {
        acc = acc.add(&matching_operator(d, &m, limits)?)?;
    }
    Ok(acc)
}
