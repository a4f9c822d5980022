use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::operator::{copies, Operator, C64, ONE};
use crate::error::{invalid, Result};
use crate::limits::Limits;

/// A permutation of `{0, ..., n-1}`, stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return invalid(format!("{images:?} is not a bijection of [{n}]"));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// The transposition exchanging `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(i, j);
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different size");
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &p) in self.images.iter().enumerate() {
            inv[p] = i;
        }
        Permutation { images: inv }
    }

    /// Number of cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut cycles = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
            }
        }
        cycles
    }
}

/// All of S_n in lexicographic order of image lists.
pub fn enumerate_permutations(n: usize, limits: &Limits) -> Result<Vec<Permutation>> {
    limits.check_perm(n)?;
    Ok((0..n)
        .permutations(n)
        .map(|images| Permutation { images })
        .collect())
}

/// Splits a flat index on `(C^d)^{⊗n}` into letters, first subsystem first.
pub(crate) fn digits(d: usize, n: usize, mut idx: usize, out: &mut [usize]) {
    for slot in (0..n).rev() {
        out[slot] = idx % d;
        idx /= d;
    }
}

pub(crate) fn undigits(d: usize, letters: &[usize]) -> usize {
    letters.iter().fold(0, |acc, &c| acc * d + c)
}

/// Index of `P_d(π)|i⟩`: the letter in slot `m` moves to slot `π(m)`.
pub(crate) fn permuted_index(d: usize, pi: &Permutation, idx: usize, scratch: &mut [usize], out: &mut [usize]) -> usize {
    let n = pi.len();
    digits(d, n, idx, scratch);
    for m in 0..n {
        out[pi.apply(m)] = scratch[m];
    }
    undigits(d, out)
}

/// `P_d(π) = Σ_i |i_{π⁻¹(1)} … i_{π⁻¹(n)}⟩⟨i_1 … i_n|`.
pub fn permutation_operator(d: usize, pi: &Permutation, limits: &Limits) -> Result<Operator> {
    let n = pi.len();
    let dim = limits.power_dim(d, n)?;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut scratch = vec![0; n];
    let mut out = vec![0; n];
    for col in 0..dim {
        let row = permuted_index(d, pi, col, &mut scratch, &mut out);
        m[(row, col)] = ONE;
    }
    Ok(Operator::square_unchecked(m, copies(d, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
    }

    #[test]
    fn identity_operator() {
        let lim = Limits::default();
        for (d, n) in [(2, 1), (2, 3), (3, 2)] {
            let p = permutation_operator(d, &Permutation::identity(n), &lim).unwrap();
            let eye = Operator::identity(copies(d, n));
            assert_eq!(p, eye);
        }
    }

    #[test]
    fn swap_of_two_qubits() {
        let p = permutation_operator(2, &Permutation::transposition(2, 0, 1), &Limits::default()).unwrap();
        let want = [
            [1., 0., 0., 0.],
            [0., 0., 1., 0.],
            [0., 1., 0., 0.],
            [0., 0., 0., 1.],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p.matrix()[(i, j)].re, want[i][j]);
            }
        }
    }

    #[test]
    fn letter_moves_to_image_slot() {
        // π = (0→1, 1→2, 2→0); |a b c⟩ ↦ |c a b⟩.
        let pi = Permutation::new(vec![1, 2, 0]).unwrap();
        let d = 3;
        let col = undigits(d, &[0, 1, 2]);
        let row = undigits(d, &[2, 0, 1]);
        let p = permutation_operator(d, &pi, &Limits::default()).unwrap();
        assert_eq!(p.matrix()[(row, col)], ONE);
    }

    #[test]
    fn representation_homomorphism() {
        let lim = Limits::default();
        for (d, n) in [(2, 3), (3, 3), (2, 4)] {
            let perms = enumerate_permutations(n, &lim).unwrap();
            for a in perms.iter().step_by(5) {
                for b in perms.iter().step_by(3) {
                    let lhs = permutation_operator(d, &a.compose(b), &lim).unwrap();
                    let rhs = permutation_operator(d, a, &lim)
                        .unwrap()
                        .mul(&permutation_operator(d, b, &lim).unwrap())
                        .unwrap();
                    assert!(lhs.sub(&rhs).unwrap().max_abs_entry() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn cycles_and_inverse() {
        let pi = Permutation::new(vec![1, 0, 3, 4, 2]).unwrap();
        assert_eq!(pi.cycle_count(), 2);
        assert_eq!(pi.compose(&pi.inverse()), Permutation::identity(5));
        assert_eq!(Permutation::identity(4).cycle_count(), 4);
    }

    #[test]
    fn enumeration_size_and_cap() {
        let lim = Limits::default();
        assert_eq!(enumerate_permutations(5, &lim).unwrap().len(), 120);
        assert_eq!(enumerate_permutations(0, &lim).unwrap().len(), 1);
        assert!(enumerate_permutations(10, &lim).is_err());
    }
}
