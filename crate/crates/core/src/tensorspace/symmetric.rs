//! The symmetric subspace of `(C^d)^{⊗n}`: the type basis and three
//! constructions of its projector (group average, `VV†` from the type
//! isometry, and the closed-form entries used by the channel kernels).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::operator::{copies, Operator, C64, ONE, ZERO};
use super::permutation::{digits, enumerate_permutations, permuted_index, Permutation};
use crate::error::Result;
use crate::exactcomb::{enumerate_types, multinomial, TypeVector};
use crate::limits::Limits;
use num_traits::ToPrimitive;

/// Index tables for the type basis of `∨^n C^d`.
#[derive(Debug, Clone)]
pub struct TypeBasis {
    d: usize,
    n: usize,
    types: Vec<TypeVector>,
    index: HashMap<TypeVector, usize>,
    string_type: Vec<usize>,
    members: Vec<Vec<usize>>,
    counts: Vec<f64>,
}

impl TypeBasis {
    pub fn new(d: usize, n: usize, limits: &Limits) -> Result<Self> {
        let dim = limits.power_dim(d, n)?;
        let types = enumerate_types(d, n)?;
        let index: HashMap<TypeVector, usize> =
            types.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut string_type = vec![0; dim];
        let mut members = vec![Vec::new(); types.len()];
        let mut letters = vec![0; n];
        for (idx, slot) in string_type.iter_mut().enumerate() {
            digits(d, n, idx, &mut letters);
            let t = index[&TypeVector::of_string(d, &letters)];
            *slot = t;
            members[t].push(idx);
        }
        let counts = types
            .iter()
            .map(|t| multinomial(n as u64, t).unwrap().to_f64().unwrap())
            .collect();
        Ok(TypeBasis {
            d,
            n,
            types,
            index,
            string_type,
            members,
            counts,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `dim ∨^n C^d`.
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Dimension of the full space `d^n`.
    pub fn full_dim(&self) -> usize {
        self.string_type.len()
    }

    pub fn types(&self) -> &[TypeVector] {
        &self.types
    }

    pub fn position(&self, t: &TypeVector) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn type_of_string(&self, idx: usize) -> usize {
        self.string_type[idx]
    }

    pub fn strings_of_type(&self, t: usize) -> &[usize] {
        &self.members[t]
    }

    /// `binom(n, t)` as a float.
    pub fn count(&self, t: usize) -> f64 {
        self.counts[t]
    }

    /// The unit vector `|s_t⟩ = binom(n,t)^{-1/2} Σ_{T(i)=t} |i⟩`.
    pub fn state(&self, t: usize) -> Operator {
        let mut v = DVector::<C64>::zeros(self.full_dim());
        let amp = C64::new(self.counts[t].sqrt().recip(), 0.0);
        for &i in &self.members[t] {
            v[i] = amp;
        }
        Operator::ket(v, copies(self.d, self.n)).expect("type state shape")
    }

    /// `|s_t⟩⟨s_u|` as a dense operator on the full space.
    pub fn basis_operator(&self, t: usize, u: usize) -> Operator {
        let dim = self.full_dim();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let amp = C64::new((self.counts[t] * self.counts[u]).sqrt().recip(), 0.0);
        for &i in &self.members[t] {
            for &j in &self.members[u] {
                m[(i, j)] = amp;
            }
        }
        Operator::square_unchecked(m, copies(self.d, self.n))
    }

    /// `R[t, u] = Σ_{T(i)=t, T(j)=u} ρ[i, j]`.
    pub fn block_sums(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let s = self.len();
        let mut out = DMatrix::<C64>::zeros(s, s);
        for j in 0..rho.ncols() {
            let u = self.string_type[j];
            for i in 0..rho.nrows() {
                out[(self.string_type[i], u)] += rho[(i, j)];
            }
        }
        out
    }

    /// `V† ρ V` in type coordinates.
    pub fn compress(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut r = self.block_sums(rho);
        for t in 0..self.len() {
            for u in 0..self.len() {
                r[(t, u)] /= (self.counts[t] * self.counts[u]).sqrt();
            }
        }
        r
    }

    /// `V X V†` for `X` in type coordinates.
    pub fn expand(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = self.full_dim();
        let amps: Vec<f64> = self.counts.iter().map(|c| c.sqrt().recip()).collect();
        DMatrix::from_fn(dim, dim, |i, j| {
            let (t, u) = (self.string_type[i], self.string_type[j]);
            x[(t, u)] * (amps[t] * amps[u])
        })
    }
}

/// `(1/n!) Σ_{π∈S_n} P_d(π)`, summed through the coset decomposition
/// `S_m = ⋃_j (j m)·S_{m-1}`, which covers every group element once.
pub fn sym_projector_group(d: usize, n: usize, limits: &Limits) -> Result<Operator> {
    let full = limits.power_dim(d, n)?;
    if n == 0 {
        return Ok(Operator::identity(vec![1]));
    }
    let mut proj = DMatrix::<C64>::identity(d, d);
    for m in 2..=n {
        let dim = proj.nrows() * d;
        // Π_{m-1} ⊗ I_d
        let lifted = proj.kronecker(&DMatrix::<C64>::identity(d, d));
        let mut acc = lifted.clone();
        let mut scratch = vec![0; m];
        let mut out = vec![0; m];
        for j in 0..m - 1 {
            let tau = Permutation::transposition(m, j, m - 1);
            // (P(τ) X)[τ·r, :] = X[r, :]
            for r in 0..dim {
                let target = permuted_index(d, &tau, r, &mut scratch, &mut out);
                for c in 0..dim {
                    acc[(target, c)] += lifted[(r, c)];
                }
            }
        }
        proj = acc / C64::new(m as f64, 0.0);
    }
    debug_assert_eq!(proj.nrows(), full);
    Ok(Operator::square_unchecked(proj, copies(d, n)))
}

/// The group average with S_n enumerated element by element (`n!` terms).
pub fn sym_projector_enumerated(d: usize, n: usize, limits: &Limits) -> Result<Operator> {
    let dim = limits.power_dim(d, n)?;
    let perms = enumerate_permutations(n, limits)?;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut scratch = vec![0; n];
    let mut out = vec![0; n];
    for pi in &perms {
        for col in 0..dim {
            let row = permuted_index(d, pi, col, &mut scratch, &mut out);
            m[(row, col)] += ONE;
        }
    }
    let m = m / C64::new(perms.len() as f64, 0.0);
    Ok(Operator::square_unchecked(m, copies(d, n)))
}

/// The `d^n × dim ∨^n C^d` isometry whose columns are the type states.
pub fn type_isometry(d: usize, n: usize, limits: &Limits) -> Result<Operator> {
    let basis = TypeBasis::new(d, n, limits)?;
    let mut v = DMatrix::<C64>::zeros(basis.full_dim(), basis.len());
    for t in 0..basis.len() {
        let amp = C64::new(basis.count(t).sqrt().recip(), 0.0);
        for &i in basis.strings_of_type(t) {
            v[(i, t)] = amp;
        }
    }
    Operator::new(v, copies(d, n), vec![basis.len()])
}

/// `V V†`, accumulated column by column over the nonzero entries of `V`.
pub fn isometry_range_projector(v: &Operator) -> Operator {
    let m = v.matrix();
    let rows = m.nrows();
    let mut out = DMatrix::<C64>::zeros(rows, rows);
    for col in m.column_iter() {
        let nz: Vec<(usize, C64)> = col
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(i, z)| (i, *z))
            .collect();
        for &(i, a) in &nz {
            for &(j, b) in &nz {
                out[(i, j)] += a * b.conj();
            }
        }
    }
    Operator::square_unchecked(out, v.row_dims().to_vec())
}

/// Closed-form entries `Π[i,j] = [T(i)=T(j)] / binom(n, T(i))`.
pub fn sym_projector(d: usize, n: usize, limits: &Limits) -> Result<Operator> {
    let basis = TypeBasis::new(d, n, limits)?;
    let dim = basis.full_dim();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let t = basis.type_of_string(i);
        if t == basis.type_of_string(j) {
            C64::new(basis.count(t).recip(), 0.0)
        } else {
            ZERO
        }
    });
    Ok(Operator::square_unchecked(m, copies(d, n)))
}

/// `|φ⟩^{⊗n}` as a ket.
pub fn tensor_power_ket(phi: &DVector<C64>, n: usize) -> DVector<C64> {
    let d = phi.len();
    let dim = d.pow(n as u32);
    let mut letters = vec![0; n];
    DVector::from_fn(dim, |idx, _| {
        digits(d, n, idx, &mut letters);
        letters.iter().fold(ONE, |acc, &c| acc * phi[c])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactcomb::sym_dim;
    use crate::tensorspace::permutation::{permutation_operator, undigits};

    fn lim() -> Limits {
        Limits::default()
    }

    fn diff(a: &Operator, b: &Operator) -> f64 {
        a.sub(b).unwrap().frobenius_norm()
    }

    #[test]
    fn two_qubit_projector_is_half_identity_plus_swap() {
        let p = sym_projector_group(2, 2, &lim()).unwrap();
        let swap = permutation_operator(2, &Permutation::transposition(2, 0, 1), &lim()).unwrap();
        let want = Operator::identity(vec![2, 2]).add(&swap).unwrap().scale_real(0.5);
        assert!(diff(&p, &want) < 1e-15);
        assert!((p.trace().re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_copy_projector_is_identity() {
        for d in 1..5 {
            let p = sym_projector_group(d, 1, &lim()).unwrap();
            assert_eq!(p, Operator::identity(vec![d]));
        }
    }

    #[test]
    fn coset_recursion_equals_enumeration() {
        for (d, n) in [(2, 2), (2, 3), (3, 3), (2, 5), (3, 4), (2, 6)] {
            let a = sym_projector_group(d, n, &lim()).unwrap();
            let b = sym_projector_enumerated(d, n, &lim()).unwrap();
            assert!(diff(&a, &b) < 1e-12, "d={d} n={n}");
        }
    }

    #[test]
    fn projector_properties() {
        for (d, n) in [(2, 3), (3, 2), (2, 4), (4, 2)] {
            let p = sym_projector_group(d, n, &lim()).unwrap();
            assert!(p.hermiticity_error() < 1e-14);
            let p2 = p.mul(&p).unwrap();
            assert!(diff(&p2, &p) <= 1e-10);
            let want = sym_dim(d as u64, n as u64).to_f64().unwrap();
            assert!((p.trace().re - want).abs() <= 1e-8);
            for pi in enumerate_permutations(n, &lim()).unwrap() {
                let pp = permutation_operator(d, &pi, &lim()).unwrap().mul(&p).unwrap();
                assert!(diff(&pp, &p) < 1e-12);
            }
        }
    }

    #[test]
    fn type_isometry_examples() {
        let v = type_isometry(2, 2, &lim()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[1.0, 0.0, 0.0], [0.0, r, 0.0], [0.0, r, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..4 {
            for j in 0..3 {
                assert!((v.matrix()[(i, j)].re - want[i][j]).abs() < 1e-15);
            }
        }
        for (d, n) in [(2, 2), (3, 3), (2, 6)] {
            let v = type_isometry(d, n, &lim()).unwrap();
            let gram = v.adjoint().mul(&v).unwrap();
            let eye = DMatrix::<C64>::identity(v.ncols(), v.ncols());
            assert!((gram.matrix() - eye).norm() < 1e-12);
        }
    }

    #[test]
    fn three_projector_constructions_agree() {
        for (d, n) in [(2, 1), (2, 4), (3, 3), (4, 2), (2, 7)] {
            let group = sym_projector_group(d, n, &lim()).unwrap();
            let vvd = isometry_range_projector(&type_isometry(d, n, &lim()).unwrap());
            let closed = sym_projector(d, n, &lim()).unwrap();
            assert!(diff(&group, &vvd) <= 1e-12);
            assert!(diff(&closed, &vvd) <= 1e-12);
        }
    }

    #[test]
    fn projector_image_of_basis_vector() {
        // Π|i⟩ = binom(n,T(i))^{-1/2} |s_T(i)⟩
        let (d, n) = (3, 3);
        let basis = TypeBasis::new(d, n, &lim()).unwrap();
        let p = sym_projector_group(d, n, &lim()).unwrap();
        for i in [0, 5, 13, 26] {
            let t = basis.type_of_string(i);
            let col = p.matrix().column(i).into_owned();
            let want = basis.state(t).matrix().column(0) * C64::new(basis.count(t).sqrt().recip(), 0.0);
            assert!((col - want).norm() < 1e-14);
        }
    }

    #[test]
    fn compress_expand_is_projection() {
        let (d, n) = (2, 3);
        let basis = TypeBasis::new(d, n, &lim()).unwrap();
        let dim = basis.full_dim();
        let rho = DMatrix::from_fn(dim, dim, |i, j| C64::new((i * 3 + j) as f64, (i as f64) - (j as f64)));
        let p = sym_projector(d, n, &lim()).unwrap();
        let want = p.matrix() * &rho * p.matrix();
        let got = basis.expand(&basis.compress(&rho));
        assert!((want - got).norm() < 1e-10);
    }

    #[test]
    fn tensor_power_ket_is_kron() {
        let phi = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let k = tensor_power_ket(&phi, 3);
        let op = Operator::ket(phi.clone(), vec![2]).unwrap().tensor_power(3);
        assert!((k - op.matrix().column(0)).norm() < 1e-15);
        assert_eq!(undigits(2, &[1, 0, 1]), 5);
    }
}
