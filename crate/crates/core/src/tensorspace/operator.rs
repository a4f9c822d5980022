use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result, SymsubError};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A dense complex matrix between tensor-product spaces.
///
/// Subsystems are ordered with the first one most significant in the flat
/// index. A column vector (ket) has `col_dims == [1]`; a scalar is the 1x1
/// operator on dims `[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// `n` copies of `C^d`, or the trivial space `[1]` when `n == 0`.
pub fn copies(d: usize, n: usize) -> Vec<usize> {
    if n == 0 {
        vec![1]
    } else {
        vec![d; n]
    }
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, row_dims: Vec<usize>, col_dims: Vec<usize>) -> Result<Self> {
        if row_dims.is_empty() || col_dims.is_empty() {
            return invalid("subsystem dimension lists must be nonempty");
        }
        if matrix.nrows() != product(&row_dims) || matrix.ncols() != product(&col_dims) {
            return Err(SymsubError::DimensionMismatch(format!(
                "matrix is {}x{} but dims are {:?} x {:?}",
                matrix.nrows(),
                matrix.ncols(),
                row_dims,
                col_dims
            )));
        }
        Ok(Operator {
            matrix,
            row_dims,
            col_dims,
        })
    }

    pub fn square(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        Operator::new(matrix, dims.clone(), dims)
    }

    pub(crate) fn square_unchecked(matrix: DMatrix<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), product(&dims));
        Operator {
            matrix,
            row_dims: dims.clone(),
            col_dims: dims,
        }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = product(&dims);
        Operator::square_unchecked(DMatrix::identity(n, n), dims)
    }

    pub fn zeros(row_dims: Vec<usize>, col_dims: Vec<usize>) -> Self {
        Operator {
            matrix: DMatrix::zeros(product(&row_dims), product(&col_dims)),
            row_dims,
            col_dims,
        }
    }

    pub fn scalar(c: C64) -> Self {
        Operator::square_unchecked(DMatrix::from_element(1, 1, c), vec![1])
    }

    /// A column vector on the given subsystems.
    pub fn ket(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let n = amplitudes.len();
        Operator::new(DMatrix::from_column_slice(n, 1, amplitudes.as_slice()), dims, vec![1])
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn row_dims(&self) -> &[usize] {
        &self.row_dims
    }

    pub fn col_dims(&self) -> &[usize] {
        &self.col_dims
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.row_dims == self.col_dims
    }

    pub fn is_ket(&self) -> bool {
        self.matrix.ncols() == 1
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint(),
            row_dims: self.col_dims.clone(),
            col_dims: self.row_dims.clone(),
        }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            matrix: &self.matrix * c,
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Operator {
        self.scale(C64::new(c, 0.0))
    }

    fn check_same_shape(&self, other: &Operator) -> Result<()> {
        if self.row_dims != other.row_dims || self.col_dims != other.col_dims {
            return Err(SymsubError::DimensionMismatch(format!(
                "{:?}x{:?} vs {:?}x{:?}",
                self.row_dims, self.col_dims, other.row_dims, other.col_dims
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix + &other.matrix,
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix - &other.matrix,
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        })
    }

    /// `self * other`; the inner subsystem structure must agree.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        if self.col_dims != other.row_dims {
            return Err(SymsubError::DimensionMismatch(format!(
                "cannot multiply columns {:?} with rows {:?}",
                self.col_dims, other.row_dims
            )));
        }
        Ok(Operator {
            matrix: &self.matrix * &other.matrix,
            row_dims: self.row_dims.clone(),
            col_dims: other.col_dims.clone(),
        })
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Operator) -> Operator {
        let mut row_dims = strip_trivial(&self.row_dims);
        row_dims.extend(strip_trivial(&other.row_dims));
        let mut col_dims = strip_trivial(&self.col_dims);
        col_dims.extend(strip_trivial(&other.col_dims));
        if row_dims.is_empty() {
            row_dims.push(1);
        }
        if col_dims.is_empty() {
            col_dims.push(1);
        }
        Operator {
            matrix: self.matrix.kronecker(&other.matrix),
            row_dims,
            col_dims,
        }
    }

    /// `self^{⊗n}`; `n == 0` gives the 1x1 identity.
    pub fn tensor_power(&self, n: usize) -> Operator {
        if n == 0 {
            return Operator::scalar(ONE);
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.kron(self);
        }
        acc
    }

    /// `|v><v|` for a ket.
    pub fn outer(&self) -> Result<Operator> {
        if !self.is_ket() {
            return invalid("outer product needs a ket");
        }
        Ok(Operator {
            matrix: &self.matrix * self.matrix.adjoint(),
            row_dims: self.row_dims.clone(),
            col_dims: self.row_dims.clone(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖_max`, zero for Hermitian operators.
    pub fn hermiticity_error(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        let n = self.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Traces out every subsystem not listed in `keep` (0-indexed).
    ///
    /// Kept subsystems stay in their original order. Keeping nothing yields
    /// the 1x1 operator holding the trace.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        if !self.is_square() {
            return invalid("partial trace needs matching row and column dims");
        }
        let dims = &self.row_dims;
        if let Some(&bad) = keep.iter().find(|&&i| i >= dims.len()) {
            return invalid(format!("subsystem {bad} out of range for {} subsystems", dims.len()));
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&i| dims[i]).collect();
        let kept_total: usize = kept_dims.iter().product();
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
        let traced_total: usize = traced.iter().map(|&i| dims[i]).product();

        // flat[t * kept_total + a] is the full index with traced part t and kept part a.
        let full = self.nrows();
        let mut flat = vec![0usize; full];
        let mut digits = vec![0usize; dims.len()];
        for idx in 0..full {
            let mut rem = idx;
            for s in (0..dims.len()).rev() {
                digits[s] = rem % dims[s];
                rem /= dims[s];
            }
            let a = keep_sorted.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
            let t = traced.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
            flat[t * kept_total + a] = idx;
        }

        let mut out = DMatrix::<C64>::zeros(kept_total, kept_total);
        for t in 0..traced_total {
            let block = &flat[t * kept_total..(t + 1) * kept_total];
            for (a, &ia) in block.iter().enumerate() {
                for (b, &ib) in block.iter().enumerate() {
                    out[(a, b)] += self.matrix[(ia, ib)];
                }
            }
        }
        let out_dims = if kept_dims.is_empty() { vec![1] } else { kept_dims };
        Ok(Operator::square_unchecked(out, out_dims))
    }

    /// Column-stacked vectorization: entry `(i, j)` goes to `i + j * nrows`.
    pub fn vectorize(&self) -> DVector<C64> {
        DVector::from_column_slice(self.matrix.as_slice())
    }

    pub fn unvectorize(v: &[C64], row_dims: Vec<usize>, col_dims: Vec<usize>) -> Result<Operator> {
        let (r, c) = (product(&row_dims), product(&col_dims));
        if v.len() != r * c {
            return Err(SymsubError::DimensionMismatch(format!(
                "vector of length {} cannot fill {r}x{c}",
                v.len()
            )));
        }
        Operator::new(DMatrix::from_column_slice(r, c, v), row_dims, col_dims)
    }
}

fn strip_trivial(dims: &[usize]) -> Vec<usize> {
    if dims == [1] {
        Vec::new()
    } else {
        dims.to_vec()
    }
}

/// Applies `m` (a `dims[factor] x dims[factor]` matrix) to one tensor factor
/// of a flat vector on `dims`.
pub(crate) fn apply_on_factor(v: &[C64], dims: &[usize], factor: usize, m: &DMatrix<C64>) -> Vec<C64> {
    let df = dims[factor];
    let inner: usize = dims[factor + 1..].iter().product();
    let outer: usize = dims[..factor].iter().product();
    let mut out = vec![ZERO; v.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * df * inner + i;
            for r in 0..df {
                let mut acc = ZERO;
                for c in 0..df {
                    acc += m[(r, c)] * v[base + c * inner];
                }
                out[base + r * inner] = acc;
            }
        }
    }
    out
}

/// JSON form: dims plus row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct OperatorJson {
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::with_capacity(self.matrix.len());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let z = self.matrix[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorJson {
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = OperatorJson::deserialize(deserializer)?;
        let (r, c) = (product(&raw.row_dims), product(&raw.col_dims));
        if raw.entries.len() != r * c {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries, found {}",
                r * c,
                raw.entries.len()
            )));
        }
        let matrix = DMatrix::from_fn(r, c, |i, j| {
            let [re, im] = raw.entries[i * c + j];
            C64::new(re, im)
        });
        Operator::new(matrix, raw.row_dims, raw.col_dims).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(dims: Vec<usize>, seed: u64) -> Operator {
        let n: usize = dims.iter().product();
        let mut s = seed;
        let m = DMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            let b = ((s >> 13) & 0xffff) as f64 / 65536.0 - 0.5;
            c(a, b)
        });
        Operator::square(m, dims).unwrap()
    }

    #[test]
    fn shape_is_validated() {
        assert!(Operator::new(DMatrix::zeros(4, 4), vec![2, 3], vec![2, 2]).is_err());
        assert!(Operator::new(DMatrix::zeros(1, 1), vec![], vec![1]).is_err());
    }

    #[test]
    fn partial_trace_keep_all_and_none() {
        let op = sample(vec![2, 3], 7);
        let same = op.partial_trace(&[0, 1]).unwrap();
        assert_eq!(same, op);
        let none = op.partial_trace(&[]).unwrap();
        assert_eq!(none.row_dims(), &[1]);
        assert!((none.matrix()[(0, 0)] - op.trace()).norm() < 1e-14);
        assert!(op.partial_trace(&[2]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = sample(vec![2], 1);
        let b = sample(vec![3], 2);
        let ab = a.kron(&b);
        let left = ab.partial_trace(&[0]).unwrap();
        let want = a.scale(b.trace());
        assert!(left.sub(&want).unwrap().frobenius_norm() < 1e-13);
        let right = ab.partial_trace(&[1]).unwrap();
        let want = b.scale(a.trace());
        assert!(right.sub(&want).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn partial_trace_middle_subsystem() {
        let (a, b, cc) = (sample(vec![2], 3), sample(vec![3], 4), sample(vec![2], 5));
        let abc = a.kron(&b).kron(&cc);
        let ac = abc.partial_trace(&[0, 2]).unwrap();
        let want = a.kron(&cc).scale(b.trace());
        assert!(ac.sub(&want).unwrap().frobenius_norm() < 1e-12);
        assert!((ac.trace() - abc.trace()).norm() < 1e-12);
    }

    #[test]
    fn kron_drops_trivial_factors() {
        let a = sample(vec![2], 9);
        let s = Operator::scalar(c(2.0, 0.0));
        let k = s.kron(&a);
        assert_eq!(k.row_dims(), &[2]);
        assert!(k.sub(&a.scale_real(2.0)).unwrap().frobenius_norm() < 1e-15);
        assert_eq!(a.tensor_power(0).row_dims(), &[1]);
        assert_eq!(a.tensor_power(3).row_dims(), &[2, 2, 2]);
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let op = Operator::square(m, vec![2]).unwrap();
        let v = op.vectorize();
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(v[2], c(2.0, 0.0));
        let back = Operator::unvectorize(v.as_slice(), vec![2], vec![2]).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn apply_on_factor_matches_kron() {
        let m = sample(vec![3], 11);
        let v: Vec<C64> = (0..12).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let dims = [2, 3, 2];
        let got = apply_on_factor(&v, &dims, 1, m.matrix());
        let full = Operator::identity(vec![2]).kron(&m).kron(&Operator::identity(vec![2]));
        let want = full.matrix() * DVector::from_column_slice(&v);
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let op = sample(vec![2, 2], 13);
        let s = serde_json::to_string(&op).unwrap();
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
        let bad = r#"{"row_dims":[2],"col_dims":[2],"entries":[[1,0]]}"#;
        assert!(serde_json::from_str::<Operator>(bad).is_err());
    }
}
