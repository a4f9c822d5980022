use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SymsubError};
use crate::exec;
use crate::limits::Limits;
use crate::tensorspace::{Operator, TypeBasis, C64};

/// The inputs a superoperator's columns are indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Column `i + j·D` is the image of `|i⟩⟨j|`.
    Full,
    /// Column `t + u·K` is the image of `|s_t⟩⟨s_u|` on `∨^n C^d`, `K` the
    /// number of types.
    Symmetric { d: usize, n: usize },
}

/// A linear map on operators as a matrix acting on column-stacked
/// vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: DMatrix<C64>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    domain: Domain,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

impl Superoperator {
    /// Tabulates `f` on the matrix units of the full input space.
    pub fn from_map<F>(in_dims: Vec<usize>, out_dims: Vec<usize>, limits: &Limits, f: F) -> Result<Self>
    where
        F: Fn(&Operator) -> Result<Operator> + Sync + Send,
    {
        let (din, dout) = (product(&in_dims), product(&out_dims));
        limits.check_superop(din, dout)?;
        let columns = exec::map_indexed(din * din, |c| {
            let mut unit = DMatrix::<C64>::zeros(din, din);
            unit[(c % din, c / din)] = C64::new(1.0, 0.0);
            let x = Operator::square(unit, in_dims.clone())?;
            f(&x)
        });
        Self::assemble(columns, in_dims, out_dims, Domain::Full)
    }

    /// Tabulates `f` on the type-basis operators `|s_t⟩⟨s_u|` of `∨^n C^d`.
    pub fn restricted_from_map<F>(d: usize, n: usize, out_dims: Vec<usize>, limits: &Limits, f: F) -> Result<Self>
    where
        F: Fn(&Operator) -> Result<Operator> + Sync + Send,
    {
        let basis = TypeBasis::new(d, n, limits)?;
        let k = basis.len();
        limits.check_superop(k, product(&out_dims))?;
        let columns = exec::map_indexed(k * k, |c| f(&basis.basis_operator(c % k, c / k)));
        let in_dims = crate::tensorspace::copies(d, n);
        Self::assemble(columns, in_dims, out_dims, Domain::Symmetric { d, n })
    }

    fn assemble(columns: Vec<Result<Operator>>, in_dims: Vec<usize>, out_dims: Vec<usize>, domain: Domain) -> Result<Self> {
        let rows = product(&out_dims).pow(2);
        let mut matrix = DMatrix::<C64>::zeros(rows, columns.len());
        for (c, col) in columns.into_iter().enumerate() {
            let col = col?;
            if col.row_dims() != out_dims.as_slice() || col.col_dims() != out_dims.as_slice() {
                return Err(SymsubError::DimensionMismatch(format!(
                    "map produced dims {:?}, expected {:?}",
                    col.row_dims(),
                    out_dims
                )));
            }
            matrix.column_mut(c).copy_from_slice(col.matrix().as_slice());
        }
        Ok(Superoperator {
            matrix,
            in_dims,
            out_dims,
            domain,
        })
    }

    /// The identity map on operators over `dims`.
    pub fn identity(dims: Vec<usize>) -> Self {
        let dim = product(&dims);
        Superoperator {
            matrix: DMatrix::identity(dim * dim, dim * dim),
            in_dims: dims.clone(),
            out_dims: dims,
            domain: Domain::Full,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// `outer ∘ inner`. `outer` must have the full domain.
    pub fn compose(outer: &Superoperator, inner: &Superoperator) -> Result<Superoperator> {
        if outer.domain != Domain::Full || outer.in_dims != inner.out_dims {
            return Err(SymsubError::DimensionMismatch(format!(
                "cannot compose map on {:?} ({:?}) after map into {:?}",
                outer.in_dims, outer.domain, inner.out_dims
            )));
        }
        Ok(Superoperator {
            matrix: &outer.matrix * &inner.matrix,
            in_dims: inner.in_dims.clone(),
            out_dims: outer.out_dims.clone(),
            domain: inner.domain,
        })
    }

    /// Restricts a full-domain map to inputs on `∨^n C^d`, i.e. right
    /// multiplication by the isometry `|s_t⟩⟨s_u| ↦ vec(|s_t⟩⟨s_u|)`.
    pub fn restrict(&self, d: usize, n: usize, limits: &Limits) -> Result<Superoperator> {
        let in_dims = crate::tensorspace::copies(d, n);
        if self.domain != Domain::Full || self.in_dims != in_dims {
            return Err(SymsubError::DimensionMismatch(format!(
                "cannot restrict a map on {:?} ({:?}) to symmetric inputs on {in_dims:?}",
                self.in_dims, self.domain
            )));
        }
        let basis = TypeBasis::new(d, n, limits)?;
        let (k, dim) = (basis.len(), basis.full_dim());
        let mut out = DMatrix::<C64>::zeros(self.matrix.nrows(), k * k);
        for u in 0..k {
            for t in 0..k {
                let amp = (basis.count(t) * basis.count(u)).sqrt().recip();
                let mut col = out.column_mut(t + u * k);
                for &j in basis.strings_of_type(u) {
                    for &i in basis.strings_of_type(t) {
                        col.axpy(C64::new(amp, 0.0), &self.matrix.column(i + j * dim), C64::new(1.0, 0.0));
                    }
                }
            }
        }
        Ok(Superoperator {
            matrix: out,
            in_dims,
            out_dims: self.out_dims.clone(),
            domain: Domain::Symmetric { d, n },
        })
    }

    fn check_same_shape(&self, other: &Superoperator) -> Result<()> {
        if self.in_dims != other.in_dims || self.out_dims != other.out_dims || self.domain != other.domain {
            return Err(SymsubError::DimensionMismatch(format!(
                "superoperators differ in shape: {:?}->{:?} ({:?}) vs {:?}->{:?} ({:?})",
                self.in_dims, self.out_dims, self.domain, other.in_dims, other.out_dims, other.domain
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same_shape(other)?;
        Ok(Superoperator {
            matrix: &self.matrix + &other.matrix,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same_shape(other)?;
        Ok(Superoperator {
            matrix: &self.matrix - &other.matrix,
            ..self.clone()
        })
    }

    pub fn scale_real(&self, c: f64) -> Superoperator {
        Superoperator {
            matrix: self.matrix.scale(c),
            ..self.clone()
        }
    }

    /// `‖self − other‖_F` on the shared domain.
    pub fn distance(&self, other: &Superoperator) -> Result<f64> {
        Ok(self.sub(other)?.matrix.norm())
    }

    /// Applies the map. On a symmetric domain the input is first compressed
    /// to type coordinates, so the result is the image of `Π ρ Π`.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.row_dims() != self.in_dims.as_slice() || rho.col_dims() != self.in_dims.as_slice() {
            return Err(SymsubError::DimensionMismatch(format!(
                "input dims {:?} do not match map input {:?}",
                rho.row_dims(),
                self.in_dims
            )));
        }
        let v = match self.domain {
            Domain::Full => rho.vectorize(),
            Domain::Symmetric { d, n } => {
                let basis = TypeBasis::new(d, n, &Limits::with_max_dim(rho.nrows()))?;
                let x = basis.compress(rho.matrix());
                nalgebra::DVector::from_column_slice(x.as_slice())
            }
        };
        let out = &self.matrix * v;
        Operator::unvectorize(out.as_slice(), self.out_dims.clone(), self.out_dims.clone())
    }

    /// Choi operator `Σ_{a,b} |a⟩⟨b| ⊗ T(X_{ab})` over the domain's basis
    /// `X_{ab}`. The first factor has dimension `D` (full) or `K` (symmetric).
    pub fn choi(&self) -> DMatrix<C64> {
        let dout = product(&self.out_dims);
        let din = (self.matrix.ncols() as f64).sqrt().round() as usize;
        let size = din * dout;
        let mut j = DMatrix::<C64>::zeros(size, size);
        for b in 0..din {
            for a in 0..din {
                let col = self.matrix.column(a + b * din);
                for y in 0..dout {
                    for x in 0..dout {
                        j[(a * dout + x, b * dout + y)] = col[x + y * dout];
                    }
                }
            }
        }
        j
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi operator.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let j = self.choi();
        let h = (&j + j.adjoint()).scale(0.5);
        SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max_a |tr T(X_a) − tr X_a|` over the domain basis.
    pub fn trace_preservation_error(&self) -> f64 {
        let dout = product(&self.out_dims);
        let din = (self.matrix.ncols() as f64).sqrt().round() as usize;
        let mut worst: f64 = 0.0;
        for b in 0..din {
            for a in 0..din {
                let col = self.matrix.column(a + b * din);
                let tr: C64 = (0..dout).map(|x| col[x + x * dout]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((tr - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }
}
