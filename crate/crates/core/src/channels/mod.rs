//! The cloning, measure-and-prepare and partial-trace channel families on
//! symmetric inputs, and the identities relating them.
//!
//! Each channel has a fast kernel that works through block sums over the
//! type basis and a dense oracle that multiplies explicit projectors. The
//! two are tested against each other.

mod superop;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::Serialize;

pub use superop::{Domain, Superoperator};

use crate::error::{invalid, Result, SymsubError};
use crate::exactcomb::{binomial, mp_clone_coefficient, sym_dim, to_f64, BigRational, TypeVector};
use crate::limits::Limits;
use crate::tensorspace::{copies, sym_projector_group, tensor_power_ket, Operator, TypeBasis, C64};

/// One member of the three channel families.
///
/// `Clone` maps `n` to `n + k` systems, `MeasurePrepare` maps `n` to `k`
/// systems and `PartialTrace` keeps the first `k` of `n` systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    Clone { d: usize, n: usize, k: usize },
    MeasurePrepare { d: usize, n: usize, k: usize },
    PartialTrace { d: usize, n: usize, k: usize },
}

impl Channel {
    fn params(&self) -> (usize, usize, usize) {
        match *self {
            Channel::Clone { d, n, k } | Channel::MeasurePrepare { d, n, k } | Channel::PartialTrace { d, n, k } => (d, n, k),
        }
    }

    fn validate(&self) -> Result<()> {
        let (d, n, k) = self.params();
        if d == 0 {
            return invalid("local dimension d must be at least 1");
        }
        if matches!(self, Channel::PartialTrace { .. }) && k > n {
            return invalid(format!("cannot keep {k} of {n} systems"));
        }
        Ok(())
    }

    pub fn in_dims(&self) -> Vec<usize> {
        let (d, n, _) = self.params();
        copies(d, n)
    }

    pub fn out_dims(&self) -> Vec<usize> {
        let (d, n, k) = self.params();
        match self {
            Channel::Clone { .. } => copies(d, n + k),
            _ => copies(d, k),
        }
    }

    /// Precomputes the type-basis tables the fast kernel needs.
    pub fn kernel(&self, limits: &Limits) -> Result<ChannelKernel> {
        self.validate()?;
        let (d, n, k) = self.params();
        let input = TypeBasis::new(d, n, limits)?;
        let (output, coeff) = match self {
            Channel::Clone { .. } => (Some(TypeBasis::new(d, n + k, limits)?), dsym_ratio(d, n, k)),
            Channel::MeasurePrepare { .. } => (Some(TypeBasis::new(d, k, limits)?), dsym_ratio(d, n, k)),
            Channel::PartialTrace { .. } => (None, 1.0),
        };
        let small = crate::exactcomb::enumerate_types(d, k)?;
        let mut fact = vec![1.0f64; n + k + 1];
        for i in 1..fact.len() {
            fact[i] = fact[i - 1] * i as f64;
        }
        let shifted = match (self, &output) {
            (Channel::Clone { .. }, Some(out)) => input
                .types()
                .iter()
                .map(|t| small.iter().map(|w| out.position(&t.plus(w)).expect("shifted type exists")).collect())
                .collect(),
            _ => Vec::new(),
        };
        Ok(ChannelKernel {
            channel: *self,
            input,
            output,
            small,
            shifted,
            fact,
            coeff,
        })
    }

    /// Applies the channel through its kernel.
    pub fn apply(&self, rho: &Operator, limits: &Limits) -> Result<Operator> {
        self.kernel(limits)?.apply(rho)
    }

    /// Applies the channel by multiplying explicit dense operators.
    pub fn apply_dense(&self, rho: &Operator, limits: &Limits) -> Result<Operator> {
        self.validate()?;
        self.check_input(rho)?;
        let (d, n, k) = self.params();
        match self {
            Channel::Clone { .. } => {
                let p = sym_projector_group(d, n + k, limits)?;
                let x = rho.kron(&Operator::identity(copies(d, k)));
                Ok(p.mul(&x)?.mul(&p)?.scale_real(dsym_ratio(d, n, k)))
            }
            Channel::MeasurePrepare { .. } => {
                let p = sym_projector_group(d, n + k, limits)?;
                let x = rho.kron(&Operator::identity(copies(d, k)));
                let keep: Vec<usize> = (n..n + k).collect();
                Ok(p.mul(&x)?.partial_trace(&keep)?.scale_real(dsym_ratio(d, n, k)))
            }
            Channel::PartialTrace { .. } => {
                let (keep, drop) = (d.pow(k as u32), d.pow((n - k) as u32));
                let m = DMatrix::from_fn(keep, keep, |a, b| (0..drop).map(|x| rho.matrix()[(a * drop + x, b * drop + x)]).sum());
                Operator::square(m, copies(d, k))
            }
        }
    }

    fn check_input(&self, rho: &Operator) -> Result<()> {
        let dims = self.in_dims();
        if rho.row_dims() != dims.as_slice() || rho.col_dims() != dims.as_slice() {
            return Err(SymsubError::DimensionMismatch(format!(
                "channel expects input dims {dims:?}, got {:?} x {:?}",
                rho.row_dims(),
                rho.col_dims()
            )));
        }
        Ok(())
    }

    /// The channel on the full input space.
    pub fn superoperator(&self, limits: &Limits) -> Result<Superoperator> {
        let kernel = self.kernel(limits)?;
        Superoperator::from_map(self.in_dims(), self.out_dims(), limits, |x| kernel.apply(x))
    }

    /// The channel on inputs supported in `∨^n C^d`.
    pub fn restricted(&self, limits: &Limits) -> Result<Superoperator> {
        let kernel = self.kernel(limits)?;
        let (d, n, _) = self.params();
        Superoperator::restricted_from_map(d, n, self.out_dims(), limits, |x| kernel.apply(x))
    }
}

fn dsym_ratio(d: usize, n: usize, k: usize) -> f64 {
    to_f64(&estimation_fidelity(d as u64, n as u64, k as u64))
}

/// Tables for applying one channel repeatedly.
#[derive(Debug, Clone)]
pub struct ChannelKernel {
    channel: Channel,
    input: TypeBasis,
    output: Option<TypeBasis>,
    small: Vec<TypeVector>,
    /// For cloning: `shifted[t][w]` is the output position of `t + w`.
    shifted: Vec<Vec<usize>>,
    fact: Vec<f64>,
    coeff: f64,
}

impl ChannelKernel {
    pub fn channel(&self) -> Channel {
        self.channel
    }

    fn multinomial(&self, t: &TypeVector) -> f64 {
        let total = t.total() as usize;
        t.entries().iter().fold(self.fact[total], |acc, &x| acc / self.fact[x as usize])
    }

    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        self.channel.check_input(rho)?;
        let (_, _, k) = self.channel.params();
        match (self.channel, &self.output) {
            (Channel::PartialTrace { .. }, _) => rho.partial_trace(&(0..k).collect::<Vec<_>>()),
            (Channel::Clone { .. }, Some(out)) => Ok(self.apply_clone(rho, out)),
            (Channel::MeasurePrepare { .. }, Some(out)) => Ok(self.apply_mp(rho, out)),
            _ => unreachable!("kernel built with an output basis"),
        }
    }

    /// `c · Π (ρ ⊗ I) Π` via
    /// `⟨s_t|ρ⊗I|s_u⟩ = Σ_w binom(k,w) R[t−w, u−w] / sqrt(b_t b_u)`.
    fn apply_clone(&self, rho: &Operator, out: &TypeBasis) -> Operator {
        let r = self.input.block_sums(rho.matrix());
        let kt = out.len();
        let mut y = DMatrix::<C64>::zeros(kt, kt);
        let shifted = &self.shifted;
        let weights: Vec<f64> = self.small.iter().map(|w| self.multinomial(w)).collect();
        for s in 0..r.ncols() {
            for q in 0..r.nrows() {
                let x = r[(q, s)];
                if x == C64::zero() {
                    continue;
                }
                for (w, &mult) in weights.iter().enumerate() {
                    y[(shifted[q][w], shifted[s][w])] += x * mult;
                }
            }
        }
        let dim = out.full_dim();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for u in 0..kt {
            for t in 0..kt {
                let v = y[(t, u)];
                if v == C64::zero() {
                    continue;
                }
                let v = v * (self.coeff / (out.count(t) * out.count(u)));
                for &j in out.strings_of_type(u) {
                    for &i in out.strings_of_type(t) {
                        m[(i, j)] = v;
                    }
                }
            }
        }
        Operator::square_unchecked(m, self.channel.out_dims())
    }

    /// `c · tr_n[Π (ρ ⊗ I)]` via
    /// `out[a,a'] = c Σ_{t} R[t + T(a) − T(a'), t] / binom(n+k, t + T(a))`.
    fn apply_mp(&self, rho: &Operator, out: &TypeBasis) -> Operator {
        let r = self.input.block_sums(rho.matrix());
        let kt = out.len();
        let mut y = DMatrix::<C64>::zeros(kt, kt);
        let types = self.input.types();
        for s in 0..r.ncols() {
            for q in 0..r.nrows() {
                let x = r[(q, s)];
                if x == C64::zero() {
                    continue;
                }
                for (b, tb) in self.small.iter().enumerate() {
                    let Some(ta) = tb.plus(&types[q]).minus(&types[s]) else {
                        continue;
                    };
                    let a = out.position(&ta).expect("output type exists");
                    y[(a, b)] += x / self.multinomial(&types[s].plus(&ta));
                }
            }
        }
        let dim = out.full_dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| y[(out.type_of_string(i), out.type_of_string(j))] * self.coeff);
        Operator::square_unchecked(m, self.channel.out_dims())
    }
}

/// `clone_{n→n+k}` on the full input space.
pub fn clone_channel(d: usize, n: usize, k: usize, limits: &Limits) -> Result<Superoperator> {
    Channel::Clone { d, n, k }.superoperator(limits)
}

/// `MP_{n→k}` on the full input space.
pub fn mp_channel(d: usize, n: usize, k: usize, limits: &Limits) -> Result<Superoperator> {
    Channel::MeasurePrepare { d, n, k }.superoperator(limits)
}

/// `tr_{n−k}`, tracing out the last `n − k` systems.
pub fn trace_channel(d: usize, n: usize, k: usize, limits: &Limits) -> Result<Superoperator> {
    Channel::PartialTrace { d, n, k }.superoperator(limits)
}

/// `dsym(d,n) / dsym(d,n+k)`.
pub fn estimation_fidelity(d: u64, n: u64, k: u64) -> BigRational {
    BigRational::new(sym_dim(d, n), sym_dim(d, n + k))
}

/// `f(x) = (dsym(n)/dsym(n+k)) Σ_s binom(k,s) binom(n,s) / binom(n+k,k) · x^s`,
/// the value of `tr β^{⊗k} MP(α^{⊗n})` at `x = |⟨α|β⟩|²`.
pub fn f_overlap(d: u64, n: u64, k: u64, x: &BigRational) -> BigRational {
    let denom = binomial(n + k, k as i64);
    let mut acc = BigRational::zero();
    let mut xs = BigRational::one();
    for s in 0..=k {
        let w = BigRational::new(binomial(k, s as i64) * binomial(n, s as i64), denom.clone());
        acc += w * &xs;
        xs *= x;
    }
    acc * estimation_fidelity(d, n, k)
}

/// Checks exactly that
/// `dsym(n) dsym(k) binom(k,s) binom(n,s) / (dsym(n+k) dsym(s) binom(n+k,k)) = M_{k,s}`.
pub fn rearrange_identity(d: u64, n: u64, k: u64, s: u64) -> bool {
    let lhs = BigRational::new(
        sym_dim(d, n) * sym_dim(d, k) * binomial(k, s as i64) * binomial(n, s as i64),
        sym_dim(d, n + k) * sym_dim(d, s) * binomial(n + k, k as i64),
    );
    lhs == mp_clone_coefficient(d, n, k, s)
}

/// Outcome of checking a channel identity on symmetric inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// Frobenius norm of `LHS − RHS` restricted to symmetric inputs.
    pub residual: f64,
    /// Whether the accompanying exact rational identities hold.
    pub exact: bool,
}

/// `MP_{n→k} = Σ_s M_{k,s} clone_{s→k} ∘ tr_{n−s}` on `∨^n C^d`.
pub fn verify_chiribella(d: usize, n: usize, k: usize, limits: &Limits) -> Result<IdentityCheck> {
    let lhs = Channel::MeasurePrepare { d, n, k }.restricted(limits)?;
    let rhs = chiribella_rhs(d, n, k, limits)?;
    let exact = (0..=k as u64).all(|s| rearrange_identity(d as u64, n as u64, k as u64, s));
    Ok(IdentityCheck {
        residual: lhs.distance(&rhs)?,
        exact,
    })
}

/// `Σ_{s=0}^{min(k,n)} M_{k,s} clone_{s→k} ∘ tr_{n−s}` on `∨^n C^d`.
pub fn chiribella_rhs(d: usize, n: usize, k: usize, limits: &Limits) -> Result<Superoperator> {
    let terms = (0..=k.min(n))
        .map(|s| {
            let weight = to_f64(&mp_clone_coefficient(d as u64, n as u64, k as u64, s as u64));
            let trace = Channel::PartialTrace { d, n, k: s }.kernel(limits)?;
            let clone = Channel::Clone { d, n: s, k: k - s }.kernel(limits)?;
            Ok((weight, trace, clone))
        })
        .collect::<Result<Vec<_>>>()?;
    Superoperator::restricted_from_map(d, n, copies(d, k), limits, |x| {
        let mut acc = Operator::zeros(copies(d, k), copies(d, k));
        for (w, trace, clone) in &terms {
            acc = acc.add(&clone.apply(&trace.apply(x)?)?.scale_real(*w))?;
        }
        Ok(acc)
    })
}

/// `tr[φ^{⊗k} MP_{n→k}(φ^{⊗n})]` for a unit ket `φ`.
pub fn mp_fidelity(kernel: &ChannelKernel, phi: &DVector<C64>) -> Result<f64> {
    let Channel::MeasurePrepare { d, n, k } = kernel.channel() else {
        return invalid("fidelity needs a measure-and-prepare kernel");
    };
    if phi.len() != d {
        return invalid(format!("state has dimension {}, expected {d}", phi.len()));
    }
    let input = tensor_power_ket(phi, n);
    let rho = Operator::square(&input * input.adjoint(), copies(d, n))?;
    let out = kernel.apply(&rho)?;
    let target = tensor_power_ket(phi, k);
    Ok((target.adjoint() * out.matrix() * &target)[(0, 0)].re)
}
