//! Seeded samplers and Monte Carlo moment estimators.
//!
//! Every estimator splits its `N` samples into blocks of [`BLOCK_SIZE`];
//! block `b` draws from `stream.child(b)`. Block partial sums are reduced in
//! block order, so results do not depend on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::exec;
use crate::limits::Limits;
use crate::tensorspace::{copies, tensor_power_ket, Operator, C64};

/// Samples per independent stream in every Monte Carlo estimator.
pub const BLOCK_SIZE: usize = 1024;
/// Default acceptance width, in standard errors, for Monte Carlo checks.
pub const DEFAULT_SIGMAS: f64 = 5.0;

/// A deterministic random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and a stream id derived from
    /// `(stream_id, index)`. Does not advance `self`.
    pub fn child(&self, index: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1)));
        RngStream::new(self.seed, id)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// A complex Gaussian with `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(s * self.standard_normal(), s * self.standard_normal())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Real or complex Gaussian entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// A Haar-random unit vector in `C^d`.
pub fn haar_state(d: usize, stream: &mut RngStream) -> Operator {
    let mut v = DVector::from_fn(d, |_, _| stream.complex_normal());
    let norm = v.norm();
    v.unscale_mut(norm);
    Operator::ket(v, vec![d]).expect("ket shape")
}

/// A Haar-random `d x d` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary(d: usize, stream: &mut RngStream) -> Operator {
    let z = DMatrix::from_fn(d, d, |_, _| stream.complex_normal());
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    Operator::square(q, vec![d]).expect("square shape")
}

/// A Gaussian vector with i.i.d. entries of variance `1/d`, so that
/// `E v v† = I/d`.
pub fn gaussian_vector(d: usize, field: Field, stream: &mut RngStream) -> Operator {
    let sigma = (d as f64).sqrt().recip();
    let v = DVector::from_fn(d, |_, _| match field {
        Field::Real => C64::new(sigma * stream.standard_normal(), 0.0),
        Field::Complex => stream.complex_normal() * sigma,
    });
    Operator::ket(v, vec![d]).expect("ket shape")
}

/// A uniformly random unit vector in `R^d`.
pub fn real_unit_vector(d: usize, stream: &mut RngStream) -> Operator {
    let mut v = DVector::from_fn(d, |_, _| C64::new(stream.standard_normal(), 0.0));
    let norm = v.norm();
    v.unscale_mut(norm);
    Operator::ket(v, vec![d]).expect("ket shape")
}

/// `U Π₀ U†` for Haar `U` and `Π₀` the projector onto the first `r` basis
/// vectors.
pub fn random_projector(dim: usize, r: usize, stream: &mut RngStream) -> Result<Operator> {
    if r < 1 || r > dim {
        return invalid(format!("rank {r} outside 1..={dim}"));
    }
    let u = haar_unitary(dim, stream);
    let v = u.matrix().columns(0, r).into_owned();
    Operator::square(&v * v.adjoint(), vec![dim])
}

/// Which vector distribution feeds a tensor-power moment estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    Haar { d: usize },
    Gaussian { d: usize, field: Field },
    RealUnit { d: usize },
}

impl Sampler {
    pub fn d(&self) -> usize {
        match *self {
            Sampler::Haar { d } | Sampler::Gaussian { d, .. } | Sampler::RealUnit { d } => d,
        }
    }

    pub fn draw(&self, stream: &mut RngStream) -> Operator {
        match *self {
            Sampler::Haar { d } => haar_state(d, stream),
            Sampler::Gaussian { d, field } => gaussian_vector(d, field, stream),
            Sampler::RealUnit { d } => real_unit_vector(d, stream),
        }
    }
}

/// Monte Carlo mean of an operator-valued random variable with entrywise
/// standard errors.
#[derive(Debug, Clone)]
pub struct OperatorEstimate {
    pub mean: Operator,
    /// Standard error of each entry of `mean`.
    pub std_error: DMatrix<f64>,
    pub samples: usize,
}

/// Comparison of an estimate with an exact operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    /// `‖mean − exact‖_F`.
    pub error: f64,
    /// `sqrt(Σ_ij se_ij²)`, the standard error of the Frobenius error.
    pub std_error: f64,
    /// `error / std_error`.
    pub z: f64,
}

impl MomentCheck {
    /// True iff the error is within `sigmas` standard errors and at most `cap`.
    pub fn passes(&self, sigmas: f64, cap: f64) -> bool {
        self.error <= sigmas * self.std_error && self.error <= cap
    }
}

impl OperatorEstimate {
    pub fn frobenius_std_error(&self) -> f64 {
        self.std_error.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn compare(&self, exact: &Operator) -> Result<MomentCheck> {
        let error = self.mean.sub(exact)?.frobenius_norm();
        let std_error = self.frobenius_std_error();
        let z = if std_error > 0.0 { error / std_error } else if error == 0.0 { 0.0 } else { f64::INFINITY };
        Ok(MomentCheck { error, std_error, z })
    }
}

/// Monte Carlo mean of a real random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ScalarEstimate {
    pub fn z_score(&self, exact: f64) -> f64 {
        let dev = (self.mean - exact).abs();
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn from_sums(sum: f64, sumsq: f64, samples: usize) -> Self {
        let nf = samples as f64;
        let mean = sum / nf;
        let var = if samples > 1 { ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        ScalarEstimate {
            mean,
            std_error: (var / nf).sqrt(),
            samples,
        }
    }
}

fn block_ranges(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(BLOCK_SIZE))
        .map(|b| (b, BLOCK_SIZE.min(samples - b * BLOCK_SIZE)))
        .collect()
}

/// `(1/N) Σ v^{⊗n} (v^{⊗n})†` over `N` draws from `sampler`.
pub fn mc_tensor_power_mean(
    sampler: Sampler,
    n: usize,
    samples: usize,
    stream: &RngStream,
    limits: &Limits,
) -> Result<OperatorEstimate> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let d = sampler.d();
    let dim = limits.power_dim(d, n)?;
    let blocks = exec::map_slice(&block_ranges(samples), |&(b, len)| {
        let mut s = stream.child(b as u64);
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        let mut sumsq = DMatrix::<f64>::zeros(dim, dim);
        for _ in 0..len {
            let v = sampler.draw(&mut s);
            let w = tensor_power_ket(&v.matrix().column(0).into_owned(), n);
            for j in 0..dim {
                let wj = w[j].conj();
                for i in 0..dim {
                    let x = w[i] * wj;
                    sum[(i, j)] += x;
                    sumsq[(i, j)] += x.norm_sqr();
                }
            }
        }
        (sum, sumsq)
    });
    let mut sum = DMatrix::<C64>::zeros(dim, dim);
    let mut sumsq = DMatrix::<f64>::zeros(dim, dim);
    for (s, q) in blocks {
        sum += s;
        sumsq += q;
    }
    let nf = samples as f64;
    let mean = sum.unscale(nf);
    let std_error = DMatrix::from_fn(dim, dim, |i, j| {
        if samples < 2 {
            return 0.0;
        }
        let var = (sumsq[(i, j)] - nf * mean[(i, j)].norm_sqr()) / (nf - 1.0);
        (var.max(0.0) / nf).sqrt()
    });
    Ok(OperatorEstimate {
        mean: Operator::square(mean, copies(d, n))?,
        std_error,
        samples,
    })
}

/// Mean of `(tr Π φ)^n` over `N` Haar rank-`r` projectors `Π` on `C^D` with
/// `φ = |0⟩⟨0|` fixed.
pub fn mc_projector_moment(dim: usize, r: usize, n: u32, samples: usize, stream: &RngStream) -> Result<ScalarEstimate> {
    if r < 1 || r > dim {
        return invalid(format!("rank {r} outside 1..={dim}"));
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let blocks = exec::map_slice(&block_ranges(samples), |&(b, len)| {
        let mut s = stream.child(b as u64);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..len {
            let p = random_projector(dim, r, &mut s).expect("rank checked");
            let x = p.matrix()[(0, 0)].re.powi(n as i32);
            sum += x;
            sumsq += x * x;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = blocks.into_iter().fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    Ok(ScalarEstimate::from_sums(sum, sumsq, samples))
}

/// Monte Carlo estimate of `E (γγᵀ)^{⊗n}` for uniform real unit `γ ∈ R^d`.
pub fn mc_real_unit_moment(d: usize, n: usize, samples: usize, stream: &RngStream, limits: &Limits) -> Result<OperatorEstimate> {
    mc_tensor_power_mean(Sampler::RealUnit { d }, n, samples, stream, limits)
}

/// Mean of an arbitrary scalar statistic over `N` draws, block-parallel.
pub fn mc_scalar<F>(samples: usize, stream: &RngStream, f: F) -> Result<(ScalarEstimate, Vec<f64>)>
where
    F: Fn(&mut RngStream) -> f64 + Sync + Send,
{
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let blocks = exec::map_slice(&block_ranges(samples), |&(b, len)| {
        let mut s = stream.child(b as u64);
        (0..len).map(|_| f(&mut s)).collect::<Vec<f64>>()
    });
    let values: Vec<f64> = blocks.into_iter().flatten().collect();
    let sum: f64 = values.iter().sum();
    let sumsq: f64 = values.iter().map(|x| x * x).sum();
    Ok((ScalarEstimate::from_sums(sum, sumsq, samples), values))
}
