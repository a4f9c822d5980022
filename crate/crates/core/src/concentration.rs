//! Moment-method bounds on how close a random subspace comes to product
//! states.
//!
//! For a multipartition `C^{d_1} ⊗ … ⊗ C^{d_k}` and an operator `P`:
//!
//! * `μ^n(P) = E (tr P (φ_1 ⊗ … ⊗ φ_k))^n` over independent Haar `φ_i`
//!   ([`mu_exact`]);
//! * `ν(P) = max ⟨φ|P|φ⟩` over product unit vectors ([`nu_max`], a certified
//!   lower bound);
//! * the tail bound `inf_n binom(r+n−1,n) Π_i binom(d_i+n−1,n) / (γ^n
//!   binom(D+n−1,n))` on `Pr[ν(Π) ≥ γ]` for a Haar rank-`r` projector `Π`
//!   ([`tail_bound`]).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{invalid, Result, SymsubError};
use crate::exactcomb::{binomial, ln_abs, to_f64};
use crate::exec;
use crate::limits::Limits;
use crate::randomness::{haar_state, mc_scalar, random_projector, RngStream, ScalarEstimate};
use crate::tensorspace::{apply_on_factor, Operator, C64, ONE, ZERO};

/// Default number of random restarts for [`nu_max`].
pub const DEFAULT_RESTARTS: usize = 32;
/// Default sweep cap per restart for [`nu_max`].
pub const DEFAULT_ITERS: usize = 200;
/// Sweeps stop once the objective improves by less than this.
pub const ASCENT_TOL: f64 = 1e-12;
/// Default largest `n` scanned by [`tail_bound`].
pub const DEFAULT_TAIL_NMAX: u64 = 64;
/// Largest `ν` accepted as "no product state" by [`experiment_product_free`].
pub const PRODUCT_FREE_LIMIT: f64 = 1.0 - 1e-3;

const HERMITIAN_TOL: f64 = 1e-9;
const RANK_ONE_TOL: f64 = 1e-10;

/// Subsystem dimensions `d_1, …, d_k` with total dimension `D = Π d_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiPartition {
    dims: Vec<usize>,
    total: usize,
}

impl MultiPartition {
    pub fn new(dims: Vec<usize>, limits: &Limits) -> Result<Self> {
        if dims.is_empty() {
            return invalid("a multipartition needs at least one subsystem");
        }
        if dims.contains(&0) {
            return invalid("subsystem dimensions must be at least 1");
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.checked_mul(d).ok_or(SymsubError::DimensionGuard {
                what: "multipartition total dimension",
                requested: u128::MAX,
                cap: limits.max_dim as u128,
            })?;
        }
        limits.check_dim("multipartition total dimension", total)?;
        Ok(MultiPartition { dims, total })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    /// `D = Π d_i`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Splits a flat index on `C^D` into per-subsystem letters.
    fn letters(&self, mut idx: usize, out: &mut [usize]) {
        for i in (0..self.dims.len()).rev() {
            out[i] = idx % self.dims[i];
            idx /= self.dims[i];
        }
    }

    /// The flat vector `φ_1 ⊗ … ⊗ φ_k`.
    fn product_vector(&self, factors: &[DVector<C64>]) -> DVector<C64> {
        let mut letters = vec![0; self.parties()];
        DVector::from_fn(self.total, |idx, _| {
            self.letters(idx, &mut letters);
            letters.iter().zip(factors).fold(ONE, |acc, (&a, f)| acc * f[a])
        })
    }
}

fn check_operator(p: &Operator, part: &MultiPartition) -> Result<()> {
    if !p.is_square() || p.nrows() != part.total() {
        return Err(SymsubError::DimensionMismatch(format!(
            "operator is {}x{}, multipartition has D = {}",
            p.nrows(),
            p.ncols(),
            part.total()
        )));
    }
    Ok(())
}

fn check_hermitian(p: &Operator) -> Result<()> {
    let err = p.hermiticity_error();
    if err > HERMITIAN_TOL * p.max_abs_entry().max(1.0) {
        return Err(SymsubError::NonHermitian(err));
    }
    Ok(())
}

/// `μ^n(P) = E (tr P (φ_1 ⊗ … ⊗ φ_k))^n` for independent Haar `φ_i`.
///
/// Uses `E φ_i^{⊗n} = Π_sym/binom(d_i+n−1,n)`, so `μ^n(P) = Σ_t ⟨v_t|P^{⊗n}|v_t⟩
/// / Π_i binom(d_i+n−1,n)` where `t` runs over tuples of types and `v_t` is
/// the product of per-system type states, regrouped copy-major. The
/// regrouping is an index map; no `D^n x D^n` matrix is formed.
pub fn mu_exact(p: &Operator, part: &MultiPartition, n: usize, limits: &Limits) -> Result<f64> {
    check_operator(p, part)?;
    if n == 0 {
        return Ok(1.0);
    }
    let big_d = part.total();
    let len = limits.power_dim(big_d, n)?;
    let k = part.parties();

    let mut fact = vec![1.0f64; n + 1];
    for j in 1..=n {
        fact[j] = fact[j - 1] * j as f64;
    }

    // Group copy-major indices by the tuple of per-system types; each entry
    // of v_t is Π_i multinomial(n, t_i)^{-1/2}.
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    let mut order: Vec<Vec<u32>> = Vec::new();
    let mut letters = vec![0usize; k];
    let offsets: Vec<usize> = part
        .dims()
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let width: usize = part.dims().iter().sum();
    for idx in 0..len {
        let mut key = vec![0u32; width];
        let mut rest = idx;
        for _ in 0..n {
            part.letters(rest % big_d, &mut letters);
            rest /= big_d;
            for i in 0..k {
                key[offsets[i] + letters[i]] += 1;
            }
        }
        match groups.get_mut(&key) {
            Some(v) => v.push(idx),
            None => {
                order.push(key.clone());
                groups.insert(key, vec![idx]);
            }
        }
    }

    let dims_n = vec![big_d; n];
    let p_mat = p.matrix();
    let terms = exec::map_slice(&order, |key| {
        let amp = key.iter().fold(fact[n].powi(k as i32), |acc, &c| acc / fact[c as usize]).sqrt().recip();
        let mut v = vec![ZERO; len];
        for &idx in &groups[key] {
            v[idx] = C64::new(amp, 0.0);
        }
        let mut w = v.clone();
        for c in 0..n {
            w = apply_on_factor(&w, &dims_n, c, p_mat);
        }
        v.iter().zip(&w).fold(ZERO, |acc, (a, b)| acc + a.conj() * b).re
    });
    let norm: f64 = part.dims().iter().map(|&d| to_f64(&BigRational::from(binomial((d + n - 1) as u64, n as i64)))).product();
    Ok(terms.iter().sum::<f64>() / norm)
}

/// How a [`NuEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMethod {
    /// Squared largest singular value of a rank-one bipartite operator.
    Exact,
    /// Best alternating ascent over random restarts; a lower bound.
    Ascent,
}

/// A product vector `φ_1 ⊗ … ⊗ φ_k` and its overlap `⟨φ|P|φ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuEstimate {
    pub value: f64,
    pub method: NuMethod,
    #[serde(skip)]
    pub factors: Vec<DVector<C64>>,
}

impl NuEstimate {
    /// Recomputes `⟨φ|P|φ⟩` from the stored factors.
    pub fn overlap(&self, p: &Operator, part: &MultiPartition) -> f64 {
        let v = part.product_vector(&self.factors);
        (v.adjoint() * p.matrix() * &v)[(0, 0)].re
    }
}

/// Lower bound on `ν(P)`; exact when `k = 2` and `P = λψψ†` with `λ ≥ 0`.
pub fn nu_max(p: &Operator, part: &MultiPartition, restarts: usize, iters: usize, stream: &RngStream) -> Result<NuEstimate> {
    check_operator(p, part)?;
    check_hermitian(p)?;
    if part.parties() == 2 {
        if let Some(est) = rank_one_bipartite(p, part) {
            return Ok(est);
        }
    }
    if restarts == 0 {
        return invalid("need at least one restart");
    }
    let runs = exec::map_indexed(restarts, |r| {
        let mut s = stream.child(r as u64);
        let start: Vec<DVector<C64>> = part.dims().iter().map(|&d| haar_state(d, &mut s).matrix().column(0).into_owned()).collect();
        ascend(p, part, start, iters)
    });
    let mut best: Option<NuEstimate> = None;
    for est in runs {
        if best.as_ref().is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn rank_one_bipartite(p: &Operator, part: &MultiPartition) -> Option<NuEstimate> {
    let eig = SymmetricEigen::new(p.matrix().clone());
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let scale = lambda.abs().max(1.0);
    if lambda <= RANK_ONE_TOL * scale {
        return None;
    }
    if eig.eigenvalues.iter().enumerate().any(|(i, &x)| i != top && x.abs() > RANK_ONE_TOL * scale) {
        return None;
    }
    let psi = eig.eigenvectors.column(top);
    let (d1, d2) = (part.dims()[0], part.dims()[1]);
    let m = DMatrix::from_fn(d1, d2, |a, b| psi[a * d2 + b]);
    let svd = m.svd(true, true);
    let (j, &sigma) = svd.singular_values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let u = svd.u?;
    let v_t = svd.v_t?;
    let phi1 = u.column(j).into_owned();
    let phi2 = DVector::from_fn(d2, |b, _| v_t[(j, b)]);
    Some(NuEstimate {
        value: lambda * sigma * sigma,
        method: NuMethod::Exact,
        factors: vec![phi1, phi2],
    })
}

/// `X† P X` where column `b` of `X` is the product vector with party `j`
/// replaced by `e_b`.
fn contracted(p: &Operator, part: &MultiPartition, factors: &[DVector<C64>], j: usize) -> DMatrix<C64> {
    let dj = part.dims()[j];
    let mut letters = vec![0; part.parties()];
    let mut x = DMatrix::<C64>::zeros(part.total(), dj);
    for idx in 0..part.total() {
        part.letters(idx, &mut letters);
        let coeff = letters
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .fold(ONE, |acc, (i, &a)| acc * factors[i][a]);
        x[(idx, letters[j])] = coeff;
    }
    x.adjoint() * p.matrix() * x
}

/// The top eigenvector; among a degenerate top eigenspace's basis vectors,
/// each is phased so its first nonzero entry is real-positive and the
/// lexicographically largest is returned.
fn top_eigenvector(m: DMatrix<C64>) -> (f64, DVector<C64>) {
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * top.abs().max(1.0);
    let mut best: Option<DVector<C64>> = None;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < top - tol {
            continue;
        }
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = first.conj() / first.norm();
            v *= phase;
        }
        let larger = match &best {
            None => true,
            Some(b) => lex_cmp(&v, b) == std::cmp::Ordering::Greater,
        };
        if larger {
            best = Some(v);
        }
    }
    (top, best.expect("nonempty spectrum"))
}

fn lex_cmp(a: &DVector<C64>, b: &DVector<C64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

fn ascend(p: &Operator, part: &MultiPartition, mut factors: Vec<DVector<C64>>, iters: usize) -> NuEstimate {
    let mut value = f64::NEG_INFINITY;
    for _ in 0..iters.max(1) {
        let mut sweep = value;
        for j in 0..part.parties() {
            let (lam, v) = top_eigenvector(contracted(p, part, &factors, j));
            factors[j] = v;
            sweep = lam;
        }
        let done = sweep - value <= ASCENT_TOL;
        value = sweep;
        if done {
            break;
        }
    }
    let est = NuEstimate {
        value,
        method: NuMethod::Ascent,
        factors,
    };
    let value = est.overlap(p, part);
    NuEstimate { value, ..est }
}

/// Alternates between projecting the product vector into the range of `P`
/// and taking the top Schmidt pair of the projection. Never decreases
/// `⟨φ|P|φ⟩` for a projector `P`. Bipartite only.
pub fn refine_bipartite(p: &Operator, part: &MultiPartition, start: &NuEstimate, iters: usize) -> Result<NuEstimate> {
    check_operator(p, part)?;
    if part.parties() != 2 {
        return invalid("refinement needs exactly two parties");
    }
    let mut best = start.clone();
    best.value = best.overlap(p, part);
    for _ in 0..iters {
        let phi = part.product_vector(&best.factors);
        let psi = p.matrix() * phi;
        let norm = psi.norm();
        if norm == 0.0 {
            break;
        }
        let proj = Operator::square((&psi * psi.adjoint()).unscale(norm * norm), vec![part.total()])?;
        let Some(cand) = rank_one_bipartite(&proj, part) else { break };
        let cand = NuEstimate {
            value: cand.overlap(p, part),
            method: NuMethod::Ascent,
            factors: cand.factors,
        };
        if cand.value <= best.value + ASCENT_TOL {
            break;
        }
        best = cand;
    }
    Ok(best)
}

/// One row of a tail-bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub n: u64,
    pub value: f64,
    pub ln_value: f64,
}

/// The tail bound scanned over `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundResult {
    pub gamma: f64,
    pub n_star: u64,
    pub bound: f64,
    pub per_n: Vec<TailRow>,
}

/// `binom(r+n−1,n) Π_i binom(d_i+n−1,n) / binom(D+n−1,n)`, exactly.
pub fn tail_ratio(part: &MultiPartition, r: usize, n: u64) -> BigRational {
    let num = part
        .dims()
        .iter()
        .fold(binomial(r as u64 + n - 1, n as i64), |acc: BigInt, &d| acc * binomial(d as u64 + n - 1, n as i64));
    BigRational::new(num, binomial(part.total() as u64 + n - 1, n as i64))
}

/// The single-`n` term `tail_ratio / γ^n`, evaluated in the log domain.
pub fn tail_term(part: &MultiPartition, r: usize, gamma: f64, n: u64) -> Result<TailRow> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    if r < 1 || n < 1 {
        return invalid("need r >= 1 and n >= 1");
    }
    let ln_value = ln_abs(&tail_ratio(part, r, n)) - n as f64 * gamma.ln();
    Ok(TailRow {
        n,
        value: ln_value.exp(),
        ln_value,
    })
}

/// Bound on `Pr[ν(Π) ≥ γ]` for a Haar rank-`r` projector: the minimum of
/// [`tail_term`] over `n = 1..=n_max`, first minimizer on ties.
pub fn tail_bound(part: &MultiPartition, r: usize, gamma: f64, n_max: u64) -> Result<TailBoundResult> {
    if n_max < 1 {
        return invalid("n_max must be at least 1");
    }
    let per_n = (1..=n_max).map(|n| tail_term(part, r, gamma, n)).collect::<Result<Vec<_>>>()?;
    let star = per_n.iter().fold(per_n[0], |b, row| if row.ln_value < b.ln_value { *row } else { b });
    Ok(TailBoundResult {
        gamma,
        n_star: star.n,
        bound: star.value,
        per_n,
    })
}

/// True iff `D > r + Σ_i (d_i − 1)`, the regime where a Haar rank-`r`
/// subspace almost surely contains no product vector.
pub fn product_state_threshold(part: &MultiPartition, r: usize) -> bool {
    let slack: usize = part.dims().iter().map(|d| d - 1).sum();
    part.total() > r + slack
}

/// The single-`n` tail term at `r = d² − 2(d−1) − x`, `n = ⌈d^{2+2d/x}⌉`,
/// `γ = 1 − 1/n`, against the target `d^{−d}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothGap {
    pub d: usize,
    pub x: usize,
    pub r: usize,
    pub n: u64,
    pub gamma: f64,
    pub bound: f64,
    pub target: f64,
    pub holds: bool,
}

pub fn smooth_gap_bound(d: usize, x: usize, limits: &Limits) -> Result<SmoothGap> {
    if d < 2 || x < 1 {
        return invalid("need d >= 2 and x >= 1");
    }
    let capacity = (d * d) as i64 - 2 * (d as i64 - 1);
    let r = capacity - x as i64;
    if r < 1 {
        return invalid(format!("rank r = d^2 - 2(d-1) - x = {r} is below 1"));
    }
    let exponent = 2.0 + 2.0 * d as f64 / x as f64;
    let raw = (d as f64).powf(exponent);
    let n = if (raw - raw.round()).abs() < 1e-9 * raw { raw.round() } else { raw.ceil() } as u64;
    let gamma = 1.0 - 1.0 / n as f64;
    let part = MultiPartition::new(vec![d, d], limits)?;
    let row = tail_term(&part, r as usize, gamma, n)?;
    let target = (d as f64).powi(-(d as i32));
    Ok(SmoothGap {
        d,
        x,
        r: r as usize,
        n,
        gamma,
        bound: row.value,
        target,
        holds: row.value <= target,
    })
}

/// `γ₀ = 16/(e d)`, the scale of the largest Schmidt coefficient of a Haar
/// state on `C^d ⊗ C^d`.
pub fn schmidt_gamma0(d: usize) -> f64 {
    16.0 / (std::f64::consts::E * d as f64)
}

/// The tail term for `dims = [d, d]`, `r = 1`, `γ = γ₀e^ε`, `n = d`.
pub fn entangled_bound(d: usize, epsilon: f64, limits: &Limits) -> Result<f64> {
    let part = MultiPartition::new(vec![d, d], limits)?;
    Ok(tail_term(&part, 1, schmidt_gamma0(d) * epsilon.exp(), d as u64)?.value)
}

/// `γ = k^{1+2ε} 2^{−k} / e` for `k` qubits.
pub fn multi_qubit_gamma(k: usize, epsilon: f64) -> f64 {
    (k as f64).powf(1.0 + 2.0 * epsilon) * 2f64.powi(-(k as i32)) / std::f64::consts::E
}

/// `(ε^{−(1+1/ε)}/k)^k`.
pub fn multi_qubit_closed_form(k: usize, epsilon: f64) -> f64 {
    (epsilon.powf(-(1.0 + 1.0 / epsilon)) / k as f64).powi(k as i32)
}

/// `(n+1)^k n! / (γ^n 2^k (2^k+1) ⋯ (2^k+n−1))` at `n = k/ε`, which must be
/// an integer; this is the tail term for `k` qubits and `r = 1`.
pub fn multi_qubit_bound(k: usize, epsilon: f64, limits: &Limits) -> Result<f64> {
    if k < 1 || !(epsilon > 0.0) {
        return invalid("need k >= 1 and epsilon > 0");
    }
    let raw = k as f64 / epsilon;
    if (raw - raw.round()).abs() > 1e-9 * raw.max(1.0) {
        return invalid(format!("n = k/epsilon = {raw} is not an integer"));
    }
    let part = MultiPartition::new(vec![2; k], limits)?;
    Ok(tail_term(&part, 1, multi_qubit_gamma(k, epsilon), raw.round() as u64)?.value)
}

/// Empirical tail of the largest squared Schmidt coefficient of Haar states
/// on `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtTailReport {
    pub d: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub gamma0: f64,
    pub threshold: f64,
    pub exceedances: usize,
    pub fraction: f64,
    pub bound: f64,
    pub lambda_max: ScalarEstimate,
    pub lambda_min_seen: f64,
    pub lambda_max_seen: f64,
    pub pass: bool,
}

/// Largest squared singular value of a vector on `C^{d1} ⊗ C^{d2}`.
pub fn largest_schmidt_coefficient(psi: &DVector<C64>, d1: usize, d2: usize) -> f64 {
    let m = DMatrix::from_fn(d1, d2, |a, b| psi[a * d2 + b]);
    let s = m.singular_values().iter().cloned().fold(0.0, f64::max);
    s * s
}

pub fn experiment_schmidt_tail(d: usize, samples: usize, epsilon: f64, stream: &RngStream, limits: &Limits) -> Result<SchmidtTailReport> {
    if d < 1 {
        return invalid("d must be at least 1");
    }
    let dim = d.checked_mul(d).ok_or(SymsubError::DimensionGuard {
        what: "bipartite dimension",
        requested: u128::MAX,
        cap: limits.max_dim as u128,
    })?;
    limits.check_dim("bipartite dimension", dim)?;
    let (est, values) = mc_scalar(samples, stream, |s| {
        let psi = haar_state(dim, s);
        largest_schmidt_coefficient(&psi.matrix().column(0).into_owned(), d, d)
    })?;
    let gamma0 = schmidt_gamma0(d);
    let threshold = gamma0 * epsilon.exp();
    let exceedances = values.iter().filter(|&&v| v >= threshold).count();
    let fraction = exceedances as f64 / samples as f64;
    let bound = (-(d as f64) * epsilon).exp();
    Ok(SchmidtTailReport {
        d,
        samples,
        epsilon,
        gamma0,
        threshold,
        exceedances,
        fraction,
        bound,
        lambda_max: est,
        lambda_min_seen: values.iter().cloned().fold(f64::INFINITY, f64::min),
        lambda_max_seen: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        pass: fraction <= bound,
    })
}

/// Largest product overlap found in random rank-`r` projectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductFreeReport {
    pub dims: Vec<usize>,
    pub r: usize,
    pub threshold_met: bool,
    pub trials: usize,
    pub nu: Vec<f64>,
    pub max_nu: Option<f64>,
    pub limit: f64,
    /// `None` when the threshold fails and no claim is made.
    pub pass: Option<bool>,
}

pub fn experiment_product_free(
    part: &MultiPartition,
    r: usize,
    trials: usize,
    restarts: usize,
    stream: &RngStream,
) -> Result<ProductFreeReport> {
    if r < 1 || r > part.total() {
        return invalid(format!("rank {r} outside 1..={}", part.total()));
    }
    let threshold_met = product_state_threshold(part, r);
    if !threshold_met {
        return Ok(ProductFreeReport {
            dims: part.dims().to_vec(),
            r,
            threshold_met,
            trials: 0,
            nu: Vec::new(),
            max_nu: None,
            limit: PRODUCT_FREE_LIMIT,
            pass: None,
        });
    }
    let nu = (0..trials)
        .map(|t| {
            let trial = stream.child(t as u64);
            let mut s = trial.child(0);
            let p = random_projector(part.total(), r, &mut s)?;
            let p = Operator::square(p.into_matrix(), vec![part.total()])?;
            let est = nu_max(&p, part, restarts, DEFAULT_ITERS, &trial.child(1))?;
            let est = if part.parties() == 2 && est.method == NuMethod::Ascent {
                refine_bipartite(&p, part, &est, DEFAULT_ITERS)?
            } else {
                est
            };
            Ok(est.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_nu = nu.iter().cloned().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok(ProductFreeReport {
        dims: part.dims().to_vec(),
        r,
        threshold_met,
        trials,
        pass: Some(nu.iter().all(|&v| v < PRODUCT_FREE_LIMIT)),
        nu,
        max_nu,
        limit: PRODUCT_FREE_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lim() -> Limits {
        Limits::default()
    }

    fn part(dims: &[usize]) -> MultiPartition {
        MultiPartition::new(dims.to_vec(), &lim()).unwrap()
    }

    fn bell(d: usize) -> Operator {
        let mut v = DVector::<C64>::zeros(d * d);
        for a in 0..d {
            v[a * d + a] = C64::new((d as f64).sqrt().recip(), 0.0);
        }
        Operator::ket(v, vec![d * d]).unwrap().outer().unwrap()
    }

    #[test]
    fn mu_of_identity_is_one() {
        let pt = part(&[2, 3]);
        for n in 1..=3 {
            let mu = mu_exact(&Operator::identity(vec![6]), &pt, n, &lim()).unwrap();
            assert_relative_eq!(mu, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mu_single_system_matches_binomial_ratio() {
        let mut s = RngStream::new(5, 0);
        for (d, r, n) in [(3, 1, 2), (4, 2, 3), (3, 2, 4)] {
            let p = random_projector(d, r, &mut s).unwrap();
            let mu = mu_exact(&p, &part(&[d]), n, &lim()).unwrap();
            let exact = to_f64(&BigRational::new(binomial((r + n - 1) as u64, n as i64), binomial((d + n - 1) as u64, n as i64)));
            assert_relative_eq!(mu, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn mu_bell_first_moment() {
        let mu = mu_exact(&bell(2), &part(&[2, 2]), 1, &lim()).unwrap();
        assert_relative_eq!(mu, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn mu_matches_monte_carlo() {
        let pt = part(&[2, 2]);
        let p = bell(2);
        let mu = mu_exact(&p, &pt, 2, &lim()).unwrap();
        let (est, _) = mc_scalar(20_000, &RngStream::new(9, 0), |s| {
            let f = vec![haar_state(2, s).matrix().column(0).into_owned(), haar_state(2, s).matrix().column(0).into_owned()];
            let v = pt.product_vector(&f);
            (v.adjoint() * p.matrix() * &v)[(0, 0)].re.powi(2)
        })
        .unwrap();
        assert!(est.z_score(mu) < 5.0, "mu {mu} vs {est:?}");
    }

    #[test]
    fn nu_exact_paths() {
        let s = RngStream::new(1, 0);
        let est = nu_max(&bell(3), &part(&[3, 3]), 4, 50, &s).unwrap();
        assert_eq!(est.method, NuMethod::Exact);
        assert_relative_eq!(est.value, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(est.overlap(&bell(3), &part(&[3, 3])), 1.0 / 3.0, epsilon = 1e-12);

        let mut r = RngStream::new(2, 0);
        let a = haar_state(2, &mut r);
        let b = haar_state(3, &mut r);
        let prod = a.kron(&b).outer().unwrap();
        let est = nu_max(&prod, &part(&[2, 3]), 4, 50, &s).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ascent_agrees_with_svd() {
        let pt = part(&[3, 3]);
        let mut r = RngStream::new(3, 0);
        for t in 0..5 {
            let p = haar_state(9, &mut r).outer().unwrap();
            let exact = nu_max(&p, &pt, 8, 200, &RngStream::new(4, t)).unwrap();
            assert_eq!(exact.method, NuMethod::Exact);
            let start: Vec<_> = (0..2).map(|_| haar_state(3, &mut r).matrix().column(0).into_owned()).collect();
            let asc = ascend(&p, &pt, start, 500);
            assert!((asc.value - exact.value).abs() < 1e-10, "{} vs {}", asc.value, exact.value);
        }
    }

    #[test]
    fn nu_rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::zeros(4, 4);
        m[(0, 1)] = ONE;
        let p = Operator::square(m, vec![4]).unwrap();
        let err = nu_max(&p, &part(&[2, 2]), 2, 10, &RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, SymsubError::NonHermitian(_)));
    }

    #[test]
    fn nu_is_reproducible() {
        let pt = part(&[2, 2, 2]);
        let p = random_projector(8, 3, &mut RngStream::new(8, 0)).unwrap();
        let a = nu_max(&p, &pt, 6, 100, &RngStream::new(10, 0)).unwrap();
        let b = nu_max(&p, &pt, 6, 100, &RngStream::new(10, 0)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(a.value <= 1.0 + 1e-12);
        assert_relative_eq!(a.overlap(&p, &pt), a.value, epsilon = 1e-12);
    }

    #[test]
    fn threshold_cases() {
        assert!(product_state_threshold(&part(&[2, 2]), 1));
        assert!(!product_state_threshold(&part(&[2, 2]), 2));
        assert!(product_state_threshold(&part(&[2, 3]), 2));
    }

    #[test]
    fn tail_bound_at_gamma_one_decreases() {
        let res = tail_bound(&part(&[2, 2]), 1, 1.0, 64).unwrap();
        for w in res.per_n.windows(2) {
            assert!(w[1].value < w[0].value);
        }
        let n = 64.0;
        assert_relative_eq!(res.bound, 6.0 * (n + 1.0) / ((n + 2.0) * (n + 3.0)), max_relative = 1e-12);
        assert_eq!(res.n_star, 64);
    }

    #[test]
    fn entangled_bound_below_closed_form() {
        for d in [4, 8, 16] {
            let b = entangled_bound(d, 0.2, &lim()).unwrap();
            assert!(b <= (-(d as f64) * 0.2).exp(), "d={d}: {b}");
        }
    }

    #[test]
    fn smooth_gap_small_cases() {
        let g = smooth_gap_bound(2, 1, &lim()).unwrap();
        assert_eq!((g.r, g.n), (1, 64));
        assert!(g.holds);
        assert!(smooth_gap_bound(2, 3, &lim()).is_err());
        let a = smooth_gap_bound(3, 1, &lim()).unwrap();
        let b = smooth_gap_bound(3, 3, &lim()).unwrap();
        assert!(b.gamma < a.gamma && b.r < a.r);
    }

    #[test]
    fn schmidt_tail_qubits() {
        let rep = experiment_schmidt_tail(2, 1000, 0.2, &RngStream::new(1, 0), &lim()).unwrap();
        assert!(rep.lambda_min_seen >= 0.5 - 1e-12 && rep.lambda_max_seen <= 1.0 + 1e-12);
        let rep = experiment_schmidt_tail(4, 200, 2.0, &RngStream::new(1, 0), &lim()).unwrap();
        assert!(rep.threshold > 1.0);
        assert_eq!(rep.exceedances, 0);
    }

    #[test]
    fn product_free_small() {
        let s = RngStream::new(12, 0);
        let rep = experiment_product_free(&part(&[2, 2]), 1, 5, 4, &s).unwrap();
        assert_eq!(rep.pass, Some(true));
        let rep = experiment_product_free(&part(&[2, 2]), 3, 5, 4, &s).unwrap();
        assert!(!rep.threshold_met);
        assert_eq!(rep.pass, None);
    }
}
