//! de Finetti error parameters and the exact inversion of the
//! measure-and-prepare/cloning relation.
//!
//! With `A_s = clone_{k−s→k} ∘ tr_{n−(k−s)}` and
//! `B_s = clone_{k−s→k} ∘ MP_{n→k−s}`, symmetric inputs satisfy
//! `B_r = Σ_{s≥r} M_{k−r,k−s} A_s`. Eliminating `A_0, A_1, …` in turn gives
//! `A_0 = tr_{n−k} = Σ_{s<r} x_s B_s + Σ_{s≥r} y^{(r)}_s A_s` for every `r`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::channels::{Channel, ChannelKernel, IdentityCheck, Superoperator};
use crate::error::{invalid, Result};
use crate::exactcomb::{mp_clone_coefficient, serialize_rational, serialize_rationals, to_f64, BigRational};
use crate::limits::Limits;
use crate::tensorspace::{copies, Operator};

fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// `ε = k(d+k)/(n+d)` together with whether the bound is informative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeFinettiEpsilon {
    #[serde(serialize_with = "serialize_rational")]
    pub value: BigRational,
    /// True when `ε > 1`, where the bound says nothing.
    pub exceeds_one: bool,
}

pub fn definetti_epsilon(d: u64, n: u64, k: u64) -> DeFinettiEpsilon {
    let value = rational(k * (d + k), n + d);
    let exceeds_one = value > BigRational::one();
    DeFinettiEpsilon { value, exceeds_one }
}

/// `δ = k(d+k)/n`.
pub fn definetti_delta(d: u64, n: u64, k: u64) -> Result<BigRational> {
    if n == 0 {
        return invalid("δ needs n ≥ 1");
    }
    Ok(rational(k * (d + k), n))
}

/// Coefficients after `r` elimination steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeFinettiCoefficients {
    pub d: u64,
    pub n: u64,
    pub k: u64,
    pub r: u64,
    #[serde(serialize_with = "serialize_rational")]
    pub delta: BigRational,
    /// `x_0, …, x_{r−1}`.
    #[serde(serialize_with = "serialize_rationals")]
    pub x: Vec<BigRational>,
    /// `y^{(r)}_r, …, y^{(r)}_k`.
    #[serde(serialize_with = "serialize_rationals")]
    pub y: Vec<BigRational>,
    /// `history[j][s − j] = y^{(j)}_s` for `j ≤ r` and `s ≥ j`.
    #[serde(skip)]
    pub history: Vec<Vec<BigRational>>,
}

impl DeFinettiCoefficients {
    /// `y^{(j)}_s`.
    pub fn y_at(&self, j: u64, s: u64) -> &BigRational {
        &self.history[j as usize][(s - j) as usize]
    }

    /// `x_0, …, x_k` when `r = k`, using `x_k = y^{(k)}_k` (since `A_k = B_k`).
    pub fn full_x(&self) -> Option<Vec<BigRational>> {
        (self.r == self.k).then(|| {
            let mut x = self.x.clone();
            x.push(self.y[0].clone());
            x
        })
    }

    /// `Σ_{s≥r} |y^{(r)}_s|`, the total weight left on the `A_s` terms.
    pub fn truncation_tail(&self) -> BigRational {
        self.y.iter().map(|v| v.abs()).fold(BigRational::zero(), |a, b| a + b)
    }
}

/// Runs `r` elimination steps of the recursion
/// `x_j = y^{(j)}_j / M_{k−j,k−j}`,
/// `y^{(j+1)}_s = y^{(j)}_s − (M_{k−j,k−s} / M_{k−j,k−j}) y^{(j)}_j`,
/// starting from `y^{(0)} = (1, 0, …, 0)`. All `M` carry superscript `(d,n)`.
pub fn exp_definetti_coefficients(d: u64, n: u64, k: u64, r: u64) -> Result<DeFinettiCoefficients> {
    if d == 0 || k > n || r > k {
        return invalid(format!("need d ≥ 1 and 0 ≤ r ≤ k ≤ n, got d={d}, n={n}, k={k}, r={r}"));
    }
    let m = |a: u64, b: u64| mp_clone_coefficient(d, n, a, b);
    let mut y: Vec<BigRational> = (0..=k).map(|s| if s == 0 { BigRational::one() } else { BigRational::zero() }).collect();
    let mut history = vec![y.clone()];
    let mut x = Vec::new();
    for j in 0..r {
        let pivot = m(k - j, k - j);
        let yj = y[0].clone();
        x.push(&yj / &pivot);
        let next: Vec<BigRational> = (j + 1..=k)
            .map(|s| &y[(s - j) as usize] - m(k - j, k - s) / &pivot * &yj)
            .collect();
        y = next;
        history.push(y.clone());
    }
    Ok(DeFinettiCoefficients {
        d,
        n,
        k,
        r,
        delta: definetti_delta(d, n, k)?,
        x,
        y,
        history,
    })
}

/// Expands `Σ_{s<r} x_s B_s + Σ_{s≥r} y_s A_s` over the `A` basis using
/// `B_j = Σ_{s≥j} M_{k−j,k−s} A_s`. The result is `e_0` exactly when the
/// coefficients reproduce `A_0`.
pub fn expand_in_a_basis(c: &DeFinettiCoefficients) -> Vec<BigRational> {
    let (d, n, k) = (c.d, c.n, c.k);
    let mut coeff = vec![BigRational::zero(); k as usize + 1];
    for (j, xj) in c.x.iter().enumerate() {
        let j = j as u64;
        for s in j..=k {
            coeff[s as usize] += xj * mp_clone_coefficient(d, n, k - j, k - s);
        }
    }
    for (i, ys) in c.y.iter().enumerate() {
        coeff[c.r as usize + i] += ys;
    }
    coeff
}

/// True iff [`expand_in_a_basis`] returns `e_0`.
pub fn expansion_is_exact(c: &DeFinettiCoefficients) -> bool {
    expand_in_a_basis(c)
        .iter()
        .enumerate()
        .all(|(s, v)| if s == 0 { v.is_one() } else { v.is_zero() })
}

/// One inequality of the coefficient bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    #[serde(serialize_with = "serialize_rational")]
    pub value: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub bound: BigRational,
    pub pass: bool,
}

/// Exact comparison of the coefficients against the bounds that hold for
/// `δ < 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    /// False when `δ ≥ 1`; no checks are made then.
    pub applicable: bool,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks `|y^{(j)}_s| ≤ 2^j δ^s`, `|x_s| ≤ |y^{(s)}_s|/(1−δ)` and
/// `|x_s| ≤ (2δ)^s/(1−δ)` for every stored coefficient.
pub fn check_coefficient_bounds(c: &DeFinettiCoefficients) -> BoundsReport {
    let one = BigRational::one();
    if c.delta >= one {
        return BoundsReport {
            applicable: false,
            checks: Vec::new(),
        };
    }
    let delta = &c.delta;
    let inv = &one / (&one - delta);
    let two = BigRational::from_integer(2.into());
    let pow = |b: &BigRational, e: u64| num_traits::pow(b.clone(), e as usize);
    let mut checks = Vec::new();
    let mut push = |name: String, value: BigRational, bound: BigRational| {
        let pass = value <= bound;
        checks.push(BoundCheck { name, value, bound, pass });
    };
    for (j, row) in c.history.iter().enumerate() {
        for (i, y) in row.iter().enumerate() {
            let s = (j + i) as u64;
            push(format!("|y^({j})_{s}|"), y.abs(), pow(&two, j as u64) * pow(delta, s));
        }
    }
    let xs = c.full_x().unwrap_or_else(|| c.x.clone());
    for (s, x) in xs.iter().enumerate() {
        let s64 = s as u64;
        push(format!("|x_{s}| vs pivot"), x.abs(), c.y_at(s64, s64).abs() * &inv);
        push(format!("|x_{s}|"), x.abs(), pow(&(&two * delta), s64) * &inv);
    }
    BoundsReport {
        applicable: true,
        checks,
    }
}

/// Kernels for `B_s = clone_{k−s→k} ∘ MP_{n→k−s}` and
/// `A_s = clone_{k−s→k} ∘ tr_{n−(k−s)}`.
struct Terms {
    b: Vec<(ChannelKernel, ChannelKernel)>,
    a: Vec<(ChannelKernel, ChannelKernel)>,
}

impl Terms {
    fn new(d: usize, n: usize, k: usize, limits: &Limits) -> Result<Self> {
        let mut b = Vec::new();
        let mut a = Vec::new();
        for s in 0..=k {
            let clone = Channel::Clone { d, n: k - s, k: s }.kernel(limits)?;
            b.push((Channel::MeasurePrepare { d, n, k: k - s }.kernel(limits)?, clone.clone()));
            a.push((Channel::PartialTrace { d, n, k: k - s }.kernel(limits)?, clone));
        }
        Ok(Terms { b, a })
    }
}

fn apply_pair(pair: &(ChannelKernel, ChannelKernel), x: &Operator) -> Result<Operator> {
    pair.1.apply(&pair.0.apply(x)?)
}

/// `‖tr_{n−k} − Σ_{s<r} x_s B_s − Σ_{s≥r} y^{(r)}_s A_s‖_F` on `∨^n C^d`.
pub fn verify_expansion(c: &DeFinettiCoefficients, limits: &Limits) -> Result<IdentityCheck> {
    let (d, n, k) = (c.d as usize, c.n as usize, c.k as usize);
    let lhs = Channel::PartialTrace { d, n, k }.restricted(limits)?;
    let terms = Terms::new(d, n, k, limits)?;
    let xw: Vec<f64> = c.x.iter().map(to_f64).collect();
    let yw: Vec<f64> = c.y.iter().map(to_f64).collect();
    let r = c.r as usize;
    let rhs = Superoperator::restricted_from_map(d, n, copies(d, k), limits, |x| {
        let mut acc = Operator::zeros(copies(d, k), copies(d, k));
        for (s, w) in xw.iter().enumerate() {
            acc = acc.add(&apply_pair(&terms.b[s], x)?.scale_real(*w))?;
        }
        for (i, w) in yw.iter().enumerate() {
            acc = acc.add(&apply_pair(&terms.a[r + i], x)?.scale_real(*w))?;
        }
        Ok(acc)
    })?;
    Ok(IdentityCheck {
        residual: lhs.distance(&rhs)?,
        exact: expansion_is_exact(c),
    })
}

/// `tr_{n−k} = Σ_{s=0}^k x_s clone_{k−s→k} ∘ MP_{n→k−s}` on `∨^n C^d`.
pub fn verify_exp_definetti(d: usize, n: usize, k: usize, limits: &Limits) -> Result<IdentityCheck> {
    let c = exp_definetti_coefficients(d as u64, n as u64, k as u64, k as u64)?;
    let x: Vec<f64> = c.full_x().expect("r = k").iter().map(to_f64).collect();
    let lhs = Channel::PartialTrace { d, n, k }.restricted(limits)?;
    let terms = Terms::new(d, n, k, limits)?;
    let rhs = Superoperator::restricted_from_map(d, n, copies(d, k), limits, |rho| {
        let mut acc = Operator::zeros(copies(d, k), copies(d, k));
        for (s, w) in x.iter().enumerate() {
            acc = acc.add(&apply_pair(&terms.b[s], rho)?.scale_real(*w))?;
        }
        Ok(acc)
    })?;
    Ok(IdentityCheck {
        residual: lhs.distance(&rhs)?,
        exact: expansion_is_exact(&c),
    })
}

/// The decomposition `MP_{n→k} = M_{k,k} tr_{n−k} + (1 − M_{k,k}) N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonForm {
    /// `1 − M_{k,k}`.
    #[serde(serialize_with = "serialize_rational")]
    pub epsilon: BigRational,
    /// `k(d+k)/(n+d)`.
    #[serde(serialize_with = "serialize_rational")]
    pub epsilon_bound: BigRational,
    /// Smallest Choi eigenvalue of `N` on symmetric inputs.
    pub choi_min: f64,
    /// Largest deviation of `N` from trace preservation on symmetric inputs.
    pub trace_error: f64,
}

/// Builds `N = (MP_{n→k} − M_{k,k} tr_{n−k}) / (1 − M_{k,k})` on `∨^n C^d`.
/// Fails for `k = 0`, where `M_{k,k} = 1` and `N` is undefined.
pub fn epsilon_form(d: usize, n: usize, k: usize, limits: &Limits) -> Result<EpsilonForm> {
    if k == 0 || k > n {
        return invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}"));
    }
    let mkk = mp_clone_coefficient(d as u64, n as u64, k as u64, k as u64);
    let epsilon = BigRational::one() - &mkk;
    let mp = Channel::MeasurePrepare { d, n, k }.restricted(limits)?;
    let tr = Channel::PartialTrace { d, n, k }.restricted(limits)?;
    let noise = mp.sub(&tr.scale_real(to_f64(&mkk)))?.scale_real(1.0 / to_f64(&epsilon));
    Ok(EpsilonForm {
        epsilon,
        epsilon_bound: definetti_epsilon(d as u64, n as u64, k as u64).value,
        choi_min: noise.choi_min_eigenvalue(),
        trace_error: noise.trace_preservation_error(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactcomb::parse_rational;
    use crate::randomness::{haar_state, RngStream};
    use crate::tensorspace::tensor_power_ket;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(definetti_epsilon(2, 100, 1).value, rat("3/102"));
        assert_eq!(definetti_epsilon(5, 7, 0).value, BigRational::zero());
        assert!(definetti_epsilon(2, 2, 2).exceeds_one);
        assert!(!definetti_epsilon(2, 100, 1).exceeds_one);
    }

    #[test]
    fn epsilon_dominates_one_minus_mkk() {
        for d in 1..=12u64 {
            for n in 1..=12u64 {
                for k in 0..=n {
                    let eps = definetti_epsilon(d, n, k);
                    if !eps.exceeds_one {
                        assert!(BigRational::one() - mp_clone_coefficient(d, n, k, k) <= eps.value);
                    }
                }
            }
        }
    }

    #[test]
    fn hand_worked_case() {
        let c = exp_definetti_coefficients(2, 4, 1, 1).unwrap();
        assert_eq!(c.x, vec![rat("3/2")]);
        assert_eq!(c.y, vec![rat("-1/2")]);
        assert_eq!(c.delta, rat("3/4"));
        assert_eq!(c.full_x().unwrap(), vec![rat("3/2"), rat("-1/2")]);
        let report = check_coefficient_bounds(&c);
        assert!(report.applicable && report.all_pass());
        assert!(expansion_is_exact(&c));
    }

    #[test]
    fn base_case() {
        let c = exp_definetti_coefficients(3, 5, 2, 0).unwrap();
        assert!(c.x.is_empty());
        assert_eq!(c.y[0], BigRational::one());
        assert!(c.y[1..].iter().all(|v| v.is_zero()));
        let report = check_coefficient_bounds(&exp_definetti_coefficients(2, 100, 1, 0).unwrap());
        assert!(report.all_pass());
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(exp_definetti_coefficients(2, 3, 4, 0).is_err());
        assert!(exp_definetti_coefficients(2, 4, 2, 3).is_err());
    }

    #[test]
    fn expansion_exact_for_every_r() {
        for d in 1..=5u64 {
            for n in 1..=8u64 {
                for k in 0..=n {
                    for r in 0..=k {
                        let c = exp_definetti_coefficients(d, n, k, r).unwrap();
                        assert!(expansion_is_exact(&c), "({d},{n},{k},{r})");
                    }
                }
            }
        }
    }

    #[test]
    fn bounds_hold_whenever_delta_below_one() {
        let mut applicable = 0;
        for d in 1..=6u64 {
            for n in 1..=60u64 {
                for k in 0..=n.min(6) {
                    let c = exp_definetti_coefficients(d, n, k, k).unwrap();
                    let report = check_coefficient_bounds(&c);
                    if report.applicable {
                        applicable += 1;
                        assert!(report.all_pass(), "({d},{n},{k}): {:?}", report.checks.iter().find(|b| !b.pass));
                    }
                }
            }
        }
        assert!(applicable > 100);
        assert!(!check_coefficient_bounds(&exp_definetti_coefficients(2, 3, 1, 1).unwrap()).applicable);
    }

    #[test]
    fn channel_identity_small_cases() {
        let lim = Limits::default();
        for (d, n, k) in [(2, 4, 1), (2, 3, 1), (2, 3, 2), (3, 2, 2), (2, 5, 0)] {
            let check = verify_exp_definetti(d, n, k, &lim).unwrap();
            assert!(check.residual < 1e-10, "({d},{n},{k}) {}", check.residual);
            assert!(check.exact);
        }
    }

    #[test]
    fn partial_expansions_are_exact_identities() {
        let lim = Limits::default();
        for r in 0..=2 {
            let c = exp_definetti_coefficients(2, 4, 2, r).unwrap();
            assert!(verify_expansion(&c, &lim).unwrap().residual < 1e-10);
        }
    }

    #[test]
    fn hand_worked_case_recovers_product_marginal() {
        // tr_3 φ^{⊗4} = (3/2) MP_{4→1}(φ^{⊗4}) − (1/2) I/2.
        let lim = Limits::default();
        let mut s = RngStream::new(31, 0);
        let phi = haar_state(2, &mut s).matrix().column(0).into_owned();
        let v = tensor_power_ket(&phi, 4);
        let rho = Operator::square(&v * v.adjoint(), copies(2, 4)).unwrap();
        let mp = Channel::MeasurePrepare { d: 2, n: 4, k: 1 }.apply(&rho, &lim).unwrap();
        let got = mp.scale_real(1.5).sub(&Operator::identity(vec![2]).scale_real(0.25)).unwrap();
        let want = Operator::square(&phi * phi.adjoint(), vec![2]).unwrap();
        assert!(got.sub(&want).unwrap().max_abs_entry() < 1e-12);
    }

    #[test]
    fn epsilon_form_noise_is_a_channel() {
        let lim = Limits::default();
        for (d, n, k) in [(2, 4, 1), (2, 3, 2), (3, 3, 1)] {
            let e = epsilon_form(d, n, k, &lim).unwrap();
            assert!(e.choi_min > -1e-10);
            assert!(e.trace_error < 1e-10);
            assert!(e.epsilon <= e.epsilon_bound || e.epsilon_bound > BigRational::one());
        }
        assert!(epsilon_form(2, 3, 0, &lim).is_err());
    }
}
