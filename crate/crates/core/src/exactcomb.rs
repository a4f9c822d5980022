//! Exact combinatorics over arbitrary-precision integers and rationals.
//!
//! Everything here is a pure function of its arguments. Coefficients that
//! feed the channel identities (Chiribella weights, de Finetti recursion,
//! moment normalizations) are computed exactly and only converted to `f64`
//! at the boundary with the dense numerical code.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use num_rational::BigRational;

/// An occupation vector `(t_1, ..., t_d)` with `t_1 + ... + t_d = n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeVector(Vec<u32>);

impl TypeVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("a type vector needs at least one entry");
        }
        Ok(TypeVector(entries))
    }

    /// The type of a string over `[d]` (letters are `0..d`).
    pub fn of_string(d: usize, letters: &[usize]) -> Self {
        let mut counts = vec![0u32; d];
        for &c in letters {
            counts[c] += 1;
        }
        TypeVector(counts)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Alphabet size.
    pub fn d(&self) -> usize {
        self.0.len()
    }

    /// Total count `n`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| t as u64).sum()
    }

    /// Componentwise sum of two types over the same alphabet.
    pub fn plus(&self, other: &TypeVector) -> TypeVector {
        TypeVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` if any entry would go negative.
    pub fn minus(&self, other: &TypeVector) -> Option<TypeVector> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(TypeVector)
    }
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// `binom(a, b)`, zero when `b < 0` or `b > a`.
pub fn binomial(a: u64, b: i64) -> BigInt {
    if b < 0 || b as u64 > a {
        return BigInt::zero();
    }
    let b = (b as u64).min(a - b as u64);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

/// Generalized binomial `a(a-1)...(a-m+1)/m!` for any integer `a`.
pub fn generalized_binomial(a: i64, m: u64) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..m {
        num *= a - i as i64;
        den *= i + 1;
    }
    num / den
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `n! / (t_1! ... t_d!)`.
pub fn multinomial(n: u64, t: &TypeVector) -> Result<BigInt> {
    if t.total() != n {
        return invalid(format!(
            "type {t} sums to {} but n = {n}",
            t.total()
        ));
    }
    let mut acc = BigInt::one();
    let mut placed = 0u64;
    for &ti in t.entries() {
        placed += ti as u64;
        acc *= binomial(placed, ti as i64);
    }
    Ok(acc)
}

/// Dimension of the symmetric subspace of `(C^d)^{⊗n}`: `binom(d+n-1, n)`.
pub fn sym_dim(d: u64, n: u64) -> BigInt {
    if d == 0 {
        return if n == 0 { BigInt::one() } else { BigInt::zero() };
    }
    binomial(d + n - 1, n as i64)
}

/// `sym_dim` as a machine integer; panics only if it does not fit `usize`.
pub(crate) fn sym_dim_usize(d: usize, n: usize) -> usize {
    sym_dim(d as u64, n as u64)
        .to_usize()
        .expect("symmetric dimension fits in usize")
}

/// All types in `I_{d,n}`, lexicographically descending (`t_1` first).
pub fn enumerate_types(d: usize, n: usize) -> Result<Vec<TypeVector>> {
    if d == 0 {
        return invalid("alphabet size d must be at least 1");
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fill_types(0, n as u32, &mut cur, &mut out);
    Ok(out)
}

fn fill_types(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<TypeVector>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(TypeVector(cur.clone()));
        return;
    }
    for t in (0..=remaining).rev() {
        cur[pos] = t;
        fill_types(pos + 1, remaining - t, cur, out);
    }
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Chiribella weight `M^{(d,n)}_{k,s} = binom(n,s) binom(d+k-1,k-s) / binom(d+n+k-1,k)`.
pub fn mp_clone_coefficient(d: u64, n: u64, k: u64, s: u64) -> BigRational {
    if s > k {
        return BigRational::zero();
    }
    let num = binomial(n, s as i64) * binomial(d + k - 1, (k - s) as i64);
    let den = binomial(d + n + k - 1, k as i64);
    ratio(num, den)
}

/// `M_k^{(d,n)}(x) = sum_s M_{k,s} x^s`.
pub fn mp_clone_polynomial(d: u64, n: u64, k: u64, x: &BigRational) -> BigRational {
    // Horner from the top coefficient down.
    (0..=k).rev().fold(BigRational::zero(), |acc, s| {
        acc * x + mp_clone_coefficient(d, n, k, s)
    })
}

/// Jacobi polynomial `P_k^{(alpha,beta)}(y)`, exactly.
///
/// Uses the three-term recurrence. For integer parameters where one of the
/// recurrence denominators vanishes the explicit finite sum is used instead.
pub fn jacobi_polynomial(alpha: i64, beta: i64, k: u32, y: &BigRational) -> BigRational {
    if recurrence_is_regular(alpha, beta, k) {
        jacobi_recurrence(alpha, beta, k, y)
    } else {
        jacobi_explicit(alpha, beta, k, y)
    }
}

fn recurrence_is_regular(alpha: i64, beta: i64, k: u32) -> bool {
    (2..=k as i64).all(|j| j + alpha + beta != 0 && 2 * j + alpha + beta - 2 != 0)
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub(crate) fn jacobi_recurrence(alpha: i64, beta: i64, k: u32, y: &BigRational) -> BigRational {
    let one = BigRational::one();
    if k == 0 {
        return one;
    }
    let p1 = int(alpha + 1) + int(alpha + beta + 2) * (y - &one) / int(2);
    if k == 1 {
        return p1;
    }
    let (a, b) = (alpha, beta);
    let mut prev = one;
    let mut cur = p1;
    for j in 2..=k as i64 {
        let s = 2 * j + a + b;
        let den = int(2 * j * (j + a + b) * (s - 2));
        let c1 = int(s - 1) * (int(s * (s - 2)) * y + int(a * a - b * b));
        let c2 = int(2 * (j + a - 1) * (j + b - 1) * s);
        let next = (c1 * &cur - c2 * &prev) / den;
        prev = cur;
        cur = next;
    }
    cur
}

/// `sum_s binom(k+alpha, k-s) binom(k+beta, s) ((y-1)/2)^s ((y+1)/2)^(k-s)`.
pub(crate) fn jacobi_explicit(alpha: i64, beta: i64, k: u32, y: &BigRational) -> BigRational {
    let one = BigRational::one();
    let two = int(2);
    let lo = (y - &one) / &two;
    let hi = (y + &one) / &two;
    let k64 = k as i64;
    (0..=k)
        .map(|s| {
            let c = generalized_binomial(k64 + alpha, (k - s) as u64)
                * generalized_binomial(k64 + beta, s as u64);
            BigRational::from_integer(c) * pow(&lo, s) * pow(&hi, k - s)
        })
        .fold(BigRational::zero(), |acc, t| acc + t)
}

pub(crate) fn pow(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow::pow(x.clone(), e as usize)
}

/// The Jacobi-polynomial form of `M_k^{(d,n)}(x)`, valid for `x != 1`:
/// `(x-1)^k / binom(d+n+k-1,k) * P_k^{(n-k, d-1)}((x+1)/(x-1))`.
pub fn mp_clone_polynomial_via_jacobi(d: u64, n: u64, k: u64, x: &BigRational) -> Result<BigRational> {
    let one = BigRational::one();
    if *x == one {
        return invalid("the Jacobi form is singular at x = 1");
    }
    let y = (x + &one) / (x - &one);
    let p = jacobi_polynomial(n as i64 - k as i64, d as i64 - 1, k as u32, &y);
    let scale = BigRational::from_integer(binomial(d + n + k - 1, k as i64));
    Ok(pow(&(x - &one), k as u32) * p / scale)
}

/// `1 / (d (d+2) (d+4) ... (d+2n-2))`, the exact value of
/// `2^{-n} Γ(d/2) / Γ(n + d/2)`.
pub fn real_moment_ratio(d: u64, n: u64) -> BigRational {
    let den = (0..n).fold(BigInt::one(), |acc, j| acc * (d + 2 * j));
    ratio(BigInt::one(), den)
}

/// Converts an exact rational to the nearest `f64`.
pub fn to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs(x).exp()
}

/// Natural logarithm of `|x|` without overflowing `f64` on huge operands.
pub fn ln_abs(x: &BigRational) -> f64 {
    ln_big(x.numer()) - ln_big(x.denom())
}

pub fn ln_big(x: &BigInt) -> f64 {
    let x = x.abs();
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = &x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Formats a rational as `"p/q"` (or `"p"` when integral).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Serializes a rational as its `"p/q"` string.
pub fn serialize_rational<S: serde::Serializer>(x: &BigRational, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&format_rational(x))
}

/// Serializes a list of rationals as `"p/q"` strings.
pub fn serialize_rationals<S: serde::Serializer>(xs: &[BigRational], ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.collect_seq(xs.iter().map(format_rational))
}

/// Parses `"p/q"`, `"p"` or a terminating decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().or_else(|_| invalid(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q.trim().parse().or_else(|_| invalid(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return invalid("zero denominator");
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let digits = format!("{whole}{frac}");
        let p: BigInt = digits.parse().or_else(|_| invalid(format!("bad decimal {s:?}")))?;
        let q = num_traits::pow::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(p, q));
    }
    let p: BigInt = s.parse().or_else(|_| invalid(format!("bad rational {s:?}")))?;
    Ok(BigRational::from_integer(p))
}
