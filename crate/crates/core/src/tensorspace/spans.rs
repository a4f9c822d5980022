use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::Zero;

use super::operator::C64;
use super::permutation::enumerate_permutations;
use super::symmetric::tensor_power_ket;
use crate::error::{invalid, Result};
use crate::exactcomb::{factorial, sym_dim_usize};
use crate::limits::Limits;
use crate::randomness::{haar_state, RngStream};

/// Singular values at or below this count as zero in span-rank tests.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// `(1/n!) Σ_{π∈S_n} d^{2·cycles(π)}`, the dimension of the operators on
/// `(C^d)^{⊗n}` that commute with every `P_d(π)`.
pub fn conjugation_fixed_dimension(d: u64, n: usize, limits: &Limits) -> Result<BigInt> {
    let d2 = BigInt::from(d) * BigInt::from(d);
    let mut sum = BigInt::zero();
    for pi in enumerate_permutations(n, limits)? {
        sum += num_traits::pow(d2.clone(), pi.cycle_count());
    }
    let nf = factorial(n as u64);
    debug_assert!((&sum % &nf).is_zero());
    Ok(sum / nf)
}

/// Numerical rank of `{vec(φ^{⊗n} φ^{†⊗n})}` over `samples` Haar vectors `φ`.
pub fn tensor_power_span_rank(d: usize, n: usize, samples: usize, stream: &mut RngStream, limits: &Limits) -> Result<usize> {
    let dim = limits.power_dim(d, n)?;
    limits.check_superop(dim, 1)?;
    let needed = sym_dim_usize(d, n).pow(2) + 5;
    if samples < needed {
        return invalid(format!("span rank at (d={d}, n={n}) needs at least {needed} samples, got {samples}"));
    }
    let mut stacked = DMatrix::<C64>::zeros(dim * dim, samples);
    for s in 0..samples {
        let phi = haar_state(d, stream);
        let w = tensor_power_ket(&phi.matrix().column(0).into_owned(), n);
        for j in 0..dim {
            for i in 0..dim {
                stacked[(i + j * dim, s)] = w[i] * w[j].conj();
            }
        }
    }
    let sv = stacked.singular_values();
    Ok(sv.iter().filter(|&&x| x > RANK_THRESHOLD).count())
}
