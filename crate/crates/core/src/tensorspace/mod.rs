//! Dense operators on tensor-product spaces and the permutation action of
//! `S_n` on `(C^d)^{⊗n}`.

mod matching;
mod operator;
mod permutation;
mod spans;
mod symmetric;

pub use matching::{enumerate_matchings, matching_operator, matching_sum, Matching};
pub(crate) use operator::apply_on_factor;
pub use operator::{copies, Operator, C64};
pub(crate) use operator::{ONE, ZERO};
pub use permutation::{enumerate_permutations, permutation_operator, Permutation};
pub use spans::{conjugation_fixed_dimension, tensor_power_span_rank, RANK_THRESHOLD};
pub use symmetric::{
    isometry_range_projector, sym_projector, sym_projector_enumerated, sym_projector_group, tensor_power_ket,
    type_isometry, TypeBasis,
};
