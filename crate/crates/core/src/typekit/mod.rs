//! Finite-alphabet probability objects, type-class combinatorics and
//! information measures.

mod counts;
mod dist;
mod measures;
mod types;

pub use counts::LogTable;
pub use dist::{Alphabet, JointDistribution, Kernel, Projection, MASS_TOL};
#[allow(unused_imports)]
pub(crate) use dist::{strides, validate_axes};
pub use measures::{
    binary_entropy, conditional_divergence, divergence, entropy, entropy_of, multi_info_partition_identity_residual,
    multi_information, mutual_information, variational_distance,
};
pub use types::{
    conditional_class_members, conditional_type_class_size, enumerate_conditional_types, enumerate_types,
    joint_type_of, log2_big, log2_type_class_size, multinomial, next_permutation, rank_in_class,
    sample_conditional_member, sample_type_class_member, smallest_member, type_class_members, type_class_size,
    unrank_in_class, EmpiricalType, Sequence,
};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Dirichlet(1, ..., 1) draw via normalized exponentials.
pub fn random_simplex_point<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Dirichlet-random joint distribution over the given axes.
pub fn random_joint<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> JointDistribution {
    let total: usize = dims.iter().product();
    JointDistribution::from_parts_unchecked(dims.to_vec(), random_simplex_point(total, rng))
}

/// Dirichlet-random row-stochastic kernel.
pub fn random_kernel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Kernel {
    let probs: Vec<f64> = (0..rows).flat_map(|_| random_simplex_point(cols, &mut *rng)).collect();
    Kernel::new(rows, cols, probs).expect("normalized rows")
}
