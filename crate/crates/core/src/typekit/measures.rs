//! Information measures in bits.
//!
//! Conventions: `0 log 0 = 0`, `p log(p/0) = +inf`. Measures never
//! renormalize their inputs.

use super::dist::{validate_axes, JointDistribution, Kernel, Projection};
use crate::error::{Error, Result};

/// `-sum p log2 p` over a flat probability vector.
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Entropy of the marginal on `axes`.
pub(crate) fn marginal_entropy(p: &JointDistribution, axes: &[usize]) -> Result<f64> {
    let proj = Projection::new(p.dims(), axes)?;
    Ok(entropy_of(&proj.project(p.probs())))
}

fn union(sets: &[&[usize]]) -> Vec<usize> {
    let mut all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Conditional Shannon entropy `H(target | cond)` in bits.
pub fn entropy(p: &JointDistribution, target: &[usize], cond: &[usize]) -> Result<f64> {
    validate_axes(p.rank(), &[target, cond])?;
    let joint = marginal_entropy(p, &union(&[target, cond]))?;
    let c = marginal_entropy(p, cond)?;
    Ok(joint - c)
}

/// `I(A ∧ B | C)` in bits.
pub fn mutual_information(
    p: &JointDistribution,
    a: &[usize],
    b: &[usize],
    cond: &[usize],
) -> Result<f64> {
    multi_information(p, &[a, b], cond)
}

/// Multi-information `sum_k H(G_k | C) - H(G_1, ..., G_N | C)`.
pub fn multi_information(p: &JointDistribution, groups: &[&[usize]], cond: &[usize]) -> Result<f64> {
    let mut sets: Vec<&[usize]> = groups.to_vec();
    sets.push(cond);
    validate_axes(p.rank(), &sets)?;
    let h_c = marginal_entropy(p, cond)?;
    let mut total = 0.0;
    for g in groups {
        total += marginal_entropy(p, &union(&[g, cond]))? - h_c;
    }
    let everything = union(&sets);
    total -= marginal_entropy(p, &everything)? - h_c;
    Ok(total)
}

/// Residual of the two-block decomposition of multi-information:
/// `I(all) - [I(block I) + I(block J) + I(∪I ∧ ∪J)]`, all conditioned on `cond`.
///
/// `part_i` and `part_j` index into `groups` and must partition it.
pub fn multi_info_partition_identity_residual(
    p: &JointDistribution,
    groups: &[&[usize]],
    part_i: &[usize],
    part_j: &[usize],
    cond: &[usize],
) -> Result<f64> {
    if part_i.is_empty() || part_j.is_empty() {
        return Err(Error::InvalidArgument("partition blocks must be nonempty".into()));
    }
    let mut covered = vec![false; groups.len()];
    for &g in part_i.iter().chain(part_j) {
        if g >= groups.len() || covered[g] {
            return Err(Error::InvalidArgument(format!("invalid partition index {g}")));
        }
        covered[g] = true;
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::InvalidArgument("partition does not cover all groups".into()));
    }
    let block = |part: &[usize]| -> Vec<&[usize]> { part.iter().map(|&g| groups[g]).collect() };
    let gi = block(part_i);
    let gj = block(part_j);
    let flat_i = union(&gi);
    let flat_j = union(&gj);
    let all = multi_information(p, groups, cond)?;
    let mi = multi_information(p, &gi, cond)?;
    let mj = multi_information(p, &gj, cond)?;
    let cross = mutual_information(p, &flat_i, &flat_j, cond)?;
    Ok(all - (mi + mj + cross))
}

/// I-divergence `D(p || q)` of two vectors on the same alphabet.
pub fn divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// Conditional divergence `sum_x P(x) D(P(.|x) || W(.|x))`.
pub fn conditional_divergence(p_cond: &Kernel, w: &Kernel, base: &JointDistribution) -> Result<f64> {
    if p_cond.rows() != w.rows() || p_cond.cols() != w.cols() || base.len() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "kernels {}x{} / {}x{} with base of {} cells",
            p_cond.rows(),
            p_cond.cols(),
            w.rows(),
            w.cols(),
            base.len()
        )));
    }
    let mut total = 0.0;
    for (x, &px) in base.probs().iter().enumerate() {
        if px > 0.0 {
            let d = divergence(p_cond.row(x), w.row(x));
            if d.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += px * d;
        }
    }
    Ok(total)
}

/// `sum |P - Q|`, in `[0, 2]`.
pub fn variational_distance(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    if p.dims() != q.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", p.dims(), q.dims())));
    }
    Ok(p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum())
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bsc_joint(p: f64) -> JointDistribution {
        JointDistribution::new(vec![2, 2], vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p)]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let u = JointDistribution::from_vec(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(entropy(&u, &[0], &[]).unwrap(), 1.0, epsilon = 1e-15);
        let pm = JointDistribution::from_vec(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(entropy(&pm, &[0], &[]).unwrap(), 0.0);
        // -(0.25 log 0.25 + 0.75 log 0.75) = 0.5 + 0.75 * 0.415037499... = 0.8112781244591328
        let q = JointDistribution::from_vec(vec![0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(entropy(&q, &[0], &[]).unwrap(), 0.811_278_124_459_132_8, epsilon = 1e-14);
    }

    #[test]
    fn entropy_rejects_bad_axes() {
        let u = JointDistribution::uniform(vec![2, 2]).unwrap();
        assert!(matches!(entropy(&u, &[2], &[]), Err(Error::AxisOutOfRange { .. })));
        assert!(matches!(entropy(&u, &[0], &[0]), Err(Error::OverlappingAxes(0))));
    }

    #[test]
    fn mutual_information_examples() {
        let prod = JointDistribution::from_vec(vec![0.3, 0.7])
            .unwrap()
            .product(&JointDistribution::from_vec(vec![0.6, 0.4]).unwrap());
        assert_abs_diff_eq!(mutual_information(&prod, &[0], &[1], &[]).unwrap(), 0.0, epsilon = 1e-12);
        // 1 - h(0.1) with h(0.1) = 0.4689955935892812
        let bsc = bsc_joint(0.1);
        assert_abs_diff_eq!(
            mutual_information(&bsc, &[0], &[1], &[]).unwrap(),
            0.531_004_406_410_718_8,
            epsilon = 1e-12
        );
        let copy = bsc_joint(0.0);
        assert_abs_diff_eq!(mutual_information(&copy, &[0], &[1], &[]).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            mutual_information(&copy, &[0], &[0], &[]),
            Err(Error::OverlappingAxes(0))
        ));
    }

    #[test]
    fn multi_information_examples() {
        let three = JointDistribution::new(vec![2, 2, 2], vec![0.5, 0., 0., 0., 0., 0., 0., 0.5]).unwrap();
        assert_abs_diff_eq!(
            multi_information(&three, &[&[0], &[1], &[2]], &[]).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let bsc = bsc_joint(0.2);
        assert_abs_diff_eq!(
            multi_information(&bsc, &[&[0], &[1]], &[]).unwrap(),
            mutual_information(&bsc, &[0], &[1], &[]).unwrap(),
            epsilon = 1e-15
        );
        assert!(multi_information(&three, &[&[0, 1], &[1]], &[]).is_err());
    }

    #[test]
    fn partition_identity_degenerate_cases() {
        let prod = JointDistribution::from_vec(vec![0.2, 0.8])
            .unwrap()
            .product(&JointDistribution::from_vec(vec![0.5, 0.25, 0.25]).unwrap());
        let r = multi_info_partition_identity_residual(&prod, &[&[0], &[1]], &[0], &[1], &[]).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        let bsc = bsc_joint(0.3);
        let r = multi_info_partition_identity_residual(&bsc, &[&[0], &[1]], &[0], &[1], &[]).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        assert!(multi_info_partition_identity_residual(&bsc, &[&[0], &[1]], &[0], &[], &[]).is_err());
        assert!(multi_info_partition_identity_residual(&bsc, &[&[0], &[1]], &[0], &[0], &[]).is_err());
    }

    #[test]
    fn conditional_divergence_examples() {
        let w = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let base = JointDistribution::from_vec(vec![0.5, 0.5]).unwrap();
        assert_eq!(conditional_divergence(&w, &w, &base).unwrap(), 0.0);

        let flipped = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let only_first = JointDistribution::from_vec(vec![1.0, 0.0]).unwrap();
        assert_eq!(conditional_divergence(&flipped, &w, &only_first).unwrap(), 0.0);

        // Deterministic output disagreeing with the likely symbol: -log2 0.1 = 3.321928094887362
        let det = Kernel::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(
            conditional_divergence(&det, &w, &base).unwrap(),
            3.321_928_094_887_362,
            epsilon = 1e-12
        );

        let hard = Kernel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(conditional_divergence(&w, &hard, &base).unwrap().is_infinite());
    }

    #[test]
    fn variational_distance_examples() {
        let p = JointDistribution::from_vec(vec![0.6, 0.4]).unwrap();
        let q = JointDistribution::from_vec(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(variational_distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(variational_distance(&p, &p).unwrap(), 0.0);
        let a = JointDistribution::from_vec(vec![1.0, 0.0]).unwrap();
        let b = JointDistribution::from_vec(vec![0.0, 1.0]).unwrap();
        assert_eq!(variational_distance(&a, &b).unwrap(), 2.0);
        let c = JointDistribution::uniform(vec![3]).unwrap();
        assert!(variational_distance(&a, &c).is_err());
    }
}
