//! Empirical types, type classes, and sequences.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::{strides, validate_axes, JointDistribution};
use crate::error::{Error, Result};

/// A length-`n` sequence over an alphabet of the given size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    alphabet: usize,
    symbols: Vec<usize>,
}

impl Sequence {
    pub fn new(alphabet: usize, symbols: Vec<usize>) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::SymbolOutOfRange { symbol: s, size: alphabet });
        }
        Ok(Self { alphabet, symbols })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The sequence's own type.
    pub fn type_of(&self) -> EmpiricalType {
        let mut counts = vec![0u64; self.alphabet];
        for &s in &self.symbols {
            counts[s] += 1;
        }
        EmpiricalType {
            dims: vec![self.alphabet],
            n: self.symbols.len() as u64,
            counts,
        }
    }
}

/// Integer count tensor of a joint type; `counts` sum to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawType", into = "RawType")]
pub struct EmpiricalType {
    dims: Vec<usize>,
    counts: Vec<u64>,
    n: u64,
}

#[derive(Serialize, Deserialize)]
struct RawType {
    axes: Vec<usize>,
    counts: Vec<u64>,
    n: u64,
}

impl TryFrom<RawType> for EmpiricalType {
    type Error = Error;
    fn try_from(raw: RawType) -> Result<Self> {
        let t = EmpiricalType::new(raw.axes, raw.counts)?;
        if t.n != raw.n {
            return Err(Error::InvalidDistribution(format!(
                "counts sum to {} but n = {}",
                t.n, raw.n
            )));
        }
        Ok(t)
    }
}

impl From<EmpiricalType> for RawType {
    fn from(t: EmpiricalType) -> Self {
        RawType {
            axes: t.dims,
            counts: t.counts,
            n: t.n,
        }
    }
}

impl EmpiricalType {
    pub fn new(dims: Vec<usize>, counts: Vec<u64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) || counts.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "axes {:?} with {} counts",
                dims,
                counts.len()
            )));
        }
        let n = counts.iter().sum();
        Ok(Self { dims, counts, n })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn to_distribution(&self) -> JointDistribution {
        let n = self.n.max(1) as f64;
        JointDistribution::from_parts_unchecked(
            self.dims.clone(),
            self.counts.iter().map(|&c| c as f64 / n).collect(),
        )
    }

    /// Marginal counts over `axes`, in the given order.
    pub fn marginal(&self, axes: &[usize]) -> Result<EmpiricalType> {
        validate_axes(self.dims.len(), &[axes])?;
        let kept: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let ks = strides(&kept);
        let fs = strides(&self.dims);
        let mut counts = vec![0u64; kept.iter().product()];
        for (cell, &c) in self.counts.iter().enumerate() {
            let mut m = 0;
            for (slot, &axis) in axes.iter().enumerate() {
                m += ((cell / fs[axis]) % self.dims[axis]) * ks[slot];
            }
            counts[m] += c;
        }
        let dims = if axes.is_empty() { vec![1] } else { kept };
        Ok(EmpiricalType { dims, counts, n: self.n })
    }
}

/// Lexicographic successor of a composition of `n` (ascending order).
fn next_composition(c: &mut [u64]) -> bool {
    let k = c.len();
    if k < 2 {
        return false;
    }
    let mut tail = c[k - 1];
    for i in (0..k - 1).rev() {
        if tail > 0 {
            c[i] += 1;
            for v in c[i + 1..].iter_mut() {
                *v = 0;
            }
            c[k - 1] = tail - 1;
            return true;
        }
        tail += c[i];
    }
    false
}

fn compositions(n: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut c = vec![0u64; parts];
    c[parts - 1] = n;
    let mut out = vec![c.clone()];
    while next_composition(&mut c) {
        out.push(c.clone());
    }
    out
}

/// All types of length-`n` sequences over an alphabet of `size` symbols,
/// lexicographically ordered by counts.
pub fn enumerate_types(size: usize, n: u64) -> Result<Vec<EmpiricalType>> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    if size == 0 {
        return Err(Error::InvalidArgument("empty alphabet".into()));
    }
    Ok(compositions(n, size)
        .into_iter()
        .map(|counts| EmpiricalType { dims: vec![size], counts, n })
        .collect())
}

/// All joint types on `U x X` whose `U`-marginal equals `base`
/// (the conditional types `P^n(X | P_u)`), in lexicographic order of the
/// flattened count tensor.
pub fn enumerate_conditional_types(x_size: usize, base: &EmpiricalType) -> Result<Vec<EmpiricalType>> {
    if base.dims.len() != 1 {
        return Err(Error::DimensionMismatch("base type must be one-dimensional".into()));
    }
    if base.n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    let per_u: Vec<Vec<Vec<u64>>> = base.counts.iter().map(|&nu| compositions(nu, x_size)).collect();
    let mut idx = vec![0usize; per_u.len()];
    let mut out = Vec::new();
    loop {
        let counts: Vec<u64> = idx
            .iter()
            .enumerate()
            .flat_map(|(u, &k)| per_u[u][k].iter().copied())
            .collect();
        out.push(EmpiricalType {
            dims: vec![base.dims[0], x_size],
            counts,
            n: base.n,
        });
        // odometer with the first axis most significant
        let mut pos = per_u.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < per_u[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exact multinomial coefficient `(sum c)! / prod c!`.
pub fn multinomial(counts: &[u64]) -> BigUint {
    let mut result = BigUint::one();
    let mut total: u64 = 0;
    for &c in counts {
        // multiply by C(total + c, c) incrementally; each prefix stays integral
        for k in 1..=c {
            total += 1;
            result *= total;
            result /= k;
        }
    }
    result
}

fn multinomial_u128(counts: &[u64]) -> Option<u128> {
    let mut result: u128 = 1;
    let mut total: u128 = 0;
    for &c in counts {
        for k in 1..=c as u128 {
            total += 1;
            result = result.checked_mul(total)? / k;
        }
    }
    Some(result)
}

/// Exact size `|T_P|` of a type class.
pub fn type_class_size(t: &EmpiricalType) -> BigUint {
    multinomial(&t.counts)
}

/// Exact size of the conditional type class `T_{V_{X|U}}(u)` for a joint type
/// whose leading `cond_axes` axes are the conditioning variables.
pub fn conditional_type_class_size(t: &EmpiricalType, cond_axes: usize) -> Result<BigUint> {
    if cond_axes > t.dims.len() {
        return Err(Error::AxisOutOfRange { axis: cond_axes, rank: t.dims.len() });
    }
    let inner: usize = t.dims[cond_axes..].iter().product();
    let mut size = BigUint::one();
    for row in t.counts.chunks(inner) {
        size *= multinomial(row);
    }
    Ok(size)
}

fn log2_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

/// `log2` of a big integer; exact conversion up to 512 bits.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 512 {
        x.to_f64().map(f64::log2).unwrap_or(f64::NEG_INFINITY)
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().unwrap_or(0.0);
        top.log2() + shift as f64
    }
}

/// `log2 |T_P|`; exact below 512 bits, log-factorial sums above.
pub fn log2_type_class_size(t: &EmpiricalType) -> f64 {
    let size = type_class_size(t);
    if size.bits() <= 512 {
        log2_big(&size)
    } else {
        log2_factorial(t.n) - t.counts.iter().map(|&c| log2_factorial(c)).sum::<f64>()
    }
}

/// Joint type of equal-length sequences; axes follow the argument order.
pub fn joint_type_of(seqs: &[&Sequence]) -> Result<EmpiricalType> {
    let first = seqs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no sequences".into()))?;
    let n = first.len();
    for s in seqs {
        if s.len() != n {
            return Err(Error::LengthMismatch(n, s.len()));
        }
    }
    let dims: Vec<usize> = seqs.iter().map(|s| s.alphabet).collect();
    let st = strides(&dims);
    let mut counts = vec![0u64; dims.iter().product()];
    for t in 0..n {
        let cell: usize = seqs.iter().zip(&st).map(|(s, &w)| s.symbols[t] * w).sum();
        counts[cell] += 1;
    }
    Ok(EmpiricalType { dims, counts, n: n as u64 })
}

/// Lexicographically smallest member of the type class of `counts`.
pub fn smallest_member(counts: &[u64]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat(s).take(c as usize))
        .collect()
}

/// In-place lexicographic successor of a multiset permutation.
pub fn next_permutation(seq: &mut [usize]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// Every member of `T_P`, in lexicographic order.
pub fn type_class_members(counts: &[u64]) -> Vec<Vec<usize>> {
    let mut cur = smallest_member(counts);
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

/// Uniform draw from `T_P`.
pub fn sample_type_class_member<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<usize> {
    let mut seq = smallest_member(counts);
    seq.shuffle(rng);
    seq
}

/// Checks that `joint` (over `U x X`) has `u`'s type as its `U` marginal.
fn check_conditional(u: &Sequence, joint: &EmpiricalType) -> Result<usize> {
    if joint.dims.len() != 2 || joint.dims[0] != u.alphabet {
        return Err(Error::DimensionMismatch(format!(
            "joint type axes {:?} vs u alphabet {}",
            joint.dims, u.alphabet
        )));
    }
    if joint.n as usize != u.len() || joint.marginal(&[0])?.counts != u.type_of().counts {
        return Err(Error::InvalidArgument("joint type is not consistent with the type of u".into()));
    }
    Ok(joint.dims[1])
}

/// Uniform draw from `T_{V_{X|U}}(u)`.
pub fn sample_conditional_member<R: Rng + ?Sized>(
    u: &Sequence,
    joint: &EmpiricalType,
    rng: &mut R,
) -> Result<Sequence> {
    let xs = check_conditional(u, joint)?;
    let mut x = vec![0usize; u.len()];
    for a in 0..u.alphabet {
        let row = &joint.counts[a * xs..(a + 1) * xs];
        let block = sample_type_class_member(row, rng);
        let positions = u.symbols.iter().enumerate().filter(|(_, &s)| s == a).map(|(t, _)| t);
        for (t, s) in positions.zip(block) {
            x[t] = s;
        }
    }
    Sequence::new(xs, x)
}

/// Every member of `T_{V_{X|U}}(u)`, in lexicographic order of the sequence.
pub fn conditional_class_members(u: &Sequence, joint: &EmpiricalType) -> Result<Vec<Sequence>> {
    let xs = check_conditional(u, joint)?;
    let positions: Vec<Vec<usize>> = (0..u.alphabet)
        .map(|a| u.symbols.iter().enumerate().filter(|(_, &s)| s == a).map(|(t, _)| t).collect())
        .collect();
    let blocks: Vec<Vec<Vec<usize>>> = (0..u.alphabet)
        .map(|a| type_class_members(&joint.counts[a * xs..(a + 1) * xs]))
        .collect();
    let mut idx = vec![0usize; blocks.len()];
    let mut out = Vec::new();
    loop {
        let mut x = vec![0usize; u.len()];
        for (a, &k) in idx.iter().enumerate() {
            for (&t, &s) in positions[a].iter().zip(&blocks[a][k]) {
                x[t] = s;
            }
        }
        out.push(Sequence { alphabet: xs, symbols: x });
        let mut pos = blocks.len();
        loop {
            if pos == 0 {
                out.sort_by(|p, q| p.symbols.cmp(&q.symbols));
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < blocks[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Position of `seq` in the lexicographic listing of its own type class.
pub fn rank_in_class(seq: &Sequence) -> Result<u128> {
    let mut counts = seq.type_of().counts;
    let mut rank: u128 = 0;
    for &s in &seq.symbols {
        for smaller in 0..s {
            if counts[smaller] > 0 {
                counts[smaller] -= 1;
                rank += multinomial_u128(&counts).ok_or_else(|| Error::Overflow("class rank".into()))?;
                counts[smaller] += 1;
            }
        }
        counts[s] -= 1;
    }
    Ok(rank)
}

/// Inverse of [`rank_in_class`] for the type class with the given counts.
pub fn unrank_in_class(counts: &[u64], mut rank: u128) -> Result<Sequence> {
    let total = multinomial_u128(counts).ok_or_else(|| Error::Overflow("class size".into()))?;
    if rank >= total {
        return Err(Error::InvalidArgument(format!("rank {rank} outside class of size {total}")));
    }
    let mut counts = counts.to_vec();
    let n: u64 = counts.iter().sum();
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        for s in 0..counts.len() {
            if counts[s] == 0 {
                continue;
            }
            counts[s] -= 1;
            let block = multinomial_u128(&counts).ok_or_else(|| Error::Overflow("class rank".into()))?;
            if rank < block {
                out.push(s);
                break;
            }
            rank -= block;
            counts[s] += 1;
        }
    }
    Sequence::new(counts.len(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typekit::measures::entropy_of;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn type_counts_match_stars_and_bars() {
        assert_eq!(enumerate_types(2, 4).unwrap().len(), 5);
        assert_eq!(enumerate_types(1, 7).unwrap().len(), 1);
        assert_eq!(enumerate_types(3, 3).unwrap().len(), 10);
        assert!(enumerate_types(2, 0).is_err());
    }

    #[test]
    fn types_are_lexicographic_and_distinct() {
        let ts = enumerate_types(3, 5).unwrap();
        for w in ts.windows(2) {
            assert!(w[0].counts < w[1].counts);
        }
        assert!(ts.iter().all(|t| t.counts.iter().sum::<u64>() == 5));
    }

    #[test]
    fn conditional_types_respect_base() {
        let base = EmpiricalType::new(vec![2], vec![2, 3]).unwrap();
        let ts = enumerate_conditional_types(2, &base).unwrap();
        assert_eq!(ts.len(), 3 * 4);
        for t in &ts {
            assert_eq!(t.marginal(&[0]).unwrap().counts, vec![2, 3]);
        }
        for w in ts.windows(2) {
            assert!(w[0].counts < w[1].counts);
        }
    }

    #[test]
    fn class_size_examples() {
        let t = |c: Vec<u64>| EmpiricalType::new(vec![c.len()], c).unwrap();
        assert_eq!(type_class_size(&t(vec![2, 2])), BigUint::from(6u32));
        assert_eq!(type_class_size(&t(vec![0, 5])), BigUint::from(1u32));
        assert_eq!(type_class_size(&t(vec![2, 6])), BigUint::from(28u32));
        let joint = EmpiricalType::new(vec![2, 2], vec![1, 1, 2, 1]).unwrap();
        assert_eq!(conditional_type_class_size(&joint, 1).unwrap(), BigUint::from(6u32));
    }

    #[test]
    fn sandwich_bounds_hold_exhaustively() {
        for size in 1..=3usize {
            for n in 1..=12u64 {
                for t in enumerate_types(size, n).unwrap() {
                    let exact = log2_type_class_size(&t);
                    let h = entropy_of(&t.to_distribution().probs().to_vec());
                    let upper = n as f64 * h;
                    let lower = upper - size as f64 * ((n + 1) as f64).log2();
                    assert!(exact <= upper + 1e-9, "{:?}", t);
                    assert!(exact >= lower - 1e-9, "{:?}", t);
                }
            }
        }
    }

    #[test]
    fn joint_type_examples() {
        let x = Sequence::new(2, vec![0, 1, 1, 0, 1]).unwrap();
        let d = joint_type_of(&[&x, &x]).unwrap();
        assert_eq!(d.counts(), &[2, 0, 0, 3]);
        let c = Sequence::new(3, vec![2; 4]).unwrap();
        let k = Sequence::new(2, vec![1; 4]).unwrap();
        assert_eq!(joint_type_of(&[&c, &k]).unwrap().counts(), &[0, 0, 0, 0, 0, 4]);
        let short = Sequence::new(2, vec![0]).unwrap();
        assert!(matches!(joint_type_of(&[&x, &short]), Err(Error::LengthMismatch(5, 1))));
    }

    #[test]
    fn members_enumerate_the_class() {
        let members = type_class_members(&[2, 1, 1]);
        assert_eq!(members.len(), 12);
        for w in members.windows(2) {
            assert!(w[0] < w[1]);
        }
        let u = Sequence::new(2, vec![0, 0, 1, 1, 1]).unwrap();
        let joint = EmpiricalType::new(vec![2, 2], vec![1, 1, 1, 2]).unwrap();
        let cm = conditional_class_members(&u, &joint).unwrap();
        assert_eq!(cm.len(), 6);
        for x in &cm {
            assert_eq!(joint_type_of(&[&u, x]).unwrap(), joint);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x = sample_conditional_member(&u, &joint, &mut rng).unwrap();
        assert!(cm.contains(&x));
    }

    #[test]
    fn rank_unrank_walks_the_class_in_order() {
        let counts = [2u64, 2, 1];
        for (r, m) in type_class_members(&counts).into_iter().enumerate() {
            let s = Sequence::new(3, m).unwrap();
            assert_eq!(rank_in_class(&s).unwrap(), r as u128);
            assert_eq!(unrank_in_class(&counts, r as u128).unwrap(), s);
        }
        assert!(unrank_in_class(&counts, 30).is_err());
    }

    #[test]
    fn serde_round_trip_of_counts_is_exact() {
        let t = EmpiricalType::new(vec![2, 3], vec![1, 0, 2, 3, 1, 1]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"axes":[2,3],"counts":[1,0,2,3,1,1],"n":8}"#);
        let back: EmpiricalType = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<EmpiricalType>(r#"{"axes":[2],"counts":[1,1],"n":3}"#).is_err());
    }

    proptest! {
        #[test]
        fn joint_type_marginals_match_own_types(
            xs in proptest::collection::vec(0usize..3, 1..20),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let ys: Vec<usize> = xs.iter().map(|_| rng.random_range(0..2)).collect();
            let x = Sequence::new(3, xs).unwrap();
            let y = Sequence::new(2, ys).unwrap();
            let j = joint_type_of(&[&x, &y]).unwrap();
            prop_assert_eq!(j.n(), x.len() as u64);
            prop_assert_eq!(j.marginal(&[0]).unwrap().counts().to_vec(), x.type_of().counts().to_vec());
            prop_assert_eq!(j.marginal(&[1]).unwrap().counts().to_vec(), y.type_of().counts().to_vec());
        }
    }
}
