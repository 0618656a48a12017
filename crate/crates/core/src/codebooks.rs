//! Constant-composition codebook libraries, their packing counts and the
//! resample-until-packed construction.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_guard, Error, Result};
use crate::mac::InputStructure;
use crate::typekit::{
    conditional_type_class_size, log2_big, multinomial, smallest_member, unrank_in_class, EmpiricalType, Kernel, LogTable,
    Sequence,
};

/// Tuple evaluations allowed in one packing audit.
pub const AUDIT_GUARD: f64 = 1e7;

/// `floor(2^{nR})`, snapped to the nearest integer when within a relative
/// `1e-9` of it so that `R = log2(N) / n` round-trips.
pub fn codebook_size(n: usize, rate: f64) -> u128 {
    let v = (n as f64 * rate).exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as u128
    } else {
        v.floor() as u128
    }
}

/// Rate whose codebook holds exactly `count` codewords.
pub fn rate_for_count(n: usize, count: u128) -> f64 {
    (count as f64).log2() / n as f64
}

/// Counts summing to `n` nearest to `n p` by largest remainders; ties go to
/// the lower index.
pub fn type_near(p: &[f64], n: u64) -> Vec<u64> {
    let scaled: Vec<f64> = p.iter().map(|&v| v * n as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Joint `U × X` type whose rows approximate `kernel` on a `u` type.
pub fn conditional_type_near(u_counts: &[u64], kernel: &Kernel) -> Result<EmpiricalType> {
    if kernel.rows() != u_counts.len() {
        return Err(Error::DimensionMismatch(format!("{} kernel rows for {} auxiliary symbols", kernel.rows(), u_counts.len())));
    }
    let counts: Vec<u64> = u_counts.iter().enumerate().flat_map(|(u, &c)| type_near(kernel.row(u), c)).collect();
    EmpiricalType::new(vec![u_counts.len(), kernel.cols()], counts)
}

/// Parameters of a constant-composition codebook library pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryParams {
    pub n: usize,
    /// Type of the auxiliary sequence.
    pub u_type: EmpiricalType,
    /// Joint `U × X` types fixing each `A^i`'s conditional composition.
    pub x_types: Vec<EmpiricalType>,
    pub y_types: Vec<EmpiricalType>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Draw codewords independently with replacement instead of distinct.
    #[serde(default)]
    pub iid: bool,
    /// Per-codebook labels. When present, each codebook is drawn from its
    /// own stream keyed by `(seed, sender, label, composition, size)`, so
    /// codebooks agreeing in all five are identical.
    #[serde(default)]
    pub draw_keys: Option<DrawKeys>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawKeys {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

impl LibraryParams {
    pub fn new(
        n: usize,
        u_type: EmpiricalType,
        x_types: Vec<EmpiricalType>,
        y_types: Vec<EmpiricalType>,
        r1: Vec<f64>,
        r2: Vec<f64>,
    ) -> Result<Self> {
        let p = Self { n, u_type, x_types, y_types, r1, r2, iid: false, draw_keys: None };
        p.validate()?;
        Ok(p)
    }

    /// Rounds `P_U` and the kernels to types of length `n`.
    pub fn from_kernels(n: usize, p_u: &[f64], x: &[Kernel], y: &[Kernel], r1: Vec<f64>, r2: Vec<f64>) -> Result<Self> {
        let u_counts = type_near(p_u, n as u64);
        let u_type = EmpiricalType::new(vec![p_u.len()], u_counts.clone())?;
        let x_types = x.iter().map(|k| conditional_type_near(&u_counts, k)).collect::<Result<_>>()?;
        let y_types = y.iter().map(|k| conditional_type_near(&u_counts, k)).collect::<Result<_>>()?;
        Self::new(n, u_type, x_types, y_types, r1, r2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("blocklength must be positive".into()));
        }
        if self.u_type.dims().len() != 1 || self.u_type.n() != self.n as u64 {
            return Err(Error::InvalidArgument("u type must be one-dimensional with n observations".into()));
        }
        if self.x_types.is_empty() || self.y_types.is_empty() {
            return Err(Error::InvalidArgument("each sender needs at least one codebook".into()));
        }
        if self.x_types.len() != self.r1.len() {
            return Err(Error::LengthMismatch(self.x_types.len(), self.r1.len()));
        }
        if self.y_types.len() != self.r2.len() {
            return Err(Error::LengthMismatch(self.y_types.len(), self.r2.len()));
        }
        for t in self.x_types.iter().chain(&self.y_types) {
            if t.dims().len() != 2 || t.dims()[0] != self.u_size() || t.marginal(&[0])?.counts() != self.u_type.counts() {
                return Err(Error::InvalidArgument("codebook composition is not a conditional type on the u type".into()));
            }
        }
        if self.x_types.iter().any(|t| t.dims()[1] != self.x_size()) || self.y_types.iter().any(|t| t.dims()[1] != self.y_size()) {
            return Err(Error::DimensionMismatch("codebook alphabets differ within a sender".into()));
        }
        if self.r1.iter().chain(&self.r2).any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument("rates must be finite and nonnegative".into()));
        }
        if let Some(k) = &self.draw_keys {
            if k.x.len() != self.x_types.len() || k.y.len() != self.y_types.len() {
                return Err(Error::InvalidArgument("one draw key per codebook is required".into()));
            }
        }
        if !self.iid {
            for (t, &r) in self.x_types.iter().zip(&self.r1).chain(self.y_types.iter().zip(&self.r2)) {
                let size = conditional_type_class_size(t, 1)?;
                let want = codebook_size(self.n, r);
                if BigUint::from(want) > size {
                    return Err(Error::TypeClassTooSmall { requested: want, class_size: size.to_string() });
                }
            }
        }
        Ok(())
    }

    pub fn u_size(&self) -> usize {
        self.u_type.dims()[0]
    }

    pub fn x_size(&self) -> usize {
        self.x_types[0].dims()[1]
    }

    pub fn y_size(&self) -> usize {
        self.y_types[0].dims()[1]
    }

    pub fn m1(&self) -> usize {
        self.x_types.len()
    }

    pub fn m2(&self) -> usize {
        self.y_types.len()
    }

    pub fn n1(&self, i: usize) -> u128 {
        codebook_size(self.n, self.r1[i])
    }

    pub fn n2(&self, j: usize) -> u128 {
        codebook_size(self.n, self.r2[j])
    }

    /// `(P_U, P^i_{X|U}, P^j_{Y|U})` as distributions.
    pub fn structure(&self, i: usize, j: usize) -> Result<InputStructure> {
        let p_u = self.u_type.to_distribution().probs().to_vec();
        let kernel = |t: &EmpiricalType| -> Result<Kernel> {
            let cols = t.dims()[1];
            let rows: Vec<Vec<f64>> = t
                .counts()
                .chunks(cols)
                .map(|row| {
                    let s: u64 = row.iter().sum();
                    if s == 0 {
                        vec![1.0 / cols as f64; cols]
                    } else {
                        row.iter().map(|&c| c as f64 / s as f64).collect()
                    }
                })
                .collect();
            Kernel::from_rows(rows)
        };
        InputStructure::new(p_u, kernel(&self.x_types[i])?, kernel(&self.y_types[j])?)
    }
}

/// Codebook library pair `(A, B)` on a common auxiliary sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookLibraryPair {
    pub params: LibraryParams,
    pub u: Sequence,
    pub a: Vec<Vec<Sequence>>,
    pub b: Vec<Vec<Sequence>>,
}

impl CodebookLibraryPair {
    /// Codebooks that hold their entire conditional type class.
    pub fn whole_class_codebooks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (sender, types, books) in [(1, &self.params.x_types, &self.a), (2, &self.params.y_types, &self.b)] {
            for (i, (t, book)) in types.iter().zip(books).enumerate() {
                if let Ok(size) = conditional_type_class_size(t, 1) {
                    if BigUint::from(book.len()) == size {
                        out.push((sender, i));
                    }
                }
            }
        }
        out
    }
}

/// Member of `T_{V_{X|U}}(u)` at a mixed-radix rank over the per-symbol blocks.
fn unrank_conditional(u: &Sequence, joint: &EmpiricalType, mut rank: u128) -> Result<Sequence> {
    let xs = joint.dims()[1];
    let mut x = vec![0usize; u.len()];
    for a in (0..u.alphabet()).rev() {
        let row = &joint.counts()[a * xs..(a + 1) * xs];
        let size = multinomial(row).to_u128().ok_or_else(|| Error::Overflow("conditional class size".into()))?;
        let block = unrank_in_class(row, rank % size)?;
        rank /= size;
        let positions = u.symbols().iter().enumerate().filter(|(_, &s)| s == a).map(|(t, _)| t);
        for (t, &s) in positions.zip(block.symbols()) {
            x[t] = s;
        }
    }
    Sequence::new(xs, x)
}

fn draw_codebook(u: &Sequence, joint: &EmpiricalType, count: u128, iid: bool, rng: &mut ChaCha20Rng) -> Result<Vec<Sequence>> {
    let size_big = conditional_type_class_size(joint, 1)?;
    let size = size_big.to_u128().ok_or_else(|| Error::Overflow("conditional class size".into()))?;
    let ranks: Vec<u128> = if iid {
        (0..count).map(|_| rng.random_range(0..size)).collect()
    } else if let (Ok(len), Ok(amount)) = (usize::try_from(size), usize::try_from(count)) {
        rand::seq::index::sample(rng, len, amount).into_iter().map(|r| r as u128).collect()
    } else {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        while (out.len() as u128) < count {
            let r = rng.random_range(0..size);
            if seen.insert(r) {
                out.push(r);
            }
        }
        out
    };
    ranks.into_iter().map(|r| unrank_conditional(u, joint, r)).collect()
}

/// `true` when `f` is a letterwise function of the pair `(g, h)`.
fn is_function_of(f: &Sequence, g: &Sequence, h: &Sequence) -> bool {
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    f.symbols()
        .iter()
        .zip(g.symbols().iter().zip(h.symbols()))
        .all(|(&v, (&a, &b))| *map.entry((a, b)).or_insert(v) == v)
}

/// No codeword is a letterwise function of a different codeword of its own
/// sender together with any codeword of the other sender.
///
/// Over the noiseless pair channel this is exactly the condition under
/// which every transmitted pair is the unique stage-1 maximizer.
pub fn is_well_separated(lib: &CodebookLibraryPair) -> bool {
    let xs: Vec<&Sequence> = lib.a.iter().flatten().collect();
    let ys: Vec<&Sequence> = lib.b.iter().flatten().collect();
    let clash = |own: &[&Sequence], other: &[&Sequence]| {
        own.iter().enumerate().any(|(p, f)| {
            own.iter().enumerate().any(|(q, g)| p != q && other.iter().any(|h| is_function_of(f, g, h)))
        })
    };
    !clash(&xs, &ys) && !clash(&ys, &xs)
}

/// First well-separated library among seeds `seed, seed + 1, ...`.
pub fn build_separated_library(params: &LibraryParams, max_tries: usize, seed: u64) -> Result<CodebookLibraryPair> {
    for t in 0..max_tries {
        let lib = build_library(params, seed.wrapping_add(t as u64))?;
        if is_well_separated(&lib) {
            return Ok(lib);
        }
    }
    Err(Error::Precondition(format!("no well-separated library within {max_tries} draws")))
}

/// Draws every codebook uniformly from its conditional type class, with `u`
/// the lexicographically smallest member of the `u` type class.
pub fn build_library(params: &LibraryParams, seed: u64) -> Result<CodebookLibraryPair> {
    params.validate()?;
    let u = Sequence::new(params.u_size(), smallest_member(params.u_type.counts()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = |sender: u64, label: Option<u64>, t: &EmpiricalType, count: u128| {
        if let Some(label) = label {
            let mut keyed = ChaCha20Rng::seed_from_u64(codebook_key(seed, sender, label, t, count));
            draw_codebook(&u, t, count, params.iid, &mut keyed)
        } else {
            draw_codebook(&u, t, count, params.iid, &mut rng)
        }
    };
    let keys = params.draw_keys.as_ref();
    let a = (0..params.m1())
        .map(|i| draw(1, keys.map(|k| k.x[i]), &params.x_types[i], params.n1(i)))
        .collect::<Result<_>>()?;
    let b = (0..params.m2())
        .map(|j| draw(2, keys.map(|k| k.y[j]), &params.y_types[j], params.n2(j)))
        .collect::<Result<_>>()?;
    Ok(CodebookLibraryPair { params: params.clone(), u, a, b })
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn codebook_key(seed: u64, sender: u64, label: u64, t: &EmpiricalType, count: u128) -> u64 {
    let words = [sender, label, count as u64, (count >> 64) as u64].into_iter().chain(t.counts().iter().copied());
    words.fold(splitmix(seed), |h, w| splitmix(h ^ w))
}

/// The four packing counts for one joint type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingCounts {
    /// `K^{i,j}[V_{UXY}]`.
    pub k: u64,
    /// `K^{i,j}_k[V_{UXX̃Y}]`.
    pub k_x: u64,
    /// `K^{i,j}_l[V_{UXYỸ}]`.
    pub k_y: u64,
    /// `K^{i,j}_{k,l}[V_{UXX̃YỸ}]`.
    pub k_xy: u64,
}

fn tuple_matches(target: &EmpiricalType, seqs: &[&Sequence]) -> bool {
    let dims = target.dims();
    let mut counts = vec![0u64; target.counts().len()];
    for t in 0..seqs[0].len() {
        let mut cell = 0;
        for (s, &d) in seqs.iter().zip(dims) {
            cell = cell * d + s.symbols()[t];
        }
        counts[cell] += 1;
    }
    counts == target.counts()
}

/// Exact packing counts for `v` over `U × X × X̃ × Y × Ỹ`, with the
/// same-codebook diagonal left out.
pub fn packing_functions(
    lib: &CodebookLibraryPair,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    v: &EmpiricalType,
) -> Result<PackingCounts> {
    let p = &lib.params;
    let want = [p.u_size(), p.x_size(), p.x_size(), p.y_size(), p.y_size()];
    if v.dims() != want {
        return Err(Error::DimensionMismatch(format!("joint type axes {:?}, expected {:?}", v.dims(), want)));
    }
    if i >= p.m1() || k >= p.m1() || j >= p.m2() || l >= p.m2() {
        return Err(Error::InvalidArgument("codebook index out of range".into()));
    }
    let v_uxy = v.marginal(&[0, 1, 3])?;
    let v_uxxy = v.marginal(&[0, 1, 2, 3])?;
    let v_uxyy = v.marginal(&[0, 1, 3, 4])?;
    let u = &lib.u;
    let mut out = PackingCounts { k: 0, k_x: 0, k_y: 0, k_xy: 0 };
    for (a, x) in lib.a[i].iter().enumerate() {
        for (b, y) in lib.b[j].iter().enumerate() {
            out.k += tuple_matches(&v_uxy, &[u, x, y]) as u64;
            for (c, xt) in lib.a[k].iter().enumerate() {
                if i == k && c == a {
                    continue;
                }
                out.k_x += tuple_matches(&v_uxxy, &[u, x, xt, y]) as u64;
                for (d, yt) in lib.b[l].iter().enumerate() {
                    if j == l && d == b {
                        continue;
                    }
                    out.k_xy += tuple_matches(v, &[u, x, xt, y, yt]) as u64;
                }
            }
            for (d, yt) in lib.b[l].iter().enumerate() {
                if j == l && d == b {
                    continue;
                }
                out.k_y += tuple_matches(&v_uxyy, &[u, x, y, yt]) as u64;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PackingFamily {
    /// `K^{i,j}` against `I(X ∧ Y | U) - R1^i - R2^j`.
    Pair,
    /// `K^{i,j}_k` against `I(X ∧ X̃ ∧ Y | U) - R1^i - R2^j - R1^k`.
    ExtraX,
    /// `K^{i,j}_l` against `I(X ∧ Y ∧ Ỹ | U) - R1^i - R2^j - R2^l`.
    ExtraY,
    /// `K^{i,j}_{k,l}` against `I(X ∧ X̃ ∧ Y ∧ Ỹ | U)` minus all four rates.
    ExtraBoth,
}

impl PackingFamily {
    pub const ALL: [PackingFamily; 4] = [Self::Pair, Self::ExtraX, Self::ExtraY, Self::ExtraBoth];
}

/// Worst case of one inequality family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: PackingFamily,
    /// `min (δ' - log2(K)/n - I + rates)` over realized joint types, bits.
    pub worst_slack: f64,
    /// Codebook indices `(i, j, k, l)` of the worst case (unused slots 0).
    pub worst_indices: [usize; 4],
    /// `log2` of this family's contribution to `S`.
    pub log2_s: f64,
    pub tuples: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingAuditReport {
    pub families: Vec<FamilyReport>,
    /// `log2 S`, `S` the sum of all scaled packing expressions.
    pub log2_s: f64,
    /// δ' used for the bounds.
    pub delta_prime: f64,
    /// `log2` of the expectation bound on `S` for the random ensemble.
    pub log2_expectation_bound: f64,
    pub passes: bool,
}

/// Upper estimate of `E[S]`: index tuples × joint types × the polynomial
/// type-counting factor.
pub fn log2_expectation_bound(p: &LibraryParams) -> f64 {
    let (u, x, y) = (p.u_size() as u64, p.x_size() as u64, p.y_size() as u64);
    let (m1, m2) = (p.m1() as u64, p.m2() as u64);
    let n = p.n as u64;
    let types = |cells: u64| -> BigUint {
        // C(n + cells - 1, cells - 1)
        multinomial(&[n, cells - 1])
    };
    let total: BigUint = BigUint::from(m1 * m2) * types(u * x * y)
        + BigUint::from(m1 * m1 * m2) * types(u * x * x * y)
        + BigUint::from(m1 * m2 * m2) * types(u * x * y * y)
        + BigUint::from(m1 * m1 * m2 * m2) * types(u * x * x * y * y);
    log2_big(&total) + (2 * u * (x + y)) as f64 * ((n + 1) as f64).log2()
}

fn tuple_budget(p: &LibraryParams) -> f64 {
    let s1: f64 = (0..p.m1()).map(|i| p.n1(i) as f64).sum();
    let s2: f64 = (0..p.m2()).map(|j| p.n2(j) as f64).sum();
    s1 * s2 * (1.0 + s1 + s2 + s1 * s2)
}

struct FamilyAcc {
    family: PackingFamily,
    hist: HashMap<(Vec<usize>, Vec<u16>), u64>,
    tuples: u64,
}

/// Exhaustive audit with δ' realized from `S`.
pub fn audit_packing(lib: &CodebookLibraryPair) -> Result<PackingAuditReport> {
    audit(lib, None)
}

/// Exhaustive audit of the four bounds at a prescribed δ'.
pub fn audit_packing_at(lib: &CodebookLibraryPair, delta_prime: f64) -> Result<PackingAuditReport> {
    audit(lib, Some(delta_prime))
}

fn audit(lib: &CodebookLibraryPair, delta: Option<f64>) -> Result<PackingAuditReport> {
    let p = &lib.params;
    check_guard("packing audit tuples", tuple_budget(p), AUDIT_GUARD)?;
    let n = p.n;
    let (us, xs, ys) = (p.u_size(), p.x_size(), p.y_size());
    let u = lib.u.symbols();
    let mut accs: Vec<FamilyAcc> =
        PackingFamily::ALL.iter().map(|&family| FamilyAcc { family, hist: HashMap::new(), tuples: 0 }).collect();
    let count = |seqs: &[&[usize]], dims: &[usize]| -> Vec<u16> {
        let cells: usize = dims.iter().product();
        let mut c = vec![0u16; cells];
        for t in 0..n {
            let mut cell = 0;
            for (s, &d) in seqs.iter().zip(dims) {
                cell = cell * d + s[t];
            }
            c[cell] += 1;
        }
        c
    };
    let d1 = [us, xs, ys];
    let d2 = [us, xs, xs, ys];
    let d3 = [us, xs, ys, ys];
    let d4 = [us, xs, xs, ys, ys];
    for i in 0..p.m1() {
        for j in 0..p.m2() {
            for (a, x) in lib.a[i].iter().enumerate() {
                for (b, y) in lib.b[j].iter().enumerate() {
                    let (x, y) = (x.symbols(), y.symbols());
                    *accs[0].hist.entry((vec![i, j], count(&[u, x, y], &d1))).or_default() += 1;
                    accs[0].tuples += 1;
                    for k in 0..p.m1() {
                        for (c, xt) in lib.a[k].iter().enumerate() {
                            if i == k && c == a {
                                continue;
                            }
                            let xt = xt.symbols();
                            *accs[1].hist.entry((vec![i, j, k], count(&[u, x, xt, y], &d2))).or_default() += 1;
                            accs[1].tuples += 1;
                            for l in 0..p.m2() {
                                for (d, yt) in lib.b[l].iter().enumerate() {
                                    if j == l && d == b {
                                        continue;
                                    }
                                    let yt = yt.symbols();
                                    *accs[3].hist.entry((vec![i, j, k, l], count(&[u, x, xt, y, yt], &d4))).or_default() += 1;
                                    accs[3].tuples += 1;
                                }
                            }
                        }
                    }
                    for l in 0..p.m2() {
                        for (d, yt) in lib.b[l].iter().enumerate() {
                            if j == l && d == b {
                                continue;
                            }
                            *accs[2].hist.entry((vec![i, j, l], count(&[u, x, y, yt.symbols()], &d3))).or_default() += 1;
                            accs[2].tuples += 1;
                        }
                    }
                }
            }
        }
    }
    let table = LogTable::new(n);
    // exponent n (I - rates) for every realized (indices, type)
    let mut scored: Vec<(usize, [usize; 4], f64, f64)> = Vec::new();
    for (f, acc) in accs.iter().enumerate() {
        let dims: &[usize] = match acc.family {
            PackingFamily::Pair => &d1,
            PackingFamily::ExtraX => &d2,
            PackingFamily::ExtraY => &d3,
            PackingFamily::ExtraBoth => &d4,
        };
        let mut keys: Vec<_> = acc.hist.iter().collect();
        keys.sort();
        for ((idx, counts), &k) in keys {
            let c64: Vec<u64> = counts.iter().map(|&c| c as u64).collect();
            let n_info = table.n_conditional_multi_information(dims, &c64);
            let rates = match acc.family {
                PackingFamily::Pair => p.r1[idx[0]] + p.r2[idx[1]],
                PackingFamily::ExtraX => p.r1[idx[0]] + p.r2[idx[1]] + p.r1[idx[2]],
                PackingFamily::ExtraY => p.r1[idx[0]] + p.r2[idx[1]] + p.r2[idx[2]],
                PackingFamily::ExtraBoth => p.r1[idx[0]] + p.r2[idx[1]] + p.r1[idx[2]] + p.r2[idx[3]],
            };
            let mut ind = [0usize; 4];
            ind[..idx.len()].copy_from_slice(idx);
            if acc.family == PackingFamily::ExtraY {
                ind = [idx[0], idx[1], 0, idx[2]];
            }
            scored.push((f, ind, (k as f64).log2(), n_info - n as f64 * rates));
        }
    }
    let log_sum = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        let v: Vec<f64> = vals.collect();
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        top + v.iter().map(|x| (x - top).exp2()).sum::<f64>().log2()
    };
    let log2_s = log_sum(&mut scored.iter().map(|s| s.2 + s.3));
    let delta_prime = delta.unwrap_or((log2_s / n as f64).max(0.0));
    let mut families = Vec::new();
    for (f, acc) in accs.iter().enumerate() {
        let mut worst = (f64::INFINITY, [0usize; 4]);
        for s in scored.iter().filter(|s| s.0 == f) {
            let slack = delta_prime - (s.2 + s.3) / n as f64;
            if slack < worst.0 {
                worst = (slack, s.1);
            }
        }
        families.push(FamilyReport {
            family: acc.family,
            worst_slack: worst.0,
            worst_indices: worst.1,
            log2_s: log_sum(&mut scored.iter().filter(|s| s.0 == f).map(|s| s.2 + s.3)),
            tuples: acc.tuples,
        });
    }
    let passes = families.iter().all(|f| f.worst_slack >= -1e-12);
    Ok(PackingAuditReport { families, log2_s, delta_prime, log2_expectation_bound: log2_expectation_bound(p), passes })
}

/// Outcome of [`resample_until_packed`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackedLibrary {
    pub library: CodebookLibraryPair,
    pub report: PackingAuditReport,
    pub tries: usize,
}

/// Draws libraries until `S ≤ 2 E`-bound, i.e. `log2 S ≤ 1 + log2 E`.
pub fn resample_until_packed(params: &LibraryParams, max_tries: usize, seed: u64) -> Result<PackedLibrary> {
    resample_until(params, max_tries, seed, false)
}

/// As [`resample_until_packed`], additionally requiring [`is_well_separated`].
pub fn resample_until_packed_separated(params: &LibraryParams, max_tries: usize, seed: u64) -> Result<PackedLibrary> {
    resample_until(params, max_tries, seed, true)
}

fn resample_until(params: &LibraryParams, max_tries: usize, seed: u64, separated: bool) -> Result<PackedLibrary> {
    params.validate()?;
    check_guard("packing audit tuples", tuple_budget(params), AUDIT_GUARD)?;
    let target = 1.0 + log2_expectation_bound(params);
    let mut best = f64::INFINITY;
    for t in 0..max_tries {
        let library = build_library(params, seed.wrapping_add(t as u64))?;
        if separated && !is_well_separated(&library) {
            continue;
        }
        let report = audit_packing(&library)?;
        if report.log2_s <= target && report.passes {
            return Ok(PackedLibrary { library, report, tries: t + 1 });
        }
        best = best.min(report.log2_s);
    }
    Err(Error::PackingExhausted { tries: max_tries, best_log2_s: best, target_log2: target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typekit::{enumerate_conditional_types, enumerate_types, joint_type_of};

    fn binary_params(n: usize, m1: usize, m2: usize, rate: f64) -> LibraryParams {
        let u_type = EmpiricalType::new(vec![1], vec![n as u64]).unwrap();
        let half = EmpiricalType::new(vec![1, 2], vec![n as u64 / 2, n as u64 - n as u64 / 2]).unwrap();
        let quarter = EmpiricalType::new(vec![1, 2], vec![n as u64 / 4, n as u64 - n as u64 / 4]).unwrap();
        let xt = (0..m1).map(|i| if i % 2 == 0 { half.clone() } else { quarter.clone() }).collect();
        let yt = (0..m2).map(|j| if j % 2 == 0 { half.clone() } else { quarter.clone() }).collect();
        LibraryParams::new(n, u_type, xt, yt, vec![rate; m1], vec![rate; m2]).unwrap()
    }

    #[test]
    fn codebook_sizes_snap() {
        assert_eq!(codebook_size(6, rate_for_count(6, 20)), 20);
        assert_eq!(codebook_size(8, 0.0), 1);
        assert_eq!(codebook_size(4, 0.5), 4);
        assert_eq!(codebook_size(4, 0.49), 3);
        for c in 1..200u128 {
            assert_eq!(codebook_size(12, rate_for_count(12, c)), c);
        }
    }

    #[test]
    fn type_rounding() {
        assert_eq!(type_near(&[0.5, 0.5], 5), vec![3, 2]);
        assert_eq!(type_near(&[0.11, 0.89], 10), vec![1, 9]);
        let k = Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        let t = conditional_type_near(&[4, 4], &k).unwrap();
        assert_eq!(t.counts(), &[2, 2, 1, 3]);
    }

    #[test]
    fn codewords_have_the_prescribed_composition() {
        let u_type = EmpiricalType::new(vec![2], vec![3, 5]).unwrap();
        let xt = EmpiricalType::new(vec![2, 2], vec![1, 2, 2, 3]).unwrap();
        let yt = EmpiricalType::new(vec![2, 3], vec![1, 1, 1, 0, 2, 3]).unwrap();
        let p = LibraryParams::new(8, u_type, vec![xt.clone()], vec![yt.clone()], vec![0.5], vec![0.6]).unwrap();
        let lib = build_library(&p, 3).unwrap();
        assert_eq!(lib.u.symbols(), &[0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(lib.a[0].len() as u128, p.n1(0));
        for x in &lib.a[0] {
            assert_eq!(joint_type_of(&[&lib.u, x]).unwrap(), xt);
        }
        for y in &lib.b[0] {
            assert_eq!(joint_type_of(&[&lib.u, y]).unwrap(), yt);
        }
        let mut distinct = lib.b[0].clone();
        distinct.sort_by(|a, b| a.symbols().cmp(b.symbols()));
        distinct.dedup();
        assert_eq!(distinct.len(), lib.b[0].len());
        assert_eq!(build_library(&p, 3).unwrap(), lib);
    }

    #[test]
    fn keyed_draws_repeat_matching_codebooks() {
        let mut p = binary_params(8, 2, 2, 0.3);
        p.x_types[1] = p.x_types[0].clone();
        p.draw_keys = Some(DrawKeys { x: vec![7, 7], y: vec![7, 8] });
        let lib = build_library(&p, 4).unwrap();
        assert_eq!(lib.a[0], lib.a[1]);
        assert_ne!(lib.a[0], lib.b[0]);
        p.draw_keys = Some(DrawKeys { x: vec![7, 9], y: vec![7, 8] });
        assert_ne!(build_library(&p, 4).unwrap().a[1], lib.a[1]);
        p.draw_keys = Some(DrawKeys { x: vec![7, 7], y: vec![7, 8] });
        p.r1[1] = 0.25;
        let other = build_library(&p, 4).unwrap();
        assert_eq!(other.a[0], lib.a[0]);
        assert_ne!(other.a[1].len(), lib.a[1].len());
    }

    #[test]
    fn single_codeword_and_whole_class_books() {
        let p = binary_params(6, 1, 1, 0.0);
        let lib = build_library(&p, 1).unwrap();
        assert_eq!((lib.a[0].len(), lib.b[0].len()), (1, 1));
        let whole = rate_for_count(6, 20);
        let p = binary_params(6, 1, 1, whole);
        let lib = build_library(&p, 1).unwrap();
        assert_eq!(lib.whole_class_codebooks(), vec![(1, 0), (2, 0)]);
        let mut all = lib.a[0].clone();
        all.sort_by(|a, b| a.symbols().cmp(b.symbols()));
        all.dedup();
        assert_eq!(all.len(), 20);
        let too_big = rate_for_count(6, 21);
        let u_type = EmpiricalType::new(vec![1], vec![6]).unwrap();
        let half = EmpiricalType::new(vec![1, 2], vec![3, 3]).unwrap();
        assert!(matches!(
            LibraryParams::new(6, u_type, vec![half.clone()], vec![half], vec![too_big], vec![0.0]),
            Err(Error::TypeClassTooSmall { .. })
        ));
    }

    /// All joint types over the five packing axes that are consistent with
    /// the library's compositions.
    fn joint_types_for(lib: &CodebookLibraryPair, i: usize, j: usize, k: usize, l: usize) -> Vec<EmpiricalType> {
        let u_type = joint_type_of(&[&lib.u]).unwrap();
        let mut out = Vec::new();
        for cond in enumerate_conditional_types(2 * 2 * 2 * 2, &u_type).unwrap() {
            let v = EmpiricalType::new(vec![1, 2, 2, 2, 2], cond.counts().to_vec()).unwrap();
            let p = &lib.params;
            let ok = v.marginal(&[0, 1]).unwrap() == p.x_types[i]
                && v.marginal(&[0, 2]).unwrap() == p.x_types[k]
                && v.marginal(&[0, 3]).unwrap() == p.y_types[j]
                && v.marginal(&[0, 4]).unwrap() == p.y_types[l];
            if ok {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn packing_counts_match_a_recount() {
        let p = binary_params(6, 2, 2, 0.3);
        let lib = build_library(&p, 11).unwrap();
        let (i, j, k, l) = (0, 1, 0, 1);
        let types = joint_types_for(&lib, i, j, k, l);
        let mut total = PackingCounts { k: 0, k_x: 0, k_y: 0, k_xy: 0 };
        for v in &types {
            let got = packing_functions(&lib, i, j, k, l, v).unwrap();
            let mut want = 0u64;
            for (a, x) in lib.a[i].iter().enumerate() {
                for y in &lib.b[j] {
                    for (c, xt) in lib.a[k].iter().enumerate() {
                        for yt in &lib.b[l] {
                            if i == k && a == c {
                                continue;
                            }
                            if j == l && std::ptr::eq(y, yt) {
                                continue;
                            }
                            if &joint_type_of(&[&lib.u, x, xt, y, yt]).unwrap() == v {
                                want += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(got.k_xy, want);
            total.k_xy += got.k_xy;
        }
        // every tuple lands in exactly one type
        let (n1, n2) = (lib.a[i].len() as u64, lib.b[j].len() as u64);
        assert_eq!(total.k_xy, n1 * n2 * (n1 - 1) * (n2 - 1));
    }

    #[test]
    fn pair_counts_conserve_mass_and_vanish_off_marginals() {
        let p = binary_params(6, 1, 1, 0.4);
        let lib = build_library(&p, 5).unwrap();
        let mut total = 0;
        for v in enumerate_types(16, 6).unwrap() {
            let v = EmpiricalType::new(vec![1, 2, 2, 2, 2], v.counts().to_vec()).unwrap();
            let c = packing_functions(&lib, 0, 0, 0, 0, &v).unwrap();
            if v.marginal(&[0, 1]).unwrap() != p.x_types[0] {
                assert_eq!(c, PackingCounts { k: 0, k_x: 0, k_y: 0, k_xy: 0 });
            }
            total += c.k_xy;
        }
        let (n1, n2) = (lib.a[0].len() as u64, lib.b[0].len() as u64);
        assert_eq!(total, n1 * n2 * (n1 - 1) * (n2 - 1));
        let v_uxy_total: u64 = {
            let mut seen = std::collections::HashSet::new();
            let mut t = 0;
            for x in &lib.a[0] {
                for y in &lib.b[0] {
                    let jt = joint_type_of(&[&lib.u, x, y]).unwrap();
                    if seen.insert(jt.clone()) {
                        let v = EmpiricalType::new(
                            vec![1, 2, 2, 2, 2],
                            // place the (x, y) type on the diagonal x̃ = x, ỹ = y
                            (0..16)
                                .map(|cell| {
                                    let (x, xt, y, yt) = (cell / 8, (cell / 4) % 2, (cell / 2) % 2, cell % 2);
                                    if x == xt && y == yt {
                                        jt.counts()[x * 2 + y]
                                    } else {
                                        0
                                    }
                                })
                                .collect(),
                        )
                        .unwrap();
                        t += packing_functions(&lib, 0, 0, 0, 0, &v).unwrap().k;
                    }
                }
            }
            t
        };
        assert_eq!(v_uxy_total, n1 * n2);
    }

    #[test]
    fn single_codeword_library_is_trivially_packed() {
        let p = binary_params(6, 1, 1, 0.0);
        let lib = build_library(&p, 0).unwrap();
        let r = audit_packing(&lib).unwrap();
        assert!(r.passes);
        assert_eq!(r.families[1].tuples, 0);
        assert_eq!(r.families[0].tuples, 1);
        let packed = resample_until_packed(&p, 10, 0).unwrap();
        assert_eq!(packed.tries, 1);
    }

    #[test]
    fn resampling_packs_small_libraries() {
        let p = binary_params(8, 2, 2, 0.25);
        let packed = resample_until_packed(&p, 10, 42).unwrap();
        assert!(packed.report.passes);
        let again = audit_packing(&packed.library).unwrap();
        assert_eq!(again.log2_s, packed.report.log2_s);
        assert!(packed.report.log2_s <= 1.0 + packed.report.log2_expectation_bound);
    }

    #[test]
    fn duplicated_codewords_inflate_the_counts() {
        let p = binary_params(8, 1, 1, 0.375);
        let good = build_library(&p, 1).unwrap();
        let mut bad = good.clone();
        let first = bad.a[0][0].clone();
        bad.a[0].iter_mut().for_each(|x| *x = first.clone());
        let first = bad.b[0][0].clone();
        bad.b[0].iter_mut().for_each(|y| *y = first.clone());
        let r_good = audit_packing(&good).unwrap();
        let r_bad = audit_packing(&bad).unwrap();
        assert!(r_bad.log2_s > r_good.log2_s);
        // at the honest library's δ' the degenerate one breaks a bound
        assert!(!audit_packing_at(&bad, r_good.delta_prime).unwrap().passes);
    }

    #[test]
    fn guard_rejects_large_audits() {
        let u_type = EmpiricalType::new(vec![1], vec![20]).unwrap();
        let half = EmpiricalType::new(vec![1, 2], vec![10, 10]).unwrap();
        let p = LibraryParams::new(20, u_type, vec![half.clone()], vec![half], vec![0.5], vec![0.5]).unwrap();
        if !crate::error::guard_overridden() {
            let lib = build_library(&p, 0).unwrap();
            assert!(matches!(audit_packing(&lib), Err(Error::GuardExceeded { .. })));
        }
    }
}
