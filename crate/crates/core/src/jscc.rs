//! Joint source-channel codes that map source type classes onto codebooks
//! of matching size, in the classical and the type-informed arrangement.

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebooks::{
    build_library, codebook_size, conditional_type_near, rate_for_count, resample_until_packed, type_near,
    CodebookLibraryPair, DrawKeys, LibraryParams,
};
use crate::decoder::{Decoder, DecoderConfig, Verdict};
use crate::error::{check_guard, Error, Result};
use crate::exponents::{ej0_exponent, ej_exponent, JsccExponent, PairCompositionMap, RateToCompositionMap, SolverConfig};
use crate::mac::{joint_with, MacChannel};
use crate::simulator::{estimate_errors_with, exact_errors_with, ErrorEstimate, EstimateMode, EXACT_GUARD};
use crate::typekit::{
    enumerate_types, rank_in_class, type_class_size, unrank_in_class, variational_distance, EmpiricalType,
    JointDistribution, Kernel, Sequence,
};

/// Codebook pairs allowed in one code.
pub const CODEBOOK_PAIR_GUARD: f64 = 1e4;

/// A memoryless source with a one-dimensional letter law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointDistribution", into = "JointDistribution")]
pub struct SourceSpec {
    q: JointDistribution,
}

impl TryFrom<JointDistribution> for SourceSpec {
    type Error = Error;
    fn try_from(q: JointDistribution) -> Result<Self> {
        Self::new(q)
    }
}

impl From<SourceSpec> for JointDistribution {
    fn from(s: SourceSpec) -> Self {
        s.q
    }
}

impl SourceSpec {
    pub fn new(q: JointDistribution) -> Result<Self> {
        if q.rank() != 1 {
            return Err(Error::DimensionMismatch(format!("source must be one-dimensional, got rank {}", q.rank())));
        }
        Ok(Self { q })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Self::new(JointDistribution::from_vec(probs)?)
    }

    /// Binary source emitting 1 with probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::from_probs(vec![1.0 - p, p])
    }

    pub fn alphabet(&self) -> usize {
        self.q.len()
    }

    pub fn law(&self) -> &JointDistribution {
        &self.q
    }

    /// `Q^n(T) = |T| prod_s Q(s)^{n P(s)}`.
    pub fn class_weight(&self, t: &EmpiricalType) -> f64 {
        let size = type_class_size(t).to_f64().unwrap_or(f64::INFINITY);
        let mut w = size;
        for (&q, &c) in self.q.probs().iter().zip(t.counts()) {
            if c > 0 {
                w *= q.powi(c as i32);
            }
        }
        w
    }

    pub fn sequence_prob(&self, s: &Sequence) -> f64 {
        s.symbols().iter().map(|&x| self.q.probs()[x]).product()
    }

    fn draw(&self, n: usize, rng: &mut ChaCha20Rng) -> Result<Sequence> {
        let symbols = (0..n).map(|_| crate::mac::draw(self.q.probs(), rng)).collect();
        Sequence::new(self.alphabet(), symbols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsccMode {
    Classical,
    TypeInformed,
}

/// Composition maps: one-argument for classical codes, two-argument for
/// type-informed ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Compositions {
    Classical { g1: RateToCompositionMap, g2: RateToCompositionMap },
    TypeInformed { g1: PairCompositionMap, g2: PairCompositionMap },
}

impl Compositions {
    pub fn mode(&self) -> JsccMode {
        match self {
            Self::Classical { .. } => JsccMode::Classical,
            Self::TypeInformed { .. } => JsccMode::TypeInformed,
        }
    }

    fn kernel_shape(&self) -> ((usize, usize), (usize, usize)) {
        let (a, b) = match self {
            Self::Classical { g1, g2 } => (&g1.kernels()[0], &g2.kernels()[0]),
            Self::TypeInformed { g1, g2 } => (&g1.kernels()[0], &g2.kernels()[0]),
        };
        ((a.rows(), a.cols()), (b.rows(), b.cols()))
    }
}

/// Sources, auxiliary law and composition maps of a code family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsccSetup {
    pub q1: SourceSpec,
    pub q2: SourceSpec,
    pub p_u: Vec<f64>,
    pub compositions: Compositions,
}

impl JsccSetup {
    /// `Ej` for classical maps, `Ej0` for type-informed ones.
    pub fn target_exponent(&self, w: &MacChannel, cfg: &SolverConfig) -> Result<JsccExponent> {
        match &self.compositions {
            Compositions::Classical { g1, g2 } => ej_exponent(self.q1.law(), self.q2.law(), w, &self.p_u, g1, g2, cfg),
            Compositions::TypeInformed { g1, g2 } => ej0_exponent(self.q1.law(), self.q2.law(), w, &self.p_u, g1, g2, cfg),
        }
    }

    fn check(&self, w: &MacChannel) -> Result<()> {
        let ((u1, x), (u2, y)) = self.compositions.kernel_shape();
        if u1 != self.p_u.len() || u2 != self.p_u.len() {
            return Err(Error::DimensionMismatch("composition kernels need one row per auxiliary symbol".into()));
        }
        if x != w.x_size() || y != w.y_size() {
            return Err(Error::DimensionMismatch("composition kernels must match the channel inputs".into()));
        }
        Ok(())
    }
}

/// How the codebook library is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PackingPolicy {
    /// Resample until the packing audit passes; a library too large to
    /// audit is kept unaudited.
    Resample { max_tries: usize },
    Skip,
}

impl Default for PackingPolicy {
    fn default() -> Self {
        Self::Resample { max_tries: 10 }
    }
}

/// Message indices chosen by the two encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codewords {
    pub i: usize,
    pub a: usize,
    pub j: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsccCode {
    pub setup: JsccSetup,
    pub n: usize,
    /// Source types in the order of [`enumerate_types`].
    pub types1: Vec<EmpiricalType>,
    pub types2: Vec<EmpiricalType>,
    pub library: CodebookLibraryPair,
    pub audited: bool,
    pub packing_tries: usize,
    /// Largest variational distance between a codebook's `U x X` type and
    /// its target `P_U x g`.
    pub nu: f64,
}

fn class_count(t: &EmpiricalType) -> Result<u128> {
    type_class_size(t).to_u128().ok_or_else(|| Error::Overflow("type class size".into()))
}

fn composition_distance(realized: &EmpiricalType, p_u: &[f64], kernel: &Kernel) -> Result<f64> {
    let target = JointDistribution::new(vec![p_u.len(), kernel.cols()], joint_with(p_u, kernel))?;
    variational_distance(&realized.to_distribution(), &target)
}

/// Classical code: sender `s` maps type class `k` onto codebook `k`, whose
/// composition is `g_s` at rate `log |T_k| / n`.
pub fn build_classical(
    q1: &SourceSpec,
    q2: &SourceSpec,
    w: &MacChannel,
    p_u: &[f64],
    g1: &RateToCompositionMap,
    g2: &RateToCompositionMap,
    n: usize,
    seed: u64,
    packing: PackingPolicy,
) -> Result<JsccCode> {
    let setup = JsccSetup {
        q1: q1.clone(),
        q2: q2.clone(),
        p_u: p_u.to_vec(),
        compositions: Compositions::Classical { g1: g1.clone(), g2: g2.clone() },
    };
    build(setup, w, n, seed, packing)
}

/// Type-informed code: codebook `k |P2| + l` of either sender serves the
/// type pair `(k, l)`, with compositions from the two-argument maps.
pub fn build_type_informed(
    q1: &SourceSpec,
    q2: &SourceSpec,
    w: &MacChannel,
    p_u: &[f64],
    g1: &PairCompositionMap,
    g2: &PairCompositionMap,
    n: usize,
    seed: u64,
    packing: PackingPolicy,
) -> Result<JsccCode> {
    let setup = JsccSetup {
        q1: q1.clone(),
        q2: q2.clone(),
        p_u: p_u.to_vec(),
        compositions: Compositions::TypeInformed { g1: g1.clone(), g2: g2.clone() },
    };
    build(setup, w, n, seed, packing)
}

pub fn build(setup: JsccSetup, w: &MacChannel, n: usize, seed: u64, packing: PackingPolicy) -> Result<JsccCode> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    setup.check(w)?;
    let types1 = enumerate_types(setup.q1.alphabet(), n as u64)?;
    let types2 = enumerate_types(setup.q2.alphabet(), n as u64)?;
    let (p1, p2) = (types1.len(), types2.len());
    let books = match setup.compositions.mode() {
        JsccMode::Classical => (p1, p2),
        JsccMode::TypeInformed => (p1 * p2, p1 * p2),
    };
    check_guard("JSCC codebook pairs", books.0 as f64 * books.1 as f64, CODEBOOK_PAIR_GUARD)?;

    let u_counts = type_near(&setup.p_u, n as u64);
    let u_type = EmpiricalType::new(vec![setup.p_u.len()], u_counts.clone())?;
    let sizes1 = types1.iter().map(class_count).collect::<Result<Vec<_>>>()?;
    let sizes2 = types2.iter().map(class_count).collect::<Result<Vec<_>>>()?;
    let rates1: Vec<f64> = sizes1.iter().map(|&c| rate_for_count(n, c)).collect();
    let rates2: Vec<f64> = sizes2.iter().map(|&c| rate_for_count(n, c)).collect();

    let mut x_types = Vec::with_capacity(books.0);
    let mut y_types = Vec::with_capacity(books.1);
    let (mut r1, mut r2) = (Vec::with_capacity(books.0), Vec::with_capacity(books.1));
    let mut nu: f64 = 0.0;
    let mut push = |types: &mut Vec<EmpiricalType>, kernel: &Kernel| -> Result<()> {
        let t = conditional_type_near(&u_counts, kernel)?;
        nu = nu.max(composition_distance(&t, &setup.p_u, kernel)?);
        types.push(t);
        Ok(())
    };
    match &setup.compositions {
        Compositions::Classical { g1, g2 } => {
            for k in 0..p1 {
                push(&mut x_types, g1.at(rates1[k]))?;
                r1.push(rates1[k]);
            }
            for l in 0..p2 {
                push(&mut y_types, g2.at(rates2[l]))?;
                r2.push(rates2[l]);
            }
        }
        Compositions::TypeInformed { g1, g2 } => {
            for k in 0..p1 {
                for l in 0..p2 {
                    push(&mut x_types, g1.at(rates1[k], rates2[l]))?;
                    push(&mut y_types, g2.at(rates1[k], rates2[l]))?;
                    r1.push(rates1[k]);
                    r2.push(rates2[l]);
                }
            }
        }
    }

    let mut params = LibraryParams::new(n, u_type, x_types, y_types, r1, r2)?;
    // codebooks are labelled by the source type they serve
    params.draw_keys = Some(match setup.compositions.mode() {
        JsccMode::Classical => DrawKeys { x: (0..p1 as u64).collect(), y: (0..p2 as u64).collect() },
        JsccMode::TypeInformed => DrawKeys {
            x: (0..p1 * p2).map(|c| (c / p2) as u64).collect(),
            y: (0..p1 * p2).map(|c| (c % p2) as u64).collect(),
        },
    });
    for (i, &r) in params.r1.iter().enumerate() {
        let want = match setup.compositions.mode() {
            JsccMode::Classical => sizes1[i],
            JsccMode::TypeInformed => sizes1[i / p2],
        };
        if codebook_size(n, r) != want {
            return Err(Error::Precondition(format!("codebook {i} of sender 1 does not match its source class")));
        }
    }
    for (j, &r) in params.r2.iter().enumerate() {
        let want = match setup.compositions.mode() {
            JsccMode::Classical => sizes2[j],
            JsccMode::TypeInformed => sizes2[j % p2],
        };
        if codebook_size(n, r) != want {
            return Err(Error::Precondition(format!("codebook {j} of sender 2 does not match its source class")));
        }
    }

    let (library, audited, packing_tries) = match packing {
        PackingPolicy::Skip => (build_library(&params, seed)?, false, 1),
        PackingPolicy::Resample { max_tries } => match resample_until_packed(&params, max_tries, seed) {
            Ok(p) => (p.library, true, p.tries),
            Err(Error::GuardExceeded { .. }) => (build_library(&params, seed)?, false, 1),
            Err(e) => return Err(e),
        },
    };
    Ok(JsccCode {
        setup,
        n,
        types1,
        types2,
        library,
        audited,
        packing_tries,
        nu,
    })
}

impl JsccCode {
    pub fn mode(&self) -> JsccMode {
        self.setup.compositions.mode()
    }

    pub fn m1(&self) -> usize {
        self.library.a.len()
    }

    pub fn m2(&self) -> usize {
        self.library.b.len()
    }

    /// Codebook indices serving the source type pair `(k, l)`.
    pub fn codebooks_for(&self, k: usize, l: usize) -> (usize, usize) {
        match self.mode() {
            JsccMode::Classical => (k, l),
            JsccMode::TypeInformed => (k * self.types2.len() + l, k * self.types2.len() + l),
        }
    }

    fn type_of(&self, sender: usize, s: &Sequence) -> Result<usize> {
        let (types, size) = if sender == 1 { (&self.types1, self.setup.q1.alphabet()) } else { (&self.types2, self.setup.q2.alphabet()) };
        if s.len() != self.n {
            return Err(Error::LengthMismatch(s.len(), self.n));
        }
        if s.alphabet() != size {
            return Err(Error::DimensionMismatch(format!("source {sender} has {size} letters, sequence uses {}", s.alphabet())));
        }
        let counts = s.type_of();
        Ok(types.iter().position(|t| t.counts() == counts.counts()).expect("every type is enumerated"))
    }

    /// Encoder outputs for a source pair. A classical encoder reads only
    /// its own sequence; a type-informed one also reads the other type.
    pub fn encode(&self, s1: &Sequence, s2: &Sequence) -> Result<Codewords> {
        let (k, l) = (self.type_of(1, s1)?, self.type_of(2, s2)?);
        let (i, j) = self.codebooks_for(k, l);
        Ok(Codewords { i, a: rank_in_class(s1)? as usize, j, b: rank_in_class(s2)? as usize })
    }

    /// Source pair named by a decoder verdict; `None` on a collision.
    pub fn decode_verdict(&self, v: &Verdict) -> Result<Option<(Sequence, Sequence)>> {
        let Verdict::Message { i, a, j, b } = *v else {
            return Ok(None);
        };
        let (k, l) = match self.mode() {
            JsccMode::Classical => (i, j),
            JsccMode::TypeInformed => (i / self.types2.len(), j % self.types2.len()),
        };
        let s1 = unrank_in_class(self.types1[k].counts(), a as u128)?;
        let s2 = unrank_in_class(self.types2[l].counts(), b as u128)?;
        Ok(Some((s1, s2)))
    }

    /// Decoder settings actually used: type-informed codes compare only
    /// codebooks with equal indices.
    pub fn decoder_config(&self, cfg: &DecoderConfig) -> DecoderConfig {
        let mut c = cfg.clone();
        c.matched_pairs_only = self.mode() == JsccMode::TypeInformed;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum JsccEvaluation {
    Exact,
    /// Trials are split over class pairs in proportion to their weight,
    /// with at least one trial per class pair.
    MonteCarlo { trials: u64, seed: u64 },
}

/// One type-class pair's share of the total error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassContribution {
    pub k: usize,
    pub l: usize,
    pub weight: f64,
    pub error: ErrorEstimate,
    pub contribution: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsccErrorReport {
    pub total: ErrorEstimate,
    /// Sorted by decreasing contribution.
    pub classes: Vec<ClassContribution>,
}

impl JsccErrorReport {
    pub fn dominant(&self, count: usize) -> &[ClassContribution] {
        &self.classes[..count.min(self.classes.len())]
    }
}

/// Total error `sum_{k,l} Q1^n(T_k) Q2^n(T_l) Err(k, l)`, where `Err(k, l)`
/// is the decoding error of the codebook pair serving the class pair and a
/// collision verdict counts as an error.
pub fn jscc_error(code: &JsccCode, w: &MacChannel, cfg: &DecoderConfig, mode: JsccEvaluation) -> Result<JsccErrorReport> {
    let cfg = code.decoder_config(cfg);
    let decoder = Decoder::new(&code.library, w.z_size(), &cfg)?;
    let pairs: Vec<(usize, usize, f64)> = (0..code.types1.len())
        .flat_map(|k| (0..code.types2.len()).map(move |l| (k, l)))
        .map(|(k, l)| (k, l, code.setup.q1.class_weight(&code.types1[k]) * code.setup.q2.class_weight(&code.types2[l])))
        .collect();
    let mut classes = pairs
        .par_iter()
        .enumerate()
        .map(|(c, &(k, l, weight))| -> Result<ClassContribution> {
            let (i, j) = code.codebooks_for(k, l);
            let error = match mode {
                JsccEvaluation::Exact => exact_errors_with(&decoder, w, i, j)?.err_d,
                JsccEvaluation::MonteCarlo { trials, seed } => {
                    let t = ((trials as f64 * weight).round() as u64).max(1);
                    estimate_errors_with(&decoder, w, i, j, t, seed.wrapping_add(c as u64))?.err_d
                }
            };
            Ok(ClassContribution { k, l, weight, error, contribution: weight * error.mean })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = classes.iter().map(|c| c.contribution).sum::<f64>();
    let var = classes.iter().map(|c| (c.weight * c.error.std_err).powi(2)).sum::<f64>();
    let trials = classes.iter().map(|c| c.error.trials).sum();
    let est_mode = match mode {
        JsccEvaluation::Exact => EstimateMode::Exact,
        JsccEvaluation::MonteCarlo { .. } => EstimateMode::MonteCarlo,
    };
    classes.sort_by(|a, b| b.contribution.total_cmp(&a.contribution).then((a.k, a.l).cmp(&(b.k, b.l))));
    Ok(JsccErrorReport { total: ErrorEstimate { mean, std_err: var.sqrt(), trials, mode: est_mode }, classes })
}

/// Errors of independently drawn codes of one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub seeds: Vec<u64>,
    pub totals: Vec<ErrorEstimate>,
    /// Average total error over the drawn codes.
    pub mean: f64,
    /// Sampling error of `mean` from the per-code estimates alone.
    pub std_err: f64,
    /// Standard error of `mean` across codes.
    pub spread: f64,
    pub audited: usize,
}

/// Average total error of codes built from `setup` with each seed in
/// `seeds`; Monte Carlo evaluations reuse the same trial seed.
pub fn ensemble_error(
    setup: &JsccSetup,
    w: &MacChannel,
    n: usize,
    seeds: &[u64],
    packing: PackingPolicy,
    cfg: &DecoderConfig,
    mode: JsccEvaluation,
) -> Result<EnsembleReport> {
    if seeds.is_empty() {
        return Err(Error::Precondition("at least one code is required".into()));
    }
    let mut totals = Vec::with_capacity(seeds.len());
    let mut audited = 0;
    for &seed in seeds {
        let code = build(setup.clone(), w, n, seed, packing)?;
        audited += code.audited as usize;
        totals.push(jscc_error(&code, w, cfg, mode)?.total);
    }
    let l = seeds.len() as f64;
    let mean = totals.iter().map(|t| t.mean).sum::<f64>() / l;
    let std_err = totals.iter().map(|t| t.std_err.powi(2)).sum::<f64>().sqrt() / l;
    let spread = if seeds.len() > 1 {
        (totals.iter().map(|t| (t.mean - mean).powi(2)).sum::<f64>() / (l - 1.0) / l).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleReport { seeds: seeds.to_vec(), totals, mean, std_err, spread, audited })
}

fn check_outcome(code: &JsccCode, v: &Verdict, s1: &Sequence, s2: &Sequence) -> Result<bool> {
    Ok(match code.decode_verdict(v)? {
        Some((d1, d2)) => d1 != *s1 || d2 != *s2,
        None => true,
    })
}

/// End-to-end Monte Carlo: trial `t` draws both source sequences and the
/// channel output from ChaCha20 stream `t` of `seed`.
pub fn end_to_end_monte_carlo(code: &JsccCode, w: &MacChannel, cfg: &DecoderConfig, trials: u64, seed: u64) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let decoder = Decoder::new(&code.library, w.z_size(), &code.decoder_config(cfg))?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let s1 = code.setup.q1.draw(code.n, &mut rng)?;
            let s2 = code.setup.q2.draw(code.n, &mut rng)?;
            let c = code.encode(&s1, &s2)?;
            let z = w.sample_output_with(&code.library.a[c.i][c.a], &code.library.b[c.j][c.b], &mut rng)?;
            Ok(check_outcome(code, &decoder.decode(&z)?.verdict, &s1, &s2)? as u64)
        })
        .try_reduce(|| 0, |x, y| Ok(x + y))?;
    let mean = errors as f64 / trials as f64;
    Ok(ErrorEstimate { mean, std_err: (mean * (1.0 - mean) / trials as f64).sqrt(), trials, mode: EstimateMode::MonteCarlo })
}

fn all_sequences(size: usize, n: usize) -> Result<Vec<Sequence>> {
    let total = size.checked_pow(n as u32).ok_or_else(|| Error::Overflow("sequence count".into()))?;
    (0..total)
        .map(|mut r| {
            let mut s = vec![0usize; n];
            for x in s.iter_mut().rev() {
                *x = r % size;
                r /= size;
            }
            Sequence::new(size, s)
        })
        .collect()
}

/// End-to-end error by enumerating every source pair and channel output.
pub fn end_to_end_exact(code: &JsccCode, w: &MacChannel, cfg: &DecoderConfig) -> Result<f64> {
    let n = code.n;
    let (a1, a2) = (code.setup.q1.alphabet(), code.setup.q2.alphabet());
    let outputs = (w.z_size() as f64).powi(n as i32);
    let terms = (a1 as f64).powi(n as i32) * (a2 as f64).powi(n as i32) * outputs;
    check_guard("end-to-end enumeration terms", terms, EXACT_GUARD)?;
    let decoder = Decoder::new(&code.library, w.z_size(), &code.decoder_config(cfg))?;
    let seqs1 = all_sequences(a1, n)?;
    let seqs2 = all_sequences(a2, n)?;
    let zs = all_sequences(w.z_size(), n)?;
    let verdicts: Vec<Verdict> = zs.par_iter().map(|z| Ok(decoder.decode(z)?.verdict)).collect::<Result<_>>()?;
    let parts = seqs1
        .par_iter()
        .map(|s1| -> Result<f64> {
            let mut acc = 0.0;
            for s2 in &seqs2 {
                let q = code.setup.q1.sequence_prob(s1) * code.setup.q2.sequence_prob(s2);
                if q == 0.0 {
                    continue;
                }
                let c = code.encode(s1, s2)?;
                let (x, y) = (&code.library.a[c.i][c.a], &code.library.b[c.j][c.b]);
                for (z, v) in zs.iter().zip(&verdicts) {
                    let p: f64 = (0..n).map(|t| w.prob(x.symbols()[t], y.symbols()[t], z.symbols()[t])).product();
                    if p > 0.0 && check_outcome(code, v, s1, s2)? {
                        acc += q * p;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}
