//! Monte Carlo and exact evaluation of the decoding and collision error
//! probabilities, decay tables and the mixture witness.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebooks::{resample_until_packed, resample_until_packed_separated, CodebookLibraryPair, LibraryParams};
use crate::decoder::{Decoder, DecoderConfig, Verdict};
use crate::error::{check_guard, Error, Result};
use crate::exponents::{
    cthx_terms, ecthx_exponent, exponent_lh, mixture, v_star, v_star_star, CthxTerms, EcthxConfig, SolverConfig,
    TildeStructure,
};
use crate::mac::{MacChannel, RatePair};
use crate::typekit::{mutual_information, JointDistribution, Sequence};

/// Terms `|Z|^n N1 N2` allowed in one exact evaluation.
pub const EXACT_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
    pub mode: EstimateMode,
}

impl ErrorEstimate {
    fn monte_carlo(errors: u64, trials: u64) -> Self {
        let mean = errors as f64 / trials as f64;
        Self { mean, std_err: (mean * (1.0 - mean) / trials as f64).sqrt(), trials, mode: EstimateMode::MonteCarlo }
    }

    fn exact(mean: f64, terms: u64) -> Self {
        Self { mean: mean.clamp(0.0, 1.0), std_err: 0.0, trials: terms, mode: EstimateMode::Exact }
    }
}

/// Decoding and collision-declaration errors from one set of transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub err_d: ErrorEstimate,
    pub err_c: ErrorEstimate,
}

fn check_pair(lib: &CodebookLibraryPair, w: &MacChannel, i: usize, j: usize) -> Result<()> {
    if i >= lib.a.len() || j >= lib.b.len() {
        return Err(Error::InvalidArgument(format!("codebook pair ({i}, {j}) out of range")));
    }
    if w.x_size() != lib.params.x_size() || w.y_size() != lib.params.y_size() {
        return Err(Error::DimensionMismatch("channel inputs differ from the codebook alphabets".into()));
    }
    Ok(())
}

/// Multiplier close to `0.618 m` and coprime to `m`, so that `t g mod m`
/// runs through every residue with early prefixes spread out.
fn golden_stride(m: u64) -> u64 {
    if m <= 2 {
        return 1;
    }
    let mut g = ((m as f64) * 0.618_033_988_749_895).round().max(1.0) as u64;
    while num_integer::gcd(g, m) != 1 {
        g += 1;
    }
    g
}

/// Message pair sent in trial `t`.
fn trial_pair(t: u64, n1: u64, n2: u64, stride: u64) -> (usize, usize) {
    let m = n1 as u128 * n2 as u128;
    let idx = (t as u128 * stride as u128 % m) as u64;
    ((idx % n1) as usize, (idx / n1) as usize)
}

/// Monte Carlo estimate of both errors for codebook pair `(i, j)`.
///
/// Trial `t` sends message pair number `t g mod N1 N2` for a fixed stride
/// `g` coprime to `N1 N2`, through an output drawn from ChaCha20 stream `t`
/// of `seed`. The result does not depend on the number of workers.
pub fn estimate_errors(
    lib: &CodebookLibraryPair,
    w: &MacChannel,
    i: usize,
    j: usize,
    cfg: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<ErrorPair> {
    let decoder = Decoder::new(lib, w.z_size(), cfg)?;
    estimate_errors_with(&decoder, w, i, j, trials, seed)
}

/// As [`estimate_errors`] with a prepared decoder.
pub fn estimate_errors_with(
    decoder: &Decoder<'_>,
    w: &MacChannel,
    i: usize,
    j: usize,
    trials: u64,
    seed: u64,
) -> Result<ErrorPair> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let lib = decoder.library();
    check_pair(lib, w, i, j)?;
    let (n1, n2) = (lib.a[i].len() as u64, lib.b[j].len() as u64);
    let stride = golden_stride(n1 * n2);
    let (d, c) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64)> {
            let (a, b) = trial_pair(t, n1, n2, stride);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let z = w.sample_output_with(&lib.a[i][a], &lib.b[j][b], &mut rng)?;
            let v = decoder.decode(&z)?.verdict;
            Ok(((v != Verdict::Message { i, a, j, b }) as u64, (v != Verdict::Collision) as u64))
        })
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
    Ok(ErrorPair { err_d: ErrorEstimate::monte_carlo(d, trials), err_c: ErrorEstimate::monte_carlo(c, trials) })
}

pub fn estimate_err_d(
    lib: &CodebookLibraryPair,
    w: &MacChannel,
    i: usize,
    j: usize,
    cfg: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    Ok(estimate_errors(lib, w, i, j, cfg, trials, seed)?.err_d)
}

pub fn estimate_err_c(
    lib: &CodebookLibraryPair,
    w: &MacChannel,
    i: usize,
    j: usize,
    cfg: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    Ok(estimate_errors(lib, w, i, j, cfg, trials, seed)?.err_c)
}

/// Number of terms an exact evaluation sums: one decode per message pair
/// for a deterministic channel, otherwise `|Z|^n N1 N2`.
pub fn exact_terms(lib: &CodebookLibraryPair, w: &MacChannel, i: usize, j: usize) -> f64 {
    let pairs = lib.a[i].len() as f64 * lib.b[j].len() as f64;
    if w.as_function().is_some() {
        pairs
    } else {
        (w.z_size() as f64).powi(lib.params.n as i32) * pairs
    }
}

/// Exact errors for codebook pair `(i, j)` by summing `W^n(z | x, y)` over
/// every output and message pair.
pub fn exact_errors(lib: &CodebookLibraryPair, w: &MacChannel, i: usize, j: usize, cfg: &DecoderConfig) -> Result<ErrorPair> {
    let decoder = Decoder::new(lib, w.z_size(), cfg)?;
    exact_errors_with(&decoder, w, i, j)
}

/// As [`exact_errors`] with a prepared decoder.
pub fn exact_errors_with(decoder: &Decoder<'_>, w: &MacChannel, i: usize, j: usize) -> Result<ErrorPair> {
    let lib = decoder.library();
    check_pair(lib, w, i, j)?;
    let terms = exact_terms(lib, w, i, j);
    check_guard("exact error terms", terms, EXACT_GUARD)?;
    let (xs, ys) = (&lib.a[i], &lib.b[j]);
    let pairs = (xs.len() * ys.len()) as f64;
    if let Some(f) = w.as_function() {
        let (d, c) = (0..xs.len() * ys.len())
            .into_par_iter()
            .map(|m| -> Result<(u64, u64)> {
                let (a, b) = (m % xs.len(), m / xs.len());
                let symbols =
                    xs[a].symbols().iter().zip(ys[b].symbols()).map(|(&x, &y)| f[x * w.y_size() + y]).collect();
                let v = decoder.decode(&Sequence::new(w.z_size(), symbols)?)?.verdict;
                Ok(((v != Verdict::Message { i, a, j, b }) as u64, (v != Verdict::Collision) as u64))
            })
            .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
        return Ok(ErrorPair {
            err_d: ErrorEstimate::exact(d as f64 / pairs, terms as u64),
            err_c: ErrorEstimate::exact(c as f64 / pairs, terms as u64),
        });
    }
    let n = lib.params.n;
    let zs = w.z_size() as u64;
    let outputs = zs.pow(n as u32);
    const CHUNK: u64 = 1 << 12;
    let chunks: Vec<(f64, f64)> = (0..outputs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<(f64, f64)> {
            let mut acc = (0.0, 0.0);
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(outputs) {
                let mut symbols = vec![0usize; n];
                let mut r = index;
                for s in symbols.iter_mut().rev() {
                    *s = (r % zs) as usize;
                    r /= zs;
                }
                let z = Sequence::new(w.z_size(), symbols)?;
                let verdict = decoder.decode(&z)?.verdict;
                for (a, x) in xs.iter().enumerate() {
                    for (b, y) in ys.iter().enumerate() {
                        let mut p = 1.0;
                        for t in 0..n {
                            p *= w.prob(x.symbols()[t], y.symbols()[t], z.symbols()[t]);
                            if p == 0.0 {
                                break;
                            }
                        }
                        if p == 0.0 {
                            continue;
                        }
                        if verdict != (Verdict::Message { i, a, j, b }) {
                            acc.0 += p;
                        }
                        if verdict != Verdict::Collision {
                            acc.1 += p;
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let (d, c) = chunks.iter().fold((0.0, 0.0), |s, x| (s.0 + x.0, s.1 + x.1));
    Ok(ErrorPair { err_d: ErrorEstimate::exact(d / pairs, terms as u64), err_c: ErrorEstimate::exact(c / pairs, terms as u64) })
}

/// Exact evaluation when within [`EXACT_GUARD`], otherwise Monte Carlo.
pub fn errors_auto(
    lib: &CodebookLibraryPair,
    w: &MacChannel,
    i: usize,
    j: usize,
    cfg: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<ErrorPair> {
    check_pair(lib, w, i, j)?;
    if exact_terms(lib, w, i, j) <= EXACT_GUARD {
        exact_errors(lib, w, i, j, cfg)
    } else {
        estimate_errors(lib, w, i, j, cfg, trials, seed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayConfig {
    /// Codebook pair to evaluate.
    pub pair: (usize, usize),
    /// Monte Carlo trials when the exact oracle is out of reach.
    pub trials: u64,
    pub max_tries: usize,
    pub seed: u64,
    /// Force Monte Carlo even where the exact oracle is allowed.
    pub monte_carlo_only: bool,
    /// Only accept well-separated libraries.
    pub separated: bool,
    pub solver: SolverConfig,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { pair: (0, 0), trials: 10_000, max_tries: 10, seed: 0, monte_carlo_only: false, separated: false, solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub rates: RatePair,
    pub err_d: ErrorEstimate,
    pub err_c: ErrorEstimate,
    /// `-log2(Err_d) / n`; infinite when `Err_d = 0`.
    pub empirical_exponent: f64,
    /// `E_LH` at the realized rates and compositions.
    pub target_exponent: f64,
    pub packing_tries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub warnings: Vec<String>,
}

impl DecayTable {
    /// `true` when the empirical exponent never drops by more than two
    /// standard errors (propagated through `-log2(·)/n`) from one row to
    /// the next.
    pub fn nondecreasing_within(&self, sigmas: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let band = |r: &DecayRow| {
                if r.err_d.mean > 0.0 {
                    sigmas * r.err_d.std_err / (r.err_d.mean * std::f64::consts::LN_2 * r.n as f64)
                } else {
                    0.0
                }
            };
            w[1].empirical_exponent + band(&w[1]) >= w[0].empirical_exponent - band(&w[0])
        })
    }
}

/// Per-blocklength errors for a family of library parameters, each packed
/// by [`resample_until_packed`].
pub fn decay_profile(params: &[LibraryParams], w: &MacChannel, dec: &DecoderConfig, cfg: &DecayConfig) -> Result<DecayTable> {
    let (i, j) = cfg.pair;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for p in params {
        let packed = if cfg.separated {
            resample_until_packed_separated(p, cfg.max_tries, cfg.seed)
        } else {
            resample_until_packed(p, cfg.max_tries, cfg.seed)
        };
        let packed = match packed {
            Ok(x) => x,
            Err(Error::GuardExceeded { what, needed, limit }) => {
                warnings.push(format!("n = {}: {what} needs {needed:.3e} > {limit:.3e}; table truncated", p.n));
                break;
            }
            Err(e) => return Err(e),
        };
        let lib = &packed.library;
        let errs = if cfg.monte_carlo_only || exact_terms(lib, w, i, j) > EXACT_GUARD {
            estimate_errors(lib, w, i, j, dec, cfg.trials.max(10_000), cfg.seed)?
        } else {
            exact_errors(lib, w, i, j, dec)?
        };
        let rates = RatePair::new(p.r1[i], p.r2[j])?;
        let target = exponent_lh(rates, w, &p.structure(i, j)?, &cfg.solver)?.value;
        rows.push(DecayRow {
            n: p.n,
            rates,
            err_d: errs.err_d,
            err_c: errs.err_c,
            empirical_exponent: -errs.err_d.mean.log2() / p.n as f64,
            target_exponent: target,
            packing_tries: packed.tries,
        });
    }
    Ok(DecayTable { rows, warnings })
}

/// `V^ε` at the located `ε₀` with its exact terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureWitness {
    pub epsilon: f64,
    pub v_eps: JointDistribution,
    /// `r(ε₀) = I(X̃ ∧ Y, Z | U) - R1k`.
    pub r_value: f64,
    pub terms: CthxTerms,
    /// All three constraint margins exceed η.
    pub feasible: bool,
    /// `|objective(V^ε₀) - η|`.
    pub objective_gap: f64,
    /// Numerical `ECTHX` value, when requested.
    pub ecthx_value: Option<f64>,
}

/// `r(ε)` along the mixture path.
pub fn mixture_rate(w: &MacChannel, s: &TildeStructure, r1k: f64, r2j: f64, eps: f64) -> Result<f64> {
    let v = mixture(&v_star(w, s)?, &v_star_star(w, s)?, eps)?;
    Ok(cthx_terms(&v, w, r1k, r2j)?.margins[0])
}

/// Locates `ε₀` with `r(ε₀) - η ∈ (0, 1e-4]` by bisection and evaluates
/// the witness; optionally cross-checks against the numerical exponent.
pub fn proposition2_witness(
    w: &MacChannel,
    s: &TildeStructure,
    r1k: f64,
    r2j: f64,
    eta: f64,
    ecthx: Option<&EcthxConfig>,
) -> Result<MixtureWitness> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold {eta} must be positive")));
    }
    if s.p_x_i.probs().iter().zip(s.p_x_k.probs()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Precondition("the two X compositions must coincide".into()));
    }
    let comp = s.competing_structure().joint(w)?;
    let (u, x, y, z) = (0, 1, 2, 3);
    let c70 = mutual_information(&comp, &[x], &[y, z], &[u])? - r1k;
    let c71 = mutual_information(&comp, &[y], &[z], &[u])? - r1k - r2j;
    if !(c70 > eta && c71 > eta) {
        return Err(Error::Precondition(format!(
            "needs I(X ∧ Y, Z | U) - R1k > η and I(Y ∧ Z | U) - R1k - R2j > η, got {c70:.6} and {c71:.6} against {eta}"
        )));
    }
    let (vs, vss) = (v_star(w, s)?, v_star_star(w, s)?);
    let r = |eps: f64| -> Result<f64> { Ok(cthx_terms(&mixture(&vs, &vss, eps)?, w, r1k, r2j)?.margins[0]) };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if r(mid)? > eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_value = r(lo)?;
    if !(r_value - eta > 0.0 && r_value - eta <= 1e-4) {
        return Err(Error::Precondition(format!("bisection ended at r - η = {:.3e}", r_value - eta)));
    }
    let v_eps = mixture(&vs, &vss, lo)?;
    let terms = cthx_terms(&v_eps, w, r1k, r2j)?;
    let ecthx_value = match ecthx {
        Some(cfg) => Some(ecthx_exponent(r1k, r2j, eta, w, s, cfg)?.value),
        None => None,
    };
    Ok(MixtureWitness {
        epsilon: lo,
        feasible: terms.feasible(eta),
        objective_gap: (terms.objective - eta).abs(),
        v_eps,
        r_value,
        terms,
        ecthx_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebooks::{build_library, build_separated_library, rate_for_count};
    use crate::typekit::{EmpiricalType, Kernel};

    fn halves(n: usize, m: usize, rate: f64) -> LibraryParams {
        let u_type = EmpiricalType::new(vec![1], vec![n as u64]).unwrap();
        let t = EmpiricalType::new(vec![1, 2], vec![n as u64 / 2, n as u64 - n as u64 / 2]).unwrap();
        LibraryParams::new(n, u_type, vec![t.clone(); m], vec![t; m], vec![rate; m], vec![rate; m]).unwrap()
    }

    fn eta(v: f64) -> DecoderConfig {
        DecoderConfig::constant(v).unwrap()
    }

    #[test]
    fn noiseless_well_separated_library_never_errs() {
        let lib = build_separated_library(&halves(6, 1, rate_for_count(6, 4)), 200, 0).unwrap();
        let w = MacChannel::noiseless_pair();
        let exact = exact_errors(&lib, &w, 0, 0, &eta(0.05)).unwrap();
        assert_eq!(exact.err_d.mean, 0.0);
        assert_eq!(exact.err_c.mean, 1.0);
        let mc = estimate_errors(&lib, &w, 0, 0, &eta(0.05), 10_000, 1).unwrap();
        assert_eq!(mc.err_d.mean, 0.0);
    }

    #[test]
    fn deterministic_channel_gives_whole_messages() {
        let lib = build_library(&halves(4, 1, rate_for_count(4, 3)), 2).unwrap();
        let w = MacChannel::binary_or();
        let e = exact_errors(&lib, &w, 0, 0, &eta(0.01)).unwrap();
        // each message pair contributes 0 or 1, so the mean is a multiple of 1/9
        let scaled = e.err_d.mean * 9.0;
        assert!((scaled - scaled.round()).abs() < 1e-9);
        assert_eq!(e.err_d.std_err, 0.0);
        // full cycles of the stride visit every pair equally often
        let mc = estimate_errors(&lib, &w, 0, 0, &eta(0.01), 27, 5).unwrap();
        assert!((mc.err_d.mean - e.err_d.mean).abs() < 1e-12);
        assert!((mc.err_c.mean - e.err_c.mean).abs() < 1e-12);
    }

    #[test]
    fn golden_stride_is_a_permutation() {
        for m in [1u64, 2, 3, 10, 12, 97, 100] {
            let g = golden_stride(m);
            let mut seen: Vec<u64> = (0..m).map(|t| t * g % m).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn monte_carlo_agrees_with_the_exact_oracle() {
        let w = MacChannel::bsc_pair(0.1).unwrap();
        for (seed, m, count, e) in [(0u64, 1, 3u128, 0.02), (1, 2, 2, 0.05), (2, 1, 4, 0.0001)] {
            let lib = build_library(&halves(6, m, rate_for_count(6, count)), seed).unwrap();
            let cfg = eta(e);
            let ex = exact_errors(&lib, &w, 0, m - 1, &cfg).unwrap();
            let mc = estimate_errors(&lib, &w, 0, m - 1, &cfg, 20_000, seed + 10).unwrap();
            for (a, b) in [(ex.err_d, mc.err_d), (ex.err_c, mc.err_c)] {
                assert!((a.mean - b.mean).abs() <= 3.0 * b.std_err.max(1e-4), "{} vs {} ± {}", a.mean, b.mean, b.std_err);
            }
        }
    }

    #[test]
    fn results_do_not_depend_on_the_worker_count() {
        let lib = build_library(&halves(8, 1, 0.25), 3).unwrap();
        let w = MacChannel::bsc_pair(0.1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_errors(&lib, &w, 0, 0, &eta(0.05), 3_000, 7).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn zero_trials_rejected_and_guard_enforced() {
        let lib = build_library(&halves(6, 1, 0.2), 0).unwrap();
        let w = MacChannel::noiseless_pair();
        assert!(estimate_err_d(&lib, &w, 0, 0, &eta(0.1), 0, 0).is_err());
        if !crate::error::guard_overridden() {
            let big = build_library(&halves(16, 1, 0.2), 0).unwrap();
            let noisy = MacChannel::bsc_pair(0.1).unwrap();
            assert!(matches!(exact_errors(&big, &noisy, 0, 0, &eta(0.1)), Err(Error::GuardExceeded { .. })));
            assert!(exact_errors(&big, &w, 0, 0, &eta(0.1)).is_ok());
        }
    }

    fn or_instance() -> (MacChannel, TildeStructure) {
        let half = Kernel::constant_rows(1, &[0.5, 0.5]).unwrap();
        (MacChannel::binary_or(), TildeStructure::new(vec![1.0], half.clone(), half.clone(), half).unwrap())
    }

    #[test]
    fn mixture_path_endpoints() {
        let (w, s) = or_instance();
        assert!(mixture_rate(&w, &s, 0.05, 0.05, 0.0).unwrap() > 0.1);
        assert!((mixture_rate(&w, &s, 0.05, 0.05, 1.0).unwrap() + 0.05).abs() < 1e-12);
        for k in 0..=10 {
            let v = mixture(&v_star(&w, &s).unwrap(), &v_star_star(&w, &s).unwrap(), k as f64 / 10.0).unwrap();
            let t = cthx_terms(&v, &w, 0.05, 0.05).unwrap();
            assert!(t.divergence.abs() < 1e-12 && t.dependence.abs() < 1e-12);
        }
    }

    #[test]
    fn witness_sits_on_the_threshold() {
        let (w, s) = or_instance();
        let wit = proposition2_witness(&w, &s, 0.05, 0.05, 0.1, None).unwrap();
        assert!(wit.feasible);
        assert!(wit.r_value - 0.1 > 0.0 && wit.r_value - 0.1 <= 1e-4);
        assert!(wit.objective_gap < 1e-3);
        assert!(wit.terms.margins.iter().all(|&m| m > 0.1));
        assert!(proposition2_witness(&w, &s, 0.05, 0.05, 0.3, None).is_err());
    }

    #[test]
    fn decay_table_records_targets() {
        let w = MacChannel::bsc_pair(0.05).unwrap();
        let params: Vec<_> = [6, 8].iter().map(|&n| halves(n, 1, 0.25)).collect();
        let cfg = DecayConfig { trials: 10_000, ..Default::default() };
        let t = decay_profile(&params, &w, &eta(0.05), &cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert!(r.target_exponent > 0.0);
            assert_eq!(r.err_d.mode, EstimateMode::Exact);
        }
    }
}
