//! Source reliability `e(R, Q) = min { D(P || Q) : H(P) ≥ R }`.

use crate::error::{Error, Result};
use crate::typekit::{divergence, entropy_of, JointDistribution};

/// Member of the tilted family `P_s ∝ Q^s` on `supp Q`.
fn tilted(q: &[f64], s: f64) -> Vec<f64> {
    let max_ln = q.iter().filter(|&&p| p > 0.0).map(|p| p.ln()).fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = q.iter().map(|&x| if x > 0.0 { (s * (x.ln() - max_ln)).exp() } else { 0.0 }).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// `e(R, Q)` in bits.
///
/// The minimizer lies on the tilted family between `Q` (`s = 1`) and the
/// uniform law on its support (`s = 0`); `s` is found by bisection on the
/// entropy, which decreases along the family. Rates above
/// `log |supp Q|` are unreachable and give `+∞`.
pub fn source_reliability(rate: f64, q: &JointDistribution) -> Result<f64> {
    let log_size = (q.len() as f64).log2();
    if !(rate >= 0.0) || rate > log_size + 1e-12 {
        return Err(Error::InvalidArgument(format!("rate {rate} outside [0, {log_size}]")));
    }
    let probs = q.probs();
    if rate <= entropy_of(probs) {
        return Ok(0.0);
    }
    let support = probs.iter().filter(|&&p| p > 0.0).count();
    let log_support = (support as f64).log2();
    if rate > log_support + 1e-12 {
        return Ok(f64::INFINITY);
    }
    if rate >= log_support {
        return Ok(divergence(&tilted(probs, 0.0), probs));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy_of(&tilted(probs, mid)) >= rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(divergence(&tilted(probs, lo), probs).max(0.0))
}
