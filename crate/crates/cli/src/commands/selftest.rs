//! Fast invariant suites across all modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use racxpt_core::codebooks::build_separated_library;
use racxpt_core::codebooks::LibraryParams;
use racxpt_core::decoder::{DecoderConfig, Verdict};
use racxpt_core::exponents::{exponent_lh, RateGrid, RateToCompositionMap, SolverConfig};
use racxpt_core::jscc::{build_classical, PackingPolicy, SourceSpec};
use racxpt_core::mac::{InputStructure, MacChannel, RatePair};
use racxpt_core::simulator::exact_errors;
use racxpt_core::typekit::{
    divergence, entropy_of, enumerate_types, log2_type_class_size, multi_info_partition_identity_residual, random_joint,
    random_simplex_point, smallest_member, EmpiricalType, Kernel, Sequence,
};

use super::Ctx;
use crate::config::SelftestConfig;
use crate::error::Result;
use crate::report::{Assertion, Outcome, Table};

type Check = racxpt_core::Result<Assertion>;

fn partition_identity(joints: usize, seed: u64) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..joints {
        let vars = 2 + t % 3;
        let dims: Vec<usize> = (0..vars + 1).map(|_| rng.random_range(1..=3)).collect();
        let p = random_joint(&dims, &mut rng);
        let groups: Vec<Vec<usize>> = (0..vars).map(|g| vec![g]).collect();
        let refs: Vec<&[usize]> = groups.iter().map(|g| g.as_slice()).collect();
        let split = 1 + rng.random_range(0..vars - 1);
        let (i, j): (Vec<usize>, Vec<usize>) = ((0..split).collect(), (split..vars).collect());
        let r = multi_info_partition_identity_residual(&p, &refs, &i, &j, &[vars])?;
        worst = worst.max(r.abs());
    }
    Ok(Assertion::new("multi-information partition identity", worst <= 1e-10, format!("{joints} joints, max residual {worst:.2e}")))
}

/// Sandwich bounds on class sizes and `Q^n(x) = 2^{-n(H(P) + D(P||Q))}`.
fn type_facts(max_n: usize, seed: u64) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut bad, mut checked, mut worst): (Vec<String>, usize, f64) = (Vec::new(), 0, 0.0);
    for size in [2usize, 3] {
        let q = random_simplex_point(size, &mut rng);
        for n in 1..=max_n {
            for t in enumerate_types(size, n as u64)? {
                let p: Vec<f64> = t.counts().iter().map(|&c| c as f64 / n as f64).collect();
                let nh = n as f64 * entropy_of(&p);
                let log_size = log2_type_class_size(&t);
                let lower = nh - size as f64 * ((n + 1) as f64).log2();
                if log_size > nh + 1e-9 || log_size < lower - 1e-9 {
                    bad.push(format!("{:?}", t.counts()));
                }
                let x = smallest_member(t.counts());
                let direct: f64 = x.iter().map(|&s| q[s].log2()).sum();
                let via_type = -(n as f64) * (entropy_of(&p) + divergence(&p, &q));
                worst = worst.max((direct - via_type).abs());
                checked += 1;
            }
        }
    }
    Ok(Assertion::new(
        "type class sandwich and probability identity",
        bad.is_empty() && worst <= 1e-9,
        format!("{checked} types, max deviation {worst:.2e} bits; out of bounds: {}", bad.join(" ")),
    ))
}

fn exponent_dichotomy() -> Check {
    let w = MacChannel::noiseless_pair();
    let s = InputStructure::uniform(2, 2);
    let cfg = SolverConfig::default();
    let inside = exponent_lh(RatePair::new(0.3, 0.3)?, &w, &s, &cfg)?.value;
    let outside = exponent_lh(RatePair::new(1.2, 0.9)?, &w, &s, &cfg)?.value;
    Ok(Assertion::new(
        "exponent positive inside, zero outside",
        inside > 1e-3 && outside.abs() <= 1e-6,
        format!("noiseless pair: E(0.3, 0.3) = {inside:.4}, E(1.2, 0.9) = {outside:.1e}"),
    ))
}

fn noiseless_decoding() -> Check {
    let u = EmpiricalType::new(vec![1], vec![6])?;
    let t = EmpiricalType::new(vec![1, 2], vec![3, 3])?;
    let r = vec![4f64.log2() / 6.0];
    let params = LibraryParams::new(6, u, vec![t.clone()], vec![t], r.clone(), r)?;
    let lib = build_separated_library(&params, 500, 6)?;
    let e = exact_errors(&lib, &MacChannel::noiseless_pair(), 0, 0, &DecoderConfig::constant(0.05)?)?;
    Ok(Assertion::new("noiseless exact decoding", e.err_d.mean == 0.0, format!("n = 6, N = 4, exact Err_d = {}", e.err_d.mean)))
}

fn jscc_round_trip() -> Check {
    let q = SourceSpec::bernoulli(0.2)?;
    let grid = RateGrid::new(2, 17)?;
    let g = RateToCompositionMap::constant(grid, Kernel::constant_rows(1, &[0.5, 0.5])?);
    let w = MacChannel::noiseless_pair();
    let code = build_classical(&q, &q, &w, &[1.0], &g, &g, 4, 0, PackingPolicy::Skip)?;
    let mut failures = 0;
    let mut count = 0;
    for a in 0..16usize {
        for b in 0..16usize {
            let s1 = Sequence::new(2, (0..4).map(|k| (a >> k) & 1).collect())?;
            let s2 = Sequence::new(2, (0..4).map(|k| (b >> k) & 1).collect())?;
            let c = code.encode(&s1, &s2)?;
            let v = Verdict::Message { i: c.i, a: c.a, j: c.j, b: c.b };
            failures += (code.decode_verdict(&v)? != Some((s1, s2))) as usize;
            count += 1;
        }
    }
    Ok(Assertion::new("source encoding round trip", failures == 0, format!("{count} source pairs at n = 4, {failures} mismatches")))
}

pub fn run(cfg: &SelftestConfig, ctx: &Ctx) -> Result<Outcome> {
    let checks: Vec<(&str, Check)> = vec![
        ("typekit", partition_identity(cfg.partition_joints, ctx.seed)),
        ("typekit", type_facts(cfg.type_max_n, ctx.seed)),
        ("exponents", exponent_dichotomy()),
        ("rac_decoder", noiseless_decoding()),
        ("jscc", jscc_round_trip()),
    ];
    let mut table = Table::new(&["module", "check", "passed", "detail"]);
    let mut assertions = Vec::new();
    for (module, c) in checks {
        let a = c.unwrap_or_else(|e| Assertion::new("error", false, e.to_string()));
        table.push(vec![module.to_string(), a.name.clone(), a.passed.to_string(), a.detail.clone()]);
        assertions.push(a);
    }
    Ok(Outcome { result: json!({ "checks": assertions.len() }), table: Some(table), assertions, ..Default::default() })
}
