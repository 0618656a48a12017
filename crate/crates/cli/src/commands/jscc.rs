use std::collections::BTreeMap;

use serde_json::json;

use racxpt_core::exponents::{PairCompositionMap, RateGrid, RateToCompositionMap};
use racxpt_core::jscc::{build, end_to_end_exact, jscc_error, Compositions, JsccEvaluation, JsccMode, JsccSetup, SourceSpec};
use racxpt_core::typekit::EmpiricalType;

use super::Ctx;
use crate::config::{CompositionSpec, EvalSpec, JsccConfig, MapSpec};
use crate::error::{CliError, Result};
use crate::report::{fmt_f, Assertion, Outcome, Table};
use crate::verify;

fn single_map(grid: RateGrid, m: &MapSpec) -> Result<RateToCompositionMap> {
    Ok(match m {
        MapSpec::Constant { kernel } => RateToCompositionMap::constant(grid, kernel.clone()),
        MapSpec::Table { kernels, assignment } => RateToCompositionMap::new(grid, kernels.clone(), assignment.clone())?,
    })
}

fn pair_map(g1: RateGrid, g2: RateGrid, m: &MapSpec) -> Result<PairCompositionMap> {
    Ok(match m {
        MapSpec::Constant { kernel } => PairCompositionMap::from_first(&RateToCompositionMap::constant(g1, kernel.clone()), g2),
        MapSpec::Table { kernels, assignment } => PairCompositionMap::new(g1, g2, kernels.clone(), assignment.clone())?,
    })
}

pub fn setup(cfg: &JsccConfig) -> Result<JsccSetup> {
    let q1 = SourceSpec::from_probs(cfg.q1.clone())?;
    let q2 = SourceSpec::from_probs(cfg.q2.clone())?;
    let g1 = RateGrid::new(q1.alphabet(), cfg.grid_points)?;
    let g2 = RateGrid::new(q2.alphabet(), cfg.grid_points)?;
    let compositions = match &cfg.compositions {
        CompositionSpec::Classical { g1: a, g2: b } => {
            Compositions::Classical { g1: single_map(g1, a)?, g2: single_map(g2, b)? }
        }
        CompositionSpec::TypeInformed { g1: a, g2: b } => {
            Compositions::TypeInformed { g1: pair_map(g1, g2, a)?, g2: pair_map(g1, g2, b)? }
        }
    };
    Ok(JsccSetup { q1, q2, p_u: cfg.p_u.clone(), compositions })
}

fn class_label(t1: &EmpiricalType, t2: &EmpiricalType) -> String {
    format!("{:?}x{:?}", t1.counts(), t2.counts())
}

pub fn run(cfg: &JsccConfig, ctx: &Ctx) -> Result<Outcome> {
    if cfg.n.is_empty() || cfg.codes == 0 {
        return Err(CliError::Invalid("n and codes must be nonempty".into()));
    }
    if cfg.evaluation.len() != 1 && cfg.evaluation.len() != cfg.n.len() {
        return Err(CliError::Invalid(format!(
            "evaluation: give one entry or one per blocklength ({}), got {}",
            cfg.n.len(),
            cfg.evaluation.len()
        )));
    }
    let w = cfg.channel.resolve()?;
    let setup = setup(cfg)?;
    let seeds: Vec<u64> = (0..cfg.codes as u64).map(|c| ctx.seed.wrapping_add(c)).collect();
    let kind = match setup.compositions.mode() {
        JsccMode::Classical => "Ej",
        JsccMode::TypeInformed => "Ej0",
    };
    let target = if cfg.target { Some(setup.target_exponent(&w, &cfg.solver)?) } else { None };

    let mut table = Table::new(&["n", "codes", "total", "std_err", "spread", "dominant", "target_kind", "target_exponent"]);
    let mut rows = Vec::new();
    let mut means = Vec::new();
    let mut verification = if ctx.verify { verify::channel(&w, ctx.seed) } else { Vec::new() };
    for (idx, &n) in cfg.n.iter().enumerate() {
        let mode = match cfg.evaluation[if cfg.evaluation.len() == 1 { 0 } else { idx }] {
            EvalSpec::Exact => JsccEvaluation::Exact,
            EvalSpec::MonteCarlo { trials } => JsccEvaluation::MonteCarlo { trials, seed: ctx.seed },
        };
        let mut totals = Vec::new();
        let mut shares: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut labels = BTreeMap::new();
        let mut audited = 0;
        for &seed in &seeds {
            let code = build(setup.clone(), &w, n, seed, cfg.packing)?;
            if ctx.verify && seed == seeds[0] {
                verification.extend(verify::library(&code.library));
            }
            audited += code.audited as usize;
            let rep = jscc_error(&code, &w, &cfg.decoder, mode)?;
            for c in &rep.classes {
                *shares.entry((c.k, c.l)).or_default() += c.contribution / seeds.len() as f64;
                labels.entry((c.k, c.l)).or_insert_with(|| class_label(&code.types1[c.k], &code.types2[c.l]));
            }
            totals.push(rep.total);
        }
        let l = seeds.len() as f64;
        let mean = totals.iter().map(|t| t.mean).sum::<f64>() / l;
        let std_err = totals.iter().map(|t| t.std_err.powi(2)).sum::<f64>().sqrt() / l;
        let spread = if seeds.len() > 1 {
            (totals.iter().map(|t| (t.mean - mean).powi(2)).sum::<f64>() / (l - 1.0) / l).sqrt()
        } else {
            0.0
        };
        let mut ranked: Vec<_> = shares.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(cfg.dominant);
        let dominant: Vec<String> = ranked.iter().map(|(kl, v)| format!("{}:{v:.3e}", labels[kl])).collect();
        table.push(vec![
            n.to_string(),
            seeds.len().to_string(),
            fmt_f(mean),
            fmt_f(std_err),
            fmt_f(spread),
            dominant.join("; "),
            kind.to_string(),
            target.as_ref().map(|t| fmt_f(t.value)).unwrap_or_default(),
        ]);
        rows.push(json!({
            "n": n,
            "evaluation": mode,
            "totals": totals,
            "mean": mean,
            "std_err": std_err,
            "spread": spread,
            "audited": audited,
            "dominant": ranked.iter().map(|(kl, v)| json!({ "k": kl.0, "l": kl.1, "classes": labels[kl], "contribution": v })).collect::<Vec<_>>(),
        }));
        means.push(mean);
    }

    let mut assertions = Vec::new();
    if cfg.expect.total_strictly_decreasing {
        let text: Vec<String> = cfg.n.iter().zip(&means).map(|(n, m)| format!("n={n}: {m:.4}")).collect();
        assertions.push(Assertion::new(
            "total error strictly decreasing",
            means.windows(2).all(|p| p[1] < p[0]),
            text.join(", "),
        ));
    }
    if let Some(d) = &cfg.expect.decomposition_check {
        let mut worst: f64 = 0.0;
        for c in 0..d.codes as u64 {
            let code = build(setup.clone(), &w, d.n, ctx.seed.wrapping_add(c), cfg.packing)?;
            let via_classes = jscc_error(&code, &w, &cfg.decoder, JsccEvaluation::Exact)?.total.mean;
            worst = worst.max((via_classes - end_to_end_exact(&code, &w, &cfg.decoder)?).abs());
        }
        assertions.push(Assertion::new(
            "decomposition matches enumeration",
            worst <= 1e-12,
            format!("n = {}, {} codes, max difference {worst:.1e} (tol 1e-12)", d.n, d.codes),
        ));
    }
    Ok(Outcome {
        result: json!({ "setup": setup, "seeds": seeds, "target_kind": kind, "target": target, "rows": rows }),
        table: Some(table),
        assertions,
        verification,
        ..Default::default()
    })
}
