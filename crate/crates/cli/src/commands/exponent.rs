use serde_json::json;

use racxpt_core::exponents::{exponent_lh, Bracket, JsccAnalysis, SolverConfig};
use racxpt_core::mac::{InputStructure, MacChannel, Pentagon, RatePair};
use racxpt_core::typekit::JointDistribution;

use super::Ctx;
use crate::config::{Dichotomy, ExponentConfig, ExponentTask, RateSweep};
use crate::error::{CliError, Result};
use crate::report::{fmt_f, Assertion, Outcome, Table};
use crate::verify;

fn sweep_points(s: &RateSweep) -> Vec<[f64; 2]> {
    let at = |r: [f64; 2], k: usize| {
        if s.points < 2 {
            r[0]
        } else {
            r[0] + (r[1] - r[0]) * k as f64 / (s.points - 1) as f64
        }
    };
    (0..s.points).flat_map(|a| (0..s.points).map(move |b| [at(s.r1, a), at(s.r2, b)])).collect()
}

fn region(p: &Pentagon, r: RatePair, margin: f64) -> &'static str {
    if p.contains_interior(r, margin) {
        "interior"
    } else if p.clearly_outside(r, margin) {
        "exterior"
    } else {
        "boundary"
    }
}

fn bracket_name(b: Bracket) -> String {
    format!("{b:?}").to_lowercase()
}

fn lh(
    w: &MacChannel,
    s: &InputStructure,
    rates: &[[f64; 2]],
    solver: &SolverConfig,
    dichotomy: Option<&Dichotomy>,
) -> Result<Outcome> {
    let pent = Pentagon::of(w, s)?;
    let margin = dichotomy.map(|d| d.margin).unwrap_or(0.0);
    let mut table = Table::new(&["r1", "r2", "region", "e_x", "e_y", "e_xy", "e_lh", "lower_bound", "active"]);
    let mut rows = Vec::new();
    let (mut worst_neg, mut worst_gap): (f64, f64) = (0.0, 0.0);
    let (mut misses_in, mut misses_out) = (Vec::new(), Vec::new());
    for &[r1, r2] in rates {
        let r = RatePair::new(r1, r2)?;
        let e = exponent_lh(r, w, s, solver)?;
        let lower = e.x.dual_bound.min(e.y.dual_bound).min(e.xy.dual_bound);
        worst_neg = worst_neg.min(e.value);
        for m in [&e.x, &e.y, &e.xy] {
            worst_gap = worst_gap.max(m.dual_bound - m.value);
        }
        let reg = region(&pent, r, margin);
        if let Some(d) = dichotomy {
            match reg {
                "interior" if e.value <= d.threshold => misses_in.push(format!("({r1}, {r2}): {:.2e}", e.value)),
                "exterior" if e.value > d.threshold => misses_out.push(format!("({r1}, {r2}): {:.2e}", e.value)),
                _ => {}
            }
        }
        table.push(vec![
            format!("{r1:.6}"),
            format!("{r2:.6}"),
            reg.to_string(),
            fmt_f(e.x.value),
            fmt_f(e.y.value),
            fmt_f(e.xy.value),
            fmt_f(e.value),
            fmt_f(lower),
            bracket_name(e.active),
        ]);
        rows.push(json!({ "rates": r, "region": reg, "exponent": e }));
    }
    let slack = 10.0 * solver.tol;
    let mut assertions = vec![
        Assertion::new("nonnegative", worst_neg >= -slack, format!("smallest value {worst_neg:.2e}")),
        Assertion::new(
            "dual bound below value",
            worst_gap <= slack,
            format!("largest dual bound excess {worst_gap:.2e} (tol {slack:.0e})"),
        ),
    ];
    if let Some(d) = dichotomy {
        assertions.push(Assertion::new(
            "positive on the interior",
            misses_in.is_empty(),
            format!("threshold {}, margin {}; misses: {}", d.threshold, d.margin, misses_in.join(", ")),
        ));
        assertions.push(Assertion::new(
            "vanishing on the exterior",
            misses_out.is_empty(),
            format!("threshold {}, margin {}; misses: {}", d.threshold, d.margin, misses_out.join(", ")),
        ));
    }
    Ok(Outcome { result: json!({ "pentagon": pent, "points": rows }), table: Some(table), assertions, ..Default::default() })
}

pub fn run(cfg: &ExponentConfig, ctx: &Ctx) -> Result<Outcome> {
    let w = cfg.channel.resolve()?;
    let mut out = match &cfg.task {
        ExponentTask::Lh { structure, rates, sweep, solver, dichotomy } => {
            let s = match structure {
                Some(s) => s.resolve()?,
                None => InputStructure::uniform(w.x_size(), w.y_size()),
            };
            let mut points = rates.clone();
            if let Some(sw) = sweep {
                points.extend(sweep_points(sw));
            }
            if points.is_empty() {
                return Err(CliError::Invalid("task: give `rates` or a `sweep`".into()));
            }
            lh(&w, &s, &points, solver, dichotomy.as_ref())?
        }
        ExponentTask::Jscc { q1, q2, aux, witness_k, ej_tolerance, equivalent_tolerance } => {
            let q1 = JointDistribution::from_vec(q1.clone())?;
            let q2 = JointDistribution::from_vec(q2.clone())?;
            let a = JsccAnalysis::new(&q1, &q2, &w, aux)?;
            let p = a.proposition1();
            let eq = a.equivalent_form_report(&q1, &q2, &w, *witness_k, &aux.solver)?;
            let mut table = Table::new(&["ej", "es_lh", "ej_minus_es_lh", "equivalent_form", "ej0_witness", "difference"]);
            table.push(vec![
                fmt_f(p.ej),
                fmt_f(p.es_lh),
                fmt_f(p.ej - p.es_lh),
                fmt_f(eq.equivalent.value),
                fmt_f(eq.witness.value),
                fmt_f(eq.difference),
            ]);
            let assertions = vec![
                Assertion::new(
                    "ej at least es_lh",
                    p.ej - p.es_lh >= -ej_tolerance,
                    format!("ej - es_lh = {:.2e} (tol -{ej_tolerance:.0e})", p.ej - p.es_lh),
                ),
                Assertion::new(
                    "equivalent form of ej0",
                    eq.difference <= *equivalent_tolerance,
                    format!("difference {:.4} (tol {equivalent_tolerance})", eq.difference),
                ),
            ];
            Outcome {
                result: json!({ "proposition1": p, "equivalent_form": eq, "best_constant": a.ej_best_constant() }),
                table: Some(table),
                assertions,
                ..Default::default()
            }
        }
    };
    if ctx.verify {
        out.verification = verify::channel(&w, ctx.seed);
    }
    Ok(out)
}
