use serde_json::json;

use racxpt_core::codebooks::{resample_until_packed, resample_until_packed_separated};
use racxpt_core::mac::Pentagon;
use racxpt_core::simulator::{decay_profile, estimate_errors, DecayConfig, EstimateMode};

use super::Ctx;
use crate::config::SimulateConfig;
use crate::error::{CliError, Result};
use crate::report::{fmt_f, Assertion, Outcome, Table};
use crate::verify;

pub fn run(cfg: &SimulateConfig, ctx: &Ctx) -> Result<Outcome> {
    if cfg.n.is_empty() {
        return Err(CliError::Invalid("n: at least one blocklength is required".into()));
    }
    let w = cfg.channel.resolve()?;
    let params = cfg.n.iter().map(|&n| cfg.library.params(n)).collect::<Result<Vec<_>>>()?;
    let (i, j) = cfg.pair;
    let decay = DecayConfig {
        pair: cfg.pair,
        trials: cfg.trials,
        max_tries: cfg.max_tries,
        seed: ctx.seed,
        monte_carlo_only: cfg.monte_carlo_only,
        separated: cfg.separated,
        solver: cfg.solver.clone(),
    };
    let table_rows = decay_profile(&params, &w, &cfg.decoder, &decay)?;

    let mut table = Table::new(&[
        "n", "r1", "r2", "interior", "mode", "err_d", "err_d_se", "err_c", "err_c_se", "empirical_exponent", "target_exponent",
        "packing_tries",
    ]);
    let mut interior = Vec::new();
    for (row, p) in table_rows.rows.iter().zip(&params) {
        let pent = Pentagon::of(&w, &p.structure(i, j)?)?;
        let inside = pent.contains_interior(row.rates, 0.0);
        interior.push(inside);
        let mode = if row.err_d.mode == EstimateMode::Exact { "exact" } else { "monte_carlo" };
        table.push(vec![
            row.n.to_string(),
            fmt_f(row.rates.r1),
            fmt_f(row.rates.r2),
            inside.to_string(),
            mode.to_string(),
            fmt_f(row.err_d.mean),
            fmt_f(row.err_d.std_err),
            fmt_f(row.err_c.mean),
            fmt_f(row.err_c.std_err),
            fmt_f(row.empirical_exponent),
            fmt_f(row.target_exponent),
            row.packing_tries.to_string(),
        ]);
    }

    let rows = &table_rows.rows;
    let mut assertions = vec![Assertion::new(
        "all blocklengths evaluated",
        rows.len() == params.len(),
        table_rows.warnings.join("; "),
    )];
    let e = &cfg.expect;
    if e.err_d_zero {
        let worst = rows.iter().map(|r| r.err_d.mean).fold(0.0, f64::max);
        assertions.push(Assertion::new("Err_d = 0", worst == 0.0, format!("largest Err_d {worst:.3e}")));
    }
    if let Some(s) = e.exponent_nondecreasing_within {
        let text: Vec<String> = rows.iter().map(|r| format!("n={}: {:.4}", r.n, r.empirical_exponent)).collect();
        assertions.push(Assertion::new(
            "empirical exponent nondecreasing",
            table_rows.nondecreasing_within(s),
            format!("within {s} s.e.: {}", text.join(", ")),
        ));
    }
    if let Some(s) = e.err_c_nonincreasing_within {
        let ok = rows.windows(2).all(|p| {
            let band = s * (p[0].err_c.std_err.powi(2) + p[1].err_c.std_err.powi(2)).sqrt();
            p[1].err_c.mean <= p[0].err_c.mean + band
        });
        let text: Vec<String> = rows.iter().map(|r| format!("n={}: {:.3e}", r.n, r.err_c.mean)).collect();
        assertions.push(Assertion::new("Err_c nonincreasing", ok, format!("within {s} s.e.: {}", text.join(", "))));
    }
    if let Some(b) = e.err_c_last_below {
        let last = rows.last().map(|r| r.err_c.mean).unwrap_or(f64::NAN);
        assertions.push(Assertion::new("final Err_c below bound", last < b, format!("{last:.3e} < {b}")));
    }
    if let Some(trials) = e.monte_carlo_agreement {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (row, p) in rows.iter().zip(&params) {
            if row.err_d.mode != EstimateMode::Exact {
                continue;
            }
            let packed = if cfg.separated {
                resample_until_packed_separated(p, cfg.max_tries, ctx.seed)?
            } else {
                resample_until_packed(p, cfg.max_tries, ctx.seed)?
            };
            let mc = estimate_errors(&packed.library, &w, i, j, &cfg.decoder, trials, ctx.seed)?;
            let dev = (mc.err_d.mean - row.err_d.mean).abs();
            ok &= dev <= 3.0 * mc.err_d.std_err;
            worst = worst.max(dev);
        }
        assertions.push(Assertion::new(
            "Monte Carlo agrees with exact",
            ok,
            format!("{trials} trials, largest |MC - exact| = {worst:.3e} (3 s.e. band)"),
        ));
    }

    let verification = if ctx.verify {
        let mut v = verify::channel(&w, ctx.seed);
        for p in &params {
            v.extend(verify::library_params(p));
        }
        v
    } else {
        Vec::new()
    };
    Ok(Outcome {
        result: json!({ "table": table_rows, "interior": interior }),
        table: Some(table),
        assertions,
        verification,
        ..Default::default()
    })
}
