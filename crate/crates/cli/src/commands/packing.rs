use serde_json::json;

use racxpt_core::codebooks::{audit_packing, resample_until_packed, resample_until_packed_separated};

use super::Ctx;
use crate::config::PackingConfig;
use crate::error::Result;
use crate::report::{fmt_f, Assertion, Outcome, Table};
use crate::verify;

pub fn run(cfg: &PackingConfig, ctx: &Ctx) -> Result<Outcome> {
    let params = cfg.library.params(cfg.n)?;
    let packed = if cfg.separated {
        resample_until_packed_separated(&params, cfg.max_tries, ctx.seed)?
    } else {
        resample_until_packed(&params, cfg.max_tries, ctx.seed)?
    };
    let report = &packed.report;
    let mut table = Table::new(&["family", "worst_slack", "i", "j", "k", "l", "log2_s", "tuples"]);
    for f in &report.families {
        let [i, j, k, l] = f.worst_indices;
        table.push(vec![
            format!("{:?}", f.family),
            fmt_f(f.worst_slack),
            i.to_string(),
            j.to_string(),
            k.to_string(),
            l.to_string(),
            fmt_f(f.log2_s),
            f.tuples.to_string(),
        ]);
    }
    let assertions = vec![
        Assertion::new(
            "packing bounds hold",
            report.passes,
            format!("δ′ = {:.4}, log2 S = {:.3} (target {:.3})", report.delta_prime, report.log2_s, 1.0 + report.log2_expectation_bound),
        ),
        Assertion::new("within the try budget", packed.tries <= cfg.max_tries, format!("{} of {} tries", packed.tries, cfg.max_tries)),
    ];
    let mut verification = Vec::new();
    if ctx.verify {
        verification = verify::library(&packed.library);
        let again = audit_packing(&packed.library)?;
        verification.push(Assertion::new(
            "verify:re-audit",
            again.passes && (again.log2_s - report.log2_s).abs() <= 1e-12,
            format!("log2 S = {:.6}", again.log2_s),
        ));
    }
    Ok(Outcome {
        result: json!({ "tries": packed.tries, "report": report, "library": "library.json" }),
        table: Some(table),
        assertions,
        verification,
        attachments: vec![("library.json".into(), serde_json::to_value(&packed.library)?)],
    })
}
