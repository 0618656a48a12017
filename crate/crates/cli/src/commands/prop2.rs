use serde_json::json;

use racxpt_core::exponents::TildeStructure;
use racxpt_core::simulator::proposition2_witness;

use super::Ctx;
use crate::config::Prop2Config;
use crate::error::Result;
use crate::report::{Assertion, Outcome};
use crate::verify;

pub fn run(cfg: &Prop2Config, ctx: &Ctx) -> Result<Outcome> {
    let w = cfg.channel.resolve()?;
    let s = TildeStructure::new(cfg.p_u.clone(), cfg.p_x.clone(), cfg.p_x.clone(), cfg.p_y.clone())?;
    let wit = proposition2_witness(&w, &s, cfg.r1k, cfg.r2j, cfg.eta, cfg.numerical.then_some(&cfg.ecthx))?;
    let mut assertions = vec![
        Assertion::new("witness feasible", wit.feasible, format!("margins {:?} against η = {}", wit.terms.margins, cfg.eta)),
        Assertion::new(
            "objective at η",
            wit.objective_gap <= cfg.objective_tolerance,
            format!("|objective - η| = {:.2e} (tol {:.0e})", wit.objective_gap, cfg.objective_tolerance),
        ),
    ];
    if let Some(v) = wit.ecthx_value {
        assertions.push(Assertion::new(
            "numerical exponent near η",
            v <= cfg.eta + cfg.ecthx_margin,
            format!("ECTHX = {v:.5} (≤ {})", cfg.eta + cfg.ecthx_margin),
        ));
    }
    Ok(Outcome {
        result: json!({ "witness": wit }),
        assertions,
        verification: if ctx.verify { verify::channel(&w, ctx.seed) } else { Vec::new() },
        ..Default::default()
    })
}
