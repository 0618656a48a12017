use serde_json::json;

use racxpt_core::codebooks::CodebookLibraryPair;
use racxpt_core::decoder::{decode, Verdict};
use racxpt_core::typekit::Sequence;

use super::Ctx;
use crate::config::{self, DecodeConfig, DecodeInput};
use crate::error::{CliError, Result};
use crate::report::{Assertion, Outcome};
use crate::verify;

pub fn run(cfg: &DecodeConfig, ctx: &Ctx) -> Result<Outcome> {
    let w = cfg.channel.resolve()?;
    let lib: CodebookLibraryPair = config::load(&ctx.base.join(&cfg.library))?;
    let (z, sent) = match &cfg.input {
        DecodeInput::Output { z } => (Sequence::new(w.z_size(), z.clone())?, None),
        DecodeInput::Send { i, a, j, b } => {
            let x = lib.a.get(*i).and_then(|c| c.get(*a));
            let y = lib.b.get(*j).and_then(|c| c.get(*b));
            let (Some(x), Some(y)) = (x, y) else {
                return Err(CliError::Invalid(format!("input: no codeword pair ({i}, {a}), ({j}, {b}) in the library")));
            };
            (w.sample_output(x, y, ctx.seed)?, Some(Verdict::Message { i: *i, a: *a, j: *j, b: *b }))
        }
    };
    if z.len() != lib.params.n {
        return Err(CliError::Invalid(format!("input: z has length {}, the library blocklength is {}", z.len(), lib.params.n)));
    }
    let out = decode(&lib, &z, &cfg.decoder)?;
    let correct = sent.map(|s| s == out.verdict);
    let verification = if ctx.verify {
        let mut v = verify::channel(&w, ctx.seed);
        v.extend(verify::library(&lib));
        v.push(Assertion::new(
            "verify:channel-matches-library",
            w.x_size() == lib.params.x_size() && w.y_size() == lib.params.y_size(),
            format!("channel inputs {}x{}", w.x_size(), w.y_size()),
        ));
        v
    } else {
        Vec::new()
    };
    Ok(Outcome {
        result: json!({ "z": z.symbols(), "sent": sent, "output": out, "correct": correct }),
        verification,
        ..Default::default()
    })
}
