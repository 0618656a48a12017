//! Invariant checks run on loaded objects under `--verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use racxpt_core::codebooks::{codebook_size, CodebookLibraryPair, LibraryParams};
use racxpt_core::mac::{InputStructure, MacChannel, Pentagon};
use racxpt_core::typekit::{joint_type_of, Sequence};

use crate::report::Assertion;

fn random_sequence(size: usize, n: usize, rng: &mut ChaCha20Rng) -> Sequence {
    Sequence::new(size, (0..n).map(|_| rng.random_range(0..size)).collect()).expect("symbols in range")
}

/// Type identity for the n-fold channel law and pentagon ordering.
pub fn channel(w: &MacChannel, seed: u64) -> Vec<Assertion> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for _ in 0..16 {
        let x = random_sequence(w.x_size(), 8, &mut rng);
        let y = random_sequence(w.y_size(), 8, &mut rng);
        let z = random_sequence(w.z_size(), 8, &mut rng);
        match (w.nfold_log_prob(&x, &y, &z), w.nfold_log_prob_via_type(&x, &y, &z)) {
            (Ok(a), Ok(b)) if a.is_finite() || b.is_finite() => worst = worst.max((a - b).abs()),
            (Ok(_), Ok(_)) => {}
            (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
        }
    }
    let mut out = vec![match failure {
        Some(e) => Assertion::new("verify:channel-type-identity", false, e),
        None => Assertion::new("verify:channel-type-identity", worst <= 1e-9, format!("max deviation {worst:.2e} bits")),
    }];
    let s = InputStructure::uniform(w.x_size(), w.y_size());
    out.push(match Pentagon::of(w, &s) {
        Ok(p) => {
            let ok = p.r1_max.max(p.r2_max) <= p.sum_max + 1e-9 && p.sum_max <= p.r1_max + p.r2_max + 1e-9;
            Assertion::new(
                "verify:pentagon-ordering",
                ok,
                format!("uniform inputs: R1 ≤ {:.4}, R2 ≤ {:.4}, R1 + R2 ≤ {:.4}", p.r1_max, p.r2_max, p.sum_max),
            )
        }
        Err(e) => Assertion::new("verify:pentagon-ordering", false, e.to_string()),
    });
    out
}

pub fn library_params(p: &LibraryParams) -> Vec<Assertion> {
    let mut out = vec![match p.validate() {
        Ok(()) => Assertion::new("verify:library-params", true, format!("n = {}, M1 = {}, M2 = {}", p.n, p.m1(), p.m2())),
        Err(e) => Assertion::new("verify:library-params", false, e.to_string()),
    }];
    let mut bad = Vec::new();
    for i in 0..p.m1() {
        for j in 0..p.m2() {
            if let Err(e) = p.structure(i, j) {
                bad.push(format!("({i}, {j}): {e}"));
            }
        }
    }
    out.push(Assertion::new("verify:input-structures", bad.is_empty(), bad.join("; ")));
    out
}

/// Lengths, compositions and sizes of every codebook.
pub fn library(lib: &CodebookLibraryPair) -> Vec<Assertion> {
    let mut out = library_params(&lib.params);
    let p = &lib.params;
    let mut bad = Vec::new();
    for (sender, books, types, rates) in [(1, &lib.a, &p.x_types, &p.r1), (2, &lib.b, &p.y_types, &p.r2)] {
        for (i, book) in books.iter().enumerate() {
            if book.len() as u128 != codebook_size(p.n, rates[i]) {
                bad.push(format!("sender {sender} codebook {i} holds {} codewords", book.len()));
            }
            for (a, x) in book.iter().enumerate() {
                match joint_type_of(&[&lib.u, x]) {
                    Ok(t) if t == types[i] => {}
                    _ => bad.push(format!("sender {sender} codeword ({i}, {a}) has the wrong composition")),
                }
            }
        }
    }
    out.push(Assertion::new("verify:codebooks", bad.is_empty(), bad.join("; ")));
    out
}
