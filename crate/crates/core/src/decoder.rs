//! Two-stage universal decoder with threshold collision detection.

use serde::{Deserialize, Serialize};

use crate::codebooks::CodebookLibraryPair;
use crate::error::{Error, Result};
use crate::typekit::{multi_information, EmpiricalType, LogTable, Sequence};

/// Stage-1 scores closer than this (bits) count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// How η depends on the blocklength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EtaSchedule {
    /// [`default_eta`] evaluated for the library at hand.
    Default,
    Constant { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub schedule: EtaSchedule,
    /// Scan only codebook pairs `(i, i)`.
    #[serde(default)]
    pub matched_pairs_only: bool,
}

impl DecoderConfig {
    pub fn default_schedule() -> Self {
        Self { schedule: EtaSchedule::Default, matched_pairs_only: false }
    }

    pub fn constant(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("threshold {eta} must be positive and finite")));
        }
        Ok(Self { schedule: EtaSchedule::Constant { eta }, matched_pairs_only: false })
    }

    /// η for this library.
    pub fn eta_for(&self, lib: &CodebookLibraryPair, z_size: usize) -> f64 {
        match self.schedule {
            EtaSchedule::Constant { eta } => eta,
            EtaSchedule::Default => {
                let p = &lib.params;
                default_eta(p.n, [p.u_size(), p.x_size(), p.y_size(), z_size], p.m1(), p.m2())
            }
        }
    }
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self::default_schedule()
    }
}

/// `(|U||X||Y||Z| log2(n+1) + log2(M1 M2)) / sqrt(n)`.
pub fn default_eta(n: usize, alphabet_sizes: [usize; 4], m1: usize, m2: usize) -> f64 {
    let cells: usize = alphabet_sizes.iter().product();
    (cells as f64 * ((n + 1) as f64).log2() + ((m1 * m2) as f64).log2()) / (n as f64).sqrt()
}

/// `α(V) = I_V(X ∧ Y ∧ Z | U)` for a type over `U × X × Y × Z`.
pub fn alpha(v: &EmpiricalType) -> Result<f64> {
    if v.dims().len() != 4 {
        return Err(Error::DimensionMismatch(format!("α needs four axes, got {}", v.dims().len())));
    }
    multi_information(&v.to_distribution(), &[&[1], &[2], &[3]], &[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Message { i: usize, a: usize, j: usize, b: usize },
    Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderOutput {
    pub verdict: Verdict,
    /// Best `α − R1^k − R2^l` over all codeword pairs.
    pub stage1_score: f64,
    /// The three threshold statistics minus η for the stage-1 maximizer;
    /// absent when stage 1 ended in a tie.
    pub margins: Option<[f64; 3]>,
    /// Stage 1 found more than one maximizer.
    pub tie: bool,
    pub eta: f64,
}

/// Decoder bound to one library; reusable across received sequences.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    lib: &'a CodebookLibraryPair,
    z_size: usize,
    eta: f64,
    matched: bool,
    table: LogTable,
    /// `n H(U)`.
    h_u: f64,
    /// `n H(UX)` per codeword.
    h_ux: Vec<Vec<f64>>,
    h_uy: Vec<Vec<f64>>,
    /// Per-symbol position masks when `n ≤ 64`.
    masks: Option<Masks>,
}

#[derive(Debug, Clone)]
struct Masks {
    u: Vec<u64>,
    x: Vec<Vec<Vec<u64>>>,
    y: Vec<Vec<Vec<u64>>>,
}

fn symbol_masks(s: &Sequence) -> Vec<u64> {
    let mut m = vec![0u64; s.alphabet()];
    for (t, &v) in s.symbols().iter().enumerate() {
        m[v] |= 1 << t;
    }
    m
}

struct Stats {
    score: f64,
    margins: [f64; 3],
}

impl<'a> Decoder<'a> {
    pub fn new(lib: &'a CodebookLibraryPair, z_size: usize, cfg: &DecoderConfig) -> Result<Self> {
        if z_size == 0 {
            return Err(Error::InvalidArgument("output alphabet must be nonempty".into()));
        }
        let eta = cfg.eta_for(lib, z_size);
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("threshold {eta} must be finite and nonnegative")));
        }
        if cfg.matched_pairs_only && lib.a.len() != lib.b.len() {
            return Err(Error::InvalidArgument("matched-pair decoding needs equally many codebooks per sender".into()));
        }
        let table = LogTable::new(lib.params.n);
        let h_u = table.n_entropy(&lib.u.type_of().counts().to_vec());
        let pair_entropy = |s: &Sequence| table.n_entropy(&joint_counts(&[&lib.u, s]));
        let h_ux = lib.a.iter().map(|book| book.iter().map(pair_entropy).collect()).collect();
        let h_uy = lib.b.iter().map(|book| book.iter().map(pair_entropy).collect()).collect();
        let masks = (lib.params.n <= 64).then(|| Masks {
            u: symbol_masks(&lib.u),
            x: lib.a.iter().map(|book| book.iter().map(symbol_masks).collect()).collect(),
            y: lib.b.iter().map(|book| book.iter().map(symbol_masks).collect()).collect(),
        });
        Ok(Self { lib, z_size, eta, matched: cfg.matched_pairs_only, table, h_u, h_ux, h_uy, masks })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[cfg(test)]
    fn without_masks(mut self) -> Self {
        self.masks = None;
        self
    }

    pub fn library(&self) -> &CodebookLibraryPair {
        self.lib
    }

    pub fn decode(&self, z: &Sequence) -> Result<DecoderOutput> {
        let p = &self.lib.params;
        if z.len() != p.n {
            return Err(Error::LengthMismatch(z.len(), p.n));
        }
        if z.alphabet() != self.z_size {
            return Err(Error::DimensionMismatch(format!("output alphabet {} but decoder built for {}", z.alphabet(), self.z_size)));
        }
        let u = &self.lib.u;
        let h_uz = self.table.n_entropy(&joint_counts(&[u, z]));
        let h_uxz: Vec<Vec<f64>> =
            self.lib.a.iter().map(|book| book.iter().map(|x| self.table.n_entropy(&joint_counts(&[u, x, z]))).collect()).collect();
        let h_uyz: Vec<Vec<f64>> =
            self.lib.b.iter().map(|book| book.iter().map(|y| self.table.n_entropy(&joint_counts(&[u, y, z]))).collect()).collect();
        let n = p.n as f64;
        let mut best: Option<((usize, usize, usize, usize), Stats)> = None;
        let mut tie = false;
        let z_masks = symbol_masks(z);
        let mut uxz: Vec<u64> = Vec::new();
        let l_n = self.table.l(p.n as u64);
        for (k, book_x) in self.lib.a.iter().enumerate() {
            for (c, x) in book_x.iter().enumerate() {
                if let Some(m) = &self.masks {
                    uxz.clear();
                    for &mu in &m.u {
                        for &mx in &m.x[k][c] {
                            for &mz in &z_masks {
                                let cell = mu & mx & mz;
                                if cell != 0 {
                                    uxz.push(cell);
                                }
                            }
                        }
                    }
                }
                for (l, book_y) in self.lib.b.iter().enumerate() {
                    if self.matched && l != k {
                        continue;
                    }
                    for (d, y) in book_y.iter().enumerate() {
                        let h_all = match &self.masks {
                            Some(m) => {
                                let mut s = 0.0;
                                for &cell in &uxz {
                                    for &my in &m.y[l][d] {
                                        s += self.table.l((cell & my).count_ones() as u64);
                                    }
                                }
                                l_n - s
                            }
                            None => self.table.n_entropy(&joint_counts(&[u, x, y, z])),
                        };
                        let (hx, hy) = (self.h_ux[k][c], self.h_uy[l][d]);
                        let n_alpha = hx + hy + h_uz - 2.0 * self.h_u - h_all;
                        let score = n_alpha / n - p.r1[k] - p.r2[l];
                        match &best {
                            Some((_, s)) if score < s.score - TIE_TOLERANCE => {}
                            Some((_, s)) if score <= s.score + TIE_TOLERANCE => {
                                tie = true;
                            }
                            _ => {
                                tie = false;
                                let ix = (hx + h_uyz[l][d] - self.h_u - h_all) / n;
                                let iy = (hy + h_uxz[k][c] - self.h_u - h_all) / n;
                                let margins = [score - self.eta, ix - p.r1[k] - self.eta, iy - p.r2[l] - self.eta];
                                best = Some(((k, c, l, d), Stats { score, margins }));
                            }
                        }
                    }
                }
            }
        }
        let ((i, a, j, b), stats) = best.expect("libraries are nonempty");
        if tie {
            return Ok(DecoderOutput { verdict: Verdict::Collision, stage1_score: stats.score, margins: None, tie, eta: self.eta });
        }
        let verdict =
            if stats.margins.iter().all(|&m| m > 0.0) { Verdict::Message { i, a, j, b } } else { Verdict::Collision };
        Ok(DecoderOutput { verdict, stage1_score: stats.score, margins: Some(stats.margins), tie, eta: self.eta })
    }
}

/// Flattened joint counts of aligned sequences.
fn joint_counts(seqs: &[&Sequence]) -> Vec<u64> {
    let cells: usize = seqs.iter().map(|s| s.alphabet()).product();
    let mut counts = vec![0u64; cells];
    for t in 0..seqs[0].len() {
        let mut cell = 0;
        for s in seqs {
            cell = cell * s.alphabet() + s.symbols()[t];
        }
        counts[cell] += 1;
    }
    counts
}

/// Decodes one received sequence.
pub fn decode(lib: &CodebookLibraryPair, z: &Sequence, cfg: &DecoderConfig) -> Result<DecoderOutput> {
    Decoder::new(lib, z.alphabet(), cfg)?.decode(z)
}
