//! Joint source-channel exponents: rate grids, rate-to-composition maps and
//! the `Ej`, `Ej0`, `Es_LH` compositions over sampled auxiliary structures.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lh::LhProfile;
use super::solver::SolverConfig;
use super::source::source_reliability;
use crate::error::{Error, Result};
use crate::mac::{sample_input_structures, InputStructure, MacChannel, RatePair, MAX_AUX_U};
use crate::typekit::{JointDistribution, Kernel};

pub const DEFAULT_GRID_POINTS: usize = 64;

/// Uniform grid `R_k = k log|S| / (G - 1)`, `k = 0..G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub log_size: f64,
    pub points: usize,
}

impl RateGrid {
    pub fn new(alphabet_size: usize, points: usize) -> Result<Self> {
        if alphabet_size == 0 || points < 2 {
            return Err(Error::InvalidArgument(format!(
                "rate grid needs a nonempty alphabet and at least 2 points (got {alphabet_size}, {points})"
            )));
        }
        Ok(Self { log_size: (alphabet_size as f64).log2(), points })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.log_size * k as f64 / (self.points - 1) as f64
    }

    pub fn rates(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.rate(k)).collect()
    }

    /// Index of the nearest grid rate; the smaller index wins a tie.
    pub fn nearest(&self, rate: f64) -> usize {
        if self.log_size == 0.0 {
            return 0;
        }
        let pos = rate / self.log_size * (self.points - 1) as f64;
        let lo = pos.floor().clamp(0.0, (self.points - 1) as f64) as usize;
        let hi = (lo + 1).min(self.points - 1);
        if (self.rate(hi) - rate).abs() < (rate - self.rate(lo)).abs() {
            hi
        } else {
            lo
        }
    }
}

fn check_rows(kernels: &[Kernel]) -> Result<()> {
    let Some(first) = kernels.first() else {
        return Err(Error::InvalidArgument("composition map needs at least one kernel".into()));
    };
    if kernels.iter().any(|k| k.rows() != first.rows() || k.cols() != first.cols()) {
        return Err(Error::DimensionMismatch("composition kernels differ in shape".into()));
    }
    Ok(())
}

/// `g : [0, log|S|] → P(X | U)`, stored on a rate grid and read at the
/// nearest grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateToCompositionMap {
    grid: RateGrid,
    kernels: Vec<Kernel>,
    assignment: Vec<usize>,
}

impl RateToCompositionMap {
    /// `assignment[k]` indexes `kernels` for grid point `k`.
    pub fn new(grid: RateGrid, kernels: Vec<Kernel>, assignment: Vec<usize>) -> Result<Self> {
        check_rows(&kernels)?;
        if assignment.len() != grid.len() {
            return Err(Error::LengthMismatch(grid.len(), assignment.len()));
        }
        if assignment.iter().any(|&a| a >= kernels.len()) {
            return Err(Error::InvalidArgument("assignment points past the kernel list".into()));
        }
        Ok(Self { grid, kernels, assignment })
    }

    pub fn constant(grid: RateGrid, kernel: Kernel) -> Self {
        Self { grid, assignment: vec![0; grid.len()], kernels: vec![kernel] }
    }

    pub fn grid(&self) -> RateGrid {
        self.grid
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn slot(&self, k: usize) -> usize {
        self.assignment[k]
    }

    pub fn at(&self, rate: f64) -> &Kernel {
        &self.kernels[self.assignment[self.grid.nearest(rate)]]
    }
}

/// Two-argument map `g : [0, log|S1|] × [0, log|S2|] → P(· | U)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCompositionMap {
    grid1: RateGrid,
    grid2: RateGrid,
    kernels: Vec<Kernel>,
    /// Row-major over `(k1, k2)`.
    assignment: Vec<usize>,
}

impl PairCompositionMap {
    pub fn new(grid1: RateGrid, grid2: RateGrid, kernels: Vec<Kernel>, assignment: Vec<usize>) -> Result<Self> {
        check_rows(&kernels)?;
        if assignment.len() != grid1.len() * grid2.len() {
            return Err(Error::LengthMismatch(grid1.len() * grid2.len(), assignment.len()));
        }
        if assignment.iter().any(|&a| a >= kernels.len()) {
            return Err(Error::InvalidArgument("assignment points past the kernel list".into()));
        }
        Ok(Self { grid1, grid2, kernels, assignment })
    }

    /// `g(R1, R2) = g1(R1)`.
    pub fn from_first(g: &RateToCompositionMap, grid2: RateGrid) -> Self {
        let assignment = (0..g.grid.len()).flat_map(|k1| std::iter::repeat_n(g.assignment[k1], grid2.len())).collect();
        Self { grid1: g.grid, grid2, kernels: g.kernels.clone(), assignment }
    }

    /// `g(R1, R2) = g2(R2)`.
    pub fn from_second(grid1: RateGrid, g: &RateToCompositionMap) -> Self {
        let assignment = (0..grid1.len()).flat_map(|_| g.assignment.iter().copied()).collect();
        Self { grid1, grid2: g.grid, kernels: g.kernels.clone(), assignment }
    }

    pub fn grids(&self) -> (RateGrid, RateGrid) {
        (self.grid1, self.grid2)
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn slot(&self, k1: usize, k2: usize) -> usize {
        self.assignment[k1 * self.grid2.len() + k2]
    }

    pub fn at(&self, r1: f64, r2: f64) -> &Kernel {
        &self.kernels[self.slot(self.grid1.nearest(r1), self.grid2.nearest(r2))]
    }
}

/// Grid minimizer or maximizer of a JSCC exponent expression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsccExponent {
    pub value: f64,
    pub rates: RatePair,
    pub grid_index: (usize, usize),
    pub source_terms: (f64, f64),
    pub channel_term: f64,
}

/// `e(R_k, Q)` at every grid rate.
pub fn source_reliability_on(grid: RateGrid, q: &JointDistribution) -> Result<Vec<f64>> {
    if (q.len() as f64).log2() != grid.log_size {
        return Err(Error::DimensionMismatch(format!(
            "grid spans [0, {}] but the source alphabet has {} letters",
            grid.log_size,
            q.len()
        )));
    }
    grid.rates().into_iter().map(|r| source_reliability(r.min(grid.log_size), q)).collect()
}

fn check_source(q: &JointDistribution) -> Result<()> {
    if q.rank() != 1 {
        return Err(Error::DimensionMismatch(format!("source must be one-dimensional, got rank {}", q.rank())));
    }
    Ok(())
}

/// Profiles of `E_LH` for every composition pair used on the grid, keyed by
/// the pair of kernel slots.
fn profiles_for(
    w: &MacChannel,
    p_u: &[f64],
    kernels1: &[Kernel],
    kernels2: &[Kernel],
    keys: Vec<(usize, usize)>,
    cfg: &SolverConfig,
) -> Result<HashMap<(usize, usize), LhProfile>> {
    let built: Vec<((usize, usize), LhProfile)> = keys
        .into_par_iter()
        .map(|(a, b)| {
            let s = InputStructure::new(p_u.to_vec(), kernels1[a].clone(), kernels2[b].clone())?;
            Ok(((a, b), LhProfile::new(w, &s.merged(), cfg)?))
        })
        .collect::<Result<_>>()?;
    Ok(built.into_iter().collect())
}

/// `min_k [e1 + e2 + E_LH]` over the grid, with lexicographic tie-breaking.
fn minimize_sum(
    grid1: RateGrid,
    grid2: RateGrid,
    e1: &[f64],
    e2: &[f64],
    channel: impl Fn(usize, usize) -> f64,
) -> JsccExponent {
    let mut best: Option<JsccExponent> = None;
    for k1 in 0..grid1.len() {
        for k2 in 0..grid2.len() {
            if !(e1[k1] + e2[k2]).is_finite() {
                continue;
            }
            let c = channel(k1, k2);
            let value = e1[k1] + e2[k2] + c;
            if best.as_ref().map(|b| value < b.value).unwrap_or(true) {
                best = Some(JsccExponent {
                    value,
                    rates: RatePair { r1: grid1.rate(k1), r2: grid2.rate(k2) },
                    grid_index: (k1, k2),
                    source_terms: (e1[k1], e2[k2]),
                    channel_term: c,
                });
            }
        }
    }
    best.expect("e(0, Q) = 0 keeps the origin finite")
}

fn check_maps(q1: &JointDistribution, q2: &JointDistribution, w: &MacChannel, p_u: &[f64], g1: &[Kernel], g2: &[Kernel]) -> Result<()> {
    check_source(q1)?;
    check_source(q2)?;
    if g1[0].rows() != p_u.len() || g2[0].rows() != p_u.len() {
        return Err(Error::DimensionMismatch("composition kernels must have one row per auxiliary symbol".into()));
    }
    if g1[0].cols() != w.x_size() || g2[0].cols() != w.y_size() {
        return Err(Error::DimensionMismatch("composition kernels must match the channel inputs".into()));
    }
    Ok(())
}

/// `Ej(Q1, Q2, W, P_U, g1, g2)` on the grids carried by `g1` and `g2`.
pub fn ej_exponent(
    q1: &JointDistribution,
    q2: &JointDistribution,
    w: &MacChannel,
    p_u: &[f64],
    g1: &RateToCompositionMap,
    g2: &RateToCompositionMap,
    cfg: &SolverConfig,
) -> Result<JsccExponent> {
    check_maps(q1, q2, w, p_u, &g1.kernels, &g2.kernels)?;
    let (grid1, grid2) = (g1.grid, g2.grid);
    let e1 = source_reliability_on(grid1, q1)?;
    let e2 = source_reliability_on(grid2, q2)?;
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for k1 in 0..grid1.len() {
        for k2 in 0..grid2.len() {
            keys.push((g1.slot(k1), g2.slot(k2)));
        }
    }
    keys.sort_unstable();
    keys.dedup();
    let profiles = profiles_for(w, p_u, &g1.kernels, &g2.kernels, keys, cfg)?;
    Ok(minimize_sum(grid1, grid2, &e1, &e2, |k1, k2| {
        profiles[&(g1.slot(k1), g2.slot(k2))].value(grid1.rate(k1), grid2.rate(k2))
    }))
}

/// `Ej0(Q1, Q2, W, P_U, g1, g2)` with two-argument maps on a shared grid pair.
pub fn ej0_exponent(
    q1: &JointDistribution,
    q2: &JointDistribution,
    w: &MacChannel,
    p_u: &[f64],
    g1: &PairCompositionMap,
    g2: &PairCompositionMap,
    cfg: &SolverConfig,
) -> Result<JsccExponent> {
    check_maps(q1, q2, w, p_u, &g1.kernels, &g2.kernels)?;
    if g1.grids() != g2.grids() {
        return Err(Error::DimensionMismatch("both maps must share one rate grid pair".into()));
    }
    let (grid1, grid2) = g1.grids();
    let e1 = source_reliability_on(grid1, q1)?;
    let e2 = source_reliability_on(grid2, q2)?;
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for k1 in 0..grid1.len() {
        for k2 in 0..grid2.len() {
            keys.push((g1.slot(k1, k2), g2.slot(k1, k2)));
        }
    }
    keys.sort_unstable();
    keys.dedup();
    let profiles = profiles_for(w, p_u, &g1.kernels, &g2.kernels, keys, cfg)?;
    Ok(minimize_sum(grid1, grid2, &e1, &e2, |k1, k2| {
        profiles[&(g1.slot(k1, k2), g2.slot(k1, k2))].value(grid1.rate(k1), grid2.rate(k2))
    }))
}

/// Sampling and grid settings for the suprema over auxiliary structures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxConfig {
    pub samples: usize,
    pub max_u: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub solver: SolverConfig,
}

impl Default for AuxConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            max_u: MAX_AUX_U,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            solver: SolverConfig::default(),
        }
    }
}

/// `E_LH(R1, R2, W, s)` for each sampled structure `s` on the rate grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxExponentTable {
    pub structures: Vec<InputStructure>,
    pub grid1: RateGrid,
    pub grid2: RateGrid,
    /// Indexed `[s][k1][k2]`, flattened.
    values: Vec<f64>,
}

impl AuxExponentTable {
    pub fn build(w: &MacChannel, structures: Vec<InputStructure>, grid1: RateGrid, grid2: RateGrid, cfg: &SolverConfig) -> Result<Self> {
        if structures.is_empty() {
            return Err(Error::InvalidArgument("at least one auxiliary structure is needed".into()));
        }
        let per: Vec<Vec<f64>> = structures
            .par_iter()
            .map(|s| {
                let profile = LhProfile::new(w, &s.merged(), cfg)?;
                let mut v = Vec::with_capacity(grid1.len() * grid2.len());
                for k1 in 0..grid1.len() {
                    for k2 in 0..grid2.len() {
                        v.push(profile.value(grid1.rate(k1), grid2.rate(k2)));
                    }
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Ok(Self { structures, grid1, grid2, values: per.concat() })
    }

    pub fn value(&self, s: usize, k1: usize, k2: usize) -> f64 {
        self.values[(s * self.grid1.len() + k1) * self.grid2.len() + k2]
    }

    /// Sampled `E_LH(R1, R2, W)` and the first structure attaining it.
    pub fn sup(&self, k1: usize, k2: usize) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for s in 0..self.structures.len() {
            let v = self.value(s, k1, k2);
            if v > best.0 {
                best = (v, s);
            }
        }
        best
    }
}

/// Shared ingredients for the sampled-supremum JSCC exponents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsccAnalysis {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub table: AuxExponentTable,
}

/// `Ej` with the best sampled constant compositions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestConstant {
    pub exponent: JsccExponent,
    pub structure: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Proposition1Report {
    pub ej: f64,
    pub es_lh: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalentFormReport {
    /// `min [e1 + e2 + E_LH(R1, R2, W)]` with the sampled supremum.
    pub equivalent: JsccExponent,
    /// `Ej0` achieved by the block construction on a uniform `U = [k]`.
    pub witness: JsccExponent,
    pub k: usize,
    pub difference: f64,
}

/// Auxiliary size of the block construction.
pub const WITNESS_K: usize = 32;

/// Splits `k` into blocks proportional to `p` by largest remainders.
pub fn block_sizes(p: &[f64], k: usize) -> Vec<usize> {
    let scaled: Vec<f64> = p.iter().map(|&v| v * k as f64).collect();
    let mut sizes: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let mut left = k.saturating_sub(sizes.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Rows of `s` repeated over `[k]` in blocks sized after `P_U`.
fn block_kernels(s: &InputStructure, k: usize) -> (Kernel, Kernel) {
    let sizes = block_sizes(&s.p_u, k);
    let expand = |kern: &Kernel| {
        let mut probs = Vec::with_capacity(k * kern.cols());
        for (beta, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                probs.extend_from_slice(kern.row(beta));
            }
        }
        Kernel::new(k, kern.cols(), probs).expect("rows copied from a valid kernel")
    };
    (expand(&s.p_x_u), expand(&s.p_y_u))
}

impl JsccAnalysis {
    pub fn new(q1: &JointDistribution, q2: &JointDistribution, w: &MacChannel, cfg: &AuxConfig) -> Result<Self> {
        let structures = sample_input_structures(w.x_size(), w.y_size(), cfg.samples.max(1), cfg.max_u, cfg.seed);
        Self::with_structures(q1, q2, w, structures, cfg)
    }

    pub fn with_structures(
        q1: &JointDistribution,
        q2: &JointDistribution,
        w: &MacChannel,
        structures: Vec<InputStructure>,
        cfg: &AuxConfig,
    ) -> Result<Self> {
        check_source(q1)?;
        check_source(q2)?;
        let grid1 = RateGrid::new(q1.len(), cfg.grid_points)?;
        let grid2 = RateGrid::new(q2.len(), cfg.grid_points)?;
        Ok(Self {
            e1: source_reliability_on(grid1, q1)?,
            e2: source_reliability_on(grid2, q2)?,
            table: AuxExponentTable::build(w, structures, grid1, grid2, &cfg.solver)?,
        })
    }

    fn grids(&self) -> (RateGrid, RateGrid) {
        (self.table.grid1, self.table.grid2)
    }

    /// `Es_LH = max_R min(e1, e2, E_LH(R, W))`.
    pub fn es_lh(&self) -> JsccExponent {
        let (grid1, grid2) = self.grids();
        let mut best: Option<JsccExponent> = None;
        for k1 in 0..grid1.len() {
            for k2 in 0..grid2.len() {
                let (c, _) = self.table.sup(k1, k2);
                let value = self.e1[k1].min(self.e2[k2]).min(c);
                if best.as_ref().map(|b| value > b.value).unwrap_or(true) {
                    best = Some(JsccExponent {
                        value,
                        rates: RatePair { r1: grid1.rate(k1), r2: grid2.rate(k2) },
                        grid_index: (k1, k2),
                        source_terms: (self.e1[k1], self.e2[k2]),
                        channel_term: c,
                    });
                }
            }
        }
        best.expect("nonempty grid")
    }

    /// `Ej` for constant `g`'s taken from structure `s`.
    pub fn ej_constant(&self, s: usize) -> JsccExponent {
        let (grid1, grid2) = self.grids();
        minimize_sum(grid1, grid2, &self.e1, &self.e2, |k1, k2| self.table.value(s, k1, k2))
    }

    pub fn ej_best_constant(&self) -> BestConstant {
        let mut best = BestConstant { exponent: self.ej_constant(0), structure: 0 };
        for s in 1..self.table.structures.len() {
            let e = self.ej_constant(s);
            if e.value > best.exponent.value {
                best = BestConstant { exponent: e, structure: s };
            }
        }
        best
    }

    pub fn proposition1(&self) -> Proposition1Report {
        let ej = self.ej_best_constant().exponent.value;
        let es_lh = self.es_lh().value;
        Proposition1Report { ej, es_lh, holds: ej >= es_lh - 1e-6 }
    }

    /// `min_R [e1 + e2 + E_LH(R, W)]` with the sampled supremum.
    pub fn equivalent_form(&self) -> JsccExponent {
        let (grid1, grid2) = self.grids();
        minimize_sum(grid1, grid2, &self.e1, &self.e2, |k1, k2| self.table.sup(k1, k2).0)
    }

    /// Two-argument maps on a uniform `U = [k]`: at each rate pair the
    /// best sampled structure is laid out in blocks of `[k]`.
    pub fn witness_maps(&self, k: usize) -> (Vec<f64>, PairCompositionMap, PairCompositionMap) {
        let (grid1, grid2) = self.grids();
        let mut slots: HashMap<usize, usize> = HashMap::new();
        let mut kx: Vec<Kernel> = Vec::new();
        let mut ky: Vec<Kernel> = Vec::new();
        let mut assignment = Vec::with_capacity(grid1.len() * grid2.len());
        for k1 in 0..grid1.len() {
            for k2 in 0..grid2.len() {
                let (_, s) = self.table.sup(k1, k2);
                let slot = *slots.entry(s).or_insert_with(|| {
                    let (a, b) = block_kernels(&self.table.structures[s], k);
                    kx.push(a);
                    ky.push(b);
                    kx.len() - 1
                });
                assignment.push(slot);
            }
        }
        let g1 = PairCompositionMap { grid1, grid2, kernels: kx, assignment: assignment.clone() };
        let g2 = PairCompositionMap { grid1, grid2, kernels: ky, assignment };
        (vec![1.0 / k as f64; k], g1, g2)
    }

    pub fn equivalent_form_report(
        &self,
        q1: &JointDistribution,
        q2: &JointDistribution,
        w: &MacChannel,
        k: usize,
        cfg: &SolverConfig,
    ) -> Result<EquivalentFormReport> {
        let equivalent = self.equivalent_form();
        let (p_u, g1, g2) = self.witness_maps(k);
        let witness = ej0_exponent(q1, q2, w, &p_u, &g1, &g2, cfg)?;
        Ok(EquivalentFormReport { difference: (equivalent.value - witness.value).abs(), equivalent, witness, k })
    }
}

/// `Es_LH(Q1, Q2, W)` over `cfg.samples` sampled auxiliary structures.
pub fn es_lh_exponent(q1: &JointDistribution, q2: &JointDistribution, w: &MacChannel, cfg: &AuxConfig) -> Result<JsccExponent> {
    Ok(JsccAnalysis::new(q1, q2, w, cfg)?.es_lh())
}

/// Minimum-form exponent `min [e1 + e2 + E_LH(R, W)]` next to the
/// block-construction `Ej0` it is compared against.
pub fn equivalent_form_ej0(q1: &JointDistribution, q2: &JointDistribution, w: &MacChannel, cfg: &AuxConfig) -> Result<EquivalentFormReport> {
    JsccAnalysis::new(q1, q2, w, cfg)?.equivalent_form_report(q1, q2, w, WITNESS_K, &cfg.solver)
}

pub fn proposition1_check(q1: &JointDistribution, q2: &JointDistribution, w: &MacChannel, cfg: &AuxConfig) -> Result<Proposition1Report> {
    Ok(JsccAnalysis::new(q1, q2, w, cfg)?.proposition1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> JointDistribution {
        JointDistribution::new(vec![2], vec![1.0 - p, p]).unwrap()
    }

    fn small_cfg(samples: usize, points: usize) -> AuxConfig {
        AuxConfig { samples, grid_points: points, seed: 5, ..Default::default() }
    }

    #[test]
    fn grid_rates_and_nearest() {
        let g = RateGrid::new(4, 5).unwrap();
        assert_eq!(g.rates(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.nearest(0.25), 0);
        assert_eq!(g.nearest(0.26), 1);
        assert_eq!(g.nearest(-1.0), 0);
        assert_eq!(g.nearest(9.0), 4);
        assert_eq!(g.nearest(1.9), 4);
        assert!(RateGrid::new(2, 1).is_err());
        let single = RateGrid::new(1, 3).unwrap();
        assert_eq!(single.nearest(0.3), 0);
    }

    #[test]
    fn block_sizes_sum_to_k() {
        assert_eq!(block_sizes(&[0.5, 0.5], 4), vec![2, 2]);
        assert_eq!(block_sizes(&[0.34, 0.33, 0.33], 4), vec![2, 1, 1]);
        assert_eq!(block_sizes(&[0.1, 0.2, 0.3, 0.4], 32).iter().sum::<usize>(), 32);
        assert_eq!(block_sizes(&[1.0], 7), vec![7]);
    }

    #[test]
    fn map_validation() {
        let g = RateGrid::new(2, 3).unwrap();
        let k = Kernel::constant_rows(1, &[0.5, 0.5]).unwrap();
        let k2 = Kernel::constant_rows(2, &[0.5, 0.5]).unwrap();
        assert!(RateToCompositionMap::new(g, vec![k.clone()], vec![0, 0]).is_err());
        assert!(RateToCompositionMap::new(g, vec![k.clone()], vec![0, 1, 0]).is_err());
        assert!(RateToCompositionMap::new(g, vec![k.clone(), k2], vec![0, 0, 0]).is_err());
        let m = RateToCompositionMap::new(g, vec![k.clone(), Kernel::constant_rows(1, &[0.1, 0.9]).unwrap()], vec![0, 1, 1]).unwrap();
        assert_eq!(m.at(0.2).row(0), &[0.5, 0.5]);
        assert_eq!(m.at(0.3).row(0), &[0.1, 0.9]);
    }

    #[test]
    fn uniform_sources_reduce_to_the_corner() {
        let w = MacChannel::bsc_pair(0.05).unwrap();
        let q = JointDistribution::uniform(vec![2]).unwrap();
        let g = RateGrid::new(2, 11).unwrap();
        let kern = Kernel::constant_rows(1, &[0.5, 0.5]).unwrap();
        let m = RateToCompositionMap::constant(g, kern);
        let cfg = SolverConfig::default();
        let e = ej_exponent(&q, &q, &w, &[1.0], &m, &m, &cfg).unwrap();
        assert_eq!(e.source_terms, (0.0, 0.0));
        let profile = LhProfile::new(&w, &InputStructure::uniform(2, 2), &cfg).unwrap();
        assert_eq!(e.value, profile.value(1.0, 1.0));
    }

    #[test]
    fn point_mass_sources_pin_the_origin() {
        let w = MacChannel::adder();
        let q = JointDistribution::point_mass(vec![2], &[0]).unwrap();
        let g = RateGrid::new(2, 9).unwrap();
        let m = RateToCompositionMap::constant(g, Kernel::constant_rows(1, &[0.5, 0.5]).unwrap());
        let cfg = SolverConfig::default();
        let e = ej_exponent(&q, &q, &w, &[1.0], &m, &m, &cfg).unwrap();
        let profile = LhProfile::new(&w, &InputStructure::uniform(2, 2), &cfg).unwrap();
        assert_eq!(e.grid_index, (0, 0));
        assert_eq!(e.value, profile.value(0.0, 0.0));
        assert!(e.value > 0.0);
    }

    #[test]
    fn coarse_grid_agrees_with_independent_reevaluation() {
        let w = MacChannel::bsc_pair(0.1).unwrap();
        let (q1, q2) = (bern(0.2), bern(0.3));
        let coarse = RateGrid::new(2, 11).unwrap();
        let s = InputStructure::single(&[0.4, 0.6], &[0.5, 0.5]).unwrap();
        let g1 = RateToCompositionMap::constant(coarse, s.p_x_u.clone());
        let g2 = RateToCompositionMap::constant(coarse, s.p_y_u.clone());
        let cfg = SolverConfig::default();
        let e = ej_exponent(&q1, &q2, &w, &[1.0], &g1, &g2, &cfg).unwrap();
        let profile = LhProfile::new(&w, &s, &cfg).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..=10 {
            for b in 0..=10 {
                let (r1, r2) = (a as f64 / 10.0, b as f64 / 10.0);
                let v = source_reliability(r1, &q1).unwrap() + source_reliability(r2, &q2).unwrap() + profile.value(r1, r2);
                best = best.min(v);
            }
        }
        assert!((e.value - best).abs() < 1e-12, "{} vs {best}", e.value);
    }

    #[test]
    fn one_argument_maps_give_identical_ej0() {
        let w = MacChannel::adder();
        let (q1, q2) = (bern(0.15), bern(0.25));
        let g = RateGrid::new(2, 8).unwrap();
        let kx = vec![
            Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap(),
            Kernel::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap(),
        ];
        let ky = vec![Kernel::from_rows(vec![vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap()];
        let g1 = RateToCompositionMap::new(g, kx, vec![0, 0, 0, 1, 1, 1, 0, 1]).unwrap();
        let g2 = RateToCompositionMap::new(g, ky, vec![0; 8]).unwrap();
        let p_u = [0.3, 0.7];
        let cfg = SolverConfig::default();
        let ej = ej_exponent(&q1, &q2, &w, &p_u, &g1, &g2, &cfg).unwrap();
        let ej0 = ej0_exponent(&q1, &q2, &w, &p_u, &PairCompositionMap::from_first(&g1, g), &PairCompositionMap::from_second(g, &g2), &cfg)
            .unwrap();
        assert_eq!(ej.value, ej0.value);
        assert_eq!(ej.grid_index, ej0.grid_index);
    }

    #[test]
    fn per_rate_compositions_beat_every_constant() {
        let w = MacChannel::adder();
        let (q1, q2) = (bern(0.1), bern(0.2));
        let cfg = small_cfg(12, 12);
        let structures: Vec<InputStructure> =
            sample_input_structures(2, 2, 40, 1, 9).into_iter().filter(|s| s.u_size() == 1).take(12).collect();
        let analysis = JsccAnalysis::with_structures(&q1, &q2, &w, structures.clone(), &cfg).unwrap();
        let (grid1, grid2) = (analysis.table.grid1, analysis.table.grid2);
        let mut assignment = Vec::new();
        for k1 in 0..grid1.len() {
            for k2 in 0..grid2.len() {
                assignment.push(analysis.table.sup(k1, k2).1);
            }
        }
        let kx: Vec<Kernel> = structures.iter().map(|s| s.p_x_u.clone()).collect();
        let ky: Vec<Kernel> = structures.iter().map(|s| s.p_y_u.clone()).collect();
        let g1 = PairCompositionMap::new(grid1, grid2, kx.clone(), assignment.clone()).unwrap();
        let g2 = PairCompositionMap::new(grid1, grid2, ky.clone(), assignment).unwrap();
        let opt = ej0_exponent(&q1, &q2, &w, &[1.0], &g1, &g2, &cfg.solver).unwrap();
        for s in 0..structures.len() {
            let c1 = RateToCompositionMap::constant(grid1, kx[s].clone());
            let c2 = RateToCompositionMap::constant(grid2, ky[s].clone());
            let constant = ej_exponent(&q1, &q2, &w, &[1.0], &c1, &c2, &cfg.solver).unwrap();
            assert!(opt.value >= constant.value - 1e-9);
        }
        assert!((opt.value - analysis.equivalent_form().value).abs() < 1e-12);
    }

    #[test]
    fn proposition1_and_equivalent_form_on_small_instances() {
        let cfg = small_cfg(24, 16);
        for (w, q1, q2) in [
            (MacChannel::adder(), bern(0.1), bern(0.2)),
            (MacChannel::bsc_pair(0.05).unwrap(), bern(0.05), bern(0.3)),
            (MacChannel::noiseless_pair(), bern(0.11), bern(0.11)),
        ] {
            let a = JsccAnalysis::new(&q1, &q2, &w, &cfg).unwrap();
            let p = a.proposition1();
            assert!(p.holds, "{p:?}");
            assert!(p.es_lh >= 0.0);
            let rep = a.equivalent_form_report(&q1, &q2, &w, WITNESS_K, &cfg.solver).unwrap();
            assert!(rep.difference <= 0.05, "{rep:?}");
            assert!(rep.witness.value <= rep.equivalent.value + 1e-9);
        }
    }

    #[test]
    fn degenerate_channels_and_sources() {
        let cfg = small_cfg(8, 8);
        let useless = MacChannel::useless(2, 2, &[0.5, 0.5]).unwrap();
        let (q1, q2) = (bern(0.2), bern(0.4));
        let a = JsccAnalysis::new(&q1, &q2, &useless, &cfg).unwrap();
        assert_eq!(a.proposition1().ej, 0.0);
        assert_eq!(a.es_lh().value, 0.0);
        let rep = a.equivalent_form_report(&q1, &q2, &useless, WITNESS_K, &cfg.solver).unwrap();
        assert_eq!((rep.equivalent.value, rep.witness.value), (0.0, 0.0));

        let uniform = JointDistribution::uniform(vec![4]).unwrap();
        let w = MacChannel::noiseless_pair();
        assert_eq!(es_lh_exponent(&uniform, &uniform, &w, &cfg).unwrap().value, 0.0);

        let pm = JointDistribution::point_mass(vec![2], &[1]).unwrap();
        let p = proposition1_check(&pm, &pm, &w, &cfg).unwrap();
        assert!(p.ej.is_finite() && p.es_lh.is_finite() && p.holds);
    }

    #[test]
    fn sampled_values_are_reproducible() {
        let cfg = small_cfg(10, 10);
        let w = MacChannel::bsc_pair(0.1).unwrap();
        let a = es_lh_exponent(&bern(0.1), &bern(0.2), &w, &cfg).unwrap();
        let b = es_lh_exponent(&bern(0.1), &bern(0.2), &w, &cfg).unwrap();
        assert_eq!(a.value, b.value);
    }
}
