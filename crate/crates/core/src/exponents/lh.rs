//! The Liu–Hughes exponent family and cached rate profiles.

use serde::{Deserialize, Serialize};

use super::solver::{Bracket, ExponentResult, InnerPoint, SolverConfig, VlhProblem};
use crate::error::{Error, Result};
use crate::mac::{InputStructure, MacChannel, RatePair};

/// `E_LH` together with its three members.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LhExponent {
    pub value: f64,
    pub x: ExponentResult,
    pub y: ExponentResult,
    pub xy: ExponentResult,
    /// Member attaining the minimum.
    pub active: Bracket,
}

impl LhExponent {
    pub fn converged(&self) -> bool {
        self.x.converged && self.y.converged && self.xy.converged
    }
}

fn bracket_exponent(
    w: &MacChannel,
    s: &InputStructure,
    b: Bracket,
    rate: f64,
    cfg: &SolverConfig,
) -> Result<ExponentResult> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("rate {rate} must be finite and nonnegative")));
    }
    let problem = VlhProblem::new(w, s, cfg.clone())?;
    let (pt, dual) = problem.solve_bracket(b, rate);
    problem.report(Some(b), rate, &pt, dual)
}

pub fn exponent_x_lh(r1: f64, w: &MacChannel, s: &InputStructure, cfg: &SolverConfig) -> Result<ExponentResult> {
    bracket_exponent(w, s, Bracket::X, r1, cfg)
}

pub fn exponent_y_lh(r2: f64, w: &MacChannel, s: &InputStructure, cfg: &SolverConfig) -> Result<ExponentResult> {
    bracket_exponent(w, s, Bracket::Y, r2, cfg)
}

pub fn exponent_xy_lh(r: RatePair, w: &MacChannel, s: &InputStructure, cfg: &SolverConfig) -> Result<ExponentResult> {
    bracket_exponent(w, s, Bracket::XY, r.r1 + r.r2, cfg)
}

/// `E_LH(R1, R2, W, P_U, P_{X|U}, P_{Y|U})`, the minimum of the three members.
pub fn exponent_lh(r: RatePair, w: &MacChannel, s: &InputStructure, cfg: &SolverConfig) -> Result<LhExponent> {
    let problem = VlhProblem::new(w, s, cfg.clone())?;
    let solve = |b: Bracket, rate: f64| -> Result<ExponentResult> {
        let (pt, dual) = problem.solve_bracket(b, rate);
        problem.report(Some(b), rate, &pt, dual)
    };
    let x = solve(Bracket::X, r.r1)?;
    let y = solve(Bracket::Y, r.r2)?;
    let xy = solve(Bracket::XY, r.r1 + r.r2)?;
    let mut active = Bracket::X;
    let mut value = x.value;
    if y.value < value {
        active = Bracket::Y;
        value = y.value;
    }
    if xy.value < value {
        active = Bracket::XY;
        value = xy.value;
    }
    Ok(LhExponent { value, x, y, xy, active })
}

/// One bracket's exponent as a function of the rate, sampled along the
/// dual path `ρ ↦ V_ρ`.
///
/// Every stored point is feasible, so `upper(R)` is an achievable objective
/// value; it is nonincreasing in `R` by construction. `lower(R)` is the
/// matching dual bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketCurve {
    pub rho: Vec<f64>,
    pub divergence: Vec<f64>,
    pub information: Vec<f64>,
}

impl BracketCurve {
    pub(crate) fn build(problem: &VlhProblem, b: Bracket, points: usize) -> Self {
        let points = points.max(2);
        let mut pts: Vec<InnerPoint> = Vec::with_capacity(points);
        let mut start = problem.origin(b).v;
        for k in 0..points {
            // quadratic spacing concentrates points near ρ = 0, where the
            // path moves fastest
            let s = k as f64 / (points - 1) as f64;
            let rho = s * s;
            let pt = problem.inner(b, rho, &start);
            start = pt.v.clone();
            pts.push(pt);
        }
        Self {
            rho: pts.iter().map(|p| p.rho).collect(),
            divergence: pts.iter().map(|p| p.d).collect(),
            information: pts.iter().map(|p| p.t).collect(),
        }
    }

    pub fn upper(&self, rate: f64) -> f64 {
        self.divergence
            .iter()
            .zip(&self.information)
            .map(|(d, t)| d + (t - rate).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lower(&self, rate: f64) -> f64 {
        self.rho
            .iter()
            .zip(self.divergence.iter().zip(&self.information))
            .map(|(r, (d, t))| d + r * (t - rate))
            .fold(0.0, f64::max)
    }
}

/// `E_LH` over all rate pairs for one input structure, from three cached curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LhProfile {
    pub x: BracketCurve,
    pub y: BracketCurve,
    pub xy: BracketCurve,
}

/// Dual-path points per bracket used by [`LhProfile`].
pub const PROFILE_POINTS: usize = 65;

impl LhProfile {
    pub fn new(w: &MacChannel, s: &InputStructure, cfg: &SolverConfig) -> Result<Self> {
        Self::with_points(w, s, cfg, PROFILE_POINTS)
    }

    pub fn with_points(w: &MacChannel, s: &InputStructure, cfg: &SolverConfig, points: usize) -> Result<Self> {
        let problem = VlhProblem::new(w, s, cfg.clone())?;
        Ok(Self {
            x: BracketCurve::build(&problem, Bracket::X, points),
            y: BracketCurve::build(&problem, Bracket::Y, points),
            xy: BracketCurve::build(&problem, Bracket::XY, points),
        })
    }

    pub fn value(&self, r1: f64, r2: f64) -> f64 {
        self.x.upper(r1).min(self.y.upper(r2)).min(self.xy.upper(r1 + r2))
    }

    pub fn lower(&self, r1: f64, r2: f64) -> f64 {
        self.x.lower(r1).min(self.y.lower(r2)).min(self.xy.lower(r1 + r2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::solver::{minimize_over_vlh, Objective};
    use crate::mac::Pentagon;
    use crate::typekit::Kernel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rp(r1: f64, r2: f64) -> RatePair {
        RatePair::new(r1, r2).unwrap()
    }

    #[test]
    fn divergence_objective_vanishes_at_the_true_law() {
        let w = MacChannel::bsc_pair(0.1).unwrap();
        let s = InputStructure::uniform(2, 2);
        let r = minimize_over_vlh(&w, &s, Objective::Divergence, &SolverConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(crate::typekit::variational_distance(&r.argmin, &s.joint(&w).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn point_mass_input_kills_the_dependence_term() {
        let w = MacChannel::adder();
        let s = InputStructure::single(&[1.0, 0.0], &[0.3, 0.7]).unwrap();
        let r = exponent_y_lh(0.1, &w, &s, &SolverConfig::default()).unwrap();
        assert!(r.dependence_term.abs() < 1e-12);
    }

    #[test]
    fn outside_rates_give_zero_and_deep_interior_is_positive() {
        let w = MacChannel::noiseless_pair();
        let s = InputStructure::uniform(2, 2);
        let cfg = SolverConfig::default();
        assert_eq!(exponent_lh(rp(1.2, 0.3), &w, &s, &cfg).unwrap().value, 0.0);
        let e = exponent_lh(rp(0.0, 0.0), &w, &s, &cfg).unwrap();
        assert!(e.value > 0.5, "{}", e.value);
        assert!(e.converged());
    }

    #[test]
    fn reported_terms_sum_to_the_value_and_marginals_hold() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let w = MacChannel::new(2, 2, 3, crate::typekit::random_kernel(4, 3, &mut rng).probs().to_vec()).unwrap();
        let s = InputStructure::random(2, 2, 2, &mut rng);
        let cfg = SolverConfig::default();
        let problem = VlhProblem::new(&w, &s, cfg.clone()).unwrap();
        let e = exponent_lh(rp(0.05, 0.02), &w, &s, &cfg).unwrap();
        for m in [&e.x, &e.y, &e.xy] {
            let sum = m.divergence_term + m.dependence_term + m.positive_part_term;
            assert!((sum - m.value).abs() < 1e-6);
            assert!(problem.marginal_violation(&m.argmin) < 1e-7);
            assert!(m.value >= -1e-9);
            assert!(m.value - m.dual_bound < 1e-4, "gap {}", m.value - m.dual_bound);
        }
    }

    #[test]
    fn monotone_in_each_rate() {
        let w = MacChannel::bsc_pair(0.05).unwrap();
        let s = InputStructure::uniform(2, 2);
        let cfg = SolverConfig::default();
        let grid = [0.0, 0.1, 0.2, 0.3, 0.45];
        let mut prev_row: Option<Vec<f64>> = None;
        for &r1 in &grid {
            let row: Vec<f64> = grid.iter().map(|&r2| exponent_lh(rp(r1, r2), &w, &s, &cfg).unwrap().value).collect();
            for pair in row.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-6);
            }
            if let Some(prev) = &prev_row {
                for (a, b) in prev.iter().zip(&row) {
                    assert!(*b <= a + 1e-6);
                }
            }
            prev_row = Some(row);
        }
    }

    #[test]
    fn profile_tracks_the_direct_solver() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let cfg = SolverConfig::default();
        for _ in 0..3 {
            let w = MacChannel::new(2, 2, 2, crate::typekit::random_kernel(4, 2, &mut rng).probs().to_vec()).unwrap();
            let s = InputStructure::random(2, 2, 2, &mut rng);
            let profile = LhProfile::new(&w, &s, &cfg).unwrap();
            let pent = Pentagon::of(&w, &s).unwrap();
            for k in 0..5 {
                let r = rp(pent.r1_max * k as f64 / 8.0, pent.r2_max * k as f64 / 10.0);
                let direct = exponent_lh(r, &w, &s, &cfg).unwrap().value;
                let cached = profile.value(r.r1, r.r2);
                assert!(cached >= direct - 1e-6, "{cached} < {direct}");
                assert!(cached - direct < 2e-3, "{cached} vs {direct}");
                assert!(profile.lower(r.r1, r.r2) <= direct + 1e-6);
            }
        }
    }

    #[test]
    fn restarts_do_not_change_the_answer() {
        let w = MacChannel::adder();
        let s = InputStructure::new(
            vec![0.4, 0.6],
            Kernel::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap(),
            Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap(),
        )
        .unwrap();
        let one = exponent_lh(rp(0.1, 0.1), &w, &s, &SolverConfig::default()).unwrap();
        let many = exponent_lh(rp(0.1, 0.1), &w, &s, &SolverConfig { restarts: 4, seed: 3, ..Default::default() }).unwrap();
        assert!((one.value - many.value).abs() < 1e-5);
    }
}
