//! Minimization over joint laws with prescribed `UX` and `UY` marginals.
//!
//! Every objective in the catalog is `D(V || P̄) + |T(V) - R|^+` on the
//! feasible set, where `P̄ = P_U P_{X|U} P_{Y|U} W` and `T` is one of the
//! three bracket informations. On that set `T = c - H(A | U, C)` for a
//! fixed constant `c`, so the objective is convex. It is solved through
//! its Lagrange dual in `ρ ∈ [0, 1]`; for fixed `ρ` the inner problem is
//! an alternating minimization whose `V`-step is an I-projection computed
//! by iterative proportional fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{InputStructure, MacChannel, AXIS_U, AXIS_X, AXIS_Y, AXIS_Z};
use crate::typekit::{
    conditional_divergence, divergence, entropy, entropy_of, mutual_information, multi_information, random_simplex_point,
    JointDistribution, Projection,
};

/// The three members of the Liu–Hughes family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bracket {
    /// `I(X ∧ YZ | U)` against `R1`.
    X,
    /// `I(Y ∧ XZ | U)` against `R2`.
    Y,
    /// `I(X ∧ Y ∧ Z | U)` against `R1 + R2`.
    XY,
}

impl Bracket {
    pub const ALL: [Bracket; 3] = [Bracket::X, Bracket::Y, Bracket::XY];

    fn index(self) -> usize {
        match self {
            Bracket::X => 0,
            Bracket::Y => 1,
            Bracket::XY => 2,
        }
    }

    /// Axes conditioned on in the entropy that carries the variation of `T`.
    fn conditioning(self) -> [usize; 3] {
        match self {
            Bracket::X => [AXIS_U, AXIS_Y, AXIS_Z],
            Bracket::Y => [AXIS_U, AXIS_X, AXIS_Z],
            Bracket::XY => [AXIS_U, AXIS_Z, usize::MAX],
        }
    }

    /// The bracket information evaluated directly on a `(U, X, Y, Z)` law.
    pub fn information(self, v: &JointDistribution) -> Result<f64> {
        let (u, x, y, z) = (AXIS_U, AXIS_X, AXIS_Y, AXIS_Z);
        match self {
            Bracket::X => mutual_information(v, &[x], &[y, z], &[u]),
            Bracket::Y => mutual_information(v, &[y], &[x, z], &[u]),
            Bracket::XY => multi_information(v, &[&[x], &[y], &[z]], &[u]),
        }
    }
}

/// Objective catalog for [`minimize_over_vlh`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// `D(V_{Z|UXY} || W | V_{UXY}) + I(X ∧ Y | U)` alone.
    Divergence,
    /// Divergence plus `|T_bracket - rate|^+`.
    Bracket { bracket: Bracket, rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target primal-dual gap, bits.
    pub tol: f64,
    /// Cap on alternating-minimization sweeps per dual point.
    pub max_iter: usize,
    /// Independent random initializations; the best primal value is kept.
    pub restarts: usize,
    pub seed: u64,
    /// Width at which the search over the dual variable stops.
    pub rho_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            restarts: 1,
            seed: 0,
            rho_tol: 1e-7,
        }
    }
}

/// Optimized value with its argmin and the three objective terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentResult {
    pub value: f64,
    pub argmin: JointDistribution,
    pub divergence_term: f64,
    pub dependence_term: f64,
    pub positive_part_term: f64,
    /// Best dual value found; the true minimum lies in `[dual_bound, value]`
    /// up to the inner solver's accuracy.
    pub dual_bound: f64,
    pub converged: bool,
    pub bracket: Option<Bracket>,
}

/// Scales `w` in place until each projection matches its target.
pub(crate) fn ipf(w: &mut [f64], constraints: &[(&Projection, &[f64])], tol: f64, max_iter: usize) -> f64 {
    let mut scratch: Vec<Vec<f64>> = constraints.iter().map(|(p, _)| vec![0.0; p.size()]).collect();
    let mut err = f64::INFINITY;
    for _ in 0..max_iter {
        for (k, (proj, target)) in constraints.iter().enumerate() {
            let m = &mut scratch[k];
            proj.project_into(w, m);
            for (cell, v) in w.iter_mut().enumerate() {
                let idx = proj.index(cell);
                if m[idx] > 0.0 {
                    *v *= target[idx] / m[idx];
                } else {
                    *v = 0.0;
                }
            }
        }
        err = 0.0;
        for (k, (proj, target)) in constraints.iter().enumerate() {
            let m = &mut scratch[k];
            proj.project_into(w, m);
            err += m.iter().zip(target.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        if err < tol {
            break;
        }
    }
    err
}

/// Result of the inner problem at a fixed dual variable.
#[derive(Debug, Clone)]
pub(crate) struct InnerPoint {
    pub rho: f64,
    pub v: Vec<f64>,
    /// `D(V || P̄)`.
    pub d: f64,
    /// Bracket information at `V`.
    pub t: f64,
}

impl InnerPoint {
    /// `D + ρ T`, the inner objective.
    pub fn lagrangian(&self) -> f64 {
        self.d + self.rho * self.t
    }

    pub fn primal(&self, rate: f64) -> f64 {
        self.d + (self.t - rate).max(0.0)
    }
}

/// Precomputed problem data for one input structure and channel.
pub struct VlhProblem {
    dims: Vec<usize>,
    pbar: Vec<f64>,
    ln_pbar: Vec<f64>,
    proj_ux: Projection,
    proj_uy: Projection,
    target_ux: Vec<f64>,
    target_uy: Vec<f64>,
    proj_c: [Projection; 3],
    constants: [f64; 3],
    kernel: crate::typekit::Kernel,
    cfg: SolverConfig,
}

const IPF_TOL: f64 = 1e-14;
const IPF_MAX: usize = 2000;

impl VlhProblem {
    pub fn new(w: &MacChannel, s: &InputStructure, cfg: SolverConfig) -> Result<Self> {
        if !(cfg.tol > 0.0) || cfg.max_iter == 0 || cfg.restarts == 0 {
            return Err(Error::InvalidArgument("solver tol, max_iter and restarts must be positive".into()));
        }
        let p = s.joint(w)?;
        let dims = p.dims().to_vec();
        let proj_ux = Projection::new(&dims, &[AXIS_U, AXIS_X])?;
        let proj_uy = Projection::new(&dims, &[AXIS_U, AXIS_Y])?;
        let proj_c = Bracket::ALL.map(|b| {
            let axes: Vec<usize> = b.conditioning().into_iter().filter(|&a| a != usize::MAX).collect();
            Projection::new(&dims, &axes).expect("fixed axes")
        });
        let h_x_u = entropy(&p, &[AXIS_X], &[AXIS_U])?;
        let h_y_u = entropy(&p, &[AXIS_Y], &[AXIS_U])?;
        let pbar = p.probs().to_vec();
        let ln_pbar = pbar.iter().map(|&q| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY }).collect();
        Ok(Self {
            target_ux: s.joint_ux(),
            target_uy: s.joint_uy(),
            dims,
            pbar,
            ln_pbar,
            proj_ux,
            proj_uy,
            proj_c,
            constants: [h_x_u, h_y_u, h_x_u + h_y_u],
            kernel: w.kernel().clone(),
            cfg,
        })
    }

    pub fn pbar(&self) -> JointDistribution {
        JointDistribution::from_parts_unchecked(self.dims.clone(), self.pbar.clone())
    }

    /// `T(V) = c - H(V) + H(V_C)` on the feasible set.
    pub(crate) fn bracket_value(&self, b: Bracket, v: &[f64]) -> f64 {
        let hc = entropy_of(&self.proj_c[b.index()].project(v));
        (self.constants[b.index()] - entropy_of(v) + hc).max(0.0)
    }

    pub(crate) fn point(&self, b: Bracket, rho: f64, v: Vec<f64>) -> InnerPoint {
        let d = divergence(&v, &self.pbar).max(0.0);
        let t = self.bracket_value(b, &v);
        InnerPoint { rho, v, d, t }
    }

    /// The unconstrained minimizer `P̄` seen as the `ρ = 0` point.
    pub(crate) fn origin(&self, b: Bracket) -> InnerPoint {
        self.point(b, 0.0, self.pbar.clone())
    }

    fn project(&self, w: &mut [f64]) {
        ipf(
            w,
            &[(&self.proj_ux, &self.target_ux), (&self.proj_uy, &self.target_uy)],
            IPF_TOL,
            IPF_MAX,
        );
    }

    /// Minimizes `D(V || P̄) + ρ T(V)` by alternating between `V` and the
    /// auxiliary marginal `Q_C`, starting from `start`.
    pub(crate) fn inner(&self, b: Bracket, rho: f64, start: &[f64]) -> InnerPoint {
        if rho == 0.0 {
            return self.origin(b);
        }
        let proj = &self.proj_c[b.index()];
        let mut v = start.to_vec();
        let mut w = vec![0.0; v.len()];
        let mut qc = vec![0.0; proj.size()];
        let mut prev = f64::INFINITY;
        let scale = 1.0 / (1.0 + rho);
        for _ in 0..self.cfg.max_iter {
            proj.project_into(&v, &mut qc);
            for (cell, wv) in w.iter_mut().enumerate() {
                let q = qc[proj.index(cell)];
                *wv = if self.pbar[cell] > 0.0 && q > 0.0 {
                    ((self.ln_pbar[cell] + rho * q.ln()) * scale).exp()
                } else {
                    0.0
                };
            }
            self.project(&mut w);
            std::mem::swap(&mut v, &mut w);
            let pt_d = divergence(&v, &self.pbar).max(0.0);
            let f = pt_d + rho * self.bracket_value(b, &v);
            if prev - f < 1e-13 {
                break;
            }
            prev = f;
        }
        self.point(b, rho, v)
    }

    /// Random feasible start supported on `supp P̄`.
    fn random_start(&self, rng: &mut rand_chacha::ChaCha20Rng) -> Vec<f64> {
        let noise = random_simplex_point(self.pbar.len(), rng);
        let mut w: Vec<f64> = self.pbar.iter().zip(&noise).map(|(p, r)| p * (0.5 + r * self.pbar.len() as f64)).collect();
        self.project(&mut w);
        w
    }

    /// Minimum of `D(V || P̄) + |T(V) - rate|^+` over the feasible set.
    pub(crate) fn solve_bracket(&self, b: Bracket, rate: f64) -> (InnerPoint, f64) {
        use rand::SeedableRng;
        let origin = self.origin(b);
        if origin.t <= rate {
            return (origin, 0.0);
        }
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(self.cfg.seed);
        let mut best: Option<InnerPoint> = None;
        let mut best_dual: f64 = 0.0;
        for restart in 0..self.cfg.restarts {
            let start = if restart == 0 { self.pbar.clone() } else { self.random_start(&mut rng) };
            let (pt, dual) = self.golden(b, rate, start);
            best_dual = best_dual.max(dual);
            if best.as_ref().map(|p| pt.primal(rate) < p.primal(rate)).unwrap_or(true) {
                best = Some(pt);
            }
        }
        let best = best.expect("at least one restart");
        if origin.primal(rate) <= best.primal(rate) {
            return (origin, best_dual);
        }
        (best, best_dual)
    }

    /// Golden-section search for the maximum of the concave dual function.
    fn golden(&self, b: Bracket, rate: f64, start: Vec<f64>) -> (InnerPoint, f64) {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut best: Option<InnerPoint> = None;
        let mut best_dual = 0.0f64;
        let consider = |pt: &InnerPoint, best: &mut Option<InnerPoint>, best_dual: &mut f64| {
            *best_dual = best_dual.max(pt.lagrangian() - pt.rho * rate);
            if best.as_ref().map(|p| pt.primal(rate) < p.primal(rate)).unwrap_or(true) {
                *best = Some(pt.clone());
            }
        };
        let top = self.inner(b, 1.0, &start);
        consider(&top, &mut best, &mut best_dual);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let mut pc = self.inner(b, c, &top.v);
        let mut pd = self.inner(b, d, &pc.v);
        consider(&pc, &mut best, &mut best_dual);
        consider(&pd, &mut best, &mut best_dual);
        let g = |p: &InnerPoint| p.lagrangian() - p.rho * rate;
        while hi - lo > self.cfg.rho_tol {
            if g(&pc) >= g(&pd) {
                hi = d;
                d = c;
                pd = pc.clone();
                c = hi - phi * (hi - lo);
                pc = self.inner(b, c, &pd.v);
                consider(&pc, &mut best, &mut best_dual);
            } else {
                lo = c;
                c = d;
                pc = pd.clone();
                d = lo + phi * (hi - lo);
                pd = self.inner(b, d, &pc.v);
                consider(&pd, &mut best, &mut best_dual);
            }
        }
        (best.expect("points evaluated"), best_dual)
    }

    /// Packs a solved point into a report, recomputing each term from `V`.
    pub(crate) fn report(&self, b: Option<Bracket>, rate: f64, pt: &InnerPoint, dual: f64) -> Result<ExponentResult> {
        let v = JointDistribution::from_parts_unchecked(self.dims.clone(), pt.v.clone());
        let (u, x, y) = (AXIS_U, AXIS_X, AXIS_Y);
        let v_uxy = v.marginal(&[u, x, y])?;
        let v_z = v.conditional(&[AXIS_Z], &[u, x, y])?;
        let w_rows = self.expand_kernel();
        let divergence_term = conditional_divergence(&v_z, &w_rows, &v_uxy)?.max(0.0);
        let dependence_term = mutual_information(&v, &[x], &[y], &[u])?.max(0.0);
        let positive_part_term = match b {
            Some(b) => (b.information(&v)? - rate).max(0.0),
            None => 0.0,
        };
        let value = divergence_term + dependence_term + positive_part_term;
        Ok(ExponentResult {
            value,
            argmin: v,
            divergence_term,
            dependence_term,
            positive_part_term,
            dual_bound: dual.min(value),
            converged: value - dual <= self.cfg.tol.max(1e-5),
            bracket: b,
        })
    }

    /// `W` replicated over `u`, as a `(U X Y) -> Z` kernel.
    fn expand_kernel(&self) -> crate::typekit::Kernel {
        let u = self.dims[0];
        let probs: Vec<f64> = (0..u).flat_map(|_| self.kernel.probs().iter().copied()).collect();
        crate::typekit::Kernel::new(u * self.kernel.rows(), self.kernel.cols(), probs).expect("copied rows")
    }

    /// Largest deviation of the `UX` and `UY` marginals of `v` from their targets.
    pub fn marginal_violation(&self, v: &JointDistribution) -> f64 {
        let a: f64 = self.proj_ux.project(v.probs()).iter().zip(&self.target_ux).map(|(p, q)| (p - q).abs()).sum();
        let b: f64 = self.proj_uy.project(v.probs()).iter().zip(&self.target_uy).map(|(p, q)| (p - q).abs()).sum();
        a.max(b)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }
}

/// Minimizes a catalog objective over `V_LH(P_U, P_{X|U}, P_{Y|U})`.
pub fn minimize_over_vlh(
    w: &MacChannel,
    constraint: &InputStructure,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<ExponentResult> {
    let problem = VlhProblem::new(w, constraint, cfg.clone())?;
    match objective {
        Objective::Divergence => {
            let pt = problem.origin(Bracket::X);
            problem.report(None, 0.0, &pt, 0.0)
        }
        Objective::Bracket { bracket, rate } => {
            if !(rate >= 0.0) {
                return Err(Error::InvalidArgument(format!("rate {rate} must be nonnegative")));
            }
            let (pt, dual) = problem.solve_bracket(bracket, rate);
            problem.report(Some(bracket), rate, &pt, dual)
        }
    }
}
