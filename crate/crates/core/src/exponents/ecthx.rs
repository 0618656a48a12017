//! The collision-side exponent `ECTHX` over laws on `U × X × X̃ × Y × Z`,
//! and the mixture family `V^ε = (1 - ε) V* + ε V**` that attains it.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::solver::ipf;
use crate::error::{Error, Result};
use crate::mac::{InputStructure, MacChannel};
use crate::typekit::{
    conditional_divergence, entropy_of, mutual_information, random_simplex_point, JointDistribution, Kernel, Projection,
};

pub const TILDE_U: usize = 0;
pub const TILDE_X: usize = 1;
pub const TILDE_XT: usize = 2;
pub const TILDE_Y: usize = 3;
pub const TILDE_Z: usize = 4;

/// `P_U` with the true-message composition `P^i`, the competing composition
/// `P^k` for `X̃`, and `P^j` for `Y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TildeStructure {
    pub p_u: Vec<f64>,
    pub p_x_i: Kernel,
    pub p_x_k: Kernel,
    pub p_y_j: Kernel,
}

impl TildeStructure {
    pub fn new(p_u: Vec<f64>, p_x_i: Kernel, p_x_k: Kernel, p_y_j: Kernel) -> Result<Self> {
        InputStructure::new(p_u.clone(), p_x_i.clone(), p_y_j.clone())?;
        InputStructure::new(p_u.clone(), p_x_k.clone(), p_y_j.clone())?;
        Ok(Self { p_u, p_x_i, p_x_k, p_y_j })
    }

    pub fn true_structure(&self) -> InputStructure {
        InputStructure { p_u: self.p_u.clone(), p_x_u: self.p_x_i.clone(), p_y_u: self.p_y_j.clone() }
    }

    pub fn competing_structure(&self) -> InputStructure {
        InputStructure { p_u: self.p_u.clone(), p_x_u: self.p_x_k.clone(), p_y_u: self.p_y_j.clone() }
    }

    fn dims(&self, w: &MacChannel) -> Vec<usize> {
        vec![self.p_u.len(), w.x_size(), w.x_size(), w.y_size(), w.z_size()]
    }
}

/// Objective terms and constraint margins of a law on `U X X̃ Y Z`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CthxTerms {
    /// `D(V_{Z|UXY} || W | V_{UXY})`.
    pub divergence: f64,
    /// `I(X ∧ Y | U)`.
    pub dependence: f64,
    /// `I(X̃ ∧ X, Y, Z | U)`.
    pub tilde_information: f64,
    /// `I(X̃ ∧ Y, Z | U) - R1k`, `I(Y ∧ X̃, Z | U) - R2j`,
    /// `I(X̃ ∧ Y ∧ Z | U) - R1k - R2j`.
    pub margins: [f64; 3],
    pub objective: f64,
}

impl CthxTerms {
    pub fn feasible(&self, eta: f64) -> bool {
        self.margins.iter().all(|&m| m > eta)
    }
}

/// Evaluates the terms exactly from the generic information measures.
pub fn cthx_terms(v: &JointDistribution, w: &MacChannel, r1k: f64, r2j: f64) -> Result<CthxTerms> {
    let (u, x, xt, y, z) = (TILDE_U, TILDE_X, TILDE_XT, TILDE_Y, TILDE_Z);
    let v_uxy = v.marginal(&[u, x, y])?;
    let v_z = v.conditional(&[z], &[u, x, y])?;
    let u_size = v.dims()[u];
    let w_rows: Vec<f64> = (0..u_size).flat_map(|_| w.kernel().probs().iter().copied()).collect();
    let w_exp = Kernel::new(u_size * w.kernel().rows(), w.z_size(), w_rows)?;
    let divergence = conditional_divergence(&v_z, &w_exp, &v_uxy)?.max(0.0);
    let dependence = mutual_information(v, &[x], &[y], &[u])?.max(0.0);
    let tilde_information = mutual_information(v, &[xt], &[x, y, z], &[u])?;
    let m1 = mutual_information(v, &[xt], &[y, z], &[u])? - r1k;
    let m2 = mutual_information(v, &[y], &[xt, z], &[u])? - r2j;
    let m3 = crate::typekit::multi_information(v, &[&[xt], &[y], &[z]], &[u])? - r1k - r2j;
    Ok(CthxTerms {
        divergence,
        dependence,
        tilde_information,
        margins: [m1, m2, m3],
        objective: divergence + dependence + (tilde_information - r1k).max(0.0),
    })
}

/// `P_U P^i P^j W` with `X̃` drawn afresh from `P(x | u, y, z)`.
pub fn v_star(w: &MacChannel, s: &TildeStructure) -> Result<JointDistribution> {
    let base = s.true_structure().joint(w)?;
    let (nu, nx, ny, nz) = (s.p_u.len(), w.x_size(), w.y_size(), w.z_size());
    let p = |u: usize, x: usize, y: usize, z: usize| base.probs()[((u * nx + x) * ny + y) * nz + z];
    let mut out = vec![0.0; nu * nx * nx * ny * nz];
    for u in 0..nu {
        for y in 0..ny {
            for z in 0..nz {
                let m: f64 = (0..nx).map(|x| p(u, x, y, z)).sum();
                if m <= 0.0 {
                    continue;
                }
                for x in 0..nx {
                    for xt in 0..nx {
                        out[(((u * nx + x) * nx + xt) * ny + y) * nz + z] = p(u, x, y, z) * p(u, xt, y, z) / m;
                    }
                }
            }
        }
    }
    JointDistribution::new(s.dims(w), out)
}

/// `P_U P^i P^j W` with `X̃ ~ P^k(· | u)` independent of `(X, Y, Z)` given `U`.
pub fn v_star_star(w: &MacChannel, s: &TildeStructure) -> Result<JointDistribution> {
    let base = s.true_structure().joint(w)?;
    let (nu, nx, ny, nz) = (s.p_u.len(), w.x_size(), w.y_size(), w.z_size());
    let mut out = vec![0.0; nu * nx * nx * ny * nz];
    for u in 0..nu {
        for x in 0..nx {
            for xt in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        out[(((u * nx + x) * nx + xt) * ny + y) * nz + z] =
                            base.probs()[((u * nx + x) * ny + y) * nz + z] * s.p_x_k.at(u, xt);
                    }
                }
            }
        }
    }
    JointDistribution::new(s.dims(w), out)
}

/// `(1 - ε) a + ε b`.
pub fn mixture(a: &JointDistribution, b: &JointDistribution, eps: f64) -> Result<JointDistribution> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch("mixture components differ in shape".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("mixture weight {eps} outside [0, 1]")));
    }
    let probs = a.probs().iter().zip(b.probs()).map(|(p, q)| (1.0 - eps) * p + eps * q).collect();
    JointDistribution::new(a.dims().to_vec(), probs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EcthxConfig {
    /// Random starts in addition to `V*` and `V**`.
    pub restarts: usize,
    pub seed: u64,
    /// Penalty weights, applied in order.
    pub penalties: Vec<f64>,
    pub iterations_per_stage: usize,
    /// Extra margin the penalty asks for beyond `η`.
    pub slack: f64,
}

impl Default for EcthxConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            seed: 0,
            penalties: vec![10.0, 1e2, 1e3, 1e4, 1e5],
            iterations_per_stage: 200,
            slack: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EcthxResult {
    /// `+∞` when no feasible point was found.
    pub value: f64,
    pub argmin: Option<JointDistribution>,
    pub terms: Option<CthxTerms>,
    pub feasible: bool,
}

/// Flat-array evaluator used inside the optimizer.
struct Evaluator {
    dims: Vec<usize>,
    allowed: Vec<usize>,
    pbar: Vec<f64>,
    proj_uxyz: Projection,
    proj_ux: Projection,
    proj_uxt: Projection,
    proj_uy: Projection,
    proj_u: Projection,
    proj_uyz: Projection,
    proj_uxtz: Projection,
    proj_uz: Projection,
    proj_uxtyz: Projection,
    target_ux: Vec<f64>,
    target_uxt: Vec<f64>,
    target_uy: Vec<f64>,
    r1k: f64,
    r2j: f64,
}

struct Eval {
    v: Vec<f64>,
    objective: f64,
    margins: [f64; 3],
}

fn h(p: &Projection, v: &[f64]) -> f64 {
    entropy_of(&p.project(v))
}

impl Evaluator {
    fn new(w: &MacChannel, s: &TildeStructure, r1k: f64, r2j: f64) -> Result<Self> {
        let dims = s.dims(w);
        let p = |keep: &[usize]| Projection::new(&dims, keep);
        let (u, x, xt, y, z) = (TILDE_U, TILDE_X, TILDE_XT, TILDE_Y, TILDE_Z);
        let pbar = s.true_structure().joint(w)?.probs().to_vec();
        let competing = s.competing_structure();
        let total: usize = dims.iter().product();
        let proj_uxyz = p(&[u, x, y, z])?;
        let proj_uxt = p(&[u, xt])?;
        let allowed = (0..total)
            .filter(|&c| pbar[proj_uxyz.index(c)] > 0.0 && competing.joint_ux()[proj_uxt.index(c)] > 0.0)
            .collect();
        Ok(Self {
            target_ux: s.true_structure().joint_ux(),
            target_uxt: competing.joint_ux(),
            target_uy: s.true_structure().joint_uy(),
            proj_ux: p(&[u, x])?,
            proj_uy: p(&[u, y])?,
            proj_u: p(&[u])?,
            proj_uyz: p(&[u, y, z])?,
            proj_uxtz: p(&[u, xt, z])?,
            proj_uz: p(&[u, z])?,
            proj_uxtyz: p(&[u, xt, y, z])?,
            proj_uxyz,
            proj_uxt,
            allowed,
            pbar,
            dims,
            r1k,
            r2j,
        })
    }

    fn realize(&self, theta: &[f64]) -> Vec<f64> {
        let top = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut v = vec![0.0; self.dims.iter().product()];
        for (&cell, &t) in self.allowed.iter().zip(theta) {
            v[cell] = (t - top).exp();
        }
        ipf(
            &mut v,
            &[(&self.proj_ux, &self.target_ux), (&self.proj_uxt, &self.target_uxt), (&self.proj_uy, &self.target_uy)],
            1e-14,
            5000,
        );
        v
    }

    fn eval(&self, theta: &[f64]) -> Eval {
        let v = self.realize(theta);
        let hu = h(&self.proj_u, &v);
        let hall = entropy_of(&v);
        let huxt = h(&self.proj_uxt, &v);
        let huy = h(&self.proj_uy, &v);
        let huxtyz = h(&self.proj_uxtyz, &v);
        let uxyz = self.proj_uxyz.project(&v);
        let d = crate::typekit::divergence(&uxyz, &self.pbar).max(0.0);
        let tilde_all = huxt + entropy_of(&uxyz) - hu - hall;
        let m1 = huxt + h(&self.proj_uyz, &v) - hu - huxtyz - self.r1k;
        let m2 = huy + h(&self.proj_uxtz, &v) - hu - huxtyz - self.r2j;
        let m3 = huxt + huy + h(&self.proj_uz, &v) - 2.0 * hu - huxtyz - self.r1k - self.r2j;
        Eval { v, objective: d + (tilde_all - self.r1k).max(0.0), margins: [m1, m2, m3] }
    }

    fn theta_of(&self, v: &[f64]) -> Vec<f64> {
        self.allowed.iter().map(|&c| v[c].max(1e-13).ln()).collect()
    }
}

fn penalized(e: &Eval, mu: f64, floor: f64) -> f64 {
    e.objective + mu * e.margins.iter().map(|&m| (floor - m).max(0.0).powi(2)).sum::<f64>()
}

/// `ECTHX` with the three strict threshold constraints relaxed to `≥ η`.
///
/// Penalty method on logits of the allowed cells, each iterate mapped onto
/// the marginal constraints by IPF; gradients by central differences.
/// Returns the best point that meets every constraint exactly.
pub fn ecthx_exponent(r1k: f64, r2j: f64, eta: f64, w: &MacChannel, s: &TildeStructure, cfg: &EcthxConfig) -> Result<EcthxResult> {
    if !(eta > 0.0) || !(r1k >= 0.0) || !(r2j >= 0.0) {
        return Err(Error::InvalidArgument("η must be positive and rates nonnegative".into()));
    }
    let ev = Evaluator::new(w, s, r1k, r2j)?;
    let mut starts = vec![ev.theta_of(v_star(w, s)?.probs()), ev.theta_of(v_star_star(w, s)?.probs())];
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        starts.push(random_simplex_point(ev.allowed.len(), &mut rng).iter().map(|p| p.max(1e-13).ln()).collect());
    }
    let floor = eta + cfg.slack;
    let mut best: Option<Eval> = None;
    let keep = |e: &Eval, best: &mut Option<Eval>| {
        if e.margins.iter().all(|&m| m >= eta) && best.as_ref().map(|b| e.objective < b.objective).unwrap_or(true) {
            *best = Some(Eval { v: e.v.clone(), objective: e.objective, margins: e.margins });
        }
    };
    for mut theta in starts {
        keep(&ev.eval(&theta), &mut best);
        for &mu in &cfg.penalties {
            let mut step = 1.0;
            let mut cur = ev.eval(&theta);
            let mut f = penalized(&cur, mu, floor);
            for _ in 0..cfg.iterations_per_stage {
                let hstep = 1e-6;
                let grad: Vec<f64> = (0..theta.len())
                    .map(|i| {
                        let mut tp = theta.clone();
                        tp[i] += hstep;
                        let mut tm = theta.clone();
                        tm[i] -= hstep;
                        (penalized(&ev.eval(&tp), mu, floor) - penalized(&ev.eval(&tm), mu, floor)) / (2.0 * hstep)
                    })
                    .collect();
                let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
                if gnorm2 < 1e-18 {
                    break;
                }
                step *= 2.0;
                let mut moved = false;
                while step > 1e-12 {
                    let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                    let e = ev.eval(&trial);
                    let ft = penalized(&e, mu, floor);
                    if ft <= f - 1e-4 * step * gnorm2 {
                        theta = trial;
                        cur = e;
                        f = ft;
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
                keep(&cur, &mut best);
                if !moved {
                    break;
                }
            }
        }
    }
    match best {
        None => Ok(EcthxResult { value: f64::INFINITY, argmin: None, terms: None, feasible: false }),
        Some(b) => {
            let v = JointDistribution::new(ev.dims.clone(), b.v)?;
            let terms = cthx_terms(&v, w, r1k, r2j)?;
            Ok(EcthxResult { value: terms.objective, argmin: Some(v), terms: Some(terms), feasible: true })
        }
    }
}
