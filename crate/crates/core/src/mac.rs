//! Discrete memoryless two-input channels, their pentagon regions, and
//! sampling of auxiliary input structures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::typekit::{
    conditional_divergence, entropy, joint_type_of, mutual_information, random_kernel, random_simplex_point,
    JointDistribution, Kernel, Sequence, MASS_TOL,
};

/// Axis order of the joint law `P_U P_{X|U} P_{Y|U} W`.
pub const AXIS_U: usize = 0;
pub const AXIS_X: usize = 1;
pub const AXIS_Y: usize = 2;
pub const AXIS_Z: usize = 3;

/// A MAC `W(z | x, y)`; rows are indexed by `x * |Y| + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacChannel {
    x: usize,
    y: usize,
    z: usize,
    kernel: Kernel,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KernelLayout {
    Nested(Vec<Vec<Vec<f64>>>),
    Flat(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    x: usize,
    y: usize,
    z: usize,
    kernel: KernelLayout,
}

impl Serialize for MacChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nested = (0..self.x)
            .map(|x| (0..self.y).map(|y| self.row(x, y).to_vec()).collect())
            .collect();
        ChannelFile {
            x: self.x,
            y: self.y,
            z: self.z,
            kernel: KernelLayout::Nested(nested),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MacChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ChannelFile::deserialize(d)?;
        let flat = match file.kernel {
            KernelLayout::Flat(v) => v,
            KernelLayout::Nested(rows) => {
                if rows.len() != file.x || rows.iter().any(|r| r.len() != file.y) {
                    return Err(serde::de::Error::custom(format!(
                        "kernel must be a {}x{} array of output distributions",
                        file.x, file.y
                    )));
                }
                let mut flat = Vec::with_capacity(file.x * file.y * file.z);
                for (x, row) in rows.into_iter().enumerate() {
                    for (y, out) in row.into_iter().enumerate() {
                        if out.len() != file.z {
                            return Err(serde::de::Error::custom(format!(
                                "kernel row (x={x}, y={y}) has {} entries, expected {}",
                                out.len(),
                                file.z
                            )));
                        }
                        flat.extend(out);
                    }
                }
                flat
            }
        };
        MacChannel::new(file.x, file.y, file.z, flat).map_err(serde::de::Error::custom)
    }
}

impl MacChannel {
    /// `probs` is row-major over `[x][y][z]`.
    pub fn new(x: usize, y: usize, z: usize, probs: Vec<f64>) -> Result<Self> {
        if x == 0 || y == 0 || z == 0 {
            return Err(Error::InvalidArgument("channel alphabets must be nonempty".into()));
        }
        if probs.len() != x * y * z {
            return Err(Error::DimensionMismatch(format!(
                "channel {x}x{y}->{z} needs {} entries, got {}",
                x * y * z,
                probs.len()
            )));
        }
        for xi in 0..x {
            for yi in 0..y {
                let row = &probs[(xi * y + yi) * z..(xi * y + yi + 1) * z];
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > MASS_TOL {
                    return Err(Error::NonStochasticRow {
                        row: format!("(x={xi}, y={yi})"),
                        sum,
                    });
                }
            }
        }
        let kernel = Kernel::new(x * y, z, probs)?;
        Ok(Self { x, y, z, kernel })
    }

    pub fn from_fn(x: usize, y: usize, z: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut probs = Vec::with_capacity(x * y * z);
        for xi in 0..x {
            for yi in 0..y {
                for zi in 0..z {
                    probs.push(f(xi, yi, zi));
                }
            }
        }
        Self::new(x, y, z, probs)
    }

    /// Deterministic channel `z = f(x, y)`.
    pub fn deterministic(x: usize, y: usize, z: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        Self::from_fn(x, y, z, |a, b, c| if f(a, b) == c { 1.0 } else { 0.0 })
    }

    /// Binary inputs seen without noise: `z = 2x + y`.
    pub fn noiseless_pair() -> Self {
        Self::deterministic(2, 2, 4, |x, y| 2 * x + y).expect("valid preset")
    }

    /// Each input passes through its own BSC(p); output is the pair `2x' + y'`.
    pub fn bsc_pair(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("crossover {p} outside [0, 1]")));
        }
        let flip = |a: usize, b: usize| if a == b { 1.0 - p } else { p };
        Self::from_fn(2, 2, 4, |x, y, z| flip(x, z / 2) * flip(y, z % 2))
    }

    /// Binary adder `z = x + y` over {0, 1, 2}.
    pub fn adder() -> Self {
        Self::deterministic(2, 2, 3, |x, y| x + y).expect("valid preset")
    }

    /// Binary OR channel.
    pub fn binary_or() -> Self {
        Self::deterministic(2, 2, 2, |x, y| x | y).expect("valid preset")
    }

    /// Output independent of both inputs.
    pub fn useless(x: usize, y: usize, out: &[f64]) -> Result<Self> {
        Self::from_fn(x, y, out.len(), |_, _, z| out[z])
    }

    /// Parses `noiseless-pair`, `bsc-pair:p`, `adder` or `or`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "noiseless-pair" => Ok(Self::noiseless_pair()),
            "adder" => Ok(Self::adder()),
            "or" => Ok(Self::binary_or()),
            _ => {
                if let Some(p) = name.strip_prefix("bsc-pair:") {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad crossover in preset {name:?}")))?;
                    Self::bsc_pair(p)
                } else {
                    Err(Error::InvalidArgument(format!("unknown channel preset {name:?}")))
                }
            }
        }
    }

    pub fn x_size(&self) -> usize {
        self.x
    }

    pub fn y_size(&self) -> usize {
        self.y
    }

    pub fn z_size(&self) -> usize {
        self.z
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    #[inline]
    pub fn row(&self, x: usize, y: usize) -> &[f64] {
        self.kernel.row(x * self.y + y)
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.kernel.at(x * self.y + y, z)
    }

    /// True when every transition has positive probability.
    pub fn full_support(&self) -> bool {
        self.kernel.probs().iter().all(|&p| p > 0.0)
    }

    /// Output letter of each input pair when every row is a point mass.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        (0..self.x * self.y)
            .map(|r| {
                let row = self.kernel.row(r);
                row.iter().position(|&p| p == 1.0).filter(|_| row.iter().filter(|&&p| p != 0.0).count() == 1)
            })
            .collect()
    }

    /// i.i.d. output draw, reproducible from `seed`.
    pub fn sample_output(&self, x: &Sequence, y: &Sequence, seed: u64) -> Result<Sequence> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.sample_output_with(x, y, &mut rng)
    }

    pub fn sample_output_with<R: Rng + ?Sized>(&self, x: &Sequence, y: &Sequence, rng: &mut R) -> Result<Sequence> {
        self.check_inputs(x, y)?;
        let symbols = x
            .symbols()
            .iter()
            .zip(y.symbols())
            .map(|(&a, &b)| draw(self.row(a, b), rng))
            .collect();
        Sequence::new(self.z, symbols)
    }

    fn check_inputs(&self, x: &Sequence, y: &Sequence) -> Result<()> {
        if x.alphabet() != self.x || y.alphabet() != self.y {
            return Err(Error::DimensionMismatch(format!(
                "inputs over {}x{} for a {}x{} channel",
                x.alphabet(),
                y.alphabet(),
                self.x,
                self.y
            )));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        Ok(())
    }

    /// `log2 W^n(z | x, y)` as a per-symbol sum; `-inf` on a forbidden transition.
    pub fn nfold_log_prob(&self, x: &Sequence, y: &Sequence, z: &Sequence) -> Result<f64> {
        self.check_inputs(x, y)?;
        if z.len() != x.len() {
            return Err(Error::LengthMismatch(x.len(), z.len()));
        }
        let mut total = 0.0;
        for t in 0..x.len() {
            let p = self.prob(x.symbols()[t], y.symbols()[t], z.symbols()[t]);
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += p.log2();
        }
        Ok(total)
    }

    /// The same quantity through the joint type `V` of `(x, y, z)`:
    /// `-n (D(V_{Z|XY} || W | V_{XY}) + H_V(Z | XY))`.
    pub fn nfold_log_prob_via_type(&self, x: &Sequence, y: &Sequence, z: &Sequence) -> Result<f64> {
        self.check_inputs(x, y)?;
        let v = joint_type_of(&[x, y, z])?.to_distribution();
        let n = x.len() as f64;
        let v_xy = v.marginal(&[0, 1])?;
        let v_z_xy = v.conditional(&[2], &[0, 1])?;
        let d = conditional_divergence(&v_z_xy, &self.kernel, &v_xy)?;
        if d.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let h = entropy(&v, &[2], &[0, 1])?;
        Ok(-n * (d + h))
    }
}

pub(crate) fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if r < acc {
                return i;
            }
        }
    }
    last
}

/// The auxiliary structure `(P_U, P_{X|U}, P_{Y|U})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputStructure {
    pub p_u: Vec<f64>,
    pub p_x_u: Kernel,
    pub p_y_u: Kernel,
}

impl InputStructure {
    pub fn new(p_u: Vec<f64>, p_x_u: Kernel, p_y_u: Kernel) -> Result<Self> {
        JointDistribution::from_vec(p_u.clone())?;
        if p_x_u.rows() != p_u.len() || p_y_u.rows() != p_u.len() {
            return Err(Error::DimensionMismatch(format!(
                "P_U over {} symbols with kernels of {} and {} rows",
                p_u.len(),
                p_x_u.rows(),
                p_y_u.rows()
            )));
        }
        Ok(Self { p_u, p_x_u, p_y_u })
    }

    /// `|U| = 1` with the given input distributions.
    pub fn single(p_x: &[f64], p_y: &[f64]) -> Result<Self> {
        Self::new(vec![1.0], Kernel::constant_rows(1, p_x)?, Kernel::constant_rows(1, p_y)?)
    }

    /// `|U| = 1` with uniform inputs.
    pub fn uniform(x: usize, y: usize) -> Self {
        Self::single(&vec![1.0 / x as f64; x], &vec![1.0 / y as f64; y]).expect("uniform inputs")
    }

    /// Dirichlet(1)-random structure.
    pub fn random<R: Rng + ?Sized>(u: usize, x: usize, y: usize, rng: &mut R) -> Self {
        let p_u = random_simplex_point(u, rng);
        let p_x_u = random_kernel(u, x, rng);
        let p_y_u = random_kernel(u, y, rng);
        Self { p_u, p_x_u, p_y_u }
    }

    pub fn u_size(&self) -> usize {
        self.p_u.len()
    }

    pub fn x_size(&self) -> usize {
        self.p_x_u.cols()
    }

    pub fn y_size(&self) -> usize {
        self.p_y_u.cols()
    }

    /// `P_U P_{X|U}` as a `U x X` joint.
    pub fn joint_ux(&self) -> Vec<f64> {
        joint_with(&self.p_u, &self.p_x_u)
    }

    pub fn joint_uy(&self) -> Vec<f64> {
        joint_with(&self.p_u, &self.p_y_u)
    }

    fn check_channel(&self, w: &MacChannel) -> Result<()> {
        if self.x_size() != w.x || self.y_size() != w.y {
            return Err(Error::DimensionMismatch(format!(
                "input structure over {}x{} for a {}x{} channel",
                self.x_size(),
                self.y_size(),
                w.x,
                w.y
            )));
        }
        Ok(())
    }

    /// `P_U P_{X|U} P_{Y|U} W` over axes `(U, X, Y, Z)`.
    pub fn joint(&self, w: &MacChannel) -> Result<JointDistribution> {
        self.check_channel(w)?;
        let (u, x, y, z) = (self.u_size(), w.x, w.y, w.z);
        let mut probs = Vec::with_capacity(u * x * y * z);
        for ui in 0..u {
            for xi in 0..x {
                for yi in 0..y {
                    let base = self.p_u[ui] * self.p_x_u.at(ui, xi) * self.p_y_u.at(ui, yi);
                    probs.extend(w.row(xi, yi).iter().map(|&p| base * p));
                }
            }
        }
        Ok(JointDistribution::from_parts_unchecked(vec![u, x, y, z], probs))
    }

    /// Merges `u` symbols with identical input rows. The pentagon and
    /// every exponent depend on the structure only through the merged form.
    pub fn merged(&self) -> InputStructure {
        let mut reps: Vec<usize> = Vec::new();
        let mut p_u: Vec<f64> = Vec::new();
        for u in 0..self.u_size() {
            let found = reps
                .iter()
                .position(|&r| self.p_x_u.row(r) == self.p_x_u.row(u) && self.p_y_u.row(r) == self.p_y_u.row(u));
            match found {
                Some(k) => p_u[k] += self.p_u[u],
                None => {
                    reps.push(u);
                    p_u.push(self.p_u[u]);
                }
            }
        }
        let rows = |k: &Kernel| -> Kernel {
            let probs: Vec<f64> = reps.iter().flat_map(|&r| k.row(r).to_vec()).collect();
            Kernel::new(reps.len(), k.cols(), probs).expect("rows copied from a valid kernel")
        };
        InputStructure {
            p_u,
            p_x_u: rows(&self.p_x_u),
            p_y_u: rows(&self.p_y_u),
        }
    }
}

pub(crate) fn joint_with(p_u: &[f64], k: &Kernel) -> Vec<f64> {
    p_u.iter()
        .enumerate()
        .flat_map(|(u, &pu)| k.row(u).iter().map(move |&p| pu * p))
        .collect()
}

/// A rate pair in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r2 >= 0.0) || !r1.is_finite() || !r2.is_finite() {
            return Err(Error::InvalidArgument(format!("rates ({r1}, {r2}) must be finite and nonnegative")));
        }
        Ok(Self { r1, r2 })
    }
}

/// The rate region of a fixed input structure, in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    pub r1_max: f64,
    pub r2_max: f64,
    pub sum_max: f64,
}

impl Pentagon {
    /// `I(X∧Z|UY)`, `I(Y∧Z|UX)`, `I(XY∧Z|U)` under `P_U P_{X|U} P_{Y|U} W`.
    pub fn of(w: &MacChannel, s: &InputStructure) -> Result<Self> {
        let p = s.joint(w)?;
        let (u, x, y, z) = (AXIS_U, AXIS_X, AXIS_Y, AXIS_Z);
        let clamp = |v: f64| v.max(0.0);
        Ok(Self {
            r1_max: clamp(mutual_information(&p, &[x], &[z], &[u, y])?),
            r2_max: clamp(mutual_information(&p, &[y], &[z], &[u, x])?),
            sum_max: clamp(mutual_information(&p, &[x, y], &[z], &[u])?),
        })
    }

    /// Strict interior in the relative topology of the quadrant: a zero
    /// coordinate never disqualifies. `margin` shrinks every bound.
    pub fn contains_interior(&self, r: RatePair, margin: f64) -> bool {
        let ok1 = r.r1 == 0.0 || r.r1 < self.r1_max - margin;
        let ok2 = r.r2 == 0.0 || r.r2 < self.r2_max - margin;
        ok1 && ok2 && r.r1 + r.r2 < self.sum_max - margin
    }

    /// Outside the closed region shrunk to the quadrant, by at least `margin`
    /// in one of the three constraints.
    pub fn clearly_outside(&self, r: RatePair, margin: f64) -> bool {
        r.r1 > self.r1_max + margin || r.r2 > self.r2_max + margin || r.r1 + r.r2 > self.sum_max + margin
    }
}

pub fn pentagon(w: &MacChannel, s: &InputStructure) -> Result<Pentagon> {
    Pentagon::of(w, s)
}

pub fn in_interior(r: RatePair, p: &Pentagon) -> bool {
    p.contains_interior(r, 0.0)
}

/// Largest auxiliary alphabet used when sampling input structures.
pub const MAX_AUX_U: usize = 4;

/// Deterministic list of candidate input structures: first `|U| = 1` with
/// uniform inputs, then Dirichlet-random structures with `|U|` cycling
/// through `1..=max_u`.
pub fn sample_input_structures(x: usize, y: usize, count: usize, max_u: usize, seed: u64) -> Vec<InputStructure> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(InputStructure::uniform(x, y));
    }
    for k in 1..count {
        let u = 1 + (k - 1) % max_u.max(1);
        out.push(InputStructure::random(u, x, y, &mut rng));
    }
    out
}

/// Outcome of the standing-assumption search.
#[derive(Debug, Clone, Serialize)]
pub struct StandingAssumption {
    pub holds: bool,
    pub witness: Option<InputStructure>,
    pub pentagon: Option<Pentagon>,
    pub examined: usize,
}

/// Looks for a sampled structure whose pentagon interior contains
/// `(H(Q1), H(Q2))`. A negative answer may be conservative.
pub fn standing_assumption_check(
    w: &MacChannel,
    q1: &JointDistribution,
    q2: &JointDistribution,
    aux_budget: usize,
    seed: u64,
) -> Result<StandingAssumption> {
    if aux_budget == 0 {
        return Err(Error::InvalidArgument("aux_budget must be at least 1".into()));
    }
    let h1 = entropy(q1, &[0], &[])?;
    let h2 = entropy(q2, &[0], &[])?;
    let point = RatePair::new(h1.max(0.0), h2.max(0.0))?;
    let candidates = sample_input_structures(w.x, w.y, aux_budget, MAX_AUX_U, seed);
    for (k, s) in candidates.into_iter().enumerate() {
        let p = Pentagon::of(w, &s)?;
        if p.contains_interior(point, 0.0) {
            return Ok(StandingAssumption {
                holds: true,
                witness: Some(s),
                pentagon: Some(p),
                examined: k + 1,
            });
        }
    }
    Ok(StandingAssumption {
        holds: false,
        witness: None,
        pentagon: None,
        examined: aux_budget,
    })
}
