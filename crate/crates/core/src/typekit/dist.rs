//! Dense probability tensors over products of finite alphabets, and
//! row-stochastic kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass tolerance for a valid distribution.
pub const MASS_TOL: f64 = 1e-9;

/// A finite alphabet. Labels are only used in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        Self::with_labels((0..size).map(|s| s.to_string()).collect())
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidArgument("alphabet labels must be distinct".into()));
        }
        Ok(Self {
            size: labels.len(),
            labels,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Cell-to-marginal index map for a fixed subset of axes.
///
/// The marginal is laid out row-major over the kept axes in the order given.
#[derive(Debug, Clone)]
pub struct Projection {
    map: Vec<usize>,
    size: usize,
    kept_dims: Vec<usize>,
}

impl Projection {
    pub fn new(dims: &[usize], keep: &[usize]) -> Result<Self> {
        validate_axes(dims.len(), &[keep])?;
        let kept_dims: Vec<usize> = keep.iter().map(|&a| dims[a]).collect();
        let kept_strides = strides(&kept_dims);
        let full_strides = strides(dims);
        let total: usize = dims.iter().product();
        let mut map = Vec::with_capacity(total);
        for cell in 0..total {
            let mut m = 0;
            for (slot, &axis) in keep.iter().enumerate() {
                let coord = (cell / full_strides[axis]) % dims[axis];
                m += coord * kept_strides[slot];
            }
            map.push(m);
        }
        Ok(Self {
            map,
            size: kept_dims.iter().product(),
            kept_dims,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kept_dims(&self) -> &[usize] {
        &self.kept_dims
    }

    #[inline]
    pub fn index(&self, cell: usize) -> usize {
        self.map[cell]
    }

    pub fn project_into(&self, data: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (cell, &p) in data.iter().enumerate() {
            out[self.map[cell]] += p;
        }
    }

    pub fn project(&self, data: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        self.project_into(data, &mut out);
        out
    }
}

/// Checks that every axis is in range and that the given sets are pairwise
/// disjoint (and free of repeats).
pub(crate) fn validate_axes(rank: usize, sets: &[&[usize]]) -> Result<()> {
    let mut seen = vec![false; rank];
    for set in sets {
        for &a in *set {
            if a >= rank {
                return Err(Error::AxisOutOfRange { axis: a, rank });
            }
            if seen[a] {
                return Err(Error::OverlappingAxes(a));
            }
            seen[a] = true;
        }
    }
    Ok(())
}

/// Probability tensor over a product of finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct JointDistribution {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    axes: Vec<usize>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for JointDistribution {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        JointDistribution::new(raw.axes, raw.probs)
    }
}

impl From<JointDistribution> for RawDistribution {
    fn from(d: JointDistribution) -> Self {
        RawDistribution {
            axes: d.dims,
            probs: d.probs,
        }
    }
}

impl JointDistribution {
    /// Validates nonnegativity and total mass (within [`MASS_TOL`]). No renormalization.
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDistribution("zero-sized axis".into()));
        }
        let total: usize = dims.iter().product();
        if probs.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "axes {:?} need {} entries, got {}",
                dims,
                total,
                probs.len()
            )));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {mass}")));
        }
        Ok(Self { dims, probs })
    }

    /// Builds a distribution by normalizing nonnegative weights.
    pub fn from_weights(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDistribution(format!("weights sum to {mass}")));
        }
        Self::new(dims, weights.into_iter().map(|w| w / mass).collect())
    }

    pub fn uniform(dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        Self::new(dims, vec![1.0 / total as f64; total])
    }

    pub fn point_mass(dims: Vec<usize>, coords: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut probs = vec![0.0; total];
        let idx = flat_index(&dims, coords)?;
        probs[idx] = 1.0;
        Self::new(dims, probs)
    }

    /// One-dimensional distribution.
    pub fn from_vec(probs: Vec<f64>) -> Result<Self> {
        Self::new(vec![probs.len()], probs)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, coords: &[usize]) -> Result<f64> {
        Ok(self.probs[flat_index(&self.dims, coords)?])
    }

    /// Marginal over `axes`, laid out in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointDistribution> {
        let proj = Projection::new(&self.dims, axes)?;
        let probs = proj.project(&self.probs);
        let dims = if axes.is_empty() { vec![1] } else { proj.kept_dims().to_vec() };
        Ok(JointDistribution { dims, probs })
    }

    /// Reorders axes; `order[k]` is the old axis placed at position `k`.
    pub fn permute(&self, order: &[usize]) -> Result<JointDistribution> {
        if order.len() != self.rank() {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        self.marginal(order)
    }

    /// Conditional kernel of `target` given `cond`. Rows whose conditioning
    /// event has zero mass are filled uniformly.
    pub fn conditional(&self, target: &[usize], cond: &[usize]) -> Result<Kernel> {
        validate_axes(self.rank(), &[target, cond])?;
        let mut both = cond.to_vec();
        both.extend_from_slice(target);
        let joint = self.marginal(&both)?;
        let rows: usize = cond.iter().map(|&a| self.dims[a]).product();
        let cols: usize = target.iter().map(|&a| self.dims[a]).product();
        let mut probs = joint.probs;
        for r in 0..rows {
            let row = &mut probs[r * cols..(r + 1) * cols];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.iter_mut().for_each(|p| *p = 1.0 / cols as f64);
            }
        }
        Kernel::new(rows, cols, probs)
    }

    /// Independent product; axes of `self` come first.
    pub fn product(&self, other: &JointDistribution) -> JointDistribution {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &p in &self.probs {
            for &q in &other.probs {
                probs.push(p * q);
            }
        }
        JointDistribution { dims, probs }
    }

    /// Appends axes distributed by `kernel` given all current axes.
    pub fn extend(&self, kernel: &Kernel, new_dims: &[usize]) -> Result<JointDistribution> {
        let cols: usize = new_dims.iter().product();
        if kernel.rows() != self.len() || kernel.cols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "kernel {}x{} cannot extend {} cells by {:?}",
                kernel.rows(),
                kernel.cols(),
                self.len(),
                new_dims
            )));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(new_dims);
        let mut probs = Vec::with_capacity(self.len() * cols);
        for (r, &p) in self.probs.iter().enumerate() {
            probs.extend(kernel.row(r).iter().map(|&k| p * k));
        }
        Ok(JointDistribution { dims, probs })
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, probs: Vec<f64>) -> Self {
        Self { dims, probs }
    }
}

pub(crate) fn flat_index(dims: &[usize], coords: &[usize]) -> Result<usize> {
    if coords.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates for {} axes",
            coords.len(),
            dims.len()
        )));
    }
    let mut idx = 0;
    for (&c, &d) in coords.iter().zip(dims) {
        if c >= d {
            return Err(Error::SymbolOutOfRange { symbol: c, size: d });
        }
        idx = idx * d + c;
    }
    Ok(idx)
}

/// Row-stochastic matrix, e.g. `P_{X|U}` or a channel flattened over its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Kernel {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Kernel {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Kernel::from_rows(rows)
    }
}

impl From<Kernel> for Vec<Vec<f64>> {
    fn from(k: Kernel) -> Self {
        (0..k.rows).map(|r| k.row(r).to_vec()).collect()
    }
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "kernel {rows}x{cols} with {} entries",
                probs.len()
            )));
        }
        for r in 0..rows {
            let row = &probs[r * cols..(r + 1) * cols];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > MASS_TOL {
                return Err(Error::NonStochasticRow {
                    row: r.to_string(),
                    sum,
                });
            }
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged kernel rows".into()));
        }
        let n = rows.len();
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    /// Same distribution in every row.
    pub fn constant_rows(rows: usize, row: &[f64]) -> Result<Self> {
        Self::new(rows, row.len(), row.iter().cloned().cycle().take(rows * row.len()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.probs[r * self.cols + c]
    }
}
