//! Entropies of integer count tensors through a cached `c log2 c` table.

use super::dist::Projection;

/// `L[c] = c log2 c` for `c = 0..=n`.
#[derive(Debug, Clone)]
pub struct LogTable {
    l: Vec<f64>,
}

impl LogTable {
    pub fn new(n: usize) -> Self {
        Self { l: (0..=n).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() }).collect() }
    }

    pub fn n(&self) -> usize {
        self.l.len() - 1
    }

    #[inline]
    pub fn l(&self, c: u64) -> f64 {
        self.l[c as usize]
    }

    /// `n H(counts / n)` in bits, where `n` is the table size.
    pub fn n_entropy(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        self.l(n) - counts.iter().map(|&c| self.l(c)).sum::<f64>()
    }

    /// `n I(G_1 ∧ ... ∧ G_m | A_0)` for a count tensor, where axis 0 is the
    /// conditioning variable and each remaining axis is its own group.
    pub fn n_conditional_multi_information(&self, dims: &[usize], counts: &[u64]) -> f64 {
        let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let marg = |keep: &[usize]| -> Vec<u64> {
            Projection::new(dims, keep).expect("axes within rank").project(&as_f).iter().map(|&v| v.round() as u64).collect()
        };
        let h0 = self.n_entropy(&marg(&[0]));
        let groups: f64 = (1..dims.len()).map(|g| self.n_entropy(&marg(&[0, g])) - h0).sum();
        groups - (self.n_entropy(counts) - h0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typekit::{multi_information, EmpiricalType};

    #[test]
    fn matches_the_float_measures() {
        let counts = vec![3, 1, 0, 2, 1, 1, 2, 0, 1, 1, 0, 0];
        let n: u64 = counts.iter().sum();
        let t = EmpiricalType::new(vec![2, 2, 3], counts.clone()).unwrap();
        let table = LogTable::new(n as usize);
        let got = table.n_conditional_multi_information(&[2, 2, 3], &counts) / n as f64;
        let want = multi_information(&t.to_distribution(), &[&[1], &[2]], &[0]).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((table.n_entropy(&[2, 2]) - 4.0).abs() < 1e-12);
    }
}
