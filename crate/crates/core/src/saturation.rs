//! Saturation functions `sigma_k(N) = sum_{n <= N} w_k(n)`.
//!
//! Three designs are provided:
//! - `Identity`: `w(n) = 1`, which reduces saturated consensus to plain
//!   inlier counting;
//! - `Truncated`: `w(n) = 1{n = 1}`, counting settled samples;
//! - `Likelihood`: `w_k(n) = ln((M_k + nC) / (M_k + (n-1)C))` with
//!   `C = u / eps * q / (1 - q)`, so `sigma_k(N) = ln(1 + C N / M_k)`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaturationKind {
    Identity,
    Truncated,
    Likelihood,
}

impl fmt::Display for SaturationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SaturationKind::Identity => "identity",
            SaturationKind::Truncated => "truncated",
            SaturationKind::Likelihood => "likelihood",
        })
    }
}

impl FromStr for SaturationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "cm" => Ok(SaturationKind::Identity),
            "truncated" | "scm0" => Ok(SaturationKind::Truncated),
            "likelihood" | "scm1" => Ok(SaturationKind::Likelihood),
            other => Err(Error::Config(format!("unknown saturation kind `{other}`"))),
        }
    }
}

/// Prior probability for trusted (annotated) labels.
pub const DEFAULT_Q_TRUSTED: f64 = 0.9;
/// Prior probability for labels coming from a segmentation model.
pub const DEFAULT_Q_PREDICTED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationSpec {
    kind: SaturationKind,
    q: f64,
    epsilon: f64,
    upper_bound: f64,
}

impl SaturationSpec {
    pub fn identity() -> Self {
        SaturationSpec {
            kind: SaturationKind::Identity,
            q: DEFAULT_Q_TRUSTED,
            epsilon: 0.5,
            upper_bound: 1.0,
        }
    }

    pub fn truncated() -> Self {
        SaturationSpec {
            kind: SaturationKind::Truncated,
            ..Self::identity()
        }
    }

    /// `q` is the probability that a sample's association set contains its
    /// real match; `epsilon` the inlier tolerance and `upper_bound` the
    /// largest possible residual.
    pub fn likelihood(q: f64, epsilon: f64, upper_bound: f64) -> Result<Self> {
        Self::new(SaturationKind::Likelihood, q, epsilon, upper_bound)
    }

    pub fn new(kind: SaturationKind, q: f64, epsilon: f64, upper_bound: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("q = {q} must lie in (0, 1)")));
        }
        if !(epsilon > 0.0 && epsilon < upper_bound && upper_bound.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < epsilon ({epsilon}) < upper bound ({upper_bound})"
            )));
        }
        Ok(SaturationSpec {
            kind,
            q,
            epsilon,
            upper_bound,
        })
    }

    pub fn kind(&self) -> SaturationKind {
        self.kind
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    /// `C = u / eps * q / (1 - q)`; only defined for the likelihood design.
    pub fn scaling_constant(&self) -> Result<f64> {
        match self.kind {
            SaturationKind::Likelihood => Ok(self.upper_bound / self.epsilon * self.q / (1.0 - self.q)),
            k => Err(Error::Unsupported(format!(
                "saturation kind `{k}` has no scaling constant"
            ))),
        }
    }

    fn c(&self) -> f64 {
        self.upper_bound / self.epsilon * self.q / (1.0 - self.q)
    }

    /// Weight of the `n`-th inlier of a sample with `m_k` associations.
    pub fn weight(&self, m_k: usize, n: usize) -> Result<f64> {
        if n == 0 || n > m_k {
            return Err(Error::contract(format!("weight index {n} outside 1..={m_k}")));
        }
        Ok(self.weight_unchecked(m_k, n))
    }

    fn weight_unchecked(&self, m_k: usize, n: usize) -> f64 {
        match self.kind {
            SaturationKind::Identity => 1.0,
            SaturationKind::Truncated => {
                if n == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            SaturationKind::Likelihood => {
                let c = self.c();
                // ln((M + nC) / (M + (n-1)C)) = ln(1 + C / (M + (n-1)C))
                (c / (m_k as f64 + (n - 1) as f64 * c)).ln_1p()
            }
        }
    }

    /// `sigma_k(N)` for a sample with `m_k` associations.
    pub fn sigma(&self, m_k: usize, n: usize) -> Result<f64> {
        if n > m_k {
            return Err(Error::contract(format!("sigma argument {n} exceeds {m_k}")));
        }
        Ok(self.sigma_unchecked(m_k, n))
    }

    fn sigma_unchecked(&self, m_k: usize, n: usize) -> f64 {
        match self.kind {
            SaturationKind::Identity => n as f64,
            SaturationKind::Truncated => {
                if n >= 1 {
                    1.0
                } else {
                    0.0
                }
            }
            SaturationKind::Likelihood => {
                if n == 0 {
                    0.0
                } else {
                    (self.c() * n as f64 / m_k as f64).ln_1p()
                }
            }
        }
    }
}

/// Memoized `sigma_k(0..=M_k)` and weights for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    sigma: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightTable {
    pub fn new(spec: &SaturationSpec, m_k: usize) -> Self {
        let sigma = (0..=m_k).map(|n| spec.sigma_unchecked(m_k, n)).collect();
        // index 0 is unused padding so that weights[n] = w(n)
        let weights = std::iter::once(0.0)
            .chain((1..=m_k).map(|n| spec.weight_unchecked(m_k, n)))
            .collect();
        WeightTable { sigma, weights }
    }

    pub fn association_count(&self) -> usize {
        self.sigma.len() - 1
    }

    /// `sigma(n)`; counts beyond `M_k` saturate at `sigma(M_k)`.
    #[inline]
    pub fn sigma(&self, n: usize) -> f64 {
        self.sigma[n.min(self.sigma.len() - 1)]
    }

    /// `w(n)` for `1 <= n`; zero beyond `M_k`.
    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }
}

/// One weight table per sample, shared by every table of equal `M_k`.
#[derive(Debug, Clone)]
pub struct WeightBank {
    tables: Vec<std::sync::Arc<WeightTable>>,
}

impl WeightBank {
    pub fn new(spec: &SaturationSpec, counts: &[usize]) -> Self {
        let mut cache: std::collections::HashMap<usize, std::sync::Arc<WeightTable>> = Default::default();
        let tables = counts
            .iter()
            .map(|&m| {
                cache
                    .entry(m)
                    .or_insert_with(|| std::sync::Arc::new(WeightTable::new(spec, m)))
                    .clone()
            })
            .collect();
        WeightBank { tables }
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    #[inline]
    pub fn table(&self, sample: usize) -> &WeightTable {
        &self.tables[sample]
    }

    pub fn tables(&self) -> impl Iterator<Item = &WeightTable> {
        self.tables.iter().map(|t| t.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_constant_examples() {
        let s = SaturationSpec::likelihood(0.5, 0.5, 1.0).unwrap();
        assert!((s.scaling_constant().unwrap() - 2.0).abs() < 1e-15);
        // 1 / 0.015 * 0.9 / 0.1 = 600 exactly in rational arithmetic
        let s = SaturationSpec::likelihood(0.9, 0.015, 1.0).unwrap();
        assert!((s.scaling_constant().unwrap() - 600.0).abs() < 1e-9);
        assert!(SaturationSpec::identity().scaling_constant().is_err());
        assert!(SaturationSpec::truncated().scaling_constant().is_err());
    }

    #[test]
    fn tiny_q_flattens_weights() {
        let s = SaturationSpec::likelihood(1e-12, 0.5, 1.0).unwrap();
        assert!(s.scaling_constant().unwrap() < 1e-11);
        assert!(s.sigma(5, 5).unwrap() < 1e-11);
        assert!(s.weight(5, 1).unwrap() < 1e-11);
    }

    #[test]
    fn weight_examples() {
        let id = SaturationSpec::identity();
        assert_eq!(id.weight(7, 3).unwrap(), 1.0);
        let tr = SaturationSpec::truncated();
        assert_eq!(tr.weight(7, 2).unwrap(), 0.0);
        assert_eq!(tr.weight(7, 1).unwrap(), 1.0);
        let lk = SaturationSpec::likelihood(0.9, 0.015, 1.0).unwrap();
        // ln((2 + 600) / 2) = ln(301)
        assert!((lk.weight(2, 1).unwrap() - 301f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sigma_examples() {
        for s in [
            SaturationSpec::identity(),
            SaturationSpec::truncated(),
            SaturationSpec::likelihood(0.7, 0.1, 1.0).unwrap(),
        ] {
            assert_eq!(s.sigma(4, 0).unwrap(), 0.0);
        }
        assert_eq!(SaturationSpec::truncated().sigma(9, 4).unwrap(), 1.0);
        let lk = SaturationSpec::likelihood(0.9, 0.015, 1.0).unwrap();
        assert!((lk.sigma(13, 13).unwrap() - 601f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_is_contract_violation() {
        let s = SaturationSpec::identity();
        assert!(matches!(s.weight(3, 0), Err(Error::ContractViolation(_))));
        assert!(matches!(s.weight(3, 4), Err(Error::ContractViolation(_))));
        assert!(matches!(s.sigma(3, 4), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(SaturationSpec::likelihood(1.0, 0.1, 1.0).is_err());
        assert!(SaturationSpec::likelihood(0.0, 0.1, 1.0).is_err());
        assert!(SaturationSpec::likelihood(0.5, 1.0, 1.0).is_err());
        assert!(SaturationSpec::likelihood(0.5, -0.1, 1.0).is_err());
    }

    #[test]
    fn table_matches_spec() {
        let s = SaturationSpec::likelihood(0.6, 0.03, 1.0).unwrap();
        let t = WeightTable::new(&s, 12);
        assert_eq!(t.association_count(), 12);
        for n in 1..=12 {
            assert_eq!(t.weight(n), s.weight(12, n).unwrap());
            assert_eq!(t.sigma(n), s.sigma(12, n).unwrap());
        }
        assert_eq!(t.sigma(40), t.sigma(12));
        assert_eq!(t.weight(13), 0.0);
    }

    #[test]
    fn bank_shares_tables() {
        let s = SaturationSpec::identity();
        let b = WeightBank::new(&s, &[3, 5, 3]);
        assert_eq!(b.len(), 3);
        assert!(std::ptr::eq(b.table(0), b.table(2)));
        assert_eq!(b.table(1).association_count(), 5);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("SCM1".parse::<SaturationKind>().unwrap(), SaturationKind::Likelihood);
        assert_eq!("truncated".parse::<SaturationKind>().unwrap(), SaturationKind::Truncated);
        assert!("foo".parse::<SaturationKind>().is_err());
    }
}
