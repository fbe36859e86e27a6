//! Parameter vectors, sufficient statistics and membership in the
//! parameter spaces of the univariate and bivariate models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{self, Poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// `(0, ∞)`
    HalfLine,
    /// `(-∞, ∞)`; the order must be even.
    RealLine,
}

/// Natural parameter `(θ_1, …, θ_d)` of `exp(θ_1 x + … + θ_d x^d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaUni {
    coeffs: Vec<f64>,
    support: Support,
}

/// Where a univariate parameter sits relative to `Ω_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// `θ_d < 0`.
    Interior,
    /// `θ_d = … = θ_{k+1} = 0` and `θ_k < 0`: an order-`k` model.
    Boundary { order: usize },
    /// The normalizing constant diverges.
    Outside,
}

impl ThetaUni {
    pub fn new(coeffs: Vec<f64>, support: Support) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        if support == Support::RealLine && coeffs.len() % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "real-line models need an even order, got {}",
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta_{} is not finite", i + 1)));
        }
        Ok(Self { coeffs, support })
    }

    pub fn half_line(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.to_vec(), Support::HalfLine)
    }

    pub fn real_line(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.to_vec(), Support::RealLine)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Exponent `θ_1 x + … + θ_d x^d`.
    pub fn exponent(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * x)
    }

    /// Classification by the sign of the last non-zero coefficient (exact
    /// comparison against zero). On the real line the effective order must
    /// also be even.
    pub fn classify(&self) -> Membership {
        let Some(last) = self.coeffs.iter().rposition(|&c| c != 0.0) else {
            return Membership::Outside;
        };
        let k = last + 1;
        if self.coeffs[last] > 0.0 || (self.support == Support::RealLine && k % 2 == 1) {
            return Membership::Outside;
        }
        if k == self.order() {
            Membership::Interior
        } else {
            Membership::Boundary { order: k }
        }
    }

    /// Drops trailing zeros; the result has the effective order.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        Self::new(self.coeffs[..order].to_vec(), self.support)
    }

    /// Appends zeros up to `order`.
    pub fn embedded(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order.max(coeffs.len()), 0.0);
        Self {
            coeffs,
            support: self.support,
        }
    }

    pub fn require_interior(&self) -> Result<()> {
        match self.classify() {
            Membership::Interior => Ok(()),
            Membership::Boundary { .. } => Err(Error::SingularLeadingCoefficient {
                order: self.order(),
            }),
            Membership::Outside => Err(Error::OutsideDomain(format!(
                "theta = {:?} has a divergent normalizing constant",
                self.coeffs
            ))),
        }
    }
}

pub fn classify_theta_uni(theta: &ThetaUni) -> Membership {
    theta.classify()
}

/// Number of coefficients `θ_{ij}`, `1 ≤ i + j ≤ d`.
pub fn bi_len(d: usize) -> usize {
    d * (d + 3) / 2
}

/// Position of `θ_{ij}` in the flat ordering
/// `θ10, θ01, θ20, θ11, θ02, θ30, …` (by degree, then by decreasing `i`).
pub fn bi_index(i: usize, j: usize) -> usize {
    let n = i + j;
    debug_assert!(n >= 1);
    n * (n + 1) / 2 - 1 + j
}

/// Inverse of [`bi_index`].
pub fn bi_pairs(d: usize) -> Vec<(usize, usize)> {
    (1..=d)
        .flat_map(|n| (0..=n).map(move |j| (n - j, j)))
        .collect()
}

/// Coefficients `θ_{ij}` of the bivariate model of degree `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBi {
    d: usize,
    coeffs: Vec<f64>,
}

impl ThetaBi {
    /// `coeffs` in the [`bi_index`] ordering.
    pub fn new(d: usize, coeffs: Vec<f64>) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        if coeffs.len() != bi_len(d) {
            return Err(Error::InvalidParameter(format!(
                "degree {d} needs {} coefficients, got {}",
                bi_len(d),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self { d, coeffs })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            coeffs: vec![0.0; bi_len(d)],
        }
    }

    /// The product point: `θ_{d0} = -c1`, `θ_{0d} = -c2`, everything else zero.
    pub fn product_point(d: usize, c1: f64, c2: f64) -> Self {
        let mut t = Self::zeros(d);
        t.set(d, 0, -c1);
        t.set(0, d, -c2);
        t
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `θ_{ij}`; `θ_{00}` and out-of-range indices are zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j == 0 || i + j > self.d {
            0.0
        } else {
            self.coeffs[bi_index(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.coeffs[bi_index(i, j)] = value;
    }

    /// `[θ_{d0}, θ_{d-1,1}, …, θ_{0d}]`.
    pub fn top(&self) -> Vec<f64> {
        (0..=self.d).map(|j| self.get(self.d - j, j)).collect()
    }

    /// `(θ_{10}, …, θ_{d0})`.
    pub fn x_axis(&self) -> Vec<f64> {
        (1..=self.d).map(|i| self.get(i, 0)).collect()
    }

    /// `(θ_{01}, …, θ_{0d})`.
    pub fn y_axis(&self) -> Vec<f64> {
        (1..=self.d).map(|j| self.get(0, j)).collect()
    }

    /// Roles of `x` and `y` swapped.
    pub fn transposed(&self) -> Self {
        let mut t = Self::zeros(self.d);
        for (i, j) in bi_pairs(self.d) {
            t.set(j, i, self.get(i, j));
        }
        t
    }

    pub fn exponent(&self, x: f64, y: f64) -> f64 {
        bi_pairs(self.d)
            .into_iter()
            .map(|(i, j)| self.get(i, j) * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }
}

/// Membership in `Θ'`: `θ_{d0} < 0`, `θ_{0d} < 0` and `p(a; θ) < 0` for
/// every `a ≥ 0`, decided by counting the positive roots of the top form.
pub fn in_proper_bivariate_space(theta: &ThetaBi) -> bool {
    let top = theta.top();
    let d = theta.degree();
    if !(top[0] < 0.0 && top[d] < 0.0) {
        return false;
    }
    match Poly::from_descending(&top) {
        Ok(p) => polyalg::positive_root_count_lenient(&p) == 0,
        Err(_) => false,
    }
}

/// Univariate sample means `x̄^m`, `m = 1..=order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffStatsUni {
    pub n: usize,
    pub support: Support,
    /// `moments[m - 1] = (1/n) Σ x_i^m`.
    pub moments: Vec<f64>,
}

impl SuffStatsUni {
    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `x̄^m` for `m ≥ 1`.
    pub fn moment(&self, m: usize) -> f64 {
        self.moments[m - 1]
    }
}

/// Bivariate sample means `(1/n) Σ x^s y^t`, `1 ≤ s + t ≤ d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffStatsBi {
    pub n: usize,
    pub d: usize,
    /// Indexed by [`bi_index`].
    pub moments: Vec<f64>,
}

impl SuffStatsBi {
    pub fn moment(&self, s: usize, t: usize) -> f64 {
        self.moments[bi_index(s, t)]
    }
}

pub fn suff_stats_uni(sample: &[f64], order: usize, support: Support) -> Result<SuffStatsUni> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some((index, &value)) = sample.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("observation {index} = {value} is not finite")));
    }
    if support == Support::HalfLine {
        if let Some((index, &value)) = sample.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::NegativeDatum { index, value });
        }
    }
    let mut sums = vec![0.0; order];
    for &x in sample {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= x;
            *s += p;
        }
    }
    let n = sample.len();
    Ok(SuffStatsUni {
        n,
        support,
        moments: sums.into_iter().map(|s| s / n as f64).collect(),
    })
}

pub fn suff_stats_bi(sample: &[(f64, f64)], d: usize) -> Result<SuffStatsBi> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some((index, &(x, y))) = sample
        .iter()
        .enumerate()
        .find(|(_, (x, y))| !(*x > 0.0 && *y > 0.0))
    {
        return Err(Error::NegativeDatum {
            index,
            value: x.min(y),
        });
    }
    let pairs = bi_pairs(d);
    let mut sums = vec![0.0; pairs.len()];
    for &(x, y) in sample {
        for (k, &(s, t)) in pairs.iter().enumerate() {
            sums[k] += x.powi(s as i32) * y.powi(t as i32);
        }
    }
    let n = sample.len();
    Ok(SuffStatsBi {
        n,
        d,
        moments: sums.into_iter().map(|s| s / n as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classify_examples() {
        let b = ThetaUni::half_line(&[3.0, -2.0, 0.0]).unwrap();
        assert_eq!(b.classify(), Membership::Boundary { order: 2 });
        let i = ThetaUni::half_line(&[-1.0, 3.0, -2.0]).unwrap();
        assert_eq!(i.classify(), Membership::Interior);
        let o = ThetaUni::half_line(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(o.classify(), Membership::Outside);
        assert_eq!(ThetaUni::half_line(&[0.0]).unwrap().classify(), Membership::Outside);
    }

    #[test]
    fn real_line_needs_even_effective_order() {
        assert!(ThetaUni::real_line(&[1.0, -1.0, 0.5]).is_err());
        let t = ThetaUni::real_line(&[2.0, -1.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.classify(), Membership::Boundary { order: 2 });
        let t = ThetaUni::real_line(&[2.0, -1.0, -1.0, 0.0]).unwrap();
        assert_eq!(t.classify(), Membership::Outside);
    }

    #[test]
    fn bi_indexing_round_trip() {
        for d in 1..6 {
            for (k, (i, j)) in bi_pairs(d).into_iter().enumerate() {
                assert_eq!(bi_index(i, j), k);
            }
        }
    }

    #[test]
    fn proper_space_examples() {
        let mut t = ThetaBi::product_point(3, 1.0, 1.0);
        t.set(1, 0, 5.0);
        t.set(1, 1, -7.0);
        assert!(in_proper_bivariate_space(&t));
        t.set(1, 2, -0.5);
        t.set(2, 1, 2.5);
        assert!(!in_proper_bivariate_space(&t));
        let q = ThetaBi::product_point(2, 1.0, 1.0);
        assert!(in_proper_bivariate_space(&q));
    }

    #[test]
    fn suff_stats_examples() {
        let s = suff_stats_uni(&[1.0, 2.0, 3.0], 2, Support::HalfLine).unwrap();
        assert_eq!(s.moments, vec![2.0, 14.0 / 3.0]);
        let s = suff_stats_uni(&[2.0], 3, Support::HalfLine).unwrap();
        assert_eq!(s.moments, vec![2.0, 4.0, 8.0]);
        let b = suff_stats_bi(&[(1.0, 1.0)], 2).unwrap();
        assert_eq!(b.moments, vec![1.0; 5]);
        assert!(matches!(
            suff_stats_uni(&[], 2, Support::HalfLine),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            suff_stats_uni(&[1.0, -1.0], 2, Support::HalfLine),
            Err(Error::NegativeDatum { index: 1, .. })
        ));
        assert!(suff_stats_uni(&[1.0, -1.0], 2, Support::RealLine).is_ok());
    }

    proptest! {
        #[test]
        fn trailing_zero_keeps_effective_order(c in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let t = ThetaUni::half_line(&c).unwrap();
            let z = t.embedded(c.len() + 1);
            let k = |m: Membership| match m {
                Membership::Interior => Some(c.len()),
                Membership::Boundary { order } => Some(order),
                Membership::Outside => None,
            };
            prop_assert_eq!(k(t.classify()), k(z.classify()));
        }

        #[test]
        fn proper_space_is_transpose_invariant(
            d in 2usize..5,
            raw in proptest::collection::vec(-3.0f64..3.0, 20),
        ) {
            let mut t = ThetaBi::new(d, raw[..bi_len(d)].to_vec()).unwrap();
            t.set(d, 0, -raw[0].abs() - 0.1);
            t.set(0, d, -raw[1].abs() - 0.1);
            prop_assert_eq!(in_proper_bivariate_space(&t), in_proper_bivariate_space(&t.transposed()));
        }
    }
}
