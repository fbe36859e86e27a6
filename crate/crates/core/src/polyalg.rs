//! Real polynomials, Sylvester resultants, discriminants and Sturm root
//! counting, plus the chamber classification of the top-degree coefficient
//! space of the bivariate model.
//!
//! The discriminant uses the Sylvester convention `D = R(p, p') / a_m`, where
//! `R` is the determinant of the Sylvester matrix with the `deg g` rows of `f`
//! on top. This is the convention in which `det P(θ) = d^{d-2} D(θ)` holds for
//! the bivariate Pfaffian system. It differs from the textbook discriminant by
//! the factor `(-1)^{m(m-1)/2}`; see [`textbook_discriminant`].

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative threshold below which a Sturm remainder coefficient is treated as zero.
const STURM_TOL: f64 = 1e-12;

/// Relative threshold (against `max|coeff|^{2d-2}`) for `D = 0`.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Polynomial with real coefficients stored in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial from ascending coefficients `a_0..a_m`; trailing
    /// zeros are dropped so that the leading coefficient is non-zero.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    /// Builds a polynomial from descending coefficients `a_m..a_0`.
    pub fn from_descending(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().rev().copied().collect())
    }

    /// Monic-up-to-sign product `lead * Π (x - r)` over real roots.
    pub fn from_roots(lead: f64, roots: &[f64]) -> Result<Self> {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Option<Poly> {
        if self.degree() == 0 {
            return None;
        }
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| k as f64 * a)
            .collect();
        Poly::new(c).ok()
    }

    /// Cauchy bound: every root satisfies `|x| < 1 + max |a_k / a_m|`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|c| c.abs() / lead)
            .fold(0.0, f64::max)
    }
}

/// Determinant of the Sylvester matrix of `f` (degree m) and `g` (degree n):
/// `n` shifted rows of the descending coefficients of `f`, then `m` shifted
/// rows of those of `g`.
pub fn sylvester_resultant(f: &Poly, g: &Poly) -> Result<f64> {
    let (m, n) = (f.degree(), g.degree());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "resultant requires polynomials of degree >= 1".into(),
        ));
    }
    let size = m + n;
    let mut s = DMatrix::<f64>::zeros(size, size);
    for row in 0..n {
        for (k, &a) in f.coeffs().iter().rev().enumerate() {
            s[(row, row + k)] = a;
        }
    }
    for row in 0..m {
        for (k, &b) in g.coeffs().iter().rev().enumerate() {
            s[(n + row, row + k)] = b;
        }
    }
    Ok(s.determinant())
}

/// Top-degree form `p(x; θ) = θ_{d0} x^d + θ_{d-1,1} x^{d-1} + … + θ_{0d}`
/// from the coefficients listed as `[θ_{d0}, θ_{d-1,1}, …, θ_{0d}]`.
pub fn top_form(theta_top: &[f64]) -> Result<Poly> {
    if theta_top.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::LeadingCoefficientZero);
    }
    Poly::from_descending(theta_top)
}

/// `D(θ) = R(p, p') / θ_{d0}` for the top-degree form.
pub fn discriminant(theta_top: &[f64]) -> Result<f64> {
    let d = theta_top.len().saturating_sub(1);
    if d < 2 {
        return Err(Error::UnsupportedOrder(format!(
            "discriminant needs degree >= 2, got {d}"
        )));
    }
    let p = top_form(theta_top)?;
    let dp = p.derivative().ok_or(Error::LeadingCoefficientZero)?;
    Ok(sylvester_resultant(&p, &dp)? / theta_top[0])
}

/// `(-1)^{d(d-1)/2} D(θ)`: the discriminant `a^{2d-2} Π (α_i - α_j)^2`.
/// For `d = 3`, `θ_{30} = θ_{03} = -1` this is
/// `θ12²θ21² + 4θ12³ + 4θ21³ + 18θ12θ21 − 27`.
pub fn textbook_discriminant(theta_top: &[f64]) -> Result<f64> {
    let d = theta_top.len() - 1;
    let sign = if (d * (d - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * discriminant(theta_top)?)
}

fn normalize(mut c: Vec<f64>) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        c.iter_mut().for_each(|v| *v /= scale);
    }
    c
}

/// Remainder of `num / den` (both ascending, `den` with non-zero leading term).
fn poly_rem(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut r = num.to_vec();
    let dn = den.len() - 1;
    let lead = den[dn];
    while r.len() > dn {
        let k = r.len() - 1;
        let q = r[k] / lead;
        for (j, &dj) in den.iter().enumerate() {
            r[k - dn + j] -= q * dj;
        }
        r.pop();
    }
    r
}

/// Sturm chain of a polynomial. Coefficients are rescaled at every step.
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<Vec<f64>>,
    squarefree: bool,
}

impl SturmChain {
    pub fn new(p: &Poly) -> Self {
        let mut chain = vec![normalize(p.coeffs().to_vec())];
        let mut squarefree = true;
        if let Some(dp) = p.derivative() {
            chain.push(normalize(dp.coeffs().to_vec()));
            loop {
                let n = chain.len();
                let mut r = poly_rem(&chain[n - 2], &chain[n - 1]);
                r.iter_mut().for_each(|v| *v = -*v);
                for v in r.iter_mut() {
                    if v.abs() < STURM_TOL {
                        *v = 0.0;
                    }
                }
                while r.last() == Some(&0.0) {
                    r.pop();
                }
                if r.is_empty() {
                    // gcd(p, p') is the last element; non-constant means a repeated root
                    squarefree = chain[n - 1].len() == 1;
                    break;
                }
                chain.push(normalize(r));
                if chain.last().unwrap().len() == 1 {
                    break;
                }
            }
        }
        Self { chain, squarefree }
    }

    pub fn is_squarefree(&self) -> bool {
        self.squarefree
    }

    fn variations_at(&self, x: f64) -> usize {
        let signs = self.chain.iter().map(|c| {
            if x.is_infinite() {
                let lead = *c.last().unwrap();
                let deg = c.len() - 1;
                if x < 0.0 && deg % 2 == 1 {
                    -lead.signum()
                } else {
                    lead.signum()
                }
            } else {
                let v = c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
                if v == 0.0 {
                    0.0
                } else {
                    v.signum()
                }
            }
        });
        let mut count = 0;
        let mut prev = 0.0;
        for s in signs {
            if s == 0.0 {
                continue;
            }
            if prev != 0.0 && s != prev {
                count += 1;
            }
            prev = s;
        }
        count
    }

    /// Number of distinct real roots in `(lo, hi]`.
    pub fn count(&self, lo: f64, hi: f64) -> usize {
        self.variations_at(lo).saturating_sub(self.variations_at(hi))
    }
}

/// Counts the distinct real roots of `p` in `(lo, hi]`. Infinite endpoints
/// are replaced by the Cauchy root bound.
pub fn count_real_roots(p: &Poly, lo: f64, hi: f64) -> Result<usize> {
    if p.degree() == 0 {
        return Ok(0);
    }
    let chain = SturmChain::new(p);
    if !chain.is_squarefree() {
        return Err(Error::NonSquarefree);
    }
    Ok(count_with_chain(&chain, p, lo, hi))
}

fn count_with_chain(chain: &SturmChain, p: &Poly, lo: f64, hi: f64) -> usize {
    let bound = p.cauchy_bound();
    let clamp = |x: f64| {
        if x.is_infinite() {
            bound.copysign(x)
        } else {
            x
        }
    };
    let (lo, hi) = (clamp(lo), clamp(hi));
    if hi <= lo {
        return 0;
    }
    chain.count(lo, hi)
}

/// Distinct positive roots, without the square-free requirement.
pub(crate) fn positive_root_count_lenient(p: &Poly) -> usize {
    if p.degree() == 0 {
        return 0;
    }
    let chain = SturmChain::new(p);
    count_with_chain(&chain, p, 0.0, f64::INFINITY)
}

/// Root-count signature of the top-degree form in one chamber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChamberLabel {
    pub positive: usize,
    pub negative: usize,
    pub complex_pairs: usize,
    pub proper: bool,
}

impl ChamberLabel {
    /// Name of the chamber in the `d = 3` picture, `None` when the signature
    /// does not occur for `θ_{30} = θ_{03} = -1`.
    pub fn d3_name(&self) -> Option<&'static str> {
        match (self.positive, self.negative, self.complex_pairs) {
            (2, 1, 0) => Some("A"),
            (0, 1, 1) => Some("B"),
            (0, 3, 0) => Some("C"),
            _ => None,
        }
    }
}

fn discriminant_scale(theta_top: &[f64]) -> f64 {
    let d = theta_top.len() - 1;
    let m = theta_top.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    m.powi(2 * d as i32 - 2)
}

/// True when `|D|` is within the relative tolerance of zero.
pub fn on_discriminant(theta_top: &[f64]) -> Result<bool> {
    let disc = discriminant(theta_top)?;
    Ok(disc.abs() < DISCRIMINANT_TOL * discriminant_scale(theta_top))
}

pub fn classify_chamber(theta_top: &[f64]) -> Result<ChamberLabel> {
    let d = theta_top.len().saturating_sub(1);
    if d < 2 {
        return Err(Error::UnsupportedOrder(format!("chambers need d >= 2, got {d}")));
    }
    if !(theta_top[0] < 0.0 && theta_top[d] < 0.0) {
        return Err(Error::InvalidParameter(
            "chamber classification requires theta_d0 < 0 and theta_0d < 0".into(),
        ));
    }
    let disc = discriminant(theta_top)?;
    if disc.abs() < DISCRIMINANT_TOL * discriminant_scale(theta_top) {
        return Err(Error::OnDiscriminant(disc));
    }
    let p = top_form(theta_top)?;
    let positive = count_real_roots(&p, 0.0, f64::INFINITY)?;
    let negative = count_real_roots(&p, f64::NEG_INFINITY, 0.0)?;
    let complex_pairs = (d - positive - negative) / 2;
    Ok(ChamberLabel {
        positive,
        negative,
        complex_pairs,
        proper: positive == 0,
    })
}

/// One point of the `d = 3` chamber sweep at `θ_{30} = θ_{03} = -1`.
#[derive(Debug, Clone, Serialize)]
pub struct ChamberPoint {
    pub theta12: f64,
    pub theta21: f64,
    pub discriminant: f64,
    pub det_p: f64,
    /// `None` on the discriminant hypersurface.
    pub label: Option<ChamberLabel>,
}

impl ChamberPoint {
    pub fn sign(&self) -> i8 {
        if self.label.is_none() {
            0
        } else if self.discriminant > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Top coefficients `[θ30, θ21, θ12, θ03]` of the normalised `d = 3` slice.
pub fn d3_slice_top(theta12: f64, theta21: f64) -> [f64; 4] {
    [-1.0, theta21, theta12, -1.0]
}

pub fn chamber_point_d3(theta12: f64, theta21: f64) -> ChamberPoint {
    let top = d3_slice_top(theta12, theta21);
    let disc = discriminant(&top).expect("leading coefficient is -1");
    // det P = d^{d-2} D
    let det_p = 3.0 * disc;
    ChamberPoint {
        theta12,
        theta21,
        discriminant: disc,
        det_p,
        label: classify_chamber(&top).ok(),
    }
}

/// Regular grid over `(θ12, θ21) ∈ [lo, hi]²`; rows vary `θ21`, columns `θ12`.
#[derive(Debug, Clone)]
pub struct ChamberGrid {
    pub axis: Vec<f64>,
    pub points: Vec<ChamberPoint>,
}

impl ChamberGrid {
    pub fn sweep(lo: f64, hi: f64, step: f64) -> Self {
        let n = ((hi - lo) / step).round() as usize + 1;
        let axis: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let mut points = Vec::with_capacity(n * n);
        for &t21 in &axis {
            for &t12 in &axis {
                points.push(chamber_point_d3(t12, t21));
            }
        }
        Self { axis, points }
    }

    fn at(&self, row: usize, col: usize) -> &ChamberPoint {
        &self.points[row * self.axis.len() + col]
    }

    /// Number of connected curves traced by the sign changes of `D`.
    ///
    /// Each grid cell whose four corners do not share one strict sign is a
    /// crossing cell; crossing cells are grouped by 8-connectivity.
    pub fn sign_change_curves(&self) -> usize {
        let n = self.axis.len();
        if n < 2 {
            return 0;
        }
        let cells = n - 1;
        let crossing: Vec<bool> = (0..cells * cells)
            .map(|k| {
                let (r, c) = (k / cells, k % cells);
                let s = [
                    self.at(r, c).sign(),
                    self.at(r, c + 1).sign(),
                    self.at(r + 1, c).sign(),
                    self.at(r + 1, c + 1).sign(),
                ];
                !(s.iter().all(|&v| v == 1) || s.iter().all(|&v| v == -1))
            })
            .collect();
        let mut seen = vec![false; crossing.len()];
        let mut components = 0;
        for start in 0..crossing.len() {
            if !crossing[start] || seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (r, c) = ((k / cells) as isize, (k % cells) as isize);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if rr < 0 || cc < 0 || rr >= cells as isize || cc >= cells as isize {
                            continue;
                        }
                        let j = rr as usize * cells + cc as usize;
                        if crossing[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        components
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn resultant_vanishes_on_common_root() {
        let f = Poly::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let g = Poly::new(vec![-1.0, 1.0]).unwrap();
        assert_relative_eq!(sylvester_resultant(&f, &g).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn resultant_of_cubic_and_derivative() {
        // a_m^n b_n^m Π(α_i - β_j) = 1 * (-27) * (α1 α2 α3)^2 = -27
        let f = Poly::from_descending(&[-1.0, 0.0, 0.0, -1.0]).unwrap();
        let g = Poly::from_descending(&[-3.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(sylvester_resultant(&f, &g).unwrap(), -27.0, epsilon = 1e-12);
    }

    #[test]
    fn resultant_of_quadratic_and_derivative() {
        let f = Poly::from_descending(&[-1.0, 0.0, -1.0]).unwrap();
        let g = Poly::from_descending(&[-2.0, 0.0]).unwrap();
        assert_relative_eq!(sylvester_resultant(&f, &g).unwrap(), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(matches!(Poly::new(vec![0.0, 0.0]), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn discriminant_examples() {
        assert_relative_eq!(discriminant(&[-1.0, 0.0, -1.0]).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(discriminant(&[-1.0, 0.0, 0.0, -1.0]).unwrap(), 27.0, epsilon = 1e-12);
        assert_relative_eq!(
            textbook_discriminant(&[-1.0, 0.0, 0.0, -1.0]).unwrap(),
            -27.0,
            epsilon = 1e-12
        );
        assert!(discriminant(&[-1.0, 1.0, 1.0, -1.0]).unwrap().abs() < 1e-12);
        assert!(matches!(
            discriminant(&[0.0, 1.0, -1.0]),
            Err(Error::LeadingCoefficientZero)
        ));
    }

    #[test]
    fn d2_discriminant_closed_form() {
        for &(a, b, c) in &[(-1.0, 0.3, -2.0), (-0.5, -3.0, -1.5), (-2.0, 1.0, -0.1)] {
            let want = 4.0 * a * c - b * b;
            assert_relative_eq!(discriminant(&[a, b, c]).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn printed_d3_formula() {
        for &(t12, t21) in &[(0.3f64, -1.2f64), (2.0, 0.5), (-3.5, -3.5), (1.0, 1.0)] {
            let printed = t12 * t12 * t21 * t21 + 4.0 * t12.powi(3) + 4.0 * t21.powi(3)
                + 18.0 * t12 * t21
                - 27.0;
            let got = textbook_discriminant(&d3_slice_top(t12, t21)).unwrap();
            assert!((got - printed).abs() <= 1e-10 * printed.abs().max(1.0));
        }
    }

    #[test]
    fn root_counts() {
        let p = Poly::from_descending(&[-1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(count_real_roots(&p, 0.0, f64::INFINITY).unwrap(), 0);
        let p = Poly::from_roots(-1.0, &[1.0, 2.0, -0.5]).unwrap();
        assert_eq!(count_real_roots(&p, 0.0, f64::INFINITY).unwrap(), 2);
        let p = Poly::from_roots(-1.0, &[-1.0, -2.0, -0.5]).unwrap();
        assert_eq!(count_real_roots(&p, 0.0, f64::INFINITY).unwrap(), 0);
        assert_eq!(count_real_roots(&p, f64::NEG_INFINITY, 0.0).unwrap(), 3);
    }

    #[test]
    fn double_root_is_not_squarefree() {
        let p = Poly::from_roots(1.0, &[1.0, 1.0, -2.0]).unwrap();
        assert!(matches!(
            count_real_roots(&p, 0.0, f64::INFINITY),
            Err(Error::NonSquarefree)
        ));
        assert_eq!(positive_root_count_lenient(&p), 1);
    }

    #[test]
    fn chamber_fixtures() {
        let a = classify_chamber(&d3_slice_top(-0.5, 2.5)).unwrap();
        assert_eq!((a.positive, a.negative, a.complex_pairs, a.proper), (2, 1, 0, false));
        assert_eq!(a.d3_name(), Some("A"));
        let b = classify_chamber(&d3_slice_top(0.0, 0.0)).unwrap();
        assert_eq!((b.positive, b.negative, b.complex_pairs, b.proper), (0, 1, 1, true));
        assert_eq!(b.d3_name(), Some("B"));
        let c = classify_chamber(&d3_slice_top(-3.5, -3.5)).unwrap();
        assert_eq!((c.positive, c.negative, c.complex_pairs, c.proper), (0, 3, 0, true));
        assert_eq!(c.d3_name(), Some("C"));
    }

    #[test]
    fn on_discriminant_is_rejected() {
        assert!(matches!(
            classify_chamber(&d3_slice_top(1.0, 1.0)),
            Err(Error::OnDiscriminant(_))
        ));
    }
}
