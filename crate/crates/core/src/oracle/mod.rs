//! Independent reference computations: adaptive quadrature of the moment
//! integrals (one- and two-dimensional), closed forms for low orders, and a
//! sampler for the univariate model.
//!
//! Nothing here touches the holonomic engines; the test suites use these
//! routines to check them.

mod closed_form;
pub mod quad;
mod sampler;

pub use closed_form::{closed_form_a, erfcx};
pub use sampler::{replication_seed, sample_uni, UniSampler};

use crate::domain::{in_proper_bivariate_space, Membership, Support, ThetaBi, ThetaUni};
use crate::error::{Error, Result};
use crate::polyalg::Poly;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute tolerance on the integral of the rescaled integrand (peak 1).
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integration stops where the integrand falls below this fraction of its peak.
    pub tail: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            tail: 1e-18,
            max_panels: 4000,
        }
    }
}

impl QuadOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 || self.abs_tol > 0.0) || !(self.tail > 0.0 && self.tail < 1.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// An integral stored as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIntegral {
    pub log_scale: f64,
    pub mantissa: f64,
    /// Error estimate on the mantissa.
    pub error: f64,
}

impl ScaledIntegral {
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

pub(crate) fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    // coeffs[k] multiplies x^{k+1}
    coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * x)
}

pub(crate) fn eval_poly_deriv(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * x + (k + 1) as f64 * c)
}

fn log_integrand(coeffs: &[f64], m: usize, x: f64) -> f64 {
    if x <= 0.0 {
        if m == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        eval_poly(coeffs, x) + m as f64 * x.ln()
    }
}

/// For `x^m exp(q(x))` on `x ≥ 0` (negative leading coefficient), returns
/// `(t, peak)`: a point beyond which the integrand stays below `tail·max` and
/// the log of that maximum.
pub(crate) fn truncation(coeffs: &[f64], m: usize, tail: f64) -> Result<(f64, f64)> {
    let mf = m as f64;
    let log_f = |x: f64| log_integrand(coeffs, m, x);
    let slope = |x: f64| mf / x + eval_poly_deriv(coeffs, x);

    // Beyond the Cauchy bound of q' the exponent is decreasing.
    let deriv: Vec<f64> = coeffs.iter().enumerate().map(|(k, &c)| (k + 1) as f64 * c).collect();
    let mut t = match Poly::new(deriv) {
        Ok(p) if p.degree() > 0 => p.cauchy_bound(),
        _ => 1.0,
    }
    .max(1.0);
    let mut guard = 0;
    while slope(t) >= 0.0 {
        t *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::DivergentIntegral);
        }
    }
    const SCAN: usize = 512;
    let mut peak = log_f(0.0);
    for k in 1..=SCAN {
        peak = peak.max(log_f(t * k as f64 / SCAN as f64));
    }
    let floor = tail.ln();
    guard = 0;
    while log_f(t) - peak > floor || slope(t) >= 0.0 {
        t *= 1.25;
        guard += 1;
        if guard > 400 {
            return Err(Error::DivergentIntegral);
        }
    }
    Ok((t, peak))
}

/// `∫_0^∞ x^m exp(q(x)) dx` for `q(x) = Σ coeffs[k] x^{k+1}` with a negative
/// leading coefficient.
fn half_line_side(coeffs: &[f64], m: usize, opts: &QuadOptions) -> Result<ScaledIntegral> {
    let (t, peak) = truncation(coeffs, m, opts.tail)?;
    let log_f = |x: f64| log_integrand(coeffs, m, x);
    let f = |x: f64| (log_f(x) - peak).exp();
    const PIECES: usize = 32;
    let breaks: Vec<f64> = (0..=PIECES).map(|k| t * k as f64 / PIECES as f64).collect();
    let (mantissa, error) = quad::adaptive(&f, &breaks, opts.abs_tol, opts.rel_tol, opts.max_panels);
    if error > opts.abs_tol.max(opts.rel_tol * mantissa.abs()) {
        return Err(Error::ToleranceNotMet {
            estimate: error / mantissa.abs(),
            requested: opts.rel_tol,
        });
    }
    Ok(ScaledIntegral {
        log_scale: peak,
        mantissa,
        error,
    })
}

/// `∫ x^m exp(c0 + Σ coeffs[k] x^{k+1}) dx` over the support.
pub fn scaled_moment(
    coeffs: &[f64],
    c0: f64,
    support: Support,
    m: usize,
    opts: &QuadOptions,
) -> Result<ScaledIntegral> {
    opts.validate()?;
    let n = coeffs.len();
    if n == 0 || !(coeffs[n - 1] < 0.0) || (support == Support::RealLine && n % 2 == 1) {
        return Err(Error::DivergentIntegral);
    }
    let pos = half_line_side(coeffs, m, opts)?;
    let mut out = match support {
        Support::HalfLine => pos,
        Support::RealLine => {
            let mirrored: Vec<f64> = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 0 { -c } else { c })
                .collect();
            let neg = half_line_side(&mirrored, m, opts)?;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let scale = pos.log_scale.max(neg.log_scale);
            let wp = (pos.log_scale - scale).exp();
            let wn = (neg.log_scale - scale).exp();
            ScaledIntegral {
                log_scale: scale,
                mantissa: pos.mantissa * wp + sign * neg.mantissa * wn,
                error: pos.error * wp + neg.error * wn,
            }
        }
    };
    out.log_scale += c0;
    Ok(out)
}

/// `∫ x^m exp(θ_1 x + … + θ_d x^d) dx`; boundary parameters are integrated
/// at their effective order.
pub fn quad_moment_uni(theta: &ThetaUni, m: usize, opts: &QuadOptions) -> Result<f64> {
    let order = match theta.classify() {
        Membership::Interior => theta.order(),
        Membership::Boundary { order } => order,
        Membership::Outside => return Err(Error::DivergentIntegral),
    };
    Ok(scaled_moment(&theta.coeffs()[..order], 0.0, theta.support(), m, opts)?.value())
}

/// `∫∫_{x,y>0} x^s y^t h(θ, x, y) dx dy` by nested adaptive quadrature.
pub fn quad_a_bi(theta: &ThetaBi, s: usize, t: usize, opts: &QuadOptions) -> Result<f64> {
    opts.validate()?;
    if !in_proper_bivariate_space(theta) {
        return Err(Error::DivergentIntegral);
    }
    let d = theta.degree();
    let inner_opts = QuadOptions {
        rel_tol: opts.rel_tol * 0.1,
        ..*opts
    };
    // log of y^t ∫ x^s h dx
    let log_inner = |y: f64| -> Result<f64> {
        if y <= 0.0 && t > 0 {
            return Ok(f64::NEG_INFINITY);
        }
        let coeffs: Vec<f64> = (1..=d)
            .map(|i| (0..=d - i).map(|j| theta.get(i, j) * y.powi(j as i32)).sum())
            .collect();
        let c0: f64 = (1..=d).map(|j| theta.get(0, j) * y.powi(j as i32)).sum();
        let r = scaled_moment(&coeffs, c0, Support::HalfLine, s, &inner_opts)?;
        let log_y = if t == 0 { 0.0 } else { t as f64 * y.ln() };
        Ok(r.log_scale + r.mantissa.ln() + log_y)
    };

    let floor = opts.tail.ln();
    let mut ty: f64 = 1.0;
    let mut peak = log_inner(0.0)?;
    let mut guard = 0;
    loop {
        const SCAN: usize = 64;
        for k in 1..=SCAN {
            peak = peak.max(log_inner(ty * k as f64 / SCAN as f64)?);
        }
        let end = log_inner(ty)?;
        let beyond = log_inner(ty * 1.01)?;
        if end - peak < floor && beyond < end {
            break;
        }
        ty *= 1.5;
        guard += 1;
        if guard > 200 {
            return Err(Error::DivergentIntegral);
        }
    }
    let failure = std::cell::Cell::new(None);
    let f = |y: f64| match log_inner(y) {
        Ok(v) => (v - peak).exp(),
        Err(e) => {
            failure.set(Some(e.to_string()));
            0.0
        }
    };
    const PIECES: usize = 16;
    let breaks: Vec<f64> = (0..=PIECES).map(|k| ty * k as f64 / PIECES as f64).collect();
    let (mantissa, error) = quad::adaptive(&f, &breaks, opts.abs_tol, opts.rel_tol, opts.max_panels);
    if let Some(msg) = failure.take() {
        return Err(Error::OdeDivergence(format!("inner quadrature failed: {msg}")));
    }
    if error > opts.abs_tol.max(opts.rel_tol * mantissa.abs()) {
        return Err(Error::ToleranceNotMet {
            estimate: error / mantissa.abs(),
            requested: opts.rel_tol,
        });
    }
    Ok(mantissa * peak.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn univariate_examples() {
        let o = QuadOptions::default();
        assert_relative_eq!(quad_moment_uni(&ThetaUni::half_line(&[-1.0]).unwrap(), 0, &o).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            quad_moment_uni(&ThetaUni::half_line(&[0.0, -1.0]).unwrap(), 2, &o).unwrap(),
            SQRT_PI / 4.0,
            max_relative = 1e-12
        );
        // mpmath reference for θ = (-1, 3, -2)
        assert_relative_eq!(
            quad_moment_uni(&ThetaUni::half_line(&[-1.0, 3.0, -2.0]).unwrap(), 0, &o).unwrap(),
            1.344_405_058_666_129_9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            quad_moment_uni(&ThetaUni::real_line(&[1.0, 4.0, -2.0, -3.0]).unwrap(), 1, &o).unwrap(),
            -3.207_903_995_478_086_5,
            max_relative = 1e-11
        );
        assert!(matches!(
            quad_moment_uni(&ThetaUni::half_line(&[0.0, 1.0]).unwrap(), 0, &o),
            Err(Error::DivergentIntegral)
        ));
    }

    #[test]
    fn refinement_is_self_consistent() {
        let theta = ThetaUni::half_line(&[-1.0, 3.0, -2.0]).unwrap();
        let coarse = quad_moment_uni(&theta, 3, &QuadOptions::default()).unwrap();
        let fine = quad_moment_uni(
            &theta,
            3,
            &QuadOptions {
                rel_tol: 1e-13,
                tail: 1e-30,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(coarse, fine, max_relative = 1e-12);
    }

    #[test]
    fn bivariate_examples() {
        let o = QuadOptions::default();
        let prod = ThetaBi::product_point(2, 1.0, 1.0);
        assert_relative_eq!(quad_a_bi(&prod, 0, 0, &o).unwrap(), PI / 4.0, max_relative = 1e-11);
        assert_relative_eq!(quad_a_bi(&prod, 1, 0, &o).unwrap(), SQRT_PI / 4.0, max_relative = 1e-11);
        let mut t = prod.clone();
        t.set(1, 1, -1.0);
        // mpmath reference
        assert_relative_eq!(quad_a_bi(&t, 0, 0, &o).unwrap(), 0.604_599_788_078_072_6, max_relative = 1e-11);
        assert_relative_eq!(quad_a_bi(&t, 1, 1, &o).unwrap(), 0.131_800_070_640_642_5, max_relative = 1e-11);
    }
}
