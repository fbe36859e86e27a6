//! Holonomic engine for the univariate normalizing constant
//!
//! `A(θ) = ∫ exp(θ_1 x + … + θ_d x^d) dx` over the half line or the real
//! line. Every partial derivative reduces to a `θ_1`-derivative,
//! `∂_i A = ∂_1^i A`, and the integration-by-parts identity
//!
//! ```text
//! (θ_1 + 2θ_2 ∂_1 + … + dθ_d ∂_1^{d-1}) A = -c,   c = 1 (half line), 0 (real line)
//! ```
//!
//! expresses `∂_1^{d-1} A` through lower derivatives. Differentiating it
//! `j` times in `θ_1` gives
//!
//! ```text
//! Σ_k kθ_k ∂_1^{k-1+j} A + j ∂_1^{j-1} A = -c [j = 0]
//! ```
//!
//! so the basis `F = (A, ∂_1 A, …, ∂_1^{d-2} A)` determines all higher
//! derivatives. `F` is transported along straight segments from the point
//! `(0, …, 0, -c)`, where the moments are Gamma functions.

use statrs::function::gamma::ln_gamma;

use crate::domain::{Support, ThetaUni};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};

/// A parameter value together with its derivative basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloStateUni {
    theta: ThetaUni,
    /// `[A, ∂_1 A, …, ∂_1^{d-2} A]`; empty for order 1.
    basis: Vec<f64>,
    last_transport_error: f64,
}

impl HoloStateUni {
    /// Assembles a state from externally computed basis values.
    pub fn from_parts(theta: ThetaUni, basis: Vec<f64>) -> Result<Self> {
        theta.require_interior()?;
        if basis.len() != theta.order() - 1 {
            return Err(Error::InvalidParameter(format!(
                "order {} needs a basis of length {}, got {}",
                theta.order(),
                theta.order() - 1,
                basis.len()
            )));
        }
        Ok(Self {
            theta,
            basis,
            last_transport_error: 0.0,
        })
    }

    pub fn theta(&self) -> &ThetaUni {
        &self.theta
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn last_transport_error(&self) -> f64 {
        self.last_transport_error
    }

    /// `[∂_1^m A]_{m = 0..=max_order}`.
    pub fn derivs(&self, max_order: usize) -> Vec<f64> {
        extend_basis(&self.theta, &self.basis, max_order)
    }

    pub fn norm_const(&self) -> f64 {
        self.derivs(0)[0]
    }
}

/// `∫ x^m exp(-c x^d) dx` at `θ⁰ = (0, …, 0, -c)`.
pub fn initial_moment(order: usize, c: f64, support: Support, m: usize) -> f64 {
    let n = order as f64;
    let e = (1.0 + m as f64) / n;
    let half = (ln_gamma(e) - e * c.ln()).exp() / n;
    match support {
        Support::HalfLine => half,
        Support::RealLine if m % 2 == 0 => 2.0 * half,
        Support::RealLine => 0.0,
    }
}

pub fn initial_state(order: usize, c: f64, support: Support) -> Result<HoloStateUni> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::NonPositiveScale(c));
    }
    let mut coeffs = vec![0.0; order];
    *coeffs.last_mut().ok_or_else(|| Error::InvalidParameter("order must be at least 1".into()))? = -c;
    let theta = ThetaUni::new(coeffs, support)?;
    let basis = (0..order - 1)
        .map(|m| initial_moment(order, c, support, m))
        .collect();
    Ok(HoloStateUni {
        theta,
        basis,
        last_transport_error: 0.0,
    })
}

/// Applies the derivative recursion at `theta` to a basis of length `d - 1`.
pub(crate) fn extend_basis(theta: &ThetaUni, basis: &[f64], max_order: usize) -> Vec<f64> {
    let n = theta.order();
    let th = theta.coeffs();
    let rhs_const = match theta.support() {
        Support::HalfLine => 1.0,
        Support::RealLine => 0.0,
    };
    let lead = n as f64 * th[n - 1];
    let mut a = Vec::with_capacity(max_order.max(n) + 1);
    a.extend_from_slice(basis);
    while a.len() <= max_order {
        let idx = a.len();
        let j = idx + 1 - n;
        let mut acc = if j == 0 { rhs_const } else { j as f64 * a[j - 1] };
        for k in 1..n {
            acc += k as f64 * th[k - 1] * a[k - 1 + j];
        }
        a.push(-acc / lead);
    }
    a.truncate(max_order + 1);
    a
}

/// `[∂_1^m A]_{m=0..=max_order}` from the state's basis.
pub fn extend_derivatives(state: &HoloStateUni, max_order: usize) -> Result<Vec<f64>> {
    state.theta.require_interior()?;
    Ok(state.derivs(max_order))
}

/// Transports `state` to `target` along the straight segment between them.
pub fn transport(state: &HoloStateUni, target: &ThetaUni, opts: &OdeOptions) -> Result<HoloStateUni> {
    let source = &state.theta;
    if source.order() != target.order() || source.support() != target.support() {
        return Err(Error::InvalidParameter(
            "source and target differ in order or support".into(),
        ));
    }
    source.require_interior()?;
    target.require_interior()?;
    let n = target.order();
    let l = n - 1;
    let h: Vec<f64> = target
        .coeffs()
        .iter()
        .zip(source.coeffs())
        .map(|(t, s)| t - s)
        .collect();
    let length = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if length == 0.0 || l == 0 {
        return Ok(HoloStateUni {
            theta: target.clone(),
            basis: state.basis.clone(),
            last_transport_error: 0.0,
        });
    }
    let support = target.support();
    let point = |s: f64| -> Result<ThetaUni> {
        let c = source
            .coeffs()
            .iter()
            .zip(&h)
            .map(|(a, dh)| a + s * dh)
            .collect::<Vec<_>>();
        let t = ThetaUni::new(c, support)?;
        if !(t.leading() < 0.0) {
            return Err(Error::PathSingularity);
        }
        Ok(t)
    };
    let rhs = |s: f64, f: &[f64]| -> Result<Vec<f64>> {
        let theta = point(s)?;
        let a = extend_basis(&theta, f, l - 1 + n);
        Ok((0..l)
            .map(|i| (1..=n).map(|j| h[j - 1] * a[j + i]).sum())
            .collect())
    };
    let sol = ode::integrate(&state.basis, length, opts, rhs, |s, _| point(s).map(|_| ()))?;
    Ok(HoloStateUni {
        theta: target.clone(),
        basis: sol.y,
        last_transport_error: sol.error_estimate,
    })
}

/// Initial point `(0, …, 0, θ_d)`, transport to `theta`, extend to `max_order`.
pub fn norm_const_state(theta: &ThetaUni, opts: &OdeOptions) -> Result<HoloStateUni> {
    theta.require_interior()?;
    let start = initial_state(theta.order(), theta.leading().abs(), theta.support())?;
    transport(&start, theta, opts)
}

pub fn norm_const_and_derivs(theta: &ThetaUni, max_order: usize, opts: &OdeOptions) -> Result<Vec<f64>> {
    Ok(norm_const_state(theta, opts)?.derivs(max_order))
}

/// Mixed partial `∂_1^{j_1} ⋯ ∂_d^{j_d} A = ∂_1^{Σ k j_k} A`.
pub fn mixed_partial(derivs: &[f64], multi_index: &[usize]) -> Option<f64> {
    let total: usize = multi_index.iter().enumerate().map(|(k, &j)| (k + 1) * j).sum();
    derivs.get(total).copied()
}

/// `∫ (η_0 + η_1 x + … + η_h x^h) exp(θ·x) dx = Σ η_i ∂_1^i A`.
pub fn prefactor_norm_const(eta: &[f64], theta: &ThetaUni, opts: &OdeOptions) -> Result<f64> {
    if eta.is_empty() {
        return Err(Error::InvalidParameter("prefactor needs at least one coefficient".into()));
    }
    let a = norm_const_and_derivs(theta, eta.len() - 1, opts)?;
    Ok(eta.iter().zip(&a).map(|(e, v)| e * v).sum())
}
