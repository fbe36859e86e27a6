//! Likelihood, Fisher information, maximum likelihood by Fisher scoring, and
//! the one-sided / quadratic score tests for the model order.
//!
//! For the exponential family `f(x; θ) = exp(Σ θ_k x^k) / A(θ)` the mean
//! log-likelihood is `l̄(θ) = Σ θ_k x̄^k − log A(θ)`, its gradient is
//! `x̄^k − ∂_k A / A` and its negative Hessian (the Fisher information) is
//! the covariance matrix of the sufficient statistics. All of these are
//! ratios of derivatives of `A`, which the holonomic engines supply.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{
    bi_pairs, in_proper_bivariate_space, suff_stats_uni, Membership, SuffStatsBi, SuffStatsUni, Support, ThetaBi,
    ThetaUni,
};
use crate::error::{Error, Result};
use crate::holo_bi::{self, DerivTableBi};
use crate::holo_uni::{self, HoloStateUni};
use crate::ode::OdeOptions;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    HalfLine,
    RealLine,
    Bivariate,
}

impl From<Support> for Mode {
    fn from(s: Support) -> Self {
        match s {
            Support::HalfLine => Mode::HalfLine,
            Support::RealLine => Mode::RealLine,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub mode: Mode,
    /// Univariate `(θ_1, …, θ_d)` or bivariate coefficients in `bi_index` order.
    pub theta_hat: Vec<f64>,
    pub loglik_bar: f64,
    pub grad_norm: f64,
    pub fisher: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub hit_boundary: bool,
}

impl FitResult {
    pub fn theta_uni(&self) -> Result<ThetaUni> {
        match self.mode {
            Mode::HalfLine => ThetaUni::half_line(&self.theta_hat),
            Mode::RealLine => ThetaUni::real_line(&self.theta_hat),
            Mode::Bivariate => Err(Error::InvalidParameter("bivariate fit".into())),
        }
    }

    pub fn fisher_matrix(&self) -> DMatrix<f64> {
        let p = self.fisher.len();
        DMatrix::from_fn(p, p, |i, j| self.fisher[i][j])
    }

    /// `sqrt(diag(I⁻¹) / n)`.
    pub fn standard_errors(&self, n: usize) -> Result<Vec<f64>> {
        let inv = self
            .fisher_matrix()
            .try_inverse()
            .ok_or(Error::SingularInformation)?;
        Ok((0..inv.nrows()).map(|i| (inv[(i, i)] / n as f64).sqrt()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullDistribution {
    StdNormalLowerTail,
    ChiSq2UpperTail,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    /// Order of the alternative model.
    pub order: usize,
    pub statistic: f64,
    pub null: NullDistribution,
    pub alpha: f64,
    /// `-z_α` or `χ²₂(α)`.
    pub threshold: f64,
    pub reject: bool,
    /// Null fit embedded at the alternative order.
    pub theta_hat_null: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub ode: OdeOptions,
    /// Sup-norm of the score at convergence.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            grad_tol: 1e-8,
            max_iter: 200,
        }
    }
}

const MIN_STEP: f64 = 1e-10;
const BOUNDARY_COLLAPSE: f64 = 1e-3;

fn uni_derivs(theta: &ThetaUni, max_order: usize, ode: &OdeOptions) -> Result<Vec<f64>> {
    // boundary points are evaluated by the engine of their effective order
    let eff = match theta.classify() {
        Membership::Interior => theta.clone(),
        Membership::Boundary { order } => theta.truncated(order)?,
        Membership::Outside => {
            return Err(Error::OutsideDomain(format!("{:?} is outside the domain", theta.coeffs())))
        }
    };
    holo_uni::norm_const_and_derivs(&eff, max_order, ode)
}

fn fisher_from_derivs(a: &[f64], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |l, m| a[l + m + 2] / a[0] - (a[l + 1] / a[0]) * (a[m + 1] / a[0]))
}

fn uni_loglik_grad(theta: &[f64], stats: &SuffStatsUni, a: &[f64]) -> (f64, Vec<f64>) {
    let l = theta.iter().enumerate().map(|(k, t)| t * stats.moment(k + 1)).sum::<f64>() - a[0].ln();
    let g = (1..=theta.len()).map(|k| stats.moment(k) - a[k] / a[0]).collect();
    (l, g)
}

fn require_stats_order(have: usize, need: usize) -> Result<()> {
    if have < need {
        return Err(Error::InvalidParameter(format!(
            "sufficient statistics of order {have} cannot support order {need}"
        )));
    }
    Ok(())
}

/// `(l̄(θ), ∇l̄(θ))` for the univariate model.
pub fn loglik_and_grad_uni(theta: &ThetaUni, stats: &SuffStatsUni, ode: &OdeOptions) -> Result<(f64, Vec<f64>)> {
    require_stats_order(stats.order(), theta.order())?;
    let a = uni_derivs(theta, theta.order(), ode)?;
    Ok(uni_loglik_grad(theta.coeffs(), stats, &a))
}

/// `∇ψ(θ) = (E X, …, E X^d)` with `ψ = log A`.
pub fn psi_grad_uni(theta: &ThetaUni, ode: &OdeOptions) -> Result<Vec<f64>> {
    let a = uni_derivs(theta, theta.order(), ode)?;
    Ok((1..=theta.order()).map(|k| a[k] / a[0]).collect())
}

/// Fisher information `Cov(X^l, X^m)`, `1 ≤ l, m ≤ d`. At a boundary point
/// the moments are those of the effective-order model.
pub fn fisher_info_uni(theta: &ThetaUni, ode: &OdeOptions) -> Result<DMatrix<f64>> {
    let d = theta.order();
    let a = uni_derivs(theta, 2 * d, ode)?;
    Ok(fisher_from_derivs(&a, d))
}

fn bi_loglik_grad(theta: &ThetaBi, stats: &SuffStatsBi, table: &DerivTableBi) -> (f64, Vec<f64>) {
    let a = table.norm_const();
    let pairs = bi_pairs(theta.degree());
    let l = pairs
        .iter()
        .map(|&(i, j)| theta.get(i, j) * stats.moment(i, j))
        .sum::<f64>()
        - a.ln();
    let g = pairs
        .iter()
        .map(|&(i, j)| stats.moment(i, j) - table.get(i, j).unwrap() / a)
        .collect();
    (l, g)
}

fn bi_fisher(table: &DerivTableBi) -> DMatrix<f64> {
    let pairs = bi_pairs(table.theta().degree());
    let a = table.norm_const();
    let t = |i, j| table.get(i, j).unwrap() / a;
    DMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
        let (i, j) = pairs[r];
        let (k, l) = pairs[c];
        t(i + k, j + l) - t(i, j) * t(k, l)
    })
}

pub fn loglik_and_grad_bi(theta: &ThetaBi, stats: &SuffStatsBi, ode: &OdeOptions) -> Result<(f64, Vec<f64>)> {
    require_stats_order(stats.d, theta.degree())?;
    let table = holo_bi::extend_table(&holo_bi::norm_const_bi(theta, ode)?, theta.degree())?;
    Ok(bi_loglik_grad(theta, stats, &table))
}

pub fn fisher_info_bi(theta: &ThetaBi, ode: &OdeOptions) -> Result<DMatrix<f64>> {
    let table = holo_bi::extend_table(&holo_bi::norm_const_bi(theta, ode)?, 2 * theta.degree())?;
    Ok(bi_fisher(&table))
}

struct Eval {
    loglik: f64,
    grad: Vec<f64>,
    fisher: DMatrix<f64>,
}

/// What the optimizer needs from a model: admissibility, incremental
/// transport of the engine state, and evaluation at a state.
trait Engine {
    type State: Clone;
    fn mode(&self) -> Mode;
    fn admissible(&self, theta: &[f64]) -> bool;
    fn start(&self) -> Result<(Vec<f64>, Self::State)>;
    fn transport(&self, from: &Self::State, to: &[f64]) -> Result<Self::State>;
    fn evaluate(&self, state: &Self::State) -> Result<Eval>;
    /// Distance of the leading coefficients from the boundary.
    fn boundary_gap(&self, theta: &[f64]) -> f64;
}

struct UniEngine<'a> {
    stats: &'a SuffStatsUni,
    d: usize,
    ode: OdeOptions,
}

impl Engine for UniEngine<'_> {
    type State = HoloStateUni;

    fn mode(&self) -> Mode {
        self.stats.support.into()
    }

    fn admissible(&self, theta: &[f64]) -> bool {
        theta.iter().all(|v| v.is_finite()) && theta[self.d - 1] < 0.0
    }

    fn start(&self) -> Result<(Vec<f64>, HoloStateUni)> {
        // method of moments on the leading term: E X^d = 1/(d c) at (0, …, 0, -c)
        let md = self.stats.moment(self.d);
        let c = 1.0 / (self.d as f64 * md);
        let state = holo_uni::initial_state(self.d, c, self.stats.support)?;
        Ok((state.theta().coeffs().to_vec(), state))
    }

    fn transport(&self, from: &HoloStateUni, to: &[f64]) -> Result<HoloStateUni> {
        let target = ThetaUni::new(to.to_vec(), self.stats.support)?;
        holo_uni::transport(from, &target, &self.ode)
    }

    fn boundary_gap(&self, theta: &[f64]) -> f64 {
        theta[self.d - 1].abs()
    }

    fn evaluate(&self, state: &HoloStateUni) -> Result<Eval> {
        let a = state.derivs(2 * self.d);
        let (loglik, grad) = uni_loglik_grad(state.theta().coeffs(), self.stats, &a);
        Ok(Eval {
            loglik,
            grad,
            fisher: fisher_from_derivs(&a, self.d),
        })
    }
}

struct BiEngine<'a> {
    stats: &'a SuffStatsBi,
    ode: OdeOptions,
}

impl BiEngine<'_> {
    fn theta(&self, c: &[f64]) -> Result<ThetaBi> {
        ThetaBi::new(self.stats.d, c.to_vec())
    }
}

impl Engine for BiEngine<'_> {
    type State = DerivTableBi;

    fn mode(&self) -> Mode {
        Mode::Bivariate
    }

    fn admissible(&self, theta: &[f64]) -> bool {
        self.theta(theta).map(|t| in_proper_bivariate_space(&t)).unwrap_or(false)
    }

    fn start(&self) -> Result<(Vec<f64>, DerivTableBi)> {
        let d = self.stats.d;
        let c1 = 1.0 / (d as f64 * self.stats.moment(d, 0));
        let c2 = 1.0 / (d as f64 * self.stats.moment(0, d));
        let table = holo_bi::initial_state_bi(d, c1, c2)?;
        Ok((table.theta().coeffs().to_vec(), table))
    }

    fn transport(&self, from: &DerivTableBi, to: &[f64]) -> Result<DerivTableBi> {
        let target = self.theta(to)?;
        match holo_bi::transport_bi(from, &target, &self.ode) {
            Err(Error::PathCrossesSingularity { .. }) => holo_bi::norm_const_bi(&target, &self.ode),
            r => r,
        }
    }

    fn boundary_gap(&self, theta: &[f64]) -> f64 {
        let d = self.stats.d;
        let t = ThetaBi::new(d, theta.to_vec()).expect("length checked by the engine");
        t.get(d, 0).abs().min(t.get(0, d).abs())
    }

    fn evaluate(&self, state: &DerivTableBi) -> Result<Eval> {
        let table = holo_bi::extend_table(state, 2 * self.stats.d)?;
        let (loglik, grad) = bi_loglik_grad(table.theta(), self.stats, &table);
        Ok(Eval {
            loglik,
            grad,
            fisher: bi_fisher(&table),
        })
    }
}

fn solve_spd(m: &DMatrix<f64>, rhs: &[f64]) -> Result<DVector<f64>> {
    let b = DVector::from_column_slice(rhs);
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(&b));
    }
    m.clone().lu().solve(&b).ok_or(Error::SingularInformation)
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::PathSingularity
            | Error::PathCrossesSingularity { .. }
            | Error::OdeDivergence(_)
            | Error::SingularSystem { .. }
            | Error::InconsistentExtension { .. }
            | Error::OutsideDomain(_)
            | Error::AxisOutsideDomain { .. }
    )
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn fisher_scoring<E: Engine>(engine: &E, opts: &FitOptions) -> Result<FitResult> {
    let (mut theta, mut state) = engine.start()?;
    let start_gap = engine.boundary_gap(&theta);
    let mut ev = engine.evaluate(&state)?;
    let result = |theta: &[f64], ev: &Eval, iterations, converged, hit_boundary| FitResult {
        mode: engine.mode(),
        theta_hat: theta.to_vec(),
        loglik_bar: ev.loglik,
        grad_norm: sup_norm(&ev.grad),
        fisher: (0..ev.fisher.nrows())
            .map(|i| (0..ev.fisher.ncols()).map(|j| ev.fisher[(i, j)]).collect())
            .collect(),
        iterations,
        converged,
        hit_boundary,
    };
    for it in 0..opts.max_iter {
        if sup_norm(&ev.grad) <= opts.grad_tol {
            return Ok(result(&theta, &ev, it, true, false));
        }
        let delta = solve_spd(&ev.fisher, &ev.grad)?;
        // predicted increase of the quadratic model; below this the
        // likelihood comparison is dominated by engine error
        let predicted = 0.5 * delta.dot(&DVector::from_column_slice(&ev.grad));
        let slack = 1e-12 * (1.0 + ev.loglik.abs());
        let mut step = 1.0;
        let mut blocked = false;
        loop {
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + step * d).collect();
            if engine.admissible(&trial) {
                match engine.transport(&state, &trial).and_then(|s| engine.evaluate(&s).map(|e| (s, e))) {
                    // an information matrix that is not positive definite means
                    // the engine has lost accuracy (typically next to the boundary)
                    Ok((_, e)) if e.fisher.clone().cholesky().is_none() => blocked = true,
                    Ok((s, e)) => {
                        // a full step whose predicted gain is below the engine noise
                        // may lose up to that noise, but no more
                        let noise = 1e-9 * (1.0 + ev.loglik.abs());
                        let tolerated = if step == 1.0 && predicted < noise { noise } else { slack };
                        if e.loglik >= ev.loglik - tolerated {
                            theta = trial;
                            state = s;
                            ev = e;
                            break;
                        }
                    }
                    Err(err) if recoverable(&err) => blocked = true,
                    Err(err) => return Err(err),
                }
            } else {
                blocked = true;
            }
            step *= 0.5;
            if step < MIN_STEP {
                let partial = Box::new(result(&theta, &ev, it + 1, false, blocked));
                return Err(if blocked {
                    Error::BoundaryEscape(partial)
                } else {
                    Error::NotConverged(partial)
                });
            }
        }
    }
    if sup_norm(&ev.grad) <= opts.grad_tol {
        return Ok(result(&theta, &ev, opts.max_iter, true, false));
    }
    // iterates that ran out of budget while collapsing onto the boundary
    // are chasing a supremum that is not attained in the open domain
    if engine.boundary_gap(&theta) < BOUNDARY_COLLAPSE * start_gap {
        return Err(Error::BoundaryEscape(Box::new(result(&theta, &ev, opts.max_iter, false, true))));
    }
    Err(Error::NotConverged(Box::new(result(&theta, &ev, opts.max_iter, false, false))))
}

/// Univariate MLE of order `d` on the support recorded in `stats`.
pub fn fit_mle_uni(stats: &SuffStatsUni, d: usize, opts: &FitOptions) -> Result<FitResult> {
    if d == 0 || (stats.support == Support::RealLine && d % 2 == 1) {
        return Err(Error::UnsupportedOrder(format!("order {d} on {:?}", stats.support)));
    }
    require_stats_order(stats.order(), d)?;
    fisher_scoring(
        &UniEngine {
            stats,
            d,
            ode: opts.ode,
        },
        opts,
    )
}

/// Bivariate MLE of degree `stats.d`, started at the product point.
pub fn fit_mle_bi(stats: &SuffStatsBi, opts: &FitOptions) -> Result<FitResult> {
    if stats.d < 2 {
        return Err(Error::UnsupportedOrder("bivariate fits need degree >= 2".into()));
    }
    fisher_scoring(&BiEngine { stats, ode: opts.ode }, opts)
}

/// True iff the MLE of order `d` lies in the open domain, given the
/// order-`d-1` MLE (embedded with a trailing zero or not): `∂_d l̄ < 0` there.
pub fn mle_existence_check(theta_hat_lower: &ThetaUni, stats: &SuffStatsUni, ode: &OdeOptions) -> Result<bool> {
    let lower = theta_hat_lower.coeffs();
    let d = if lower.last() == Some(&0.0) { lower.len() } else { lower.len() + 1 };
    require_stats_order(stats.order(), d)?;
    let a = uni_derivs(theta_hat_lower, d, ode)?;
    Ok(stats.moment(d) - a[d] / a[0] < 0.0)
}

/// MLE of order `k` or, when it does not exist in the open domain, the
/// boundary MLE of lower effective order; always returned at length `k`.
fn fit_null_halfline(stats: &SuffStatsUni, k: usize, opts: &FitOptions) -> Result<ThetaUni> {
    if k == 1 {
        return ThetaUni::half_line(&[-1.0 / stats.moment(1)]);
    }
    let lower = fit_null_halfline(stats, k - 1, opts)?.embedded(k);
    if !mle_existence_check(&lower, stats, &opts.ode)? {
        return Ok(lower);
    }
    match fit_mle_uni(stats, k, opts) {
        Ok(fit) => fit.theta_uni(),
        Err(Error::BoundaryEscape(_)) => Ok(lower),
        Err(e) => Err(e),
    }
}

fn fit_null_realline(stats: &SuffStatsUni, k: usize, opts: &FitOptions) -> Result<ThetaUni> {
    match fit_mle_uni(stats, k, opts) {
        Ok(fit) => fit.theta_uni(),
        Err(Error::BoundaryEscape(_)) if k > 2 => Ok(fit_null_realline(stats, k - 2, opts)?.embedded(k)),
        Err(e) => Err(e),
    }
}

/// Schur complement of the leading `p × p` block in `m`.
fn schur_tail(m: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let a = m.view((0, 0), (p, p)).into_owned();
    let b = m.view((0, p), (p, n - p)).into_owned();
    let c = m.view((p, p), (n - p, n - p)).into_owned();
    let x = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.lu().solve(&b).ok_or(Error::SingularInformation)?,
    };
    Ok(c - b.transpose() * x)
}

/// One-sided score test of order `d-1` against order `d` on the half line:
/// `T = √n ∂_d l̄(θ̂_{d-1}) / √I_{dd·1…d-1}`, rejecting when `T ≤ -z_α`.
pub fn score_test_halfline(stats: &SuffStatsUni, d: usize, alpha: f64, opts: &FitOptions) -> Result<TestResult> {
    if stats.support != Support::HalfLine {
        return Err(Error::InvalidParameter("half-line test needs half-line statistics".into()));
    }
    if d < 2 {
        return Err(Error::UnsupportedOrder("the half-line test needs d >= 2".into()));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1/2), got {alpha}")));
    }
    require_stats_order(stats.order(), d)?;
    let null = fit_null_halfline(stats, d - 1, opts)?.embedded(d);
    let a = uni_derivs(&null, 2 * d, &opts.ode)?;
    let score = stats.moment(d) - a[d] / a[0];
    let info = schur_tail(&fisher_from_derivs(&a, d), d - 1)?[(0, 0)];
    if !(info > 0.0) {
        return Err(Error::SingularInformation);
    }
    let statistic = (stats.n as f64).sqrt() * score / info.sqrt();
    let threshold = -stats::normal_upper_quantile(alpha);
    Ok(TestResult {
        order: d,
        statistic,
        null: NullDistribution::StdNormalLowerTail,
        alpha,
        threshold,
        reject: statistic <= threshold,
        theta_hat_null: null.coeffs().to_vec(),
    })
}

/// Score test of order `order - 2` against `order` on the real line:
/// `T = n sᵀ Ĩ⁻¹ s` with `s = (∂_{order-1} l̄, ∂_{order} l̄)` at the null fit,
/// rejecting when `T ≥ χ²₂(α)`.
pub fn score_test_realline(stats: &SuffStatsUni, order: usize, alpha: f64, opts: &FitOptions) -> Result<TestResult> {
    if stats.support != Support::RealLine {
        return Err(Error::InvalidParameter("real-line test needs real-line statistics".into()));
    }
    if order < 4 || order % 2 == 1 {
        return Err(Error::UnsupportedOrder(format!(
            "the real-line test needs an even order >= 4, got {order}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {alpha}")));
    }
    require_stats_order(stats.order(), order)?;
    let null = fit_null_realline(stats, order - 2, opts)?.embedded(order);
    let a = uni_derivs(&null, 2 * order, &opts.ode)?;
    let s = DVector::from_vec(vec![
        stats.moment(order - 1) - a[order - 1] / a[0],
        stats.moment(order) - a[order] / a[0],
    ]);
    let info = schur_tail(&fisher_from_derivs(&a, order), order - 2)?;
    let x = info.clone().cholesky().ok_or(Error::SingularInformation)?.solve(&s);
    let statistic = stats.n as f64 * s.dot(&x);
    let threshold = stats::chi2_upper_quantile(alpha, 2.0);
    Ok(TestResult {
        order,
        statistic,
        null: NullDistribution::ChiSq2UpperTail,
        alpha,
        threshold,
        reject: statistic >= threshold,
        theta_hat_null: null.coeffs().to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderSelection {
    pub chosen: usize,
    pub trail: Vec<TestResult>,
}

/// Forward selection: starting from order 1 (half line) or 2 (real line),
/// test against the next order and stop at the first non-rejection.
pub fn select_order(
    sample: &[f64],
    d_max: usize,
    alpha: f64,
    support: Support,
    opts: &FitOptions,
) -> Result<OrderSelection> {
    let (mut k, step) = match support {
        Support::HalfLine => (1, 1),
        Support::RealLine => (2, 2),
    };
    if d_max < k {
        return Err(Error::UnsupportedOrder(format!("d_max = {d_max} is below the smallest order {k}")));
    }
    let stats = suff_stats_uni(sample, d_max.max(k), support)?;
    let mut trail = Vec::new();
    while k + step <= d_max {
        let t = match support {
            Support::HalfLine => score_test_halfline(&stats, k + 1, alpha, opts)?,
            Support::RealLine => score_test_realline(&stats, k + 2, alpha, opts)?,
        };
        let reject = t.reject;
        trail.push(t);
        if !reject {
            break;
        }
        k += step;
    }
    Ok(OrderSelection { chosen: k, trail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, QuadOptions};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn stats(m: &[f64], support: Support) -> SuffStatsUni {
        SuffStatsUni {
            n: 1000,
            support,
            moments: m.to_vec(),
        }
    }

    fn ode() -> OdeOptions {
        OdeOptions::adaptive(1e-12)
    }

    #[test]
    fn loglik_examples() {
        let (l, g) = loglik_and_grad_uni(&ThetaUni::half_line(&[-1.0]).unwrap(), &stats(&[1.0], Support::HalfLine), &ode()).unwrap();
        assert_relative_eq!(l, -1.0, epsilon = 1e-14);
        assert!(g[0].abs() < 1e-14);
        let (_, g) = loglik_and_grad_uni(&ThetaUni::half_line(&[-0.5]).unwrap(), &stats(&[2.0], Support::HalfLine), &ode()).unwrap();
        assert!(g[0].abs() < 1e-14);
        let (_, g) = loglik_and_grad_uni(
            &ThetaUni::half_line(&[0.0, -1.0]).unwrap(),
            &stats(&[1.0 / PI.sqrt(), 0.5], Support::HalfLine),
            &ode(),
        )
        .unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn fisher_examples() {
        let i = fisher_info_uni(&ThetaUni::half_line(&[-1.0]).unwrap(), &ode()).unwrap();
        assert_relative_eq!(i[(0, 0)], 1.0, max_relative = 1e-13);
        let i = fisher_info_uni(&ThetaUni::half_line(&[-2.0]).unwrap(), &ode()).unwrap();
        assert_relative_eq!(i[(0, 0)], 0.25, max_relative = 1e-13);
        let theta = ThetaUni::half_line(&[0.0, -1.0]).unwrap();
        let i = fisher_info_uni(&theta, &ode()).unwrap();
        assert_relative_eq!(i[(0, 0)], 0.5 - 1.0 / PI, max_relative = 1e-12);
        // remaining entries from quadrature moments
        let q = QuadOptions::default();
        let m: Vec<f64> = (0..=4).map(|k| oracle::quad_moment_uni(&theta, k, &q).unwrap()).collect();
        assert_relative_eq!(i[(0, 1)], m[3] / m[0] - m[1] * m[2] / (m[0] * m[0]), max_relative = 1e-10);
        assert_relative_eq!(i[(1, 1)], m[4] / m[0] - (m[2] / m[0]).powi(2), max_relative = 1e-10);
        assert_eq!(i[(0, 1)], i[(1, 0)]);
    }

    #[test]
    fn fit_examples() {
        let fit = fit_mle_uni(&stats(&[2.0], Support::HalfLine), 1, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.theta_hat[0], -0.5, max_relative = 1e-9);
        assert!(fit.converged);

        let fit = fit_mle_uni(&stats(&[1.0 / PI.sqrt(), 0.5], Support::HalfLine), 2, &FitOptions::default()).unwrap();
        assert!(fit.theta_hat[0].abs() < 1e-6);
        assert_relative_eq!(fit.theta_hat[1], -1.0, max_relative = 1e-6);
        assert!(fit.grad_norm <= 1e-8);
    }

    #[test]
    fn realline_fit_recovers_gaussian() {
        // N(1, 1/2): θ = (2, -1)
        let fit = fit_mle_uni(&stats(&[1.0, 1.5], Support::RealLine), 2, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.theta_hat[0], 2.0, max_relative = 1e-8);
        assert_relative_eq!(fit.theta_hat[1], -1.0, max_relative = 1e-8);
    }

    #[test]
    fn existence_examples() {
        let lower = ThetaUni::half_line(&[-1.0, 0.0]).unwrap();
        let o = ode();
        assert!(!mle_existence_check(&lower, &stats(&[1.0, 2.0], Support::HalfLine), &o).unwrap());
        assert!(mle_existence_check(&lower, &stats(&[1.0, 1.5], Support::HalfLine), &o).unwrap());
        assert!(!mle_existence_check(&lower, &stats(&[1.0, 2.5], Support::HalfLine), &o).unwrap());
    }

    #[test]
    fn halfline_test_examples() {
        let opts = FitOptions::default();
        let t = score_test_halfline(&stats(&[1.0, 2.0], Support::HalfLine), 2, 0.05, &opts).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert!(!t.reject);
        let t = score_test_halfline(&stats(&[1.0, 1.5], Support::HalfLine), 2, 0.05, &opts).unwrap();
        assert!(t.statistic < 0.0);
        // coherence with the existence check
        let lower = ThetaUni::half_line(&[-1.0, 0.0]).unwrap();
        assert!(mle_existence_check(&lower, &stats(&[1.0, 1.5], Support::HalfLine), &opts.ode).unwrap());
        // by hand: score -0.5, Schur complement Var(X²) - Cov(X,X²)²/Var(X) = 20 - 16 = 4
        assert_relative_eq!(t.statistic, 1000f64.sqrt() * -0.5 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn realline_test_examples() {
        let opts = FitOptions::default();
        // N(0, 1/2): E X² = 1/2, E X⁴ = 3/4
        let gauss = [0.0, 0.5, 0.0, 0.75];
        let t = score_test_realline(&stats(&gauss, Support::RealLine), 4, 0.05, &opts).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        let mut last = 0.0;
        for delta in [0.01, 0.02, 0.04] {
            let mut m = gauss;
            m[3] += delta;
            let t = score_test_realline(&stats(&m, Support::RealLine), 4, 0.05, &opts).unwrap();
            assert!(t.statistic > last);
            last = t.statistic;
        }
    }

    #[test]
    fn select_order_trivial() {
        let sample: Vec<f64> = (1..=50).map(|k| k as f64 / 25.0).collect();
        let sel = select_order(&sample, 1, 0.05, Support::HalfLine, &FitOptions::default()).unwrap();
        assert_eq!(sel.chosen, 1);
        assert!(sel.trail.is_empty());
    }

    #[test]
    fn bivariate_fit_recovers_population_point() {
        let theta = ThetaBi::new(2, vec![0.3, -0.2, -1.0, -0.5, -1.5]).unwrap();
        let table = holo_bi::extend_table(&holo_bi::norm_const_bi(&theta, &ode()).unwrap(), 2).unwrap();
        let a = table.norm_const();
        let moments = bi_pairs(2).iter().map(|&(i, j)| table.get(i, j).unwrap() / a).collect();
        let st = SuffStatsBi { n: 1000, d: 2, moments };
        let fit = fit_mle_bi(&st, &FitOptions::default()).unwrap();
        for (x, y) in fit.theta_hat.iter().zip(theta.coeffs()) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        let i = fit.fisher_matrix();
        assert!(i.symmetric_eigenvalues().min() > 0.0);
    }
}
