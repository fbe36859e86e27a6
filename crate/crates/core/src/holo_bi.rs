//! Holonomic engine for the bivariate normalizing constant
//!
//! `A(θ) = ∫∫_{x,y>0} exp(Σ_{1≤i+j≤d} θ_ij x^i y^j) dx dy`.
//!
//! Write `T[i][j] = ∂_10^i ∂_01^j A`. Integrating `∂_x` and `∂_y` of
//! `x^s y^t h` over the quadrant gives, for every `s, t ≥ 0`,
//!
//! ```text
//! Σ i θ_ij T[s+i-1][t+j] = -[s = 0] ∂_01^t A_y - s T[s-1][t]
//! Σ j θ_ij T[s+i][t+j-1] = -[t = 0] ∂_10^s A_x - t T[s][t-1]
//! ```
//!
//! where `A_x`, `A_y` are the univariate constants on the two axes. The
//! top-degree terms of the `2(q+1)` equations with `s + t = q` involve only
//! the `q + d` entries of order `q + d - 1`; at `q = d - 2` the system is
//! square (the matrix `P`) and for larger `q` it is overdetermined but
//! consistent. Entries of order `≤ 2d - 4` form the state vector, which
//! is transported along segments together with the two axis bases.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::domain::{bi_index, bi_pairs, in_proper_bivariate_space, Support, ThetaBi, ThetaUni};
use crate::error::{Error, Result};
use crate::holo_uni::{self, extend_basis, initial_moment};
use crate::ode::{self, OdeOptions};
use crate::oracle::{self, QuadOptions};
use crate::polyalg;

/// Position of `T[i][j]` in a table stored by total order, then by `j`.
pub fn tri(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

fn tri_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn base_order(d: usize) -> usize {
    2 * d - 4
}

const SINGULAR_TOL: f64 = 1e-12;
const LSQ_TOL: f64 = 1e-6;

/// Mixed derivatives `∂_10^i ∂_01^j A(θ)` for all `i + j ≤ max_order`, with
/// the axis bases `[∂_10^s A_x]_{s<d-1}` and `[∂_01^t A_y]_{t<d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivTableBi {
    theta: ThetaBi,
    entries: Vec<f64>,
    max_order: usize,
    x_basis: Vec<f64>,
    y_basis: Vec<f64>,
    last_transport_error: f64,
}

impl DerivTableBi {
    /// Table from its state vector (entries of order `≤ 2d - 4`) and axis bases.
    pub fn from_parts(theta: ThetaBi, base: Vec<f64>, x_basis: Vec<f64>, y_basis: Vec<f64>) -> Result<Self> {
        let d = check_degree(&theta)?;
        if base.len() != tri_len(base_order(d)) || x_basis.len() != d - 1 || y_basis.len() != d - 1 {
            return Err(Error::InvalidParameter(format!(
                "degree {d} needs {} table entries and axis bases of length {}",
                tri_len(base_order(d)),
                d - 1
            )));
        }
        Ok(Self {
            theta,
            entries: base,
            max_order: base_order(d),
            x_basis,
            y_basis,
            last_transport_error: 0.0,
        })
    }

    /// Table from externally computed state entries; the axis constants are
    /// evaluated with the univariate engine.
    pub fn from_base(theta: ThetaBi, base: Vec<f64>, opts: &OdeOptions) -> Result<Self> {
        let d = check_degree(&theta)?;
        let (x, y) = boundary_consts(&theta, d - 2, opts)?;
        Self::from_parts(theta, base, x, y)
    }

    /// State entries by 2-D quadrature: the seed for chambers that contain no
    /// product point.
    pub fn from_quadrature(theta: ThetaBi, quad: &QuadOptions, opts: &OdeOptions) -> Result<Self> {
        let d = check_degree(&theta)?;
        let order = base_order(d);
        let mut base = Vec::with_capacity(tri_len(order));
        for k in 0..=order {
            for j in 0..=k {
                base.push(oracle::quad_a_bi(&theta, k - j, j, quad)?);
            }
        }
        Self::from_base(theta, base, opts)
    }

    pub fn theta(&self) -> &ThetaBi {
        &self.theta
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `T[i][j]` if filled.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i + j <= self.max_order).then(|| self.entries[tri(i, j)])
    }

    pub fn norm_const(&self) -> f64 {
        self.entries[0]
    }

    /// The state vector `F(θ)`: entries of order `≤ 2d - 4`.
    pub fn state(&self) -> &[f64] {
        &self.entries[..tri_len(base_order(self.theta.degree()))]
    }

    pub fn last_transport_error(&self) -> f64 {
        self.last_transport_error
    }

    /// `[∂_10^s A_x]` and `[∂_01^t A_y]` for `s, t ≤ max_order`.
    pub fn axis_derivs(&self, max_order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        axis_derivs(&self.theta, &self.x_basis, &self.y_basis, max_order)
    }
}

fn check_degree(theta: &ThetaBi) -> Result<usize> {
    let d = theta.degree();
    if d < 2 {
        return Err(Error::UnsupportedOrder(format!(
            "bivariate engine needs degree >= 2, got {d}"
        )));
    }
    Ok(d)
}

fn axis_theta(theta: &ThetaBi, axis: char) -> Result<ThetaUni> {
    let c = if axis == 'x' { theta.x_axis() } else { theta.y_axis() };
    let t = ThetaUni::half_line(&c)?;
    if t.leading() < 0.0 {
        Ok(t)
    } else {
        Err(Error::AxisOutsideDomain { axis })
    }
}

fn axis_derivs(theta: &ThetaBi, xb: &[f64], yb: &[f64], max_order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let tx = axis_theta(theta, 'x')?;
    let ty = axis_theta(theta, 'y')?;
    Ok((extend_basis(&tx, xb, max_order), extend_basis(&ty, yb, max_order)))
}

/// `([∂_10^s A_x]_{s≤M}, [∂_01^t A_y]_{t≤M})` from the univariate engine.
/// `∂_01 A_x = ∂_10 A_y = 0`, so these are the only non-zero derivatives.
pub fn boundary_consts(theta: &ThetaBi, max_order: usize, opts: &OdeOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let tx = axis_theta(theta, 'x')?;
    let ty = axis_theta(theta, 'y')?;
    Ok((
        holo_uni::norm_const_and_derivs(&tx, max_order, opts)?,
        holo_uni::norm_const_and_derivs(&ty, max_order, opts)?,
    ))
}

/// Coefficient matrix of the order-`k` equations (`s + t = k - d + 1`).
/// Rows: x-family for `t = 0..=q`, then y-family for `t = 0..=q`; column
/// `c` is the unknown `T[k-c][c]`.
fn p_matrix(theta: &ThetaBi, q: usize) -> DMatrix<f64> {
    let d = theta.degree();
    let mut p = DMatrix::zeros(2 * (q + 1), q + d);
    for t in 0..=q {
        for j in 0..d {
            p[(t, t + j)] = (d - j) as f64 * theta.get(d - j, j);
        }
        for j in 1..=d {
            p[(q + 1 + t, t + j - 1)] = j as f64 * theta.get(d - j, j);
        }
    }
    p
}

/// Right-hand side of the order-`k` equations from lower-order entries.
fn q_vector(theta: &ThetaBi, entries: &[f64], ax: &[f64], ay: &[f64], q: usize) -> DVector<f64> {
    let d = theta.degree();
    let mut rhs = DVector::zeros(2 * (q + 1));
    for t in 0..=q {
        let s = q - t;
        let mut x = if s == 0 { -ay[t] } else { -(s as f64) * entries[tri(s - 1, t)] };
        let mut y = if t == 0 { -ax[s] } else { -(t as f64) * entries[tri(s, t - 1)] };
        for n in 1..d {
            for j in 0..=n {
                let i = n - j;
                let th = theta.get(i, j);
                if th == 0.0 {
                    continue;
                }
                if i >= 1 {
                    x -= i as f64 * th * entries[tri(s + i - 1, t + j)];
                }
                if j >= 1 {
                    y -= j as f64 * th * entries[tri(s + i, t + j - 1)];
                }
            }
        }
        rhs[t] = x;
        rhs[q + 1 + t] = y;
    }
    rhs
}

fn is_singular(p: &DMatrix<f64>, det: f64) -> bool {
    let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    !(det.abs() >= SINGULAR_TOL * scale.powi(p.nrows() as i32)) || scale == 0.0
}

/// `det P(θ)`, the determinant of the square system for order `2d - 3`.
pub fn det_p(theta: &ThetaBi) -> Result<f64> {
    let d = check_degree(theta)?;
    Ok(p_matrix(theta, d - 2).determinant())
}

/// The square system `P X = Q` for the order-`2d-3` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaffianSystemBi {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub det_p: f64,
}

impl PfaffianSystemBi {
    /// `[T[2d-3][0], T[2d-4][1], …, T[0][2d-3]]`.
    pub fn solve(&self) -> Result<Vec<f64>> {
        if is_singular(&self.p, self.det_p) {
            return Err(Error::SingularSystem { det: self.det_p });
        }
        self.p
            .clone()
            .lu()
            .solve(&self.q)
            .map(|x| x.iter().copied().collect())
            .ok_or(Error::SingularSystem { det: self.det_p })
    }
}

pub fn assemble_system(table: &DerivTableBi) -> Result<PfaffianSystemBi> {
    let theta = &table.theta;
    let d = check_degree(theta)?;
    let q = d - 2;
    let (ax, ay) = table.axis_derivs(q)?;
    let p = p_matrix(theta, q);
    let det_p = p.determinant();
    if is_singular(&p, det_p) {
        return Err(Error::SingularSystem { det: det_p });
    }
    let rhs = q_vector(theta, &table.entries, &ax, &ay, q);
    Ok(PfaffianSystemBi { p, q: rhs, det_p })
}

/// Appends orders `from..=to` to `entries` (which must hold all lower
/// orders). `ax`, `ay` must reach order `to - d + 1`.
fn fill_orders(theta: &ThetaBi, entries: &mut Vec<f64>, from: usize, to: usize, ax: &[f64], ay: &[f64]) -> Result<()> {
    let d = theta.degree();
    debug_assert!(from >= 2 * d - 3 && entries.len() == tri_len(from - 1));
    for k in from..=to {
        let q = k + 1 - d;
        let p = p_matrix(theta, q);
        let rhs = q_vector(theta, entries, ax, ay, q);
        let x = if p.nrows() == p.ncols() {
            let det = p.determinant();
            if is_singular(&p, det) {
                return Err(Error::SingularSystem { det });
            }
            p.clone().lu().solve(&rhs).ok_or(Error::SingularSystem { det })?
        } else {
            let svd = p.clone().svd(true, true);
            let x = svd
                .solve(&rhs, 1e-14 * svd.singular_values.max())
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let scale = rhs.norm().max(p.norm() * x.norm());
            let residual = (&p * &x - &rhs).norm() / if scale > 0.0 { scale } else { 1.0 };
            if !(residual <= LSQ_TOL) {
                return Err(Error::InconsistentExtension { order: k, residual });
            }
            x
        };
        entries.extend(x.iter());
    }
    Ok(())
}

/// Fills the table through order `max_order`.
pub fn extend_table(table: &DerivTableBi, max_order: usize) -> Result<DerivTableBi> {
    let d = table.theta.degree();
    let mut out = table.clone();
    if max_order <= table.max_order {
        return Ok(out);
    }
    let (ax, ay) = table.axis_derivs(max_order + 1 - d)?;
    fill_orders(&table.theta, &mut out.entries, table.max_order + 1, max_order, &ax, &ay)?;
    out.max_order = max_order;
    Ok(out)
}

/// The product point `θ_{d0} = -c1`, `θ_{0d} = -c2`, where every entry is a
/// product of two Gamma-function moments.
pub fn initial_state_bi(d: usize, c1: f64, c2: f64) -> Result<DerivTableBi> {
    for c in [c1, c2] {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::NonPositiveScale(c));
        }
    }
    let theta = ThetaBi::product_point(d, c1, c2);
    check_degree(&theta)?;
    let order = base_order(d);
    let ux: Vec<f64> = (0..=order).map(|m| initial_moment(d, c1, Support::HalfLine, m)).collect();
    let uy: Vec<f64> = (0..=order).map(|m| initial_moment(d, c2, Support::HalfLine, m)).collect();
    let mut base = Vec::with_capacity(tri_len(order));
    for k in 0..=order {
        for j in 0..=k {
            base.push(ux[k - j] * uy[j]);
        }
    }
    let x_basis = ux[..d - 1].to_vec();
    let y_basis = uy[..d - 1].to_vec();
    DerivTableBi::from_parts(theta, base, x_basis, y_basis)
}

fn disc(theta: &ThetaBi) -> Result<f64> {
    polyalg::discriminant(&theta.top())
}

/// Same chamber test used at both ends and along the path.
fn chamber_ok(theta: &ThetaBi, sign: f64) -> Result<bool> {
    if !in_proper_bivariate_space(theta) || polyalg::on_discriminant(&theta.top())? {
        return Ok(false);
    }
    Ok(disc(theta)?.signum() == sign)
}

/// Transports the table to `target` along the straight segment, monitoring
/// the sign of `D(θ)` and the conditioning of `P(θ)` at every step.
pub fn transport_bi(table: &DerivTableBi, target: &ThetaBi, opts: &OdeOptions) -> Result<DerivTableBi> {
    let source = &table.theta;
    let d = check_degree(source)?;
    if target.degree() != d {
        return Err(Error::InvalidParameter("source and target differ in degree".into()));
    }
    if !in_proper_bivariate_space(target) {
        return Err(Error::OutsideDomain("target is not in the proper parameter space".into()));
    }
    let sign = disc(source)?.signum();
    if !chamber_ok(source, sign)? {
        return Err(Error::PathCrossesSingularity { s: 0.0 });
    }
    if !chamber_ok(target, sign)? {
        return Err(Error::PathCrossesSingularity { s: 1.0 });
    }

    let order = base_order(d);
    let nb = tri_len(order);
    let pairs = bi_pairs(d);
    let h: Vec<f64> = target.coeffs().iter().zip(source.coeffs()).map(|(t, s)| t - s).collect();
    let length = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    let base_table = || DerivTableBi {
        theta: target.clone(),
        entries: table.state().to_vec(),
        max_order: order,
        x_basis: table.x_basis.clone(),
        y_basis: table.y_basis.clone(),
        last_transport_error: 0.0,
    };
    if length == 0.0 {
        return Ok(base_table());
    }
    let point = |s: f64| -> ThetaBi {
        let c = source.coeffs().iter().zip(&h).map(|(a, dh)| a + s * dh).collect();
        ThetaBi::new(d, c).expect("interpolated coefficients are finite")
    };

    let mut y0 = table.state().to_vec();
    y0.extend_from_slice(&table.x_basis);
    y0.extend_from_slice(&table.y_basis);

    let rhs = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
        let theta = point(s);
        let (xb, rest) = y[nb..].split_at(d - 1);
        let (ax, ay) = axis_derivs(&theta, xb, rest, 2 * d - 2)?;
        let mut entries = y[..nb].to_vec();
        fill_orders(&theta, &mut entries, order + 1, order + d, &ax, &ay)?;
        let mut out = Vec::with_capacity(y.len());
        for k in 0..=order {
            for j in 0..=k {
                let i = k - j;
                out.push(
                    pairs
                        .iter()
                        .map(|&(a, b)| h[bi_index(a, b)] * entries[tri(i + a, j + b)])
                        .sum(),
                );
            }
        }
        for (axis, a) in [(0usize, &ax), (1, &ay)] {
            for m in 0..d - 1 {
                out.push(
                    (1..=d)
                        .map(|i| {
                            let idx = if axis == 0 { bi_index(i, 0) } else { bi_index(0, i) };
                            h[idx] * a[m + i]
                        })
                        .sum(),
                );
            }
        }
        Ok(out)
    };
    let guard = |s: f64, _: &[f64]| -> Result<()> {
        if chamber_ok(&point(s), sign)? {
            Ok(())
        } else {
            Err(Error::PathCrossesSingularity { s })
        }
    };
    let sol = ode::integrate(&y0, length, opts, rhs, guard)?;
    let mut out = base_table();
    out.entries = sol.y[..nb].to_vec();
    out.x_basis = sol.y[nb..nb + d - 1].to_vec();
    out.y_basis = sol.y[nb + d - 1..].to_vec();
    out.last_transport_error = sol.error_estimate;
    Ok(out)
}

/// Transports along the polygonal path through `waypoints` to `target`.
pub fn transport_bi_path(
    table: &DerivTableBi,
    waypoints: &[ThetaBi],
    target: &ThetaBi,
    opts: &OdeOptions,
) -> Result<DerivTableBi> {
    let mut cur = table.clone();
    let mut err = 0.0;
    for w in waypoints.iter().chain(std::iter::once(target)) {
        cur = transport_bi(&cur, w, opts)?;
        err += cur.last_transport_error;
    }
    cur.last_transport_error = err;
    Ok(cur)
}

/// Quadrature-seeded table inside the degree-2 chamber `D < 0`
/// (`θ_11 < -2√(θ_20 θ_02)`), which contains no product point.
fn d2_negative_seed() -> Result<DerivTableBi> {
    static SEED: OnceLock<std::result::Result<(Vec<f64>, Vec<f64>, Vec<f64>), String>> = OnceLock::new();
    let theta = ThetaBi::new(2, vec![0.0, 0.0, -1.0, -3.0, -1.0]).expect("valid seed");
    let cached = SEED.get_or_init(|| {
        DerivTableBi::from_quadrature(theta.clone(), &QuadOptions::default(), &OdeOptions::adaptive(1e-13))
            .map(|t| (t.entries, t.x_basis, t.y_basis))
            .map_err(|e| e.to_string())
    });
    match cached {
        Ok((e, x, y)) => DerivTableBi::from_parts(theta, e.clone(), x.clone(), y.clone()),
        Err(msg) => Err(Error::OdeDivergence(format!("seed quadrature failed: {msg}"))),
    }
}

/// `A(θ)` and its state vector at `theta`.
///
/// Starts from the product point `c1 = |θ_{d0}|`, `c2 = |θ_{0d}|`. For
/// `d = 2` the chamber `D < 0` is reached from a quadrature-seeded table via
/// a waypoint that keeps `θ_11 < -(|θ_20| + |θ_02|)`, a linear condition
/// that implies `D < 0` along both segments. Other chambers need a seed
/// supplied to [`transport_bi`].
pub fn norm_const_bi(theta: &ThetaBi, opts: &OdeOptions) -> Result<DerivTableBi> {
    let d = check_degree(theta)?;
    if !in_proper_bivariate_space(theta) {
        return Err(Error::OutsideDomain("theta is not in the proper parameter space".into()));
    }
    let start = initial_state_bi(d, theta.get(d, 0).abs(), theta.get(0, d).abs())?;
    let d_target = disc(theta)?;
    if d_target.signum() == disc(start.theta())?.signum() {
        return transport_bi(&start, theta, opts);
    }
    if d == 2 {
        let seed = d2_negative_seed()?;
        let (a, b, t) = (theta.get(2, 0), theta.get(0, 2), theta.get(1, 1));
        let bound = -(a.abs() + b.abs());
        if t < bound {
            return transport_bi(&seed, theta, opts);
        }
        let mut w = theta.clone();
        w.set(1, 1, bound - 1.0);
        return transport_bi_path(&seed, &[w], theta, opts);
    }
    Err(Error::PathCrossesSingularity { s: 0.0 })
}

/// Largest relative residual of the two integration-by-parts families over
/// every `(s, t)` whose equations fit inside the filled table.
pub fn equation_residual(table: &DerivTableBi) -> Result<f64> {
    let d = table.theta.degree();
    let top = table.max_order;
    if top + 1 < d {
        return Ok(0.0);
    }
    let (ax, ay) = table.axis_derivs(top + 1 - d)?;
    let mut worst: f64 = 0.0;
    for k in (d - 1)..=top {
        let q = k + 1 - d;
        let p = p_matrix(&table.theta, q);
        let rhs = q_vector(&table.theta, &table.entries, &ax, &ay, q);
        let x = DVector::from_iterator(k + 1, (0..=k).map(|c| table.entries[tri(k - c, c)]));
        let lhs = &p * &x;
        let mag = p.abs() * x.abs();
        for r in 0..rhs.len() {
            let scale = rhs[r].abs().max(mag[r]);
            if scale > 0.0 {
                worst = worst.max((lhs[r] - rhs[r]).abs() / scale);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    fn tight() -> OdeOptions {
        OdeOptions::adaptive(1e-12)
    }

    fn theta2(c: [f64; 5]) -> ThetaBi {
        ThetaBi::new(2, c.to_vec()).unwrap()
    }

    #[test]
    fn boundary_examples() {
        let (ax, ay) = boundary_consts(&theta2([0.0, 0.0, -1.0, 0.0, -1.0]), 1, &tight()).unwrap();
        assert_relative_eq!(ax[0], SQRT_PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(ay[0], SQRT_PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(ax[1], 0.5, max_relative = 1e-13);
        let (ax, ay) = boundary_consts(&ThetaBi::product_point(3, 1.0, 1.0), 0, &tight()).unwrap();
        assert_relative_eq!(ax[0], 0.892_979_511_569_249_2, max_relative = 1e-13);
        assert_relative_eq!(ay[0], 0.892_979_511_569_249_2, max_relative = 1e-13);
        let mut bad = ThetaBi::product_point(2, 1.0, 1.0);
        bad.set(0, 2, 0.5);
        assert!(matches!(
            boundary_consts(&bad, 0, &tight()),
            Err(Error::AxisOutsideDomain { axis: 'y' })
        ));
    }

    #[test]
    fn system_examples() {
        let table = initial_state_bi(2, 1.0, 1.0).unwrap();
        let sys = assemble_system(&table).unwrap();
        assert_eq!(sys.p, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -2.0]));
        assert_relative_eq!(sys.q[0], -SQRT_PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(sys.q[1], -SQRT_PI / 2.0, max_relative = 1e-14);
        let x = sys.solve().unwrap();
        assert_relative_eq!(x[0], SQRT_PI / 4.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], SQRT_PI / 4.0, max_relative = 1e-14);

        let t = theta2([0.3, -0.2, -1.5, 0.7, -2.0]);
        let p = p_matrix(&t, 0);
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[-3.0, 0.7, 0.7, -4.0]));
        assert_relative_eq!(det_p(&t).unwrap(), 4.0 * 1.5 * 2.0 - 0.49, max_relative = 1e-14);

        let mut t3 = ThetaBi::zeros(3);
        for (i, j, v) in [(3, 0, -1.0), (2, 1, 0.5), (1, 2, -0.25), (0, 3, -2.0)] {
            t3.set(i, j, v);
        }
        let p = p_matrix(&t3, 1);
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            -3.0, 1.0, -0.25, 0.0,
            0.0, -3.0, 1.0, -0.25,
            0.5, -0.5, -6.0, 0.0,
            0.0, 0.5, -0.5, -6.0,
        ]);
        assert_eq!(p, want);
    }

    #[test]
    fn det_identity_spot_checks() {
        for d in 2..=5 {
            let mut t = ThetaBi::zeros(d);
            for (k, j) in (0..=d).enumerate() {
                t.set(d - j, j, -1.0 + 0.37 * k as f64 - 0.11 * (k * k) as f64);
            }
            let lhs = det_p(&t).unwrap();
            let rhs = (d as f64).powi(d as i32 - 2) * polyalg::discriminant(&t.top()).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn extension_examples() {
        let table = extend_table(&initial_state_bi(2, 1.0, 1.0).unwrap(), 2).unwrap();
        assert_relative_eq!(table.get(2, 0).unwrap(), PI / 8.0, max_relative = 1e-13);
        assert_relative_eq!(table.get(0, 2).unwrap(), PI / 8.0, max_relative = 1e-13);
        assert_relative_eq!(table.get(1, 1).unwrap(), 0.25, max_relative = 1e-13);

        let table = extend_table(&initial_state_bi(3, 1.0, 1.0).unwrap(), 5).unwrap();
        for k in 0..=5 {
            for j in 0..=k {
                let want = initial_moment(3, 1.0, Support::HalfLine, k - j) * initial_moment(3, 1.0, Support::HalfLine, j);
                assert_relative_eq!(table.get(k - j, j).unwrap(), want, max_relative = 1e-11);
            }
        }
        assert!(equation_residual(&table).unwrap() < 1e-12);
    }

    #[test]
    fn initial_examples() {
        assert_relative_eq!(initial_state_bi(2, 1.0, 1.0).unwrap().norm_const(), PI / 4.0, max_relative = 1e-14);
        assert_relative_eq!(
            initial_state_bi(3, 1.0, 1.0).unwrap().norm_const(),
            0.797_412_408_082_454_9,
            max_relative = 1e-13
        );
        assert_relative_eq!(initial_state_bi(2, 4.0, 1.0).unwrap().norm_const(), PI / 8.0, max_relative = 1e-14);
        assert!(matches!(initial_state_bi(2, -1.0, 1.0), Err(Error::NonPositiveScale(_))));
    }

    #[test]
    fn transport_examples() {
        let start = initial_state_bi(2, 1.0, 1.0).unwrap();
        let a = transport_bi(&start, &theta2([0.0, 0.0, -2.0, 0.0, -1.0]), &tight()).unwrap();
        assert_relative_eq!(a.norm_const(), PI / (4.0 * 2f64.sqrt()), max_relative = 1e-10);
        let a = transport_bi(&start, &theta2([-1.0, 0.0, -1.0, 0.0, -1.0]), &tight()).unwrap();
        assert_relative_eq!(a.norm_const(), 0.545_641_360_765_047 * SQRT_PI / 2.0, max_relative = 1e-10);
        // 2-D quadrature reference (mpmath)
        let a = transport_bi(&start, &theta2([0.0, 0.0, -1.0, -1.0, -1.0]), &tight()).unwrap();
        assert_relative_eq!(a.norm_const(), 0.604_599_788_078_072_6, max_relative = 1e-9);
        let full = extend_table(&a, 2).unwrap();
        assert_relative_eq!(full.get(1, 0).unwrap(), 0.295_408_975_150_919_3, max_relative = 1e-9);
        assert_relative_eq!(full.get(2, 0).unwrap(), 0.236_399_858_718_715_1, max_relative = 1e-9);
        assert_relative_eq!(full.get(1, 1).unwrap(), 0.131_800_070_640_642_5, max_relative = 1e-9);
    }

    #[test]
    fn crossing_is_rejected() {
        let start = initial_state_bi(2, 1.0, 1.0).unwrap();
        let r = transport_bi(&start, &theta2([0.0, 0.0, -1.0, -3.0, -1.0]), &tight());
        assert!(matches!(r, Err(Error::PathCrossesSingularity { .. })));
    }

    #[test]
    fn negative_chamber_via_seed() {
        let t = theta2([0.4, -0.3, -1.0, -2.5, -1.5]);
        let a = norm_const_bi(&t, &tight()).unwrap();
        let q = oracle::quad_a_bi(&t, 0, 0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(a.norm_const(), q, max_relative = 1e-9);
    }

    #[test]
    fn transpose_symmetry() {
        let t = ThetaBi::new(3, vec![0.2, -0.4, 0.1, 0.3, -0.2, -1.0, 0.4, -0.3, -1.5]).unwrap();
        let a = extend_table(&norm_const_bi(&t, &tight()).unwrap(), 4).unwrap();
        let b = extend_table(&norm_const_bi(&t.transposed(), &tight()).unwrap(), 4).unwrap();
        for k in 0..=4 {
            for j in 0..=k {
                assert_relative_eq!(a.get(k - j, j).unwrap(), b.get(j, k - j).unwrap(), max_relative = 1e-8);
            }
        }
        assert!(equation_residual(&a).unwrap() < 1e-8);
    }
}
