//! Explicit Runge–Kutta integrators used to transport derivative vectors
//! along straight segments in parameter space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OdeOptions {
    /// Classical RK4 with `steps_per_unit` steps per unit Euclidean path length.
    Fixed { steps_per_unit: usize },
    /// Dormand–Prince 5(4) with local error control.
    Adaptive { rtol: f64, max_steps: usize },
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions::Adaptive {
            rtol: 1e-10,
            max_steps: 100_000,
        }
    }
}

impl OdeOptions {
    pub fn fixed() -> Self {
        OdeOptions::Fixed {
            steps_per_unit: 1000,
        }
    }

    pub fn adaptive(rtol: f64) -> Self {
        OdeOptions::Adaptive {
            rtol,
            max_steps: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OdeOptions::Fixed { steps_per_unit } if steps_per_unit == 0 => Err(
                Error::InvalidParameter("steps_per_unit must be positive".into()),
            ),
            OdeOptions::Adaptive { rtol, max_steps } if !(rtol > 0.0) || max_steps == 0 => Err(
                Error::InvalidParameter("ODE tolerance must be > 0".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Solution at `s = 1` and an estimate of the accumulated relative error.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub y: Vec<f64>,
    pub error_estimate: f64,
    pub steps: usize,
}

/// Integrates `dy/ds = rhs(s, y)` over `s ∈ [0, 1]`. `path_length` scales the
/// fixed step count. `on_step` runs after every accepted step.
pub fn integrate<F, G>(
    y0: &[f64],
    path_length: f64,
    opts: &OdeOptions,
    mut rhs: F,
    mut on_step: G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    opts.validate()?;
    if y0.is_empty() {
        return Ok(OdeSolution {
            y: vec![],
            error_estimate: 0.0,
            steps: 0,
        });
    }
    match *opts {
        OdeOptions::Fixed { steps_per_unit } => {
            let n = ((steps_per_unit as f64 * path_length).ceil() as usize).max(2);
            let fine = rk4(y0, n, &mut rhs, &mut on_step)?;
            let coarse = rk4(y0, n / 2, &mut rhs, &mut |_, _| Ok(()))?;
            // Richardson: the error of the fine solution is ~ (fine - coarse) / 15
            let err = fine
                .iter()
                .zip(&coarse)
                .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
                / 15.0;
            Ok(OdeSolution {
                y: fine,
                error_estimate: err,
                steps: n,
            })
        }
        OdeOptions::Adaptive { rtol, max_steps } => dopri5(y0, rtol, max_steps, &mut rhs, &mut on_step),
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        for (o, ki) in out.iter_mut().zip(k) {
            *o += h * c * ki;
        }
    }
    out
}

fn check_finite(y: &[f64], s: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::OdeDivergence(format!("non-finite state at s = {s:.6}")))
    }
}

fn rk4<F, G>(y0: &[f64], n: usize, rhs: &mut F, on_step: &mut G) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    let h = 1.0 / n as f64;
    let mut y = y0.to_vec();
    for k in 0..n {
        let s = k as f64 * h;
        let k1 = rhs(s, &y)?;
        let k2 = rhs(s + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]))?;
        let k3 = rhs(s + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]))?;
        let k4 = rhs(s + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(
            &y,
            h,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        );
        check_finite(&y, s + h)?;
        on_step(s + h, &y)?;
    }
    Ok(y)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri5<F, G>(
    y0: &[f64],
    rtol: f64,
    max_steps: usize,
    rhs: &mut F,
    on_step: &mut G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    let mut y = y0.to_vec();
    let mut s = 0.0;
    let mut h: f64 = 0.05;
    let mut k1 = rhs(0.0, &y)?;
    let mut total_err = 0.0;
    let mut steps = 0;
    let mut attempts = 0;
    while s < 1.0 {
        attempts += 1;
        if attempts > max_steps {
            return Err(Error::OdeDivergence(format!(
                "exceeded {max_steps} steps at s = {s:.6}"
            )));
        }
        if s + h > 1.0 {
            h = 1.0 - s;
        }
        if h < 1e-14 {
            return Err(Error::OdeDivergence(format!("step size underflow at s = {s:.6}")));
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        let mut failed = false;
        for stage in 1..7 {
            let terms: Vec<(f64, &[f64])> = (0..stage).map(|j| (A[stage][j], k[j].as_slice())).collect();
            let ys = axpy(&y, h, &terms);
            match rhs(s + C[stage] * h, &ys) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => k.push(v),
                Ok(_) | Err(Error::SingularSystem { .. }) | Err(Error::InconsistentExtension { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed {
            h *= 0.25;
            continue;
        }
        let terms5: Vec<(f64, &[f64])> = (0..7).map(|j| (B5[j], k[j].as_slice())).collect();
        let y5 = axpy(&y, h, &terms5);
        let scale = y.iter().chain(&y5).fold(0.0f64, |m, v| m.max(v.abs()));
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e4: f64 = (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>() * h;
            // mixed scale: componentwise relative, floored by 1e-3 of the largest entry
            let sc = rtol * (y[i].abs().max(y5[i].abs()) + 1e-3 * scale);
            err = err.max(e4.abs() / sc);
        }
        if err <= 1.0 {
            s += h;
            steps += 1;
            total_err += err * rtol;
            y = y5;
            check_finite(&y, s)?;
            on_step(s, &y)?;
            k1 = k.pop().unwrap();
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(OdeSolution {
        y,
        error_estimate: total_err,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_rhs(_s: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![2.0 * y[0], -y[1]])
    }

    #[test]
    fn adaptive_solves_linear_system() {
        let sol = integrate(&[1.0, 1.0], 1.0, &OdeOptions::adaptive(1e-12), exp_rhs, |_, _| Ok(())).unwrap();
        assert!((sol.y[0] - 2f64.exp()).abs() < 1e-10 * 2f64.exp());
        assert!((sol.y[1] - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fixed_rk4_solves_linear_system() {
        let sol = integrate(&[1.0, 1.0], 1.0, &OdeOptions::fixed(), exp_rhs, |_, _| Ok(())).unwrap();
        assert!((sol.y[0] - 2f64.exp()).abs() < 1e-11 * 2f64.exp());
        assert!(sol.error_estimate < 1e-11);
    }

    #[test]
    fn empty_state_is_noop() {
        let sol = integrate(&[], 1.0, &OdeOptions::default(), exp_rhs, |_, _| Ok(())).unwrap();
        assert!(sol.y.is_empty());
    }

    #[test]
    fn guard_aborts() {
        let r = integrate(&[1.0, 1.0], 1.0, &OdeOptions::default(), exp_rhs, |s, _| {
            if s > 0.5 {
                Err(Error::PathCrossesSingularity { s })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::PathCrossesSingularity { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(OdeOptions::adaptive(0.0).validate().is_err());
    }
}
