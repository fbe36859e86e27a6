use std::f64::consts::PI;

use libm::erfc;

use crate::domain::{Membership, Support, ThetaUni};
use crate::error::{Error, Result};

/// Scaled complementary error function `exp(z²)·erfc(z)`.
pub fn erfcx(z: f64) -> f64 {
    if z < 2.0 {
        return (z * z).exp() * erfc(z);
    }
    // Continued fraction  erfcx(z) = (1/√π) / (z + (1/2)/(z + 1/(z + (3/2)/(z + …))))
    // evaluated bottom-up; 80 levels converge to double precision for z ≥ 2.
    let mut tail = z;
    for k in (1..=80).rev() {
        tail = z + (k as f64 * 0.5) / tail;
    }
    1.0 / (PI.sqrt() * tail)
}

/// Normalizing constant in closed form for the exponential, truncated normal
/// and normal models.
pub fn closed_form_a(theta: &ThetaUni) -> Result<f64> {
    match theta.classify() {
        Membership::Interior => {}
        Membership::Outside => return Err(Error::DivergentIntegral),
        Membership::Boundary { order } => {
            return Err(Error::SingularLeadingCoefficient { order })
        }
    }
    let c = theta.coeffs();
    match (theta.support(), c.len()) {
        (Support::HalfLine, 1) => Ok(-1.0 / c[0]),
        (Support::HalfLine, 2) => {
            let a = -c[1];
            let z = -c[0] / (2.0 * a.sqrt());
            Ok(PI.sqrt() / (2.0 * a.sqrt()) * erfcx(z))
        }
        (Support::RealLine, 2) => {
            let a = -c[1];
            Ok((PI / a).sqrt() * (c[0] * c[0] / (4.0 * a)).exp())
        }
        (s, n) => Err(Error::UnsupportedOrder(format!(
            "no closed form for order {n} on {s:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        assert_relative_eq!(closed_form_a(&ThetaUni::half_line(&[-2.0]).unwrap()).unwrap(), 0.5);
        assert_relative_eq!(
            closed_form_a(&ThetaUni::half_line(&[0.0, -1.0]).unwrap()).unwrap(),
            PI.sqrt() / 2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            closed_form_a(&ThetaUni::real_line(&[1.0, -1.0]).unwrap()).unwrap(),
            2.275_875_794_468_747_2,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            closed_form_a(&ThetaUni::half_line(&[-1.0, -1.0]).unwrap()).unwrap(),
            0.545_641_360_765_047,
            max_relative = 1e-14
        );
        assert!(matches!(
            closed_form_a(&ThetaUni::half_line(&[0.0, 0.0, -1.0]).unwrap()),
            Err(Error::UnsupportedOrder(_))
        ));
    }

    #[test]
    fn erfcx_matches_reference() {
        // mpmath, 30 digits
        for (z, v) in [
            (-0.5, 1.952_360_489_182_557_4),
            (0.5, 0.615_690_344_192_925_9),
            (1.999_999, 0.255_395_783_107_009_4),
            (2.0, 0.255_395_676_310_505_75),
            (3.0, 0.179_001_151_181_389_96),
            (25.0, 0.022_549_572_432_641_36),
        ] {
            assert_relative_eq!(erfcx(z), v, max_relative = 2e-15);
        }
        assert_relative_eq!(erfcx(1e6), 1.0 / (1e6 * PI.sqrt()), max_relative = 1e-12);
    }
}
