use serde::Serialize;

use crate::error::{domain, Result};

/// Coupling exponent θ of the power nonlinearity `m^θ` and the constants it fixes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    theta: f64,
    c_theta: f64,
    nu: f64,
    effective_dim: f64,
    b0: f64,
}

impl CouplingParams {
    pub fn new(theta: f64) -> Result<Self> {
        derive_constants(theta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// θ/(θ+1), the exponent linking `Z` to the Lagrangian pressure.
    pub fn c_theta(&self) -> f64 {
        self.c_theta
    }

    /// Self-similar exponent 2/(2+θ).
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Radial dimension 4+2/θ of the boundary weight.
    pub fn effective_dim(&self) -> f64 {
        self.effective_dim
    }

    /// Indicial coefficient (1+c_θ)/c_θ at the endpoint.
    pub fn b0(&self) -> f64 {
        self.b0
    }
}

pub fn derive_constants(theta: f64) -> Result<CouplingParams> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(domain(format!("coupling exponent must be positive, got {theta}")));
    }
    let c_theta = theta / (theta + 1.0);
    Ok(CouplingParams {
        theta,
        c_theta,
        nu: 2.0 / (2.0 + theta),
        effective_dim: 4.0 + 2.0 / theta,
        b0: (1.0 + c_theta) / c_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tabulated_values() {
        let c = derive_constants(1.0).unwrap();
        assert_relative_eq!(c.c_theta(), 0.5);
        assert_relative_eq!(c.nu(), 2.0 / 3.0);
        assert_relative_eq!(c.effective_dim(), 6.0);
        assert_relative_eq!(c.b0(), 3.0);

        let c = derive_constants(2.0).unwrap();
        assert_relative_eq!(c.c_theta(), 2.0 / 3.0);
        assert_relative_eq!(c.nu(), 0.5);
        assert_relative_eq!(c.effective_dim(), 5.0);
        assert_relative_eq!(c.b0(), 2.5);

        assert_relative_eq!(derive_constants(0.5).unwrap().effective_dim(), 8.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(derive_constants(0.0).is_err());
        assert!(derive_constants(-1.0).is_err());
        assert!(derive_constants(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn structural_identities(theta in 0.1f64..10.0) {
            let c = derive_constants(theta).unwrap();
            prop_assert!((c.nu() * (2.0 + theta) - 2.0).abs() < 1e-14);
            prop_assert!((c.effective_dim() - 1.0 - (3.0 + 2.0 / theta)).abs() < 1e-12);
            prop_assert!(c.c_theta() > 0.0 && c.c_theta() < 1.0);
            prop_assert!(c.effective_dim() > 2.0);
            prop_assert!(c.b0() > 1.0);
        }
    }
}
