//! Special functions and quadrature.

mod elliptic;
mod gauss;
mod legendre;

pub(crate) use elliptic::agm;
pub use elliptic::{elliptic_e, elliptic_ke};
pub use gauss::{gauss_legendre, GaussGrid};
pub use legendre::{
    legendre_all, legendre_p, legendre_table, legendre_values, odd_leakage, project, LegendreTable,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Eigenvalue `4π/(2ℓ+1)` of the kernel `|ω − ω′|⁻¹` on degree-ℓ spherical
/// harmonics.
pub fn funk_hecke_coulomb(l: i64) -> Result<f64> {
    if l < 0 {
        return Err(Error::Domain(format!("degree {l} must be non-negative")));
    }
    Ok(4.0 * PI / (2 * l + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipliers() {
        assert!((funk_hecke_coulomb(0).unwrap() - 4.0 * PI).abs() < 1e-15);
        assert!((funk_hecke_coulomb(2).unwrap() - 0.8 * PI).abs() < 1e-15);
        assert!((funk_hecke_coulomb(4).unwrap() - 4.0 * PI / 9.0).abs() < 1e-15);
        assert!(funk_hecke_coulomb(-1).is_err());
    }

    #[test]
    fn one_dimensional_integral() {
        // ∫ P_ℓ(t)/sqrt(2(1-t)) dt with t = 1 - 2u² becomes 2∫₀¹ P_ℓ(1-2u²) du,
        // a polynomial integrand.
        let g = gauss_legendre(40).unwrap();
        for l in 0..=12usize {
            let v: f64 = g
                .mapped(0.0, 1.0)
                .map(|(u, w)| 2.0 * w * legendre_p(l, 1.0 - 2.0 * u * u))
                .sum();
            let want = 2.0 / (2 * l + 1) as f64;
            assert!((v - want).abs() < 1e-14, "l={l}");
            assert!((2.0 * PI * v - funk_hecke_coulomb(l as i64).unwrap()).abs() < 1e-13);
        }
    }
}
