//! Complete elliptic integrals by the arithmetic–geometric mean.
//!
//! Parameter convention: `K(m) = ∫₀^{π/2} (1 − m sin²α)^{-1/2} dα`.
//! The internal entry point takes both `m` and the complementary
//! parameter `m₁ = 1 − m`, so callers that can form `m₁` without
//! cancellation (nearly coincident ring sources) keep full relative
//! accuracy in the logarithmic regime `m → 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this complementary parameter `E` switches to its logarithmic
/// expansion about `m = 1`.
const E_SERIES_SWITCH: f64 = 1e-10;

/// `K`, `E` and the AGM tail `Σ_{n≥1} 2^{n-1} c_n²` for one parameter.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Agm {
    pub k: f64,
    pub e: f64,
    /// `(1 − m/2) − E/K`; positive, computed without cancellation.
    pub tail: f64,
}

/// AGM for `K` and `E` given `m` and `m₁ = 1 − m`, with `0 ≤ m`, `0 < m₁`.
pub(crate) fn agm(m: f64, m1: f64) -> Agm {
    let mut a = 1.0;
    let mut b = m1.sqrt();
    // c_1 = (a_0 - b_0)/2 without cancellation
    let mut c = m / (2.0 * (1.0 + b));
    let mut tail = 0.0;
    let mut pow = 1.0;
    for _ in 0..64 {
        tail += pow * c * c;
        let a_next = 0.5 * (a + b);
        let b_next = (a * b).sqrt();
        a = a_next;
        b = b_next;
        if c <= 1e-17 * a {
            break;
        }
        // c_{n+1} = c_n² / (4 a_{n+1}) = c_n² / (2 (a_n + b_n))
        c = c * c / (2.0 * (a + b));
        pow *= 2.0;
    }
    let k = PI / (2.0 * a);
    let e = if m1 < E_SERIES_SWITCH {
        e_near_one(m1)
    } else {
        k * (1.0 - 0.5 * m - tail)
    };
    Agm { k, e, tail }
}

/// `E(1 − m₁)` to second order in `m₁`; the remainder is `O(m₁² ln m₁)`.
fn e_near_one(m1: f64) -> f64 {
    let lg = (4.0 / m1.sqrt()).ln();
    1.0 + 0.5 * m1 * (lg - 0.5) + 0.1875 * m1 * m1 * (lg - 13.0 / 12.0)
}

/// Complete elliptic integrals `(K(m), E(m))` for `0 ≤ m < 1`.
pub fn elliptic_ke(m: f64) -> Result<(f64, f64)> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("elliptic parameter m = {m} must be >= 0")));
    }
    if m >= 1.0 {
        return Err(Error::SingularArgument(m));
    }
    let r = agm(m, 1.0 - m);
    Ok((r.k, r.e))
}

/// `E(m)` for `0 ≤ m ≤ 1`.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!("elliptic parameter m = {m} must lie in [0, 1]")));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    Ok(agm(m, 1.0 - m).e)
}
