use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients on the even Legendre degrees `0, 2, …, lmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    lmax: usize,
    coeffs: Vec<f64>,
}

impl ModeVector {
    pub fn zeros(lmax: usize) -> Self {
        let lmax = lmax & !1;
        Self {
            lmax,
            coeffs: vec![0.0; lmax / 2 + 1],
        }
    }

    /// Builds from `(ℓ, c_ℓ)` pairs; every ℓ must be even.
    pub fn from_pairs(lmax: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        if lmax % 2 == 1 {
            return Err(Error::InvalidBasis { lmax, min: 0 });
        }
        let mut v = Self::zeros(lmax);
        for &(l, c) in pairs {
            if l % 2 == 1 || l > lmax {
                return Err(Error::InvalidBasis { lmax: l, min: 0 });
            }
            v.set(l, c);
        }
        Ok(v)
    }

    /// From the dense coefficient list `[c_0, c_2, …, c_lmax]`.
    pub fn from_dense(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "mode vector needs at least c_0");
        Self {
            lmax: 2 * (coeffs.len() - 1),
            coeffs,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Number of stored degrees, `lmax/2 + 1`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `c_ℓ`; zero for odd or out-of-range degrees.
    pub fn get(&self, l: usize) -> f64 {
        if l % 2 == 1 || l > self.lmax {
            0.0
        } else {
            self.coeffs[l / 2]
        }
    }

    /// Panics on odd or out-of-range ℓ.
    pub fn set(&mut self, l: usize, c: f64) {
        assert!(l % 2 == 0 && l <= self.lmax, "degree {l} not in even basis up to {}", self.lmax);
        self.coeffs[l / 2] = c;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `(ℓ, c_ℓ)` over the even degrees.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().enumerate().map(|(k, &c)| (2 * k, c))
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> {
        (0..=self.lmax).step_by(2)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Same coefficients, zero-padded or truncated to a new `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        for (l, c) in self.iter() {
            if l <= out.lmax {
                out.set(l, c);
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor·other`, on the larger of the two bases.
    pub fn add_scaled(&self, other: &ModeVector, factor: f64) -> Self {
        let mut out = self.resized(self.lmax.max(other.lmax));
        for (l, c) in other.iter() {
            let cur = out.get(l);
            out.set(l, cur + factor * c);
        }
        out
    }

    /// `L²(S²)` squared norms `4π/(2ℓ+1)` of the basis functions.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        self.degrees()
            .map(|l| 4.0 * std::f64::consts::PI / (2 * l + 1) as f64)
            .collect()
    }
}
