//! Legendre polynomials `P_0..P_lmax` with first and second derivatives.

use crate::error::{Error, Result};
use crate::modes::ModeVector;
use crate::specfun::GaussGrid;

/// Fills `p`, `dp`, `d2p` (each of length `lmax + 1`) with `P_ℓ(t)` and its
/// first two derivatives, by the three-term recurrence and its
/// derivatives. Valid on the closed interval, poles included.
pub fn legendre_all(t: f64, p: &mut [f64], dp: &mut [f64], d2p: &mut [f64]) {
    let n = p.len();
    debug_assert!(dp.len() == n && d2p.len() == n);
    if n == 0 {
        return;
    }
    p[0] = 1.0;
    dp[0] = 0.0;
    d2p[0] = 0.0;
    if n == 1 {
        return;
    }
    p[1] = t;
    dp[1] = 1.0;
    d2p[1] = 0.0;
    for l in 1..n - 1 {
        let a = (2 * l + 1) as f64;
        let b = l as f64;
        let c = (l + 1) as f64;
        p[l + 1] = (a * t * p[l] - b * p[l - 1]) / c;
        dp[l + 1] = (a * (p[l] + t * dp[l]) - b * dp[l - 1]) / c;
        d2p[l + 1] = (a * (2.0 * dp[l] + t * d2p[l]) - b * d2p[l - 1]) / c;
    }
}

/// `P_ℓ(t)` and `P'_ℓ(t)` only.
pub fn legendre_values(t: f64, p: &mut [f64], dp: &mut [f64]) {
    let n = p.len();
    if n == 0 {
        return;
    }
    p[0] = 1.0;
    dp[0] = 0.0;
    if n == 1 {
        return;
    }
    p[1] = t;
    dp[1] = 1.0;
    for l in 1..n - 1 {
        let a = (2 * l + 1) as f64;
        let b = l as f64;
        let c = (l + 1) as f64;
        p[l + 1] = (a * t * p[l] - b * p[l - 1]) / c;
        dp[l + 1] = (a * (p[l] + t * dp[l]) - b * dp[l - 1]) / c;
    }
}

/// Single `P_ℓ(t)`.
pub fn legendre_p(l: usize, t: f64) -> f64 {
    let mut p0 = 1.0;
    if l == 0 {
        return p0;
    }
    let mut p1 = t;
    for k in 1..l {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Values and derivatives of the even-degree basis on the nodes of a grid.
///
/// Storage is node-major: entry `(i, ℓ)` lives at `i * (lmax + 1) + ℓ`, all
/// degrees kept so the recurrence can be checked, but only even degrees are
/// used as a basis.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    nodes: Vec<f64>,
    values: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, grid: &GaussGrid) -> Result<Self> {
        legendre_table(lmax, grid)
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    fn idx(&self, i: usize, l: usize) -> usize {
        i * (self.lmax + 1) + l
    }

    pub fn p(&self, i: usize, l: usize) -> f64 {
        self.values[self.idx(i, l)]
    }

    pub fn dp(&self, i: usize, l: usize) -> f64 {
        self.first[self.idx(i, l)]
    }

    pub fn d2p(&self, i: usize, l: usize) -> f64 {
        self.second[self.idx(i, l)]
    }

    /// Samples of `Σ c_ℓ P_ℓ` and its first two derivatives at node `i`.
    pub fn synthesize_at(&self, i: usize, coeffs: &ModeVector) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (l, c) in coeffs.iter() {
            if l > self.lmax {
                break;
            }
            let k = self.idx(i, l);
            v += c * self.values[k];
            d1 += c * self.first[k];
            d2 += c * self.second[k];
        }
        (v, d1, d2)
    }

    /// Samples of `Σ c_ℓ P_ℓ` on every node.
    pub fn synthesize(&self, coeffs: &ModeVector) -> Vec<f64> {
        (0..self.order())
            .map(|i| self.synthesize_at(i, coeffs).0)
            .collect()
    }

    /// Largest residual of the three-term recurrence over the table.
    pub fn recurrence_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &t) in self.nodes.iter().enumerate() {
            for l in 1..self.lmax {
                let r = (l as f64 + 1.0) * self.p(i, l + 1) - (2.0 * l as f64 + 1.0) * t * self.p(i, l)
                    + l as f64 * self.p(i, l - 1);
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Tabulates `P_0..P_lmax` and their first two derivatives on the grid.
/// `lmax` must be even and at least 4.
pub fn legendre_table(lmax: usize, grid: &GaussGrid) -> Result<LegendreTable> {
    if lmax < 4 || lmax % 2 == 1 {
        return Err(Error::InvalidBasis { lmax, min: 4 });
    }
    let n = grid.order();
    let stride = lmax + 1;
    let mut values = vec![0.0; n * stride];
    let mut first = vec![0.0; n * stride];
    let mut second = vec![0.0; n * stride];
    for (i, &t) in grid.nodes().iter().enumerate() {
        let range = i * stride..(i + 1) * stride;
        legendre_all(
            t,
            &mut values[range.clone()],
            &mut first[range.clone()],
            &mut second[range],
        );
    }
    Ok(LegendreTable {
        lmax,
        nodes: grid.nodes().to_vec(),
        values,
        first,
        second,
    })
}

/// Even-degree Legendre coefficients of a sampled field:
/// `c_ℓ = (2ℓ+1)/2 · Σᵢ wᵢ f(tᵢ) P_ℓ(tᵢ)`.
pub fn project(field: &[f64], grid: &GaussGrid, table: &LegendreTable) -> Result<ModeVector> {
    if field.len() != grid.order() || table.order() != grid.order() {
        return Err(Error::Dimension {
            expected: grid.order(),
            got: field.len(),
        });
    }
    let mut out = ModeVector::zeros(table.lmax());
    let w = grid.weights();
    for l in (0..=table.lmax()).step_by(2) {
        let s: f64 = (0..field.len()).map(|i| w[i] * field[i] * table.p(i, l)).sum();
        out.set(l, 0.5 * (2 * l + 1) as f64 * s);
    }
    Ok(out)
}

/// Odd-degree content of a sampled field, `max |c_ℓ|` over odd `ℓ ≤ lmax + 1`.
/// Zero for exactly even fields on a symmetric grid.
pub fn odd_leakage(field: &[f64], grid: &GaussGrid, table: &LegendreTable) -> f64 {
    let w = grid.weights();
    let mut worst: f64 = 0.0;
    for l in (1..=table.lmax()).step_by(2) {
        let s: f64 = (0..field.len()).map(|i| w[i] * field[i] * table.p(i, l)).sum();
        worst = worst.max((0.5 * (2 * l + 1) as f64 * s).abs());
    }
    worst
}
