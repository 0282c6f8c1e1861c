//! Axisymmetric star-shaped domains `{ |x| < φ(x/|x|) }` with an even
//! Legendre profile `φ(t) = R + Σ c_ℓ P_ℓ(t)`, `t = cos θ`, and their local
//! geometric functionals.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeVector;
use crate::specfun::{legendre_all, GaussGrid, LegendreTable};

/// Profile positivity is checked on at least this many colatitudes.
const MIN_POSITIVITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    base_radius: f64,
    chi: ModeVector,
}

impl Shape {
    /// Validated shape; see [`make_shape`].
    pub fn new(base_radius: f64, chi: ModeVector) -> Result<Self> {
        make_shape(base_radius, chi)
    }

    pub fn ball(radius: f64) -> Result<Self> {
        make_shape(radius, ModeVector::zeros(0))
    }

    /// Convenience constructor from `(ℓ, c_ℓ)` pairs.
    pub fn from_pairs(base_radius: f64, pairs: &[(usize, f64)]) -> Result<Self> {
        let lmax = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let lmax = lmax + (lmax % 2);
        make_shape(base_radius, ModeVector::from_pairs(lmax, pairs)?)
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn chi(&self) -> &ModeVector {
        &self.chi
    }

    pub fn lmax(&self) -> usize {
        self.chi.lmax()
    }

    /// `(φ, φ_t, φ_tt)` at `t`.
    pub fn eval_radius(&self, t: f64) -> (f64, f64, f64) {
        eval_radius(self, t)
    }

    /// `φ` and `φ_t` at `t` using caller-provided scratch of length `lmax + 1`.
    pub(crate) fn eval_with(&self, t: f64, p: &mut [f64], dp: &mut [f64]) -> (f64, f64) {
        crate::specfun::legendre_values(t, p, dp);
        let mut v = self.base_radius;
        let mut d = 0.0;
        for (l, c) in self.chi.iter() {
            v += c * p[l];
            d += c * dp[l];
        }
        (v, d)
    }

    /// `λ·Ω`: scales `R` and every `c_ℓ`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        make_shape(self.base_radius * factor, self.chi.scaled(factor))
    }

    /// `φ + ε·u` for a mode-space direction `u`.
    pub fn perturbed(&self, direction: &ModeVector, eps: f64) -> Result<Self> {
        make_shape(self.base_radius, self.chi.add_scaled(direction, eps))
    }

    /// Profile and derivatives on every node of a tabulated grid.
    pub fn sample(&self, table: &LegendreTable) -> ShapeSamples {
        let n = table.order();
        let mut out = ShapeSamples {
            phi: Vec::with_capacity(n),
            dphi: Vec::with_capacity(n),
            d2phi: Vec::with_capacity(n),
        };
        if self.lmax() > table.lmax() {
            return self.sample_nodes(table.nodes());
        }
        for i in 0..n {
            let (v, d1, d2) = table.synthesize_at(i, &self.chi);
            out.phi.push(self.base_radius + v);
            out.dphi.push(d1);
            out.d2phi.push(d2);
        }
        out
    }

    /// Profile and derivatives on arbitrary nodes.
    pub fn sample_nodes(&self, nodes: &[f64]) -> ShapeSamples {
        let mut out = ShapeSamples {
            phi: Vec::with_capacity(nodes.len()),
            dphi: Vec::with_capacity(nodes.len()),
            d2phi: Vec::with_capacity(nodes.len()),
        };
        for &t in nodes {
            let (v, d1, d2) = self.eval_radius(t);
            out.phi.push(v);
            out.dphi.push(d1);
            out.d2phi.push(d2);
        }
        out
    }

    /// Equal-volume ratio test: `φ(±1) > φ(0)` for elongated shapes.
    pub fn is_prolate(&self) -> bool {
        self.eval_radius(1.0).0 > self.eval_radius(0.0).0
    }

    /// Flat key/value record `{"R": …, "lmax": …, "c0": …, "c2": …}` with
    /// 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"R\": {},", fmt_f64(self.base_radius));
        let _ = write!(s, "  \"lmax\": {}", self.lmax());
        for (l, c) in self.chi.iter() {
            let _ = write!(s, ",\n  \"c{l}\": {}", fmt_f64(c));
        }
        s.push_str("\n}\n");
        s
    }

    /// Parses the format written by [`Shape::to_text`]. Missing `c_ℓ` are zero.
    pub fn from_text(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let map = value
            .as_object()
            .ok_or_else(|| Error::Parse("shape record must be an object".into()))?;
        let radius = map
            .get("R")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Parse("missing numeric key \"R\"".into()))?;
        let mut pairs = Vec::new();
        let mut max_l = 0;
        for (key, v) in map {
            if key == "R" || key == "lmax" {
                continue;
            }
            let l: usize = key
                .strip_prefix('c')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("unknown key {key:?}")))?;
            if l % 2 == 1 {
                return Err(Error::InvalidBasis { lmax: l, min: 0 });
            }
            let c = v
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("key {key:?} is not a number")))?;
            max_l = max_l.max(l);
            pairs.push((l, c));
        }
        let lmax = match map.get("lmax") {
            Some(v) => {
                let l = v
                    .as_u64()
                    .ok_or_else(|| Error::Parse("\"lmax\" must be a non-negative integer".into()))?
                    as usize;
                if l % 2 == 1 {
                    return Err(Error::InvalidBasis { lmax: l, min: 0 });
                }
                if l < max_l {
                    return Err(Error::Parse(format!("coefficient c{max_l} exceeds lmax {l}")));
                }
                l
            }
            None => max_l,
        };
        make_shape(radius, ModeVector::from_pairs(lmax, &pairs)?)
    }
}

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Validates `R > 0` and `φ > 0` on an oversampled colatitude grid
/// (poles included, at least `4·lmax` points).
pub fn make_shape(base_radius: f64, chi: ModeVector) -> Result<Shape> {
    if !(base_radius > 0.0) || !base_radius.is_finite() {
        return Err(Error::Domain(format!("base radius {base_radius} must be positive")));
    }
    if !chi.is_finite() {
        return Err(Error::Domain("shape coefficients must be finite".into()));
    }
    let shape = Shape { base_radius, chi };
    let samples = (4 * shape.lmax()).max(MIN_POSITIVITY_SAMPLES);
    let mut p = vec![0.0; shape.lmax() + 1];
    let mut dp = vec![0.0; shape.lmax() + 1];
    let mut worst = (f64::INFINITY, 0.0);
    for k in 0..=samples {
        let t = (PI * k as f64 / samples as f64).cos();
        let (v, _) = shape.eval_with(t, &mut p, &mut dp);
        if v < worst.0 {
            worst = (v, t);
        }
    }
    if !(worst.0 > 0.0) {
        return Err(Error::DegenerateShape {
            min: worst.0,
            at: worst.1,
        });
    }
    Ok(shape)
}

/// `(φ, φ_t, φ_tt)` at `t ∈ [−1, 1]`.
pub fn eval_radius(shape: &Shape, t: f64) -> (f64, f64, f64) {
    let n = shape.lmax() + 1;
    let mut p = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    legendre_all(t, &mut p, &mut d1, &mut d2);
    let mut v = shape.base_radius;
    let mut a = 0.0;
    let mut b = 0.0;
    for (l, c) in shape.chi.iter() {
        v += c * p[l];
        a += c * d1[l];
        b += c * d2[l];
    }
    (v, a, b)
}

/// Profile samples on a set of colatitude nodes.
#[derive(Debug, Clone)]
pub struct ShapeSamples {
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
}

/// Real samples of an even function of `t` on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField(Vec<f64>);

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite grid sample at node {i}")));
        }
        Ok(Self(values))
    }

    /// Checks the sample count against a grid.
    pub fn on_grid(values: Vec<f64>, grid: &GaussGrid) -> Result<Self> {
        if values.len() != grid.order() {
            return Err(Error::Dimension {
                expected: grid.order(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Area-weighted mean over `S²`.
    pub fn sphere_mean(&self, grid: &GaussGrid) -> f64 {
        0.5 * grid.integrate(&self.0)
    }

    /// `max − min` over the nodes.
    pub fn sup_variation(&self) -> f64 {
        let (lo, hi) = self
            .0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Area-weighted standard deviation over `S²`.
    pub fn sphere_std(&self, grid: &GaussGrid) -> f64 {
        let mean = self.sphere_mean(grid);
        let dev: Vec<f64> = self.0.iter().map(|v| (v - mean).powi(2)).collect();
        (0.5 * grid.integrate(&dev)).sqrt()
    }

    /// Largest asymmetry `|f(tᵢ) − f(−tᵢ)|` on a symmetric grid.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.0.len();
        (0..n / 2)
            .map(|i| (self.0[i] - self.0[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Volume, perimeter, Coulomb energy and the virial multiplier of one shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub volume: f64,
    pub perimeter: f64,
    pub coulomb: f64,
    pub total: f64,
    pub mu_virial: f64,
}

impl EnergyReport {
    pub fn from_parts(volume: f64, perimeter: f64, coulomb: f64) -> Self {
        Self {
            volume,
            perimeter,
            coulomb,
            total: perimeter + coulomb,
            mu_virial: (2.0 * perimeter / 3.0 + 5.0 * coulomb / 3.0) / volume,
        }
    }

    /// Radius of the ball with the same volume.
    pub fn equivalent_radius(&self) -> f64 {
        (3.0 * self.volume / (4.0 * PI)).cbrt()
    }

    /// Largest relative difference over the four functionals.
    pub fn max_rel_discrepancy(&self, other: &EnergyReport) -> f64 {
        [
            (self.volume, other.volume),
            (self.perimeter, other.perimeter),
            (self.coulomb, other.coulomb),
            (self.mu_virial, other.mu_virial),
        ]
        .iter()
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max)
    }
}

/// `(2π/3) Σ wᵢ φ(tᵢ)³`.
pub fn volume(shape: &Shape, grid: &GaussGrid) -> f64 {
    let s = shape.sample_nodes(grid.nodes());
    volume_from_samples(&s, grid)
}

pub(crate) fn volume_from_samples(s: &ShapeSamples, grid: &GaussGrid) -> f64 {
    let f: Vec<f64> = s.phi.iter().map(|p| p * p * p).collect();
    2.0 * PI / 3.0 * grid.integrate(&f)
}

/// `2π Σ wᵢ φ √(φ² + (1 − tᵢ²) φ_t²)`.
pub fn perimeter(shape: &Shape, grid: &GaussGrid) -> f64 {
    let s = shape.sample_nodes(grid.nodes());
    perimeter_from_samples(&s, grid)
}

pub(crate) fn perimeter_from_samples(s: &ShapeSamples, grid: &GaussGrid) -> f64 {
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let p = s.phi[i];
            let g = s.dphi[i];
            p * (p * p + (1.0 - t * t) * g * g).sqrt()
        })
        .collect();
    2.0 * PI * grid.integrate(&f)
}

/// Closed-form report for the ball of radius `R`.
pub fn ball_reference(radius: f64) -> Result<EnergyReport> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    let r = radius;
    let report = EnergyReport::from_parts(
        4.0 * PI / 3.0 * r.powi(3),
        4.0 * PI * r * r,
        16.0 * PI * PI / 15.0 * r.powi(5),
    );
    Ok(report)
}

/// Isoperimetric lower bound `(36π V²)^{1/3}` on the perimeter.
pub fn isoperimetric_bound(volume: f64) -> f64 {
    (36.0 * PI * volume * volume).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gauss_legendre;

    const R_STAR: f64 = 1.336_504_617_571_977;

    #[test]
    fn construction_and_degeneracy() {
        assert!(Shape::ball(1.0).is_ok());
        assert!(Shape::from_pairs(R_STAR, &[(2, 0.1)]).is_ok());
        let bad = Shape::from_pairs(1.0, &[(2, -3.0)]);
        assert!(matches!(bad, Err(Error::DegenerateShape { .. })), "{bad:?}");
        assert!(matches!(Shape::ball(0.0), Err(Error::Domain(_))));
        assert!(matches!(Shape::ball(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn radius_evaluation() {
        let b = Shape::ball(2.0).unwrap();
        assert_eq!(b.eval_radius(0.3), (2.0, 0.0, 0.0));
    }

    #[test]
    fn radius_evaluation_p2_p4() {
        let s = make_shape(1.0, ModeVector::from_pairs(2, &[(2, 1.0)]).unwrap());
        // 1 + P2 has min 1/2 at the equator, so it is a valid shape
        let s = s.unwrap();
        let (v, d1, d2) = s.eval_radius(0.0);
        assert!((v - 0.5).abs() < 1e-15 && d1.abs() < 1e-15 && (d2 - 3.0).abs() < 1e-14);
        let s4 = Shape::from_pairs(1.0, &[(4, 1.0)]);
        // 1 + P4 dips to 1 - 3/7 > 0
        let s4 = s4.unwrap();
        let (v, d1, d2) = s4.eval_radius(1.0);
        assert!((v - 2.0).abs() < 1e-14);
        assert!((d1 - 10.0).abs() < 1e-13);
        assert!((d2 - 45.0).abs() < 1e-12);
    }

    #[test]
    fn ball_functionals() {
        let g = gauss_legendre(24).unwrap();
        for r in [0.7, 1.0, R_STAR, 2.0] {
            let b = Shape::ball(r).unwrap();
            let refr = ball_reference(r).unwrap();
            assert!((volume(&b, &g) - refr.volume).abs() < 1e-13 * refr.volume);
            assert!((perimeter(&b, &g) - refr.perimeter).abs() < 1e-13 * refr.perimeter);
        }
        let b = Shape::ball(R_STAR).unwrap();
        assert!((volume(&b, &g) - 10.0).abs() < 1e-13);
        assert!((perimeter(&b, &g) - 22.446_611_56).abs() < 1e-7);
    }

    #[test]
    fn ball_reference_values() {
        let r1 = ball_reference(1.0).unwrap();
        assert!((r1.coulomb - 16.0 * PI * PI / 15.0).abs() < 1e-14);
        assert!((r1.coulomb - 10.527_578_5).abs() < 1e-6);
        assert!((r1.total - (4.0 * PI + 16.0 * PI * PI / 15.0)).abs() < 1e-13);
        assert!((r1.mu_virial - (2.0 + 4.0 * PI / 3.0)).abs() < 1e-13);
        let rs = ball_reference(R_STAR).unwrap();
        assert!((rs.mu_virial - 12.0 / R_STAR).abs() < 1e-13);
        assert!((rs.mu_virial - 8.978_644_6).abs() < 1e-6);
        assert!(ball_reference(0.0).is_err());
    }

    #[test]
    fn volume_of_p2_shape_against_fine_quadrature() {
        // brute force at 10x resolution on the explicit profile
        let s = Shape::from_pairs(1.0, &[(2, 0.2)]).unwrap();
        let fine = gauss_legendre(120).unwrap();
        let brute = 2.0 * PI / 3.0
            * fine.integrate_fn(|t| (1.0 + 0.2 * 0.5 * (3.0 * t * t - 1.0)).powi(3));
        let g = gauss_legendre(12).unwrap();
        assert!((volume(&s, &g) - brute).abs() < 1e-13);
        // closed form: 4π/3 + 0.04·(4π/5) + (1/3)(0.008)(8π/35)
        let closed = 4.0 * PI / 3.0 + 0.04 * 0.8 * PI + 0.008 / 3.0 * 8.0 * PI / 35.0;
        assert!((brute - closed).abs() < 1e-13);
    }

    #[test]
    fn perimeter_second_order() {
        // Per(1 + εP) = 4π + ε²(½·6·(4π/5) + 4π/5) + O(ε⁴)
        let g = gauss_legendre(64).unwrap();
        let coef = 0.5 * 6.0 * 0.8 * PI + 0.8 * PI;
        let rem = |e: f64| {
            let s = Shape::from_pairs(1.0, &[(2, e)]).unwrap();
            perimeter(&s, &g) - 4.0 * PI - coef * e * e
        };
        let r1 = rem(0.02);
        let r2 = rem(0.01);
        assert!((r1 / r2 - 16.0).abs() < 0.5, "{}", r1 / r2);
    }

    #[test]
    fn perimeter_exceeds_isoperimetric_bound() {
        let g = gauss_legendre(64).unwrap();
        for pairs in [vec![(2, 0.1)], vec![(2, -0.2), (4, 0.05)], vec![(6, 0.03)]] {
            let s = Shape::from_pairs(1.2, &pairs).unwrap();
            assert!(perimeter(&s, &g) > isoperimetric_bound(volume(&s, &g)));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let s = Shape::from_pairs(R_STAR, &[(0, -1.0 / 3.0), (2, 0.1), (4, 1e-7 / 7.0)]).unwrap();
        let text = s.to_text();
        assert!(text.contains("\"lmax\": 4"));
        let back = Shape::from_text(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn text_errors() {
        assert!(matches!(Shape::from_text("[1,2]"), Err(Error::Parse(_))));
        assert!(matches!(Shape::from_text("{\"lmax\": 2}"), Err(Error::Parse(_))));
        assert!(matches!(
            Shape::from_text("{\"R\": 1, \"c3\": 0.1}"),
            Err(Error::InvalidBasis { .. })
        ));
        assert!(matches!(
            Shape::from_text("{\"R\": 1, \"lmax\": 2, \"c4\": 0.1}"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Shape::from_text("{\"R\": 1, \"c2\": -3}"),
            Err(Error::DegenerateShape { .. })
        ));
    }
}
