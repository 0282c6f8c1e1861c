//! The equilibrium operator `F = F_P + F_C`, the bifurcation map
//! `Φ(R, χ) = R²(F(R + χ) − F(R))` and its finite-difference derivatives.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coulomb::CoulombQuadrature;
use crate::error::{Error, Result};
use crate::modes::ModeVector;
use crate::shape::{self, EnergyReport, GridField, Shape};
use crate::specfun::{gauss_legendre, legendre_table, project, GaussGrid, LegendreTable};

/// `R_* = (30/4π)^{1/3}`, the radius of the ball of volume 10.
pub const R_STAR: f64 = 1.336_504_617_571_975_7;

/// `A_c = 5(2 − 2^{2/3})/(2^{2/3} − 1)`.
pub const A_C: f64 = 3.512_071_919_596_578;

/// Default central-difference step scale for Jacobians.
pub const FD_STEP: f64 = 1e-5;

/// Step for the second difference in [`Discretization::second_variation_pp`].
/// Roundoff there scales like `ε/h²`, so the Jacobian step is far too small;
/// with Richardson extrapolation the error is near its minimum around 5e-3.
pub const SECOND_VARIATION_STEP: f64 = 5e-3;

/// Relative step-halving disagreement above which a finite difference is
/// reported as unreliable.
const FD_AGREEMENT: f64 = 1e-6;

/// Calculated constants of the bifurcation at volume 10.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedConstants {
    pub r_star: f64,
    pub a_c: f64,
}

impl Default for NamedConstants {
    fn default() -> Self {
        Self {
            r_star: R_STAR,
            a_c: A_C,
        }
    }
}

impl NamedConstants {
    /// The kernel direction `P = P₂`.
    pub fn p_mode(&self, lmax: usize) -> ModeVector {
        ModeVector::from_pairs(lmax.max(2) & !1, &[(2, 1.0)]).expect("even degree")
    }

    /// Second-order shape correction `Q = a P₄ + b` with
    /// `a = (6³/(17·35)) R_*⁻¹` and `b = −(2/15) R_*⁻¹`.
    pub fn q_mode(&self, lmax: usize) -> ModeVector {
        ModeVector::from_pairs(
            lmax.max(4) & !1,
            &[(4, 216.0 / 595.0 / self.r_star), (0, -2.0 / 15.0 / self.r_star)],
        )
        .expect("even degrees")
    }
}

/// Grid, Legendre table and Coulomb panels for one resolution.
#[derive(Debug, Clone)]
pub struct Discretization {
    lmax: usize,
    table: LegendreTable,
    coulomb: CoulombQuadrature,
}

impl Discretization {
    pub fn new(lmax: usize, grid_order: usize) -> Result<Self> {
        let grid = gauss_legendre(grid_order)?;
        Self::from_grid(lmax, &grid)
    }

    pub fn from_grid(lmax: usize, grid: &GaussGrid) -> Result<Self> {
        let table = legendre_table(lmax, grid)?;
        Ok(Self {
            lmax,
            table,
            coulomb: CoulombQuadrature::new(grid),
        })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn grid(&self) -> &GaussGrid {
        self.coulomb.grid()
    }

    pub fn table(&self) -> &LegendreTable {
        &self.table
    }

    pub fn coulomb(&self) -> &CoulombQuadrature {
        &self.coulomb
    }

    /// Pointwise `F_P` on the nodes.
    pub fn local_operator(&self, shape: &Shape) -> GridField {
        GridField::new(self.local_values(shape)).expect("finite on valid shapes")
    }

    fn local_values(&self, shape: &Shape) -> Vec<f64> {
        let s = shape.sample(&self.table);
        self.grid()
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &t)| local_at(t, s.phi[i], s.dphi[i], s.d2phi[i]))
            .collect()
    }

    /// `F = F_P + V` on the nodes.
    pub fn full_operator(&self, shape: &Shape) -> GridField {
        GridField::new(self.full_values(shape)).expect("finite on valid shapes")
    }

    fn full_values(&self, shape: &Shape) -> Vec<f64> {
        let s = shape.sample(&self.table);
        let v = self.coulomb.potential_values(shape, &s);
        self.grid()
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &t)| local_at(t, s.phi[i], s.dphi[i], s.d2phi[i]) + v[i])
            .collect()
    }

    /// `R²(F(R + χ) − F(R))` on the nodes, unprojected. `F(R)` is evaluated
    /// numerically on the same grid, so `χ = 0` gives exact zeros.
    pub fn residual_field(&self, radius: f64, chi: &ModeVector) -> Result<Vec<f64>> {
        let deformed = Shape::new(radius, chi.clone())?;
        let ball = Shape::new(radius, ModeVector::zeros(chi.lmax()))?;
        let f1 = self.full_values(&deformed);
        let f0 = self.full_values(&ball);
        let r2 = radius * radius;
        Ok(f1.iter().zip(&f0).map(|(a, b)| r2 * (a - b)).collect())
    }

    /// Even-mode projection of `Φ(R, χ)` onto degrees `0..=lmax`.
    pub fn residual(&self, radius: f64, chi: &ModeVector) -> Result<ModeVector> {
        let field = self.residual_field(radius, chi)?;
        project(&field, self.grid(), &self.table)
    }

    /// Volume, perimeter, Coulomb energy and virial multiplier.
    pub fn energy_report(&self, shape: &Shape) -> EnergyReport {
        let s = shape.sample(&self.table);
        let v = self.coulomb.potential_values(shape, &s);
        let grid = self.grid();
        EnergyReport::from_parts(
            shape::volume_from_samples(&s, grid),
            shape::perimeter_from_samples(&s, grid),
            crate::coulomb::energy_from_potential(&s, &v, grid),
        )
    }

    pub fn mu_virial(&self, shape: &Shape) -> f64 {
        self.energy_report(shape).mu_virial
    }

    /// Central-difference Jacobian of the projected residual in mode space
    /// at fixed `R`. Column `k` is the derivative along `P_{2k}`.
    pub fn linearization_matrix(&self, radius: f64, chi: &ModeVector, fd_step: f64) -> Result<DMatrix<f64>> {
        if !(fd_step > 0.0) {
            return Err(Error::Domain(format!("finite-difference step {fd_step} must be positive")));
        }
        let base = chi.resized(self.lmax);
        let h = fd_step * base.norm().max(1.0);
        let full = self.jacobian_columns(radius, &base, h)?;
        let half = self.jacobian_columns(radius, &base, 0.5 * h)?;
        let scale = full.amax().max(1.0);
        let disagreement = (&full - &half).amax() / scale;
        if disagreement > FD_AGREEMENT {
            return Err(Error::FdStep { step: h, disagreement });
        }
        Ok(half)
    }

    fn jacobian_columns(&self, radius: f64, chi: &ModeVector, h: f64) -> Result<DMatrix<f64>> {
        let n = chi.len();
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut e = ModeVector::zeros(chi.lmax());
            e.set(2 * k, 1.0);
            let plus = self.residual(radius, &chi.add_scaled(&e, h))?;
            let minus = self.residual(radius, &chi.add_scaled(&e, -h))?;
            for (j, (a, b)) in plus.as_slice().iter().zip(minus.as_slice()).enumerate() {
                jac[(j, k)] = (a - b) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `D²_χΦ(R, 0)[P, P]` on the nodes: second central difference,
    /// Richardson-extrapolated from steps `h` and `h/2`.
    pub fn second_variation_pp(&self, radius: f64, fd_step: f64) -> Result<GridField> {
        if !(fd_step > 0.0) {
            return Err(Error::Domain(format!("finite-difference step {fd_step} must be positive")));
        }
        let second = |h: f64| -> Result<Vec<f64>> {
            let p = NamedConstants::default().p_mode(self.lmax).scaled(h);
            let plus = self.residual_field(radius, &p)?;
            let minus = self.residual_field(radius, &p.scaled(-1.0))?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a + b) / (h * h)).collect())
        };
        let coarse = second(fd_step)?;
        let fine = second(0.5 * fd_step)?;
        let scale = fine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let disagreement = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        // the two steps differ by O(h²); a large gap means h is outside the
        // asymptotic range
        if disagreement > 1e-2 {
            return Err(Error::FdStep {
                step: fd_step,
                disagreement,
            });
        }
        let extrapolated = coarse.iter().zip(&fine).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        GridField::new(extrapolated)
    }

    /// `d/dR` of the `P₂` coefficient of `L_R P` at `R_*`, by central
    /// differences in `R` with step `fd_step`.
    pub fn transversality_check(&self, fd_step: f64) -> Result<f64> {
        if !(fd_step > 0.0) {
            return Err(Error::Domain(format!("finite-difference step {fd_step} must be positive")));
        }
        let zero = ModeVector::zeros(self.lmax);
        let lp = |r: f64| -> Result<f64> { Ok(self.linearization_matrix(r, &zero, FD_STEP)?[(1, 1)]) };
        let (hi, lo) = (lp(R_STAR + fd_step)?, lp(R_STAR - fd_step)?);
        Ok((hi - lo) / (2.0 * fd_step))
    }
}

/// `F_P` at one node from `φ`, `φ_t`, `φ_tt`:
/// `−d/dt[(1−t²)φ_t/(φW)] + 3/W − W/φ²` with `W = √(φ² + (1−t²)φ_t²)`.
#[inline]
fn local_at(t: f64, phi: f64, d1: f64, d2: f64) -> f64 {
    let st2 = 1.0 - t * t;
    let w = (phi * phi + st2 * d1 * d1).sqrt();
    let g = st2 * d1;
    let dg = -2.0 * t * d1 + st2 * d2;
    let dw = (phi * d1 - t * d1 * d1 + st2 * d1 * d2) / w;
    let h = phi * w;
    let dh = d1 * w + phi * dw;
    -(dg * h - g * dh) / (h * h) + 3.0 / w - w / (phi * phi)
}

/// Pointwise `F_P(φ)` using a table of the shape's degree.
pub fn local_operator(shape: &Shape, grid: &GaussGrid) -> GridField {
    let s = shape.sample_nodes(grid.nodes());
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| local_at(t, s.phi[i], s.dphi[i], s.d2phi[i]))
        .collect();
    GridField::new(values).expect("finite on valid shapes")
}

/// `F(φ) = F_P(φ) + V_Ω(φ(t)ω)` on the grid.
pub fn full_operator(shape: &Shape, grid: &GaussGrid) -> GridField {
    let local = local_operator(shape, grid);
    let v = crate::coulomb::surface_potential(shape, grid);
    let values = local.values().iter().zip(v.values()).map(|(a, b)| a + b).collect();
    GridField::new(values).expect("finite on valid shapes")
}

/// Projected `Φ(R, χ)` on a fresh discretization of degree `chi.lmax()`.
pub fn residual(radius: f64, chi: &ModeVector, grid: &GaussGrid) -> Result<ModeVector> {
    Discretization::from_grid(chi.lmax().max(4), grid)?.residual(radius, &chi.resized(chi.lmax().max(4)))
}

/// `μ = (⅔ Per + ⁵⁄₃ D)/|Ω|`.
pub fn mu_virial(shape: &Shape, grid: &GaussGrid) -> f64 {
    EnergyReport::from_parts(
        shape::volume(shape, grid),
        shape::perimeter(shape, grid),
        crate::coulomb::coulomb_energy(shape, grid),
    )
    .mu_virial
}

/// Eigenpairs of `sym(G^{1/2} M G^{-1/2})`, which has the spectrum of the
/// generalized problem `sym(G·M) v = λ G v` for diagonal Gram `G`. Each
/// eigenvalue is tagged with the degree carrying most of its eigenvector.
pub fn gram_symmetrized_eigen(jac: &DMatrix<f64>, gram: &[f64]) -> Vec<(usize, f64)> {
    let n = jac.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| jac[(i, j)] * (gram[i] / gram[j]).sqrt());
    let sym = (&a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut out: Vec<(usize, f64)> = (0..n)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (2 * v.iamax(), eig.eigenvalues[k])
        })
        .collect();
    out.sort_by_key(|p| p.0);
    out
}

/// One row of the linearization spectrum at a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub l: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl SpectrumRow {
    pub fn abs_diff(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }
}

impl Discretization {
    /// Numeric eigenvalues of `D_χΦ(R, 0)` on every even degree, next to
    /// the closed form.
    pub fn spectrum(&self, radius: f64, fd_step: f64) -> Result<Vec<SpectrumRow>> {
        let zero = ModeVector::zeros(self.lmax);
        let jac = self.linearization_matrix(radius, &zero, fd_step)?;
        Ok(gram_symmetrized_eigen(&jac, &zero.gram_diagonal())
            .into_iter()
            .map(|(l, numeric)| SpectrumRow {
                l,
                analytic: analytic_eigenvalue(l, radius),
                numeric,
            })
            .collect())
    }
}

/// Eigenvalue `ℓ(ℓ+1) − 2 − (4π/3)R³(1 − 3/(2ℓ+1))` of `D_χΦ(R, 0)` on
/// degree-ℓ harmonics.
pub fn analytic_eigenvalue(l: usize, radius: f64) -> f64 {
    let lf = l as f64;
    lf * (lf + 1.0) - 2.0 - 4.0 * PI / 3.0 * radius.powi(3) * (1.0 - 3.0 / (2.0 * lf + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::legendre_p;

    fn disc() -> Discretization {
        Discretization::new(8, 32).unwrap()
    }

    #[test]
    fn constants() {
        assert!((4.0 * PI / 3.0 * R_STAR.powi(3) - 10.0).abs() < 1e-14);
        assert!((R_STAR - (30.0 / (4.0 * PI)).cbrt()).abs() < 1e-15);
        let c = 2f64.powf(2.0 / 3.0);
        assert!((A_C - 5.0 * (2.0 - c) / (c - 1.0)).abs() < 1e-14);
        assert!((A_C - 3.512).abs() < 1e-3);
        let q = NamedConstants::default().q_mode(8);
        assert!((q.get(4) - 0.271_622_862_585_795).abs() < 1e-12);
        assert!((q.get(0) + 0.099_762_718_048_487).abs() < 1e-12);
    }

    #[test]
    fn analytic_eigenvalues() {
        assert!(analytic_eigenvalue(2, R_STAR).abs() < 1e-14);
        assert!((analytic_eigenvalue(4, R_STAR) - 34.0 / 3.0).abs() < 1e-13);
        assert!((analytic_eigenvalue(0, R_STAR) - 18.0).abs() < 1e-13);
        assert!((analytic_eigenvalue(2, 1.0) - (4.0 - 8.0 * PI / 15.0)).abs() < 1e-14);
        // the P₄ coefficient of Q is (12·12/35)/(34/3)
        assert!(((12.0 * 12.0 / 35.0) / analytic_eigenvalue(4, R_STAR) - 216.0 / 595.0).abs() < 1e-14);
    }

    #[test]
    fn ball_operator() {
        let d = disc();
        for r in [0.8, 1.0, R_STAR] {
            let b = Shape::ball(r).unwrap();
            for x in d.local_operator(&b).values() {
                assert!((x - 2.0 / r).abs() < 1e-13);
            }
            let mu = 2.0 / r + 4.0 * PI / 3.0 * r * r;
            for x in d.full_operator(&b).values() {
                assert!((x - mu).abs() < 1e-12 * mu);
            }
            assert!((d.mu_virial(&b) - mu).abs() < 1e-12 * mu);
        }
    }

    #[test]
    fn local_operator_first_order() {
        // F_P(R + εP) = 2/R + 4εP/R² + O(ε²)
        let g = gauss_legendre(24).unwrap();
        let r = 1.2;
        let err = |e: f64| {
            let s = Shape::from_pairs(r, &[(2, e)]).unwrap();
            local_operator(&s, &g)
                .values()
                .iter()
                .zip(g.nodes())
                .map(|(v, &t)| (v - 2.0 / r - 4.0 * e / (r * r) * legendre_p(2, t)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(1e-3) / err(5e-4);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn residual_vanishes_exactly_on_balls() {
        let d = disc();
        let z = ModeVector::zeros(8);
        for r in [0.8, 1.0, R_STAR, 1.5] {
            let res = d.residual(r, &z).unwrap();
            assert!(res.as_slice().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn residual_linear_response() {
        let d = disc();
        let e = 1e-4;
        let p = NamedConstants::default().p_mode(8).scaled(e);
        let at_one = d.residual(1.0, &p).unwrap();
        assert!((at_one.get(2) / e - (4.0 - 8.0 * PI / 15.0)).abs() < 1e-3);
        let at_star = d.residual(R_STAR, &p).unwrap();
        assert!((at_star.get(2) / e).abs() < 1e-3);
    }

    #[test]
    fn linearization_is_diagonal_at_balls() {
        let d = disc();
        let z = ModeVector::zeros(8);
        for r in [1.0, R_STAR] {
            let m = d.linearization_matrix(r, &z, FD_STEP).unwrap();
            for j in 0..m.nrows() {
                for k in 0..m.ncols() {
                    let want = if j == k { analytic_eigenvalue(2 * j, r) } else { 0.0 };
                    assert!((m[(j, k)] - want).abs() < 1e-6, "R={r} ({j},{k}) {}", m[(j, k)]);
                }
            }
        }
    }

    #[test]
    fn fd_step_errors() {
        let d = disc();
        let z = ModeVector::zeros(8);
        assert!(d.linearization_matrix(1.0, &z, 0.0).is_err());
        assert!(matches!(
            d.linearization_matrix(1.0, &z, 1e-14),
            Err(Error::FdStep { .. })
        ));
        assert!(d.linearization_matrix(1.0, &z, 0.3).is_err());
    }
}
