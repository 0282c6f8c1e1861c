//! Small-deformation models of `F_P`, `F_C`, the perimeter and the Coulomb
//! energy around a ball `φ ≡ R`, for `φ = R + t u` with `u` an even
//! axisymmetric mode vector, and step-halving ratio tests against the
//! full discretization.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::modes::ModeVector;
use crate::operator::Discretization;
use crate::shape::{self, Shape};
use crate::specfun::{funk_hecke_coulomb, legendre_table, project, GaussGrid, LegendreTable};

/// Grid samples of `u`, `|∇u|²`, `Δu`, `S[u]` and `S[u²]`, where
/// `S[f](ω) = ∫ f(ω′)/|ω − ω′| dω′`.
struct Ingredients {
    u: Vec<f64>,
    grad2: Vec<f64>,
    lap: Vec<f64>,
    su: Vec<f64>,
    su2: Vec<f64>,
}

fn single_layer_modes(c: &ModeVector) -> ModeVector {
    let mut out = c.clone();
    for (l, v) in c.iter() {
        out.set(l, v * funk_hecke_coulomb(l as i64).expect("non-negative degree"));
    }
    out
}

fn ingredients(u: &ModeVector, grid: &GaussGrid) -> Result<Ingredients> {
    // u² has degree 2·lmax; the table must resolve it exactly
    let lmax2 = (2 * u.lmax()).max(4);
    let table: LegendreTable = legendre_table(lmax2, grid)?;
    let uu = u.resized(lmax2);
    let mut lap_c = uu.clone();
    for (l, v) in uu.iter() {
        lap_c.set(l, -((l * (l + 1)) as f64) * v);
    }
    let nodes = table.nodes();
    let (mut vals, mut grad2) = (Vec::new(), Vec::new());
    for (i, &t) in nodes.iter().enumerate() {
        let (v, d1, _) = table.synthesize_at(i, &uu);
        vals.push(v);
        grad2.push((1.0 - t * t) * d1 * d1);
    }
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    let sq_modes = project(&sq, grid, &table)?;
    Ok(Ingredients {
        lap: table.synthesize(&lap_c),
        su: table.synthesize(&single_layer_modes(&uu)),
        su2: table.synthesize(&single_layer_modes(&sq_modes)),
        u: vals,
        grad2,
    })
}

/// `2/R + (t/R²)(−Δu − 2u) + (2t²/R³)(uΔu + u²)` on the grid.
pub fn local_operator_model(radius: f64, u: &ModeVector, t: f64, grid: &GaussGrid) -> Result<Vec<f64>> {
    let ing = ingredients(u, grid)?;
    let r = radius;
    Ok((0..grid.order())
        .map(|i| {
            let (v, lap) = (ing.u[i], ing.lap[i]);
            2.0 / r + t / (r * r) * (-lap - 2.0 * v) + 2.0 * t * t / r.powi(3) * (v * lap + v * v)
        })
        .collect())
}

/// `(4π/3)R² + tR(S[u] − (4π/3)u) + t²((π/3)u² − ½uS[u] + ¾S[u²])` on the grid.
pub fn potential_model(radius: f64, u: &ModeVector, t: f64, grid: &GaussGrid) -> Result<Vec<f64>> {
    let ing = ingredients(u, grid)?;
    let r = radius;
    Ok((0..grid.order())
        .map(|i| {
            let (v, su, su2) = (ing.u[i], ing.su[i], ing.su2[i]);
            4.0 * PI / 3.0 * r * r
                + t * r * (su - 4.0 * PI / 3.0 * v)
                + t * t * (PI / 3.0 * v * v - 0.5 * v * su + 0.75 * su2)
        })
        .collect())
}

fn sphere_integral(grid: &GaussGrid, f: &[f64]) -> f64 {
    2.0 * PI * grid.integrate(f)
}

/// `4πR² + 2tR∫u + t²(½∫|∇u|² + ∫u²)`.
pub fn perimeter_model(radius: f64, u: &ModeVector, t: f64, grid: &GaussGrid) -> Result<f64> {
    let ing = ingredients(u, grid)?;
    let int_u = sphere_integral(grid, &ing.u);
    let int_g = sphere_integral(grid, &ing.grad2);
    let sq: Vec<f64> = ing.u.iter().map(|v| v * v).collect();
    let int_u2 = sphere_integral(grid, &sq);
    Ok(4.0 * PI * radius * radius + 2.0 * t * radius * int_u + t * t * (0.5 * int_g + int_u2))
}

/// Third-order Coulomb model
/// `(4π)²R⁵/15 + (4π/3)R⁴t∫u + ½t²R³((4π/3)∫u² + ∫uS[u]) + t³R²(−(π/3)∫u³ + ¾∫u²S[u])`.
pub fn coulomb_model(radius: f64, u: &ModeVector, t: f64, grid: &GaussGrid) -> Result<f64> {
    let ing = ingredients(u, grid)?;
    let r = radius;
    let int = |f: &dyn Fn(usize) -> f64| sphere_integral(grid, &(0..grid.order()).map(f).collect::<Vec<_>>());
    let i1 = int(&|i| ing.u[i]);
    let i2 = int(&|i| ing.u[i] * ing.u[i]);
    let i3 = int(&|i| ing.u[i].powi(3));
    let b2 = int(&|i| ing.u[i] * ing.su[i]);
    let b3 = int(&|i| ing.u[i] * ing.u[i] * ing.su[i]);
    Ok(16.0 * PI * PI / 15.0 * r.powi(5)
        + 4.0 * PI / 3.0 * r.powi(4) * t * i1
        + 0.5 * t * t * r.powi(3) * (4.0 * PI / 3.0 * i2 + b2)
        + t.powi(3) * r * r * (-PI / 3.0 * i3 + 0.75 * b3))
}

/// Which expansion a ratio test exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expansion {
    LocalOperator,
    Potential,
    Perimeter,
    Coulomb,
}

impl Expansion {
    pub const ALL: [Expansion; 4] = [
        Expansion::LocalOperator,
        Expansion::Potential,
        Expansion::Perimeter,
        Expansion::Coulomb,
    ];

    /// Power of `t` in the remainder.
    pub fn remainder_order(self) -> i32 {
        match self {
            Expansion::LocalOperator | Expansion::Potential => 3,
            Expansion::Perimeter | Expansion::Coulomb => 4,
        }
    }

    /// Accepted band for the step-halving error ratio.
    pub fn ratio_band(self) -> (f64, f64) {
        match self.remainder_order() {
            3 => (6.0, 10.0),
            _ => (12.0, 20.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Expansion::LocalOperator => "local-operator",
            Expansion::Potential => "potential",
            Expansion::Perimeter => "perimeter",
            Expansion::Coulomb => "coulomb",
        }
    }
}

/// Remainders at `t, t/2, t/4` and the two successive ratios.
#[derive(Debug, Clone, Serialize)]
pub struct RatioTest {
    pub expansion: Expansion,
    pub steps: [f64; 3],
    pub errors: [f64; 3],
    pub ratios: [f64; 2],
}

impl RatioTest {
    pub fn passes(&self) -> bool {
        let (lo, hi) = self.expansion.ratio_band();
        self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }
}

/// Model remainder at one step: sup norm over the grid for the pointwise
/// expansions, absolute difference for the functionals.
pub fn remainder(expansion: Expansion, disc: &Discretization, radius: f64, u: &ModeVector, t: f64) -> Result<f64> {
    let grid = disc.grid();
    let shape = Shape::new(radius, u.scaled(t))?;
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(match expansion {
        Expansion::LocalOperator => {
            let f = disc.local_operator(&shape);
            sup(f.values(), &local_operator_model(radius, u, t, grid)?)
        }
        Expansion::Potential => {
            let v = disc.coulomb().potential(&shape);
            sup(v.values(), &potential_model(radius, u, t, grid)?)
        }
        Expansion::Perimeter => (shape::perimeter(&shape, grid) - perimeter_model(radius, u, t, grid)?).abs(),
        Expansion::Coulomb => {
            (disc.energy_report(&shape).coulomb - coulomb_model(radius, u, t, grid)?).abs()
        }
    })
}

/// Halves `t0` twice and reports the remainder ratios.
pub fn ratio_test(
    expansion: Expansion,
    disc: &Discretization,
    radius: f64,
    u: &ModeVector,
    t0: f64,
) -> Result<RatioTest> {
    let steps = [t0, 0.5 * t0, 0.25 * t0];
    let mut errors = [0.0; 3];
    for (e, &t) in errors.iter_mut().zip(&steps) {
        *e = remainder(expansion, disc, radius, u, t)?;
    }
    Ok(RatioTest {
        expansion,
        steps,
        errors,
        ratios: [errors[0] / errors[1], errors[1] / errors[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::R_STAR;

    #[test]
    fn models_are_exact_at_zero_step() {
        let d = Discretization::new(8, 32).unwrap();
        let u = ModeVector::from_pairs(4, &[(2, 1.0), (4, 0.3)]).unwrap();
        let g = d.grid();
        assert!(local_operator_model(1.0, &u, 0.0, g).unwrap().iter().all(|v| (v - 2.0).abs() < 1e-15));
        let ball = crate::shape::ball_reference(R_STAR).unwrap();
        assert!((coulomb_model(R_STAR, &u, 0.0, g).unwrap() - ball.coulomb).abs() < 1e-12);
        assert!((perimeter_model(R_STAR, &u, 0.0, g).unwrap() - ball.perimeter).abs() < 1e-12);
    }

    #[test]
    fn perimeter_quadratic_coefficient() {
        // ½·6·(4π/5) + 4π/5 for u = P₂
        let g = crate::specfun::gauss_legendre(32).unwrap();
        let u = ModeVector::from_pairs(2, &[(2, 1.0)]).unwrap();
        let c2 = perimeter_model(1.0, &u, 1.0, &g).unwrap() - 4.0 * PI;
        assert!((c2 - 16.0 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_potential_uses_funk_hecke() {
        let g = crate::specfun::gauss_legendre(32).unwrap();
        let u = ModeVector::from_pairs(2, &[(2, 1.0)]).unwrap();
        let a = potential_model(1.0, &u, 1e-3, &g).unwrap();
        let b = potential_model(1.0, &u, -1e-3, &g).unwrap();
        let p2 = |t: f64| 1.5 * t * t - 0.5;
        for (i, &t) in g.nodes().iter().enumerate() {
            let slope = (a[i] - b[i]) / 2e-3;
            assert!((slope - (4.0 * PI / 5.0 - 4.0 * PI / 3.0) * p2(t)).abs() < 1e-10);
        }
    }
}
