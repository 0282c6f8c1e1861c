//! Newtonian potential on the droplet surface and the Coulomb self-energy.
//!
//! Both the potential and the double-surface form of the energy are reduced
//! to integrals over the generating curve by integrating the azimuth in
//! closed form (complete elliptic integrals). The reduced integrands carry a
//! logarithmic singularity where the source ring meets the target ring; the
//! meridional integral is therefore split at the target colatitude and each
//! half is integrated with a Gauss rule in a graded variable
//! `θ′ = θ ± L·u^p`, which turns `δ^k log δ` into `u^{pk+p-1} log u`.

mod oracle;

pub use oracle::{coulomb_energy_oracle, coulomb_energy_oracle_with, OracleResolution};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::shape::{GridField, Shape, ShapeSamples};
use crate::specfun::{agm, gauss_legendre, GaussGrid};

/// Exponent of the graded substitution on the singular panels. The
/// potential and distance integrands vanish like `δ² log δ`, for which
/// `p = 2` converges fastest (to roundoff at 48 nodes per side).
const GRADING: i32 = 2;

/// Grading suited to a bare `log δ` singularity, as in the single-layer map.
pub const SINGLE_LAYER_GRADING: i32 = 5;

/// Smallest panel order used regardless of the target grid.
const MIN_PANEL_ORDER: usize = 48;

/// Azimuthal moments `I₀ = ∮ dψ/|x−y|` and `I₁ = ∮ cos ψ dψ/|x−y|` of two
/// coaxial rings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthalKernel {
    pub i0: f64,
    pub i1: f64,
}

/// Moments for rings through the points `(ρ, θ)` and `(ρ′, θ′)` of the
/// meridian half-plane, in polar coordinates about the origin.
pub fn azimuthal_moments(rho: f64, theta: f64, rho2: f64, theta2: f64) -> Result<AzimuthalKernel> {
    if !(rho > 0.0 && rho2 > 0.0) {
        return Err(Error::Domain(format!("ring radii must be positive, got {rho} and {rho2}")));
    }
    let pair = RingPair::new(rho, theta, rho2, theta2, theta - theta2);
    if pair.a2 == 0.0 {
        return Err(Error::SingularKernel);
    }
    let (i0, i1_minus_i0) = pair.single_layer();
    Ok(AzimuthalKernel {
        i0,
        i1: i0 + i1_minus_i0,
    })
}

/// Geometry of one source/target ring pair.
///
/// `a² = ρ² + ρ′² − 2ρρ′cos(θ−θ′)` and `b² = ρ² + ρ′² − 2ρρ′cos(θ+θ′)` are the
/// smallest and largest squared distances between the rings; both are
/// formed from half-angle sines so that `a²` keeps its relative accuracy
/// when the rings nearly coincide.
#[derive(Debug, Clone, Copy)]
struct RingPair {
    a2: f64,
    b2: f64,
    m: f64,
}

impl RingPair {
    #[inline]
    fn new(rho: f64, theta: f64, rho2: f64, theta2: f64, dtheta: f64) -> Self {
        let dr = rho - rho2;
        let pp = 4.0 * rho * rho2;
        let sm = (0.5 * dtheta).sin();
        let sp = (0.5 * (theta + theta2)).sin();
        let a2 = dr * dr + pp * sm * sm;
        let b2 = dr * dr + pp * sp * sp;
        let m = (pp * theta.sin() * theta2.sin() / b2).clamp(0.0, 1.0);
        Self { a2, b2, m }
    }

    /// `(I₀, I₁ − I₀)`. The difference is bounded as the rings meet and is
    /// formed from the AGM tail without cancellation.
    #[inline]
    fn single_layer(&self) -> (f64, f64) {
        let r = agm(self.m, self.a2 / self.b2);
        let sb = self.b2.sqrt();
        let i0 = 4.0 * r.k / sb;
        let tail_over_m = if self.m > 0.0 { r.tail / self.m } else { 0.0 };
        (i0, 8.0 * r.k / sb * (tail_over_m - 0.5))
    }

    /// `(J₀, J₁)` with `J₀ = ∮|x−y| dψ` and `J₁ = ∮ cos ψ |x−y| dψ`.
    #[inline]
    fn distance_moments(&self) -> (f64, f64) {
        let m = self.m;
        let r = agm(m, self.a2 / self.b2);
        let sb = self.b2.sqrt();
        let j0 = 4.0 * sb * r.e;
        if m == 0.0 {
            return (j0, 0.0);
        }
        // H = (1 − m/2)E − (1 − m)K, of order m² for small m
        let h_over_m = if m < 0.5 {
            r.k * (0.25 * m - (1.0 - 0.5 * m) * (r.tail / m))
        } else {
            ((1.0 - 0.5 * m) * r.e - (1.0 - m) * r.k) / m
        };
        (j0, -8.0 * sb / 3.0 * h_over_m)
    }
}

/// One source node `θ′` of a target's split panels.
#[derive(Debug, Clone, Copy)]
struct Source {
    theta: f64,
    /// `θ − θ′`, exact from the panel map.
    dtheta: f64,
    t: f64,
    s: f64,
    /// Includes the Jacobian of the graded map and `dt′ = sin θ′ dθ′`.
    weight: f64,
}

#[derive(Debug, Clone)]
struct Target {
    index: usize,
    theta: f64,
    t: f64,
    s: f64,
    sources: Vec<Source>,
}

/// Precomputed singular-panel geometry for every target node of a grid.
///
/// Only targets with `t ≥ 0` are stored; values at the mirrored nodes are
/// copied, which makes every computed field exactly even.
#[derive(Debug, Clone)]
pub struct CoulombQuadrature {
    grid: GaussGrid,
    panel_order: usize,
    targets: Vec<Target>,
}

impl CoulombQuadrature {
    /// Panel order `max(48, order/2)` per side.
    pub fn new(grid: &GaussGrid) -> Self {
        let order = (grid.order() / 2).max(MIN_PANEL_ORDER);
        Self::with_panel_order(grid, order).expect("panel order is at least 2")
    }

    pub fn with_panel_order(grid: &GaussGrid, panel_order: usize) -> Result<Self> {
        Self::with_panels(grid, panel_order, GRADING)
    }

    /// Panel order per side and exponent `p` of the graded map.
    pub fn with_panels(grid: &GaussGrid, panel_order: usize, grading: i32) -> Result<Self> {
        if grading < 1 {
            return Err(Error::Domain(format!("grading exponent {grading} must be >= 1")));
        }
        let panel = gauss_legendre(panel_order)?;
        let n = grid.order();
        let p = grading as f64;
        let mut targets = Vec::with_capacity(n - n / 2);
        for index in n / 2..n {
            let t = grid.nodes()[index];
            let theta = t.acos();
            let mut sources = Vec::with_capacity(2 * panel_order);
            // towards the pole θ′ = 0, then towards θ′ = π
            for (len, dir) in [(theta, -1.0), (PI - theta, 1.0)] {
                for (u, w) in panel.mapped(0.0, 1.0) {
                    let off = len * u.powi(grading);
                    let th = theta + dir * off;
                    let jac = len * p * u.powi(grading - 1);
                    sources.push(Source {
                        theta: th,
                        dtheta: -dir * off,
                        t: th.cos(),
                        s: th.sin(),
                        weight: w * jac * th.sin(),
                    });
                }
            }
            targets.push(Target {
                index,
                theta,
                t,
                s: theta.sin(),
                sources,
            });
        }
        Ok(Self {
            grid: grid.clone(),
            panel_order,
            targets,
        })
    }

    pub fn grid(&self) -> &GaussGrid {
        &self.grid
    }

    pub fn panel_order(&self) -> usize {
        self.panel_order
    }

    /// Evaluates `f` on each stored target and mirrors to the full grid.
    fn map_targets<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&Target) -> f64 + Sync + Send,
    {
        self.map_targets_with_parity(f, Parity::Even)
    }

    fn map_targets_with_parity<F>(&self, f: F, parity: Parity) -> Vec<f64>
    where
        F: Fn(&Target) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        let half: Vec<f64> = {
            use rayon::prelude::*;
            self.targets.par_iter().map(&f).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let half: Vec<f64> = self.targets.iter().map(&f).collect();

        let n = self.grid.order();
        let mut out = vec![0.0; n];
        for (tg, v) in self.targets.iter().zip(half) {
            out[n - 1 - tg.index] = parity.sign() * v;
            out[tg.index] = v;
        }
        out
    }

    /// Surface potential `V(φ(t)ω)` on the grid nodes, from the surface form
    /// `V(x) = ½∫ (N′·(y − x))/|x − y| φ′ dω′` with `N′ = φ′ω′ − ∇φ′`.
    pub fn potential(&self, shape: &Shape) -> PotentialField {
        let at_targets = shape.sample_nodes(self.grid.nodes());
        let values = self.potential_values(shape, &at_targets);
        PotentialField(GridField::new(values).expect("potential is finite on valid shapes"))
    }

    pub(crate) fn potential_values(&self, shape: &Shape, at: &ShapeSamples) -> Vec<f64> {
        let nl = shape.lmax() + 1;
        self.map_targets(|tg| {
            let mut p = vec![0.0; nl];
            let mut dp = vec![0.0; nl];
            let phi = at.phi[tg.index];
            let r1 = phi * tg.s;
            let z1 = phi * tg.t;
            let mut acc = 0.0;
            for src in &tg.sources {
                let (f, ft) = shape.eval_with(src.t, &mut p, &mut dp);
                let nr = src.s * (f + src.t * ft);
                let nz = src.t * f - src.s * src.s * ft;
                let r2 = f * src.s;
                let z2 = f * src.t;
                // N′·(y − x) at ψ = 0, of order δ² near the target
                let c = nr * (r2 - r1) + nz * (z2 - z1);
                let b = -nr * r1;
                let pair = RingPair::new(phi, tg.theta, f, src.theta, src.dtheta);
                let (i0, di) = pair.single_layer();
                acc += src.weight * f * (c * i0 + b * di);
            }
            0.5 * acc
        })
    }

    /// `D = −¼∬ φφ′ (N·N′) |x − y| dω dω′`, the double-surface form of the
    /// Coulomb energy, independent of the potential.
    pub fn double_surface_energy(&self, shape: &Shape) -> f64 {
        let at = shape.sample_nodes(self.grid.nodes());
        let nl = shape.lmax() + 1;
        let inner = self.map_targets(|tg| {
            let mut p = vec![0.0; nl];
            let mut dp = vec![0.0; nl];
            let phi = at.phi[tg.index];
            let ft0 = at.dphi[tg.index];
            let nr = tg.s * (phi + tg.t * ft0);
            let nz = tg.t * phi - tg.s * tg.s * ft0;
            let mut acc = 0.0;
            for src in &tg.sources {
                let (f, ft) = shape.eval_with(src.t, &mut p, &mut dp);
                let nr2 = src.s * (f + src.t * ft);
                let nz2 = src.t * f - src.s * src.s * ft;
                let pair = RingPair::new(phi, tg.theta, f, src.theta, src.dtheta);
                let (j0, j1) = pair.distance_moments();
                acc += src.weight * f * (nr * nr2 * j1 + nz * nz2 * j0);
            }
            phi * acc
        });
        -0.25 * 2.0 * PI * self.grid.integrate(&inner)
    }

    /// Single-layer map `u ↦ ∫_{S²} u(ω′)/|ω − ω′| dω′` on the unit sphere
    /// for an axisymmetric density `u(t)` of the given parity in `t`. The
    /// integrand has a bare logarithmic singularity; build the quadrature
    /// with [`SINGLE_LAYER_GRADING`] for full accuracy.
    pub fn unit_sphere_single_layer(&self, u: impl Fn(f64) -> f64 + Sync + Send, parity: Parity) -> Vec<f64> {
        self.map_targets_with_parity(|tg| {
            let mut acc = 0.0;
            for src in &tg.sources {
                let pair = RingPair::new(1.0, tg.theta, 1.0, src.theta, src.dtheta);
                let (i0, _) = pair.single_layer();
                acc += src.weight * u(src.t) * i0;
            }
            acc
        }, parity)
    }
}

/// Reflection symmetry `t ↦ −t` of an axisymmetric field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(l: usize) -> Self {
        if l % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Samples of the surface potential `V(φ(t)ω)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField(GridField);

impl PotentialField {
    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn field(&self) -> &GridField {
        &self.0
    }

    pub fn into_field(self) -> GridField {
        self.0
    }
}

/// Surface potential with the default panel order for `grid`.
pub fn surface_potential(shape: &Shape, grid: &GaussGrid) -> PotentialField {
    CoulombQuadrature::new(grid).potential(shape)
}

/// `D = (2π/5) Σ wᵢ φᵢ³ V(tᵢ)`, from `∫φ³V dω = 5D`.
pub fn coulomb_energy(shape: &Shape, grid: &GaussGrid) -> f64 {
    coulomb_energy_with(&CoulombQuadrature::new(grid), shape)
}

pub fn coulomb_energy_with(quad: &CoulombQuadrature, shape: &Shape) -> f64 {
    let at = shape.sample_nodes(quad.grid.nodes());
    let v = quad.potential_values(shape, &at);
    energy_from_potential(&at, &v, &quad.grid)
}

pub(crate) fn energy_from_potential(at: &ShapeSamples, v: &[f64], grid: &GaussGrid) -> f64 {
    0.2 * phi3_moment(at, v, grid)
}

/// `∫_{S²} φ³ V dω`.
fn phi3_moment(at: &ShapeSamples, v: &[f64], grid: &GaussGrid) -> f64 {
    let f: Vec<f64> = at.phi.iter().zip(v).map(|(p, v)| p * p * p * v).collect();
    2.0 * PI * grid.integrate(&f)
}

/// Relative violation `|∫φ³V − 5D| / 5D` of the virial identity, with `D`
/// taken from the double-surface form.
pub fn virial_defect(shape: &Shape, grid: &GaussGrid) -> f64 {
    virial_defect_with(&CoulombQuadrature::new(grid), shape)
}

pub fn virial_defect_with(quad: &CoulombQuadrature, shape: &Shape) -> f64 {
    let at = shape.sample_nodes(quad.grid.nodes());
    let v = quad.potential_values(shape, &at);
    let lhs = phi3_moment(&at, &v, &quad.grid);
    let d = quad.double_surface_energy(shape);
    ((lhs - 5.0 * d) / (5.0 * d)).abs()
}
