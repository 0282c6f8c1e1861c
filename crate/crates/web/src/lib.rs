//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every method returns a JSON string; the page parses it and draws on a
//! canvas. The solver runs single-threaded here, so the demo uses a coarser
//! resolution than the command-line tool.

use liquid_drop::branch::{initial_guess, newton_solve, trace_branch_with, BranchPoint, SolverConfig};
use liquid_drop::operator::{Discretization, R_STAR};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct ShapeView {
    s: f64,
    radius: f64,
    volume: f64,
    rho: f64,
    lambda: f64,
    energy_excess: f64,
    newton_iters: usize,
    prolate: bool,
    /// Meridian `(x, z)` of the solved shape, pole to pole.
    meridian: Vec<[f64; 2]>,
    /// Same for the equal-volume ball.
    ball: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct CurveView {
    s: Vec<f64>,
    volume: Vec<f64>,
    lambda: Vec<f64>,
    energy_excess: Vec<f64>,
    bw_x: Vec<f64>,
    bw_f: Vec<f64>,
    /// Reference law `(98/135)(1 − x)³` at each `bw_x`.
    bw_law: Vec<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SpectrumView {
    radius: f64,
    volume: f64,
    rows: Vec<liquid_drop::operator::SpectrumRow>,
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// Solver state shared across calls.
#[wasm_bindgen]
pub struct Demo {
    config: SolverConfig,
    disc: Discretization,
}

#[wasm_bindgen]
impl Demo {
    /// `lmax` even and at least 8, `grid ≥ 2·lmax`.
    #[wasm_bindgen(constructor)]
    pub fn new(lmax: usize, grid: usize) -> Result<Demo, JsError> {
        let config = SolverConfig {
            lmax,
            grid_order: grid,
            ..SolverConfig::default()
        };
        config.validate().map_err(err)?;
        let disc = config.discretization().map_err(err)?;
        Ok(Demo { config, disc })
    }

    /// Branch point at amplitude `s` with its meridian sampled at `n` points.
    pub fn shape(&self, s: f64, n: usize) -> Result<String, JsError> {
        let p = self.solve(s)?;
        Ok(to_json(&shape_view(&p, n.max(8))))
    }

    /// Linearized spectrum at the ball of radius `r`.
    pub fn spectrum(&self, r: f64) -> Result<String, JsError> {
        if r.is_nan() || r <= 0.0 {
            return Err(JsError::new("radius must be positive"));
        }
        let rows = self.disc.spectrum(r, self.config.fd_step).map_err(err)?;
        Ok(to_json(&SpectrumView {
            radius: r,
            volume: 4.0 * std::f64::consts::PI / 3.0 * r.powi(3),
            rows,
        }))
    }

    /// Branch on `[−s_max, s_max]` in steps `ds`, with Bohr–Wheeler
    /// coordinates.
    pub fn curve(&self, s_max: f64, ds: f64) -> Result<String, JsError> {
        let cfg = SolverConfig {
            s_start: -s_max.abs(),
            s_end: s_max.abs(),
            ds,
            ..self.config.clone()
        };
        cfg.validate().map_err(err)?;
        let t = trace_branch_with(&cfg, &self.disc);
        let pts = &t.points;
        let col = |f: fn(&BranchPoint) -> f64| pts.iter().map(f).collect::<Vec<_>>();
        Ok(to_json(&CurveView {
            s: col(|p| p.s),
            volume: col(|p| p.energy.volume),
            lambda: col(|p| p.lambda_near_zero),
            energy_excess: col(|p| p.energy_excess),
            bw_x: col(|p| p.bw_x),
            bw_f: col(|p| p.bw_f),
            bw_law: col(|p| 98.0 / 135.0 * (1.0 - p.bw_x).powi(3)),
            error: t.failure.map(|e| e.to_string()),
        }))
    }

    /// Radius of the ball of volume 10.
    pub fn r_star() -> f64 {
        R_STAR
    }
}

impl Demo {
    fn solve(&self, s: f64) -> Result<BranchPoint, JsError> {
        newton_solve(s, initial_guess(s, self.config.lmax), &self.config, &self.disc).map_err(err)
    }
}

fn shape_view(p: &BranchPoint, n: usize) -> ShapeView {
    let shape = p.shape();
    let mut meridian = Vec::with_capacity(n);
    let mut ball = Vec::with_capacity(n);
    for k in 0..n {
        let th = std::f64::consts::PI * k as f64 / (n - 1) as f64;
        let (st, ct) = th.sin_cos();
        let r = shape.eval_radius(ct).0;
        meridian.push([r * st, r * ct]);
        ball.push([p.rho * st, p.rho * ct]);
    }
    ShapeView {
        s: p.s,
        radius: p.radius,
        volume: p.energy.volume,
        rho: p.rho,
        lambda: p.lambda_near_zero,
        energy_excess: p.energy_excess,
        newton_iters: p.newton_iters,
        prolate: shape.is_prolate(),
        meridian,
        ball,
    }
}
