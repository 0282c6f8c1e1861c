//! Newton continuation of the bifurcating branch `(R_s, χ_s)` in the
//! amplitude `s = c₂`, and the asymptotic diagnostics along it.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeVector;
use crate::operator::{gram_symmetrized_eigen, Discretization, NamedConstants, FD_STEP, R_STAR};
use crate::shape::{fmt_f64, EnergyReport, Shape};

/// Amplitudes beyond this are outside the validated continuation window.
pub const CONTINUATION_WINDOW: f64 = 0.15;

/// Step-halvings tried by the line search before giving up.
const MAX_HALVINGS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lmax: usize,
    pub grid_order: usize,
    /// Newton tolerance on the Euclidean norm of the projected residual.
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub ds: f64,
    pub output: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lmax: 16,
            grid_order: 96,
            tol: 1e-10,
            max_iter: 30,
            fd_step: FD_STEP,
            s_start: -CONTINUATION_WINDOW,
            s_end: CONTINUATION_WINDOW,
            ds: 0.01,
            output: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lmax < 8 || self.lmax % 2 == 1 {
            return Err(Error::Config(format!("lmax must be even and >= 8, got {}", self.lmax)));
        }
        if self.grid_order < 2 * self.lmax {
            return Err(Error::Config(format!(
                "grid order {} must be at least 2·lmax = {}",
                self.grid_order,
                2 * self.lmax
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be positive", self.tol)));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config(format!("fd step {} must be positive", self.fd_step)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.ds.abs() > 0.0) || !self.ds.is_finite() {
            return Err(Error::Config(format!("step ds = {} must be non-zero", self.ds)));
        }
        if !self.s_start.is_finite() || !self.s_end.is_finite() {
            return Err(Error::Config("s_start and s_end must be finite".into()));
        }
        Ok(())
    }

    /// Whether the requested window leaves the validated range `|s| ≤ 0.15`.
    pub fn is_experimental(&self) -> bool {
        self.s_start.abs() > CONTINUATION_WINDOW + 1e-12 || self.s_end.abs() > CONTINUATION_WINDOW + 1e-12
    }

    /// Amplitudes from `s_start` to `s_end` in steps of `|ds|`, the last one
    /// clamped to `s_end`. Values are formed as `s_start + k·ds` so that a
    /// symmetric window hits `s = 0` exactly.
    pub fn amplitudes(&self) -> Vec<f64> {
        let span = self.s_end - self.s_start;
        let step = self.ds.abs().copysign(if span == 0.0 { 1.0 } else { span });
        let n = (span / step + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=n)
            .map(|k| {
                let s = self.s_start + k as f64 * step;
                if s.abs() < 1e-12 * self.ds.abs() {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        if (out[n] - self.s_end).abs() > 1e-9 * self.ds.abs() {
            out.push(self.s_end);
        } else {
            out[n] = self.s_end;
        }
        out
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.lmax, self.grid_order)
    }
}

/// One solved point of the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub s: f64,
    pub radius: f64,
    pub chi: ModeVector,
    pub energy: EnergyReport,
    /// Radius of the ball with the same volume.
    pub rho: f64,
    /// Mean of `F` over the sphere.
    pub mu_mean_f: f64,
    /// `max F − min F` over the grid.
    pub f_sup_variation: f64,
    pub lambda_near_zero: f64,
    pub energy_excess: f64,
    pub bw_x: f64,
    pub bw_f: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
}

impl BranchPoint {
    pub fn shape(&self) -> Shape {
        Shape::new(self.radius, self.chi.clone()).expect("converged shapes are valid")
    }
}

/// `R = R_* − s/7`, `χ = sP + s²Q` truncated to `lmax`.
pub fn initial_guess(s: f64, lmax: usize) -> (f64, ModeVector) {
    let k = NamedConstants::default();
    let chi = k
        .p_mode(lmax)
        .scaled(s)
        .add_scaled(&k.q_mode(lmax), s * s)
        .resized(lmax);
    (R_STAR - s / 7.0, chi)
}

/// Newton state: `(R, c₀, c₄, …, c_lmax)` with `c₂ = s` held fixed.
fn pack(radius: f64, chi: &ModeVector) -> DVector<f64> {
    let n = chi.len();
    let mut x = DVector::zeros(n);
    x[0] = radius;
    x[1] = chi.get(0);
    for k in 2..n {
        x[k] = chi.get(2 * k);
    }
    x
}

fn unpack(x: &DVector<f64>, s: f64, lmax: usize) -> (f64, ModeVector) {
    let mut chi = ModeVector::zeros(lmax);
    chi.set(0, x[1]);
    chi.set(2, s);
    for k in 2..x.len() {
        chi.set(2 * k, x[k]);
    }
    (x[0], chi)
}

fn residual_at(disc: &Discretization, x: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
    let (r, chi) = unpack(x, s, disc.lmax());
    if !(r > 0.0) {
        return Err(Error::Domain(format!("base radius {r} left the domain")));
    }
    Ok(DVector::from_column_slice(disc.residual(r, &chi)?.as_slice()))
}

/// Solves `Φ(R, χ) = 0` with `c₂ = s` from the given guess.
pub fn newton_solve(
    s: f64,
    guess: (f64, ModeVector),
    config: &SolverConfig,
    disc: &Discretization,
) -> Result<BranchPoint> {
    let lmax = disc.lmax();
    if s == 0.0 {
        return finish_point(s, R_STAR, ModeVector::zeros(lmax), 0, 0.0, config, disc);
    }
    let (r0, chi0) = guess;
    let mut chi0 = chi0.resized(lmax);
    chi0.set(2, s);
    Shape::new(r0, chi0.clone())?;
    let mut x = pack(r0, &chi0);
    let mut f = residual_at(disc, &x, s)?;
    let mut norm = f.norm();
    let mut trace = vec![norm];
    let mut iters = 0;
    while norm > config.tol {
        if iters == config.max_iter {
            return Err(Error::Divergence {
                s,
                iterations: iters,
                trace,
            });
        }
        iters += 1;
        let (_, chi) = unpack(&x, s, lmax);
        let h = config.fd_step * chi.norm().max(1.0);
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (residual_at(disc, &xp, s)? - residual_at(disc, &xm, s)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac.lu().solve(&(-&f)).ok_or_else(|| Error::Divergence {
            s,
            iterations: iters,
            trace: trace.clone(),
        })?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + alpha * &step;
            match residual_at(disc, &trial, s) {
                Ok(ft) if ft.norm() < norm || ft.norm() <= config.tol => {
                    accepted = Some((trial, ft));
                    break;
                }
                Ok(_) | Err(Error::DegenerateShape { .. }) | Err(Error::Domain(_)) => alpha *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((xn, fn_)) = accepted else {
            return Err(Error::Divergence {
                s,
                iterations: iters,
                trace,
            });
        };
        x = xn;
        f = fn_;
        norm = f.norm();
        trace.push(norm);
    }
    let (r, chi) = unpack(&x, s, lmax);
    finish_point(s, r, chi, iters, norm, config, disc)
}

fn finish_point(
    s: f64,
    radius: f64,
    chi: ModeVector,
    newton_iters: usize,
    final_residual: f64,
    config: &SolverConfig,
    disc: &Discretization,
) -> Result<BranchPoint> {
    let shape = Shape::new(radius, chi.clone())?;
    let energy = disc.energy_report(&shape);
    let field = disc.full_operator(&shape);
    let jac = disc.linearization_matrix(radius, &chi, config.fd_step)?;
    let lambda_near_zero = near_zero_eigenvalue(&jac, &chi.gram_diagonal());
    let mut point = BranchPoint {
        s,
        radius,
        chi,
        rho: energy.equivalent_radius(),
        energy,
        mu_mean_f: field.sphere_mean(disc.grid()),
        f_sup_variation: field.sup_variation(),
        lambda_near_zero,
        energy_excess: 0.0,
        bw_x: 0.0,
        bw_f: 0.0,
        newton_iters,
        final_residual,
    };
    point.energy_excess = energy_excess(&point);
    let (x, f) = bohr_wheeler_coords(&point);
    point.bw_x = x;
    point.bw_f = f;
    Ok(point)
}

/// Smallest-magnitude eigenvalue of the generalized problem
/// `sym(G·M) v = λ G v`, with `G` the diagonal Legendre Gram matrix.
pub fn near_zero_eigenvalue(jac: &DMatrix<f64>, gram: &[f64]) -> f64 {
    gram_symmetrized_eigen(jac, gram)
        .into_iter()
        .map(|p| p.1)
        .min_by(|x, y| x.abs().total_cmp(&y.abs()))
        .unwrap_or(f64::NAN)
}

/// Outcome of a continuation run.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub points: Vec<BranchPoint>,
    /// First failure, if the march stopped early.
    pub failure: Option<Error>,
}

impl BranchTrace {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Marches `s` from `s_start` to `s_end`, warm-starting each solve from the
/// previous point shifted by the asymptotic increment.
pub fn trace_branch(config: &SolverConfig) -> Result<BranchTrace> {
    config.validate()?;
    let disc = config.discretization()?;
    Ok(trace_branch_with(config, &disc))
}

pub fn trace_branch_with(config: &SolverConfig, disc: &Discretization) -> BranchTrace {
    let lmax = disc.lmax();
    let mut points: Vec<BranchPoint> = Vec::new();
    for s in config.amplitudes() {
        let guess = match points.last() {
            Some(prev) => {
                let (r1, c1) = initial_guess(s, lmax);
                let (r0, c0) = initial_guess(prev.s, lmax);
                (prev.radius + (r1 - r0), prev.chi.add_scaled(&c1, 1.0).add_scaled(&c0, -1.0))
            }
            None => initial_guess(s, lmax),
        };
        match newton_solve(s, guess, config, disc) {
            Ok(p) => points.push(p),
            Err(e) => {
                return BranchTrace {
                    points,
                    failure: Some(e),
                }
            }
        }
    }
    BranchTrace { points, failure: None }
}

/// `I[Ω] − I[B_ρ]` with `ρ` the equal-volume radius.
pub fn energy_excess(point: &BranchPoint) -> f64 {
    let rho = point.rho;
    let ball = 4.0 * PI * rho * rho + 16.0 * PI * PI / 15.0 * rho.powi(5);
    point.energy.total - ball
}

/// `(x, f) = ((4π/30)ρ³, excess / (4πρ²))`.
pub fn bohr_wheeler_coords(point: &BranchPoint) -> (f64, f64) {
    let rho = point.rho;
    (4.0 * PI / 30.0 * rho.powi(3), point.energy_excess / (4.0 * PI * rho * rho))
}

/// A fitted coefficient with the RMS residual of its fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitValue {
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsFit {
    pub slope_r: FitValue,
    pub slope_vol: FitValue,
    pub slope_lambda: FitValue,
    pub cubic_energy: FitValue,
    pub c4_quadratic: FitValue,
    pub c0_quadratic: FitValue,
    pub bw_ratio: FitValue,
}

/// Least-squares fit of `y ≈ Σ_k a_k s^k` over the given powers; returns the
/// coefficient of `s^powers[target]` and the RMS residual.
fn power_fit(s: &[f64], y: &[f64], powers: &[i32], target: usize) -> Result<FitValue> {
    if s.len() < powers.len() + 1 {
        return Err(Error::Fit(format!(
            "{} points cannot determine {} coefficients",
            s.len(),
            powers.len()
        )));
    }
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a = DMatrix::from_fn(s.len(), powers.len(), |i, j| (s[i] / scale).powi(powers[j]));
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let res = &a * &coef - &b;
    Ok(FitValue {
        value: coef[target] / scale.powi(powers[target]),
        residual: (res.norm_squared() / s.len() as f64).sqrt(),
    })
}

/// Polynomial fits in `s` of the branch quantities.
pub fn fit_asymptotics(branch: &[BranchPoint]) -> Result<AsymptoticsFit> {
    if branch.len() < 7 {
        return Err(Error::Fit(format!("need at least 7 points, got {}", branch.len())));
    }
    if !branch.iter().any(|p| p.s > 0.0) || !branch.iter().any(|p| p.s < 0.0) {
        return Err(Error::Fit("points must span both signs of s".into()));
    }
    let s: Vec<f64> = branch.iter().map(|p| p.s).collect();
    let col = |f: &dyn Fn(&BranchPoint) -> f64| -> Vec<f64> { branch.iter().map(f).collect() };
    let odd_powers = [1, 2, 3, 4, 5];
    let quad_powers = [2, 3, 4, 5, 6];
    let cubic_powers = [3, 4, 5, 6, 7];

    let slope_r = power_fit(&s, &col(&|p| p.radius - R_STAR), &odd_powers, 0)?;
    let slope_vol = power_fit(&s, &col(&|p| p.energy.volume - 10.0), &odd_powers, 0)?;
    let slope_lambda = power_fit(&s, &col(&|p| p.lambda_near_zero), &odd_powers, 0)?;
    let cubic_energy = power_fit(&s, &col(&|p| p.energy_excess), &cubic_powers, 0)?;
    let c4_quadratic = power_fit(&s, &col(&|p| p.chi.get(4)), &quad_powers, 0)?;
    let c0_quadratic = power_fit(&s, &col(&|p| p.chi.get(0)), &quad_powers, 0)?;

    let nonzero: Vec<&BranchPoint> = branch.iter().filter(|p| p.s != 0.0).collect();
    let sb: Vec<f64> = nonzero.iter().map(|p| p.s).collect();
    let ratio: Vec<f64> = nonzero.iter().map(|p| p.bw_f / (1.0 - p.bw_x).powi(3)).collect();
    let bw_ratio = power_fit(&sb, &ratio, &[0, 1, 2, 3], 0)?;

    Ok(AsymptoticsFit {
        slope_r,
        slope_vol,
        slope_lambda,
        cubic_energy,
        c4_quadratic,
        c0_quadratic,
        bw_ratio,
    })
}

/// Fixed CSV header for `lmax`.
pub fn csv_header(lmax: usize) -> String {
    let mut h = String::from(
        "s,R,rho,volume,perimeter,coulomb,total_energy,mu_virial,mu_mean_F,lambda,energy_excess,bw_x,bw_f,newton_iters,residual",
    );
    for l in (0..=lmax).step_by(2) {
        let _ = write!(h, ",c{l}");
    }
    h
}

pub fn csv_row(p: &BranchPoint) -> String {
    let e = &p.energy;
    let mut row = [
        p.s,
        p.radius,
        p.rho,
        e.volume,
        e.perimeter,
        e.coulomb,
        e.total,
        e.mu_virial,
        p.mu_mean_f,
        p.lambda_near_zero,
        p.energy_excess,
        p.bw_x,
        p.bw_f,
    ]
    .iter()
    .map(|v| fmt_f64(*v))
    .collect::<Vec<_>>();
    row.push(p.newton_iters.to_string());
    row.push(fmt_f64(p.final_residual));
    for (_, c) in p.chi.iter() {
        row.push(fmt_f64(c));
    }
    row.join(",")
}

/// Header plus one row per point, newline-terminated.
pub fn branch_csv(points: &[BranchPoint], lmax: usize) -> String {
    let mut out = csv_header(lmax);
    out.push('\n');
    for p in points {
        out.push_str(&csv_row(p));
        out.push('\n');
    }
    out
}
