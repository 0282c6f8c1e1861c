//! Reference checks of the whole pipeline: closed forms on balls, kernel
//! identities, the linearized spectrum, near-sphere expansions, and the
//! asymptotics of the computed branch.
//!
//! Each check yields one or more [`CheckRow`]s with a target, a measured
//! value and a tolerance. Tolerances are multiplied by
//! [`VerifyOptions::tol_scale`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::branch::{fit_asymptotics, trace_branch_with, BranchPoint, SolverConfig};
use crate::coulomb::{virial_defect_with, CoulombQuadrature, Parity, SINGLE_LAYER_GRADING};
use crate::error::{Error, Result};
use crate::expansions::{ratio_test, Expansion};
use crate::modes::ModeVector;
use crate::operator::{Discretization, R_STAR, SECOND_VARIATION_STEP};
use crate::shape::{ball_reference, Shape};
use crate::specfun::{gauss_legendre, legendre_p};

/// Seed of the random shapes in the virial check.
pub const VIRIAL_SEED: u64 = 0x5eed_2024;

/// The ten checks in run order.
pub const CHECKS: [&str; 10] = [
    "ball",
    "funk-hecke",
    "spectrum",
    "virial",
    "expansions",
    "second-variation",
    "transversality",
    "branch",
    "bohr-wheeler",
    "equilibrium",
];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub config: SolverConfig,
    pub tol_scale: f64,
    /// Check keys to run; all when `None`.
    pub only: Option<Vec<String>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            config: SolverConfig::default(),
            tol_scale: 1.0,
            only: None,
        }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.tol_scale > 0.0) || !self.tol_scale.is_finite() {
            return Err(Error::Config(format!("tolerance scale {} must be positive", self.tol_scale)));
        }
        if let Some(keys) = &self.only {
            if let Some(bad) = keys.iter().find(|k| !CHECKS.contains(&k.as_str())) {
                return Err(Error::Config(format!(
                    "unknown check '{bad}', expected one of {}",
                    CHECKS.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn wants(&self, key: &str) -> bool {
        self.only.as_ref().is_none_or(|k| k.iter().any(|x| x == key))
    }
}

/// One measured quantity against its target.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub criterion: usize,
    pub check: &'static str,
    pub quantity: String,
    pub target: f64,
    pub measured: f64,
    /// Deviation compared against `tol`; usually `|measured − target|`,
    /// relative where noted in `quantity`.
    pub deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
    /// Free-form findings, such as measured signs.
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// `(criterion, key, pass, rows)` for each check that ran.
    pub fn summary(&self) -> Vec<(usize, &'static str, bool, usize)> {
        let mut out: Vec<(usize, &'static str, bool, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|e| e.1 == r.check) {
                Some(e) => {
                    e.2 &= r.pass;
                    e.3 += 1;
                }
                None => out.push((r.criterion, r.check, r.pass, 1)),
            }
        }
        out
    }

    /// Fixed-width table, one line per row.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<3} {:<17} {:<44} {:>24} {:>24} {:>10} {:>10}  {}\n",
            "#", "check", "quantity", "target", "measured", "deviation", "tol", "result"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<3} {:<17} {:<44} {:>24.16e} {:>24.16e} {:>10.3e} {:>10.3e}  {}\n",
                r.criterion,
                r.check,
                r.quantity,
                r.target,
                r.measured,
                r.deviation,
                r.tol,
                if r.pass { "PASS" } else { "FAIL" }
            ));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

struct Recorder<'a> {
    report: &'a mut VerifyReport,
    scale: f64,
    criterion: usize,
    check: &'static str,
}

impl Recorder<'_> {
    fn abs(&mut self, quantity: impl Into<String>, target: f64, measured: f64, tol: f64) {
        self.push(quantity.into(), target, measured, (measured - target).abs(), tol);
    }

    fn rel(&mut self, quantity: impl Into<String>, target: f64, measured: f64, tol: f64) {
        let dev = (measured - target).abs() / target.abs().max(f64::MIN_POSITIVE);
        self.push(format!("{} (rel)", quantity.into()), target, measured, dev, tol);
    }

    /// A bound `measured ≤ tol` with target zero.
    fn bound(&mut self, quantity: impl Into<String>, measured: f64, tol: f64) {
        self.push(quantity.into(), 0.0, measured, measured.abs(), tol);
    }

    /// Pass/fail fact, not scaled.
    fn flag(&mut self, quantity: impl Into<String>, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.report.rows.push(CheckRow {
            criterion: self.criterion,
            check: self.check,
            quantity: quantity.into(),
            target: 1.0,
            measured: v,
            deviation: 1.0 - v,
            tol: 0.0,
            pass: ok,
        });
    }

    fn push(&mut self, quantity: String, target: f64, measured: f64, deviation: f64, tol: f64) {
        let tol = tol * self.scale;
        self.report.rows.push(CheckRow {
            criterion: self.criterion,
            check: self.check,
            quantity,
            target,
            measured,
            deviation,
            tol,
            pass: deviation.is_finite() && deviation <= tol,
        });
    }

    fn error(&mut self, what: &str, e: &Error) {
        self.report.notes.push(format!("{}: {what} failed: {e}", self.check));
        self.flag(format!("{what} completed"), false);
    }
}

/// Runs the selected checks at the configured resolution.
pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.validate()?;
    let disc = opts.config.discretization()?;
    let mut report = VerifyReport::default();
    let mut branch: Option<(Vec<BranchPoint>, Option<Error>)> = None;
    for (k, key) in CHECKS.iter().enumerate() {
        if !opts.wants(key) {
            continue;
        }
        let mut rec = Recorder {
            report: &mut report,
            scale: opts.tol_scale,
            criterion: k + 1,
            check: key,
        };
        match *key {
            "ball" => check_ball(&mut rec, &disc),
            "funk-hecke" => check_funk_hecke(&mut rec)?,
            "spectrum" => check_spectrum(&mut rec, &disc, &opts.config),
            "virial" => check_virial(&mut rec, &disc),
            "expansions" => check_expansions(&mut rec, &disc),
            "second-variation" => check_second_variation(&mut rec, &disc),
            "transversality" => match disc.transversality_check(1e-4) {
                Ok(d) => rec.abs("d/dR <P, L_R P> coefficient at R*", -12.0 / R_STAR, d, 1e-3),
                Err(e) => rec.error("transversality", &e),
            },
            _ => {
                let (points, failure) = branch.get_or_insert_with(|| {
                    let cfg = SolverConfig {
                        s_start: -0.15,
                        s_end: 0.15,
                        ds: 0.01,
                        ..opts.config.clone()
                    };
                    let t = trace_branch_with(&cfg, &disc);
                    (t.points, t.failure)
                });
                if let Some(e) = failure {
                    rec.error("branch trace", e);
                }
                match *key {
                    "branch" => check_branch(&mut rec, points),
                    "bohr-wheeler" => check_bohr_wheeler(&mut rec, points),
                    _ => check_equilibrium(&mut rec, points),
                }
            }
        }
    }
    Ok(report)
}

fn check_ball(rec: &mut Recorder, disc: &Discretization) {
    for r in [0.7, 1.0, R_STAR] {
        let ball = Shape::ball(r).expect("positive radius");
        let exact = ball_reference(r).expect("positive radius");
        let got = disc.energy_report(&ball);
        rec.rel(format!("volume R={r:.4}"), exact.volume, got.volume, 1e-8);
        rec.rel(format!("perimeter R={r:.4}"), exact.perimeter, got.perimeter, 1e-8);
        rec.rel(format!("coulomb R={r:.4}"), exact.coulomb, got.coulomb, 1e-8);
        let v = disc.coulomb().potential(&ball);
        let want = 4.0 * PI / 3.0 * r * r;
        let worst = v.values().iter().fold(0.0f64, |m, x| m.max((x - want).abs()));
        rec.rel(format!("potential sup R={r:.4}"), want, want + worst, 1e-8);
    }
}

fn check_funk_hecke(rec: &mut Recorder) -> Result<()> {
    let grid = gauss_legendre(48)?;
    let quad = CoulombQuadrature::with_panels(&grid, 48, SINGLE_LAYER_GRADING)?;
    for l in 0..=8usize {
        let mult = 4.0 * PI / (2 * l + 1) as f64;
        let v = quad.unit_sphere_single_layer(|t| legendre_p(l, t), Parity::of_degree(l));
        let worst = grid
            .nodes()
            .iter()
            .zip(&v)
            .map(|(&t, x)| (x - mult * legendre_p(l, t)).abs())
            .fold(0.0, f64::max);
        rec.abs(format!("single layer on P{l}, sup error"), mult, mult + worst, 1e-6);
    }
    // t = 1 − 2u² turns the 1/√(2(1−t)) weight into 2du
    let g = gauss_legendre(24)?;
    for l in 0..=8usize {
        let line: f64 = g.mapped(0.0, 1.0).map(|(u, w)| 2.0 * w * legendre_p(l, 1.0 - 2.0 * u * u)).sum();
        rec.abs(format!("line integral P{l}"), 2.0 / (2 * l + 1) as f64, line, 1e-10);
    }
    Ok(())
}

fn check_spectrum(rec: &mut Recorder, disc: &Discretization, cfg: &SolverConfig) {
    for r in [1.0, R_STAR] {
        match disc.spectrum(r, cfg.fd_step) {
            Ok(rows) => {
                for row in rows.iter().filter(|row| row.l <= 6) {
                    let tol = if row.l == 2 && r == R_STAR { 1e-6 } else { 1e-5 };
                    rec.abs(format!("eigenvalue l={} R={r:.4}", row.l), row.analytic, row.numeric, tol);
                }
            }
            Err(e) => rec.error("spectrum", &e),
        }
    }
}

/// Five valid random shapes from a fixed seed.
pub fn random_shapes(seed: u64, count: usize) -> Vec<Shape> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r: f64 = rng.random_range(0.8..1.5);
        let mut chi = ModeVector::zeros(8);
        for l in (2..=8).step_by(2) {
            chi.set(l, rng.random_range(-0.25..0.25) * r / l as f64);
        }
        if let Ok(s) = Shape::new(r, chi) {
            out.push(s);
        }
    }
    out
}

fn check_virial(rec: &mut Recorder, disc: &Discretization) {
    for (k, s) in random_shapes(VIRIAL_SEED, 5).iter().enumerate() {
        let d = virial_defect_with(disc.coulomb(), s);
        rec.bound(format!("virial defect, shape {k}"), d, 1e-6);
    }
}

fn check_expansions(rec: &mut Recorder, disc: &Discretization) {
    let dirs = [
        ("P2", ModeVector::from_pairs(4, &[(2, 1.0)]).expect("even")),
        ("P4", ModeVector::from_pairs(4, &[(4, 1.0)]).expect("even")),
    ];
    for e in Expansion::ALL {
        let (lo, hi) = e.ratio_band();
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (name, u) in &dirs {
            match ratio_test(e, disc, R_STAR, u, 1e-2) {
                Ok(t) => {
                    for (j, r) in t.ratios.iter().enumerate() {
                        rec.abs(format!("{} u={name} ratio {}", e.name(), j + 1), mid, *r, half);
                    }
                }
                Err(err) => rec.error(e.name(), &err),
            }
        }
    }
}

fn check_second_variation(rec: &mut Recorder, disc: &Discretization) {
    let field = match disc.second_variation_pp(R_STAR, SECOND_VARIATION_STEP) {
        Ok(f) => f,
        Err(e) => return rec.error("second variation", &e),
    };
    let sup = |c: f64| {
        disc.grid()
            .nodes()
            .iter()
            .zip(field.values())
            .map(|(&t, v)| {
                let want = -24.0 / R_STAR * (12.0 / 35.0 * legendre_p(4, t) + legendre_p(2, t) / 7.0 + c);
                (v - want).abs()
            })
            .fold(0.0, f64::max)
    };
    let (minus, plus) = (sup(-0.2), sup(0.2));
    rec.bound("sup error vs constant -1/5", minus, 1e-4);
    let sign = if minus < plus { "-1/5" } else { "+1/5" };
    rec.report.notes.push(format!(
        "second-variation: constant term measured as {sign} (sup error {minus:.3e} for -1/5, {plus:.3e} for +1/5)"
    ));
}

fn check_branch(rec: &mut Recorder, points: &[BranchPoint]) {
    let fit = match fit_asymptotics(points) {
        Ok(f) => f,
        Err(e) => return rec.error("fit", &e),
    };
    let inv = 1.0 / R_STAR;
    rec.abs("slope_R", -1.0 / 7.0, fit.slope_r.value, 2e-3);
    rec.rel("slope_vol", -30.0 / 7.0 * inv, fit.slope_vol.value, 1e-2);
    rec.rel("slope_lambda", -12.0 / 7.0 * inv, fit.slope_lambda.value, 1e-2);
    rec.rel("cubic_energy", 8.0 * PI / 35.0 * inv, fit.cubic_energy.value, 2e-2);
    rec.rel("c4_quadratic", 216.0 / 595.0 * inv, fit.c4_quadratic.value, 1e-2);
    rec.rel("|c0_quadratic|", 2.0 / 15.0 * inv, fit.c0_quadratic.value.abs(), 2e-2);
    let sign = if fit.c0_quadratic.value < 0.0 { "negative" } else { "positive" };
    rec.report.notes.push(format!(
        "branch: c0 quadratic coefficient {:.10e} is {sign}; fit residuals R {:.1e}, vol {:.1e}, lambda {:.1e}, energy {:.1e}, c4 {:.1e}, c0 {:.1e}",
        fit.c0_quadratic.value,
        fit.slope_r.residual,
        fit.slope_vol.residual,
        fit.slope_lambda.residual,
        fit.cubic_energy.residual,
        fit.c4_quadratic.residual,
        fit.c0_quadratic.residual
    ));
}

fn check_bohr_wheeler(rec: &mut Recorder, points: &[BranchPoint]) {
    match fit_asymptotics(points) {
        Ok(fit) => {
            rec.rel("f/(1-x)^3 at s -> 0", 98.0 / 135.0, fit.bw_ratio.value, 3e-2);
        }
        Err(e) => rec.error("fit", &e),
    }
}

fn check_equilibrium(rec: &mut Recorder, points: &[BranchPoint]) {
    if points.is_empty() {
        return rec.flag("at least one converged point", false);
    }
    let mut worst_var: f64 = 0.0;
    let mut worst_mu: f64 = 0.0;
    let mut shape_ok = true;
    for p in points {
        let mu = p.energy.mu_virial.abs();
        worst_var = worst_var.max(p.f_sup_variation / mu);
        worst_mu = worst_mu.max((p.mu_mean_f - p.energy.mu_virial).abs() / mu);
        if p.s != 0.0 {
            let (pole, eq) = (p.shape().eval_radius(1.0).0, p.shape().eval_radius(0.0).0);
            shape_ok &= if p.s > 0.0 { pole > eq } else { pole < eq };
        }
    }
    rec.bound("max sup-variation of F / |mu|", worst_var, 1e-8);
    rec.bound("max |mean F - mu_virial| / |mu|", worst_mu, 1e-7);
    rec.flag("prolate for s > 0, oblate for s < 0", shape_ok);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_config_error() {
        let o = VerifyOptions {
            only: Some(vec!["nope".into()]),
            ..Default::default()
        };
        assert!(matches!(run(&o), Err(Error::Config(_))));
    }

    #[test]
    fn random_shapes_are_reproducible() {
        let a = random_shapes(7, 3);
        let b = random_shapes(7, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn tight_scale_fails_cheap_check() {
        let o = VerifyOptions {
            only: Some(vec!["virial".into()]),
            tol_scale: 1e-12,
            ..Default::default()
        };
        let r = run(&o).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert!(!r.all_pass());
    }
}
