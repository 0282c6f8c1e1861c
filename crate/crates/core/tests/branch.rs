use liquid_drop::branch::*;
use liquid_drop::operator::{Discretization, R_STAR};
use liquid_drop::verify;
use liquid_drop::{Error, ModeVector, Shape};

fn reference() -> (SolverConfig, Discretization) {
    let cfg = SolverConfig::default();
    let d = cfg.discretization().unwrap();
    (cfg, d)
}

fn solve(s: f64, cfg: &SolverConfig, d: &Discretization) -> BranchPoint {
    newton_solve(s, initial_guess(s, cfg.lmax), cfg, d).unwrap()
}

#[test]
fn default_window_gives_31_converged_points() {
    let (cfg, d) = reference();
    let trace = trace_branch_with(&cfg, &d);
    assert!(trace.is_complete(), "{:?}", trace.failure);
    assert_eq!(trace.points.len(), 31);
    for p in &trace.points {
        assert!(p.final_residual <= cfg.tol);
        assert_eq!(p.chi.get(2), p.s);
        let v = 4.0 * std::f64::consts::PI / 3.0 * p.rho.powi(3);
        assert!((v - p.energy.volume).abs() <= 1e-12 * p.energy.volume);
        if p.s != 0.0 {
            assert!(p.lambda_near_zero * p.s < 0.0, "s = {}", p.s);
            assert_eq!(p.energy_excess > 0.0, p.s > 0.0, "s = {}", p.s);
        }
    }
    let at = |s: f64| trace.points.iter().find(|p| (p.s - s).abs() < 1e-12).unwrap();
    // volume at s = 0.1 is about 10 − 0.1·(30/7)/R*
    assert!((at(0.1).energy.volume - (10.0 - 0.1 * 30.0 / 7.0 / R_STAR)).abs() < 0.1 * 0.1 * 2.0);
    assert!(at(-0.1).lambda_near_zero > 0.0);
    let e = at(0.1).energy_excess;
    let want = 8.0 * std::f64::consts::PI / 35.0 / R_STAR * 1e-3;
    assert!((e - want).abs() < 0.05 * want, "{e} {want}");
}

#[test]
fn converged_points_are_stationary_under_volume_normalization() {
    let (cfg, d) = reference();
    let p = solve(0.1, &cfg, &d);
    let base = p.shape();
    let v0 = p.energy.volume;
    let energy = |u: &ModeVector, t: f64| {
        let e = d.energy_report(&base.perturbed(u, t).unwrap());
        let k = (v0 / e.volume).cbrt();
        k * k * e.perimeter + k.powi(5) * e.coulomb
    };
    for l in [0, 2, 4] {
        let u = ModeVector::from_pairs(cfg.lmax, &[(l, 1.0)]).unwrap();
        let h = 1e-3;
        let d1 = (energy(&u, h) - energy(&u, -h)) / (2.0 * h);
        let d2 = (energy(&u, 0.5 * h) - energy(&u, -0.5 * h)) / h;
        let deriv = (4.0 * d2 - d1) / 3.0;
        assert!(deriv.abs() <= 10.0 * cfg.tol, "l={l}: {deriv:e}");
    }
}

#[test]
fn perturbed_guess_returns_the_same_point() {
    let (cfg, d) = reference();
    let p = solve(0.1, &cfg, &d);
    for f in [0.8, 1.2] {
        let (r, mut chi) = initial_guess(0.1, cfg.lmax);
        chi.set(4, chi.get(4) * f);
        let q = newton_solve(0.1, (r, chi), &cfg, &d).unwrap();
        assert!((q.radius - p.radius).abs() < 1e-8);
        assert!(q.chi.add_scaled(&p.chi, -1.0).max_abs() < 1e-8);
    }
}

#[test]
fn grid_refinement_leaves_radius_unchanged() {
    let (cfg, d) = reference();
    let fine = SolverConfig { grid_order: 2 * cfg.grid_order, ..cfg.clone() };
    let df = fine.discretization().unwrap();
    let a = solve(0.1, &cfg, &d);
    let b = solve(0.1, &fine, &df);
    assert!((a.radius - b.radius).abs() <= 1e-7);
}

#[test]
fn equation_holds_pointwise_once_the_tail_is_resolved() {
    // at lmax 16 the modes above the basis leave a sup-variation of ~1e-8 at
    // |s| = 0.15; at lmax 24 the grid field is flat to the Newton tolerance
    let cfg = SolverConfig { lmax: 24, grid_order: 128, ..SolverConfig::default() };
    let d = cfg.discretization().unwrap();
    for s in [-0.15, -0.1, 0.05, 0.1, 0.15] {
        let p = solve(s, &cfg, &d);
        assert!(p.f_sup_variation <= 10.0 * cfg.tol, "s={s}: {:e}", p.f_sup_variation);
        assert!((p.mu_mean_f - p.energy.mu_virial).abs() <= 10.0 * cfg.tol, "s={s}");
    }
}

#[test]
fn prolate_for_positive_amplitude() {
    let (cfg, d) = reference();
    assert!(solve(0.1, &cfg, &d).shape().is_prolate());
    let m = solve(-0.1, &cfg, &d).shape();
    assert!(m.eval_radius(1.0).0 < m.eval_radius(0.0).0);
}

#[test]
fn csv_is_deterministic() {
    let cfg = SolverConfig { s_start: -0.03, s_end: 0.03, ..SolverConfig::default() };
    let a = trace_branch(&cfg).unwrap();
    let b = trace_branch(&cfg).unwrap();
    let ca = branch_csv(&a.points, cfg.lmax);
    assert_eq!(ca, branch_csv(&b.points, cfg.lmax));
    let mut lines = ca.lines();
    assert_eq!(lines.next().unwrap(), csv_header(16));
    assert!(csv_header(16).starts_with(
        "s,R,rho,volume,perimeter,coulomb,total_energy,mu_virial,mu_mean_F,lambda,energy_excess,bw_x,bw_f,newton_iters,residual,c0,c2,c4,"
    ));
    assert_eq!(lines.count(), 7);
}

#[test]
fn one_sided_or_short_data_cannot_be_fit() {
    let cfg = SolverConfig { s_start: 0.0, s_end: 0.06, ..SolverConfig::default() };
    let t = trace_branch(&cfg).unwrap();
    assert_eq!(t.points.len(), 7);
    assert!(matches!(fit_asymptotics(&t.points), Err(Error::Fit(_))));
    assert!(matches!(fit_asymptotics(&t.points[..3]), Err(Error::Fit(_))));
}

#[test]
fn divergence_reports_trace_and_keeps_partial_branch() {
    let cfg = SolverConfig { max_iter: 1, tol: 1e-15, s_start: 0.0, s_end: 0.02, ..SolverConfig::default() };
    let t = trace_branch(&cfg).unwrap();
    assert_eq!(t.points.len(), 1);
    match t.failure {
        Some(Error::Divergence { s, iterations, trace }) => {
            assert_eq!(s, 0.01);
            assert_eq!(iterations, 1);
            assert!(!trace.is_empty());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn experimental_windows_are_flagged_but_allowed() {
    let cfg = SolverConfig { s_start: 0.2, s_end: 0.2, ..SolverConfig::default() };
    assert!(cfg.is_experimental());
    let t = trace_branch(&cfg).unwrap();
    assert!(t.is_complete());
    assert!(t.points[0].shape().is_prolate());
}

#[test]
fn random_virial_shapes_are_valid() {
    for s in verify::random_shapes(verify::VIRIAL_SEED, 5) {
        assert!(Shape::new(s.base_radius(), s.chi().clone()).is_ok());
    }
}
