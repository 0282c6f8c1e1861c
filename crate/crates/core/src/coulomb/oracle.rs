//! Brute-force Coulomb energy from the volume double integral
//! `D = ½∫dω∫dω′ ∫₀^{φ(ω)}∫₀^{φ(ω′)} r²r′² / |rω − r′ω′| dr′ dr`.
//!
//! The `r′` integral is done in closed form, `r` and the relative azimuth
//! `ψ` adaptively, and `t′` on graded panels split at `t`. It shares no code
//! with the surface-potential path apart from Gauss nodes, and is meant for
//! small resolutions only.

use std::f64::consts::PI;

use crate::shape::Shape;
use crate::specfun::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResolution {
    /// Gauss order of the outer `t` rule.
    pub outer: usize,
    /// Gauss order on each side of the split `t′` rule.
    pub inner: usize,
    /// Relative tolerance of the adaptive `ψ` and `r` integrals.
    pub tol: f64,
}

impl Default for OracleResolution {
    fn default() -> Self {
        Self {
            outer: 16,
            inner: 24,
            tol: 1e-10,
        }
    }
}

/// Brute-force `D[Ω_φ]` at the default resolution.
pub fn coulomb_energy_oracle(shape: &Shape) -> f64 {
    coulomb_energy_oracle_with(shape, OracleResolution::default())
}

pub fn coulomb_energy_oracle_with(shape: &Shape, res: OracleResolution) -> f64 {
    let outer = gauss_legendre(res.outer.max(2)).expect("order >= 2");
    let inner = gauss_legendre(res.inner.max(2)).expect("order >= 2");
    let mut total = 0.0;
    for (&t, &w) in outer.nodes().iter().zip(outer.weights()) {
        let th = t.acos();
        let a = shape.eval_radius(t).0;
        let mut acc = 0.0;
        // θ′ = θ ± L u², which smooths the |θ − θ′| kink of the ψ-integral
        for (len, dir) in [(th, -1.0), (PI - th, 1.0)] {
            for (u, wu) in inner.mapped(0.0, 1.0) {
                let dth = len * u * u;
                let th2 = th + dir * dth;
                let jac = 2.0 * len * u * th2.sin();
                let b = shape.eval_radius(th2.cos()).0;
                let sm = (0.5 * dth).sin();
                let ss = th.sin() * th2.sin();
                let f = |psi: f64| {
                    let sp = (0.5 * psi).sin();
                    let om = 2.0 * sm * sm + 2.0 * ss * sp * sp;
                    radial_double_integral(a, b, om, res.tol)
                };
                // the ψ-integrand varies on the scale where the two terms of
                // 1 − c balance
                let psi0 = dth / ss.sqrt().max(1e-300);
                let breaks = geometric_breaks(0.0, psi0, PI);
                acc += wu * jac * 2.0 * adaptive(&f, &breaks, res.tol);
            }
        }
        total += w * acc;
    }
    0.5 * 2.0 * PI * total
}

/// `lo, lo + h, lo + 2h, lo + 4h, … , hi`.
fn geometric_breaks(lo: f64, h: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut x = h;
    while lo + x < hi && x > 0.0 {
        out.push(lo + x);
        x *= 2.0;
    }
    out.push(hi);
    out
}

/// `∫₀^a∫₀^b r²r′² / √(r² + r′² − 2rr′c) dr′ dr` with `om = 1 − c`.
fn radial_double_integral(a: f64, b: f64, om: f64, tol: f64) -> f64 {
    let c = 1.0 - om;
    let g = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let q = b - c * r;
        let d = (b * b - 2.0 * b * c * r + r * r).max(0.0).sqrt();
        // asinh(q/(rσ)) + asinh(c/σ) with σ = √(1 − c²), as one logarithm
        let l = if q >= 0.0 {
            ((q + d) / (r * om)).ln()
        } else {
            (r * (1.0 + c) / (d - q)).ln()
        };
        let inner = (0.5 * q + 2.0 * c * r) * d - 1.5 * c * r * r + 0.5 * r * r * (3.0 * c * c - 1.0) * l;
        r * r * inner
    };
    let mut breaks = vec![0.0, a];
    if c > 0.0 && om < 0.5 {
        // near-coincidence layer around r = b of width b·√(2(1 − c))
        let width = b * (2.0 * om).sqrt();
        let mut x = width;
        while x < b + a {
            for y in [b - x, b + x] {
                if y > 0.0 && y < a {
                    breaks.push(y);
                }
            }
            x *= 2.0;
        }
        if b < a {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    adaptive(&g, &breaks, tol)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded
/// 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64) -> f64 {
    let pieces: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (k, e) = gk15(f, w[0], w[1]);
            (w[0], w[1], k, e)
        })
        .collect();
    let scale: f64 = pieces.iter().map(|p| p.2).sum::<f64>().abs();
    let abs_tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    let share = abs_tol / pieces.len() as f64;
    pieces
        .iter()
        .map(|&(a, b, k, e)| refine(f, a, b, k, e, share, 40))
        .sum()
}

fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, k: f64, err: f64, tol: f64, depth: u32) -> f64 {
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    let (kl, el) = gk15(f, a, m);
    let (kr, er) = gk15(f, m, b);
    refine(f, a, m, kl, el, 0.5 * tol, depth - 1) + refine(f, m, b, kr, er, 0.5 * tol, depth - 1)
}
