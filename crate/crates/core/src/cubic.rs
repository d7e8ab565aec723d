//! Roots of real monic cubics `x^3 + a2 x^2 + a1 x + a0` by Cardano's
//! formula (trigonometric branch for three real roots), each real root
//! polished with Newton steps on the original polynomial.

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubicRoots {
    /// Three real roots, ascending.
    Real([f64; 3]),
    /// One real root and the conjugate pair `re +- i im`.
    Complex { real: f64, re: f64, im: f64 },
}

impl CubicRoots {
    /// Largest root modulus.
    pub fn spectral_radius(&self) -> f64 {
        match *self {
            CubicRoots::Real(r) => r.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            CubicRoots::Complex { real, re, im } => real.abs().max(math::sqrt(re * re + im * im)),
        }
    }
}

pub fn monic_cubic_roots(a2: f64, a1: f64, a0: f64) -> CubicRoots {
    let shift = a2 / 3.0;
    let p = a1 - a2 * shift;
    let q = 2.0 * shift * shift * shift - shift * a1 + a0;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let mag = half_q * half_q + (third_p * third_p * third_p).abs();

    let polish = |x: f64| newton_polish(a2, a1, a0, x);

    if disc > 1e-13 * mag && disc > 0.0 {
        let sq = math::sqrt(disc);
        let u = math::cbrt(-half_q + sq);
        let v = math::cbrt(-half_q - sq);
        let real = polish(u + v - shift);
        return CubicRoots::Complex {
            real,
            re: -0.5 * (u + v) - shift,
            im: 0.5 * math::sqrt(3.0) * (u - v).abs(),
        };
    }

    let mut roots = if third_p >= 0.0 {
        // p == 0 up to round-off: triple root
        let t = math::cbrt(-q);
        [t, t, t]
    } else {
        let m = 2.0 * math::sqrt(-third_p);
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = math::acos(arg) / 3.0;
        let two_pi_3 = 2.0 * core::f64::consts::PI / 3.0;
        [
            m * math::cos(theta),
            m * math::cos(theta - two_pi_3),
            m * math::cos(theta - 2.0 * two_pi_3),
        ]
    };
    for r in roots.iter_mut() {
        *r = polish(*r - shift);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    CubicRoots::Real(roots)
}

fn newton_polish(a2: f64, a1: f64, a0: f64, mut x: f64) -> f64 {
    for _ in 0..2 {
        let f = ((x + a2) * x + a1) * x + a0;
        let df = (3.0 * x + 2.0 * a2) * x + a1;
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let step = f / df;
        // a step larger than the root spacing would jump to a neighbour
        if step.abs() > 1e-6 * (1.0 + x.abs()) {
            break;
        }
        x -= step;
    }
    x
}
