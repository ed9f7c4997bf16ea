//! Real cubics: Cardano's formula followed by Newton polishing.

use super::OptimaError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `a x³ + b x² + c x + d` with `a ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CubicPoly {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        CubicPoly { a, b, c, d }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.a * x + self.b) * x + self.c) * x + self.d
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.a * x + 2.0 * self.b) * x + self.c
    }
}

/// The real roots, ascending, each polished by Newton's method.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicRoots {
    pub real: Vec<f64>,
}

impl CubicRoots {
    pub fn smallest_positive(&self) -> Option<f64> {
        self.real.iter().copied().find(|r| *r > 0.0)
    }
}

fn polish(p: &CubicPoly, mut x: f64) -> f64 {
    for _ in 0..8 {
        let dp = p.derivative(x);
        if dp == 0.0 {
            break;
        }
        let step = p.eval(x) / dp;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Real roots of a cubic. Fails when `|a|` is negligible next to the other coefficients.
pub fn cubic_roots(p: &CubicPoly) -> Result<CubicRoots, OptimaError> {
    let scale = p.b.abs().max(p.c.abs()).max(p.d.abs()).max(1.0);
    if p.a.abs() < 1e-12 * scale || !p.a.is_finite() {
        return Err(OptimaError::DegenerateCubic(p.a));
    }
    // Depressed form t³ + pt + q with x = t − b/(3a).
    let (b, c, d) = (p.b / p.a, p.c / p.a, p.d / p.a);
    let shift = -b / 3.0;
    let pp = c - b * b / 3.0;
    let qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-qq / 2.0 + s).cbrt() + (-qq / 2.0 - s).cbrt() + shift]
    } else if pp == 0.0 {
        vec![shift]
    } else {
        // Three real roots (possibly repeated): trigonometric form.
        let m = 2.0 * (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    for r in roots.iter_mut() {
        *r = polish(p, *r);
    }
    roots.sort_by(f64::total_cmp);
    Ok(CubicRoots { real: roots })
}
