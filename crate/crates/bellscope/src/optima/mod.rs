//! Constrained CHSH maxima per zero-class, grid oracles and maximally entangled bounds.

mod cubic;
mod mes;
mod scan;

pub use cubic::{cubic_roots, CubicPoly, CubicRoots};
pub use mes::{construct_block_strategy, max_chsh_mes, BlockStrategy};
pub use scan::{
    grid_params, landscape_columns, phase_reduction_residual, qubit_family, scan_axes, scan_landscape, scan_verify,
    Axis, QubitPoint, ScanReport, ScanRow,
};

use crate::corrgeom::{chsh_value, BellFunctional, ClassLabel, CorrError, Correlation};
use crate::qstrategy::{
    born, family, named_params, named_point, NamedConstants, NamedPoint, Strategy, StrategyError, StrategyParams,
};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimaError {
    #[error("cubic leading coefficient {0} is negligible")]
    DegenerateCubic(f64),
    #[error("class 4a contains no quantum correlation")]
    NoQuantumPoint,
    #[error("class 4b is local; its CHSH maximum is 2")]
    LocalOnly,
    #[error("class {0} has no constrained maximum")]
    UnsupportedLabel(ClassLabel),
    #[error("grid of {0} points per axis is below the minimum of 50")]
    GridTooSmall(usize),
    #[error("class {label}: grid maximum {scan_max} exceeds closed form {closed_form}")]
    ScanExceeded {
        label: ClassLabel,
        scan_max: f64,
        closed_form: f64,
    },
    #[error("local dimension {0} is below 2")]
    InvalidDimension(usize),
    #[error("correlation lacks the class 2b zeros (largest entry {0:.3e})")]
    WrongClass(f64),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Correlation(#[from] CorrError),
}

/// Closed-form CHSH maximum over the quantum correlations of a class.
pub fn closed_form_max(label: ClassLabel) -> Result<f64, OptimaError> {
    let k = NamedConstants::get();
    match label {
        ClassLabel::ThreeA => Ok(10.0 * k.nu),
        ClassLabel::ThreeB => Ok(4.0 - 4.0 * (2.0 * k.kappa1 + k.kappa2)),
        ClassLabel::TwoA | ClassLabel::TwoB => Ok(2.5),
        // The Class 2c constants are closed-form radicals; the value is the Born-rule CHSH
        // of the strategy they define.
        ClassLabel::TwoC => Ok(chsh_value(&named_point(NamedPoint::Cabello).1)),
        ClassLabel::One => Ok(k.xi3),
        ClassLabel::FourA => Err(OptimaError::NoQuantumPoint),
        ClassLabel::FourB => Err(OptimaError::LocalOnly),
        other => Err(OptimaError::UnsupportedLabel(other)),
    }
}

/// Named residual of a first-order optimality condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stationarity {
    pub condition: &'static str,
    pub residual: f64,
}

/// Derived quantities at a class optimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimumTrace {
    /// Phase sign `ζ` of the family, where the class has one.
    pub zeta: Option<f64>,
    /// Analytic Lagrange or variational conditions, where derived for the class.
    pub conditions: Vec<Stationarity>,
    /// Euclidean norm of the numerical gradient of CHSH along the family's free parameters.
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct ClassOptimum {
    pub label: ClassLabel,
    pub value: f64,
    pub point: NamedPoint,
    pub strategy: Strategy,
    /// Parameters of an optimal member of the class family.
    pub params: StrategyParams,
    pub trace: OptimumTrace,
}

fn optimal_point(label: ClassLabel) -> Result<NamedPoint, OptimaError> {
    Ok(match label {
        ClassLabel::ThreeA => NamedPoint::Hardy,
        ClassLabel::ThreeB => NamedPoint::Q,
        ClassLabel::TwoA => NamedPoint::Q2,
        ClassLabel::TwoB => NamedPoint::Q3,
        ClassLabel::TwoC => NamedPoint::Cabello,
        ClassLabel::One => NamedPoint::Q4,
        _ => {
            closed_form_max(label)?;
            return Err(OptimaError::UnsupportedLabel(label));
        }
    })
}

/// Family parameters of the optimum: the catalog parameters, or for Class 1 the
/// permutation-invariant member `θ = π/4`, `φ = π/2 − θ'`, `α = β = −α'/2`.
fn optimal_params(point: NamedPoint) -> StrategyParams {
    if point == NamedPoint::Q4 {
        let k = NamedConstants::get();
        let theta = k.xi2.sqrt().acos();
        let alpha = k.xi1.acos();
        return StrategyParams {
            phi: FRAC_PI_2 - theta,
            ..StrategyParams::new(FRAC_PI_4, -alpha / 2.0, -alpha / 2.0)
        };
    }
    named_params(point).expect("boundary point").1
}

/// CHSH value of the family as a function of its free coordinates around `p`.
fn family_chsh(label: ClassLabel, p: &StrategyParams, free: &[f64]) -> Option<f64> {
    let q = match label {
        ClassLabel::ThreeA | ClassLabel::ThreeB => {
            let base = StrategyParams {
                alpha: free[0],
                beta: free[1],
                ..*p
            };
            StrategyParams::constrained(label, base).ok()?
        }
        ClassLabel::TwoA | ClassLabel::TwoB => StrategyParams::new(free[0], free[1], free[2]),
        ClassLabel::TwoC => StrategyParams::constrained(label, StrategyParams::new(free[0], free[1], free[2])).ok()?,
        ClassLabel::One => StrategyParams {
            phi: free[3],
            ..StrategyParams::new(free[0], free[1], free[2])
        },
        _ => return None,
    };
    Some(chsh_value(&born(&family(label, q).ok()?)))
}

fn free_coordinates(label: ClassLabel, p: &StrategyParams) -> Vec<f64> {
    match label {
        ClassLabel::ThreeA | ClassLabel::ThreeB => vec![p.alpha, p.beta],
        ClassLabel::One => vec![p.theta, p.alpha, p.beta, p.phi],
        _ => vec![p.theta, p.alpha, p.beta],
    }
}

/// Richardson-extrapolated central differences, accurate to `O(h⁴)`.
fn gradient(f: impl Fn(&[f64]) -> Option<f64>, x: &[f64]) -> Option<Vec<f64>> {
    let h = 1e-3;
    let diff = |i: usize, step: f64| -> Option<f64> {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += step;
        down[i] -= step;
        Some((f(&up)? - f(&down)?) / (2.0 * step))
    };
    (0..x.len())
        .map(|i| Some((4.0 * diff(i, h / 2.0)? - diff(i, h)?) / 3.0))
        .collect()
}

/// Lagrange conditions for the 3b maximization of `2[sin²θ (cos 2α − cos 2β) + 1]` under
/// `tan α + s tan β tan θ = 0`, `s = −ζ`. The multiplier is fitted by least squares.
fn three_b_conditions(p: &StrategyParams) -> Vec<Stationarity> {
    let s = -p.zeta().signum();
    let (st, sa, sb) = (p.theta, p.alpha, p.beta);
    let sin2t = st.sin().powi(2);
    let sec2 = |v: f64| 1.0 / v.cos().powi(2);
    // ∂L/∂α = a1 + λ b1, ∂L/∂β = a2 + λ b2.
    let (a1, b1) = (-4.0 * sin2t * (2.0 * sa).sin(), sec2(sa));
    let (a2, b2) = (4.0 * sin2t * (2.0 * sb).sin(), s * sec2(sb) * st.tan());
    let lambda = -(a1 * b1 + a2 * b2) / (b1 * b1 + b2 * b2);
    let constraint = sa.tan() + s * sb.tan() * st.tan();
    vec![
        Stationarity {
            condition: "dL/dalpha",
            residual: a1 + lambda * b1,
        },
        Stationarity {
            condition: "dL/dbeta",
            residual: a2 + lambda * b2,
        },
        Stationarity {
            condition: "constraint",
            residual: constraint,
        },
    ]
}

/// Vanishing partial derivatives of the 2b CHSH expression with `ζ` matching the sign of
/// `sin 2θ sin α sin 2β`.
fn two_b_conditions(p: &StrategyParams) -> Vec<Stationarity> {
    let (st, sa, sb) = (p.theta, p.alpha, p.beta);
    let zeta = ((2.0 * st).sin() * sa.sin() * (2.0 * sb).sin()).signum();
    let denom = 4.0 * (sb.cos().powi(2) * st.sin().powi(2) + sb.sin().powi(2) * st.cos().powi(2));
    vec![
        Stationarity {
            condition: "dS/dalpha",
            residual: sa.sin() - zeta * (2.0 * st).sin() * (2.0 * sb).sin() / denom,
        },
        Stationarity {
            condition: "dS/dbeta",
            residual: zeta * (2.0 * st).sin() * (2.0 * sb).cos() - sa.sin() * (2.0 * sb).sin() * (2.0 * st).cos(),
        },
        Stationarity {
            condition: "dS/dtheta",
            residual: zeta * (2.0 * st).cos() * (2.0 * sb).sin() - sa.sin() * (2.0 * st).sin() * (2.0 * sb).cos(),
        },
    ]
}

/// Maximal CHSH value over the quantum correlations of a class, with an optimal strategy.
pub fn max_chsh_class(label: ClassLabel) -> Result<ClassOptimum, OptimaError> {
    let value = closed_form_max(label)?;
    let point = optimal_point(label)?;
    let strategy = named_point(point).0.expect("boundary points are quantum");
    let params = optimal_params(point);
    let x = free_coordinates(label, &params);
    let grad = gradient(|free| family_chsh(label, &params, free), &x).unwrap_or_else(|| vec![f64::NAN]);
    let (zeta, conditions) = match label {
        ClassLabel::ThreeB => (Some(params.zeta().signum()), three_b_conditions(&params)),
        ClassLabel::TwoB => (Some(1.0), two_b_conditions(&params)),
        _ => (None, Vec::new()),
    };
    Ok(ClassOptimum {
        label,
        value,
        point,
        strategy,
        params,
        trace: OptimumTrace {
            zeta,
            conditions,
            gradient_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        },
    })
}

/// Success probability `D = p(1,1|1,1) − p(1,1|0,1)` of a correlation with the Class 2b
/// zeros at `(0,0|0,0)` and `(1,1|1,0)`; for such correlations `S = 4D + 2`.
pub fn success_probability_d(c: &Correlation, tol: f64) -> Result<f64, OptimaError> {
    let zeros = c.get(0, 0, 0, 0).max(c.get(1, 1, 1, 0));
    if zeros > tol {
        return Err(OptimaError::WrongClass(zeros));
    }
    Ok(c.get(1, 1, 1, 1) - c.get(1, 1, 0, 1))
}

/// The functional `D` as a Bell expression.
pub fn success_functional() -> BellFunctional {
    BellFunctional::from_fn(|a, b, x, y| match (a, b, x, y) {
        (1, 1, 1, 1) => 1.0,
        (1, 1, 0, 1) => -1.0,
        _ => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::classify_zero_class;

    const LABELS: [ClassLabel; 6] = [
        ClassLabel::ThreeA,
        ClassLabel::ThreeB,
        ClassLabel::TwoA,
        ClassLabel::TwoB,
        ClassLabel::TwoC,
        ClassLabel::One,
    ];

    #[test]
    fn optima_are_consistent() {
        for label in LABELS {
            let opt = max_chsh_class(label).unwrap();
            let c = born(&opt.strategy);
            assert_eq!(classify_zero_class(&c, 1e-9), label);
            assert!((chsh_value(&c) - opt.value).abs() < 1e-10, "{label}");
            let from_family = born(&family(label, opt.params).unwrap());
            assert!((chsh_value(&from_family) - opt.value).abs() < 1e-10, "{label}");
            assert!(opt.trace.gradient_norm < 1e-8, "{label}: {}", opt.trace.gradient_norm);
        }
    }

    #[test]
    fn analytic_conditions_vanish() {
        for label in [ClassLabel::ThreeB, ClassLabel::TwoB] {
            let opt = max_chsh_class(label).unwrap();
            for c in &opt.trace.conditions {
                assert!(c.residual.abs() < 1e-8, "{label} {}: {}", c.condition, c.residual);
            }
        }
    }

    #[test]
    fn four_classes_rejected() {
        assert!(matches!(
            max_chsh_class(ClassLabel::FourA),
            Err(OptimaError::NoQuantumPoint)
        ));
        assert!(matches!(max_chsh_class(ClassLabel::FourB), Err(OptimaError::LocalOnly)));
    }

    #[test]
    fn d_of_q3() {
        let c = named_point(NamedPoint::Q3).1;
        assert!((success_probability_d(&c, 1e-12).unwrap() - 0.125).abs() < 1e-15);
        assert!(success_probability_d(&Correlation::uniform(), 1e-9).is_err());
    }
}
