//! Moment-matrix outer approximations of the quantum set and the SWAP-method bounds
//! computed over them.
//!
//! A relaxation of level `ℓ` uses the moment matrix indexed by `u_A ⊗ u_B` with every reduced
//! word of length at most `ℓ` on each side (9, 25 and 49 rows for levels 1 to 3). Moments are
//! real: every reference strategy in the catalog uses real observables and states.

mod ipm;
mod moments;
mod swap;
mod words;

pub use ipm::{solve as solve_conic, IpmResult, IpmSettings, RMat, RVec, SdpData, SolverStatus};
pub use moments::{bell_polynomial, cell_polynomial, Constraint, LinearForm, RelaxationProblem, SdpSolution, Sense};
pub use swap::{expand_swap_objective, meas_merit, MeasMerit};
pub use words::{Monomial, Party, Polynomial, Word};

use crate::corrgeom::{BellFunctional, ZeroPattern};
use crate::qstrategy::{born, named_point, NamedPoint, Strategy, StrategyError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("relaxation level {0} is not supported (1 to 3)")]
    UnsupportedLevel(usize),
    #[error("moment {0} is not in the moment matrix")]
    MomentOutOfRange(String),
    #[error("slack must be nonnegative, got {0}")]
    NegativeSlack(f64),
    #[error("unsupported reference: {0}")]
    UnsupportedReference(String),
    #[error("relaxation is infeasible")]
    Infeasible,
    #[error("objective is unbounded over the relaxation")]
    UnboundedObjective,
    #[error("solver stopped with status {status:?} (last value {value})")]
    Solver { status: SolverStatus, value: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// The CHSH expression as a polynomial.
pub fn chsh_polynomial() -> Polynomial {
    bell_polynomial(&BellFunctional::chsh())
}

fn converged(sol: SdpSolution) -> Result<SdpSolution, SdpError> {
    match sol.status {
        SolverStatus::Converged => Ok(sol),
        SolverStatus::Infeasible => Err(SdpError::Infeasible),
        SolverStatus::Unbounded => Err(SdpError::UnboundedObjective),
        status => Err(SdpError::Solver {
            status,
            value: sol.value,
        }),
    }
}

/// Upper bound on CHSH over the level-`level` relaxation with every cell of `pattern` at
/// most `eps`.
pub fn max_chsh_relaxed(pattern: &ZeroPattern, eps: f64, level: usize) -> Result<SdpSolution, SdpError> {
    if eps < 0.0 {
        return Err(SdpError::NegativeSlack(eps));
    }
    let prob = RelaxationProblem::build(level, &[Constraint::Zeros { pattern: *pattern, eps }])?;
    converged(prob.solve(&chsh_polynomial(), Sense::Maximize)?)
}

fn reference_strategy(point: NamedPoint) -> Result<(Strategy, ZeroPattern), SdpError> {
    let s = named_point(point)
        .0
        .ok_or_else(|| SdpError::UnsupportedReference(format!("{point} has no quantum strategy")))?;
    let pattern = ZeroPattern::from_correlation(&born(&s), crate::corrgeom::ZERO_TOL);
    Ok((s, pattern))
}

/// Lower bound on a figure of merit over realizations with CHSH at least `s_value`.
#[derive(Clone, Debug, Serialize)]
pub struct RobustBound {
    pub value: f64,
    pub s_value: f64,
    /// CHSH lower bound actually imposed; below `s_value` only after a solver failure, which
    /// enlarges the feasible set and keeps `value` a valid lower bound.
    pub s_effective: f64,
    pub eps: f64,
    pub level: usize,
    /// Relaxed CHSH maximum under the same zero constraints.
    pub relaxed_max: f64,
    pub solution: SdpSolution,
}

/// Requests above the relaxed maximum by more than this are infeasible.
const ABOVE_MAX_TOL: f64 = 1e-7;
/// Downward CHSH offsets tried when the direct solve fails. At the relaxed maximum the
/// feasible set has no interior, so the first retreat is what succeeds there.
const RETREAT: [f64; 4] = [1e-7, 1e-6, 1e-5, 1e-4];

/// Minimizes `objective` over the relaxation `base` (zero constraints already applied) with
/// CHSH at least `s_value`.
fn robust_minimum(
    base: RelaxationProblem,
    objective: &Polynomial,
    s_value: f64,
    eps: f64,
) -> Result<RobustBound, SdpError> {
    let chsh = chsh_polynomial();
    let top = converged(base.solve(&chsh, Sense::Maximize)?)?;
    if s_value > top.value + ABOVE_MAX_TOL {
        return Err(SdpError::Infeasible);
    }
    let mut last = None;
    for s in std::iter::once(s_value).chain(RETREAT.iter().map(|d| s_value - d)) {
        let mut prob = base.clone();
        prob.add(&Constraint::AtLeast(chsh.clone(), s))?;
        match converged(prob.solve(objective, Sense::Minimize)?) {
            Ok(solution) => {
                return Ok(RobustBound {
                    value: solution.value,
                    s_value,
                    s_effective: s,
                    eps,
                    level: base.level(),
                    relaxed_max: top.value,
                    solution,
                })
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn zero_constraint(pattern: ZeroPattern, eps: f64) -> Result<Constraint, SdpError> {
    if eps < 0.0 {
        return Err(SdpError::NegativeSlack(eps));
    }
    Ok(Constraint::Zeros { pattern, eps })
}

/// Lower bound on the SWAP fidelity with the reference state of `point` over realizations
/// with CHSH at least `s_value` and the reference's zero cells at most `eps`.
pub fn swap_fidelity_bound(point: NamedPoint, s_value: f64, eps: f64, level: usize) -> Result<RobustBound, SdpError> {
    let (reference, pattern) = reference_strategy(point)?;
    if level < 2 {
        return Err(SdpError::UnsupportedLevel(level));
    }
    let objective = expand_swap_objective(&reference)?;
    let base = RelaxationProblem::build(level, &[zero_constraint(pattern, eps)?])?;
    robust_minimum(base, &objective, s_value, eps)
}

/// Lower bound on the measurement figure of merit of one party.
pub fn meas_merit_bound(
    point: NamedPoint,
    party: Party,
    s_value: f64,
    eps: f64,
    level: usize,
) -> Result<RobustBound, SdpError> {
    let (reference, pattern) = reference_strategy(point)?;
    let merit = meas_merit(&reference, party)?;
    let mut base = RelaxationProblem::with_extra_rows(level, &merit.extra_rows())?;
    base.add(&zero_constraint(pattern, eps)?)?;
    robust_minimum(base, &merit.polynomial(), s_value, eps)
}

/// Extremes of CHSH at one value of a Bell functional.
#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub status_min: SolverStatus,
    pub status_max: SolverStatus,
    pub level: usize,
}

/// For each `h` in `grid`, minimum and maximum CHSH over the relaxation with `f·P = h`.
/// Failed points carry NaN and their status; the sweep continues.
pub fn boundary_curve(f: &BellFunctional, level: usize, grid: &[f64]) -> Result<Vec<CurvePoint>, SdpError> {
    RelaxationProblem::new(level)?;
    let hpoly = bell_polynomial(f);
    let chsh = chsh_polynomial();
    let nonneg = f.coefficients.iter().all(|&c| c >= 0.0);
    let support = ZeroPattern {
        mask: (0..16)
            .filter(|&i| f.coefficients[i] > 0.0)
            .fold(0u16, |m, i| m | (1 << i)),
    };
    let point = |&h: &f64| -> CurvePoint {
        let run = |sense| -> (f64, SolverStatus) {
            // A nonnegative combination of cells pinned at 0 has no interior; restrict to
            // the face where those cells vanish instead.
            let constraint = if h <= 0.0 && nonneg {
                Constraint::Zeros {
                    pattern: support,
                    eps: 0.0,
                }
            } else {
                Constraint::Equal(hpoly.clone(), h)
            };
            let prob = match RelaxationProblem::build(level, &[constraint]) {
                Ok(p) => p,
                Err(_) => return (f64::NAN, SolverStatus::NumericalFailure),
            };
            match prob.solve(&chsh, sense) {
                Ok(sol) if sol.status == SolverStatus::Converged => (sol.value, sol.status),
                Ok(sol) => (f64::NAN, sol.status),
                Err(_) => (f64::NAN, SolverStatus::NumericalFailure),
            }
        };
        let (s_min, status_min) = run(Sense::Minimize);
        let (s_max, status_max) = run(Sense::Maximize);
        CurvePoint {
            h,
            s_min,
            s_max,
            status_min,
            status_max,
            level,
        }
    };
    Ok(crate::parallel::pool().install(|| grid.par_iter().map(point).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::ClassLabel;

    #[test]
    fn class_3b_levels() {
        let pattern = ClassLabel::ThreeB.representative_pattern().unwrap();
        let l1 = max_chsh_relaxed(&pattern, 0.0, 1).unwrap().value;
        let l2 = max_chsh_relaxed(&pattern, 0.0, 2).unwrap().value;
        assert!((l1 - 2.29289).abs() < 1e-4, "{l1}");
        assert!((l2 - 2.26976898).abs() < 1e-6, "{l2}");
        assert!(l2 <= l1 + 1e-7);
    }

    #[test]
    fn negative_slack_rejected() {
        assert!(matches!(
            max_chsh_relaxed(&ZeroPattern::default(), -0.1, 1),
            Err(SdpError::NegativeSlack(_))
        ));
    }

    #[test]
    fn hardy_curve_end() {
        let h = BellFunctional::indicator(&[(0, 0, 0, 0), (1, 1, 1, 0), (1, 1, 0, 1)]);
        let curve = boundary_curve(&h, 1, &[0.0, 0.25]).unwrap();
        assert!(curve[0].s_max >= 2.36068 - 1e-6, "{:?}", curve[0]);
        assert!(curve[1].s_max >= 2.0);
        assert!(curve.iter().all(|p| p.s_min <= p.s_max));
    }
}
