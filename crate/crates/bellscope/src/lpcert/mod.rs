//! Linear programming over correlation tables: local-polytope membership, no-signaling
//! feasibility of zero patterns, and certificates that boundary points are not exposed.
//!
//! A point `P` of the quantum set is non-exposed when every Bell functional maximized by
//! `P` over the quantum set is also maximized by some local deterministic point. Vectors
//! `T(a,b|x,y) = ⟨φ|M_{a|x}⊗M_{b|y}|ψ⟩` built from states `φ ⊥ ψ` are tangent to the
//! quantum set at `P`, so any such functional must annihilate them. The primal LP maximizes
//! `B·P` under `B·T_i = 0` and `B·P_j ≤ 1`; a value of 1 means the local points already
//! reach the optimum. The dual writes `P = Σ y_j P_j + Σ z_i T_i` with `y ≥ 0`.

mod simplex;

pub use simplex::{solve_lp, LinearProgram, LpOutcome, LpStatus};

use crate::corrgeom::{
    cell_coords, deterministic_point, validate, BellFunctional, CorrError, Correlation, ZeroPattern,
};
use crate::qstrategy::{born, named_point, NamedConstants, NamedPoint, PureState, Strategy, StrategyError};
use serde::{Serialize, Serializer};
use std::f64::consts::PI;
use thiserror::Error;

const CERT_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("row, bound or right-hand-side lengths disagree with the variable count")]
    DimensionMismatch,
    #[error("non-finite problem data")]
    NonFinite,
    #[error("pivot limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error(transparent)]
    Correlation(#[from] CorrError),
    #[error("invalid correlation: {0}")]
    InvalidCorrelation(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("|⟨φ|ψ⟩| = {0:.3e} exceeds 1e-10")]
    NotOrthogonal(f64),
    #[error("{0} has no non-exposedness certificate")]
    UnsupportedPoint(NamedPoint),
    #[error("certificate for {point} failed: primal {primal}, dual {dual}, residual {residual:.3e}")]
    CertificateFailure {
        point: NamedPoint,
        primal: f64,
        dual: f64,
        residual: f64,
    },
}

fn deterministic_cells() -> [[f64; 16]; 16] {
    std::array::from_fn(|j| *deterministic_point(j).expect("index in range").cells())
}

fn dot(a: &[f64; 16], b: &[f64; 16]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of the local-polytope membership test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalMembership {
    pub inside: bool,
    /// Convex weights on the 16 deterministic points, when inside.
    pub weights: Option<[f64; 16]>,
    /// A functional with `B·c > max_j B·P_j`, when outside.
    pub separating: Option<BellFunctional>,
    /// `B·c − max_j B·P_j` for the separating functional (0 when inside).
    pub violation: f64,
}

/// Decides whether `c` lies in the local polytope.
///
/// Inside: the weights come from a feasibility LP. Outside: the separating functional is
/// the optimizer of the dual problem `max B·c − t` over `B·P_j ≤ t`, `|B_k| ≤ 1`.
pub fn local_membership(c: &Correlation) -> Result<LocalMembership, LpError> {
    let report = validate(c, 1e-9)?;
    if !report.all() {
        return Err(LpError::InvalidCorrelation(format!("{report:?}")));
    }
    let det = deterministic_cells();
    let mut lp = LinearProgram::maximize(vec![0.0; 16]);
    for k in 0..16 {
        lp = lp.equality((0..16).map(|j| det[j][k]).collect(), c.cells()[k]);
    }
    let out = solve_lp(&lp)?;
    if out.is_optimal() {
        let weights: [f64; 16] = std::array::from_fn(|j| out.x[j].max(0.0));
        return Ok(LocalMembership {
            inside: true,
            weights: Some(weights),
            separating: None,
            violation: 0.0,
        });
    }
    // Variables: B_0..B_15 in [−1, 1], t free; maximize B·c − t.
    let mut objective: Vec<f64> = c.cells().to_vec();
    objective.push(-1.0);
    let mut sep = LinearProgram::maximize(objective).free(16);
    for k in 0..16 {
        sep = sep.bounded(k, -1.0, 1.0);
    }
    for d in &det {
        let mut row = d.to_vec();
        row.push(-1.0);
        sep = sep.at_most(row, 0.0);
    }
    let out = solve_lp(&sep)?;
    let coefficients: [f64; 16] = std::array::from_fn(|k| out.x[k]);
    let local_max = det
        .iter()
        .map(|d| dot(&coefficients, d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LocalMembership {
        inside: false,
        weights: None,
        violation: dot(&coefficients, c.cells()) - local_max,
        separating: Some(BellFunctional { coefficients }),
    })
}

/// Largest `t` such that some no-signaling table vanishes on `pattern` and has every other
/// cell at least `t`; `None` when no no-signaling table vanishes on `pattern` at all.
pub fn ns_pattern_slack(pattern: &ZeroPattern) -> Result<Option<f64>, LpError> {
    // Variables p_0..p_15 and t (index 16).
    let mut objective = vec![0.0; 17];
    objective[16] = 1.0;
    let mut lp = LinearProgram::maximize(objective).bounded(16, 0.0, 1.0);
    let idx = |a, b, x, y| crate::corrgeom::cell(a, b, x, y);
    let row17 = |entries: &[(usize, f64)]| {
        let mut row = vec![0.0; 17];
        for &(k, v) in entries {
            row[k] += v;
        }
        row
    };
    for x in 0..2 {
        for y in 0..2 {
            let cells: Vec<(usize, f64)> = (0..4).map(|ab| (idx(ab % 2, ab / 2, x, y), 1.0)).collect();
            lp = lp.equality(row17(&cells), 1.0);
        }
    }
    // Alice's marginal independent of y, Bob's independent of x.
    for x in 0..2 {
        let cells: Vec<(usize, f64)> = (0..2)
            .flat_map(|b| [(idx(0, b, x, 0), 1.0), (idx(0, b, x, 1), -1.0)])
            .collect();
        lp = lp.equality(row17(&cells), 0.0);
    }
    for y in 0..2 {
        let cells: Vec<(usize, f64)> = (0..2)
            .flat_map(|a| [(idx(a, 0, 0, y), 1.0), (idx(a, 0, 1, y), -1.0)])
            .collect();
        lp = lp.equality(row17(&cells), 0.0);
    }
    for k in 0..16 {
        let (a, b, x, y) = cell_coords(k);
        if pattern.contains(a, b, x, y) {
            lp = lp.bounded(k, 0.0, 0.0);
        } else {
            lp = lp.at_most(row17(&[(16, 1.0), (k, -1.0)]), 0.0);
        }
    }
    let out = solve_lp(&lp)?;
    Ok(out.is_optimal().then_some(out.value))
}

/// Whether some no-signaling table has exactly the zeros of `pattern`: zero on its cells and
/// strictly positive elsewhere.
pub fn ns_zero_feasibility(pattern: &ZeroPattern) -> Result<bool, LpError> {
    Ok(ns_pattern_slack(pattern)?.is_some_and(|t| t > 1e-9))
}

/// Whether some no-signaling table vanishes on (at least) every cell of `pattern`.
/// Unlike [`ns_zero_feasibility`] this is monotone in the pattern.
pub fn ns_zeros_admissible(pattern: &ZeroPattern) -> Result<bool, LpError> {
    Ok(ns_pattern_slack(pattern)?.is_some())
}

/// Tangent vector `T(a,b|x,y) = Re⟨φ|M_{a|x}⊗M_{b|y}|ψ⟩` for a state `φ` orthogonal to `ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TVector {
    pub components: [f64; 16],
    pub source: PureState,
}

impl TVector {
    /// `Σ_{a,b} T(a,b|x,y)` for each setting pair; zero by orthogonality.
    pub fn block_sums(&self) -> [f64; 4] {
        let mut sums = [0.0; 4];
        for (k, v) in self.components.iter().enumerate() {
            let (_, _, x, y) = cell_coords(k);
            sums[2 * x + y] += v;
        }
        sums
    }
}

impl Serialize for TVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.components.serialize(s)
    }
}

pub fn t_vector(s: &Strategy, phi: &PureState) -> Result<TVector, LpError> {
    if phi.dims() != s.state.dims() {
        return Err(StrategyError::DimensionMismatch("φ and ψ live in different spaces".into()).into());
    }
    if !s.is_projective(1e-9) {
        return Err(StrategyError::NotProjective.into());
    }
    let overlap = phi.inner(&s.state).norm();
    if overlap > 1e-10 {
        return Err(LpError::NotOrthogonal(overlap));
    }
    let (da, db) = phi.dims();
    let psi = s.state.amps();
    let bra = phi.amps();
    let components = std::array::from_fn(|k| {
        let (a, b, x, y) = cell_coords(k);
        let op = s.meas_a[x].element(a).kronecker(s.meas_b[y].element(b));
        debug_assert_eq!(op.nrows(), da * db);
        bra.dotc(&(op * psi)).re
    });
    Ok(TVector {
        components,
        source: phi.clone(),
    })
}

/// Primal LP outcome with the deterministic points that attain `B·P_j = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimalReport {
    pub outcome: LpOutcome,
    pub saturated: Vec<usize>,
}

impl PrimalReport {
    /// Value 1 attained with at least one saturating deterministic point.
    pub fn certifies(&self) -> bool {
        self.outcome.is_optimal() && (self.outcome.value - 1.0).abs() <= CERT_TOL && !self.saturated.is_empty()
    }
}

/// Maximizes `B·c` subject to `B·T_i = 0` and `B·P_j ≤ 1` over free `B`.
pub fn nonexposed_primal(c: &Correlation, ts: &[TVector]) -> Result<PrimalReport, LpError> {
    let det = deterministic_cells();
    let mut lp = LinearProgram::maximize(c.cells().to_vec());
    for k in 0..16 {
        lp = lp.free(k);
    }
    for t in ts {
        lp = lp.equality(t.components.to_vec(), 0.0);
    }
    for d in &det {
        lp = lp.at_most(d.to_vec(), 1.0);
    }
    let outcome = solve_lp(&lp)?;
    let saturated = if outcome.is_optimal() {
        let b: [f64; 16] = std::array::from_fn(|k| outcome.x[k]);
        (0..16)
            .filter(|&j| (dot(&b, &det[j]) - 1.0).abs() <= CERT_TOL)
            .collect()
    } else {
        Vec::new()
    };
    Ok(PrimalReport { outcome, saturated })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualCheck {
    pub feasible: bool,
    pub value: f64,
    pub residual: f64,
}

/// Checks `y ≥ 0` and `Σ y_j P_j + Σ z_i T_i = c`; the value is `Σ y_j`.
pub fn nonexposed_dual_check(c: &Correlation, ts: &[TVector], y: &[f64; 16], z: &[f64]) -> Result<DualCheck, LpError> {
    if z.len() != ts.len() {
        return Err(LpError::DimensionMismatch);
    }
    let det = deterministic_cells();
    let residual = (0..16)
        .map(|k| {
            let recon: f64 = (0..16).map(|j| y[j] * det[j][k]).sum::<f64>()
                + ts.iter().zip(z).map(|(t, zi)| zi * t.components[k]).sum::<f64>();
            (recon - c.cells()[k]).abs()
        })
        .fold(0.0, f64::max);
    Ok(DualCheck {
        feasible: y.iter().all(|v| *v >= -1e-12) && residual <= RESIDUAL_TOL,
        value: y.iter().sum(),
        residual,
    })
}

/// Solves the dual LP `min Σ y_j` over `y ≥ 0`, free `z`, with `Σ y_j P_j + Σ z_i T_i = c`.
pub fn nonexposed_dual_lp(c: &Correlation, ts: &[TVector]) -> Result<LpOutcome, LpError> {
    let det = deterministic_cells();
    let n = 16 + ts.len();
    let mut objective = vec![1.0; 16];
    objective.extend(std::iter::repeat_n(0.0, ts.len()));
    let mut lp = LinearProgram::minimize(objective);
    for i in 16..n {
        lp = lp.free(i);
    }
    for k in 0..16 {
        let mut row: Vec<f64> = (0..16).map(|j| det[j][k]).collect();
        row.extend(ts.iter().map(|t| t.components[k]));
        lp = lp.equality(row, c.cells()[k]);
    }
    solve_lp(&lp)
}

/// Primal and dual evidence that a named boundary point is not exposed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonExposedCertificate {
    pub point: NamedPoint,
    pub t_vectors: Vec<TVector>,
    pub y: [f64; 16],
    pub z: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub residual: f64,
    pub saturated: Vec<usize>,
    /// False when the dual assignment was found numerically rather than in closed form.
    pub analytic: bool,
}

fn ket(v: [f64; 4]) -> PureState {
    PureState::from_real((2, 2), &v).expect("nonzero certificate state")
}

/// Orthogonal states, and the closed-form dual `(y, z)` where one is known.
fn certificate_data(point: NamedPoint) -> Result<(Vec<PureState>, Option<([f64; 16], Vec<f64>)>), LpError> {
    let k = NamedConstants::get();
    let mut y = [0.0; 16];
    let r = |v: f64| v.cbrt();
    match point {
        NamedPoint::Q => {
            let s33 = 33f64.sqrt();
            let t1 = (r(3.0 * s33 - 17.0) - 2.0 / r(3.0 * s33 - 17.0) + 4.0) / 6.0;
            let y3 = (r(2.0 * (3.0 * s33 + 13.0)) - 4.0 * 2f64.powf(2.0 / 3.0) / r(3.0 * s33 + 13.0) - 1.0) / 6.0;
            let y8 = (r(11.0 * (3.0 * s33 - 11.0)) / 2f64.powf(2.0 / 3.0)
                - 22f64.powf(2.0 / 3.0) / r(3.0 * s33 - 11.0)
                + 2.0)
                / 3.0;
            let z1 = 2.0 * y3;
            let y6 = y3 - z1 * t1;
            let y12 = 0.5 - y8;
            y[3] = y3;
            y[6] = y6;
            y[8] = y8;
            y[12] = y12;
            y[9] = 1.0 - y3 - y6 - y8 - y12;
            Ok((vec![ket([1.0, 0.0, 0.0, 0.0])], Some((y, vec![z1]))))
        }
        NamedPoint::Q2 => {
            for j in [3, 6, 9, 12] {
                y[j] = 0.25;
            }
            let singlet = ket([0.0, 1.0, -1.0, 0.0]);
            Ok((vec![singlet], Some((y, vec![1.0 / 3f64.sqrt()]))))
        }
        NamedPoint::Q3 => {
            for j in [2, 3, 12, 15] {
                y[j] = 0.25;
            }
            let a = PI / 6.0;
            let z = 1.0 / 6f64.sqrt();
            Ok((
                vec![ket([1.0, 0.0, 0.0, 0.0]), ket([0.0, a.sin(), 0.0, a.cos()])],
                Some((y, vec![z, z])),
            ))
        }
        NamedPoint::Cabello => {
            let s78 = 78f64.sqrt();
            y[3] = (-k.mu1 - 1.0 / k.mu1 + 7.0) / 6.0;
            y[12] = -r(9.0 - s78) / 3f64.powf(2.0 / 3.0) - 1.0 / r(3.0 * (9.0 - s78)) + 2.0;
            y[15] = 1.0 - y[3] - y[12];
            let w1 = r(6827808.0 * s78 + 35282447.0);
            let w2 = r(186.0 * s78 + 1639.0);
            let z1 = -((w1 - 133727.0 / w1 - 145.0) / 48.0).sqrt();
            let z2 = (w2 - 23.0 / w2 - 11.0) / 6.0;
            let phis = vec![ket([k.k2, -k.k1, -k.k3, k.k2]), ket([k.k3, -k.k2, k.k2, -k.k1])];
            Ok((phis, Some((y, vec![z1, z2]))))
        }
        NamedPoint::Q4 => {
            let zeta = nonexposed_roots();
            y[3] = zeta[0];
            y[12] = zeta[0];
            y[15] = 1.0 - 2.0 * zeta[0];
            let theta = k.xi2.sqrt().acos();
            let s = theta.cos() / 2f64.sqrt();
            let phis = vec![ket([1.0, 0.0, 0.0, 0.0]), ket([0.0, s, s, -theta.sin()])];
            Ok((phis, Some((y, vec![-zeta[1].sqrt(), zeta[2].sqrt()]))))
        }
        NamedPoint::Hardy => {
            // Same orthogonal direction as the Class-2b certificate; the dual is solved for.
            Ok((vec![ket([1.0, 0.0, 0.0, 0.0])], None))
        }
        other => Err(LpError::UnsupportedPoint(other)),
    }
}

/// Smallest positive roots of `x³−x²−2x+1`, `x³−7x²+14x−7` and `x³−32x²−116x+8`.
pub fn nonexposed_roots() -> [f64; 3] {
    use crate::optima::{cubic_roots, CubicPoly};
    [
        CubicPoly::new(1.0, -1.0, -2.0, 1.0),
        CubicPoly::new(1.0, -7.0, 14.0, -7.0),
        CubicPoly::new(1.0, -32.0, -116.0, 8.0),
    ]
    .map(|p| {
        cubic_roots(&p)
            .expect("monic")
            .smallest_positive()
            .expect("positive root exists")
    })
}

/// Runs the primal LP and checks the dual assignment for a named boundary point.
pub fn certify_nonexposed(point: NamedPoint) -> Result<NonExposedCertificate, LpError> {
    let (phis, dual) = certificate_data(point)?;
    let (strategy, _) = named_point(point);
    let strategy = strategy.ok_or(LpError::UnsupportedPoint(point))?;
    let c = born(&strategy);
    let ts = phis
        .iter()
        .map(|phi| t_vector(&strategy, phi))
        .collect::<Result<Vec<_>, _>>()?;
    let primal = nonexposed_primal(&c, &ts)?;
    let analytic = dual.is_some();
    let (y, z) = match dual {
        Some(d) => d,
        None => {
            let out = nonexposed_dual_lp(&c, &ts)?;
            if !out.is_optimal() {
                return Err(LpError::CertificateFailure {
                    point,
                    primal: primal.outcome.value,
                    dual: f64::NAN,
                    residual: f64::NAN,
                });
            }
            let y = std::array::from_fn(|j| out.x[j].max(0.0));
            (y, out.x[16..].to_vec())
        }
    };
    let check = nonexposed_dual_check(&c, &ts, &y, &z)?;
    let ok = check.feasible && primal.certifies() && (check.value - 1.0).abs() <= CERT_TOL;
    if !ok {
        return Err(LpError::CertificateFailure {
            point,
            primal: primal.outcome.value,
            dual: check.value,
            residual: check.residual,
        });
    }
    Ok(NonExposedCertificate {
        point,
        t_vectors: ts,
        y,
        z,
        primal_value: primal.outcome.value,
        dual_value: check.value,
        residual: check.residual,
        saturated: primal.saturated,
        analytic,
    })
}
