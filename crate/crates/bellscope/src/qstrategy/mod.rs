//! Bipartite pure states, two-outcome measurements and the Born rule.
//!
//! Measurements are stored as POVMs so noisy strategies are first-class; a
//! dichotomic observable `O` maps to the pair `((1+O)/2, (1−O)/2)`, so outcome
//! 0 is the `+1` eigenvalue.

mod catalog;
mod equivalence;
mod jordan;
mod swap;

pub use catalog::{
    family, hardy_angle, named_params, named_point, noisy_class2a, reference_angle, NamedConstants, NamedPoint,
    StrategyParams,
};
pub use equivalence::local_unitary_equivalent;
pub use jordan::{jordan_blocks, Block, BlockDecomposition};
pub use swap::{swap_isometry_check, swap_reference_frame, SwapFrame};

use crate::corrgeom::{ClassLabel, Correlation};
use crate::linalg::{self, c, eigh, identity, is_hermitian, min_eigenvalue, CMat, CVec, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("observable does not square to the identity (residual {0:.3e})")]
    NotDichotomic(f64),
    #[error("not a valid POVM: {0}")]
    NotPovm(String),
    #[error("measurement is not projective")]
    NotProjective,
    #[error("parameters violate the class {label} constraint (residual {residual:.3e})")]
    ConstraintViolation { label: ClassLabel, residual: f64 },
    #[error("degenerate parameters for class {0}")]
    Degenerate(ClassLabel),
    #[error("class {0} has no strategy family")]
    UnsupportedLabel(ClassLabel),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("auxiliary state is not orthogonal to the strategy state (overlap {0:.3e})")]
    NotOrthogonal(f64),
    #[error("unsupported reference: {0}")]
    BadReference(String),
    #[error("unknown named point {0:?}")]
    UnknownName(String),
}

/// Pure state on `C^{d_A} ⊗ C^{d_B}`; amplitude of `|i⟩|j⟩` sits at `i·d_B + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: (usize, usize),
    amps: CVec,
}

impl PureState {
    pub fn new(dims: (usize, usize), amps: CVec) -> Result<Self, StrategyError> {
        if amps.len() != dims.0 * dims.1 || dims.0 == 0 || dims.1 == 0 {
            return Err(StrategyError::DimensionMismatch(format!(
                "{} amplitudes for dims {:?}",
                amps.len(),
                dims
            )));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StrategyError::NotNormalized(norm));
        }
        Ok(PureState { dims, amps })
    }

    /// Normalizes before constructing.
    pub fn normalized(dims: (usize, usize), amps: CVec) -> Result<Self, StrategyError> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StrategyError::NotNormalized(norm));
        }
        Self::new(dims, amps.unscale(norm))
    }

    pub fn from_real(dims: (usize, usize), amps: &[f64]) -> Result<Self, StrategyError> {
        Self::normalized(
            dims,
            CVec::from_iterator(amps.len(), amps.iter().map(|&x| linalg::re(x))),
        )
    }

    /// `|Φ⁺_d⟩ = Σ_i |ii⟩/√d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut amps = CVec::zeros(d * d);
        for i in 0..d {
            amps[i * d + i] = linalg::re(1.0 / (d as f64).sqrt());
        }
        PureState { dims: (d, d), amps }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    /// Matrix `C` with `ψ = Σ C_ij |i⟩|j⟩`.
    pub fn coefficient_matrix(&self) -> CMat {
        let (da, db) = self.dims;
        CMat::from_fn(da, db, |i, j| self.amps[i * db + j])
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Schmidt coefficients, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.coefficient_matrix().singular_values().iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Applies `u_A ⊗ u_B`.
    pub fn transformed(&self, ua: &CMat, ub: &CMat) -> PureState {
        let cm = ua * self.coefficient_matrix() * ub.transpose();
        let (da, db) = self.dims;
        let amps = CVec::from_fn(da * db, |k, _| cm[(k / db, k % db)]);
        PureState { dims: self.dims, amps }
    }
}

/// Hermitian `±1`-valued observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable(CMat);

impl Observable {
    pub fn new(m: CMat) -> Result<Self, StrategyError> {
        if !is_hermitian(&m, 1e-10) {
            return Err(StrategyError::NotHermitian);
        }
        let resid = linalg::dist(&(&m * &m), &identity(m.nrows()));
        if resid > 1e-10 {
            return Err(StrategyError::NotDichotomic(resid));
        }
        Ok(Observable(m))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn to_povm(&self) -> Povm {
        let id = identity(self.0.nrows());
        Povm {
            elements: vec![(&id + &self.0).scale(0.5), (&id - &self.0).scale(0.5)],
        }
    }
}

/// Two-outcome POVM.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>) -> Result<Self, StrategyError> {
        if elements.len() != 2 {
            return Err(StrategyError::NotPovm(format!(
                "{} elements, expected 2",
                elements.len()
            )));
        }
        let d = elements[0].nrows();
        let mut total = CMat::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || !e.is_square() {
                return Err(StrategyError::DimensionMismatch("POVM element shape".into()));
            }
            if !is_hermitian(e, 1e-10) {
                return Err(StrategyError::NotHermitian);
            }
            let lo = min_eigenvalue(e);
            if lo < -1e-12 {
                return Err(StrategyError::NotPovm(format!("negative eigenvalue {lo:.3e}")));
            }
            total += e;
        }
        let resid = linalg::dist(&total, &identity(d));
        if resid > 1e-10 {
            return Err(StrategyError::NotPovm(format!(
                "elements sum off identity by {resid:.3e}"
            )));
        }
        Ok(Povm { elements })
    }

    /// POVM of a dichotomic observable given as a matrix.
    pub fn from_observable(m: CMat) -> Result<Self, StrategyError> {
        Ok(Observable::new(m)?.to_povm())
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn element(&self, outcome: usize) -> &CMat {
        &self.elements[outcome]
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    /// `M_0 − M_1`.
    pub fn observable(&self) -> CMat {
        &self.elements[0] - &self.elements[1]
    }

    pub fn is_projective(&self, tol: f64) -> bool {
        self.elements.iter().all(|e| linalg::dist(&(e * e), e) <= tol)
    }
}

/// A pure state with two two-outcome measurements per party.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub state: PureState,
    pub meas_a: [Povm; 2],
    pub meas_b: [Povm; 2],
}

impl Strategy {
    pub fn new(state: PureState, meas_a: [Povm; 2], meas_b: [Povm; 2]) -> Result<Self, StrategyError> {
        let (da, db) = state.dims();
        if meas_a.iter().any(|m| m.dim() != da) || meas_b.iter().any(|m| m.dim() != db) {
            return Err(StrategyError::DimensionMismatch(format!(
                "state dims {:?} vs measurement dims",
                (da, db)
            )));
        }
        Ok(Strategy { state, meas_a, meas_b })
    }

    /// Builds a strategy from dichotomic observables.
    pub fn from_observables(state: PureState, a: [CMat; 2], b: [CMat; 2]) -> Result<Self, StrategyError> {
        let [a0, a1] = a;
        let [b0, b1] = b;
        Self::new(
            state,
            [Povm::from_observable(a0)?, Povm::from_observable(a1)?],
            [Povm::from_observable(b0)?, Povm::from_observable(b1)?],
        )
    }

    pub fn observable_a(&self, x: usize) -> CMat {
        self.meas_a[x].observable()
    }

    pub fn observable_b(&self, y: usize) -> CMat {
        self.meas_b[y].observable()
    }

    pub fn is_projective(&self, tol: f64) -> bool {
        self.meas_a
            .iter()
            .chain(self.meas_b.iter())
            .all(|m| m.is_projective(tol))
    }
}

/// Expectation `⟨ψ| E ⊗ F |ψ⟩ = tr(C† E C Fᵀ)` with `C` the coefficient matrix.
pub fn expectation(coeff: &CMat, e: &CMat, f: &CMat) -> C64 {
    (coeff.adjoint() * e * coeff * f.transpose()).trace()
}

/// Born-rule correlation of a strategy.
pub fn born(s: &Strategy) -> Correlation {
    let cm = s.state.coefficient_matrix();
    Correlation::from_fn(|a, b, x, y| expectation(&cm, s.meas_a[x].element(a), s.meas_b[y].element(b)).re)
}

/// Correlation of `|Φ⁺_d⟩`: `P(a,b|x,y) = tr(E_{a|x}ᵀ F_{b|y}) / d`.
pub fn born_mes(d: usize, meas_a: &[Povm; 2], meas_b: &[Povm; 2]) -> Result<Correlation, StrategyError> {
    if d < 2 {
        return Err(StrategyError::OutOfRange(format!("d = {d} < 2")));
    }
    if meas_a.iter().chain(meas_b.iter()).any(|m| m.dim() != d) {
        return Err(StrategyError::DimensionMismatch(format!(
            "measurements are not {d}-dimensional"
        )));
    }
    Ok(Correlation::from_fn(|a, b, x, y| {
        (meas_a[x].element(a).transpose() * meas_b[y].element(b)).trace().re / d as f64
    }))
}

/// Entropy (bits) of the reduced state of a pure bipartite state.
pub fn entanglement_of_formation(psi: &PureState) -> f64 {
    let probs: Vec<f64> = psi.schmidt_coefficients().iter().map(|s| s * s).collect();
    linalg::entropy_bits(&probs)
}

/// Outcome of the vanishing-probability commutation check for maximally entangled states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    /// `tr(Eᵀ F) / d`.
    pub probability: f64,
    /// Whether the probability is small enough for a claim to be made.
    pub applies: bool,
    /// Frobenius norm of `[Eᵀ, F]`.
    pub commutator: f64,
    /// Tolerance the commutator was held to.
    pub commutator_tol: f64,
    pub simultaneously_diagonalizable: bool,
}

/// If `tr(Eᵀ F)/d ≤ tol`, checks that `Eᵀ` and `F` commute and so share an eigenbasis.
///
/// From `tr(Eᵀ F) = ‖√Eᵀ √F‖²` the product `√Eᵀ √F` has norm at most `√(d·tol)`;
/// the commutator `[Eᵀ, F]` is bounded by twice that, which is the derived tolerance.
pub fn lemma3_check(e: &CMat, f: &CMat, tol: f64) -> Result<Lemma3Report, StrategyError> {
    let d = e.nrows();
    if f.nrows() != d || !e.is_square() || !f.is_square() {
        return Err(StrategyError::DimensionMismatch("lemma3 operands".into()));
    }
    for m in [e, f] {
        if !is_hermitian(m, 1e-10) {
            return Err(StrategyError::NotHermitian);
        }
        let (vals, _) = eigh(m);
        if vals[0] < -1e-12 || vals[d - 1] > 1.0 + 1e-12 {
            return Err(StrategyError::NotPovm("element not between 0 and identity".into()));
        }
    }
    let et = e.transpose();
    let probability = (&et * f).trace().re / d as f64;
    let commutator = (&et * f - f * &et).norm();
    let commutator_tol = 2.0 * (d as f64 * tol.max(0.0)).sqrt() + 1e-12;
    let applies = probability <= tol;
    Ok(Lemma3Report {
        probability,
        applies,
        commutator,
        commutator_tol,
        simultaneously_diagonalizable: applies && commutator <= commutator_tol,
    })
}

/// Rank-one projector onto the qubit state `cos(t)|0⟩ + e^{iφ} sin(t)|1⟩`.
pub fn qubit_projector(t: f64, phase: f64) -> CMat {
    let v = CVec::from_vec(vec![linalg::re(t.cos()), c(phase.cos(), phase.sin()) * t.sin()]);
    &v * v.adjoint()
}

// JSON form: {"state": {"dims": [dA, dB], "amps": [[re, im], ...]}, "measA": [...], "measB": [...]}
// where each measurement is a list of POVM elements given as dense complex matrices.

type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct StateJson {
    dims: [usize; 2],
    amps: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
pub struct StrategyJson {
    state: StateJson,
    #[serde(rename = "measA")]
    meas_a: Vec<Vec<MatrixJson>>,
    #[serde(rename = "measB")]
    meas_b: Vec<Vec<MatrixJson>>,
}

/// Either an explicit strategy or a catalog name such as `{"named": "hardy"}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyInput {
    Named { named: String },
    Explicit(StrategyJson),
}

fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(m: &MatrixJson) -> Result<CMat, StrategyError> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(StrategyError::DimensionMismatch("matrix is not square".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(m[i][j][0], m[i][j][1])))
}

impl Strategy {
    pub fn to_json(&self) -> StrategyJson {
        let (da, db) = self.state.dims();
        let meas = |ms: &[Povm; 2]| {
            ms.iter()
                .map(|m| m.elements().iter().map(matrix_to_json).collect())
                .collect()
        };
        StrategyJson {
            state: StateJson {
                dims: [da, db],
                amps: self.state.amps().iter().map(|z| [z.re, z.im]).collect(),
            },
            meas_a: meas(&self.meas_a),
            meas_b: meas(&self.meas_b),
        }
    }

    pub fn from_json(j: &StrategyJson) -> Result<Self, StrategyError> {
        let dims = (j.state.dims[0], j.state.dims[1]);
        let amps = CVec::from_iterator(j.state.amps.len(), j.state.amps.iter().map(|z| c(z[0], z[1])));
        let state = PureState::new(dims, amps)?;
        let meas = |ms: &Vec<Vec<MatrixJson>>| -> Result<[Povm; 2], StrategyError> {
            if ms.len() != 2 {
                return Err(StrategyError::DimensionMismatch("expected two measurements".into()));
            }
            let mut out = Vec::with_capacity(2);
            for m in ms {
                let elements = m.iter().map(matrix_from_json).collect::<Result<Vec<_>, _>>()?;
                out.push(Povm::new(elements)?);
            }
            let second = out.pop().expect("two");
            let first = out.pop().expect("two");
            Ok([first, second])
        };
        Strategy::new(state, meas(&j.meas_a)?, meas(&j.meas_b)?)
    }
}

impl StrategyInput {
    pub fn resolve(&self) -> Result<Strategy, StrategyError> {
        match self {
            StrategyInput::Explicit(j) => Strategy::from_json(j),
            StrategyInput::Named { named } => {
                let point: NamedPoint = named.parse()?;
                named_point(point)
                    .0
                    .ok_or_else(|| StrategyError::BadReference(format!("{named} has no quantum strategy")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::{validate, ClassLabel};
    use crate::linalg::{pauli_x, pauli_z, real_mat};

    #[test]
    fn product_state_born() {
        let psi = PureState::from_real((2, 2), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = Strategy::from_observables(psi, [pauli_z(), pauli_x()], [pauli_z(), pauli_x()]).unwrap();
        let p = born(&s);
        assert!((p.get(0, 0, 0, 0) - 1.0).abs() < 1e-15);
        assert!(validate(&p, 1e-12).unwrap().all());
    }

    #[test]
    fn mes_sigma_z() {
        let z = Povm::from_observable(pauli_z()).unwrap();
        let p = born_mes(2, &[z.clone(), z.clone()], &[z.clone(), z]).unwrap();
        assert!((p.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((p.get(1, 1, 0, 0) - 0.5).abs() < 1e-15);
        assert!(p.get(0, 1, 0, 0).abs() < 1e-15);
    }

    #[test]
    fn state_checks() {
        assert!(matches!(
            PureState::new((2, 2), CVec::zeros(4)),
            Err(StrategyError::NotNormalized(_))
        ));
        assert!(PureState::from_real((2, 3), &[1.0; 4]).is_err());
    }

    #[test]
    fn observable_checks() {
        assert!(Observable::new(real_mat(2, 2, &[1.0, 0.5, 0.0, -1.0])).is_err());
        assert!(Observable::new(real_mat(2, 2, &[0.5, 0.0, 0.0, -1.0])).is_err());
        let p = Observable::new(pauli_x()).unwrap().to_povm();
        assert!(p.is_projective(1e-12));
        assert!(Povm::new(vec![identity(2)]).is_err());
    }

    #[test]
    fn lemma3_cases() {
        let e = real_mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let f = real_mat(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(lemma3_check(&e, &f, 1e-12).unwrap().simultaneously_diagonalizable);
        let g = real_mat(2, 2, &[0.5, 0.0, 0.0, 0.1]);
        let r = lemma3_check(&e, &g, 0.1).unwrap();
        assert!(!r.applies);
    }

    #[test]
    fn json_roundtrip() {
        let (s, _) = named_point(NamedPoint::Hardy);
        let s = s.unwrap();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back: StrategyInput = serde_json::from_str(&text).unwrap();
        let s2 = back.resolve().unwrap();
        assert!(born(&s).max_abs_diff(&born(&s2)) < 1e-15);
        let named: StrategyInput = serde_json::from_str(r#"{"named":"hardy"}"#).unwrap();
        assert_eq!(
            crate::corrgeom::classify_zero_class(&born(&named.resolve().unwrap()), 1e-9),
            ClassLabel::ThreeA
        );
    }
}
