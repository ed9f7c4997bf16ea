//! Strategy families per zero-class and the named points with their closed-form constants.

use super::{PureState, Strategy, StrategyError};
use crate::corrgeom::{mix, pr_box, ClassLabel, Correlation, Relabeling};
use crate::linalg::{c, pauli_x, pauli_z, re, real_mat, CMat, CVec};
use crate::optima::{cubic_roots, CubicPoly};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use super::born;

const CONSTRAINT_TOL: f64 = 1e-9;
const DEGENERATE_TOL: f64 = 1e-12;

/// Angles parameterizing a class family. Unused fields are ignored by families that lack them,
/// except that the phase fields must vanish outside the Class 3b family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub omega_a: f64,
    pub omega_b: f64,
}

impl StrategyParams {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Self {
        StrategyParams {
            theta,
            alpha,
            beta,
            ..Default::default()
        }
    }

    fn has_phases(&self) -> bool {
        [self.gamma_a, self.gamma_b, self.omega_a, self.omega_b]
            .iter()
            .any(|v| *v != 0.0)
    }

    /// Total phase entering the Class 3b correlations; only its cosine matters.
    pub fn zeta(&self) -> f64 {
        (self.gamma_a + self.gamma_b + self.omega_a + self.omega_b + self.phi).cos()
    }

    /// Fills in the dependent angle of a constrained family: `θ` for 3a and 3b, `φ` for 2c.
    /// For 4b the sign of `θ = ±π/4` is taken from `β = ±α` (`+` when both hold).
    pub fn constrained(label: ClassLabel, free: StrategyParams) -> Result<Self, StrategyError> {
        let mut p = free;
        match label {
            ClassLabel::ThreeA => {
                if free.alpha.sin().abs() < DEGENERATE_TOL {
                    return Err(StrategyError::Degenerate(label));
                }
                p.theta = (free.beta.tan() / free.alpha.sin()).atan();
            }
            ClassLabel::ThreeB => {
                let zeta = free.zeta().round();
                if free.beta.tan().abs() < DEGENERATE_TOL || !free.beta.tan().is_finite() {
                    return Err(StrategyError::Degenerate(label));
                }
                p.theta = (zeta * free.alpha.tan() / free.beta.tan()).atan();
            }
            ClassLabel::TwoC => {
                if free.beta.tan().abs() < DEGENERATE_TOL || free.alpha.cos().abs() < DEGENERATE_TOL {
                    return Err(StrategyError::Degenerate(label));
                }
                p.phi = (free.theta.sin() / free.beta.tan() - free.alpha.tan() * free.theta.cos()).atan();
            }
            ClassLabel::FourB => {
                let plus = (free.beta - free.alpha).sin().abs();
                let minus = (free.beta + free.alpha).sin().abs();
                p.theta = if plus <= minus { FRAC_PI_4 } else { -FRAC_PI_4 };
            }
            _ => {}
        }
        Ok(p)
    }
}

/// `cos 2t σ_z − sin 2t σ_x`: `+1` eigenvector `(cos t, −sin t)`.
fn tilted(t: f64) -> CMat {
    pauli_z().scale((2.0 * t).cos()) - pauli_x().scale((2.0 * t).sin())
}

fn state(amps: [f64; 4]) -> PureState {
    PureState::from_real((2, 2), &amps).expect("nonzero two-qubit amplitudes")
}

fn build(psi: PureState, a: [CMat; 2], b: [CMat; 2]) -> Strategy {
    Strategy::from_observables(psi, a, b).expect("catalog observables are dichotomic")
}

fn check(label: ClassLabel, residual: f64) -> Result<(), StrategyError> {
    if residual > CONSTRAINT_TOL || !residual.is_finite() {
        Err(StrategyError::ConstraintViolation { label, residual })
    } else {
        Ok(())
    }
}

fn nondegenerate(label: ClassLabel, angles: &[f64]) -> Result<(), StrategyError> {
    if angles.iter().any(|t| (2.0 * t).sin().abs() < DEGENERATE_TOL) {
        Err(StrategyError::Degenerate(label))
    } else {
        Ok(())
    }
}

/// The two-qubit strategy family of a zero-class at the given parameters.
///
/// * 4b: `cos θ|00⟩ + sin θ|11⟩`, `A_0 = B_0 = σ_z`, tilted `A_1`, `B_1`; requires `θ = ±π/4`, `β = ±α`.
/// * 3a, 2b: `sin θ (cos α|0⟩ − sin α|1⟩)|1⟩ + cos θ|10⟩` with tilted `A_1`, `B_1`;
///   3a requires `tan θ · sin α = tan β`.
/// * 3b: `cos θ|01⟩ + e^{iφ} sin θ|10⟩` with optional measurement phases; requires
///   `cos(γ_A+γ_B+ω_A+ω_B+φ) = ζ = ±1` and `tan θ = ζ tan α / tan β`.
/// * 2a: `cos θ|00⟩ − sin θ|11⟩`, `A_0 = σ_z`, `B_0 = −σ_z`.
/// * 2c, 1: `cos φ (cos θ|01⟩ + sin θ|10⟩) + sin φ|11⟩` with tilted `A_1`, `B_1`;
///   2c requires `tan φ = sin θ / tan β − tan α cos θ`.
pub fn family(label: ClassLabel, p: StrategyParams) -> Result<Strategy, StrategyError> {
    let finite = [
        p.theta, p.alpha, p.beta, p.phi, p.gamma_a, p.gamma_b, p.omega_a, p.omega_b,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite {
        return Err(StrategyError::OutOfRange("non-finite parameter".into()));
    }
    if label != ClassLabel::ThreeB
        && (p.has_phases() || (p.phi != 0.0 && !matches!(label, ClassLabel::TwoC | ClassLabel::One)))
    {
        return Err(StrategyError::ConstraintViolation {
            label,
            residual: p
                .phi
                .abs()
                .max(p.gamma_a.abs())
                .max(p.gamma_b.abs())
                .max(p.omega_a.abs())
                .max(p.omega_b.abs()),
        });
    }
    let (st, sa, sb) = (p.theta, p.alpha, p.beta);
    let z = pauli_z();
    match label {
        ClassLabel::FourB => {
            let resid = [1.0, -1.0]
                .iter()
                .map(|sg: &f64| (st - sg * FRAC_PI_4).sin().abs().max((sb - sg * sa).sin().abs()))
                .fold(f64::INFINITY, f64::min);
            check(label, resid)?;
            let psi = state([st.cos(), 0.0, 0.0, st.sin()]);
            Ok(build(psi, [z.clone(), tilted(sa)], [z, tilted(sb)]))
        }
        ClassLabel::ThreeA | ClassLabel::TwoB => {
            if label == ClassLabel::ThreeA {
                if sa.sin().abs() < DEGENERATE_TOL {
                    return Err(StrategyError::Degenerate(label));
                }
                check(label, (st.sin() * sa.sin() * sb.cos() - st.cos() * sb.sin()).abs())?;
            }
            let psi = state([0.0, st.sin() * sa.cos(), st.cos(), -st.sin() * sa.sin()]);
            Ok(build(psi, [z.clone(), tilted(sa)], [z, tilted(sb)]))
        }
        ClassLabel::ThreeB => {
            nondegenerate(label, &[st, sa, sb])?;
            let zeta = p.zeta();
            if (zeta.abs() - 1.0).abs() > CONSTRAINT_TOL {
                return Err(StrategyError::ConstraintViolation {
                    label,
                    residual: (zeta.abs() - 1.0).abs(),
                });
            }
            let zeta = zeta.signum();
            check(
                label,
                (st.sin() * sa.cos() * sb.sin() - zeta * st.cos() * sa.sin() * sb.cos()).abs(),
            )?;
            let ph = |t: f64| c(t.cos(), t.sin());
            let amps = CVec::from_vec(vec![re(0.0), re(st.cos()), ph(p.phi) * st.sin(), re(0.0)]);
            let psi = PureState::normalized((2, 2), amps)?;
            let ga = p.gamma_a + p.omega_a;
            let gb = p.gamma_b + p.omega_b;
            let (c2a, s2a) = ((2.0 * sa).cos(), (2.0 * sa).sin());
            let (c2b, s2b) = ((2.0 * sb).cos(), (2.0 * sb).sin());
            let a1 = CMat::from_row_slice(2, 2, &[re(c2a), -ph(ga) * s2a, -ph(-ga) * s2a, re(-c2a)]);
            let b1 = CMat::from_row_slice(2, 2, &[re(-c2b), -ph(-gb) * s2b, -ph(gb) * s2b, re(c2b)]);
            Ok(build(psi, [z.clone(), a1], [z, b1]))
        }
        ClassLabel::TwoA => {
            let psi = state([st.cos(), 0.0, 0.0, -st.sin()]);
            let a1 = pauli_z().scale((2.0 * sa).cos()) + pauli_x().scale((2.0 * sa).sin());
            Ok(build(psi, [z.clone(), a1], [-z, tilted(sb)]))
        }
        ClassLabel::TwoC | ClassLabel::One => {
            if label == ClassLabel::TwoC {
                if sb.sin().abs() < DEGENERATE_TOL || sa.cos().abs() < DEGENERATE_TOL {
                    return Err(StrategyError::Degenerate(label));
                }
                let f = p.phi;
                let resid = f.sin() * sb.sin() * sa.cos()
                    - f.cos() * (st.sin() * sb.cos() * sa.cos() - sa.sin() * st.cos() * sb.sin());
                check(label, resid.abs())?;
            }
            let f = p.phi;
            let psi = state([0.0, f.cos() * st.cos(), f.cos() * st.sin(), f.sin()]);
            Ok(build(psi, [z.clone(), tilted(sa)], [z, tilted(sb)]))
        }
        other => Err(StrategyError::UnsupportedLabel(other)),
    }
}

/// Closed-form constants of the catalog, each cross-checked against its defining relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConstants {
    pub nu: f64,
    pub tau: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Cabello-point measurement angle.
    pub alpha_2c: f64,
    /// Cabello-point state angle in the three-parameter family.
    pub theta_2c: f64,
    pub theta0: f64,
    pub alpha0: f64,
    pub hardy_angle: f64,
}

impl NamedConstants {
    pub fn get() -> &'static NamedConstants {
        static CONSTANTS: OnceLock<NamedConstants> = OnceLock::new();
        CONSTANTS.get_or_init(NamedConstants::compute)
    }

    fn compute() -> NamedConstants {
        let s33 = 33f64.sqrt();
        let s78 = 78f64.sqrt();
        let tau = (17.0 + 3.0 * s33).cbrt();
        // tan θ₀ is the real root of t³ + t² + t − 1; the radical form is the Cardano solution.
        let tan_theta0 = smallest_positive(CubicPoly::new(1.0, 1.0, 1.0, -1.0));
        let theta0 = tan_theta0.atan();
        let alpha0 = tan_theta0.sqrt().atan();
        let kappa1 = 0.5 * tan_theta0.powi(3);
        let kappa2 = (1.0 - (2.0 * alpha0).cos()) * theta0.cos().powi(2) / 2.0;
        let kappa3 = (1.0 - 2.0 * kappa1 - 2.0 * kappa2) / 2.0;

        let mu1 = (53.0 - 6.0 * s78).cbrt();
        let mu2 = (67.0 * s78 - 414.0).cbrt();
        let mu3 = (307.0 + 39.0 * s78).cbrt();
        let mu_plus = (359.0 + 12.0 * s78).cbrt();
        let mu_minus = (359.0 - 12.0 * s78).cbrt();
        let k1 = (4.0 - (mu1 * mu1 + 1.0) / mu1) / 6.0;
        let k2 = (1.0 - 31.0 * 36f64.cbrt() / (12.0 * mu2) + 6f64.cbrt() * mu2 / 12.0).sqrt();
        let k3 = ((mu3 * mu3 - 29.0) / mu3 - 2.0) / 6.0;
        let alpha_2c = ((mu_plus + mu_minus - 1.0) / 12.0).sqrt().atan();
        let theta_2c = ((k2 * k2 - k1 * k3) / (k2 * k2 + k3 * k3)).atan();

        NamedConstants {
            nu: 5f64.sqrt() - 2.0,
            tau,
            kappa1,
            kappa2,
            kappa3,
            xi1: smallest_positive(CubicPoly::new(1.0, -9.0, -1.0, 1.0)),
            xi2: smallest_positive(CubicPoly::new(7.0, -35.0, 21.0, -1.0)),
            xi3: smallest_positive(CubicPoly::new(1.0, 26.0, -36.0, -104.0)),
            k1,
            k2,
            k3,
            mu1,
            mu2,
            mu3,
            mu_plus,
            mu_minus,
            alpha_2c,
            theta_2c,
            theta0,
            alpha0,
            hardy_angle: hardy_angle(),
        }
    }
}

fn smallest_positive(p: CubicPoly) -> f64 {
    cubic_roots(&p)
        .expect("catalog cubics have a nonzero leading coefficient")
        .smallest_positive()
        .expect("catalog cubics have a positive root")
}

/// `½ tan⁻¹(−2√(√5+2))`, the symmetric measurement angle of the Hardy point.
pub fn hardy_angle() -> f64 {
    0.5 * (-2.0 * (5f64.sqrt() + 2.0).sqrt()).atan()
}

/// Named points of the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedPoint {
    Hardy,
    Q,
    Q2,
    Q3,
    Cabello,
    Q4,
    Pr,
    Pr2,
    Chsh,
    Chsh2,
    Uniform,
}

impl NamedPoint {
    pub const ALL: [NamedPoint; 11] = [
        NamedPoint::Hardy,
        NamedPoint::Q,
        NamedPoint::Q2,
        NamedPoint::Q3,
        NamedPoint::Cabello,
        NamedPoint::Q4,
        NamedPoint::Pr,
        NamedPoint::Pr2,
        NamedPoint::Chsh,
        NamedPoint::Chsh2,
        NamedPoint::Uniform,
    ];

    /// The six boundary points with a nonlocal quantum strategy.
    pub const BOUNDARY: [NamedPoint; 6] = [
        NamedPoint::Hardy,
        NamedPoint::Q,
        NamedPoint::Q2,
        NamedPoint::Q3,
        NamedPoint::Cabello,
        NamedPoint::Q4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NamedPoint::Hardy => "hardy",
            NamedPoint::Q => "q",
            NamedPoint::Q2 => "q2",
            NamedPoint::Q3 => "q3",
            NamedPoint::Cabello => "cabello",
            NamedPoint::Q4 => "q4",
            NamedPoint::Pr => "pr",
            NamedPoint::Pr2 => "pr2",
            NamedPoint::Chsh => "chsh",
            NamedPoint::Chsh2 => "chsh2",
            NamedPoint::Uniform => "uniform",
        }
    }

    /// Zero-class of the boundary points.
    pub fn class(&self) -> Option<ClassLabel> {
        match self {
            NamedPoint::Hardy => Some(ClassLabel::ThreeA),
            NamedPoint::Q => Some(ClassLabel::ThreeB),
            NamedPoint::Q2 => Some(ClassLabel::TwoA),
            NamedPoint::Q3 => Some(ClassLabel::TwoB),
            NamedPoint::Cabello => Some(ClassLabel::TwoC),
            NamedPoint::Q4 => Some(ClassLabel::One),
            _ => None,
        }
    }
}

impl fmt::Display for NamedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NamedPoint {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, StrategyError> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|ch| !matches!(ch, '_' | '-' | ','))
            .collect();
        NamedPoint::ALL
            .iter()
            .find(|p| p.as_str() == key)
            .copied()
            .ok_or_else(|| StrategyError::UnknownName(s.to_string()))
    }
}

/// Parameters of the named boundary points in their class families.
pub fn named_params(point: NamedPoint) -> Option<(ClassLabel, StrategyParams)> {
    let k = NamedConstants::get();
    let p = match point {
        NamedPoint::Hardy => {
            let h = k.hardy_angle;
            StrategyParams::constrained(ClassLabel::ThreeA, StrategyParams::new(0.0, h, h)).ok()?
        }
        NamedPoint::Q => StrategyParams::new(k.theta0, k.alpha0, FRAC_PI_2 - k.alpha0),
        NamedPoint::Q2 => StrategyParams::new(-FRAC_PI_4, 5.0 * PI / 6.0, -2.0 * PI / 3.0),
        NamedPoint::Q3 => StrategyParams::new(FRAC_PI_4, PI / 6.0, FRAC_PI_4),
        NamedPoint::Cabello => StrategyParams::constrained(
            ClassLabel::TwoC,
            StrategyParams::new(k.theta_2c, k.alpha_2c, FRAC_PI_2 - k.alpha_2c),
        )
        .ok()?,
        _ => return None,
    };
    Some((point.class()?, p))
}

fn cabello_strategy() -> Strategy {
    // Locally rotated form in which the orthogonal complement of the state is spanned by
    // the certificate vectors used for non-exposedness.
    let k = NamedConstants::get();
    let a = k.alpha_2c;
    let (c2, s2) = ((2.0 * a).cos(), (2.0 * a).sin());
    let z = pauli_z();
    let x = pauli_x();
    let psi = state([k.k1, k.k2, k.k2, k.k3]);
    build(
        psi,
        [-z.clone(), x.scale(s2) - z.scale(c2)],
        [z.scale(c2) - x.scale(s2), -z],
    )
}

fn q4_strategy() -> Strategy {
    let k = NamedConstants::get();
    let theta = k.xi2.sqrt().acos();
    let alpha = k.xi1.acos();
    let s = theta.sin() / 2f64.sqrt();
    let psi = state([0.0, s, s, theta.cos()]);
    let tilt = pauli_z().scale(alpha.cos()) + pauli_x().scale(alpha.sin());
    build(psi, [pauli_z(), tilt.clone()], [pauli_z(), tilt])
}

fn tsirelson_strategy(flip_alice: bool) -> Strategy {
    let r = 1.0 / 2f64.sqrt();
    let sg = if flip_alice { -1.0 } else { 1.0 };
    let psi = state([r, 0.0, 0.0, r]);
    let (z, x) = (pauli_z(), pauli_x());
    build(
        psi,
        [z.scale(sg), x.scale(sg)],
        [-(&z + &x).scale(r), (&x - &z).scale(r)],
    )
}

/// Strategy (when quantum) and correlation of a named point.
pub fn named_point(point: NamedPoint) -> (Option<Strategy>, Correlation) {
    let flip_a = Relabeling {
        a_flip: [true, true],
        ..Default::default()
    };
    let pr = pr_box(false, false, true);
    let pr2 = crate::corrgeom::apply_relabeling(&pr, &flip_a);
    let w = 1.0 / 2f64.sqrt();
    let strategy = match point {
        NamedPoint::Pr => return (None, pr),
        NamedPoint::Pr2 => return (None, pr2),
        NamedPoint::Chsh => tsirelson_strategy(false),
        NamedPoint::Chsh2 => tsirelson_strategy(true),
        NamedPoint::Uniform => build(
            state([1.0, 0.0, 0.0, 0.0]),
            [pauli_x(), pauli_x()],
            [pauli_x(), pauli_x()],
        ),
        NamedPoint::Cabello => cabello_strategy(),
        NamedPoint::Q4 => q4_strategy(),
        _ => {
            let (label, p) = named_params(point).expect("boundary point");
            family(label, p).expect("catalog parameters satisfy their constraints")
        }
    };
    let corr = match point {
        // The mixtures are exact by definition; the strategies reproduce them to rounding.
        NamedPoint::Chsh => mix(&[(w, pr), (1.0 - w, Correlation::uniform())]).expect("weights"),
        NamedPoint::Chsh2 => mix(&[(w, pr2), (1.0 - w, Correlation::uniform())]).expect("weights"),
        NamedPoint::Uniform => Correlation::uniform(),
        _ => born(&strategy),
    };
    (Some(strategy), corr)
}

/// Angle `t` of a real reference observable `sin t σ_z + cos t σ_x`.
pub fn reference_angle(obs: &CMat) -> Result<f64, StrategyError> {
    let imag: f64 = obs.iter().map(|z| z.im.abs()).sum();
    let t = obs[(0, 0)].re.atan2(obs[(0, 1)].re);
    let rebuilt = real_mat(2, 2, &[t.sin(), t.cos(), t.cos(), -t.sin()]);
    if obs.nrows() != 2 || imag > 1e-10 || (obs - rebuilt).norm() > 1e-9 {
        return Err(StrategyError::BadReference(
            "observable is not of the form sin t σ_z + cos t σ_x".into(),
        ));
    }
    Ok(t)
}

/// Class-2a Bell-state strategy with Alice's first measurement softened:
/// `M_{0|0} = (1−ε)(1+A_0)/2`.
pub fn noisy_class2a(eps: f64) -> Result<Strategy, StrategyError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(StrategyError::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    let (label, p) = named_params(NamedPoint::Q2).expect("boundary point");
    let base = family(label, p)?;
    let m0 = base.meas_a[0].element(0).scale(1.0 - eps);
    let m1 = crate::linalg::identity(2) - &m0;
    let povm = super::Povm::new(vec![m0, m1])?;
    Strategy::new(base.state.clone(), [povm, base.meas_a[1].clone()], base.meas_b.clone())
}
