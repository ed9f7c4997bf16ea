//! The SWAP isometry built from a party's own observables.
//!
//! For reference observables `Ã_i = cos t_i σ_x + sin t_i σ_z` the combinations
//! `σ̃_x = (−sin t₁ A₀ + sin t₀ A₁)/D` and `σ̃_z = (cos t₁ A₀ − cos t₀ A₁)/D`,
//! `D = sin(t₀ − t₁)`, reduce to the Pauli matrices on the reference itself. The local gate
//! `Φ = U V U` with `U = 1⊗|0⟩⟨0| + σ̃_x⊗|1⟩⟨1|` and `V = (1+σ̃_z)/2⊗1 + (1−σ̃_z)/2⊗σ_x`
//! is then the swap of the box with a trusted qubit.

use super::{catalog::reference_angle, PureState, Strategy, StrategyError};
use crate::linalg::{identity, kron, pauli_x, CMat, C64};
use serde::{Deserialize, Serialize};

/// Angles of a reference strategy's observables and the derived σ̃ coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapFrame {
    pub angles_a: [f64; 2],
    pub angles_b: [f64; 2],
}

/// `σ̃_x = x[0] O₀ + x[1] O₁`, `σ̃_z = z[0] O₀ + z[1] O₁` for one party.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliCombination {
    pub x: [f64; 2],
    pub z: [f64; 2],
}

impl PauliCombination {
    fn from_angles(t: [f64; 2]) -> Self {
        let d = (t[0] - t[1]).sin();
        PauliCombination {
            x: [-t[1].sin() / d, t[0].sin() / d],
            z: [t[1].cos() / d, -t[0].cos() / d],
        }
    }

    pub fn sigma_x(&self, o: &[CMat; 2]) -> CMat {
        o[0].scale(self.x[0]) + o[1].scale(self.x[1])
    }

    pub fn sigma_z(&self, o: &[CMat; 2]) -> CMat {
        o[0].scale(self.z[0]) + o[1].scale(self.z[1])
    }
}

impl SwapFrame {
    pub fn alice(&self) -> PauliCombination {
        PauliCombination::from_angles(self.angles_a)
    }

    pub fn bob(&self) -> PauliCombination {
        PauliCombination::from_angles(self.angles_b)
    }
}

/// Reads the observable angles of a qubit reference strategy.
pub fn swap_reference_frame(reference: &Strategy) -> Result<SwapFrame, StrategyError> {
    if reference.state.dims() != (2, 2) {
        return Err(StrategyError::DimensionMismatch("reference must be two qubits".into()));
    }
    let angles = |obs: [CMat; 2]| -> Result<[f64; 2], StrategyError> {
        let t = [reference_angle(&obs[0])?, reference_angle(&obs[1])?];
        if (t[0] - t[1]).sin().abs() < 1e-9 {
            return Err(StrategyError::BadReference("commuting reference observables".into()));
        }
        Ok(t)
    };
    Ok(SwapFrame {
        angles_a: angles([reference.observable_a(0), reference.observable_a(1)])?,
        angles_b: angles([reference.observable_b(0), reference.observable_b(1)])?,
    })
}

/// `Φ = U V U` on box ⊗ ancilla.
fn local_gate(comb: &PauliCombination, obs: &[CMat; 2]) -> CMat {
    let d = obs[0].nrows();
    let one = identity(d);
    let p0 = crate::linalg::real_mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let p1 = crate::linalg::real_mat(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let sx = comb.sigma_x(obs);
    let sz = comb.sigma_z(obs);
    let u = kron(&one, &p0) + kron(&sx, &p1);
    let v = kron(&(&one + &sz).unscale(2.0), &identity(2)) + kron(&(&one - &sz).unscale(2.0), &pauli_x());
    &u * v * &u
}

/// Fidelity `⟨ψ̃| tr_AB[Φ (|ψ⟩⟨ψ| ⊗ |00⟩⟨00|) Φ†] |ψ̃⟩` of the swapped state of `s` with
/// the reference state, where `Φ` is built from `s`'s own observables `2M_{0|x} − 1`.
pub fn swap_isometry_check(s: &Strategy, reference: &Strategy) -> Result<f64, StrategyError> {
    let frame = swap_reference_frame(reference)?;
    let (da, db) = s.state.dims();
    let obs_a = [s.observable_a(0), s.observable_a(1)];
    let obs_b = [s.observable_b(0), s.observable_b(1)];
    let phi_a = local_gate(&frame.alice(), &obs_a);
    let phi_b = local_gate(&frame.bob(), &obs_b);
    Ok(swapped_overlap(&s.state, &reference.state, &phi_a, &phi_b, da, db))
}

/// `Σ_{a,b} |Σ_{a',b'} ψ̃*_{a'b'} Φ_A[(a,a'),(c,0)] Φ_B[(b,b'),(e,0)] ψ_{ce}|²`.
fn swapped_overlap(psi: &PureState, target: &PureState, phi_a: &CMat, phi_b: &CMat, da: usize, db: usize) -> f64 {
    let cm = psi.coefficient_matrix();
    let t = target.coefficient_matrix();
    let mut total = 0.0;
    for a in 0..da {
        for b in 0..db {
            let mut amp = C64::new(0.0, 0.0);
            for ap in 0..2 {
                for bp in 0..2 {
                    let w = t[(ap, bp)].conj();
                    if w.norm() == 0.0 {
                        continue;
                    }
                    // Ancillas start in |0⟩, so only input columns (c, 0) and (e, 0) contribute.
                    let ga = CMat::from_fn(1, da, |_, cidx| phi_a[(2 * a + ap, 2 * cidx)]);
                    let gb = CMat::from_fn(1, db, |_, eidx| phi_b[(2 * b + bp, 2 * eidx)]);
                    amp += w * (ga * &cm * gb.transpose())[(0, 0)];
                }
            }
            total += amp.norm_sqr();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::ClassLabel;
    use crate::linalg::{pauli_z, real_mat};
    use crate::qstrategy::{family, named_point, NamedConstants, NamedPoint, StrategyParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn reference_swaps_perfectly() {
        for p in NamedPoint::BOUNDARY {
            let s = named_point(p).0.unwrap();
            let f = swap_isometry_check(&s, &s).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "{p}: {f}");
        }
    }

    #[test]
    fn pauli_combinations_recover_paulis() {
        let s = named_point(NamedPoint::Hardy).0.unwrap();
        let frame = swap_reference_frame(&s).unwrap();
        let obs = [s.observable_a(0), s.observable_a(1)];
        assert!((frame.alice().sigma_x(&obs) - pauli_x()).camax() < 1e-12);
        assert!((frame.alice().sigma_z(&obs) - pauli_z()).camax() < 1e-12);
    }

    #[test]
    fn sign_flipped_maximizer_swaps_perfectly() {
        let k = NamedConstants::get();
        let reference = named_point(NamedPoint::Q).0.unwrap();
        let flipped = family(
            ClassLabel::ThreeB,
            StrategyParams {
                phi: PI,
                ..StrategyParams::new(-k.theta0, -k.alpha0, -(FRAC_PI_2 - k.alpha0))
            },
        )
        .unwrap();
        let f = swap_isometry_check(&flipped, &reference).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
    }

    #[test]
    fn rotated_measurement_loses_fidelity() {
        let hardy = named_point(NamedPoint::Hardy).0.unwrap();
        let a1 = hardy.observable_a(1);
        let t = reference_angle(&a1).unwrap() + 0.1;
        let rotated = real_mat(2, 2, &[t.sin(), t.cos(), t.cos(), -t.sin()]);
        let bent = Strategy::from_observables(
            hardy.state.clone(),
            [hardy.observable_a(0), rotated],
            [hardy.observable_b(0), hardy.observable_b(1)],
        )
        .unwrap();
        let f = swap_isometry_check(&bent, &hardy).unwrap();
        assert!(f < 1.0 - 1e-4, "{f}");
    }

    #[test]
    fn non_reference_form_rejected() {
        let mut s = named_point(NamedPoint::Q3).0.unwrap();
        s.meas_a[1] = super::super::Povm::from_observable(crate::linalg::pauli_y()).unwrap();
        assert!(swap_isometry_check(&s, &s).is_err());
    }
}
