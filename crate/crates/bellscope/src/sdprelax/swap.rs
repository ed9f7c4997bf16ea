//! SWAP-circuit figures of merit written as polynomials in the box observables.
//!
//! Per party, `σ̃_x` and `σ̃_z` are the linear combinations of `O₀, O₁` fixed by the
//! reference angles, `P_± = (1 ± σ̃_z)/2`, and the local gate `Φ = U V U` has ancilla
//! blocks `Φ₀₀ = P₊`, `Φ₀₁ = P₋σ̃_x`, `Φ₁₀ = σ̃_x P₋`, `Φ₁₁ = σ̃_x P₊ σ̃_x`.

use super::words::{Monomial, Party, Polynomial, Word};
use super::SdpError;
use crate::qstrategy::{swap_reference_frame, Strategy};

struct LocalGate {
    blocks: [[Polynomial; 2]; 2],
}

fn pauli_polys(party: Party, x: [f64; 2], z: [f64; 2]) -> (Polynomial, Polynomial) {
    let comb = |c: [f64; 2]| Polynomial::letter(party, 0, c[0]).add(&Polynomial::letter(party, 1, c[1]));
    (comb(x), comb(z))
}

fn local_gate(party: Party, x: [f64; 2], z: [f64; 2]) -> LocalGate {
    let (sx, sz) = pauli_polys(party, x, z);
    let one = Polynomial::constant(1.0);
    let p_plus = one.add(&sz).scale(0.5);
    let p_minus = one.sub(&sz).scale(0.5);
    LocalGate {
        blocks: [
            [p_plus.clone(), p_minus.mul(&sx)],
            [sx.mul(&p_minus), sx.mul(&p_plus).mul(&sx)],
        ],
    }
}

fn frame_for(reference: &Strategy, party: Party) -> Result<(LocalGate, [f64; 2]), SdpError> {
    let frame = swap_reference_frame(reference).map_err(|e| SdpError::UnsupportedReference(e.to_string()))?;
    let (comb, angles) = match party {
        Party::A => (frame.alice(), frame.angles_a),
        Party::B => (frame.bob(), frame.angles_b),
    };
    Ok((local_gate(party, comb.x, comb.z), angles))
}

/// Real amplitudes `ψ̃_{kl}` of the reference state.
fn real_amplitudes(reference: &Strategy) -> Result<[[f64; 2]; 2], SdpError> {
    let cm = reference.state.coefficient_matrix();
    if cm.nrows() != 2 || cm.ncols() != 2 {
        return Err(SdpError::UnsupportedReference(
            "reference state must be two qubits".into(),
        ));
    }
    // A global phase is harmless; remove it using the largest amplitude.
    let pivot = cm.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).copied().unwrap();
    let phase = pivot / pivot.norm();
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            let v = cm[(k, l)] / phase;
            if v.im.abs() > 1e-12 {
                return Err(SdpError::UnsupportedReference(
                    "reference state has complex amplitudes".into(),
                ));
            }
            out[k][l] = v.re;
        }
    }
    Ok(out)
}

/// `⟨ψ̃| tr_AB[Φ (ρ ⊗ |00⟩⟨00|) Φ†] |ψ̃⟩ = ⟨O†O⟩` with `O = Σ ψ̃_{kl} Φ^A_{k0} ⊗ Φ^B_{l0}`.
///
/// Words reach length 4 per party, so a level-2 moment matrix already holds every term.
pub fn expand_swap_objective(reference: &Strategy) -> Result<Polynomial, SdpError> {
    let amps = real_amplitudes(reference)?;
    let (gate_a, _) = frame_for(reference, Party::A)?;
    let (gate_b, _) = frame_for(reference, Party::B)?;
    let mut o = Polynomial::default();
    for (k, row) in amps.iter().enumerate() {
        for (l, &amp) in row.iter().enumerate() {
            if amp != 0.0 {
                o = o.add(&gate_a.blocks[k][0].mul(&gate_b.blocks[l][0]).scale(amp));
            }
        }
    }
    Ok(o.adjoint().mul(&o))
}

/// Measurement figure of merit for one party:
/// `T = ½ Σ_{x,a} P(a|x, φ_{a|x}) − 1`, where `P(a|x, φ) = Σ_i ⟨Q_i† M_{a|x} Q_i⟩`,
/// `Q_i = Σ_j Φ_{ij} φ_j` and `φ_{a|x}` is the reference eigenvector for outcome `a`.
#[derive(Clone, Debug)]
pub struct MeasMerit {
    pub party: Party,
    terms: Vec<MeritTerm>,
}

#[derive(Clone, Debug)]
struct MeritTerm {
    /// `Σ_i Q_i† M_{a|x} Q_i`.
    weighted: Polynomial,
    /// `Σ_i Q_i† Q_i`.
    norm: Polynomial,
}

/// Eigenvector of `sin t σ_z + cos t σ_x` for eigenvalue `(−1)^a`.
fn reference_eigenvector(t: f64, a: usize) -> [f64; 2] {
    let h = std::f64::consts::FRAC_PI_4 - t / 2.0;
    if a == 0 {
        [h.cos(), h.sin()]
    } else {
        [-h.sin(), h.cos()]
    }
}

pub fn meas_merit(reference: &Strategy, party: Party) -> Result<MeasMerit, SdpError> {
    let (gate, angles) = frame_for(reference, party)?;
    let mut terms = Vec::with_capacity(4);
    for (x, &t) in angles.iter().enumerate() {
        for a in 0..2 {
            let phi = reference_eigenvector(t, a);
            let sign = if a == 0 { 1.0 } else { -1.0 };
            let povm = Polynomial::constant(0.5).add(&Polynomial::letter(party, x, 0.5 * sign));
            let mut weighted = Polynomial::default();
            let mut norm = Polynomial::default();
            for i in 0..2 {
                let q = gate.blocks[i][0].scale(phi[0]).add(&gate.blocks[i][1].scale(phi[1]));
                let qd = q.adjoint();
                weighted = weighted.add(&qd.mul(&povm).mul(&q));
                norm = norm.add(&qd.mul(&q));
            }
            terms.push(MeritTerm { weighted, norm });
        }
    }
    Ok(MeasMerit { party, terms })
}

impl MeasMerit {
    pub fn polynomial(&self) -> Polynomial {
        self.terms
            .iter()
            .fold(Polynomial::constant(-1.0), |acc, t| acc.add(&t.weighted.scale(0.5)))
    }

    pub fn evaluate(&self, moment: impl Fn(&Monomial) -> f64) -> f64 {
        self.polynomial().evaluate(moment)
    }

    /// Value with every `M_{a|x}` replaced by `1/2` while the gate keeps the given moments.
    pub fn evaluate_trivial(&self, moment: impl Fn(&Monomial) -> f64) -> f64 {
        let total: f64 = self.terms.iter().map(|t| 0.25 * t.norm.evaluate(&moment)).sum();
        total - 1.0
    }

    /// Rows needed on top of the level-ℓ matrix: the party's words of length 3 and 4.
    pub fn extra_rows(&self) -> Vec<Monomial> {
        [3, 4]
            .iter()
            .flat_map(|&len| Word::of_length(len))
            .map(|w| match self.party {
                Party::A => Monomial::alice(w),
                Party::B => Monomial::bob(w),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstrategy::{named_point, swap_isometry_check, NamedPoint};
    use crate::sdprelax::RelaxationProblem;

    #[test]
    fn ideal_reference_scores_one() {
        for p in NamedPoint::BOUNDARY {
            let s = named_point(p).0.unwrap();
            let f = expand_swap_objective(&s).unwrap();
            let prob = RelaxationProblem::new(2).unwrap();
            let y = prob.exact_moments(&s);
            let val = prob.linear_form(&f).unwrap().evaluate(&y);
            assert!((val - 1.0).abs() < 1e-9, "{p}: {val}");
            assert!((val - swap_isometry_check(&s, &s).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn measurement_merit_ideal_and_trivial() {
        for p in NamedPoint::BOUNDARY {
            let s = named_point(p).0.unwrap();
            for party in [Party::A, Party::B] {
                let merit = meas_merit(&s, party).unwrap();
                let prob = RelaxationProblem::with_extra_rows(3, &merit.extra_rows()).unwrap();
                let y = prob.exact_moments(&s);
                let moment = |m: &Monomial| y[prob.variable(m).unwrap()];
                let ideal = merit.evaluate(moment);
                let trivial = merit.evaluate_trivial(moment);
                assert!((ideal - 1.0).abs() < 1e-9, "{p} {party:?}: {ideal}");
                assert!(trivial.abs() < 1e-9, "{p} {party:?}: {trivial}");
            }
        }
    }

    #[test]
    fn eigenvectors_match_reference_observable() {
        for t in [0.3, -1.2, 2.0] {
            for a in 0..2 {
                let v = reference_eigenvector(t, a);
                let sign = if a == 0 { 1.0 } else { -1.0 };
                let av = [t.sin() * v[0] + t.cos() * v[1], t.cos() * v[0] - t.sin() * v[1]];
                assert!((av[0] - sign * v[0]).abs() < 1e-14 && (av[1] - sign * v[1]).abs() < 1e-14);
            }
        }
    }
}
