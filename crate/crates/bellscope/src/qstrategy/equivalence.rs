//! Local-unitary equivalence of two projective strategies.
//!
//! In Schmidt coordinates of both states, any pair `(u_A, u_B)` carrying one state to the
//! other is block diagonal over groups of equal Schmidt coefficients, with Bob's support
//! block fixed by Alice's. The measurement transport conditions are then linear in the
//! remaining blocks, so the candidates form the null space of a linear map. A generic
//! member of that space is invertible whenever a unitary solution exists, and its polar
//! factor is again a solution because intertwiners of Hermitian families commute with
//! their own absolute value.

use super::{Strategy, StrategyError};
use crate::linalg::{null_space, polar_unitary, CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Schmidt coefficients closer than this share a degenerate block.
const GROUP_TOL: f64 = 1e-8;

struct Schmidt {
    u: CMat,
    sigma: Vec<f64>,
    v: CMat,
}

/// Full SVD `C = U Σ V†` with square unitaries and descending `Σ`.
fn schmidt(coeff: &CMat) -> Schmidt {
    let (da, db) = coeff.shape();
    let n = da.max(db);
    // Pad to square so nalgebra returns complete unitaries.
    let mut padded = CMat::zeros(n, n);
    padded.view_mut((0, 0), (da, db)).copy_from(coeff);
    let svd = padded.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = CMat::from_fn(n, n, |i, j| u[(i, order[j])]);
    let v = CMat::from_fn(n, n, |i, j| vt[(order[j], i)].conj());
    let sigma = order.iter().map(|&k| svd.singular_values[k]).collect();
    Schmidt {
        u: u.view((0, 0), (da, da)).into_owned(),
        sigma,
        v: v.view((0, 0), (db, db)).into_owned(),
    }
}

/// Unknown layout: one full block per nonzero Schmidt group, then Alice's and Bob's kernel blocks.
struct Layout {
    groups: Vec<(usize, usize)>,
    rank: usize,
    da: usize,
    db: usize,
}

impl Layout {
    fn new(sigma: &[f64], da: usize, db: usize, tol: f64) -> Self {
        let mut groups = Vec::new();
        let mut start = 0;
        let rank = sigma.iter().take(da.min(db)).filter(|s| **s > tol).count();
        for k in 1..=rank {
            if k == rank || sigma[k - 1] - sigma[k] > GROUP_TOL {
                groups.push((start, k - start));
                start = k;
            }
        }
        Layout { groups, rank, da, db }
    }

    fn kernel_a(&self) -> usize {
        self.da - self.rank
    }

    fn kernel_b(&self) -> usize {
        self.db - self.rank
    }

    fn unknowns(&self) -> usize {
        self.groups.iter().map(|(_, s)| s * s).sum::<usize>() + self.kernel_a().pow(2) + self.kernel_b().pow(2)
    }

    /// Alice's `W_A` and Bob's `Y` (with `Y` on the support equal to `W_gᵀ`) from an unknown vector.
    fn unpack(&self, z: &[C64]) -> (CMat, CMat) {
        let mut wa = CMat::zeros(self.da, self.da);
        let mut y = CMat::zeros(self.db, self.db);
        let mut k = 0;
        for &(off, size) in &self.groups {
            for i in 0..size {
                for j in 0..size {
                    wa[(off + i, off + j)] = z[k];
                    y[(off + j, off + i)] = z[k];
                    k += 1;
                }
            }
        }
        let (ka, kb) = (self.kernel_a(), self.kernel_b());
        for i in 0..ka {
            for j in 0..ka {
                wa[(self.rank + i, self.rank + j)] = z[k];
                k += 1;
            }
        }
        for i in 0..kb {
            for j in 0..kb {
                y[(self.rank + i, self.rank + j)] = z[k];
                k += 1;
            }
        }
        (wa, y)
    }
}

fn check_projective(s: &Strategy, tol: f64) -> Result<(), StrategyError> {
    if s.is_projective(tol.max(1e-10)) {
        Ok(())
    } else {
        Err(StrategyError::NotProjective)
    }
}

fn max_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn unit_determinant(u: CMat) -> CMat {
    let d = u.nrows() as f64;
    let det = u.determinant();
    let phase = C64::from_polar(1.0, -det.arg() / d);
    u * phase
}

/// Finds `(u_A, u_B)` with `u_A ⊗ u_B |ψ₁⟩ = |ψ₂⟩` up to global phase and
/// `u M₁ u† = M₂` for every measurement element, each within `tol`.
///
/// Both unitaries are normalized to unit determinant. Returns `Ok(None)` when the
/// strategies are not locally equivalent.
pub fn local_unitary_equivalent(s1: &Strategy, s2: &Strategy, tol: f64) -> Result<Option<(CMat, CMat)>, StrategyError> {
    if s1.state.dims() != s2.state.dims() {
        return Err(StrategyError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            s1.state.dims(),
            s2.state.dims()
        )));
    }
    check_projective(s1, tol)?;
    check_projective(s2, tol)?;
    let (da, db) = s1.state.dims();
    let f1 = schmidt(&s1.state.coefficient_matrix());
    let f2 = schmidt(&s2.state.coefficient_matrix());
    let spectrum_gap = f1
        .sigma
        .iter()
        .zip(&f2.sigma)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if spectrum_gap > tol {
        return Ok(None);
    }
    let layout = Layout::new(&f1.sigma, da, db, tol.max(1e-12));

    // Observables in Schmidt coordinates: Alice's as U† A U, Bob's as Vᵀ B V̄.
    let alice = |s: &Strategy, f: &Schmidt, x| f.u.adjoint() * s.observable_a(x) * &f.u;
    let bob = |s: &Strategy, f: &Schmidt, y| f.v.transpose() * s.observable_b(y) * f.v.conjugate();
    let a1: Vec<CMat> = (0..2).map(|x| alice(s1, &f1, x)).collect();
    let a2: Vec<CMat> = (0..2).map(|x| alice(s2, &f2, x)).collect();
    let b1: Vec<CMat> = (0..2).map(|y| bob(s1, &f1, y)).collect();
    let b2: Vec<CMat> = (0..2).map(|y| bob(s2, &f2, y)).collect();

    // Residual map z ↦ (W_A A₁ − A₂ W_A, B₁ Y − Y B₂), assembled column by column.
    let n = layout.unknowns();
    let rows = 2 * (da * da + db * db);
    let residual = |z: &[C64]| -> Vec<C64> {
        let (wa, y) = layout.unpack(z);
        let mut out = Vec::with_capacity(rows);
        for x in 0..2 {
            out.extend((&wa * &a1[x] - &a2[x] * &wa).iter().cloned());
        }
        for k in 0..2 {
            out.extend((&b1[k] * &y - &y * &b2[k]).iter().cloned());
        }
        out
    };
    let mut system = CMat::zeros(rows, n);
    let mut unit = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        unit[j] = C64::new(1.0, 0.0);
        for (i, v) in residual(&unit).into_iter().enumerate() {
            system[(i, j)] = v;
        }
        unit[j] = C64::new(0.0, 0.0);
    }
    let kernel = null_space(&system, (10.0 * tol).max(1e-10));
    if kernel.ncols() == 0 {
        return Ok(None);
    }

    // Fixed seed: the answer is unique up to the commutant, and runs should be reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let weights: Vec<C64> = (0..kernel.ncols())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let z: Vec<C64> = (0..n)
        .map(|i| (0..kernel.ncols()).map(|j| kernel[(i, j)] * weights[j]).sum())
        .collect();
    let (wa, y) = layout.unpack(&z);
    if wa.determinant().norm() < 1e-12 || y.determinant().norm() < 1e-12 {
        return Ok(None);
    }
    let wa = polar_unitary(&wa);
    let y = polar_unitary(&y);

    // Back to the computational frame: u_A = U₂ W_A U₁†, u_B = V̄₂ Y† V₁ᵀ.
    let ua = &f2.u * wa * f1.u.adjoint();
    let ub = f2.v.conjugate() * y.adjoint() * f1.v.transpose();
    let ua = unit_determinant(ua);
    let ub = unit_determinant(ub);

    Ok(verify(s1, s2, &ua, &ub, tol).then_some((ua, ub)))
}

fn verify(s1: &Strategy, s2: &Strategy, ua: &CMat, ub: &CMat, tol: f64) -> bool {
    let state_ok = 1.0 - s1.state.transformed(ua, ub).fidelity(&s2.state) <= tol;
    let meas_ok = (0..2).all(|k| {
        (0..2).all(|o| {
            let ma = ua * s1.meas_a[k].element(o) * ua.adjoint() - s2.meas_a[k].element(o);
            let mb = ub * s1.meas_b[k].element(o) * ub.adjoint() - s2.meas_b[k].element(o);
            max_entry(&ma) <= tol && max_entry(&mb) <= tol
        })
    });
    state_ok && meas_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::ClassLabel;
    use crate::linalg::{identity, pauli_z};
    use crate::qstrategy::{family, named_point, NamedConstants, NamedPoint, PureState, StrategyParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn up_to_phase(u: &CMat, v: &CMat) -> bool {
        let overlap = (u.adjoint() * v).trace();
        (overlap.norm() - u.nrows() as f64).abs() < 1e-9
    }

    #[test]
    fn identity_on_self() {
        for p in NamedPoint::BOUNDARY {
            let s = named_point(p).0.unwrap();
            let (ua, ub) = local_unitary_equivalent(&s, &s, 1e-9).unwrap().unwrap_or_else(|| panic!("{}", p.as_str()));
            assert!(up_to_phase(&ua, &identity(2)) && up_to_phase(&ub, &identity(2)), "{p}");
        }
    }

    #[test]
    fn sign_flipped_maximizer() {
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
        let (ua, ub) = local_unitary_equivalent(&flipped, &reference, 1e-9).unwrap().unwrap();
        // diag(sgn cos α, sgn sin α) for the flipped angles is σ_z on both sides.
        assert!(up_to_phase(&ua, &pauli_z()));
        assert!(up_to_phase(&ub, &pauli_z()));
        assert!((ua.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn perturbed_state_is_inequivalent() {
        let hardy = named_point(NamedPoint::Hardy).0.unwrap();
        let amps = hardy.state.amps().clone();
        let mut bent = amps.clone();
        bent[1] += C64::new(0.05, 0.0);
        let other = Strategy {
            state: PureState::normalized((2, 2), bent).unwrap(),
            ..hardy.clone()
        };
        assert!(local_unitary_equivalent(&hardy, &other, 1e-9).unwrap().is_none());
    }

    #[test]
    fn random_conjugation_recovered() {
        let s = named_point(NamedPoint::Q3).0.unwrap();
        let ua = unit_determinant(crate::linalg::polar_unitary(&CMat::from_fn(2, 2, |i, j| {
            C64::new((i + 2 * j) as f64 * 0.7 - 0.4, (i * j) as f64 + 0.3)
        })));
        let ub = unit_determinant(crate::linalg::polar_unitary(&CMat::from_fn(2, 2, |i, j| {
            C64::new(i as f64 - 0.2 * j as f64, 0.5 - (i + j) as f64)
        })));
        let moved = Strategy::from_observables(
            s.state.transformed(&ua, &ub),
            [0, 1].map(|x| &ua * s.observable_a(x) * ua.adjoint()),
            [0, 1].map(|y| &ub * s.observable_b(y) * ub.adjoint()),
        )
        .unwrap();
        let (fa, fb) = local_unitary_equivalent(&s, &moved, 1e-9).unwrap().unwrap();
        assert!(up_to_phase(&fa, &ua) && up_to_phase(&fb, &ub));
    }

    #[test]
    fn maximally_entangled_degenerate_spectrum() {
        let s = named_point(NamedPoint::Chsh).0.unwrap();
        let s2 = named_point(NamedPoint::Chsh2).0.unwrap();
        assert!(local_unitary_equivalent(&s, &s, 1e-9).unwrap().is_some());
        // Negating only Alice's observables changes the correlation.
        assert!(local_unitary_equivalent(&s, &s2, 1e-9).unwrap().is_none());
    }

    #[test]
    fn rejects_noisy() {
        let noisy = crate::qstrategy::noisy_class2a(0.3).unwrap();
        assert!(matches!(
            local_unitary_equivalent(&noisy, &noisy, 1e-9),
            Err(StrategyError::NotProjective)
        ));
    }
}
