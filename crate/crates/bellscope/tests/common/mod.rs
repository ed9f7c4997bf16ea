//! Random strategies shared by the integration suites.
#![allow(dead_code)]

use bellscope::linalg::{c, identity, CMat};
use bellscope::qstrategy::{qubit_projector, Povm, PureState, Strategy};
use nalgebra::DVector;
use rand::Rng;
use std::f64::consts::PI;

pub fn random_state<R: Rng>(rng: &mut R) -> PureState {
    let amps = DVector::from_fn(4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    PureState::normalized((2, 2), amps).expect("nonzero amplitudes")
}

pub fn random_projector<R: Rng>(rng: &mut R) -> CMat {
    qubit_projector(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI))
}

pub fn projective(p: CMat) -> Povm {
    let q = identity(2) - &p;
    Povm::new(vec![p, q]).expect("projector pair")
}

/// Random pure two-qubit state with four random rank-one projective measurements.
pub fn random_qubit_strategy<R: Rng>(rng: &mut R) -> Strategy {
    let state = random_state(rng);
    let meas_a = [projective(random_projector(rng)), projective(random_projector(rng))];
    let meas_b = [projective(random_projector(rng)), projective(random_projector(rng))];
    Strategy::new(state, meas_a, meas_b).expect("valid qubit strategy")
}

/// Same as [`random_qubit_strategy`] with a real state and real projectors.
pub fn random_real_strategy<R: Rng>(rng: &mut R) -> Strategy {
    let amps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let amps: Vec<f64> = amps.iter().map(|a| a / norm).collect();
    let state = PureState::from_real((2, 2), &amps).expect("normalized");
    let mut meas = || projective(qubit_projector(rng.random_range(0.0..PI), 0.0));
    let meas_a = [meas(), meas()];
    let meas_b = [meas(), meas()];
    Strategy::new(state, meas_a, meas_b).expect("valid qubit strategy")
}
