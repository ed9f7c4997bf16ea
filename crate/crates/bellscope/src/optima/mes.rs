//! CHSH bounds for maximally entangled states of local dimension `d`.

use super::OptimaError;
use crate::corrgeom::{mix, Correlation};
use crate::linalg::{pauli_x, pauli_z, CMat};
use crate::qstrategy::{born_mes, Povm, PureState, Strategy};
use std::f64::consts::SQRT_2;

/// Largest CHSH value reachable with projective measurements on `|Φ⁺_d⟩`:
/// `2√2` for even `d`, `2√2 (d−1)/d + 2/d` for odd `d`.
pub fn max_chsh_mes(d: usize) -> Result<f64, OptimaError> {
    if d < 2 {
        return Err(OptimaError::InvalidDimension(d));
    }
    if d.is_multiple_of(2) {
        return Ok(2.0 * SQRT_2);
    }
    let df = d as f64;
    Ok(2.0 * SQRT_2 * (df - 1.0) / df + 2.0 / df)
}

/// Block-diagonal measurements on `|Φ⁺_d⟩` together with the convex decomposition of the
/// resulting correlation into one term per block.
#[derive(Clone, Debug)]
pub struct BlockStrategy {
    pub d: usize,
    pub meas_a: [Povm; 2],
    pub meas_b: [Povm; 2],
    /// `2/d` per qubit block, `1/d` for the trailing scalar block.
    pub weights: Vec<f64>,
    /// Correlation of each block on its own normalized maximally entangled state.
    pub components: Vec<Correlation>,
}

impl BlockStrategy {
    pub fn qubit_blocks(&self) -> usize {
        self.d / 2
    }

    pub fn correlation(&self) -> Correlation {
        born_mes(self.d, &self.meas_a, &self.meas_b).expect("consistent block dimensions")
    }

    pub fn remixed(&self) -> Correlation {
        let terms: Vec<(f64, Correlation)> = self
            .weights
            .iter()
            .copied()
            .zip(self.components.iter().cloned())
            .collect();
        mix(&terms).expect("weights sum to one")
    }

    pub fn strategy(&self) -> Strategy {
        Strategy::new(
            PureState::maximally_entangled(self.d),
            self.meas_a.clone(),
            self.meas_b.clone(),
        )
        .expect("consistent block dimensions")
    }
}

/// `⌊d/2⌋` copies of the Tsirelson qubit measurements plus, for odd `d`, a scalar block
/// with `A_x = 1`, `B_y = −1` (CHSH value 2).
pub fn construct_block_strategy(d: usize) -> Result<BlockStrategy, OptimaError> {
    if d < 2 {
        return Err(OptimaError::InvalidDimension(d));
    }
    let r = 1.0 / SQRT_2;
    let (z, x) = (pauli_z(), pauli_x());
    let qubit_a = [z.clone(), x.clone()];
    let qubit_b = [-(&z + &x).scale(r), (&x - &z).scale(r)];
    let blocks = d / 2;
    let scalar = d % 2 == 1;
    let assemble = |qubit: &CMat, scalar_value: f64| {
        let mut m = CMat::zeros(d, d);
        for k in 0..blocks {
            m.view_mut((2 * k, 2 * k), (2, 2)).copy_from(qubit);
        }
        if scalar {
            m[(d - 1, d - 1)] = crate::linalg::re(scalar_value);
        }
        m
    };
    let povm = |m: CMat| Povm::from_observable(m).map_err(OptimaError::from);
    let meas_a = [povm(assemble(&qubit_a[0], 1.0))?, povm(assemble(&qubit_a[1], 1.0))?];
    let meas_b = [povm(assemble(&qubit_b[0], -1.0))?, povm(assemble(&qubit_b[1], -1.0))?];

    let qubit_corr = {
        let a = [povm(qubit_a[0].clone())?, povm(qubit_a[1].clone())?];
        let b = [povm(qubit_b[0].clone())?, povm(qubit_b[1].clone())?];
        born_mes(2, &a, &b)?
    };
    let df = d as f64;
    let mut weights = vec![2.0 / df; blocks];
    let mut components = vec![qubit_corr; blocks];
    if scalar {
        weights.push(1.0 / df);
        components.push(Correlation::from_fn(
            |a, b, _, _| if a == 0 && b == 1 { 1.0 } else { 0.0 },
        ));
    }
    Ok(BlockStrategy {
        d,
        meas_a,
        meas_b,
        weights,
        components,
    })
}
