//! Brute-force grid oracles for the per-class CHSH maxima.
//!
//! Every family in the catalog is real once the phase freedom is reduced to the sign
//! `ζ = ±1`, so grid points are evaluated with a dedicated real two-qubit Born rule
//! instead of the general complex one. [`qubit_family`] mirrors `qstrategy::family` and the
//! two are compared in tests.

use super::OptimaError;
use crate::corrgeom::{cell, BellFunctional, ClassLabel, Correlation};
use crate::parallel;
use crate::qstrategy::StrategyParams;
use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

const CLASS_TOL: f64 = 1e-9;
const EXCEED_TOL: f64 = 1e-9;
const DEGENERATE_TOL: f64 = 1e-12;

/// Real two-qubit strategy: amplitudes over `|ij⟩` (index `2i + j`) and observables
/// `cos 2t σ_z − sin 2t σ_x` given by their angles `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitPoint {
    pub amps: [f64; 4],
    pub angles_a: [f64; 2],
    pub angles_b: [f64; 2],
}

/// Eigenvector of `cos 2t σ_z − sin 2t σ_x` for outcome `out`.
fn eigvec(t: f64, out: usize) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    if out == 0 {
        [c, -s]
    } else {
        [s, c]
    }
}

impl QubitPoint {
    pub fn correlation(&self) -> Correlation {
        Correlation::from_fn(|a, b, x, y| {
            let u = eigvec(self.angles_a[x], a);
            let v = eigvec(self.angles_b[y], b);
            let amp =
                u[0] * (v[0] * self.amps[0] + v[1] * self.amps[1]) + u[1] * (v[0] * self.amps[2] + v[1] * self.amps[3]);
            amp * amp
        })
    }
}

/// Real-arithmetic counterpart of `qstrategy::family` without the constraint checks.
/// Returns `None` for 3b points with measurement phases or `φ ∉ {0, π}`.
pub fn qubit_family(label: ClassLabel, p: &StrategyParams) -> Option<QubitPoint> {
    let (st, sa, sb, f) = (p.theta, p.alpha, p.beta, p.phi);
    let point = |amps, a, b| QubitPoint {
        amps,
        angles_a: a,
        angles_b: b,
    };
    Some(match label {
        ClassLabel::FourB => point([st.cos(), 0.0, 0.0, st.sin()], [0.0, sa], [0.0, sb]),
        ClassLabel::ThreeA | ClassLabel::TwoB => point(
            [0.0, st.sin() * sa.cos(), st.cos(), -st.sin() * sa.sin()],
            [0.0, sa],
            [0.0, sb],
        ),
        ClassLabel::ThreeB => {
            let real = f.sin().abs() < DEGENERATE_TOL
                && [p.gamma_a, p.gamma_b, p.omega_a, p.omega_b].iter().all(|v| *v == 0.0);
            if !real {
                return None;
            }
            point(
                [0.0, st.cos(), f.cos().signum() * st.sin(), 0.0],
                [0.0, sa],
                [0.0, FRAC_PI_2 - sb],
            )
        }
        ClassLabel::TwoA => point([st.cos(), 0.0, 0.0, -st.sin()], [0.0, -sa], [FRAC_PI_2, sb]),
        ClassLabel::TwoC | ClassLabel::One => point(
            [0.0, f.cos() * st.cos(), f.cos() * st.sin(), f.sin()],
            [0.0, sa],
            [0.0, sb],
        ),
        _ => return None,
    })
}

/// One scanned coordinate: name and half-open range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

const fn axis(name: &'static str, hi: f64) -> Axis {
    Axis { name, lo: 0.0, hi }
}

/// Free coordinates scanned for a class. Dependent angles come from the class constraint;
/// for 3b the phases enter only through `ζ = ±1`, scanned as `φ ∈ {0, π}`. For Class 1 the
/// state is optimized exactly per measurement pair (top eigenvector of the CHSH operator on
/// the span of `|01⟩, |10⟩, |11⟩`).
pub fn scan_axes(label: ClassLabel) -> Result<Vec<Axis>, OptimaError> {
    let two_pi = 2.0 * PI;
    Ok(match label {
        ClassLabel::ThreeA | ClassLabel::ThreeB => vec![axis("alpha", two_pi), axis("beta", two_pi)],
        ClassLabel::TwoA => vec![axis("theta", PI), axis("alpha", PI), axis("beta", PI)],
        ClassLabel::TwoB => vec![axis("theta", PI), axis("alpha", two_pi), axis("beta", PI)],
        ClassLabel::TwoC => vec![axis("theta", two_pi), axis("alpha", PI), axis("beta", PI)],
        ClassLabel::One => vec![axis("alpha", PI), axis("beta", PI)],
        other => return Err(OptimaError::UnsupportedLabel(other)),
    })
}

fn branches(label: ClassLabel) -> &'static [f64] {
    if label == ClassLabel::ThreeB {
        &[0.0, PI]
    } else {
        &[0.0]
    }
}

/// Top eigenpair of the CHSH operator restricted to `|01⟩, |10⟩, |11⟩` for measurement
/// angles `α`, `β` (with `A_0 = B_0 = σ_z`).
fn class1_state(alpha: f64, beta: f64) -> (f64, [f64; 3]) {
    let obs = |t: f64| {
        let (s2, c2) = (2.0 * t).sin_cos();
        nalgebra::Matrix2::new(c2, -s2, -s2, -c2)
    };
    let z = obs(0.0);
    let (a1, b1) = (obs(alpha), obs(beta));
    let kron = |a: &nalgebra::Matrix2<f64>, b: &nalgebra::Matrix2<f64>| a.kronecker(b);
    let op: Matrix4<f64> = -kron(&z, &z) - kron(&z, &b1) - kron(&a1, &z) + kron(&a1, &b1);
    let sub: Matrix3<f64> = op.fixed_view::<3, 3>(1, 1).into_owned();
    let eig = SymmetricEigen::new(sub);
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    (eig.eigenvalues[k], [v[0], v[1], v[2]])
}

/// Family parameters of a grid point, or `None` where the class constraint degenerates.
pub fn grid_params(label: ClassLabel, coords: &[f64], branch: f64) -> Option<StrategyParams> {
    let p = match label {
        ClassLabel::ThreeA => {
            let free = StrategyParams::new(0.0, coords[0], coords[1]);
            StrategyParams::constrained(label, free).ok()?
        }
        ClassLabel::ThreeB => {
            let free = StrategyParams {
                phi: branch,
                ..StrategyParams::new(0.0, coords[0], coords[1])
            };
            StrategyParams::constrained(label, free).ok()?
        }
        ClassLabel::TwoA | ClassLabel::TwoB => StrategyParams::new(coords[0], coords[1], coords[2]),
        ClassLabel::TwoC => {
            StrategyParams::constrained(label, StrategyParams::new(coords[0], coords[1], coords[2])).ok()?
        }
        ClassLabel::One => {
            let (_, v) = class1_state(coords[0], coords[1]);
            // v = (c01, c10, c11); the family writes cos φ (cos θ|01⟩ + sin θ|10⟩) + sin φ|11⟩.
            let sign = if v[0].hypot(v[1]) > DEGENERATE_TOL {
                1.0
            } else {
                v[2].signum()
            };
            let (c01, c10, c11) = (sign * v[0], sign * v[1], sign * v[2]);
            StrategyParams {
                phi: c11.atan2(c01.hypot(c10)),
                ..StrategyParams::new(c10.atan2(c01), coords[0], coords[1])
            }
        }
        _ => return None,
    };
    Some(p)
}

/// CHSH value and class membership (canonical zeros present) of one grid point.
fn evaluate(
    label: ClassLabel,
    coords: &[f64],
    branch: f64,
    chsh: &BellFunctional,
    zeros: &[usize],
) -> Option<(f64, bool)> {
    let p = grid_params(label, coords, branch)?;
    let c = qubit_family(label, &p)?.correlation();
    let ok = zeros.iter().all(|&k| c.cells()[k] <= CLASS_TOL);
    Some((c.dot(chsh), ok))
}

fn coordinates(axes: &[Axis], n: usize, mut flat: usize) -> Vec<f64> {
    let mut coords = vec![0.0; axes.len()];
    for (i, ax) in axes.iter().enumerate().rev() {
        let k = flat % n;
        flat /= n;
        coords[i] = ax.lo + (k as f64 + 0.5) * (ax.hi - ax.lo) / n as f64;
    }
    coords
}

/// Outcome of a grid scan against the closed-form maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub label: ClassLabel,
    pub grid_n: usize,
    pub axes: Vec<Axis>,
    pub evaluated: u64,
    pub in_class: u64,
    pub scan_max: f64,
    /// Free coordinates (and `φ` for 3b) of the best grid point.
    pub argmax: Vec<f64>,
    pub closed_form: f64,
    /// `closed_form − scan_max`.
    pub gap: f64,
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
    branch: f64,
    evaluated: u64,
    in_class: u64,
}

impl Best {
    const EMPTY: Best = Best {
        value: f64::NEG_INFINITY,
        index: 0,
        branch: 0.0,
        evaluated: 0,
        in_class: 0,
    };

    fn merge(self, other: Best) -> Best {
        let mut out = if other.value > self.value || (other.value == self.value && other.index < self.index) {
            other
        } else {
            self
        };
        out.evaluated = self.evaluated + other.evaluated;
        out.in_class = self.in_class + other.in_class;
        out
    }
}

fn zero_cells(label: ClassLabel) -> Vec<usize> {
    label
        .representative_cells()
        .unwrap_or(&[])
        .iter()
        .map(|&(a, b, x, y)| cell(a, b, x, y))
        .collect()
}

/// Exhaustive midpoint grid over the class's free parameters; fails if any in-class grid
/// point exceeds the closed-form maximum by more than 1e−9.
pub fn scan_verify(label: ClassLabel, grid_n: usize) -> Result<ScanReport, OptimaError> {
    if grid_n < 50 {
        return Err(OptimaError::GridTooSmall(grid_n));
    }
    let closed = super::closed_form_max(label)?;
    let axes = scan_axes(label)?;
    let total = grid_n.pow(axes.len() as u32);
    let chsh = BellFunctional::chsh();
    let zeros = zero_cells(label);
    let chunk = grid_n.pow(axes.len() as u32 - 1);
    let best = parallel::pool().install(|| {
        (0..grid_n)
            .into_par_iter()
            .map(|outer| {
                let mut best = Best::EMPTY;
                for index in outer * chunk..(outer + 1) * chunk {
                    let coords = coordinates(&axes, grid_n, index);
                    for &branch in branches(label) {
                        best.evaluated += 1;
                        let Some((s, ok)) = evaluate(label, &coords, branch, &chsh, &zeros) else {
                            continue;
                        };
                        if !ok {
                            continue;
                        }
                        best.in_class += 1;
                        if s > best.value {
                            best = Best {
                                value: s,
                                index,
                                branch,
                                ..best
                            };
                        }
                    }
                }
                best
            })
            .reduce(|| Best::EMPTY, Best::merge)
    });
    debug_assert!(best.index < total);
    let mut argmax = coordinates(&axes, grid_n, best.index);
    if label == ClassLabel::ThreeB {
        argmax.push(best.branch);
    }
    if best.value > closed + EXCEED_TOL {
        return Err(OptimaError::ScanExceeded {
            label,
            scan_max: best.value,
            closed_form: closed,
        });
    }
    Ok(ScanReport {
        label,
        grid_n,
        axes,
        evaluated: best.evaluated,
        in_class: best.in_class,
        scan_max: best.value,
        argmax,
        closed_form: closed,
        gap: closed - best.value,
    })
}

/// One grid point of a scan landscape.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    /// Free coordinates, then `φ` for 3b.
    pub params: Vec<f64>,
    pub s: f64,
    pub class_ok: bool,
}

/// Column names matching [`ScanRow::params`].
pub fn landscape_columns(label: ClassLabel) -> Result<Vec<&'static str>, OptimaError> {
    let mut names: Vec<&'static str> = scan_axes(label)?.iter().map(|a| a.name).collect();
    if label == ClassLabel::ThreeB {
        names.push("phi");
    }
    Ok(names)
}

/// Every grid point in lexicographic order; degenerate points are omitted.
pub fn scan_landscape(label: ClassLabel, grid_n: usize) -> Result<Vec<ScanRow>, OptimaError> {
    let axes = scan_axes(label)?;
    let total = grid_n.pow(axes.len() as u32);
    let chsh = BellFunctional::chsh();
    let zeros = zero_cells(label);
    let rows = parallel::pool().install(|| {
        (0..total)
            .into_par_iter()
            .flat_map_iter(|index| {
                let coords = coordinates(&axes, grid_n, index);
                let (chsh, zeros) = (&chsh, &zeros);
                branches(label)
                    .iter()
                    .filter_map(move |&branch| {
                        let (s, class_ok) = evaluate(label, &coords, branch, chsh, zeros)?;
                        let mut params = coords.clone();
                        if label == ClassLabel::ThreeB {
                            params.push(branch);
                        }
                        Some(ScanRow { params, s, class_ok })
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    Ok(rows)
}

/// Largest CHSH difference between the full complex 3b family with free measurement phases
/// and its `ζ`-branch reduction, over a coarse `n`-point grid per phase and a fixed angle grid.
pub fn phase_reduction_residual(n: usize) -> Result<f64, OptimaError> {
    let chsh = BellFunctional::chsh();
    let phases: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * 2.0 * PI / n as f64).collect();
    let angles: Vec<f64> = (0..8).map(|k| (k as f64 + 0.5) * 2.0 * PI / 8.0).collect();
    let mut worst: f64 = 0.0;
    for &alpha in &angles {
        for &beta in &angles {
            for &branch in branches(ClassLabel::ThreeB) {
                let Some(reduced) = grid_params(ClassLabel::ThreeB, &[alpha, beta], branch) else {
                    continue;
                };
                let reference = qubit_family(ClassLabel::ThreeB, &reduced)
                    .expect("real branch")
                    .correlation()
                    .dot(&chsh);
                for &ga in &phases {
                    for &gb in &phases {
                        for &oa in &phases {
                            for &ob in &phases {
                                let p = StrategyParams {
                                    gamma_a: ga,
                                    gamma_b: gb,
                                    omega_a: oa,
                                    omega_b: ob,
                                    phi: branch - (ga + gb + oa + ob),
                                    ..reduced
                                };
                                let s = crate::qstrategy::family(ClassLabel::ThreeB, p)?;
                                worst = worst.max((crate::qstrategy::born(&s).dot(&chsh) - reference).abs());
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstrategy::{born, family};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_evaluator_matches_born() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels = [
            ClassLabel::ThreeA,
            ClassLabel::ThreeB,
            ClassLabel::TwoA,
            ClassLabel::TwoB,
            ClassLabel::TwoC,
            ClassLabel::One,
        ];
        for label in labels {
            let axes = scan_axes(label).unwrap();
            let mut checked = 0;
            for _ in 0..200 {
                let coords: Vec<f64> = axes.iter().map(|a| rng.random_range(a.lo..a.hi)).collect();
                let branch = if rng.random_bool(0.5) { 0.0 } else { PI };
                let Some(p) = grid_params(label, &coords, branch) else {
                    continue;
                };
                let Ok(s) = family(label, p) else { continue };
                let fast = qubit_family(label, &p).unwrap().correlation();
                assert!(fast.max_abs_diff(&born(&s)) < 1e-12, "{label} {p:?}");
                checked += 1;
            }
            assert!(checked > 150, "{label}: {checked}");
        }
    }

    #[test]
    fn class1_state_is_top_eigenvector() {
        let (lambda, _) = class1_state(0.3, -0.7);
        let p = grid_params(ClassLabel::One, &[0.3, -0.7], 0.0).unwrap();
        let s = qubit_family(ClassLabel::One, &p).unwrap().correlation();
        assert!((s.dot(&BellFunctional::chsh()) - lambda).abs() < 1e-12);
        assert!(s.get(0, 0, 0, 0) < 1e-15);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(matches!(
            scan_verify(ClassLabel::TwoA, 10),
            Err(OptimaError::GridTooSmall(10))
        ));
    }

    #[test]
    fn landscape_is_ordered() {
        let rows = scan_landscape(ClassLabel::ThreeA, 6).unwrap();
        assert!(rows.windows(2).all(|w| w[0].params <= w[1].params));
        assert_eq!(landscape_columns(ClassLabel::ThreeB).unwrap(), ["alpha", "beta", "phi"]);
    }

    #[test]
    fn phases_enter_only_through_zeta() {
        assert!(phase_reduction_residual(3).unwrap() < 1e-12);
    }
}
