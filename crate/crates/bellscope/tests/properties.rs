//! Invariants over randomized inputs.

mod common;

use bellscope::corrgeom::{
    apply_relabeling, classify_zero_class, deterministic_point, mix, validate, Correlation, Relabeling, ZeroPattern,
};
use bellscope::linalg::{c, eigh_real, CMat};
use bellscope::lpcert::{local_membership, ns_zeros_admissible, t_vector};
use bellscope::qstrategy::{born, PureState};
use bellscope::sdprelax::{RelaxationProblem, Word};
use common::{random_qubit_strategy, random_real_strategy};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convex combination of deterministic points; zero weights leave zero cells behind.
fn local_point(weights: &[f64; 16]) -> Correlation {
    let total: f64 = weights.iter().sum();
    let terms: Vec<(f64, Correlation)> = weights
        .iter()
        .enumerate()
        .map(|(j, w)| (w / total, deterministic_point(j).expect("index < 16")))
        .collect();
    mix(&terms).expect("weights sum to one")
}

fn sparse_weights() -> impl Strategy<Value = [f64; 16]> {
    proptest::array::uniform16(prop_oneof![Just(0.0), 0.01f64..1.0])
        .prop_filter("some weight", |w| w.iter().sum::<f64>() > 0.0)
}

fn reflection(t: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(t.cos(), 0.0), c(t.sin(), 0.0), c(t.sin(), 0.0), c(-t.cos(), 0.0)],
    )
}

/// Matrix of a letter sequence over two fixed non-commuting reflections.
fn word_matrix(letters: &[usize]) -> CMat {
    let o = [reflection(0.3), reflection(1.1)];
    letters.iter().fold(CMat::identity(2, 2), |m, &x| m * &o[x])
}

fn levels() -> &'static [RelaxationProblem] {
    static PROBLEMS: OnceLock<Vec<RelaxationProblem>> = OnceLock::new();
    PROBLEMS.get_or_init(|| (1..=3).map(|l| RelaxationProblem::new(l).expect("level")).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn relabeling_preserves_validity_and_class(weights in sparse_weights(), code in 0u8..128) {
        let c0 = local_point(&weights);
        let r = Relabeling::from_code(code);
        let c1 = apply_relabeling(&c0, &r);
        prop_assert!(validate(&c1, 1e-9).unwrap().all());
        prop_assert_eq!(classify_zero_class(&c0, 1e-12), classify_zero_class(&c1, 1e-12));
        prop_assert_eq!(ZeroPattern::from_correlation(&c0, 1e-12).len(), ZeroPattern::from_correlation(&c1, 1e-12).len());
        let back = apply_relabeling(&c1, &r.inverse());
        prop_assert!(back.max_abs_diff(&c0) < 1e-15);
    }

    #[test]
    fn relabeling_composition_is_sequential(weights in sparse_weights(), p in 0u8..128, q in 0u8..128) {
        let c0 = local_point(&weights);
        let (r, s) = (Relabeling::from_code(p), Relabeling::from_code(q));
        let stepwise = apply_relabeling(&apply_relabeling(&c0, &r), &s);
        prop_assert!(apply_relabeling(&c0, &r.then(&s)).max_abs_diff(&stepwise) < 1e-15);
    }

    #[test]
    fn born_of_random_strategy_is_valid(seed in any::<u64>()) {
        let s = random_qubit_strategy(&mut seeded(seed));
        let report = validate(&born(&s), 1e-9).unwrap();
        prop_assert!(report.all(), "{report:?}");
    }

    #[test]
    fn word_product_matches_matrices(u in prop::collection::vec(0usize..2, 0..7), v in prop::collection::vec(0usize..2, 0..7)) {
        let (wu, wv) = (Word::from_letters(&u), Word::from_letters(&v));
        let joined: Vec<usize> = u.iter().chain(&v).copied().collect();
        prop_assert_eq!(wu.mul(&wv), Word::from_letters(&joined));
        let direct = word_matrix(&joined);
        let reduced = word_matrix(&wu.mul(&wv).letters());
        prop_assert!((direct - reduced).norm() < 1e-12);
    }

    #[test]
    fn word_algebra_laws(u in prop::collection::vec(0usize..2, 0..6), v in prop::collection::vec(0usize..2, 0..6), w in prop::collection::vec(0usize..2, 0..6)) {
        let (a, b, c) = (Word::from_letters(&u), Word::from_letters(&v), Word::from_letters(&w));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b).adjoint(), b.adjoint().mul(&a.adjoint()));
        prop_assert!(a.mul(&a.adjoint()).is_identity());
        let adj = word_matrix(&a.adjoint().letters());
        prop_assert!((adj - word_matrix(&a.letters()).adjoint()).norm() < 1e-12);
    }

    #[test]
    fn local_weights_reconstruct_the_point(weights in sparse_weights()) {
        let target = local_point(&weights);
        let m = local_membership(&target).unwrap();
        prop_assert!(m.inside);
        let w = m.weights.unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let terms: Vec<(f64, Correlation)> = w.iter().enumerate().map(|(j, &x)| (x, deterministic_point(j).unwrap())).collect();
        let rebuilt = Correlation::from_fn(|a, b, x, y| terms.iter().map(|(x0, p)| x0 * p.get(a, b, x, y)).sum());
        prop_assert!(rebuilt.max_abs_diff(&target) < 1e-9);
    }

    #[test]
    fn admissible_zeros_are_closed_under_subsets(mask in 0u16..=u16::MAX, drop in 0u16..=u16::MAX) {
        let all: Vec<_> = ZeroPattern { mask }.cells();
        let sub: Vec<_> = all.iter().enumerate().filter(|(i, _)| drop & (1 << i) == 0).map(|(_, c)| *c).collect();
        let (big, small) = (ZeroPattern::from_cells(&all), ZeroPattern::from_cells(&sub));
        if ns_zeros_admissible(&big).unwrap() {
            prop_assert!(ns_zeros_admissible(&small).unwrap());
        }
    }

    #[test]
    fn tangent_vectors_have_zero_block_sums(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let s = random_qubit_strategy(&mut rng);
        let psi = s.state.amps().clone();
        let raw = DVector::from_fn(4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let orth = &raw - &psi * psi.dotc(&raw);
        prop_assume!(orth.norm() > 1e-6);
        let phi = PureState::normalized((2, 2), orth).unwrap();
        let t = t_vector(&s, &phi).unwrap();
        for sum in t.block_sums() {
            prop_assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_json_round_trips(seed in any::<u64>()) {
        let original = born(&random_qubit_strategy(&mut seeded(seed)));
        let text = serde_json::to_string(&original).unwrap();
        let parsed: Correlation = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(parsed, original);
    }

    #[test]
    fn exact_moment_matrices_are_psd(seed in any::<u64>(), real in any::<bool>()) {
        let mut rng = seeded(seed);
        let s = if real { random_real_strategy(&mut rng) } else { random_qubit_strategy(&mut rng) };
        for prob in levels() {
            let y = prob.exact_moments(&s);
            let (vals, _) = eigh_real(&prob.moment_matrix(&y));
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(lo >= -1e-9, "level {}: {lo}", prob.level());
        }
    }
}
