//! Randomized invariants: symplectic congruence laws, factory validity,
//! solver soundness on separable inputs, constraint monotonicity, relabeling
//! invariance, and the product-criterion scaling identities.

use proptest::prelude::*;

use cvwit_core::product::{balance_parameter, decompose_xp, product_value, scale_xp};
use cvwit_core::states::{
    add_noise, ghz_covariance, random_covariance, swap_state, two_mode_squeezed, vacuum_state,
    ww_state,
};
use cvwit_core::symplectic::{
    apply_symplectic, beam_splitter_50_50, gaussian_entropy, is_valid_covariance, mode_permutation,
    partial_transpose, pinch_xp, squeezer, symplectic_eigenvalues, symplectic_trace,
    CovarianceMatrix, Mat, ModePartition,
};
use cvwit_core::witnessprob::{
    decide_separability, duan_witness, fully_wit, multi_wit, symmetric_basis, validate_witness,
    MeasurementConstraint, SeparabilityVerdict,
};

const TOL: f64 = 1e-8;

fn part(sizes: &[usize]) -> ModePartition {
    ModePartition::new(sizes.to_vec()).unwrap()
}

fn max_dev(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

fn min_eig(m: &Mat) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v))
}

fn direct_sum(blocks: &[&Mat]) -> Mat {
    let dim = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(*b);
        off += b.nrows();
    }
    out
}

type Op = (u8, usize, usize, f64);

/// Composes squeezers, 50:50 beam splitters, and mode permutations into a
/// symplectic transformation on `n` modes.
fn build_symplectic(n: usize, ops: &[Op]) -> Mat {
    let mut s = Mat::identity(2 * n, 2 * n);
    for &(kind, i, j, d) in ops {
        let step = match kind {
            0 => squeezer(n, 1 + i % n, d).unwrap(),
            1 if n >= 2 => {
                let a = i % n;
                let b = (a + 1 + j % (n - 1)) % n;
                beam_splitter_50_50(n, 1 + a, 1 + b).unwrap()
            }
            _ => {
                let mut perm: Vec<usize> = (1..=n).collect();
                perm.rotate_left(i % n);
                if n >= 2 && j % 2 == 1 {
                    perm.swap(0, 1);
                }
                mode_permutation(n, &perm).unwrap()
            }
        };
        s = step * s;
    }
    s
}

fn ops_strategy() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec((0u8..3, 0usize..8, 0usize..8, 0.5f64..2.0), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn symplectic_congruence_preserves_validity(
        n in 1usize..=3,
        mix in 0.0f64..0.5,
        seed in any::<u64>(),
        ops in ops_strategy(),
    ) {
        let s = build_symplectic(n, &ops);
        let good = random_covariance(n, mix, seed).unwrap();
        let bad = CovarianceMatrix::new(0.3 * good.matrix()).unwrap();
        for gamma in [good, bad] {
            let before = is_valid_covariance(&gamma, TOL);
            let after = is_valid_covariance(&apply_symplectic(&gamma, &s).unwrap(), TOL);
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn symplectic_trace_invariant_under_congruence(
        n in 1usize..=3,
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
        ops in ops_strategy(),
    ) {
        let s = build_symplectic(n, &ops);
        let gamma = random_covariance(n, mix, seed).unwrap();
        let before = symplectic_trace(gamma.matrix()).unwrap();
        let after = symplectic_trace(apply_symplectic(&gamma, &s).unwrap().matrix()).unwrap();
        prop_assert!((before - after).abs() <= 1e-8, "{before} vs {after}");
    }

    #[test]
    fn symplectic_spectrum_round_trips(
        spectrum in prop::collection::vec(0.2f64..5.0, 1..=3),
        ops in ops_strategy(),
    ) {
        let n = spectrum.len();
        let s = build_symplectic(n, &ops);
        let mut diag = Mat::zeros(2 * n, 2 * n);
        for (k, &v) in spectrum.iter().enumerate() {
            diag[(2 * k, 2 * k)] = v;
            diag[(2 * k + 1, 2 * k + 1)] = v;
        }
        let m = &s * diag * s.transpose();
        let mut recovered = symplectic_eigenvalues(&((&m + m.transpose()) * 0.5)).unwrap();
        recovered.sort_by(|a, b| a.total_cmp(b));
        let mut expected = spectrum.clone();
        expected.sort_by(|a, b| a.total_cmp(b));
        prop_assert_eq!(recovered.len(), expected.len());
        for (r, e) in recovered.iter().zip(&expected) {
            prop_assert!((r - e).abs() <= 1e-8, "recovered {r}, expected {e}");
        }
    }

    #[test]
    fn pinch_is_idempotent_and_positivity_preserving(
        n in 1usize..=4,
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let gamma = random_covariance(n, mix, seed).unwrap();
        let once = pinch_xp(gamma.matrix());
        prop_assert_eq!(max_dev(&pinch_xp(&once), &once), 0.0);
        prop_assert!(min_eig(&once) >= -1e-10);
    }

    #[test]
    fn partial_transpose_is_a_symmetric_involution(
        n in 1usize..=4,
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
        mode_bits in 1u32..16,
    ) {
        let gamma = random_covariance(n, mix, seed).unwrap();
        let modes: Vec<usize> =
            (1..=n).filter(|m| mode_bits & (1 << (m - 1)) != 0).collect();
        prop_assume!(!modes.is_empty());
        let once = partial_transpose(&gamma, &modes).unwrap();
        prop_assert!(max_dev(&once.matrix().transpose(), once.matrix()) == 0.0);
        let twice = partial_transpose(&once, &modes).unwrap();
        prop_assert_eq!(max_dev(twice.matrix(), gamma.matrix()), 0.0);
    }

    #[test]
    fn entropy_is_zero_exactly_for_pure_states(
        n in 1usize..=3,
        seed in any::<u64>(),
        kappa in 0.1f64..2.0,
    ) {
        let pure = random_covariance(n, 0.0, seed).unwrap();
        prop_assert!(gaussian_entropy(&pure).unwrap().abs() <= 1e-7);
        let mixed = CovarianceMatrix::new((1.0 + kappa) * pure.matrix()).unwrap();
        prop_assert!(gaussian_entropy(&mixed).unwrap() > 0.05);
    }

    #[test]
    fn factories_produce_valid_covariances(
        r in 0.0f64..2.0,
        alpha in 1.0f64..8.0,
        parties in 2usize..=4,
        mix in 0.0f64..1.0,
        kappa in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        for gamma in [
            two_mode_squeezed(r).unwrap(),
            ghz_covariance(parties, r, 0.5 * r).unwrap(),
            swap_state(r + 0.01, alpha).unwrap(),
            random_covariance(parties, mix, seed).unwrap(),
            add_noise(&random_covariance(2, mix, seed).unwrap(), kappa).unwrap(),
            vacuum_state(parties),
            ww_state(),
        ] {
            prop_assert!(is_valid_covariance(&gamma, TOL));
        }
    }

    #[test]
    fn ghz_covariance_matches_closed_form(
        parties in 2usize..=5,
        r1 in 0.0f64..1.5,
        r2 in 0.0f64..1.5,
    ) {
        let gamma = ghz_covariance(parties, r1, r2).unwrap();
        let nf = parties as f64;
        let a = (2.0 * r1).exp() / nf + (nf - 1.0) * (-2.0 * r2).exp() / nf;
        let b = (-2.0 * r1).exp() / nf + (nf - 1.0) * (2.0 * r2).exp() / nf;
        let c = ((2.0 * r1).exp() - (-2.0 * r2).exp()) / nf;
        let d = ((-2.0 * r1).exp() - (2.0 * r2).exp()) / nf;
        for i in 0..parties {
            for j in 0..parties {
                let (u, v) = if i == j { (a, b) } else { (c, d) };
                prop_assert!((gamma.matrix()[(2 * i, 2 * j)] - u).abs() <= 1e-12);
                prop_assert!((gamma.matrix()[(2 * i + 1, 2 * j + 1)] - v).abs() <= 1e-12);
                prop_assert_eq!(gamma.matrix()[(2 * i, 2 * j + 1)], 0.0);
            }
        }
    }

    #[test]
    fn ghz_covariance_is_party_exchange_invariant(
        r1 in 0.0f64..1.5,
        r2 in 0.0f64..1.5,
        rot in 0usize..3,
        swap in proptest::bool::ANY,
    ) {
        let gamma = ghz_covariance(3, r1, r2).unwrap();
        let mut perm: Vec<usize> = vec![1, 2, 3];
        perm.rotate_left(rot);
        if swap {
            perm.swap(0, 1);
        }
        let p = mode_permutation(3, &perm).unwrap();
        let conjugated = apply_symplectic(&gamma, &p).unwrap();
        prop_assert!(max_dev(conjugated.matrix(), gamma.matrix()) <= 1e-12);
    }

    #[test]
    fn product_value_is_scaling_invariant(
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
        a0 in 0.4f64..2.5,
        cross in 0.0f64..0.2,
        exponent in -8i32..=8,
    ) {
        let z = duan_witness(a0).unwrap() + cross * symmetric_basis(1, 2, 4).unwrap();
        let pw = decompose_xp(&z).unwrap();
        let gamma = random_covariance(2, mix, seed).unwrap();
        let reference = product_value(&pw, &gamma).unwrap();
        let a = 2.0f64.powi(exponent);
        let scaled = CovarianceMatrix::new(scale_xp(gamma.matrix(), a).unwrap()).unwrap();
        let value = product_value(&pw, &scaled).unwrap();
        prop_assert!(
            (value - reference).abs() <= 1e-8 * reference.abs().max(1.0),
            "{value} vs {reference} at a = {a}"
        );
    }

    #[test]
    fn scaled_witnesses_keep_their_certificate(
        a0 in 0.4f64..2.5,
        exponent in -6i32..=6,
    ) {
        let z = duan_witness(a0).unwrap();
        let partition = part(&[1, 1]);
        prop_assert!(validate_witness(&z, &partition).unwrap().passes());
        let scaled = scale_xp(&z, 2.0f64.powi(exponent)).unwrap();
        prop_assert!(validate_witness(&scaled, &partition).unwrap().passes());
    }

    #[test]
    fn balancing_equalizes_component_traces(
        a0 in 0.4f64..2.5,
        r in 0.1f64..1.2,
    ) {
        let pw = decompose_xp(&duan_witness(a0).unwrap()).unwrap();
        let gamma = two_mode_squeezed(r).unwrap();
        let a = balance_parameter(&pw, &gamma).unwrap();
        let balanced = decompose_xp(&scale_xp(&pw.recompose(), a).unwrap()).unwrap();
        let tx = balanced.zx().dot(gamma.matrix());
        let tp = balanced.zp().dot(gamma.matrix());
        prop_assert!((tx - tp).abs() <= 1e-9 * tx.abs().max(1.0), "tx {tx}, tp {tp}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn solver_is_deterministic(
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let gamma = random_covariance(2, mix, seed).unwrap();
        let partition = part(&[1, 1]);
        let first = fully_wit(&gamma, &partition, &[], TOL).unwrap();
        let second = fully_wit(&gamma, &partition, &[], TOL).unwrap();
        prop_assert!((first.c - second.c).abs() <= 1e-12);
        prop_assert_eq!(first.iterations, second.iterations);
    }

    #[test]
    fn separable_sums_are_never_flagged(
        seeds in prop::collection::vec(any::<u64>(), 3),
        mix in 0.0f64..1.0,
        kappa in 0.0f64..0.5,
    ) {
        let blocks: Vec<CovarianceMatrix> = seeds
            .iter()
            .map(|&s| random_covariance(1, mix, s).unwrap())
            .collect();
        let refs: Vec<&Mat> = blocks.iter().map(|b| b.matrix()).collect();
        let gamma =
            add_noise(&CovarianceMatrix::new(direct_sum(&refs)).unwrap(), kappa).unwrap();
        let partition = part(&[1, 1, 1]);
        let full = fully_wit(&gamma, &partition, &[], TOL).unwrap();
        prop_assert!(full.x_e >= -10.0 * TOL, "full margin {}", full.x_e);
        prop_assert!(full.c >= -10.0 * TOL, "full witness value {}", full.c);
        let multi = multi_wit(&gamma, &partition, &[], TOL).unwrap();
        prop_assert!(multi.x_e >= -10.0 * TOL, "multi margin {}", multi.x_e);
    }

    #[test]
    fn constraints_never_improve_the_optimum(
        r in 0.2f64..1.0,
        element_bits in 1u32..64,
    ) {
        let gamma = two_mode_squeezed(r).unwrap();
        let partition = part(&[1, 1]);
        let mut constraints = Vec::new();
        let mut bit = 0;
        for j in 1..=4usize {
            for k in (j + 1)..=4 {
                if element_bits & (1 << bit) != 0 {
                    constraints.push(
                        MeasurementConstraint::new(symmetric_basis(j, k, 4).unwrap()).unwrap(),
                    );
                }
                bit += 1;
            }
        }
        let free = fully_wit(&gamma, &partition, &[], TOL).unwrap();
        let constrained = fully_wit(&gamma, &partition, &constraints, TOL).unwrap();
        prop_assert!(
            constrained.c >= free.c - 10.0 * TOL,
            "free {}, constrained {}",
            free.c,
            constrained.c
        );
    }

    #[test]
    fn witness_value_is_relabeling_invariant(
        mix in 0.0f64..1.0,
        seed in any::<u64>(),
        rot in 0usize..3,
        swap in proptest::bool::ANY,
    ) {
        let gamma = random_covariance(3, mix, seed).unwrap();
        let partition = part(&[1, 1, 1]);
        let mut perm: Vec<usize> = vec![1, 2, 3];
        perm.rotate_left(rot);
        if swap {
            perm.swap(0, 1);
        }
        let p = mode_permutation(3, &perm).unwrap();
        let relabeled = apply_symplectic(&gamma, &p).unwrap();
        let base = fully_wit(&gamma, &partition, &[], TOL).unwrap();
        let moved = fully_wit(&relabeled, &partition, &[], TOL).unwrap();
        prop_assert!(
            (base.c - moved.c).abs() <= 10.0 * TOL,
            "base {}, relabeled {}",
            base.c,
            moved.c
        );
    }

    #[test]
    fn squeezing_is_detected_for_positive_parameter(r in 0.05f64..1.5) {
        let gamma = two_mode_squeezed(r).unwrap();
        let verdict = decide_separability(&gamma, &part(&[1, 1]), TOL).unwrap();
        prop_assert_eq!(verdict, SeparabilityVerdict::Entangled);
    }
}

#[test]
fn unsqueezed_pair_sits_on_the_boundary() {
    let gamma = two_mode_squeezed(0.0).unwrap();
    let verdict = decide_separability(&gamma, &part(&[1, 1]), TOL).unwrap();
    assert_eq!(verdict, SeparabilityVerdict::Boundary);
}

#[test]
fn swap_state_is_two_uncorrelated_pairs_before_the_final_splitter() {
    let swap = swap_state(2.0 * 2.0f64.ln() / 3.0, 5.0).unwrap();
    let unmix = beam_splitter_50_50(4, 3, 2).unwrap().transpose();
    let before = apply_symplectic(&swap, &unmix).unwrap();
    let off = before.matrix().view((0, 4), (4, 4));
    assert!(off.iter().all(|&v| v.abs() <= 1e-12));
}

#[test]
fn relabeling_holds_for_unequal_party_sizes() {
    let gamma = random_covariance(3, 0.4, 77).unwrap();
    let base = fully_wit(&gamma, &part(&[1, 2]), &[], TOL).unwrap();
    let p = mode_permutation(3, &[3, 1, 2]).unwrap();
    let relabeled = apply_symplectic(&gamma, &p).unwrap();
    let moved = fully_wit(&relabeled, &part(&[2, 1]), &[], TOL).unwrap();
    assert!((base.c - moved.c).abs() <= 10.0 * TOL, "base {}, relabeled {}", base.c, moved.c);
}
