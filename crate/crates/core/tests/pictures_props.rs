mod common;

use common::{random_hermitian, random_map, random_vector};
use cor_forge::linop::*;
use cor_forge::pictures::*;
use cor_forge::{FactorizedDysonMap, Hamiltonian, PictureIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_spectrum(a: &CMatrix) -> Vec<(f64, f64)> {
    let mut ev: Vec<(f64, f64)> = eigenvalues(a).unwrap().into_iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    ev
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn recursion_equals_finite_difference_of_full_product(
        seed in any::<u64>(), d in 1usize..=16, n in 1usize..=5, t in 0.0f64..1.0
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, d, n);
        let chain = composite_coriolis_chain(&map, t).unwrap();
        let oracle = coriolis_finite_difference(&map, t, 1e-5).unwrap();
        prop_assert!((chain.full() - oracle).norm() <= 1e-6);
        prop_assert_eq!(chain.sigma(n + 1).norm(), 0.0);
    }

    #[test]
    fn ladder_invariants_hold(seed in any::<u64>(), d in 2usize..=10, n in 1usize..=4, t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, d, n);
        let h = random_hermitian(&mut rng, d);
        let snap = map.at(t).unwrap();
        let family = snap.family(&h);
        let reference = sorted_spectrum(&h);
        for j in 0..=n {
            let pj = map.picture(j).unwrap();
            // isospectrality
            for (a, b) in sorted_spectrum(&family.hamiltonians[j]).iter().zip(&reference) {
                prop_assert!((a.0 - b.0).abs() <= 1e-8 && (a.1 - b.1).abs() <= 1e-8);
            }
            prop_assert!(snap.quasi_hermiticity_residual(&h, pj) <= 1e-9);
            prop_assert_eq!(diagnostics(&family.metrics[j]).unwrap().is_positive_definite, Some(true));
            if j < n {
                let f = snap.factor(j + 1);
                let nested = f.omega.adjoint() * &family.metrics[j + 1] * &f.omega;
                prop_assert!((&family.metrics[j] - nested).norm() <= 1e-10 * (1.0 + family.metrics[j].norm()));
            }
            prop_assert!((&family.generators[j] - (&family.hamiltonians[j] - &family.sigmas[j])).norm() == 0.0);
        }
        prop_assert!((&family.metrics[n] - CMatrix::identity(d, d)).norm() == 0.0);
        prop_assert!((&family.generators[n] - &h).norm() == 0.0);
        let h0_direct = inverse(&map.full_product(t).unwrap()).unwrap() * &h * map.full_product(t).unwrap();
        prop_assert!((&family.hamiltonians[0] - h0_direct).norm() <= 1e-9 * (1.0 + h.norm()));
    }

    #[test]
    fn states_map_consistently(seed in any::<u64>(), d in 2usize..=10, n in 1usize..=4, t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, d, n);
        let snap = map.at(t).unwrap();
        let j = rng.gen_range(0..=n);
        let pj = map.picture(j).unwrap();
        let state = snap.pure_state(pj, random_vector(&mut rng, d));
        let a_top = random_hermitian(&mut rng, d);
        let a_j = snap.map_operator(&a_top, map.top(), pj);
        let reference = physical_expectation(&state, &a_j).unwrap();
        prop_assert!(reference.im.abs() <= 1e-9);
        for target in 0..=n {
            let pt = map.picture(target).unwrap();
            let moved = move_state(&state, pt, &snap).unwrap();
            let metric = snap.metric(pt);
            let conj_residual = (&moved.conj - &metric * &moved.ket).norm();
            prop_assert!(conj_residual <= 1e-9 * (1.0 + metric.norm()));
            let a_t = snap.map_operator(&a_top, map.top(), pt);
            let value = physical_expectation(&moved, &a_t).unwrap();
            prop_assert!((value - reference).norm() <= 1e-9);
            let back = move_state(&moved, pj, &snap).unwrap();
            prop_assert!((&back.ket - &state.ket).norm() <= 1e-12 * (1.0 + metric.norm()));
        }
    }
}

#[test]
fn recursion_is_order_sensitive() {
    let t = 0.7;
    let f = |s: &str| cor_forge::CoefficientFn::parse(s).unwrap();
    let forward = FactorizedDysonMap::separable(
        2,
        vec![
            SeparableFactor::new("a", pauli_x(), f("0.6*t")),
            SeparableFactor::new("b", pauli_z(), f("0.5*t^2")),
        ],
    )
    .unwrap();
    let swapped = FactorizedDysonMap::separable(
        2,
        vec![
            SeparableFactor::new("b", pauli_z(), f("0.5*t^2")),
            SeparableFactor::new("a", pauli_x(), f("0.6*t")),
        ],
    )
    .unwrap();
    let s1 = composite_coriolis_chain(&forward, t).unwrap().full().clone();
    let s2 = composite_coriolis_chain(&swapped, t).unwrap().full().clone();
    assert!((s1 - s2).norm() > 1e-3);
}

#[test]
fn non_hermitian_input_is_reported_not_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let map = random_map(&mut rng, 3, 2);
    let h = common::random_matrix(&mut rng, 3, 1.0);
    let r = quasi_hermiticity_residual(&map, &h, map.picture(0).unwrap(), 0.2).unwrap();
    assert!(r > 1e-3);
}

#[test]
fn bottom_up_reconstruction_inverts_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let map = random_map(&mut rng, 4, 3);
    let h = random_hermitian(&mut rng, 4);
    let t = 0.3;
    let snap = map.at(t).unwrap();
    let g0 = snap.generator(&h, PictureIndex::new(0, &map).unwrap());
    let rebuilt = Hamiltonian::BottomUp(OperatorSum::constant(g0)).textbook_at(&snap);
    assert!((rebuilt - &h).norm() <= 1e-9);
}
