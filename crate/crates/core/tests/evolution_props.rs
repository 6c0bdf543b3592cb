mod common;

use common::{random_hermitian, random_map, random_vector};
use cor_forge::evolution::*;
use cor_forge::linop::*;
use cor_forge::models::build_two_level_toy;
use cor_forge::pictures::*;
use cor_forge::{CoefficientFn, FactorizedDysonMap, Hamiltonian};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Closed-form picture-0 ket of the two-level toy: the top picture evolves
/// under the constant `Z`, so `ψ_0(t) = Ω(t)^{-1} e^{-iZt} Ω(0) ψ_0(0)`.
fn toy_exact_ket(map: &FactorizedDysonMap, ket0: &CVector, t: f64) -> CVector {
    let top0 = map.full_product(0.0).unwrap() * ket0;
    let phase = CVector::from_vec(vec![top0[0] * (-I * t).exp(), top0[1] * (I * t).exp()]);
    inverse(&map.full_product(t).unwrap()).unwrap() * phase
}

#[test]
fn rk4_converges_at_fourth_order() {
    let toy = build_two_level_toy(0.3, 0.2);
    let j = toy.map.picture(0).unwrap();
    let s0 = toy.initial_pair(j).unwrap();
    let exact = toy_exact_ket(&toy.map, &s0.ket, 1.0);
    let error = |h: f64| {
        let grid = TimeGrid::rk4(0.0, 1.0, h).unwrap();
        let r = integrate_schrodinger(&toy.map, &toy.hamiltonian, j, &s0, &grid).unwrap();
        (&r.last().unwrap().ket - &exact).norm()
    };
    for h in [0.1, 0.05] {
        let ratio = error(h) / error(h / 2.0);
        assert!((ratio - 16.0).abs() <= 0.2 * 16.0, "h = {h}: ratio {ratio}");
    }
}

#[test]
fn adaptive_and_fixed_integrators_agree() {
    let toy = build_two_level_toy(0.3, 0.2);
    let j = toy.map.picture(1).unwrap();
    let s0 = toy.initial_pair(j).unwrap();
    let fixed = integrate_schrodinger(&toy.map, &toy.hamiltonian, j, &s0, &toy.grid).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 0.1, Method::Rk45 { rel_tol: 1e-10, abs_tol: 1e-12 }).unwrap();
    let adaptive = integrate_schrodinger(&toy.map, &toy.hamiltonian, j, &s0, &grid).unwrap();
    assert_eq!(adaptive.times.len(), 11);
    let a = adaptive.last().unwrap();
    let f = fixed.last().unwrap();
    assert!((&a.ket - &f.ket).norm() <= 1e-8);
    assert!((&a.conj - &f.conj).norm() <= 1e-8);
}

#[test]
fn toy_is_picture_independent_and_norm_conserving() {
    let toy = build_two_level_toy(0.3, 0.2);
    let n = toy.map.len();
    let mut trajectories = Vec::new();
    for j in 0..=n {
        let pj = toy.map.picture(j).unwrap();
        let r = integrate_schrodinger(&toy.map, &toy.hamiltonian, pj, &toy.initial_pair(pj).unwrap(), &toy.grid)
            .unwrap();
        let norms = r.diagnostic("physical_norm").unwrap();
        let drift = norms.iter().map(|v| (v - norms[0]).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-8, "picture {j}: drift {drift:e}");
        let obs = &toy.observables[0];
        trajectories.push(expectation_series(&toy.map, &r, &obs.matrix, toy.map.picture(obs.defined_in).unwrap()).unwrap());
    }
    for other in &trajectories[1..] {
        for (a, b) in trajectories[0].iter().zip(other) {
            assert!((a - b).norm() <= 1e-7);
        }
    }
    // The kets themselves agree once brought to a common picture.
    let top = toy.map.top();
    let grid = &toy.grid;
    let r0 = integrate_schrodinger(&toy.map, &toy.hamiltonian, toy.map.picture(0).unwrap(), &toy.initial_pair(toy.map.picture(0).unwrap()).unwrap(), grid).unwrap();
    let r2 = integrate_schrodinger(&toy.map, &toy.hamiltonian, top, &toy.initial_pair(top).unwrap(), grid).unwrap();
    let snap = toy.map.at(1.0).unwrap();
    let lifted = move_state(r0.last().unwrap(), top, &snap).unwrap();
    assert!((&lifted.ket - &r2.last().unwrap().ket).norm() <= 1e-7);
}

#[test]
fn heisenberg_matches_direct_conjugation_and_duality() {
    let toy = build_two_level_toy(0.3, 0.2);
    let a_top = pauli_x();
    let top = toy.map.top();
    let p0 = toy.map.picture(0).unwrap();
    let snap0 = toy.map.at(0.0).unwrap();
    let a0 = snap0.map_operator(&a_top, top, p0);
    let heis = integrate_heisenberg(&toy.map, p0, &a0, &toy.grid).unwrap();

    let snap1 = toy.map.at(1.0).unwrap();
    let (o1, o2) = (&snap1.factor(1).omega, &snap1.factor(2).omega);
    let direct = inverse(o1).unwrap() * inverse(o2).unwrap() * &a_top * o2 * o1;
    assert!((heis.last().unwrap() - direct).norm() <= 1e-6);

    let states = integrate_schrodinger(&toy.map, &toy.hamiltonian, p0, &toy.initial_pair(p0).unwrap(), &toy.grid).unwrap();
    let reference = integrate_schrodinger(&toy.map, &toy.hamiltonian, top, &toy.initial_pair(top).unwrap(), &toy.grid).unwrap();
    for k in (0..states.times.len()).step_by(50) {
        let both = physical_expectation(&states.trajectory[k], &heis.trajectory[k]).unwrap();
        let conventional = physical_expectation(&reference.trajectory[k], &a_top).unwrap();
        assert!((both - conventional).norm() <= 1e-6);
    }

    let frozen = integrate_heisenberg(&toy.map, top, &a_top, &toy.grid).unwrap();
    assert!(frozen.trajectory.iter().all(|a| a == &a_top));
}

#[test]
fn density_keeps_trace_and_spectrum() {
    let toy = build_two_level_toy(0.3, 0.2);
    for j in 0..=toy.map.len() {
        let pj = toy.map.picture(j).unwrap();
        let ens = toy.initial_ensemble(pj).unwrap();
        let r = integrate_density(&toy.map, &toy.hamiltonian, pj, &ens, &toy.grid).unwrap();
        let trace = r.diagnostic("trace_drift").unwrap();
        assert!(trace.iter().all(|&v| v <= 1e-10));
        let spectral = r.diagnostic("spectral_drift").unwrap();
        assert!(spectral.iter().all(|&v| v <= 1e-7), "picture {j}");
        let last = r.last().unwrap();
        let mut ev: Vec<f64> = eigenvalues(last).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.3).abs() <= 1e-7 && (ev[1] - 0.7).abs() <= 1e-7);
    }
}

#[test]
fn pure_density_stays_a_projector() {
    let toy = build_two_level_toy(0.3, 0.2);
    let p0 = toy.map.picture(0).unwrap();
    let ens = Ensemble::pure(toy.initial_pair(p0).unwrap());
    let rho0 = density_from_ensemble(&ens).unwrap();
    assert!((rho0.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    let r = integrate_density(&toy.map, &toy.hamiltonian, p0, &ens, &toy.grid).unwrap();
    assert!(r.diagnostic("idempotency").unwrap().iter().all(|&v| v <= 1e-8));
}

#[test]
fn density_is_non_hermitian_under_a_nontrivial_metric() {
    let toy = build_two_level_toy(0.3, 0.2);
    let p0 = toy.map.picture(0).unwrap();
    let snap = toy.map.at(0.5).unwrap();
    let state = snap.pure_state(p0, CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
    let rho = density_from_ensemble(&Ensemble::pure(state)).unwrap();
    assert!(hermiticity_residual(&rho) > 1e-3);
}

#[test]
fn metric_law_matches_gram_product() {
    let f = |s: &str| CoefficientFn::parse(s).unwrap();
    let single = FactorizedDysonMap::separable(2, vec![SeparableFactor::new("a", pauli_x(), f("0.4*sin(t)"))]).unwrap();
    let toy = build_two_level_toy(0.3, 0.2);
    let grid = TimeGrid::rk4(0.0, 1.0, 1e-3).unwrap();
    for map in [&single, &toy.map] {
        for j in 0..map.len() {
            let r = integrate_metric_in(map, map.picture(j).unwrap(), &grid).unwrap();
            assert!(r.diagnostic("metric_residual").unwrap().iter().all(|&v| v <= 1e-8));
            assert!(r.diagnostic("hermiticity_residual").unwrap().iter().all(|&v| v <= 1e-9));
        }
    }
    let stationary = FactorizedDysonMap::separable(2, vec![SeparableFactor::new("a", pauli_x(), f("0.4"))]).unwrap();
    let r = integrate_metric(&stationary, &grid).unwrap();
    assert!(r.trajectory.iter().all(|m| m == &r.trajectory[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_maps_conserve_norm_and_agree_across_pictures(
        seed in any::<u64>(), d in 2usize..=5, n in 1usize..=3
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, d, n);
        let ham = Hamiltonian::TopDown(OperatorSum::constant(random_hermitian(&mut rng, d)));
        let observable = random_hermitian(&mut rng, d);
        let ket = random_vector(&mut rng, d);
        let grid = TimeGrid::rk4(0.0, 1.0, 1e-3).unwrap();
        let snap0 = map.at(0.0).unwrap();
        let home = snap0.pure_state(map.top(), ket);
        let mut series = Vec::new();
        for j in 0..=n {
            let pj = map.picture(j).unwrap();
            let s0 = move_state(&home, pj, &snap0).unwrap();
            let r = integrate_schrodinger(&map, &ham, pj, &s0, &grid).unwrap();
            let norms = r.diagnostic("physical_norm").unwrap();
            let drift = norms.iter().map(|v| (v - norms[0]).abs()).fold(0.0, f64::max);
            prop_assert!(drift <= 1e-8, "drift {:e} in picture {}", drift, j);
            series.push(expectation_series(&map, &r, &observable, map.top()).unwrap());
        }
        for other in &series[1..] {
            for (a, b) in series[0].iter().zip(other) {
                prop_assert!((a - b).norm() <= 1e-7);
            }
        }
    }
}
