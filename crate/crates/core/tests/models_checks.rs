use cor_forge::linop::*;
use cor_forge::models::*;
use cor_forge::pictures::composite_coriolis_chain;
use cor_forge::weyl::{composite_coriolis_symbolic, fring_tenney_factors, Symbol, DEFAULT_MAX_DEPTH};
use cor_forge::{CoefficientFn, TimeGrid};

#[test]
fn fring_tenney_matrix_sigma_approaches_closed_form_in_the_interior() {
    let symbolic = composite_coriolis_symbolic(&fring_tenney_factors(), DEFAULT_MAX_DEPTH).unwrap();
    let sigma1 = symbolic.last().unwrap();
    let param = SigmaParametrization::new(CoefficientFn::parse("1+0.1*t^2").unwrap(), 0.0);
    let coeffs = ExponentialCoefficients::default();
    let d = 64;
    let scenario =
        build_fring_tenney_scenario(d, coeffs.clone(), &param, TimeGrid::rk4(0.0, 1.0, 1e-2).unwrap()).unwrap();
    let (x, p) = build_osc_operators(d).unwrap();
    for t in [0.0, 0.5, 1.0] {
        let values = |s: &Symbol| {
            let f = match s.name.as_str() {
                "alpha" => &coeffs.alpha,
                "beta" => &coeffs.beta,
                "gamma" => &coeffs.gamma,
                "delta" => &coeffs.delta,
                _ => return None,
            };
            Some(if s.dot { f.derivative(t) } else { f.value(t) })
        };
        let exact = sigma1.realize(&x, &p, &values).unwrap();
        let chain = composite_coriolis_chain(&scenario.map, t).unwrap();
        let r = interior_residual(chain.full(), &exact).unwrap();
        assert!(r < 1e-3, "t = {t}: interior residual {r:e}");
    }
}

#[test]
fn bottom_up_scenario_reports_textbook_hermiticity() {
    let scenario = default_fring_tenney();
    assert!(scenario.is_bottom_up());
    let r = scenario.textbook_hermiticity(0.5).unwrap();
    assert!(r.is_finite() && r >= 0.0);
}

#[test]
fn jones_mateo_spectrum_is_real_converged_and_scales() {
    let base = jones_mateo_convergence(1.0, (64, 96), 5).unwrap();
    assert!(base.max_imag <= 1e-9);
    assert!(base.differences().iter().all(|&d| d <= 1e-6), "{:?}", base.differences());
    assert!(base.fine[0] > 0.0);
    for g in [0.5, 2.0] {
        let h = build_jones_mateo(g, 128).unwrap();
        let levels = spectrum_lowest(&h, 5).unwrap();
        for (e, e1) in levels.iter().zip(&base.fine) {
            assert!(e.im.abs() <= 1e-9);
            let expected = g.cbrt() * e1;
            assert!(((e.re - expected) / expected).abs() <= 1e-5, "g = {g}: {} vs {expected}", e.re);
        }
    }
}

#[test]
fn oscillator_spectrum_is_odd_integers() {
    let (x, p) = build_osc_operators(64).unwrap();
    let h = &p * &p + &x * &x;
    let levels = spectrum_lowest(&h, 3).unwrap();
    for (e, want) in levels.iter().zip([1.0, 3.0, 5.0]) {
        assert!((e.re - want).abs() <= 1e-8 && e.im.abs() <= 1e-9);
    }
}

#[test]
fn two_level_toy_factors_fail_to_commute() {
    let toy = build_two_level_toy(0.3, 0.2);
    let snap = toy.map.at(1.0).unwrap();
    let chain = snap.coriolis_chain();
    let naive = &snap.factor(1).sigma_tilde + &snap.factor(2).sigma_tilde;
    assert!((chain.full() - naive).norm() > 1e-3);

    let single = build_two_level_toy(0.3, 0.0);
    let full = single.map.at(0.6).unwrap().coriolis_chain().full().clone();
    assert!((full - pauli_x() * c(0.0, 0.3)).norm() <= 1e-12);
}
