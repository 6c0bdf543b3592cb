#![allow(dead_code)]

use cor_forge::linop::{c, CMatrix, CVector, SeparableFactor};
use cor_forge::{CoefficientFn, FactorizedDysonMap};
use rand::Rng;

pub fn random_matrix<R: Rng>(rng: &mut R, d: usize, frobenius: f64) -> CMatrix {
    let m = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = m.norm();
    m * c(frobenius / n, 0.0)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let m = random_matrix(rng, d, 2.0);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// `a sin(b t) + c t + e`, written out through the expression grammar.
pub fn random_coefficient<R: Rng>(rng: &mut R) -> CoefficientFn {
    let a: f64 = rng.gen_range(-0.5..0.5);
    let b: f64 = rng.gen_range(0.5..2.0);
    let k: f64 = rng.gen_range(-0.5..0.5);
    let e: f64 = rng.gen_range(-0.3..0.3);
    CoefficientFn::parse(&format!("({a})*sin({b}*t)+({k})*t+({e})")).expect("generated expression")
}

pub fn random_map<R: Rng>(rng: &mut R, d: usize, n: usize) -> FactorizedDysonMap {
    let factors = (0..n)
        .map(|k| {
            let generator = random_matrix(rng, d, 1.0);
            SeparableFactor::new(format!("f{}", k + 1), generator, random_coefficient(rng))
        })
        .collect();
    FactorizedDysonMap::separable(d, factors).expect("consistent dimensions")
}
