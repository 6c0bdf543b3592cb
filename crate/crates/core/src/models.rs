//! Built-in scenarios: a two-level toy with two non-commuting factors, the
//! four-factor exponential map with a wrong-sign quartic generator, and the
//! Hermitian Jones–Mateo partner of the pure wrong-sign quartic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{Ensemble, TimeGrid};
use crate::expr::{CoefficientFn, Expr};
use crate::linop::{
    build_osc_operators, c, eigenvalues, hermitian_eigenvalues, hermiticity_residual, pauli_x,
    pauli_z, CMatrix, CVector, SeparableFactor, HERMITIAN_TOL, I,
};
use crate::pictures::{FactorizedDysonMap, Hamiltonian, OperatorSum, PictureIndex, StatePair};

/// An observable that is time-independent in the picture it is defined in.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub matrix: CMatrix,
    pub defined_in: usize,
}

#[derive(Debug, Clone)]
pub struct ModelScenario {
    pub name: String,
    pub map: FactorizedDysonMap,
    pub hamiltonian: Hamiltonian,
    /// Picture in which the initial state (and ensemble) are given.
    pub picture: usize,
    pub initial_state: CVector,
    /// Kets and weights of an optional mixed initial state.
    pub ensemble: Option<(Vec<CVector>, Vec<f64>)>,
    pub observables: Vec<Observable>,
    pub grid: TimeGrid,
}

impl ModelScenario {
    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn is_bottom_up(&self) -> bool {
        matches!(self.hamiltonian, Hamiltonian::BottomUp(_))
    }

    /// Pure initial state moved from the scenario picture into picture `j`.
    pub fn initial_pair(&self, j: PictureIndex) -> Result<StatePair> {
        let snap = self.map.at(self.grid.start)?;
        let home = self.map.picture(self.picture)?;
        let s = snap.pure_state(home, self.initial_state.clone());
        crate::pictures::move_state(&s, j, &snap)
    }

    /// Initial ensemble in picture `j`; a pure state with weight one when the
    /// scenario declares no ensemble.
    pub fn initial_ensemble(&self, j: PictureIndex) -> Result<Ensemble> {
        let Some((kets, weights)) = &self.ensemble else {
            return Ok(Ensemble::pure(self.initial_pair(j)?));
        };
        let snap = self.map.at(self.grid.start)?;
        let home = self.map.picture(self.picture)?;
        let states = kets
            .iter()
            .map(|k| crate::pictures::move_state(&snap.pure_state(home, k.clone()), j, &snap))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(states, weights.clone())
    }

    /// `‖𝔥(t) − 𝔥(t)†‖_F` of the textbook Hamiltonian; zero by construction in
    /// top-down mode.
    pub fn textbook_hermiticity(&self, t: f64) -> Result<f64> {
        let snap = self.map.at(t)?;
        Ok(hermiticity_residual(&self.hamiltonian.textbook_at(&snap)))
    }
}

fn basis(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = c(1.0, 0.0);
    v
}

fn linear(coeff: f64) -> CoefficientFn {
    CoefficientFn::parse(&format!("{coeff}*t")).expect("linear coefficient")
}

/// Two-level map `Ω_1 = exp(a t X)`, `Ω_2 = exp(b t Z)` with `𝔥 = Z`.
pub fn build_two_level_toy(a: f64, b: f64) -> ModelScenario {
    let map = FactorizedDysonMap::separable(
        2,
        vec![
            SeparableFactor::new("omega1", pauli_x(), linear(a)),
            SeparableFactor::new("omega2", pauli_z(), linear(b)),
        ],
    )
    .expect("2x2 generators");
    let s = 0.5f64.sqrt();
    ModelScenario {
        name: "two-level".into(),
        map,
        hamiltonian: Hamiltonian::TopDown(OperatorSum::constant(pauli_z())),
        picture: 0,
        initial_state: CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]),
        // Θ(0) = I, so the number basis is Θ-orthonormal at the start.
        ensemble: Some((vec![basis(2, 0), basis(2, 1)], vec![0.7, 0.3])),
        observables: vec![
            Observable { name: "sigma_x".into(), matrix: pauli_x(), defined_in: 2 },
            Observable { name: "sigma_z".into(), matrix: pauli_z(), defined_in: 2 },
        ],
        grid: TimeGrid::rk4(0.0, 1.0, 1e-3).expect("fixed grid"),
    }
}

/// Reparametrization of the mass and coupling through an auxiliary time `σ(t)`:
/// `g = 1/(4σ³)`, `m = (4c₂ + σ̇² − 2σσ̈)/(4σ²)`.
#[derive(Debug, Clone)]
pub struct SigmaParametrization {
    pub sigma: CoefficientFn,
    pub c2: f64,
}

impl SigmaParametrization {
    pub fn new(sigma: CoefficientFn, c2: f64) -> Self {
        SigmaParametrization { sigma, c2 }
    }

    pub fn coupling(&self, t: f64) -> f64 {
        1.0 / (4.0 * self.sigma.value(t).powi(3))
    }

    pub fn mass(&self, t: f64) -> f64 {
        let s = self.sigma.value(t);
        let sd = self.sigma.derivative(t);
        let sdd = self.sigma.second_derivative(t);
        (4.0 * self.c2 + sd * sd - 2.0 * s * sdd) / (4.0 * s * s)
    }

    /// `g(t)` as a closed-form expression.
    pub fn coupling_fn(&self) -> CoefficientFn {
        let s = self.sigma.expr().clone();
        CoefficientFn::from_expr(Expr::Div(
            Box::new(Expr::Num(1.0)),
            Box::new(Expr::Mul(Box::new(Expr::Num(4.0)), Box::new(Expr::Pow(Box::new(s), 3)))),
        ))
    }

    /// `m(t)` as a closed-form expression.
    pub fn mass_fn(&self) -> CoefficientFn {
        let s = || Box::new(self.sigma.expr().clone());
        let sd = Box::new(self.sigma.derivative_expr().clone());
        let sdd = Box::new(self.sigma.second_derivative_expr().clone());
        let numerator = Expr::Sub(
            Box::new(Expr::Add(Box::new(Expr::Num(4.0 * self.c2)), Box::new(Expr::Pow(sd, 2)))),
            Box::new(Expr::Mul(Box::new(Expr::Mul(Box::new(Expr::Num(2.0)), s())), sdd)),
        );
        let denominator = Expr::Mul(Box::new(Expr::Num(4.0)), Box::new(Expr::Pow(s(), 2)));
        CoefficientFn::from_expr(Expr::Div(Box::new(numerator), Box::new(denominator)))
    }

    fn check_positive(&self, times: &[f64]) -> Result<()> {
        for &t in times {
            let s = self.sigma.value(t);
            if !(s > 0.0) {
                return Err(Error::Domain(format!("sigma({t}) = {s} is not positive")));
            }
        }
        Ok(())
    }
}

/// Coefficients of the four exponential factors.
#[derive(Debug, Clone)]
pub struct ExponentialCoefficients {
    pub alpha: CoefficientFn,
    pub beta: CoefficientFn,
    pub gamma: CoefficientFn,
    pub delta: CoefficientFn,
}

impl Default for ExponentialCoefficients {
    fn default() -> Self {
        let p = |s: &str| CoefficientFn::parse(s).expect("built-in coefficient");
        ExponentialCoefficients {
            alpha: p("0.05*sin(t)"),
            beta: p("0.002*(1+t)"),
            gamma: p("0.03*t"),
            delta: p("0.1*cos(t)"),
        }
    }
}

/// Factors `e^{iδP}`, `e^{iγP²}`, `e^{βP³}`, `e^{αX}` (applied in that order)
/// on the `d`-level oscillator truncation, driven bottom-up by the wrong-sign
/// generator `G = P² + (m/4) X² − (g/16) X⁴`.
pub fn build_fring_tenney_scenario(
    d: usize,
    coefficients: ExponentialCoefficients,
    param: &SigmaParametrization,
    grid: TimeGrid,
) -> Result<ModelScenario> {
    if d < 8 {
        return Err(Error::Domain(format!("oscillator truncation needs d >= 8, got {d}")));
    }
    param.check_positive(&grid.times())?;
    let (x, p) = build_osc_operators(d)?;
    let p2 = &p * &p;
    let p3 = &p2 * &p;
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let ExponentialCoefficients { alpha, beta, gamma, delta } = coefficients;
    let map = FactorizedDysonMap::separable(
        d,
        vec![
            SeparableFactor::new("delta", &p * I, delta),
            SeparableFactor::new("gamma", &p2 * I, gamma),
            SeparableFactor::new("beta", p3, beta),
            SeparableFactor::new("alpha", x.clone(), alpha),
        ],
    )?;
    let generator = OperatorSum::new(
        d,
        vec![
            (CoefficientFn::constant(1.0), p2),
            (param.mass_fn(), x2 * c(0.25, 0.0)),
            (param.coupling_fn(), x4 * c(-1.0 / 16.0, 0.0)),
        ],
    )?;
    Ok(ModelScenario {
        name: "fring-tenney".into(),
        map,
        hamiltonian: Hamiltonian::BottomUp(generator),
        picture: 0,
        initial_state: basis(d, 0),
        ensemble: None,
        observables: vec![
            Observable { name: "x".into(), matrix: x, defined_in: 0 },
            Observable { name: "p".into(), matrix: p, defined_in: 0 },
        ],
        grid,
    })
}

/// Default built-in instance: `d = 16`, `σ = 1 + 0.1 t²`, `c₂ = 0`.
pub fn default_fring_tenney() -> ModelScenario {
    let param = SigmaParametrization::new(CoefficientFn::parse("1+0.1*t^2").expect("sigma"), 0.0);
    build_fring_tenney_scenario(
        16,
        ExponentialCoefficients::default(),
        &param,
        TimeGrid::rk4(0.0, 1.0, 1e-3).expect("fixed grid"),
    )
    .expect("built-in parameters are valid")
}

/// `P⁴/(64g) − P/2 + 16g X²` in the `d`-level oscillator basis.
pub fn build_jones_mateo(g: f64, d: usize) -> Result<CMatrix> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("coupling must be positive, got {g}")));
    }
    if d < 16 {
        return Err(Error::Domain(format!("Jones–Mateo truncation needs d >= 16, got {d}")));
    }
    let (x, p) = build_osc_operators(d)?;
    let p2 = &p * &p;
    let h = &p2 * &p2 * c(1.0 / (64.0 * g), 0.0) - &p * c(0.5, 0.0) + &x * &x * c(16.0 * g, 0.0);
    // Symmetrize away rounding in the products.
    Ok((&h + h.adjoint()) * c(0.5, 0.0))
}

/// The `k` eigenvalues of smallest real part, ascending by real part.
pub fn spectrum_lowest(a: &CMatrix, k: usize) -> Result<Vec<Complex64>> {
    let d = a.nrows();
    if k == 0 || k > d {
        return Err(Error::Domain(format!("requested {k} eigenvalues of a {d}x{d} matrix")));
    }
    let mut ev: Vec<Complex64> = if hermiticity_residual(a) <= HERMITIAN_TOL * (1.0 + a.norm()) {
        hermitian_eigenvalues(a)?.into_iter().map(|x| c(x, 0.0)).collect()
    } else {
        eigenvalues(a)?
    };
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev.truncate(k);
    Ok(ev)
}

/// Lowest levels of the Jones–Mateo partner at two truncations.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub g: f64,
    pub dims: (usize, usize),
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Largest `|Im λ|` seen at either truncation.
    pub max_imag: f64,
}

impl ConvergenceTable {
    pub fn differences(&self) -> Vec<f64> {
        self.coarse.iter().zip(&self.fine).map(|(a, b)| (a - b).abs()).collect()
    }
}

pub fn jones_mateo_convergence(g: f64, dims: (usize, usize), k: usize) -> Result<ConvergenceTable> {
    let mut max_imag: f64 = 0.0;
    let mut levels = |d| -> Result<Vec<f64>> {
        let ev = spectrum_lowest(&build_jones_mateo(g, d)?, k)?;
        max_imag = ev.iter().fold(max_imag, |m, z| m.max(z.im.abs()));
        Ok(ev.iter().map(|z| z.re).collect())
    };
    let coarse = levels(dims.0)?;
    let fine = levels(dims.1)?;
    Ok(ConvergenceTable { g, dims, coarse, fine, max_imag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pictures::PictureIndex;

    #[test]
    fn stationary_toy_has_no_coriolis() {
        let s = build_two_level_toy(0.0, 0.0);
        let chain = s.map.at(0.7).unwrap().coriolis_chain();
        for n in 1..=3 {
            assert_eq!(chain.sigma(n).norm(), 0.0);
        }
    }

    #[test]
    fn toy_factors_do_not_commute() {
        let s = build_two_level_toy(0.3, 0.2);
        let snap = s.map.at(1.0).unwrap();
        let naive = &snap.factor(1).sigma_tilde + &snap.factor(2).sigma_tilde;
        let gap = (snap.coriolis_chain().full() - naive).norm();
        assert!(gap > 1e-3, "gap {gap}");
    }

    #[test]
    fn toy_with_single_active_factor() {
        let s = build_two_level_toy(0.3, 0.0);
        let sigma = s.map.at(0.5).unwrap().coriolis_chain().full().clone();
        assert!((sigma - pauli_x() * I * c(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sigma_parametrization_values() {
        let flat = SigmaParametrization::new(CoefficientFn::constant(1.0), 0.0);
        assert_eq!(flat.coupling(0.3), 0.25);
        assert_eq!(flat.mass(0.3), 0.0);

        let p = SigmaParametrization::new(CoefficientFn::parse("1+t^2").unwrap(), 0.0);
        assert_eq!(p.coupling(1.0), 1.0 / 32.0);
        assert_eq!(p.mass(1.0), -0.25);
        assert!((p.mass_fn().value(1.0) + 0.25).abs() < 1e-15);
        assert!((p.coupling_fn().value(1.0) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn fring_tenney_rejects_bad_inputs() {
        let bad = SigmaParametrization::new(CoefficientFn::parse("0.5-t").unwrap(), 0.0);
        let grid = TimeGrid::rk4(0.0, 1.0, 0.1).unwrap();
        let err = build_fring_tenney_scenario(8, ExponentialCoefficients::default(), &bad, grid).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let ok = SigmaParametrization::new(CoefficientFn::constant(1.0), 0.0);
        assert!(build_fring_tenney_scenario(4, ExponentialCoefficients::default(), &ok, grid).is_err());
    }

    #[test]
    fn fring_tenney_reports_textbook_hermiticity() {
        let s = default_fring_tenney();
        assert!(s.is_bottom_up());
        let r = s.textbook_hermiticity(0.5).unwrap();
        assert!(r.is_finite());
        let j = PictureIndex::new(0, &s.map).unwrap();
        let st = s.initial_pair(j).unwrap();
        let theta00 = s.map.at(0.0).unwrap().metric(j)[(0, 0)];
        assert!((st.physical_norm() - theta00).norm() < 1e-12);
    }

    #[test]
    fn jones_mateo_is_hermitian() {
        for (g, d) in [(0.5, 16), (1.0, 40), (2.0, 64)] {
            let h = build_jones_mateo(g, d).unwrap();
            assert!(hermiticity_residual(&h) <= 1e-10);
        }
        assert!(build_jones_mateo(0.0, 32).is_err());
        assert!(build_jones_mateo(1.0, 8).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
        assert_eq!(spectrum_lowest(&d, 2).unwrap(), vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(spectrum_lowest(&d, 0).is_err());
        assert!(spectrum_lowest(&d, 4).is_err());

        let (x, p) = build_osc_operators(64).unwrap();
        let ho = &p * &p + &x * &x;
        let ev = spectrum_lowest(&ho, 3).unwrap();
        for (z, e) in ev.iter().zip([1.0, 3.0, 5.0]) {
            assert!((z.re - e).abs() <= 1e-8 && z.im.abs() <= 1e-9);
        }
    }
}
