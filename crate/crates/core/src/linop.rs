//! Dense complex matrices: exponentials, time-dependent Dyson factors, truncated
//! oscillator operators and Hermiticity/positivity diagnostics.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::CoefficientFn;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Residual below which a matrix is treated as Hermitian by [`diagnostics`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest absolute column sum.
pub fn norm_1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` by scaling and squaring with a Padé core.
pub fn matrix_exp(a: &CMatrix) -> Result<CMatrix> {
    let norm = norm_1(a);
    if !norm.is_finite() || !is_finite(a) {
        return Err(Error::Overflow { norm });
    }
    let e = a.exp();
    if !is_finite(&e) {
        return Err(Error::Overflow { norm });
    }
    Ok(e)
}

pub fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().try_inverse().filter(is_finite)
}

/// `[a, b]`
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let hermitian = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::try_new(hermitian, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::EigensolverFailure("hermitian eigensolver".into()))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigenvalues of a general complex matrix, in no particular order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if !is_finite(a) {
        return Err(Error::EigensolverFailure("non-finite entries".into()));
    }
    let schur = Schur::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::EigensolverFailure("non-triangular Schur form".into()))?;
    Ok(ev.iter().copied().collect())
}

/// One Dyson factor and its exact time derivative at a fixed `t`.
#[derive(Debug, Clone)]
pub struct FactorEval {
    pub omega: CMatrix,
    pub omega_inv: CMatrix,
    pub omega_dot: CMatrix,
    /// `i Ω^{-1} Ω̇`
    pub sigma_tilde: CMatrix,
}

/// `Ω(t) = exp(f(t) K)` with a constant generator `K`.
///
/// Hermitian and anti-Hermitian generators (every oscillator and Pauli
/// generator in practice) are diagonalized once at construction, so each
/// evaluation costs two matrix products instead of a full exponential.
#[derive(Debug, Clone)]
pub struct SeparableFactor {
    pub label: String,
    pub generator: CMatrix,
    pub coefficient: CoefficientFn,
    eigen: Option<Arc<UnitaryEigen>>,
}

/// `K = V diag(λ) V†` with unitary `V`.
#[derive(Debug)]
struct UnitaryEigen {
    basis: CMatrix,
    eigenvalues: Vec<Complex64>,
}

impl UnitaryEigen {
    /// Succeeds when `K` is Hermitian or anti-Hermitian to rounding; `K` is
    /// then replaced by its exactly (anti-)Hermitian part so that `Ω` and
    /// `Σ̃` describe the same generator.
    fn try_new(k: &mut CMatrix) -> Option<Self> {
        let scale = 1.0 + k.norm();
        let (hermitian, rotation) = if hermiticity_residual(k) <= NORMAL_TOL * scale {
            *k = (&*k + k.adjoint()) * c(0.5, 0.0);
            (k.clone(), c(1.0, 0.0))
        } else if (&*k + k.adjoint()).norm() <= NORMAL_TOL * scale {
            *k = (&*k - k.adjoint()) * c(0.5, 0.0);
            (&*k * -I, I)
        } else {
            return None;
        };
        let eig = SymmetricEigen::try_new(hermitian, EIGEN_EPS, EIGEN_MAX_ITER)?;
        let eigenvalues = eig.eigenvalues.iter().map(|&l| rotation * l).collect();
        Some(UnitaryEigen { basis: eig.eigenvectors, eigenvalues })
    }

    fn exp(&self, f: f64) -> Result<CMatrix> {
        let mut scaled = self.basis.clone();
        for (mut col, l) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= (l * f).exp();
        }
        let e = scaled * self.basis.adjoint();
        if !is_finite(&e) {
            return Err(Error::Overflow { norm: f.abs() * self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max) });
        }
        Ok(e)
    }
}

/// Relative (anti-)Hermiticity residual below which a generator takes the
/// eigenbasis path.
const NORMAL_TOL: f64 = 1e-12;

impl SeparableFactor {
    pub fn new(label: impl Into<String>, generator: CMatrix, coefficient: CoefficientFn) -> Self {
        let mut generator = generator;
        let eigen = if is_finite(&generator) { UnitaryEigen::try_new(&mut generator).map(Arc::new) } else { None };
        SeparableFactor { label: label.into(), generator, coefficient, eigen }
    }

    fn exp_at(&self, f: f64) -> Result<CMatrix> {
        match &self.eigen {
            Some(e) => e.exp(f),
            None => matrix_exp(&(&self.generator * c(f, 0.0))),
        }
    }

    pub fn omega(&self, t: f64) -> Result<CMatrix> {
        self.exp_at(self.coefficient.value(t))
    }

    /// Since `f(t)K` commutes with `f(s)K`, `Ω̇ = ḟ K Ω` and `i Ω^{-1} Ω̇ = i ḟ K`.
    pub fn eval(&self, t: f64) -> Result<FactorEval> {
        let f = self.coefficient.value(t);
        let fdot = self.coefficient.derivative(t);
        if !f.is_finite() || !fdot.is_finite() {
            return Err(Error::SingularFactor { label: self.label.clone(), t });
        }
        let omega = self.exp_at(f)?;
        let omega_inv = self.exp_at(-f)?;
        let k_dot = &self.generator * c(fdot, 0.0);
        let omega_dot = &k_dot * &omega;
        let sigma_tilde = k_dot * I;
        Ok(FactorEval { omega, omega_inv, omega_dot, sigma_tilde })
    }
}

pub type Sampler = Arc<dyn Fn(f64) -> Result<CMatrix> + Send + Sync>;

/// An arbitrary invertible `Ω(t)` known only through samples. Its derivative
/// comes from central differences and is therefore only `O(h²)` accurate.
#[derive(Clone)]
pub struct GeneralFactor {
    pub label: String,
    pub sampler: Sampler,
    pub fd_step: f64,
}

impl fmt::Debug for GeneralFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralFactor")
            .field("label", &self.label)
            .field("fd_step", &self.fd_step)
            .finish_non_exhaustive()
    }
}

/// Condition number (1-norm) above which a sampled factor counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

impl GeneralFactor {
    pub fn new(label: impl Into<String>, sampler: Sampler) -> Self {
        GeneralFactor { label: label.into(), sampler, fd_step: 1e-5 }
    }

    pub fn omega(&self, t: f64) -> Result<CMatrix> {
        (self.sampler)(t)
    }

    pub fn eval(&self, t: f64) -> Result<FactorEval> {
        let singular = || Error::SingularFactor { label: self.label.clone(), t };
        let omega = self.omega(t)?;
        let omega_inv = inverse(&omega).ok_or_else(singular)?;
        if norm_1(&omega) * norm_1(&omega_inv) > MAX_CONDITION {
            return Err(singular());
        }
        let omega_dot = finite_diff_derivative(|s| self.omega(s), t, self.fd_step)?;
        let sigma_tilde = &omega_inv * &omega_dot * I;
        Ok(FactorEval { omega, omega_inv, omega_dot, sigma_tilde })
    }
}

/// Central difference `(Ω(t+h) − Ω(t−h)) / 2h`.
pub fn finite_diff_derivative<F>(op: F, t: f64, h: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let plus = op(t + h)?;
    let minus = op(t - h)?;
    Ok((plus - minus) * c(0.5 / h, 0.0))
}

/// Truncated position and momentum in the `d`-dimensional number basis,
/// `X = (a + a†)/√2`, `P = i(a† − a)/√2`.
pub fn build_osc_operators(d: usize) -> Result<(CMatrix, CMatrix)> {
    if d < 2 {
        return Err(Error::Domain(format!("oscillator truncation needs d >= 2, got {d}")));
    }
    let mut x = CMatrix::zeros(d, d);
    let mut p = CMatrix::zeros(d, d);
    for n in 1..d {
        let s = (n as f64 / 2.0).sqrt();
        // a|n> = √n |n-1>
        x[(n - 1, n)] = c(s, 0.0);
        x[(n, n - 1)] = c(s, 0.0);
        p[(n - 1, n)] = c(0.0, -s);
        p[(n, n - 1)] = c(0.0, s);
    }
    Ok((x, p))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Frobenius norm of `a − b` restricted to the central `d/2 × d/2` block
/// (rows and columns `d/4 .. d/4 + d/2`). Keeps truncation-edge pollution of
/// high powers of `X`, `P` out of comparisons against the exact algebra.
pub fn interior_residual(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let d = a.nrows();
    let (start, len) = (d / 4, d / 2);
    Ok((a - b).view((start, start), (len, len)).norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `‖A − A†‖_F`
    pub hermiticity_residual: f64,
    /// `None` when `A` is not numerically Hermitian.
    pub min_eigenvalue: Option<f64>,
    pub is_positive_definite: Option<bool>,
}

pub fn diagnostics(a: &CMatrix) -> Result<Diagnostics> {
    let residual = hermiticity_residual(a);
    if residual > HERMITIAN_TOL {
        return Ok(Diagnostics {
            hermiticity_residual: residual,
            min_eigenvalue: None,
            is_positive_definite: None,
        });
    }
    let min = hermitian_eigenvalues(a)?[0];
    Ok(Diagnostics {
        hermiticity_residual: residual,
        min_eigenvalue: Some(min),
        is_positive_definite: Some(min > 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_close;

    mod approx_eq {
        use super::*;
        pub fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
            let r = (a - b).norm();
            assert!(r <= tol, "residual {r:e} > {tol:e}");
        }
    }

    #[test]
    fn eigenbasis_exponential_matches_general_exp() {
        let (x, p) = build_osc_operators(12).unwrap();
        let x3 = &x * &x * &x;
        let p2i = &p * &p * I;
        let generic = &x * &p;
        let f = CoefficientFn::parse("0.05*sin(t)+0.02").unwrap();
        for k in [x3, p2i, generic] {
            let factor = SeparableFactor::new("k", k.clone(), f.clone());
            for t in [0.0, 0.7, 2.0] {
                let direct = matrix_exp(&(&k * c(f.value(t), 0.0))).unwrap();
                let e = factor.eval(t).unwrap();
                let scale = 1.0 + direct.norm();
                assert_close(&e.omega, &direct, 1e-11 * scale);
                assert_close(&(&e.omega * &e.omega_inv), &CMatrix::identity(12, 12), 1e-10 * scale);
            }
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp(&CMatrix::zeros(3, 3)).unwrap();
        assert_close(&e, &CMatrix::identity(3, 3), 0.0);
    }

    #[test]
    fn exp_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0)]));
        let e = matrix_exp(&a).unwrap();
        let rel0 = (e[(0, 0)].re - 1f64.exp()).abs() / 1f64.exp();
        let rel1 = (e[(1, 1)].re - (-2f64).exp()).abs() / (-2f64).exp();
        assert!(rel0 <= 1e-12 && rel1 <= 1e-12);
        assert_eq!(e[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn exp_of_involution() {
        let theta = 0.7;
        let e = matrix_exp(&(pauli_x() * c(0.0, theta))).unwrap();
        let expected = CMatrix::identity(2, 2) * c(theta.cos(), 0.0) + pauli_x() * c(0.0, theta.sin());
        assert_close(&e, &expected, 1e-14);
    }

    #[test]
    fn exp_reports_overflow() {
        let a = CMatrix::from_element(2, 2, c(f64::INFINITY, 0.0));
        assert!(matches!(matrix_exp(&a), Err(Error::Overflow { .. })));
        let big = CMatrix::identity(2, 2) * c(1e4, 0.0);
        assert!(matches!(matrix_exp(&big), Err(Error::Overflow { .. })));
    }

    #[test]
    fn stationary_factor_has_no_coriolis_term() {
        let f = SeparableFactor::new("c", pauli_x(), CoefficientFn::constant(0.4));
        let ev = f.eval(0.3).unwrap();
        assert_eq!(ev.sigma_tilde.norm(), 0.0);
    }

    #[test]
    fn quadratic_factor_on_diagonal_generator() {
        let f = SeparableFactor::new("q", pauli_z(), CoefficientFn::parse("t^2").unwrap());
        let ev = f.eval(1.0).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 2.0), c(0.0, -2.0)]));
        assert_close(&ev.sigma_tilde, &expected, 1e-15);
    }

    #[test]
    fn sigma_tilde_matches_finite_difference() {
        let f = SeparableFactor::new("s", pauli_x(), CoefficientFn::parse("sin(t)").unwrap());
        let t = 0.3;
        let ev = f.eval(t).unwrap();
        let fd = finite_diff_derivative(|s| f.omega(s), t, 1e-5).unwrap();
        assert_close(&ev.sigma_tilde, &(&ev.omega_inv * fd * I), 1e-8);
    }

    #[test]
    fn finite_difference_examples() {
        let k = pauli_z();
        let konst = finite_diff_derivative(|_| Ok(k.clone()), 0.5, 1e-5).unwrap();
        assert!(konst.iter().all(|z| z.norm() <= 1e-10));

        let k = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let d = finite_diff_derivative(|s| matrix_exp(&(&k * c(s, 0.0))), 0.0, 1e-5).unwrap();
        assert_close(&d, &k, 1e-9);

        assert!(finite_diff_derivative(|_| Ok(k.clone()), 0.0, 0.0).is_err());
    }

    #[test]
    fn general_factor_matches_separable_path() {
        let sep = SeparableFactor::new("s", pauli_y(), CoefficientFn::parse("sin(t)+0.2*t^2").unwrap());
        let cloned = sep.clone();
        let mut gen = GeneralFactor::new("g", Arc::new(move |t| cloned.omega(t)));
        gen.fd_step = 1e-4;
        for t in [0.0, 0.4, 1.0] {
            let a = sep.eval(t).unwrap();
            let b = gen.eval(t).unwrap();
            assert_close(&a.omega_dot, &b.omega_dot, 1e-7);
        }
    }

    #[test]
    fn general_factor_rejects_singular_samples() {
        let gen = GeneralFactor::new("zero", Arc::new(|_| Ok(CMatrix::zeros(2, 2))));
        assert!(matches!(gen.eval(0.0), Err(Error::SingularFactor { .. })));
    }

    #[test]
    fn smallest_oscillator_truncation() {
        let (x, p) = build_osc_operators(2).unwrap();
        let s = 0.5f64.sqrt();
        assert_eq!(x, CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]));
        assert_eq!(p, CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -s), c(0.0, s), c(0.0, 0.0)]));
        assert!(build_osc_operators(1).is_err());
    }

    #[test]
    fn oscillator_commutator_has_edge_defect() {
        for d in [2, 3, 8, 33, 64] {
            let (x, p) = build_osc_operators(d).unwrap();
            assert_eq!(x, x.adjoint());
            assert_eq!(p, p.adjoint());
            let mut expected = CMatrix::identity(d, d) * I;
            expected[(d - 1, d - 1)] -= I * d as f64;
            assert_close(&commutator(&x, &p), &expected, 1e-12);
        }
    }

    #[test]
    fn diagnostics_examples() {
        let nil = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let d = diagnostics(&nil).unwrap();
        assert!((d.hermiticity_residual - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.is_positive_definite, None);

        let d = diagnostics(&CMatrix::identity(4, 4)).unwrap();
        assert_eq!(d.hermiticity_residual, 0.0);
        assert!((d.min_eigenvalue.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(d.is_positive_definite, Some(true));

        let neg = pauli_z();
        assert_eq!(diagnostics(&neg).unwrap().is_positive_definite, Some(false));
    }

    #[test]
    fn general_eigenvalues_of_triangular() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(5.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-2.0, 0.0)).norm() < 1e-12);
        assert!((ev[1] - c(1.0, 1.0)).norm() < 1e-12);
    }
}
