//! Exact operator algebra over the canonical pair `x`, `p` with `[x, p] = i`.
//!
//! Operators are kept in normal order (every `x` left of every `p`) with
//! coefficients that are polynomials in named, real time-functions and their
//! first derivatives. All arithmetic is exact over the Gaussian rationals.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Complex number with rational parts.
pub type CRational = Complex<Rational64>;

/// Default cap on the number of nested commutators in [`adjoint_conjugate`].
pub const DEFAULT_MAX_DEPTH: usize = 32;

fn cr(re: i64, im: i64) -> CRational {
    Complex::new(Rational64::from_integer(re), Rational64::from_integer(im))
}

/// A named real function of time, or its first time derivative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub name: String,
    pub dot: bool,
}

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol { name: name.into(), dot: false }
    }

    pub fn derivative(&self) -> Self {
        assert!(!self.dot, "only first derivatives are representable");
        Symbol { name: self.name.clone(), dot: true }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dot {
            write!(f, "ad({})", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// Product of symbols with positive exponents, sorted by symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarMonomial(Vec<(Symbol, u32)>);

impl ScalarMonomial {
    pub fn one() -> Self {
        ScalarMonomial(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    fn mul(&self, other: &Self) -> Self {
        let mut merged: BTreeMap<Symbol, u32> = BTreeMap::new();
        for (s, e) in self.0.iter().chain(other.0.iter()) {
            *merged.entry(s.clone()).or_default() += e;
        }
        ScalarMonomial(merged.into_iter().collect())
    }
}

impl fmt::Display for ScalarMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (s, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in time-function symbols with Gaussian-rational coefficients.
///
/// Canonical: monomials sorted, no zero coefficients. Structural equality is
/// therefore mathematical equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ScalarExpr {
    terms: BTreeMap<ScalarMonomial, CRational>,
}

impl ScalarExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: CRational) -> Self {
        let mut e = Self::zero();
        e.add_term(ScalarMonomial::one(), c);
        e
    }

    pub fn integer(re: i64, im: i64) -> Self {
        Self::constant(cr(re, im))
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut e = Self::zero();
        e.add_term(ScalarMonomial(vec![(s, 1)]), CRational::one());
        e
    }

    /// Monomial `c * s1 * s2 * ...` (repeated symbols multiply).
    pub fn term(c: CRational, symbols: &[Symbol]) -> Self {
        let mono = symbols.iter().fold(ScalarMonomial::one(), |m, s| {
            m.mul(&ScalarMonomial(vec![(s.clone(), 1)]))
        });
        let mut e = Self::zero();
        e.add_term(mono, c);
        e
    }

    fn add_term(&mut self, m: ScalarMonomial, c: CRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(CRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ScalarMonomial, &CRational)> {
        self.terms.iter()
    }

    /// The value if this expression is a constant.
    pub fn as_constant(&self) -> Option<CRational> {
        match self.terms.len() {
            0 => Some(CRational::zero()),
            1 => self.terms.get(&ScalarMonomial::one()).copied(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(cr(-1, 0))
    }

    pub fn scale(&self, c: CRational) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), *v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), *c1 * *c2);
            }
        }
        out
    }

    /// Numeric value given real values for every symbol that occurs.
    pub fn eval(&self, values: &dyn Fn(&Symbol) -> Option<f64>) -> Result<Complex64> {
        let mut acc = Complex64::zero();
        for (m, c) in &self.terms {
            let mut v = Complex64::new(ratio_f64(&c.re), ratio_f64(&c.im));
            for (s, e) in m.factors() {
                let x = values(s)
                    .ok_or_else(|| Error::Domain(format!("no value for symbol {s}")))?;
                v *= x.powi(*e as i32);
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Whether every coefficient has a negative leading component; used to
    /// pull a sign out front when printing.
    fn all_negative(&self) -> bool {
        !self.terms.is_empty()
            && self.terms.values().all(|c| {
                if !c.re.is_zero() {
                    c.re.is_negative()
                } else {
                    c.im.is_negative()
                }
            })
    }
}

fn ratio_f64(r: &Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn fmt_rational(r: &Rational64) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Formats `c * m`, with the sign (if any) leading.
fn fmt_scalar_term(c: &CRational, m: &ScalarMonomial) -> String {
    let mono = m.to_string();
    let (sign, body) = if c.im.is_zero() {
        let sign = if c.re.is_negative() { "-" } else { "" };
        let mag = c.re.abs();
        let body = if mag.is_one() && !m.is_one() {
            String::new()
        } else {
            fmt_rational(&mag)
        };
        (sign, body)
    } else if c.re.is_zero() {
        let sign = if c.im.is_negative() { "-" } else { "" };
        let mag = c.im.abs();
        let body = if mag.is_one() {
            "i".to_string()
        } else {
            format!("{}*i", fmt_rational(&mag))
        };
        (sign, body)
    } else {
        let im = if c.im.is_negative() {
            format!("-{}*i", fmt_rational(&c.im.abs()))
        } else {
            format!("+{}*i", fmt_rational(&c.im))
        };
        ("", format!("({}{})", fmt_rational(&c.re), im))
    };
    match (body.is_empty(), mono.is_empty()) {
        (true, _) => format!("{sign}{mono}"),
        (false, true) => format!("{sign}{body}"),
        (false, false) => format!("{sign}{body}*{mono}"),
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let s = fmt_scalar_term(c, m);
            if k > 0 && !s.starts_with('-') {
                f.write_str("+")?;
            }
            f.write_str(&s)?;
        }
        Ok(())
    }
}

/// The normal-ordered product `x^x p^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeylMonomial {
    pub x: u32,
    pub p: u32,
}

impl WeylMonomial {
    pub fn new(x: u32, p: u32) -> Self {
        WeylMonomial { x, p }
    }

    pub fn degree(&self) -> u32 {
        self.x + self.p
    }
}

impl fmt::Display for WeylMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |name: &str, e: u32| match e {
            0 => String::new(),
            1 => name.to_string(),
            _ => format!("{name}^{e}"),
        };
        let parts: Vec<String> = [part("x", self.x), part("p", self.p)]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Normal-ordered polynomial in `x`, `p` with symbolic scalar coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct WeylPolynomial {
    terms: BTreeMap<WeylMonomial, ScalarExpr>,
}

impl WeylPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, ScalarExpr::integer(1, 0))
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, ScalarExpr::integer(1, 0))
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, ScalarExpr::integer(1, 0))
    }

    pub fn monomial(x: u32, p: u32, coeff: ScalarExpr) -> Self {
        let mut out = Self::zero();
        out.add_term(WeylMonomial::new(x, p), coeff);
        out
    }

    pub fn scalar(coeff: ScalarExpr) -> Self {
        Self::monomial(0, 0, coeff)
    }

    fn add_term(&mut self, m: WeylMonomial, c: ScalarExpr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&m) {
            Some(existing) => existing.add(&c),
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree `a + b`; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(WeylMonomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WeylMonomial, &ScalarExpr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, x: u32, p: u32) -> ScalarExpr {
        self.terms
            .get(&WeylMonomial::new(x, p))
            .cloned()
            .unwrap_or_default()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&ScalarExpr::integer(-1, 0))
    }

    pub fn scale(&self, c: &ScalarExpr) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, v.mul(c));
        }
        out
    }

    /// Matrix realization `Σ c · X^a P^b` with the given representatives of
    /// `x`, `p` and symbol values.
    pub fn realize(
        &self,
        x: &DMatrix<Complex64>,
        p: &DMatrix<Complex64>,
        values: &dyn Fn(&Symbol) -> Option<f64>,
    ) -> Result<DMatrix<Complex64>> {
        let d = x.nrows();
        let mut out = DMatrix::zeros(d, d);
        for (m, c) in &self.terms {
            let coeff = c.eval(values)?;
            let xa = mat_pow(x, m.x);
            let pb = mat_pow(p, m.p);
            out += (xa * pb) * coeff;
        }
        Ok(out)
    }
}

fn mat_pow(a: &DMatrix<Complex64>, n: u32) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..n {
        out = &out * a;
    }
    out
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn factorial(k: u32) -> i64 {
    (1..=k as i64).product()
}

/// `(-i)^k`
fn minus_i_pow(k: u32) -> CRational {
    match k % 4 {
        0 => cr(1, 0),
        1 => cr(0, -1),
        2 => cr(-1, 0),
        _ => cr(0, 1),
    }
}

/// Product `left · right` brought back to normal order.
///
/// Uses `p^b x^c = Σ_k C(b,k) C(c,k) k! (-i)^k x^(c-k) p^(b-k)`, the closed form of
/// repeatedly rewriting `p x → x p − i`.
pub fn normal_order(left: &WeylPolynomial, right: &WeylPolynomial) -> WeylPolynomial {
    let mut out = WeylPolynomial::zero();
    for (ml, cl) in &left.terms {
        for (mr, crr) in &right.terms {
            let base = cl.mul(crr);
            for k in 0..=ml.p.min(mr.x) {
                let weight = binomial(ml.p, k) * binomial(mr.x, k) * factorial(k);
                let c = minus_i_pow(k) * cr(weight, 0);
                out.add_term(
                    WeylMonomial::new(ml.x + mr.x - k, ml.p + mr.p - k),
                    base.scale(c),
                );
            }
        }
    }
    out
}

/// `[a, b] = ab − ba`
pub fn commutator(a: &WeylPolynomial, b: &WeylPolynomial) -> WeylPolynomial {
    normal_order(a, b).sub(&normal_order(b, a))
}

/// `e^A B e^{-A} = Σ_k ad_A^k(B) / k!`, exact when the series terminates.
pub fn adjoint_conjugate(
    a: &WeylPolynomial,
    b: &WeylPolynomial,
    max_depth: usize,
) -> Result<WeylPolynomial> {
    let mut sum = b.clone();
    let mut term = b.clone();
    for k in 1..=max_depth {
        let inv_k = Complex::new(Rational64::new(1, k as i64), Rational64::zero());
        term = commutator(a, &term).scale(&ScalarExpr::constant(inv_k));
        if term.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&term);
    }
    Err(Error::NonTerminatingSeries { depth: max_depth })
}

/// One exponential factor `exp(f(t) · K)` with a symbolic coefficient `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicFactor {
    coefficient: Symbol,
    generator: WeylPolynomial,
}

impl SymbolicFactor {
    /// `generator` must be a constant multiple of a single pure power of
    /// `x` or of `p`; that class keeps every adjoint series finite.
    pub fn new(coefficient: impl Into<String>, generator: WeylPolynomial) -> Result<Self> {
        let ok = {
            let mut terms = generator.terms();
            match (terms.next(), terms.next()) {
                (Some((m, c)), None) => (m.x == 0 || m.p == 0) && c.as_constant().is_some(),
                _ => false,
            }
        };
        if !ok {
            return Err(Error::Domain(format!(
                "generator `{generator}` is not a constant multiple of a pure power of x or p"
            )));
        }
        Ok(SymbolicFactor { coefficient: Symbol::new(coefficient), generator })
    }

    pub fn coefficient(&self) -> &Symbol {
        &self.coefficient
    }

    pub fn generator(&self) -> &WeylPolynomial {
        &self.generator
    }

    /// The exponent `f · K`.
    pub fn exponent(&self) -> WeylPolynomial {
        self.generator
            .scale(&ScalarExpr::symbol(self.coefficient.clone()))
    }

    /// Single-factor Coriolis piece `i Ω^{-1} Ω̇ = i ḟ K`.
    pub fn sigma_tilde(&self) -> WeylPolynomial {
        let c = ScalarExpr::term(cr(0, 1), &[self.coefficient.derivative()]);
        self.generator.scale(&c)
    }

    /// `Ω^{-1} B Ω = e^{-fK} B e^{fK}`
    pub fn conjugate_inverse(&self, b: &WeylPolynomial, max_depth: usize) -> Result<WeylPolynomial> {
        adjoint_conjugate(&self.exponent().neg(), b, max_depth)
    }
}

/// Composite Coriolis operators for `Ω = Ω_N ··· Ω_1`, factors listed `Ω_1` first.
///
/// Returns `[Σ_N, Σ_{N-1}, …, Σ_1]` where `Σ_N = i ḟ_N K_N` and
/// `Σ_n = i ḟ_n K_n + Ω_n^{-1} Σ_{n+1} Ω_n`. The last entry is the full
/// `i Ω^{-1} Ω̇`.
pub fn composite_coriolis_symbolic(
    factors: &[SymbolicFactor],
    max_depth: usize,
) -> Result<Vec<WeylPolynomial>> {
    let mut out = Vec::with_capacity(factors.len());
    let mut sigma = WeylPolynomial::zero();
    for factor in factors.iter().rev() {
        sigma = factor
            .sigma_tilde()
            .add(&factor.conjugate_inverse(&sigma, max_depth)?);
        out.push(sigma.clone());
    }
    Ok(out)
}

impl fmt::Display for WeylPolynomial {
    /// Highest monomials first, e.g.
    /// `i*ad(alpha)*x+i*ad(beta)*p^3-(3*ad(alpha)*beta+ad(gamma))*p^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.all_negative();
            let c = if negative { c.neg() } else { c.clone() };
            let multi = c.terms.len() > 1;
            let scalar = c.to_string();
            let mono = m.to_string();
            let body = match (mono.is_empty(), multi) {
                (true, false) => scalar,
                (true, true) => format!("({scalar})"),
                (false, true) => format!("({scalar})*{mono}"),
                (false, false) => match scalar.as_str() {
                    "1" => mono,
                    _ => format!("{scalar}*{mono}"),
                },
            };
            match (negative, k) {
                (true, _) => write!(f, "-{body}")?,
                (false, 0) => f.write_str(&body)?,
                (false, _) => write!(f, "+{body}")?,
            }
        }
        Ok(())
    }
}

/// The four-factor exponential map `e^{iδp}`, `e^{iγp²}`, `e^{βp³}`, `e^{αx}`,
/// listed innermost first.
pub fn fring_tenney_factors() -> Vec<SymbolicFactor> {
    let i = ScalarExpr::integer(0, 1);
    vec![
        SymbolicFactor::new("delta", WeylPolynomial::monomial(0, 1, i.clone())),
        SymbolicFactor::new("gamma", WeylPolynomial::monomial(0, 2, i)),
        SymbolicFactor::new("beta", WeylPolynomial::monomial(0, 3, ScalarExpr::integer(1, 0))),
        SymbolicFactor::new("alpha", WeylPolynomial::x()),
    ]
    .into_iter()
    .collect::<Result<_>>()
    .expect("fixed generators are in the terminating class")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: &str) -> Symbol {
        Symbol::new(n)
    }

    fn dot(n: &str) -> Symbol {
        Symbol::new(n).derivative()
    }

    fn num(re: i64, im: i64) -> ScalarExpr {
        ScalarExpr::integer(re, im)
    }

    fn mono(x: u32, p: u32, re: i64, im: i64) -> WeylPolynomial {
        WeylPolynomial::monomial(x, p, num(re, im))
    }

    #[test]
    fn normal_order_basic_products() {
        let x = WeylPolynomial::x();
        let p = WeylPolynomial::p();
        assert_eq!(normal_order(&p, &x), mono(1, 1, 1, 0).add(&mono(0, 0, 0, -1)));
        assert_eq!(normal_order(&x, &p), mono(1, 1, 1, 0));
        let p2 = mono(0, 2, 1, 0);
        assert_eq!(normal_order(&p2, &x), mono(1, 2, 1, 0).add(&mono(0, 1, 0, -2)));
    }

    #[test]
    fn commutator_examples() {
        let x = WeylPolynomial::x();
        let p = WeylPolynomial::p();
        assert_eq!(commutator(&x, &p), mono(0, 0, 0, 1));
        assert_eq!(commutator(&mono(0, 3, 1, 0), &x), mono(0, 2, 0, -3));
        assert!(commutator(&x, &mono(2, 0, 1, 0)).is_zero());
    }

    #[test]
    fn adjoint_conjugate_examples() {
        let x = WeylPolynomial::x();
        let delta = ScalarExpr::symbol(sym("delta"));
        let a = WeylPolynomial::monomial(0, 1, delta.scale(cr(0, -1)));
        assert_eq!(
            adjoint_conjugate(&a, &x, DEFAULT_MAX_DEPTH).unwrap(),
            x.sub(&WeylPolynomial::scalar(delta))
        );

        let beta = ScalarExpr::symbol(sym("beta"));
        let a = WeylPolynomial::monomial(0, 3, beta.neg());
        assert_eq!(
            adjoint_conjugate(&a, &x, DEFAULT_MAX_DEPTH).unwrap(),
            x.add(&WeylPolynomial::monomial(0, 2, beta.scale(cr(0, 3))))
        );

        let p2 = mono(0, 2, 1, 0);
        assert_eq!(
            adjoint_conjugate(&WeylPolynomial::zero(), &p2, DEFAULT_MAX_DEPTH).unwrap(),
            p2
        );
    }

    #[test]
    fn adjoint_conjugate_reports_non_termination() {
        // ad_{xp}(x) = -i x never vanishes.
        let xp = mono(1, 1, 1, 0);
        let err = adjoint_conjugate(&xp, &WeylPolynomial::x(), 8).unwrap_err();
        assert_eq!(err, Error::NonTerminatingSeries { depth: 8 });
    }

    #[test]
    fn flagship_closed_form() {
        let sigmas = composite_coriolis_symbolic(&fring_tenney_factors(), DEFAULT_MAX_DEPTH).unwrap();
        let sigma = sigmas.last().unwrap();

        let expected = WeylPolynomial::zero()
            .add(&WeylPolynomial::monomial(1, 0, ScalarExpr::term(cr(0, 1), &[dot("alpha")])))
            .add(&WeylPolynomial::monomial(0, 3, ScalarExpr::term(cr(0, 1), &[dot("beta")])))
            .add(&WeylPolynomial::monomial(
                0,
                2,
                ScalarExpr::term(cr(-3, 0), &[dot("alpha"), sym("beta")])
                    .sub(&ScalarExpr::symbol(dot("gamma"))),
            ))
            .add(&WeylPolynomial::monomial(
                0,
                1,
                ScalarExpr::term(cr(0, -2), &[sym("gamma"), dot("alpha")])
                    .sub(&ScalarExpr::symbol(dot("delta"))),
            ))
            .add(&WeylPolynomial::scalar(ScalarExpr::term(
                cr(0, -1),
                &[sym("delta"), dot("alpha")],
            )));
        assert_eq!(sigma, &expected);
        assert_eq!(
            sigma.to_string(),
            "i*ad(alpha)*x+i*ad(beta)*p^3-(3*ad(alpha)*beta+ad(gamma))*p^2\
             -(2*i*ad(alpha)*gamma+ad(delta))*p-i*ad(alpha)*delta"
        );
    }

    #[test]
    fn single_factor_and_commuting_factors() {
        let f = SymbolicFactor::new("alpha", WeylPolynomial::x()).unwrap();
        let s = composite_coriolis_symbolic(&[f], DEFAULT_MAX_DEPTH).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s[0],
            WeylPolynomial::monomial(1, 0, ScalarExpr::term(cr(0, 1), &[dot("alpha")]))
        );

        let ip = mono(0, 1, 0, 1);
        let fs = [
            SymbolicFactor::new("d1", ip.clone()).unwrap(),
            SymbolicFactor::new("d2", ip).unwrap(),
        ];
        let s = composite_coriolis_symbolic(&fs, DEFAULT_MAX_DEPTH).unwrap();
        let expected = ScalarExpr::symbol(dot("d1")).add(&ScalarExpr::symbol(dot("d2"))).neg();
        assert_eq!(s[1], WeylPolynomial::monomial(0, 1, expected));
    }

    #[test]
    fn rejects_mixed_generators() {
        assert!(SymbolicFactor::new("a", mono(1, 1, 1, 0)).is_err());
        assert!(SymbolicFactor::new("a", WeylPolynomial::x().add(&WeylPolynomial::p())).is_err());
        let symbolic = WeylPolynomial::monomial(1, 0, ScalarExpr::symbol(sym("q")));
        assert!(SymbolicFactor::new("a", symbolic).is_err());
    }

    #[test]
    fn scalar_expression_evaluates() {
        let e = ScalarExpr::term(cr(-3, 0), &[dot("alpha"), sym("beta")])
            .add(&ScalarExpr::integer(0, 2));
        let v = e
            .eval(&|s| match (s.name.as_str(), s.dot) {
                ("alpha", true) => Some(2.0),
                ("beta", false) => Some(0.5),
                _ => None,
            })
            .unwrap();
        assert_eq!(v, Complex64::new(-3.0, 2.0));
        assert!(e.eval(&|_| None).is_err());
    }

    #[test]
    fn printing_small_cases() {
        assert_eq!(WeylPolynomial::zero().to_string(), "0");
        assert_eq!(mono(2, 1, 1, 0).to_string(), "x^2*p");
        assert_eq!(mono(0, 0, -1, 0).to_string(), "-1");
        let half = Complex::new(Rational64::new(1, 2), Rational64::new(-3, 4));
        let e = WeylPolynomial::monomial(0, 1, ScalarExpr::constant(half));
        assert_eq!(e.to_string(), "(1/2-3/4*i)*p");
    }
}
