//! Factorized Dyson maps and the ladder of hybrid pictures they induce.
//!
//! A map `Ω(t) = Ω_N(t) ··· Ω_1(t)` is stored with **`Ω_1` first**: it is the
//! factor applied first to picture-0 kets. Picture `j` uses the partial product
//! `Ω_[j] = Ω_N ··· Ω_{j+1}`, so `j = N` is the conventional Hermitian picture
//! and `j = 0` the fully non-Hermitian one.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::expr::CoefficientFn;
use crate::linop::{
    c, finite_diff_derivative, inverse, CMatrix, CVector, FactorEval, GeneralFactor,
    SeparableFactor, I,
};

#[derive(Debug, Clone)]
pub enum Factor {
    Separable(SeparableFactor),
    General(GeneralFactor),
}

impl Factor {
    pub fn label(&self) -> &str {
        match self {
            Factor::Separable(f) => &f.label,
            Factor::General(f) => &f.label,
        }
    }

    pub fn omega(&self, t: f64) -> Result<CMatrix> {
        match self {
            Factor::Separable(f) => f.omega(t),
            Factor::General(f) => f.omega(t),
        }
    }

    pub fn eval(&self, t: f64) -> Result<FactorEval> {
        let ev = match self {
            Factor::Separable(f) => f.eval(t),
            Factor::General(f) => f.eval(t),
        };
        ev.map_err(|e| match e {
            Error::Overflow { .. } => Error::SingularFactor { label: self.label().into(), t },
            other => other,
        })
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, Factor::Separable(_))
    }
}

impl From<SeparableFactor> for Factor {
    fn from(f: SeparableFactor) -> Self {
        Factor::Separable(f)
    }
}

impl From<GeneralFactor> for Factor {
    fn from(f: GeneralFactor) -> Self {
        Factor::General(f)
    }
}

#[derive(Debug, Clone)]
pub struct FactorizedDysonMap {
    dim: usize,
    factors: Vec<Factor>,
}

impl FactorizedDysonMap {
    /// Factors in application order, `Ω_1` first.
    pub fn new(dim: usize, factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("a Dyson map needs at least one factor".into()));
        }
        for f in &factors {
            if let Factor::Separable(s) = f {
                let (r, k) = s.generator.shape();
                if r != dim || k != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: r.max(k) });
                }
            }
        }
        Ok(FactorizedDysonMap { dim, factors })
    }

    pub fn separable(dim: usize, factors: Vec<SeparableFactor>) -> Result<Self> {
        Self::new(dim, factors.into_iter().map(Factor::from).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of factors `N`.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn picture(&self, j: usize) -> Result<PictureIndex> {
        PictureIndex::new(j, self)
    }

    /// Hermitian picture `j = N`.
    pub fn top(&self) -> PictureIndex {
        PictureIndex(self.len())
    }

    /// Evaluates every factor once at `t`.
    pub fn at(&self, t: f64) -> Result<MapSnapshot<'_>> {
        let evals = self
            .factors
            .iter()
            .map(|f| {
                let ev = f.eval(t)?;
                if ev.omega.nrows() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, found: ev.omega.nrows() });
                }
                Ok(ev)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MapSnapshot { map: self, t, evals, chain: OnceLock::new() })
    }

    /// Full product `Ω_N(t) ··· Ω_1(t)` without derivatives.
    pub fn full_product(&self, t: f64) -> Result<CMatrix> {
        let mut out = CMatrix::identity(self.dim, self.dim);
        for f in &self.factors {
            out = f.omega(t)? * out;
        }
        Ok(out)
    }
}

/// Row index of the picture ladder, `0 ..= N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PictureIndex(usize);

impl PictureIndex {
    pub fn new(j: usize, map: &FactorizedDysonMap) -> Result<Self> {
        if j > map.len() {
            return Err(Error::Domain(format!("picture {j} out of range 0..={}", map.len())));
        }
        Ok(PictureIndex(j))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// All factors of a map evaluated at one instant.
#[derive(Debug, Clone)]
pub struct MapSnapshot<'a> {
    map: &'a FactorizedDysonMap,
    pub t: f64,
    evals: Vec<FactorEval>,
    chain: OnceLock<CoriolisChain>,
}

impl<'a> MapSnapshot<'a> {
    pub fn map(&self) -> &'a FactorizedDysonMap {
        self.map
    }

    fn n(&self) -> usize {
        self.evals.len()
    }

    fn identity(&self) -> CMatrix {
        CMatrix::identity(self.map.dim, self.map.dim)
    }

    /// `Ω_n(t)` for `n` in `1..=N`.
    pub fn factor(&self, n: usize) -> &FactorEval {
        &self.evals[n - 1]
    }

    /// `Ω_[j] = Ω_N ··· Ω_{j+1}`; the identity at `j = N`.
    pub fn partial_product(&self, j: PictureIndex) -> CMatrix {
        let mut out = self.identity();
        for n in j.0 + 1..=self.n() {
            out = &self.factor(n).omega * out;
        }
        out
    }

    /// `Ω_[j]^{-1} = Ω_{j+1}^{-1} ··· Ω_N^{-1}`
    pub fn partial_product_inverse(&self, j: PictureIndex) -> CMatrix {
        let mut out = self.identity();
        for n in j.0 + 1..=self.n() {
            out *= &self.factor(n).omega_inv;
        }
        out
    }

    /// `Θ^[j] = Ω_[j]† Ω_[j]`
    pub fn metric(&self, j: PictureIndex) -> CMatrix {
        let o = self.partial_product(j);
        o.adjoint() * o
    }

    /// `H_j` for `j = 0..=N` (indexed by `j`), starting from `H_N = 𝔥` and
    /// descending with `H_{j-1} = Ω_j^{-1} H_j Ω_j`.
    pub fn descend_hamiltonians(&self, h: &CMatrix) -> Vec<CMatrix> {
        let mut out = vec![h.clone(); self.n() + 1];
        for j in (1..=self.n()).rev() {
            let f = self.factor(j);
            out[j - 1] = &f.omega_inv * &out[j] * &f.omega;
        }
        out
    }

    /// Composite Coriolis operators `Σ_1 ..= Σ_{N+1}`.
    pub fn coriolis_chain(&self) -> CoriolisChain {
        self.chain
            .get_or_init(|| {
                let n = self.n();
                let mut sigmas = vec![CMatrix::zeros(self.map.dim, self.map.dim); n + 1];
                for k in (1..=n).rev() {
                    let f = self.factor(k);
                    sigmas[k - 1] = &f.sigma_tilde + &f.omega_inv * &sigmas[k] * &f.omega;
                }
                CoriolisChain { sigmas }
            })
            .clone()
    }

    /// `G_j = H_j − Σ_{j+1}`
    pub fn generator(&self, h: &CMatrix, j: PictureIndex) -> CMatrix {
        let hs = self.descend_hamiltonians(h);
        let chain = self.coriolis_chain();
        &hs[j.0] - chain.sigma(j.0 + 1)
    }

    /// `‖H_j† Θ^[j] − Θ^[j] H_j‖_F`
    pub fn quasi_hermiticity_residual(&self, h: &CMatrix, j: PictureIndex) -> f64 {
        let hj = &self.descend_hamiltonians(h)[j.0];
        let theta = self.metric(j);
        (hj.adjoint() * &theta - &theta * hj).norm()
    }

    /// Representative in picture `to` of an operator given in picture `from`.
    pub fn map_operator(&self, a: &CMatrix, from: PictureIndex, to: PictureIndex) -> CMatrix {
        let textbook = self.partial_product(from) * a * self.partial_product_inverse(from);
        self.partial_product_inverse(to) * textbook * self.partial_product(to)
    }

    /// Pure state in picture `j` with conjugate ket `Θ^[j] |ψ⟩`.
    pub fn pure_state(&self, j: PictureIndex, ket: CVector) -> StatePair {
        let conj = self.metric(j) * &ket;
        StatePair { picture: j.0, ket, conj }
    }

    pub fn family(&self, h: &CMatrix) -> PictureFamily {
        let n = self.n();
        let hamiltonians = self.descend_hamiltonians(h);
        let chain = self.coriolis_chain();
        let pictures: Vec<PictureIndex> = (0..=n).map(PictureIndex).collect();
        let generators = pictures
            .iter()
            .map(|j| &hamiltonians[j.0] - chain.sigma(j.0 + 1))
            .collect();
        PictureFamily {
            t: self.t,
            partial_products: pictures.iter().map(|&j| self.partial_product(j)).collect(),
            metrics: pictures.iter().map(|&j| self.metric(j)).collect(),
            hamiltonians,
            sigmas: chain.sigmas,
            generators,
        }
    }
}

/// `Σ_n` for `n = 1..=N+1`, with `Σ_{N+1} = 0`.
#[derive(Debug, Clone)]
pub struct CoriolisChain {
    sigmas: Vec<CMatrix>,
}

impl CoriolisChain {
    pub fn sigma(&self, n: usize) -> &CMatrix {
        assert!(n >= 1 && n <= self.sigmas.len(), "Σ_{n} out of range");
        &self.sigmas[n - 1]
    }

    /// The full Coriolis operator `Σ_1 = i Ω^{-1} Ω̇`.
    pub fn full(&self) -> &CMatrix {
        &self.sigmas[0]
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }
}

/// The whole ladder at a fixed time. Vectors are indexed by `j = 0..=N`,
/// except `sigmas`, which holds `Σ_1 ..= Σ_{N+1}` at positions `0..=N`.
#[derive(Debug, Clone)]
pub struct PictureFamily {
    pub t: f64,
    pub partial_products: Vec<CMatrix>,
    pub metrics: Vec<CMatrix>,
    pub hamiltonians: Vec<CMatrix>,
    pub sigmas: Vec<CMatrix>,
    pub generators: Vec<CMatrix>,
}

pub fn partial_product(map: &FactorizedDysonMap, j: PictureIndex, t: f64) -> Result<CMatrix> {
    Ok(map.at(t)?.partial_product(j))
}

pub fn metric_at(map: &FactorizedDysonMap, j: PictureIndex, t: f64) -> Result<CMatrix> {
    Ok(map.at(t)?.metric(j))
}

pub fn descend_hamiltonians(map: &FactorizedDysonMap, h: &CMatrix, t: f64) -> Result<Vec<CMatrix>> {
    Ok(map.at(t)?.descend_hamiltonians(h))
}

pub fn composite_coriolis_chain(map: &FactorizedDysonMap, t: f64) -> Result<CoriolisChain> {
    Ok(map.at(t)?.coriolis_chain())
}

pub fn generator_at(map: &FactorizedDysonMap, h: &CMatrix, j: PictureIndex, t: f64) -> Result<CMatrix> {
    Ok(map.at(t)?.generator(h, j))
}

pub fn quasi_hermiticity_residual(
    map: &FactorizedDysonMap,
    h: &CMatrix,
    j: PictureIndex,
    t: f64,
) -> Result<f64> {
    Ok(map.at(t)?.quasi_hermiticity_residual(h, j))
}

/// `i Ω^{-1} (Ω(t+h) − Ω(t−h)) / 2h` for the full product; an independent
/// check on the recursive `Σ_1`.
pub fn coriolis_finite_difference(map: &FactorizedDysonMap, t: f64, step: f64) -> Result<CMatrix> {
    let omega = map.full_product(t)?;
    let omega_inv = inverse(&omega).ok_or_else(|| Error::SingularFactor { label: "Ω".into(), t })?;
    let dot = finite_diff_derivative(|s| map.full_product(s), t, step)?;
    Ok(omega_inv * dot * I)
}

/// Ket `|ψ⟩` and conjugate ket `|ψ⟩⟩` of one picture.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub picture: usize,
    pub ket: CVector,
    pub conj: CVector,
}

impl StatePair {
    /// `⟪ψ|ψ⟩`
    pub fn physical_norm(&self) -> num_complex::Complex64 {
        self.conj.dotc(&self.ket)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

pub fn map_state(
    state: &StatePair,
    direction: Direction,
    map: &FactorizedDysonMap,
    t: f64,
) -> Result<StatePair> {
    map_state_with(state, direction, &map.at(t)?)
}

/// Up `j → j+1`: `ket ← Ω_{j+1} ket`, `conj ← (Ω_{j+1}†)^{-1} conj`.
/// Down is the inverse pair.
pub fn map_state_with(state: &StatePair, direction: Direction, snap: &MapSnapshot<'_>) -> Result<StatePair> {
    let j = state.picture;
    let n = snap.map().len();
    match direction {
        Direction::Up => {
            if j >= n {
                return Err(Error::Domain(format!("cannot map picture {j} up (N = {n})")));
            }
            let f = snap.factor(j + 1);
            Ok(StatePair {
                picture: j + 1,
                ket: &f.omega * &state.ket,
                conj: f.omega_inv.adjoint() * &state.conj,
            })
        }
        Direction::Down => {
            if j == 0 {
                return Err(Error::Domain("cannot map picture 0 down".into()));
            }
            let f = snap.factor(j);
            Ok(StatePair {
                picture: j - 1,
                ket: &f.omega_inv * &state.ket,
                conj: f.omega.adjoint() * &state.conj,
            })
        }
    }
}

/// Moves a state to picture `to` by repeated single steps.
pub fn move_state(state: &StatePair, to: PictureIndex, snap: &MapSnapshot<'_>) -> Result<StatePair> {
    let mut s = state.clone();
    while s.picture < to.0 {
        s = map_state_with(&s, Direction::Up, snap)?;
    }
    while s.picture > to.0 {
        s = map_state_with(&s, Direction::Down, snap)?;
    }
    Ok(s)
}

/// Below this `|⟪ψ|ψ⟩|` a state has no usable physical norm.
pub const ZERO_NORM: f64 = 1e-14;

/// `⟪ψ| A |ψ⟩ / ⟪ψ|ψ⟩`
pub fn physical_expectation(state: &StatePair, a: &CMatrix) -> Result<num_complex::Complex64> {
    let norm = state.physical_norm();
    if norm.norm() < ZERO_NORM {
        return Err(Error::ZeroNorm(norm.norm()));
    }
    Ok(state.conj.dotc(&(a * &state.ket)) / norm)
}

/// `Σ_m c_m(t) K_m`
#[derive(Debug, Clone)]
pub struct OperatorSum {
    dim: usize,
    terms: Vec<(CoefficientFn, CMatrix)>,
}

impl OperatorSum {
    pub fn new(dim: usize, terms: Vec<(CoefficientFn, CMatrix)>) -> Result<Self> {
        for (_, k) in &terms {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: k.nrows().max(k.ncols()) });
            }
        }
        Ok(OperatorSum { dim, terms })
    }

    pub fn constant(m: CMatrix) -> Self {
        OperatorSum { dim: m.nrows(), terms: vec![(CoefficientFn::constant(1.0), m)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (f, k) in &self.terms {
            out += k * c(f.value(t), 0.0);
        }
        out
    }
}

/// How the dynamics is specified.
#[derive(Debug, Clone)]
pub enum Hamiltonian {
    /// The textbook Hamiltonian `𝔥(t)` directly.
    TopDown(OperatorSum),
    /// The picture-0 generator `G(t)`; `𝔥 = Ω (G + Σ_1) Ω^{-1}` follows, and its
    /// Hermiticity is a diagnostic rather than an assumption.
    BottomUp(OperatorSum),
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::TopDown(s) | Hamiltonian::BottomUp(s) => s.dim(),
        }
    }

    /// `𝔥(t)` given the map evaluated at the same instant.
    pub fn textbook_at(&self, snap: &MapSnapshot<'_>) -> CMatrix {
        match self {
            Hamiltonian::TopDown(s) => s.at(snap.t),
            Hamiltonian::BottomUp(g) => {
                let zero = PictureIndex(0);
                let h0 = g.at(snap.t) + snap.coriolis_chain().full();
                snap.partial_product(zero) * h0 * snap.partial_product_inverse(zero)
            }
        }
    }
}
