//! Time integration of the picture-`j` evolution equations:
//!
//! * kets, `i ψ̇ = G_j ψ`, and conjugate kets, `i ψ̇⟩⟩ = G_j† ψ⟩⟩`;
//! * observables, `i Ȧ = A Σ_{j+1} − Σ_{j+1} A`;
//! * density matrices, `i ρ̇ = G_j ρ − ρ G_j`;
//! * the metric, `i Θ̇ = Θ Σ − Σ† Θ`.
//!
//! Generators are re-evaluated at every Runge–Kutta stage time.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{c, eigenvalues, hermiticity_residual, CMatrix, I};
use crate::pictures::{
    FactorizedDysonMap, Hamiltonian, PictureIndex, StatePair, ZERO_NORM,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with error control between output times.
    Rk45 { rel_tol: f64, abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
    pub method: Method,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, step: f64, method: Method) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Domain(format!("time interval [{start}, {end}] is empty")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {step}")));
        }
        if let Method::Rk45 { rel_tol, abs_tol } = method {
            if !(rel_tol > 0.0 && abs_tol > 0.0) {
                return Err(Error::Domain("adaptive tolerances must be positive".into()));
            }
        }
        Ok(TimeGrid { start, end, step, method })
    }

    pub fn rk4(start: f64, end: f64, step: f64) -> Result<Self> {
        Self::new(start, end, step, Method::Rk4)
    }

    /// Number of output intervals; the step is adjusted to divide the interval.
    pub fn intervals(&self) -> usize {
        (((self.end - self.start) / self.step).round() as usize).max(1)
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.intervals();
        let h = (self.end - self.start) / n as f64;
        (0..=n)
            .map(|k| if k == n { self.end } else { self.start + k as f64 * h })
            .collect()
    }
}

/// Named time series aligned with [`EvolutionResult::times`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub name: String,
    pub values: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult<S> {
    pub times: Vec<f64>,
    pub trajectory: Vec<S>,
    /// Complex scalars tracked along the flow.
    pub tracked: Vec<Series<Complex64>>,
    /// Real diagnostics (norms, residuals, drifts).
    pub diagnostics: Vec<Series<f64>>,
}

impl<S> EvolutionResult<S> {
    fn new() -> Self {
        EvolutionResult { times: Vec::new(), trajectory: Vec::new(), tracked: Vec::new(), diagnostics: Vec::new() }
    }

    pub fn diagnostic(&self, name: &str) -> Option<&[f64]> {
        self.diagnostics.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    pub fn tracked(&self, name: &str) -> Option<&[Complex64]> {
        self.tracked.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    pub fn last(&self) -> Option<&S> {
        self.trajectory.last()
    }

    fn push_diagnostic(&mut self, name: &str, v: f64) {
        match self.diagnostics.iter_mut().find(|s| s.name == name) {
            Some(s) => s.values.push(v),
            None => self.diagnostics.push(Series { name: name.into(), values: vec![v] }),
        }
    }

    fn push_tracked(&mut self, name: &str, v: Complex64) {
        match self.tracked.iter_mut().find(|s| s.name == name) {
            Some(s) => s.values.push(v),
            None => self.tracked.push(Series { name: name.into(), values: vec![v] }),
        }
    }
}

fn axpy(y: &CMatrix, h: f64, k: &CMatrix) -> CMatrix {
    y + k * c(h, 0.0)
}

fn rk4_step<F>(rhs: &F, t: f64, y: &CMatrix, h: f64) -> Result<CMatrix>
where
    F: Fn(f64, &CMatrix) -> Result<CMatrix>,
{
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = rhs(t + h, &axpy(y, h, &k3))?;
    Ok(y + (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0))
}

// Dormand–Prince tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the 5th-order solution and the error estimate.
fn dp_step<F>(rhs: &F, t: f64, y: &CMatrix, h: f64) -> Result<(CMatrix, CMatrix)>
where
    F: Fn(f64, &CMatrix) -> Result<CMatrix>,
{
    let mut ks: Vec<CMatrix> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut ys = y.clone();
        for (a, k) in DP_A[stage].iter().zip(&ks) {
            if *a != 0.0 {
                ys += k * c(h * a, 0.0);
            }
        }
        ks.push(rhs(t + DP_C[stage] * h, &ys)?);
    }
    let mut y5 = y.clone();
    let mut err = CMatrix::zeros(y.nrows(), y.ncols());
    for (s, k) in ks.iter().enumerate() {
        y5 += k * c(h * DP_B5[s], 0.0);
        err += k * c(h * (DP_B5[s] - DP_B4[s]), 0.0);
    }
    Ok((y5, err))
}

fn dp_advance<F>(rhs: &F, t0: f64, t1: f64, y: &CMatrix, h: &mut f64, rel: f64, abs: f64) -> Result<CMatrix>
where
    F: Fn(f64, &CMatrix) -> Result<CMatrix>,
{
    let mut t = t0;
    let mut y = y.clone();
    while t < t1 {
        let last = t + *h >= t1;
        let step = if last { t1 - t } else { *h };
        if step < 1e-12 * (1.0 + t.abs()) {
            return Err(Error::StepRejection { t, step });
        }
        let (y_new, err) = dp_step(rhs, t, &y, step)?;
        let mut ratio: f64 = 0.0;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
            let scale = abs + rel * a.norm().max(b.norm());
            ratio = ratio.max(e.norm() / scale);
        }
        if !ratio.is_finite() {
            return Err(Error::StepRejection { t, step });
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        if ratio <= 1.0 {
            t = if last { t1 } else { t + step };
            y = y_new;
            if !last {
                *h = step * factor;
            }
        } else {
            *h = step * factor;
        }
    }
    Ok(y)
}

/// Integrates `ẏ = rhs(t, y)`, calling `observe` at every output time.
pub fn integrate<F, O>(rhs: F, y0: CMatrix, grid: &TimeGrid, mut observe: O) -> Result<()>
where
    F: Fn(f64, &CMatrix) -> Result<CMatrix>,
    O: FnMut(f64, &CMatrix) -> Result<()>,
{
    let times = grid.times();
    let mut y = y0;
    observe(times[0], &y)?;
    let mut h_adapt = grid.step;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        y = match grid.method {
            Method::Rk4 => rk4_step(&rhs, t0, &y, t1 - t0)?,
            Method::Rk45 { rel_tol, abs_tol } => dp_advance(&rhs, t0, t1, &y, &mut h_adapt, rel_tol, abs_tol)?,
        };
        observe(t1, &y)?;
    }
    Ok(())
}

fn pack(state: &StatePair) -> CMatrix {
    let d = state.ket.len();
    let mut m = CMatrix::zeros(d, 2);
    m.set_column(0, &state.ket);
    m.set_column(1, &state.conj);
    m
}

fn unpack(m: &CMatrix, picture: usize) -> StatePair {
    StatePair { picture, ket: m.column(0).into_owned(), conj: m.column(1).into_owned() }
}

fn generator(map: &FactorizedDysonMap, ham: &Hamiltonian, j: PictureIndex, t: f64) -> Result<CMatrix> {
    let snap = map.at(t)?;
    let h = ham.textbook_at(&snap);
    Ok(snap.generator(&h, j))
}

/// Remembers the two most recent evaluations of a time-dependent operator.
/// Classical RK4 evaluates the midpoint twice and the step end again as the
/// next step's start, so this halves the map evaluations.
struct Recent<F> {
    f: F,
    slots: RefCell<[Option<(u64, CMatrix)>; 2]>,
}

impl<F: Fn(f64) -> Result<CMatrix>> Recent<F> {
    fn new(f: F) -> Self {
        Recent { f, slots: RefCell::new([None, None]) }
    }

    fn at(&self, t: f64) -> Result<CMatrix> {
        let key = t.to_bits();
        let mut slots = self.slots.borrow_mut();
        if let Some((_, m)) = slots.iter().flatten().find(|(k, _)| *k == key) {
            return Ok(m.clone());
        }
        let m = (self.f)(t)?;
        slots.swap(0, 1);
        slots[0] = Some((key, m.clone()));
        Ok(m)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Ket and conjugate ket in picture `j`; records the physical norm
/// `⟪ψ|ψ⟩` and the quasi-Hermiticity residual of `H_j` at every output time.
pub fn integrate_schrodinger(
    map: &FactorizedDysonMap,
    ham: &Hamiltonian,
    j: PictureIndex,
    state0: &StatePair,
    grid: &TimeGrid,
) -> Result<EvolutionResult<StatePair>> {
    check_dim(map.dim(), state0.ket.len())?;
    check_dim(map.dim(), ham.dim())?;
    if state0.picture != j.get() {
        return Err(Error::Domain(format!(
            "initial state lives in picture {}, integration requested in picture {}",
            state0.picture,
            j.get()
        )));
    }
    let g_at = Recent::new(|t| generator(map, ham, j, t));
    let rhs = |t: f64, y: &CMatrix| -> Result<CMatrix> {
        let g = g_at.at(t)?;
        let mut out = CMatrix::zeros(y.nrows(), 2);
        out.set_column(0, &(&g * y.column(0) * -I));
        out.set_column(1, &(g.adjoint() * y.column(1) * -I));
        Ok(out)
    };
    let mut res = EvolutionResult::new();
    integrate(rhs, pack(state0), grid, |t, y| {
        let s = unpack(y, j.get());
        let snap = map.at(t)?;
        let h = ham.textbook_at(&snap);
        res.push_diagnostic("physical_norm", s.physical_norm().re);
        res.push_diagnostic("qh_residual", snap.quasi_hermiticity_residual(&h, j));
        res.times.push(t);
        res.trajectory.push(s);
        Ok(())
    })?;
    Ok(res)
}

/// Expectation of an observable that is constant in picture `defined_in`,
/// mapped at each time into the picture of the trajectory.
pub fn expectation_series(
    map: &FactorizedDysonMap,
    result: &EvolutionResult<StatePair>,
    observable: &CMatrix,
    defined_in: PictureIndex,
) -> Result<Vec<Complex64>> {
    result
        .times
        .iter()
        .zip(&result.trajectory)
        .map(|(&t, s)| {
            let snap = map.at(t)?;
            let a = snap.map_operator(observable, defined_in, map.picture(s.picture)?);
            crate::pictures::physical_expectation(s, &a)
        })
        .collect()
}

/// Observable in picture `j` driven by the composite Coriolis operator `Σ_{j+1}`.
pub fn integrate_heisenberg(
    map: &FactorizedDysonMap,
    j: PictureIndex,
    a0: &CMatrix,
    grid: &TimeGrid,
) -> Result<EvolutionResult<CMatrix>> {
    check_dim(map.dim(), a0.nrows())?;
    let sigma_at = Recent::new(|t| Ok(map.at(t)?.coriolis_chain().sigma(j.get() + 1).clone()));
    let rhs = |t: f64, a: &CMatrix| -> Result<CMatrix> {
        let sigma = sigma_at.at(t)?;
        Ok((a * &sigma - &sigma * a) * -I)
    };
    let mut res = EvolutionResult::new();
    integrate(rhs, a0.clone(), grid, |t, a| {
        res.times.push(t);
        res.trajectory.push(a.clone());
        Ok(())
    })?;
    Ok(res)
}

/// Statistical mixture of pure states of one picture with constant weights.
#[derive(Debug, Clone)]
pub struct Ensemble {
    states: Vec<StatePair>,
    weights: Vec<f64>,
}

/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl Ensemble {
    pub fn new(states: Vec<StatePair>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::Domain("ensemble needs one weight per state".into()));
        }
        if weights.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Domain("ensemble weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("ensemble weights sum to {sum}, not 1")));
        }
        let j = states[0].picture;
        if states.iter().any(|s| s.picture != j) {
            return Err(Error::Domain("ensemble states live in different pictures".into()));
        }
        Ok(Ensemble { states, weights })
    }

    pub fn pure(state: StatePair) -> Self {
        Ensemble { states: vec![state], weights: vec![1.0] }
    }

    pub fn states(&self) -> &[StatePair] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn picture(&self) -> usize {
        self.states[0].picture
    }
}

/// `ρ_j = Σ_k p_k |ψ_k⟩⟪ψ_k| / ⟪ψ_k|ψ_k⟫`
pub fn density_from_ensemble(ensemble: &Ensemble) -> Result<CMatrix> {
    let d = ensemble.states[0].ket.len();
    let mut rho = CMatrix::zeros(d, d);
    for (s, &p) in ensemble.states.iter().zip(&ensemble.weights) {
        let norm = s.physical_norm();
        if norm.norm() < ZERO_NORM {
            return Err(Error::ZeroNorm(norm.norm()));
        }
        rho += (&s.ket * s.conj.adjoint()) * (c(p, 0.0) / norm);
    }
    Ok(rho)
}

/// Pairs each tracked eigenvalue with its nearest unused successor.
fn match_eigenvalues(previous: &[Complex64], current: &[Complex64]) -> Vec<Complex64> {
    let mut used = vec![false; current.len()];
    previous
        .iter()
        .map(|p| {
            let (k, _) = current
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, z)| (k, (z - p).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("same number of eigenvalues");
            used[k] = true;
            current[k]
        })
        .collect()
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (a, x) in values.iter().enumerate() {
        for y in &values[a + 1..] {
            gap = gap.min((x - y).norm());
        }
    }
    gap
}

/// Eigenvalue gap below which nearest-distance matching is unreliable.
pub const EIGEN_GAP_FLAG: f64 = 1e-6;

/// Density matrix in picture `j` under `i ρ̇ = G_j ρ − ρ G_j`. Tracks the trace
/// and each eigenvalue; diagnostics are the trace drift, the largest
/// eigenvalue drift, the idempotency defect `‖ρ² − ρ‖` and a near-crossing
/// flag (`1` when the smallest eigenvalue gap is below [`EIGEN_GAP_FLAG`]).
pub fn integrate_density(
    map: &FactorizedDysonMap,
    ham: &Hamiltonian,
    j: PictureIndex,
    ensemble0: &Ensemble,
    grid: &TimeGrid,
) -> Result<EvolutionResult<CMatrix>> {
    if ensemble0.picture() != j.get() {
        return Err(Error::Domain("ensemble lives in a different picture".into()));
    }
    let rho0 = density_from_ensemble(ensemble0)?;
    check_dim(map.dim(), rho0.nrows())?;
    let g_at = Recent::new(|t| generator(map, ham, j, t));
    let rhs = |t: f64, rho: &CMatrix| -> Result<CMatrix> {
        let g = g_at.at(t)?;
        Ok((&g * rho - rho * &g) * -I)
    };
    let mut res = EvolutionResult::new();
    let trace0 = rho0.trace();
    let mut initial: Vec<Complex64> = eigenvalues(&rho0)?;
    initial.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut tracked = initial.clone();
    integrate(rhs, rho0, grid, |t, rho| {
        let trace = rho.trace();
        let ev = eigenvalues(rho)?;
        tracked = match_eigenvalues(&tracked, &ev);
        let drift = tracked
            .iter()
            .zip(&initial)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        res.push_tracked("trace", trace);
        for (k, l) in tracked.iter().enumerate() {
            res.push_tracked(&format!("lambda_{k}"), *l);
        }
        res.push_diagnostic("trace_drift", (trace - trace0).norm());
        res.push_diagnostic("spectral_drift", drift);
        res.push_diagnostic("idempotency", (rho * rho - rho).norm());
        res.push_diagnostic("gap_flag", if min_gap(&ev) < EIGEN_GAP_FLAG { 1.0 } else { 0.0 });
        res.times.push(t);
        res.trajectory.push(rho.clone());
        Ok(())
    })?;
    Ok(res)
}

/// Full metric `Θ = Ω†Ω` under `i Θ̇ = Θ Σ_1 − Σ_1† Θ`.
pub fn integrate_metric(map: &FactorizedDysonMap, grid: &TimeGrid) -> Result<EvolutionResult<CMatrix>> {
    integrate_metric_in(map, map.picture(0)?, grid)
}

/// `Θ^[j]` under the same law with `Σ_{j+1}`; compared at every output time
/// against the direct product `Ω_[j]† Ω_[j]`.
pub fn integrate_metric_in(
    map: &FactorizedDysonMap,
    j: PictureIndex,
    grid: &TimeGrid,
) -> Result<EvolutionResult<CMatrix>> {
    let theta0 = map.at(grid.start)?.metric(j);
    let sigma_at = Recent::new(|t| Ok(map.at(t)?.coriolis_chain().sigma(j.get() + 1).clone()));
    let rhs = |t: f64, theta: &CMatrix| -> Result<CMatrix> {
        let sigma = sigma_at.at(t)?;
        Ok((theta * &sigma - sigma.adjoint() * theta) * -I)
    };
    let mut res = EvolutionResult::new();
    integrate(rhs, theta0, grid, |t, theta| {
        let direct = map.at(t)?.metric(j);
        res.push_diagnostic("metric_residual", (theta - direct).norm());
        res.push_diagnostic("hermiticity_residual", hermiticity_residual(theta));
        res.times.push(t);
        res.trajectory.push(theta.clone());
        Ok(())
    })?;
    Ok(res)
}
