//! Scenario files: JSON documents describing a factorized Dyson map, a
//! Hamiltonian, an initial state and a time grid.
//!
//! Factors are listed `Ω_1` first, i.e. in the order they act on picture-0
//! kets; the product is `Ω = Ω_N ··· Ω_1`. Complex numbers are `[re, im]`.

use std::path::Path;

use cor_forge::linop::{build_osc_operators, c, pauli_x, pauli_y, pauli_z, SeparableFactor};
use cor_forge::models::{ModelScenario, Observable};
use cor_forge::pictures::OperatorSum;
use cor_forge::weyl::{ScalarExpr, SymbolicFactor, WeylPolynomial};
use cor_forge::{CMatrix, CVector, CoefficientFn, FactorizedDysonMap, Hamiltonian, Method, TimeGrid};
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest power accepted in builtin names such as `x4` or `p3`.
const MAX_BUILTIN_POWER: u32 = 8;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    dimension: usize,
    factors: Vec<RawFactor>,
    hamiltonian: RawHamiltonian,
    picture: usize,
    time: RawTime,
    initial_state: Vec<[f64; 2]>,
    #[serde(default)]
    ensemble: Option<RawEnsemble>,
    #[serde(default)]
    observables: Vec<RawObservable>,
    #[serde(default)]
    outputs: Outputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    label: String,
    generator: RawMatrix,
    #[serde(default)]
    scale: Option<[f64; 2]>,
    coefficient: String,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMatrix {
    Builtin(String),
    Literal(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianMode {
    TopDown,
    BottomUp,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    mode: HamiltonianMode,
    terms: Vec<RawTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coefficient: String,
    matrix: RawMatrix,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MethodName {
    Rk4,
    Rk45,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    start: f64,
    end: f64,
    step: f64,
    method: MethodName,
    #[serde(default)]
    rel_tol: Option<f64>,
    #[serde(default)]
    abs_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    states: Vec<Vec<[f64; 2]>>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    name: String,
    matrix: RawMatrix,
    defined_in_picture: usize,
}

/// Artifact paths requested by the scenario; relative paths resolve against
/// the output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub report: Option<String>,
}

/// A named matrix: the identity, a Pauli matrix, or a power of the truncated
/// position or momentum operator (`x`, `p2`, `x4`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinMatrix {
    Identity,
    PauliX,
    PauliY,
    PauliZ,
    X(u32),
    P(u32),
}

impl BuiltinMatrix {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "identity" => return Some(BuiltinMatrix::Identity),
            "pauli_x" => return Some(BuiltinMatrix::PauliX),
            "pauli_y" => return Some(BuiltinMatrix::PauliY),
            "pauli_z" => return Some(BuiltinMatrix::PauliZ),
            _ => {}
        }
        let (head, tail) = name.split_at(name.len().min(1));
        let power = if tail.is_empty() { 1 } else { tail.parse::<u32>().ok()? };
        if power == 0 || power > MAX_BUILTIN_POWER || tail.starts_with('0') {
            return None;
        }
        match head {
            "x" => Some(BuiltinMatrix::X(power)),
            "p" => Some(BuiltinMatrix::P(power)),
            _ => None,
        }
    }

    fn matrix(self, d: usize) -> Result<CMatrix, String> {
        let pauli = |m: CMatrix| if d == 2 { Ok(m) } else { Err(format!("Pauli matrices need dimension 2, not {d}")) };
        match self {
            BuiltinMatrix::Identity => Ok(CMatrix::identity(d, d)),
            BuiltinMatrix::PauliX => pauli(pauli_x()),
            BuiltinMatrix::PauliY => pauli(pauli_y()),
            BuiltinMatrix::PauliZ => pauli(pauli_z()),
            BuiltinMatrix::X(k) | BuiltinMatrix::P(k) => {
                let (x, p) = build_osc_operators(d).map_err(|e| e.to_string())?;
                let base = if matches!(self, BuiltinMatrix::X(_)) { x } else { p };
                Ok((1..k).fold(base.clone(), |acc, _| acc * &base))
            }
        }
    }

    /// The matching element of the exact algebra, if any.
    fn weyl(self) -> Option<WeylPolynomial> {
        let one = ScalarExpr::integer(1, 0);
        match self {
            BuiltinMatrix::X(k) => Some(WeylPolynomial::monomial(k, 0, one)),
            BuiltinMatrix::P(k) => Some(WeylPolynomial::monomial(0, k, one)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorSpec {
    pub label: String,
    /// `None` for literal matrices.
    pub builtin: Option<BuiltinMatrix>,
    pub scale: Complex64,
    pub coefficient: CoefficientFn,
    /// `scale · generator`
    pub generator: CMatrix,
}

/// A fully validated scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub name: String,
    pub dimension: usize,
    pub factors: Vec<FactorSpec>,
    pub mode: HamiltonianMode,
    pub hamiltonian_terms: Vec<(CoefficientFn, CMatrix)>,
    pub picture: usize,
    pub grid: TimeGrid,
    pub initial_state: CVector,
    pub ensemble: Option<(Vec<CVector>, Vec<f64>)>,
    pub observables: Vec<Observable>,
    pub outputs: Outputs,
    /// The document as read, echoed into run reports.
    pub source: serde_json::Value,
}

impl ScenarioFile {
    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn to_model(&self) -> CliResult<ModelScenario> {
        let factors = self
            .factors
            .iter()
            .map(|f| SeparableFactor::new(f.label.clone(), f.generator.clone(), f.coefficient.clone()))
            .collect();
        let map = FactorizedDysonMap::separable(self.dimension, factors)?;
        let sum = OperatorSum::new(self.dimension, self.hamiltonian_terms.clone())?;
        let hamiltonian = match self.mode {
            HamiltonianMode::TopDown => Hamiltonian::TopDown(sum),
            HamiltonianMode::BottomUp => Hamiltonian::BottomUp(sum),
        };
        Ok(ModelScenario {
            name: self.name.clone(),
            map,
            hamiltonian,
            picture: self.picture,
            initial_state: self.initial_state.clone(),
            ensemble: self.ensemble.clone(),
            observables: self.observables.clone(),
            grid: self.grid,
        })
    }

    /// Symbolic factor list for the exact Coriolis engine. Requires every
    /// generator to be a builtin power of `x` or `p` with a Gaussian-integer
    /// scale; the factor label becomes the coefficient symbol.
    pub fn symbolic_factors(&self) -> CliResult<Vec<SymbolicFactor>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let field = format!("factors[{k}].generator");
                let mono = f.builtin.and_then(BuiltinMatrix::weyl).ok_or_else(|| {
                    CliError::validation(&field, "symbolic mode needs a builtin power of x or p")
                })?;
                let (re, im) = (f.scale.re, f.scale.im);
                if re.fract() != 0.0 || im.fract() != 0.0 || re.abs() > 1e9 || im.abs() > 1e9 {
                    return Err(CliError::validation(
                        format!("factors[{k}].scale"),
                        "symbolic mode needs an integer (Gaussian) scale",
                    ));
                }
                let generator = mono.scale(&ScalarExpr::integer(re as i64, im as i64));
                SymbolicFactor::new(f.label.clone(), generator).map_err(|e| CliError::validation(field, e.to_string()))
            })
            .collect()
    }
}

pub fn parse_scenario(path: &Path) -> CliResult<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> CliResult<ScenarioFile> {
    let source: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    Validator { text }.validate(raw, source)
}

fn json_error(text: &str, e: &serde_json::Error) -> CliError {
    let (line, column) = (e.line(), e.column());
    let token = text
        .lines()
        .nth(line.saturating_sub(1))
        .and_then(|l| {
            let rest: String = l.chars().skip(column.saturating_sub(1)).take_while(|ch| !ch.is_whitespace()).take(24).collect();
            (!rest.is_empty()).then_some(rest)
        })
        .unwrap_or_else(|| "<end>".into());
    let message = e.to_string();
    // serde appends its own location; the structured fields already carry it.
    let message = message.split(" at line ").next().unwrap_or(&message).to_string();
    CliError::Parse { field: "document".into(), line, column, token, message }
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn validate(&self, raw: RawScenario, source: serde_json::Value) -> CliResult<ScenarioFile> {
        if raw.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let d = raw.dimension;
        if d == 0 {
            return Err(CliError::validation("dimension", "must be positive"));
        }
        if raw.factors.is_empty() {
            return Err(CliError::validation("factors", "at least one factor is required"));
        }
        let n = raw.factors.len();
        if raw.picture > n {
            return Err(CliError::validation("picture", format!("{} is outside 0..={n}", raw.picture)));
        }
        let grid = self.grid(&raw.time)?;
        let times = grid.times();

        let mut factors = Vec::with_capacity(n);
        for (k, f) in raw.factors.into_iter().enumerate() {
            if f.label.trim().is_empty() {
                return Err(CliError::validation(format!("factors[{k}].label"), "must not be empty"));
            }
            let field = format!("factors[{k}]");
            let (builtin, matrix) = self.matrix(&f.generator, d, &format!("{field}.generator"))?;
            let scale = f.scale.map(|[re, im]| c(re, im)).unwrap_or(c(1.0, 0.0));
            if !(scale.re.is_finite() && scale.im.is_finite()) {
                return Err(CliError::validation(format!("{field}.scale"), "must be finite"));
            }
            let coefficient = self.coefficient(&f.coefficient, &format!("{field}.coefficient"), &times)?;
            factors.push(FactorSpec { label: f.label, builtin, scale, coefficient, generator: matrix * scale });
        }

        if raw.hamiltonian.terms.is_empty() {
            return Err(CliError::validation("hamiltonian.terms", "at least one term is required"));
        }
        let mut terms = Vec::new();
        for (k, t) in raw.hamiltonian.terms.iter().enumerate() {
            let field = format!("hamiltonian.terms[{k}]");
            let coefficient = self.coefficient(&t.coefficient, &format!("{field}.coefficient"), &times)?;
            let (_, matrix) = self.matrix(&t.matrix, d, &format!("{field}.matrix"))?;
            terms.push((coefficient, matrix));
        }

        let initial_state = vector(&raw.initial_state, d, "initial_state")?;
        if initial_state.norm() == 0.0 {
            return Err(CliError::validation("initial_state", "must be nonzero"));
        }

        let ensemble = match raw.ensemble {
            None => None,
            Some(e) => Some(ensemble(e, d)?),
        };

        let mut observables = Vec::new();
        for (k, o) in raw.observables.iter().enumerate() {
            let field = format!("observables[{k}]");
            if o.defined_in_picture > n {
                return Err(CliError::validation(
                    format!("{field}.defined_in_picture"),
                    format!("{} is outside 0..={n}", o.defined_in_picture),
                ));
            }
            if observables.iter().any(|x: &Observable| x.name == o.name) {
                return Err(CliError::validation(format!("{field}.name"), format!("duplicate name `{}`", o.name)));
            }
            let (_, matrix) = self.matrix(&o.matrix, d, &format!("{field}.matrix"))?;
            observables.push(Observable { name: o.name.clone(), matrix, defined_in: o.defined_in_picture });
        }

        Ok(ScenarioFile {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            dimension: d,
            factors,
            mode: raw.hamiltonian.mode,
            hamiltonian_terms: terms,
            picture: raw.picture,
            grid,
            initial_state,
            ensemble,
            observables,
            outputs: raw.outputs,
            source,
        })
    }

    fn grid(&self, t: &RawTime) -> CliResult<TimeGrid> {
        let method = match t.method {
            MethodName::Rk4 => {
                if t.rel_tol.is_some() || t.abs_tol.is_some() {
                    return Err(CliError::validation("time.method", "tolerances apply only to rk45"));
                }
                Method::Rk4
            }
            MethodName::Rk45 => Method::Rk45 { rel_tol: t.rel_tol.unwrap_or(1e-9), abs_tol: t.abs_tol.unwrap_or(1e-12) },
        };
        TimeGrid::new(t.start, t.end, t.step, method).map_err(|e| CliError::validation("time", e.to_string()))
    }

    fn coefficient(&self, src: &str, field: &str, times: &[f64]) -> CliResult<CoefficientFn> {
        let f = CoefficientFn::parse(src).map_err(|e| {
            let (line, column) = self.locate(src);
            CliError::Parse {
                field: field.into(),
                line,
                column: column + e.column,
                token: e.token.clone(),
                message: e.message.clone(),
            }
        })?;
        for &t in times {
            if !(f.value(t).is_finite() && f.derivative(t).is_finite()) {
                return Err(CliError::validation(field, format!("`{src}` is not finite at t = {t}")));
            }
        }
        Ok(f)
    }

    /// Line and column of the opening quote of a string literal, or `(0, 0)`.
    fn locate(&self, literal: &str) -> (usize, usize) {
        let quoted = serde_json::to_string(literal).unwrap_or_default();
        match self.text.find(&quoted) {
            Some(offset) => {
                let before = &self.text[..offset];
                let line = before.matches('\n').count() + 1;
                let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
                (line, column)
            }
            None => (0, 0),
        }
    }

    fn matrix(&self, raw: &RawMatrix, d: usize, field: &str) -> CliResult<(Option<BuiltinMatrix>, CMatrix)> {
        match raw {
            RawMatrix::Builtin(name) => {
                let b = BuiltinMatrix::parse(name)
                    .ok_or_else(|| CliError::validation(field, format!("unknown builtin matrix `{name}`")))?;
                let m = b.matrix(d).map_err(|msg| CliError::validation(field, msg))?;
                Ok((Some(b), m))
            }
            RawMatrix::Literal(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(CliError::validation(field, format!("literal matrix must be {d}x{d}")));
                }
                let m = CMatrix::from_fn(d, d, |i, j| c(rows[i][j][0], rows[i][j][1]));
                if !cor_forge::linop::is_finite(&m) {
                    return Err(CliError::validation(field, "entries must be finite"));
                }
                Ok((None, m))
            }
        }
    }
}

fn vector(entries: &[[f64; 2]], d: usize, field: &str) -> CliResult<CVector> {
    if entries.len() != d {
        return Err(CliError::validation(field, format!("expected {d} entries, found {}", entries.len())));
    }
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::validation(field, "entries must be finite"));
    }
    Ok(CVector::from_iterator(d, entries.iter().map(|&[re, im]| c(re, im))))
}

fn ensemble(e: RawEnsemble, d: usize) -> CliResult<(Vec<CVector>, Vec<f64>)> {
    if e.states.is_empty() || e.states.len() != e.weights.len() {
        return Err(CliError::validation("ensemble.weights", "need one weight per state"));
    }
    let states = e
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| vector(s, d, &format!("ensemble.states[{k}]")))
        .collect::<CliResult<Vec<_>>>()?;
    if e.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(CliError::validation("ensemble.weights", "weights must be positive"));
    }
    let total: f64 = e.weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(CliError::validation("ensemble.weights", format!("weights sum to {total}, not 1")));
    }
    Ok((states, e.weights))
}
