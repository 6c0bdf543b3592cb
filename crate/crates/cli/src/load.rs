//! Resolves a command-line scenario argument: a builtin name or a file path.

use std::path::Path;

use cor_forge::models::{build_two_level_toy, default_fring_tenney, ModelScenario};
use cor_forge::weyl::{fring_tenney_factors, SymbolicFactor};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::scenario::{parse_scenario, Outputs, ScenarioFile};

pub const BUILTINS: [&str; 3] = ["two-level", "fring-tenney", "jones-mateo"];

/// Parameters of the two-level builtin.
pub const TWO_LEVEL: (f64, f64) = (0.3, 0.2);

/// Lowest levels of the Jones–Mateo partner at two truncations, plus the
/// couplings used for the `g^{1/3}` scaling check.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectral {
    pub g: f64,
    pub dims: (usize, usize),
    pub levels: usize,
    pub scaling_couplings: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Dynamical {
    pub model: ModelScenario,
    pub outputs: Outputs,
    symbolic: SymbolicSource,
}

#[derive(Debug, Clone)]
enum SymbolicSource {
    File(Box<ScenarioFile>),
    Fixed(Vec<SymbolicFactor>),
    None,
}

impl Dynamical {
    pub fn symbolic_factors(&self) -> CliResult<Vec<SymbolicFactor>> {
        match &self.symbolic {
            SymbolicSource::File(f) => f.symbolic_factors(),
            SymbolicSource::Fixed(v) => Ok(v.clone()),
            SymbolicSource::None => {
                Err(CliError::Usage(format!("scenario `{}` has no symbolic form", self.model.name)))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ScenarioKind {
    Dynamical(Box<Dynamical>),
    Spectral(Spectral),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// Echoed into every report.
    pub echo: serde_json::Value,
    pub kind: ScenarioKind,
}

pub fn load(arg: &str) -> CliResult<Scenario> {
    match arg {
        "two-level" => {
            let (a, b) = TWO_LEVEL;
            Ok(dynamical(build_two_level_toy(a, b), json!({"builtin": arg, "a": a, "b": b}), SymbolicSource::None))
        }
        "fring-tenney" => {
            let model = default_fring_tenney();
            let echo = json!({
                "builtin": arg,
                "dimension": model.dim(),
                "sigma": "1+0.1*t^2",
                "c2": 0.0,
                "coefficients": {
                    "alpha": "0.05*sin(t)",
                    "beta": "0.002*(1+t)",
                    "gamma": "0.03*t",
                    "delta": "0.1*cos(t)",
                },
            });
            Ok(dynamical(model, echo, SymbolicSource::Fixed(fring_tenney_factors())))
        }
        "jones-mateo" => {
            let setup = Spectral { g: 1.0, dims: (64, 96), levels: 5, scaling_couplings: vec![0.5, 2.0] };
            let echo = json!({
                "builtin": arg,
                "g": setup.g,
                "dimensions": [setup.dims.0, setup.dims.1],
                "levels": setup.levels,
                "scaling_couplings": setup.scaling_couplings,
            });
            Ok(Scenario { name: arg.into(), echo, kind: ScenarioKind::Spectral(setup) })
        }
        path => {
            let p = Path::new(path);
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "`{path}` is neither a scenario file nor a builtin ({})",
                    BUILTINS.join(", ")
                )));
            }
            let file = parse_scenario(p)?;
            let model = file.to_model()?;
            let echo = file.source.clone();
            let outputs = file.outputs.clone();
            let mut s = dynamical(model, echo, SymbolicSource::File(Box::new(file)));
            if let ScenarioKind::Dynamical(d) = &mut s.kind {
                d.outputs = outputs;
            }
            Ok(s)
        }
    }
}

fn dynamical(model: ModelScenario, echo: serde_json::Value, symbolic: SymbolicSource) -> Scenario {
    Scenario {
        name: model.name.clone(),
        echo,
        kind: ScenarioKind::Dynamical(Box::new(Dynamical { model, outputs: Outputs::default(), symbolic })),
    }
}
