//! Command dispatch. Every command produces a [`RunReport`] and, where a
//! trajectory exists, CSV tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cor_forge::evolution::{
    expectation_series, integrate_density, integrate_heisenberg, integrate_metric_in, integrate_schrodinger,
    Series,
};
use cor_forge::linop::{build_osc_operators, diagnostics, eigenvalues, hermiticity_residual, interior_residual};
use cor_forge::models::{jones_mateo_convergence, ModelScenario};
use cor_forge::pictures::{coriolis_finite_difference, physical_expectation, Factor};
use cor_forge::weyl::{composite_coriolis_symbolic, Symbol, DEFAULT_MAX_DEPTH};
use cor_forge::{EvolutionResult, PictureIndex, StatePair, TimeGrid};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::load::{Dynamical, Scenario, ScenarioKind, Spectral};
use crate::output::{write_json, Table};
use crate::report::{InvariantCheck, RunReport, Status, SymbolicTerm, Timing};

pub mod tol {
    pub const RECURSION_VS_DIRECT: f64 = 1e-6;
    pub const FD_STEP: f64 = 1e-5;
    pub const NORM_DRIFT: f64 = 1e-8;
    pub const PICTURE_INDEPENDENCE: f64 = 1e-7;
    pub const HEISENBERG: f64 = 1e-6;
    pub const DENSITY_TRACE: f64 = 1e-10;
    pub const DENSITY_SPECTRUM: f64 = 1e-7;
    pub const METRIC_ODE: f64 = 1e-8;
    pub const METRIC_HERMITICITY: f64 = 1e-9;
    pub const QUASI_HERMITICITY: f64 = 1e-9;
    pub const ISOSPECTRALITY: f64 = 1e-8;
    pub const TEXTBOOK_HERMITICITY: f64 = 1e-10;
    pub const SYMBOLIC_INTERIOR: f64 = 1e-3;
    pub const SPECTRUM_REAL: f64 = 1e-9;
    pub const TRUNCATION: f64 = 1e-6;
    pub const SCALING: f64 = 1e-5;
    /// Number of sampled times for fixed-time checks.
    pub const SAMPLES: usize = 10;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Heisenberg,
    Density,
    Metric,
    Verify,
    Spectrum,
    Coriolis,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Heisenberg => "heisenberg",
            Command::Density => "density",
            Command::Metric => "metric",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Coriolis => "coriolis",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub picture: Option<usize>,
    /// Worker threads for fan-out across pictures; `None` lets rayon decide.
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub symbolic: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { picture: None, jobs: None, out: PathBuf::from("."), symbolic: false }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_status
    }
}

/// What a command computed, before anything is written.
#[derive(Default)]
struct Run {
    picture: Option<usize>,
    invariants: Vec<InvariantCheck>,
    /// `(file-name suffix, table)`
    tables: Vec<(String, Table)>,
    timings: Vec<Timing>,
    symbolic: Vec<SymbolicTerm>,
}

pub fn run(command: Command, scenario: &Scenario, opts: &RunOptions) -> CliResult<Outcome> {
    if opts.symbolic && command != Command::Coriolis {
        return Err(CliError::Usage("--symbolic applies only to `coriolis`".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    log::info!("{} on `{}`", command.name(), scenario.name);
    let run = pool.install(|| match &scenario.kind {
        ScenarioKind::Spectral(setup) => match command {
            Command::Spectrum => spectral(setup, false),
            Command::Verify => spectral(setup, true),
            other => Err(CliError::Usage(format!(
                "scenario `{}` has no Dyson map; `{}` needs one (use spectrum or verify)",
                scenario.name,
                other.name()
            ))),
        },
        ScenarioKind::Dynamical(dynamical) => {
            let j = resolve_picture(&dynamical.model, opts.picture)?;
            match command {
                Command::Simulate => simulate(&dynamical.model, j),
                Command::Heisenberg => heisenberg(&dynamical.model, j),
                Command::Density => density(&dynamical.model, j),
                Command::Metric => metric(&dynamical.model, j),
                Command::Verify => verify(&dynamical.model),
                Command::Spectrum => spectrum(&dynamical.model, j),
                Command::Coriolis => coriolis(dynamical, opts.symbolic),
                Command::Sweep => sweep(&dynamical.model),
            }
        }
    })?;
    finish(command, scenario, opts, run)
}

fn resolve_picture(model: &ModelScenario, requested: Option<usize>) -> CliResult<PictureIndex> {
    let j = requested.unwrap_or(model.picture);
    model
        .map
        .picture(j)
        .map_err(|_| CliError::Usage(format!("--picture {j} is outside 0..={}", model.map.len())))
}

fn finish(command: Command, scenario: &Scenario, opts: &RunOptions, run: Run) -> CliResult<Outcome> {
    let outputs = match &scenario.kind {
        ScenarioKind::Dynamical(d) => d.outputs.clone(),
        ScenarioKind::Spectral(_) => Default::default(),
    };
    let mut artifacts = Vec::new();
    for (suffix, table) in &run.tables {
        let name = artifact_name(outputs.csv.as_deref(), &scenario.name, command, suffix, "csv");
        table.write(&resolve(&opts.out, &name))?;
        artifacts.push(name);
    }
    let report_name = match outputs.report.as_deref() {
        Some(r) => artifact_name(Some(r), &scenario.name, command, "", "json"),
        None => format!("{}-{}-report.json", scenario.name, command.name()),
    };
    artifacts.push(report_name.clone());
    let failed = run.invariants.iter().any(|c| c.status == Status::Fail);
    let report = RunReport {
        command: command.name().into(),
        scenario: scenario.echo.clone(),
        picture: run.picture,
        invariants: run.invariants,
        artifacts,
        symbolic: run.symbolic,
        timings: run.timings,
        exit_status: if failed { 3 } else { 0 },
    };
    write_json(&report, &resolve(&opts.out, &report_name))?;
    let summary = summarize(&report);
    Ok(Outcome { report, summary })
}

/// File name for an artifact. A requested name is used verbatim for
/// `simulate`; other commands insert `-<command>` before the extension.
fn artifact_name(requested: Option<&str>, scenario: &str, command: Command, suffix: &str, ext: &str) -> String {
    match requested {
        Some(r) if command == Command::Simulate && suffix.is_empty() => r.to_string(),
        Some(r) => {
            let p = Path::new(r);
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or(ext);
            let stem = match p.extension() {
                Some(_) => &r[..r.len() - ext.len() - 1],
                None => r,
            };
            format!("{stem}-{}{suffix}.{ext}", command.name())
        }
        None => format!("{scenario}-{}{suffix}.{ext}", command.name()),
    }
}

fn resolve(out: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

fn summarize(report: &RunReport) -> String {
    let mut s = String::new();
    for term in &report.symbolic {
        s.push_str(&format!("Sigma_{} = {}\n", term.n, term.operator));
    }
    for c in &report.invariants {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
            Status::Skipped => "SKIP",
        };
        s.push_str(&format!("{status} {}: {:.3e} ({} {:.1e})\n", c.name, c.measured, c.criterion, c.tolerance));
    }
    for a in &report.artifacts {
        s.push_str(&format!("wrote {a}\n"));
    }
    s
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn drift(values: &[f64]) -> f64 {
    max_of(values.iter().map(|v| (v - values[0]).abs()))
}

fn sample_times(grid: &TimeGrid, k: usize) -> Vec<f64> {
    (0..k).map(|i| grid.start + (grid.end - grid.start) * i as f64 / (k - 1) as f64).collect()
}

fn pictures(model: &ModelScenario) -> Vec<PictureIndex> {
    (0..=model.map.len()).map(|j| model.map.picture(j).expect("in range")).collect()
}

fn bottom_up_note(check: InvariantCheck, model: &ModelScenario) -> InvariantCheck {
    if model.is_bottom_up() {
        check.info("bottom-up scenario: the derived textbook Hamiltonian need not be Hermitian")
    } else {
        check
    }
}

fn empty_result(times: Vec<f64>) -> EvolutionResult<()> {
    EvolutionResult { trajectory: vec![(); times.len()], times, tracked: Vec::new(), diagnostics: Vec::new() }
}

/// Ket trajectory in picture `j` with every observable's expectation tracked.
fn trajectory(model: &ModelScenario, j: PictureIndex) -> CliResult<EvolutionResult<StatePair>> {
    let mut r = integrate_schrodinger(&model.map, &model.hamiltonian, j, &model.initial_pair(j)?, &model.grid)?;
    for obs in &model.observables {
        let values = expectation_series(&model.map, &r, &obs.matrix, model.map.picture(obs.defined_in)?)?;
        r.tracked.push(Series { name: obs.name.clone(), values });
    }
    Ok(r)
}

fn simulate(model: &ModelScenario, j: PictureIndex) -> CliResult<Run> {
    let start = Instant::now();
    let r = trajectory(model, j)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(Run {
        picture: Some(j.get()),
        invariants: trajectory_checks(model, std::slice::from_ref(&r)),
        tables: vec![(String::new(), Table::from_result(&r))],
        timings: vec![Timing { label: "simulate".into(), picture: Some(j.get()), seconds }],
        ..Run::default()
    })
}

fn trajectory_checks(model: &ModelScenario, runs: &[EvolutionResult<StatePair>]) -> Vec<InvariantCheck> {
    let norm = max_of(runs.iter().map(|r| drift(r.diagnostic("physical_norm").unwrap_or(&[0.0]))));
    let mut checks = vec![bottom_up_note(InvariantCheck::at_most("norm_conservation", norm, tol::NORM_DRIFT), model)];
    if runs.len() > 1 {
        checks.push(picture_independence(model, runs));
    }
    checks
}

fn picture_independence(model: &ModelScenario, runs: &[EvolutionResult<StatePair>]) -> InvariantCheck {
    if model.observables.is_empty() {
        return InvariantCheck::skipped("picture_independence", tol::PICTURE_INDEPENDENCE, "no observables");
    }
    let reference = &runs[0];
    let gap = max_of(runs[1..].iter().flat_map(|r| {
        r.tracked.iter().zip(&reference.tracked).flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()))
    }));
    InvariantCheck::at_most("picture_independence", gap, tol::PICTURE_INDEPENDENCE)
}

struct HeisenbergOutcome {
    result: EvolutionResult<()>,
    oracle: f64,
    duality: f64,
}

/// `states` is the ket trajectory in picture `j`, `reference` the one in the
/// top picture; both on the model grid.
fn heisenberg_in(
    model: &ModelScenario,
    j: PictureIndex,
    states: &EvolutionResult<StatePair>,
    reference: &EvolutionResult<StatePair>,
) -> CliResult<HeisenbergOutcome> {
    if model.observables.is_empty() {
        return Err(CliError::validation("observables", "heisenberg needs at least one observable"));
    }
    let map = &model.map;
    let top = map.top();
    let grid = &model.grid;
    let snap0 = map.at(grid.start)?;
    let mut out = empty_result(states.times.clone());
    let (mut oracle, mut duality) = (0.0f64, 0.0f64);
    for obs in &model.observables {
        // Constant in the top picture by assumption.
        let a_top = snap0.map_operator(&obs.matrix, map.picture(obs.defined_in)?, top);
        let a0 = snap0.map_operator(&a_top, top, j);
        let evolved = integrate_heisenberg(map, j, &a0, grid)?;
        let mut values = Vec::with_capacity(evolved.times.len());
        let mut oracle_series = Vec::with_capacity(evolved.times.len());
        let mut duality_series = Vec::with_capacity(evolved.times.len());
        for (k, (&t, a)) in evolved.times.iter().zip(&evolved.trajectory).enumerate() {
            let direct = map.at(t)?.map_operator(&a_top, top, j);
            let both = physical_expectation(&states.trajectory[k], a)?;
            let conventional = physical_expectation(&reference.trajectory[k], &a_top)?;
            values.push(both);
            oracle_series.push((a - direct).norm());
            duality_series.push((both - conventional).norm());
        }
        oracle = oracle.max(max_of(oracle_series.iter().copied()));
        duality = duality.max(max_of(duality_series.iter().copied()));
        out.tracked.push(Series { name: obs.name.clone(), values });
        out.diagnostics.push(Series { name: format!("{}_oracle_residual", obs.name), values: oracle_series });
        out.diagnostics.push(Series { name: format!("{}_duality_residual", obs.name), values: duality_series });
    }
    Ok(HeisenbergOutcome { result: out, oracle, duality })
}

fn heisenberg(model: &ModelScenario, j: PictureIndex) -> CliResult<Run> {
    let start = Instant::now();
    let top = model.map.top();
    let states = integrate_schrodinger(&model.map, &model.hamiltonian, j, &model.initial_pair(j)?, &model.grid)?;
    let reference = if j == top {
        states.clone()
    } else {
        integrate_schrodinger(&model.map, &model.hamiltonian, top, &model.initial_pair(top)?, &model.grid)?
    };
    let h = heisenberg_in(model, j, &states, &reference)?;
    Ok(Run {
        picture: Some(j.get()),
        invariants: vec![
            InvariantCheck::at_most("heisenberg_oracle", h.oracle, tol::HEISENBERG),
            InvariantCheck::at_most("heisenberg_duality", h.duality, tol::HEISENBERG),
        ],
        tables: vec![(String::new(), Table::from_result(&h.result))],
        timings: vec![Timing { label: "heisenberg".into(), picture: Some(j.get()), seconds: start.elapsed().as_secs_f64() }],
        ..Run::default()
    })
}

struct DensityOutcome {
    table: Table,
    trace: f64,
    spectral: f64,
    near_crossing: bool,
}

fn density_in(model: &ModelScenario, j: PictureIndex) -> CliResult<DensityOutcome> {
    let ensemble = model.initial_ensemble(j)?;
    let r = integrate_density(&model.map, &model.hamiltonian, j, &ensemble, &model.grid)?;
    Ok(DensityOutcome {
        table: Table::from_result(&r),
        trace: max_of(r.diagnostic("trace_drift").unwrap_or(&[]).iter().copied()),
        spectral: max_of(r.diagnostic("spectral_drift").unwrap_or(&[]).iter().copied()),
        near_crossing: r.diagnostic("gap_flag").unwrap_or(&[]).iter().any(|&f| f != 0.0),
    })
}

fn density_checks(trace: f64, spectral: f64, near_crossing: bool) -> Vec<InvariantCheck> {
    let mut spectrum = InvariantCheck::at_most("density_spectrum", spectral, tol::DENSITY_SPECTRUM);
    if near_crossing {
        spectrum.note = Some("eigenvalues came within the matching gap; pairing may be unreliable".into());
    }
    vec![InvariantCheck::at_most("density_trace", trace, tol::DENSITY_TRACE), spectrum]
}

fn density(model: &ModelScenario, j: PictureIndex) -> CliResult<Run> {
    let start = Instant::now();
    let d = density_in(model, j)?;
    Ok(Run {
        picture: Some(j.get()),
        invariants: density_checks(d.trace, d.spectral, d.near_crossing),
        tables: vec![(String::new(), d.table)],
        timings: vec![Timing { label: "density".into(), picture: Some(j.get()), seconds: start.elapsed().as_secs_f64() }],
        ..Run::default()
    })
}

fn metric_in(model: &ModelScenario, j: PictureIndex) -> CliResult<(Table, f64, f64)> {
    let r = integrate_metric_in(&model.map, j, &model.grid)?;
    Ok((
        Table::from_result(&r),
        max_of(r.diagnostic("metric_residual").unwrap_or(&[]).iter().copied()),
        max_of(r.diagnostic("hermiticity_residual").unwrap_or(&[]).iter().copied()),
    ))
}

fn metric(model: &ModelScenario, j: PictureIndex) -> CliResult<Run> {
    let start = Instant::now();
    let (table, residual, hermiticity) = metric_in(model, j)?;
    Ok(Run {
        picture: Some(j.get()),
        invariants: vec![
            InvariantCheck::at_most("metric_ode", residual, tol::METRIC_ODE),
            InvariantCheck::at_most("metric_hermiticity", hermiticity, tol::METRIC_HERMITICITY),
        ],
        tables: vec![(String::new(), table)],
        timings: vec![Timing { label: "metric".into(), picture: Some(j.get()), seconds: start.elapsed().as_secs_f64() }],
        ..Run::default()
    })
}

fn recursion_vs_direct(model: &ModelScenario) -> CliResult<InvariantCheck> {
    let mut worst = 0.0f64;
    for t in sample_times(&model.grid, tol::SAMPLES) {
        let chain = model.map.at(t)?.coriolis_chain();
        let fd = coriolis_finite_difference(&model.map, t, tol::FD_STEP)?;
        worst = worst.max((chain.full() - fd).norm());
    }
    Ok(InvariantCheck::at_most("recursion_vs_direct", worst, tol::RECURSION_VS_DIRECT))
}

/// Greedy nearest-neighbour distance between two spectra of equal length.
fn spectral_distance(reference: &[Complex64], other: &[Complex64]) -> f64 {
    let mut used = vec![false; other.len()];
    let mut worst = 0.0f64;
    for r in reference {
        let (k, dist) = other
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, z)| (k, (z - r).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

fn sorted_eigenvalues(a: &cor_forge::CMatrix) -> CliResult<Vec<Complex64>> {
    let mut ev = eigenvalues(a)?;
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

/// Fixed-time checks on the whole ladder at sampled times.
fn ladder_checks(model: &ModelScenario) -> CliResult<Vec<InvariantCheck>> {
    let d = model.dim() as f64;
    let (mut qh, mut iso, mut scale, mut min_eig, mut textbook) = (0.0f64, 0.0f64, 1.0f64, f64::INFINITY, 0.0f64);
    for t in sample_times(&model.grid, tol::SAMPLES) {
        let snap = model.map.at(t)?;
        let h = model.hamiltonian.textbook_at(&snap);
        textbook = textbook.max(hermiticity_residual(&h));
        let family = snap.family(&h);
        let reference = sorted_eigenvalues(&family.hamiltonians[model.map.len()])?;
        scale = scale.max(max_of(reference.iter().map(|z| z.norm())));
        for j in pictures(model) {
            qh = qh.max(snap.quasi_hermiticity_residual(&h, j));
            iso = iso.max(spectral_distance(&reference, &eigenvalues(&family.hamiltonians[j.get()])?));
            let diag = diagnostics(&family.metrics[j.get()])?;
            min_eig = min_eig.min(diag.min_eigenvalue.unwrap_or(f64::NEG_INFINITY));
        }
    }
    let qh_tol = tol::QUASI_HERMITICITY.max(d * d * 1e-10);
    let textbook_check = InvariantCheck::at_most("textbook_hermiticity", textbook, tol::TEXTBOOK_HERMITICITY);
    let textbook_check = if model.is_bottom_up() {
        textbook_check.info("bottom-up scenario: reported, not asserted")
    } else {
        textbook_check
    };
    Ok(vec![
        bottom_up_note(InvariantCheck::at_most("quasi_hermiticity", qh, qh_tol), model),
        InvariantCheck::at_most("isospectrality", iso, tol::ISOSPECTRALITY * scale),
        InvariantCheck::above("metric_positivity", min_eig, 0.0),
        textbook_check,
    ])
}

struct PictureChecks {
    trajectory: EvolutionResult<StatePair>,
    density: (f64, f64, bool),
    metric: Option<(f64, f64)>,
    heisenberg: Option<(f64, f64)>,
    seconds: f64,
}

fn verify_picture(
    model: &ModelScenario,
    j: PictureIndex,
    trajectory: EvolutionResult<StatePair>,
    reference: &EvolutionResult<StatePair>,
    seconds: f64,
) -> CliResult<PictureChecks> {
    let start = Instant::now();
    let d = density_in(model, j)?;
    let metric = if j.get() < model.map.len() {
        let (_, r, h) = metric_in(model, j)?;
        Some((r, h))
    } else {
        None
    };
    let heisenberg = if model.observables.is_empty() {
        None
    } else {
        let h = heisenberg_in(model, j, &trajectory, reference)?;
        Some((h.oracle, h.duality))
    };
    Ok(PictureChecks {
        trajectory,
        density: (d.trace, d.spectral, d.near_crossing),
        metric,
        heisenberg,
        seconds: seconds + start.elapsed().as_secs_f64(),
    })
}

fn verify(model: &ModelScenario) -> CliResult<Run> {
    let runs: Vec<(EvolutionResult<StatePair>, f64)> = pictures(model)
        .into_par_iter()
        .map(|j| {
            let start = Instant::now();
            trajectory(model, j).map(|r| (r, start.elapsed().as_secs_f64()))
        })
        .collect::<CliResult<_>>()?;
    let reference = runs.last().expect("at least one picture").0.clone();
    let per_picture: Vec<PictureChecks> = pictures(model)
        .into_par_iter()
        .zip(runs)
        .map(|(j, (r, seconds))| verify_picture(model, j, r, &reference, seconds))
        .collect::<CliResult<_>>()?;
    let mut invariants = vec![recursion_vs_direct(model)?];
    let trajectories: Vec<_> = per_picture.iter().map(|p| p.trajectory.clone()).collect();
    invariants.extend(trajectory_checks(model, &trajectories));
    invariants.push(match per_picture.iter().filter_map(|p| p.heisenberg).reduce(|a, b| (a.0.max(b.0), a.1.max(b.1))) {
        Some((oracle, _)) => InvariantCheck::at_most("heisenberg_oracle", oracle, tol::HEISENBERG),
        None => InvariantCheck::skipped("heisenberg_oracle", tol::HEISENBERG, "no observables"),
    });
    invariants.push(match per_picture.iter().filter_map(|p| p.heisenberg).reduce(|a, b| (a.0.max(b.0), a.1.max(b.1))) {
        Some((_, duality)) => InvariantCheck::at_most("heisenberg_duality", duality, tol::HEISENBERG),
        None => InvariantCheck::skipped("heisenberg_duality", tol::HEISENBERG, "no observables"),
    });
    let trace = max_of(per_picture.iter().map(|p| p.density.0));
    let spectral = max_of(per_picture.iter().map(|p| p.density.1));
    invariants.extend(density_checks(trace, spectral, per_picture.iter().any(|p| p.density.2)));
    let metric = per_picture.iter().filter_map(|p| p.metric);
    let (residual, hermiticity) = metric.fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    invariants.push(InvariantCheck::at_most("metric_ode", residual, tol::METRIC_ODE));
    invariants.push(InvariantCheck::at_most("metric_hermiticity", hermiticity, tol::METRIC_HERMITICITY));
    invariants.extend(ladder_checks(model)?);
    let timings = per_picture
        .iter()
        .enumerate()
        .map(|(j, p)| Timing { label: "verify".into(), picture: Some(j), seconds: p.seconds })
        .collect();
    Ok(Run { invariants, timings, ..Run::default() })
}

fn sweep(model: &ModelScenario) -> CliResult<Run> {
    let runs: Vec<(EvolutionResult<StatePair>, f64)> = pictures(model)
        .into_par_iter()
        .map(|j| {
            let start = Instant::now();
            trajectory(model, j).map(|r| (r, start.elapsed().as_secs_f64()))
        })
        .collect::<CliResult<_>>()?;
    let tables = runs.iter().enumerate().map(|(j, (r, _))| (format!("-j{j}"), Table::from_result(r))).collect();
    let timings = runs
        .iter()
        .enumerate()
        .map(|(j, (_, s))| Timing { label: "simulate".into(), picture: Some(j), seconds: *s })
        .collect();
    let trajectories: Vec<_> = runs.into_iter().map(|(r, _)| r).collect();
    Ok(Run { invariants: trajectory_checks(model, &trajectories), tables, timings, ..Run::default() })
}

fn spectrum(model: &ModelScenario, j: PictureIndex) -> CliResult<Run> {
    let start = Instant::now();
    let d = model.dim();
    let mut columns = vec!["t".to_string()];
    for k in 0..d {
        columns.push(format!("lambda_{k}_re"));
        columns.push(format!("lambda_{k}_im"));
    }
    columns.push("isospectral_residual".into());
    let mut table = Table::new(columns);
    let (mut worst, mut scale) = (0.0f64, 1.0f64);
    for t in sample_times(&model.grid, tol::SAMPLES) {
        let snap = model.map.at(t)?;
        let family = snap.family(&model.hamiltonian.textbook_at(&snap));
        let ev = sorted_eigenvalues(&family.hamiltonians[j.get()])?;
        scale = scale.max(max_of(ev.iter().map(|z| z.norm())));
        let mut residual = 0.0f64;
        for h in &family.hamiltonians {
            residual = residual.max(spectral_distance(&ev, &eigenvalues(h)?));
        }
        worst = worst.max(residual);
        let mut row = vec![t];
        row.extend(ev.iter().flat_map(|z| [z.re, z.im]));
        row.push(residual);
        table.push(row);
    }
    Ok(Run {
        picture: Some(j.get()),
        invariants: vec![InvariantCheck::at_most("isospectrality", worst, tol::ISOSPECTRALITY * scale)],
        tables: vec![(String::new(), table)],
        timings: vec![Timing { label: "spectrum".into(), picture: Some(j.get()), seconds: start.elapsed().as_secs_f64() }],
        ..Run::default()
    })
}

fn coriolis(dynamical: &Dynamical, symbolic: bool) -> CliResult<Run> {
    let start = Instant::now();
    let model = &dynamical.model;
    let map = &model.map;
    let n = map.len();
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|k| format!("sigma_{k}_norm")));
    columns.push("fd_residual".into());
    let mut table = Table::new(columns);
    let mut worst = 0.0f64;
    for t in model.grid.times() {
        let chain = map.at(t)?.coriolis_chain();
        let fd = coriolis_finite_difference(map, t, tol::FD_STEP)?;
        let residual = (chain.full() - fd).norm();
        worst = worst.max(residual);
        let mut row = vec![t];
        row.extend((1..=n).map(|k| chain.sigma(k).norm()));
        row.push(residual);
        table.push(row);
    }
    let mut invariants = vec![InvariantCheck::at_most("recursion_vs_direct", worst, tol::RECURSION_VS_DIRECT)];
    let mut terms = Vec::new();
    if symbolic {
        let factors = dynamical.symbolic_factors()?;
        let sigmas = composite_coriolis_symbolic(&factors, DEFAULT_MAX_DEPTH)?;
        // `sigmas` runs Σ_N, …, Σ_1.
        terms = sigmas
            .iter()
            .enumerate()
            .map(|(k, s)| SymbolicTerm { n: n - k, operator: s.to_string() })
            .collect();
        let (x, p) = build_osc_operators(model.dim().max(2))?;
        let mut interior = 0.0f64;
        if model.dim() >= 2 {
            for t in sample_times(&model.grid, tol::SAMPLES) {
                let values = |s: &Symbol| {
                    map.factors().iter().find(|f| f.label() == s.name).and_then(|f| match f {
                        Factor::Separable(sf) => {
                            Some(if s.dot { sf.coefficient.derivative(t) } else { sf.coefficient.value(t) })
                        }
                        Factor::General(_) => None,
                    })
                };
                let exact = sigmas.last().expect("N >= 1").realize(&x, &p, &values)?;
                interior = interior.max(interior_residual(map.at(t)?.coriolis_chain().full(), &exact)?);
            }
        }
        invariants.push(InvariantCheck::at_most("symbolic_vs_matrix", interior, tol::SYMBOLIC_INTERIOR));
    }
    Ok(Run {
        invariants,
        tables: vec![(String::new(), table)],
        timings: vec![Timing { label: "coriolis".into(), picture: None, seconds: start.elapsed().as_secs_f64() }],
        symbolic: terms,
        ..Run::default()
    })
}

fn spectral(setup: &Spectral, with_scaling: bool) -> CliResult<Run> {
    let start = Instant::now();
    let table_data = jones_mateo_convergence(setup.g, setup.dims, setup.levels)?;
    let (coarse_d, fine_d) = setup.dims;
    let mut table = Table::new(vec![
        "level".into(),
        format!("energy_d{fine_d}"),
        format!("energy_d{coarse_d}"),
        "convergence".into(),
    ]);
    let diffs = table_data.differences();
    for (k, ((f, c), diff)) in table_data.fine.iter().zip(&table_data.coarse).zip(&diffs).enumerate() {
        table.push(vec![k as f64, *f, *c, *diff]);
    }
    let mut invariants = vec![
        InvariantCheck::at_most("spectrum_real", table_data.max_imag, tol::SPECTRUM_REAL),
        InvariantCheck::at_most("truncation_convergence", max_of(diffs.iter().copied()), tol::TRUNCATION),
    ];
    if with_scaling {
        let mut worst = 0.0f64;
        let mut imag = table_data.max_imag;
        for &g in &setup.scaling_couplings {
            let h = cor_forge::models::build_jones_mateo(g, fine_d)?;
            let levels = cor_forge::models::spectrum_lowest(&h, setup.levels)?;
            for (e, e1) in levels.iter().zip(&table_data.fine) {
                let expected = (g / setup.g).cbrt() * e1;
                worst = worst.max(((e.re - expected) / expected).abs());
                imag = imag.max(e.im.abs());
            }
        }
        invariants[0].measured = imag;
        invariants[0].status = if imag <= tol::SPECTRUM_REAL { Status::Pass } else { Status::Fail };
        invariants.push(InvariantCheck::at_most("coupling_scaling", worst, tol::SCALING));
    }
    Ok(Run {
        invariants,
        tables: if with_scaling { Vec::new() } else { vec![(String::new(), table)] },
        timings: vec![Timing { label: "spectrum".into(), picture: None, seconds: start.elapsed().as_secs_f64() }],
        ..Run::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_names() {
        assert_eq!(artifact_name(None, "two-level", Command::Simulate, "", "csv"), "two-level-simulate.csv");
        assert_eq!(artifact_name(Some("run/out.csv"), "s", Command::Simulate, "", "csv"), "run/out.csv");
        assert_eq!(artifact_name(Some("run/out.csv"), "s", Command::Density, "", "csv"), "run/out-density.csv");
        assert_eq!(artifact_name(Some("out"), "s", Command::Sweep, "-j1", "csv"), "out-sweep-j1.csv");
    }

    #[test]
    fn spectral_distance_ignores_order() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)];
        let b = [Complex64::new(2.0, 1.0), Complex64::new(1.0, 1e-3)];
        assert!((spectral_distance(&a, &b) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn sampled_times_include_both_ends() {
        let g = TimeGrid::rk4(0.0, 1.0, 0.1).unwrap();
        let s = sample_times(&g, 10);
        assert_eq!(s.len(), 10);
        assert_eq!((s[0], s[9]), (0.0, 1.0));
    }
}
