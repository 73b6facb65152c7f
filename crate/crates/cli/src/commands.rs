use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use linesol::exact::{solve_entropy, EntropyMethod, EntropyProfile, SolvedSolution};
use linesol::fvsolver::{errors_csv, refinement_study};
use linesol::residual::{residual_sweep, Mode, ResidualReport, SweepGrid};

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Verify,
    Entropy,
    Evolve,
    Mass,
    Trajectory,
}

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub h: Option<f64>,
}

/// What a successful command wrote and printed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: String,
}

pub fn run_command(command: Command, scenario: &Scenario, overrides: &Overrides) -> Result<Outcome, CliError> {
    if let Some(tol) = overrides.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Invalid(format!("--tol must be positive, got {tol}")));
        }
    }
    if let Some(h) = overrides.h {
        if !(h > 0.0) || !h.is_finite() {
            return Err(CliError::Invalid(format!("--h must be positive, got {h}")));
        }
    }
    let out = Output::new(scenario.output_dir(overrides.out.as_deref()));
    match command {
        Command::Verify => verify(scenario, overrides, out),
        Command::Entropy => entropy(scenario, overrides, out),
        Command::Evolve => evolve(scenario, out),
        Command::Mass => mass(scenario, overrides, out),
        Command::Trajectory => trajectory(scenario, out),
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    /// Write to a temporary sibling, then rename into place.
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&format!("creating {}", self.dir.display()), e))?;
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents).map_err(|e| CliError::io(&format!("writing {}", tmp.display()), e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(&format!("renaming to {}", path.display()), e))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, report: String, failure: Option<String>) -> Result<Outcome, CliError> {
        match failure {
            Some(msg) => Err(CliError::CheckFailed(format!("{msg}\n{report}"))),
            None => Ok(Outcome {
                files: self.files,
                report,
            }),
        }
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Validate, check the profile sign condition and solve.
pub fn prepare(scenario: &Scenario) -> Result<SolvedSolution, CliError> {
    let spec = &scenario.solution;
    spec.validate()?;
    spec.check_profile_sign()?;
    for d in &scenario.damping {
        if !(d.beta >= 0.0 && d.p >= 0.0) {
            return Err(CliError::Invalid(format!("damping needs beta, p >= 0, got {d:?}")));
        }
    }
    Ok(SolvedSolution::solve(spec.clone(), &scenario.solve_options())?)
}

/// Sample grid shared by the analytic and finite-difference sweeps.
pub fn sweep_grid(solution: &SolvedSolution, scenario: &Scenario, h: f64) -> Result<SweepGrid, CliError> {
    let v = &scenario.verification;
    let margin = v.fd_steps.iter().copied().fold(h, f64::max);
    Ok(SweepGrid::interior(
        solution,
        v.residual_times.clone(),
        v.residual_points,
        margin,
    )?)
}

fn verify(scenario: &Scenario, overrides: &Overrides, mut out: Output) -> Result<Outcome, CliError> {
    let solution = prepare(scenario)?;
    let v = &scenario.verification;
    let h = overrides.h.unwrap_or(v.fd_h);
    let tol = overrides.tol.unwrap_or(v.tolerance);
    let grid = sweep_grid(&solution, scenario, h)?;
    let analytic = residual_sweep(&solution, &grid, Mode::Analytic)?;
    let fd = residual_sweep(&solution, &grid, Mode::FiniteDifference { h })?;
    out.write("residuals.csv", &report_csv(&analytic)?)?;
    out.write("residuals_fd.csv", &report_csv(&fd)?)?;

    let study: Vec<ResidualReport> = v
        .fd_steps
        .iter()
        .map(|&h| residual_sweep(&solution, &grid, Mode::FiniteDifference { h }))
        .collect::<Result<_, _>>()?;
    let mut conv = String::from("equation,h,max_abs,ratio\n");
    for (k, norm) in analytic.norms.iter().enumerate() {
        for (j, report) in study.iter().enumerate() {
            let value = report.norms[k].max_abs;
            let ratio = if j == 0 {
                String::new()
            } else {
                fmt17(study[j - 1].norms[k].max_abs / value)
            };
            writeln!(
                conv,
                "{},{},{},{}",
                norm.equation,
                fmt17(v.fd_steps[j]),
                fmt17(value),
                ratio
            )
            .unwrap();
        }
    }
    out.write("fd_convergence.csv", &conv)?;

    let worst = analytic.norms.iter().map(|n| n.max_abs).fold(0.0, f64::max);
    let failure = (worst > tol).then(|| format!("analytic residual max-norm {worst:.3e} exceeds tolerance {tol:.3e}"));
    let mut summary = format!("scenario: {}\n\n{analytic}\n{fd}", scenario.name);
    writeln!(summary, "tolerance: {tol:e}").unwrap();
    writeln!(summary, "status: {}", if failure.is_none() { "pass" } else { "fail" }).unwrap();
    out.write("summary.txt", &summary)?;
    out.finish(summary, failure)
}

fn report_csv(report: &ResidualReport) -> Result<String, CliError> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Numerical(e.to_string()))
}

fn entropy(scenario: &Scenario, overrides: &Overrides, mut out: Output) -> Result<Outcome, CliError> {
    let spec = &scenario.solution;
    spec.validate()?;
    spec.check_profile_sign()?;
    let nodes = scenario.entropy.nodes;
    let fi = solve_entropy(spec, EntropyMethod::FirstIntegral, nodes, scenario.entropy.ode_step)?;
    let ode = solve_entropy(spec, EntropyMethod::OdeRk4, nodes, scenario.entropy.ode_step)?;
    let tol = overrides.tol.unwrap_or(scenario.verification.entropy_tolerance);

    let mut csv = String::from("z,g_first_integral,g_ode,abs_diff\n");
    let (mut max_g, mut max_diff) = (0.0f64, 0.0f64);
    for (z, g) in fi.samples() {
        let Ok(h) = ode.g(z) else { continue };
        let diff = (g - h).abs();
        max_g = max_g.max(g.abs());
        max_diff = max_diff.max(diff);
        writeln!(csv, "{},{},{},{}", fmt17(z), fmt17(g), fmt17(h), fmt17(diff)).unwrap();
    }
    out.write("entropy.csv", &csv)?;
    let mut dom = String::from("method,lo,hi,lo_crossing,hi_crossing\n");
    for (name, e) in [("first_integral", &fi), ("ode_rk4", &ode)] {
        let p = e.positivity();
        writeln!(
            dom,
            "{name},{},{},{},{}",
            fmt17(p.lo),
            fmt17(p.hi),
            p.lo_crossing,
            p.hi_crossing
        )
        .unwrap();
    }
    out.write("positivity.csv", &dom)?;

    let mut report = format!("scenario: {}\n", scenario.name);
    let [z_lo, z_hi] = spec.z_domain;
    writeln!(report, "z_domain: [{z_lo}, {z_hi}]").unwrap();
    describe_domain(&mut report, "first integral", &fi);
    describe_domain(&mut report, "ode", &ode);
    writeln!(report, "max |g_fi - g_ode| = {max_diff:.3e} (max g = {max_g:.6e})").unwrap();
    let failure =
        (max_diff > tol * max_g).then(|| format!("method disagreement {max_diff:.3e} exceeds {tol:e} x max g"));
    out.finish(report, failure)
}

fn describe_domain(report: &mut String, name: &str, e: &EntropyProfile) {
    let p = e.positivity();
    let (lo_b, hi_b) = (
        if p.lo_crossing { "(" } else { "[" },
        if p.hi_crossing { ")" } else { "]" },
    );
    write!(
        report,
        "positivity domain ({name}): {lo_b}{:.12}, {:.12}{hi_b}",
        p.lo, p.hi
    )
    .unwrap();
    if p.lo_crossing || p.hi_crossing {
        write!(report, "  g crosses zero inside z_domain").unwrap();
    }
    writeln!(report).unwrap();
}

fn evolve(scenario: &Scenario, mut out: Output) -> Result<Outcome, CliError> {
    let fv = scenario
        .verification
        .fv
        .as_ref()
        .ok_or_else(|| CliError::Invalid("scenario has no verification.fv block".into()))?;
    let solution = prepare(scenario)?;
    let grids = fv.grids()?;
    let config = fv.config();
    config.validate()?;
    let results = refinement_study(&solution, &grids, &config)?;
    let mut conv = String::from("n_cells,l1_rho,ratio\n");
    let mut report = format!("scenario: {}\n", scenario.name);
    let mut failure = None;
    let mut prev: Option<f64> = None;
    for (grid, result) in grids.iter().zip(&results) {
        out.write(&format!("fv_errors_{}.csv", grid.n_cells), &errors_csv(&result.errors))?;
        let last = result.errors.last().expect("run records the initial error");
        let ratio = prev.map(|p| p / last.rho);
        writeln!(
            conv,
            "{},{},{}",
            grid.n_cells,
            fmt17(last.rho),
            ratio.map(fmt17).unwrap_or_default()
        )
        .unwrap();
        writeln!(
            report,
            "n = {:>5}  steps = {:>6}  L1(rho) = {:.6e}  ratio = {}",
            grid.n_cells,
            result.steps,
            last.rho,
            ratio.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into())
        )
        .unwrap();
        if let Some(r) = ratio {
            if !(r >= fv.min_ratio) && failure.is_none() {
                failure = Some(format!(
                    "refinement ratio {r:.4} at n = {} is below {}",
                    grid.n_cells, fv.min_ratio
                ));
            }
        }
        prev = Some(last.rho);
    }
    out.write("convergence.csv", &conv)?;
    out.finish(report, failure)
}

fn mass(scenario: &Scenario, overrides: &Overrides, mut out: Output) -> Result<Outcome, CliError> {
    let solution = prepare(scenario)?;
    let v = &scenario.verification;
    let tol = overrides.tol.unwrap_or(v.mass_tolerance);
    let masses: Vec<(f64, f64)> = v
        .mass_times
        .iter()
        .map(|&t| Ok((t, solution.mass_1d(t)?)))
        .collect::<Result<_, CliError>>()?;
    let mut csv = String::from("t,mass\n");
    let mut report = format!("scenario: {}\n", scenario.name);
    for (t, m) in &masses {
        writeln!(csv, "{},{}", fmt17(*t), fmt17(*m)).unwrap();
        writeln!(report, "M({t}) = {m:.16e}").unwrap();
    }
    out.write("mass.csv", &csv)?;
    let drift = match masses.first() {
        Some(&(_, m0)) => {
            let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
            masses.iter().map(|(_, m)| (m - m0).abs() / scale).fold(0.0, f64::max)
        }
        None => 0.0,
    };
    writeln!(report, "max relative drift = {drift:.3e}").unwrap();
    let model = solution.model();
    let [lo, hi] = scenario.solution.z_domain;
    let edge = model.density(lo)?.max(model.density(hi)?);
    let peak = solution
        .entropy()
        .samples()
        .iter()
        .map(|&(z, _)| model.density(z).unwrap_or(0.0))
        .fold(0.0, f64::max);
    if edge > 1e-8 * peak {
        writeln!(
            report,
            "note: density does not decay inside z_domain; values are window masses, not total masses"
        )
        .unwrap();
    }
    let failure = (drift > tol).then(|| format!("mass drift {drift:.3e} exceeds {tol:e}"));
    out.finish(report, failure)
}

fn trajectory(scenario: &Scenario, mut out: Output) -> Result<Outcome, CliError> {
    let spec = &scenario.solution;
    spec.validate()?;
    let options = scenario.solve_options();
    let trajectory = if scenario.damping.is_empty() {
        linesol::exact::solve_trajectory(spec)?
    } else {
        linesol::exact::solve_trajectory_damped(spec, &scenario.damping, options.trajectory_step, options.horizon)?
    };
    let n = spec.dimension;
    let mut csv = String::from("t");
    for i in 1..=n {
        write!(csv, ",a_{i}").unwrap();
    }
    for i in 1..=n {
        write!(csv, ",adot_{i}").unwrap();
    }
    csv.push('\n');
    let times = scenario.verification.trajectory.times();
    for &t in &times {
        let k = trajectory.kinematics(t)?;
        csv.push_str(&fmt17(t));
        for v in k.position.iter().chain(&k.velocity) {
            csv.push(',');
            csv.push_str(&fmt17(*v));
        }
        csv.push('\n');
    }
    out.write("trajectory.csv", &csv)?;
    let report = format!(
        "scenario: {}\n{} samples on [{}, {}] ({})\n",
        scenario.name,
        times.len(),
        scenario.verification.trajectory.start,
        scenario.verification.trajectory.end,
        if scenario.damping.is_empty() {
            "closed form"
        } else {
            "damped, rk4"
        }
    );
    out.finish(report, None)
}
