//! Batch front-end for the contract solvers.
//!
//! Every command reads JSON, writes its artifacts into an output directory
//! together with a `manifest.json`, and reports through its exit code:
//! 0 success, 1 malformed input, 2 infeasible, 3 no convergence (or a failed
//! audit/monotonicity check), 4 a figure caption mismatch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pactsolve_core::cara::{halving_schedule, CaraSolution};
use pactsolve_core::figures::{figure_specs, reproduce, FigureResult};
use pactsolve_core::general::GeneralSolution;
use pactsolve_core::model::{agent_value_at, principal_value_at};
use pactsolve_core::{
    brute_force_oracle, cara_ll_solve, general_ll_solve, kkt_verify, perturbation_path, Contract, Error, KktReport,
    Multipliers, ProblemFile, ProblemSpec, SolverConfig, UtilitySpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_CAPTION: u8 = 4;

pub const MAX_SWEEP_POINTS: usize = 10_000;
const CURVE_POINTS: usize = 201;

#[derive(Debug, Parser)]
#[command(name = "pactsolve", version, about = "Optimal wage contracts under limited liability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Input JSON file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = SolverChoice::Auto)]
    pub solver: SolverChoice,
    /// Format of the main result printed to stdout and of sweep/path tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Recorded in the manifest; the solvers are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// KKT audit tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Solve one problem file.
    Solve,
    /// Audit a solution.json written by `solve`.
    Verify,
    /// Brute-force certificate for a small instance.
    Oracle {
        #[arg(long, default_value_t = 0.1)]
        wage_step: f64,
        #[arg(long, default_value_t = 0.01)]
        action_step: f64,
    },
    /// Solve a family of problems varying one parameter.
    Sweep,
    /// Reproduce the built-in CARA/Gaussian figures.
    Figures,
    /// Follow the perturbed problem along eps = 2^-1 .. 2^-steps.
    PerturbPath {
        #[arg(long, default_value_t = 20)]
        steps: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Oracle { .. } => "oracle",
            Command::Sweep => "sweep",
            Command::Figures => "figures",
            Command::PerturbPath { .. } => "perturb-path",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Cara,
    General,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub input_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub solver: SolverChoice,
    pub seed: u64,
    pub format: Format,
    pub tol: f64,
    pub version: &'static str,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

/// A command failure mapped onto the exit-code contract.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::MaxIterations { .. } | Error::NonBinding(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::input(format!("{e:#}"))
    }
}

struct Run {
    common: Common,
    outputs: Vec<String>,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.common.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn input(&self) -> Result<&Path, Failure> {
        self.common.input.as_deref().ok_or_else(|| Failure::input("--input is required for this command"))
    }

    fn read_input(&self) -> Result<String, Failure> {
        let path = self.input()?;
        fs::read_to_string(path).map_err(|e| Failure::input(format!("reading {}: {e}", path.display())))
    }

    fn print(&self, json: &impl Serialize, csv: impl FnOnce() -> String) {
        match self.common.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(json).unwrap_or_default()),
            Format::Csv => print!("{}", csv()),
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> u8 {
    if let Some(n) = threads_from_env() {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut run = Run { common: cli.common.clone(), outputs: Vec::new() };
    if let Err(e) = fs::create_dir_all(&run.common.out) {
        eprintln!("error: cannot create {}: {e}", run.common.out.display());
        return EXIT_INPUT;
    }
    let result = match &cli.command {
        Command::Solve => cmd_solve(&mut run),
        Command::Verify => cmd_verify(&mut run),
        Command::Oracle { wage_step, action_step } => cmd_oracle(&mut run, *wage_step, *action_step),
        Command::Sweep => cmd_sweep(&mut run),
        Command::Figures => cmd_figures(&mut run),
        Command::PerturbPath { steps } => cmd_perturb_path(&mut run, *steps),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    let manifest = RunManifest {
        command: cli.command.name(),
        input_path: run.common.input.clone(),
        output_dir: run.common.out.clone(),
        solver: run.common.solver,
        seed: run.common.seed,
        format: run.common.format,
        tol: run.common.tol,
        version: env!("CARGO_PKG_VERSION"),
        outputs: run.outputs.clone(),
        exit_code: code,
    };
    if let Err(e) = run.write_json("manifest.json", &manifest) {
        eprintln!("error: {e:#}");
    }
    code
}

fn threads_from_env() -> Option<usize> {
    std::env::var("PACTSOLVE_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    cells.join(",")
}

fn parse_problem(text: &str) -> Result<ProblemSpec, Failure> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| Failure::input(format!("malformed problem JSON: {e}")))?;
    Ok(file.build()?)
}

/// Unified view of a solver result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub problem: ProblemFile,
    pub solver: String,
    pub contract: Contract,
    pub wages: Vec<f64>,
    pub lambda: f64,
    pub value: f64,
    pub agent_value: f64,
    pub pc_residual: f64,
    pub multipliers: Multipliers,
    /// Tolerance the accompanying KKT report was computed at.
    pub kkt_tol: f64,
    pub diagnostics: serde_json::Value,
}

impl SolutionFile {
    fn from_cara(p: &ProblemSpec, s: &CaraSolution, tol: f64) -> Self {
        let wages = s.contract.wages(p);
        SolutionFile {
            problem: p.to_file(),
            solver: "cara".into(),
            agent_value: agent_value_at(p, &wages, s.action()),
            contract: s.contract.clone(),
            wages,
            lambda: s.lambda,
            value: s.value,
            pc_residual: s.pc_residual,
            multipliers: s.multipliers.clone(),
            kkt_tol: tol,
            diagnostics: serde_json::to_value(&s.diagnostics).unwrap_or_default(),
        }
    }

    fn from_general(p: &ProblemSpec, s: &GeneralSolution, tol: f64) -> Self {
        let wages = s.wages().to_vec();
        SolutionFile {
            problem: p.to_file(),
            solver: "general".into(),
            agent_value: agent_value_at(p, &wages, s.action()),
            contract: s.contract.clone(),
            wages,
            lambda: s.multipliers.lambda,
            value: s.value,
            pc_residual: s.pc_residual,
            multipliers: s.multipliers.clone(),
            kkt_tol: tol,
            diagnostics: serde_json::to_value(&s.diagnostics).unwrap_or_default(),
        }
    }

    pub fn action(&self) -> f64 {
        self.contract.action()
    }
}

fn use_cara(p: &ProblemSpec, choice: SolverChoice) -> Result<bool, Failure> {
    match choice {
        SolverChoice::Auto => Ok(p.cara_pair().is_some()),
        SolverChoice::General => Ok(false),
        SolverChoice::Cara if p.cara_pair().is_some() => Ok(true),
        SolverChoice::Cara => Err(Failure::input("--solver cara needs CARA utilities for both parties")),
    }
}

/// Solve with the selected solver. A non-converged general solve still
/// returns its best iterate alongside the failure.
fn solve_problem(p: &ProblemSpec, choice: SolverChoice, tol: f64) -> Result<SolutionFile, (Failure, Option<SolutionFile>)> {
    let cara = use_cara(p, choice).map_err(|f| (f, None))?;
    if cara {
        return cara_ll_solve(p).map(|s| SolutionFile::from_cara(p, &s, tol)).map_err(|e| (e.into(), None));
    }
    match general_ll_solve(p, &SolverConfig::default()) {
        Ok(s) => Ok(SolutionFile::from_general(p, &s, tol)),
        Err(Error::MaxIterations { solver, iterations, worst_residual, best }) => {
            let partial = best.map(|b| SolutionFile::from_general(p, &b, tol));
            let e = Error::MaxIterations { solver, iterations, worst_residual, best: None };
            Err((e.into(), partial))
        }
        Err(e) => Err((e.into(), None)),
    }
}

fn wage_curve_csv(p: &ProblemSpec, sol: &SolutionFile) -> Result<String, Failure> {
    let mut out = String::from("x,wage\n");
    match sol.contract {
        Contract::Parametric { rho, beta, a } => {
            let centre = p.x0 + a;
            let rows =
                pactsolve_core::cara::wage_curve(rho, beta, p.m, p.upper, centre - 4.0, centre + 4.0, CURVE_POINTS)?;
            for (x, w) in rows {
                let _ = writeln!(out, "{}", csv_row(&[x, w]));
            }
        }
        Contract::StateWise { ref wages, a } => {
            let mut rows: Vec<(f64, f64)> = wages.iter().enumerate().map(|(i, w)| (p.output(i, a), *w)).collect();
            rows.sort_by(|l, r| l.0.total_cmp(&r.0));
            for (x, w) in rows {
                let _ = writeln!(out, "{}", csv_row(&[x, w]));
            }
        }
    }
    Ok(out)
}

fn audit(p: &ProblemSpec, sol: &SolutionFile, tol: f64) -> KktReport {
    kkt_verify(p, &sol.contract, &sol.multipliers, tol)
}

fn write_solution(run: &mut Run, p: &ProblemSpec, sol: &SolutionFile) -> Result<KktReport, Failure> {
    let report = audit(p, sol, run.common.tol);
    run.write_json("solution.json", sol)?;
    run.write("wage_curve.csv", &wage_curve_csv(p, sol)?)?;
    run.write_json("kkt_report.json", &report)?;
    Ok(report)
}

fn cmd_solve(run: &mut Run) -> Result<u8, Failure> {
    let p = parse_problem(&run.read_input()?)?;
    let tol = run.common.tol;
    let sol = match solve_problem(&p, run.common.solver, tol) {
        Ok(sol) => sol,
        Err((failure, Some(best))) => {
            write_solution(run, &p, &best)?;
            return Err(failure);
        }
        Err((failure, None)) => return Err(failure),
    };
    let report = write_solution(run, &p, &sol)?;
    run.print(&sol, || {
        format!(
            "solver,a,value,lambda,pc_residual,kkt_worst\n{},{}\n",
            sol.solver,
            csv_row(&[sol.action(), sol.value, sol.lambda, sol.pc_residual, report.worst_residual()])
        )
    });
    Ok(EXIT_OK)
}

fn cmd_verify(run: &mut Run) -> Result<u8, Failure> {
    let sol: SolutionFile = serde_json::from_str(&run.read_input()?)
        .map_err(|e| Failure::input(format!("malformed solution JSON: {e}")))?;
    let p = sol.problem.build()?;
    sol.contract.validate(&p)?;
    if sol.multipliers.z.len() != p.n_states() || sol.multipliers.y_mult.len() != p.n_states() {
        return Err(Failure::input("multipliers: one z and one y per shock atom required"));
    }
    let report = audit(&p, &sol, sol.kkt_tol);
    run.write_json("kkt_report.json", &report)?;
    run.print(&report, || {
        format!(
            "r_stationarity_a,r_stationarity_w,r_pc_slack,r_bound_slack,passed\n{},{}\n",
            csv_row(&[report.r_stationarity_a, report.r_stationarity_w, report.r_pc_slack, report.r_bound_slack]),
            report.passed
        )
    });
    Ok(if report.passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Oracle certificate, the format of the regression corpus.
#[derive(Debug, Serialize)]
pub struct Certificate {
    pub name: String,
    pub problem: ProblemFile,
    pub wage_step: f64,
    pub action_step: f64,
    pub value: f64,
    pub wages: Vec<f64>,
    pub a: f64,
    pub wage_cap: f64,
    pub final_step: f64,
    pub points_evaluated: u64,
}

fn cmd_oracle(run: &mut Run, wage_step: f64, action_step: f64) -> Result<u8, Failure> {
    let p = parse_problem(&run.read_input()?)?;
    let name = run.input()?.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let o = brute_force_oracle(&p, wage_step, action_step)?;
    let cert = Certificate {
        name,
        problem: p.to_file(),
        wage_step,
        action_step,
        value: o.value,
        wages: o.contract.wages(&p),
        a: o.contract.action(),
        wage_cap: o.wage_cap,
        final_step: o.final_step,
        points_evaluated: o.points_evaluated,
    };
    run.write_json("certificate.json", &cert)?;
    run.print(&cert, || format!("value,a\n{}\n", csv_row(&[cert.value, cert.a])));
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum SweepParam {
    #[serde(rename = "m")]
    Lower,
    #[serde(rename = "M")]
    Upper,
    #[serde(rename = "y")]
    Reservation,
    #[serde(rename = "gamma_P")]
    GammaP,
    #[serde(rename = "gamma_A")]
    GammaA,
    #[serde(rename = "K")]
    K,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::Lower => "m",
            SweepParam::Upper => "M",
            SweepParam::Reservation => "y",
            SweepParam::GammaP => "gamma_P",
            SweepParam::GammaA => "gamma_A",
            SweepParam::K => "K",
        }
    }

    /// Sign of the principal value's monotonicity: -1 nonincreasing, +1
    /// nondecreasing, 0 unchecked.
    fn value_direction(self) -> i8 {
        match self {
            SweepParam::Lower | SweepParam::Reservation | SweepParam::K => -1,
            SweepParam::Upper => 1,
            SweepParam::GammaP | SweepParam::GammaA => 0,
        }
    }

    fn apply(self, base: &ProblemFile, v: f64) -> Result<ProblemFile, Failure> {
        let mut f = base.clone();
        let gamma = |u: &mut UtilitySpec, who: &str| match u {
            UtilitySpec::Cara { gamma } => {
                *gamma = v;
                Ok(())
            }
            _ => Err(Failure::input(format!("sweeping gamma_{who} needs a CARA utility"))),
        };
        match self {
            SweepParam::Lower => f.m = v,
            SweepParam::Upper => f.upper = Some(v),
            SweepParam::Reservation => f.y = v,
            SweepParam::GammaP => gamma(&mut f.principal, "P")?,
            SweepParam::GammaA => gamma(&mut f.agent, "A")?,
            SweepParam::K => f.k = v,
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Sweep input: a base problem, the parameter to vary, and either explicit
/// `values` or an evenly spaced `grid`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub problem: ProblemFile,
    pub param: SweepParam,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<Grid>,
}

impl SweepFile {
    fn points(&self) -> Result<Vec<f64>, Failure> {
        let values = match (&self.values, &self.grid) {
            (Some(v), None) => v.clone(),
            (None, Some(g)) => match g.n {
                0 => Vec::new(),
                1 => vec![g.lo],
                n => (0..n).map(|i| g.lo + (g.hi - g.lo) * i as f64 / (n - 1) as f64).collect(),
            },
            _ => return Err(Failure::input("sweep: give exactly one of `values` or `grid`")),
        };
        if values.is_empty() {
            return Err(Failure::input("sweep: empty grid"));
        }
        if values.len() > MAX_SWEEP_POINTS {
            return Err(Failure::input(format!("sweep: {} points, at most {MAX_SWEEP_POINTS} allowed", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Failure::input("sweep: grid values must be finite"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub param: f64,
    pub a: f64,
    pub beta: Option<f64>,
    pub wage_mean: f64,
    pub wage_min: f64,
    pub wage_max: f64,
    pub principal_value: f64,
    pub agent_value: f64,
    pub mean_z: f64,
    pub mean_y: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepFailure {
    pub index: usize,
    pub param: f64,
    pub exit_code: u8,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub param: &'static str,
    pub points: usize,
    pub solved: usize,
    pub failures: Vec<SweepFailure>,
    /// "nonincreasing", "nondecreasing" or "none".
    pub value_monotonicity: &'static str,
    pub monotonicity_pass: bool,
    pub monotonicity_violations: Vec<usize>,
    /// Number of solved points with `a > 1/K`.
    pub above_first_best_action: usize,
}

fn sweep_point(base: &ProblemFile, param: SweepParam, v: f64, choice: SolverChoice, tol: f64) -> Result<SweepRow, Failure> {
    let p = param.apply(base, v)?.build()?;
    let sol = solve_problem(&p, choice, tol).map_err(|(f, _)| f)?;
    let a = sol.action();
    let expect = |values: &[f64]| p.shock.expect(|i, _| values[i]);
    Ok(SweepRow {
        index: 0,
        param: v,
        a,
        beta: match sol.contract {
            Contract::Parametric { beta, .. } => Some(beta),
            Contract::StateWise { .. } => None,
        },
        wage_mean: expect(&sol.wages),
        wage_min: sol.wages.iter().copied().fold(f64::INFINITY, f64::min),
        wage_max: sol.wages.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        principal_value: principal_value_at(&p, &sol.wages, a),
        agent_value: sol.agent_value,
        mean_z: expect(&sol.multipliers.z),
        mean_y: expect(&sol.multipliers.y_mult),
    })
}

/// Relative slack allowed when checking monotone principal values.
const MONOTONE_SLACK: f64 = 1e-9;

fn cmd_sweep(run: &mut Run) -> Result<u8, Failure> {
    let file: SweepFile = serde_json::from_str(&run.read_input()?)
        .map_err(|e| Failure::input(format!("malformed sweep JSON: {e}")))?;
    let points = file.points()?;
    let (choice, tol) = (run.common.solver, run.common.tol);
    let results: Vec<Result<SweepRow, Failure>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(&file.problem, file.param, v, choice, tol).map(|r| SweepRow { index: i, ..r }))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(SweepFailure { index: i, param: points[i], exit_code: f.code, message: f.message }),
        }
    }

    let direction = file.param.value_direction();
    let mut ordered: Vec<&SweepRow> = rows.iter().collect();
    ordered.sort_by(|l, r| l.param.total_cmp(&r.param).then(l.index.cmp(&r.index)));
    let violations: Vec<usize> = if direction == 0 {
        Vec::new()
    } else {
        ordered
            .windows(2)
            .filter(|w| {
                let step = (w[1].principal_value - w[0].principal_value) * f64::from(direction);
                let scale = w[0].principal_value.abs().max(w[1].principal_value.abs()).max(1.0);
                step < -MONOTONE_SLACK * scale
            })
            .map(|w| w[1].index)
            .collect()
    };
    let summary = SweepSummary {
        param: file.param.label(),
        points: points.len(),
        solved: rows.len(),
        failures,
        value_monotonicity: match direction {
            -1 => "nonincreasing",
            1 => "nondecreasing",
            _ => "none",
        },
        monotonicity_pass: violations.is_empty(),
        monotonicity_violations: violations,
        above_first_best_action: rows
            .iter()
            .filter(|r| {
                let k = if file.param == SweepParam::K { r.param } else { file.problem.k };
                r.a > 1.0 / k
            })
            .count(),
    };

    let mut csv = format!(
        "index,{},a,beta,wage_mean,wage_min,wage_max,principal_value,agent_value,mean_z,mean_y\n",
        file.param.label()
    );
    for r in &rows {
        let beta = r.beta.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.index,
            csv_row(&[r.param, r.a]),
            beta,
            csv_row(&[r.wage_mean, r.wage_min, r.wage_max]),
            csv_row(&[r.principal_value, r.agent_value, r.mean_z, r.mean_y])
        );
    }
    run.write("sweep.csv", &csv)?;
    run.write_json("sweep_rows.json", &rows)?;
    run.write_json("sweep_summary.json", &summary)?;
    run.print(&summary, || csv.clone());
    Ok(if summary.monotonicity_pass { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Debug, Serialize)]
struct FigureRow<'a> {
    #[serde(flatten)]
    result: &'a FigureResult,
    pass: bool,
    note: Option<&'static str>,
}

fn cmd_figures(run: &mut Run) -> Result<u8, Failure> {
    let mut rows = Vec::new();
    let mut table = String::from("figure,a_rs,beta_rs,a_ll,beta_ll,pass,note\n");
    let mut all_pass = true;
    for spec in figure_specs() {
        let result = reproduce(&spec, CURVE_POINTS)?;
        let mut csv = String::from("x,rs_wage,ll_wage\n");
        for &(x, rs, ll) in &result.curve {
            let _ = writeln!(csv, "{}", csv_row(&[x, rs, ll]));
        }
        run.write(&format!("fig{}.csv", spec.id), &csv)?;
        let pass = result.passed();
        let note = spec.informational.then_some("caption-inconsistent, informational only");
        if !spec.informational {
            all_pass &= pass;
        }
        let c = &result.computed;
        let _ = writeln!(
            table,
            "fig{},{},{},{}",
            spec.id,
            csv_row(&[c.a_rs, c.beta_rs, c.a_ll, c.beta_ll]),
            pass,
            note.unwrap_or("")
        );
        rows.push((result, pass, note));
    }
    let summary: Vec<FigureRow> =
        rows.iter().map(|(result, pass, note)| FigureRow { result, pass: *pass, note: *note }).collect();
    run.write_json("figures_summary.json", &summary)?;
    run.write("figures_summary.csv", &table)?;
    run.print(&summary, || table.clone());
    Ok(if all_pass { EXIT_OK } else { EXIT_CAPTION })
}

#[derive(Debug, Serialize)]
struct PathSummary {
    reference_value: f64,
    final_gap: f64,
    nondecreasing: bool,
    c_max: Option<f64>,
    second_moment_bounded: Option<bool>,
    a_max: f64,
}

fn cmd_perturb_path(run: &mut Run, steps: u32) -> Result<u8, Failure> {
    let p = parse_problem(&run.read_input()?)?;
    if steps == 0 {
        return Err(Failure::input("--steps must be positive"));
    }
    let path = perturbation_path(&p, &halving_schedule(steps))?;
    let reference = cara_ll_solve(&p)?;
    let last = path.steps.last().map(|s| s.value).unwrap_or(f64::NAN);
    let summary = PathSummary {
        reference_value: reference.value,
        final_gap: (last - reference.value).abs(),
        nondecreasing: path.steps.windows(2).all(|w| w[1].value >= w[0].value),
        c_max: path.c_max,
        second_moment_bounded: path.c_max.map(|c| path.steps.iter().all(|s| s.second_moment <= c)),
        a_max: path.a_max,
    };
    let mut csv = String::from("epsilon,value,perturbed_value,a,lambda,second_moment,pc_residual,action_residual\n");
    for s in &path.steps {
        let _ = writeln!(
            csv,
            "{}",
            csv_row(&[
                s.epsilon,
                s.value,
                s.perturbed_value,
                s.contract.action(),
                s.lambda,
                s.second_moment,
                s.pc_residual,
                s.action_residual
            ])
        );
    }
    run.write("perturbation_path.csv", &csv)?;
    run.write_json("perturbation_path.json", &path)?;
    run.write_json("perturbation_summary.json", &summary)?;
    run.print(&summary, || csv.clone());
    Ok(EXIT_OK)
}
