//! Command-line front end.
//!
//! Exit codes: 0 success, 2 bad input or failed validation, 3 numerical
//! failure (nonconvergence, infeasibility, divergence). Errors are written to
//! stderr as one JSON object; the effective configuration is echoed to
//! stderr as JSON before any work starts.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::discrete::{self, FiniteSource, SolverConfig};
use crate::error::Error;
use crate::gauss_source::{self, StateSpaceModel};
use crate::nrdf_gauss;
use crate::realization::{self, FixedPointConfig, RealizationDesign};
use crate::sim::{self, RowOutcome, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nrdf", version, about = "Nonanticipative rate distortion for Gauss-Markov and finite sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Water-filling rate curve of a Gauss-Markov model.
    RdfGauss(Flags),
    /// Steady-state encoder/decoder design over an AWGN channel.
    Realize(Flags),
    /// Monte-Carlo of the realized chain over a distortion grid.
    Simulate(Flags),
    /// Finite-alphabet rate curve by alternating minimization.
    RdfDiscrete(Flags),
    /// Runs the invariant suite on a model and/or instance.
    Check(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::RdfGauss(_) => "rdf-gauss",
            Command::Realize(_) => "realize",
            Command::Simulate(_) => "simulate",
            Command::RdfDiscrete(_) => "rdf-discrete",
            Command::Check(_) => "check",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::RdfGauss(f)
            | Command::Realize(f)
            | Command::Simulate(f)
            | Command::RdfDiscrete(f)
            | Command::Check(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gauss-Markov model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Finite-alphabet instance JSON.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Design JSON written by `realize` (simulate only).
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Single distortion level.
    #[arg(long = "D", allow_hyphen_values = true)]
    pub d: Option<f64>,
    /// Distortion grid: `a,b,c` or `start:stop:count`.
    #[arg(long = "D-grid")]
    pub d_grid: Option<String>,
    /// Channel noise variance.
    #[arg(long = "Q", allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Primary output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Kernel JSON output for `rdf-discrete`.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    /// Fixed-point tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Report rates in bits.
    #[arg(long)]
    pub bits: bool,
}

/// Effective configuration after merging the config file and flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub design: Option<PathBuf>,
    #[serde(default, rename = "D")]
    pub d: Option<f64>,
    #[serde(default, rename = "D_grid")]
    pub d_grid: Option<Vec<f64>>,
    #[serde(default, rename = "Q")]
    pub q: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub kernels: Option<PathBuf>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub bits: Option<bool>,
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` must be start:stop:count"));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|e| format!("grid start: {e}"))?;
        let hi: f64 = parts[1].trim().parse().map_err(|e| format!("grid stop: {e}"))?;
        let n: usize = parts[2].trim().parse().map_err(|e| format!("grid count: {e}"))?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("grid value `{t}`: {e}")))
        .collect()
}

impl RunConfig {
    fn merge(file: RunConfig, flags: &Flags, subcommand: &str) -> Result<Self, Error> {
        let d_grid = match &flags.d_grid {
            Some(g) => Some(parse_grid(g).map_err(Error::Domain)?),
            None => file.d_grid,
        };
        Ok(RunConfig {
            subcommand: Some(subcommand.to_string()),
            model: flags.model.clone().or(file.model),
            instance: flags.instance.clone().or(file.instance),
            design: flags.design.clone().or(file.design),
            d: flags.d.or(file.d),
            d_grid,
            q: flags.q.or(file.q),
            steps: flags.steps.or(file.steps),
            burn_in: flags.burn_in.or(file.burn_in),
            seed: flags.seed.or(file.seed),
            out: flags.out.clone().or(file.out),
            kernels: flags.kernels.clone().or(file.kernels),
            tol: flags.tol.or(file.tol),
            max_iter: flags.max_iter.or(file.max_iter),
            bits: Some(flags.bits || file.bits.unwrap_or(false)),
        })
    }

    fn fill_defaults(&mut self) {
        let sub = self.subcommand.as_deref().unwrap_or("");
        if matches!(sub, "rdf-gauss" | "realize" | "simulate" | "check") && self.model.is_some() {
            self.q.get_or_insert(1.0);
            self.tol.get_or_insert(1e-9);
            self.max_iter.get_or_insert(10_000);
        }
        if sub == "rdf-discrete" {
            self.tol.get_or_insert(1e-8);
        }
        if sub == "simulate" {
            let steps = *self.steps.get_or_insert(1_000_000);
            self.seed.get_or_insert(0);
            self.burn_in.get_or_insert(sim::DEFAULT_BURN_IN.min(steps / 10));
        }
    }

    /// `D` values to process: the grid if given, otherwise the single `D`.
    fn grid(&self) -> Result<Vec<f64>, Error> {
        match (&self.d_grid, self.d) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Err(Error::Domain("one of --D or --D-grid is required".into())),
        }
    }

    fn single_d(&self) -> Result<f64, Error> {
        match (self.d, &self.d_grid) {
            (Some(d), _) => Ok(d),
            (None, Some(g)) if g.len() == 1 => Ok(g[0]),
            _ => Err(Error::Domain("--D is required".into())),
        }
    }

    fn bits(&self) -> bool {
        self.bits.unwrap_or(false)
    }

    fn fixed_point(&self) -> FixedPointConfig {
        FixedPointConfig {
            q: self.q.unwrap_or(1.0),
            tol: self.tol.unwrap_or(1e-9),
            max_outer: self.max_iter.unwrap_or(10_000),
            ..FixedPointConfig::default()
        }
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Error> {
    p.as_deref()
        .ok_or_else(|| Error::Domain(format!("--{flag} is required")))
}

fn load_model(cfg: &RunConfig) -> Result<StateSpaceModel, Error> {
    let model = StateSpaceModel::from_json_file(require(&cfg.model, "model")?)?;
    let diags = gauss_source::validate_model(&model);
    if !diags.is_empty() {
        let list: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(Error::InvalidModel(list.join("; ")));
    }
    Ok(model)
}

/// Primary output sink: the `--out` file or stdout.
fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Human-readable lines go to stdout when the artifact went to a file and to
/// stderr otherwise, so piping the artifact stays clean.
fn summary(cfg: &RunConfig, line: &str) {
    if cfg.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn rate_unit(bits: bool) -> (&'static str, f64) {
    if bits {
        ("bits", 1.0 / std::f64::consts::LN_2)
    } else {
        ("nats", 1.0)
    }
}

fn error_json(e: &Error, code: i32) -> serde_json::Value {
    let mut v = json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": code,
    });
    let inner = match e {
        Error::AtDistortion { d, source } => {
            v["D"] = json!(d);
            source.as_ref()
        }
        other => other,
    };
    match inner {
        Error::Infeasible { d, p, q, roots } => {
            v["diagnostics"] = json!({"D": d, "P": p, "Q": q, "roots": roots});
        }
        Error::DistortionMismatch {
            analytic,
            target,
            active,
            design,
        } => {
            v["diagnostics"] = json!({
                "analytic_distortion": analytic,
                "target_distortion": target,
                "k_active": active,
                "alpha": design.alpha,
                "per_mode_distortion": design.per_mode_distortion(),
                "P": design.p,
            });
        }
        Error::NonConvergence { iterations, residual, .. } => {
            v["diagnostics"] = json!({"iterations": iterations, "residual": residual});
        }
        _ => {}
    }
    v
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn report(e: &Error) -> i32 {
    let code = exit_code(e);
    eprintln!("{}", error_json(e, code));
    code
}

fn cmd_rdf_gauss(cfg: &RunConfig) -> Result<i32, Error> {
    let model = load_model(cfg)?;
    let grid = cfg.grid()?;
    let rows = nrdf_gauss::rdf_curve(&model, &grid, &cfg.fixed_point())?;
    let mut out = open_out(&cfg.out)?;
    nrdf_gauss::write_rdf_csv(&mut out, &rows, cfg.bits())?;
    out.flush()?;
    drop(out);
    let (unit, scale) = rate_unit(cfg.bits());
    for r in &rows {
        summary(
            cfg,
            &format!(
                "D = {}: R = {:.6} {unit} ({} active mode{})",
                r.d,
                r.rate_nats * scale,
                r.k_active,
                if r.k_active == 1 { "" } else { "s" }
            ),
        );
    }
    Ok(EXIT_OK)
}

fn cmd_realize(cfg: &RunConfig) -> Result<i32, Error> {
    let model = load_model(cfg)?;
    let d = cfg.single_d()?;
    let fp = cfg.fixed_point();
    let design = realization::design_steady_state(&model, d, fp.q, fp.tol, fp.max_outer)?;
    let mut out = open_out(&cfg.out)?;
    out.write_all(design.to_json().as_bytes())?;
    out.flush()?;
    drop(out);
    let (unit, scale) = rate_unit(cfg.bits());
    summary(cfg, &format!("P = {:.6}", design.p));
    summary(cfg, &format!("rate = {:.6} {unit}", design.rate_nats * scale));
    summary(cfg, &format!("capacity = {:.6} {unit}", design.channel().capacity() * scale));
    summary(
        cfg,
        &format!(
            "analytic distortion = {:.6}",
            realization::analytic_distortion(&design, &design.lambda)
        ),
    );
    Ok(EXIT_OK)
}

fn cmd_simulate(cfg: &RunConfig, cancel: &AtomicBool) -> Result<i32, Error> {
    let model = load_model(cfg)?;
    let steps = cfg.steps.unwrap_or(1_000_000);
    let seed = cfg.seed.unwrap_or(0);
    let burn_in = cfg.burn_in.unwrap_or(sim::DEFAULT_BURN_IN);
    let q = cfg.q.unwrap_or(1.0);

    let (rows, q_col) = if let Some(path) = &cfg.design {
        let text = std::fs::read_to_string(path)?;
        let design = RealizationDesign::from_json_str(&text, &model)?;
        let d = design.target_distortion();
        let outcome = match sim::run_chain(&model, &design, steps, seed, burn_in) {
            Ok(report) => RowOutcome::Done {
                rate_nats: design.rate_nats,
                report,
            },
            Err(e) => RowOutcome::Failed(e.at_distortion(d)),
        };
        (vec![sim::SweepRow { d, seed, outcome }], design.q)
    } else {
        let sweep_cfg = SweepConfig {
            q,
            steps,
            base_seed: seed,
            burn_in,
            tol: cfg.tol.unwrap_or(1e-9),
            max_iter: cfg.max_iter.unwrap_or(10_000),
        };
        (sim::sweep(&model, &cfg.grid()?, &sweep_cfg, cancel), q)
    };
    let mut out = open_out(&cfg.out)?;
    sim::write_sweep_csv(&mut out, &rows, q_col, cfg.bits())?;
    drop(out);

    let mut code = EXIT_OK;
    for row in &rows {
        match &row.outcome {
            RowOutcome::Done { report, .. } => summary(
                cfg,
                &format!(
                    "D = {}: empirical distortion {:.6} +/- {:.6} (analytic {:.6}), power {:.6} (P = {:.6})",
                    row.d,
                    report.empirical_distortion,
                    report.stderr_distortion,
                    report.analytic_d,
                    report.empirical_power,
                    report.analytic_p
                ),
            ),
            RowOutcome::Failed(e) => code = code.max(report(e)),
            RowOutcome::Cancelled => code = code.max(EXIT_NUMERICAL),
        }
    }
    Ok(code)
}

pub const DISCRETE_CSV_HEADER: &str = "D,s,rate_nats,rate_per_stage_nats,distortion";

fn cmd_rdf_discrete(cfg: &RunConfig) -> Result<i32, Error> {
    let source = FiniteSource::from_json_file(require(&cfg.instance, "instance")?)?;
    source.check_budget()?;
    let grid = cfg.grid()?;
    let solver = SolverConfig {
        distortion_tol: cfg.tol.unwrap_or(1e-8),
        ..SolverConfig::default()
    };
    let sols: Vec<_> = grid
        .iter()
        .map(|&d| discrete::solve_nrdf(&source, d, &solver).map_err(|e| e.at_distortion(d)))
        .collect::<Result<_, _>>()?;

    let (unit, scale) = rate_unit(cfg.bits());
    let mut out = open_out(&cfg.out)?;
    if cfg.bits() {
        writeln!(out, "{}", DISCRETE_CSV_HEADER.replace("nats", "bits"))?;
    } else {
        writeln!(out, "{DISCRETE_CSV_HEADER}")?;
    }
    for s in &sols {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.d,
            s.s,
            s.rate_nats * scale,
            s.rate_per_stage() * scale,
            s.distortion
        )?;
    }
    out.flush()?;
    drop(out);

    let kernel_path = cfg.kernels.clone().or_else(|| {
        cfg.out
            .as_ref()
            .map(|p| p.with_extension("kernels.json"))
    });
    if let Some(path) = kernel_path {
        let body: Vec<String> = sols.iter().map(|s| s.to_json(&source)).collect();
        std::fs::write(&path, format!("[\n{}]\n", body.join(",\n")))?;
    }
    for s in &sols {
        summary(
            cfg,
            &format!(
                "D = {}: R = {:.6} {unit} (s = {:.6}, distortion {:.6})",
                s.d,
                s.rate_nats * scale,
                s.s,
                s.distortion
            ),
        );
    }
    Ok(EXIT_OK)
}

/// One line of the `check` report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check_line(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckLine {
    CheckLine {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Invariant suite over a model (designs at each `D`) and/or an instance
/// (discrete optimum at each `D`).
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<CheckLine>, Error> {
    let mut lines = Vec::new();
    if cfg.model.is_none() && cfg.instance.is_none() {
        return Err(Error::Domain("check needs --model and/or --instance".into()));
    }
    if let Some(path) = &cfg.model {
        let model = StateSpaceModel::from_json_file(path)?;
        let diags = gauss_source::validate_model(&model);
        lines.push(check_line(
            "model validation",
            diags.is_empty(),
            diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        ));
        if diags.is_empty() {
            let grid = match cfg.grid() {
                Ok(g) => g,
                Err(_) => vec![0.5],
            };
            let fp_cfg = cfg.fixed_point();
            for d in grid {
                match realization::solve_fixed_point(&model, d, &fp_cfg) {
                    Ok(fp) => {
                        let v = fp.design.invariant_violations(&model);
                        lines.push(check_line(format!("design invariants at D={d}"), v.is_empty(), v.join("; ")));
                        lines.push(check_line(
                            format!("filter consistency at D={d}"),
                            fp.lambda_residual <= 1e-8 && fp.riccati.residual <= 1e-9,
                            format!(
                                "lambda residual {:e}, Riccati residual {:e} after {} steps",
                                fp.lambda_residual, fp.riccati.residual, fp.riccati.iterations
                            ),
                        ));
                    }
                    Err(e) => lines.push(check_line(format!("design at D={d}"), false, e.to_string())),
                }
            }
        }
    }
    if let Some(path) = &cfg.instance {
        let source = FiniteSource::from_json_file(path)?;
        let (_, d_max) = source.zero_rate_reproduction();
        let grid = match cfg.grid() {
            Ok(g) => g,
            Err(_) => vec![0.5 * (source.min_distortion() + d_max)],
        };
        for d in grid {
            match discrete::solve_nrdf(&source, d, &SolverConfig::default()) {
                Ok(sol) => {
                    let markov = sol.kernels.markov_violation(&source);
                    lines.push(check_line(
                        format!("Markov-in-X at D={d}"),
                        markov <= 1e-8,
                        format!("total variation {markov:e}"),
                    ));
                    let active = sol.rate_nats <= 1e-9 || (sol.distortion - d).abs() <= 1e-8;
                    lines.push(check_line(
                        format!("active distortion at D={d}"),
                        active,
                        format!("rate {} nats, distortion {}", sol.rate_nats, sol.distortion),
                    ));
                    let gap = (sol.rate_nats - sol.rate_closed_form_nats).abs();
                    lines.push(check_line(
                        format!("rate cross-check at D={d}"),
                        gap <= 1e-8,
                        format!("gap {gap:e}"),
                    ));
                }
                Err(e) => lines.push(check_line(format!("discrete optimum at D={d}"), false, e.to_string())),
            }
        }
    }
    Ok(lines)
}

fn cmd_check(cfg: &RunConfig) -> Result<i32, Error> {
    let lines = run_checks(cfg)?;
    let mut out = open_out(&cfg.out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&lines)?)?;
    out.flush()?;
    drop(out);
    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        if l.detail.is_empty() {
            summary(cfg, &format!("[{tag}] {}", l.name));
        } else {
            summary(cfg, &format!("[{tag}] {}: {}", l.name, l.detail));
        }
    }
    if lines.iter().all(|l| l.pass) {
        Ok(EXIT_OK)
    } else if lines.iter().any(|l| !l.pass && l.name == "model validation") {
        Ok(EXIT_INPUT)
    } else {
        Ok(EXIT_NUMERICAL)
    }
}

/// Resolves the configuration for `cli` and runs it. Returns the exit code.
pub fn run(cli: Cli, cancel: &AtomicBool) -> i32 {
    let name = cli.command.name();
    let flags = cli.command.flags();
    let file_cfg = match &flags.config {
        Some(path) => match std::fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|s| serde_json::from_str::<RunConfig>(&s).map_err(Error::from))
        {
            Ok(c) => c,
            Err(e) => return report(&e),
        },
        None => RunConfig::default(),
    };
    let mut cfg = match RunConfig::merge(file_cfg, flags, name) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    cfg.fill_defaults();
    eprintln!("{}", serde_json::to_string(&cfg).unwrap_or_default());

    let result = match &cli.command {
        Command::RdfGauss(_) => cmd_rdf_gauss(&cfg),
        Command::Realize(_) => cmd_realize(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg, cancel),
        Command::RdfDiscrete(_) => cmd_rdf_discrete(&cfg),
        Command::Check(_) => cmd_check(&cfg),
    };
    result.unwrap_or_else(|e| report(&e))
}

/// Entry point for the binary: parses arguments, installs the interrupt
/// handler and runs.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&cancel);
    // a second handler install (e.g. in tests) is harmless to ignore
    let _ = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst));
    run(cli, &cancel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            d: Some(0.5),
            q: Some(2.0),
            ..RunConfig::default()
        };
        let flags = Flags {
            d: Some(0.25),
            ..Flags::default()
        };
        let cfg = RunConfig::merge(file, &flags, "realize").unwrap();
        assert_eq!(cfg.d, Some(0.25));
        assert_eq!(cfg.q, Some(2.0));
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Domain("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::UnsupportedModeCount(3).at_distortion(0.1)), EXIT_NUMERICAL);
        let v = error_json(
            &Error::Infeasible {
                d: 1.0,
                p: 2.0,
                q: 1.0,
                roots: vec![1.5],
            },
            3,
        );
        assert_eq!(v["error"], "infeasible");
        assert_eq!(v["diagnostics"]["roots"][0], 1.5);
    }
}
