//! Experiment runner behind the `manipctl` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use num_complex::Complex64;
use thiserror::Error;

use crate::analysis::{ErrorTransfer, StabilityVerdict};
use crate::dynamics::ForwardKinematics;
use crate::scenario::{preset, Scenario, ScenarioError, PRESETS};
use crate::sim::{simulate, Metrics, SimResult};
use crate::verify::{self, CheckOutcome, VerifyConfig};
use crate::{Error, JointVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error("scenario {scenario}: simulation diverged at t = {time:.6} s")]
    Divergence { scenario: String, time: f64 },

    #[error("verification failed: {}", failed.join(", "))]
    Verification { failed: Vec<String> },

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },

    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) => EXIT_PARSE,
            CliError::Divergence { .. } => EXIT_DIVERGENCE,
            CliError::Verification { .. } => EXIT_VERIFY,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Output { .. } | CliError::Model(_) => EXIT_FAILURE,
        }
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
}

impl Overrides {
    fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if let Some(dt) = self.dt {
            s.sim.dt = dt;
        }
        if let Some(duration) = self.duration {
            s.sim.duration = duration;
        }
        s
    }

    fn out_dir(&self, scenario: &Scenario) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| scenario.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Scenario from a file path, falling back to a built-in preset name.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(Scenario::from_path(path)?);
    }
    preset(arg).ok_or_else(|| {
        ScenarioError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "no such file and no preset of that name (presets: {})",
                    PRESETS.join(", ")
                ),
            ),
        }
        .into()
    })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub verdict: StabilityVerdict,
    pub metrics: Metrics,
    pub samples: usize,
    pub outputs: Vec<PathBuf>,
    pub wall_clock: Duration,
    /// Grasper tip at `(q₁, q₂, 0)` of the final configuration, when configured.
    pub grasper_tip: Option<Vector3<f64>>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario        {}", self.name)?;
        writeln!(
            f,
            "stability       {} (margin {:.6})",
            if self.verdict.stable {
                "stable"
            } else {
                "UNSTABLE"
            },
            self.verdict.margin
        )?;
        writeln!(f, "samples         {}", self.samples)?;
        writeln!(f, "rms_error_tail  {:.6e} rad", self.metrics.rms_error_tail)?;
        match self.metrics.settling_time {
            Some(t) => writeln!(f, "settling_time   {t:.3} s")?,
            None => writeln!(f, "settling_time   not settled")?,
        }
        writeln!(
            f,
            "control_energy  {:.6e} N²·m²·s",
            self.metrics.control_energy
        )?;
        if let Some(tip) = self.grasper_tip {
            writeln!(
                f,
                "grasper_tip     [{:.6}, {:.6}, {:.6}] m",
                tip.x, tip.y, tip.z
            )?;
        }
        for p in &self.outputs {
            writeln!(f, "wrote           {}", p.display())?;
        }
        write!(f, "wall_clock      {:.3} s", self.wall_clock.as_secs_f64())
    }
}

fn output_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.15e}")
}

/// Header `t,q1..qn,qd1..qdn,e1..en,u1..un,d1..dn`.
pub fn series_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["q", "qd", "e", "u", "d"] {
        h.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    h
}

pub fn write_series_csv(path: &Path, result: &SimResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(series_header(result.dof()))
        .map_err(|e| output_error(path, e))?;
    for k in 0..result.len() {
        let mut row = vec![fmt_num(result.t[k])];
        for series in [&result.q, &result.q_d, &result.error, &result.u, &result.d] {
            row.extend(series[k].iter().map(|&x| fmt_num(x)));
        }
        w.write_record(&row).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// `t,u1..un` only.
pub fn write_control_csv(path: &Path, result: &SimResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=result.dof()).map(|i| format!("u{i}")));
    w.write_record(&header).map_err(|e| output_error(path, e))?;
    for (t, u) in result.t.iter().zip(&result.u) {
        let mut row = vec![fmt_num(*t)];
        row.extend(u.iter().map(|&x| fmt_num(x)));
        w.write_record(&row).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// Worst per-joint stability verdict for a gain set.
pub fn gain_verdict(gains: &crate::control::GainSet) -> StabilityVerdict {
    StabilityVerdict::combine(
        ErrorTransfer::per_joint(gains)
            .iter()
            .map(|tf| tf.stability()),
    )
    .expect("gain sets have at least one joint")
}

/// Simulates a scenario without writing files.
pub fn simulate_scenario(
    scenario: &Scenario,
    overrides: &Overrides,
) -> Result<SimResult, CliError> {
    let scenario = overrides.apply(scenario);
    let exp = scenario.build()?;
    simulate(
        &exp.model,
        &exp.controller,
        &exp.trajectory,
        &exp.disturbance,
        &exp.config,
    )
    .map_err(|e| match e {
        Error::Divergence { time } => CliError::Divergence {
            scenario: scenario.name.clone(),
            time,
        },
        other => CliError::Model(other),
    })
}

/// Runs a scenario, writes its CSV series and returns the report with the result.
pub fn run_scenario(
    scenario: &Scenario,
    overrides: &Overrides,
) -> Result<(RunReport, SimResult), CliError> {
    let started = Instant::now();
    let effective = overrides.apply(scenario);
    let exp = effective.build()?;
    let result = simulate_scenario(scenario, overrides)?;

    let dir = overrides.out_dir(scenario);
    std::fs::create_dir_all(&dir).map_err(|e| output_error(&dir, e))?;
    let csv_path = dir.join(scenario.csv_name());
    write_series_csv(&csv_path, &result)?;

    let grasper_tip = match exp.grasper {
        Some(chain) => {
            let q = result.final_q();
            let joints = JointVector::from_column_slice(&[
                q.get(0).copied().unwrap_or(0.0),
                q.get(1).copied().unwrap_or(0.0),
                chain.travel().0.max(0.0).min(chain.travel().1),
            ]);
            Some(chain.forward_kinematics(&joints)?)
        }
        None => None,
    };

    let report = RunReport {
        name: scenario.name.clone(),
        verdict: gain_verdict(&exp.controller.gains),
        metrics: result.metrics,
        samples: result.len(),
        outputs: vec![csv_path],
        wall_clock: started.elapsed(),
        grasper_tip,
    };
    Ok((report, result))
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub transfer: ErrorTransfer,
    pub verdict: StabilityVerdict,
    pub poles: [Complex64; 3],
    /// Final value for unit δ, `None` when the loop is unstable.
    pub final_value: Option<f64>,
}

pub fn analyze_gains(kd: f64, kp: f64, ki: f64) -> Result<AnalysisReport, CliError> {
    let transfer = ErrorTransfer::new(kd, kp, ki)?;
    let verdict = transfer.stability();
    let poles = transfer.poles();
    let final_value = transfer.final_value(1.0).ok();
    Ok(AnalysisReport {
        transfer,
        verdict,
        poles,
        final_value,
    })
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.9}", z.re)
    } else {
        format!(
            "{:.9} {} {:.9}j",
            z.re,
            if z.im < 0.0 { '-' } else { '+' },
            z.im.abs()
        )
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.transfer;
        writeln!(
            f,
            "characteristic  s^3 + {} s^2 + {} s + {}",
            t.kd, t.kp, t.ki
        )?;
        writeln!(
            f,
            "verdict         {}",
            if self.verdict.stable {
                "stable"
            } else {
                "unstable"
            }
        )?;
        writeln!(f, "margin          {:.9}", self.verdict.margin)?;
        for c in &self.verdict.conditions {
            writeln!(f, "  {:<12}  {:.9}", c.label, c.value)?;
        }
        for (i, p) in self.poles.iter().enumerate() {
            writeln!(f, "pole {}          {}", i + 1, fmt_complex(*p))?;
        }
        match self.final_value {
            Some(v) => write!(f, "final value     {v} (unit delta)"),
            None => write!(f, "final value     inapplicable (closed loop unstable)"),
        }
    }
}

impl AnalysisReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
        let header = [
            "kd",
            "kp",
            "ki",
            "stable",
            "margin",
            "pole1_re",
            "pole1_im",
            "pole2_re",
            "pole2_im",
            "pole3_re",
            "pole3_im",
            "final_value",
        ];
        w.write_record(header).map_err(|e| output_error(path, e))?;
        let t = &self.transfer;
        let mut row = vec![
            fmt_num(t.kd),
            fmt_num(t.kp),
            fmt_num(t.ki),
            self.verdict.stable.to_string(),
            fmt_num(self.verdict.margin),
        ];
        for p in self.poles {
            row.push(fmt_num(p.re));
            row.push(fmt_num(p.im));
        }
        row.push(self.final_value.map_or("inapplicable".to_string(), fmt_num));
        w.write_record(&row).map_err(|e| output_error(path, e))?;
        w.flush().map_err(|e| output_error(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            "fig8" => Ok(Figure::Fig8),
            "fig9" => Ok(Figure::Fig9),
            other => Err(CliError::Usage(format!(
                "unknown figure '{other}', expected one of fig6, fig7, fig8, fig9"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceReport {
    pub figure: Figure,
    pub runs: Vec<RunReport>,
    pub outputs: Vec<PathBuf>,
    pub findings: Vec<String>,
}

impl fmt::Display for ReproduceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for run in &self.runs {
            writeln!(f, "{run}")?;
            writeln!(f)?;
        }
        for p in &self.outputs {
            writeln!(f, "wrote           {}", p.display())?;
        }
        for line in &self.findings {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn preset_run(name: &str, overrides: &Overrides) -> Result<(RunReport, SimResult), CliError> {
    run_scenario(&preset(name).expect("built-in preset"), overrides)
}

fn fmt_settle(t: Option<f64>) -> String {
    t.map_or("not settled".to_string(), |t| format!("{t:.3} s"))
}

/// Regenerates the series behind one figure of the simulation study.
pub fn reproduce(figure: Figure, overrides: &Overrides) -> Result<ReproduceReport, CliError> {
    let mut report = ReproduceReport {
        figure,
        runs: Vec::new(),
        outputs: Vec::new(),
        findings: Vec::new(),
    };
    match figure {
        Figure::Fig6 | Figure::Fig7 => {
            let name = if figure == Figure::Fig6 {
                "fig6"
            } else {
                "fig7"
            };
            let (run, _) = preset_run(name, overrides)?;
            report.runs.push(run);
        }
        Figure::Fig8 => {
            let (high, _) = preset_run("fig8", overrides)?;
            let (low, _) = preset_run("fig7", overrides)?;
            let faster = match (high.metrics.settling_time, low.metrics.settling_time) {
                (Some(h), Some(l)) => h < l,
                (Some(_), None) => true,
                _ => false,
            };
            report.findings.push(format!(
                "settling_time high gain {} vs low gain {}: high gain settles faster: {faster}",
                fmt_settle(high.metrics.settling_time),
                fmt_settle(low.metrics.settling_time)
            ));
            report.runs.push(high);
            report.runs.push(low);
        }
        Figure::Fig9 => {
            let (high, high_res) = preset_run("fig8", overrides)?;
            let (low, low_res) = preset_run("fig7", overrides)?;
            let dir = overrides.out_dir(&preset("fig8").expect("preset"));
            for (file, res) in [
                ("fig9_high_gain.csv", &high_res),
                ("fig9_low_gain.csv", &low_res),
            ] {
                let path = dir.join(file);
                write_control_csv(&path, res)?;
                report.outputs.push(path);
            }
            let (eh, el) = (high.metrics.control_energy, low.metrics.control_energy);
            report
                .findings
                .push(format!("control_energy high gain {eh:.6e}"));
            report
                .findings
                .push(format!("control_energy low gain  {el:.6e}"));
            report.findings.push(format!(
                "control_energy(high) > control_energy(low): {}",
                eh > el
            ));
            report.runs.push(high);
            report.runs.push(low);
        }
    }
    Ok(report)
}

/// Runs the verification suite; fails with every failing check named.
pub fn verify_all(cfg: &VerifyConfig) -> (Vec<CheckOutcome>, Result<(), CliError>) {
    let outcomes = verify::run_all(cfg);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name.to_string())
        .collect();
    let status = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification { failed })
    };
    (outcomes, status)
}
