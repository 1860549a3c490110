use std::fmt;

use compound_core::io::{builtin_scenario, load_scenario, Report, ReportValue, Scenario, ScenarioError};
use compound_core::rate::{compound_capacity, CapacityConfig, CapacityResult};
use compound_core::{Distribution, Error};

use crate::Common;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    NonConvergence(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::NonConvergence(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => f.write_str(m),
            Failure::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence(m) => Failure::NonConvergence(m),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Validation(e.to_string())
    }
}

pub struct Outcome {
    pub report: Report,
    /// Set when an iterative solver stopped before its tolerance.
    pub unconverged: Option<String>,
}

impl Outcome {
    pub fn done(report: Report) -> Self {
        Self { report, unconverged: None }
    }
}

/// Loads `--scenario` or `--builtin`, falling back to `default` when given.
pub fn scenario(c: &Common, default: Option<&str>) -> Result<Scenario, Failure> {
    match (&c.scenario, &c.builtin) {
        (Some(_), Some(_)) => Err(Failure::Validation("--scenario and --builtin are mutually exclusive".into())),
        (Some(path), None) => Ok(load_scenario(path)?),
        (None, name) => {
            let Some(name) = name.as_deref().or(default) else {
                return Err(Failure::Validation("no scenario given (use --scenario FILE or --builtin NAME)".into()));
            };
            builtin_scenario(name)
                .ok_or_else(|| Failure::Validation(format!("unknown built-in scenario '{name}'")))?
                .map_err(Failure::from)
        }
    }
}

pub fn capacity_config(c: &Common) -> Result<CapacityConfig, Failure> {
    let mut config = CapacityConfig::default();
    if let Some(tol) = c.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::Validation(format!("--tol {tol} must be a positive number")));
        }
        config.tol = tol;
    }
    Ok(config)
}

pub fn solve_capacity(s: &Scenario, c: &Common) -> Result<CapacityResult<f64>, Failure> {
    Ok(compound_capacity(s.set.channels(), &capacity_config(c)?)?)
}

/// The scenario's input law if it has one, otherwise the capacity-achieving one.
pub fn working_input(s: &Scenario, cap: &CapacityResult<f64>) -> (Distribution<f64>, &'static str) {
    match &s.input {
        Some(p) => (p.clone(), "scenario"),
        None => (cap.input.clone(), "capacity"),
    }
}

pub fn probabilities(p: &Distribution<f64>) -> ReportValue {
    ReportValue::list(p.probs().iter().map(|&x| ReportValue::probability(x)))
}

pub fn names(s: &Scenario, idx: &[usize]) -> ReportValue {
    ReportValue::list(idx.iter().map(|&i| ReportValue::text(&s.channel_names[i])))
}

pub fn header(report: &mut Report, s: &Scenario, command: &str) {
    report.insert("command", ReportValue::text(command));
    report.insert("scenario", ReportValue::text(&s.name));
    report.insert("channels", ReportValue::list(s.channel_names.iter().map(ReportValue::text)));
}

pub fn capacity_value(cap: &CapacityResult<f64>) -> ReportValue {
    ReportValue::map()
        .with("value", ReportValue::nats(cap.value))
        .with("upper_bound", ReportValue::nats(cap.upper_bound))
        .with("gap", ReportValue::nats(cap.gap()))
        .with("converged", ReportValue::Flag(cap.converged))
        .with("iterations", ReportValue::count(cap.iterations))
        .with("input", probabilities(&cap.input))
        .with("dual_weights", ReportValue::list(cap.weights.iter().map(|&w| ReportValue::probability(w))))
}

pub fn unconverged(cap: &CapacityResult<f64>) -> Option<String> {
    (!cap.converged).then(|| {
        format!(
            "compound capacity stopped after {} iterations with certified gap {:.3e} nats",
            cap.iterations,
            cap.gap()
        )
    })
}
