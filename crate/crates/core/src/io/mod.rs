//! Scenario files in, reports out.

mod report;
mod scenario;

pub use report::{read_report_json, render_report, write_report, Report, ReportError, ReportFormat, ReportValue, Unit};
pub use scenario::{
    load_scenario, parse_scenario, Scenario, ScenarioError, SimulationSpec, VnScenario, SCHEMA_VERSION,
};

/// Scenario files compiled into the library, by name.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("counterexample", include_str!("../../scenarios/counterexample.json")),
    ("bsc-quarter", include_str!("../../scenarios/bsc-quarter.json")),
    ("union-one-sided", include_str!("../../scenarios/union-one-sided.json")),
];

/// Parses a built-in scenario; `None` for an unknown name.
pub fn builtin_scenario(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| parse_scenario(text, &format!("builtin:{n}")))
}
