//! Scenario JSON (`schema_version` 1). See the README for the field reference.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::error::Error;
use crate::matrix::Matrix;
use crate::probability::{Distribution, Dmc};
use crate::rate::{CompoundSet, DecoderKind};
use crate::sim::CodebookMode;
use crate::vn::{VnCompoundSet, VnDirection, VnGeometry};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows may be off by this much and are then renormalized.
const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: line {line}, column {column}: {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },

    #[error("{path}: field `{field}`: {message}")]
    Invalid { path: String, field: String, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    input_alphabet: Option<usize>,
    #[serde(default)]
    output_alphabet: Option<usize>,
    #[serde(default)]
    channels: Vec<RawNamedMatrix>,
    #[serde(default)]
    components: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    input_distribution: Option<Vec<f64>>,
    #[serde(default)]
    decoder: Option<String>,
    #[serde(default)]
    simulation: Option<RawSimulation>,
    #[serde(default)]
    vn: Option<RawVn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNamedMatrix {
    #[serde(default)]
    name: Option<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    n: Vec<usize>,
    rate_bits: f64,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    codebook: Option<String>,
    #[serde(default)]
    max_codewords: Option<u64>,
}

fn default_trials() -> usize {
    1000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVn {
    noise: Vec<f64>,
    input: Vec<f64>,
    directions: Vec<RawNamedMatrix>,
    #[serde(default)]
    components: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    eps: Vec<f64>,
    #[serde(default)]
    embed_eps: Option<f64>,
    #[serde(default)]
    metric_directions: Vec<RawNamedMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub n: Vec<usize>,
    pub rate_bits: f64,
    pub trials: usize,
    pub seed: u64,
    pub codebook: CodebookMode,
    pub max_codewords: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VnScenario {
    pub geometry: VnGeometry<f64>,
    pub names: Vec<String>,
    pub set: VnCompoundSet<f64>,
    pub eps: Vec<f64>,
    /// `ε` used when the global channels are derived from the directions.
    pub embed_eps: f64,
    /// Metric directions for blind decoding; empty means the component worsts.
    pub metric_directions: Vec<VnDirection<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub channel_names: Vec<String>,
    pub set: CompoundSet<f64>,
    /// Whether the partition came from the file (otherwise it is a single block).
    pub explicit_components: bool,
    pub input: Option<Distribution<f64>>,
    pub decoder: Option<DecoderKind>,
    pub simulation: Option<SimulationSpec>,
    pub vn: Option<VnScenario>,
}

struct Ctx<'a> {
    path: &'a str,
}

impl Ctx<'_> {
    fn invalid(&self, field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid { path: self.path.into(), field: field.into(), message: message.into() }
    }

    fn core(&self, field: impl Into<String>, e: Error) -> ScenarioError {
        self.invalid(field, e.to_string())
    }

    /// Validates a probability vector, renormalizing tiny rounding drift.
    fn probs(&self, field: &str, v: &[f64]) -> Result<Vec<f64>, ScenarioError> {
        if v.is_empty() {
            return Err(self.invalid(field, "empty probability vector"));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(self.invalid(format!("{field}[{i}]"), format!("entry {} is not a nonnegative number", v[i])));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > RENORMALIZE_TOL {
            return Err(self.invalid(field, format!("entries sum to {s}, expected 1 (within {RENORMALIZE_TOL})")));
        }
        Ok(v.iter().map(|x| x / s).collect())
    }

    fn distribution(&self, field: &str, v: &[f64], len: usize) -> Result<Distribution<f64>, ScenarioError> {
        if v.len() != len {
            return Err(self.invalid(field, format!("has {} entries, expected {len}", v.len())));
        }
        Distribution::new(self.probs(field, v)?).map_err(|e| self.core(field, e))
    }

    fn channel(&self, field: &str, m: &[Vec<f64>], shape: (usize, usize)) -> Result<Dmc<f64>, ScenarioError> {
        self.shape(field, m, shape)?;
        let rows = m
            .iter()
            .enumerate()
            .map(|(a, r)| self.probs(&format!("{field}[{a}]"), r))
            .collect::<Result<Vec<_>, _>>()?;
        Dmc::new(Matrix::from_rows(rows).map_err(|e| self.core(field, e))?).map_err(|e| self.core(field, e))
    }

    fn shape(&self, field: &str, m: &[Vec<f64>], (rows, cols): (usize, usize)) -> Result<(), ScenarioError> {
        if m.len() != rows {
            return Err(self.invalid(field, format!("has {} rows, expected {rows}", m.len())));
        }
        if let Some(a) = m.iter().position(|r| r.len() != cols) {
            return Err(self.invalid(format!("{field}[{a}]"), format!("has {} entries, expected {cols}", m[a].len())));
        }
        if let Some((a, b)) =
            m.iter().enumerate().find_map(|(a, r)| r.iter().position(|x| !x.is_finite()).map(|b| (a, b)))
        {
            return Err(self.invalid(format!("{field}[{a}][{b}]"), "entry is not finite"));
        }
        Ok(())
    }
}

fn name_or(n: &Option<String>, prefix: &str, i: usize) -> String {
    n.clone().unwrap_or_else(|| format!("{prefix}{i}"))
}

/// Parses and validates scenario JSON; `origin` labels diagnostics.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let ctx = Ctx { path: origin };
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = if field.is_empty() || field == "." { inner.to_string() } else { format!("at `{field}`: {inner}") };
        ScenarioError::Syntax { path: origin.into(), line: inner.line(), column: inner.column(), message }
    })?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ctx.invalid("schema_version", format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version)));
    }

    let vn = raw.vn.as_ref().map(|v| parse_vn(&ctx, v)).transpose()?;

    let (channels, channel_names) = if raw.channels.is_empty() {
        let Some(v) = &vn else {
            return Err(ctx.invalid("channels", "at least one channel is required (or a `vn` block to derive them)"));
        };
        let chans = v
            .set
            .directions()
            .iter()
            .enumerate()
            .map(|(i, d)| d.embed(v.embed_eps).map_err(|e| ctx.core(format!("vn.directions[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        (chans, v.names.clone())
    } else {
        let first = &raw.channels[0].matrix;
        let rows = raw.input_alphabet.unwrap_or(first.len());
        let cols = raw.output_alphabet.unwrap_or_else(|| first.first().map_or(0, Vec::len));
        if rows == 0 || cols == 0 {
            return Err(ctx.invalid("channels[0].matrix", "empty matrix"));
        }
        let chans = raw
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| ctx.channel(&format!("channels[{i}].matrix"), &c.matrix, (rows, cols)))
            .collect::<Result<Vec<_>, _>>()?;
        let names = raw.channels.iter().enumerate().map(|(i, c)| name_or(&c.name, "W", i)).collect();
        (chans, names)
    };
    let inputs = channels[0].inputs();
    let explicit_components = raw.components.is_some() || (raw.channels.is_empty() && vn.is_some());
    let components = match (&raw.components, &vn) {
        (Some(c), _) => c.clone(),
        (None, Some(v)) if raw.channels.is_empty() => v.set.components().to_vec(),
        _ => vec![(0..channels.len()).collect()],
    };
    let set = CompoundSet::with_components(channels, components).map_err(|e| ctx.core("components", e))?;
    let input = raw
        .input_distribution
        .as_ref()
        .map(|p| ctx.distribution("input_distribution", p, inputs))
        .transpose()?;
    let decoder = raw
        .decoder
        .as_ref()
        .map(|d| d.parse::<DecoderKind>().map_err(|e| ctx.core("decoder", e)))
        .transpose()?;
    let simulation = raw
        .simulation
        .as_ref()
        .map(|s| {
            if s.n.is_empty() || s.n.contains(&0) {
                return Err(ctx.invalid("simulation.n", "block lengths must be a nonempty list of positive integers"));
            }
            if !(s.rate_bits.is_finite() && s.rate_bits >= 0.0) {
                return Err(ctx.invalid("simulation.rate_bits", "must be a nonnegative number"));
            }
            if s.trials == 0 {
                return Err(ctx.invalid("simulation.trials", "must be positive"));
            }
            let codebook = match s.codebook.as_deref() {
                None | Some("fresh") => CodebookMode::Fresh,
                Some("fixed") => CodebookMode::Fixed,
                Some(other) => {
                    return Err(ctx.invalid("simulation.codebook", format!("'{other}' is not 'fresh' or 'fixed'")))
                }
            };
            Ok(SimulationSpec {
                n: s.n.clone(),
                rate_bits: s.rate_bits,
                trials: s.trials,
                seed: s.seed,
                codebook,
                max_codewords: s.max_codewords,
            })
        })
        .transpose()?;
    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| "scenario".into()),
        channel_names,
        set,
        explicit_components,
        input,
        decoder,
        simulation,
        vn,
    })
}

fn parse_vn(ctx: &Ctx, v: &RawVn) -> Result<VnScenario, ScenarioError> {
    let first = v.directions.first().ok_or_else(|| ctx.invalid("vn.directions", "at least one direction is required"))?;
    let shape = (first.matrix.len(), v.noise.len());
    let noise = ctx.distribution("vn.noise", &v.noise, shape.1)?;
    let input = ctx.distribution("vn.input", &v.input, shape.0)?;
    let direction = |field: String, m: &RawNamedMatrix| -> Result<VnDirection<f64>, ScenarioError> {
        ctx.shape(&field, &m.matrix, shape)?;
        let mat = Matrix::from_rows(m.matrix.clone()).map_err(|e| ctx.core(&field, e))?;
        VnDirection::new(mat, noise.clone()).map_err(|e| ctx.core(&field, e))
    };
    let dirs = v
        .directions
        .iter()
        .enumerate()
        .map(|(i, d)| direction(format!("vn.directions[{i}].matrix"), d))
        .collect::<Result<Vec<_>, _>>()?;
    let metric_directions = v
        .metric_directions
        .iter()
        .enumerate()
        .map(|(i, d)| direction(format!("vn.metric_directions[{i}].matrix"), d))
        .collect::<Result<Vec<_>, _>>()?;
    let names = v.directions.iter().enumerate().map(|(i, d)| name_or(&d.name, "L", i)).collect();
    let components = v.components.clone().unwrap_or_else(|| vec![(0..dirs.len()).collect()]);
    let set = VnCompoundSet::new(dirs, components).map_err(|e| ctx.core("vn.components", e))?;
    if let Some(i) = v.eps.iter().position(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(ctx.invalid(format!("vn.eps[{i}]"), "must be a positive number"));
    }
    let embed_eps = v.embed_eps.or_else(|| v.eps.first().copied()).unwrap_or(0.05);
    Ok(VnScenario { geometry: VnGeometry::new(input, noise), names, set, eps: v.eps.clone(), embed_eps, metric_directions })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: shown.clone(), source })?;
    parse_scenario(&text, &shown)
}
