use clap::{Args, ValueEnum};
use compound_core::io::{Report, ReportValue, Unit};
use compound_core::sim::{estimate_error, CodebookMode, DecoderSpec, Evaluation, SimConfig, SimParams, TrialStats};
use compound_core::DecoderKind;

use crate::common::{header, probabilities, scenario, solve_capacity, unconverged, working_input, Failure, Outcome};
use crate::Common;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// How competitor codewords are evaluated.
    #[arg(long, value_enum, default_value_t = EvalArg::Auto)]
    evaluation: EvalArg,
    /// Codebook handling; overrides the scenario.
    #[arg(long, value_enum)]
    codebook: Option<CodebookArg>,
    /// Largest codebook drawn explicitly; overrides the scenario.
    #[arg(long)]
    max_codewords: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalArg {
    Auto,
    Sampled,
    Analytic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CodebookArg {
    Fresh,
    Fixed,
}

fn stats_value(name: &str, t: &TrialStats) -> ReportValue {
    ReportValue::map()
        .with("channel", ReportValue::text(name))
        .with("trials", ReportValue::count(t.trials))
        .with("errors", ReportValue::Quantity { value: t.errors, unit: Unit::Count })
        .with("tie_errors", ReportValue::Quantity { value: t.tie_errors, unit: Unit::Count })
        .with("error_rate", ReportValue::probability(t.error_rate))
        .with("wilson_low", ReportValue::probability(t.wilson_low))
        .with("wilson_high", ReportValue::probability(t.wilson_high))
        .with("std_err", ReportValue::probability(t.std_err))
        .with(
            "evaluation",
            ReportValue::text(match t.evaluation {
                Evaluation::Analytic => "analytic",
                _ => "sampled",
            }),
        )
}

pub fn simulate(c: &Common, args: &SimulateArgs) -> Result<Outcome, Failure> {
    let s = scenario(c, None)?;
    let sim = s.simulation.as_ref();
    let ns = if !c.n.is_empty() { c.n.clone() } else { sim.map(|x| x.n.clone()).unwrap_or_default() };
    if ns.is_empty() || ns.contains(&0) {
        return Err(Failure::Validation("block lengths required (--n or simulation.n), all positive".into()));
    }
    let rate_bits = c
        .rate
        .or(sim.map(|x| x.rate_bits))
        .ok_or_else(|| Failure::Validation("rate required (--rate or simulation.rate_bits)".into()))?;
    let trials = c.trials.or(sim.map(|x| x.trials)).unwrap_or(1000);
    let seed = c.seed.or(sim.map(|x| x.seed)).unwrap_or(0);
    let decoders = if !c.decoder.is_empty() {
        c.decoder.clone()
    } else {
        vec![s.decoder.unwrap_or(DecoderKind::Gmap)]
    };
    let mut config = SimConfig {
        evaluation: match args.evaluation {
            EvalArg::Auto => Evaluation::Auto,
            EvalArg::Sampled => Evaluation::Sampled,
            EvalArg::Analytic => Evaluation::Analytic,
        },
        ..SimConfig::default()
    };
    if let Some(mode) = args.codebook {
        config.codebook = match mode {
            CodebookArg::Fresh => CodebookMode::Fresh,
            CodebookArg::Fixed => CodebookMode::Fixed,
        };
    } else if let Some(x) = sim {
        config.codebook = x.codebook;
    }
    if let Some(m) = args.max_codewords.or(sim.and_then(|x| x.max_codewords)) {
        config.max_codewords = m;
    }

    let (input, source, unconv) = match &s.input {
        Some(p) => (p.clone(), "scenario", None),
        None => {
            let cap = solve_capacity(&s, c)?;
            let (p, src) = working_input(&s, &cap);
            (p, src, unconverged(&cap))
        }
    };

    let mut points = Vec::new();
    for &n in &ns {
        for &kind in &decoders {
            let spec = DecoderSpec::for_kind(kind, &s.set, &input)?;
            let params = SimParams { n, rate_bits, trials, seed };
            let stats = estimate_error(s.set.channels(), &spec, &input, &params, &config)?;
            let worst = stats.iter().map(|t| t.error_rate).fold(0.0, f64::max);
            points.push(
                ReportValue::map()
                    .with("n", ReportValue::count(n))
                    .with("decoder", ReportValue::text(kind.name()))
                    .with("codewords", ReportValue::Quantity { value: stats[0].codewords, unit: Unit::Count })
                    .with("max_error_rate", ReportValue::probability(worst))
                    .with(
                        "per_channel",
                        ReportValue::list(stats.iter().map(|t| stats_value(&s.channel_names[t.channel], t))),
                    ),
            );
        }
    }

    let mut report = Report::new();
    header(&mut report, &s, "simulate");
    report.insert(
        "input",
        ReportValue::map().with("source", ReportValue::text(source)).with("distribution", probabilities(&input)),
    );
    report.insert(
        "parameters",
        ReportValue::map()
            .with("rate", ReportValue::Quantity { value: rate_bits, unit: Unit::Bits })
            .with("trials", ReportValue::count(trials))
            .with("seed", ReportValue::text(seed.to_string()))
            .with(
                "codebook",
                ReportValue::text(match config.codebook {
                    CodebookMode::Fresh => "fresh",
                    CodebookMode::Fixed => "fixed",
                }),
            )
            .with("max_codewords", ReportValue::Quantity { value: config.max_codewords as f64, unit: Unit::Count }),
    );
    report.insert("points", ReportValue::List(points));
    Ok(Outcome { report, unconverged: unconv })
}
