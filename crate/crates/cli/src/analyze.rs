use compound_core::io::{Report, ReportValue, Scenario};
use compound_core::probability::{mutual_information, Distribution, Dmc};
use compound_core::rate::{
    is_one_sided, one_sided_cover, rate_report, worst_channel, DecoderKind, OneSidedCheck, OneSidedWitness,
    ProjectionConfig,
};

use crate::common::{
    capacity_value, header, names, probabilities, scenario, solve_capacity, unconverged, working_input, Failure,
    Outcome,
};
use crate::Common;

pub fn capacity(c: &Common) -> Result<Outcome, Failure> {
    let s = scenario(c, None)?;
    let cap = solve_capacity(&s, c)?;
    let worst = worst_channel(s.set.channels(), &cap.input)?;
    let mut report = Report::new();
    header(&mut report, &s, "capacity");
    report.insert("capacity", capacity_value(&cap));
    report.insert("informations", ReportValue::nats_list(&worst.informations));
    report.insert("worst", worst_value(&s, &worst));
    Ok(Outcome { report, unconverged: unconverged(&cap) })
}

pub fn one_sided(c: &Common) -> Result<Outcome, Failure> {
    let s = scenario(c, None)?;
    let cap = solve_capacity(&s, c)?;
    let (input, source) = working_input(&s, &cap);
    let mut report = Report::new();
    header(&mut report, &s, "one-sided");
    report.insert("input", input_value(&input, source));
    one_sided_sections(&mut report, &s, &input)?;
    Ok(Outcome { report, unconverged: unconverged(&cap) })
}

pub fn analyze(c: &Common) -> Result<Outcome, Failure> {
    let s = scenario(c, None)?;
    let cap = solve_capacity(&s, c)?;
    let (input, source) = working_input(&s, &cap);
    let mut report = Report::new();
    header(&mut report, &s, "analyze");
    report.insert("capacity", capacity_value(&cap));
    report.insert("input", input_value(&input, source));
    let worst = worst_channel(s.set.channels(), &input)?;
    report.insert("informations", ReportValue::nats_list(&worst.informations));
    report.insert("worst", worst_value(&s, &worst));
    one_sided_sections(&mut report, &s, &input)?;

    let decoders = if c.decoder.is_empty() { DecoderKind::ALL.to_vec() } else { c.decoder.clone() };
    let mut rates = ReportValue::map();
    for kind in decoders {
        rates = rates.with(kind.name(), decoder_rates(&s, kind, &input, cap.value)?);
    }
    report.insert("rates", rates);
    Ok(Outcome { report, unconverged: unconverged(&cap) })
}

fn input_value(input: &Distribution<f64>, source: &str) -> ReportValue {
    ReportValue::map().with("source", ReportValue::text(source)).with("distribution", probabilities(input))
}

fn worst_value(s: &Scenario, w: &compound_core::rate::WorstChannel<f64>) -> ReportValue {
    let mut v = ReportValue::map()
        .with("channel", ReportValue::text(&s.channel_names[w.index]))
        .with("information", ReportValue::nats(w.information));
    if let Some(t) = w.tie {
        v = v.with("tie", ReportValue::text(&s.channel_names[t]));
    }
    v
}

fn witness_text(s: &Scenario, members: &[usize], w: &OneSidedWitness<f64>) -> String {
    let name = |i: usize| &s.channel_names[members[i]];
    match w {
        OneSidedWitness::Holds { worst } => format!("holds with worst channel {}", name(*worst)),
        OneSidedWitness::Tie { first, second } => {
            format!("undecided: {} and {} tie for the worst channel", name(*first), name(*second))
        }
        OneSidedWitness::Violation { worst, channel, deficit } => format!(
            "fails: {} breaks the Pythagorean inequality against worst channel {} by {deficit:.6e} nats",
            name(*channel),
            name(*worst)
        ),
    }
}

fn check_value(s: &Scenario, members: &[usize], check: &OneSidedCheck<f64>) -> ReportValue {
    ReportValue::map()
        .with("members", names(s, members))
        .with("one_sided", ReportValue::Flag(check.one_sided))
        .with("verdict", ReportValue::text(witness_text(s, members, &check.witness)))
        .with("worst", ReportValue::text(&s.channel_names[members[check.worst.index]]))
        .with("pythagorean_gaps", ReportValue::nats_list(&check.gaps))
}

fn one_sided_sections(report: &mut Report, s: &Scenario, input: &Distribution<f64>) -> Result<(), Failure> {
    let chans = s.set.channels();
    let subset = |idx: &[usize]| -> Vec<Dmc<f64>> { idx.iter().map(|&i| chans[i].clone()).collect() };
    let all: Vec<usize> = (0..chans.len()).collect();
    report.insert("one_sided", check_value(s, &all, &is_one_sided(chans, input)?));
    if s.explicit_components {
        let comps = s
            .set
            .components()
            .iter()
            .map(|block| Ok(check_value(s, block, &is_one_sided(&subset(block), input)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        report.insert("components", ReportValue::List(comps));
    }
    let cover = one_sided_cover(chans, input)?;
    report.insert(
        "cover",
        ReportValue::map()
            .with("size", ReportValue::count(cover.len()))
            .with("blocks", ReportValue::list(cover.iter().map(|b| names(s, b)))),
    );
    Ok(())
}

fn decoder_rates(s: &Scenario, kind: DecoderKind, input: &Distribution<f64>, capacity: f64) -> Result<ReportValue, Failure> {
    let chans = s.set.channels();
    let Some(metrics) = s.set.decoder_metrics(kind, input)? else {
        let rates = chans.iter().map(|w| mutual_information(input, w)).collect::<Result<Vec<f64>, _>>()?;
        let (min_channel, min) =
            rates.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, r)| if r < b.1 { (i, r) } else { b });
        return Ok(ReportValue::map()
            .with("per_channel", ReportValue::nats_list(&rates))
            .with("min", ReportValue::nats(min))
            .with("min_channel", ReportValue::text(&s.channel_names[min_channel]))
            .with("min_minus_capacity", ReportValue::nats(min - capacity)));
    };
    let metric_sources: Vec<usize> = match kind {
        DecoderKind::Ml | DecoderKind::Map => vec![worst_channel(chans, input)?.index],
        _ => s.set.component_worsts(input)?,
    };
    let rep = rate_report(input, chans, &metrics, &ProjectionConfig::default())?;
    Ok(ReportValue::map()
        .with("metrics_from", names(s, &metric_sources))
        .with("per_channel", ReportValue::nats_list(&rep.rates))
        .with("min", ReportValue::nats(rep.min_rate))
        .with("min_channel", ReportValue::text(&s.channel_names[rep.min_channel]))
        .with("min_minus_capacity", ReportValue::nats(rep.min_rate - capacity))
        .with(
            "diagnostics",
            ReportValue::map()
                .with("sinkhorn_iterations", ReportValue::counts(&rep.sinkhorn_iterations))
                .with("marginal_residuals", ReportValue::list(rep.marginal_residuals.iter().map(|&r| ReportValue::ratio(r))))
                .with(
                    "constraint_residuals",
                    ReportValue::list(rep.constraint_residuals.iter().map(|&r| ReportValue::nats(r))),
                ),
        ))
}
