use compound_core::io::{Report, ReportValue, VnScenario};
use compound_core::rate::{compound_capacity, rate_report, DecoderKind, ProjectionConfig};
use compound_core::scalar::Scalar;
use compound_core::vn::{blind_polytope_rate, limit_gap, LimitInstance, VnDecoder};
use compound_core::{Counterexample, ExactCounterexample, VnDirection};

use crate::common::{capacity_config, capacity_value, scenario, unconverged, Failure, Outcome};
use crate::Common;

const DEFAULT_SWEEP: [f64; 3] = [0.1, 0.05, 0.025];
const DEFAULT_EMBED_EPS: f64 = 0.05;
/// Slack when comparing a generalized rate against the capacity.
const CAPACITY_SLACK: f64 = 1e-6;

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64_lossy()
}

fn names3() -> [&'static str; 3] {
    ["L0", "L1", "L2"]
}

pub fn counterexample(c: &Common) -> Result<Outcome, Failure> {
    let ce = ExactCounterexample::new();
    let g = &ce.geometry;
    let dirs = ce.directions();
    let centered = dirs.iter().map(|d| g.center(d)).collect::<Result<Vec<_>, _>>()?;
    let worsts = ce.worsts();

    let mut report = Report::new();
    report.insert("command", ReportValue::text("vn counterexample"));
    report.insert("directions", ReportValue::list(names3().map(ReportValue::text)));
    report.insert(
        "centered_norm_sq",
        ReportValue::list(centered.iter().map(|cd| ReportValue::nats(f(cd.tilde_norm_sq)))),
    );
    let mut inner = ReportValue::map();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let ip = g.inner(&centered[i].tilde, &centered[j].tilde)?;
        inner = inner.with(format!("L{i}_L{j}"), ReportValue::nats(f(ip)));
    }
    report.insert("centered_inner", inner);

    let cap = g.compound_capacity(&dirs)?;
    let mut capv = ReportValue::map()
        .with("value", ReportValue::nats(f(cap.value)))
        .with("worst", ReportValue::text(names3()[cap.index]));
    if let Some(t) = cap.tie {
        capv = capv.with("tie", ReportValue::text(names3()[t]));
    }
    report.insert("capacity", capv);

    let set = ce.compound_set();
    let comps = set
        .components()
        .iter()
        .map(|block| {
            let members: Vec<_> = block.iter().map(|&i| dirs[i].clone()).collect();
            let check = g.is_one_sided(&members)?;
            Ok(ReportValue::map()
                .with("members", ReportValue::list(block.iter().map(|&i| ReportValue::text(names3()[i]))))
                .with("one_sided", ReportValue::Flag(check.one_sided))
                .with("worst", ReportValue::text(names3()[block[check.worst.index]])))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    report.insert("components", ReportValue::List(comps));
    report.insert("metrics_from", ReportValue::list(["L1", "L2"].map(ReportValue::text)));

    let mut rates = ReportValue::map();
    for (key, decoder) in [("glrt", VnDecoder::Glrt), ("gmap", VnDecoder::Gmap)] {
        let per = dirs
            .iter()
            .map(|d| Ok(ReportValue::nats(f(g.generalized_analysis(decoder, d, &worsts)?.rate))))
            .collect::<Result<Vec<_>, Failure>>()?;
        rates = rates.with(key, ReportValue::List(per));
    }
    report.insert("rates", rates);
    report.insert("glrt_rate", ReportValue::nats(f(g.glrt_rate(&ce.l0, &worsts)?)));
    report.insert("gmap_rate", ReportValue::nats(f(g.gmap_rate(&ce.l0, &worsts)?)));

    // the same decoders on the embedded global channels
    let eps = c.eps.first().copied().unwrap_or(DEFAULT_EMBED_EPS);
    let global = Counterexample::<f64>::new().compound_set().embed(eps)?;
    let gcap = compound_capacity(global.channels(), &capacity_config(c)?)?;
    let mut embedded = ReportValue::map().with("eps", ReportValue::ratio(eps)).with("capacity", capacity_value(&gcap));
    for kind in [DecoderKind::Glrt, DecoderKind::Gmap] {
        let metrics = global.decoder_metrics(kind, &gcap.input)?.expect("linear family");
        let rep = rate_report(&gcap.input, global.channels(), &metrics, &ProjectionConfig::default())?;
        let verdict = if kind == DecoderKind::Gmap {
            ("reaches_capacity", rep.min_rate >= gcap.value - CAPACITY_SLACK)
        } else {
            ("below_capacity", rep.min_rate < gcap.value - CAPACITY_SLACK)
        };
        embedded = embedded.with(
            kind.name(),
            ReportValue::map()
                .with("per_channel", ReportValue::nats_list(&rep.rates))
                .with("min", ReportValue::nats(rep.min_rate))
                .with(verdict.0, ReportValue::Flag(verdict.1)),
        );
    }
    report.insert("embedded", embedded);
    Ok(Outcome { report, unconverged: unconverged(&gcap) })
}

fn vn_block(c: &Common) -> Result<(String, VnScenario), Failure> {
    let s = scenario(c, Some("counterexample"))?;
    let vn = s.vn.ok_or_else(|| Failure::Validation(format!("scenario '{}' has no `vn` block", s.name)))?;
    Ok((s.name, vn))
}

fn metric_directions(vn: &VnScenario) -> Result<(Vec<VnDirection<f64>>, Vec<String>), Failure> {
    if !vn.metric_directions.is_empty() {
        let labels = (0..vn.metric_directions.len()).map(|i| format!("metric{i}")).collect();
        return Ok((vn.metric_directions.clone(), labels));
    }
    let worsts = vn.set.component_worsts(&vn.geometry)?;
    Ok((
        worsts.iter().map(|&i| vn.set.directions()[i].clone()).collect(),
        worsts.iter().map(|&i| vn.names[i].clone()).collect(),
    ))
}

pub fn sweep(c: &Common) -> Result<Outcome, Failure> {
    let (name, vn) = vn_block(c)?;
    let mut eps = if !c.eps.is_empty() {
        c.eps.clone()
    } else if !vn.eps.is_empty() {
        vn.eps.clone()
    } else {
        DEFAULT_SWEEP.to_vec()
    };
    if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Failure::Validation(format!("eps {e} must be a positive number")));
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eps.dedup();

    let dirs = vn.set.directions();
    let (metrics, metric_names) = metric_directions(&vn)?;
    let mut instances: Vec<(String, LimitInstance<f64>)> = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        for a in 0..d.shape().0 {
            instances.push((
                format!("divergence {} row {a}", vn.names[i]),
                LimitInstance::Divergence { p: vn.geometry.noise.clone(), v: d.matrix().row(a).to_vec() },
            ));
        }
    }
    for (i, d) in dirs.iter().enumerate() {
        for (m, mname) in metrics.iter().zip(&metric_names) {
            instances.push((
                format!("mismatched rate on {} with metric {mname}", vn.names[i]),
                LimitInstance::MismatchedRate { geometry: vn.geometry.clone(), l0: d.clone(), l1: m.clone() },
            ));
        }
    }

    let mut all_monotone = true;
    let mut rows_out = Vec::new();
    for (label, inst) in &instances {
        let rows = limit_gap(inst, &eps)?;
        let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap);
        all_monotone &= monotone;
        let mut v = ReportValue::map()
            .with("instance", ReportValue::text(label))
            .with("limit", ReportValue::nats(rows[0].limit))
            .with("monotone", ReportValue::Flag(monotone))
            .with(
                "rows",
                ReportValue::list(rows.iter().map(|r| {
                    ReportValue::map()
                        .with("eps", ReportValue::ratio(r.eps))
                        .with("scaled", ReportValue::nats(r.scaled))
                        .with("gap", ReportValue::nats(r.gap))
                })),
            );
        if let [.., a, b] = rows.as_slice() {
            if a.gap > 0.0 {
                v = v.with("last_gap_ratio", ReportValue::ratio(b.gap / a.gap));
            }
        }
        rows_out.push(v);
    }
    let mut report = Report::new();
    report.insert("command", ReportValue::text("vn sweep"));
    report.insert("scenario", ReportValue::text(name));
    report.insert("eps", ReportValue::list(eps.iter().map(|&e| ReportValue::ratio(e))));
    report.insert("instances", ReportValue::List(rows_out));
    report.insert("all_monotone", ReportValue::Flag(all_monotone));
    Ok(Outcome::done(report))
}

pub fn blind(c: &Common) -> Result<Outcome, Failure> {
    let (name, vn) = vn_block(c)?;
    let g = &vn.geometry;
    let (metrics, metric_names) = metric_directions(&vn)?;
    let mc = metrics.iter().map(|d| g.center(d)).collect::<Result<Vec<_>, _>>()?;
    let members = vn.set.directions().iter().map(|d| g.center(d)).collect::<Result<Vec<_>, _>>()?;
    let b = blind_polytope_rate(g, &mc, &members)?;
    let mut report = Report::new();
    report.insert("command", ReportValue::text("vn blind"));
    report.insert("scenario", ReportValue::text(name));
    report.insert("members", ReportValue::list(vn.names.iter().map(ReportValue::text)));
    report.insert("metrics", ReportValue::list(metric_names.iter().map(ReportValue::text)));
    report.insert("rate", ReportValue::nats(b.rate));
    report.insert("capacity", ReportValue::nats(b.capacity));
    if let Some(r) = b.ratio {
        report.insert("ratio", ReportValue::ratio(r));
    }
    report.insert("binding_member", ReportValue::text(&vn.names[b.binding_member]));
    Ok(Outcome::done(report))
}
