//! Human-readable tables and CSV renderings of report documents.

use std::fmt::Write as _;

use gemmsim::{ComponentId, CostBreakdown, Variant};

use crate::report::{OracleReport, ReportBody, ReportDocument, VerifyReport};
use gemmsim::{LayerResult, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

/// `x` rounded to six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Round first so that e.g. 9.9999996 picks the magnitude of 10.
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float");
    let mag = rounded.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag) as usize;
    format!("{rounded:.decimals$}")
}

pub fn render(doc: &ReportDocument, format: Format) -> Result<String, crate::CliError> {
    Ok(match format {
        Format::Json => doc.to_json()?,
        Format::Human => human(&doc.result),
        Format::Csv => csv_text(&doc.result)?,
    })
}

fn human(body: &ReportBody) -> String {
    match body {
        ReportBody::Estimate(b) => human_breakdown(b),
        ReportBody::Sweep(s) => human_sweep(s),
        ReportBody::Layers(l) => human_layers(l),
        ReportBody::Oracle(o) => human_oracle(o),
        ReportBody::Verify(v) => human_verify(v),
    }
}

fn human_breakdown(b: &CostBreakdown) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}x{}x{}  kernel {}  tiles {}",
        b.variant, b.shape.m, b.shape.n, b.shape.k, b.kernel, b.tiles
    );
    let _ = writeln!(
        out,
        "{:<22} {:<16} {:>14} {:>6} {:>12}",
        "component", "channel", "elements", "chunk", "seconds"
    );
    for c in &b.components {
        let channel = c
            .channel
            .map_or_else(|| "-".to_owned(), |ch| ch.to_string());
        let _ = writeln!(
            out,
            "{:<22} {:<16} {:>14} {:>6} {:>12}",
            c.component.name(),
            channel,
            c.elements,
            c.chunk,
            sig6(c.seconds)
        );
    }
    let _ = writeln!(
        out,
        "{:<22} {:<16} {:>14} {:>6} {:>12}",
        "arithmetic",
        "-",
        "",
        "",
        sig6(b.arithmetic_seconds)
    );
    let _ = writeln!(
        out,
        "{:<22} {:<16} {:>14} {:>6} {:>12}",
        "total",
        "",
        "",
        "",
        sig6(b.total_seconds)
    );
    out
}

fn human_sweep(s: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}x{}x{}",
        s.variant, s.shape.m, s.shape.n, s.shape.k
    );
    let _ = writeln!(
        out,
        "{:>4} {:<8} {:>6} {:>6} {:>6} {:>12} {:>12}",
        "rank", "kernel", "mc", "nc", "kc", "transfers", "total"
    );
    for (i, e) in s.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:<8} {:>6} {:>6} {:>6} {:>12} {:>12}",
            i + 1,
            e.kernel.to_string(),
            e.tiles.mc,
            e.tiles.nc,
            e.tiles.kc,
            sig6(e.breakdown.transfer_seconds()),
            sig6(e.breakdown.total_seconds)
        );
    }
    for (k, why) in &s.infeasible {
        let _ = writeln!(out, "{:>4} {:<8} infeasible: {why}", "-", k.to_string());
    }
    let _ = writeln!(
        out,
        "best: {} ({} s)",
        s.best().kernel,
        sig6(s.best().breakdown.total_seconds)
    );
    out
}

fn human_layers(layers: &[LayerResult]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<6} {:>6} {:>6} {:>6}", "id", "m", "n", "k");
    for v in Variant::ALL {
        let _ = write!(out, " {:>8} {:>12}", v.name(), "seconds");
    }
    let _ = writeln!(out, " {:>8}", "winner");
    for l in layers {
        let _ = write!(
            out,
            "{:<6} {:>6} {:>6} {:>6}",
            l.layer.id, l.layer.m, l.layer.n, l.layer.k
        );
        for v in Variant::ALL {
            match l.cell(v) {
                Ok(c) => {
                    let _ = write!(
                        out,
                        " {:>8} {:>12}",
                        c.kernel.to_string(),
                        sig6(c.total_seconds)
                    );
                }
                Err(_) => {
                    let _ = write!(out, " {:>8} {:>12}", "error", "-");
                }
            }
        }
        let winner = l.winner.map_or("-", |v| v.name());
        let _ = writeln!(out, " {winner:>8}");
    }
    for l in layers {
        for (v, cell) in &l.cells {
            if let Err(e) = cell {
                let _ = writeln!(out, "layer {} {v}: {e}", l.layer.id);
            }
        }
    }
    out
}

fn human_oracle(o: &OracleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}x{}x{}  kernel {}  tiles {}  seed {}",
        o.variant, o.shape.m, o.shape.n, o.shape.k, o.kernel, o.tiles, o.seed
    );
    let _ = writeln!(
        out,
        "{:<22} {:<16} {:>14} {:>6}",
        "component", "channel", "elements", "chunk"
    );
    for c in o.run.counters.iter() {
        let channel = c
            .channel
            .map_or_else(|| "-".to_owned(), |ch| ch.to_string());
        let _ = writeln!(
            out,
            "{:<22} {:<16} {:>14} {:>6}",
            c.component.name(),
            channel,
            c.volume,
            c.chunk
        );
    }
    let _ = writeln!(
        out,
        "product: {} ({} elements checked)",
        if o.run.correct { "correct" } else { "WRONG" },
        o.run.elements_checked
    );
    if o.mismatches.is_empty() {
        let _ = writeln!(out, "counters: match analytic volumes");
    } else {
        for (a, r) in &o.mismatches {
            let _ = writeln!(
                out,
                "counters: {} analytic {} vs interpreted {}",
                a.component, a.volume, r.volume
            );
        }
    }
    out
}

fn human_verify(v: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} cases (dims <= {}, seed {}): {} passed, {} failed",
        v.cases, v.max_dim, v.seed, v.passed, v.failed
    );
    if let Some(f) = v.first_failure() {
        let c = &f.case;
        let _ = writeln!(
            out,
            "first failure: case {} {} {}x{}x{} kernel {} tiles {} l1={} l2={} seed {}",
            c.index,
            c.variant,
            c.shape.m,
            c.shape.n,
            c.shape.k,
            c.kernel,
            c.tiles,
            c.cap_l1,
            c.cap_l2,
            c.seed
        );
        if !f.correct {
            let _ = writeln!(out, "  product differs from the reference");
        }
        for (a, r) in &f.mismatches {
            let _ = writeln!(
                out,
                "  {}: analytic {} vs interpreted {}",
                a.component, a.volume, r.volume
            );
        }
    }
    out
}

fn csv_text(body: &ReportBody) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match body {
        ReportBody::Estimate(b) => {
            w.write_record([
                "component",
                "channel",
                "elements",
                "bytes",
                "chunk",
                "seconds",
            ])?;
            for c in &b.components {
                let channel = c.channel.map(|ch| ch.to_string()).unwrap_or_default();
                w.write_record([
                    c.component.name().to_owned(),
                    channel,
                    c.elements.to_string(),
                    c.bytes.to_string(),
                    c.chunk.to_string(),
                    c.seconds.to_string(),
                ])?;
            }
            w.write_record([
                "arithmetic",
                "",
                "",
                "",
                "",
                &b.arithmetic_seconds.to_string(),
            ])?;
            w.write_record(["total", "", "", "", "", &b.total_seconds.to_string()])?;
        }
        ReportBody::Sweep(s) => {
            let mut header = vec![
                "rank",
                "kernel",
                "mr",
                s.variant.second_dim_name(),
                "mc",
                "nc",
                "kc",
            ];
            header.extend(ComponentId::ALL.iter().map(|c| c.name()));
            header.extend(["arithmetic", "total", "status"]);
            w.write_record(&header)?;
            for (i, e) in s.entries.iter().enumerate() {
                let mut row = vec![
                    (i + 1).to_string(),
                    e.kernel.to_string(),
                    e.kernel.first.to_string(),
                    e.kernel.second.to_string(),
                    e.tiles.mc.to_string(),
                    e.tiles.nc.to_string(),
                    e.tiles.kc.to_string(),
                ];
                row.extend(
                    ComponentId::ALL
                        .iter()
                        .map(|&c| e.breakdown.seconds(c).to_string()),
                );
                row.push(e.breakdown.arithmetic_seconds.to_string());
                row.push(e.breakdown.total_seconds.to_string());
                row.push("ok".to_owned());
                w.write_record(&row)?;
            }
            for (k, why) in &s.infeasible {
                let mut row = vec![
                    String::new(),
                    k.to_string(),
                    k.first.to_string(),
                    k.second.to_string(),
                ];
                row.resize(header.len() - 1, String::new());
                row.push(format!("infeasible: {why}"));
                w.write_record(&row)?;
            }
        }
        ReportBody::Layers(layers) => {
            let mut header = vec!["id".to_owned(), "m".into(), "n".into(), "k".into()];
            for v in Variant::ALL {
                header.push(format!("{v}_kernel"));
                header.push(format!("{v}_seconds"));
            }
            header.push("winner".into());
            w.write_record(&header)?;
            for l in layers {
                let mut row = vec![
                    l.layer.id.clone(),
                    l.layer.m.to_string(),
                    l.layer.n.to_string(),
                    l.layer.k.to_string(),
                ];
                for v in Variant::ALL {
                    match l.cell(v) {
                        Ok(c) => {
                            row.push(c.kernel.to_string());
                            row.push(c.total_seconds.to_string());
                        }
                        Err(e) => {
                            row.push(format!("error: {e}"));
                            row.push(String::new());
                        }
                    }
                }
                row.push(l.winner.map(|v| v.to_string()).unwrap_or_default());
                w.write_record(&row)?;
            }
        }
        ReportBody::Oracle(o) => {
            w.write_record([
                "component",
                "channel",
                "elements",
                "chunk",
                "analytic_match",
            ])?;
            for c in o.run.counters.iter() {
                let matched = !o.mismatches.iter().any(|(a, _)| a.component == c.component);
                w.write_record([
                    c.component.name().to_owned(),
                    c.channel.map(|ch| ch.to_string()).unwrap_or_default(),
                    c.volume.to_string(),
                    c.chunk.to_string(),
                    matched.to_string(),
                ])?;
            }
            w.write_record(["correct", "", "", "", &o.run.correct.to_string()])?;
        }
        ReportBody::Verify(v) => {
            w.write_record([
                "case",
                "variant",
                "m",
                "n",
                "k",
                "kernel",
                "mc",
                "nc",
                "kc",
                "cap_l1",
                "cap_l2",
                "seed",
                "correct",
                "counters_match",
            ])?;
            for o in &v.outcomes {
                let c = &o.case;
                w.write_record([
                    c.index.to_string(),
                    c.variant.to_string(),
                    c.shape.m.to_string(),
                    c.shape.n.to_string(),
                    c.shape.k.to_string(),
                    c.kernel.to_string(),
                    c.tiles.mc.to_string(),
                    c.tiles.nc.to_string(),
                    c.tiles.kc.to_string(),
                    c.cap_l1.to_string(),
                    c.cap_l2.to_string(),
                    c.seed.to_string(),
                    o.correct.to_string(),
                    o.mismatches.is_empty().to_string(),
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
