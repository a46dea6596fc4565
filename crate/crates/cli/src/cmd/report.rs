use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::{info, warn};
use serde::Serialize;
use vdamage_core::classify::dump::{aggregate_records, read_dump};
use vdamage_core::classify::VdLabel;
use vdamage_core::stats::cohort::{read_cohort, Flag, IndividualRecord, Sex};
use vdamage_core::stats::{alignment_by_age, quartiles, stratify, AlignmentCurves, Bandwidth, Group, Quartiles, StratReport};

use crate::args::{Global, ReportArgs};
use crate::cmd::train::{evaluate, read_val_ids};
use crate::common;
use crate::error::{CliError, Result};
use crate::metrics::Metrics;
use crate::svg::{scale, Svg, PALETTE};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Serialize)]
pub struct Demographics {
    pub n: usize,
    pub dx_positive: usize,
    pub sex_counts: BTreeMap<Sex, usize>,
    pub age: Option<Quartiles>,
}

fn demographics<'a>(rows: impl Iterator<Item = &'a IndividualRecord>) -> Demographics {
    let rows: Vec<_> = rows.collect();
    let mut sex_counts = BTreeMap::new();
    for r in &rows {
        *sex_counts.entry(r.sex).or_insert(0) += 1;
    }
    let ages: Vec<f64> = rows.iter().map(|r| r.age).collect();
    Demographics {
        n: rows.len(),
        dx_positive: rows.iter().filter(|r| r.hypertension_dx).count(),
        sex_counts,
        age: quartiles(&ages).ok(),
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub cohort_size: usize,
    pub predicted_individuals: usize,
    /// Ids in the predictions but not in the cohort table.
    pub missing_from_cohort: Vec<String>,
    /// Cohort ids without any prediction; left out of the stratification.
    pub unpredicted: Vec<String>,
    pub aggregation: String,
    /// Against the diagnosis labels.
    pub metrics: Option<Metrics>,
    pub validation_metrics: Option<Metrics>,
    pub demographics: Demographics,
    pub validation_demographics: Option<Demographics>,
    pub strat: StratReport,
    pub aligned_fraction: f64,
    pub alignment: Option<AlignmentCurves>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn tsv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    common::write_tsv(path, header, rows)
}

fn write_tables(out: &Path, r: &Report) -> Result<()> {
    let groups: Vec<Vec<String>> = r
        .strat
        .groups
        .iter()
        .map(|g| {
            let sex = |s| g.sex_counts.get(&s).copied().unwrap_or(0).to_string();
            vec![g.group.name().into(), g.n.to_string(), sex(Sex::Female), sex(Sex::Male), sex(Sex::Other)]
        })
        .collect();
    tsv(&out.join("groups.tsv"), &["group", "n", "female", "male", "other"], &groups)?;

    let mut prev = Vec::new();
    let mut quart = Vec::new();
    for g in &r.strat.groups {
        for p in &g.prevalences {
            prev.push(vec![
                g.group.name().into(),
                p.flag.column().into(),
                p.count.to_string(),
                p.n.to_string(),
                opt(p.prevalence),
                p.ratio_vs_baseline.to_string(),
                opt(p.ratio_vs_baseline.value()),
            ]);
        }
        for v in &g.variables {
            let q = v.quartiles;
            quart.push(vec![
                g.group.name().into(),
                v.variable.column().into(),
                v.n.to_string(),
                opt(q.map(|q| q.q25)),
                opt(q.map(|q| q.median)),
                opt(q.map(|q| q.q75)),
            ]);
        }
    }
    tsv(
        &out.join("prevalence.tsv"),
        &["group", "flag", "count", "n", "prevalence", "ratio", "ratio_full"],
        &prev,
    )?;
    tsv(&out.join("quartiles.tsv"), &["group", "variable", "n", "q25", "median", "q75"], &quart)?;

    let mut header = vec!["event", "medicated"];
    header.extend(Group::ALL.iter().map(|g| g.name()));
    let events: Vec<Vec<String>> = r
        .strat
        .events
        .rows
        .iter()
        .map(|row| {
            let mut v = vec![row.event.column().to_string(), row.medicated.to_string()];
            v.extend(row.counts.iter().map(usize::to_string));
            v
        })
        .collect();
    tsv(&out.join("events.tsv"), &header, &events)?;
    let shares: Vec<Vec<String>> = r
        .strat
        .events
        .shares
        .iter()
        .map(|s| {
            vec![
                s.medicated.to_string(),
                s.events.to_string(),
                s.high_vd_events.to_string(),
                opt(s.high_vd_share),
            ]
        })
        .collect();
    tsv(
        &out.join("event_shares.tsv"),
        &["medicated", "events", "high_vd_events", "high_vd_share"],
        &shares,
    )?;

    let alignment: Vec<Vec<String>> = r.alignment.as_ref().map_or_else(Vec::new, |a| {
        (0..a.grid.len())
            .map(|i| {
                vec![
                    a.grid[i].to_string(),
                    a.aligned_density[i].to_string(),
                    a.non_aligned_density[i].to_string(),
                    a.proportion[i].to_string(),
                ]
            })
            .collect()
    });
    tsv(
        &out.join("alignment.tsv"),
        &["age", "aligned_density", "non_aligned_density", "proportion"],
        &alignment,
    )?;

    let mut conf = Vec::new();
    for (scope, m) in [("all", &r.metrics), ("validation", &r.validation_metrics)] {
        let Some(m) = m else { continue };
        for (level, l) in [("clip", &m.clip), ("video", &m.video), ("individual", &m.individual)] {
            let c = l.confusion;
            conf.push(vec![
                scope.into(),
                level.into(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
                opt(l.accuracy),
                opt(l.balanced_accuracy),
            ]);
        }
    }
    tsv(
        &out.join("confusion.tsv"),
        &["scope", "level", "tp", "fp", "tn", "fn", "accuracy", "balanced_accuracy"],
        &conf,
    )
}

fn confusion_svg(m: &Metrics) -> String {
    let mut s = Svg::new(720.0, 300.0);
    for (k, (name, l)) in [("clip", &m.clip), ("video", &m.video), ("individual", &m.individual)]
        .into_iter()
        .enumerate()
    {
        let x0 = 40.0 + k as f64 * 230.0;
        let c = l.confusion;
        let cells = [[c.tp, c.fn_], [c.fp, c.tn]];
        let max = cells.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
        s.text(x0 + 80.0, 30.0, 14.0, "middle", name);
        for (i, row) in cells.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let shade = 255.0 - 180.0 * v as f64 / max;
                let fill = format!("rgb({0:.0},{0:.0},255)", shade);
                let (x, y) = (x0 + j as f64 * 80.0, 50.0 + i as f64 * 80.0);
                s.rect(x, y, 78.0, 78.0, &fill);
                s.text(x + 39.0, y + 44.0, 16.0, "middle", &v.to_string());
            }
        }
        s.text(x0 + 80.0, 232.0, 11.0, "middle", "predicted high / low VD");
        let bacc = l.balanced_accuracy.map_or("undefined".to_string(), |b| format!("{b:.3}"));
        s.text(x0 + 80.0, 255.0, 12.0, "middle", &format!("bACC {bacc}"));
    }
    s.text(20.0, 95.0, 11.0, "middle", "dx+");
    s.text(20.0, 175.0, 11.0, "middle", "dx-");
    s.finish()
}

fn prevalence_svg(r: &StratReport) -> String {
    let (w, h) = (900.0, 340.0);
    let mut s = Svg::new(w, h);
    let slot = (w - 80.0) / Flag::ALL.len() as f64;
    let bar = slot / 5.0;
    s.line(60.0, 280.0, w - 10.0, 280.0, "black");
    for (fi, f) in Flag::ALL.iter().enumerate() {
        let x0 = 60.0 + fi as f64 * slot;
        for g in Group::ALL {
            let p = r.prevalence(g, *f).prevalence.unwrap_or(0.0);
            let bh = p * 240.0;
            s.rect(x0 + g.index() as f64 * bar + bar / 2.0, 280.0 - bh, bar - 1.0, bh, PALETTE[g.index()]);
        }
        s.text(x0 + slot / 2.0, 296.0, 9.0, "middle", f.column());
    }
    for g in Group::ALL {
        let x = 70.0 + g.index() as f64 * 150.0;
        s.rect(x, 318.0, 10.0, 10.0, PALETTE[g.index()]);
        s.text(x + 14.0, 327.0, 11.0, "start", g.name());
    }
    s.text(30.0, 40.0, 11.0, "middle", "1.0");
    s.text(30.0, 283.0, 11.0, "middle", "0");
    s.finish()
}

fn alignment_svg(a: &AlignmentCurves) -> String {
    let (w, h) = (640.0, 360.0);
    let mut s = Svg::new(w, h);
    let (lo, hi) = (a.grid[0], a.grid[a.grid.len() - 1]);
    let dmax = a
        .aligned_density
        .iter()
        .chain(&a.non_aligned_density)
        .copied()
        .fold(0.0, f64::max);
    let x = |v: f64| scale(v, lo, hi, 60.0, w - 20.0);
    let curve = |ys: &[f64], top: f64| -> Vec<(f64, f64)> {
        a.grid.iter().zip(ys).map(|(&g, &y)| (x(g), scale(y, 0.0, top, 300.0, 30.0))).collect()
    };
    s.line(60.0, 300.0, w - 20.0, 300.0, "black");
    s.polyline(&curve(&a.aligned_density, dmax), PALETTE[3]);
    s.polyline(&curve(&a.non_aligned_density, dmax), PALETTE[0]);
    s.polyline(&curve(&a.proportion, 1.0), "black");
    s.text(x(lo), 318.0, 11.0, "start", &format!("{lo:.0}"));
    s.text(x(hi), 318.0, 11.0, "end", &format!("{hi:.0}"));
    s.text(w / 2.0, 340.0, 12.0, "middle", "age");
    s.text(80.0, 20.0, 11.0, "start", "aligned (blue), non-aligned (red), aligned proportion (black)");
    s.finish()
}

fn events_svg(r: &StratReport) -> String {
    let (w, h) = (760.0, 320.0);
    let mut s = Svg::new(w, h);
    let rows = &r.events.rows;
    let max = rows.iter().map(|r| r.total()).max().unwrap_or(0).max(1) as f64;
    let slot = (w - 80.0) / rows.len() as f64;
    s.line(60.0, 260.0, w - 10.0, 260.0, "black");
    for (i, row) in rows.iter().enumerate() {
        let x0 = 60.0 + i as f64 * slot + slot * 0.15;
        let mut y = 260.0;
        for g in Group::ALL {
            let bh = row.counts[g.index()] as f64 / max * 220.0;
            y -= bh;
            s.rect(x0, y, slot * 0.7, bh, PALETTE[g.index()]);
        }
        let med = if row.medicated { "med" } else { "no med" };
        s.text(x0 + slot * 0.35, 274.0, 9.0, "middle", row.event.column());
        s.text(x0 + slot * 0.35, 286.0, 9.0, "middle", med);
    }
    for g in Group::ALL {
        let x = 70.0 + g.index() as f64 * 150.0;
        s.rect(x, 298.0, 10.0, 10.0, PALETTE[g.index()]);
        s.text(x + 14.0, 307.0, 11.0, "start", g.name());
    }
    s.finish()
}

pub fn run(g: &Global, a: &ReportArgs) -> Result<Report> {
    let settings = common::settings(g)?;
    let out = common::out_dir(g)?;
    let records = read_dump(&a.predictions)?;
    let cohort = read_cohort(&a.cohort)?;
    let (_, individuals) = if records.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        aggregate_records(&records, settings.aggregation)?
    };

    let cohort_ids: BTreeSet<&str> = cohort.iter().map(|r| r.individual_id.as_str()).collect();
    let vd: BTreeMap<String, VdLabel> = individuals.iter().map(|i| (i.individual_id.clone(), i.label)).collect();
    let missing_from_cohort: Vec<String> = vd.keys().filter(|id| !cohort_ids.contains(id.as_str())).cloned().collect();
    let predicted: Vec<IndividualRecord> = cohort.iter().filter(|r| vd.contains_key(&r.individual_id)).cloned().collect();
    let unpredicted: Vec<String> = cohort
        .iter()
        .filter(|r| !vd.contains_key(&r.individual_id))
        .map(|r| r.individual_id.clone())
        .collect();

    let strat = stratify(&predicted, &vd)?;
    let truth = crate::pipeline::dx_labels(&cohort);
    let metrics = if records.is_empty() {
        None
    } else {
        Some(evaluate(&records, &truth, settings.aggregation)?)
    };
    let val_ids = a.split.as_deref().map(read_val_ids).transpose()?;
    let validation_metrics = match &val_ids {
        Some(ids) => {
            let val: Vec<_> = records.iter().filter(|r| ids.contains(&r.individual_id)).cloned().collect();
            if val.is_empty() {
                None
            } else {
                Some(evaluate(&val, &truth, settings.aggregation)?)
            }
        }
        None => None,
    };
    let groups: Vec<Group> = predicted
        .iter()
        .map(|r| Group::of(r.hypertension_dx, vd[&r.individual_id]))
        .collect();
    let aligned: Vec<bool> = groups.iter().map(|g| g.aligned()).collect();
    let ages: Vec<f64> = predicted.iter().map(|r| r.age).collect();
    let bandwidth = settings.kde_bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed);
    let alignment = if ages.is_empty() {
        None
    } else {
        Some(alignment_by_age(&ages, &aligned, bandwidth)?)
    };
    let report = Report {
        cohort_size: cohort.len(),
        predicted_individuals: vd.len(),
        unpredicted,
        aggregation: settings.aggregation.as_str().into(),
        metrics,
        validation_metrics,
        demographics: demographics(cohort.iter()),
        validation_demographics: val_ids
            .as_ref()
            .map(|ids| demographics(cohort.iter().filter(|r| ids.contains(&r.individual_id)))),
        aligned_fraction: if aligned.is_empty() {
            0.0
        } else {
            aligned.iter().filter(|&&x| x).count() as f64 / aligned.len() as f64
        },
        strat,
        alignment,
        missing_from_cohort,
    };

    common::write_json(&out.join(REPORT_FILE), &report)?;
    write_tables(&out, &report)?;
    if let Some(m) = &report.metrics {
        std::fs::write(out.join("confusion.svg"), confusion_svg(m))?;
    }
    std::fs::write(out.join("prevalence.svg"), prevalence_svg(&report.strat))?;
    std::fs::write(out.join("events.svg"), events_svg(&report.strat))?;
    if let Some(al) = &report.alignment {
        std::fs::write(out.join("alignment.svg"), alignment_svg(al))?;
    }
    if !report.missing_from_cohort.is_empty() {
        warn!("{} predicted individuals missing from the cohort table", report.missing_from_cohort.len());
        return Err(CliError::Data(format!(
            "id mismatch: {} predicted individuals not in the cohort table: {}",
            report.missing_from_cohort.len(),
            report.missing_from_cohort.join(", ")
        )));
    }
    info!("report: {} individuals stratified", report.predicted_individuals);
    Ok(report)
}
