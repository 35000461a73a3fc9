//! Comparing restoration algorithms on the perception-distortion plane:
//! dominance, admissibility, the Pareto front, and SVG/CSV emission.
//!
//! Both scores are lower-is-better. Higher-is-better metrics must be negated
//! before ingestion.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmRecord {
    pub name: String,
    pub distortion: f64,
    pub perception: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl AlgorithmRecord {
    pub fn new(name: impl Into<String>, distortion: f64, perception: f64) -> Result<Self> {
        let name = name.into();
        if !distortion.is_finite() || !perception.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "record {name:?} has non-finite scores"
            )));
        }
        Ok(Self {
            name,
            distortion,
            perception,
            metadata: BTreeMap::new(),
        })
    }
}

/// Strictly better in both coordinates.
pub fn dominates(a: &AlgorithmRecord, b: &AlgorithmRecord) -> bool {
    a.perception < b.perception && a.distortion < b.distortion
}

/// No worse in either coordinate and strictly better in at least one.
pub fn weakly_dominates(a: &AlgorithmRecord, b: &AlgorithmRecord) -> bool {
    a.perception <= b.perception
        && a.distortion <= b.distortion
        && (a.perception < b.perception || a.distortion < b.distortion)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    #[default]
    Strict,
    Weak,
}

impl Dominance {
    pub fn holds(self, a: &AlgorithmRecord, b: &AlgorithmRecord) -> bool {
        match self {
            Dominance::Strict => dominates(a, b),
            Dominance::Weak => weakly_dominates(a, b),
        }
    }
}

fn check_records(records: &[AlgorithmRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no records".into()));
    }
    let mut seen = HashSet::new();
    for r in records {
        if !r.distortion.is_finite() || !r.perception.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "record {:?} has non-finite scores",
                r.name
            )));
        }
        if !seen.insert(r.name.as_str()) {
            return Err(Error::DuplicateName(r.name.clone()));
        }
    }
    Ok(())
}

/// Indices of records not dominated by any other record, in input order.
pub fn admissible_indices(records: &[AlgorithmRecord], mode: Dominance) -> Result<Vec<usize>> {
    check_records(records)?;
    // sweep by distortion: a record is dominated iff some record with smaller
    // distortion (strictly, for strict mode) has smaller perception
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[a]
            .distortion
            .total_cmp(&records[b].distortion)
            .then(records[a].perception.total_cmp(&records[b].perception))
    });
    let mut keep = vec![false; records.len()];
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let d = records[order[i]].distortion;
        let mut j = i;
        while j < order.len() && records[order[j]].distortion == d {
            j += 1;
        }
        let group_min = records[order[i]].perception;
        for &k in &order[i..j] {
            let p = records[k].perception;
            keep[k] = match mode {
                Dominance::Strict => !(best < p),
                Dominance::Weak => !(best <= p) && p == group_min,
            };
        }
        best = best.min(group_min);
        i = j;
    }
    Ok((0..records.len()).filter(|&k| keep[k]).collect())
}

/// Records not dominated by any other record, in input order.
pub fn admissible_set(records: &[AlgorithmRecord]) -> Result<Vec<AlgorithmRecord>> {
    admissible_set_with(records, Dominance::Strict)
}

pub fn admissible_set_with(
    records: &[AlgorithmRecord],
    mode: Dominance,
) -> Result<Vec<AlgorithmRecord>> {
    Ok(admissible_indices(records, mode)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

/// Admissible records sorted by distortion, keeping one record per
/// distortion (the lowest perception) and dropping coordinates already seen.
pub fn pareto_front(records: &[AlgorithmRecord]) -> Result<Vec<AlgorithmRecord>> {
    let mut adm = admissible_set(records)?;
    adm.sort_by(|a, b| {
        a.distortion
            .total_cmp(&b.distortion)
            .then(a.perception.total_cmp(&b.perception))
    });
    let mut front: Vec<AlgorithmRecord> = Vec::with_capacity(adm.len());
    for r in adm {
        match front.last() {
            Some(last) if last.distortion == r.distortion => {}
            Some(last) if last.perception <= r.perception => {}
            _ => front.push(r),
        }
    }
    Ok(front)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * lo.abs().max(1.0)
    };
    (lo - pad, hi + pad)
}

/// Scatter plot of the records with admissible points filled and the front
/// drawn as a polyline. Output depends only on the inputs.
pub fn scatter_svg(records: &[AlgorithmRecord], front: &[AlgorithmRecord]) -> Result<String> {
    let admissible: HashSet<usize> = admissible_indices(records, Dominance::Strict)?
        .into_iter()
        .collect();
    let (x0, x1) = axis_range(records.iter().chain(front).map(|r| r.distortion));
    let (y0, y1) = axis_range(records.iter().chain(front).map(|r| r.perception));
    let px = |d: f64| MARGIN + (d - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |p: f64| HEIGHT - MARGIN - (p - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for (v, x) in [(x0, left), (x1, right)] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{v:.4}</text>"#,
            bottom + 16.0
        );
    }
    for (v, y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{y:.2}" font-size="11" text-anchor="end">{v:.4}</text>"#,
            left - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">Distortion</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">Perceptual index</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    if front.len() >= 2 {
        let pts: Vec<String> = front
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.distortion), py(r.perception)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="front" points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
    for (i, r) in records.iter().enumerate() {
        let (cx, cy) = (px(r.distortion), py(r.perception));
        let (class, fill) = if admissible.contains(&i) {
            ("admissible", "steelblue")
        } else {
            ("dominated", "none")
        };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{fill}" stroke="steelblue"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            cx + 8.0,
            cy - 8.0,
            escape(&r.name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_scatter<W: Write>(
    records: &[AlgorithmRecord],
    front: &[AlgorithmRecord],
    mut out: W,
) -> Result<()> {
    out.write_all(scatter_svg(records, front)?.as_bytes())?;
    Ok(())
}

/// CSV with columns `name,distortion,perception,admissible`.
pub fn emit_table<W: Write>(records: &[AlgorithmRecord], out: W) -> Result<()> {
    let admissible: HashSet<usize> = admissible_indices(records, Dominance::Strict)?
        .into_iter()
        .collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "distortion", "perception", "admissible"])?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            r.name.clone(),
            r.distortion.to_string(),
            r.perception.to_string(),
            admissible.contains(&i).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records from CSV with a `name,distortion,perception` header.
/// Other columns become metadata, except `admissible`, which is derived.
pub fn ingest<R: Read>(input: R) -> Result<Vec<AlgorithmRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
    };
    let (ni, di, pi) = (col("name")?, col("distortion")?, col("perception")?);
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let num = |i: usize, what: &str| -> Result<f64> {
            let raw = row.get(i).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad {what} {raw:?}", line + 1)))
        };
        let mut rec = AlgorithmRecord::new(
            row.get(ni).unwrap_or(""),
            num(di, "distortion")?,
            num(pi, "perception")?,
        )?;
        for (i, h) in header.iter().enumerate() {
            if i != ni && i != di && i != pi && h != "admissible" {
                rec.metadata
                    .insert(h.to_string(), row.get(i).unwrap_or("").to_string());
            }
        }
        records.push(rec);
    }
    check_records(&records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str, d: f64, p: f64) -> AlgorithmRecord {
        AlgorithmRecord::new(name, d, p).unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&rec("a", 1.0, 2.0), &rec("b", 2.0, 3.0)));
        let (a, b) = (rec("a", 1.0, 3.0), rec("b", 3.0, 1.0));
        assert!(!dominates(&a, &b) && !dominates(&b, &a));
        assert!(!dominates(&a, &a));
        assert!(weakly_dominates(&rec("a", 1.0, 2.0), &rec("b", 1.0, 3.0)));
        assert!(!dominates(&rec("a", 1.0, 2.0), &rec("b", 1.0, 3.0)));
    }

    #[test]
    fn admissible_and_front() {
        let rs = vec![
            rec("p", 1.0, 3.0),
            rec("q", 2.0, 2.0),
            rec("r", 3.0, 1.0),
            rec("s", 3.0, 3.0),
        ];
        let names: Vec<_> = admissible_set(&rs)
            .unwrap()
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(names, ["p", "q", "r"]);
        let front: Vec<_> = pareto_front(&rs)
            .unwrap()
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(front, ["p", "q", "r"]);
        let dup = vec![rec("p", 1.0, 1.0), rec("p", 2.0, 2.0)];
        assert!(matches!(admissible_set(&dup), Err(Error::DuplicateName(_))));
    }

    #[test]
    fn identical_records_collapse_on_front() {
        let rs = vec![rec("a", 1.0, 1.0), rec("b", 1.0, 1.0), rec("c", 1.0, 1.0)];
        assert_eq!(admissible_set(&rs).unwrap().len(), 3);
        assert_eq!(pareto_front(&rs).unwrap().len(), 1);
    }
}
