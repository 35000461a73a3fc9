use std::io::Write;

use serde::Serialize;

use super::TradeoffPoint;
use crate::divergence::DivergenceKind;
use crate::error::Result;

/// Lower convex hull of `(distortion, perception)` points, left to right,
/// cut after the first vertex with the smallest perception. Beyond the last
/// vertex the envelope is flat; left of the first it is +∞.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    if let Some(best) = hull
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
    {
        hull.truncate(best + 1);
    }
    hull
}

/// Envelope value at `d`: +∞ left of the hull, flat right of it.
pub(crate) fn envelope_at(hull: &[(f64, f64)], d: f64) -> f64 {
    let Some(first) = hull.first() else {
        return f64::NAN;
    };
    if d < first.0 {
        return f64::INFINITY;
    }
    if d == first.0 {
        return first.1;
    }
    let i = hull.partition_point(|p| p.0 < d);
    if i == hull.len() {
        return hull[hull.len() - 1].1;
    }
    let (a, b) = (hull[i - 1], hull[i]);
    let t = (d - a.0) / (b.0 - a.0);
    a.1 + t * (b.1 - a.1)
}

/// Solved Lagrangian points sorted by distortion, together with the lower
/// convex envelope that reports P(D).
#[derive(Debug, Clone)]
pub struct TradeoffCurve {
    kind: DivergenceKind,
    distortion_id: String,
    points: Vec<TradeoffPoint>,
    hull: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub lambda: f64,
    pub distortion: f64,
    /// Envelope value at this distortion.
    pub perception: f64,
    pub raw_perception: f64,
    pub gap: f64,
    pub flagged: bool,
}

impl TradeoffCurve {
    pub fn new(kind: DivergenceKind, distortion_id: &str, mut points: Vec<TradeoffPoint>) -> Self {
        points.sort_by(|a, b| {
            a.distortion
                .total_cmp(&b.distortion)
                .then(b.perception.total_cmp(&a.perception))
                .then(a.lambda.total_cmp(&b.lambda))
        });
        let raw: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.distortion, p.perception))
            .collect();
        let hull = lower_convex_envelope(&raw);
        Self {
            kind,
            distortion_id: distortion_id.to_string(),
            points,
            hull,
        }
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn distortion_id(&self) -> &str {
        &self.distortion_id
    }

    /// Raw solved points, sorted by distortion.
    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    /// Vertices of the envelope.
    pub fn envelope(&self) -> &[(f64, f64)] {
        &self.hull
    }

    pub fn perception_at(&self, d: f64) -> f64 {
        envelope_at(&self.hull, d)
    }

    pub fn rows(&self) -> Vec<CurveRow> {
        self.points
            .iter()
            .map(|p| CurveRow {
                lambda: p.lambda,
                distortion: p.distortion,
                perception: self.perception_at(p.distortion),
                raw_perception: p.perception,
                gap: p.duality_gap,
                flagged: !p.converged,
            })
            .collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| !p.converged).count()
    }

    /// Envelope perception is non-increasing in distortion, up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        is_monotone(&self.reported(), tol)
    }

    /// Chord test on consecutive reported points, up to `tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        is_convex(&self.reported(), tol)
    }

    fn reported(&self) -> Vec<(f64, f64)> {
        self.rows()
            .iter()
            .map(|r| (r.distortion, r.perception))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W, with_flag: bool) -> Result<()> {
        let rows: Vec<_> = self
            .rows()
            .iter()
            .map(|r| (r.lambda, r.distortion, r.perception, r.gap, r.flagged))
            .collect();
        curve_csv(out, &rows, with_flag)
    }
}

/// `(distortion, perception)` pairs sorted by distortion.
pub fn is_monotone(points: &[(f64, f64)], tol: f64) -> bool {
    points.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
}

/// Midpoint chord test on every consecutive triple with distinct distortions.
pub fn is_convex(points: &[(f64, f64)], tol: f64) -> bool {
    points.windows(3).all(|w| {
        let (a, b, c) = (w[0], w[1], w[2]);
        if !(a.0 < b.0 && b.0 < c.0) {
            return true;
        }
        let t = (b.0 - a.0) / (c.0 - a.0);
        b.1 <= (1.0 - t) * a.1 + t * c.1 + tol
    })
}

fn fmt(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Writes `lambda,distortion,perception,gap` rows, plus a `flagged` column
/// when requested.
pub fn curve_csv<W: Write>(
    out: W,
    rows: &[(f64, f64, f64, f64, bool)],
    with_flag: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda", "distortion", "perception", "gap"];
    if with_flag {
        header.push("flagged");
    }
    w.write_record(&header)?;
    for &(lambda, d, p, gap, flagged) in rows {
        let mut rec = vec![fmt(lambda), fmt(d), fmt(p), fmt(gap)];
        if with_flag {
            rec.push(if flagged { "1".into() } else { "0".into() });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_drops_interior_and_trailing_points() {
        let pts = [
            (0.0, 4.0),
            (1.0, 3.5),
            (2.0, 1.0),
            (3.0, 0.0),
            (4.0, 0.5),
            (1.5, 3.0),
        ];
        let hull = lower_convex_envelope(&pts);
        assert_eq!(hull, vec![(0.0, 4.0), (2.0, 1.0), (3.0, 0.0)]);
        assert_eq!(envelope_at(&hull, 1.0), 2.5);
        assert_eq!(envelope_at(&hull, 5.0), 0.0);
        assert_eq!(envelope_at(&hull, -1.0), f64::INFINITY);
        assert_eq!(envelope_at(&hull, 0.0), 4.0);
    }

    #[test]
    fn chord_and_monotone_tests() {
        let good = [(0.0, 2.0), (1.0, 0.5), (2.0, 0.0), (3.0, 0.0)];
        assert!(is_monotone(&good, 0.0) && is_convex(&good, 0.0));
        let bump = [(0.0, 2.0), (1.0, 1.5), (2.0, 0.0)];
        assert!(is_monotone(&bump, 0.0) && !is_convex(&bump, 1e-8));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        curve_csv(&mut buf, &[(f64::INFINITY, 0.5, 0.0, 0.0, true)], true).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "lambda,distortion,perception,gap,flagged\ninf,5.0000000000000000e-1,0.0000000000000000e0,0.0000000000000000e0,1\n"
        );
    }
}
