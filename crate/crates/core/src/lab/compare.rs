//! Column-by-column comparison of two monitored trajectories.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{TrajectoryRecord, TrajectoryRow};

#[derive(Clone, Debug, PartialEq)]
pub struct CompareSettings {
    pub tolerances: BTreeMap<String, f64>,
    pub default_tolerance: f64,
    /// Linearly interpolate `b` onto `a`'s times when the grids differ.
    pub interpolate: bool,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self { tolerances: BTreeMap::new(), default_tolerance: 1e-6, interpolate: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnDeviation {
    pub name: String,
    pub max: f64,
    pub rms: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub columns: Vec<ColumnDeviation>,
    pub points: usize,
    pub pass: bool,
}

impl CompareReport {
    pub fn column(&self, name: &str) -> Option<&ColumnDeviation> {
        self.columns.iter().find(|c| c.name == name)
    }
}

type Column = (String, Box<dyn Fn(&TrajectoryRow) -> f64>);

fn columns(rank: usize) -> Vec<Column> {
    let mut out: Vec<Column> = vec![
        ("Q".into(), Box::new(|r| r.q)),
        ("M".into(), Box::new(|r| r.m)),
        ("E".into(), Box::new(|r| r.e)),
        ("absJ".into(), Box::new(|r| r.abs_j)),
        ("H12".into(), Box::new(|r| r.h12)),
        ("H1".into(), Box::new(|r| r.h1)),
        ("bmo_proxy".into(), Box::new(|r| r.bmo_proxy)),
        ("trace_norm_K".into(), Box::new(|r| r.trace_norm_k)),
    ];
    for k in 0..rank {
        out.push((format!("sigma{}", k + 1), Box::new(move |r| r.sigma[k])));
    }
    out
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Pairs each row of `a` with the matching (or interpolated) values of `b`
/// for one column.
fn paired(
    a: &TrajectoryRecord,
    b: &TrajectoryRecord,
    f: &dyn Fn(&TrajectoryRow) -> f64,
    exact: bool,
) -> Vec<(f64, f64)> {
    if exact {
        return a.rows.iter().zip(&b.rows).map(|(x, y)| (f(x), f(y))).collect();
    }
    let mut out = Vec::new();
    for x in &a.rows {
        let idx = b.rows.partition_point(|y| y.t < x.t);
        let v = if idx < b.rows.len() && same_time(b.rows[idx].t, x.t) {
            f(&b.rows[idx])
        } else if idx == 0 || idx == b.rows.len() {
            continue;
        } else {
            let (l, r) = (&b.rows[idx - 1], &b.rows[idx]);
            let w = (x.t - l.t) / (r.t - l.t);
            (1.0 - w) * f(l) + w * f(r)
        };
        out.push((f(x), v));
    }
    out
}

/// Per-column max and RMS of `a − b` over the shared time grid.
///
/// Grids match when they have the same length and equal times up to
/// `10⁻⁹` relative. Otherwise `b` is interpolated onto the part of `a`'s
/// grid inside `b`'s range if `settings.interpolate`, and the call fails
/// if not. Only the `sigma` columns present in both records are compared.
pub fn compare_trajectories(
    a: &TrajectoryRecord,
    b: &TrajectoryRecord,
    settings: &CompareSettings,
) -> Result<CompareReport> {
    if a.rows.is_empty() || b.rows.is_empty() {
        return Err(Error::invalid("cannot compare an empty trajectory"));
    }
    let exact = a.rows.len() == b.rows.len() && a.rows.iter().zip(&b.rows).all(|(x, y)| same_time(x.t, y.t));
    if !exact {
        if !settings.interpolate {
            return Err(Error::invalid("time grids differ and interpolation is disabled"));
        }
        if b.rows.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("interpolation needs strictly increasing times in b"));
        }
    }
    let rank = a.rows[0].sigma.len().min(b.rows[0].sigma.len());
    let mut report = CompareReport { columns: Vec::new(), points: 0, pass: true };
    for (name, f) in columns(rank) {
        let pairs = paired(a, b, f.as_ref(), exact);
        if pairs.is_empty() {
            return Err(Error::invalid("time grids do not overlap"));
        }
        report.points = pairs.len();
        let devs: Vec<f64> = pairs.iter().map(|(x, y)| (x - y).abs()).collect();
        let max = devs.iter().copied().fold(0.0, f64::max);
        let rms = (devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64).sqrt();
        let tolerance = settings.tolerances.get(&name).copied().unwrap_or(settings.default_tolerance);
        let pass = max <= tolerance;
        report.pass &= pass;
        report.columns.push(ColumnDeviation { name, max, rms, tolerance, pass });
    }
    Ok(report)
}
