//! CSV and JSON writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` and keeps files byte-stable for a given platform.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::flow::{relative_drift, TrajectoryRecord, TrajectoryRow};
use crate::l1::{conserved_closed_form, sobolev_norm_sq, L1Sample};

use super::LabError;

/// Tail magnitude above which a run is flagged as truncation-limited.
pub const TRUNCATION_THRESHOLD: f64 = 1e-10;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_f64)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn trajectory_header(rank: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "Q", "M", "E", "absJ", "H12", "H1", "bmo_proxy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=rank).map(|k| format!("sigma{k}")));
    h
}

fn trajectory_values(r: &TrajectoryRow, rank: usize) -> Vec<f64> {
    let mut v = vec![r.t, r.q, r.m, r.e, r.abs_j, r.h12, r.h1, r.bmo_proxy];
    v.extend((0..rank).map(|k| r.sigma.get(k).copied().unwrap_or(0.0)));
    v
}

/// `t,Q,M,E,absJ,H12,H1,bmo_proxy,sigma1..sigmaR`.
pub fn write_trajectory_csv(path: &Path, record: &TrajectoryRecord, rank: usize) -> Result<(), LabError> {
    write_rows(path, &trajectory_header(rank), record.rows.iter().map(|r| trajectory_values(r, rank)))
}

pub const L1_HEADER: [&str; 16] = [
    "t", "b_re", "b_im", "c_re", "c_im", "p_re", "p_im", "abs_c", "abs_p", "Q", "M", "E", "absJ", "H1_sq",
    "resonance_residual", "tail",
];

/// One row per reduced-system sample; `tail` is the mass beyond mode
/// `cutoff`.
pub fn write_l1_csv(path: &Path, samples: &[L1Sample], cutoff: usize) -> Result<(), LabError> {
    let header: Vec<String> = L1_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(
        path,
        &header,
        samples.iter().map(|x| {
            let s = &x.state;
            let c = conserved_closed_form(s);
            vec![
                x.t,
                s.b.re,
                s.b.im,
                s.c.re,
                s.c.im,
                s.p.re,
                s.p.im,
                s.c.norm(),
                s.p.norm(),
                c.q,
                c.m,
                c.e,
                c.j.norm(),
                sobolev_norm_sq(s, 1.0).unwrap_or(f64::NAN),
                crate::l1::resonance_residual(s),
                s.truncation_tail(cutoff),
            ]
        }),
    )
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), LabError> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_rows(path, &header, rows.iter().cloned())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), LabError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// `(t, column)` pairs from a CSV with a `t` column.
pub fn read_csv_series(path: &Path, column: &str) -> Result<Vec<(f64, f64)>, LabError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = r.headers().map_err(LabError::config)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::Config(format!("{} has no `{name}` column", path.display())))
    };
    let (ti, yi) = (find("t")?, find(column)?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(LabError::config)?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| LabError::Config(format!("unparsable value in {}", path.display())))
        };
        out.push((parse(ti)?, parse(yi)?));
    }
    Ok(out)
}

/// Relative drift of every monitored column of a PDE record.
pub fn drift_table(record: &TrajectoryRecord, rank: usize) -> Value {
    let mut m = Map::new();
    type Getter = fn(&TrajectoryRow) -> f64;
    let cols: [(&str, Getter); 5] = [
        ("Q", |r| r.q),
        ("M", |r| r.m),
        ("E", |r| r.e),
        ("absJ", |r| r.abs_j),
        ("trace_norm_K", |r| r.trace_norm_k),
    ];
    for (name, f) in cols {
        m.insert(name.into(), json!(relative_drift(record, f)));
    }
    for k in 0..rank {
        m.insert(format!("sigma{}", k + 1), json!(sigma_drift(record, k)));
    }
    Value::Object(m)
}

/// Largest deviation of `σ_{k+1}` from its initial value, in units of
/// `σ₁(0)` so that vanishing singular values do not blow up the ratio.
pub fn sigma_drift(record: &TrajectoryRecord, k: usize) -> f64 {
    let Some(first) = record.rows.first() else { return 0.0 };
    let get = |r: &TrajectoryRow| r.sigma.get(k).copied().unwrap_or(0.0);
    let base = get(first);
    let scale = first.sigma.first().copied().unwrap_or(0.0).max(base.abs());
    let scale = if scale > 0.0 { scale } else { 1.0 };
    record.rows.iter().map(|r| (get(r) - base).abs() / scale).fold(0.0, f64::max)
}

/// Relative drift of the closed-form conserved quantities along reduced
/// samples.
pub fn l1_drift_table(samples: &[L1Sample]) -> Value {
    let series: Vec<_> = samples.iter().map(|x| conserved_closed_form(&x.state)).collect();
    let drift = |f: &dyn Fn(&crate::spectrum::ConservedSet) -> f64| {
        let Some(first) = series.first() else { return 0.0 };
        let base = f(first);
        let denom = if base != 0.0 { base.abs() } else { 1.0 };
        series.iter().map(|c| (f(c) - base).abs() / denom).fold(0.0, f64::max)
    };
    json!({
        "Q": drift(&|c| c.q),
        "M": drift(&|c| c.m),
        "E": drift(&|c| c.e),
        "absJ": drift(&|c| c.j.norm()),
    })
}

pub fn truncation_status(max_tail: f64) -> Value {
    json!({
        "max_tail": max_tail,
        "threshold": TRUNCATION_THRESHOLD,
        "flag": max_tail > TRUNCATION_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::monitor;
    use crate::spectrum::SpectrumPlus;

    #[test]
    fn header_and_formatting() {
        assert_eq!(trajectory_header(2).join(","), "t,Q,M,E,absJ,H12,H1,bmo_proxy,sigma1,sigma2");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let u = SpectrumPlus::monomial(1, 8).unwrap();
        let record = TrajectoryRecord {
            rows: (0..3).map(|i| monitor(i as f64 * 0.5, &u, 2).unwrap()).collect(),
            snapshots: vec![],
        };
        let path = dir.path().join("a.csv");
        write_trajectory_csv(&path, &record, 2).unwrap();
        let back = read_csv_series(&path, "M").unwrap();
        assert_eq!(back, vec![(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
        assert!(read_csv_series(&path, "nope").is_err());
        let drift = drift_table(&record, 2);
        assert_eq!(drift["Q"], json!(0.0));
        assert_eq!(truncation_status(0.0)["flag"], json!(false));
    }
}
