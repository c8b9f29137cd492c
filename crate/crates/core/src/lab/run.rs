use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::fit::{fit_exponential, FitResult};
use crate::flow::{evolve_run, lax_residual, monitor, tilde_e_demo, FlowConfig, TrajectoryRecord, BLOWUP_THRESHOLD};
use crate::hankel::{b_u_matrix, hankel_matrix, k_matrix, max_abs, sigma_spectrum};
use crate::l1::{
    envelope_data, evolve_ode, kappa, late_window, resonance_identity_residual, resonance_residual, sobolev_norm_sq,
    to_spectrum, L1Trajectory, RationalState,
};
use crate::spectrum::{conserved, C64};

use super::compare::{compare_trajectories, CompareSettings};
use super::config::{CompareMode, CompareOptions, ExperimentKind, GrowthOptions, RunSpec};
use super::output::{
    drift_table, l1_drift_table, read_csv_series, truncation_status, write_json, write_l1_csv, write_table,
    write_trajectory_csv, TRUNCATION_THRESHOLD,
};
use super::{LabError, EXIT_NUMERICAL, EXIT_OK};

/// What a finished (or aborted) run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub kind: ExperimentKind,
    pub summary: Value,
    pub files: Vec<PathBuf>,
    /// Numerical abort message; the files hold the partial results.
    pub failure: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            EXIT_NUMERICAL
        } else {
            EXIT_OK
        }
    }
}

/// Kind-specific part of a summary.
struct Report {
    entries: Map<String, Value>,
    failure: Option<String>,
    files: Vec<PathBuf>,
}

impl Report {
    fn new() -> Self {
        Self { entries: Map::new(), failure: None, files: Vec::new() }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), value);
    }

    fn fail(&mut self, e: impl ToString) {
        if self.failure.is_none() {
            self.failure = Some(e.to_string());
        }
    }
}

fn classify(e: Error) -> LabError {
    match e {
        Error::InvalidArgument(_) | Error::CutoffMismatch { .. } | Error::DimensionMismatch { .. } => {
            LabError::Config(e.to_string())
        }
        _ => LabError::Numerical(e.to_string()),
    }
}

fn cj(z: C64) -> Value {
    json!([z.re, z.im])
}

fn state_json(s: &RationalState) -> Value {
    json!({ "b": cj(s.b), "c": cj(s.c), "p": cj(s.p) })
}

fn fit_json(r: &std::result::Result<FitResult, Error>) -> Value {
    match r {
        Ok(f) => serde_json::to_value(f).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Runs experiment `kind` from `spec`, writing into `out_dir`.
///
/// Config problems (including an unwritable `out_dir`) are `Err`; numerical
/// aborts return `Ok` with [`RunOutcome::failure`] set after the partial CSV
/// and the summary have been written.
pub fn run(kind: ExperimentKind, spec: &RunSpec, out_dir: &Path) -> Result<RunOutcome, LabError> {
    spec.validate(kind)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| LabError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv = out_dir.join(&spec.output.csv);
    let mut report = match kind {
        ExperimentKind::EvolvePde => evolve_pde(spec, &csv)?,
        ExperimentKind::EvolveL1 | ExperimentKind::BlowupHunt => evolve_l1(spec, &csv, kind)?,
        ExperimentKind::Compare => match spec.compare.clone().unwrap_or_default() {
            opts if opts.mode == CompareMode::PdeVsL1 => compare_pde_l1(spec, &opts, &csv)?,
            opts => compare_refinement(spec, &opts, &csv)?,
        },
        ExperimentKind::LaxAudit => lax_audit(spec, &csv)?,
        ExperimentKind::XyDemo => xy_demo(spec, &csv)?,
        ExperimentKind::Fit => fit(spec)?,
    };

    let mut summary = Map::new();
    summary.insert("kind".into(), json!(kind.name()));
    summary.insert("status".into(), json!(if report.failure.is_some() { "aborted" } else { "ok" }));
    summary.insert("failure".into(), json!(report.failure));
    for key in ["drift", "truncation"] {
        report.entries.entry(key.to_string()).or_insert(Value::Null);
    }
    summary.append(&mut report.entries);
    let summary = Value::Object(summary);
    let summary_path = out_dir.join(&spec.output.summary);
    write_json(&summary_path, &summary)?;
    report.files.push(summary_path);
    Ok(RunOutcome { kind, summary, files: report.files, failure: report.failure })
}

fn flow_of(spec: &RunSpec) -> &FlowConfig {
    spec.flow.as_ref().expect("validated flow section")
}

fn initial_state(spec: &RunSpec) -> Result<RationalState, LabError> {
    let init = spec.initial.as_ref().expect("validated initial section");
    init.rational_state()?
        .ok_or_else(|| LabError::Config("rational or blowup initial data required".into()))
}

fn evolve_pde(spec: &RunSpec, csv: &Path) -> Result<Report, LabError> {
    let flow = flow_of(spec);
    let u0 = spec.initial.as_ref().expect("validated initial section").spectrum(flow.cutoff)?;
    let run = evolve_run(&u0, flow, false).map_err(classify)?;
    let mut rep = Report::new();
    write_trajectory_csv(csv, &run.record, flow.spectrum_rank)?;
    rep.files.push(csv.to_path_buf());
    let max_tail = run.record.rows.iter().map(|r| r.tail).fold(0.0, f64::max);
    rep.set("drift", drift_table(&run.record, flow.spectrum_rank));
    rep.set("truncation", truncation_status(max_tail));
    rep.set("final_time", json!(run.final_time));
    rep.set("rows", json!(run.record.rows.len()));
    if let Some(first) = run.record.rows.first() {
        rep.set("initial", json!({ "Q": first.q, "M": first.m, "E": first.e, "absJ": first.abs_j }));
    }
    if let Some(e) = run.failure {
        rep.fail(e);
    }
    Ok(rep)
}

fn growth_fits(traj: &L1Trajectory, growth: &GrowthOptions, kappa: Option<f64>) -> Value {
    let window = match late_window(traj) {
        Ok(w) => w,
        Err(e) => return json!({ "regime": "bounded", "reason": e.to_string() }),
    };
    let c_series: Vec<(f64, f64)> = window.iter().map(|x| (x.t, x.state.c.norm())).collect();
    let mut sobolev = Vec::new();
    for &s in &growth.orders {
        let series: std::result::Result<Vec<(f64, f64)>, Error> =
            window.iter().map(|x| sobolev_norm_sq(&x.state, s).map(|v| (x.t, v))).collect();
        let fit = series.and_then(|v| fit_exponential(&v, None));
        sobolev.push(json!({
            "order": s,
            "norm_sq_fit": fit_json(&fit),
            "predicted_rate": kappa.map(|k| (2.0 * s - 1.0) * k),
        }));
    }
    json!({
        "regime": "exponential",
        "window": [window[0].t, window[window.len() - 1].t],
        "abs_c": fit_json(&fit_exponential(&c_series, None)),
        "predicted_abs_c_rate": kappa.map(|k| -k),
        "sobolev": sobolev,
    })
}

fn evolve_l1(spec: &RunSpec, csv: &Path, kind: ExperimentKind) -> Result<Report, LabError> {
    let flow = flow_of(spec);
    let s0 = initial_state(spec)?;
    let traj = evolve_ode(&s0, flow).map_err(classify)?;
    let mut rep = Report::new();
    write_l1_csv(csv, &traj.samples, flow.cutoff)?;
    rep.files.push(csv.to_path_buf());

    let k0 = crate::l1::conserved_closed_form(&s0);
    let kappa = kappa(k0.q, k0.m).ok();
    let max_tail = traj.samples.iter().map(|x| x.state.truncation_tail(flow.cutoff)).fold(0.0, f64::max);
    let min_c = traj.samples.iter().map(|x| x.state.c.norm()).fold(f64::INFINITY, f64::min);
    let max_p = traj.samples.iter().map(|x| x.state.p.norm()).fold(0.0, f64::max);
    let max_h1 = traj
        .samples
        .iter()
        .filter_map(|x| sobolev_norm_sq(&x.state, 1.0).ok())
        .fold(0.0, f64::max);

    rep.set("drift", l1_drift_table(&traj.samples));
    rep.set("truncation", truncation_status(max_tail));
    if kind == ExperimentKind::BlowupHunt {
        rep.set("found_initial", state_json(&s0));
    } else {
        rep.set("initial", state_json(&s0));
    }
    rep.set("conserved", json!({ "Q": k0.q, "M": k0.m, "E": k0.e, "absJ": k0.j.norm() }));
    rep.set("resonance_residual", json!(resonance_residual(&s0)));
    rep.set("resonance_identity_residual", json!(resonance_identity_residual(&s0)));
    rep.set("envelope", envelope_data(k0.q, k0.m).map(|d| json!(d)).unwrap_or(Value::Null));
    rep.set("min_abs_c", json!(min_c));
    rep.set("max_abs_p", json!(max_p));
    rep.set("max_H1_sq", json!(max_h1));
    rep.set("final_time", json!(traj.last().map(|x| x.t)));
    rep.set("fits", growth_fits(&traj, &spec.growth.clone().unwrap_or_default(), kappa));
    if let Some(e) = traj.failure {
        rep.fail(e);
    }
    Ok(rep)
}

fn compare_settings(opts: &CompareOptions) -> CompareSettings {
    CompareSettings { tolerances: opts.column_tolerances.clone(), ..Default::default() }
}

fn compare_pde_l1(spec: &RunSpec, opts: &CompareOptions, csv: &Path) -> Result<Report, LabError> {
    let flow = flow_of(spec);
    let n = flow.cutoff;
    let s0 = initial_state(spec)?;
    let u0 = to_spectrum(&s0, n).map_err(classify)?;
    let pde = evolve_run(&u0, flow, true).map_err(classify)?;
    let ode = evolve_ode(&s0, flow).map_err(classify)?;
    let mut rep = Report::new();

    let mut rows = Vec::new();
    let mut within = TrajectoryRecord::default();
    let mut reduced = TrajectoryRecord::default();
    let (mut max_dev, mut max_dev_all, mut compared_until) = (0.0f64, 0.0f64, None);
    let mut flagged_at = None;
    for (k, (snap, sample)) in pde.record.snapshots.iter().zip(&ode.samples).enumerate() {
        let t = pde.record.rows[k].t;
        if (t - sample.t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(LabError::Numerical(format!("sample grids diverged at t = {t}")));
        }
        let exact = to_spectrum(&sample.state, n).map_err(classify)?;
        let dev = snap.l2_distance(&exact).map_err(classify)?;
        let abs_p = sample.state.p.norm();
        let tail = sample.state.truncation_tail(n);
        if flagged_at.is_none() && tail > TRUNCATION_THRESHOLD {
            flagged_at = Some(t);
        }
        rows.push(vec![t, dev, abs_p, tail]);
        max_dev_all = max_dev_all.max(dev);
        if abs_p <= opts.p_limit {
            max_dev = max_dev.max(dev);
            compared_until = Some(t);
            within.rows.push(pde.record.rows[k].clone());
            match monitor(t, &exact, flow.spectrum_rank) {
                Ok(row) => reduced.rows.push(row),
                Err(e) => rep.fail(e),
            }
        }
    }
    write_table(csv, &["t", "l2_deviation", "abs_p", "tail"], &rows)?;
    rep.files.push(csv.to_path_buf());

    let columns = if within.rows.len() == reduced.rows.len() && !within.rows.is_empty() {
        compare_trajectories(&within, &reduced, &compare_settings(opts)).map_err(classify)?
    } else {
        return Err(LabError::Numerical("no samples inside the |p| limit".into()));
    };
    let l2_pass = max_dev < opts.l2_tolerance;
    let max_tail = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    rep.set("drift", drift_table(&pde.record, flow.spectrum_rank));
    rep.set("truncation", truncation_status(max_tail));
    rep.set("truncation_flag_time", json!(flagged_at));
    rep.set("p_limit", json!(opts.p_limit));
    rep.set("compared_until", json!(compared_until));
    rep.set("max_l2_deviation", json!(max_dev));
    rep.set("max_l2_deviation_all", json!(max_dev_all));
    rep.set("l2_tolerance", json!(opts.l2_tolerance));
    rep.set("columns", json!(columns));
    rep.set("pass", json!(l2_pass && columns.pass));
    for f in [pde.failure.map(|e| e.to_string()), ode.failure.map(|e| e.to_string())].into_iter().flatten() {
        rep.fail(f);
    }
    Ok(rep)
}

fn compare_refinement(spec: &RunSpec, opts: &CompareOptions, csv: &Path) -> Result<Report, LabError> {
    let flow = flow_of(spec);
    let u0 = spec.initial.as_ref().expect("validated initial section").spectrum(flow.cutoff)?;
    let mut runs = Vec::new();
    for level in 0..3u32 {
        let f = 2usize.pow(level);
        let cfg = FlowConfig { dt: flow.dt / f as f64, monitor_stride: flow.monitor_stride * f, ..flow.clone() };
        runs.push(evolve_run(&u0, &cfg, false).map_err(classify)?);
    }
    let mut rep = Report::new();
    for r in &runs {
        if let Some(e) = &r.failure {
            rep.fail(e);
        }
    }
    let settings = CompareSettings { interpolate: true, ..compare_settings(opts) };
    let coarse = compare_trajectories(&runs[0].record, &runs[1].record, &settings).map_err(classify)?;
    let fine = compare_trajectories(&runs[1].record, &runs[2].record, &settings).map_err(classify)?;
    let d0 = runs[0].final_state.l2_distance(&runs[1].final_state).map_err(classify)?;
    let d1 = runs[1].final_state.l2_distance(&runs[2].final_state).map_err(classify)?;
    let ratio = d0 / d1;
    write_table(
        csv,
        &["dt", "final_l2_diff_to_half_step"],
        &[vec![flow.dt, d0], vec![flow.dt / 2.0, d1]],
    )?;
    rep.files.push(csv.to_path_buf());

    let column_ratios: Map<String, Value> = coarse
        .columns
        .iter()
        .zip(&fine.columns)
        .map(|(a, b)| (a.name.clone(), json!(if b.max > 0.0 { Some(a.max / b.max) } else { None })))
        .collect();
    rep.set("drift", drift_table(&runs[2].record, flow.spectrum_rank));
    let max_tail = runs[2].record.rows.iter().map(|r| r.tail).fold(0.0, f64::max);
    rep.set("truncation", truncation_status(max_tail));
    rep.set("dts", json!([flow.dt, flow.dt / 2.0, flow.dt / 4.0]));
    rep.set("final_l2_differences", json!([d0, d1]));
    rep.set("refinement_ratio", json!(ratio));
    rep.set("observed_order", json!(ratio.log2()));
    rep.set("columns_dt_vs_half", json!(coarse));
    rep.set("columns_half_vs_quarter", json!(fine));
    rep.set("column_ratios", Value::Object(column_ratios));
    rep.set("pass", json!(fine.pass));
    Ok(rep)
}

fn lax_audit(spec: &RunSpec, csv: &Path) -> Result<Report, LabError> {
    let opts = spec.lax.as_ref().expect("validated lax section");
    if opts.dts.is_empty() || opts.dts.iter().any(|d| !(*d > 0.0)) {
        return Err(LabError::Config("lax.dts must be a nonempty list of positive steps".into()));
    }
    if opts.size == 0 || opts.size > opts.cutoff {
        return Err(LabError::Config(format!("lax.size must lie in 1..={}", opts.cutoff)));
    }
    let u = spec.initial.as_ref().expect("validated initial section").spectrum(opts.cutoff)?;
    let mut rep = Report::new();
    let mut residuals = Vec::new();
    for &dt in &opts.dts {
        match lax_residual(&u, dt, opts.size) {
            Ok(r) => residuals.push(r),
            Err(e) => {
                rep.fail(e);
                break;
            }
        }
    }
    let rows: Vec<Vec<f64>> = opts.dts.iter().zip(&residuals).map(|(&d, &r)| vec![d, r]).collect();
    write_table(csv, &["dt", "residual"], &rows)?;
    rep.files.push(csv.to_path_buf());
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();

    let full = opts.cutoff + 1;
    let k = conserved(&u);
    let sk = sigma_spectrum(&k_matrix(&u, full).map_err(classify)?).map_err(classify)?;
    let sh = sigma_spectrum(&hankel_matrix(&u, full).map_err(classify)?).map_err(classify)?;
    let b = b_u_matrix(&u, full).map_err(classify)?;
    let skew = max_abs(&(b.matrix() + b.matrix().adjoint()));
    rep.set("truncation", truncation_status(u.coeff(opts.cutoff).norm()));
    rep.set("residuals", json!(residuals));
    rep.set("ratios", json!(ratios));
    rep.set("trace_identities", json!({
        "sum_sigma_sq_K_minus_M": sk.sum_of_squares() - k.m,
        "sum_sigma_sq_H_minus_Q_plus_M": sh.sum_of_squares() - (k.q + k.m),
    }));
    rep.set("b_skew_defect", json!(skew));
    Ok(rep)
}

fn xy_demo(spec: &RunSpec, csv: &Path) -> Result<Report, LabError> {
    let o = spec.xy.as_ref().expect("validated xy section");
    let t = tilde_e_demo(o.x0, o.y0, o.q, o.dt).map_err(classify)?;
    let bound = if o.y0 != 0.0 { 1.0 / o.y0.abs() } else { f64::INFINITY };
    let mut rep = Report::new();
    write_table(csv, &["x0", "y0", "Q", "T", "bound"], &[vec![o.x0, o.y0, o.q, t, bound]])?;
    rep.files.push(csv.to_path_buf());
    rep.set("blowup_time", json!(t));
    rep.set("bound", json!(if bound.is_finite() { Some(bound) } else { None }));
    rep.set("within_bound", json!(t.abs() <= bound * (1.0 + 1e-9)));
    rep.set("threshold", json!(BLOWUP_THRESHOLD));
    Ok(rep)
}

fn fit(spec: &RunSpec) -> Result<Report, LabError> {
    let o = spec.fit.as_ref().expect("validated fit section");
    let series = read_csv_series(Path::new(&o.input), &o.column)?;
    let r = fit_exponential(&series, o.window).map_err(classify)?;
    let mut rep = Report::new();
    rep.set("input", json!(o.input));
    rep.set("column", json!(o.column));
    rep.set("fit", json!(r));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> RunSpec {
        RunSpec::from_json(json).unwrap()
    }

    #[test]
    fn evolve_pde_monomial_is_constant() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(
            r#"{"initial": {"coefficients": [[0,0],[1,0]]},
                "flow": {"dt": 0.01, "t_end": 0.5, "cutoff": 8, "monitor_stride": 10, "spectrum_rank": 2}}"#,
        );
        let out = run(ExperimentKind::EvolvePde, &s, dir.path()).unwrap();
        assert_eq!(out.exit_code(), 0);
        assert_eq!(out.summary["drift"]["Q"], json!(0.0));
        assert_eq!(out.summary["truncation"]["flag"], json!(false));
        let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,Q,M,E,absJ,H12,H1,bmo_proxy,sigma1,sigma2");
        assert_eq!(lines.len(), 7);
        let tail = |l: &str| l.split_once(',').unwrap().1.to_string();
        assert!(lines[1..].iter().all(|l| tail(l) == tail(lines[1])));
    }

    #[test]
    fn xy_demo_reports_bound() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(r#"{"xy": {"x0": 0, "y0": 1, "q": 1, "dt": 0.001}}"#);
        let out = run(ExperimentKind::XyDemo, &s, dir.path()).unwrap();
        assert_eq!(out.summary["within_bound"], json!(true));
        assert!(out.summary["drift"].is_null());
    }

    #[test]
    fn config_errors_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(r#"{"xy": {"x0": 1, "y0": 1, "q": 1, "dt": 0.001}}"#);
        assert!(matches!(run(ExperimentKind::XyDemo, &s, dir.path()), Err(LabError::Config(_))));
        assert!(matches!(run(ExperimentKind::EvolvePde, &s, dir.path()), Err(LabError::Config(_))));
    }

    #[test]
    fn unstable_run_keeps_partial_output() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(
            r#"{"initial": {"coefficients": [[3,0],[2,1],[1,0]]},
                "flow": {"dt": 0.5, "t_end": 50, "cutoff": 16, "monitor_stride": 1, "spectrum_rank": 1,
                         "integrator": "rk4"}}"#,
        );
        let out = run(ExperimentKind::EvolvePde, &s, dir.path()).unwrap();
        assert_eq!(out.exit_code(), 3);
        assert_eq!(out.summary["status"], json!("aborted"));
        let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(text.lines().count() >= 2);
    }
}
