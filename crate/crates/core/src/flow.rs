//! The Hamiltonian flow `i∂ₜu = 2JΠ(|u|²) + J̄u²`, Galerkin-truncated at
//! the spectrum cutoff, and the dynamical audits built on it.

use serde::{Deserialize, Serialize};

use crate::conv;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::hankel::{b_u_matrix, hankel_matrix, k_matrix, lax_commutator, max_abs, sigma_spectrum};
use crate::integrate::{rk4_step, Integrator};
use crate::spectrum::{conserved, sobolev_norm, SpectrumPlus, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cutoff: usize,
    pub monitor_stride: usize,
    pub spectrum_rank: usize,
    #[serde(default)]
    pub integrator: Integrator,
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::invalid("t_end must be finite"));
        }
        if self.monitor_stride == 0 {
            return Err(Error::invalid("monitor_stride must be at least 1"));
        }
        if self.spectrum_rank > self.cutoff {
            return Err(Error::invalid(format!(
                "spectrum_rank {} exceeds cutoff {}",
                self.spectrum_rank, self.cutoff
            )));
        }
        Ok(())
    }

    /// Number of steps and their signed size; `t_end < 0` runs backward.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = (self.t_end.abs() / self.dt).round() as usize;
        (steps, self.dt.copysign(self.t_end))
    }
}

/// One monitored sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: f64,
    pub m: f64,
    pub e: f64,
    pub abs_j: f64,
    pub h12: f64,
    pub h1: f64,
    pub bmo_proxy: f64,
    /// σ₁…σ_r of `K_u`
    pub sigma: Vec<f64>,
    /// `tr|K_u|`
    pub trace_norm_k: f64,
    /// `|û(N)|`, the top retained mode
    pub tail: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
    /// Full states at the monitored times, when requested.
    pub snapshots: Vec<SpectrumPlus>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// The monitors recorded for state `u` at time `t`. Hankel matrices use the
/// full section size `cutoff + 1`.
pub fn monitor(t: f64, u: &SpectrumPlus, rank: usize) -> Result<TrajectoryRow> {
    let size = u.cutoff() + 1;
    let k = conserved(u);
    let sk = sigma_spectrum(&k_matrix(u, size)?)?;
    let sh = sigma_spectrum(&hankel_matrix(u, size)?)?;
    Ok(TrajectoryRow {
        t,
        q: k.q,
        m: k.m,
        e: k.e,
        abs_j: k.j.norm(),
        h12: sobolev_norm(u, 0.5),
        h1: sobolev_norm(u, 1.0),
        bmo_proxy: sh.largest(),
        sigma: (1..=rank).map(|i| sk.get(i)).collect(),
        trace_norm_k: sk.sum(),
        tail: u.coeff(u.cutoff()).norm(),
    })
}

fn vector_field(u: &[C64]) -> Vec<C64> {
    let p = conv::products(u);
    let j: C64 = p.square.iter().zip(u).map(|(s, a)| s * a.conj()).sum();
    let minus_i = C64::new(0.0, -1.0);
    p.mod_sq
        .iter()
        .zip(&p.square)
        .map(|(ms, sq)| minus_i * (2.0 * j * ms + j.conj() * sq))
        .collect()
}

/// `∂ₜu = −i(2J Π(|u|²) + J̄ u²)`, truncated at the cutoff.
pub fn rhs(u: &SpectrumPlus) -> SpectrumPlus {
    SpectrumPlus::from_vec_unchecked(vector_field(u.coeffs()))
}

/// One classical RK4 step.
pub fn step_rk4(u: &SpectrumPlus, dt: f64) -> Result<SpectrumPlus> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let out = SpectrumPlus::from_vec_unchecked(rk4_step(u.coeffs(), dt, vector_field));
    if !out.is_finite() {
        return Err(Error::Unstable { t: 0.0 });
    }
    Ok(out)
}

/// One step of either sign with the chosen integrator.
pub fn advance(u: &SpectrumPlus, dt: f64, integrator: Integrator) -> Option<SpectrumPlus> {
    integrator.step(u.coeffs(), dt, vector_field).map(SpectrumPlus::from_vec_unchecked)
}

/// Result of a run that may have stopped early.
#[derive(Clone, Debug)]
pub struct FlowRun {
    pub record: TrajectoryRecord,
    pub final_state: SpectrumPlus,
    pub final_time: f64,
    /// Set when the run aborted; `final_state` is the last valid state.
    pub failure: Option<Error>,
}

/// Steps the flow from `u0`, sampling monitors every `monitor_stride`
/// steps and at the final time. Only configuration errors are returned as
/// `Err`; numerical aborts come back in [`FlowRun::failure`] with the rows
/// recorded so far.
pub fn evolve_run(u0: &SpectrumPlus, cfg: &FlowConfig, keep_snapshots: bool) -> Result<FlowRun> {
    cfg.validate()?;
    if u0.cutoff() != cfg.cutoff {
        return Err(Error::CutoffMismatch { left: u0.cutoff(), right: cfg.cutoff });
    }
    let (steps, h) = cfg.schedule();
    let mut record = TrajectoryRecord::default();
    let mut u = u0.clone();
    let mut t = 0.0;
    let sample = |t: f64, u: &SpectrumPlus, record: &mut TrajectoryRecord| -> Result<()> {
        record.rows.push(monitor(t, u, cfg.spectrum_rank)?);
        if keep_snapshots {
            record.snapshots.push(u.clone());
        }
        Ok(())
    };
    sample(t, &u, &mut record)?;
    for n in 1..=steps {
        match advance(&u, h, cfg.integrator) {
            Some(next) => u = next,
            None => {
                return Ok(FlowRun {
                    record,
                    final_state: u,
                    final_time: t,
                    failure: Some(Error::Unstable { t }),
                })
            }
        }
        t = n as f64 * h;
        if n % cfg.monitor_stride == 0 || n == steps {
            if let Err(e) = sample(t, &u, &mut record) {
                return Ok(FlowRun { record, final_state: u, final_time: t, failure: Some(e) });
            }
        }
    }
    Ok(FlowRun { record, final_state: u, final_time: t, failure: None })
}

pub fn evolve(u0: &SpectrumPlus, cfg: &FlowConfig) -> Result<TrajectoryRecord> {
    let run = evolve_run(u0, cfg, false)?;
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run.record),
    }
}

/// Largest relative deviation from the first sample of a monitored column.
pub fn relative_drift(record: &TrajectoryRecord, column: impl Fn(&TrajectoryRow) -> f64) -> f64 {
    let Some(first) = record.rows.first() else { return 0.0 };
    let base = column(first);
    let denom = if base.abs() > 0.0 { base.abs() } else { 1.0 };
    record.rows.iter().map(|r| (column(r) - base).abs() / denom).fold(0.0, f64::max)
}

/// Max-entry norm of `dK/dt − [B_u, K_u]` on the leading `size × size`
/// block, with `dK/dt` from a central difference over `±dt`.
///
/// The commutator products run over the full section `cutoff + 1` before
/// the block is taken, so the only error left is the `O(dt²)` of the
/// difference quotient.
pub fn lax_residual(u: &SpectrumPlus, dt: f64, size: usize) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if size > u.cutoff() {
        return Err(Error::invalid(format!("size {size} exceeds cutoff {}", u.cutoff())));
    }
    let plus = advance(u, dt, Integrator::GaussLegendre6).ok_or(Error::Unstable { t: 0.0 })?;
    let minus = advance(u, -dt, Integrator::GaussLegendre6).ok_or(Error::Unstable { t: 0.0 })?;
    let d = (k_matrix(&plus, size)?.matrix() - k_matrix(&minus, size)?.matrix())
        * C64::new(0.5 / dt, 0.0);

    let full = u.cutoff() + 1;
    let comm = lax_commutator(&b_u_matrix(u, full)?, &k_matrix(u, full)?)?;
    let block = comm.view((0, 0), (size, size));
    Ok(max_abs(&(d - block)))
}

/// `r(t) = ‖u(t) − v(t)‖ / ‖u₀ − v₀‖` at every monitored step.
pub fn lipschitz_ratio(u0: &SpectrumPlus, v0: &SpectrumPlus, cfg: &FlowConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    for s in [u0, v0] {
        if s.cutoff() != cfg.cutoff {
            return Err(Error::CutoffMismatch { left: s.cutoff(), right: cfg.cutoff });
        }
    }
    let d0 = u0.l2_distance(v0)?;
    if d0 == 0.0 {
        return Err(Error::invalid("identical initial data: Lipschitz ratio undefined"));
    }
    let (steps, h) = cfg.schedule();
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut out = vec![(0.0, 1.0)];
    for n in 1..=steps {
        let t = (n - 1) as f64 * h;
        u = advance(&u, h, cfg.integrator).ok_or(Error::Unstable { t })?;
        v = advance(&v, h, cfg.integrator).ok_or(Error::Unstable { t })?;
        if n % cfg.monitor_stride == 0 || n == steps {
            out.push((n as f64 * h, u.l2_distance(&v)? / d0));
        }
    }
    Ok(out)
}

/// Least-squares slope of `log r(t)` against `t`: the measured growth
/// constant `B` in `r(t) ≲ e^{B|t|}`.
pub fn lipschitz_rate(ratio: &[(f64, f64)]) -> Result<FitResult> {
    crate::fit::fit_exponential(ratio, None)
}

/// Divergence threshold on `|y|`.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Blow-up of the mean mode `x + iy = (u|1)` under the gauge-breaking
/// Hamiltonian `Re J`.
///
/// The flow is `i∂ₜu = 2Π(|u|²) + u²`; its mean obeys `ẋ = 2xy`,
/// `ẏ = y² − x² − 2Q(t)` with `Q(t) = ‖u(t)‖² ≥ x² + y²` no longer
/// conserved. The closure used here is the Galerkin truncation to modes
/// `{0, 1}`, where the mass off the mean, `Q − x² − y²`, stays constant; it
/// satisfies `ẏ ≤ −y²` exactly, so at least one time direction blows up
/// within `1/|y₀|`.
///
/// Both directions are integrated with RK4; steps shrink like `1/|y|`
/// and are halved on overshoot until `|y|` crosses the threshold. The
/// returned time is the signed one closest to 0, extrapolated with the
/// Riccati tail `|T − t| ≈ 1/|y|`.
pub fn tilde_e_demo(x0: f64, y0: f64, q: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mean_sq = x0 * x0 + y0 * y0;
    if !(q >= mean_sq) {
        return Err(Error::invalid(format!("Q = {q} is below |(u|1)|² = {mean_sq}")));
    }
    if q == 0.0 {
        return Err(Error::invalid("x0 = y0 = 0 with Q = 0 is a rest point"));
    }
    let off_mean = q - mean_sq;
    let horizon = if y0 != 0.0 { 2.0 / y0.abs() } else { 10.0 / q.sqrt() };

    [1.0, -1.0]
        .into_iter()
        .filter_map(|dir| blowup_time(x0, y0, off_mean, dt, dir, horizon))
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or_else(|| Error::Infeasible(format!("no blow-up within |t| ≤ {horizon}")))
}

fn blowup_time(x0: f64, y0: f64, off_mean: f64, dt: f64, dir: f64, horizon: f64) -> Option<f64> {
    let field = |s: &[C64]| {
        let (x, y) = (s[0].re, s[1].re);
        vec![C64::new(2.0 * x * y, 0.0), C64::new(-y * y - 3.0 * x * x - 2.0 * off_mean, 0.0)]
    };
    let mut state = vec![C64::new(x0, 0.0), C64::new(y0, 0.0)];
    let mut t = 0.0f64;
    let mut halvings = 0;
    while t.abs() <= horizon {
        let y = state[1].re;
        if y.abs() > BLOWUP_THRESHOLD {
            return Some(t + dir / y.abs());
        }
        let mut h = dt.min(0.005 / y.abs().max(1e-300)) / 2f64.powi(halvings);
        if h < 1e-300 {
            return None;
        }
        h *= dir;
        let next = rk4_step(&state, h, field);
        let ny = next[1].re;
        if !ny.is_finite() || ny.abs() > 2.0 * BLOWUP_THRESHOLD {
            halvings += 1;
            if halvings > 60 {
                return None;
            }
            continue;
        }
        halvings = 0;
        state = next;
        t += h;
    }
    None
}
