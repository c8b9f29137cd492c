//! Exact dynamics on the invariant manifold `L(1) = { b + cz/(1 − pz) }`.
//!
//! On this manifold the flow reduces to three complex ODEs for `(b, c, p)`.
//! Under the resonance `E = ½Q³` the modulus `|c|` obeys
//! `((1/|c|) d|c|/dt)² = 𝒫(|c|√M)` and decays like `e^{−κ|t|}` with
//! `κ = Q^{3/2}√(4M − Q)`, so every `H^s` norm with `s > ½` grows like
//! `e^{(2s−1)κ|t|}`. Away from resonance `|c|` stays bounded below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, FitResult};
use crate::flow::FlowConfig;
use crate::spectrum::{ConservedSet, SpectrumPlus, C64};

/// Once `|p|` gets this close to 1 the state is treated as having left L(1).
pub const P_ABS_LIMIT: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalState {
    pub b: C64,
    pub c: C64,
    pub p: C64,
}

impl RationalState {
    pub fn new(b: C64, c: C64, p: C64) -> Result<Self> {
        let s = Self { b, c, p };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if [self.b, self.c, self.p].iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("rational state has non-finite coordinates"));
        }
        if self.p.norm() >= 1.0 {
            return Err(Error::invalid(format!("|p| = {} must be < 1", self.p.norm())));
        }
        if self.c == C64::new(0.0, 0.0) {
            return Err(Error::invalid("c = 0 is not in L(1)"));
        }
        Ok(())
    }

    /// `1 − |p|²`
    pub fn gap(&self) -> f64 {
        1.0 - self.p.norm_sqr()
    }

    /// `(λb, λc, p)`, the state of `λu`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { b: self.b * lambda, c: self.c * lambda, p: self.p }
    }

    /// Mass of the modes above the cutoff, `|c||p|^N/(1 − |p|)`: an upper
    /// bound on the Wiener norm of what `to_spectrum(·, N)` drops.
    pub fn truncation_tail(&self, cutoff: usize) -> f64 {
        let r = self.p.norm();
        self.c.norm() * r.powi(cutoff as i32) / (1.0 - r)
    }

    fn as_array(&self) -> [C64; 3] {
        [self.b, self.c, self.p]
    }

    fn from_slice(v: &[C64]) -> Self {
        Self { b: v[0], c: v[1], p: v[2] }
    }
}

/// `û(0) = b`, `û(k) = c p^{k−1}` for `1 ≤ k ≤ N`.
pub fn to_spectrum(s: &RationalState, cutoff: usize) -> Result<SpectrumPlus> {
    s.check()?;
    let mut coeffs = Vec::with_capacity(cutoff + 1);
    coeffs.push(s.b);
    let mut term = s.c;
    for _ in 1..=cutoff {
        coeffs.push(term);
        term *= s.p;
    }
    SpectrumPlus::new(coeffs)
}

/// Residue-theorem value `J = |b|²b + 2b|c|²/(1−|p|²) + |c|²c p̄/(1−|p|²)²`.
pub fn j_closed_form(s: &RationalState) -> C64 {
    let g = s.gap();
    let (b, c, p) = (s.b, s.c, s.p);
    let c2 = c.norm_sqr();
    b * b.norm_sqr() + b * (2.0 * c2 / g) + c * p.conj() * (c2 / (g * g))
}

/// Closed forms of `Q`, `M`, `E`, `J`. `E` comes from its own expanded
/// formula, not from `½|J|²`, so the two act as independent checks.
pub fn conserved_closed_form(s: &RationalState) -> ConservedSet {
    let g = s.gap();
    let (b2, c2, x) = (s.b.norm_sqr(), s.c.norm_sqr(), s.p.norm_sqr());
    let re_bcp = (s.b * s.c.conj() * s.p).re;
    let q = b2 + c2 / g;
    let m = c2 / (g * g);
    let e = 0.5 * b2.powi(3)
        + 2.0 * b2 * b2 * c2 / g
        + b2 * c2 / (g * g) * (re_bcp + 2.0 * c2)
        + 2.0 * c2 * c2 / g.powi(3) * re_bcp
        + 0.5 * x * c2.powi(3) / g.powi(4);
    ConservedSet { q, m, e, j: j_closed_form(s) }
}

/// Time derivatives `(ḃ, ċ, ṗ)` of the reduced system.
pub fn ode_rhs(s: &RationalState) -> (C64, C64, C64) {
    let j = j_closed_form(s);
    let g = s.gap();
    let (b, c, p) = (s.b, s.c, s.p);
    let c2 = c.norm_sqr();
    let minus_i = C64::new(0.0, -1.0);
    let dp = minus_i * c * j.conj();
    let dc = minus_i * (2.0 * b * c * j.conj() + 2.0 * b.conj() * c * j + 2.0 * j * p * (c2 / g));
    let db = minus_i * (b * b * j.conj() + 2.0 * b.norm_sqr() * j + 2.0 * j * (c2 / g));
    (db, dc, dp)
}

fn ode_field(v: &[C64]) -> Vec<C64> {
    let (db, dc, dp) = ode_rhs(&RationalState::from_slice(v));
    vec![db, dc, dp]
}

/// `E − ½Q³`; zero exactly on the turbulent (resonant) states.
pub fn resonance_residual(s: &RationalState) -> f64 {
    let k = conserved_closed_form(s);
    k.e - 0.5 * k.q.powi(3)
}

/// The resonance rewritten with `Q`, `M` and `|c|`:
/// `Q(Q − |c|√M) + 2(Q + |c|√M) Re(b c̄ p/(1−|p|²)) − (2|c|²M − |c|M√M)`.
pub fn resonance_identity_residual(s: &RationalState) -> f64 {
    let k = conserved_closed_form(s);
    let (q, m) = (k.q, k.m);
    let cm = s.c.norm() * m.sqrt();
    let re = (s.b * s.c.conj() * s.p).re / s.gap();
    q * (q - cm) + 2.0 * (q + cm) * re - (2.0 * s.c.norm_sqr() * m - cm * m)
}

/// `(1/|c|) d|c|/dt = Re(c̄ ċ)/|c|²` along the reduced flow.
pub fn log_c_rate(s: &RationalState) -> f64 {
    let (_, dc, _) = ode_rhs(s);
    (s.c.conj() * dc).re / s.c.norm_sqr()
}

fn check_positive(q: f64, m: f64) -> Result<()> {
    if !(q > 0.0 && m > 0.0) {
        return Err(Error::invalid(format!("Q and M must be positive, got Q = {q}, M = {m}")));
    }
    Ok(())
}

/// `κ = Q^{3/2}√(4M − Q)`; requires `Q < 4M`.
pub fn kappa(q: f64, m: f64) -> Result<f64> {
    check_positive(q, m)?;
    if q >= 4.0 * m {
        return Err(Error::Infeasible(format!("Q = {q} ≥ 4M = {}", 4.0 * m)));
    }
    Ok(q.powf(1.5) * (4.0 * m - q).sqrt())
}

/// `𝒫(X) = −(M+Q)²X² + 2Q²(M−Q)X + Q³(4M−Q)`.
pub fn p_polynomial(x: f64, q: f64, m: f64) -> f64 {
    -(m + q).powi(2) * x * x + 2.0 * q * q * (m - q) * x + q.powi(3) * (4.0 * m - q)
}

/// Roots `r₋ ≤ r₊` of `𝒫`: `[Q²(M−Q) ± 2MQ√(2Q²+MQ)]/(M+Q)²`.
pub fn envelope_roots(q: f64, m: f64) -> Result<(f64, f64)> {
    check_positive(q, m)?;
    let center = q * q * (m - q);
    let spread = 2.0 * m * q * (2.0 * q * q + m * q).sqrt();
    let d = (m + q).powi(2);
    Ok(((center - spread) / d, (center + spread) / d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeData {
    pub q: f64,
    pub m: f64,
    /// zero when `Q ≥ 4M`
    pub kappa: f64,
    pub r_minus: f64,
    pub r_plus: f64,
}

pub fn envelope_data(q: f64, m: f64) -> Result<EnvelopeData> {
    let (r_minus, r_plus) = envelope_roots(q, m)?;
    let kappa = kappa(q, m).unwrap_or(0.0);
    Ok(EnvelopeData { q, m, kappa, r_minus, r_plus })
}

/// Samples of the sign-change scan and the bisection tolerance for the
/// resonant phase search.
const PHASE_SCAN: usize = 256;
const RESIDUAL_TOL: f64 = 1e-12;

/// A resonant state with prescribed `Q`, `M` and `|p|`.
///
/// Gauge: `b` and `c` real positive, the phase sits on `p`, so the only
/// free parameter is `ψ = arg(b c̄ p) = arg p`. The moduli follow from
/// `M = |c|²/(1−|p|²)²` and `Q = |b|² + |c|√M`; `ψ` is found by bisection
/// after a 256-point sign-change scan of `E − ½Q³`. The first sign change
/// in `[0, 2π)` is returned.
pub fn find_blowup_initial(q: f64, m: f64, p_abs: f64) -> Result<RationalState> {
    check_positive(q, m)?;
    if q >= 4.0 * m {
        return Err(Error::Infeasible(format!("resonance needs Q < 4M, got Q = {q}, M = {m}")));
    }
    if !(p_abs > 0.0 && p_abs < 1.0) {
        return Err(Error::invalid(format!("|p| = {p_abs} must lie in (0, 1)")));
    }
    let c = m.sqrt() * (1.0 - p_abs * p_abs);
    let b2 = q - m.sqrt() * c;
    if !(b2 > 0.0) {
        return Err(Error::Infeasible(format!("|b|² = Q − √M|c| = {b2} is not positive")));
    }
    let b = b2.sqrt();
    let state = |psi: f64| RationalState {
        b: C64::new(b, 0.0),
        c: C64::new(c, 0.0),
        p: C64::from_polar(p_abs, psi),
    };
    let f = |psi: f64| resonance_residual(&state(psi));

    let tau = std::f64::consts::TAU;
    let grid: Vec<f64> = (0..=PHASE_SCAN).map(|i| tau * i as f64 / PHASE_SCAN as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&psi| f(psi)).collect();
    for i in 0..PHASE_SCAN {
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let (mut flo, fhi) = (values[i], values[i + 1]);
        if flo == 0.0 {
            return Ok(state(lo));
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() < RESIDUAL_TOL || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                return Ok(state(mid));
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Err(Error::NoRoot { min, max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Sample {
    pub t: f64,
    pub state: RationalState,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct L1Trajectory {
    pub samples: Vec<L1Sample>,
    /// Set when the run stopped early; the samples end at the last valid state.
    pub failure: Option<Error>,
}

impl L1Trajectory {
    pub fn last(&self) -> Option<&L1Sample> {
        self.samples.last()
    }
}

/// Integrates the reduced system, recording every `monitor_stride` steps.
///
/// Aborts (keeping the samples so far) once `|p| ≥ 1 − 10⁻¹²` or `c`
/// vanishes; only configuration errors are returned as `Err`.
pub fn evolve_ode(s0: &RationalState, cfg: &FlowConfig) -> Result<L1Trajectory> {
    cfg.validate()?;
    s0.check()?;
    let (steps, h) = cfg.schedule();
    let mut out = L1Trajectory { samples: vec![L1Sample { t: 0.0, state: *s0 }], failure: None };
    let mut y = s0.as_array().to_vec();
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * h;
        let Some(next) = cfg.integrator.step(&y, h, ode_field) else {
            out.failure = Some(Error::Unstable { t: t_prev });
            return Ok(out);
        };
        let s = RationalState::from_slice(&next);
        let t = n as f64 * h;
        if s.p.norm() >= P_ABS_LIMIT {
            out.failure = Some(Error::LeftManifold {
                t: t_prev,
                reason: format!("|p| reached {} at t = {t}", s.p.norm()),
            });
            return Ok(out);
        }
        if s.c.norm() == 0.0 {
            out.failure = Some(Error::LeftManifold { t: t_prev, reason: format!("c vanished at t = {t}") });
            return Ok(out);
        }
        y = next;
        if n % cfg.monitor_stride == 0 || n == steps {
            out.samples.push(L1Sample { t, state: s });
        }
    }
    Ok(out)
}

/// Eulerian numbers `A(n, k)`, `k = 0..n` (row `n = 0` is `[1]`).
fn eulerian_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for i in 1..=n {
        let mut next = vec![0.0; i];
        for k in 0..i {
            let keep = if k < row.len() { (k + 1) as f64 * row[k] } else { 0.0 };
            let carry = if k >= 1 && k - 1 < row.len() { (i - k) as f64 * row[k - 1] } else { 0.0 };
            next[k] = keep + carry;
        }
        row = next;
    }
    row
}

/// `‖u‖²_{H^s} = |b|² + |c|² Σ_{k≥1} (1+k)^{2s} |p|^{2(k−1)}` with no
/// truncation. Closed form via Eulerian polynomials when `2s` is an
/// integer; direct summation otherwise (only while `|p|² ≤ 0.999`).
pub fn sobolev_norm_sq(s: &RationalState, order: f64) -> Result<f64> {
    if !(order >= 0.0) {
        return Err(Error::invalid(format!("Sobolev order {order} must be nonnegative")));
    }
    let x = s.p.norm_sqr();
    let two_s = 2.0 * order;
    let series = if x < 0.5 {
        direct_weight_sum(x, two_s)
    } else if (two_s - two_s.round()).abs() < 1e-12 {
        let n = two_s.round() as usize;
        let poly: f64 = eulerian_row(n).iter().rev().fold(0.0, |acc, a| acc * x + a);
        (poly / (1.0 - x).powi(n as i32 + 1) - 1.0) / x
    } else if x <= 0.999 {
        direct_weight_sum(x, two_s)
    } else {
        return Err(Error::invalid(format!(
            "H^{order} norm needs 2s integer once |p|² > 0.999 (|p|² = {x})"
        )));
    };
    Ok(s.b.norm_sqr() + s.c.norm_sqr() * series)
}

fn direct_weight_sum(x: f64, two_s: f64) -> f64 {
    let mut sum = 0.0;
    let mut pw = 1.0;
    for k in 1.. {
        let term = (1.0 + k as f64).powf(two_s) * pw;
        sum += term;
        if term < 1e-18 * sum && k > 10 {
            break;
        }
        pw *= x;
    }
    sum
}

/// Late-time rate of `log(M^{½+s} |c(t)|^{1−2s})`, the asymptotic size of
/// `‖u‖²_{H^s}`.
///
/// The window starts when `|c|` first drops below half its initial value and
/// runs to the end of the trajectory. `|c|` must decrease monotonically on
/// it; otherwise the trajectory has no exponential regime.
pub fn growth_diagnostic(traj: &L1Trajectory, s: f64) -> Result<FitResult> {
    if !(s >= 0.5) {
        return Err(Error::invalid(format!("growth diagnostic needs s ≥ ½, got {s}")));
    }
    let window = late_window(traj)?;
    let m = conserved_closed_form(&window[0].state).m;
    let series: Vec<(f64, f64)> = window
        .iter()
        .map(|x| (x.t, m.powf(0.5 + s) * x.state.c.norm().powf(1.0 - 2.0 * s)))
        .collect();
    fit_exponential(&series, None)
}

/// Samples from the first drop of `|c|` below `|c(0)|/2` onward, checked
/// for monotone decay.
pub fn late_window(traj: &L1Trajectory) -> Result<&[L1Sample]> {
    let first = traj.samples.first().ok_or_else(|| Error::invalid("empty trajectory"))?;
    let half = 0.5 * first.state.c.norm();
    let start = traj
        .samples
        .iter()
        .position(|x| x.state.c.norm() < half)
        .ok_or_else(|| Error::NoExponentialRegime("|c| never dropped below half its initial value".into()))?;
    let window = &traj.samples[start..];
    if let Some(w) = window.windows(2).find(|w| w[1].state.c.norm() > w[0].state.c.norm()) {
        return Err(Error::NoExponentialRegime(format!("|c| increases again at t = {}", w[1].t)));
    }
    Ok(window)
}
