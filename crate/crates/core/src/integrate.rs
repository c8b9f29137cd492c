//! Fixed-step one-step methods on complex state vectors.
//!
//! `Rk4` is the classical explicit scheme. `GaussLegendre6` is the 3-stage
//! Gauss collocation method: order 6, symplectic, and it preserves every
//! quadratic invariant (so mass and momentum are kept to round-off). Its
//! stage equations are solved by fixed-point iteration, which converges for
//! `|dt| · Lip(f)` small.

use serde::{Deserialize, Serialize};

use crate::spectrum::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    #[default]
    GaussLegendre6,
}

impl Integrator {
    /// One step of size `dt` (negative steps run backward). `None` when the
    /// implicit stages fail to converge or the result is not finite.
    pub fn step<F>(self, y: &[C64], dt: f64, f: F) -> Option<Vec<C64>>
    where
        F: Fn(&[C64]) -> Vec<C64>,
    {
        let out = match self {
            Integrator::Rk4 => rk4_step(y, dt, f),
            Integrator::GaussLegendre6 => gauss_legendre6_step(y, dt, f)?,
        };
        out.iter().all(|c| c.re.is_finite() && c.im.is_finite()).then_some(out)
    }
}

fn axpy(y: &[C64], a: f64, x: &[C64]) -> Vec<C64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

pub fn rk4_step<F>(y: &[C64], dt: f64, f: F) -> Vec<C64>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * dt, &k1));
    let k3 = f(&axpy(y, 0.5 * dt, &k2));
    let k4 = f(&axpy(y, dt, &k3));
    let w = dt / 6.0;
    (0..y.len())
        .map(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w)
        .collect()
}

const FIXED_POINT_MAX_ITER: usize = 80;

fn tableau() -> ([[f64; 3]; 3], [f64; 3]) {
    let r = 15f64.sqrt();
    (
        [
            [5.0 / 36.0, 2.0 / 9.0 - r / 15.0, 5.0 / 36.0 - r / 30.0],
            [5.0 / 36.0 + r / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r / 24.0],
            [5.0 / 36.0 + r / 30.0, 2.0 / 9.0 + r / 15.0, 5.0 / 36.0],
        ],
        [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
    )
}

pub fn gauss_legendre6_step<F>(y: &[C64], dt: f64, f: F) -> Option<Vec<C64>>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let (a, b) = tableau();
    let n = y.len();
    let scale = y.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let tol = 1e-15 * scale;

    let k0 = f(y);
    let mut k = [k0.clone(), k0.clone(), k0];
    let mut last_delta = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let mut next: [Vec<C64>; 3] = Default::default();
        for (i, row) in a.iter().enumerate() {
            let stage: Vec<C64> = (0..n)
                .map(|m| y[m] + (k[0][m] * row[0] + k[1][m] * row[1] + k[2][m] * row[2]) * dt)
                .collect();
            next[i] = f(&stage);
        }
        let delta = dt.abs()
            * next
                .iter()
                .zip(&k)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
                .fold(0.0, f64::max);
        k = next;
        if !delta.is_finite() {
            return None;
        }
        if delta <= tol {
            break;
        }
        // round-off floor reached
        if delta >= last_delta {
            stalled += 1;
            if stalled >= 3 {
                if delta > 1e-10 * scale {
                    return None;
                }
                break;
            }
        }
        last_delta = delta;
    }
    Some(
        (0..n)
            .map(|m| y[m] + (k[0][m] * b[0] + k[1][m] * b[1] + k[2][m] * b[2]) * dt)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    // y' = i ω y, exact solution e^{iωt}
    fn rotate(y: &[C64]) -> Vec<C64> {
        y.iter().map(|v| v * C64::new(0.0, 2.0)).collect()
    }

    fn one_step_error(integ: Integrator, dt: f64) -> f64 {
        let y = [C64::new(1.0, 0.0)];
        let out = integ.step(&y, dt, rotate).unwrap();
        (out[0] - C64::new(0.0, 2.0 * dt).exp()).norm()
    }

    #[test]
    fn local_orders() {
        // local error O(dt^{p+1}): 32 for RK4, 128 for the order-6 method
        let r = one_step_error(Integrator::Rk4, 0.02) / one_step_error(Integrator::Rk4, 0.01);
        assert!((r - 32.0).abs() < 1.0, "rk4 ratio {r}");
        let r = one_step_error(Integrator::GaussLegendre6, 0.1)
            / one_step_error(Integrator::GaussLegendre6, 0.05);
        assert!((r - 128.0).abs() < 6.0, "gl6 ratio {r}");
    }

    #[test]
    fn gauss_keeps_modulus() {
        let mut y = vec![C64::new(0.6, 0.8)];
        for _ in 0..1000 {
            y = Integrator::GaussLegendre6.step(&y, 0.05, rotate).unwrap();
        }
        assert!((y[0].norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn divergent_fixed_point_is_reported() {
        let stiff = |y: &[C64]| y.iter().map(|v| v * 1e6).collect::<Vec<_>>();
        assert!(Integrator::GaussLegendre6.step(&[C64::new(1.0, 0.0)], 1.0, stiff).is_none());
    }
}
