//! Fast holomorphic products for the vector field.
//!
//! Both `u²` and `Π(|u|²)` are linear convolutions of length `2N+1`; with
//! zero padding to at least that length the circular FFT product has no
//! wrap-around, so the result equals direct convolution up to rounding.

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::spectrum::{C64, ZERO};

/// Below this cutoff direct convolution is faster than the FFT round trip.
const FFT_THRESHOLD: usize = 48;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Modes `0..=N` of `u²` and of `Π(|u|²)`.
pub(crate) struct Products {
    pub square: Vec<C64>,
    pub mod_sq: Vec<C64>,
}

pub(crate) fn products(u: &[C64]) -> Products {
    if u.len() <= FFT_THRESHOLD {
        direct(u)
    } else {
        via_fft(u)
    }
}

fn direct(u: &[C64]) -> Products {
    let n = u.len() - 1;
    let square = (0..=n).map(|m| (0..=m).map(|j| u[j] * u[m - j]).sum()).collect();
    let mod_sq = (0..=n)
        .map(|m| (0..=n - m).map(|k| u[k + m] * u[k].conj()).sum())
        .collect();
    Products { square, mod_sq }
}

fn via_fft(u: &[C64]) -> Products {
    let n1 = u.len();
    let len = (2 * n1 - 1).next_power_of_two();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);

        let mut f = vec![ZERO; len];
        f[..n1].copy_from_slice(u);
        fwd.process(&mut f);

        let mut sq: Vec<C64> = f.iter().map(|x| x * x).collect();
        let mut ac: Vec<C64> = f.iter().map(|x| C64::new(x.norm_sqr(), 0.0)).collect();
        inv.process(&mut sq);
        inv.process(&mut ac);

        let scale = 1.0 / len as f64;
        Products {
            square: sq[..n1].iter().map(|x| x * scale).collect(),
            mod_sq: ac[..n1].iter().map(|x| x * scale).collect(),
        }
    })
}
