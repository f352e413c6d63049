//! Cached 2D FFTs on row-major complex buffers.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<Mutex<HashMap<usize, PlanPair>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans(n: usize) -> PlanPair {
    let mut guard = PLANS.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft(n, FftDirection::Forward),
                planner.plan_fft(n, FftDirection::Inverse),
            )
        })
        .clone()
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2_dir(data: &mut [Complex64], n: usize, forward: bool) {
    debug_assert_eq!(data.len(), n * n);
    let (fwd, inv) = plans(n);
    let plan = if forward { fwd } else { inv };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    plan.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}

/// Unnormalized forward 2D DFT: `X(m) = Σ_j x(j) e^{−2πi m·j/n}`.
pub(crate) fn fft2(data: &mut [Complex64], n: usize) {
    fft2_dir(data, n, true);
}

/// Unnormalized inverse 2D DFT: `x(j) = Σ_m X(m) e^{+2πi m·j/n}`.
pub(crate) fn ifft2(data: &mut [Complex64], n: usize) {
    fft2_dir(data, n, false);
}
