//! Unnormalized multi-dimensional complex FFTs on `N^d` row-major arrays.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// In-place `d`-dimensional transform of `data` (length `n^d`).
///
/// `Forward` computes `Σ_j f_j e^{-2πi jk/n}` per axis, `Inverse` the same
/// sum with `+`; neither applies a normalization.
pub fn transform(data: &mut [Complex64], dim: usize, n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if dim == 1 {
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    let total = data.len();
    let mut line = vec![Complex64::default(); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            // contiguous rows
            for chunk in data.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
