//! Multi-dimensional FFT on row-major arrays, one axis at a time.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized FFT of `data` with the given row-major `shape`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    let mut stride = 1usize;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        if n > 1 {
            let fft = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Circular cross-correlation `c(delta) = sum_x a(x) b(x + delta)` of real arrays.
pub fn circular_correlation(a: &[f64], b: &[f64], shape: &[usize]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut fa, shape, false);
    fft_nd(&mut fb, shape, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft_nd(&mut fa, shape, true);
    let norm = 1.0 / total as f64;
    fa.iter().map(|v| v.re * norm).collect()
}

/// Circular convolution `c(x) = sum_y k(x - y) v(y)` of real arrays.
pub fn circular_convolution(kernel: &[f64], v: &[f64], shape: &[usize]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    let mut fk: Vec<Complex64> = kernel.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fv: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(&mut fk, shape, false);
    fft_nd(&mut fv, shape, false);
    for (x, y) in fk.iter_mut().zip(&fv) {
        *x *= y;
    }
    fft_nd(&mut fk, shape, true);
    let norm = 1.0 / total as f64;
    fk.iter().map(|x| x.re * norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_convolution_match_direct() {
        let shape = [3usize, 4];
        let a: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        let conv = circular_convolution(&a, &b, &shape);
        let corr = circular_correlation(&a, &b, &shape);
        for x0 in 0..3 {
            for x1 in 0..4 {
                let mut c = 0.0;
                let mut r = 0.0;
                for y0 in 0..3 {
                    for y1 in 0..4 {
                        let k = ((x0 + 3 - y0) % 3) * 4 + (x1 + 4 - y1) % 4;
                        c += a[k] * b[y0 * 4 + y1];
                        let shifted = ((y0 + x0) % 3) * 4 + (y1 + x1) % 4;
                        r += a[y0 * 4 + y1] * b[shifted];
                    }
                }
                assert!((conv[x0 * 4 + x1] - c).abs() < 1e-12);
                assert!((corr[x0 * 4 + x1] - r).abs() < 1e-12);
            }
        }
    }
}
