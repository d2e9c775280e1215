//! Incomplete gamma functions and power-law lattice sums.
//!
//! Lattice sums `sum_n |n + y|^{-s}` over `Z^d` are evaluated with the
//! theta-function splitting of the Mellin integral at `t = 1`: both the
//! real-space and the reciprocal-space pieces are sums of scaled upper
//! incomplete gammas that decay like `exp(-pi r^2)`, so a cube of radius 4
//! already leaves a remainder below `1e-25`.

use std::f64::consts::PI;

use libm::tgamma as gamma;

use crate::summation::NeumaierSum;

const FPMIN: f64 = 1e-300;

/// `sum_{m in Z} exp(-pi m^2)`, the maximum over shifts of the 1D theta sum.
const THETA0: f64 = 1.086_434_811_213_308;

/// Lower incomplete gamma scaled as `gamma(a, x) * x^-a * e^x` (series, a > 0).
fn lower_series_scaled(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..10_000 {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// Continued fraction (modified Lentz) for `Gamma(a, x) * x^-a * e^x`.
fn upper_cf_scaled(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `G(a, x) = Gamma(a, x) * x^{-a}` for `x > 0`.
///
/// Any real `a` is accepted when `x >= a + 1`; below that `a` must be positive.
pub fn upper_gamma_scaled(a: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= a + 1.0 || a <= 0.0 {
        (-x).exp() * upper_cf_scaled(a, x)
    } else {
        gamma(a) * x.powf(-a) - (-x).exp() * lower_series_scaled(a, x)
    }
}

/// Upper incomplete gamma `Gamma(a, x)`.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    upper_gamma_scaled(a, x) * x.powf(a)
}

/// Bound on `sum_{n : |n + y|_inf >= r} exp(-pi |n + y|^2)` for `|y_k| <= 1/2`.
fn gaussian_shell_tail(dim: usize, r: f64) -> f64 {
    let one_axis = 2.0 * (-PI * r * r).exp() / (1.0 - (-2.0 * PI * r).exp());
    dim as f64 * THETA0.powi(dim as i32 - 1) * one_axis
}

/// Evaluator for `S(y) = sum_{n in Z^d, n + y != 0} |n + y|^{-s}`, `s > d`.
#[derive(Debug, Clone)]
pub struct LatticePowerSum {
    dim: usize,
    s: f64,
    radius: i64,
    prefactor: f64,
    // reciprocal vectors k != 0 in the cube, with G((d-s)/2, pi |k|^2)
    recip: Vec<([i64; 3], f64)>,
    truncation: f64,
}

impl LatticePowerSum {
    pub fn new(dim: usize, s: f64) -> Self {
        assert!((1..=3).contains(&dim) && s > dim as f64);
        let a = s / 2.0;
        let mut radius = 2i64;
        let truncation = loop {
            let r = radius as f64 + 0.5;
            let c_real = if a <= 1.0 {
                1.0
            } else {
                1.0 / (1.0 - (a - 1.0) / (PI * r * r)).max(1e-3)
            };
            let real = c_real * gaussian_shell_tail(dim, r) / (PI * r * r);
            let rk = radius as f64 + 1.0;
            let recip = gaussian_shell_tail(dim, rk) / (PI * rk * rk);
            let bound = real + recip;
            if bound < 1e-24 || radius >= 8 {
                break bound;
            }
            radius += 1;
        };
        let b = (dim as f64 - s) / 2.0;
        let mut recip = Vec::new();
        for_each_cube_point(dim, radius, |k| {
            let k2: i64 = k.iter().map(|v| v * v).sum();
            if k2 != 0 {
                recip.push((*k, upper_gamma_scaled(b, PI * k2 as f64)));
            }
        });
        Self {
            dim,
            s,
            radius,
            prefactor: PI.powf(a) / gamma(a),
            recip,
            truncation,
        }
    }

    /// Value and absolute error bound for the shift `num / den` (componentwise).
    ///
    /// When the shift is integral the singular term `n = -y` is excluded.
    pub fn eval_rational(&self, num: &[i64], den: i64) -> (f64, f64) {
        assert_eq!(num.len(), self.dim);
        assert!(den > 0);
        let mut y = [0.0f64; 3];
        let mut integral = true;
        for (k, &v) in num.iter().enumerate() {
            let mut r = v.rem_euclid(den);
            if 2 * r > den {
                r -= den;
            }
            if r != 0 {
                integral = false;
            }
            y[k] = r as f64 / den as f64;
        }
        self.eval_reduced(&y[..self.dim], integral)
    }

    /// Sum over all `n != 0` (the single-site sum of the unit lattice).
    pub fn eval_origin(&self) -> (f64, f64) {
        self.eval_reduced(&[0.0; 3][..self.dim], true)
    }

    fn eval_reduced(&self, y: &[f64], integral: bool) -> (f64, f64) {
        let a = self.s / 2.0;
        let mut acc = NeumaierSum::new();
        for_each_cube_point(self.dim, self.radius, |n| {
            let mut r2 = 0.0;
            let mut zero = true;
            for k in 0..self.dim {
                let t = n[k] as f64 + y[k];
                if n[k] != 0 {
                    zero = false;
                }
                r2 += t * t;
            }
            if integral && zero {
                return;
            }
            acc.add(upper_gamma_scaled(a, PI * r2));
        });
        for (k, g) in &self.recip {
            let phase: f64 = (0..self.dim).map(|i| k[i] as f64 * y[i]).sum();
            acc.add((2.0 * PI * phase).cos() * g);
        }
        let d = self.dim as f64;
        acc.add(2.0 / (self.s - d));
        if integral {
            acc.add(-2.0 / self.s);
        }
        let bracket = acc.value();
        let value = self.prefactor * bracket;
        let err = self.prefactor * (self.truncation + 64.0 * f64::EPSILON * acc.abs_total())
            + 8.0 * f64::EPSILON * value.abs();
        (value, err)
    }
}

pub(crate) fn for_each_cube_point(dim: usize, radius: i64, mut f: impl FnMut(&[i64; 3])) {
    let r = radius;
    let mut p = [0i64; 3];
    match dim {
        1 => {
            for a in -r..=r {
                p[0] = a;
                f(&p);
            }
        }
        2 => {
            for a in -r..=r {
                for b in -r..=r {
                    p[0] = a;
                    p[1] = b;
                    f(&p);
                }
            }
        }
        3 => {
            for a in -r..=r {
                for b in -r..=r {
                    for c in -r..=r {
                        p = [a, b, c];
                        f(&p);
                    }
                }
            }
        }
        _ => unreachable!("dimension must be 1..=3"),
    }
}
