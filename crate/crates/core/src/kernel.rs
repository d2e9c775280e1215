//! Model parameters and the power-law coupling `K_ij = kappa |i - j|^-s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::gauss_legendre;
use crate::special::LatticePowerSum;

fn one() -> f64 {
    1.0
}

/// Parameters of the Hamiltonian
/// `H = -J sum_<ij> s_i s_j + 1/2 sum_ij K_ij s_i s_j - h sum_i s_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "dim")]
    pub d: usize,
    pub s: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl ModelParams {
    pub fn new(d: usize, s: f64, j: f64) -> Self {
        Self {
            d,
            s,
            j,
            kappa: 1.0,
            h: 0.0,
            beta: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_field(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.d, self.s)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return domain(format!("beta must be positive and finite, got {}", self.beta));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return domain(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        if !self.j.is_finite() || !self.h.is_finite() {
            return domain("J and h must be finite");
        }
        Ok(())
    }

    pub fn kernel(&self) -> PowerLaw {
        PowerLaw {
            dim: self.d,
            s: self.s,
            kappa: self.kappa,
        }
    }
}

pub(crate) fn check_exponent(d: usize, s: f64) -> Result<()> {
    if !(1..=3).contains(&d) {
        return domain(format!("dimension must be 1, 2 or 3, got {d}"));
    }
    if !(s > d as f64) || !s.is_finite() {
        return domain(format!("the lattice sum diverges unless s > d (s = {s}, d = {d})"));
    }
    Ok(())
}

/// A value together with a bound on what was left out: the true quantity
/// lies in `[value, value + tail]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub value: f64,
    pub tail: f64,
}

impl TailBound {
    pub fn exact(value: f64) -> Self {
        Self { value, tail: 0.0 }
    }

    /// Bracket `[lo, hi]`.
    pub fn from_bracket(lo: f64, hi: f64) -> Self {
        debug_assert!(hi >= lo);
        Self {
            value: lo,
            tail: hi - lo,
        }
    }

    /// Symmetric error bar `center +- err`.
    pub fn from_center(center: f64, err: f64) -> Self {
        Self {
            value: center - err,
            tail: 2.0 * err,
        }
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail
    }

    pub fn midpoint(&self) -> f64 {
        self.value + 0.5 * self.tail
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.value && x <= self.upper()
    }

    pub fn overlaps(&self, other: &TailBound) -> bool {
        self.value <= other.upper() && other.value <= self.upper()
    }

    pub fn scale(&self, c: f64) -> Self {
        if c >= 0.0 {
            Self {
                value: c * self.value,
                tail: c * self.tail,
            }
        } else {
            Self {
                value: c * self.upper(),
                tail: -c * self.tail,
            }
        }
    }
}

/// Squared Euclidean length of an integer displacement.
#[inline]
pub fn norm_sq(delta: &[i64]) -> i64 {
    delta.iter().map(|v| v * v).sum()
}

/// Translation-invariant pair coupling on `Z^d`.
///
/// The brute-force oracles only see this trait, so a deliberately broken
/// kernel can be fed to them to check that they notice.
pub trait PairKernel: Sync {
    fn dim(&self) -> usize;
    /// Decay exponent used for integral tail bounds.
    fn exponent(&self) -> f64;
    /// Coefficient `c` in the asymptotic form `c |z|^-s`.
    fn amplitude(&self) -> f64;
    /// Coupling at squared distance `r2 > 0`.
    fn at_sq(&self, r2: i64) -> f64;
    /// `sum_{z != 0} K(z)` with a rigorous bracket.
    fn site_sum(&self, tol: f64) -> Result<TailBound>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub dim: usize,
    pub s: f64,
    pub kappa: f64,
}

impl PairKernel for PowerLaw {
    fn dim(&self) -> usize {
        self.dim
    }

    fn exponent(&self) -> f64 {
        self.s
    }

    fn amplitude(&self) -> f64 {
        self.kappa
    }

    #[inline]
    fn at_sq(&self, r2: i64) -> f64 {
        if r2 == 0 {
            0.0
        } else {
            self.kappa * (-0.5 * self.s * (r2 as f64).ln()).exp()
        }
    }

    fn site_sum(&self, tol: f64) -> Result<TailBound> {
        lattice_site_sum(self.dim, self.s, self.kappa, tol)
    }
}

fn lattice_site_sum(d: usize, s: f64, kappa: f64, tol: f64) -> Result<TailBound> {
    check_exponent(d, s)?;
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let (v, err) = LatticePowerSum::new(d, s).eval_origin();
    let bound = TailBound::from_center(v, err).scale(kappa);
    if bound.tail > tol {
        return Err(Error::ToleranceNotMet {
            what: "single-site sum".into(),
            requested: tol,
            best: bound,
        });
    }
    Ok(bound)
}

/// `kappa |i - j|^-s`, and exactly zero on the diagonal.
pub fn coupling(i: &[i64], j: &[i64], p: &ModelParams) -> f64 {
    debug_assert_eq!(i.len(), j.len());
    let r2: i64 = i.iter().zip(j).map(|(a, b)| (a - b) * (a - b)).sum();
    p.kernel().at_sq(r2)
}

/// `eps_s = sum_{j != 0} K_0j`.
pub fn single_site_sum(p: &ModelParams, tol: f64) -> Result<TailBound> {
    lattice_site_sum(p.d, p.s, p.kappa, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImagePolicy {
    /// Sum over every periodic image.
    #[default]
    FullImages,
    /// Nearest image only. Approximate: biases long-range energies.
    MinimumImage,
}

/// Periodized coupling `sum_n kappa |i - j + N n|^-s` on the torus of side `N`.
pub fn torus_coupling(
    i: &[i64],
    j: &[i64],
    side: usize,
    p: &ModelParams,
    tol: f64,
    policy: ImagePolicy,
) -> Result<TailBound> {
    check_exponent(p.d, p.s)?;
    if side < 3 {
        return domain(format!("torus side must be at least 3, got {side}"));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let n = side as i64;
    let delta: Vec<i64> = i.iter().zip(j).map(|(a, b)| a - b).collect();
    match policy {
        ImagePolicy::MinimumImage => {
            let m: Vec<i64> = delta
                .iter()
                .map(|&v| {
                    let r = v.rem_euclid(n);
                    if 2 * r > n {
                        r - n
                    } else {
                        r
                    }
                })
                .collect();
            Ok(TailBound::exact(p.kernel().at_sq(norm_sq(&m))))
        }
        ImagePolicy::FullImages => {
            let (v, err) = LatticePowerSum::new(p.d, p.s).eval_rational(&delta, n);
            let scale = p.kappa * (n as f64).powf(-p.s);
            let bound = TailBound::from_center(v, err).scale(scale);
            if bound.tail > tol {
                return Err(Error::ToleranceNotMet {
                    what: "torus coupling".into(),
                    requested: tol,
                    best: bound,
                });
            }
            Ok(bound)
        }
    }
}

/// Periodized kernel tabulated by displacement on the torus of side `N`.
#[derive(Debug, Clone)]
pub struct PeriodicKernel {
    pub dim: usize,
    pub side: usize,
    /// `K^per(delta)` in row-major order over `delta in [0, N)^d`; entry 0
    /// holds the self-image sum `sum_{n != 0} K(N n)`.
    pub values: Vec<f64>,
    /// Largest absolute error over the table.
    pub max_error: f64,
    pub policy: ImagePolicy,
}

impl PeriodicKernel {
    pub fn new(p: &ModelParams, side: usize, policy: ImagePolicy) -> Result<Self> {
        use rayon::prelude::*;
        check_exponent(p.d, p.s)?;
        if side < 3 {
            return domain(format!("torus side must be at least 3, got {side}"));
        }
        let d = p.d;
        let n = side as i64;
        let len = side.pow(d as u32);
        let lattice = LatticePowerSum::new(d, p.s);
        let scale = p.kappa * (n as f64).powf(-p.s);
        let kernel = p.kernel();
        let entries: Vec<(f64, f64)> = (0..len)
            .into_par_iter()
            .map(|idx| {
                let delta = unflatten(idx, side, d);
                match policy {
                    ImagePolicy::FullImages => {
                        let (v, e) = lattice.eval_rational(&delta[..d], n);
                        (scale * v, scale * e)
                    }
                    ImagePolicy::MinimumImage => {
                        let m: Vec<i64> = delta[..d]
                            .iter()
                            .map(|&v| if 2 * v > n { v - n } else { v })
                            .collect();
                        (kernel.at_sq(norm_sq(&m)), 0.0)
                    }
                }
            })
            .collect();
        let max_error = entries.iter().map(|e| e.1).fold(0.0, f64::max);
        Ok(Self {
            dim: d,
            side,
            values: entries.into_iter().map(|e| e.0).collect(),
            max_error,
            policy,
        })
    }

    pub fn self_term(&self) -> f64 {
        self.values[0]
    }

    /// `sum_{j != i} K^per(i - j)` plus the self-image term.
    pub fn periodized_site_sum(&self) -> f64 {
        crate::summation::neumaier_sum(self.values.iter().copied())
    }
}

pub(crate) fn unflatten(mut idx: usize, side: usize, d: usize) -> [i64; 3] {
    let mut out = [0i64; 3];
    for k in (0..d).rev() {
        out[k] = (idx % side) as i64;
        idx /= side;
    }
    out
}

/// Cell-averaged coupling: the integral of `kappa |x - y|^-s` over the unit
/// cells centred at `i` and `j`, by a tensor Gauss-Legendre rule of order
/// `quad_order` in each of the `2d` coordinates.
pub fn smeared_coupling(i: &[i64], j: &[i64], p: &ModelParams, quad_order: usize) -> Result<f64> {
    check_exponent(p.d, p.s)?;
    let d = p.d;
    let delta: Vec<f64> = j.iter().zip(i).map(|(a, b)| (a - b) as f64).collect();
    let r2: f64 = delta.iter().map(|v| v * v).sum();
    if r2 <= d as f64 {
        return domain("smeared coupling needs cells that do not touch (|i - j| > sqrt(d))");
    }
    if quad_order == 0 {
        return domain("quadrature order must be positive");
    }
    let (x, w) = gauss_legendre(quad_order);
    // nodes on [-1/2, 1/2]
    let nodes: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    let q = quad_order;
    let total = q.pow(2 * d as u32);
    let mut acc = crate::summation::NeumaierSum::new();
    let mut idx = vec![0usize; 2 * d];
    for _ in 0..total {
        let mut wt = 1.0;
        let mut dist2 = 0.0;
        for k in 0..d {
            let xk = nodes[idx[k]];
            let yk = nodes[idx[d + k]];
            wt *= weights[idx[k]] * weights[idx[d + k]];
            let t = delta[k] + yk - xk;
            dist2 += t * t;
        }
        acc.add(wt * dist2.powf(-0.5 * p.s));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < q {
                break;
            }
            *slot = 0;
        }
    }
    Ok(p.kappa * acc.value())
}

/// Provable constant in `|K_ij - K_i0j0| <= C (l/a) K_i0j0` for sites of two
/// blocks of side `l` whose reference pair is at distance `a >= 4 sqrt(d) l`.
///
/// With `x = 2 sqrt(d) l / a <= 1/2`, convexity of `(1 - x)^-s` gives
/// `(1 - x)^-s - 1 <= 2 (2^s - 1) x`.
pub fn block_averaging_constant(d: usize, s: f64) -> f64 {
    4.0 * (d as f64).sqrt() * (2f64.powf(s) - 1.0)
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}
