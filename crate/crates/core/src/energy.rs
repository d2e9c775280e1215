//! Spin configurations, the Hamiltonian and its incremental updates.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fft::circular_convolution;
use crate::geometry::{Region, Site};
use crate::kernel::{unflatten, ImagePolicy, ModelParams, PairKernel, PeriodicKernel};
use crate::summation::NeumaierSum;

/// Spin value imposed outside a fixed box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exterior {
    Plus,
    Minus,
    /// No exterior: the box is isolated.
    Free,
}

impl Exterior {
    pub fn spin(self) -> f64 {
        match self {
            Exterior::Plus => 1.0,
            Exterior::Minus => -1.0,
            Exterior::Free => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Torus,
    /// Box `[0, N)^d` inside a uniform exterior. The exterior long-range
    /// field is summed in closed form from the single-site sum, so there is
    /// no truncation radius.
    Fixed(Exterior),
}

/// `+-1` spins on `[0, N)^d`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    pub dim: usize,
    pub side: usize,
    pub spins: Vec<i8>,
    pub boundary: Boundary,
}

impl SpinConfig {
    pub fn uniform(dim: usize, side: usize, boundary: Boundary, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        Self {
            dim,
            side,
            spins: vec![value; side.pow(dim as u32)],
            boundary,
        }
    }

    pub fn random<R: Rng>(dim: usize, side: usize, boundary: Boundary, rng: &mut R) -> Self {
        let spins = (0..side.pow(dim as u32))
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        Self {
            dim,
            side,
            spins,
            boundary,
        }
    }

    pub fn from_spins(dim: usize, side: usize, boundary: Boundary, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != side.pow(dim as u32) {
            return domain(format!("expected {} spins, got {}", side.pow(dim as u32), spins.len()));
        }
        if spins.iter().any(|&v| v != 1 && v != -1) {
            return domain("spins must be +1 or -1");
        }
        Ok(Self {
            dim,
            side,
            spins,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn index(&self, site: &Site) -> usize {
        (0..self.dim).fold(0usize, |acc, k| acc * self.side + site[k] as usize)
    }

    pub fn site(&self, idx: usize) -> Site {
        unflatten(idx, self.side, self.dim)
    }

    pub fn spin_sum(&self) -> i64 {
        self.spins.iter().map(|&v| v as i64).sum()
    }

    pub fn magnetization(&self) -> f64 {
        self.spin_sum() as f64 / self.len() as f64
    }

    pub fn flip_all(&mut self) {
        for v in &mut self.spins {
            *v = -*v;
        }
    }
}

/// Precomputed couplings for one `(params, N, boundary)`, shared read-only
/// between chains.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub params: ModelParams,
    pub dim: usize,
    pub side: usize,
    pub boundary: Boundary,
    /// Coupling by displacement over `[0, N)^d`: periodized (index taken mod
    /// `N`) on the torus, the open kernel at `|delta_k|` for a fixed box.
    table: Vec<f64>,
    /// `sum_{j outside} K_ij sigma_ext` per site.
    ext_long: Vec<f64>,
    /// `sum_{j outside, nearest neighbour} sigma_ext` per site.
    ext_nn: Vec<f64>,
    /// In-box nearest neighbours (each bond appears once per endpoint).
    neighbors: Vec<Vec<u32>>,
    /// Largest error in any tabulated coupling.
    pub max_error: f64,
}

impl Interaction {
    pub fn new(p: &ModelParams, side: usize, boundary: Boundary) -> Result<Self> {
        Self::with_policy(p, side, boundary, ImagePolicy::FullImages)
    }

    pub fn with_policy(p: &ModelParams, side: usize, boundary: Boundary, policy: ImagePolicy) -> Result<Self> {
        crate::kernel::check_exponent(p.d, p.s)?;
        if !(p.kappa >= 0.0) || !p.j.is_finite() || !p.h.is_finite() {
            return domain("kappa must be nonnegative and J, h finite");
        }
        let d = p.d;
        if side < 1 {
            return domain("box side must be positive");
        }
        if boundary == Boundary::Torus && side < 3 {
            return domain(format!("torus side must be at least 3, got {side}"));
        }
        let len = side.pow(d as u32);
        let n = side as i64;
        let (table, max_error) = match boundary {
            Boundary::Torus => {
                let pk = PeriodicKernel::new(p, side, policy)?;
                (pk.values, pk.max_error)
            }
            Boundary::Fixed(_) => {
                let k = p.kernel();
                let t = (0..len)
                    .map(|idx| {
                        let delta = unflatten(idx, side, d);
                        k.at_sq(crate::kernel::norm_sq(&delta[..d]))
                    })
                    .collect();
                (t, 0.0)
            }
        };
        let mut neighbors = vec![Vec::with_capacity(2 * d); len];
        let mut ext_nn = vec![0.0; len];
        for (idx, nb) in neighbors.iter_mut().enumerate() {
            let s = unflatten(idx, side, d);
            for k in 0..d {
                for dx in [-1i64, 1] {
                    let mut t = s;
                    t[k] += dx;
                    if t[k] < 0 || t[k] >= n {
                        match boundary {
                            Boundary::Torus => t[k] = t[k].rem_euclid(n),
                            Boundary::Fixed(ext) => {
                                ext_nn[idx] += ext.spin();
                                continue;
                            }
                        }
                    }
                    let j = (0..d).fold(0usize, |acc, m| acc * side + t[m] as usize);
                    nb.push(j as u32);
                }
            }
        }
        let mut inter = Self {
            params: *p,
            dim: d,
            side,
            boundary,
            table,
            ext_long: vec![0.0; len],
            ext_nn,
            neighbors,
            max_error,
        };
        if let Boundary::Fixed(ext) = boundary {
            if ext != Exterior::Free && p.kappa > 0.0 {
                // sum over all j != i minus the part inside the box
                let eps = p.kernel().site_sum(f64::MAX)?;
                let ones = SpinConfig::uniform(d, side, boundary, 1);
                let inside = inter.box_field(&ones);
                inter.ext_long = inside.iter().map(|v| ext.spin() * (eps.midpoint() - v)).collect();
                inter.max_error = inter.max_error.max(eps.tail);
            }
        }
        Ok(inter)
    }

    /// Same couplings in a different external field.
    pub fn with_field(&self, h: f64) -> Self {
        let mut out = self.clone();
        out.params.h = h;
        out
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Coupling between box sites `i` and `j` (excluding the torus
    /// self-image term when `i == j`).
    #[inline]
    pub fn coupling(&self, i: &Site, j: &Site) -> f64 {
        if i == j {
            return 0.0;
        }
        self.table[self.displacement_index(i, j)]
    }

    #[inline]
    fn displacement_index(&self, i: &Site, j: &Site) -> usize {
        let n = self.side as i64;
        let mut idx = 0usize;
        for k in 0..self.dim {
            let t = match self.boundary {
                Boundary::Torus => (j[k] - i[k]).rem_euclid(n),
                Boundary::Fixed(_) => (j[k] - i[k]).abs(),
            };
            idx = idx * self.side + t as usize;
        }
        idx
    }

    /// `sum_{n != 0} K(N n)`, the coupling of a torus site to its own images.
    pub fn self_term(&self) -> f64 {
        match self.boundary {
            Boundary::Torus => self.table[0],
            Boundary::Fixed(_) => 0.0,
        }
    }

    pub fn neighbors(&self, idx: usize) -> &[u32] {
        &self.neighbors[idx]
    }

    pub fn exterior_field(&self, idx: usize) -> f64 {
        self.ext_long[idx]
    }

    pub fn exterior_neighbors(&self, idx: usize) -> f64 {
        self.ext_nn[idx]
    }

    /// `sum_{j in box, j != i} K_ij sigma_j` for every `i`, by FFT.
    pub fn box_field(&self, c: &SpinConfig) -> Vec<f64> {
        let d = self.dim;
        let n = self.side;
        let spins: Vec<f64> = c.spins.iter().map(|&v| v as f64).collect();
        match self.boundary {
            Boundary::Torus => {
                let shape = vec![n; d];
                let conv = circular_convolution(&self.table, &spins, &shape);
                conv.iter().zip(&spins).map(|(v, s)| v - self.table[0] * s).collect()
            }
            Boundary::Fixed(_) => {
                let m = 2 * n;
                let shape = vec![m; d];
                let total = m.pow(d as u32);
                let mut kp = vec![0.0; total];
                let mut vp = vec![0.0; total];
                for idx in 0..total {
                    let t = unflatten(idx, m, d);
                    let mut src = 0usize;
                    let mut inside = true;
                    let mut in_box = 0usize;
                    for k in 0..d {
                        let v = t[k] as usize;
                        let delta = if v < n { v } else { m - v };
                        if delta >= n {
                            inside = false;
                        }
                        src = src * n + delta.min(n - 1);
                        if v >= n {
                            in_box = usize::MAX;
                        } else if in_box != usize::MAX {
                            in_box = in_box * n + v;
                        }
                    }
                    if inside {
                        kp[idx] = self.table[src];
                    }
                    if in_box != usize::MAX {
                        vp[idx] = spins[in_box];
                    }
                }
                let conv = circular_convolution(&kp, &vp, &shape);
                (0..c.len())
                    .map(|i| {
                        let s = unflatten(i, n, d);
                        let idx = (0..d).fold(0usize, |acc, k| acc * m + s[k] as usize);
                        conv[idx]
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub ferro: f64,
    pub antiferro: f64,
    pub field: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(ferro: f64, antiferro: f64, field: f64) -> Self {
        Self {
            ferro,
            antiferro,
            field,
            total: ferro + antiferro + field,
        }
    }
}

fn check_compatible(c: &SpinConfig, inter: &Interaction) -> Result<()> {
    if c.dim != inter.dim || c.side != inter.side || c.boundary != inter.boundary {
        return domain("configuration does not match the interaction tables");
    }
    Ok(())
}

fn ferro_and_field(c: &SpinConfig, inter: &Interaction) -> (f64, f64) {
    let p = &inter.params;
    let mut bonds = NeumaierSum::new();
    for (i, &si) in c.spins.iter().enumerate() {
        let si = si as f64;
        let mut local = 0.0;
        for &j in inter.neighbors(i) {
            local += c.spins[j as usize] as f64;
        }
        // in-box bonds are seen from both ends
        bonds.add(0.5 * si * local + si * inter.exterior_neighbors(i));
    }
    (-p.j * bonds.value(), -p.h * c.spin_sum() as f64)
}

/// The Hamiltonian by literal double summation over site pairs.
pub fn total_energy_direct(c: &SpinConfig, inter: &Interaction) -> Result<EnergyBreakdown> {
    check_compatible(c, inter)?;
    let (ferro, field) = ferro_and_field(c, inter);
    let mut af = NeumaierSum::new();
    let sites: Vec<Site> = (0..c.len()).map(|i| c.site(i)).collect();
    for (i, si) in sites.iter().enumerate() {
        let mut row = NeumaierSum::new();
        for (j, sj) in sites.iter().enumerate() {
            if i != j {
                row.add(inter.coupling(si, sj) * c.spins[j] as f64);
            }
        }
        let s = c.spins[i] as f64;
        af.add(0.5 * s * row.value());
        af.add(0.5 * inter.self_term());
        af.add(s * inter.exterior_field(i));
    }
    Ok(EnergyBreakdown::new(ferro, af.value(), field))
}

/// The Hamiltonian with the long-range part as an FFT circular convolution.
pub fn total_energy_fast(c: &SpinConfig, inter: &Interaction) -> Result<EnergyBreakdown> {
    check_compatible(c, inter)?;
    if c.boundary != Boundary::Torus {
        return domain("the FFT energy path needs a torus");
    }
    let (ferro, field) = ferro_and_field(c, inter);
    let phi = inter.box_field(c);
    let mut af = NeumaierSum::new();
    for (i, &s) in c.spins.iter().enumerate() {
        af.add(0.5 * s as f64 * phi[i]);
    }
    af.add(0.5 * inter.self_term() * c.len() as f64);
    Ok(EnergyBreakdown::new(ferro, af.value(), field))
}

/// Energy from the cached local fields, `O(N^d)`.
pub fn energy_from_cache(c: &SpinConfig, cache: &LocalFieldCache, inter: &Interaction) -> EnergyBreakdown {
    let p = &inter.params;
    let mut ferro = NeumaierSum::new();
    let mut af = NeumaierSum::new();
    for (i, &s) in c.spins.iter().enumerate() {
        let s = s as f64;
        let ext_nn = inter.exterior_neighbors(i);
        ferro.add(-p.j * s * (0.5 * (cache.nn[i] - ext_nn) + ext_nn));
        let ext = inter.exterior_field(i);
        af.add(s * (0.5 * (cache.phi[i] - ext) + ext));
    }
    af.add(0.5 * inter.self_term() * c.len() as f64);
    EnergyBreakdown::new(ferro.value(), af.value(), -p.h * c.spin_sum() as f64)
}

/// Per-site fields `phi_i = sum_{j != i} K_ij sigma_j` (including the
/// exterior) and nearest-neighbour sums `nn_i` (including exterior bonds).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFieldCache {
    pub phi: Vec<f64>,
    pub nn: Vec<f64>,
}

impl LocalFieldCache {
    pub fn new(c: &SpinConfig, inter: &Interaction) -> Result<Self> {
        check_compatible(c, inter)?;
        let mut phi = inter.box_field(c);
        for (i, v) in phi.iter_mut().enumerate() {
            *v += inter.exterior_field(i);
        }
        let nn = (0..c.len())
            .map(|i| {
                inter.neighbors(i).iter().map(|&j| c.spins[j as usize] as f64).sum::<f64>()
                    + inter.exterior_neighbors(i)
            })
            .collect();
        Ok(Self { phi, nn })
    }

    /// Largest deviation from a fresh recomputation.
    pub fn deviation(&self, c: &SpinConfig, inter: &Interaction) -> Result<f64> {
        let fresh = Self::new(c, inter)?;
        let dphi = self.phi.iter().zip(&fresh.phi).map(|(a, b)| (a - b).abs());
        let dnn = self.nn.iter().zip(&fresh.nn).map(|(a, b)| (a - b).abs());
        Ok(dphi.chain(dnn).fold(0.0, f64::max))
    }

    /// Fails with [`Error::StaleCache`] if the cache drifted beyond `1e-9`.
    pub fn audit(&self, c: &SpinConfig, inter: &Interaction) -> Result<()> {
        let deviation = self.deviation(c, inter)?;
        if deviation > 1e-9 {
            return Err(Error::StaleCache { deviation });
        }
        Ok(())
    }
}

/// `E(sigma with site flipped) - E(sigma) = 2 s (J nn - phi + h)`.
#[inline]
pub fn delta_flip(c: &SpinConfig, cache: &LocalFieldCache, inter: &Interaction, site: usize) -> f64 {
    let p = &inter.params;
    let s = c.spins[site] as f64;
    2.0 * s * (p.j * cache.nn[site] - cache.phi[site] + p.h)
}

/// Flips `site`, updates every cached field, and returns the energy change.
pub fn apply_flip(c: &mut SpinConfig, cache: &mut LocalFieldCache, inter: &Interaction, site: usize) -> f64 {
    let de = delta_flip(c, cache, inter, site);
    let old = c.spins[site] as f64;
    c.spins[site] = -c.spins[site];
    let change = -2.0 * old;
    for &j in inter.neighbors(site) {
        cache.nn[j as usize] += change;
    }
    let n = inter.side;
    let d = inter.dim;
    let origin = c.site(site);
    let table = &inter.table;
    let phi = &mut cache.phi;
    let torus = inter.boundary == Boundary::Torus;
    // displacement along the last axis, as a run of table offsets
    let last_row = |row_base: usize, phi_row: &mut [f64]| {
        let i_last = origin[d - 1] as usize;
        if torus {
            // j >= i: t = j - i; j < i: t = N - i + j
            for (t, v) in phi_row[i_last..].iter_mut().enumerate() {
                *v += change * table[row_base + t];
            }
            for (j, v) in phi_row[..i_last].iter_mut().enumerate() {
                *v += change * table[row_base + n - i_last + j];
            }
        } else {
            for (t, v) in phi_row[i_last..].iter_mut().enumerate() {
                *v += change * table[row_base + t];
            }
            for (j, v) in phi_row[..i_last].iter_mut().enumerate() {
                *v += change * table[row_base + i_last - j];
            }
        }
    };
    let offset = |a: usize, b: usize| -> usize {
        if torus {
            (b + n - a) % n
        } else {
            a.abs_diff(b)
        }
    };
    match d {
        1 => last_row(0, &mut phi[..]),
        2 => {
            let i0 = origin[0] as usize;
            for j0 in 0..n {
                let base = offset(i0, j0) * n;
                last_row(base, &mut phi[j0 * n..(j0 + 1) * n]);
            }
        }
        _ => {
            let (i0, i1) = (origin[0] as usize, origin[1] as usize);
            for j0 in 0..n {
                for j1 in 0..n {
                    let base = (offset(i0, j0) * n + offset(i1, j1)) * n;
                    let start = (j0 * n + j1) * n;
                    last_row(base, &mut phi[start..start + n]);
                }
            }
        }
    }
    // the site's own entry picked up the self-image term; undo it
    phi[site] -= change * table[0];
    de
}

/// Centre offset used to place `Lambda_L` inside the box `[0, N)^d`.
pub fn box_center(side: usize) -> i64 {
    (side / 2) as i64
}

/// `sum_{i in Lambda_L, j in box \ Lambda_L} K_ij s_i s_j` with the open
/// kernel, `Lambda_L` centred in the box; a fixed exterior adds its exact
/// contribution from outside the box.
///
/// On the torus the inner box must fit in half the side, and `j` ranges
/// over the unwrapped box around the centre.
pub fn interaction_observable(c: &SpinConfig, inter: &Interaction, inner_l: usize) -> Result<f64> {
    check_compatible(c, inter)?;
    let n = c.side;
    let width = 2 * inner_l + 1;
    match c.boundary {
        Boundary::Torus => {
            if 2 * width > n {
                return domain(format!("inner box of side {width} needs a torus of side >= {}", 2 * width));
            }
        }
        Boundary::Fixed(_) => {
            if width > n {
                return domain("inner box does not fit in the configured box");
            }
        }
    }
    let d = c.dim;
    let k = inter.params.kernel();
    let ctr = box_center(n);
    let l = inner_l as i64;
    let inside = |s: &Site| (0..d).all(|m| (s[m] - ctr).abs() <= l);
    let sites: Vec<Site> = (0..c.len()).map(|i| c.site(i)).collect();
    let inner: Vec<usize> = (0..c.len()).filter(|&i| inside(&sites[i])).collect();
    let outer: Vec<usize> = (0..c.len()).filter(|&i| !inside(&sites[i])).collect();
    let mut acc = NeumaierSum::new();
    for &i in &inner {
        let mut row = NeumaierSum::new();
        for &j in &outer {
            let r2: i64 = (0..d).map(|m| (sites[i][m] - sites[j][m]).pow(2)).sum();
            row.add(k.at_sq(r2) * c.spins[j] as f64);
        }
        let s = c.spins[i] as f64;
        acc.add(s * row.value());
        acc.add(s * inter.exterior_field(i));
    }
    Ok(acc.value())
}

/// `E(sigma') - E(sigma)` where `sigma'` has every spin of `region` reversed.
pub fn droplet_flip_delta(c: &SpinConfig, inter: &Interaction, region: &Region) -> Result<f64> {
    check_compatible(c, inter)?;
    if region.dim() != c.dim {
        return domain("region dimension differs from the configuration");
    }
    region.ensure_connected()?;
    let n = c.side as i64;
    let d = c.dim;
    for s in region.sites() {
        if (0..d).any(|k| s[k] < 0 || s[k] >= n) {
            return domain("region leaves the box");
        }
    }
    let p = &inter.params;
    let mut in_region = vec![false; c.len()];
    for s in region.sites() {
        in_region[c.index(s)] = true;
    }
    let members: Vec<usize> = (0..c.len()).filter(|&i| in_region[i]).collect();
    let mut lr = NeumaierSum::new();
    let mut nn = NeumaierSum::new();
    let mut field = 0.0;
    for &i in &members {
        let si = c.site(i);
        let s = c.spins[i] as f64;
        // couplings to every site outside the region
        let mut row = NeumaierSum::new();
        for j in 0..c.len() {
            if !in_region[j] {
                row.add(inter.coupling(&si, &c.site(j)) * c.spins[j] as f64);
            }
        }
        row.add(inter.exterior_field(i));
        lr.add(-2.0 * s * row.value());
        for &j in inter.neighbors(i) {
            if !in_region[j as usize] {
                nn.add(2.0 * p.j * s * c.spins[j as usize] as f64);
            }
        }
        nn.add(2.0 * p.j * s * inter.exterior_neighbors(i));
        field += 2.0 * p.h * s;
    }
    Ok(lr.value() + nn.value() + field)
}

/// Mean spin over the centred block of `block_side^d` sites.
pub fn block_magnetization(c: &SpinConfig, block_side: usize) -> Result<f64> {
    if block_side == 0 || block_side > c.side {
        return domain(format!("block side {block_side} must lie in 1..={}", c.side));
    }
    let start = ((c.side - block_side) / 2) as i64;
    let end = start + block_side as i64;
    let mut sum = 0i64;
    for (i, &v) in c.spins.iter().enumerate() {
        let s = c.site(i);
        if (0..c.dim).all(|k| s[k] >= start && s[k] < end) {
            sum += v as i64;
        }
    }
    Ok(sum as f64 / (block_side.pow(c.dim as u32)) as f64)
}

/// `S(k) = |sum_j s_j e^{i k.j}|^2 / N^d` on the grid `k = 2 pi m / N`,
/// row-major in `m`.
pub fn structure_factor(c: &SpinConfig) -> Vec<f64> {
    use num_complex::Complex64;
    let shape = vec![c.side; c.dim];
    let mut data: Vec<Complex64> = c.spins.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
    crate::fft::fft_nd(&mut data, &shape, false);
    let norm = 1.0 / c.len() as f64;
    data.iter().map(|z| z.norm_sqr() * norm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructurePeak {
    /// Grid index `m` per axis, folded to `[-N/2, N/2)`.
    pub mode: [i64; 3],
    /// `|k|` with `k = 2 pi m / N`.
    pub k_norm: f64,
    pub value: f64,
}

/// Largest entry of a structure factor; ties resolve to the lowest index.
pub fn structure_peak(sf: &[f64], dim: usize, side: usize) -> StructurePeak {
    let mut best = 0usize;
    for (i, &v) in sf.iter().enumerate() {
        if v > sf[best] + 1e-12 * sf[best].abs() {
            best = i;
        }
    }
    let raw = unflatten(best, side, dim);
    let mut mode = [0i64; 3];
    let n = side as i64;
    for k in 0..dim {
        mode[k] = if 2 * raw[k] >= n { raw[k] - n } else { raw[k] };
    }
    let k_norm = (0..dim)
        .map(|k| (2.0 * std::f64::consts::PI * mode[k] as f64 / side as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    StructurePeak {
        mode,
        k_norm,
        value: sf[best],
    }
}

/// Header line of a checkpoint file, keys in this order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub dim: usize,
    pub side: usize,
    pub s: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub kappa: f64,
    pub h: f64,
    pub beta: f64,
    pub seed: u64,
    pub sweep: u64,
}

impl CheckpointHeader {
    pub fn new(p: &ModelParams, side: usize, seed: u64, sweep: u64) -> Self {
        Self {
            dim: p.d,
            side,
            s: p.s,
            j: p.j,
            kappa: p.kappa,
            h: p.h,
            beta: p.beta,
            seed,
            sweep,
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            d: self.dim,
            s: self.s,
            j: self.j,
            kappa: self.kappa,
            h: self.h,
            beta: self.beta,
        }
    }
}

/// One JSON header line, then one byte per site (`0x01` = +1, `0xFF` = -1).
pub fn write_checkpoint<W: Write>(w: &mut W, header: &CheckpointHeader, c: &SpinConfig) -> Result<()> {
    if header.dim != c.dim || header.side != c.side {
        return Err(Error::Checkpoint("header does not match the configuration".into()));
    }
    let line = serde_json::to_string(header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let bytes: Vec<u8> = c.spins.iter().map(|&v| v as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Reads a checkpoint; the configuration is placed on the torus.
pub fn read_checkpoint<R: BufRead>(r: &mut R) -> Result<(CheckpointHeader, SpinConfig)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end_matches('\n')).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let len = header
        .side
        .checked_pow(header.dim as u32)
        .ok_or_else(|| Error::Checkpoint("size overflow".into()))?;
    let mut bytes = Vec::with_capacity(len);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(Error::Checkpoint(format!("expected {len} spin bytes, found {}", bytes.len())));
    }
    let mut spins = Vec::with_capacity(len);
    for b in bytes {
        spins.push(match b {
            0x01 => 1,
            0xFF => -1,
            other => return Err(Error::Checkpoint(format!("invalid spin byte {other:#04x}"))),
        });
    }
    let c = SpinConfig::from_spins(header.dim, header.side, Boundary::Torus, spins)?;
    Ok((header, c))
}
