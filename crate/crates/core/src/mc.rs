//! Markov-chain sampling and the finite experiments built on it.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{
    apply_flip, block_magnetization, delta_flip, droplet_flip_delta, energy_from_cache, interaction_observable,
    structure_factor, structure_peak, Boundary, EnergyBreakdown, Exterior, Interaction, LocalFieldCache, SpinConfig,
};
use crate::error::{domain, Error, Result};
use crate::geometry::{BoxSpec, Region, Site};
use crate::kernel::{check_exponent, ModelParams, PairKernel, TailBound};
use crate::stats::{halves_agree, jackknife_mean, weighted_line, MIN_BINS};
use crate::summation::derive_seed;
use crate::sums::{power_tail_bracket, region_complement_sum, t_sum};

/// Largest number of spins enumerated exhaustively.
pub const ENUMERATION_CAP: usize = 20;

/// One Markov chain: configuration, cached fields, private RNG stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: SpinConfig,
    pub cache: LocalFieldCache,
    pub rng: ChaCha8Rng,
    pub sweep: u64,
    /// Running total energy, updated by every accepted flip.
    pub energy: f64,
    pub beta: f64,
    pub seed: u64,
    pub accepted: u64,
    inter: Arc<Interaction>,
}

impl ChainState {
    pub fn new(config: SpinConfig, inter: Arc<Interaction>, beta: f64, seed: u64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return domain(format!("beta must be finite and nonnegative, got {beta}"));
        }
        let cache = LocalFieldCache::new(&config, &inter)?;
        let energy = energy_from_cache(&config, &cache, &inter).total;
        Ok(Self {
            config,
            cache,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sweep: 0,
            energy,
            beta,
            seed,
            accepted: 0,
            inter,
        })
    }

    pub fn interaction(&self) -> &Arc<Interaction> {
        &self.inter
    }

    /// Switches to new couplings (e.g. another field) and rebuilds the cache.
    pub fn set_interaction(&mut self, inter: Arc<Interaction>) -> Result<()> {
        self.inter = inter;
        self.resync()
    }

    /// Recomputes the cache and the running energy from scratch.
    pub fn resync(&mut self) -> Result<()> {
        self.cache = LocalFieldCache::new(&self.config, &self.inter)?;
        self.energy = energy_from_cache(&self.config, &self.cache, &self.inter).total;
        Ok(())
    }

    pub fn energy_breakdown(&self) -> EnergyBreakdown {
        energy_from_cache(&self.config, &self.cache, &self.inter)
    }

    /// One Metropolis attempt at `site`; returns whether it was accepted.
    #[inline]
    pub fn attempt(&mut self, site: usize) -> bool {
        let de = delta_flip(&self.config, &self.cache, &self.inter, site);
        let accept = de <= 0.0 || self.rng.gen::<f64>() < (-self.beta * de).exp();
        if accept {
            apply_flip(&mut self.config, &mut self.cache, &self.inter, site);
            self.energy += de;
            self.accepted += 1;
        }
        accept
    }
}

/// `N^d` proposals at uniformly random sites with Metropolis acceptance.
pub fn metropolis_sweep(state: &mut ChainState) {
    let n = state.config.len();
    for _ in 0..n {
        let site = state.rng.gen_range(0..n);
        state.attempt(site);
    }
    state.sweep += 1;
}

/// Observables of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub sweep: u64,
    pub beta: f64,
    pub h: f64,
    pub energy: EnergyBreakdown,
    pub m: f64,
    pub m_abs: f64,
    /// `(block side, m_L)`.
    pub m_blocks: Vec<(usize, f64)>,
    pub t_obs: Option<f64>,
    pub s_peak_k: f64,
    pub s_peak_val: f64,
}

impl MeasurementRecord {
    pub fn csv_header(blocks: &[usize]) -> String {
        let mut cols: Vec<String> = ["sweep", "beta", "h", "energy_total", "energy_ferro", "energy_af", "m", "m_abs"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(blocks.iter().map(|b| format!("mL_{b}")));
        cols.extend(["T_obs", "S_peak_k", "S_peak_val"].iter().map(|s| s.to_string()));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.sweep.to_string(),
            self.beta.to_string(),
            self.h.to_string(),
            self.energy.total.to_string(),
            self.energy.ferro.to_string(),
            self.energy.antiferro.to_string(),
            self.m.to_string(),
            self.m_abs.to_string(),
        ];
        cols.extend(self.m_blocks.iter().map(|(_, v)| v.to_string()));
        cols.push(self.t_obs.map(|v| v.to_string()).unwrap_or_default());
        cols.push(self.s_peak_k.to_string());
        cols.push(self.s_peak_val.to_string());
        cols.join(",")
    }
}

pub fn measure(state: &ChainState, blocks: &[usize], t_inner: Option<usize>) -> Result<MeasurementRecord> {
    let c = &state.config;
    let m = c.magnetization();
    let m_blocks = blocks
        .iter()
        .map(|&b| block_magnetization(c, b).map(|v| (b, v)))
        .collect::<Result<Vec<_>>>()?;
    let t_obs = match t_inner {
        Some(l) => Some(interaction_observable(c, &state.inter, l)?),
        None => None,
    };
    let sf = structure_factor(c);
    let peak = structure_peak(&sf, c.dim, c.side);
    Ok(MeasurementRecord {
        sweep: state.sweep,
        beta: state.beta,
        h: state.inter.params.h,
        energy: state.energy_breakdown(),
        m,
        m_abs: m.abs(),
        m_blocks,
        t_obs,
        s_peak_k: peak.k_norm,
        s_peak_val: peak.value,
    })
}

/// Runs `sweeps` sweeps, measuring every `every` sweeps.
pub fn run_chain(
    state: &mut ChainState,
    sweeps: u64,
    every: u64,
    blocks: &[usize],
    t_inner: Option<usize>,
) -> Result<Vec<MeasurementRecord>> {
    let every = every.max(1);
    let mut out = Vec::new();
    for k in 1..=sweeps {
        metropolis_sweep(state);
        if k % every == 0 {
            out.push(measure(state, blocks, t_inner)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub best: SpinConfig,
    pub best_energy: f64,
    /// `(beta, energy at the end of the stage)`.
    pub trace: Vec<(f64, f64)>,
}

/// Sweeps through a non-decreasing `beta` ladder, keeping the lowest-energy
/// configuration seen after any sweep.
pub fn anneal(state: &mut ChainState, schedule: &[f64], sweeps_per_stage: u64) -> Result<AnnealResult> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] < w[0]) {
        return domain("annealing schedule must be a nonempty non-decreasing beta ladder");
    }
    let mut best = state.config.clone();
    let mut best_energy = state.energy;
    let mut trace = Vec::with_capacity(schedule.len());
    for &beta in schedule {
        state.beta = beta;
        for _ in 0..sweeps_per_stage {
            metropolis_sweep(state);
            if state.energy < best_energy {
                best_energy = state.energy;
                best.clone_from(&state.config);
            }
        }
        trace.push((beta, state.energy));
    }
    // report the best energy recomputed from scratch
    let cache = LocalFieldCache::new(&best, &state.inter)?;
    let best_energy = energy_from_cache(&best, &cache, &state.inter).total;
    Ok(AnnealResult {
        best,
        best_energy,
        trace,
    })
}

/// `min(1, exp((beta_i - beta_j)(E_i - E_j)))`.
pub fn swap_probability(beta_i: f64, beta_j: f64, e_i: f64, e_j: f64) -> f64 {
    ((beta_i - beta_j) * (e_i - e_j)).exp().min(1.0)
}

/// Chains on an increasing `beta` ladder with adjacent configuration swaps.
#[derive(Debug, Clone)]
pub struct ReplicaLadder {
    pub chains: Vec<ChainState>,
    pub attempts: Vec<u64>,
    pub accepts: Vec<u64>,
    rng: ChaCha8Rng,
}

impl ReplicaLadder {
    pub fn new(chains: Vec<ChainState>, seed: u64) -> Result<Self> {
        if chains.len() < 2 {
            return domain("a replica ladder needs at least two chains");
        }
        if chains.windows(2).any(|w| w[1].beta < w[0].beta) {
            return domain("replica betas must be non-decreasing");
        }
        let pairs = chains.len() - 1;
        Ok(Self {
            chains,
            attempts: vec![0; pairs],
            accepts: vec![0; pairs],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sweep_all(&mut self) {
        for c in &mut self.chains {
            metropolis_sweep(c);
        }
    }

    /// Attempts a swap between every adjacent pair, in ladder order.
    pub fn exchange_step(&mut self) {
        for i in 0..self.chains.len() - 1 {
            let (lo, hi) = self.chains.split_at_mut(i + 1);
            let (a, b) = (&mut lo[i], &mut hi[0]);
            let p = swap_probability(a.beta, b.beta, a.energy, b.energy);
            self.attempts[i] += 1;
            if self.rng.gen::<f64>() < p {
                std::mem::swap(&mut a.config, &mut b.config);
                std::mem::swap(&mut a.cache, &mut b.cache);
                std::mem::swap(&mut a.energy, &mut b.energy);
                self.accepts[i] += 1;
            }
        }
    }

    pub fn swap_rates(&self) -> Vec<f64> {
        self.attempts
            .iter()
            .zip(&self.accepts)
            .map(|(&n, &a)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
            .collect()
    }
}

/// One replica-exchange step: sweep every chain, then attempt swaps.
pub fn replica_exchange_step(ladder: &mut ReplicaLadder) {
    ladder.sweep_all();
    ladder.exchange_step();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSweepConfig {
    /// Positive fields in decreasing order.
    pub h_grid: Vec<f64>,
    /// Torus sides.
    pub sides: Vec<usize>,
    pub equil_sweeps: u64,
    pub measure_sweeps: u64,
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub h: f64,
    pub m_mean: f64,
    pub m_err: f64,
    /// First and second halves of the measurement agree within 3 sigma.
    pub equilibrated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSweepResult {
    pub side: usize,
    pub points: Vec<FieldPoint>,
    /// Linear extrapolation to `h -> 0+` over the three smallest fields,
    /// clamped to `[0, 1]`.
    pub intercept: f64,
    pub intercept_err: f64,
    /// Unclamped intercept.
    pub raw_intercept: f64,
}

impl FieldSweepResult {
    pub fn all_equilibrated(&self) -> bool {
        self.points.iter().all(|p| p.equilibrated)
    }
}

/// `<m>` on tori of each side over a descending field grid, continuing each
/// chain from the previous field, then `m0 = lim_{h -> 0+}` by a weighted
/// line through the three smallest fields.
pub fn field_sweep(p: &ModelParams, cfg: &FieldSweepConfig, seed: u64) -> Result<Vec<FieldSweepResult>> {
    p.validate()?;
    if cfg.h_grid.len() < 3 {
        return domain("field sweep needs at least three fields");
    }
    if cfg.h_grid.iter().any(|&h| !(h > 0.0)) || cfg.h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return domain("field grid must be positive and strictly decreasing");
    }
    let bins = cfg.bins.max(MIN_BINS);
    if (cfg.measure_sweeps as usize) < 2 * bins {
        return domain(format!("need at least {} measurement sweeps", 2 * bins));
    }
    let mut out = Vec::with_capacity(cfg.sides.len());
    for &side in &cfg.sides {
        let base = Interaction::new(p, side, Boundary::Torus)?;
        let config = SpinConfig::uniform(p.d, side, Boundary::Torus, 1);
        let first = Arc::new(base.with_field(cfg.h_grid[0]));
        let mut chain = ChainState::new(config, first, p.beta, derive_seed(seed, &[side as u64]))?;
        let mut points = Vec::with_capacity(cfg.h_grid.len());
        for &h in &cfg.h_grid {
            chain.set_interaction(Arc::new(base.with_field(h)))?;
            for _ in 0..cfg.equil_sweeps {
                metropolis_sweep(&mut chain);
            }
            let mut ms = Vec::with_capacity(cfg.measure_sweeps as usize);
            for _ in 0..cfg.measure_sweeps {
                metropolis_sweep(&mut chain);
                ms.push(chain.config.magnetization());
            }
            let est = jackknife_mean(&ms, bins)?;
            let (ok, _) = halves_agree(&ms)?;
            points.push(FieldPoint {
                h,
                m_mean: est.mean,
                m_err: est.err,
                equilibrated: ok,
            });
        }
        let tail = &points[points.len() - 3..];
        let xs: Vec<f64> = tail.iter().map(|q| q.h).collect();
        let ys: Vec<f64> = tail.iter().map(|q| q.m_mean).collect();
        let es: Vec<f64> = tail.iter().map(|q| q.m_err).collect();
        let (c0, e0, _, _) = weighted_line(&xs, &ys, &es)?;
        out.push(FieldSweepResult {
            side,
            points,
            intercept: c0.clamp(0.0, 1.0),
            intercept_err: e0,
            raw_intercept: c0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// Repeatedly add a uniformly chosen perimeter site.
    RandomGrowth,
    /// The centred cube; the target must be `(2l+1)^d`.
    Box,
}

/// A connected set of exactly `target` sites containing the origin, inside
/// `bounds`.
pub fn droplet_sample(bounds: &BoxSpec, target: usize, seed: u64, policy: GrowthPolicy) -> Result<Region> {
    bounds.validate()?;
    let d = bounds.d;
    if target == 0 || target > bounds.volume() {
        return domain(format!("target size {target} must lie in 1..={}", bounds.volume()));
    }
    match policy {
        GrowthPolicy::Box => {
            let side = (target as f64).powf(1.0 / d as f64).round() as usize;
            if side.pow(d as u32) != target || side % 2 == 0 {
                return domain(format!("box growth needs a target of the form (2l+1)^d, got {target}"));
            }
            Ok(Region::cube(d, side / 2))
        }
        GrowthPolicy::RandomGrowth => {
            let l = bounds.half_side as i64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let origin: Site = [0; 3];
            let mut members: HashSet<Site> = HashSet::from([origin]);
            let mut order = vec![origin];
            let mut perimeter: Vec<Site> = Vec::new();
            let mut on_perimeter: HashSet<Site> = HashSet::new();
            let push_neighbors = |s: Site, members: &HashSet<Site>, per: &mut Vec<Site>, on: &mut HashSet<Site>| {
                for k in 0..d {
                    for dx in [-1i64, 1] {
                        let mut t = s;
                        t[k] += dx;
                        if t[k].abs() <= l && !members.contains(&t) && on.insert(t) {
                            per.push(t);
                        }
                    }
                }
            };
            push_neighbors(origin, &members, &mut perimeter, &mut on_perimeter);
            while order.len() < target {
                let idx = rng.gen_range(0..perimeter.len());
                let s = perimeter.swap_remove(idx);
                on_perimeter.remove(&s);
                members.insert(s);
                order.push(s);
                push_neighbors(s, &members, &mut perimeter, &mut on_perimeter);
            }
            Region::from_sites(d, order)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeierlsRow {
    pub size: usize,
    pub boundary_bonds: usize,
    /// `sum_{i in droplet, j outside} K_ij` (midpoint of its bracket).
    pub cross_sum: f64,
    pub ratio: f64,
    /// `2 J |boundary| - 2 cross_sum`, the cost of flipping the droplet in
    /// a `+1` background at `h = 0`.
    pub delta_e: f64,
    /// `|droplet_flip_delta - delta_e|` when the identity was checked.
    pub identity_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeierlsReport {
    pub rows: Vec<PeierlsRow>,
    /// Empirical `J0 = max cross_sum / |boundary|` over the sampled droplets.
    pub j0_hat: f64,
}

/// Samples droplets and records their boundary-crossing couplings;
/// `check_every` > 0 verifies the flip identity on every such droplet
/// inside a `+1` exterior.
pub fn peierls_experiment(
    p: &ModelParams,
    sizes: &[usize],
    samples_per_size: usize,
    seed: u64,
    policy: GrowthPolicy,
    check_every: usize,
) -> Result<PeierlsReport> {
    check_exponent(p.d, p.s)?;
    let kernel = p.kernel();
    let mut boxes: HashMap<usize, Interaction> = HashMap::new();
    let mut rows = Vec::new();
    let mut count = 0usize;
    let flat = p.with_field(0.0);
    for (si, &size) in sizes.iter().enumerate() {
        let bounds = BoxSpec::new(p.d, size);
        for k in 0..samples_per_size {
            let region = droplet_sample(&bounds, size, derive_seed(seed, &[si as u64, k as u64]), policy)?;
            let cross = region_complement_sum(&kernel, &region)?.midpoint();
            let bonds = region.boundary_bonds();
            let delta_e = 2.0 * p.j * bonds as f64 - 2.0 * cross;
            let identity_error = if check_every > 0 && count % check_every == 0 {
                let (lo, hi) = region.bounding_box();
                let extent = (0..p.d).map(|m| hi[m] - lo[m] + 1).max().unwrap_or(1) as usize;
                let side = extent + 2;
                let inter = match boxes.entry(side) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(Interaction::new(&flat, side, Boundary::Fixed(Exterior::Plus))?)
                    }
                };
                let shifted = Region::from_sites(
                    p.d,
                    region.sites().iter().map(|s| {
                        let mut t = *s;
                        for m in 0..p.d {
                            t[m] = s[m] - lo[m] + 1;
                        }
                        t
                    }),
                )?;
                let c = SpinConfig::uniform(p.d, side, Boundary::Fixed(Exterior::Plus), 1);
                let de = droplet_flip_delta(&c, inter, &shifted)?;
                Some((de - delta_e).abs())
            } else {
                None
            };
            count += 1;
            rows.push(PeierlsRow {
                size,
                boundary_bonds: bonds,
                cross_sum: cross,
                ratio: cross / bonds as f64,
                delta_e,
                identity_error,
            });
        }
    }
    let j0_hat = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(PeierlsReport { rows, j0_hat })
}

/// Spins outside `Lambda_L` for the exact conditional check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExteriorPattern {
    Uniform(i8),
    /// `(-1)^{sum of coordinates}`; not eventually uniform, so its
    /// long-range field is truncated and the remainder bounded.
    Checkerboard,
    /// Independent random spins with `|j|_inf <= radius`, `outside` beyond.
    RandomPatch { seed: u64, radius: usize, outside: i8 },
}

impl ExteriorPattern {
    pub fn name(&self) -> String {
        match self {
            ExteriorPattern::Uniform(v) => format!("uniform{v:+}"),
            ExteriorPattern::Checkerboard => "checkerboard".into(),
            ExteriorPattern::RandomPatch { seed, radius, outside } => {
                format!("random_patch(seed={seed},radius={radius},outside={outside:+})")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: i8| v == 1 || v == -1;
        match self {
            ExteriorPattern::Uniform(v) | ExteriorPattern::RandomPatch { outside: v, .. } if !ok(*v) => {
                domain("exterior spins must be +1 or -1")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactCheckRow {
    pub exterior: String,
    pub beta: f64,
    pub kappa: f64,
    pub t_l: TailBound,
    /// `|J| |boundary bonds| + |h| |Lambda_L|`.
    pub e_bd_max: f64,
    /// Bound on the omitted exterior coupling (0 up to rounding for
    /// eventually-uniform exteriors).
    pub tau: f64,
    /// `P(T >= kappa T_L)` under the (truncated) conditional measure.
    pub p_event: f64,
    /// Rigorous upper bound on the probability under the exact measure.
    pub p_upper: f64,
    /// `exp(-2 beta [kappa T_L - E_bd])`.
    pub bound: f64,
    /// The bound with the truncation slack `2 tau` added to `E_bd`.
    pub bound_with_slack: f64,
    pub holds: bool,
}

/// Enumerates every configuration of `Lambda_L` given a fixed exterior and
/// checks `P(T_L-observable >= kappa T_L) <= exp(-2 beta [kappa T_L - E_bd])`.
///
/// Uses `p.beta` (zero is allowed). `r_ext` is the truncation radius for
/// exteriors that are not eventually uniform, `8L` by default.
pub fn exact_conditional_check(
    exterior: &ExteriorPattern,
    inner_l: usize,
    p: &ModelParams,
    kappas: &[f64],
    r_ext: Option<usize>,
) -> Result<Vec<ExactCheckRow>> {
    check_exponent(p.d, p.s)?;
    exterior.validate()?;
    if !(p.beta >= 0.0) || !p.beta.is_finite() {
        return domain("beta must be finite and nonnegative");
    }
    let d = p.d;
    let b = BoxSpec::new(d, inner_l);
    let n = b.volume();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            sites: n,
            cap: ENUMERATION_CAP,
        });
    }
    let l = inner_l as i64;
    let kernel = p.kernel();
    let mut sites = Vec::with_capacity(n);
    crate::special::for_each_cube_point(d, l, |s| sites.push(*s));
    let kij = |a: &Site, c: &Site| kernel.at_sq((0..d).map(|m| (a[m] - c[m]).pow(2)).sum());
    let eps = kernel.site_sum(f64::MAX)?;

    let patch_spin = |s: &Site, seed: u64, radius: i64, outside: i8| -> f64 {
        if (0..d).all(|m| s[m].abs() <= radius) {
            let mut key = [0u64; 3];
            for m in 0..3 {
                key[m] = s[m] as u64;
            }
            if derive_seed(seed, &key) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            outside as f64
        }
    };
    let spin_at = |s: &Site| -> f64 {
        match *exterior {
            ExteriorPattern::Uniform(v) => v as f64,
            ExteriorPattern::Checkerboard => {
                if (0..d).map(|m| s[m]).sum::<i64>().rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ExteriorPattern::RandomPatch { seed, radius, outside } => patch_spin(s, seed, radius as i64, outside),
        }
    };
    let inside = |s: &Site| (0..d).all(|m| s[m].abs() <= l);

    // exterior long-range field and exterior nearest-neighbour sums
    let tau;
    let mut ext = vec![0.0; n];
    let mut ext_nn = vec![0.0; n];
    let uniform_beyond: Option<(i64, f64)> = match *exterior {
        ExteriorPattern::Uniform(v) => Some((l, v as f64)),
        ExteriorPattern::RandomPatch { radius, outside, .. } => Some(((radius as i64).max(l), outside as f64)),
        ExteriorPattern::Checkerboard => None,
    };
    match uniform_beyond {
        Some((radius, u)) => {
            // u * (eps - inside part) plus corrections inside the patch
            for (i, si) in sites.iter().enumerate() {
                let mut acc = crate::summation::NeumaierSum::new();
                acc.add(u * eps.midpoint());
                for sj in &sites {
                    acc.add(-u * kij(si, sj));
                }
                crate::special::for_each_cube_point(d, radius, |sj| {
                    if !inside(sj) {
                        let v = spin_at(sj);
                        if v != u {
                            acc.add((v - u) * kij(si, sj));
                        }
                    }
                });
                ext[i] = acc.value();
            }
            tau = n as f64 * (eps.tail + crate::summation::rounding_allowance(eps.upper()));
        }
        None => {
            let r = r_ext.unwrap_or(8 * inner_l.max(1)) as i64;
            let reach = (r - l) as f64;
            if reach <= (d as f64).sqrt() / 2.0 {
                return domain("truncation radius too small");
            }
            for (i, si) in sites.iter().enumerate() {
                let mut acc = crate::summation::NeumaierSum::new();
                crate::special::for_each_cube_point(d, r, |sj| {
                    if !inside(sj) {
                        acc.add(spin_at(sj) * kij(si, sj));
                    }
                });
                ext[i] = acc.value();
            }
            // every omitted j lies at distance > r - L from every inner site
            let (_, hi) = power_tail_bracket(d, p.s, p.kappa, reach);
            tau = n as f64 * hi;
        }
    }
    for (i, si) in sites.iter().enumerate() {
        for m in 0..d {
            for dx in [-1i64, 1] {
                let mut t = *si;
                t[m] += dx;
                if !inside(&t) {
                    ext_nn[i] += spin_at(&t);
                }
            }
        }
    }
    // inner couplings and bonds
    let mut k_in = vec![0.0; n * n];
    let mut nn_in = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k_in[i * n + j] = kij(&sites[i], &sites[j]);
            let dist: i64 = (0..d).map(|m| (sites[i][m] - sites[j][m]).abs()).sum();
            if dist == 1 {
                nn_in[i * n + j] = 1.0;
            }
        }
    }

    // Gray-code enumeration of H and the observable
    let total = 1usize << n;
    let mut sigma = vec![1.0f64; n];
    let mut field = vec![0.0; n]; // sum_j (K_ij - J nn_ij) sigma_j
    for i in 0..n {
        field[i] = (0..n).map(|j| k_in[i * n + j] - p.j * nn_in[i * n + j]).sum();
    }
    let energy_of = |sigma: &[f64], field: &[f64]| -> f64 {
        let mut e = 0.0;
        for i in 0..n {
            e += sigma[i] * (0.5 * field[i] + ext[i] - p.j * ext_nn[i] - p.h);
        }
        e
    };
    let mut h_cur = energy_of(&sigma, &field);
    let mut t_cur: f64 = (0..n).map(|i| sigma[i] * ext[i]).sum();
    let mut energies = Vec::with_capacity(total);
    let mut observables = Vec::with_capacity(total);
    energies.push(h_cur);
    observables.push(t_cur);
    for k in 1..total {
        let i = k.trailing_zeros() as usize;
        let s = sigma[i];
        h_cur += -2.0 * s * (field[i] + ext[i] - p.j * ext_nn[i] - p.h);
        t_cur += -2.0 * s * ext[i];
        sigma[i] = -s;
        for j in 0..n {
            field[j] += -2.0 * s * (k_in[j * n + i] - p.j * nn_in[j * n + i]);
        }
        energies.push(h_cur);
        observables.push(t_cur);
    }
    let h_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-p.beta * (e - h_min)).exp()).collect();
    let z: f64 = weights.iter().sum();

    let t_l = t_sum(&b, p, f64::MAX)?;
    let e_bd_max = p.j.abs() * b.boundary_bonds() as f64 + p.h.abs() * n as f64;
    let mut rows = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let thr = kappa * t_l.value;
        let p_at = |threshold: f64| -> f64 {
            weights
                .iter()
                .zip(&observables)
                .filter(|(_, &t)| t >= threshold)
                .map(|(w, _)| w)
                .sum::<f64>()
                / z
        };
        let p_event = p_at(thr);
        let p_upper = ((2.0 * p.beta * tau).exp() * p_at(thr - tau)).min(1.0);
        let bound = (-2.0 * p.beta * (thr - e_bd_max)).exp();
        let bound_with_slack = (-2.0 * p.beta * (thr - e_bd_max - 2.0 * tau)).exp();
        rows.push(ExactCheckRow {
            exterior: exterior.name(),
            beta: p.beta,
            kappa,
            t_l,
            e_bd_max,
            tau,
            p_event,
            p_upper,
            bound,
            bound_with_slack,
            holds: p_upper <= bound_with_slack * (1.0 + 1e-12),
        });
    }
    Ok(rows)
}

/// Exact Boltzmann probabilities of every configuration of a small system,
/// indexed by the bit pattern of `-1` spins.
pub fn exact_distribution(inter: &Interaction, beta: f64) -> Result<Vec<f64>> {
    let energies = enumerate_energies(inter)?;
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// Energy of every configuration, indexed by the bit pattern of `-1` spins.
pub fn enumerate_energies(inter: &Interaction) -> Result<Vec<f64>> {
    let len = inter.len();
    if len > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            sites: len,
            cap: ENUMERATION_CAP,
        });
    }
    let mut c = SpinConfig::uniform(inter.dim, inter.side, inter.boundary, 1);
    let mut cache = LocalFieldCache::new(&c, inter)?;
    let mut e = energy_from_cache(&c, &cache, inter).total;
    let total = 1usize << len;
    let mut out = vec![0.0; total];
    out[0] = e;
    let mut gray = 0usize;
    for k in 1..total {
        let i = k.trailing_zeros() as usize;
        e += apply_flip(&mut c, &mut cache, inter, i);
        gray ^= 1 << i;
        out[gray] = e;
    }
    Ok(out)
}

/// Configuration index used by [`exact_distribution`].
pub fn config_index(c: &SpinConfig) -> usize {
    c.spins
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 0)
        .fold(0usize, |acc, (i, _)| acc | (1 << i))
}

/// Visit frequencies of each configuration over `sweeps` sweeps, with
/// batch-means standard errors over `batches` contiguous batches.
pub fn empirical_distribution(state: &mut ChainState, sweeps: u64, batches: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = state.config.len();
    if len > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            sites: len,
            cap: ENUMERATION_CAP,
        });
    }
    if batches < 2 || sweeps < batches as u64 {
        return domain("need at least two batches and one sweep per batch");
    }
    let states = 1usize << len;
    let per = sweeps / batches as u64;
    let mut batch_freq = vec![vec![0.0; states]; batches];
    for freq in batch_freq.iter_mut() {
        for _ in 0..per {
            metropolis_sweep(state);
            freq[config_index(&state.config)] += 1.0;
        }
        for v in freq.iter_mut() {
            *v /= per as f64;
        }
    }
    let mut mean = vec![0.0; states];
    let mut err = vec![0.0; states];
    for s in 0..states {
        let m = batch_freq.iter().map(|f| f[s]).sum::<f64>() / batches as f64;
        let var = batch_freq.iter().map(|f| (f[s] - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
        mean[s] = m;
        err[s] = (var / batches as f64).sqrt();
    }
    Ok((mean, err))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TScanRow {
    pub inner_l: usize,
    /// Mean of `T_L-observable / T_L-observable(all +1)`.
    pub ratio_mean: f64,
    pub ratio_err: f64,
    pub m2_mean: f64,
}

/// Normalized interaction observable in an equilibrated torus state, for
/// each inner box half-side. Starts from all `+1`.
pub fn t_observable_scan(
    p: &ModelParams,
    ls: &[usize],
    side: usize,
    equil_sweeps: u64,
    sweeps: u64,
    seed: u64,
) -> Result<Vec<TScanRow>> {
    check_exponent(p.d, p.s)?;
    let inter = Arc::new(Interaction::new(p, side, Boundary::Torus)?);
    let plus = SpinConfig::uniform(p.d, side, Boundary::Torus, 1);
    let norms = ls
        .iter()
        .map(|&l| interaction_observable(&plus, &inter, l))
        .collect::<Result<Vec<_>>>()?;
    let mut chain = ChainState::new(plus, inter.clone(), p.beta, seed)?;
    for _ in 0..equil_sweeps {
        metropolis_sweep(&mut chain);
    }
    let mut ratios = vec![Vec::with_capacity(sweeps as usize); ls.len()];
    let mut m2 = Vec::with_capacity(sweeps as usize);
    for _ in 0..sweeps {
        metropolis_sweep(&mut chain);
        for (k, &l) in ls.iter().enumerate() {
            ratios[k].push(interaction_observable(&chain.config, &inter, l)? / norms[k]);
        }
        let m = chain.config.magnetization();
        m2.push(m * m);
    }
    let m2_mean = jackknife_mean(&m2, MIN_BINS)?.mean;
    ls.iter()
        .zip(&ratios)
        .map(|(&l, r)| {
            let est = jackknife_mean(r, MIN_BINS)?;
            Ok(TScanRow {
                inner_l: l,
                ratio_mean: est.mean,
                ratio_err: est.err,
                m2_mean,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_probability_cases() {
        assert_eq!(swap_probability(1.0, 1.0, -3.0, 5.0), 1.0);
        assert_eq!(swap_probability(0.5, 2.0, 4.0, 4.0), 1.0);
        assert!((swap_probability(1.0, 2.0, -1.0, -2.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn droplet_sampler_examples() {
        let b = BoxSpec::new(2, 10);
        let one = droplet_sample(&b, 1, 3, GrowthPolicy::RandomGrowth).unwrap();
        assert_eq!(one.sites(), &[[0, 0, 0]]);
        assert_eq!(one.boundary_bonds(), 4);
        let sq = droplet_sample(&b, 49, 3, GrowthPolicy::Box).unwrap();
        assert_eq!(sq.boundary_bonds(), 4 * 7);
        assert!(droplet_sample(&b, 50, 3, GrowthPolicy::Box).is_err());
        let a = droplet_sample(&b, 60, 9, GrowthPolicy::RandomGrowth).unwrap();
        let a2 = droplet_sample(&b, 60, 9, GrowthPolicy::RandomGrowth).unwrap();
        assert_eq!(a, a2);
        assert_eq!(a.len(), 60);
        assert_eq!(a.components(), 1);
        assert!(a.contains(&[0, 0, 0]));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let p = ModelParams::new(2, 3.0, 1.0);
        let e = exact_conditional_check(&ExteriorPattern::Uniform(1), 2, &p, &[0.5], None);
        assert!(matches!(e, Err(Error::EnumerationCap { sites: 25, .. })));
    }
}
