//! Experiment runners. Each returns its artifacts and a one-line summary;
//! nothing is written until the whole computation has succeeded.

use std::sync::Arc;

use lrising::energy::{
    structure_factor, structure_peak, write_checkpoint, Boundary, CheckpointHeader, Interaction, SpinConfig,
    StructurePeak,
};
use lrising::geometry::{BoxSpec, Region};
use lrising::kernel::TailBound;
use lrising::mc::{
    anneal, exact_conditional_check, field_sweep, peierls_experiment, run_chain, ChainState, ExactCheckRow,
    FieldSweepConfig, MeasurementRecord,
};
use lrising::summation::derive_seed;
use lrising::sums::{
    asymptotic_fit, growth_scale, i1_closed_form, i1_numeric, q_integral, surface_ratio, t_sum, FitModel, FitResult,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifact::{csv, json, Artifact};
use crate::config::{Kind, LoadedConfig, Params, Start};
use crate::{domain, CliError};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

/// Runs the configured experiment with the resolved master `seed`.
pub fn execute(cfg: &LoadedConfig, seed: u64) -> Result<RunOutput, CliError> {
    let p = &cfg.config.params;
    validate(cfg)?;
    match cfg.config.kind {
        Kind::SumsScan => sums_scan(cfg, p, seed),
        Kind::Quadrature => quadrature(cfg, p, seed),
        Kind::Fit => fit(cfg, p, seed),
        Kind::SurfaceRatio => surface(cfg, p, seed),
        Kind::McRun => mc_run(cfg, p, seed),
        Kind::FieldSweep => sweep(cfg, p, seed),
        Kind::Peierls => peierls(cfg, p, seed),
        Kind::ExactCheck => exact_check(cfg, p, seed),
        Kind::Anneal => annealing(cfg, p, seed),
    }
}

fn require(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(domain(msg))
    }
}

/// Domain checks for every module involved, before any work starts.
pub fn validate(cfg: &LoadedConfig) -> Result<(), CliError> {
    let p = &cfg.config.params;
    let kind = cfg.config.kind;
    let mut model = p.model();
    if kind == Kind::ExactCheck {
        // beta = 0 is meaningful here; the grid is checked separately
        require(
            p.betas.iter().all(|b| *b >= 0.0 && b.is_finite()),
            "betas must be finite and nonnegative",
        )?;
        model = model.with_beta(1.0);
    }
    model.validate()?;
    require(p.tol > 0.0, "tol must be positive")?;
    match kind {
        Kind::SumsScan | Kind::Fit | Kind::SurfaceRatio => {
            require(!p.l_grid.is_empty(), "l_grid must not be empty")?;
            if kind == Kind::SurfaceRatio {
                require(p.l_grid.iter().all(|&l| l >= 1), "surface ratios need l >= 1")?;
            }
        }
        Kind::Quadrature => require(!p.points.is_empty() || p.s < p.dim as f64 + 1.0, "nothing to integrate")?,
        Kind::McRun => {
            require(p.side >= 2, "side must be at least 2")?;
            require(p.measure_sweeps > 0, "measure_sweeps must be positive")?;
            if let Some(l) = p.t_inner {
                require(2 * (2 * l + 1) <= p.side, "t_inner box too large for the torus")?;
            }
            require(p.blocks.iter().all(|&b| b >= 1 && b <= p.side), "blocks must lie in 1..=side")?;
        }
        Kind::FieldSweep => {
            require(!p.sides.is_empty(), "sides must not be empty")?;
            require(p.h_grid.len() >= 3, "h_grid needs at least three fields")?;
            require(
                p.h_grid.iter().all(|h| *h > 0.0) && p.h_grid.windows(2).all(|w| w[1] < w[0]),
                "h_grid must be positive and strictly decreasing",
            )?;
            require(
                p.measure_sweeps as usize >= 2 * p.bins.max(16),
                "measure_sweeps must cover two sets of jackknife bins",
            )?;
        }
        Kind::Peierls => require(!p.sizes.is_empty() && p.samples > 0, "sizes and samples must be set")?,
        Kind::ExactCheck => {
            require(!p.kappas.is_empty(), "kappas must not be empty")?;
            require(!p.exteriors.is_empty(), "exteriors must not be empty")?;
            let n = (2 * p.inner_l + 1).pow(p.dim as u32);
            if n > lrising::mc::ENUMERATION_CAP {
                return Err(CliError::Core(lrising::Error::EnumerationCap {
                    sites: n,
                    cap: lrising::mc::ENUMERATION_CAP,
                }));
            }
        }
        Kind::Anneal => {
            require(p.side >= 2, "side must be at least 2")?;
            require(
                !p.schedule.is_empty() && p.schedule.windows(2).all(|w| w[1] >= w[0]),
                "schedule must be a nonempty non-decreasing beta ladder",
            )?;
            require(p.schedule.iter().all(|b| *b >= 0.0 && b.is_finite()), "schedule betas must be finite")?;
        }
    }
    Ok(())
}

fn file(cfg: &LoadedConfig, ext: &str) -> String {
    format!("{}.{ext}", cfg.stem())
}

fn sums_scan(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let m = p.model();
    let mut rows = Vec::with_capacity(p.l_grid.len());
    let mut last = 0.0;
    for &l in &p.l_grid {
        let t = t_sum(&BoxSpec::new(p.dim, l), &m, p.tol)?;
        let scaled = t.midpoint() / growth_scale(p.dim, p.s, l as f64);
        last = scaled;
        rows.push(format!("{l},{},{},{scaled}", t.value, t.tail));
    }
    let q = if p.s < p.dim as f64 + 1.0 {
        let q = q_integral(p.dim, p.s, 1e-9, p.shape)?.scale(p.kappa);
        format!(", Q = {:.6}", q.midpoint())
    } else {
        String::new()
    };
    Ok(RunOutput {
        artifacts: vec![csv(cfg, seed, file(cfg, "csv"), "L,T_value,T_tail,scaled_value", rows)],
        summary: format!("sums_scan: {} sizes, last scaled_value = {last:.6}{q}", p.l_grid.len()),
    })
}

#[derive(Serialize)]
struct I1Row {
    l: f64,
    a: f64,
    s: f64,
    closed_form: f64,
    numeric: f64,
    numeric_err: f64,
    rel_diff: f64,
}

#[derive(Serialize)]
struct QuadratureResult {
    q: Option<TailBound>,
    i1: Vec<I1Row>,
}

fn quadrature(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let q = if p.s < p.dim as f64 + 1.0 {
        Some(q_integral(p.dim, p.s, p.tol.max(1e-12), p.shape)?)
    } else {
        None
    };
    let mut i1 = Vec::with_capacity(p.points.len());
    for &[l, a, s] in &p.points {
        let closed = i1_closed_form(l, a, p.dim, s)?;
        let num = i1_numeric(l, a, p.dim, s, p.tol)?;
        i1.push(I1Row {
            l,
            a,
            s,
            closed_form: closed,
            numeric: num.midpoint(),
            numeric_err: num.tail / 2.0,
            rel_diff: (num.midpoint() - closed).abs() / closed.abs(),
        });
    }
    let worst = i1.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let summary = format!(
        "quadrature: Q = {}, {} I1 points, max rel diff {worst:.2e}",
        q.map(|v| format!("{:.9}", v.midpoint())).unwrap_or_else(|| "n/a".into()),
        i1.len()
    );
    Ok(RunOutput {
        artifacts: vec![json(cfg, seed, file(cfg, "json"), &QuadratureResult { q, i1 })],
        summary,
    })
}

/// Default exponent of each fit model for `(d, s)`.
pub fn fit_exponent(model: FitModel, d: usize, s: f64) -> f64 {
    match model {
        FitModel::PurePower if s < d as f64 + 1.0 => 2.0 * d as f64 - s,
        _ => d as f64 - 1.0,
    }
}

#[derive(Serialize)]
struct FitOutput {
    abscissa: &'static str,
    points: Vec<(f64, f64)>,
    fit: FitResult,
}

fn fit(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let m = p.model();
    let mut points = Vec::with_capacity(p.l_grid.len());
    for &l in &p.l_grid {
        let t = t_sum(&BoxSpec::new(p.dim, l), &m, p.tol)?;
        let x = if p.fit_by_side { (2 * l + 1) as f64 } else { l as f64 };
        points.push((x, t.midpoint()));
    }
    let f = asymptotic_fit(&points, p.fit_model, fit_exponent(p.fit_model, p.dim, p.s))?;
    let out = FitOutput {
        abscissa: if p.fit_by_side { "side" } else { "half_side" },
        points,
        fit: f,
    };
    Ok(RunOutput {
        artifacts: vec![json(cfg, seed, file(cfg, "json"), &out)],
        summary: format!(
            "fit: amplitude = {:.6}, subleading = {:.6}, residual = {:.3e}",
            f.amplitude, f.subleading, f.residual
        ),
    })
}

fn surface(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let m = p.model();
    let mut rows = Vec::with_capacity(p.l_grid.len());
    let mut vals = Vec::with_capacity(p.l_grid.len());
    for &l in &p.l_grid {
        let r = surface_ratio(&Region::cube(p.dim, l), &m, p.tol)?;
        vals.push(r.midpoint());
        rows.push(format!("{l},{},{}", r.value, r.tail));
    }
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(RunOutput {
        artifacts: vec![csv(cfg, seed, file(cfg, "csv"), "ell,ratio_value,ratio_tail", rows)],
        summary: format!("surface_ratio: range [{lo:.6}, {hi:.6}], max/min = {:.4}", hi / lo),
    })
}

fn initial_config(p: &Params, side: usize, boundary: Boundary, seed: u64) -> SpinConfig {
    match p.start {
        Start::Plus => SpinConfig::uniform(p.dim, side, boundary, 1),
        Start::Minus => SpinConfig::uniform(p.dim, side, boundary, -1),
        Start::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            SpinConfig::random(p.dim, side, boundary, &mut rng)
        }
    }
}

fn checkpoint(p: &Params, c: &SpinConfig, seed: u64, sweep: u64) -> Result<Vec<u8>, CliError> {
    let header = CheckpointHeader::new(&p.model(), c.side, seed, sweep);
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &header, c)?;
    Ok(buf)
}

fn mc_run(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let m = p.model();
    let inter = Arc::new(Interaction::new(&m, p.side, Boundary::Torus)?);
    let start = initial_config(p, p.side, Boundary::Torus, derive_seed(seed, &[0]));
    let chain_seed = derive_seed(seed, &[1]);
    let mut chain = ChainState::new(start, inter, m.beta, chain_seed)?;
    run_chain(&mut chain, p.equil_sweeps, u64::MAX, &[], None)?;
    let records = run_chain(&mut chain, p.measure_sweeps, p.measure_every, &p.blocks, p.t_inner)?;
    let mean_abs = records.iter().map(|r| r.m_abs).sum::<f64>() / records.len().max(1) as f64;
    let acc = chain.accepted as f64 / (chain.sweep as f64 * chain.config.len() as f64);
    let rows: Vec<String> = records.iter().map(MeasurementRecord::csv_row).collect();
    let ckpt = Artifact {
        name: file(cfg, "ckpt"),
        bytes: checkpoint(p, &chain.config, chain_seed, chain.sweep)?,
    };
    Ok(RunOutput {
        artifacts: vec![
            csv(cfg, seed, file(cfg, "csv"), &MeasurementRecord::csv_header(&p.blocks), rows),
            ckpt,
        ],
        summary: format!(
            "mc_run: {} records, <|m|> = {mean_abs:.6}, acceptance = {acc:.4}",
            records.len()
        ),
    })
}

fn sweep(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let fc = FieldSweepConfig {
        h_grid: p.h_grid.clone(),
        sides: p.sides.clone(),
        equil_sweeps: p.equil_sweeps,
        measure_sweeps: p.measure_sweeps,
        bins: p.bins,
    };
    let res = field_sweep(&p.model(), &fc, seed)?;
    let parts: Vec<String> = res
        .iter()
        .map(|r| {
            let flag = if r.all_equilibrated() { "" } else { " (not equilibrated)" };
            format!("N={}: m0 = {:.4} +- {:.4}{flag}", r.side, r.intercept, r.intercept_err)
        })
        .collect();
    Ok(RunOutput {
        artifacts: vec![json(cfg, seed, file(cfg, "json"), &res)],
        summary: format!("field_sweep: {}", parts.join("; ")),
    })
}

#[derive(Serialize)]
struct PeierlsSummary {
    j0_hat: f64,
    droplets: usize,
    max_identity_error: Option<f64>,
}

fn peierls(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let rep = peierls_experiment(&p.model(), &p.sizes, p.samples, seed, p.policy, p.check_every)?;
    let max_err = rep.rows.iter().filter_map(|r| r.identity_error).reduce(f64::max);
    let rows = rep.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{}",
            r.size,
            r.boundary_bonds,
            r.cross_sum,
            r.ratio,
            r.delta_e,
            r.identity_error.map(|v| v.to_string()).unwrap_or_default()
        )
    });
    let summary = PeierlsSummary {
        j0_hat: rep.j0_hat,
        droplets: rep.rows.len(),
        max_identity_error: max_err,
    };
    Ok(RunOutput {
        artifacts: vec![
            csv(
                cfg,
                seed,
                file(cfg, "csv"),
                "size,boundary_bonds,cross_sum,ratio,delta_e,identity_error",
                rows,
            ),
            json(cfg, seed, format!("{}_summary.json", cfg.stem()), &summary),
        ],
        summary: format!("peierls: {} droplets, J0_hat = {:.6}", summary.droplets, rep.j0_hat),
    })
}

fn exact_check(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let betas = if p.betas.is_empty() { vec![p.beta] } else { p.betas.clone() };
    let mut rows: Vec<ExactCheckRow> = Vec::new();
    for ext in &p.exteriors {
        for &b in &betas {
            let m = p.model().with_beta(b);
            rows.extend(exact_conditional_check(ext, p.inner_l, &m, &p.kappas, p.r_ext)?);
        }
    }
    let held = rows.iter().filter(|r| r.holds).count();
    Ok(RunOutput {
        artifacts: vec![json(cfg, seed, file(cfg, "json"), &rows)],
        summary: format!("exact_check: inequality holds in {held}/{} cases", rows.len()),
    })
}

#[derive(Serialize)]
struct AnnealOutput {
    best_energy: f64,
    magnetization: f64,
    peak: StructurePeak,
    s_zero: f64,
    trace: Vec<(f64, f64)>,
}

fn annealing(cfg: &LoadedConfig, p: &Params, seed: u64) -> Result<RunOutput, CliError> {
    let m = p.model();
    let inter = Arc::new(Interaction::new(&m, p.side, Boundary::Torus)?);
    let start = initial_config(p, p.side, Boundary::Torus, derive_seed(seed, &[0]));
    let chain_seed = derive_seed(seed, &[1]);
    let mut chain = ChainState::new(start, inter, p.schedule[0], chain_seed)?;
    let res = anneal(&mut chain, &p.schedule, p.sweeps_per_stage)?;
    let sf = structure_factor(&res.best);
    let peak = structure_peak(&sf, p.dim, p.side);
    let out = AnnealOutput {
        best_energy: res.best_energy,
        magnetization: res.best.magnetization(),
        peak,
        s_zero: sf[0],
        trace: res.trace,
    };
    let ckpt = Artifact {
        name: file(cfg, "ckpt"),
        bytes: checkpoint(p, &res.best, chain_seed, chain.sweep)?,
    };
    Ok(RunOutput {
        artifacts: vec![json(cfg, seed, file(cfg, "json"), &out), ckpt],
        summary: format!(
            "anneal: best energy {:.6}, S peak {:.3} at |k| = {:.4}, S(0) = {:.3}",
            out.best_energy, peak.value, peak.k_norm, out.s_zero
        ),
    })
}
