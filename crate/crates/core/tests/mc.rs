use std::sync::Arc;

use lrising::energy::*;
use lrising::kernel::{ModelParams, PairKernel};
use lrising::mc::*;
use lrising::geometry::BoxSpec;

fn chain(p: &ModelParams, side: usize, start: i8, seed: u64) -> ChainState {
    let inter = Arc::new(Interaction::new(p, side, Boundary::Torus).unwrap());
    let c = SpinConfig::uniform(p.d, side, Boundary::Torus, start);
    ChainState::new(c, inter, p.beta, seed).unwrap()
}

#[test]
fn same_seed_gives_identical_records() {
    let p = ModelParams::new(2, 3.0, 1.0).with_beta(0.6).with_field(0.05);
    let run = || {
        let mut st = chain(&p, 8, 1, 99);
        run_chain(&mut st, 40, 4, &[2, 4], Some(1)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.len(), 10);
    for r in &a {
        assert!((-1.0..=1.0).contains(&r.m));
        assert!(r.s_peak_val <= 64.0 + 1e-9);
    }
    let header = MeasurementRecord::csv_header(&[2, 4]);
    assert_eq!(header.split(',').count(), a[0].csv_row().split(',').count());
    assert!(header.starts_with("sweep,beta,h,energy_total,energy_ferro,energy_af,m,m_abs,mL_2,mL_4,T_obs"));
}

#[test]
fn frozen_ferromagnet_never_flips() {
    let p = ModelParams::new(2, 3.0, 1.0).with_kappa(0.0).with_beta(1e6);
    let mut st = chain(&p, 8, 1, 1);
    for _ in 0..50 {
        metropolis_sweep(&mut st);
    }
    assert_eq!(st.accepted, 0);
    assert_eq!(st.sweep, 50);
}

#[test]
fn running_energy_tracks_recomputation() {
    let p = ModelParams::new(2, 3.5, 1.0).with_beta(0.4).with_field(0.1);
    let mut st = chain(&p, 12, -1, 4);
    for _ in 0..200 {
        metropolis_sweep(&mut st);
    }
    let direct = total_energy_direct(&st.config, st.interaction()).unwrap().total;
    assert!((st.energy - direct).abs() <= 1e-8);
    st.cache.audit(&st.config, st.interaction()).unwrap();
}

#[test]
fn replica_swaps_with_equal_betas_always_accept() {
    let p = ModelParams::new(1, 1.5, 1.0).with_beta(0.5);
    let chains = (0..3).map(|k| chain(&p, 16, if k % 2 == 0 { 1 } else { -1 }, k)).collect();
    let mut ladder = ReplicaLadder::new(chains, 7).unwrap();
    for _ in 0..20 {
        replica_exchange_step(&mut ladder);
    }
    assert_eq!(ladder.swap_rates(), vec![1.0, 1.0]);
    for c in &ladder.chains {
        let direct = total_energy_direct(&c.config, c.interaction()).unwrap().total;
        assert!((c.energy - direct).abs() <= 1e-8);
    }
}

#[test]
fn replica_ladder_rejects_unsorted_betas() {
    let p = ModelParams::new(1, 1.5, 1.0);
    let a = chain(&p.with_beta(2.0), 8, 1, 0);
    let b = chain(&p.with_beta(1.0), 8, 1, 1);
    assert!(ReplicaLadder::new(vec![a, b], 0).is_err());
}

#[test]
fn free_spins_follow_tanh() {
    let p = ModelParams::new(2, 3.0, 0.0).with_kappa(0.0).with_beta(0.7);
    let cfg = FieldSweepConfig {
        h_grid: vec![0.8, 0.4, 0.2, 0.1],
        sides: vec![8],
        equil_sweeps: 20,
        measure_sweeps: 640,
        bins: 16,
    };
    let res = field_sweep(&p, &cfg, 5).unwrap();
    for pt in &res[0].points {
        let exact = (p.beta * pt.h).tanh();
        assert!((pt.m_mean - exact).abs() <= 3.0 * pt.m_err, "{pt:?} vs {exact}");
    }
    assert!((0.0..=1.0).contains(&res[0].intercept));
    assert!(res[0].intercept_err > 0.0);
}

#[test]
fn field_sweep_rejects_bad_grids() {
    let p = ModelParams::new(2, 3.0, 1.0);
    let mut cfg = FieldSweepConfig {
        h_grid: vec![0.1, 0.2, 0.3],
        sides: vec![4],
        equil_sweeps: 1,
        measure_sweeps: 64,
        bins: 16,
    };
    assert!(field_sweep(&p, &cfg, 0).is_err());
    cfg.h_grid = vec![0.3, 0.2, 0.0];
    assert!(field_sweep(&p, &cfg, 0).is_err());
}

#[test]
fn zero_field_magnetization_is_symmetric() {
    let p = ModelParams::new(2, 3.0, 0.3).with_beta(0.5);
    let mut st = chain(&p, 6, 1, 12);
    let recs = run_chain(&mut st, 6400, 1, &[], None).unwrap();
    let ms: Vec<f64> = recs.iter().map(|r| r.m).collect();
    let est = lrising::stats::jackknife_mean(&ms, 32).unwrap();
    assert!(est.mean.abs() <= 3.0 * est.err, "{est:?}");
}

#[test]
fn anneal_finds_uniform_ferromagnet() {
    let p = ModelParams::new(2, 3.0, 1.0).with_kappa(0.0).with_beta(0.1);
    let inter = Arc::new(Interaction::new(&p, 16, Boundary::Torus).unwrap());
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let c = SpinConfig::random(2, 16, Boundary::Torus, &mut rng);
    let mut st = ChainState::new(c, inter, 0.1, 3).unwrap();
    let schedule: Vec<f64> = (0..40).map(|k| 0.1 * 1.15f64.powi(k)).collect();
    let res = anneal(&mut st, &schedule, 100).unwrap();
    assert_eq!(res.best.spin_sum().unsigned_abs(), 256);
    assert!((res.best_energy + 2.0 * 256.0).abs() <= 1e-9);
    assert_eq!(res.trace.len(), 40);
}

#[test]
fn anneal_matches_exhaustive_ground_state() {
    let p = ModelParams::new(1, 2.0, 0.0).with_kappa(1.0);
    let inter = Arc::new(Interaction::new(&p, 16, Boundary::Torus).unwrap());
    let energies = enumerate_energies(&inter).unwrap();
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    // alternating order is the ground state of a pure antiferromagnet
    let alt = SpinConfig::from_spins(1, 16, Boundary::Torus, (0..16).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())
        .unwrap();
    assert!((energies[config_index(&alt)] - e_min).abs() <= 1e-9);

    let schedule: Vec<f64> = (0..30).map(|k| 0.2 * 1.2f64.powi(k)).collect();
    let mut st = ChainState::new(SpinConfig::uniform(1, 16, Boundary::Torus, 1), inter, 0.2, 8).unwrap();
    let res = anneal(&mut st, &schedule, 200).unwrap();
    assert!((res.best_energy - e_min).abs() <= 1e-9, "{} vs {e_min}", res.best_energy);

    let mut again = ChainState::new(
        SpinConfig::uniform(1, 16, Boundary::Torus, 1),
        Arc::new(Interaction::new(&p, 16, Boundary::Torus).unwrap()),
        0.2,
        8,
    )
    .unwrap();
    assert_eq!(anneal(&mut again, &schedule, 200).unwrap().best, res.best);
}

#[test]
fn enumerated_energies_match_direct() {
    let p = ModelParams::new(2, 3.0, 0.7).with_field(0.2);
    let inter = Interaction::new(&p, 3, Boundary::Fixed(Exterior::Plus)).unwrap();
    let energies = enumerate_energies(&inter).unwrap();
    for idx in [0usize, 1, 77, 300, 511] {
        let spins = (0..9).map(|i| if idx >> i & 1 == 1 { -1 } else { 1 }).collect();
        let c = SpinConfig::from_spins(2, 3, Boundary::Fixed(Exterior::Plus), spins).unwrap();
        let e = total_energy_direct(&c, &inter).unwrap().total;
        assert!((energies[idx] - e).abs() <= 1e-9);
        assert_eq!(config_index(&c), idx);
    }
}

#[test]
fn four_spin_chain_samples_boltzmann_weights() {
    let p = ModelParams::new(1, 1.5, 0.5).with_kappa(1.2).with_field(0.15).with_beta(0.8);
    let inter = Arc::new(Interaction::new(&p, 4, Boundary::Torus).unwrap());
    let exact = exact_distribution(&inter, p.beta).unwrap();
    let total: f64 = exact.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mut st = ChainState::new(SpinConfig::uniform(1, 4, Boundary::Torus, 1), inter, p.beta, 21).unwrap();
    let (freq, err) = empirical_distribution(&mut st, 200_000, 20).unwrap();
    for s in 0..16 {
        assert!((freq[s] - exact[s]).abs() <= 4.0 * err[s] + 1e-4, "state {s}: {} vs {}", freq[s], exact[s]);
    }
}

fn zeta2() -> f64 {
    std::f64::consts::PI.powi(2) / 6.0
}

#[test]
fn exact_check_three_spins_against_closed_forms() {
    let p = ModelParams::new(1, 2.0, 1.0);
    let rows = exact_conditional_check(&ExteriorPattern::Uniform(1), 1, &p, &[0.5, 10.0], None).unwrap();
    let t_l = 6.0 * zeta2() - 4.5;
    assert!((rows[0].t_l.value - t_l).abs() <= 1e-12 + rows[0].t_l.tail);
    assert_eq!(rows[0].e_bd_max, 2.0);
    for r in &rows {
        assert!(r.holds, "{r:?}");
        assert!(r.p_upper <= r.bound_with_slack);
    }
    // kappa T_L above the largest possible observable: empty event
    assert_eq!(rows[1].p_event, 0.0);

    // beta = 0: uniform measure, probability is a count
    let p0 = p.with_beta(0.0);
    let ext = [2.0 * zeta2() - 1.25, 2.0 * zeta2() - 2.0, 2.0 * zeta2() - 1.25];
    for kappa in [0.1, 0.5, 0.75] {
        let row = &exact_conditional_check(&ExteriorPattern::Uniform(1), 1, &p0, &[kappa], None).unwrap()[0];
        let hits = (0..8u32)
            .filter(|m| {
                let t: f64 = (0..3).map(|i| if m >> i & 1 == 1 { -ext[i] } else { ext[i] }).sum();
                t >= kappa * t_l - 1e-12
            })
            .count();
        assert!((row.p_event - hits as f64 / 8.0).abs() < 1e-12, "kappa {kappa}");
        assert_eq!(row.bound, 1.0);
        assert!(row.holds);
    }
}

#[test]
fn exact_check_other_exteriors() {
    for d in [1usize, 2] {
        let p = ModelParams::new(d, d as f64 + 1.0, 1.0).with_beta(1.0);
        let patterns = [
            ExteriorPattern::Uniform(-1),
            ExteriorPattern::Checkerboard,
            ExteriorPattern::RandomPatch { seed: 4, radius: 3, outside: 1 },
        ];
        for ext in &patterns {
            let rows = exact_conditional_check(ext, 1, &p, &[0.25, 0.5, 0.75], None).unwrap();
            for r in rows {
                assert!(r.holds, "{r:?}");
                assert!((0.0..=1.0).contains(&r.p_event));
                if matches!(ext, ExteriorPattern::Checkerboard) {
                    assert!(r.tau > 0.0 && r.tau.is_finite());
                }
            }
        }
    }
}

#[test]
fn single_site_droplet_ratio() {
    let p = ModelParams::new(2, 3.5, 1.0);
    let rep = peierls_experiment(&p, &[1], 2, 0, GrowthPolicy::RandomGrowth, 1).unwrap();
    let eps = p.kernel().site_sum(1e-10).unwrap().midpoint();
    for r in &rep.rows {
        assert_eq!(r.boundary_bonds, 4);
        assert!((r.ratio - eps / 4.0).abs() <= 1e-12);
        assert!(r.identity_error.unwrap() <= 1e-9);
    }
}

#[test]
fn peierls_identity_on_random_droplets() {
    let p = ModelParams::new(2, 3.0, 1.3);
    let rep = peierls_experiment(&p, &[5, 17, 40], 3, 77, GrowthPolicy::RandomGrowth, 1).unwrap();
    assert_eq!(rep.rows.len(), 9);
    for r in &rep.rows {
        assert!(r.identity_error.unwrap() <= 1e-9 * r.delta_e.abs().max(1.0), "{r:?}");
    }
    assert!(rep.j0_hat >= rep.rows[0].ratio);
    let b = BoxSpec::new(2, 40);
    assert_eq!(droplet_sample(&b, 81, 0, GrowthPolicy::Box).unwrap().boundary_bonds(), 36);
}

#[test]
fn t_scan_limits() {
    let hot = ModelParams::new(2, 3.0, 1.0).with_beta(1e-9);
    let rows = t_observable_scan(&hot, &[1, 2], 12, 10, 640, 2).unwrap();
    for r in &rows {
        assert!(r.ratio_mean.abs() <= 3.0 * r.ratio_err, "{r:?}");
    }
    let frozen = ModelParams::new(2, 4.5, 3.0).with_beta(1e6);
    let rows = t_observable_scan(&frozen, &[1, 2], 12, 0, 32, 2).unwrap();
    for r in &rows {
        assert!((r.ratio_mean - 1.0).abs() < 1e-12);
        assert!((r.m2_mean - 1.0).abs() < 1e-12);
    }
}
