use approx::assert_relative_eq;
use lrising::energy::*;
use lrising::geometry::Region;
use lrising::kernel::{ModelParams, PairKernel};
use lrising::sums::region_complement_sum;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn fast_and_direct_energies_agree_on_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (d, n, s) in [(2usize, 16usize, 3.0), (2, 16, 4.5), (1, 64, 1.5), (3, 6, 4.0)] {
        let p = ModelParams::new(d, s, 1.3).with_field(0.2);
        let inter = Interaction::new(&p, n, Boundary::Torus).unwrap();
        let count = if d == 2 { 100 } else { 10 };
        for _ in 0..count {
            let c = SpinConfig::random(d, n, Boundary::Torus, &mut rng);
            let a = total_energy_direct(&c, &inter).unwrap();
            let b = total_energy_fast(&c, &inter).unwrap();
            assert!(rel(a.total, b.total) <= 1e-10, "{a:?} {b:?}");
            assert_eq!(a.total, a.ferro + a.antiferro + a.field);
        }
    }
}

#[test]
fn delta_flip_matches_recomputed_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for boundary in [Boundary::Torus, Boundary::Fixed(Exterior::Plus), Boundary::Fixed(Exterior::Free)] {
        let p = ModelParams::new(2, 3.0, 0.8).with_field(-0.3);
        let inter = Interaction::new(&p, 8, boundary).unwrap();
        let mut c = SpinConfig::random(2, 8, boundary, &mut rng);
        let cache = LocalFieldCache::new(&c, &inter).unwrap();
        for _ in 0..20 {
            let site = rng.gen_range(0..c.len());
            let before = total_energy_direct(&c, &inter).unwrap().total;
            let de = delta_flip(&c, &cache, &inter, site);
            c.spins[site] = -c.spins[site];
            let after = total_energy_direct(&c, &inter).unwrap().total;
            c.spins[site] = -c.spins[site];
            assert!((after - before - de).abs() <= 1e-9, "{boundary:?}");
        }
    }
}

#[test]
fn isolated_spin_in_field() {
    let p = ModelParams::new(2, 3.0, 0.0).with_kappa(0.0).with_field(0.4);
    let inter = Interaction::new(&p, 4, Boundary::Torus).unwrap();
    let c = SpinConfig::uniform(2, 4, Boundary::Torus, -1);
    let cache = LocalFieldCache::new(&c, &inter).unwrap();
    assert_eq!(delta_flip(&c, &cache, &inter, 3), 2.0 * -1.0 * 0.4);
}

#[test]
fn flip_trace_stays_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for boundary in [Boundary::Torus, Boundary::Fixed(Exterior::Minus)] {
        let p = ModelParams::new(2, 3.0, 1.0).with_field(0.1);
        let inter = Interaction::new(&p, 16, boundary).unwrap();
        let mut c = SpinConfig::random(2, 16, boundary, &mut rng);
        let mut cache = LocalFieldCache::new(&c, &inter).unwrap();
        let start = total_energy_direct(&c, &inter).unwrap().total;
        let mut trace = 0.0;
        for step in 0..10_000 {
            let site = rng.gen_range(0..c.len());
            trace += apply_flip(&mut c, &mut cache, &inter, site);
            if step % 2500 == 0 {
                cache.audit(&c, &inter).unwrap();
            }
        }
        let end = total_energy_direct(&c, &inter).unwrap().total;
        assert!((start + trace - end).abs() <= 1e-8, "{}", start + trace - end);
        assert!(cache.deviation(&c, &inter).unwrap() <= 1e-9);
        let from_cache = energy_from_cache(&c, &cache, &inter);
        assert!((from_cache.total - end).abs() <= 1e-8);
    }
}

#[test]
fn double_flip_restores_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = ModelParams::new(3, 4.0, 1.0);
    let inter = Interaction::new(&p, 5, Boundary::Torus).unwrap();
    let mut c = SpinConfig::random(3, 5, Boundary::Torus, &mut rng);
    let mut cache = LocalFieldCache::new(&c, &inter).unwrap();
    let (c0, e0) = (c.clone(), energy_from_cache(&c, &cache, &inter).total);
    let a = apply_flip(&mut c, &mut cache, &inter, 37);
    let b = apply_flip(&mut c, &mut cache, &inter, 37);
    assert_eq!(c, c0);
    assert!((a + b).abs() <= 1e-12);
    assert!((energy_from_cache(&c, &cache, &inter).total - e0).abs() <= 1e-10);
}

#[test]
fn stale_cache_is_reported() {
    let p = ModelParams::new(1, 2.0, 1.0);
    let inter = Interaction::new(&p, 8, Boundary::Torus).unwrap();
    let mut c = SpinConfig::uniform(1, 8, Boundary::Torus, 1);
    let cache = LocalFieldCache::new(&c, &inter).unwrap();
    c.spins[2] = -1;
    assert!(matches!(cache.audit(&c, &inter), Err(lrising::Error::StaleCache { .. })));
}

#[test]
fn droplet_identity_on_plus_background() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let p = ModelParams::new(2, 3.0, 1.7);
    let n = 12;
    let boundary = Boundary::Fixed(Exterior::Plus);
    let inter = Interaction::new(&p, n, boundary).unwrap();
    let c = SpinConfig::uniform(2, n, boundary, 1);
    for size in [1usize, 5, 20, 40] {
        // random animal grown from the centre
        let mut sites = vec![[6i64, 6, 0]];
        while sites.len() < size {
            let base = sites[rng.gen_range(0..sites.len())];
            let mut t = base;
            t[rng.gen_range(0..2)] += if rng.gen() { 1 } else { -1 };
            if (0..2).all(|k| t[k] >= 1 && t[k] < n as i64 - 1) && !sites.contains(&t) {
                sites.push(t);
            }
        }
        let region = Region::from_sites(2, sites).unwrap();
        let de = droplet_flip_delta(&c, &inter, &region).unwrap();
        let cross = region_complement_sum(&p.kernel(), &region).unwrap().midpoint();
        let expect = 2.0 * p.j * region.boundary_bonds() as f64 - 2.0 * cross;
        assert!(rel(de, expect) <= 1e-9, "size {size}: {de} vs {expect}");
    }
}

#[test]
fn droplet_special_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 6;
    let p = ModelParams::new(2, 3.5, 1.0).with_field(0.3);
    let inter = Interaction::new(&p, n, Boundary::Torus).unwrap();
    let c = SpinConfig::random(2, n, Boundary::Torus, &mut rng);
    let all = Region::from_sites(2, (0..c.len()).map(|i| c.site(i))).unwrap();
    let de = droplet_flip_delta(&c, &inter, &all).unwrap();
    assert!((de - 2.0 * p.h * c.spin_sum() as f64).abs() <= 1e-10);
    let cache = LocalFieldCache::new(&c, &inter).unwrap();
    let one = Region::from_sites(2, [c.site(9)]).unwrap();
    assert!((droplet_flip_delta(&c, &inter, &one).unwrap() - delta_flip(&c, &cache, &inter, 9)).abs() <= 1e-10);
    let split = Region::from_sites(2, [[0, 0, 0], [2, 2, 0]]).unwrap();
    assert!(droplet_flip_delta(&c, &inter, &split).is_err());
}

#[test]
fn interaction_observable_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = ModelParams::new(2, 3.0, 1.0);
    let n = 16;
    let inter = Interaction::new(&p, n, Boundary::Torus).unwrap();
    let inner_l = 3;
    // sigma = +1 reduces to the deterministic box sum restricted to the torus box
    let plus = SpinConfig::uniform(2, n, Boundary::Torus, 1);
    let t_plus = interaction_observable(&plus, &inter, inner_l).unwrap();
    let k = p.kernel();
    let ctr = box_center(n);
    let mut brute = 0.0;
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            let in_a = (a - ctr).abs() <= 3 && (b - ctr).abs() <= 3;
            if !in_a {
                continue;
            }
            for x in 0..n as i64 {
                for y in 0..n as i64 {
                    if (x - ctr).abs() <= 3 && (y - ctr).abs() <= 3 {
                        continue;
                    }
                    brute += k.at_sq((a - x).pow(2) + (b - y).pow(2));
                }
            }
        }
    }
    assert_relative_eq!(t_plus, brute, max_relative = 1e-12);

    let mut c = SpinConfig::random(2, n, Boundary::Torus, &mut rng);
    let t = interaction_observable(&c, &inter, inner_l).unwrap();
    let mut flipped = c.clone();
    flipped.flip_all();
    assert_relative_eq!(interaction_observable(&flipped, &inter, inner_l).unwrap(), t, max_relative = 1e-12);
    for i in 0..c.len() {
        let s = c.site(i);
        if (0..2).all(|m| (s[m] - ctr).abs() <= inner_l as i64) {
            c.spins[i] = -c.spins[i];
        }
    }
    assert_relative_eq!(interaction_observable(&c, &inter, inner_l).unwrap(), -t, max_relative = 1e-12);
    assert!(interaction_observable(&c, &inter, 4).is_err());
}

#[test]
fn spin_reversal_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let p0 = ModelParams::new(2, 3.0, 1.0);
    let ph = p0.with_field(0.37);
    for p in [p0, ph] {
        let inter = Interaction::new(&p, 8, Boundary::Torus).unwrap();
        let c = SpinConfig::random(2, 8, Boundary::Torus, &mut rng);
        let mut r = c.clone();
        r.flip_all();
        let e = total_energy_direct(&c, &inter).unwrap().total;
        let er = total_energy_direct(&r, &inter).unwrap().total;
        assert!((er - e - 2.0 * p.h * c.spin_sum() as f64).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_and_zero_mode(seed in any::<u64>(), n in 3usize..12, d in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = SpinConfig::random(d, n, Boundary::Torus, &mut rng);
        let sf = structure_factor(&c);
        let total: f64 = sf.iter().sum();
        prop_assert!((total - c.len() as f64).abs() <= 1e-9 * c.len() as f64);
        let m = c.magnetization();
        prop_assert!((sf[0] - c.len() as f64 * m * m).abs() <= 1e-9 * c.len() as f64);
        let pk = structure_peak(&sf, d, n);
        prop_assert!(pk.value <= c.len() as f64 + 1e-9);
    }

    #[test]
    fn block_magnetization_is_a_mean(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = SpinConfig::random(2, n, Boundary::Torus, &mut rng);
        let full = block_magnetization(&c, n).unwrap();
        prop_assert!((full - c.magnetization()).abs() < 1e-15);
        let b = block_magnetization(&c, (n + 1) / 2).unwrap();
        prop_assert!((-1.0..=1.0).contains(&b));
    }
}
