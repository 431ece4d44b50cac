mod support;

use avmac::capacity::*;
use avmac::channel::library::*;
use avmac::util::compositions;
use avmac::{Alphabets, Avmac, Dist};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::channels::random_channel;

const TOL: f64 = 1e-7;

/// Direct triple-sum evaluation of the three mutual informations at state law `q`.
fn oracle_mi(ch: &Avmac, px: &[f64], py: &[f64], q: &[f64], kind: MiKind) -> f64 {
    let sz = ch.sizes();
    let mut p = vec![0.0; sz.x * sz.y * sz.z];
    for x in 0..sz.x {
        for y in 0..sz.y {
            for z in 0..sz.z {
                let v: f64 = (0..sz.s).map(|s| q[s] * ch.w(x, y, s, z)).sum();
                p[(x * sz.y + y) * sz.z + z] = px[x] * py[y] * v;
            }
        }
    }
    let at = |x: usize, y: usize, z: usize| p[(x * sz.y + y) * sz.z + z];
    let mut total = 0.0;
    for x in 0..sz.x {
        for y in 0..sz.y {
            for z in 0..sz.z {
                let pxyz = at(x, y, z);
                if pxyz <= 0.0 {
                    continue;
                }
                let pz: f64 = (0..sz.x).flat_map(|a| (0..sz.y).map(move |b| (a, b))).map(|(a, b)| at(a, b, z)).sum();
                let pyz: f64 = (0..sz.x).map(|a| at(a, y, z)).sum();
                let pxz: f64 = (0..sz.y).map(|b| at(x, b, z)).sum();
                let ratio = match kind {
                    MiKind::Joint => pxyz / (px[x] * py[y] * pz),
                    MiKind::XGivenY => pxyz * py[y] / (px[x] * py[y] * pyz),
                    MiKind::YGivenX => pxyz * px[x] / (px[x] * py[y] * pxz),
                };
                total += pxyz * ratio.log2();
            }
        }
    }
    total
}

#[test]
fn infimum_is_below_every_grid_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for s_size in 1..=3 {
        for _ in 0..3 {
            let ch = random_channel(Alphabets::new(2, 2, s_size, 3), &mut rng);
            let px = Dist::from_weights(&[1.0, 2.0]).unwrap();
            let py = Dist::from_weights(&[3.0, 1.0]).unwrap();
            for kind in [MiKind::XGivenY, MiKind::YGivenX, MiKind::Joint] {
                let r = min_state_mi(&ch, &px, &py, kind, TOL).unwrap();
                let at_argmin = oracle_mi(&ch, px.values(), py.values(), &r.argmin, kind);
                assert!((at_argmin - r.value).abs() < 1e-9);
                for c in compositions(32, s_size) {
                    let q: Vec<f64> = c.iter().map(|&v| v as f64 / 32.0).collect();
                    let v = oracle_mi(&ch, px.values(), py.values(), &q, kind);
                    assert!(r.value <= v + TOL, "{kind:?}: {} > {v}", r.value);
                }
            }
        }
    }
}

#[test]
fn solver_reaches_tolerance_with_vanishing_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let sizes = Alphabets::new(rng.gen_range(2..4), rng.gen_range(2..4), 3, rng.gen_range(2..4));
        let ch = random_channel(sizes, &mut rng);
        let px = Dist::from_weights(&(0..sizes.x).map(|_| rng.gen_range(0.05..1.0)).collect::<Vec<_>>()).unwrap();
        let py = Dist::from_weights(&(0..sizes.y).map(|_| rng.gen_range(0.05..1.0)).collect::<Vec<_>>()).unwrap();
        for kind in [MiKind::XGivenY, MiKind::YGivenX, MiKind::Joint] {
            let r = min_state_mi(&ch, &px, &py, kind, 1e-8).unwrap();
            assert!(r.gap <= 1e-8);
            let direct = oracle_mi(&ch, px.values(), py.values(), &r.argmin, kind);
            assert!((direct - r.value).abs() < 1e-9);
        }
    }
}

#[test]
fn pentagon_examples() {
    let u = Dist::uniform(2);
    let p = pentagon(&adder(), &u, &u, TOL).unwrap();
    assert!((p.r1_max - 1.0).abs() < TOL && (p.r2_max - 1.0).abs() < TOL);
    assert!((p.rsum_max - 1.5).abs() < TOL);
    let p = pentagon(&xor(), &u, &u, TOL).unwrap();
    assert!(p.r1_max.max(p.r2_max).max(p.rsum_max) < 1e-6);
}

#[test]
fn region_grows_with_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ch = random_channel(Alphabets::new(2, 2, 2, 3), &mut rng);
    let coarse = random_code_region(&ch, 2, TOL).unwrap().region;
    let fine = random_code_region(&ch, 4, TOL).unwrap().region;
    for v in &coarse.vertices {
        assert!(fine.contains(v.x, v.y, 1e-6));
    }
}

#[test]
fn region_contains_examples() {
    let adder_region = random_code_region(&adder(), 4, TOL).unwrap().region;
    assert!(adder_region.contains(0.0, 0.0, 0.0));
    assert!(adder_region.contains(1.0, 0.5, 1e-6));
    let xor_region = random_code_region(&xor(), 2, TOL).unwrap().region;
    assert!(xor_region.contains(0.0, 0.0, 0.0));
    assert!(!xor_region.contains(0.1, 0.0, 0.0));
    let csv = region_csv(&xor_region, &|v| format!("{v}"));
    assert_eq!(csv, "r1,r2\n0,0\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sum_bound_dominates_single_bounds(seed in any::<u64>(), w in 1usize..6, v in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(Alphabets::new(2, 2, 2, 2), &mut rng);
        let px = Dist::from_weights(&[w as f64, 1.0]).unwrap();
        let py = Dist::from_weights(&[1.0, v as f64]).unwrap();
        let p = pentagon(&ch, &px, &py, TOL).unwrap();
        prop_assert!(p.rsum_max >= p.r1_max - 2.0 * TOL);
        prop_assert!(p.rsum_max >= p.r2_max - 2.0 * TOL);
    }

    #[test]
    fn output_relabeling_keeps_region(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(Alphabets::new(2, 2, 2, 3), &mut rng);
        let relabeled = ch.permute_outputs(&[2, 0, 1]).unwrap();
        let a = random_code_region(&ch, 2, TOL).unwrap().region;
        let b = random_code_region(&relabeled, 2, TOL).unwrap().region;
        for v in &a.vertices {
            prop_assert!(b.contains(v.x, v.y, 1e-6));
        }
        for v in &b.vertices {
            prop_assert!(a.contains(v.x, v.y, 1e-6));
        }
    }

    #[test]
    fn region_is_convex_and_nonnegative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(Alphabets::new(2, 2, 2, 2), &mut rng);
        let r = random_code_region(&ch, 2, TOL).unwrap().region;
        prop_assert!(r.contains(0.0, 0.0, 0.0));
        prop_assert!(r.vertices.iter().all(|p| p.x >= -1e-12 && p.y >= -1e-12));
        prop_assert!(avmac::geometry::polygon_area(&r.vertices) >= 0.0);
    }
}
