use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitney_core::decomp::{AaBox, ClosedSet, Decomposition, WhitneyCube, DEFAULT_MAX_LEVEL};
use whitney_core::pou::{estimate_derivative_bounds, partition_at, psi_cube};

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> ClosedSet {
    if rng.gen_bool(0.5) {
        let pts = (0..rng.gen_range(1..=4)).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        ClosedSet::points(pts).unwrap()
    } else {
        let boxes = (0..rng.gen_range(1..=2))
            .map(|_| {
                let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..1.0)).collect();
                let hi = lo.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
                AaBox::new(lo, hi).unwrap()
            })
            .collect();
        ClosedSet::boxes(boxes).unwrap()
    }
}

/// Points off the set, at log-uniform distances between 1e-4 and ~3.
fn samples(rng: &mut ChaCha8Rng, set: &ClosedSet, count: usize) -> Vec<Vec<f64>> {
    let n = set.dim();
    let mut out = Vec::new();
    while out.len() < count {
        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.5..2.5)).collect();
        let anchor = set.nearest_point(&base);
        let t = 10f64.powf(rng.gen_range(-4.0..0.5));
        let x: Vec<f64> = anchor.iter().map(|a| a + t * rng.gen_range(-1.0..1.0)).collect();
        if set.distance_to_set(&x) > 0.0 {
            out.push(x);
        }
    }
    out
}

fn criterion(set: &ClosedSet, c: &WhitneyCube) -> bool {
    let l = c.side();
    set.box_distance_sq(&c.lo(), &c.hi()) >= 16.0 * c.dim() as f64 * l * l
}

/// Membership from the definition: the cube meets the criterion and its parent does not.
fn member(set: &ClosedSet, c: &WhitneyCube) -> bool {
    criterion(set, c) && (c.level == 0 || !criterion(set, &c.ancestor(c.level - 1)))
}

fn corners(c: &WhitneyCube) -> Vec<Vec<f64>> {
    let (lo, hi) = (c.lo(), c.hi());
    let n = c.dim();
    (0..1u32 << n)
        .map(|mask| (0..n).map(|i| if (mask >> i) & 1 == 1 { hi[i] } else { lo[i] }).collect())
        .collect()
}

/// Every member cube whose enlargement contains `x`, on levels next to the cube of `x`.
fn scan_supporting(set: &ClosedSet, x: &[f64], own_level: u32) -> Vec<WhitneyCube> {
    let mut out = Vec::new();
    for j in own_level.saturating_sub(1)..=own_level + 1 {
        let scale = 2f64.powi(j as i32);
        let ranges: Vec<(i64, i64)> = x
            .iter()
            .map(|v| ((v * scale - 1.1).floor() as i64, (v * scale + 0.1).ceil() as i64))
            .collect();
        let total: i64 = ranges.iter().map(|(a, b)| b - a + 1).product();
        for code in 0..total {
            let mut rest = code;
            let corner = ranges
                .iter()
                .map(|(a, b)| {
                    let w = b - a + 1;
                    let v = a + rest % w;
                    rest /= w;
                    v
                })
                .collect();
            let c = WhitneyCube::new(j, corner);
            if c.enlarged_contains(x) && member(set, &c) {
                out.push(c);
            }
        }
    }
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cube_geometry_bounds(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng, n);
        let rn = n as f64;
        let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
        for x in samples(&mut rng, &set, 40) {
            let own = decomp.locate(&x).unwrap();
            prop_assert!(own.contains_half_open(&x));
            prop_assert!(member(&set, &own));
            let l = own.side();
            let d2 = set.box_distance_sq(&own.lo(), &own.hi());
            prop_assert!(d2 >= 16.0 * rn * l * l);
            if own.level >= 1 {
                prop_assert!(d2 < 100.0 * rn * l * l);
                for y in corners(&own) {
                    prop_assert!(set.distance_to_set(&y) < 14.0 * rn.sqrt() * l);
                }
            }
            for nb in decomp.neighbors(&own).unwrap() {
                prop_assert!(member(&set, &nb));
                prop_assert!(own.touches(&nb));
                let ratio = nb.side() / l;
                prop_assert!(ratio == 0.5 || ratio == 1.0 || ratio == 2.0);
                for y in corners(&own) {
                    for ys in corners(&nb) {
                        prop_assert!(set.distance_to_set(&y) < 2.0 * set.distance_to_set(&ys));
                    }
                }
            }
            prop_assert_eq!(decomp.supporting_cubes(&x).unwrap(), scan_supporting(&set, &x, own.level));
        }
    }

    #[test]
    fn locate_ignores_query_history(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng, n);
        let xs = samples(&mut rng, &set, 30);
        let warm = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
        let forward: Vec<WhitneyCube> = xs.iter().map(|x| warm.locate(x).unwrap()).collect();
        for (x, c) in xs.iter().zip(&forward).rev() {
            let fresh = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
            prop_assert_eq!(&fresh.locate(x).unwrap(), c);
            prop_assert_eq!(&warm.locate(x).unwrap(), c);
        }
    }

    #[test]
    fn partition_properties(seed in any::<u64>(), n in 1usize..=3, k in 0u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng, n);
        let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
        for x in samples(&mut rng, &set, 20) {
            let parts = partition_at(&decomp, &x, k).unwrap();
            let len = parts[0].1.coefficients().len();
            let (mut sum, mut mass) = (vec![0.0; len], vec![0.0f64; len]);
            for (c, phi) in &parts {
                prop_assert!(c.enlarged_contains(&x));
                prop_assert!((0.0..=1.0).contains(&phi.value()));
                for (i, v) in phi.coefficients().iter().enumerate() {
                    sum[i] += v;
                    mass[i] += v.abs();
                }
                for nb in decomp.neighbors(c).unwrap() {
                    if !nb.enlarged_contains(&x) {
                        prop_assert!(psi_cube(&nb, &x, k).is_zero());
                    }
                }
            }
            sum[0] -= 1.0;
            for (s, w) in sum.iter().zip(&mass) {
                prop_assert!(s.abs() <= 1e-12 * w.max(1.0), "{s} against mass {w}");
            }
        }
    }
}

#[test]
fn neighbor_counts_are_bounded_and_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3usize {
        let bound = 3usize.pow(n as u32) * (2usize.pow(n as u32) + 2);
        let mut seen = Vec::new();
        for count in [100, 400] {
            let mut most = 0;
            for _ in 0..4 {
                let set = random_set(&mut rng, n);
                let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
                for x in samples(&mut rng, &set, count / 4) {
                    let own = decomp.locate(&x).unwrap();
                    most = most.max(decomp.neighbors(&own).unwrap().len());
                    most = most.max(decomp.supporting_cubes(&x).unwrap().len());
                }
            }
            assert!(most <= bound, "n={n}: {most} > {bound}");
            seen.push(most);
        }
        assert!(seen[0] > 0 && seen[1] <= bound);
    }
}

#[test]
fn derivative_bounds_settle_under_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let set = ClosedSet::points(vec![vec![0.0, 0.0], vec![1.0, 0.5]]).unwrap();
    let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
    let coarse = estimate_derivative_bounds(&decomp, &samples(&mut rng, &set, 400), 2).unwrap();
    let fine = estimate_derivative_bounds(&decomp, &samples(&mut rng, &set, 1600), 2).unwrap();
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(c.is_finite() && f.is_finite() && *c > 0.0);
        assert!(*f <= 2.0 * c && *c <= 2.0 * f, "{coarse:?} vs {fine:?}");
    }
}
