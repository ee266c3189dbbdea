use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitney_core::atlas::{
    atlas_project, correspondence_all, reconstruct, transport, AtlasJet, Chart, Codomain, FiniteAtlas,
    TRANSPORT_TOL,
};
use whitney_core::expr::VectorExpr;
use whitney_core::fdb::{chain_derivative, jet_pullback};
use whitney_core::jets::{Jet, JetPoint};
use whitney_core::multiindex::{IndexSpace, MultiIndex};

fn polynomial_map(rng: &mut ChaCha8Rng, s: usize, t: usize) -> VectorExpr {
    let comps: Vec<String> = (0..t)
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| {
                    let c = f64::from(rng.gen_range(-6i32..=6)) / 4.0;
                    let vars: Vec<String> = (0..rng.gen_range(0..=2)).map(|_| format!("x{}", rng.gen_range(0..s))).collect();
                    std::iter::once(format!("{c}")).chain(vars).collect::<Vec<_>>().join("*")
                })
                .collect::<Vec<_>>()
                .join(" + ")
        })
        .collect();
    VectorExpr::parse(&comps, s).unwrap()
}

fn jet_at(rng: &mut ChaCha8Rng, pts: &[(String, Vec<f64>)], k: u32, m: usize) -> Jet {
    let n = pts[0].1.len();
    let len = IndexSpace::get(n, k).len();
    let points = pts
        .iter()
        .map(|(id, x)| JetPoint {
            id: id.clone(),
            x: x.clone(),
            values: (0..len).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        })
        .collect();
    Jet::new(n, k, m, points).unwrap()
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

fn line_atlas() -> FiniteAtlas {
    FiniteAtlas::new(
        1,
        vec![
            Chart { id: "a".into(), codomain: Codomain::All },
            Chart { id: "b".into(), codomain: Codomain::Box(vec![[0.0, 1e300]]) },
            Chart { id: "c".into(), codomain: Codomain::All },
        ],
        vec![
            ("a".into(), "b".into(), VectorExpr::parse(&["exp(x0)"], 1).unwrap()),
            ("b".into(), "a".into(), VectorExpr::parse(&["ln(x0)"], 1).unwrap()),
            ("a".into(), "c".into(), VectorExpr::parse(&["x0 + x0^3"], 1).unwrap()),
            ("b".into(), "c".into(), VectorExpr::parse(&["ln(x0) + ln(x0)^3"], 1).unwrap()),
        ],
    )
    .unwrap()
}

fn plane_atlas() -> FiniteAtlas {
    let shear = VectorExpr::parse(&["x0 + x1^3", "x1"], 2).unwrap();
    let unshear = VectorExpr::parse(&["x0 - x1^3", "x1"], 2).unwrap();
    FiniteAtlas::new(
        2,
        vec![
            Chart { id: "u".into(), codomain: Codomain::All },
            Chart { id: "v".into(), codomain: Codomain::All },
        ],
        vec![("u".into(), "v".into(), shear), ("v".into(), "u".into(), unshear)],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pullbacks_compose(seed in any::<u64>(), r in 1usize..=3, s in 1usize..=3, t in 1usize..=3, k in 0u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = polynomial_map(&mut rng, r, s);
        let g = polynomial_map(&mut rng, s, t);
        let a: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = h.eval_real(&a).unwrap();
        let c = g.eval_real(&b).unwrap();
        let f = jet_at(&mut rng, &[("q".into(), c)], k, 2);
        let stepwise = jet_pullback(&h, &jet_pullback(&g, &f, &[("q".into(), b)]).unwrap(), &[("q".into(), a.clone())]).unwrap();
        let direct = jet_pullback(&g.compose(&h), &f, &[("q".into(), a)]).unwrap();
        prop_assert!(rel_gap(stepwise.raw_values(), direct.raw_values()) <= 1e-9);
    }

    #[test]
    fn pullback_is_linear_in_the_jet(seed in any::<u64>(), s in 1usize..=3, t in 1usize..=3, k in 0u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = polynomial_map(&mut rng, s, t);
        let xs: Vec<(String, Vec<f64>)> = (0..3)
            .map(|i| (format!("p{i}"), (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let targets: Vec<(String, Vec<f64>)> = xs.iter().map(|(id, x)| (id.clone(), g.eval_real(x).unwrap())).collect();
        if targets.iter().enumerate().any(|(i, a)| targets[..i].iter().any(|b| b.1 == a.1)) {
            return Ok(());
        }
        let f1 = jet_at(&mut rng, &targets, k, 2);
        let f2 = jet_at(&mut rng, &targets, k, 2);
        let (u, v) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let lhs = jet_pullback(&g, &f1.linear_combination(u, &f2, v).unwrap(), &xs).unwrap();
        let p1 = jet_pullback(&g, &f1, &xs).unwrap();
        let p2 = jet_pullback(&g, &f2, &xs).unwrap();
        let rhs = p1.linear_combination(u, &p2, v).unwrap();
        prop_assert!(rel_gap(lhs.raw_values(), rhs.raw_values()) <= 1e-12);
    }

    #[test]
    fn chain_rule_matches_substitution(seed in any::<u64>(), s in 1usize..=3, t in 1usize..=3, order in 0u32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = polynomial_map(&mut rng, t, 2);
        let g = polynomial_map(&mut rng, s, t);
        let mut e = vec![0u32; s];
        for _ in 0..order {
            e[rng.gen_range(0..s)] += 1;
        }
        let alpha = MultiIndex::new(e).unwrap();
        let x: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = chain_derivative(&f, &g, &alpha, &x).unwrap();
        let expected: Vec<f64> = f
            .compose(&g)
            .eval_taylor(&x, order)
            .unwrap()
            .iter()
            .map(|c| c.extract_derivative(&alpha).unwrap())
            .collect();
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn induced_atlas_jets_correspond_and_reconstruct(seed in any::<u64>(), k in 1u32..=3, plane in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (atlas, n, base, f) = if plane {
            (plane_atlas(), 2, "u", VectorExpr::parse(&["sin(x0) * x1", "x0^2 - x1"], 2).unwrap())
        } else {
            (line_atlas(), 1, "a", VectorExpr::parse(&["cos(x0) + x0^2", "exp(-x0)"], 1).unwrap())
        };
        let pts: Vec<(String, Vec<f64>)> = (0..4)
            .map(|i| (format!("p{i}"), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let aj = AtlasJet::from_global_function(&atlas, &f, base, &pts, k).unwrap();
        for report in correspondence_all(&aj, &atlas, 1e-9).unwrap() {
            prop_assert!(report.pass, "{} -> {}: {}", report.phi, report.psi, report.max_residual);
        }
        let charts: Vec<String> = aj.charts().map(str::to_string).collect();
        for target in charts.iter().filter(|c| c.as_str() != base) {
            let projected = atlas_project(&aj, &[base]).unwrap();
            let rebuilt = reconstruct(&projected, &atlas, target, TRANSPORT_TOL).unwrap();
            let orig = aj.jet(target).unwrap();
            for (p, id) in orig.ids().iter().enumerate() {
                let q = rebuilt.index_of(id).unwrap();
                prop_assert!(rel_gap(rebuilt.point_values(q), orig.point_values(p)) <= 1e-9);
            }
            for l in 0..=k {
                let lowered = transport(&aj.project_order(l).unwrap(), &atlas, &[base], target, TRANSPORT_TOL).unwrap();
                let full = transport(&aj, &atlas, &[base], target, TRANSPORT_TOL).unwrap().project(l).unwrap();
                prop_assert_eq!(lowered, full);
            }
        }
    }
}
