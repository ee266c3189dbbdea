//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fail.

use std::panic;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitney_core::atlas::{
    atlas_project, correspondence_all, reconstruct, AtlasJet, Chart, Codomain, FiniteAtlas, ManifoldExtension,
    PartitionEntry,
};
use whitney_core::decomp::{AaBox, ClosedSet, Decomposition, WhitneyCube, DEFAULT_MAX_LEVEL};
use whitney_core::expr::{Expr, VectorExpr};
use whitney_core::extend::Extension;
use whitney_core::fdb::{
    chain_derivative, inclusion_map, jet_pullback, product_lift, product_restrict, projection_map,
};
use whitney_core::jets::{Jet, JetPoint, Seminorm};
use whitney_core::multiindex::{IndexSpace, MultiIndex};
use whitney_core::pou::{partition_at, psi_cube};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const PIECES: [&str; 10] = [
    "sin(A)",
    "cos(A)*B",
    "exp(0.4*A)",
    "A*B",
    "1/(3 + A)",
    "sqrt(2 + A*B)",
    "ln(3 + A)",
    "A^2 - 0.5*B",
    "exp(-A^2)",
    "cos(A - B)",
];

/// A random smooth expression in `x0..x{n-1}`, defined on `[-1.5, 1.5]ⁿ`.
fn smooth_expr(rng: &mut ChaCha8Rng, n: usize) -> String {
    let terms: Vec<String> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut e = PIECES.choose(rng).unwrap().to_string();
            for ph in ["A", "B"] {
                e = e.replace(ph, &format!("x{}", rng.gen_range(0..n)));
            }
            format!("{:.3}*{e}", rng.gen_range(-2.0..2.0))
        })
        .collect();
    terms.join(" + ")
}

fn smooth_map(rng: &mut ChaCha8Rng, s: usize, t: usize) -> VectorExpr {
    let comps: Vec<String> = (0..t).map(|_| smooth_expr(rng, s)).collect();
    VectorExpr::parse(&comps, s).unwrap()
}

/// `x ↦ (sin x0, …)`, keeping arguments of an outer map inside its domain.
fn bounded(n: usize) -> VectorExpr {
    let comps: Vec<String> = (0..n).map(|i| format!("sin(x{i})")).collect();
    VectorExpr::parse(&comps, n).unwrap()
}

fn points_in(rng: &mut ChaCha8Rng, n: usize, count: usize, half: f64) -> Vec<(String, Vec<f64>)> {
    (0..count)
        .map(|i| (format!("p{i}"), (0..n).map(|_| rng.gen_range(-half..half)).collect()))
        .collect()
}

fn random_jet(rng: &mut ChaCha8Rng, pts: &[(String, Vec<f64>)], k: u32, m: usize) -> Jet {
    let n = pts[0].1.len();
    let len = IndexSpace::get(n, k).len();
    let recs = pts
        .iter()
        .map(|(id, x)| JetPoint {
            id: id.clone(),
            x: x.clone(),
            values: (0..len).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        })
        .collect();
    Jet::new(n, k, m, recs).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn jet_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut inexact, mut worst_ratio) = (0usize, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(0..=3);
        let m = rng.gen_range(1..=3);
        let count = rng.gen_range(1..=20);
        let pts = points_in(&mut rng, n, count, 1.0);
        let f = smooth_map(&mut rng, n, m);
        let jet = Jet::from_expr(&f, &pts, k).unwrap();
        let norm = jet.seminorm_all(k, Seminorm::Max).unwrap();
        let ext = Extension::new(jet.clone(), DEFAULT_MAX_LEVEL);
        for p in 0..jet.len() {
            let at = ext.eval_derivs(jet.point(p), k).unwrap();
            for pos in 0..jet.space().len() {
                if at.values()[pos] != jet.value(p, pos) {
                    inexact += 1;
                }
            }
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let x: Vec<f64> = jet.point(p).iter().zip(&dir).map(|(a, d)| a + 1e-4 * d / len).collect();
            let near = ext.eval_derivs(&x, k).unwrap();
            for pos in 0..jet.space().len() {
                for (u, v) in near.values()[pos].iter().zip(jet.value(p, pos)) {
                    worst_ratio = worst_ratio.max((u - v).abs() / (1e-3 * (1.0 + norm)));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        inexact == 0 && worst_ratio < 1.0 && secs < 60.0,
        format!(
            "20 jets: {inexact} inexact values on A, worst deviation at 1e-4 is {worst_ratio:.3e} of the bound, {secs:.1}s"
        ),
    )
}

fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> (String, Vec<(MultiIndex, f64)>) {
    let mut terms = Vec::new();
    let mut text = Vec::new();
    for alpha in IndexSpace::get(n, deg).indices() {
        let c: f64 = (rng.gen_range(-1000..=1000) as f64) / 500.0;
        let mut t = format!("{c}");
        for (i, &e) in alpha.exponents().iter().enumerate() {
            if e > 0 {
                t += &format!("*x{i}^{e}");
            }
        }
        text.push(t);
        terms.push((alpha.clone(), c));
    }
    (text.join(" + "), terms)
}

fn polynomial_reproduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let fixtures = 6;
    for f in 0..fixtures {
        let n = f % 3 + 1;
        let k = rng.gen_range(1..=3);
        let deg = rng.gen_range(0..=k);
        let (text, terms) = random_polynomial(&mut rng, n, deg);
        let g = VectorExpr::parse(&[text], n).unwrap();
        let count = rng.gen_range(2..=12);
        let pts = points_in(&mut rng, n, count, 1.0);
        let ext = Extension::new(Jet::from_expr(&g, &pts, k).unwrap(), DEFAULT_MAX_LEVEL);
        let queries: Vec<Vec<f64>> = (0..10_000)
            .map(|i| {
                // half the queries close to the set, half anywhere in [-4, 4]ⁿ
                if i % 2 == 0 {
                    let a = &pts[rng.gen_range(0..pts.len())].1;
                    let r = 10f64.powf(rng.gen_range(-4.0..0.0));
                    a.iter().map(|v| v + r * rng.gen_range(-1.0..1.0)).collect()
                } else {
                    (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect()
                }
            })
            .collect();
        for (x, fx) in queries.iter().zip(ext.eval_batch(&queries)) {
            let p: f64 = terms.iter().map(|(a, c)| c * a.monomial(x)).sum();
            worst = worst.max(rel(fx.unwrap()[0], p));
        }
    }
    ensure(
        worst <= 1e-10,
        format!("{fixtures} fixtures x 10^4 queries, worst relative error {worst:.3e}"),
    )
}

fn point_pair(n: usize) -> ClosedSet {
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    if n > 1 {
        b[1] = 0.5;
    }
    ClosedSet::points(vec![vec![0.0; n], b]).unwrap()
}

fn box_union(n: usize) -> ClosedSet {
    let a = AaBox::new(vec![0.0; n], vec![1.0; n]).unwrap();
    let mut lo = vec![0.0; n];
    lo[0] = 1.75;
    let mut hi = vec![0.5; n];
    hi[0] = 2.5;
    ClosedSet::boxes(vec![a, AaBox::new(lo, hi).unwrap()]).unwrap()
}

fn fixtures() -> Vec<(String, ClosedSet)> {
    let mut out = vec![("origin n=1".to_string(), ClosedSet::points(vec![vec![0.0]]).unwrap())];
    for n in 1..=3 {
        out.push((format!("point pair n={n}"), point_pair(n)));
    }
    for n in 2..=3 {
        out.push((format!("box union n={n}"), box_union(n)));
    }
    out
}

/// Uniform points in the set's bounding region enlarged by one unit.
fn uniform_near(rng: &mut ChaCha8Rng, set: &ClosedSet, count: usize) -> Vec<Vec<f64>> {
    let n = set.dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n]);
    let corners: Vec<Vec<f64>> = match set {
        ClosedSet::FinitePoints(p) => p.clone(),
        ClosedSet::BoxUnion(bs) => bs.iter().flat_map(|b| [b.lo.clone(), b.hi.clone()]).collect(),
    };
    for c in corners {
        for i in 0..n {
            lo[i] = lo[i].min(c[i] - 1.0);
            hi[i] = hi[i].max(c[i] + 1.0);
        }
    }
    let mut out = Vec::new();
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|i| rng.gen_range(lo[i]..hi[i])).collect();
        if set.distance_to_set(&x) > 0.0 {
            out.push(x);
        }
    }
    out
}

fn partition_of_unity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines = Vec::new();
    let (mut worst, mut outside) = (0.0f64, 0usize);
    for (name, set) in fixtures() {
        let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
        for k in 1..=3u32 {
            let mut fixture_worst = 0.0f64;
            for x in uniform_near(&mut rng, &set, 1000) {
                let parts = partition_at(&decomp, &x, k).unwrap();
                let mut sum = vec![0.0; IndexSpace::get(set.dim(), k).len()];
                for (c, phi) in &parts {
                    if !c.enlarged_contains(&x) {
                        outside += 1;
                    }
                    for (s, v) in sum.iter_mut().zip(phi.coefficients()) {
                        *s += v;
                    }
                }
                sum[0] -= 1.0;
                fixture_worst = fixture_worst.max(sum.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
                for (c, _) in &parts {
                    for nb in decomp.neighbors(c).unwrap() {
                        if !nb.enlarged_contains(&x) && !psi_cube(&nb, &x, k).is_zero() {
                            outside += 1;
                        }
                    }
                }
            }
            worst = worst.max(fixture_worst);
            lines.push(format!("{name} k={k}: {fixture_worst:.1e}"));
        }
    }
    ensure(
        worst < 1e-11 && outside == 0,
        format!(
            "max |coefficient of Σφ − 1| = {worst:.3e} (bound 1e-11), {outside} support violations; per fixture: {}",
            lines.join(", ")
        ),
    )
}

/// Cubes `C ∈ W` with `x ∈ D_C`, found by descending from level 0 and
/// pruning any cube whose descendants cannot have `x` in their enlargement.
fn scan_supporting(set: &ClosedSet, x: &[f64], max_level: u32) -> Vec<WhitneyCube> {
    let n = x.len();
    let rn = n as f64;
    let satisfies = |c: &WhitneyCube| {
        let l = c.side();
        set.box_distance_sq(&c.lo(), &c.hi()) >= 16.0 * rn * l * l
    };
    let sup_dist = |c: &WhitneyCube| {
        let (lo, hi) = (c.lo(), c.hi());
        (0..n).fold(0.0f64, |m, i| m.max((lo[i] - x[i]).max(x[i] - hi[i]).max(0.0)))
    };
    let mut stack = Vec::new();
    let base: Vec<i64> = x.iter().map(|v| v.floor() as i64 - 1).collect();
    for code in 0..3usize.pow(n as u32) {
        let corner = (0..n).map(|i| base[i] + ((code / 3usize.pow(i as u32)) % 3) as i64).collect();
        stack.push(WhitneyCube::new(0, corner));
    }
    let mut out = Vec::new();
    while let Some(c) = stack.pop() {
        if satisfies(&c) {
            if c.enlarged_contains(x) {
                out.push(c);
            }
            continue;
        }
        if c.level == max_level || sup_dist(&c) >= c.side() / 8.0 {
            continue;
        }
        for mask in 0..(1u32 << n) {
            let corner = (0..n).map(|i| 2 * c.corner[i] + i64::from((mask >> i) & 1)).collect();
            stack.push(WhitneyCube::new(c.level + 1, corner));
        }
    }
    out.sort();
    out
}

fn cube_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = [0usize; 5];
    let (mut cubes, mut mismatches, mut queries) = (0usize, 0usize, 0usize);
    for (_, set) in fixtures().into_iter().skip(1) {
        let n = set.dim();
        let rn = n as f64;
        let decomp = Decomposition::new(set.clone(), DEFAULT_MAX_LEVEL);
        let mut samples = uniform_near(&mut rng, &set, 500);
        // and 500 at log-uniform distances down to 1e-6
        while samples.len() < 1000 {
            let base = uniform_near(&mut rng, &set, 1).pop().unwrap();
            let scale = 10f64.powf(rng.gen_range(-6.0..0.0));
            let a = match &set {
                ClosedSet::FinitePoints(p) => p.choose(&mut rng).unwrap().clone(),
                ClosedSet::BoxUnion(_) => base.clone(),
            };
            let x: Vec<f64> = a.iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect();
            if set.distance_to_set(&x) > 0.0 {
                samples.push(x);
            }
        }
        for x in &samples {
            queries += 1;
            let own = decomp.locate(x).unwrap();
            let mut sampled = vec![own.clone()];
            sampled.extend(decomp.neighbors(&own).unwrap());
            for c in &sampled {
                cubes += 1;
                let l = c.side();
                let d2 = set.box_distance_sq(&c.lo(), &c.hi());
                if d2 < 16.0 * rn * l * l {
                    bad[0] += 1;
                }
                if c.level >= 1 && d2 >= 100.0 * rn * l * l {
                    bad[1] += 1;
                }
                if c != &own {
                    let ratio = l / own.side();
                    if !own.touches(c) || ![0.5, 1.0, 2.0].contains(&ratio) {
                        bad[2] += 1;
                    }
                }
                if c.level >= 1 {
                    let (lo, hi) = (c.lo(), c.hi());
                    for mask in 0..(1u32 << n) {
                        let corner: Vec<f64> = (0..n).map(|i| if (mask >> i) & 1 == 1 { hi[i] } else { lo[i] }).collect();
                        if set.distance_to_set(&corner) >= 14.0 * rn.sqrt() * l {
                            bad[3] += 1;
                        }
                    }
                }
            }
            // cubes found by probing just outside each face of the own cube
            let y = own.center();
            let l = own.side();
            for axis in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut q = y.clone();
                    q[axis] += sign * l * (0.5 + 1e-7);
                    if set.distance_to_set(&q) == 0.0 {
                        continue;
                    }
                    let other = decomp.locate(&q).unwrap();
                    if !own.touches(&other) || ![0.5, 1.0, 2.0].contains(&(other.side() / l)) {
                        bad[4] += 1;
                    }
                }
            }
            if decomp.supporting_cubes(x).unwrap() != scan_supporting(&set, x, DEFAULT_MAX_LEVEL) {
                mismatches += 1;
            }
        }
    }
    ensure(
        bad.iter().all(|&b| b == 0) && mismatches == 0,
        format!(
            "{cubes} cubes: {} below 4√n·l, {} at or above 10√n·l, {} bad touching ratios ({} by probing), {} corners beyond 14√n·l; supporting cubes differ from the scan at {mismatches} of {queries} points",
            bad[0], bad[1], bad[2], bad[4], bad[3]
        ),
    )
}

fn faa_di_bruno() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (s, t) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let g = smooth_map(&mut rng, s, t);
        // keep inner values in the outer map's comfortable range
        let m = rng.gen_range(1..=2);
        let f = smooth_map(&mut rng, t, m).compose(&bounded(t));
        let order = rng.gen_range(0..=4);
        let mut e = vec![0u32; s];
        for _ in 0..order {
            e[rng.gen_range(0..s)] += 1;
        }
        let alpha = MultiIndex::new(e).unwrap();
        let x: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = chain_derivative(&f, &g, &alpha, &x).unwrap();
        let composed: Vec<Expr> = f
            .components()
            .iter()
            .map(|c| c.substitute(g.components()))
            .collect();
        for (l, c) in lhs.iter().zip(&composed) {
            let r = c.eval_taylor(&x, alpha.order()).unwrap().extract_derivative(&alpha).unwrap();
            worst = worst.max(rel(*l, r));
        }
    }
    let mut functorial = 0.0f64;
    for i in 0..50 {
        let (r, s, t) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let h = smooth_map(&mut rng, r, s);
        let g = smooth_map(&mut rng, s, t).compose(&bounded(s));
        let k = rng.gen_range(0..=3);
        let a: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = h.eval_real(&a).unwrap();
        let c = g.eval_real(&b).unwrap();
        let id = format!("q{i}");
        let m = rng.gen_range(1..=2);
        let f = random_jet(&mut rng, &[(id.clone(), c)], k, m);
        let step = jet_pullback(&h, &jet_pullback(&g, &f, &[(id.clone(), b)]).unwrap(), &[(id.clone(), a.clone())]).unwrap();
        let direct = jet_pullback(&g.compose(&h), &f, &[(id, a)]).unwrap();
        for (u, v) in step.raw_values().iter().zip(direct.raw_values()) {
            functorial = functorial.max(rel(*u, *v));
        }
    }
    ensure(
        worst <= 1e-9 && functorial <= 1e-9,
        format!("200 chain-rule cases: worst relative gap {worst:.3e}; 50 composition triples: {functorial:.3e}"),
    )
}

fn chart(id: &str, codomain: Codomain) -> Chart {
    Chart { id: id.into(), codomain }
}

fn map(srcs: &[&str], n: usize) -> VectorExpr {
    VectorExpr::parse(srcs, n).unwrap()
}

/// Three charts on ℝ²: identity, a shear and a log-type chart.
fn plane_atlas() -> FiniteAtlas {
    let open = Codomain::Box(vec![[0.0, 1e308], [-1e308, 1e308]]);
    FiniteAtlas::new(
        2,
        vec![chart("a", Codomain::All), chart("b", Codomain::All), chart("c", open)],
        vec![
            ("a".into(), "b".into(), map(&["x0 + x1^3", "x1"], 2)),
            ("b".into(), "a".into(), map(&["x0 - x1^3", "x1"], 2)),
            ("a".into(), "c".into(), map(&["exp(x0)", "x1 + sin(x0)"], 2)),
            ("c".into(), "a".into(), map(&["ln(x0)", "x1 - sin(ln(x0))"], 2)),
            ("b".into(), "c".into(), map(&["exp(x0 - x1^3)", "x1 + sin(x0 - x1^3)"], 2)),
            ("c".into(), "b".into(), map(&["ln(x0) + (x1 - sin(ln(x0)))^3", "x1 - sin(ln(x0))"], 2)),
        ],
    )
    .unwrap()
}

fn line_atlas() -> FiniteAtlas {
    FiniteAtlas::new(
        1,
        vec![chart("a", Codomain::All), chart("b", Codomain::Box(vec![[0.0, 1e308]]))],
        vec![
            ("a".into(), "b".into(), map(&["exp(x0)"], 1)),
            ("b".into(), "a".into(), map(&["ln(x0)"], 1)),
        ],
    )
    .unwrap()
}

fn pullback_and_correspondence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failed = Vec::new();
    let (mut corr, mut round) = (0.0f64, 0.0f64);
    for (atlas, n) in [(line_atlas(), 1), (plane_atlas(), 2)] {
        for _ in 0..5 {
            let k = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=2);
            let f = smooth_map(&mut rng, n, m);
            let pts = points_in(&mut rng, n, 6, 1.0);
            let aj = AtlasJet::from_global_function(&atlas, &f, "a", &pts, k).unwrap();
            for r in correspondence_all(&aj, &atlas, 1e-9).unwrap() {
                corr = corr.max(r.max_residual).max(r.point_residual);
                if !r.pass {
                    failed.push(format!("{}->{}", r.phi, r.psi));
                }
            }
            for drop in aj.charts().map(str::to_string).collect::<Vec<_>>() {
                let keep: Vec<&str> = aj.charts().filter(|c| *c != drop).collect();
                let projected = atlas_project(&aj, &keep).unwrap();
                let back = reconstruct(&projected, &atlas, &drop, 1e-9).unwrap();
                let orig = aj.jet(&drop).unwrap();
                for (p, id) in orig.ids().iter().enumerate() {
                    let q = back.index_of(id).unwrap();
                    for (u, v) in back.point_values(q).iter().zip(orig.point_values(p)) {
                        round = round.max(rel(*u, *v));
                    }
                }
            }
        }
    }
    let pts = points_in(&mut rng, 2, 5, 1.0);
    let f = random_jet(&mut rng, &pts, 3, 2);
    let identity_exact = jet_pullback(&VectorExpr::identity(2), &f, &pts).unwrap() == f;
    let fibre = points_in(&mut rng, 1, 3, 1.0);
    let zero = ("z".to_string(), vec![0.0]);
    let mut fibre_with_zero = fibre.clone();
    fibre_with_zero.push(zero.clone());
    let lifted = product_lift(&f, &fibre_with_zero).unwrap();
    let product_pts: Vec<(String, Vec<f64>)> = lifted.ids().iter().cloned().zip(lifted.points().iter().cloned()).collect();
    let along_projection = jet_pullback(&projection_map(2, 1), &f, &product_pts).unwrap();
    let restricted = product_restrict(&lifted, &pts, "z").unwrap();
    let included: Vec<(String, Vec<f64>)> = pts.iter().map(|(id, x)| (format!("{id}:z"), x.clone())).collect();
    let along_inclusion = jet_pullback(&inclusion_map(2, 1), &lifted, &included).unwrap();
    let embedding_exact = along_projection == lifted
        && restricted == f
        && along_inclusion.raw_values() == f.raw_values();
    ensure(
        failed.is_empty() && corr <= 1e-9 && round <= 1e-9 && identity_exact && embedding_exact,
        format!(
            "correspondence residual {corr:.3e} ({} failing pairs), reconstruction gap {round:.3e}, identity pullback exact: {identity_exact}, product embedding exact: {embedding_exact}",
            failed.len()
        ),
    )
}

fn manifold_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let line_pou = vec![
        PartitionEntry { chart: "a".into(), h: Expr::parse("1/(1 + exp(x0))", 1).unwrap() },
        PartitionEntry { chart: "b".into(), h: Expr::parse("x0/(1 + x0)", 1).unwrap() },
    ];
    let plane = FiniteAtlas::new(
        2,
        vec![chart("a", Codomain::All), chart("b", Codomain::All)],
        vec![
            ("a".into(), "b".into(), map(&["x0 + x1^3", "x1"], 2)),
            ("b".into(), "a".into(), map(&["x0 - x1^3", "x1"], 2)),
        ],
    )
    .unwrap();
    let plane_pou = vec![
        PartitionEntry { chart: "a".into(), h: Expr::parse("1/(1 + x0^2 + x1^2)", 2).unwrap() },
        PartitionEntry {
            chart: "b".into(),
            h: Expr::parse("1 - 1/(1 + (x0 - x1^3)^2 + x1^2)", 2).unwrap(),
        },
    ];
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for (atlas, pou, n) in [(line_atlas(), line_pou, 1), (plane, plane_pou, 2)] {
        let f = smooth_map(&mut rng, n, 2);
        let pts = points_in(&mut rng, n, 5, 1.0);
        let aj = AtlasJet::from_global_function(&atlas, &f, "a", &pts, 2).unwrap();
        let me = ManifoldExtension::new(atlas, aj.clone(), pou, DEFAULT_MAX_LEVEL).unwrap();
        for (c, jet) in aj.jets() {
            for p in 0..jet.len() {
                let d = me.eval_derivs(c, jet.point(p), 2).unwrap();
                for pos in 0..jet.space().len() {
                    checked += 1;
                    for (u, v) in d.values()[pos].iter().zip(jet.value(p, pos)) {
                        worst = worst.max(rel(*u, *v));
                    }
                }
            }
        }
    }
    ensure(
        worst <= 1e-8,
        format!("{checked} derivative vectors at jet points, worst relative gap {worst:.3e}"),
    )
}

fn seminorm_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut violations, mut tested, mut tightest) = (0usize, 0usize, 0.0f64);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(0..=3);
        let count = rng.gen_range(1..=8);
        let half = [0.1, 1.0, 5.0][rng.gen_range(0..3)];
        let pts = points_in(&mut rng, n, count, half);
        let m = rng.gen_range(1..=3);
        let jet = random_jet(&mut rng, &pts, k, m);
        let mut subset: Vec<usize> = (0..count).filter(|_| rng.gen_bool(0.6)).collect();
        if subset.is_empty() {
            subset.push(0);
        }
        for sub in [(0..count).collect::<Vec<_>>(), subset] {
            let diam = jet.diameter(&sub);
            for q in [Seminorm::Max, Seminorm::Coord(rng.gen_range(0..m))] {
                for l in 0..=k {
                    for j in 0..=l {
                        let c = 1.0 + (1.0 + f64::from(l + 1).powi(n as i32)) * diam.max(1.0).powi((l - j) as i32);
                        let lower = jet.seminorm_at(j, q, &sub).unwrap();
                        let upper = jet.seminorm_at(l, q, &sub).unwrap();
                        tested += 1;
                        if lower > c * upper {
                            violations += 1;
                        }
                        if upper > 0.0 {
                            tightest = tightest.max(lower / (c * upper));
                        }
                    }
                }
            }
        }
    }
    ensure(
        violations == 0,
        format!("50 jets, {tested} comparisons, {violations} violations, largest ratio to the bound {tightest:.3}"),
    )
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run_twice(args: &[&str]) -> bool {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_whitney"))
            .args(args)
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout && a.status == b.status
}

fn linearity_and_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(0..=2);
        let m = rng.gen_range(1..=2);
        let count = rng.gen_range(1..=6);
        let pts = points_in(&mut rng, n, count, 1.0);
        let (f, g) = (random_jet(&mut rng, &pts, k, m), random_jet(&mut rng, &pts, k, m));
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let combo = f.linear_combination(a, &g, b).unwrap();
        let base = &pts[rng.gen_range(0..count)].1;
        let r = 10f64.powf(rng.gen_range(-3.0..0.5));
        let x: Vec<f64> = base.iter().map(|v| v + r * rng.gen_range(-1.0..1.0)).collect();
        let [df, dg, dc] = [f, g, combo].map(|j| Extension::new(j, DEFAULT_MAX_LEVEL).eval_derivs(&x, k).unwrap());
        for pos in 0..df.values().len() {
            for o in 0..m {
                let (u, v, w) = (df.values()[pos][o], dg.values()[pos][o], dc.values()[pos][o]);
                let scale = (a.abs() * u.abs() + b.abs() * v.abs()).max(1.0);
                worst = worst.max((w - a * u - b * v).abs() / scale);
            }
        }
    }
    let induced = fixture("induced_jet.json");
    let atlas = fixture("exp_atlas.json");
    let reruns = [
        run_twice(&["extend", "--input", &induced, "--grid", "-1:1.5:0.25,-1:1.5:0.25", "--derivs", "(1,0);(1,1);(0,2)"]),
        run_twice(&["decompose", "--input", &fixture("origin.json"), "--box", "0.01:9"]),
        run_twice(&["manifold-extend", "--input", &atlas, "--chart", "b", "--grid", "0.1:3:0.1", "--derivs", "(1);(2)"]),
        run_twice(&["verify", "--suite", "linearity", "--input", &induced]),
    ];
    let identical = reruns.iter().filter(|&&r| r).count();
    ensure(
        worst <= 1e-10 && identical == reruns.len(),
        format!(
            "100 random pairs, worst scaled residual {worst:.3e}; {identical}/{} CLI reruns byte-identical",
            reruns.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("jet recovery", jet_recovery),
        ("polynomial reproduction", polynomial_reproduction),
        ("partition of unity", partition_of_unity),
        ("cube geometry", cube_geometry),
        ("faa di bruno oracle", faa_di_bruno),
        ("pullback and correspondence", pullback_and_correspondence),
        ("manifold extension", manifold_extension),
        ("seminorm monotonicity", seminorm_monotonicity),
        ("linearity and determinism", linearity_and_determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
