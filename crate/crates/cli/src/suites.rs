//! Property suites behind `whitney verify`.

use std::collections::BTreeMap;

use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use whitney_core::atlas::{correspondence_all, FiniteAtlas, ManifoldExtension};
use whitney_core::decomp::{ClosedSet, Decomposition, WhitneyCube};
use whitney_core::expr::VectorExpr;
use whitney_core::extend::Extension;
use whitney_core::fdb::{chain_derivative, jet_pullback};
use whitney_core::io::{AtlasFile, JetSpecFile, SetSpecFile};
use whitney_core::jets::{Jet, Seminorm};
use whitney_core::multiindex::{IndexSpace, MultiIndex};
use whitney_core::pou::{estimate_derivative_bounds, partition_at, psi_cube};

use crate::error::CliError;
use crate::format::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Partition,
    LemmaL,
    Extension,
    Fdb,
    Correspondence,
    Manifold,
    Seminorm,
    Linearity,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Partition => "partition",
            Suite::LemmaL => "lemma-l",
            Suite::Extension => "extension",
            Suite::Fdb => "fdb",
            Suite::Correspondence => "correspondence",
            Suite::Manifold => "manifold",
            Suite::Seminorm => "seminorm",
            Suite::Linearity => "linearity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub k: u32,
    pub tol: Option<f64>,
    pub max_level: u32,
    pub seed: u64,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

impl SuiteReport {
    fn new(suite: Suite) -> SuiteReport {
        SuiteReport {
            suite: suite.name().to_string(),
            pass: true,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }
}

pub fn run(suite: Suite, input: Option<&str>, opts: &Options) -> Result<SuiteReport, CliError> {
    match suite {
        Suite::Partition => partition(&load_set(input, opts)?, opts),
        Suite::LemmaL => lemma_l(&load_set(input, opts)?, opts),
        Suite::Extension => extension(load_jet(input, opts)?, opts),
        Suite::Fdb => fdb(opts),
        Suite::Correspondence => correspondence(input, opts),
        Suite::Manifold => manifold(input, opts),
        Suite::Seminorm => seminorm(&load_jet(input, opts)?, opts),
        Suite::Linearity => linearity(load_jet(input, opts)?, opts),
    }
}

const DEFAULT_JET: &str = r#"{"induce": {"expr": ["cos(x0) + x0^3"],
    "points": [{"id": "a", "x": [-1]}, {"id": "b", "x": [0]}, {"id": "c", "x": [0.5]}, {"id": "d", "x": [2]}]}}"#;

const DEFAULT_ATLAS: &str = r#"{"dim": 1,
    "charts": [{"id": "a", "codomain": "all"}, {"id": "b", "codomain": {"box": [[0, 1e308]]}}],
    "transitions": [{"from": "a", "to": "b", "map": ["exp(x0)"]}, {"from": "b", "to": "a", "map": ["ln(x0)"]}],
    "induce": {"chart": "a", "expr": ["sin(x0)"], "order": 2,
        "points": [{"id": "p", "x": [-0.5]}, {"id": "q", "x": [0]}, {"id": "r", "x": [0.75]}]},
    "pou": [{"chart": "a", "h": ["0.5"]}, {"chart": "b", "h": ["0.5"]}]}"#;

fn load_jet(input: Option<&str>, opts: &Options) -> Result<Jet, CliError> {
    Ok(JetSpecFile::parse(input.unwrap_or(DEFAULT_JET))?.to_jet(Some(opts.k))?)
}

/// A set document, or the point set of a jet document; `A = {0}` by default.
fn load_set(input: Option<&str>, opts: &Options) -> Result<ClosedSet, CliError> {
    let Some(text) = input else {
        return Ok(ClosedSet::points(vec![vec![0.0]])?);
    };
    match SetSpecFile::parse(text) {
        Ok(s) => Ok(s.to_set()?),
        Err(_) => {
            let jet = JetSpecFile::parse(text)?.to_jet(Some(opts.k))?;
            Ok(ClosedSet::points(jet.points().to_vec())?)
        }
    }
}

fn base_point(set: &ClosedSet, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match set {
        ClosedSet::FinitePoints(p) => p.choose(rng).unwrap().clone(),
        ClosedSet::BoxUnion(bs) => {
            let b = bs.choose(rng).unwrap();
            b.lo.iter().zip(&b.hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect()
        }
    }
}

/// Points at log-uniform distance `10^[-3, 0.5]` from a random point of `A`,
/// never on `A` itself.
pub fn sample_near(set: &ClosedSet, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
    let n = set.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let base = base_point(set, rng);
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let r = 10f64.powf(rng.gen_range(-3.0..0.5));
        let x: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + r * d / norm).collect();
        if set.distance_to_set(&x) > 0.0 {
            out.push(x);
        }
    }
    out
}

fn partition(set: &ClosedSet, opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-11);
    let k = opts.k;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples = sample_near(set, &mut rng, opts.samples.unwrap_or(1000));
    let decomp = Decomposition::new(set.clone(), opts.max_level);
    let mut report = SuiteReport::new(Suite::Partition);
    let space = IndexSpace::get(set.dim(), k);
    let (mut residual, mut scaled, mut relative) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_at = Vec::new();
    let (mut support_bad, mut range_bad, mut most) = (0usize, 0usize, 0usize);
    for x in &samples {
        let parts = partition_at(&decomp, x, k)?;
        most = most.max(parts.len());
        let mut coeffs = vec![0.0; space.len()];
        let mut magnitude = vec![0.0; space.len()];
        for (c, phi) in &parts {
            if !c.enlarged_contains(x) {
                support_bad += 1;
            }
            if !(0.0..=1.0).contains(&phi.value()) {
                range_bad += 1;
            }
            for ((s, m), v) in coeffs.iter_mut().zip(&mut magnitude).zip(phi.coefficients()) {
                *s += v;
                *m += v.abs();
            }
        }
        coeffs[0] -= 1.0;
        let d = set.distance_to_set(x);
        for (pos, v) in coeffs.iter().enumerate() {
            residual = residual.max(v.abs());
            // coefficient α in units of d(x, A)^{-|α|}, the natural size of ∂^α φ there
            scaled = scaled.max(v.abs() * d.powi(space.order_of(pos) as i32));
            let r = v.abs() / magnitude[pos].max(1.0);
            if r > relative {
                relative = r;
                worst_at = x.clone();
            }
        }
        // cubes next to the supporting ones must contribute exactly nothing
        let supporting: Vec<&WhitneyCube> = parts.iter().map(|(c, _)| c).collect();
        for c in &supporting {
            for nb in decomp.neighbors(c)? {
                if !supporting.contains(&&nb) && !psi_cube(&nb, x, k).is_zero() {
                    support_bad += 1;
                }
            }
        }
    }
    report.metric("max_residual", residual);
    report.metric("max_scaled_residual", scaled);
    report.metric("max_relative_residual", relative);
    report.metric("max_supporting", most as f64);
    report.check(
        "sum",
        relative <= tol,
        format!(
            "coefficients of Σφ − 1 up to order {k}: max {} relative to Σ|φ coefficients| (tol {}, worst at {:?}); absolute max {}, d-scaled max {}",
            num(relative),
            num(tol),
            worst_at,
            num(residual),
            num(scaled)
        ),
    );
    report.check(
        "support",
        support_bad == 0,
        format!("{support_bad} cubes with nonzero series outside their enlarged cube"),
    );
    report.check("range", range_bad == 0, format!("{range_bad} values of φ outside [0, 1]"));
    let bounds = estimate_derivative_bounds(&decomp, &samples, k)?;
    for (r, b) in bounds.iter().enumerate() {
        report.metric(&format!("N_{r}"), *b);
    }
    let finite = bounds.iter().all(|b| b.is_finite());
    report.check(
        "bounds",
        finite,
        format!("estimated N_r = {:?}", bounds.iter().map(|&b| num(b)).collect::<Vec<_>>()),
    );
    Ok(report)
}

/// `C ∈ W` computed from the membership rule alone: `C` satisfies the
/// distance criterion and none of its dyadic ancestors does.
pub fn brute_member(set: &ClosedSet, c: &WhitneyCube) -> bool {
    let n = c.dim() as f64;
    let crit = |c: &WhitneyCube| {
        let l = c.side();
        set.box_distance_sq(&c.lo(), &c.hi()) >= 16.0 * n * l * l
    };
    crit(c) && (0..c.level).all(|j| !crit(&c.ancestor(j)))
}

/// Every `C ∈ W` with `x ∈ D_C`, by scanning all levels.
pub fn brute_supporting(set: &ClosedSet, x: &[f64], max_level: u32) -> Vec<WhitneyCube> {
    let n = x.len();
    let mut out = Vec::new();
    for level in 0..=max_level {
        let s = (level as f64).exp2();
        let lo: Vec<i64> = x.iter().map(|v| (v * s - 1.25).floor() as i64).collect();
        let mut corner = lo.clone();
        loop {
            let c = WhitneyCube::new(level, corner.clone());
            if c.enlarged_contains(x) && brute_member(set, &c) {
                out.push(c);
            }
            let mut i = 0;
            while i < n {
                if corner[i] < lo[i] + 3 {
                    corner[i] += 1;
                    break;
                }
                corner[i] = lo[i];
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    out.sort();
    out
}

fn lemma_l(set: &ClosedSet, opts: &Options) -> Result<SuiteReport, CliError> {
    let n = set.dim();
    let rn = (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples = sample_near(set, &mut rng, opts.samples.unwrap_or(1000));
    let decomp = Decomposition::new(set.clone(), opts.max_level);
    let mut report = SuiteReport::new(Suite::LemmaL);
    let mut bad = [0usize; 6];
    let (mut cubes, mut most) = (0usize, 0usize);
    for x in &samples {
        let c = decomp.locate(x)?;
        cubes += 1;
        let l = c.side();
        let d2 = set.box_distance_sq(&c.lo(), &c.hi());
        if d2 < 16.0 * n as f64 * l * l {
            bad[0] += 1;
        }
        if c.level >= 1 && d2 >= 100.0 * n as f64 * l * l {
            bad[1] += 1;
        }
        // probe just outside every face and corner for touching cubes
        let y = c.center();
        for _ in 0..4 {
            let s: Vec<i32> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
            if s.iter().all(|&v| v == 0) {
                continue;
            }
            let q: Vec<f64> = (0..n)
                .map(|i| match s[i] {
                    0 => y[i] + rng.gen_range(-0.5..0.5) * l,
                    v => y[i] + v as f64 * l * (0.5 + 1e-9),
                })
                .collect();
            if set.distance_to_set(&q) == 0.0 {
                continue;
            }
            let nb = decomp.locate(&q)?;
            if !nb.touches(&c) || c.level.abs_diff(nb.level) > 1 {
                bad[2] += 1;
            }
            // a point of one touching cube is at most twice as far from A as any of the other
            let p: Vec<f64> = c.lo().iter().map(|v| v + rng.gen_range(0.0..1.0) * l).collect();
            let pq: Vec<f64> = nb.lo().iter().map(|v| v + rng.gen_range(0.0..1.0) * nb.side()).collect();
            if set.distance_to_set(&p) >= 2.0 * set.distance_to_set(&pq) {
                bad[3] += 1;
            }
        }
        if c.level >= 1 {
            let p: Vec<f64> = c.lo().iter().map(|v| v + rng.gen_range(0.0..1.0) * l).collect();
            if set.distance_to_set(&p) >= 14.0 * rn * l {
                bad[4] += 1;
            }
        }
        most = most.max(decomp.neighbors(&c)?.len());
        if decomp.supporting_cubes(x)? != brute_supporting(set, x, opts.max_level) {
            bad[5] += 1;
        }
    }
    report.metric("cubes", cubes as f64);
    report.metric("max_neighbors", most as f64);
    let names = [
        ("criterion", "cubes closer to A than 4√n·l"),
        ("upper", "cubes at level ≥ 1 with d(C,A) ≥ 10√n·l"),
        ("touching", "touching pairs with side ratio outside {1/2, 1, 2}"),
        ("distance-ratio", "touching pairs with d(y,A) ≥ 2·d(y*,A)"),
        ("reach", "points of level ≥ 1 cubes with d(y,A) ≥ 14√n·l"),
        ("supporting", "points where supporting cubes differ from a full scan"),
    ];
    for ((name, what), b) in names.iter().zip(bad) {
        report.check(name, b == 0, format!("{b} {what} ({} samples)", samples.len()));
    }
    Ok(report)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn extension(jet: Jet, opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-3);
    let k = jet.order();
    let n = jet.dim();
    let norm = jet.seminorm_all(k, Seminorm::Max).map_err(CliError::input)?;
    let ext = Extension::new(jet.clone(), opts.max_level);
    let mut report = SuiteReport::new(Suite::Extension);
    let space = IndexSpace::get(n, k);

    let mut mismatched = 0usize;
    for p in 0..jet.len() {
        let d = ext.eval_derivs(jet.point(p), k)?;
        for pos in 0..space.len() {
            if d.values()[pos] != jet.value(p, pos) {
                mismatched += 1;
            }
        }
    }
    report.check("recovery", mismatched == 0, format!("{mismatched} stored values not returned exactly"));

    let h = 1e-4;
    let mut worst = 0.0f64;
    for p in 0..jet.len() {
        for i in 0..n {
            for sign in [-1.0, 1.0] {
                let mut x = jet.point(p).to_vec();
                x[i] += sign * h;
                let d = ext.eval_derivs(&x, k)?;
                for pos in 0..space.len() {
                    for (a, b) in d.values()[pos].iter().zip(jet.value(p, pos)) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    let limit = tol * (1.0 + norm);
    report.metric("limit_deviation", worst);
    report.check(
        "limits",
        worst < limit,
        format!("max |∂F(a ± 1e-4 e_i) − f(a)| = {} (bound {})", num(worst), num(limit)),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let set = ClosedSet::points(jet.points().to_vec())?;
    let samples = sample_near(&set, &mut rng, opts.samples.unwrap_or(200));
    let values = ext.eval_batch(&samples);
    let derivs = ext.eval_derivs_batch(&samples, k);
    let (mut gap, mut c_hat) = (0.0f64, 0.0f64);
    for (v, d) in values.into_iter().zip(derivs) {
        let (v, d) = (v?, d?);
        for (a, b) in v.iter().zip(&d.values()[0]) {
            gap = gap.max((a - b).abs() / (1.0 + b.abs()));
        }
        for row in d.values() {
            c_hat = c_hat.max(max_abs(row) / norm.max(f64::MIN_POSITIVE));
        }
    }
    report.metric("C_hat", c_hat);
    report.metric("jet_norm", norm);
    report.check(
        "consistency",
        gap <= 1e-12,
        format!("value and order-{k} evaluation differ by {} relative", num(gap)),
    );
    Ok(report)
}

const TEMPLATES: [&str; 8] = [
    "sin(A)*B",
    "exp(0.3*A) + B^2",
    "A*B - cos(C)",
    "1/(2 + A^2)",
    "sqrt(1 + A^2)*B",
    "ln(2 + A^2) + 0.5*C",
    "A^3 - 2*A*B + 0.25",
    "cos(A + 0.5*B)*exp(-0.2*C)",
];

/// A random smooth map `ℝ^s → ℝ^t` from the template pool.
pub fn random_map(rng: &mut ChaCha8Rng, s: usize, t: usize) -> VectorExpr {
    let comps: Vec<String> = (0..t)
        .map(|_| {
            let tpl = TEMPLATES.choose(rng).unwrap();
            let mut e = tpl.to_string();
            for ph in ["A", "B", "C"] {
                e = e.replace(ph, &format!("x{}", rng.gen_range(0..s)));
            }
            e
        })
        .collect();
    VectorExpr::parse(&comps, s).expect("templates parse")
}

fn random_index(rng: &mut ChaCha8Rng, n: usize, max_order: u32) -> MultiIndex {
    let order = rng.gen_range(0..=max_order);
    let mut e = vec![0u32; n];
    for _ in 0..order {
        e[rng.gen_range(0..n)] += 1;
    }
    MultiIndex::new(e).unwrap()
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / y.abs().max(1.0)))
}

fn fdb(opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = SuiteReport::new(Suite::Fdb);
    let count = opts.samples.unwrap_or(200);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let (s, t) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let g = random_map(&mut rng, s, t);
        let m = rng.gen_range(1..=2);
        let f = random_map(&mut rng, t, m);
        let alpha = random_index(&mut rng, s, 4);
        let x: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = chain_derivative(&f, &g, &alpha, &x)?;
        let fg = f.compose(&g);
        let rhs: Vec<f64> = fg
            .eval_taylor(&x, alpha.order())
            .map_err(CliError::input)?
            .iter()
            .map(|c| c.extract_derivative(&alpha).unwrap())
            .collect();
        worst = worst.max(rel_gap(&lhs, &rhs));
    }
    report.metric("chain_residual", worst);
    report.check(
        "chain-rule",
        worst <= tol,
        format!("{count} random compositions, max relative gap {}", num(worst)),
    );

    let mut worst = 0.0f64;
    let triples = (count / 4).max(1);
    for i in 0..triples {
        let (r, s, t) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let h = random_map(&mut rng, r, s);
        let g = random_map(&mut rng, s, t);
        let m = rng.gen_range(1..=2);
        let f = random_map(&mut rng, t, m);
        let k = rng.gen_range(0..=3);
        let a: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let id = format!("p{i}");
        let b = h.eval_real(&a).map_err(CliError::input)?;
        let c = g.eval_real(&b).map_err(CliError::input)?;
        let fj = Jet::from_expr(&f, &[(id.clone(), c)], k).map_err(CliError::input)?;
        let gf = jet_pullback(&g, &fj, &[(id.clone(), b)])?;
        let stepwise = jet_pullback(&h, &gf, &[(id.clone(), a.clone())])?;
        let direct = jet_pullback(&g.compose(&h), &fj, &[(id, a)])?;
        worst = worst.max(rel_gap(stepwise.raw_values(), direct.raw_values()));
    }
    report.metric("functoriality_residual", worst);
    report.check(
        "functoriality",
        worst <= tol,
        format!("{triples} random triples, max relative gap {}", num(worst)),
    );
    Ok(report)
}

fn load_atlas(input: Option<&str>) -> Result<AtlasFile, CliError> {
    Ok(AtlasFile::parse(input.unwrap_or(DEFAULT_ATLAS))?)
}

fn correspondence(input: Option<&str>, opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-9);
    let doc = load_atlas(input)?;
    let atlas: FiniteAtlas = doc.to_atlas()?;
    let aj = doc.to_atlas_jet(&atlas)?;
    let mut report = SuiteReport::new(Suite::Correspondence);
    let reports = correspondence_all(&aj, &atlas, tol)?;
    let mut worst = 0.0f64;
    for r in &reports {
        worst = worst.max(r.max_residual).max(r.point_residual);
        report.check(
            &format!("{}->{}", r.phi, r.psi),
            r.pass,
            format!(
                "{} shared points, residual {}, point residual {}",
                r.shared,
                num(r.max_residual),
                num(r.point_residual)
            ),
        );
    }
    report.check("pairs", !reports.is_empty(), format!("{} overlapping chart pairs", reports.len()));
    report.metric("max_residual", worst);
    Ok(report)
}

fn manifold(input: Option<&str>, opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-8);
    let doc = load_atlas(input)?;
    let atlas = doc.to_atlas()?;
    let aj = doc.to_atlas_jet(&atlas)?;
    let me = ManifoldExtension::new(atlas, aj.clone(), doc.partition()?, opts.max_level)?;
    let mut report = SuiteReport::new(Suite::Manifold);
    let k = aj.order();
    let mut overall = 0.0f64;
    for (chart, jet) in aj.jets() {
        let mut worst = 0.0f64;
        for p in 0..jet.len() {
            let d = me.eval_derivs(chart, jet.point(p), k)?;
            for pos in 0..jet.space().len() {
                worst = worst.max(rel_gap(&d.values()[pos], jet.value(p, pos)));
            }
        }
        overall = overall.max(worst);
        report.check(
            &format!("chart {chart}"),
            worst <= tol,
            format!("{} jet points, max relative gap {} up to order {k}", jet.len(), num(worst)),
        );
    }
    report.metric("max_residual", overall);
    Ok(report)
}

/// The constant `1 + (1 + (l+1)ⁿ)·max(1, diam K)^{l−j}`.
pub fn monotonicity_constant(n: usize, j: u32, l: u32, diam: f64) -> f64 {
    1.0 + (1.0 + f64::from(l + 1).powi(n as i32)) * diam.max(1.0).powi((l - j) as i32)
}

fn seminorm(jet: &Jet, _opts: &Options) -> Result<SuiteReport, CliError> {
    let mut report = SuiteReport::new(Suite::Seminorm);
    let all: Vec<usize> = (0..jet.len()).collect();
    let mut subsets = vec![all.clone()];
    for i in 0..jet.len() {
        for j in i + 1..jet.len() {
            subsets.push(vec![i, j]);
        }
    }
    let (mut violations, mut tested, mut tightest) = (0usize, 0usize, 0.0f64);
    for sub in &subsets {
        let diam = jet.diameter(sub);
        let norms: Vec<f64> = (0..=jet.order())
            .map(|l| jet.seminorm_at(l, Seminorm::Max, sub))
            .collect::<Result<_, _>>()
            .map_err(CliError::input)?;
        for l in 0..=jet.order() {
            for j in 0..=l {
                let m = monotonicity_constant(jet.dim(), j, l, diam);
                tested += 1;
                if norms[j as usize] > m * norms[l as usize] {
                    violations += 1;
                }
                if norms[l as usize] > 0.0 {
                    tightest = tightest.max(norms[j as usize] / (m * norms[l as usize]));
                }
            }
        }
    }
    report.metric("max_ratio", tightest);
    report.check(
        "monotonicity",
        violations == 0,
        format!("{violations} violations in {tested} (j, l, K) triples, largest ratio {}", num(tightest)),
    );
    Ok(report)
}

fn linearity(f: Jet, opts: &Options) -> Result<SuiteReport, CliError> {
    let tol = opts.tol.unwrap_or(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = SuiteReport::new(Suite::Linearity);
    let g = f
        .with_values(f.raw_values().iter().map(|_| rng.gen_range(-1.0..1.0)).collect())
        .map_err(CliError::input)?;
    let ef = Extension::new(f.clone(), opts.max_level);
    let eg = Extension::new(g.clone(), opts.max_level);
    let set = ClosedSet::points(f.points().to_vec())?;
    let count = opts.samples.unwrap_or(100);
    let mut worst = 0.0f64;
    let samples = sample_near(&set, &mut rng, count);
    for x in &samples {
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = Extension::new(f.linear_combination(a, &g, b).map_err(CliError::input)?, opts.max_level);
        let (fx, gx, cx) = (ef.eval(x)?, eg.eval(x)?, combo.eval(x)?);
        for o in 0..fx.len() {
            let scale = 1.0f64.max(a.abs() * fx[o].abs() + b.abs() * gx[o].abs());
            worst = worst.max((cx[o] - a * fx[o] - b * gx[o]).abs() / scale);
        }
    }
    report.metric("max_residual", worst);
    report.check(
        "linearity",
        worst <= tol,
        format!("{count} random pairs, max scaled residual {}", num(worst)),
    );
    let first = ef.eval_batch(&samples);
    let second = ef.eval_batch(&samples);
    let same = first
        .iter()
        .zip(&second)
        .all(|(u, v)| matches!((u, v), (Ok(u), Ok(v)) if u.iter().zip(v).all(|(p, q)| p.to_bits() == q.to_bits())));
    report.check("repeatable", same, "repeated batch evaluation is bitwise identical".into());
    Ok(report)
}
