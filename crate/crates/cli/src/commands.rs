//! Command implementations. Each writes its result to the given sink.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use whitney_core::atlas::ManifoldExtension;
use whitney_core::decomp::{Decomposition, DEFAULT_MAX_LEVEL};
use whitney_core::expr::VectorExpr;
use whitney_core::extend::{Derivatives, Extension};
use whitney_core::fdb::{build_table, jet_pullback_tol, MATCH_TOL};
use whitney_core::io::{AtlasFile, JetSpecFile, PointSpec, SetSpecFile};
use whitney_core::jets::{Jet, Seminorm};
use whitney_core::multiindex::MultiIndex;

use crate::error::CliError;
use crate::format::{num, parse_box, parse_grid, parse_indices, parse_list};
use crate::suites::{self, Suite};

/// Cap on cubes visited by `decompose`.
pub const CUBE_BUDGET: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "whitney", version, about = "Whitney extension of jets on closed sets and finite atlases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the Whitney cubes meeting a box as CSV
    Decompose(DecomposeArgs),
    /// Evaluate the extension and its derivatives on a grid as CSV
    Extend(ExtendArgs),
    /// Report seminorms and the Whitney modulus of a jet as JSON
    CheckJet(CheckJetArgs),
    /// Print the Faà di Bruno polynomials for one multi-index
    Fdb(FdbArgs),
    /// Pull a jet back along an expression map
    Pullback(PullbackArgs),
    /// Evaluate the glued extension on an atlas in one chart's coordinates
    ManifoldExtend(ManifoldArgs),
    /// Run a property suite and report residuals
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Set document: {"points": [[…]]} or {"boxes": [{"lo", "hi"}]}
    #[arg(long)]
    pub input: PathBuf,
    /// Query box "lo:hi,…"
    #[arg(long = "box", allow_hyphen_values = true)]
    pub query: String,
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    /// Jet document
    #[arg(long)]
    pub input: PathBuf,
    /// Query grid "lo:hi:step,…"
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Derivative columns, e.g. "(1,0);(0,1)"
    #[arg(long)]
    pub derivs: Option<String>,
    /// Jet order for induced jets
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
    /// Degree thresholds "d1,d2,…" for the adaptive-degree extension
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckJetArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FdbArgs {
    /// Multi-index α, e.g. "(2,1)"
    #[arg(long)]
    pub alpha: String,
    /// Dimension of the inner map's target
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PullbackArgs {
    /// {"map": [exprs], "jet": jet document, "points": [{"id", "x"}]}
    #[arg(long)]
    pub input: PathBuf,
    /// Relative tolerance for matching images to jet points
    #[arg(long, default_value_t = MATCH_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ManifoldArgs {
    /// Atlas document with jets (or an induce block) and a partition of unity
    #[arg(long)]
    pub input: PathBuf,
    /// Chart whose coordinates the grid is given in
    #[arg(long)]
    pub chart: String,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long)]
    pub derivs: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Jet, set or atlas document; defaults to a built-in fixture
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pass threshold; each suite has its own default
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
    /// Seed for sampled query points
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled query points
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    /// One line per check, then the JSON summary
    Text,
    /// JSON summary only
    Json,
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Opens `--out`, or stdout.
pub fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Decompose(a) => decompose(&a, &mut *open_out(&a.out)?),
        Command::Extend(a) => extend(&a, &mut *open_out(&a.out)?),
        Command::CheckJet(a) => check_jet(&a, &mut *open_out(&a.out)?),
        Command::Fdb(a) => fdb(&a, &mut *open_out(&a.out)?),
        Command::Pullback(a) => pullback(&a, &mut *open_out(&a.out)?),
        Command::ManifoldExtend(a) => manifold_extend(&a, &mut *open_out(&a.out)?),
        Command::Verify(a) => {
            let mut out = open_out(&None)?;
            let res = verify(&a, &mut *out);
            out.flush()?;
            res
        }
    }
}

fn point_text(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|&v| num(v)).collect();
    format!("({})", parts.join(", "))
}

pub fn decompose(a: &DecomposeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let set = SetSpecFile::parse(&read_input(&a.input)?)?.to_set()?;
    let (lo, hi) = parse_box(&a.query).map_err(CliError::Input)?;
    if lo.len() != set.dim() {
        return Err(CliError::Input(format!(
            "box has dimension {}, set has dimension {}",
            lo.len(),
            set.dim()
        )));
    }
    let n = set.dim();
    let decomp = Decomposition::new(set, a.max_level);
    let cubes = decomp.cubes_in_box(&lo, &hi, CUBE_BUDGET)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["level".to_string()];
    header.extend((0..n).map(|i| format!("corner_{i}")));
    header.extend((0..n).map(|i| format!("center_{i}")));
    header.push("side".into());
    header.push("distance".into());
    header.extend((0..n).map(|i| format!("anchor_{i}")));
    w.write_record(&header)?;
    for c in &cubes {
        let mut row = vec![c.level.to_string()];
        row.extend(c.corner.iter().map(i64::to_string));
        row.extend(c.center().iter().map(|&v| num(v)));
        row.push(num(c.side()));
        row.push(num(decomp.set().cube_distance(c)));
        row.extend(decomp.anchor(c).iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn load_jet(path: &Path, k: Option<u32>) -> Result<Jet, CliError> {
    Ok(JetSpecFile::parse(&read_input(path)?)?.to_jet(k)?)
}

fn derivative_list(spec: &Option<String>, n: usize) -> Result<Vec<MultiIndex>, CliError> {
    let list = match spec {
        Some(s) => parse_indices(s).map_err(CliError::Input)?,
        None => Vec::new(),
    };
    if let Some(bad) = list.iter().find(|a| a.dim() != n) {
        return Err(CliError::Input(format!("multi-index {bad} does not have dimension {n}")));
    }
    Ok(list)
}

fn grid_for(spec: &str, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let grid = parse_grid(spec).map_err(CliError::Input)?;
    if grid.first().is_some_and(|p| p.len() != n) {
        return Err(CliError::Input(format!(
            "grid has dimension {}, expected {n}",
            grid[0].len()
        )));
    }
    Ok(grid)
}

/// Header `x_i…, F_j…, d[α]_j…`.
fn value_header(n: usize, m: usize, derivs: &[MultiIndex]) -> Vec<String> {
    let mut h: Vec<String> = (0..n).map(|i| format!("x_{i}")).collect();
    h.extend((0..m).map(|j| format!("F_{j}")));
    for alpha in derivs {
        h.extend((0..m).map(|j| format!("d{}_{j}", alpha.key())));
    }
    h
}

fn value_row(x: &[f64], f: &[f64], d: Option<&Derivatives>, derivs: &[MultiIndex]) -> Vec<String> {
    let mut row: Vec<String> = x.iter().chain(f).map(|&v| num(v)).collect();
    if let Some(d) = d {
        for alpha in derivs {
            row.extend(d.get(alpha).expect("order checked").iter().map(|&v| num(v)));
        }
    }
    row
}

/// Writes a CSV table only once every row is known, so failures leave no partial output.
fn write_table(out: &mut dyn Write, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn max_order(derivs: &[MultiIndex]) -> u32 {
    derivs.iter().map(MultiIndex::order).max().unwrap_or(0)
}

pub fn extend(a: &ExtendArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let jet = load_jet(&a.input, a.k)?;
    let (n, m) = (jet.dim(), jet.outdim());
    let derivs = derivative_list(&a.derivs, n)?;
    let upto = max_order(&derivs);
    if upto > jet.order() {
        return Err(CliError::Input(format!(
            "derivative order {upto} exceeds jet order {}",
            jet.order()
        )));
    }
    let grid = grid_for(&a.grid, n)?;
    let mut ext = Extension::new(jet, a.max_level);
    if let Some(s) = &a.schedule {
        if !derivs.is_empty() {
            return Err(CliError::Input("--derivs is not available with --schedule".into()));
        }
        ext = ext
            .with_schedule(parse_list(s).map_err(CliError::Input)?)
            .map_err(CliError::input)?;
    }
    let values: Vec<_> = if ext.schedule().is_some() {
        use rayon::prelude::*;
        grid.par_iter().map(|x| ext.eval_adaptive(x)).collect()
    } else {
        ext.eval_batch(&grid)
    };
    let ds = if derivs.is_empty() {
        None
    } else {
        Some(ext.eval_derivs_batch(&grid, upto))
    };
    let mut rows = Vec::with_capacity(grid.len());
    for (i, x) in grid.iter().enumerate() {
        let fail = |e| match CliError::from(e) {
            CliError::Numeric(msg) => CliError::Numeric(format!("at x = {}: {msg}", point_text(x))),
            other => other,
        };
        let f = values[i].clone().map_err(fail)?;
        let d = match &ds {
            Some(ds) => Some(ds[i].clone().map_err(fail)?),
            None => None,
        };
        rows.push(value_row(x, &f, d.as_ref(), &derivs));
    }
    write_table(out, value_header(n, m, &derivs), rows)
}

#[derive(Debug, Serialize)]
struct SeminormEntry {
    order: u32,
    prime: f64,
    dprime: f64,
    total: f64,
}

#[derive(Debug, Serialize)]
struct ModulusEntry {
    order: u32,
    delta: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct JetReport {
    dim: usize,
    order: u32,
    outdim: usize,
    points: usize,
    diameter: f64,
    min_separation: f64,
    seminorm: Vec<SeminormEntry>,
    modulus: Vec<ModulusEntry>,
}

pub fn check_jet(a: &CheckJetArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let jet = load_jet(&a.input, a.k)?;
    let all: Vec<usize> = (0..jet.len()).collect();
    let diameter = jet.diameter(&all);
    let mut min_sep = f64::INFINITY;
    for i in 0..jet.len() {
        for j in i + 1..jet.len() {
            let d = jet.diameter(&[i, j]);
            min_sep = min_sep.min(d);
        }
    }
    let mut seminorm = Vec::new();
    let mut modulus = Vec::new();
    for l in 0..=jet.order() {
        let prime = jet.seminorm_prime_at(l, Seminorm::Max, &all).map_err(CliError::input)?;
        let dprime = jet.seminorm_dprime_at(l, Seminorm::Max, &all).map_err(CliError::input)?;
        seminorm.push(SeminormEntry { order: l, prime, dprime, total: prime + dprime });
    }
    if diameter > 0.0 {
        // radii from just above the diameter down past the closest pair
        let mut delta = diameter * 1.0000001;
        while delta > 0.0 && modulus.len() < 64 {
            let value = jet.whitney_modulus(jet.order(), delta).map_err(CliError::input)?;
            modulus.push(ModulusEntry { order: jet.order(), delta, value });
            if value == 0.0 {
                break;
            }
            delta /= 2.0;
        }
    }
    let report = JetReport {
        dim: jet.dim(),
        order: jet.order(),
        outdim: jet.outdim(),
        points: jet.len(),
        diameter,
        min_separation: if min_sep.is_finite() { min_sep } else { 0.0 },
        seminorm,
        modulus,
    };
    serde_json::to_writer_pretty(&mut *out, &report).map_err(CliError::input)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn fdb(a: &FdbArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let alpha = MultiIndex::parse(&a.alpha).map_err(CliError::input)?;
    let table = build_table(&alpha, a.t)?;
    write!(out, "{table}")?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PullbackFile {
    map: Vec<String>,
    jet: JetSpecFile,
    points: Vec<PointSpec>,
}

pub fn pullback(a: &PullbackArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doc: PullbackFile = serde_json::from_str(&read_input(&a.input)?).map_err(CliError::input)?;
    let jet = doc.jet.to_jet(a.k)?;
    let s = doc
        .points
        .first()
        .map(|p| p.x.len())
        .ok_or_else(|| CliError::Input("pullback needs at least one point".into()))?;
    let g = VectorExpr::parse(&doc.map, s).map_err(CliError::input)?;
    let pts: Vec<(String, Vec<f64>)> = doc.points.iter().map(|p| (p.id.clone(), p.x.clone())).collect();
    let pulled = jet_pullback_tol(&g, &jet, &pts, a.tol)?;
    serde_json::to_writer_pretty(&mut *out, &JetSpecFile::from_jet(&pulled)).map_err(CliError::input)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn manifold_extend(a: &ManifoldArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doc = AtlasFile::parse(&read_input(&a.input)?)?;
    let atlas = doc.to_atlas()?;
    let aj = doc.to_atlas_jet(&atlas)?;
    let pou = doc.partition()?;
    let (n, m, k) = (atlas.dim(), aj.outdim(), aj.order());
    let derivs = derivative_list(&a.derivs, n)?;
    let upto = max_order(&derivs);
    if upto > k {
        return Err(CliError::Input(format!("derivative order {upto} exceeds jet order {k}")));
    }
    atlas.chart(&a.chart)?;
    let grid = grid_for(&a.grid, n)?;
    let me = ManifoldExtension::new(atlas, aj, pou, a.max_level)?;
    let results: Vec<_> = {
        use rayon::prelude::*;
        grid.par_iter().map(|z| me.eval_derivs(&a.chart, z, upto)).collect()
    };
    let mut rows = Vec::with_capacity(grid.len());
    for (z, r) in grid.iter().zip(results) {
        let d = r.map_err(|e| match CliError::from(e) {
            CliError::Numeric(msg) => CliError::Numeric(format!("at z = {}: {msg}", point_text(z))),
            other => other,
        })?;
        rows.push(value_row(z, &d.values()[0], Some(&d), &derivs));
    }
    write_table(out, value_header(n, m, &derivs), rows)
}

pub fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match &a.input {
        Some(p) => Some(read_input(p)?),
        None => None,
    };
    let opts = suites::Options {
        k: a.k,
        tol: a.tol,
        max_level: a.max_level,
        seed: a.seed,
        samples: a.samples,
    };
    let report = suites::run(a.suite, text.as_deref(), &opts)?;
    if a.format == ReportFormat::Text {
        for c in &report.checks {
            writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    writeln!(out, "{}", serde_json::to_string(&report).map_err(CliError::input)?)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::SuiteFailed(a.suite.name().to_string()))
    }
}
