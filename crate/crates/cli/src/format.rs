//! Number formatting and argument mini-languages shared by the commands.

use whitney_core::multiindex::MultiIndex;

/// Shortest round-trip decimal; exponent form outside `[1e-6, 1e16)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-6..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `"lo:hi:step,…"` into the grid's points, first axis outermost.
pub fn parse_grid(spec: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for part in spec.split(',') {
        let f: Vec<&str> = part.trim().split(':').collect();
        if f.len() != 3 {
            return Err(format!("grid axis {part:?} is not lo:hi:step"));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number {s:?} in grid"))
        };
        let (lo, hi, step) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        if !(step > 0.0) || hi < lo {
            return Err(format!("grid axis {part:?} needs lo <= hi and step > 0"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 10_000_000 {
            return Err(format!("grid axis {part:?} has too many points"));
        }
        axes.push((0..count).map(|i| lo + i as f64 * step).collect());
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if total > 10_000_000 {
        return Err("grid has too many points".into());
    }
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

/// `"lo:hi,…"` into box bounds.
pub fn parse_box(spec: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in spec.split(',') {
        let f: Vec<&str> = part.trim().split(':').collect();
        let vals: Vec<f64> = f
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?} in box")))
            .collect::<Result<_, _>>()?;
        if vals.len() != 2 || !(vals[0] <= vals[1]) {
            return Err(format!("box axis {part:?} is not lo:hi with lo <= hi"));
        }
        lo.push(vals[0]);
        hi.push(vals[1]);
    }
    Ok((lo, hi))
}

/// Every `(…)` or `[…]` group in the text, as multi-indices.
pub fn parse_indices(spec: &str) -> Result<Vec<MultiIndex>, String> {
    let mut out = Vec::new();
    let mut rest = spec;
    while let Some(start) = rest.find(['(', '[']) {
        let close = if rest.as_bytes()[start] == b'(' { ')' } else { ']' };
        let end = rest[start..]
            .find(close)
            .ok_or_else(|| format!("unclosed multi-index in {spec:?}"))?;
        let group = &rest[start..start + end + 1];
        out.push(MultiIndex::parse(group).map_err(|e| format!("{group}: {e}"))?);
        rest = &rest[start + end + 1..];
    }
    if out.is_empty() && !spec.trim().is_empty() {
        return Err(format!("no multi-index found in {spec:?}"));
    }
    Ok(out)
}

/// `"d1,d2,…"` into radii.
pub fn parse_list(spec: &str) -> Result<Vec<f64>, String> {
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?}")))
        .collect()
}
