use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use clap::Args;
use gyrad::lattice::BoxGeometry;
use gyrad::numeric::special::gamma_fn;
use gyrad::series::{deconvolve_lace, fit_generating_blowup, partial_sum_points, singular_coefficients, walk_i_series};
use gyrad::LatticeField;
use serde::Serialize;

use super::summary;
use crate::error::CliError;
use crate::output::{emit, num, render, Table};
use crate::settings::Settings;

#[derive(Args, Serialize)]
pub struct Fo90Args {
    #[arg(long)]
    beta: Option<String>,
    /// Power of the logarithm: 0, 1 or 2.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

pub fn fo90(args: &Fo90Args, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let s = Settings::load("series fo90", &["beta", "gamma", "T", "out"], config, args)?;
    let (beta, gamma, horizon): (f64, u32, usize) = (s.require("beta")?, s.require("gamma")?, s.require("T")?);
    let series = singular_coefficients(beta, gamma, horizon)?;
    let mut table = Table::new(["t", "coefficient"]);
    for (t, c) in series.coeffs().iter().enumerate() {
        table.push(vec![t.to_string(), num(*c)]);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    let transfer = if horizon >= 2 {
        let t = horizon as f64;
        let main = t.powf(beta) * t.ln().powi(gamma as i32) / gamma_fn(1.0 + beta)?;
        format!("{:.6}", series.coeffs()[horizon] / main)
    } else {
        "n/a".into()
    };
    summary(
        out.as_deref(),
        start,
        format!("series fo90: beta={beta} gamma={gamma} T={horizon} transfer_ratio_T={transfer}"),
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct DeconvolveArgs {
    /// Two-point function CSV with columns t, x1..xd, phi (as written by `saw enumerate`).
    #[arg(long)]
    phi: Option<String>,
    /// rw or saw; both use I_t = δ_{x,o} δ_{t,0}.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

/// Rebuilds φ_0..φ_T from a (t, x..., value) table. Each slice's box is
/// the smallest one holding its listed sites; unlisted sites are zero.
fn read_fields(table: &Table) -> Result<Vec<LatticeField>, CliError> {
    let schema = || CliError::config("phi CSV must have columns t, x1..xd, phi");
    let d = table.header.len().checked_sub(2).filter(|&d| d >= 1).ok_or_else(schema)?;
    if table.header[0] != "t" || (1..=d).any(|i| table.header[i] != format!("x{i}")) {
        return Err(schema());
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| CliError::config(format!("bad number `{s}` in phi CSV")));
    let mut slices: BTreeMap<usize, Vec<(Vec<i64>, f64)>> = BTreeMap::new();
    for row in &table.rows {
        let t = row[0].parse::<usize>().map_err(|_| CliError::config(format!("bad t `{}`", row[0])))?;
        let x = row[1..=d]
            .iter()
            .map(|c| c.parse::<i64>().map_err(|_| CliError::config(format!("bad coordinate `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        slices.entry(t).or_default().push((x, parse(&row[d + 1])?));
    }
    if slices.keys().copied().ne(0..slices.len()) {
        return Err(CliError::config("phi CSV must list every t from 0 to T"));
    }
    slices
        .into_iter()
        .map(|(t, sites)| {
            let radius = sites.iter().flat_map(|(x, _)| x.iter()).map(|c| c.unsigned_abs() as usize).max().unwrap_or(0);
            let geom = BoxGeometry::new(d, radius);
            let mut values = vec![0.0; geom.volume()];
            for (x, v) in sites {
                values[geom.index(&x).expect("box sized to fit")] = v;
            }
            Ok(LatticeField::from_values(d, radius, t, values)?)
        })
        .collect()
}

pub fn deconvolve(args: &DeconvolveArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut s = Settings::load("series deconvolve", &["phi", "model", "out"], config, args)?;
    match s.raw("model") {
        Some("rw") | Some("saw") => {}
        Some("op") => return Err(CliError::config("model op: the oriented-percolation I_t is not implemented")),
        other => return Err(CliError::config(format!("model must be rw or saw, got {other:?}"))),
    }
    let phi = read_fields(&Table::parse(&s.read_input("phi")?)?)?;
    let d = phi[0].d();
    let lace = deconvolve_lace(&phi, &walk_i_series(d, phi.len() - 1))?;

    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("J_value".into());
    let mut table = Table::new(header);
    for j in &lace.j_series[1..] {
        for (x, v) in j.iter() {
            let mut row = vec![j.t.to_string()];
            row.extend(x.iter().map(i64::to_string));
            row.push(num(v));
            table.push(row);
        }
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    summary(
        out.as_deref(),
        start,
        format!("series deconvolve: T={} residual={:.2e}", phi.len() - 1, lace.reconstruction_residual),
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    /// CSV with (t, coefficient), or an engine moment table together with --r.
    #[arg(long)]
    coeffs: Option<String>,
    /// Moment order to take from an engine table.
    #[arg(long)]
    r: Option<String>,
    /// Critical fugacity (default 1).
    #[arg(long)]
    m_c: Option<String>,
    /// Expected exponent 1 + r/(α∧2), used to pin the amplitude.
    #[arg(long)]
    expected: Option<String>,
    /// Grid points in the fit window (default 30).
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

/// Coefficient sequence c_0..c_T out of a coefficient or moment table.
fn read_coefficients(table: &Table, r: Option<f64>) -> Result<Vec<f64>, CliError> {
    let t_col = table.column("t").ok_or_else(|| CliError::config("coefficient CSV needs a t column"))?;
    let (value_col, r_col) = if let Some(c) = table.column("coefficient") {
        (c, None)
    } else {
        let c = table
            .column("moment_axis")
            .or_else(|| table.column("moment"))
            .ok_or_else(|| CliError::config("CSV needs a coefficient, moment_axis or moment column"))?;
        let rc = table.column("r").ok_or_else(|| CliError::config("moment CSV needs an r column"))?;
        r.ok_or_else(|| CliError::config("reading a moment table needs `r`"))?;
        (c, Some(rc))
    };
    let mut coeffs = Vec::new();
    for row in &table.rows {
        let f = |i: usize| row[i].parse::<f64>().map_err(|_| CliError::config(format!("bad number `{}`", row[i])));
        if let (Some(rc), Some(r)) = (r_col, r) {
            if (f(rc)? - r).abs() > 1e-12 * r.abs().max(1.0) {
                continue;
            }
        }
        if row[t_col].parse::<usize>().ok() != Some(coeffs.len()) {
            return Err(CliError::config("coefficients must be listed for t = 0, 1, 2, ... in order"));
        }
        coeffs.push(f(value_col)?);
    }
    if coeffs.is_empty() {
        return Err(CliError::config("no coefficients selected"));
    }
    Ok(coeffs)
}

pub fn fit(args: &FitArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut s = Settings::load("series fit", &["coeffs", "r", "m-c", "expected", "points", "out"], config, args)?;
    let coeffs = read_coefficients(&Table::parse(&s.read_input("coeffs")?)?, s.get("r")?)?;
    let m_c = s.get("m-c")?.unwrap_or(1.0);
    let expected: f64 = s.require("expected")?;
    let points = partial_sum_points(&coeffs, m_c, s.get("points")?.unwrap_or(30))?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.m, p.value)).collect();
    let fit = fit_generating_blowup(&pairs, m_c, expected)?;

    let mut table = Table::new(["m", "value", "tail_estimate"]);
    for p in &points {
        table.push(vec![num(p.m), num(p.value), num(p.tail_estimate)]);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    summary(
        out.as_deref(),
        start,
        format!(
            "series fit: points={} exponent={:.4} expected={expected} amplitude={:.6e} amplitude_pinned={:.6e} residual={:.2e}",
            fit.points, fit.exponent, fit.amplitude, fit.amplitude_pinned, fit.residual
        ),
    );
    Ok(())
}
