use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use clap::Args;
use gyrad::asymptotics::AsymptoticParams;
use serde::Serialize;

use super::{load_kernel, prediction, rel_err, rw_params, summary};
use crate::error::CliError;
use crate::output::{emit, opt_num, render, Table};
use crate::settings::Settings;

#[derive(Args, Serialize)]
pub struct CompareArgs {
    /// Output of `rw evolve`, `saw sample` or `op sample`.
    #[arg(long)]
    measured: Option<String>,
    /// Take alpha and v_alpha from this kernel, with C_II = 1 (random walk).
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    v_alpha: Option<String>,
    #[arg(long = "C-II")]
    #[serde(rename = "C-II")]
    c_ii: Option<String>,
    /// Final-time rel_err a run must stay below to pass (default 0.1).
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

/// yes if rel_err strictly decreases over t_max/8, t_max/4, t_max/2, t_max;
/// n/a when those times are not all present.
pub fn trend_verdict(errors: &BTreeMap<usize, f64>) -> &'static str {
    let Some(&t_max) = errors.keys().next_back() else { return "n/a" };
    if t_max % 8 != 0 {
        return "n/a";
    }
    let ladder: Option<Vec<f64>> = [8, 4, 2, 1].iter().map(|k| errors.get(&(t_max / k)).copied()).collect();
    match ladder {
        Some(e) if e.windows(2).all(|w| w[1] < w[0]) => "yes",
        Some(_) => "no",
        None => "n/a",
    }
}

fn params(s: &mut Settings) -> Result<AsymptoticParams, CliError> {
    if let Some(alpha) = s.get::<f64>("alpha")? {
        let v: f64 = s.require("v-alpha")?;
        return Ok(AsymptoticParams::new(alpha, v, 1.0, s.get("C-II")?.unwrap_or(1.0), 1.0)?);
    }
    if s.raw("kernel").is_none() {
        return Err(CliError::config("compare needs either `kernel` or `alpha` and `v-alpha`"));
    }
    let kernel = load_kernel(s)?;
    rw_params(&kernel).ok_or_else(|| CliError::config("kernel has no closed-form v_alpha; pass alpha and v-alpha"))
}

pub fn compare(args: &CompareArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let keys = ["measured", "kernel", "alpha", "v-alpha", "C-II", "threshold", "out"];
    let mut s = Settings::load("compare", &keys, config, args)?;
    let threshold = s.get("threshold")?.unwrap_or(0.1);
    let mut table = Table::parse(&s.read_input("measured")?)?;
    let params = params(&mut s)?;

    let (Some(t_col), Some(r_col), Some(ratio_col)) = (table.column("t"), table.column("r"), table.column("ratio"))
    else {
        return Err(CliError::config(format!(
            "measured CSV has columns [{}]; expected an engine table with t, r and ratio",
            table.header.join(", ")
        )));
    };
    // Drop any earlier annotation so the output has exactly one of each.
    let keep: Vec<usize> = (0..table.header.len())
        .filter(|&i| !matches!(table.header[i].as_str(), "predicted_ratio" | "rel_err"))
        .collect();
    let mut annotated =
        Table::new(keep.iter().map(|&i| table.header[i].clone()).chain(["predicted_ratio".into(), "rel_err".into()]));
    let mut by_r: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in std::mem::take(&mut table.rows) {
        let bad = |c: &str| CliError::config(format!("bad number `{c}` in measured CSV"));
        let t: usize = row[t_col].parse().map_err(|_| bad(&row[t_col]))?;
        let r: f64 = row[r_col].parse().map_err(|_| bad(&row[r_col]))?;
        let ratio: f64 = row[ratio_col].parse().map_err(|_| bad(&row[ratio_col]))?;
        let predicted = prediction(Some(&params), r, t);
        let err = rel_err(ratio, predicted);
        if let Some(e) = err {
            by_r.entry(row[r_col].clone()).or_default().insert(t, e);
        }
        let mut out_row: Vec<String> = keep.iter().map(|&i| row[i].clone()).collect();
        out_row.push(opt_num(predicted));
        out_row.push(opt_num(err));
        annotated.push(out_row);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&annotated, &s.hash())?)?;

    let mut parts = Vec::new();
    let mut pass = !by_r.is_empty();
    for (r, errors) in &by_r {
        let (t, e) = errors.iter().next_back().expect("nonempty by construction");
        pass &= *e < threshold;
        let r: f64 = r.parse().expect("parsed above");
        parts.push(format!("r={r}: final_t={t} rel_err={e:.3e} trend={}", trend_verdict(errors)));
    }
    let verdict = if pass { "pass" } else { "fail" };
    summary(out.as_deref(), start, format!("compare: {} threshold={threshold} verdict={verdict}", parts.join("; ")));
    Ok(())
}
