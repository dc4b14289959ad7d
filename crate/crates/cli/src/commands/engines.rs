use std::path::Path;
use std::time::Instant;

use clap::Args;
use gyrad::mc::McMoments;
use gyrad::op::{estimate_op_moments, BondScheme};
use gyrad::rw::{Backend, BoxPolicy, EvolveOptions, MomentSeries};
use gyrad::saw::{enumerate_with_cap, sample_saw_moments, DEFAULT_PATH_CAP};
use serde::Serialize;

use super::{load_kernel, prediction, r_list, rel_err, rw_params, summary};
use crate::error::CliError;
use crate::output::{emit, num, opt_num, render, Table};
use crate::settings::Settings;

#[derive(Args, Serialize)]
pub struct RwArgs {
    #[arg(long)]
    kernel: Option<String>,
    /// Horizon.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: Option<String>,
    /// Comma-separated moment orders, each below alpha.
    #[arg(long)]
    r_list: Option<String>,
    /// grow, auto, or fixed:RADIUS (default auto).
    #[arg(long)]
    box_policy: Option<String>,
    /// Per-step mass leak allowed once the box stops growing (default 1e-9).
    #[arg(long)]
    leak_tolerance: Option<String>,
    /// auto, direct or fft (default auto).
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

fn evolve_options(s: &Settings) -> Result<EvolveOptions, CliError> {
    let leak_tolerance = s.get("leak-tolerance")?.unwrap_or(1e-9);
    let policy = match s.raw("box-policy").unwrap_or("auto") {
        "grow" => BoxPolicy::Grow,
        "auto" => BoxPolicy::Auto { leak_tolerance },
        other => match other.strip_prefix("fixed:").map(str::parse::<usize>) {
            Some(Ok(radius)) => BoxPolicy::Fixed { radius, leak_tolerance },
            _ => return Err(CliError::config(format!("box-policy must be grow, auto or fixed:RADIUS, got `{other}`"))),
        },
    };
    let backend = match s.raw("backend").unwrap_or("auto") {
        "auto" => Backend::Auto,
        "direct" => Backend::Direct,
        "fft" => Backend::Fft,
        other => return Err(CliError::config(format!("backend must be auto, direct or fft, got `{other}`"))),
    };
    Ok(EvolveOptions::default().with_policy(policy).with_backend(backend))
}

pub fn rw_evolve(args: &RwArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let keys = ["kernel", "T", "r-list", "box-policy", "leak-tolerance", "backend", "out"];
    let mut s = Settings::load("rw evolve", &keys, config, args)?;
    let kernel = load_kernel(&mut s)?;
    let horizon: usize = s.require("T")?;
    let rs = r_list(&s, kernel.alpha())?;
    let series = MomentSeries::from_evolution(&kernel, horizon, rs.clone(), evolve_options(&s)?)?;
    let params = rw_params(&kernel);

    let mut table = Table::new(["t", "mass", "r", "moment_axis", "ratio", "gyration", "predicted_ratio", "rel_err"]);
    let mut final_err: Option<f64> = None;
    for rec in &series.records {
        for (i, &r) in rs.iter().enumerate() {
            let predicted = prediction(params.as_ref(), r, rec.t);
            let err = rel_err(rec.ratios[i], predicted);
            if let (true, Some(e)) = (rec.t == horizon, err) {
                final_err = Some(final_err.map_or(e, |f| f.max(e)));
            }
            table.push(vec![
                rec.t.to_string(),
                num(rec.mass),
                num(r),
                num(rec.moments[i]),
                num(rec.ratios[i]),
                num(rec.gyration[i]),
                opt_num(predicted),
                opt_num(err),
            ]);
        }
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    let err = final_err.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "n/a".into());
    summary(out.as_deref(), start, format!("rw evolve: T={horizon} max_rel_err={err}"));
    Ok(())
}

#[derive(Args, Serialize)]
pub struct SawEnumerateArgs {
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: Option<String>,
    /// Largest (support size)^T to attempt (default 1e8).
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

pub fn saw_enumerate(args: &SawEnumerateArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut s = Settings::load("saw enumerate", &["kernel", "T", "cap", "out"], config, args)?;
    let kernel = load_kernel(&mut s)?;
    let horizon: usize = s.require("T")?;
    let e = enumerate_with_cap(&kernel, horizon, s.get("cap")?.unwrap_or(DEFAULT_PATH_CAP))?;

    let d = kernel.d();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("phi".into());
    let mut table = Table::new(header);
    for f in &e.fields {
        for (x, v) in f.iter() {
            let mut row = vec![f.t.to_string()];
            row.extend(x.iter().map(i64::to_string));
            row.push(num(v));
            table.push(row);
        }
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    let m_c = e.critical_fugacity().last().map(|r| format!("{:.6}", r.m_c)).unwrap_or_else(|| "n/a".into());
    summary(
        out.as_deref(),
        start,
        format!("saw enumerate: T={horizon} mass_T={:.6e} m_c_ratio={m_c}", e.path_count_weighted[horizon]),
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    kernel: Option<String>,
    /// Bond occupation parameter (oriented percolation only).
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: Option<String>,
    /// Number of replicas.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<String>,
    /// Master seed (default 0).
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    r_list: Option<String>,
    /// direct or thinned (oriented percolation only, default direct).
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

fn mc_table(mc: &McMoments) -> Table {
    let mut table = Table::new(["t", "mass", "mass_stderr", "r", "moment", "moment_stderr", "ratio", "ratio_stderr"]);
    for row in &mc.rows {
        for (i, &r) in mc.r_list.iter().enumerate() {
            table.push(vec![
                row.t.to_string(),
                num(row.mass.mean),
                num(row.mass.stderr),
                num(r),
                num(row.moments[i].mean),
                num(row.moments[i].stderr),
                num(row.ratios[i].mean),
                num(row.ratios[i].stderr),
            ]);
        }
    }
    table
}

fn mc_summary(name: &str, horizon: usize, n: u64, mc: &McMoments) -> String {
    let last = &mc.rows[horizon];
    format!("{name}: T={horizon} N={n} mass_T={:.6e}±{:.2e}", last.mass.mean, last.mass.stderr)
}

pub fn saw_sample(args: &McArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut s = Settings::load("saw sample", &["kernel", "T", "N", "seed", "r-list", "out"], config, args)?;
    let kernel = load_kernel(&mut s)?;
    let (horizon, n): (usize, u64) = (s.require("T")?, s.require("N")?);
    let rs = r_list(&s, kernel.alpha())?;
    let mc = sample_saw_moments(&kernel, horizon, &rs, n, s.get("seed")?.unwrap_or(0))?;
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&mc_table(&mc), &s.hash())?)?;
    summary(out.as_deref(), start, mc_summary("saw sample", horizon, n, &mc));
    Ok(())
}

pub fn op_sample(args: &McArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let keys = ["kernel", "p", "T", "N", "seed", "r-list", "scheme", "out"];
    let mut s = Settings::load("op sample", &keys, config, args)?;
    let kernel = load_kernel(&mut s)?;
    let (p, horizon, n): (f64, usize, u64) = (s.require("p")?, s.require("T")?, s.require("N")?);
    let rs = r_list(&s, kernel.alpha())?;
    let scheme = match s.raw("scheme").unwrap_or("direct") {
        "direct" => BondScheme::Direct,
        "thinned" => BondScheme::Thinned,
        other => return Err(CliError::config(format!("scheme must be direct or thinned, got `{other}`"))),
    };
    let mc = estimate_op_moments(&kernel, p, horizon, &rs, n, s.get("seed")?.unwrap_or(0), scheme)?;
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&mc_table(&mc), &s.hash())?)?;
    summary(
        out.as_deref(),
        start,
        format!("{} p={p} scheme={}", mc_summary("op sample", horizon, n, &mc), scheme.name()),
    );
    Ok(())
}
