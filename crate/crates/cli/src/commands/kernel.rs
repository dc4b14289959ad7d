use std::time::Instant;

use clap::Args;
use gyrad::StepDistribution;
use serde::Serialize;

use super::{load_kernel, summary};
use crate::error::CliError;
use crate::output::{emit, num, render, write_atomic, Table};
use crate::settings::Settings;

#[derive(Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    d: Option<String>,
    /// Range parameter L.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    l: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Sup-norm truncation radius R.
    #[arg(long)]
    radius: Option<String>,
    /// Largest allowed discarded tail mass (default 1e-3).
    #[arg(long)]
    tolerance: Option<String>,
    /// Skip the tail check; for small-support kernels used in enumeration.
    #[arg(long)]
    truncated: bool,
    #[arg(long)]
    out: Option<String>,
}

pub fn build(args: &BuildArgs, config: Option<&std::path::Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let s =
        Settings::load("kernel build", &["d", "L", "alpha", "radius", "tolerance", "truncated", "out"], config, args)?;
    let (d, l, alpha, radius) = (s.require("d")?, s.require("L")?, s.require("alpha")?, s.require("radius")?);
    let kernel = if s.flag("truncated")? {
        StepDistribution::truncated_kac(d, l, alpha, radius)?
    } else {
        StepDistribution::kac_with_tolerance(d, l, alpha, radius, s.get("tolerance")?.unwrap_or(1e-3))?
    };
    let out: String = s.require("out")?;
    let mut json = serde_json::to_vec_pretty(&kernel.to_file()).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    write_atomic(std::path::Path::new(&out), &json)?;
    summary(
        Some(&out),
        start,
        format!(
            "kernel build: d={d} L={l} alpha={alpha} radius={radius} c_h={:.6e} tail_bound={:.3e}",
            kernel.c_h(),
            kernel.tail_bound()
        ),
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct InspectArgs {
    /// kernel.json written by `kernel build`.
    kernel: Option<String>,
    /// Log-spaced wave numbers along e_1 as `kmin:kmax:n` (default 1e-3:1:25).
    #[arg(long)]
    fourier_grid: Option<String>,
    /// Fit 1 − D̂ with the k² log(1/(Lk)) form instead of a pure power.
    #[arg(long)]
    log_mode: bool,
    #[arg(long)]
    out: Option<String>,
}

fn log_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::config(format!("fourier-grid must be `kmin:kmax:n` with 0 < kmin < kmax and n >= 2, got `{spec}`"))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let (lo, hi, n): (f64, f64, usize) =
        (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(bad());
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (step * i as f64).exp()).collect())
}

pub fn inspect(args: &InspectArgs, config: Option<&std::path::Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut s = Settings::load("kernel inspect", &["kernel", "fourier-grid", "log-mode", "out"], config, args)?;
    let kernel = load_kernel(&mut s)?;
    let grid = log_grid(s.raw("fourier-grid").unwrap_or("1e-3:1:25"))?;
    let mut table = Table::new(["k", "Dhat", "one_minus_Dhat"]);
    let mut k_vec = vec![0.0; kernel.d()];
    for &k in &grid {
        k_vec[0] = k;
        table.push(vec![num(k), num(kernel.fourier(&k_vec)), num(kernel.one_minus_fourier_axis(k))]);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    let fit = kernel.fit_dispersion(&grid, s.flag("log-mode")?)?;
    let closed = kernel.v_alpha_closed_form().map(|v| format!("{v:.6e}")).unwrap_or_else(|_| "n/a".into());
    summary(
        out.as_deref(),
        start,
        format!(
            "kernel inspect: exponent_est={:.4} v_alpha_est={:.6e} v_alpha_closed={closed} residual={:.2e}",
            fit.exponent_est, fit.v_alpha_est, fit.residual
        ),
    );
    Ok(())
}
