use std::path::Path;
use std::time::Instant;

use clap::Args;
use gyrad::asymptotics::{k_r_closed, k_r_quadrature, main2_prediction, AsymptoticParams};
use serde::Serialize;

use super::summary;
use crate::error::CliError;
use crate::output::{emit, num, render, Table};
use crate::settings::Settings;

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// Comma-separated times.
    #[arg(long)]
    t_list: Option<String>,
    /// Diffusion constant C_II (default 1, the random walk).
    #[arg(long = "C-II")]
    #[serde(rename = "C-II")]
    c_ii: Option<String>,
    #[arg(long)]
    v_alpha: Option<String>,
    /// The α = 2 form with its log t correction; implies alpha = 2.
    #[arg(long)]
    log2: bool,
    #[arg(long)]
    out: Option<String>,
}

pub fn predict(args: &PredictArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let keys = ["alpha", "r", "t-list", "C-II", "v-alpha", "log2", "out"];
    let s = Settings::load("asym predict", &keys, config, args)?;
    let log2 = s.flag("log2")?;
    let alpha: f64 = match (s.get::<f64>("alpha")?, log2) {
        (Some(a), true) if a != 2.0 => {
            return Err(CliError::config(format!("log2 is the alpha = 2 form, got alpha = {a}")))
        }
        (Some(a), _) => a,
        (None, true) => 2.0,
        (None, false) => return Err(CliError::config("missing required setting `alpha`")),
    };
    let r: f64 = s.require("r")?;
    let params = AsymptoticParams::new(alpha, s.require("v-alpha")?, 1.0, s.get("C-II")?.unwrap_or(1.0), 1.0)?;
    let mut table = Table::new(["t", "prediction"]);
    let times = s.list("t-list")?;
    for &t in &times {
        if !(t >= 1.0 && t.fract() == 0.0 && t <= u64::MAX as f64) {
            return Err(CliError::config(format!("times must be positive integers, got {t}")));
        }
        table.push(vec![(t as u64).to_string(), num(main2_prediction(&params, r, t as u64)?)]);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    summary(out.as_deref(), start, format!("asym predict: alpha={alpha} r={r} points={}", times.len()));
    Ok(())
}

#[derive(Args, Serialize)]
pub struct KrArgs {
    /// Comma-separated orders in (0, 2).
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

pub fn kr(args: &KrArgs, config: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let s = Settings::load("asym kr", &["r", "out"], config, args)?;
    let mut table = Table::new(["r", "closed_form", "quadrature", "rel_diff"]);
    let mut worst = 0.0f64;
    for r in s.list("r")? {
        let (closed, quad) = (k_r_closed(r)?, k_r_quadrature(r)?);
        let diff = ((quad - closed) / closed).abs();
        worst = worst.max(diff);
        table.push(vec![num(r), num(closed), num(quad), num(diff)]);
    }
    let out = s.raw("out").map(str::to_string);
    emit(out.as_deref(), &render(&table, &s.hash())?)?;
    summary(out.as_deref(), start, format!("asym kr: max_rel_diff={worst:.2e}"));
    Ok(())
}
