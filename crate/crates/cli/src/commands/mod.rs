pub mod asym;
pub mod compare;
pub mod engines;
pub mod kernel;
pub mod series;

use std::time::Instant;

use gyrad::asymptotics::{main2_prediction, AsymptoticParams};
use gyrad::kernel::KernelFile;
use gyrad::StepDistribution;

use crate::error::CliError;
use crate::settings::Settings;

pub fn load_kernel(s: &mut Settings) -> Result<StepDistribution, CliError> {
    let bytes = s.read_input("kernel")?;
    let file: KernelFile =
        serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("kernel file does not parse: {e}")))?;
    Ok(StepDistribution::from_file(&file)?)
}

/// The r list, rejecting any r at or above α: the r-th moment of the
/// untruncated kernel diverges there and the gyration radius of order r
/// has no finite limit law.
pub fn r_list(s: &Settings, alpha: f64) -> Result<Vec<f64>, CliError> {
    let rs = s.list("r-list")?;
    for &r in &rs {
        if !(r >= 0.0) {
            return Err(CliError::config(format!("moment order r = {r} must be nonnegative")));
        }
        if r >= alpha {
            return Err(CliError::config(format!(
                "r = {r} >= alpha = {alpha}: the r-th moment of the step distribution diverges, \
                 so the order-r gyration radius is not defined"
            )));
        }
    }
    Ok(rs)
}

/// Random-walk parameters of a kernel, when its v_α has a closed form.
pub fn rw_params(kernel: &StepDistribution) -> Option<AsymptoticParams> {
    let v = kernel.v_alpha_closed_form().ok()?;
    AsymptoticParams::random_walk(kernel.alpha(), v).ok()
}

/// The fixed-t prediction where it is defined and positive.
pub fn prediction(params: Option<&AsymptoticParams>, r: f64, t: usize) -> Option<f64> {
    if r <= 0.0 || t == 0 {
        return None;
    }
    main2_prediction(params?, r, t as u64).ok().filter(|p| p.is_finite() && *p > 0.0)
}

pub fn rel_err(value: f64, predicted: Option<f64>) -> Option<f64> {
    predicted.map(|p| (value - p).abs() / p)
}

/// Prints the one-line run summary; to stderr when the CSV itself went to
/// stdout.
pub fn summary(out: Option<&str>, start: Instant, line: String) {
    let wall = start.elapsed().as_secs_f64();
    match out {
        Some(path) => println!("{line} wall={wall:.3}s out={path}"),
        None => eprintln!("{line} wall={wall:.3}s"),
    }
}
