//! Self-avoiding walk two-point function: exact enumeration for small
//! supports and rejection-weighted Monte Carlo for long-range kernels.

use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::kernel::StepDistribution;
use crate::lattice::{pack_site, BoxGeometry, LatticeField};
use crate::mc::{replica_rng, run_replicas, McMoments};
use crate::numeric::special::abs_pow;
use crate::numeric::NeumaierSum;
use crate::series::{ratio_analysis, RatioEstimate};

/// Largest (support size)^T that `enumerate` accepts by default.
pub const DEFAULT_PATH_CAP: f64 = 1e8;

/// Largest horizon `sample_saw_moments` accepts; the acceptance
/// probability of the indicator scheme decays exponentially in t.
pub const MC_HORIZON_CAP: usize = 40;

pub const SAW_SCHEME: &str = "saw-indicator-chacha8";

#[derive(Debug, Clone)]
pub struct SawEnumeration {
    /// Exact φ_t^{SAW} for t = 0..=T, with box radius t·R.
    pub fields: Vec<LatticeField>,
    pub kernel: StepDistribution,
    /// Σ_x φ_t^{SAW}(x) per t.
    pub path_count_weighted: Vec<f64>,
}

impl SawEnumeration {
    pub fn horizon(&self) -> usize {
        self.fields.len() - 1
    }

    /// Σ_{t≤T} m^t Σ_x φ_t(x).
    pub fn susceptibility_partial_sum(&self, m: f64) -> Result<f64> {
        susceptibility_partial_sum(&self.path_count_weighted, m)
    }

    /// Ratio-method estimates of m_c from the mass coefficients.
    pub fn critical_fugacity(&self) -> Vec<RatioEstimate> {
        ratio_analysis(&self.path_count_weighted)
    }
}

/// Σ_t m^t c_t for a coefficient sequence c.
pub fn susceptibility_partial_sum(coeffs: &[f64], m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(invalid(format!("fugacity must be nonnegative, got {m}")));
    }
    let mut acc = NeumaierSum::new();
    let mut power = 1.0;
    for &c in coeffs {
        acc.add(power * c);
        power *= m;
    }
    Ok(acc.value())
}

pub fn enumerate(kernel: &StepDistribution, horizon: usize) -> Result<SawEnumeration> {
    enumerate_with_cap(kernel, horizon, DEFAULT_PATH_CAP)
}

/// Depth-first enumeration of all self-avoiding paths of length ≤ T with
/// weight Π D(ω_s − ω_{s−1}).
pub fn enumerate_with_cap(kernel: &StepDistribution, horizon: usize, cap: f64) -> Result<SawEnumeration> {
    let support = kernel.support();
    let estimate = (support.len() as f64).powi(horizon as i32);
    if estimate > cap {
        return Err(Error::ResourceLimit {
            what: format!("enumeration of {}-point support to T = {horizon}", support.len()),
            estimate,
            cap,
        });
    }
    let d = kernel.d();
    let geoms: Vec<BoxGeometry> = (0..=horizon).map(|t| BoxGeometry::new(d, t * kernel.radius())).collect();
    let mut acc: Vec<Vec<NeumaierSum>> = geoms.iter().map(|g| vec![NeumaierSum::new(); g.volume()]).collect();
    acc[0][0].add(1.0);

    let mut path: Vec<Vec<i64>> = vec![vec![0; d]];
    let mut weights = vec![1.0];
    // choice[t] is the next support index to try from path[t].
    let mut choice = vec![0usize];
    while let Some(&c) = choice.last() {
        let depth = choice.len() - 1;
        if depth == horizon || c == support.len() {
            choice.pop();
            path.pop();
            weights.pop();
            continue;
        }
        *choice.last_mut().unwrap() += 1;
        let (step, p) = &support[c];
        let next: Vec<i64> = path[depth].iter().zip(step).map(|(a, b)| a + b).collect();
        if path.contains(&next) {
            continue;
        }
        let w = weights[depth] * p;
        let t = depth + 1;
        let i = geoms[t].index(&next).expect("t-step walks stay within radius t·R");
        acc[t][i].add(w);
        path.push(next);
        weights.push(w);
        choice.push(0);
    }

    let fields: Vec<LatticeField> = acc
        .into_iter()
        .enumerate()
        .map(|(t, v)| LatticeField::from_values(d, geoms[t].radius, t, v.iter().map(NeumaierSum::value).collect()))
        .collect::<Result<_>>()?;
    let path_count_weighted = fields.iter().map(|f| f.mass()).collect();
    Ok(SawEnumeration { fields, kernel: kernel.clone(), path_count_weighted })
}

/// Samples N independent D-walks of length T. For each t the replica
/// contributes 1{ω_0..ω_t self-avoiding} to the mass and
/// |ω_t,1|^r·1{...} to the moments, which are unbiased for Σφ_t^{SAW} and
/// Σ|x_1|^r φ_t^{SAW}.
pub fn sample_saw_moments(
    kernel: &StepDistribution,
    horizon: usize,
    r_list: &[f64],
    n: u64,
    seed: u64,
) -> Result<McMoments> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if horizon > MC_HORIZON_CAP {
        return Err(invalid(format!("horizon {horizon} above the Monte-Carlo cap {MC_HORIZON_CAP}")));
    }
    check_packable(kernel, horizon)?;
    if let Some(r) = r_list.iter().find(|r| !(**r >= 0.0)) {
        return Err(invalid(format!("moment order must be nonnegative, got {r}")));
    }
    let d = kernel.d();
    let width = 1 + r_list.len();
    let sampler = kernel.sampler();
    let stats = run_replicas(
        n,
        horizon + 1,
        width,
        || (HashSet::<u128>::with_capacity(2 * horizon + 2), vec![0i64; d], vec![0i64; d]),
        |(visited, x, step), replica, obs| {
            let mut rng = replica_rng(seed, replica);
            visited.clear();
            x.iter_mut().for_each(|c| *c = 0);
            visited.insert(pack_site(x));
            record(obs, 0, x[0], r_list);
            for t in 1..=horizon {
                sampler.sample_into(&mut rng, step);
                x.iter_mut().zip(step.iter()).for_each(|(a, b)| *a += b);
                if !visited.insert(pack_site(x)) {
                    break;
                }
                record(&mut obs[t * width..(t + 1) * width], 0, x[0], r_list);
            }
        },
    )?;
    Ok(McMoments::from_stats(&stats, r_list, seed, SAW_SCHEME))
}

#[inline]
fn record(obs: &mut [f64], t: usize, x1: i64, r_list: &[f64]) {
    let w = 1 + r_list.len();
    let row = &mut obs[t * w..(t + 1) * w];
    row[0] = 1.0;
    for (slot, &r) in row[1..].iter_mut().zip(r_list) {
        *slot = abs_pow(x1 as f64, r);
    }
}

/// Walk and cluster coordinates are hashed as packed 32-bit words.
pub(crate) fn check_packable(kernel: &StepDistribution, horizon: usize) -> Result<()> {
    if kernel.d() > 4 {
        return Err(Error::Unsupported(format!("Monte Carlo in d = {} (at most 4)", kernel.d())));
    }
    let reach = horizon as f64 * kernel.radius() as f64;
    if reach >= i32::MAX as f64 {
        return Err(invalid(format!("T·R = {reach} overflows the site packing")));
    }
    Ok(())
}
