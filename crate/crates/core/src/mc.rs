//! Deterministic parallel Monte-Carlo plumbing.
//!
//! Replica `i` always draws from ChaCha8 stream `i` of the master seed, and
//! replicas are reduced in fixed-size blocks merged in block order, so every
//! estimate is a pure function of (seed, replica count) whatever the thread
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Replicas per reduction block.
pub const BLOCK: u64 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_replicas: u64,
    pub seed: u64,
    pub scheme: String,
}

impl McEstimate {
    /// |mean − target| in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// RNG for one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Running means and within-group co-moments of a vector of observables
/// split into equal groups. Only covariances inside a group are kept, which
/// is all the delta method needs for ratios of same-time quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedStats {
    groups: usize,
    width: usize,
    n: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
    delta: Vec<f64>,
}

impl GroupedStats {
    pub fn new(groups: usize, width: usize) -> Self {
        Self {
            groups,
            width,
            n: 0,
            mean: vec![0.0; groups * width],
            comoment: vec![0.0; groups * width * width],
            delta: vec![0.0; width],
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn observables(&self) -> usize {
        self.groups * self.width
    }

    /// Welford update with one replica's observation vector.
    pub fn push(&mut self, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.observables());
        self.n += 1;
        let n = self.n as f64;
        let w = self.width;
        for g in 0..self.groups {
            let base = g * w;
            for i in 0..w {
                self.delta[i] = obs[base + i] - self.mean[base + i];
                self.mean[base + i] += self.delta[i] / n;
            }
            let cm = &mut self.comoment[g * w * w..(g + 1) * w * w];
            for i in 0..w {
                let after = obs[base + i] - self.mean[base + i];
                for j in 0..w {
                    cm[i * w + j] += self.delta[j] * after;
                }
            }
        }
    }

    /// Pairwise (Chan) merge.
    pub fn merge(&mut self, other: &GroupedStats) {
        assert_eq!((self.groups, self.width), (other.groups, other.width));
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let w = self.width;
        for g in 0..self.groups {
            let base = g * w;
            for i in 0..w {
                self.delta[i] = other.mean[base + i] - self.mean[base + i];
            }
            let cm = &mut self.comoment[g * w * w..(g + 1) * w * w];
            let cmb = &other.comoment[g * w * w..(g + 1) * w * w];
            for i in 0..w {
                for j in 0..w {
                    cm[i * w + j] += cmb[i * w + j] + self.delta[i] * self.delta[j] * na * nb / n;
                }
            }
            for i in 0..w {
                self.mean[base + i] += self.delta[i] * nb / n;
            }
        }
        self.n += other.n;
    }

    pub fn mean(&self, group: usize, i: usize) -> f64 {
        self.mean[group * self.width + i]
    }

    /// Sample covariance of observables `i` and `j` within `group`.
    pub fn covariance(&self, group: usize, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let w = self.width;
        self.comoment[group * w * w + i * w + j] / (self.n - 1) as f64
    }

    /// Mean and standard error of one observable.
    pub fn mean_stderr(&self, group: usize, i: usize) -> (f64, f64) {
        let var = self.covariance(group, i, i).max(0.0);
        (self.mean(group, i), (var / self.n as f64).sqrt())
    }

    /// Ratio of two means, with the delta-method standard error.
    pub fn ratio(&self, group: usize, num: usize, den: usize) -> (f64, f64) {
        let a = self.mean(group, den);
        let b = self.mean(group, num);
        if a == 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let ratio = b / a;
        let var = (self.covariance(group, num, num) - 2.0 * ratio * self.covariance(group, num, den)
            + ratio * ratio * self.covariance(group, den, den))
            / (a * a);
        (ratio, (var.max(0.0) / self.n as f64).sqrt())
    }
}

/// Runs `n` replicas. `init` builds per-block scratch space and `fill`
/// writes replica `i`'s observation vector (pre-zeroed) into the slice.
pub fn run_replicas<S, I, F>(n: u64, groups: usize, width: usize, init: I, fill: F) -> Result<GroupedStats>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, u64, &mut [f64]) + Sync,
{
    if n == 0 {
        return Err(invalid("replica count must be at least 1"));
    }
    let blocks = n.div_ceil(BLOCK);
    let partial: Vec<GroupedStats> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut scratch = init();
            let mut stats = GroupedStats::new(groups, width);
            let mut obs = vec![0.0; groups * width];
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                obs.iter_mut().for_each(|v| *v = 0.0);
                fill(&mut scratch, i, &mut obs);
                stats.push(&obs);
            }
            stats
        })
        .collect();
    let mut total = GroupedStats::new(groups, width);
    for p in &partial {
        total.merge(p);
    }
    Ok(total)
}

/// Per-time Monte-Carlo estimates of Σ_x φ_t(x) and Σ_x |x_1|^r φ_t(x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McMomentRow {
    pub t: usize,
    pub mass: McEstimate,
    pub moments: Vec<McEstimate>,
    pub ratios: Vec<McEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McMoments {
    pub r_list: Vec<f64>,
    pub rows: Vec<McMomentRow>,
}

impl McMoments {
    /// Reads a table out of stats whose group t holds [mass, moment_r...].
    pub(crate) fn from_stats(stats: &GroupedStats, r_list: &[f64], seed: u64, scheme: &str) -> Self {
        let est = |(mean, stderr): (f64, f64)| McEstimate {
            mean,
            stderr,
            n_replicas: stats.count(),
            seed,
            scheme: scheme.to_string(),
        };
        let rows = (0..stats.groups)
            .map(|t| McMomentRow {
                t,
                mass: est(stats.mean_stderr(t, 0)),
                moments: (1..=r_list.len()).map(|i| est(stats.mean_stderr(t, i))).collect(),
                ratios: (1..=r_list.len()).map(|i| est(stats.ratio(t, i, 0))).collect(),
            })
            .collect();
        Self { r_list: r_list.to_vec(), rows }
    }
}
