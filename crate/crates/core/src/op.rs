//! Long-range oriented percolation: bond (u, t) → (v, t+1) is open with
//! probability pD(v − u), independently. Clusters are grown slice by slice
//! from (o, 0).
//!
//! Bond uniforms are a counter-based hash of (seed, replica, t, u, v), so a
//! configuration does not depend on the order bonds are visited and the
//! direct scheme couples all p monotonically.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::StepDistribution;
use crate::lattice::{pack_site, unpack_site, BoxGeometry, LatticeField};
use crate::mc::{run_replicas, McEstimate, McMoments};
use crate::numeric::special::abs_pow;
use crate::saw::check_packable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BondScheme {
    /// One uniform per bond, thresholded at pD.
    #[default]
    Direct,
    /// Per source, skips geometrically through weight classes of the
    /// support and accepts candidates by rejection. Exact in law, cost
    /// proportional to the number of open bonds plus the number of classes.
    Thinned,
}

impl BondScheme {
    pub fn name(&self) -> &'static str {
        match self {
            BondScheme::Direct => "op-direct-splitmix",
            BondScheme::Thinned => "op-thinned-splitmix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpConfigRun {
    pub p: f64,
    pub seed: u64,
    pub replica: u64,
    /// Sites reachable at each time slice, in a fixed order.
    pub frontier_history: Vec<Vec<Vec<i64>>>,
}

/// SplitMix64 output function.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn hash_uniform(parts: [u64; 6]) -> f64 {
    let h = parts.iter().fold(0u64, |acc, &p| mix(acc ^ p));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

const DIRECT_SALT: u64 = 0x0d1e_c700;
const THIN_SALT: u64 = 0x7417_0000;

struct WeightClass {
    rate: f64,
    members: Vec<usize>,
}

/// Bond sampler for a fixed kernel and p.
struct Grower {
    d: usize,
    offsets: Vec<Vec<i64>>,
    probs: Vec<f64>,
    classes: Vec<WeightClass>,
    scheme: BondScheme,
}

impl Grower {
    fn new(kernel: &StepDistribution, p: f64, scheme: BondScheme) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(invalid(format!("p must be finite and nonnegative, got {p}")));
        }
        if p * kernel.max_weight() > 1.0 {
            return Err(invalid(format!("p·max D = {} exceeds 1", p * kernel.max_weight())));
        }
        let (offsets, probs): (Vec<_>, Vec<_>) = kernel.support().into_iter().map(|(x, w)| (x, p * w)).unzip();
        let classes = weight_classes(&probs);
        Ok(Self { d: kernel.d(), offsets, probs, classes, scheme })
    }

    fn step(&self, frontier: &BTreeSet<u128>, key: (u64, u64, u64)) -> BTreeSet<u128> {
        let (seed, replica, t) = key;
        let mut next = BTreeSet::new();
        let mut v = vec![0i64; self.d];
        for &u in frontier {
            let x = unpack_site(u, self.d);
            let mut open = |j: usize, next: &mut BTreeSet<u128>| {
                v.iter_mut().zip(&x).zip(&self.offsets[j]).for_each(|((a, b), c)| *a = b + c);
                next.insert(pack_site(&v));
            };
            match self.scheme {
                BondScheme::Direct => {
                    for j in 0..self.probs.len() {
                        let h = hash_uniform([seed, replica, t, u as u64, (u >> 64) as u64, DIRECT_SALT ^ j as u64]);
                        if h < self.probs[j] {
                            open(j, &mut next);
                        }
                    }
                }
                BondScheme::Thinned => {
                    let mut counter = 0u64;
                    let mut draw = || {
                        counter += 1;
                        hash_uniform([seed, replica, t, u as u64, (u >> 64) as u64, THIN_SALT ^ counter << 8])
                    };
                    for class in &self.classes {
                        let log_miss = (-class.rate).ln_1p();
                        let mut pos = 0usize;
                        loop {
                            if class.rate < 1.0 {
                                let skip = (draw().max(f64::MIN_POSITIVE).ln() / log_miss).floor();
                                if skip >= (class.members.len() - pos) as f64 {
                                    break;
                                }
                                pos += skip as usize;
                            }
                            if pos >= class.members.len() {
                                break;
                            }
                            let j = class.members[pos];
                            if draw() * class.rate < self.probs[j] {
                                open(j, &mut next);
                            }
                            pos += 1;
                        }
                    }
                }
            }
        }
        next
    }
}

/// Groups bond probabilities into dyadic classes below the largest one.
fn weight_classes(probs: &[f64]) -> Vec<WeightClass> {
    let top = probs.iter().copied().fold(0.0, f64::max);
    let mut classes: Vec<WeightClass> = Vec::new();
    if top == 0.0 {
        return classes;
    }
    let mut by_level: std::collections::BTreeMap<i32, Vec<usize>> = Default::default();
    for (j, &q) in probs.iter().enumerate() {
        if q > 0.0 {
            let level = (top / q).log2().floor() as i32;
            by_level.entry(level).or_default().push(j);
        }
    }
    for members in by_level.into_values() {
        let rate = members.iter().map(|&j| probs[j]).fold(0.0, f64::max);
        classes.push(WeightClass { rate, members });
    }
    classes
}

/// Grows one configuration to time T. `(seed, replica)` selects the bond
/// uniforms.
pub fn grow_cluster(
    kernel: &StepDistribution,
    p: f64,
    horizon: usize,
    seed: u64,
    replica: u64,
    scheme: BondScheme,
) -> Result<OpConfigRun> {
    check_packable(kernel, horizon)?;
    let grower = Grower::new(kernel, p, scheme)?;
    let mut frontier = BTreeSet::from([pack_site(&vec![0; kernel.d()])]);
    let mut history = vec![unpack_all(&frontier, kernel.d())];
    for t in 0..horizon {
        frontier = grower.step(&frontier, (seed, replica, t as u64));
        history.push(unpack_all(&frontier, kernel.d()));
    }
    Ok(OpConfigRun { p, seed, replica, frontier_history: history })
}

fn unpack_all(set: &BTreeSet<u128>, d: usize) -> Vec<Vec<i64>> {
    set.iter().map(|&k| unpack_site(k, d)).collect()
}

/// Σ_x φ_t(x) = E|frontier(t)| and Σ_x |x_1|^r φ_t(x) = E Σ_{x ∈ frontier(t)} |x_1|^r.
pub fn estimate_op_moments(
    kernel: &StepDistribution,
    p: f64,
    horizon: usize,
    r_list: &[f64],
    n: u64,
    seed: u64,
    scheme: BondScheme,
) -> Result<McMoments> {
    check_packable(kernel, horizon)?;
    if let Some(r) = r_list.iter().find(|r| !(**r >= 0.0)) {
        return Err(invalid(format!("moment order must be nonnegative, got {r}")));
    }
    let grower = Grower::new(kernel, p, scheme)?;
    let d = kernel.d();
    let width = 1 + r_list.len();
    let origin = pack_site(&vec![0; d]);
    let stats = run_replicas(
        n,
        horizon + 1,
        width,
        || (),
        |_, replica, obs| {
            let mut frontier = BTreeSet::from([origin]);
            for t in 0..=horizon {
                if t > 0 {
                    frontier = grower.step(&frontier, (seed, replica, t as u64 - 1));
                }
                if frontier.is_empty() {
                    break;
                }
                let row = &mut obs[t * width..(t + 1) * width];
                row[0] = frontier.len() as f64;
                for &key in &frontier {
                    let x1 = unpack_site(key, d)[0] as f64;
                    for (slot, &r) in row[1..].iter_mut().zip(r_list) {
                        *slot += abs_pow(x1, r);
                    }
                }
            }
        },
    )?;
    Ok(McMoments::from_stats(&stats, r_list, seed, scheme.name()))
}

/// Estimates φ_t(x) = P((o,0) → (x,t)) at each probe site.
pub fn estimate_op_sites(
    kernel: &StepDistribution,
    p: f64,
    t: usize,
    sites: &[Vec<i64>],
    n: u64,
    seed: u64,
    scheme: BondScheme,
) -> Result<Vec<McEstimate>> {
    check_packable(kernel, t)?;
    if sites.iter().any(|x| x.len() != kernel.d()) {
        return Err(invalid("probe sites must match the kernel dimension"));
    }
    let grower = Grower::new(kernel, p, scheme)?;
    let keys: Vec<u128> = sites.iter().map(|x| pack_site(x)).collect();
    let origin = pack_site(&vec![0; kernel.d()]);
    let stats = run_replicas(
        n,
        1,
        sites.len(),
        || (),
        |_, replica, obs| {
            let mut frontier = BTreeSet::from([origin]);
            for s in 0..t {
                frontier = grower.step(&frontier, (seed, replica, s as u64));
            }
            for (slot, k) in obs.iter_mut().zip(&keys) {
                *slot = if frontier.contains(k) { 1.0 } else { 0.0 };
            }
        },
    )?;
    Ok((0..sites.len())
        .map(|i| {
            let (mean, stderr) = stats.mean_stderr(0, i);
            McEstimate { mean, stderr, n_replicas: n, seed, scheme: scheme.name().into() }
        })
        .collect())
}

/// Exact φ_t for t ≤ 2. At t = 2 routes through distinct intermediate
/// sites use disjoint bonds, so φ_2(x) = 1 − Π_y (1 − pD(y)·pD(x − y)).
pub fn exact_two_point_small_t(kernel: &StepDistribution, p: f64, t: usize) -> Result<LatticeField> {
    Grower::new(kernel, p, BondScheme::Direct)?;
    let d = kernel.d();
    let r = kernel.radius();
    match t {
        0 => Ok(LatticeField::delta(d)),
        1 => LatticeField::from_values(d, r, 1, kernel.weights().iter().map(|w| p * w).collect()),
        2 => {
            let geom = BoxGeometry::new(d, 2 * r);
            let support = kernel.support();
            let mut diff = vec![0i64; d];
            let values = geom
                .sites()
                .map(|(_, x)| {
                    let mut miss = 1.0;
                    for (y, w) in &support {
                        diff.iter_mut().zip(&x).zip(y).for_each(|((a, b), c)| *a = b - c);
                        let second = kernel.weight(&diff);
                        if second > 0.0 {
                            miss *= 1.0 - p * w * p * second;
                        }
                    }
                    1.0 - miss
                })
                .collect();
            LatticeField::from_values(d, 2 * r, 2, values)
        }
        _ => Err(Error::Unsupported(format!("exact oriented-percolation two-point function at t = {t} > 2"))),
    }
}
