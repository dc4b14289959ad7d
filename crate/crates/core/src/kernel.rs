//! The long-range step distribution D(x) ∝ h(x/L) with the Kac profile
//! h(y) = (|y| ∨ 1)^{−(d+α)}, truncated to a sup-norm box and renormalized.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::asymptotics::k_r_quadrature;
use crate::error::{invalid, Error, Result};
use crate::lattice::BoxGeometry;
use crate::numeric::fit::{fit_line, fit_two};
use crate::numeric::quad::{integrate, QuadOptions};
use crate::numeric::special::{abs_pow, sphere_area};
use crate::numeric::{compensated_sum, NeumaierSum};

/// Default bound on the kernel mass discarded by truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    d: usize,
    l: f64,
    alpha: f64,
    radius: usize,
    c_h: f64,
    tail_bound: f64,
    weights: Vec<f64>,
    /// Σ over x_2..x_d of D(x), indexed by x_1 + radius.
    axis_marginal: Vec<f64>,
}

/// Kac profile (|y| ∨ 1)^{−(d+α)} evaluated at y = x/L.
fn kac_profile(x: &[i64], l: f64, exponent: f64) -> f64 {
    let norm = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt() / l;
    norm.max(1.0).powf(-exponent)
}

impl StepDistribution {
    /// Builds the truncated Kac kernel and checks that the discarded tail
    /// is below [`DEFAULT_TAIL_TOLERANCE`].
    pub fn kac(d: usize, l: f64, alpha: f64, radius: usize) -> Result<Self> {
        Self::kac_with_tolerance(d, l, alpha, radius, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn kac_with_tolerance(d: usize, l: f64, alpha: f64, radius: usize, tolerance: f64) -> Result<Self> {
        check_common(d, l, alpha)?;
        let min_radius = 2usize.max(l.ceil() as usize);
        if radius < min_radius {
            return Err(invalid(format!("radius must be at least max(2, ceil(L)) = {min_radius}, got {radius}")));
        }
        let kernel = Self::assemble(d, l, alpha, radius)?;
        if !(kernel.tail_bound <= tolerance) {
            return Err(Error::Truncation { bound: kernel.tail_bound, tolerance });
        }
        Ok(kernel)
    }

    /// The Kac profile restricted to a small box and renormalized, taken as
    /// a finite-range model in its own right. No tail check is made; the
    /// reported `tail_bound` is still the bound for the untruncated kernel.
    /// Used for exact enumeration, where the support must stay tiny.
    pub fn truncated_kac(d: usize, l: f64, alpha: f64, radius: usize) -> Result<Self> {
        check_common(d, l, alpha)?;
        if radius == 0 {
            return Err(invalid("radius must be positive"));
        }
        Self::assemble(d, l, alpha, radius)
    }

    fn assemble(d: usize, l: f64, alpha: f64, radius: usize) -> Result<Self> {
        let geometry = BoxGeometry::new(d, radius);
        let volume = geometry.checked_volume().filter(|&v| v <= 1 << 28).ok_or_else(|| Error::ResourceLimit {
            what: "kernel box".into(),
            estimate: (2.0 * radius as f64 + 1.0).powi(d as i32),
            cap: (1u64 << 28) as f64,
        })?;
        let exponent = d as f64 + alpha;
        let mut x = vec![0; d];
        let mut profile = Vec::with_capacity(volume);
        for i in 0..volume {
            geometry.coords_into(i, &mut x);
            profile.push(kac_profile(&x, l, exponent));
        }
        let total = compensated_sum(profile.iter().copied());
        let weights: Vec<f64> = profile.iter().map(|h| h / total).collect();
        let c_h = l.powi(d as i32) / total;
        let tail_bound = tail_mass_bound(d, l, alpha, radius) / total;
        Ok(Self::from_parts_unchecked(d, l, alpha, radius, c_h, tail_bound, weights))
    }

    fn from_parts_unchecked(
        d: usize,
        l: f64,
        alpha: f64,
        radius: usize,
        c_h: f64,
        tail_bound: f64,
        weights: Vec<f64>,
    ) -> Self {
        let geometry = BoxGeometry::new(d, radius);
        let side = geometry.side();
        let stride = weights.len() / side;
        let axis_marginal =
            (0..side).map(|a| compensated_sum(weights[a * stride..(a + 1) * stride].iter().copied())).collect();
        Self { d, l, alpha, radius, c_h, tail_bound, weights, axis_marginal }
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn range(&self) -> f64 {
        self.l
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn radius(&self) -> usize {
        self.radius
    }
    /// Normalizer in D(x) = c_h L^{−d} h(x/L).
    pub fn c_h(&self) -> f64 {
        self.c_h
    }
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn geometry(&self) -> BoxGeometry {
        BoxGeometry::new(self.d, self.radius)
    }

    /// D(x), zero outside the box.
    pub fn weight(&self, x: &[i64]) -> f64 {
        self.geometry().index(x).map_or(0.0, |i| self.weights[i])
    }

    /// Sites with positive weight, in lexicographic order.
    pub fn support(&self) -> Vec<(Vec<i64>, f64)> {
        let g = self.geometry();
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, &w)| (g.coords(i), w)).collect()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// D̂(k) = Σ_x cos(k·x) D(x).
    pub fn fourier(&self, k: &[f64]) -> f64 {
        assert_eq!(k.len(), self.d, "wave vector has the wrong dimension");
        let g = self.geometry();
        let mut x = vec![0; self.d];
        let mut acc = NeumaierSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            g.coords_into(i, &mut x);
            let phase: f64 = x.iter().zip(k).map(|(&c, &kc)| c as f64 * kc).sum();
            acc.add(phase.cos() * w);
        }
        acc.value()
    }

    /// 1 − D̂(k e_1), summed as Σ 2 sin²(k x_1/2) D(x) to avoid cancellation.
    pub fn one_minus_fourier_axis(&self, k: f64) -> f64 {
        let r = self.radius as i64;
        let mut acc = NeumaierSum::new();
        for (a, &w) in self.axis_marginal.iter().enumerate() {
            let x1 = a as i64 - r;
            let s = (0.5 * k * x1 as f64).sin();
            acc.add(2.0 * s * s * w);
        }
        acc.value()
    }

    /// Σ_x |x|^r D(x) over the truncated box.
    pub fn abs_moment(&self, r: f64) -> Result<AbsMoment> {
        if !(r >= 0.0) {
            return Err(invalid(format!("moment order must be nonnegative, got {r}")));
        }
        let g = self.geometry();
        let mut x = vec![0; self.d];
        let mut acc = NeumaierSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            g.coords_into(i, &mut x);
            let norm = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            acc.add(abs_pow(norm, r) * w);
        }
        Ok(AbsMoment { value: acc.value(), divergent: r >= self.alpha })
    }

    /// σ² = Σ_x |x|² D(x) of the truncated kernel.
    pub fn variance(&self) -> f64 {
        self.abs_moment(2.0).expect("r = 2 is valid").value
    }

    /// Amplitude v_α of 1 − D̂(k) ~ v_α |k|^{α∧2} for the untruncated kernel:
    /// σ²/(2d) for α > 2, c_h L² ω_d/(2d) at α = 2 (multiplying the
    /// logarithm), and c_h L^α ∫(1 − cos y_1)/|y|^{d+α} d^d y for α < 2.
    pub fn v_alpha_closed_form(&self) -> Result<f64> {
        let d = self.d as f64;
        if self.alpha > 2.0 {
            Ok(self.variance() / (2.0 * d))
        } else if self.alpha == 2.0 {
            Ok(self.c_h * self.l * self.l * sphere_area(self.d) / (2.0 * d))
        } else {
            Ok(self.c_h * self.l.powf(self.alpha) * cosine_integral(self.d, self.alpha)?)
        }
    }

    /// Fits the small-k behaviour of 1 − D̂(k e_1).
    ///
    /// Without `log_mode`: a straight line through (ln k, ln(1 − D̂)). With
    /// `log_mode` (meant for α = 2): 1 − D̂ ≈ v k² ln(1/(Lk)) + b k² by
    /// relative least squares, reporting v and exponent 2.
    pub fn fit_dispersion(&self, k_grid: &[f64], log_mode: bool) -> Result<DispersionFit> {
        if k_grid.len() < 5 {
            return Err(invalid(format!("dispersion fit needs at least 5 grid points, got {}", k_grid.len())));
        }
        let kmin = k_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let kmax = k_grid.iter().copied().fold(0.0, f64::max);
        if !(kmin > 0.0) || kmax * self.l >= 1.0 {
            return Err(invalid("grid points must satisfy 0 < k < 1/L"));
        }
        if kmax < 10.0 * kmin * (1.0 - 1e-12) {
            return Err(invalid("k grid must span at least one decade"));
        }
        let ys: Vec<f64> = k_grid.iter().map(|&k| self.one_minus_fourier_axis(k)).collect();
        if log_mode {
            let us: Vec<f64> = k_grid.iter().zip(&ys).map(|(&k, y)| k * k * (1.0 / (self.l * k)).ln() / y).collect();
            let ws: Vec<f64> = k_grid.iter().zip(&ys).map(|(&k, y)| k * k / y).collect();
            let ones = vec![1.0; ys.len()];
            let (a, b) = fit_two(&us, &ws, &ones).ok_or_else(|| Error::NumericFailure {
                context: "log-mode dispersion fit is singular".into(),
                residual: f64::NAN,
            })?;
            let residual = rms(us.iter().zip(&ws).map(|(u, w)| a * u + b * w - 1.0));
            Ok(DispersionFit { exponent_est: 2.0, v_alpha_est: a, log_mode: true, log_offset: Some(b), residual })
        } else {
            let lx: Vec<f64> = k_grid.iter().map(|k| k.ln()).collect();
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let line = fit_line(&lx, &ly).ok_or_else(|| invalid("degenerate k grid"))?;
            let residual = rms(lx.iter().zip(&ly).map(|(x, y)| (line.slope * x + line.intercept - y).exp() - 1.0));
            Ok(DispersionFit {
                exponent_est: line.slope,
                v_alpha_est: line.intercept.exp(),
                log_mode: false,
                log_offset: None,
                residual,
            })
        }
    }

    /// Alias table for sampling steps.
    pub fn sampler(&self) -> StepSampler {
        let alias = WeightedAliasIndex::new(self.weights.clone()).expect("kernel weights are positive and finite");
        StepSampler { alias, geometry: self.geometry() }
    }

    pub fn to_file(&self) -> KernelFile {
        let g = self.geometry();
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut row: Vec<f64> = g.coords(i).into_iter().map(|c| c as f64).collect();
                row.push(p);
                row
            })
            .collect();
        KernelFile {
            d: self.d,
            l: self.l,
            alpha: self.alpha,
            radius: self.radius,
            c_h: self.c_h,
            tail_bound: self.tail_bound,
            weights,
        }
    }

    pub fn from_file(file: &KernelFile) -> Result<Self> {
        check_common(file.d, file.l, file.alpha)?;
        let g = BoxGeometry::new(file.d, file.radius);
        let volume = g.checked_volume().ok_or_else(|| invalid("kernel box too large"))?;
        if file.weights.len() != volume {
            return Err(Error::Format(format!("expected {volume} weight rows, found {}", file.weights.len())));
        }
        let mut weights = Vec::with_capacity(volume);
        for (i, row) in file.weights.iter().enumerate() {
            if row.len() != file.d + 1 {
                return Err(Error::Format(format!("weight row {i} has {} entries", row.len())));
            }
            let expected = g.coords(i);
            if row[..file.d].iter().zip(&expected).any(|(a, &b)| *a != b as f64) {
                return Err(Error::Format(format!("weight row {i} is out of lexicographic order")));
            }
            let p = row[file.d];
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Format(format!("weight row {i} has invalid probability {p}")));
            }
            weights.push(p);
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Format(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::from_parts_unchecked(file.d, file.l, file.alpha, file.radius, file.c_h, file.tail_bound, weights))
    }
}

fn check_common(d: usize, l: f64, alpha: f64) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(l >= 1.0) || !l.is_finite() {
        return Err(invalid(format!("range L must be at least 1, got {l}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Upper bound on Σ_{|x|_∞ > R} h(x/L).
///
/// Each such x owns the unit cube around it, which lies outside the ball of
/// radius R − 1/2, and |x| ≥ |y| − √d/2 on it. Integrating in polar
/// coordinates gives L^{d+α} ω_d κ (R − 1/2 − √d/2)^{−α}/α with
/// κ = ((R − 1/2)/(R − 1/2 − √d/2))^{d−1}.
fn tail_mass_bound(d: usize, l: f64, alpha: f64, radius: usize) -> f64 {
    let inner = radius as f64 - 0.5;
    let shift = (d as f64).sqrt() / 2.0;
    let reach = inner - shift;
    if reach <= 0.0 {
        return f64::INFINITY;
    }
    let kappa = (inner / reach).powi(d as i32 - 1);
    l.powf(d as f64 + alpha) * sphere_area(d) * kappa * reach.powf(-alpha) / alpha
}

/// ∫_{R^d} (1 − cos y_1)/|y|^{d+α} d^d y for 0 < α < 2, d ≤ 3, split into
/// the radial factor K_α and the angular factor ∫_{S^{d−1}} |θ_1|^α dθ.
pub fn cosine_integral(d: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("cosine integral needs 0 < alpha < 2, got {alpha}")));
    }
    let radial = k_r_quadrature(alpha)?;
    let angular = match d {
        1 => 2.0,
        2 | 3 => {
            let m = d as i32 - 2;
            let half = integrate(
                |phi: f64| phi.cos().max(0.0).powf(alpha) * phi.sin().powi(m),
                0.0,
                PI / 2.0,
                QuadOptions::default(),
            )?;
            sphere_area(d - 1) * 2.0 * half.value
        }
        _ => return Err(Error::Unsupported(format!("closed-form v_alpha for d = {d} > 3"))),
    };
    Ok(radial * angular)
}

fn rms<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (s / n as f64).sqrt()
}

/// A truncated moment Σ|x|^r D(x). `divergent` marks r ≥ α, where the
/// untruncated sum is infinite and the value grows with the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsMoment {
    pub value: f64,
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionFit {
    pub exponent_est: f64,
    pub v_alpha_est: f64,
    pub log_mode: bool,
    /// Coefficient of the plain k² term in log mode.
    pub log_offset: Option<f64>,
    /// RMS relative residual of the fitted curve.
    pub residual: f64,
}

/// Draws steps from a kernel in O(1) per draw.
#[derive(Debug, Clone)]
pub struct StepSampler {
    alias: WeightedAliasIndex<f64>,
    geometry: BoxGeometry,
}

impl StepSampler {
    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [i64]) {
        let i = self.sample_index(rng);
        self.geometry.coords_into(i, out);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        let mut out = vec![0; self.geometry.d];
        self.sample_into(rng, &mut out);
        out
    }
}

/// On-disk kernel: weights listed as [x_1, ..., x_d, p] rows in
/// lexicographic lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub radius: usize,
    pub c_h: f64,
    /// `null` when no finite bound is available (boxes too small for the
    /// integral comparison).
    #[serde(with = "finite_or_null")]
    pub tail_bound: f64,
    pub weights: Vec<Vec<f64>>,
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
