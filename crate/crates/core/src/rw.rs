//! Exact evolution of the random-walk two-point function
//! φ_t = φ_{t−1} * D, φ_0 = δ_o, and the moment functionals evaluated on it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotics::k_r_closed;
use crate::conv::{convolve_direct, crop_centered, FftConvolver};
use crate::error::{invalid, Error, Result};
use crate::kernel::StepDistribution;
use crate::lattice::{BoxGeometry, LatticeField};
use crate::numeric::quad::{fourier_tail, integrate, QuadOptions};
use crate::numeric::special::abs_pow;
use crate::numeric::{compensated_sum, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxPolicy {
    /// Box radius t·R: exact, no leak. Fails up front if the final box
    /// exceeds the memory cap.
    Grow,
    /// Grow until `radius`, then keep the box and account for the mass that
    /// leaves it. Each step's leak must stay below `leak_tolerance`.
    Fixed { radius: usize, leak_tolerance: f64 },
    /// Grow until the memory cap is reached, then behave like `Fixed`.
    Auto { leak_tolerance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Direct below `fft_threshold` multiply-adds per step, FFT above.
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub policy: BoxPolicy,
    pub backend: Backend,
    /// Largest number of lattice sites a field may hold.
    pub max_cells: usize,
    pub fft_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            policy: BoxPolicy::Auto { leak_tolerance: 1e-9 },
            backend: Backend::Auto,
            max_cells: 1 << 26,
            fft_threshold: 1e8,
        }
    }
}

impl EvolveOptions {
    pub fn with_policy(mut self, policy: BoxPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

fn cells(d: usize, radius: usize) -> f64 {
    (2.0 * radius as f64 + 1.0).powi(d as i32)
}

/// Steps φ_t forward one convolution at a time. Yields φ_0, φ_1, ..., φ_T.
pub struct RwEvolver<'a> {
    kernel: &'a StepDistribution,
    opts: EvolveOptions,
    horizon: usize,
    cap_radius: usize,
    leak_tolerance: f64,
    current: Option<LatticeField>,
    fft: Option<FftConvolver>,
    done: bool,
}

impl<'a> RwEvolver<'a> {
    pub fn new(kernel: &'a StepDistribution, horizon: usize, opts: EvolveOptions) -> Result<Self> {
        let d = kernel.d();
        let r = kernel.radius();
        let (cap_radius, leak_tolerance) = match opts.policy {
            BoxPolicy::Grow => {
                let radius = horizon.saturating_mul(r);
                if cells(d, radius) > opts.max_cells as f64 {
                    return Err(Error::ResourceLimit {
                        what: format!("grow-policy box of radius {radius} in d = {d}"),
                        estimate: cells(d, radius),
                        cap: opts.max_cells as f64,
                    });
                }
                (radius, 0.0)
            }
            BoxPolicy::Fixed { radius, leak_tolerance } => {
                if cells(d, radius) > opts.max_cells as f64 {
                    return Err(Error::ResourceLimit {
                        what: format!("fixed box of radius {radius} in d = {d}"),
                        estimate: cells(d, radius),
                        cap: opts.max_cells as f64,
                    });
                }
                (radius, leak_tolerance)
            }
            BoxPolicy::Auto { leak_tolerance } => {
                let side = (opts.max_cells as f64).powf(1.0 / d as f64).floor() as usize;
                let mut radius = side.saturating_sub(1) / 2;
                while radius > 0 && cells(d, radius) > opts.max_cells as f64 {
                    radius -= 1;
                }
                (radius.min(horizon.saturating_mul(r)), leak_tolerance)
            }
        };
        if cap_radius == 0 && horizon > 0 {
            return Err(invalid("memory cap leaves no room for a single step"));
        }
        Ok(Self { kernel, opts, horizon, cap_radius, leak_tolerance, current: None, fft: None, done: false })
    }

    fn step(&mut self, prev: &LatticeField) -> Result<LatticeField> {
        let d = prev.d();
        let kr = self.kernel.radius();
        let sf = prev.geometry().side();
        let sk = self.kernel.geometry().side();
        let work = prev.values().len() as f64 * self.kernel.weights().len() as f64;
        let use_fft = match self.opts.backend {
            Backend::Direct => false,
            Backend::Fft => true,
            Backend::Auto => work > self.opts.fft_threshold,
        };
        let mut full = if use_fft {
            let kernel = self.kernel;
            self.fft.get_or_insert_with(|| FftConvolver::new(kernel.weights(), sk, d)).convolve(prev.values(), sf)
        } else {
            convolve_direct(prev.values(), sf, self.kernel.weights(), sk, d)
        };
        if use_fft {
            full.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let full_radius = prev.box_radius() + kr;
        let radius = full_radius.min(self.cap_radius);
        let values = crop_centered(&full, 2 * full_radius + 1, 2 * radius + 1, d);
        let mut leak = prev.leak;
        let mut next = if radius < full_radius {
            let kept = LatticeField::from_parts(BoxGeometry::new(d, radius), prev.t + 1, values, 0.0);
            let step_leak = (compensated_sum(full.iter().copied()) - kept.mass()).max(0.0);
            if step_leak > self.leak_tolerance {
                return Err(Error::Truncation { bound: step_leak, tolerance: self.leak_tolerance });
            }
            leak += step_leak;
            kept
        } else {
            LatticeField::from_parts(BoxGeometry::new(d, radius), prev.t + 1, values, 0.0)
        };
        next.leak = leak;
        Ok(next)
    }
}

impl Iterator for RwEvolver<'_> {
    type Item = Result<LatticeField>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let next = match self.current.take() {
            None => Ok(LatticeField::delta(self.kernel.d())),
            Some(prev) => self.step(&prev),
        };
        match next {
            Ok(field) => {
                if field.t >= self.horizon {
                    self.done = true;
                }
                self.current = Some(field.clone());
                Some(Ok(field))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// φ_0, ..., φ_T collected in memory.
pub fn evolve(kernel: &StepDistribution, horizon: usize, opts: EvolveOptions) -> Result<Vec<LatticeField>> {
    RwEvolver::new(kernel, horizon, opts)?.collect()
}

/// Σ over x_2..x_d of φ(x), indexed by x_1 + box_radius.
pub fn axis_marginal(field: &LatticeField) -> Vec<f64> {
    let side = field.geometry().side();
    let stride = field.values().len() / side;
    field.values().chunks(stride).map(|slab| compensated_sum(slab.iter().copied())).collect()
}

fn check_order(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid(format!("moment order must be nonnegative, got {r}")));
    }
    Ok(())
}

/// Σ_x |x_1|^r φ(x).
pub fn abs_moment_axis(field: &LatticeField, r: f64) -> Result<f64> {
    check_order(r)?;
    let radius = field.box_radius() as i64;
    let mut acc = NeumaierSum::new();
    for (a, m) in axis_marginal(field).into_iter().enumerate() {
        acc.add(abs_pow((a as i64 - radius) as f64, r) * m);
    }
    Ok(acc.value())
}

/// Σ_x |x|^r φ(x) with the Euclidean norm.
pub fn abs_moment_norm(field: &LatticeField, r: f64) -> Result<f64> {
    check_order(r)?;
    if field.d() == 1 {
        return abs_moment_axis(field, r);
    }
    let g = field.geometry();
    let mut x = vec![0; g.d];
    let mut acc = NeumaierSum::new();
    for (i, &v) in field.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        g.coords_into(i, &mut x);
        let norm = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        acc.add(abs_pow(norm, r) * v);
    }
    Ok(acc.value())
}

/// ξ^{(r)} = (Σ|x|^r φ / Σφ)^{1/r}.
pub fn gyration_radius(field: &LatticeField, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid(format!("gyration radius needs r > 0, got {r}")));
    }
    if !(field.mass() > 0.0) {
        return Err(Error::DegenerateField(format!("field at t = {} has zero mass", field.t)));
    }
    Ok((abs_moment_norm(field, r)? / field.mass()).powf(1.0 / r))
}

/// Σ_x cos(k·x) φ(x) / Σ_x φ(x).
pub fn characteristic_ratio(field: &LatticeField, k: &[f64]) -> Result<f64> {
    if k.len() != field.d() {
        return Err(invalid("wave vector has the wrong dimension"));
    }
    if k.iter().any(|c| c.abs() > PI) {
        return Err(invalid("wave vector must lie in [−π, π]^d"));
    }
    if !(field.mass() > 0.0) {
        return Err(Error::DegenerateField(format!("field at t = {} has zero mass", field.t)));
    }
    let g = field.geometry();
    let mut x = vec![0; g.d];
    let mut acc = NeumaierSum::new();
    for (i, &v) in field.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        g.coords_into(i, &mut x);
        let phase: f64 = x.iter().zip(k).map(|(&c, &kc)| c as f64 * kc).sum();
        acc.add(phase.cos() * v);
    }
    Ok(acc.value() / field.mass())
}

/// Σ_x |x_1|^r φ(x) for 0 < r < 2 recovered from the cosine representation
/// (1/K_r) ∫_0^∞ du/u^{1+r} Σ_x (1 − cos(u x_1)) φ(x).
///
/// The integral is taken termwise over the distinct values a = |x_1|:
/// [0, 1] by adaptive quadrature after u = s^{2/(2−r)}; on [1, ∞) the
/// identity ∫_1^∞ (1 − cos(ua))/u^{1+r} du = 1/r − ∫_1^∞ cos(ua)/u^{1+r} du,
/// with the last integral integrated by parts into
/// −sin(a)/a + ((1+r)/a) ∫_1^∞ sin(ua)/u^{2+r} du, whose damped integrand
/// is handled by quadrature up to ua ≥ 100 and an asymptotic tail beyond.
pub fn fractional_moment_via_integral(field: &LatticeField, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 2.0) {
        return Err(invalid(format!("the integral representation needs 0 < r < 2, got {r}")));
    }
    let k_r = k_r_closed(r)?;
    let marginal = axis_marginal(field);
    let radius = field.box_radius();
    let mut total = NeumaierSum::new();
    let mut error = 0.0;
    let mut scale = NeumaierSum::new();
    for a in 1..=radius {
        let w = marginal[radius + a] + marginal[radius - a];
        if w == 0.0 {
            continue;
        }
        let (value, err) = cosine_transform_atom(a as f64, r)?;
        total.add(w * value);
        scale.add(w * (a as f64).powf(r) * k_r);
        error += w * err;
    }
    let total = total.value();
    let scale = scale.value();
    if scale > 0.0 && error / scale > 1e-6 {
        return Err(Error::NumericFailure {
            context: format!("integral representation at r = {r}"),
            residual: error / scale,
        });
    }
    Ok(total / k_r)
}

/// ∫_0^∞ (1 − cos(ua))/u^{1+r} du for a > 0, with its error estimate.
fn cosine_transform_atom(a: f64, r: f64) -> Result<(f64, f64)> {
    let q = 2.0 / (2.0 - r);
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 200 + 8 * a.ceil() as usize };
    let head = integrate(
        |s: f64| {
            let u = s.powf(q);
            let half = (0.5 * u * a).sin();
            2.0 * half * half * u.powf(-1.0 - r) * q * s.powf(q - 1.0)
        },
        0.0,
        1.0,
        opts,
    )?;
    let upper = (100.0 / a).max(1.0);
    let damped = integrate(|u: f64| (u * a).sin() * u.powf(-2.0 - r), 1.0, upper, opts)?;
    let (_, damped_tail) = fourier_tail(2.0 + r, a, upper)?;
    let cos_tail = -a.sin() / a + (1.0 + r) / a * (damped.value + damped_tail);
    Ok((head.value + 1.0 / r - cos_tail, head.error + (1.0 + r) / a * damped.error))
}

/// One row of a moment series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRecord {
    pub t: usize,
    pub mass: f64,
    pub leak: f64,
    /// Σ_x |x_1|^r φ_t(x), aligned with the series' r list.
    pub moments: Vec<f64>,
    /// moments / mass.
    pub ratios: Vec<f64>,
    /// ξ_t^{(r)}, using |x|^r.
    pub gyration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub r_list: Vec<f64>,
    pub records: Vec<MomentRecord>,
    /// |n|^r for n = 0, 1, ..., per r; grown with the box.
    #[serde(skip)]
    powers: Vec<Vec<f64>>,
}

impl MomentSeries {
    pub fn new(r_list: Vec<f64>) -> Result<Self> {
        for &r in &r_list {
            check_order(r)?;
        }
        let powers = vec![Vec::new(); r_list.len()];
        Ok(Self { r_list, records: Vec::new(), powers })
    }

    pub fn record(&mut self, field: &LatticeField) -> Result<()> {
        let mass = field.mass();
        let radius = field.box_radius();
        for (table, &r) in self.powers.iter_mut().zip(&self.r_list) {
            for n in table.len()..=radius {
                table.push(abs_pow(n as f64, r));
            }
        }
        let marginal = axis_marginal(field);
        let mut moments = Vec::with_capacity(self.r_list.len());
        let mut gyration = Vec::with_capacity(self.r_list.len());
        for (table, &r) in self.powers.iter().zip(&self.r_list) {
            let mut acc = NeumaierSum::new();
            for (a, m) in marginal.iter().enumerate() {
                acc.add(table[a.abs_diff(radius)] * m);
            }
            let moment = acc.value();
            moments.push(moment);
            gyration.push(if !(r > 0.0 && mass > 0.0) {
                f64::NAN
            } else if field.d() == 1 {
                (moment / mass).powf(1.0 / r)
            } else {
                gyration_radius(field, r)?
            });
        }
        let ratios = moments.iter().map(|m| m / mass).collect();
        self.records.push(MomentRecord { t: field.t, mass, leak: field.leak, moments, ratios, gyration });
        Ok(())
    }

    /// Evolves φ_t to the horizon, recording every step without keeping the
    /// fields.
    pub fn from_evolution(
        kernel: &StepDistribution,
        horizon: usize,
        r_list: Vec<f64>,
        opts: EvolveOptions,
    ) -> Result<Self> {
        let mut series = Self::new(r_list)?;
        for field in RwEvolver::new(kernel, horizon, opts)? {
            series.record(&field?)?;
        }
        Ok(series)
    }

    /// Moment sequence t ↦ Σ|x_1|^r φ_t for the r at `index`.
    pub fn moment_sequence(&self, index: usize) -> Vec<f64> {
        self.records.iter().map(|rec| rec.moments[index]).collect()
    }
}
