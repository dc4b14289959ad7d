//! Formal power series in the fugacity m: lace deconvolution, coefficient
//! asymptotics of (1−z)^{−1−β}(log 1/(1−z))^γ, and blowup fits of
//! generating functions near m_c.

use serde::Serialize;

use crate::conv::{convolve_direct, FftConvolver};
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeField;
use crate::numeric::fit::fit_line;
use crate::numeric::NeumaierSum;

/// Scalar series Σ_t c_t m^t truncated at a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn evaluate(&self, m: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        let mut power = 1.0;
        for &c in &self.coeffs {
            acc.add(c * power);
            power *= m;
        }
        acc.value()
    }

    /// Cauchy product truncated to the shorter order.
    pub fn mul(&self, other: &PowerSeries) -> PowerSeries {
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = (0..n)
            .map(|t| {
                let mut acc = NeumaierSum::new();
                for s in 0..=t {
                    acc.add(self.coeffs[s] * other.coeffs[t - s]);
                }
                acc.value()
            })
            .collect();
        PowerSeries { coeffs }
    }
}

/// Coefficients of (1−z)^{−1−β}: c_0 = 1, c_t = c_{t−1}(β + t)/t.
pub fn binomial_coefficients(beta: f64, horizon: usize) -> Result<PowerSeries> {
    if beta <= -1.0 && beta.fract() == 0.0 {
        return Err(invalid(format!("β = {beta} is a negative integer")));
    }
    let mut coeffs = Vec::with_capacity(horizon + 1);
    let mut c = 1.0;
    coeffs.push(c);
    for t in 1..=horizon {
        c *= (beta + t as f64) / t as f64;
        coeffs.push(c);
    }
    Ok(PowerSeries::new(coeffs))
}

pub const MAX_SINGULAR_ORDER: usize = 100_000;

/// Coefficients of (1−z)^{−1−β}(log 1/(1−z))^γ for γ ∈ {0, 1, 2}.
///
/// Writing F_γ for the series, (1−z)F_γ' = (1+β)F_γ + γF_{γ−1}, which gives
/// the O(T) recurrence f_{t+1} = ((t + 1 + β) f_t + γ g_t)/(t + 1) with g the
/// coefficients of F_{γ−1}.
pub fn singular_coefficients(beta: f64, gamma: u32, horizon: usize) -> Result<PowerSeries> {
    if gamma > 2 {
        return Err(Error::Unsupported(format!("log power γ = {gamma} (supported: 0, 1, 2)")));
    }
    if horizon > MAX_SINGULAR_ORDER {
        return Err(invalid(format!("order {horizon} above {MAX_SINGULAR_ORDER}")));
    }
    let mut level = binomial_coefficients(beta, horizon)?.coeffs;
    for g in 1..=gamma {
        let mut next = vec![0.0; horizon + 1];
        for t in 0..horizon {
            next[t + 1] = ((t as f64 + 1.0 + beta) * next[t] + g as f64 * level[t]) / (t as f64 + 1.0);
        }
        level = next;
    }
    Ok(PowerSeries::new(level))
}

/// Consecutive-ratio estimates of the radius of convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub t: usize,
    /// c_t / c_{t−1}.
    pub ratio: f64,
    /// 1 / ratio.
    pub m_c: f64,
    /// 1 / (t r_t − (t−1) r_{t−1}), removing the 1/t correction of a
    /// power-law prefactor; NaN at the first ratio.
    pub m_c_extrapolated: f64,
}

pub fn ratio_analysis(coeffs: &[f64]) -> Vec<RatioEstimate> {
    let mut out: Vec<RatioEstimate> = Vec::new();
    for t in 1..coeffs.len() {
        if coeffs[t - 1] == 0.0 {
            break;
        }
        let ratio = coeffs[t] / coeffs[t - 1];
        let m_c_extrapolated = match out.last() {
            Some(prev) => 1.0 / (t as f64 * ratio - (t - 1) as f64 * prev.ratio),
            None => f64::NAN,
        };
        out.push(RatioEstimate { t, ratio, m_c: 1.0 / ratio, m_c_extrapolated });
    }
    out
}

/// φ_t = I_t + Σ_{s=1}^t (J_s * φ_{t−s}), solved for J.
#[derive(Debug, Clone)]
pub struct LaceDecomposition {
    pub i_series: Vec<LatticeField>,
    pub j_series: Vec<LatticeField>,
    pub phi_series: Vec<LatticeField>,
    pub reconstruction_residual: f64,
}

pub const LACE_TOLERANCE: f64 = 1e-12;

/// Direct cost above which field convolutions go through the FFT.
const FFT_WORK: f64 = 1e7;

/// Full linear convolution of two fields; the result lives on the box of
/// radius a + b.
pub fn convolve_fields(a: &LatticeField, b: &LatticeField) -> LatticeField {
    assert_eq!(a.d(), b.d());
    let d = a.d();
    let (sa, sb) = (a.geometry().side(), b.geometry().side());
    let work = a.values().len() as f64 * b.values().len() as f64;
    let values = if work > FFT_WORK {
        FftConvolver::new(b.values(), sb, d).convolve(a.values(), sa)
    } else {
        convolve_direct(a.values(), sa, b.values(), sb, d)
    };
    LatticeField::from_signed(d, a.box_radius() + b.box_radius(), a.t + b.t, values)
        .expect("convolution of finite fields is finite")
}

/// a − b (or a + b) on the union box.
fn combine(a: &LatticeField, b: &LatticeField, sign: f64) -> LatticeField {
    let r = a.box_radius().max(b.box_radius());
    let (a, b) = (a.embed(r), b.embed(r));
    let values = a.values().iter().zip(b.values()).map(|(x, y)| x + sign * y).collect();
    LatticeField::from_signed(a.d(), r, a.t, values).expect("finite")
}

fn zero_like(f: &LatticeField, t: usize) -> LatticeField {
    LatticeField::zeros(f.d(), 0, t)
}

/// Σ_{s=lo}^{hi} J_s * φ_{t−s}.
fn lace_sum(j: &[LatticeField], phi: &[LatticeField], t: usize, lo: usize, hi: usize) -> LatticeField {
    let mut acc = zero_like(&phi[0], t);
    for s in lo..=hi {
        let mut c = convolve_fields(&j[s], &phi[t - s]);
        c.t = t;
        acc = combine(&acc, &c, 1.0);
    }
    acc
}

/// Solves J_t = φ_t − I_t − Σ_{s=1}^{t−1} J_s * φ_{t−s}, using φ_0 = I_0 = δ
/// so that the s = t term is J_t itself.
pub fn deconvolve_lace(phi: &[LatticeField], i_series: &[LatticeField]) -> Result<LaceDecomposition> {
    if phi.is_empty() || phi.len() != i_series.len() {
        return Err(invalid("φ and I series must be nonempty and of equal length"));
    }
    let d = phi[0].d();
    if phi.iter().chain(i_series).any(|f| f.d() != d) {
        return Err(invalid("all fields must share one dimension"));
    }
    let delta = LatticeField::delta(d);
    if phi[0].sup_distance(&delta) > LACE_TOLERANCE || i_series[0].sup_distance(&delta) > LACE_TOLERANCE {
        return Err(invalid("φ_0 and I_0 must both be the delta at the origin"));
    }
    let mut j = vec![zero_like(&phi[0], 0)];
    for t in 1..phi.len() {
        let mut jt = combine(&phi[t], &i_series[t], -1.0);
        if t > 1 {
            jt = combine(&jt, &lace_sum(&j, phi, t, 1, t - 1), -1.0);
        }
        jt.t = t;
        j.push(jt);
    }
    let rebuilt = reconstruct(i_series, &j, phi);
    let residual = rebuilt.iter().zip(phi).map(|(a, b)| a.sup_distance(b)).fold(0.0, f64::max);
    if residual > LACE_TOLERANCE {
        return Err(Error::NumericFailure { context: "lace reconstruction".into(), residual });
    }
    Ok(LaceDecomposition {
        i_series: i_series.to_vec(),
        j_series: j,
        phi_series: phi.to_vec(),
        reconstruction_residual: residual,
    })
}

/// I_t + Σ_{s=1}^t J_s * φ_{t−s}.
pub fn reconstruct(i_series: &[LatticeField], j: &[LatticeField], phi: &[LatticeField]) -> Vec<LatticeField> {
    (0..phi.len())
        .map(|t| {
            if t == 0 {
                return i_series[0].clone();
            }
            let mut f = combine(&i_series[t], &lace_sum(j, phi, t, 1, t), 1.0);
            f.t = t;
            f
        })
        .collect()
}

/// I_t = δ_{x,o} δ_{t,0}, the random-walk and self-avoiding-walk choice.
pub fn walk_i_series(d: usize, horizon: usize) -> Vec<LatticeField> {
    (0..=horizon).map(|t| if t == 0 { LatticeField::delta(d) } else { LatticeField::zeros(d, 0, t) }).collect()
}

/// Window of 1 − m/m_c used by the blowup fit.
pub const BLOWUP_WINDOW: (f64, f64) = (1e-3, 1e-1);

/// Largest allowed estimated truncation tail, relative to the partial sum.
pub const BLOWUP_TAIL: f64 = 0.01;

/// One evaluation of a truncated generating function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupPoint {
    pub m: f64,
    pub value: f64,
    /// last term / (1 − m/m_c), a proxy for the discarded tail.
    pub tail_estimate: f64,
}

/// Evaluates Σ_{t≤T} m^t c_t at `n` log-spaced points of the fit window and
/// keeps those whose estimated tail is below 1% of the sum.
pub fn partial_sum_points(coeffs: &[f64], m_c: f64, n: usize) -> Result<Vec<BlowupPoint>> {
    if !(m_c > 0.0) || n < 2 {
        return Err(invalid("need m_c > 0 and at least two grid points"));
    }
    let series = PowerSeries::new(coeffs.to_vec());
    let (lo, hi) = (BLOWUP_WINDOW.0.ln(), BLOWUP_WINDOW.1.ln());
    let mut out = Vec::new();
    for i in 0..n {
        let gap = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let m = m_c * (1.0 - gap);
        let value = series.evaluate(m);
        let last = coeffs.last().copied().unwrap_or(0.0) * m.powi(coeffs.len() as i32 - 1);
        let tail_estimate = last.abs() / gap;
        if tail_estimate < BLOWUP_TAIL * value.abs() {
            out.push(BlowupPoint { m, value, tail_estimate });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    /// Fitted e in value ≈ A (1 − m/m_c)^{−e}.
    pub exponent: f64,
    pub amplitude: f64,
    /// A with e pinned at the expected exponent: geometric mean of
    /// value·(1 − m/m_c)^e over the window.
    pub amplitude_pinned: f64,
    pub expected_exponent: f64,
    /// RMS residual of the free log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Log-log regression of generating-function values against 1 − m/m_c,
/// restricted to the fit window.
pub fn fit_generating_blowup(values: &[(f64, f64)], m_c: f64, expected_exponent: f64) -> Result<BlowupFit> {
    let (lo, hi) = BLOWUP_WINDOW;
    let usable: Vec<(f64, f64)> = values
        .iter()
        .map(|&(m, v)| (1.0 - m / m_c, v))
        .filter(|&(g, v)| g >= lo * (1.0 - 1e-9) && g <= hi * (1.0 + 1e-9) && v > 0.0)
        .map(|(g, v)| (g.ln(), v.ln()))
        .collect();
    if usable.len() < 5 {
        return Err(invalid(format!("{} usable points in the fit window, need 5", usable.len())));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| invalid("degenerate fit window"))?;
    let pinned = usable.iter().map(|(x, y)| y + expected_exponent * x).sum::<f64>() / usable.len() as f64;
    Ok(BlowupFit {
        exponent: -fit.slope,
        amplitude: fit.intercept.exp(),
        amplitude_pinned: pinned.exp(),
        expected_exponent,
        residual: fit.rms,
        points: usable.len(),
    })
}
