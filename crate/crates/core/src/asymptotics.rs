//! Closed-form predictions for the gyration-radius asymptotics of
//! long-range models: the constant K_r, the moment amplitudes for the
//! generating function and for fixed t, and the scaling map k ↦ k_t.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::quad::{fourier_tail, integrate, QuadOptions};
use crate::numeric::special::gamma_fn;

/// Parameters of the universal asymptotic formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub alpha: f64,
    pub v_alpha: f64,
    pub c_i: f64,
    pub c_ii: f64,
    pub m_c: f64,
}

impl AsymptoticParams {
    pub fn new(alpha: f64, v_alpha: f64, c_i: f64, c_ii: f64, m_c: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(v_alpha > 0.0) || !(c_i > 0.0) || !(c_ii > 0.0) {
            return Err(invalid("v_alpha, C_I and C_II must be positive"));
        }
        if !(m_c >= 1.0) {
            return Err(invalid(format!("m_c must be at least 1, got {m_c}")));
        }
        Ok(Self { alpha, v_alpha, c_i, c_ii, m_c })
    }

    /// Random walk: C_I = C_II = m_c = 1.
    pub fn random_walk(alpha: f64, v_alpha: f64) -> Result<Self> {
        Self::new(alpha, v_alpha, 1.0, 1.0, 1.0)
    }

    /// α∧2, the effective stable index.
    pub fn stable_index(&self) -> f64 {
        self.alpha.min(2.0)
    }

    /// Upper-critical dimension 2(α∧2).
    pub fn d_c(&self) -> f64 {
        2.0 * self.stable_index()
    }

    pub fn is_log_case(&self) -> bool {
        self.alpha == 2.0
    }
}

/// K_r = ∫_0^∞ (1 − cos v)/v^{1+r} dv = π / (2Γ(r+1) sin(rπ/2)), 0 < r < 2.
pub fn k_r_closed(r: f64) -> Result<f64> {
    check_k_r_domain(r)?;
    Ok(PI / (2.0 * gamma_fn(r + 1.0)? * (r * PI / 2.0).sin()))
}

/// K_r by quadrature of the integrated-by-parts form (1/r)∫_0^∞ sin v / v^r dv.
///
/// [0, 1] is integrated after the substitution v = s^{2/(2−r)}, which turns
/// the v^{1−r} endpoint behaviour into a smooth s; [1, 2πN] adaptively; and
/// the remaining tail through its asymptotic expansion.
pub fn k_r_quadrature(r: f64) -> Result<f64> {
    check_k_r_domain(r)?;
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 4000 };
    let q = 2.0 / (2.0 - r);
    let head = integrate(
        |s: f64| {
            let v = s.powf(q);
            v.sin() * v.powf(-r) * q * s.powf(q - 1.0)
        },
        0.0,
        1.0,
        opts,
    )?;
    let upper = 2.0 * PI * 32.0;
    let body = integrate(|v: f64| v.sin() * v.powf(-r), 1.0, upper, opts)?;
    let (_, tail) = fourier_tail(r, 1.0, upper)?;
    let total = head.value + body.value + tail;
    let residual = (head.error + body.error) / total.abs();
    if residual > 1e-8 {
        return Err(Error::NumericFailure { context: format!("K_r quadrature at r = {r}"), residual });
    }
    Ok(total / r)
}

fn check_k_r_domain(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 2.0) {
        return Err(invalid(format!("K_r needs 0 < r < 2, got {r}")));
    }
    Ok(())
}

/// 2 sin(rπ/(α∨2)) / ((α∧2) sin(rπ/α)).
///
/// For α ≥ 2 the two sines coincide and the ratio is exactly 1; it is
/// returned without evaluating them so that no 0/0 can arise.
pub fn sine_ratio(r: f64, alpha: f64) -> f64 {
    if alpha >= 2.0 {
        1.0
    } else {
        2.0 * (r * PI / 2.0).sin() / (alpha * (r * PI / alpha).sin())
    }
}

/// A(r, α), the amplitude multiplying (C_II v_α t)^{r/(α∧2)} in the
/// fixed-t moment asymptotics.
pub fn moment_prefactor(r: f64, alpha: f64) -> Result<f64> {
    let a2 = alpha.min(2.0);
    Ok(sine_ratio(r, alpha) * gamma_fn(r + 1.0)? / gamma_fn(r / a2 + 1.0)?)
}

fn check_moment_order(r: f64, alpha: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {r}")));
    }
    if r >= alpha {
        return Err(Error::OutOfDomain(format!(
            "r = {r} >= alpha = {alpha}: the |x|^r moment of the step distribution diverges"
        )));
    }
    Ok(())
}

/// Predicted Σ|x_1|^r φ_t / Σ φ_t for large t.
pub fn main2_prediction(params: &AsymptoticParams, r: f64, t: u64) -> Result<f64> {
    check_moment_order(r, params.alpha)?;
    if t == 0 {
        return Err(invalid("the fixed-t prediction needs t >= 1"));
    }
    let a2 = params.stable_index();
    let t = t as f64;
    let scale = if params.is_log_case() {
        params.c_ii * params.v_alpha * t * (0.5 * t.ln())
    } else {
        params.c_ii * params.v_alpha * t
    };
    Ok(moment_prefactor(r, params.alpha)? * scale.powf(r / a2))
}

/// Main term of Σ_t m^t Σ_x |x_1|^r φ_t(x) as m ↑ m_c.
pub fn main1_prediction(params: &AsymptoticParams, r: f64, m: f64) -> Result<f64> {
    check_moment_order(r, params.alpha)?;
    if !(m >= 0.0) {
        return Err(invalid(format!("fugacity must be nonnegative, got {m}")));
    }
    if m >= params.m_c {
        return Err(Error::OutOfDomain(format!("m = {m} is not below m_c = {}", params.m_c)));
    }
    let a2 = params.stable_index();
    let gap = 1.0 - m / params.m_c;
    let mut value =
        sine_ratio(r, params.alpha) * gamma_fn(r + 1.0)? * params.c_i * (params.c_ii * params.v_alpha).powf(r / a2)
            / gap.powf(1.0 + r / a2);
    if params.is_log_case() {
        value *= (1.0 / gap.sqrt()).ln().powf(r / 2.0);
    }
    Ok(value)
}

/// The amplitude of `main1_prediction` without the singular factor, i.e.
/// its value times (1 − m/m_c)^{1+r/(α∧2)} for α ≠ 2.
pub fn main1_amplitude(params: &AsymptoticParams, r: f64) -> Result<f64> {
    check_moment_order(r, params.alpha)?;
    let a2 = params.stable_index();
    Ok(sine_ratio(r, params.alpha) * gamma_fn(r + 1.0)? * params.c_i * (params.c_ii * params.v_alpha).powf(r / a2))
}

/// Growth exponent of the typical displacement, t^{1/(α∧2)}, and whether
/// a logarithmic correction is present (α = 2).
pub fn conjecture_exponent(alpha: f64) -> Result<(f64, bool)> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok((1.0 / alpha.min(2.0), alpha == 2.0))
}

/// Scale factor s_t with k_t = s_t·k: (v_α t)^{−1/(α∧2)}, or
/// (v_2 t log √t)^{−1/2} when α = 2.
pub fn k_scale(alpha: f64, v_alpha: f64, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(invalid("k scaling needs t >= 1"));
    }
    let t = t as f64;
    if alpha == 2.0 {
        if t < 2.0 {
            return Err(invalid("the alpha = 2 scaling needs t >= 2"));
        }
        Ok((v_alpha * t * 0.5 * t.ln()).powf(-0.5))
    } else {
        Ok((v_alpha * t).powf(-1.0 / alpha.min(2.0)))
    }
}

/// Maps a wave vector k to k_t.
pub fn k_scaling(k: &[f64], alpha: f64, v_alpha: f64, t: u64) -> Result<Vec<f64>> {
    let s = k_scale(alpha, v_alpha, t)?;
    Ok(k.iter().map(|c| c * s).collect())
}
