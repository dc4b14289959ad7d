use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gamma function. Valid for every real argument except the poles at the
/// nonpositive integers, which are rejected.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return Err(invalid(format!("gamma has a pole at {x}")));
    }
    if x > 0.0 {
        Ok(statrs::function::gamma::gamma(x))
    } else if x > -1.0 {
        Ok(statrs::function::gamma::gamma(x + 1.0) / x)
    } else {
        Ok(statrs::function::gamma::gamma(x))
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// ln Γ(z + a) − ln Γ(z) without the cancellation of two large logs.
/// Uses the Stirling series once z ≥ 10, shifting smaller z upward.
pub fn ln_gamma_ratio(z: f64, a: f64) -> f64 {
    if z < 10.0 {
        // Γ(z + a)/Γ(z) = [Γ(z + n + a)/Γ(z + n)] · Π (z + k)/(z + k + a)
        let n = (10.0 - z).ceil();
        let mut acc = ln_gamma_ratio(z + n, a);
        for k in 0..n as usize {
            let k = k as f64;
            acc += ((z + k) / (z + k + a)).ln();
        }
        return acc;
    }
    // Bernoulli terms B_{2k}/(2k(2k−1)).
    const C: [f64; 7] =
        [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0];
    let series = |x: f64| {
        let inv2 = 1.0 / (x * x);
        let mut pow = 1.0 / x;
        let mut acc = 0.0;
        for c in C {
            acc += c * pow;
            pow *= inv2;
        }
        acc
    };
    (z + a - 0.5) * (a / z).ln_1p() + a * z.ln() - a + (series(z + a) - series(z))
}

/// Surface area of the unit sphere S^{d-1} in R^d, 2π^{d/2}/Γ(d/2).
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "sphere_area needs d >= 1");
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// |x|^r with |0|^0 = 1 and |0|^r = 0 for r > 0, evaluated as exp(r ln|x|).
#[inline]
pub fn abs_pow(x: f64, r: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        if r == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if r == 0.0 {
        1.0
    } else {
        (r * a.ln()).exp()
    }
}
