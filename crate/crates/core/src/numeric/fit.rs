//! Ordinary and two-regressor least squares.

/// Result of y ≈ slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of y − fitted.
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / nf).sqrt();
    Some(LineFit { slope, intercept, rms })
}

/// Least-squares (a, b) for y ≈ a·u + b·w without intercept.
pub fn fit_two(us: &[f64], ws: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let (mut suu, mut sww, mut suw, mut suy, mut swy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((u, w), y) in us.iter().zip(ws).zip(ys) {
        suu += u * u;
        sww += w * w;
        suw += u * w;
        suy += u * y;
        swy += w * y;
    }
    let det = suu * sww - suw * suw;
    if det.abs() <= 1e-14 * suu * sww {
        return None;
    }
    Some(((suy * sww - swy * suw) / det, (swy * suu - suy * suw) / det))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!(f.rms < 1e-14);
    }

    #[test]
    fn exact_two_regressors() {
        let us = [1.0, 2.0, 3.0, 5.0];
        let ws = [1.0, -1.0, 0.5, 2.0];
        let ys: Vec<f64> = us.iter().zip(&ws).map(|(u, w)| 0.3 * u - 1.5 * w).collect();
        let (a, b) = fit_two(&us, &ws, &ys).unwrap();
        assert!((a - 0.3).abs() < 1e-13 && (b + 1.5).abs() < 1e-13);
    }
}
