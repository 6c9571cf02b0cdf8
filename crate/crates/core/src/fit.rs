//! Least-squares fits used for the fidelity models.

use crate::error::{invalid, Result};
use serde::Serialize;

/// `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    LinearFit {
        intercept,
        slope,
        r_squared: 1.0 - ss_res / syy,
    }
}

/// `y = 1 − c·e^{d·x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpFit {
    pub c: f64,
    pub d: f64,
    /// RMS residual in y.
    pub rms: f64,
}

/// Least squares in `y` for `y = 1 − c·e^{d·x}`, seeded by a straight
/// line through `ln(1 − y)` and refined by damped Gauss–Newton.
pub fn exp_fit(xs: &[f64], ys: &[f64]) -> Result<ExpFit> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return invalid("exponential fit needs at least two paired points");
    }
    if ys.iter().any(|y| *y >= 1.0) {
        return invalid("exponential fit needs y < 1");
    }
    let ls: Vec<f64> = ys.iter().map(|y| (1.0 - y).ln()).collect();
    let seed = linear_fit(xs, &ls);
    // parametrize by ln c so c stays positive
    let sse = |lc: f64, d: f64| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (1.0 - y - (lc + d * x).exp()).powi(2))
            .sum()
    };
    let (mut lc, mut d) = (seed.intercept, seed.slope);
    let mut cur = sse(lc, d);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // normal equations for residual e_i = (1 − y_i) − exp(lc + d x_i)
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(ys) {
            let f = (lc + d * x).exp();
            let e = 1.0 - y - f;
            let (j1, j2) = (f, f * x);
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * e;
            g2 += j2 * e;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let b11 = a11 * (1.0 + lambda);
            let b22 = a22 * (1.0 + lambda);
            let det = b11 * b22 - a12 * a12;
            let s1 = (g1 * b22 - g2 * a12) / det;
            let s2 = (b11 * g2 - a12 * g1) / det;
            let next = sse(lc + s1, d + s2);
            if next.is_finite() && next < cur {
                lc += s1;
                d += s2;
                let gain = cur - next;
                cur = next;
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-15 * cur.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(ExpFit {
        c: lc.exp(),
        d,
        rms: (cur / xs.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.0]);
        assert!((f.slope + 0.5).abs() < 1e-15 && (f.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_exponential() {
        let xs = [0.0, 0.1, 0.2, 0.3];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| 1.0 - 1e-3 * (20.0 * x).exp()).collect();
        let f = exp_fit(&xs, &ys).unwrap();
        assert!((f.c - 1e-3).abs() < 1e-12 && (f.d - 20.0).abs() < 1e-9);
    }
}
