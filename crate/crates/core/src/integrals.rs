//! Gaussian moment integrals.
//!
//! `I(n, t) = ∫_{-t}^{t} x^n e^{-x²} dx` and `J(n, a, b) = ∫ x^n e^{-a x² + b x} dx`.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Γ((n+1)/2) for n ≥ 0, by exact half-integer recursion.
pub fn gamma_half(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { PI.sqrt() } else { 1.0 };
    let mut k = n % 2;
    while k < n {
        g *= (k as f64 + 1.0) / 2.0;
        k += 2;
    }
    g
}

/// Lower incomplete gamma γ(a, z) for a > 0, z ≥ 0.
pub fn lower_gamma(a: f64, z: f64, full: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = 1.0;
        loop {
            term *= z / (a + k);
            sum += term;
            if term < sum * 1e-17 || k > 2000.0 {
                break;
            }
            k += 1.0;
        }
        sum * (a * z.ln() - z).exp()
    } else {
        full - upper_gamma_cf(a, z)
    }
}

// Γ(a, z) by modified Lentz continued fraction; valid for z > a + 1.
fn upper_gamma_cf(a: f64, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..5000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * z.ln() - z).exp() * h
}

/// `I(n, t)`; `t = f64::INFINITY` gives the full-line moment.
pub fn moment_sym(n: usize, t: f64) -> f64 {
    if n % 2 == 1 || t <= 0.0 {
        return 0.0;
    }
    let full = gamma_half(n);
    if t.is_infinite() {
        return full;
    }
    lower_gamma((n as f64 + 1.0) / 2.0, t * t, full)
}

/// ∫_0^t x^n e^{-x²} dx for any real t (including ±∞).
pub fn moment_half(n: usize, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let full = gamma_half(n);
    let g = if t.is_infinite() {
        full
    } else {
        lower_gamma((n as f64 + 1.0) / 2.0, t * t, full)
    };
    let v = 0.5 * g;
    if t < 0.0 && n % 2 == 0 {
        -v
    } else {
        v
    }
}

/// ∫_lo^hi x^n e^{-x²} dx.
pub fn moment_interval(n: usize, lo: f64, hi: f64) -> f64 {
    moment_half(n, hi) - moment_half(n, lo)
}

/// Table of `I(k, t)` for k = 0..=n_max.
pub fn moments_sym(n_max: usize, t: f64) -> Vec<f64> {
    (0..=n_max).map(|k| moment_sym(k, t)).collect()
}

/// Table of `J(k, a, b)` for k = 0..=n_max.
pub fn moments_shifted(n_max: usize, a: f64, b: Complex64) -> Vec<Complex64> {
    assert!(a > 0.0, "J requires a > 0");
    let mut out = Vec::with_capacity(n_max + 1);
    let j0 = (PI / a).sqrt() * (b * b / (4.0 * a)).exp();
    out.push(j0);
    if n_max >= 1 {
        out.push(b / (2.0 * a) * j0);
    }
    for k in 2..=n_max {
        let v = (b * out[k - 1] + (k as f64 - 1.0) * out[k - 2]) / (2.0 * a);
        out.push(v);
    }
    out
}

/// Binomial coefficients C(n, k) for n ≤ n_max.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<f64>>,
}

impl Binomials {
    pub fn new(n_max: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k]
    }
}

/// Expansion of rotated monomials: `(c·u + s·v)^a (c·v − s·u)^b = Σ_k T[a][b][k] u^k v^{a+b−k}`.
#[derive(Debug, Clone)]
pub struct RotationTable {
    pub max_a: usize,
    pub max_b: usize,
    data: Vec<Vec<f64>>,
}

impl RotationTable {
    pub fn new(theta: f64, max_a: usize, max_b: usize) -> Self {
        if theta == std::f64::consts::FRAC_PI_4 && max_a + max_b <= 120 {
            return Self::balanced(max_a, max_b);
        }
        let (s, c) = theta.sin_cos();
        let bin = Binomials::new(max_a.max(max_b));
        let mut data = Vec::with_capacity((max_a + 1) * (max_b + 1));
        for a in 0..=max_a {
            for b in 0..=max_b {
                let mut row = vec![0.0; a + b + 1];
                for al in 0..=a {
                    let fa = bin.get(a, al) * c.powi(al as i32) * s.powi((a - al) as i32);
                    if fa == 0.0 {
                        continue;
                    }
                    for be in 0..=b {
                        let fb = bin.get(b, be) * c.powi(be as i32) * (-s).powi((b - be) as i32);
                        row[al + b - be] += fa * fb;
                    }
                }
                data.push(row);
            }
        }
        RotationTable { max_a, max_b, data }
    }

    // θ = π/4: integer sums scaled by 2^{-(a+b)/2}, exact before the final rounding.
    fn balanced(max_a: usize, max_b: usize) -> Self {
        let n = max_a.max(max_b);
        let mut bin = vec![vec![0i128; n + 1]; n + 1];
        for i in 0..=n {
            bin[i][0] = 1;
            for k in 1..=i {
                bin[i][k] = bin[i - 1][k - 1] + if k < i { bin[i - 1][k] } else { 0 };
            }
        }
        let mut data = Vec::with_capacity((max_a + 1) * (max_b + 1));
        for a in 0..=max_a {
            for b in 0..=max_b {
                let mut row = vec![0i128; a + b + 1];
                for al in 0..=a {
                    for be in 0..=b {
                        let t = bin[a][al] * bin[b][be];
                        if (b - be) % 2 == 1 {
                            row[al + b - be] -= t;
                        } else {
                            row[al + b - be] += t;
                        }
                    }
                }
                let scale = 0.5f64.powf((a + b) as f64 / 2.0);
                data.push(row.into_iter().map(|v| v as f64 * scale).collect());
            }
        }
        RotationTable { max_a, max_b, data }
    }

    /// Coefficients indexed by the power of `u`.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        &self.data[a * (self.max_b + 1) + b]
    }
}
