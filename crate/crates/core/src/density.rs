//! One-dimensional densities `f(x) = Σ c_n x^n e^{-x²}` and outcome sampling.

use crate::error::{invalid, Error, Result};
use crate::integrals::{moment_interval, moment_sym};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    coeffs: Vec<f64>,
}

impl Density1D {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Density1D { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut p = 0.0;
        for c in self.coeffs.iter().rev() {
            p = p * x + c;
        }
        p * (-x * x).exp()
    }

    pub fn integral(&self) -> f64 {
        self.raw_moment(0)
    }

    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * moment_interval(n, lo, hi))
            .sum()
    }

    /// `∫ x^k f(x) dx`.
    pub fn raw_moment(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * moment_sym(n + k, f64::INFINITY))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1) / self.integral()
    }

    pub fn variance(&self) -> f64 {
        let z = self.integral();
        let m = self.raw_moment(1) / z;
        self.raw_moment(2) / z - m * m
    }

    /// Draw one outcome by rejection against a Gaussian envelope, optionally
    /// restricted to `[lo, hi]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, restrict: Option<(f64, f64)>) -> Result<f64> {
        let z = self.integral();
        if !(z > 0.0) {
            return invalid("density has no mass");
        }
        if let Some((lo, hi)) = restrict {
            if !(hi > lo) || self.mass(lo, hi) / z < 1e-12 {
                return Err(Error::Infeasible(format!(
                    "restriction [{lo}, {hi}] carries no probability mass"
                )));
            }
        }
        let env = Envelope::new(self);
        for _ in 0..100_000_000u64 {
            let g: f64 = rng.sample(StandardNormal);
            let x = env.center + env.sigma * g;
            let u: f64 = rng.gen();
            if let Some((lo, hi)) = restrict {
                if x < lo || x > hi {
                    continue;
                }
            }
            if u * env.bound * (-0.5 * g * g).exp() <= self.eval(x) {
                return Ok(x);
            }
        }
        Err(Error::Infeasible("rejection sampler did not converge".into()))
    }
}

struct Envelope {
    center: f64,
    sigma: f64,
    bound: f64,
}

impl Envelope {
    fn new(d: &Density1D) -> Self {
        let center = d.mean();
        let var = (1.5 * d.variance()).max(0.6);
        let sigma = var.sqrt();
        let half = (10.0 * sigma).max(12.0);
        let n = 8000;
        let mut best = 0.0f64;
        for k in 0..=n {
            let x = center - half + 2.0 * half * k as f64 / n as f64;
            let t = (x - center) / sigma;
            let r = d.eval(x) / (-0.5 * t * t).exp();
            if r.is_finite() {
                best = best.max(r);
            }
        }
        Envelope {
            center,
            sigma,
            bound: 1.1 * best,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn vacuum_moments() {
        let d = Density1D::new(vec![1.0 / std::f64::consts::PI.sqrt()]);
        assert!((d.integral() - 1.0).abs() < 1e-14);
        assert!((d.variance() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn restricted_samples_stay_inside() {
        let d = Density1D::new(vec![0.0, 0.0, 2.0 / std::f64::consts::PI.sqrt()]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = d.sample(&mut rng, Some((-0.3, 0.3))).unwrap();
            assert!(x.abs() <= 0.3);
        }
    }
}
