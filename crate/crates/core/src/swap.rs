//! Entanglement swapping by homodyne detection.
//!
//! Mode 1 of the left pair and mode 0 of the right pair meet on a balanced
//! beam splitter. The position quadrature of the first output and the
//! momentum quadrature of the second are measured; the outer modes keep the
//! swapped state. Success means `|x0| ≤ δ`.

use crate::bilinear::{join, pair_functional, scalar_join, KernelTerm};
use crate::density::Density1D;
use crate::error::{invalid, Error, Result};
use crate::integrals::{moment_sym, RotationTable};
use crate::phase_space::{beam_splitter, reduced_state, tensor, PhaseSpaceState};
use ndarray::{Array2, Ix2};
use crate::target::{cat_amplitudes, qubit_fidelity, qubit_projection};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI};

/// Acceptance probabilities below this are treated as unreachable.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SwapOutcome {
    pub x0: f64,
    pub p0: f64,
    pub accepted: bool,
    /// Normalized outer two-mode state, present when accepted.
    pub state: Option<PhaseSpaceState>,
}

fn check_pair(left: &PhaseSpaceState, right: &PhaseSpaceState) -> Result<()> {
    if left.mode_count() != 2 || right.mode_count() != 2 {
        return invalid("swapping needs two two-mode states");
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return invalid(format!("acceptance half-width {delta} must be positive"));
    }
    Ok(())
}

/// The two interfered modes after the beam splitter, outer modes traced out.
///
/// Slow reference path; the outcome densities below avoid building it.
pub fn central_pair(left: &PhaseSpaceState, right: &PhaseSpaceState) -> Result<PhaseSpaceState> {
    check_pair(left, right)?;
    let b = reduced_state(&left.normalized(), 1)?;
    let a = reduced_state(&right.normalized(), 0)?;
    beam_splitter(&tensor(&b, &a), 0, 1, FRAC_PI_4)
}

struct Central {
    b: Array2<f64>,
    a: Array2<f64>,
    d: usize,
    rot: RotationTable,
    full: Vec<f64>,
}

impl Central {
    fn new(left: &PhaseSpaceState, right: &PhaseSpaceState) -> Result<Self> {
        check_pair(left, right)?;
        let as2 = |w: PhaseSpaceState| {
            w.into_coeffs()
                .into_dimensionality::<Ix2>()
                .expect("one-mode state")
        };
        let b = as2(reduced_state(&left.normalized(), 1)?);
        let a = as2(reduced_state(&right.normalized(), 0)?);
        let d = b.nrows().max(b.ncols()).max(a.nrows()).max(a.ncols());
        Ok(Central {
            b,
            a,
            d,
            rot: RotationTable::new(FRAC_PI_4, d - 1, d - 1),
            full: (0..2 * d).map(|k| moment_sym(k, f64::INFINITY)).collect(),
        })
    }

    fn unit(&self, q: usize) -> Vec<f64> {
        let mut e = vec![0.0; 2 * self.d];
        e[q] = 1.0;
        e
    }

    fn eval(&self, fxu: &[f64], fxv: &[f64], fpu: &[f64], fpv: &[f64]) -> f64 {
        let t = [KernelTerm {
            weight: 1.0,
            kx: pair_functional(&self.rot, self.d, self.d, fxu, fxv),
            kp: pair_functional(&self.rot, self.d, self.d, fpu, fpv),
        }];
        scalar_join(&self.b, &self.a, &t)
    }

    fn x_density(&self) -> Density1D {
        let kp = &self.full;
        Density1D::new((0..2 * self.d - 1).map(|q| self.eval(&self.unit(q), &self.full, kp, kp)).collect())
    }

    fn p_density(&self, x0: f64) -> Density1D {
        let px = point_functional(2 * self.d, x0);
        Density1D::new(
            (0..2 * self.d - 1)
                .map(|q| self.eval(&px, &self.full, &self.full, &self.unit(q)))
                .collect(),
        )
    }
}

/// Density of the position outcome `x0`.
pub fn x_density(left: &PhaseSpaceState, right: &PhaseSpaceState) -> Result<Density1D> {
    Ok(Central::new(left, right)?.x_density())
}

/// Density of `x0` at the given value, and the normalized density of `p0` given it.
pub fn p_density_given_x(left: &PhaseSpaceState, right: &PhaseSpaceState, x0: f64) -> Result<(f64, Density1D)> {
    let c = Central::new(left, right)?;
    let joint = c.p_density(x0);
    let dx = joint.integral();
    Ok((dx, Density1D::new(joint.coeffs().iter().map(|v| v / dx).collect())))
}

/// Probability that `|x0| ≤ δ`.
pub fn success_probability(left: &PhaseSpaceState, right: &PhaseSpaceState, delta: f64) -> Result<f64> {
    if delta < 0.0 || delta.is_nan() {
        return invalid(format!("acceptance half-width {delta} must be non-negative"));
    }
    if delta == 0.0 {
        check_pair(left, right)?;
        return Ok(0.0);
    }
    let d = x_density(left, right)?;
    Ok((d.mass(-delta, delta) / d.integral()).clamp(0.0, 1.0))
}

fn point_functional(n: usize, t: f64) -> Vec<f64> {
    let g = (-t * t).exp();
    (0..n).map(|k| t.powi(k as i32) * g).collect()
}

/// Outer state conditioned on the outcomes `(x0, p0)`, with their joint density.
pub fn conditional_state(
    left: &PhaseSpaceState,
    right: &PhaseSpaceState,
    x0: f64,
    p0: f64,
) -> Result<(f64, PhaseSpaceState)> {
    check_pair(left, right)?;
    let l = left.normalized();
    let r = right.normalized();
    let (ls, rs) = (l.coeffs().shape().to_vec(), r.coeffs().shape().to_vec());
    let d = ls[2].max(ls[3]).max(rs[0]).max(rs[1]);
    let rot = RotationTable::new(FRAC_PI_4, d - 1, d - 1);
    let full: Vec<f64> = (0..2 * d).map(|k| moment_sym(k, f64::INFINITY)).collect();
    let terms = [KernelTerm {
        weight: 1.0,
        kx: pair_functional(&rot, d, d, &point_functional(2 * d, x0), &full),
        kp: pair_functional(&rot, d, d, &full, &point_functional(2 * d, p0)),
    }];
    let w = join(l.coeffs(), r.coeffs(), &terms);
    let density = crate::phase_space::integrate_all(&w.view());
    if !(density > 0.0) {
        return Err(Error::Infeasible(format!("outcome ({x0}, {p0}) has zero density")));
    }
    Ok((density, PhaseSpaceState::from_coeffs(w)?.normalized()))
}

/// One swap attempt: `x0` from its marginal, `p0` from its conditional.
pub fn swap_once<R: Rng + ?Sized>(
    left: &PhaseSpaceState,
    right: &PhaseSpaceState,
    delta: f64,
    rng: &mut R,
) -> Result<SwapOutcome> {
    check_delta(delta)?;
    let c = Central::new(left, right)?;
    let x0 = c.x_density().sample(rng, None)?;
    let p0 = c.p_density(x0).sample(rng, None)?;
    let accepted = x0.abs() <= delta;
    let state = if accepted {
        Some(conditional_state(left, right, x0, p0)?.1)
    } else {
        None
    };
    Ok(SwapOutcome { x0, p0, accepted, state })
}

/// An accepted outcome, drawn from the `x0` marginal restricted to `[−δ, δ]`.
///
/// Same distribution as repeating [`swap_once`] until it succeeds.
pub fn swap_accepted<R: Rng + ?Sized>(
    left: &PhaseSpaceState,
    right: &PhaseSpaceState,
    delta: f64,
    rng: &mut R,
) -> Result<(f64, f64, PhaseSpaceState)> {
    check_delta(delta)?;
    let c = Central::new(left, right)?;
    let xd = c.x_density();
    if xd.mass(-delta, delta) / xd.integral() < MIN_ACCEPTANCE {
        return Err(Error::Infeasible(format!(
            "acceptance probability for delta = {delta} is below {MIN_ACCEPTANCE}"
        )));
    }
    let x0 = xd.sample(rng, Some((-delta, delta)))?;
    let p0 = c.p_density(x0).sample(rng, None)?;
    let (_, st) = conditional_state(left, right, x0, p0)?;
    Ok((x0, p0, st))
}

type Mat2 = [[C64; 2]; 2];

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `2 cosh(√2 x0 (μ − μ̃)) e^{−(μ − μ̃)²/2}`.
pub fn kappa(m: u32, x0: f64) -> f64 {
    let (mu, mt) = cat_amplitudes(m);
    let g = mu - mt;
    2.0 * (2f64.sqrt() * x0 * g).cosh() * (-0.5 * g * g).exp()
}

/// Approximate projection of the interfered pair onto the outcome, in the
/// `{|0_m⟩, |1_m⟩}` basis, with `√2 μ_m p0` replaced by `θ`.
pub fn transfer(m: u32, x0: f64, theta: f64) -> Mat2 {
    let c = C64::new(theta.cos(), 0.0);
    let s = C64::new(0.0, -0.5 * kappa(m, x0) * theta.sin());
    [[c, s], [s, c]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapRecord {
    pub level: u32,
    pub x0: f64,
    pub p0: f64,
    pub theta: f64,
}

/// Target coefficients `Σ M[k][l] |k_m l_m⟩` and the outcomes that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapTargetCoeffs {
    pub m: u32,
    pub matrix: Mat2,
    pub history: Vec<SwapRecord>,
}

impl SwapTargetCoeffs {
    /// The unswapped pair `(|0 1⟩ + |1 0⟩)/√2`.
    pub fn psi(m: u32) -> Self {
        let z = C64::new(0.0, 0.0);
        let h = C64::new(0.5f64.sqrt(), 0.0);
        SwapTargetCoeffs {
            m,
            matrix: [[z, h], [h, z]],
            history: Vec::new(),
        }
    }

    /// Candidate target after swapping `self` (left) with `right` at angle `θ`.
    pub fn fold_matrix(&self, right: &Self, x0: f64, theta: f64) -> Mat2 {
        matmul(&matmul(&self.matrix, &transfer(self.m, x0, theta)), &right.matrix)
    }

    pub fn combine(&self, right: &Self, rec: SwapRecord) -> Self {
        let mut mat = self.fold_matrix(right, rec.x0, rec.theta);
        let n: f64 = mat.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in mat.iter_mut().flatten() {
            *c /= n;
        }
        let mut history = self.history.clone();
        history.extend(right.history.iter().copied());
        history.push(rec);
        SwapTargetCoeffs {
            m: self.m,
            matrix: mat,
            history,
        }
    }
}

/// Purity of either reduced state of `Σ M[k][l] |k l⟩`.
pub fn reduced_purity(matrix: &Mat2) -> f64 {
    let n: f64 = matrix.iter().flatten().map(|c| c.norm_sqr()).sum();
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            rho[i][j] = (matrix[i][0] * matrix[j][0].conj() + matrix[i][1] * matrix[j][1].conj()) / n;
        }
    }
    rho.iter().flatten().map(|c| c.norm_sqr()).sum()
}

/// Maximize `f` on `[0, 2π)`: 720-point scan, then golden section to 1e-6.
pub fn maximize_angle<F: Fn(f64) -> f64>(f: F, points: usize) -> (f64, f64) {
    let step = 2.0 * PI / points as f64;
    let (mut best_t, mut best_v) = (0.0, f64::NEG_INFINITY);
    for k in 0..points {
        let t = k as f64 * step;
        let v = f(t);
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_t - step, best_t + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-6 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v >= best_v {
        (t.rem_euclid(2.0 * PI), v)
    } else {
        (best_t, best_v)
    }
}

/// Default scan size for the angle search.
pub const ANGLE_GRID: usize = 720;

/// `|⟨Φ|ρ|Φ⟩|²` for a fixed target.
pub fn coeffs_fidelity(state: &PhaseSpaceState, coeffs: &SwapTargetCoeffs) -> Result<f64> {
    let r = qubit_projection(state, coeffs.m)?;
    Ok(qubit_fidelity(&r, &coeffs.matrix).powi(2))
}

/// Best `|⟨Φ(θ)|ρ|Φ(θ)⟩|²` over the target family folded from `left`, `right`
/// and the outcome `x0`. Returns the fidelity and the folded target at the optimum.
pub fn target_fidelity(
    state: &PhaseSpaceState,
    left: &SwapTargetCoeffs,
    right: &SwapTargetCoeffs,
    level: u32,
    x0: f64,
    p0: f64,
) -> Result<(f64, SwapTargetCoeffs)> {
    if left.m != right.m {
        return invalid("swap targets must share the growth level");
    }
    let r = qubit_projection(state, left.m)?;
    let (theta, f) = maximize_angle(|t| qubit_fidelity(&r, &left.fold_matrix(right, x0, t)).powi(2), ANGLE_GRID);
    let rec = SwapRecord { level, x0, p0, theta };
    Ok((f, left.combine(right, rec)))
}

/// Fidelity after one swap of two `PsiM` copies at a fixed outcome.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub x0: f64,
    pub p0: f64,
    pub fidelity: f64,
    pub theta: f64,
    /// Fidelity at the fixed correction angle `√2 μ_m p0`.
    pub fidelity_fixed: f64,
    /// Joint density of `(x0, p0)`.
    pub joint_density: f64,
    /// Density of `p0` given `x0`.
    pub conditional_density: f64,
}

/// Correction angle `√2 μ_m p0` before optimization.
pub fn fixed_angle(m: u32, p0: f64) -> f64 {
    std::f64::consts::SQRT_2 * cat_amplitudes(m).0 * p0
}

pub fn sweep_p0(left: &PhaseSpaceState, right: &PhaseSpaceState, m: u32, x0: f64, p0s: &[f64]) -> Result<Vec<SweepPoint>> {
    let (_, pd) = p_density_given_x(left, right, x0)?;
    let t = SwapTargetCoeffs::psi(m);
    p0s.par_iter()
        .map(|&p0| {
            let (joint, st) = conditional_state(left, right, x0, p0)?;
            let (f, c) = target_fidelity(&st, &t, &t, 1, x0, p0)?;
            let r = qubit_projection(&st, m)?;
            let fixed = qubit_fidelity(&r, &t.fold_matrix(&t, x0, fixed_angle(m, p0))).powi(2);
            Ok(SweepPoint {
                x0,
                p0,
                fidelity: f,
                theta: c.history[0].theta,
                fidelity_fixed: fixed,
                joint_density: joint,
                conditional_density: pd.eval(p0),
            })
        })
        .collect()
}

/// One sample of a nested swap.
#[derive(Debug, Clone)]
pub struct NestedSample {
    pub state: PhaseSpaceState,
    pub target: SwapTargetCoeffs,
    pub fidelity: f64,
    /// Acceptance probability per swap level (index 0 is level 1), averaged
    /// over the swaps performed at that level.
    pub level_acceptance: Vec<f64>,
}

/// Swap `2^n` independent copies of `segment` pairwise, level by level.
pub fn nested_swap<R: Rng + ?Sized>(
    segment: &PhaseSpaceState,
    n: u32,
    delta: f64,
    m: u32,
    rng: &mut R,
) -> Result<NestedSample> {
    if n > 4 {
        return invalid(format!("at most 4 swap levels are supported, got {n}"));
    }
    let leaves = vec![segment.clone(); 1 << n];
    nested_swap_leaves(&leaves, delta, m, rng)
}

/// Swap the given segments pairwise, level by level; the count must be a power of two.
pub fn nested_swap_leaves<R: Rng + ?Sized>(
    leaves: &[PhaseSpaceState],
    delta: f64,
    m: u32,
    rng: &mut R,
) -> Result<NestedSample> {
    let k = leaves.len();
    if k == 0 || !k.is_power_of_two() || k > 16 {
        return invalid(format!("segment count {k} must be a power of two up to 16"));
    }
    if leaves.iter().any(|s| s.mode_count() != 2) {
        return invalid("segments are two-mode states");
    }
    if k == 1 {
        let target = SwapTargetCoeffs::psi(m);
        let fidelity = coeffs_fidelity(&leaves[0], &target)?;
        return Ok(NestedSample {
            state: leaves[0].normalized(),
            target,
            fidelity,
            level_acceptance: Vec::new(),
        });
    }
    check_delta(delta)?;
    let level = k.trailing_zeros();
    let left = nested_swap_leaves(&leaves[..k / 2], delta, m, rng)?;
    let right = nested_swap_leaves(&leaves[k / 2..], delta, m, rng)?;
    let p = success_probability(&left.state, &right.state, delta)?;
    let (x0, p0, st) = swap_accepted(&left.state, &right.state, delta, rng)?;
    let (fidelity, target) = target_fidelity(&st, &left.target, &right.target, level, x0, p0)?;
    let mut level_acceptance: Vec<f64> = left
        .level_acceptance
        .iter()
        .zip(&right.level_acceptance)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    level_acceptance.push(p);
    Ok(NestedSample {
        state: st,
        target,
        fidelity,
        level_acceptance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub fidelity: f64,
    pub outcomes: Vec<SwapRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub m: u32,
    pub n: u32,
    pub delta: f64,
    pub mean_f: f64,
    pub sem: f64,
    /// Acceptance probability of the first swap level on the input segments.
    pub p_success: f64,
    /// Mean acceptance probability per level.
    pub level_acceptance: Vec<f64>,
    pub records: Vec<SampleRecord>,
}

/// Mean and standard error of the fidelity over `samples` accepted runs.
///
/// Each sample uses its own stream seeded from `seed` and its index, so the
/// result does not depend on the thread count.
pub fn mc_average_fidelity(
    segment: &PhaseSpaceState,
    n: u32,
    delta: f64,
    m: u32,
    samples: usize,
    seed: u64,
) -> Result<McSummary> {
    if n > 4 {
        return invalid(format!("at most 4 swap levels are supported, got {n}"));
    }
    mc_average_leaves(&vec![segment.clone(); 1 << n], delta, m, samples, seed)
}

/// As [`mc_average_fidelity`] with explicit segments.
pub fn mc_average_leaves(
    leaves: &[PhaseSpaceState],
    delta: f64,
    m: u32,
    samples: usize,
    seed: u64,
) -> Result<McSummary> {
    if samples < 2 {
        return invalid("need at least two samples");
    }
    check_delta(delta)?;
    if leaves.is_empty() || leaves.iter().any(|s| s.mode_count() != 2) {
        return invalid("segments are two-mode states");
    }
    let n = leaves.len().trailing_zeros();
    let p_success = if leaves.len() > 1 {
        success_probability(&leaves[0], &leaves[1], delta)?
    } else {
        1.0
    };
    if p_success < MIN_ACCEPTANCE {
        return Err(Error::Infeasible(format!(
            "acceptance probability {p_success:.3e} is below {MIN_ACCEPTANCE}"
        )));
    }
    let runs: Vec<(SampleRecord, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let s = nested_swap_leaves(leaves, delta, m, &mut rng)?;
            Ok((
                SampleRecord {
                    sample: k,
                    fidelity: s.fidelity,
                    outcomes: s.target.history,
                },
                s.level_acceptance,
            ))
        })
        .collect::<Result<_>>()?;
    let fs: Vec<f64> = runs.iter().map(|r| r.0.fidelity).collect();
    let (mean_f, sem) = mean_sem(&fs);
    let level_acceptance = (0..n as usize)
        .map(|l| runs.iter().map(|r| r.1[l]).sum::<f64>() / samples as f64)
        .collect();
    Ok(McSummary {
        m,
        n,
        delta,
        mean_f,
        sem,
        p_success,
        level_acceptance,
        records: runs.into_iter().map(|r| r.0).collect(),
    })
}

/// Mean and standard error of the mean, by pairwise summation.
pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    fn psum(v: &[f64]) -> f64 {
        if v.len() <= 8 {
            v.iter().sum()
        } else {
            let (a, b) = v.split_at(v.len() / 2);
            psum(a) + psum(b)
        }
    }
    let n = xs.len() as f64;
    let mean = psum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = psum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}
