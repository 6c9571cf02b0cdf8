//! Iterated cat-state growth with per-level acceptance intervals.
//!
//! Growth states are even in both x and p, so the fast engine stores only
//! even powers: `EvenMode.c[a][b]` multiplies `x^{2a} p^{2b}`.

use crate::error::{invalid, Error, Result};
use crate::integrals::{moment_sym, RotationTable};
use crate::phase_space::{beam_splitter, measure_x_interval, single_photon, tensor, PhaseSpaceState};
use crate::target::{mode_functional, TargetState};
use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_4;

pub const MAX_M: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSchedule {
    pub m: u32,
    pub deltas: Vec<f64>,
    pub probs: Vec<f64>,
}

impl GrowthSchedule {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() || deltas.len() > MAX_M as usize {
            return invalid(format!("schedule needs 1..={MAX_M} levels, got {}", deltas.len()));
        }
        if deltas.iter().any(|d| !(*d > 0.0)) {
            return invalid("acceptance half-widths must be positive");
        }
        if deltas.windows(2).any(|w| w[1] < w[0]) {
            return invalid("acceptance half-widths must be nondecreasing");
        }
        Ok(GrowthSchedule {
            m: deltas.len() as u32,
            deltas,
            probs: Vec::new(),
        })
    }

    pub fn uniform(m: u32, delta: f64) -> Result<Self> {
        Self::new(vec![delta; m as usize])
    }
}

#[derive(Debug, Clone)]
pub struct GrowthResult {
    pub state: PhaseSpaceState,
    pub schedule: GrowthSchedule,
    pub fidelity: f64,
    pub rate: f64,
}

/// `(3/2)^{m−1} Π P_k`, in units of the single-photon input rate.
pub fn growth_rate(schedule: &GrowthSchedule) -> Result<f64> {
    rate_from_probs(&schedule.probs)
}

pub fn rate_from_probs(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return invalid("no success probabilities recorded");
    }
    Ok(1.5f64.powi(probs.len() as i32 - 1) * probs.iter().product::<f64>())
}

/// One-mode state restricted to even powers.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenMode {
    pub c: Array2<f64>,
}

impl EvenMode {
    pub fn from_state(w: &PhaseSpaceState) -> Option<Self> {
        if w.mode_count() != 1 {
            return None;
        }
        let co = w.coeffs();
        let co = co.view().into_dimensionality::<ndarray::Ix2>().ok()?;
        let (dx, dp) = co.dim();
        for ((i, j), v) in co.indexed_iter() {
            if (i % 2 == 1 || j % 2 == 1) && v.abs() > 1e-13 {
                return None;
            }
        }
        let c = Array2::from_shape_fn(((dx + 1) / 2, (dp + 1) / 2), |(a, b)| co[[2 * a, 2 * b]]);
        Some(EvenMode { c })
    }

    pub fn to_state(&self) -> PhaseSpaceState {
        let (da, db) = self.c.dim();
        let full = Array2::from_shape_fn((2 * da - 1, 2 * db - 1), |(i, j)| {
            if i % 2 == 0 && j % 2 == 0 {
                self.c[[i / 2, j / 2]]
            } else {
                0.0
            }
        });
        PhaseSpaceState::from_matrix(full).expect("finite coefficients")
    }

    pub fn integral(&self) -> f64 {
        let mut s = 0.0;
        for ((a, b), v) in self.c.indexed_iter() {
            s += v * moment_sym(2 * a, f64::INFINITY) * moment_sym(2 * b, f64::INFINITY);
        }
        s
    }

    /// Σ c ⊙ z over the overlapping index range.
    pub fn dot(&self, z: &Array2<f64>) -> f64 {
        let mut s = 0.0;
        for ((a, b), v) in self.c.indexed_iter() {
            if a < z.nrows() && b < z.ncols() {
                s += v * z[[a, b]];
            }
        }
        s
    }
}

/// `T[a][a'][κ] = Σ_l Rot(2a, 2a')[2κ] f(2a + 2a' − 2κ)`.
fn transfer(rot: &RotationTable, da: usize, db: usize, f: &[f64]) -> Array3<f64> {
    let dk = da + db - 1;
    let mut t = Array3::zeros((da, db, dk));
    for a in 0..da {
        for b in 0..db {
            let row = rot.get(2 * a, 2 * b);
            for k in 0..=(a + b) {
                let l = 2 * (a + b - k);
                t[[a, b, k]] = row[2 * k] * f[l];
            }
        }
    }
    t
}

/// Interference of two even states and acceptance on one output.
#[derive(Debug, Clone)]
pub struct StepKernel {
    tx: Array3<f64>,
    tp: Array3<f64>,
}

impl StepKernel {
    pub fn new(da: usize, db: usize, delta: f64) -> Self {
        let rot = RotationTable::new(FRAC_PI_4, 2 * (da - 1), 2 * (db - 1));
        let n = 2 * (da + db);
        let fx: Vec<f64> = (0..=n).map(|k| moment_sym(k, delta)).collect();
        let fp: Vec<f64> = (0..=n).map(|k| moment_sym(k, f64::INFINITY)).collect();
        StepKernel {
            tx: transfer(&rot, da, db, &fx),
            tp: transfer(&rot, da, db, &fp),
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.tx.dim().0, self.tx.dim().1)
    }

    /// Unnormalized accepted state.
    pub fn apply(&self, wa: &EvenMode, wb: &EvenMode) -> EvenMode {
        let (da, db) = self.dims();
        let ((ax, ap), (bx, bp)) = (wa.c.dim(), wb.c.dim());
        assert!(ax <= da && ap <= da && bx <= db && bp <= db, "kernel too small");
        let dk = self.tx.dim().2;
        // U[a'][b][λ] = Σ_b' wB[a'][b'] Tp[b][b'][λ]
        let mut u = Array3::<f64>::zeros((bx, ap, dk));
        for a2 in 0..bx {
            for b2 in 0..bp {
                let w = wb.c[[a2, b2]];
                if w == 0.0 {
                    continue;
                }
                for b in 0..ap {
                    for l in 0..dk {
                        u[[a2, b, l]] += w * self.tp[[b, b2, l]];
                    }
                }
            }
        }
        // M1[a][a'][λ] = Σ_b wA[a][b] U[a'][b][λ]
        let mut m1 = Array3::<f64>::zeros((ax, bx, dk));
        for a in 0..ax {
            for b in 0..ap {
                let w = wa.c[[a, b]];
                if w == 0.0 {
                    continue;
                }
                for a2 in 0..bx {
                    for l in 0..dk {
                        m1[[a, a2, l]] += w * u[[a2, b, l]];
                    }
                }
            }
        }
        let mut out = Array2::<f64>::zeros((dk, dk));
        for a in 0..ax {
            for a2 in 0..bx {
                for k in 0..dk {
                    let t = self.tx[[a, a2, k]];
                    if t == 0.0 {
                        continue;
                    }
                    for l in 0..dk {
                        out[[k, l]] += t * m1[[a, a2, l]];
                    }
                }
            }
        }
        EvenMode { c: out }
    }

    /// Bilinear forms for the final level of identical inputs:
    /// returns `(G_F, G_P)` with `value = vec(w)ᵀ G vec(w)`.
    pub fn final_forms(&self, z: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let (d, _) = self.dims();
        let dk = self.tx.dim().2;
        let ints: Vec<f64> = (0..dk).map(|k| moment_sym(2 * k, f64::INFINITY)).collect();
        // Tz[a][a'][λ] = Σ_κ Tx[a][a'][κ] Z[κ][λ]
        let mut tz = Array3::<f64>::zeros((d, d, dk));
        let mut tint = Array2::<f64>::zeros((d, d));
        for a in 0..d {
            for a2 in 0..d {
                for k in 0..dk {
                    let t = self.tx[[a, a2, k]];
                    if t == 0.0 {
                        continue;
                    }
                    tint[[a, a2]] += t * ints[k];
                    for l in 0..dk.min(z.ncols()) {
                        if k < z.nrows() {
                            tz[[a, a2, l]] += t * z[[k, l]];
                        }
                    }
                }
            }
        }
        let mut gf = Array2::zeros((d * d, d * d));
        let mut gp = Array2::zeros((d * d, d * d));
        for a in 0..d {
            for b in 0..d {
                for a2 in 0..d {
                    for b2 in 0..d {
                        let mut sf = 0.0;
                        let mut sp = 0.0;
                        for l in 0..dk {
                            let tp = self.tp[[b, b2, l]];
                            sf += tz[[a, a2, l]] * tp;
                            sp += tint[[a, a2]] * tp * ints[l];
                        }
                        gf[[a * d + b, a2 * d + b2]] = sf;
                        gp[[a * d + b, a2 * d + b2]] = sp;
                    }
                }
            }
        }
        (gf, gp)
    }
}

/// Even-index overlap matrix `Z[κ][λ]` of a one-mode target: `F = Σ c[κ][λ] Z[κ][λ]`.
pub fn target_matrix(t: &TargetState, d: usize) -> Result<Array2<f64>> {
    if t.mode_count() != 1 {
        return invalid("growth targets are single-mode");
    }
    let terms = t.terms();
    let mut z = Array2::<f64>::zeros((d, d));
    for (cr, fr) in &terms.terms {
        for (cs, fs) in &terms.terms {
            let f = mode_functional(&fr[0], &fs[0], 2 * d - 1, 2 * d - 1);
            let pre = cr.conj() * cs;
            for a in 0..d {
                for b in 0..d {
                    z[[a, b]] += (pre * f[[2 * a, 2 * b]]).re;
                }
            }
        }
    }
    let n = terms.norm_sqr();
    Ok(z / n)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return invalid(format!("acceptance half-width {delta} must be positive"));
    }
    Ok(())
}

/// Combine two one-mode states on a balanced beam splitter and accept `|x| ≤ Δ` on one output.
pub fn grow_step_pair(a: &PhaseSpaceState, b: &PhaseSpaceState, delta: f64) -> Result<(f64, PhaseSpaceState)> {
    check_delta(delta)?;
    if a.mode_count() != 1 || b.mode_count() != 1 {
        return invalid("growth inputs are one-mode states");
    }
    match (EvenMode::from_state(&a.normalized()), EvenMode::from_state(&b.normalized())) {
        (Some(ea), Some(eb)) => {
            let (p, out) = grow_even(&ea, &eb, delta);
            Ok((p, out.to_state().normalized()))
        }
        _ => grow_step_generic(a, b, delta),
    }
}

pub fn grow_step(input: &PhaseSpaceState, delta: f64) -> Result<(f64, PhaseSpaceState)> {
    grow_step_pair(input, input, delta)
}

/// Same step through the general tensor operations.
pub fn grow_step_generic(a: &PhaseSpaceState, b: &PhaseSpaceState, delta: f64) -> Result<(f64, PhaseSpaceState)> {
    check_delta(delta)?;
    let joint = tensor(&a.normalized(), &b.normalized());
    let mixed = beam_splitter(&joint, 0, 1, FRAC_PI_4)?;
    measure_x_interval(&mixed, 1, delta)
}

/// Returns the acceptance probability and the normalized output.
pub fn grow_even(a: &EvenMode, b: &EvenMode, delta: f64) -> (f64, EvenMode) {
    let da = a.c.nrows().max(a.c.ncols());
    let db = b.c.nrows().max(b.c.ncols());
    let k = StepKernel::new(da, db, delta);
    let out = k.apply(a, b);
    let p = out.integral();
    (p, EvenMode { c: out.c / p })
}

pub fn grow_schedule(input: &PhaseSpaceState, schedule: &GrowthSchedule) -> Result<GrowthResult> {
    let sched = GrowthSchedule::new(schedule.deltas.clone())?;
    let mut cur = input.normalized();
    let mut probs = Vec::with_capacity(sched.deltas.len());
    for &d in &sched.deltas {
        let (p, out) = grow_step(&cur, d)?;
        probs.push(p);
        cur = out;
    }
    let target = TargetState::SqueezedSingleCat { m: sched.m };
    let fidelity = crate::target::overlap(&cur, &target)?;
    let rate = rate_from_probs(&probs)?;
    Ok(GrowthResult {
        state: cur,
        schedule: GrowthSchedule { probs, ..sched },
        fidelity,
        rate,
    })
}

/// Geometric grid of `n` acceptance half-widths from `lo` to `hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        DeltaGrid {
            lo: 0.01,
            hi: 2.0,
            points: 25,
        }
    }
}

impl DeltaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let r = (self.hi / self.lo).ln() / (self.points - 1) as f64;
        (0..self.points).map(|k| self.lo * (r * k as f64).exp()).collect()
    }
}

/// One evaluated schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulePoint {
    pub deltas: Vec<f64>,
    pub probs: Vec<f64>,
    pub fidelity: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoResult {
    pub m: u32,
    /// Non-dominated points, sorted by decreasing fidelity.
    pub pareto: Vec<SchedulePoint>,
    /// Uniform-Δ schedules, sorted by increasing Δ.
    pub uniform: Vec<SchedulePoint>,
}

/// Evaluate every nondecreasing schedule on the grid; keep the Pareto set.
pub fn optimize_schedule(m: u32, fidelity_floor: f64, grid: &DeltaGrid) -> Result<ParetoResult> {
    if m == 0 || m > MAX_M {
        return invalid(format!("m must be in 1..={MAX_M}, got {m}"));
    }
    let all = evaluate_all(m, grid)?;
    let uniform: Vec<SchedulePoint> = all
        .iter()
        .filter(|p| p.deltas.windows(2).all(|w| w[0] == w[1]))
        .cloned()
        .collect();
    let mut feasible: Vec<SchedulePoint> = all.into_iter().filter(|p| p.fidelity >= fidelity_floor).collect();
    if feasible.is_empty() {
        return Err(Error::Infeasible(format!(
            "no schedule reaches fidelity {fidelity_floor} at m = {m}"
        )));
    }
    let pareto = pareto_front(&mut feasible);
    Ok(ParetoResult { m, pareto, uniform })
}

/// Non-dominated subset, sorted by decreasing fidelity.
pub fn pareto_front(points: &mut [SchedulePoint]) -> Vec<SchedulePoint> {
    points.sort_by(|a, b| {
        b.fidelity
            .partial_cmp(&a.fidelity)
            .unwrap()
            .then(b.rate.partial_cmp(&a.rate).unwrap())
    });
    let mut out: Vec<SchedulePoint> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for p in points.iter() {
        if p.rate > best {
            best = p.rate;
            out.push(p.clone());
        }
    }
    out
}

/// Every nondecreasing schedule on the grid, evaluated exactly.
pub fn evaluate_all(m: u32, grid: &DeltaGrid) -> Result<Vec<SchedulePoint>> {
    let deltas = grid.values();
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return invalid("grid must contain positive half-widths");
    }
    let photon = EvenMode::from_state(&single_photon()).expect("photon is even");
    let target = TargetState::SqueezedSingleCat { m };
    if m == 1 {
        let z = target_matrix(&target, 3)?;
        return Ok(deltas
            .iter()
            .map(|&d| {
                let (p, out) = grow_even(&photon, &photon, d);
                SchedulePoint {
                    deltas: vec![d],
                    probs: vec![p],
                    fidelity: out.dot(&z),
                    rate: p,
                }
            })
            .collect());
    }
    // Final-level forms per Δ for inputs of the level-(m−1) size.
    let din = (1usize << (m - 1)) + 1;
    let z = target_matrix(&target, 2 * din - 1)?;
    let finals: Vec<(Array2<f64>, Array2<f64>)> = deltas
        .par_iter()
        .map(|&d| StepKernel::new(din, din, d).final_forms(&z))
        .collect();
    // Kernels for intermediate levels, indexed [level][Δ].
    let mut kernels: Vec<Vec<StepKernel>> = Vec::new();
    for lvl in 1..m {
        let d_in = (1usize << (lvl - 1)) + 1;
        kernels.push(deltas.iter().map(|&d| StepKernel::new(d_in, d_in, d)).collect());
    }
    let ctx = TreeCtx {
        m: m as usize,
        deltas: &deltas,
        kernels: &kernels,
        finals: &finals,
    };
    let out: Vec<Vec<SchedulePoint>> = (0..deltas.len())
        .into_par_iter()
        .map(|i0| {
            let mut acc = Vec::new();
            let (p, st) = {
                let raw = kernels[0][i0].apply(&photon, &photon);
                let p = raw.integral();
                (p, EvenMode { c: raw.c / p })
            };
            let mut path = vec![i0];
            let mut probs = vec![p];
            ctx.descend(&st, &mut path, &mut probs, &mut acc);
            acc
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

struct TreeCtx<'a> {
    m: usize,
    deltas: &'a [f64],
    kernels: &'a [Vec<StepKernel>],
    finals: &'a [(Array2<f64>, Array2<f64>)],
}

impl TreeCtx<'_> {
    fn descend(&self, st: &EvenMode, path: &mut Vec<usize>, probs: &mut Vec<f64>, acc: &mut Vec<SchedulePoint>) {
        let lvl = path.len();
        let start = *path.last().unwrap();
        if lvl == self.m - 1 {
            let d = self.finals[0].0.nrows();
            let side = (d as f64).sqrt().round() as usize;
            let mut v = vec![0.0; d];
            for ((a, b), c) in st.c.indexed_iter() {
                v[a * side + b] = *c;
            }
            for i in start..self.deltas.len() {
                let (gf, gp) = &self.finals[i];
                let f = quad_form(gf, &v);
                let p = quad_form(gp, &v);
                let mut pr = probs.clone();
                pr.push(p);
                let mut ds: Vec<f64> = path.iter().map(|&k| self.deltas[k]).collect();
                ds.push(self.deltas[i]);
                let rate = rate_from_probs(&pr).unwrap();
                acc.push(SchedulePoint {
                    deltas: ds,
                    probs: pr,
                    fidelity: f / p,
                    rate,
                });
            }
            return;
        }
        for i in start..self.deltas.len() {
            let raw = self.kernels[lvl][i].apply(st, st);
            let p = raw.integral();
            let next = EvenMode { c: raw.c / p };
            path.push(i);
            probs.push(p);
            self.descend(&next, path, probs, acc);
            path.pop();
            probs.pop();
        }
    }
}

fn quad_form(g: &Array2<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        if v[i] == 0.0 {
            continue;
        }
        let row = g.row(i);
        let mut t = 0.0;
        for j in 0..n {
            t += row[j] * v[j];
        }
        s += v[i] * t;
    }
    s
}

/// Linear interpolation of rate at fidelity `f0` along a curve of points.
pub fn rate_at_fidelity(curve: &[SchedulePoint], f0: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.fidelity, p.rate)).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in pts.windows(2) {
        let ((f1, r1), (f2, r2)) = (w[0], w[1]);
        if f1 <= f0 && f0 <= f2 {
            if f2 == f1 {
                return Some(r1.max(r2));
            }
            return Some(r1 + (r2 - r1) * (f0 - f1) / (f2 - f1));
        }
    }
    None
}

/// Optimal over uniform rate at fidelity `f0`.
pub fn rate_ratio(res: &ParetoResult, f0: f64) -> Option<f64> {
    Some(rate_at_fidelity(&res.pareto, f0)? / rate_at_fidelity(&res.uniform, f0)?)
}
