//! Multimode Wigner functions of the form `P(x, p) · exp(−Σ(x_i² + p_i²))`.
//!
//! The polynomial part is a dense real tensor with axes ordered
//! `x_0, p_0, x_1, p_1, …`; the entry at `[i0, j0, i1, j1, …]` multiplies
//! `x_0^i0 p_0^j0 x_1^i1 p_1^j1 …`.

use crate::density::Density1D;
use crate::error::{invalid, Result};
use crate::integrals::{gamma_half, moment_sym, RotationTable};
use ndarray::{Array2, ArrayD, ArrayViewD, Axis, Dimension, IxDyn};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Position,
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    coeffs: ArrayD<f64>,
    weight: f64,
}

impl PhaseSpaceState {
    pub fn from_coeffs(coeffs: ArrayD<f64>) -> Result<Self> {
        if coeffs.ndim() % 2 != 0 {
            return invalid("coefficient tensor needs one (x, p) axis pair per mode");
        }
        if coeffs.shape().iter().any(|&d| d == 0) {
            return invalid("empty coefficient axis");
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite coefficient");
        }
        let weight = integrate_all(&coeffs.view());
        Ok(PhaseSpaceState { coeffs, weight })
    }

    /// One-mode state from a matrix indexed `[x-power][p-power]`.
    pub fn from_matrix(m: Array2<f64>) -> Result<Self> {
        Self::from_coeffs(m.into_dyn())
    }

    pub(crate) fn from_raw(mut coeffs: ArrayD<f64>) -> Self {
        trim(&mut coeffs);
        let weight = integrate_all(&coeffs.view());
        PhaseSpaceState { coeffs, weight }
    }

    pub fn mode_count(&self) -> usize {
        self.coeffs.ndim() / 2
    }

    pub fn coeffs(&self) -> &ArrayD<f64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> ArrayD<f64> {
        self.coeffs
    }

    /// Total integral of the Wigner function.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.shape().iter().map(|d| d - 1).max().unwrap_or(0)
    }

    /// Highest power with a nonzero coefficient along the given axis.
    pub fn effective_degree(&self, axis: usize) -> usize {
        let ax = Axis(axis);
        (0..self.coeffs.len_of(ax))
            .rev()
            .find(|&k| self.coeffs.index_axis(ax, k).iter().any(|v| *v != 0.0))
            .unwrap_or(0)
    }

    pub fn normalized(&self) -> Self {
        let w = self.weight;
        if w == 0.0 {
            return self.clone();
        }
        PhaseSpaceState {
            coeffs: &self.coeffs / w,
            weight: 1.0,
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        PhaseSpaceState {
            coeffs: &self.coeffs * f,
            weight: self.weight * f,
        }
    }

    /// Evaluate W at a phase-space point `[x0, p0, x1, p1, …]`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.coeffs.ndim());
        let mut arr = self.coeffs.clone();
        for (ax, &v) in point.iter().enumerate().rev() {
            let f: Vec<f64> = (0..arr.len_of(Axis(ax))).map(|n| v.powi(n as i32)).collect();
            arr = contract_axis(&arr.view(), ax, &f);
        }
        let kernel: f64 = point.iter().map(|v| v * v).sum();
        arr.first().copied().unwrap_or(0.0) * (-kernel).exp()
    }

    /// One-mode debug dump: one row per x-power, columns per p-power.
    pub fn to_text_matrix(&self) -> String {
        let mut s = String::new();
        if self.mode_count() != 1 {
            let _ = writeln!(s, "# {}-mode tensor, shape {:?}", self.mode_count(), self.coeffs.shape());
            for (idx, v) in self.coeffs.indexed_iter() {
                if *v != 0.0 {
                    let _ = writeln!(s, "{:?} {:.15e}", idx.as_array_view().to_vec(), v);
                }
            }
            return s;
        }
        for row in self.coeffs.outer_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{:.15e}", v)).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }
}

/// Drop trailing all-zero slices on every axis.
pub(crate) fn trim(arr: &mut ArrayD<f64>) {
    for ax in 0..arr.ndim() {
        let d = arr.len_of(Axis(ax));
        let keep = (0..d)
            .rev()
            .find(|&k| arr.index_axis(Axis(ax), k).iter().any(|v| *v != 0.0))
            .map_or(1, |k| k + 1);
        if keep < d {
            arr.slice_axis_inplace(Axis(ax), ndarray::Slice::from(0..keep));
        }
    }
    if !arr.is_standard_layout() {
        *arr = arr.as_standard_layout().into_owned();
    }
}

/// Weighted contraction of one axis: `Σ_k f[k] · arr[.., k, ..]`.
pub(crate) fn contract_axis(arr: &ArrayViewD<f64>, axis: usize, f: &[f64]) -> ArrayD<f64> {
    let mut shape = arr.shape().to_vec();
    let d = shape.remove(axis);
    let mut out = ArrayD::zeros(IxDyn(&shape));
    for k in 0..d.min(f.len()) {
        if f[k] != 0.0 {
            out.scaled_add(f[k], &arr.index_axis(Axis(axis), k));
        }
    }
    out
}

/// Linear map on one axis: `out[.., j, ..] = Σ_k m[k, j] · arr[.., k, ..]`.
pub(crate) fn transform_axis(arr: &ArrayViewD<f64>, axis: usize, m: &Array2<f64>) -> ArrayD<f64> {
    let mut shape = arr.shape().to_vec();
    let d = shape[axis];
    shape[axis] = m.ncols();
    let mut out = ArrayD::zeros(IxDyn(&shape));
    for k in 0..d.min(m.nrows()) {
        let src = arr.index_axis(Axis(axis), k);
        for j in 0..m.ncols() {
            let f = m[[k, j]];
            if f != 0.0 {
                out.index_axis_mut(Axis(axis), j).scaled_add(f, &src);
            }
        }
    }
    out
}

fn full_moments(d: usize) -> Vec<f64> {
    (0..d).map(|n| moment_sym(n, f64::INFINITY)).collect()
}

pub(crate) fn integrate_all(arr: &ArrayViewD<f64>) -> f64 {
    let mut cur = arr.to_owned();
    while cur.ndim() > 0 {
        let ax = cur.ndim() - 1;
        let f = full_moments(cur.len_of(Axis(ax)));
        cur = contract_axis(&cur.view(), ax, &f);
    }
    cur.first().copied().unwrap_or(0.0)
}

/// Zero out terms whose norm-weighted size is below 1e-14 of the largest.
pub(crate) fn flush(arr: &mut ArrayD<f64>) {
    let scales: Vec<Vec<f64>> = arr
        .shape()
        .iter()
        .map(|&d| (0..d).map(|n| gamma_half(2 * n).sqrt()).collect())
        .collect();
    let size = |idx: &IxDyn, v: f64| -> f64 {
        let mut s = v.abs();
        for (ax, &k) in idx.as_array_view().to_vec().iter().enumerate() {
            s *= scales[ax][k];
        }
        s
    };
    let mut max = 0.0f64;
    for (idx, v) in arr.indexed_iter() {
        max = max.max(size(&idx, *v));
    }
    let thr = 1e-14 * max;
    for (idx, v) in arr.indexed_iter_mut() {
        if size(&idx, *v) < thr {
            *v = 0.0;
        }
    }
}

/// Substitute `(u, v) → (c·u + s·v, c·v − s·u)` on a pair of axes.
pub(crate) fn pair_substitute(arr: &ArrayD<f64>, ax_u: usize, ax_v: usize, table: &RotationTable) -> ArrayD<f64> {
    let du = arr.len_of(Axis(ax_u));
    let dv = arr.len_of(Axis(ax_v));
    assert!(du <= table.max_a + 1 && dv <= table.max_b + 1);
    let dn = du + dv - 1;
    let mut shape = arr.shape().to_vec();
    shape[ax_u] = dn;
    shape[ax_v] = dn;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    let (hi, lo) = if ax_u > ax_v { (ax_u, ax_v) } else { (ax_v, ax_u) };
    let pick = |a: usize, b: usize| if ax_u > ax_v { (a, b) } else { (b, a) };
    for a in 0..du {
        for b in 0..dv {
            let (ih, il) = pick(a, b);
            let src = arr.index_axis(Axis(hi), ih).index_axis_move(Axis(lo), il);
            if src.iter().all(|v| *v == 0.0) {
                continue;
            }
            let row = table.get(a, b);
            for (k, &t) in row.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let l = a + b - k;
                let (oh, ol) = pick(k, l);
                out.index_axis_mut(Axis(hi), oh)
                    .index_axis_move(Axis(lo), ol)
                    .scaled_add(t, &src);
            }
        }
    }
    out
}

pub fn vacuum() -> PhaseSpaceState {
    let m = Array2::from_elem((1, 1), 1.0 / PI);
    PhaseSpaceState::from_raw(m.into_dyn())
}

pub fn single_photon() -> PhaseSpaceState {
    let mut m = Array2::zeros((3, 3));
    m[[0, 0]] = -1.0 / PI;
    m[[2, 0]] = 2.0 / PI;
    m[[0, 2]] = 2.0 / PI;
    PhaseSpaceState::from_raw(m.into_dyn())
}

/// Number state `|n⟩` for n ≤ 2.
pub fn fock(n: usize) -> Result<PhaseSpaceState> {
    match n {
        0 => Ok(vacuum()),
        1 => Ok(single_photon()),
        2 => {
            let mut m = Array2::zeros((5, 5));
            m[[0, 0]] = 1.0 / PI;
            m[[2, 0]] = -4.0 / PI;
            m[[0, 2]] = -4.0 / PI;
            m[[4, 0]] = 2.0 / PI;
            m[[0, 4]] = 2.0 / PI;
            m[[2, 2]] = 4.0 / PI;
            Ok(PhaseSpaceState::from_raw(m.into_dyn()))
        }
        _ => invalid(format!("fock({n}) unsupported; n must be 0, 1 or 2")),
    }
}

pub fn tensor(a: &PhaseSpaceState, b: &PhaseSpaceState) -> PhaseSpaceState {
    let mut shape = a.coeffs.shape().to_vec();
    shape.extend_from_slice(b.coeffs.shape());
    let bflat: Vec<f64> = b.coeffs.iter().copied().collect();
    let mut data = Vec::with_capacity(a.coeffs.len() * bflat.len());
    for va in a.coeffs.iter() {
        data.extend(bflat.iter().map(|vb| va * vb));
    }
    let coeffs = ArrayD::from_shape_vec(IxDyn(&shape), data).expect("shape");
    PhaseSpaceState {
        coeffs,
        weight: a.weight * b.weight,
    }
}

fn check_mode(w: &PhaseSpaceState, i: usize) -> Result<()> {
    if i >= w.mode_count() {
        return invalid(format!("mode {i} out of range for a {}-mode state", w.mode_count()));
    }
    Ok(())
}

/// `W_out(u, v) = W_in(c·u + s·v, c·v − s·u)` on modes (i, j), x and p alike.
pub fn beam_splitter(w: &PhaseSpaceState, i: usize, j: usize, theta: f64) -> Result<PhaseSpaceState> {
    check_mode(w, i)?;
    check_mode(w, j)?;
    if i == j {
        return invalid("beam splitter needs two distinct modes");
    }
    let sh = w.coeffs.shape();
    let maxd = sh.iter().copied().max().unwrap();
    let table = RotationTable::new(theta, maxd - 1, maxd - 1);
    let mut c = pair_substitute(&w.coeffs, 2 * i, 2 * j, &table);
    c = pair_substitute(&c, 2 * i + 1, 2 * j + 1, &table);
    flush(&mut c);
    Ok(PhaseSpaceState::from_raw(c))
}

/// Mix mode i with vacuum at transmission η and trace the ancilla out.
pub fn loss_channel(w: &PhaseSpaceState, i: usize, eta: f64) -> Result<PhaseSpaceState> {
    check_mode(w, i)?;
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return invalid(format!("transmission {eta} outside [0, 1]"));
    }
    let c = eta.sqrt();
    let s = (1.0 - eta).sqrt();
    // With a vacuum ancilla the substitution only needs the ancilla's full
    // integral of each rotated monomial, so no extra axes are materialized.
    let mut cur = w.coeffs.clone();
    for var in 0..2 {
        let ax = 2 * i + var;
        let d = cur.len_of(Axis(ax));
        // x^a → (c x + s y)^a, then (1/√π)∫ e^{-y²} dy against the vacuum marginal
        let mut m = Array2::zeros((d, d));
        let bin = crate::integrals::Binomials::new(d);
        for a in 0..d {
            for kk in 0..=a {
                let r = a - kk;
                if r % 2 == 1 {
                    continue;
                }
                let mom = moment_sym(r, f64::INFINITY) / PI.sqrt();
                m[[a, kk]] += bin.get(a, kk) * c.powi(kk as i32) * s.powi(r as i32) * mom;
            }
        }
        cur = transform_axis(&cur.view(), ax, &m);
    }
    flush(&mut cur);
    Ok(PhaseSpaceState::from_raw(cur))
}

/// Accept `|x_i| ≤ Δ`, integrate `p_i` out; returns (probability, normalized state).
pub fn measure_x_interval(w: &PhaseSpaceState, i: usize, delta: f64) -> Result<(f64, PhaseSpaceState)> {
    check_mode(w, i)?;
    if !(delta > 0.0) {
        return invalid(format!("acceptance half-width {delta} must be positive"));
    }
    let c = &w.coeffs;
    let fp = full_moments(c.len_of(Axis(2 * i + 1)));
    let r = contract_axis(&c.view(), 2 * i + 1, &fp);
    let fx: Vec<f64> = (0..c.len_of(Axis(2 * i))).map(|n| moment_sym(n, delta)).collect();
    let r = contract_axis(&r.view(), 2 * i, &fx);
    let out = PhaseSpaceState::from_raw(r);
    let prob = out.weight / w.weight;
    Ok((prob, out.normalized()))
}

/// Condition on a point outcome of one quadrature of mode i.
pub fn condition_quadrature(
    w: &PhaseSpaceState,
    i: usize,
    which: Quadrature,
    value: f64,
) -> Result<(f64, PhaseSpaceState)> {
    check_mode(w, i)?;
    let (keep, drop) = match which {
        Quadrature::Position => (2 * i, 2 * i + 1),
        Quadrature::Momentum => (2 * i + 1, 2 * i),
    };
    let c = &w.coeffs;
    let fd = full_moments(c.len_of(Axis(drop)));
    let r = contract_axis(&c.view(), drop, &fd);
    let g = (-value * value).exp();
    let fk: Vec<f64> = (0..c.len_of(Axis(keep))).map(|n| value.powi(n as i32) * g).collect();
    let r = contract_axis(&r.view(), keep.min(drop), &fk);
    let out = PhaseSpaceState::from_raw(r);
    let density = out.weight / w.weight;
    Ok((density, out.normalized()))
}

/// Marginal density of one quadrature of mode i.
pub fn marginal_density(w: &PhaseSpaceState, i: usize, which: Quadrature) -> Result<Density1D> {
    check_mode(w, i)?;
    let keep = match which {
        Quadrature::Position => 2 * i,
        Quadrature::Momentum => 2 * i + 1,
    };
    let mut cur = w.coeffs.clone();
    for ax in (0..cur.ndim()).rev() {
        if ax == keep {
            continue;
        }
        let f = full_moments(cur.len_of(Axis(ax)));
        cur = contract_axis(&cur.view(), ax, &f);
    }
    let coeffs: Vec<f64> = cur.iter().map(|v| v / w.weight).collect();
    Ok(Density1D::new(coeffs))
}

pub fn norm_integral(w: &PhaseSpaceState) -> f64 {
    w.weight
}

/// `(2π)^k ∫ W_a W_b` over all variables.
pub fn overlap_states(a: &PhaseSpaceState, b: &PhaseSpaceState) -> Result<f64> {
    if a.mode_count() != b.mode_count() {
        return invalid(format!(
            "mode-count mismatch: {} vs {}",
            a.mode_count(),
            b.mode_count()
        ));
    }
    let mut cur = b.coeffs.clone();
    for ax in 0..cur.ndim() {
        let da = a.coeffs.len_of(Axis(ax));
        let db = cur.len_of(Axis(ax));
        let mut g = Array2::zeros((db, da));
        for x in 0..db {
            for y in 0..da {
                let n = x + y;
                if n % 2 == 0 {
                    // ∫ t^n e^{-2t²} dt
                    g[[x, y]] = gamma_half(n) / 2f64.powf((n as f64 + 1.0) / 2.0);
                }
            }
        }
        cur = transform_axis(&cur.view(), ax, &g);
    }
    let s: f64 = a.coeffs.iter().zip(cur.iter()).map(|(x, y)| x * y).sum();
    Ok(s * (2.0 * PI).powi(a.mode_count() as i32))
}

/// `(2π)^k ∫ W²` of the normalized state.
pub fn purity(w: &PhaseSpaceState) -> f64 {
    let n = w.normalized();
    overlap_states(&n, &n).expect("same state")
}

/// Integrate out every mode except `keep`.
pub fn reduced_state(w: &PhaseSpaceState, keep: usize) -> Result<PhaseSpaceState> {
    check_mode(w, keep)?;
    let mut cur = w.coeffs.clone();
    for ax in (0..cur.ndim()).rev() {
        if ax / 2 == keep {
            continue;
        }
        let f = full_moments(cur.len_of(Axis(ax)));
        cur = contract_axis(&cur.view(), ax, &f);
    }
    Ok(PhaseSpaceState::from_raw(cur))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_normalization() {
        assert!((vacuum().weight() - 1.0).abs() < 1e-14);
        assert!((single_photon().weight() - 1.0).abs() < 1e-14);
        assert!((fock(2).unwrap().weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn purities() {
        assert!((purity(&vacuum()) - 1.0).abs() < 1e-12);
        assert!((purity(&single_photon()) - 1.0).abs() < 1e-12);
        assert!((purity(&fock(2).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_on_photon() {
        let w = loss_channel(&single_photon(), 0, 0.0).unwrap();
        assert!(overlap_states(&w, &vacuum()).unwrap() > 1.0 - 1e-12);
        let h = loss_channel(&single_photon(), 0, 0.5).unwrap();
        assert!((purity(&h) - 0.5).abs() < 1e-12);
    }
}
