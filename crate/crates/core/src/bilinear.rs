//! Joining two two-mode states through a measured beam-splitter pair.
//!
//! For `L(o, i)` and `R(i', o')`, interfering `i` with `i'` and applying a
//! product functional to the two outputs leaves
//! `W(o, o') = Σ L[o, γ] K[γ, γ'] R[γ', o']`, where `K` is a sum of
//! `Kx ⊗ Kp` terms. No four-mode tensor is ever built.

use crate::integrals::RotationTable;
use crate::phase_space::transform_axis;
use ndarray::{Array2, ArrayD, Axis, Ix2, IxDyn};

/// `K[i, i'] = Σ_k T(i, i')[k] · fu[k] · fv[i + i' − k]`.
pub fn pair_functional(rot: &RotationTable, di: usize, dj: usize, fu: &[f64], fv: &[f64]) -> Array2<f64> {
    let mut k = Array2::zeros((di, dj));
    for i in 0..di {
        for j in 0..dj {
            let row = rot.get(i, j);
            let mut s = 0.0;
            for (n, t) in row.iter().enumerate() {
                if *t != 0.0 {
                    s += t * fu[n] * fv[i + j - n];
                }
            }
            k[[i, j]] = s;
        }
    }
    k
}

/// One `weight · Kx ⊗ Kp` term.
#[derive(Debug, Clone)]
pub struct KernelTerm {
    pub weight: f64,
    pub kx: Array2<f64>,
    pub kp: Array2<f64>,
}

/// `left` axes `(x_o, p_o, x_i, p_i)`, `right` axes `(x_i', p_i', x_o', p_o')`.
pub fn join(left: &ArrayD<f64>, right: &ArrayD<f64>, terms: &[KernelTerm]) -> ArrayD<f64> {
    let ls = left.shape().to_vec();
    let rs = right.shape().to_vec();
    let no = ls[0] * ls[1];
    let ni = rs[0] * rs[1];
    let mut acc = Array2::<f64>::zeros((no, ni));
    for t in terms {
        let a = transform_axis(&left.view(), 2, &pad(&t.kx, ls[2], rs[0]));
        let a = transform_axis(&a.view(), 3, &pad(&t.kp, ls[3], rs[1]));
        let a = a.into_shape_with_order((no, ni)).expect("standard layout");
        acc.scaled_add(t.weight, &a);
    }
    let r2 = right
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((ni, rs[2] * rs[3]))
        .expect("standard layout");
    let w = acc.dot(&r2);
    w.into_shape_with_order(IxDyn(&[ls[0], ls[1], rs[2], rs[3]]))
        .expect("shape")
}

/// `Σ l[γ] K[γ, γ'] r[γ']` for one-mode coefficient matrices.
pub fn scalar_join(l: &Array2<f64>, r: &Array2<f64>, terms: &[KernelTerm]) -> f64 {
    let mut s = 0.0;
    for t in terms {
        let kx = pad(&t.kx, l.nrows(), r.nrows());
        let kp = pad(&t.kp, l.ncols(), r.ncols());
        let m = kx.t().dot(l).dot(&kp);
        s += t.weight * (&m * r).sum();
    }
    s
}

fn pad(k: &Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    if k.dim() == (rows, cols) {
        return k.clone();
    }
    let mut out = Array2::zeros((rows, cols));
    for i in 0..rows.min(k.nrows()) {
        for j in 0..cols.min(k.ncols()) {
            out[[i, j]] = k[[i, j]];
        }
    }
    out
}

/// Integrate out the first mode of a two-mode tensor.
pub fn integrate_first_mode(w: &ArrayD<f64>) -> Array2<f64> {
    let fx: Vec<f64> = (0..w.len_of(Axis(0))).map(|n| crate::integrals::moment_sym(n, f64::INFINITY)).collect();
    let fp: Vec<f64> = (0..w.len_of(Axis(1))).map(|n| crate::integrals::moment_sym(n, f64::INFINITY)).collect();
    let a = crate::phase_space::contract_axis(&w.view(), 1, &fp);
    let a = crate::phase_space::contract_axis(&a.view(), 0, &fx);
    a.into_dimensionality::<Ix2>().expect("two axes left")
}

/// Integrate out the second mode of a two-mode tensor.
pub fn integrate_second_mode(w: &ArrayD<f64>) -> Array2<f64> {
    let fx: Vec<f64> = (0..w.len_of(Axis(2))).map(|n| crate::integrals::moment_sym(n, f64::INFINITY)).collect();
    let fp: Vec<f64> = (0..w.len_of(Axis(3))).map(|n| crate::integrals::moment_sym(n, f64::INFINITY)).collect();
    let a = crate::phase_space::contract_axis(&w.view(), 3, &fp);
    let a = crate::phase_space::contract_axis(&a.view(), 2, &fx);
    a.into_dimensionality::<Ix2>().expect("two axes left")
}
