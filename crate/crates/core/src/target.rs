//! Pure target states and their overlaps with phase-space states.
//!
//! Every target is a finite sum of product wavefunctions whose per-mode
//! factors have the form `P(x) e^{-a x² + b x}` with complex `b`.

use crate::error::{invalid, Result};
use crate::integrals::{gamma_half, moments_shifted, Binomials};
use crate::phase_space::PhaseSpaceState;
use ndarray::{Array2, ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

/// `f(x) = (Σ poly[n] x^n) · e^{-a x² + b x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussPoly {
    pub a: f64,
    pub b: C64,
    pub poly: Vec<C64>,
}

impl GaussPoly {
    pub fn monomial(n: usize, a: f64) -> Self {
        let mut poly = vec![C64::new(0.0, 0.0); n + 1];
        poly[n] = C64::new(1.0, 0.0);
        GaussPoly { a, b: C64::new(0.0, 0.0), poly }
    }

    pub fn shifted(a: f64, b: f64, scale: f64) -> Self {
        GaussPoly {
            a,
            b: C64::new(b, 0.0),
            poly: vec![C64::new(scale, 0.0)],
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let mut p = C64::new(0.0, 0.0);
        for c in self.poly.iter().rev() {
            p = p * x + c;
        }
        p * (self.b * x - self.a * x * x).exp()
    }

    fn degree(&self) -> usize {
        self.poly.len().saturating_sub(1)
    }
}

/// `Σ_r c_r ⊗_mode f_{r,mode}` (not necessarily normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct PureTerms {
    pub modes: usize,
    pub terms: Vec<(C64, Vec<GaussPoly>)>,
}

impl PureTerms {
    /// `⟨ψ|ψ⟩`.
    pub fn norm_sqr(&self) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for (cr, fr) in &self.terms {
            for (cs, fs) in &self.terms {
                let mut prod = cr.conj() * cs;
                for (f, g) in fr.iter().zip(fs) {
                    prod *= inner(f, g);
                }
                s += prod;
            }
        }
        s.re
    }

    pub fn eval(&self, xs: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().zip(xs).fold(*c, |acc, (f, &x)| acc * f.eval(x)))
            .sum()
    }
}

/// `∫ f*(x) g(x) dx`.
pub fn inner(f: &GaussPoly, g: &GaussPoly) -> C64 {
    let n = f.degree() + g.degree();
    let j = moments_shifted(n, f.a + g.a, f.b.conj() + g.b);
    let mut s = C64::new(0.0, 0.0);
    for (p, cp) in f.poly.iter().enumerate() {
        for (q, cq) in g.poly.iter().enumerate() {
            s += cp.conj() * cq * j[p + q];
        }
    }
    s
}

/// Matrix `F[i][j] = ⟨f| Op(x^i p^j e^{-x²-p²}) |g⟩` such that
/// `⟨f|ρ|g⟩ = Σ w[i][j] F[i][j]` for a one-mode Wigner coefficient matrix `w`.
pub fn mode_functional(f: &GaussPoly, g: &GaussPoly, dx: usize, dp: usize) -> Array2<C64> {
    assert!(
        (f.a - g.a).abs() < 1e-15,
        "mode functional needs a common Gaussian width"
    );
    let a = f.a;
    let deg = f.degree() + g.degree();
    if deg == 0 {
        return gaussian_functional(f, g, dx, dp);
    }
    let bin = Binomials::new((deg + dp).max(dx).max(1));
    // q[α][β] for conj(P_f)(x+y)·P_g(x−y)
    let mut q = vec![vec![C64::new(0.0, 0.0); deg + 1]; deg + 1];
    for (n1, c1) in f.poly.iter().enumerate() {
        if *c1 == C64::new(0.0, 0.0) {
            continue;
        }
        for (n2, c2) in g.poly.iter().enumerate() {
            if *c2 == C64::new(0.0, 0.0) {
                continue;
            }
            let c = c1.conj() * c2;
            for t1 in 0..=n1 {
                let e1 = bin.get(n1, t1);
                for t2 in 0..=n2 {
                    let sgn = if (n2 - t2) % 2 == 1 { -1.0 } else { 1.0 };
                    q[t1 + t2][(n1 - t1) + (n2 - t2)] += c * (e1 * bin.get(n2, t2) * sgn);
                }
            }
        }
    }
    let width = 1.0 + 2.0 * a;
    let jx = moments_shifted(dx + deg, width, f.b.conj() + g.b);
    let jy = moments_shifted(dp + deg, width, f.b.conj() - g.b);
    // s[i][t] = Σ q[α][β] Jx[i+α] Jy[t+β]
    let mut s = Array2::<C64>::zeros((dx, dp));
    for i in 0..dx {
        for t in 0..dp {
            let mut acc = C64::new(0.0, 0.0);
            for (al, row) in q.iter().enumerate() {
                for (be, qv) in row.iter().enumerate() {
                    if *qv != C64::new(0.0, 0.0) {
                        acc += qv * jx[i + al] * jy[t + be];
                    }
                }
            }
            s[[i, t]] = acc;
        }
    }
    let ipow = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let mut out = Array2::<C64>::zeros((dx, dp));
    for i in 0..dx {
        for j in 0..dp {
            let mut acc = C64::new(0.0, 0.0);
            for k in (0..=j).step_by(2) {
                acc += ipow[(j - k) % 4] * (bin.get(j, k) * gamma_half(k)) * s[[i, j - k]];
            }
            out[[i, j]] = 2.0 * acc;
        }
    }
    out
}

// Constant prefactors: the y and p integrals separate exactly.
fn gaussian_functional(f: &GaussPoly, g: &GaussPoly, dx: usize, dp: usize) -> Array2<C64> {
    let a = f.a;
    let c = f.poly[0].conj() * g.poly[0];
    let bx = f.b.conj() + g.b;
    let by = f.b.conj() - g.b;
    let pre = 2.0 * c * (PI / (2.0 * a)).sqrt() * (by * by / (8.0 * a)).exp();
    let jx = moments_shifted(dx.max(1) - 1, 1.0 + 2.0 * a, bx);
    let jp = moments_shifted(
        dp.max(1) - 1,
        1.0 + 1.0 / (2.0 * a),
        C64::new(0.0, 1.0) * by / (2.0 * a),
    );
    Array2::from_shape_fn((dx, dp), |(i, j)| pre * jx[i] * jp[j])
}

/// `Σ w[i0,j0,i1,j1,…] Π_k F_k[i_k, j_k]`.
pub fn contract_modes(w: &ArrayD<f64>, mats: &[&Array2<C64>]) -> C64 {
    assert_eq!(w.ndim(), 2 * mats.len());
    let mut cur: ArrayD<C64> = w.mapv(|v| C64::new(v, 0.0));
    for mat in mats.iter().rev() {
        let nd = cur.ndim();
        let di = cur.shape()[nd - 2];
        let dj = cur.shape()[nd - 1];
        let rest: Vec<usize> = cur.shape()[..nd - 2].to_vec();
        let rn: usize = rest.iter().product();
        let flat = cur
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((rn, di * dj))
            .expect("reshape");
        let mut out = vec![C64::new(0.0, 0.0); rn];
        for (r, row) in flat.outer_iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..di {
                for j in 0..dj {
                    let v = row[i * dj + j];
                    if v != C64::new(0.0, 0.0) {
                        acc += v * mat[[i, j]];
                    }
                }
            }
            out[r] = acc;
        }
        cur = ArrayD::from_shape_vec(IxDyn(&rest), out).expect("shape");
    }
    cur.first().copied().unwrap_or(C64::new(0.0, 0.0))
}

/// `⟨ψ|ρ|ψ⟩ / ⟨ψ|ψ⟩` for normalized ρ.
pub fn overlap_terms(w: &PhaseSpaceState, t: &PureTerms) -> Result<f64> {
    if w.mode_count() != t.modes {
        return invalid(format!(
            "mode-count mismatch: state has {}, target has {}",
            w.mode_count(),
            t.modes
        ));
    }
    let wn = w.normalized();
    let c = wn.coeffs();
    let sh = c.shape().to_vec();
    let mut total = C64::new(0.0, 0.0);
    for (cr, fr) in &t.terms {
        for (cs, fs) in &t.terms {
            let mats: Vec<Array2<C64>> = (0..t.modes)
                .map(|k| mode_functional(&fr[k], &fs[k], sh[2 * k], sh[2 * k + 1]))
                .collect();
            let refs: Vec<&Array2<C64>> = mats.iter().collect();
            total += cr.conj() * cs * contract_modes(c, &refs);
        }
    }
    Ok(total.re / t.norm_sqr())
}

/// Cross-Wigner coefficients of `|f⟩⟨g|` for `f, g = P(x) e^{-x²/2}`.
fn cross_wigner(f: &GaussPoly, g: &GaussPoly) -> Array2<C64> {
    let deg = f.degree() + g.degree();
    let bin = Binomials::new(deg.max(1));
    let mut q = vec![vec![C64::new(0.0, 0.0); deg + 1]; deg + 1];
    for (n1, c1) in f.poly.iter().enumerate() {
        for (n2, c2) in g.poly.iter().enumerate() {
            let c = c1 * c2.conj();
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for t1 in 0..=n1 {
                for t2 in 0..=n2 {
                    let sgn = if (n2 - t2) % 2 == 1 { -1.0 } else { 1.0 };
                    q[t1 + t2][(n1 - t1) + (n2 - t2)] += c * (bin.get(n1, t1) * bin.get(n2, t2) * sgn);
                }
            }
        }
    }
    let mipow = [
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
    ];
    let mut out = Array2::<C64>::zeros((deg + 1, deg + 1));
    for (al, row) in q.iter().enumerate() {
        for (be, qv) in row.iter().enumerate() {
            if *qv == C64::new(0.0, 0.0) {
                continue;
            }
            for k in (0..=be).step_by(2) {
                out[[al, be - k]] += qv * mipow[(be - k) % 4] * (bin.get(be, k) * gamma_half(k) / PI);
            }
        }
    }
    out
}

/// Wigner tensor of a pure state whose factors are polynomials times `e^{-x²/2}`.
pub fn terms_to_state(t: &PureTerms) -> Result<PhaseSpaceState> {
    for (_, fs) in &t.terms {
        for f in fs {
            if (f.a - 0.5).abs() > 1e-15 || f.b != C64::new(0.0, 0.0) {
                return invalid("only polynomial × e^{-x²/2} targets have a phase-space state form");
            }
        }
    }
    let mut shape = Vec::with_capacity(2 * t.modes);
    for k in 0..t.modes {
        let d = t.terms.iter().map(|(_, fs)| fs[k].degree()).max().unwrap_or(0);
        shape.push(2 * d + 1);
        shape.push(2 * d + 1);
    }
    let mut acc = ArrayD::<C64>::zeros(IxDyn(&shape));
    for (cr, fr) in &t.terms {
        for (cs, fs) in &t.terms {
            let mut prod = ArrayD::<C64>::from_elem(IxDyn(&[]), cr * cs.conj());
            for k in 0..t.modes {
                let cw = cross_wigner(&fr[k], &fs[k]);
                let mut nshape = prod.shape().to_vec();
                nshape.push(shape[2 * k]);
                nshape.push(shape[2 * k + 1]);
                let mut next = ArrayD::<C64>::zeros(IxDyn(&nshape));
                for (idx, pv) in prod.indexed_iter() {
                    for ((i, j), cv) in cw.indexed_iter() {
                        let mut full: Vec<usize> = idx.as_array_view().to_vec().to_vec();
                        full.push(i);
                        full.push(j);
                        next[IxDyn(&full)] = pv * cv;
                    }
                }
                prod = next;
            }
            acc = acc + prod;
        }
    }
    let n = t.norm_sqr();
    let re = acc.mapv(|v| v.re / n);
    Ok(PhaseSpaceState::from_coeffs(re)?.normalized())
}

/// Qubit basis of the m-th growth level: `|0_m⟩ ∝ x^{2^m−1}e^{-x²/2}`, `|1_m⟩ ∝ x^{2^m}e^{-x²/2}`.
pub fn basis_fn(m: u32, bit: usize) -> GaussPoly {
    let n = (1usize << m) - 1 + bit;
    let mut f = GaussPoly::monomial(n, 0.5);
    f.poly[n] = C64::new(1.0 / gamma_half(2 * n).sqrt(), 0.0);
    f
}

/// Even-cat amplitude `μ_m` and odd-cat amplitude `μ̃_m` of the squeezed targets.
pub fn cat_amplitudes(m: u32) -> (f64, f64) {
    let n = (1u64 << m) as f64;
    ((n + 0.5).sqrt(), (n - 0.5).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetState {
    /// `e^{iθ}|α⟩ + e^{-iθ}|−α⟩` for real α.
    SingleModeCat { theta: f64, alpha: f64 },
    /// `Ŝ(2)` applied to an even cat of amplitude `μ_m`.
    SqueezedSingleCat { m: u32 },
    /// `∝ x^{2^m} e^{-x²/2}`.
    IdealGrown { m: u32 },
    /// `(|0_m 1_m⟩ + |1_m 0_m⟩)/√2`.
    PsiM { m: u32 },
    /// `Ŝ(2)⊗Ŝ(2)(i|α, α⟩ − i|−α, −α⟩)` with `α = 2^{m/2}`.
    SqueezedTwoModeCat { m: u32 },
    /// `Σ M[k][l] |k_m l_m⟩`, normalized.
    PhiFamily { m: u32, matrix: [[C64; 2]; 2] },
}

impl TargetState {
    pub fn mode_count(&self) -> usize {
        match self {
            TargetState::SingleModeCat { .. }
            | TargetState::SqueezedSingleCat { .. }
            | TargetState::IdealGrown { .. } => 1,
            _ => 2,
        }
    }

    pub fn terms(&self) -> PureTerms {
        let one = C64::new(1.0, 0.0);
        match *self {
            TargetState::SingleModeCat { theta, alpha } => {
                let s = (-alpha * alpha / 2.0).exp() * PI.powf(-0.25);
                let b = 2f64.sqrt() * alpha;
                PureTerms {
                    modes: 1,
                    terms: vec![
                        (C64::from_polar(1.0, theta), vec![GaussPoly::shifted(0.5, b, s)]),
                        (C64::from_polar(1.0, -theta), vec![GaussPoly::shifted(0.5, -b, s)]),
                    ],
                }
            }
            TargetState::SqueezedSingleCat { m } => {
                let (mu, _) = cat_amplitudes(m);
                let s = (-mu * mu).exp();
                PureTerms {
                    modes: 1,
                    terms: vec![
                        (one, vec![GaussPoly::shifted(1.0, 2.0 * mu, s)]),
                        (one, vec![GaussPoly::shifted(1.0, -2.0 * mu, s)]),
                    ],
                }
            }
            TargetState::IdealGrown { m } => PureTerms {
                modes: 1,
                terms: vec![(one, vec![basis_fn(m, 1)])],
            },
            TargetState::PsiM { m } => {
                let h = C64::new(0.5f64.sqrt(), 0.0);
                PureTerms {
                    modes: 2,
                    terms: vec![
                        (h, vec![basis_fn(m, 0), basis_fn(m, 1)]),
                        (h, vec![basis_fn(m, 1), basis_fn(m, 0)]),
                    ],
                }
            }
            TargetState::SqueezedTwoModeCat { m } => {
                let al = 2f64.powf(m as f64 / 2.0);
                let s = (-al * al).exp();
                let plus = GaussPoly::shifted(1.0, 2.0 * al, s);
                let minus = GaussPoly::shifted(1.0, -2.0 * al, s);
                PureTerms {
                    modes: 2,
                    terms: vec![
                        (C64::new(0.0, 1.0), vec![plus.clone(), plus]),
                        (C64::new(0.0, -1.0), vec![minus.clone(), minus]),
                    ],
                }
            }
            TargetState::PhiFamily { m, matrix } => {
                let mut terms = Vec::new();
                for (k, row) in matrix.iter().enumerate() {
                    for (l, c) in row.iter().enumerate() {
                        if *c != C64::new(0.0, 0.0) {
                            terms.push((*c, vec![basis_fn(m, k), basis_fn(m, l)]));
                        }
                    }
                }
                PureTerms { modes: 2, terms }
            }
        }
    }

    /// Phase-space form; only for the polynomial targets.
    pub fn to_state(&self) -> Result<PhaseSpaceState> {
        terms_to_state(&self.terms())
    }
}

/// `⟨t|ρ|t⟩` for a normalized target.
pub fn overlap(w: &PhaseSpaceState, t: &TargetState) -> Result<f64> {
    overlap_terms(w, &t.terms())
}

/// `⟨k l|ρ|k' l'⟩` on the `{|0_m⟩, |1_m⟩}^{⊗2}` subspace; index `2k + l`.
pub fn qubit_projection(w: &PhaseSpaceState, m: u32) -> Result<[[C64; 4]; 4]> {
    if w.mode_count() != 2 {
        return invalid("qubit projection needs a two-mode state");
    }
    let wn = w.normalized();
    let c = wn.coeffs();
    let sh = c.shape().to_vec();
    let f = [basis_fn(m, 0), basis_fn(m, 1)];
    let mut fa = Vec::new();
    let mut fb = Vec::new();
    for k in 0..2 {
        for kp in 0..2 {
            fa.push(mode_functional(&f[k], &f[kp], sh[0], sh[1]));
            fb.push(mode_functional(&f[k], &f[kp], sh[2], sh[3]));
        }
    }
    let mut r = [[C64::new(0.0, 0.0); 4]; 4];
    for k in 0..2 {
        for l in 0..2 {
            for kp in 0..2 {
                for lp in 0..2 {
                    r[2 * k + l][2 * kp + lp] = contract_modes(c, &[&fa[2 * k + kp], &fb[2 * l + lp]]);
                }
            }
        }
    }
    Ok(r)
}

/// `vec(M)† R vec(M) / ‖M‖²`.
pub fn qubit_fidelity(r: &[[C64; 4]; 4], matrix: &[[C64; 2]; 2]) -> f64 {
    let v = [matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]];
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let mut s = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            s += v[a].conj() * r[a][b] * v[b];
        }
    }
    s.re / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{overlap_states, single_photon, vacuum};

    #[test]
    fn ideal_grown_zero_is_photon() {
        let w = TargetState::IdealGrown { m: 0 }.to_state().unwrap();
        assert!((overlap_states(&w, &single_photon()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_against_coherent_cat() {
        // |⟨0|cat⟩|² for the even cat: 2 e^{-α²} / (1 + e^{-2α²})
        let a: f64 = 1.3;
        let f = overlap(&vacuum(), &TargetState::SingleModeCat { theta: 0.0, alpha: a }).unwrap();
        let want = 2.0 * (-a * a).exp() / (1.0 + (-2.0 * a * a).exp());
        assert!((f - want).abs() < 1e-12);
    }
}
