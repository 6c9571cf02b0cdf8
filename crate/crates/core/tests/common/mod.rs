//! Brute-force quadrature oracles and the shared equivalence corpus.
//!
//! Everything here works from point evaluations of Wigner functions and
//! wavefunctions, never from the moment algebra the library uses.
#![allow(dead_code)]

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use hqr_core::connect::{connect, site_state};
use hqr_core::growth::{grow_schedule, grow_step, grow_step_pair, GrowthSchedule};
use hqr_core::phase_space::*;
use hqr_core::swap::{conditional_state, p_density_given_x, success_probability, x_density};
use hqr_core::target::{overlap, qubit_projection, PureTerms, TargetState};
use ndarray::Dimension;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_4, PI};

/// Polynomial part of a Wigner function as a sparse term list.
#[derive(Clone)]
pub struct Wig {
    terms: Vec<(Vec<i32>, f64)>,
    pub dim: usize,
}

impl Wig {
    pub fn new(w: &PhaseSpaceState) -> Self {
        let terms = w
            .coeffs()
            .indexed_iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(ix, c)| (ix.slice().iter().map(|&k| k as i32).collect(), *c))
            .collect();
        Wig { terms, dim: w.coeffs().ndim() }
    }

    pub fn poly(&self, pt: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(ix, c)| ix.iter().zip(pt).fold(*c, |acc, (&k, &v)| acc * v.powi(k)))
            .sum()
    }

    pub fn eval(&self, pt: &[f64]) -> f64 {
        let k: f64 = pt.iter().map(|v| v * v).sum();
        self.poly(pt) * (-k).exp()
    }
}

pub fn hermite(n: usize) -> Vec<(f64, f64)> {
    GaussHermite::new(n.try_into().unwrap())
        .iter()
        .map(|(x, w)| (*x, *w))
        .collect()
}

pub fn legendre(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let h = 0.5 * (hi - lo);
    let c = 0.5 * (hi + lo);
    GaussLegendre::new(n.try_into().unwrap())
        .iter()
        .map(|(x, w)| (c + h * x, h * w))
        .collect()
}

/// Nodes for `∫ f` over the real line when `f ~ poly · e^{−a t²}`; the
/// weight already includes the `e^{a t²}` factor.
pub fn scaled_rule(n: usize, a: f64) -> Vec<(f64, f64)> {
    let s = a.sqrt();
    hermite(n)
        .into_iter()
        .map(|(u, w)| {
            let t = u / s;
            (t, w / s * (a * t * t).exp())
        })
        .collect()
}

/// Tensor-product quadrature with one rule per axis.
pub fn integrate(rules: &[Vec<(f64, f64)>], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = rules.len();
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (t, wk) = rules[k][idx[k]];
            pt[k] = t;
            w *= wk;
        }
        total += w * f(&pt);
        let mut k = d;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn gh_all(d: usize, n: usize, a: f64, f: impl FnMut(&[f64]) -> f64) -> f64 {
    let rules = vec![scaled_rule(n, a); d];
    integrate(&rules, f)
}

/// Rotation used by the library's beam splitter: `(c·u + s·v, c·v − s·u)`.
pub fn rot(u: f64, v: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * u + s * v, c * v - s * u)
}

/// `W_out(pt)` for a beam splitter on modes (i, j), from the input function.
pub fn bs_point(w: &Wig, i: usize, j: usize, theta: f64, pt: &[f64]) -> f64 {
    let mut q = pt.to_vec();
    for var in 0..2 {
        let (a, b) = rot(pt[2 * i + var], pt[2 * j + var], theta);
        q[2 * i + var] = a;
        q[2 * j + var] = b;
    }
    w.eval(&q)
}

/// Cross-Wigner function `(1/π) ∫ f*(x + y) g(x − y) e^{2ipy} dy`.
pub fn cross_wigner(f: &dyn Fn(f64) -> C64, g: &dyn Fn(f64) -> C64, x: f64, p: f64, yr: &[(f64, f64)]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for &(y, w) in yr {
        s += f(x + y).conj() * g(x - y) * C64::from_polar(1.0, 2.0 * p * y) * w;
    }
    s / PI
}

/// `⟨ψ|ρ|ψ⟩ / ⟨ψ|ψ⟩` through the Wigner function of ψ, built term by term
/// from cross-Wigner functions on a quadrature grid.
pub fn target_overlap(w: &PhaseSpaceState, t: &PureTerms, n: usize, ylo: f64, yhi: f64, ny: usize) -> f64 {
    let wn = Wig::new(&w.normalized());
    let k = t.modes;
    let xr = scaled_rule(n, 1.0);
    let yr = legendre(ny, ylo, yhi);
    // per mode and term pair, tabulate the cross-Wigner function on the (x, p) grid
    let nt = t.terms.len();
    let mut tables = vec![vec![vec![C64::new(0.0, 0.0); n * n]; nt * nt]; k];
    for (mode, tab) in tables.iter_mut().enumerate() {
        for r in 0..nt {
            for s in 0..nt {
                let fr = &t.terms[r].1[mode];
                let fs = &t.terms[s].1[mode];
                let f = |x: f64| fr.eval(x);
                let g = |x: f64| fs.eval(x);
                for (i, &(x, _)) in xr.iter().enumerate() {
                    for (j, &(p, _)) in xr.iter().enumerate() {
                        tab[r * nt + s][i * n + j] = cross_wigner(&f, &g, x, p, &yr);
                    }
                }
            }
        }
    }
    let mut wpsi = vec![C64::new(0.0, 0.0); n.pow(2 * k as u32)];
    for (cell, val) in wpsi.iter_mut().enumerate() {
        for r in 0..nt {
            for s in 0..nt {
                let mut prod = t.terms[r].0.conj() * t.terms[s].0;
                let mut rem = cell;
                for mode in (0..k).rev() {
                    let j = rem % n;
                    rem /= n;
                    let i = rem % n;
                    rem /= n;
                    prod *= tables[mode][r * nt + s][i * n + j];
                }
                *val += prod;
            }
        }
    }
    let rules = vec![xr; 2 * k];
    let mut cell = 0usize;
    let num = integrate(&rules, |pt| {
        let v = wn.eval(pt) * wpsi[cell].re;
        cell += 1;
        v
    });
    let yn = legendre(ny, ylo, yhi);
    let psi_norm: f64 = integrate(&vec![yn; k], |pt| t.eval(pt).norm_sqr());
    (2.0 * PI).powi(k as i32) * num / psi_norm
}

/// `⟨ψ|ψ⟩` by direct quadrature of `|ψ|²`.
pub fn terms_norm(t: &PureTerms, lo: f64, hi: f64, n: usize) -> f64 {
    integrate(&vec![legendre(n, lo, hi); t.modes], |pt| t.eval(pt).norm_sqr())
}

pub struct Case {
    pub name: String,
    pub closed: f64,
    pub oracle: f64,
}

impl Case {
    pub fn rel_err(&self) -> f64 {
        (self.closed - self.oracle).abs() / self.oracle.abs().max(1e-300)
    }
}

fn case(v: &mut Vec<Case>, name: impl Into<String>, closed: f64, oracle: f64) {
    v.push(Case { name: name.into(), closed, oracle });
}

fn norm_oracle(w: &PhaseSpaceState) -> f64 {
    let q = Wig::new(w);
    let n = w.max_degree() / 2 + 3;
    gh_all(q.dim, n, 1.0, |pt| q.eval(pt))
}

fn overlap_oracle(a: &PhaseSpaceState, b: &PhaseSpaceState) -> f64 {
    let (qa, qb) = (Wig::new(a), Wig::new(b));
    let n = (a.max_degree() + b.max_degree()) / 2 + 3;
    let k = a.mode_count() as i32;
    (2.0 * PI).powi(k) * gh_all(qa.dim, n, 2.0, |pt| qa.eval(pt) * qb.eval(pt))
}

/// Density of one quadrature of mode i at `value`, all else integrated.
fn marginal_oracle(w: &PhaseSpaceState, i: usize, which: Quadrature, value: f64) -> f64 {
    let q = Wig::new(&w.normalized());
    let fixed = 2 * i + if which == Quadrature::Position { 0 } else { 1 };
    let n = w.max_degree() / 2 + 3;
    let mut rules = vec![scaled_rule(n, 1.0); q.dim];
    rules[fixed] = vec![(value, 1.0)];
    integrate(&rules, |pt| q.eval(pt))
}

fn photon_lossy(eta: f64) -> PhaseSpaceState {
    loss_channel(&single_photon(), 0, eta).unwrap()
}

fn grown(deltas: &[f64]) -> PhaseSpaceState {
    grow_schedule(&single_photon(), &GrowthSchedule::new(deltas.to_vec()).unwrap())
        .unwrap()
        .state
}

/// The equivalence corpus: closed forms against quadrature, 50+ cases.
pub fn corpus() -> Vec<Case> {
    let mut v = Vec::new();
    let photon = single_photon();
    let f2 = fock(2).unwrap();
    let two = tensor(&photon, &f2);
    let mixed = beam_splitter(&two, 0, 1, 0.4).unwrap();
    let ig2 = TargetState::IdealGrown { m: 2 }.to_state().unwrap();
    let psi1 = TargetState::PsiM { m: 1 }.to_state().unwrap();
    let psi2 = TargetState::PsiM { m: 2 }.to_state().unwrap();
    let g1 = grown(&[0.4]);
    let g2 = grown(&[0.3, 0.5]);
    let lossy_f2 = loss_channel(&f2, 0, 0.6).unwrap();

    // total weights
    for (name, w) in [
        ("vacuum", vacuum()),
        ("photon", photon.clone()),
        ("fock2", f2.clone()),
        ("photon x fock2", two.clone()),
        ("lossy photon", photon_lossy(0.3)),
        ("mixed photon fock2", mixed.clone()),
        ("ideal grown 2", ig2.clone()),
        ("psi 1", psi1.clone()),
    ] {
        case(&mut v, format!("norm {name}"), norm_integral(&w), norm_oracle(&w));
    }

    // overlaps
    for (name, a, b) in [
        ("photon lossy photon", photon.clone(), photon_lossy(0.3)),
        ("fock2 lossy fock2", f2.clone(), lossy_f2.clone()),
        ("mixed product", mixed.clone(), two.clone()),
        ("grown ideal", g2.clone(), ig2.clone()),
        ("psi1 psi1 mixed", psi1.clone(), beam_splitter(&psi1, 0, 1, 0.3).unwrap()),
    ] {
        case(&mut v, format!("overlap {name}"), overlap_states(&a, &b).unwrap(), overlap_oracle(&a, &b));
    }

    // purities
    for (name, w) in [
        ("lossy photon", photon_lossy(0.5)),
        ("lossy fock2", loss_channel(&f2, 0, 0.3).unwrap()),
        ("half of psi1", reduced_state(&psi1, 0).unwrap()),
    ] {
        let n = w.normalized();
        case(&mut v, format!("purity {name}"), purity(&w), overlap_oracle(&n, &n));
    }

    // marginals
    for (name, w, i, which, val) in [
        ("photon x", photon.clone(), 0, Quadrature::Position, 0.7),
        ("fock2 p", f2.clone(), 0, Quadrature::Momentum, 1.1),
        ("mixed mode 1 x", mixed.clone(), 1, Quadrature::Position, 0.3),
        ("lossy fock2 p", lossy_f2.clone(), 0, Quadrature::Momentum, 1.5),
    ] {
        let d = marginal_density(&w, i, which).unwrap();
        case(&mut v, format!("marginal {name}"), d.eval(val), marginal_oracle(&w, i, which, val));
    }

    // growth step probabilities against the pre-measurement joint density
    for (name, a, b, delta) in [
        ("photon 0.2", photon.clone(), photon.clone(), 0.2),
        ("photon 1.0", photon.clone(), photon.clone(), 1.0),
        ("fock2 0.5", f2.clone(), f2.clone(), 0.5),
        ("lossy photon fock2 0.4", photon_lossy(0.7), f2.clone(), 0.4),
    ] {
        let (p, out) = grow_step_pair(&a, &b, delta).unwrap();
        let joint = Wig::new(&tensor(&a.normalized(), &b.normalized()));
        let n = joint.dim + 8;
        let gx = scaled_rule(n, 1.0);
        let band = legendre(40, -delta, delta);
        let oracle = integrate(&[gx.clone(), gx.clone(), band.clone(), gx.clone()], |pt| {
            bs_point(&joint, 0, 1, FRAC_PI_4, pt)
        });
        case(&mut v, format!("growth probability {name}"), p, oracle);
        if name == "photon 0.2" || name == "lossy photon fock2 0.4" {
            let (x, pp) = (0.4, -0.3);
            let val = integrate(&[band, gx], |q| bs_point(&joint, 0, 1, FRAC_PI_4, &[x, pp, q[0], q[1]])) / oracle;
            case(&mut v, format!("growth output point {name}"), out.eval(&[x, pp]), val);
        }
    }
    {
        let (p, _) = measure_x_interval(&two, 0, 0.6).unwrap();
        let q = Wig::new(&two);
        let g = scaled_rule(8, 1.0);
        let oracle = integrate(&[legendre(40, -0.6, 0.6), g.clone(), g.clone(), g], |pt| q.eval(pt));
        case(&mut v, "interval probability photon x fock2", p, oracle);
    }

    // beam splitter and loss, pointwise
    {
        let q = Wig::new(&two);
        for pt in [[0.3, -0.2, 0.5, 0.1], [1.1, 0.4, -0.6, 0.8]] {
            case(&mut v, format!("beam splitter at {pt:?}"), mixed.eval(&pt), bs_point(&q, 0, 1, 0.4, &pt));
        }
        let qf = Wig::new(&f2);
        let eta: f64 = 0.35;
        let th = eta.sqrt().acos();
        for pt in [[0.2, 0.9], [-1.3, 0.5]] {
            // mix with a vacuum ancilla and integrate the ancilla out
            let vac = Wig::new(&vacuum());
            let joint = |z: &[f64]| {
                let (x, xa) = rot(pt[0], z[0], th);
                let (p, pa) = rot(pt[1], z[1], th);
                qf.eval(&[x, p]) * vac.eval(&[xa, pa])
            };
            let oracle = gh_all(2, 10, 1.0, joint);
            let out = loss_channel(&f2, 0, eta).unwrap();
            case(&mut v, format!("loss at {pt:?}"), out.eval(&pt), oracle);
        }
    }

    // conditioning and reduction
    {
        let w = tensor(&photon, &lossy_f2);
        let (d, _) = condition_quadrature(&w, 1, Quadrature::Position, 0.8).unwrap();
        case(&mut v, "condition x", d, marginal_oracle(&w, 1, Quadrature::Position, 0.8));
        let (d, _) = condition_quadrature(&w, 0, Quadrature::Momentum, 0.2).unwrap();
        case(&mut v, "condition p", d, marginal_oracle(&w, 0, Quadrature::Momentum, 0.2));
        let q = Wig::new(&psi2);
        let g = scaled_rule(10, 1.0);
        let oracle = integrate(&[g.clone(), g], |z| q.eval(&[0.3, -0.7, z[0], z[1]]));
        case(&mut v, "reduced psi2", reduced_state(&psi2, 0).unwrap().eval(&[0.3, -0.7]), oracle);
    }

    // pure-target overlaps through cross-Wigner functions
    for (name, w, t, ny) in [
        ("grown 1 vs squeezed cat", g1.clone(), TargetState::SqueezedSingleCat { m: 1 }, 200),
        ("grown 2 vs squeezed cat", g2.clone(), TargetState::SqueezedSingleCat { m: 2 }, 200),
        ("photon vs odd cat", photon.clone(), TargetState::SingleModeCat { theta: std::f64::consts::FRAC_PI_2, alpha: 1.1 }, 200),
        ("lossy photon vs ideal 0", photon_lossy(0.8), TargetState::IdealGrown { m: 0 }, 120),
        ("grown 2 vs ideal 2", g2.clone(), TargetState::IdealGrown { m: 2 }, 120),
    ] {
        let oracle = target_overlap(&w, &t.terms(), 40, -9.0, 9.0, ny);
        case(&mut v, format!("target overlap {name}"), overlap(&w, &t).unwrap(), oracle);
    }

    // connection
    let conn = connect(&g1, &g1, 0.05, 0.5).unwrap();
    {
        let tap = Wig::new(&reduced_state(&site_state(&g1, 0.05, 0.5).unwrap(), 1).unwrap());
        // vacuum projector 2π W_vac = 2 e^{-x²-p²}
        let vac = |x: f64, p: f64| 2.0 * (-x * x - p * p).exp();
        let n = 36;
        let both = |pt: &[f64], sym: bool| {
            // pt = (u_x, u_p, v_x, v_p) on the central outputs
            let (ax, bx) = rot(pt[0], pt[2], FRAC_PI_4);
            let (ap, bp) = rot(pt[1], pt[3], FRAC_PI_4);
            let w = tap.eval(&[ax, ap]) * tap.eval(&[bx, bp]);
            let (pu, pv) = (vac(pt[0], pt[1]), vac(pt[2], pt[3]));
            if sym { w * (pu - pu * pv) } else { w * (pv - pu * pv) }
        };
        let ps = gh_all(4, n, 1.0, |pt| both(pt, true));
        let pa = gh_all(4, n, 1.0, |pt| both(pt, false));
        case(&mut v, "connection probability", conn.p_connect, ps);
        case(&mut v, "connection probability both", conn.p_connect_both, ps + pa);
        let t = TargetState::PsiM { m: 1 };
        let oracle = target_overlap(&conn.state, &t.terms(), 30, -9.0, 9.0, 80);
        case(&mut v, "connection fidelity", conn.fidelity, oracle);
        let phi = TargetState::PhiFamily {
            m: 1,
            matrix: [[C64::new(0.3, 0.1), C64::new(0.8, 0.0)], [C64::new(0.5, -0.2), C64::new(0.1, 0.4)]],
        };
        let oracle = target_overlap(&conn.state, &phi.terms(), 30, -9.0, 9.0, 80);
        case(&mut v, "phi family overlap", overlap(&conn.state, &phi).unwrap(), oracle);
        let r = qubit_projection(&conn.state, 1).unwrap();
        let pm = TargetState::PhiFamily {
            m: 1,
            matrix: [[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]],
        };
        let oracle = target_overlap(&conn.state, &pm.terms(), 30, -9.0, 9.0, 80);
        case(&mut v, "qubit projection diagonal", r[1][1].re, oracle);
    }

    // polynomial targets, pointwise
    {
        let yr = legendre(80, -9.0, 9.0);
        let t = TargetState::PsiM { m: 1 }.terms();
        let pt = [0.4, 0.2, -0.5, 0.9];
        let mut s = C64::new(0.0, 0.0);
        for (cr, fr) in &t.terms {
            for (cs, fs) in &t.terms {
                let mut prod = cr.conj() * cs;
                for k in 0..2 {
                    let (f, g) = (&fr[k], &fs[k]);
                    prod *= cross_wigner(&|x| f.eval(x), &|x| g.eval(x), pt[2 * k], pt[2 * k + 1], &yr);
                }
                s += prod;
            }
        }
        case(&mut v, "psi1 wigner point", psi1.eval(&pt), s.re / t.norm_sqr());
        let t = TargetState::IdealGrown { m: 2 }.terms();
        let f = &t.terms[0].1[0];
        let w = cross_wigner(&|x| f.eval(x), &|x| f.eval(x), 0.6, -0.4, &yr).re;
        case(&mut v, "ideal grown wigner point", ig2.eval(&[0.6, -0.4]), w / t.norm_sqr());
        for (name, t) in [
            ("squeezed two-mode cat", TargetState::SqueezedTwoModeCat { m: 2 }.terms()),
            ("psi 3", TargetState::PsiM { m: 3 }.terms()),
        ] {
            case(&mut v, format!("target norm {name}"), t.norm_sqr(), terms_norm(&t, -12.0, 12.0, 160));
        }
        let t = TargetState::SqueezedTwoModeCat { m: 2 };
        let oracle = target_overlap(&psi2, &t.terms(), 44, -10.0, 10.0, 160);
        case(&mut v, "psi2 vs squeezed two-mode cat", overlap(&psi2, &t).unwrap(), oracle);
    }

    // swapping outcome densities
    {
        let (l, r) = (psi1.clone(), conn.state.clone());
        let b = Wig::new(&reduced_state(&l.normalized(), 1).unwrap());
        let a = Wig::new(&reduced_state(&r.normalized(), 0).unwrap());
        let central = |x0: f64, pf: f64, xs: f64, p0: f64| {
            let (bx, ax) = rot(x0, xs, FRAC_PI_4);
            let (bp, ap) = rot(pf, p0, FRAC_PI_4);
            b.eval(&[bx, bp]) * a.eval(&[ax, ap])
        };
        let g = scaled_rule(12, 1.0);
        let xd = x_density(&l, &r).unwrap();
        for x0 in [0.0, 0.45, -1.2] {
            let o = integrate(&[g.clone(), g.clone(), g.clone()], |z| central(x0, z[0], z[1], z[2]));
            case(&mut v, format!("swap x density at {x0}"), xd.eval(x0), o);
        }
        let (dx, pd) = p_density_given_x(&l, &r, 0.3).unwrap();
        let o = integrate(&[g.clone(), g.clone(), g.clone()], |z| central(0.3, z[0], z[1], z[2]));
        case(&mut v, "swap density of x0", dx, o);
        let o = integrate(&[g.clone(), g.clone()], |z| central(0.3, z[0], z[1], 0.7)) / dx;
        case(&mut v, "swap p density given x0", pd.eval(0.7), o);
        for (name, ll, rr, delta) in [("psi1 connected", l.clone(), r.clone(), 0.3), ("psi2 psi2", psi2.clone(), psi2.clone(), 0.8)] {
            let bb = Wig::new(&reduced_state(&ll.normalized(), 1).unwrap());
            let aa = Wig::new(&reduced_state(&rr.normalized(), 0).unwrap());
            let gg = scaled_rule(14, 1.0);
            let o = integrate(&[legendre(40, -delta, delta), gg.clone(), gg.clone(), gg], |z| {
                let (bx, ax) = rot(z[0], z[2], FRAC_PI_4);
                let (bp, ap) = rot(z[1], z[3], FRAC_PI_4);
                bb.eval(&[bx, bp]) * aa.eval(&[ax, ap])
            });
            case(&mut v, format!("swap success {name}"), success_probability(&ll, &rr, delta).unwrap(), o);
        }
        let (x0, p0) = (0.2, -0.5);
        let (dens, st) = conditional_state(&l, &r, x0, p0).unwrap();
        let o = integrate(&[g.clone(), g.clone()], |z| central(x0, z[0], z[1], p0));
        case(&mut v, "swap joint outcome density", dens, o);
        let (lw, rw) = (Wig::new(&l.normalized()), Wig::new(&r.normalized()));
        let outer = [0.3, 0.1, -0.4, 0.6];
        let o = integrate(&[g.clone(), g], |z| {
            let (bx, ax) = rot(x0, z[1], FRAC_PI_4);
            let (bp, ap) = rot(z[0], p0, FRAC_PI_4);
            lw.eval(&[outer[0], outer[1], bx, bp]) * rw.eval(&[ax, ap, outer[2], outer[3]])
        }) / dens;
        case(&mut v, "swap conditional state point", st.eval(&outer), o);
    }

    // one-dimensional densities
    {
        let d = marginal_density(&g2, 0, Quadrature::Position).unwrap();
        let o: f64 = legendre(60, -0.5, 1.3).iter().map(|(x, w)| w * d.eval(*x)).sum();
        case(&mut v, "density mass", d.mass(-0.5, 1.3), o);
        let o: f64 = scaled_rule(20, 1.0).iter().map(|(x, w)| w * x * x * d.eval(*x)).sum();
        case(&mut v, "density second moment", d.raw_moment(2), o);
        let (_, s) = grow_step(&photon, 0.3).unwrap();
        let d = marginal_density(&s, 0, Quadrature::Momentum).unwrap();
        let o: f64 = legendre(60, 0.0, 2.0).iter().map(|(x, w)| w * d.eval(*x)).sum();
        case(&mut v, "grown momentum mass", d.mass(0.0, 2.0), o);
    }
    v
}
