//! Entanglement generation by non-local photon subtraction.
//!
//! Each site taps its cat state on a beam splitter of reflectivity `r`, the
//! tapped light crosses a lossy channel, and the two taps meet on a balanced
//! beam splitter. A click in one output with vacuum in the other heralds the
//! connection.

use crate::bilinear::{join, pair_functional, KernelTerm};
use crate::error::{invalid, Result};
use crate::fit::{exp_fit, linear_fit, ExpFit, LinearFit};
use crate::growth::{grow_schedule, GrowthSchedule, SchedulePoint};
use crate::integrals::{gamma_half, moment_sym, RotationTable};
use crate::phase_space::{beam_splitter, loss_channel, single_photon, tensor, vacuum, PhaseSpaceState};
use crate::target::{overlap, TargetState};
use ndarray::{ArrayD, Axis};
use serde::Serialize;
use std::f64::consts::FRAC_PI_4;

/// Which central output clicks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Click in the port carrying `(a + b)/√2`; heralds `|0 1⟩ + |1 0⟩`.
    Symmetric,
    /// Click in the port carrying `(a − b)/√2`.
    Antisymmetric,
}

#[derive(Debug, Clone)]
pub struct ConnectionResult {
    pub state: PhaseSpaceState,
    /// Single-branch success probability.
    pub p_connect: f64,
    /// Both click branches together.
    pub p_connect_both: f64,
    /// Single-branch probability at η = 1.
    pub p_c_noloss: f64,
    pub fidelity: f64,
    pub m: u32,
}

/// Growth level implied by a one-mode state's x-degree `2^{m+1}`.
pub fn infer_level(w: &PhaseSpaceState) -> Result<u32> {
    let d = w.effective_degree(0);
    // a defective chain carries two extra powers on top of 2^{m+1}
    if d >= 4 {
        Ok(usize::BITS - 1 - d.leading_zeros() - 1)
    } else {
        invalid(format!("cannot infer growth level from x-degree {d}"))
    }
}

/// Memory mode 0, tapped mode 1 after the channel.
pub fn site_state(input: &PhaseSpaceState, r: f64, eta: f64) -> Result<PhaseSpaceState> {
    let theta = r.sqrt().asin();
    let joint = tensor(&input.normalized(), &vacuum());
    let split = beam_splitter(&joint, 0, 1, theta)?;
    loss_channel(&split, 1, eta)
}

fn vac_functional(n: usize) -> Vec<f64> {
    // √2 ∫ t^k e^{-2t²} dt, the per-variable factor of 2π W_vac
    (0..n)
        .map(|k| {
            if k % 2 == 1 {
                0.0
            } else {
                2f64.sqrt() * gamma_half(k) / 2f64.powf((k as f64 + 1.0) / 2.0)
            }
        })
        .collect()
}

fn full_functional(n: usize) -> Vec<f64> {
    (0..n).map(|k| moment_sym(k, f64::INFINITY)).collect()
}

/// `P0 ⊗ (I − P0)` on the central outputs, vacuum in the first listed port.
fn click_kernel(dx: usize, dp: usize, branch: Branch) -> Vec<KernelTerm> {
    let rot = RotationTable::new(FRAC_PI_4, dx.max(dp) - 1, dx.max(dp) - 1);
    let n = 2 * dx.max(dp);
    let vac = vac_functional(n);
    let full = full_functional(n);
    // Substitution (u, v): the v port carries (a + b)/√2.
    let (fu, fv) = match branch {
        Branch::Symmetric => (&vac, &full),
        Branch::Antisymmetric => (&full, &vac),
    };
    vec![
        KernelTerm {
            weight: 1.0,
            kx: pair_functional(&rot, dx, dx, fu, fv),
            kp: pair_functional(&rot, dp, dp, fu, fv),
        },
        KernelTerm {
            weight: -1.0,
            kx: pair_functional(&rot, dx, dx, &vac, &vac),
            kp: pair_functional(&rot, dp, dp, &vac, &vac),
        },
    ]
}

/// Two-mode (memory a, memory b) unnormalized heralded state and its probability.
fn herald(sa: &PhaseSpaceState, sb: &PhaseSpaceState, branch: Branch) -> (f64, ArrayD<f64>) {
    let la = sa.coeffs();
    // right factor needs axes (tap, memory)
    let rb = sb.coeffs().view().permuted_axes(vec![2, 3, 0, 1]).as_standard_layout().into_owned();
    let d = la.shape()[2].max(la.shape()[3]).max(rb.shape()[0]).max(rb.shape()[1]);
    let terms = click_kernel(d, d, branch);
    let w = join(la, &rb, &terms);
    let p = crate::phase_space::integrate_all(&w.view()) / (sa.weight() * sb.weight());
    (p, w)
}

pub fn connect(a_in: &PhaseSpaceState, b_in: &PhaseSpaceState, r: f64, eta: f64) -> Result<ConnectionResult> {
    if !(r > 0.0 && r < 1.0) {
        return invalid(format!("reflectivity {r} must lie in (0, 1)"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("channel transmission {eta} must lie in (0, 1]"));
    }
    if a_in.mode_count() != 1 || b_in.mode_count() != 1 {
        return invalid("connection inputs are one-mode states");
    }
    let m = infer_level(a_in)?;
    let sa = site_state(a_in, r, eta)?;
    let sb = site_state(b_in, r, eta)?;
    let (p_sym, w) = herald(&sa, &sb, Branch::Symmetric);
    let (p_anti, _) = herald(&sa, &sb, Branch::Antisymmetric);
    let p_c_noloss = if eta == 1.0 {
        p_sym
    } else {
        let na = site_state(a_in, r, 1.0)?;
        let nb = site_state(b_in, r, 1.0)?;
        herald(&na, &nb, Branch::Symmetric).0
    };
    let state = PhaseSpaceState::from_coeffs(w)?.normalized();
    let fidelity = overlap(&state, &TargetState::PsiM { m })?;
    Ok(ConnectionResult {
        state,
        p_connect: p_sym,
        p_connect_both: p_sym + p_anti,
        p_c_noloss,
        fidelity,
        m,
    })
}

fn derive(arr: &ArrayD<f64>, ax: usize) -> ArrayD<f64> {
    let d = arr.len_of(Axis(ax));
    let mut out = ArrayD::zeros(arr.raw_dim());
    for k in 1..d {
        out.index_axis_mut(Axis(ax), k - 1)
            .scaled_add(k as f64, &arr.index_axis(Axis(ax), k));
    }
    out
}

/// Exact `r → 0` heralded state `(a ± b) ρ_a⊗ρ_b (a ± b)†`, normalized.
///
/// On the polynomial part the annihilation operators act as pure
/// derivatives, so the result is `[(∂x_a ± ∂x_b)² + (∂p_a ± ∂p_b)²] (P_a P_b)`.
pub fn connect_ideal_limit(a_in: &PhaseSpaceState, b_in: &PhaseSpaceState, branch: Branch) -> Result<PhaseSpaceState> {
    if a_in.mode_count() != 1 || b_in.mode_count() != 1 {
        return invalid("connection inputs are one-mode states");
    }
    let s = if branch == Branch::Symmetric { 1.0 } else { -1.0 };
    let joint = tensor(&a_in.normalized(), &b_in.normalized());
    let c = joint.coeffs();
    let mut out = ArrayD::zeros(c.raw_dim());
    for (ax_a, ax_b) in [(0, 2), (1, 3)] {
        let da = derive(c, ax_a);
        let db = derive(c, ax_b);
        let mut first = da.clone();
        first.scaled_add(s, &db);
        out = out + derive(&first, ax_a);
        out.scaled_add(s, &derive(&first, ax_b));
    }
    Ok(PhaseSpaceState::from_coeffs(out)?.normalized())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub m: u32,
    pub r: f64,
    pub eta: f64,
    pub p_connect: f64,
    pub p_connect_both: f64,
    pub p_c_noloss: f64,
    pub fidelity: f64,
}

pub fn scan_r(a_in: &PhaseSpaceState, b_in: &PhaseSpaceState, rs: &[f64], eta: f64) -> Result<Vec<ScanPoint>> {
    rs.iter()
        .map(|&r| {
            let c = connect(a_in, b_in, r, eta)?;
            Ok(ScanPoint {
                m: c.m,
                r,
                eta,
                p_connect: c.p_connect,
                p_connect_both: c.p_connect_both,
                p_c_noloss: c.p_c_noloss,
                fidelity: c.fidelity,
            })
        })
        .collect()
}

/// Largest single-branch `P/η` on the default slope-fit grid.
pub const SLOPE_FIT_MAX_P: f64 = 0.08;

/// Reflectivity at which the lossless single-branch probability reaches `p`.
pub fn r_for_probability(a_in: &PhaseSpaceState, b_in: &PhaseSpaceState, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("target probability {p} must lie in (0, 0.5)"));
    }
    let prob = |r: f64| connect(a_in, b_in, r, 1.0).map(|c| c.p_connect);
    // P grows monotonically and nearly linearly in r for small r
    let (mut lo, mut hi) = (0.0, 1e-3);
    while prob(hi)? < p {
        lo = hi;
        hi = (hi * 2.0).min(0.999);
        if hi >= 0.999 {
            return invalid(format!("probability {p} not reachable"));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if prob(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ten reflectivities spanning single-branch `P/η` up to [`SLOPE_FIT_MAX_P`].
pub fn default_r_grid(a_in: &PhaseSpaceState, b_in: &PhaseSpaceState) -> Result<Vec<f64>> {
    let top = r_for_probability(a_in, b_in, SLOPE_FIT_MAX_P)?;
    Ok((1..=10).map(|k| top * k as f64 / 10.0).collect())
}

/// Linear fit of fidelity against single-branch `P/η`; `b = −slope`.
pub fn fit_connection_slope(points: &[ScanPoint]) -> LinearFit {
    let xs: Vec<f64> = points.iter().map(|p| p.p_connect / p.eta).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.fidelity).collect();
    linear_fit(&xs, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct ImperfectionPoint {
    pub m: u32,
    pub deltas: Vec<f64>,
    pub rate: f64,
    pub fidelity: f64,
}

/// Connection fidelity in the `r → 0` limit for grown inputs along a set of schedules.
pub fn scan_growth_imperfection(points: &[SchedulePoint], m: u32) -> Result<Vec<ImperfectionPoint>> {
    let target = TargetState::PsiM { m };
    points
        .iter()
        .map(|p| {
            let g = grow_schedule(&single_photon(), &GrowthSchedule::new(p.deltas.clone())?)?;
            let st = connect_ideal_limit(&g.state, &g.state, Branch::Symmetric)?;
            Ok(ImperfectionPoint {
                m,
                deltas: p.deltas.clone(),
                rate: g.rate,
                fidelity: overlap(&st, &target)?,
            })
        })
        .collect()
}

/// Lowest fidelity kept in the imperfection fit.
pub const IMPERFECTION_FIT_FLOOR: f64 = 0.9;

/// `F = 1 − c·e^{d·R}` fit over the scanned points with `F ≥ floor`.
pub fn fit_growth_imperfection(points: &[ImperfectionPoint], floor: f64) -> Result<ExpFit> {
    let kept: Vec<&ImperfectionPoint> = points.iter().filter(|p| p.fidelity >= floor && p.fidelity < 1.0).collect();
    let xs: Vec<f64> = kept.iter().map(|p| p.rate).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.fidelity).collect();
    exp_fit(&xs, &ys)
}
