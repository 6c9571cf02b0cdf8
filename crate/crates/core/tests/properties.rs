mod common;

use hqr_core::growth::grow_step;
use hqr_core::integrals::moment_sym;
use hqr_core::phase_space::*;
use hqr_core::swap::{reduced_purity, SwapRecord, SwapTargetCoeffs};
use hqr_core::target::{basis_fn, TargetState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_mode(k1: usize, k2: usize, e1: f64, e2: f64, th: f64) -> PhaseSpaceState {
    let a = loss_channel(&fock(k1).unwrap(), 0, e1).unwrap();
    let b = loss_channel(&fock(k2).unwrap(), 0, e2).unwrap();
    beam_splitter(&tensor(&a, &b), 0, 1, th).unwrap()
}

fn max_diff(a: &PhaseSpaceState, b: &PhaseSpaceState) -> f64 {
    let (x, y) = (common::Wig::new(a), common::Wig::new(b));
    let pts = [[0.1, -0.4, 0.7, 0.2], [1.2, 0.3, -0.5, -0.9], [0.0, 0.0, 0.0, 0.0]];
    pts.iter().map(|p| (x.poly(p) - y.poly(p)).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beam_splitter_inverts(k1 in 0usize..3, k2 in 0usize..3, e1 in 0.2f64..1.0, e2 in 0.2f64..1.0, th in -3.0f64..3.0, phi in -3.0f64..3.0) {
        let w = two_mode(k1, k2, e1, e2, phi);
        let back = beam_splitter(&beam_splitter(&w, 0, 1, th).unwrap(), 0, 1, -th).unwrap();
        prop_assert!(max_diff(&w, &back) < 1e-10);
    }

    #[test]
    fn loss_is_a_semigroup(k in 0usize..3, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let f = fock(k).unwrap();
        let twice = loss_channel(&loss_channel(&f, 0, e1).unwrap(), 0, e2).unwrap();
        let once = loss_channel(&f, 0, e1 * e2).unwrap();
        let (a, b) = (common::Wig::new(&twice), common::Wig::new(&once));
        for p in [[0.3, 0.1], [-1.1, 0.8], [0.0, 0.0]] {
            prop_assert!((a.poly(&p) - b.poly(&p)).abs() < 1e-9);
        }
    }

    #[test]
    fn physical_states_are_normalized_and_subunit_pure(k1 in 0usize..3, k2 in 0usize..3, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, th in -3.0f64..3.0) {
        let w = two_mode(k1, k2, e1, e2, th);
        prop_assert!((norm_integral(&w) - 1.0).abs() < 1e-10);
        prop_assert!(purity(&w) <= 1.0 + 1e-8);
        prop_assert!(w.coeffs().iter().all(|c| c.is_finite()));
    }

    #[test]
    fn conditioning_densities_sum_to_one(k1 in 0usize..3, k2 in 0usize..3, e1 in 0.2f64..1.0, th in -3.0f64..3.0, mode in 0usize..2, momentum in any::<bool>()) {
        let w = two_mode(k1, k2, e1, 1.0, th);
        let q = if momentum { Quadrature::Momentum } else { Quadrature::Position };
        let h = 0.01;
        let total: f64 = (-800..=800)
            .map(|k| condition_quadrature(&w, mode, q, k as f64 * h).unwrap().0 * h)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn growth_probability_increases_with_width(k in 1usize..3, d in 0.01f64..2.0, f in 1.05f64..3.0) {
        let s = fock(k).unwrap();
        let (p1, _) = grow_step(&s, d).unwrap();
        let (p2, _) = grow_step(&s, d * f).unwrap();
        prop_assert!(p2 > p1);
        prop_assert!(p1 > 0.0 && p2 <= 1.0 + 1e-12);
    }

    #[test]
    fn growth_output_is_even(e in 0.3f64..1.0, d in 0.01f64..2.0) {
        let s = loss_channel(&single_photon(), 0, e).unwrap();
        let (_, out) = grow_step(&s, d).unwrap();
        let c = out.coeffs();
        let sh = c.shape();
        for i in 0..sh[0] {
            for j in 0..sh[1] {
                if i % 2 == 1 || j % 2 == 1 {
                    prop_assert!(c[[i, j].as_slice()].abs() < 1e-10);
                }
            }
        }
    }
}

/// Random one-ebit targets: fold the unswapped pair through random
/// outcome histories up to four levels deep.
fn random_history(rng: &mut ChaCha8Rng) -> SwapTargetCoeffs {
    let m = rng.gen_range(1..=3);
    let levels = rng.gen_range(1..=4u32);
    fn build(m: u32, level: u32, rng: &mut ChaCha8Rng) -> SwapTargetCoeffs {
        if level == 0 {
            return SwapTargetCoeffs::psi(m);
        }
        let l = build(m, level - 1, rng);
        let r = build(m, level - 1, rng);
        let rec = SwapRecord {
            level,
            x0: rng.gen_range(-1.5..1.5),
            p0: rng.gen_range(-3.0..3.0),
            theta: rng.gen_range(0.0..std::f64::consts::TAU),
        };
        l.combine(&r, rec)
    }
    build(m, levels, rng)
}

#[test]
fn every_swap_target_holds_one_ebit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let t = random_history(&mut rng);
        worst = worst.max((reduced_purity(&t.matrix) - 0.5).abs());
        // spot-check a tenth through the phase-space form of the target
        if k % 100 == 0 {
            let w = TargetState::PhiFamily { m: t.m, matrix: t.matrix }.to_state().unwrap();
            for mode in 0..2 {
                let p = purity(&reduced_state(&w, mode).unwrap());
                assert!((p - 0.5).abs() < 1e-6, "history {k}: reduced purity {p}");
            }
        }
    }
    assert!(worst < 1e-6, "largest deviation {worst}");
}

#[test]
fn interval_moments_match_quadrature() {
    for &t in &[0.1, 1.0, 10.0] {
        let rule = common::legendre(200, -t, t);
        for n in (0..=40).step_by(2) {
            let q: f64 = rule.iter().map(|(x, w)| w * x.powi(n as i32) * (-x * x).exp()).sum();
            let v = moment_sym(n, t);
            assert!((v - q).abs() <= 1e-12 * q.abs(), "n = {n}, t = {t}: {v} vs {q}");
        }
        assert_eq!(moment_sym(3, t), 0.0);
    }
    // full line: Γ((n+1)/2); high-degree Hermite sums lose ~1e-12 to rounding
    for n in (0..=40).step_by(2) {
        let g = statrs::function::gamma::gamma((n as f64 + 1.0) / 2.0);
        let v = moment_sym(n, f64::INFINITY);
        assert!((v - g).abs() <= 1e-12 * g, "n = {n}: {v} vs {g}");
    }
    assert!((moment_sym(0, f64::INFINITY) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
}

#[test]
fn basis_functions_are_orthonormal() {
    for m in 1..=3 {
        let t = common::legendre(200, -12.0, 12.0);
        let f0 = basis_fn(m, 0);
        let f1 = basis_fn(m, 1);
        let ip = |a: &hqr_core::target::GaussPoly, b: &hqr_core::target::GaussPoly| -> f64 {
            t.iter().map(|(x, w)| w * (a.eval(*x).conj() * b.eval(*x)).re).sum()
        };
        assert!((ip(&f0, &f0) - 1.0).abs() < 1e-10);
        assert!((ip(&f1, &f1) - 1.0).abs() < 1e-10);
        assert!(ip(&f0, &f1).abs() < 1e-12);
    }
}
