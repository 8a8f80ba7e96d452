use std::collections::{BTreeMap, BTreeSet};

use ngon_theta_core::lattice::{enumerate, LatticeCoset};
use ngon_theta_core::ngon::{self, NGon};
use ngon_theta_core::quadratic::QuadraticSpace;
use ngon_theta_core::rational::{int, rat, Rational};
use ngon_theta_core::sig12::{self, UHPoint};
use ngon_theta_core::theta::{
    choose_base, completion_eval, holomorphic_series, modularity_check, CompletionOptions, EnumWindow,
    Executor, SeriesOptions, Sequential, WeilRepresentation,
};
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Positive definite forms [a,b,c] of discriminant −n with CM point in the
/// domain |Re z| ≤ ½, 1 ≤ |z|² ≤ T² + ¼. Returns (interior count, any on the boundary).
fn reduced_forms(n: i64, t: i64) -> (i64, bool) {
    let cap = |a: i64| 4 * a * t * t + a; // 4a(T² + ¼)
    let mut inside = 0;
    let mut edge = false;
    let amax = ((n as f64 / 3.0).sqrt() as i64) + 1;
    for a in 1..=amax {
        for b in -a..=a {
            if (n + b * b) % (4 * a) != 0 {
                continue;
            }
            let c = (n + b * b) / (4 * a);
            // |z|² = c/a
            let (lo, hi) = (c - a, cap(a) - 4 * c);
            if lo < 0 || hi < 0 {
                continue;
            }
            if b.abs() == a || lo == 0 || hi == 0 {
                edge = true;
            } else {
                inside += 1;
            }
        }
    }
    (inside, edge)
}

fn oracle(t: i64, nmax: i64) -> (BTreeMap<Rational, Rational>, BTreeSet<Rational>) {
    let mut coeffs = BTreeMap::new();
    let mut flagged = BTreeSet::new();
    for n in 1..=nmax {
        let (inside, edge) = reduced_forms(n, t);
        if edge {
            flagged.insert(int(n));
        } else if inside > 0 {
            coeffs.insert(int(n), int(2 * inside));
        }
    }
    (coeffs, flagged)
}

#[test]
fn reduced_form_oracle_sanity() {
    // h(−23) = 3: [1,1,6] sits above the cap at T = 2
    assert_eq!(reduced_forms(23, 2), (2, false));
    assert_eq!(reduced_forms(23, 4), (2, true));
    assert_eq!(reduced_forms(8, 2), (1, false));
    assert!(reduced_forms(3, 2).1 && reduced_forms(4, 2).1);
}

#[test]
fn class_counts_match_reduced_forms() {
    for t in [2, 4] {
        let s = sig12::truncated_class_series(&int(t), &int(60), &Sequential).unwrap();
        let (coeffs, flagged) = oracle(t, 60);
        assert_eq!(s.coeffs, coeffs, "T = {t}");
        assert_eq!(s.flagged.keys().cloned().collect::<BTreeSet<_>>(), flagged, "T = {t}");
    }
}

#[test]
fn class_counts_at_height_four() {
    let s = sig12::truncated_class_series(&int(4), &int(40), &Sequential).unwrap();
    assert_eq!(s.coefficient(&int(8)), int(2));
    assert_eq!(s.coefficient(&int(24)), int(4));
    assert_eq!(s.coefficient(&int(40)), int(4));
    for n in [3, 4, 11, 20] {
        assert!(s.flagged.contains_key(&int(n)));
    }
}

fn pt(x: Rational, y: Rational) -> UHPoint {
    UHPoint::new(x, y)
}

fn polygons() -> Vec<(&'static str, NGon)> {
    let s = sig12::form_space();
    let h = || rat(1, 2);
    let square = sig12::recover_ngon(&[pt(h(), int(1)), pt(h(), int(2)), pt(-h(), int(2)), pt(-h(), int(1))]).unwrap();
    let chain5 = sig12::recover_ngon(&(1..=5).map(|r| pt(int(r), int(1))).collect::<Vec<_>>()).unwrap();
    let triangle = sig12::recover_ngon(&[pt(int(0), int(1)), pt(int(1), int(2)), pt(int(-1), int(2))]).unwrap();
    vec![
        ("fundamental domain", sig12::fundamental_domain(&int(2))),
        ("butterfly", ngon::validate(&s, sig12::butterfly_vectors()).unwrap()),
        ("square", square),
        ("chain5", chain5),
        ("triangle", triangle),
    ]
}

#[test]
fn epsilon_vanishes_on_nonpositive_norms() {
    for (name, p) in polygons() {
        let (z0, kappa) = choose_base(&p);
        let w = EnumWindow::for_nmax(z0, kappa, 1.5, 50.0);
        let c = LatticeCoset::zero(p.space()).unwrap();
        let e = enumerate(&c, &w.z0, w.bound).unwrap();
        let mut checked = 0;
        for pnt in &e.points {
            if pnt.q.is_positive() || pnt.scaled.iter().all(|&v| v == 0) {
                continue;
            }
            let x = pnt.vector(&e.den);
            assert_eq!(p.epsilon(&x).eps, 0, "{name}: x = {x:?}");
            checked += 1;
        }
        assert!(checked > 100, "{name}: only {checked} vectors");
    }
}

#[test]
fn doubling_safety_keeps_coefficients() {
    for (name, p) in polygons() {
        let c = LatticeCoset::zero(p.space()).unwrap();
        let a = holomorphic_series(&c, &p, &SeriesOptions::new(int(30)), &Sequential).unwrap();
        let mut o = SeriesOptions::new(int(30));
        o.safety *= 2.0;
        let b = holomorphic_series(&c, &p, &o, &Sequential).unwrap();
        assert_eq!(a.coeffs, b.coeffs, "{name}");
        assert_eq!(a.flagged, b.flagged, "{name}");
        assert!(a.within_bounds(&int(2 * p.len() as i64)), "{name}");
        // x = 0 is the only vector off the positive cone that contributes, with weight w
        assert!(a.coeffs.keys().chain(a.flagged.keys()).all(|n| !n.is_negative()), "{name}");
        assert_eq!(a.coefficient(&int(0)), int(p.w()), "{name}");
    }
}

struct Reversed;

impl Executor for Reversed {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut v: Vec<(usize, T)> = (0..n).rev().map(|i| (i, f(i))).collect();
        v.reverse();
        v.into_iter().map(|(_, t)| t).collect()
    }
}

#[test]
fn evaluation_order_does_not_matter() {
    let p = sig12::fundamental_domain(&int(2));
    let c = LatticeCoset::zero(p.space()).unwrap();
    let o = SeriesOptions::new(int(25));
    let a = holomorphic_series(&c, &p, &o, &Sequential).unwrap();
    let b = holomorphic_series(&c, &p, &o, &Reversed).unwrap();
    assert_eq!(a, b);
}

#[test]
fn completion_is_cauchy_under_doubling() {
    let p = sig12::fundamental_domain(&int(2));
    let c = LatticeCoset::zero(p.space()).unwrap();
    for tau in [Complex64::new(0.0, 1.0), Complex64::new(0.3, 0.8), Complex64::new(-0.2, 1.5)] {
        let mut prev: Option<Complex64> = None;
        for n in [4, 8, 16] {
            let v = completion_eval(&c, &p, tau, &CompletionOptions::new(int(n)), &Sequential).unwrap();
            assert!(v.tail_bound.is_finite());
            if let Some(u) = prev {
                if n == 16 {
                    assert!((v.value - u).norm() <= 1e-6, "tau = {tau}: {}", (v.value - u).norm());
                }
            }
            prev = Some(v.value);
        }
    }
}

#[test]
fn completion_transforms_under_t_and_s() {
    let p = sig12::fundamental_domain(&int(2));
    let r = modularity_check(&p, Complex64::new(0.0, 1.0), &CompletionOptions::new(int(8)), &Sequential).unwrap();
    assert!(r.t_defect < 1e-8, "{}", r.t_defect);
    assert!(r.s_defect < 1e-3, "{}", r.s_defect);
    assert!(r.tail_bound.is_finite() && r.tail_bound < 1e-3);
    assert!(r.passes(1e-3));
}

#[test]
fn completion_transforms_off_the_fixed_point() {
    let p = sig12::fundamental_domain(&int(2));
    let tau = Complex64::new(0.15, 1.1);
    let r = modularity_check(&p, tau, &CompletionOptions::new(int(10)), &Sequential).unwrap();
    assert!(r.t_defect < 1e-8, "{}", r.t_defect);
    assert!(r.s_defect < 1e-3, "{}", r.s_defect);
}

#[test]
fn shifted_w_breaks_s_transform() {
    let p = sig12::fundamental_domain(&int(2));
    let mut o = CompletionOptions::new(int(8));
    o.w_shift = 4;
    let r = modularity_check(&p, Complex64::new(0.0, 1.0), &o, &Sequential).unwrap();
    assert!(r.s_defect >= 1e-1, "{}", r.s_defect);
    assert!(!r.passes(1e-3));
}

fn weil_spaces() -> Vec<QuadraticSpace> {
    vec![
        sig12::form_space(),
        QuadraticSpace::diagonal(&[2, -2, -2]),
        QuadraticSpace::diagonal(&[2, -4, -6]),
        QuadraticSpace::diagonal(&[6, -2, -2, -2]),
        QuadraticSpace::diagonal(&[2, 2, -2]),
    ]
}

#[test]
fn weil_relations() {
    for s in weil_spaces() {
        let w = WeilRepresentation::new(&s).unwrap();
        let (a, b) = w.relation_defects();
        assert!(a < 1e-10 && b < 1e-10, "{:?}: {a} {b}", s.gram());
    }
}

#[test]
fn weil_s_is_unitary() {
    for s in weil_spaces() {
        let w = WeilRepresentation::new(&s).unwrap();
        let m = w.s_matrix();
        let n = m.len();
        for i in 0..n {
            for j in 0..n {
                let d: Complex64 = (0..n).map(|k| m[i][k] * m[j][k].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).norm() < 1e-10);
            }
        }
        for ph in w.t_phases() {
            assert!((ph.norm() - 1.0).abs() < 1e-12);
        }
    }
}

/// Σ_{x ∈ μ+L} exp(πiτ(x,x)) for a positive definite diagonal lattice, by
/// direct summation over a box.
fn positive_theta(diag: &[i64], mu: &[f64], tau: Complex64) -> Complex64 {
    let r = 12i64;
    let mut acc = Complex64::zero();
    let dim = diag.len();
    let mut k = vec![-r; dim];
    'outer: loop {
        let mut n = 0.0;
        for i in 0..dim {
            let x = k[i] as f64 + mu[i];
            n += diag[i] as f64 * x * x;
        }
        acc += (Complex64::i() * std::f64::consts::PI * tau * n).exp();
        for i in 0..dim {
            if k[i] < r {
                k[i] += 1;
                continue 'outer;
            }
            k[i] = -r;
        }
        break acc;
    }
}

#[test]
fn weil_representation_matches_siegel_theta() {
    // positive definite even lattice: θ(−1/τ) = τ^{m/2} ρ(S) θ(τ), θ(τ+1) = ρ(T) θ(τ)
    let diag = [2i64, 4];
    let s = QuadraticSpace::diagonal(&diag);
    let w = WeilRepresentation::new(&s).unwrap();
    let reps: Vec<Vec<f64>> = w.group().reps().iter().map(|v| v.to_f64()).collect();
    let tau = Complex64::new(0.2, 0.9);
    let th = |t: Complex64| reps.iter().map(|mu| positive_theta(&diag, mu, t)).collect::<Vec<_>>();
    let f = th(tau);
    let ft = th(tau + 1.0);
    let fs = th(-tau.inv());
    let ph = w.t_phases();
    let sm = w.s_matrix();
    let factor = tau.powf(1.0);
    for i in 0..f.len() {
        assert!((ft[i] - ph[i] * f[i]).norm() < 1e-9);
        let rhs: Complex64 = (0..f.len()).map(|j| sm[i][j] * f[j]).sum::<Complex64>() * factor;
        assert!((fs[i] - rhs).norm() < 1e-9, "{i}: {} vs {}", fs[i], rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn series_levels_are_in_the_window(t in 2i64..6, nmax in 5i64..25) {
        let s = sig12::truncated_class_series(&int(t), &int(nmax), &Sequential).unwrap();
        let (coeffs, flagged) = oracle(t, nmax);
        prop_assert_eq!(&s.coeffs, &coeffs);
        prop_assert_eq!(s.flagged.keys().cloned().collect::<BTreeSet<_>>(), flagged);
        prop_assert!(s.coeffs.keys().all(|n| *n <= int(nmax)));
    }
}
