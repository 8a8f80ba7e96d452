use ngon_theta_core::errfn::{self, ErrorFunction};
use ngon_theta_core::rational::{int, rat};
use ngon_theta_core::{FloatTolerance, QuadraticSpace, Vector};
use proptest::prelude::*;

fn ip(s: &QuadraticSpace, x: &[f64], y: &[f64]) -> f64 {
    s.inner_f64(x, y)
}

/// Orthonormal frame (w.r.t. −(,)) of span(cs), by Gram–Schmidt in floats.
fn frame(s: &QuadraticSpace, cs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut us: Vec<Vec<f64>> = Vec::new();
    for c in cs {
        let mut v = c.clone();
        for u in &us {
            let k = -ip(s, &v, u);
            for (a, b) in v.iter_mut().zip(u) {
                *a -= k * b;
            }
        }
        let n = (-ip(s, &v, &v)).sqrt();
        us.push(v.iter().map(|a| a / n).collect());
    }
    us
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// ∫ sgn(t) e^{−π(t−a)²} dt by composite Simpson, split at 0.
fn e1_oracle(a: f64) -> f64 {
    let g = |t: f64| (-std::f64::consts::PI * (t - a) * (t - a)).exp();
    let lo = a - 9.0;
    let hi = a + 9.0;
    let neg = if lo < 0.0 { simpson(g, lo, hi.min(0.0), 4000) } else { 0.0 };
    let pos = if hi > 0.0 { simpson(g, lo.max(0.0), hi, 4000) } else { 0.0 };
    pos - neg
}

/// ∫_0^∞ r e^{−π|r e − ξ|²} dr for a unit direction e.
fn radial(xi: [f64; 2], e: [f64; 2]) -> f64 {
    let pi = std::f64::consts::PI;
    let a = xi[0] * e[0] + xi[1] * e[1];
    let s = xi[0] * xi[0] + xi[1] * xi[1];
    let core = (-pi * a * a).exp() / (2.0 * pi) + 0.5 * a * (1.0 + libm::erf(pi.sqrt() * a));
    core * (-pi * (s - a * a)).exp()
}

/// E2 by summing the Gaussian over the four sign-constant sectors of the
/// plane, each in polar coordinates about the origin.
fn e2_polar_oracle(n1: [f64; 2], n2: [f64; 2], xi: [f64; 2]) -> f64 {
    let pi = std::f64::consts::PI;
    let mut cuts: Vec<f64> = Vec::new();
    for n in [n1, n2] {
        let t = n[1].atan2(n[0]) + pi / 2.0;
        for k in [t, t + pi] {
            cuts.push(k.rem_euclid(2.0 * pi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.push(cuts[0] + 2.0 * pi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let e = [mid.cos(), mid.sin()];
        let sg = (n1[0] * e[0] + n1[1] * e[1]).signum() * (n2[0] * e[0] + n2[1] * e[1]).signum();
        if w[1] - w[0] < 1e-15 {
            continue;
        }
        total += sg * simpson(|t| radial(xi, [t.cos(), t.sin()]), w[0], w[1], 2000);
    }
    total
}

fn sig22() -> QuadraticSpace {
    QuadraticSpace::diagonal(&[2, 2, -2, -2])
}

fn sig13() -> QuadraticSpace {
    QuadraticSpace::diagonal(&[2, -2, -2, -2])
}

fn v(c: &[i64]) -> Vector {
    Vector::from_ints(c)
}

fn tol() -> FloatTolerance {
    FloatTolerance::default()
}

#[test]
fn e1_matches_one_dimensional_quadrature() {
    let s = sig22();
    let c = v(&[1, 0, 2, 1]);
    let cf = c.to_f64();
    let cn = (-ip(&s, &cf, &cf)).sqrt();
    for x in [[0.3, -0.2, 0.1, 0.7], [1.0, 2.0, -0.5, 0.25], [0.0, 0.0, 0.0, 0.0], [-2.0, 1.0, 0.4, -0.9]] {
        let got = errfn::e1(&s, &c, &x).unwrap();
        let a = ip(&s, &x, &cf) / cn;
        let want = e1_oracle(a);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn e2_matches_polar_sectors() {
    let s = sig22();
    let pairs = [(v(&[1, 0, 2, 1]), v(&[0, 1, -1, 2])), (v(&[0, 0, 1, 0]), v(&[1, 1, 3, 3])), (v(&[1, 0, 3, 0]), v(&[0, 0, -1, 1]))];
    let xs = [[0.2, -0.4, 0.3, 0.1], [1.5, 0.5, -0.7, 0.2], [0.0, 0.0, 0.05, -0.02]];
    for (c1, c2) in &pairs {
        let us = frame(&s, &[c1.to_f64(), c2.to_f64()]);
        let n = |c: &Vector| [ip(&s, &us[0], &c.to_f64()), ip(&s, &us[1], &c.to_f64())];
        for x in &xs {
            let xi = [-ip(&s, x, &us[0]), -ip(&s, x, &us[1])];
            let want = e2_polar_oracle(n(c1), n(c2), xi);
            let got = errfn::e2(&s, c1, c2, x, &tol()).unwrap();
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }
}

#[test]
fn e2_parallel_arguments() {
    let s = sig22();
    let c = v(&[1, 0, 2, 1]);
    let x = [0.3, 0.1, 0.2, 0.5];
    assert_eq!(errfn::e2(&s, &c, &c, &x, &tol()).unwrap(), 1.0);
    assert_eq!(errfn::e2(&s, &c, &c.scale(&int(-2)), &x, &tol()).unwrap(), -1.0);
}

#[test]
fn factorization_on_orthogonal_data() {
    let s = sig13();
    let (c1, c2, c3) = (v(&[0, 1, 0, 0]), v(&[0, 0, 2, 0]), v(&[0, 0, 0, 3]));
    for x in [[0.4, 0.3, -0.2, 0.1], [1.0, -0.05, 0.6, -0.3], [0.0, 0.9, 0.8, 0.7]] {
        let (a, b, c) = (errfn::e1(&s, &c1, &x).unwrap(), errfn::e1(&s, &c2, &x).unwrap(), errfn::e1(&s, &c3, &x).unwrap());
        let e2 = errfn::e2(&s, &c1, &c2, &x, &tol()).unwrap();
        let e3 = errfn::e3(&s, &c1, &c2, &c3, &x, &tol()).unwrap();
        assert!((e2 - a * b).abs() < 1e-8, "{e2} vs {}", a * b);
        assert!((e3 - a * b * c).abs() < 1e-8, "{e3} vs {}", a * b * c);
    }
}

#[test]
fn e3_slicing_axes_agree() {
    let s = sig13();
    let cs = [v(&[1, 2, 1, 0]), v(&[0, 1, -1, 1]), v(&[1, 0, 1, 3])];
    let f = ErrorFunction::new(&s, &cs, &tol()).unwrap();
    let x = [0.3, -0.2, 0.5, 0.1];
    let a = f.eval_with_axis(&x, 0).unwrap();
    for k in 1..3 {
        assert!((f.eval_with_axis(&x, k).unwrap() - a).abs() < 1e-9);
    }
}

#[test]
fn degenerate_plane_rejected() {
    let s = sig22();
    let c1 = v(&[0, 0, 1, 0]);
    let c2 = Vector::new(vec![int(0), int(0), int(1), rat(1, 1_000_000)]);
    assert!(ErrorFunction::new(&s, &[c1, c2], &tol()).is_err());
}

fn neg(s: &QuadraticSpace, c: &Vector) -> bool {
    s.q(c).unwrap() < int(0)
}

fn negative_pair(s: &QuadraticSpace, a: &Vector, b: &Vector) -> bool {
    let aa = s.inner(a, a).unwrap();
    let bb = s.inner(b, b).unwrap();
    let ab = s.inner(a, b).unwrap();
    neg(s, a) && neg(s, b) && &aa * &bb - &ab * &ab > rat(1, 1) * &aa * &bb / int(20)
}

fn small() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, 4)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 4)
}

/// Adds a vector orthogonal to span(cs).
fn shift_perp(s: &QuadraticSpace, cs: &[Vec<f64>], x: &[f64], w: &[f64]) -> Vec<f64> {
    let us = frame(s, cs);
    let mut p = w.to_vec();
    for u in &us {
        let k = -ip(s, &p, u);
        for (a, b) in p.iter_mut().zip(u) {
            *a -= k * b;
        }
    }
    x.iter().zip(&p).map(|(a, b)| a + b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn e2_bounded_symmetric_and_invariant(a in small(), b in small(), x in point(), w in point(), l in 1i64..6, m in 1i64..6) {
        let s = sig22();
        let (c1, c2) = (v(&a), v(&b));
        prop_assume!(negative_pair(&s, &c1, &c2));
        let e = errfn::e2(&s, &c1, &c2, &x, &tol()).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-12);
        let sym = errfn::e2(&s, &c2, &c1, &x, &tol()).unwrap();
        prop_assert!((e - sym).abs() < 1e-8);
        let scaled = errfn::e2(&s, &c1.scale(&int(l)), &c2.scale(&rat(m, 3)), &x, &tol()).unwrap();
        prop_assert!((e - scaled).abs() < 1e-8);
        let xp = shift_perp(&s, &[c1.to_f64(), c2.to_f64()], &x, &w);
        let proj = errfn::e2(&s, &c1, &c2, &xp, &tol()).unwrap();
        prop_assert!((e - proj).abs() < 1e-8, "{} vs {}", e, proj);
    }

    #[test]
    fn e3_bounded_and_projection_invariant(a in small(), b in small(), c in small(), x in point(), w in point()) {
        let s = sig13();
        let cs = [v(&a), v(&b), v(&c)];
        prop_assume!(cs.iter().all(|c| neg(&s, c)));
        let f = ErrorFunction::new(&s, &cs, &tol());
        prop_assume!(f.is_ok());
        let f = f.unwrap();
        let e = f.eval(&x).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-12);
        let xp = shift_perp(&s, &cs.iter().map(Vector::to_f64).collect::<Vec<_>>(), &x, &w);
        prop_assert!((e - f.eval(&xp).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn e2_tends_to_sign_product(a in small(), b in small(), dir in point()) {
        let s = sig22();
        let (c1, c2) = (v(&a), v(&b));
        prop_assume!(negative_pair(&s, &c1, &c2));
        let us = [c1.to_f64(), c2.to_f64()];
        let units: Vec<Vec<f64>> = us.iter().map(|c| {
            let n = (-ip(&s, c, c)).sqrt();
            c.iter().map(|t| t / n).collect()
        }).collect();
        let margin = units.iter().map(|u| ip(&s, &dir, u).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 1e-3);
        let r = 4.0 / margin;
        let x: Vec<f64> = dir.iter().map(|t| t * r).collect();
        let want = units.iter().map(|u| ip(&s, &x, u).signum()).product::<f64>();
        let got = errfn::e2(&s, &c1, &c2, &x, &tol()).unwrap();
        prop_assert!((got - want).abs() <= 1e-6, "{} vs {}", got, want);
    }
}
