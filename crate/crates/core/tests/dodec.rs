use ngon_theta_core::dodec::{self, bar, recipe, DodecCombinatorics, DodecData, FACES};
use ngon_theta_core::lattice::LatticeCoset;
use ngon_theta_core::quadratic::Vector;
use ngon_theta_core::rational::{self, int, rat, Rational};
use ngon_theta_core::theta::{SeriesOptions, Sequential};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_t(rng: &mut ChaCha8Rng, den: i64) -> Vec<Rational> {
    (0..FACES).map(|_| rat(rng.gen_range(-den / 20..=den / 20), den)).collect()
}

fn random_x(rng: &mut ChaCha8Rng) -> Vector {
    Vector::new((0..4).map(|_| rat(rng.gen_range(-50..=50), rng.gen_range(1..=12))).collect())
}

#[test]
fn recipe_regenerates_table() {
    let table = DodecCombinatorics::cycle_table();
    let r = DodecCombinatorics::from_recipe(*table.cycle(0)).unwrap();
    assert!(r.same_as(&table));
}

#[test]
fn recipe_example_four_to_five() {
    // (2̄, 5, 0, 3, 1̄) ↦ (0, 4, 2̄, 3̄, 1)
    let f4 = [bar(2), 5, 0, 3, bar(1)];
    assert!(dodec::same_cycle(&f4, DodecCombinatorics::cycle_table().cycle(4)));
    let f5 = recipe(4, &f4);
    assert_eq!(f5, [0, 4, bar(2), bar(3), 1]);
    assert!(dodec::same_cycle(&f5, DodecCombinatorics::cycle_table().cycle(5)));
}

#[test]
fn recipe_holds_for_every_adjacent_pair() {
    let t = DodecCombinatorics::cycle_table();
    for i in 0..FACES {
        let c = t.cycle(i);
        for k in 0..5 {
            let j = c[k];
            let rotated: [usize; 5] = std::array::from_fn(|m| c[(k + 4 + m) % 5]);
            assert!(dodec::same_cycle(&recipe(i, &rotated), t.cycle(j)), "{i} -> {j}");
        }
    }
}

#[test]
fn twenty_vertices_three_faces_each() {
    let t = DodecCombinatorics::cycle_table();
    assert_eq!(t.vertices().len(), 20);
    for v in t.vertices() {
        assert_eq!(t.incidence(v), 3);
        assert!(t.adjacent(v[0], v[1]) && t.adjacent(v[1], v[2]) && t.adjacent(v[0], v[2]));
    }
    for i in 0..FACES {
        assert!(!t.adjacent(i, i) && !t.adjacent(i, bar(i)));
        for j in 0..FACES {
            assert_eq!(t.adjacent(i, j), t.adjacent(j, i));
        }
        // the involution maps the cycle of a to the reversed, barred cycle of ā
        let c = t.cycle(i);
        let mirrored: [usize; 5] = std::array::from_fn(|k| bar(c[(5 - k) % 5]));
        assert!(dodec::same_cycle(&mirrored, t.cycle(bar(i))));
    }
}

#[test]
fn cycles_are_clockwise_on_a_real_dodecahedron() {
    // neighbours are the five nearest normals, listed clockwise seen from outside
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let n: Vec<[f64; 3]> = dodec::dodecahedron_normals(&rational::from_f64(phi).unwrap())
        .iter()
        .map(|v| [rational::to_f64(&v[0]), rational::to_f64(&v[1]), rational::to_f64(&v[2])])
        .collect();
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cross = |a: &[f64; 3], b: &[f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let t = DodecCombinatorics::cycle_table();
    for i in 0..FACES {
        let mut near: Vec<usize> = (0..FACES).filter(|&j| j != i).collect();
        near.sort_by(|&a, &b| dot(&n[i], &n[b]).total_cmp(&dot(&n[i], &n[a])));
        let mut want = near[..5].to_vec();
        want.sort();
        let mut got = t.cycle(i).to_vec();
        got.sort();
        assert_eq!(got, want, "face {i}");
        let c = t.cycle(i);
        for k in 0..5 {
            let turn = dot(&cross(&n[c[k]], &n[c[(k + 1) % 5]]), &n[i]);
            assert!(turn < 0.0, "face {i} turns the wrong way at {k}");
        }
    }
}

#[test]
fn seed_validates_at_zero_and_small_t() {
    let d = dodec::standard_seed(1, &vec![Rational::zero(); FACES]).unwrap();
    assert!(d.combinatorics().vertices().len() == 20);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = random_t(&mut rng, 400);
        let d = dodec::standard_seed(1, &t).unwrap();
        for i in 0..FACES {
            assert!(matches!(d.face_w(i), -1 | 3), "face {i}: w = {}", d.face_w(i));
        }
    }
}

#[test]
fn broken_seed_is_rejected() {
    let (space, basis, v0) = dodec::standard_frame(1);
    let mut cs = dodec::seed_construction(&space, &basis, &v0, &vec![Rational::zero(); FACES]).unwrap();
    cs.swap(1, 3);
    assert!(!dodec::violations(&space, &cs).unwrap().is_empty());
    assert!(dodec::validate_dodec(&space, cs).is_err());
}

fn sampled_seed(seed: u64) -> DodecData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dodec::standard_seed(1, &random_t(&mut rng, 400)).unwrap()
}

#[test]
fn eight_p_is_integral() {
    let d = sampled_seed(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = 0;
    while seen < 200 {
        let x = random_x(&mut rng);
        if !d.regular(&x) {
            continue;
        }
        seen += 1;
        assert!((d.p_kernel(&x) * int(8)).is_integer());
    }
}

/// 𝒫(x) by the picture: zero off the positive cone, otherwise −s when all
/// (x, C_i) share the sign s (x^⊥ inside the polytope) and zero when they do not.
fn p_by_polytope(d: &DodecData, x: &[f64]) -> i32 {
    let s = d.space();
    if s.inner_f64(x, x) <= 0.0 {
        return 0;
    }
    let signs: Vec<f64> = d.cs().iter().map(|c| s.inner_f64(x, &c.to_f64()).signum()).collect();
    if signs.iter().all(|&v| v == signs[0]) {
        -signs[0] as i32
    } else {
        0
    }
}

#[test]
fn p_matches_point_in_polytope() {
    // box half-width about 1.3× the circumradius of the polytope in the chart x0 = 100
    for (a, t, r) in [(1, rat(1, 4), 20), (3, rat(9, 20), 90)] {
        let d = dodec::standard_seed(a, &vec![t; FACES]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut inside, mut total) = (0, 0);
        while total < 800 {
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            let mut c = vec![int(sign * 100)];
            c.extend((0..3).map(|_| rat(rng.gen_range(-r..=r), 1)));
            let x = Vector::new(c);
            if !d.regular(&x) {
                continue;
            }
            total += 1;
            let want = p_by_polytope(&d, &x.to_f64());
            inside += (want != 0) as usize;
            assert_eq!(d.p_kernel(&x), int(want as i64), "a = {a}, x = {x:?}");
        }
        assert!(inside > 50, "a = {a}: {inside} inside");
    }
}

#[test]
fn p_is_odd() {
    let d = sampled_seed(6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let x = random_x(&mut rng);
        let neg = Vector::new(x.0.iter().map(|c| -c).collect());
        assert_eq!(d.p_kernel(&neg), -d.p_kernel(&x));
    }
}

#[test]
fn d_is_constant_on_negative_vectors() {
    let d = sampled_seed(8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut seen = 0;
    while seen < 100 {
        let v = random_x(&mut rng);
        if !d.space().q(&v).unwrap().is_negative() || !d.regular(&v) {
            continue;
        }
        seen += 1;
        assert_eq!(d.p_kernel_with(&v, &v).unwrap(), Rational::zero());
        assert_eq!(&d.d_kernel(&v), d.d_at_negative());
    }
}

#[test]
fn completion_tends_to_minus_d() {
    let d = dodec::standard_seed(3, &vec![rat(9, 20); FACES]).unwrap();
    for x in [[1.0, 0.05, 0.02, -0.03], [1.0, 0.4, 0.3, 0.1], [0.2, 0.5, -0.3, 0.4], [-1.0, 0.02, 0.03, 0.01]] {
        let xr = Vector::new(x.iter().map(|&v| rational::from_f64(v).unwrap()).collect());
        let dx = rational::to_f64(&d.d_kernel(&xr));
        let xs: Vec<f64> = x.iter().map(|v| v * 8.0).collect();
        let j0 = d.e_kernel(&xs).unwrap() + dx;
        assert!(j0.abs() < 1e-6, "x = {x:?}: {j0:e}");
    }
}

#[test]
fn completion_is_continuous_across_a_wall() {
    let d = dodec::standard_seed(3, &vec![rat(9, 20); FACES]).unwrap();
    let s = d.space();
    let c0 = d.cs()[0].to_f64();
    let base = [1.0, 0.3, -0.2, 0.1];
    // push base onto the wall (x, C_0) = 0, then step off it both ways
    let lam = s.inner_f64(&base, &c0) / s.inner_f64(&c0, &c0);
    let wall: Vec<f64> = base.iter().zip(&c0).map(|(b, c)| b - lam * c).collect();
    let at = |h: f64| -> f64 {
        let x: Vec<f64> = wall.iter().zip(&c0).map(|(w, c)| w + h * c).collect();
        d.e_kernel(&x).unwrap()
    };
    let (lo, mid, hi) = (at(-1e-6), at(0.0), at(1e-6));
    assert!((lo - mid).abs() < 1e-4 && (hi - mid).abs() < 1e-4, "{lo} {mid} {hi}");
    // while the sign kernel jumps there
    let step = |h: f64| {
        let x: Vec<f64> = wall.iter().zip(&c0).map(|(w, c)| w + h * c).collect();
        Vector::new(x.iter().map(|&v| rational::from_f64(v).unwrap()).collect())
    };
    assert_ne!(d.d_kernel(&step(-1e-3)), d.d_kernel(&step(1e-3)));
}

#[test]
fn odd_kernel_kills_symmetric_cosets() {
    let d = dodec::standard_seed(3, &vec![rat(9, 20); FACES]).unwrap();
    let mut o = SeriesOptions::new(int(6));
    o.normalized = false;
    let zero = LatticeCoset::zero(d.space()).unwrap();
    let s = dodec::dodec_series(&zero, &d, &o, &Sequential).unwrap();
    assert!(s.coeffs.is_empty(), "{:?}", s.coeffs);
    let mu = Vector::new(vec![rat(1, 6), int(0), int(0), int(0)]);
    let c = LatticeCoset::new(d.space(), mu).unwrap();
    let s = dodec::dodec_series(&c, &d, &o, &Sequential).unwrap();
    assert!(!s.coeffs.is_empty());
    assert!(s.coeffs.values().chain(s.flagged.values()).all(|v| v.is_integer()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_vanishes_off_positive_cone(c in proptest::collection::vec((-40i64..=40, 1i64..=9), 4)) {
        let d = dodec::standard_seed(1, &vec![rat(1, 20); FACES]).unwrap();
        let x = Vector::new(c.iter().map(|&(p, q)| rat(p, q)).collect());
        prop_assume!(d.regular(&x));
        prop_assume!(!d.space().q(&x).unwrap().is_positive());
        prop_assert_eq!(d.p_kernel(&x), Rational::zero());
    }

    #[test]
    fn p_is_scale_invariant(c in proptest::collection::vec((-40i64..=40, 1i64..=9), 4), k in 1i64..20) {
        let d = dodec::standard_seed(1, &vec![rat(1, 20); FACES]).unwrap();
        let x = Vector::new(c.iter().map(|&(p, q)| rat(p, q)).collect());
        prop_assert_eq!(d.p_kernel(&x.scale(&rat(k, 7))), d.p_kernel(&x));
    }
}
