//! The signature (1,2) model: binary quadratic forms [a,b,c] as traceless
//! matrices [[b,2c],[−2a,−b]], the upper half-plane, and polygons built from
//! hyperbolic cross products.
//!
//! Two coordinate systems are used. Form coordinates (a,b,c) carry the lattice
//! Z³ with Gram [[0,0,4],[0,−2,0],[4,0,0]], so Q = 4ac − b². The orthogonal
//! basis e1 = [[0,1],[−1,0]], e2 = [[1,0],[0,−1]], e3 = [[0,−1],[−1,0]] gives
//! coordinates (a+c, b, a−c) with Gram diag(2,−2,−2).

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::{Signed, Zero};

use crate::lattice::LatticeCoset;
use crate::ngon::{self, NGon, NGonError};
use crate::quadratic::{QuadraticSpace, Vector};
use crate::rational::{self, int, rat, Rational};
use crate::theta::{self, Executor, QExpansion, SeriesOptions, ThetaError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Sig12Error {
    #[error("points {0}, {1}, {2} are collinear on a geodesic")]
    Collinear(usize, usize, usize),
    #[error("total turning is −1: {0} right turns")]
    TotalTurning(usize),
    #[error("need at least 3 points, got {0}")]
    TooFew(usize),
    #[error("point {0} is not in the upper half-plane")]
    NotUpper(usize),
    #[error(transparent)]
    NGon(#[from] NGonError),
    #[error("vector is not positive: Q = {0}")]
    NotPositive(Rational),
    #[error("x is not regular: (x,C_{0}) = 0")]
    NonRegular(usize),
    #[error("winding could not separate the curve from the CM point")]
    Unresolved,
}

/// z = x + iy with y > 0, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct UHPoint {
    pub x: Rational,
    pub y: Rational,
}

impl UHPoint {
    pub fn new(x: Rational, y: Rational) -> Self {
        UHPoint { x, y }
    }

    pub fn abs2(&self) -> Rational {
        &self.x * &self.x + &self.y * &self.y
    }
}

/// [a,b,c], i.e. the matrix [[b,2c],[−2a,−b]].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormVector {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
}

impl FormVector {
    pub fn new(a: Rational, b: Rational, c: Rational) -> Self {
        FormVector { a, b, c }
    }

    pub fn ints(a: i64, b: i64, c: i64) -> Self {
        FormVector { a: int(a), b: int(b), c: int(c) }
    }

    /// From the traceless matrix [[p,q],[r,−p]].
    pub fn from_matrix(p: Rational, q: Rational, r: Rational) -> Self {
        FormVector { a: -r / int(2), b: p, c: q / int(2) }
    }

    pub fn to_vector(&self) -> Vector {
        Vector::new(alloc::vec![self.a.clone(), self.b.clone(), self.c.clone()])
    }

    pub fn from_vector(v: &Vector) -> Self {
        FormVector { a: v[0].clone(), b: v[1].clone(), c: v[2].clone() }
    }

    /// Q = 4ac − b².
    pub fn q(&self) -> Rational {
        int(4) * &self.a * &self.c - &self.b * &self.b
    }

    /// (α,β,γ) in the orthogonal basis.
    pub fn to_e(&self) -> Vector {
        Vector::new(alloc::vec![&self.a + &self.c, self.b.clone(), &self.a - &self.c])
    }

    pub fn from_e(e: &Vector) -> Self {
        let h = rat(1, 2);
        FormVector { a: (&e[0] + &e[2]) * &h, b: e[1].clone(), c: (&e[0] - &e[2]) * &h }
    }

    /// The point of ℍ cut out by a positive vector (the same for ±x).
    pub fn cm_point(&self) -> Result<(f64, f64), Sig12Error> {
        let q = self.q();
        if !q.is_positive() {
            return Err(Sig12Error::NotPositive(q));
        }
        let a = rational::to_f64(&self.a);
        let x = -rational::to_f64(&self.b) / (2.0 * a);
        let y = libm::sqrt(rational::to_f64(&q)) / (2.0 * libm::fabs(a));
        Ok((x, y))
    }
}

/// The space in form coordinates: Gram [[0,0,4],[0,−2,0],[4,0,0]].
pub fn form_space() -> QuadraticSpace {
    let z = || int(0);
    QuadraticSpace::with_signature(
        alloc::vec![
            alloc::vec![z(), z(), int(4)],
            alloc::vec![z(), int(-2), z()],
            alloc::vec![int(4), z(), z()],
        ],
        1,
        2,
    )
    .expect("sig (1,2)")
}

/// The space in the orthogonal basis: diag(2,−2,−2).
pub fn e_space() -> QuadraticSpace {
    QuadraticSpace::diagonal(&[2, -2, -2])
}

pub fn e1() -> FormVector {
    FormVector::new(rat(1, 2), int(0), rat(1, 2))
}

pub fn e2() -> FormVector {
    FormVector::ints(0, 1, 0)
}

pub fn e3() -> FormVector {
    FormVector::new(rat(1, 2), int(0), rat(-1, 2))
}

/// X(z) = [1/(2y), −x/y, |z|²/(2y)], with Q(X(z)) = 1.
pub fn point_to_vector(z: &UHPoint) -> FormVector {
    let two_y = int(2) * &z.y;
    FormVector { a: two_y.recip(), b: -&z.x / &z.y, c: z.abs2() / two_y }
}

/// Hyperbolic cross product in the orthogonal basis.
pub fn cross(u0: &Vector, u1: &Vector) -> Vector {
    let (a0, b0, c0) = (&u0[0], &u0[1], &u0[2]);
    let (a1, b1, c1) = (&u1[0], &u1[1], &u1[2]);
    Vector::new(alloc::vec![
        b0 * c1 - c0 * b1,
        a0 * c1 - c0 * a1,
        -(a0 * b1 - b0 * a1),
    ])
}

fn cross_f(u0: &[f64; 3], u1: &[f64; 3]) -> [f64; 3] {
    [
        u0[1] * u1[2] - u0[2] * u1[1],
        u0[0] * u1[2] - u0[2] * u1[0],
        -(u0[0] * u1[1] - u0[1] * u1[0]),
    ]
}

/// Y(z1,z2) = X(z1) × X(z2) as a form vector.
pub fn chord(z1: &UHPoint, z2: &UHPoint) -> FormVector {
    FormVector::from_e(&cross(&point_to_vector(z1).to_e(), &point_to_vector(z2).to_e()))
}

/// The turning quantity at z2; positive for a left turn.
pub fn alpha(z1: &UHPoint, z2: &UHPoint, z3: &UHPoint) -> Rational {
    let (n1, n2, n3) = (z1.abs2(), z2.abs2(), z3.abs2());
    let num = &z1.x * (&n2 - &n3) + &z2.x * (&n3 - &n1) + &z3.x * (&n1 - &n2);
    num / (int(2) * &z1.y * &z2.y * &z3.y)
}

fn turning(zs: &[UHPoint]) -> Result<Vec<i32>, Sig12Error> {
    let n = zs.len();
    if n < 3 {
        return Err(Sig12Error::TooFew(n));
    }
    if let Some(i) = zs.iter().position(|z| !z.y.is_positive()) {
        return Err(Sig12Error::NotUpper(i + 1));
    }
    (0..n)
        .map(|j| {
            let p = (j + n - 1) % n;
            let q = (j + 1) % n;
            match rational::sgn(&alpha(&zs[p], &zs[j], &zs[q])) {
                0 => Err(Sig12Error::Collinear(p + 1, j + 1, q + 1)),
                s => Ok(s),
            }
        })
        .collect()
}

/// Positive rescaling to a primitive integer vector.
fn primitive(v: &Vector) -> Vector {
    use num_integer::Integer;
    let den = rational::lcm_denominators(&v.0);
    let nums: Vec<_> = v.0.iter().map(|r| (r * Rational::from_integer(den.clone())).to_integer()).collect();
    let g = nums.iter().fold(num_bigint::BigInt::zero(), |g, n| g.gcd(n));
    if g.is_zero() {
        return v.clone();
    }
    Vector::new(nums.into_iter().map(|n| Rational::new(n, g.clone())).collect())
}

/// Polygon with vertices z_1..z_N: C_j = ε_j X(z_{j−1}) × X(z_j), in form
/// coordinates, each rescaled to a primitive integer vector.
pub fn recover_ngon(zs: &[UHPoint]) -> Result<NGon, Sig12Error> {
    let tau = turning(zs)?;
    let rights = tau.iter().filter(|&&t| t < 0).count();
    if rights % 2 == 1 {
        return Err(Sig12Error::TotalTurning(rights));
    }
    Ok(ngon::validate(&form_space(), recovered_vectors(zs, &tau))?)
}

/// The recovered vectors without validation (also used for illegal polygons).
pub fn recovered_vectors(zs: &[UHPoint], tau: &[i32]) -> Vec<Vector> {
    let n = zs.len();
    let mut eps = 1;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let p = (j + n - 1) % n;
        let y = chord(&zs[p], &zs[j]).to_vector();
        let y = if eps > 0 { y } else { -&y };
        out.push(primitive(&y));
        eps *= tau[j];
    }
    out
}

pub fn turning_signs(zs: &[UHPoint]) -> Result<Vec<i32>, Sig12Error> {
    turning(zs)
}

/// τ_j sgn(|z_j|²−|z_{j−1}|²) sgn(|z_{j+1}|²−|z_j|²), j 1-based.
pub fn one_sign_term(zs: &[UHPoint], j: usize) -> Result<i32, Sig12Error> {
    let tau = turning(zs)?;
    let n = zs.len();
    let i = (j + n - 1) % n;
    let a = rational::sgn(&(zs[i].abs2() - zs[(i + n - 1) % n].abs2()));
    let b = rational::sgn(&(zs[(i + 1) % n].abs2() - zs[i].abs2()));
    Ok(tau[i] * a * b)
}

/// Point of ℍ for an oriented negative plane spanned by two form vectors;
/// planes in the other component come back with y < 0.
fn plane_point(u0: &[f64; 3], u1: &[f64; 3]) -> (f64, f64) {
    let e = |u: &[f64; 3]| [u[0] + u[2], u[1], u[0] - u[2]];
    let x = cross_f(&e(u0), &e(u1));
    // back to form coordinates: a = (α+γ)/2, b = β
    let a = (x[0] + x[2]) / 2.0;
    // a has the sign of (X,e1), which picks the component
    let q = x[0] * x[0] - x[1] * x[1] - x[2] * x[2];
    (-x[1] / (2.0 * a), libm::sqrt(q) / (2.0 * a))
}

pub fn plane_to_point(u0: &Vector, u1: &Vector) -> (f64, f64) {
    let f = |v: &Vector| [rational::to_f64(&v[0]), rational::to_f64(&v[1]), rational::to_f64(&v[2])];
    plane_point(&f(u0), &f(u1))
}

fn wrap(mut d: f64) -> f64 {
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Winding number of the boundary loop around the CM point of x.
pub fn winding_number(ngon: &NGon, x: &FormVector) -> Result<i64, Sig12Error> {
    let q = x.q();
    if !q.is_positive() {
        return Err(Sig12Error::NotPositive(q));
    }
    let xv = x.to_vector();
    if let Some(j) = ngon.signs(&xv).iter().position(|&s| s == 0) {
        return Err(Sig12Error::NonRegular(j + 1));
    }
    let (cx, cy) = x.cm_point()?;
    let n = ngon.len();
    let cs: Vec<[f64; 3]> = ngon
        .cs()
        .iter()
        .map(|c| [rational::to_f64(&c[0]), rational::to_f64(&c[1]), rational::to_f64(&c[2])])
        .collect();
    let upper = plane_point(&cs[0], &cs[1]).1 > 0.0;
    let point = |j: usize, s: f64| {
        let prev = &cs[(j + n - 1) % n];
        let next = &cs[(j + 1) % n];
        let d = [
            (s - 1.0) * prev[0] + s * next[0],
            (s - 1.0) * prev[1] + s * next[1],
            (s - 1.0) * prev[2] + s * next[2],
        ];
        let (px, py) = plane_point(&cs[j], &d);
        let py = if upper { py } else { -py };
        libm::atan2(py - cy, px - cx)
    };
    let mut total = 0.0;
    for j in 0..n {
        let mut stack = alloc::vec![(0.0f64, 1.0f64, point(j, 0.0), point(j, 1.0))];
        while let Some((s0, s1, a0, a1)) = stack.pop() {
            let d = wrap(a1 - a0);
            if libm::fabs(d) < PI / 8.0 {
                total += d;
                continue;
            }
            if s1 - s0 < 1e-12 {
                return Err(Sig12Error::Unresolved);
            }
            let m = 0.5 * (s0 + s1);
            let am = point(j, m);
            stack.push((m, s1, am, a1));
            stack.push((s0, m, a0, am));
        }
    }
    let w = total / (2.0 * PI);
    let r = libm::round(w);
    if libm::fabs(w - r) > 1e-6 {
        return Err(Sig12Error::Unresolved);
    }
    Ok(r as i64)
}

/// The four sides of the standard fundamental domain cut off at height T.
pub fn fundamental_domain(t: &Rational) -> NGon {
    let cs = fundamental_domain_vectors(t);
    ngon::validate(&form_space(), cs).expect("fundamental domain is a polygon for T > 1")
}

pub fn fundamental_domain_vectors(t: &Rational) -> Vec<Vector> {
    let m = |p: Rational, q: Rational, r: Rational| FormVector::from_matrix(p, q, r).to_vector();
    alloc::vec![
        m(int(-1), int(1), int(0)),
        m(int(0), t * t + rat(1, 4), int(1)),
        m(int(1), int(1), int(0)),
        m(int(0), int(-1), int(-1)),
    ]
}

/// Normalized holomorphic series of the truncated fundamental domain on Z³:
/// c(n) counts CM points of discriminant −n inside the domain, each twice
/// (once for X and once for −X). Levels with a CM point on the boundary are
/// reported in `flagged`.
pub fn truncated_class_series<E: Executor>(
    t: &Rational,
    nmax: &Rational,
    exec: &E,
) -> Result<QExpansion, ThetaError> {
    let d = fundamental_domain(t);
    let coset = LatticeCoset::zero(d.space())?;
    let mut opts = SeriesOptions::new(nmax.clone());
    opts.normalized = true;
    theta::holomorphic_series(&coset, &d, &opts, exec)
}

/// A loop through the corners of the T = √15/2 square along both diagonals,
/// bounding two triangles of opposite orientation. The last vector is the
/// negative of the displayed [[0,1],[1,0]], which fails the same-component
/// conditions.
pub fn butterfly_vectors() -> Vec<Vector> {
    let m = |p: Rational, q: Rational, r: Rational| FormVector::from_matrix(p, q, r).to_vector();
    alloc::vec![
        m(rat(-3, 2), rat(-5, 2), int(-1)),
        m(int(0), int(4), int(1)),
        m(rat(3, 2), rat(-5, 2), int(-1)),
        m(int(0), int(-1), int(-1)),
    ]
}
