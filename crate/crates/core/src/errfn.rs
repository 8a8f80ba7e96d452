//! Generalized error functions E_1, E_2, E_3.
//!
//! For negative vectors c_1..c_q spanning a negative plane z, E_q(c; x) is the
//! average of sgn(y,c_1)...sgn(y,c_q) against the unit-mass Gaussian on z
//! centered at pr_z(x). In an orthonormal frame of z this is the Euclidean
//! integral of exp(-pi |y - xi|^2) times a product of half-space signs.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::quadratic::{FloatTolerance, NegativePlane, QuadraticSpace, SpaceError, Vector};
use crate::quadrature::{self, QuadratureError};
use crate::rational;

const SQRT_PI: f64 = 1.772_453_850_905_516;
/// Gaussian tails beyond this many units from the center are below 1e-49.
const REACH: f64 = 6.0;
const MAX_PIECES: usize = 4000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErrorFnError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("expected 1 to 3 vectors, got {0}")]
    Arity(usize),
    #[error("plane is nearly degenerate (normalized Gram determinant {0:e})")]
    NearlyDegenerate(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("argument is not regular: (x,C_{0}) = 0")]
    NonRegular(usize),
}

pub fn erf_pi(t: f64) -> f64 {
    libm::erf(SQRT_PI * t)
}

/// exp(t^2) erfc(t) for t >= 0.
pub fn erfcx(t: f64) -> f64 {
    if t < 0.0 {
        return 2.0 * libm::exp(t * t) - erfcx(-t);
    }
    if t < 26.0 {
        return libm::exp(t * t) * libm::erfc(t);
    }
    // asymptotic series: sum (-1)^n (2n-1)!! / (2t^2)^n
    let u = 0.5 / (t * t);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..7 {
        term *= -((2 * n - 1) as f64) * u;
        sum += term;
    }
    sum / (t * SQRT_PI)
}

/// Integrates `f` over [a,b], splitting at any interior breakpoints.
fn integrate_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, QuadratureError> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(f64::total_cmp);
    let mut lo = a;
    let mut total = 0.0;
    let share = tol / (pts.len() + 1) as f64;
    for hi in pts.into_iter().chain(core::iter::once(b)) {
        total += quadrature::integrate(&mut f, lo, hi, share, MAX_PIECES)?.value;
        lo = hi;
    }
    Ok(total)
}

/// ∫ e^{-π(s-s0)^2} sgn(s) g(s) ds, truncated to the Gaussian's reach.
fn signed_line<F: FnMut(f64) -> f64>(
    mut g: F,
    s0: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, QuadratureError> {
    let mut h = |s: f64| libm::exp(-PI * (s - s0) * (s - s0)) * g(s);
    let mut total = 0.0;
    if s0 + REACH > 0.0 {
        total += integrate_split(&mut h, f64::max(0.0, s0 - REACH), s0 + REACH, breaks, tol / 2.0)?;
    }
    if s0 - REACH < 0.0 {
        total -= integrate_split(&mut h, s0 - REACH, f64::min(0.0, s0 + REACH), breaks, tol / 2.0)?;
    }
    Ok(total)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean two-sign Gaussian integral with unit normals in the plane.
fn planar(g1: [f64; 2], g2: [f64; 2], xi: [f64; 2], tol: f64) -> Result<f64, QuadratureError> {
    let n = [-g1[1], g1[0]];
    let cos = g1[0] * g2[0] + g1[1] * g2[1];
    let sin = n[0] * g2[0] + n[1] * g2[1];
    let cot = cos / sin;
    let s0 = g1[0] * xi[0] + g1[1] * xi[1];
    let t0 = n[0] * xi[0] + n[1] * xi[1];
    // the inner erf switches sign where t0 + s*cot = 0
    let kink = if cot != 0.0 { -t0 / cot } else { f64::INFINITY };
    let v = signed_line(|s| erf_pi(t0 + s * cot), s0, &[kink], tol)?;
    Ok(if sin > 0.0 { v } else { -v })
}

fn normalize(v: &mut [f64]) {
    let n = libm::sqrt(dot(v, v));
    v.iter_mut().for_each(|c| *c /= n);
}

/// Orthonormal basis of the complement of a unit vector in R^3.
fn complement(g: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3).min_by(|&a, &b| libm::fabs(g[a]).total_cmp(&libm::fabs(g[b]))).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let mut n1 = [e[0] - g[0] * g[k], e[1] - g[1] * g[k], e[2] - g[2] * g[k]];
    normalize(&mut n1);
    let n2 = [
        g[1] * n1[2] - g[2] * n1[1],
        g[2] * n1[0] - g[0] * n1[2],
        g[0] * n1[1] - g[1] * n1[0],
    ];
    (n1, n2)
}

struct Slice {
    h2: [f64; 2],
    h3: [f64; 2],
    shift: [f64; 2],
    n1: [f64; 3],
    n2: [f64; 3],
    axis: [f64; 3],
    conditioning: f64,
}

fn slice_along(g: &[[f64; 3]; 3], axis: usize) -> Slice {
    let a = g[axis];
    let (o1, o2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (n1, n2) = complement(&a);
    let proj = |v: &[f64; 3]| [dot(v, &n1), dot(v, &n2)];
    let mut h2 = proj(&g[o1]);
    let mut h3 = proj(&g[o2]);
    let b2 = dot(&g[o1], &a);
    let b3 = dot(&g[o2], &a);
    // shift p with h2.p = b2, h3.p = b3
    let det = h2[0] * h3[1] - h2[1] * h3[0];
    let shift = [(b2 * h3[1] - b3 * h2[1]) / det, (h2[0] * b3 - h3[0] * b2) / det];
    let l2 = libm::sqrt(h2[0] * h2[0] + h2[1] * h2[1]);
    let l3 = libm::sqrt(h3[0] * h3[0] + h3[1] * h3[1]);
    h2 = [h2[0] / l2, h2[1] / l2];
    h3 = [h3[0] / l3, h3[1] / l3];
    let conditioning = libm::fabs(h2[0] * h3[1] - h2[1] * h3[0]);
    Slice { h2, h3, shift, n1, n2, axis: a, conditioning }
}

fn spatial(g: &[[f64; 3]; 3], xi: [f64; 3], axis: usize, tol: f64) -> Result<f64, QuadratureError> {
    let sl = slice_along(g, axis);
    let s0 = dot(&sl.axis, &xi);
    let w0 = [dot(&sl.n1, &xi), dot(&sl.n2, &xi)];
    let inner_tol = tol / 8.0;
    let mut failure = None;
    let v = signed_line(
        |s| {
            let c = [w0[0] + s * sl.shift[0], w0[1] + s * sl.shift[1]];
            match planar(sl.h2, sl.h3, c, inner_tol) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        s0,
        &[],
        tol / 2.0,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// A precomputed generalized error function for fixed c_1..c_q.
#[derive(Debug, Clone)]
pub struct ErrorFunction {
    /// G·u_k for the orthonormal frame u_k of z, so xi_k = -(x,u_k).
    frame_dual: Vec<Vec<f64>>,
    normals: Vec<[f64; 3]>,
    axis: usize,
    tol: f64,
}

impl ErrorFunction {
    pub fn new(space: &QuadraticSpace, cs: &[Vector], tol: &FloatTolerance) -> Result<Self, ErrorFnError> {
        let q = cs.len();
        if !(1..=3).contains(&q) {
            return Err(ErrorFnError::Arity(q));
        }
        let plane = NegativePlane::with_tolerance(space, cs.to_vec(), tol)?;
        let m = space.dim();
        let g = space.gram_f64();
        let frame_dual: Vec<Vec<f64>> = plane
            .ortho()
            .iter()
            .map(|u| (0..m).map(|i| (0..m).map(|j| g[i * m + j] * u[j]).sum()).collect())
            .collect();
        let mut normals = Vec::with_capacity(q);
        for c in cs {
            let cf = c.to_f64();
            let mut n = [0.0; 3];
            for (k, d) in frame_dual.iter().enumerate() {
                n[k] = dot(&cf, d);
            }
            normalize(&mut n[..q]);
            normals.push(n);
        }
        // Gram determinant of the unit normals
        let gd = match q {
            1 => 1.0,
            2 => {
                let c = dot(&normals[0][..2], &normals[1][..2]);
                1.0 - c * c
            }
            _ => {
                let n = &normals;
                let cr = [
                    n[1][1] * n[2][2] - n[1][2] * n[2][1],
                    n[1][2] * n[2][0] - n[1][0] * n[2][2],
                    n[1][0] * n[2][1] - n[1][1] * n[2][0],
                ];
                let d = dot(&n[0], &cr);
                d * d
            }
        };
        if !(gd >= 1e-10) {
            return Err(ErrorFnError::NearlyDegenerate(gd));
        }
        let mut axis = 0;
        if q == 3 {
            let g3 = [normals[0], normals[1], normals[2]];
            axis = (0..3)
                .max_by(|&a, &b| slice_along(&g3, a).conditioning.total_cmp(&slice_along(&g3, b).conditioning))
                .unwrap();
        }
        Ok(ErrorFunction { frame_dual, normals, axis, tol: tol.quadrature_target })
    }

    pub fn arity(&self) -> usize {
        self.normals.len()
    }

    /// Coordinates of pr_z(x) in the orthonormal frame.
    fn center(&self, x: &[f64]) -> [f64; 3] {
        let mut xi = [0.0; 3];
        for (k, d) in self.frame_dual.iter().enumerate() {
            xi[k] = -dot(x, d);
        }
        xi
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, QuadratureError> {
        self.eval_center(self.center(x), self.axis)
    }

    /// Same value computed by slicing along another normal; for cross-checks.
    pub fn eval_with_axis(&self, x: &[f64], axis: usize) -> Result<f64, QuadratureError> {
        self.eval_center(self.center(x), axis.min(self.arity() - 1))
    }

    fn eval_center(&self, xi: [f64; 3], axis: usize) -> Result<f64, QuadratureError> {
        let n = &self.normals;
        match n.len() {
            1 => Ok(erf_pi(dot(&n[0], &xi))),
            2 => planar([n[0][0], n[0][1]], [n[1][0], n[1][1]], [xi[0], xi[1]], self.tol),
            _ => spatial(&[n[0], n[1], n[2]], xi, axis, self.tol),
        }
    }
}

pub fn e1(space: &QuadraticSpace, c: &Vector, x: &[f64]) -> Result<f64, ErrorFnError> {
    let cc = space.inner(c, c)?;
    if !num_traits::Signed::is_negative(&cc) {
        return Err(SpaceError::NotNegative(rational::to_f64(&cc)).into());
    }
    let u = space.unit_negative(c)?;
    Ok(erf_pi(space.inner_f64(x, &u)))
}

pub fn e2(
    space: &QuadraticSpace,
    c1: &Vector,
    c2: &Vector,
    x: &[f64],
    tol: &FloatTolerance,
) -> Result<f64, ErrorFnError> {
    // Parallel arguments: the sign product is constant almost everywhere.
    if rational::rank(&[c1.0.clone(), c2.0.clone()]) == 1 && !c1.is_zero() {
        let k = (0..c1.dim()).find(|&i| !num_traits::Zero::is_zero(&c1[i])).unwrap();
        let c11 = space.inner(c1, c1)?;
        if !num_traits::Signed::is_negative(&c11) {
            return Err(SpaceError::NotNegative(rational::to_f64(&c11)).into());
        }
        return Ok(rational::sgn(&(&c2[k] / &c1[k])) as f64);
    }
    Ok(ErrorFunction::new(space, &[c1.clone(), c2.clone()], tol)?.eval(x)?)
}

pub fn e3(
    space: &QuadraticSpace,
    c1: &Vector,
    c2: &Vector,
    c3: &Vector,
    x: &[f64],
    tol: &FloatTolerance,
) -> Result<f64, ErrorFnError> {
    Ok(ErrorFunction::new(space, &[c1.clone(), c2.clone(), c3.clone()], tol)?.eval(x)?)
}

pub fn eq(space: &QuadraticSpace, cs: &[Vector], x: &[f64], tol: &FloatTolerance) -> Result<f64, ErrorFnError> {
    Ok(ErrorFunction::new(space, cs, tol)?.eval(x)?)
}
