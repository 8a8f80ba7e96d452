//! Rational quadratic spaces, vectors, and oriented negative planes.
//!
//! Gram matrices use the convention (x,x) = 2Q(x).

use alloc::vec::Vec;
use core::ops::{Add, Index, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::rational::{self, Matrix, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gram matrix is not square and symmetric")]
    NotSymmetric,
    #[error("gram matrix is degenerate")]
    Degenerate,
    #[error("signature ({found_p},{found_q}) does not match declared ({p},{q})")]
    SignatureMismatch { p: usize, q: usize, found_p: usize, found_q: usize },
    #[error("vector is not negative: (c,c) = {0}")]
    NotNegative(f64),
    #[error("projection axis is null")]
    NullAxis,
    #[error("span is not a negative definite plane")]
    NotNegativePlane,
    #[error("negative plane is numerically degenerate")]
    NearlyDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatTolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
    pub quadrature_target: f64,
}

impl Default for FloatTolerance {
    fn default() -> Self {
        FloatTolerance { abs_eps: 1e-12, rel_eps: 1e-12, quadrature_target: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vector(pub Vec<Rational>);

impl Vector {
    pub fn new(coords: Vec<Rational>) -> Self {
        Vector(coords)
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Vector(c.iter().map(|&v| rational::int(v)).collect())
    }

    pub fn zero(m: usize) -> Self {
        Vector((0..m).map(|_| Rational::zero()).collect())
    }

    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = Self::zero(m);
        v.0[i] = Rational::one();
        v
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, s: &Rational) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational::to_f64).collect()
    }
}

impl Index<usize> for Vector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, o: &Vector) -> Vector {
        Vector(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, o: &Vector) -> Vector {
        Vector(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|a| -a).collect())
    }
}

/// Signature of a symmetric rational matrix by congruence diagonalization.
pub fn signature(gram: &Matrix) -> Result<(usize, usize), SpaceError> {
    let n = gram.len();
    let mut a = gram.clone();
    let (mut p, mut q) = (0, 0);
    for k in 0..n {
        if a[k][k].is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !a[j][j].is_zero()) {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // e_k <- e_k + e_j; new diagonal is 2 a_kj
                for c in 0..n {
                    let t = a[j][c].clone();
                    a[k][c] += t;
                }
                for r in 0..n {
                    let t = a[r][j].clone();
                    a[r][k] += t;
                }
            } else {
                return Err(SpaceError::Degenerate);
            }
        }
        let piv = a[k][k].clone();
        if piv.is_positive() {
            p += 1;
        } else {
            q += 1;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for j in k + 1..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Ok((p, q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpace {
    gram: Matrix,
    gram_f: Vec<f64>,
    sig: (usize, usize),
}

impl QuadraticSpace {
    pub fn new(gram: Matrix) -> Result<Self, SpaceError> {
        let m = gram.len();
        if gram.iter().any(|r| r.len() != m) {
            return Err(SpaceError::NotSymmetric);
        }
        for i in 0..m {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(SpaceError::NotSymmetric);
                }
            }
        }
        let sig = signature(&gram)?;
        let gram_f = gram.iter().flat_map(|r| r.iter().map(rational::to_f64)).collect();
        Ok(QuadraticSpace { gram, gram_f, sig })
    }

    pub fn with_signature(gram: Matrix, p: usize, q: usize) -> Result<Self, SpaceError> {
        let s = Self::new(gram)?;
        if s.sig != (p, q) {
            return Err(SpaceError::SignatureMismatch { p, q, found_p: s.sig.0, found_q: s.sig.1 });
        }
        Ok(s)
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let m = d.len();
        let mut g = rational::zeros(m, m);
        for i in 0..m {
            g[i][i] = rational::int(d[i]);
        }
        Self::new(g).expect("nonzero diagonal")
    }

    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn signature(&self) -> (usize, usize) {
        self.sig
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn gram_f64(&self) -> &[f64] {
        &self.gram_f
    }

    fn check(&self, x: &Vector) -> Result<(), SpaceError> {
        if x.dim() != self.dim() {
            return Err(SpaceError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<Rational, SpaceError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.inner_unchecked(x, y))
    }

    pub(crate) fn inner_unchecked(&self, x: &Vector, y: &Vector) -> Rational {
        let mut s = Rational::zero();
        for (i, xi) in x.0.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            let mut r = Rational::zero();
            for (j, yj) in y.0.iter().enumerate() {
                if !yj.is_zero() && !self.gram[i][j].is_zero() {
                    r += &self.gram[i][j] * yj;
                }
            }
            s += xi * r;
        }
        s
    }

    /// G·y, so that (x,y) is the dot product of x with the result.
    pub fn dual(&self, y: &Vector) -> Vector {
        Vector(
            self.gram
                .iter()
                .map(|row| row.iter().zip(&y.0).fold(Rational::zero(), |a, (g, c)| a + g * c))
                .collect(),
        )
    }

    pub fn norm(&self, x: &Vector) -> Result<Rational, SpaceError> {
        self.inner(x, x)
    }

    /// Q(x) = (x,x)/2.
    pub fn q(&self, x: &Vector) -> Result<Rational, SpaceError> {
        Ok(self.inner(x, x)? / rational::int(2))
    }

    pub fn inner_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for i in 0..m {
            let mut r = 0.0;
            for j in 0..m {
                r += self.gram_f[i * m + j] * y[j];
            }
            s += x[i] * r;
        }
        s
    }

    pub fn project_perp(&self, x: &Vector, c: &Vector) -> Result<Vector, SpaceError> {
        let cc = self.inner(c, c)?;
        if cc.is_zero() {
            return Err(SpaceError::NullAxis);
        }
        let f = self.inner(x, c)? / cc;
        Ok(x - &c.scale(&f))
    }

    /// |(c,c)|^{-1/2} c as floats.
    pub fn unit_negative(&self, c: &Vector) -> Result<Vec<f64>, SpaceError> {
        let cc = self.inner(c, c)?;
        if !cc.is_negative() {
            return Err(SpaceError::NotNegative(rational::to_f64(&cc)));
        }
        let s = 1.0 / libm::sqrt(-rational::to_f64(&cc));
        Ok(c.to_f64().into_iter().map(|v| v * s).collect())
    }

    /// ((x,x)_z, R(x,z)).
    pub fn majorant(&self, x: &Vector, z: &NegativePlane) -> Result<(f64, f64), SpaceError> {
        self.check(x)?;
        Ok(self.majorant_f64(&x.to_f64(), z))
    }

    pub fn majorant_f64(&self, x: &[f64], z: &NegativePlane) -> (f64, f64) {
        let r: f64 = z.ortho.iter().map(|u| libm::pow(self.inner_f64(x, u), 2.0)).sum();
        (self.inner_f64(x, x) + 2.0 * r, r)
    }

    /// Exact Gram matrix of the majorant, G − 2 G U (Uᵀ G U)⁻¹ Uᵀ G.
    pub fn majorant_matrix(&self, z: &NegativePlane) -> Matrix {
        let u = rational::transpose(&z.span.iter().map(|v| v.0.clone()).collect());
        let gu = rational::mat_mul(&self.gram, &u);
        let ugu = rational::mat_mul(&rational::transpose(&u), &gu);
        let inv = rational::inverse(&ugu).expect("negative plane has invertible Gram");
        let corr = rational::mat_mul(&rational::mat_mul(&gu, &inv), &rational::transpose(&gu));
        let two = rational::int(2);
        let m = self.dim();
        let mut out = self.gram.clone();
        for i in 0..m {
            for j in 0..m {
                out[i][j] -= &two * &corr[i][j];
            }
        }
        out
    }

    /// The majorant Gram matrix G + 2Σ (G u_k)(G u_k)^T in floats.
    pub fn majorant_matrix_f64(&self, z: &NegativePlane) -> nalgebra::DMatrix<f64> {
        let m = self.dim();
        let g = nalgebra::DMatrix::from_row_slice(m, m, &self.gram_f);
        let mut out = g.clone();
        for u in &z.ortho {
            let gu = &g * nalgebra::DVector::from_column_slice(u);
            out += (&gu * gu.transpose()) * 2.0;
        }
        out
    }
}

/// An oriented negative definite plane given by an ordered spanning list.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativePlane {
    span: Vec<Vector>,
    ortho: Vec<Vec<f64>>,
}

impl NegativePlane {
    pub fn new(space: &QuadraticSpace, span: Vec<Vector>) -> Result<Self, SpaceError> {
        Self::with_tolerance(space, span, &FloatTolerance::default())
    }

    pub fn with_tolerance(
        space: &QuadraticSpace,
        span: Vec<Vector>,
        tol: &FloatTolerance,
    ) -> Result<Self, SpaceError> {
        if span.is_empty() {
            return Err(SpaceError::NotNegativePlane);
        }
        for v in &span {
            space.check(v)?;
        }
        let k = span.len();
        let g: Matrix = (0..k)
            .map(|i| (0..k).map(|j| -space.inner_unchecked(&span[i], &span[j])).collect())
            .collect();
        for l in 1..=k {
            let minor: Matrix = g[..l].iter().map(|r| r[..l].to_vec()).collect();
            if !rational::det(&minor).is_positive() {
                return Err(SpaceError::NotNegativePlane);
            }
        }
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(k);
        for s in &span {
            let sf = s.to_f64();
            let s2 = -space.inner_f64(&sf, &sf);
            let mut v = sf;
            for u in &ortho {
                let c = -space.inner_f64(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
            let n2 = -space.inner_f64(&v, &v);
            if !(n2 > tol.abs_eps * s2) {
                return Err(SpaceError::NearlyDegenerate);
            }
            let inv = 1.0 / libm::sqrt(n2);
            ortho.push(v.into_iter().map(|c| c * inv).collect());
        }
        Ok(NegativePlane { span, ortho })
    }

    pub fn span(&self) -> &[Vector] {
        &self.span
    }

    pub fn ortho(&self) -> &[Vec<f64>] {
        &self.ortho
    }

    pub fn dim(&self) -> usize {
        self.span.len()
    }

    /// Same unoriented subspace, decided exactly.
    pub fn same_subspace(&self, other: &NegativePlane) -> bool {
        let rows: Vec<Vec<Rational>> =
            self.span.iter().chain(&other.span).map(|v| v.0.clone()).collect();
        self.dim() == other.dim() && rational::rank(&rows) == self.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use alloc::vec;

    fn sig12() -> QuadraticSpace {
        QuadraticSpace::diagonal(&[2, -2, -2])
    }

    #[test]
    fn inner_examples() {
        let s = sig12();
        assert_eq!(s.inner(&Vector::unit(3, 0), &Vector::unit(3, 0)).unwrap(), int(2));
        assert_eq!(s.inner(&Vector::unit(3, 1), &Vector::unit(3, 2)).unwrap(), int(0));
        assert!(matches!(
            s.inner(&Vector::unit(2, 0), &Vector::unit(3, 0)),
            Err(SpaceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn signature_with_zero_diagonal() {
        let g = vec![
            vec![int(0), int(0), int(4)],
            vec![int(0), int(-2), int(0)],
            vec![int(4), int(0), int(0)],
        ];
        assert_eq!(signature(&g).unwrap(), (1, 2));
        let h = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(signature(&h).unwrap(), (1, 1));
        let d = vec![vec![int(1), int(1)], vec![int(1), int(1)]];
        assert_eq!(signature(&d), Err(SpaceError::Degenerate));
    }

    #[test]
    fn projection() {
        let s = sig12();
        let x = Vector::from_ints(&[1, 1, 0]);
        let p = s.project_perp(&x, &Vector::unit(3, 1)).unwrap();
        assert_eq!(p, Vector::unit(3, 0));
        let c = Vector::unit(3, 2);
        assert_eq!(s.project_perp(&c, &c).unwrap(), Vector::zero(3));
        let u = s.unit_negative(&Vector::unit(3, 1)).unwrap();
        assert!((u[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(s.unit_negative(&Vector::unit(3, 0)).is_err());
    }

    #[test]
    fn majorant_in_and_perp() {
        let s = sig12();
        let z = NegativePlane::new(&s, vec![Vector::unit(3, 1), Vector::unit(3, 2)]).unwrap();
        let x = Vector::new(vec![rat(1, 3), int(2), int(-1)]);
        let (mx, _) = s.majorant(&x, &z).unwrap();
        let exact = s.majorant_matrix(&z);
        let xe: Rational = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| &x[i] * &exact[i][j] * &x[j])
            .sum();
        assert!((mx - crate::rational::to_f64(&xe)).abs() < 1e-12);
        let inz = Vector::unit(3, 1);
        let (m, r) = s.majorant(&inz, &z).unwrap();
        assert!((m - 2.0).abs() < 1e-14 && (r - 2.0).abs() < 1e-14);
        let (m, r) = s.majorant(&Vector::unit(3, 0), &z).unwrap();
        assert!((m - 2.0).abs() < 1e-14 && r.abs() < 1e-14);
    }

    #[test]
    fn rejects_non_negative_span() {
        let s = sig12();
        assert_eq!(
            NegativePlane::new(&s, vec![Vector::unit(3, 1), Vector::unit(3, 1)]),
            Err(SpaceError::NotNegativePlane)
        );
        assert_eq!(
            NegativePlane::new(&s, vec![Vector::unit(3, 0)]),
            Err(SpaceError::NotNegativePlane)
        );
    }
}
