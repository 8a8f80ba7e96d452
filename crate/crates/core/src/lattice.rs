//! Lattice cosets μ + Z^m, the discriminant group L∨/L, and enumeration of
//! coset vectors inside a majorant ellipsoid.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::quadratic::{NegativePlane, QuadraticSpace, Vector};
use crate::rational::{self, Matrix, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("gram matrix is not integral")]
    NotIntegral,
    #[error("lattice is not even: (e_{0},e_{0}) is odd")]
    NotEven(usize),
    #[error("shift is not in the dual lattice")]
    NotDual,
    #[error("dimension mismatch")]
    Dimension,
    #[error("coordinates overflow 128-bit arithmetic")]
    Overflow,
    #[error("majorant is not positive definite")]
    NotDefinite,
}

fn integral(g: &Matrix) -> Option<Vec<Vec<i128>>> {
    g.iter()
        .map(|r| r.iter().map(|v| if v.is_integer() { v.to_integer().to_i128() } else { None }).collect())
        .collect()
}

/// Row-style Hermite form: upper triangular rows spanning the same lattice.
fn hermite(mut a: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let n = a.len();
    let m = a[0].len();
    let mut r = 0;
    for col in 0..m {
        if r == n {
            break;
        }
        loop {
            // move the smallest nonzero entry in this column to row r
            let Some(piv) = (r..n)
                .filter(|&i| a[i][col] != 0)
                .min_by_key(|&i| a[i][col].unsigned_abs())
            else {
                break;
            };
            a.swap(r, piv);
            let mut done = true;
            for i in r + 1..n {
                if a[i][col] != 0 {
                    let f = a[i][col].div_euclid(a[r][col]);
                    for j in 0..m {
                        a[i][j] -= f * a[r][j];
                    }
                    if a[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[r][col] != 0 {
            if a[r][col] < 0 {
                a[r].iter_mut().for_each(|v| *v = -*v);
            }
            r += 1;
        }
    }
    a
}

/// The finite quadratic module L∨/L of an even lattice.
#[derive(Debug, Clone)]
pub struct DiscriminantGroup {
    space: QuadraticSpace,
    hnf: Vec<Vec<i128>>,
    gram_inv: Matrix,
    reps: Vec<Vector>,
    keys: Vec<Vec<i128>>,
    index: BTreeMap<Vec<i128>, usize>,
}

impl DiscriminantGroup {
    pub fn new(space: &QuadraticSpace) -> Result<Self, LatticeError> {
        let g = integral(space.gram()).ok_or(LatticeError::NotIntegral)?;
        if let Some(i) = (0..g.len()).find(|&i| g[i][i] % 2 != 0) {
            return Err(LatticeError::NotEven(i));
        }
        let hnf = hermite(g);
        let gram_inv = rational::inverse(space.gram()).expect("nondegenerate");
        let m = hnf.len();
        let mut keys: Vec<Vec<i128>> = alloc::vec![Vec::new()];
        for i in 0..m {
            let d = hnf[i][i];
            keys = keys
                .into_iter()
                .flat_map(|k| (0..d).map(move |v| {
                    let mut k = k.clone();
                    k.push(v);
                    k
                }))
                .collect();
        }
        let reps = keys.iter().map(|k| Self::from_key(&gram_inv, k)).collect();
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Ok(DiscriminantGroup { space: space.clone(), hnf, gram_inv, reps, keys, index })
    }

    fn from_key(gram_inv: &Matrix, k: &[i128]) -> Vector {
        Vector::new(
            gram_inv
                .iter()
                .map(|row| row.iter().zip(k).fold(Rational::zero(), |a, (g, &c)| a + g * Rational::from_integer(BigInt::from(c))))
                .collect(),
        )
    }

    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Vector] {
        &self.reps
    }

    /// Index of the coset containing a dual vector.
    pub fn index_of(&self, v: &Vector) -> Result<usize, LatticeError> {
        let gv = self.space.dual(v);
        let mut k: Vec<i128> = gv
            .0
            .iter()
            .map(|c| if c.is_integer() { c.to_integer().to_i128() } else { None })
            .collect::<Option<_>>()
            .ok_or(LatticeError::NotDual)?;
        for (i, row) in self.hnf.iter().enumerate() {
            let f = k[i].div_euclid(row[i]);
            for (kj, rj) in k.iter_mut().zip(row) {
                *kj -= f * rj;
            }
        }
        Ok(self.index[&k])
    }

    /// Q(μ) mod 1 in [0,1).
    pub fn q_mod1(&self, i: usize) -> Rational {
        frac(&(self.space.inner_unchecked(&self.reps[i], &self.reps[i]) / rational::int(2)))
    }

    /// (μ_i, μ_j) mod 1 in [0,1).
    pub fn b_mod1(&self, i: usize, j: usize) -> Rational {
        frac(&self.space.inner_unchecked(&self.reps[i], &self.reps[j]))
    }

    pub fn negate(&self, i: usize) -> usize {
        self.index_of(&-&self.reps[i]).expect("dual")
    }

    pub fn keys(&self) -> &[Vec<i128>] {
        &self.keys
    }

    pub fn gram_inverse(&self) -> &Matrix {
        &self.gram_inv
    }
}

fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

#[derive(Debug, Clone)]
pub struct LatticeCoset {
    space: QuadraticSpace,
    mu: Vector,
}

impl LatticeCoset {
    pub fn new(space: &QuadraticSpace, mu: Vector) -> Result<Self, LatticeError> {
        if mu.dim() != space.dim() {
            return Err(LatticeError::Dimension);
        }
        integral(space.gram()).ok_or(LatticeError::NotIntegral)?;
        if !space.dual(&mu).0.iter().all(|c| c.is_integer()) {
            return Err(LatticeError::NotDual);
        }
        Ok(LatticeCoset { space: space.clone(), mu })
    }

    pub fn zero(space: &QuadraticSpace) -> Result<Self, LatticeError> {
        Self::new(space, Vector::zero(space.dim()))
    }

    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn mu(&self) -> &Vector {
        &self.mu
    }
}

/// A coset vector x = X / den with X integral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePoint {
    pub scaled: Vec<i128>,
    pub q: Rational,
    pub majorant: Rational,
}

impl LatticePoint {
    pub fn vector(&self, den: &BigInt) -> Vector {
        let d = Rational::from_integer(den.clone());
        Vector::new(self.scaled.iter().map(|&c| Rational::from_integer(BigInt::from(c)) / &d).collect())
    }

    pub fn to_f64(&self, den: &BigInt) -> Vec<f64> {
        let d = den.to_f64().unwrap_or(f64::NAN);
        self.scaled.iter().map(|&c| c as f64 / d).collect()
    }
}

/// Vectors of a coset with (x,x)_{z0} ≤ bound, in canonical order
/// (majorant, then coordinates).
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub den: BigInt,
    pub points: Vec<LatticePoint>,
}

/// Size-reduced, Lovász-reduced basis for the Gram matrix `m`; returns the
/// unimodular transform U (columns = new basis in old coordinates).
fn lll(m: &DMatrix<f64>) -> Vec<Vec<i64>> {
    let n = m.nrows();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    let gram = |u: &Vec<Vec<i64>>, i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += u[a][i] as f64 * m[(a, b)] * u[b][j] as f64;
            }
        }
        s
    };
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 10_000 {
        guard += 1;
        // Gram–Schmidt data for columns 0..=k
        let mut mu = alloc::vec![alloc::vec![0.0; n]; n];
        let mut bstar = alloc::vec![0.0; n];
        for i in 0..=k {
            for j in 0..i {
                let mut s = gram(&u, i, j);
                for l in 0..j {
                    s -= mu[j][l] * mu[i][l] * bstar[l];
                }
                mu[i][j] = s / bstar[j];
            }
            let mut s = gram(&u, i, i);
            for l in 0..i {
                s -= mu[i][l] * mu[i][l] * bstar[l];
            }
            bstar[i] = s;
        }
        let mut changed = false;
        for j in (0..k).rev() {
            let r = libm::round(mu[k][j]);
            if r != 0.0 {
                let r = r as i64;
                for a in 0..n {
                    u[a][k] -= r * u[a][j];
                }
                changed = true;
                for l in 0..=j {
                    mu[k][l] -= r as f64 * if l == j { 1.0 } else { mu[j][l] };
                }
            }
        }
        let _ = changed;
        if bstar[k] >= (0.99 - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            k += 1;
        } else {
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = usize::max(k - 1, 1);
        }
    }
    u
}

fn scaled_matrix(m: &Matrix) -> (Vec<Vec<i128>>, BigInt) {
    let den = rational::lcm_denominators(m.iter().flatten());
    let rows = m
        .iter()
        .map(|r| rational::to_scaled_i128(r, &den).expect("majorant entries fit"))
        .collect();
    (rows, den)
}

fn quad_i128(a: &[Vec<i128>], x: &[i128]) -> Option<i128> {
    let mut s: i128 = 0;
    for (i, row) in a.iter().enumerate() {
        let mut r: i128 = 0;
        for (j, v) in row.iter().enumerate() {
            r = r.checked_add(v.checked_mul(x[j])?)?;
        }
        s = s.checked_add(r.checked_mul(x[i])?)?;
    }
    Some(s)
}

/// All x ∈ μ + L with (x,x)_{z0} ≤ bound, decided exactly.
pub fn enumerate(coset: &LatticeCoset, z0: &NegativePlane, bound: f64) -> Result<Enumeration, LatticeError> {
    let space = coset.space();
    let m = space.dim();
    let exact = space.majorant_matrix(z0);
    let mf = DMatrix::from_fn(m, m, |i, j| rational::to_f64(&exact[i][j]));
    let den = rational::lcm_denominators(&coset.mu.0);
    let mu_scaled = rational::to_scaled_i128(&coset.mu.0, &den).ok_or(LatticeError::Overflow)?;
    let den_i = den.to_i128().ok_or(LatticeError::Overflow)?;
    let (maj_rows, maj_den) = scaled_matrix(&exact);
    let (gram_rows, _) = scaled_matrix(space.gram());
    let bound_q = rational::from_f64(bound.max(0.0)).unwrap_or_else(Rational::zero);
    // X^T A X ≤ bound * maj_den * den²
    let limit = &bound_q * Rational::from_integer(&maj_den * &den * &den);

    let u = lll(&mf);
    let uf = DMatrix::from_fn(m, m, |i, j| u[i][j] as f64);
    let mr = uf.transpose() * &mf * &uf;
    let chol = mr.clone().cholesky().ok_or(LatticeError::NotDefinite)?;
    let r = chol.l().transpose();
    let uinv = uf.clone().try_inverse().ok_or(LatticeError::NotDefinite)?;
    let muf: Vec<f64> = coset.mu.to_f64();
    let t: Vec<f64> = (0..m).map(|i| -(0..m).map(|j| uinv[(i, j)] * muf[j]).sum::<f64>()).collect();
    let qd: Vec<f64> = (0..m).map(|i| r[(i, i)] * r[(i, i)]).collect();
    let qo = |i: usize, j: usize| r[(i, j)] / r[(i, i)];
    let slack = bound * (1.0 + 1e-9) + 1e-9;

    let mut points = Vec::new();
    let mut y = alloc::vec![0.0f64; m];
    let mut k = alloc::vec![0i64; m];
    // depth-first over coordinates m-1..0
    fn rec(
        i: usize,
        rem: f64,
        y: &mut Vec<f64>,
        k: &mut Vec<i64>,
        t: &[f64],
        qd: &[f64],
        qo: &dyn Fn(usize, usize) -> f64,
        out: &mut Vec<Vec<i64>>,
    ) {
        let m = t.len();
        let shift: f64 = (i + 1..m).map(|j| qo(i, j) * y[j]).sum();
        let c = t[i] - shift;
        let w = libm::sqrt(f64::max(rem, 0.0) / qd[i]);
        let lo = libm::ceil(c - w - 1e-9) as i64;
        let hi = libm::floor(c + w + 1e-9) as i64;
        for v in lo..=hi {
            k[i] = v;
            y[i] = v as f64 - t[i];
            let d = y[i] + shift;
            let used = qd[i] * d * d;
            if used > rem + 1e-9 * (1.0 + rem) {
                continue;
            }
            if i == 0 {
                out.push(k.clone());
            } else {
                rec(i - 1, rem - used, y, k, t, qd, qo, out);
            }
        }
    }
    let mut raw = Vec::new();
    rec(m - 1, slack, &mut y, &mut k, &t, &qd, &qo, &mut raw);

    for kp in raw {
        let mut x = mu_scaled.clone();
        for i in 0..m {
            let mut s: i128 = 0;
            for j in 0..m {
                s = s
                    .checked_add((u[i][j] as i128).checked_mul(kp[j] as i128).ok_or(LatticeError::Overflow)?)
                    .ok_or(LatticeError::Overflow)?;
            }
            x[i] = x[i].checked_add(s.checked_mul(den_i).ok_or(LatticeError::Overflow)?).ok_or(LatticeError::Overflow)?;
        }
        let s = quad_i128(&maj_rows, &x).ok_or(LatticeError::Overflow)?;
        let s = Rational::from_integer(BigInt::from(s));
        if s > limit {
            continue;
        }
        let majorant = s / Rational::from_integer(&maj_den * &den * &den);
        let g = quad_i128(&gram_rows, &x).ok_or(LatticeError::Overflow)?;
        let q = Rational::new(BigInt::from(g), BigInt::from(2) * &den * &den);
        points.push(LatticePoint { scaled: x, q, majorant });
    }
    points.sort_by(|a, b| a.majorant.cmp(&b.majorant).then_with(|| a.scaled.cmp(&b.scaled)));
    Ok(Enumeration { den, points })
}

/// Largest generalized eigenvalue of M_{z0} with respect to M_z, i.e. the
/// least κ with (x,x)_{z0} ≤ κ (x,x)_z for all x.
pub fn comparability(space: &QuadraticSpace, z0: &NegativePlane, z: &NegativePlane) -> f64 {
    let a = space.majorant_matrix_f64(z0);
    let b = space.majorant_matrix_f64(z);
    let l = b.cholesky().expect("majorants are positive definite").l();
    let linv = l.try_inverse().expect("invertible");
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigenvalues().iter().copied().fold(f64::MIN, f64::max)
}

pub fn kappa(space: &QuadraticSpace, z0: &NegativePlane, samples: &[NegativePlane]) -> f64 {
    samples.iter().map(|z| comparability(space, z0, z)).fold(1.0, f64::max)
}

/// Smallest eigenvalue of the majorant Gram in lattice coordinates.
pub fn majorant_min_eigenvalue(space: &QuadraticSpace, z0: &NegativePlane) -> f64 {
    space.majorant_matrix_f64(z0).symmetric_eigenvalues().iter().copied().fold(f64::MAX, f64::min)
}

pub fn is_unimodular_transform(u: &[Vec<i64>]) -> bool {
    let m: Matrix = u.iter().map(|r| r.iter().map(|&v| rational::int(v)).collect()).collect();
    let d = rational::det(&m);
    d.abs() == Rational::one()
}
