//! Exact rational scalars, parsing/formatting, and small dense rational matrices.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Sign with the convention sgn(0) = 0.
pub fn sgn(r: &Rational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational `{0}`")]
pub struct ParseRationalError(pub String);

/// Accepts `p/q`, integers, and plain decimals such as `-1.25`.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    let bad = || ParseRationalError(String::from(s));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((w, f)) = t.split_once('.') {
        let neg = w.starts_with('-');
        let w = w.trim_start_matches(['-', '+']);
        if !f.chars().all(|c| c.is_ascii_digit()) || (w.is_empty() && f.is_empty()) {
            return Err(bad());
        }
        let whole: BigInt = if w.is_empty() { BigInt::zero() } else { w.parse().map_err(|_| bad())? };
        let frac: BigInt = if f.is_empty() { BigInt::zero() } else { f.parse().map_err(|_| bad())? };
        let den = num_traits::pow(BigInt::from(10), f.len());
        let v = Rational::new(whole * &den + frac, den);
        return Ok(if neg { -v } else { v });
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Always `p/q`, even for integers, so files have one shape.
pub fn format(r: &Rational) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}/{}", r.numer(), r.denom());
    s
}

pub fn lcm_denominators<'a>(it: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Scales rationals by a common denominator; `None` if a numerator leaves i128.
pub fn to_scaled_i128(v: &[Rational], den: &BigInt) -> Option<Vec<i128>> {
    v.iter()
        .map(|r| (r * Rational::from_integer(den.clone())).to_integer().to_i128())
        .collect()
}

pub type Matrix = Vec<Vec<Rational>>;

pub fn zeros(r: usize, c: usize) -> Matrix {
    (0..r).map(|_| (0..c).map(|_| Rational::zero()).collect()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Gauss–Jordan inverse; `None` if singular.
pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut m: Matrix = a.clone();
    let mut inv = zeros(n, n);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in 0..n {
                    let a = &m[col][j] * &f;
                    m[r][j] -= a;
                    let b = &inv[col][j] * &f;
                    inv[r][j] -= b;
                }
            }
        }
    }
    Some(inv)
}

pub fn det(a: &Matrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Rational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        let p = m[col][col].clone();
        d *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &p;
            for j in col..n {
                let t = &m[col][j] * &f;
                m[r][j] -= t;
            }
        }
    }
    d
}

/// Rank by exact elimination.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Matrix = rows.to_vec();
    let n = m.len();
    let cols = if n == 0 { 0 } else { m[0].len() };
    let mut r = 0;
    for col in 0..cols {
        let Some(piv) = (r..n).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, piv);
        let p = m[r][col].clone();
        for i in r + 1..n {
            if m[i][col].is_zero() {
                continue;
            }
            let f = &m[i][col] / &p;
            for j in col..cols {
                let t = &m[r][j] * &f;
                m[i][j] -= t;
            }
        }
        r += 1;
    }
    r
}
