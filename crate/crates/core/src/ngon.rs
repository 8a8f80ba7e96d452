//! Geodesic N-gons: the collection C_1..C_N of negative vectors, its sign
//! kernel, the invariant w, and the completed kernel built from E_2.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::errfn::{erfcx, ErrorFnError, ErrorFunction};
use crate::quadratic::{FloatTolerance, NegativePlane, QuadraticSpace, SpaceError, Vector};
use crate::quadrature;
use crate::rational::{self, int, Rational};

/// The three families of N-gon inequalities, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// (C_j,C_j) < 0
    NegativeNorm,
    /// (C_j,C_j)(C_{j+1},C_{j+1}) − (C_j,C_{j+1})² > 0
    NegativePlane,
    /// (C_j,C_j)(C_{j−1},C_{j+1}) − (C_j,C_{j−1})(C_j,C_{j+1}) < 0
    SameComponent,
}

impl core::fmt::Display for Condition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Condition::NegativeNorm => "negative norm",
            Condition::NegativePlane => "negative plane",
            Condition::SameComponent => "same component",
        })
    }
}

/// `index` is 1-based, matching C_1..C_N.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub condition: Condition,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NGonError {
    #[error("need at least 3 vectors, got {0}")]
    TooFew(usize),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("ambient space has signature ({0},{1}); polygons need q = 2")]
    Signature(usize, usize),
    #[error("condition `{}` fails at j = {} (value {})", .0.condition, .0.index, .0.value)]
    Violation(Violation),
    #[error("{0} conditions fail; an illegal polygon has one vertex in the other component")]
    NotIllegal(usize),
    #[error("ABMP data needs N divisible by 4, got {0}")]
    AbmpLength(usize),
    #[error(transparent)]
    ErrorFunction(#[from] ErrorFnError),
}

impl From<quadrature::QuadratureError> for NGonError {
    fn from(e: quadrature::QuadratureError) -> Self {
        NGonError::ErrorFunction(e.into())
    }
}

fn norms(space: &QuadraticSpace, cs: &[Vector]) -> Vec<[Rational; 3]> {
    // for each j: (C_j,C_j), (C_j,C_{j+1}), (C_{j-1},C_{j+1})
    let n = cs.len();
    (0..n)
        .map(|j| {
            let prev = &cs[(j + n - 1) % n];
            let next = &cs[(j + 1) % n];
            [
                space.inner_unchecked(&cs[j], &cs[j]),
                space.inner_unchecked(&cs[j], next),
                space.inner_unchecked(prev, next),
            ]
        })
        .collect()
}

/// Evaluates all 3N inequalities, reporting every failure in index order.
/// `third_sign` is −1 for our convention and +1 for ABMP data.
fn violations(space: &QuadraticSpace, cs: &[Vector], third_sign: i32) -> Vec<Violation> {
    let n = cs.len();
    let p = norms(space, cs);
    let mut out = Vec::new();
    for j in 0..n {
        let cc = &p[j][0];
        if !cc.is_negative() {
            out.push(Violation { index: j + 1, condition: Condition::NegativeNorm, value: cc.clone() });
        }
    }
    for j in 0..n {
        let v = &p[j][0] * &p[(j + 1) % n][0] - &p[j][1] * &p[j][1];
        if !v.is_positive() {
            out.push(Violation { index: j + 1, condition: Condition::NegativePlane, value: v });
        }
    }
    for j in 0..n {
        let before = &p[(j + n - 1) % n][1];
        let v = &p[j][0] * &p[j][2] - before * &p[j][1];
        if rational::sgn(&v) != third_sign {
            out.push(Violation { index: j + 1, condition: Condition::SameComponent, value: v });
        }
    }
    out
}

/// All polygon conditions in an arbitrary ambient space.
pub fn check_conditions(space: &QuadraticSpace, cs: &[Vector]) -> Result<Vec<Violation>, NGonError> {
    if cs.len() < 3 {
        return Err(NGonError::TooFew(cs.len()));
    }
    for c in cs {
        if c.dim() != space.dim() {
            return Err(SpaceError::DimensionMismatch { expected: space.dim(), got: c.dim() }.into());
        }
    }
    Ok(violations(space, cs, -1))
}

/// −Σ sgn(v,C_j) sgn(v,C_{j+1}).
pub fn w_with(space: &QuadraticSpace, cs: &[Vector], v: &Vector) -> i64 {
    let s: Vec<i32> = cs.iter().map(|c| rational::sgn(&space.inner_unchecked(v, c))).collect();
    -(0..s.len()).map(|j| (s[j] * s[(j + 1) % s.len()]) as i64).sum::<i64>()
}

/// C_1, or C_1 + C_2/K for the least K ≥ 2 giving a negative vector with no
/// vanishing pairing.
pub fn default_negative_vector(space: &QuadraticSpace, cs: &[Vector]) -> Vector {
    let ok = |v: &Vector| {
        space.inner_unchecked(v, v).is_negative()
            && cs.iter().all(|c| !space.inner_unchecked(v, c).is_zero())
    };
    if ok(&cs[0]) {
        return cs[0].clone();
    }
    let mut k = 2i64;
    loop {
        let v = &cs[0] + &cs[1].scale(&rational::rat(1, k));
        if ok(&v) {
            return v;
        }
        k += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub eps: i64,
    pub regular: bool,
}

/// Integer images of the dual vectors G·C_j, each scaled by a positive integer,
/// so pairing signs with integer vectors are decided in i128.
#[derive(Debug, Clone)]
pub struct ScaledForms {
    rows: Vec<Vec<i128>>,
}

impl ScaledForms {
    pub fn new(duals: &[Vector]) -> Option<Self> {
        let rows = duals
            .iter()
            .map(|d| rational::to_scaled_i128(&d.0, &rational::lcm_denominators(&d.0)))
            .collect::<Option<Vec<_>>>()?;
        Some(ScaledForms { rows })
    }

    /// Pairing signs with an integer vector; `None` on overflow.
    pub fn signs(&self, x: &[i128]) -> Option<Vec<i32>> {
        self.rows
            .iter()
            .map(|r| {
                let mut acc: i128 = 0;
                for (a, b) in r.iter().zip(x) {
                    acc = acc.checked_add(a.checked_mul(*b)?)?;
                }
                Some(acc.signum() as i32)
            })
            .collect()
    }
}

/// Floating data for the completed kernel attached to one C_j.
#[derive(Debug, Clone)]
struct Side {
    /// G·und C_j, so (x, und C_j) is a dot product.
    own: Vec<f64>,
    /// G·und C_{j+1⊥j} and G·und C_{j−1⊥j}.
    next: Vec<f64>,
    prev: Vec<f64>,
}

fn dual_f64(space: &QuadraticSpace, u: &[f64]) -> Vec<f64> {
    let m = space.dim();
    let g = space.gram_f64();
    (0..m).map(|i| (0..m).map(|k| g[i * m + k] * u[k]).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scaling applied to x inside E_2 when forming completions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// x·√(2v)
    Weighted,
    /// x·√2, as displayed without v
    Literal,
}

impl Scaling {
    pub fn factor(self, v: f64) -> f64 {
        match self {
            Scaling::Weighted => libm::sqrt(2.0 * v),
            Scaling::Literal => core::f64::consts::SQRT_2,
        }
    }
}

/// H_j e^{gauss}: the r-integral attached to C_j, with the Gaussian weight
/// folded into the exponent so nothing overflows.
fn side_term(a: f64, bp: f64, bm: f64, gauss: f64) -> Result<f64, quadrature::QuadratureError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let sp = libm::sqrt(PI);
    let f = |r: f64| {
        let e = -PI * r * r * a * a + gauss;
        let p = sp * r * bp;
        let m = sp * r * bm;
        if p * m >= 0.0 {
            libm::exp(e) * (libm::erf(p) + libm::erf(m))
        } else {
            let (hi, lo) = if p > 0.0 { (p, m) } else { (m, p) };
            // erf(hi) + erf(lo) = erfc(|lo|) − erfc(hi)
            let l = -lo;
            libm::exp(e - l * l) * erfcx(l) - libm::exp(e - hi * hi) * erfcx(hi)
        }
    };
    let reach = libm::sqrt(1.0 + 50.0 / (PI * a * a));
    let est = quadrature::integrate(f, 1.0, reach, 1e-13, 4000)?;
    Ok(-2.0 * a * est.value)
}

#[derive(Debug, Clone)]
pub struct NGon {
    space: QuadraticSpace,
    cs: Vec<Vector>,
    duals: Vec<Vector>,
    forms: Option<ScaledForms>,
    w: i64,
    witness: Option<NegativePlane>,
    sides: Vec<Side>,
    pairs: Vec<ErrorFunction>,
}

pub fn validate(space: &QuadraticSpace, cs: Vec<Vector>) -> Result<NGon, NGonError> {
    let (p, q) = space.signature();
    if q != 2 {
        return Err(NGonError::Signature(p, q));
    }
    if let Some(v) = check_conditions(space, &cs)?.into_iter().next() {
        return Err(NGonError::Violation(v));
    }
    NGon::build(space.clone(), cs)
}

impl NGon {
    fn build(space: QuadraticSpace, cs: Vec<Vector>) -> Result<Self, NGonError> {
        let n = cs.len();
        let duals: Vec<Vector> = cs.iter().map(|c| space.dual(c)).collect();
        let forms = ScaledForms::new(&duals);
        let v = default_negative_vector(&space, &cs);
        let w = w_with(&space, &cs, &v);
        let witness = NegativePlane::new(&space, alloc::vec![cs[0].clone(), cs[1].clone()]).ok();
        let tol = FloatTolerance::default();
        let mut sides = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for j in 0..n {
            let c = &cs[j];
            let unit = |x: &Vector| -> Result<Vec<f64>, NGonError> {
                Ok(dual_f64(&space, &space.unit_negative(x)?))
            };
            let next = space.project_perp(&cs[(j + 1) % n], c)?;
            let prev = space.project_perp(&cs[(j + n - 1) % n], c)?;
            sides.push(Side { own: unit(c)?, next: unit(&next)?, prev: unit(&prev)? });
            pairs.push(ErrorFunction::new(&space, &[c.clone(), cs[(j + 1) % n].clone()], &tol)?);
        }
        Ok(NGon { space, cs, duals, forms, w, witness, sides, pairs })
    }

    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn cs(&self) -> &[Vector] {
        &self.cs
    }

    pub fn len(&self) -> usize {
        self.cs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cs.is_empty()
    }

    pub fn witness(&self) -> Option<&NegativePlane> {
        self.witness.as_ref()
    }

    pub fn w(&self) -> i64 {
        self.w
    }

    pub fn default_negative_vector(&self) -> Vector {
        default_negative_vector(&self.space, &self.cs)
    }

    pub fn w_invariant(&self, v: Option<&Vector>) -> Result<i64, NGonError> {
        match v {
            None => Ok(self.w),
            Some(v) => {
                let vv = self.space.inner(v, v)?;
                if !vv.is_negative() {
                    return Err(SpaceError::NotNegative(rational::to_f64(&vv)).into());
                }
                Ok(w_with(&self.space, &self.cs, v))
            }
        }
    }

    pub fn pairings(&self, x: &Vector) -> Vec<Rational> {
        self.duals
            .iter()
            .map(|d| x.0.iter().zip(&d.0).fold(Rational::zero(), |a, (p, q)| a + p * q))
            .collect()
    }

    pub fn signs(&self, x: &Vector) -> Vec<i32> {
        self.pairings(x).iter().map(rational::sgn).collect()
    }

    /// Signs for x = X/D with X integral; exact, falling back to rationals.
    pub fn signs_scaled(&self, x: &[i128], den: &BigInt) -> Vec<i32> {
        if let Some(s) = self.forms.as_ref().and_then(|f| f.signs(x)) {
            return s;
        }
        let d = Rational::from_integer(den.clone());
        let v = Vector(x.iter().map(|&c| Rational::from_integer(BigInt::from(c)) / &d).collect());
        self.signs(&v)
    }

    pub fn epsilon_from_signs(&self, s: &[i32]) -> KernelValue {
        let n = s.len();
        let sum: i64 = (0..n).map(|j| (s[j] * s[(j + 1) % n]) as i64).sum();
        KernelValue { eps: self.w + sum, regular: s.iter().all(|&v| v != 0) }
    }

    pub fn epsilon(&self, x: &Vector) -> KernelValue {
        self.epsilon_from_signs(&self.signs(x))
    }

    /// Whether D_x meets the boundary polygon, decided from exact signs.
    pub fn boundary_incident_from_signs(&self, s: &[i32]) -> bool {
        let n = s.len();
        (0..n).any(|j| s[j] == 0 && s[(j + n - 1) % n] * s[(j + 1) % n] >= 0)
    }

    pub fn boundary_incident(&self, x: &Vector) -> bool {
        self.boundary_incident_from_signs(&self.signs(x))
    }

    /// z_j = [C_j, C_{j+1}], j 1-based.
    pub fn vertex_plane(&self, j: usize) -> NegativePlane {
        let n = self.len();
        let a = self.cs[(j + n - 1) % n].clone();
        let b = self.cs[j % n].clone();
        NegativePlane::new(&self.space, alloc::vec![a, b]).expect("vertex planes are negative")
    }

    /// [C_j, (s−1)C_{j−1} + s C_{j+1}] along the edge γ_j.
    pub fn gamma_sample(&self, j: usize, s: &Rational) -> NegativePlane {
        let (c, d) = self.gamma_vectors(j, s);
        NegativePlane::new(&self.space, alloc::vec![c, d]).expect("edge planes are negative")
    }

    pub fn gamma_vectors(&self, j: usize, s: &Rational) -> (Vector, Vector) {
        let n = self.len();
        let i = (j + n - 1) % n;
        let prev = &self.cs[(i + n - 1) % n];
        let next = &self.cs[(i + 1) % n];
        let d = &prev.scale(&(s - Rational::one())) + &next.scale(s);
        (self.cs[i].clone(), d)
    }

    /// Planes along γ(C): every vertex plane and `per_edge` interior points per edge.
    pub fn boundary_samples(&self, per_edge: usize) -> Vec<NegativePlane> {
        let mut out = Vec::new();
        for j in 1..=self.len() {
            out.push(self.vertex_plane(j));
            for k in 1..per_edge {
                out.push(self.gamma_sample(j, &rational::rat(k as i64, per_edge as i64)));
            }
        }
        out
    }

    /// w + Σ E_2(C_j,C_{j+1}; x), no scaling applied.
    pub fn completion_direct(&self, x: &[f64]) -> Result<f64, NGonError> {
        let mut s = self.w as f64;
        for p in &self.pairs {
            s += p.eval(x)?;
        }
        Ok(s)
    }

    /// (w + Σ_j E_2(C_j,C_{j+1}; σx))·exp(−2πvQ(x)), σ from `scaling`.
    ///
    /// Evaluated as ε(x) + Σ_j H_j(σx) + corner terms, which never forms the
    /// huge exponential for negative x.
    pub fn completion_term(&self, x: &Vector, v: f64, scaling: Scaling) -> Result<f64, NGonError> {
        let s = self.signs(x);
        let xf = x.to_f64();
        let qx = rational::to_f64(&self.space.inner_unchecked(x, x)) / 2.0;
        self.completion_term_with(&s, &xf, qx, v, scaling)
    }

    pub fn completion_term_with(
        &self,
        s: &[i32],
        xf: &[f64],
        qx: f64,
        v: f64,
        scaling: Scaling,
    ) -> Result<f64, NGonError> {
        let gauss = -2.0 * PI * v * qx;
        let sigma = scaling.factor(v);
        let n = self.len();
        let mut fixed = self.epsilon_from_signs(s).eps as f64;
        for j in 0..n {
            if s[j] == 0 && s[(j + 1) % n] == 0 {
                fixed += self.pairs[j].eval(&alloc::vec![0.0; xf.len()])?;
            }
        }
        let mut total = if fixed == 0.0 { 0.0 } else { fixed * libm::exp(gauss) };
        for (j, side) in self.sides.iter().enumerate() {
            if s[j] == 0 {
                continue;
            }
            let a = sigma * dot(xf, &side.own);
            let bp = sigma * dot(xf, &side.next);
            let bm = sigma * dot(xf, &side.prev);
            total += side_term(a, bp, bm, gauss).map_err(ErrorFnError::from)?;
        }
        Ok(total)
    }

    /// ¼ Σ [E_2(C_j,C_{j+1}; x√2) − sgn(x,C_j) sgn(x,C_{j+1})] for regular x.
    pub fn j0_value(&self, x: &Vector) -> Result<f64, NGonError> {
        let s = self.signs(x);
        if let Some(j) = s.iter().position(|&v| v == 0) {
            return Err(ErrorFnError::NonRegular(j + 1).into());
        }
        let xf: Vec<f64> = x.to_f64().into_iter().map(|c| c * core::f64::consts::SQRT_2).collect();
        let n = self.len();
        let mut t = 0.0;
        for j in 0..n {
            t += self.pairs[j].eval(&xf)? - (s[j] * s[(j + 1) % n]) as f64;
        }
        Ok(t / 4.0)
    }

    /// The same quantity as a sum of one-dimensional integrals along rays.
    pub fn j0_line(&self, x: &Vector) -> Result<f64, NGonError> {
        let s = self.signs(x);
        if let Some(j) = s.iter().position(|&v| v == 0) {
            return Err(ErrorFnError::NonRegular(j + 1).into());
        }
        let xf = x.to_f64();
        let sig = core::f64::consts::SQRT_2;
        let mut t = 0.0;
        for side in &self.sides {
            let a = sig * dot(&xf, &side.own);
            t += side_term(a, sig * dot(&xf, &side.next), sig * dot(&xf, &side.prev), 0.0)
                .map_err(ErrorFnError::from)?;
        }
        Ok(t / 4.0)
    }

    /// Cyclic relabeling C_j ↦ C_{j+k}.
    pub fn rotated(&self, k: usize) -> NGon {
        let n = self.len();
        let cs = (0..n).map(|j| self.cs[(j + k) % n].clone()).collect();
        NGon::build(self.space.clone(), cs).expect("rotation preserves validity")
    }
}

/// A collection with exactly one vertex plane in the other component of D.
/// That vertex fails the same-component conditions on both of its sides;
/// the collection is stored relabeled so that it is [C_N, C_1].
#[derive(Debug, Clone)]
pub struct IllegalNGon {
    space: QuadraticSpace,
    cs: Vec<Vector>,
    shift: usize,
    w: i64,
    pairs: Vec<ErrorFunction>,
}

fn w_tilde(space: &QuadraticSpace, cs: &[Vector], v: &Vector) -> i64 {
    let n = cs.len();
    let s: Vec<i64> = cs.iter().map(|c| rational::sgn(&space.inner_unchecked(v, c)) as i64).collect();
    s[n - 1] * s[0] - (0..n - 1).map(|j| s[j] * s[j + 1]).sum::<i64>()
}

impl IllegalNGon {
    pub fn new(space: &QuadraticSpace, cs: Vec<Vector>) -> Result<Self, NGonError> {
        let bad = check_conditions(space, &cs)?;
        if let Some(v) = bad.iter().find(|v| v.condition != Condition::SameComponent) {
            return Err(NGonError::Violation(v.clone()));
        }
        let n = cs.len();
        let adjacent = bad.len() == 2 && (bad[0].index % n + 1 == bad[1].index || bad[1].index % n + 1 == bad[0].index);
        if !adjacent {
            return Err(NGonError::NotIllegal(bad.len()));
        }
        // failures at k and k+1 (1-based) put [C_k, C_{k+1}] in the other component
        let k = if bad[0].index % n + 1 == bad[1].index { bad[0].index } else { bad[1].index };
        let shift = k % n;
        let cs: Vec<Vector> = (0..n).map(|j| cs[(j + shift) % n].clone()).collect();
        let v = default_negative_vector(space, &cs);
        let w = w_tilde(space, &cs, &v);
        let tol = FloatTolerance::default();
        let pairs = (0..n)
            .map(|j| ErrorFunction::new(space, &[cs[j].clone(), cs[(j + 1) % n].clone()], &tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IllegalNGon { space: space.clone(), cs, shift, w, pairs })
    }

    /// Relabeled collection, failure at the last index.
    pub fn cs(&self) -> &[Vector] {
        &self.cs
    }

    /// Offset k with relabeled C_j = original C_{j+k}.
    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn w_tilde(&self, v: Option<&Vector>) -> i64 {
        match v {
            None => self.w,
            Some(v) => w_tilde(&self.space, &self.cs, v),
        }
    }

    pub fn epsilon(&self, x: &Vector) -> KernelValue {
        let n = self.cs.len();
        let s: Vec<i64> =
            self.cs.iter().map(|c| rational::sgn(&self.space.inner_unchecked(x, c)) as i64).collect();
        let sum = (0..n - 1).map(|j| s[j] * s[j + 1]).sum::<i64>() - s[n - 1] * s[0];
        KernelValue { eps: self.w + sum, regular: s.iter().all(|&v| v != 0) }
    }

    /// Signs attached to the completion terms: +1 for j < N, −1 for (C_N, C_1).
    pub fn completion_signs(&self) -> Vec<i32> {
        let n = self.cs.len();
        (0..n).map(|j| if j + 1 == n { -1 } else { 1 }).collect()
    }

    /// w̃ + Σ_j ±E_2(C_j,C_{j+1}; x).
    pub fn completion_direct(&self, x: &[f64]) -> Result<f64, NGonError> {
        let mut t = self.w as f64;
        for (p, s) in self.pairs.iter().zip(self.completion_signs()) {
            t += s as f64 * p.eval(x)?;
        }
        Ok(t)
    }
}

fn abmp_signs(n: usize) -> Vec<Rational> {
    (0..n).map(|i| if (i / 2) % 2 == 0 { int(1) } else { int(-1) }).collect()
}

/// Converts ABMP data (third condition with the opposite sign) to a polygon
/// by the sign pattern +,+,−,−,+,+,...
pub fn from_abmp(space: &QuadraticSpace, cs: &[Vector]) -> Result<NGon, NGonError> {
    let n = cs.len();
    if n < 3 {
        return Err(NGonError::TooFew(n));
    }
    if n % 4 != 0 {
        return Err(NGonError::AbmpLength(n));
    }
    if let Some(v) = violations(space, cs, 1).into_iter().next() {
        return Err(NGonError::Violation(v));
    }
    let out = cs.iter().zip(abmp_signs(n)).map(|(c, s)| c.scale(&s)).collect();
    validate(space, out)
}

pub fn to_abmp(ngon: &NGon) -> Vec<Vector> {
    ngon.cs.iter().zip(abmp_signs(ngon.len())).map(|(c, s)| c.scale(&s)).collect()
}

/// w + Σ (−1)^{j−1} sgn(x,C'_j) sgn(x,C'_{j+1}) on ABMP data.
pub fn abmp_kernel(ngon: &NGon, abmp: &[Vector], x: &Vector) -> i64 {
    let n = abmp.len();
    let s: Vec<i64> =
        abmp.iter().map(|c| rational::sgn(&ngon.space.inner_unchecked(x, c)) as i64).collect();
    ngon.w + (0..n).map(|j| if j % 2 == 0 { 1 } else { -1 } * s[j] * s[(j + 1) % n]).sum::<i64>()
}
