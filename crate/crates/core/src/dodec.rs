//! Dodecahedral cells in signature (m−3,3): face combinatorics, the
//! dodecahedron conditions, the kernels 𝒟, 𝒫, ℰ, and the seed construction.
//!
//! Faces are labelled by Z/12 with the involution ā = 11 − a pairing
//! antipodal faces.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::errfn::{self, ErrorFnError, ErrorFunction};
use crate::ngon::{self, NGonError, ScaledForms, Violation};
use crate::quadratic::{FloatTolerance, NegativePlane, QuadraticSpace, SpaceError, Vector};
use crate::rational::{self, int, rat, Rational};
use crate::lattice::LatticeCoset;
use crate::theta::{self, Contribution, Executor, QExpansion, SeriesOptions, SignKernel, ThetaError};

pub const FACES: usize = 12;

pub fn bar(a: usize) -> usize {
    11 - a
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DodecError {
    #[error("expected 12 vectors, got {0}")]
    Count(usize),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("ambient signature ({0},{1}) does not have q = 3")]
    Signature(usize, usize),
    #[error("face {face}: {violation:?}")]
    Violation { face: usize, violation: Violation },
    #[error(transparent)]
    NGon(#[from] NGonError),
    #[error(transparent)]
    ErrorFunction(#[from] ErrorFnError),
    #[error("seed frame is not an orthogonal equal-norm negative basis with a positive orthogonal v0")]
    Frame,
    #[error("recipe produced inconsistent cycles at face {0}")]
    Recipe(usize),
}

/// Clockwise face cycles around each face, as tabulated for the top face 0.
const CYCLES: [[usize; 5]; FACES] = [
    [1, 2, 3, 4, 5],
    [0, 5, 8, 7, 2],
    [0, 1, 7, 6, 3],
    [0, 2, 6, 10, 4],
    [0, 3, 10, 9, 5],
    [0, 4, 9, 8, 1],
    [11, 10, 3, 2, 7],
    [11, 6, 2, 1, 8],
    [11, 7, 1, 5, 9],
    [11, 8, 5, 4, 10],
    [11, 9, 4, 3, 6],
    [6, 7, 8, 9, 10],
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DodecCombinatorics {
    cycles: [[usize; 5]; FACES],
    vertices: Vec<[usize; 3]>,
}

/// Rotate a 5-cycle so that it starts at `first`.
fn rotate_to(c: &[usize; 5], first: usize) -> Option<[usize; 5]> {
    let p = c.iter().position(|&v| v == first)?;
    Some(core::array::from_fn(|k| c[(p + k) % 5]))
}

pub fn same_cycle(a: &[usize; 5], b: &[usize; 5]) -> bool {
    rotate_to(b, a[0]).is_some_and(|r| &r == a)
}

/// (a, j, b, u, v) ↦ (b, i, a, ū, v̄): the cycle of face j from the cycle
/// of an adjacent face i, written with j in second position.
pub fn recipe(i: usize, cycle: &[usize; 5]) -> [usize; 5] {
    let [a, _, b, u, v] = *cycle;
    [b, i, a, bar(u), bar(v)]
}

impl DodecCombinatorics {
    pub fn cycle_table() -> Self {
        Self::from_cycles(CYCLES)
    }

    fn from_cycles(cycles: [[usize; 5]; FACES]) -> Self {
        let mut set = BTreeSet::new();
        for (i, c) in cycles.iter().enumerate() {
            for k in 0..5 {
                let mut t = [i, c[k], c[(k + 1) % 5]];
                t.sort_unstable();
                set.insert(t);
            }
        }
        DodecCombinatorics { cycles, vertices: set.into_iter().collect() }
    }

    /// Regenerates every cycle from 𝓕(0) by repeated use of the recipe.
    pub fn from_recipe(top: [usize; 5]) -> Result<Self, DodecError> {
        let mut cycles: [Option<[usize; 5]>; FACES] = [None; FACES];
        cycles[0] = Some(top);
        let mut queue = alloc::vec![0usize];
        while let Some(i) = queue.pop() {
            let ci = cycles[i].expect("queued faces are known");
            for k in 0..5 {
                let j = ci[k];
                let rotated: [usize; 5] = core::array::from_fn(|m| ci[(k + 4 + m) % 5]);
                let cj = recipe(i, &rotated);
                match cycles[j] {
                    Some(old) if !same_cycle(&old, &cj) => return Err(DodecError::Recipe(j)),
                    Some(_) => {}
                    None => {
                        cycles[j] = Some(cj);
                        queue.push(j);
                    }
                }
            }
        }
        let mut out = [[0usize; 5]; FACES];
        for (i, c) in cycles.iter().enumerate() {
            out[i] = c.ok_or(DodecError::Recipe(i))?;
        }
        Ok(Self::from_cycles(out))
    }

    pub fn cycle(&self, i: usize) -> &[usize; 5] {
        &self.cycles[i]
    }

    pub fn cycles(&self) -> &[[usize; 5]; FACES] {
        &self.cycles
    }

    /// The 20 vertex triples, each sorted.
    pub fn vertices(&self) -> &[[usize; 3]] {
        &self.vertices
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.cycles[i].contains(&j)
    }

    /// Faces incident to a vertex triple; always 3 for the stored table.
    pub fn incidence(&self, v: &[usize; 3]) -> usize {
        (0..FACES)
            .filter(|&i| {
                let c = &self.cycles[i];
                (0..5).any(|k| {
                    let mut t = [i, c[k], c[(k + 1) % 5]];
                    t.sort_unstable();
                    &t == v
                })
            })
            .count()
    }

    /// Whether the two tables agree up to rotation of each cycle.
    pub fn same_as(&self, other: &Self) -> bool {
        (0..FACES).all(|i| same_cycle(&self.cycles[i], &other.cycles[i]))
    }
}

/// ℛ(i) = (P_i C_j) for j ∈ 𝓕(i).
pub fn projected_face(space: &QuadraticSpace, cs: &[Vector], comb: &DodecCombinatorics, i: usize) -> Result<Vec<Vector>, SpaceError> {
    comb.cycle(i).iter().map(|&j| space.project_perp(&cs[j], &cs[i])).collect()
}

/// Every failing 5-gon inequality, tagged with its face.
pub fn violations(space: &QuadraticSpace, cs: &[Vector]) -> Result<Vec<(usize, Violation)>, DodecError> {
    if cs.len() != FACES {
        return Err(DodecError::Count(cs.len()));
    }
    let comb = DodecCombinatorics::cycle_table();
    let mut out = Vec::new();
    for i in 0..FACES {
        if !space.inner(&cs[i], &cs[i])?.is_negative() {
            return Err(SpaceError::NotNegative(rational::to_f64(&space.inner_unchecked(&cs[i], &cs[i]))).into());
        }
        let r = projected_face(space, cs, &comb, i)?;
        out.extend(ngon::check_conditions(space, &r)?.into_iter().map(|v| (i, v)));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DodecData {
    space: QuadraticSpace,
    cs: Vec<Vector>,
    comb: DodecCombinatorics,
    faces: Vec<Vec<Vector>>,
    face_w: Vec<i64>,
    forms: Option<ScaledForms>,
    duals: Vec<Vector>,
    v: Vector,
    d_at_v: Rational,
    base: Option<NegativePlane>,
}

pub fn validate_dodec(space: &QuadraticSpace, cs: Vec<Vector>) -> Result<DodecData, DodecError> {
    let (p, q) = space.signature();
    if q != 3 {
        return Err(DodecError::Signature(p, q));
    }
    if let Some((face, violation)) = violations(space, &cs)?.into_iter().next() {
        return Err(DodecError::Violation { face, violation });
    }
    let comb = DodecCombinatorics::cycle_table();
    let faces = (0..FACES).map(|i| projected_face(space, &cs, &comb, i)).collect::<Result<Vec<_>, _>>()?;
    let face_w = faces
        .iter()
        .map(|r| ngon::w_with(space, r, &ngon::default_negative_vector(space, r)))
        .collect();
    let duals: Vec<Vector> = cs.iter().map(|c| space.dual(c)).collect();
    let forms = ScaledForms::new(&duals);
    let v = ngon::default_negative_vector(space, &cs);
    let mut d = DodecData {
        space: space.clone(),
        cs,
        comb,
        faces,
        face_w,
        forms,
        duals,
        v: v.clone(),
        d_at_v: Rational::zero(),
        base: None,
    };
    d.d_at_v = d.d_kernel(&v);
    Ok(d)
}

impl DodecData {
    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn cs(&self) -> &[Vector] {
        &self.cs
    }

    pub fn combinatorics(&self) -> &DodecCombinatorics {
        &self.comb
    }

    pub fn face(&self, i: usize) -> &[Vector] {
        &self.faces[i]
    }

    /// w(ℛ(i)) for the default negative vector of V_i.
    pub fn face_w(&self, i: usize) -> i64 {
        self.face_w[i]
    }

    /// w(ℛ(i)) for a caller-chosen negative vector, which must lie in V_i.
    pub fn face_w_with(&self, i: usize, v: &Vector) -> Result<i64, SpaceError> {
        if !self.space.inner(v, &self.cs[i])?.is_zero() {
            return Err(SpaceError::NotNegativePlane);
        }
        if !self.space.inner_unchecked(v, v).is_negative() {
            return Err(SpaceError::NotNegative(rational::to_f64(&self.space.inner_unchecked(v, v))));
        }
        Ok(ngon::w_with(&self.space, &self.faces[i], v))
    }

    pub fn negative_vector(&self) -> &Vector {
        &self.v
    }

    pub fn with_base_plane(mut self, z: NegativePlane) -> Self {
        self.base = Some(z);
        self
    }

    pub fn signs(&self, x: &Vector) -> Vec<i32> {
        self.duals
            .iter()
            .map(|d| rational::sgn(&x.0.iter().zip(&d.0).fold(Rational::zero(), |a, (p, q)| a + p * q)))
            .collect()
    }

    pub fn signs_scaled(&self, x: &[i128], den: &BigInt) -> Vec<i32> {
        if let Some(s) = self.forms.as_ref().and_then(|f| f.signs(x)) {
            return s;
        }
        let d = Rational::from_integer(den.clone());
        self.signs(&Vector(x.iter().map(|&c| Rational::from_integer(BigInt::from(c)) / &d).collect()))
    }

    /// −⅛ Σ_ν sgn(x;ν) − ⅛ Σ_i w(ℛ(i)) sgn(x,C_i).
    pub fn d_from_signs(&self, s: &[i32]) -> Rational {
        let vert: i64 = self.comb.vertices().iter().map(|t| (s[t[0]] * s[t[1]] * s[t[2]]) as i64).sum();
        let face: i64 = (0..FACES).map(|i| self.face_w[i] * s[i] as i64).sum();
        rat(-(vert + face), 8)
    }

    pub fn d_kernel(&self, x: &Vector) -> Rational {
        self.d_from_signs(&self.signs(x))
    }

    pub fn p_kernel(&self, x: &Vector) -> Rational {
        self.d_kernel(x) - &self.d_at_v
    }

    /// 𝒫 with a caller-chosen negative vector.
    pub fn p_kernel_with(&self, x: &Vector, v: &Vector) -> Result<Rational, SpaceError> {
        if !self.space.inner(v, v)?.is_negative() {
            return Err(SpaceError::NotNegative(rational::to_f64(&self.space.inner_unchecked(v, v))));
        }
        Ok(self.d_kernel(x) - self.d_kernel(v))
    }

    pub fn d_at_negative(&self) -> &Rational {
        &self.d_at_v
    }

    pub fn regular(&self, x: &Vector) -> bool {
        self.signs(x).iter().all(|&s| s != 0)
    }

    /// ⅛ Σ_ν E_3(ν; x√2) + ⅛ Σ_i w(ℛ(i)) E_1(C_i; x√2).
    pub fn e_kernel(&self, x: &[f64]) -> Result<f64, DodecError> {
        let tol = FloatTolerance::default();
        let xs: Vec<f64> = x.iter().map(|c| c * core::f64::consts::SQRT_2).collect();
        let mut total = 0.0;
        for t in self.comb.vertices() {
            let cs = [self.cs[t[0]].clone(), self.cs[t[1]].clone(), self.cs[t[2]].clone()];
            let f = ErrorFunction::new(&self.space, &cs, &tol)?;
            total += f.eval(&xs).map_err(ErrorFnError::from)?;
        }
        for i in 0..FACES {
            if self.face_w[i] != 0 {
                total += self.face_w[i] as f64 * errfn::e1(&self.space, &self.cs[i], &xs)?;
            }
        }
        Ok(total / 8.0)
    }

    /// ℰ(x) − 𝒟(𝒗).
    pub fn i0(&self, x: &[f64]) -> Result<f64, DodecError> {
        Ok(self.e_kernel(x)? - rational::to_f64(&self.d_at_v))
    }

    pub fn vertex_plane(&self, t: &[usize; 3]) -> NegativePlane {
        NegativePlane::new(&self.space, alloc::vec![self.cs[t[0]].clone(), self.cs[t[1]].clone(), self.cs[t[2]].clone()])
            .expect("vertex planes are negative")
    }

    /// [C_i, C_j, (s−1)C_a + s C_b] along the edge of face i towards j.
    pub fn edge_sample(&self, i: usize, k: usize, s: &Rational) -> NegativePlane {
        let c = self.comb.cycle(i);
        let (a, j, b) = (c[(k + 4) % 5], c[k], c[(k + 1) % 5]);
        let d = &self.cs[a].scale(&(s - int(1))) + &self.cs[b].scale(s);
        NegativePlane::new(&self.space, alloc::vec![self.cs[i].clone(), self.cs[j].clone(), d])
            .expect("edge planes are negative")
    }

    /// No two of the 20 vertex planes coincide.
    pub fn vertices_distinct(&self) -> bool {
        let vs = self.comb.vertices();
        for (p, a) in vs.iter().enumerate() {
            for b in &vs[p + 1..] {
                let m: rational::Matrix = a.iter().chain(b).map(|&i| self.cs[i].0.clone()).collect();
                if rational::rank(&m) == 3 {
                    return false;
                }
            }
        }
        true
    }
}

impl SignKernel for DodecData {
    fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    fn base_planes(&self) -> Vec<NegativePlane> {
        match &self.base {
            Some(z) => alloc::vec![z.clone()],
            None => self.comb.vertices().iter().map(|t| self.vertex_plane(t)).collect(),
        }
    }

    fn boundary_samples(&self) -> Vec<NegativePlane> {
        let mut out: Vec<NegativePlane> = self.comb.vertices().iter().map(|t| self.vertex_plane(t)).collect();
        for i in 0..FACES {
            for k in 0..5 {
                for s in 1..8 {
                    out.push(self.edge_sample(i, k, &rat(s, 8)));
                }
            }
        }
        out
    }

    fn contribution(&self, x: &[i128], den: &BigInt, q: &Rational) -> Contribution {
        let s = self.signs_scaled(x, den);
        Contribution {
            value: self.d_from_signs(&s) - &self.d_at_v,
            boundary: q.is_positive() && s.iter().any(|&v| v == 0),
        }
    }

    fn max_weight(&self) -> Rational {
        let w: i64 = self.face_w.iter().map(|w| w.abs()).sum();
        rat(2 * (20 + w), 8)
    }
}

/// Σ_x 𝒫(x) q^{Q(x)} over a coset. 𝒫 is odd, so the series of a coset
/// with μ ≡ −μ vanishes identically.
pub fn dodec_series<E: Executor>(
    coset: &LatticeCoset,
    dodec: &DodecData,
    opts: &SeriesOptions,
    exec: &E,
) -> Result<QExpansion, ThetaError> {
    theta::holomorphic_series(coset, dodec, opts, exec)
}

/// Outward face normals of a regular dodecahedron (the icosahedron vertices
/// (0,±1,±φ), (±1,±φ,0), (±φ,0,±1)) with φ replaced by `phi`, numbered so
/// that 𝓕(0) = (1,2,3,4,5) runs clockwise seen from outside and n_ā = −n_a.
pub fn dodecahedron_normals(phi: &Rational) -> [[Rational; 3]; FACES] {
    let z = Rational::zero;
    let one = || int(1);
    let p = || phi.clone();
    let top: [[Rational; 3]; 6] = [
        [z(), one(), p()],
        [-one(), p(), z()],
        [one(), p(), z()],
        [p(), z(), one()],
        [z(), -one(), p()],
        [-p(), z(), one()],
    ];
    core::array::from_fn(|i| {
        if i < 6 {
            top[i].clone()
        } else {
            let n = &top[bar(i)];
            [-n[0].clone(), -n[1].clone(), -n[2].clone()]
        }
    })
}

/// Rational stand-in for the golden ratio.
pub fn default_phi() -> Rational {
    rat(809, 500)
}

/// 𝒞_t = 𝒞_0 + t·v0, with 𝒞_0 the dodecahedron normals written in the
/// frame `basis` of a negative 3-plane.
pub fn seed_construction(
    space: &QuadraticSpace,
    basis: &[Vector; 3],
    v0: &Vector,
    t: &[Rational],
) -> Result<Vec<Vector>, DodecError> {
    seed_construction_with(space, basis, v0, t, &default_phi())
}

pub fn seed_construction_with(
    space: &QuadraticSpace,
    basis: &[Vector; 3],
    v0: &Vector,
    t: &[Rational],
    phi: &Rational,
) -> Result<Vec<Vector>, DodecError> {
    if t.len() != FACES {
        return Err(DodecError::Count(t.len()));
    }
    let n0 = space.inner(&basis[0], &basis[0])?;
    if !n0.is_negative() {
        return Err(DodecError::Frame);
    }
    for a in 0..3 {
        if space.inner(&basis[a], &basis[a])? != n0 || !space.inner(&basis[a], v0)?.is_zero() {
            return Err(DodecError::Frame);
        }
        for b in a + 1..3 {
            if !space.inner(&basis[a], &basis[b])?.is_zero() {
                return Err(DodecError::Frame);
            }
        }
    }
    if !space.inner(v0, v0)?.is_positive() {
        return Err(DodecError::Frame);
    }
    let normals = dodecahedron_normals(phi);
    Ok((0..FACES)
        .map(|i| {
            let mut c = v0.scale(&t[i]);
            for k in 0..3 {
                c = &c + &basis[k].scale(&normals[i][k]);
            }
            c
        })
        .collect())
}

/// diag(2a,−2,−2,−2) with z0 = span(e1,e2,e3) and v0 = e0.
pub fn standard_frame(a: i64) -> (QuadraticSpace, [Vector; 3], Vector) {
    let space = QuadraticSpace::diagonal(&[2 * a, -2, -2, -2]);
    let basis = [Vector::unit(4, 1), Vector::unit(4, 2), Vector::unit(4, 3)];
    (space, basis, Vector::unit(4, 0))
}

/// The seed collection in the standard frame, validated, with the seed
/// plane as base point.
pub fn standard_seed(a: i64, t: &[Rational]) -> Result<DodecData, DodecError> {
    let (space, basis, v0) = standard_frame(a);
    let cs = seed_construction(&space, &basis, &v0, t)?;
    let z = NegativePlane::new(&space, basis.to_vec())?;
    Ok(validate_dodec(&space, cs)?.with_base_plane(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_example() {
        let f4 = rotate_to(&CYCLES[4], 9).unwrap();
        assert_eq!(f4, [9, 5, 0, 3, 10]);
        assert_eq!(recipe(4, &f4), CYCLES[5]);
    }

    #[test]
    fn table_closes_under_recipe() {
        let r = DodecCombinatorics::from_recipe(CYCLES[0]).unwrap();
        assert!(r.same_as(&DodecCombinatorics::cycle_table()));
        assert_eq!(r.vertices().len(), 20);
    }

    #[test]
    fn seed_validates() {
        let d = standard_seed(1, &alloc::vec![Rational::zero(); 12]).unwrap();
        for i in 0..FACES {
            assert!(d.face_w(i) == -1 || d.face_w(i) == 3);
        }
        assert!(!d.vertices_distinct());
    }
}
