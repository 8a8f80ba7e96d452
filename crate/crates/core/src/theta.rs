//! q-expansions of holomorphic theta series with certified enumeration
//! windows, numerical completions, and the finite Weil representation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, Zero};

use crate::lattice::{self, DiscriminantGroup, Enumeration, LatticeCoset, LatticeError, LatticePoint};
use crate::ngon::{NGon, NGonError, Scaling};
use crate::quadratic::{NegativePlane, QuadraticSpace, Vector};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThetaError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("kernel and coset live in different spaces")]
    SpaceMismatch,
    #[error("window certification failed after {attempts} attempts; retry with safety >= {suggested_safety}")]
    Certification { attempts: usize, suggested_safety: f64 },
    #[error("imaginary part of tau must be positive")]
    LowerHalfPlane,
    #[error("tail bound {bound:e} exceeds tolerance {tolerance:e}")]
    Tail { bound: f64, tolerance: f64 },
    #[error(transparent)]
    NGon(#[from] NGonError),
}

/// Deterministic indexed parallel map; results come back in index order.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Weight of one lattice vector in a holomorphic series.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub value: Rational,
    /// x meets the boundary of the spanning surface; the level is reported as
    /// non-regular.
    pub boundary: bool,
}

/// An exact sign kernel whose support is controlled by a spanning surface.
pub trait SignKernel: Sync {
    fn space(&self) -> &QuadraticSpace;
    /// Candidate base points z0.
    fn base_planes(&self) -> Vec<NegativePlane>;
    /// Planes sampling the boundary of the spanning surface.
    fn boundary_samples(&self) -> Vec<NegativePlane>;
    fn contribution(&self, x: &[i128], den: &BigInt, q: &Rational) -> Contribution;
    /// Bound on |contribution| for a single vector.
    fn max_weight(&self) -> Rational;
}

impl SignKernel for NGon {
    fn space(&self) -> &QuadraticSpace {
        NGon::space(self)
    }

    fn base_planes(&self) -> Vec<NegativePlane> {
        (1..=self.len()).map(|j| self.vertex_plane(j)).collect()
    }

    fn boundary_samples(&self) -> Vec<NegativePlane> {
        NGon::boundary_samples(self, 32)
    }

    fn contribution(&self, x: &[i128], den: &BigInt, q: &Rational) -> Contribution {
        let s = self.signs_scaled(x, den);
        let e = self.epsilon_from_signs(&s);
        Contribution {
            value: rational::int(e.eps),
            boundary: q.is_positive() && self.boundary_incident_from_signs(&s),
        }
    }

    fn max_weight(&self) -> Rational {
        rational::int(2 * self.len() as i64)
    }
}

#[derive(Debug, Clone)]
pub struct EnumWindow {
    pub z0: NegativePlane,
    pub bound: f64,
    pub kappa: f64,
    pub safety: f64,
}

impl EnumWindow {
    pub fn for_nmax(z0: NegativePlane, kappa: f64, safety: f64, nmax: f64) -> Self {
        EnumWindow { z0, bound: kappa * safety * 2.0 * nmax, kappa, safety }
    }
}

/// Base plane minimizing κ together with that κ.
pub fn choose_base<K: SignKernel + ?Sized>(kernel: &K) -> (NegativePlane, f64) {
    let space = kernel.space();
    let samples = kernel.boundary_samples();
    let mut best: Option<(NegativePlane, f64)> = None;
    for z in kernel.base_planes() {
        let k = lattice::kappa(space, &z, &samples);
        if best.as_ref().map_or(true, |(_, b)| k < *b) {
            best = Some((z, k));
        }
    }
    best.expect("kernel has a base plane")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub bound: f64,
    pub kappa: f64,
    pub safety: f64,
    pub guard: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    pub mu: Vector,
    pub nmax: Rational,
    /// Exponent n = Q(x) ↦ coefficient, at regular levels only.
    pub coeffs: BTreeMap<Rational, Rational>,
    /// Levels where some vector meets the boundary, with the value computed
    /// under the sgn(0) = 0 convention.
    pub flagged: BTreeMap<Rational, Rational>,
    /// Number of enumerated vectors per level.
    pub counts: BTreeMap<Rational, usize>,
    pub certificate: Certificate,
    pub normalized: bool,
}

impl QExpansion {
    pub fn coefficient(&self, n: &Rational) -> Rational {
        self.coeffs.get(n).cloned().unwrap_or_else(Rational::zero)
    }

    /// Every level obeys |c(n)| ≤ w_max·r(n).
    pub fn within_bounds(&self, max_weight: &Rational) -> bool {
        let scale = if self.normalized { rational::int(4) } else { rational::int(1) };
        self.coeffs.iter().chain(&self.flagged).all(|(n, c)| {
            let r = self.counts.get(n).copied().unwrap_or(0);
            (c * &scale).abs() <= max_weight * rational::int(r as i64)
        })
    }
}

#[derive(Debug, Clone)]
pub struct SeriesOptions {
    pub nmax: Rational,
    pub safety: f64,
    pub guard: f64,
    pub retries: usize,
    /// Divide coefficients by 4.
    pub normalized: bool,
}

impl SeriesOptions {
    pub fn new(nmax: Rational) -> Self {
        SeriesOptions { nmax, safety: 1.5, guard: 1.2, retries: 3, normalized: false }
    }
}

/// Σ_x K(x) q^{Q(x)} over μ + L up to Q ≤ nmax.
pub fn holomorphic_series<K, E>(
    coset: &LatticeCoset,
    kernel: &K,
    opts: &SeriesOptions,
    exec: &E,
) -> Result<QExpansion, ThetaError>
where
    K: SignKernel + ?Sized,
    E: Executor,
{
    if coset.space().gram() != kernel.space().gram() {
        return Err(ThetaError::SpaceMismatch);
    }
    let (z0, kappa) = choose_base(kernel);
    let nmax_f = rational::to_f64(&opts.nmax).max(0.0);
    let mut safety = opts.safety;
    for attempt in 1..=opts.retries + 1 {
        let window = EnumWindow::for_nmax(z0.clone(), kappa, safety, nmax_f);
        let outer = window.bound * opts.guard;
        let e = lattice::enumerate(coset, &window.z0, outer)?;
        let contribs = exec.map(e.points.len(), |i| {
            let p = &e.points[i];
            if p.q > opts.nmax {
                None
            } else {
                Some(kernel.contribution(&p.scaled, &e.den, &p.q))
            }
        });
        let b = rational::from_f64(window.bound).unwrap_or_else(Rational::zero);
        let inner = rational::from_f64(window.bound / opts.guard).unwrap_or_else(Rational::zero);
        let shell_hit = e.points.iter().zip(&contribs).any(|(p, c)| {
            p.majorant >= inner
                && matches!(c, Some(c) if !c.value.is_zero() || c.boundary)
        });
        if shell_hit {
            safety *= 2.0;
            if attempt == opts.retries + 1 {
                return Err(ThetaError::Certification { attempts: attempt, suggested_safety: safety });
            }
            continue;
        }
        let mut coeffs: BTreeMap<Rational, Rational> = BTreeMap::new();
        let mut counts: BTreeMap<Rational, usize> = BTreeMap::new();
        let mut boundary: BTreeSet<Rational> = BTreeSet::new();
        for (p, c) in e.points.iter().zip(contribs) {
            let Some(c) = c else { continue };
            if p.majorant > b {
                continue;
            }
            *counts.entry(p.q.clone()).or_insert(0) += 1;
            if c.boundary {
                boundary.insert(p.q.clone());
            }
            if !c.value.is_zero() || c.boundary {
                *coeffs.entry(p.q.clone()).or_insert_with(Rational::zero) += c.value;
            }
        }
        if opts.normalized {
            let four = rational::int(4);
            coeffs.values_mut().for_each(|v| *v = &*v / &four);
        }
        let mut flagged = BTreeMap::new();
        for n in &boundary {
            if let Some(v) = coeffs.remove(n) {
                flagged.insert(n.clone(), v);
            }
        }
        coeffs.retain(|_, v| !v.is_zero());
        return Ok(QExpansion {
            mu: coset.mu().clone(),
            nmax: opts.nmax.clone(),
            coeffs,
            flagged,
            counts,
            certificate: Certificate {
                bound: window.bound,
                kappa,
                safety,
                guard: opts.guard,
                attempts: attempt,
            },
            normalized: opts.normalized,
        });
    }
    unreachable!()
}

/// e(t) = exp(2πit).
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

fn e_rational(t: &Rational) -> Complex64 {
    e(rational::to_f64(&(t - t.floor())))
}

/// Bound on Σ_{x ∈ μ+L, (x,x)_{z0} > B} weight·exp(−α (x,x)_{z0}).
pub fn gaussian_tail(weight: f64, alpha: f64, bound: f64, lambda_min: f64, rank: usize) -> f64 {
    let beta = alpha / 2.0;
    let per_axis = 2.0 + libm::sqrt(PI / (beta * lambda_min));
    weight * libm::exp(-beta * bound) * libm::pow(per_axis, rank as f64)
}

#[derive(Debug, Clone)]
pub struct CompletionOptions {
    pub nmax: Rational,
    pub safety: f64,
    pub scaling: Scaling,
    /// Added to w(C) in every term; nonzero only for negative controls.
    pub w_shift: i64,
}

impl CompletionOptions {
    pub fn new(nmax: Rational) -> Self {
        CompletionOptions { nmax, safety: 1.5, scaling: Scaling::Weighted, w_shift: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionValue {
    pub mu: Vector,
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
    pub window: EnumWindow,
}

/// Real weights f(x)·exp(−2πvQ(x)) for every window vector, in canonical order.
fn completion_terms<E: Executor>(
    coset: &LatticeCoset,
    ngon: &NGon,
    v: f64,
    window: &EnumWindow,
    opts: &CompletionOptions,
    exec: &E,
) -> Result<(Enumeration, Vec<f64>), ThetaError> {
    let e = lattice::enumerate(coset, &window.z0, window.bound)?;
    let vals = exec.map(e.points.len(), |i| {
        let p: &LatticePoint = &e.points[i];
        let s = ngon.signs_scaled(&p.scaled, &e.den);
        let xf = p.to_f64(&e.den);
        let qx = rational::to_f64(&p.q);
        let t = ngon.completion_term_with(&s, &xf, qx, v, opts.scaling)?;
        Ok::<f64, NGonError>(if opts.w_shift != 0 {
            t + opts.w_shift as f64 * libm::exp(-2.0 * PI * v * qx)
        } else {
            t
        })
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((e, vals))
}

fn completion_window(ngon: &NGon, opts: &CompletionOptions) -> (EnumWindow, f64) {
    let (z0, kappa) = choose_base(ngon);
    let w = EnumWindow::for_nmax(z0, kappa, opts.safety, rational::to_f64(&opts.nmax).max(0.0));
    let lmin = lattice::majorant_min_eigenvalue(ngon.space(), &w.z0);
    (w, lmin)
}

fn sum_terms(en: &Enumeration, vals: &[f64], u: f64) -> Complex64 {
    let mut acc = Complex64::zero();
    for (p, &t) in en.points.iter().zip(vals) {
        if t != 0.0 {
            acc += e(u * rational::to_f64(&p.q)) * t;
        }
    }
    acc
}

/// Σ_x [w + Σ_j E_2(C_j,C_{j+1}; σx)] q^{Q(x)} over the certified window.
pub fn completion_eval<E: Executor>(
    coset: &LatticeCoset,
    ngon: &NGon,
    tau: Complex64,
    opts: &CompletionOptions,
    exec: &E,
) -> Result<CompletionValue, ThetaError> {
    if tau.im <= 0.0 {
        return Err(ThetaError::LowerHalfPlane);
    }
    let (window, lmin) = completion_window(ngon, opts);
    let (en, vals) = completion_terms(coset, ngon, tau.im, &window, opts, exec)?;
    let alpha = PI * tau.im / window.kappa;
    let weight = 2.0 * ngon.len() as f64 + opts.w_shift.unsigned_abs() as f64;
    Ok(CompletionValue {
        mu: coset.mu().clone(),
        value: sum_terms(&en, &vals, tau.re),
        tail_bound: gaussian_tail(weight, alpha, window.bound, lmin, coset.space().dim()),
        terms: en.points.len(),
        window,
    })
}

/// The finite Weil representation ρ_L on C[L∨/L].
#[derive(Debug, Clone)]
pub struct WeilRepresentation {
    group: DiscriminantGroup,
    sig: i64,
}

pub type CMatrix = Vec<Vec<Complex64>>;

fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

impl WeilRepresentation {
    pub fn new(space: &QuadraticSpace) -> Result<Self, ThetaError> {
        let group = DiscriminantGroup::new(space)?;
        let (p, q) = space.signature();
        Ok(WeilRepresentation { group, sig: p as i64 - q as i64 })
    }

    pub fn group(&self) -> &DiscriminantGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.is_empty()
    }

    /// Diagonal of ρ(T): e(Q(μ)).
    pub fn t_phases(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| e_rational(&self.group.q_mod1(i))).collect()
    }

    /// ρ(S)_{μν} = e(−sig/8)/√|D| · e(−(μ,ν)).
    pub fn s_matrix(&self) -> CMatrix {
        let n = self.len();
        let c = e(-(self.sig as f64) / 8.0) / libm::sqrt(n as f64);
        (0..n)
            .map(|i| (0..n).map(|j| c * e_rational(&-self.group.b_mod1(i, j))).collect())
            .collect()
    }

    fn t_matrix(&self) -> CMatrix {
        let ph = self.t_phases();
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { ph[i] } else { Complex64::zero() }).collect())
            .collect()
    }

    /// Defects of S² = Z and (ST)³ = Z, where Z e_μ = e(−sig/4) e_{−μ}.
    pub fn relation_defects(&self) -> (f64, f64) {
        let n = self.len();
        let s = self.s_matrix();
        let t = self.t_matrix();
        let ph = e(-(self.sig as f64) / 4.0);
        let mut z = alloc::vec![alloc::vec![Complex64::zero(); n]; n];
        for (i, row) in z.iter_mut().enumerate() {
            row[self.group.negate(i)] = ph;
        }
        let s2 = cmul(&s, &s);
        let st = cmul(&s, &t);
        let st3 = cmul(&cmul(&st, &st), &st);
        (max_diff(&s2, &z), max_diff(&st3, &z))
    }
}

#[derive(Debug, Clone)]
pub struct ModularityReport {
    pub t_defect: f64,
    pub s_defect: f64,
    pub tail_bound: f64,
    pub relation_defects: (f64, f64),
    pub values: Vec<Complex64>,
    pub values_t: Vec<Complex64>,
    pub values_s: Vec<Complex64>,
}

impl ModularityReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.t_defect <= tolerance + self.tail_bound && self.s_defect <= tolerance + self.tail_bound
    }
}

/// Completed series for every coset of L∨/L, evaluated at the real parts
/// listed (sharing one imaginary part).
fn completion_vector<E: Executor>(
    weil: &WeilRepresentation,
    ngon: &NGon,
    us: &[f64],
    v: f64,
    opts: &CompletionOptions,
    exec: &E,
) -> Result<(Vec<Vec<Complex64>>, f64), ThetaError> {
    let (window, lmin) = completion_window(ngon, opts);
    let mut out = alloc::vec![Vec::with_capacity(weil.len()); us.len()];
    for mu in weil.group().reps() {
        let coset = LatticeCoset::new(ngon.space(), mu.clone())?;
        let (en, vals) = completion_terms(&coset, ngon, v, &window, opts, exec)?;
        for (k, &u) in us.iter().enumerate() {
            out[k].push(sum_terms(&en, &vals, u));
        }
    }
    let alpha = PI * v / window.kappa;
    let weight = 2.0 * ngon.len() as f64 + opts.w_shift.unsigned_abs() as f64;
    let tail = gaussian_tail(weight, alpha, window.bound, lmin, ngon.space().dim());
    Ok((out, tail))
}

/// Compares the completed vector at τ+1 and −1/τ with ρ(T) and τ^{m/2}ρ(S).
pub fn modularity_check<E: Executor>(
    ngon: &NGon,
    tau: Complex64,
    opts: &CompletionOptions,
    exec: &E,
) -> Result<ModularityReport, ThetaError> {
    if tau.im <= 0.0 {
        return Err(ThetaError::LowerHalfPlane);
    }
    let weil = WeilRepresentation::new(ngon.space())?;
    let (f, tail_a) = completion_vector(&weil, ngon, &[tau.re, tau.re + 1.0], tau.im, opts, exec)?;
    let st = -tau.inv();
    let (fs, tail_b) = if (st - tau).norm() < 1e-15 {
        (alloc::vec![f[0].clone()], tail_a)
    } else {
        completion_vector(&weil, ngon, &[st.re], st.im, opts, exec)?
    };
    let (values, values_t, values_s) = (f[0].clone(), f[1].clone(), fs[0].clone());
    let ph = weil.t_phases();
    let t_defect = values
        .iter()
        .zip(&values_t)
        .zip(&ph)
        .map(|((a, b), p)| (b - a * p).norm())
        .fold(0.0, f64::max);
    let s = weil.s_matrix();
    let m = ngon.space().dim() as f64;
    let factor = tau.powf(m / 2.0);
    let s_defect = (0..weil.len())
        .map(|i| {
            let rhs: Complex64 = (0..weil.len()).map(|j| s[i][j] * values[j]).sum::<Complex64>() * factor;
            (values_s[i] - rhs).norm()
        })
        .fold(0.0, f64::max);
    let scale = 1.0 + factor.norm();
    Ok(ModularityReport {
        t_defect,
        s_defect,
        tail_bound: tail_a * scale + tail_b,
        relation_defects: weil.relation_defects(),
        values,
        values_t,
        values_s,
    })
}
