//! JSON file formats. Rationals are written as `"p/q"` strings and read from
//! strings or JSON integers. Every file carries `schema_version`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ngon_theta_core::dodec::{self, DodecData};
use ngon_theta_core::ngon::{self, NGon, Violation};
use ngon_theta_core::rational::{self, Rational};
use ngon_theta_core::sig12::UHPoint;
use ngon_theta_core::theta::QExpansion;
use ngon_theta_core::{NegativePlane, QuadraticSpace, Vector};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RationalJson {
    Text(String),
    Int(i64),
}

impl RationalJson {
    pub fn value(&self) -> Result<Rational, InputError> {
        match self {
            RationalJson::Int(n) => Ok(rational::int(*n)),
            RationalJson::Text(s) => rational::parse(s).map_err(|e| InputError::Invalid(e.to_string())),
        }
    }
}

impl Serialize for RationalJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.value() {
            Ok(r) => s.serialize_str(&rational::format(&r)),
            Err(_) => Err(serde::ser::Error::custom("malformed rational")),
        }
    }
}

impl From<&Rational> for RationalJson {
    fn from(r: &Rational) -> Self {
        RationalJson::Text(rational::format(r))
    }
}

pub fn vector_json(v: &Vector) -> Vec<RationalJson> {
    v.coords().iter().map(RationalJson::from).collect()
}

pub fn vector_from_json(v: &[RationalJson]) -> Result<Vector, InputError> {
    Ok(Vector::new(v.iter().map(RationalJson::value).collect::<Result<_, _>>()?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceJson {
    pub gram: Vec<Vec<RationalJson>>,
}

impl SpaceJson {
    pub fn from_space(s: &QuadraticSpace) -> Self {
        SpaceJson { gram: s.gram().iter().map(|r| r.iter().map(RationalJson::from).collect()).collect() }
    }

    pub fn build(&self) -> Result<QuadraticSpace, InputError> {
        let g = self
            .gram
            .iter()
            .map(|r| r.iter().map(RationalJson::value).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        QuadraticSpace::new(g).map_err(|e| InputError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NGonFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub space: SpaceJson,
    pub cs: Vec<Vec<RationalJson>>,
}

impl NGonFile {
    pub fn from_ngon(name: Option<String>, ngon: &NGon) -> Self {
        NGonFile {
            schema_version: SCHEMA_VERSION,
            name,
            space: SpaceJson::from_space(ngon.space()),
            cs: ngon.cs().iter().map(vector_json).collect(),
        }
    }

    pub fn parts(&self) -> Result<(QuadraticSpace, Vec<Vector>), InputError> {
        let space = self.space.build()?;
        let cs = self.cs.iter().map(|c| vector_from_json(c)).collect::<Result<Vec<_>, _>>()?;
        Ok((space, cs))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeFile {
    pub schema_version: u32,
    pub space: SpaceJson,
    /// Shift μ; all of L∨/L when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<RationalJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointsFile {
    pub schema_version: u32,
    pub points: Vec<[RationalJson; 2]>,
}

impl PointsFile {
    pub fn points(&self) -> Result<Vec<UHPoint>, InputError> {
        self.points.iter().map(|[x, y]| Ok(UHPoint::new(x.value()?, y.value()?))).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedJson {
    pub basis: [Vec<RationalJson>; 3],
    pub v0: Vec<RationalJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<RationalJson>,
}

/// Either explicit vectors `cs` or a seed given by `t` (and optionally a
/// frame; the standard frame e1,e2,e3 / e0 otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DodecFile {
    pub schema_version: u32,
    pub space: SpaceJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs: Option<Vec<Vec<RationalJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<RationalJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<RationalJson>>,
}

pub enum DodecInput {
    Valid(DodecData),
    Invalid(Vec<(usize, Violation)>),
}

impl DodecFile {
    pub fn vectors(&self) -> Result<(QuadraticSpace, Vec<Vector>, Option<NegativePlane>), InputError> {
        let space = self.space.build()?;
        if let Some(cs) = &self.cs {
            let cs = cs.iter().map(|c| vector_from_json(c)).collect::<Result<Vec<_>, _>>()?;
            return Ok((space, cs, None));
        }
        let t = self
            .t
            .as_ref()
            .ok_or_else(|| InputError::Invalid("dodecahedron file needs `cs` or `t`".into()))?
            .iter()
            .map(RationalJson::value)
            .collect::<Result<Vec<_>, _>>()?;
        let m = space.dim();
        let (basis, v0, phi) = match &self.seed {
            Some(s) => (
                [vector_from_json(&s.basis[0])?, vector_from_json(&s.basis[1])?, vector_from_json(&s.basis[2])?],
                vector_from_json(&s.v0)?,
                s.phi.as_ref().map(RationalJson::value).transpose()?,
            ),
            None if m == 4 => ([Vector::unit(4, 1), Vector::unit(4, 2), Vector::unit(4, 3)], Vector::unit(4, 0), None),
            None => return Err(InputError::Invalid("seed frame required outside dimension 4".into())),
        };
        let phi = phi.unwrap_or_else(dodec::default_phi);
        let cs = dodec::seed_construction_with(&space, &basis, &v0, &t, &phi)
            .map_err(|e| InputError::Invalid(e.to_string()))?;
        let z = NegativePlane::new(&space, basis.to_vec()).map_err(|e| InputError::Invalid(e.to_string()))?;
        Ok((space, cs, Some(z)))
    }

    pub fn load(&self) -> Result<DodecInput, InputError> {
        let (space, cs, base) = self.vectors()?;
        let bad = dodec::violations(&space, &cs).map_err(|e| InputError::Invalid(e.to_string()))?;
        if !bad.is_empty() {
            return Ok(DodecInput::Invalid(bad));
        }
        let d = dodec::validate_dodec(&space, cs).map_err(|e| InputError::Invalid(e.to_string()))?;
        Ok(DodecInput::Valid(match base {
            Some(z) => d.with_base_plane(z),
            None => d,
        }))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Read { path: path.into(), source })?;
    let version: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| InputError::Json { path: path.into(), source })?;
    match version.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(InputError::Schema { path: path.into(), found: v as u32 }),
        None => return Err(InputError::Invalid(format!("{}: missing schema_version", path.display()))),
    }
    serde_json::from_str(&text).map_err(|source| InputError::Json { path: path.into(), source })
}

pub fn violation_json(v: &Violation) -> serde_json::Value {
    serde_json::json!({
        "index": v.index,
        "condition": v.condition.to_string(),
        "value": rational::format(&v.value),
    })
}

fn rational_map<S: Serializer>(m: &BTreeMap<Rational, Rational>, s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&rational::format(k), &rational::format(v))?;
    }
    map.end()
}

fn count_map<S: Serializer>(m: &BTreeMap<Rational, usize>, s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&rational::format(k), v)?;
    }
    map.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub bound: f64,
    pub kappa: f64,
    pub safety: f64,
    pub guard: f64,
    pub attempts: usize,
}

/// A q-expansion as written to disk; levels appear in increasing order.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesJson {
    pub schema_version: u32,
    pub mu: Vec<RationalJson>,
    pub nmax: RationalJson,
    pub normalized: bool,
    #[serde(serialize_with = "rational_map")]
    pub coeffs: BTreeMap<Rational, Rational>,
    #[serde(serialize_with = "rational_map")]
    pub flagged: BTreeMap<Rational, Rational>,
    #[serde(serialize_with = "count_map")]
    pub counts: BTreeMap<Rational, usize>,
    pub certificate: CertificateJson,
}

impl SeriesJson {
    pub fn new(q: &QExpansion) -> Self {
        SeriesJson {
            schema_version: SCHEMA_VERSION,
            mu: vector_json(&q.mu),
            nmax: RationalJson::from(&q.nmax),
            normalized: q.normalized,
            coeffs: q.coeffs.clone(),
            flagged: q.flagged.clone(),
            counts: q.counts.clone(),
            certificate: CertificateJson {
                bound: q.certificate.bound,
                kappa: q.certificate.kappa,
                safety: q.certificate.safety,
                guard: q.certificate.guard,
                attempts: q.certificate.attempts,
            },
        }
    }
}

/// Coefficient table: `n,coefficient,status`.
pub fn write_csv(path: &Path, q: &QExpansion) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "coefficient", "status"])?;
    let mut rows: Vec<(&Rational, &Rational, &str)> = q.coeffs.iter().map(|(n, c)| (n, c, "regular")).collect();
    rows.extend(q.flagged.iter().map(|(n, c)| (n, c, "non-regular")));
    rows.sort_by(|a, b| a.0.cmp(b.0));
    for (n, c, s) in rows {
        w.write_record([rational::format(n).as_str(), rational::format(c).as_str(), s])?;
    }
    w.flush()?;
    Ok(())
}

/// Tab-separated (n, c(n)) pairs in decimal, regular levels only.
pub fn write_plot_data(path: &Path, q: &QExpansion) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(path)?;
    w.write_record(["n", "c"])?;
    for (n, c) in &q.coeffs {
        w.write_record([rational::to_f64(n).to_string(), rational::to_f64(c).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn ngon_from_file(f: &NGonFile) -> Result<Result<NGon, Vec<Violation>>, InputError> {
    let (space, cs) = f.parts()?;
    let bad = ngon::check_conditions(&space, &cs).map_err(|e| InputError::Invalid(e.to_string()))?;
    if !bad.is_empty() {
        return Ok(Err(bad));
    }
    ngon::validate(&space, cs).map(Ok).map_err(|e| InputError::Invalid(e.to_string()))
}
