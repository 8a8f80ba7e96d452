use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use ngon_theta_core::dodec::{self, DodecData, DodecError};
use ngon_theta_core::errfn::{self, ErrorFnError};
use ngon_theta_core::lattice::{LatticeCoset, LatticeError};
use ngon_theta_core::ngon::{NGon, NGonError, Scaling};
use ngon_theta_core::rational::{self, Rational};
use ngon_theta_core::sig12::{self, FormVector, Sig12Error};
use ngon_theta_core::theta::{self, CompletionOptions, QExpansion, SeriesOptions, ThetaError};
use ngon_theta_core::{FloatTolerance, Vector};

use crate::exec::{self, Pool};
use crate::io::{self, DodecFile, DodecInput, InputError, LatticeFile, NGonFile, PointsFile, SeriesJson};

#[derive(Debug, Parser)]
#[command(name = "ngon-theta", version, about = "Indefinite theta series of geodesic polygons")]
pub struct Cli {
    /// Worker threads (default: $NGON_THETA_THREADS, then all CPUs).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polygon validation and kernels.
    #[command(subcommand)]
    Ngon(NgonCmd),
    /// q-expansions, completions and modularity checks.
    #[command(subcommand)]
    Theta(ThetaCmd),
    /// Signature (1,2) utilities.
    #[command(subcommand)]
    Sig12(Sig12Cmd),
    /// Dodecahedral collections.
    #[command(subcommand)]
    Dodec(DodecCmd),
    /// Generalized error functions.
    #[command(subcommand)]
    Errfn(ErrfnCmd),
}

#[derive(Debug, Subcommand)]
pub enum NgonCmd {
    /// Check the component conditions and report w(𝒞).
    Validate {
        #[arg(long)]
        ngon: PathBuf,
    },
    /// ε(x;𝒞) for a comma separated rational vector.
    Eps {
        #[arg(long)]
        ngon: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// w(𝒞), optionally with an explicit negative vector.
    W {
        #[arg(long)]
        ngon: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SeriesOut {
    /// Write the coefficient table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write (n, c(n)) pairs as TSV.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompletionArgs {
    #[arg(long)]
    pub ngon: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long, default_value = "8")]
    pub nmax: String,
    #[arg(long, default_value_t = 1.5)]
    pub safety: f64,
    /// Use x√2 instead of x√(2v) inside E2.
    #[arg(long)]
    pub paper_literal: bool,
    /// Add this to w(𝒞) in every term (negative controls).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub w_shift: i64,
}

#[derive(Debug, Subcommand)]
pub enum ThetaCmd {
    /// Holomorphic coefficients up to nmax.
    Series {
        #[arg(long)]
        ngon: PathBuf,
        /// Lattice and shift; the polygon's space with μ = 0 if absent.
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long)]
        nmax: String,
        /// Divide ε-sums by 4.
        #[arg(long)]
        normalized: bool,
        #[arg(long, default_value_t = 1.5)]
        safety: f64,
        #[command(flatten)]
        out: SeriesOut,
    },
    /// Numerical completion at τ.
    Complete {
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[command(flatten)]
        args: CompletionArgs,
    },
    /// T and S transformation defects at τ.
    Modularity {
        #[command(flatten)]
        args: CompletionArgs,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum Sig12Cmd {
    /// Polygon with the given vertices in ℍ.
    Recover {
        #[arg(long)]
        points: PathBuf,
    },
    /// Winding number of the polygon around the CM point of x = [a,b,c].
    Winding {
        #[arg(long)]
        ngon: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Class-number series of the fundamental domain cut at height T.
    Zagier {
        #[arg(long = "T", default_value = "2")]
        t: String,
        #[arg(long, default_value = "50")]
        nmax: String,
        #[command(flatten)]
        out: SeriesOut,
    },
}

#[derive(Debug, Subcommand)]
pub enum DodecCmd {
    /// Check the face table and seed cone.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
    /// 𝒟, 𝒫 and the completed kernel at x.
    Kernel {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Coefficients of the odd-kernel series.
    Series {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        nmax: String,
        #[arg(long, default_value_t = 1.5)]
        safety: f64,
        #[command(flatten)]
        out: SeriesOut,
    },
}

#[derive(Debug, Subcommand)]
pub enum ErrfnCmd {
    /// E_q(c_1..c_q; x) with the c's taken from an ngon-format file.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ThetaError> for CliError {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::Certification { .. } | ThetaError::Tail { .. } => CliError::Numerical(e.to_string()),
            ThetaError::NGon(n) => n.into(),
            ThetaError::Lattice(LatticeError::Overflow) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<NGonError> for CliError {
    fn from(e: NGonError) -> Self {
        match e {
            NGonError::ErrorFunction(f) => f.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ErrorFnError> for CliError {
    fn from(e: ErrorFnError) -> Self {
        match e {
            ErrorFnError::Quadrature(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DodecError> for CliError {
    fn from(e: DodecError) -> Self {
        match e {
            DodecError::ErrorFunction(f) => f.into(),
            DodecError::NGon(n) => n.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<Sig12Error> for CliError {
    fn from(e: Sig12Error) -> Self {
        match e {
            Sig12Error::NGon(n) => n.into(),
            Sig12Error::Unresolved => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    rational::parse(s.trim()).map_err(|e| InputError::Invalid(e.to_string()).into())
}

fn parse_nmax(s: &str) -> Result<Rational, CliError> {
    let n = parse_rational(s)?;
    if n <= rational::int(0) {
        return Err(InputError::Invalid("nmax must be positive".into()).into());
    }
    Ok(n)
}

fn parse_vector(s: &str) -> Result<Vector, CliError> {
    Ok(Vector::new(s.split(',').map(parse_rational).collect::<Result<_, _>>()?))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| InputError::Invalid(format!("`{t}`: {e}")).into()))
        .collect()
}

/// Accepts `a+bi`, `a-bi`, `bi` or `a`.
pub fn parse_tau(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Input(InputError::Invalid(format!("cannot parse tau `{s}`")));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im))
}

fn load_ngon(path: &Path) -> Result<NGon, CliError> {
    let f: NGonFile = io::read_json(path)?;
    match io::ngon_from_file(&f)? {
        Ok(n) => Ok(n),
        Err(v) => Err(CliError::Validation(format!(
            "{}: {} condition(s) fail, first `{}` at j = {}",
            path.display(),
            v.len(),
            v[0].condition,
            v[0].index
        ))),
    }
}

fn load_dodec(path: &Path) -> Result<(DodecData, DodecFile), CliError> {
    let f: DodecFile = io::read_json(path)?;
    match f.load()? {
        DodecInput::Valid(d) => Ok((d, f)),
        DodecInput::Invalid(v) => Err(CliError::Validation(format!(
            "{}: face {} fails `{}`",
            path.display(),
            v[0].0,
            v[0].1.condition
        ))),
    }
}

fn coset_for(lattice: Option<&Path>, ngon: &NGon) -> Result<LatticeCoset, CliError> {
    let Some(path) = lattice else {
        return Ok(LatticeCoset::zero(ngon.space()).map_err(ThetaError::from)?);
    };
    let f: LatticeFile = io::read_json(path)?;
    let space = f.space.build()?;
    if space.gram() != ngon.space().gram() {
        return Err(CliError::Validation("lattice and polygon live in different spaces".into()));
    }
    let mu = match &f.mu {
        Some(m) => io::vector_from_json(m)?,
        None => Vector::zero(space.dim()),
    };
    Ok(LatticeCoset::new(&space, mu).map_err(ThetaError::from)?)
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string())),
    }
}

fn emit_series(q: &QExpansion, out: &SeriesOut) -> Result<(), CliError> {
    if let Some(p) = &out.csv {
        io::write_csv(p, q).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &out.emit_plot_data {
        io::write_plot_data(p, q).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
    }
    emit(&SeriesJson::new(q), out.output.as_deref())
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn completion_options(a: &CompletionArgs) -> Result<CompletionOptions, CliError> {
    let mut o = CompletionOptions::new(parse_nmax(&a.nmax)?);
    o.safety = a.safety;
    o.w_shift = a.w_shift;
    if a.paper_literal {
        o.scaling = Scaling::Literal;
    }
    Ok(o)
}

pub fn pool(threads: Option<usize>) -> Pool {
    match threads.filter(|&n| n > 0).or_else(exec::threads_from_env) {
        Some(n) => Pool::new(n),
        None => Pool::from_env(),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let pool = pool(cli.threads);
    match cli.command {
        Command::Ngon(c) => ngon_cmd(c),
        Command::Theta(c) => theta_cmd(c, &pool),
        Command::Sig12(c) => sig12_cmd(c, &pool),
        Command::Dodec(c) => dodec_cmd(c, &pool),
        Command::Errfn(c) => errfn_cmd(c),
    }
}

fn ngon_cmd(c: NgonCmd) -> Result<(), CliError> {
    match c {
        NgonCmd::Validate { ngon } => {
            let f: NGonFile = io::read_json(&ngon)?;
            match io::ngon_from_file(&f)? {
                Ok(n) => emit(&json!({ "valid": true, "n": n.len(), "w": n.w(), "violations": [] }), None),
                Err(v) => {
                    emit(
                        &json!({ "valid": false, "violations": v.iter().map(io::violation_json).collect::<Vec<_>>() }),
                        None,
                    )?;
                    Err(CliError::Validation(format!("{}: not a valid polygon", ngon.display())))
                }
            }
        }
        NgonCmd::Eps { ngon, x } => {
            let n = load_ngon(&ngon)?;
            let x = parse_vector(&x)?;
            if x.dim() != n.space().dim() {
                return Err(InputError::Invalid("x has the wrong dimension".into()).into());
            }
            let k = n.epsilon(&x);
            let q = n.space().q(&x).map_err(|e| CliError::Validation(e.to_string()))?;
            emit(&json!({ "eps": k.eps, "regular": k.regular, "q": rational::format(&q) }), None)
        }
        NgonCmd::W { ngon, v } => {
            let n = load_ngon(&ngon)?;
            let v = v.as_deref().map(parse_vector).transpose()?;
            let w = n.w_invariant(v.as_ref())?;
            emit(&json!({ "w": w }), None)
        }
    }
}

fn theta_cmd(c: ThetaCmd, pool: &Pool) -> Result<(), CliError> {
    match c {
        ThetaCmd::Series { ngon, lattice, nmax, normalized, safety, out } => {
            let n = load_ngon(&ngon)?;
            let coset = coset_for(lattice.as_deref(), &n)?;
            let mut opts = SeriesOptions::new(parse_nmax(&nmax)?);
            opts.normalized = normalized;
            opts.safety = safety;
            let q = theta::holomorphic_series(&coset, &n, &opts, pool)?;
            emit_series(&q, &out)
        }
        ThetaCmd::Complete { lattice, args } => {
            let n = load_ngon(&args.ngon)?;
            let coset = coset_for(lattice.as_deref(), &n)?;
            let tau = parse_tau(&args.tau)?;
            let r = theta::completion_eval(&coset, &n, tau, &completion_options(&args)?, pool)?;
            emit(
                &json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "mu": io::vector_json(&r.mu),
                    "tau": complex_json(tau),
                    "value": complex_json(r.value),
                    "tail_bound": r.tail_bound,
                    "terms": r.terms,
                    "window": { "bound": r.window.bound, "kappa": r.window.kappa, "safety": r.window.safety },
                }),
                None,
            )
        }
        ThetaCmd::Modularity { args, tolerance } => {
            let n = load_ngon(&args.ngon)?;
            let tau = parse_tau(&args.tau)?;
            let r = theta::modularity_check(&n, tau, &completion_options(&args)?, pool)?;
            let vals = |v: &[Complex64]| v.iter().copied().map(complex_json).collect::<Vec<_>>();
            emit(
                &json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "tau": complex_json(tau),
                    "t_defect": r.t_defect,
                    "s_defect": r.s_defect,
                    "tail_bound": r.tail_bound,
                    "weil_s2_defect": r.relation_defects.0,
                    "weil_st3_defect": r.relation_defects.1,
                    "tolerance": tolerance,
                    "passes": r.passes(tolerance),
                    "values": vals(&r.values),
                    "values_t": vals(&r.values_t),
                    "values_s": vals(&r.values_s),
                }),
                None,
            )
        }
    }
}

fn sig12_cmd(c: Sig12Cmd, pool: &Pool) -> Result<(), CliError> {
    match c {
        Sig12Cmd::Recover { points } => {
            let f: PointsFile = io::read_json(&points)?;
            let zs = f.points()?;
            let n = sig12::recover_ngon(&zs)?;
            let signs = sig12::turning_signs(&zs)?;
            let mut v = serde_json::to_value(NGonFile::from_ngon(None, &n)).map_err(|e| CliError::Output(e.to_string()))?;
            v["w"] = json!(n.w());
            v["turning_signs"] = json!(signs);
            emit(&v, None)
        }
        Sig12Cmd::Winding { ngon, x } => {
            let n = load_ngon(&ngon)?;
            let x = parse_vector(&x)?;
            if x.dim() != 3 {
                return Err(InputError::Invalid("x must be [a,b,c]".into()).into());
            }
            let fv = FormVector::from_vector(&x);
            let wn = sig12::winding_number(&n, &fv)?;
            let (cx, cy) = fv.cm_point()?;
            emit(&json!({ "winding": wn, "eps": n.epsilon(&x).eps, "cm_point": [cx, cy] }), None)
        }
        Sig12Cmd::Zagier { t, nmax, out } => {
            let t = parse_rational(&t)?;
            if t <= rational::int(1) {
                return Err(CliError::Validation("T must exceed 1".into()));
            }
            let q = sig12::truncated_class_series(&t, &parse_nmax(&nmax)?, pool)?;
            emit_series(&q, &out)
        }
    }
}

fn dodec_cmd(c: DodecCmd, pool: &Pool) -> Result<(), CliError> {
    match c {
        DodecCmd::Validate { data } => {
            let f: DodecFile = io::read_json(&data)?;
            match f.load()? {
                DodecInput::Valid(d) => {
                    let w: Vec<i64> = (0..dodec::FACES).map(|i| d.face_w(i)).collect();
                    emit(
                        &json!({
                            "valid": true,
                            "face_w": w,
                            "d_at_negative": rational::format(d.d_at_negative()),
                            "vertices_distinct": d.vertices_distinct(),
                            "violations": [],
                        }),
                        None,
                    )
                }
                DodecInput::Invalid(v) => {
                    let list: Vec<Value> = v
                        .iter()
                        .map(|(face, v)| {
                            let mut j = io::violation_json(v);
                            j["face"] = json!(face);
                            j
                        })
                        .collect();
                    emit(&json!({ "valid": false, "violations": list }), None)?;
                    Err(CliError::Validation(format!("{}: not a valid dodecahedron", data.display())))
                }
            }
        }
        DodecCmd::Kernel { data, x } => {
            let (d, _) = load_dodec(&data)?;
            let x = parse_vector(&x)?;
            if x.dim() != d.space().dim() {
                return Err(InputError::Invalid("x has the wrong dimension".into()).into());
            }
            let xf = x.to_f64();
            let completed = d.e_kernel(&xf)?;
            emit(
                &json!({
                    "d": rational::format(&d.d_kernel(&x)),
                    "p": rational::format(&d.p_kernel(&x)),
                    "regular": d.regular(&x),
                    "e": completed,
                    "i0": d.i0(&xf)?,
                }),
                None,
            )
        }
        DodecCmd::Series { data, nmax, safety, out } => {
            let (d, f) = load_dodec(&data)?;
            let mu = match &f.mu {
                Some(m) => io::vector_from_json(m)?,
                None => Vector::zero(d.space().dim()),
            };
            let coset = LatticeCoset::new(d.space(), mu).map_err(ThetaError::from)?;
            let mut opts = SeriesOptions::new(parse_nmax(&nmax)?);
            opts.safety = safety;
            let q = dodec::dodec_series(&coset, &d, &opts, pool)?;
            emit_series(&q, &out)
        }
    }
}

fn errfn_cmd(c: ErrfnCmd) -> Result<(), CliError> {
    match c {
        ErrfnCmd::Eval { data, x } => {
            let f: NGonFile = io::read_json(&data)?;
            let (space, cs) = f.parts()?;
            let x = parse_floats(&x)?;
            if x.len() != space.dim() {
                return Err(InputError::Invalid("x has the wrong dimension".into()).into());
            }
            let v = errfn::eq(&space, &cs, &x, &FloatTolerance::default())?;
            println!("{v:.10}");
            Ok(())
        }
    }
}
