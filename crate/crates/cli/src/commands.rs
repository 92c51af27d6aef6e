//! The four experiments behind the subcommands.

use std::collections::BTreeMap;

use ncpain_core::dressing::{
    self, ClosedForm, DressingChain, DressingError, LinearConvention, Parity, Potential, RationalSeed, SpectralPoint,
};
use ncpain_core::laxpair::{self, LaxError, PiiState, SymState, TruncationReason};
use ncpain_core::ncring::distance;
use ncpain_core::quasidet::{self, QuasidetError};
use ncpain_core::{BlockMatrix, CMat, Complex64, GridFunction, MaskedGrid, NcRing, RingError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::args::{DressArgs, DressSeed, InitKind, QuasidetArgs, SymmetricArgs, ZcArgs, ZcSeed};
use crate::parse::{self, ParsedMatrix};
use crate::report::{self, ExperimentReport, ResidualSummary, Status};

/// Largest number of Darboux steps accepted by `dress`.
pub const MAX_STEPS: usize = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for usage and I/O problems, 2 for near-singular numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn is_singular(e: &RingError) -> bool {
    matches!(e, RingError::NearSingular { .. })
}

impl From<QuasidetError> for CliError {
    fn from(e: QuasidetError) -> Self {
        match &e {
            QuasidetError::SingularPivot { .. }
            | QuasidetError::SingularSubmatrix { .. }
            | QuasidetError::SingularInverseEntry { .. } => CliError::Numerical(e.to_string()),
            QuasidetError::Ring(r) if is_singular(r) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LaxError> for CliError {
    fn from(e: LaxError) -> Self {
        match &e {
            LaxError::NearSingular { .. } => CliError::Numerical(e.to_string()),
            LaxError::Ring(r) if is_singular(r) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DressingError> for CliError {
    fn from(e: DressingError) -> Self {
        match &e {
            DressingError::SingularAt { .. } | DressingError::QuasidetAt { .. } => CliError::Numerical(e.to_string()),
            DressingError::Ring(r) if is_singular(r) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// A finished experiment: the report plus named CSV artifacts.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: ExperimentReport) -> Self {
        Outcome { report, files: Vec::new() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.report.status {
            Status::Ok => 0,
            Status::Truncated => 3,
        }
    }
}

trait ToCMat {
    fn to_cmat(&self) -> CMat;
}

impl ToCMat for Complex64 {
    fn to_cmat(&self) -> CMat {
        CMat::scalar(1, *self)
    }
}

impl ToCMat for CMat {
    fn to_cmat(&self) -> CMat {
        self.clone()
    }
}

/// `diff / |reference|`, or `diff` itself when the reference vanishes.
fn relative(reference: &impl NcRing, diff: f64) -> f64 {
    let scale = reference.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

// quasidet

fn quasidet_report<R: NcRing + ToCMat>(
    a: &BlockMatrix<R>,
    i: usize,
    j: usize,
    report: &mut ExperimentReport,
) -> Result<(), CliError> {
    let value = quasidet::quasideterminant(a, i, j)?;
    let oracle = quasidet::quasideterminant_oracle(a, i, j)?;
    let diff = distance(&value, &oracle);
    report
        .param("n", a.rows())
        .param("d", a.entry_dim())
        .result("value", report::matrix_value(&value.to_cmat()))
        .result("oracle", report::matrix_value(&oracle.to_cmat()))
        .result("discrepancy", diff)
        .result("relative_discrepancy", relative(&oracle, diff));
    Ok(())
}

pub fn quasidet(args: &QuasidetArgs) -> Result<Outcome, CliError> {
    let [i, j] = args.pos[..] else {
        return Err(usage("--pos takes two indices"));
    };
    if i == 0 || j == 0 {
        return Err(usage("--pos is one-based"));
    }
    let (i0, j0) = (i - 1, j - 1);
    let mut report = ExperimentReport::new("quasidet");
    report.param("pos", [i, j]);
    let parsed = if let Some(text) = &args.inline {
        report.param("source", "inline");
        parse::matrix_json(text).map_err(usage)?
    } else if let Some(path) = &args.file {
        report.param("source", path.display().to_string());
        parse::matrix_json(&std::fs::read_to_string(path)?).map_err(usage)?
    } else if let Some(n) = args.identity {
        report.param("source", "identity");
        if n == 0 || args.d == 0 {
            return Err(usage("--identity needs n >= 1 and d >= 1"));
        }
        if args.d == 1 {
            ParsedMatrix::Scalar(BlockMatrix::identity(n, &Complex64::new(1.0, 0.0)))
        } else {
            ParsedMatrix::Block(BlockMatrix::identity(n, &CMat::identity(args.d)))
        }
    } else if let Some(nd) = &args.random {
        let (n, d) = (nd[0], nd[1]);
        if n == 0 || d == 0 {
            return Err(usage("--random needs n >= 1 and d >= 1"));
        }
        report.param("source", "random").param("seed", args.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let entries = (0..n * n).map(|_| CMat::random(d, &mut rng)).collect();
        ParsedMatrix::Block(BlockMatrix::new(n, n, entries).map_err(|e| usage(e.to_string()))?)
    } else {
        return Err(usage("no matrix source given"));
    };
    match &parsed {
        ParsedMatrix::Scalar(a) => {
            quasidet_report(a, i0, j0, &mut report)?;
            let check = quasidet::commutative_limit_check(a, i0, j0)?;
            report
                .result("determinant_ratio", check.determinant_ratio)
                .result("determinant_ratio_residual", check.residual);
        }
        ParsedMatrix::Block(a) => quasidet_report(a, i0, j0, &mut report)?,
    }
    Ok(Outcome::new(report))
}

// zc

#[derive(Debug, Default, Clone, Copy, Serialize)]
struct ZcMetrics {
    diagonal: f64,
    identity: f64,
    full: f64,
    pii: f64,
}

impl ZcMetrics {
    fn max(self, o: Self) -> Self {
        ZcMetrics {
            diagonal: self.diagonal.max(o.diagonal),
            identity: self.identity.max(o.identity),
            full: self.full.max(o.full),
            pii: self.pii.max(o.pii),
        }
    }
}

/// Residuals of one state, relative to the size of the terms in the
/// zero-curvature equation.
fn zc_metrics(s: &PiiState<CMat>) -> Result<ZcMetrics, CliError> {
    let res = laxpair::zero_curvature_residual(s)?;
    let scale = laxpair::zero_curvature_scale(s)?.max(f64::MIN_POSITIVE);
    let r = laxpair::pii_residual_exact(&s.v, &s.v_zz, s.z, s.c)?;
    let i = Complex64::new(0.0, 1.0);
    let off12 = res.get(0, 1).try_add(&r.scale(i)).map_err(LaxError::from)?;
    let off21 = res.get(1, 0).try_sub(&r.scale(i)).map_err(LaxError::from)?;
    Ok(ZcMetrics {
        diagonal: res.get(0, 0).norm().max(res.get(1, 1).norm()) / scale,
        identity: off12.norm().max(off21.norm()) / scale,
        full: res.norm() / scale,
        pii: r.norm(),
    })
}

pub fn zc(args: &ZcArgs) -> Result<Outcome, CliError> {
    if args.lambda.iter().any(|l| *l == Complex64::new(0.0, 0.0)) {
        return Err(usage("--lambda must be non-zero"));
    }
    if args.d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    let mut report = ExperimentReport::new("zc");
    report
        .param("d", args.d)
        .param("lambda", &args.lambda)
        .convention("zero_curvature", "A_z - B_lambda - [B, A]; (1,2) = -i r, (2,1) = +i r, r = v_zz - 2v^3 + 2[z,v]_+ - C")
        .convention("residual_scale", "|A_z| + |B_lambda| + 2|B||A|");
    let states: Vec<PiiState<CMat>> = match args.seed_kind {
        ZcSeed::Rational => {
            let c = args.c.unwrap_or(Complex64::new(4.0, 0.0));
            let amplitude = rational_amplitude(c)?;
            let seed = RationalSeed::new(&CMat::identity(args.d), amplitude);
            report.param("seed_kind", "rational").param("C", c).param("z", &args.z);
            if args.z.iter().any(|&z| z == 0.0 || !z.is_finite()) {
                return Err(usage("--z must be finite and non-zero for the rational seed"));
            }
            args.lambda
                .iter()
                .flat_map(|&lambda| {
                    let seed = &seed;
                    args.z.iter().map(move |&z| PiiState {
                        v: seed.value(z),
                        v_z: seed.derivative(z),
                        v_zz: seed.second_derivative(z),
                        z: Complex64::new(z, 0.0),
                        lambda,
                        c,
                    })
                })
                .collect()
        }
        ZcSeed::Random => {
            report
                .param("seed_kind", "random")
                .param("seed", args.seed)
                .param("samples", args.samples);
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut states = Vec::new();
            for &lambda in &args.lambda {
                for _ in 0..args.samples {
                    let mut scalar = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let (z, c) = (scalar(), args.c.unwrap_or_else(&mut scalar));
                    states.push(PiiState {
                        v: CMat::random(args.d, &mut rng),
                        v_z: CMat::random(args.d, &mut rng),
                        v_zz: CMat::random(args.d, &mut rng),
                        z,
                        lambda,
                        c,
                    });
                }
            }
            states
        }
    };
    let metrics = states
        .par_iter()
        .map(zc_metrics)
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(ZcMetrics::default(), ZcMetrics::max);
    report
        .result("states", states.len())
        .result("max_diagonal_residual", metrics.diagonal)
        .result("max_offdiagonal_identity_residual", metrics.identity)
        .result("max_full_residual", metrics.full)
        .result("max_pii_residual", metrics.pii);
    Ok(Outcome::new(report))
}

fn rational_amplitude(c: Complex64) -> Result<f64, CliError> {
    if c == Complex64::new(4.0, 0.0) {
        Ok(1.0)
    } else if c == Complex64::new(-4.0, 0.0) {
        Ok(-1.0)
    } else {
        Err(usage(format!("the rational seed needs C = 4 or C = -4, got {c}")))
    }
}

// dress

/// Relative discrepancies at each grid index, `None` where either side is
/// near-singular.
fn pointwise_discrepancy(
    len: usize,
    f: impl Fn(usize) -> Result<Option<f64>, CliError> + Sync + Send,
) -> Result<ResidualSummary, CliError> {
    let values = (0..len).into_par_iter().map(f).collect::<Result<Vec<_>, _>>()?;
    Ok(ResidualSummary::from_norms(values))
}

fn soft<T>(r: Result<T, RingError>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if is_singular(&e) => Ok(None),
        Err(e) => Err(usage(e.to_string())),
    }
}

fn soft_q<T>(r: Result<T, QuasidetError>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) => match CliError::from(e) {
            CliError::Numerical(_) => Ok(None),
            other => Err(other),
        },
    }
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    relative(b, distance(a, b))
}

pub fn dress(args: &DressArgs) -> Result<Outcome, CliError> {
    let n = args.n;
    if n > MAX_STEPS {
        return Err(usage(format!("--N is at most {MAX_STEPS}")));
    }
    if args.gamma.len() != n {
        return Err(usage(format!("--gamma needs {n} values, got {}", args.gamma.len())));
    }
    if args.d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    if n > 0 && args.gamma.contains(&args.probe_gamma) {
        return Err(usage("--probe-gamma must differ from every --gamma"));
    }
    let spec = args.z;
    let d = args.d;
    let convention: LinearConvention = args.dt_convention.into();
    let one = CMat::identity(d);
    let (c, seed): (Complex64, Box<dyn Potential<CMat>>) = match args.seed_kind {
        DressSeed::Rational => {
            let c = args.c.unwrap_or(Complex64::new(4.0, 0.0));
            if spec.z0 <= 0.0 {
                return Err(usage("the rational seed needs a grid with z > 0"));
            }
            (c, Box::new(RationalSeed::new(&one, rational_amplitude(c)?)))
        }
        DressSeed::Zero => {
            let zero = CMat::zeros(d);
            (args.c.unwrap_or_default(), Box::new(ClosedForm(move |_z: f64| zero.clone())))
        }
    };
    let mut report = ExperimentReport::new("dress");
    report
        .param("N", n)
        .param("gamma", &args.gamma)
        .param("seed_kind", format!("{:?}", args.seed_kind).to_lowercase())
        .param("C", c)
        .param("d", d)
        .param("z0", spec.z0)
        .param("h", spec.h)
        .param("len", spec.len)
        .param("init", format!("{:?}", args.init).to_lowercase())
        .param("rng_seed", args.rng_seed)
        .param("probe_gamma", args.probe_gamma)
        .convention("linear_problem", format!(
            "chi_z = -{k} i lambda chi + v Phi, Phi_z = v chi + {k} i lambda Phi ({})",
            convention.name(),
            k = convention.factor()
        ))
        .convention("gamma", "gamma_k is the spectral parameter lambda at which (chi_k, Phi_k) is integrated")
        .convention("dressing", "v[N] = Theta_N..Theta_1 v Theta_1..Theta_N, Theta_k = Lambda^Phi_k (Lambda^chi_k)^-1")
        .convention("quasideterminant_rows", format!(
            "alternating chi/Phi rows weighted by gamma^r; order N+1 = {} ({:?} parity)",
            n + 1,
            Parity::of_steps(n)
        ))
        .convention("dressed_residual_constant", "pii residuals of v[k] use the seed constant C");

    let mut rng = ChaCha8Rng::seed_from_u64(args.rng_seed);
    let mut init = || match args.init {
        InitKind::Identity => (one.clone(), one.clone()),
        InitKind::Random => (CMat::random(d, &mut rng), CMat::random(d, &mut rng)),
    };
    let mut jobs: Vec<(Complex64, (CMat, CMat))> = args.gamma.iter().map(|&g| (g, init())).collect();
    jobs.push((args.probe_gamma, init()));
    let seed_ref = seed.as_ref();
    let mut points = jobs
        .into_par_iter()
        .map(|(g, init)| SpectralPoint::integrate(&PotentialRef(seed_ref), g, init, spec, convention))
        .collect::<Result<Vec<_>, _>>()?;
    let probe = points.pop().expect("probe point");
    let seed_grid = GridFunction::sample(spec, |z| seed.eval(z));
    let chain = DressingChain::new(seed_grid, points, c)?;

    let mut masked_fractions = Vec::with_capacity(n + 1);
    let mut files = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let vk = dressing::n_fold_darboux_masked(&chain, k)?;
        masked_fractions.push(vk.masked_fraction());
        let residual = pii_masked(&vk, c)?;
        report.residual(&format!("pii_v{k}"), residual);
        files.push((format!("v{k}.csv"), report::masked_csv(&vk, d)));
    }
    report.result("masked_fraction", &masked_fractions);

    if n > 0 {
        let entries_at = |idx: usize| -> Vec<(Complex64, &CMat, &CMat)> {
            chain.points.iter().map(|p| p.at(idx)).collect()
        };
        let eig = pointwise_discrepancy(spec.len, |idx| {
            let by = entries_at(idx);
            let mut all = vec![probe.at(idx)];
            all.extend(by.iter().copied());
            let Some((qc, qp)) = soft_q(dressing::quasidet_eigenfunctions_at(&all))? else {
                return Ok(None);
            };
            let Some((dc, dp)) = soft(dressing::iterated_eigenfunctions_at(probe.at(idx), &by))? else {
                return Ok(None);
            };
            Ok(Some(rel(&qc, &dc).max(rel(&qp, &dp))))
        })?;
        report.residual("quasidet_vs_direct", eig);
        let comp = pointwise_discrepancy(spec.len, |idx| {
            let theta = match dressing::n_fold_darboux_at(&chain, n, idx) {
                Ok(v) => v,
                Err(DressingError::SingularAt { .. } | DressingError::QuasidetAt { .. }) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let Some(direct) = soft(dressing::iterated_darboux_at(&chain.seed.values()[idx], &entries_at(idx)))? else {
                return Ok(None);
            };
            Ok(Some(rel(&theta, &direct)))
        })?;
        report.residual("theta_product_vs_iterated", comp);
    }
    Ok(Outcome { report, files })
}

struct PotentialRef<'a>(&'a dyn Potential<CMat>);

impl Potential<CMat> for PotentialRef<'_> {
    fn eval(&self, z: f64) -> CMat {
        self.0.eval(z)
    }
}

fn pii_masked(v: &MaskedGrid<CMat>, c: Complex64) -> Result<ResidualSummary, CliError> {
    Ok(ResidualSummary::of_masked(&laxpair::pii_residual_masked(v, c)?))
}

// symmetric

/// `|L_t - [P, L]|` over `|L_t| + 2 |P| |L|`.
fn lax_relative(s: &SymState<CMat>) -> Result<f64, CliError> {
    let res = laxpair::lax_residual_symmetric(s)?;
    let rates = laxpair::symmetric_rhs(s)?;
    let l = laxpair::build_l(s)?;
    let p = laxpair::build_p(s)?;
    let rate_norm = rates.iter().map(|r| r.norm().powi(2)).sum::<f64>().sqrt();
    Ok(res.norm() / (rate_norm + 2.0 * l.norm() * p.norm()))
}

pub fn symmetric(args: &SymmetricArgs) -> Result<Outcome, CliError> {
    if !(args.h > 0.0 && args.h.is_finite()) || args.t_end <= args.t0 {
        return Err(usage("need h > 0 and t-end > t0"));
    }
    if args.d == 0 || args.sample_every == 0 {
        return Err(usage("--d and --sample-every must be positive"));
    }
    let d = args.d;
    let mut report = ExperimentReport::new("symmetric");
    report
        .param("d", d)
        .param("alpha0", args.alpha0)
        .param("alpha1", args.alpha1)
        .param("t0", args.t0)
        .param("t_end", args.t_end)
        .param("h", args.h)
        .param("normalize", args.normalize)
        .param("sample_every", args.sample_every)
        .convention("flow", "v0' = [v2, v0]_+ + alpha0, v1' = -[v2, v1]_+ + alpha1, v2' = v1 - v0")
        .convention("p3", "P3 = [[-1, 0], [-sigma/2, 1]], sigma = v0 - v1 + 2 v2")
        .convention("first_integral", "v0 + v1 + v2^2 - (alpha0 + alpha1) t")
        .convention("reduction", "alpha0 + alpha1 = 2 and first integral 0 give v2'' = 2v2^3 - 2[t, v2]_+ + (alpha1 - alpha0)");
    let mut s0 = if args.random {
        report.param("initial", "random").param("seed", args.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        SymState {
            v0: CMat::random(d, &mut rng),
            v1: CMat::random(d, &mut rng),
            v2: CMat::random(d, &mut rng),
            alpha0: args.alpha0,
            alpha1: args.alpha1,
            t: args.t0,
        }
    } else {
        report.param("v0", args.v0).param("v1", args.v1).param("v2", args.v2);
        SymState {
            v0: CMat::scalar(d, args.v0),
            v1: CMat::scalar(d, args.v1),
            v2: CMat::scalar(d, args.v2),
            alpha0: args.alpha0,
            alpha1: args.alpha1,
            t: args.t0,
        }
    };
    if args.normalize {
        let sum = args.alpha0 + args.alpha1;
        if (sum - Complex64::new(2.0, 0.0)).norm() > 1e-12 {
            return Err(usage(format!("--normalize needs alpha0 + alpha1 = 2, got {sum}")));
        }
        s0 = s0.normalized(args.integral_constant)?;
        report.param("integral_constant", args.integral_constant);
    }
    let traj = laxpair::integrate_symmetric(&s0, args.t_end, args.h)?;
    let samples: Vec<&SymState<CMat>> = traj.states.iter().step_by(args.sample_every).collect();
    let lax = samples
        .par_iter()
        .map(|s| match lax_relative(s) {
            Ok(x) => Ok(Some(x)),
            Err(CliError::Numerical(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    report
        .residual("lax", ResidualSummary::from_norms(lax))
        .result("steps", traj.states.len() - 1)
        .result("t_reached", traj.last().t)
        .result("first_integral_drift", traj.first_integral_drift()?);
    let v2 = traj.v2_grid();
    if args.normalize {
        match laxpair::reduction_check(&traj) {
            Ok(r) => {
                report.residual("reduction_pii", ResidualSummary::of_grid(&r));
            }
            Err(LaxError::Grid(e)) => {
                report.result("reduction_pii", format!("not enough samples: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut outcome_files = Vec::new();
    if let Ok(v2) = v2 {
        outcome_files.push(("v2.csv".to_string(), report::dense_csv(&v2, d)));
    }
    if let Some(tr) = &traj.truncation {
        report.status = Status::Truncated;
        let mut info = BTreeMap::new();
        info.insert("t", serde_json::json!(tr.t));
        info.insert("step", serde_json::json!(tr.step));
        info.insert("field", serde_json::json!(tr.which));
        info.insert(
            "reason",
            match &tr.reason {
                TruncationReason::Singular(e) => serde_json::json!({ "singular": e.to_string() }),
                TruncationReason::WithinStep { inverse_norm, step_change } => serde_json::json!({
                    "inverse_norm": inverse_norm,
                    "step_change": step_change,
                }),
            },
        );
        report.result("truncation", info);
    }
    Ok(Outcome {
        report,
        files: outcome_files,
    })
}
