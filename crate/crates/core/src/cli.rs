//! Command-line front end.
//!
//! Each subcommand reads an optional JSON run configuration, prints a JSON
//! report to stdout and, with `--out`, writes the report and any CSV data to
//! that directory. Exit codes: 0 on success or pass, 1 on a quantitative
//! failure, 2 on invalid input or a failed construction.

use crate::counterexample::{
    avoiding_set, build_f1_counterexample, certify_not_qns, certify_restricted_qns, default_sequences, write_csv, CounterexampleDomain,
    RestrictedGrid, SequencePair,
};
use crate::error::{Error, Result};
use crate::fields::FieldDoc;
use crate::geometry::{lens_constant, Point, Similarity};
use crate::num::{format_decimal, Decimal, Real};
use crate::qns_engine::{
    ball_constant_from_c, check_k, estimate_k, f_admissibility, phi_functional, similarity_constant_from_k, Admissibility, PhiKind,
    ProbeGrid, ReportVerdict, Restriction, ScaleFunction, SimilarityGrid,
};
use crate::quadrature::{lens_fraction_sampled, Method, QuadratureSpec};
use crate::radius_sets::{GapLaw, RadiusSetDoc};
use crate::regions::{MarkedSet, RegionDoc};
use crate::sampling::{derive_seed, stream};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "qns", version, about = "Mean-value inequality checks for quasinearly subharmonic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for the report and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Threshold for `check-qns`: exit 1 when the inequality fails at this K.
    #[arg(long = "max-K", global = true)]
    pub max_k: Option<f64>,
    /// Analysis window `lo,hi`.
    #[arg(long, global = true, value_parser = parse_window)]
    pub window: Option<Window>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window(pub f64, pub f64);

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let (lo, hi) = (crate::num::parse_decimal(lo)?, crate::num::parse_decimal(hi)?);
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("window must satisfy 0 < lo < hi < inf, got {lo},{hi}"));
    }
    Ok(Window(lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a radius set: gap constant, ε-net radius, porosity.
    AnalyzeSet,
    /// Estimate or check the ball mean-value constant of a field.
    CheckQns,
    /// Build and certify the gap counterexample.
    Counterexample {
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long)]
        n0: Option<usize>,
        /// Number of balls.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Lens constant and conversions between ball and similarity constants.
    Constants {
        #[arg(long, value_enum)]
        set: Option<SetName>,
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long = "C")]
        c: Option<f64>,
        /// Monte Carlo samples for the lens constant.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Check a scale function f for the admissibility hypotheses.
    AnalyzeF {
        #[arg(long, value_enum)]
        function: Option<FunctionName>,
    },
    /// Evaluate φ-functionals under similarities.
    Phi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Default,
    F1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetName {
    UnitBall,
    UnitSquare,
    TwoBallUnion,
}

impl SetName {
    fn build(self) -> Result<MarkedSet> {
        match self {
            SetName::UnitBall => MarkedSet::unit_ball(2),
            SetName::UnitSquare => MarkedSet::unit_square(),
            SetName::TwoBallUnion => MarkedSet::two_ball_union(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionName {
    Linear,
    Periodic,
    F1,
}

/// Run configuration. Every section is optional; command-line flags
/// override `seed`, `workers`, `max_K` and `window`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub quadrature: Option<QuadratureSpec>,
    pub radius_set: Option<RadiusSetDoc>,
    pub field: Option<FieldDoc>,
    pub probe_grid: ProbeGrid,
    pub centers_in: Option<RegionDoc>,
    #[serde(rename = "max_K")]
    pub max_k: Option<Decimal>,
    pub window: Option<[Decimal; 2]>,
    pub counterexample: CounterexampleConfig,
    pub function: Option<FunctionDoc>,
    pub t_grid: Vec<Decimal>,
    pub eps_threshold: Option<Decimal>,
    pub constants: ConstantsConfig,
    pub phi: PhiConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub variant: Option<Variant>,
    pub n0: Option<usize>,
    pub count: Option<usize>,
    /// Custom sequences; both or neither.
    pub a: Option<Vec<Decimal>>,
    pub b: Option<Vec<Decimal>>,
    pub restricted_grid: RestrictedGrid,
    pub law: Option<GapLaw>,
    pub c: Option<Decimal>,
    /// Marked set D for the scale-function variant.
    pub d: Option<RegionDoc>,
    pub similarity_grid: Option<SimilarityGrid>,
    pub rings: Option<usize>,
    pub angles: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum FunctionDoc {
    Linear {
        slope: Decimal,
    },
    Periodic,
    F1 {
        #[serde(default)]
        law: Option<GapLaw>,
        #[serde(default)]
        c: Option<Decimal>,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub set: Option<SetName>,
    pub d: Option<RegionDoc>,
    #[serde(rename = "K")]
    pub k: Option<Decimal>,
    #[serde(rename = "C")]
    pub c: Option<Decimal>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiConfig {
    /// All three functionals when absent.
    pub kind: Option<PhiKind>,
    /// Defaults to the unit square.
    pub region: Option<RegionDoc>,
    pub similarities: Vec<SimilarityDoc>,
    /// Extra similarities drawn from the seed.
    pub random: usize,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig { kind: None, region: None, similarities: Vec::new(), random: 100 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimilarityDoc {
    pub scale: Decimal,
    #[serde(default)]
    pub angle: Decimal,
    #[serde(default)]
    pub reflect: bool,
    #[serde(default)]
    pub translation: [Decimal; 2],
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    command: &'static str,
    seed: u64,
    worker_count: usize,
    exit_code: i32,
    report: T,
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    seed: u64,
    workers: usize,
}

impl Ctx<'_> {
    fn spec(&self, command: &str, default_method: Method) -> Result<QuadratureSpec> {
        let base = self.cfg.quadrature.unwrap_or(QuadratureSpec { method: default_method, ..QuadratureSpec::default() });
        let spec = QuadratureSpec { seed: derive_seed(self.seed, command, 0), workers: self.workers, ..base };
        spec.validate()?;
        Ok(spec)
    }

    fn window(&self) -> Option<(f64, f64)> {
        self.cli.window.map(|w| (w.0, w.1)).or(self.cfg.window.map(|[a, b]| (a.0, b.0)))
    }

    fn emit<T: Serialize>(&self, command: &'static str, code: i32, report: T, stdout: &mut dyn Write) -> Result<i32> {
        let env = Envelope { command, seed: self.seed, worker_count: self.workers, exit_code: code, report };
        let text = serde_json::to_string_pretty(&env)?;
        writeln!(stdout, "{text}")?;
        if let Some(dir) = &self.cli.out {
            fs::write(dir.join("report.json"), format!("{text}\n"))?;
        }
        Ok(code)
    }

    fn artifact(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match &self.cli.out {
            Some(dir) => Ok(Some(BufWriter::new(File::create(dir.join(name))?))),
            None => Ok(None),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let workers = cli.workers.or(cfg.workers).unwrap_or(1);
    if workers == 0 {
        return Err(Error::invalid("worker count must be positive"));
    }
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
    }
    let ctx = Ctx { cli, cfg, seed, workers };
    match &cli.command {
        Command::AnalyzeSet => analyze_set(&ctx, stdout),
        Command::CheckQns => check_qns(&ctx, stdout),
        Command::Counterexample { variant, n0, count } => {
            let variant = variant.or(ctx.cfg.counterexample.variant).unwrap_or(Variant::Default);
            let n0 = n0.or(ctx.cfg.counterexample.n0).unwrap_or(3);
            match variant {
                Variant::Default => counterexample(&ctx, n0, count.or(ctx.cfg.counterexample.count).unwrap_or(5), stdout),
                Variant::F1 => counterexample_f1(&ctx, n0, count.or(ctx.cfg.counterexample.count).unwrap_or(4), stdout),
            }
        }
        Command::Constants { set, k, c, samples } => constants(&ctx, *set, *k, *c, *samples, stdout),
        Command::AnalyzeF { function } => analyze_f(&ctx, *function, stdout),
        Command::Phi => phi(&ctx, stdout),
    }
}

#[derive(Serialize)]
struct SetReport {
    set: RadiusSetDoc,
    classification: crate::radius_sets::Classification,
}

#[derive(Serialize)]
struct GapRow {
    log_lo: String,
    log_hi: String,
    lo_known: bool,
    hi_known: bool,
}

fn analyze_set(ctx: &Ctx, stdout: &mut dyn Write) -> Result<i32> {
    let doc = ctx.cfg.radius_set.as_ref().ok_or_else(|| Error::invalid("config has no `radius_set`"))?;
    let mut set = doc.build()?;
    if let Some((lo, hi)) = ctx.window() {
        set = set.with_window(lo, hi)?;
    }
    let classification = set.classify()?;
    if let Some(mut w) = ctx.artifact("gaps.csv")? {
        let mut csv = csv::Writer::from_writer(&mut w);
        for g in set.window_gaps()? {
            csv.serialize(GapRow {
                log_lo: format_decimal(g.lo),
                log_hi: format_decimal(g.hi),
                lo_known: g.lo_known,
                hi_known: g.hi_known,
            })?;
        }
        csv.flush()?;
    }
    ctx.emit("analyze-set", 0, SetReport { set: RadiusSetDoc::from_set(&set), classification }, stdout)
}

fn check_qns(ctx: &Ctx, stdout: &mut dyn Write) -> Result<i32> {
    let doc = ctx.cfg.field.as_ref().ok_or_else(|| Error::invalid("config has no `field`"))?;
    let u = doc.build()?;
    let restrict = Restriction {
        centers_in: ctx.cfg.centers_in.as_ref().map(RegionDoc::to_region).transpose()?,
        radii_in: ctx.cfg.radius_set.as_ref().map(RadiusSetDoc::build).transpose()?,
    };
    let spec = ctx.spec("check-qns", Method::Stratified)?;
    let threshold = ctx.cli.max_k.or(ctx.cfg.max_k.map(|d| d.0));
    let report = match threshold {
        Some(k) => check_k(&u, k, &ctx.cfg.probe_grid, &restrict, &spec)?,
        None => estimate_k(&u, &ctx.cfg.probe_grid, &restrict, &spec)?,
    };
    let code = if report.verdict == ReportVerdict::Fail { 1 } else { 0 };
    if code == 1 {
        eprintln!("K exceeded threshold");
    }
    ctx.emit("check-qns", code, report, stdout)
}

#[derive(Serialize)]
struct CounterexampleReport {
    n0: usize,
    count: usize,
    disjointness_margin: Real,
    #[serde(rename = "implied_K")]
    implied_k: Vec<Real>,
    not_qns: crate::counterexample::NotQnsReport,
    restricted: crate::counterexample::RestrictedReport,
}

fn sequences(ctx: &Ctx, n0: usize, count: usize) -> Result<(SequencePair, bool)> {
    let c = &ctx.cfg.counterexample;
    match (&c.a, &c.b) {
        (None, None) => Ok((default_sequences(n0, count)?, true)),
        (Some(a), Some(b)) => Ok((SequencePair::new(a.iter().map(|d| d.0).collect(), b.iter().map(|d| d.0).collect(), n0)?, false)),
        _ => Err(Error::invalid("give both `a` and `b` sequences or neither")),
    }
}

fn counterexample(ctx: &Ctx, n0: usize, count: usize, stdout: &mut dyn Write) -> Result<i32> {
    let (seq, default) = sequences(ctx, n0, count)?;
    let domain = CounterexampleDomain::build(&seq)?;
    let a = match &ctx.cfg.radius_set {
        Some(doc) => doc.build()?,
        None => avoiding_set(&domain, default.then(|| GapLaw::counterexample(n0)))?,
    };
    let spec = ctx.spec("counterexample", Method::Analytic)?;
    let not_qns = certify_not_qns(&domain, &spec)?;
    let restricted = certify_restricted_qns(&domain, &a, &ctx.cfg.counterexample.restricted_grid, &spec)?;
    if let Some(mut w) = ctx.artifact("domain.json")? {
        serde_json::to_writer_pretty(&mut w, &domain.to_docs())?;
        writeln!(w)?;
    }
    if let Some(w) = ctx.artifact("implied_k.csv")? {
        write_csv(&not_qns.rows, w)?;
    }
    let pass = not_qns.verdict == ReportVerdict::Pass && restricted.verdict == ReportVerdict::Pass;
    let report = CounterexampleReport {
        n0,
        count: seq.len(),
        disjointness_margin: Real(domain.disjointness_margin()),
        implied_k: not_qns.rows.iter().map(|r| r.implied_k).collect(),
        not_qns,
        restricted,
    };
    ctx.emit("counterexample", if pass { 0 } else { 1 }, report, stdout)
}

fn counterexample_f1(ctx: &Ctx, n0: usize, count: usize, stdout: &mut dyn Write) -> Result<i32> {
    let c = &ctx.cfg.counterexample;
    let law = c.law.unwrap_or(GapLaw::unit_ratio(16.0, 12.0, 1.0));
    let d = match &c.d {
        Some(doc) => doc.to_marked_set()?,
        None => MarkedSet::unit_ball(2)?,
    };
    let cx = build_f1_counterexample(law, n0, count, c.c.map_or(1.0, |d| d.0), d)?;
    let sims =
        c.similarity_grid.clone().unwrap_or(SimilarityGrid { scales: 12, rotations: 4, reflections: true, ..SimilarityGrid::default() });
    let spec = ctx.spec("counterexample-f1", Method::Analytic)?;
    let report = cx.certify(&sims, c.rings.unwrap_or(4), c.angles.unwrap_or(12), &spec)?;
    if let Some(mut w) = ctx.artifact("domain.json")? {
        serde_json::to_writer_pretty(&mut w, &cx.domain.to_docs())?;
        writeln!(w)?;
    }
    if let Some(w) = ctx.artifact("implied_k.csv")? {
        write_csv(&report.not_qns.rows, w)?;
    }
    let pass = report.scaled_inequality == ReportVerdict::Pass && report.admissibility.verdict == Admissibility::NotAdmissible;
    ctx.emit("counterexample", if pass { 0 } else { 1 }, report, stdout)
}

#[derive(Serialize)]
struct LensReport {
    analytic: Real,
    monte_carlo: Real,
    stderr: Real,
    samples: u64,
    abs_error: Real,
    #[serde(rename = "K")]
    reciprocal: Real,
}

#[derive(Serialize)]
struct Conversion {
    set: String,
    #[serde(rename = "R_D")]
    outer_radius: Real,
    #[serde(rename = "r_D")]
    inner_radius: Real,
    measure: Real,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<Real>,
    #[serde(rename = "C_from_K", skip_serializing_if = "Option::is_none")]
    c_from_k: Option<Real>,
    #[serde(rename = "K_from_C_from_K", skip_serializing_if = "Option::is_none")]
    round_trip: Option<Real>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<Real>,
    #[serde(rename = "K_from_C", skip_serializing_if = "Option::is_none")]
    k_from_c: Option<Real>,
}

#[derive(Serialize)]
struct ConstantsReport {
    lens_constant: LensReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    conversion: Option<Conversion>,
}

fn constants(ctx: &Ctx, set: Option<SetName>, k: Option<f64>, c: Option<f64>, samples: u64, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = &ctx.cfg.constants;
    let (mc, se) = lens_fraction_sampled(samples, derive_seed(ctx.seed, "constants", 0), ctx.workers)?;
    let exact = lens_constant();
    let lens = LensReport {
        analytic: Real(exact),
        monte_carlo: Real(mc),
        stderr: Real(se),
        samples,
        abs_error: Real((mc - exact).abs()),
        reciprocal: Real(1.0 / exact),
    };
    let k = k.or(cfg.k.map(|d| d.0));
    let c = c.or(cfg.c.map(|d| d.0));
    let named = set.or(cfg.set);
    let d = match (&cfg.d, named) {
        (_, Some(s)) => Some((format!("{s:?}"), s.build()?)),
        (Some(doc), None) => Some(("custom".to_string(), doc.to_marked_set()?)),
        (None, None) if k.is_some() || c.is_some() => Some(("UnitBall".to_string(), MarkedSet::unit_ball(2)?)),
        _ => None,
    };
    let conversion = match d {
        None => None,
        Some((name, d)) => {
            let c_from_k = k.map(|k| similarity_constant_from_k(k, &d)).transpose()?;
            Some(Conversion {
                set: name,
                outer_radius: Real(d.outer_radius()),
                inner_radius: Real(d.inner_radius()),
                measure: Real(d.measure().value),
                k: k.map(Real),
                c_from_k: c_from_k.map(Real),
                round_trip: c_from_k.map(|c| ball_constant_from_c(c, &d)).transpose()?.map(Real),
                c: c.map(Real),
                k_from_c: c.map(|c| ball_constant_from_c(c, &d)).transpose()?.map(Real),
            })
        }
    };
    ctx.emit("constants", 0, ConstantsReport { lens_constant: lens, conversion }, stdout)
}

#[derive(Serialize)]
struct LevelRow {
    t: String,
    pieces: usize,
    gap_constant: String,
    eps_star: String,
    gaps_growing: bool,
    certifies: bool,
}

fn analyze_f(ctx: &Ctx, name: Option<FunctionName>, stdout: &mut dyn Write) -> Result<i32> {
    let doc = match (name, &ctx.cfg.function) {
        (Some(FunctionName::Linear), _) => FunctionDoc::Linear { slope: Decimal(1.0) },
        (Some(FunctionName::Periodic), _) => FunctionDoc::Periodic,
        (Some(FunctionName::F1), _) => FunctionDoc::F1 { law: None, c: None },
        (None, Some(doc)) => doc.clone(),
        (None, None) => return Err(Error::invalid("give --function or a `function` section")),
    };
    let (f, default_window) = match doc {
        FunctionDoc::Linear { slope } => (ScaleFunction::linear(slope.0)?, (1e-3, 1e3)),
        FunctionDoc::Periodic => (ScaleFunction::periodic(), (1e-3, 1e3)),
        FunctionDoc::F1 { law, c } => {
            let law = law.unwrap_or(GapLaw::unit_ratio(16.0, 12.0, 1.0));
            (ScaleFunction::gap_scaled(law, 2, c.map_or(1.0, |d| d.0))?, (1e-300, 1.0))
        }
    };
    let window = ctx.window().unwrap_or(default_window);
    let t_grid: Vec<f64> = ctx.cfg.t_grid.iter().map(|d| d.0).collect();
    let eps = ctx.cfg.eps_threshold.map_or(f64::INFINITY, |d| d.0);
    let report = f_admissibility(&f, window, &t_grid, eps)?;
    if let Some(mut w) = ctx.artifact("levels.csv")? {
        let mut csv = csv::Writer::from_writer(&mut w);
        for l in &report.levels {
            csv.serialize(LevelRow {
                t: format_decimal(l.t.0),
                pieces: l.pieces,
                gap_constant: format_decimal(l.gap_constant.0),
                eps_star: format_decimal(l.eps_star.0),
                gaps_growing: l.gaps_growing,
                certifies: l.certifies,
            })?;
        }
        csv.flush()?;
    }
    ctx.emit("analyze-f", 0, report, stdout)
}

#[derive(Clone, Serialize)]
struct PhiRow {
    kind: PhiKind,
    scale: Decimal,
    angle: Decimal,
    reflect: bool,
    tx: Decimal,
    ty: Decimal,
    phi: Real,
    /// `k(h)·φ(id)`.
    expected: Real,
    rel_error: Real,
}

#[derive(Serialize)]
struct PhiReport {
    identity: Vec<(PhiKind, Real)>,
    max_rel_error: Real,
    rows: Vec<PhiRow>,
}

fn phi(ctx: &Ctx, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = &ctx.cfg.phi;
    let region = match &cfg.region {
        Some(doc) => doc.to_region()?,
        None => MarkedSet::unit_square()?.region().clone(),
    };
    let kinds = match cfg.kind {
        Some(k) => vec![k],
        None => vec![PhiKind::BoundaryH1, PhiKind::Perimeter, PhiKind::IsoperimetricDeficit],
    };
    let mut sims = cfg.similarities.clone();
    let mut rng = stream(ctx.seed, "phi", 0);
    for _ in 0..cfg.random {
        sims.push(SimilarityDoc {
            scale: Decimal(10f64.powf(rng.gen_range(-2.0..2.0))),
            angle: Decimal(rng.gen_range(0.0..2.0 * PI)),
            reflect: rng.gen(),
            translation: [Decimal(rng.gen_range(-10.0..10.0)), Decimal(rng.gen_range(-10.0..10.0))],
        });
    }
    let id = Similarity::identity(2)?;
    let mut identity = Vec::new();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &kind in &kinds {
        let base = phi_functional(kind, &region, &id)?;
        identity.push((kind, Real(base)));
        for s in &sims {
            let h = Similarity::planar(s.scale.0, s.angle.0, s.reflect, Point::xy(s.translation[0].0, s.translation[1].0))?;
            let value = phi_functional(kind, &region, &h)?;
            let expected = h.scale() * base;
            let rel = if expected != 0.0 { (value - expected).abs() / expected.abs() } else { value.abs() };
            worst = worst.max(rel);
            rows.push(PhiRow {
                kind,
                scale: s.scale,
                angle: s.angle,
                reflect: s.reflect,
                tx: s.translation[0],
                ty: s.translation[1],
                phi: Real(value),
                expected: Real(expected),
                rel_error: Real(rel),
            });
        }
    }
    if let Some(w) = ctx.artifact("phi.csv")? {
        let mut csv = csv::Writer::from_writer(w);
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
    }
    ctx.emit("phi", 0, PhiReport { identity, max_rel_error: Real(worst), rows }, stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, serde_json::Value) {
        let cli = Cli::try_parse_from(std::iter::once("qns").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = run(&cli, &mut buf).unwrap();
        (code, serde_json::from_slice(&buf).unwrap())
    }

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("1e-3,1e3").unwrap(), Window(1e-3, 1e3));
        assert!(parse_window("1,0.5").is_err());
        assert!(parse_window("1").is_err());
    }

    #[test]
    fn constants_conversions() {
        let (code, v) = run_args(&["constants", "--set", "unit-square", "--K", "1", "--samples", "20000"]);
        assert_eq!(code, 0);
        let conv = &v["report"]["conversion"];
        assert!((conv["C_from_K"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert!((conv["K_from_C_from_K"].as_f64().unwrap() - PI).abs() < 1e-12);
        let (_, v) = run_args(&["constants", "--set", "unit-ball", "--C", "5", "--samples", "20000"]);
        assert!((v["report"]["conversion"]["K_from_C"].as_f64().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn phi_report_is_homogeneous() {
        let (code, v) = run_args(&["phi", "--seed", "4"]);
        assert_eq!(code, 0);
        assert!(v["report"]["max_rel_error"].as_f64().unwrap() < 1e-9);
        assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 300);
    }
}
