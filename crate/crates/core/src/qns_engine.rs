//! Mean-value inequality tests.
//!
//! A probe is a ball `B(x, r)` (or a similarity image `h(D)`) inside the
//! field's domain. Probes are enumerated in a fixed order, evaluated in
//! parallel with per-probe seeds, and reduced sequentially, so reports depend
//! only on the seed and the grid.

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{unit_ball_volume, Ball, Point, Similarity};
use crate::num::{Decimal, Real};
use crate::quadrature::{mean_over_ball, mean_over_image, Estimate, Method, QuadratureSpec};
use crate::radius_sets::{Family, Form, GapLaw, RadiusSet, Verdict as SetVerdict};
use crate::regions::{MarkedSet, Primitive, Region};
use crate::sampling::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Ball probes: a tensor grid of centers over the bounding box of the center
/// region, optional boundary points and explicit centers, times radii
/// log-spaced in `[r_min, r_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeGrid {
    pub centers_per_axis: usize,
    pub boundary_centers: usize,
    pub extra_centers: Vec<Vec<Decimal>>,
    pub radii: usize,
    /// Defaults to `r_max / 1000`.
    pub r_min: Option<Decimal>,
    /// Defaults to half the diameter of Ω's bounding box.
    pub r_max: Option<Decimal>,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { centers_per_axis: 33, boundary_centers: 0, extra_centers: Vec::new(), radii: 24, r_min: None, r_max: None }
    }
}

/// Where probes may sit: centers inside `centers_in`, radii inside `radii_in`.
#[derive(Clone, Debug, Default)]
pub struct Restriction {
    pub centers_in: Option<Region>,
    pub radii_in: Option<RadiusSet>,
}

/// Similarity probes `h` with `h(p_D) = x`: scales log-spaced in
/// `[k_min, k_max]` and orthogonal parts from rotations, optionally composed
/// with a reflection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityGrid {
    pub centers_per_axis: usize,
    pub boundary_centers: usize,
    pub extra_centers: Vec<Vec<Decimal>>,
    pub scales: usize,
    pub k_min: Option<Decimal>,
    pub k_max: Option<Decimal>,
    pub rotations: usize,
    pub reflections: bool,
}

impl Default for SimilarityGrid {
    fn default() -> Self {
        SimilarityGrid {
            centers_per_axis: 17,
            boundary_centers: 0,
            extra_centers: Vec::new(),
            scales: 16,
            k_min: None,
            k_max: None,
            rotations: 8,
            reflections: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportVerdict {
    Estimated,
    Pass,
    Fail,
    VacuouslyTrue,
    QnsCompatible,
    NotQnsCompatible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub center: Vec<Decimal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<Decimal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Decimal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthogonal: Option<Vec<Vec<Decimal>>>,
    pub value: Real,
    pub mean: Real,
    pub stderr: Real,
    pub ratio: Real,
}

impl Witness {
    /// Relative standard error of the ratio.
    pub fn rel_stderr(&self) -> f64 {
        if self.mean.0 > 0.0 {
            self.stderr.0 / self.mean.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureSummary {
    pub method: Method,
    pub stderr_max: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub verdict: ReportVerdict,
    #[serde(rename = "K_hat")]
    pub k_hat: Real,
    pub witness: Option<Witness>,
    pub probes: usize,
    pub skipped: usize,
    pub seed: u64,
    pub worker_count: usize,
    pub quadrature: QuadratureSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<Real>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Witness>,
    pub notes: Vec<String>,
}

const MAX_LISTED_FAILURES: usize = 20;
const LOWER_BOUND_NOTE: &str = "K_hat is a lower bound for the supremum over all admissible probes; pass verdicts allow 3 stderr of slack";

#[derive(Clone, Copy, Debug)]
struct BallProbe {
    center: Point,
    radius: f64,
}

#[derive(Clone, Debug)]
struct SimProbe {
    center: Point,
    h: Similarity,
}

#[derive(Clone, Copy, Debug)]
struct Outcome {
    value: f64,
    est: Estimate,
}

fn parse_points(extra: &[Vec<Decimal>], dim: usize) -> Result<Vec<Point>> {
    extra
        .iter()
        .map(|c| {
            let p = Point::new(&c.iter().map(|d| d.0).collect::<Vec<_>>())?;
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
            Ok(p)
        })
        .collect()
}

/// Tensor-grid, boundary and explicit centers lying in Ω and in `within`.
fn centers(per_axis: usize, boundary: usize, extra: &[Vec<Decimal>], omega: &Region, within: Option<&Region>) -> Result<Vec<Point>> {
    let base = within.unwrap_or(omega);
    let dim = omega.dim();
    if base.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: base.dim() });
    }
    let keep = |p: &Point| omega.contains(p) && within.is_none_or(|w| w.contains(p));
    let bb = base.bounds();
    let (lo, hi) = (bb.min.coords().to_vec(), bb.max.coords().to_vec());
    let mut out = Vec::new();
    if per_axis > 0 {
        let coord = |k: usize, i: usize| {
            if per_axis == 1 {
                0.5 * (lo[k] + hi[k])
            } else {
                lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(dim as u32);
        for idx in 0..total {
            let mut c = [0.0; 3];
            let mut rest = idx;
            for (k, ck) in c.iter_mut().enumerate().take(dim) {
                *ck = coord(k, rest % per_axis);
                rest /= per_axis;
            }
            let p = Point::new(&c[..dim])?;
            if keep(&p) {
                out.push(p);
            }
        }
    }
    if boundary > 0 {
        out.extend(base.boundary_samples(boundary).into_iter().filter(|p| keep(p)));
    }
    out.extend(parse_points(extra, dim)?.into_iter().filter(|p| keep(p)));
    Ok(out)
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect(),
    }
}

fn half_diameter(r: &Region) -> f64 {
    let bb = r.bounds();
    0.5 * bb.min.distance(&bb.max)
}

impl ProbeGrid {
    fn radii_list(&self, omega: &Region, radii_in: Option<&RadiusSet>) -> Result<Vec<f64>> {
        let r_max = self.r_max.map_or_else(|| half_diameter(omega), |d| d.0);
        let r_min = self.r_min.map_or(r_max / 1000.0, |d| d.0);
        if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
            return Err(Error::invalid(format!("probe radii need 0 < r_min ≤ r_max, got [{r_min}, {r_max}]")));
        }
        let mut radii = match radii_in {
            Some(a) => a.sample_radii(r_min, r_max, self.radii.max(2))?,
            None => log_spaced(r_min, r_max, self.radii),
        };
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        Ok(radii)
    }

    /// Probe balls whose closures lie in Ω, plus the number of grid pairs
    /// skipped for containment.
    fn probes(&self, omega: &Region, restrict: &Restriction) -> Result<(Vec<BallProbe>, usize)> {
        let cs = centers(self.centers_per_axis, self.boundary_centers, &self.extra_centers, omega, restrict.centers_in.as_ref())?;
        let radii = self.radii_list(omega, restrict.radii_in.as_ref())?;
        if cs.is_empty() || radii.is_empty() {
            return Err(Error::invalid("probe grid is empty"));
        }
        let per_center: Vec<Result<(Vec<BallProbe>, usize)>> = cs
            .par_iter()
            .map(|c| {
                let mut out = Vec::new();
                for (i, r) in radii.iter().enumerate() {
                    // A ball that leaves Ω is inside every larger concentric ball.
                    match omega.contains_closed_ball(&Ball::closed(*c, *r)?) {
                        Ok(()) => out.push(BallProbe { center: *c, radius: *r }),
                        Err(Error::NotContained { .. }) => return Ok((out, radii.len() - i)),
                        Err(e) => return Err(e),
                    }
                }
                Ok((out, 0))
            })
            .collect();
        let mut probes = Vec::new();
        let mut skipped = 0;
        for part in per_center {
            let (p, s) = part?;
            probes.extend(p);
            skipped += s;
        }
        Ok((probes, skipped))
    }
}

fn probe_spec(spec: &QuadratureSpec, index: usize) -> QuadratureSpec {
    QuadratureSpec { seed: derive_seed(spec.seed, "probe", index as u64), ..*spec }
}

fn evaluate_balls(u: &Field, probes: &[BallProbe], spec: &QuadratureSpec) -> Result<Vec<Outcome>> {
    spec.validate()?;
    spec.pool()?.install(|| {
        probes
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let ball = Ball::new(p.center, p.radius)?;
                let est = mean_over_ball(u, &ball, &probe_spec(spec, i))?;
                Ok(Outcome { value: u.evaluate(&p.center)?, est })
            })
            .collect()
    })
}

/// One evaluated ball probe.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ProbeOutcome {
    pub center: Point,
    pub radius: f64,
    pub value: f64,
    pub est: Estimate,
}

/// Evaluated probes in grid order, and the number skipped for containment.
pub(crate) fn ball_probe_outcomes(
    u: &Field,
    grid: &ProbeGrid,
    restrict: &Restriction,
    spec: &QuadratureSpec,
) -> Result<(Vec<ProbeOutcome>, usize)> {
    let (probes, skipped) = grid.probes(u.domain(), restrict)?;
    let outcomes = evaluate_balls(u, &probes, spec)?;
    Ok((
        probes.iter().zip(outcomes).map(|(p, o)| ProbeOutcome { center: p.center, radius: p.radius, value: o.value, est: o.est }).collect(),
        skipped,
    ))
}

/// `u(x)/mean`, with `None` for the vacuous `0/0` case.
pub(crate) fn ratio(value: f64, mean: f64) -> Option<f64> {
    if value == 0.0 && mean <= 0.0 {
        None
    } else if mean <= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(value / mean)
    }
}

fn ball_witness(p: &BallProbe, o: &Outcome, ratio: f64) -> Witness {
    Witness {
        center: p.center.coords().iter().copied().map(Decimal).collect(),
        radius: Some(Decimal(p.radius)),
        scale: None,
        orthogonal: None,
        value: Real(o.value),
        mean: Real(o.est.mean),
        stderr: Real(o.est.stderr),
        ratio: Real(ratio),
    }
}

/// Index of the largest ratio; ties go to the earliest probe.
fn argmax(ratios: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, r) in ratios.iter().enumerate() {
        if let Some(r) = r {
            if best.is_none_or(|(b, _)| *r > b) {
                best = Some((*r, i));
            }
        }
    }
    best.map(|(_, i)| i)
}

fn stderr_max(outcomes: &[Outcome]) -> f64 {
    outcomes.iter().map(|o| o.est.stderr).fold(0.0, f64::max)
}

fn base_report(spec: &QuadratureSpec, probes: usize, skipped: usize, outcomes: &[Outcome]) -> Report {
    Report {
        verdict: ReportVerdict::Estimated,
        k_hat: Real(1.0),
        witness: None,
        probes,
        skipped,
        seed: spec.seed,
        worker_count: spec.workers,
        quadrature: QuadratureSummary { method: spec.method, stderr_max: Real(stderr_max(outcomes)) },
        threshold: None,
        density: None,
        failures: Vec::new(),
        notes: vec![LOWER_BOUND_NOTE.to_string()],
    }
}

fn skipped_note(report: &mut Report) {
    if report.skipped > 0 {
        report.notes.push(format!("{} grid probes skipped: closed ball not inside the domain", report.skipped));
    }
}

/// Largest `u(x)·m_n(B)/∫_B u` over the probe grid (at least 1 when some
/// probe has `u(x) > 0`, the limit of small radii). Ω is the field's domain.
pub fn estimate_k(u: &Field, grid: &ProbeGrid, restrict: &Restriction, spec: &QuadratureSpec) -> Result<Report> {
    let (probes, skipped) = grid.probes(u.domain(), restrict)?;
    let outcomes = evaluate_balls(u, &probes, spec)?;
    let ratios: Vec<Option<f64>> = outcomes.iter().map(|o| ratio(o.value, o.est.mean)).collect();
    let mut report = base_report(spec, probes.len(), skipped, &outcomes);
    if let Some(i) = argmax(&ratios) {
        let r = ratios[i].expect("argmax picks a ratio");
        report.witness = Some(ball_witness(&probes[i], &outcomes[i], r));
        if outcomes.iter().any(|o| o.value > 0.0) {
            report.k_hat = Real(r.max(1.0));
        } else {
            report.k_hat = Real(r);
        }
    }
    skipped_note(&mut report);
    Ok(report)
}

/// Checks `u(x) ≤ K·(mean + 3·stderr)` on every probe.
pub fn check_k(u: &Field, k: f64, grid: &ProbeGrid, restrict: &Restriction, spec: &QuadratureSpec) -> Result<Report> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("K must be at least 1, got {k}")));
    }
    let (probes, skipped) = grid.probes(u.domain(), restrict)?;
    let outcomes = evaluate_balls(u, &probes, spec)?;
    let ratios: Vec<Option<f64>> = outcomes.iter().map(|o| ratio(o.value, o.est.mean)).collect();
    let mut report = base_report(spec, probes.len(), skipped, &outcomes);
    report.threshold = Some(Real(k));
    let mut failing: Vec<(f64, usize)> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.value > k * (o.est.mean + 3.0 * o.est.stderr))
        .map(|(i, _)| (ratios[i].unwrap_or(0.0), i))
        .collect();
    failing.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    if let Some(i) = argmax(&ratios) {
        let r = ratios[i].expect("argmax picks a ratio");
        report.k_hat = Real(if outcomes.iter().any(|o| o.value > 0.0) { r.max(1.0) } else { r });
        report.witness = Some(ball_witness(&probes[i], &outcomes[i], r));
    }
    report.verdict = if failing.is_empty() { ReportVerdict::Pass } else { ReportVerdict::Fail };
    if failing.len() > MAX_LISTED_FAILURES {
        report.notes.push(format!("{} failing probes; the {MAX_LISTED_FAILURES} largest ratios are listed", failing.len()));
    }
    report.failures = failing.iter().take(MAX_LISTED_FAILURES).map(|&(r, i)| ball_witness(&probes[i], &outcomes[i], r)).collect();
    skipped_note(&mut report);
    Ok(report)
}

/// `inf m_n(Γ ∩ B)/m_n(B)` over probe balls centered in Γ with closures in
/// Ω. `K_hat` is the reciprocal.
pub fn indicator_density(
    gamma: &Region,
    omega: &Region,
    grid: &ProbeGrid,
    radii_in: Option<&RadiusSet>,
    spec: &QuadratureSpec,
) -> Result<Report> {
    let u = Field::indicator(gamma.clone(), omega.clone())?;
    let restrict = Restriction { centers_in: Some(gamma.clone()), radii_in: radii_in.cloned() };
    let (probes, skipped) = grid.probes(omega, &restrict)?;
    let outcomes = evaluate_balls(&u, &probes, spec)?;
    let mut report = base_report(spec, probes.len(), skipped, &outcomes);
    // Smallest density, ties to the earliest probe.
    let mut best: Option<(f64, usize)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if best.is_none_or(|(b, _)| o.est.mean < b) {
            best = Some((o.est.mean, i));
        }
    }
    let (inf, i) = best.ok_or_else(|| Error::invalid("probe grid is empty"))?;
    let se = outcomes[i].est.stderr;
    report.density = Some(Real(inf));
    report.k_hat = Real(if inf > 0.0 { 1.0 / inf } else { f64::INFINITY });
    report.witness = Some(ball_witness(&probes[i], &outcomes[i], 1.0 / inf));
    report.verdict = if inf <= (3.0 * se).max(1e-12) {
        report.notes.push("density vanishes within tolerance: no finite K".to_string());
        ReportVerdict::NotQnsCompatible
    } else {
        ReportVerdict::QnsCompatible
    };
    skipped_note(&mut report);
    Ok(report)
}

/// `C = K·(R_D/r_D)ⁿ`: a `K` for balls gives this constant for `h(D)`.
pub fn similarity_constant_from_k(k: f64, d: &MarkedSet) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("K must be at least 1, got {k}")));
    }
    let r = d.inner_radius();
    Ok(k * outer_power(d) / r.powi(d.dim() as i32))
}

/// `R_Dⁿ` from `R_D²`.
fn outer_power(d: &MarkedSet) -> f64 {
    match d.dim() {
        2 => d.outer_radius_squared(),
        n => d.outer_radius_squared() * d.outer_radius().powi(n as i32 - 2),
    }
}

/// `K = C·ν_n·R_Dⁿ/m_n(D)`: a constant for `h(D)` gives this `K` for balls.
pub fn ball_constant_from_c(c: f64, d: &MarkedSet) -> Result<f64> {
    if !(c >= 1.0) {
        return Err(Error::invalid(format!("C must be at least 1, got {c}")));
    }
    let n = d.dim();
    Ok(c * unit_ball_volume(n)? * outer_power(d) / d.measure().value)
}

fn orthogonal_parts(dim: usize, rotations: usize, reflections: bool) -> Vec<Vec<Vec<f64>>> {
    let rotations = rotations.max(1);
    let mut out = Vec::new();
    for j in 0..rotations {
        let (s, c) = (2.0 * PI * j as f64 / rotations as f64).sin_cos();
        if dim == 2 {
            out.push(vec![vec![c, -s], vec![s, c]]);
            if reflections {
                out.push(vec![vec![c, s], vec![s, -c]]);
            }
        } else {
            out.push(vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]);
            if reflections {
                out.push(vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, -1.0]]);
            }
        }
    }
    out
}

/// Largest `u(x)·m_n(h(D))/∫_{h(D)} u` over similarities with `h(p_D) = x`
/// and `h(D) ⊆ Ω`; with a scale function the normalization is `f(k(h))ⁿ`.
pub fn generalized_test(
    u: &Field,
    d: &MarkedSet,
    f: Option<&ScaleFunction>,
    grid: &SimilarityGrid,
    centers_in: Option<&Region>,
    spec: &QuadratureSpec,
) -> Result<Report> {
    spec.validate()?;
    let omega = u.domain();
    let n = d.dim();
    if omega.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: omega.dim() });
    }
    let cs = centers(grid.centers_per_axis, grid.boundary_centers, &grid.extra_centers, omega, centers_in)?;
    let k_max = grid.k_max.map_or_else(|| half_diameter(omega) / d.outer_radius(), |k| k.0);
    let k_min = grid.k_min.map_or(k_max / 1000.0, |k| k.0);
    if !(k_min > 0.0 && k_min <= k_max && k_max.is_finite()) {
        return Err(Error::invalid(format!("similarity scales need 0 < k_min ≤ k_max, got [{k_min}, {k_max}]")));
    }
    let scales = log_spaced(k_min, k_max, grid.scales);
    let parts = orthogonal_parts(n, grid.rotations, grid.reflections);
    let p_d = d.marked_point();

    let pool = spec.pool()?;
    let per_center: Vec<Result<(Vec<SimProbe>, usize)>> = pool.install(|| {
        cs.par_iter()
            .map(|c| {
                let mut out = Vec::new();
                let mut skipped = 0;
                for t in &parts {
                    for k in &scales {
                        let h = Similarity::anchored(*k, t, p_d, *c)?;
                        match omega.contains_region(&d.region().image(&h)?) {
                            Ok(()) => out.push(SimProbe { center: *c, h }),
                            Err(Error::NotContained { .. }) => skipped += 1,
                            Err(e) => return Err(e),
                        }
                    }
                }
                Ok((out, skipped))
            })
            .collect()
    });
    let mut probes = Vec::new();
    let mut skipped = 0;
    for part in per_center {
        let (p, s) = part?;
        probes.extend(p);
        skipped += s;
    }

    let outcomes: Vec<Outcome> = pool.install(|| {
        probes
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let est = mean_over_image(u, d, &p.h, &probe_spec(spec, i))?;
                Ok(Outcome { value: u.evaluate(&p.center)?, est })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = base_report(spec, probes.len(), skipped, &outcomes);
    if probes.is_empty() {
        report.verdict = ReportVerdict::VacuouslyTrue;
        report.notes.push("no admissible similarity: the inequality holds vacuously".to_string());
        return Ok(report);
    }
    let m_d = d.measure().value;
    let ratios: Vec<Option<f64>> = probes
        .iter()
        .zip(&outcomes)
        .map(|(p, o)| {
            let base = ratio(o.value, o.est.mean)?;
            Some(match f {
                None => base,
                Some(f) => {
                    let k = p.h.scale();
                    base * f.eval(k).powi(n as i32) / (k.powi(n as i32) * m_d)
                }
            })
        })
        .collect();
    if let Some(i) = argmax(&ratios) {
        let r = ratios[i].expect("argmax picks a ratio");
        let floor = f.is_none() && outcomes.iter().any(|o| o.value > 0.0);
        report.k_hat = Real(if floor { r.max(1.0) } else { r });
        let o = &outcomes[i];
        report.witness = Some(Witness {
            center: probes[i].center.coords().iter().copied().map(Decimal).collect(),
            radius: None,
            scale: Some(Decimal(probes[i].h.scale())),
            orthogonal: Some(probes[i].h.orthogonal().iter().map(|row| row.iter().copied().map(Decimal).collect()).collect()),
            value: Real(o.value),
            mean: Real(o.est.mean),
            stderr: Real(o.est.stderr),
            ratio: Real(r),
        });
    }
    if skipped > 0 {
        report.notes.push(format!("{skipped} similarity probes skipped: image not inside the domain"));
    }
    Ok(report)
}

type ScaleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `t ↦ A_t = {k : f(k) ≥ t·k}` on all of `(0, ∞)`, when known in closed form.
pub type LevelDescriptor = Arc<dyn Fn(f64) -> Option<Form> + Send + Sync>;

/// A positive function of the scale `k(h)`.
#[derive(Clone)]
pub struct ScaleFunction {
    name: String,
    f: ScaleFn,
    /// Samples per unit of `ln k`.
    resolution: f64,
    descriptor: Option<LevelDescriptor>,
}

impl std::fmt::Debug for ScaleFunction {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("ScaleFunction")
            .field("name", &self.name)
            .field("resolution", &self.resolution)
            .field("descriptor", &self.descriptor.is_some())
            .finish_non_exhaustive()
    }
}

impl ScaleFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScaleFunction { name: name.into(), f: Arc::new(f), resolution: 64.0, descriptor: None }
    }

    pub fn with_resolution(mut self, per_unit_log: f64) -> Self {
        self.resolution = per_unit_log;
        self
    }

    pub fn with_descriptor(mut self, d: impl Fn(f64) -> Option<Form> + Send + Sync + 'static) -> Self {
        self.descriptor = Some(Arc::new(d));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: f64) -> f64 {
        (self.f)(k)
    }

    /// The exact `A_t`, if a descriptor was given.
    pub fn level_set(&self, t: f64) -> Option<Form> {
        self.descriptor.as_ref().and_then(|d| d(t))
    }

    /// `f(k) = s·k`.
    pub fn linear(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("linear scale function needs a positive slope"));
        }
        Ok(ScaleFunction::new(format!("linear({s})"), move |k| s * k)
            .with_descriptor(move |t| Some(if t <= s { Form::Intervals(vec![(0.0, f64::INFINITY)]) } else { Form::Finite(Vec::new()) })))
    }

    /// `f(k) = k·(3/2 + sin(2π·μ(k)))` with `μ(k) = (k + 1/k)/2`, which
    /// oscillates ever faster in `ln k` at both ends.
    pub fn periodic() -> Self {
        let psi = |y: f64| 1.5 + (2.0 * PI * y).sin();
        ScaleFunction::new("periodic", move |k| k * psi(0.5 * (k + 1.0 / k))).with_resolution(20_000.0).with_descriptor(|t| {
            if t <= 0.5 {
                Some(Form::Intervals(vec![(0.0, f64::INFINITY)]))
            } else if t > 2.5 {
                Some(Form::Finite(Vec::new()))
            } else {
                None
            }
        })
    }

    /// `f₁(k) = k/m` on the gap `(a_m, b_m)` of `law` (for `m ≥ m_start`),
    /// `c·k` elsewhere.
    pub fn gap_scaled(law: GapLaw, m_start: usize, c: f64) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::invalid(format!("the outer slope c must be at least 1, got {c}")));
        }
        if !(law.ratio_factor >= 1.0) {
            return Err(Error::invalid("gap law needs ratio_factor ≥ 1"));
        }
        RadiusSet::family(Family::GapComplement { law, m_start }, (0.5, 1.0))?;
        let f = move |k: f64| match gap_index(&law, m_start, k.ln()) {
            Some(m) => k / m as f64,
            None => c * k,
        };
        let descriptor = move |t: f64| {
            if t > c {
                // Only gap points could qualify, and there f/k = 1/m ≤ 1 ≤ c < t.
                return Some(Form::Finite(Vec::new()));
            }
            // Gap m stays in A_t iff 1/m ≥ t.
            let first_removed = if t > 0.0 {
                ((1.0 / t).floor() as usize + 1).max(m_start)
            } else {
                return Some(Form::Intervals(vec![(0.0, f64::INFINITY)]));
            };
            Some(Form::Family(Family::GapComplement { law, m_start: first_removed }))
        };
        Ok(ScaleFunction::new(format!("gap_scaled(c = {c})"), f).with_resolution(32.0).with_descriptor(descriptor))
    }
}

/// The `m ≥ m_start` with `ln a_m < y < ln b_m`, if any.
fn gap_index(law: &GapLaw, m_start: usize, y: f64) -> Option<usize> {
    let guess = ((-y).max(0.0) / law.base.ln()).sqrt() as usize;
    (guess.saturating_sub(3).max(m_start)..=guess + 3).find(|&m| law.ln_a(m) < y && y < law.ln_b(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissibility {
    AdmissibleOnWindow,
    NotAdmissible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub t: Real,
    /// Pieces of `A_t` found on the window.
    pub pieces: usize,
    pub gap_constant: Real,
    pub eps_star: Real,
    /// Verdict for the exact `A_t` on all of `(0, ∞)`, when described.
    pub asymptotic: Option<SetVerdict>,
    /// Log-lengths of the gaps of `A_t` inside the window, from the top
    /// down towards 0.
    pub log_gaps: Vec<Real>,
    pub gaps_growing: bool,
    /// The same from the closed-form description, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic_log_gaps: Option<Vec<Real>>,
    pub certifies: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub t: Real,
    pub c: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub function: String,
    pub window: [Real; 2],
    pub samples: usize,
    /// Smallest `c` with `f(k) ≤ c·k` at every sample.
    pub c: Real,
    pub verdict: Admissibility,
    pub certificate: Option<Certificate>,
    pub levels: Vec<LevelReport>,
    pub caveats: Vec<String>,
}

/// Refines a sign change of `g` between `ln k` values `y_out` (g < 0) and
/// `y_in` (g ≥ 0); returns the `k` nearest the change with `g ≥ 0`.
fn refine(g: &dyn Fn(f64) -> bool, mut y_out: f64, mut y_in: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (y_out + y_in);
        if mid == y_out || mid == y_in {
            break;
        }
        if g(mid) {
            y_in = mid;
        } else {
            y_out = mid;
        }
    }
    y_in.exp()
}

/// Checks the hypotheses of the scale-function criterion on a window:
/// the smallest `c` with `f ≤ c·k`, then for each level `t` the set
/// `A_t = {k : f(k) ≥ t·k}` and the ε-net radius of `ln A_t`. A level
/// certifies when that radius is finite and at most `eps_threshold`, and the
/// exact `A_t` (if described) is not unfavorable. Levels `1/c′` for
/// `c′ = max(c, 1)·2^(j/2)` are always examined, in addition to `t_grid`.
pub fn f_admissibility(f: &ScaleFunction, window: (f64, f64), t_grid: &[f64], eps_threshold: f64) -> Result<AdmissibilityReport> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!("window must satisfy 0 < lo < hi < ∞, got [{lo}, {hi}]")));
    }
    if t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("levels t must be positive"));
    }
    let (ylo, yhi) = (lo.ln(), hi.ln());
    let n = ((yhi - ylo) * f.resolution).ceil().max(1.0) as usize + 1;
    let ys: Vec<f64> = (0..n).map(|i| ylo + (yhi - ylo) * i as f64 / (n - 1) as f64).collect();
    let ratios: Vec<f64> = ys
        .par_iter()
        .map(|y| {
            let k = y.exp();
            let v = f.eval(k);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("f({k:e}) = {v} is not positive")));
            }
            Ok(v / k)
        })
        .collect::<Result<_>>()?;
    let c = ratios.iter().copied().fold(0.0, f64::max);

    let mut levels: Vec<f64> = Vec::new();
    let base = c.max(1.0);
    for j in 0..=6 {
        let cj = base * 2f64.powf(j as f64 / 2.0);
        if cj > 1.0 {
            levels.push(1.0 / cj);
        }
    }
    levels.extend_from_slice(t_grid);

    let mut caveats = Vec::new();
    let mut reports = Vec::new();
    for &t in &levels {
        let inside = |y: f64| {
            let k = y.exp();
            f.eval(k) >= t * k
        };
        let mut pieces = Vec::new();
        let mut i = 0;
        while i < n {
            if ratios[i] < t {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && ratios[i + 1] >= t {
                i += 1;
            }
            let l = if start == 0 { lo } else { refine(&inside, ys[start - 1], ys[start]) };
            let u = if i == n - 1 { hi } else { refine(&inside, ys[i + 1], ys[i]) };
            pieces.push((l.max(lo), u.min(hi)));
            i += 1;
        }
        let set = RadiusSet::intervals(pieces.clone(), window)?.window_only();
        let eps = set.log_eps_net()?;
        let gap_c = set.gap_constant()?;
        let mut log_gaps: Vec<f64> = set.window_gaps()?.iter().filter(|g| g.lo_known && g.hi_known).map(|g| g.hi - g.lo).collect();
        log_gaps.reverse();
        let growing = log_gaps.len() >= 3 && log_gaps.windows(2).all(|w| w[1] > w[0]);
        let exact = match f.level_set(t) {
            Some(form) => Some(RadiusSet::new(form, window)?),
            None => None,
        };
        let asymptotic = match &exact {
            Some(s) => Some(s.classify()?.favorable_all_open),
            None => None,
        };
        let asymptotic_log_gaps = match exact.as_ref().map(|s| s.form()) {
            Some(Form::Family(fam)) => fam.gap_sequence(8).map(|v| v.into_iter().map(Real).collect()),
            _ => None,
        };
        let certifies = eps.is_finite() && eps <= eps_threshold && asymptotic != Some(SetVerdict::No);
        reports.push(LevelReport {
            t: Real(t),
            pieces: pieces.len(),
            gap_constant: Real(gap_c),
            eps_star: Real(eps),
            asymptotic,
            log_gaps: log_gaps.into_iter().map(Real).collect(),
            gaps_growing: growing,
            asymptotic_log_gaps,
            certifies,
        });
    }

    // A_t ⊆ A_{1/c′} whenever 1/c′ ≤ t, so a certifying t serves every c′ ≥ max(c, 1/t).
    let certificate = reports
        .iter()
        .filter(|l| l.certifies)
        .map(|l| Certificate { t: l.t, c: Real(c.max(1.0 / l.t.0)) })
        .min_by(|a, b| a.c.0.total_cmp(&b.c.0));
    if let Some(cert) = &certificate {
        if cert.c.0 <= 1.0 {
            caveats.push("certificate holds for every c > 1".to_string());
        }
        let lvl = reports.iter().find(|l| l.t == cert.t).expect("certificate comes from a level");
        if lvl.asymptotic.is_none() {
            caveats.push("window-limited: the certifying level set is only known on the window".to_string());
        }
    }
    Ok(AdmissibilityReport {
        function: f.name.clone(),
        window: [Real(lo), Real(hi)],
        samples: n,
        c: Real(c),
        verdict: if certificate.is_some() { Admissibility::AdmissibleOnWindow } else { Admissibility::NotAdmissible },
        certificate,
        levels: reports,
        caveats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    /// `H¹(∂h(D))`.
    BoundaryH1,
    /// The perimeter `P(h(D))` (in the plane, `P^(1/(n−1)) = P`).
    Perimeter,
    /// `(H¹(∂h(D))² − 4π·m₂(h(D)))^(1/2)`, positive for non-disks.
    IsoperimetricDeficit,
}

/// `φ(h)` for a planar disk or polygon `D`.
pub fn phi_functional(kind: PhiKind, d: &Region, h: &Similarity) -> Result<f64> {
    let [prim] = d.primitives() else {
        return Err(Error::Unsupported("φ-functionals need a single disk or polygon".into()));
    };
    if prim.dim() != 2 || h.dim() != 2 {
        return Err(Error::Unsupported("φ-functionals are planar".into()));
    }
    if kind == PhiKind::IsoperimetricDeficit && matches!(prim, Primitive::Ball(_)) {
        return Err(Error::invalid("the isoperimetric deficit of a disk is 0; D must not be a disk"));
    }
    let image = prim.image(h)?;
    let (length, area) = match &image {
        Primitive::Ball(b) => (2.0 * PI * b.radius, b.volume()),
        p => {
            let g = p.as_polygon().ok_or_else(|| Error::Unsupported("φ-functionals need a disk or polygon".into()))?;
            (g.perimeter(), g.area())
        }
    };
    Ok(match kind {
        PhiKind::BoundaryH1 | PhiKind::Perimeter => length,
        PhiKind::IsoperimetricDeficit => (length * length - 4.0 * PI * area).max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lens_constant, Polygon};

    fn unit_disk_on_b2() -> Field {
        let x = Region::closed_ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        Field::indicator(x, Region::ball(Point::xy(0.0, 0.0), 2.0).unwrap()).unwrap()
    }

    fn analytic() -> QuadratureSpec {
        QuadratureSpec { method: Method::Analytic, ..QuadratureSpec::default() }
    }

    fn disk_grid() -> (ProbeGrid, Restriction) {
        let grid =
            ProbeGrid { centers_per_axis: 41, radii: 30, r_min: Some(Decimal(1e-3)), r_max: Some(Decimal(1.0)), ..ProbeGrid::default() };
        let restrict = Restriction { centers_in: Some(Region::closed_ball(Point::xy(0.0, 0.0), 1.0).unwrap()), radii_in: None };
        (grid, restrict)
    }

    #[test]
    fn constant_field_has_k_one() {
        let u = Field::constant(2.0, Region::rect(Point::xy(0.0, 0.0), Point::xy(1.0, 2.0)).unwrap()).unwrap();
        let r = estimate_k(&u, &ProbeGrid::default(), &Restriction::default(), &QuadratureSpec::default()).unwrap();
        assert_eq!(r.k_hat.0, 1.0);
        assert_eq!(
            check_k(&u, 1.0, &ProbeGrid::default(), &Restriction::default(), &QuadratureSpec::default()).unwrap().verdict,
            ReportVerdict::Pass
        );
    }

    #[test]
    fn disk_indicator_k_near_lens_bound() {
        let (grid, restrict) = disk_grid();
        let u = unit_disk_on_b2();
        let r = estimate_k(&u, &grid, &restrict, &analytic()).unwrap();
        let bound = 1.0 / lens_constant();
        assert!(r.k_hat.0 <= bound + 0.05 && r.k_hat.0 > 2.3, "{}", r.k_hat.0);
        let pass = check_k(&u, 3.0, &grid, &restrict, &analytic()).unwrap();
        assert_eq!(pass.verdict, ReportVerdict::Pass);
        let fail = check_k(&u, 1.5, &grid, &restrict, &analytic()).unwrap();
        assert_eq!(fail.verdict, ReportVerdict::Fail);
        let w = &fail.failures[0];
        let x = Point::new(&w.center.iter().map(|d| d.0).collect::<Vec<_>>()).unwrap();
        assert!(x.norm() > 0.9 && w.radius.unwrap().0 > 0.8);
        let again = check_k(&u, r.k_hat.0 * (1.0 + 1e-9), &grid, &restrict, &analytic()).unwrap();
        assert_eq!(again.verdict, ReportVerdict::Pass);
    }

    #[test]
    fn density_examples() {
        let b1 = Region::closed_ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        let grid = ProbeGrid { centers_per_axis: 21, radii: 12, ..ProbeGrid::default() };
        let same = indicator_density(&b1, &b1, &grid, None, &analytic()).unwrap();
        assert_eq!(same.density.unwrap().0, 1.0);
        let (grid, _) = disk_grid();
        let grid = ProbeGrid { centers_per_axis: 101, ..grid };
        let b2 = Region::ball(Point::xy(0.0, 0.0), 2.0).unwrap();
        let r = indicator_density(&b1, &b2, &grid, None, &analytic()).unwrap();
        assert!((r.density.unwrap().0 - lens_constant()).abs() < 0.01, "{:?}", r.density);
        assert_eq!(r.verdict, ReportVerdict::QnsCompatible);
    }

    #[test]
    fn half_disk_density_near_half() {
        let b1 = Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        // Γ = right half of the disk, closed so the flat edge belongs to it.
        let mut half = Polygon::new(
            (0..=64)
                .map(|i| {
                    let a = -PI / 2.0 + PI * i as f64 / 64.0;
                    if i % 64 == 0 {
                        Point::xy(0.0, a.sin().round())
                    } else {
                        Point::xy(a.cos(), a.sin())
                    }
                })
                .collect(),
        )
        .unwrap();
        half.closed = true;
        let gamma = Region::new(vec![Primitive::Polygon(half)]).unwrap();
        let grid = ProbeGrid {
            centers_per_axis: 0,
            extra_centers: vec![vec![Decimal(0.0), Decimal(0.0)], vec![Decimal(0.0), Decimal(0.3)]],
            radii: 5,
            r_min: Some(Decimal(1e-3)),
            r_max: Some(Decimal(0.05)),
            ..ProbeGrid::default()
        };
        let r = indicator_density(&gamma, &b1, &grid, None, &analytic()).unwrap();
        assert!((r.density.unwrap().0 - 0.5).abs() < 1e-6, "{:?}", r.density);
    }

    #[test]
    fn constant_conversions() {
        let sq = MarkedSet::unit_square().unwrap();
        assert!((similarity_constant_from_k(1.0, &sq).unwrap() - 2.0).abs() < 1e-12);
        assert!((similarity_constant_from_k(3.0, &sq).unwrap() - 6.0).abs() < 1e-12);
        assert!((ball_constant_from_c(2.0, &sq).unwrap() - PI).abs() < 1e-12);
        let disk = MarkedSet::unit_ball(2).unwrap();
        assert!((similarity_constant_from_k(7.0, &disk).unwrap() - 7.0).abs() < 1e-12);
        assert!((ball_constant_from_c(5.0, &disk).unwrap() - 5.0).abs() < 1e-12);
        for d in [sq, disk, MarkedSet::two_ball_union().unwrap()] {
            let k0 = 1.7;
            assert!(ball_constant_from_c(similarity_constant_from_k(k0, &d).unwrap(), &d).unwrap() >= k0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn generalized_test_examples() {
        let omega = Region::ball(Point::xy(0.0, 0.0), 2.0).unwrap();
        let one = Field::constant(1.0, omega.clone()).unwrap();
        let sq = MarkedSet::unit_square().unwrap();
        let grid = SimilarityGrid { centers_per_axis: 9, scales: 6, rotations: 3, ..SimilarityGrid::default() };
        let r = generalized_test(&one, &sq, None, &grid, None, &analytic()).unwrap();
        assert_eq!(r.k_hat.0, 1.0);
        let f = ScaleFunction::new("area-normalized", |k| k * 1.0f64.sqrt());
        let r = generalized_test(&one, &sq, Some(&f), &grid, None, &analytic()).unwrap();
        assert!((r.k_hat.0 - 1.0).abs() < 1e-12);

        let u = unit_disk_on_b2();
        let disk = MarkedSet::unit_ball(2).unwrap();
        let b1 = Region::closed_ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        let sim = SimilarityGrid {
            centers_per_axis: 21,
            scales: 12,
            k_min: Some(Decimal(0.01)),
            k_max: Some(Decimal(1.0)),
            rotations: 1,
            reflections: false,
            ..SimilarityGrid::default()
        };
        let r = generalized_test(&u, &disk, None, &sim, Some(&b1), &analytic()).unwrap();
        assert!(r.k_hat.0 <= 1.0 / lens_constant() + 0.05 && r.k_hat.0 > 2.0);

        let tiny = Region::ball(Point::xy(0.0, 0.0), 1e-3).unwrap();
        let far = SimilarityGrid {
            centers_per_axis: 3,
            scales: 2,
            k_min: Some(Decimal(10.0)),
            k_max: Some(Decimal(20.0)),
            ..SimilarityGrid::default()
        };
        let v = generalized_test(&Field::constant(1.0, tiny).unwrap(), &sq, None, &far, None, &analytic()).unwrap();
        assert_eq!(v.verdict, ReportVerdict::VacuouslyTrue);
    }

    #[test]
    fn phi_examples() {
        let disk = Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        let sq = Region::rect(Point::xy(0.0, 0.0), Point::xy(1.0, 1.0)).unwrap();
        let h2 = Similarity::dilation(2.0, Point::xy(0.0, 0.0)).unwrap();
        let id = Similarity::identity(2).unwrap();
        assert!((phi_functional(PhiKind::Perimeter, &disk, &h2).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((phi_functional(PhiKind::BoundaryH1, &sq, &id).unwrap() - 4.0).abs() < 1e-12);
        let def = phi_functional(PhiKind::IsoperimetricDeficit, &sq, &id).unwrap();
        assert!((def - (16.0 - 4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(phi_functional(PhiKind::IsoperimetricDeficit, &disk, &id).is_err());
        let h = Similarity::planar(3.7, 0.9, true, Point::xy(1.0, -2.0)).unwrap();
        for kind in [PhiKind::Perimeter, PhiKind::BoundaryH1, PhiKind::IsoperimetricDeficit] {
            let (a, b) = (phi_functional(kind, &sq, &h).unwrap(), 3.7 * phi_functional(kind, &sq, &id).unwrap());
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn linear_is_admissible() {
        let r = f_admissibility(&ScaleFunction::linear(1.0).unwrap(), (1e-3, 1e3), &[1.0], f64::INFINITY).unwrap();
        assert_eq!(r.verdict, Admissibility::AdmissibleOnWindow);
        assert!((r.c.0 - 1.0).abs() < 1e-12);
        let one = r.levels.iter().find(|l| l.t.0 == 1.0).unwrap();
        assert_eq!((one.pieces, one.eps_star.0), (1, 0.0));
    }

    #[test]
    fn periodic_is_admissible() {
        let r = f_admissibility(&ScaleFunction::periodic(), (1e-3, 1e3), &[1.25], f64::INFINITY).unwrap();
        assert_eq!(r.verdict, Admissibility::AdmissibleOnWindow);
        assert!(r.c.0 <= 2.5 && r.c.0 > 2.49);
        let l = r.levels.iter().find(|l| l.t.0 == 1.25).unwrap();
        assert!(l.eps_star.0.is_finite() && l.pieces > 100);
        assert!((r.certificate.as_ref().unwrap().c.0 - r.c.0).abs() < 1e-12);
    }

    #[test]
    fn gap_scaled_is_not_admissible() {
        let f = ScaleFunction::gap_scaled(GapLaw::unit_ratio(16.0, 12.0, 1.0), 2, 1.0).unwrap();
        let law = GapLaw::unit_ratio(16.0, 12.0, 1.0);
        let k = (law.ln_a(3) + 0.5 * law.ln_ratio(3)).exp();
        assert!((f.eval(k) - k / 3.0).abs() <= 1e-12 * k && f.eval(k) <= law.a(3));
        assert_eq!(f.eval(0.5), 0.5);
        let r = f_admissibility(&f, (1e-300, 1.0), &[], f64::INFINITY).unwrap();
        assert_eq!(r.verdict, Admissibility::NotAdmissible);
        for l in &r.levels {
            assert_eq!(l.asymptotic, Some(SetVerdict::No));
            assert!(l.gaps_growing, "t = {}: {:?}", l.t.0, l.log_gaps);
        }
    }
}
