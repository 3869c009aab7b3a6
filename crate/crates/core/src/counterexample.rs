//! Planar domains on which the ball mean-value inequality fails with every
//! constant, although it holds with a fixed constant once radii are
//! restricted to a set avoiding the gaps `(a_m, b_m)`.
//!
//! The domain is a chain of balls `B(z_m, b_m/N₀)` joined by thin
//! rectangles, with `u` the indicator of `X = ⋃ closed B(z_m, a_m)`. The
//! radii shrink like `16^(−m²)`, far below the spacing of doubles near `z_m`,
//! so every computation runs in the local frame of one ball: origin `z_m`,
//! length unit `b_m`.

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{lens_constant, Point};
use crate::num::{format_decimal, Decimal, Real};
use crate::qns_engine::{
    ball_probe_outcomes, f_admissibility, generalized_test, AdmissibilityReport, ProbeGrid, ReportVerdict, Restriction, ScaleFunction,
    SimilarityGrid,
};
use crate::quadrature::{mean_over_ball, QuadratureSpec};
use crate::radius_sets::{Family, GapLaw, RadiusSet};
use crate::regions::{MarkedSet, Region, RegionDoc};
use crate::sampling::derive_seed;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Sequences `a_m`, `b_m` (`m = 1..=M`) with a chain constant `N₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequencePair {
    a: Vec<f64>,
    b: Vec<f64>,
    n0: usize,
}

fn violated(index: usize, constraint: &str) -> Error {
    Error::SequenceConstraint { index, constraint: constraint.to_string() }
}

impl SequencePair {
    /// Validates `0 < b_(m+1) < a_m < 2a_m < b_m/N₀ < b_m`, with `a_m`
    /// decreasing and `b_m/a_m` increasing.
    pub fn new(a: Vec<f64>, b: Vec<f64>, n0: usize) -> Result<Self> {
        if n0 <= 2 {
            return Err(Error::invalid(format!("N₀ must be an integer greater than 2, got {n0}")));
        }
        if a.len() != b.len() {
            return Err(Error::invalid(format!("sequence lengths differ: {} vs {}", a.len(), b.len())));
        }
        if a.len() < 3 {
            return Err(Error::invalid(format!("need at least 3 terms, got {}", a.len())));
        }
        let nf = n0 as f64;
        for m in 1..=a.len() {
            let (am, bm) = (a[m - 1], b[m - 1]);
            if !(am > 0.0 && am.is_finite()) {
                return Err(violated(m, "0 < a_m"));
            }
            if !(bm > 0.0 && bm.is_finite()) {
                return Err(violated(m, "0 < b_m"));
            }
            if !(2.0 * am < bm / nf) {
                return Err(violated(m, "2a_m < b_m/N₀"));
            }
            if m < a.len() {
                if !(b[m] < am) {
                    return Err(violated(m, "b_(m+1) < a_m"));
                }
                if !(a[m] < am) {
                    return Err(violated(m, "a_(m+1) < a_m"));
                }
                if !(b[m] / a[m] > bm / am) {
                    return Err(violated(m, "b_(m+1)/a_(m+1) > b_m/a_m"));
                }
            }
        }
        Ok(SequencePair { a, b, n0 })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// `a_m`, 1-based.
    pub fn a(&self, m: usize) -> f64 {
        self.a[m - 1]
    }

    pub fn b(&self, m: usize) -> f64 {
        self.b[m - 1]
    }
}

/// `b_m = 16^(−m²)`, `a_m = b_m/(4N₀m)`.
pub fn default_sequences(n0: usize, count: usize) -> Result<SequencePair> {
    let b: Vec<f64> = (1..=count).map(|m| 16f64.powi(-((m * m) as i32))).collect();
    let a = b.iter().enumerate().map(|(i, bm)| bm / (4.0 * n0 as f64 * (i + 1) as f64)).collect();
    SequencePair::new(a, b, n0)
}

/// One ball of the chain seen from its center, in units of `b_m`.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub m: usize,
    /// `z_m` (in global units).
    pub origin: f64,
    /// `b_m`.
    pub unit: f64,
    pub omega: Region,
    pub x: Region,
    pub field: Field,
}

/// A chain of balls `B(z_m, b_m/N₀)` for `m = first..first+len−1`, joined by
/// rectangles of half-height `a_(m+1)`, with `X = ⋃ closed B(z_m, a_m)`.
#[derive(Clone, Debug)]
pub struct CounterexampleDomain {
    n0: usize,
    first: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    z: Vec<f64>,
    omega: Region,
    x: Region,
    resolved: usize,
}

impl CounterexampleDomain {
    fn chain(a: Vec<f64>, b: Vec<f64>, n0: usize, first: usize, z_first: f64) -> Result<Self> {
        let mut z = vec![z_first];
        for i in 1..a.len() {
            z.push(z[i - 1] + 2.0 * b[i - 1]);
        }
        let nf = n0 as f64;
        let mut omega_parts = Vec::new();
        let mut x_parts = Vec::new();
        let mut resolved = 0;
        for i in 0..a.len() {
            // Stop once the next ball's neighborhood is below the spacing of doubles near z.
            let ulp = z[i].abs().max(f64::MIN_POSITIVE) * f64::EPSILON;
            if a[i] <= 64.0 * ulp {
                break;
            }
            omega_parts.push(Region::ball(Point::xy(z[i], 0.0), b[i] / nf)?);
            x_parts.push(Region::closed_ball(Point::xy(z[i], 0.0), a[i])?);
            resolved += 1;
            if i + 1 < a.len() && a[i + 1] > 64.0 * ulp {
                let h = a[i + 1];
                omega_parts.push(Region::rect(Point::xy(z[i], -h), Point::xy(z[i] + 2.0 * b[i], h))?);
            }
        }
        let union =
            |parts: Vec<Region>| -> Result<Region> { Region::new(parts.iter().flat_map(|r| r.primitives().iter().cloned()).collect()) };
        Ok(CounterexampleDomain { n0, first, omega: union(omega_parts)?, x: union(x_parts)?, resolved, a, b, z })
    }

    pub fn build(seq: &SequencePair) -> Result<Self> {
        CounterexampleDomain::chain(seq.a.clone(), seq.b.clone(), seq.n0, 1, 0.0)
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Indices `m` of the balls, in order.
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.a.len()
    }

    pub fn a(&self, m: usize) -> f64 {
        self.a[m - self.first]
    }

    pub fn b(&self, m: usize) -> f64 {
        self.b[m - self.first]
    }

    pub fn z(&self, m: usize) -> f64 {
        self.z[m - self.first]
    }

    /// How many leading balls the global regions hold. Later balls are
    /// below the resolution of doubles near their centers; use
    /// [`Self::local_frame`] for those.
    pub fn resolved(&self) -> usize {
        self.resolved
    }

    /// Ω in global coordinates, truncated after [`Self::resolved`] balls.
    pub fn omega(&self) -> &Region {
        &self.omega
    }

    pub fn x(&self) -> &Region {
        &self.x
    }

    pub fn field(&self) -> Result<Field> {
        Field::indicator(self.x.clone(), self.omega.clone())
    }

    /// The gaps `(a_m, b_m)` a restricted radius set must avoid.
    pub fn avoided_gaps(&self) -> Vec<(usize, f64, f64)> {
        self.indices().map(|m| (m, self.a(m), self.b(m))).collect()
    }

    /// `min_(m<m′) |z_m′ − z_m| − (b_m + b_m′)/N₀`, from sums of `b` rather
    /// than differences of rounded centers.
    pub fn disjointness_margin(&self) -> f64 {
        let nf = self.n0 as f64;
        let mut best = f64::INFINITY;
        for i in 0..self.a.len() {
            let mut dist = 0.0;
            for j in i + 1..self.a.len() {
                dist += 2.0 * self.b[j - 1];
                best = best.min(dist - (self.b[i] + self.b[j]) / nf);
            }
        }
        best
    }

    /// Ball `m` with its neighbors, centered at `z_m` and scaled by `1/b_m`.
    pub fn local_frame(&self, m: usize) -> Result<LocalFrame> {
        if !self.indices().contains(&m) {
            return Err(Error::invalid(format!("no ball with index {m}")));
        }
        let i = m - self.first;
        let (bm, nf) = (self.b[i], self.n0 as f64);
        let mut omega = vec![Region::ball(Point::xy(0.0, 0.0), 1.0 / nf)?];
        let mut x = vec![Region::closed_ball(Point::xy(0.0, 0.0), self.a[i] / bm)?];
        if i + 1 < self.a.len() {
            let h = self.a[i + 1] / bm;
            omega.push(Region::rect(Point::xy(0.0, -h), Point::xy(2.0, h))?);
            omega.push(Region::ball(Point::xy(2.0, 0.0), self.b[i + 1] / (nf * bm))?);
            x.push(Region::closed_ball(Point::xy(2.0, 0.0), self.a[i + 1] / bm)?);
        }
        if i > 0 {
            let s = 2.0 * self.b[i - 1] / bm;
            let h = self.a[i] / bm;
            omega.push(Region::rect(Point::xy(-s, -h), Point::xy(0.0, h))?);
            omega.push(Region::ball(Point::xy(-s, 0.0), self.b[i - 1] / (nf * bm))?);
            x.push(Region::closed_ball(Point::xy(-s, 0.0), self.a[i - 1] / bm)?);
        }
        let flat =
            |parts: Vec<Region>| -> Result<Region> { Region::new(parts.iter().flat_map(|r| r.primitives().iter().cloned()).collect()) };
        let (omega, x) = (flat(omega)?, flat(x)?);
        let field = Field::indicator(x.clone(), omega.clone())?;
        Ok(LocalFrame { m, origin: self.z[i], unit: bm, omega, x, field })
    }

    pub fn to_docs(&self) -> DomainDoc {
        DomainDoc {
            n0: self.n0,
            first_index: self.first,
            a: self.a.iter().copied().map(Decimal).collect(),
            b: self.b.iter().copied().map(Decimal).collect(),
            z: self.z.iter().copied().map(Decimal).collect(),
            resolved: self.resolved,
            omega: RegionDoc::from_region(&self.omega, None),
            x: RegionDoc::from_region(&self.x, None),
        }
    }
}

/// JSON form of a constructed domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainDoc {
    pub n0: usize,
    pub first_index: usize,
    pub a: Vec<Decimal>,
    pub b: Vec<Decimal>,
    pub z: Vec<Decimal>,
    pub resolved: usize,
    pub omega: RegionDoc,
    pub x: RegionDoc,
}

/// The radius set avoiding every gap: the closed pieces `[b_(m+1), a_m]`,
/// `[b_first, ∞)` and `(0, a_last]`. For the default sequences this is the
/// exact infinite family.
pub fn avoiding_set(domain: &CounterexampleDomain, default_law: Option<GapLaw>) -> Result<RadiusSet> {
    let last = domain.indices().end - 1;
    let window = (domain.a(last) * 1e-3, 10.0 * domain.b(domain.first));
    if let Some(law) = default_law {
        return RadiusSet::family(Family::GapComplement { law, m_start: domain.first }, window);
    }
    let mut pieces = vec![(0.0, domain.a(last)), (domain.b(domain.first), f64::INFINITY)];
    for m in domain.first..last {
        pieces.push((domain.b(m + 1), domain.a(m)));
    }
    RadiusSet::intervals(pieces, window)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanRow {
    pub m: usize,
    pub a_m: Decimal,
    pub b_m: Decimal,
    pub z_m: Decimal,
    /// Radius of the probe ball around `z_m`.
    pub probe_radius: Decimal,
    pub expected_mean: Real,
    pub mean: Real,
    pub stderr: Real,
    pub within_3_stderr: bool,
    /// `u(z_m)/expected_mean`, a lower bound for any admissible `K`.
    pub implied_k: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotQnsReport {
    pub verdict: ReportVerdict,
    pub rows: Vec<MeanRow>,
    pub all_within: bool,
    /// Non-decreasing in `m` and eventually larger than the first value.
    pub implied_k_increasing: bool,
    /// The largest implied lower bound on `K`.
    pub k_lower_bound: Real,
    pub seed: u64,
    pub worker_count: usize,
}

fn mean_rows(domain: &CounterexampleDomain, implied_k: impl Fn(usize) -> f64, spec: &QuadratureSpec, tag: &str) -> Result<Vec<MeanRow>> {
    let mut rows = Vec::new();
    for m in domain.indices() {
        let frame = domain.local_frame(m)?;
        let rho = 1.0 / (2.0 * domain.n0 as f64);
        let ball = crate::geometry::Ball::new(Point::xy(0.0, 0.0), rho)?;
        let s = QuadratureSpec { seed: derive_seed(spec.seed, tag, m as u64), ..*spec };
        let est = spec.pool()?.install(|| mean_over_ball(&frame.field, &ball, &s)).map_err(|e| match e {
            Error::NotContained { .. } => Error::Construction(format!("probe ball at m = {m} is not inside the domain")),
            e => e,
        })?;
        let k = implied_k(m).max(1.0);
        let expected = 1.0 / k;
        let tol = (3.0 * est.stderr).max(1e-12 * expected);
        rows.push(MeanRow {
            m,
            a_m: Decimal(domain.a(m)),
            b_m: Decimal(domain.b(m)),
            z_m: Decimal(domain.z(m)),
            probe_radius: Decimal(rho * domain.b(m)),
            expected_mean: Real(expected),
            mean: Real(est.mean),
            stderr: Real(est.stderr),
            within_3_stderr: (est.mean - expected).abs() <= tol,
            implied_k: Real(k),
        });
    }
    Ok(rows)
}

fn not_qns_report(rows: Vec<MeanRow>, spec: &QuadratureSpec) -> NotQnsReport {
    let all_within = rows.iter().all(|r| r.within_3_stderr);
    let increasing =
        rows.windows(2).all(|w| w[1].implied_k.0 >= w[0].implied_k.0) && rows.last().is_some_and(|l| l.implied_k.0 > rows[0].implied_k.0);
    let k = rows.iter().map(|r| r.implied_k.0).fold(0.0, f64::max);
    NotQnsReport {
        verdict: if all_within && increasing { ReportVerdict::Pass } else { ReportVerdict::Fail },
        rows,
        all_within,
        implied_k_increasing: increasing,
        k_lower_bound: Real(k),
        seed: spec.seed,
        worker_count: spec.workers,
    }
}

/// Measures the mean of `u` over `B(z_m, b_m/(2N₀))`, expected to be
/// `4N₀²(a_m/b_m)²`; its reciprocal bounds `K` from below.
pub fn certify_not_qns(domain: &CounterexampleDomain, spec: &QuadratureSpec) -> Result<NotQnsReport> {
    let nf = domain.n0 as f64;
    let rows = mean_rows(domain, |m| (domain.b(m) / (2.0 * nf * domain.a(m))).powi(2), spec, "not-qns")?;
    Ok(not_qns_report(rows, spec))
}

/// Probe layout inside each `closed B(z_m, a_m)`: the center and `rings`
/// circles of `angles` points, with radii from the restricted set sampled
/// between `r_min_fraction·a_m` and `r_max_factor·b_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestrictedGrid {
    pub rings: usize,
    pub angles: usize,
    pub radii_per_piece: usize,
    pub r_min_fraction: f64,
    pub r_max_factor: f64,
}

impl Default for RestrictedGrid {
    fn default() -> Self {
        RestrictedGrid { rings: 10, angles: 24, radii_per_piece: 10, r_min_fraction: 1e-3, r_max_factor: 4.0 }
    }
}

fn polar_centers(radius: f64, rings: usize, angles: usize) -> Vec<Vec<Decimal>> {
    let mut out = vec![vec![Decimal(0.0), Decimal(0.0)]];
    for j in 1..=rings {
        // Shrink the outer ring by a hair so rounding keeps it inside the closed ball.
        let r = radius * j as f64 / rings as f64 * (1.0 - 1e-12);
        for i in 0..angles {
            let (s, c) = (2.0 * PI * i as f64 / angles as f64).sin_cos();
            out.push(vec![Decimal(r * c), Decimal(r * s)]);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedWitness {
    pub m: usize,
    /// Center relative to `z_m`, in units of `b_m`.
    pub local_center: [Decimal; 2],
    pub radius: Decimal,
    pub mean: Real,
    pub stderr: Real,
    pub ratio: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedRow {
    pub m: usize,
    pub probes: usize,
    pub excluded: usize,
    pub max_ratio: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedReport {
    pub verdict: ReportVerdict,
    #[serde(rename = "K")]
    pub k: Real,
    pub max_ratio: Real,
    pub witness: Option<RestrictedWitness>,
    pub probes: usize,
    /// Grid pairs whose closed ball leaves Ω.
    pub excluded: usize,
    /// No admissible probe around `z_m` has radius in `[b_m, ∞)`.
    pub dichotomy_holds: bool,
    pub failures: usize,
    pub rows: Vec<RestrictedRow>,
    pub seed: u64,
    pub worker_count: usize,
}

/// Checks `u(x) ≤ K·(mean + 3·stderr)` with `K = 1/lens_constant()` over
/// probes centered in X with radii in `A` and closures in Ω, after checking
/// that `A` avoids every gap `(a_m, b_m)`.
pub fn certify_restricted_qns(
    domain: &CounterexampleDomain,
    a: &RadiusSet,
    grid: &RestrictedGrid,
    spec: &QuadratureSpec,
) -> Result<RestrictedReport> {
    for (m, am, bm) in domain.avoided_gaps() {
        if !a.avoids(am, bm)? {
            return Err(Error::invalid(format!("the radius set meets the gap (a_{m}, b_{m}) = ({am:e}, {bm:e})")));
        }
    }
    let k = 1.0 / lens_constant();
    let mut rows = Vec::new();
    let mut witness: Option<RestrictedWitness> = None;
    let (mut total, mut excluded, mut failures) = (0, 0, 0);
    let mut dichotomy = true;
    for m in domain.indices() {
        let frame = domain.local_frame(m)?;
        let (am, bm) = (domain.a(m), domain.b(m));
        let local_a = a.rescale(1.0 / bm, 1.0)?;
        let probe_grid = ProbeGrid {
            centers_per_axis: 0,
            boundary_centers: 0,
            extra_centers: polar_centers(am / bm, grid.rings, grid.angles),
            radii: grid.radii_per_piece,
            r_min: Some(Decimal(grid.r_min_fraction * am / bm)),
            r_max: Some(Decimal(grid.r_max_factor)),
        };
        let restrict = Restriction { centers_in: Some(frame.x.clone()), radii_in: Some(local_a) };
        let s = QuadratureSpec { seed: derive_seed(spec.seed, "restricted", m as u64), ..*spec };
        let (outcomes, skipped) = ball_probe_outcomes(&frame.field, &probe_grid, &restrict, &s)?;
        let mut row_max: f64 = 0.0;
        for o in &outcomes {
            if o.radius >= 1.0 {
                dichotomy = false;
            }
            if o.value > k * (o.est.mean + 3.0 * o.est.stderr) {
                failures += 1;
            }
            let r = if o.est.mean > 0.0 { o.value / o.est.mean } else { f64::INFINITY };
            row_max = row_max.max(r);
            if witness.as_ref().is_none_or(|w| r > w.ratio.0) {
                witness = Some(RestrictedWitness {
                    m,
                    local_center: [Decimal(o.center.x()), Decimal(o.center.y())],
                    radius: Decimal(o.radius * bm),
                    mean: Real(o.est.mean),
                    stderr: Real(o.est.stderr),
                    ratio: Real(r),
                });
            }
        }
        total += outcomes.len();
        excluded += skipped;
        rows.push(RestrictedRow { m, probes: outcomes.len(), excluded: skipped, max_ratio: Real(row_max) });
    }
    Ok(RestrictedReport {
        verdict: if failures == 0 && dichotomy { ReportVerdict::Pass } else { ReportVerdict::Fail },
        k: Real(k),
        max_ratio: Real(witness.as_ref().map_or(0.0, |w| w.ratio.0)),
        witness,
        probes: total,
        excluded,
        dichotomy_holds: dichotomy,
        failures,
        rows,
        seed: spec.seed,
        worker_count: spec.workers,
    })
}

/// CSV row: `m,a_m,b_m,z_m,ratio,implied_K`.
#[derive(Serialize)]
struct CsvRow {
    m: usize,
    a_m: String,
    b_m: String,
    z_m: String,
    ratio: String,
    #[serde(rename = "implied_K")]
    implied_k: String,
}

pub fn write_csv(rows: &[MeanRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            m: r.m,
            a_m: format_decimal(r.a_m.0),
            b_m: format_decimal(r.b_m.0),
            z_m: format_decimal(r.z_m.0),
            ratio: format_decimal(r.expected_mean.0),
            implied_k: format_decimal(r.implied_k.0),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The scale-function variant: balls `m = N₀+1, …, N₀+count` of radius
/// `m·a_m/N₀`, and `f₁(k) = k/m` on `(a_m, m·a_m)`, `c·k` elsewhere.
#[derive(Clone, Debug)]
pub struct F1Counterexample {
    pub domain: CounterexampleDomain,
    pub f1: ScaleFunction,
    pub law: GapLaw,
    pub c: f64,
    pub d: MarkedSet,
}

pub fn build_f1_counterexample(law: GapLaw, n0: usize, count: usize, c: f64, d: MarkedSet) -> Result<F1Counterexample> {
    if law.ratio_factor != 1.0 {
        return Err(Error::invalid("the scale-function variant needs gaps (a_m, m·a_m)"));
    }
    if n0 == 0 || count < 3 {
        return Err(Error::invalid("need N₀ ≥ 1 and at least 3 balls"));
    }
    if d.dim() != 2 {
        return Err(Error::UnsupportedDimension(d.dim()));
    }
    let f1 = ScaleFunction::gap_scaled(law, 2, c)?;
    let first = n0 + 1;
    // An image h(D) with h(p_D) ∈ X near z_m has k(h)·r_D ≤ a_m + m·a_m/N₀;
    // the two-case bound needs that to force k(h) < m·a_m.
    let r_d = d.inner_radius();
    if !(1.0 / first as f64 + 1.0 / (n0 as f64) < r_d) {
        return Err(Error::Construction(format!(
            "k(h)·r_D ≤ a_m + m·a_m/N₀ does not force k(h) < m·a_m at m = {first} (r_D = {r_d}); increase N₀"
        )));
    }
    let ms: Vec<usize> = (first..first + count).collect();
    let a: Vec<f64> = ms.iter().map(|&m| law.a(m)).collect();
    let b: Vec<f64> = ms.iter().map(|&m| m as f64 * law.a(m)).collect();
    let domain = CounterexampleDomain::chain(a, b, n0, first, 0.0)?;
    Ok(F1Counterexample { domain, f1, law, c, d })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledRow {
    pub m: usize,
    pub probes: usize,
    #[serde(rename = "K_hat")]
    pub k_hat: Real,
    pub rel_stderr: Real,
    pub verdict: ReportVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct F1Report {
    pub n0: usize,
    pub c: Real,
    pub not_qns: NotQnsReport,
    /// Constant for `f₁(k(h))² ≤ K·∫_{h(D)} u`.
    #[serde(rename = "K")]
    pub k: Real,
    pub scaled_inequality: ReportVerdict,
    pub scaled_rows: Vec<ScaledRow>,
    pub admissibility: AdmissibilityReport,
}

impl F1Counterexample {
    /// `max(1, c²/(π·min(r_D, 1)²·lens_constant()))`.
    pub fn scaled_constant(&self) -> f64 {
        let r = self.d.inner_radius().min(1.0);
        (self.c * self.c / (PI * r * r * lens_constant())).max(1.0)
    }

    /// Ball means at `B(z_m, m·a_m/(2N₀))` (expected `min(1, 4N₀²/m²)`),
    /// the sampled scaled inequality in every local frame, and the
    /// admissibility report for `f₁`.
    pub fn certify(&self, sims: &SimilarityGrid, rings: usize, angles: usize, spec: &QuadratureSpec) -> Result<F1Report> {
        let nf = self.domain.n0 as f64;
        let rows = mean_rows(&self.domain, |m| (m * m) as f64 / (4.0 * nf * nf), spec, "f1-not-qns")?;
        let not_qns = not_qns_report(rows, spec);
        let k = self.scaled_constant();
        let mut scaled_rows = Vec::new();
        for m in self.domain.indices() {
            let frame = self.domain.local_frame(m)?;
            let unit = frame.unit;
            let f1 = self.f1.clone();
            let local = ScaleFunction::new("f1-local", move |kappa| f1.eval(unit * kappa) / unit);
            let grid = SimilarityGrid {
                extra_centers: polar_centers(self.domain.a(m) / unit, rings, angles),
                centers_per_axis: 0,
                ..sims.clone()
            };
            let grid =
                SimilarityGrid { k_min: grid.k_min.or(Some(Decimal(1e-3 / m as f64))), k_max: grid.k_max.or(Some(Decimal(1.0))), ..grid };
            let s = QuadratureSpec { seed: derive_seed(spec.seed, "f1-scaled", m as u64), ..*spec };
            let r = generalized_test(&frame.field, &self.d, Some(&local), &grid, Some(&frame.x), &s)?;
            let rel = r.witness.as_ref().map_or(0.0, |w| w.rel_stderr());
            let verdict = if r.verdict == ReportVerdict::VacuouslyTrue || r.k_hat.0 <= k * (1.0 + 3.0 * rel) {
                ReportVerdict::Pass
            } else {
                ReportVerdict::Fail
            };
            scaled_rows.push(ScaledRow { m, probes: r.probes, k_hat: r.k_hat, rel_stderr: Real(rel), verdict });
        }
        let scaled = if scaled_rows.iter().all(|r| r.verdict == ReportVerdict::Pass) { ReportVerdict::Pass } else { ReportVerdict::Fail };
        let admissibility = f_admissibility(&self.f1, (1e-300, 1.0), &[], f64::INFINITY)?;
        Ok(F1Report { n0: self.domain.n0, c: Real(self.c), not_qns, k: Real(k), scaled_inequality: scaled, scaled_rows, admissibility })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qns_engine::Admissibility;
    use crate::quadrature::Method;
    use crate::radius_sets::Verdict;

    fn analytic() -> QuadratureSpec {
        QuadratureSpec { method: Method::Analytic, ..QuadratureSpec::default() }
    }

    #[test]
    fn default_sequences_validate() {
        let s = default_sequences(3, 5).unwrap();
        assert!((s.a(1) - 1.0 / 192.0).abs() < 1e-18);
        assert!((s.b(2) - 16f64.powi(-4)).abs() < 1e-20 && s.b(2) < s.a(1));
        for m in 1..=5 {
            assert!((s.b(m) / s.a(m) - 12.0 * m as f64).abs() < 1e-9);
        }
        assert!(default_sequences(2, 5).is_err());
        let b: Vec<f64> = (1..=5i32).map(|m| 16f64.powi(-(m * m))).collect();
        let a = b.iter().map(|x| x / 4.0).collect();
        match SequencePair::new(a, b, 3) {
            Err(Error::SequenceConstraint { index: 1, constraint }) => assert_eq!(constraint, "2a_m < b_m/N₀"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_structure() {
        let d = CounterexampleDomain::build(&default_sequences(3, 5).unwrap()).unwrap();
        assert!((d.z(2) - 0.125).abs() < 1e-15);
        assert!(d.disjointness_margin() > 0.0);
        assert_eq!(d.resolved(), 3);
        for m in 1..=3 {
            assert!(d.omega().contains(&Point::xy(d.z(m), 0.0)));
        }
        for m in 1..=5 {
            let f = d.local_frame(m).unwrap();
            let r = d.a(m) / d.b(m);
            assert!(f.omega.contains(&Point::xy(0.0, 0.0)));
            assert!(f.x.contains(&Point::xy(r, 0.0)));
            assert!(!f.x.contains(&Point::xy(r * (1.0 + 1e-9), 0.0)));
        }
        assert!(d.x().contains(&Point::xy(d.a(1), 0.0)) && !d.x().contains(&Point::xy(d.a(1) + 1e-9, 0.0)));
    }

    #[test]
    fn not_qns_means_match_formula() {
        let d = CounterexampleDomain::build(&default_sequences(3, 5).unwrap()).unwrap();
        let r = certify_not_qns(&d, &analytic()).unwrap();
        let ks: Vec<f64> = r.rows.iter().map(|r| r.implied_k.0).collect();
        for (k, want) in ks.iter().zip([4.0, 16.0, 36.0, 64.0, 100.0]) {
            assert_eq!(*k, want, "{ks:?}");
        }
        assert!((r.rows[2].mean.0 - 1.0 / 36.0).abs() < 1e-12);
        assert_eq!(r.verdict, ReportVerdict::Pass);
        let sampled = certify_not_qns(&d, &QuadratureSpec { target_rel_error: 3e-3, ..QuadratureSpec::default() }).unwrap();
        assert!(sampled.all_within, "{:?}", sampled.rows);
    }

    #[test]
    fn restricted_inequality_holds() {
        let seq = default_sequences(3, 5).unwrap();
        let d = CounterexampleDomain::build(&seq).unwrap();
        let a = avoiding_set(&d, Some(GapLaw::counterexample(3))).unwrap();
        assert_eq!(a.classify().unwrap().favorable_all_open, Verdict::No);
        let grid = RestrictedGrid { rings: 4, angles: 8, radii_per_piece: 6, ..RestrictedGrid::default() };
        let r = certify_restricted_qns(&d, &a, &grid, &analytic()).unwrap();
        assert_eq!(r.verdict, ReportVerdict::Pass, "{r:?}");
        assert!(r.dichotomy_holds && r.excluded > 0);
        assert!(r.max_ratio.0 > 2.55 && r.max_ratio.0 <= 1.0 / lens_constant() + 1e-9);
        let generic = avoiding_set(&d, None).unwrap();
        assert_eq!(certify_restricted_qns(&d, &generic, &grid, &analytic()).unwrap().verdict, ReportVerdict::Pass);
        let bad = RadiusSet::everything((1e-40, 10.0)).unwrap();
        assert!(certify_restricted_qns(&d, &bad, &grid, &analytic()).is_err());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let d = CounterexampleDomain::build(&default_sequences(3, 3).unwrap()).unwrap();
        let r = certify_not_qns(&d, &analytic()).unwrap();
        let mut buf = Vec::new();
        write_csv(&r.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,a_m,b_m,z_m,ratio,implied_K\n1,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn scale_function_variant() {
        let law = GapLaw::unit_ratio(16.0, 12.0, 1.0);
        let cx = build_f1_counterexample(law, 3, 6, 1.0, MarkedSet::unit_ball(2).unwrap()).unwrap();
        for m in cx.domain.indices() {
            let k = (law.ln_a(m) + 0.3 * law.ln_ratio(m)).exp();
            assert!(cx.f1.eval(k) <= law.a(m) * (1.0 + 1e-12));
        }
        let sims = SimilarityGrid { scales: 10, rotations: 1, reflections: false, ..SimilarityGrid::default() };
        let r = cx.certify(&sims, 3, 6, &analytic()).unwrap();
        assert_eq!(r.scaled_inequality, ReportVerdict::Pass, "{:?}", r.scaled_rows);
        assert!(r.scaled_rows.iter().all(|row| row.probes > 100 && row.k_hat.0 > 0.5));
        assert_eq!(r.admissibility.verdict, Admissibility::NotAdmissible);
        assert!(r.not_qns.all_within && r.not_qns.implied_k_increasing);
        assert!(build_f1_counterexample(law, 3, 4, 1.0, MarkedSet::unit_square().unwrap()).is_err());
    }
}
