//! Ball and similarity-image averages of fields.
//!
//! Sampling work is cut into fixed chunks, each with its own derived seed,
//! and the chunk results are reduced in index order. Estimates therefore
//! depend on the seed but not on the number of worker threads.

use crate::error::{Error, Result};
use crate::fields::{Field, FieldKind};
use crate::geometry::{Ball, Point, Similarity};
use crate::regions::{MarkedSet, Primitive, Region};
use crate::sampling::{stream, unit_cube_to_ball};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Midpoint rule in area-preserving polar coordinates (balls) or on the
    /// bounding box (images). Not allowed for fields with jumps.
    Grid,
    MonteCarlo,
    Stratified,
    /// Closed-form means where available (constants, harmonic fields on
    /// balls, indicators of disjoint unions against one primitive); other
    /// cases fall back to stratified sampling.
    Analytic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::MonteCarlo => "monte_carlo",
            Method::Stratified => "stratified",
            Method::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub method: Method,
    pub target_rel_error: f64,
    pub max_samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { method: Method::Stratified, target_rel_error: 1e-3, max_samples: 10_000_000, seed: 0, workers: 1 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_rel_error > 0.0 && self.target_rel_error <= 0.1) {
            return Err(Error::invalid(format!("target relative error must lie in (0, 0.1], got {}", self.target_rel_error)));
        }
        if self.max_samples < 1000 {
            return Err(Error::invalid(format!("max_samples must be at least 1000, got {}", self.max_samples)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be positive"));
        }
        Ok(())
    }

    /// A thread pool with `workers` threads.
    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new().num_threads(self.workers).build().map_err(|e| Error::Internal(format!("thread pool: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    /// The method actually used, after any fallback.
    pub method: Method,
}

impl Estimate {
    fn exact(mean: f64, method: Method) -> Self {
        Estimate { mean, stderr: 0.0, samples: 0, method }
    }
}

/// Mean of `u` over the open ball `B`. Requires `closure(B) ⊆ Ω`.
pub fn mean_over_ball(u: &Field, ball: &Ball, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    u.domain().contains_closed_ball(ball)?;
    if let Some(c) = u.constant_value() {
        return Ok(Estimate::exact(c, spec.method));
    }
    let method = match spec.method {
        Method::Analytic => match analytic_ball_mean(u.kind(), ball) {
            Some(m) => return Ok(Estimate::exact(m, Method::Analytic)),
            None => Method::Stratified,
        },
        Method::Grid if u.kind().has_jumps() => {
            return Err(Error::invalid("the grid method is not allowed for fields with jumps; use Monte Carlo"))
        }
        m => m,
    };
    let n = ball.dim();
    let (c, r) = (ball.center, ball.radius);
    let f = |q: [f64; 3]| -> Result<(f64, f64)> { Ok((u.value_unchecked(&(c + unit_cube_to_ball(n, q) * r)), 1.0)) };
    sample(n, method, spec, "ball", &f)
}

/// Mean of `u` over `h(D)`. Samples are drawn in `D` by rejection from its
/// bounding box and mapped through `h`; a mapped sample outside Ω rejects
/// the whole computation.
pub fn mean_over_image(u: &Field, d: &MarkedSet, h: &Similarity, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    if h.dim() != d.dim() || u.dim() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), got: h.dim().max(u.dim()) });
    }
    let exact_path = u.constant_value().is_some() || spec.method == Method::Analytic;
    let image = if exact_path { Some(d.region().image(h)?) } else { None };
    if let Some(img) = &image {
        u.domain().contains_region(img)?;
    }
    if let Some(c) = u.constant_value() {
        return Ok(Estimate::exact(c, spec.method));
    }
    let method = match spec.method {
        Method::Analytic => match analytic_region_mean(u.kind(), image.as_ref().expect("image computed")) {
            Some(m) => return Ok(Estimate::exact(m, Method::Analytic)),
            None => Method::Stratified,
        },
        Method::Grid if u.kind().has_jumps() => {
            return Err(Error::invalid("the grid method is not allowed for fields with jumps; use Monte Carlo"))
        }
        m => m,
    };
    let n = d.dim();
    let bb = d.region().bounds();
    let anchor = h.map(d.marked_point());
    let f = |q: [f64; 3]| -> Result<(f64, f64)> {
        let mut y = [0.0; 3];
        for k in 0..n {
            y[k] = bb.min.coords()[k] + (bb.max.coords()[k] - bb.min.coords()[k]) * q[k];
        }
        let y = Point::new(&y[..n])?;
        if !d.region().contains(&y) {
            return Ok((0.0, 0.0));
        }
        let x = h.map(y);
        match u.evaluate(&x) {
            Ok(v) => Ok((v, 1.0)),
            Err(Error::OutsideDomain { .. }) => {
                let dir = x - anchor;
                let len = dir.norm();
                let dir = if len > 0.0 { dir * (1.0 / len) } else { dir };
                Err(Error::NotContained { direction: dir.coords().to_vec() })
            }
            Err(e) => Err(e),
        }
    };
    sample(n, method, spec, "image", &f)
}

/// Closed-form mean over a ball, when one is known.
pub fn analytic_ball_mean(kind: &FieldKind, ball: &Ball) -> Option<f64> {
    match kind {
        FieldKind::Constant(c) => Some(*c),
        FieldKind::Indicator(x) => x.intersection_measure_exact(&Primitive::Ball(*ball)).map(|m| (m / ball.volume()).clamp(0.0, 1.0)),
        FieldKind::Harmonic { .. } => Some(kind.value(&ball.center)),
        FieldKind::Sum(terms) => terms.iter().map(|(w, k)| analytic_ball_mean(k, ball).map(|m| w * m)).sum(),
        FieldKind::Pullback(inner, h) => {
            analytic_ball_mean(inner, &Ball { center: h.map(ball.center), radius: ball.radius * h.scale(), ..*ball })
        }
        FieldKind::RadialBump { .. } => None,
    }
}

/// Closed-form mean over a region made of a single primitive.
pub fn analytic_region_mean(kind: &FieldKind, region: &Region) -> Option<f64> {
    let [prim] = region.primitives() else {
        return kind.constant_value();
    };
    if let Primitive::Ball(b) = prim {
        return analytic_ball_mean(kind, b);
    }
    match kind {
        FieldKind::Constant(c) => Some(*c),
        FieldKind::Indicator(x) => x.intersection_measure_exact(prim).map(|m| (m / prim.measure()).clamp(0.0, 1.0)),
        FieldKind::Sum(terms) => terms.iter().map(|(w, k)| analytic_region_mean(k, region).map(|m| w * m)).sum(),
        _ => None,
    }
}

type Integrand<'a> = dyn Fn([f64; 3]) -> Result<(f64, f64)> + Sync + 'a;

/// Moments of `(f, w)` pairs. For paired samples the `d*` fields hold sums of
/// products of within-pair differences.
#[derive(Clone, Copy, Default)]
struct Moments {
    count: u64,
    f: f64,
    w: f64,
    ff: f64,
    ww: f64,
    fw: f64,
}

impl Moments {
    fn add(self, o: Moments) -> Moments {
        Moments {
            count: self.count + o.count,
            f: self.f + o.f,
            w: self.w + o.w,
            ff: self.ff + o.ff,
            ww: self.ww + o.ww,
            fw: self.fw + o.fw,
        }
    }
}

fn reduce(parts: Vec<Result<Moments>>) -> Result<Moments> {
    parts.into_iter().try_fold(Moments::default(), |acc, m| Ok(acc.add(m?)))
}

fn sample(dim: usize, method: Method, spec: &QuadratureSpec, tag: &str, f: &Integrand) -> Result<Estimate> {
    let mut total = 0u64;
    let est = match method {
        Method::MonteCarlo => monte_carlo(spec, tag, f, &mut total)?,
        Method::Grid => grid(dim, spec, f, &mut total)?,
        _ => stratified(dim, spec, tag, f, &mut total)?,
    };
    Ok(Estimate { samples: total, method, ..est })
}

fn ratio_estimate(mean_num: f64, mean_den: f64, var_num: f64, method: Method) -> Result<Estimate> {
    if mean_den <= 0.0 {
        return Err(Error::Construction("no sample landed in the integration set".into()));
    }
    Ok(Estimate { mean: mean_num / mean_den, stderr: var_num.max(0.0).sqrt() / mean_den, samples: 0, method })
}

fn done(e: &Estimate, spec: &QuadratureSpec) -> bool {
    e.stderr <= spec.target_rel_error * e.mean.abs()
}

const MC_CHUNK: u64 = 4096;

fn monte_carlo(spec: &QuadratureSpec, tag: &str, f: &Integrand, total: &mut u64) -> Result<Estimate> {
    let tag = format!("{tag}-mc");
    let mut acc = Moments::default();
    let mut chunks = 0u64;
    let mut batch = 4u64;
    loop {
        let parts: Vec<Result<Moments>> = (chunks..chunks + batch)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(spec.seed, &tag, c);
                let mut m = Moments { count: MC_CHUNK, ..Moments::default() };
                for _ in 0..MC_CHUNK {
                    let (v, w) = f([rng.gen(), rng.gen(), rng.gen()])?;
                    m.f += v;
                    m.w += w;
                    m.ff += v * v;
                    m.ww += w * w;
                    m.fw += v * w;
                }
                Ok(m)
            })
            .collect();
        acc = acc.add(reduce(parts)?);
        chunks += batch;
        *total = acc.count;
        let n = acc.count as f64;
        let r = if acc.w > 0.0 { acc.f / acc.w } else { 0.0 };
        // Residuals x = f − r·w have zero sum by construction of r.
        let sxx = acc.ff - 2.0 * r * acc.fw + r * r * acc.ww;
        let est = ratio_estimate(acc.f / n, acc.w / n, sxx / (n * (n - 1.0)), Method::MonteCarlo)?;
        if done(&est, spec) || acc.count + batch * 2 * MC_CHUNK > spec.max_samples {
            return Ok(est);
        }
        batch *= 2;
    }
}

fn start_resolution(dim: usize, spec: &QuadratureSpec, per_stratum: u64) -> usize {
    let first = if dim == 2 { 32 } else { 10 };
    let cap = ((spec.max_samples / per_stratum) as f64).powf(1.0 / dim as f64).floor() as usize;
    first.min(cap.max(1))
}

fn strata_round(dim: usize, g: usize, seed: u64, tag: &str, f: &Integrand) -> Result<Moments> {
    let parts: Vec<Result<Moments>> = (0..g)
        .into_par_iter()
        .map(|i0| {
            let mut rng = stream(seed, tag, i0 as u64);
            let mut m = Moments::default();
            let inner = g.pow(dim as u32 - 1);
            let gf = g as f64;
            for rest in 0..inner {
                let idx = [i0, rest % g, rest / g];
                let mut pts = [(0.0, 0.0); 2];
                for p in &mut pts {
                    let mut q = [0.0; 3];
                    for k in 0..dim {
                        q[k] = (idx[k] as f64 + rng.gen::<f64>()) / gf;
                    }
                    *p = f(q)?;
                }
                let (df, dw) = (pts[0].0 - pts[1].0, pts[0].1 - pts[1].1);
                m.count += 2;
                m.f += pts[0].0 + pts[1].0;
                m.w += pts[0].1 + pts[1].1;
                m.ff += df * df;
                m.ww += dw * dw;
                m.fw += df * dw;
            }
            Ok(m)
        })
        .collect();
    reduce(parts)
}

fn stratified(dim: usize, spec: &QuadratureSpec, tag: &str, f: &Integrand, total: &mut u64) -> Result<Estimate> {
    let mut g = start_resolution(dim, spec, 2);
    loop {
        let m = strata_round(dim, g, spec.seed, &format!("{tag}-strat-{g}"), f)?;
        *total += m.count;
        let h = g.pow(dim as u32) as f64;
        let r = if m.w > 0.0 { m.f / m.w } else { 0.0 };
        let sxx = m.ff - 2.0 * r * m.fw + r * r * m.ww;
        let est = ratio_estimate(m.f / (2.0 * h), m.w / (2.0 * h), sxx / (4.0 * h * h), Method::Stratified)?;
        let next = 2 * (2 * g as u64).pow(dim as u32);
        if done(&est, spec) || next > spec.max_samples {
            return Ok(est);
        }
        g *= 2;
    }
}

fn grid_round(dim: usize, g: usize, f: &Integrand) -> Result<(f64, f64)> {
    let parts: Vec<Result<(f64, f64)>> = (0..g)
        .into_par_iter()
        .map(|i0| {
            let (mut sf, mut sw) = (0.0, 0.0);
            let gf = g as f64;
            for rest in 0..g.pow(dim as u32 - 1) {
                let idx = [i0, rest % g, rest / g];
                let mut q = [0.0; 3];
                for k in 0..dim {
                    q[k] = (idx[k] as f64 + 0.5) / gf;
                }
                let (v, w) = f(q)?;
                sf += v;
                sw += w;
            }
            Ok((sf, sw))
        })
        .collect();
    parts.into_iter().try_fold((0.0, 0.0), |acc, p| {
        let p = p?;
        Ok((acc.0 + p.0, acc.1 + p.1))
    })
}

/// Midpoint rule; the error estimate is the change from the half-resolution grid.
fn grid(dim: usize, spec: &QuadratureSpec, f: &Integrand, total: &mut u64) -> Result<Estimate> {
    let mut g = start_resolution(dim, spec, 1).max(2);
    let mut prev: Option<f64> = None;
    loop {
        let (sf, sw) = grid_round(dim, g, f)?;
        *total += g.pow(dim as u32) as u64;
        if sw <= 0.0 {
            return Err(Error::Construction("no grid point landed in the integration set".into()));
        }
        let mean = sf / sw;
        let stderr = prev.map_or(f64::INFINITY, |p| (mean - p).abs());
        let est = Estimate { mean, stderr, samples: 0, method: Method::Grid };
        let next = (2 * g as u64).pow(dim as u32);
        if (prev.is_some() && done(&est, spec)) || next > spec.max_samples {
            return Ok(Estimate { stderr: if stderr.is_finite() { stderr } else { 0.0 }, ..est });
        }
        prev = Some(mean);
        g *= 2;
    }
}

/// Fraction of `B(0, 1)` covered by `B((−1, 0), 1)` from exactly `samples`
/// uniform points, drawn in fixed chunks so the result depends only on
/// `seed`. Returns the estimate and its standard error.
pub fn lens_fraction_sampled(samples: u64, seed: u64, workers: usize) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let spec = QuadratureSpec { workers, ..QuadratureSpec::default() };
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = spec.pool()?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, "lens", c);
                let n = MC_CHUNK.min(samples - c * MC_CHUNK);
                (0..n)
                    .filter(|_| {
                        let p = unit_cube_to_ball(2, [rng.gen(), rng.gen(), 0.0]);
                        (p.x() + 1.0).powi(2) + p.y() * p.y() < 1.0
                    })
                    .count() as u64
            })
            .sum()
    });
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / (n - 1.0)).sqrt()))
}
