//! Finite unions of balls, axis-aligned boxes and polygons.

use crate::error::{Error, Result};
use crate::geometry::{
    check_dim, clip_convex, disk_polygon_area, lens_area_unchecked, sphere_intersection_volume, AxisRect, Ball, Point, Polygon, Similarity,
};
use crate::num::{decimals, floats, Decimal};
use crate::sampling::{directions, stream};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// One member of a [`Region`].
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Ball(Ball),
    Rect(AxisRect),
    Polygon(Polygon),
}

impl Primitive {
    pub fn dim(&self) -> usize {
        match self {
            Primitive::Ball(b) => b.dim(),
            Primitive::Rect(r) => r.dim(),
            Primitive::Polygon(_) => 2,
        }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Primitive::Ball(b) => b.contains(p),
            Primitive::Rect(r) => r.contains(p),
            Primitive::Polygon(g) => g.contains(p),
        }
    }

    /// Membership in the open interior, regardless of the `closed` flag.
    fn interior_contains(&self, p: &Point) -> bool {
        match self {
            Primitive::Ball(b) => Ball { closed: false, ..*b }.contains(p),
            Primitive::Rect(r) => AxisRect { closed: false, ..*r }.contains(p),
            Primitive::Polygon(g) => g.contains(p) && g.boundary_distance(p) > 0.0,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Primitive::Ball(b) => b.volume(),
            Primitive::Rect(r) => r.volume(),
            Primitive::Polygon(g) => g.area(),
        }
    }

    pub fn bounds(&self) -> (Point, Point) {
        match self {
            Primitive::Ball(b) => {
                let n = b.dim();
                let r = Point::new(&vec![b.radius; n]).expect("valid dimension");
                (b.center - r, b.center + r)
            }
            Primitive::Rect(r) => (r.min, r.max),
            Primitive::Polygon(g) => g.bounds(),
        }
    }

    /// Whether the closed ball lies inside this primitive (exact test).
    pub fn contains_closed_ball(&self, ball: &Ball) -> bool {
        let (c, r) = (ball.center, ball.radius);
        match self {
            Primitive::Ball(b) => {
                let d = c.distance(&b.center);
                if b.closed {
                    d + r <= b.radius
                } else {
                    d + r < b.radius
                }
            }
            Primitive::Rect(q) => (0..q.dim()).all(|i| {
                let (x, lo, hi) = (c.coords()[i], q.min.coords()[i], q.max.coords()[i]);
                if q.closed {
                    lo <= x - r && x + r <= hi
                } else {
                    lo < x - r && x + r < hi
                }
            }),
            Primitive::Polygon(g) => {
                g.contains(&c) && {
                    let d = g.boundary_distance(&c);
                    if g.closed {
                        d >= r
                    } else {
                        d > r
                    }
                }
            }
        }
    }

    /// The image under a similarity. Boxes become polygons in the plane; in
    /// ℝ³ only orthogonal parts that permute axes keep a box a box.
    pub fn image(&self, h: &Similarity) -> Result<Primitive> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: h.dim() });
        }
        Ok(match self {
            Primitive::Ball(b) => Primitive::Ball(Ball { center: h.map(b.center), radius: b.radius * h.scale(), ..*b }),
            Primitive::Rect(r) if r.dim() == 2 => {
                let mut g = Polygon::new(r.corners2().iter().map(|p| h.map(*p)).collect())?;
                g.closed = r.closed;
                Primitive::Polygon(g)
            }
            Primitive::Rect(r) => {
                let t = h.orthogonal();
                let permutes = t.iter().all(|row| row.iter().filter(|v| v.abs() > 1e-12).count() == 1);
                if !permutes {
                    return Err(Error::Unsupported("rotated boxes in 3-D".into()));
                }
                let (a, b) = (h.map(r.min), h.map(r.max));
                let lo: Vec<f64> = (0..3).map(|i| a.coords()[i].min(b.coords()[i])).collect();
                let hi: Vec<f64> = (0..3).map(|i| a.coords()[i].max(b.coords()[i])).collect();
                let mut q = AxisRect::new(Point::new(&lo)?, Point::new(&hi)?)?;
                q.closed = r.closed;
                Primitive::Rect(q)
            }
            Primitive::Polygon(g) => {
                let mut img = Polygon::new(g.vertices().iter().map(|p| h.map(*p)).collect())?;
                img.closed = g.closed;
                Primitive::Polygon(img)
            }
        })
    }

    pub fn as_polygon(&self) -> Option<Polygon> {
        match self {
            Primitive::Rect(r) if r.dim() == 2 => Polygon::new(r.corners2().to_vec()).ok(),
            Primitive::Polygon(g) => Some(g.clone()),
            _ => None,
        }
    }

    /// Point on the boundary at parameter `t ∈ [0, 1)` (planar primitives only).
    fn boundary_point(&self, t: f64) -> Point {
        match self {
            Primitive::Ball(b) => {
                let (s, c) = (2.0 * PI * t).sin_cos();
                b.center + Point::xy(c, s) * b.radius
            }
            other => {
                let g = other.as_polygon().expect("planar primitive");
                let total = g.perimeter();
                let mut target = t.rem_euclid(1.0) * total;
                for (a, b) in g.edges() {
                    let len = a.distance(&b);
                    if target <= len {
                        return a + (b - a) * (target / len);
                    }
                    target -= len;
                }
                g.vertices()[0]
            }
        }
    }
}

fn boxes_overlap(a: &(Point, Point), b: &(Point, Point)) -> bool {
    (0..a.0.dim()).all(|i| a.0.coords()[i] < b.1.coords()[i] && b.0.coords()[i] < a.1.coords()[i])
}

/// Exact measure of `p ∩ q` when a closed form is available.
pub fn pair_intersection(p: &Primitive, q: &Primitive) -> Option<f64> {
    if !boxes_overlap(&p.bounds(), &q.bounds()) {
        return Some(0.0);
    }
    use Primitive::*;
    match (p, q) {
        (Ball(a), Ball(b)) => {
            let d = a.center.distance(&b.center);
            Some(if a.dim() == 2 { lens_area_unchecked(a.radius, b.radius, d) } else { sphere_intersection_volume(a.radius, b.radius, d) })
        }
        (Rect(a), Rect(b)) => Some(a.intersect(b).map_or(0.0, |r| r.volume())),
        (Ball(b), other) | (other, Ball(b)) => {
            if b.dim() == 2 {
                other.as_polygon().map(|g| disk_polygon_area(&b.center, b.radius, &g))
            } else if other.contains_closed_ball(b) {
                Some(b.volume())
            } else {
                None
            }
        }
        (a, b) => {
            let (ga, gb) = (a.as_polygon()?, b.as_polygon()?);
            if gb.is_convex() {
                Some(clip_convex(&ga, &gb).map_or(0.0, |g| g.area()))
            } else if ga.is_convex() {
                Some(clip_convex(&gb, &ga).map_or(0.0, |g| g.area()))
            } else {
                None
            }
        }
    }
}

/// Result of a measure computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Measure {
    pub value: f64,
    pub stderr: f64,
    pub exact: bool,
    pub samples: u64,
}

impl Measure {
    fn exact(value: f64) -> Self {
        Measure { value, stderr: 0.0, exact: true, samples: 0 }
    }
}

/// Sampling knobs for measure estimation and boundary scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub samples: u64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { samples: 1 << 20, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Overlap {
    i: usize,
    j: usize,
    measure: Option<f64>,
}

/// A nonempty finite union of primitives sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    dim: usize,
    primitives: Vec<Primitive>,
    overlaps: Vec<Overlap>,
}

impl Region {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        let first = primitives.first().ok_or_else(|| Error::invalid("region needs at least one primitive"))?;
        let dim = check_dim(first.dim())?;
        if let Some(p) = primitives.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        let mut overlaps = Vec::new();
        for i in 0..primitives.len() {
            for j in i + 1..primitives.len() {
                let m = pair_intersection(&primitives[i], &primitives[j]);
                if m != Some(0.0) {
                    overlaps.push(Overlap { i, j, measure: m });
                }
            }
        }
        Ok(Region { dim, primitives, overlaps })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Region::new(vec![Primitive::Ball(Ball::new(center, radius)?)])
    }

    pub fn closed_ball(center: Point, radius: f64) -> Result<Self> {
        Region::new(vec![Primitive::Ball(Ball::closed(center, radius)?)])
    }

    pub fn rect(min: Point, max: Point) -> Result<Self> {
        Region::new(vec![Primitive::Rect(AxisRect::new(min, max)?)])
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Region::new(vec![Primitive::Polygon(Polygon::new(vertices)?)])
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        Region::new(self.primitives.iter().chain(&other.primitives).cloned().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim && self.primitives.iter().any(|q| q.contains(p))
    }

    pub fn bounds(&self) -> AxisRect {
        let (mut lo, mut hi) = self.primitives[0].bounds();
        for q in &self.primitives[1..] {
            let (a, b) = q.bounds();
            let l: Vec<f64> = lo.coords().iter().zip(a.coords()).map(|(x, y)| x.min(*y)).collect();
            let h: Vec<f64> = hi.coords().iter().zip(b.coords()).map(|(x, y)| x.max(*y)).collect();
            lo = Point::new(&l).expect("finite bounds");
            hi = Point::new(&h).expect("finite bounds");
        }
        AxisRect { min: lo, max: hi, closed: true }
    }

    /// True when no two primitives overlap in positive measure.
    pub fn is_disjoint_union(&self) -> bool {
        self.overlaps.is_empty()
    }

    /// Inclusion–exclusion up to pairs; `None` when a pair has no closed form
    /// or three primitives overlap pairwise.
    pub fn exact_measure(&self) -> Option<f64> {
        let mut pairs = 0.0;
        for o in &self.overlaps {
            pairs += o.measure?;
            let linked = |a: usize, b: usize| self.overlaps.iter().any(|q| (q.i == a.min(b) && q.j == a.max(b)) && q.measure != Some(0.0));
            if (0..self.primitives.len()).any(|k| k != o.i && k != o.j && linked(o.i, k) && linked(o.j, k)) {
                return None;
            }
        }
        Some(self.primitives.iter().map(Primitive::measure).sum::<f64>() - pairs)
    }

    pub fn measure(&self) -> Measure {
        self.measure_with(&SamplingConfig::default())
    }

    /// Lebesgue measure: closed form when available, stratified sampling of
    /// the bounding box otherwise.
    pub fn measure_with(&self, cfg: &SamplingConfig) -> Measure {
        match self.exact_measure() {
            Some(v) => Measure::exact(v),
            None => self.sampled_measure(cfg),
        }
    }

    /// Stratified estimate of the measure, ignoring closed forms.
    pub fn sampled_measure(&self, cfg: &SamplingConfig) -> Measure {
        let bb = self.bounds();
        let n = self.dim;
        let per_axis = (((cfg.samples.max(2) / 2) as f64).powf(1.0 / n as f64).ceil() as usize).max(1);
        let strata = per_axis.pow(n as u32);
        let extent: Vec<f64> = (0..n).map(|i| bb.max.coords()[i] - bb.min.coords()[i]).collect();
        let partial: Vec<(f64, f64)> = (0..per_axis)
            .into_par_iter()
            .map(|i0| {
                let mut rng = stream(cfg.seed, "region-measure", i0 as u64);
                let (mut sum, mut sq) = (0.0, 0.0);
                let inner = per_axis.pow(n as u32 - 1);
                for rest in 0..inner {
                    let mut idx = [i0, rest % per_axis, rest / per_axis];
                    if n == 2 {
                        idx[2] = 0;
                    }
                    let mut pair = [0.0; 2];
                    for v in &mut pair {
                        let mut c = [0.0; 3];
                        for k in 0..n {
                            let u: f64 = rng.gen();
                            c[k] = bb.min.coords()[k] + extent[k] * (idx[k] as f64 + u) / per_axis as f64;
                        }
                        let p = Point::new(&c[..n]).expect("finite sample");
                        *v = f64::from(u8::from(self.contains(&p)));
                    }
                    sum += pair[0] + pair[1];
                    sq += (pair[0] - pair[1]).powi(2);
                }
                (sum, sq)
            })
            .collect();
        let (sum, sq) = partial.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        let h = strata as f64;
        let vol = bb.volume();
        Measure { value: vol * sum / (2.0 * h), stderr: vol * (sq / (4.0 * h * h)).sqrt(), exact: false, samples: 2 * strata as u64 }
    }

    /// Exact measure of `self ∩ q`, if the primitives are pairwise disjoint
    /// and each pairwise intersection with `q` has a closed form.
    pub fn intersection_measure_exact(&self, q: &Primitive) -> Option<f64> {
        if !self.is_disjoint_union() {
            return None;
        }
        self.primitives.iter().map(|p| pair_intersection(p, q)).sum()
    }

    pub fn image(&self, h: &Similarity) -> Result<Region> {
        Region::new(self.primitives.iter().map(|p| p.image(h)).collect::<Result<_>>()?)
    }

    /// Checks that the closed ball lies inside the region. Exact when a single
    /// primitive contains it; otherwise the bounding sphere and three inner
    /// shells are scanned.
    pub fn contains_closed_ball(&self, ball: &Ball) -> Result<()> {
        if ball.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: ball.dim() });
        }
        if !self.contains(&ball.center) {
            return Err(Error::NotContained { direction: vec![0.0; self.dim] });
        }
        if self.primitives.iter().any(|p| p.contains_closed_ball(ball)) {
            return Ok(());
        }
        let dirs = directions(self.dim, if self.dim == 2 { 720 } else { 2000 });
        for frac in [1.0, 0.75, 0.5, 0.25] {
            let outside: Vec<&Point> = dirs.iter().filter(|d| !self.contains(&(ball.center + **d * (ball.radius * frac)))).collect();
            if let Some(first) = outside.first() {
                // Report the middle of the exterior arc rather than its edge.
                let sum = outside.iter().fold(Point::origin(self.dim)?, |a, d| a + **d);
                let dir = if sum.norm() > 1e-9 { sum * (1.0 / sum.norm()) } else { **first };
                return Err(Error::NotContained { direction: dir.coords().to_vec() });
            }
        }
        Ok(())
    }

    /// Checks `other ⊆ self` by scanning the boundaries of `other`'s primitives.
    pub fn contains_region(&self, other: &Region) -> Result<()> {
        for p in &other.primitives {
            match p {
                Primitive::Ball(b) => self.contains_closed_ball(b)?,
                q => {
                    let g = q.as_polygon().ok_or_else(|| Error::Unsupported("3-D box containment".into()))?;
                    let centroid = g.vertices().iter().fold(Point::xy(0.0, 0.0), |a, v| a + *v) * (1.0 / g.vertices().len() as f64);
                    for (a, b) in g.edges() {
                        for k in 0..64 {
                            let pt = a + (b - a) * (k as f64 / 64.0);
                            if !self.contains(&pt) {
                                let dir = pt - centroid;
                                return Err(Error::NotContained { direction: (dir * (1.0 / dir.norm())).coords().to_vec() });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Points on the boundary of the union: boundary samples of each
    /// primitive that are not interior to another primitive.
    pub fn boundary_samples(&self, per_primitive: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for (i, p) in self.primitives.iter().enumerate() {
            let pts: Vec<Point> = if self.dim == 2 {
                (0..per_primitive).map(|k| p.boundary_point(k as f64 / per_primitive as f64)).collect()
            } else if let Primitive::Ball(b) = p {
                directions(3, per_primitive).into_iter().map(|d| b.center + d * b.radius).collect()
            } else {
                continue;
            };
            out.extend(pts.into_iter().filter(|x| !self.interior_elsewhere(i, x)));
        }
        out
    }

    fn interior_elsewhere(&self, i: usize, x: &Point) -> bool {
        self.primitives.iter().enumerate().any(|(j, q)| j != i && q.interior_contains(x))
    }

    /// `(sup_{y ∈ D} |p − y|, dist(p, complement))` for a planar or spatial
    /// union, from dense boundary sampling refined locally (planar case).
    fn radii_sampled(&self, p: &Point, per_primitive: usize) -> (f64, f64) {
        let mut outer: f64 = 0.0;
        let mut inner = f64::INFINITY;
        for (i, prim) in self.primitives.iter().enumerate() {
            if self.dim == 3 {
                let Primitive::Ball(b) = prim else { continue };
                for d in directions(3, per_primitive) {
                    let y = b.center + d * b.radius;
                    if !self.interior_elsewhere(i, &y) {
                        outer = outer.max(p.distance(&y));
                        inner = inner.min(p.distance(&y));
                    }
                }
                continue;
            }
            let n = per_primitive;
            let at = |t: f64| prim.boundary_point(t);
            let valid = |t: f64| !self.interior_elsewhere(i, &at(t));
            let ts: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
            let ok: Vec<bool> = ts.iter().map(|&t| valid(t)).collect();
            let mut best_min: Option<usize> = None;
            let mut best_max: Option<usize> = None;
            for k in 0..n {
                if !ok[k] {
                    continue;
                }
                let d = p.distance(&at(ts[k]));
                if best_min.is_none_or(|b| d < p.distance(&at(ts[b]))) {
                    best_min = Some(k);
                }
                if best_max.is_none_or(|b| d > p.distance(&at(ts[b]))) {
                    best_max = Some(k);
                }
            }
            let step = 1.0 / n as f64;
            if let Some(k) = best_min {
                inner = inner.min(refine(ts[k], step, &valid, &|t| p.distance(&at(t))));
            }
            if let Some(k) = best_max {
                outer = outer.max(-refine(ts[k], step, &valid, &|t| -p.distance(&at(t))));
            }
        }
        (outer, inner)
    }
}

/// Local minimisation of `f` around a sampled parameter `t0` on a validity
/// set: golden-section inside valid neighbourhoods, bisection towards the
/// validity boundary otherwise.
fn refine(t0: f64, step: f64, valid: &dyn Fn(f64) -> bool, f: &dyn Fn(f64) -> f64) -> f64 {
    let mut best = f(t0);
    for side in [-1.0, 1.0] {
        let t1 = t0 + side * step;
        if valid(t1) {
            let (mut a, mut b) = if side < 0.0 { (t1, t0) } else { (t0, t1) };
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) < f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            best = best.min(f(0.5 * (a + b)));
        } else {
            let (mut good, mut bad) = (t0, t1);
            for _ in 0..80 {
                let mid = 0.5 * (good + bad);
                if valid(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            best = best.min(f(good));
        }
    }
    best
}

/// A bounded set with a marked interior point and its outer/inner radii.
#[derive(Clone, Debug)]
pub struct MarkedSet {
    region: Region,
    marked: Point,
    outer_radius: f64,
    outer_radius_sq: f64,
    inner_radius: f64,
    measure: Measure,
}

/// Boundary samples per primitive when a marked set is a genuine union.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 10_000;

impl MarkedSet {
    pub fn new(region: Region, marked: Point) -> Result<Self> {
        MarkedSet::with_resolution(region, marked, DEFAULT_BOUNDARY_SAMPLES)
    }

    pub fn with_resolution(region: Region, marked: Point, boundary_samples: usize) -> Result<Self> {
        marked.same_dim(&Point::origin(region.dim())?)?;
        let prims = region.primitives();
        if !prims.iter().any(|p| p.interior_contains(&marked)) && !region.contains(&marked) {
            return Err(Error::invalid(format!("marked point {marked:?} is not interior to the set")));
        }
        let (outer_sq, inner) = match prims {
            [Primitive::Ball(b)] => {
                let d = marked.distance(&b.center);
                ((d + b.radius).powi(2), b.radius - d)
            }
            [Primitive::Rect(r)] => {
                let n = r.dim();
                let outer = (0..n)
                    .map(|i| {
                        let (x, lo, hi) = (marked.coords()[i], r.min.coords()[i], r.max.coords()[i]);
                        (x - lo).abs().max((hi - x).abs()).powi(2)
                    })
                    .sum::<f64>();
                let inner = (0..n)
                    .map(|i| {
                        let (x, lo, hi) = (marked.coords()[i], r.min.coords()[i], r.max.coords()[i]);
                        (x - lo).min(hi - x)
                    })
                    .fold(f64::INFINITY, f64::min);
                (outer, inner)
            }
            [Primitive::Polygon(g)] => {
                let outer = g.vertices().iter().map(|v| marked.distance(v)).fold(0.0, f64::max);
                (outer * outer, g.boundary_distance(&marked))
            }
            _ => {
                let (outer, inner) = region.radii_sampled(&marked, boundary_samples.max(16));
                (outer * outer, inner)
            }
        };
        if !(inner > 0.0) {
            return Err(Error::invalid(format!("marked point {marked:?} is not interior to the set")));
        }
        let measure = region.measure();
        Ok(MarkedSet { region, marked, outer_radius: outer_sq.sqrt(), outer_radius_sq: outer_sq, inner_radius: inner, measure })
    }

    /// `B(0, 1)` marked at its center.
    pub fn unit_ball(dim: usize) -> Result<Self> {
        let o = Point::origin(dim)?;
        MarkedSet::new(Region::ball(o, 1.0)?, o)
    }

    /// `[−½, ½]²` marked at its center.
    pub fn unit_square() -> Result<Self> {
        MarkedSet::new(Region::rect(Point::xy(-0.5, -0.5), Point::xy(0.5, 0.5))?, Point::xy(0.0, 0.0))
    }

    /// `B((0,0), 1) ∪ B((1,0), 1)` marked at `(½, 0)`.
    pub fn two_ball_union() -> Result<Self> {
        let r = Region::ball(Point::xy(0.0, 0.0), 1.0)?.union(&Region::ball(Point::xy(1.0, 0.0), 1.0)?)?;
        MarkedSet::new(r, Point::xy(0.5, 0.0))
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn marked_point(&self) -> Point {
        self.marked
    }

    /// `R_D = sup_{y ∈ D} |p_D − y|`.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// `R_D²`, exact for rectangles with representable corners.
    pub fn outer_radius_squared(&self) -> f64 {
        self.outer_radius_sq
    }

    /// `r_D`, the distance from `p_D` to the complement of the interior.
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }
}

/// Measure of `h(D)`, obtained by scaling rather than re-integration.
pub fn similarity_image_measure(d: &MarkedSet, h: &Similarity) -> Result<f64> {
    if h.dim() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), got: h.dim() });
    }
    Ok(h.scale().powi(d.dim() as i32) * d.measure().value)
}

/// `r ↦ m_n(D ∩ B(p_D, r))` for a set of finite measure, possibly unbounded.
#[derive(Clone)]
pub struct RadialProfile {
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    total: f64,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile").field("total", &self.total).finish_non_exhaustive()
    }
}

impl RadialProfile {
    pub fn new(profile: impl Fn(f64) -> f64 + Send + Sync + 'static, total: f64) -> Result<Self> {
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("radial profile needs a finite positive total"));
        }
        Ok(RadialProfile { profile: Arc::new(profile), total })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn at(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    /// Smallest `r` with `t·M(r) ≥ total`, to relative tolerance 1e-9.
    pub fn truncation_radius(&self, t: f64) -> Result<f64> {
        if !(t > 1.0) {
            return Err(Error::invalid(format!("truncation factor must exceed 1, got {t}")));
        }
        let reached = |r: f64| t * self.at(r) >= self.total;
        let mut hi = 1.0;
        let mut tries = 0;
        while !reached(hi) {
            hi *= 2.0;
            tries += 1;
            if tries > 2000 || !hi.is_finite() {
                return Err(Error::invalid("radial profile never reaches total / t"));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if reached(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// JSON form of a region: `{dimension, primitives, marked_point?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub dimension: usize,
    pub primitives: Vec<PrimitiveDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked_point: Option<Vec<Decimal>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PrimitiveDoc {
    Ball {
        center: Vec<Decimal>,
        radius: Decimal,
        #[serde(default)]
        closed: bool,
    },
    Rect {
        min: Vec<Decimal>,
        max: Vec<Decimal>,
        #[serde(default)]
        closed: bool,
    },
    Polygon {
        vertices: Vec<Vec<Decimal>>,
        #[serde(default)]
        closed: bool,
    },
}

impl From<&Primitive> for PrimitiveDoc {
    fn from(p: &Primitive) -> Self {
        match p {
            Primitive::Ball(b) => PrimitiveDoc::Ball { center: decimals(b.center.coords()), radius: Decimal(b.radius), closed: b.closed },
            Primitive::Rect(r) => PrimitiveDoc::Rect { min: decimals(r.min.coords()), max: decimals(r.max.coords()), closed: r.closed },
            Primitive::Polygon(g) => {
                PrimitiveDoc::Polygon { vertices: g.vertices().iter().map(|v| decimals(v.coords())).collect(), closed: g.closed }
            }
        }
    }
}

impl PrimitiveDoc {
    fn build(&self) -> Result<Primitive> {
        Ok(match self {
            PrimitiveDoc::Ball { center, radius, closed } => {
                let mut b = Ball::new(Point::new(&floats(center))?, radius.0)?;
                b.closed = *closed;
                Primitive::Ball(b)
            }
            PrimitiveDoc::Rect { min, max, closed } => {
                let mut r = AxisRect::new(Point::new(&floats(min))?, Point::new(&floats(max))?)?;
                r.closed = *closed;
                Primitive::Rect(r)
            }
            PrimitiveDoc::Polygon { vertices, closed } => {
                let v = vertices.iter().map(|c| Point::new(&floats(c))).collect::<Result<Vec<_>>>()?;
                let mut g = Polygon::new(v)?;
                g.closed = *closed;
                Primitive::Polygon(g)
            }
        })
    }
}

impl RegionDoc {
    pub fn from_region(region: &Region, marked: Option<Point>) -> Self {
        RegionDoc {
            dimension: region.dim(),
            primitives: region.primitives().iter().map(PrimitiveDoc::from).collect(),
            marked_point: marked.map(|p| decimals(p.coords())),
        }
    }

    pub fn to_region(&self) -> Result<Region> {
        let region = Region::new(self.primitives.iter().map(PrimitiveDoc::build).collect::<Result<_>>()?)?;
        if region.dim() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: region.dim() });
        }
        Ok(region)
    }

    pub fn to_marked_set(&self) -> Result<MarkedSet> {
        let p = self.marked_point.as_ref().ok_or_else(|| Error::invalid("marked_point missing"))?;
        MarkedSet::new(self.to_region()?, Point::new(&floats(p))?)
    }
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RegionDoc::from_region(self, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RegionDoc::deserialize(d)?.to_region().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lens_area;
    use proptest::prelude::*;

    fn two_balls() -> Region {
        Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap().union(&Region::ball(Point::xy(1.0, 0.0), 1.0).unwrap()).unwrap()
    }

    #[test]
    fn contains_examples() {
        let b = Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap();
        assert!(b.contains(&Point::xy(0.0, 0.0)));
        assert!(!b.contains(&Point::xy(2.0, 0.0)));
        assert!(!b.contains(&Point::xyz(0.0, 0.0, 0.0)));
    }

    #[test]
    fn measure_examples() {
        assert!((Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap().measure().value - PI).abs() < 1e-15);
        assert_eq!(Region::rect(Point::xy(0.0, 0.0), Point::xy(2.0, 3.0)).unwrap().measure().value, 6.0);
        let m = two_balls().measure();
        assert!(m.exact);
        let expect = 2.0 * PI - lens_area(1.0, 1.0, 1.0).unwrap();
        assert!((m.value - expect).abs() < 1e-12);
        assert!((m.value - 5.0548).abs() < 1e-4);
    }

    #[test]
    fn sampled_measure_agrees_with_inclusion_exclusion() {
        let cases = [
            two_balls(),
            Region::ball(Point::xy(0.0, 0.0), 1.0)
                .unwrap()
                .union(&Region::rect(Point::xy(0.0, -0.5), Point::xy(3.0, 0.5)).unwrap())
                .unwrap(),
            Region::rect(Point::xy(0.0, 0.0), Point::xy(2.0, 2.0))
                .unwrap()
                .union(&Region::polygon(vec![Point::xy(1.0, 1.0), Point::xy(3.0, 1.0), Point::xy(1.0, 3.0)]).unwrap())
                .unwrap(),
            Region::ball(Point::xyz(0.0, 0.0, 0.0), 1.0).unwrap().union(&Region::ball(Point::xyz(0.0, 0.0, 1.5), 1.0).unwrap()).unwrap(),
        ];
        for (i, r) in cases.iter().enumerate() {
            let exact = r.exact_measure().unwrap();
            let s = r.sampled_measure(&SamplingConfig { samples: 1 << 18, seed: i as u64 });
            assert!((s.value - exact).abs() <= 3.0 * s.stderr + 1e-12, "case {i}: {} vs {exact} (se {})", s.value, s.stderr);
        }
    }

    #[test]
    fn triple_overlap_falls_back_to_sampling() {
        let r = two_balls().union(&Region::ball(Point::xy(0.5, 0.5), 1.0).unwrap()).unwrap();
        assert!(r.exact_measure().is_none());
        let m = r.measure();
        assert!(!m.exact && m.stderr > 0.0);
    }

    #[test]
    fn image_measure_scales() {
        let d = MarkedSet::unit_ball(2).unwrap();
        let h = Similarity::dilation(2.0, Point::xy(0.0, 0.0)).unwrap();
        assert!((similarity_image_measure(&d, &h).unwrap() - 4.0 * PI).abs() < 1e-12);
        let sq = MarkedSet::unit_square().unwrap();
        let h3 = Similarity::dilation(3.0, Point::xy(1.0, 1.0)).unwrap();
        assert!((similarity_image_measure(&sq, &h3).unwrap() - 9.0).abs() < 1e-12);
        let tb = MarkedSet::two_ball_union().unwrap();
        let expect = 4.0 * (2.0 * PI - 1.2283697);
        assert!((similarity_image_measure(&tb, &h).unwrap() - expect).abs() < 1e-5);
    }

    #[test]
    fn marked_set_radii() {
        let sq = MarkedSet::unit_square().unwrap();
        assert!((sq.outer_radius() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.inner_radius(), 0.5);
        let tb = MarkedSet::two_ball_union().unwrap();
        assert!((tb.outer_radius() - 1.5).abs() < 1e-9, "{}", tb.outer_radius());
        assert!((tb.inner_radius() - 0.75f64.sqrt()).abs() < 1e-9, "{}", tb.inner_radius());
        assert!(MarkedSet::new(Region::ball(Point::xy(0.0, 0.0), 1.0).unwrap(), Point::xy(2.0, 0.0)).is_err());
    }

    #[test]
    fn marked_set_radii_bound_samples() {
        // r_D ≤ |p − y| for boundary samples, R_D ≥ |p − y| for points of D.
        for d in [MarkedSet::unit_square().unwrap(), MarkedSet::two_ball_union().unwrap()] {
            let p = d.marked_point();
            for y in d.region().boundary_samples(2000) {
                assert!(d.inner_radius() <= p.distance(&y) + 1e-12);
            }
            let bb = d.region().bounds();
            for i in 0..100 {
                for j in 0..100 {
                    let y = Point::xy(
                        bb.min.x() + (bb.max.x() - bb.min.x()) * i as f64 / 99.0,
                        bb.min.y() + (bb.max.y() - bb.min.y()) * j as f64 / 99.0,
                    );
                    if d.region().contains(&y) {
                        assert!(d.outer_radius() >= p.distance(&y) - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn truncation_radius_examples() {
        let exp = RadialProfile::new(|r: f64| 1.0 - (-r).exp(), 1.0).unwrap();
        assert!((exp.truncation_radius(2.0).unwrap() - 2f64.ln()).abs() < 1e-8);
        let lin = RadialProfile::new(|r: f64| r.min(1.0), 1.0).unwrap();
        assert!((lin.truncation_radius(4.0).unwrap() - 0.25).abs() < 1e-9);
        assert!(lin.truncation_radius(1.0).is_err());
        let mut prev = f64::INFINITY;
        for t in [1.1, 1.5, 2.0, 4.0, 10.0] {
            let r = exp.truncation_radius(t).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn closed_ball_containment() {
        let omega = Region::ball(Point::xy(0.0, 0.0), 2.0).unwrap();
        assert!(omega.contains_closed_ball(&Ball::new(Point::xy(0.5, 0.0), 1.0).unwrap()).is_ok());
        match omega.contains_closed_ball(&Ball::new(Point::xy(1.5, 0.0), 1.0).unwrap()) {
            Err(Error::NotContained { direction }) => assert!(direction[0] > 0.9),
            other => panic!("{other:?}"),
        }
        // Needs two primitives.
        let r = Region::rect(Point::xy(0.0, 0.0), Point::xy(2.0, 1.0))
            .unwrap()
            .union(&Region::rect(Point::xy(1.0, 0.0), Point::xy(3.0, 1.0)).unwrap())
            .unwrap();
        assert!(r.contains_closed_ball(&Ball::new(Point::xy(1.5, 0.5), 0.4).unwrap()).is_ok());
    }

    #[test]
    fn json_round_trip_keeps_bits() {
        let r = Region::new(vec![
            Primitive::Ball(Ball::closed(Point::xy(0.1, 1.0 / 3.0), 16f64.powi(-25)).unwrap()),
            Primitive::Rect(AxisRect::new(Point::xy(-1e-300, 0.2), Point::xy(7.0, 9.5)).unwrap()),
            Primitive::Polygon(Polygon::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap()),
        ])
        .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: Region = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(json.contains("\"type\":\"ball\""));
    }

    proptest! {
        #[test]
        fn image_measure_matches_scaling(k in 0.1f64..10.0, angle in 0.0f64..6.3, refl in any::<bool>(),
                                         tx in -5.0f64..5.0, ty in -5.0f64..5.0) {
            let h = Similarity::planar(k, angle, refl, Point::xy(tx, ty)).unwrap();
            for d in [MarkedSet::unit_square().unwrap(), MarkedSet::unit_ball(2).unwrap()] {
                let direct = d.region().image(&h).unwrap().exact_measure().unwrap();
                let scaled = similarity_image_measure(&d, &h).unwrap();
                prop_assert!((direct - scaled).abs() <= 1e-9 * scaled);
            }
            let tb = two_balls();
            let direct = tb.image(&h).unwrap().exact_measure().unwrap();
            prop_assert!((direct - k * k * tb.exact_measure().unwrap()).abs() <= 1e-9 * direct);
        }
    }
}
