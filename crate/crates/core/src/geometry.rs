//! Euclidean primitives in dimension 2 and 3.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Tolerance on `‖TᵀT − I‖_max` for orthogonal parts of similarities.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

pub(crate) fn check_dim(dim: usize) -> Result<usize> {
    match dim {
        2 | 3 => Ok(dim),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// A point (or displacement) in ℝ² or ℝ³.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; 3],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = check_dim(coords.len())?;
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate in {coords:?}")));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(coords);
        Ok(Point { c, dim: dim as u8 })
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Point { c: [x, y, 0.0], dim: 2 }
    }

    pub const fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point { c: [x, y, z], dim: 3 }
    }

    pub fn origin(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Point { c: [0.0; 3], dim: dim as u8 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim()]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        self.c[0] * o.c[0] + self.c[1] * o.c[1] + self.c[2] * o.c[2]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn distance(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    pub(crate) fn same_dim(&self, o: &Point) -> Result<()> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: o.dim() });
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point { c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]], dim: self.dim }
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point { c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]], dim: self.dim }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, k: f64) -> Point {
        Point { c: [self.c[0] * k, self.c[1] * k, self.c[2] * k], dim: self.dim }
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// ν_n, the volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(dim: usize) -> Result<f64> {
    match check_dim(dim)? {
        2 => Ok(PI),
        _ => Ok(4.0 * PI / 3.0),
    }
}

#[inline]
pub(crate) fn ball_volume(dim: usize, r: f64) -> f64 {
    if dim == 2 {
        PI * r * r
    } else {
        4.0 * PI / 3.0 * r * r * r
    }
}

/// An open ball `B(center, radius)`, or its closure when `closed` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    pub closed: bool,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius, closed: false })
    }

    pub fn closed(center: Point, radius: f64) -> Result<Self> {
        Ok(Ball { closed: true, ..Ball::new(center, radius)? })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        let d2 = (*p - self.center).dot(&(*p - self.center));
        let r2 = self.radius * self.radius;
        if self.closed {
            d2 <= r2
        } else {
            d2 < r2
        }
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius)
    }
}

/// An axis-aligned box `∏ (min_i, max_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRect {
    pub min: Point,
    pub max: Point,
    pub closed: bool,
}

impl AxisRect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        min.same_dim(&max)?;
        if min.coords().iter().zip(max.coords()).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid(format!("degenerate rectangle {min:?} .. {max:?}")));
        }
        Ok(AxisRect { min, max, closed: false })
    }

    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            let x = p.c[i];
            if self.closed {
                self.min.c[i] <= x && x <= self.max.c[i]
            } else {
                self.min.c[i] < x && x < self.max.c[i]
            }
        })
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.max.c[i] - self.min.c[i]).product()
    }

    pub fn center(&self) -> Point {
        (self.min + self.max) * 0.5
    }

    pub fn intersect(&self, o: &AxisRect) -> Option<AxisRect> {
        let n = self.dim();
        let mut lo = self.min;
        let mut hi = self.max;
        for i in 0..n {
            lo.c[i] = lo.c[i].max(o.min.c[i]);
            hi.c[i] = hi.c[i].min(o.max.c[i]);
            if lo.c[i] >= hi.c[i] {
                return None;
            }
        }
        Some(AxisRect { min: lo, max: hi, closed: self.closed && o.closed })
    }

    /// Corners in counter-clockwise order (2-D only).
    pub fn corners2(&self) -> [Point; 4] {
        let (a, b) = (self.min, self.max);
        [Point::xy(a.x(), a.y()), Point::xy(b.x(), a.y()), Point::xy(b.x(), b.y()), Point::xy(a.x(), b.y())]
    }
}

/// A simple planar polygon; vertices are stored counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    pub closed: bool,
}

fn cross(a: Point, b: Point) -> f64 {
    a.x() * b.y() - a.y() * b.x()
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5
}

impl Polygon {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|p| p.dim() != 2) {
            return Err(Error::invalid("polygons are planar"));
        }
        let a = signed_area(&vertices);
        if a == 0.0 || !a.is_finite() {
            return Err(Error::invalid("polygon has zero area"));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices, closed: false })
    }

    pub fn regular(center: Point, circumradius: f64, sides: usize) -> Result<Self> {
        let v = (0..sides)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / sides as f64;
                center + Point::xy(t.cos(), t.sin()) * circumradius
            })
            .collect();
        Polygon::new(v)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b, c) = (self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]);
            cross(b - a, c - b) >= 0.0
        })
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, &a, &b)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let on_edge = self.edges().any(|(a, b)| on_segment(p, &a, &b));
        if on_edge {
            return self.closed;
        }
        // crossing number
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y() > p.y()) != (b.y() > p.y()) {
                let x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
                if p.x() < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for v in &self.vertices {
            lo = Point::xy(lo.x().min(v.x()), lo.y().min(v.y()));
            hi = Point::xy(hi.x().max(v.x()), hi.y().max(v.y()));
        }
        (lo, hi)
    }
}

fn on_segment(p: &Point, a: &Point, b: &Point) -> bool {
    cross(*b - *a, *p - *a) == 0.0
        && p.x() >= a.x().min(b.x())
        && p.x() <= a.x().max(b.x())
        && p.y() >= a.y().min(b.y())
        && p.y() <= a.y().max(b.y())
}

pub(crate) fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len2 = ab.dot(&ab);
    let t = if len2 > 0.0 { ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(&(*a + ab * t))
}

/// A similarity `x ↦ k·Tx + a` with `k > 0` and `T` orthogonal.
#[derive(Clone, Copy, PartialEq)]
pub struct Similarity {
    scale: f64,
    orthogonal: [[f64; 3]; 3],
    translation: Point,
}

impl fmt::Debug for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let rows: Vec<&[f64]> = self.orthogonal[..n].iter().map(|r| &r[..n]).collect();
        f.debug_struct("Similarity").field("scale", &self.scale).field("orthogonal", &rows).field("translation", &self.translation).finish()
    }
}

impl Similarity {
    /// `orthogonal` is given row-major as `n` rows of `n` entries.
    pub fn new(scale: f64, orthogonal: &[Vec<f64>], translation: Point) -> Result<Self> {
        let n = translation.dim();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("similarity scale must be positive, got {scale}")));
        }
        if orthogonal.len() != n || orthogonal.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: orthogonal.len() });
        }
        let mut t = [[0.0; 3]; 3];
        for (i, row) in orthogonal.iter().enumerate() {
            t[i][..n].copy_from_slice(row);
        }
        let residual = orthogonality_residual(&t, n);
        if !(residual <= ORTHOGONALITY_TOL) {
            return Err(Error::invalid(format!("matrix is not orthogonal (residual {residual:e})")));
        }
        Ok(Similarity { scale, orthogonal: t, translation })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Similarity::dilation(1.0, Point::origin(dim)?)
    }

    /// `x ↦ k·x + a`.
    pub fn dilation(scale: f64, translation: Point) -> Result<Self> {
        let n = translation.dim();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
        Similarity::new(scale, &rows, translation)
    }

    /// Planar `x ↦ k·R(angle)·x + a`, optionally preceded by the reflection `(x, y) ↦ (x, −y)`.
    pub fn planar(scale: f64, angle: f64, reflect: bool, translation: Point) -> Result<Self> {
        if translation.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: translation.dim() });
        }
        let (s, c) = angle.sin_cos();
        let f = if reflect { -1.0 } else { 1.0 };
        let rows = [vec![c, -s * f], vec![s, c * f]];
        Similarity::new(scale, &rows, translation)
    }

    /// The similarity with the given scale and orthogonal part that sends `from` to `to`.
    pub fn anchored(scale: f64, orthogonal: &[Vec<f64>], from: Point, to: Point) -> Result<Self> {
        from.same_dim(&to)?;
        let mut h = Similarity::new(scale, orthogonal, Point::origin(to.dim())?)?;
        h.translation = to - h.linear(from);
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn translation(&self) -> Point {
        self.translation
    }

    pub fn orthogonal(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        self.orthogonal[..n].iter().map(|r| r[..n].to_vec()).collect()
    }

    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality_residual(&self.orthogonal, self.dim())
    }

    #[inline]
    fn rotate(&self, p: Point) -> Point {
        let t = &self.orthogonal;
        let c = p.c;
        Point {
            c: [
                t[0][0] * c[0] + t[0][1] * c[1] + t[0][2] * c[2],
                t[1][0] * c[0] + t[1][1] * c[1] + t[1][2] * c[2],
                t[2][0] * c[0] + t[2][1] * c[1] + t[2][2] * c[2],
            ],
            dim: p.dim,
        }
    }

    #[inline]
    fn linear(&self, p: Point) -> Point {
        self.rotate(p) * self.scale
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        p.same_dim(&self.translation)?;
        Ok(self.map(*p))
    }

    /// `apply` without the dimension check.
    #[inline]
    pub fn map(&self, p: Point) -> Point {
        self.linear(p) + self.translation
    }

    pub fn inverse(&self) -> Similarity {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.orthogonal[j][i];
            }
        }
        let mut inv = Similarity { scale: 1.0 / self.scale, orthogonal: t, translation: self.translation };
        inv.translation = -inv.linear(self.translation);
        inv
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Similarity) -> Similarity {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.orthogonal[i][k] * other.orthogonal[k][j]).sum();
            }
        }
        Similarity { scale: self.scale * other.scale, orthogonal: t, translation: self.map(other.translation) }
    }

    /// `det T`: +1 for rotations, −1 for reflections.
    pub fn determinant(&self) -> f64 {
        let t = &self.orthogonal;
        if self.dim() == 2 {
            t[0][0] * t[1][1] - t[0][1] * t[1][0]
        } else {
            t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
                + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
        }
    }
}

fn orthogonality_residual(t: &[[f64; 3]; 3], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| t[k][i] * t[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Area of the intersection of two planar disks with radii `r1`, `r2` whose
/// centers are `d` apart.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::invalid(format!("radii must be positive, got {r1}, {r2}")));
    }
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("center distance must be nonnegative, got {d}")));
    }
    Ok(lens_area_unchecked(r1, r2, d))
}

pub(crate) fn lens_area_unchecked(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return PI * small * small;
    }
    // Two circular segments cut off by the common chord.
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let seg1 = r1 * r1 * (a1 - a1.sin() * a1.cos());
    let seg2 = r2 * r2 * (a2 - a2.sin() * a2.cos());
    (seg1 + seg2).clamp(0.0, PI * small * small)
}

/// `2/3 − √3/(2π)`: the smallest fraction of a disk `B(x, r)` covered by a
/// disk `B(z, R)` with `R ≥ r` and `x` on its boundary, attained at `R = r`.
pub fn lens_constant() -> f64 {
    2.0 / 3.0 - 3f64.sqrt() / (2.0 * PI)
}

/// Volume of the intersection of two balls in ℝ³.
pub(crate) fn sphere_intersection_volume(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return 4.0 / 3.0 * PI * small.powi(3);
    }
    let s = r1 + r2 - d;
    PI * s * s * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2).powi(2)) / (12.0 * d)
}

/// Area of the intersection of the disk `B(center, r)` with a simple polygon.
pub fn disk_polygon_area(center: &Point, r: f64, polygon: &Polygon) -> f64 {
    let total: f64 = polygon.edges().map(|(a, b)| disk_triangle_signed_area(a - *center, b - *center, r)).sum();
    total.abs().min(PI * r * r)
}

/// Signed area of `B(0, r) ∩ triangle(0, a, b)`.
fn disk_triangle_signed_area(a: Point, b: Point, r: f64) -> f64 {
    let r2 = r * r;
    let ab = b - a;
    let qa = ab.dot(&ab);
    if qa == 0.0 {
        return 0.0;
    }
    // Split the segment where it crosses the circle.
    let qb = 2.0 * a.dot(&ab);
    let qc = a.dot(&a) - r2;
    let disc = qb * qb - 4.0 * qa * qc;
    let mut ts = vec![0.0];
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let mut area = 0.0;
    for w in ts.windows(2) {
        let p = a + ab * w[0];
        let q = a + ab * w[1];
        let mid = (p + q) * 0.5;
        if mid.dot(&mid) <= r2 {
            area += 0.5 * cross(p, q);
        } else {
            let angle = cross(p, q).atan2(p.dot(&q));
            area += 0.5 * r2 * angle;
        }
    }
    area
}

/// Sutherland–Hodgman clip of `subject` against the convex polygon `clip`.
pub(crate) fn clip_convex(subject: &Polygon, clip: &Polygon) -> Option<Polygon> {
    let mut out: Vec<Point> = subject.vertices().to_vec();
    for (a, b) in clip.edges() {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let inside = |p: &Point| cross(b - a, *p - a) >= 0.0;
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let d1 = cross(b - a, prev - a);
                let d2 = cross(b - a, cur - a);
                let t = d1 / (d1 - d2);
                out.push(prev + (cur - prev) * t);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    if out.len() < 3 {
        return None;
    }
    Polygon::new(out).ok()
}
