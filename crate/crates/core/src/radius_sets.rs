//! Radius sets `A ⊆ (0, ∞)`: gap constants, ε-nets of `ln A`, porosity, and
//! favorability verdicts.
//!
//! Everything is computed on `ln A`, which is a union of closed pieces
//! `[u, v]` (points have `u = v`). Window quantities only look at the pieces
//! meeting `[ln lo, ln hi]`, plus the nearest pieces outside when the set is
//! fully known. Asymptotic quantities come from closed-form gap laws.

use crate::error::{Error, Result};
use crate::num::{Decimal, Real};
use serde::{Deserialize, Serialize};

/// Gaps `(a_m, b_m)` with `a_m = base^(−m²) / (divisor · m^exponent)` and
/// `b_m = ratio_factor · m · a_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapLaw {
    pub base: f64,
    pub divisor: f64,
    pub exponent: f64,
    pub ratio_factor: f64,
}

impl GapLaw {
    /// Gaps `(b_m/(4N₀m), b_m)` with `b_m = 16^(−m²)`.
    pub fn counterexample(n0: usize) -> Self {
        let k = 4.0 * n0 as f64;
        GapLaw { base: 16.0, divisor: k, exponent: 1.0, ratio_factor: k }
    }

    /// Gaps `(a_m, m·a_m)` for a given `a_m` law.
    pub fn unit_ratio(base: f64, divisor: f64, exponent: f64) -> Self {
        GapLaw { base, divisor, exponent, ratio_factor: 1.0 }
    }

    pub fn ln_a(&self, m: usize) -> f64 {
        let mf = m as f64;
        -mf * mf * self.base.ln() - self.divisor.ln() - self.exponent * mf.ln()
    }

    pub fn ln_ratio(&self, m: usize) -> f64 {
        (self.ratio_factor * m as f64).ln()
    }

    pub fn ln_b(&self, m: usize) -> f64 {
        self.ln_a(m) + self.ln_ratio(m)
    }

    pub fn a(&self, m: usize) -> f64 {
        self.ln_a(m).exp()
    }

    pub fn b(&self, m: usize) -> f64 {
        self.ln_b(m).exp()
    }

    fn validate(&self, m_start: usize) -> Result<()> {
        if !(self.base > 1.0 && self.divisor > 0.0 && self.ratio_factor > 0.0 && self.exponent.is_finite()) {
            return Err(Error::invalid(format!("invalid gap law {self:?}")));
        }
        if m_start == 0 || self.ln_ratio(m_start) <= 0.0 {
            return Err(Error::invalid("gap law must start where b_m > a_m"));
        }
        for m in m_start..m_start + 1000 {
            if self.ln_b(m + 1) >= self.ln_a(m) {
                return Err(Error::invalid(format!("gaps overlap at m = {m}: b_(m+1) ≥ a_m")));
            }
        }
        Ok(())
    }
}

/// Parametric radius sets with closed-form gap behaviour.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `{c·q^k : k ∈ ℤ}`.
    Geometric { c: f64, q: f64 },
    /// `⋃_{k ∈ ℤ} [β^k, α·β^k]` with `0 < β < 1`, `1 ≤ α < 1/β`.
    Blocks { alpha: f64, beta: f64 },
    /// `{e^(−m^p) : m ≥ 1}`.
    SuperGeometric { p: f64 },
    /// `(0, ∞) ∖ ⋃_{m ≥ m_start} (a_m, b_m)`.
    GapComplement { law: GapLaw, m_start: usize },
    /// `{α·x^β : x ∈ inner}`.
    Rescaled { inner: Box<Family>, alpha: f64, beta: f64 },
}

const MAX_PIECES: usize = 5_000_000;

impl Family {
    fn validate(&self) -> Result<()> {
        match self {
            Family::Geometric { c, q } if !(*c > 0.0 && *q > 0.0 && *q != 1.0 && c.is_finite() && q.is_finite()) => {
                Err(Error::invalid("geometric family needs c > 0 and q > 0, q ≠ 1"))
            }
            Family::Blocks { alpha, beta } if !(*beta > 0.0 && *beta < 1.0 && *alpha >= 1.0 && alpha * beta < 1.0) => {
                Err(Error::invalid("block family needs 0 < β < 1 and 1 ≤ α < 1/β"))
            }
            Family::SuperGeometric { p } if !(*p > 0.0 && p.is_finite()) => Err(Error::invalid("super-geometric family needs p > 0")),
            Family::GapComplement { law, m_start } => law.validate(*m_start),
            Family::Rescaled { inner, alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::invalid("rescaling needs α, β > 0"));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Pieces of `ln A` meeting `[ylo, yhi]`, unclipped, in increasing order.
    fn log_pieces(&self, ylo: f64, yhi: f64) -> Result<Vec<(f64, f64)>> {
        let too_many = || Error::invalid("window holds too many elements of the radius set");
        Ok(match self {
            Family::Geometric { c, q } => {
                let s = q.ln().abs();
                let (k0, k1) = (((ylo - c.ln()) / s).ceil(), ((yhi - c.ln()) / s).floor());
                if k1 - k0 > MAX_PIECES as f64 {
                    return Err(too_many());
                }
                let mut k = k0;
                let mut out = Vec::new();
                while k <= k1 {
                    let y = c.ln() + k * s;
                    out.push((y, y));
                    k += 1.0;
                }
                out
            }
            Family::Blocks { alpha, beta } => {
                let (l, w) = (-beta.ln(), alpha.ln());
                let (j0, j1) = (((ylo - w) / l).ceil(), (yhi / l).floor());
                if j1 - j0 > MAX_PIECES as f64 {
                    return Err(too_many());
                }
                let mut j = j0;
                let mut out = Vec::new();
                while j <= j1 {
                    out.push((j * l, j * l + w));
                    j += 1.0;
                }
                out
            }
            Family::SuperGeometric { p } => {
                // −m^p ∈ [ylo, yhi] ⇔ m ∈ [(−yhi)^(1/p), (−ylo)^(1/p)].
                if ylo > -1.0 || yhi < ylo {
                    return Ok(Vec::new());
                }
                let m0 = if yhi >= -1.0 { 1.0 } else { (-yhi).powf(1.0 / p).ceil().max(1.0) };
                let m1 = (-ylo).powf(1.0 / p).floor();
                if m1 - m0 > MAX_PIECES as f64 {
                    return Err(too_many());
                }
                let mut out = Vec::new();
                let mut m = m1;
                while m >= m0 {
                    let y = -m.powf(*p);
                    if y >= ylo && y <= yhi {
                        out.push((y, y));
                    }
                    m -= 1.0;
                }
                out
            }
            Family::GapComplement { law, m_start } => {
                let mut out = Vec::new();
                let mut m = *m_start;
                loop {
                    let (u, v) = (law.ln_b(m + 1), law.ln_a(m));
                    if v < ylo {
                        break;
                    }
                    if u <= yhi {
                        out.push((u, v));
                    }
                    m += 1;
                    if out.len() > MAX_PIECES {
                        return Err(too_many());
                    }
                }
                out.reverse();
                if law.ln_b(*m_start) <= yhi {
                    out.push((law.ln_b(*m_start), f64::INFINITY));
                }
                out
            }
            Family::Rescaled { inner, alpha, beta } => {
                let la = alpha.ln();
                inner.log_pieces((ylo - la) / beta, (yhi - la) / beta)?.into_iter().map(|(u, v)| (la + beta * u, la + beta * v)).collect()
            }
        })
    }

    /// `sup b/a` over all gaps `(a, b)` of the set.
    fn sup_gap_ratio(&self) -> f64 {
        match self {
            Family::Geometric { q, .. } => q.max(1.0 / q),
            Family::Blocks { alpha, beta } => 1.0 / (alpha * beta),
            Family::SuperGeometric { .. } | Family::GapComplement { .. } => f64::INFINITY,
            Family::Rescaled { inner, beta, .. } => inner.sup_gap_ratio().powf(*beta),
        }
    }

    /// `sup` of the lengths of the gaps of `ln A`.
    fn sup_log_gap(&self) -> f64 {
        match self {
            Family::Geometric { q, .. } => q.ln().abs(),
            Family::Blocks { alpha, beta } => -(alpha.ln() + beta.ln()),
            // The set is bounded above by e^(−1).
            Family::SuperGeometric { .. } => f64::INFINITY,
            // ln(ratio_factor·m) is unbounded.
            Family::GapComplement { .. } => f64::INFINITY,
            Family::Rescaled { inner, beta, .. } => beta * inner.sup_log_gap(),
        }
    }

    /// `(limsup at 0, limsup at ∞)` of the log-gap lengths.
    fn end_log_gaps(&self) -> (f64, f64) {
        match self {
            Family::Geometric { q, .. } => (q.ln().abs(), q.ln().abs()),
            Family::Blocks { alpha, beta } => {
                let l = -(alpha.ln() + beta.ln());
                (l, l)
            }
            Family::SuperGeometric { p } => {
                // (m+1)^p − m^p → ∞, 1, 0 for p > 1, = 1, < 1.
                let at_zero = if *p > 1.0 {
                    f64::INFINITY
                } else if *p == 1.0 {
                    1.0
                } else {
                    0.0
                };
                (at_zero, f64::INFINITY)
            }
            Family::GapComplement { .. } => (f64::INFINITY, 0.0),
            Family::Rescaled { inner, beta, .. } => {
                let (z, i) = inner.end_log_gaps();
                (beta * z, beta * i)
            }
        }
    }

    /// Log-lengths of successive gaps towards 0, if the law gives them.
    pub fn gap_sequence(&self, count: usize) -> Option<Vec<f64>> {
        match self {
            Family::Geometric { q, .. } => Some(vec![q.ln().abs(); count]),
            Family::Blocks { alpha, beta } => Some(vec![-(alpha.ln() + beta.ln()); count]),
            Family::SuperGeometric { p } => Some((1..=count).map(|m| ((m + 1) as f64).powf(*p) - (m as f64).powf(*p)).collect()),
            Family::GapComplement { law, m_start } => Some((*m_start..*m_start + count).map(|m| law.ln_ratio(m)).collect()),
            Family::Rescaled { inner, beta, .. } => inner.gap_sequence(count).map(|v| v.into_iter().map(|x| beta * x).collect()),
        }
    }

    fn rescaled(&self, alpha: f64, beta: f64) -> Family {
        match self {
            Family::Rescaled { inner, alpha: a0, beta: b0 } => {
                // α(a₀x^b₀)^β = (α a₀^β) x^(b₀β)
                Family::Rescaled { inner: inner.clone(), alpha: alpha * a0.powf(beta), beta: b0 * beta }
            }
            f => Family::Rescaled { inner: Box::new(f.clone()), alpha, beta },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    /// Finitely many radii.
    Finite(Vec<f64>),
    /// Closed intervals `[l, u]`; `l = 0` and `u = ∞` are allowed.
    Intervals(Vec<(f64, f64)>),
    Family(Family),
}

/// A radius set with an analysis window.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusSet {
    form: Form,
    window: (f64, f64),
    /// Whether the descriptor determines the set outside the window too.
    complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    WindowLimited,
}

impl Verdict {
    fn from_finite(known: Option<f64>) -> Verdict {
        match known {
            Some(v) if v.is_finite() => Verdict::Yes,
            Some(_) => Verdict::No,
            None => Verdict::WindowLimited,
        }
    }
}

/// A gap of `ln A` meeting the window. Unknown ends were cut by the window
/// on a set known only inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogGap {
    pub lo: f64,
    pub hi: f64,
    pub lo_known: bool,
    pub hi_known: bool,
}

impl LogGap {
    fn effective(&self, ylo: f64, yhi: f64) -> (f64, f64) {
        (if self.lo_known { self.lo } else { ylo }, if self.hi_known { self.hi } else { yhi })
    }

    /// Largest distance from a window point in the gap to a known end.
    fn cover(&self, ylo: f64, yhi: f64) -> f64 {
        let (a, b) = (self.lo.max(ylo), self.hi.min(yhi));
        let dist = |y: f64| {
            let d1 = if self.lo_known { y - self.lo } else { f64::INFINITY };
            let d2 = if self.hi_known { self.hi - y } else { f64::INFINITY };
            d1.min(d2)
        };
        if self.lo_known && self.hi_known && self.lo.is_finite() && self.hi.is_finite() {
            let mid = 0.5 * (self.lo + self.hi);
            if (a..=b).contains(&mid) {
                return 0.5 * (self.hi - self.lo);
            }
        }
        dist(a).max(dist(b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PorosityEstimate {
    pub p0_window: f64,
    pub i0_window: f64,
    pub i_inf_window: f64,
    pub p0: Option<f64>,
    pub i0: Option<f64>,
    pub i_inf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSummary {
    pub lo: Real,
    pub hi: Real,
    pub gap_constant: Real,
    pub eps_star: Real,
    pub p0: Real,
    pub i0: Real,
    pub i_inf: Real,
    pub gaps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub gap_constant_route: Verdict,
    pub eps_net_route: Verdict,
    pub porosity_index_route: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub favorable_all_open: Verdict,
    pub favorable_bounded: Verdict,
    pub gap_constant: Real,
    pub eps_star: Real,
    pub p0: Real,
    pub i0: Real,
    pub i_inf: Real,
    pub window: WindowSummary,
    pub evidence: Evidence,
    pub caveats: Vec<String>,
}

/// Asymptotic data of a fully known set.
#[derive(Clone, Copy, Debug)]
struct Asymptotics {
    sup_gap_ratio: f64,
    sup_log_gap: f64,
    end_log_gaps: (f64, f64),
}

fn merge(mut pieces: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if p.0 <= last.1 => last.1 = last.1.max(p.1),
            _ => out.push(p),
        }
    }
    out
}

fn validate_window(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!("window must satisfy 0 < lo < hi < ∞, got [{lo}, {hi}]")));
    }
    Ok(())
}

impl RadiusSet {
    pub fn finite(mut elements: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        validate_window(window.0, window.1)?;
        if elements.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::invalid("radii must be positive and finite"));
        }
        elements.sort_by(f64::total_cmp);
        elements.dedup();
        Ok(RadiusSet { form: Form::Finite(elements), window, complete: true })
    }

    pub fn intervals(intervals: Vec<(f64, f64)>, window: (f64, f64)) -> Result<Self> {
        validate_window(window.0, window.1)?;
        if intervals.iter().any(|(l, u)| !(*l >= 0.0 && l <= u && !l.is_nan() && !u.is_nan() && l.is_finite() && *u > 0.0)) {
            return Err(Error::invalid("intervals must satisfy 0 ≤ l ≤ u with u > 0"));
        }
        Ok(RadiusSet { form: Form::Intervals(intervals), window, complete: true })
    }

    pub fn family(family: Family, window: (f64, f64)) -> Result<Self> {
        validate_window(window.0, window.1)?;
        family.validate()?;
        Ok(RadiusSet { form: Form::Family(family), window, complete: true })
    }

    pub fn new(form: Form, window: (f64, f64)) -> Result<Self> {
        match form {
            Form::Finite(xs) => RadiusSet::finite(xs, window),
            Form::Intervals(iv) => RadiusSet::intervals(iv, window),
            Form::Family(f) => RadiusSet::family(f, window),
        }
    }

    /// `(0, ∞)`.
    pub fn everything(window: (f64, f64)) -> Result<Self> {
        RadiusSet::intervals(vec![(0.0, f64::INFINITY)], window)
    }

    /// Marks the set as known only inside its window.
    pub fn window_only(mut self) -> Self {
        self.complete = false;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        validate_window(lo, hi)?;
        self.window = (lo, hi);
        Ok(self)
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    fn log_pieces(&self, ylo: f64, yhi: f64) -> Result<Vec<(f64, f64)>> {
        let pieces = match &self.form {
            Form::Finite(xs) => xs.iter().map(|x| (x.ln(), x.ln())).filter(|p| p.1 >= ylo && p.0 <= yhi).collect(),
            Form::Intervals(iv) => {
                merge(iv.iter().map(|(l, u)| (l.ln(), u.ln())).collect()).into_iter().filter(|p| p.1 >= ylo && p.0 <= yhi).collect()
            }
            Form::Family(f) => merge(f.log_pieces(ylo, yhi)?),
        };
        if self.complete {
            Ok(pieces)
        } else {
            let (wl, wh) = (self.window.0.ln(), self.window.1.ln());
            Ok(pieces.into_iter().filter(|&(u, v)| v >= wl && u <= wh).map(|(u, v)| (u.max(wl), v.min(wh))).collect())
        }
    }

    /// `sup (ln A ∩ (−∞, y))`, searching outwards.
    fn log_pred(&self, y: f64) -> Result<Option<f64>> {
        let mut d = 1.0;
        while d <= 1e6 {
            let ps = self.log_pieces(y - d, y)?;
            if let Some(best) = ps.iter().filter(|p| p.0 < y).map(|p| p.1.min(y)).reduce(f64::max) {
                return Ok(Some(best));
            }
            d *= 4.0;
        }
        Ok(None)
    }

    /// `inf (ln A ∩ (y, ∞))`.
    fn log_succ(&self, y: f64) -> Result<Option<f64>> {
        let mut d = 1.0;
        while d <= 1e6 {
            let ps = self.log_pieces(y, y + d)?;
            if let Some(best) = ps.iter().filter(|p| p.1 > y).map(|p| p.0.max(y)).reduce(f64::min) {
                return Ok(Some(best));
            }
            d *= 4.0;
        }
        Ok(None)
    }

    pub fn contains(&self, r: f64) -> bool {
        if !(r > 0.0) {
            return false;
        }
        let y = r.ln();
        self.log_pieces(y, y).is_ok_and(|ps| ps.iter().any(|p| p.0 <= y && y <= p.1))
    }

    /// Whether `A ∩ (a, b) = ∅`, allowing overlaps below relative size 1e-9
    /// (log endpoints computed by different routes can differ by rounding).
    pub fn avoids(&self, a: f64, b: f64) -> Result<bool> {
        let (la, lb) = (a.ln(), b.ln());
        let tol = 1e-9 * la.abs().max(lb.abs()).max(1.0);
        Ok(self.log_pieces(la, lb)?.iter().all(|p| p.1 <= la + tol || p.0 >= lb - tol))
    }

    /// Radii of `A ∩ [lo, hi]`: every isolated element, and `per_piece`
    /// log-spaced radii (ends included) in each nondegenerate piece.
    pub fn sample_radii(&self, lo: f64, hi: f64, per_piece: usize) -> Result<Vec<f64>> {
        let (yl, yh) = (lo.ln(), hi.ln());
        let mut out = Vec::new();
        for (u, v) in self.log_pieces(yl, yh)? {
            let (u, v) = (u.max(yl), v.min(yh));
            if v - u <= 0.0 || per_piece < 2 {
                out.push(u.exp());
            } else {
                out.extend((0..per_piece).map(|i| (u + (v - u) * i as f64 / (per_piece - 1) as f64).exp()));
            }
        }
        Ok(out)
    }

    /// The gaps of `ln A` meeting the window.
    pub fn window_gaps(&self) -> Result<Vec<LogGap>> {
        let (ylo, yhi) = (self.window.0.ln(), self.window.1.ln());
        let pieces = self.log_pieces(ylo, yhi)?;
        let mut gaps = Vec::new();
        let known = self.complete;
        match (pieces.first(), pieces.last()) {
            (None, _) | (_, None) => {
                if known {
                    let lo = self.log_pred(ylo)?.unwrap_or(f64::NEG_INFINITY);
                    let hi = self.log_succ(yhi)?.unwrap_or(f64::INFINITY);
                    gaps.push(LogGap { lo, hi, lo_known: true, hi_known: true });
                } else {
                    gaps.push(LogGap { lo: ylo, hi: yhi, lo_known: false, hi_known: false });
                }
            }
            (Some(first), Some(last)) => {
                if first.0 > ylo {
                    if known {
                        let lo = self.log_pred(ylo)?.unwrap_or(f64::NEG_INFINITY);
                        gaps.push(LogGap { lo, hi: first.0, lo_known: true, hi_known: true });
                    } else {
                        gaps.push(LogGap { lo: ylo, hi: first.0, lo_known: false, hi_known: true });
                    }
                }
                for w in pieces.windows(2) {
                    gaps.push(LogGap { lo: w[0].1, hi: w[1].0, lo_known: true, hi_known: true });
                }
                if last.1 < yhi {
                    if known {
                        let hi = self.log_succ(yhi)?.unwrap_or(f64::INFINITY);
                        gaps.push(LogGap { lo: last.1, hi, lo_known: true, hi_known: true });
                    } else {
                        gaps.push(LogGap { lo: last.1, hi: yhi, lo_known: true, hi_known: false });
                    }
                }
            }
        }
        Ok(gaps)
    }

    /// Smallest `C` with `[x/C, x] ∩ A ≠ ∅` for every window point `x`
    /// (an infimum; `1` when `A` covers the window).
    pub fn gap_constant(&self) -> Result<f64> {
        Ok(self.window_values()?.0)
    }

    /// Covering radius of `ln(window)` by `ln A`: `ln A` is an ε-net of the
    /// window for every `ε > ε*`.
    pub fn log_eps_net(&self) -> Result<f64> {
        Ok(self.window_values()?.1)
    }

    fn window_values(&self) -> Result<(f64, f64, Vec<String>)> {
        let (ylo, yhi) = (self.window.0.ln(), self.window.1.ln());
        let gaps = self.window_gaps()?;
        let mut caveats = Vec::new();
        let mut log_c: f64 = 0.0;
        let mut eps: f64 = 0.0;
        for g in &gaps {
            if g.lo_known {
                log_c = log_c.max(g.hi.min(yhi) - g.lo);
            } else if !g.hi_known {
                log_c = f64::INFINITY;
                caveats.push("window-limited: no element of the set is known inside the window".to_string());
            } else {
                caveats.push(format!("window-limited: no element known below {:e}; x below it were not scored", g.hi.exp()));
            }
            eps = eps.max(g.cover(ylo, yhi));
        }
        if log_c.is_infinite() {
            eps = f64::INFINITY;
        }
        Ok((log_c.exp(), eps, caveats))
    }

    /// Window porosity data plus asymptotic values when the set is fully
    /// known. Each window quantity is evaluated at gap endpoints, where
    /// `l(h, A)/h` attains its window supremum.
    pub fn porosity(&self) -> Result<PorosityEstimate> {
        let (ylo, yhi) = (self.window.0.ln(), self.window.1.ln());
        let ymid = 0.5 * (ylo + yhi);
        let (mut low, mut high): (f64, f64) = (0.0, 0.0);
        for g in self.window_gaps()? {
            let (a, b) = g.effective(ylo, yhi);
            let len = b - a;
            if a < ymid {
                low = low.max(len);
            }
            if b > ymid {
                high = high.max(len);
            }
        }
        let asym = self.asymptotics();
        Ok(PorosityEstimate {
            p0_window: -(-low).exp_m1(),
            i0_window: low.exp_m1(),
            i_inf_window: high.exp_m1(),
            p0: asym.map(|a| -(-a.end_log_gaps.0).exp_m1()),
            i0: asym.map(|a| a.end_log_gaps.0.exp_m1()),
            i_inf: asym.map(|a| a.end_log_gaps.1.exp_m1()),
        })
    }

    fn asymptotics(&self) -> Option<Asymptotics> {
        if !self.complete {
            return None;
        }
        Some(match &self.form {
            Form::Finite(_) => {
                Asymptotics { sup_gap_ratio: f64::INFINITY, sup_log_gap: f64::INFINITY, end_log_gaps: (f64::INFINITY, f64::INFINITY) }
            }
            Form::Intervals(iv) => {
                let pieces = merge(iv.iter().map(|(l, u)| (l.ln(), u.ln())).collect());
                let at_zero = pieces.first().is_some_and(|p| p.0 == f64::NEG_INFINITY);
                let at_inf = pieces.last().is_some_and(|p| p.1 == f64::INFINITY);
                let (mut ratio, mut log_gap): (f64, f64) = (1.0, 0.0);
                for w in pieces.windows(2) {
                    ratio = ratio.max(w[1].0.exp() / w[0].1.exp());
                    log_gap = log_gap.max(w[1].0 - w[0].1);
                }
                if !(at_zero && at_inf) {
                    ratio = f64::INFINITY;
                    log_gap = f64::INFINITY;
                }
                let end = |covered: bool| if covered { 0.0 } else { f64::INFINITY };
                Asymptotics { sup_gap_ratio: ratio, sup_log_gap: log_gap, end_log_gaps: (end(at_zero), end(at_inf)) }
            }
            Form::Family(f) => {
                Asymptotics { sup_gap_ratio: f.sup_gap_ratio(), sup_log_gap: f.sup_log_gap(), end_log_gaps: f.end_log_gaps() }
            }
        })
    }

    /// Verdicts for favorability on all open sets (three routes, which must
    /// agree) and on bounded domains.
    pub fn classify(&self) -> Result<Classification> {
        let (c_w, eps_w, mut caveats) = self.window_values()?;
        let por = self.porosity()?;
        let gaps = self.window_gaps()?.len();
        let asym = self.asymptotics();

        let gap_route = Verdict::from_finite(asym.map(|a| a.sup_gap_ratio));
        let eps_route = Verdict::from_finite(asym.map(|a| a.sup_log_gap));
        let index_route = Verdict::from_finite(asym.map(|a| a.end_log_gaps.0.max(a.end_log_gaps.1)));
        if gap_route != eps_route || eps_route != index_route {
            return Err(Error::Internal(format!(
                "favorability criteria disagree: gap constant {gap_route:?}, ε-net {eps_route:?}, porosity indices {index_route:?}"
            )));
        }
        let bounded = Verdict::from_finite(asym.map(|a| a.end_log_gaps.0));
        if asym.is_none() {
            caveats.push("window-limited: the set is only known on its window, so no asymptotic verdict".to_string());
        }

        let pick = |a: Option<f64>, w: f64| Real(a.unwrap_or(w));
        Ok(Classification {
            favorable_all_open: gap_route,
            favorable_bounded: bounded,
            gap_constant: pick(asym.map(|a| a.sup_gap_ratio), c_w),
            eps_star: pick(asym.map(|a| 0.5 * a.sup_log_gap), eps_w),
            p0: pick(por.p0, por.p0_window),
            i0: pick(por.i0, por.i0_window),
            i_inf: pick(por.i_inf, por.i_inf_window),
            window: WindowSummary {
                lo: Real(self.window.0),
                hi: Real(self.window.1),
                gap_constant: Real(c_w),
                eps_star: Real(eps_w),
                p0: Real(por.p0_window),
                i0: Real(por.i0_window),
                i_inf: Real(por.i_inf_window),
                gaps,
            },
            evidence: Evidence { gap_constant_route: gap_route, eps_net_route: eps_route, porosity_index_route: index_route },
            caveats,
        })
    }

    /// `{α·x^β : x ∈ A}` with the window mapped the same way.
    pub fn rescale(&self, alpha: f64, beta: f64) -> Result<RadiusSet> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid("rescaling needs α, β > 0"));
        }
        let map = |x: f64| alpha * x.powf(beta);
        let form = match &self.form {
            Form::Finite(xs) => Form::Finite(xs.iter().map(|x| map(*x)).collect()),
            Form::Intervals(iv) => Form::Intervals(iv.iter().map(|(l, u)| (map(*l), map(*u))).collect()),
            Form::Family(f) => Form::Family(f.rescaled(alpha, beta)),
        };
        let window = (map(self.window.0), map(self.window.1));
        validate_window(window.0, window.1)?;
        Ok(RadiusSet { form, window, complete: self.complete })
    }
}

/// JSON form: `{form, window, elements | intervals | family, complete?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSetDoc {
    pub form: FormName,
    pub window: [Decimal; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<Decimal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[Decimal; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Finite,
    Intervals,
    Family,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum FamilyDoc {
    Geometric { c: Decimal, q: Decimal },
    Blocks { alpha: Decimal, beta: Decimal },
    SuperGeometric { p: Decimal },
    GapComplement { base: Decimal, divisor: Decimal, exponent: Decimal, ratio_factor: Decimal, m_start: usize },
    Rescaled { inner: Box<FamilyDoc>, alpha: Decimal, beta: Decimal },
}

impl FamilyDoc {
    pub fn build(&self) -> Family {
        match self {
            FamilyDoc::Geometric { c, q } => Family::Geometric { c: c.0, q: q.0 },
            FamilyDoc::Blocks { alpha, beta } => Family::Blocks { alpha: alpha.0, beta: beta.0 },
            FamilyDoc::SuperGeometric { p } => Family::SuperGeometric { p: p.0 },
            FamilyDoc::GapComplement { base, divisor, exponent, ratio_factor, m_start } => Family::GapComplement {
                law: GapLaw { base: base.0, divisor: divisor.0, exponent: exponent.0, ratio_factor: ratio_factor.0 },
                m_start: *m_start,
            },
            FamilyDoc::Rescaled { inner, alpha, beta } => Family::Rescaled { inner: Box::new(inner.build()), alpha: alpha.0, beta: beta.0 },
        }
    }

    pub fn from_family(f: &Family) -> Self {
        match f {
            Family::Geometric { c, q } => FamilyDoc::Geometric { c: Decimal(*c), q: Decimal(*q) },
            Family::Blocks { alpha, beta } => FamilyDoc::Blocks { alpha: Decimal(*alpha), beta: Decimal(*beta) },
            Family::SuperGeometric { p } => FamilyDoc::SuperGeometric { p: Decimal(*p) },
            Family::GapComplement { law, m_start } => FamilyDoc::GapComplement {
                base: Decimal(law.base),
                divisor: Decimal(law.divisor),
                exponent: Decimal(law.exponent),
                ratio_factor: Decimal(law.ratio_factor),
                m_start: *m_start,
            },
            Family::Rescaled { inner, alpha, beta } => {
                FamilyDoc::Rescaled { inner: Box::new(FamilyDoc::from_family(inner)), alpha: Decimal(*alpha), beta: Decimal(*beta) }
            }
        }
    }
}

impl RadiusSetDoc {
    pub fn build(&self) -> Result<RadiusSet> {
        let window = (self.window[0].0, self.window[1].0);
        let set = match self.form {
            FormName::Finite => {
                let e = self.elements.as_ref().ok_or_else(|| Error::invalid("finite radius set needs `elements`"))?;
                if e.is_empty() {
                    return Err(Error::invalid("finite radius set has no elements"));
                }
                RadiusSet::finite(e.iter().map(|d| d.0).collect(), window)?
            }
            FormName::Intervals => {
                let iv = self.intervals.as_ref().ok_or_else(|| Error::invalid("interval radius set needs `intervals`"))?;
                if iv.is_empty() {
                    return Err(Error::invalid("interval radius set has no intervals"));
                }
                RadiusSet::intervals(iv.iter().map(|[l, u]| (l.0, u.0)).collect(), window)?
            }
            FormName::Family => {
                let f = self.family.as_ref().ok_or_else(|| Error::invalid("family radius set needs `family`"))?;
                RadiusSet::family(f.build(), window)?
            }
        };
        Ok(if self.complete == Some(false) { set.window_only() } else { set })
    }

    pub fn from_set(set: &RadiusSet) -> Self {
        let window = [Decimal(set.window.0), Decimal(set.window.1)];
        let complete = (!set.complete).then_some(false);
        match &set.form {
            Form::Finite(xs) => RadiusSetDoc {
                form: FormName::Finite,
                window,
                elements: Some(xs.iter().copied().map(Decimal).collect()),
                intervals: None,
                family: None,
                complete,
            },
            Form::Intervals(iv) => RadiusSetDoc {
                form: FormName::Intervals,
                window,
                elements: None,
                intervals: Some(iv.iter().map(|(l, u)| [Decimal(*l), Decimal(*u)]).collect()),
                family: None,
                complete,
            },
            Form::Family(f) => RadiusSetDoc {
                form: FormName::Family,
                window,
                elements: None,
                intervals: None,
                family: Some(FamilyDoc::from_family(f)),
                complete,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn powers_of_two() -> RadiusSet {
        RadiusSet::family(Family::Geometric { c: 1.0, q: 2.0 }, (0.01, 100.0)).unwrap()
    }

    fn e_minus_m_squared() -> RadiusSet {
        RadiusSet::family(Family::SuperGeometric { p: 2.0 }, ((-16f64).exp(), 1.0)).unwrap()
    }

    fn blocks() -> RadiusSet {
        RadiusSet::family(Family::Blocks { alpha: 2.0, beta: 0.25 }, (1e-6, 1.0)).unwrap()
    }

    #[test]
    fn gap_constant_examples() {
        assert!((powers_of_two().gap_constant().unwrap() - 2.0).abs() < 1e-12);
        let all = RadiusSet::everything((0.01, 100.0)).unwrap();
        assert_eq!(all.gap_constant().unwrap(), 1.0);
        let c = e_minus_m_squared().gap_constant().unwrap();
        assert!((c - 7f64.exp()).abs() < 1e-9 * c, "{c}");
        assert!((c - 1096.63).abs() < 0.01);
    }

    #[test]
    fn eps_net_examples() {
        assert!((powers_of_two().log_eps_net().unwrap() - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(RadiusSet::everything((0.01, 100.0)).unwrap().log_eps_net().unwrap(), 0.0);
        for a in [powers_of_two(), e_minus_m_squared(), blocks()] {
            assert!(a.gap_constant().unwrap().ln() >= a.log_eps_net().unwrap() - 1e-12);
        }
    }

    #[test]
    fn porosity_examples() {
        let p = blocks().porosity().unwrap();
        assert!((p.p0_window - 0.5).abs() < 1e-12 && (p.i0_window - 1.0).abs() < 1e-12);
        assert!((p.p0.unwrap() - 0.5).abs() < 1e-12 && (p.i0.unwrap() - 1.0).abs() < 1e-12);
        let p = RadiusSet::everything((0.01, 100.0)).unwrap().porosity().unwrap();
        assert_eq!((p.p0_window, p.i0_window, p.p0, p.i0), (0.0, 0.0, Some(0.0), Some(0.0)));
        let p = e_minus_m_squared().porosity().unwrap();
        assert_eq!((p.p0, p.i0), (Some(1.0), Some(f64::INFINITY)));
        assert!(p.p0_window > 0.999);
    }

    #[test]
    fn window_identity_between_porosity_and_index() {
        for a in [powers_of_two(), e_minus_m_squared(), blocks(), RadiusSet::everything((0.1, 10.0)).unwrap()] {
            let p = a.porosity().unwrap();
            if p.p0_window < 1.0 {
                let rhs = p.p0_window / (1.0 - p.p0_window);
                assert!((p.i0_window - rhs).abs() <= 1e-9 * rhs.max(1.0), "{p:?}");
            }
        }
    }

    #[test]
    fn classify_examples() {
        let c = powers_of_two().classify().unwrap();
        assert_eq!((c.favorable_all_open, c.favorable_bounded), (Verdict::Yes, Verdict::Yes));
        assert!((c.p0.0 - 0.5).abs() < 1e-12 && (c.gap_constant.0 - 2.0).abs() < 1e-12);
        let half_line = RadiusSet::intervals(vec![(0.0, 1.0)], (0.001, 1000.0)).unwrap().classify().unwrap();
        assert_eq!((half_line.favorable_all_open, half_line.favorable_bounded), (Verdict::No, Verdict::Yes));
        assert_eq!(half_line.p0.0, 0.0);
        let sg = e_minus_m_squared().classify().unwrap();
        assert_eq!((sg.favorable_all_open, sg.favorable_bounded), (Verdict::No, Verdict::No));
        assert_eq!(sg.p0.0, 1.0);
        let fin = RadiusSet::finite(vec![1.0, 2.0], (0.5, 4.0)).unwrap().classify().unwrap();
        assert_eq!(fin.favorable_all_open, Verdict::No);
        let sampled = RadiusSet::intervals(vec![(0.5, 2.0)], (0.1, 10.0)).unwrap().window_only().classify().unwrap();
        assert_eq!(sampled.favorable_all_open, Verdict::WindowLimited);
        assert!(!sampled.caveats.is_empty());
    }

    #[test]
    fn rescale_examples() {
        let a = powers_of_two();
        assert_eq!(a.rescale(1.0, 1.0).unwrap().classify().unwrap(), a.classify().unwrap());
        let sq = a.rescale(1.0, 2.0).unwrap();
        assert!((sq.gap_constant().unwrap() - 4.0).abs() < 1e-9);
        assert!(sq.contains(16.0) && sq.contains(0.25) && !sq.contains(2.0));
        for (al, be) in [(0.5, 0.5), (3.0, 2.0), (1.0, 0.5)] {
            assert_eq!(e_minus_m_squared().rescale(al, be).unwrap().classify().unwrap().favorable_all_open, Verdict::No);
        }
    }

    #[test]
    fn counterexample_complement_structure() {
        let law = GapLaw::counterexample(3);
        let a = RadiusSet::family(Family::GapComplement { law, m_start: 1 }, (1e-40, 10.0)).unwrap();
        for m in 1..6 {
            assert!(a.avoids(law.a(m), law.b(m)).unwrap(), "m = {m}");
            assert!(a.contains(law.a(m)) && a.contains(law.b(m)));
            assert!(!a.contains((law.ln_a(m) + 0.5 * law.ln_ratio(m)).exp()));
        }
        assert!(a.contains(5.0));
        let c = a.classify().unwrap();
        assert_eq!(c.favorable_all_open, Verdict::No);
        assert_eq!(c.i0.0, f64::INFINITY);
        assert!(GapLaw::counterexample(3).b(2) < GapLaw::counterexample(3).a(1));
    }

    #[test]
    fn json_round_trip() {
        let docs = [
            r#"{"form": "finite", "window": ["0.5", "8"], "elements": ["1", "2", "4"]}"#,
            r#"{"form": "intervals", "window": ["1e-3", "1e3"], "intervals": [["0", "1"], ["2", "inf"]]}"#,
            r#"{"form": "family", "window": ["0.01", "100"], "family": {"name": "geometric", "params": {"c": "1", "q": "2"}}}"#,
            r#"{"form": "family", "window": ["1e-9", "1"], "family": {"name": "rescaled", "params":
                {"inner": {"name": "blocks", "params": {"alpha": "2", "beta": "0.25"}}, "alpha": "3", "beta": "0.5"}}}"#,
        ];
        for d in docs {
            let doc: RadiusSetDoc = serde_json::from_str(d).unwrap();
            let set = doc.build().unwrap();
            let back: RadiusSetDoc = serde_json::from_str(&serde_json::to_string(&RadiusSetDoc::from_set(&set)).unwrap()).unwrap();
            assert_eq!(back.build().unwrap(), set);
        }
        let empty: RadiusSetDoc = serde_json::from_str(r#"{"form": "finite", "window": ["1", "2"], "elements": []}"#).unwrap();
        assert!(empty.build().is_err());
    }

    fn finite_set() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..30).prop_map(|v| v.into_iter().map(f64::exp).collect())
    }

    proptest! {
        #[test]
        fn more_elements_never_hurt(base in finite_set(), extra in finite_set()) {
            let w = ((-4.0f64).exp(), 4f64.exp());
            let a = RadiusSet::finite(base.clone(), w).unwrap();
            let b = RadiusSet::finite(base.into_iter().chain(extra).collect(), w).unwrap();
            prop_assert!(b.gap_constant().unwrap() <= a.gap_constant().unwrap() * (1.0 + 1e-12));
            prop_assert!(b.porosity().unwrap().p0_window <= a.porosity().unwrap().p0_window + 1e-12);
        }

        #[test]
        fn net_radius_and_gap_constant_agree(base in finite_set()) {
            let w = ((-4.0f64).exp(), 4f64.exp());
            let a = RadiusSet::finite(base, w).unwrap();
            let (c, eps) = (a.gap_constant().unwrap(), a.log_eps_net().unwrap());
            prop_assert_eq!(c.is_finite(), eps.is_finite());
            prop_assert!(eps <= c.ln() + 1e-12);
            let (ylo, yhi) = (w.0.ln(), w.1.ln());
            let gaps = a.window_gaps().unwrap();
            let edge = gaps.iter().filter(|g| g.lo < ylo || g.hi > yhi).map(|g| g.hi - g.lo).fold(0.0, f64::max);
            prop_assert!(c.ln() <= 2.0 * eps + edge + 1e-12);
        }

        #[test]
        fn window_identity(base in finite_set()) {
            let a = RadiusSet::finite(base, ((-4.0f64).exp(), 4f64.exp())).unwrap().window_only();
            let p = a.porosity().unwrap();
            prop_assume!(p.p0_window < 1.0);
            let rhs = p.p0_window / (1.0 - p.p0_window);
            prop_assert!((p.i0_window - rhs).abs() <= 1e-9 * rhs.max(1.0));
        }
    }
}
