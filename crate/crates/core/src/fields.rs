//! Nonnegative fields `u: Ω → [0, ∞)`.

use crate::error::{Error, Result};
use crate::geometry::{Point, Similarity};
use crate::num::{decimals, floats, Decimal};
use crate::regions::{Region, RegionDoc};
use serde::{Deserialize, Serialize};

/// The pointwise rule of a field, independent of its domain.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// `χ_X`.
    Indicator(Region),
    /// `c + (x² − y²)/s`, harmonic in every dimension.
    Harmonic {
        c: f64,
        s: f64,
    },
    /// `height · (1 − |x − center|²/radius²)₊`.
    RadialBump {
        center: Point,
        radius: f64,
        height: f64,
    },
    /// `Σ wᵢ uᵢ` with `wᵢ ≥ 0`.
    Sum(Vec<(f64, FieldKind)>),
    /// `u ∘ h`.
    Pullback(Box<FieldKind>, Similarity),
}

impl FieldKind {
    #[inline]
    pub(crate) fn value(&self, p: &Point) -> f64 {
        match self {
            FieldKind::Constant(c) => *c,
            FieldKind::Indicator(x) => f64::from(u8::from(x.contains(p))),
            FieldKind::Harmonic { c, s } => c + (p.x() * p.x() - p.y() * p.y()) / s,
            FieldKind::RadialBump { center, radius, height } => {
                let q = (*p - *center).dot(&(*p - *center)) / (radius * radius);
                height * (1.0 - q).max(0.0)
            }
            FieldKind::Sum(terms) => terms.iter().map(|(w, k)| w * k.value(p)).sum(),
            FieldKind::Pullback(inner, h) => inner.value(&h.map(*p)),
        }
    }

    pub fn is_indicator(&self) -> bool {
        match self {
            FieldKind::Indicator(_) => true,
            FieldKind::Pullback(inner, _) => inner.is_indicator(),
            _ => false,
        }
    }

    /// Whether a tensor grid would straddle jump discontinuities.
    pub(crate) fn has_jumps(&self) -> bool {
        match self {
            FieldKind::Indicator(_) => true,
            FieldKind::Sum(terms) => terms.iter().any(|(w, k)| *w != 0.0 && k.has_jumps()),
            FieldKind::Pullback(inner, _) => inner.has_jumps(),
            _ => false,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            FieldKind::Constant(c) => Some(*c),
            FieldKind::Sum(terms) => terms.iter().map(|(w, k)| k.constant_value().map(|c| w * c)).sum(),
            FieldKind::Pullback(inner, _) => inner.constant_value(),
            _ => None,
        }
    }

    /// Lower bound of the rule over an axis box, if one is cheap to state.
    fn lower_bound(&self, lo: &Point, hi: &Point) -> f64 {
        match self {
            FieldKind::Constant(c) => *c,
            FieldKind::Indicator(_) | FieldKind::RadialBump { .. } => 0.0,
            FieldKind::Harmonic { c, s } => {
                let sq_range = |a: f64, b: f64| {
                    let lo = if a <= 0.0 && 0.0 <= b { 0.0 } else { (a * a).min(b * b) };
                    (lo, (a * a).max(b * b))
                };
                let (x2, y2) = (sq_range(lo.x(), hi.x()), sq_range(lo.y(), hi.y()));
                if *s > 0.0 {
                    c + (x2.0 - y2.1) / s
                } else {
                    c + (x2.1 - y2.0) / s
                }
            }
            FieldKind::Sum(terms) => terms.iter().map(|(w, k)| w * k.lower_bound(lo, hi)).sum(),
            FieldKind::Pullback(..) => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FieldKind::Constant(c) if !(*c >= 0.0 && c.is_finite()) => {
                Err(Error::invalid(format!("constant field must be finite and nonnegative, got {c}")))
            }
            FieldKind::Harmonic { c, s } if !(c.is_finite() && s.is_finite() && *s != 0.0) => {
                Err(Error::invalid("harmonic field needs finite c and nonzero s"))
            }
            FieldKind::RadialBump { radius, height, .. } if !(*radius > 0.0 && *height >= 0.0) => {
                Err(Error::invalid("radial bump needs a positive radius and nonnegative height"))
            }
            FieldKind::Sum(terms) => {
                if terms.is_empty() {
                    return Err(Error::invalid("empty sum field"));
                }
                for (w, k) in terms {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(Error::invalid(format!("sum weights must be nonnegative, got {w}")));
                    }
                    k.validate()?;
                }
                Ok(())
            }
            FieldKind::Pullback(inner, _) => inner.validate(),
            _ => Ok(()),
        }
    }
}

/// A nonnegative field together with its open domain Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    kind: FieldKind,
    domain: Region,
}

impl Field {
    /// Validates parameters and checks `u ≥ 0` on the bounding box of Ω.
    pub fn new(kind: FieldKind, domain: Region) -> Result<Self> {
        kind.validate()?;
        let bb = domain.bounds();
        let low = kind.lower_bound(&bb.min, &bb.max);
        if low < 0.0 {
            return Err(Error::invalid(format!("field may take negative values on the domain (lower bound {low})")));
        }
        Ok(Field { kind, domain })
    }

    pub fn constant(value: f64, domain: Region) -> Result<Self> {
        Field::new(FieldKind::Constant(value), domain)
    }

    pub fn indicator(x: Region, domain: Region) -> Result<Self> {
        Field::new(FieldKind::Indicator(x), domain)
    }

    pub fn harmonic(c: f64, s: f64, domain: Region) -> Result<Self> {
        Field::new(FieldKind::Harmonic { c, s }, domain)
    }

    /// `u ∘ h` on `h⁻¹(Ω)`.
    pub fn pullback(&self, h: &Similarity) -> Result<Field> {
        Ok(Field { kind: FieldKind::Pullback(Box::new(self.kind.clone()), *h), domain: self.domain.image(&h.inverse())? })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn evaluate(&self, p: &Point) -> Result<f64> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { point: p.coords().to_vec() });
        }
        Ok(self.kind.value(p))
    }

    /// Evaluation without the domain check, for callers that have already
    /// established containment of a whole ball.
    #[inline]
    pub(crate) fn value_unchecked(&self, p: &Point) -> f64 {
        self.kind.value(p)
    }

    pub fn is_indicator(&self) -> bool {
        self.kind.is_indicator()
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.kind.constant_value()
    }
}

/// JSON form of a field rule: `{kind, params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FieldKindDoc {
    Constant { value: Decimal },
    Indicator { region: RegionDoc },
    Harmonic { c: Decimal, s: Decimal },
    RadialBump { center: Vec<Decimal>, radius: Decimal, height: Decimal },
    Sum { terms: Vec<TermDoc> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub weight: Decimal,
    pub field: FieldKindDoc,
}

impl FieldKindDoc {
    pub fn build(&self) -> Result<FieldKind> {
        Ok(match self {
            FieldKindDoc::Constant { value } => FieldKind::Constant(value.0),
            FieldKindDoc::Indicator { region } => FieldKind::Indicator(region.to_region()?),
            FieldKindDoc::Harmonic { c, s } => FieldKind::Harmonic { c: c.0, s: s.0 },
            FieldKindDoc::RadialBump { center, radius, height } => {
                FieldKind::RadialBump { center: Point::new(&floats(center))?, radius: radius.0, height: height.0 }
            }
            FieldKindDoc::Sum { terms } => FieldKind::Sum(terms.iter().map(|t| Ok((t.weight.0, t.field.build()?))).collect::<Result<_>>()?),
        })
    }

    pub fn from_kind(kind: &FieldKind) -> Result<Self> {
        Ok(match kind {
            FieldKind::Constant(c) => FieldKindDoc::Constant { value: Decimal(*c) },
            FieldKind::Indicator(x) => FieldKindDoc::Indicator { region: RegionDoc::from_region(x, None) },
            FieldKind::Harmonic { c, s } => FieldKindDoc::Harmonic { c: Decimal(*c), s: Decimal(*s) },
            FieldKind::RadialBump { center, radius, height } => {
                FieldKindDoc::RadialBump { center: decimals(center.coords()), radius: Decimal(*radius), height: Decimal(*height) }
            }
            FieldKind::Sum(terms) => FieldKindDoc::Sum {
                terms: terms
                    .iter()
                    .map(|(w, k)| Ok(TermDoc { weight: Decimal(*w), field: FieldKindDoc::from_kind(k)? }))
                    .collect::<Result<_>>()?,
            },
            FieldKind::Pullback(..) => return Err(Error::Unsupported("serializing pulled-back fields".into())),
        })
    }
}

/// A field with its domain, as stored in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub domain: RegionDoc,
    pub field: FieldKindDoc,
}

impl FieldDoc {
    pub fn build(&self) -> Result<Field> {
        Field::new(self.field.build()?, self.domain.to_region()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ball;

    fn disk(r: f64) -> Region {
        Region::ball(Point::xy(0.0, 0.0), r).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let one = Field::constant(1.0, disk(2.0)).unwrap();
        assert_eq!(one.evaluate(&Point::xy(0.3, -1.2)).unwrap(), 1.0);
        let x = Region::new(vec![crate::regions::Primitive::Ball(Ball::closed(Point::xy(0.0, 0.0), 1.0).unwrap())]).unwrap();
        let chi = Field::indicator(x, disk(2.0)).unwrap();
        assert_eq!(chi.evaluate(&Point::xy(0.5, 0.0)).unwrap(), 1.0);
        assert_eq!(chi.evaluate(&Point::xy(1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(chi.evaluate(&Point::xy(1.5, 0.0)).unwrap(), 0.0);
        assert!(matches!(chi.evaluate(&Point::xy(2.5, 0.0)), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn indicator_is_idempotent() {
        let chi = Field::indicator(disk(1.0), disk(2.0)).unwrap();
        for i in 0..400 {
            let p = Point::xy(-1.9 + 0.0095 * i as f64, 0.3);
            let v = chi.evaluate(&p).unwrap();
            assert_eq!(v * v, v);
        }
    }

    #[test]
    fn rejects_negative_fields() {
        // 1 + (x² − y²)/10 is negative at (0, 4).
        assert!(Field::harmonic(1.0, 10.0, disk(5.0)).is_err());
        assert!(Field::harmonic(1.0, 10.0, disk(2.0)).is_ok());
        assert!(Field::constant(-1.0, disk(1.0)).is_err());
    }

    #[test]
    fn pullback_composes() {
        let u = Field::harmonic(3.0, 10.0, disk(4.0)).unwrap();
        let h = Similarity::planar(0.5, 0.7, true, Point::xy(0.2, -0.1)).unwrap();
        let v = u.pullback(&h).unwrap();
        let p = Point::xy(1.0, 2.0);
        assert_eq!(v.evaluate(&p).unwrap(), u.evaluate(&h.map(p)).unwrap());
        assert!(v.domain().contains(&h.inverse().map(Point::xy(3.9, 0.0))));
    }

    #[test]
    fn json_round_trip() {
        let doc: FieldDoc = serde_json::from_str(
            r#"{"domain": {"dimension": 2, "primitives": [{"type": "ball", "center": ["0", "0"], "radius": "2"}]},
                "field": {"kind": "sum", "params": {"terms": [
                    {"weight": "1", "field": {"kind": "constant", "params": {"value": "0.5"}}},
                    {"weight": "2", "field": {"kind": "indicator", "params": {"region":
                        {"dimension": 2, "primitives": [{"type": "ball", "center": ["0", "0"], "radius": "1", "closed": true}]}}}}
                ]}}}"#,
        )
        .unwrap();
        let u = doc.build().unwrap();
        assert_eq!(u.evaluate(&Point::xy(0.0, 1.0)).unwrap(), 2.5);
        assert_eq!(u.evaluate(&Point::xy(0.0, 1.5)).unwrap(), 0.5);
        let back = FieldKindDoc::from_kind(u.kind()).unwrap();
        assert_eq!(back, doc.field);
    }
}
