//! Affine maps, iterated function systems and their JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vec2};

/// `f(x) = A x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Matrix2,
    pub t: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        a: Matrix2::IDENTITY,
        t: Vec2::ZERO,
    };

    pub fn new(a: Matrix2, t: Vec2) -> Self {
        AffineMap { a, t }
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        self.a.apply(x) + self.t
    }

    /// `self ∘ g`.
    pub fn compose(&self, g: &AffineMap) -> AffineMap {
        AffineMap {
            a: self.a * g.a,
            t: self.a.apply(g.t) + self.t,
        }
    }

    /// Fixed point `(I − A)⁻¹ t`.
    pub fn fixed_point(&self) -> Vec2 {
        let m = Matrix2::new(1.0 - self.a.a11, -self.a.a12, -self.a.a21, 1.0 - self.a.a22);
        let d = m.det();
        Vec2::new(
            (m.a22 * self.t.x - m.a12 * self.t.y) / d,
            (-m.a21 * self.t.x + m.a11 * self.t.y) / d,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StructureTag {
    #[default]
    General,
    Diagonal,
    LowerTriangular,
}

/// A planar IFS of contracting affinities with a verified bounding ball `B(c, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
    radius: f64,
    center: Vec2,
    tag: StructureTag,
}

impl IfsSystem {
    /// Validates the maps; `radius = None` picks the smallest admissible one.
    pub fn new(
        maps: Vec<AffineMap>,
        center: Vec2,
        radius: Option<f64>,
        tag: StructureTag,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidSystem("need at least two maps".into()));
        }
        if maps.len() > u16::MAX as usize {
            return Err(Error::InvalidSystem("alphabet too large".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            let finite = [m.a.a11, m.a.a12, m.a.a21, m.a.a22, m.t.x, m.t.y]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidSystem(format!(
                    "map {i} has non-finite entries"
                )));
            }
            m.a.check_nonsingular()?;
            let n = m.a.norm();
            if n >= 1.0 {
                return Err(Error::InvalidSystem(format!("map {i} has norm {n} ≥ 1")));
            }
            let bad_tag = match tag {
                StructureTag::General => false,
                StructureTag::Diagonal => m.a.a12 != 0.0 || m.a.a21 != 0.0,
                StructureTag::LowerTriangular => m.a.a12 != 0.0,
            };
            if bad_tag {
                return Err(Error::InvalidSystem(format!(
                    "map {i} does not match tag {tag:?}"
                )));
            }
        }
        let mut sys = IfsSystem {
            maps,
            radius: 0.0,
            center,
            tag,
        };
        let rmin = sys.minimal_radius(center);
        let radius = radius.unwrap_or(rmin * (1.0 + 1e-9));
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidSystem(format!("bad radius {radius}")));
        }
        sys.radius = radius;
        let worst = sys.ball_excess();
        if worst > 1e-12 * radius {
            return Err(Error::InvalidSystem(format!(
                "ball of radius {radius} is not mapped into itself (excess {worst:e})"
            )));
        }
        Ok(sys)
    }

    /// Smallest `R` with `f_i(B(c, R)) ⊆ B(c, R)` for every map.
    pub fn minimal_radius_about(maps: &[AffineMap], c: Vec2) -> f64 {
        maps.iter()
            .map(|m| (m.apply(c) - c).norm() / (1.0 - m.a.norm()))
            .fold(0.0, f64::max)
    }

    pub fn minimal_radius(&self, c: Vec2) -> f64 {
        IfsSystem::minimal_radius_about(&self.maps, c)
    }

    /// `max_i (‖A_i‖R + ‖f_i(c) − c‖) − R`.
    pub fn ball_excess(&self) -> f64 {
        let c = self.center;
        self.maps
            .iter()
            .map(|m| m.a.norm() * self.radius + (m.apply(c) - c).norm() - self.radius)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &AffineMap {
        &self.maps[i]
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn tag(&self) -> StructureTag {
        self.tag
    }

    /// `|X|`, taken as the diameter `2R` of the bounding ball.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn matrices(&self) -> Vec<Matrix2> {
        self.maps.iter().map(|m| m.a).collect()
    }

    pub fn transposes(&self) -> Vec<Matrix2> {
        self.maps.iter().map(|m| m.a.transpose()).collect()
    }

    /// All maps share one fixed point, so the attractor is a single point.
    pub fn is_singleton(&self) -> bool {
        let p = self.maps[0].fixed_point();
        let scale = 1.0 + p.norm();
        self.maps
            .iter()
            .all(|m| (m.fixed_point() - p).norm() <= 1e-12 * scale)
    }

    /// The same system with every translation and the centre moved by `d`.
    pub fn translated(&self, d: Vec2) -> Result<IfsSystem> {
        let maps = self
            .maps
            .iter()
            .map(|m| AffineMap::new(m.a, m.t + d - m.a.apply(d)))
            .collect();
        IfsSystem::new(maps, self.center + d, Some(self.radius), self.tag)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serialises")
    }

    pub fn from_json(s: &str) -> Result<IfsSystem> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A JSON number, or a string holding a decimal or a fraction such as `"1/3"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Float(v) => Ok(*v),
            Num::Text(s) => parse_number(s),
        }
    }
}

/// Parses `"p/q"` or a plain decimal.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapDoc {
    pub a: [[Num; 2]; 2],
    pub t: [Num; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    pub maps: Vec<MapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[Num; 2]>,
    #[serde(default)]
    pub tag: StructureTag,
}

impl TryFrom<SystemDoc> for IfsSystem {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<IfsSystem> {
        let maps = doc
            .maps
            .iter()
            .map(|m| {
                Ok(AffineMap::new(
                    Matrix2::new(
                        m.a[0][0].value()?,
                        m.a[0][1].value()?,
                        m.a[1][0].value()?,
                        m.a[1][1].value()?,
                    ),
                    Vec2::new(m.t[0].value()?, m.t[1].value()?),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let center = match &doc.center {
            Some([x, y]) => Vec2::new(x.value()?, y.value()?),
            None => Vec2::ZERO,
        };
        let radius = doc.radius.as_ref().map(Num::value).transpose()?;
        IfsSystem::new(maps, center, radius, doc.tag)
    }
}

impl From<IfsSystem> for SystemDoc {
    fn from(sys: IfsSystem) -> SystemDoc {
        let f = Num::Float;
        SystemDoc {
            maps: sys
                .maps
                .iter()
                .map(|m| MapDoc {
                    a: [[f(m.a.a11), f(m.a.a12)], [f(m.a.a21), f(m.a.a22)]],
                    t: [f(m.t.x), f(m.t.y)],
                })
                .collect(),
            radius: Some(f(sys.radius)),
            center: Some([f(sys.center.x), f(sys.center.y)]),
            tag: sys.tag,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_maps() -> Vec<AffineMap> {
        vec![
            AffineMap::new(Matrix2::diag(0.5, 1.0 / 3.0), Vec2::ZERO),
            AffineMap::new(Matrix2::diag(0.5, 1.0 / 3.0), Vec2::new(0.5, 0.0)),
        ]
    }

    #[test]
    fn rational_strings_parse() {
        assert_eq!(parse_number("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_number(" -2 / 10 ").unwrap(), -0.2);
        assert_eq!(parse_number("0.125").unwrap(), 0.125);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn json_with_fractions() {
        let doc = r#"{"maps":[{"a":[["1/3",0],[0,"1/5"]],"t":[0,0]},
                               {"a":[["1/3",0],[0,"1/5"]],"t":["2/3","4/5"]}],
                      "tag":"diagonal"}"#;
        let sys = IfsSystem::from_json(doc).unwrap();
        assert_eq!(sys.len(), 2);
        assert_eq!(sys.map(1).t, Vec2::new(2.0 / 3.0, 0.8));
        assert_eq!(sys.tag(), StructureTag::Diagonal);
        assert!(sys.ball_excess() <= 0.0);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut maps = two_maps();
        maps[1].a = Matrix2::new(0.1 + 0.2, 1e-17, -1.0 / 7.0, 0.3);
        let sys =
            IfsSystem::new(maps, Vec2::new(0.1, 1.0 / 3.0), None, StructureTag::General).unwrap();
        let back = IfsSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(sys, back);
        for (a, b) in sys.maps().iter().zip(back.maps()) {
            assert_eq!(a.a.a12.to_bits(), b.a.a12.to_bits());
            assert_eq!(a.a.a21.to_bits(), b.a.a21.to_bits());
        }
        assert_eq!(sys.radius().to_bits(), back.radius().to_bits());
    }

    #[test]
    fn rejects_bad_systems() {
        let mut maps = two_maps();
        maps[0].a = Matrix2::diag(1.0, 0.5);
        assert!(IfsSystem::new(maps, Vec2::ZERO, None, StructureTag::General).is_err());
        let mut maps = two_maps();
        maps[0].a = Matrix2::new(0.5, 0.5, 0.25, 0.25);
        assert!(matches!(
            IfsSystem::new(maps, Vec2::ZERO, None, StructureTag::General),
            Err(Error::SingularMatrix { .. })
        ));
        let mut maps = two_maps();
        maps[0].a = Matrix2::new(0.5, 0.1, 0.0, 0.3);
        assert!(IfsSystem::new(maps, Vec2::ZERO, None, StructureTag::LowerTriangular).is_err());
        assert!(IfsSystem::new(two_maps(), Vec2::ZERO, Some(0.1), StructureTag::Diagonal).is_err());
        assert!(IfsSystem::new(
            two_maps()[..1].to_vec(),
            Vec2::ZERO,
            None,
            StructureTag::General
        )
        .is_err());
    }

    #[test]
    fn fixed_points_and_composition() {
        let f = AffineMap::new(Matrix2::new(0.2, 0.1, 0.1, 0.2), Vec2::new(0.5, 0.2));
        let p = f.fixed_point();
        assert!((f.apply(p) - p).norm() < 1e-15);
        let g = AffineMap::new(Matrix2::diag(0.5, 0.25), Vec2::new(1.0, -1.0));
        let x = Vec2::new(0.3, -0.7);
        assert!((f.compose(&g).apply(x) - f.apply(g.apply(x))).norm() < 1e-15);
    }

    #[test]
    fn translation_moves_everything() {
        let sys = IfsSystem::new(
            two_maps(),
            Vec2::new(0.5, 0.0),
            None,
            StructureTag::Diagonal,
        )
        .unwrap();
        let d = Vec2::new(3.0, -2.0);
        let moved = sys.translated(d).unwrap();
        for (a, b) in sys.maps().iter().zip(moved.maps()) {
            assert!((a.fixed_point() + d - b.fixed_point()).norm() < 1e-14);
        }
    }
}
