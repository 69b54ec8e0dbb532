//! Built-in example systems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vec2};
use crate::system::{AffineMap, IfsSystem, StructureTag};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Six maps `diag(1/2, 1/3)` tiling the unit square by a 2×3 grid.
    Grid2x3,
    /// Five carpet maps `(x/3, y/5)` plus one symmetric shear.
    Figure1,
    /// Ten maps `diag(1/121, 1/3)` with separated translations.
    Ex1Diag,
    /// `N` lower-triangular maps `[[1/(N+1), 0], [b_i, 1/3]]`.
    Ex2Triangular(usize),
    /// Six copies of `diag(1/2, 1/3)` fixing `(1/2, 1/2)`.
    SingletonDegenerate,
}

/// A self-affine carpet on a `p × q` grid, digits `(column, row)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carpet {
    pub p: usize,
    pub q: usize,
    pub digits: Vec<(usize, usize)>,
}

pub const NAMES: [&str; 5] = [
    "grid-2x3",
    "figure1",
    "ex1-diag",
    "ex2-triangular",
    "singleton-degenerate",
];

impl Preset {
    /// `n` is only used by `ex2-triangular` (default 28).
    pub fn parse(name: &str, n: Option<usize>) -> Result<Preset> {
        match name {
            "grid-2x3" => Ok(Preset::Grid2x3),
            "figure1" => Ok(Preset::Figure1),
            "ex1-diag" => Ok(Preset::Ex1Diag),
            "ex2-triangular" => {
                let n = n.unwrap_or(28);
                if n < 2 {
                    return Err(Error::InvalidArgument("ex2-triangular needs N ≥ 2".into()));
                }
                Ok(Preset::Ex2Triangular(n))
            }
            "singleton-degenerate" => Ok(Preset::SingletonDegenerate),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset {name:?}; expected one of {}",
                NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Grid2x3 => "grid-2x3",
            Preset::Figure1 => "figure1",
            Preset::Ex1Diag => "ex1-diag",
            Preset::Ex2Triangular(_) => "ex2-triangular",
            Preset::SingletonDegenerate => "singleton-degenerate",
        }
    }

    pub fn system(&self) -> IfsSystem {
        let (maps, tag) = match *self {
            Preset::Grid2x3 => {
                let a = Matrix2::diag(0.5, 1.0 / 3.0);
                let maps = (0..2)
                    .flat_map(|j| {
                        (0..3).map(move |k| {
                            AffineMap::new(a, Vec2::new(j as f64 / 2.0, k as f64 / 3.0))
                        })
                    })
                    .collect();
                (maps, StructureTag::Diagonal)
            }
            Preset::Figure1 => {
                let a = Matrix2::diag(1.0 / 3.0, 1.0 / 5.0);
                let mut maps: Vec<AffineMap> = figure1_carpet()
                    .digits
                    .iter()
                    .map(|&(j, k)| AffineMap::new(a, Vec2::new(j as f64 / 3.0, k as f64 / 5.0)))
                    .collect();
                maps.push(AffineMap::new(
                    Matrix2::new(2.0 / 10.0, 1.0 / 10.0, 1.0 / 10.0, 2.0 / 10.0),
                    Vec2::new(5.0 / 10.0, 2.0 / 10.0),
                ));
                (maps, StructureTag::General)
            }
            Preset::Ex1Diag => {
                let a = Matrix2::diag(1.0 / 121.0, 1.0 / 3.0);
                let maps = (0..10)
                    .map(|i| {
                        let x = i as f64 * (120.0 / 121.0) / 9.0;
                        let y = (2.0 / 3.0) * (i as f64 * GOLDEN).fract();
                        AffineMap::new(a, Vec2::new(x, y))
                    })
                    .collect();
                (maps, StructureTag::Diagonal)
            }
            Preset::Ex2Triangular(n) => {
                let nf = n as f64;
                let maps = (0..n)
                    .map(|i| {
                        let b = 0.1 * ((i % 3) as f64 - 1.0);
                        let a = Matrix2::new(1.0 / (nf + 1.0), 0.0, b, 1.0 / 3.0);
                        let x = i as f64 * nf / (nf * nf - 1.0);
                        let y = 0.1 + 0.45 * (i as f64 * GOLDEN).fract();
                        AffineMap::new(a, Vec2::new(x, y))
                    })
                    .collect();
                (maps, StructureTag::LowerTriangular)
            }
            Preset::SingletonDegenerate => {
                let a = Matrix2::diag(0.5, 1.0 / 3.0);
                let t = Vec2::new(0.25, 1.0 / 3.0);
                (vec![AffineMap::new(a, t); 6], StructureTag::Diagonal)
            }
        };
        let radius = match self {
            Preset::SingletonDegenerate => Some(std::f64::consts::FRAC_1_SQRT_2),
            _ => None,
        };
        IfsSystem::new(maps, Vec2::new(0.5, 0.5), radius, tag).expect("preset systems are valid")
    }

    /// Carpet structure, where the preset has one.
    pub fn carpet(&self) -> Option<Carpet> {
        match self {
            Preset::Figure1 => Some(figure1_carpet()),
            Preset::Grid2x3 => Some(Carpet {
                p: 2,
                q: 3,
                digits: (0..2).flat_map(|j| (0..3).map(move |k| (j, k))).collect(),
            }),
            _ => None,
        }
    }

    /// Whether the attractor carries positive `H^{s₀}` measure by construction.
    pub fn positive_measure(&self) -> bool {
        matches!(
            self,
            Preset::Grid2x3 | Preset::Ex1Diag | Preset::Ex2Triangular(_)
        )
    }
}

fn figure1_carpet() -> Carpet {
    Carpet {
        p: 3,
        q: 5,
        digits: vec![(0, 0), (0, 2), (0, 4), (2, 0), (2, 4)],
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Ex2Triangular(n) => write!(f, "ex2-triangular({n})"),
            p => f.write_str(p.name()),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Preset> {
        Preset::parse(s, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [
            Preset::Grid2x3,
            Preset::Figure1,
            Preset::Ex1Diag,
            Preset::Ex2Triangular(3),
            Preset::Ex2Triangular(28),
            Preset::SingletonDegenerate,
        ] {
            let sys = p.system();
            assert!(sys.ball_excess() <= 1e-12);
            assert_eq!(
                Preset::parse(
                    p.name(),
                    match p {
                        Preset::Ex2Triangular(n) => Some(n),
                        _ => None,
                    }
                )
                .unwrap(),
                p
            );
        }
        assert!(Preset::parse("nope", None).is_err());
    }

    #[test]
    fn figure1_maps_by_hand() {
        let sys = Preset::Figure1.system();
        type PlaneMap = fn(f64, f64) -> (f64, f64);
        let by_hand: [PlaneMap; 6] = [
            |x, y| (x / 3.0, y / 5.0),
            |x, y| (x / 3.0, (y + 2.0) / 5.0),
            |x, y| (x / 3.0, (y + 4.0) / 5.0),
            |x, y| ((x + 2.0) / 3.0, y / 5.0),
            |x, y| ((x + 2.0) / 3.0, (y + 4.0) / 5.0),
            |x, y| ((2.0 * x + y + 5.0) / 10.0, (x + 2.0 * y + 2.0) / 10.0),
        ];
        for (m, f) in sys.maps().iter().zip(by_hand) {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.3, 0.9), (1.0, 1.0)] {
                let got = m.apply(Vec2::new(x, y));
                let want = f(x, y);
                assert!((got.x - want.0).abs() < 1e-15 && (got.y - want.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grid_tiles_the_square() {
        let sys = Preset::Grid2x3.system();
        let mut area = 0.0;
        for m in sys.maps() {
            let lo = m.apply(Vec2::ZERO);
            let hi = m.apply(Vec2::new(1.0, 1.0));
            assert!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 1.0 + 1e-15 && hi.y <= 1.0 + 1e-15);
            area += (hi.x - lo.x) * (hi.y - lo.y);
        }
        assert!((area - 1.0).abs() < 1e-15);
        assert!((sys.radius() - 5.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn singleton_is_detected() {
        assert!(Preset::SingletonDegenerate.system().is_singleton());
        assert!(!Preset::Grid2x3.system().is_singleton());
    }

    #[test]
    fn ex2_first_coordinates_are_separated() {
        let n = 28;
        let sys = Preset::Ex2Triangular(n).system();
        for w in sys.maps().windows(2) {
            assert!(w[0].t.x + w[0].a.a11 < w[1].t.x);
        }
        let last = sys.maps().last().unwrap();
        assert!(last.t.x + last.a.a11 <= 1.0 + 1e-15);
    }
}
