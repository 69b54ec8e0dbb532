//! Projections, conjugated one-dimensional maps and upper estimates for the
//! Hausdorff content of slices and of the attractor.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domination::{furstenberg_direction, DominationCertificate};
use crate::error::{Error, Result};
use crate::geometry::{chord, invariant_polygon, project_points, Polygon};
use crate::linalg::{ProjPoint, Vec2};
use crate::pressure::CompensatedSum;
use crate::symbolic::{
    compose_word, stopping_section, InfiniteWord, SectionVariant, Word, SECTION_CAP,
};
use crate::system::{AffineMap, IfsSystem};

pub const DEFAULT_QUAD_POINTS: usize = 256;
pub const NODE_CAP: usize = 5_000_000;
const DEPTH_CAP: usize = 64;

/// `proj_V(x) = ⟨v(V), x⟩`.
pub fn proj_scalar(v: ProjPoint, x: Vec2) -> f64 {
    v.unit().dot(x)
}

/// `F_{i,V}(u) = slope·u + offset`, with
/// `proj_V(f_i(x)) = F_{i,V}(proj_{A_iᵀV}(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateMap {
    pub slope: f64,
    pub offset: f64,
}

impl ConjugateMap {
    pub fn apply(&self, u: f64) -> f64 {
        self.slope * u + self.offset
    }

    /// `+1` if orientation preserving.
    pub fn orientation(&self) -> i8 {
        if self.slope >= 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn conjugate_map_f(sys: &IfsSystem, i: usize, v: ProjPoint) -> ConjugateMap {
    let m = sys.map(i);
    let w = m.a.transpose().apply(v.unit());
    let image = ProjPoint::from_vec(w);
    let sign = if w.dot(image.unit()) >= 0.0 {
        1.0
    } else {
        -1.0
    };
    ConjugateMap {
        slope: sign * w.norm(),
        offset: proj_scalar(v, m.t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceQuery {
    pub direction: ProjPoint,
    pub t: f64,
    /// Exponent `s − 1 ∈ [0, 1]`.
    pub exponent: f64,
    pub r_min: f64,
}

impl SliceQuery {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.exponent) {
            return Err(Error::InvalidArgument(format!(
                "slice exponent {} outside [0, 1]",
                self.exponent
            )));
        }
        if !(self.r_min > 0.0 && self.r_min.is_finite()) || !self.t.is_finite() {
            return Err(Error::InvalidArgument(
                "r_min must be positive and t finite".into(),
            ));
        }
        Ok(())
    }
}

/// An upper bound for a Hausdorff content, from an explicit cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub value: f64,
    pub resolution: f64,
    pub cover_size: usize,
}

/// Cylinder-tree slicer sharing one invariant polygon `K`.
#[derive(Debug, Clone)]
pub struct Slicer<'a> {
    sys: &'a IfsSystem,
    hull: Polygon,
    singleton: bool,
}

struct Walk<'s> {
    maps: &'s [AffineMap],
    hull: &'s [Vec2],
    v: Vec2,
    t: f64,
    exponent: f64,
    r_min: f64,
    nodes: usize,
}

impl Walk<'_> {
    fn size(&self, len: f64) -> f64 {
        if self.exponent == 0.0 {
            1.0
        } else {
            len.max(0.0).powf(self.exponent)
        }
    }

    fn chord_of(&self, f: &AffineMap) -> Option<(f64, f64)> {
        let pts: Vec<Vec2> = self.hull.iter().map(|&p| f.apply(p)).collect();
        chord(&pts, self.v, self.t)
    }

    /// Cheapest cover found for the slice of `f(K)`, as `(cost, intervals)`.
    fn visit(&mut self, f: &AffineMap, span: (f64, f64), depth: usize) -> Result<(f64, usize)> {
        self.nodes += 1;
        if self.nodes > NODE_CAP {
            return Err(Error::BudgetExceeded(format!(
                "slice cover needs more than {NODE_CAP} cylinders"
            )));
        }
        let len = span.1 - span.0;
        let whole = (self.size(len), 1);
        if len <= self.r_min || depth >= DEPTH_CAP {
            return Ok(whole);
        }
        let mut kids: Vec<(AffineMap, (f64, f64))> = self
            .maps
            .iter()
            .filter_map(|m| {
                let g = f.compose(m);
                self.chord_of(&g).map(|c| (g, c))
            })
            .collect();
        if kids.is_empty() {
            return Ok((0.0, 0));
        }
        kids.sort_by(|a, b| (a.1 .0 + a.1 .1).total_cmp(&(b.1 .0 + b.1 .1)));
        let mut costs = Vec::with_capacity(kids.len());
        for (g, c) in &kids {
            costs.push(self.visit(g, *c, depth + 1)?);
        }
        // best[j]: cheapest cover of the first j children, grouping runs of
        // consecutive children into one interval.
        let k = kids.len();
        let mut best = vec![(f64::INFINITY, 0usize); k + 1];
        best[0] = (0.0, 0);
        for j in 1..=k {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in (0..j).rev() {
                lo = lo.min(kids[i].1 .0);
                hi = hi.max(kids[i].1 .1);
                let (c, n) = if j - i == 1 {
                    costs[i]
                } else {
                    (self.size(hi - lo), 1)
                };
                let cand = (best[i].0 + c, best[i].1 + n);
                if cand.0 < best[j].0 {
                    best[j] = cand;
                }
            }
        }
        Ok(if best[k].0 <= whole.0 { best[k] } else { whole })
    }
}

/// Result of integrating slice contents over `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceIntegral {
    pub value: f64,
    pub direction: ProjPoint,
    pub exponent: f64,
    pub quad_points: usize,
    pub r_min: f64,
    pub step: f64,
    /// `(t, content)` at the quadrature nodes.
    pub profile: Vec<(f64, f64)>,
}

impl<'a> Slicer<'a> {
    pub fn new(sys: &'a IfsSystem) -> Self {
        Slicer {
            sys,
            hull: invariant_polygon(sys),
            singleton: sys.is_singleton(),
        }
    }

    pub fn hull(&self) -> &Polygon {
        &self.hull
    }

    /// Content of `f_root(X) ∩ proj_V^{-1}(t)`.
    pub fn content(&self, root: &Word, q: &SliceQuery) -> Result<ContentEstimate> {
        q.check()?;
        root.check(self.sys.len())?;
        let mut walk = Walk {
            maps: self.sys.maps(),
            hull: &self.hull.vertices,
            v: q.direction.unit(),
            t: q.t,
            exponent: q.exponent,
            r_min: q.r_min,
            nodes: 0,
        };
        let f = compose_word(self.sys, root);
        let empty = ContentEstimate {
            value: 0.0,
            resolution: q.r_min,
            cover_size: 0,
        };
        if self.singleton {
            return Ok(empty);
        }
        let Some(span) = walk.chord_of(&f) else {
            return Ok(empty);
        };
        let (value, cover_size) = walk.visit(&f, span, 0)?;
        Ok(ContentEstimate {
            value,
            resolution: q.r_min,
            cover_size,
        })
    }

    /// Range of `proj_V` over the descendants of `root` a few levels down.
    fn support(&self, root: &Word, v: Vec2) -> (f64, f64) {
        let n = self.sys.len();
        let mut d = 0;
        while d < 6 && n.pow(d as u32 + 1) <= 4096 {
            d += 1;
        }
        let f = compose_word(self.sys, root);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for idx in 0..n.pow(d as u32) {
            let g = f.compose(&compose_word(self.sys, &Word::from_index(idx, d, n)));
            let pts: Vec<Vec2> = self.hull.vertices.iter().map(|&p| g.apply(p)).collect();
            let (a, b) = project_points(&pts, v);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// Midpoint rule for `∫ content(f_root(X) ∩ proj_V^{-1}(t)) dt`.
    pub fn integral(
        &self,
        root: &Word,
        direction: ProjPoint,
        exponent: f64,
        quad_points: usize,
        r_min: f64,
    ) -> Result<SliceIntegral> {
        if quad_points < 16 {
            return Err(Error::InvalidArgument(
                "need at least 16 quadrature points".into(),
            ));
        }
        let q0 = SliceQuery {
            direction,
            t: 0.0,
            exponent,
            r_min,
        };
        q0.check()?;
        if self.singleton {
            return Ok(SliceIntegral {
                value: 0.0,
                direction,
                exponent,
                quad_points,
                r_min,
                step: 0.0,
                profile: Vec::new(),
            });
        }
        let (lo, hi) = self.support(root, direction.unit());
        let (lo, hi) = (lo - r_min, hi + r_min);
        let step = (hi - lo) / quad_points as f64;
        let profile: Vec<(f64, f64)> = (0..quad_points)
            .into_par_iter()
            .map(|j| {
                let t = lo + (j as f64 + 0.5) * step;
                self.content(root, &SliceQuery { t, ..q0 })
                    .map(|c| (t, c.value))
            })
            .collect::<Result<_>>()?;
        let value = profile
            .iter()
            .map(|p| p.1 * step)
            .collect::<CompensatedSum>()
            .value();
        Ok(SliceIntegral {
            value,
            direction,
            exponent,
            quad_points,
            r_min,
            step,
            profile,
        })
    }
}

pub fn slice_content(sys: &IfsSystem, q: &SliceQuery) -> Result<ContentEstimate> {
    Slicer::new(sys).content(&Word::empty(), q)
}

/// `h(ī) = ∫ H^{s₀−1}_∞(X ∩ proj_{V(ī)}^{-1}(t)) dt`.
pub fn slice_integral_h(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    w: &InfiniteWord,
    s0: f64,
    quad_points: usize,
    r_min: f64,
) -> Result<SliceIntegral> {
    slice_measure_eta(sys, cert, w, &Word::empty(), s0, quad_points, r_min)
}

/// `η_ī([ȷ]) = ∫ H^{s₀−1}_∞(f_ȷ(X) ∩ proj_{V(ī)}^{-1}(t)) dt`.
pub fn slice_measure_eta(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    base: &InfiniteWord,
    j: &Word,
    s0: f64,
    quad_points: usize,
    r_min: f64,
) -> Result<SliceIntegral> {
    base.check(sys.len())?;
    let v = furstenberg_direction(sys, cert, base, 1e-13);
    Slicer::new(sys).integral(j, v, (s0 - 1.0).clamp(0.0, 1.0), quad_points, r_min)
}

/// `ĥ(ī)` against `(Lĥ)(ī) = Σ_k e^{g(kī)} ĥ(kī)`, each `ĥ(kī)` taken at the
/// resolution `r_min / λ_k` that `f_k` maps onto `r_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subinvariance {
    pub h: f64,
    pub lh: f64,
    pub ratio: f64,
}

pub fn slice_subinvariance(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    w: &InfiniteWord,
    s0: f64,
    quad_points: usize,
    r_min: f64,
) -> Result<Subinvariance> {
    w.check(sys.len())?;
    let slicer = Slicer::new(sys);
    let e = (s0 - 1.0).clamp(0.0, 1.0);
    let v = furstenberg_direction(sys, cert, w, 1e-13);
    let h = slicer
        .integral(&Word::empty(), v, e, quad_points, r_min)?
        .value;
    let mut lh = CompensatedSum::default();
    for k in 0..sys.len() {
        let a = sys.map(k).a;
        let pulled = a.transpose().apply(v.unit()).norm();
        let lambda = a.det().abs() / pulled;
        let vk = furstenberg_direction(sys, cert, &w.cons(k), 1e-13);
        let hk = slicer
            .integral(&Word::empty(), vk, e, quad_points, r_min / lambda)?
            .value;
        lh.add(crate::transfer::potential_weight(&a, v.unit(), s0) * hk);
    }
    let lh = lh.value();
    Ok(Subinvariance {
        h,
        lh,
        ratio: if lh > 0.0 { h / lh } else { f64::NAN },
    })
}

/// Cover of `X` by `⌈α₁/α₂⌉` squares of side `α₂|X|` per word of `Δ_r`.
pub fn content2d_upper(sys: &IfsSystem, s: f64, r: f64) -> Result<ContentEstimate> {
    let section = stopping_section(sys, r, SectionVariant::Alpha2, SECTION_CAP)?;
    let diam = sys.diameter();
    let mut terms: Vec<f64> = Vec::with_capacity(section.len());
    let mut cover_size = 0usize;
    for m in &section.members {
        let count = (m.alpha1 / m.alpha2 * (1.0 - 1e-12)).ceil().max(1.0);
        cover_size += count as usize;
        terms.push(count * (m.alpha2 * diam * std::f64::consts::SQRT_2).powf(s));
    }
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(ContentEstimate {
        value: terms.iter().copied().collect::<CompensatedSum>().value(),
        resolution: r,
        cover_size,
    })
}
