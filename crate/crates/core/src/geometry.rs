//! Convex polygons, and a convex polygon mapped into itself by every map of a system.

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix2, Vec2};
use crate::system::IfsSystem;

/// A convex polygon with counter-clockwise vertices. One or two vertices are
/// allowed for degenerate sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

/// Convex hull by the monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut p: Vec<Vec2> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut lower: Vec<Vec2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl Polygon {
    pub fn hull(points: &[Vec2]) -> Self {
        Polygon {
            vertices: convex_hull(points),
        }
    }

    pub fn unit_square() -> Self {
        Polygon {
            vertices: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
        }
    }

    /// Regular `n`-gon circumscribed about the circle of radius `rho` at `c`.
    pub fn circumscribed(c: Vec2, rho: f64, n: usize) -> Self {
        let k = rho / (std::f64::consts::PI / n as f64).cos();
        let vertices = (0..n)
            .map(|j| {
                let t = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
                c + Vec2::new(t.cos(), t.sin()).scale(k)
            })
            .collect();
        Polygon { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Image under `x ↦ a x + t`, kept counter-clockwise.
    pub fn transform(&self, a: &Matrix2, t: Vec2) -> Polygon {
        let mut vertices: Vec<Vec2> = self.vertices.iter().map(|&p| a.apply(p) + t).collect();
        if a.det() < 0.0 {
            vertices.reverse();
        }
        Polygon { vertices }
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max((v[i] - v[j]).norm());
            }
        }
        d
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        self.vertices
            .iter()
            .fold(Vec2::ZERO, |acc, &p| acc + p)
            .scale(1.0 / n)
    }

    /// Range of `⟨v, x⟩` over the polygon.
    pub fn project_range(&self, v: Vec2) -> (f64, f64) {
        project_points(&self.vertices, v)
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Euclidean distance from `p`, zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 => f64::INFINITY,
            1 => (p - v[0]).norm(),
            n => {
                let mut inside = n >= 3;
                let mut d = f64::INFINITY;
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    if (b - a).cross(p - a) < 0.0 {
                        inside = false;
                    }
                    d = d.min(segment_distance(p, a, b));
                }
                if inside {
                    0.0
                } else {
                    d
                }
            }
        }
    }

    /// Largest distance from `p` to a vertex.
    pub fn max_distance(&self, p: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|&q| (q - p).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest width over edge normals.
    pub fn min_width(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let e = v[(i + 1) % n] - v[i];
                let nrm = e.perp().scale(1.0 / e.norm());
                let (lo, hi) = self.project_range(nrm);
                hi - lo
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn project_points(points: &[Vec2], v: Vec2) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let s = v.dot(p);
            (lo.min(s), hi.max(s))
        })
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let u = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    (p - (a + d.scale(u))).norm()
}

/// Intersection of the line `{⟨v, x⟩ = t}` with the convex hull of `points`
/// (given in cyclic order), as a range of `⟨w, x⟩` where `w = v⊥`.
pub fn chord(points: &[Vec2], v: Vec2, t: f64) -> Option<(f64, f64)> {
    let w = v.perp();
    let n = points.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        let a = v.dot(p) - t;
        let b = v.dot(q) - t;
        if a == 0.0 {
            let s = w.dot(p);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
            let sp = w.dot(p);
            let sq = w.dot(q);
            let s = sp + (sq - sp) * (a / (a - b));
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Separation of two convex polygons along their edge normals: positive when
/// disjoint, otherwise minus the smallest penetration depth.
pub fn separation(a: &Polygon, b: &Polygon) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut axes: Vec<Vec2> = Vec::new();
    for poly in [a, b] {
        let v = &poly.vertices;
        let n = v.len();
        if n >= 2 {
            for i in 0..n {
                let e = v[(i + 1) % n] - v[i];
                let l = e.norm();
                if l > 0.0 {
                    axes.push(e.perp().scale(1.0 / l));
                }
            }
        }
    }
    if axes.is_empty() {
        let d = a.vertices[0] - b.vertices[0];
        return d.norm();
    }
    for ax in axes {
        let (alo, ahi) = a.project_range(ax);
        let (blo, bhi) = b.project_range(ax);
        best = best.max((blo - ahi).max(alo - bhi));
    }
    best
}

/// A convex polygon `K` containing the attractor with `f_i(K) ⊆ K` for all `i`.
///
/// Starts from a regular polygon about the bounding centre and replaces `K` by
/// the hull of its images while that stays small.
pub fn invariant_polygon(sys: &IfsSystem) -> Polygon {
    let c = sys.center();
    let maps = sys.maps();
    let norms: Vec<f64> = maps.iter().map(|m| m.a.norm()).collect();
    let offsets: Vec<f64> = maps.iter().map(|m| (m.apply(c) - c).norm()).collect();
    if sys.is_singleton() {
        return Polygon {
            vertices: vec![maps[0].fixed_point()],
        };
    }
    let mut sides = 16usize;
    let rho = loop {
        let k = (std::f64::consts::PI / sides as f64).cos();
        let ok = norms.iter().all(|&a| a < k);
        if ok {
            let rho = norms
                .iter()
                .zip(&offsets)
                .map(|(&a, &d)| d / (1.0 - a / k))
                .fold(0.0, f64::max);
            break rho;
        }
        sides *= 2;
    };
    let mut poly = Polygon::circumscribed(c, rho * (1.0 + 1e-12), sides);
    const MAX_VERTICES: usize = 48;
    for _ in 0..40 {
        let pts: Vec<Vec2> = maps
            .iter()
            .flat_map(|m| poly.vertices.iter().map(move |&p| m.apply(p)))
            .collect();
        let next = Polygon::hull(&pts);
        if next.len() > MAX_VERTICES {
            break;
        }
        let shrink = poly.area() - next.area();
        poly = next;
        if shrink <= 1e-14 * poly.area().max(1e-300) {
            break;
        }
    }
    poly
}
