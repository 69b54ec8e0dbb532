//! 2×2 matrices, closed-form singular values and the projective line RP¹.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for comparing angles on RP¹.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]` acting on column vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Matrix2 { a11, a12, a21, a22 }
    }

    pub const fn diag(a: f64, c: f64) -> Self {
        Matrix2::new(a, 0.0, 0.0, c)
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    pub fn scale(&self, k: f64) -> Matrix2 {
        Matrix2::new(self.a11 * k, self.a12 * k, self.a21 * k, self.a22 * k)
    }

    /// Singular when |det| is zero relative to the entry scale.
    pub fn is_singular(&self) -> bool {
        let m = self.max_abs();
        m == 0.0 || self.det().abs() <= 1e-15 * m * m || !self.det().is_finite()
    }

    pub fn check_nonsingular(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::SingularMatrix { det: self.det() })
        } else {
            Ok(())
        }
    }

    pub fn inverse(&self) -> Result<Matrix2> {
        self.check_nonsingular()?;
        let d = self.det();
        Ok(Matrix2::new(
            self.a22 / d,
            -self.a12 / d,
            -self.a21 / d,
            self.a11 / d,
        ))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }

    /// Projective action without a singularity check.
    pub fn act(&self, p: ProjPoint) -> ProjPoint {
        ProjPoint::from_vec(self.apply(p.unit()))
    }

    /// Operator norm α₁.
    pub fn norm(&self) -> f64 {
        singular_values(self).0
    }

    /// Derivative of the projective action at `p`, in angle units.
    pub fn proj_derivative(&self, p: ProjPoint) -> f64 {
        let w = self.apply(p.unit());
        self.det().abs() / w.dot(w)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Vec2> for Matrix2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

/// A point of RP¹ stored as an angle in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    theta: f64,
}

fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

impl ProjPoint {
    pub const X_AXIS: ProjPoint = ProjPoint { theta: 0.0 };
    pub const Y_AXIS: ProjPoint = ProjPoint { theta: FRAC_PI_2 };

    pub fn from_angle(theta: f64) -> Self {
        ProjPoint {
            theta: wrap_pi(theta),
        }
    }

    pub fn from_vec(v: Vec2) -> Self {
        ProjPoint::from_angle(v.y.atan2(v.x))
    }

    pub fn from_slope(s: f64) -> Self {
        ProjPoint::from_angle(s.atan())
    }

    pub fn angle(self) -> f64 {
        self.theta
    }

    pub fn slope(self) -> f64 {
        self.theta.tan()
    }

    /// Canonical unit representative: first nonzero coordinate positive.
    pub fn unit(self) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        if c < 0.0 {
            Vec2::new(-c, -s)
        } else {
            Vec2::new(c, s)
        }
    }

    /// The orthogonal direction.
    pub fn perp(self) -> ProjPoint {
        ProjPoint::from_angle(self.theta + FRAC_PI_2)
    }

    /// Angular distance on RP¹, in `[0, π/2]`.
    pub fn dist(self, o: ProjPoint) -> f64 {
        let d = (self.theta - o.theta).abs();
        d.min(PI - d)
    }
}

/// A closed arc of RP¹: counter-clockwise from `start`, of length `len < π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjInterval {
    pub start: f64,
    pub len: f64,
}

impl ProjInterval {
    pub fn new(start: f64, len: f64) -> Result<Self> {
        if !(0.0..PI).contains(&len) || !start.is_finite() {
            return Err(Error::InvalidSystem(format!(
                "arc length {len} is not in [0, π)"
            )));
        }
        Ok(ProjInterval {
            start: wrap_pi(start),
            len,
        })
    }

    /// The arc swept counter-clockwise from `a` to `b`.
    pub fn from_points(a: ProjPoint, b: ProjPoint) -> Self {
        ProjInterval {
            start: a.theta,
            len: (b.theta - a.theta).rem_euclid(PI).min(PI - f64::EPSILON),
        }
    }

    /// Slope range `[lo, hi]`, `lo ≤ hi`.
    pub fn from_slopes(lo: f64, hi: f64) -> Self {
        ProjInterval::from_points(ProjPoint::from_slope(lo), ProjPoint::from_slope(hi))
    }

    pub fn point(p: ProjPoint) -> Self {
        ProjInterval {
            start: p.theta,
            len: 0.0,
        }
    }

    pub fn start_point(&self) -> ProjPoint {
        ProjPoint::from_angle(self.start)
    }

    pub fn end_point(&self) -> ProjPoint {
        ProjPoint::from_angle(self.start + self.len)
    }

    pub fn midpoint(&self) -> ProjPoint {
        ProjPoint::from_angle(self.start + 0.5 * self.len)
    }

    /// Position of `p` measured counter-clockwise from the start, in `[0, π)`.
    pub fn offset(&self, p: ProjPoint) -> f64 {
        (p.theta - self.start).rem_euclid(PI)
    }

    pub fn contains(&self, p: ProjPoint, tol: f64) -> bool {
        let o = self.offset(p);
        o <= self.len + tol || PI - o <= tol
    }

    /// Point at parameter `u ∈ [0, 1]` along the arc.
    pub fn at(&self, u: f64) -> ProjPoint {
        ProjPoint::from_angle(self.start + u * self.len)
    }

    /// Unit vector for `p` chosen continuously along this arc.
    pub fn lift(&self, p: ProjPoint) -> Vec2 {
        let phi = self.start + self.offset(p);
        Vec2::new(phi.cos(), phi.sin())
    }

    /// Grow both ends by `eps`; `None` once the arc would cover RP¹.
    pub fn padded(&self, eps: f64) -> Option<ProjInterval> {
        let len = self.len + 2.0 * eps;
        (len < PI).then(|| ProjInterval {
            start: wrap_pi(self.start - eps),
            len,
        })
    }

    pub fn contains_interval(&self, o: &ProjInterval, tol: f64) -> bool {
        let a = self.offset(o.start_point());
        let a = if PI - a <= tol { 0.0 } else { a };
        a + o.len <= self.len + tol
    }
}

/// Outcome of taking a union of arcs.
#[derive(Debug, Clone, PartialEq)]
pub enum ArcUnion {
    Full,
    Arcs(Vec<ProjInterval>),
}

/// Union of arcs as a sorted list of disjoint arcs.
pub fn union_arcs(arcs: &[ProjInterval]) -> ArcUnion {
    if arcs.iter().any(|a| a.len >= PI) {
        return ArcUnion::Full;
    }
    let mut v: Vec<(f64, f64)> = arcs.iter().map(|a| (a.start, a.start + a.len)).collect();
    if v.is_empty() {
        return ArcUnion::Arcs(Vec::new());
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (s, e) in v {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    // The last arc may wrap past π onto the first ones.
    loop {
        if merged.iter().any(|&(s, e)| e - s >= PI) {
            return ArcUnion::Full;
        }
        if merged.len() < 2 {
            break;
        }
        let first = merged[0];
        let last = merged.len() - 1;
        if merged[last].1 >= first.0 + PI {
            merged[last].1 = merged[last].1.max(first.1 + PI);
            merged.remove(0);
        } else {
            break;
        }
    }
    if merged.iter().any(|&(s, e)| e - s >= PI) {
        return ArcUnion::Full;
    }
    let mut out: Vec<ProjInterval> = merged
        .into_iter()
        .map(|(s, e)| ProjInterval {
            start: wrap_pi(s),
            len: e - s,
        })
        .collect();
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    ArcUnion::Arcs(out)
}

/// Cyclic gaps between sorted disjoint arcs; gap `k` follows arc `k`.
fn gaps(arcs: &[ProjInterval]) -> Vec<f64> {
    let n = arcs.len();
    (0..n)
        .map(|k| {
            let a = &arcs[k];
            let b = &arcs[(k + 1) % n];
            let g = (b.start - (a.start + a.len)).rem_euclid(PI);
            if n == 1 {
                PI - a.len
            } else {
                g
            }
        })
        .collect()
}

/// Merge neighbouring arcs across the smallest gaps until at most `max` remain.
pub fn coarsen(arcs: Vec<ProjInterval>, max: usize) -> Vec<ProjInterval> {
    let mut arcs = arcs;
    let max = max.max(1);
    while arcs.len() > max {
        let g = gaps(&arcs);
        let (k, &gap) = g
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let n = arcs.len();
        let j = (k + 1) % n;
        let merged = ProjInterval {
            start: arcs[k].start,
            len: arcs[k].len + gap + arcs[j].len,
        };
        arcs[k] = merged;
        arcs.remove(j);
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
    }
    arcs
}

/// Complement of a proper union of disjoint sorted arcs, as closed arcs.
pub fn complement(arcs: &[ProjInterval]) -> Vec<ProjInterval> {
    if arcs.is_empty() {
        return vec![ProjInterval {
            start: 0.0,
            len: PI - f64::EPSILON,
        }];
    }
    let g = gaps(arcs);
    let n = arcs.len();
    let mut out: Vec<ProjInterval> = (0..n)
        .filter(|&k| g[k] > 0.0)
        .map(|k| ProjInterval {
            start: wrap_pi(arcs[k].start + arcs[k].len),
            len: g[k].min(PI - f64::EPSILON),
        })
        .collect();
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    out
}

/// A finite union of pairwise disjoint closed arcs, proper in RP¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multicone {
    intervals: Vec<ProjInterval>,
}

impl Multicone {
    pub fn new(intervals: Vec<ProjInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidSystem("empty multicone".into()));
        }
        let total: f64 = intervals.iter().map(|i| i.len).sum();
        match union_arcs(&intervals) {
            ArcUnion::Arcs(u) if u.len() == intervals.len() && total < PI => {
                Ok(Multicone { intervals: u })
            }
            _ => Err(Error::InvalidSystem(
                "multicone arcs overlap or cover RP¹".into(),
            )),
        }
    }

    pub fn intervals(&self) -> &[ProjInterval] {
        &self.intervals
    }

    pub fn contains(&self, p: ProjPoint, tol: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(p, tol))
    }

    /// Index of an arc containing `p`.
    pub fn locate(&self, p: ProjPoint, tol: f64) -> Option<usize> {
        self.intervals.iter().position(|i| i.contains(p, tol))
    }

    /// Unit representative of `p`, continuous within each arc.
    pub fn representative(&self, p: ProjPoint) -> Vec2 {
        match self.locate(p, ANGLE_TOL) {
            Some(k) => self.intervals[k].lift(p),
            None => p.unit(),
        }
    }

    /// Smallest distance from an arc of `images` to the complement of the
    /// interior; negative when some image escapes.
    pub fn margin(&self, images: &[ProjInterval]) -> f64 {
        images
            .iter()
            .map(|j| {
                self.intervals
                    .iter()
                    .map(|i| {
                        let a = i.offset(j.start_point());
                        if a + j.len <= i.len {
                            a.min(i.len - a - j.len)
                        } else {
                            -1.0
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed-form singular values `(α₁, α₂)`.
pub fn singular_values(m: &Matrix2) -> (f64, f64) {
    let e = 0.5 * (m.a11 + m.a22);
    let f = 0.5 * (m.a11 - m.a22);
    let g = 0.5 * (m.a21 + m.a12);
    let h = 0.5 * (m.a21 - m.a12);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let s1 = q + r;
    let s2 = if s1 > 0.0 { m.det().abs() / s1 } else { 0.0 };
    (s1, s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Svd2 {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Direction of `A v1`.
    pub u1: ProjPoint,
    /// Leading right-singular direction.
    pub v1: ProjPoint,
}

pub fn svd2(m: &Matrix2) -> Result<Svd2> {
    m.check_nonsingular()?;
    let (alpha1, alpha2) = singular_values(m);
    let p = m.a11 * m.a11 + m.a21 * m.a21;
    let q = m.a11 * m.a12 + m.a21 * m.a22;
    let r = m.a12 * m.a12 + m.a22 * m.a22;
    let v1 = ProjPoint::from_angle(0.5 * (2.0 * q).atan2(p - r));
    let u1 = m.act(v1);
    Ok(Svd2 {
        alpha1,
        alpha2,
        u1,
        v1,
    })
}

/// φ^s from singular values.
pub fn phi_from_singular(a1: f64, a2: f64, s: f64) -> f64 {
    if s <= 1.0 {
        a1.powf(s)
    } else if s <= 2.0 {
        a1 * a2.powf(s - 1.0)
    } else {
        (a1 * a2).powf(0.5 * s)
    }
}

/// log φ^s from log singular values.
pub fn log_phi(la1: f64, la2: f64, s: f64) -> f64 {
    if s <= 1.0 {
        s * la1
    } else if s <= 2.0 {
        la1 + (s - 1.0) * la2
    } else {
        0.5 * s * (la1 + la2)
    }
}

/// The singular value function φ^s(A).
pub fn phi_s(m: &Matrix2, s: f64) -> Result<f64> {
    m.check_nonsingular()?;
    let (a1, a2) = singular_values(m);
    Ok(phi_from_singular(a1, a2, s))
}

/// Direction of `m · v(p)`.
pub fn act_proj(m: &Matrix2, p: ProjPoint) -> Result<ProjPoint> {
    m.check_nonsingular()?;
    Ok(m.act(p))
}

/// ‖m · v(p)‖.
pub fn norm_restricted(m: &Matrix2, p: ProjPoint) -> Result<f64> {
    m.check_nonsingular()?;
    Ok(m.apply(p.unit()).norm())
}

/// Exact image of an arc under the projective action of `m`.
pub fn interval_image(m: &Matrix2, iv: &ProjInterval) -> Result<ProjInterval> {
    m.check_nonsingular()?;
    Ok(image_unchecked(m, iv))
}

pub(crate) fn image_unchecked(m: &Matrix2, iv: &ProjInterval) -> ProjInterval {
    let a = m.act(iv.start_point());
    if iv.len == 0.0 {
        return ProjInterval::point(a);
    }
    let b = m.act(iv.end_point());
    if m.det() > 0.0 {
        ProjInterval::from_points(a, b)
    } else {
        ProjInterval::from_points(b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn svd_examples() {
        let s = svd2(&Matrix2::IDENTITY).unwrap();
        assert_eq!((s.alpha1, s.alpha2), (1.0, 1.0));

        let s = svd2(&Matrix2::diag(1.0 / 3.0, 0.2)).unwrap();
        assert!(close(s.alpha1, 1.0 / 3.0, 1e-15) && close(s.alpha2, 0.2, 1e-15));
        assert!(s.u1.dist(ProjPoint::X_AXIS) < 1e-15);
        assert!(s.v1.dist(ProjPoint::X_AXIS) < 1e-15);

        let b = Matrix2::new(0.2, 0.1, 0.1, 0.2);
        let s = svd2(&b).unwrap();
        assert!(close(s.alpha1, 0.3, 1e-15) && close(s.alpha2, 0.1, 1e-15));
        assert!(s.v1.dist(ProjPoint::from_slope(1.0)) < 1e-12);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Matrix2::new(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(svd2(&m), Err(Error::SingularMatrix { .. })));
        assert!(phi_s(&m, 1.0).is_err());
        assert!(act_proj(&m, ProjPoint::X_AXIS).is_err());
        assert!(svd2(&Matrix2::diag(0.0, 0.0)).is_err());
    }

    #[test]
    fn phi_examples() {
        let d = Matrix2::diag(1.0 / 3.0, 0.2);
        assert_eq!(phi_s(&d, 0.0).unwrap(), 1.0);
        assert!(close(phi_s(&d, 1.5).unwrap(), 0.149_071_198_5, 1e-9));
        assert!(close(
            phi_s(&d, 2.5).unwrap(),
            (1.0f64 / 15.0).powf(1.25),
            1e-12
        ));
    }

    #[test]
    fn projective_examples() {
        let s1 = ProjPoint::from_slope(1.0);
        assert_eq!(act_proj(&Matrix2::IDENTITY, s1).unwrap(), s1);
        let d = Matrix2::diag(0.5, 1.0 / 3.0).transpose();
        let img = act_proj(&d, s1).unwrap();
        assert!(close(img.slope(), 2.0 / 3.0, 1e-14));
        let b = Matrix2::new(0.2, 0.1, 0.1, 0.2);
        assert!(act_proj(&b, s1).unwrap().dist(s1) < 1e-15);

        assert!(close(
            norm_restricted(&Matrix2::diag(0.5, 1.0 / 3.0), ProjPoint::X_AXIS).unwrap(),
            0.5,
            1e-15
        ));
        assert!(close(norm_restricted(&b, s1).unwrap(), 0.3, 1e-15));
        assert!(close(
            norm_restricted(&Matrix2::IDENTITY, ProjPoint::from_angle(1.234)).unwrap(),
            1.0,
            1e-15
        ));
    }

    #[test]
    fn interval_image_examples() {
        let iv = ProjInterval::new(0.3, 0.7).unwrap();
        let img = interval_image(&Matrix2::IDENTITY, &iv).unwrap();
        assert!(close(img.start, 0.3, 1e-15) && close(img.len, 0.7, 1e-15));

        let d = Matrix2::diag(0.5, 1.0 / 3.0).transpose();
        let img = interval_image(&d, &ProjInterval::from_slopes(-1.0, 1.0)).unwrap();
        assert!(close(img.start_point().slope(), -2.0 / 3.0, 1e-14));
        assert!(close(img.end_point().slope(), 2.0 / 3.0, 1e-14));

        let b = Matrix2::new(0.2, 0.1, 0.1, 0.2);
        let img = interval_image(&b, &ProjInterval::from_slopes(-0.1, 2.0)).unwrap();
        assert!(close(img.start_point().slope(), 0.8 / 1.9, 1e-13));
        assert!(close(img.end_point().slope(), 1.25, 1e-13));
    }

    #[test]
    fn orientation_reversing_image() {
        let m = Matrix2::diag(0.5, -0.25);
        let iv = ProjInterval::from_slopes(0.1, 0.5);
        let img = interval_image(&m, &iv).unwrap();
        // slope t maps to -t/2, so [0.1, 0.5] lands on [-0.25, -0.05]
        assert!(close(img.start_point().slope(), -0.25, 1e-14));
        assert!(close(img.end_point().slope(), -0.05, 1e-14));
        for k in 0..=10 {
            let p = iv.at(k as f64 / 10.0);
            assert!(img.contains(m.act(p), 1e-12));
        }
    }

    #[test]
    fn canonical_representative() {
        for k in 0..100 {
            let p = ProjPoint::from_angle(k as f64 * 0.0314);
            let u = p.unit();
            assert!(close(u.norm(), 1.0, 1e-15));
            assert!(u.x > 0.0 || (u.x.abs() < 1e-15 && u.y > 0.0));
        }
        assert_eq!(ProjPoint::from_angle(PI).angle(), 0.0);
        assert!(close(ProjPoint::from_angle(-0.5).angle(), PI - 0.5, 1e-15));
    }

    #[test]
    fn continuous_representative_across_vertical() {
        let iv = ProjInterval::from_points(ProjPoint::from_angle(1.4), ProjPoint::from_angle(1.8));
        let a = iv.lift(ProjPoint::from_angle(1.5706));
        let b = iv.lift(ProjPoint::from_angle(1.5710));
        assert!((a - b).norm() < 1e-3);
    }

    #[test]
    fn random_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let mut checked = 0;
        while checked < 10_000 {
            let m = Matrix2::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            if m.is_singular() || m.det().abs() < 1e-6 {
                continue;
            }
            checked += 1;
            let s = svd2(&m).unwrap();
            assert!(s.alpha1 >= s.alpha2 && s.alpha2 > 0.0);
            assert!(((s.alpha1 * s.alpha2) / m.det().abs() - 1.0).abs() < 1e-10);
            let sampled = (0..360)
                .map(|k| {
                    let t = k as f64 * PI / 180.0;
                    m.apply(Vec2::new(t.cos(), t.sin())).norm()
                })
                .fold(0.0, f64::max);
            // a 1° grid sits within (1 - cos 0.5°) of the maximum
            assert!(sampled <= s.alpha1 * (1.0 + 1e-12));
            assert!(sampled >= s.alpha1 * (1.0 - 4e-5));
            // the leading right-singular direction attains α₁
            let v = s.v1.unit();
            assert!((m.apply(v).norm() - s.alpha1).abs() <= 1e-12 * s.alpha1);
            assert!(s.u1.dist(m.act(s.v1)) < 1e-12);
        }
    }

    #[test]
    fn union_and_coarsen() {
        let a = ProjInterval::new(0.1, 0.2).unwrap();
        let b = ProjInterval::new(0.25, 0.2).unwrap();
        let c = ProjInterval::new(3.0, 0.3).unwrap();
        match union_arcs(&[a, b, c]) {
            ArcUnion::Arcs(v) => {
                // c wraps past π to 0.158, swallowing a and b
                assert_eq!(v.len(), 1);
                assert!(close(v[0].start, 3.0, 1e-15));
                assert!(close(v[0].len, 0.45 + PI - 3.0, 1e-12));
            }
            ArcUnion::Full => panic!("not full"),
        }
        let d = ProjInterval::new(1.0, 0.1).unwrap();
        let e = ProjInterval::new(2.0, 0.1).unwrap();
        let f = ProjInterval::new(1.15, 0.1).unwrap();
        let v = coarsen(vec![d, f, e], 2);
        assert_eq!(v.len(), 2);
        assert!(close(v[0].len, 0.25, 1e-12));
        assert_eq!(
            union_arcs(&[
                ProjInterval::new(0.0, 3.0).unwrap(),
                ProjInterval::new(2.9, 0.3).unwrap()
            ]),
            ArcUnion::Full
        );
        let comp = complement(&[ProjInterval::new(1.0, 0.5).unwrap()]);
        assert_eq!(comp.len(), 1);
        assert!(close(comp[0].start, 1.5, 1e-15) && close(comp[0].len, PI - 0.5, 1e-12));
    }

    #[test]
    fn multicone_margin() {
        let c = Multicone::new(vec![ProjInterval::from_slopes(-1.0, 1.0)]).unwrap();
        let inner = ProjInterval::from_slopes(-2.0 / 3.0, 2.0 / 3.0);
        let m = c.margin(&[inner]);
        assert!(close(m, (PI / 4.0) - (2.0f64 / 3.0).atan(), 1e-12));
        let outer = ProjInterval::from_slopes(-2.0, 0.0);
        assert!(c.margin(&[outer]) < 0.0);
        assert!(Multicone::new(vec![
            ProjInterval::new(0.0, 1.0).unwrap(),
            ProjInterval::new(0.5, 1.0).unwrap()
        ])
        .is_err());
    }
}
