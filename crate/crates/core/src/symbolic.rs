//! Finite and eventually periodic words, composition, the natural projection
//! and stopping sections.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, ProjPoint, Vec2};
use crate::system::{AffineMap, IfsSystem};

/// A finite word over the alphabet `{0, …, N−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(symbols: &[usize]) -> Self {
        Word(symbols.iter().map(|&s| s as u16).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k] as usize
    }

    pub fn symbols(&self) -> impl DoubleEndedIterator<Item = usize> + ExactSizeIterator + '_ {
        self.0.iter().map(|&s| s as usize)
    }

    pub fn push(&mut self, s: usize) {
        self.0.push(s as u16);
    }

    pub fn pushed(&self, s: usize) -> Word {
        let mut w = self.clone();
        w.push(s);
        w
    }

    /// `s` followed by `self`.
    pub fn prepended(&self, s: usize) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(s as u16);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn concat(&self, o: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        Word(v)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Word {
        Word(self.0[n.min(self.len())..].to_vec())
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn is_prefix_of(&self, o: &Word) -> bool {
        o.0.starts_with(&self.0)
    }

    pub fn check(&self, n_symbols: usize) -> Result<()> {
        match self.symbols().find(|&s| s >= n_symbols) {
            Some(s) => Err(Error::InvalidArgument(format!(
                "symbol {s} outside alphabet of size {n_symbols}"
            ))),
            None => Ok(()),
        }
    }

    /// Lexicographic index among words of the same length (first symbol most significant).
    pub fn index(&self, n_symbols: usize) -> usize {
        self.symbols().fold(0, |acc, s| acc * n_symbols + s)
    }

    pub fn from_index(mut idx: usize, len: usize, n_symbols: usize) -> Word {
        let mut v = vec![0u16; len];
        for k in (0..len).rev() {
            v[k] = (idx % n_symbols) as u16;
            idx /= n_symbols;
        }
        Word(v)
    }

    /// Parses `"0,1,2"`; the empty string is the empty word.
    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u16>()
                    .map_err(|_| Error::Parse(format!("bad symbol {p:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word::new(&v)
    }
}

/// An eventually periodic infinite word `prefix · period^∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfiniteWord {
    pub prefix: Word,
    pub period: Word,
}

impl InfiniteWord {
    pub fn new(prefix: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidArgument("empty period".into()));
        }
        Ok(InfiniteWord { prefix, period })
    }

    /// `w^∞`.
    pub fn periodic(w: &Word) -> Self {
        assert!(!w.is_empty(), "periodic word needs a nonempty period");
        InfiniteWord {
            prefix: Word::empty(),
            period: w.clone(),
        }
    }

    pub fn constant(s: usize) -> Self {
        InfiniteWord::periodic(&Word::new(&[s]))
    }

    pub fn symbol(&self, k: usize) -> usize {
        if k < self.prefix.len() {
            self.prefix.get(k)
        } else {
            self.period.get((k - self.prefix.len()) % self.period.len())
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = usize> + '_ {
        (0..).map(move |k| self.symbol(k))
    }

    pub fn truncate(&self, n: usize) -> Word {
        let v: Vec<usize> = (0..n).map(|k| self.symbol(k)).collect();
        Word::new(&v)
    }

    /// `σ ī`.
    pub fn shift(&self) -> InfiniteWord {
        if self.prefix.is_empty() {
            let mut v: Vec<usize> = self.period.symbols().skip(1).collect();
            v.push(self.period.get(0));
            InfiniteWord {
                prefix: Word::empty(),
                period: Word::new(&v),
            }
        } else {
            InfiniteWord {
                prefix: self.prefix.suffix_from(1),
                period: self.period.clone(),
            }
        }
    }

    /// `s ī`.
    pub fn cons(&self, s: usize) -> InfiniteWord {
        InfiniteWord {
            prefix: self.prefix.prepended(s),
            period: self.period.clone(),
        }
    }

    pub fn check(&self, n_symbols: usize) -> Result<()> {
        self.prefix.check(n_symbols)?;
        self.period.check(n_symbols)
    }
}

impl fmt::Display for InfiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            write!(f, "{};", self.prefix)?;
        }
        write!(f, "({})", self.period)
    }
}

/// `f_w = f_{w₁} ∘ ⋯ ∘ f_{wₙ}`.
pub fn compose_word(sys: &IfsSystem, w: &Word) -> AffineMap {
    w.symbols()
        .fold(AffineMap::IDENTITY, |acc, s| acc.compose(sys.map(s)))
}

pub fn reversed(w: &Word) -> Word {
    w.reversed()
}

/// `π(ī) = lim f_{ī|n}(c)`, to within `tol`.
pub fn natural_project(sys: &IfsSystem, w: &InfiniteWord, tol: f64) -> Vec2 {
    let r = sys.radius();
    let c = sys.center();
    let mut f = AffineMap::IDENTITY;
    for s in w.symbols().take(100_000) {
        f = f.compose(sys.map(s));
        if singular_values(&f.a).0 * r <= tol {
            break;
        }
    }
    f.apply(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionVariant {
    /// Δ_r, stopping on α₂.
    Alpha2,
    /// Γ_r, stopping on α₁.
    Alpha1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionMember {
    pub word: Word,
    pub map: AffineMap,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSection {
    pub r: f64,
    pub variant: SectionVariant,
    pub members: Vec<SectionMember>,
}

impl StoppingSection {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.members.iter().map(|m| &m.word)
    }

    /// No member is a proper prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        let mut w: Vec<&Word> = self.words().collect();
        w.sort();
        w.windows(2).all(|p| !p[0].is_prefix_of(p[1]))
    }

    /// Total mass under the Bernoulli measure with weights `p`.
    pub fn bernoulli_mass(&self, p: &[f64]) -> f64 {
        let mut terms: Vec<f64> = self
            .words()
            .map(|w| w.symbols().map(|s| p[s]).product::<f64>())
            .collect();
        terms.sort_by(|a, b| a.total_cmp(b));
        terms.iter().sum()
    }
}

pub const SECTION_CAP: usize = 10_000_000;

/// Minimal words `w` with `α(A_w)|X| ≤ r`, in lexicographic order.
pub fn stopping_section(
    sys: &IfsSystem,
    r: f64,
    variant: SectionVariant,
    cap: usize,
) -> Result<StoppingSection> {
    stopping_section_from(sys, &Word::empty(), r, variant, cap)
}

/// Stopping section of the subtree below `root`.
pub fn stopping_section_from(
    sys: &IfsSystem,
    root: &Word,
    r: f64,
    variant: SectionVariant,
    cap: usize,
) -> Result<StoppingSection> {
    let diam = sys.diameter();
    if !(r > 0.0 && r < diam) {
        return Err(Error::InvalidArgument(format!(
            "scale {r} outside (0, |X|) = (0, {diam})"
        )));
    }
    let n = sys.len();
    let stop = |a1: f64, a2: f64| {
        let a = match variant {
            SectionVariant::Alpha2 => a2,
            SectionVariant::Alpha1 => a1,
        };
        a * diam <= r * (1.0 + 1e-12)
    };
    let root_map = compose_word(sys, root);
    let count = AtomicUsize::new(0);
    let over = AtomicBool::new(false);
    let branches: Vec<Vec<SectionMember>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut stack = vec![(root.pushed(first), root_map.compose(sys.map(first)))];
            while let Some((w, f)) = stack.pop() {
                if over.load(Ordering::Relaxed) {
                    break;
                }
                let (a1, a2) = singular_values(&f.a);
                if stop(a1, a2) {
                    out.push(SectionMember {
                        word: w,
                        map: f,
                        alpha1: a1,
                        alpha2: a2,
                    });
                    if count.fetch_add(1, Ordering::Relaxed) + 1 > cap {
                        over.store(true, Ordering::Relaxed);
                    }
                } else {
                    for k in (0..n).rev() {
                        stack.push((w.pushed(k), f.compose(sys.map(k))));
                    }
                }
            }
            out
        })
        .collect();
    if over.load(Ordering::Relaxed) {
        return Err(Error::ScaleTooSmall { r, cap });
    }
    Ok(StoppingSection {
        r,
        variant,
        members: branches.into_iter().flatten().collect(),
    })
}

/// Rectangle along the singular directions of `A_w` containing `f_w(B(c, R))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Vec2,
    pub axis: ProjPoint,
    pub half_lengths: (f64, f64),
}

impl OrientedRect {
    pub fn corners(&self) -> [Vec2; 4] {
        let u = self.axis.unit();
        let w = u.perp();
        let (h1, h2) = self.half_lengths;
        [
            self.center + u.scale(h1) + w.scale(h2),
            self.center - u.scale(h1) + w.scale(h2),
            self.center - u.scale(h1) - w.scale(h2),
            self.center + u.scale(h1) - w.scale(h2),
        ]
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let d = p - self.center;
        let u = self.axis.unit();
        d.dot(u).abs() <= self.half_lengths.0 + tol
            && d.dot(u.perp()).abs() <= self.half_lengths.1 + tol
    }
}

pub fn cylinder_bbox(sys: &IfsSystem, w: &Word) -> OrientedRect {
    let f = compose_word(sys, w);
    let (a1, a2) = singular_values(&f.a);
    let p = f.a.a11 * f.a.a11 + f.a.a21 * f.a.a21;
    let q = f.a.a11 * f.a.a12 + f.a.a21 * f.a.a22;
    let r = f.a.a12 * f.a.a12 + f.a.a22 * f.a.a22;
    let v1 = ProjPoint::from_angle(0.5 * (2.0 * q).atan2(p - r));
    OrientedRect {
        center: f.apply(sys.center()),
        axis: f.a.act(v1),
        half_lengths: (a1 * sys.radius(), a2 * sys.radius()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix2;
    use crate::presets::Preset;

    #[test]
    fn compose_examples() {
        let grid = Preset::Grid2x3.system();
        let f = compose_word(&grid, &Word::empty());
        assert_eq!(f, AffineMap::IDENTITY);
        let f = compose_word(&grid, &Word::new(&[0, 0]));
        assert!((f.a.a11 - 0.25).abs() < 1e-16 && (f.a.a22 - 1.0 / 9.0).abs() < 1e-16);
        assert_eq!((f.a.a12, f.a.a21), (0.0, 0.0));

        let fig = Preset::Figure1.system();
        let f = compose_word(&fig, &Word::new(&[5]));
        assert_eq!(f.a, Matrix2::new(0.2, 0.1, 0.1, 0.2));
        assert!((f.t - Vec2::new(0.5, 0.2)).norm() < 1e-16);
    }

    #[test]
    fn natural_projection_fixed_points() {
        let fig = Preset::Figure1.system();
        let p = natural_project(&fig, &InfiniteWord::constant(0), 1e-13);
        assert!(p.norm() < 1e-13);
        for i in 0..fig.len() {
            let p = natural_project(&fig, &InfiniteWord::constant(i), 1e-13);
            assert!((p - fig.map(i).fixed_point()).norm() < 1e-12);
        }
    }

    #[test]
    fn natural_projection_matches_direct_iteration() {
        let grid = Preset::Grid2x3.system();
        let w = InfiniteWord::periodic(&Word::new(&[0, 5]));
        let p = natural_project(&grid, &w, 1e-12);
        // iterate x ↦ f_0(f_5(x)) fifty times from the origin
        let mut x = Vec2::ZERO;
        for _ in 0..50 {
            x = grid.map(0).apply(grid.map(5).apply(x));
        }
        assert!((p - x).norm() < 1e-10);
    }

    #[test]
    fn word_helpers() {
        let w = Word::new(&[1, 2, 3]);
        assert_eq!(w.reversed(), Word::new(&[3, 2, 1]));
        assert_eq!(reversed(&Word::empty()), Word::empty());
        assert_eq!(w.to_string(), "1,2,3");
        assert_eq!(Word::parse("1, 2,3").unwrap(), w);
        assert_eq!(Word::from_index(w.index(4), 3, 4), w);
        let iw = InfiniteWord::new(Word::new(&[7]), Word::new(&[1, 2])).unwrap();
        assert_eq!(iw.truncate(5), Word::new(&[7, 1, 2, 1, 2]));
        assert_eq!(iw.shift().truncate(4), Word::new(&[1, 2, 1, 2]));
        assert_eq!(iw.shift().shift().truncate(3), Word::new(&[2, 1, 2]));
        assert_eq!(iw.cons(4).truncate(3), Word::new(&[4, 7, 1]));
    }

    #[test]
    fn grid_sections_are_full_levels() {
        let grid = Preset::Grid2x3.system();
        for m in 1..=4 {
            let r = 3f64.powi(-m) * grid.diameter();
            let sec = stopping_section(&grid, r, SectionVariant::Alpha2, SECTION_CAP).unwrap();
            assert_eq!(sec.len(), 6usize.pow(m as u32));
            assert!(sec.words().all(|w| w.len() == m as usize));
            assert!(sec.is_prefix_free());
        }
    }

    #[test]
    fn ex1_section_is_level_two() {
        let ex1 = Preset::Ex1Diag.system();
        let r = 121f64.powf(-1.5) * ex1.diameter();
        let sec = stopping_section(&ex1, r, SectionVariant::Alpha2, SECTION_CAP).unwrap();
        assert_eq!(sec.len(), 100);
        assert!(sec.words().all(|w| w.len() == 2));
    }

    #[test]
    fn section_never_contains_empty_word() {
        let fig = Preset::Figure1.system();
        let min_a2 = fig
            .maps()
            .iter()
            .map(|m| singular_values(&m.a).1)
            .fold(f64::INFINITY, f64::min);
        let r = 0.999 * min_a2 * fig.diameter();
        let sec = stopping_section(&fig, r, SectionVariant::Alpha2, SECTION_CAP).unwrap();
        assert!(sec.words().all(|w| !w.is_empty()));
        assert!(stopping_section(&fig, fig.diameter(), SectionVariant::Alpha2, 10).is_err());
    }

    #[test]
    fn section_inequalities_hold() {
        let fig = Preset::Figure1.system();
        let diam = fig.diameter();
        for variant in [SectionVariant::Alpha2, SectionVariant::Alpha1] {
            let r = 0.01 * diam;
            let sec = stopping_section(&fig, r, variant, SECTION_CAP).unwrap();
            let pick = |a: (f64, f64)| match variant {
                SectionVariant::Alpha2 => a.1,
                SectionVariant::Alpha1 => a.0,
            };
            for m in &sec.members {
                assert!(pick((m.alpha1, m.alpha2)) * diam <= r * (1.0 + 1e-12));
                let parent = compose_word(&fig, &m.word.prefix(m.word.len() - 1));
                assert!(pick(singular_values(&parent.a)) * diam > r);
            }
            let uniform = vec![1.0 / 6.0; 6];
            assert!((sec.bernoulli_mass(&uniform) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn section_cap_reports_scale_too_small() {
        let grid = Preset::Grid2x3.system();
        let r = 3f64.powi(-5) * grid.diameter();
        assert!(matches!(
            stopping_section(&grid, r, SectionVariant::Alpha2, 1000),
            Err(Error::ScaleTooSmall { .. })
        ));
    }

    #[test]
    fn bbox_examples() {
        let grid = Preset::Grid2x3.system();
        let r = grid.radius();
        let b = cylinder_bbox(&grid, &Word::empty());
        assert_eq!(b.half_lengths, (r, r));
        assert_eq!(b.center, grid.center());
        let b = cylinder_bbox(&grid, &Word::new(&[1, 4, 2]));
        assert!((b.half_lengths.0 - r / 8.0).abs() < 1e-15);
        assert!((b.half_lengths.1 - r / 27.0).abs() < 1e-15);
        let fig = Preset::Figure1.system();
        let b = cylinder_bbox(&fig, &Word::new(&[5]));
        let rf = fig.radius();
        assert!((b.half_lengths.0 - 0.3 * rf).abs() < 1e-15);
        assert!((b.half_lengths.1 - 0.1 * rf).abs() < 1e-15);
    }

    #[test]
    fn bbox_contains_image_of_ball() {
        let fig = Preset::Figure1.system();
        let w = Word::new(&[5, 2, 5]);
        let f = compose_word(&fig, &w);
        let b = cylinder_bbox(&fig, &w);
        for k in 0..360 {
            let t = (k as f64).to_radians();
            let x = fig.center() + Vec2::new(t.cos(), t.sin()).scale(fig.radius());
            assert!(b.contains(f.apply(x), 1e-12));
        }
    }
}
