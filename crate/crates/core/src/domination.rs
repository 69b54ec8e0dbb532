//! Strongly invariant multicones for the transposed family, Furstenberg
//! directions and domination constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    coarsen, complement, image_unchecked, singular_values, svd2, union_arcs, ArcUnion, Matrix2,
    Multicone, ProjInterval, ProjPoint,
};
use crate::symbolic::{InfiniteWord, Word};
use crate::system::IfsSystem;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const PAD: f64 = 1e-3;
const DEPTH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    /// Multicone for `{A_iᵀ}`.
    pub cone: Multicone,
    /// `A_iᵀ` applied to each arc of the cone, per map.
    pub images: Vec<Vec<ProjInterval>>,
    pub margin: f64,
    /// `α₂(A_w) ≤ c_dom · tau^{|w|} · α₁(A_w)` on every test word.
    pub c_dom: f64,
    pub tau: f64,
    /// Word length whose projective contraction gave `tau`.
    pub tau_depth: usize,
}

impl DominationCertificate {
    pub fn image_arcs(&self) -> impl Iterator<Item = &ProjInterval> {
        self.images.iter().flatten()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn transposes(mats: &[Matrix2]) -> Vec<Matrix2> {
    mats.iter().map(Matrix2::transpose).collect()
}

fn cone_images(t: &[Matrix2], cone: &Multicone) -> Vec<Vec<ProjInterval>> {
    t.iter()
        .map(|m| {
            cone.intervals()
                .iter()
                .map(|j| image_unchecked(m, j))
                .collect()
        })
        .collect()
}

/// Largest projective derivative of `m` on the arc.
fn sup_derivative(m: &Matrix2, arc: &ProjInterval) -> f64 {
    let (a1, a2) = singular_values(m);
    let v2 = svd2(m).map(|s| s.v1.perp()).unwrap_or(ProjPoint::X_AXIS);
    let q = |p: ProjPoint| {
        let w = m.apply(p.unit());
        w.dot(w)
    };
    let min_sq = if arc.contains(v2, 0.0) {
        a2 * a2
    } else {
        q(arc.start_point()).min(q(arc.end_point()))
    };
    (a1 * a2) / min_sq
}

fn cone_sup_derivative(m: &Matrix2, cone: &Multicone) -> f64 {
    cone.intervals()
        .iter()
        .map(|j| sup_derivative(m, j))
        .fold(0.0, f64::max)
}

/// Contraction rate of the transposes on the cone, using blocks of length `k`.
fn contraction_rate(t: &[Matrix2], cone: &Multicone) -> (f64, usize) {
    let n = t.len();
    let mut best = (f64::INFINITY, 1);
    for k in 1..=8usize {
        let count = (n as u64).saturating_pow(k as u32);
        if count > 200_000 {
            break;
        }
        let mut worst: f64 = 0.0;
        for idx in 0..count as usize {
            let w = Word::from_index(idx, k, n);
            let m = w.symbols().fold(Matrix2::IDENTITY, |acc, s| t[s] * acc);
            worst = worst.max(cone_sup_derivative(&m, cone));
        }
        let rate = worst.powf(1.0 / k as f64);
        if rate < best.0 {
            best = (rate, k);
        }
        if rate < 1.0 {
            break;
        }
    }
    best
}

fn random_word(rng: &mut ChaCha8Rng, len: usize, n: usize) -> Word {
    let v: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
    Word::new(&v)
}

/// All words of length ≤ `full` and random samples up to length `max_len`.
fn test_words(n: usize, max_len: usize, samples: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut full = 0;
    let mut total: u64 = 0;
    while full < max_len {
        let next = (n as u64).saturating_pow(full as u32 + 1);
        if total + next > 100_000 {
            break;
        }
        total += next;
        full += 1;
        for idx in 0..next as usize {
            out.push(Word::from_index(idx, full, n));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for len in full + 1..=max_len {
        for _ in 0..samples {
            out.push(random_word(&mut rng, len, n));
        }
    }
    out
}

/// Certificate for a given cone, or an error if it is not strongly invariant.
pub fn certify_multicone(mats: &[Matrix2], cone: Multicone) -> Result<DominationCertificate> {
    for m in mats {
        m.check_nonsingular()?;
    }
    let t = transposes(mats);
    let images = cone_images(&t, &cone);
    let flat: Vec<ProjInterval> = images.iter().flatten().copied().collect();
    let margin = cone.margin(&flat);
    if margin <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cone is not strongly invariant (margin {margin:e})"
        )));
    }
    let (tau, tau_depth) = contraction_rate(&t, &cone);
    let mut c_dom: f64 = 1.0;
    for w in test_words(mats.len(), 12, 200) {
        let m = w.symbols().fold(Matrix2::IDENTITY, |acc, s| acc * mats[s]);
        let (a1, a2) = singular_values(&m);
        c_dom = c_dom.max((a2 / a1) / tau.powi(w.len() as i32));
    }
    Ok(DominationCertificate {
        cone,
        images,
        margin,
        c_dom,
        tau,
        tau_depth,
    })
}

/// Repelling directions of the projective actions of short transposed products.
fn repelling_seeds(t: &[Matrix2]) -> Vec<f64> {
    let n = t.len();
    let mut seeds = Vec::new();
    for k in 1..=3usize {
        let count = (n as u64).saturating_pow(k as u32);
        if count > 30_000 {
            break;
        }
        for idx in 0..count as usize {
            let w = Word::from_index(idx, k, n);
            let m = w.symbols().fold(Matrix2::IDENTITY, |acc, s| acc * t[s]);
            if let Ok(s) = svd2(&m) {
                seeds.push(s.v1.perp().angle());
            }
        }
    }
    seeds.sort_by(|a, b| a.total_cmp(b));
    seeds.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    seeds
}

pub const DEFAULT_MAX_INTERVALS: usize = 4;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Searches for a strongly invariant multicone by iterating `C ↦ pad(∪ A_iᵀ C)`.
pub fn find_multicone(
    sys: &IfsSystem,
    max_intervals: usize,
    max_iter: usize,
) -> Result<DominationCertificate> {
    find_multicone_for(&sys.matrices(), max_intervals, max_iter)
}

pub fn find_multicone_for(
    mats: &[Matrix2],
    max_intervals: usize,
    max_iter: usize,
) -> Result<DominationCertificate> {
    for m in mats {
        m.check_nonsingular()?;
    }
    let t = transposes(mats);
    let seeds = repelling_seeds(&t);
    let mut coarsening_failed = false;
    for delta in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let holes: Vec<ProjInterval> = seeds
            .iter()
            .map(|&s| ProjInterval {
                start: ProjPoint::from_angle(s - delta).angle(),
                len: 2.0 * delta,
            })
            .collect();
        let start = match union_arcs(&holes) {
            ArcUnion::Full => continue,
            ArcUnion::Arcs(h) => complement(&h),
        };
        if start.is_empty() {
            continue;
        }
        let mut arcs = coarsen(start, max_intervals);
        let mut coarsened = false;
        for _ in 0..max_iter {
            let Ok(cone) = Multicone::new(arcs.clone()) else {
                coarsening_failed |= coarsened;
                break;
            };
            let images = cone_images(&t, &cone);
            let flat: Vec<ProjInterval> = images.iter().flatten().copied().collect();
            if cone.margin(&flat) > 1e-9 {
                return certify_multicone(mats, tighten(&t, cone, max_intervals));
            }
            let padded: Option<Vec<ProjInterval>> = flat.iter().map(|j| j.padded(PAD)).collect();
            let Some(padded) = padded else { break };
            match union_arcs(&padded) {
                ArcUnion::Full => {
                    coarsening_failed |= coarsened;
                    break;
                }
                ArcUnion::Arcs(u) => {
                    coarsened = u.len() > max_intervals;
                    arcs = coarsen(u, max_intervals);
                }
            }
        }
    }
    if coarsening_failed {
        Err(Error::ConeCollapse(max_intervals))
    } else {
        Err(Error::NotDominatedWithin(max_iter))
    }
}

fn total_len(cone: &Multicone) -> f64 {
    cone.intervals().iter().map(|j| j.len).sum()
}

/// Shrinks an invariant cone towards the padded union of its images while it
/// stays strongly invariant.
fn tighten(t: &[Matrix2], mut cone: Multicone, max_intervals: usize) -> Multicone {
    for _ in 0..100 {
        let flat: Vec<ProjInterval> = cone_images(t, &cone).into_iter().flatten().collect();
        let Some(padded) = flat
            .iter()
            .map(|j| j.padded(PAD))
            .collect::<Option<Vec<_>>>()
        else {
            break;
        };
        let ArcUnion::Arcs(u) = union_arcs(&padded) else {
            break;
        };
        let Ok(next) = Multicone::new(coarsen(u, max_intervals)) else {
            break;
        };
        let images: Vec<ProjInterval> = cone_images(t, &next).into_iter().flatten().collect();
        if next.margin(&images) <= 1e-9 || total_len(&next) >= total_len(&cone) - 1e-12 {
            break;
        }
        cone = next;
    }
    cone
}

fn cone_spread(p: &Matrix2, cone: &Multicone) -> f64 {
    let mut pts = Vec::with_capacity(2 * cone.intervals().len());
    let mut longest: f64 = 0.0;
    for j in cone.intervals() {
        let img = image_unchecked(p, j);
        longest = longest.max(img.len);
        pts.push(img.start_point());
        pts.push(img.end_point());
    }
    let mut spread = longest;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            spread = spread.max(pts[a].dist(pts[b]));
        }
    }
    spread
}

/// `V(ī)`: the direction of `A_{i₁}ᵀ ⋯ A_{iₙ}ᵀ u` for `u` in the cone, once
/// the image of the whole cone is narrower than `tol`.
pub fn furstenberg_direction(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    w: &InfiniteWord,
    tol: f64,
) -> ProjPoint {
    furstenberg_direction_for(&sys.transposes(), &cert.cone, w, tol)
}

/// As [`furstenberg_direction`], given the transposed matrices.
pub fn furstenberg_direction_for(
    t: &[Matrix2],
    cone: &Multicone,
    w: &InfiniteWord,
    tol: f64,
) -> ProjPoint {
    let mid = cone.intervals()[0].midpoint();
    let mut p = Matrix2::IDENTITY;
    for s in w.symbols().take(DEPTH_CAP) {
        p = p * t[s];
        p = p.scale(1.0 / p.max_abs());
        if cone_spread(&p, cone) < tol {
            break;
        }
    }
    p.act(mid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominConstants {
    /// Largest `α₁(A_w) / ‖A_wᵀ v(V)‖` seen.
    pub c_emp: f64,
    pub word: Word,
    pub direction: ProjPoint,
    /// Running maximum after each depth `1..=depth`.
    pub per_depth: Vec<f64>,
}

/// Comparability constant of `‖A_wᵀ|V‖` with `α₁(A_w)` over all `|w| ≤ depth`
/// and sampled `V ∈ ∪ A_iᵀ C`.
pub fn domin_constants(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    depth: usize,
) -> Result<DominConstants> {
    domin_constants_for(&sys.matrices(), cert, depth)
}

pub fn domin_constants_for(
    mats: &[Matrix2],
    cert: &DominationCertificate,
    depth: usize,
) -> Result<DominConstants> {
    let n = mats.len();
    crate::pressure::word_count(n, depth)?;
    let dirs: Vec<ProjPoint> = cert
        .image_arcs()
        .flat_map(|j| (0..=8).map(move |k| j.at(k as f64 / 8.0)))
        .collect();
    let units: Vec<_> = dirs.iter().map(|p| p.unit()).collect();
    let t = transposes(mats);

    struct Best {
        per_depth: Vec<(f64, Word, usize)>,
    }
    fn walk(
        t: &[Matrix2],
        units: &[crate::linalg::Vec2],
        word: &mut Word,
        mt: Matrix2,
        depth: usize,
        best: &mut Best,
    ) {
        let d = word.len();
        let (a1, _) = singular_values(&mt);
        for (k, u) in units.iter().enumerate() {
            let r = a1 / mt.apply(*u).norm();
            if r > best.per_depth[d - 1].0 {
                best.per_depth[d - 1] = (r, word.clone(), k);
            }
        }
        if d == depth {
            return;
        }
        for (s, ts) in t.iter().enumerate() {
            word.push(s);
            walk(t, units, word, *ts * mt, depth, best);
            let mut v: Vec<usize> = word.symbols().collect();
            v.pop();
            *word = Word::new(&v);
        }
    }

    let branches: Vec<Best> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut best = Best {
                per_depth: vec![(f64::NEG_INFINITY, Word::empty(), 0); depth],
            };
            if depth > 0 {
                let mut word = Word::new(&[s]);
                walk(&t, &units, &mut word, t[s], depth, &mut best);
            }
            best
        })
        .collect();
    let mut per_depth = Vec::with_capacity(depth);
    let mut overall = (1.0, Word::empty(), 0usize);
    for d in 0..depth {
        for b in &branches {
            let (r, w, k) = &b.per_depth[d];
            if *r > overall.0 {
                overall = (*r, w.clone(), *k);
            }
        }
        per_depth.push(overall.0);
    }
    Ok(DominConstants {
        c_emp: overall.0,
        word: overall.1,
        direction: dirs.get(overall.2).copied().unwrap_or(ProjPoint::X_AXIS),
        per_depth,
    })
}
