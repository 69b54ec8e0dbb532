//! Finite-scale checks of separation and mass-distribution conditions, the
//! carpet slice criterion and the hypotheses of the worked examples.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{invariant_polygon, separation, Polygon};
use crate::linalg::{singular_values, ProjPoint, Vec2};
use crate::presets::{Carpet, Preset};
use crate::pressure::{affinity_closed_form, affinity_upper_bound, CompensatedSum};
use crate::symbolic::{
    compose_word, natural_project, stopping_section, InfiniteWord, SectionVariant, Word,
    SECTION_CAP,
};
use crate::system::{AffineMap, IfsSystem};
use crate::transfer::KaenmakiMeasure;

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_SEED: u64 = 0x5EED;
const NODE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Bounded,
    Divergent,
    Separated,
    Touching,
    Overlapping,
    Inconclusive,
    Satisfied,
    NotSatisfied,
    /// The carpet criterion forces `H^{s₀}(X) = 0`.
    NullMeasure,
}

impl Verdict {
    /// Whether a gate on this verdict should pass.
    pub fn passes(self) -> bool {
        matches!(
            self,
            Verdict::Bounded | Verdict::Separated | Verdict::Satisfied | Verdict::NullMeasure
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Word>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<ProjPoint>,
    pub value: f64,
}

/// `{check, scales, max_ratio, witness, verdict}` for the scale-sweeping checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub scales: Vec<f64>,
    pub max_ratio: Vec<f64>,
    /// One witness per scale.
    pub witness: Vec<Witness>,
    pub verdict: Verdict,
}

/// Points `π(ī)` for random words `ī`, with the words.
pub fn sample_points(sys: &IfsSystem, count: usize, seed: u64) -> Vec<(Word, Vec2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.len();
    (0..count)
        .map(|_| {
            let prefix: Vec<usize> = (0..48).map(|_| rng.random_range(0..n)).collect();
            let prefix = Word::new(&prefix);
            let x = sample_point(sys, &prefix);
            (prefix, x)
        })
        .collect()
}

/// `π(w 0 0 0 …)`.
pub fn sample_point(sys: &IfsSystem, w: &Word) -> Vec2 {
    let iw = InfiniteWord::new(w.clone(), Word::new(&[0])).expect("nonempty period");
    natural_project(sys, &iw, 1e-13 * sys.diameter())
}

/// Ratios that grow strictly as the scale shrinks, by a factor of 4 overall.
fn trend(scales: &[f64], ratios: &[f64]) -> Verdict {
    let mut pairs: Vec<(f64, f64)> = scales.iter().copied().zip(ratios.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pairs.len() < 2 {
        return Verdict::Bounded;
    }
    let rising = pairs.windows(2).all(|p| p[1].1 > p[0].1);
    let first = pairs[0].1;
    let last = pairs[pairs.len() - 1].1;
    if rising && last >= 4.0 * first {
        Verdict::Divergent
    } else {
        Verdict::Bounded
    }
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() || scales.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("scales must be positive".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------- SSC

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscReport {
    pub verdict: Verdict,
    /// Cylinder pair that still meets at the deepest level examined.
    pub witness: Option<(Word, Word)>,
    /// Signed gap of the witness pair (negative: penetration).
    pub gap: f64,
    pub depth: usize,
}

const PAIR_CAP: usize = 200_000;
const GAP_TOL: f64 = 1e-12;

/// Separation of the first-level pieces, refining overlapping pairs of
/// cylinder polygons `f_w(K)` down to `depth`.
pub fn ssc_check(sys: &IfsSystem, depth: usize) -> SscReport {
    let hull = invariant_polygon(sys);
    let poly = |f: &AffineMap| hull.transform(&f.a, f.t);
    let n = sys.len();
    let mut pairs: Vec<(Word, AffineMap, Word, AffineMap)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((Word::new(&[i]), *sys.map(i), Word::new(&[j]), *sys.map(j)));
        }
    }
    let mut level = 1;
    loop {
        let mut live = Vec::new();
        let mut worst: Option<(f64, f64, Word, Word)> = None;
        for (wa, fa, wb, fb) in pairs {
            let (pa, pb) = (poly(&fa), poly(&fb));
            let gap = separation(&pa, &pb);
            if gap > GAP_TOL {
                continue;
            }
            let width = pa.min_width().min(pb.min_width());
            let depth_ratio = if width > 0.0 {
                -gap / width
            } else {
                f64::INFINITY
            };
            if worst.as_ref().map_or(true, |w| depth_ratio > w.1) {
                worst = Some((gap, depth_ratio, wa.clone(), wb.clone()));
            }
            live.push((wa, fa, wb, fb));
        }
        let Some((gap, depth_ratio, wa, wb)) = worst else {
            return SscReport {
                verdict: Verdict::Separated,
                witness: None,
                gap: f64::NAN,
                depth: level,
            };
        };
        if level >= depth {
            let verdict = if depth_ratio <= 1e-2 {
                Verdict::Touching
            } else {
                Verdict::Overlapping
            };
            return SscReport {
                verdict,
                witness: Some((wa, wb)),
                gap,
                depth: level,
            };
        }
        if live.len() * n > PAIR_CAP {
            return SscReport {
                verdict: Verdict::Inconclusive,
                witness: Some((wa, wb)),
                gap,
                depth: level,
            };
        }
        // Split the larger cylinder of each live pair.
        pairs = Vec::with_capacity(live.len() * n);
        for (wa, fa, wb, fb) in live {
            let sa = singular_values(&fa.a).0;
            let sb = singular_values(&fb.a).0;
            for k in 0..n {
                if sa >= sb {
                    pairs.push((wa.pushed(k), fa.compose(sys.map(k)), wb.clone(), fb));
                } else {
                    pairs.push((wa.clone(), fa, wb.pushed(k), fb.compose(sys.map(k))));
                }
            }
        }
        level += 1;
    }
}

// ---------------------------------------------------------------- OBNC

/// Axis-aligned open rectangle `(lo.x, hi.x) × (lo.y, hi.y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Rect {
    pub fn unit() -> Self {
        Rect {
            lo: Vec2::new(0.0, 0.0),
            hi: Vec2::new(1.0, 1.0),
        }
    }

    pub fn polygon(&self) -> Polygon {
        Polygon {
            vertices: vec![
                self.lo,
                Vec2::new(self.hi.x, self.lo.y),
                self.hi,
                Vec2::new(self.lo.x, self.hi.y),
            ],
        }
    }

    pub fn translated(&self, d: Vec2) -> Rect {
        Rect {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }

    fn contains_closed(&self, p: Vec2, tol: f64) -> bool {
        p.x >= self.lo.x - tol
            && p.x <= self.hi.x + tol
            && p.y >= self.lo.y - tol
            && p.y <= self.hi.y + tol
    }
}

/// `#{w ∈ Δ_r : f_w(U) ∩ B(x, r) ≠ ∅}` for the given section polygons.
fn obnc_count(polys: &[Polygon], x: Vec2, r: f64) -> usize {
    polys.iter().filter(|p| p.distance(x) < r).count()
}

/// Largest number of `Δ_r` images of `U` meeting an `r`-ball about sampled
/// points of `X`, per scale.
pub fn obnc_check(
    sys: &IfsSystem,
    u: &Rect,
    scales: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_scales(scales)?;
    let tol = 1e-12 * (u.hi - u.lo).norm();
    for (i, m) in sys.maps().iter().enumerate() {
        let img = u.polygon().transform(&m.a, m.t);
        if !img.vertices.iter().all(|&p| u.contains_closed(p, tol)) {
            return Err(Error::NotForwardInvariant(i));
        }
    }
    let points = sample_points(sys, samples, seed);
    let base = u.polygon();
    let mut max_ratio = Vec::with_capacity(scales.len());
    let mut witness = Vec::with_capacity(scales.len());
    for &r in scales {
        let section = stopping_section(sys, r, SectionVariant::Alpha2, SECTION_CAP)?;
        let polys: Vec<Polygon> = section
            .members
            .iter()
            .map(|m| base.transform(&m.map.a, m.map.t))
            .collect();
        let counts: Vec<usize> = points
            .par_iter()
            .map(|(_, x)| obnc_count(&polys, *x, r))
            .collect();
        let (best, &count) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("at least one sample");
        max_ratio.push(count as f64);
        witness.push(Witness {
            word: Some(points[best].0.clone()),
            point: Some(points[best].1),
            direction: None,
            value: count as f64,
        });
    }
    let verdict = trend(scales, &max_ratio);
    Ok(CheckReport {
        check: "obnc".into(),
        scales: scales.to_vec(),
        max_ratio,
        witness,
        verdict,
    })
}

/// Recount for a witness of [`obnc_check`].
pub fn obnc_count_at(sys: &IfsSystem, u: &Rect, x: Vec2, r: f64) -> Result<usize> {
    let section = stopping_section(sys, r, SectionVariant::Alpha2, SECTION_CAP)?;
    let base = u.polygon();
    let polys: Vec<Polygon> = section
        .members
        .iter()
        .map(|m| base.transform(&m.map.a, m.map.t))
        .collect();
    Ok(obnc_count(&polys, x, r))
}

// ---------------------------------------------------------------- masses

/// Upper estimate of `π_*μ_K(B(x, r))`: cylinders inside the ball count
/// fully, cylinders of diameter `≤ r/16` meeting it count fully.
pub fn ball_mass(
    sys: &IfsSystem,
    mu: &KaenmakiMeasure,
    hull: &Polygon,
    x: Vec2,
    r: f64,
) -> Result<f64> {
    let k_diam = hull.diameter();
    let mut total = CompensatedSum::default();
    let mut nodes = 0usize;
    let mut stack = vec![(Word::empty(), AffineMap::IDENTITY, 1.0f64)];
    while let Some((w, f, mass)) = stack.pop() {
        nodes += 1;
        if nodes > NODE_CAP {
            return Err(Error::BudgetExceeded(format!(
                "mass of B(x, {r}) needs more than {NODE_CAP} cylinders"
            )));
        }
        let p = hull.transform(&f.a, f.t);
        if p.max_distance(x) <= r {
            total.add(mass);
            continue;
        }
        if p.distance(x) >= r {
            continue;
        }
        if singular_values(&f.a).0 * k_diam <= r / 16.0 {
            total.add(mass);
            continue;
        }
        for k in 0..sys.len() {
            let child = mu.child_mass(&w, mass, k);
            if child > 0.0 {
                stack.push((w.pushed(k), f.compose(sys.map(k)), child));
            }
        }
    }
    Ok(total.value())
}

/// `sup_x π_*μ_K(B(x, r)) / r^{s₀}` per scale over sampled `x ∈ X`.
pub fn mass_distribution_check(
    sys: &IfsSystem,
    mu: &KaenmakiMeasure,
    s0: f64,
    scales: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_scales(scales)?;
    let hull = invariant_polygon(sys);
    let points = sample_points(sys, samples, seed);
    let mut max_ratio = Vec::new();
    let mut witness = Vec::new();
    for &r in scales {
        let ratios: Vec<f64> = points
            .par_iter()
            .map(|(_, x)| ball_mass(sys, mu, &hull, *x, r).map(|m| m / r.powf(s0)))
            .collect::<Result<_>>()?;
        let (best, &value) = argmax(&ratios);
        max_ratio.push(value);
        witness.push(Witness {
            word: Some(points[best].0.clone()),
            point: Some(points[best].1),
            direction: None,
            value,
        });
    }
    let verdict = trend(scales, &max_ratio);
    Ok(CheckReport {
        check: "mass".into(),
        scales: scales.to_vec(),
        max_ratio,
        witness,
        verdict,
    })
}

fn argmax(v: &[f64]) -> (usize, &f64) {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("at least one sample")
}

/// Upper estimate of `(proj_V)_*π_*μ_K([t − r, t + r])`.
///
/// Cylinders are refined a level at a time. Two cylinders with the same
/// projected map `x ↦ ⟨A_wᵀu, x⟩ + ⟨u, t_w⟩` and the same measure state have
/// identical projected subtrees, so they are merged.
pub fn interval_mass(
    sys: &IfsSystem,
    mu: &KaenmakiMeasure,
    hull: &Polygon,
    v: ProjPoint,
    t: f64,
    r: f64,
) -> Result<f64> {
    struct Node {
        word: Word,
        g: Vec2,
        c: f64,
        mass: f64,
    }
    let u = v.unit();
    let memory = mu.memory();
    let quantum = 1e-13 * hull.diameter().max(1.0);
    let q = |x: f64| (x / quantum).round() as i64;
    let mut total = CompensatedSum::default();
    let mut nodes = 0usize;
    let mut level = vec![Node {
        word: Word::empty(),
        g: u,
        c: 0.0,
        mass: 1.0,
    }];
    while !level.is_empty() {
        let mut next: BTreeMap<(i64, i64, i64, Word), Node> = BTreeMap::new();
        for node in level {
            nodes += 1;
            if nodes > NODE_CAP {
                return Err(Error::BudgetExceeded(format!(
                    "projected mass at scale {r} needs more than {NODE_CAP} cylinders"
                )));
            }
            let (lo, hi) = hull.project_range(node.g);
            let (lo, hi) = (lo + node.c, hi + node.c);
            if (lo >= t - r && hi <= t + r) || hi - lo <= r / 32.0 {
                if hi >= t - r && lo <= t + r {
                    total.add(node.mass);
                }
                continue;
            }
            if hi < t - r || lo > t + r {
                continue;
            }
            for k in 0..sys.len() {
                let mass = mu.child_mass(&node.word, node.mass, k);
                if mass <= 0.0 {
                    continue;
                }
                let m = sys.map(k);
                let word = node.word.pushed(k);
                let g = m.a.transpose().apply(node.g);
                let c = node.c + node.g.dot(m.t);
                let state = word.suffix_from(word.len().saturating_sub(memory));
                next.entry((q(g.x), q(g.y), q(c), state))
                    .and_modify(|n| n.mass += mass)
                    .or_insert(Node { word, g, c, mass });
            }
        }
        level = next.into_values().collect();
    }
    Ok(total.value())
}

/// `sup_{t, V} (proj_V)_*π_*μ_K(B(t, r)) / r` per scale.
pub fn projection_density_check(
    sys: &IfsSystem,
    mu: &KaenmakiMeasure,
    directions: &[ProjPoint],
    scales: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_scales(scales)?;
    if directions.is_empty() {
        return Err(Error::InvalidArgument("no directions given".into()));
    }
    let hull = invariant_polygon(sys);
    let points = sample_points(sys, samples, seed);
    let mut max_ratio = Vec::new();
    let mut witness = Vec::new();
    for &r in scales {
        let jobs: Vec<(usize, usize)> = (0..directions.len())
            .flat_map(|d| (0..points.len()).map(move |p| (d, p)))
            .collect();
        let ratios: Vec<f64> = jobs
            .par_iter()
            .map(|&(d, p)| {
                let v = directions[d];
                let t = v.unit().dot(points[p].1);
                interval_mass(sys, mu, &hull, v, t, r).map(|m| m / r)
            })
            .collect::<Result<_>>()?;
        let (best, &value) = argmax(&ratios);
        let (d, p) = jobs[best];
        max_ratio.push(value);
        witness.push(Witness {
            word: Some(points[p].0.clone()),
            point: Some(points[p].1),
            direction: Some(directions[d]),
            value,
        });
    }
    let verdict = trend(scales, &max_ratio);
    Ok(CheckReport {
        check: "projection".into(),
        scales: scales.to_vec(),
        max_ratio,
        witness,
        verdict,
    })
}

// ---------------------------------------------------------------- carpets

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDimensionReport {
    pub column: usize,
    pub column_count: usize,
    pub slice_dimension: f64,
    pub s_n: f64,
    pub level: usize,
    pub verdict: Verdict,
}

/// Compares `s_n − 1` with the dimension `log(max column count)/log q` of the
/// fullest carpet slice.
pub fn slice_dimension_verdict(carpet: &Carpet, s_n: f64, level: usize) -> SliceDimensionReport {
    let mut counts = vec![0usize; carpet.p];
    for &(j, _) in &carpet.digits {
        counts[j] += 1;
    }
    let (column, &column_count) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("p ≥ 1");
    let slice_dimension = if column_count == 0 {
        0.0
    } else {
        (column_count as f64).ln() / (carpet.q as f64).ln()
    };
    let verdict = if column_count > 1 && s_n - 1.0 < slice_dimension {
        Verdict::NullMeasure
    } else {
        Verdict::Inconclusive
    };
    SliceDimensionReport {
        column,
        column_count,
        slice_dimension,
        s_n,
        level,
        verdict,
    }
}

pub fn slice_dimension_criterion(
    sys: &IfsSystem,
    carpet: &Carpet,
    level: usize,
) -> Result<SliceDimensionReport> {
    let s_n = affinity_upper_bound(sys, level, 1e-12)?.s_n;
    Ok(slice_dimension_verdict(carpet, s_n, level))
}

// ---------------------------------------------------------------- examples

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub value: f64,
    /// `"<"` or `">"`.
    pub relation: String,
    pub bound: f64,
    pub holds: bool,
}

/// Strict inequalities must clear rounding noise.
const STRICT_MARGIN: f64 = 1e-9;

impl Hypothesis {
    fn less(name: &str, value: f64, bound: f64) -> Self {
        Hypothesis {
            name: name.into(),
            value,
            relation: "<".into(),
            bound,
            holds: value < bound - STRICT_MARGIN * bound.abs().max(1.0),
        }
    }

    fn greater(name: &str, value: f64, bound: f64) -> Self {
        Hypothesis {
            name: name.into(),
            value,
            relation: ">".into(),
            bound,
            holds: value > bound + STRICT_MARGIN * bound.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub preset: String,
    pub s0: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub verdict: Verdict,
}

fn sum(it: impl Iterator<Item = f64>) -> f64 {
    it.collect::<CompensatedSum>().value()
}

/// Evaluates the hypotheses of the diagonal and triangular examples.
pub fn verify_example_hypotheses(preset: Preset) -> Result<HypothesisReport> {
    let sys = preset.system();
    let diag: Vec<(f64, f64)> = sys
        .maps()
        .iter()
        .map(|m| (m.a.a11.abs(), m.a.a22.abs()))
        .collect();
    let max_c = diag.iter().map(|d| d.1).fold(0.0, f64::max);
    let max_ratio = diag.iter().map(|d| d.0 / d.1).fold(0.0, f64::max);
    let s0 = affinity_closed_form(&sys)?;
    let hypotheses = match preset {
        Preset::Ex1Diag => vec![
            Hypothesis::less("max |c_i|", max_c, 0.5),
            Hypothesis::greater(
                "Σ |c_i| |a_i|^(1/4)",
                sum(diag.iter().map(|d| d.1 * d.0.powf(0.25))),
                1.0,
            ),
            Hypothesis::less("Σ |a_i|^(1/2)", sum(diag.iter().map(|d| d.0.sqrt())), 1.0),
            Hypothesis::less("max |a_i| / |c_i|", max_ratio, 1.0),
        ],
        Preset::Ex2Triangular(_) => {
            let mut intervals: Vec<(f64, f64)> = sys
                .maps()
                .iter()
                .map(|m| {
                    let a = m.a.a11;
                    let (x0, x1) = (m.t.x, m.t.x + a);
                    (x0.min(x1), x0.max(x1))
                })
                .collect();
            intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let gap = intervals
                .windows(2)
                .map(|w| w[1].0 - w[0].1)
                .fold(f64::INFINITY, f64::min);
            vec![
                Hypothesis::less("max |a_i| / |c_i|", max_ratio, 1.0),
                Hypothesis::less("max |c_i|", max_c, 0.5),
                Hypothesis::greater("Σ |c_i|", sum(diag.iter().map(|d| d.1)), 1.0),
                Hypothesis::less(
                    "Σ |c_i|^-1 |a_i|^(2(s0-1))",
                    sum(diag.iter().map(|d| d.0.powf(2.0 * (s0 - 1.0)) / d.1)),
                    1.0,
                ),
                Hypothesis::greater("min gap of {a_i x + t_i1}", gap, 0.0),
            ]
        }
        other => {
            return Err(Error::WrongPreset {
                expected: "ex1-diag or ex2-triangular".into(),
                got: other.to_string(),
            })
        }
    };
    let verdict = if hypotheses.iter().all(|h| h.holds) {
        Verdict::Satisfied
    } else {
        Verdict::NotSatisfied
    };
    Ok(HypothesisReport {
        preset: preset.to_string(),
        s0,
        hypotheses,
        verdict,
    })
}

/// A direction from `X_F` for each of a few random words.
pub fn sample_directions(
    sys: &IfsSystem,
    cert: &crate::domination::DominationCertificate,
    count: usize,
    seed: u64,
) -> Vec<ProjPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.len();
    (0..count)
        .map(|_| {
            let period: Vec<usize> = (0..8).map(|_| rng.random_range(0..n)).collect();
            crate::domination::furstenberg_direction(
                sys,
                cert,
                &InfiniteWord::periodic(&Word::new(&period)),
                1e-13,
            )
        })
        .collect()
}

/// `f_w(K)` for a witness word, for re-evaluating reports.
pub fn cylinder_polygon(sys: &IfsSystem, w: &Word) -> Polygon {
    let f = compose_word(sys, w);
    invariant_polygon(sys).transform(&f.a, f.t)
}
