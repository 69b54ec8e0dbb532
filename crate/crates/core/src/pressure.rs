//! Level sums of the singular value function and affinity-dimension roots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{log_phi, singular_values, Matrix2};
use crate::system::{IfsSystem, StructureTag};

/// Largest number of level-n words summed.
pub const LEVEL_CAP: u64 = 100_000_000;
/// Largest level whose singular values are cached during root finding.
const CACHE_CAP: u64 = 10_000_000;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn word_count(n_symbols: usize, n: usize) -> Result<u64> {
    (n_symbols as u64)
        .checked_pow(n as u32)
        .filter(|&c| c <= LEVEL_CAP)
        .ok_or_else(|| Error::BudgetExceeded(format!("{n_symbols}^{n} words exceeds {LEVEL_CAP}")))
}

fn visit_level<F: FnMut(&Matrix2)>(mats: &[Matrix2], prod: Matrix2, left: usize, f: &mut F) {
    if left == 0 {
        f(&prod);
        return;
    }
    for m in mats {
        visit_level(mats, prod * *m, left - 1, f);
    }
}

/// Runs `f(A_i, n − 1)` for each first symbol `i` in parallel, in symbol order.
fn per_prefix<T: Send, F>(mats: &[Matrix2], n: usize, f: F) -> Vec<T>
where
    F: Fn(Matrix2, usize) -> T + Sync,
{
    if n == 0 {
        return vec![f(Matrix2::IDENTITY, 0)];
    }
    (0..mats.len())
        .into_par_iter()
        .map(|i| f(mats[i], n - 1))
        .collect()
}

/// `S_n(s) = Σ_{|w|=n} φ^s(A_w)`.
pub fn level_sum(sys: &IfsSystem, n: usize, s: f64) -> Result<f64> {
    word_count(sys.len(), n)?;
    Ok(level_sum_matrices(&sys.matrices(), n, s))
}

pub fn level_sum_matrices(mats: &[Matrix2], n: usize, s: f64) -> f64 {
    let parts = per_prefix(mats, n, |head, left| {
        let mut acc = CompensatedSum::default();
        visit_level(mats, head, left, &mut |p| {
            let (a1, a2) = singular_values(p);
            acc.add(log_phi(a1.ln(), a2.ln(), s).exp());
        });
        acc.value()
    });
    parts.into_iter().collect::<CompensatedSum>().value()
}

/// Log singular values of every level-n product, in lexicographic order.
#[derive(Debug, Clone)]
pub struct LevelSpectrum {
    pub n: usize,
    pub log_alpha: Vec<(f64, f64)>,
}

impl LevelSpectrum {
    pub fn new(sys: &IfsSystem, n: usize) -> Result<Self> {
        word_count(sys.len(), n)?;
        let mats = sys.matrices();
        let parts = per_prefix(&mats, n, |head, left| {
            let mut out = Vec::new();
            visit_level(&mats, head, left, &mut |p| {
                let (a1, a2) = singular_values(p);
                out.push((a1.ln(), a2.ln()));
            });
            out
        });
        Ok(LevelSpectrum {
            n,
            log_alpha: parts.into_iter().flatten().collect(),
        })
    }

    pub fn sum(&self, s: f64) -> f64 {
        let parts: Vec<f64> = self
            .log_alpha
            .par_chunks(1 << 15)
            .map(|c| {
                c.iter()
                    .map(|&(l1, l2)| log_phi(l1, l2, s).exp())
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect();
        parts.into_iter().collect::<CompensatedSum>().value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub n: usize,
    /// Upper end of the final bracket, so `S_n(s_n) ≤ 1`.
    pub s_n: f64,
    pub sum_at_root: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Root of `S_n(s) = 1` by bisection; an upper bound for the affinity dimension.
pub fn affinity_upper_bound(sys: &IfsSystem, n: usize, tol: f64) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let count = word_count(sys.len(), n)?;
    let cached = (count <= CACHE_CAP)
        .then(|| LevelSpectrum::new(sys, n))
        .transpose()?;
    let mats = sys.matrices();
    let eval = |s: f64| match &cached {
        Some(c) => c.sum(s),
        None => level_sum_matrices(&mats, n, s),
    };
    bisect_unit_root(eval, n, tol)
}

fn bisect_unit_root<F: Fn(f64) -> f64>(eval: F, n: usize, tol: f64) -> Result<PressureEstimate> {
    let mut evaluations = 1;
    let at0 = eval(0.0);
    if at0 < 1.0 {
        return Err(Error::NoBracket(format!("S_{n}(0) = {at0} < 1")));
    }
    let mut lo = 0.0;
    let mut hi = 4.0;
    let mut at_hi = eval(hi);
    evaluations += 1;
    while at_hi > 1.0 {
        if hi >= 64.0 {
            return Err(Error::NoBracket(format!("S_{n}({hi}) = {at_hi} > 1")));
        }
        lo = hi;
        hi *= 2.0;
        at_hi = eval(hi);
        evaluations += 1;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid);
        evaluations += 1;
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
            at_hi = v;
        }
    }
    Ok(PressureEstimate {
        n,
        s_n: hi,
        sum_at_root: at_hi,
        bracket: (lo, hi),
        evaluations,
    })
}

/// Dominant and minor diagonal entries `(M_i, m_i)` of a diagonal or
/// lower-triangular system whose diagonals are uniformly ordered.
pub fn diagonal_pairs(sys: &IfsSystem) -> Result<Vec<(f64, f64)>> {
    if sys.tag() == StructureTag::General {
        return Err(Error::WrongStructure(
            "closed form needs a diagonal or lower-triangular system".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = sys
        .maps()
        .iter()
        .map(|m| (m.a.a11.abs(), m.a.a22.abs()))
        .collect();
    let below = pairs.iter().all(|&(a, c)| a < c);
    let above = pairs.iter().all(|&(a, c)| a > c);
    if !(below || above) {
        return Err(Error::WrongStructure(
            "diagonal entries are not uniformly ordered (need all |a_i| < |c_i| or all |a_i| > |c_i|)"
                .into(),
        ));
    }
    Ok(pairs
        .into_iter()
        .map(|(a, c)| (a.max(c), a.min(c)))
        .collect())
}

/// `Σ_i φ^s(diag(M_i, m_i))`.
pub fn closed_form_sum(pairs: &[(f64, f64)], s: f64) -> f64 {
    pairs
        .iter()
        .map(|&(big, small)| log_phi(big.ln(), small.ln(), s).exp())
        .collect::<CompensatedSum>()
        .value()
}

/// Root `s₀ ∈ (0, 2]` of `Σ |c_i| |a_i|^{s−1} = 1`.
pub fn affinity_closed_form(sys: &IfsSystem) -> Result<f64> {
    let pairs = diagonal_pairs(sys)?;
    if closed_form_sum(&pairs, 2.0) > 1.0 + 1e-12 {
        return Err(Error::NoRootInRange);
    }
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if closed_form_sum(&pairs, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let miss = |s: f64| (closed_form_sum(&pairs, s) - 1.0).abs();
    Ok(if miss(hi) <= miss(lo) { hi } else { lo })
}

/// Per-symbol weights `M_i^{min(1,s)} m_i^{max(0,s−1)}` of the closed form.
pub fn closed_form_weights(sys: &IfsSystem, s0: f64) -> Result<Vec<f64>> {
    Ok(diagonal_pairs(sys)?
        .iter()
        .map(|&(big, small)| log_phi(big.ln(), small.ln(), s0).exp())
        .collect())
}
