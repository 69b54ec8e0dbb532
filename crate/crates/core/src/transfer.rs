//! Potential, Perron–Frobenius operator on depth-`m` cylinders and the
//! Kaenmaki measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domination::{furstenberg_direction_for, DominationCertificate};
use crate::error::{Error, Result};
use crate::linalg::{log_phi, singular_values, Matrix2};
use crate::pressure::{
    affinity_closed_form, affinity_upper_bound, closed_form_weights, CompensatedSum,
};
use crate::symbolic::{InfiniteWord, Word};
use crate::system::{IfsSystem, StructureTag};

pub const STATE_CAP: usize = 2_000_000;
pub const MAX_ITER: usize = 10_000;
const DIRECTION_TOL: f64 = 1e-14;

/// Where an `s₀` value came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum S0Source {
    ClosedForm,
    UpperBound { level: usize },
}

/// Closed form where the structure allows it, else the level-`n` upper bound.
pub fn s0_surrogate(sys: &IfsSystem, n: usize) -> Result<(f64, S0Source)> {
    if sys.tag() != StructureTag::General {
        if let Ok(s) = affinity_closed_form(sys) {
            return Ok((s, S0Source::ClosedForm));
        }
    }
    let est = affinity_upper_bound(sys, n, 1e-12)?;
    Ok((est.s_n, S0Source::UpperBound { level: n }))
}

/// `e^{g}` for the first symbol `k` and the direction `v = V(σī)`:
/// `‖A_kᵀv‖^{2−s₀} |det A_k|^{s₀−1}`.
pub fn potential_weight(a: &Matrix2, v: crate::linalg::Vec2, s0: f64) -> f64 {
    let nv = a.transpose().apply(v).norm();
    ((2.0 - s0) * nv.ln() + (s0 - 1.0) * a.det().abs().ln()).exp()
}

/// `g(ī) = log‖A_{i₁}ᵀ|V(σī)‖ − (s₀−1) log‖A_{i₁}⁻¹|V(σī)^⊥‖`.
pub fn potential_g(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    s0: f64,
    w: &InfiniteWord,
    tol: f64,
) -> f64 {
    let v = furstenberg_direction_for(&sys.transposes(), &cert.cone, &w.shift(), tol);
    let a = sys.map(w.symbol(0)).a;
    let along = a.transpose().apply(v.unit()).norm();
    let across = a
        .inverse()
        .expect("validated")
        .apply(v.perp().unit())
        .norm();
    along.ln() - (s0 - 1.0) * across.ln()
}

/// A function on `Σ` constant on depth-`m` cylinders, indexed lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    pub depth: usize,
    pub n_symbols: usize,
    pub values: Vec<f64>,
}

impl CylinderFunction {
    pub fn constant(depth: usize, n_symbols: usize, c: f64) -> Self {
        CylinderFunction {
            depth,
            n_symbols,
            values: vec![c; n_symbols.pow(depth as u32)],
        }
    }

    pub fn get(&self, w: &Word) -> f64 {
        self.values[w.index(self.n_symbols)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Nonnegative masses on depth-`m` cylinders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureApprox {
    pub depth: usize,
    pub n_symbols: usize,
    pub masses: Vec<f64>,
}

impl MeasureApprox {
    pub fn uniform(depth: usize, n_symbols: usize) -> Self {
        let k = n_symbols.pow(depth as u32);
        MeasureApprox {
            depth,
            n_symbols,
            masses: vec![1.0 / k as f64; k],
        }
    }

    pub fn total(&self) -> f64 {
        self.masses
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }
}

/// `L` discretised on depth-`m` cylinders; `V` is read at periodic extensions.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    pub n_symbols: usize,
    pub depth: usize,
    pub s0: f64,
    /// `weights[idx(w)·N + k] = e^{g(k w^∞)}`.
    weights: Vec<f64>,
}

impl TransferOperator {
    pub fn new(
        sys: &IfsSystem,
        cert: &DominationCertificate,
        s0: f64,
        depth: usize,
    ) -> Result<Self> {
        let n = sys.len();
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        let states = (n as u64).saturating_pow(depth as u32);
        if states > STATE_CAP as u64 {
            return Err(Error::BudgetExceeded(format!(
                "{states} cylinders at depth {depth} exceeds {STATE_CAP}"
            )));
        }
        let mats = sys.matrices();
        let t = sys.transposes();
        let weights = (0..states as usize)
            .into_par_iter()
            .flat_map_iter(|idx| {
                let w = Word::from_index(idx, depth, n);
                let v = furstenberg_direction_for(
                    &t,
                    &cert.cone,
                    &InfiniteWord::periodic(&w),
                    DIRECTION_TOL,
                )
                .unit();
                mats.iter()
                    .map(move |a| potential_weight(a, v, s0))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(TransferOperator {
            n_symbols: n,
            depth,
            s0,
            weights,
        })
    }

    /// Operator with a potential that only depends on the first symbol.
    pub fn bernoulli(weights: &[f64], depth: usize) -> Self {
        let n = weights.len();
        let states = n.pow(depth as u32);
        TransferOperator {
            n_symbols: n,
            depth,
            s0: f64::NAN,
            weights: (0..states).flat_map(|_| weights.iter().copied()).collect(),
        }
    }

    pub fn states(&self) -> usize {
        self.weights.len() / self.n_symbols
    }

    pub fn weight(&self, state: usize, k: usize) -> f64 {
        self.weights[state * self.n_symbols + k]
    }

    /// Index of `(k w)|_m` for `w` of index `state`.
    fn prepend(&self, k: usize, state: usize) -> usize {
        k * (self.states() / self.n_symbols) + state / self.n_symbols
    }
}

/// `(Lf)(w) = Σ_k e^{g(kw)} f((kw)|_m)`.
pub fn transfer_apply(op: &TransferOperator, f: &CylinderFunction) -> CylinderFunction {
    let n = op.n_symbols;
    let values = (0..op.states())
        .into_par_iter()
        .map(|w| {
            (0..n)
                .map(|k| op.weight(w, k) * f.values[op.prepend(k, w)])
                .sum()
        })
        .collect();
    CylinderFunction {
        depth: op.depth,
        n_symbols: n,
        values,
    }
}

/// `(L*ν)([u]) = Σ_j e^{g(u)} ν([u₂…u_m j])`.
pub fn transfer_dual_apply(op: &TransferOperator, nu: &MeasureApprox) -> MeasureApprox {
    let n = op.n_symbols;
    let tail = op.states() / n;
    let masses = (0..op.states())
        .into_par_iter()
        .map(|u| {
            let first = u / tail;
            let rest = u % tail;
            (0..n)
                .map(|j| {
                    let w = rest * n + j;
                    op.weight(w, first) * nu.masses[w]
                })
                .sum()
        })
        .collect();
    MeasureApprox {
        depth: op.depth,
        n_symbols: n,
        masses,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerResult<T> {
    pub value: T,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Sup-normalised power iteration for `Lp = λp`.
pub fn eigenfunction_p(
    op: &TransferOperator,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult<CylinderFunction>> {
    let mut f = CylinderFunction::constant(op.depth, op.n_symbols, 1.0);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let lf = transfer_apply(op, &f);
        let lambda = lf.sup_norm();
        residual = lf
            .values
            .iter()
            .zip(&f.values)
            .fold(0.0f64, |m, (a, b)| m.max((a / lambda - b).abs()));
        f = CylinderFunction {
            values: lf.values.iter().map(|v| v / lambda).collect(),
            ..lf
        };
        if residual <= tol {
            return Ok(PowerResult {
                value: f,
                lambda,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Power iteration for `L*ν = λν` with total mass 1; residual in total variation.
pub fn conformal_nu(
    op: &TransferOperator,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult<MeasureApprox>> {
    let mut nu = MeasureApprox::uniform(op.depth, op.n_symbols);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = transfer_dual_apply(op, &nu);
        let lambda = next.total();
        residual = next
            .masses
            .iter()
            .zip(&nu.masses)
            .map(|(a, b)| (a / lambda - b).abs())
            .collect::<CompensatedSum>()
            .value();
        nu = MeasureApprox {
            masses: next.masses.iter().map(|v| v / lambda).collect(),
            ..next
        };
        if residual <= tol {
            return Ok(PowerResult {
                value: nu,
                lambda,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Eigen-data of `L` at depth `m`, normalised so that `∫p dν = 1`.
#[derive(Debug, Clone)]
pub struct KaenmakiApprox {
    pub op: TransferOperator,
    pub p: CylinderFunction,
    pub nu: MeasureApprox,
    pub lambda: f64,
    pub p_residual: f64,
    pub nu_residual: f64,
    /// `μ_F` on depth-`m` cylinders.
    mu: Vec<f64>,
}

impl KaenmakiApprox {
    pub fn new(op: TransferOperator, tol: f64) -> Result<Self> {
        let nu = conformal_nu(&op, tol, MAX_ITER)?;
        let p = eigenfunction_p(&op, tol, MAX_ITER)?;
        let pairing: f64 = p
            .value
            .values
            .iter()
            .zip(&nu.value.masses)
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value();
        let values: Vec<f64> = p.value.values.iter().map(|v| v / pairing).collect();
        let p = CylinderFunction { values, ..p.value };
        let lp = transfer_apply(&op, &p);
        let lambda = lp
            .values
            .iter()
            .zip(&nu.value.masses)
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value();
        let p_residual = lp
            .values
            .iter()
            .zip(&p.values)
            .fold(0.0f64, |m, (a, b)| m.max((a / lambda - b).abs()));
        let lnu = transfer_dual_apply(&op, &nu.value);
        let nu_residual = lnu
            .masses
            .iter()
            .zip(&nu.value.masses)
            .map(|(a, b)| (a / lambda - b).abs())
            .collect::<CompensatedSum>()
            .value();
        let mu = p
            .values
            .iter()
            .zip(&nu.value.masses)
            .map(|(a, b)| a * b)
            .collect();
        Ok(KaenmakiApprox {
            op,
            p,
            nu: nu.value,
            lambda,
            p_residual,
            nu_residual,
            mu,
        })
    }

    pub fn depth(&self) -> usize {
        self.op.depth
    }

    /// `μ_F([w]) = Σ` of `p·ν` over the depth-`m` refinements of `[w]`.
    pub fn mu_f(&self, w: &Word) -> Result<f64> {
        let m = self.depth();
        if w.len() > m {
            return Err(Error::DepthExceeded {
                len: w.len(),
                depth: m,
            });
        }
        let n = self.op.n_symbols;
        w.check(n)?;
        let block = n.pow((m - w.len()) as u32);
        let start = w.index(n) * block;
        Ok(self.mu[start..start + block]
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value())
    }

    pub fn mu_k(&self, w: &Word) -> Result<f64> {
        self.mu_f(&w.reversed())
    }

    /// `μ_F([ku])` from `μ_F([u])`, `|u| ≥ m`, via the Gibbs relation
    /// `μ_F([ku]) = μ_F([u]) e^{g(ku)} p(ku) / (λ p(u))`.
    fn extend_left(&self, mass_u: f64, u_state: usize, k: usize) -> f64 {
        let ku = self.op.prepend(k, u_state);
        mass_u * self.op.weight(u_state, k) * self.p.values[ku]
            / (self.lambda * self.p.values[u_state])
    }

    /// `μ_F` of a cylinder of any length, extended past depth `m` by the
    /// Gibbs relation.
    pub fn mu_f_extended(&self, w: &Word) -> Result<f64> {
        let m = self.depth();
        if w.len() <= m {
            return self.mu_f(w);
        }
        let n = self.op.n_symbols;
        w.check(n)?;
        let tail = w.suffix_from(w.len() - m);
        let mut state = tail.index(n);
        let mut mass = self.mu[state];
        for j in (0..w.len() - m).rev() {
            let k = w.get(j);
            let next = self.op.prepend(k, state);
            mass = self.extend_left(mass, state, k);
            state = next;
        }
        Ok(mass)
    }
}

/// `μ_K`: a Bernoulli product for diagonal and triangular systems, otherwise
/// the transfer-operator approximation.
#[derive(Debug, Clone)]
pub enum KaenmakiMeasure {
    Bernoulli(Vec<f64>),
    Transfer(Box<KaenmakiApprox>),
}

impl KaenmakiMeasure {
    /// `cert` is only needed when no closed form exists.
    pub fn build(
        sys: &IfsSystem,
        cert: Option<&DominationCertificate>,
        s0: f64,
        depth: usize,
        tol: f64,
    ) -> Result<Self> {
        if sys.tag() != StructureTag::General {
            if let Ok(w) = closed_form_weights(sys, s0) {
                let total: f64 = w.iter().sum();
                return Ok(KaenmakiMeasure::Bernoulli(
                    w.iter().map(|x| x / total).collect(),
                ));
            }
        }
        let cert = cert.ok_or_else(|| {
            Error::InvalidArgument("a domination certificate is needed for general systems".into())
        })?;
        let op = TransferOperator::new(sys, cert, s0, depth)?;
        Ok(KaenmakiMeasure::Transfer(Box::new(KaenmakiApprox::new(
            op, tol,
        )?)))
    }

    pub fn mu_k(&self, w: &Word) -> Result<f64> {
        match self {
            KaenmakiMeasure::Bernoulli(p) => {
                w.check(p.len())?;
                Ok(w.symbols().map(|s| p[s]).product())
            }
            KaenmakiMeasure::Transfer(k) => k.mu_f_extended(&w.reversed()),
        }
    }

    /// How many trailing symbols of `w` [`Self::child_mass`] depends on.
    pub fn memory(&self) -> usize {
        match self {
            KaenmakiMeasure::Bernoulli(_) => 0,
            KaenmakiMeasure::Transfer(a) => a.depth(),
        }
    }

    /// `μ_K([wk])` given `μ_K([w])`.
    pub fn child_mass(&self, w: &Word, mass_w: f64, k: usize) -> f64 {
        match self {
            KaenmakiMeasure::Bernoulli(p) => mass_w * p[k],
            KaenmakiMeasure::Transfer(a) => {
                let m = a.depth();
                if w.len() < m {
                    return a.mu_k(&w.pushed(k)).unwrap_or(0.0);
                }
                let n = a.op.n_symbols;
                let state = w.symbols().rev().take(m).fold(0usize, |acc, s| acc * n + s);
                a.extend_left(mass_w, state, k)
            }
        }
    }
}

/// `max |Σ_{k<n} g(σ^k ī) − log φ^{s₀}(A_{reversed(ī|n)})|` over `samples`
/// random periodic words, with the witness word.
pub fn birkhoff_deviation(
    sys: &IfsSystem,
    cert: &DominationCertificate,
    s0: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> (f64, Word) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = sys.len();
    let mut worst = (0.0, Word::empty());
    for _ in 0..samples {
        let period: Vec<usize> = (0..n + 3).map(|_| rng.random_range(0..k)).collect();
        let w = InfiniteWord::periodic(&Word::new(&period));
        let mut sum = CompensatedSum::default();
        let mut cur = w.clone();
        for _ in 0..n {
            sum.add(potential_g(sys, cert, s0, &cur, DIRECTION_TOL));
            cur = cur.shift();
        }
        let head = w.truncate(n);
        let m = head
            .symbols()
            .fold(Matrix2::IDENTITY, |acc, s| sys.map(s).a * acc);
        let (a1, a2) = singular_values(&m);
        let dev = (sum.value() - log_phi(a1.ln(), a2.ln(), s0)).abs();
        if dev > worst.0 {
            worst = (dev, head);
        }
    }
    worst
}

/// Range of `μ_K([w]) / φ^{s₀}(A_w)` over all `|w| ≤ depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityBand {
    pub lo: f64,
    pub hi: f64,
    /// `max(hi, 1/lo)`, so every ratio lies in `[1/c, c]`.
    pub c: f64,
    pub lo_word: Word,
    pub hi_word: Word,
}

pub fn comparability_band(
    sys: &IfsSystem,
    mu: &KaenmakiMeasure,
    s0: f64,
    depth: usize,
) -> Result<ComparabilityBand> {
    crate::pressure::word_count(sys.len(), depth)?;
    let mats = sys.matrices();
    let mut band = ComparabilityBand {
        lo: f64::INFINITY,
        hi: 0.0,
        c: 0.0,
        lo_word: Word::empty(),
        hi_word: Word::empty(),
    };
    let mut stack = vec![(Word::empty(), Matrix2::IDENTITY, 1.0)];
    while let Some((w, a, mass)) = stack.pop() {
        if !w.is_empty() {
            let (a1, a2) = singular_values(&a);
            let r = mass / log_phi(a1.ln(), a2.ln(), s0).exp();
            if r < band.lo {
                band.lo = r;
                band.lo_word = w.clone();
            }
            if r > band.hi {
                band.hi = r;
                band.hi_word = w.clone();
            }
        }
        if w.len() < depth {
            for (k, m) in mats.iter().enumerate() {
                stack.push((w.pushed(k), a * *m, mu.child_mass(&w, mass, k)));
            }
        }
    }
    band.c = band.hi.max(1.0 / band.lo);
    Ok(band)
}
