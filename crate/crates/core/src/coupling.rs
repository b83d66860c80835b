//! Couplings of two finitely supported idempotent measures: sparse weight
//! tables on the product of their supports whose max-marginals reproduce
//! the factors.
//!
//! Entry indices (j, k) address atoms of the two measures in canonical
//! order; an absent pair carries weight −∞ and is not part of the support.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{IdempotentMeasure, MeasureSpec, Normalization};
use crate::space::GroundSpace;
use std::sync::Arc;

/// Tolerance for max-marginal equality.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Default cap on n₁·n₂ for exhaustive support enumeration.
pub const SUPPORT_ENUM_GUARD: usize = 20;

/// Hard cap; beyond this the bitmask scan is unreasonable regardless of
/// what the caller asks for.
const SUPPORT_ENUM_HARD_CAP: usize = 30;

/// A coupling candidate: μ₁, μ₂ and a sparse γ table over atom-index pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    mu1: IdempotentMeasure,
    mu2: IdempotentMeasure,
    entries: BTreeMap<(usize, usize), f64>,
}

impl Coupling {
    /// Assembles a coupling, enforcing the structural invariants: indices
    /// in range, finite weights, and γ ≤ min(λ₁ⱼ, λ₂ₖ) on every pair.
    /// Marginal equality is a separate check ([`Coupling::check_marginals`]).
    pub fn new(
        mu1: IdempotentMeasure,
        mu2: IdempotentMeasure,
        entries: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        if mu1.space() != mu2.space() {
            return Err(Error::SpaceMismatch);
        }
        let (n1, n2) = (mu1.support_size(), mu2.support_size());
        for (&(j, k), &gamma) in &entries {
            if j >= n1 || k >= n2 {
                return Err(Error::EntryOutOfRange { j, k, n1, n2 });
            }
            let bound = mu1.atoms()[j].weight.min(mu2.atoms()[k].weight);
            if !gamma.is_finite() || gamma > bound + MARGINAL_TOL {
                return Err(Error::GammaBound { j, k, gamma, bound });
            }
        }
        Ok(Coupling { mu1, mu2, entries })
    }

    pub fn mu1(&self) -> &IdempotentMeasure {
        &self.mu1
    }

    pub fn mu2(&self) -> &IdempotentMeasure {
        &self.mu2
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&jk, &g)| (jk, g))
    }

    pub fn gamma(&self, j: usize, k: usize) -> Option<f64> {
        self.entries.get(&(j, k)).copied()
    }

    /// Support pairs in lexicographic order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries.keys().copied().collect()
    }

    /// Verifies both max-marginal families within [`MARGINAL_TOL`] and
    /// reports the residuals, the worst γ-bound excess and the gap of the
    /// top weight from 0.
    pub fn check_marginals(&self) -> (bool, MarginalReport) {
        let w1 = self.mu1.weights();
        let w2 = self.mu2.weights();
        let mut row_max = vec![f64::NEG_INFINITY; w1.len()];
        let mut col_max = vec![f64::NEG_INFINITY; w2.len()];
        let mut bound_excess = f64::NEG_INFINITY;
        let mut top = f64::NEG_INFINITY;
        for (&(j, k), &g) in &self.entries {
            row_max[j] = row_max[j].max(g);
            col_max[k] = col_max[k].max(g);
            bound_excess = bound_excess.max(g - w1[j].min(w2[k]));
            top = top.max(g);
        }
        let report = MarginalReport {
            row_residuals: row_max
                .iter()
                .zip(&w1)
                .map(|(m, w)| (m - w).abs())
                .collect(),
            col_residuals: col_max
                .iter()
                .zip(&w2)
                .map(|(m, w)| (m - w).abs())
                .collect(),
            bound_excess,
            top_weight_gap: top.abs(),
        };
        (report.marginals_ok(MARGINAL_TOL), report)
    }

    /// Portable form for serialization.
    pub fn to_spec(&self, inline_space: bool) -> CouplingSpec {
        CouplingSpec {
            mu1: self.mu1.to_spec(inline_space),
            mu2: self.mu2.to_spec(false),
            entries: self
                .entries
                .iter()
                .map(|(&(j, k), &gamma)| EntrySpec { j, k, gamma })
                .collect(),
        }
    }

    pub fn from_spec(
        spec: &CouplingSpec,
        space: &Arc<GroundSpace>,
        mode: Normalization,
    ) -> Result<Self> {
        let mu1 = IdempotentMeasure::from_spec(&spec.mu1, space, mode)?;
        let mu2 = IdempotentMeasure::from_spec(&spec.mu2, space, mode)?;
        let entries = spec.entries.iter().map(|e| ((e.j, e.k), e.gamma)).collect();
        Coupling::new(mu1, mu2, entries)
    }
}

/// Residuals of a marginal check.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalReport {
    /// |maxₖ γⱼₖ − λ₁ⱼ| per row j.
    pub row_residuals: Vec<f64>,
    /// |maxⱼ γⱼₖ − λ₂ₖ| per column k.
    pub col_residuals: Vec<f64>,
    /// max over present pairs of γ − min(λ₁ⱼ, λ₂ₖ); ≤ 0 when the γ-bound
    /// holds.
    pub bound_excess: f64,
    /// |max γ|; 0 when the coupling is itself normalized.
    pub top_weight_gap: f64,
}

impl MarginalReport {
    pub fn marginals_ok(&self, tol: f64) -> bool {
        self.row_residuals.iter().all(|r| *r <= tol) && self.col_residuals.iter().all(|r| *r <= tol)
    }

    pub fn max_residual(&self) -> f64 {
        self.row_residuals
            .iter()
            .chain(&self.col_residuals)
            .fold(0.0f64, |m, &r| m.max(r))
    }
}

/// Index of the zero-weight atom with the smallest canonical point id.
/// Exists for every normalized measure.
fn zero_atom(mu: &IdempotentMeasure) -> usize {
    mu.atoms()
        .iter()
        .position(|a| a.weight == 0.0)
        .expect("normalized measure has a zero-weight atom")
}

/// The canonical coupling ξ⁰: the two distinguished zero atoms are paired,
/// every other atom of each measure is paired with the opposite
/// distinguished atom at its own weight.
pub fn xi0(mu1: &IdempotentMeasure, mu2: &IdempotentMeasure) -> Result<Coupling> {
    if mu1.space() != mu2.space() {
        return Err(Error::SpaceMismatch);
    }
    let j0 = zero_atom(mu1);
    let k0 = zero_atom(mu2);
    let mut entries = BTreeMap::new();
    entries.insert((j0, k0), 0.0);
    for (k, atom) in mu2.atoms().iter().enumerate() {
        if k != k0 {
            entries.insert((j0, k), atom.weight);
        }
    }
    for (j, atom) in mu1.atoms().iter().enumerate() {
        if j != j0 {
            entries.insert((j, k0), atom.weight);
        }
    }
    Coupling::new(mu1.clone(), mu2.clone(), entries)
}

/// A random member ξ⁰ ⊕ R of the coupling set: random index sets K, M
/// avoiding the distinguished atoms, with random weights below the
/// min-bound on K×M. Deterministic in `seed`.
pub fn random_member(
    mu1: &IdempotentMeasure,
    mu2: &IdempotentMeasure,
    seed: u64,
) -> Result<Coupling> {
    let base = xi0(mu1, mu2)?;
    let j0 = zero_atom(mu1);
    let k0 = zero_atom(mu2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = (0..mu1.support_size())
        .filter(|&j| j != j0 && rng.random_bool(0.5))
        .collect();
    let cols: Vec<usize> = (0..mu2.support_size())
        .filter(|&k| k != k0 && rng.random_bool(0.5))
        .collect();
    let mut entries: BTreeMap<(usize, usize), f64> = base.entries().collect();
    for &j in &rows {
        for &k in &cols {
            let bound = mu1.atoms()[j].weight.min(mu2.atoms()[k].weight);
            let gamma = bound - rng.random_range(0.0..1.0);
            entries
                .entry((j, k))
                .and_modify(|g| *g = g.max(gamma))
                .or_insert(gamma);
        }
    }
    Coupling::new(mu1.clone(), mu2.clone(), entries)
}

/// Chains two couplings through their shared middle measure: the support
/// is every (k, l) linked by some middle atom, and each entry carries the
/// largest weight the γ-bound permits, which is what the max-marginals
/// against (μ₁, μ₃) require.
pub fn compose(xi12: &Coupling, xi23: &Coupling) -> Result<Coupling> {
    if xi12.mu2 != xi23.mu1 {
        return Err(Error::MiddleMeasureMismatch);
    }
    let n2 = xi12.mu2.support_size();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n2];
    for ((m, l), _) in xi23.entries() {
        successors[m].push(l);
    }
    let w1 = xi12.mu1.weights();
    let w3 = xi23.mu2.weights();
    let mut entries = BTreeMap::new();
    for ((k, m), _) in xi12.entries() {
        for &l in &successors[m] {
            entries.insert((k, l), w1[k].min(w3[l]));
        }
    }
    Coupling::new(xi12.mu1.clone(), xi23.mu2.clone(), entries)
}

/// True when the support encoded by `mask` satisfies both max-marginal
/// families after every pair is given the most permissive weight
/// min(λ₁ⱼ, λ₂ₖ). Bit j·n₂+k of `mask` selects pair (j, k).
pub(crate) fn mask_is_feasible(w1: &[f64], w2: &[f64], mask: u32, tol: f64) -> bool {
    let n2 = w2.len();
    let mut row_max = [f64::NEG_INFINITY; 32];
    let mut col_max = [f64::NEG_INFINITY; 32];
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros() as usize;
        m &= m - 1;
        let (j, k) = (bit / n2, bit % n2);
        let g = w1[j].min(w2[k]);
        if g > row_max[j] {
            row_max[j] = g;
        }
        if g > col_max[k] {
            col_max[k] = g;
        }
    }
    w1.iter()
        .enumerate()
        .all(|(j, w)| (row_max[j] - w).abs() <= tol)
        && w2
            .iter()
            .enumerate()
            .all(|(k, w)| (col_max[k] - w).abs() <= tol)
}

pub(crate) fn pairs_of_mask(mask: u32, n2: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros() as usize;
        m &= m - 1;
        pairs.push((bit / n2, bit % n2));
    }
    pairs
}

/// Iterator over every support set S ⊆ [n₁]×[n₂] that is feasible at the
/// min-bound weights. These supports realize every achievable transport
/// cost, since the cost depends only on the support and raising weights
/// toward the bound never breaks feasibility.
pub struct FeasibleSupports {
    w1: Vec<f64>,
    w2: Vec<f64>,
    next: u64,
    end: u64,
}

impl Iterator for FeasibleSupports {
    type Item = Vec<(usize, usize)>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.next < self.end {
            let mask = self.next as u32;
            self.next += 1;
            if mask_is_feasible(&self.w1, &self.w2, mask, MARGINAL_TOL) {
                return Some(pairs_of_mask(mask, self.w2.len()));
            }
        }
        None
    }
}

/// Exhaustively enumerates feasible supports for the coupling set of
/// (μ₁, μ₂). Guarded: fails unless n₁·n₂ ≤ min(`max_pairs`, 30).
pub fn enumerate_feasible_supports(
    mu1: &IdempotentMeasure,
    mu2: &IdempotentMeasure,
    max_pairs: usize,
) -> Result<FeasibleSupports> {
    if mu1.space() != mu2.space() {
        return Err(Error::SpaceMismatch);
    }
    let pairs = mu1.support_size() * mu2.support_size();
    let guard = max_pairs.min(SUPPORT_ENUM_HARD_CAP);
    if pairs > guard {
        return Err(Error::SizeGuard { pairs, guard });
    }
    Ok(FeasibleSupports {
        w1: mu1.weights(),
        w2: mu2.weights(),
        next: 1,
        end: 1u64 << pairs,
    })
}

/// Portable coupling representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub mu1: MeasureSpec,
    pub mu2: MeasureSpec,
    pub entries: Vec<EntrySpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntrySpec {
    pub j: usize,
    pub k: usize,
    pub gamma: f64,
}
