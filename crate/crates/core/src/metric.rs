//! The transport distance between finitely supported idempotent measures:
//! pair costs |λ₂ₖ − λ₁ⱼ| + ρ(x₁ⱼ, x₂ₖ), the bottleneck value H over
//! feasible coupling supports, its diameter-truncated version ρ_ω, a tail
//! estimator for the completion metric, and Gram matrices.
//!
//! Two solvers compute H. The closed form picks each row's and column's
//! cheapest feasible partner; the exhaustive one scans every feasible
//! support. They must agree bitwise on guard-sized inputs — the test suite
//! keeps both paths wired together permanently.

use serde::Serialize;

use crate::coupling::{self, MARGINAL_TOL, SUPPORT_ENUM_GUARD};
use crate::error::{Error, Result};
use crate::measure::IdempotentMeasure;
use crate::par;

/// The n₁×n₂ table of pair costs c_{jk} = |λ₂ₖ − λ₁ⱼ| + ρ(x₁ⱼ, x₂ₖ).
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n1: usize,
    n2: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.costs[j * self.n2 + k]
    }

    /// Closed-form bottleneck solve.
    ///
    /// A support is feasible exactly when every row j holds a pair with
    /// λ₂ₖ ≥ λ₁ⱼ and every column k a pair with λ₁ⱼ ≥ λ₂ₖ (those pairs are
    /// the max-marginal witnesses), so the optimum takes each row's and
    /// column's cheapest witness; anything more only raises the max. Ties
    /// break toward the smallest index, making the support deterministic.
    pub fn solve_closed_form(&self, w1: &[f64], w2: &[f64]) -> Solution {
        debug_assert_eq!(w1.len(), self.n1);
        debug_assert_eq!(w2.len(), self.n2);
        let mut support = Vec::with_capacity(self.n1 + self.n2);
        let mut value = f64::NEG_INFINITY;
        for (j, &wj) in w1.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (k, &wk) in w2.iter().enumerate() {
                if wk >= wj {
                    let c = self.get(j, k);
                    if c < best {
                        best = c;
                        arg = k;
                    }
                }
            }
            debug_assert!(arg != usize::MAX, "row witness always exists");
            support.push((j, arg));
            value = value.max(best);
        }
        for (k, &wk) in w2.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (j, &wj) in w1.iter().enumerate() {
                if wj >= wk {
                    let c = self.get(j, k);
                    if c < best {
                        best = c;
                        arg = j;
                    }
                }
            }
            debug_assert!(arg != usize::MAX, "column witness always exists");
            support.push((arg, k));
            value = value.max(best);
        }
        support.sort_unstable();
        support.dedup();
        Solution { value, support }
    }

    /// Oracle solve: scans every support mask, keeps those whose
    /// min-bound weights satisfy the max-marginals, and minimizes the
    /// support's worst pair cost. Ties break toward the smallest mask.
    pub fn solve_exhaustive(&self, w1: &[f64], w2: &[f64], max_pairs: usize) -> Result<Solution> {
        let pairs = self.n1 * self.n2;
        let guard = max_pairs.min(30);
        if pairs > guard {
            return Err(Error::SizeGuard { pairs, guard });
        }
        let mut best_value = f64::INFINITY;
        let mut best_mask = 0u32;
        for raw in 1..(1u64 << pairs) {
            let mask = raw as u32;
            if !coupling::mask_is_feasible(w1, w2, mask, MARGINAL_TOL) {
                continue;
            }
            let mut cost = f64::NEG_INFINITY;
            let mut m = mask;
            while m != 0 {
                let bit = m.trailing_zeros() as usize;
                m &= m - 1;
                cost = cost.max(self.costs[bit]);
            }
            if cost < best_value {
                best_value = cost;
                best_mask = mask;
            }
        }
        debug_assert!(best_mask != 0, "the coupling set is never empty");
        Ok(Solution {
            value: best_value,
            support: coupling::pairs_of_mask(best_mask, self.n2),
        })
    }
}

/// A bottleneck value together with a support that attains it.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub support: Vec<(usize, usize)>,
}

/// Builds the pair-cost table for two measures on a shared space.
pub fn cost_matrix(mu1: &IdempotentMeasure, mu2: &IdempotentMeasure) -> Result<CostMatrix> {
    if mu1.space() != mu2.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = mu1.space();
    let (n1, n2) = (mu1.support_size(), mu2.support_size());
    let mut costs = Vec::with_capacity(n1 * n2);
    for a in mu1.atoms() {
        for b in mu2.atoms() {
            costs.push((b.weight - a.weight).abs() + space.dist_idx(a.point, b.point));
        }
    }
    Ok(CostMatrix { n1, n2, costs })
}

/// The distance between two measures, with the witnessing support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    /// The bottleneck transport value.
    #[serde(rename = "H")]
    pub h: f64,
    /// min(diam X, H).
    pub rho_omega: f64,
    /// Whether the ambient diameter truncated H.
    pub truncated: bool,
    /// Pairs of atom indices attaining H, lexicographically sorted.
    pub support: Vec<(usize, usize)>,
}

fn build_report(solution: Solution, diam: f64) -> DistanceReport {
    let truncated = diam < solution.value;
    DistanceReport {
        h: solution.value,
        rho_omega: diam.min(solution.value),
        truncated,
        support: solution.support,
    }
}

/// H via the closed-form solver.
pub fn h(mu1: &IdempotentMeasure, mu2: &IdempotentMeasure) -> Result<DistanceReport> {
    let costs = cost_matrix(mu1, mu2)?;
    let solution = costs.solve_closed_form(&mu1.weights(), &mu2.weights());
    Ok(build_report(solution, mu1.space().diam()))
}

/// H via the exhaustive oracle; guarded to n₁·n₂ ≤ 20.
pub fn h_bruteforce(mu1: &IdempotentMeasure, mu2: &IdempotentMeasure) -> Result<DistanceReport> {
    let costs = cost_matrix(mu1, mu2)?;
    let solution = costs.solve_exhaustive(&mu1.weights(), &mu2.weights(), SUPPORT_ENUM_GUARD)?;
    Ok(build_report(solution, mu1.space().diam()))
}

/// The truncated distance ρ_ω = min(diam X, H); the report is the same as
/// [`h`] produces, the emphasis is just on the truncated value.
pub fn rho_omega(mu1: &IdempotentMeasure, mu2: &IdempotentMeasure) -> Result<DistanceReport> {
    h(mu1, mu2)
}

/// Tail estimate of the completion distance along two approximating
/// sequences.
#[derive(Clone, Debug, Serialize)]
pub struct RhoIEstimate {
    /// ρ_ω of the final pair.
    pub value: f64,
    /// Whether the trailing values stabilized within the tolerance.
    pub converged: bool,
    /// ρ_ω along the paired tail, oldest first.
    pub trace: Vec<f64>,
}

/// Pairs the two sequences from their ends, computes ρ_ω along the paired
/// tail and checks that the last few values stabilized within `tol`
/// (successive gaps over the final three steps).
pub fn rho_i_estimate(
    seq1: &[IdempotentMeasure],
    seq2: &[IdempotentMeasure],
    tol: f64,
) -> Result<RhoIEstimate> {
    if seq1.is_empty() || seq2.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = seq1.len().min(seq2.len());
    let (off1, off2) = (seq1.len() - n, seq2.len() - n);
    let values = par::map_indices(n, |i| rho_omega(&seq1[off1 + i], &seq2[off2 + i]));
    let mut trace = Vec::with_capacity(n);
    for v in values {
        trace.push(v?.rho_omega);
    }
    let window = trace.len().min(4);
    let converged = trace[trace.len() - window..]
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= tol);
    Ok(RhoIEstimate {
        value: *trace.last().expect("nonempty trace"),
        converged,
        trace,
    })
}

/// Pairwise ρ_ω matrix; symmetric with a zero diagonal. Pairs are
/// evaluated on the rayon pool when the `parallel` feature is on.
pub fn gram(measures: &[IdempotentMeasure]) -> Result<Vec<Vec<f64>>> {
    gram_impl(measures, false)
}

/// Sequential twin of [`gram`], kept callable regardless of features so
/// the two paths can be compared directly.
pub fn gram_serial(measures: &[IdempotentMeasure]) -> Result<Vec<Vec<f64>>> {
    gram_impl(measures, true)
}

fn gram_impl(measures: &[IdempotentMeasure], force_serial: bool) -> Result<Vec<Vec<f64>>> {
    let n = measures.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    let eval = |t: usize| -> Result<f64> {
        let (i, j) = pairs[t];
        Ok(rho_omega(&measures[i], &measures[j])?.rho_omega)
    };
    let values = if force_serial {
        par::map_indices_serial(pairs.len(), eval)
    } else {
        par::map_indices(pairs.len(), eval)
    };
    let mut matrix = vec![vec![0.0; n]; n];
    for (t, value) in values.into_iter().enumerate() {
        let (i, j) = pairs[t];
        let v = value?;
        matrix[i][j] = v;
        matrix[j][i] = v;
    }
    Ok(matrix)
}
