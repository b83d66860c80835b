//! Convergence diagnostics for sequences of finitely supported measures:
//! the atom-tracking condition behind both convergence notions, membership
//! in weak neighborhoods, and the metric / pointwise verdicts themselves.
//!
//! True limit statements are not checkable on finite data, so every check
//! runs over an explicit tail with explicit tolerances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{IdempotentMeasure, TestFunction};
use crate::metric::rho_omega;
use crate::par;

/// Default tail fraction: the last quarter of the sequence, at least one.
pub fn default_tail(len: usize) -> usize {
    (len / 4).max(1)
}

/// Residuals of tracking one limit atom inside one tail measure: the
/// ground distance and weight gap to the best-matching atom.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StarSample {
    /// Index of the tail measure within the full sequence.
    pub index: usize,
    pub distance: f64,
    pub weight_gap: f64,
}

/// Tracking record for one atom of the limit measure.
#[derive(Clone, Debug, Serialize)]
pub struct AtomTrack {
    pub point: String,
    pub weight: f64,
    /// Whether every tail measure holds an atom within both tolerances.
    pub satisfied: bool,
    pub worst_distance: f64,
    pub worst_weight_gap: f64,
    pub trajectory: Vec<StarSample>,
}

/// Result of the atom-tracking check over a tail.
#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    pub satisfied: bool,
    pub atoms: Vec<AtomTrack>,
}

/// Checks, for each atom (xᵢ, λᵢ) of `mu`, that every measure in the tail
/// of `seq` holds an atom within `eps_x` of xᵢ in ground distance and
/// `eps_w` of λᵢ in weight. Per-atom residual trajectories are reported;
/// the best-matching atom is the one with the smallest worst excess over
/// the two tolerances.
pub fn star_condition(
    seq: &[IdempotentMeasure],
    mu: &IdempotentMeasure,
    eps_x: f64,
    eps_w: f64,
    tail: usize,
) -> Result<StarReport> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if tail == 0 || tail > seq.len() {
        return Err(Error::TailTooLong {
            tail,
            len: seq.len(),
        });
    }
    for m in seq {
        if m.space() != mu.space() {
            return Err(Error::SpaceMismatch);
        }
    }
    let space = mu.space();
    let start = seq.len() - tail;
    let mut atoms = Vec::with_capacity(mu.support_size());
    for atom in mu.atoms() {
        let mut trajectory = Vec::with_capacity(tail);
        let mut satisfied = true;
        let mut worst_distance = 0.0f64;
        let mut worst_weight_gap = 0.0f64;
        for (offset, m) in seq[start..].iter().enumerate() {
            let mut best_excess = f64::INFINITY;
            let mut best = (f64::INFINITY, f64::INFINITY);
            for candidate in m.atoms() {
                let d = space.dist_idx(atom.point, candidate.point);
                let g = (atom.weight - candidate.weight).abs();
                let excess = (d - eps_x).max(g - eps_w);
                if excess < best_excess {
                    best_excess = excess;
                    best = (d, g);
                }
            }
            let (d, g) = best;
            trajectory.push(StarSample {
                index: start + offset,
                distance: d,
                weight_gap: g,
            });
            if best_excess > 0.0 {
                satisfied = false;
            }
            worst_distance = worst_distance.max(d);
            worst_weight_gap = worst_weight_gap.max(g);
        }
        atoms.push(AtomTrack {
            point: space.id(atom.point).to_owned(),
            weight: atom.weight,
            satisfied,
            worst_distance,
            worst_weight_gap,
            trajectory,
        });
    }
    Ok(StarReport {
        satisfied: atoms.iter().all(|a| a.satisfied),
        atoms,
    })
}

/// Membership of ν in the weak neighborhood of μ cut out by `panel`:
/// |μ(φ) − ν(φ)| < eps for every panel function.
pub fn in_neighborhood(
    nu: &IdempotentMeasure,
    mu: &IdempotentMeasure,
    panel: &[TestFunction],
    eps: f64,
) -> Result<bool> {
    for f in panel {
        if (mu.integrate(f)? - nu.integrate(f)?).abs() >= eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Metric convergence over the tail: ρ_ω(μ_t, μ) ≤ eps for every tail t.
pub fn converges_metric(
    seq: &[IdempotentMeasure],
    mu: &IdempotentMeasure,
    eps: f64,
    tail: usize,
) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if tail == 0 || tail > seq.len() {
        return Err(Error::TailTooLong {
            tail,
            len: seq.len(),
        });
    }
    let start = seq.len() - tail;
    let values = par::map_indices(tail, |i| rho_omega(&seq[start + i], mu));
    for v in values {
        if v?.rho_omega > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pointwise convergence over the tail: every tail measure lies in the
/// `panel`-neighborhood of μ of radius eps.
pub fn converges_pointwise(
    seq: &[IdempotentMeasure],
    mu: &IdempotentMeasure,
    panel: &[TestFunction],
    eps: f64,
    tail: usize,
) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if tail == 0 || tail > seq.len() {
        return Err(Error::TailTooLong {
            tail,
            len: seq.len(),
        });
    }
    let start = seq.len() - tail;
    let values = par::map_indices(tail, |i| in_neighborhood(&seq[start + i], mu, panel, eps));
    for v in values {
        if !v? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One tent function per atom of μ: height max|λ| + `margin` at the atom,
/// decaying linearly to 0 at ground distance `width`, evaluated on every
/// registered point.
///
/// This is the failure-certificate shape: large at an atom of the limit,
/// zero on any support that stays `width` away from it, and Lipschitz with
/// constant height/width, so drift by δ moves integrals by at most
/// height/width · δ.
pub fn separating_panel(mu: &IdempotentMeasure, margin: f64, width: f64) -> Vec<TestFunction> {
    let space = mu.space();
    let height = mu
        .atoms()
        .iter()
        .map(|a| a.weight.abs())
        .fold(0.0f64, f64::max)
        + margin;
    mu.atoms()
        .iter()
        .map(|atom| {
            TestFunction::from_pairs(space.ids().iter().enumerate().map(|(i, id)| {
                let d = space.dist_idx(atom.point, i);
                (id.clone(), (height * (1.0 - d / width)).max(0.0))
            }))
        })
        .collect()
}
