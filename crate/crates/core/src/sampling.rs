//! Random instance generators: valid ground spaces, normalized measures,
//! and the drift families used in convergence experiments.
//!
//! Weights are drawn on a dyadic grid (multiples of 2⁻¹⁰) so that equal
//! weights collide exactly and distinct ones stay far apart relative to
//! the marginal tolerance; that keeps feasibility decisions identical
//! between the closed-form solver and the exhaustive oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::measure::{IdempotentMeasure, Normalization};
use crate::semiring::MaxPlusScalar;
use crate::space::GroundSpace;

/// A random Euclidean cloud in the plane with `n` distinct points.
pub fn random_euclidean_space<R: Rng>(n: usize, rng: &mut R) -> Arc<GroundSpace> {
    assert!(n > 0);
    let points: BTreeMap<String, Vec<f64>> = (0..n)
        .map(|i| {
            // A deterministic offset keeps points distinct even if the
            // random parts collide.
            let x = rng.random_range(0.0..4.0) + 10.0 * i as f64;
            let y = rng.random_range(0.0..4.0);
            (format!("p{i:02}"), vec![x, y])
        })
        .collect();
    Arc::new(GroundSpace::euclidean(2, points, None).expect("euclidean cloud is a metric"))
}

/// A random matrix-backed metric space: random symmetric positive entries
/// tightened into a metric by shortest-path closure.
#[allow(clippy::needless_range_loop)] // symmetric d[i][j]/d[j][i] writes
pub fn random_metric_space<R: Rng>(n: usize, rng: &mut R) -> Arc<GroundSpace> {
    assert!(n > 0);
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(0.5..4.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let points = (0..n).map(|i| format!("p{i:02}")).collect();
    Arc::new(GroundSpace::matrix(points, d, None).expect("closure of positive weights is a metric"))
}

/// A dyadic weight in [−3, 0]: −k/1024 for a random k.
pub fn random_weight<R: Rng>(rng: &mut R) -> f64 {
    -(rng.random_range(0u32..=3072) as f64) / 1024.0
}

/// A normalized measure with a support of `1..=max_support` random points
/// of `space`, dyadic weights in [−3, 0] and one forced zero.
pub fn random_measure<R: Rng>(
    space: &Arc<GroundSpace>,
    max_support: usize,
    rng: &mut R,
) -> IdempotentMeasure {
    let n = space.len();
    let k = rng.random_range(1..=max_support.min(n));
    let mut chosen: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        chosen.swap(i, j);
    }
    let zero_slot = rng.random_range(0..k);
    let atoms: Vec<(String, MaxPlusScalar)> = chosen[..k]
        .iter()
        .enumerate()
        .map(|(slot, &idx)| {
            let w = if slot == zero_slot {
                0.0
            } else {
                random_weight(rng)
            };
            (space.id(idx).to_owned(), MaxPlusScalar::Finite(w))
        })
        .collect();
    IdempotentMeasure::from_atoms(space, atoms, Normalization::Strict)
        .expect("sampled atoms are valid")
}

/// A generated sequence together with its intended limit.
pub struct ConvergenceFamily {
    pub space: Arc<GroundSpace>,
    pub sequence: Vec<IdempotentMeasure>,
    pub limit: IdempotentMeasure,
}

/// Atoms drift toward their limit positions at ground distance `rate/t`;
/// weights stay fixed.
pub fn atom_drift_family<R: Rng>(
    n_atoms: usize,
    len: usize,
    rate: f64,
    rng: &mut R,
) -> ConvergenceFamily {
    assert!(n_atoms > 0 && len > 0);
    let mut points: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let anchors: Vec<(String, f64, f64)> = (0..n_atoms)
        .map(|i| {
            let x = 10.0 * i as f64 + rng.random_range(0.0..1.0);
            let y = rng.random_range(0.0..1.0);
            (format!("a{i:02}"), x, y)
        })
        .collect();
    for (id, x, y) in &anchors {
        points.insert(id.clone(), vec![*x, *y]);
        for t in 1..=len {
            points.insert(format!("{id}t{t:03}"), vec![x + rate / t as f64, *y]);
        }
    }
    let space = Arc::new(GroundSpace::euclidean(2, points, None).unwrap());

    let weights: Vec<f64> = (0..n_atoms)
        .map(|i| if i == 0 { 0.0 } else { random_weight(rng) })
        .collect();
    let limit = IdempotentMeasure::from_atoms(
        &space,
        anchors
            .iter()
            .zip(&weights)
            .map(|((id, _, _), &w)| (id.clone(), MaxPlusScalar::Finite(w))),
        Normalization::Strict,
    )
    .unwrap();
    let sequence = (1..=len)
        .map(|t| {
            IdempotentMeasure::from_atoms(
                &space,
                anchors
                    .iter()
                    .zip(&weights)
                    .map(|((id, _, _), &w)| (format!("{id}t{t:03}"), MaxPlusScalar::Finite(w))),
                Normalization::Strict,
            )
            .unwrap()
        })
        .collect();
    ConvergenceFamily {
        space,
        sequence,
        limit,
    }
}

/// Non-top weights drift toward their limits from below at rate `rate/t`;
/// the support stays fixed and the top atom keeps weight 0.
///
/// Note that under the bottleneck marginals a weight gap on a separated
/// atom can only be covered through a different support point at full
/// ground-distance cost, so this family does not converge metrically; it
/// exercises the rejecting side of the diagnostics.
pub fn weight_drift_family<R: Rng>(
    n_atoms: usize,
    len: usize,
    rate: f64,
    rng: &mut R,
) -> ConvergenceFamily {
    assert!(n_atoms > 1 && len > 0);
    let space = random_euclidean_space(n_atoms, rng);
    let weights: Vec<f64> = (0..n_atoms)
        .map(|i| if i == 0 { 0.0 } else { random_weight(rng) })
        .collect();
    let limit = IdempotentMeasure::from_atoms(
        &space,
        space
            .ids()
            .iter()
            .zip(&weights)
            .map(|(id, &w)| (id.clone(), MaxPlusScalar::Finite(w))),
        Normalization::Strict,
    )
    .unwrap();
    let sequence = (1..=len)
        .map(|t| {
            IdempotentMeasure::from_atoms(
                &space,
                space.ids().iter().enumerate().map(|(i, id)| {
                    let w = if i == 0 {
                        0.0
                    } else {
                        weights[i] - rate / t as f64
                    };
                    (id.clone(), MaxPlusScalar::Finite(w))
                }),
                Normalization::Strict,
            )
            .unwrap()
        })
        .collect();
    ConvergenceFamily {
        space,
        sequence,
        limit,
    }
}

/// One atom of the limit splits into itself plus a nearby twin whose
/// weight sits 1/t below; both the twin's offset and the weight gap close
/// at rate `rate/t`.
pub fn splitting_family<R: Rng>(
    n_atoms: usize,
    len: usize,
    rate: f64,
    rng: &mut R,
) -> ConvergenceFamily {
    let base = atom_drift_family(n_atoms, len, rate, rng);
    let split_id = base.limit.support()[0].to_owned();
    let sequence = base
        .sequence
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let t = (i + 1) as f64;
            let mut atoms: Vec<(String, MaxPlusScalar)> = m
                .support()
                .iter()
                .zip(m.weights())
                .map(|(p, w)| (p.to_string(), MaxPlusScalar::Finite(w)))
                .collect();
            // The twin sits at the limit anchor itself, a rate/t offset
            // from the drifted copy, with a -1/t weight deficit.
            atoms.push((split_id.clone(), MaxPlusScalar::Finite(-1.0 / t)));
            IdempotentMeasure::from_atoms(&base.space, atoms, Normalization::Strict).unwrap()
        })
        .collect();
    ConvergenceFamily {
        space: base.space,
        sequence,
        limit: base.limit,
    }
}

/// A family that does not converge: the sequence keeps its whole weight on
/// a point `separation` away from the limit atom.
pub fn escaping_family<R: Rng>(len: usize, separation: f64, rng: &mut R) -> ConvergenceFamily {
    assert!(len > 0 && separation > 0.0);
    let mut points = BTreeMap::new();
    let y = rng.random_range(0.0..1.0);
    points.insert("home".to_owned(), vec![0.0, y]);
    points.insert("far".to_owned(), vec![separation, y]);
    let space = Arc::new(GroundSpace::euclidean(2, points, None).unwrap());
    let limit = IdempotentMeasure::dirac(&space, "home").unwrap();
    let runaway = IdempotentMeasure::dirac(&space, "far").unwrap();
    ConvergenceFamily {
        space,
        sequence: vec![runaway; len],
        limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_spaces_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            assert!(random_euclidean_space(n, &mut rng)
                .validate_metric()
                .is_clean());
            assert!(random_metric_space(n, &mut rng)
                .validate_metric()
                .is_clean());
        }
    }

    #[test]
    fn generated_measures_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let space = random_metric_space(5, &mut rng);
        for _ in 0..50 {
            let mu = random_measure(&space, 4, &mut rng);
            assert!(mu.support_size() >= 1 && mu.support_size() <= 4);
            let top = mu.weights().into_iter().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(top, 0.0);
        }
    }

    #[test]
    fn families_share_a_space_and_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for family in [
            atom_drift_family(3, 12, 1.0, &mut rng),
            weight_drift_family(3, 12, 1.0, &mut rng),
            splitting_family(3, 12, 1.0, &mut rng),
            escaping_family(12, 0.5, &mut rng),
        ] {
            assert_eq!(family.sequence.len(), 12);
            for m in &family.sequence {
                assert_eq!(m.space(), &family.space);
            }
            assert_eq!(family.limit.space(), &family.space);
        }
    }
}
