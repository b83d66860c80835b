//! Idempotent probability measures with finite support.
//!
//! A measure is a finite set of weighted atoms λᵢ ⊙ δ_{xᵢ} with every λᵢ
//! finite, ≤ 0, and the top weight exactly 0. Atoms are kept in canonical
//! order (sorted by point id), which makes the decomposition unique and
//! equality, serialization and coupling indices deterministic.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiring::MaxPlusScalar;
use crate::space::GroundSpace;

/// Tolerance for accepting a strict-mode top weight as zero.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// How [`IdempotentMeasure::from_atoms`] treats a nonzero top weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    /// Reject atom lists whose top weight is more than
    /// [`NORMALIZATION_TOL`] away from 0.
    #[default]
    Strict,
    /// Shift all weights so the top weight becomes exactly 0.
    Autonormalize,
}

/// One weighted atom; `point` is a canonical index into the ground space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub point: usize,
    pub weight: f64,
}

/// A finitely supported idempotent probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct IdempotentMeasure {
    space: Arc<GroundSpace>,
    atoms: Vec<Atom>,
}

impl IdempotentMeasure {
    /// The Dirac measure 0 ⊙ δ_x.
    pub fn dirac(space: &Arc<GroundSpace>, point: &str) -> Result<Self> {
        let idx = space.index_of(point)?;
        Ok(IdempotentMeasure {
            space: Arc::clone(space),
            atoms: vec![Atom {
                point: idx,
                weight: 0.0,
            }],
        })
    }

    /// Builds a measure from `(point id, weight)` pairs.
    ///
    /// Duplicate points are merged by ⊕ (max of weights), bottom weights
    /// are dropped (they contribute nothing to any integral), and the
    /// result is normalized according to `mode`.
    pub fn from_atoms<I, S>(space: &Arc<GroundSpace>, atoms: I, mode: Normalization) -> Result<Self>
    where
        I: IntoIterator<Item = (S, MaxPlusScalar)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        let mut saw_any = false;
        for (id, weight) in atoms {
            saw_any = true;
            let idx = space.index_of(id.as_ref())?;
            match weight {
                MaxPlusScalar::Bottom => {
                    log::warn!(
                        "dropping bottom-weight atom at `{}`: it is the identity for \u{2295}",
                        id.as_ref()
                    );
                }
                MaxPlusScalar::Finite(w) => {
                    if !w.is_finite() {
                        return Err(Error::InvalidWeight {
                            point: id.as_ref().to_owned(),
                            weight: w,
                        });
                    }
                    merged
                        .entry(idx)
                        .and_modify(|cur| *cur = cur.max(w))
                        .or_insert(w);
                }
            }
        }
        if !saw_any {
            return Err(Error::EmptyMeasure);
        }
        if merged.is_empty() {
            return Err(Error::AllBottom);
        }
        let max_weight = merged.values().fold(f64::NEG_INFINITY, |m, &w| m.max(w));
        if mode == Normalization::Strict && max_weight.abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                max_weight,
                tol: NORMALIZATION_TOL,
            });
        }
        let atoms = merged
            .into_iter()
            .map(|(point, w)| Atom {
                point,
                weight: w - max_weight,
            })
            .collect();
        Ok(IdempotentMeasure {
            space: Arc::clone(space),
            atoms,
        })
    }

    /// Builds a measure without merging or normalizing, for diagnostics
    /// such as demonstrating axiom residuals on malformed data. Atoms are
    /// still resolved against the space and sorted canonically.
    pub fn from_atoms_unchecked<I, S>(space: &Arc<GroundSpace>, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut resolved = Vec::new();
        for (id, weight) in atoms {
            resolved.push(Atom {
                point: space.index_of(id.as_ref())?,
                weight,
            });
        }
        if resolved.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        resolved.sort_by_key(|a| a.point);
        Ok(IdempotentMeasure {
            space: Arc::clone(space),
            atoms: resolved,
        })
    }

    pub fn space(&self) -> &Arc<GroundSpace> {
        &self.space
    }

    /// Atoms in canonical order.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atom weights in canonical order.
    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Support point ids in canonical order.
    pub fn support(&self) -> Vec<&str> {
        self.atoms.iter().map(|a| self.space.id(a.point)).collect()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    /// The Maslov integral μ(φ) = maxᵢ (λᵢ + φ(xᵢ)).
    pub fn integrate(&self, f: &TestFunction) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for atom in &self.atoms {
            let id = self.space.id(atom.point);
            let value = f
                .value_at(id)
                .ok_or_else(|| Error::UndefinedAt(id.to_owned()))?;
            best = best.max(atom.weight + value);
        }
        Ok(best)
    }

    /// The pushforward I(f)(μ): relabels atoms along `map` and merges
    /// weights of coinciding images by ⊕.
    pub fn pushforward(
        &self,
        map: &BTreeMap<String, String>,
        target: &Arc<GroundSpace>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for atom in &self.atoms {
            let id = self.space.id(atom.point);
            let image = map
                .get(id)
                .ok_or_else(|| Error::UnmappedPoint(id.to_owned()))?;
            let idx = target.index_of(image)?;
            merged
                .entry(idx)
                .and_modify(|cur| *cur = cur.max(atom.weight))
                .or_insert(atom.weight);
        }
        let atoms = merged
            .into_iter()
            .map(|(point, weight)| Atom { point, weight })
            .collect();
        Ok(IdempotentMeasure {
            space: Arc::clone(target),
            atoms,
        })
    }

    /// Evaluates the three defining functional identities through
    /// [`integrate`](Self::integrate) and reports each residual.
    pub fn check_axioms(
        &self,
        f: &TestFunction,
        g: &TestFunction,
        shift: f64,
    ) -> Result<AxiomReport> {
        let constant = TestFunction::constant_on(&self.space, shift);
        let normalization = (self.integrate(&constant)? - shift).abs();

        let translation = {
            let shifted = f.shifted(shift);
            (self.integrate(&shifted)? - (self.integrate(f)? + shift)).abs()
        };

        let join = {
            let joined = f.pointwise_max(g);
            let lhs = self.integrate(&joined)?;
            let rhs = self.integrate(f)?.max(self.integrate(g)?);
            (lhs - rhs).abs()
        };

        Ok(AxiomReport {
            normalization,
            translation,
            join,
        })
    }

    /// Portable form of this measure for serialization.
    pub fn to_spec(&self, inline_space: bool) -> MeasureSpec {
        MeasureSpec {
            space: inline_space.then(|| SpaceRef::Inline((*self.space).clone())),
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomSpec {
                    point: self.space.id(a.point).to_owned(),
                    weight: MaxPlusScalar::Finite(a.weight),
                })
                .collect(),
        }
    }

    /// Rebuilds a measure from its portable form against `space`. An
    /// inline space in the spec must structurally equal `space`.
    pub fn from_spec(
        spec: &MeasureSpec,
        space: &Arc<GroundSpace>,
        mode: Normalization,
    ) -> Result<Self> {
        if let Some(SpaceRef::Inline(inline)) = &spec.space {
            if inline != space.as_ref() {
                return Err(Error::SpaceMismatch);
            }
        }
        IdempotentMeasure::from_atoms(
            space,
            spec.atoms.iter().map(|a| (a.point.as_str(), a.weight)),
            mode,
        )
    }
}

/// Residuals of the three measure-functional identities; all are zero (up
/// to rounding in the translation case) for a well-formed measure.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AxiomReport {
    /// |μ(λ_X) − λ|
    pub normalization: f64,
    /// |μ(φ + λ) − (μ(φ) + λ)|
    pub translation: f64,
    /// |μ(φ ⊕ ψ) − μ(φ) ⊕ μ(ψ)|
    pub join: f64,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.normalization.max(self.translation).max(self.join)
    }
}

/// A real-valued function given by a table over registered point ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    values: BTreeMap<String, f64>,
}

impl TestFunction {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        TestFunction {
            values: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// The constant function λ_X restricted to the registered points.
    pub fn constant_on(space: &GroundSpace, value: f64) -> Self {
        TestFunction {
            values: space.ids().iter().map(|id| (id.clone(), value)).collect(),
        }
    }

    pub fn value_at(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    /// λ ⊙ φ, i.e. the pointwise shift φ + λ.
    pub fn shifted(&self, shift: f64) -> Self {
        TestFunction {
            values: self
                .values
                .iter()
                .map(|(k, v)| (k.clone(), v + shift))
                .collect(),
        }
    }

    /// φ ⊕ ψ on the common domain.
    pub fn pointwise_max(&self, other: &Self) -> Self {
        TestFunction {
            values: self
                .values
                .iter()
                .filter_map(|(k, v)| other.values.get(k).map(|w| (k.clone(), v.max(*w))))
                .collect(),
        }
    }
}

/// Portable measure representation: an optional space (inline object or a
/// plain label) and the atom table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceRef>,
    pub atoms: Vec<AtomSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Inline(GroundSpace),
    Label(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomSpec {
    pub point: String,
    pub weight: MaxPlusScalar,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use MaxPlusScalar::{Bottom, Finite};

    fn line_space(n: usize) -> Arc<GroundSpace> {
        let pts: BTreeMap<String, Vec<f64>> =
            (0..n).map(|i| (format!("p{i}"), vec![i as f64])).collect();
        Arc::new(GroundSpace::euclidean(1, pts, None).unwrap())
    }

    fn ab_space() -> Arc<GroundSpace> {
        Arc::new(
            GroundSpace::matrix(
                vec!["a".into(), "b".into()],
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                None,
            )
            .unwrap(),
        )
    }

    #[test]
    fn dirac_is_a_single_zero_atom() {
        let s = ab_space();
        let mu = IdempotentMeasure::dirac(&s, "a").unwrap();
        assert_eq!(
            mu.atoms(),
            &[Atom {
                point: 0,
                weight: 0.0
            }]
        );
        assert_eq!(mu.support(), ["a"]);
        assert_eq!(mu.support_size(), 1);
        let f = TestFunction::from_pairs([("a", 2.5), ("b", -4.0)]);
        assert_eq!(mu.integrate(&f).unwrap(), 2.5);
    }

    #[test]
    fn strict_mode_accepts_normalized_atoms_unchanged() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("b", Finite(-2.0))],
            Normalization::Strict,
        )
        .unwrap();
        assert_eq!(mu.weights(), vec![0.0, -2.0]);
    }

    #[test]
    fn autonormalize_shifts_by_the_top_weight() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(-1.0)), ("b", Finite(-3.0))],
            Normalization::Autonormalize,
        )
        .unwrap();
        assert_eq!(mu.weights(), vec![0.0, -2.0]);
    }

    #[test]
    fn duplicates_merge_by_max() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("a", Finite(-1.0)), ("b", Finite(-2.0))],
            Normalization::Strict,
        )
        .unwrap();
        assert_eq!(mu.weights(), vec![0.0, -2.0]);
        assert_eq!(mu.support(), ["a", "b"]);
    }

    #[test]
    fn bottom_atoms_are_dropped() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("b", Bottom)],
            Normalization::Strict,
        )
        .unwrap();
        assert_eq!(mu.support(), ["a"]);
        assert!(matches!(
            IdempotentMeasure::from_atoms(&s, [("a", Bottom)], Normalization::Strict),
            Err(Error::AllBottom)
        ));
    }

    #[test]
    fn construction_errors() {
        let s = ab_space();
        let empty: [(&str, MaxPlusScalar); 0] = [];
        assert!(matches!(
            IdempotentMeasure::from_atoms(&s, empty, Normalization::Strict),
            Err(Error::EmptyMeasure)
        ));
        assert!(matches!(
            IdempotentMeasure::from_atoms(&s, [("a", Finite(-0.5))], Normalization::Strict),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            IdempotentMeasure::from_atoms(&s, [("zz", Finite(0.0))], Normalization::Strict),
            Err(Error::UnknownPoint(_))
        ));
    }

    #[test]
    fn integrate_is_the_max_of_weighted_values() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("b", Finite(-2.0))],
            Normalization::Strict,
        )
        .unwrap();
        let f = TestFunction::from_pairs([("a", 1.0), ("b", 5.0)]);
        assert_eq!(mu.integrate(&f).unwrap(), 3.0);

        let c = TestFunction::constant_on(&s, -0.75);
        assert_eq!(mu.integrate(&c).unwrap(), -0.75);

        let undefined = TestFunction::from_pairs([("a", 1.0)]);
        assert!(matches!(
            mu.integrate(&undefined),
            Err(Error::UndefinedAt(p)) if p == "b"
        ));
    }

    #[test]
    fn pushforward_relabels_and_merges() {
        let s = line_space(3);
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("p0", Finite(0.0)), ("p1", Finite(-2.0))],
            Normalization::Strict,
        )
        .unwrap();

        // Injective map: weights ride along.
        let swap: BTreeMap<String, String> = [("p0", "p2"), ("p1", "p0")]
            .into_iter()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect();
        let pushed = mu.pushforward(&swap, &s).unwrap();
        assert_eq!(pushed.support(), ["p0", "p2"]);
        assert_eq!(pushed.weights(), vec![-2.0, 0.0]);

        // Collapsing map: merged by max.
        let collapse: BTreeMap<String, String> = [("p0", "p2"), ("p1", "p2")]
            .into_iter()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect();
        let collapsed = mu.pushforward(&collapse, &s).unwrap();
        assert_eq!(collapsed.support(), ["p2"]);
        assert_eq!(collapsed.weights(), vec![0.0]);
        assert_eq!(collapsed.support_size(), 1);

        // Identity map: fixpoint.
        let ident: BTreeMap<String, String> = ["p0", "p1"]
            .into_iter()
            .map(|p| (p.to_owned(), p.to_owned()))
            .collect();
        assert_eq!(mu.pushforward(&ident, &s).unwrap(), mu);

        let partial: BTreeMap<String, String> =
            [("p0".to_owned(), "p1".to_owned())].into_iter().collect();
        assert!(matches!(
            mu.pushforward(&partial, &s),
            Err(Error::UnmappedPoint(_))
        ));
    }

    #[test]
    fn axioms_hold_for_valid_measures() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("b", Finite(-1.25))],
            Normalization::Strict,
        )
        .unwrap();
        let f = TestFunction::from_pairs([("a", 0.5), ("b", 2.0)]);
        let g = TestFunction::from_pairs([("a", -1.0), ("b", 3.5)]);
        let report = mu.check_axioms(&f, &g, 0.7).unwrap();
        assert!(report.max_residual() <= 1e-12, "{report:?}");
    }

    #[test]
    fn dirac_join_axiom_degenerates_to_pointwise_max() {
        let s = ab_space();
        let mu = IdempotentMeasure::dirac(&s, "b").unwrap();
        let f = TestFunction::from_pairs([("a", 9.0), ("b", 1.0)]);
        let g = TestFunction::from_pairs([("a", -9.0), ("b", 4.0)]);
        assert_eq!(mu.integrate(&f.pointwise_max(&g)).unwrap(), 4.0);
        let report = mu.check_axioms(&f, &g, 0.0).unwrap();
        assert_eq!(report.join, 0.0);
    }

    #[test]
    fn unchecked_measures_expose_normalization_residual() {
        let s = ab_space();
        let raw = IdempotentMeasure::from_atoms_unchecked(&s, [("a", -0.5), ("b", -2.0)]).unwrap();
        let f = TestFunction::constant_on(&s, 1.0);
        let g = TestFunction::constant_on(&s, 2.0);
        let report = raw.check_axioms(&f, &g, 0.0).unwrap();
        assert!((report.normalization - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measure_spec_round_trip() {
        let s = ab_space();
        let mu = IdempotentMeasure::from_atoms(
            &s,
            [("a", Finite(0.0)), ("b", Finite(-2.0))],
            Normalization::Strict,
        )
        .unwrap();
        let spec = mu.to_spec(true);
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: MeasureSpec = serde_json::from_str(&json).unwrap();
        let back = IdempotentMeasure::from_spec(&parsed, &s, Normalization::Strict).unwrap();
        assert_eq!(back, mu);

        // An inline space that disagrees with the ambient one is rejected.
        let other = line_space(2);
        assert!(matches!(
            IdempotentMeasure::from_spec(&parsed, &other, Normalization::Strict),
            Err(Error::SpaceMismatch)
        ));
    }

    fn arb_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..0.0, n)
    }

    proptest! {
        #[test]
        fn canonical_form_invariants(ws in arb_weights(5)) {
            let s = line_space(5);
            let atoms: Vec<(String, MaxPlusScalar)> = ws
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("p{i}"), Finite(w)))
                .collect();
            let mu =
                IdempotentMeasure::from_atoms(&s, atoms, Normalization::Autonormalize).unwrap();
            let weights = mu.weights();
            prop_assert_eq!(weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 0.0);
            prop_assert!(weights.iter().all(|&w| w <= 0.0 && w.is_finite()));
            let support = mu.support();
            let mut sorted = support.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(support.len(), sorted.len());

            // Rebuilding from the canonical atoms is the identity.
            let again = IdempotentMeasure::from_atoms(
                &s,
                mu.support()
                    .iter()
                    .zip(mu.weights())
                    .map(|(p, w)| (p.to_string(), Finite(w)))
                    .collect::<Vec<_>>(),
                Normalization::Strict,
            )
            .unwrap();
            prop_assert_eq!(again, mu);
        }

        #[test]
        fn pushforward_is_functorial_and_adjoint_to_composition(
            ws in arb_weights(4),
            f_img in prop::collection::vec(0usize..4, 4),
            g_img in prop::collection::vec(0usize..4, 4),
            values in prop::collection::vec(-10.0f64..10.0, 4),
        ) {
            let s = line_space(4);
            let atoms: Vec<(String, MaxPlusScalar)> = ws
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("p{i}"), Finite(w)))
                .collect();
            let mu =
                IdempotentMeasure::from_atoms(&s, atoms, Normalization::Autonormalize).unwrap();

            let f_map: BTreeMap<String, String> = (0..4)
                .map(|i| (format!("p{i}"), format!("p{}", f_img[i])))
                .collect();
            let g_map: BTreeMap<String, String> = (0..4)
                .map(|i| (format!("p{i}"), format!("p{}", g_img[i])))
                .collect();
            let gf_map: BTreeMap<String, String> = (0..4)
                .map(|i| (format!("p{i}"), format!("p{}", g_img[f_img[i]])))
                .collect();

            let two_step = mu
                .pushforward(&f_map, &s)
                .unwrap()
                .pushforward(&g_map, &s)
                .unwrap();
            let one_step = mu.pushforward(&gf_map, &s).unwrap();
            prop_assert_eq!(&two_step, &one_step);

            // integrate(pushforward(f, mu), phi) == integrate(mu, phi ∘ f)
            let phi = TestFunction::from_pairs(
                values.iter().enumerate().map(|(i, &v)| (format!("p{i}"), v)),
            );
            let pulled = TestFunction::from_pairs((0..4).map(|i| {
                (format!("p{i}"), values[f_img[i]])
            }));
            let lhs = mu.pushforward(&f_map, &s).unwrap().integrate(&phi).unwrap();
            let rhs = mu.integrate(&pulled).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn axiom_residuals_vanish(
            ws in arb_weights(4),
            fv in prop::collection::vec(-5.0f64..5.0, 4),
            gv in prop::collection::vec(-5.0f64..5.0, 4),
            shift in -4.0f64..4.0,
        ) {
            let s = line_space(4);
            let atoms: Vec<(String, MaxPlusScalar)> = ws
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("p{i}"), Finite(w)))
                .collect();
            let mu =
                IdempotentMeasure::from_atoms(&s, atoms, Normalization::Autonormalize).unwrap();
            let f = TestFunction::from_pairs(
                fv.iter().enumerate().map(|(i, &v)| (format!("p{i}"), v)),
            );
            let g = TestFunction::from_pairs(
                gv.iter().enumerate().map(|(i, &v)| (format!("p{i}"), v)),
            );
            let report = mu.check_axioms(&f, &g, shift).unwrap();
            prop_assert!(report.max_residual() <= 1e-12);
        }
    }
}
