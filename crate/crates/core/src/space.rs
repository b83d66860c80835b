//! Finite ground spaces: a registered point set carrying a metric ρ and a
//! diameter, either as an explicit distance matrix or as a Euclidean cloud.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for accepting floating-point metric data: axiom violations
/// smaller than this are treated as rounding noise.
pub const METRIC_TOL: f64 = 1e-9;

/// A finite metric space with an optional declared ambient diameter.
///
/// The declared diameter stands in for the diameter of the ambient
/// compactum when the registered points only sample it; the truncation in
/// the distance layer uses it, so callers who intend a larger ambient space
/// must declare it. Points are kept sorted by id, so indices are canonical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct GroundSpace {
    ids: Vec<String>,
    kind: SpaceKind,
    declared_diam: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
enum SpaceKind {
    /// Row-major symmetric distance matrix aligned with `ids`.
    Matrix(Vec<Vec<f64>>),
    Euclidean {
        dim: usize,
        coords: Vec<Vec<f64>>,
    },
}

impl GroundSpace {
    /// Builds a matrix-backed space. The matrix rows must align with
    /// `points`; both are re-sorted into canonical id order. Fails if the
    /// data violates the metric axioms beyond [`METRIC_TOL`].
    pub fn matrix(
        points: Vec<String>,
        d: Vec<Vec<f64>>,
        declared_diam: Option<f64>,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if d.len() != n {
            return Err(Error::MatrixShape { n, got: d.len() });
        }
        for row in &d {
            if row.len() != n {
                return Err(Error::MatrixShape { n, got: row.len() });
            }
        }
        let order = sorted_order(&points)?;
        let ids: Vec<String> = order.iter().map(|&i| points[i].clone()).collect();
        let permuted: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| order.iter().map(|&j| d[i][j]).collect())
            .collect();
        let space = GroundSpace {
            ids,
            kind: SpaceKind::Matrix(permuted),
            declared_diam,
        };
        space.checked()
    }

    /// Builds a Euclidean space from labeled coordinate vectors.
    pub fn euclidean(
        dim: usize,
        points: BTreeMap<String, Vec<f64>>,
        declared_diam: Option<f64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len());
        for (id, c) in points {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    id,
                    expected: dim,
                    got: c.len(),
                });
            }
            ids.push(id);
            coords.push(c);
        }
        let space = GroundSpace {
            ids,
            kind: SpaceKind::Euclidean { dim, coords },
            declared_diam,
        };
        space.checked()
    }

    fn checked(self) -> Result<Self> {
        let report = self.validate_metric();
        if report.is_clean() {
            Ok(self)
        } else {
            Err(Error::InvalidMetric(report))
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Point ids in canonical (sorted) order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .map_err(|_| Error::UnknownPoint(id.to_owned()))
    }

    /// ρ(x, y) for registered point ids.
    pub fn distance(&self, x: &str, y: &str) -> Result<f64> {
        Ok(self.dist_idx(self.index_of(x)?, self.index_of(y)?))
    }

    /// ρ by canonical index; no bounds checks beyond the underlying slices.
    pub fn dist_idx(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            SpaceKind::Matrix(d) => d[i][j],
            SpaceKind::Euclidean { coords, .. } => {
                let (a, b) = (&coords[i], &coords[j]);
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// The space diameter: the declared value when present, otherwise the
    /// maximum pairwise distance over registered points.
    pub fn diam(&self) -> f64 {
        self.declared_diam.unwrap_or_else(|| self.computed_diam())
    }

    pub fn declared_diam(&self) -> Option<f64> {
        self.declared_diam
    }

    fn computed_diam(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.dist_idx(i, j));
            }
        }
        best
    }

    /// Checks every metric axiom instance and the declared-diameter bound,
    /// reporting each violation rather than failing fast.
    #[allow(clippy::needless_range_loop)] // symmetric d[i][j]/d[j][i] scans
    pub fn validate_metric(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.len();
        if let SpaceKind::Matrix(d) = &self.kind {
            for i in 0..n {
                for j in 0..n {
                    let v = d[i][j];
                    if !v.is_finite() {
                        violations.push(Violation::NonFinite {
                            x: self.ids[i].clone(),
                            y: self.ids[j].clone(),
                            value: v,
                        });
                    }
                }
            }
            if violations.is_empty() {
                for i in 0..n {
                    if d[i][i].abs() > METRIC_TOL {
                        violations.push(Violation::NonzeroDiagonal {
                            x: self.ids[i].clone(),
                            value: d[i][i],
                        });
                    }
                    for j in (i + 1)..n {
                        if (d[i][j] - d[j][i]).abs() > METRIC_TOL {
                            violations.push(Violation::Asymmetry {
                                x: self.ids[i].clone(),
                                y: self.ids[j].clone(),
                                forward: d[i][j],
                                backward: d[j][i],
                            });
                        }
                        if d[i][j] <= METRIC_TOL {
                            violations.push(Violation::VanishingOffDiagonal {
                                x: self.ids[i].clone(),
                                y: self.ids[j].clone(),
                                value: d[i][j],
                            });
                        }
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let excess = d[i][k] - (d[i][j] + d[j][k]);
                            if excess > METRIC_TOL {
                                violations.push(Violation::Triangle {
                                    x: self.ids[i].clone(),
                                    via: self.ids[j].clone(),
                                    y: self.ids[k].clone(),
                                    excess,
                                });
                            }
                        }
                    }
                }
            }
        } else if let SpaceKind::Euclidean { coords, .. } = &self.kind {
            for (i, c) in coords.iter().enumerate() {
                for &v in c {
                    if !v.is_finite() {
                        violations.push(Violation::NonFinite {
                            x: self.ids[i].clone(),
                            y: self.ids[i].clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        if let Some(diam) = self.declared_diam {
            let computed = self.computed_diam();
            if !diam.is_finite() || diam < computed - METRIC_TOL {
                violations.push(Violation::DiameterTooSmall {
                    declared: diam,
                    max_pairwise: computed,
                });
            }
        }
        ValidationReport { violations }
    }
}

fn sorted_order(ids: &[String]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    for w in order.windows(2) {
        if ids[w[0]] == ids[w[1]] {
            return Err(Error::DuplicatePoint(ids[w[0]].clone()));
        }
    }
    Ok(order)
}

/// One violated metric-axiom instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFinite {
        x: String,
        y: String,
        value: f64,
    },
    NonzeroDiagonal {
        x: String,
        value: f64,
    },
    Asymmetry {
        x: String,
        y: String,
        forward: f64,
        backward: f64,
    },
    VanishingOffDiagonal {
        x: String,
        y: String,
        value: f64,
    },
    Triangle {
        x: String,
        via: String,
        y: String,
        excess: f64,
    },
    DiameterTooSmall {
        declared: f64,
        max_pairwise: f64,
    },
}

/// Every axiom violation found in a space, empty when the space is a metric.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v {
                Violation::NonFinite { x, y, value } => {
                    write!(f, "non-finite entry rho({x},{y}) = {value}")?
                }
                Violation::NonzeroDiagonal { x, value } => {
                    write!(f, "nonzero diagonal rho({x},{x}) = {value}")?
                }
                Violation::Asymmetry { x, y, forward, backward } => {
                    write!(f, "asymmetry rho({x},{y}) = {forward} vs rho({y},{x}) = {backward}")?
                }
                Violation::VanishingOffDiagonal { x, y, value } => {
                    write!(f, "off-diagonal rho({x},{y}) = {value} is not positive")?
                }
                Violation::Triangle { x, via, y, excess } => {
                    write!(f, "triangle violation rho({x},{y}) > rho({x},{via}) + rho({via},{y}) by {excess}")?
                }
                Violation::DiameterTooSmall { declared, max_pairwise } => {
                    write!(f, "declared diameter {declared} is below the max pairwise distance {max_pairwise}")?
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SpaceRepr {
    Matrix {
        points: Vec<String>,
        d: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diam: Option<f64>,
    },
    Euclidean {
        dim: usize,
        points: BTreeMap<String, Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diam: Option<f64>,
    },
}

impl TryFrom<SpaceRepr> for GroundSpace {
    type Error = String;

    fn try_from(repr: SpaceRepr) -> std::result::Result<Self, String> {
        let built = match repr {
            SpaceRepr::Matrix { points, d, diam } => GroundSpace::matrix(points, d, diam),
            SpaceRepr::Euclidean { dim, points, diam } => GroundSpace::euclidean(dim, points, diam),
        };
        built.map_err(|e| e.to_string())
    }
}

impl From<GroundSpace> for SpaceRepr {
    fn from(space: GroundSpace) -> Self {
        let GroundSpace {
            ids,
            kind,
            declared_diam,
        } = space;
        match kind {
            SpaceKind::Matrix(d) => SpaceRepr::Matrix {
                points: ids,
                d,
                diam: declared_diam,
            },
            SpaceKind::Euclidean { dim, coords } => SpaceRepr::Euclidean {
                dim,
                points: ids.into_iter().zip(coords).collect(),
                diam: declared_diam,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_point_space(dist: f64, diam: Option<f64>) -> GroundSpace {
        GroundSpace::matrix(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, dist], vec![dist, 0.0]],
            diam,
        )
        .unwrap()
    }

    #[test]
    fn distance_lookup_and_identity() {
        let s = two_point_space(1.0, None);
        assert_eq!(s.distance("a", "a").unwrap(), 0.0);
        assert_eq!(s.distance("a", "b").unwrap(), 1.0);
        assert!(matches!(s.distance("a", "zz"), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn euclidean_distance_is_pythagorean() {
        let mut pts = BTreeMap::new();
        pts.insert("p".to_owned(), vec![0.0, 0.0]);
        pts.insert("q".to_owned(), vec![3.0, 4.0]);
        let s = GroundSpace::euclidean(2, pts, None).unwrap();
        assert_eq!(s.distance("p", "q").unwrap(), 5.0);
    }

    #[test]
    fn validation_catches_triangle_violation() {
        let r = GroundSpace::matrix(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 1.0, 10.0],
                vec![1.0, 0.0, 1.0],
                vec![10.0, 1.0, 0.0],
            ],
            None,
        );
        match r {
            Err(Error::InvalidMetric(report)) => {
                assert!(report
                    .violations
                    .iter()
                    .any(|v| matches!(v, Violation::Triangle { excess, .. } if *excess > 7.0)));
            }
            other => panic!("expected metric failure, got {other:?}"),
        }
    }

    #[test]
    fn validation_catches_asymmetry() {
        let r = GroundSpace::matrix(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![2.0, 0.0]],
            None,
        );
        match r {
            Err(Error::InvalidMetric(report)) => {
                assert!(report
                    .violations
                    .iter()
                    .any(|v| matches!(v, Violation::Asymmetry { .. })));
            }
            other => panic!("expected metric failure, got {other:?}"),
        }
    }

    #[test]
    fn valid_three_point_matrix_reports_clean() {
        let s = GroundSpace::matrix(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 1.0, 1.5],
                vec![1.0, 0.0, 1.0],
                vec![1.5, 1.0, 0.0],
            ],
            None,
        )
        .unwrap();
        assert!(s.validate_metric().is_clean());
    }

    #[test]
    fn diam_prefers_declaration() {
        assert_eq!(two_point_space(1.0, None).diam(), 1.0);
        assert_eq!(two_point_space(5.0, Some(7.0)).diam(), 7.0);
        let singleton = GroundSpace::matrix(vec!["x".into()], vec![vec![0.0]], None).unwrap();
        assert_eq!(singleton.diam(), 0.0);
    }

    #[test]
    fn declared_diam_below_pairwise_is_rejected() {
        let r = GroundSpace::matrix(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
            Some(1.0),
        );
        assert!(matches!(r, Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn computed_diam_is_monotone_under_adding_points() {
        let mut pts = BTreeMap::new();
        pts.insert("a".to_owned(), vec![0.0]);
        pts.insert("b".to_owned(), vec![2.0]);
        let small = GroundSpace::euclidean(1, pts.clone(), None).unwrap();
        pts.insert("c".to_owned(), vec![-3.0]);
        let large = GroundSpace::euclidean(1, pts, None).unwrap();
        assert!(large.diam() >= small.diam());
    }

    #[test]
    fn canonical_order_is_sorted_even_for_unsorted_input() {
        let s = GroundSpace::matrix(
            vec!["b".into(), "a".into()],
            vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            None,
        )
        .unwrap();
        assert_eq!(s.ids(), ["a".to_owned(), "b".to_owned()]);
        assert_eq!(s.distance("a", "b").unwrap(), 3.0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let r = GroundSpace::matrix(
            vec!["a".into(), "a".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            None,
        );
        assert!(matches!(r, Err(Error::DuplicatePoint(_))));
    }

    #[test]
    fn json_round_trip_both_variants() {
        let m = two_point_space(1.0, Some(2.0));
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"type\":\"matrix\""));
        let back: GroundSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);

        let mut pts = BTreeMap::new();
        pts.insert("p".to_owned(), vec![1.0, 0.5]);
        pts.insert("q".to_owned(), vec![0.25, -1.0]);
        let e = GroundSpace::euclidean(2, pts, None).unwrap();
        let json = serde_json::to_string(&e).unwrap();
        let back: GroundSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn invalid_json_space_fails_to_parse() {
        let bad = r#"{"type":"matrix","points":["a","b"],"d":[[0,5],[5,0]],"diam":1}"#;
        assert!(serde_json::from_str::<GroundSpace>(bad).is_err());
    }
}
