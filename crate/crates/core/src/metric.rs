//! Finite pointed metric spaces: validation, classification and the
//! reduction transforms (integer rounding, snowflaking, dyadic shells,
//! restriction to subsets).

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::is_integral;

/// Absolute tolerance for float metrics. Integer metrics are checked exactly.
pub const METRIC_TOL: f64 = 1e-9;

/// Quadruple and triple scans refuse spaces above this size.
pub const SCAN_CAP: usize = 64;

/// A finite metric space with a distinguished base point at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    int_dist: Option<Vec<i64>>,
}

impl FiniteMetricSpace {
    /// Builds a space from labels and a full distance matrix, rejecting
    /// anything that is not a metric.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let report = validate_metric(&rows)?;
        if labels.len() != rows.len() {
            return Err(Error::Structural(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                rows.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::Structural(format!("duplicate label {label:?}")));
            }
        }
        if !report.ok {
            return Err(Error::InvalidMetric(report));
        }
        Ok(Self::from_rows_unchecked(labels, rows))
    }

    /// Labels default to `"0"`, `"p1"`, `"p2"`, …
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = default_labels(rows.len());
        Self::new(labels, rows)
    }

    pub fn from_fn(n: usize, mut dist: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { dist(i, j) }).collect())
            .collect();
        Self::from_matrix(rows)
    }

    fn from_rows_unchecked(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let dist: Vec<f64> = rows.into_iter().flatten().collect();
        let int_dist = if dist.iter().all(|&d| is_integral(d)) {
            Some(dist.iter().map(|&d| d as i64).collect())
        } else {
            None
        };
        FiniteMetricSpace {
            labels,
            dist,
            int_dist,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    /// Exact distance when every entry of the matrix is an integer.
    #[inline]
    pub fn int_d(&self, i: usize, j: usize) -> Option<i64> {
        self.int_dist.as_ref().map(|d| d[i * self.len() + j])
    }

    pub fn is_integer(&self) -> bool {
        self.int_dist.is_some()
    }

    /// Largest distance `N` of an integer metric.
    pub fn integer_diameter(&self) -> Option<i64> {
        self.int_dist
            .as_ref()
            .map(|d| d.iter().copied().max().unwrap_or(0))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.len().max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn tolerance(&self) -> f64 {
        if self.is_integer() {
            0.0
        } else {
            METRIC_TOL
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(i))
        }
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| if i == 0 { "0".to_string() } else { format!("p{i}") })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Diagonal,
    Symmetry,
    Positivity,
    Triangle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// `[i]` for diagonal, `[i, j]` for symmetry and positivity,
    /// `[i, j, k]` for `d(i,k) > d(i,j) + d(j,k)`.
    pub indices: Vec<usize>,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {:?} by {}", self.kind, self.indices, self.magnitude)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Lists every diagonal, symmetry, positivity and triangle violation of a
/// square matrix. Non-square or non-finite input is a structural error.
pub fn validate_metric(rows: &[Vec<f64>]) -> Result<ValidationReport> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Structural("empty matrix: a base point is required".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Structural(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Structural(format!("entry ({i}, {j}) is not finite")));
        }
    }
    let integer = rows.iter().flatten().all(|&x| is_integral(x));
    let tol = if integer { 0.0 } else { METRIC_TOL };
    let mut violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row[i].abs() > tol {
            violations.push(Violation {
                kind: ViolationKind::Diagonal,
                indices: vec![i],
                magnitude: row[i].abs(),
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let gap = (rows[i][j] - rows[j][i]).abs();
            if gap > tol {
                violations.push(Violation {
                    kind: ViolationKind::Symmetry,
                    indices: vec![i, j],
                    magnitude: gap,
                });
            }
            for (a, b) in [(i, j), (j, i)] {
                if rows[a][b] <= tol {
                    violations.push(Violation {
                        kind: ViolationKind::Positivity,
                        indices: vec![a, b],
                        magnitude: tol - rows[a][b],
                    });
                }
            }
        }
    }
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let excess = rows[i][k] - (rows[i][j] + rows[j][k]);
                if excess > tol {
                    violations.push(Violation {
                        kind: ViolationKind::Triangle,
                        indices: vec![i, j, k],
                        magnitude: excess,
                    });
                }
            }
        }
    }
    Ok(ValidationReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// Minimum separation `a` and diameter `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationBounds {
    pub a: f64,
    pub b: f64,
}

pub fn separation_bounds(space: &FiniteMetricSpace) -> Result<SeparationBounds> {
    let n = space.len();
    if n < 2 {
        return Err(Error::NoPairs);
    }
    let mut a = f64::INFINITY;
    let mut b = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            a = a.min(space.d(i, j));
            b = b.max(space.d(i, j));
        }
    }
    Ok(SeparationBounds { a, b })
}

/// Integer rounding `d' = ⌈c·d⌉`. The result satisfies `c·d ≤ d' ≤ c·d + 1`.
pub fn round_metric(space: &FiniteMetricSpace, scale: f64) -> Result<FiniteMetricSpace> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let n = space.len();
    let rows = (0..n)
        .map(|i| (0..n).map(|j| (scale * space.d(i, j)).ceil()).collect())
        .collect();
    FiniteMetricSpace::new(space.labels.clone(), rows)
}

/// The snowflaked metric `d^p` for `0 < p ≤ 1`.
pub fn snowflake(space: &FiniteMetricSpace, power: f64) -> Result<FiniteMetricSpace> {
    if !(power > 0.0 && power <= 1.0) {
        return Err(Error::InvalidParameter(format!("power must lie in (0, 1], got {power}")));
    }
    let n = space.len();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if power == 1.0 { space.d(i, j) } else { space.d(i, j).powf(power) })
                .collect()
        })
        .collect();
    FiniteMetricSpace::new(space.labels.clone(), rows)
}

/// One dyadic shell `A_k = {x : d(x, 0) ≤ 2^k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicShell {
    pub k: i32,
    pub members: Vec<usize>,
}

fn dyadic_exponent(r: f64) -> i32 {
    let mut k = r.log2().ceil() as i32;
    while 2f64.powi(k) < r {
        k += 1;
    }
    while 2f64.powi(k - 1) >= r {
        k -= 1;
    }
    k
}

/// Shells listed at every `k` where `A_k` grows; the last one is the whole
/// space. A space with only the base point yields the single shell `A_0`.
pub fn dyadic_decomposition(space: &FiniteMetricSpace) -> Vec<DyadicShell> {
    let mut exponents: Vec<(i32, usize)> =
        (1..space.len()).map(|x| (dyadic_exponent(space.d(x, 0)), x)).collect();
    if exponents.is_empty() {
        return vec![DyadicShell {
            k: 0,
            members: vec![0],
        }];
    }
    exponents.sort();
    let mut shells: Vec<DyadicShell> = Vec::new();
    let mut members = vec![0];
    for (idx, &(k, x)) in exponents.iter().enumerate() {
        members.push(x);
        let last_at_k = exponents.get(idx + 1).map_or(true, |&(next, _)| next != k);
        if last_at_k {
            let mut sorted = members.clone();
            sorted.sort_unstable();
            shells.push(DyadicShell { k, members: sorted });
        }
    }
    shells
}

/// The induced subspace on `subset` together with the original index of
/// each new point. The base point stays at index 0; the others keep their
/// relative order.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub space: FiniteMetricSpace,
    pub indices: Vec<usize>,
}

impl Restriction {
    pub fn local_index(&self, original: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == original)
    }
}

pub fn restrict(space: &FiniteMetricSpace, subset: &[usize]) -> Result<Restriction> {
    if !subset.contains(&0) {
        return Err(Error::MissingBasePoint);
    }
    let mut indices: Vec<usize> = subset.to_vec();
    for &i in &indices {
        space.check_index(i)?;
    }
    indices.sort_unstable();
    indices.dedup();
    let labels = indices.iter().map(|&i| space.labels[i].clone()).collect();
    let mut dist = Vec::with_capacity(indices.len() * indices.len());
    for &i in &indices {
        for &j in &indices {
            dist.push(space.d(i, j));
        }
    }
    let int_dist = space.int_dist.as_ref().map(|full| {
        let n = space.len();
        indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| full[i * n + j]))
            .collect()
    });
    Ok(Restriction {
        space: FiniteMetricSpace {
            labels,
            dist,
            int_dist,
        },
        indices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UltrametricCheck {
    pub holds: bool,
    /// `(x, y, z)` with `d(x,z) > max(d(x,y), d(y,z))`.
    pub witness: Option<[usize; 3]>,
    pub slack: f64,
}

pub fn check_ultrametric(space: &FiniteMetricSpace) -> Result<UltrametricCheck> {
    let n = space.len();
    if n > SCAN_CAP {
        return Err(Error::TooLarge {
            what: "triple scan",
            size: n,
            cap: SCAN_CAP,
        });
    }
    let tol = space.tolerance();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let excess = space.d(x, z) - space.d(x, y).max(space.d(y, z));
                if excess > tol {
                    return Ok(UltrametricCheck {
                        holds: false,
                        witness: Some([x, y, z]),
                        slack: excess,
                    });
                }
            }
        }
    }
    Ok(UltrametricCheck {
        holds: true,
        witness: None,
        slack: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourPointCheck {
    pub holds: bool,
    /// `(x, y, z, u)` with `d(x,y) + d(z,u) > max(d(x,z) + d(y,u), d(x,u) + d(y,z))`.
    pub witness: Option<[usize; 4]>,
    pub slack: f64,
}

pub fn check_four_point(space: &FiniteMetricSpace) -> Result<FourPointCheck> {
    let n = space.len();
    if n > SCAN_CAP {
        return Err(Error::TooLarge {
            what: "quadruple scan",
            size: n,
            cap: SCAN_CAP,
        });
    }
    let tol = space.tolerance();
    let d = |i, j| space.d(i, j);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for u in 0..n {
                    let lhs = d(x, y) + d(z, u);
                    let rhs = (d(x, z) + d(y, u)).max(d(x, u) + d(y, z));
                    if lhs - rhs > tol {
                        return Ok(FourPointCheck {
                            holds: false,
                            witness: Some([x, y, z, u]),
                            slack: lhs - rhs,
                        });
                    }
                }
            }
        }
    }
    Ok(FourPointCheck {
        holds: true,
        witness: None,
        slack: 0.0,
    })
}
