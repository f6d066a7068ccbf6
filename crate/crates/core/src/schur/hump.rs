use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::element::FreeElement;
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::schur::sequence::ElementSequence;
use crate::transport::free_norm;

/// Coefficients within this distance count as agreeing when forming the
/// empirical limit.
pub const AGREEMENT_TOL: f64 = 1e-9;

/// `(γ_0, γ_1, …)` with pairwise disjoint supports `F_0, F_1, …` avoiding
/// the base point; `γ_n` is supported inside `F_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSequence {
    gamma0: FreeElement,
    blocks: Vec<FreeElement>,
    supports: Vec<Vec<usize>>,
}

impl BlockSequence {
    /// Supports are taken to be the element supports.
    pub fn new(gamma0: FreeElement, blocks: Vec<FreeElement>) -> Result<Self> {
        let mut supports = vec![gamma0.support()];
        supports.extend(blocks.iter().map(|b| b.support()));
        Self::with_supports(gamma0, blocks, supports)
    }

    /// `supports[0]` is `F_0`, `supports[n]` is `F_n`.
    pub fn with_supports(
        gamma0: FreeElement,
        blocks: Vec<FreeElement>,
        supports: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if supports.len() != blocks.len() + 1 {
            return Err(Error::Structural(format!(
                "expected {} support sets, got {}",
                blocks.len() + 1,
                supports.len()
            )));
        }
        let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
        let mut normalized = Vec::with_capacity(supports.len());
        for (n, set) in supports.into_iter().enumerate() {
            let set: BTreeSet<usize> = set.into_iter().collect();
            if set.contains(&0) {
                return Err(Error::Structural(format!("support set {n} contains the base point")));
            }
            for &x in &set {
                if let Some(m) = owner.insert(x, n) {
                    return Err(Error::Structural(format!(
                        "support sets {m} and {n} share point {x}"
                    )));
                }
            }
            normalized.push(set.into_iter().collect::<Vec<_>>());
        }
        for (n, element) in std::iter::once(&gamma0).chain(&blocks).enumerate() {
            if let Some(x) = element.support().into_iter().find(|x| owner.get(x) != Some(&n)) {
                return Err(Error::Structural(format!(
                    "element {n} has point {x} outside its support set"
                )));
            }
        }
        Ok(BlockSequence {
            gamma0,
            blocks,
            supports: normalized,
        })
    }

    pub fn gamma0(&self) -> &FreeElement {
        &self.gamma0
    }

    pub fn blocks(&self) -> &[FreeElement] {
        &self.blocks
    }

    pub fn f0(&self) -> &[usize] {
        &self.supports[0]
    }

    /// `F_n` for block `n` (zero-based into `blocks`).
    pub fn block_support(&self, n: usize) -> &[usize] {
        &self.supports[n + 1]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `γ_0 + γ_n`.
    pub fn combined(&self, n: usize) -> FreeElement {
        self.gamma0.plus(&self.blocks[n])
    }

    pub fn max_index(&self) -> Option<usize> {
        self.supports.iter().flatten().copied().max()
    }
}

/// How each coefficient of the empirical limit was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRule {
    /// A strict plurality of items (at least two) agreed.
    Consensus,
    /// No plurality; the last item's value was used.
    LastItem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumpReport {
    pub epsilon: f64,
    /// Empirical limit `μ` as `(point, coefficient)`.
    pub limit: Vec<(usize, f64)>,
    pub limit_rules: Vec<(usize, LimitRule)>,
    /// Sequence positions kept as the subsequence, increasing.
    pub retained_items: Vec<usize>,
    /// `‖μ_n restricted off F_0 ∪ F_n‖` per retained item.
    pub residuals: Vec<f64>,
    /// `‖(μ_n − μ) restricted to F_0‖` per retained item.
    pub f0_deviations: Vec<f64>,
}

/// Coefficient-wise empirical limit of the whole finite sequence.
pub fn empirical_limit(seq: &ElementSequence) -> (FreeElement, Vec<(usize, LimitRule)>) {
    let points: BTreeSet<usize> = seq.items().iter().flat_map(|m| m.support()).collect();
    let last = seq.items().last().expect("non-empty sequence");
    let mut limit = FreeElement::zero();
    let mut rules = Vec::with_capacity(points.len());
    for x in points {
        // clusters of agreeing values, keyed by their first representative
        let mut clusters: Vec<(f64, usize)> = Vec::new();
        for item in seq.items() {
            let a = item.coeff(x);
            match clusters.iter_mut().find(|(rep, _)| (rep - a).abs() <= AGREEMENT_TOL) {
                Some(cluster) => cluster.1 += 1,
                None => clusters.push((a, 1)),
            }
        }
        let mut order: Vec<usize> = (0..clusters.len()).collect();
        order.sort_by(|&i, &j| clusters[j].1.cmp(&clusters[i].1));
        let top = clusters[order[0]];
        let runner_up = order.get(1).map_or(0, |&i| clusters[i].1);
        let (value, rule) = if top.1 >= 2 && top.1 > runner_up {
            (top.0, LimitRule::Consensus)
        } else {
            (last.coeff(x), LimitRule::LastItem)
        };
        limit.add_at(x, value);
        rules.push((x, rule));
    }
    (limit, rules)
}

struct Selection {
    retained: Vec<usize>,
    supports: Vec<Vec<usize>>,
    residuals: Vec<f64>,
    deviations: Vec<f64>,
}

fn select(
    space: &FiniteMetricSpace,
    seq: &ElementSequence,
    limit: &FreeElement,
    f0: &BTreeSet<usize>,
    epsilon: f64,
) -> Result<Selection> {
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut out = Selection {
        retained: Vec::new(),
        supports: Vec::new(),
        residuals: Vec::new(),
        deviations: Vec::new(),
    };
    for (n, item) in seq.items().iter().enumerate() {
        let deviation = free_norm(space, &item.minus(limit).restricted_to(|x| f0.contains(&x)))?.value;
        if deviation >= epsilon {
            continue;
        }
        let residual = free_norm(space, &item.restricted_to(|x| used.contains(&x)))?.value;
        if residual >= epsilon {
            continue;
        }
        let fresh: Vec<usize> = item
            .support()
            .into_iter()
            .filter(|x| !f0.contains(x) && !used.contains(x))
            .collect();
        used.extend(fresh.iter().copied());
        out.retained.push(n);
        out.supports.push(fresh);
        out.residuals.push(residual);
        out.deviations.push(deviation);
    }
    Ok(out)
}

/// Fewest retained items for the gliding hump to succeed.
pub const MIN_RETAINED: usize = 3;

/// Extracts a subsequence close to `γ_0 + γ_n` with disjoint blocks:
/// `γ_0` is the empirical limit, `γ_n = μ_n` restricted to fresh points.
pub fn gliding_hump(seq: &ElementSequence, epsilon: f64) -> Result<(BlockSequence, HumpReport)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }
    if seq.len() < MIN_RETAINED {
        return Err(Error::Precondition(format!(
            "gliding hump needs at least {MIN_RETAINED} items, got {}",
            seq.len()
        )));
    }
    let space = seq.space();
    let (limit, limit_rules) = empirical_limit(seq);
    let f0: BTreeSet<usize> = limit.support().into_iter().collect();
    let selection = select(space, seq, &limit, &f0, epsilon)?;
    if selection.retained.len() < MIN_RETAINED {
        return Err(Error::EpsilonTooSmall {
            best: best_epsilon(space, seq, &limit, &f0, epsilon)?,
        });
    }
    let blocks: Vec<FreeElement> = selection
        .retained
        .iter()
        .zip(&selection.supports)
        .map(|(&n, fresh)| seq.items()[n].restricted_to(|x| fresh.binary_search(&x).is_ok()))
        .collect();
    let mut supports = vec![f0.iter().copied().collect::<Vec<_>>()];
    supports.extend(selection.supports);
    let block_sequence = BlockSequence::with_supports(limit.clone(), blocks, supports)?;
    let report = HumpReport {
        epsilon,
        limit: limit.iter().map(|(x, &a)| (x, a)).collect(),
        limit_rules,
        retained_items: selection.retained,
        residuals: selection.residuals,
        f0_deviations: selection.deviations,
    };
    Ok((block_sequence, report))
}

/// Smallest ε (up to bisection precision) at which selection succeeds.
fn best_epsilon(
    space: &FiniteMetricSpace,
    seq: &ElementSequence,
    limit: &FreeElement,
    f0: &BTreeSet<usize>,
    failed: f64,
) -> Result<f64> {
    let works = |eps: f64| -> Result<bool> {
        Ok(select(space, seq, limit, f0, eps)?.retained.len() >= MIN_RETAINED)
    };
    let mut lo = failed;
    let mut hi = failed * 2.0;
    while !works(hi)? {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if works(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
