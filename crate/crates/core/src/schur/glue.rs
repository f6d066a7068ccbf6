use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::element::{find_int_lipschitz_violation, pairing, LipschitzFunction};
use crate::error::{Error, Result};
use crate::metric::{restrict, FiniteMetricSpace};
use crate::schur::hump::BlockSequence;
use crate::transport::{free_norm, integer_potential, mcshane_extend_int, RoundingRoute, CERT_TOL};

/// Lipschitz bound of the glued functional.
pub const GLUE_LIP: i64 = 3;

/// Default ε budget as a fraction of the smallest norm level.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.05;

/// `(u, v, w)`: value `u` on an earlier block, `v` on a later one, distance `w`.
pub type ConflictKey = (i64, i64, i64);

/// Points of block `later` dropped because of conflicts with `earlier`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedSet {
    pub earlier: usize,
    pub later: usize,
    pub key: ConflictKey,
    pub points: Vec<usize>,
}

/// Optimal integer potential of one block on `{0} ∪ F_0 ∪ F_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPotential {
    pub block: usize,
    pub values: Vec<(usize, i64)>,
    pub norm: f64,
    pub route: RoundingRoute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessChecks {
    pub lipschitz: bool,
    pub disjoint: bool,
    pub conflict_bound: bool,
    pub slack_chain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub g: LipschitzFunction,
    pub g_integer: Vec<i64>,
    pub c: f64,
    /// Block indices (zero-based into the block list), increasing.
    pub retained: Vec<usize>,
    /// `⟨g, γ_0 + γ_n⟩` per retained block.
    pub values: Vec<f64>,
    /// `‖γ_0 + γ_n‖` per retained block, from an independent solve.
    pub norm_levels: Vec<f64>,
    /// `max(0, norm_level − value)` over retained blocks.
    pub slack: f64,
    pub dropped_mass: f64,
    pub per_block_dropped: Vec<f64>,
    pub epsilon: f64,
    pub offset: i64,
    pub integer_diameter: i64,
    pub pigeonhole_class: Vec<usize>,
    pub potentials: Vec<BlockPotential>,
    pub conflict_set_size: usize,
    pub active_conflicts: Vec<ConflictKey>,
    pub dropped_sets: Vec<DroppedSet>,
    pub h: Vec<usize>,
    pub checks: WitnessChecks,
}

/// Diagnostics when too few blocks survive the gluing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFailure {
    pub reason: String,
    pub conflict_set: Vec<ConflictKey>,
    pub offending_pairs: Vec<(usize, usize)>,
    pub retained: Vec<usize>,
    pub pigeonhole_class: Vec<usize>,
}

impl fmt::Display for WitnessFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} conflict triples, {} offending pairs, {} blocks retained)",
            self.reason,
            self.conflict_set.len(),
            self.offending_pairs.len(),
            self.retained.len()
        )
    }
}

/// Conflicts between an earlier and a later block, grouped by key:
/// `(U, V)` with `U ⊆ F_m`, `V ⊆ F_n`.
type PairConflicts = BTreeMap<ConflictKey, (BTreeSet<usize>, BTreeSet<usize>)>;

struct Glue<'a> {
    blocks: &'a BlockSequence,
    f: Vec<BTreeMap<usize, i64>>,
    conflicts: BTreeMap<(usize, usize), PairConflicts>,
}

impl Glue<'_> {
    fn pair(&self, m: usize, n: usize) -> &PairConflicts {
        &self.conflicts[&(m, n)]
    }

    /// `Σ |γ_n(y)|` over every V-set of the pair `(m, n)`.
    fn pair_mass(&self, m: usize, n: usize) -> f64 {
        let points: BTreeSet<usize> = self.pair(m, n).values().flat_map(|(_, v)| v.iter().copied()).collect();
        let block = &self.blocks.blocks()[n];
        points.iter().map(|&y| block.coeff(y).abs()).sum()
    }

    /// V-sets of later block `n` against each earlier retained block are
    /// pairwise disjoint per key.
    fn disjoint_against(&self, earlier: &[usize], n: usize) -> bool {
        let mut seen: BTreeMap<ConflictKey, BTreeSet<usize>> = BTreeMap::new();
        for &m in earlier {
            for (key, (_, v)) in self.pair(m, n) {
                let taken = seen.entry(*key).or_default();
                if v.iter().any(|y| !taken.insert(*y)) {
                    return false;
                }
            }
        }
        true
    }

    fn greedy(&self, class: &[usize], start: usize, epsilon: f64) -> Vec<usize> {
        let mut retained = vec![class[start]];
        for &n in &class[start + 1..] {
            let within_budget = retained
                .iter()
                .enumerate()
                .all(|(i, &m)| self.pair_mass(m, n) <= epsilon / 2f64.powi(i as i32 + 1));
            if within_budget && self.disjoint_against(&retained, n) {
                retained.push(n);
            }
        }
        retained
    }

    fn dropped_points(&self, retained: &[usize]) -> Vec<BTreeSet<usize>> {
        retained
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                retained[..j]
                    .iter()
                    .flat_map(|&m| self.pair(m, n).values().flat_map(|(_, v)| v.iter().copied()))
                    .collect()
            })
            .collect()
    }
}

/// Builds a 3-Lipschitz functional nearly norming `γ_0 + γ_n` along a
/// subsequence of blocks, by gluing per-block integer potentials.
///
/// `epsilon` bounds the total dropped mass; it defaults to a small fraction
/// of the smallest norm level.
pub fn glue_witness(
    space: &FiniteMetricSpace,
    blocks: &BlockSequence,
    c: f64,
    epsilon: Option<f64>,
) -> Result<WitnessCertificate> {
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    if blocks.is_empty() {
        return Err(Error::Precondition("at least one block besides γ_0 is required".into()));
    }
    if let Some(x) = blocks.max_index() {
        space.check_index(x)?;
    }
    let big_n = space.integer_diameter().unwrap_or(0);
    let f0 = blocks.f0();

    let mut potentials = Vec::with_capacity(blocks.len());
    let mut f: Vec<BTreeMap<usize, i64>> = Vec::with_capacity(blocks.len());
    for n in 0..blocks.len() {
        let mut subset = vec![0];
        subset.extend_from_slice(f0);
        subset.extend_from_slice(blocks.block_support(n));
        let local = restrict(space, &subset)?;
        let element = blocks.combined(n).to_rational().reindexed(|x| local.local_index(x))?;
        let potential = integer_potential(&local.space, &element)?;
        let values: BTreeMap<usize, i64> =
            local.indices.iter().zip(&potential.values).map(|(&x, &v)| (x, v)).collect();
        potentials.push(BlockPotential {
            block: n,
            values: values.iter().map(|(&x, &v)| (x, v)).collect(),
            norm: potential.norm.to_f64().unwrap_or(f64::NAN),
            route: potential.route,
        });
        f.push(values);
    }

    let min_level = potentials.iter().map(|p| p.norm).fold(f64::INFINITY, f64::min);
    if !(min_level > c) {
        return Err(Error::Precondition(format!(
            "smallest norm level {min_level} does not exceed c = {c}"
        )));
    }
    let epsilon = epsilon.unwrap_or(DEFAULT_EPSILON_FRACTION * min_level);
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }

    // pigeonhole on the F_0 signature and a common range offset
    let signature = |n: usize| -> Vec<i64> { f0.iter().map(|x| f[n][x]).collect() };
    let offset_range = |n: usize| -> (i64, i64) {
        let lo = f[n].values().copied().max().unwrap_or(0);
        let hi = f[n].values().copied().min().unwrap_or(0);
        ((lo - big_n).max(-big_n), hi.min(0))
    };
    let mut signatures: Vec<Vec<i64>> = Vec::new();
    for n in 0..blocks.len() {
        let s = signature(n);
        if !signatures.contains(&s) {
            signatures.push(s);
        }
    }
    let mut class: Vec<usize> = Vec::new();
    let mut offset = 0;
    for s in &signatures {
        for a in -big_n..=0 {
            let members: Vec<usize> = (0..blocks.len())
                .filter(|&n| {
                    let (lo, hi) = offset_range(n);
                    signature(n) == *s && lo <= a && a <= hi
                })
                .collect();
            if members.len() > class.len() {
                class = members;
                offset = a;
            }
        }
    }

    let conflict_set: Vec<ConflictKey> = (offset..=offset + big_n)
        .flat_map(|u| (offset..=offset + big_n).map(move |v| (u, v)))
        .flat_map(|(u, v)| (1..=big_n).map(move |w| (u, v, w)))
        .filter(|&(u, v, w)| (u - v).abs() > GLUE_LIP * w)
        .collect();

    let mut conflicts = BTreeMap::new();
    for (i, &m) in class.iter().enumerate() {
        for &n in &class[i + 1..] {
            let mut pair = PairConflicts::new();
            for &x in blocks.block_support(m) {
                for &y in blocks.block_support(n) {
                    let (u, v) = (f[m][&x], f[n][&y]);
                    let w = space.int_d(x, y).expect("integer metric");
                    if (u - v).abs() > GLUE_LIP * w {
                        let entry = pair.entry((u, v, w)).or_default();
                        entry.0.insert(x);
                        entry.1.insert(y);
                    }
                }
            }
            conflicts.insert((m, n), pair);
        }
    }
    let glue = Glue {
        blocks,
        f,
        conflicts,
    };

    let mut retained: Vec<usize> = Vec::new();
    for start in 0..class.len() {
        let run = glue.greedy(&class, start, epsilon);
        if run.len() > retained.len() {
            retained = run;
        }
    }

    let needed = blocks.len().min(2);
    let mut offending_pairs = Vec::new();
    let fail = |reason: &str, retained: &[usize], offending: &[(usize, usize)]| {
        Error::WitnessFailure(Box::new(WitnessFailure {
            reason: reason.to_string(),
            conflict_set: conflict_set.clone(),
            offending_pairs: offending.to_vec(),
            retained: retained.to_vec(),
            pigeonhole_class: class.clone(),
        }))
    };
    let owner: BTreeMap<usize, usize> = (0..blocks.len())
        .flat_map(|n| blocks.block_support(n).iter().map(move |&x| (x, n)))
        .collect();

    let (h, glued, dropped) = loop {
        if retained.len() < needed {
            return Err(fail("fewer than 2 blocks retained", &retained, &offending_pairs));
        }
        let dropped = glue.dropped_points(&retained);
        let mut glued: BTreeMap<usize, i64> = BTreeMap::new();
        glued.insert(0, 0);
        let first = retained[0];
        for x in f0 {
            glued.insert(*x, glue.f[first][x]);
        }
        for (j, &n) in retained.iter().enumerate() {
            for &x in blocks.block_support(n) {
                if !dropped[j].contains(&x) {
                    glued.insert(x, glue.f[n][&x]);
                }
            }
        }
        let h: Vec<usize> = glued.keys().copied().collect();
        match find_int_lipschitz_violation(space, &h, &|x| glued[&x], GLUE_LIP)? {
            None => break (h, glued, dropped),
            Some((x, y)) => {
                offending_pairs.push((x, y));
                let position = [x, y]
                    .iter()
                    .filter_map(|p| owner.get(p))
                    .filter_map(|n| retained.iter().position(|r| r == n))
                    .min();
                match position {
                    Some(p) => {
                        retained.remove(p);
                    }
                    None => {
                        return Err(fail("conflict inside γ_0", &retained, &offending_pairs));
                    }
                }
            }
        }
    };

    let h_values: Vec<i64> = h.iter().map(|x| glued[x]).collect();
    let g_integer = mcshane_extend_int(space, &h, &h_values, GLUE_LIP)?;
    let all: Vec<usize> = (0..space.len()).collect();
    if let Some((x, y)) = find_int_lipschitz_violation(space, &all, &|x| g_integer[x], GLUE_LIP)? {
        return Err(Error::CertificateFailed(format!(
            "extension is not {GLUE_LIP}-Lipschitz on ({x}, {y})"
        )));
    }
    let g = LipschitzFunction::new(space, g_integer.iter().map(|&v| v as f64).collect())?;

    let mut values = Vec::with_capacity(retained.len());
    let mut norm_levels = Vec::with_capacity(retained.len());
    let mut per_block_dropped = Vec::with_capacity(retained.len());
    let mut slack = 0.0f64;
    let mut slack_chain = true;
    for (j, &n) in retained.iter().enumerate() {
        let combined = blocks.combined(n);
        let value = pairing(&g, &combined)?;
        let level = free_norm(space, &combined)?.value;
        let mass: f64 = dropped[j].iter().map(|&y| blocks.blocks()[n].coeff(y).abs()).sum();
        slack = slack.max(level - value);
        slack_chain &= level - value <= 4.0 * big_n as f64 * mass + CERT_TOL * level.max(1.0);
        values.push(value);
        norm_levels.push(level);
        per_block_dropped.push(mass);
    }

    let mut dropped_sets = Vec::new();
    let mut active: BTreeSet<ConflictKey> = BTreeSet::new();
    for (j, &n) in retained.iter().enumerate() {
        for &m in &retained[..j] {
            for (key, (_, v)) in glue.pair(m, n) {
                active.insert(*key);
                dropped_sets.push(DroppedSet {
                    earlier: m,
                    later: n,
                    key: *key,
                    points: v.iter().copied().collect(),
                });
            }
        }
    }
    let disjoint = retained
        .iter()
        .enumerate()
        .all(|(j, &n)| glue.disjoint_against(&retained[..j], n));
    let cap = ((big_n + 1) as usize).pow(3);
    let checks = WitnessChecks {
        lipschitz: true,
        disjoint,
        conflict_bound: conflict_set.len() <= cap && active.len() <= cap,
        slack_chain,
    };
    if !(checks.disjoint && checks.conflict_bound && checks.slack_chain) {
        return Err(Error::CertificateFailed(format!("witness self-check failed: {checks:?}")));
    }

    Ok(WitnessCertificate {
        g,
        g_integer,
        c,
        retained,
        values,
        norm_levels,
        slack,
        dropped_mass: per_block_dropped.iter().sum(),
        per_block_dropped,
        epsilon,
        offset,
        integer_diameter: big_n,
        pigeonhole_class: class.clone(),
        potentials,
        conflict_set_size: conflict_set.len(),
        active_conflicts: active.into_iter().collect(),
        dropped_sets,
        h,
        checks,
    })
}
