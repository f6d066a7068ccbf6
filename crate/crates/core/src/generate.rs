//! Seeded instance generators. Every instance is fully determined by its
//! spec and seed, and passes the validators of the module it feeds.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::element::FreeElement;
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::schur::BlockSequence;
use crate::tree::subdominant_ultrametric;

/// Upper bound on generated point counts.
pub const POINT_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformDiscrete,
    IntegerMetric,
    Tree,
    Ultrametric,
    BlockSequence,
    ConflictBlock,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::UniformDiscrete,
        Family::IntegerMetric,
        Family::Tree,
        Family::Ultrametric,
        Family::BlockSequence,
        Family::ConflictBlock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::UniformDiscrete => "uniform-discrete",
            Family::IntegerMetric => "integer-metric",
            Family::Tree => "tree",
            Family::Ultrametric => "ultrametric",
            Family::BlockSequence => "block-sequence",
            Family::ConflictBlock => "conflict-block",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|family| family.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    /// Point count for the metric families.
    pub points: usize,
    /// Largest distance `N` for integer families.
    pub max_distance: i64,
    pub blocks: usize,
    /// Largest block support.
    pub support: usize,
}

impl GeneratorSpec {
    pub fn new(family: Family) -> Self {
        GeneratorSpec {
            family,
            points: 8,
            max_distance: 4,
            blocks: 24,
            support: 3,
        }
    }

    fn check(&self) -> Result<()> {
        let total = match self.family {
            Family::BlockSequence | Family::ConflictBlock => 1 + self.support + self.blocks * self.support.max(2),
            _ => self.points,
        };
        if total > POINT_CAP {
            return Err(Error::TooLarge {
                what: "generated instance",
                size: total,
                cap: POINT_CAP,
            });
        }
        if self.points < 1 {
            return Err(Error::InvalidParameter("points must be positive".into()));
        }
        match self.family {
            Family::IntegerMetric | Family::BlockSequence if self.max_distance < 1 => {
                Err(Error::InvalidParameter("max_distance must be at least 1".into()))
            }
            Family::BlockSequence | Family::ConflictBlock if self.blocks < 1 || self.support < 1 => {
                Err(Error::InvalidParameter("blocks and support must be positive".into()))
            }
            Family::ConflictBlock if !(4..=5).contains(&self.max_distance) => Err(Error::InvalidParameter(
                "conflict-block needs max_distance 4 or 5".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Space(FiniteMetricSpace),
    Blocks {
        space: FiniteMetricSpace,
        blocks: BlockSequence,
    },
}

impl Instance {
    pub fn space(&self) -> &FiniteMetricSpace {
        match self {
            Instance::Space(space) | Instance::Blocks { space, .. } => space,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    spec.check()?;
    let mut rng = rng(seed);
    Ok(match spec.family {
        Family::UniformDiscrete => Instance::Space(uniform_discrete(&mut rng, spec.points)?),
        Family::IntegerMetric => Instance::Space(integer_metric(&mut rng, spec.points, spec.max_distance)?),
        Family::Tree => Instance::Space(random_tree(&mut rng, spec.points)?),
        Family::Ultrametric => {
            Instance::Space(subdominant_ultrametric(&uniform_discrete(&mut rng, spec.points)?)?)
        }
        Family::BlockSequence => {
            let (space, blocks) = block_sequence(&mut rng, spec.blocks, spec.max_distance, spec.support)?;
            Instance::Blocks { space, blocks }
        }
        Family::ConflictBlock => {
            let (space, blocks) = conflict_blocks(&mut rng, spec.blocks, spec.max_distance)?;
            Instance::Blocks { space, blocks }
        }
    })
}

/// Distances drawn from `{1, 1.001, …, 2}`, so every triple is a triangle.
pub fn uniform_discrete<R: Rng>(rng: &mut R, n: usize) -> Result<FiniteMetricSpace> {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = 1.0 + rng.gen_range(0..=1000) as f64 / 1000.0;
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    FiniteMetricSpace::from_matrix(rows)
}

/// Shortest paths of a complete graph with weights in `1..=max`.
pub fn integer_metric<R: Rng>(rng: &mut R, n: usize, max: i64) -> Result<FiniteMetricSpace> {
    let mut w = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = rng.gen_range(1..=max);
            w[i][j] = d;
            w[j][i] = d;
        }
    }
    shortest_paths(&mut w);
    FiniteMetricSpace::from_matrix(to_f64(&w))
}

/// Path metric of a random tree with edge lengths in `{1/4, 1/2, …, 3}`;
/// node 0 is the base point.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Result<FiniteMetricSpace> {
    let mut rows = vec![vec![0.0; n]; n];
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        let len = rng.gen_range(1..=12) as f64 / 4.0;
        for j in 0..k {
            let d = rows[parent][j] + len;
            rows[k][j] = d;
            rows[j][k] = d;
        }
    }
    FiniteMetricSpace::from_matrix(rows)
}

fn shortest_paths(w: &mut [Vec<i64>]) {
    let n = w.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if w[i][k] + w[k][j] < w[i][j] {
                    w[i][j] = w[i][k] + w[k][j];
                }
            }
        }
    }
}

fn to_f64(w: &[Vec<i64>]) -> Vec<Vec<f64>> {
    w.iter().map(|row| row.iter().map(|&d| d as f64).collect()).collect()
}

fn random_coefficient<R: Rng>(rng: &mut R) -> f64 {
    let magnitude = rng.gen_range(1..=8) as f64 / 4.0;
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Blocks drawn from a few templates. Every distance lies in
/// `[⌈N/2⌉, N]`, which makes any choice a metric; copies of a template
/// repeat its distances to `{0} ∪ F_0` and within the block, so their
/// optimal potentials agree.
pub fn block_sequence<R: Rng>(
    rng: &mut R,
    blocks: usize,
    max: i64,
    support: usize,
) -> Result<(FiniteMetricSpace, BlockSequence)> {
    let lo = (max + 1) / 2;
    let f0_size = rng.gen_range(0..=support.min(2));
    let n_templates = rng.gen_range(1..=3usize);
    struct Template {
        size: usize,
        to_anchor: Vec<Vec<i64>>,
        inner: Vec<Vec<i64>>,
        coeffs: Vec<f64>,
    }
    let anchors = 1 + f0_size;
    let templates: Vec<Template> = (0..n_templates)
        .map(|_| {
            let size = rng.gen_range(1..=support);
            let to_anchor = (0..size)
                .map(|_| (0..anchors).map(|_| rng.gen_range(lo..=max)).collect())
                .collect();
            let mut inner = vec![vec![0; size]; size];
            for i in 0..size {
                for j in i + 1..size {
                    let d = rng.gen_range(lo..=max);
                    inner[i][j] = d;
                    inner[j][i] = d;
                }
            }
            let coeffs = (0..size).map(|_| random_coefficient(rng)).collect();
            Template {
                size,
                to_anchor,
                inner,
                coeffs,
            }
        })
        .collect();
    let choice: Vec<usize> = (0..blocks)
        .map(|_| if rng.gen_bool(0.6) { 0 } else { rng.gen_range(0..n_templates) })
        .collect();
    let total = anchors + choice.iter().map(|&t| templates[t].size).sum::<usize>();
    let mut w = vec![vec![0i64; total]; total];
    for i in 0..total {
        for j in i + 1..total {
            let d = rng.gen_range(lo..=max);
            w[i][j] = d;
            w[j][i] = d;
        }
    }
    let mut start = anchors;
    let mut elements = Vec::with_capacity(blocks);
    let mut supports = vec![(1..anchors).collect::<Vec<_>>()];
    for &t in &choice {
        let template = &templates[t];
        let points: Vec<usize> = (start..start + template.size).collect();
        for (a, &x) in points.iter().enumerate() {
            for anchor in 0..anchors {
                w[x][anchor] = template.to_anchor[a][anchor];
                w[anchor][x] = template.to_anchor[a][anchor];
            }
            for (b, &y) in points.iter().enumerate() {
                w[x][y] = template.inner[a][b];
            }
        }
        elements.push(FreeElement::from_pairs(points.iter().copied().zip(template.coeffs.iter().copied())));
        supports.push(points);
        start += template.size;
    }
    let gamma0 = FreeElement::from_pairs((1..anchors).map(|x| (x, random_coefficient(rng))));
    let space = FiniteMetricSpace::from_matrix(to_f64(&w))?;
    let blocks = BlockSequence::with_supports(gamma0, elements, supports)?;
    Ok((space, blocks))
}

/// A hub block `δ(p)` with `d(0, p) = 4`, then blocks `δ(p_n) − η δ(q_n)`
/// with `d(0, p_n) = d(p_n, q_n) = N`. Most spikes `q_n` sit at distance 1
/// from the hub, where their optimal value 0 conflicts with the hub's 4.
pub fn conflict_blocks<R: Rng>(rng: &mut R, blocks: usize, max: i64) -> Result<(FiniteMetricSpace, BlockSequence)> {
    let total = 2 + 2 * blocks.saturating_sub(1);
    let hub = 1;
    let mut w = vec![vec![max; total]; total];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = 0;
    }
    let link = |w: &mut Vec<Vec<i64>>, i: usize, j: usize, d: i64| {
        w[i][j] = d;
        w[j][i] = d;
    };
    link(&mut w, 0, hub, 4);
    let mut elements = vec![FreeElement::dirac(hub)];
    for b in 1..blocks {
        let (p, q) = (2 * b, 2 * b + 1);
        if rng.gen_bool(0.8) {
            link(&mut w, hub, q, 1);
        }
        let eta = rng.gen_range(10..=25) as f64 / 1000.0;
        elements.push(FreeElement::from_pairs([(p, 1.0), (q, -eta)]));
    }
    shortest_paths(&mut w);
    let space = FiniteMetricSpace::from_matrix(to_f64(&w))?;
    let blocks = BlockSequence::new(FreeElement::zero(), elements)?;
    Ok((space, blocks))
}

/// A random element on `k` distinct non-base points with coefficients in
/// `{±1/4, …, ±2}`.
pub fn random_element<R: Rng>(rng: &mut R, space: &FiniteMetricSpace, k: usize) -> FreeElement {
    let mut points: Vec<usize> = (1..space.len()).collect();
    points.shuffle(rng);
    points.truncate(k);
    FreeElement::from_pairs(points.into_iter().map(|x| (x, random_coefficient(rng))))
}
