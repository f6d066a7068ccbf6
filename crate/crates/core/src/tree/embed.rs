use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::element::FreeElement;
use crate::error::{Error, Result};
use crate::metric::{check_four_point, FiniteMetricSpace};
use crate::scalar::{rational_from_decimal, rational_from_int};

/// A finite weighted tree realizing a metric space: original points map to
/// nodes, extra branch points are Steiner nodes labelled `s0, s1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEmbedding {
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize, BigRational)>,
    /// Original point index → node index.
    pub map: Vec<usize>,
}

impl TreeEmbedding {
    pub fn new(nodes: Vec<String>, edges: Vec<(usize, usize, BigRational)>, map: Vec<usize>) -> Result<Self> {
        let tree = TreeEmbedding { nodes, edges, map };
        tree.check_shape()?;
        Ok(tree)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || self.edges.len() + 1 != n {
            return Err(Error::Structural(format!(
                "a tree on {n} nodes needs {} edges, got {}",
                n.saturating_sub(1),
                self.edges.len()
            )));
        }
        for (u, v, len) in &self.edges {
            if *u >= n || *v >= n {
                return Err(Error::IndexOutOfRange((*u).max(*v)));
            }
            if !len.is_positive() {
                return Err(Error::Structural(format!("edge ({u}, {v}) has non-positive length")));
            }
        }
        if let Some(&bad) = self.map.iter().find(|&&node| node >= n) {
            return Err(Error::IndexOutOfRange(bad));
        }
        if self.distances_from(0).iter().any(Option::is_none) {
            return Err(Error::Structural("tree is not connected".into()));
        }
        Ok(())
    }

    fn adjacency(&self) -> Vec<Vec<(usize, &BigRational)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (u, v, len) in &self.edges {
            adj[*u].push((*v, len));
            adj[*v].push((*u, len));
        }
        adj
    }

    /// Path lengths from `root` to every node.
    pub fn distances_from(&self, root: usize) -> Vec<Option<BigRational>> {
        let adj = self.adjacency();
        let mut dist: Vec<Option<BigRational>> = vec![None; self.nodes.len()];
        dist[root] = Some(BigRational::zero());
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let du = dist[u].clone().expect("visited");
            for &(v, len) in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(&du + len);
                    stack.push(v);
                }
            }
        }
        dist
    }

    /// Path metric on all nodes, reordered so the base point's node comes
    /// first; returns the space and the node order used.
    pub fn node_metric(&self) -> Result<(FiniteMetricSpace, Vec<usize>)> {
        let base = *self.map.first().ok_or(Error::Unmapped(0))?;
        let mut order = vec![base];
        order.extend((0..self.nodes.len()).filter(|&v| v != base));
        let rows: Vec<Vec<f64>> = order
            .iter()
            .map(|&u| {
                let dist = self.distances_from(u);
                order
                    .iter()
                    .map(|&v| dist[v].as_ref().and_then(|d| d.to_f64()).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let labels = order.iter().map(|&v| self.nodes[v].clone()).collect();
        Ok((FiniteMetricSpace::new(labels, rows)?, order))
    }
}

/// Distances as exact rationals: integer metrics exactly, float metrics via
/// their shortest decimal form.
pub(crate) fn rational_distances(space: &FiniteMetricSpace) -> Result<Vec<Vec<BigRational>>> {
    let n = space.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match space.int_d(i, j) {
                    Some(d) => Ok(rational_from_int(d)),
                    None => rational_from_decimal(space.d(i, j)),
                })
                .collect()
        })
        .collect()
}

struct Builder {
    nodes: Vec<String>,
    adj: Vec<Vec<(usize, BigRational)>>,
    is_steiner: Vec<bool>,
}

impl Builder {
    fn add_node(&mut self, label: String, steiner: bool) -> usize {
        self.nodes.push(label);
        self.adj.push(Vec::new());
        self.is_steiner.push(steiner);
        self.nodes.len() - 1
    }

    fn connect(&mut self, u: usize, v: usize, len: BigRational) {
        self.adj[u].push((v, len.clone()));
        self.adj[v].push((u, len));
    }

    fn disconnect(&mut self, u: usize, v: usize) {
        self.adj[u].retain(|(w, _)| *w != v);
        self.adj[v].retain(|(w, _)| *w != u);
    }

    /// Nodes of the path `from → to`, each with the length of the edge
    /// leading to it.
    fn path(&self, from: usize, to: usize) -> Vec<(usize, BigRational)> {
        let mut parent: Vec<Option<(usize, BigRational)>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for (v, len) in &self.adj[u] {
                if !seen[*v] {
                    seen[*v] = true;
                    parent[*v] = Some((u, len.clone()));
                    stack.push(*v);
                }
            }
        }
        let mut path = Vec::new();
        let mut current = to;
        while current != from {
            let (p, len) = parent[current].clone().expect("connected tree");
            path.push((current, len));
            current = p;
        }
        path.push((from, BigRational::zero()));
        path.reverse();
        path
    }

    /// The node at distance `t` along `from → to`, splitting an edge if needed.
    fn locate(&mut self, from: usize, to: usize, t: &BigRational, steiner_count: &mut usize) -> usize {
        let path = self.path(from, to);
        let mut travelled = BigRational::zero();
        for (i, (node, before)) in path.iter().enumerate() {
            let node = *node;
            let reached = &travelled + before;
            if reached == *t {
                return node;
            }
            if reached > *t {
                let prev = path[i - 1].0;
                let label = format!("s{steiner_count}");
                *steiner_count += 1;
                let mid = self.add_node(label, true);
                self.disconnect(prev, node);
                self.connect(prev, mid, t - &travelled);
                self.connect(mid, node, &reached - t);
                return mid;
            }
            travelled = reached;
        }
        to
    }
}

/// Realizes a 0-hyperbolic space as a weighted tree by inserting points one
/// at a time at their Gromov product with the base point.
pub fn tree_embed(space: &FiniteMetricSpace) -> Result<TreeEmbedding> {
    let check = check_four_point(space)?;
    if let Some(quad) = check.witness {
        return Err(Error::FourPointViolation {
            quad,
            slack: check.slack,
        });
    }
    let d = rational_distances(space)?;
    let two = rational_from_int(2);
    let mut builder = Builder {
        nodes: Vec::new(),
        adj: Vec::new(),
        is_steiner: Vec::new(),
    };
    let mut steiner_count = 0usize;
    let mut map = vec![builder.add_node(space.label(0).to_string(), false)];
    for k in 1..space.len() {
        // attach on the path towards the point with the largest Gromov product
        let mut best = (0usize, BigRational::zero());
        for q in 1..k {
            let product = (&d[k][0] + &d[q][0] - &d[k][q]) / &two;
            if product > best.1 {
                best = (q, product);
            }
        }
        let (q, t) = best;
        let attach = builder.locate(map[0], map[q], &t, &mut steiner_count);
        let leg = &d[k][0] - &t;
        if leg.is_positive() {
            let node = builder.add_node(space.label(k).to_string(), false);
            builder.connect(attach, node, leg);
            map.push(node);
        } else if builder.is_steiner[attach] {
            builder.is_steiner[attach] = false;
            builder.nodes[attach] = space.label(k).to_string();
            map.push(attach);
        } else {
            return Err(Error::CertificateFailed(format!(
                "point {k} collapses onto an existing point"
            )));
        }
    }

    // Steiner labels renumbered in node order
    let mut next = 0;
    for (label, &steiner) in builder.nodes.iter_mut().zip(&builder.is_steiner) {
        if steiner {
            *label = format!("s{next}");
            next += 1;
        }
    }
    let mut edges = Vec::new();
    for (u, list) in builder.adj.iter().enumerate() {
        for (v, len) in list {
            if u < *v {
                edges.push((u, *v, len.clone()));
            }
        }
    }
    let tree = TreeEmbedding::new(builder.nodes, edges, map)?;
    for i in 0..space.len() {
        let dist = tree.distances_from(tree.map[i]);
        for j in 0..space.len() {
            if dist[tree.map[j]].as_ref() != Some(&d[i][j]) {
                return Err(Error::CertificateFailed(format!(
                    "tree distance between points {i} and {j} differs from the metric"
                )));
            }
        }
    }
    Ok(tree)
}

/// `Σ_e length(e) · |μ(far side of e)|`, the exact norm of `μ` in the free
/// space over a tree, rooted at the base point's node.
pub fn tree_cut_norm_exact(tree: &TreeEmbedding, element: &FreeElement) -> Result<BigRational> {
    let n = tree.nodes.len();
    let mut mass = vec![BigRational::zero(); n];
    for (x, &a) in element.iter() {
        let node = *tree.map.get(x).ok_or(Error::Unmapped(x))?;
        mass[node] += BigRational::from_float(a).ok_or_else(|| Error::Parse(format!("non-finite coefficient {a}")))?;
    }
    let root = *tree.map.first().ok_or(Error::Unmapped(0))?;
    let adj = tree.adjacency();
    // iterative DFS; children are summed before their parent
    let mut order = Vec::with_capacity(n);
    let mut parent: Vec<Option<(usize, BigRational)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        order.push(u);
        for &(v, len) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, len.clone()));
                stack.push(v);
            }
        }
    }
    let mut total = BigRational::zero();
    for &u in order.iter().rev() {
        if let Some((p, len)) = parent[u].clone() {
            total += &len * mass[u].abs();
            let carried = mass[u].clone();
            mass[p] += carried;
        }
    }
    Ok(total)
}

pub fn tree_cut_norm(tree: &TreeEmbedding, element: &FreeElement) -> Result<f64> {
    Ok(tree_cut_norm_exact(tree, element)?.to_f64().unwrap_or(f64::NAN))
}
