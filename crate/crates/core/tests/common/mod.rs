//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver it is used to check.
#![allow(dead_code)]

use lipfree::element::FreeElement;
use lipfree::metric::FiniteMetricSpace;
use rand::Rng;

/// All labelled trees on `k` vertices, decoded from Prüfer sequences.
pub fn spanning_trees(k: usize) -> Vec<Vec<(usize, usize)>> {
    if k == 1 {
        return vec![vec![]];
    }
    if k == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let total = k.pow((k - 2) as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(k - 2);
        let mut c = code;
        for _ in 0..k - 2 {
            seq.push(c % k);
            c /= k;
        }
        let mut degree = vec![1usize; k];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(k - 1);
        for &s in &seq {
            let leaf = (0..k).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        out.push(edges);
    }
    out
}

/// Maximum of `Σ α_x f(x)` over 1-Lipschitz `f` on `supp ∪ {0}` with
/// `f(0) = 0`, by enumerating every vertex of the dual polytope: each one
/// is fixed by a spanning tree of tight constraints `f(u) − f(v) = ±d(u,v)`.
pub fn dual_vertex_norm(space: &FiniteMetricSpace, element: &FreeElement) -> f64 {
    let mut nodes = vec![0usize];
    nodes.extend(element.support());
    let k = nodes.len();
    if k == 1 {
        return 0.0;
    }
    let d = |a: usize, b: usize| space.d(nodes[a], nodes[b]);
    let coeff: Vec<f64> = nodes.iter().map(|&x| element.coeff(x)).collect();
    let mut best = f64::NEG_INFINITY;
    for tree in spanning_trees(k) {
        let mut adj = vec![Vec::new(); k];
        for (e, &(u, v)) in tree.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        for signs in 0u32..(1 << (k - 1)) {
            let mut f = vec![f64::NAN; k];
            f[0] = 0.0;
            let mut stack = vec![0];
            while let Some(u) = stack.pop() {
                for &(v, e) in &adj[u] {
                    if f[v].is_nan() {
                        let s = if signs & (1 << e) != 0 { 1.0 } else { -1.0 };
                        f[v] = f[u] + s * d(u, v);
                        stack.push(v);
                    }
                }
            }
            let feasible = (0..k).all(|a| (a + 1..k).all(|b| (f[a] - f[b]).abs() <= d(a, b) + 1e-12));
            if feasible {
                let value: f64 = (0..k).map(|a| coeff[a] * f[a]).sum();
                best = best.max(value);
            }
        }
    }
    best
}

/// Best integer-valued 1-Lipschitz `f` on `supp ∪ {0}` by full search over
/// `[−N, N]`, exact on integer metrics with integer-scaled coefficients.
pub fn brute_integer_norm(space: &FiniteMetricSpace, element: &FreeElement) -> f64 {
    let mut nodes = vec![0usize];
    nodes.extend(element.support());
    let big_n = space.integer_diameter().expect("integer metric");
    let k = nodes.len();
    let mut f = vec![0i64; k];
    let mut best = f64::NEG_INFINITY;
    fn recurse(
        i: usize,
        f: &mut Vec<i64>,
        nodes: &[usize],
        space: &FiniteMetricSpace,
        element: &FreeElement,
        big_n: i64,
        best: &mut f64,
    ) {
        if i == nodes.len() {
            let value: f64 = (1..nodes.len()).map(|a| element.coeff(nodes[a]) * f[a] as f64).sum();
            *best = best.max(value);
            return;
        }
        for v in -big_n..=big_n {
            if (0..i).all(|a| (v - f[a]).abs() <= space.int_d(nodes[a], nodes[i]).unwrap()) {
                f[i] = v;
                recurse(i + 1, f, nodes, space, element, big_n, best);
            }
        }
    }
    recurse(1, &mut f, &nodes, space, element, big_n, &mut best);
    best
}

/// Random metric with rational distances `k/4`: shortest paths of a random
/// weighted complete graph.
pub fn random_rational_space<R: Rng>(rng: &mut R, n: usize) -> FiniteMetricSpace {
    let mut w = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = rng.gen_range(1..=20) as f64 / 4.0;
            w[i][j] = d;
            w[j][i] = d;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if w[i][k] + w[k][j] < w[i][j] {
                    w[i][j] = w[i][k] + w[k][j];
                }
            }
        }
    }
    FiniteMetricSpace::from_matrix(w).unwrap()
}

/// Random element with coefficients `k/8`, `k ∈ [−16, 16] ∖ {0}`.
pub fn random_rational_element<R: Rng>(rng: &mut R, space: &FiniteMetricSpace) -> FreeElement {
    let k = rng.gen_range(0..space.len());
    let mut points: Vec<usize> = (1..space.len()).collect();
    rand::seq::SliceRandom::shuffle(points.as_mut_slice(), rng);
    FreeElement::from_pairs(points.into_iter().take(k).map(|x| {
        let mut c = 0;
        while c == 0 {
            c = rng.gen_range(-16..=16);
        }
        (x, c as f64 / 8.0)
    }))
}

/// Net outflow, cost and admissibility of a certificate, recomputed.
pub fn plan_cost_and_balance(
    space: &FiniteMetricSpace,
    element: &FreeElement,
    flows: &[(usize, usize, f64)],
) -> (f64, f64) {
    let mut net = vec![0.0; space.len()];
    let mut cost = 0.0;
    for &(s, t, m) in flows {
        assert!(m >= 0.0);
        net[s] += m;
        net[t] -= m;
        cost += m * space.d(s, t);
    }
    let imbalance = (1..space.len())
        .map(|x| (net[x] - element.coeff(x)).abs())
        .fold(0.0, f64::max);
    (cost, imbalance)
}

pub fn max_ratio(space: &FiniteMetricSpace, values: &[f64]) -> f64 {
    let n = space.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max((values[i] - values[j]).abs() / space.d(i, j));
        }
    }
    best
}
