//! The transportation-cost norm on finitely supported elements.
//!
//! The primal side is an uncapacitated min-cost flow on `supp(μ) ∪ {0}`
//! where the base point absorbs the imbalance `−Σ α_x`. Points outside the
//! support never help a cheapest plan (triangle inequality), so the solver
//! only sees the support. The dual potential is read off the node
//! potentials and extended to the rest of the space by the 1-Lipschitz
//! lower envelope.
//!
//! Every certificate is re-checked by [`verify_certificate`], which shares
//! no code with the solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::element::{lip_constant, FreeElement, LipschitzFunction, RationalElement};
use crate::error::{Error, Result};
use crate::metric::{separation_bounds, FiniteMetricSpace};
use crate::scalar::{rational_from_int, Scalar};

/// Relative tolerance for float certificates.
pub const CERT_TOL: f64 = 1e-9;

/// Support size cap for the exhaustive integer search.
pub const EXHAUSTIVE_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// `(source, sink, mass)` with positive mass.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub value: f64,
    pub plan: TransportPlan,
    pub potential: LipschitzFunction,
    pub gap: f64,
    pub base_coefficient_dropped: bool,
}

/// Optimal plan and potential of the transport problem on local nodes.
struct FlowSolution<S> {
    flow: Vec<Vec<S>>,
    potential: Vec<S>,
}

/// Successive shortest paths with node potentials. `cost` is a symmetric
/// matrix with positive off-diagonal entries; `supply` sums to zero.
/// Ties are broken by lowest local index.
fn successive_shortest_paths<S: Scalar>(cost: &[Vec<S>], supply: &[S]) -> FlowSolution<S> {
    let k = supply.len();
    let scale = supply.iter().fold(S::one(), |acc, s| {
        let a = s.abs();
        if a > acc {
            a
        } else {
            acc
        }
    });
    let mut excess = supply.to_vec();
    let mut flow = vec![vec![S::zero(); k]; k];
    let mut potential = vec![S::zero(); k];
    let positive = |x: &S| *x > S::zero() && !x.negligible(&scale);
    let negative = |x: &S| *x < S::zero() && !x.negligible(&scale);

    while let Some(source) = (0..k).find(|&i| positive(&excess[i])) {
        let mut dist: Vec<Option<S>> = vec![None; k];
        let mut done = vec![false; k];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; k];
        dist[source] = Some(S::zero());
        let mut target = None;
        loop {
            let mut next: Option<usize> = None;
            for v in 0..k {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    match next {
                        Some(u) if dist[u].as_ref().unwrap() <= dv => {}
                        _ => next = Some(v),
                    }
                }
            }
            let Some(u) = next else { break };
            done[u] = true;
            if negative(&excess[u]) {
                target = Some(u);
                break;
            }
            let du = dist[u].clone().unwrap();
            for v in 0..k {
                if done[v] || v == u {
                    continue;
                }
                // a reverse arc (cancelling flow v→u) is always cheaper
                let reverse = positive(&flow[v][u]);
                let arc = if reverse { -cost[u][v].clone() } else { cost[u][v].clone() };
                let mut reduced = arc + potential[u].clone() - potential[v].clone();
                if reduced < S::zero() {
                    reduced = S::zero();
                }
                let candidate = du.clone() + reduced;
                if dist[v].as_ref().map_or(true, |dv| candidate < *dv) {
                    dist[v] = Some(candidate);
                    pred[v] = Some((u, reverse));
                }
            }
        }
        let target = target.expect("complete graph: every deficit node is reachable");
        let reach = dist[target].clone().unwrap();
        for v in 0..k {
            let shift = match &dist[v] {
                Some(dv) if done[v] => dv.clone(),
                _ => reach.clone(),
            };
            potential[v] = potential[v].clone() + shift;
        }

        let mut amount = excess[source].clone();
        let need = -excess[target].clone();
        if need < amount {
            amount = need;
        }
        let mut v = target;
        while let Some((u, reverse)) = pred[v] {
            if reverse && flow[v][u] < amount {
                amount = flow[v][u].clone();
            }
            v = u;
        }
        let mut v = target;
        while let Some((u, reverse)) = pred[v] {
            if reverse {
                flow[v][u] = flow[v][u].clone() - amount.clone();
                if flow[v][u].negligible(&scale) {
                    flow[v][u] = S::zero();
                }
            } else {
                flow[u][v] = flow[u][v].clone() + amount.clone();
            }
            v = u;
        }
        excess[source] = excess[source].clone() - amount.clone();
        excess[target] = excess[target].clone() + amount;
        for i in [source, target] {
            if excess[i].negligible(&scale) {
                excess[i] = S::zero();
            }
        }
    }
    FlowSolution { flow, potential }
}

/// Optimal value, plan and full-space potential in the scalar type `S`.
struct GenericSolution<S> {
    value: S,
    flows: Vec<(usize, usize, S)>,
    potential: Vec<S>,
}

fn solve_generic<S: Scalar>(
    space: &FiniteMetricSpace,
    element: &FreeElement<S>,
    dist: &dyn Fn(usize, usize) -> S,
) -> Result<GenericSolution<S>> {
    element.check_on(space)?;
    let mut nodes = vec![0];
    nodes.extend(element.support());
    let k = nodes.len();
    let cost: Vec<Vec<S>> = nodes
        .iter()
        .map(|&i| nodes.iter().map(|&j| if i == j { S::zero() } else { dist(i, j) }).collect())
        .collect();
    let mut supply: Vec<S> = nodes.iter().map(|&x| element.coeff(x)).collect();
    supply[0] = supply[1..].iter().fold(S::zero(), |acc, a| acc - a.clone());

    let solution = successive_shortest_paths(&cost, &supply);

    let mut flows = Vec::new();
    let mut value = S::zero();
    for a in 0..k {
        for b in 0..k {
            let mass = &solution.flow[a][b];
            if *mass > S::zero() {
                value = value + mass.clone() * cost[a][b].clone();
                flows.push((nodes[a], nodes[b], mass.clone()));
            }
        }
    }
    // f(x) = p(0) − p(x) is 1-Lipschitz and tight on every used arc
    let local: Vec<S> = solution
        .potential
        .iter()
        .map(|p| solution.potential[0].clone() - p.clone())
        .collect();
    let potential = lower_envelope(space.len(), &nodes, &local, &S::one(), dist);
    Ok(GenericSolution {
        value,
        flows,
        potential,
    })
}

/// `g(x) = min_h (f(h) + L·d(x, h))`, exact on `nodes`.
fn lower_envelope<S: Scalar>(
    n: usize,
    nodes: &[usize],
    values: &[S],
    lip: &S,
    dist: &dyn Fn(usize, usize) -> S,
) -> Vec<S> {
    let mut out = vec![S::zero(); n];
    let mut on_nodes = vec![None; n];
    for (pos, &h) in nodes.iter().enumerate() {
        on_nodes[h] = Some(pos);
    }
    for (x, slot) in out.iter_mut().enumerate() {
        if let Some(pos) = on_nodes[x] {
            *slot = values[pos].clone();
            continue;
        }
        let mut best: Option<S> = None;
        for (pos, &h) in nodes.iter().enumerate() {
            let candidate = values[pos].clone() + lip.clone() * dist(x, h);
            if best.as_ref().map_or(true, |b| candidate < *b) {
                best = Some(candidate);
            }
        }
        *slot = best.expect("base point is always a node");
    }
    out
}

/// The free norm of `μ` with its primal plan and dual 1-Lipschitz
/// potential, verified post hoc.
pub fn free_norm(space: &FiniteMetricSpace, element: &FreeElement) -> Result<NormCertificate> {
    if !element.is_finite() {
        return Err(Error::InvalidParameter("coefficients must be finite".into()));
    }
    let solution = solve_generic(space, element, &|i, j| space.d(i, j))?;
    let potential = LipschitzFunction {
        lip_constant: lip_constant(space, &solution.potential)?,
        values: solution.potential,
    };
    let pairing_value: f64 = element.iter().map(|(x, a)| a * potential.values[x]).sum();
    let certificate = NormCertificate {
        value: solution.value,
        gap: (solution.value - pairing_value).abs(),
        plan: TransportPlan {
            flows: solution.flows,
            cost: solution.value,
        },
        potential,
        base_coefficient_dropped: element.dropped_base(),
    };
    verify_certificate(space, element, &certificate)?;
    Ok(certificate)
}

/// Independent check of a norm certificate: plan feasibility and cost,
/// potential admissibility, and the duality gap.
pub fn verify_certificate(
    space: &FiniteMetricSpace,
    element: &FreeElement,
    cert: &NormCertificate,
) -> Result<()> {
    let n = space.len();
    let fail = |msg: String| Err(Error::CertificateFailed(msg));
    let scale = element.total_mass().max(1.0);
    let mut net = vec![0.0; n];
    let mut cost = 0.0;
    for &(src, dst, mass) in &cert.plan.flows {
        if src >= n || dst >= n {
            return fail(format!("flow ({src}, {dst}) leaves the space"));
        }
        if !(mass >= 0.0) {
            return fail(format!("negative flow {mass} on ({src}, {dst})"));
        }
        net[src] += mass;
        net[dst] -= mass;
        cost += mass * space.d(src, dst);
    }
    for (x, out) in net.iter().enumerate().skip(1) {
        if (out - element.coeff(x)).abs() > CERT_TOL * scale {
            return fail(format!("net outflow {out} at {x} but coefficient {}", element.coeff(x)));
        }
    }
    if (cost - cert.value).abs() > CERT_TOL * cert.value.max(1.0) {
        return fail(format!("plan cost {cost} differs from value {}", cert.value));
    }
    if cert.potential.values.len() != n || cert.potential.values[0] != 0.0 {
        return fail("potential must have one value per point and vanish at 0".into());
    }
    let lip = lip_constant(space, &cert.potential.values)?;
    if lip > 1.0 + CERT_TOL {
        return fail(format!("potential has Lipschitz constant {lip}"));
    }
    let dual: f64 = element.iter().map(|(x, a)| a * cert.potential.values[x]).sum();
    let gap = (cost - dual).abs();
    if gap > CERT_TOL * cost.max(1.0) {
        return fail(format!("duality gap {gap}"));
    }
    Ok(())
}

/// Exact rational norm and optimal rational potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactNorm {
    pub value: BigRational,
    pub flows: Vec<(usize, usize, BigRational)>,
    pub potential: Vec<BigRational>,
}

pub fn exact_norm(space: &FiniteMetricSpace, element: &RationalElement) -> Result<ExactNorm> {
    let dist = |i: usize, j: usize| match space.int_d(i, j) {
        Some(d) => rational_from_int(d),
        None => BigRational::from_f64(space.d(i, j)),
    };
    let solution = solve_generic(space, element, &dist)?;
    Ok(ExactNorm {
        value: solution.value,
        flows: solution.flows,
        potential: solution.potential,
    })
}

/// How the integer potential was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingRoute {
    /// The optimal dual vertex was already integral.
    Direct,
    /// Threshold rounding `⌊f + t⌋` of a fractional optimum.
    Threshold,
    /// Exhaustive search over bounded integer 1-Lipschitz functions.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegerPotential {
    pub values: Vec<i64>,
    pub norm: BigRational,
    pub route: RoundingRoute,
}

impl IntegerPotential {
    pub fn to_lipschitz(&self, space: &FiniteMetricSpace) -> Result<LipschitzFunction> {
        LipschitzFunction::new(space, self.values.iter().map(|&v| v as f64).collect())
    }
}

fn pair_exact_int(values: &[i64], element: &RationalElement) -> BigRational {
    element
        .iter()
        .fold(BigRational::zero(), |acc, (x, a)| acc + a * rational_from_int(values[x]))
}

fn is_int_one_lipschitz(space: &FiniteMetricSpace, values: &[i64]) -> bool {
    let n = space.len();
    values[0] == 0
        && (0..n).all(|i| {
            (i + 1..n).all(|j| (values[i] - values[j]).abs() <= space.int_d(i, j).unwrap())
        })
}

fn floor_to_i64(x: &BigRational) -> Option<i64> {
    x.floor().to_integer().to_i64()
}

/// Rounds an optimal rational potential to an optimal integer one via
/// `x ↦ ⌊f(x) + t⌋`. Each such function is 1-Lipschitz on an integer metric
/// and vanishes at 0 for `t ∈ [0, 1)`; since `f` is their average over `t`,
/// the best breakpoint attains the optimum.
pub fn threshold_round(
    space: &FiniteMetricSpace,
    element: &RationalElement,
    potential: &[BigRational],
    norm: &BigRational,
) -> Option<Vec<i64>> {
    let one = BigRational::from_integer(BigInt::from(1));
    let mut breakpoints: Vec<BigRational> = vec![BigRational::zero()];
    for v in potential {
        let frac = v - v.floor();
        if !frac.is_zero() {
            breakpoints.push(&one - frac);
        }
    }
    breakpoints.sort();
    breakpoints.dedup();
    let mut best: Option<(BigRational, Vec<i64>)> = None;
    for t in breakpoints {
        let values: Option<Vec<i64>> = potential.iter().map(|v| floor_to_i64(&(v + &t))).collect();
        let values = values?;
        if !is_int_one_lipschitz(space, &values) {
            continue;
        }
        let value = pair_exact_int(&values, element);
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, values));
        }
    }
    best.filter(|(value, _)| value == norm).map(|(_, values)| values)
}

/// Exhaustive search over integer 1-Lipschitz functions on
/// `supp(μ) ∪ {0}` with values in `[−N, N]`, extended by the lower envelope.
pub fn exhaustive_integer_potential(
    space: &FiniteMetricSpace,
    element: &RationalElement,
) -> Result<(Vec<i64>, BigRational)> {
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    element.check_on(space)?;
    let support = element.support();
    if support.len() + 1 > EXHAUSTIVE_CAP {
        return Err(Error::TooLarge {
            what: "exhaustive integer search",
            size: support.len() + 1,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let d = |i: usize, j: usize| space.int_d(i, j).unwrap();
    let coeffs: Vec<BigRational> = support.iter().map(|&x| element.coeff(x)).collect();
    // optimistic remaining gain: |α_x|·d(x, 0) for every unassigned x
    let mut tail_bound = vec![BigRational::zero(); support.len() + 1];
    for i in (0..support.len()).rev() {
        tail_bound[i] = &tail_bound[i + 1] + Signed::abs(&coeffs[i]) * rational_from_int(d(support[i], 0));
    }

    struct Search<'a> {
        support: &'a [usize],
        coeffs: &'a [BigRational],
        tail_bound: &'a [BigRational],
        d: &'a dyn Fn(usize, usize) -> i64,
        current: Vec<i64>,
        best: Option<(BigRational, Vec<i64>)>,
    }
    impl Search<'_> {
        fn run(&mut self, pos: usize, acc: BigRational) {
            if let Some((b, _)) = &self.best {
                if &acc + &self.tail_bound[pos] <= *b {
                    return;
                }
            }
            if pos == self.support.len() {
                self.best = Some((acc, self.current.clone()));
                return;
            }
            let x = self.support[pos];
            let mut lo = -(self.d)(x, 0);
            let mut hi = (self.d)(x, 0);
            for (i, &y) in self.support[..pos].iter().enumerate() {
                lo = lo.max(self.current[i] - (self.d)(x, y));
                hi = hi.min(self.current[i] + (self.d)(x, y));
            }
            let mut order: Vec<i64> = (lo..=hi).collect();
            if self.coeffs[pos].is_positive() {
                order.reverse();
            }
            for v in order {
                self.current.push(v);
                let gain = &self.coeffs[pos] * rational_from_int(v);
                self.run(pos + 1, &acc + gain);
                self.current.pop();
            }
        }
    }
    let mut search = Search {
        support: &support,
        coeffs: &coeffs,
        tail_bound: &tail_bound,
        d: &d,
        current: Vec::new(),
        best: None,
    };
    search.run(0, BigRational::zero());
    let (value, local) = search.best.expect("the zero function is admissible");
    let mut nodes = vec![0];
    nodes.extend(&support);
    let mut local_values = vec![0];
    local_values.extend(local);
    let values = lower_envelope(space.len(), &nodes, &local_values, &1, &d);
    Ok((values, value))
}

/// An integer-valued 1-Lipschitz `f` with `f(0) = 0` and `⟨f, μ⟩ = ‖μ‖`
/// exactly, on an integer metric.
pub fn integer_potential(
    space: &FiniteMetricSpace,
    element: &RationalElement,
) -> Result<IntegerPotential> {
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    let exact = exact_norm(space, element)?;
    let direct: Option<Vec<i64>> = exact
        .potential
        .iter()
        .map(|v| if v.is_integer() { v.to_integer().to_i64() } else { None })
        .collect();
    let (values, route) = match direct {
        Some(values) => (values, RoundingRoute::Direct),
        None => match threshold_round(space, element, &exact.potential, &exact.value) {
            Some(values) => (values, RoundingRoute::Threshold),
            None => {
                let (values, _) = exhaustive_integer_potential(space, element)?;
                (values, RoundingRoute::Exhaustive)
            }
        },
    };
    if !is_int_one_lipschitz(space, &values) {
        return Err(Error::CertificateFailed("integer potential is not 1-Lipschitz".into()));
    }
    if pair_exact_int(&values, element) != exact.value {
        return Err(Error::CertificateFailed(
            "integer potential does not attain the exact norm".into(),
        ));
    }
    Ok(IntegerPotential {
        values,
        norm: exact.value,
        route,
    })
}

/// Float convenience wrapper: coefficients are converted exactly.
pub fn integer_potential_f64(
    space: &FiniteMetricSpace,
    element: &FreeElement,
) -> Result<IntegerPotential> {
    integer_potential(space, &element.to_rational())
}

fn check_extension_input(space: &FiniteMetricSpace, subset: &[usize], len: usize) -> Result<()> {
    if subset.len() != len {
        return Err(Error::MismatchedSpace(len, subset.len()));
    }
    for &h in subset {
        space.check_index(h)?;
    }
    if !subset.contains(&0) {
        return Err(Error::MissingBasePoint);
    }
    Ok(())
}

/// Extends `f_H` (given as values aligned with `subset`) from `H` to the
/// whole space by the lower envelope `g(x) = min_h f(h) + L·d(x, h)`.
pub fn mcshane_extend(
    space: &FiniteMetricSpace,
    subset: &[usize],
    values: &[f64],
    lip: f64,
) -> Result<LipschitzFunction> {
    check_extension_input(space, subset, values.len())?;
    if !(lip > 0.0) {
        return Err(Error::InvalidParameter(format!("Lipschitz bound must be positive, got {lip}")));
    }
    for (a, &x) in subset.iter().enumerate() {
        if x == 0 && values[a] != 0.0 {
            return Err(Error::NonzeroAtBase);
        }
        for (b, &y) in subset.iter().enumerate().skip(a + 1) {
            if x == y {
                continue;
            }
            let ratio = (values[a] - values[b]).abs() / space.d(x, y);
            if ratio > lip * (1.0 + CERT_TOL) {
                return Err(Error::NotLipschitz { x, y, ratio, bound: lip });
            }
        }
    }
    let extended = lower_envelope(space.len(), subset, values, &lip, &|i, j| space.d(i, j));
    LipschitzFunction::new(space, extended)
}

/// Exact integer version of [`mcshane_extend`] for integer metrics.
pub fn mcshane_extend_int(
    space: &FiniteMetricSpace,
    subset: &[usize],
    values: &[i64],
    lip: i64,
) -> Result<Vec<i64>> {
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    check_extension_input(space, subset, values.len())?;
    if lip <= 0 {
        return Err(Error::InvalidParameter(format!("Lipschitz bound must be positive, got {lip}")));
    }
    let d = |i: usize, j: usize| space.int_d(i, j).unwrap();
    for (a, &x) in subset.iter().enumerate() {
        if x == 0 && values[a] != 0 {
            return Err(Error::NonzeroAtBase);
        }
        for (b, &y) in subset.iter().enumerate().skip(a + 1) {
            if x != y && (values[a] - values[b]).abs() > lip * d(x, y) {
                let ratio = (values[a] - values[b]).abs() as f64 / d(x, y) as f64;
                return Err(Error::NotLipschitz { x, y, ratio, bound: lip as f64 });
            }
        }
    }
    Ok(lower_envelope(space.len(), subset, values, &lip, &d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ell1Bounds {
    pub lower: f64,
    pub upper: f64,
    pub total_mass: f64,
    pub norm: f64,
    pub within: bool,
}

/// `(a/2)·Σ|α| ≤ ‖μ‖ ≤ b·Σ|α|` with `(a, b)` the separation bounds.
pub fn ell1_bounds(space: &FiniteMetricSpace, element: &FreeElement) -> Result<Ell1Bounds> {
    let sep = separation_bounds(space)?;
    let total_mass = element.total_mass();
    let lower = sep.a / 2.0 * total_mass;
    let upper = sep.b * total_mass;
    let norm = free_norm(space, element)?.value;
    let slack = CERT_TOL * norm.max(1.0);
    Ok(Ell1Bounds {
        lower,
        upper,
        total_mass,
        norm,
        within: lower <= norm + slack && norm <= upper + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m3() -> FiniteMetricSpace {
        FiniteMetricSpace::new(
            vec!["0".into(), "x".into(), "y".into()],
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
        )
        .unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn isometric_embedding_of_points() {
        let cert = free_norm(&m3(), &FreeElement::dirac(1)).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-12);
        let diff = FreeElement::from_pairs([(1, 1.0), (2, -1.0)]);
        assert!((free_norm(&m3(), &diff).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_of_two_diracs() {
        let sum = FreeElement::from_pairs([(1, 1.0), (2, 1.0)]);
        let cert = free_norm(&m3(), &sum).unwrap();
        assert!((cert.value - 3.0).abs() < 1e-12);
        assert_eq!(cert.potential.values, vec![0.0, 1.0, 2.0]);
        assert!(cert.gap <= 1e-12);
    }

    #[test]
    fn zero_element() {
        let cert = free_norm(&m3(), &FreeElement::zero()).unwrap();
        assert_eq!(cert.value, 0.0);
        assert!(cert.plan.flows.is_empty());
    }

    #[test]
    fn base_coefficient_flagged() {
        let e = FreeElement::from_pairs([(0, 5.0), (1, 1.0)]);
        let cert = free_norm(&m3(), &e).unwrap();
        assert!(cert.base_coefficient_dropped);
        assert!((cert.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_foreign_support() {
        assert!(free_norm(&m3(), &FreeElement::dirac(7)).is_err());
    }

    #[test]
    fn verification_catches_tampering() {
        let sum = FreeElement::from_pairs([(1, 1.0), (2, 1.0)]);
        let mut cert = free_norm(&m3(), &sum).unwrap();
        cert.potential.values[2] = 2.5;
        assert!(verify_certificate(&m3(), &sum, &cert).is_err());
        let mut cert = free_norm(&m3(), &sum).unwrap();
        cert.plan.flows.pop();
        assert!(verify_certificate(&m3(), &sum, &cert).is_err());
    }

    #[test]
    fn integer_potential_on_m3() {
        let sum = FreeElement::from_pairs([(1, rat(1, 1)), (2, rat(1, 1))]);
        let pot = integer_potential(&m3(), &sum).unwrap();
        assert_eq!(pot.values, vec![0, 1, 2]);
        assert_eq!(pot.norm, rat(3, 1));

        let pot = integer_potential(&m3(), &RationalElement::dirac(2)).unwrap();
        assert_eq!(pot.values[2], 2);
        assert_eq!(pot.norm, rat(2, 1));

        let pot = integer_potential(&m3(), &RationalElement::zero()).unwrap();
        assert_eq!(pot.norm, rat(0, 1));
        assert_eq!(pot.values[0], 0);
    }

    #[test]
    fn integer_potential_requires_integer_metric() {
        let space = FiniteMetricSpace::from_matrix(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            integer_potential(&space, &RationalElement::dirac(1)),
            Err(Error::RequiresIntegerMetric)
        ));
    }

    #[test]
    fn threshold_rounding_of_fractional_optimum() {
        // μ = δ(y) − δ(x) has norm 1; f = (0, 1/2, 3/2) is optimal but fractional
        let element = FreeElement::from_pairs([(2, rat(1, 1)), (1, rat(-1, 1))]);
        let fractional = vec![rat(0, 1), rat(1, 2), rat(3, 2)];
        let rounded = threshold_round(&m3(), &element, &fractional, &rat(1, 1)).unwrap();
        assert!(is_int_one_lipschitz(&m3(), &rounded));
        assert_eq!(pair_exact_int(&rounded, &element), rat(1, 1));
    }

    #[test]
    fn exhaustive_search_matches_exact_norm() {
        let element = FreeElement::from_pairs([(1, rat(2, 3)), (2, rat(-1, 5))]);
        let (values, value) = exhaustive_integer_potential(&m3(), &element).unwrap();
        assert_eq!(value, exact_norm(&m3(), &element).unwrap().value);
        assert!(is_int_one_lipschitz(&m3(), &values));
    }

    #[test]
    fn mcshane_examples() {
        let g = mcshane_extend(&m3(), &[0, 1], &[0.0, 1.0], 3.0).unwrap();
        assert_eq!(g.values, vec![0.0, 1.0, 4.0]);
        let id = mcshane_extend(&m3(), &[0, 1, 2], &[0.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(id.values, vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            mcshane_extend(&m3(), &[0, 1], &[0.0, 5.0], 3.0),
            Err(Error::NotLipschitz { x: 0, y: 1, .. })
        ));
        assert_eq!(mcshane_extend_int(&m3(), &[0, 1], &[0, 1], 3).unwrap(), vec![0, 1, 4]);
    }

    #[test]
    fn ell1_sandwich_on_m3() {
        let sum = FreeElement::from_pairs([(1, 1.0), (2, 1.0)]);
        let b = ell1_bounds(&m3(), &sum).unwrap();
        assert_eq!((b.lower, b.upper, b.total_mass), (1.0, 4.0, 2.0));
        assert!(b.within);
        let z = ell1_bounds(&m3(), &FreeElement::zero()).unwrap();
        assert_eq!((z.lower, z.upper, z.total_mass, z.within), (0.0, 0.0, 0.0, true));
    }
}
