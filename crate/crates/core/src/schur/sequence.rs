use crate::element::{pairing, FreeElement, LipschitzFunction};
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::transport::free_norm;

/// Exhaustive subsequence enumeration refuses longer sequences.
pub const WCA_CAP: usize = 16;

/// A finite prefix of a bounded sequence in the free space.
#[derive(Clone, Debug)]
pub struct ElementSequence {
    space: FiniteMetricSpace,
    items: Vec<FreeElement>,
    bound: f64,
}

impl ElementSequence {
    pub fn new(space: FiniteMetricSpace, items: Vec<FreeElement>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidParameter("sequence must be non-empty".into()));
        }
        let mut bound = 0.0f64;
        for item in &items {
            item.check_on(&space)?;
            bound = bound.max(free_norm(&space, item)?.value);
        }
        Ok(ElementSequence { space, items, bound })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn items(&self) -> &[FreeElement] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `max ‖μ_n‖`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `‖μ_k − μ_l‖` for all pairs.
    pub fn difference_norms(&self) -> Result<Vec<Vec<f64>>> {
        let len = self.len();
        let mut table = vec![vec![0.0; len]; len];
        for k in 0..len {
            for l in k + 1..len {
                let value = free_norm(&self.space, &self.items[k].minus(&self.items[l]))?.value;
                table[k][l] = value;
                table[l][k] = value;
            }
        }
        Ok(table)
    }
}

/// Minimum over tail starts (all but the last position) of the tail
/// diameter, for the subsequence `indices` of a sequence with pairwise
/// distances `table`.
pub(crate) fn tail_oscillation(indices: &[usize], table: &[Vec<f64>]) -> f64 {
    let k = indices.len();
    if k < 2 {
        return 0.0;
    }
    let mut diameter = 0.0f64;
    let mut best = f64::INFINITY;
    for t in (0..k - 1).rev() {
        for &l in &indices[t + 1..] {
            diameter = diameter.max(table[indices[t]][l]);
        }
        best = best.min(diameter);
    }
    best
}

/// Finite proxy of `inf_n diam{μ_k : k ≥ n}`.
pub fn osc_ca(seq: &ElementSequence) -> Result<f64> {
    let table = seq.difference_norms()?;
    let all: Vec<usize> = (0..seq.len()).collect();
    Ok(tail_oscillation(&all, &table))
}

/// The same proxy for a scalar sequence.
pub fn scalar_oscillation(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return 0.0;
    }
    let (mut lo, mut hi) = (values[k - 1], values[k - 1]);
    let mut best = f64::INFINITY;
    for t in (0..k - 1).rev() {
        lo = lo.min(values[t]);
        hi = hi.max(values[t]);
        best = best.min(hi - lo);
    }
    best
}

/// Certified bounds on the dual oscillation: the lower bound evaluates each
/// candidate (scaled into the dual unit ball), the upper bound is `osc_ca`.
pub fn de_bounds(seq: &ElementSequence, candidates: &[LipschitzFunction]) -> Result<(f64, f64)> {
    let upper = osc_ca(seq)?;
    let mut lower = 0.0f64;
    for candidate in candidates {
        let f = candidate.normalized();
        let values = seq
            .items
            .iter()
            .map(|item| pairing(&f, item))
            .collect::<Result<Vec<_>>>()?;
        lower = lower.max(scalar_oscillation(&values));
    }
    Ok((lower, upper))
}

/// Minimum of `osc_ca` over every subsequence of length at least `min_len`.
pub fn wca_bruteforce(seq: &ElementSequence, min_len: usize) -> Result<f64> {
    if seq.len() > WCA_CAP {
        return Err(Error::TooLarge {
            what: "subsequence enumeration (desk-scale cap)",
            size: seq.len(),
            cap: WCA_CAP,
        });
    }
    if min_len < 2 || min_len > seq.len() {
        return Err(Error::InvalidParameter(format!(
            "min_len must lie in [2, {}], got {min_len}",
            seq.len()
        )));
    }
    let table = seq.difference_norms()?;
    let len = seq.len();
    let mut best = f64::INFINITY;
    let mut indices = Vec::with_capacity(len);
    for mask in 1u32..(1u32 << len) {
        if (mask.count_ones() as usize) < min_len {
            continue;
        }
        indices.clear();
        indices.extend((0..len).filter(|&i| mask & (1 << i) != 0));
        best = best.min(tail_oscillation(&indices, &table));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m3() -> FiniteMetricSpace {
        FiniteMetricSpace::from_matrix(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn seq(items: Vec<FreeElement>) -> ElementSequence {
        ElementSequence::new(m3(), items).unwrap()
    }

    fn alternating(len: usize) -> ElementSequence {
        seq((0..len).map(|i| FreeElement::dirac(1 + i % 2)).collect())
    }

    #[test]
    fn oscillation_examples() {
        let constant = seq(vec![FreeElement::dirac(1); 5]);
        assert_eq!(osc_ca(&constant).unwrap(), 0.0);
        assert!((osc_ca(&alternating(6)).unwrap() - 1.0).abs() < 1e-12);
        let settles = seq(vec![
            FreeElement::dirac(1),
            FreeElement::dirac(2),
            FreeElement::dirac(2),
            FreeElement::dirac(2),
        ]);
        assert_eq!(osc_ca(&settles).unwrap(), 0.0);
        assert_eq!(seq(vec![FreeElement::dirac(2)]).bound(), 2.0);
    }

    #[test]
    fn de_bound_examples() {
        let alt = alternating(6);
        // distance to y, normalized: f(x) = 1, f(y) = 0
        let f = LipschitzFunction::new(&m3(), vec![0.0, 1.0, 0.0]).unwrap();
        let (lo, hi) = de_bounds(&alt, &[f]).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);

        let constant = seq(vec![FreeElement::dirac(1); 3]);
        assert_eq!(de_bounds(&constant, &[]).unwrap(), (0.0, 0.0));
        assert_eq!(de_bounds(&alt, &[]).unwrap().0, 0.0);
    }

    #[test]
    fn wca_examples() {
        let a = FreeElement::dirac(1);
        let b = FreeElement::dirac(2);
        let items: Vec<_> = (0..9).map(|i| if i % 3 == 2 { b.clone() } else { a.clone() }).collect();
        assert_eq!(wca_bruteforce(&seq(items), 3).unwrap(), 0.0);
        let alt = alternating(6);
        assert!((wca_bruteforce(&alt, 6).unwrap() - 1.0).abs() < 1e-12);
        assert!(wca_bruteforce(&alt, 1).is_err());
        let long = seq(vec![FreeElement::dirac(1); 17]);
        assert!(matches!(wca_bruteforce(&long, 2), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn scalar_oscillation_proxy() {
        assert_eq!(scalar_oscillation(&[3.0]), 0.0);
        assert_eq!(scalar_oscillation(&[0.0, 5.0, 1.0, 2.0]), 1.0);
    }
}
