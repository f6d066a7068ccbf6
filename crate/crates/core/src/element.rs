//! Finitely supported elements of the free space and Lipschitz functions
//! vanishing at the base point.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

/// `Σ α_x δ(x)` with finite support. The base point never carries a
/// coefficient since `δ(0) = 0`; constructors drop it and raise
/// `dropped_base`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeElement<S = f64> {
    coeffs: BTreeMap<usize, S>,
    dropped_base: bool,
}

pub type RationalElement = FreeElement<BigRational>;

impl<S: Scalar> Default for FreeElement<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> FreeElement<S> {
    pub fn zero() -> Self {
        FreeElement {
            coeffs: BTreeMap::new(),
            dropped_base: false,
        }
    }

    /// Coefficients are summed per point; zero sums are removed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, S)>) -> Self {
        let mut element = Self::zero();
        for (x, a) in pairs {
            element.add_at(x, a);
        }
        element
    }

    /// `δ(x)`.
    pub fn dirac(x: usize) -> Self {
        Self::from_pairs([(x, S::one())])
    }

    pub fn add_at(&mut self, x: usize, a: S) {
        if x == 0 {
            self.dropped_base = true;
            return;
        }
        let entry = self.coeffs.entry(x).or_insert_with(S::zero);
        *entry = entry.clone() + a;
        if entry.is_zero() {
            self.coeffs.remove(&x);
        }
    }

    pub fn coeff(&self, x: usize) -> S {
        self.coeffs.get(&x).cloned().unwrap_or_else(S::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &S)> + '_ {
        self.coeffs.iter().map(|(&x, a)| (x, a))
    }

    pub fn support(&self) -> Vec<usize> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dropped_base(&self) -> bool {
        self.dropped_base
    }

    /// `Σ |α_x|`.
    pub fn total_mass(&self) -> S {
        self.coeffs.values().fold(S::zero(), |acc, a| acc + a.abs())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    /// Coefficient truncation to `subset`.
    pub fn restricted_to(&self, keep: impl Fn(usize) -> bool) -> Self {
        FreeElement {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&x, _)| keep(x))
                .map(|(&x, a)| (x, a.clone()))
                .collect(),
            dropped_base: false,
        }
    }

    pub fn scaled(&self, t: S) -> Self {
        Self::from_pairs(self.coeffs.iter().map(|(&x, a)| (x, a.clone() * t.clone())))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, a) in other.iter() {
            out.add_at(x, a.clone());
        }
        out.dropped_base = self.dropped_base || other.dropped_base;
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, a) in other.iter() {
            out.add_at(x, -a.clone());
        }
        out
    }

    /// Renumbers the support through `map` (original index → new index).
    pub fn reindexed(&self, map: impl Fn(usize) -> Option<usize>) -> Result<Self> {
        let mut out = Self::zero();
        for (x, a) in self.iter() {
            let y = map(x).ok_or(Error::IndexOutOfRange(x))?;
            out.add_at(y, a.clone());
        }
        Ok(out)
    }

    pub fn check_on(&self, space: &FiniteMetricSpace) -> Result<()> {
        match self.max_index() {
            Some(x) if x >= space.len() => Err(Error::IndexOutOfRange(x)),
            _ => Ok(()),
        }
    }
}

impl FreeElement<f64> {
    pub fn to_rational(&self) -> RationalElement {
        FreeElement::from_pairs(self.iter().map(|(x, &a)| (x, BigRational::from_f64(a))))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.values().all(|a| a.is_finite())
    }
}

impl FreeElement<BigRational> {
    pub fn to_f64(&self) -> FreeElement<f64> {
        FreeElement::from_pairs(self.iter().map(|(x, a)| (x, a.to_f64())))
    }
}

/// Values of `f` on every point with `f(0) = 0`, together with `L(f)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzFunction {
    pub values: Vec<f64>,
    pub lip_constant: f64,
}

impl LipschitzFunction {
    pub fn new(space: &FiniteMetricSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::MismatchedSpace(values.len(), space.len()));
        }
        if values[0] != 0.0 {
            return Err(Error::NonzeroAtBase);
        }
        let lip_constant = lip_constant(space, &values)?;
        Ok(LipschitzFunction {
            values,
            lip_constant,
        })
    }

    pub fn zero(space: &FiniteMetricSpace) -> Self {
        LipschitzFunction {
            values: vec![0.0; space.len()],
            lip_constant: 0.0,
        }
    }

    /// `f / max(1, L(f))`, which lies in the dual unit ball.
    pub fn normalized(&self) -> Self {
        let factor = self.lip_constant.max(1.0);
        LipschitzFunction {
            values: self.values.iter().map(|v| v / factor).collect(),
            lip_constant: self.lip_constant / factor,
        }
    }

    pub fn is_integer_valued(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0)
    }
}

/// `max |f(x) − f(y)| / d(x, y)` over distinct pairs.
pub fn lip_constant(space: &FiniteMetricSpace, values: &[f64]) -> Result<f64> {
    if values.len() != space.len() {
        return Err(Error::MismatchedSpace(values.len(), space.len()));
    }
    let n = space.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max((values[i] - values[j]).abs() / space.d(i, j));
        }
    }
    Ok(best)
}

/// Exact check that integer values are `bound`-Lipschitz for an integer
/// metric; returns the first offending pair.
pub fn find_int_lipschitz_violation(
    space: &FiniteMetricSpace,
    points: &[usize],
    values: &dyn Fn(usize) -> i64,
    bound: i64,
) -> Result<Option<(usize, usize)>> {
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    for (a, &x) in points.iter().enumerate() {
        for &y in &points[a + 1..] {
            let d = space.int_d(x, y).expect("integer metric");
            if (values(x) - values(y)).abs() > bound * d {
                return Ok(Some((x, y)));
            }
        }
    }
    Ok(None)
}

/// `⟨f, μ⟩ = Σ α_x f(x)`.
pub fn pairing(f: &LipschitzFunction, element: &FreeElement) -> Result<f64> {
    match element.max_index() {
        Some(x) if x >= f.values.len() => Err(Error::MismatchedSpace(x + 1, f.values.len())),
        _ => Ok(element.iter().map(|(x, a)| a * f.values[x]).sum()),
    }
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

    #[test]
    fn base_coefficient_dropped() {
        let e = FreeElement::from_pairs([(0, 2.0), (1, 1.0)]);
        assert!(e.dropped_base());
        assert_eq!(e.support(), vec![1]);
        let z = FreeElement::from_pairs([(1, 1.0), (1, -1.0)]);
        assert!(z.is_zero());
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(lip_constant(&m3(), &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(lip_constant(&m3(), &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(lip_constant(&m3(), &[0.0, 3.0, 3.0]).unwrap(), 3.0);
        assert!(LipschitzFunction::new(&m3(), vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pairings() {
        let f = LipschitzFunction::new(&m3(), vec![0.0, 1.0, 2.0]).unwrap();
        let sum = FreeElement::from_pairs([(1, 1.0), (2, 1.0)]);
        let diff = FreeElement::from_pairs([(1, 1.0), (2, -1.0)]);
        assert_eq!(pairing(&f, &sum).unwrap(), 3.0);
        assert_eq!(pairing(&f, &FreeElement::zero()).unwrap(), 0.0);
        assert_eq!(pairing(&f, &diff).unwrap(), -1.0);
        assert!(pairing(&f, &FreeElement::dirac(5)).is_err());
    }

    #[test]
    fn normalization_enters_unit_ball() {
        let f = LipschitzFunction::new(&m3(), vec![0.0, 3.0, 3.0]).unwrap();
        let g = f.normalized();
        assert_eq!(g.values, vec![0.0, 1.0, 1.0]);
        assert_eq!(g.lip_constant, 1.0);
    }
}
