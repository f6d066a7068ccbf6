use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::rational_from_decimal;

/// Ordered disjoint closed intervals with exact endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(BigRational, BigRational)>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching intervals.
    pub fn new(mut intervals: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if let Some((l, r)) = intervals.iter().find(|(l, r)| l > r) {
            return Err(Error::Structural(format!("interval [{l}, {r}] has l > r")));
        }
        intervals.sort();
        let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(intervals.len());
        for (l, r) in intervals {
            match merged.last_mut() {
                Some(last) if l <= last.1 => {
                    if r > last.1 {
                        last.1 = r;
                    }
                }
                _ => merged.push((l, r)),
            }
        }
        Ok(IntervalUnion { intervals: merged })
    }

    pub fn from_f64(intervals: &[(f64, f64)]) -> Result<Self> {
        let converted = intervals
            .iter()
            .map(|&(l, r)| Ok((rational_from_decimal(l)?, rational_from_decimal(r)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(converted)
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn measure(&self) -> BigRational {
        self.intervals.iter().fold(BigRational::zero(), |acc, (l, r)| acc + (r - l))
    }

    /// `λ(K ∩ [a, b])`.
    pub fn measure_within(&self, a: &BigRational, b: &BigRational) -> BigRational {
        self.intervals.iter().fold(BigRational::zero(), |acc, (l, r)| {
            let lo = if l > a { l } else { a };
            let hi = if r < b { r } else { b };
            if hi > lo {
                acc + (hi - lo)
            } else {
                acc
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityWindow {
    pub a: BigRational,
    pub b: BigRational,
    pub density: BigRational,
    /// Gaps removed before the window appeared.
    pub removed_gaps: usize,
}

/// Removes complementary gaps longest first (leftmost on ties) until some
/// component `[a, b]` satisfies `λ(K ∩ [a, b]) > (1 − ε)(b − a)`; returns
/// the leftmost such component.
pub fn density_interval(k: &IntervalUnion, epsilon: &BigRational) -> Result<DensityWindow> {
    if !epsilon.is_positive() || *epsilon >= BigRational::one() {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    if !k.measure().is_positive() {
        return Err(Error::ZeroMeasure);
    }
    let parts = k.intervals();
    let threshold = BigRational::one() - epsilon;
    // cut[i]: the gap between parts i and i + 1 has been removed
    let mut cut = vec![false; parts.len().saturating_sub(1)];
    let mut gaps: Vec<usize> = (0..cut.len()).collect();
    gaps.sort_by(|&i, &j| {
        let gi = &parts[i + 1].0 - &parts[i].1;
        let gj = &parts[j + 1].0 - &parts[j].1;
        gj.cmp(&gi).then(i.cmp(&j))
    });
    for removed in 0..=gaps.len() {
        if removed > 0 {
            cut[gaps[removed - 1]] = true;
        }
        let mut start = 0;
        for end in 0..parts.len() {
            if end + 1 < parts.len() && !cut[end] {
                continue;
            }
            let (a, b) = (&parts[start].0, &parts[end].1);
            let width = b - a;
            if width.is_positive() {
                let measure = k.measure_within(a, b);
                if measure > &threshold * &width {
                    return Ok(DensityWindow {
                        a: a.clone(),
                        b: b.clone(),
                        density: measure / width,
                        removed_gaps: removed,
                    });
                }
            }
            start = end + 1;
        }
    }
    Err(Error::ZeroMeasure)
}
