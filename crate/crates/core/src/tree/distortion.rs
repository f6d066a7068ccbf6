use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::metric::{check_ultrametric, FiniteMetricSpace};
use crate::scalar::{rational_from_decimal, rational_from_int};

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionPair {
    /// Sample indices of the chosen points in the first and last cell.
    pub x: usize,
    pub y: usize,
    pub ratio: f64,
    /// `max d(z_j, z_{j+1})` over consecutive cell representatives.
    pub chain_max: f64,
    /// `2 / (n − 2)`.
    pub bound: f64,
    /// Lowest-indexed sample point in each cell.
    pub representatives: Vec<usize>,
}

/// For a sample of reals carrying an ultrametric `d ≤ |·|`, picks points
/// `x` in the first and `y` in the last of `n` equal cells of `[a, b]`
/// with `d(x, y) / |x − y| ≤ 2 / (n − 2)`.
///
/// Cells are half-open `[t_{j−1}, t_j)`, the last one closed.
pub fn distortion_pair(
    positions: &[f64],
    metric: &FiniteMetricSpace,
    n: usize,
    a: f64,
    b: f64,
) -> Result<DistortionPair> {
    if positions.len() != metric.len() {
        return Err(Error::MismatchedSpace(positions.len(), metric.len()));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 cells, got {n}")));
    }
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    let tol = metric.tolerance();
    let ultra = check_ultrametric(metric)?;
    if let Some([x, y, z]) = ultra.witness {
        return Err(Error::Hypothesis(format!(
            "d is not ultrametric on ({x}, {y}, {z}), excess {}",
            ultra.slack
        )));
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let gap = (positions[i] - positions[j]).abs();
            if metric.d(i, j) > gap + tol {
                return Err(Error::Hypothesis(format!(
                    "d({i}, {j}) = {} exceeds |x − y| = {gap}",
                    metric.d(i, j)
                )));
            }
        }
    }

    let (qa, qb) = (rational_from_decimal(a)?, rational_from_decimal(b)?);
    let width = (&qb - &qa) / rational_from_int(n as i64);
    let mut representatives: Vec<Option<usize>> = vec![None; n];
    for (i, &p) in positions.iter().enumerate() {
        let p = rational_from_decimal(p)?;
        if p < qa || p > qb {
            continue;
        }
        let offset = ((&p - &qa) / &width).floor().to_integer();
        let cell = offset.to_usize().unwrap_or(n).min(n - 1);
        if representatives[cell].is_none() {
            representatives[cell] = Some(i);
        }
    }
    let representatives: Vec<usize> = representatives
        .iter()
        .enumerate()
        .map(|(j, r)| r.ok_or(Error::EmptyCell(j + 1)))
        .collect::<Result<_>>()?;

    let (x, y) = (representatives[0], representatives[n - 1]);
    let ratio = metric.d(x, y) / (positions[x] - positions[y]).abs();
    let chain_max = representatives
        .windows(2)
        .map(|w| metric.d(w[0], w[1]))
        .fold(0.0, f64::max);
    let bound = 2.0 / (n as f64 - 2.0);
    let cell_bound = 2.0 * (b - a) / n as f64;
    if metric.d(x, y) > chain_max + tol || chain_max > cell_bound + tol || ratio > bound + tol {
        return Err(Error::CertificateFailed(format!(
            "chain bound failed: d(x, y) = {}, chain max {chain_max}, cell bound {cell_bound}, ratio {ratio}",
            metric.d(x, y)
        )));
    }
    Ok(DistortionPair {
        x,
        y,
        ratio,
        chain_max,
        bound,
        representatives,
    })
}

/// Exact cell index (1-based) of a position, if it lies in `[a, b]`.
pub fn cell_of(position: f64, n: usize, a: f64, b: f64) -> Result<Option<usize>> {
    let (p, qa, qb) = (rational_from_decimal(position)?, rational_from_decimal(a)?, rational_from_decimal(b)?);
    if p < qa || p > qb || n == 0 {
        return Ok(None);
    }
    let width: BigRational = (&qb - &qa) / rational_from_int(n as i64);
    let offset = ((&p - &qa) / width).floor().to_integer();
    Ok(Some(offset.to_usize().unwrap_or(n).min(n - 1) + 1))
}
