use crate::error::Result;
use crate::metric::FiniteMetricSpace;

/// Largest ultrametric below `d`: the minimax edge weight over paths
/// (single-linkage distances).
pub fn subdominant_ultrametric(space: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    let n = space.len();
    let mut u = space.rows();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = u[i][k].max(u[k][j]);
                if through < u[i][j] {
                    u[i][j] = through;
                }
            }
        }
    }
    FiniteMetricSpace::new(space.labels().to_vec(), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::check_ultrametric;

    #[test]
    fn equally_spaced_reals_collapse_to_the_gap() {
        let space = FiniteMetricSpace::from_fn(11, |i, j| (i as f64 - j as f64).abs() / 10.0).unwrap();
        let sub = subdominant_ultrametric(&space).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                assert_eq!(sub.d(i, j), if i == j { 0.0 } else { 0.1 });
            }
        }
        assert!(check_ultrametric(&sub).unwrap().holds);
    }

    #[test]
    fn two_points_unchanged() {
        let space = FiniteMetricSpace::from_matrix(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(subdominant_ultrametric(&space).unwrap(), space);
    }
}
