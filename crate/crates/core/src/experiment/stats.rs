//! Means and Student-t confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::real::Real;

/// Two-sided Student-t quantile `t_{(1+level)/2, dof}`.
pub fn t_quantile(level: f64, dof: usize) -> f64 {
    assert!(dof >= 1 && level > 0.0 && level < 1.0);
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0)
}

/// Sample mean and the half-width of its 95% Student-t interval.
///
/// A single observation has half-width 0. Values are summed in sorted order,
/// so the result does not depend on the order they arrive in.
pub fn mean_ci95<R: Real>(values: &[R]) -> Option<(R, R)> {
    if values.is_empty() {
        return None;
    }
    let mut xs = values.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("values must not be NaN"));
    let n = xs.len();
    let count = R::from_count(n);
    let mean = xs.iter().fold(R::zero(), |acc, &x| acc + x) / count;
    if n == 1 {
        return Some((mean, R::zero()));
    }
    let ss = xs
        .iter()
        .fold(R::zero(), |acc, &x| acc + (x - mean) * (x - mean));
    let sd = (ss / R::from_count(n - 1)).sqrt();
    let half = R::lit(t_quantile(0.95, n - 1)) * sd / count.sqrt();
    Some((mean, half))
}
