//! Closed forms of the log-sum-exp relaxation: the softmax stationary
//! distribution over trees, its optimal value and gap, the transition rate
//! between neighbouring trees, and the perturbation diagnostics.
//!
//! Everything here is generic over [`Real`].

use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("distributions have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
}

/// Logistic function, evaluated on the side that cannot overflow.
fn sigmoid<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

/// Rate of moving from a tree with QoA `phi_prev` to one with `phi_next`:
/// `exp(-alpha) * exp(beta*next) / (exp(beta*prev) + exp(beta*next))`.
pub fn transition_prob<R: Real>(phi_prev: R, phi_next: R, alpha: R, beta: R) -> R {
    (-alpha).exp() * sigmoid(beta * (phi_next - phi_prev))
}

/// Softmax of `beta * phi`: the target share of time spent in each tree.
pub fn stationary_distribution<R: Real>(phis: &[R], beta: R) -> Vec<R> {
    assert!(!phis.is_empty(), "need at least one state");
    let m = phis.iter().copied().fold(R::neg_infinity(), R::max);
    let w: Vec<R> = phis.iter().map(|&p| (beta * (p - m)).exp()).collect();
    let z = w.iter().copied().fold(R::zero(), |a, b| a + b);
    w.into_iter().map(|x| x / z).collect()
}

/// `(1/beta) ln |T|`, the worst-case distance between the relaxed optimum
/// and the true maximum.
pub fn approximation_gap<R: Real>(num_states: usize, beta: R) -> R {
    assert!(num_states >= 1);
    R::from_count(num_states).ln() / beta
}

/// Optimal value of the relaxation, `(1/beta) ln sum exp(beta * phi)`.
///
/// Always lies in `[max phi, max phi + gap]`.
pub fn log_sum_exp_value<R: Real>(phis: &[R], beta: R) -> R {
    assert!(!phis.is_empty(), "need at least one state");
    let m = phis.iter().copied().fold(R::neg_infinity(), R::max);
    let s = phis
        .iter()
        .fold(R::zero(), |acc, &p| acc + (beta * (p - m)).exp());
    m + s.ln() / beta
}

/// Bound on the objective loss caused by QoA estimates that are off by at most
/// `delta_max`: `2 phi_max (1 - exp(-2 beta delta_max))`.
pub fn perturbation_bound<R: Real>(phi_max: R, beta: R, delta_max: R) -> R {
    let two = R::lit(2.0);
    two * phi_max * (R::one() - (-two * beta * delta_max).exp())
}

/// Total-variation distance bound for the same perturbation:
/// `1 - exp(-2 beta delta_max)`.
pub fn perturbation_tv_bound<R: Real>(beta: R, delta_max: R) -> R {
    R::one() - (-R::lit(2.0) * beta * delta_max).exp()
}

/// Half the L1 distance between two distributions.
pub fn tv_distance<R: Real>(p: &[R], q: &[R]) -> Result<R, AnalyticsError> {
    if p.len() != q.len() {
        return Err(AnalyticsError::LengthMismatch(p.len(), q.len()));
    }
    let s = p
        .iter()
        .zip(q)
        .fold(R::zero(), |acc, (&a, &b)| acc + (a - b).abs());
    Ok(s / R::lit(2.0))
}
