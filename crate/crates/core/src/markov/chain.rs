//! Parent-Changing: a continuous-time Markov chain over spanning trees.
//!
//! Every sensor `i` runs a timer with rate `|N(i)|`, the number of neighbours
//! it may move under. The first timer to expire picks its mover, the mover
//! tries one of its candidates uniformly, and the move is kept with
//! probability [`transition_prob`]. The race of exponentials is simulated
//! directly: the winner of the race together with its uniform choice is a
//! uniform draw over all `(mover, candidate)` pairs, and the time to the next
//! event is exponential with the summed rate.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::markov::analytics::transition_prob;
use crate::real::Real;
use crate::schedule::{optimal_qoa, optimal_schedule, subtree_qoa, Schedule, ScheduleError, Slots};
use crate::topology::Topology;
use crate::tree::AggregationTree;

/// How the mover judges a candidate move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Optimal QoA of the whole tree before and after.
    Exact,
    /// Sum of the optimal QoA of the subtrees under the old and new parent.
    Approx1,
    /// Waiting time of the mover (before) and of the new parent (after).
    Approx2,
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Estimator::Exact),
            "approx1" | "approx-1" => Ok(Estimator::Approx1),
            "approx2" | "approx-2" => Ok(Estimator::Approx2),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Exact => "exact",
            Estimator::Approx1 => "approx1",
            Estimator::Approx2 => "approx2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovConfig<R> {
    pub alpha: R,
    pub beta: R,
    /// Timer expirations to simulate.
    pub iterations: usize,
    pub estimator: Estimator,
    pub seed: u64,
}

impl<R: Real> MarkovConfig<R> {
    /// `alpha = 0.2`, `beta = 2`, 50 iterations, Approx-1.
    pub fn standard(seed: u64) -> Self {
        MarkovConfig {
            alpha: R::lit(0.2),
            beta: R::lit(2.0),
            iterations: 50,
            estimator: Estimator::Approx1,
            seed,
        }
    }

    fn check(&self) -> Result<(), MarkovError> {
        if !(self.beta > R::zero()) || !(self.alpha >= R::zero()) {
            return Err(MarkovError::InvalidConfig(format!(
                "need alpha >= 0 and beta > 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Current tree, its optimal schedule, and the chain's clocks and RNG.
#[derive(Debug, Clone)]
pub struct MarkovState {
    pub tree: AggregationTree,
    pub schedule: Schedule,
    /// Timer expirations so far.
    pub clock: u64,
    /// Simulated continuous time.
    pub time: f64,
    rng: ChaCha8Rng,
}

impl PartialEq for MarkovState {
    fn eq(&self, other: &Self) -> bool {
        self.tree == other.tree
            && self.schedule == other.schedule
            && self.clock == other.clock
            && self.time.to_bits() == other.time.to_bits()
            && self.rng == other.rng
    }
}

impl MarkovState {
    pub fn new(
        tree: AggregationTree,
        d: Slots,
        t: &Topology,
        seed: u64,
    ) -> Result<Self, MarkovError> {
        let schedule = optimal_schedule(&tree, d, t)?;
        Ok(MarkovState {
            tree,
            schedule,
            clock: 0,
            time: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn phi(&self) -> u32 {
        self.schedule.phi
    }
}

/// One timer expiration that led to a tentative move.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord<R> {
    pub step: u64,
    pub mover: usize,
    pub old_parent: usize,
    pub new_parent: usize,
    pub phi_prev_est: R,
    pub phi_next_est: R,
    pub accept_prob: R,
    pub accepted: bool,
    /// Exact optimal QoA of the tree after the step.
    pub phi_exact: u32,
    /// `sum_i |N(i)|` in the tree the step started from.
    pub total_rate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepEvent<R> {
    Transition(TransitionRecord<R>),
    /// No sensor had a candidate parent; only the clock moved.
    Frozen {
        step: u64,
        phi_exact: u32,
    },
}

impl<R> StepEvent<R> {
    pub fn phi_exact(&self) -> u32 {
        match self {
            StepEvent::Transition(r) => r.phi_exact,
            StepEvent::Frozen { phi_exact, .. } => *phi_exact,
        }
    }
}

/// Pre/post-order stamps for O(1) subtree membership.
struct SubtreeIndex {
    tin: Vec<usize>,
    tout: Vec<usize>,
}

impl SubtreeIndex {
    fn new(tree: &AggregationTree) -> Self {
        let ch = tree.children();
        let n = ch.len();
        let mut tin = vec![0; n];
        let mut tout = vec![0; n];
        let mut timer = 0;
        let mut stack = vec![(tree.sink(), false)];
        while let Some((u, leaving)) = stack.pop() {
            if leaving {
                tout[u] = timer;
                continue;
            }
            tin[u] = timer;
            timer += 1;
            stack.push((u, true));
            for &c in ch[u].iter().rev() {
                stack.push((c, false));
            }
        }
        SubtreeIndex { tin, tout }
    }

    /// `j` is in the subtree of `i` (inclusive).
    fn contains(&self, i: usize, j: usize) -> bool {
        self.tin[i] <= self.tin[j] && self.tin[j] < self.tout[i]
    }
}

fn candidates_with(state: &MarkovState, idx: &SubtreeIndex, i: usize, t: &Topology) -> Vec<usize> {
    let wi = state.schedule.effective_waiting(i);
    let parent = state.tree.parent(i);
    t.neighbors(i)
        .iter()
        .copied()
        .filter(|&j| {
            j != parent && state.schedule.effective_waiting(j) >= wi && !idx.contains(i, j)
        })
        .collect()
}

/// `N(i)`: neighbours whose waiting time is at least `W_i`, other than the
/// current parent and nodes below `i`. Non-participants count as waiting 0
/// and the sink as `D`.
pub fn candidate_parents(state: &MarkovState, i: usize, t: &Topology) -> Vec<usize> {
    let idx = SubtreeIndex::new(&state.tree);
    candidates_with(state, &idx, i, t)
}

/// Estimates `(phi_prev, phi_next)` for moving `i` from `old_parent` to
/// `new_parent`, where `candidate` is the tree after the move.
pub fn estimate_phi<R: Real>(
    state: &MarkovState,
    candidate: &AggregationTree,
    i: usize,
    old_parent: usize,
    new_parent: usize,
    method: Estimator,
    t: &Topology,
) -> (R, R) {
    let d = state.schedule.deadline;
    match method {
        Estimator::Exact => {
            let next = optimal_qoa(candidate, d, t).expect("deadline validated on construction");
            (
                R::from_count(state.schedule.phi as usize),
                R::from_count(next as usize),
            )
        }
        Estimator::Approx1 => {
            let b_old = state.schedule.effective_waiting(old_parent);
            let b_new = state.schedule.effective_waiting(new_parent);
            let prev = subtree_qoa(&state.tree, t, old_parent, b_old)
                + subtree_qoa(&state.tree, t, new_parent, b_new);
            let next = subtree_qoa(candidate, t, old_parent, b_old)
                + subtree_qoa(candidate, t, new_parent, b_new);
            (R::from_count(prev as usize), R::from_count(next as usize))
        }
        Estimator::Approx2 => {
            let prev = state.schedule.effective_waiting(i);
            let next = state.schedule.effective_waiting(new_parent);
            (R::from_count(prev as usize), R::from_count(next as usize))
        }
    }
}

/// One timer expiration.
pub fn step<R: Real>(
    state: &mut MarkovState,
    config: &MarkovConfig<R>,
    t: &Topology,
) -> StepEvent<R> {
    let step_no = state.clock;
    state.clock += 1;
    let idx = SubtreeIndex::new(&state.tree);
    let cands: Vec<Vec<usize>> = (0..t.num_sensors())
        .map(|i| candidates_with(state, &idx, i, t))
        .collect();
    let total: usize = cands.iter().map(Vec::len).sum();
    if total == 0 {
        return StepEvent::Frozen {
            step: step_no,
            phi_exact: state.schedule.phi,
        };
    }
    let u: f64 = state.rng.gen();
    state.time += -(1.0 - u).ln() / total as f64;

    let mut k = state.rng.gen_range(0..total);
    let mut mover = 0;
    while k >= cands[mover].len() {
        k -= cands[mover].len();
        mover += 1;
    }
    let new_parent = cands[mover][k];
    let old_parent = state.tree.parent(mover);
    let candidate = state
        .tree
        .reparent(mover, new_parent, t)
        .expect("candidates exclude descendants");

    let (phi_prev, phi_next) = estimate_phi::<R>(
        state,
        &candidate,
        mover,
        old_parent,
        new_parent,
        config.estimator,
        t,
    );
    let q = transition_prob(phi_prev, phi_next, config.alpha, config.beta);
    let draw: f64 = state.rng.gen();
    let accepted = R::lit(draw) < q;
    if accepted {
        state.schedule = optimal_schedule(&candidate, state.schedule.deadline, t)
            .expect("deadline validated on construction");
        state.tree = candidate;
    }
    StepEvent::Transition(TransitionRecord {
        step: step_no,
        mover,
        old_parent,
        new_parent,
        phi_prev_est: phi_prev,
        phi_next_est: phi_next,
        accept_prob: q,
        accepted,
        phi_exact: state.schedule.phi,
        total_rate: total,
    })
}

/// Outcome of a full chain run.
#[derive(Debug, Clone)]
pub struct Trajectory<R> {
    pub events: Vec<StepEvent<R>>,
    pub initial_phi: u32,
    /// Highest exact QoA seen along the way, and the first tree reaching it.
    pub best_phi: u32,
    pub best_tree: AggregationTree,
    pub final_state: MarkovState,
}

/// Runs exactly `config.iterations` timer expirations from `initial`.
pub fn run<R: Real>(
    config: &MarkovConfig<R>,
    t: &Topology,
    d: Slots,
    initial: AggregationTree,
) -> Result<Trajectory<R>, MarkovError> {
    config.check()?;
    let mut state = MarkovState::new(initial, d, t, config.seed)?;
    let initial_phi = state.phi();
    let mut best_phi = initial_phi;
    let mut best_tree = state.tree.clone();
    let mut events = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let ev = step(&mut state, config, t);
        if ev.phi_exact() > best_phi {
            best_phi = ev.phi_exact();
            best_tree = state.tree.clone();
        }
        events.push(ev);
    }
    Ok(Trajectory {
        events,
        initial_phi,
        best_phi,
        best_tree,
        final_state: state,
    })
}

/// Trajectory CSV: `step,mover,old_parent,new_parent,phi_prev_est,
/// phi_next_est,accept_prob,accepted,phi_exact`. Frozen steps leave the move
/// columns empty. The sink is written as `S`.
pub fn write_trajectory_csv<R: Real>(
    events: &[StepEvent<R>],
    sink: usize,
    out: impl Write,
) -> csv::Result<()> {
    let node = |n: usize| {
        if n == sink {
            "S".to_string()
        } else {
            n.to_string()
        }
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "mover",
        "old_parent",
        "new_parent",
        "phi_prev_est",
        "phi_next_est",
        "accept_prob",
        "accepted",
        "phi_exact",
    ])?;
    for ev in events {
        match ev {
            StepEvent::Transition(r) => w.write_record([
                r.step.to_string(),
                node(r.mover),
                node(r.old_parent),
                node(r.new_parent),
                r.phi_prev_est.to_string(),
                r.phi_next_est.to_string(),
                format!("{:.6}", r.accept_prob),
                r.accepted.to_string(),
                r.phi_exact.to_string(),
            ])?,
            StepEvent::Frozen { step, phi_exact } => w.write_record([
                step.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                phi_exact.to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}
