//! Exhaustive optimum over all spanning trees rooted at the sink.
//!
//! Trees are grown from the sink one frontier edge at a time. At each step
//! one frontier edge is either taken (its outer endpoint joins the
//! tree) or discarded for the rest of that branch; the two branches partition
//! the remaining trees, so every spanning tree is produced exactly once. A
//! discard is only explored while the graph minus discarded edges stays
//! connected, so no branch dead-ends.

use std::ops::ControlFlow;

use rayon::prelude::*;
use thiserror::Error;

use crate::schedule::{optimal_qoa, Slots};
use crate::topology::Topology;
use crate::tree::{AggregationTree, TreeKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_trees: u64,
    pub max_nodes: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_trees: 5_000_000,
            max_nodes: 15,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("enumeration stopped after {visited} trees (budget exhausted)")]
    BudgetExceeded { visited: u64 },
    #[error("{nodes} sensors exceed the enumeration cap of {cap}")]
    TooManyNodes { nodes: usize, cap: usize },
    #[error("topology is not connected")]
    Disconnected,
    #[error("deadline must be at least 1")]
    InvalidDeadline,
}

/// Calls `visit` once per spanning tree. Returns the number of trees visited.
/// `visit` may stop the stream early by returning `ControlFlow::Break`.
pub fn for_each_spanning_tree(
    t: &Topology,
    budget: EnumerationBudget,
    mut visit: impl FnMut(&AggregationTree) -> ControlFlow<()>,
) -> Result<u64, ExactError> {
    let v = t.num_sensors();
    if v > budget.max_nodes {
        return Err(ExactError::TooManyNodes {
            nodes: v,
            cap: budget.max_nodes,
        });
    }
    if !t.is_connected() {
        return Err(ExactError::Disconnected);
    }
    let sink = t.sink().0;
    let mut g = Grow {
        t,
        in_tree: vec![false; v + 1],
        parent: vec![usize::MAX; v],
        added: 0,
        count: 0,
        budget,
        stopped: false,
        exhausted: false,
        forbidden: vec![false; (v + 1) * (v + 1)],
        scratch: Vec::with_capacity(v + 1),
    };
    g.in_tree[sink] = true;
    let frontier: Vec<(usize, usize)> = t.neighbors(sink).iter().map(|&w| (sink, w)).collect();
    g.grow(frontier, &mut visit);
    if g.exhausted {
        return Err(ExactError::BudgetExceeded { visited: g.count });
    }
    Ok(g.count)
}

struct Grow<'a> {
    t: &'a Topology,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    added: usize,
    count: u64,
    budget: EnumerationBudget,
    stopped: bool,
    exhausted: bool,
    /// Discarded edges, as an `n x n` symmetric matrix.
    forbidden: Vec<bool>,
    scratch: Vec<usize>,
}

impl Grow<'_> {
    fn grow(
        &mut self,
        mut frontier: Vec<(usize, usize)>,
        visit: &mut impl FnMut(&AggregationTree) -> ControlFlow<()>,
    ) {
        if self.stopped {
            return;
        }
        if self.added == self.parent.len() {
            if self.count >= self.budget.max_trees {
                self.exhausted = true;
                self.stopped = true;
                return;
            }
            self.count += 1;
            let tree = AggregationTree::from_parents_unchecked(self.parent.clone());
            if visit(&tree).is_break() {
                self.stopped = true;
            }
            return;
        }
        let Some((u, w)) = frontier.pop() else {
            return;
        };
        // take (u, w)
        let mut next: Vec<(usize, usize)> =
            frontier.iter().copied().filter(|&(_, x)| x != w).collect();
        next.extend(
            self.t
                .neighbors(w)
                .iter()
                .filter(|&&x| !self.in_tree[x])
                .map(|&x| (w, x)),
        );
        self.in_tree[w] = true;
        self.parent[w] = u;
        self.added += 1;
        self.grow(next, visit);
        self.added -= 1;
        self.parent[w] = usize::MAX;
        self.in_tree[w] = false;
        // discard (u, w)
        let n = self.in_tree.len();
        self.forbidden[u * n + w] = true;
        self.forbidden[w * n + u] = true;
        if self.allowed_graph_connected() {
            self.grow(frontier, visit);
        }
        self.forbidden[u * n + w] = false;
        self.forbidden[w * n + u] = false;
    }

    fn allowed_graph_connected(&mut self) -> bool {
        let n = self.in_tree.len();
        let mut seen = vec![false; n];
        self.scratch.clear();
        self.scratch.push(n - 1);
        seen[n - 1] = true;
        let mut reached = 1;
        while let Some(x) = self.scratch.pop() {
            for &y in self.t.neighbors(x) {
                if !seen[y] && !self.forbidden[x * n + y] {
                    seen[y] = true;
                    reached += 1;
                    self.scratch.push(y);
                }
            }
        }
        reached == n
    }
}

/// Collects every spanning tree. Convenience for small graphs.
pub fn enumerate_spanning_trees(
    t: &Topology,
    budget: EnumerationBudget,
) -> Result<Vec<AggregationTree>, ExactError> {
    let mut out = Vec::new();
    for_each_spanning_tree(t, budget, |tree| {
        out.push(tree.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Best tree and its optimal QoA, ties broken by the smallest canonical key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZOptimal {
    pub tree: AggregationTree,
    pub phi: u32,
    pub trees_visited: u64,
}

pub fn z_optimal(
    t: &Topology,
    d: Slots,
    budget: EnumerationBudget,
) -> Result<ZOptimal, ExactError> {
    if d == 0 {
        return Err(ExactError::InvalidDeadline);
    }
    const BATCH: usize = 4096;
    let mut best: Option<(u32, TreeKey, AggregationTree)> = None;
    let mut batch = Vec::with_capacity(BATCH);

    let reduce = |batch: &mut Vec<AggregationTree>,
                  best: &mut Option<(u32, TreeKey, AggregationTree)>| {
        let local = batch
            .par_iter()
            .map(|tree| {
                let phi = optimal_qoa(tree, d, t).expect("deadline checked");
                (phi, tree.canonical_key(), tree)
            })
            .reduce_with(|a, b| if better(&b, &a) { b } else { a });
        if let Some((phi, key, tree)) = local {
            let replace = match best {
                None => true,
                Some((bp, bk, _)) => phi > *bp || (phi == *bp && key < *bk),
            };
            if replace {
                *best = Some((phi, key, tree.clone()));
            }
        }
        batch.clear();
    };

    let visited = for_each_spanning_tree(t, budget, |tree| {
        batch.push(tree.clone());
        if batch.len() == BATCH {
            reduce(&mut batch, &mut best);
        }
        ControlFlow::Continue(())
    })?;
    reduce(&mut batch, &mut best);
    let (phi, _, tree) = best.expect("a connected graph has a spanning tree");
    Ok(ZOptimal {
        tree,
        phi,
        trees_visited: visited,
    })
}

fn better(a: &(u32, TreeKey, &AggregationTree), b: &(u32, TreeKey, &AggregationTree)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}
