//! Initial aggregation trees: FastInitTree, Greedy Incremental Tree, and the
//! synthetic chain / BFS families.

use std::collections::VecDeque;
use std::str::FromStr;

use thiserror::Error;

use crate::schedule::Slots;
use crate::topology::Topology;
use crate::tree::AggregationTree;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InitError {
    #[error("sensor {0} cannot reach the sink")]
    Disconnected(usize),
    #[error("no Hamiltonian path starts at the sink")]
    NotConstructible,
    #[error("deadline must be at least 1")]
    InvalidDeadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitAlgo {
    Fast,
    Git,
    Chain,
    Bfs,
}

impl FromStr for InitAlgo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast" => Ok(InitAlgo::Fast),
            "git" => Ok(InitAlgo::Git),
            "chain" => Ok(InitAlgo::Chain),
            "bfs" => Ok(InitAlgo::Bfs),
            other => Err(format!("unknown init algorithm `{other}`")),
        }
    }
}

pub fn build_initial(t: &Topology, algo: InitAlgo, d: Slots) -> Result<AggregationTree, InitError> {
    match algo {
        InitAlgo::Fast => fast_init_tree(t, d),
        InitAlgo::Git => git_tree(t),
        InitAlgo::Chain => chain_tree(t),
        InitAlgo::Bfs => bfs_tree(t),
    }
}

/// Bookkeeping for Extend-Tree: which nodes already have a parent, and the
/// parent chosen so far.
struct Builder<'a> {
    t: &'a Topology,
    done: Vec<bool>,
    parent: Vec<Option<usize>>,
    /// Number of unassigned neighbours per node, kept in step with `done`.
    power: Vec<usize>,
    child_count: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn new(t: &'a Topology) -> Self {
        let n = t.num_nodes();
        let power = (0..n)
            .map(|i| t.neighbors(i).iter().filter(|&&j| !t.is_sink(j)).count())
            .collect();
        Builder {
            t,
            done: vec![false; n],
            parent: vec![None; t.num_sensors()],
            power,
            child_count: vec![0; n],
        }
    }

    fn mark_done(&mut self, i: usize) {
        if self.done[i] {
            return;
        }
        self.done[i] = true;
        if !self.t.is_sink(i) {
            for &j in self.t.neighbors(i) {
                self.power[j] -= 1;
            }
        }
    }

    fn attach(&mut self, child: usize, parent: usize) {
        self.parent[child] = Some(parent);
        self.child_count[parent] += 1;
        self.mark_done(child);
    }

    /// Extend-Tree on `p` with budget `budget`: adopt the `min(k, budget)`
    /// strongest unassigned neighbours, then recurse into the `i`-th of them
    /// with budget `budget - i` while that stays positive.
    fn extend(&mut self, p: usize, budget: Slots) {
        self.mark_done(p);
        let mut curr: Vec<usize> = self
            .t
            .neighbors(p)
            .iter()
            .copied()
            .filter(|&j| !self.done[j])
            .collect();
        curr.sort_by(|&a, &b| self.power[b].cmp(&self.power[a]).then(a.cmp(&b)));
        curr.truncate(budget as usize);
        // every adopted child is claimed before any recursion so a sibling's
        // subtree cannot steal it
        for &c in &curr {
            self.attach(c, p);
        }
        for (rank, &c) in curr.iter().enumerate() {
            let b = budget - (rank as Slots + 1);
            if b > 0 {
                self.extend(c, b);
            }
        }
    }
}

/// FastInitTree: Extend-Tree from the sink with budget `d`, then every node
/// still without a parent joins the assigned neighbour with the fewest
/// children (ties to the lower id), sweeping in BFS order from the sink.
pub fn fast_init_tree(t: &Topology, d: Slots) -> Result<AggregationTree, InitError> {
    if d == 0 {
        return Err(InitError::InvalidDeadline);
    }
    let sink = t.sink().0;
    let mut b = Builder::new(t);
    b.extend(sink, d);

    let order = t.bfs_order();
    for &u in &order {
        if b.done[u] {
            continue;
        }
        let best = t
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&j| b.done[j])
            .min_by(|&x, &y| b.child_count[x].cmp(&b.child_count[y]).then(x.cmp(&y)));
        match best {
            Some(p) => b.attach(u, p),
            None => return Err(InitError::Disconnected(u)),
        }
    }
    finish(b.parent)
}

fn finish(parent: Vec<Option<usize>>) -> Result<AggregationTree, InitError> {
    let parents = parent
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(InitError::Disconnected(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AggregationTree::from_parents_unchecked(parents))
}

/// Greedy Incremental Tree: starting from the sink, repeatedly attach the
/// unattached sensor closest (Euclidean, over graph edges) to the tree.
/// Ties go to the lower candidate id, then the lower tree node id.
pub fn git_tree(t: &Topology) -> Result<AggregationTree, InitError> {
    let n = t.num_nodes();
    let sink = t.sink().0;
    let mut in_tree = vec![false; n];
    in_tree[sink] = true;
    // best known (distance, tree node) per outside node
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let mut parent = vec![None; t.num_sensors()];
    let relax = |best: &mut Vec<Option<(f64, usize)>>, in_tree: &[bool], u: usize| {
        for &w in t.neighbors(u) {
            if in_tree[w] {
                continue;
            }
            let d = t
                .position(crate::NodeId(u))
                .dist(t.position(crate::NodeId(w)));
            let better = match best[w] {
                None => true,
                Some((bd, bu)) => d < bd || (d == bd && u < bu),
            };
            if better {
                best[w] = Some((d, u));
            }
        }
    };
    relax(&mut best, &in_tree, sink);
    for _ in 0..t.num_sensors() {
        let mut pick: Option<(f64, usize, usize)> = None;
        for w in 0..t.num_sensors() {
            if in_tree[w] {
                continue;
            }
            if let Some((d, u)) = best[w] {
                if pick.map_or(true, |(pd, _, _)| d < pd) {
                    pick = Some((d, w, u));
                }
            }
        }
        let Some((_, w, u)) = pick else {
            let stranded = (0..t.num_sensors()).find(|&i| !in_tree[i]).unwrap();
            return Err(InitError::Disconnected(stranded));
        };
        in_tree[w] = true;
        parent[w] = Some(u);
        relax(&mut best, &in_tree, w);
    }
    finish(parent)
}

/// Chain rooted at the sink: a Hamiltonian path found by depth-first
/// backtracking (neighbours in ascending order).
pub fn chain_tree(t: &Topology) -> Result<AggregationTree, InitError> {
    let v = t.num_sensors();
    let sink = t.sink().0;
    let mut on_path = vec![false; v + 1];
    on_path[sink] = true;
    let mut path = vec![sink];

    fn dfs(t: &Topology, on_path: &mut [bool], path: &mut Vec<usize>, want: usize) -> bool {
        if path.len() == want {
            return true;
        }
        let last = *path.last().unwrap();
        for &w in t.neighbors(last) {
            if !on_path[w] {
                on_path[w] = true;
                path.push(w);
                if dfs(t, on_path, path, want) {
                    return true;
                }
                path.pop();
                on_path[w] = false;
            }
        }
        false
    }

    if !dfs(t, &mut on_path, &mut path, v + 1) {
        return Err(InitError::NotConstructible);
    }
    let mut parent = vec![0; v];
    for pair in path.windows(2) {
        parent[pair[1]] = pair[0];
    }
    Ok(AggregationTree::from_parents_unchecked(parent))
}

/// Shortest-hop tree: each sensor hangs off the node that first discovers it
/// in a BFS from the sink.
pub fn bfs_tree(t: &Topology) -> Result<AggregationTree, InitError> {
    let v = t.num_sensors();
    let sink = t.sink().0;
    let mut parent = vec![None; v];
    let mut seen = vec![false; v + 1];
    seen[sink] = true;
    let mut queue = VecDeque::from([sink]);
    while let Some(u) = queue.pop_front() {
        for &w in t.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                queue.push_back(w);
            }
        }
    }
    finish(parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::optimal_schedule;
    use crate::topology::{generate_rgg, make_complete, FieldSpec, Point};

    fn path_graph(n: usize) -> Topology {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((0, n));
        Topology::from_edges(n, &edges, vec![true; n]).unwrap()
    }

    fn validate(t: &Topology, tree: &AggregationTree) {
        AggregationTree::from_parents(tree.parents().to_vec(), t).expect("valid spanning tree");
    }

    #[test]
    fn fast_on_complete_is_ideal() {
        let t = make_complete(7);
        let tree = fast_init_tree(&t, 3).unwrap();
        validate(&t, &tree);
        assert_eq!(optimal_schedule(&tree, 3, &t).unwrap().phi, 7);
        // sink keeps three children, the strongest of which keeps two
        let ch = tree.children();
        assert_eq!(ch[7].len(), 3);
        assert_eq!(ch[ch[7][0]].len(), 2);
    }

    #[test]
    fn path_graph_forces_chain() {
        let t = path_graph(6);
        for d in 1..5 {
            for tree in [
                fast_init_tree(&t, d).unwrap(),
                git_tree(&t).unwrap(),
                bfs_tree(&t).unwrap(),
            ] {
                assert_eq!(tree.parents(), &[6, 0, 1, 2, 3, 4]);
            }
        }
    }

    #[test]
    fn fast_on_rgg_is_spanning() {
        let mut checked = 0;
        for seed in 0..20 {
            let t = generate_rgg(60, &FieldSpec::standard(), seed);
            if !t.is_connected() {
                continue;
            }
            for d in [1, 2, 5, 12] {
                validate(&t, &fast_init_tree(&t, d).unwrap());
            }
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn extend_phase_respects_budgets() {
        // on a complete graph nothing is left over, so every node entered with
        // budget b has at most b children
        for (v, d) in [(7, 3), (20, 3), (15, 4), (40, 5)] {
            let t = make_complete(v);
            let tree = fast_init_tree(&t, d).unwrap();
            let s = optimal_schedule(&tree, d, &t).unwrap();
            let ch = tree.children();
            assert_eq!(ch[v].len() as u32, d);
            for i in 0..v {
                if let Some(w) = s.waiting[i] {
                    assert!(ch[i].iter().filter(|&&c| s.participating[c]).count() as u32 <= w);
                }
            }
        }
    }

    #[test]
    fn git_collinear() {
        let pos = vec![
            Point::new(0.0, 1.0),
            Point::new(0.0, 2.0),
            Point::new(0.0, 3.0),
            Point::new(0.0, 0.0),
        ];
        let t = crate::Topology::from_positions(pos, 1.0, vec![true; 3]).unwrap();
        assert_eq!(git_tree(&t).unwrap().parents(), &[3, 0, 1]);
        let one = make_complete(1);
        assert_eq!(git_tree(&one).unwrap().parents(), &[1]);
    }

    #[test]
    fn git_matches_quadratic_reference() {
        for seed in 0..10 {
            let t = generate_rgg(
                25,
                &FieldSpec {
                    comm_range: 400.0,
                    ..FieldSpec::standard()
                },
                seed,
            );
            let got = git_tree(&t).unwrap();
            // reference: rescan every (outside, inside) pair each round
            let n = t.num_nodes();
            let sink = n - 1;
            let mut inside = vec![false; n];
            inside[sink] = true;
            let mut parent = vec![usize::MAX; n - 1];
            for _ in 0..n - 1 {
                let mut best: Option<(f64, usize, usize)> = None;
                for w in 0..n - 1 {
                    if inside[w] {
                        continue;
                    }
                    for u in 0..n {
                        if !inside[u] || !t.is_adjacent(u, w) {
                            continue;
                        }
                        let d = t.positions()[u].dist(t.positions()[w]);
                        let better = match best {
                            None => true,
                            Some((bd, bw, bu)) => d < bd || (d == bd && (w, u) < (bw, bu)),
                        };
                        if better {
                            best = Some((d, w, u));
                        }
                    }
                }
                let (_, w, u) = best.unwrap();
                inside[w] = true;
                parent[w] = u;
            }
            assert_eq!(got.parents(), &parent[..], "seed {seed}");
        }
    }

    #[test]
    fn chain_on_complete() {
        let t = make_complete(5);
        let tree = chain_tree(&t).unwrap();
        assert_eq!(tree.depths().iter().max(), Some(&5));
        assert_eq!(
            optimal_schedule(&tree, 3, &make_complete(5)).unwrap().phi,
            3
        );
        // star: no Hamiltonian path
        let star = Topology::from_edges(3, &[(0, 3), (1, 3), (2, 3)], vec![true; 3]).unwrap();
        assert_eq!(chain_tree(&star), Err(InitError::NotConstructible));
    }

    #[test]
    fn bfs_depth_is_hop_distance() {
        for seed in 0..10 {
            let t = generate_rgg(40, &FieldSpec::standard(), seed);
            if !t.is_connected() {
                continue;
            }
            let tree = bfs_tree(&t).unwrap();
            validate(&t, &tree);
            let hops = t.hop_distances();
            let depths = tree.depths();
            for i in 0..t.num_nodes() {
                assert_eq!(Some(depths[i]), hops[i]);
            }
        }
    }

    #[test]
    fn disconnected_inputs() {
        let t = Topology::from_edges(2, &[(0, 2)], vec![true, true]).unwrap();
        assert_eq!(fast_init_tree(&t, 2), Err(InitError::Disconnected(1)));
        assert_eq!(git_tree(&t), Err(InitError::Disconnected(1)));
        assert!(bfs_tree(&t).is_err());
        assert_eq!(fast_init_tree(&t, 0), Err(InitError::InvalidDeadline));
    }
}
