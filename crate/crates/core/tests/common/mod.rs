//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use aggtree::{AggregationTree, Topology};
use rand::Rng;

/// Random recursive tree on `v` sensors: sensor `i` hangs off a uniformly
/// chosen earlier sensor or the sink. The topology holds exactly the tree
/// edges plus `extra` random chords.
pub fn random_tree(
    rng: &mut impl Rng,
    v: usize,
    p_source: f64,
    extra: usize,
) -> (Topology, AggregationTree) {
    let sink = v;
    let mut parents = vec![sink; v];
    let mut edges = Vec::new();
    for i in 0..v {
        let k = rng.gen_range(0..=i);
        parents[i] = if k == i { sink } else { k };
        edges.push((i, parents[i]));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..=v);
        let b = rng.gen_range(0..=v);
        if a != b {
            edges.push((a, b));
        }
    }
    let sources = (0..v).map(|_| rng.gen_bool(p_source)).collect();
    let t = Topology::from_edges(v, &edges, sources).unwrap();
    let tree = AggregationTree::from_parents(parents, &t).unwrap();
    (t, tree)
}

/// Connected Erdos-Renyi graph on `v` sensors plus the sink, edge
/// probability `p`, redrawn until connected.
pub fn random_connected_graph(rng: &mut impl Rng, v: usize, p: f64) -> Topology {
    loop {
        let mut edges = Vec::new();
        for a in 0..=v {
            for b in a + 1..=v {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        let t = Topology::from_edges(v, &edges, vec![true; v]).unwrap();
        if t.is_connected() {
            return t;
        }
    }
}

/// Number of spanning trees by the matrix-tree theorem: determinant of the
/// Laplacian with the sink's row and column removed, computed exactly with
/// fraction-free (Bareiss) elimination.
pub fn kirchhoff_count(t: &Topology) -> i128 {
    let n = t.num_sensors();
    if n == 0 {
        return 1;
    }
    let mut m = vec![vec![0i128; n]; n];
    for i in 0..n {
        m[i][i] = t.neighbors(i).len() as i128;
        for &j in t.neighbors(i) {
            if j < n {
                m[i][j] -= 1;
            }
        }
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Stationary distribution of a continuous-time chain given its off-diagonal
/// rates, by Gaussian elimination on `pi Q = 0, sum pi = 1`.
pub fn ctmc_stationary(rates: &[Vec<f64>]) -> Vec<f64> {
    let n = rates.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for a in 0..n {
        let out: f64 = rates[a].iter().sum();
        for b in 0..n {
            m[b][a] += rates[a][b];
        }
        m[a][a] -= out;
    }
    for a in 0..n {
        m[n - 1][a] = 1.0;
    }
    m[n - 1][n] = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        m.swap(c, piv);
        let pv = m[c][c];
        for k in c..=n {
            m[c][k] /= pv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    (0..n).map(|a| m[a][n]).collect()
}
