//! Spanning aggregation trees rooted at the sink.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::topology::{NodeId, Topology};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("sensor {0} has no parent")]
    MissingNode(usize),
    #[error("cycle through sensor {0}")]
    CycleDetected(usize),
    #[error("edge ({0}, {1}) is not in the topology")]
    NonTopologyEdge(usize, usize),
    #[error("moving {node} under {new_parent} would create a cycle")]
    WouldCreateCycle { node: usize, new_parent: usize },
    #[error("node {0} is not a sensor")]
    NotASensor(usize),
    #[error("parent map has {got} entries, expected {expected}")]
    WrongSize { got: usize, expected: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Spanning tree stored as a parent map over sensors. Index `V` (the sink) is
/// the implicit root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggregationTree {
    parent: Vec<usize>,
}

/// Comparable identity of a tree; equal keys iff equal trees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeKey(Box<[u32]>);

impl AggregationTree {
    /// Validates a parent map (`parents[i]` is the parent of sensor `i`,
    /// `V` meaning the sink).
    pub fn from_parents(parents: Vec<usize>, t: &Topology) -> Result<Self, TreeError> {
        let v = t.num_sensors();
        if parents.len() != v {
            return Err(TreeError::WrongSize {
                got: parents.len(),
                expected: v,
            });
        }
        for (i, &p) in parents.iter().enumerate() {
            if p > v || p == i {
                return Err(TreeError::NonTopologyEdge(i, p));
            }
            if !t.is_adjacent(i, p) {
                return Err(TreeError::NonTopologyEdge(i, p));
            }
        }
        // 0 = unvisited, 1 = on current walk, 2 = known to reach the sink
        let mut state = vec![0u8; v];
        for start in 0..v {
            let mut path = Vec::new();
            let mut cur = start;
            while cur != v && state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = parents[cur];
            }
            if cur != v && state[cur] == 1 {
                return Err(TreeError::CycleDetected(cur));
            }
            for n in path {
                state[n] = 2;
            }
        }
        Ok(AggregationTree { parent: parents })
    }

    /// Like [`from_parents`](Self::from_parents) but keyed by sensor; every
    /// sensor must appear.
    pub fn from_parent_pairs(pairs: &[(usize, usize)], t: &Topology) -> Result<Self, TreeError> {
        let v = t.num_sensors();
        let mut parents = vec![None; v];
        for &(c, p) in pairs {
            if c >= v {
                return Err(TreeError::NotASensor(c));
            }
            parents[c] = Some(p);
        }
        let parents = parents
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or(TreeError::MissingNode(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parents(parents, t)
    }

    /// Unchecked constructor for callers that guarantee validity.
    pub(crate) fn from_parents_unchecked(parent: Vec<usize>) -> Self {
        AggregationTree { parent }
    }

    pub fn num_sensors(&self) -> usize {
        self.parent.len()
    }

    pub fn sink(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, i: usize) -> usize {
        self.parent[i]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    /// Children lists for every node including the sink, ascending.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.parent.len() + 1];
        for (i, &p) in self.parent.iter().enumerate() {
            ch[p].push(i);
        }
        ch
    }

    /// `H(i)`: `i` followed by its predecessors up to, not including, the sink.
    pub fn ancestors(&self, i: NodeId) -> Vec<NodeId> {
        let sink = self.sink();
        let mut out = Vec::new();
        let mut cur = i.0;
        while cur != sink {
            out.push(NodeId(cur));
            cur = self.parent[cur];
        }
        out
    }

    /// Hop count to the sink (sink itself is 0).
    pub fn depth(&self, i: usize) -> usize {
        let sink = self.sink();
        let mut d = 0;
        let mut cur = i;
        while cur != sink {
            d += 1;
            cur = self.parent[cur];
        }
        d
    }

    /// Depth of every node, sink last.
    pub fn depths(&self) -> Vec<usize> {
        let order = self.preorder();
        let mut d = vec![0; self.parent.len() + 1];
        for &u in order.iter().skip(1) {
            d[u] = d[self.parent[u]] + 1;
        }
        d
    }

    /// Nodes in DFS preorder from the sink, children ascending.
    pub fn preorder(&self) -> Vec<usize> {
        let ch = self.children();
        let mut order = Vec::with_capacity(self.parent.len() + 1);
        let mut stack = vec![self.sink()];
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(ch[u].iter().rev());
        }
        order
    }

    /// Nodes of the subtree rooted at `i`, `i` first.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let ch = self.children();
        let mut out = vec![i];
        let mut head = 0;
        while head < out.len() {
            let u = out[head];
            head += 1;
            out.extend_from_slice(&ch[u]);
        }
        out
    }

    /// True iff `j` lies in the subtree rooted at `i` (including `j == i`).
    pub fn in_subtree(&self, j: usize, i: usize) -> bool {
        let sink = self.sink();
        if i == sink {
            return true;
        }
        let mut cur = j;
        while cur != sink {
            if cur == i {
                return true;
            }
            cur = self.parent[cur];
        }
        false
    }

    /// Returns a new tree with `parent(i) = new_parent`. The input is untouched.
    pub fn reparent(&self, i: usize, new_parent: usize, t: &Topology) -> Result<Self, TreeError> {
        if i >= self.parent.len() {
            return Err(TreeError::NotASensor(i));
        }
        if new_parent == i || !t.is_adjacent(i, new_parent) {
            return Err(TreeError::NonTopologyEdge(i, new_parent));
        }
        if self.in_subtree(new_parent, i) {
            return Err(TreeError::WouldCreateCycle {
                node: i,
                new_parent,
            });
        }
        let mut parent = self.parent.clone();
        parent[i] = new_parent;
        Ok(AggregationTree { parent })
    }

    pub fn canonical_key(&self) -> TreeKey {
        TreeKey(self.parent.iter().map(|&p| p as u32).collect())
    }

    /// Text form: one `<child> <parent>` line per sensor, the sink written `S`.
    pub fn to_text(&self) -> String {
        let sink = self.sink();
        let mut out = String::new();
        for (c, &p) in self.parent.iter().enumerate() {
            if p == sink {
                writeln!(out, "{c} S").unwrap();
            } else {
                writeln!(out, "{c} {p}").unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str, t: &Topology) -> Result<Self, TreeError> {
        let sink = t.num_sensors();
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: &str| TreeError::Parse {
                line: n + 1,
                msg: msg.into(),
            };
            let mut f = line.split_whitespace();
            let (Some(c), Some(p), None) = (f.next(), f.next(), f.next()) else {
                return Err(perr("expected `<child> <parent>`"));
            };
            let c: usize = c.parse().map_err(|_| perr("bad child id"))?;
            let p = if p == "S" {
                sink
            } else {
                p.parse().map_err(|_| perr("bad parent id"))?
            };
            pairs.push((c, p));
        }
        Self::from_parent_pairs(&pairs, t)
    }

    pub fn load(path: impl AsRef<Path>, t: &Topology) -> anyhow::Result<Self> {
        Ok(Self::from_text(&fs::read_to_string(path)?, t)?)
    }
}
