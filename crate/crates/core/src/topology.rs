//! WSN communication graphs.
//!
//! Sensors are numbered densely `0..V`; the sink always has index `V`. Every
//! per-node vector in the crate (positions, adjacency, tree parents) uses this
//! layout, so sink lookups are a plain index.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Index of a node: a sensor in `0..V` or the sink at `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 2D position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge ({0}, {1}) references a node outside the graph")]
    BadEdge(usize, usize),
    #[error("source flag vector has length {got}, expected {expected}")]
    SourceFlags { got: usize, expected: usize },
}

/// Communication graph over `V` sensors plus the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    num_sensors: usize,
    positions: Vec<Point>,
    comm_range: f64,
    adjacency: Vec<Vec<usize>>,
    sources: Vec<bool>,
}

impl Topology {
    /// Builds a geometric topology: `positions` holds the sensors followed by
    /// the sink; edges join every pair within `comm_range` (inclusive).
    pub fn from_positions(
        positions: Vec<Point>,
        comm_range: f64,
        sources: Vec<bool>,
    ) -> Result<Self, TopologyError> {
        assert!(!positions.is_empty(), "positions must include the sink");
        let v = positions.len() - 1;
        if sources.len() != v {
            return Err(TopologyError::SourceFlags {
                got: sources.len(),
                expected: v,
            });
        }
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].dist(positions[j]) <= comm_range {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        Ok(Topology {
            num_sensors: v,
            positions,
            comm_range,
            adjacency,
            sources,
        })
    }

    /// Builds a topology from an explicit edge list. Node `v` is the sink.
    /// Positions are synthetic (all at the origin) and `comm_range` is NaN, so
    /// such graphs cannot be written in the positional text format.
    pub fn from_edges(
        v: usize,
        edges: &[(usize, usize)],
        sources: Vec<bool>,
    ) -> Result<Self, TopologyError> {
        if sources.len() != v {
            return Err(TopologyError::SourceFlags {
                got: sources.len(),
                expected: v,
            });
        }
        let mut adjacency = vec![Vec::new(); v + 1];
        for &(a, b) in edges {
            if a > v || b > v || a == b {
                return Err(TopologyError::BadEdge(a, b));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Topology {
            num_sensors: v,
            positions: vec![Point::new(0.0, 0.0); v + 1],
            comm_range: f64::NAN,
            adjacency,
            sources,
        })
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    /// Sensors plus the sink.
    pub fn num_nodes(&self) -> usize {
        self.num_sensors + 1
    }

    pub fn sink(&self) -> NodeId {
        NodeId(self.num_sensors)
    }

    pub fn is_sink(&self, i: usize) -> bool {
        i == self.num_sensors
    }

    pub fn sensors(&self) -> impl Iterator<Item = NodeId> {
        (0..self.num_sensors).map(NodeId)
    }

    pub fn position(&self, i: NodeId) -> Point {
        self.positions[i.0]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    /// Neighbors of `i` in ascending index order (the sink, if adjacent, is last).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// `F_i`; the sink is never a source.
    pub fn is_source(&self, i: usize) -> bool {
        i < self.num_sensors && self.sources[i]
    }

    pub fn source_flags(&self) -> &[bool] {
        &self.sources
    }

    pub fn num_sources(&self) -> usize {
        self.sources.iter().filter(|&&s| s).count()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (a, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Hop distance from the sink for every node; `None` if unreachable.
    pub fn hop_distances(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes()];
        let sink = self.num_sensors;
        dist[sink] = Some(0);
        let mut queue = VecDeque::from([sink]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Nodes in BFS order from the sink (sink first), neighbors in ascending order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_nodes()];
        let sink = self.num_sensors;
        seen[sink] = true;
        let mut order = vec![sink];
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
        order
    }

    /// True iff every sensor is reachable from the sink.
    pub fn is_connected(&self) -> bool {
        self.bfs_order().len() == self.num_nodes()
    }

    /// Serializes to the positional text format. Adjacency is implied by the
    /// positions and range, so it is not written.
    pub fn to_text(&self) -> String {
        let sink = self.positions[self.num_sensors];
        let mut out = format!(
            "V {} RANGE {} SINK {} {}\n",
            self.num_sensors, self.comm_range, sink.x, sink.y
        );
        for i in 0..self.num_sensors {
            let p = self.positions[i];
            out.push_str(&format!(
                "{} {} {} {}\n",
                i,
                p.x,
                p.y,
                u8::from(self.sources[i])
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(TopologyError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let perr = |line: usize, msg: &str| TopologyError::Parse {
            line,
            msg: msg.to_string(),
        };
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 7 || tok[0] != "V" || tok[2] != "RANGE" || tok[4] != "SINK" {
            return Err(perr(hline, "expected `V <v> RANGE <r> SINK <x> <y>`"));
        }
        let v: usize = tok[1]
            .parse()
            .map_err(|_| perr(hline, "bad sensor count"))?;
        let range: f64 = tok[3].parse().map_err(|_| perr(hline, "bad range"))?;
        let sx: f64 = tok[5].parse().map_err(|_| perr(hline, "bad sink x"))?;
        let sy: f64 = tok[6].parse().map_err(|_| perr(hline, "bad sink y"))?;

        let mut positions = vec![None; v];
        let mut sources = vec![false; v];
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(perr(ln, "expected `<id> <x> <y> <F>`"));
            }
            let id: usize = f[0].parse().map_err(|_| perr(ln, "bad id"))?;
            if id >= v {
                return Err(perr(ln, "id out of range"));
            }
            if positions[id].is_some() {
                return Err(perr(ln, "duplicate id"));
            }
            let x: f64 = f[1].parse().map_err(|_| perr(ln, "bad x"))?;
            let y: f64 = f[2].parse().map_err(|_| perr(ln, "bad y"))?;
            sources[id] = match f[3] {
                "0" => false,
                "1" => true,
                _ => return Err(perr(ln, "source flag must be 0 or 1")),
            };
            positions[id] = Some(Point::new(x, y));
        }
        let mut pts = Vec::with_capacity(v + 1);
        for (i, p) in positions.into_iter().enumerate() {
            pts.push(p.ok_or_else(|| perr(hline, &format!("sensor {i} missing")))?);
        }
        pts.push(Point::new(sx, sy));
        Topology::from_positions(pts, range, sources)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        Topology::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopologyError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Parameters of a uniform random deployment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub width: f64,
    pub height: f64,
    pub comm_range: f64,
    pub sink: Point,
    pub source_fraction: f64,
}

impl FieldSpec {
    /// 300 m square, 75 m range, sink centered on the top edge, 80% sources.
    pub fn standard() -> Self {
        FieldSpec {
            width: 300.0,
            height: 300.0,
            comm_range: 75.0,
            sink: Point::new(150.0, 300.0),
            source_fraction: 0.8,
        }
    }

    /// 40 m square, 10 m range, sink at (20, 40), every sensor a source.
    pub fn small() -> Self {
        FieldSpec {
            width: 40.0,
            height: 40.0,
            comm_range: 10.0,
            sink: Point::new(20.0, 40.0),
            source_fraction: 1.0,
        }
    }
}

/// Random geometric graph: `v` sensors uniform over the field, exactly
/// `round(source_fraction * v)` of them sources.
pub fn generate_rgg(v: usize, field: &FieldSpec, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_rgg_with(v, field, &mut rng)
}

pub fn generate_rgg_with(v: usize, field: &FieldSpec, rng: &mut impl Rng) -> Topology {
    assert!(
        field.comm_range > 0.0,
        "communication range must be positive"
    );
    assert!((0.0..=1.0).contains(&field.source_fraction));
    let mut positions: Vec<Point> = (0..v)
        .map(|_| {
            Point::new(
                rng.gen::<f64>() * field.width,
                rng.gen::<f64>() * field.height,
            )
        })
        .collect();
    positions.push(field.sink);
    let n_src = ((field.source_fraction * v as f64).round() as usize).min(v);
    let mut sources = vec![false; v];
    for i in sample(rng, v, n_src) {
        sources[i] = true;
    }
    Topology::from_positions(positions, field.comm_range, sources).expect("flags sized to v")
}

/// Draws deployments until one is connected. Attempt `k` uses an independent
/// ChaCha stream of `seed`, so nearby seeds never collapse onto the same graph.
/// Returns the topology and the number of attempts used.
pub fn generate_connected_rgg(
    v: usize,
    field: &FieldSpec,
    seed: u64,
    max_attempts: usize,
) -> Option<(Topology, usize)> {
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let t = generate_rgg_with(v, field, &mut rng);
        if t.is_connected() {
            return Some((t, attempt + 1));
        }
    }
    None
}

/// Complete graph on `v` sensors plus the sink, all sensors sources.
///
/// Nodes sit on the unit circle with range 2, so the positional format
/// reproduces the same graph on reload.
pub fn make_complete(v: usize) -> Topology {
    assert!(v >= 1, "complete graph needs at least one sensor");
    let n = v + 1;
    let positions = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect();
    Topology::from_positions(positions, 2.0, vec![true; v]).expect("flags sized to v")
}
