//! Maximum-QoA scheduling on a fixed aggregation tree.
//!
//! A participant `i` with waiting time `W_i` collects from children placed in
//! distinct slots `0..W_i` and transmits in slot `W_i`; the sink behaves like a
//! participant with waiting time `D`. Writing `X[i][w]` for the best number of
//! participating sources in the subtree of `i` when `i` is given budget `w`,
//!
//! ```text
//! X[i][0] = F_i
//! X[i][w] = F_i + max over injective child -> slot maps of sum X[c][slot(c)]
//! ```
//!
//! The inner maximum is a maximum-weight bipartite assignment of children to
//! slots `0..w`, solved exactly per node and composed bottom-up.

use std::fmt::Write as _;

use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::topology::{NodeId, Topology};
use crate::tree::AggregationTree;

/// Time-slot count.
pub type Slots = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("deadline must be at least 1, got {0}")]
    InvalidDeadline(Slots),
    #[error("instance too large for exhaustive scheduling ({nodes} sensors, deadline {deadline})")]
    TooLarge { nodes: usize, deadline: Slots },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Waiting times and participation flags for every sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub deadline: Slots,
    /// `W_i` for participants, `None` otherwise.
    pub waiting: Vec<Option<Slots>>,
    /// `n_i`.
    pub participating: Vec<bool>,
    /// Participating sources, as claimed by the producer of the schedule.
    pub phi: u32,
}

impl Schedule {
    /// Builds a schedule from waiting times, deriving `n_i` and recounting `phi`.
    pub fn from_waiting(
        deadline: Slots,
        waiting: Vec<Option<Slots>>,
        tree: &AggregationTree,
        t: &Topology,
    ) -> Self {
        let participating: Vec<bool> = waiting.iter().map(Option::is_some).collect();
        let phi = count_qoa(tree, t, &participating);
        Schedule {
            deadline,
            waiting,
            participating,
            phi,
        }
    }

    /// Waiting time as seen by neighbours: participants report `W_i`,
    /// non-participants 0, the sink `D`.
    pub fn effective_waiting(&self, i: usize) -> Slots {
        if i == self.waiting.len() {
            self.deadline
        } else {
            self.waiting[i].unwrap_or(0)
        }
    }

    pub fn participants(&self) -> Vec<NodeId> {
        (0..self.participating.len())
            .filter(|&i| self.participating[i])
            .map(NodeId)
            .collect()
    }

    /// Dump format: `<id> <W|-> <n>` per sensor, then `PHI <value>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.waiting.iter().enumerate() {
            let n = u8::from(self.participating[i]);
            match w {
                Some(w) => writeln!(out, "{i} {w} {n}").unwrap(),
                None => writeln!(out, "{i} - {n}").unwrap(),
            }
        }
        writeln!(out, "PHI {}", self.phi).unwrap();
        out
    }

    /// Parses the dump format. The deadline is not part of the dump and must
    /// be supplied.
    pub fn from_text(text: &str, deadline: Slots) -> Result<Self, ScheduleError> {
        let mut waiting = Vec::new();
        let mut participating = Vec::new();
        let mut phi = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: &str| ScheduleError::Parse {
                line: n + 1,
                msg: msg.into(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f[0] == "PHI" {
                let v = f.get(1).ok_or_else(|| perr("missing PHI value"))?;
                phi = Some(v.parse().map_err(|_| perr("bad PHI value"))?);
                continue;
            }
            if f.len() != 3 {
                return Err(perr("expected `<id> <W|-> <n>`"));
            }
            let id: usize = f[0].parse().map_err(|_| perr("bad id"))?;
            if id != waiting.len() {
                return Err(perr("ids must be listed in order"));
            }
            waiting.push(match f[1] {
                "-" => None,
                w => Some(w.parse().map_err(|_| perr("bad waiting time"))?),
            });
            participating.push(match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(perr("participation must be 0 or 1")),
            });
        }
        let phi = phi.ok_or(ScheduleError::Parse {
            line: 0,
            msg: "missing PHI line".into(),
        })?;
        Ok(Schedule {
            deadline,
            waiting,
            participating,
            phi,
        })
    }
}

/// QoA: sources whose whole ancestor chain participates.
pub fn count_qoa(tree: &AggregationTree, t: &Topology, participating: &[bool]) -> u32 {
    let sink = tree.sink();
    // reach[i]: every node on the path i..sink participates
    let mut reach = vec![false; sink + 1];
    reach[sink] = true;
    let mut phi = 0;
    for u in tree.preorder().into_iter().skip(1) {
        reach[u] = participating[u] && reach[tree.parent(u)];
        if reach[u] && t.is_source(u) {
            phi += 1;
        }
    }
    phi
}

/// Per-node table `X[i][w]` for `w in 0..=max_budget`, over the subtree of a root.
pub(crate) struct QoaTable {
    x: Vec<Vec<u32>>,
}

impl QoaTable {
    pub(crate) fn build(
        children: &[Vec<usize>],
        t: &Topology,
        root: usize,
        max_budget: Slots,
    ) -> Self {
        let n = children.len();
        let mut x = vec![Vec::new(); n];
        // reverse BFS order visits children before parents
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            order.extend_from_slice(&children[u]);
        }
        let table = &mut x;
        for &u in order.iter().rev() {
            let f = u32::from(t.is_source(u));
            let mut row = Vec::with_capacity(max_budget as usize + 1);
            row.push(f);
            for w in 1..=max_budget {
                let prev = row[w as usize - 1];
                let val = if children[u].is_empty() {
                    f
                } else {
                    f + best_child_assignment(&children[u], w, table).0
                };
                debug_assert!(val >= prev);
                row.push(val);
            }
            table[u] = row;
        }
        QoaTable { x }
    }

    pub(crate) fn value(&self, node: usize, budget: Slots) -> u32 {
        self.x[node][budget as usize]
    }
}

/// Best placement of `kids` into distinct slots `0..w`. Returns the total and
/// the `(child, slot)` pairs that contribute.
fn best_child_assignment(kids: &[usize], w: Slots, x: &[Vec<u32>]) -> (u32, Vec<(usize, Slots)>) {
    let w = w as usize;
    // Only the top-w children of each slot column can appear in an optimum:
    // a matching uses at most w - 1 other rows, so some top-w row is free.
    let mut cand: Vec<usize> = if kids.len() <= w {
        kids.to_vec()
    } else {
        let mut keep = vec![false; kids.len()];
        let mut idx: Vec<usize> = (0..kids.len()).collect();
        for slot in 0..w {
            idx.sort_by(|&a, &b| x[kids[b]][slot].cmp(&x[kids[a]][slot]).then(a.cmp(&b)));
            for &k in idx.iter().take(w) {
                keep[k] = true;
            }
        }
        (0..kids.len())
            .filter(|&k| keep[k])
            .map(|k| kids[k])
            .collect()
    };
    cand.retain(|&c| x[c][w - 1] > 0);
    if cand.is_empty() {
        return (0, Vec::new());
    }
    let weights: Vec<Vec<i64>> = cand
        .iter()
        .map(|&c| (0..w).map(|s| i64::from(x[c][s])).collect())
        .collect();
    let (total, assign) = max_weight_assignment(&weights);
    let pairs = cand
        .iter()
        .zip(assign)
        .filter_map(|(&c, a)| a.map(|s| (c, s as Slots)))
        .collect();
    (total as u32, pairs)
}

/// The maximum-QoA feasible schedule on `tree` under deadline `d`.
pub fn optimal_schedule(
    tree: &AggregationTree,
    d: Slots,
    t: &Topology,
) -> Result<Schedule, ScheduleError> {
    if d == 0 {
        return Err(ScheduleError::InvalidDeadline(d));
    }
    let children = tree.children();
    let sink = tree.sink();
    let table = QoaTable::build(&children, t, sink, d);
    let mut waiting = vec![None; sink];
    let mut stack = vec![(sink, d)];
    while let Some((u, w)) = stack.pop() {
        if w == 0 || children[u].is_empty() {
            continue;
        }
        let (_, pairs) = best_child_assignment(&children[u], w, &table.x);
        for (c, slot) in pairs {
            waiting[c] = Some(slot);
            stack.push((c, slot));
        }
    }
    let s = Schedule::from_waiting(d, waiting, tree, t);
    debug_assert_eq!(s.phi, table.value(sink, d));
    Ok(s)
}

/// `optimal_schedule(..).phi` without building the schedule.
pub fn optimal_qoa(tree: &AggregationTree, d: Slots, t: &Topology) -> Result<u32, ScheduleError> {
    if d == 0 {
        return Err(ScheduleError::InvalidDeadline(d));
    }
    let sink = tree.sink();
    Ok(QoaTable::build(&tree.children(), t, sink, d).value(sink, d))
}

/// Optimal QoA of the subtree rooted at `root` when `root` holds budget
/// `budget`. Counts `root` itself when it is a source.
pub fn subtree_qoa(tree: &AggregationTree, t: &Topology, root: usize, budget: Slots) -> u32 {
    let children = tree.children();
    QoaTable::build(&children, t, root, budget).value(root, budget)
}

/// Largest instance accepted by [`brute_force_schedule`].
pub const BRUTE_FORCE_MAX_SENSORS: usize = 12;
pub const BRUTE_FORCE_MAX_DEADLINE: Slots = 5;

/// Exact optimum by exhaustive enumeration of, at every participating node,
/// all injective placements of subsets of its children into slots below its
/// budget. Independent of the assignment solver; meant as a test oracle.
pub fn brute_force_schedule(
    tree: &AggregationTree,
    d: Slots,
    t: &Topology,
) -> Result<Schedule, ScheduleError> {
    if d == 0 {
        return Err(ScheduleError::InvalidDeadline(d));
    }
    if tree.num_sensors() > BRUTE_FORCE_MAX_SENSORS || d > BRUTE_FORCE_MAX_DEADLINE {
        return Err(ScheduleError::TooLarge {
            nodes: tree.num_sensors(),
            deadline: d,
        });
    }
    let children = tree.children();
    let sink = tree.sink();
    let (_, placed) = exhaustive(sink, d, &children, t);
    let mut waiting = vec![None; sink];
    for (c, w) in placed {
        waiting[c] = Some(w);
    }
    Ok(Schedule::from_waiting(d, waiting, tree, t))
}

fn exhaustive(
    u: usize,
    w: Slots,
    children: &[Vec<usize>],
    t: &Topology,
) -> (u32, Vec<(usize, Slots)>) {
    let f = u32::from(t.is_source(u));
    let kids = &children[u];
    if w == 0 || kids.is_empty() {
        return (f, Vec::new());
    }
    // sub[k][s]: best result for kid k placed in slot s
    let sub: Vec<Vec<(u32, Vec<(usize, Slots)>)>> = kids
        .iter()
        .map(|&c| (0..w).map(|s| exhaustive(c, s, children, t)).collect())
        .collect();

    struct Search<'a> {
        kids: &'a [usize],
        sub: &'a [Vec<(u32, Vec<(usize, Slots)>)>],
        used: Vec<bool>,
        chosen: Vec<Option<Slots>>,
        best: u32,
        best_choice: Vec<Option<Slots>>,
    }
    impl Search<'_> {
        fn go(&mut self, k: usize, acc: u32) {
            if k == self.kids.len() {
                if acc > self.best {
                    self.best = acc;
                    self.best_choice = self.chosen.clone();
                }
                return;
            }
            self.chosen[k] = None;
            self.go(k + 1, acc);
            for s in 0..self.used.len() {
                let gain = self.sub[k][s].0;
                if !self.used[s] && gain > 0 {
                    self.used[s] = true;
                    self.chosen[k] = Some(s as Slots);
                    self.go(k + 1, acc + gain);
                    self.used[s] = false;
                }
            }
            self.chosen[k] = None;
        }
    }
    let mut search = Search {
        kids,
        sub: &sub,
        used: vec![false; w as usize],
        chosen: vec![None; kids.len()],
        best: 0,
        best_choice: vec![None; kids.len()],
    };
    search.go(0, 0);

    let mut placed = Vec::new();
    for (k, choice) in search.best_choice.iter().enumerate() {
        if let Some(s) = *choice {
            placed.push((kids[k], s));
            placed.extend_from_slice(&sub[k][s as usize].1);
        }
    }
    (f + search.best, placed)
}

/// A broken constraint of a schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DeadlineMismatch {
        expected: Slots,
        got: Slots,
    },
    WrongLength {
        expected: usize,
        got: usize,
    },
    /// `n_i` disagrees with whether `W_i` is defined.
    FlagMismatch {
        node: usize,
    },
    WaitingOutOfRange {
        node: usize,
        waiting: Slots,
    },
    ParentNotParticipating {
        node: usize,
        parent: usize,
    },
    NotBeforeParent {
        node: usize,
        parent: usize,
    },
    SlotCollision {
        parent: usize,
        slot: Slots,
        first: usize,
        second: usize,
    },
    TooManyChildren {
        parent: usize,
        count: usize,
        allowed: usize,
    },
    PhiMismatch {
        claimed: u32,
        actual: u32,
    },
}

/// Checks `s` against the waiting-time range, the sink deadline, participation
/// closure, per-parent slot distinctness and child count (`<= W_i - M_i`), and
/// the claimed QoA.
pub fn validate_schedule(
    tree: &AggregationTree,
    t: &Topology,
    d: Slots,
    s: &Schedule,
) -> Vec<Violation> {
    let v = tree.num_sensors();
    let mut out = Vec::new();
    if s.deadline != d {
        out.push(Violation::DeadlineMismatch {
            expected: d,
            got: s.deadline,
        });
    }
    if s.waiting.len() != v || s.participating.len() != v {
        out.push(Violation::WrongLength {
            expected: v,
            got: s.waiting.len(),
        });
        return out;
    }
    // a node participates only when both representations agree
    let part = |i: usize| s.participating[i] && s.waiting[i].is_some();
    for i in 0..v {
        if s.participating[i] != s.waiting[i].is_some() {
            out.push(Violation::FlagMismatch { node: i });
        }
        if let Some(w) = s.waiting[i] {
            if w >= d {
                out.push(Violation::WaitingOutOfRange {
                    node: i,
                    waiting: w,
                });
            }
        }
    }
    let parent_wait = |p: usize| {
        if p == v {
            Some(d)
        } else {
            s.waiting[p].filter(|_| part(p))
        }
    };
    let children = tree.children();
    for p in 0..=v {
        let kids: Vec<usize> = children[p].iter().copied().filter(|&c| part(c)).collect();
        if kids.is_empty() {
            continue;
        }
        let Some(wp) = parent_wait(p) else {
            for c in kids {
                out.push(Violation::ParentNotParticipating { node: c, parent: p });
            }
            continue;
        };
        let mut owner: Vec<(Slots, usize)> = Vec::new();
        for &c in &kids {
            let wc = s.waiting[c].unwrap();
            if wc >= wp {
                out.push(Violation::NotBeforeParent { node: c, parent: p });
            }
            if let Some(&(_, first)) = owner.iter().find(|(slot, _)| *slot == wc) {
                out.push(Violation::SlotCollision {
                    parent: p,
                    slot: wc,
                    first,
                    second: c,
                });
            } else {
                owner.push((wc, c));
            }
        }
        let m = kids.iter().map(|&c| s.waiting[c].unwrap()).min().unwrap();
        let allowed = wp.saturating_sub(m) as usize;
        if kids.len() > allowed {
            out.push(Violation::TooManyChildren {
                parent: p,
                count: kids.len(),
                allowed,
            });
        }
    }
    let flags: Vec<bool> = (0..v).map(part).collect();
    let actual = count_qoa(tree, t, &flags);
    if actual != s.phi {
        out.push(Violation::PhiMismatch {
            claimed: s.phi,
            actual,
        });
    }
    out
}

/// Reuses a schedule built for deadline `s.deadline` under a shorter
/// deadline: every waiting time drops by the difference, and nodes that would
/// go negative (with their subtrees) stop participating.
pub fn reduce_deadline(
    s: &Schedule,
    tree: &AggregationTree,
    t: &Topology,
    d_new: Slots,
) -> Result<Schedule, ScheduleError> {
    if d_new == 0 || d_new > s.deadline {
        return Err(ScheduleError::InvalidDeadline(d_new));
    }
    let shift = s.deadline - d_new;
    let sink = tree.sink();
    let mut waiting = vec![None; sink];
    for u in tree.preorder().into_iter().skip(1) {
        let p = tree.parent(u);
        let parent_ok = p == sink || waiting[p].is_some();
        if !parent_ok || !s.participating[u] {
            continue;
        }
        if let Some(w) = s.waiting[u] {
            if w >= shift {
                waiting[u] = Some(w - shift);
            }
        }
    }
    Ok(Schedule::from_waiting(d_new, waiting, tree, t))
}
