//! Time-dependent shortest travel times between road locations.
//!
//! The route cost model: departing node `u` at time `t + p`, where `p` is the
//! travel time accumulated so far, edge `(u, v)` takes `w_{u,v}(t + p)`
//! minutes (arrival-time evaluation). A fixed-departure policy that always
//! evaluates weights at the original departure time `t` is kept as an
//! alternative.
//!
//! [`td_shortest_time`] runs A* with a selectable heuristic:
//!
//! - `none`: no heuristic; uniform-cost search, always exact.
//! - `admissible`: straight-line distance divided by the fastest speed any
//!   edge ever attains. Consistent, therefore exact.
//! - `paper`: straight-line distance divided by the average speed observed
//!   along the path so far. Not admissible in general; may overestimate.
//!
//! [`td_oracle`] is an exhaustive label-correcting search used by the test
//! suites as an independent source of truth.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GraphError, RoadNodeId, TimeDependentRoadNetwork};

/// Heuristic used by the A* search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicMode {
    /// Observed-velocity estimate; fast but may overestimate travel time.
    Paper,
    /// Straight-line distance over the network-wide maximum speed; exact.
    #[default]
    Admissible,
    /// No estimate; degenerates to uniform-cost search; exact.
    None,
}

impl HeuristicMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicMode::Paper => "paper",
            HeuristicMode::Admissible => "admissible",
            HeuristicMode::None => "none",
        }
    }
}

/// When edge weights are sampled during a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPolicy {
    /// Evaluate each edge at the time the search reaches it: `t + p`.
    #[default]
    ArrivalTime,
    /// Evaluate every edge at the original departure time `t`.
    FixedDeparture,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error(transparent)]
    NotFound(#[from] GraphError),
    #[error("no route from {src} to {dst}")]
    NoRoute { src: RoadNodeId, dst: RoadNodeId },
}

/// Outcome of a routing query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    /// Travel time in minutes.
    pub travel_time: f64,
    /// Road nodes from source to destination, inclusive.
    pub path: Vec<RoadNodeId>,
    /// Number of settled nodes (diagnostics).
    pub expanded: usize,
}

/// Planar Euclidean distance between two road nodes.
pub fn euclidean(
    r: &TimeDependentRoadNetwork,
    a: RoadNodeId,
    b: RoadNodeId,
) -> Result<f64, GraphError> {
    let na = r.node(a).ok_or(GraphError::RoadNodeNotFound(a))?;
    let nb = r.node(b).ok_or(GraphError::RoadNodeNotFound(b))?;
    Ok(((na.x - nb.x).powi(2) + (na.y - nb.y).powi(2)).sqrt())
}

/// Fastest speed any edge ever attains: the maximum over all edges of its
/// Euclidean length divided by its minimum travel time. Zero for networks
/// with no edges or only zero-length edges.
pub fn max_speed(r: &TimeDependentRoadNetwork) -> f64 {
    let mut best = 0.0f64;
    for (u, v, w) in r.edges() {
        let len = euclidean(r, u, v).expect("edge endpoints exist");
        let t = w.min_travel_time();
        if t > 0.0 {
            best = best.max(len / t);
        }
    }
    best
}

/// Min-heap entry ordered by f-value, with node id as a deterministic
/// tie-break. Travel times are finite, so the ordering is total.
#[derive(PartialEq)]
struct HeapEntry {
    f: f64,
    node: RoadNodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reverse for a min-heap on (f, node).
        other
            .f
            .partial_cmp(&self.f)
            .expect("finite f-values")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest travel time from `src` to `dst` departing at `t`, by A*.
///
/// With `HeuristicMode::None` or `HeuristicMode::Admissible` the result is
/// exact. With `HeuristicMode::Paper` the search can settle the destination
/// early and overestimate.
pub fn td_shortest_time(
    r: &TimeDependentRoadNetwork,
    src: RoadNodeId,
    dst: RoadNodeId,
    t: f64,
    mode: HeuristicMode,
    policy: WeightPolicy,
) -> Result<RouteResult, RoutingError> {
    let vmax = match mode {
        HeuristicMode::Admissible => max_speed(r),
        _ => 0.0,
    };
    td_shortest_time_with_speed(r, src, dst, t, mode, policy, vmax)
}

/// As [`td_shortest_time`], with the network-wide maximum speed supplied by
/// the caller so repeated queries avoid the edge scan.
pub fn td_shortest_time_with_speed(
    r: &TimeDependentRoadNetwork,
    src: RoadNodeId,
    dst: RoadNodeId,
    t: f64,
    mode: HeuristicMode,
    policy: WeightPolicy,
    vmax: f64,
) -> Result<RouteResult, RoutingError> {
    if !r.contains(src) {
        return Err(GraphError::RoadNodeNotFound(src).into());
    }
    if !r.contains(dst) {
        return Err(GraphError::RoadNodeNotFound(dst).into());
    }
    if src == dst {
        return Ok(RouteResult {
            travel_time: 0.0,
            path: vec![src],
            expanded: 0,
        });
    }

    // p: accumulated travel time; len: accumulated Euclidean path length
    // (used by the observed-velocity heuristic); pred: path reconstruction.
    let mut p: HashMap<RoadNodeId, f64> = HashMap::new();
    let mut len: HashMap<RoadNodeId, f64> = HashMap::new();
    let mut pred: HashMap<RoadNodeId, RoadNodeId> = HashMap::new();
    let mut settled: HashMap<RoadNodeId, ()> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut expanded = 0usize;

    p.insert(src, 0.0);
    len.insert(src, 0.0);
    heap.push(HeapEntry { f: 0.0, node: src });

    let estimate = |node: RoadNodeId, p_node: f64, len_node: f64| -> f64 {
        match mode {
            HeuristicMode::None => 0.0,
            HeuristicMode::Admissible => {
                if vmax > 0.0 {
                    euclidean(r, node, dst).expect("node exists") / vmax
                } else {
                    0.0
                }
            }
            HeuristicMode::Paper => {
                // Observed velocity is the Euclidean length of the path
                // travelled so far over the time it took; undefined at the
                // source, where the estimate is 0.
                if p_node > 0.0 && len_node > 0.0 {
                    euclidean(r, node, dst).expect("node exists") * p_node / len_node
                } else {
                    0.0
                }
            }
        }
    };

    while let Some(HeapEntry { node, .. }) = heap.pop() {
        if settled.contains_key(&node) {
            continue;
        }
        settled.insert(node, ());
        expanded += 1;
        if node == dst {
            let mut path = vec![dst];
            let mut cur = dst;
            while let Some(&prev) = pred.get(&cur) {
                path.push(prev);
                cur = prev;
            }
            path.reverse();
            return Ok(RouteResult {
                travel_time: p[&dst],
                path,
                expanded,
            });
        }

        let p_node = p[&node];
        let len_node = len[&node];
        for (next, weight) in r.edges_from(node) {
            if settled.contains_key(&next) {
                continue;
            }
            let depart = match policy {
                WeightPolicy::ArrivalTime => t + p_node,
                WeightPolicy::FixedDeparture => t,
            };
            let cand = p_node + weight.eval(depart);
            if p.get(&next).is_none_or(|&cur| cand < cur) {
                let cand_len = len_node + euclidean(r, node, next).expect("edge endpoints exist");
                p.insert(next, cand);
                len.insert(next, cand_len);
                pred.insert(next, node);
                heap.push(HeapEntry {
                    f: cand + estimate(next, cand, cand_len),
                    node: next,
                });
            }
        }
    }

    Err(RoutingError::NoRoute { src, dst })
}

/// Exhaustive label-correcting shortest travel time; the test oracle.
///
/// Relaxes edges until no label improves. Every label derives from a
/// predecessor with a strictly smaller label (travel times are positive),
/// so the process reaches the least fixed point of the arrival-time
/// recurrence — the same quantity the exact A* modes compute.
pub fn td_oracle(
    r: &TimeDependentRoadNetwork,
    src: RoadNodeId,
    dst: RoadNodeId,
    t: f64,
    policy: WeightPolicy,
) -> Result<f64, RoutingError> {
    if !r.contains(src) {
        return Err(GraphError::RoadNodeNotFound(src).into());
    }
    if !r.contains(dst) {
        return Err(GraphError::RoadNodeNotFound(dst).into());
    }

    let mut label: HashMap<RoadNodeId, f64> = HashMap::new();
    let mut queued: HashMap<RoadNodeId, bool> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    label.insert(src, 0.0);
    queue.push_back(src);
    queued.insert(src, true);

    while let Some(u) = queue.pop_front() {
        queued.insert(u, false);
        let pu = label[&u];
        for (v, weight) in r.edges_from(u) {
            let depart = match policy {
                WeightPolicy::ArrivalTime => t + pu,
                WeightPolicy::FixedDeparture => t,
            };
            let cand = pu + weight.eval(depart);
            if label.get(&v).is_none_or(|&cur| cand < cur) {
                label.insert(v, cand);
                if !queued.get(&v).copied().unwrap_or(false) {
                    queue.push_back(v);
                    queued.insert(v, true);
                }
            }
        }
    }

    label
        .get(&dst)
        .copied()
        .ok_or(RoutingError::NoRoute { src, dst })
}

/// Travel-time memo for one community search: the query location, departure
/// time, heuristic, and weight policy are fixed, so results are keyed by
/// source road node alone. Insert-if-absent is safe under concurrent use.
pub struct DistanceCache {
    target: RoadNodeId,
    depart: f64,
    mode: HeuristicMode,
    policy: WeightPolicy,
    vmax: OnceLock<f64>,
    memo: Mutex<HashMap<RoadNodeId, Option<f64>>>,
}

impl DistanceCache {
    pub fn new(target: RoadNodeId, depart: f64, mode: HeuristicMode, policy: WeightPolicy) -> Self {
        Self {
            target,
            depart,
            mode,
            policy,
            vmax: OnceLock::new(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn target(&self) -> RoadNodeId {
        self.target
    }

    pub fn depart(&self) -> f64 {
        self.depart
    }

    /// Travel time from `src` to the query location, memoized.
    pub fn travel_time(
        &self,
        r: &TimeDependentRoadNetwork,
        src: RoadNodeId,
    ) -> Result<f64, RoutingError> {
        if let Some(&hit) = self.memo.lock().unwrap().get(&src) {
            return hit.ok_or(RoutingError::NoRoute {
                src,
                dst: self.target,
            });
        }
        let vmax = *self
            .vmax
            .get_or_init(|| if self.mode == HeuristicMode::Admissible { max_speed(r) } else { 0.0 });
        let outcome = td_shortest_time_with_speed(
            r,
            src,
            self.target,
            self.depart,
            self.mode,
            self.policy,
            vmax,
        );
        match outcome {
            Ok(route) => {
                self.memo
                    .lock()
                    .unwrap()
                    .insert(src, Some(route.travel_time));
                Ok(route.travel_time)
            }
            Err(RoutingError::NoRoute { .. }) => {
                self.memo.lock().unwrap().insert(src, None);
                Err(RoutingError::NoRoute {
                    src,
                    dst: self.target,
                })
            }
            Err(e) => Err(e),
        }
    }
}
