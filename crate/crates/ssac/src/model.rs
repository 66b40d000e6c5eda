//! In-memory representation of the combined network: an attributed social
//! graph, a time-dependent road graph, and the query tuple driving a search.
//!
//! All graph types are immutable once built. Construction goes through
//! [`Network::from_parts`], which runs [`validate`] and rejects inconsistent
//! input, so that every constructed `Network` upholds its invariants and
//! searches can share it freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a node in the social network.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct SocialNodeId(pub u64);

/// Identifier of a node (location) in the road network.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct RoadNodeId(pub u64);

impl fmt::Display for SocialNodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RoadNodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for SocialNodeId {
    fn from(v: u64) -> Self {
        Self(v)
    }
}

impl From<u64> for RoadNodeId {
    fn from(v: u64) -> Self {
        Self(v)
    }
}

/// A road location with planar coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: RoadNodeId,
    pub x: f64,
    pub y: f64,
}

/// Piecewise-linear travel time as a function of departure time.
///
/// Breakpoints are `(time, travel_time)` pairs with strictly increasing
/// times and strictly positive travel times, both in minutes. Evaluation
/// interpolates linearly between breakpoints and clamps to the nearest
/// breakpoint value outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentWeight {
    breakpoints: Vec<(f64, f64)>,
}

/// Reason a weight's breakpoint list was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("breakpoint list is empty")]
    Empty,
    #[error("breakpoint times must be strictly increasing (index {0})")]
    NonIncreasingTime(usize),
    #[error("travel times must be strictly positive and finite (index {0})")]
    BadTravelTime(usize),
    #[error("breakpoint time must be finite (index {0})")]
    BadTime(usize),
}

impl TimeDependentWeight {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, WeightError> {
        if breakpoints.is_empty() {
            return Err(WeightError::Empty);
        }
        for (i, &(t, w)) in breakpoints.iter().enumerate() {
            if !t.is_finite() {
                return Err(WeightError::BadTime(i));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(WeightError::BadTravelTime(i));
            }
            if i > 0 && t <= breakpoints[i - 1].0 {
                return Err(WeightError::NonIncreasingTime(i));
            }
        }
        Ok(Self { breakpoints })
    }

    /// A weight that does not vary with time.
    pub fn constant(w: f64) -> Self {
        Self::new(vec![(0.0, w)]).expect("constant weight must be positive and finite")
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Travel time when departing at `t`: clamped piecewise-linear
    /// interpolation over the breakpoints.
    pub fn eval(&self, t: f64) -> f64 {
        let bps = &self.breakpoints;
        if t <= bps[0].0 {
            return bps[0].1;
        }
        let last = bps[bps.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        // t strictly between first and last breakpoint times.
        let i = match bps.binary_search_by(|&(bt, _)| bt.partial_cmp(&t).unwrap()) {
            Ok(i) => return bps[i].1,
            Err(i) => i,
        };
        let (t0, w0) = bps[i - 1];
        let (t1, w1) = bps[i];
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    /// Smallest travel time attained by this weight at any departure time.
    ///
    /// The function is linear between breakpoints and clamped outside them,
    /// so the minimum over all of time is the minimum breakpoint value.
    pub fn min_travel_time(&self) -> f64 {
        self.breakpoints
            .iter()
            .map(|&(_, w)| w)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Undirected road graph with time-dependent edge weights.
#[derive(Debug, Clone)]
pub struct TimeDependentRoadNetwork {
    nodes: BTreeMap<RoadNodeId, RoadNode>,
    adjacency: BTreeMap<RoadNodeId, BTreeMap<RoadNodeId, TimeDependentWeight>>,
}

impl TimeDependentRoadNetwork {
    pub fn node(&self, id: RoadNodeId) -> Option<&RoadNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: RoadNodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = RoadNodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Neighbors of `id` with the connecting edge weight.
    pub fn edges_from(
        &self,
        id: RoadNodeId,
    ) -> impl Iterator<Item = (RoadNodeId, &TimeDependentWeight)> + '_ {
        self.adjacency
            .get(&id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&n, w)| (n, w)))
    }

    pub fn weight(&self, u: RoadNodeId, v: RoadNodeId) -> Option<&TimeDependentWeight> {
        self.adjacency.get(&u).and_then(|m| m.get(&v))
    }

    /// Each undirected edge once, as (lower id, higher id, weight).
    pub fn edges(&self) -> impl Iterator<Item = (RoadNodeId, RoadNodeId, &TimeDependentWeight)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, m)| m.iter().map(move |(&v, w)| (u, v, w)))
            .filter(|&(u, v, _)| u < v)
    }
}

/// A social node: keyword set plus a location on the road network.
///
/// The keyword set may be empty; such a node's semantic vector is the zero
/// vector and its cosine similarities are defined as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialNode {
    pub id: SocialNodeId,
    pub keywords: BTreeSet<String>,
    pub location: RoadNodeId,
}

/// Undirected, unweighted social graph with keyword and location attributes.
#[derive(Debug, Clone)]
pub struct AttributedSocialNetwork {
    nodes: BTreeMap<SocialNodeId, SocialNode>,
    adjacency: BTreeMap<SocialNodeId, BTreeSet<SocialNodeId>>,
}

/// Lookup failure for a node id that is not in the graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("social node {0} not found")]
    SocialNodeNotFound(SocialNodeId),
    #[error("road node {0} not found")]
    RoadNodeNotFound(RoadNodeId),
}

impl AttributedSocialNetwork {
    pub fn node(&self, id: SocialNodeId) -> Option<&SocialNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: SocialNodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = SocialNodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SocialNode> + '_ {
        self.nodes.values()
    }

    /// Adjacency set of `n`. Never contains `n` itself.
    pub fn neighbors(&self, n: SocialNodeId) -> Result<&BTreeSet<SocialNodeId>, GraphError> {
        self.adjacency
            .get(&n)
            .ok_or(GraphError::SocialNodeNotFound(n))
    }

    /// Number of neighbors of `n` in the whole social network.
    pub fn degree(&self, n: SocialNodeId) -> Result<usize, GraphError> {
        self.neighbors(n).map(|s| s.len())
    }

    /// Each undirected edge once, as (lower id, higher id).
    pub fn edges(&self) -> impl Iterator<Item = (SocialNodeId, SocialNodeId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, s)| s.iter().map(move |&v| (u, v)))
            .filter(|&(u, v)| u < v)
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }
}

/// Raw road edge prior to weight validation: (u, v, breakpoints).
pub type RawRoadEdge = (RoadNodeId, RoadNodeId, Vec<(f64, f64)>);

/// Raw road-network description, prior to validation.
#[derive(Debug, Clone, Default)]
pub struct RoadNetworkData {
    pub nodes: Vec<RoadNode>,
    /// Breakpoints are validated during `Network::from_parts`.
    pub edges: Vec<RawRoadEdge>,
}

/// Raw social-network description, prior to validation.
#[derive(Debug, Clone, Default)]
pub struct SocialNetworkData {
    pub nodes: Vec<SocialNode>,
    pub edges: Vec<(SocialNodeId, SocialNodeId)>,
}

/// One constraint violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateRoadNode(RoadNodeId),
    DuplicateSocialNode(SocialNodeId),
    NonFiniteCoordinate(RoadNodeId),
    RoadSelfLoop(RoadNodeId),
    SocialSelfLoop(SocialNodeId),
    DanglingRoadEdge { u: RoadNodeId, v: RoadNodeId },
    DanglingSocialEdge { u: SocialNodeId, v: SocialNodeId },
    BadWeight { u: RoadNodeId, v: RoadNodeId, reason: WeightError },
    MissingLocation { node: SocialNodeId, location: RoadNodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateRoadNode(id) => write!(f, "duplicate road node id {id}"),
            Violation::DuplicateSocialNode(id) => write!(f, "duplicate social node id {id}"),
            Violation::NonFiniteCoordinate(id) => {
                write!(f, "road node {id} has a non-finite coordinate")
            }
            Violation::RoadSelfLoop(id) => write!(f, "road self-loop at {id}"),
            Violation::SocialSelfLoop(id) => write!(f, "social self-loop at {id}"),
            Violation::DanglingRoadEdge { u, v } => {
                write!(f, "road edge ({u},{v}) references a missing node")
            }
            Violation::DanglingSocialEdge { u, v } => {
                write!(f, "social edge ({u},{v}) references a missing node")
            }
            Violation::BadWeight { u, v, reason } => {
                write!(f, "bad weight on road edge ({u},{v}): {reason}")
            }
            Violation::MissingLocation { node, location } => {
                write!(f, "social node {node} maps to missing road node {location}")
            }
        }
    }
}

/// Outcome of validating a raw network description.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check a raw network description against the structural invariants.
///
/// Violations are collected, not thrown: the report lists every problem
/// found (dangling edges, bad breakpoint lists, missing location mappings,
/// duplicates, self-loops).
pub fn validate(road: &RoadNetworkData, social: &SocialNetworkData) -> ValidationReport {
    let mut violations = Vec::new();

    let mut road_ids = BTreeSet::new();
    for node in &road.nodes {
        if !road_ids.insert(node.id) {
            violations.push(Violation::DuplicateRoadNode(node.id));
        }
        if !(node.x.is_finite() && node.y.is_finite()) {
            violations.push(Violation::NonFiniteCoordinate(node.id));
        }
    }
    for (u, v, bps) in &road.edges {
        if u == v {
            violations.push(Violation::RoadSelfLoop(*u));
            continue;
        }
        if !road_ids.contains(u) || !road_ids.contains(v) {
            violations.push(Violation::DanglingRoadEdge { u: *u, v: *v });
        }
        if let Err(reason) = TimeDependentWeight::new(bps.clone()) {
            violations.push(Violation::BadWeight { u: *u, v: *v, reason });
        }
    }

    let mut social_ids = BTreeSet::new();
    for node in &social.nodes {
        if !social_ids.insert(node.id) {
            violations.push(Violation::DuplicateSocialNode(node.id));
        }
        if !road_ids.contains(&node.location) {
            violations.push(Violation::MissingLocation {
                node: node.id,
                location: node.location,
            });
        }
    }
    for (u, v) in &social.edges {
        if u == v {
            violations.push(Violation::SocialSelfLoop(*u));
            continue;
        }
        if !social_ids.contains(u) || !social_ids.contains(v) {
            violations.push(Violation::DanglingSocialEdge { u: *u, v: *v });
        }
    }

    ValidationReport { violations }
}

/// The combined network: social graph plus road graph.
#[derive(Debug, Clone)]
pub struct Network {
    pub road: TimeDependentRoadNetwork,
    pub social: AttributedSocialNetwork,
}

impl Network {
    /// Validate and assemble a network. Parallel edges are collapsed (the
    /// last weight wins for roads); adjacency is stored symmetrically.
    pub fn from_parts(
        road: RoadNetworkData,
        social: SocialNetworkData,
    ) -> Result<Self, ValidationReport> {
        let report = validate(&road, &social);
        if !report.is_empty() {
            return Err(report);
        }

        let mut road_nodes = BTreeMap::new();
        let mut road_adj: BTreeMap<RoadNodeId, BTreeMap<RoadNodeId, TimeDependentWeight>> =
            BTreeMap::new();
        for node in road.nodes {
            road_adj.entry(node.id).or_default();
            road_nodes.insert(node.id, node);
        }
        for (u, v, bps) in road.edges {
            let w = TimeDependentWeight::new(bps).expect("validated above");
            road_adj.entry(u).or_default().insert(v, w.clone());
            road_adj.entry(v).or_default().insert(u, w);
        }

        let mut social_nodes = BTreeMap::new();
        let mut social_adj: BTreeMap<SocialNodeId, BTreeSet<SocialNodeId>> = BTreeMap::new();
        for node in social.nodes {
            social_adj.entry(node.id).or_default();
            social_nodes.insert(node.id, node);
        }
        for (u, v) in social.edges {
            social_adj.entry(u).or_default().insert(v);
            social_adj.entry(v).or_default().insert(u);
        }

        Ok(Self {
            road: TimeDependentRoadNetwork {
                nodes: road_nodes,
                adjacency: road_adj,
            },
            social: AttributedSocialNetwork {
                nodes: social_nodes,
                adjacency: social_adj,
            },
        })
    }
}

/// The query tuple: node, core order, keywords, location, departure time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub q: SocialNodeId,
    pub k: u32,
    pub keywords: BTreeSet<String>,
    pub location: RoadNodeId,
    pub depart: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("query node {0} not found in the social network")]
    UnknownQueryNode(SocialNodeId),
    #[error("query location {0} not found in the road network")]
    UnknownLocation(RoadNodeId),
    #[error("k must be at least 1")]
    BadK,
    #[error("query keyword set must be non-empty")]
    EmptyKeywords,
    #[error("departure time must be finite")]
    BadDeparture,
}

impl Query {
    pub fn new(
        net: &Network,
        q: SocialNodeId,
        k: u32,
        keywords: BTreeSet<String>,
        location: RoadNodeId,
        depart: f64,
    ) -> Result<Self, QueryError> {
        if !net.social.contains(q) {
            return Err(QueryError::UnknownQueryNode(q));
        }
        if !net.road.contains(location) {
            return Err(QueryError::UnknownLocation(location));
        }
        if k < 1 {
            return Err(QueryError::BadK);
        }
        if keywords.is_empty() {
            return Err(QueryError::EmptyKeywords);
        }
        if !depart.is_finite() {
            return Err(QueryError::BadDeparture);
        }
        Ok(Self {
            q,
            k,
            keywords,
            location,
            depart,
        })
    }
}

/// A found community: members plus the objective values it was scored with.
///
/// `k_value` is the semantic similarity objective (higher is better) and
/// `t_value` the negated average travel time to the query location (≤ 0,
/// higher is better). `md` is the community Manhattan distance within the
/// comparison set it was selected from, when one applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub members: BTreeSet<SocialNodeId>,
    pub k_value: f64,
    pub t_value: f64,
    pub md: Option<f64>,
}

impl Community {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> BTreeSet<SocialNodeId> {
        v.iter().map(|&i| SocialNodeId(i)).collect()
    }

    use crate::testutil::{road_node, social_node};

    fn triangle_net() -> Network {
        // Social triangle a=1, b=2, c=3 plus isolated z=4, all on one road node.
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0)],
            edges: vec![],
        };
        let social = SocialNetworkData {
            nodes: vec![
                social_node(1, 1, &["a"]),
                social_node(2, 1, &["b"]),
                social_node(3, 1, &["c"]),
                social_node(4, 1, &[]),
            ],
            edges: vec![
                (SocialNodeId(1), SocialNodeId(2)),
                (SocialNodeId(2), SocialNodeId(3)),
                (SocialNodeId(1), SocialNodeId(3)),
            ],
        };
        Network::from_parts(road, social).unwrap()
    }

    #[test]
    fn eval_weight_examples() {
        let w = TimeDependentWeight::new(vec![(0.0, 4.0), (30.0, 8.0), (50.0, 5.0)]).unwrap();
        assert_eq!(w.eval(0.0), 4.0);
        assert_eq!(w.eval(15.0), 6.0);
        assert_eq!(w.eval(60.0), 5.0);
        assert_eq!(w.eval(40.0), 6.5);
        // Clamp below the first breakpoint as well.
        assert_eq!(w.eval(-10.0), 4.0);
        // Exact hits on breakpoints.
        assert_eq!(w.eval(30.0), 8.0);
        assert_eq!(w.eval(50.0), 5.0);
    }

    #[test]
    fn weight_rejects_bad_breakpoints() {
        assert_eq!(
            TimeDependentWeight::new(vec![]).unwrap_err(),
            WeightError::Empty
        );
        assert!(matches!(
            TimeDependentWeight::new(vec![(0.0, 1.0), (0.0, 2.0)]),
            Err(WeightError::NonIncreasingTime(1))
        ));
        assert!(matches!(
            TimeDependentWeight::new(vec![(0.0, 0.0)]),
            Err(WeightError::BadTravelTime(0))
        ));
        assert!(matches!(
            TimeDependentWeight::new(vec![(0.0, -3.0)]),
            Err(WeightError::BadTravelTime(0))
        ));
        assert!(matches!(
            TimeDependentWeight::new(vec![(0.0, f64::NAN)]),
            Err(WeightError::BadTravelTime(0))
        ));
    }

    #[test]
    fn neighbors_and_degree() {
        let net = triangle_net();
        let g = &net.social;
        assert_eq!(*g.neighbors(SocialNodeId(1)).unwrap(), ids(&[2, 3]));
        assert_eq!(*g.neighbors(SocialNodeId(4)).unwrap(), ids(&[]));
        assert!(matches!(
            g.neighbors(SocialNodeId(99)),
            Err(GraphError::SocialNodeNotFound(SocialNodeId(99)))
        ));
        assert_eq!(g.degree(SocialNodeId(1)).unwrap(), 2);
        assert_eq!(g.degree(SocialNodeId(4)).unwrap(), 0);
        assert!(g.degree(SocialNodeId(99)).is_err());
    }

    #[test]
    fn star_center_degree() {
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0)],
            edges: vec![],
        };
        let social = SocialNetworkData {
            nodes: (0..5).map(|i| social_node(i, 1, &[])).collect(),
            edges: (1..5).map(|i| (SocialNodeId(0), SocialNodeId(i))).collect(),
        };
        let net = Network::from_parts(road, social).unwrap();
        assert_eq!(net.social.degree(SocialNodeId(0)).unwrap(), 4);
    }

    #[test]
    fn validate_reports_violations() {
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0)],
            edges: vec![(RoadNodeId(1), RoadNodeId(2), vec![(0.0, 1.0)])],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 7, &[])],
            edges: vec![],
        };
        let report = validate(&road, &social);
        assert_eq!(report.violations.len(), 2);
        assert!(report
            .violations
            .contains(&Violation::DanglingRoadEdge { u: RoadNodeId(1), v: RoadNodeId(2) }));
        assert!(report.violations.contains(&Violation::MissingLocation {
            node: SocialNodeId(1),
            location: RoadNodeId(7),
        }));
    }

    #[test]
    fn validate_reports_duplicates_and_self_loops() {
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0), road_node(1, 1.0, 1.0)],
            edges: vec![(RoadNodeId(1), RoadNodeId(1), vec![(0.0, 1.0)])],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(2, 1, &[]), social_node(2, 1, &[])],
            edges: vec![(SocialNodeId(2), SocialNodeId(2))],
        };
        let report = validate(&road, &social);
        assert!(report.violations.contains(&Violation::DuplicateRoadNode(RoadNodeId(1))));
        assert!(report.violations.contains(&Violation::RoadSelfLoop(RoadNodeId(1))));
        assert!(report
            .violations
            .contains(&Violation::DuplicateSocialNode(SocialNodeId(2))));
        assert!(report.violations.contains(&Violation::SocialSelfLoop(SocialNodeId(2))));
        assert!(Network::from_parts(road, social).is_err());
    }

    #[test]
    fn validate_reports_bad_breakpoints() {
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0), road_node(2, 1.0, 0.0)],
            edges: vec![(
                RoadNodeId(1),
                RoadNodeId(2),
                vec![(5.0, 1.0), (5.0, 2.0)],
            )],
        };
        let report = validate(&road, &SocialNetworkData::default());
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::BadWeight { reason: WeightError::NonIncreasingTime(1), .. }
        ));
    }

    #[test]
    fn valid_network_has_empty_report() {
        let net = triangle_net();
        assert_eq!(net.social.node_count(), 4);
        assert_eq!(net.social.edge_count(), 3);
    }

    #[test]
    fn neighbors_symmetry_and_degree_consistency() {
        let net = triangle_net();
        let g = &net.social;
        for a in g.node_ids() {
            for &b in g.neighbors(a).unwrap() {
                assert!(g.neighbors(b).unwrap().contains(&a));
            }
            assert_eq!(g.degree(a).unwrap(), g.neighbors(a).unwrap().len());
        }
    }

    #[test]
    fn query_validation() {
        let net = triangle_net();
        let kw: BTreeSet<String> = ["x".to_string()].into();
        assert!(Query::new(&net, SocialNodeId(1), 2, kw.clone(), RoadNodeId(1), 0.0).is_ok());
        assert!(matches!(
            Query::new(&net, SocialNodeId(9), 2, kw.clone(), RoadNodeId(1), 0.0),
            Err(QueryError::UnknownQueryNode(_))
        ));
        assert!(matches!(
            Query::new(&net, SocialNodeId(1), 2, kw.clone(), RoadNodeId(9), 0.0),
            Err(QueryError::UnknownLocation(_))
        ));
        assert!(matches!(
            Query::new(&net, SocialNodeId(1), 0, kw.clone(), RoadNodeId(1), 0.0),
            Err(QueryError::BadK)
        ));
        assert!(matches!(
            Query::new(&net, SocialNodeId(1), 2, BTreeSet::new(), RoadNodeId(1), 0.0),
            Err(QueryError::EmptyKeywords)
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn weight_strategy() -> impl Strategy<Value = TimeDependentWeight> {
            // Gaps of at least 1 minute keep slopes bounded.
            proptest::collection::vec((1.0f64..50.0, 0.1f64..100.0), 1..6).prop_map(|gaps| {
                let mut t = 0.0;
                let bps = gaps
                    .into_iter()
                    .map(|(gap, w)| {
                        t += gap;
                        (t, w)
                    })
                    .collect();
                TimeDependentWeight::new(bps).unwrap()
            })
        }

        proptest! {
            #[test]
            fn eval_stays_between_bracketing_breakpoints(w in weight_strategy(), t in -100.0f64..1100.0) {
                let out = w.eval(t);
                let bps = w.breakpoints();
                let lo = bps.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
                let hi = bps.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out >= lo - 1e-12 && out <= hi + 1e-12);
                // Between two consecutive breakpoints the value is within their range.
                for pair in bps.windows(2) {
                    let (t0, w0) = pair[0];
                    let (t1, w1) = pair[1];
                    if t >= t0 && t <= t1 {
                        prop_assert!(out >= w0.min(w1) - 1e-12 && out <= w0.max(w1) + 1e-12);
                    }
                }
            }

            #[test]
            fn eval_is_continuous_at_breakpoints(w in weight_strategy()) {
                for &(t, v) in w.breakpoints() {
                    let eps = 1e-7;
                    prop_assert!((w.eval(t) - v).abs() < 1e-9);
                    prop_assert!((w.eval(t - eps) - v).abs() < 1e-2);
                    prop_assert!((w.eval(t + eps) - v).abs() < 1e-2);
                }
            }
        }
    }
}
