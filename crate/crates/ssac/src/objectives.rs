//! Community scoring: the two-objective pair, min-max normalization,
//! community Manhattan distance, dominance, and the node-expansion score.
//!
//! A community is scored by `K` (semantic similarity to the query keywords;
//! higher is better) and `T` (negated average travel time to the query
//! location; higher is better). Both objectives are maximized. To compare a
//! set of communities, each objective is min-max normalized over that set so
//! the best value maps to 0 and the worst to 1, and the Manhattan distance
//! `MD = K' + T'` ranks them — lower is better. Normalization always names
//! its comparison set explicitly: the candidate set, the expansion round, or
//! the search history.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GraphError, Network, Query, SocialNodeId};
use crate::routing::{DistanceCache, HeuristicMode, RoutingError, WeightPolicy};
use crate::semantics::{cosine, EmbeddingStore, EmbeddingVector, SemanticsError};

/// Objective values of one community: semantic similarity `K` and negated
/// average travel time `T`. Both maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub k_value: f64,
    pub t_value: f64,
}

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("member {member} cannot reach the query location: {source}")]
    MemberUnreachable {
        member: SocialNodeId,
        source: RoutingError,
    },
    #[error("community is empty")]
    EmptyCommunity,
}

/// `true` iff `a` dominates `b`: at least as good in both objectives and
/// strictly better in at least one.
pub fn dominates(a: ObjectivePair, b: ObjectivePair) -> bool {
    a.k_value >= b.k_value
        && a.t_value >= b.t_value
        && (a.k_value > b.k_value || a.t_value > b.t_value)
}

/// Min-max normalization of maximization objectives: the largest value maps
/// to 0, the smallest to 1. A constant list maps to all zeros.
pub fn normalize_max(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![0.0; values.len()];
    }
    values.iter().map(|&v| (v - max) / (min - max)).collect()
}

/// Per-objective (min, max) over an explicit comparison set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationBounds {
    pub k_min: f64,
    pub k_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl NormalizationBounds {
    pub fn from_pairs<I: IntoIterator<Item = ObjectivePair>>(pairs: I) -> Option<Self> {
        let mut iter = pairs.into_iter();
        let first = iter.next()?;
        let mut b = Self {
            k_min: first.k_value,
            k_max: first.k_value,
            t_min: first.t_value,
            t_max: first.t_value,
        };
        for p in iter {
            b.extend(p);
        }
        Some(b)
    }

    pub fn extend(&mut self, p: ObjectivePair) {
        self.k_min = self.k_min.min(p.k_value);
        self.k_max = self.k_max.max(p.k_value);
        self.t_min = self.t_min.min(p.t_value);
        self.t_max = self.t_max.max(p.t_value);
    }

    fn norm(min: f64, max: f64, v: f64) -> f64 {
        if min == max {
            0.0
        } else {
            (v - max) / (min - max)
        }
    }

    /// Manhattan distance of `p` under these bounds; in [0, 2] for pairs
    /// inside the bounds.
    pub fn md(&self, p: ObjectivePair) -> f64 {
        Self::norm(self.k_min, self.k_max, p.k_value) + Self::norm(self.t_min, self.t_max, p.t_value)
    }
}

/// Manhattan distances of a list of pairs, normalized over that list.
pub fn manhattan_md(pairs: &[ObjectivePair]) -> Vec<f64> {
    match NormalizationBounds::from_pairs(pairs.iter().copied()) {
        Some(b) => pairs.iter().map(|&p| b.md(p)).collect(),
        None => Vec::new(),
    }
}

/// Semantic similarity objective `K` for a member set: community-level
/// cosine plus the average best keyword similarity of the members.
pub fn k_objective(
    net: &Network,
    store: &EmbeddingStore,
    members: &BTreeSet<SocialNodeId>,
    query_keywords: &BTreeSet<String>,
) -> Result<f64, ObjectiveError> {
    if members.is_empty() {
        return Err(ObjectiveError::EmptyCommunity);
    }
    let query_vec = store.query_vector(query_keywords)?;
    let community_vec = store.community_vector(members.iter())?;
    let community_term = cosine(&community_vec, &query_vec)?;

    let mut node_term = 0.0;
    for &v in members {
        let node = net
            .social
            .node(v)
            .ok_or(GraphError::SocialNodeNotFound(v))?;
        node_term += store.node_best_keyword_sim(&node.keywords, query_keywords)?;
    }
    Ok(community_term + node_term / members.len() as f64)
}

/// Time objective `T` for a member set: the negated mean travel time from
/// each member's location to the cache's query location.
pub fn t_objective(
    net: &Network,
    dist: &DistanceCache,
    members: &BTreeSet<SocialNodeId>,
) -> Result<f64, ObjectiveError> {
    if members.is_empty() {
        return Err(ObjectiveError::EmptyCommunity);
    }
    let mut sum = 0.0;
    for &v in members {
        let node = net
            .social
            .node(v)
            .ok_or(GraphError::SocialNodeNotFound(v))?;
        let tt = dist
            .travel_time(&net.road, node.location)
            .map_err(|source| ObjectiveError::MemberUnreachable { member: v, source })?;
        sum += tt;
    }
    Ok(-sum / members.len() as f64)
}

/// Hop distances from the query node, grown one BFS ring at a time so a
/// search that stays local never scans the whole graph.
struct HopCache {
    hops: HashMap<SocialNodeId, u32>,
    frontier: VecDeque<SocialNodeId>,
    depth: u32,
}

impl HopCache {
    fn new(q: SocialNodeId) -> Self {
        Self {
            hops: HashMap::from([(q, 0)]),
            frontier: VecDeque::from([q]),
            depth: 0,
        }
    }

    fn hop(&mut self, net: &Network, n: SocialNodeId) -> Option<u32> {
        while !self.hops.contains_key(&n) && !self.frontier.is_empty() {
            self.depth += 1;
            let mut next = VecDeque::new();
            for &u in &self.frontier {
                for &v in net.social.neighbors(u).expect("BFS over existing nodes") {
                    if !self.hops.contains_key(&v) {
                        self.hops.insert(v, self.depth);
                        next.push_back(v);
                    }
                }
            }
            self.frontier = next;
        }
        self.hops.get(&n).copied()
    }
}

/// Shared per-query state: the query vector, travel-time memo, hop cache,
/// and per-node similarity memos. Holds only immutable references to the
/// network and store; the memos take interior locks so candidate
/// evaluations may run concurrently.
pub struct QueryContext<'a> {
    pub net: &'a Network,
    pub store: &'a EmbeddingStore,
    pub query: &'a Query,
    pub query_vec: EmbeddingVector,
    pub dist: DistanceCache,
    hops: Mutex<HopCache>,
    best_sim: Mutex<HashMap<SocialNodeId, f64>>,
    node_sim: Mutex<HashMap<SocialNodeId, f64>>,
    touched: Mutex<BTreeSet<SocialNodeId>>,
}

impl<'a> QueryContext<'a> {
    pub fn new(
        net: &'a Network,
        store: &'a EmbeddingStore,
        query: &'a Query,
        mode: HeuristicMode,
        policy: WeightPolicy,
    ) -> Result<Self, ObjectiveError> {
        let query_vec = store.query_vector(&query.keywords)?;
        Ok(Self {
            net,
            store,
            query,
            query_vec,
            dist: DistanceCache::new(query.location, query.depart, mode, policy),
            hops: Mutex::new(HopCache::new(query.q)),
            best_sim: Mutex::new(HashMap::new()),
            node_sim: Mutex::new(HashMap::new()),
            touched: Mutex::new(BTreeSet::new()),
        })
    }

    pub fn touch(&self, n: SocialNodeId) {
        self.touched.lock().unwrap().insert(n);
    }

    /// Distinct social nodes examined so far: the union of hop-BFS visits
    /// and every node whose attributes were evaluated.
    pub fn touched_count(&self) -> usize {
        let hops = self.hops.lock().unwrap();
        let touched = self.touched.lock().unwrap();
        let extra = touched.iter().filter(|n| !hops.hops.contains_key(n)).count();
        hops.hops.len() + extra
    }

    /// Travel time from a member's location to the query location.
    pub fn member_travel_time(&self, v: SocialNodeId) -> Result<f64, ObjectiveError> {
        let node = self
            .net
            .social
            .node(v)
            .ok_or(GraphError::SocialNodeNotFound(v))?;
        self.dist
            .travel_time(&self.net.road, node.location)
            .map_err(|source| ObjectiveError::MemberUnreachable { member: v, source })
    }

    fn member_travel_time_opt(&self, v: SocialNodeId) -> Result<Option<f64>, ObjectiveError> {
        match self.member_travel_time(v) {
            Ok(tt) => Ok(Some(tt)),
            Err(ObjectiveError::MemberUnreachable {
                source: RoutingError::NoRoute { .. },
                ..
            }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Best keyword-level similarity of `v` against the query keywords.
    pub fn best_sim(&self, v: SocialNodeId) -> Result<f64, ObjectiveError> {
        if let Some(&hit) = self.best_sim.lock().unwrap().get(&v) {
            return Ok(hit);
        }
        let node = self
            .net
            .social
            .node(v)
            .ok_or(GraphError::SocialNodeNotFound(v))?;
        let sim = self
            .store
            .node_best_keyword_sim(&node.keywords, &self.query.keywords)?;
        self.best_sim.lock().unwrap().insert(v, sim);
        Ok(sim)
    }

    /// Node-level cosine similarity of `v` against the query vector.
    pub fn node_sim(&self, v: SocialNodeId) -> Result<f64, ObjectiveError> {
        if let Some(&hit) = self.node_sim.lock().unwrap().get(&v) {
            return Ok(hit);
        }
        let vec = self.store.node_vector(v)?;
        let sim = cosine(vec, &self.query_vec)?;
        self.node_sim.lock().unwrap().insert(v, sim);
        Ok(sim)
    }

    pub fn hop(&self, n: SocialNodeId) -> Option<u32> {
        self.hops.lock().unwrap().hop(self.net, n)
    }

    /// Objective pair of a member set, using the per-query memos.
    pub fn pair(&self, members: &BTreeSet<SocialNodeId>) -> Result<ObjectivePair, ObjectiveError> {
        if members.is_empty() {
            return Err(ObjectiveError::EmptyCommunity);
        }
        let community_vec = self.store.community_vector(members.iter())?;
        let community_term = cosine(&community_vec, &self.query_vec)?;
        let mut node_term = 0.0;
        let mut travel_sum = 0.0;
        for &v in members {
            self.touch(v);
            node_term += self.best_sim(v)?;
            travel_sum += self.member_travel_time(v)?;
        }
        let n = members.len() as f64;
        Ok(ObjectivePair {
            k_value: community_term + node_term / n,
            t_value: -travel_sum / n,
        })
    }
}

/// Node-expansion scores for a frontier around community `c`: combines
/// structural attachment, semantic similarity, and travel time, each
/// normalized across the frontier. Lower is better.
///
/// Frontier nodes that cannot reach the query location are assigned the
/// largest finite travel time in the frontier, penalizing them maximally
/// without excluding them.
pub fn ne_score(
    ctx: &QueryContext<'_>,
    frontier: &BTreeSet<SocialNodeId>,
    community: &BTreeSet<SocialNodeId>,
) -> Result<BTreeMap<SocialNodeId, f64>, ObjectiveError> {
    if frontier.is_empty() {
        return Ok(BTreeMap::new());
    }

    let nodes: Vec<SocialNodeId> = frontier.iter().copied().collect();
    let mut y1 = Vec::with_capacity(nodes.len());
    let mut y2 = Vec::with_capacity(nodes.len());
    let mut d_raw: Vec<Option<f64>> = Vec::with_capacity(nodes.len());

    for &n in &nodes {
        ctx.touch(n);
        // Frontier nodes border the community, which contains q, so a hop
        // count exists whenever the caller's preconditions hold.
        let h = ctx.hop(n).unwrap_or(1_000_000) as f64;
        let attached = ctx
            .net
            .social
            .neighbors(n)?
            .intersection(community)
            .count() as f64;
        y1.push((1.0 + 1.0 / (1.0 + h).powi(2)) * attached);
        y2.push(ctx.node_sim(n)?);
        d_raw.push(ctx.member_travel_time_opt(n)?);
    }

    let max_finite = d_raw
        .iter()
        .filter_map(|d| *d)
        .fold(f64::NEG_INFINITY, f64::max);
    let fill = if max_finite.is_finite() { max_finite } else { 0.0 };
    let d: Vec<f64> = d_raw.iter().map(|v| v.unwrap_or(fill)).collect();

    let y1n = normalize_max(&y1);
    let y2n = normalize_max(&y2);
    let dn = normalize_max(&d);

    Ok(nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, y1n[i] + y2n[i] - dn[i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, RoadNetworkData, RoadNodeId, SocialNetworkData};
    use crate::testutil::{kwset, road_node, sids, social_node};

    fn pair(k: f64, t: f64) -> ObjectivePair {
        ObjectivePair {
            k_value: k,
            t_value: t,
        }
    }

    #[test]
    fn dominates_examples() {
        assert!(dominates(pair(0.7, -8.0), pair(0.5, -10.0)));
        assert!(!dominates(pair(0.7, -12.0), pair(0.5, -10.0)));
        assert!(!dominates(pair(0.5, -10.0), pair(0.5, -10.0)));
        // Equal in one objective, better in the other still dominates.
        assert!(dominates(pair(0.7, -10.0), pair(0.5, -10.0)));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_max(&[0.2, 0.8]), vec![1.0, 0.0]);
        assert_eq!(normalize_max(&[0.5, 0.5, 0.5]), vec![0.0, 0.0, 0.0]);
        assert_eq!(normalize_max(&[-20.0, -5.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn manhattan_md_examples() {
        let mds = manhattan_md(&[pair(0.8, -5.0), pair(0.2, -20.0)]);
        assert_eq!(mds, vec![0.0, 2.0]);

        assert_eq!(manhattan_md(&[pair(1.0, -3.0)]), vec![0.0]);

        let mds = manhattan_md(&[pair(0.5, -10.0), pair(0.5, -10.0)]);
        assert_eq!(mds, vec![0.0, 0.0]);
    }

    /// Network with two members holding one keyword each, for the hand-worked
    /// semantic objective case.
    fn k_objective_fixture() -> (Network, EmbeddingStore) {
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0)],
            edges: vec![],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 1, &["ka"]), social_node(2, 1, &["kb"])],
            edges: vec![(SocialNodeId(1), SocialNodeId(2))],
        };
        let net = Network::from_parts(road, social).unwrap();
        let mut store = EmbeddingStore::new(2);
        // Node-level vectors at 60° from the query direction: community
        // cosine 0.5. Keyword vectors give best sims 0.6 and 0.8.
        let sqrt3_2 = 3.0f64.sqrt() / 2.0;
        store
            .insert_node(SocialNodeId(1), EmbeddingVector(vec![0.5, sqrt3_2]))
            .unwrap();
        store
            .insert_node(SocialNodeId(2), EmbeddingVector(vec![0.5, sqrt3_2]))
            .unwrap();
        store
            .insert_keyword("ka", EmbeddingVector(vec![0.6, 0.8]))
            .unwrap();
        store
            .insert_keyword("kb", EmbeddingVector(vec![0.8, 0.6]))
            .unwrap();
        store
            .insert_keyword("kq", EmbeddingVector(vec![1.0, 0.0]))
            .unwrap();
        (net, store)
    }

    #[test]
    fn k_objective_hand_worked() {
        let (net, store) = k_objective_fixture();
        let k = k_objective(&net, &store, &sids(&[1, 2]), &kwset(&["kq"])).unwrap();
        assert!((k - 1.2).abs() < 1e-12, "got {k}");
    }

    #[test]
    fn k_objective_extremes() {
        // Every member's vectors identical to the query's: both terms maximal.
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0)],
            edges: vec![],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 1, &["x"]), social_node(2, 1, &["x"])],
            edges: vec![],
        };
        let net = Network::from_parts(road, social).unwrap();
        let mut store = EmbeddingStore::new(2);
        store
            .insert_keyword("x", EmbeddingVector(vec![1.0, 0.0]))
            .unwrap();
        store.ensure_node_vectors(&net.social).unwrap();
        let k = k_objective(&net, &store, &sids(&[1, 2]), &kwset(&["x"])).unwrap();
        assert!((k - 2.0).abs() < 1e-12);

        // All members keywordless: sentinel cosines everywhere. A stored
        // set vector keeps the query itself resolvable.
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 1, &[]), social_node(2, 1, &[])],
            edges: vec![],
        };
        let net2 = Network::from_parts(
            RoadNetworkData {
                nodes: vec![road_node(1, 0.0, 0.0)],
                edges: vec![],
            },
            social,
        )
        .unwrap();
        let mut store2 = EmbeddingStore::new(2);
        let kws = kwset(&["y"]);
        store2
            .insert_set(
                crate::semantics::set_key(&kws),
                EmbeddingVector(vec![1.0, 0.0]),
            )
            .unwrap();
        store2.ensure_node_vectors(&net2.social).unwrap();
        let k = k_objective(&net2, &store2, &sids(&[1, 2]), &kws).unwrap();
        assert_eq!(k, 0.0);
    }

    /// Straight-line road with constant travel times 2, 4, and 9 minutes
    /// from three member locations to the query location at node 10.
    fn t_objective_fixture() -> Network {
        const W2: &[(f64, f64)] = &[(0.0, 2.0)];
        const W4: &[(f64, f64)] = &[(0.0, 4.0)];
        const W9: &[(f64, f64)] = &[(0.0, 9.0)];
        let road = RoadNetworkData {
            nodes: vec![
                road_node(10, 0.0, 0.0),
                road_node(11, 1.0, 0.0),
                road_node(12, 0.0, 1.0),
                road_node(13, 0.0, -1.0),
            ],
            edges: vec![
                (RoadNodeId(11), RoadNodeId(10), W2.to_vec()),
                (RoadNodeId(12), RoadNodeId(10), W4.to_vec()),
                (RoadNodeId(13), RoadNodeId(10), W9.to_vec()),
            ],
        };
        let social = SocialNetworkData {
            nodes: vec![
                social_node(1, 11, &[]),
                social_node(2, 12, &[]),
                social_node(3, 13, &[]),
                social_node(4, 10, &[]),
            ],
            edges: vec![],
        };
        Network::from_parts(road, social).unwrap()
    }

    #[test]
    fn t_objective_examples() {
        let net = t_objective_fixture();
        let cache = DistanceCache::new(
            RoadNodeId(10),
            0.0,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        );
        // Members at travel times 2 and... (4+6)/2 = 5 → use members 1,2: (2+4)/2 = 3.
        let t = t_objective(&net, &cache, &sids(&[1, 2])).unwrap();
        assert!((t - (-3.0)).abs() < 1e-12);

        // Single member co-located with the query location.
        let t = t_objective(&net, &cache, &sids(&[4])).unwrap();
        assert_eq!(t, 0.0);

        // Members at times 2, 4, 9: mean 5.
        let t = t_objective(&net, &cache, &sids(&[1, 2, 3])).unwrap();
        assert!((t - (-5.0)).abs() < 1e-12);
    }

    #[test]
    fn t_objective_mean_with_sign_flip() {
        // Travel times 4 and 6 → −5.
        const W4: &[(f64, f64)] = &[(0.0, 4.0)];
        const W6: &[(f64, f64)] = &[(0.0, 6.0)];
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0), road_node(2, 1.0, 0.0), road_node(3, 2.0, 0.0)],
            edges: vec![
                (RoadNodeId(2), RoadNodeId(1), W4.to_vec()),
                (RoadNodeId(3), RoadNodeId(1), W6.to_vec()),
            ],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 2, &[]), social_node(2, 3, &[])],
            edges: vec![],
        };
        let net = Network::from_parts(road, social).unwrap();
        let cache = DistanceCache::new(
            RoadNodeId(1),
            0.0,
            HeuristicMode::None,
            WeightPolicy::ArrivalTime,
        );
        let t = t_objective(&net, &cache, &sids(&[1, 2])).unwrap();
        assert!((t - (-5.0)).abs() < 1e-12);
    }

    #[test]
    fn t_objective_unreachable_member_names_it() {
        const W2: &[(f64, f64)] = &[(0.0, 2.0)];
        let road = RoadNetworkData {
            nodes: vec![road_node(1, 0.0, 0.0), road_node(2, 1.0, 0.0), road_node(3, 9.0, 9.0)],
            edges: vec![(RoadNodeId(2), RoadNodeId(1), W2.to_vec())],
        };
        let social = SocialNetworkData {
            nodes: vec![social_node(1, 2, &[]), social_node(2, 3, &[])],
            edges: vec![],
        };
        let net = Network::from_parts(road, social).unwrap();
        let cache = DistanceCache::new(
            RoadNodeId(1),
            0.0,
            HeuristicMode::None,
            WeightPolicy::ArrivalTime,
        );
        match t_objective(&net, &cache, &sids(&[1, 2])) {
            Err(ObjectiveError::MemberUnreachable { member, .. }) => {
                assert_eq!(member, SocialNodeId(2));
            }
            other => panic!("expected MemberUnreachable, got {other:?}"),
        }
    }

    /// Hand-worked frontier: n1 attaches twice at hop 1 with high similarity
    /// but the larger travel time; n2 attaches once with low similarity and
    /// the smaller travel time.
    fn ne_fixture() -> (Network, EmbeddingStore) {
        const W4: &[(f64, f64)] = &[(0.0, 4.0)];
        const W2: &[(f64, f64)] = &[(0.0, 2.0)];
        let road = RoadNetworkData {
            nodes: vec![
                road_node(1, 0.0, 0.0),
                road_node(2, 1.0, 0.0),
                road_node(3, 0.0, 1.0),
            ],
            edges: vec![
                (RoadNodeId(2), RoadNodeId(1), W4.to_vec()),
                (RoadNodeId(3), RoadNodeId(1), W2.to_vec()),
            ],
        };
        // c = {10, 11}; frontier n1=20 (adjacent to both), n2=21 (adjacent to q only).
        let social = SocialNetworkData {
            nodes: vec![
                social_node(10, 1, &[]),
                social_node(11, 1, &[]),
                social_node(20, 2, &[]),
                social_node(21, 3, &[]),
            ],
            edges: vec![
                (SocialNodeId(10), SocialNodeId(11)),
                (SocialNodeId(20), SocialNodeId(10)),
                (SocialNodeId(20), SocialNodeId(11)),
                (SocialNodeId(21), SocialNodeId(10)),
            ],
        };
        let net = Network::from_parts(road, social).unwrap();
        let mut store = EmbeddingStore::new(2);
        store
            .insert_node(SocialNodeId(10), EmbeddingVector(vec![1.0, 0.0]))
            .unwrap();
        store
            .insert_node(SocialNodeId(11), EmbeddingVector(vec![1.0, 0.0]))
            .unwrap();
        store
            .insert_node(
                SocialNodeId(20),
                EmbeddingVector(vec![0.9, (1.0f64 - 0.81).sqrt()]),
            )
            .unwrap();
        store
            .insert_node(
                SocialNodeId(21),
                EmbeddingVector(vec![0.3, (1.0f64 - 0.09).sqrt()]),
            )
            .unwrap();
        store
            .insert_keyword("kq", EmbeddingVector(vec![1.0, 0.0]))
            .unwrap();
        (net, store)
    }

    #[test]
    fn ne_score_hand_worked() {
        let (net, store) = ne_fixture();
        let query = Query::new(
            &net,
            SocialNodeId(10),
            1,
            kwset(&["kq"]),
            RoadNodeId(1),
            0.0,
        )
        .unwrap();
        let ctx = QueryContext::new(
            &net,
            &store,
            &query,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        )
        .unwrap();

        let community = sids(&[10, 11]);
        let frontier = sids(&[20, 21]);
        let ne = ne_score(&ctx, &frontier, &community).unwrap();

        // y1(n1) = (1 + 1/4)·2 = 2.5, y1(n2) = (1 + 1/4)·1 = 1.25.
        // After frontier normalization: NE(n1) = 0, NE(n2) = 1.
        assert!((ne[&SocialNodeId(20)] - 0.0).abs() < 1e-12);
        assert!((ne[&SocialNodeId(21)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ne_score_single_node_frontier_is_zero() {
        let (net, store) = ne_fixture();
        let query = Query::new(
            &net,
            SocialNodeId(10),
            1,
            kwset(&["kq"]),
            RoadNodeId(1),
            0.0,
        )
        .unwrap();
        let ctx = QueryContext::new(
            &net,
            &store,
            &query,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        )
        .unwrap();
        let ne = ne_score(&ctx, &sids(&[20]), &sids(&[10, 11])).unwrap();
        assert_eq!(ne[&SocialNodeId(20)], 0.0);
    }

    #[test]
    fn ne_score_shift_invariance_under_constant_distance_offset() {
        // Doubling every travel time through a slower network scales d by a
        // positive affine map, which the normalization cancels.
        let (net, store) = ne_fixture();
        let query = Query::new(
            &net,
            SocialNodeId(10),
            1,
            kwset(&["kq"]),
            RoadNodeId(1),
            0.0,
        )
        .unwrap();
        let ctx = QueryContext::new(
            &net,
            &store,
            &query,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        )
        .unwrap();
        let ne1 = ne_score(&ctx, &sids(&[20, 21]), &sids(&[10, 11])).unwrap();

        // Same fixture with +3 minutes on both member-to-target edges.
        const W7: &[(f64, f64)] = &[(0.0, 7.0)];
        const W5: &[(f64, f64)] = &[(0.0, 5.0)];
        let road = RoadNetworkData {
            nodes: vec![
                road_node(1, 0.0, 0.0),
                road_node(2, 1.0, 0.0),
                road_node(3, 0.0, 1.0),
            ],
            edges: vec![
                (RoadNodeId(2), RoadNodeId(1), W7.to_vec()),
                (RoadNodeId(3), RoadNodeId(1), W5.to_vec()),
            ],
        };
        let social = SocialNetworkData {
            nodes: vec![
                social_node(10, 1, &[]),
                social_node(11, 1, &[]),
                social_node(20, 2, &[]),
                social_node(21, 3, &[]),
            ],
            edges: vec![
                (SocialNodeId(10), SocialNodeId(11)),
                (SocialNodeId(20), SocialNodeId(10)),
                (SocialNodeId(20), SocialNodeId(11)),
                (SocialNodeId(21), SocialNodeId(10)),
            ],
        };
        let net2 = Network::from_parts(road, social).unwrap();
        let query2 = Query::new(
            &net2,
            SocialNodeId(10),
            1,
            kwset(&["kq"]),
            RoadNodeId(1),
            0.0,
        )
        .unwrap();
        let ctx2 = QueryContext::new(
            &net2,
            &store,
            &query2,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        )
        .unwrap();
        let ne2 = ne_score(&ctx2, &sids(&[20, 21]), &sids(&[10, 11])).unwrap();

        for (k, v) in &ne1 {
            assert!((v - ne2[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn ne_score_unreachable_gets_worst_distance() {
        // n2's location is disconnected: it must receive the frontier's
        // worst normalized distance value, not the best.
        const W4: &[(f64, f64)] = &[(0.0, 4.0)];
        let road = RoadNetworkData {
            nodes: vec![
                road_node(1, 0.0, 0.0),
                road_node(2, 1.0, 0.0),
                road_node(3, 5.0, 5.0),
            ],
            edges: vec![(RoadNodeId(2), RoadNodeId(1), W4.to_vec())],
        };
        let social = SocialNetworkData {
            nodes: vec![
                social_node(10, 1, &[]),
                social_node(20, 2, &[]),
                social_node(21, 3, &[]),
                social_node(22, 1, &[]),
            ],
            edges: vec![
                (SocialNodeId(10), SocialNodeId(20)),
                (SocialNodeId(10), SocialNodeId(21)),
                (SocialNodeId(10), SocialNodeId(22)),
            ],
        };
        let net = Network::from_parts(road, social).unwrap();
        let mut store = EmbeddingStore::with_hash_fallback(4, 0);
        store.ensure_node_vectors(&net.social).unwrap();
        let query = Query::new(&net, SocialNodeId(10), 1, kwset(&["kq"]), RoadNodeId(1), 0.0)
            .unwrap();
        let ctx = QueryContext::new(
            &net,
            &store,
            &query,
            HeuristicMode::Admissible,
            WeightPolicy::ArrivalTime,
        )
        .unwrap();
        // Frontier: 20 (4 min), 21 (unreachable), 22 (0 min, co-located).
        let ne = ne_score(&ctx, &sids(&[20, 21, 22]), &sids(&[10])).unwrap();
        // All three share y1 and the unreachable node ties with the slowest
        // reachable one on distance. With equal structure, NE orders by
        // semantics minus distance; just pin the distance component: the
        // worst normalized distance is 0 (maximization form), best is 1.
        // 22 is closest → d̃ = 1; 20 and 21 share the max → d̃ = 0.
        // Subtracting d̃ means 22 gains the −1 bonus.
        let sim = |v: u64| ctx.node_sim(SocialNodeId(v)).unwrap();
        let y2 = normalize_max(&[sim(20), sim(21), sim(22)]);
        assert!((ne[&SocialNodeId(20)] - (y2[0] - 0.0)).abs() < 1e-12);
        assert!((ne[&SocialNodeId(21)] - (y2[1] - 0.0)).abs() < 1e-12);
        assert!((ne[&SocialNodeId(22)] - (y2[2] - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn k_objective_stays_in_range() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let n = rng.random_range(1..=8u64);
            let net = crate::testutil::social_only(&[], &(1..=n).collect::<Vec<_>>());
            let mut store = EmbeddingStore::with_hash_fallback(8, trial);
            store.ensure_node_vectors(&net.social).unwrap();
            let members: BTreeSet<SocialNodeId> =
                (1..=rng.random_range(1..=n)).map(SocialNodeId).collect();
            let k = k_objective(&net, &store, &members, &kwset(&["q1", "q2"])).unwrap();
            assert!((-2.0..=2.0).contains(&k), "trial {trial}: K = {k}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pairs_strategy() -> impl Strategy<Value = Vec<ObjectivePair>> {
            proptest::collection::vec((-5.0f64..5.0, -50.0f64..0.0), 1..12).prop_map(|v| {
                v.into_iter()
                    .map(|(k, t)| ObjectivePair {
                        k_value: k,
                        t_value: t,
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn md_invariant_under_positive_affine_transforms(
                pairs in pairs_strategy(),
                a in 0.01f64..100.0,
                b in -10.0f64..10.0,
            ) {
                let base = manhattan_md(&pairs);
                let transformed: Vec<ObjectivePair> = pairs
                    .iter()
                    .map(|p| ObjectivePair { k_value: a * p.k_value + b, t_value: p.t_value })
                    .collect();
                let trans = manhattan_md(&transformed);
                for (x, y) in base.iter().zip(&trans) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
                let argmin = |v: &[f64]| {
                    v.iter()
                        .enumerate()
                        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                        .map(|(i, _)| i)
                };
                prop_assert_eq!(argmin(&base), argmin(&trans));
            }

            #[test]
            fn md_minimum_is_never_dominated(pairs in pairs_strategy()) {
                let mds = manhattan_md(&pairs);
                let (best, _) = mds
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                    .unwrap();
                for (i, p) in pairs.iter().enumerate() {
                    if i != best {
                        // Require a real margin so float ties in MD cannot
                        // flip the argmin onto a hairline-dominated pair.
                        let margin = (p.k_value - pairs[best].k_value)
                            .max(p.t_value - pairs[best].t_value);
                        prop_assert!(!(dominates(*p, pairs[best]) && margin > 1e-9),
                            "pair {:?} dominates MD-minimum {:?}", p, pairs[best]);
                    }
                }
            }

            #[test]
            fn dominance_is_irreflexive_and_asymmetric(
                k1 in -5.0f64..5.0, t1 in -50.0f64..0.0,
                k2 in -5.0f64..5.0, t2 in -50.0f64..0.0,
            ) {
                let a = ObjectivePair { k_value: k1, t_value: t1 };
                let b = ObjectivePair { k_value: k2, t_value: t2 };
                prop_assert!(!dominates(a, a));
                prop_assert!(!(dominates(a, b) && dominates(b, a)));
            }
        }
    }
}
