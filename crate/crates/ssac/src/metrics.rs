//! Community quality measures and the random-growth comparison baseline.
//!
//! `coe` is the average local clustering coefficient of the community's
//! induced subgraph (named explicitly in output headers, since other
//! clustering variants exist). `t_coe` is the reciprocal of the worst
//! member-to-query-location travel time. `semantic_score` is the mean best
//! keyword similarity of the members against the query keywords — a
//! deterministic, offline stand-in for judge-based semantic scoring, so its
//! absolute values are not comparable across scoring schemes; comparisons
//! here are always relative, between algorithms on the same queries.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{GraphError, Network, SocialNodeId};
use crate::objectives::ObjectiveError;
use crate::routing::DistanceCache;
use crate::semantics::{EmbeddingStore, SemanticsError};

/// Quality measures of one community. `t_coe` is `None` when every member
/// sits exactly at the query location (the reciprocal is infinite); tables
/// print it as `inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub size: usize,
    /// Average local clustering coefficient of the induced subgraph.
    pub coe: f64,
    pub t_coe: Option<f64>,
    pub semantic_score: f64,
}

/// Average local clustering coefficient over the induced subgraph of
/// `members`. Members with fewer than two induced neighbors contribute 0.
pub fn coe(net: &Network, members: &BTreeSet<SocialNodeId>) -> Result<f64, GraphError> {
    if members.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &v in members {
        let inside: Vec<SocialNodeId> = net
            .social
            .neighbors(v)?
            .intersection(members)
            .copied()
            .collect();
        let d = inside.len();
        if d < 2 {
            continue;
        }
        let mut links = 0usize;
        for (i, &a) in inside.iter().enumerate() {
            let a_nbrs = net.social.neighbors(a)?;
            for &b in &inside[i + 1..] {
                if a_nbrs.contains(&b) {
                    links += 1;
                }
            }
        }
        total += 2.0 * links as f64 / (d * (d - 1)) as f64;
    }
    Ok(total / members.len() as f64)
}

/// Reciprocal of the maximum member travel time to the query location.
/// `f64::INFINITY` when all members are already there.
pub fn t_coe(
    net: &Network,
    dist: &DistanceCache,
    members: &BTreeSet<SocialNodeId>,
) -> Result<f64, ObjectiveError> {
    if members.is_empty() {
        return Err(ObjectiveError::EmptyCommunity);
    }
    let mut worst = 0.0f64;
    for &v in members {
        let node = net
            .social
            .node(v)
            .ok_or(GraphError::SocialNodeNotFound(v))?;
        let tt = dist
            .travel_time(&net.road, node.location)
            .map_err(|source| ObjectiveError::MemberUnreachable { member: v, source })?;
        worst = worst.max(tt);
    }
    if worst == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / worst)
    }
}

/// Mean best keyword similarity of the members against the query keywords,
/// clamped to [0, 1].
pub fn semantic_score(
    net: &Network,
    store: &EmbeddingStore,
    members: &BTreeSet<SocialNodeId>,
    query_keywords: &BTreeSet<String>,
) -> Result<f64, SemanticsError> {
    if members.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for &v in members {
        let node = net.social.node(v).expect("members exist");
        sum += store.node_best_keyword_sim(&node.keywords, query_keywords)?;
    }
    Ok((sum / members.len() as f64).clamp(0.0, 1.0))
}

/// Full report for one community.
pub fn report(
    net: &Network,
    store: &EmbeddingStore,
    dist: &DistanceCache,
    members: &BTreeSet<SocialNodeId>,
    query_keywords: &BTreeSet<String>,
) -> Result<MetricsReport, ObjectiveError> {
    let t = t_coe(net, dist, members)?;
    Ok(MetricsReport {
        size: members.len(),
        coe: coe(net, members).map_err(ObjectiveError::Graph)?,
        t_coe: if t.is_finite() { Some(t) } else { None },
        semantic_score: semantic_score(net, store, members, query_keywords)
            .map_err(ObjectiveError::Semantics)?,
    })
}

/// Attribute-blind baseline: grow from the query node by uniformly random
/// frontier picks until `size` members are reached or the component is
/// exhausted. Deterministic for a given seed.
pub fn random_growth_baseline(
    net: &Network,
    q: SocialNodeId,
    size: usize,
    seed: u64,
) -> Result<BTreeSet<SocialNodeId>, GraphError> {
    if !net.social.contains(q) {
        return Err(GraphError::SocialNodeNotFound(q));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = BTreeSet::from([q]);
    while members.len() < size.max(1) {
        let mut frontier: Vec<SocialNodeId> = Vec::new();
        for &m in &members {
            for &n in net.social.neighbors(m)? {
                if !members.contains(&n) {
                    frontier.push(n);
                }
            }
        }
        frontier.sort_unstable();
        frontier.dedup();
        if frontier.is_empty() {
            break;
        }
        let pick = frontier[rng.random_range(0..frontier.len())];
        members.insert(pick);
    }
    Ok(members)
}
