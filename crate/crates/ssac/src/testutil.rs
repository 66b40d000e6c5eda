//! Shared helpers for unit tests: tiny hand-built networks and stores.

use std::collections::BTreeSet;

use crate::model::{
    Network, RoadNetworkData, RoadNode, RoadNodeId, SocialNetworkData, SocialNode, SocialNodeId,
};

pub fn road_node(id: u64, x: f64, y: f64) -> RoadNode {
    RoadNode {
        id: RoadNodeId(id),
        x,
        y,
    }
}

pub fn social_node(id: u64, loc: u64, kws: &[&str]) -> SocialNode {
    SocialNode {
        id: SocialNodeId(id),
        keywords: kws.iter().map(|s| s.to_string()).collect(),
        location: RoadNodeId(loc),
    }
}

pub fn sids(v: &[u64]) -> BTreeSet<SocialNodeId> {
    v.iter().map(|&i| SocialNodeId(i)).collect()
}

pub fn kwset(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// A social graph over the given edges, with every node placed on road node
/// 1 of a single-node road network. Node ids are inferred from the edges and
/// the extra `isolated` list; keywords are empty.
pub fn social_only(edges: &[(u64, u64)], isolated: &[u64]) -> Network {
    let mut ids: BTreeSet<u64> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.extend(isolated);
    let road = RoadNetworkData {
        nodes: vec![road_node(1, 0.0, 0.0)],
        edges: vec![],
    };
    let social = SocialNetworkData {
        nodes: ids.into_iter().map(|i| social_node(i, 1, &[])).collect(),
        edges: edges
            .iter()
            .map(|&(u, v)| (SocialNodeId(u), SocialNodeId(v)))
            .collect(),
    };
    Network::from_parts(road, social).unwrap()
}

/// A road-only network: nodes as (id, x, y), edges as (u, v, breakpoints).
pub fn road_only(nodes: &[(u64, f64, f64)], edges: &[(u64, u64, &[(f64, f64)])]) -> Network {
    let road = RoadNetworkData {
        nodes: nodes.iter().map(|&(id, x, y)| road_node(id, x, y)).collect(),
        edges: edges
            .iter()
            .map(|&(u, v, bps)| (RoadNodeId(u), RoadNodeId(v), bps.to_vec()))
            .collect(),
    };
    let first = nodes[0].0;
    let social = SocialNetworkData {
        nodes: vec![social_node(0, first, &[])],
        edges: vec![],
    };
    Network::from_parts(road, social).unwrap()
}
