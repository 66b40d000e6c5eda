//! Core decomposition and k-core extraction over induced subgraphs of the
//! social network.
//!
//! A k-core here is a *connected* subgraph in which every node has at least
//! k neighbors inside the subgraph. Extraction peels the working node set
//! down to minimum induced degree ≥ k and then takes the query node's
//! connected component, which yields the maximal k-core containing it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{AttributedSocialNetwork, GraphError, SocialNodeId};

/// Core numbers for every node of a social network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreIndex {
    core_number: BTreeMap<SocialNodeId, u32>,
}

impl CoreIndex {
    pub fn core_number(&self, n: SocialNodeId) -> Option<u32> {
        self.core_number.get(&n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SocialNodeId, u32)> + '_ {
        self.core_number.iter().map(|(&n, &c)| (n, c))
    }

    /// Nodes whose core number is at least `k`.
    pub fn nodes_with_core_at_least(&self, k: u32) -> BTreeSet<SocialNodeId> {
        self.core_number
            .iter()
            .filter(|&(_, &c)| c >= k)
            .map(|(&n, _)| n)
            .collect()
    }
}

/// True iff the induced subgraph on `members` is connected and every member
/// has at least `k` neighbors inside `members`.
pub fn is_kcore(
    g: &AttributedSocialNetwork,
    members: &BTreeSet<SocialNodeId>,
    k: u32,
) -> Result<bool, GraphError> {
    if members.is_empty() {
        return Ok(false);
    }
    for &n in members {
        let degree_inside = g.neighbors(n)?.intersection(members).count();
        if degree_inside < k as usize {
            return Ok(false);
        }
    }
    Ok(is_connected(g, members))
}

fn is_connected(g: &AttributedSocialNetwork, members: &BTreeSet<SocialNodeId>) -> bool {
    let start = match members.first() {
        Some(&n) => n,
        None => return false,
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &m in g.neighbors(n).expect("member checked before connectivity") {
            if members.contains(&m) && seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen.len() == members.len()
}

/// Core decomposition by min-degree peeling.
///
/// Among nodes of equal minimum degree the smallest id is peeled first;
/// core numbers do not depend on that order, but the rule keeps runs
/// reproducible.
pub fn core_decomposition(g: &AttributedSocialNetwork) -> CoreIndex {
    let mut degree: BTreeMap<SocialNodeId, usize> = g
        .node_ids()
        .map(|n| (n, g.degree(n).expect("iterating existing nodes")))
        .collect();
    // (degree, id) ordering gives min degree with smallest-id tie-break.
    let mut remaining: BTreeSet<(usize, SocialNodeId)> =
        degree.iter().map(|(&n, &d)| (d, n)).collect();
    let mut core_number = BTreeMap::new();
    let mut current = 0u32;

    while let Some(&(d, n)) = remaining.first() {
        remaining.remove(&(d, n));
        current = current.max(d as u32);
        core_number.insert(n, current);
        for &m in g.neighbors(n).expect("iterating existing nodes") {
            if let Some(&dm) = degree.get(&m) {
                if core_number.contains_key(&m) {
                    continue;
                }
                remaining.remove(&(dm, m));
                degree.insert(m, dm - 1);
                remaining.insert((dm - 1, m));
            }
        }
        degree.remove(&n);
    }

    CoreIndex { core_number }
}

/// The maximal connected min-degree-≥k subgraph of `members` containing `q`,
/// if one exists: peel `members` to minimum induced degree ≥ k, then take
/// q's connected component.
///
/// Errors if `q` is not in `members`; returns `None` when `q` does not
/// survive peeling.
pub fn extract_kcore_containing(
    g: &AttributedSocialNetwork,
    members: &BTreeSet<SocialNodeId>,
    k: u32,
    q: SocialNodeId,
) -> Result<Option<BTreeSet<SocialNodeId>>, GraphError> {
    if !members.contains(&q) {
        return Err(GraphError::SocialNodeNotFound(q));
    }

    let mut alive = members.clone();
    let mut degree: BTreeMap<SocialNodeId, usize> = BTreeMap::new();
    for &n in &alive {
        degree.insert(n, g.neighbors(n)?.intersection(&alive).count());
    }

    let mut queue: VecDeque<SocialNodeId> = degree
        .iter()
        .filter(|&(_, &d)| d < k as usize)
        .map(|(&n, _)| n)
        .collect();
    while let Some(n) = queue.pop_front() {
        if !alive.remove(&n) {
            continue;
        }
        for &m in g.neighbors(n).expect("peeling existing nodes") {
            if alive.contains(&m) {
                let d = degree.get_mut(&m).expect("alive nodes have degrees");
                *d -= 1;
                if *d < k as usize {
                    queue.push_back(m);
                }
            }
        }
    }

    if !alive.contains(&q) {
        return Ok(None);
    }

    // q's connected component within the surviving set.
    let mut component = BTreeSet::from([q]);
    let mut bfs = VecDeque::from([q]);
    while let Some(n) = bfs.pop_front() {
        for &m in g.neighbors(n).expect("surviving nodes exist") {
            if alive.contains(&m) && component.insert(m) {
                bfs.push_back(m);
            }
        }
    }
    Ok(Some(component))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{sids, social_only};

    fn complete(n: u64) -> Vec<(u64, u64)> {
        let mut edges = Vec::new();
        for u in 1..=n {
            for v in (u + 1)..=n {
                edges.push((u, v));
            }
        }
        edges
    }

    #[test]
    fn is_kcore_examples() {
        let k4 = social_only(&complete(4), &[]);
        assert!(is_kcore(&k4.social, &sids(&[1, 2, 3, 4]), 3).unwrap());
        assert!(is_kcore(&k4.social, &sids(&[1, 2, 3]), 2).unwrap());
        assert!(is_kcore(&k4.social, &sids(&[2, 3, 4]), 2).unwrap());

        let path = social_only(&[(1, 2), (2, 3)], &[]);
        assert!(!is_kcore(&path.social, &sids(&[1, 2, 3]), 2).unwrap());

        // Two triangles that are not connected to each other.
        let two = social_only(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)], &[]);
        assert!(!is_kcore(&two.social, &sids(&[1, 2, 3, 4, 5, 6]), 2).unwrap());

        let unknown = sids(&[1, 2, 99]);
        assert!(is_kcore(&path.social, &unknown, 1).is_err());
    }

    #[test]
    fn core_decomposition_examples() {
        let k4 = social_only(&complete(4), &[]);
        let idx = core_decomposition(&k4.social);
        for (_, c) in idx.iter() {
            assert_eq!(c, 3);
        }

        let star = social_only(&[(0, 1), (0, 2), (0, 3), (0, 4)], &[]);
        let idx = core_decomposition(&star.social);
        for (_, c) in idx.iter() {
            assert_eq!(c, 1);
        }

        // Two triangles joined by one bridge edge: peeling by hand removes
        // nothing at k=2 (every node keeps two in-triangle neighbors), and
        // degree-3 nodes lose the bridge first, so all six land on core 2.
        let bridged = social_only(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (3, 4)], &[]);
        let idx = core_decomposition(&bridged.social);
        for (_, c) in idx.iter() {
            assert_eq!(c, 2);
        }

        let isolated = social_only(&[], &[7]);
        assert_eq!(core_decomposition(&isolated.social).core_number(SocialNodeId(7)), Some(0));
    }

    #[test]
    fn extract_examples() {
        // K4 on 1..4 plus pendant 5 attached to corner 1.
        let mut edges = complete(4);
        edges.push((1, 5));
        let net = social_only(&edges, &[]);
        let out = extract_kcore_containing(&net.social, &sids(&[1, 2, 3, 4, 5]), 3, SocialNodeId(1))
            .unwrap();
        assert_eq!(out, Some(sids(&[1, 2, 3, 4])));

        let path = social_only(&[(1, 2), (2, 3)], &[]);
        let out =
            extract_kcore_containing(&path.social, &sids(&[1, 2, 3]), 2, SocialNodeId(1)).unwrap();
        assert_eq!(out, None);

        let tri = social_only(&[(1, 2), (2, 3), (1, 3)], &[]);
        let out =
            extract_kcore_containing(&tri.social, &sids(&[1, 2, 3]), 2, SocialNodeId(2)).unwrap();
        assert_eq!(out, Some(sids(&[1, 2, 3])));

        assert!(
            extract_kcore_containing(&tri.social, &sids(&[1, 2]), 1, SocialNodeId(3)).is_err(),
            "q outside members is a precondition error"
        );
    }

    #[test]
    fn extract_takes_qs_component_only() {
        // Two triangles, no bridge; peeling keeps both, but only q's side returns.
        let net = social_only(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)], &[]);
        let out = extract_kcore_containing(
            &net.social,
            &sids(&[1, 2, 3, 4, 5, 6]),
            2,
            SocialNodeId(5),
        )
        .unwrap();
        assert_eq!(out, Some(sids(&[4, 5, 6])));
    }

    /// Reference peeling oracle: repeatedly delete any node of minimum
    /// induced degree until all survivors have degree ≥ k; q's component.
    fn brute_core_sets(
        g: &AttributedSocialNetwork,
        k: u32,
    ) -> BTreeMap<SocialNodeId, BTreeSet<SocialNodeId>> {
        let mut alive: BTreeSet<SocialNodeId> = g.node_ids().collect();
        loop {
            let doomed: Vec<SocialNodeId> = alive
                .iter()
                .filter(|&&n| g.neighbors(n).unwrap().intersection(&alive).count() < k as usize)
                .copied()
                .collect();
            if doomed.is_empty() {
                break;
            }
            for n in doomed {
                alive.remove(&n);
            }
        }
        let mut out = BTreeMap::new();
        for &n in &alive {
            let mut comp = BTreeSet::from([n]);
            let mut queue = VecDeque::from([n]);
            while let Some(x) = queue.pop_front() {
                for &m in g.neighbors(x).unwrap() {
                    if alive.contains(&m) && comp.insert(m) {
                        queue.push_back(m);
                    }
                }
            }
            out.insert(n, comp);
        }
        out
    }

    #[test]
    fn core_numbers_match_peeling_on_random_graphs() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..60 {
            let n = rng.random_range(2..=12u64);
            let mut edges = Vec::new();
            for u in 1..=n {
                for v in (u + 1)..=n {
                    if rng.random_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let net = social_only(&edges, &(1..=n).collect::<Vec<_>>());
            let idx = core_decomposition(&net.social);
            for k in 1..=4u32 {
                let survivors = brute_core_sets(&net.social, k);
                let from_index = idx.nodes_with_core_at_least(k);
                let from_brute: BTreeSet<SocialNodeId> = survivors.keys().copied().collect();
                assert_eq!(from_index, from_brute, "trial {trial} k {k}");

                // Extraction agrees with the brute component for every survivor.
                let all: BTreeSet<SocialNodeId> = net.social.node_ids().collect();
                for (&q, comp) in &survivors {
                    let got = extract_kcore_containing(&net.social, &all, k, q).unwrap();
                    assert_eq!(got.as_ref(), Some(comp), "trial {trial} k {k} q {q}");
                }
            }
        }
    }

    #[test]
    fn extract_result_passes_is_kcore_and_is_maximal() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let n = rng.random_range(3..=10u64);
            let mut edges = Vec::new();
            for u in 1..=n {
                for v in (u + 1)..=n {
                    if rng.random_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let net = social_only(&edges, &(1..=n).collect::<Vec<_>>());
            let all: BTreeSet<SocialNodeId> = net.social.node_ids().collect();
            let k = rng.random_range(1..=3u32);
            let q = SocialNodeId(rng.random_range(1..=n));
            if let Some(found) = extract_kcore_containing(&net.social, &all, k, q).unwrap() {
                assert!(found.contains(&q));
                assert!(is_kcore(&net.social, &found, k).unwrap());
                // No single extra node can be added while keeping the property;
                // the peel-then-component set is the unique maximal one.
                for extra in all.difference(&found) {
                    let mut bigger = found.clone();
                    bigger.insert(*extra);
                    if is_kcore(&net.social, &bigger, k).unwrap() {
                        panic!("strict superset still passes is_kcore");
                    }
                }
            }
        }
    }
}
