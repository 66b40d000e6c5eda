//! Exact search: enumerate every connected vertex set containing the query
//! node whose induced subgraph has minimum degree ≥ k, score each one, and
//! return the community Manhattan distance minimum.
//!
//! Enumeration grows connected supersets of `{q}` by frontier extension
//! with exclusion sets, so every qualifying vertex set is visited exactly
//! once. Nodes whose degree in the whole social network is below k can
//! never join a k-core and are pruned outright. The search space is still
//! exponential; safety caps turn blow-ups into errors instead of hangs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kcore::is_kcore;
use crate::model::{Community, GraphError, Network, Query, SocialNodeId};
use crate::objectives::{manhattan_md, ObjectiveError, QueryContext};
use crate::routing::{HeuristicMode, WeightPolicy};
use crate::semantics::EmbeddingStore;

/// Bounds on the exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCaps {
    /// Abort with a partial result beyond this many recorded candidates.
    pub max_candidates: usize,
    /// Do not grow vertex sets beyond this size; `None` means the number
    /// of social nodes.
    pub max_size: Option<usize>,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self {
            max_candidates: 1_000_000,
            max_size: None,
        }
    }
}

/// The distinct connected min-degree-≥k vertex sets containing the query
/// node, in the order enumeration found them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub sets: Vec<BTreeSet<SocialNodeId>>,
    /// Distinct nodes the enumeration examined (locality diagnostics).
    pub nodes_visited: usize,
}

#[derive(Debug, Error)]
pub enum EssacError {
    #[error("candidate cap of {cap} exceeded; {found} candidates retained")]
    CandidateCapExceeded {
        cap: usize,
        found: usize,
        partial: CandidateSet,
    },
    #[error("no connected k-core containing the query node exists")]
    NoCommunity,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

struct Enumerator<'a> {
    net: &'a Network,
    k: u32,
    max_size: usize,
    max_candidates: usize,
    out: Vec<BTreeSet<SocialNodeId>>,
    visited: BTreeSet<SocialNodeId>,
    capped: bool,
}

impl Enumerator<'_> {
    fn eligible(&self, n: SocialNodeId) -> bool {
        self.net.social.degree(n).map(|d| d >= self.k as usize) == Ok(true)
    }

    fn min_induced_degree_ok(&self, s: &BTreeSet<SocialNodeId>) -> bool {
        s.iter().all(|&n| {
            self.net
                .social
                .neighbors(n)
                .expect("enumeration over existing nodes")
                .intersection(s)
                .count()
                >= self.k as usize
        })
    }

    /// Extend `s` with nodes from `ext`, excluding `banned`. `s` is always
    /// connected; each branch bans the pivots of earlier branches so no
    /// vertex set is reached twice.
    fn grow(
        &mut self,
        s: &mut BTreeSet<SocialNodeId>,
        ext: &[SocialNodeId],
        banned: &mut BTreeSet<SocialNodeId>,
    ) {
        if self.capped {
            return;
        }
        if self.min_induced_degree_ok(s) {
            if self.out.len() >= self.max_candidates {
                self.capped = true;
                return;
            }
            self.out.push(s.clone());
        }
        if s.len() >= self.max_size {
            return;
        }

        let mut banned_here = Vec::new();
        for (i, &v) in ext.iter().enumerate() {
            s.insert(v);
            self.visited.insert(v);

            let mut next_ext: Vec<SocialNodeId> = ext[i + 1..].to_vec();
            let tail: BTreeSet<SocialNodeId> = next_ext.iter().copied().collect();
            for &w in self
                .net
                .social
                .neighbors(v)
                .expect("enumeration over existing nodes")
            {
                if self.eligible(w) && !s.contains(&w) && !banned.contains(&w) && !tail.contains(&w)
                {
                    next_ext.push(w);
                }
            }

            self.grow(s, &next_ext, banned);
            s.remove(&v);
            if self.capped {
                break;
            }
            banned.insert(v);
            banned_here.push(v);
        }
        for v in banned_here {
            banned.remove(&v);
        }
    }
}

/// Enumerate exactly the distinct connected vertex sets containing the
/// query node whose induced subgraph has minimum degree ≥ k.
pub fn enumerate_kcores(
    net: &Network,
    query: &Query,
    caps: EnumerationCaps,
) -> Result<CandidateSet, EssacError> {
    let g = &net.social;
    if !g.contains(query.q) {
        return Err(GraphError::SocialNodeNotFound(query.q).into());
    }
    let max_size = caps.max_size.unwrap_or(g.node_count()).max(1);
    let mut e = Enumerator {
        net,
        k: query.k,
        max_size,
        max_candidates: caps.max_candidates,
        out: Vec::new(),
        visited: BTreeSet::from([query.q]),
        capped: false,
    };

    // A node of global degree < k is in no k-core; if that's q, the answer
    // is empty without any search.
    if e.eligible(query.q) {
        let mut s = BTreeSet::from([query.q]);
        let ext: Vec<SocialNodeId> = g
            .neighbors(query.q)?
            .iter()
            .copied()
            .filter(|&n| e.eligible(n))
            .collect();
        let mut banned = BTreeSet::new();
        e.grow(&mut s, &ext, &mut banned);
    }

    let set = CandidateSet {
        sets: e.out,
        nodes_visited: e.visited.len(),
    };
    if e.capped {
        return Err(EssacError::CandidateCapExceeded {
            cap: caps.max_candidates,
            found: set.sets.len(),
            partial: set,
        });
    }
    Ok(set)
}

/// Outcome of the exact search.
#[derive(Debug, Clone)]
pub struct EssacOutput {
    pub community: Community,
    /// Number of candidates scored.
    pub candidates: usize,
    /// Distinct social nodes examined by enumeration and scoring.
    pub nodes_touched: usize,
}

/// Exact search: enumerate candidates, score each with the objective pair,
/// normalize over the whole candidate set, and return the MD minimum.
/// Ties go to the smaller community, then the lexicographically smallest
/// member list.
pub fn essac(
    net: &Network,
    store: &EmbeddingStore,
    query: &Query,
    caps: EnumerationCaps,
    mode: HeuristicMode,
    policy: WeightPolicy,
) -> Result<EssacOutput, EssacError> {
    let candidates = enumerate_kcores(net, query, caps)?;
    if candidates.sets.is_empty() {
        return Err(EssacError::NoCommunity);
    }

    let ctx = QueryContext::new(net, store, query, mode, policy)?;
    let mut pairs = Vec::with_capacity(candidates.sets.len());
    for members in &candidates.sets {
        pairs.push(ctx.pair(members)?);
    }
    let mds = manhattan_md(&pairs);

    let mut best = 0usize;
    for i in 1..mds.len() {
        let better = match mds[i].partial_cmp(&mds[best]).expect("finite MD values") {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                let (a, b) = (&candidates.sets[i], &candidates.sets[best]);
                (a.len(), a) < (b.len(), b)
            }
        };
        if better {
            best = i;
        }
    }

    Ok(EssacOutput {
        community: Community {
            members: candidates.sets[best].clone(),
            k_value: pairs[best].k_value,
            t_value: pairs[best].t_value,
            md: Some(mds[best]),
        },
        candidates: candidates.sets.len(),
        nodes_touched: ctx.touched_count().max(candidates.nodes_visited),
    })
}

/// Reference enumeration for tests: filter all 2^n vertex subsets.
/// Exponential; callers keep n small.
pub fn brute_force_kcores(
    net: &Network,
    q: SocialNodeId,
    k: u32,
) -> Result<Vec<BTreeSet<SocialNodeId>>, GraphError> {
    let ids: Vec<SocialNodeId> = net.social.node_ids().collect();
    let n = ids.len();
    assert!(n <= 20, "brute force is for small graphs");
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: BTreeSet<SocialNodeId> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| ids[i])
            .collect();
        if !members.contains(&q) {
            continue;
        }
        if is_kcore(&net.social, &members, k)? {
            out.push(members);
        }
    }
    Ok(out)
}
