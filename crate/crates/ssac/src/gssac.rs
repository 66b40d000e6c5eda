//! Greedy seed-expansion search.
//!
//! Three phases, all local to the query node's neighborhood:
//!
//! 1. **Initial construction** grows `{q}` one node at a time, always taking
//!    the frontier node with the best (lowest) expansion score, until the
//!    working set contains a k-core around `q`; that core is the starting
//!    community.
//! 2. **Candidate selection** keeps the frontier nodes that preserve the
//!    k-core (at least k neighbors inside the community) and whose addition
//!    is not dominated by the current community.
//! 3. **Expansion** ranks candidates by community Manhattan distance within
//!    the round, greedily absorbs them while the distance keeps improving,
//!    then compares the grown community against the whole search history:
//!    if an earlier community scores better, the search stops and returns
//!    it.
//!
//! Every returned community is a connected k-core containing the query node.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kcore::extract_kcore_containing;
use crate::model::{Community, GraphError, Network, Query, SocialNodeId};
use crate::objectives::{
    dominates, ne_score, NormalizationBounds, ObjectiveError, ObjectivePair, QueryContext,
};
use crate::routing::{HeuristicMode, WeightPolicy};
use crate::semantics::EmbeddingStore;

/// Why a search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The frontier held no candidate that preserves the k-core without
    /// being dominated; the community cannot expand further.
    NoCandidates,
    /// An earlier community in the history scored better than the latest
    /// expansion; the search returned the historical best.
    HistoryRegression,
    /// The expansion-round cap was reached; the historical best returned.
    IterationCap,
    /// No k-core containing the query node was found while building the
    /// initial community.
    InitialConstructionFailed,
}

/// One expansion round of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub frontier_size: usize,
    pub candidate_count: usize,
    pub nodes_added: Vec<SocialNodeId>,
    /// Manhattan distance of the round's grown community within the round's
    /// normalization frame.
    pub md_opt: f64,
    pub elapsed_ms: f64,
}

/// Diagnostics of one search execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub rounds: Vec<RoundRecord>,
    pub stop: StopReason,
    /// Distinct social nodes examined (locality diagnostics).
    pub nodes_touched: usize,
    /// Nodes added during initial construction before a k-core appeared.
    pub initial_additions: usize,
    pub total_elapsed_ms: f64,
}

/// A community recorded in the search history with its objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub members: BTreeSet<SocialNodeId>,
    pub pair: ObjectivePair,
}

/// The communities produced by each expansion round, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub entries: Vec<HistoryEntry>,
}

impl History {
    /// Index of the entry with minimal Manhattan distance over the whole
    /// history (ties to the earliest entry), with the distances.
    pub fn md_argmin(&self) -> Option<(usize, Vec<f64>)> {
        let bounds = NormalizationBounds::from_pairs(self.entries.iter().map(|e| e.pair))?;
        let mds: Vec<f64> = self.entries.iter().map(|e| bounds.md(e.pair)).collect();
        let mut best = 0usize;
        for (i, md) in mds.iter().enumerate().skip(1) {
            if *md < mds[best] {
                best = i;
            }
        }
        Some((best, mds))
    }
}

/// Iteration caps for the two growth loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCaps {
    /// Node additions allowed while constructing the initial community.
    pub initial_additions: usize,
    /// Expansion rounds allowed after the initial community exists.
    pub expansion_rounds: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        Self {
            initial_additions: 5_000,
            expansion_rounds: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no community: {reason}")]
    NoCommunity { reason: String, trace: Box<SearchTrace> },
    #[error("initial construction exceeded {cap} additions without forming a k-core")]
    InitialCapExceeded { cap: usize, trace: Box<SearchTrace> },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A successful search: the community, its history, and diagnostics.
#[derive(Debug, Clone)]
pub struct GssacOutput {
    pub community: Community,
    pub history: History,
    pub trace: SearchTrace,
}

/// Frontier of a member set: nodes outside it adjacent to at least one
/// member.
fn frontier_of(
    net: &Network,
    members: &BTreeSet<SocialNodeId>,
) -> Result<BTreeSet<SocialNodeId>, GraphError> {
    let mut out = BTreeSet::new();
    for &m in members {
        for &n in net.social.neighbors(m)? {
            if !members.contains(&n) {
                out.insert(n);
            }
        }
    }
    Ok(out)
}

fn failure_trace(stop: StopReason, ctx: &QueryContext<'_>, additions: usize, started: Instant) -> Box<SearchTrace> {
    Box::new(SearchTrace {
        rounds: Vec::new(),
        stop,
        nodes_touched: ctx.touched_count(),
        initial_additions: additions,
        total_elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Grow `{q}` by repeatedly adding the frontier node with the lowest
/// expansion score (ties to the smaller id) among frontier nodes whose
/// whole-network degree is at least k, until the working set contains a
/// k-core around `q`. Returns that extracted core.
pub fn build_initial(
    ctx: &QueryContext<'_>,
    cap: usize,
) -> Result<BTreeSet<SocialNodeId>, SearchError> {
    let started = Instant::now();
    let net = ctx.net;
    let q = ctx.query.q;
    let k = ctx.query.k;
    let mut working = BTreeSet::from([q]);

    for additions in 0..cap {
        let frontier: BTreeSet<SocialNodeId> = frontier_of(net, &working)?
            .into_iter()
            .filter(|&n| net.social.degree(n).map(|d| d >= k as usize) == Ok(true))
            .collect();
        if frontier.is_empty() {
            return Err(SearchError::NoCommunity {
                reason: format!(
                    "the neighborhood around node {q} cannot supply another degree-{k} node"
                ),
                trace: failure_trace(
                    StopReason::InitialConstructionFailed,
                    ctx,
                    additions,
                    started,
                ),
            });
        }
        let scores = ne_score(ctx, &frontier, &working)?;
        let (&pick, _) = scores
            .iter()
            .min_by(|(na, va), (nb, vb)| {
                va.partial_cmp(vb)
                    .expect("finite NE values")
                    .then_with(|| na.cmp(nb))
            })
            .expect("non-empty frontier");
        working.insert(pick);

        if let Some(core) = extract_kcore_containing(&net.social, &working, k, q)? {
            return Ok(core);
        }
    }

    Err(SearchError::InitialCapExceeded {
        cap,
        trace: failure_trace(StopReason::InitialConstructionFailed, ctx, cap, started),
    })
}

/// A candidate node with the objectives of the community it would form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateNode {
    pub id: SocialNodeId,
    /// Objectives of `community ∪ {id}`.
    pub pair: ObjectivePair,
}

/// Frontier nodes that keep the community a k-core (at least k neighbors
/// inside) and whose addition is not dominated by the current community.
pub fn select_candidates(
    ctx: &QueryContext<'_>,
    members: &BTreeSet<SocialNodeId>,
    current: ObjectivePair,
) -> Result<Vec<CandidateNode>, SearchError> {
    let k = ctx.query.k as usize;
    let mut out = Vec::new();
    for n in frontier_of(ctx.net, members)? {
        ctx.touch(n);
        let attached = ctx.net.social.neighbors(n)?.intersection(members).count();
        if attached < k {
            continue;
        }
        let mut grown = members.clone();
        grown.insert(n);
        let pair = ctx.pair(&grown)?;
        if !dominates(current, pair) {
            out.push(CandidateNode { id: n, pair });
        }
    }
    Ok(out)
}

/// Outcome of one expansion round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub next: BTreeSet<SocialNodeId>,
    pub next_pair: ObjectivePair,
    pub stop: bool,
    pub added: Vec<SocialNodeId>,
    /// MD of the grown community within the round's normalization frame.
    pub md_opt: f64,
}

/// One expansion round: rank the candidates by Manhattan distance within
/// the round's frame, absorb them greedily while the distance improves,
/// append the result to the history, and hand control to the history's
/// best community.
///
/// The normalization frame starts from the current community and every
/// single-node extension, then grows with each community formed during the
/// greedy pass; values already compared are not re-normalized.
pub fn expand_round(
    ctx: &QueryContext<'_>,
    members: &BTreeSet<SocialNodeId>,
    current: ObjectivePair,
    candidates: &[CandidateNode],
    history: &mut History,
) -> Result<RoundOutcome, SearchError> {
    debug_assert!(!candidates.is_empty());

    let mut bounds = NormalizationBounds::from_pairs(
        std::iter::once(current).chain(candidates.iter().map(|c| c.pair)),
    )
    .expect("at least the current community");

    let mut sorted: Vec<&CandidateNode> = candidates.iter().collect();
    sorted.sort_by(|a, b| {
        bounds
            .md(a.pair)
            .partial_cmp(&bounds.md(b.pair))
            .expect("finite MD values")
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut grown = members.clone();
    let mut grown_pair = current;
    let mut min_md = f64::INFINITY;
    let mut added = Vec::new();

    for cand in sorted {
        let (trial_pair, trial) = if added.is_empty() {
            // First step grows the original community; the pair is already
            // known from candidate selection.
            let mut t = members.clone();
            t.insert(cand.id);
            (cand.pair, t)
        } else {
            let mut t = grown.clone();
            t.insert(cand.id);
            (ctx.pair(&t)?, t)
        };
        bounds.extend(trial_pair);
        let md = bounds.md(trial_pair);
        if md < min_md {
            min_md = md;
            grown = trial;
            grown_pair = trial_pair;
            added.push(cand.id);
        } else {
            break;
        }
    }

    history.entries.push(HistoryEntry {
        members: grown.clone(),
        pair: grown_pair,
    });

    let (best, _) = history.md_argmin().expect("history is non-empty");
    let best_is_latest = best == history.entries.len() - 1;
    if best_is_latest {
        Ok(RoundOutcome {
            next: grown,
            next_pair: grown_pair,
            stop: false,
            added,
            md_opt: min_md,
        })
    } else {
        let entry = &history.entries[best];
        Ok(RoundOutcome {
            next: entry.members.clone(),
            next_pair: entry.pair,
            stop: true,
            added,
            md_opt: min_md,
        })
    }
}

/// Full greedy search for the given query.
pub fn gssac(
    net: &Network,
    store: &EmbeddingStore,
    query: &Query,
    caps: SearchCaps,
    mode: HeuristicMode,
    policy: WeightPolicy,
) -> Result<GssacOutput, SearchError> {
    let started = Instant::now();
    let ctx = QueryContext::new(net, store, query, mode, policy)?;

    let mut members = build_initial(&ctx, caps.initial_additions)?;
    let initial_additions = members.len().saturating_sub(1);
    let mut pair = ctx.pair(&members)?;
    let mut history = History::default();
    let mut rounds = Vec::new();

    let mut stop_reason = StopReason::IterationCap;
    for round in 1..=caps.expansion_rounds {
        let round_started = Instant::now();
        let frontier_size = frontier_of(net, &members)?.len();
        let candidates = select_candidates(&ctx, &members, pair)?;
        if candidates.is_empty() {
            stop_reason = StopReason::NoCandidates;
            break;
        }
        let outcome = expand_round(&ctx, &members, pair, &candidates, &mut history)?;
        rounds.push(RoundRecord {
            round,
            frontier_size,
            candidate_count: candidates.len(),
            nodes_added: outcome.added.clone(),
            md_opt: outcome.md_opt,
            elapsed_ms: round_started.elapsed().as_secs_f64() * 1e3,
        });
        members = outcome.next;
        pair = outcome.next_pair;
        if outcome.stop {
            stop_reason = StopReason::HistoryRegression;
            break;
        }
    }

    // On an iteration-cap stop the history's best community is returned.
    let md = if stop_reason == StopReason::IterationCap && !history.entries.is_empty() {
        let (best, mds) = history.md_argmin().expect("non-empty history");
        members = history.entries[best].members.clone();
        pair = history.entries[best].pair;
        Some(mds[best])
    } else {
        history.md_argmin().map(|(best, mds)| {
            debug_assert_eq!(history.entries[best].members, members);
            mds[best]
        })
    };

    Ok(GssacOutput {
        community: Community {
            members,
            k_value: pair.k_value,
            t_value: pair.t_value,
            md,
        },
        history,
        trace: SearchTrace {
            rounds,
            stop: stop_reason,
            nodes_touched: ctx.touched_count(),
            initial_additions,
            total_elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    })
}
