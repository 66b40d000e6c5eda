//! Community search over time-dependent road-social attributed networks.
//!
//! Given a social network whose nodes carry keywords and road locations, a
//! road network whose edge travel times vary with departure time, and a query
//! `⟨q, k, s_q, l_q, t⟩`, this crate finds a connected k-core containing `q`
//! whose members are semantically close to the query keywords and quick to
//! reach the query location when departing at time `t`.
//!
//! Two search algorithms are provided:
//!
//! - [`essac`]: exact enumeration of every connected min-degree-≥k vertex set
//!   containing the query node, scored and ranked by community Manhattan
//!   distance. Exponential; intended for small graphs and as a reference.
//! - [`gssac`]: greedy seed expansion from the query node that maintains a
//!   single community, growing it through dominance-filtered candidates and
//!   stopping when the community history stops improving. Local and fast.
//!
//! Supporting layers: [`model`] (network representation), [`kcore`]
//! (decomposition and extraction), [`routing`] (time-dependent shortest
//! travel times via A*), [`semantics`] (keyword embeddings and cosine
//! similarity), [`objectives`] (the two-objective scoring machinery),
//! [`metrics`] (community quality measures), [`dataio`] (file formats and
//! the synthetic benchmark generator), and [`cli`] (the `ssac` binary).

pub mod cli;
pub mod dataio;
pub mod essac;
pub mod gssac;
pub mod kcore;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod routing;
pub mod semantics;

#[cfg(test)]
pub(crate) mod testutil;

pub use model::{
    AttributedSocialNetwork, Community, Network, Query, RoadNode, RoadNodeId, SocialNode,
    SocialNodeId, TimeDependentRoadNetwork, TimeDependentWeight,
};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
