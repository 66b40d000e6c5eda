//! Bundle loading, validation, and the synthetic planted-community
//! generator.
//!
//! A dataset bundle is a directory of plain-text files:
//!
//! - `road_nodes.csv` — `id,x,y` with a header row
//! - `road_edges.jsonl` — `{"u": id, "v": id, "w": [[t0,w0],[t1,w1],...]}`
//! - `social_nodes.jsonl` — `{"id": id, "loc": road_id, "kw": ["...", ...]}`
//! - `social_edges.csv` — `u,v` with a header row
//! - `vectors.jsonl` (optional) — `{"key": "node:<id>" | "kw:<keyword>" |
//!   "set:<hash>", "vec": [...]}`
//! - `manifest.json` — counts, dimension, checksums, generator seed
//!
//! All ids are unsigned integers, all numbers decimal, files UTF-8. When
//! `vectors.jsonl` is absent the embedding store falls back to the
//! deterministic hash provider seeded from the manifest, so loads stay
//! reproducible offline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Network, RoadNetworkData, RoadNode, RoadNodeId, SocialNetworkData, SocialNode, SocialNodeId,
    ValidationReport,
};
use crate::semantics::{stable_hash_bytes, EmbeddingStore, EmbeddingVector, SemanticsError};

pub const ROAD_NODES_FILE: &str = "road_nodes.csv";
pub const ROAD_EDGES_FILE: &str = "road_edges.jsonl";
pub const SOCIAL_NODES_FILE: &str = "social_nodes.jsonl";
pub const SOCIAL_EDGES_FILE: &str = "social_edges.csv";
pub const VECTORS_FILE: &str = "vectors.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("network validation failed:\n{0}")]
    Validation(ValidationReport),
    #[error("checksum mismatch for {file}: manifest says {expected}, file is {actual}")]
    ChecksumMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("manifest count mismatch for {what}: manifest says {expected}, files hold {actual}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("invalid generator spec: {0}")]
    BadSpec(String),
}

/// File counts recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub road_nodes: usize,
    pub road_edges: usize,
    pub social_nodes: usize,
    pub social_edges: usize,
    pub vector_entries: usize,
}

/// Bundle metadata: counts, embedding dimension, per-file checksums
/// (64-bit FNV-1a of the file bytes, hex), and the generator seed that the
/// hash embedding provider reuses when no vectors file is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub tool_version: String,
    pub counts: ManifestCounts,
    pub dimension: usize,
    pub seed: u64,
    pub checksums: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SyntheticSpec>,
}

/// A loaded, validated bundle.
#[derive(Debug)]
pub struct LoadedBundle {
    pub net: Network,
    pub store: EmbeddingStore,
    pub manifest: Option<Manifest>,
    pub dir: PathBuf,
}

fn read(dir: &Path, name: &str) -> Result<String, DataError> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|source| DataError::Io { path, source })
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn checksum(content: &str) -> String {
    format!("{:016x}", stable_hash_bytes(content.as_bytes()))
}

fn parse_road_nodes(content: &str) -> Result<Vec<RoadNode>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if i == 0 {
            if text != "id,x,y" {
                return Err(parse_err(ROAD_NODES_FILE, line, "expected header 'id,x,y'"));
            }
            continue;
        }
        let mut parts = text.split(',');
        let (id, x, y) = (parts.next(), parts.next(), parts.next());
        if parts.next().is_some() {
            return Err(parse_err(ROAD_NODES_FILE, line, "too many fields"));
        }
        let (Some(id), Some(x), Some(y)) = (id, x, y) else {
            return Err(parse_err(ROAD_NODES_FILE, line, "expected 'id,x,y'"));
        };
        out.push(RoadNode {
            id: RoadNodeId(id.trim().parse().map_err(|e| {
                parse_err(ROAD_NODES_FILE, line, format!("bad id {id:?}: {e}"))
            })?),
            x: x.trim()
                .parse()
                .map_err(|e| parse_err(ROAD_NODES_FILE, line, format!("bad x {x:?}: {e}")))?,
            y: y.trim()
                .parse()
                .map_err(|e| parse_err(ROAD_NODES_FILE, line, format!("bad y {y:?}: {e}")))?,
        });
    }
    Ok(out)
}

#[derive(Deserialize, Serialize)]
struct RoadEdgeRecord {
    u: u64,
    v: u64,
    w: Vec<(f64, f64)>,
}

fn parse_road_edges(content: &str) -> Result<Vec<crate::model::RawRoadEdge>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let rec: RoadEdgeRecord = serde_json::from_str(text)
            .map_err(|e| parse_err(ROAD_EDGES_FILE, i + 1, e.to_string()))?;
        out.push((RoadNodeId(rec.u), RoadNodeId(rec.v), rec.w));
    }
    Ok(out)
}

#[derive(Deserialize, Serialize)]
struct SocialNodeRecord {
    id: u64,
    loc: u64,
    kw: Vec<String>,
}

fn parse_social_nodes(content: &str) -> Result<Vec<SocialNode>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let rec: SocialNodeRecord = serde_json::from_str(text)
            .map_err(|e| parse_err(SOCIAL_NODES_FILE, i + 1, e.to_string()))?;
        out.push(SocialNode {
            id: SocialNodeId(rec.id),
            location: RoadNodeId(rec.loc),
            keywords: rec.kw.into_iter().collect(),
        });
    }
    Ok(out)
}

fn parse_social_edges(content: &str) -> Result<Vec<(SocialNodeId, SocialNodeId)>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if i == 0 {
            if text != "u,v" {
                return Err(parse_err(SOCIAL_EDGES_FILE, line, "expected header 'u,v'"));
            }
            continue;
        }
        let mut parts = text.split(',');
        let (u, v) = (parts.next(), parts.next());
        if parts.next().is_some() {
            return Err(parse_err(SOCIAL_EDGES_FILE, line, "too many fields"));
        }
        let (Some(u), Some(v)) = (u, v) else {
            return Err(parse_err(SOCIAL_EDGES_FILE, line, "expected 'u,v'"));
        };
        let u: u64 = u
            .trim()
            .parse()
            .map_err(|e| parse_err(SOCIAL_EDGES_FILE, line, format!("bad u {u:?}: {e}")))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|e| parse_err(SOCIAL_EDGES_FILE, line, format!("bad v {v:?}: {e}")))?;
        out.push((SocialNodeId(u), SocialNodeId(v)));
    }
    Ok(out)
}

#[derive(Deserialize, Serialize)]
struct VectorRecord {
    key: String,
    vec: Vec<f64>,
}

/// One parsed vectors-file entry.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorEntry {
    Node(SocialNodeId, Vec<f64>),
    Keyword(String, Vec<f64>),
    Set(String, Vec<f64>),
}

fn parse_vectors(content: &str) -> Result<Vec<VectorEntry>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let rec: VectorRecord = serde_json::from_str(text)
            .map_err(|e| parse_err(VECTORS_FILE, line, e.to_string()))?;
        let entry = if let Some(id) = rec.key.strip_prefix("node:") {
            VectorEntry::Node(
                SocialNodeId(id.parse().map_err(|e| {
                    parse_err(VECTORS_FILE, line, format!("bad node id {id:?}: {e}"))
                })?),
                rec.vec,
            )
        } else if let Some(kw) = rec.key.strip_prefix("kw:") {
            VectorEntry::Keyword(kw.to_string(), rec.vec)
        } else if let Some(h) = rec.key.strip_prefix("set:") {
            VectorEntry::Set(h.to_string(), rec.vec)
        } else {
            return Err(parse_err(
                VECTORS_FILE,
                line,
                format!("key {:?} must start with node:, kw:, or set:", rec.key),
            ));
        };
        out.push(entry);
    }
    Ok(out)
}

/// Load and validate a bundle directory.
///
/// With a manifest present, per-file checksums and counts are verified.
/// With a vectors file present, the store is purely file-backed; otherwise
/// the hash provider is engaged with the manifest's seed and dimension (or
/// the defaults when there is no manifest).
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<LoadedBundle, DataError> {
    let dir = dir.as_ref();

    let road_nodes_text = read(dir, ROAD_NODES_FILE)?;
    let road_edges_text = read(dir, ROAD_EDGES_FILE)?;
    let social_nodes_text = read(dir, SOCIAL_NODES_FILE)?;
    let social_edges_text = read(dir, SOCIAL_EDGES_FILE)?;

    let manifest: Option<Manifest> = match std::fs::read_to_string(dir.join(MANIFEST_FILE)) {
        Ok(text) => Some(
            serde_json::from_str(&text).map_err(|e| parse_err(MANIFEST_FILE, 1, e.to_string()))?,
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(source) => {
            return Err(DataError::Io {
                path: dir.join(MANIFEST_FILE),
                source,
            })
        }
    };

    let vectors_text = match std::fs::read_to_string(dir.join(VECTORS_FILE)) {
        Ok(text) => Some(text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(source) => {
            return Err(DataError::Io {
                path: dir.join(VECTORS_FILE),
                source,
            })
        }
    };

    if let Some(m) = &manifest {
        let mut present: Vec<(&str, &str)> = vec![
            (ROAD_NODES_FILE, &road_nodes_text),
            (ROAD_EDGES_FILE, &road_edges_text),
            (SOCIAL_NODES_FILE, &social_nodes_text),
            (SOCIAL_EDGES_FILE, &social_edges_text),
        ];
        if let Some(v) = &vectors_text {
            present.push((VECTORS_FILE, v));
        }
        for (name, text) in present {
            if let Some(expected) = m.checksums.get(name) {
                let actual = checksum(text);
                if &actual != expected {
                    return Err(DataError::ChecksumMismatch {
                        file: name.to_string(),
                        expected: expected.clone(),
                        actual,
                    });
                }
            }
        }
    }

    let road = RoadNetworkData {
        nodes: parse_road_nodes(&road_nodes_text)?,
        edges: parse_road_edges(&road_edges_text)?,
    };
    let social = SocialNetworkData {
        nodes: parse_social_nodes(&social_nodes_text)?,
        edges: parse_social_edges(&social_edges_text)?,
    };

    if let Some(m) = &manifest {
        let checks = [
            ("road nodes", m.counts.road_nodes, road.nodes.len()),
            ("road edges", m.counts.road_edges, road.edges.len()),
            ("social nodes", m.counts.social_nodes, social.nodes.len()),
            ("social edges", m.counts.social_edges, social.edges.len()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(DataError::CountMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
    }

    let net = Network::from_parts(road, social).map_err(DataError::Validation)?;

    let mut store = match &vectors_text {
        Some(text) => {
            let entries = parse_vectors(text)?;
            let dimension = entries
                .iter()
                .map(|e| match e {
                    VectorEntry::Node(_, v) | VectorEntry::Keyword(_, v) | VectorEntry::Set(_, v) => {
                        v.len()
                    }
                })
                .next()
                .unwrap_or(crate::semantics::DEFAULT_HASH_DIMENSION);
            let mut store = EmbeddingStore::new(dimension);
            for e in entries {
                match e {
                    VectorEntry::Node(id, v) => store.insert_node(id, EmbeddingVector(v))?,
                    VectorEntry::Keyword(kw, v) => store.insert_keyword(&kw, EmbeddingVector(v))?,
                    VectorEntry::Set(key, v) => store.insert_set(key, EmbeddingVector(v))?,
                }
            }
            store
        }
        None => {
            let (dimension, seed) = manifest
                .as_ref()
                .map(|m| (m.dimension, m.seed))
                .unwrap_or((crate::semantics::DEFAULT_HASH_DIMENSION, 0));
            EmbeddingStore::with_hash_fallback(dimension, seed)
        }
    };
    store.ensure_node_vectors(&net.social)?;

    Ok(LoadedBundle {
        net,
        store,
        manifest,
        dir: dir.to_path_buf(),
    })
}

/// Append vector entries to a bundle's vectors file, creating it if absent.
pub fn append_vectors(dir: impl AsRef<Path>, entries: &[VectorEntry]) -> Result<(), DataError> {
    let path = dir.as_ref().join(VECTORS_FILE);
    let mut content = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(source) => return Err(DataError::Io { path, source }),
    };
    for e in entries {
        let (key, vec) = match e {
            VectorEntry::Node(id, v) => (format!("node:{id}"), v),
            VectorEntry::Keyword(kw, v) => (format!("kw:{kw}"), v),
            VectorEntry::Set(h, v) => (format!("set:{h}"), v),
        };
        let rec = VectorRecord {
            key,
            vec: vec.clone(),
        };
        content.push_str(&serde_json::to_string(&rec).expect("vector record serializes"));
        content.push('\n');
    }
    std::fs::write(&path, content).map_err(|source| DataError::Io { path, source })
}

/// Parameters of the synthetic planted-community generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub communities: usize,
    pub size_min: usize,
    pub size_max: usize,
    /// Extra intra-community edge probability on top of the planted core.
    pub p_intra: f64,
    /// Edge probability between nodes of different communities.
    pub p_inter: f64,
    /// Every planted community embeds a k-core of this order.
    pub k: u32,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Edge travel times follow `base + amplitude·sin` sampled at four
    /// breakpoints per period, phase-shifted per edge.
    pub wave_base: f64,
    pub wave_amplitude: f64,
    pub wave_period: f64,
    pub keyword_clusters: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            communities: 10,
            size_min: 8,
            size_max: 12,
            p_intra: 0.3,
            p_inter: 0.005,
            k: 3,
            grid_width: 12,
            grid_height: 12,
            wave_base: 6.0,
            wave_amplitude: 3.0,
            wave_period: 60.0,
            keyword_clusters: 10,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.communities == 0 {
            return Err(DataError::BadSpec("need at least one community".into()));
        }
        if self.size_min < 2 || self.size_min > self.size_max {
            return Err(DataError::BadSpec(
                "community size range must satisfy 2 ≤ min ≤ max".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_intra) || !(0.0..=1.0).contains(&self.p_inter) {
            return Err(DataError::BadSpec("probabilities must be in [0,1]".into()));
        }
        if self.k as usize > self.size_min - 1 {
            return Err(DataError::BadSpec(format!(
                "k = {} too large for minimum community size {}; need k ≤ size − 1",
                self.k, self.size_min
            )));
        }
        if self.grid_width * self.grid_height < self.communities {
            return Err(DataError::BadSpec(
                "road grid too small for one region per community".into(),
            ));
        }
        if self.wave_base <= self.wave_amplitude || self.wave_amplitude < 0.0 {
            return Err(DataError::BadSpec(
                "need wave_base > wave_amplitude ≥ 0 for positive travel times".into(),
            ));
        }
        if self.wave_period <= 0.0 {
            return Err(DataError::BadSpec("wave period must be positive".into()));
        }
        if self.keyword_clusters == 0 {
            return Err(DataError::BadSpec("need at least one keyword cluster".into()));
        }
        Ok(())
    }
}

/// Ground-truth membership of one planted community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCommunity {
    pub id: usize,
    pub members: Vec<u64>,
    pub keyword_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub communities: Vec<PlantedCommunity>,
    /// Degree-2 users carrying the inter-community ties; in no community.
    #[serde(default)]
    pub connectors: Vec<u64>,
}

/// Generate a synthetic bundle on disk: a social network of planted
/// communities (each backed by a (k+1)-clique plus k attachments per
/// member, so every member survives k-core peeling within its community),
/// keyword clusters, and a road grid with phase-shifted sinusoidal
/// travel-time waveforms. Same spec, same bytes.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    dir: impl AsRef<Path>,
) -> Result<Manifest, DataError> {
    spec.validate()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Road grid: node id = row*width + col + 1, unit spacing.
    let (w, h) = (spec.grid_width, spec.grid_height);
    let grid_id = |r: usize, c: usize| (r * w + c + 1) as u64;
    let mut road_nodes_text = String::from("id,x,y\n");
    for r in 0..h {
        for c in 0..w {
            writeln!(road_nodes_text, "{},{},{}", grid_id(r, c), c, r).expect("write");
        }
    }

    let mut road_edges_text = String::new();
    let mut road_edge_count = 0usize;
    for r in 0..h {
        for c in 0..w {
            for (nr, nc) in [(r, c + 1), (r + 1, c)] {
                if nr >= h || nc >= w {
                    continue;
                }
                let phase: f64 = rng.random_range(0.0..1.0);
                let p = spec.wave_period;
                let w_at = |t: f64| {
                    spec.wave_base
                        + spec.wave_amplitude
                            * (std::f64::consts::TAU * (t / p + phase)).sin()
                };
                let bps: Vec<(f64, f64)> = (0..4)
                    .map(|i| {
                        let t = p * i as f64 / 3.0;
                        (t, w_at(t))
                    })
                    .collect();
                let rec = RoadEdgeRecord {
                    u: grid_id(r, c),
                    v: grid_id(nr, nc),
                    w: bps,
                };
                writeln!(
                    road_edges_text,
                    "{}",
                    serde_json::to_string(&rec).expect("edge record serializes")
                )
                .expect("write");
                road_edge_count += 1;
            }
        }
    }

    // Community sizes and contiguous road regions: the grid is tiled into
    // one compact rectangular block per community.
    let sizes: Vec<usize> = (0..spec.communities)
        .map(|_| rng.random_range(spec.size_min..=spec.size_max))
        .collect();
    let total_cells = w * h;
    let block_rows = (spec.communities as f64).sqrt().floor().max(1.0) as usize;
    let block_cols = spec.communities.div_ceil(block_rows);
    let block_h = (h / block_rows).max(1);
    let block_w = (w / block_cols).max(1);

    let mut social_nodes: Vec<(u64, u64, Vec<String>)> = Vec::new();
    let mut ground: Vec<PlantedCommunity> = Vec::new();
    let mut edges: BTreeSet<(u64, u64)> = BTreeSet::new();
    let add_edge = |edges: &mut BTreeSet<(u64, u64)>, a: u64, b: u64| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };

    // Keyword cluster pools.
    let pool_size = 12usize;
    let cluster_kw =
        |cluster: usize, j: usize| -> String { format!("topic{cluster:02}_kw{j:02}") };

    let mut next_id = 1u64;
    for (ci, &size) in sizes.iter().enumerate() {
        let members: Vec<u64> = (0..size).map(|i| next_id + i as u64).collect();
        next_id += size as u64;
        let cluster = ci % spec.keyword_clusters;

        // Locations within this community's block.
        let r0 = (ci / block_cols) * block_h;
        let c0 = (ci % block_cols) * block_w;
        for &m in &members {
            let r = (r0 + rng.random_range(0..block_h)).min(h - 1);
            let c = (c0 + rng.random_range(0..block_w)).min(w - 1);
            let mut kws: BTreeSet<String> = BTreeSet::new();
            while kws.len() < 3 {
                kws.insert(cluster_kw(cluster, rng.random_range(0..pool_size)));
            }
            social_nodes.push((m, grid_id(r, c), kws.into_iter().collect()));
        }

        // Planted structure: a (k+1)-clique backbone; every other member
        // attaches to k distinct backbone nodes. Peeling at k then removes
        // nobody inside the community.
        let kk = spec.k as usize;
        let backbone = &members[..kk + 1];
        for (i, &a) in backbone.iter().enumerate() {
            for &b in &backbone[i + 1..] {
                add_edge(&mut edges, a, b);
            }
        }
        for &m in &members[kk + 1..] {
            let mut picks: BTreeSet<u64> = BTreeSet::new();
            while picks.len() < kk {
                picks.insert(backbone[rng.random_range(0..backbone.len())]);
            }
            for b in picks {
                add_edge(&mut edges, m, b);
            }
        }
        // Extra intra-community edges.
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if rng.random_bool(spec.p_intra) {
                    add_edge(&mut edges, a, b);
                }
            }
        }

        ground.push(PlantedCommunity {
            id: ci,
            members: members.clone(),
            keyword_cluster: cluster,
        });
    }

    // Inter-community ties go through degree-2 connector users rather than
    // direct member-to-member edges: weak ties keep the whole social graph
    // connected while the planted k-cores stay community-local. The
    // expected number of connectors between two communities matches the
    // direct-edge expectation `p_inter · |a| · |b|`.
    let mut connectors = Vec::new();
    for ci in 0..spec.communities {
        for cj in ci + 1..spec.communities {
            let expected = spec.p_inter * (sizes[ci] * sizes[cj]) as f64;
            let count = expected.floor() as usize
                + usize::from(rng.random_bool(expected.fract().clamp(0.0, 1.0)));
            for _ in 0..count {
                let a = ground[ci].members[rng.random_range(0..sizes[ci])];
                let b = ground[cj].members[rng.random_range(0..sizes[cj])];
                let id = next_id;
                next_id += 1;
                let cell = rng.random_range(0..total_cells);
                social_nodes.push((id, grid_id(cell / w, cell % w), Vec::new()));
                add_edge(&mut edges, id, a);
                add_edge(&mut edges, id, b);
                connectors.push(id);
            }
        }
    }

    let mut social_nodes_text = String::new();
    for (id, loc, kws) in &social_nodes {
        let rec = SocialNodeRecord {
            id: *id,
            loc: *loc,
            kw: kws.clone(),
        };
        writeln!(
            social_nodes_text,
            "{}",
            serde_json::to_string(&rec).expect("node record serializes")
        )
        .expect("write");
    }
    let mut social_edges_text = String::from("u,v\n");
    for (u, v) in &edges {
        writeln!(social_edges_text, "{u},{v}").expect("write");
    }

    let ground_truth = GroundTruth {
        communities: ground,
        connectors,
    };
    let ground_text =
        serde_json::to_string_pretty(&ground_truth).expect("ground truth serializes");

    let mut checksums = BTreeMap::new();
    checksums.insert(ROAD_NODES_FILE.to_string(), checksum(&road_nodes_text));
    checksums.insert(ROAD_EDGES_FILE.to_string(), checksum(&road_edges_text));
    checksums.insert(SOCIAL_NODES_FILE.to_string(), checksum(&social_nodes_text));
    checksums.insert(SOCIAL_EDGES_FILE.to_string(), checksum(&social_edges_text));

    let manifest = Manifest {
        tool_version: crate::VERSION.to_string(),
        counts: ManifestCounts {
            road_nodes: w * h,
            road_edges: road_edge_count,
            social_nodes: social_nodes.len(),
            social_edges: edges.len(),
            vector_entries: 0,
        },
        dimension: crate::semantics::DEFAULT_HASH_DIMENSION,
        seed: spec.seed,
        checksums,
        generator: Some(spec.clone()),
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");

    let writes = [
        (ROAD_NODES_FILE, &road_nodes_text),
        (ROAD_EDGES_FILE, &road_edges_text),
        (SOCIAL_NODES_FILE, &social_nodes_text),
        (SOCIAL_EDGES_FILE, &social_edges_text),
        (GROUND_TRUTH_FILE, &ground_text),
        (MANIFEST_FILE, &manifest_text),
    ];
    for (name, text) in writes {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| DataError::Io { path, source })?;
    }

    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kcore::{core_decomposition, extract_kcore_containing};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn generate_load_roundtrip_and_counts() {
        let dir = tmpdir();
        let spec = SyntheticSpec {
            communities: 10,
            size_min: 20,
            size_max: 20,
            k: 3,
            ..SyntheticSpec::default()
        };
        let manifest = generate_synthetic(&spec, dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        assert_eq!(bundle.net.social.node_count(), manifest.counts.social_nodes);
        assert_eq!(bundle.net.social.edge_count(), manifest.counts.social_edges);
        assert_eq!(bundle.net.road.node_count(), manifest.counts.road_nodes);
        assert_eq!(bundle.store.dimension(), manifest.dimension);
        assert_eq!(bundle.store.hash_seed(), Some(spec.seed));
    }

    #[test]
    fn planted_guarantee_every_member_in_a_kcore() {
        let dir = tmpdir();
        let spec = SyntheticSpec {
            communities: 10,
            size_min: 20,
            size_max: 20,
            k: 3,
            ..SyntheticSpec::default()
        };
        generate_synthetic(&spec, dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
        let truth: GroundTruth = serde_json::from_str(&text).unwrap();
        assert_eq!(truth.communities.len(), 10);
        for pc in &truth.communities {
            let members: BTreeSet<SocialNodeId> =
                pc.members.iter().map(|&m| SocialNodeId(m)).collect();
            for &m in &members {
                let core =
                    extract_kcore_containing(&bundle.net.social, &members, spec.k, m).unwrap();
                assert!(
                    core.is_some(),
                    "member {m} of community {} lost by peeling",
                    pc.id
                );
            }
        }
        // Verified against core decomposition too: planted members reach core ≥ k.
        let idx = core_decomposition(&bundle.net.social);
        for pc in &truth.communities {
            for &m in &pc.members {
                assert!(idx.core_number(SocialNodeId(m)).unwrap() >= spec.k);
            }
        }
    }

    #[test]
    fn gssac_recovers_planted_neighborhoods() {
        use crate::gssac::{gssac, SearchCaps};
        use crate::model::Query;
        use crate::routing::{HeuristicMode, WeightPolicy};

        let dir = tmpdir();
        let spec = SyntheticSpec {
            communities: 8,
            size_min: 10,
            size_max: 12,
            k: 3,
            p_intra: 0.15,
            p_inter: 0.003,
            grid_width: 16,
            grid_height: 16,
            seed: 5,
            ..SyntheticSpec::default()
        };
        generate_synthetic(&spec, dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
        let truth: GroundTruth = serde_json::from_str(&text).unwrap();

        let mut tried = 0;
        let mut contained = 0;
        for pc in &truth.communities {
            let q = SocialNodeId(pc.members[0]);
            let node = bundle.net.social.node(q).unwrap();
            let query = Query::new(
                &bundle.net,
                q,
                3,
                node.keywords.clone(),
                node.location,
                0.0,
            )
            .unwrap();
            let Ok(out) = gssac(
                &bundle.net,
                &bundle.store,
                &query,
                SearchCaps::default(),
                HeuristicMode::Admissible,
                WeightPolicy::ArrivalTime,
            ) else {
                continue;
            };
            tried += 1;
            let plant: BTreeSet<SocialNodeId> =
                pc.members.iter().map(|&m| SocialNodeId(m)).collect();
            let inside = out.community.members.intersection(&plant).count();
            // Most of the result sits inside the planted community.
            if inside * 3 >= out.community.members.len() * 2 {
                contained += 1;
            }
        }
        assert!(tried >= 6, "too few successful searches: {tried}");
        assert!(
            contained * 10 >= tried * 8,
            "only {contained}/{tried} searches stayed near the planted community"
        );
    }

    #[test]
    fn same_seed_same_bytes() {
        let d1 = tmpdir();
        let d2 = tmpdir();
        let spec = SyntheticSpec::default();
        generate_synthetic(&spec, d1.path()).unwrap();
        generate_synthetic(&spec, d2.path()).unwrap();
        for name in [
            ROAD_NODES_FILE,
            ROAD_EDGES_FILE,
            SOCIAL_NODES_FILE,
            SOCIAL_EDGES_FILE,
            GROUND_TRUTH_FILE,
            MANIFEST_FILE,
        ] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between equal-seed runs");
        }
        // A different seed must change the data files.
        let d3 = tmpdir();
        generate_synthetic(
            &SyntheticSpec {
                seed: 2,
                ..SyntheticSpec::default()
            },
            d3.path(),
        )
        .unwrap();
        let a = std::fs::read(d1.path().join(SOCIAL_EDGES_FILE)).unwrap();
        let b = std::fs::read(d3.path().join(SOCIAL_EDGES_FILE)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn k_equals_size_minus_one_plants_cliques() {
        let dir = tmpdir();
        let spec = SyntheticSpec {
            communities: 3,
            size_min: 4,
            size_max: 4,
            k: 3,
            p_intra: 0.0,
            p_inter: 0.0,
            ..SyntheticSpec::default()
        };
        generate_synthetic(&spec, dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        // Every community is a 4-clique: all degrees 3.
        for n in bundle.net.social.node_ids() {
            assert_eq!(bundle.net.social.degree(n).unwrap(), 3);
        }
    }

    #[test]
    fn infeasible_spec_is_rejected() {
        let spec = SyntheticSpec {
            size_min: 4,
            size_max: 4,
            k: 4,
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            generate_synthetic(&spec, tmpdir().path()),
            Err(DataError::BadSpec(_))
        ));
    }

    #[test]
    fn malformed_inputs_name_the_line() {
        let dir = tmpdir();
        generate_synthetic(&SyntheticSpec::default(), dir.path()).unwrap();
        // Corrupt one breakpoint list.
        let path = dir.path().join(ROAD_EDGES_FILE);
        let mut text = std::fs::read_to_string(&path).unwrap();
        let first_nl = text.find('\n').unwrap();
        text.replace_range(..first_nl, r#"{"u": 1, "v": 2, "w": "oops"}"#);
        std::fs::write(&path, &text).unwrap();
        // The manifest checksum now fails first; that's the integrity path.
        match load_bundle(dir.path()) {
            Err(DataError::ChecksumMismatch { file, .. }) => assert_eq!(file, ROAD_EDGES_FILE),
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
        // Without the manifest, the parse error carries the line number.
        std::fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
        match load_bundle(dir.path()) {
            Err(DataError::Parse { file, line, .. }) => {
                assert_eq!(file, ROAD_EDGES_FILE);
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_increasing_breakpoints_fail_validation() {
        let dir = tmpdir();
        generate_synthetic(&SyntheticSpec::default(), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
        let path = dir.path().join(ROAD_EDGES_FILE);
        let mut text = std::fs::read_to_string(&path).unwrap();
        let first_nl = text.find('\n').unwrap();
        text.replace_range(
            ..first_nl,
            r#"{"u": 1, "v": 2, "w": [[0.0, 5.0], [0.0, 6.0]]}"#,
        );
        std::fs::write(&path, &text).unwrap();
        match load_bundle(dir.path()) {
            Err(DataError::Validation(report)) => {
                assert_eq!(report.violations.len(), 1);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn vectors_file_backs_the_store() {
        let dir = tmpdir();
        generate_synthetic(&SyntheticSpec::default(), dir.path()).unwrap();
        // Remove the manifest so the appended vectors don't trip checksums.
        std::fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
        append_vectors(
            dir.path(),
            &[
                VectorEntry::Keyword("topic00_kw00".into(), vec![1.0, 0.0]),
                VectorEntry::Node(SocialNodeId(1), vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        // File-backed stores have no hash fallback, so node vectors must be
        // derivable; most nodes lack entries here, which is an error.
        match load_bundle(dir.path()) {
            Err(DataError::Semantics(SemanticsError::MissingKeywords(_))) => {}
            other => panic!("expected missing keywords, got {other:?}"),
        }
    }

    #[test]
    fn absent_vectors_engages_hash_provider() {
        let dir = tmpdir();
        generate_synthetic(&SyntheticSpec::default(), dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        assert!(bundle.store.hash_seed().is_some());
        // Any keyword resolves deterministically.
        let a = bundle.store.keyword_vector("anything").unwrap();
        let b = bundle.store.keyword_vector("anything").unwrap();
        assert_eq!(a, b);
    }
}
