//! Temporal graph snapshots, trajectories and datasets.
//!
//! A time-varying graph is stored as the sequence of its temporal subgraphs;
//! presence functions are not materialized. Node identifiers are opaque
//! strings and edges are undirected, kept canonically as `(min, max)` pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: i64 = 1;

/// One temporal subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalGraph {
    #[serde(deserialize_with = "de_ids")]
    pub nodes: Vec<String>,
    #[serde(deserialize_with = "de_edges")]
    pub edges: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, String>>,
}

impl TemporalGraph {
    /// Builds a graph, canonicalizing every edge to `(min, max)` and sorting
    /// the edge list. Duplicates are removed; validity is not checked.
    pub fn new<N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let edges: BTreeSet<[String; 2]> = edges.into_iter().map(|(a, b)| canonical(a, b)).collect();
        TemporalGraph {
            nodes: nodes.into_iter().map(Into::into).collect(),
            edges: edges.into_iter().collect(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Adjacency lists over node positions. Edges with unknown endpoints are
    /// skipped.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for [a, b] in &self.edges {
            if let (Some(&i), Some(&j)) = (index.get(a.as_str()), index.get(b.as_str())) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    /// Node labels in node order; unlabeled nodes contribute their id.
    pub fn to_sequence(&self, id: impl Into<String>) -> LabeledSequence {
        let tokens = self
            .nodes
            .iter()
            .map(|n| {
                self.labels
                    .as_ref()
                    .and_then(|l| l.get(n))
                    .cloned()
                    .unwrap_or_else(|| n.clone())
            })
            .collect();
        LabeledSequence { id: id.into(), tokens }
    }

    fn violations(&self, ctx: &str, out: &mut Vec<String>) {
        let mut seen_nodes = BTreeSet::new();
        for n in &self.nodes {
            if !seen_nodes.insert(n.as_str()) {
                out.push(format!("{ctx}: duplicate node {n:?}"));
            }
        }
        let mut seen_edges = BTreeSet::new();
        for [a, b] in &self.edges {
            if a == b {
                out.push(format!("{ctx}: self-loop on node {a:?}"));
                continue;
            }
            for end in [a, b] {
                if !seen_nodes.contains(end.as_str()) {
                    out.push(format!("{ctx}: edge ({a:?}, {b:?}) has endpoint {end:?} not in nodes"));
                }
            }
            if !seen_edges.insert(canonical(a.clone(), b.clone())) {
                out.push(format!("{ctx}: duplicate edge ({a:?}, {b:?})"));
            }
        }
        if let Some(labels) = &self.labels {
            for n in labels.keys() {
                if !seen_nodes.contains(n.as_str()) {
                    out.push(format!("{ctx}: label for unknown node {n:?}"));
                }
            }
        }
    }
}

fn canonical(a: String, b: String) -> [String; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// An ordered sequence of snapshots of one evolving graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    pub snapshots: Vec<TemporalGraph>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub format_version: i64,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>) -> Self {
        Dataset {
            format_version: FORMAT_VERSION,
            metadata: BTreeMap::new(),
            trajectories,
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    /// Total number of snapshots N.
    pub fn snapshot_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.trajectories.iter().map(Trajectory::len).collect()
    }

    /// All snapshots in trajectory order.
    pub fn graphs(&self) -> impl Iterator<Item = &TemporalGraph> {
        self.trajectories.iter().flat_map(|t| t.snapshots.iter())
    }
}

/// Returns one human-readable description per violated invariant.
pub fn validate_dataset(d: &Dataset) -> Vec<String> {
    let mut out = Vec::new();
    if d.format_version != FORMAT_VERSION {
        out.push(format!("format_version {} != {FORMAT_VERSION}", d.format_version));
    }
    let mut ids = BTreeSet::new();
    for traj in &d.trajectories {
        if !ids.insert(traj.id.as_str()) {
            out.push(format!("duplicate trajectory id {:?}", traj.id));
        }
        if traj.len() < 2 {
            out.push(format!(
                "trajectory {:?} has {} snapshot(s), need at least 2",
                traj.id,
                traj.len()
            ));
        }
        for (t, g) in traj.snapshots.iter().enumerate() {
            g.violations(&format!("trajectory {:?} snapshot {t}", traj.id), &mut out);
        }
    }
    out
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(d)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    // Check the version before the full schema so a future format reports
    // a version error rather than an arbitrary field error.
    #[derive(Deserialize)]
    struct Probe {
        format_version: Option<i64>,
    }
    let probe: Probe = serde_json::from_str(text)?;
    match probe.format_version {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::FormatVersion {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing field `format_version`".into(),
            })
        }
    }
    Ok(serde_json::from_str(text)?)
}

/// Node label sequence of one graph, used by the alignment distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub id: String,
    pub tokens: Vec<String>,
}

impl LabeledSequence {
    pub fn new<I, S>(id: impl Into<String>, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabeledSequence {
            id: id.into(),
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SequenceFile {
    sequences: Vec<LabeledSequence>,
}

pub fn save_sequences(seqs: &[LabeledSequence], path: impl AsRef<Path>) -> Result<()> {
    let file = SequenceFile {
        sequences: seqs.to_vec(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

pub fn load_sequences(path: impl AsRef<Path>) -> Result<Vec<LabeledSequence>> {
    let file: SequenceFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(file.sequences)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Int(i64),
}

impl From<RawId> for String {
    fn from(r: RawId) -> String {
        match r {
            RawId::Str(s) => s,
            RawId::Int(i) => i.to_string(),
        }
    }
}

// Node ids may be written as strings or integers; both load as strings.
fn de_ids<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    let raw: Vec<RawId> = Vec::deserialize(d)?;
    Ok(raw.into_iter().map(Into::into).collect())
}

fn de_edges<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<[String; 2]>, D::Error> {
    let raw: Vec<[RawId; 2]> = Vec::deserialize(d)?;
    Ok(raw.into_iter().map(|[a, b]| [a.into(), b.into()]).collect())
}
