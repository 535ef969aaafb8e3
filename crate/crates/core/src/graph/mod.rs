//! The learning-graph data model.
//!
//! A [`LearningGraph`] is stored layer by layer: `layers[0]` holds the single
//! empty source vertex and `stages[i]` holds the transitions from
//! `layers[i]` to `layers[i + 1]`. A vertex is identified by its layer and
//! its position in that layer; transitions refer to endpoints by position.
//! Subroutine graphs hang off final-layer vertices through
//! [`LearningGraph::attachments`].

mod flow;
mod validate;

pub use flow::{average_length, check_flow, composite_flows, FlowAssignment};
pub use validate::{validate_structure, ValidationReport, Violation};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An input index: a position, or an edge slot encoded by [`edge_slot`].
pub type Index = u32;

pub type TransitionId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniverseKind {
    /// Indices are positions `0..n`.
    Positions,
    /// Indices are unordered vertex pairs of an `n`-vertex graph.
    EdgeSlots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexUniverse {
    /// Number of positions, or number of graph vertices for edge slots.
    pub size: usize,
    pub kind: UniverseKind,
}

impl IndexUniverse {
    pub fn positions(n: usize) -> Self {
        IndexUniverse { size: n, kind: UniverseKind::Positions }
    }

    pub fn edge_slots(n: usize) -> Self {
        IndexUniverse { size: n, kind: UniverseKind::EdgeSlots }
    }

    /// Number of indices in the universe.
    pub fn len(&self) -> usize {
        match self.kind {
            UniverseKind::Positions => self.size,
            UniverseKind::EdgeSlots => self.size * self.size.saturating_sub(1) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, idx: Index) -> bool {
        (idx as usize) < self.len()
    }

    pub fn is_graph(&self) -> bool {
        self.kind == UniverseKind::EdgeSlots
    }
}

/// Edge-slot id of `{u, v}`; slots are numbered colexicographically.
pub fn edge_slot(u: u32, v: u32) -> Index {
    assert_ne!(u, v, "edge slot needs distinct endpoints");
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    b * (b - 1) / 2 + a
}

/// Inverse of [`edge_slot`]; returns `(u, v)` with `u < v`.
pub fn slot_endpoints(id: Index) -> (u32, u32) {
    let mut v = (((1.0 + 8.0 * id as f64).sqrt() + 1.0) / 2.0) as u32;
    while v * (v - 1) / 2 > id {
        v -= 1;
    }
    while (v + 1) * v / 2 <= id {
        v += 1;
    }
    (id - v * (v - 1) / 2, v)
}

/// Edge slots of the complete graph on `vertices`, sorted.
pub fn clique_slots(vertices: &[u32]) -> Vec<Index> {
    let mut out = Vec::with_capacity(vertices.len() * vertices.len().saturating_sub(1) / 2);
    for (i, &u) in vertices.iter().enumerate() {
        for &v in &vertices[i + 1..] {
            out.push(edge_slot(u, v));
        }
    }
    out.sort_unstable();
    out
}

/// A learning-graph vertex: the set of indices queried so far, plus an
/// optional set of graph vertices for graph-type constructions.
///
/// Both lists are kept sorted and deduplicated, so equality is label equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LVertex {
    queried: Vec<Index>,
    annotation: Option<Vec<u32>>,
}

impl LVertex {
    pub fn empty() -> Self {
        LVertex::default()
    }

    pub fn new(queried: impl IntoIterator<Item = Index>) -> Self {
        LVertex { queried: sorted(queried), annotation: None }
    }

    pub fn annotated(
        queried: impl IntoIterator<Item = Index>,
        vertices: impl IntoIterator<Item = u32>,
    ) -> Self {
        LVertex { queried: sorted(queried), annotation: Some(sorted(vertices)) }
    }

    pub fn queried(&self) -> &[Index] {
        &self.queried
    }

    pub fn annotation(&self) -> Option<&[u32]> {
        self.annotation.as_deref()
    }

    pub fn len(&self) -> usize {
        self.queried.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queried.is_empty()
    }

    pub fn contains(&self, idx: Index) -> bool {
        self.queried.binary_search(&idx).is_ok()
    }

    pub(crate) fn from_sorted(queried: Vec<Index>, annotation: Option<Vec<u32>>) -> Self {
        debug_assert!(queried.windows(2).all(|w| w[0] < w[1]));
        LVertex { queried, annotation }
    }
}

fn sorted<T: Ord>(items: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = items.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// `true` iff every element of sorted `a` is in sorted `b`.
pub(crate) fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Number of indices queried by the transition `from -> to`, i.e. `|to \ from|`.
pub fn transition_length(from: &LVertex, to: &LVertex) -> usize {
    let mut count = 0;
    let mut j = 0;
    for &x in &to.queried {
        while j < from.queried.len() && from.queried[j] < x {
            j += 1;
        }
        if j >= from.queried.len() || from.queried[j] != x {
            count += 1;
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub id: TransitionId,
    /// Position of the source vertex in the previous layer.
    pub from: u32,
    /// Position of the target vertex in the next layer.
    pub to: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub label: String,
    pub transitions: Vec<Transition>,
}

/// A subroutine graph appended at a final-layer vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attachment {
    /// Graph vertices the subroutine is rooted at (e.g. the candidate vertex
    /// whose incident edges it searches). Part of the attachment point's
    /// identity under the symmetry group.
    pub anchor: Vec<u32>,
    /// Parent-universe index of each position of the appended graph.
    pub indices: Vec<Index>,
    /// Learning graph over positions `0..indices.len()`.
    pub graph: LearningGraph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearningGraph {
    pub universe: IndexUniverse,
    pub layers: Vec<Vec<LVertex>>,
    pub stages: Vec<Stage>,
    /// Keyed by position in the final layer.
    pub attachments: BTreeMap<u32, Attachment>,
}

impl LearningGraph {
    /// A graph holding only the source vertex.
    pub fn new(universe: IndexUniverse) -> Self {
        let source = match universe.kind {
            UniverseKind::Positions => LVertex::empty(),
            UniverseKind::EdgeSlots => LVertex::annotated([], []),
        };
        LearningGraph {
            universe,
            layers: vec![vec![source]],
            stages: Vec::new(),
            attachments: BTreeMap::new(),
        }
    }

    /// Assembles a graph from raw parts without checking anything; run
    /// [`validate_structure`] on the result.
    pub fn from_parts(universe: IndexUniverse, layers: Vec<Vec<LVertex>>, stages: Vec<Stage>) -> Self {
        LearningGraph { universe, layers, stages, attachments: BTreeMap::new() }
    }

    /// Appends a layer and the stage leading into it. `arcs` are
    /// `(from, to)` positions; ids continue from the previous stage.
    pub fn push_stage(&mut self, label: impl Into<String>, vertices: Vec<LVertex>, arcs: Vec<(u32, u32)>) {
        let mut next_id = self.next_transition_id();
        let transitions = arcs
            .into_iter()
            .map(|(from, to)| {
                let t = Transition { id: next_id, from, to };
                next_id += 1;
                t
            })
            .collect();
        self.layers.push(vertices);
        self.stages.push(Stage { label: label.into(), transitions });
    }

    fn next_transition_id(&self) -> TransitionId {
        self.stages
            .iter()
            .flat_map(|s| s.transitions.iter().map(|t| t.id + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn final_layer(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// `(from, to)` labels of a transition in stage `stage` (0-based).
    pub fn endpoints(&self, stage: usize, t: &Transition) -> (&LVertex, &LVertex) {
        (&self.layers[stage][t.from as usize], &self.layers[stage + 1][t.to as usize])
    }

    pub fn length(&self, stage: usize, t: &Transition) -> usize {
        let (a, b) = self.endpoints(stage, t);
        transition_length(a, b)
    }

    /// Maps every transition id to `(stage, position in stage)`.
    pub fn transition_index(&self) -> HashMap<TransitionId, (usize, usize)> {
        let mut map = HashMap::new();
        for (s, stage) in self.stages.iter().enumerate() {
            for (i, t) in stage.transitions.iter().enumerate() {
                map.insert(t.id, (s, i));
            }
        }
        map
    }

    pub fn transition_count(&self) -> usize {
        self.stages.iter().map(|s| s.transitions.len()).sum()
    }

    /// L-vertices in this graph and, recursively, in its attachments.
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum::<usize>()
            + self.attachments.values().map(|a| a.graph.node_count()).sum::<usize>()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn stage_sizes(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.transitions.len()).collect()
    }
}

/// Appends subroutine graphs at final-layer vertices of `lg`.
///
/// Each appended graph is a learning graph over its own positions, which are
/// mapped into the parent universe by [`Attachment::indices`]. Those indices
/// must lie outside the attachment vertex's queried set. Flows for appended
/// graphs are stored unscaled in [`FlowAssignment::attached`]; see
/// [`composite_flows`] for the scaled view.
pub fn append_subroutine(mut lg: LearningGraph, subs: BTreeMap<u32, Attachment>) -> Result<LearningGraph> {
    let last = lg.final_layer();
    for (&vertex, att) in &subs {
        let bad = |reason: String| Error::BadAttachment { vertex: vertex as usize, reason };
        let Some(s) = lg.layers[last].get(vertex as usize) else {
            return Err(bad("not a final-layer vertex".into()));
        };
        if att.graph.universe.kind != UniverseKind::Positions {
            return Err(bad("appended graph must be over positions".into()));
        }
        if att.graph.universe.len() != att.indices.len() {
            return Err(bad(format!(
                "appended universe has {} positions but {} indices are mapped",
                att.graph.universe.len(),
                att.indices.len()
            )));
        }
        if let Some(&i) = att.indices.iter().find(|&&i| !lg.universe.contains(i)) {
            return Err(bad(format!("index {i} is outside the universe")));
        }
        if let Some(&i) = att.indices.iter().find(|&&i| s.contains(i)) {
            return Err(bad(format!("appended universe overlaps S at index {i}")));
        }
        let mut seen = att.indices.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != att.indices.len() {
            return Err(bad("appended universe repeats an index".into()));
        }
        if lg.attachments.contains_key(&vertex) {
            return Err(bad("vertex already has an attachment".into()));
        }
    }
    lg.attachments.extend(subs);
    Ok(lg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_round_trip() {
        let mut id = 0;
        for v in 1..40u32 {
            for u in 0..v {
                assert_eq!(edge_slot(u, v), id);
                assert_eq!(edge_slot(v, u), id);
                assert_eq!(slot_endpoints(id), (u, v));
                id += 1;
            }
        }
    }

    #[test]
    fn lengths() {
        assert_eq!(transition_length(&LVertex::empty(), &LVertex::new([3, 7])), 2);
        assert_eq!(transition_length(&LVertex::new([1, 2]), &LVertex::new([1, 2, 5])), 1);
        assert_eq!(transition_length(&LVertex::new([1, 2]), &LVertex::new([2])), 0);
    }

    #[test]
    fn labels_are_canonical() {
        assert_eq!(LVertex::new([3, 1, 3]), LVertex::new([1, 3]));
        assert_ne!(LVertex::annotated([], [0]), LVertex::annotated([], [1]));
        assert_ne!(LVertex::annotated([], []), LVertex::empty());
    }

    #[test]
    fn subset_check() {
        assert!(is_subset(&[], &[1]));
        assert!(is_subset(&[1, 3], &[0, 1, 2, 3]));
        assert!(!is_subset(&[1, 4], &[0, 1, 2, 3]));
    }

    fn star_graph() -> LearningGraph {
        let mut lg = LearningGraph::new(IndexUniverse::positions(2));
        lg.push_stage("1", vec![LVertex::new([0]), LVertex::new([1])], vec![(0, 0), (0, 1)]);
        lg
    }

    fn unit_sub() -> LearningGraph {
        let mut g = LearningGraph::new(IndexUniverse::positions(1));
        g.push_stage("1", vec![LVertex::new([0])], vec![(0, 0)]);
        g
    }

    #[test]
    fn append_rejects_overlap() {
        let lg = star_graph();
        let att = Attachment { anchor: vec![], indices: vec![0], graph: unit_sub() };
        let err = append_subroutine(lg, BTreeMap::from([(0, att)])).unwrap_err();
        assert!(err.to_string().contains("overlaps S"), "{err}");
    }

    #[test]
    fn append_rejects_size_mismatch_and_unknown_vertex() {
        let att = Attachment { anchor: vec![], indices: vec![0, 1], graph: unit_sub() };
        assert!(append_subroutine(star_graph(), BTreeMap::from([(1, att.clone())])).is_err());
        let att = Attachment { anchor: vec![], indices: vec![1], graph: unit_sub() };
        assert!(append_subroutine(star_graph(), BTreeMap::from([(5, att)])).is_err());
    }

    #[test]
    fn push_stage_assigns_sequential_ids() {
        let mut lg = star_graph();
        lg.push_stage("2", vec![LVertex::new([0, 1])], vec![(0, 0), (1, 0)]);
        let ids: Vec<_> = lg.stages.iter().flat_map(|s| s.transitions.iter().map(|t| t.id)).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(lg.layer_sizes(), vec![1, 2, 1]);
        assert_eq!(lg.node_count(), 4);
    }
}
