//! Serialization of learning graphs and flows: JSON (round-trips), DOT and
//! a plain-text summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    edge_slot, slot_endpoints, Attachment, FlowAssignment, Index, IndexUniverse, LVertex, LearningGraph, Stage, Transition, TransitionId,
    UniverseKind,
};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum IndexDoc {
    Position(u32),
    Slot([u32; 2]),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct VertexDoc {
    queried: Vec<IndexDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotation: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TransitionDoc {
    id: TransitionId,
    from: u32,
    to: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct StageDoc {
    label: String,
    transitions: Vec<TransitionDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct FlowDoc {
    id: TransitionId,
    #[serde(with = "crate::rational::serde_q")]
    flow: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct AttachmentDoc {
    vertex: u32,
    anchor: Vec<u32>,
    indices: Vec<IndexDoc>,
    graph: GraphDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct GraphDoc {
    universe: IndexUniverse,
    layers: Vec<Vec<VertexDoc>>,
    stages: Vec<StageDoc>,
    #[serde(default)]
    attachments: Vec<AttachmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flows: Option<Vec<FlowDoc>>,
}

fn index_doc(universe: &IndexUniverse, i: Index) -> IndexDoc {
    match universe.kind {
        UniverseKind::Positions => IndexDoc::Position(i),
        UniverseKind::EdgeSlots => {
            let (u, v) = slot_endpoints(i);
            IndexDoc::Slot([u, v])
        }
    }
}

fn index_from_doc(universe: &IndexUniverse, d: IndexDoc) -> Result<Index> {
    match (universe.kind, d) {
        (UniverseKind::Positions, IndexDoc::Position(i)) => Ok(i),
        (UniverseKind::EdgeSlots, IndexDoc::Slot([u, v])) if u < v => Ok(edge_slot(u, v)),
        (UniverseKind::EdgeSlots, IndexDoc::Slot([u, v])) => Err(Error::Parse(format!("edge slot [{u}, {v}] must have u < v"))),
        (UniverseKind::Positions, IndexDoc::Slot(_)) => Err(Error::Parse("edge slot in a position universe".into())),
        (UniverseKind::EdgeSlots, IndexDoc::Position(_)) => Err(Error::Parse("bare index in an edge-slot universe".into())),
    }
}

fn to_doc(lg: &LearningGraph, flow: Option<&FlowAssignment>) -> GraphDoc {
    let u = lg.universe;
    GraphDoc {
        universe: u,
        layers: lg
            .layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|v| VertexDoc {
                        queried: v.queried().iter().map(|&i| index_doc(&u, i)).collect(),
                        annotation: v.annotation().map(<[u32]>::to_vec),
                    })
                    .collect()
            })
            .collect(),
        stages: lg
            .stages
            .iter()
            .map(|s| StageDoc {
                label: s.label.clone(),
                transitions: s.transitions.iter().map(|t| TransitionDoc { id: t.id, from: t.from, to: t.to }).collect(),
            })
            .collect(),
        attachments: lg
            .attachments
            .iter()
            .map(|(&vertex, a)| AttachmentDoc {
                vertex,
                anchor: a.anchor.clone(),
                indices: a.indices.iter().map(|&i| index_doc(&u, i)).collect(),
                graph: to_doc(&a.graph, flow.and_then(|f| f.attached.get(&vertex))),
            })
            .collect(),
        flows: flow.map(|f| f.flows.iter().map(|(&id, q)| FlowDoc { id, flow: q.clone() }).collect()),
    }
}

fn from_doc(doc: GraphDoc) -> Result<(LearningGraph, Option<FlowAssignment>)> {
    let u = doc.universe;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for layer in doc.layers {
        let mut out = Vec::with_capacity(layer.len());
        for v in layer {
            let queried = v.queried.into_iter().map(|d| index_from_doc(&u, d)).collect::<Result<Vec<_>>>()?;
            out.push(match v.annotation {
                Some(a) => LVertex::annotated(queried, a),
                None => LVertex::new(queried),
            });
        }
        layers.push(out);
    }
    let stages = doc
        .stages
        .into_iter()
        .map(|s| Stage { label: s.label, transitions: s.transitions.into_iter().map(|t| Transition { id: t.id, from: t.from, to: t.to }).collect() })
        .collect();
    let mut lg = LearningGraph::from_parts(u, layers, stages);
    let mut flow = doc.flows.map(|fs| {
        let mut f = FlowAssignment::new();
        for d in fs {
            f.set(d.id, d.flow);
        }
        f
    });
    for a in doc.attachments {
        let indices = a.indices.into_iter().map(|d| index_from_doc(&u, d)).collect::<Result<Vec<_>>>()?;
        let (graph, sub) = from_doc(a.graph)?;
        if let (Some(f), Some(s)) = (flow.as_mut(), sub) {
            f.attached.insert(a.vertex, s);
        }
        lg.attachments.insert(a.vertex, Attachment { anchor: a.anchor, indices, graph });
    }
    Ok((lg, flow))
}

/// Pretty JSON with fields `universe, layers, stages, attachments, flows`.
/// `flows` (and the flows of each attachment) are present only when a flow
/// is given.
pub fn graph_json(lg: &LearningGraph, flow: Option<&FlowAssignment>) -> String {
    serde_json::to_string_pretty(&to_doc(lg, flow)).expect("graph document serializes")
}

/// Inverse of [`graph_json`].
pub fn parse_graph_json(text: &str) -> Result<(LearningGraph, Option<FlowAssignment>)> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_doc(doc)
}

fn vertex_label(u: &IndexUniverse, v: &LVertex) -> String {
    let items: Vec<String> = v
        .queried()
        .iter()
        .map(|&i| match u.kind {
            UniverseKind::Positions => i.to_string(),
            UniverseKind::EdgeSlots => {
                let (a, b) = slot_endpoints(i);
                format!("{a}-{b}")
            }
        })
        .collect();
    let mut label = format!("{{{}}}", items.join(","));
    if let Some(a) = v.annotation() {
        let verts: Vec<String> = a.iter().map(u32::to_string).collect();
        let _ = write!(label, " W={{{}}}", verts.join(","));
    }
    label
}

/// DOT digraph: one node per L-vertex, one edge per transition, one ranked
/// cluster per layer. Subroutine attachments are listed as comments.
pub fn graph_dot(lg: &LearningGraph) -> String {
    let mut out = String::from("digraph learning_graph {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n");
    for (li, layer) in lg.layers.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_layer{li} {{");
        let _ = writeln!(out, "    rank=same;");
        let label = if li == 0 { "source".to_string() } else { format!("stage {}", lg.stages[li - 1].label) };
        let _ = writeln!(out, "    label=\"{label}\";");
        for (vi, v) in layer.iter().enumerate() {
            let _ = writeln!(out, "    v{li}_{vi} [label=\"{}\"];", vertex_label(&lg.universe, v));
        }
        out.push_str("  }\n");
    }
    for (si, stage) in lg.stages.iter().enumerate() {
        for t in &stage.transitions {
            let _ = writeln!(out, "  v{si}_{} -> v{}_{} [label=\"{}\"];", t.from, si + 1, t.to, t.id);
        }
    }
    for (v, a) in &lg.attachments {
        let _ = writeln!(out, "  // subroutine at v{}_{v}: {} vertices, {} transitions", lg.final_layer(), a.graph.node_count(), a.graph.transition_count());
    }
    out.push_str("}\n");
    out
}

/// Layer and stage sizes, plus per-stage flow totals when a flow is given.
pub fn graph_text(lg: &LearningGraph, flow: Option<&FlowAssignment>) -> String {
    let mut out = String::new();
    let kind = match lg.universe.kind {
        UniverseKind::Positions => "positions",
        UniverseKind::EdgeSlots => "edge slots of a graph on",
    };
    let _ = writeln!(out, "universe: {kind} {}", lg.universe.size);
    let _ = writeln!(out, "vertices: {}  transitions: {}", lg.node_count(), lg.transition_count());
    let sums = flow.map(|f| f.stage_sums(lg));
    let _ = writeln!(out, "{:<8} {:>10} {:>12} {:>14}", "stage", "vertices", "transitions", "flow");
    for (i, s) in lg.stages.iter().enumerate() {
        let total = sums.as_ref().map_or_else(|| "-".to_string(), |v| v[i].to_string());
        let _ = writeln!(out, "{:<8} {:>10} {:>12} {:>14}", s.label, lg.layers[i + 1].len(), s.transitions.len(), total);
    }
    if !lg.attachments.is_empty() {
        let sizes: BTreeMap<usize, usize> = lg.attachments.values().fold(BTreeMap::new(), |mut m, a| {
            *m.entry(a.graph.transition_count()).or_default() += 1;
            m
        });
        let desc: Vec<String> = sizes.iter().map(|(t, c)| format!("{c} x {t} transitions")).collect();
        let _ = writeln!(out, "subroutines: {} ({})", lg.attachments.len(), desc.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{KDistinctness, ProblemInstance};
    use crate::graph::ValidationReport;

    #[test]
    fn kdist_dot_counts() {
        let b = KDistinctness::new(5, 2, 4).unwrap();
        let dot = graph_dot(b.graph());
        assert_eq!(dot.matches(" [label=\"{").count(), 26);
        assert_eq!(dot.matches(" -> ").count(), 60);
    }

    #[test]
    fn json_round_trip_with_flow() {
        let inst = ProblemInstance::distinctness(vec![0, 1, 0, 2, 1], 2);
        let b = crate::builders::build_kdistinctness(5, 2, 4, &inst).unwrap();
        let text = graph_json(&b.graph, Some(&b.flow));
        let (lg, flow) = parse_graph_json(&text).unwrap();
        assert_eq!(lg, b.graph);
        assert_eq!(flow.unwrap(), b.flow);
        assert_eq!(graph_json(&lg, Some(&b.flow)), text);
    }

    #[test]
    fn empty_report_json() {
        assert_eq!(serde_json::to_string(&ValidationReport::default()).unwrap(), r#"{"violations":[]}"#);
    }

    #[test]
    fn slot_in_position_universe_rejected() {
        let text = r#"{"universe":{"size":3,"kind":"positions"},"layers":[[{"queried":[]}],[{"queried":[[0,1]]}]],"stages":[{"label":"1","transitions":[{"id":0,"from":0,"to":0}]}]}"#;
        assert!(matches!(parse_graph_json(text), Err(Error::Parse(_))));
        let ok = text.replace("[[0,1]]", "[1]");
        let (lg, flow) = parse_graph_json(&ok).unwrap();
        assert_eq!(lg.layers[1][0].queried(), &[1]);
        assert!(flow.is_none());
    }
}
