use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{is_subset, transition_length, LVertex, LearningGraph, UniverseKind};

/// One structural or flow problem. Stage and layer numbers are 1-based as
/// printed; vertex and transition numbers are positions and ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    BadSource { detail: String },
    StageLayerMismatch { stages: usize, layers: usize },
    DanglingEndpoint { stage: usize, transition: u32 },
    DuplicateTransitionId { transition: u32 },
    NotStrictSuperset { stage: usize, transition: u32 },
    DuplicateVertex { layer: usize, vertex: usize },
    OutsideUniverse { layer: usize, vertex: usize },
    AnnotationMismatch { layer: usize, vertex: usize },
    Unreachable { layer: usize, vertex: usize },
    Cycle,
    Attachment { vertex: usize, detail: String },
    NegativeFlow { transition: u32, value: String },
    SourceFlow { total: String },
    StageSum { stage: usize, total: String },
    Conservation { layer: usize, vertex: usize, inflow: String, outflow: String },
    MissingSubroutineFlow { vertex: usize },
    Subroutine { vertex: usize, violations: Vec<Violation> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            BadSource { detail } => write!(f, "bad source: {detail}"),
            StageLayerMismatch { stages, layers } => {
                write!(f, "{stages} stages for {layers} layers")
            }
            DanglingEndpoint { stage, transition } => {
                write!(f, "stage {stage} transition {transition}: endpoint outside its layer")
            }
            DuplicateTransitionId { transition } => write!(f, "transition id {transition} repeated"),
            NotStrictSuperset { stage, transition } => {
                write!(f, "stage {stage} transition {transition}: not strict superset")
            }
            DuplicateVertex { layer, vertex } => write!(f, "layer {layer} vertex {vertex}: duplicate label"),
            OutsideUniverse { layer, vertex } => {
                write!(f, "layer {layer} vertex {vertex}: index outside universe")
            }
            AnnotationMismatch { layer, vertex } => {
                write!(f, "layer {layer} vertex {vertex}: queried edge outside annotation")
            }
            Unreachable { layer, vertex } => {
                write!(f, "layer {layer} vertex {vertex}: distance differs from layer index")
            }
            Cycle => write!(f, "graph has a directed cycle"),
            Attachment { vertex, detail } => write!(f, "attachment at {vertex}: {detail}"),
            NegativeFlow { transition, value } => write!(f, "transition {transition}: negative flow {value}"),
            SourceFlow { total } => write!(f, "source flow ≠ 1 (got {total})"),
            StageSum { stage, total } => write!(f, "stage {stage} flow sums to {total}, not 1"),
            Conservation { layer, vertex, inflow, outflow } => write!(
                f,
                "layer {layer} vertex {vertex}: flow not conserved (in {inflow}, out {outflow})"
            ),
            MissingSubroutineFlow { vertex } => {
                write!(f, "attachment at {vertex} receives flow but has none of its own")
            }
            Subroutine { vertex, violations } => {
                write!(f, "subroutine at {vertex}:")?;
                for v in violations {
                    write!(f, " [{v}]")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// 1-based stages holding zero-length transitions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_stages: Vec<usize>,
    /// Per-stage flow totals (flow checks only).
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "crate::rational::serde_q_vec")]
    pub stage_sums: Vec<crate::rational::Q>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the shape of `lg` without looking at flows.
///
/// Zero-length transitions are accepted (and their stages listed in
/// [`ValidationReport::degenerate_stages`]) when the target's annotation
/// strictly grows or both endpoints have empty queried sets.
pub fn validate_structure(lg: &LearningGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    match lg.layers.first().map(Vec::as_slice) {
        Some([source]) if source.is_empty() && source.annotation().is_none_or(<[u32]>::is_empty) => {}
        Some([source]) => v.push(Violation::BadSource { detail: format!("source is {source:?}, not ∅") }),
        Some(layer) => v.push(Violation::BadSource { detail: format!("layer 0 has {} vertices", layer.len()) }),
        None => v.push(Violation::BadSource { detail: "no layers".into() }),
    }
    if lg.stages.len() + 1 != lg.layers.len() {
        v.push(Violation::StageLayerMismatch { stages: lg.stages.len(), layers: lg.layers.len() });
    }

    let universe_len = lg.universe.len() as u32;
    for (l, layer) in lg.layers.iter().enumerate() {
        let mut seen: HashMap<&LVertex, usize> = HashMap::with_capacity(layer.len());
        for (i, vert) in layer.iter().enumerate() {
            if seen.insert(vert, i).is_some() {
                v.push(Violation::DuplicateVertex { layer: l, vertex: i });
            }
            if vert.queried().iter().any(|&x| x >= universe_len) {
                v.push(Violation::OutsideUniverse { layer: l, vertex: i });
            }
            if let (UniverseKind::EdgeSlots, Some(ann)) = (lg.universe.kind, vert.annotation()) {
                if ann.iter().any(|&x| x as usize >= lg.universe.size) {
                    v.push(Violation::OutsideUniverse { layer: l, vertex: i });
                }
                let inside = vert.queried().iter().all(|&e| {
                    let (a, b) = super::slot_endpoints(e);
                    ann.binary_search(&a).is_ok() && ann.binary_search(&b).is_ok()
                });
                if !inside {
                    v.push(Violation::AnnotationMismatch { layer: l, vertex: i });
                }
            }
        }
    }

    let mut ids = HashMap::new();
    let mut reached: Vec<Vec<bool>> = lg.layers.iter().map(|l| vec![false; l.len()]).collect();
    if let Some(r) = reached.first_mut() {
        r.fill(true);
    }
    for (s, stage) in lg.stages.iter().enumerate() {
        let (Some(prev), Some(next)) = (lg.layers.get(s), lg.layers.get(s + 1)) else {
            continue;
        };
        let mut degenerate = false;
        for t in &stage.transitions {
            if ids.insert(t.id, ()).is_some() {
                v.push(Violation::DuplicateTransitionId { transition: t.id });
            }
            let (Some(a), Some(b)) = (prev.get(t.from as usize), next.get(t.to as usize)) else {
                v.push(Violation::DanglingEndpoint { stage: s + 1, transition: t.id });
                continue;
            };
            match arc_kind(a, b) {
                ArcKind::Strict => {}
                ArcKind::ZeroLength => degenerate = true,
                ArcKind::Invalid => v.push(Violation::NotStrictSuperset { stage: s + 1, transition: t.id }),
            }
            if reached[s][t.from as usize] {
                reached[s + 1][t.to as usize] = true;
            }
        }
        if degenerate {
            report.degenerate_stages.push(s + 1);
        }
    }
    for (l, layer) in reached.iter().enumerate().skip(1) {
        for (i, &ok) in layer.iter().enumerate() {
            if !ok {
                v.push(Violation::Unreachable { layer: l, vertex: i });
            }
        }
    }
    if has_label_cycle(lg) {
        v.push(Violation::Cycle);
    }

    for (&vertex, att) in &lg.attachments {
        let vertex = vertex as usize;
        let Some(s) = lg.layers.last().and_then(|l| l.get(vertex)) else {
            v.push(Violation::Attachment { vertex, detail: "not a final-layer vertex".into() });
            continue;
        };
        if att.indices.iter().any(|&i| s.contains(i) || i >= universe_len) {
            v.push(Violation::Attachment { vertex, detail: "appended universe overlaps S or leaves the universe".into() });
        }
        if att.graph.universe.len() != att.indices.len() {
            v.push(Violation::Attachment { vertex, detail: "appended universe size differs from index map".into() });
        }
        let inner = validate_structure(&att.graph);
        if !inner.violations.is_empty() {
            v.push(Violation::Subroutine { vertex, violations: inner.violations });
        }
    }
    report
}

enum ArcKind {
    Strict,
    ZeroLength,
    Invalid,
}

fn arc_kind(a: &LVertex, b: &LVertex) -> ArcKind {
    if !is_subset(a.queried(), b.queried()) {
        return ArcKind::Invalid;
    }
    if transition_length(a, b) > 0 {
        return ArcKind::Strict;
    }
    let grows = match (a.annotation(), b.annotation()) {
        (Some(x), Some(y)) => x.len() < y.len() && is_subset(x, y),
        (None, Some(y)) => !y.is_empty(),
        _ => false,
    };
    if grows || a.is_empty() {
        ArcKind::ZeroLength
    } else {
        ArcKind::Invalid
    }
}

/// Cycle check on the graph obtained by merging equal labels across layers.
/// Zero-length arcs between identical labels are ignored; they are already
/// reported as degenerate.
fn has_label_cycle(lg: &LearningGraph) -> bool {
    let mut ids: HashMap<&LVertex, usize> = HashMap::new();
    for layer in &lg.layers {
        for vert in layer {
            let next = ids.len();
            ids.entry(vert).or_insert(next);
        }
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    let mut indeg = vec![0usize; ids.len()];
    for (s, stage) in lg.stages.iter().enumerate() {
        for t in &stage.transitions {
            let (Some(a), Some(b)) = (
                lg.layers.get(s).and_then(|l| l.get(t.from as usize)),
                lg.layers.get(s + 1).and_then(|l| l.get(t.to as usize)),
            ) else {
                continue;
            };
            if a == b {
                continue;
            }
            out[ids[a]].push(ids[b]);
            indeg[ids[b]] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..ids.len()).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(x) = stack.pop() {
        seen += 1;
        for &y in &out[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                stack.push(y);
            }
        }
    }
    seen != ids.len()
}
