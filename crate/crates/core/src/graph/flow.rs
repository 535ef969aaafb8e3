use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::validate::{ValidationReport, Violation};
use super::{LearningGraph, TransitionId};
use crate::error::{Error, Result};
use crate::rational::Q;

/// Flow of one positive input over a learning graph.
///
/// Transitions missing from `flows` carry zero flow. Flows of appended
/// subroutine graphs are kept in `attached`, keyed like
/// [`LearningGraph::attachments`], and are *unscaled*: each sums to one at
/// its own source. [`composite_flows`] multiplies them by the in-flow of
/// their attachment vertex.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowAssignment {
    pub flows: BTreeMap<TransitionId, Q>,
    pub attached: BTreeMap<u32, FlowAssignment>,
}

impl FlowAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, id: TransitionId) -> Q {
        self.flows.get(&id).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_positive(&self, id: TransitionId) -> bool {
        self.flows.get(&id).is_some_and(|q| q.is_positive())
    }

    /// Sets a flow; zero values are dropped from the map.
    pub fn set(&mut self, id: TransitionId, value: Q) {
        if value.is_zero() {
            self.flows.remove(&id);
        } else {
            self.flows.insert(id, value);
        }
    }

    /// Flow entering each vertex, layer by layer. The source's entry is the
    /// total flow leaving it.
    pub fn inflows(&self, lg: &LearningGraph) -> Vec<Vec<Q>> {
        let mut acc: Vec<Vec<Q>> = lg.layers.iter().map(|l| vec![Q::zero(); l.len()]).collect();
        for (s, stage) in lg.stages.iter().enumerate() {
            for t in &stage.transitions {
                if let Some(f) = self.flows.get(&t.id) {
                    if let Some(slot) = acc.get_mut(s + 1).and_then(|l| l.get_mut(t.to as usize)) {
                        *slot += f;
                    }
                    if s == 0 {
                        if let Some(src) = acc[0].get_mut(t.from as usize) {
                            *src += f;
                        }
                    }
                }
            }
        }
        acc
    }

    pub fn stage_sums(&self, lg: &LearningGraph) -> Vec<Q> {
        lg.stages
            .iter()
            .map(|s| s.transitions.iter().filter_map(|t| self.flows.get(&t.id)).sum())
            .collect()
    }

    /// Every flow multiplied by `factor`; nested attachment flows stay unscaled.
    pub fn scaled(&self, factor: &Q) -> FlowAssignment {
        FlowAssignment {
            flows: self.flows.iter().map(|(&k, v)| (k, v * factor)).filter(|(_, v)| !v.is_zero()).collect(),
            attached: self.attached.clone(),
        }
    }
}

/// Scaled flows of every appended subroutine: internal flow times the
/// in-flow `p_S` of its attachment vertex.
pub fn composite_flows(lg: &LearningGraph, flow: &FlowAssignment) -> BTreeMap<u32, FlowAssignment> {
    let inflow = flow.inflows(lg);
    let last = lg.final_layer();
    flow.attached
        .iter()
        .filter_map(|(&v, sub)| {
            let p = inflow[last].get(v as usize)?;
            Some((v, sub.scaled(p)))
        })
        .collect()
}

/// Checks unit source flow, per-stage unit sums, non-negativity and
/// conservation at every vertex with outgoing transitions, then recurses
/// into attachments that receive flow.
///
/// Flow values on ids that are not transitions of `lg` reject the input.
pub fn check_flow(lg: &LearningGraph, flow: &FlowAssignment) -> Result<ValidationReport> {
    let index = lg.transition_index();
    if let Some(&bad) = flow.flows.keys().find(|id| !index.contains_key(id)) {
        return Err(Error::UnknownTransition(bad));
    }
    if let Some(&v) = flow.attached.keys().find(|v| !lg.attachments.contains_key(v)) {
        return Err(Error::BadAttachment { vertex: v as usize, reason: "flow given for a missing attachment".into() });
    }

    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    for (&id, q) in &flow.flows {
        if q.is_negative() {
            v.push(Violation::NegativeFlow { transition: id, value: q.to_string() });
        }
    }

    let sums = flow.stage_sums(lg);
    for (s, total) in sums.iter().enumerate() {
        if !total.is_one() {
            if s == 0 {
                v.push(Violation::SourceFlow { total: total.to_string() });
            } else {
                v.push(Violation::StageSum { stage: s + 1, total: total.to_string() });
            }
        }
    }
    if lg.stages.is_empty() {
        v.push(Violation::SourceFlow { total: "0".into() });
    }

    let inflow = flow.inflows(lg);
    let mut outflow: Vec<Vec<Option<Q>>> = lg.layers.iter().map(|l| vec![None; l.len()]).collect();
    for (s, stage) in lg.stages.iter().enumerate() {
        for t in &stage.transitions {
            if let Some(slot) = outflow[s].get_mut(t.from as usize) {
                let f = flow.value(t.id);
                *slot = Some(slot.take().map_or(f.clone(), |acc| acc + f));
            }
        }
    }
    for (l, layer) in outflow.iter().enumerate().skip(1) {
        for (i, out) in layer.iter().enumerate() {
            if let Some(out) = out {
                if *out != inflow[l][i] {
                    v.push(Violation::Conservation {
                        layer: l,
                        vertex: i,
                        inflow: inflow[l][i].to_string(),
                        outflow: out.to_string(),
                    });
                }
            }
        }
    }

    let last = lg.final_layer();
    for (&vertex, att) in &lg.attachments {
        let p = inflow[last].get(vertex as usize).cloned().unwrap_or_else(Q::zero);
        if !p.is_positive() {
            continue;
        }
        match flow.attached.get(&vertex) {
            None => v.push(Violation::MissingSubroutineFlow { vertex: vertex as usize }),
            Some(sub) => {
                let inner = check_flow(&att.graph, sub)?;
                if !inner.violations.is_empty() {
                    v.push(Violation::Subroutine { vertex: vertex as usize, violations: inner.violations });
                }
            }
        }
    }
    report.stage_sums = sums;
    Ok(report)
}

/// `Σ p_e ℓ(e)` over stage `stage` (0-based). The stage's flow must sum to one.
pub fn average_length(lg: &LearningGraph, stage: usize, flow: &FlowAssignment) -> Result<Q> {
    let st = lg
        .stages
        .get(stage)
        .ok_or_else(|| crate::error::invalid(format!("no stage {}", stage + 1)))?;
    let mut total = Q::zero();
    let mut weighted = Q::zero();
    for t in &st.transitions {
        if let Some(p) = flow.flows.get(&t.id) {
            total += p;
            weighted += p * Q::from_integer(lg.length(stage, t).into());
        }
    }
    if !total.is_one() {
        return Err(Error::StageFlowNotUnit(total.to_string()));
    }
    Ok(weighted)
}

#[cfg(test)]
mod tests {
    use super::super::{append_subroutine, Attachment, IndexUniverse, LVertex};
    use super::*;
    use crate::rational::{q, qi};

    fn fan(lengths: &[usize]) -> LearningGraph {
        // ∅ -> {0..len} for each length, over disjoint blocks of positions.
        let n: usize = lengths.iter().sum();
        let mut lg = LearningGraph::new(IndexUniverse::positions(n));
        let mut start = 0u32;
        let mut verts = Vec::new();
        for &len in lengths {
            verts.push(LVertex::new(start..start + len as u32));
            start += len as u32;
        }
        let arcs = (0..lengths.len() as u32).map(|i| (0, i)).collect();
        lg.push_stage("1", verts, arcs);
        lg
    }

    fn flows(values: &[Q]) -> FlowAssignment {
        let mut f = FlowAssignment::new();
        for (i, v) in values.iter().enumerate() {
            f.set(i as u32, v.clone());
        }
        f
    }

    #[test]
    fn weighted_mean_length() {
        let lg = fan(&[1, 2, 4]);
        let f = flows(&[q(1, 2), q(1, 4), q(1, 4)]);
        assert_eq!(average_length(&lg, 0, &f).unwrap(), qi(2));
        let lg = fan(&[2, 2, 2]);
        let f = flows(&[q(1, 3), q(1, 3), q(1, 3)]);
        assert_eq!(average_length(&lg, 0, &f).unwrap(), qi(2));
    }

    #[test]
    fn average_length_rejects_non_unit_stage() {
        let lg = fan(&[1, 1]);
        let f = flows(&[q(1, 4), q(1, 4)]);
        assert_eq!(average_length(&lg, 0, &f), Err(Error::StageFlowNotUnit("1/2".into())));
    }

    #[test]
    fn half_source_flow_is_reported() {
        let lg = fan(&[1, 1]);
        let f = flows(&[q(1, 4), q(1, 4)]);
        let r = check_flow(&lg, &f).unwrap();
        assert_eq!(r.violations, vec![Violation::SourceFlow { total: "1/2".into() }]);
        assert!(r.violations[0].to_string().starts_with("source flow ≠ 1"));
    }

    #[test]
    fn unknown_transition_is_rejected() {
        let lg = fan(&[1]);
        let f = flows(&[qi(1), qi(0), qi(1)]);
        assert_eq!(check_flow(&lg, &f), Err(Error::UnknownTransition(2)));
    }

    #[test]
    fn conservation_and_negative() {
        let mut lg = fan(&[1, 1]);
        lg.push_stage("2", vec![LVertex::new([0, 1])], vec![(0, 0), (1, 0)]);
        let f = flows(&[q(3, 2), q(-1, 2), qi(1), qi(0)]);
        let r = check_flow(&lg, &f).unwrap();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NegativeFlow { transition: 1, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::Conservation { layer: 1, vertex: 0, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::Conservation { layer: 1, vertex: 1, .. })));
    }

    fn unit_sub(len: usize) -> (LearningGraph, FlowAssignment) {
        let mut g = LearningGraph::new(IndexUniverse::positions(len));
        let verts = (0..len as u32).map(|i| LVertex::new([i])).collect();
        g.push_stage("1", verts, (0..len as u32).map(|i| (0, i)).collect());
        let mut f = FlowAssignment::new();
        for i in 0..len as u32 {
            f.set(i, q(1, len as i64));
        }
        (g, f)
    }

    #[test]
    fn unit_inflow_attachment_keeps_flows() {
        let lg = fan(&[1]);
        let (sub, sub_flow) = unit_sub(1);
        let att = Attachment { anchor: vec![], indices: vec![], graph: sub };
        // Universe of size 1 is fully queried, so extend the parent universe.
        let mut lg = lg;
        lg.universe = IndexUniverse::positions(2);
        let att = Attachment { indices: vec![1], ..att };
        let lg = append_subroutine(lg, BTreeMap::from([(0, att)])).unwrap();
        let mut f = flows(&[qi(1)]);
        f.attached.insert(0, sub_flow.clone());
        assert!(check_flow(&lg, &f).unwrap().is_valid());
        assert_eq!(composite_flows(&lg, &f)[&0], sub_flow);
    }

    #[test]
    fn half_inflows_scale_appended_flows() {
        let mut lg = fan(&[1, 1]);
        lg.universe = IndexUniverse::positions(6);
        let (sub, sub_flow) = unit_sub(2);
        let subs = BTreeMap::from([
            (0, Attachment { anchor: vec![], indices: vec![2, 3], graph: sub.clone() }),
            (1, Attachment { anchor: vec![], indices: vec![4, 5], graph: sub }),
        ]);
        let lg = append_subroutine(lg, subs).unwrap();
        let mut f = flows(&[q(1, 2), q(1, 2)]);
        f.attached.insert(0, sub_flow.clone());
        f.attached.insert(1, sub_flow.clone());
        assert!(check_flow(&lg, &f).unwrap().is_valid());
        for (_, scaled) in composite_flows(&lg, &f) {
            for (id, v) in &scaled.flows {
                assert_eq!(*v, sub_flow.value(*id) * q(1, 2));
            }
            let total: Q = scaled.flows.values().sum();
            assert_eq!(total, q(1, 2));
        }
    }

    #[test]
    fn missing_subroutine_flow() {
        let mut lg = fan(&[1]);
        lg.universe = IndexUniverse::positions(2);
        let (sub, _) = unit_sub(1);
        let lg = append_subroutine(lg, BTreeMap::from([(0, Attachment { anchor: vec![], indices: vec![1], graph: sub })])).unwrap();
        let r = check_flow(&lg, &flows(&[qi(1)])).unwrap();
        assert_eq!(r.violations, vec![Violation::MissingSubroutineFlow { vertex: 0 }]);
    }
}
