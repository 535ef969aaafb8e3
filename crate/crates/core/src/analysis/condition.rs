//! Flow surgery: keep only flow that reaches selected final-layer vertices
//! and rescale it to unit total.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FlowAssignment, LVertex, LearningGraph};
use crate::rational::Q;

/// Outcome of conditioning one or more flows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Conditioning {
    /// Smallest retained flow fraction `p(x)` over the instances.
    #[serde(with = "crate::rational::serde_q")]
    pub p: Q,
    /// Largest `1/p(x)`.
    #[serde(with = "crate::rational::serde_q")]
    pub k_actual: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub bound: Q,
    /// Set when `k_actual >= bound`; flows are still returned.
    pub warning: bool,
    /// Selected final-layer vertices that keep positive flow (summed over instances).
    pub selected: usize,
}

/// Conditions `flow` on reaching a final-layer vertex accepted by `selector`.
///
/// Each transition `e` into `to` gets `p_e * q(to) / p`, where `q(v)` is the
/// fraction of the flow through `v` that ends at a selected vertex and `p`
/// is the fraction of the whole flow that does. In-flow of every selected
/// vertex is multiplied by `1/p`; unselected vertices lose all flow.
pub fn condition_flow(
    lg: &LearningGraph,
    flow: &FlowAssignment,
    selector: impl Fn(&LVertex) -> bool,
    bound: &Q,
) -> Result<(FlowAssignment, Conditioning)> {
    let last = lg.final_layer();
    let mut q: Vec<Vec<Q>> = lg.layers.iter().map(|l| vec![Q::zero(); l.len()]).collect();
    for (v, x) in lg.layers[last].iter().enumerate() {
        if selector(x) {
            q[last][v] = Q::one();
        }
    }
    for s in (0..lg.stages.len()).rev() {
        let width = lg.layers[s].len();
        let mut out = vec![Q::zero(); width];
        let mut kept = vec![Q::zero(); width];
        for t in &lg.stages[s].transitions {
            if let Some(f) = flow.flows.get(&t.id) {
                out[t.from as usize] += f;
                kept[t.from as usize] += f * &q[s + 1][t.to as usize];
            }
        }
        for v in 0..width {
            if !out[v].is_zero() {
                q[s][v] = &kept[v] / &out[v];
            }
        }
    }
    let p: Q = lg.stages.first().map_or_else(Q::one, |st| {
        st.transitions.iter().filter_map(|t| flow.flows.get(&t.id).map(|f| f * &q[1][t.to as usize])).sum()
    });
    if p.is_zero() {
        return Err(Error::SelectorRemovesAllFlow);
    }
    let mut out = FlowAssignment::new();
    for (s, stage) in lg.stages.iter().enumerate() {
        for t in &stage.transitions {
            if let Some(f) = flow.flows.get(&t.id) {
                out.set(t.id, f * &q[s + 1][t.to as usize] / &p);
            }
        }
    }
    out.attached = flow.attached.iter().filter(|(&v, _)| q[last][v as usize].is_one()).map(|(&v, f)| (v, f.clone())).collect();
    let inflow = out.inflows(lg);
    let selected = inflow[last].iter().filter(|x| !x.is_zero()).count();
    let k_actual = p.recip();
    let report = Conditioning { warning: &k_actual >= bound, k_actual, p, bound: bound.clone(), selected };
    Ok((out, report))
}

/// [`condition_flow`] over several instances; the report carries the worst
/// case.
pub fn condition_flows(
    lg: &LearningGraph,
    flows: &[FlowAssignment],
    selector: impl Fn(&LVertex) -> bool,
    bound: &Q,
) -> Result<(Vec<FlowAssignment>, Conditioning)> {
    let mut out = Vec::with_capacity(flows.len());
    let mut worst: Option<Conditioning> = None;
    for f in flows {
        let (g, c) = condition_flow(lg, f, &selector, bound)?;
        out.push(g);
        worst = Some(match worst {
            None => c,
            Some(w) => Conditioning {
                selected: w.selected + c.selected,
                warning: w.warning || c.warning,
                ..if c.k_actual > w.k_actual { c } else { w }
            },
        });
    }
    let report = worst.ok_or_else(|| crate::error::invalid("no flows to condition"))?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_flow, IndexUniverse};
    use crate::rational::{q, qi};

    fn two_sinks() -> (LearningGraph, FlowAssignment) {
        let mut lg = LearningGraph::new(IndexUniverse::positions(2));
        lg.push_stage("1", vec![LVertex::new([0]), LVertex::new([1])], vec![(0, 0), (0, 1)]);
        let mut f = FlowAssignment::new();
        f.set(0, q(1, 2));
        f.set(1, q(1, 2));
        (lg, f)
    }

    #[test]
    fn accept_all() {
        let (lg, f) = two_sinks();
        let (g, c) = condition_flow(&lg, &f, |_| true, &qi(2)).unwrap();
        assert_eq!(g, f);
        assert_eq!(c.k_actual, qi(1));
        assert!(!c.warning);
    }

    #[test]
    fn keep_one() {
        let (lg, f) = two_sinks();
        let (g, c) = condition_flow(&lg, &f, |v| v.contains(0), &qi(2)).unwrap();
        assert_eq!(g.value(0), qi(1));
        assert_eq!(g.value(1), qi(0));
        assert_eq!(c.k_actual, qi(2));
        assert!(c.warning);
        assert!(check_flow(&lg, &g).unwrap().is_valid());
    }

    #[test]
    fn reject_all() {
        let (lg, f) = two_sinks();
        assert_eq!(condition_flow(&lg, &f, |_| false, &qi(2)).unwrap_err(), Error::SelectorRemovesAllFlow);
    }

    #[test]
    fn two_stage_paths() {
        // ∅ -> {0},{1} -> {0,1},{0,2},{1,2}; keep {0,2}.
        let mut lg = LearningGraph::new(IndexUniverse::positions(3));
        lg.push_stage("1", vec![LVertex::new([0]), LVertex::new([1])], vec![(0, 0), (0, 1)]);
        lg.push_stage(
            "2",
            vec![LVertex::new([0, 1]), LVertex::new([0, 2]), LVertex::new([1, 2])],
            vec![(0, 0), (0, 1), (1, 0), (1, 2)],
        );
        let mut f = FlowAssignment::new();
        for (id, v) in [(0, q(1, 2)), (1, q(1, 2)), (2, q(1, 4)), (3, q(1, 4)), (4, q(1, 4)), (5, q(1, 4))] {
            f.set(id, v);
        }
        let (g, c) = condition_flow(&lg, &f, |v| v.queried() == [0, 2], &qi(8)).unwrap();
        assert_eq!(c.p, q(1, 4));
        assert_eq!(g.value(0), qi(1));
        assert_eq!(g.value(3), qi(1));
        assert!(check_flow(&lg, &g).unwrap().is_valid());
    }
}
