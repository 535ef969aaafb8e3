//! The three learning-graph constructions, with canonical flows, plus the
//! certificate machinery they are driven by.
//!
//! Each builder splits into an instance-independent skeleton, built once,
//! and a per-instance flow. Subroutine attachments depend on the instance
//! (they sit where the certificate's flow ends), so a build for one instance
//! is the skeleton plus that instance's attachments.

mod clique;
mod instance;
mod kdist;
pub mod pattern;
mod subgraph;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use clique::{build_kclique, KClique};
pub use instance::{
    bernoulli, evaluate, find_certificate, generate, parse_edge_list, parse_values, Certificate, GenSpec, GraphInput,
    Input, Problem, ProblemInstance,
};
pub use kdist::{build_kdistinctness, KDistinctness};
pub use pattern::SubgraphPattern;
pub use subgraph::{build_subgraph, SubgraphBuilder};

use crate::analysis::Conditioning;
use crate::error::{Error, Result};
use crate::graph::{FlowAssignment, LVertex, LearningGraph, TransitionId};
use crate::rational::{ceil_rational_power, qi, Q};

/// Default cap on explicitly built L-vertices.
pub const DEFAULT_NODE_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Kdist,
    Clique,
    Subgraph,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kdist" => Ok(Family::Kdist),
            "clique" => Ok(Family::Clique),
            "subgraph" => Ok(Family::Subgraph),
            _ => Err(Error::Parse(format!("unknown family `{s}`"))),
        }
    }
}

/// Knobs shared by the builders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub node_cap: u128,
    /// Subroutine size parameter; `None` picks the default for the family.
    pub r_sub: Option<usize>,
    /// Conditioning bound `K` for the selection stage of the subgraph build.
    pub k_bound: Q,
    /// Path samples and seed for the sampled subgraph build, used when the
    /// explicit graph would exceed `node_cap`.
    pub sampling: Option<(u64, u64)>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { node_cap: DEFAULT_NODE_CAP, r_sub: None, k_bound: qi(2), sampling: None }
    }
}

/// A built graph together with the flow of one positive instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Build {
    pub family: Family,
    pub graph: LearningGraph,
    pub flow: FlowAssignment,
    pub certificate: Certificate,
    /// Flow before the selection stage (subgraph build only).
    pub raw_flow: Option<FlowAssignment>,
    pub conditioning: Option<Conditioning>,
    /// `true` if the graph holds only sampled paths.
    pub sampled: bool,
}

/// Default subroutine size: `ceil(r^(k'/(k'+1)))` clamped to `[k', r]`.
pub fn default_r_sub(r: usize, k_sub: usize) -> usize {
    let e = Q::new((k_sub as i64).into(), (k_sub as i64 + 1).into());
    (ceil_rational_power(r as u64, &e) as usize).clamp(k_sub, r.max(k_sub))
}

/// `t`-subsets of sorted `items`, in lexicographic order.
pub(crate) fn combinations(items: &[u32], t: usize) -> Vec<Vec<u32>> {
    let n = items.len();
    if t > n {
        return vec![];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(i) = (0..t).rev().find(|&i| idx[i] != i + n - t) else { break };
        idx[i] += 1;
        for j in i + 1..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

pub(crate) fn binom_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Lookup tables from labels to positions and from arcs to ids.
#[derive(Clone, Debug, Default)]
pub(crate) struct GraphIndex {
    vertices: Vec<HashMap<LVertex, u32>>,
    arcs: Vec<HashMap<(u32, u32), TransitionId>>,
}

impl GraphIndex {
    pub(crate) fn new(lg: &LearningGraph) -> Self {
        GraphIndex {
            vertices: lg.layers.iter().map(|l| l.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect()).collect(),
            arcs: lg.stages.iter().map(|s| s.transitions.iter().map(|t| ((t.from, t.to), t.id)).collect()).collect(),
        }
    }

    pub(crate) fn vertex(&self, layer: usize, v: &LVertex) -> Result<u32> {
        self.vertices[layer].get(v).copied().ok_or_else(|| crate::error::invalid(format!("vertex {v:?} missing from layer {layer}")))
    }

    /// Id of the stage-`stage` (0-based) arc between two positions.
    pub(crate) fn arc(&self, stage: usize, from: u32, to: u32) -> Result<TransitionId> {
        self.arcs[stage].get(&(from, to)).copied().ok_or_else(|| crate::error::invalid(format!("no arc {from}->{to} in stage {}", stage + 1)))
    }
}

pub(crate) fn check_cap(what: &'static str, needed: u128, cap: u128) -> Result<()> {
    if needed > cap {
        return Err(Error::CapExceeded { what, needed: needed.to_string(), cap: cap.to_string() });
    }
    Ok(())
}

/// Graph vertices `a_1..a_k` of a graph certificate, in build order.
pub(crate) fn ordered_embedding(cert: &Certificate, pattern: &SubgraphPattern) -> Result<Vec<u32>> {
    let phi = cert.embedding.as_ref().ok_or_else(|| crate::error::invalid("certificate carries no embedding"))?;
    if phi.len() != pattern.k() {
        return Err(crate::error::invalid("embedding size does not match the pattern"));
    }
    Ok(pattern.order().iter().map(|&h| phi[h as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_combinations() {
        assert_eq!(combinations(&[0, 1, 2, 3], 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[4, 7], 0), vec![Vec::<u32>::new()]);
        assert!(combinations(&[1], 2).is_empty());
    }

    #[test]
    fn binomials() {
        assert_eq!(binom_u128(5, 2), 10);
        assert_eq!(binom_u128(12, 6), 924);
        assert_eq!(binom_u128(3, 4), 0);
    }

    #[test]
    fn subroutine_sizes() {
        assert_eq!(default_r_sub(4, 2), 3);
        assert_eq!(default_r_sub(4, 1), 2);
        assert_eq!(default_r_sub(2, 2), 2);
    }
}
