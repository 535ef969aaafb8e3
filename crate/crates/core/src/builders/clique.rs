use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;

use super::kdist::KDistinctness;
use super::{binom_u128, check_cap, combinations, default_r_sub, ordered_embedding, Build, BuildOptions, Family, GraphIndex, ProblemInstance, SubgraphPattern};
use crate::error::{invalid, Error, Result};
use crate::graph::{append_subroutine, clique_slots, edge_slot, Attachment, FlowAssignment, Index, IndexUniverse, LVertex, LearningGraph};
use crate::rational::{binomial, Q};

/// Skeleton of the `k`-clique graph over edge slots: stage 1 queries a
/// complete graph on `r-k+1` vertices, stages `2..=k` each add a vertex with
/// all its edges to the current set. A `(k-1)`-distinctness subroutine over
/// the `r` edges from `a_k` into the final vertex set finishes the search.
#[derive(Clone, Debug)]
pub struct KClique {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    graph: LearningGraph,
    index: GraphIndex,
    sub: KDistinctness,
}

pub(crate) fn complete(w: Vec<u32>) -> LVertex {
    LVertex::annotated(clique_slots(&w), w)
}

impl KClique {
    pub fn new(n: usize, k: usize, r: usize, options: &BuildOptions) -> Result<Self> {
        if k < 3 {
            return Err(invalid(format!("clique size k = {k} must be at least 3")));
        }
        if r < k || r >= n {
            return Err(invalid(format!("need k <= r < n, got k = {k}, r = {r}, n = {n}")));
        }
        let r_sub = options.r_sub.unwrap_or_else(|| default_r_sub(r, k - 1));
        check_cap("k-clique build (L-vertices)", Self::node_estimate(n, k, r), options.node_cap)?;
        let all: Vec<u32> = (0..n as u32).collect();
        let mut lg = LearningGraph::new(IndexUniverse::edge_slots(n));
        let first: Vec<LVertex> = combinations(&all, r - k + 1).into_iter().map(complete).collect();
        let arcs = (0..first.len() as u32).map(|i| (0, i)).collect();
        lg.push_stage("1", first, arcs);
        for j in 2..=k {
            let next: Vec<LVertex> = combinations(&all, r - k + j).into_iter().map(complete).collect();
            let pos: HashMap<&LVertex, u32> = next.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
            let mut arcs = Vec::new();
            for (a, s) in lg.layers[j - 1].iter().enumerate() {
                let w = s.annotation().unwrap_or_default();
                for x in all.iter().filter(|x| !w.contains(x)) {
                    let t = complete(w.iter().copied().chain([*x]).collect());
                    arcs.push((a as u32, pos[&t]));
                }
            }
            lg.push_stage(j.to_string(), next, arcs);
        }
        let index = GraphIndex::new(&lg);
        let sub = KDistinctness::new(r, k - 1, r_sub)?;
        Ok(KClique { n, k, r, graph: lg, index, sub })
    }

    pub fn node_estimate(n: usize, k: usize, r: usize) -> u128 {
        1 + (1..=k).map(|j| binom_u128(n, r - k + j)).sum::<u128>()
    }

    /// The skeleton without attachments.
    pub fn graph(&self) -> &LearningGraph {
        &self.graph
    }

    pub fn subroutine(&self) -> &KDistinctness {
        &self.sub
    }

    /// Composite graph and uniform flow for clique vertices `a_1..a_k`
    /// (in build order).
    pub fn build(&self, a: &[u32]) -> Result<(LearningGraph, FlowAssignment)> {
        if a.len() != self.k || a.iter().any(|&x| x as usize >= self.n) {
            return Err(invalid(format!("expected {} clique vertices below {}", self.k, self.n)));
        }
        let a_k = a[self.k - 1];
        let free: Vec<u32> = (0..self.n as u32).filter(|x| !a.contains(x)).collect();
        let w = Q::new(BigInt::from(1), binomial((self.n - self.k) as u64, (self.r - self.k + 1) as u64));
        let mut flow = FlowAssignment::new();
        let mut subs = BTreeMap::new();
        for base in combinations(&free, self.r - self.k + 1) {
            let mut verts = base;
            let mut at = self.index.vertex(1, &complete(verts.clone()))?;
            flow.set(self.index.arc(0, 0, at)?, w.clone());
            for (j, &x) in a[..self.k - 1].iter().enumerate() {
                verts.push(x);
                verts.sort_unstable();
                let to = self.index.vertex(j + 2, &complete(verts.clone()))?;
                flow.set(self.index.arc(j + 1, at, to)?, w.clone());
                at = to;
            }
            let indices: Vec<Index> = verts.iter().map(|&v| edge_slot(a_k, v)).collect();
            let marked: Vec<u32> = a[..self.k - 1].iter().map(|x| verts.binary_search(x).unwrap() as u32).collect();
            flow.attached.insert(at, self.sub.flow(&marked)?);
            subs.insert(at, Attachment { anchor: vec![a_k], indices, graph: self.sub.graph().clone() });
        }
        let lg = append_subroutine(self.graph.clone(), subs)?;
        Ok((lg, flow))
    }
}

pub fn build_kclique(n: usize, k: usize, r: usize, instance: &ProblemInstance, options: &BuildOptions) -> Result<Build> {
    build_with(&KClique::new(n, k, r, options)?, instance)
}

pub(crate) fn build_with(b: &KClique, instance: &ProblemInstance) -> Result<Build> {
    if instance.input.len() != b.n {
        return Err(invalid(format!("instance has {} vertices, build expects n = {}", instance.input.len(), b.n)));
    }
    let cert = instance.require_certificate()?;
    let pattern = SubgraphPattern::clique(b.k)?;
    if cert.marked.len() != pattern.edges().len() {
        return Err(Error::NegativeInstance(format!("certificate is not a {}-clique", b.k)));
    }
    let order = ordered_embedding(cert, &pattern)?;
    let (graph, flow) = b.build(&order)?;
    Ok(Build { family: Family::Clique, graph, flow, certificate: cert.clone(), raw_flow: None, conditioning: None, sampled: false })
}
