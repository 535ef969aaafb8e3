use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kdist::KDistinctness;
use super::{
    bernoulli, binom_u128, combinations, default_r_sub, ordered_embedding, Build, BuildOptions, Family, GraphIndex,
    ProblemInstance, SubgraphPattern,
};
use crate::analysis::{condition_flow, Conditioning};
use crate::error::{invalid, Error, Result};
use crate::graph::{append_subroutine, clique_slots, edge_slot, Attachment, FlowAssignment, Index, IndexUniverse, LVertex, LearningGraph};
use crate::rational::{binomial, qi, qpow, Q};

/// The random-subgraph construction for containment of a pattern `H`.
///
/// Stage 1 picks `r-k+1` vertices and each of their edge slots with
/// probability `s`; stages `2..=k` add `a_1..a_{k-1}` with each new slot
/// queried with probability `s`. The random choices are explicit branches
/// whose flows are the branch probabilities. A selection step then
/// conditions on avoiding `M` and holding at least `s r^2 / 4` edges,
/// `m` single-edge substages query `M`, and an `l`-distinctness subroutine
/// over the edges from `a_k` finds the rest.
#[derive(Clone, Debug)]
pub struct SubgraphBuilder {
    pub n: usize,
    pub r: usize,
    pub s: Q,
    pattern: SubgraphPattern,
    k_bound: Q,
    explicit: Option<Explicit>,
    sampling: Option<(u64, u64)>,
    sub: Option<KDistinctness>,
}

#[derive(Clone, Debug)]
struct Explicit {
    /// Stages `1..=k`.
    head: LearningGraph,
    /// Head plus the `m` substages.
    full: LearningGraph,
    index: GraphIndex,
}

fn subgraph_vertex(edges: Vec<Index>, w: Vec<u32>) -> LVertex {
    LVertex::annotated(edges, w)
}

fn masked(slots: &[Index], mask: u64) -> impl Iterator<Item = Index> + '_ {
    slots.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x)
}

fn pow2(e: usize) -> u128 {
    if e >= 127 {
        u128::MAX
    } else {
        1u128 << e
    }
}

impl SubgraphBuilder {
    pub fn new(n: usize, pattern: SubgraphPattern, r: usize, s: Q, options: &BuildOptions) -> Result<Self> {
        let k = pattern.k();
        if !(s > Q::zero() && s < Q::one()) {
            return Err(invalid(format!("s = {s} must lie strictly between 0 and 1")));
        }
        if r < k || r >= n {
            return Err(invalid(format!("need k <= r < n, got k = {k}, r = {r}, n = {n}")));
        }
        let sub = match pattern.l() {
            0 => None,
            l => Some(KDistinctness::new(r, l, options.r_sub.unwrap_or_else(|| default_r_sub(r, l)))?),
        };
        let needed = Self::node_estimate(n, &pattern, r);
        let explicit = if needed <= options.node_cap {
            Some(Self::skeleton(n, &pattern, r))
        } else if options.sampling.is_some() {
            None
        } else {
            return Err(Error::CapExceeded {
                what: "explicit subgraph build (L-vertices)",
                needed: needed.to_string(),
                cap: options.node_cap.to_string(),
            });
        };
        Ok(SubgraphBuilder { n, r, s, pattern, k_bound: options.k_bound.clone(), explicit, sampling: options.sampling, sub })
    }

    /// Upper bound on the L-vertices of the explicit skeleton.
    pub fn node_estimate(n: usize, pattern: &SubgraphPattern, r: usize) -> u128 {
        let k = pattern.k();
        let layer = |w: usize| binom_u128(n, w).saturating_mul(pow2(w * w.saturating_sub(1) / 2));
        (1..=k)
            .map(|j| layer(r - k + j))
            .fold(1u128, u128::saturating_add)
            .saturating_add(layer(r).saturating_mul(pattern.m() as u128))
    }

    fn skeleton(n: usize, pattern: &SubgraphPattern, r: usize) -> Explicit {
        let k = pattern.k();
        let all: Vec<u32> = (0..n as u32).collect();
        let layer = |size: usize| -> Vec<LVertex> {
            let mut out = Vec::new();
            for w in combinations(&all, size) {
                let slots = clique_slots(&w);
                for mask in 0..1u64 << slots.len() {
                    out.push(subgraph_vertex(masked(&slots, mask).collect(), w.clone()));
                }
            }
            out
        };
        let mut lg = LearningGraph::new(IndexUniverse::edge_slots(n));
        let first = layer(r - k + 1);
        let arcs = (0..first.len() as u32).map(|i| (0, i)).collect();
        lg.push_stage("1", first, arcs);
        for j in 2..=k {
            let next = layer(r - k + j);
            let pos: HashMap<&LVertex, u32> = next.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
            let mut arcs = Vec::new();
            for (a, v) in lg.layers[j - 1].iter().enumerate() {
                let w = v.annotation().unwrap_or_default();
                for &x in all.iter().filter(|x| !w.contains(x)) {
                    let new: Vec<Index> = w.iter().map(|&y| edge_slot(x, y)).collect();
                    let w2: Vec<u32> = w.iter().copied().chain([x]).collect();
                    for mask in 0..1u64 << new.len() {
                        let t = subgraph_vertex(v.queried().iter().copied().chain(masked(&new, mask)).collect(), w2.clone());
                        arcs.push((a as u32, pos[&t]));
                    }
                }
            }
            lg.push_stage(j.to_string(), next, arcs);
        }
        let head = lg.clone();
        for i in 1..=pattern.m() {
            let next: Vec<LVertex> = lg.layers[k].iter().filter(|v| v.len() >= i).cloned().collect();
            let pos: HashMap<&LVertex, u32> = next.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
            let mut arcs = Vec::new();
            for (a, v) in lg.layers[k + i - 1].iter().enumerate() {
                let w = v.annotation().unwrap_or_default();
                for e in clique_slots(w).into_iter().filter(|&e| !v.contains(e)) {
                    let t = subgraph_vertex(v.queried().iter().copied().chain([e]).collect(), w.to_vec());
                    arcs.push((a as u32, pos[&t]));
                }
            }
            lg.push_stage(format!("{}.{i}", k + 2), next, arcs);
        }
        let index = GraphIndex::new(&lg);
        Explicit { head, full: lg, index }
    }

    pub fn pattern(&self) -> &SubgraphPattern {
        &self.pattern
    }

    pub fn is_sampled(&self) -> bool {
        self.explicit.is_none()
    }

    /// Stages `1..=k` of the explicit skeleton.
    pub fn head(&self) -> Option<&LearningGraph> {
        self.explicit.as_ref().map(|e| &e.head)
    }

    /// The explicit skeleton without attachments.
    pub fn skeleton_graph(&self) -> Option<&LearningGraph> {
        self.explicit.as_ref().map(|e| &e.full)
    }

    pub fn subroutine(&self) -> Option<&KDistinctness> {
        self.sub.as_ref()
    }

    /// Selection rule: no edge of `M` queried and `4|E| >= s r^2`.
    fn selector<'a>(&'a self, m_slots: &'a [Index]) -> impl Fn(&LVertex) -> bool + 'a {
        let need = &self.s * qi((self.r * self.r) as i64);
        move |v: &LVertex| m_slots.iter().all(|&e| !v.contains(e)) && qi(4 * v.len() as i64) >= need
    }

    /// Composite graph, conditioned flow, raw flow and conditioning report
    /// for pattern vertices embedded at `a_1..a_k` (build order).
    pub fn build(&self, a: &[u32]) -> Result<(LearningGraph, FlowAssignment, FlowAssignment, Conditioning)> {
        let k = self.pattern.k();
        if a.len() != k || a.iter().any(|&x| x as usize >= self.n) {
            return Err(invalid(format!("expected {k} embedded vertices below {}", self.n)));
        }
        let order = self.pattern.order();
        let at_graph = |h: u32| a[order.iter().position(|&o| o == h).unwrap()];
        let m_slots: Vec<Index> = self.pattern.residual_edges().iter().map(|&(u, v)| edge_slot(at_graph(u), at_graph(v))).collect();
        let neighbors: Vec<u32> = self.pattern.anchor_neighbors().into_iter().map(at_graph).collect();
        match &self.explicit {
            Some(e) => self.build_explicit(e, a, &m_slots, &neighbors),
            None => {
                let (samples, seed) = self.sampling.ok_or_else(|| invalid("sampled build needs samples and a seed"))?;
                self.build_sampled(a, &m_slots, &neighbors, samples, seed)
            }
        }
    }

    fn attachment(&self, a_k: u32, w: &[u32], neighbors: &[u32]) -> Result<Option<(Attachment, FlowAssignment)>> {
        let Some(sub) = &self.sub else { return Ok(None) };
        let indices: Vec<Index> = w.iter().map(|&v| edge_slot(a_k, v)).collect();
        let marked = neighbors
            .iter()
            .map(|x| w.binary_search(x).map(|p| p as u32).map_err(|_| invalid("neighbour of a_k missing from the vertex set")))
            .collect::<Result<Vec<u32>>>()?;
        Ok(Some((Attachment { anchor: vec![a_k], indices, graph: sub.graph().clone() }, sub.flow(&marked)?)))
    }

    fn build_explicit(
        &self,
        e: &Explicit,
        a: &[u32],
        m_slots: &[Index],
        neighbors: &[u32],
    ) -> Result<(LearningGraph, FlowAssignment, FlowAssignment, Conditioning)> {
        let k = self.pattern.k();
        let free: Vec<u32> = (0..self.n as u32).filter(|x| !a.contains(x)).collect();
        let base = Q::new(BigInt::from(1), binomial((self.n - k) as u64, (self.r - k + 1) as u64));
        let t = Q::one() - &self.s;
        let top = self.r * (self.r - 1) / 2;
        let ps: Vec<Q> = (0..=top as u64).map(|i| qpow(&self.s, i)).collect();
        let pt: Vec<Q> = (0..=top as u64).map(|i| qpow(&t, i)).collect();
        let weight = |edges: usize, w: usize| &base * &ps[edges] * &pt[w * (w - 1) / 2 - edges];

        let mut raw = FlowAssignment::new();
        let mut frontier: Vec<(u32, Vec<Index>, Vec<u32>)> = Vec::new();
        for w in combinations(&free, self.r - k + 1) {
            let slots = clique_slots(&w);
            for mask in 0..1u64 << slots.len() {
                let edges: Vec<Index> = masked(&slots, mask).collect();
                let pos = e.index.vertex(1, &subgraph_vertex(edges.clone(), w.clone()))?;
                raw.set(e.index.arc(0, 0, pos)?, weight(edges.len(), w.len()));
                frontier.push((pos, edges, w.clone()));
            }
        }
        for j in 2..=k {
            let x = a[j - 2];
            let mut next = Vec::with_capacity(frontier.len() << (self.r - k + j - 1));
            for (pos, edges, w) in &frontier {
                let new: Vec<Index> = w.iter().map(|&y| edge_slot(x, y)).collect();
                let mut w2 = w.clone();
                w2.push(x);
                w2.sort_unstable();
                for mask in 0..1u64 << new.len() {
                    let mut e2: Vec<Index> = edges.iter().copied().chain(masked(&new, mask)).collect();
                    e2.sort_unstable();
                    let to = e.index.vertex(j, &subgraph_vertex(e2.clone(), w2.clone()))?;
                    raw.set(e.index.arc(j - 1, *pos, to)?, weight(e2.len(), w2.len()));
                    next.push((to, e2, w2.clone()));
                }
            }
            frontier = next;
        }

        let (mut flow, report) = condition_flow(&e.head, &raw, self.selector(m_slots), &self.k_bound)?;
        let inflow = flow.inflows(&e.head);
        let a_k = a[k - 1];
        let mut subs = BTreeMap::new();
        for (pos, edges, w) in &frontier {
            let p = &inflow[k][*pos as usize];
            if p.is_zero() {
                continue;
            }
            let mut cur = edges.clone();
            let mut at = *pos;
            for (i, &slot) in m_slots.iter().enumerate() {
                cur.push(slot);
                cur.sort_unstable();
                let to = e.index.vertex(k + i + 1, &subgraph_vertex(cur.clone(), w.clone()))?;
                flow.set(e.index.arc(k + i, at, to)?, p.clone());
                at = to;
            }
            if let Some((att, f)) = self.attachment(a_k, w, neighbors)? {
                flow.attached.insert(at, f);
                subs.insert(at, att);
            }
        }
        let graph = append_subroutine(e.full.clone(), subs)?;
        Ok((graph, flow, raw, report))
    }

    /// Graph holding only `samples` sampled valid paths, with empirical flows.
    fn build_sampled(
        &self,
        a: &[u32],
        m_slots: &[Index],
        neighbors: &[u32],
        samples: u64,
        seed: u64,
    ) -> Result<(LearningGraph, FlowAssignment, FlowAssignment, Conditioning)> {
        if samples == 0 {
            return Err(invalid("sampled build needs at least one sample"));
        }
        let k = self.pattern.k();
        let free: Vec<u32> = (0..self.n as u32).filter(|x| !a.contains(x)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut paths: Vec<Vec<LVertex>> = Vec::with_capacity(samples as usize);
        for _ in 0..samples {
            let mut w: Vec<u32> = rand::seq::index::sample(&mut rng, free.len(), self.r - k + 1).into_iter().map(|i| free[i]).collect();
            w.sort_unstable();
            let mut edges: Vec<Index> = clique_slots(&w).into_iter().filter(|_| bernoulli(&mut rng, &self.s)).collect();
            let mut path = vec![subgraph_vertex(edges.clone(), w.clone())];
            for &x in &a[..k - 1] {
                for &y in &w {
                    if bernoulli(&mut rng, &self.s) {
                        edges.push(edge_slot(x, y));
                    }
                }
                w.push(x);
                w.sort_unstable();
                path.push(subgraph_vertex(edges.clone(), w.clone()));
            }
            paths.push(path);
        }
        let layers: Vec<Vec<LVertex>> =
            (0..k).map(|j| paths.iter().map(|p| p[j].clone()).collect::<BTreeSet<_>>().into_iter().collect()).collect();
        let pos: Vec<HashMap<&LVertex, u32>> =
            layers.iter().map(|l| l.iter().enumerate().map(|(i, v)| (v, i as u32)).collect()).collect();
        let mut head = LearningGraph::new(IndexUniverse::edge_slots(self.n));
        let mut counts: Vec<BTreeMap<(u32, u32), u64>> = vec![BTreeMap::new(); k];
        for p in &paths {
            let mut from = 0u32;
            for j in 0..k {
                let to = pos[j][&p[j]];
                *counts[j].entry((from, to)).or_default() += 1;
                from = to;
            }
        }
        for j in 0..k {
            head.push_stage((j + 1).to_string(), layers[j].clone(), counts[j].keys().copied().collect());
        }
        let mut raw = FlowAssignment::new();
        let total = BigInt::from(samples);
        for (j, stage) in head.stages.iter().enumerate() {
            for (t, c) in stage.transitions.iter().zip(counts[j].values()) {
                raw.set(t.id, Q::new(BigInt::from(*c), total.clone()));
            }
        }
        let (mut flow, report) = condition_flow(&head, &raw, self.selector(m_slots), &self.k_bound)?;
        let inflow = flow.inflows(&head);

        let mut graph = head.clone();
        let mut chains: Vec<(Vec<LVertex>, Q)> = Vec::new();
        for (v, p) in graph.layers[k].iter().zip(&inflow[k]) {
            if p.is_zero() {
                continue;
            }
            let mut cur = v.clone();
            let mut chain = vec![cur.clone()];
            for &slot in m_slots {
                cur = subgraph_vertex(cur.queried().iter().copied().chain([slot]).collect(), cur.annotation().unwrap_or_default().to_vec());
                chain.push(cur.clone());
            }
            chains.push((chain, p.clone()));
        }
        for i in 1..=m_slots.len() {
            let next: Vec<LVertex> = chains.iter().map(|(c, _)| c[i].clone()).collect::<BTreeSet<_>>().into_iter().collect();
            let arcs: Vec<(u32, u32)> = {
                let prev: HashMap<&LVertex, u32> = graph.layers[k + i - 1].iter().enumerate().map(|(j, v)| (v, j as u32)).collect();
                let here: HashMap<&LVertex, u32> = next.iter().enumerate().map(|(j, v)| (v, j as u32)).collect();
                chains.iter().map(|(c, _)| (prev[&c[i - 1]], here[&c[i]])).collect()
            };
            graph.push_stage(format!("{}.{i}", k + 2), next, arcs);
            let first = graph.stages.last().unwrap().transitions[0].id;
            for (n, (_, p)) in chains.iter().enumerate() {
                flow.set(first + n as u32, p.clone());
            }
        }
        let last = graph.final_layer();
        let a_k = a[k - 1];
        let mut subs = BTreeMap::new();
        for (chain, _) in &chains {
            let v = chain.last().unwrap();
            let at = graph.layers[last].iter().position(|x| x == v).unwrap() as u32;
            if let Some((att, f)) = self.attachment(a_k, v.annotation().unwrap_or_default(), neighbors)? {
                flow.attached.insert(at, f);
                subs.insert(at, att);
            }
        }
        let graph = append_subroutine(graph, subs)?;
        Ok((graph, flow, raw, report))
    }
}

pub fn build_subgraph(
    n: usize,
    pattern: &SubgraphPattern,
    r: usize,
    s: &Q,
    instance: &ProblemInstance,
    options: &BuildOptions,
) -> Result<Build> {
    build_with(&SubgraphBuilder::new(n, pattern.clone(), r, s.clone(), options)?, instance)
}

pub(crate) fn build_with(b: &SubgraphBuilder, instance: &ProblemInstance) -> Result<Build> {
    if instance.input.len() != b.n {
        return Err(invalid(format!("instance has {} vertices, build expects n = {}", instance.input.len(), b.n)));
    }
    let cert = instance.require_certificate()?;
    if cert.marked.len() != b.pattern.edges().len() {
        return Err(Error::NegativeInstance("certificate does not embed the pattern".into()));
    }
    let order = ordered_embedding(cert, &b.pattern)?;
    let (graph, flow, raw, report) = b.build(&order)?;
    Ok(Build {
        family: Family::Subgraph,
        graph,
        flow,
        certificate: cert.clone(),
        raw_flow: Some(raw),
        conditioning: Some(report),
        sampled: b.is_sampled(),
    })
}
