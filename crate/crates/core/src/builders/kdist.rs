use num_bigint::BigInt;

use super::{binom_u128, check_cap, combinations, Build, Family, GraphIndex, ProblemInstance};
use crate::error::{invalid, Error, Result};
use crate::graph::{FlowAssignment, IndexUniverse, LVertex, LearningGraph};
use crate::rational::{binomial, Q};

/// Skeleton of the `k`-distinctness graph: stage 1 queries `r-k` positions,
/// stages `2..=k+1` each query one more.
#[derive(Clone, Debug)]
pub struct KDistinctness {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    graph: LearningGraph,
    index: GraphIndex,
}

impl KDistinctness {
    pub fn new(n: usize, k: usize, r: usize) -> Result<Self> {
        Self::with_cap(n, k, r, super::DEFAULT_NODE_CAP)
    }

    pub fn with_cap(n: usize, k: usize, r: usize, cap: u128) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if r < k {
            return Err(invalid(format!("r = {r} is smaller than k = {k}")));
        }
        if r > n {
            return Err(invalid(format!("fewer than r-k = {} unmarked positions among n = {n}", r - k)));
        }
        check_cap("k-distinctness build (L-vertices)", Self::node_estimate(n, k, r), cap)?;
        let all: Vec<u32> = (0..n as u32).collect();
        let mut lg = LearningGraph::new(IndexUniverse::positions(n));
        let first: Vec<LVertex> = combinations(&all, r - k).into_iter().map(LVertex::new).collect();
        let arcs = (0..first.len() as u32).map(|i| (0, i)).collect();
        lg.push_stage("1", first, arcs);
        for j in 2..=k + 1 {
            let prev = &lg.layers[j - 1];
            let next: Vec<LVertex> = combinations(&all, r - k + j - 1).into_iter().map(LVertex::new).collect();
            let pos: std::collections::HashMap<&LVertex, u32> = next.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
            let mut arcs = Vec::new();
            for (a, s) in prev.iter().enumerate() {
                for x in all.iter().filter(|&&x| !s.contains(x)) {
                    let t = LVertex::new(s.queried().iter().copied().chain([*x]));
                    arcs.push((a as u32, pos[&t]));
                }
            }
            lg.push_stage(j.to_string(), next, arcs);
        }
        let index = GraphIndex::new(&lg);
        Ok(KDistinctness { n, k, r, graph: lg, index })
    }

    /// Number of L-vertices of the skeleton.
    pub fn node_estimate(n: usize, k: usize, r: usize) -> u128 {
        1 + (1..=k + 1).map(|j| binom_u128(n, r - k + j - 1)).sum::<u128>()
    }

    pub fn graph(&self) -> &LearningGraph {
        &self.graph
    }

    /// Canonical flow for marked positions `a_1..a_k` (queried in that order):
    /// `1/C(n-k, r-k)` on every transition of every valid path.
    pub fn flow(&self, marked: &[u32]) -> Result<FlowAssignment> {
        if marked.len() != self.k {
            return Err(invalid(format!("expected {} marked positions, got {}", self.k, marked.len())));
        }
        let mut seen = vec![false; self.n];
        for &a in marked {
            match seen.get_mut(a as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(invalid(format!("marked position {a} repeated or outside 0..{}", self.n))),
            }
        }
        let free: Vec<u32> = (0..self.n as u32).filter(|&i| !seen[i as usize]).collect();
        let w = Q::new(BigInt::from(1), binomial((self.n - self.k) as u64, (self.r - self.k) as u64));
        let mut flow = FlowAssignment::new();
        for base in combinations(&free, self.r - self.k) {
            let mut cur = LVertex::new(base);
            let mut at = self.index.vertex(1, &cur)?;
            flow.set(self.index.arc(0, 0, at)?, w.clone());
            for (j, &a) in marked.iter().enumerate() {
                cur = LVertex::new(cur.queried().iter().copied().chain([a]));
                let to = self.index.vertex(j + 2, &cur)?;
                flow.set(self.index.arc(j + 1, at, to)?, w.clone());
                at = to;
            }
        }
        Ok(flow)
    }
}

pub fn build_kdistinctness(n: usize, k: usize, r: usize, instance: &ProblemInstance) -> Result<Build> {
    build_with(&KDistinctness::new(n, k, r)?, instance)
}

pub(crate) fn build_with(b: &KDistinctness, instance: &ProblemInstance) -> Result<Build> {
    if instance.input.len() != b.n {
        return Err(invalid(format!("instance has {} values, build expects n = {}", instance.input.len(), b.n)));
    }
    let cert = instance.require_certificate()?;
    if cert.marked.len() != b.k {
        return Err(Error::NegativeInstance(format!("certificate has {} marked positions, k = {}", cert.marked.len(), b.k)));
    }
    Ok(Build {
        family: Family::Kdist,
        graph: b.graph.clone(),
        flow: b.flow(&cert.marked)?,
        certificate: cert.clone(),
        raw_flow: None,
        conditioning: None,
        sampled: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_flow, validate_structure};
    use crate::rational::q;

    #[test]
    fn worked_example_shape() {
        let b = KDistinctness::new(5, 2, 4).unwrap();
        assert_eq!(b.graph().layer_sizes(), vec![1, 10, 10, 5]);
        assert_eq!(b.graph().stage_sizes(), vec![10, 30, 20]);
        assert!(validate_structure(b.graph()).is_valid());
        let f = b.flow(&[0, 2]).unwrap();
        let st1: Vec<_> = b.graph().stages[0].transitions.iter().filter(|t| f.is_positive(t.id)).collect();
        assert_eq!(st1.len(), 3);
        assert!(st1.iter().all(|t| f.value(t.id) == q(1, 3)));
        assert!(check_flow(b.graph(), &f).unwrap().is_valid());
    }

    #[test]
    fn degenerate_first_stage() {
        let b = KDistinctness::new(4, 3, 3).unwrap();
        assert_eq!(b.graph().stage_sizes()[0], 1);
        let rep = validate_structure(b.graph());
        assert!(rep.is_valid());
        assert_eq!(rep.degenerate_stages, vec![1]);
        assert!(check_flow(b.graph(), &b.flow(&[0, 1, 2]).unwrap()).unwrap().is_valid());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(KDistinctness::new(5, 3, 2).is_err());
        assert!(KDistinctness::new(5, 2, 6).is_err());
        assert!(matches!(KDistinctness::with_cap(12, 2, 6, 100), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn negative_instance_rejected() {
        let inst = ProblemInstance::distinctness(vec![0, 1, 2, 3, 4], 2);
        assert!(matches!(build_kdistinctness(5, 2, 4, &inst), Err(Error::NegativeInstance(_))));
    }
}
