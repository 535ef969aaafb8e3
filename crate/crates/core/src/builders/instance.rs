//! Concrete inputs, their truth values and lexicographically first
//! 1-certificates.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pattern::SubgraphPattern;
use crate::error::{Error, Result};
use crate::graph::{edge_slot, slot_endpoints, Index};
use crate::rational::Q;

/// Adjacency bits of a simple undirected graph, indexed by edge slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphInput {
    pub n: usize,
    bits: Vec<bool>,
}

impl GraphInput {
    pub fn empty(n: usize) -> Self {
        GraphInput { n, bits: vec![false; n * n.saturating_sub(1) / 2] }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            if u == v || u as usize >= n || v as usize >= n {
                return Err(Error::Parse(format!("edge {u} {v} is not a pair of distinct vertices below {n}")));
            }
            g.bits[edge_slot(u, v) as usize] = true;
        }
        Ok(g)
    }

    /// Graph whose edge set is the bit pattern of `mask` over slots `0..`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut g = Self::empty(n);
        for (i, b) in g.bits.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        g
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        u != v && self.bits[edge_slot(u, v) as usize]
    }

    pub fn slot(&self, id: Index) -> bool {
        self.bits[id as usize]
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| slot_endpoints(i as Index)).collect()
    }

    pub fn degree(&self, u: u32) -> usize {
        (0..self.n as u32).filter(|&v| self.has_edge(u, v)).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Values(Vec<u32>),
    Graph(GraphInput),
}

impl Input {
    pub fn len(&self) -> usize {
        match self {
            Input::Values(v) => v.len(),
            Input::Graph(g) => g.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The decision problem an input is evaluated against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Problem {
    Distinctness { k: usize },
    Containment(SubgraphPattern),
}

/// Marked elements witnessing a positive input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// Positions, or edge slots of the embedded pattern; sorted.
    pub marked: Vec<Index>,
    /// For graphs: image of each pattern vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    pub input: Input,
    pub truth: bool,
    pub certificate: Option<Certificate>,
}

impl ProblemInstance {
    pub fn new(input: Input, problem: &Problem) -> Result<Self> {
        let certificate = find_certificate(&input, problem)?;
        Ok(ProblemInstance { truth: certificate.is_some(), input, certificate })
    }

    pub fn distinctness(values: Vec<u32>, k: usize) -> Self {
        let certificate = distinct_certificate(&values, k);
        ProblemInstance { truth: certificate.is_some(), input: Input::Values(values), certificate }
    }

    pub fn graph(g: GraphInput, pattern: &SubgraphPattern) -> Self {
        let certificate = embedding_certificate(&g, pattern);
        ProblemInstance { truth: certificate.is_some(), input: Input::Graph(g), certificate }
    }

    /// The certificate of a positive instance.
    pub fn require_certificate(&self) -> Result<&Certificate> {
        self.certificate.as_ref().ok_or_else(|| Error::NegativeInstance("no certificate exists".into()))
    }
}

/// Lexicographically first certificate, or `None` iff `f(x) = 0`.
pub fn find_certificate(input: &Input, problem: &Problem) -> Result<Option<Certificate>> {
    match (input, problem) {
        (Input::Values(v), Problem::Distinctness { k }) => Ok(distinct_certificate(v, *k)),
        (Input::Graph(g), Problem::Containment(p)) => Ok(embedding_certificate(g, p)),
        _ => Err(crate::error::invalid("input kind does not match the problem")),
    }
}

fn distinct_certificate(values: &[u32], k: usize) -> Option<Certificate> {
    if k == 0 {
        return Some(Certificate { marked: vec![], embedding: None });
    }
    // The lexicographically first k-set starts at the first position whose
    // value recurs k times from there on, and continues greedily.
    (0..values.len()).find_map(|i| {
        let marked: Vec<Index> =
            (i..values.len()).filter(|&j| values[j] == values[i]).take(k).map(|j| j as Index).collect();
        (marked.len() == k).then_some(Certificate { marked, embedding: None })
    })
}

fn embedding_certificate(g: &GraphInput, pattern: &SubgraphPattern) -> Option<Certificate> {
    let k = pattern.k();
    if k > g.n {
        return None;
    }
    let adj = pattern.adjacency();
    let hdeg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let gdeg: Vec<usize> = (0..g.n as u32).map(|u| g.degree(u)).collect();
    let mut phi = Vec::with_capacity(k);
    let mut used = vec![false; g.n];
    if !extend(g, &adj, &hdeg, &gdeg, &mut phi, &mut used) {
        return None;
    }
    let mut marked: Vec<Index> = pattern.edges().iter().map(|&(a, b)| edge_slot(phi[a as usize], phi[b as usize])).collect();
    marked.sort_unstable();
    Some(Certificate { marked, embedding: Some(phi) })
}

fn extend(g: &GraphInput, adj: &[Vec<u32>], hdeg: &[usize], gdeg: &[usize], phi: &mut Vec<u32>, used: &mut [bool]) -> bool {
    let h = phi.len();
    if h == adj.len() {
        return true;
    }
    for v in 0..g.n as u32 {
        if used[v as usize] || gdeg[v as usize] < hdeg[h] {
            continue;
        }
        if adj[h].iter().filter(|&&w| (w as usize) < h).all(|&w| g.has_edge(phi[w as usize], v)) {
            used[v as usize] = true;
            phi.push(v);
            if extend(g, adj, hdeg, gdeg, phi, used) {
                return true;
            }
            phi.pop();
            used[v as usize] = false;
        }
    }
    false
}

/// Brute-force truth value, independent of the certificate search.
pub fn evaluate(input: &Input, problem: &Problem) -> Result<bool> {
    match (input, problem) {
        (Input::Values(v), Problem::Distinctness { k }) => {
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for &x in v {
                *counts.entry(x).or_default() += 1;
            }
            Ok(*k == 0 || counts.values().any(|&c| c >= *k))
        }
        (Input::Graph(g), Problem::Containment(p)) => Ok(crate::builders::pattern::injections(g.n, p.k())
            .any(|phi| p.edges().iter().all(|&(a, b)| g.has_edge(phi[a as usize], phi[b as usize])))),
        _ => Err(crate::error::invalid("input kind does not match the problem")),
    }
}

/// Parses an edge list: one `u v` pair per line, 0-indexed. Blank lines and
/// `#` comments are skipped; a line holding a single integer declares the
/// vertex count. Returns the vertex count and the normalized edges.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(u32, u32)>)> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| Error::Parse(format!("line {}: `{t}` is not a vertex", no + 1))))
            .collect::<Result<_>>()?;
        match nums[..] {
            [n] => declared = Some(n as usize),
            [u, v] if u != v => edges.push((u.min(v), u.max(v))),
            [_, _] => return Err(Error::Parse(format!("line {}: self-loop", no + 1))),
            _ => return Err(Error::Parse(format!("line {}: expected `u v`", no + 1))),
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let implied = edges.iter().map(|&(_, v)| v as usize + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < implied => return Err(Error::Parse(format!("vertex count {n} but edge endpoint {}", implied - 1))),
        Some(n) => n,
        None => implied,
    };
    Ok((n, edges))
}

/// Parses comma-separated integer values.
pub fn parse_values(text: &str) -> Result<Vec<u32>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| Error::Parse(format!("`{t}` is not a value"))))
        .collect()
}

/// Seeded input generators.
///
/// * `gnp:P` random graph with edge probability `P`
/// * `planted:P` random graph with a copy of the pattern (or clique) on random vertices
/// * `values:M` uniform values over `0..M`
/// * `planted-values:M` uniform values with `k` equal values at random positions
#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    Gnp(Q),
    Planted(Q),
    Values(u32),
    PlantedValues(u32),
}

impl std::str::FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| Error::Parse(format!("generator `{s}` needs KIND:ARG")))?;
        let prob = |a: &str| -> Result<Q> {
            let p = crate::rational::parse_q(a)?;
            if p < Q::from_integer(0.into()) || p > Q::from_integer(1.into()) {
                return Err(Error::Parse(format!("probability {a} outside [0,1]")));
            }
            Ok(p)
        };
        let alphabet = |a: &str| a.parse::<u32>().ok().filter(|&m| m > 0).ok_or_else(|| Error::Parse(format!("bad alphabet size `{a}`")));
        match kind {
            "gnp" => Ok(GenSpec::Gnp(prob(arg)?)),
            "planted" => Ok(GenSpec::Planted(prob(arg)?)),
            "values" => Ok(GenSpec::Values(alphabet(arg)?)),
            "planted-values" => Ok(GenSpec::PlantedValues(alphabet(arg)?)),
            _ => Err(Error::Parse(format!("unknown generator `{kind}`"))),
        }
    }
}

/// `true` with probability `p`, decided exactly on the rational.
pub fn bernoulli(rng: &mut impl Rng, p: &Q) -> bool {
    use num_traits::ToPrimitive;
    match (p.numer().to_u64(), p.denom().to_u64()) {
        (Some(a), Some(b)) => rng.gen_range(0..b) < a,
        _ => rng.gen_bool(crate::rational::to_f64(p).clamp(0.0, 1.0)),
    }
}

pub fn generate(spec: &GenSpec, n: usize, problem: &Problem, seed: u64) -> Result<Input> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match (spec, problem) {
        (GenSpec::Gnp(p) | GenSpec::Planted(p), Problem::Containment(h)) => {
            let mut g = GraphInput::empty(n);
            for b in g.bits.iter_mut() {
                *b = bernoulli(&mut rng, p);
            }
            if matches!(spec, GenSpec::Planted(_)) {
                if h.k() > n {
                    return Err(crate::error::invalid(format!("cannot plant a {}-vertex pattern in {n} vertices", h.k())));
                }
                let mut verts: Vec<u32> = (0..n as u32).collect();
                rand::seq::SliceRandom::shuffle(&mut verts[..], &mut rng);
                for &(a, b) in h.edges() {
                    g.bits[edge_slot(verts[a as usize], verts[b as usize]) as usize] = true;
                }
            }
            Ok(Input::Graph(g))
        }
        (GenSpec::Values(m) | GenSpec::PlantedValues(m), Problem::Distinctness { k }) => {
            let mut v: Vec<u32> = (0..n).map(|_| rng.gen_range(0..*m)).collect();
            if matches!(spec, GenSpec::PlantedValues(_)) {
                if *k > n {
                    return Err(crate::error::invalid(format!("cannot plant {k} equal values in {n} positions")));
                }
                let x = rng.gen_range(0..*m);
                for i in rand::seq::index::sample(&mut rng, n, *k) {
                    v[i] = x;
                }
            }
            Ok(Input::Values(v))
        }
        _ => Err(crate::error::invalid("generator does not match the problem family")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_equal_pair() {
        let inst = ProblemInstance::distinctness(vec![3, 1, 3, 2, 1], 2);
        assert_eq!(inst.certificate.unwrap().marked, vec![0, 2]);
        let inst = ProblemInstance::distinctness(vec![0, 1, 2], 2);
        assert!(!inst.truth);
    }

    #[test]
    fn single_triangle() {
        let g = GraphInput::from_edges(5, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let c = ProblemInstance::graph(g, &SubgraphPattern::clique(3).unwrap()).certificate.unwrap();
        assert_eq!(c.marked, vec![edge_slot(0, 1), edge_slot(0, 2), edge_slot(1, 2)]);
        assert_eq!(c.embedding, Some(vec![0, 1, 2]));
    }

    #[test]
    fn empty_graph_has_no_triangle() {
        let inst = ProblemInstance::graph(GraphInput::empty(5), &SubgraphPattern::clique(3).unwrap());
        assert!(!inst.truth && inst.certificate.is_none());
    }

    #[test]
    fn edge_list_parsing() {
        let (n, e) = parse_edge_list("# triangle\n0 1\n1 2\n2 0\n").unwrap();
        assert_eq!((n, e), (3, vec![(0, 1), (0, 2), (1, 2)]));
        assert_eq!(parse_edge_list("5\n0 1\n").unwrap().0, 5);
        assert!(parse_edge_list("0 0\n").is_err());
        assert!(parse_edge_list("0 1 2\n").is_err());
        assert!(parse_edge_list("1\n0 3\n").is_err());
    }

    #[test]
    fn values_parsing() {
        assert_eq!(parse_values("3,1, 3,2,1\n").unwrap(), vec![3, 1, 3, 2, 1]);
        assert!(parse_values("1,x").is_err());
    }

    #[test]
    fn generators_are_seeded() {
        let p = Problem::Containment(SubgraphPattern::clique(3).unwrap());
        let spec: GenSpec = "planted:1/4".parse().unwrap();
        let a = generate(&spec, 7, &p, 9).unwrap();
        assert_eq!(a, generate(&spec, 7, &p, 9).unwrap());
        assert!(find_certificate(&a, &p).unwrap().is_some());
        let spec: GenSpec = "planted-values:5".parse().unwrap();
        let d = Problem::Distinctness { k: 3 };
        let v = generate(&spec, 6, &d, 1).unwrap();
        assert!(evaluate(&v, &d).unwrap());
        assert!("gnp:3/2".parse::<GenSpec>().is_err());
    }
}
