//! Subgraph patterns `H` and their decomposition around a minimum-degree
//! vertex `a_k`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A pattern graph on vertices `0..k`, decomposed for the subgraph build.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgraphPattern {
    k: usize,
    edges: Vec<(u32, u32)>,
    a_k: u32,
    l: usize,
    m: usize,
}

impl SubgraphPattern {
    /// Decomposes `H` given by its vertex count and edges. `a_k` is the
    /// smallest-index vertex of minimum degree.
    pub fn new(k: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        if k < 3 {
            return Err(invalid(format!("pattern needs k >= 3 vertices, got {k}")));
        }
        let mut norm = Vec::new();
        for (u, v) in edges {
            if u == v || u as usize >= k || v as usize >= k {
                return Err(invalid(format!("edge {u} {v} is not a pair of distinct vertices below {k}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut deg = vec![0usize; k];
        for &(u, v) in &norm {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let l = *deg.iter().min().unwrap();
        let a_k = deg.iter().position(|&d| d == l).unwrap() as u32;
        let m = norm.len() - l;
        Ok(SubgraphPattern { k, edges: norm, a_k, l, m })
    }

    pub fn clique(k: usize) -> Result<Self> {
        let k32 = k as u32;
        Self::new(k, (0..k32).flat_map(|v| (0..v).map(move |u| (u, v))))
    }

    /// Path on `k` vertices `0-1-...-(k-1)`.
    pub fn path(k: usize) -> Result<Self> {
        Self::new(k, (1..k as u32).map(|v| (v - 1, v)))
    }

    pub fn cycle(k: usize) -> Result<Self> {
        let k32 = k as u32;
        Self::new(k, (0..k32).map(|v| (v, (v + 1) % k32)))
    }

    /// Star with centre `0` and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        Self::new(leaves + 1, (1..=leaves as u32).map(|v| (0, v)))
    }

    /// Named patterns: `triangle`, `K<k>`, `P<k>`, `C<k>`, `S<leaves>`.
    pub fn from_name(name: &str) -> Result<Self> {
        if name.eq_ignore_ascii_case("triangle") {
            return Self::clique(3);
        }
        let (head, tail) = name.split_at(name.chars().next().map_or(0, char::len_utf8));
        let size: usize = tail.parse().map_err(|_| Error::Parse(format!("unknown pattern `{name}`")))?;
        match head {
            "K" | "k" => Self::clique(size),
            "P" | "p" => Self::path(size),
            "C" | "c" => Self::cycle(size),
            "S" | "s" => Self::star(size),
            _ => Err(Error::Parse(format!("unknown pattern `{name}`"))),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Normalized (`u < v`), sorted edges.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// The chosen minimum-degree vertex.
    pub fn a_k(&self) -> u32 {
        self.a_k
    }

    /// Minimum degree.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Edges not incident to `a_k`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `M`: edges of the residual pattern `G = H - a_k`, in lexicographic order.
    pub fn residual_edges(&self) -> Vec<(u32, u32)> {
        self.edges.iter().copied().filter(|&(u, v)| u != self.a_k && v != self.a_k).collect()
    }

    /// The residual pattern `G` on the remaining `k-1` vertices, relabelled in order.
    pub fn residual(&self) -> (usize, Vec<(u32, u32)>) {
        let relabel = |x: u32| if x > self.a_k { x - 1 } else { x };
        (self.k - 1, self.residual_edges().into_iter().map(|(u, v)| (relabel(u), relabel(v))).collect())
    }

    /// Pattern vertices in build order `a_1, ..., a_k`: all but `a_k`
    /// ascending, then `a_k`.
    pub fn order(&self) -> Vec<u32> {
        let mut o: Vec<u32> = (0..self.k as u32).filter(|&v| v != self.a_k).collect();
        o.push(self.a_k);
        o
    }

    /// Neighbours of `a_k`, ascending.
    pub fn anchor_neighbors(&self) -> Vec<u32> {
        self.adjacency()[self.a_k as usize].clone()
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.k];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.k];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    stack.push(y);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Same pattern with vertices renamed by `perm` (`v -> perm[v]`).
    pub fn relabelled(&self, perm: &[u32]) -> Result<Self> {
        Self::new(self.k, self.edges.iter().map(|&(u, v)| (perm[u as usize], perm[v as usize])))
    }
}

/// Every injective map `0..k -> 0..n`, as image vectors in lexicographic order.
pub fn injections(n: usize, k: usize) -> impl Iterator<Item = Vec<u32>> {
    let mut cur: Option<Vec<u32>> = (k <= n).then(|| (0..k as u32).collect());
    std::iter::from_fn(move || {
        let out = cur.take()?;
        cur = next_injection(&out, n);
        Some(out)
    })
}

fn next_injection(cur: &[u32], n: usize) -> Option<Vec<u32>> {
    let k = cur.len();
    for i in (0..k).rev() {
        let prefix = &cur[..i];
        if let Some(v) = (cur[i] + 1..n as u32).find(|v| !prefix.contains(v)) {
            let mut next = prefix.to_vec();
            next.push(v);
            for _ in i + 1..k {
                let w = (0..n as u32).find(|w| !next.contains(w))?;
                next.push(w);
            }
            return Some(next);
        }
    }
    None
}

/// All connected graphs on `k` vertices, one edge set per labelled graph
/// (not up to isomorphism).
pub fn connected_patterns(k: usize) -> impl Iterator<Item = SubgraphPattern> {
    let slots: Vec<(u32, u32)> = (0..k as u32).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
    let total = 1u64 << slots.len();
    (0..total).filter_map(move |mask| {
        let edges = slots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
        SubgraphPattern::new(k, edges).ok().filter(SubgraphPattern::is_connected)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let p = SubgraphPattern::clique(3).unwrap();
        assert_eq!((p.k(), p.l(), p.m()), (3, 2, 1));
        assert_eq!(p.residual_edges().len(), 1);
    }

    #[test]
    fn path3() {
        let p = SubgraphPattern::path(3).unwrap();
        assert_eq!((p.k(), p.l(), p.m(), p.a_k()), (3, 1, 1, 0));
        assert_eq!(p.residual_edges(), vec![(1, 2)]);
        assert_eq!(p.order(), vec![1, 2, 0]);
    }

    #[test]
    fn star3() {
        let p = SubgraphPattern::star(3).unwrap();
        assert_eq!((p.k(), p.l(), p.m(), p.a_k()), (4, 1, 2, 1));
        assert_eq!(p.residual(), (3, vec![(0, 1), (0, 2)]));
    }

    #[test]
    fn too_small() {
        assert!(SubgraphPattern::new(2, [(0, 1)]).is_err());
    }

    #[test]
    fn names() {
        assert_eq!(SubgraphPattern::from_name("triangle").unwrap(), SubgraphPattern::clique(3).unwrap());
        assert_eq!(SubgraphPattern::from_name("C5").unwrap().edges().len(), 5);
        assert!(SubgraphPattern::from_name("Q4").is_err());
    }

    #[test]
    fn injection_count() {
        assert_eq!(injections(5, 3).count(), 60);
        assert_eq!(injections(3, 3).next(), Some(vec![0, 1, 2]));
        assert_eq!(injections(2, 3).count(), 0);
        let all: Vec<_> = injections(3, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 2], vec![2, 0], vec![2, 1]]);
    }

    #[test]
    fn connected_counts() {
        // Labelled connected graphs on 3 and 4 vertices.
        assert_eq!(connected_patterns(3).count(), 4);
        assert_eq!(connected_patterns(4).count(), 38);
    }
}
