//! Closed-form exponents and the exact minimax balancer over `r = n^α`,
//! `s = n^{-β}`.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::builders::{Family, SubgraphPattern};
use crate::error::{invalid, Error, Result};
use crate::rational::{q, qi, Q};

/// `g(H) = (2k - l - 3) / (k (l + 1) (m + 2))`.
pub fn g_of_h(pattern: &SubgraphPattern) -> Q {
    g_formula(pattern.k(), pattern.l(), pattern.m())
}

pub fn g_formula(k: usize, l: usize, m: usize) -> Q {
    let (k, l, m) = (k as i64, l as i64, m as i64);
    q(2 * k - l - 3, k * (l + 1) * (m + 2))
}

/// `2 - 2/k - g(H)`.
pub fn containment_exponent(pattern: &SubgraphPattern) -> Q {
    qi(2) - q(2, pattern.k() as i64) - g_of_h(pattern)
}

/// `2 - min_H (2/k(H) + g(H))`.
pub fn monotone_exponent(patterns: &[SubgraphPattern]) -> Result<Q> {
    patterns
        .iter()
        .map(|h| q(2, h.k() as i64) + g_of_h(h))
        .min()
        .map(|best| qi(2) - best)
        .ok_or_else(|| invalid("monotone property needs at least one certificate pattern"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternFamily {
    Clique,
    Path,
    Cycle,
    Star,
}

impl PatternFamily {
    pub const ALL: [PatternFamily; 4] = [PatternFamily::Clique, PatternFamily::Path, PatternFamily::Cycle, PatternFamily::Star];

    pub fn name(self) -> &'static str {
        match self {
            PatternFamily::Clique => "clique",
            PatternFamily::Path => "path",
            PatternFamily::Cycle => "cycle",
            PatternFamily::Star => "star",
        }
    }

    /// The family member with parameter `p` (vertices, or leaves for stars).
    pub fn pattern(self, p: usize) -> Result<SubgraphPattern> {
        match self {
            PatternFamily::Clique => SubgraphPattern::clique(p),
            PatternFamily::Path => SubgraphPattern::path(p),
            PatternFamily::Cycle => SubgraphPattern::cycle(p),
            PatternFamily::Star => SubgraphPattern::star(p),
        }
    }

    /// Closed-form `g` from the summary table.
    pub fn closed_form(self, p: usize) -> Q {
        let k = p as i64;
        match self {
            PatternFamily::Clique => q(2 * (k - 2), k * k * (k * k - 3 * k + 6)),
            PatternFamily::Path => q(k - 2, k * k),
            PatternFamily::Cycle => q(2 * k - 5, 3 * k * k),
            PatternFamily::Star => q(k - 1, (k + 1) * (k + 1)),
        }
    }

    /// Closed-form exponent from the summary table.
    pub fn closed_exponent(self, p: usize) -> Q {
        let k = p as i64;
        match self {
            PatternFamily::Clique => qi(2) - q(2, k) - self.closed_form(p),
            PatternFamily::Path => qi(2) - q(3 * k - 2, k * k),
            PatternFamily::Cycle => qi(2) - q(8 * k - 5, 3 * k * k),
            PatternFamily::Star => qi(2) - q(3 * k + 1, (k + 1) * (k + 1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GTableRow {
    pub family: PatternFamily,
    /// Vertices, or leaves for stars.
    pub param: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub g: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub exponent: Q,
    /// Constructed-pattern and closed-form values coincide (both `g` and exponent).
    pub agree: bool,
}

/// Rows for cliques, paths, cycles and stars with parameter `3..=max`.
pub fn g_table(max: usize) -> Result<Vec<GTableRow>> {
    if max < 3 {
        return Err(invalid(format!("table needs a maximum parameter of at least 3, got {max}")));
    }
    let mut rows = Vec::new();
    for fam in PatternFamily::ALL {
        for p in 3..=max {
            let h = fam.pattern(p)?;
            let g = g_of_h(&h);
            let exponent = containment_exponent(&h);
            let agree = g == fam.closed_form(p) && exponent == fam.closed_exponent(p);
            rows.push(GTableRow { family: fam, param: p, k: h.k(), l: h.l(), m: h.m(), g, exponent, agree });
        }
    }
    Ok(rows)
}

pub fn g_table_text(rows: &[GTableRow]) -> String {
    let fmt = |x: &Q| format!("{}/{}", x.numer(), x.denom());
    let mut out = format!("{:<7} {:>3} {:>3} {:>3} {:>3} {:>10} {:>12} {:>6}\n", "H", "p", "k", "l", "m", "g(H)", "exponent", "agree");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<7} {:>3} {:>3} {:>3} {:>3} {:>10} {:>12} {:>6}",
            r.family.name(),
            r.param,
            r.k,
            r.l,
            r.m,
            fmt(&r.g),
            fmt(&r.exponent),
            r.agree
        );
    }
    out
}

/// One additive term `n^a r^b s^c` of a complexity bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialTerm {
    #[serde(with = "crate::rational::serde_q")]
    pub a: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub b: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub c: Q,
    pub label: String,
}

impl MonomialTerm {
    pub fn new(a: Q, b: Q, c: Q, label: impl Into<String>) -> Self {
        MonomialTerm { a, b, c, label: label.into() }
    }

    /// Exponent of `n` at `r = n^alpha`, `s = n^{-beta}`.
    pub fn exponent(&self, alpha: &Q, beta: &Q) -> Q {
        &self.a + &self.b * alpha - &self.c * beta
    }
}

/// Terms of the simplified bound for a family. `l` and `m` are only read
/// for the subgraph family.
pub fn stage_exponent_terms(family: Family, k: usize, l: usize, m: usize) -> Result<Vec<MonomialTerm>> {
    let ki = k as i64;
    let half = |x: i64| q(x, 2);
    match family {
        Family::Kdist => {
            if k == 0 {
                return Err(invalid("k must be positive"));
            }
            let mut t = vec![MonomialTerm::new(qi(0), qi(1), qi(0), "r")];
            for j in 1..=ki {
                t.push(MonomialTerm::new(half(j), -half(j - 1), qi(0), format!("sqrt(n^{j}/r^{})", j - 1)));
            }
            Ok(t)
        }
        Family::Clique => {
            if k < 3 {
                return Err(invalid("clique terms need k >= 3"));
            }
            Ok(vec![
                MonomialTerm::new(qi(0), qi(2), qi(0), "r^2"),
                MonomialTerm::new(half(ki - 1), qi(1) - half(ki - 2), qi(0), "r sqrt(n^(k-1)/r^(k-2))"),
                MonomialTerm::new(half(ki), q(ki - 1, ki) - half(ki - 1), qi(0), "r^((k-1)/k) sqrt(n^k/r^(k-1))"),
            ])
        }
        Family::Subgraph => {
            if k < 3 || l >= k {
                return Err(invalid(format!("subgraph terms need k >= 3 and l < k, got k = {k}, l = {l}")));
            }
            let (li, mi) = (l as i64, m as i64);
            Ok(vec![
                MonomialTerm::new(qi(0), qi(2), qi(1), "s r^2"),
                MonomialTerm::new(half(ki - 1), qi(1) - half(ki - 2), qi(1), "s r sqrt(n^(k-1)/r^(k-2))"),
                MonomialTerm::new(half(ki - 1), -half(ki - 3), -half(mi - 1), "sqrt(n^(k-1)/(r^(k-3) s^(m-1)))"),
                MonomialTerm::new(half(ki), q(li, li + 1) - half(ki - 1), -half(mi), "r^(l/(l+1)) sqrt(n^k/(r^(k-1) s^m))"),
            ])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variables {
    /// Only `r` varies; `s = 1`.
    Alpha,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BalanceSolution {
    #[serde(with = "crate::rational::serde_q")]
    pub alpha: Q,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::rational::serde_q_opt")]
    pub beta: Option<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub value: Q,
    /// Labels of the terms attaining `value`.
    pub tight: Vec<String>,
    /// 0-based positions of the tight terms.
    pub tight_indices: Vec<usize>,
    /// `beta > 0` (the exponent shadow of `s = o(1)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_positive: Option<bool>,
    /// `2 alpha - beta > 0` (the exponent shadow of `s r^2 = ω(1)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr2_growing: Option<bool>,
}

/// Largest term exponent at a point.
pub fn evaluate(terms: &[MonomialTerm], alpha: &Q, beta: &Q) -> Result<Q> {
    terms.iter().map(|t| t.exponent(alpha, beta)).max().ok_or_else(|| invalid("no terms"))
}

/// Solves `A x = b` exactly; `None` if singular.
fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let d = b.len();
    for col in 0..d {
        let piv = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                let pivot = a[col][col..].to_vec();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
                let sub = &f * &b[col];
                b[r] -= sub;
            }
        }
    }
    Some((0..d).map(|i| &b[i] / &a[i][i]).collect())
}

/// Minimizes the largest term exponent over `alpha in [0,1]` (and
/// `beta >= 0`) exactly, by enumerating the vertices of the epigraph.
/// Ties go to the smallest `alpha`, then the smallest `beta`.
pub fn balance(terms: &[MonomialTerm], vars: Variables) -> Result<BalanceSolution> {
    if terms.is_empty() {
        return Err(invalid("no terms to balance"));
    }
    let both = vars == Variables::Both;
    if both && terms.iter().all(|t| t.c.is_positive()) {
        return Err(Error::UnbalancedTerms);
    }
    // Unknowns (alpha, [beta,] t); constraints `row . x >= rhs`.
    let d = if both { 3 } else { 2 };
    let mut rows: Vec<(Vec<Q>, Q)> = Vec::new();
    for term in terms {
        let mut row = vec![-term.b.clone()];
        if both {
            row.push(term.c.clone());
        }
        row.push(Q::one());
        rows.push((row, term.a.clone()));
    }
    let unit = |i: usize, sign: i64| -> Vec<Q> { (0..d).map(|j| if j == i { qi(sign) } else { Q::zero() }).collect() };
    rows.push((unit(0, 1), Q::zero()));
    rows.push((unit(0, -1), -Q::one()));
    if both {
        rows.push((unit(1, 1), Q::zero()));
    }
    let feasible = |x: &[Q]| rows.iter().all(|(r, b)| r.iter().zip(x).map(|(a, v)| a * v).sum::<Q>() >= *b);
    let mut best: Option<Vec<Q>> = None;
    let key = |x: &[Q]| -> (Q, Q, Q) { (x[d - 1].clone(), x[0].clone(), if both { x[1].clone() } else { Q::zero() }) };
    for combo in index_subsets(rows.len(), d) {
        let a = combo.iter().map(|&i| rows[i].0.clone()).collect();
        let b = combo.iter().map(|&i| rows[i].1.clone()).collect();
        if let Some(x) = solve(a, b) {
            if feasible(&x) && best.as_ref().is_none_or(|cur| key(&x) < key(cur)) {
                best = Some(x);
            }
        }
    }
    let x = best.ok_or(Error::UnbalancedTerms)?;
    let alpha = x[0].clone();
    let beta = if both { x[1].clone() } else { Q::zero() };
    let value = evaluate(terms, &alpha, &beta)?;
    let tight_indices: Vec<usize> = terms.iter().enumerate().filter(|(_, t)| t.exponent(&alpha, &beta) == value).map(|(i, _)| i).collect();
    Ok(BalanceSolution {
        tight: tight_indices.iter().map(|&i| terms[i].label.clone()).collect(),
        tight_indices,
        beta_positive: both.then(|| beta.is_positive()),
        sr2_growing: both.then(|| (qi(2) * &alpha - &beta).is_positive()),
        beta: both.then_some(beta),
        alpha,
        value,
    })
}

fn index_subsets(n: usize, t: usize) -> Vec<Vec<usize>> {
    let items: Vec<u32> = (0..n as u32).collect();
    crate::builders::combinations(&items, t).into_iter().map(|c| c.into_iter().map(|i| i as usize).collect()).collect()
}

/// The reference operating point for a family: `alpha = k/(k+1)` for
/// distinctness, `1 - 1/k` otherwise; `beta = g(H)` for patterns.
pub fn reference_point(family: Family, k: usize, pattern: Option<&SubgraphPattern>) -> (Q, Q) {
    let ki = k as i64;
    match family {
        Family::Kdist => (q(ki, ki + 1), Q::zero()),
        Family::Clique => (qi(1) - q(1, ki), Q::zero()),
        Family::Subgraph => (qi(1) - q(1, ki), pattern.map_or_else(Q::zero, g_of_h)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_examples() {
        assert_eq!(g_of_h(&SubgraphPattern::clique(3).unwrap()), q(1, 27));
        assert_eq!(containment_exponent(&SubgraphPattern::clique(3).unwrap()), q(35, 27));
        assert_eq!(g_of_h(&SubgraphPattern::path(3).unwrap()), q(1, 9));
        assert_eq!(g_of_h(&SubgraphPattern::cycle(5).unwrap()), q(1, 15));
        assert_eq!(containment_exponent(&SubgraphPattern::clique(4).unwrap()), q(59, 40));
        assert_eq!(containment_exponent(&SubgraphPattern::star(3).unwrap()), q(11, 8));
    }

    #[test]
    fn table_rows() {
        let rows = g_table(4).unwrap();
        assert!(rows.iter().all(|r| r.agree));
        let cyc4 = rows.iter().find(|r| r.family == PatternFamily::Cycle && r.param == 4).unwrap();
        assert_eq!(cyc4.g, q(1, 16));
        assert!(g_table(2).is_err());
    }

    #[test]
    fn monotone() {
        let k3 = SubgraphPattern::clique(3).unwrap();
        let p3 = SubgraphPattern::path(3).unwrap();
        assert_eq!(monotone_exponent(std::slice::from_ref(&k3)).unwrap(), q(35, 27));
        assert_eq!(monotone_exponent(&[k3, p3.clone()]).unwrap(), q(35, 27));
        assert_eq!(monotone_exponent(&[p3]).unwrap(), q(11, 9));
        assert!(monotone_exponent(&[]).is_err());
    }

    #[test]
    fn kdist_terms_and_balance() {
        let t = stage_exponent_terms(Family::Kdist, 2, 0, 0).unwrap();
        let triples: Vec<(Q, Q, Q)> = t.iter().map(|m| (m.a.clone(), m.b.clone(), m.c.clone())).collect();
        assert_eq!(triples, vec![(qi(0), qi(1), qi(0)), (q(1, 2), qi(0), qi(0)), (qi(1), q(-1, 2), qi(0))]);
        let s = balance(&t, Variables::Alpha).unwrap();
        assert_eq!((s.alpha, s.value), (q(2, 3), q(2, 3)));
    }

    #[test]
    fn clique_k3_minimax_beats_reference_point() {
        let t = stage_exponent_terms(Family::Clique, 3, 0, 0).unwrap();
        assert_eq!(t[2].b, q(-1, 3));
        let s = balance(&t, Variables::Alpha).unwrap();
        assert_eq!((s.alpha.clone(), s.value.clone()), (q(3, 5), q(13, 10)));
        assert_eq!(s.tight_indices, vec![1, 2]);
        assert_eq!(evaluate(&t, &q(2, 3), &qi(0)).unwrap(), q(4, 3));
    }

    #[test]
    fn clique_k4_matches() {
        let t = stage_exponent_terms(Family::Clique, 4, 0, 0).unwrap();
        assert_eq!(balance(&t, Variables::Alpha).unwrap().value, q(3, 2));
    }

    #[test]
    fn triangle_subgraph_balance() {
        let t = stage_exponent_terms(Family::Subgraph, 3, 2, 1).unwrap();
        let s = balance(&t, Variables::Both).unwrap();
        assert_eq!((s.alpha, s.beta, s.value), (q(2, 3), Some(q(1, 27)), q(35, 27)));
        assert_eq!(s.tight_indices, vec![0, 1, 3]);
        assert_eq!((s.beta_positive, s.sr2_growing), (Some(true), Some(true)));
    }

    #[test]
    fn unbounded_system() {
        let t = vec![MonomialTerm::new(qi(1), qi(0), qi(1), "x")];
        assert_eq!(balance(&t, Variables::Both).unwrap_err(), Error::UnbalancedTerms);
        assert!(balance(&[], Variables::Alpha).is_err());
    }
}
