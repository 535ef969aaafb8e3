use serde::{Deserialize, Serialize};

use super::total_complexity;
use crate::builders::{
    build_kclique, build_kdistinctness, build_subgraph, BuildOptions, Family, GraphInput, ProblemInstance, SubgraphPattern,
};
use crate::error::{invalid, Result};
use crate::rational::{ceil_rational_power, to_f64, Q};
use crate::symmetry::SymmetryGroup;

/// How `r` follows `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RRule {
    /// `r = ceil(n^alpha)`.
    Power(#[serde(with = "crate::rational::serde_q")] Q),
    Fixed(usize),
}

impl RRule {
    pub fn r(&self, n: usize) -> usize {
        match self {
            RRule::Power(a) => ceil_rational_power(n as u64, a) as usize,
            RRule::Fixed(r) => *r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSpec {
    pub family: Family,
    /// `k` for distinctness and cliques; ignored for patterns.
    pub k: usize,
    pub pattern: Option<SubgraphPattern>,
    pub rule: RRule,
    pub s: Q,
    pub options: BuildOptions,
}

/// `n^a r^b s^c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(with = "crate::rational::serde_q")]
    pub a: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub b: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub c: Q,
}

impl Monomial {
    fn new(a: Q, b: Q, c: Q) -> Self {
        Monomial { a, b, c }
    }

    fn ints(a: i64, b: i64, c: i64) -> Self {
        Monomial::new(Q::from_integer(a.into()), Q::from_integer(b.into()), Q::from_integer(c.into()))
    }

    pub fn ln_at(&self, n: f64, r: f64, s: f64) -> f64 {
        to_f64(&self.a) * n.ln() + to_f64(&self.b) * r.ln() + to_f64(&self.c) * s.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingPoint {
    pub n: usize,
    pub r: usize,
    pub labels: Vec<String>,
    pub lengths: Vec<f64>,
    #[serde(with = "crate::rational::serde_q_vec")]
    pub specialities: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageFit {
    pub label: String,
    /// Parameter-table speciality expression for the stage.
    pub expression: Monomial,
    /// Log-log slope of the exact specialities against `n`.
    pub fitted: f64,
    /// Log-log slope of the table expression at the same `(n, r)` pairs.
    pub predicted: f64,
    /// Exponent of the table expression under the `r` rule (`r = n^alpha`), if a power rule.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::rational::serde_q_opt")]
    pub nominal: Option<Q>,
    pub fitted_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingReport {
    pub family: Family,
    pub points: Vec<ScalingPoint>,
    pub fits: Vec<StageFit>,
}

impl ScalingReport {
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "{:>4} {:>4}  specialities", "n", "r");
        for p in &self.points {
            let specs: Vec<String> = p.specialities.iter().map(|q| format!("{:.4}", to_f64(q))).collect();
            let _ = writeln!(out, "{:>4} {:>4}  {}", p.n, p.r, specs.join("  "));
        }
        let _ = writeln!(out, "{:<8} {:>8} {:>10} {:>8}", "stage", "fitted", "predicted", "nominal");
        for f in &self.fits {
            let nominal = f.nominal.as_ref().map_or("-".into(), |q| format!("{:.4}", to_f64(q)));
            let _ = writeln!(out, "{:<8} {:>8.4} {:>10.4} {:>8}", f.label, f.fitted, f.predicted, nominal);
        }
        out
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Parameter-table speciality expressions, one per reported stage (the
/// subroutine stage last).
pub fn table_specialities(family: Family, k: usize, m: usize) -> Vec<Monomial> {
    let walk = |j: i64| if j == 1 { Monomial::ints(0, 0, 0) } else { Monomial::ints(j - 1, 2 - j, 0) };
    match family {
        Family::Kdist => (1..=k as i64 + 1).map(walk).collect(),
        Family::Clique => (1..=k as i64 + 1).map(walk).collect(),
        Family::Subgraph => {
            let k = k as i64;
            let mut v: Vec<Monomial> = (1..=k).map(walk).collect();
            v.extend((1..=m as i64).map(|i| Monomial::ints(k - 1, 3 - k, 1 - i)));
            v.push(Monomial::ints(k, 1 - k, -(m as i64)));
            v
        }
    }
}

/// The positive instance used when none is supplied: the first `k` values
/// equal (distinctness), or the pattern on vertices `0..k` (graphs).
pub fn canonical_instance(family: Family, k: usize, pattern: Option<&SubgraphPattern>, n: usize) -> Result<ProblemInstance> {
    match family {
        Family::Kdist => {
            let values = (0..n as u32).map(|i| if (i as usize) < k { 0 } else { i }).collect();
            Ok(ProblemInstance::distinctness(values, k))
        }
        Family::Clique => {
            let p = SubgraphPattern::clique(k)?;
            Ok(ProblemInstance::graph(GraphInput::from_edges(n, p.edges().iter().copied())?, &p))
        }
        Family::Subgraph => {
            let p = pattern.ok_or_else(|| invalid("subgraph family needs a pattern"))?;
            Ok(ProblemInstance::graph(GraphInput::from_edges(n, p.edges().iter().copied())?, p))
        }
    }
}

/// Exact specialities and lengths per stage at each size, with log-log fits
/// against `n` beside the parameter-table predictions.
pub fn scaling_report(spec: &ScalingSpec, sizes: &[usize]) -> Result<ScalingReport> {
    if sizes.len() < 3 {
        return Err(invalid(format!("scaling needs at least 3 sizes, got {}", sizes.len())));
    }
    let (k, m) = match (&spec.family, &spec.pattern) {
        (Family::Subgraph, Some(p)) => (p.k(), p.m()),
        (Family::Subgraph, None) => return Err(invalid("subgraph scaling needs a pattern")),
        _ => (spec.k, 0),
    };
    let exprs = table_specialities(spec.family, k, m);
    let mut points = Vec::new();
    for &n in sizes {
        let r = spec.rule.r(n);
        let inst = canonical_instance(spec.family, k, spec.pattern.as_ref(), n)?;
        let build = match spec.family {
            Family::Kdist => build_kdistinctness(n, k, r, &inst)?,
            Family::Clique => build_kclique(n, k, r, &inst, &spec.options)?,
            Family::Subgraph => build_subgraph(n, spec.pattern.as_ref().unwrap(), r, &spec.s, &inst, &spec.options)?,
        };
        let group = SymmetryGroup::exhaustive(build.graph.universe);
        let rep = total_complexity(&[(&build.graph, &build.flow)], &group)?;
        let mut labels: Vec<String> = rep.stages.iter().map(|s| s.label.clone()).collect();
        let mut lengths: Vec<f64> = rep.stages.iter().map(|s| to_f64(&s.length)).collect();
        let mut specialities: Vec<Q> = rep.stages.iter().map(|s| s.speciality.clone()).collect();
        if let Some(sub) = rep.subroutine {
            labels.push("sub".into());
            lengths.push(sub.length);
            specialities.push(sub.speciality);
        }
        points.push(ScalingPoint { n, r, labels, lengths, specialities });
    }
    let rows = points[0].labels.len();
    if points.iter().any(|p| p.labels.len() != rows) || rows != exprs.len() {
        return Err(invalid("stage layout differs across sizes"));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let s = to_f64(&spec.s);
    let fits = (0..rows)
        .map(|i| {
            let e = &exprs[i];
            let ys: Vec<f64> = points.iter().map(|p| to_f64(&p.specialities[i]).ln()).collect();
            let ps: Vec<f64> = points.iter().map(|p| e.ln_at(p.n as f64, p.r as f64, s)).collect();
            let ls: Vec<f64> = points.iter().map(|p| p.lengths[i].max(f64::MIN_POSITIVE).ln()).collect();
            StageFit {
                label: points[0].labels[i].clone(),
                expression: e.clone(),
                fitted: slope(&xs, &ys),
                predicted: slope(&xs, &ps),
                nominal: match &spec.rule {
                    RRule::Power(alpha) => Some(&e.a + &e.b * alpha),
                    RRule::Fixed(_) => Some(e.a.clone()),
                },
                fitted_length: slope(&xs, &ls),
            }
        })
        .collect();
    Ok(ScalingReport { family: spec.family, points, fits })
}
