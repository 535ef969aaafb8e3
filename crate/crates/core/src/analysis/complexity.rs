use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::Conditioning;
use crate::error::{invalid, Error, Result};
use crate::graph::{average_length, validate_structure, FlowAssignment, LearningGraph};
use crate::rational::{to_f64, Q};
use crate::symmetry::{
    attachment_specialities, is_symmetric_attachments, stage_specialities, symmetric_with, PointOrbitCache, StageOrbits,
    SymmetryGroup,
};

/// Exact square root of a non-negative rational, if it has one.
pub fn exact_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer().sqrt(), x.denom().sqrt());
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Q::new(n, d))
}

/// `L * sqrt(T)`, rounded once from `sqrt(L^2 T)` (exact when `T` is a square).
pub fn stage_complexity(l: &Q, t: &Q) -> Result<f64> {
    if t < &Q::one() {
        return Err(invalid(format!("speciality {t} is below 1")));
    }
    if l.is_negative() {
        return Err(invalid(format!("length {l} is negative")));
    }
    if let Some(root) = exact_sqrt(t) {
        return Ok(to_f64(&(l * root)));
    }
    Ok(to_f64(&(l * l * t)).sqrt())
}

/// Subroutine-stage value from `(in-flow p_v, complexity ℓ(v))` pairs and
/// the maximal vertex speciality: returns `(L, L * sqrt(T))`.
pub fn subroutine_value(points: &[(Q, f64)], t: &Q) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(invalid("subroutine stage has no attachment points"));
    }
    if t < &Q::one() {
        return Err(invalid(format!("speciality {t} is below 1")));
    }
    let l: f64 = points.iter().map(|(p, c)| to_f64(p) * c).sum();
    Ok((l, l * to_f64(t).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageRow {
    pub label: String,
    /// `L_i` (maximum over instances when they differ).
    #[serde(with = "crate::rational::serde_q")]
    pub length: Q,
    /// `T_i` (maximum over instances when they differ).
    #[serde(with = "crate::rational::serde_q")]
    pub speciality: Q,
    /// Distinct orbit specialities among orbits carrying flow.
    #[serde(with = "crate::rational::serde_q_vec")]
    pub orbit_specialities: Vec<Q>,
    pub complexity: f64,
    pub symmetric: bool,
    /// All orbits of the stage stay inside it.
    pub closed: bool,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubroutineRow {
    /// `Σ p_v ℓ(v)`.
    pub length: f64,
    /// Maximal attachment-point speciality.
    #[serde(with = "crate::rational::serde_q")]
    pub speciality: Q,
    pub complexity: f64,
    pub symmetric: bool,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComplexityReport {
    pub stages: Vec<StageRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subroutine: Option<SubroutineRow>,
    pub total: f64,
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<Conditioning>,
}

fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl ComplexityReport {
    /// Aligned table with one column per stage and rows
    /// `Stage / Speciality / Length / Complexity`.
    pub fn to_text(&self) -> String {
        let mut cols: Vec<[String; 4]> = self
            .stages
            .iter()
            .map(|s| {
                let mark = if s.symmetric { "" } else { "*" };
                [format!("{}{mark}", s.label), fmt_q(&s.speciality), fmt_q(&s.length), format!("{:.6}", s.complexity)]
            })
            .collect();
        if let Some(sub) = &self.subroutine {
            let mark = if sub.symmetric { "" } else { "*" };
            cols.push([format!("sub{mark}"), fmt_q(&sub.speciality), format!("{:.6}", sub.length), format!("{:.6}", sub.complexity)]);
        }
        let heads = ["Stage", "Speciality", "Length", "Complexity"];
        let w0 = heads.iter().map(|h| h.len()).max().unwrap();
        let widths: Vec<usize> = cols.iter().map(|c| c.iter().map(String::len).max().unwrap()).collect();
        let mut out = String::new();
        for (row, head) in heads.iter().enumerate() {
            let _ = write!(out, "{head:<w0$}");
            for (c, w) in cols.iter().zip(&widths) {
                let _ = write!(out, " | {:>w$}", c[row]);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "Total: {:.6}", self.total);
        if let Some(c) = &self.conditioning {
            let _ = writeln!(out, "Conditioning: K_actual = {}{}", fmt_q(&c.k_actual), if c.warning { " (>= bound)" } else { "" });
        }
        if self.stages.iter().any(|s| !s.symmetric) || self.subroutine.as_ref().is_some_and(|s| !s.symmetric) {
            out.push_str("* not symmetric: maximum over instances\n");
        }
        out
    }
}

/// Per-stage `L_i, T_i, C_i`, the subroutine stage, and their sum, over one
/// or more instances sharing the same stage skeleton.
pub fn total_complexity(instances: &[(&LearningGraph, &FlowAssignment)], group: &SymmetryGroup) -> Result<ComplexityReport> {
    let (lg0, _) = *instances.first().ok_or_else(|| invalid("no instances to analyze"))?;
    if instances.iter().any(|(lg, _)| lg.stage_sizes() != lg0.stage_sizes()) {
        return Err(invalid("instances do not share a stage skeleton"));
    }
    let degenerate = validate_structure(lg0).degenerate_stages;
    let flows: Vec<FlowAssignment> = instances.iter().map(|(_, f)| (*f).clone()).collect();
    let mut stages = Vec::with_capacity(lg0.stage_count());
    for s in 0..lg0.stage_count() {
        let orbits = StageOrbits::compute(lg0, s, group)?;
        let mut length = Q::zero();
        let mut speciality = Q::zero();
        let mut per_orbit = Vec::new();
        for (lg, f) in instances {
            length = length.max(average_length(lg, s, f)?);
            for o in stage_specialities(lg0, &orbits, f) {
                per_orbit.push(o.speciality.clone());
                speciality = speciality.max(o.speciality);
            }
        }
        if speciality.is_zero() {
            return Err(Error::EmptyValidSet);
        }
        per_orbit.sort();
        per_orbit.dedup();
        let symmetric = symmetric_with(lg0, &orbits, &flows).symmetric;
        stages.push(StageRow {
            label: lg0.stages[s].label.clone(),
            complexity: stage_complexity(&length, &speciality)?,
            length,
            speciality,
            orbit_specialities: per_orbit,
            symmetric,
            closed: orbits.closed,
            degenerate: degenerate.contains(&(s + 1)),
        });
    }
    let subroutine = if instances.iter().any(|(lg, _)| !lg.attachments.is_empty()) {
        Some(subroutine_stage(instances, group)?)
    } else {
        None
    };
    let total = stages.iter().map(|s| s.complexity).sum::<f64>() + subroutine.as_ref().map_or(0.0, |s| s.complexity);
    Ok(ComplexityReport { stages, subroutine, total, instances: instances.len(), conditioning: None })
}

/// The subroutine stage: `ℓ(v)` is the total complexity of the graph
/// appended at `v` under its own flow and the symmetric group on its
/// positions; `T` is the largest attachment-point speciality.
pub fn subroutine_stage_complexity(lg: &LearningGraph, flow: &FlowAssignment, group: &SymmetryGroup) -> Result<SubroutineRow> {
    subroutine_stage(&[(lg, flow)], group)
}

fn subroutine_stage(instances: &[(&LearningGraph, &FlowAssignment)], group: &SymmetryGroup) -> Result<SubroutineRow> {
    let mut cache: HashMap<(usize, Vec<(u32, Q)>), f64> = HashMap::new();
    let mut points_cache = PointOrbitCache::default();
    let mut length = 0f64;
    let mut speciality = Q::zero();
    let mut points = 0;
    for (lg, flow) in instances {
        if lg.attachments.is_empty() {
            return Err(invalid("subroutine stage has no attachments"));
        }
        let specs = attachment_specialities(lg, flow, group, &mut points_cache)?;
        let inflow = flow.inflows(lg);
        let last = lg.final_layer();
        let mut pairs = Vec::new();
        for (&v, att) in &lg.attachments {
            let p = &inflow[last][v as usize];
            if p.is_zero() {
                continue;
            }
            let sub = flow.attached.get(&v).ok_or(Error::BadAttachment { vertex: v as usize, reason: "no subroutine flow".into() })?;
            let key = (att.graph.universe.len(), sub.flows.iter().map(|(&k, q)| (k, q.clone())).collect());
            let c = match cache.get(&key) {
                Some(&c) => c,
                None => {
                    let g = SymmetryGroup::exhaustive(att.graph.universe).with_cap(group.cap);
                    let c = total_complexity(&[(&att.graph, sub)], &g)?.total;
                    cache.insert(key, c);
                    c
                }
            };
            pairs.push((p.clone(), c));
        }
        for s in specs {
            speciality = speciality.max(s.speciality);
        }
        points = points.max(pairs.len());
        length = length.max(subroutine_value(&pairs, &Q::one())?.0);
    }
    if speciality.is_zero() {
        return Err(Error::EmptyValidSet);
    }
    let symmetric = is_symmetric_attachments(instances, group)?.symmetric;
    Ok(SubroutineRow { complexity: length * to_f64(&speciality).sqrt(), length, speciality, symmetric, points })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{IndexUniverse, LVertex};
    use crate::rational::{q, qi};

    #[test]
    fn formula() {
        assert!((stage_complexity(&qi(1), &qi(10)).unwrap() - 3.16227766017).abs() < 1e-11);
        assert_eq!(stage_complexity(&qi(2), &qi(1)).unwrap(), 2.0);
        assert_eq!(stage_complexity(&q(1, 3), &qi(1)).unwrap(), 1.0 / 3.0);
        assert_eq!(stage_complexity(&qi(0), &qi(7)).unwrap(), 0.0);
        assert!(stage_complexity(&qi(1), &q(1, 2)).is_err());
    }

    #[test]
    fn subroutine_examples() {
        assert_eq!(subroutine_value(&[(q(1, 2), 2.0), (q(1, 2), 4.0)], &qi(9)).unwrap(), (3.0, 9.0));
        assert_eq!(subroutine_value(&[(q(1, 4), 5.0), (q(3, 4), 5.0)], &qi(1)).unwrap(), (5.0, 5.0));
        assert!(subroutine_value(&[], &qi(1)).is_err());
    }

    #[test]
    fn single_index_graph() {
        let mut lg = LearningGraph::new(IndexUniverse::positions(1));
        lg.push_stage("1", vec![LVertex::new([0])], vec![(0, 0)]);
        let mut f = FlowAssignment::new();
        f.set(0, qi(1));
        let r = total_complexity(&[(&lg, &f)], &SymmetryGroup::exhaustive(lg.universe)).unwrap();
        assert_eq!(r.total, 1.0);
        assert!(r.stages[0].symmetric);
    }

    #[test]
    fn exact_roots() {
        assert_eq!(exact_sqrt(&q(9, 4)), Some(q(3, 2)));
        assert_eq!(exact_sqrt(&qi(10)), None);
    }
}
