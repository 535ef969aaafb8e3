//! Symmetric-group actions on indices, L-vertices, transitions and
//! attachment points; orbits; speciality.
//!
//! Orbits are computed by closing the target under the generators of the
//! group (a transposition and an `n`-cycle for `S_n`), so the group itself is
//! never materialized. [`SymmetryGroup::elements`] enumerates the group in
//! lexicographic order for cross-checks on small degrees.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{slot_endpoints, edge_slot, FlowAssignment, Index, IndexUniverse, LVertex, LearningGraph, TransitionId, UniverseKind};
use crate::rational::{to_f64, Q};

/// Default cap on materialized group elements and orbit members: `10!`.
pub const DEFAULT_GROUP_CAP: u128 = 3_628_800;

/// A permutation of `0..n`, stored as its image vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<u32>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n as u32).collect())
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &x in &images {
            match seen.get_mut(x as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(crate::error::invalid(format!("{images:?} is not a permutation"))),
            }
        }
        Ok(Perm(images))
    }

    pub fn transposition(n: usize, a: u32, b: u32) -> Self {
        let mut p = Self::identity(n);
        p.0.swap(a as usize, b as usize);
        p
    }

    /// The cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn rotation(n: usize) -> Self {
        Perm((0..n as u32).map(|i| (i + 1) % n as u32).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.0[x as usize]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&x| self.0[x as usize]).collect())
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }
}

/// Something the vertex/position permutations act on.
pub trait Act: Sized {
    /// Image under `g`, assuming `g` has the universe's degree.
    fn act_unchecked(&self, g: &Perm, kind: UniverseKind) -> Self;
}

impl Act for Index {
    fn act_unchecked(&self, g: &Perm, kind: UniverseKind) -> Self {
        match kind {
            UniverseKind::Positions => g.apply(*self),
            UniverseKind::EdgeSlots => {
                let (u, v) = slot_endpoints(*self);
                edge_slot(g.apply(u), g.apply(v))
            }
        }
    }
}

impl Act for LVertex {
    fn act_unchecked(&self, g: &Perm, kind: UniverseKind) -> Self {
        let mut queried: Vec<Index> = self.queried().iter().map(|x| x.act_unchecked(g, kind)).collect();
        queried.sort_unstable();
        let annotation = self.annotation().map(|a| {
            let mut a: Vec<u32> = a.iter().map(|&x| g.apply(x)).collect();
            a.sort_unstable();
            a
        });
        LVertex::from_sorted(queried, annotation)
    }
}

/// A transition identified by its endpoint labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcLabel {
    pub from: LVertex,
    pub to: LVertex,
}

impl Act for ArcLabel {
    fn act_unchecked(&self, g: &Perm, kind: UniverseKind) -> Self {
        ArcLabel { from: self.from.act_unchecked(g, kind), to: self.to.act_unchecked(g, kind) }
    }
}

/// A vertex together with the graph vertices a subroutine is anchored at.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnchoredVertex {
    pub vertex: LVertex,
    pub anchor: Vec<u32>,
}

impl Act for AnchoredVertex {
    fn act_unchecked(&self, g: &Perm, kind: UniverseKind) -> Self {
        let mut anchor: Vec<u32> = self.anchor.iter().map(|&x| g.apply(x)).collect();
        anchor.sort_unstable();
        AnchoredVertex { vertex: self.vertex.act_unchecked(g, kind), anchor }
    }
}

/// Image of `target` under `g`; `g` must permute the universe's positions
/// (or graph vertices, for edge slots).
pub fn act<T: Act>(g: &Perm, target: &T, universe: &IndexUniverse) -> Result<T> {
    if g.degree() != universe.size {
        return Err(Error::DegreeMismatch { expected: universe.size, got: g.degree() });
    }
    Ok(target.act_unchecked(g, universe.kind))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgroup {
    /// The full symmetric group on positions or graph vertices.
    Symmetric,
    /// Only the identity.
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub universe: IndexUniverse,
    pub subgroup: Subgroup,
    pub mode: EnumerationMode,
    /// Largest number of group elements or orbit members materialized.
    pub cap: u128,
}

impl SymmetryGroup {
    pub fn exhaustive(universe: IndexUniverse) -> Self {
        SymmetryGroup { universe, subgroup: Subgroup::Symmetric, mode: EnumerationMode::Exhaustive, cap: DEFAULT_GROUP_CAP }
    }

    pub fn sampled(universe: IndexUniverse, samples: u64, seed: u64) -> Self {
        SymmetryGroup {
            universe,
            subgroup: Subgroup::Symmetric,
            mode: EnumerationMode::Sampled { samples, seed },
            cap: DEFAULT_GROUP_CAP,
        }
    }

    pub fn trivial(universe: IndexUniverse, mode: EnumerationMode) -> Self {
        SymmetryGroup { universe, subgroup: Subgroup::Trivial, mode, cap: DEFAULT_GROUP_CAP }
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    pub fn degree(&self) -> usize {
        self.universe.size
    }

    /// Group order, saturating at `u128::MAX`.
    pub fn order(&self) -> u128 {
        match self.subgroup {
            Subgroup::Trivial => 1,
            Subgroup::Symmetric => (1..=self.degree() as u128).try_fold(1u128, |a, b| a.checked_mul(b)).unwrap_or(u128::MAX),
        }
    }

    pub fn generators(&self) -> Vec<Perm> {
        let n = self.degree();
        match self.subgroup {
            Subgroup::Trivial => vec![],
            Subgroup::Symmetric if n < 2 => vec![],
            Subgroup::Symmetric if n == 2 => vec![Perm::transposition(2, 0, 1)],
            Subgroup::Symmetric => vec![Perm::transposition(n, 0, 1), Perm::rotation(n)],
        }
    }

    /// All elements in lexicographic order of their image vectors.
    pub fn elements(&self) -> Result<Box<dyn Iterator<Item = Perm>>> {
        let order = self.order();
        if order > self.cap {
            return Err(Error::CapExceeded { what: "group enumeration", needed: order.to_string(), cap: self.cap.to_string() });
        }
        Ok(match self.subgroup {
            Subgroup::Trivial => Box::new(std::iter::once(Perm::identity(self.degree()))),
            Subgroup::Symmetric => Box::new(LexPermutations::new(self.degree())),
        })
    }

    fn require_exhaustive(&self) -> Result<()> {
        match self.mode {
            EnumerationMode::Exhaustive => Ok(()),
            EnumerationMode::Sampled { .. } => Err(Error::WrongMode("exhaustive")),
        }
    }
}

/// Permutations of `0..n` in lexicographic order.
pub struct LexPermutations {
    next: Option<Vec<u32>>,
}

impl LexPermutations {
    pub fn new(n: usize) -> Self {
        LexPermutations { next: Some((0..n as u32).collect()) }
    }
}

impl Iterator for LexPermutations {
    type Item = Perm;

    fn next(&mut self) -> Option<Perm> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let n = nxt.len();
        if n > 1 {
            if let Some(i) = (0..n - 1).rev().find(|&i| nxt[i] < nxt[i + 1]) {
                let j = (i + 1..n).rev().find(|&j| nxt[j] > nxt[i]).unwrap();
                nxt.swap(i, j);
                nxt[i + 1..].reverse();
                self.next = Some(nxt);
            }
        }
        Some(Perm(cur))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit<T> {
    pub representative: T,
    /// Sorted.
    pub members: Vec<T>,
    pub valid_count: usize,
}

impl<T: Ord> Orbit<T> {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.members.binary_search(x).is_ok()
    }

    pub fn count_valid(mut self, valid: impl Fn(&T) -> bool) -> Self {
        self.valid_count = self.members.iter().filter(|m| valid(m)).count();
        self
    }
}

fn closure<T: Act + Clone + Eq + Hash>(target: &T, group: &SymmetryGroup) -> Result<Vec<T>> {
    let gens = group.generators();
    let kind = group.universe.kind;
    let mut seen: HashSet<T> = HashSet::from([target.clone()]);
    let mut queue = vec![target.clone()];
    while let Some(x) = queue.pop() {
        for g in &gens {
            let y = x.act_unchecked(g, kind);
            if !seen.contains(&y) {
                if seen.len() as u128 >= group.cap {
                    return Err(Error::CapExceeded { what: "orbit enumeration", needed: format!("more than {}", group.cap), cap: group.cap.to_string() });
                }
                seen.insert(y.clone());
                queue.push(y);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// The full equivalence class of `target`. `valid_count` is left at zero;
/// see [`Orbit::count_valid`].
pub fn orbit<T: Act + Clone + Eq + Hash + Ord>(target: &T, group: &SymmetryGroup) -> Result<Orbit<T>> {
    group.require_exhaustive()?;
    let mut members = closure(target, group)?;
    members.sort_unstable();
    Ok(Orbit { representative: target.clone(), members, valid_count: 0 })
}

/// Speciality (or its estimate) of one target, in the serialized shape
/// `{orbitSize, validCount, speciality, mode, samples?, seed?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecialityReport {
    /// Exhaustive: orbit size. Sampled: number of samples.
    pub orbit_size: u64,
    /// Exhaustive: valid orbit members. Sampled: samples landing on a valid member.
    pub valid_count: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub speciality: Q,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Confidence interval for sampled estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

/// `|orbit| / #valid members`.
pub fn speciality<T: Act + Clone + Eq + Hash + Ord>(
    target: &T,
    group: &SymmetryGroup,
    valid: impl Fn(&T) -> bool,
) -> Result<SpecialityReport> {
    let o = orbit(target, group)?.count_valid(valid);
    if o.valid_count == 0 {
        return Err(Error::EmptyValidSet);
    }
    Ok(SpecialityReport {
        orbit_size: o.size() as u64,
        valid_count: o.valid_count as u64,
        speciality: Q::new(BigInt::from(o.size()), BigInt::from(o.valid_count)),
        mode: "exhaustive".into(),
        samples: None,
        seed: None,
        interval: None,
    })
}

/// Two-sided normal quantile used for estimator intervals (99%).
pub const DEFAULT_Z: f64 = 2.576;

/// Monte-Carlo estimate of the inverse probability that a uniformly random
/// group element maps `target` onto a valid member.
///
/// The interval is the normal-approximation interval for the hit
/// probability at quantile `z`, inverted.
pub fn estimate_speciality<T: Act>(
    target: &T,
    group: &SymmetryGroup,
    valid: impl Fn(&T) -> bool,
    z: f64,
) -> Result<SpecialityReport> {
    let EnumerationMode::Sampled { samples, seed } = group.mode else {
        return Err(Error::WrongMode("sampled"));
    };
    if samples == 0 {
        return Err(Error::EstimateDiverged);
    }
    let kind = group.universe.kind;
    let n = group.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images: Vec<u32> = (0..n as u32).collect();
    let mut hits = 0u64;
    for _ in 0..samples {
        if group.subgroup == Subgroup::Symmetric {
            images.shuffle(&mut rng);
        }
        let g = Perm(images.clone());
        if valid(&target.act_unchecked(&g, kind)) {
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::EstimateDiverged);
    }
    let p = hits as f64 / samples as f64;
    let half = z * (p * (1.0 - p) / samples as f64).sqrt();
    let high = if p - half > 0.0 { 1.0 / (p - half) } else { f64::INFINITY };
    Ok(SpecialityReport {
        orbit_size: samples,
        valid_count: hits,
        speciality: Q::new(BigInt::from(samples), BigInt::from(hits)),
        mode: "sampled".into(),
        samples: Some(samples),
        seed: Some(seed),
        interval: Some([1.0 / (p + half), high]),
    })
}

/// Partition of one stage's transitions into orbits.
#[derive(Clone, Debug)]
pub struct StageOrbits {
    /// 0-based stage.
    pub stage: usize,
    /// Orbit index of each transition, by position in the stage.
    pub orbit_of: Vec<usize>,
    pub orbits: Vec<StageOrbit>,
    /// `false` if some orbit leaves the stage (the stage is not invariant).
    pub closed: bool,
}

#[derive(Clone, Debug)]
pub struct StageOrbit {
    /// Position in the stage of the first member met.
    pub representative: usize,
    /// Full orbit size, including images that are not transitions of the stage.
    pub size: u64,
    /// Positions in the stage of the members that are transitions.
    pub members: Vec<usize>,
}

pub fn arc_label(lg: &LearningGraph, stage: usize, pos: usize) -> ArcLabel {
    let t = &lg.stages[stage].transitions[pos];
    let (from, to) = lg.endpoints(stage, t);
    ArcLabel { from: from.clone(), to: to.clone() }
}

impl StageOrbits {
    pub fn compute(lg: &LearningGraph, stage: usize, group: &SymmetryGroup) -> Result<Self> {
        group.require_exhaustive()?;
        if group.universe != lg.universe {
            return Err(Error::DegreeMismatch { expected: lg.universe.size, got: group.degree() });
        }
        let st = lg.stages.get(stage).ok_or_else(|| crate::error::invalid(format!("no stage {}", stage + 1)))?;
        let labels: Vec<ArcLabel> = (0..st.transitions.len()).map(|i| arc_label(lg, stage, i)).collect();
        let pos: HashMap<&ArcLabel, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let mut orbit_of = vec![usize::MAX; labels.len()];
        let mut orbits = Vec::new();
        let mut closed = true;
        for i in 0..labels.len() {
            if orbit_of[i] != usize::MAX {
                continue;
            }
            let members = closure(&labels[i], group)?;
            let id = orbits.len();
            let mut inside = Vec::new();
            for m in &members {
                match pos.get(m) {
                    Some(&p) => {
                        orbit_of[p] = id;
                        inside.push(p);
                    }
                    None => closed = false,
                }
            }
            inside.sort_unstable();
            orbits.push(StageOrbit { representative: i, size: members.len() as u64, members: inside });
        }
        Ok(StageOrbits { stage, orbit_of, orbits, closed })
    }
}

/// Speciality data for one orbit of a stage under one flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitSpeciality {
    pub orbit: usize,
    pub representative: TransitionId,
    pub size: u64,
    pub valid_count: u64,
    pub speciality: Q,
    /// Distinct positive flow values on the orbit's valid members, sorted.
    pub flows: Vec<Q>,
}

/// One entry per orbit that carries positive flow.
pub fn stage_specialities(lg: &LearningGraph, orbits: &StageOrbits, flow: &FlowAssignment) -> Vec<OrbitSpeciality> {
    let st = &lg.stages[orbits.stage];
    let mut out = Vec::new();
    for (k, o) in orbits.orbits.iter().enumerate() {
        let mut values: Vec<Q> = o
            .members
            .iter()
            .filter_map(|&p| flow.flows.get(&st.transitions[p].id))
            .filter(|q| q.is_positive())
            .cloned()
            .collect();
        if values.is_empty() {
            continue;
        }
        let valid = values.len() as u64;
        values.sort();
        values.dedup();
        out.push(OrbitSpeciality {
            orbit: k,
            representative: st.transitions[o.representative].id,
            size: o.size,
            valid_count: valid,
            speciality: Q::new(BigInt::from(o.size), BigInt::from(valid)),
            flows: values,
        });
    }
    out
}

/// Speciality of one transition of stage `stage` (0-based) under `flow`.
pub fn transition_speciality(
    lg: &LearningGraph,
    stage: usize,
    id: TransitionId,
    group: &SymmetryGroup,
    flow: &FlowAssignment,
) -> Result<SpecialityReport> {
    let (target, valid) = transition_target(lg, stage, id, flow)?;
    speciality(&target, group, |x| valid.contains(x))
}

/// Sampled counterpart of [`transition_speciality`].
pub fn estimate_transition_speciality(
    lg: &LearningGraph,
    stage: usize,
    id: TransitionId,
    group: &SymmetryGroup,
    flow: &FlowAssignment,
    z: f64,
) -> Result<SpecialityReport> {
    let (target, valid) = transition_target(lg, stage, id, flow)?;
    estimate_speciality(&target, group, |x| valid.contains(x), z)
}

fn transition_target(
    lg: &LearningGraph,
    stage: usize,
    id: TransitionId,
    flow: &FlowAssignment,
) -> Result<(ArcLabel, HashSet<ArcLabel>)> {
    let st = lg.stages.get(stage).ok_or_else(|| crate::error::invalid(format!("no stage {}", stage + 1)))?;
    let pos = st.transitions.iter().position(|t| t.id == id).ok_or(Error::UnknownTransition(id))?;
    let valid = st
        .transitions
        .iter()
        .enumerate()
        .filter(|(_, t)| flow.is_positive(t.id))
        .map(|(i, _)| arc_label(lg, stage, i))
        .collect();
    Ok((arc_label(lg, stage, pos), valid))
}

/// Largest speciality over the orbits of stage `stage` that carry flow.
pub fn max_speciality(lg: &LearningGraph, stage: usize, group: &SymmetryGroup, flow: &FlowAssignment) -> Result<Q> {
    let orbits = StageOrbits::compute(lg, stage, group)?;
    stage_specialities(lg, &orbits, flow)
        .into_iter()
        .map(|o| o.speciality)
        .max()
        .ok_or(Error::EmptyValidSet)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// Representatives (transition ids, or attachment vertices) of orbits
    /// that break symmetry.
    pub offending: Vec<u32>,
    pub issues: Vec<String>,
}

/// Checks that, for every flow, valid members of each orbit carry equal
/// flow, and that the multiset of `(orbit, flow, speciality)` is the same
/// for all flows.
pub fn is_symmetric_stage(
    lg: &LearningGraph,
    stage: usize,
    group: &SymmetryGroup,
    flows: &[FlowAssignment],
) -> Result<SymmetryReport> {
    let orbits = StageOrbits::compute(lg, stage, group)?;
    Ok(symmetric_with(lg, &orbits, flows))
}

/// [`is_symmetric_stage`] with precomputed orbits.
pub fn symmetric_with(lg: &LearningGraph, orbits: &StageOrbits, flows: &[FlowAssignment]) -> SymmetryReport {
    let mut report = SymmetryReport { symmetric: true, ..Default::default() };
    let mut reference: Option<Vec<(usize, Q, Q)>> = None;
    for (x, flow) in flows.iter().enumerate() {
        let specs = stage_specialities(lg, orbits, flow);
        let mut sig = Vec::with_capacity(specs.len());
        for o in specs {
            if o.flows.len() > 1 {
                report.symmetric = false;
                report.offending.push(o.representative);
                report.issues.push(format!("instance {x}: orbit of transition {} carries unequal flows", o.representative));
            }
            sig.push((o.orbit, o.flows[0].clone(), o.speciality));
        }
        match &reference {
            None => reference = Some(sig),
            Some(r) if *r != sig => {
                report.symmetric = false;
                report.issues.push(format!("instance {x}: flow/speciality profile differs from instance 0"));
                let diff: BTreeMap<usize, ()> = r
                    .iter()
                    .filter(|e| !sig.contains(e))
                    .chain(sig.iter().filter(|e| !r.contains(e)))
                    .map(|e| (e.0, ()))
                    .collect();
                let st = &lg.stages[orbits.stage];
                report.offending.extend(diff.keys().map(|&k| st.transitions[orbits.orbits[k].representative].id));
            }
            _ => {}
        }
    }
    report.offending.sort_unstable();
    report.offending.dedup();
    report
}

/// Speciality of a subroutine attachment point or layer vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSpeciality {
    pub point: AnchoredVertex,
    /// Canonical (smallest) member of the orbit.
    pub canonical: AnchoredVertex,
    pub size: u64,
    pub valid_count: u64,
    pub speciality: Q,
    pub inflow: Q,
}

/// Attachment points of `lg` that receive positive flow, with their in-flow.
pub fn attachment_points(lg: &LearningGraph, flow: &FlowAssignment) -> Vec<(u32, AnchoredVertex, Q)> {
    let inflow = flow.inflows(lg);
    let last = lg.final_layer();
    lg.attachments
        .iter()
        .filter_map(|(&v, att)| {
            let p = inflow[last].get(v as usize)?.clone();
            p.is_positive().then(|| {
                let point = AnchoredVertex { vertex: lg.layers[last][v as usize].clone(), anchor: att.anchor.clone() };
                (v, point, p)
            })
        })
        .collect()
}

/// Caches orbits of anchored vertices across calls.
#[derive(Default)]
pub struct PointOrbitCache {
    orbit_of: HashMap<AnchoredVertex, usize>,
    orbits: Vec<(AnchoredVertex, Vec<AnchoredVertex>)>,
}

impl PointOrbitCache {
    pub fn orbit(&mut self, point: &AnchoredVertex, group: &SymmetryGroup) -> Result<usize> {
        if let Some(&k) = self.orbit_of.get(point) {
            return Ok(k);
        }
        group.require_exhaustive()?;
        let mut members = closure(point, group)?;
        members.sort_unstable();
        let k = self.orbits.len();
        for m in &members {
            self.orbit_of.insert(m.clone(), k);
        }
        self.orbits.push((members[0].clone(), members));
        Ok(k)
    }

    pub fn members(&self, k: usize) -> &[AnchoredVertex] {
        &self.orbits[k].1
    }

    pub fn canonical(&self, k: usize) -> &AnchoredVertex {
        &self.orbits[k].0
    }
}

/// Speciality of each attachment point with positive in-flow; validity of an
/// orbit member means being an attachment point with positive in-flow.
pub fn attachment_specialities(
    lg: &LearningGraph,
    flow: &FlowAssignment,
    group: &SymmetryGroup,
    cache: &mut PointOrbitCache,
) -> Result<Vec<PointSpeciality>> {
    let points = attachment_points(lg, flow);
    point_specialities(points.into_iter().map(|(_, p, q)| (p, q)).collect(), group, cache)
}

/// Speciality of each vertex of `layer` with positive in-flow.
pub fn layer_specialities(
    lg: &LearningGraph,
    layer: usize,
    flow: &FlowAssignment,
    group: &SymmetryGroup,
) -> Result<Vec<PointSpeciality>> {
    let inflow = flow.inflows(lg);
    let points = lg.layers[layer]
        .iter()
        .zip(&inflow[layer])
        .filter(|(_, q)| q.is_positive())
        .map(|(v, q)| (AnchoredVertex { vertex: v.clone(), anchor: vec![] }, q.clone()))
        .collect();
    point_specialities(points, group, &mut PointOrbitCache::default())
}

fn point_specialities(
    points: Vec<(AnchoredVertex, Q)>,
    group: &SymmetryGroup,
    cache: &mut PointOrbitCache,
) -> Result<Vec<PointSpeciality>> {
    let valid: HashSet<&AnchoredVertex> = points.iter().map(|(p, _)| p).collect();
    let mut out = Vec::with_capacity(points.len());
    for (p, q) in &points {
        let k = cache.orbit(p, group)?;
        let members = cache.members(k);
        let valid_count = members.iter().filter(|m| valid.contains(m)).count() as u64;
        out.push(PointSpeciality {
            point: p.clone(),
            canonical: cache.canonical(k).clone(),
            size: members.len() as u64,
            valid_count,
            speciality: Q::new(BigInt::from(members.len()), BigInt::from(valid_count)),
            inflow: q.clone(),
        });
    }
    Ok(out)
}

/// Vertex-symmetry check for the subroutine stage: equal in-flows on valid
/// equivalent attachment points, and the same `(orbit, in-flow, speciality)`
/// profile for every instance.
pub fn is_symmetric_attachments(
    instances: &[(&LearningGraph, &FlowAssignment)],
    group: &SymmetryGroup,
) -> Result<SymmetryReport> {
    let mut cache = PointOrbitCache::default();
    let mut report = SymmetryReport { symmetric: true, ..Default::default() };
    let mut reference: Option<Vec<(AnchoredVertex, Q, Q)>> = None;
    for (x, (lg, flow)) in instances.iter().enumerate() {
        let specs = attachment_specialities(lg, flow, group, &mut cache)?;
        let mut by_orbit: BTreeMap<AnchoredVertex, (Vec<Q>, Q)> = BTreeMap::new();
        for s in specs {
            let e = by_orbit.entry(s.canonical).or_insert_with(|| (Vec::new(), s.speciality.clone()));
            e.0.push(s.inflow);
        }
        let mut sig = Vec::new();
        for (canon, (mut flows, spec)) in by_orbit {
            flows.sort();
            flows.dedup();
            if flows.len() > 1 {
                report.symmetric = false;
                report.issues.push(format!("instance {x}: attachment orbit {canon:?} has unequal in-flows"));
            }
            sig.push((canon, flows[0].clone(), spec));
        }
        match &reference {
            None => reference = Some(sig),
            Some(r) if *r != sig => {
                report.symmetric = false;
                report.issues.push(format!("instance {x}: attachment profile differs from instance 0"));
            }
            _ => {}
        }
    }
    Ok(report)
}

/// Speciality as a float, for reports.
pub fn speciality_f64(q: &Q) -> f64 {
    if q.is_zero() {
        0.0
    } else {
        to_f64(q)
    }
}
