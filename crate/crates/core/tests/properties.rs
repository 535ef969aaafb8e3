//! Property tests for the invariants the constructions rely on.

use std::collections::HashSet;

use learngraph::analysis::{condition_flow, exact_sqrt, stage_complexity};
use learngraph::builders::pattern::connected_patterns;
use learngraph::builders::{evaluate, find_certificate, GraphInput, Input, KDistinctness, Problem, ProblemInstance, SubgraphPattern};
use learngraph::emit::{graph_json, parse_graph_json};
use learngraph::graph::{average_length, check_flow, edge_slot, slot_endpoints, IndexUniverse, LVertex};
use learngraph::optimize::{balance, evaluate as evaluate_terms, g_formula, g_of_h, MonomialTerm, Variables};
use learngraph::rational::{q, qi, Q};
use learngraph::symmetry::{act, is_symmetric_stage, orbit, speciality, stage_specialities, Perm, StageOrbits, SymmetryGroup};
use proptest::prelude::*;

/// `(n, k, r)` with `k <= r < n <= 7`.
fn kdist_params() -> impl Strategy<Value = (usize, usize, usize)> {
    (3usize..=7).prop_flat_map(|n| (Just(n), 1usize..=3.min(n - 1))).prop_flat_map(|(n, k)| (Just(n), Just(k), k..n))
}

fn marked(n: usize, k: usize) -> impl Strategy<Value = Vec<u32>> {
    Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle().prop_map(move |v| {
        let mut m = v[..k].to_vec();
        m.sort_unstable();
        m
    })
}

fn kdist_with_marked() -> impl Strategy<Value = (usize, usize, usize, Vec<u32>)> {
    kdist_params().prop_flat_map(|(n, k, r)| (Just(n), Just(k), Just(r), marked(n, k)))
}

fn permutation(n: usize) -> impl Strategy<Value = Perm> {
    Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Perm::from_images(v).unwrap())
}

fn small_pattern() -> impl Strategy<Value = SubgraphPattern> {
    (3usize..=5).prop_flat_map(|k| {
        let all: Vec<SubgraphPattern> = connected_patterns(k).collect();
        proptest::sample::select(all)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orbits_partition_each_stage((n, k, r) in kdist_params()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let g = SymmetryGroup::exhaustive(kd.graph().universe);
        for s in 0..kd.graph().stage_count() {
            let o = StageOrbits::compute(kd.graph(), s, &g).unwrap();
            let mut seen = HashSet::new();
            for (id, orbit) in o.orbits.iter().enumerate() {
                for &m in &orbit.members {
                    prop_assert!(seen.insert(m));
                    prop_assert_eq!(o.orbit_of[m], id);
                }
                prop_assert!(orbit.members.len() as u64 <= orbit.size);
            }
            prop_assert_eq!(seen.len(), kd.graph().stages[s].transitions.len());
            prop_assert!(o.closed);
        }
    }

    #[test]
    fn specialities_at_least_one((n, k, r, m) in kdist_with_marked()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let flow = kd.flow(&m).unwrap();
        let g = SymmetryGroup::exhaustive(kd.graph().universe);
        for s in 0..kd.graph().stage_count() {
            let o = StageOrbits::compute(kd.graph(), s, &g).unwrap();
            for sp in stage_specialities(kd.graph(), &o, &flow) {
                prop_assert!(sp.speciality >= qi(1));
                prop_assert_eq!(sp.speciality.clone(), Q::new((sp.size as i64).into(), (sp.valid_count as i64).into()));
            }
        }
    }

    #[test]
    fn canonical_flows_are_sound_and_symmetric((n, k, r, m) in kdist_with_marked()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let flow = kd.flow(&m).unwrap();
        let rep = check_flow(kd.graph(), &flow).unwrap();
        prop_assert!(rep.is_valid(), "{:?}", rep.violations);
        let g = SymmetryGroup::exhaustive(kd.graph().universe);
        for s in 0..kd.graph().stage_count() {
            prop_assert!(is_symmetric_stage(kd.graph(), s, &g, std::slice::from_ref(&flow)).unwrap().symmetric);
        }
    }

    #[test]
    fn stage_lengths_add_up_to_r((n, k, r, m) in kdist_with_marked()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let flow = kd.flow(&m).unwrap();
        let total: Q = (0..kd.graph().stage_count()).map(|s| average_length(kd.graph(), s, &flow).unwrap()).sum();
        prop_assert_eq!(total, qi(r as i64));
    }

    #[test]
    fn perturbed_flow_breaks_symmetry((n, k, r, m) in kdist_with_marked()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let mut flow = kd.flow(&m).unwrap();
        let stage = &kd.graph().stages[0].transitions;
        let valid: Vec<u32> = stage.iter().filter(|t| flow.is_positive(t.id)).map(|t| t.id).collect();
        prop_assume!(valid.len() >= 2);
        let (a, b) = (valid[0], valid[1]);
        let delta = flow.value(a) / qi(2);
        flow.set(a, flow.value(a) - &delta);
        flow.set(b, flow.value(b) + &delta);
        let g = SymmetryGroup::exhaustive(kd.graph().universe);
        prop_assert!(!is_symmetric_stage(kd.graph(), 0, &g, &[flow]).unwrap().symmetric);
    }

    #[test]
    fn conditioning_keeps_flows_valid((n, k, r, m) in kdist_with_marked(), bits in any::<u64>()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let flow = kd.flow(&m).unwrap();
        let last = kd.graph().final_layer();
        let chosen: HashSet<LVertex> = kd.graph().layers[last].iter().enumerate().filter(|(i, _)| bits >> (i % 64) & 1 == 1).map(|(_, v)| v.clone()).collect();
        match condition_flow(kd.graph(), &flow, |v| chosen.contains(v), &qi(2)) {
            Ok((cond, c)) => {
                prop_assert!(check_flow(kd.graph(), &cond).unwrap().is_valid());
                prop_assert!(c.p > qi(0) && c.p <= qi(1));
                prop_assert_eq!(c.k_actual.clone() * c.p.clone(), qi(1));
                prop_assert_eq!(c.warning, c.k_actual >= qi(2));
            }
            Err(e) => prop_assert_eq!(e, learngraph::Error::SelectorRemovesAllFlow),
        }
    }

    #[test]
    fn orbit_is_invariant_under_the_group(n in 3usize..=6, set in proptest::collection::btree_set(0u32..6, 0..4), perm_seed in any::<u64>()) {
        let set: Vec<u32> = set.into_iter().filter(|&i| (i as usize) < n).collect();
        let u = IndexUniverse::positions(n);
        let g = SymmetryGroup::exhaustive(u);
        let x = LVertex::new(set.clone());
        let mut images: Vec<u32> = (0..n as u32).collect();
        images.rotate_left((perm_seed % n as u64) as usize);
        images.swap(0, (perm_seed / 7 % n as u64) as usize);
        let p = Perm::from_images(images).unwrap();
        let y = act(&p, &x, &u).unwrap();
        let ox = orbit(&x, &g).unwrap();
        let oy = orbit(&y, &g).unwrap();
        prop_assert_eq!(ox.members, oy.members);
        // |orbit of a t-set| = C(n, t); the only valid member is x itself.
        let rep = speciality(&x, &g, |z| *z == x).unwrap();
        prop_assert_eq!(rep.speciality, Q::from_integer(learngraph::rational::binomial(n as u64, set.len() as u64)));
    }

    #[test]
    fn act_is_a_group_action(a in permutation(6), b in permutation(6), set in proptest::collection::btree_set(0u32..15, 0..5)) {
        let u = IndexUniverse::edge_slots(6);
        let x = LVertex::new(set);
        let lhs = act(&a, &act(&b, &x, &u).unwrap(), &u).unwrap();
        let rhs = act(&a.compose(&b), &x, &u).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn certificate_iff_oracle_graphs(h in small_pattern(), n in 3usize..=6, mask in any::<u64>()) {
        let g = GraphInput::from_mask(n, mask);
        let input = Input::Graph(g.clone());
        let problem = Problem::Containment(h.clone());
        let cert = find_certificate(&input, &problem).unwrap();
        prop_assert_eq!(cert.is_some(), evaluate(&input, &problem).unwrap());
        if let Some(c) = cert {
            let e = c.embedding.unwrap();
            for &(u, v) in h.edges() {
                prop_assert!(g.has_edge(e[u as usize], e[v as usize]));
                prop_assert!(c.marked.contains(&edge_slot(e[u as usize], e[v as usize])));
            }
        }
    }

    #[test]
    fn certificate_iff_oracle_values(k in 2usize..=3, values in proptest::collection::vec(0u32..4, 2..=7)) {
        let input = Input::Values(values.clone());
        let problem = Problem::Distinctness { k };
        let cert = find_certificate(&input, &problem).unwrap();
        prop_assert_eq!(cert.is_some(), evaluate(&input, &problem).unwrap());
        if let Some(c) = cert {
            prop_assert_eq!(c.marked.len(), k);
            prop_assert!(c.marked.iter().all(|&i| values[i as usize] == values[c.marked[0] as usize]));
        }
    }

    #[test]
    fn g_is_positive_and_isomorphism_invariant(h in small_pattern(), p in permutation(5)) {
        let g = g_of_h(&h);
        prop_assert!(g > qi(0));
        let images: Vec<u32> = p.images().iter().copied().filter(|&x| (x as usize) < h.k()).collect();
        let relabelled = h.relabelled(&images).unwrap();
        prop_assert_eq!(g_of_h(&relabelled), g);
        prop_assert_eq!((relabelled.l(), relabelled.m()), (h.l(), h.m()));
    }

    #[test]
    fn g_decreases_in_l(k in 3usize..=12, l in 0usize..11, m in 0usize..30) {
        prop_assume!(l + 1 < k);
        prop_assert!(g_formula(k, l + 1, m) < g_formula(k, l, m));
        prop_assert!(g_formula(k, l, m + 1) < g_formula(k, l, m));
    }

    #[test]
    fn balance_is_minimax(terms in proptest::collection::vec((-6i64..=6, -6i64..=6, 1i64..=4), 1..5), probes in proptest::collection::vec(0i64..=20, 1..8)) {
        let terms: Vec<MonomialTerm> = terms.iter().enumerate().map(|(i, &(a, b, d))| MonomialTerm::new(q(a, d), q(b, d), qi(0), format!("t{i}"))).collect();
        let sol = balance(&terms, Variables::Alpha).unwrap();
        prop_assert!(sol.alpha >= qi(0) && sol.alpha <= qi(1));
        prop_assert_eq!(evaluate_terms(&terms, &sol.alpha, &qi(0)).unwrap(), sol.value.clone());
        for p in probes {
            prop_assert!(evaluate_terms(&terms, &q(p, 20), &qi(0)).unwrap() >= sol.value);
        }
        prop_assert!(!sol.tight_indices.is_empty());
    }

    #[test]
    fn json_round_trip((n, k, r, m) in kdist_with_marked()) {
        let kd = KDistinctness::new(n, k, r).unwrap();
        let flow = kd.flow(&m).unwrap();
        let text = graph_json(kd.graph(), Some(&flow));
        let (lg, back) = parse_graph_json(&text).unwrap();
        prop_assert_eq!(&lg, kd.graph());
        prop_assert_eq!(back.unwrap(), flow);
    }

    #[test]
    fn edge_slots_invert(u in 0u32..200, v in 0u32..200) {
        prop_assume!(u != v);
        let (a, b) = slot_endpoints(edge_slot(u, v));
        prop_assert_eq!((a, b), (u.min(v), u.max(v)));
    }

    #[test]
    fn sqrt_helpers(num in 0i64..10_000, den in 1i64..10_000) {
        let x = q(num, den);
        prop_assert_eq!(exact_sqrt(&(x.clone() * x.clone())), Some(x.clone()));
        let l = x.clone();
        prop_assert!((stage_complexity(&l, &qi(1)).unwrap() - learngraph::rational::to_f64(&l)).abs() <= 1e-12 * (1.0 + learngraph::rational::to_f64(&l)));
    }
}

#[test]
fn distinctness_instance_matches_oracle_exhaustively() {
    for n in 2..=6usize {
        for code in 0..3u64.pow(n as u32) {
            let values: Vec<u32> = (0..n as u32).map(|i| (code / 3u64.pow(i) % 3) as u32).collect();
            for k in 2..=3 {
                let inst = ProblemInstance::distinctness(values.clone(), k);
                assert_eq!(inst.truth, evaluate(&Input::Values(values.clone()), &Problem::Distinctness { k }).unwrap());
            }
        }
    }
}
