//! Frozen values for the small worked examples.

use learngraph::analysis::{scaling_report, stage_complexity, total_complexity, RRule, ScalingSpec};
use learngraph::builders::{
    build_kclique, build_kdistinctness, build_subgraph, BuildOptions, Family, GraphInput, ProblemInstance, SubgraphPattern,
};
use learngraph::graph::{average_length, check_flow, validate_structure, LVertex};
use learngraph::rational::{q, qi};
use learngraph::symmetry::{
    estimate_transition_speciality, is_symmetric_stage, max_speciality, orbit, transition_speciality, ArcLabel, SymmetryGroup,
    DEFAULT_Z,
};

fn kdist5() -> learngraph::builders::Build {
    build_kdistinctness(5, 2, 4, &ProblemInstance::distinctness(vec![7, 1, 7, 2, 3], 2)).unwrap()
}

#[test]
fn distinctness_n5_specialities() {
    let b = kdist5();
    let g = SymmetryGroup::exhaustive(b.graph.universe);
    let t: Vec<_> = (0..3).map(|s| max_speciality(&b.graph, s, &g, &b.flow).unwrap()).collect();
    assert_eq!(t, vec![q(10, 3), qi(10), q(20, 3)]);
    let lens: Vec<_> = (0..3).map(|s| average_length(&b.graph, s, &b.flow).unwrap()).collect();
    assert_eq!(lens, vec![qi(2), qi(1), qi(1)]);
}

#[test]
fn distinctness_n5_orbits() {
    let b = kdist5();
    let g = SymmetryGroup::exhaustive(b.graph.universe);
    let lg = &b.graph;
    let (from, to) = lg.endpoints(1, &lg.stages[1].transitions[0]);
    let o = orbit(&ArcLabel { from: from.clone(), to: to.clone() }, &g).unwrap();
    assert_eq!(o.size(), 30);
    let (from, to) = lg.endpoints(0, &lg.stages[0].transitions[0]);
    assert_eq!(orbit(&ArcLabel { from: from.clone(), to: to.clone() }, &g).unwrap().size(), 10);
}

#[test]
fn distinctness_n5_total() {
    let b = kdist5();
    let g = SymmetryGroup::exhaustive(b.graph.universe);
    let rep = total_complexity(&[(&b.graph, &b.flow)], &g).unwrap();
    let expect = 2.0 * (10f64 / 3.0).sqrt() + 10f64.sqrt() + (20f64 / 3.0).sqrt();
    assert!((rep.total - expect).abs() < 1e-12);
    assert!(rep.stages.iter().all(|s| s.symmetric));
    assert!((rep.stages[1].complexity - stage_complexity(&qi(1), &qi(10)).unwrap()).abs() < 1e-15);
}

#[test]
fn sampled_stage2_estimate() {
    let b = kdist5();
    let g = SymmetryGroup::sampled(b.graph.universe, 100_000, 42);
    let id = b.graph.stages[1].transitions.iter().find(|t| b.flow.is_positive(t.id)).unwrap().id;
    let r = estimate_transition_speciality(&b.graph, 1, id, &g, &b.flow, DEFAULT_Z).unwrap();
    let est = learngraph::rational::to_f64(&r.speciality);
    assert!((8.0..=12.0).contains(&est), "{est}");
}

#[test]
fn distinctness_n8_estimate_within_20_percent() {
    let inst = ProblemInstance::distinctness(vec![0, 1, 2, 3, 0, 5, 6, 7], 2);
    let b = build_kdistinctness(8, 2, 4, &inst).unwrap();
    let id = b.graph.stages[1].transitions.iter().find(|t| b.flow.is_positive(t.id)).unwrap().id;
    let exact = transition_speciality(&b.graph, 1, id, &SymmetryGroup::exhaustive(b.graph.universe), &b.flow).unwrap();
    let g = SymmetryGroup::sampled(b.graph.universe, 100_000, 5);
    let est = estimate_transition_speciality(&b.graph, 1, id, &g, &b.flow, DEFAULT_Z).unwrap();
    let (e, x) = (learngraph::rational::to_f64(&est.speciality), learngraph::rational::to_f64(&exact.speciality));
    assert!((e - x).abs() <= 0.2 * x, "{e} vs {x}");
}

#[test]
fn clique_n6_report() {
    let p = SubgraphPattern::clique(3).unwrap();
    let inst = ProblemInstance::graph(GraphInput::from_edges(6, [(0, 4), (4, 5), (0, 5)]).unwrap(), &p);
    let b = build_kclique(6, 3, 4, &inst, &BuildOptions::default()).unwrap();
    let g = SymmetryGroup::exhaustive(b.graph.universe);
    let rep = total_complexity(&[(&b.graph, &b.flow)], &g).unwrap();
    assert_eq!(rep.stages.len(), 3);
    let sub = rep.subroutine.as_ref().unwrap();
    assert!(sub.symmetric && rep.stages.iter().all(|s| s.symmetric));
    // Closed form r^((k-1)/k) sqrt(n^k / r^(k-1)) at n=6, r=4, k=3.
    let closed = 4f64.powf(2.0 / 3.0) * (216f64 / 16.0).sqrt();
    assert!(sub.complexity / closed < 8.0 && closed / sub.complexity < 8.0, "{} vs {closed}", sub.complexity);
    for s in 0..3 {
        assert!(is_symmetric_stage(&b.graph, s, &g, std::slice::from_ref(&b.flow)).unwrap().symmetric);
    }
}

#[test]
fn p3_build_frozen_table() {
    let p = SubgraphPattern::path(3).unwrap();
    let inst = ProblemInstance::graph(GraphInput::from_edges(6, [(1, 2), (2, 3)]).unwrap(), &p);
    let b = build_subgraph(6, &p, 4, &q(1, 2), &inst, &BuildOptions::default()).unwrap();
    assert!(validate_structure(&b.graph).is_valid());
    assert!(check_flow(&b.graph, &b.flow).unwrap().is_valid());
    assert_eq!(b.graph.layers[0][0], LVertex::annotated([], []));
    let c = b.conditioning.clone().unwrap();
    assert_eq!((c.p.clone(), c.k_actual.clone(), c.warning), (q(13, 32), q(32, 13), true));
    let g = SymmetryGroup::exhaustive(b.graph.universe);
    let rep = total_complexity(&[(&b.graph, &b.flow)], &g).unwrap();
    let labels: Vec<&str> = rep.stages.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["1", "2", "3", "5.1"]);
    let t: Vec<_> = rep.stages.iter().map(|s| s.speciality.clone()).collect();
    assert_eq!(t, vec![qi(5), qi(20), qi(60), qi(30)]);
    let l: Vec<_> = rep.stages.iter().map(|s| s.length.clone()).collect();
    assert_eq!(l, vec![q(15, 26), q(15, 13), q(15, 13), qi(1)]);
    assert_eq!(rep.subroutine.as_ref().unwrap().speciality, qi(20));
}

#[test]
fn two_distinctness_scaling() {
    let spec = ScalingSpec {
        family: Family::Kdist,
        k: 2,
        pattern: None,
        rule: RRule::Power(q(2, 3)),
        s: q(1, 2),
        options: BuildOptions::default(),
    };
    let rep = scaling_report(&spec, &[6, 8, 10, 12]).unwrap();
    let rs: Vec<usize> = rep.points.iter().map(|p| p.r).collect();
    assert_eq!(rs, [4, 4, 5, 6]);
    let fitted: Vec<f64> = rep.fits.iter().map(|f| f.fitted).collect();
    for (got, want) in fitted.iter().zip([-0.0567, 0.9309, 1.3793]) {
        assert!((got - want).abs() < 5e-4, "{fitted:?}");
    }
    assert_eq!(rep.fits[2].nominal, Some(q(4, 3)));
    assert!((rep.fits[2].predicted - 1.4005).abs() < 5e-4);
}
