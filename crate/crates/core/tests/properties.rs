use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use eincausal::cover::*;
use eincausal::domain::*;
use eincausal::duality::*;
use eincausal::enveloping::*;
use eincausal::field::*;
use eincausal::generate::*;
use eincausal::io::DomainJson;
use eincausal::maximality::*;
use eincausal::rng::task_rng;
use eincausal::sphere::{geodesic_distance, GridSpec, SphereGrid, UnitPoint};

fn circle() -> &'static Arc<SphereGrid> {
    static G: OnceLock<Arc<SphereGrid>> = OnceLock::new();
    G.get_or_init(|| Arc::new(SphereGrid::circle(128).unwrap()))
}

fn ico() -> &'static Arc<SphereGrid> {
    static G: OnceLock<Arc<SphereGrid>> = OnceLock::new();
    G.get_or_init(|| Arc::new(SphereGrid::icosphere(2).unwrap()))
}

fn grid(which: bool) -> &'static Arc<SphereGrid> {
    if which {
        ico()
    } else {
        circle()
    }
}

fn unit(dim: usize) -> impl Strategy<Value = UnitPoint> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("away from zero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-3)
        .prop_map(|v| UnitPoint::new(&v).unwrap())
}

fn cover_point(dim: usize) -> impl Strategy<Value = CoverPoint> {
    (unit(dim), -7.0f64..7.0).prop_map(|(x, t)| CoverPoint::new(x, t))
}

fn close(a: &CoverPoint, b: &CoverPoint) -> bool {
    geodesic_distance(&a.x, &b.x).unwrap() < 1e-9 && (a.t - b.t).abs() < 1e-9
}

fn bits(f: &ScalarField) -> Vec<u64> {
    let v = f.interior_values().unwrap_or(&[]).iter().chain(f.trace().unwrap_or(&[]));
    v.map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relation_mirrors(d in 0.0f64..PI, dt in -7.0f64..7.0) {
        prop_assert_eq!(CausalRelation::classify(d, -dt, 1e-9), CausalRelation::classify(d, dt, 1e-9).mirror());
    }

    #[test]
    fn sigma_and_delta_laws(p in cover_point(3), q in cover_point(3), k in -3i64..3) {
        prop_assert!(close(&sigma(&sigma(&p)), &delta(&p, 1)));
        prop_assert!(close(&sigma_inverse(&sigma(&p)), &p));
        prop_assert_eq!(causal_relation(&p, &sigma(&p)).unwrap(), CausalRelation::LightlikeFuture);
        let r = causal_relation(&p, &q).unwrap();
        prop_assert_eq!(causal_relation(&delta(&p, k), &delta(&q, k)).unwrap(), r);
        prop_assert_eq!(causal_relation(&sigma(&p), &sigma(&q)).unwrap(), r);
        prop_assert_eq!(causal_relation(&q, &p).unwrap(), r.mirror());
    }

    #[test]
    fn klein_sign_law(p in cover_point(2), q in cover_point(2)) {
        let d = geodesic_distance(&p.x, &q.x).unwrap();
        let dt = q.t - p.t;
        let qf = q_form(&to_klein(&p), &to_klein(&q));
        prop_assert!((qf - (d.cos() - dt.cos())).abs() < 1e-12);
        let rel = CausalRelation::classify(d, dt, 1e-6);
        if dt.abs() <= PI && rel == CausalRelation::Unrelated {
            prop_assert!(qf < 0.0);
        }
        if dt.abs() <= PI && rel.is_chronological() {
            prop_assert!(qf > 0.0);
        }
    }

    #[test]
    fn envelopes_are_lipschitz_and_dominated(which: bool, seed: u64, count in 1usize..6) {
        let g = grid(which);
        let mut rng = task_rng(seed, 0);
        let region = random_cap(g, &mut rng).unwrap();
        let phi = random_lipschitz(g, &mut rng);
        let sites: Vec<Site> = region.boundary().iter().take(count).map(|&b| Site::new(b, phi[b])).collect();
        let lower = lower_envelope(&sites, &region, Metric::Exact).unwrap();
        let upper = upper_envelope(&sites, &region, Metric::Exact).unwrap();
        for f in [&lower, &upper] {
            prop_assert!(check_lipschitz(f, LipschitzMode::AllPairs, 1e-9).unwrap().pass);
        }
        for &x in region.interior() {
            let (lo, hi) = (upper.value_at(x).unwrap(), lower.value_at(x).unwrap());
            prop_assert!(lo <= hi + 1e-12);
            for s in &sites {
                prop_assert!(hi <= s.value + g.distance(x, s.node) + 1e-12);
                prop_assert!(lo >= s.value - g.distance(x, s.node) - 1e-12);
            }
        }
        let graph = lower_envelope(&sites, &region, Metric::Graph).unwrap();
        for &x in region.interior() {
            prop_assert!(graph.value_at(x).unwrap() >= lower.value_at(x).unwrap() - 1e-12);
        }
    }

    #[test]
    fn region_closure(which: bool, seed: u64) {
        let g = grid(which);
        let region = random_cap(g, &mut task_rng(seed, 1)).unwrap();
        for &b in region.boundary() {
            prop_assert!(!region.is_interior(b));
            prop_assert!(g.neighbors(b).iter().any(|&(y, _)| region.is_interior(y)));
        }
        for &x in region.interior() {
            prop_assert!(g.neighbors(x).iter().all(|&(y, _)| region.in_closure(y)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn midpoint_surface_is_cauchy(which: bool, seed: u64) {
        let dom = random_domain(grid(which), &mut task_rng(seed, 2)).unwrap();
        let s = SurfaceGraph::midpoint(&dom).unwrap();
        let diag = validate_cauchy_surface(&dom, &s, 40, seed);
        prop_assert!(diag.pass(), "{:?}", diag);
    }

    #[test]
    fn shadows_grow_with_distance(seed: u64, lift in 0.05f64..1.0, extra in 0.0f64..1.0) {
        let g = circle();
        let mut rng = task_rng(seed, 3);
        let s = random_surface(g, &mut rng).unwrap();
        let x = s.region().interior()[(seed % s.region().interior().len() as u64) as usize];
        let base = s.height(x).unwrap();
        let near = shadow(&CoverPoint::new(*g.node(x), base + lift), &s).unwrap();
        let far = shadow(&CoverPoint::new(*g.node(x), base + lift + extra), &s).unwrap();
        prop_assert!(near.iter().all(|n| far.contains(n)));
        let below = shadow(&CoverPoint::new(*g.node(x), base - lift), &s).unwrap();
        let deeper = shadow(&CoverPoint::new(*g.node(x), base - lift - extra), &s).unwrap();
        prop_assert!(below.iter().all(|n| deeper.contains(n)));
    }

    #[test]
    fn development_commutes_with_time_reversal(which: bool, seed: u64) {
        let s = random_surface(grid(which), &mut task_rng(seed, 4)).unwrap();
        let flipped = SurfaceGraph::new(s.h().negated()).unwrap();
        let a = cauchy_development_of_graph(&s).unwrap().domain;
        let b = cauchy_development_of_graph(&flipped).unwrap().domain;
        prop_assert_eq!(a.time_reversed(), b);
    }

    #[test]
    fn duals_of_acausal_sets(which: bool, seed: u64, count in 1usize..6) {
        let g = grid(which);
        let set = random_achronal_set(g, count, &mut task_rng(seed, 5)).unwrap();
        prop_assume!(check_acausal(&set).pass);
        let pts: Vec<CoverPoint> = set.points().collect();
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                prop_assert!(q_form(&to_klein(a), &to_klein(b)) < 0.0);
            }
        }
        if let Dual::Domain(d) = dual_by_formula(&set).unwrap() {
            for &x in d.region().interior() {
                let (lo, hi) = d.interval(x).unwrap();
                let p = CoverPoint::new(*g.node(x), 0.5 * (lo + hi));
                prop_assert!(klein_dual_test(&set, &p));
            }
        }
    }

    #[test]
    fn maximalize_is_idempotent(which: bool, seed: u64) {
        let dom = random_domain(grid(which), &mut task_rng(seed, 6)).unwrap();
        let Maximalized::Domain(once) = maximalize(&dom).unwrap() else {
            return Err(TestCaseError::fail("random cap domain maximalized to full space"));
        };
        let Maximalized::Domain(twice) = maximalize(&once).unwrap() else {
            return Err(TestCaseError::fail("second pass gave full space"));
        };
        prop_assert_eq!(bits(once.f_plus()), bits(twice.f_plus()));
        prop_assert_eq!(bits(once.f_minus()), bits(twice.f_minus()));
        prop_assert!(is_contained(&dom, &once, 1e-12).unwrap());
        prop_assert_eq!(is_maximal(&once, default_tol(&once)).unwrap(), Verdict::Maximal);
    }

    #[test]
    fn certificates_hold_on_maximal_sheets(which: bool, seed: u64) {
        let g = grid(which);
        let dom = random_domain(g, &mut task_rng(seed, 7)).unwrap();
        let m = maximalize(&dom).unwrap();
        let m = m.domain().unwrap();
        let h = g.resolution_h();
        for &x in m.region().interior().iter().step_by(5) {
            for (field, sheet) in [(m.f_plus(), Sheet::Upper), (m.f_minus(), Sheet::Lower)] {
                let c = geodesic_certificate(field, x, sheet).unwrap();
                prop_assert!(c.pass && c.residual <= 2.0 * h, "{:?}", c);
                prop_assert!(m.region().is_boundary(c.site));
            }
        }
    }

    #[test]
    fn develop_preserves_causality(seed: u64, turns in 1usize..4) {
        let h = PI / 16.0;
        let helix = make_base(&BaseKind::Helix { h, turns }).unwrap();
        let mut rng = task_rng(seed, 8);
        use rand::Rng;
        for _ in 0..20 {
            let p = EPoint::new(rng.random_range(0..helix.len()), rng.random_range(-3.0..3.0));
            let q = EPoint::new(rng.random_range(0..helix.len()), rng.random_range(-3.0..3.0));
            let rel = e_causal_relation(&helix, &p, &q);
            let dev = causal_relation(&develop(&helix, &p), &develop(&helix, &q)).unwrap();
            if rel.is_causal_future() {
                prop_assert!(dev.is_causal_future() || dev == CausalRelation::Equal, "{:?} vs {:?}", rel, dev);
            }
            let later = EPoint::new(p.base_node, p.t + rng.random_range(0.01..2.0));
            prop_assert_eq!(e_causal_relation(&helix, &p, &later), CausalRelation::ChronologicalFuture);
        }
    }

    #[test]
    fn maximalization_in_e_is_idempotent_and_monotone(seed: u64, scale in 0.1f64..0.95, width in 0.3f64..2.0) {
        let h = PI / 16.0;
        let helix = make_base(&BaseKind::Helix { h, turns: 2 }).unwrap();
        let center = (seed % helix.len() as u64) as usize;
        let x0 = helix_coordinate(h, 2, center);
        let interior: Vec<usize> =
            (0..helix.len()).filter(|&k| (helix_coordinate(h, 2, k) - x0).abs() < width).collect();
        prop_assume!(interior.len() < helix.len());
        let dom = thin_strip(&helix, interior, 0.1, scale).unwrap();
        let EOutcome::Domain(once) = maximalize_in_e(&helix, &dom).unwrap().outcome else {
            return Err(TestCaseError::fail("strip rejected"));
        };
        let EOutcome::Domain(twice) = maximalize_in_e(&helix, &once).unwrap().outcome else {
            return Err(TestCaseError::fail("output rejected"));
        };
        prop_assert_eq!(&once, &twice);
        for &x in dom.region().interior() {
            let (a, b) = (dom.interval(x).unwrap(), once.interval(x).unwrap());
            prop_assert!(b.0 <= a.0 + 1e-12 && a.1 <= b.1 + 1e-12);
        }
    }

    #[test]
    fn domain_json_round_trip(which: bool, seed: u64) {
        let dom = random_domain(grid(which), &mut task_rng(seed, 9)).unwrap();
        let text = serde_json::to_string(&DomainJson::from_domain(&dom)).unwrap();
        let back = serde_json::from_str::<DomainJson>(&text).unwrap().to_domain(None).unwrap();
        prop_assert_eq!(bits(back.f_plus()), bits(dom.f_plus()));
        prop_assert_eq!(bits(back.f_minus()), bits(dom.f_minus()));
        prop_assert_eq!(back, dom);
    }

    #[test]
    fn full_sphere_base_agrees_with_grid_paths(seed: u64) {
        let base = make_base(&BaseKind::FullSphere { grid: GridSpec::Icosphere { subdivisions: 1 } }).unwrap();
        let a = (seed % base.len() as u64) as usize;
        let d = base.distances_from(a);
        let graph = base.grid().graph_distance(&[(a, 0.0)]).unwrap();
        prop_assert_eq!(d, graph);
    }
}
