use std::f64::consts::PI;
use std::sync::Arc;

use eincausal::cover::{causal_relation, CausalRelation, CoverPoint};
use eincausal::domain::{validate_domain, CausalDomain};
use eincausal::duality::*;
use eincausal::enveloping::*;
use eincausal::field::{Region, ScalarField, Sheet, Site};
use eincausal::maximality::*;
use eincausal::sphere::{GridSpec, SphereGrid, UnitPoint};
use eincausal::Error;

const EPS: f64 = 1e-12;

fn circle(n: usize) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::circle(n).unwrap())
}

fn node_at(g: &SphereGrid, theta: f64) -> usize {
    g.nearest_node(&UnitPoint::from_angle(theta)).unwrap().0
}

fn half_circle(g: &Arc<SphereGrid>) -> Arc<Region> {
    Arc::new(Region::new(g.clone(), (0..g.len()).filter(|&x| g.distance(x, 0) < PI / 2.0 - 1e-9)).unwrap())
}

fn set(g: &Arc<SphereGrid>, sites: &[(usize, f64)]) -> AchronalSet {
    AchronalSet::new(g.clone(), sites.iter().map(|&(n, v)| Site::new(n, v)).collect()).unwrap()
}

/// `±scale·(π/2 − |θ|)` over the half circle.
fn strip(g: &Arc<SphereGrid>, scale: f64) -> CausalDomain {
    let plus = ScalarField::from_fn(half_circle(g), |x| scale * (PI / 2.0 - g.distance(x, 0))).unwrap();
    CausalDomain::new(plus.negated(), plus).unwrap()
}

#[test]
fn achronality_checks() {
    let g = circle(64);
    let anti = set(&g, &[(0, 0.0), (32, 0.0)]);
    assert!(check_achronal(&anti).pass && check_acausal(&anti).pass);

    let fiber = set(&g, &[(5, 0.0), (5, 0.1)]);
    assert!(!check_achronal(&fiber).pass && !check_acausal(&fiber).pass);

    let null = set(&g, &[(0, 0.0), (9, g.distance(0, 9))]);
    assert!(check_achronal(&null).pass);
    assert_eq!(check_acausal(&null).pairs, vec![(0, 9)]);

    assert!(AchronalSet::new(g.clone(), vec![Site::new(3, 0.2), Site::new(3, 0.2)]).is_err());
    assert!(AchronalSet::new(g, vec![Site::new(64, 0.0)]).is_err());
}

#[test]
fn duals_by_formula() {
    let g = Arc::new(SphereGrid::icosphere(2).unwrap());
    let Dual::Domain(d) = dual_by_formula(&set(&g, &[(7, 0.0)])).unwrap() else { panic!() };
    for &x in d.region().interior() {
        let (lo, hi) = d.interval(x).unwrap();
        assert!((hi - g.distance(x, 7)).abs() < EPS && (lo + g.distance(x, 7)).abs() < EPS);
    }

    let flat: Vec<(usize, f64)> = (0..g.len()).map(|x| (x, 0.0)).collect();
    assert_eq!(dual_by_formula(&set(&g, &flat)).unwrap(), Dual::Empty);

    let c = circle(64);
    let Dual::Domain(d) = dual_by_formula(&set(&c, &[(0, 0.0), (32, 0.0)])).unwrap() else { panic!() };
    for &x in d.region().interior() {
        let r = c.distance(x, 0);
        assert!((d.interval(x).unwrap().1 - r.min(PI - r)).abs() < EPS);
    }
    assert!(validate_domain(&d).pass());

    assert!(dual_by_formula(&set(&c, &[(0, 0.0), (0, 1.0)])).is_err());
}

#[test]
fn duals_by_definition() {
    let g = circle(64);
    let step = g.resolution_h() / 4.0;
    let single = set(&g, &[(0, 0.0)]);
    let sampled = dual_by_definition(&single, step).unwrap();
    for x in 0..g.len() {
        for k in 0..sampled.steps {
            let t = sampled.time(k);
            let want = t.abs() < g.distance(x, 0) - 1e-9;
            let edge = (t.abs() - g.distance(x, 0)).abs() <= 1e-9;
            assert!(edge || sampled.contains(x, k) == want, "node {x} t {t}");
        }
    }

    let flat: Vec<(usize, f64)> = (0..g.len()).map(|x| (x, 0.0)).collect();
    assert_eq!(dual_by_definition(&set(&g, &flat), step).unwrap().count(), 0);

    let anti = set(&g, &[(0, 0.0), (32, 0.0)]);
    let sampled = dual_by_definition(&anti, step).unwrap();
    let Dual::Domain(d) = dual_by_formula(&anti).unwrap() else { panic!() };
    let cell = g.resolution_h() + step;
    for x in 0..g.len() {
        for k in 0..sampled.steps {
            let t = sampled.time(k);
            let by_formula = d.contains_node(x, t);
            if sampled.contains(x, k) != by_formula {
                let (lo, hi) = d.interval(x).unwrap_or((0.0, 0.0));
                assert!((t - lo).abs() <= cell || (t - hi).abs() <= cell, "node {x} t {t}");
            }
        }
    }
}

#[test]
fn klein_dual_examples() {
    let g = circle(64);
    let anti = set(&g, &[(0, 0.0), (32, 0.0)]);
    let Dual::Domain(d) = dual_by_formula(&anti).unwrap() else { panic!() };
    for &x in d.region().interior() {
        let (lo, hi) = d.interval(x).unwrap();
        for u in [0.1, 0.5, 0.9] {
            let p = CoverPoint::new(*g.node(x), lo + u * (hi - lo));
            assert!(klein_dual_test(&anti, &p));
        }
    }
    for p in anti.points() {
        assert!(!klein_dual_test(&anti, &p));
    }
    let above = CoverPoint::new(*g.node(2), 1.0);
    assert!(causal_relation(&anti.points().next().unwrap(), &above).unwrap().is_chronological());
    assert!(!klein_dual_test(&anti, &above));
}

#[test]
fn eikonal_envelope_examples() {
    let g = circle(128);
    let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
    let (gm, gp) = eikonal_envelopes(&chart).unwrap();
    assert_eq!((&gm, &gp), (chart.f_minus(), chart.f_plus()));

    let (_, gp) = eikonal_envelopes(&strip(&g, 0.3)).unwrap();
    for &x in gp.region().interior() {
        assert!((gp.value_at(x).unwrap() - (PI / 2.0 - g.distance(x, 0))).abs() < EPS);
    }

    let de_sitter = CausalDomain::band(Arc::new(Region::full(g.clone())), 0.0, PI).unwrap();
    let (gm, gp) = eikonal_envelopes(&de_sitter).unwrap();
    assert_eq!((gm.is_finite(), gp.is_finite()), (false, false));

    let thick = CausalDomain::band(Arc::new(Region::full(g)), 0.0, PI + 0.2).unwrap();
    assert!(matches!(eikonal_envelopes(&thick), Err(Error::NotApplicable(_))));
}

#[test]
fn maximality_examples() {
    let g = circle(128);
    let h = g.resolution_h();
    let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
    assert_eq!(is_maximal(&chart, h).unwrap(), Verdict::Maximal);
    assert_eq!(maximalize(&chart).unwrap(), Maximalized::Domain(chart));

    let de_sitter = CausalDomain::band(Arc::new(Region::full(g.clone())), 0.0, PI).unwrap();
    assert_eq!(is_maximal(&de_sitter, h).unwrap().tag(), "full_space");
    assert_eq!(maximalize(&de_sitter).unwrap(), Maximalized::FullSpace);

    let thin = strip(&g, 0.3);
    let Verdict::Extendable { g_plus, deviation, .. } = is_maximal(&thin, h).unwrap() else { panic!() };
    assert!((deviation - 0.7 * PI / 2.0).abs() < 0.05);
    assert!((g_plus.value_at(0).unwrap() - PI / 2.0).abs() < EPS);

    let sites = [(node_at(&g, PI / 2.0), 0.0), (node_at(&g, -PI / 2.0), 0.0)];
    let Dual::Domain(dual) = dual_by_formula(&set(&g, &sites)).unwrap() else { panic!() };
    let Maximalized::Domain(m) = maximalize(&thin).unwrap() else { panic!() };
    for &x in m.region().interior() {
        let (a, b) = (m.interval(x).unwrap(), dual.interval(x).unwrap());
        assert!((a.0 - b.0).abs() < EPS && (a.1 - b.1).abs() < EPS);
    }
    assert!(is_contained(&thin, &m, 1e-12).unwrap());
}

#[test]
fn chart_certificates() {
    let g = Arc::new(SphereGrid::icosphere(3).unwrap());
    let h = g.resolution_h();
    let x0 = 0;
    let chart = CausalDomain::minkowski_chart(g.clone(), x0, 0.0).unwrap();
    let antipode = g.antipode(x0).unwrap();
    for &x in chart.region().interior().iter().step_by(7) {
        if x == antipode {
            continue;
        }
        let c = geodesic_certificate(chart.f_plus(), x, Sheet::Upper).unwrap();
        assert!(c.pass && c.residual <= 2.0 * h, "node {x}: {c:?}");
        assert_eq!((c.site, *c.path.first().unwrap(), *c.path.last().unwrap()), (x0, x, x0));
    }
    let next = g.neighbors(x0)[0].0;
    let c = geodesic_certificate(chart.f_plus(), next, Sheet::Upper).unwrap();
    assert!(c.path.len() <= 2 && c.pass);
    for sheet in [Sheet::Upper, Sheet::Lower] {
        let field = if sheet == Sheet::Upper { chart.f_plus() } else { chart.f_minus() };
        let c = geodesic_certificate(field, antipode, sheet).unwrap();
        assert!(c.pass && c.site == x0 && *c.path.last().unwrap() == x0, "{c:?}");
    }
}

#[test]
fn non_eikonal_field_fails_certification() {
    let g = circle(128);
    let h = g.resolution_h();
    let region = half_circle(&g);
    let right = node_at(&g, PI / 2.0);
    let trace: Vec<f64> = region.boundary().iter().map(|&b| if b == right { 0.4 } else { 0.0 }).collect();
    let flat = ScalarField::finite(region.clone(), vec![0.5; region.interior().len()], trace).unwrap();
    let worst = region
        .interior()
        .iter()
        .map(|&x| geodesic_certificate(&flat, x, Sheet::Upper).unwrap().residual)
        .fold(0.0, f64::max);
    assert!(worst > 2.0 * h);
}

#[test]
fn locality_examples() {
    let g = circle(256);
    let h = g.resolution_h();
    let cap = Arc::new(Region::new(g.clone(), (0..g.len()).filter(|&x| g.distance(x, 0) < 2.0)).unwrap());
    let cone = ScalarField::from_fn(cap.clone(), |x| 2.0 - g.distance(x, 0)).unwrap();
    let report = is_locally_eikonal(&cone, 8.0 * h, Sheet::Upper).unwrap();
    assert!(report.pass && report.balls > 0, "{report:?}");

    let c = node_at(&g, 0.8);
    let dented = ScalarField::from_fn(cap.clone(), |x| {
        let v = 2.0 - g.distance(x, 0);
        v.min(v - 3.0 * h + 2.0 * g.distance(x, c))
    })
    .unwrap();
    let report = is_locally_eikonal(&dented, 8.0 * h, Sheet::Upper).unwrap();
    assert!(!report.pass);
    // the worst ball reaches the dent, which spans 1.5h around c
    assert!(g.distance(report.worst_center.unwrap(), c) <= 9.5 * h + 1e-9);

    let flat = ScalarField::from_fn(cap, |_| 0.0).unwrap();
    let report = is_locally_eikonal(&flat, 8.0 * h, Sheet::Upper).unwrap();
    assert!(!report.pass && report.worst_center.is_some());

    assert!(is_locally_eikonal(&cone, h, Sheet::Upper).is_err());
}

#[test]
fn base_distances() {
    let minus = make_base(&BaseKind::SphereMinusNode { grid: GridSpec::Circle { n: 8 }, node: 4 }).unwrap();
    assert_eq!(minus.len(), 7);
    // old nodes 3 (3π/4) and 5 (−3π/4) become 3 and 4
    assert!((base_distance(&minus, 3, 4) - 3.0 * PI / 2.0).abs() < EPS);
    assert_eq!(base_distance(&minus, 2, 2), 0.0);
    assert!((0..7).all(|b| minus.image(b).angle() != UnitPoint::from_angle(PI).angle()));

    let full = make_base(&BaseKind::FullSphere { grid: GridSpec::Icosphere { subdivisions: 3 } }).unwrap();
    let g = full.grid();
    // edge paths overshoot by 6.6% on average over all pairs, 23% at worst
    let (mut excess, mut pairs) = (0.0, 0);
    for a in (0..g.len()).step_by(37) {
        let d = full.distances_from(a);
        for b in (0..g.len()).step_by(53).filter(|&b| b != a) {
            let exact = g.distance(a, b);
            assert!(d[b] >= exact - EPS && d[b] <= exact * 1.25, "{a} {b}: {} vs {exact}", d[b]);
            excess += d[b] / exact - 1.0;
            pairs += 1;
        }
    }
    assert!(excess / pairs as f64 <= 0.1);
    let ico2 = make_base(&BaseKind::FullSphere { grid: GridSpec::Icosphere { subdivisions: 2 } }).unwrap();
    let ico = SphereGrid::icosphere(2).unwrap();
    assert_eq!(ico2.len(), ico.len());
    assert!((0..ico.len()).all(|i| ico2.image(i).dot(ico.node(i)) > 1.0 - 1e-15));
}

#[test]
fn helix_relations() {
    let h = PI / 32.0;
    let helix = make_base(&BaseKind::Helix { h, turns: 4 }).unwrap();
    assert_eq!(helix.len(), 256);
    let p = EPoint::new(helix_node(h, 4, 0.0).unwrap(), 0.0);
    let far = EPoint::new(helix_node(h, 4, 2.0 * PI).unwrap(), 1.0);
    let near = EPoint::new(helix_node(h, 4, 0.5).unwrap(), 1.0);
    assert_eq!(e_causal_relation(&helix, &p, &far), CausalRelation::Unrelated);
    assert!(causal_relation(&develop(&helix, &p), &develop(&helix, &far)).unwrap().is_chronological());
    assert_eq!(e_causal_relation(&helix, &p, &near), CausalRelation::ChronologicalFuture);
    assert_eq!(e_causal_relation(&helix, &p, &p), CausalRelation::Equal);

    let d = develop(&helix, &far);
    assert!(eincausal::sphere::geodesic_distance(&d.x, &UnitPoint::from_angle(0.0)).unwrap() < 1e-9);
    assert_eq!(d.t, 1.0);
    let d2 = develop(&helix, &EPoint::new(far.base_node, -3.0));
    assert_eq!((d2.x, d2.t), (d.x, -3.0));
}

#[test]
fn helix_strip_uses_line_distance() {
    let h = PI / 32.0;
    let helix = make_base(&BaseKind::Helix { h, turns: 4 }).unwrap();
    let interior: Vec<usize> = (0..helix.len()).filter(|&k| helix_coordinate(h, 4, k).abs() < 1.0).collect();
    let dom = thin_strip(&helix, interior, 0.0, 0.3).unwrap();
    let EOutcome::Domain(m) = maximalize_in_e(&helix, &dom).unwrap().outcome else { panic!() };
    let edge = dom.region().boundary().iter().map(|&b| helix_coordinate(h, 4, b).abs()).fold(0.0, f64::max);
    for &k in m.region().interior() {
        let x = helix_coordinate(h, 4, k);
        assert!((m.interval(k).unwrap().1 - (edge - x.abs())).abs() < 1e-9, "node {k}");
    }
}

#[test]
fn full_sphere_base_matches_the_cover() {
    let full = make_base(&BaseKind::FullSphere { grid: GridSpec::Circle { n: 64 } }).unwrap();
    let g = full.grid().clone();
    let interior: Vec<usize> = (0..g.len()).filter(|&x| g.distance(x, 0) < 1.0).collect();
    let dom = thin_strip(&full, interior, 0.0, 0.5).unwrap();
    let EOutcome::Domain(e) = maximalize_in_e(&full, &dom).unwrap().outcome else { panic!() };
    let Maximalized::Domain(c) = maximalize(&dom).unwrap() else { panic!() };
    for &x in e.region().interior() {
        let (a, b) = (e.interval(x).unwrap(), c.interval(x).unwrap());
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }
}

#[test]
fn minkowski_lift_detours_the_gap() {
    let minus = make_base(&BaseKind::SphereMinusNode { grid: GridSpec::Circle { n: 64 }, node: 32 }).unwrap();
    let g = minus.grid().clone();
    // chart around node 31, next to the gap: node 32 sits just across it
    let center = 31;
    let dom = thin_strip(&minus, (0..g.len()).filter(|&x| x != center).collect(), 0.0, 0.9).unwrap();
    let lifted = maximalize_in_e(&minus, &dom).unwrap();
    let EOutcome::Domain(e) = lifted.outcome else { panic!() };
    let Maximalized::Domain(c) = maximalize(&dom).unwrap() else { panic!() };
    assert!(is_contained(&c, &e, 1e-12).unwrap());
    let across = e.interval(32).unwrap().1;
    assert!((across - base_distance(&minus, center, 32)).abs() < EPS);
    assert!((c.interval(32).unwrap().1 - g.distance(center, 32)).abs() < EPS);
    assert!(across > PI);
    assert!(!lifted.warnings.is_empty());
}
