//! Eikonal envelopes of a domain's boundary trace, the maximality test, the
//! maximalization operator, and eikonality certificates.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{detect_conjugate_pairs, CausalDomain};
use crate::error::{invalid, Error, Result};
use crate::field::{exact_envelope_at, lower_envelope, upper_envelope, Metric, ScalarField, Sheet, Site};
use crate::sphere::{trace_geodesic, UnitPoint};

/// `(g⁻, g⁺)`: envelopes of the common boundary trace (the f⁺ trace).
/// Without boundary both are infinite.
pub fn eikonal_envelopes(dom: &CausalDomain) -> Result<(ScalarField, ScalarField)> {
    if has_conjugates(dom)? {
        return Err(Error::NotApplicable("domain contains conjugate points".into()));
    }
    envelopes_unchecked(dom)
}

fn has_conjugates(dom: &CausalDomain) -> Result<bool> {
    if !dom.grid().has_antipodes() {
        return Ok(false);
    }
    Ok(!detect_conjugate_pairs(dom)?.is_empty())
}

fn envelopes_unchecked(dom: &CausalDomain) -> Result<(ScalarField, ScalarField)> {
    let region = dom.region();
    if region.boundary().is_empty() {
        return Ok((ScalarField::minus_infinity(region.clone()), ScalarField::plus_infinity(region.clone())));
    }
    if !dom.is_finite() {
        return Err(Error::NotApplicable("infinite sheet over a region with boundary".into()));
    }
    let sites = dom.f_plus().trace_sites();
    let g_plus = lower_envelope(&sites, region, Metric::Exact)?.with_trace(dom.f_plus().trace().unwrap().to_vec())?;
    let g_minus =
        upper_envelope(&sites, region, Metric::Exact)?.with_trace(dom.f_minus().trace().unwrap().to_vec())?;
    Ok((g_minus, g_plus))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Maximal,
    Extendable {
        g_minus: ScalarField,
        g_plus: ScalarField,
        /// Largest `|f± − g±|` over the interior.
        deviation: f64,
    },
    FullSpace,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Maximal => "maximal",
            Verdict::Extendable { .. } => "extendable",
            Verdict::FullSpace => "full_space",
        }
    }
}

fn max_deviation(f: &ScalarField, g: &ScalarField) -> f64 {
    match (f.interior_values(), g.interior_values()) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        _ if f.values() == g.values() => 0.0,
        _ => f64::INFINITY,
    }
}

/// Tolerance used by [`is_maximal`] when none is given.
pub fn default_tol(dom: &CausalDomain) -> f64 {
    dom.grid().resolution_h()
}

/// The whole cover is maximal; other conjugate or boundaryless domains
/// extend to it; otherwise compares f± with g± within `tol`.
pub fn is_maximal(dom: &CausalDomain, tol: f64) -> Result<Verdict> {
    if dom.is_full_space() {
        return Ok(Verdict::Maximal);
    }
    if has_conjugates(dom)? || dom.region().boundary().is_empty() {
        return Ok(Verdict::FullSpace);
    }
    let (g_minus, g_plus) = envelopes_unchecked(dom)?;
    let deviation = max_deviation(dom.f_minus(), &g_minus).max(max_deviation(dom.f_plus(), &g_plus));
    Ok(if deviation <= tol {
        Verdict::Maximal
    } else {
        Verdict::Extendable { g_minus, g_plus, deviation }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Maximalized {
    Domain(CausalDomain),
    FullSpace,
}

impl Maximalized {
    pub fn domain(&self) -> Option<&CausalDomain> {
        match self {
            Maximalized::Domain(d) => Some(d),
            Maximalized::FullSpace => None,
        }
    }
}

/// Replaces f± by g±, keeping region and traces. Applying it twice gives
/// the same bits, since g± only depend on the trace.
pub fn maximalize(dom: &CausalDomain) -> Result<Maximalized> {
    if has_conjugates(dom)? || dom.region().boundary().is_empty() {
        return Ok(Maximalized::FullSpace);
    }
    let (g_minus, g_plus) = envelopes_unchecked(dom)?;
    Ok(Maximalized::Domain(
        CausalDomain::new(g_minus, g_plus)?.with_coincidence_tol(dom.coincidence_tol()),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub node: usize,
    /// Boundary node the lightlike geodesic runs to.
    pub site: usize,
    /// Nearest nodes of the geodesic samples, starting at `node`.
    pub path: Vec<usize>,
    pub residual: f64,
    pub pass: bool,
}

/// Traces the geodesic from `x` to the boundary site realizing the envelope
/// at `x` and measures how far the field is from decreasing (upper sheet)
/// or increasing (lower sheet) at unit rate along it.
pub fn geodesic_certificate(field: &ScalarField, x: usize, sheet: Sheet) -> Result<Certificate> {
    let region = field.region();
    let grid = region.grid();
    if !field.is_finite() {
        return Err(Error::NotApplicable("certificates need a finite field".into()));
    }
    let fx = field
        .value_at(x)
        .ok_or_else(|| invalid(format!("node {x} is not in the closure of the region")))?;
    let h = grid.resolution_h();
    let sign = sheet.sign();
    let mut ranked: Vec<(f64, Site)> = field
        .trace_sites()
        .into_iter()
        .map(|s| (s.value + sign * grid.distance(x, s.node), s))
        .collect();
    if ranked.is_empty() {
        return Err(Error::NotApplicable("region has no boundary".into()));
    }
    ranked.sort_by(|a, b| (sign * a.0).total_cmp(&(sign * b.0)).then(a.1.node.cmp(&b.1.node)));
    let closure = region.closure();
    // Samples a geodesic of length `d` from `x` and measures the residual.
    let walk = |d: f64, point: &dyn Fn(f64) -> Result<UnitPoint>| -> Result<(Vec<usize>, f64)> {
        let k_max = (d / h).ceil() as usize;
        let mut path = Vec::with_capacity(k_max + 1);
        let mut residual = 0.0f64;
        for k in 0..=k_max {
            let s = if k_max == 0 { 0.0 } else { d * k as f64 / k_max as f64 };
            let (n, _) = grid.nearest_among(&point(s)?, closure.iter().copied()).expect("nonempty closure");
            residual = residual.max((field.value_at(n).unwrap() - (fx - sign * s)).abs());
            if path.last() != Some(&n) {
                path.push(n);
            }
        }
        Ok((path, residual))
    };
    let mut last_err = None;
    for (_, site) in ranked {
        let d = grid.distance(x, site.node);
        let a = grid.node(x);
        let b = grid.node(site.node);
        let found = match walk(d, &|s| trace_geodesic(a, b, s)) {
            // Antipodal pair: every great circle through x reaches the site,
            // so try the one toward each neighbor and keep the best.
            Err(Error::AmbiguousGeodesic { .. }) => grid
                .neighbors(x)
                .iter()
                .filter_map(|&(y, _)| {
                    let (ac, yc) = (a.coords(), grid.node(y).coords());
                    let ay: f64 = ac.iter().zip(yc).map(|(p, q)| p * q).sum();
                    let u: Vec<f64> = ac.iter().zip(yc).map(|(p, q)| q - ay * p).collect();
                    let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                    walk(d, &|s| {
                        if s >= d {
                            return Ok(*b);
                        }
                        let (sin, cos) = s.sin_cos();
                        let c: Vec<f64> = ac.iter().zip(&u).map(|(p, q)| cos * p + sin * q / norm).collect();
                        UnitPoint::new(&c)
                    })
                    .ok()
                })
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .ok_or(Error::AmbiguousGeodesic { s: 0.0 }),
            other => other,
        };
        match found {
            Ok((path, residual)) => {
                return Ok(Certificate { node: x, site: site.node, path, residual, pass: residual <= 2.0 * h });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one site was tried"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub pass: bool,
    pub balls: usize,
    /// Center and deviation of the worst ball.
    pub worst_center: Option<usize>,
    pub worst_deviation: f64,
}

/// Recomputes the field inside geodesic balls of radius `radius` around an
/// `h`-separated family of interior centers from each ball's discrete
/// boundary values; passes iff every deviation is at most `2·h`.
pub fn is_locally_eikonal(field: &ScalarField, radius: f64, sheet: Sheet) -> Result<LocalityReport> {
    let region = field.region();
    let grid = region.grid();
    let h = grid.resolution_h();
    if !field.is_finite() {
        return Err(Error::NotApplicable("locality needs a finite field".into()));
    }
    if !(radius >= 2.0 * h) {
        return Err(invalid(format!("ball radius {radius} is below 2·resolution_h = {}", 2.0 * h)));
    }
    let mut centers: Vec<usize> = Vec::new();
    for &x in region.interior() {
        if centers.iter().all(|&c| grid.distance(x, c) >= h) {
            centers.push(x);
        }
    }
    let deviations: Vec<f64> = centers
        .par_iter()
        .map(|&c| {
            let inside: Vec<usize> =
                region.interior().iter().copied().filter(|&x| grid.distance(x, c) < radius).collect();
            let mut in_ball = vec![false; grid.len()];
            for &x in &inside {
                in_ball[x] = true;
            }
            let mut rim: Vec<usize> = inside
                .iter()
                .flat_map(|&x| grid.neighbors(x).iter().map(|&(y, _)| y))
                .filter(|&y| !in_ball[y])
                .collect();
            rim.sort_unstable();
            rim.dedup();
            let sites: Vec<Site> = rim.iter().map(|&y| Site::new(y, field.value_at(y).unwrap())).collect();
            inside
                .iter()
                .map(|&x| (exact_envelope_at(grid, &sites, x, sheet) - field.value_at(x).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let worst = deviations
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, &d)| match acc {
            Some((_, best)) if best >= d => acc,
            _ => Some((i, d)),
        });
    let worst_deviation = worst.map_or(0.0, |w| w.1);
    Ok(LocalityReport {
        pass: worst_deviation <= 2.0 * h,
        balls: centers.len(),
        worst_center: worst.map(|w| centers[w.0]),
        worst_deviation,
    })
}

/// Pointwise containment of the intervals of `inner` in those of `outer`
/// over the interior of `inner`, up to `tol`. Regions must be nested.
pub fn is_contained(inner: &CausalDomain, outer: &CausalDomain, tol: f64) -> Result<bool> {
    if !Arc::ptr_eq(inner.grid(), outer.grid()) && inner.grid().spec() != outer.grid().spec() {
        return Err(invalid("domains live on different grids"));
    }
    if !inner.region().is_subset_of(outer.region()) {
        return Ok(false);
    }
    Ok(inner.region().interior().iter().all(|&x| {
        let (a, b) = inner.interval(x).unwrap();
        let (c, d) = outer.interval(x).unwrap();
        a >= c - tol && b <= d + tol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_domain;
    use crate::field::Region;
    use crate::sphere::SphereGrid;
    use std::f64::consts::PI;

    fn circle(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::circle(n).unwrap())
    }

    /// Nodes with angle in (−π/2, π/2) on a circle of `n` nodes (n divisible by 4).
    fn half_circle(g: &Arc<SphereGrid>) -> Arc<Region> {
        let n = g.len();
        Arc::new(Region::new(g.clone(), (0..n).filter(|&i| i < n / 4 || i > 3 * n / 4)).unwrap())
    }

    fn strip(g: &Arc<SphereGrid>, scale: f64) -> CausalDomain {
        let r = half_circle(g);
        let plus = ScalarField::from_fn(r.clone(), |i| scale * (PI / 2.0 - g.distance(i, 0))).unwrap();
        CausalDomain::new(plus.negated(), plus).unwrap()
    }

    #[test]
    fn chart_is_a_bitwise_fixed_point() {
        let g = circle(64);
        let chart = CausalDomain::minkowski_chart(g, 5, 0.25).unwrap();
        assert_eq!(is_maximal(&chart, 0.0).unwrap(), Verdict::Maximal);
        assert_eq!(maximalize(&chart).unwrap(), Maximalized::Domain(chart));
    }

    #[test]
    fn de_sitter_is_full_space() {
        let g = circle(64);
        let ds = CausalDomain::band(Arc::new(Region::full(g.clone())), 0.0, PI).unwrap();
        assert_eq!(is_maximal(&ds, 1e-3).unwrap(), Verdict::FullSpace);
        assert_eq!(maximalize(&ds).unwrap(), Maximalized::FullSpace);
        let (gm, gp) = eikonal_envelopes(&ds).unwrap();
        assert!(!gm.is_finite() && !gp.is_finite());
        assert_eq!(is_maximal(&CausalDomain::full_space(g), 0.0).unwrap(), Verdict::Maximal);
    }

    #[test]
    fn thin_strip_extends_to_the_dual() {
        let g = circle(64);
        let thin = strip(&g, 0.3);
        assert!(validate_domain(&thin).pass());
        let Verdict::Extendable { g_plus, .. } = is_maximal(&thin, g.resolution_h()).unwrap() else {
            panic!("expected extendable")
        };
        for &x in thin.region().interior() {
            let want = PI / 2.0 - g.distance(x, 0);
            assert!((g_plus.value_at(x).unwrap() - want).abs() < 1e-12);
        }
        let m = maximalize(&thin).unwrap();
        let m = m.domain().unwrap();
        assert!(validate_domain(m).pass());
        assert_eq!(is_maximal(m, 0.0).unwrap(), Verdict::Maximal);
        assert_eq!(maximalize(m).unwrap().domain().unwrap(), m);
    }

    #[test]
    fn certificates() {
        let g = circle(64);
        let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
        for &x in chart.region().interior() {
            if x == 32 {
                // antipodal to the only site: either way round is a minimizer
                let c = geodesic_certificate(chart.f_plus(), x, Sheet::Upper).unwrap();
                assert!(c.pass && c.path.len() == 33, "{c:?}");
                continue;
            }
            let c = geodesic_certificate(chart.f_plus(), x, Sheet::Upper).unwrap();
            assert!(c.pass, "{c:?}");
            assert_eq!(c.site, 0);
            assert_eq!(c.path.last(), Some(&0));
            assert!(geodesic_certificate(chart.f_minus(), x, Sheet::Lower).unwrap().pass);
        }
        let flat = strip(&g, 0.0).f_plus().map(|_| 0.0).unwrap();
        let sloped = flat.with_trace(vec![1.0, -1.0]).unwrap();
        let any_fail = sloped
            .region()
            .interior()
            .iter()
            .any(|&x| !geodesic_certificate(&sloped, x, Sheet::Upper).unwrap().pass);
        assert!(any_fail);
    }

    #[test]
    fn locality() {
        let g = circle(128);
        let h = g.resolution_h();
        let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
        let rep = is_locally_eikonal(chart.f_plus(), 8.0 * h, Sheet::Upper).unwrap();
        assert!(rep.pass, "{rep:?}");
        let c = 40;
        let dent = chart.f_plus().value_at(c).unwrap() - 3.0 * h;
        let field = ScalarField::from_fn(chart.region().clone(), |x| {
            chart.f_plus().value_at(x).unwrap().min(dent + g.distance(x, c))
        })
        .unwrap();
        let rep = is_locally_eikonal(&field, 8.0 * h, Sheet::Upper).unwrap();
        assert!(!rep.pass);
        assert!(g.distance(rep.worst_center.unwrap(), c) < 8.0 * h);
        let flat = chart.f_plus().map(|_| 0.0).unwrap().with_trace(vec![0.0]).unwrap();
        let rep = is_locally_eikonal(&flat, 8.0 * h, Sheet::Upper).unwrap();
        assert!(!rep.pass);
        assert!(is_locally_eikonal(&flat, h, Sheet::Upper).is_err());
    }
}
