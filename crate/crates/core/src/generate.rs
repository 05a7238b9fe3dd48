//! Random instances: caps, Lipschitz functions, validated domains, nested
//! domain pairs, achronal site sets and surface graphs.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{validate_domain, CausalDomain, SurfaceGraph};
use crate::duality::AchronalSet;
use crate::error::{invalid, Result};
use crate::field::{lower_envelope, upper_envelope, Metric, Region, ScalarField, Site};
use crate::sphere::SphereGrid;

const ATTEMPTS: usize = 64;

/// Nodes strictly within `radius` of `center`.
pub fn cap(grid: &Arc<SphereGrid>, center: usize, radius: f64) -> Result<Arc<Region>> {
    Ok(Arc::new(Region::new(
        grid.clone(),
        (0..grid.len()).filter(|&x| grid.distance(x, center) < radius),
    )?))
}

/// A cap with random center and radius in `[0.4, 1.4]`.
pub fn random_cap(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> Result<Arc<Region>> {
    for _ in 0..ATTEMPTS {
        let center = rng.random_range(0..grid.len());
        let radius = rng.random_range(0.4..1.4);
        if let Ok(r) = cap(grid, center, radius) {
            if !r.boundary().is_empty() && r.interior().len() >= 2 {
                return Ok(r);
            }
        }
    }
    Err(invalid("grid too coarse for random caps"))
}

/// Node values of `c·min_j (a_j + d(x, p_j)) + offset` with `|c| ≤ 0.9`:
/// a 0.9-Lipschitz function on the whole grid.
pub fn random_lipschitz(grid: &SphereGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c = rng.random_range(-0.9..0.9);
    let offset = rng.random_range(-1.0..1.0);
    let anchors: Vec<(usize, f64)> = (0..rng.random_range(1..=3))
        .map(|_| (rng.random_range(0..grid.len()), rng.random_range(-0.5..0.5)))
        .collect();
    (0..grid.len())
        .map(|x| {
            let m = anchors.iter().map(|&(p, a)| a + grid.distance(x, p)).fold(f64::INFINITY, f64::min);
            c * m + offset
        })
        .collect()
}

/// `{max(g⁻, φ − w) < t < min(g⁺, φ + w)}` over a random cap, where `φ` is
/// random and Lipschitz and `g±` are the envelopes of its boundary values.
pub fn random_domain(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> Result<CausalDomain> {
    let region = random_cap(grid, rng)?;
    let phi = random_lipschitz(grid, rng);
    let w = rng.random_range(0.05..1.0);
    domain_around(&region, &phi, w)
}

fn domain_around(region: &Arc<Region>, phi: &[f64], w: f64) -> Result<CausalDomain> {
    let trace: Vec<f64> = region.boundary().iter().map(|&b| phi[b]).collect();
    let sites: Vec<Site> = region.boundary().iter().map(|&b| Site::new(b, phi[b])).collect();
    let g_plus = lower_envelope(&sites, region, Metric::Exact)?;
    let g_minus = upper_envelope(&sites, region, Metric::Exact)?;
    let interior = region.interior();
    let plus: Vec<f64> = interior
        .iter()
        .zip(g_plus.interior_values().unwrap())
        .map(|(&x, &g)| g.min(phi[x] + w))
        .collect();
    let minus: Vec<f64> = interior
        .iter()
        .zip(g_minus.interior_values().unwrap())
        .map(|(&x, &g)| g.max(phi[x] - w))
        .collect();
    CausalDomain::new(
        ScalarField::finite(region.clone(), minus, trace.clone())?,
        ScalarField::finite(region.clone(), plus, trace)?,
    )
}

/// A validated pair `A ⊆ B`: `B` from [`random_domain`]; `A` over a smaller
/// concentric cap, the development of a graph between the sheets of `B`
/// intersected with `B`.
pub fn random_nested_pair(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> Result<(CausalDomain, CausalDomain)> {
    let h = grid.resolution_h();
    for _ in 0..ATTEMPTS {
        let center = rng.random_range(0..grid.len());
        let r_b = rng.random_range(0.6..1.4);
        let r_a = rng.random_range(0.3..(r_b - 2.0 * h).max(0.31));
        if r_b - r_a < 2.0 * h {
            continue;
        }
        let (Ok(u_b), Ok(u_a)) = (cap(grid, center, r_b), cap(grid, center, r_a)) else {
            continue;
        };
        if u_a.boundary().is_empty() || u_a.interior().len() < 2 || u_b.boundary().is_empty() {
            continue;
        }
        let phi = random_lipschitz(grid, rng);
        let b = domain_around(&u_b, &phi, rng.random_range(0.05..1.0))?;
        let lambda = rng.random_range(0.1..0.9);
        let k = |x: usize| {
            let (lo, hi) = b.interval(x).expect("inner boundary lies inside the outer cap");
            lambda * hi + (1.0 - lambda) * lo
        };
        let trace: Vec<f64> = u_a.boundary().iter().map(|&x| k(x)).collect();
        let sites: Vec<Site> = u_a.boundary().iter().zip(&trace).map(|(&x, &v)| Site::new(x, v)).collect();
        let dev_plus = lower_envelope(&sites, &u_a, Metric::Exact)?;
        let dev_minus = upper_envelope(&sites, &u_a, Metric::Exact)?;
        let plus: Vec<f64> = u_a
            .interior()
            .iter()
            .zip(dev_plus.interior_values().unwrap())
            .map(|(&x, &g)| g.min(b.interval(x).unwrap().1))
            .collect();
        let minus: Vec<f64> = u_a
            .interior()
            .iter()
            .zip(dev_minus.interior_values().unwrap())
            .map(|(&x, &g)| g.max(b.interval(x).unwrap().0))
            .collect();
        let a = CausalDomain::new(
            ScalarField::finite(u_a.clone(), minus, trace.clone())?,
            ScalarField::finite(u_a, plus, trace)?,
        )?;
        if validate_domain(&a).pass() && validate_domain(&b).pass() {
            return Ok((a, b));
        }
    }
    Err(invalid("could not generate a nested pair on this grid"))
}

/// `count` distinct random nodes with values drawn one by one inside the
/// window left by the previous sites, so that no pair is chronological.
pub fn random_achronal_set(grid: &Arc<SphereGrid>, count: usize, rng: &mut ChaCha8Rng) -> Result<AchronalSet> {
    if count == 0 || count > grid.len() {
        return Err(invalid(format!("cannot pick {count} distinct nodes")));
    }
    let mut nodes: Vec<usize> = Vec::with_capacity(count);
    while nodes.len() < count {
        let x = rng.random_range(0..grid.len());
        if !nodes.contains(&x) {
            nodes.push(x);
        }
    }
    let mut sites: Vec<Site> = Vec::with_capacity(count);
    for x in nodes {
        let lo = sites.iter().map(|s| s.value - grid.distance(x, s.node)).fold(-1.0f64, f64::max);
        let hi = sites.iter().map(|s| s.value + grid.distance(x, s.node)).fold(1.0f64, f64::min);
        let (lo, hi) = if lo <= hi {
            (lo, hi)
        } else {
            // the window left the default range [−1, 1]; use it unclipped
            let a = sites.iter().map(|s| s.value - grid.distance(x, s.node)).fold(f64::NEG_INFINITY, f64::max);
            let b = sites.iter().map(|s| s.value + grid.distance(x, s.node)).fold(f64::INFINITY, f64::min);
            (a, b)
        };
        sites.push(Site::new(x, lo + (hi - lo) * rng.random_range(0.0..=1.0)));
    }
    AchronalSet::new(grid.clone(), sites)
}

/// The graph of a random 0.9-Lipschitz function over a random cap.
pub fn random_surface(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> Result<SurfaceGraph> {
    let region = random_cap(grid, rng)?;
    let phi = random_lipschitz(grid, rng);
    SurfaceGraph::new(ScalarField::from_fn(region, |x| phi[x])?)
}
