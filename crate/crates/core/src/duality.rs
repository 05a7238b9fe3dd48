//! Duals of achronal site sets: the points not causally related to any site,
//! computed from distance envelopes, by exhaustive scan, and through the
//! sign of the quadratic form on the Klein lift.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{q_form, to_klein, CausalRelation, CoverPoint, RELATION_TOL};
use crate::domain::{CausalDomain, ORDER_EPS};
use crate::error::{invalid, Result};
use crate::field::{exact_envelope_at, Region, ScalarField, Sheet, Site};
use crate::sphere::SphereGrid;

/// Finitely many distinct sites `(node, value)` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AchronalSet {
    grid: Arc<SphereGrid>,
    sites: Vec<Site>,
}

impl AchronalSet {
    /// Checks indices, finiteness and distinctness of the points;
    /// achronality is checked separately by [`check_achronal`].
    pub fn new(grid: Arc<SphereGrid>, sites: Vec<Site>) -> Result<Self> {
        let mut seen: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
        for s in &sites {
            if s.node >= grid.len() {
                return Err(invalid(format!("site node {} out of range", s.node)));
            }
            if !s.value.is_finite() {
                return Err(invalid(format!("site value at node {} is not finite", s.node)));
            }
            if seen[s.node].iter().any(|&v| (v - s.value).abs() <= RELATION_TOL) {
                return Err(invalid(format!("duplicate site at node {}", s.node)));
            }
            seen[s.node].push(s.value);
        }
        Ok(Self { grid, sites })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = CoverPoint> + '_ {
        self.sites.iter().map(|s| CoverPoint::new(*self.grid.node(s.node), s.value))
    }

    fn relation(&self, a: &Site, b: &Site) -> CausalRelation {
        CausalRelation::classify(self.grid.distance(a.node, b.node), b.value - a.value, RELATION_TOL)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub pass: bool,
    /// Offending site pairs, by node.
    pub pairs: Vec<(usize, usize)>,
}

fn pairwise(set: &AchronalSet, bad: impl Fn(CausalRelation) -> bool) -> PairReport {
    let s = set.sites();
    let pairs: Vec<(usize, usize)> = (0..s.len())
        .flat_map(|i| (i + 1..s.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| bad(set.relation(&s[i], &s[j])))
        .map(|(i, j)| (s[i].node, s[j].node))
        .collect();
    PairReport { pass: pairs.is_empty(), pairs }
}

/// No two sites chronologically related.
pub fn check_achronal(set: &AchronalSet) -> PairReport {
    pairwise(set, CausalRelation::is_chronological)
}

/// No two sites causally related.
pub fn check_acausal(set: &AchronalSet) -> PairReport {
    pairwise(set, CausalRelation::is_causal)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dual {
    Domain(CausalDomain),
    /// Every node is a site or has a zero-width interval.
    Empty,
}

impl Dual {
    pub fn domain(&self) -> Option<&CausalDomain> {
        match self {
            Dual::Domain(d) => Some(d),
            Dual::Empty => None,
        }
    }
}

/// The dual as the strip between the two distance envelopes of the sites.
///
/// Nodes where the strip has zero width (sites, and nodes on lightlike
/// segments between sites) are left out of the region; those adjacent to it
/// become boundary nodes carrying the common value.
pub fn dual_by_formula(set: &AchronalSet) -> Result<Dual> {
    if set.is_empty() {
        return Err(invalid("the dual of an empty set is not defined here"));
    }
    let rep = check_achronal(set);
    if !rep.pass {
        return Err(invalid(format!("site set is not achronal: {:?}", rep.pairs.first().unwrap())));
    }
    let grid = set.grid();
    let mut site_value = vec![None; grid.len()];
    for s in set.sites() {
        site_value[s.node] = Some(s.value);
    }
    let bounds: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            (
                exact_envelope_at(grid, set.sites(), x, Sheet::Lower),
                exact_envelope_at(grid, set.sites(), x, Sheet::Upper),
            )
        })
        .collect();
    let open = |x: usize| site_value[x].is_none() && bounds[x].0 < bounds[x].1 - ORDER_EPS;
    let interior: Vec<usize> = (0..grid.len()).filter(|&x| open(x)).collect();
    if interior.is_empty() {
        return Ok(Dual::Empty);
    }
    let region = Arc::new(Region::new(grid.clone(), interior)?);
    let edge_value = |x: usize| site_value[x].unwrap_or(bounds[x].1);
    let trace: Vec<f64> = region.boundary().iter().map(|&b| edge_value(b)).collect();
    let minus = ScalarField::finite(
        region.clone(),
        region.interior().iter().map(|&x| bounds[x].0).collect(),
        trace.clone(),
    )?;
    let plus = ScalarField::finite(
        region.clone(),
        region.interior().iter().map(|&x| bounds[x].1).collect(),
        trace,
    )?;
    Ok(Dual::Domain(CausalDomain::new(minus, plus)?))
}

/// Membership of every `(node, t_min + k·time_step)` in the dual, found by
/// testing the point against every site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDual {
    pub t_min: f64,
    pub time_step: f64,
    pub steps: usize,
    /// `member[node][k]`.
    pub member: Vec<Vec<bool>>,
}

impl SampledDual {
    pub fn time(&self, k: usize) -> f64 {
        self.t_min + k as f64 * self.time_step
    }

    pub fn contains(&self, node: usize, k: usize) -> bool {
        self.member[node][k]
    }

    pub fn count(&self) -> usize {
        self.member.iter().flatten().filter(|&&m| m).count()
    }
}

/// Scans the slab `[min f − π, max f + π]` at the given time step.
pub fn dual_by_definition(set: &AchronalSet, time_step: f64) -> Result<SampledDual> {
    if set.is_empty() {
        return Err(invalid("the dual of an empty set is not defined here"));
    }
    if !(time_step > 0.0 && time_step.is_finite()) {
        return Err(invalid("time_step must be positive"));
    }
    let (lo, hi) = set
        .sites()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.value), b.max(s.value)));
    let t_min = lo - PI;
    let steps = ((hi + PI - t_min) / time_step).floor() as usize + 1;
    let grid = set.grid();
    let member = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let dist: Vec<f64> = set.sites().iter().map(|s| grid.distance(x, s.node)).collect();
            (0..steps)
                .map(|k| {
                    let t = t_min + k as f64 * time_step;
                    set.sites().iter().zip(&dist).all(|(s, &d)| {
                        CausalRelation::classify(d, t - s.value, RELATION_TOL) == CausalRelation::Unrelated
                    })
                })
                .collect()
        })
        .collect();
    Ok(SampledDual { t_min, time_step, steps, member })
}

/// Whether the Klein lift of `p` pairs negatively with the lift of every site.
pub fn klein_dual_test(set: &AchronalSet, p: &CoverPoint) -> bool {
    let kp = to_klein(p);
    set.points().all(|s| q_form(&kp, &to_klein(&s)) < 0.0)
}
