//! Causally convex domains `Ω = {(x, t) : f⁻(x) < t < f⁺(x)}` over a grid
//! region, their validation, Cauchy surfaces and developments, conjugate
//! points and shadows.
//!
//! Oracles work on discrete causal curves: the spatial track follows grid
//! edges while time advances by at least the edge length (exactly the edge
//! length for null steps). A band of width `resolution_h` around every
//! boundary is exempt, since a discrete boundary cannot tell open sets from
//! closed ones.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{CausalRelation, CoverPoint, RELATION_TOL};
use crate::error::{invalid, Error, Result};
use crate::field::{
    check_lipschitz, lower_envelope, upper_envelope, FieldValues, LipschitzMode, Metric, NodeRole,
    Region, ScalarField, ALL_PAIRS_TOL,
};
use crate::rng::task_rng;
use crate::sphere::{distance_unchecked, SphereGrid};

/// Minimum gap required between the two sheets at interior nodes.
pub const ORDER_EPS: f64 = 1e-12;
pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-9;
/// How many offending nodes a single violation lists at most.
const MAX_LISTED: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CausalDomain {
    region: Arc<Region>,
    f_minus: ScalarField,
    f_plus: ScalarField,
    coincidence_tol: f64,
}

impl CausalDomain {
    /// Pairs two fields over the same region. Nothing else is checked here;
    /// see [`validate_domain`].
    pub fn new(f_minus: ScalarField, f_plus: ScalarField) -> Result<Self> {
        if f_minus.region() != f_plus.region() {
            return Err(invalid("f_minus and f_plus live on different regions"));
        }
        Ok(Self {
            region: f_minus.region().clone(),
            f_minus,
            f_plus,
            coincidence_tol: DEFAULT_COINCIDENCE_TOL,
        })
    }

    pub fn with_coincidence_tol(mut self, tol: f64) -> Self {
        self.coincidence_tol = tol;
        self
    }

    /// The whole cover: every node, f⁻ ≡ −∞, f⁺ ≡ +∞.
    pub fn full_space(grid: Arc<SphereGrid>) -> Self {
        let region = Arc::new(Region::full(grid));
        Self::new(ScalarField::minus_infinity(region.clone()), ScalarField::plus_infinity(region))
            .expect("same region")
    }

    /// The affine chart of points not causally related to `(x₀, t₀)`:
    /// every node but `x₀`, with `f± = t₀ ± d(x, x₀)` and trace `t₀`.
    pub fn minkowski_chart(grid: Arc<SphereGrid>, x0: usize, t0: f64) -> Result<Self> {
        if x0 >= grid.len() {
            return Err(invalid(format!("chart center {x0} out of range")));
        }
        let n = grid.len();
        let region = Arc::new(Region::new(grid.clone(), (0..n).filter(|&i| i != x0))?);
        let plus = ScalarField::from_fn(region.clone(), |i| t0 + grid.distance(i, x0))?;
        let minus = ScalarField::from_fn(region, |i| t0 - grid.distance(i, x0))?;
        Self::new(minus, plus)
    }

    /// Constant sheets over a region (finite traces set to the given values;
    /// a nonempty boundary then makes the domain invalid unless `lo == hi`).
    pub fn band(region: Arc<Region>, lo: f64, hi: f64) -> Result<Self> {
        let minus = ScalarField::from_fn(region.clone(), |_| lo)?;
        let plus = ScalarField::from_fn(region, |_| hi)?;
        Self::new(minus, plus)
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.region.grid()
    }

    pub fn f_minus(&self) -> &ScalarField {
        &self.f_minus
    }

    pub fn f_plus(&self) -> &ScalarField {
        &self.f_plus
    }

    pub fn coincidence_tol(&self) -> f64 {
        self.coincidence_tol
    }

    pub fn is_full_space(&self) -> bool {
        self.region.covers_grid()
            && self.f_minus.values() == &FieldValues::MinusInfinity
            && self.f_plus.values() == &FieldValues::PlusInfinity
    }

    pub fn is_finite(&self) -> bool {
        self.f_minus.is_finite() && self.f_plus.is_finite()
    }

    /// `(f⁻(x), f⁺(x))` at an interior node.
    pub fn interval(&self, node: usize) -> Option<(f64, f64)> {
        if !self.region.is_interior(node) {
            return None;
        }
        Some((self.f_minus.value_at(node)?, self.f_plus.value_at(node)?))
    }

    /// Membership of `(node, t)` in the open set.
    pub fn contains_node(&self, node: usize, t: f64) -> bool {
        self.interval(node).is_some_and(|(lo, hi)| lo < t && t < hi)
    }

    /// Common boundary value at a boundary node (the f⁺ trace).
    pub fn trace_at(&self, node: usize) -> Option<f64> {
        if !self.region.is_boundary(node) {
            return None;
        }
        self.f_plus.value_at(node)
    }

    /// Closed time range of the node's fiber: the interval at interior
    /// nodes, the span of the two traces at boundary nodes.
    fn closed_range(&self, node: usize) -> Option<(f64, f64)> {
        match self.region.role(node) {
            NodeRole::Interior => self.interval(node),
            NodeRole::Boundary => match (self.f_minus.value_at(node), self.f_plus.value_at(node)) {
                (Some(a), Some(b)) => Some((a.min(b), a.max(b))),
                _ => None,
            },
            NodeRole::Exterior => None,
        }
    }

    /// Per-node time windows of the band of width `band` around Ω: the hull
    /// of the widened closed ranges of the node and its grid neighbours
    /// (which lie within `resolution_h`).
    pub fn band_windows(&self, band: f64) -> Vec<Option<(f64, f64)>> {
        let grid = self.grid();
        (0..grid.len())
            .map(|x| {
                std::iter::once(x)
                    .chain(grid.neighbors(x).iter().map(|&(y, _)| y))
                    .filter_map(|y| self.closed_range(y))
                    .map(|(lo, hi)| (lo - band, hi + band))
                    .reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
            })
            .collect()
    }

    /// Time reversal t ↦ −t (swaps and negates the sheets).
    pub fn time_reversed(&self) -> Self {
        Self {
            region: self.region.clone(),
            f_minus: self.f_plus.negated(),
            f_plus: self.f_minus.negated(),
            coincidence_tol: self.coincidence_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    LipschitzFail,
    OrderFail,
    TraceMismatch,
    MixedInfinity,
    /// A causal test curve crossed a surface graph zero or several times.
    CrossingFail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: impl Into<String>, mut nodes: Vec<usize>) {
        nodes.truncate(MAX_LISTED);
        self.violations.push(Violation { code, message: message.into(), nodes });
    }
}

/// How the Lipschitz part of validation is run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub mode: LipschitzMode,
    pub lip_tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { mode: LipschitzMode::AllPairs, lip_tol: ALL_PAIRS_TOL }
    }
}

impl ValidateOptions {
    /// Edge-wise check with slack `resolution_h`.
    pub fn edgewise(grid: &SphereGrid) -> Self {
        Self { mode: LipschitzMode::Edgewise, lip_tol: grid.resolution_h() }
    }
}

pub fn validate_domain(dom: &CausalDomain) -> Diagnostics {
    validate_domain_with(dom, ValidateOptions::default())
}

pub fn validate_domain_with(dom: &CausalDomain, opts: ValidateOptions) -> Diagnostics {
    let mut diag = Diagnostics::default();
    let has_boundary = !dom.region.boundary().is_empty();
    use FieldValues::*;
    match (dom.f_minus.values(), dom.f_plus.values()) {
        (PlusInfinity, _) | (_, MinusInfinity) => {
            diag.push(ViolationCode::OrderFail, "f_minus is +inf or f_plus is -inf", vec![]);
            return diag;
        }
        (MinusInfinity, PlusInfinity) if has_boundary => {
            diag.push(
                ViolationCode::MixedInfinity,
                "both sheets infinite over a region with nonempty boundary",
                dom.region.boundary().to_vec(),
            );
        }
        (MinusInfinity, Finite { .. }) | (Finite { .. }, PlusInfinity) if has_boundary => {
            diag.push(
                ViolationCode::MixedInfinity,
                "exactly one sheet infinite over a region with nonempty boundary",
                dom.region.boundary().to_vec(),
            );
        }
        _ => {}
    }
    for (name, field) in [("f_minus", &dom.f_minus), ("f_plus", &dom.f_plus)] {
        if field.is_finite() {
            let rep = check_lipschitz(field, opts.mode, opts.lip_tol).expect("finite field");
            if !rep.pass {
                let nodes = rep.violations.iter().flat_map(|v| [v.a, v.b]).collect();
                diag.push(
                    ViolationCode::LipschitzFail,
                    format!("{name} violates the 1-Lipschitz bound on {} pairs", rep.violations.len()),
                    nodes,
                );
            }
        }
    }
    if dom.is_finite() {
        let lo = dom.f_minus.interior_values().unwrap();
        let hi = dom.f_plus.interior_values().unwrap();
        let bad: Vec<usize> = dom
            .region
            .interior()
            .iter()
            .zip(lo.iter().zip(hi))
            .filter(|(_, (a, b))| !(**a < **b - ORDER_EPS))
            .map(|(&i, _)| i)
            .collect();
        if !bad.is_empty() {
            diag.push(ViolationCode::OrderFail, format!("f_minus >= f_plus at {} nodes", bad.len()), bad);
        }
        if has_boundary {
            let tm = dom.f_minus.trace().unwrap();
            let tp = dom.f_plus.trace().unwrap();
            let bad: Vec<usize> = dom
                .region
                .boundary()
                .iter()
                .zip(tm.iter().zip(tp))
                .filter(|(_, (a, b))| (**a - **b).abs() > dom.coincidence_tol)
                .map(|(&i, _)| i)
                .collect();
            if !bad.is_empty() {
                diag.push(
                    ViolationCode::TraceMismatch,
                    format!("boundary traces differ at {} nodes", bad.len()),
                    bad,
                );
            }
        }
    }
    diag
}

/// Nearest node to `x`, rejecting points farther than `resolution_h / 2`.
pub fn locate(grid: &SphereGrid, p: &CoverPoint) -> Result<usize> {
    let (node, d) = grid.nearest_node(&p.x)?;
    let allowed = grid.resolution_h() / 2.0;
    if d > allowed {
        return Err(Error::OffGrid { distance: d, allowed });
    }
    Ok(node)
}

/// Membership of a point lying over a grid node.
pub fn contains(dom: &CausalDomain, p: &CoverPoint) -> Result<bool> {
    let node = locate(dom.grid(), p)?;
    Ok(dom.contains_node(node, p.t))
}

/// A grid point `(node, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeTime {
    pub node: usize,
    pub t: f64,
}

impl NodeTime {
    pub fn new(node: usize, t: f64) -> Self {
        Self { node, t }
    }

    pub fn to_cover(self, grid: &SphereGrid) -> CoverPoint {
        CoverPoint::new(*grid.node(self.node), self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    Pass,
    /// `p ≤ r ≤ q` causally with `p, q ∈ Ω` but `r` outside Ω.
    Witness { p: NodeTime, q: NodeTime, r: NodeTime },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub verdict: OracleVerdict,
    /// Number of diamonds actually scanned.
    pub diamonds: usize,
    pub band: f64,
}

impl ConvexityReport {
    pub fn pass(&self) -> bool {
        self.verdict == OracleVerdict::Pass
    }
}

/// Time window used where a sheet is infinite.
const OPEN_WINDOW: f64 = 2.0 * PI;

fn sample_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + OPEN_WINDOW),
        (false, true) => (hi - OPEN_WINDOW, hi),
        (false, false) => (-OPEN_WINDOW / 2.0, OPEN_WINDOW / 2.0),
    };
    let u: f64 = rng.random_range(0.0..1.0);
    lo + (hi - lo) * u
}

fn random_interior(rng: &mut ChaCha8Rng, region: &Region) -> usize {
    region.interior()[rng.random_range(0..region.interior().len())]
}

/// Samples causal pairs `p ≤ q` in Ω and scans every grid × time sample of
/// the diamond `J⁺(p) ∩ J⁻(q)` (time step `resolution_h / 2`), requiring it
/// to lie in Ω up to a band of width `resolution_h` (see
/// [`CausalDomain::band_windows`]).
pub fn causal_convexity_oracle(dom: &CausalDomain, samples: usize, seed: u64) -> ConvexityReport {
    let grid = dom.grid();
    let band = grid.resolution_h();
    let step = band / 2.0;
    let windows = dom.band_windows(band);
    let results: Vec<Option<OracleVerdict>> = (0..samples)
        .into_par_iter()
        .map(|task| {
            let mut rng = task_rng(seed, task as u64);
            let (p, q) = sample_causal_pair(dom, &mut rng)?;
            Some(scan_diamond(dom, &windows, p, q, step))
        })
        .collect();
    let diamonds = results.iter().filter(|r| r.is_some()).count();
    let verdict = results
        .into_iter()
        .flatten()
        .find(|v| *v != OracleVerdict::Pass)
        .unwrap_or(OracleVerdict::Pass);
    ConvexityReport { verdict, diamonds, band }
}

fn sample_causal_pair(dom: &CausalDomain, rng: &mut ChaCha8Rng) -> Option<(NodeTime, NodeTime)> {
    let grid = dom.grid();
    for _ in 0..64 {
        let a = random_interior(rng, &dom.region);
        let (lo, hi) = dom.interval(a)?;
        if !(lo < hi) {
            continue;
        }
        let tp = sample_in(rng, lo, hi);
        let b = random_interior(rng, &dom.region);
        let (lo_b, hi_b) = dom.interval(b)?;
        let lo_q = lo_b.max(tp + grid.distance(a, b));
        if lo_q < hi_b {
            let tq = sample_in(rng, lo_q, hi_b);
            return Some((NodeTime::new(a, tp), NodeTime::new(b, tq)));
        }
    }
    None
}

fn scan_diamond(
    dom: &CausalDomain,
    windows: &[Option<(f64, f64)>],
    p: NodeTime,
    q: NodeTime,
    step: f64,
) -> OracleVerdict {
    let grid = dom.grid();
    for x in 0..grid.len() {
        let lo = p.t + grid.distance(p.node, x);
        let hi = q.t - grid.distance(x, q.node);
        if lo > hi + RELATION_TOL {
            continue;
        }
        let count = ((hi - lo).max(0.0) / step).floor() as usize;
        for k in 0..=count + 1 {
            let t = if k <= count { lo + k as f64 * step } else { hi.max(lo) };
            if !windows[x].is_some_and(|(a, b)| a <= t && t <= b) {
                return OracleVerdict::Witness { p, q, r: NodeTime::new(x, t) };
            }
        }
    }
    OracleVerdict::Pass
}

/// The graph of a finite 1-Lipschitz function over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    h: ScalarField,
}

impl SurfaceGraph {
    pub fn new(h: ScalarField) -> Result<Self> {
        if !h.is_finite() {
            return Err(invalid("surface graphs need a finite function"));
        }
        Ok(Self { h })
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn region(&self) -> &Arc<Region> {
        self.h.region()
    }

    /// `h` on interior nodes, trace on boundary nodes.
    pub fn height(&self, node: usize) -> Option<f64> {
        self.h.value_at(node)
    }

    fn bounds(&self) -> (f64, f64) {
        let v = self.h.interior_values().unwrap().iter().chain(self.h.trace().unwrap());
        v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    /// Midpoint `(f⁺ + f⁻) / 2` of a finite domain.
    pub fn midpoint(dom: &CausalDomain) -> Result<Self> {
        if !dom.is_finite() {
            return Err(Error::NotApplicable("midpoint surface of an infinite domain".into()));
        }
        let lo = dom.f_minus().interior_values().unwrap();
        let hi = dom.f_plus().interior_values().unwrap();
        let interior = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let trace = dom.f_plus().trace().unwrap().to_vec();
        Self::new(ScalarField::finite(dom.region().clone(), interior, trace)?)
    }
}

/// One random step of a discrete causal curve: stay put for a while, or move
/// along an edge, null or slower.
fn random_step(grid: &SphereGrid, rng: &mut ChaCha8Rng, node: usize) -> (usize, f64) {
    let h = grid.resolution_h();
    if rng.random_bool(0.2) {
        return (node, h * rng.random_range(0.05..1.0));
    }
    let nb = grid.neighbors(node);
    let (next, len) = nb[rng.random_range(0..nb.len())];
    let slack = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.5) };
    (next, len * (1.0 + slack))
}

/// Sign of `φ = t − h` with a dead band.
fn band_sign(phi: f64, band: f64) -> i8 {
    if phi > band {
        1
    } else if phi < -band {
        -1
    } else {
        0
    }
}

fn crossing_count(phis: &[f64], band: f64) -> (usize, bool) {
    let mut last = 0i8;
    let mut crossings = 0;
    let mut touched = false;
    for &phi in phis {
        match band_sign(phi, band) {
            0 => touched = true,
            s => {
                if last != 0 && s != last {
                    crossings += 1;
                }
                last = s;
            }
        }
    }
    (crossings, touched)
}

/// Checks a candidate Cauchy surface of `dom`: structure first, then
/// `curves` random inextensible causal curves of Ω, each of which must cross
/// the graph exactly once.
pub fn validate_cauchy_surface(dom: &CausalDomain, s: &SurfaceGraph, curves: usize, seed: u64) -> Diagnostics {
    validate_cauchy_surface_with(dom, s, curves, seed, ValidateOptions::default())
}

pub fn validate_cauchy_surface_with(
    dom: &CausalDomain,
    s: &SurfaceGraph,
    curves: usize,
    seed: u64,
    opts: ValidateOptions,
) -> Diagnostics {
    let mut diag = Diagnostics::default();
    if s.region() != dom.region() {
        diag.push(ViolationCode::OrderFail, "surface and domain live on different regions", vec![]);
        return diag;
    }
    let rep = check_lipschitz(s.h(), opts.mode, opts.lip_tol).expect("finite");
    if !rep.pass {
        diag.push(
            ViolationCode::LipschitzFail,
            format!("h violates the 1-Lipschitz bound on {} pairs", rep.violations.len()),
            rep.violations.iter().flat_map(|v| [v.a, v.b]).collect(),
        );
    }
    let region = dom.region();
    let h = s.h().interior_values().unwrap();
    let bad: Vec<usize> = region
        .interior()
        .iter()
        .zip(h)
        .filter(|(&i, &hv)| {
            let (lo, hi) = dom.interval(i).unwrap();
            !(lo < hv && hv < hi)
        })
        .map(|(&i, _)| i)
        .collect();
    if !bad.is_empty() {
        diag.push(ViolationCode::OrderFail, "h is not strictly between f_minus and f_plus", bad);
    }
    if let Some(tp) = dom.f_plus().trace() {
        let th = s.h().trace().unwrap();
        let bad: Vec<usize> = region
            .boundary()
            .iter()
            .zip(th.iter().zip(tp))
            .filter(|(_, (a, b))| (**a - **b).abs() > dom.coincidence_tol)
            .map(|(&i, _)| i)
            .collect();
        if !bad.is_empty() {
            diag.push(ViolationCode::TraceMismatch, "trace of h differs from the domain trace", bad);
        }
    }
    let grid = dom.grid();
    let null_edges = grid
        .edges()
        .iter()
        .filter(|&&(a, b, len)| match (s.height(a), s.height(b)) {
            (Some(x), Some(y)) => (x - y).abs() >= len * (1.0 - 1e-9),
            _ => false,
        })
        .count();
    if null_edges > 0 {
        diag.warnings.push(format!(
            "graph of h contains {null_edges} null edges; crossing counts there are not adjudicated"
        ));
    }
    if !diag.pass() {
        return diag;
    }
    let band = grid.resolution_h();
    let failures: Vec<usize> = (0..curves)
        .into_par_iter()
        .filter_map(|task| {
            let mut rng = task_rng(seed, task as u64);
            let phis = curve_through_domain(dom, s, &mut rng)?;
            let (crossings, touched) = crossing_count(&phis, band);
            let ok = crossings == 1 || (crossings == 0 && touched);
            (!ok).then_some(task)
        })
        .collect();
    if !failures.is_empty() {
        diag.push(
            ViolationCode::CrossingFail,
            format!("{} of {curves} causal test curves do not cross the graph exactly once", failures.len()),
            vec![],
        );
    }
    diag
}

/// Samples a random inextensible causal curve of Ω and returns `t − h`
/// along it, from the past exit point to the future exit point.
fn curve_through_domain(dom: &CausalDomain, s: &SurfaceGraph, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let grid = dom.grid();
    let (h_lo, h_hi) = s.bounds();
    let margin = 2.0 * grid.resolution_h();
    let start = (0..64).find_map(|_| {
        let x = random_interior(rng, dom.region());
        let (lo, hi) = dom.interval(x)?;
        (lo < hi).then(|| NodeTime::new(x, sample_in(rng, lo, hi)))
    })?;
    let phi_at = |p: NodeTime| s.height(p.node).map(|hv| p.t - hv);
    let mut past = Vec::new();
    let mut future = Vec::new();
    for (dir, out) in [(-1.0, &mut past), (1.0, &mut future)] {
        let mut cur = start;
        for _ in 0..100_000 {
            let (next, dt) = random_step(grid, rng, cur.node);
            cur = NodeTime::new(next, cur.t + dir * dt);
            let inside = dom.contains_node(cur.node, cur.t);
            if let Some(phi) = phi_at(cur) {
                out.push(phi);
            }
            let beyond = if dir > 0.0 { cur.t > h_hi + margin } else { cur.t < h_lo - margin };
            if !inside || beyond {
                break;
            }
        }
    }
    past.reverse();
    past.push(phi_at(start).unwrap());
    past.extend(future);
    Some(past)
}

/// The Cauchy development of a surface graph, with the nodes where the
/// graph touches one of the development's sheets (null contact).
#[derive(Debug, Clone, PartialEq)]
pub struct Development {
    pub domain: CausalDomain,
    pub full_space: bool,
    pub null_contact: Vec<usize>,
}

/// Development of the graph of `h`: the envelopes of its boundary trace, or
/// the whole cover when the region has no boundary.
pub fn cauchy_development_of_graph(s: &SurfaceGraph) -> Result<Development> {
    let region = s.region();
    let sites = s.h().trace_sites();
    if sites.is_empty() {
        let domain = CausalDomain::new(
            ScalarField::minus_infinity(region.clone()),
            ScalarField::plus_infinity(region.clone()),
        )?;
        return Ok(Development { domain, full_space: true, null_contact: vec![] });
    }
    let trace = s.h().trace().unwrap().to_vec();
    let plus = lower_envelope(&sites, region, Metric::Exact)?.with_trace(trace.clone())?;
    let minus = upper_envelope(&sites, region, Metric::Exact)?.with_trace(trace)?;
    let h = s.h().interior_values().unwrap();
    let null_contact = region
        .interior()
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            h[k] >= plus.interior_values().unwrap()[k] - ORDER_EPS
                || h[k] <= minus.interior_values().unwrap()[k] + ORDER_EPS
        })
        .map(|(_, &i)| i)
        .collect();
    Ok(Development { domain: CausalDomain::new(minus, plus)?, full_space: false, null_contact })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DevelopmentVerdict {
    Pass,
    /// A point claimed inside through which a causal curve misses the graph.
    InsideMiss { point: NodeTime },
    /// A point claimed outside from which no causal curve escapes the graph.
    OutsideTrapped { point: NodeTime },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentReport {
    pub verdict: DevelopmentVerdict,
    pub inside_checked: usize,
    pub outside_checked: usize,
    pub band_exempt: usize,
}

impl DevelopmentReport {
    pub fn pass(&self) -> bool {
        self.verdict == DevelopmentVerdict::Pass
    }
}

/// Cross-checks a claimed development `result` of the graph of `h` against
/// random causal curves. Inside probes need every one of `trials` curves to
/// meet the graph; outside probes (sampled within `3·resolution_h` of the
/// claimed boundary) need one escaping curve. Probes within `resolution_h`
/// of the claimed boundary are exempt.
pub fn development_curve_oracle(
    s: &SurfaceGraph,
    result: &CausalDomain,
    probes: usize,
    trials: usize,
    seed: u64,
) -> DevelopmentReport {
    let grid = result.grid();
    let band = grid.resolution_h();
    #[derive(Clone, Copy)]
    enum Outcome {
        Inside,
        Outside,
        Exempt,
        Skipped,
    }
    let outcomes: Vec<(Outcome, Option<DevelopmentVerdict>)> = (0..probes)
        .into_par_iter()
        .map(|task| {
            let mut rng = task_rng(seed, task as u64);
            let x = random_interior(&mut rng, result.region());
            let Some((lo, hi)) = result.interval(x) else {
                return (Outcome::Skipped, None);
            };
            if !s.region().is_interior(x) {
                return (Outcome::Skipped, None);
            }
            let inside = rng.random_bool(0.5) || (lo.is_infinite() && hi.is_infinite());
            if inside {
                if !(lo < hi) {
                    return (Outcome::Skipped, None);
                }
                let t = sample_in(&mut rng, lo, hi);
                if t - lo <= band || hi - t <= band {
                    return (Outcome::Exempt, None);
                }
                let p = NodeTime::new(x, t);
                for _ in 0..trials {
                    if !curve_meets_graph(s, p, &mut rng) {
                        return (Outcome::Inside, Some(DevelopmentVerdict::InsideMiss { point: p }));
                    }
                }
                (Outcome::Inside, None)
            } else {
                let above = if lo.is_infinite() {
                    true
                } else if hi.is_infinite() {
                    false
                } else {
                    rng.random_bool(0.5)
                };
                let offset = rng.random_range(0.0..3.0 * band);
                let t = if above { hi + offset } else { lo - offset };
                if offset <= band {
                    return (Outcome::Exempt, None);
                }
                let p = NodeTime::new(x, t);
                if escaping_curve_exists(s, p, above) {
                    (Outcome::Outside, None)
                } else {
                    (Outcome::Outside, Some(DevelopmentVerdict::OutsideTrapped { point: p }))
                }
            }
        })
        .collect();
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|(o, _)| f(o)).count();
    DevelopmentReport {
        inside_checked: count(|o| matches!(o, Outcome::Inside)),
        outside_checked: count(|o| matches!(o, Outcome::Outside)),
        band_exempt: count(|o| matches!(o, Outcome::Exempt)),
        verdict: outcomes
            .into_iter()
            .find_map(|(_, v)| v)
            .unwrap_or(DevelopmentVerdict::Pass),
    }
}

/// Walks a random causal curve from `p` toward the graph (future-directed
/// when `p` is below it) over the whole grid and reports whether it meets
/// the graph: a vertex within the band, or a sign change of `t − h` across
/// an edge with an end over the open region.
fn curve_meets_graph(s: &SurfaceGraph, p: NodeTime, rng: &mut ChaCha8Rng) -> bool {
    let region = s.region();
    let grid = region.grid();
    let band = grid.resolution_h();
    let (h_lo, h_hi) = s.bounds();
    let phi0 = p.t - s.height(p.node).unwrap();
    if phi0.abs() <= band {
        return true;
    }
    let dir = if phi0 < 0.0 { 1.0 } else { -1.0 };
    let mut prev = (p.node, Some(phi0));
    let mut cur = p;
    for _ in 0..100_000 {
        let (next, dt) = random_step(grid, rng, cur.node);
        cur = NodeTime::new(next, cur.t + dir * dt);
        let phi = s.height(cur.node).map(|hv| cur.t - hv);
        if let Some(phi) = phi {
            if region.is_interior(cur.node) && phi.abs() <= band {
                return true;
            }
            if let (Some(prev_phi), true) = (prev.1, region.is_interior(prev.0) || region.is_interior(cur.node)) {
                if prev_phi.signum() != phi.signum() {
                    return true;
                }
            }
        }
        let beyond = if dir > 0.0 { cur.t > h_hi + band } else { cur.t < h_lo - band };
        if beyond {
            return false;
        }
        prev = (cur.node, phi);
    }
    false
}

/// Searches a null curve from `p` (past-directed when `above`) that reaches
/// the fiber of a boundary node strictly on `p`'s side of the trace without
/// ever touching the graph; from there the fiber itself escapes.
fn escaping_curve_exists(s: &SurfaceGraph, p: NodeTime, above: bool) -> bool {
    let region = s.region();
    let grid = region.grid();
    let sign = if above { 1.0 } else { -1.0 };
    let side = |node: usize, elapsed: f64| -> Option<f64> {
        s.height(node).map(|hv| sign * (p.t - sign * elapsed - hv))
    };
    if side(p.node, 0.0).is_none_or(|v| v <= 0.0) {
        return false;
    }
    let mut best = vec![f64::INFINITY; grid.len()];
    best[p.node] = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(std::cmp::Reverse((ordered(0.0), p.node)));
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        let d = d.0;
        if d > best[v] {
            continue;
        }
        if !region.is_interior(v) {
            return true;
        }
        for &(w, len) in grid.neighbors(v) {
            let nd = d + len;
            if nd < best[w] && side(w, nd).is_some_and(|m| m > 0.0) {
                best[w] = nd;
                heap.push(std::cmp::Reverse((ordered(nd), w)));
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn ordered(x: f64) -> Ordered {
    Ordered(x)
}

/// A point `(x, t)` of Ω whose conjugate `(−x, t + π)` is also in Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateWitness {
    pub node: usize,
    pub antipode: usize,
    pub t: f64,
}

/// Scans every interior node whose antipode is interior for a time `t` with
/// `f⁻(x) < t < f⁺(x)` and `f⁻(−x) < t + π < f⁺(−x)`. Overlaps thinner than
/// the relation tolerance are treated as empty.
pub fn detect_conjugate_pairs(dom: &CausalDomain) -> Result<Vec<ConjugateWitness>> {
    let grid = dom.grid();
    if !grid.has_antipodes() {
        return Err(Error::NotApplicable("grid is not antipode-closed".into()));
    }
    let mut out = Vec::new();
    for &x in dom.region().interior() {
        let y = grid.antipode(x).unwrap();
        let (Some((lo_x, hi_x)), Some((lo_y, hi_y))) = (dom.interval(x), dom.interval(y)) else {
            continue;
        };
        let lo = lo_x.max(lo_y - PI);
        let hi = hi_x.min(hi_y - PI);
        if lo < hi - RELATION_TOL {
            let t = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            };
            out.push(ConjugateWitness { node: x, antipode: y, t });
        }
    }
    Ok(out)
}

/// Where a point sits relative to a surface graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Future,
    Past,
    On,
}

fn side_of(s: &SurfaceGraph, p: &CoverPoint) -> Result<(usize, Side)> {
    let grid = s.region().grid();
    let node = locate(grid, p)?;
    if !s.region().is_interior(node) {
        return Err(invalid(format!("point lies over node {node}, outside the surface region")));
    }
    let hv = s.height(node).unwrap();
    let side = if p.t > hv + RELATION_TOL {
        Side::Future
    } else if p.t < hv - RELATION_TOL {
        Side::Past
    } else {
        Side::On
    };
    Ok((node, side))
}

/// Nodes `x` of the surface region with `(x, h(x))` causally related to `p`
/// on the surface side (J⁻(p) for points above the graph, J⁺(p) below).
pub fn shadow(p: &CoverPoint, s: &SurfaceGraph) -> Result<Vec<usize>> {
    let (node, side) = side_of(s, p)?;
    let grid = s.region().grid();
    let px = *grid.node(node);
    Ok(match side {
        Side::On => vec![node],
        _ => s
            .region()
            .interior()
            .iter()
            .copied()
            .filter(|&x| {
                let d = distance_unchecked(grid.node(x), &px);
                let rel = CausalRelation::classify(d, p.t - s.height(x).unwrap(), RELATION_TOL);
                match side {
                    Side::Future => rel.is_causal_future(),
                    _ => rel.is_causal_past(),
                }
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowComparison {
    pub distinct: bool,
    pub warnings: Vec<String>,
}

/// Whether two points on the same side of the graph have different shadows.
pub fn shadows_distinguish(p: &CoverPoint, q: &CoverPoint, s: &SurfaceGraph) -> Result<ShadowComparison> {
    let (_, sp) = side_of(s, p)?;
    let (_, sq) = side_of(s, q)?;
    if sp != sq || sp == Side::On {
        return Err(invalid("both points must lie strictly on the same side of the graph"));
    }
    let mut warnings = Vec::new();
    if s.region().covers_grid() {
        warnings.push("surface region is the whole grid (compact surface); shadows need not separate points".into());
    }
    Ok(ShadowComparison { distinct: shadow(p, s)? != shadow(q, s)?, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::UnitPoint;

    fn circle(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::circle(n).unwrap())
    }

    #[test]
    fn minkowski_chart_validates() {
        let g = circle(64);
        let chart = CausalDomain::minkowski_chart(g, 0, 0.0).unwrap();
        let diag = validate_domain(&chart);
        assert!(diag.pass(), "{diag:?}");
    }

    #[test]
    fn validation_codes() {
        let g = circle(64);
        let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
        let region = chart.region().clone();
        let bumped = chart.f_plus().map(|v| v).unwrap();
        let mut vals = bumped.interior_values().unwrap().to_vec();
        vals[10] += 1.0;
        let bumped = ScalarField::finite(region.clone(), vals, bumped.trace().unwrap().to_vec()).unwrap();
        let dom = CausalDomain::new(chart.f_minus().clone(), bumped).unwrap();
        assert!(validate_domain(&dom).has(ViolationCode::LipschitzFail));

        let shifted = chart.f_plus().with_trace(vec![0.5]).unwrap();
        let dom = CausalDomain::new(chart.f_minus().clone(), shifted).unwrap();
        assert!(validate_domain(&dom).has(ViolationCode::TraceMismatch));

        let dom = CausalDomain::new(chart.f_minus().clone(), ScalarField::plus_infinity(region.clone())).unwrap();
        assert!(validate_domain(&dom).has(ViolationCode::MixedInfinity));

        let dom = CausalDomain::new(chart.f_plus().clone(), chart.f_minus().clone()).unwrap();
        assert!(validate_domain(&dom).has(ViolationCode::OrderFail));
    }

    #[test]
    fn contains_examples() {
        let g = circle(64);
        let chart = CausalDomain::minkowski_chart(g.clone(), 0, 0.0).unwrap();
        let at = |node: usize, t: f64| CoverPoint::new(*g.node(node), t);
        // node 16 is at angle π/2 from the center
        assert!(contains(&chart, &at(16, 0.0)).unwrap());
        assert!(!contains(&chart, &at(16, PI / 2.0)).unwrap());
        assert!(!contains(&chart, &at(0, 0.0)).unwrap());
        let off = CoverPoint::new(UnitPoint::from_angle(PI / 64.0), 0.0);
        assert!(contains(&chart, &off).is_ok());
        let g3 = Arc::new(SphereGrid::icosphere(0).unwrap());
        let (a, b, _) = g3.edges()[0];
        let c = g3
            .neighbors(a)
            .iter()
            .map(|&(n, _)| n)
            .find(|&n| n != b && g3.neighbors(b).iter().any(|&(m, _)| m == n))
            .unwrap();
        let centroid: Vec<f64> = (0..3).map(|k| g3.node(a).coords()[k] + g3.node(b).coords()[k] + g3.node(c).coords()[k]).collect();
        let full = CausalDomain::full_space(g3.clone());
        let far = CoverPoint::new(UnitPoint::new(&centroid).unwrap(), 0.0);
        assert!(matches!(contains(&full, &far), Err(Error::OffGrid { .. })));
        assert!(contains(&full, &CoverPoint::new(*g3.node(a), 5.0)).unwrap());
    }

    #[test]
    fn conjugate_detection_examples() {
        let g = circle(64);
        let full = Arc::new(Region::full(g.clone()));
        let band = CausalDomain::band(full.clone(), 0.0, PI + 0.2).unwrap();
        let w = detect_conjugate_pairs(&band).unwrap();
        assert!(!w.is_empty());
        assert!((w[0].t - 0.1).abs() < 1e-12);
        let de_sitter = CausalDomain::band(full, 0.0, PI).unwrap();
        assert!(detect_conjugate_pairs(&de_sitter).unwrap().is_empty());
        let chart = CausalDomain::minkowski_chart(g, 0, 0.0).unwrap();
        assert!(detect_conjugate_pairs(&chart).unwrap().is_empty());
        let odd = CausalDomain::full_space(circle(7));
        assert!(matches!(detect_conjugate_pairs(&odd), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn crossing_counts() {
        assert_eq!(crossing_count(&[-1.0, -0.5, 0.5, 1.0], 0.1), (1, false));
        assert_eq!(crossing_count(&[-1.0, 0.05, -1.0], 0.1), (0, true));
        assert_eq!(crossing_count(&[-1.0, 1.0, -1.0], 0.1), (2, false));
    }
}
