//! Enveloping spaces `E = B × ℝ` over an immersed base graph `B`.
//!
//! The base is stored as a [`SphereGrid`] whose nodes are the sphere images
//! of the base points, so fields and regions over it reuse the grid types.
//! Distances in `B` are shortest-path lengths along base edges, never the
//! spherical distance of images: two base points with the same image can be
//! far apart.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cover::{CausalRelation, CoverPoint, RELATION_TOL};
use crate::domain::{validate_domain_with, CausalDomain, Diagnostics, ValidateOptions};
use crate::error::{invalid, Result};
use crate::field::{lower_envelope, upper_envelope, LipschitzMode, Metric, Region, ScalarField, Site};
use crate::paths;
use crate::sphere::{GridSpec, SphereGrid, UnitPoint};

/// Images closer than this count as the same sphere point.
const SAME_IMAGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersedBase {
    grid: Arc<SphereGrid>,
    r_inj: f64,
    slack: f64,
}

impl ImmersedBase {
    /// Builds a base from node images and edges, checking connectivity, edge
    /// lengths against `r_inj`, and injectivity of the images over every
    /// open base ball of radius `r_inj`.
    pub fn new(images: &[UnitPoint], edges: &[[usize; 2]], r_inj: f64, slack: f64) -> Result<Self> {
        Self::from_coords(images.iter().map(|p| p.coords().to_vec()).collect(), edges, r_inj, slack)
    }

    /// As [`ImmersedBase::new`], with images given as raw coordinates
    /// (normalized on construction, kept verbatim in the grid spec).
    pub fn from_coords(images: Vec<Vec<f64>>, edges: &[[usize; 2]], r_inj: f64, slack: f64) -> Result<Self> {
        if !(r_inj > 0.0 && r_inj.is_finite()) {
            return Err(invalid("r_inj must be positive and finite"));
        }
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err(invalid("slack must be nonnegative and finite"));
        }
        let spec = GridSpec::Custom { nodes: images, edges: edges.to_vec() };
        let grid = Arc::new(SphereGrid::build(&spec)?);
        let base = Self { grid, r_inj, slack };
        base.check()?;
        Ok(base)
    }

    fn check(&self) -> Result<()> {
        let g = &self.grid;
        if let Some(&(a, b, len)) = g.edges().iter().find(|e| e.2 > self.r_inj) {
            return Err(invalid(format!("edge ({a}, {b}) of length {len} exceeds r_inj = {}", self.r_inj)));
        }
        for v in 0..g.len() {
            let dist = paths::multi_source(g.adjacency(), &[(v, 0.0)], self.r_inj);
            let ball: Vec<usize> = (0..g.len()).filter(|&w| dist[w] < self.r_inj - SAME_IMAGE).collect();
            for (i, &a) in ball.iter().enumerate() {
                if let Some(&b) = ball[i + 1..].iter().find(|&&b| g.distance(a, b) <= SAME_IMAGE) {
                    return Err(invalid(format!(
                        "nodes {a} and {b} share an image within r_inj of node {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_inj(&self) -> f64 {
        self.r_inj
    }

    /// Declared edge-length discretization slack.
    pub fn slack(&self) -> f64 {
        self.slack
    }

    /// Image coordinates as supplied.
    pub fn raw_images(&self) -> &[Vec<f64>] {
        match self.grid.spec() {
            GridSpec::Custom { nodes, .. } => nodes,
            _ => unreachable!("bases are built from custom specs"),
        }
    }

    pub fn image(&self, b: usize) -> &UnitPoint {
        self.grid.node(b)
    }

    /// Edges as supplied.
    pub fn edges(&self) -> &[[usize; 2]] {
        match self.grid.spec() {
            GridSpec::Custom { edges, .. } => edges,
            _ => unreachable!("bases are built from custom specs"),
        }
    }

    /// Tolerance of [`e_causal_relation`].
    pub fn relation_tol(&self) -> f64 {
        RELATION_TOL.max(2.0 * self.slack)
    }

    /// All base distances from one node.
    pub fn distances_from(&self, b: usize) -> Vec<f64> {
        paths::single_source(self.grid.adjacency(), b)
    }

    /// Largest excess of base distance over the spherical distance of images
    /// among pairs `(v, w)` with `v` in `from`.
    pub fn path_gap(&self, from: impl IntoIterator<Item = usize>) -> f64 {
        from.into_iter()
            .map(|v| {
                let d = self.distances_from(v);
                (0..self.len()).map(|w| d[w] - self.grid.distance(v, w)).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

pub fn base_distance(base: &ImmersedBase, b1: usize, b2: usize) -> f64 {
    base.distances_from(b1)[b2]
}

/// A point `(b, t)` of `B × ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPoint {
    #[serde(rename = "node")]
    pub base_node: usize,
    pub t: f64,
}

impl EPoint {
    pub fn new(base_node: usize, t: f64) -> Self {
        Self { base_node, t }
    }
}

/// Relation of `q` as seen from `p`, with base distance in place of the
/// spherical one.
pub fn e_causal_relation(base: &ImmersedBase, p: &EPoint, q: &EPoint) -> CausalRelation {
    let d = base_distance(base, p.base_node, q.base_node);
    CausalRelation::classify(d, q.t - p.t, base.relation_tol())
}

pub fn develop(base: &ImmersedBase, p: &EPoint) -> CoverPoint {
    CoverPoint::new(*base.image(p.base_node), p.t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKind {
    SphereMinusNode { grid: GridSpec, node: usize },
    FullSphere { grid: GridSpec },
    Helix { h: f64, turns: usize },
}

pub fn make_base(kind: &BaseKind) -> Result<ImmersedBase> {
    match kind {
        BaseKind::SphereMinusNode { grid, node } => {
            let g = SphereGrid::build(grid)?;
            if *node >= g.len() {
                return Err(invalid(format!("node {node} out of range")));
            }
            let reindex = |i: usize| if i < *node { i } else { i - 1 };
            let images: Vec<UnitPoint> =
                (0..g.len()).filter(|i| i != node).map(|i| *g.node(i)).collect();
            let edges: Vec<[usize; 2]> = g
                .edges()
                .iter()
                .filter(|&&(a, b, _)| a != *node && b != *node)
                .map(|&(a, b, _)| [reindex(a), reindex(b)])
                .collect();
            ImmersedBase::new(&images, &edges, PI, 0.0)
        }
        BaseKind::FullSphere { grid } => {
            let g = SphereGrid::build(grid)?;
            let edges: Vec<[usize; 2]> = g.edges().iter().map(|&(a, b, _)| [a, b]).collect();
            ImmersedBase::new(g.nodes(), &edges, PI, 0.0)
        }
        BaseKind::Helix { h, turns } => {
            if !(*h > 0.0 && *h < PI) || *turns == 0 {
                return Err(invalid("helix needs 0 < h < π and at least one turn"));
            }
            let count = helix_count(*h, *turns);
            let images: Vec<UnitPoint> =
                (0..count).map(|k| UnitPoint::from_angle(helix_coordinate(*h, *turns, k))).collect();
            let edges: Vec<[usize; 2]> = (1..count).map(|k| [k - 1, k]).collect();
            ImmersedBase::new(&images, &edges, PI, 0.0)
        }
    }
}

fn helix_count(h: f64, turns: usize) -> usize {
    (2.0 * PI * turns as f64 / h).round() as usize
}

/// Line coordinate `x_k = −turns·π + k·h` of helix node `k`.
pub fn helix_coordinate(h: f64, turns: usize, k: usize) -> f64 {
    -(turns as f64) * PI + k as f64 * h
}

/// Helix node nearest to line coordinate `x`.
pub fn helix_node(h: f64, turns: usize, x: f64) -> Result<usize> {
    let k = ((x + turns as f64 * PI) / h).round();
    if k < 0.0 || k >= helix_count(h, turns) as f64 {
        return Err(invalid(format!("coordinate {x} lies outside the helix")));
    }
    Ok(k as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EOutcome {
    Domain(CausalDomain),
    /// The region has no boundary: whole fibers over it.
    FullFibers(CausalDomain),
    Rejected(Diagnostics),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EMaximalization {
    pub outcome: EOutcome,
    pub warnings: Vec<String>,
}

fn time_extent(dom: &CausalDomain) -> f64 {
    dom.region()
        .interior()
        .iter()
        .filter_map(|&x| dom.interval(x))
        .map(|(lo, hi)| hi - lo)
        .fold(0.0, f64::max)
}

/// Maximalization in `E`: envelopes of the boundary trace in the base path
/// metric. Domains whose fields fail the edgewise Lipschitz check are
/// rejected with diagnostics.
pub fn maximalize_in_e(base: &ImmersedBase, dom: &CausalDomain) -> Result<EMaximalization> {
    if dom.grid().spec() != base.grid().spec() {
        return Err(invalid("domain does not live on this base"));
    }
    let opts = ValidateOptions { mode: LipschitzMode::Edgewise, lip_tol: RELATION_TOL };
    let diag = validate_domain_with(dom, opts);
    if !diag.pass() {
        return Ok(EMaximalization { outcome: EOutcome::Rejected(diag), warnings: vec![] });
    }
    let mut warnings = Vec::new();
    let region = dom.region();
    if region.boundary().is_empty() {
        let full = CausalDomain::new(
            ScalarField::minus_infinity(region.clone()),
            ScalarField::plus_infinity(region.clone()),
        )?;
        return Ok(EMaximalization { outcome: EOutcome::FullFibers(full), warnings });
    }
    let sites = dom.f_plus().trace_sites();
    let g_plus = lower_envelope(&sites, region, Metric::Graph)?.with_trace(dom.f_plus().trace().unwrap().to_vec())?;
    let g_minus =
        upper_envelope(&sites, region, Metric::Graph)?.with_trace(dom.f_minus().trace().unwrap().to_vec())?;
    let out = CausalDomain::new(g_minus, g_plus)?.with_coincidence_tol(dom.coincidence_tol());
    for (name, d) in [("input", dom), ("output", &out)] {
        let extent = time_extent(d);
        if extent >= base.r_inj() {
            warnings.push(format!(
                "{name} time extent {extent:.6} reaches the injectivity scale {:.6}",
                base.r_inj()
            ));
        }
    }
    Ok(EMaximalization { outcome: EOutcome::Domain(out), warnings })
}

/// The strip `value ± scale·(d_B(x, ∂U))` over a base region, with constant
/// trace `value`; `scale < 1` gives a non-maximal domain.
pub fn thin_strip(base: &ImmersedBase, interior: Vec<usize>, value: f64, scale: f64) -> Result<CausalDomain> {
    let region = Arc::new(Region::new(base.grid().clone(), interior)?);
    let trace_sites: Vec<Site> = region.boundary().iter().map(|&b| Site::new(b, value)).collect();
    let env = lower_envelope(&trace_sites, &region, Metric::Graph)?;
    let plus = env.map(|v| value + scale * (v - value))?;
    let minus = env.map(|v| value - scale * (v - value))?;
    CausalDomain::new(minus, plus)
}
