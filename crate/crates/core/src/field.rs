//! Node-wise scalar fields over grid regions, 1-Lipschitz checks and the
//! distance inf/sup-convolutions
//!
//! ```text
//! lower(x) = min_s { v(s) + d(x, s) }      upper(x) = max_s { v(s) − d(x, s) }
//! ```
//!
//! that bound every causally convex domain and every eikonal function.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths;
use crate::sphere::SphereGrid;

/// Relative slack of the all-pairs Lipschitz check.
pub const ALL_PAIRS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Exterior,
    Interior,
    Boundary,
}

/// A set of interior nodes `U_h` together with its discrete boundary: the
/// exterior nodes having an interior neighbor.
#[derive(Debug, Clone)]
pub struct Region {
    grid: Arc<SphereGrid>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    role: Vec<NodeRole>,
    slot: Vec<usize>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
            && self.interior == other.interior
    }
}

impl Region {
    pub fn new(grid: Arc<SphereGrid>, interior: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = grid.len();
        let mut role = vec![NodeRole::Exterior; n];
        for i in interior {
            if i >= n {
                return Err(invalid(format!("interior node {i} out of range (grid has {n})")));
            }
            role[i] = NodeRole::Interior;
        }
        let interior: Vec<usize> = (0..n).filter(|&i| role[i] == NodeRole::Interior).collect();
        if interior.is_empty() {
            return Err(invalid("region interior is empty"));
        }
        for &i in &interior {
            for &(j, _) in grid.neighbors(i) {
                if role[j] == NodeRole::Exterior {
                    role[j] = NodeRole::Boundary;
                }
            }
        }
        let boundary: Vec<usize> = (0..n).filter(|&i| role[i] == NodeRole::Boundary).collect();
        let mut slot = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            slot[i] = k;
        }
        for (k, &i) in boundary.iter().enumerate() {
            slot[i] = k;
        }
        Ok(Self { grid, interior, boundary, role, slot })
    }

    /// The whole grid as interior (empty boundary).
    pub fn full(grid: Arc<SphereGrid>) -> Self {
        let n = grid.len();
        Self::new(grid, 0..n).expect("grids are nonempty")
    }

    /// Rebuilds a region and checks that the supplied boundary is exactly the
    /// recomputed one.
    pub fn from_parts(grid: Arc<SphereGrid>, interior: &[usize], boundary: &[usize]) -> Result<Self> {
        let region = Self::new(grid, interior.iter().copied())?;
        let mut b = boundary.to_vec();
        b.sort_unstable();
        b.dedup();
        if b != region.boundary {
            return Err(invalid(
                "region boundary does not match the exterior nodes adjacent to the interior",
            ));
        }
        Ok(region)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn role(&self, node: usize) -> NodeRole {
        self.role[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.role[node] == NodeRole::Interior
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.role[node] == NodeRole::Boundary
    }

    /// Interior or boundary.
    pub fn in_closure(&self, node: usize) -> bool {
        self.role[node] != NodeRole::Exterior
    }

    /// Position of `node` inside `interior()` or `boundary()`.
    pub fn slot(&self, node: usize) -> Option<usize> {
        match self.role[node] {
            NodeRole::Exterior => None,
            _ => Some(self.slot[node]),
        }
    }

    pub fn covers_grid(&self) -> bool {
        self.interior.len() == self.grid.len()
    }

    /// Interior ∪ boundary, sorted.
    pub fn closure(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&i| self.in_closure(i)).collect()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.interior.iter().all(|&i| other.is_interior(i))
    }
}

/// A value attached to one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub node: usize,
    pub value: f64,
}

impl Site {
    pub fn new(node: usize, value: f64) -> Self {
        Self { node, value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    /// Interior values in `Region::interior()` order and the boundary trace
    /// in `Region::boundary()` order.
    Finite { interior: Vec<f64>, trace: Vec<f64> },
    PlusInfinity,
    MinusInfinity,
}

/// An extended-real field on a region. Infinity is all-or-nothing and an
/// infinite field carries no boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    region: Arc<Region>,
    values: FieldValues,
}

impl ScalarField {
    pub fn finite(region: Arc<Region>, interior: Vec<f64>, trace: Vec<f64>) -> Result<Self> {
        if interior.len() != region.interior().len() {
            return Err(invalid(format!(
                "field has {} interior values for {} interior nodes",
                interior.len(),
                region.interior().len()
            )));
        }
        if trace.len() != region.boundary().len() {
            return Err(invalid(format!(
                "field has {} trace values for {} boundary nodes",
                trace.len(),
                region.boundary().len()
            )));
        }
        let inf_count = interior.iter().filter(|v| v.is_infinite()).count();
        if inf_count > 0 {
            let all_plus = interior.iter().all(|&v| v == f64::INFINITY);
            let all_minus = interior.iter().all(|&v| v == f64::NEG_INFINITY);
            return match (all_plus, all_minus) {
                (true, _) => Ok(Self::plus_infinity(region)),
                (_, true) => Ok(Self::minus_infinity(region)),
                _ => Err(invalid("infinite values must fill the whole field")),
            };
        }
        if interior.iter().chain(&trace).any(|v| v.is_nan()) {
            return Err(invalid("field contains NaN"));
        }
        if trace.iter().any(|v| v.is_infinite()) {
            return Err(invalid("boundary trace must be finite"));
        }
        Ok(Self { region, values: FieldValues::Finite { interior, trace } })
    }

    /// Samples `f` at every interior and boundary node.
    pub fn from_fn(region: Arc<Region>, f: impl Fn(usize) -> f64) -> Result<Self> {
        let interior = region.interior().iter().map(|&i| f(i)).collect();
        let trace = region.boundary().iter().map(|&i| f(i)).collect();
        Self::finite(region, interior, trace)
    }

    pub fn plus_infinity(region: Arc<Region>) -> Self {
        Self { region, values: FieldValues::PlusInfinity }
    }

    pub fn minus_infinity(region: Arc<Region>) -> Self {
        Self { region, values: FieldValues::MinusInfinity }
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn values(&self) -> &FieldValues {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.values, FieldValues::Finite { .. })
    }

    pub fn interior_values(&self) -> Option<&[f64]> {
        match &self.values {
            FieldValues::Finite { interior, .. } => Some(interior),
            _ => None,
        }
    }

    pub fn trace(&self) -> Option<&[f64]> {
        match &self.values {
            FieldValues::Finite { trace, .. } => Some(trace),
            _ => None,
        }
    }

    /// Boundary trace as sites.
    pub fn trace_sites(&self) -> Vec<Site> {
        match self.trace() {
            Some(trace) => self
                .region
                .boundary()
                .iter()
                .zip(trace)
                .map(|(&node, &value)| Site::new(node, value))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Value at an interior node, trace at a boundary node, `None` outside.
    /// Infinite fields return ±∞ on the interior and `None` on the boundary.
    pub fn value_at(&self, node: usize) -> Option<f64> {
        let slot = self.region.slot(node)?;
        let interior = self.region.is_interior(node);
        match &self.values {
            FieldValues::Finite { interior: v, trace } => {
                Some(if interior { v[slot] } else { trace[slot] })
            }
            FieldValues::PlusInfinity => interior.then_some(f64::INFINITY),
            FieldValues::MinusInfinity => interior.then_some(f64::NEG_INFINITY),
        }
    }

    /// Same interior values, new trace.
    pub fn with_trace(&self, trace: Vec<f64>) -> Result<Self> {
        match &self.values {
            FieldValues::Finite { interior, .. } => {
                Self::finite(self.region.clone(), interior.clone(), trace)
            }
            _ => Err(Error::NotApplicable("infinite fields carry no trace".into())),
        }
    }

    /// Pointwise map over interior and trace values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        match &self.values {
            FieldValues::Finite { interior, trace } => Self::finite(
                self.region.clone(),
                interior.iter().map(|&v| f(v)).collect(),
                trace.iter().map(|&v| f(v)).collect(),
            ),
            FieldValues::PlusInfinity | FieldValues::MinusInfinity => {
                let mapped = f(match self.values {
                    FieldValues::PlusInfinity => f64::INFINITY,
                    _ => f64::NEG_INFINITY,
                });
                if mapped == f64::INFINITY {
                    Ok(Self::plus_infinity(self.region.clone()))
                } else if mapped == f64::NEG_INFINITY {
                    Ok(Self::minus_infinity(self.region.clone()))
                } else {
                    Err(invalid("cannot map an infinite field to finite values"))
                }
            }
        }
    }

    /// Time reversal t ↦ −t.
    pub fn negated(&self) -> Self {
        self.map(|v| -v).expect("negation preserves the field shape")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzMode {
    /// Grid edges only, against edge lengths.
    Edgewise,
    /// Every pair of nodes, against the exact geodesic distance.
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzViolation {
    pub a: usize,
    pub b: usize,
    pub jump: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub pass: bool,
    pub violations: Vec<LipschitzViolation>,
}

/// Checks `|f(a) − f(b)| ≤ len(a, b)·(1 + lip_tol)` over interior ∪ boundary.
pub fn check_lipschitz(field: &ScalarField, mode: LipschitzMode, lip_tol: f64) -> Result<LipschitzReport> {
    if !field.is_finite() {
        return Err(Error::NotApplicable("Lipschitz check of an infinite field".into()));
    }
    let region = field.region();
    let grid = region.grid();
    let ok = |jump: f64, d: f64| jump <= d * (1.0 + lip_tol);
    let mut violations = Vec::new();
    match mode {
        LipschitzMode::Edgewise => {
            for &(a, b, len) in grid.edges() {
                if let (Some(fa), Some(fb)) = (field.value_at(a), field.value_at(b)) {
                    let jump = (fa - fb).abs();
                    if !ok(jump, len) {
                        violations.push(LipschitzViolation { a, b, jump, distance: len });
                    }
                }
            }
        }
        LipschitzMode::AllPairs => {
            let nodes = region.closure();
            let values: Vec<f64> = nodes.iter().map(|&i| field.value_at(i).unwrap()).collect();
            violations = (0..nodes.len())
                .into_par_iter()
                .flat_map_iter(|i| {
                    let (nodes, values) = (&nodes, &values);
                    (i + 1..nodes.len()).filter_map(move |j| {
                        let d = grid.distance(nodes[i], nodes[j]);
                        let jump = (values[i] - values[j]).abs();
                        (!ok(jump, d)).then_some(LipschitzViolation {
                            a: nodes[i],
                            b: nodes[j],
                            jump,
                            distance: d,
                        })
                    })
                })
                .collect();
        }
    }
    Ok(LipschitzReport { pass: violations.is_empty(), violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Exact geodesic distance, brute force over all sites.
    Exact,
    /// Multi-source shortest paths along grid edges.
    Graph,
}

/// Which side of the time axis an envelope or eikonal function bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    /// Future boundary: inf of `v + d`.
    Upper,
    /// Past boundary: sup of `v − d`.
    Lower,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Upper => 1.0,
            Sheet::Lower => -1.0,
        }
    }
}

fn check_sites(grid: &SphereGrid, sites: &[Site]) -> Result<()> {
    for s in sites {
        if s.node >= grid.len() {
            return Err(invalid(format!("site node {} out of range", s.node)));
        }
        if !s.value.is_finite() {
            return Err(invalid(format!("site value at node {} is not finite", s.node)));
        }
    }
    Ok(())
}

/// Evaluates the envelope of `sites` at every grid node.
pub(crate) fn envelope_on_grid(grid: &SphereGrid, sites: &[Site], metric: Metric, sheet: Sheet) -> Vec<f64> {
    let sign = sheet.sign();
    match metric {
        Metric::Exact => (0..grid.len())
            .into_par_iter()
            .map(|x| exact_envelope_at(grid, sites, x, sheet))
            .collect(),
        Metric::Graph => {
            // run the lower envelope on sign-flipped values
            let sources: Vec<(usize, f64)> = sites.iter().map(|s| (s.node, sign * s.value)).collect();
            paths::multi_source(grid.adjacency(), &sources, f64::INFINITY)
                .into_iter()
                .map(|v| sign * v)
                .collect()
        }
    }
}

pub(crate) fn exact_envelope_at(grid: &SphereGrid, sites: &[Site], x: usize, sheet: Sheet) -> f64 {
    match sheet {
        Sheet::Upper => sites
            .iter()
            .map(|s| s.value + grid.distance(x, s.node))
            .fold(f64::INFINITY, f64::min),
        Sheet::Lower => sites
            .iter()
            .map(|s| s.value - grid.distance(x, s.node))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

fn envelope(sites: &[Site], targets: &Arc<Region>, metric: Metric, sheet: Sheet) -> Result<ScalarField> {
    let grid = targets.grid();
    check_sites(grid, sites)?;
    if sites.is_empty() {
        return Ok(match sheet {
            Sheet::Upper => ScalarField::plus_infinity(targets.clone()),
            Sheet::Lower => ScalarField::minus_infinity(targets.clone()),
        });
    }
    let eval = |nodes: &[usize]| -> Vec<f64> {
        match metric {
            Metric::Exact => nodes
                .par_iter()
                .map(|&x| exact_envelope_at(grid, sites, x, sheet))
                .collect(),
            Metric::Graph => {
                let all = envelope_on_grid(grid, sites, metric, sheet);
                nodes.iter().map(|&x| all[x]).collect()
            }
        }
    };
    ScalarField::finite(targets.clone(), eval(targets.interior()), eval(targets.boundary()))
}

/// `g(x) = min_s (value(s) + dist(x, s))` on the interior and boundary of
/// `targets`. No sites gives the field ≡ +∞.
pub fn lower_envelope(sites: &[Site], targets: &Arc<Region>, metric: Metric) -> Result<ScalarField> {
    envelope(sites, targets, metric, Sheet::Upper)
}

/// `g(x) = max_s (value(s) − dist(x, s))`. No sites gives the field ≡ −∞.
pub fn upper_envelope(sites: &[Site], targets: &Arc<Region>, metric: Metric) -> Result<ScalarField> {
    envelope(sites, targets, metric, Sheet::Lower)
}

/// The envelope bounding the given sheet: [`lower_envelope`] for the upper
/// sheet, [`upper_envelope`] for the lower one.
pub fn sheet_envelope(sites: &[Site], targets: &Arc<Region>, metric: Metric, sheet: Sheet) -> Result<ScalarField> {
    envelope(sites, targets, metric, sheet)
}
