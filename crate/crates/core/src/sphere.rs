//! Round spheres S¹ and S²: unit points, geodesic distance, great-circle
//! arcs and reproducible grids.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths;

/// A point of the unit sphere in R² or R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    coords: [f64; 3],
    dim: usize,
}

impl UnitPoint {
    /// Normalizes `coords` (length 2 or 3) onto the unit sphere.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=3).contains(&dim) {
            return Err(invalid(format!("unit point needs 2 or 3 coordinates, got {dim}")));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(invalid("unit point must have finite nonzero norm"));
        }
        let mut c = [0.0; 3];
        for (dst, src) in c.iter_mut().zip(coords) {
            *dst = src / norm;
        }
        Ok(Self { coords: c, dim })
    }

    /// Point of S¹ at the given angle.
    pub fn from_angle(theta: f64) -> Self {
        Self { coords: [theta.cos(), theta.sin(), 0.0], dim: 2 }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    /// Ambient dimension n (2 for S¹, 3 for S²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn antipode(&self) -> Self {
        Self { coords: self.coords.map(|c| -c), dim: self.dim }
    }

    /// Angle in [0, 2π) of a point of S¹.
    pub fn angle(&self) -> f64 {
        let a = self.coords[1].atan2(self.coords[0]);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coords[0] * other.coords[0]
            + self.coords[1] * other.coords[1]
            + self.coords[2] * other.coords[2]
    }

    fn cross_norm(&self, other: &Self) -> f64 {
        let [a0, a1, a2] = self.coords;
        let [b0, b1, b2] = other.coords;
        let c0 = a1 * b2 - a2 * b1;
        let c1 = a2 * b0 - a0 * b2;
        let c2 = a0 * b1 - a1 * b0;
        (c0 * c0 + c1 * c1 + c2 * c2).sqrt()
    }
}

impl Serialize for UnitPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        UnitPoint::new(&v).map_err(serde::de::Error::custom)
    }
}

fn same_dim(a: &UnitPoint, b: &UnitPoint) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
    }
    Ok(())
}

/// Great-circle distance in [0, π].
///
/// Evaluated as `atan2(|a×b|, a·b)`, which agrees with the clamped arccos of
/// the inner product and keeps full precision near 0 and π.
pub fn geodesic_distance(a: &UnitPoint, b: &UnitPoint) -> Result<f64> {
    same_dim(a, b)?;
    Ok(distance_unchecked(a, b))
}

#[inline]
pub(crate) fn distance_unchecked(a: &UnitPoint, b: &UnitPoint) -> f64 {
    a.cross_norm(b).atan2(a.dot(b))
}

/// The point at arc length `s` from `a` along the minimizing great circle
/// toward `b`.
pub fn trace_geodesic(a: &UnitPoint, b: &UnitPoint, s: f64) -> Result<UnitPoint> {
    let dist = geodesic_distance(a, b)?;
    if !(s >= 0.0 && s <= dist + 1e-12) {
        return Err(invalid(format!("arc length {s} outside [0, {dist}]")));
    }
    if s == 0.0 {
        return Ok(*a);
    }
    if s >= dist {
        return Ok(*b);
    }
    let ab = a.dot(b);
    let mut u = [0.0; 3];
    for i in 0..3 {
        u[i] = b.coords[i] - ab * a.coords[i];
    }
    let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::AmbiguousGeodesic { s });
    }
    let (sin, cos) = s.sin_cos();
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = cos * a.coords[i] + sin * u[i] / norm;
    }
    UnitPoint::new(&c[..a.dim])
}

/// Generating recipe of a [`SphereGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridSpec {
    Circle { n: usize },
    Icosphere { subdivisions: u32 },
    Custom { nodes: Vec<Vec<f64>>, edges: Vec<[usize; 2]> },
}

/// A discretized round sphere: nodes, weighted edges and, when the node set
/// is centrally symmetric, the antipode permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    spec: GridSpec,
    dim: usize,
    nodes: Vec<UnitPoint>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    resolution_h: f64,
    antipode: Option<Vec<usize>>,
}

impl SphereGrid {
    pub fn build(spec: &GridSpec) -> Result<Self> {
        let (nodes, edges) = match spec {
            GridSpec::Circle { n } => circle(*n)?,
            GridSpec::Icosphere { subdivisions } => icosphere(*subdivisions)?,
            GridSpec::Custom { nodes, edges } => custom(nodes, edges)?,
        };
        Self::assemble(spec.clone(), nodes, edges)
    }

    pub fn circle(n: usize) -> Result<Self> {
        Self::build(&GridSpec::Circle { n })
    }

    pub fn icosphere(subdivisions: u32) -> Result<Self> {
        Self::build(&GridSpec::Icosphere { subdivisions })
    }

    fn assemble(spec: GridSpec, nodes: Vec<UnitPoint>, pairs: BTreeSet<(usize, usize)>) -> Result<Self> {
        let dim = nodes[0].dim;
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges = Vec::with_capacity(pairs.len());
        let mut resolution_h: f64 = 0.0;
        for (a, b) in pairs {
            let len = distance_unchecked(&nodes[a], &nodes[b]);
            adjacency[a].push((b, len));
            adjacency[b].push((a, len));
            edges.push((a, b, len));
            resolution_h = resolution_h.max(len);
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(w, _)| w);
        }
        if !paths::is_connected(&adjacency) {
            return Err(invalid("grid adjacency graph is not connected"));
        }
        let antipode = antipode_map(&nodes);
        Ok(Self { spec, dim, nodes, edges, adjacency, resolution_h, antipode })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Sphere dimension n−1 (1 for circles, 2 for icospheres).
    pub fn sphere_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[UnitPoint] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &UnitPoint {
        &self.nodes[i]
    }

    /// Edges `(a, b, length)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    /// Maximum edge length in radians.
    pub fn resolution_h(&self) -> f64 {
        self.resolution_h
    }

    /// Index of the node at −x, when the grid is antipode-closed.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        self.antipode.as_ref().map(|a| a[i])
    }

    pub fn has_antipodes(&self) -> bool {
        self.antipode.is_some()
    }

    /// Exact geodesic distance between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        distance_unchecked(&self.nodes[a], &self.nodes[b])
    }

    /// Nearest node, smallest index on ties.
    pub fn nearest_node(&self, p: &UnitPoint) -> Result<(usize, f64)> {
        same_dim(p, &self.nodes[0])?;
        Ok(self.nearest_among(p, 0..self.nodes.len()).expect("grid is nonempty"))
    }

    pub(crate) fn nearest_among(
        &self,
        p: &UnitPoint,
        candidates: impl IntoIterator<Item = usize>,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in candidates {
            let d = distance_unchecked(p, &self.nodes[i]);
            match best {
                Some((bi, bd)) if d > bd || (d == bd && i > bi) => {}
                _ => best = Some((i, d)),
            }
        }
        best
    }

    /// Multi-source shortest path lengths with per-source offsets.
    pub fn graph_distance(&self, sources: &[(usize, f64)]) -> Result<Vec<f64>> {
        if sources.is_empty() {
            return Err(invalid("graph_distance needs at least one source"));
        }
        for &(s, off) in sources {
            if s >= self.len() {
                return Err(invalid(format!("source node {s} out of range")));
            }
            if !off.is_finite() {
                return Err(invalid(format!("offset of source {s} is not finite")));
            }
        }
        Ok(paths::multi_source(&self.adjacency, sources, f64::INFINITY))
    }
}

fn circle(n: usize) -> Result<(Vec<UnitPoint>, BTreeSet<(usize, usize)>)> {
    if n < 3 {
        return Err(invalid(format!("circle grid needs n >= 3, got {n}")));
    }
    let nodes = (0..n)
        .map(|k| UnitPoint::from_angle(2.0 * PI * k as f64 / n as f64))
        .collect();
    let edges = (0..n).map(|k| ordered(k, (k + 1) % n)).collect();
    Ok((nodes, edges))
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn icosphere(subdivisions: u32) -> Result<(Vec<UnitPoint>, BTreeSet<(usize, usize)>)> {
    if subdivisions > 7 {
        return Err(invalid(format!("icosphere subdivisions {subdivisions} too large (max 7)")));
    }
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [t, 1.0, 0.0],
        [-t, 1.0, 0.0],
        [t, -1.0, 0.0],
        [-t, -1.0, 0.0],
        [1.0, 0.0, t],
        [1.0, 0.0, -t],
        [-1.0, 0.0, t],
        [-1.0, 0.0, -t],
        [0.0, t, 1.0],
        [0.0, -t, 1.0],
        [0.0, t, -1.0],
        [0.0, -t, -1.0],
    ]
    .into_iter()
    .map(normalize3)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 8, 4],
        [1, 10, 7],
        [2, 9, 11],
        [7, 3, 1],
        [0, 5, 10],
        [3, 9, 6],
        [3, 11, 9],
        [8, 6, 4],
        [2, 4, 9],
        [3, 7, 11],
        [4, 2, 0],
        [9, 4, 6],
        [2, 11, 5],
        [0, 10, 8],
        [5, 0, 2],
        [10, 5, 7],
        [1, 6, 8],
        [1, 8, 10],
        [6, 1, 3],
        [11, 7, 5],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |x: usize, y: usize| {
                *midpoints.entry(ordered(x, y)).or_insert_with(|| {
                    let (p, q) = (verts[x], verts[y]);
                    verts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    verts.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let mut edges = BTreeSet::new();
    for &[a, b, c] in &faces {
        edges.insert(ordered(a, b));
        edges.insert(ordered(b, c));
        edges.insert(ordered(c, a));
    }
    let nodes = verts
        .into_iter()
        .map(|v| UnitPoint { coords: v, dim: 3 })
        .collect();
    Ok((nodes, edges))
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn custom(nodes: &[Vec<f64>], edges: &[[usize; 2]]) -> Result<(Vec<UnitPoint>, BTreeSet<(usize, usize)>)> {
    if nodes.is_empty() {
        return Err(invalid("custom grid has no nodes"));
    }
    let pts = nodes
        .iter()
        .map(|c| UnitPoint::new(c))
        .collect::<Result<Vec<_>>>()?;
    let dim = pts[0].dim;
    if let Some(p) = pts.iter().find(|p| p.dim != dim) {
        return Err(Error::DimensionMismatch { left: dim, right: p.dim });
    }
    let mut set = BTreeSet::new();
    for &[a, b] in edges {
        if a >= pts.len() || b >= pts.len() {
            return Err(invalid(format!("edge ({a}, {b}) references a missing node")));
        }
        if a == b {
            return Err(invalid(format!("self-loop at node {a}")));
        }
        set.insert(ordered(a, b));
    }
    if pts.len() > 1 && set.is_empty() {
        return Err(invalid("custom grid has no edges"));
    }
    Ok((pts, set))
}

fn antipode_map(nodes: &[UnitPoint]) -> Option<Vec<usize>> {
    const SCALE: f64 = 1e7;
    let key = |c: &[f64; 3]| c.map(|x| (x * SCALE).round() as i64);
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        index.entry(key(&p.coords)).or_insert(i);
    }
    let mut map = Vec::with_capacity(nodes.len());
    for p in nodes {
        let target = p.antipode();
        let hit = index
            .get(&key(&target.coords))
            .copied()
            .filter(|&j| distance_unchecked(&target, &nodes[j]) < 1e-9)
            .or_else(|| {
                nodes
                    .iter()
                    .position(|q| distance_unchecked(&target, q) < 1e-9)
            })?;
        map.push(hit);
    }
    Some(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(x: f64, y: f64) -> UnitPoint {
        UnitPoint::new(&[x, y]).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(geodesic_distance(&p2(1.0, 0.0), &p2(1.0, 0.0)).unwrap(), 0.0);
        assert!((geodesic_distance(&p2(1.0, 0.0), &p2(-1.0, 0.0)).unwrap() - PI).abs() < 1e-15);
        assert!((geodesic_distance(&p2(1.0, 0.0), &p2(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = p2(1.0, 0.0);
        let b = UnitPoint::new(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            geodesic_distance(&a, &b),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn inputs_are_normalized() {
        let p = UnitPoint::new(&[3.0, 4.0, 0.0]).unwrap();
        let n = p.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-12);
        assert!(UnitPoint::new(&[0.0, 0.0]).is_err());
        assert!(UnitPoint::new(&[1.0]).is_err());
    }

    #[test]
    fn trace_examples() {
        let a = p2(1.0, 0.0);
        assert_eq!(trace_geodesic(&a, &p2(0.0, 1.0), 0.0).unwrap(), a);
        let mid = trace_geodesic(&a, &p2(0.0, 1.0), PI / 4.0).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((mid.coords()[0] - h).abs() < 1e-15 && (mid.coords()[1] - h).abs() < 1e-15);
        assert!(matches!(
            trace_geodesic(&a, &p2(-1.0, 0.0), 0.5),
            Err(Error::AmbiguousGeodesic { .. })
        ));
        // the endpoint of an antipodal pair is still well-defined
        assert_eq!(trace_geodesic(&a, &p2(-1.0, 0.0), PI).unwrap(), p2(-1.0, 0.0));
    }

    #[test]
    fn circle_grid() {
        let g = SphereGrid::circle(4).unwrap();
        assert_eq!(g.len(), 4);
        for (k, p) in g.nodes().iter().enumerate() {
            assert!((p.angle() - k as f64 * PI / 2.0).abs() < 1e-15);
        }
        for &(_, _, len) in g.edges() {
            assert!((len - PI / 2.0).abs() < 1e-15);
        }
        assert_eq!(g.antipode(1), Some(3));
        assert!(SphereGrid::circle(2).is_err());
        assert!(!SphereGrid::circle(5).unwrap().has_antipodes());
    }

    #[test]
    fn icosphere_combinatorics() {
        let g0 = SphereGrid::icosphere(0).unwrap();
        assert_eq!((g0.len(), g0.edges().len()), (12, 30));
        let g1 = SphereGrid::icosphere(1).unwrap();
        assert_eq!(g1.len(), 42);
        assert_eq!(SphereGrid::icosphere(3).unwrap().len(), 642);
        assert!(g1.has_antipodes());
        for i in 0..g1.len() {
            let j = g1.antipode(i).unwrap();
            assert!((g1.distance(i, j) - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_invariants() {
        for spec in [GridSpec::Circle { n: 17 }, GridSpec::Icosphere { subdivisions: 2 }] {
            let g = SphereGrid::build(&spec).unwrap();
            let mut hmax: f64 = 0.0;
            for &(a, b, len) in g.edges() {
                assert!((len - geodesic_distance(g.node(a), g.node(b)).unwrap()).abs() <= 1e-12);
                hmax = hmax.max(len);
            }
            assert_eq!(hmax, g.resolution_h());
            for p in g.nodes() {
                let n = p.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn custom_grid_errors() {
        let nodes = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        assert!(SphereGrid::build(&GridSpec::Custom { nodes: nodes.clone(), edges: vec![[0, 1]] }).is_err());
        assert!(SphereGrid::build(&GridSpec::Custom { nodes: nodes.clone(), edges: vec![[0, 3]] }).is_err());
        assert!(SphereGrid::build(&GridSpec::Custom { nodes: nodes.clone(), edges: vec![[1, 1]] }).is_err());
        let ok = SphereGrid::build(&GridSpec::Custom { nodes, edges: vec![[0, 1], [1, 2]] }).unwrap();
        assert_eq!(ok.edges().len(), 2);
    }

    #[test]
    fn grid_spec_json() {
        let s: GridSpec = serde_json::from_str(r#"{"kind":"circle","n":256}"#).unwrap();
        assert_eq!(s, GridSpec::Circle { n: 256 });
        let s: GridSpec = serde_json::from_str(r#"{"kind":"icosphere","subdivisions":3}"#).unwrap();
        assert_eq!(s, GridSpec::Icosphere { subdivisions: 3 });
        let s: GridSpec =
            serde_json::from_str(r#"{"kind":"custom","nodes":[[1,0],[0,1]],"edges":[[0,1]]}"#).unwrap();
        assert!(matches!(s, GridSpec::Custom { .. }));
        assert_eq!(serde_json::to_string(&GridSpec::Circle { n: 8 }).unwrap(), r#"{"kind":"circle","n":8}"#);
    }

    #[test]
    fn graph_distance_examples() {
        let g = SphereGrid::circle(8).unwrap();
        let d = g.graph_distance(&[(0, 0.0)]).unwrap();
        // four edges of length π/4, cross-checked against the exact distance
        let four_edges: f64 = (0..4).map(|k| g.distance(k, k + 1)).sum();
        assert!((d[4] - four_edges).abs() < 1e-15);
        assert!((d[4] - g.distance(0, 4)).abs() < 1e-12);

        let all: Vec<_> = (0..8).map(|i| (i, 0.0)).collect();
        assert!(g.graph_distance(&all).unwrap().iter().all(|&x| x == 0.0));
        assert!(g.graph_distance(&[]).is_err());
        assert!(g.graph_distance(&[(0, f64::NAN)]).is_err());
    }

    #[test]
    fn nearest_node_prefers_smallest_index() {
        let nodes = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let edges = vec![[0, 1], [1, 2], [2, 3], [3, 0]];
        let g = SphereGrid::build(&GridSpec::Custom { nodes, edges }).unwrap();
        // exactly between node 0 and node 1
        let (i, _) = g.nearest_node(&p2(1.0, 1.0)).unwrap();
        assert_eq!(i, 0);
    }
}
