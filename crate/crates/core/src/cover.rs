//! Points and causal relations of the universal cover of Einstein universe,
//! written in the fixed decomposition Sⁿ⁻¹ × ℝ.
//!
//! Two points are compared through the spherical distance `D` of their
//! spatial parts and their time difference `Δ`: the lightcone is `D = |Δ|`,
//! the chronological future is `D < Δ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sphere::{distance_unchecked, geodesic_distance, UnitPoint};

/// Band separating the lightcone from the chronological and spacelike
/// regions.
pub const RELATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub x: UnitPoint,
    pub t: f64,
}

impl CoverPoint {
    pub fn new(x: UnitPoint, t: f64) -> Self {
        Self { x, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalRelation {
    Equal,
    ChronologicalFuture,
    ChronologicalPast,
    LightlikeFuture,
    LightlikePast,
    Unrelated,
}

impl CausalRelation {
    /// Classifies a spatial separation `d` and a time difference `dt`.
    pub fn classify(d: f64, dt: f64, tol: f64) -> Self {
        if d <= tol && dt.abs() <= tol {
            Self::Equal
        } else if d < dt - tol {
            Self::ChronologicalFuture
        } else if d < -dt - tol {
            Self::ChronologicalPast
        } else if (d - dt.abs()).abs() <= tol {
            if dt > 0.0 {
                Self::LightlikeFuture
            } else {
                Self::LightlikePast
            }
        } else {
            Self::Unrelated
        }
    }

    /// The relation seen from the other point.
    pub fn mirror(self) -> Self {
        match self {
            Self::ChronologicalFuture => Self::ChronologicalPast,
            Self::ChronologicalPast => Self::ChronologicalFuture,
            Self::LightlikeFuture => Self::LightlikePast,
            Self::LightlikePast => Self::LightlikeFuture,
            other => other,
        }
    }

    /// Causally related in the future direction (J⁺ minus the point itself).
    pub fn is_causal_future(self) -> bool {
        matches!(self, Self::ChronologicalFuture | Self::LightlikeFuture)
    }

    pub fn is_causal_past(self) -> bool {
        matches!(self, Self::ChronologicalPast | Self::LightlikePast)
    }

    pub fn is_chronological(self) -> bool {
        matches!(self, Self::ChronologicalFuture | Self::ChronologicalPast)
    }

    pub fn is_causal(self) -> bool {
        !matches!(self, Self::Unrelated)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::ChronologicalFuture => "chronological_future",
            Self::ChronologicalPast => "chronological_past",
            Self::LightlikeFuture => "lightlike_future",
            Self::LightlikePast => "lightlike_past",
            Self::Unrelated => "unrelated",
        }
    }
}

/// Relation of `q` as seen from `p`, with the default tolerance.
pub fn causal_relation(p: &CoverPoint, q: &CoverPoint) -> Result<CausalRelation> {
    causal_relation_tol(p, q, RELATION_TOL)
}

pub fn causal_relation_tol(p: &CoverPoint, q: &CoverPoint, tol: f64) -> Result<CausalRelation> {
    let d = geodesic_distance(&p.x, &q.x)?;
    Ok(CausalRelation::classify(d, q.t - p.t, tol))
}

/// σ(x, t) = (−x, t + π).
pub fn sigma(p: &CoverPoint) -> CoverPoint {
    CoverPoint::new(p.x.antipode(), p.t + PI)
}

pub fn sigma_inverse(p: &CoverPoint) -> CoverPoint {
    CoverPoint::new(p.x.antipode(), p.t - PI)
}

/// δᵏ(x, t) = (x, t + 2πk).
pub fn delta(p: &CoverPoint, k: i64) -> CoverPoint {
    CoverPoint::new(p.x, p.t + 2.0 * PI * k as f64)
}

fn same_point(a: &CoverPoint, b: &CoverPoint, tol: f64) -> bool {
    a.x.dim() == b.x.dim() && distance_unchecked(&a.x, &b.x) <= tol && (a.t - b.t).abs() <= tol
}

/// Whether one point is the image of the other under σ.
pub fn is_conjugate_pair(p: &CoverPoint, q: &CoverPoint) -> bool {
    same_point(q, &sigma(p), RELATION_TOL) || same_point(p, &sigma(q), RELATION_TOL)
}

/// Which of the three affine charts attached to `center` contains `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    Mink0,
    MinkPlus,
    MinkMinus,
    Boundary,
}

pub fn chart_classify(center: &CoverPoint, q: &CoverPoint) -> Result<Chart> {
    let rel = causal_relation(center, q)?;
    if rel == CausalRelation::Unrelated {
        return Ok(Chart::Mink0);
    }
    if rel == CausalRelation::ChronologicalFuture
        && causal_relation(&sigma(center), q)? == CausalRelation::Unrelated
    {
        return Ok(Chart::MinkPlus);
    }
    if rel == CausalRelation::ChronologicalPast
        && causal_relation(&sigma_inverse(center), q)? == CausalRelation::Unrelated
    {
        return Ok(Chart::MinkMinus);
    }
    Ok(Chart::Boundary)
}

/// An isotropic vector `(cos t, sin t, x)` of R²ⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KleinVector {
    pub u: f64,
    pub v: f64,
    x: [f64; 3],
    dim: usize,
}

impl KleinVector {
    pub fn spatial(&self) -> &[f64] {
        &self.x[..self.dim]
    }

    /// All components `(u, v, x₁, …, xₙ)`.
    pub fn components(&self) -> Vec<f64> {
        let mut c = vec![self.u, self.v];
        c.extend_from_slice(self.spatial());
        c
    }
}

pub fn to_klein(p: &CoverPoint) -> KleinVector {
    let (v, u) = p.t.sin_cos();
    let mut x = [0.0; 3];
    x[..p.x.dim()].copy_from_slice(p.x.coords());
    KleinVector { u, v, x, dim: p.x.dim() }
}

/// The symmetric bilinear form of `−u² − v² + x₁² + … + xₙ²`.
pub fn q_form(a: &KleinVector, b: &KleinVector) -> f64 {
    -a.u * b.u - a.v * b.v + a.x[0] * b.x[0] + a.x[1] * b.x[1] + a.x[2] * b.x[2]
}
