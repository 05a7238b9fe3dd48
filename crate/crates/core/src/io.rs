//! JSON documents for regions, fields, domains, surfaces, site sets and
//! bases. Conversion to and from the in-memory types is exact: floats are
//! written in shortest round-trip form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{CausalDomain, SurfaceGraph, DEFAULT_COINCIDENCE_TOL};
use crate::duality::AchronalSet;
use crate::enveloping::ImmersedBase;
use crate::error::{invalid, Result};
use crate::field::{FieldValues, Region, ScalarField, Site};
use crate::sphere::{GridSpec, SphereGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    pub interior: Vec<usize>,
    /// Derived from the interior when omitted; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<usize>>,
}

impl RegionJson {
    pub fn from_region(r: &Region) -> Self {
        Self { interior: r.interior().to_vec(), boundary: Some(r.boundary().to_vec()) }
    }

    pub fn to_region(&self, grid: Arc<SphereGrid>) -> Result<Arc<Region>> {
        Ok(Arc::new(match &self.boundary {
            Some(b) => Region::from_parts(grid, &self.interior, b)?,
            None => Region::new(grid, self.interior.iter().copied())?,
        }))
    }
}

/// Either sampled values or an infinity flag (`"+"`, `"-"` or `"−"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldBody {
    Finite { values: Vec<f64>, trace: Vec<f64> },
    Infinite { inf: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionJson>,
    #[serde(flatten)]
    pub body: FieldBody,
}

impl FieldJson {
    pub fn from_field(f: &ScalarField, with_region: bool) -> Self {
        let body = match f.values() {
            FieldValues::Finite { interior, trace } => {
                FieldBody::Finite { values: interior.clone(), trace: trace.clone() }
            }
            FieldValues::PlusInfinity => FieldBody::Infinite { inf: "+".into() },
            FieldValues::MinusInfinity => FieldBody::Infinite { inf: "-".into() },
        };
        Self { region: with_region.then(|| RegionJson::from_region(f.region())), body }
    }

    /// Builds the field over `region`, or over its own region when `region`
    /// is `None`. An embedded region must agree with a given one.
    pub fn to_field(&self, grid: &Arc<SphereGrid>, region: Option<&Arc<Region>>) -> Result<ScalarField> {
        let region = match (region, &self.region) {
            (Some(r), Some(own)) => {
                if own.to_region(grid.clone())?.as_ref() != r.as_ref() {
                    return Err(invalid("field region differs from the enclosing region"));
                }
                r.clone()
            }
            (Some(r), None) => r.clone(),
            (None, Some(own)) => own.to_region(grid.clone())?,
            (None, None) => return Err(invalid("field has no region")),
        };
        match &self.body {
            FieldBody::Finite { values, trace } => ScalarField::finite(region, values.clone(), trace.clone()),
            FieldBody::Infinite { inf } => match inf.as_str() {
                "+" => Ok(ScalarField::plus_infinity(region)),
                "-" | "\u{2212}" => Ok(ScalarField::minus_infinity(region)),
                other => Err(invalid(format!("unknown infinity flag {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainJson {
    /// Optional when the grid comes from elsewhere (a base file).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub region: RegionJson,
    pub f_minus: FieldJson,
    pub f_plus: FieldJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincidence_tol: Option<f64>,
}

impl DomainJson {
    pub fn from_domain(d: &CausalDomain) -> Self {
        Self {
            grid: Some(d.grid().spec().clone()),
            region: RegionJson::from_region(d.region()),
            f_minus: FieldJson::from_field(d.f_minus(), false),
            f_plus: FieldJson::from_field(d.f_plus(), false),
            coincidence_tol: (d.coincidence_tol() != DEFAULT_COINCIDENCE_TOL).then(|| d.coincidence_tol()),
        }
    }

    /// Builds the domain on `grid`, or on the grid named in the document.
    pub fn to_domain(&self, grid: Option<Arc<SphereGrid>>) -> Result<CausalDomain> {
        let grid = resolve_grid(self.grid.as_ref(), grid)?;
        let region = self.region.to_region(grid.clone())?;
        let dom = CausalDomain::new(
            self.f_minus.to_field(&grid, Some(&region))?,
            self.f_plus.to_field(&grid, Some(&region))?,
        )?;
        Ok(match self.coincidence_tol {
            Some(tol) => dom.with_coincidence_tol(tol),
            None => dom,
        })
    }
}

fn resolve_grid(spec: Option<&GridSpec>, given: Option<Arc<SphereGrid>>) -> Result<Arc<SphereGrid>> {
    match (spec, given) {
        (Some(s), Some(g)) => {
            if g.spec() != s {
                return Err(invalid("document grid differs from the supplied grid"));
            }
            Ok(g)
        }
        (None, Some(g)) => Ok(g),
        (Some(s), None) => Ok(Arc::new(SphereGrid::build(s)?)),
        (None, None) => Err(invalid("no grid given")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJson {
    pub grid: GridSpec,
    pub h: FieldJson,
}

impl SurfaceJson {
    pub fn from_surface(s: &SurfaceGraph) -> Self {
        Self { grid: s.region().grid().spec().clone(), h: FieldJson::from_field(s.h(), true) }
    }

    pub fn to_surface(&self, grid: Option<Arc<SphereGrid>>) -> Result<SurfaceGraph> {
        let grid = resolve_grid(Some(&self.grid), grid)?;
        SurfaceGraph::new(self.h.to_field(&grid, None)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchronalJson {
    pub grid: GridSpec,
    /// `[node, value]` pairs.
    pub sites: Vec<(usize, f64)>,
}

impl AchronalJson {
    pub fn from_set(s: &AchronalSet) -> Self {
        Self { grid: s.grid().spec().clone(), sites: s.sites().iter().map(|s| (s.node, s.value)).collect() }
    }

    pub fn to_set(&self, grid: Option<Arc<SphereGrid>>) -> Result<AchronalSet> {
        let grid = resolve_grid(Some(&self.grid), grid)?;
        AchronalSet::new(grid, self.sites.iter().map(|&(n, v)| Site::new(n, v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseNodeJson {
    pub image: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseJson {
    pub nodes: Vec<BaseNodeJson>,
    pub edges: Vec<[usize; 2]>,
    pub r_inj: f64,
    #[serde(default)]
    pub slack: f64,
}

impl BaseJson {
    pub fn from_base(b: &ImmersedBase) -> Self {
        Self {
            nodes: b.raw_images().iter().map(|c| BaseNodeJson { image: c.clone() }).collect(),
            edges: b.edges().to_vec(),
            r_inj: b.r_inj(),
            slack: b.slack(),
        }
    }

    pub fn to_base(&self) -> Result<ImmersedBase> {
        let images = self.nodes.iter().map(|n| n.image.clone()).collect();
        ImmersedBase::from_coords(images, &self.edges, self.r_inj, self.slack)
    }
}
