use std::path::Path;
use std::sync::Arc;

use anyhow::anyhow;
use serde::{Deserialize, Serialize};

use eincausal::cover::{causal_relation, causal_relation_tol, q_form, to_klein, CoverPoint, RELATION_TOL};
use eincausal::domain::{
    cauchy_development_of_graph, causal_convexity_oracle, development_curve_oracle, shadow as shadow_of,
    shadows_distinguish, validate_cauchy_surface_with, validate_domain_with, CausalDomain, Diagnostics,
    SurfaceGraph, ValidateOptions,
};
use eincausal::duality::{check_achronal, dual_by_definition, dual_by_formula, Dual};
use eincausal::enveloping::{
    develop, e_causal_relation, make_base as build_base, maximalize_in_e, BaseKind, EOutcome, EPoint, ImmersedBase,
};
use eincausal::field::{ScalarField, Sheet};
use eincausal::io::{AchronalJson, BaseJson, DomainJson, SurfaceJson};
use eincausal::maximality::{
    default_tol, eikonal_envelopes, geodesic_certificate, is_locally_eikonal, is_maximal as verdict_of,
    maximalize as maximalize_domain, Certificate, LocalityReport, Maximalized, Verdict,
};
use eincausal::sphere::SphereGrid;

use crate::input::{Artifact, Failure, Session, Status};
pub use crate::input::Outcome;
use crate::{BaseKindArg, Lipschitz, SheetArg};

type Res = Result<Outcome, Failure>;

fn load_domain(s: &mut Session, path: &Path) -> Result<CausalDomain, Failure> {
    let doc: DomainJson = s.load(path)?;
    let dom = doc.to_domain(s.grid_flag()?)?;
    s.use_grid(dom.grid().spec());
    Ok(dom)
}

fn load_surface(s: &mut Session, path: &Path, grid: Option<Arc<SphereGrid>>) -> Result<SurfaceGraph, Failure> {
    let doc: SurfaceJson = s.load(path)?;
    let grid = match grid {
        Some(g) => Some(g),
        None => s.grid_flag()?,
    };
    let surface = doc.to_surface(grid)?;
    s.use_grid(surface.region().grid().spec());
    Ok(surface)
}

fn load_base(s: &mut Session, path: &Path) -> Result<ImmersedBase, Failure> {
    let doc: BaseJson = s.load(path)?;
    let base = doc.to_base()?;
    s.use_grid(base.grid().spec());
    Ok(base)
}

fn domain_artifact(dom: &CausalDomain) -> Result<Artifact, Failure> {
    Artifact::json(&DomainJson::from_domain(dom))
}

#[derive(Serialize)]
struct ValidateOut<'a> {
    domain: &'a Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    surface: Option<&'a Diagnostics>,
}

pub fn validate(s: &mut Session, path: &Path, lipschitz: Lipschitz, surface: Option<&Path>) -> Res {
    let dom = load_domain(s, path)?;
    let mut opts = match lipschitz {
        Lipschitz::AllPairs => ValidateOptions::default(),
        Lipschitz::Edgewise => ValidateOptions::edgewise(dom.grid()),
    };
    if let Some(t) = s.global.tol {
        opts.lip_tol = t;
    }
    let diag = validate_domain_with(&dom, opts);
    let surface_diag = match surface {
        Some(p) => {
            let surf = load_surface(s, p, Some(dom.grid().clone()))?;
            Some(validate_cauchy_surface_with(&dom, &surf, s.samples(200), s.global.seed, opts))
        }
        None => None,
    };
    let pass = diag.pass() && surface_diag.as_ref().is_none_or(Diagnostics::pass);
    let artifact = Artifact::json(&ValidateOut { domain: &diag, surface: surface_diag.as_ref() })?;
    let mut out = Outcome::new(artifact, if pass { Status::Pass } else { Status::Fail }, if pass { "pass" } else { "fail" })
        .tol("lip_tol", opts.lip_tol)
        .warnings(diag.warnings.iter().cloned());
    for v in diag.violations.iter().chain(surface_diag.iter().flat_map(|d| &d.violations)) {
        out = out.witness(v);
    }
    if let Some(d) = &surface_diag {
        out = out.warnings(d.warnings.iter().cloned());
    }
    Ok(out)
}

#[derive(Deserialize)]
struct PointPair<P> {
    p: P,
    q: P,
}

#[derive(Serialize)]
struct ClassifyOut {
    relation: &'static str,
    q_form: f64,
    distance: f64,
    dt: f64,
}

pub fn classify(s: &mut Session, path: &Path) -> Res {
    let pair: PointPair<CoverPoint> = s.load(path)?;
    let tol = s.global.tol.unwrap_or(RELATION_TOL);
    let rel = causal_relation_tol(&pair.p, &pair.q, tol)?;
    let out = ClassifyOut {
        relation: rel.tag(),
        q_form: q_form(&to_klein(&pair.p), &to_klein(&pair.q)),
        distance: eincausal::sphere::geodesic_distance(&pair.p.x, &pair.q.x)?,
        dt: pair.q.t - pair.p.t,
    };
    Ok(Outcome::new(Artifact::json(&out)?, Status::Pass, rel.tag()).tol("relation_tol", tol))
}

#[derive(Serialize)]
struct EmptyDual {
    empty: bool,
}

pub fn dual(s: &mut Session, path: &Path, by_definition: bool, time_step: Option<f64>) -> Res {
    let doc: AchronalJson = s.load(path)?;
    let set = doc.to_set(s.grid_flag()?)?;
    s.use_grid(set.grid().spec());
    let report = check_achronal(&set);
    if !report.pass {
        let mut out = Outcome::new(Artifact::json(&report)?, Status::Fail, "not_achronal");
        for pair in &report.pairs {
            out = out.witness(pair);
        }
        return Ok(out);
    }
    if by_definition {
        let step = time_step.unwrap_or(set.grid().resolution_h() / 4.0);
        let sampled = dual_by_definition(&set, step)?;
        return Ok(Outcome::new(Artifact::json(&sampled)?, Status::Pass, "sampled").tol("time_step", step));
    }
    Ok(match dual_by_formula(&set)? {
        Dual::Domain(d) => Outcome::new(domain_artifact(&d)?, Status::Pass, "domain"),
        Dual::Empty => Outcome::new(Artifact::json(&EmptyDual { empty: true })?, Status::Pass, "empty"),
    })
}

#[derive(Serialize)]
struct ShadowOut {
    nodes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    other_nodes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinct: Option<bool>,
}

pub fn shadow(s: &mut Session, point: &str, surface: &Path, other: Option<&str>) -> Res {
    let surf = load_surface(s, surface, None)?;
    let p: CoverPoint = s.load_inline(point)?;
    let nodes = shadow_of(&p, &surf)?;
    let mut warnings = Vec::new();
    let (other_nodes, distinct) = match other {
        Some(arg) => {
            let q: CoverPoint = s.load_inline(arg)?;
            let cmp = shadows_distinguish(&p, &q, &surf)?;
            warnings = cmp.warnings;
            (Some(shadow_of(&q, &surf)?), Some(cmp.distinct))
        }
        None => (None, None),
    };
    let verdict = match distinct {
        Some(true) => "distinct",
        Some(false) => "equal",
        None => "shadow",
    };
    let artifact = Artifact::json(&ShadowOut { nodes, other_nodes, distinct })?;
    Ok(Outcome::new(artifact, Status::Pass, verdict).warnings(warnings))
}

pub fn cauchy_dev(s: &mut Session, path: &Path) -> Res {
    let surf = load_surface(s, path, None)?;
    let dev = cauchy_development_of_graph(&surf)?;
    let mut out = if dev.full_space {
        Outcome::new(domain_artifact(&dev.domain)?, Status::FullSpace, "full_space")
    } else {
        Outcome::new(domain_artifact(&dev.domain)?, Status::Pass, "domain")
    };
    if !dev.null_contact.is_empty() {
        out = out.warnings([format!(
            "graph is null (touches its development) at {} nodes; crossing counts there are not adjudicated",
            dev.null_contact.len()
        )]);
    }
    Ok(out)
}

pub fn maximalize(s: &mut Session, path: &Path) -> Res {
    let dom = load_domain(s, path)?;
    Ok(match maximalize_domain(&dom)? {
        Maximalized::Domain(m) => Outcome::new(domain_artifact(&m)?, Status::Pass, "domain"),
        Maximalized::FullSpace => {
            let full = CausalDomain::full_space(dom.grid().clone());
            Outcome::new(domain_artifact(&full)?, Status::FullSpace, "full_space")
        }
    })
}

#[derive(Serialize)]
struct VerdictOut {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
    tol: f64,
}

pub fn is_maximal(s: &mut Session, path: &Path) -> Res {
    let dom = load_domain(s, path)?;
    let tol = s.global.tol.unwrap_or_else(|| default_tol(&dom));
    let verdict = verdict_of(&dom, tol)?;
    let (status, deviation) = match &verdict {
        Verdict::Maximal => (Status::Pass, None),
        Verdict::Extendable { deviation, .. } => (Status::Fail, Some(*deviation)),
        Verdict::FullSpace => (Status::FullSpace, None),
    };
    let artifact = Artifact::json(&VerdictOut { verdict: verdict.tag(), deviation, tol })?;
    Ok(Outcome::new(artifact, status, verdict.tag()).tol("tol", tol))
}

#[derive(Serialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum SheetName {
    Upper,
    Lower,
}

#[derive(Serialize)]
struct CertEntry {
    sheet: SheetName,
    #[serde(flatten)]
    result: CertResult,
}

#[derive(Serialize)]
#[serde(untagged)]
enum CertResult {
    Certificate(Certificate),
    Error { node: usize, error: String, pass: bool },
}

#[derive(Serialize)]
struct LocalityEntry {
    sheet: SheetName,
    #[serde(flatten)]
    report: LocalityReport,
}

#[derive(Serialize)]
struct CertifyOut {
    certificates: Vec<CertEntry>,
    locality: Vec<LocalityEntry>,
}

pub fn certify(s: &mut Session, path: &Path, node: Option<usize>, sheet: SheetArg, radius: Option<f64>) -> Res {
    let dom = load_domain(s, path)?;
    let h = dom.grid().resolution_h();
    let radius = radius.unwrap_or(8.0 * h);
    let nodes: Vec<usize> = match node {
        Some(x) => {
            if !dom.region().is_interior(x) {
                return Err(Failure::usage(anyhow!("node {x} is not an interior node of the domain")));
            }
            vec![x]
        }
        None => dom.region().interior().to_vec(),
    };
    let sheets: Vec<(SheetName, Sheet, &ScalarField)> = [
        (SheetArg::Upper, SheetName::Upper, Sheet::Upper, dom.f_plus()),
        (SheetArg::Lower, SheetName::Lower, Sheet::Lower, dom.f_minus()),
    ]
    .into_iter()
    .filter(|(arg, ..)| sheet == SheetArg::Both || sheet == *arg)
    .map(|(_, name, sh, f)| (name, sh, f))
    .collect();

    let mut out = CertifyOut { certificates: Vec::new(), locality: Vec::new() };
    let mut pass = true;
    for (name, sh, field) in &sheets {
        for &x in &nodes {
            let result = match geodesic_certificate(field, x, *sh) {
                Ok(c) => {
                    pass &= c.pass;
                    CertResult::Certificate(c)
                }
                Err(e) => {
                    pass = false;
                    CertResult::Error { node: x, error: e.to_string(), pass: false }
                }
            };
            out.certificates.push(CertEntry { sheet: *name, result });
        }
        let report = is_locally_eikonal(field, radius, *sh)?;
        pass &= report.pass;
        out.locality.push(LocalityEntry { sheet: *name, report });
    }
    let failed: Vec<&CertEntry> = out
        .certificates
        .iter()
        .filter(|e| match &e.result {
            CertResult::Certificate(c) => !c.pass,
            CertResult::Error { .. } => true,
        })
        .collect();
    let mut outcome = Outcome::new(Artifact::json(&out)?, if pass { Status::Pass } else { Status::Fail }, if pass { "pass" } else { "fail" })
        .tol("residual", 2.0 * h)
        .tol("radius", radius);
    for e in failed.into_iter().take(32) {
        outcome = outcome.witness(e);
    }
    Ok(outcome)
}

pub fn oracle_convexity(s: &mut Session, path: &Path) -> Res {
    let dom = load_domain(s, path)?;
    let report = causal_convexity_oracle(&dom, s.samples(500), s.global.seed);
    let pass = report.pass();
    let mut out = Outcome::new(
        Artifact::json(&report)?,
        if pass { Status::Pass } else { Status::Fail },
        if pass { "pass" } else { "witness" },
    )
    .tol("band", report.band);
    if !pass {
        out = out.witness(&report.verdict);
    }
    Ok(out)
}

pub fn oracle_development(s: &mut Session, surface: &Path, claimed: Option<&Path>, trials: usize) -> Res {
    let surf = load_surface(s, surface, None)?;
    let claimed = match claimed {
        Some(p) => {
            let doc: DomainJson = s.load(p)?;
            doc.to_domain(Some(surf.region().grid().clone()))?
        }
        None => cauchy_development_of_graph(&surf)?.domain,
    };
    let report = development_curve_oracle(&surf, &claimed, s.samples(50), trials, s.global.seed);
    let pass = report.pass();
    let mut out = Outcome::new(
        Artifact::json(&report)?,
        if pass { Status::Pass } else { Status::Fail },
        if pass { "pass" } else { "witness" },
    )
    .tol("band", claimed.grid().resolution_h());
    if !pass {
        out = out.witness(&report.verdict);
    }
    Ok(out)
}

pub fn make_base(
    s: &mut Session,
    kind: BaseKindArg,
    node: Option<usize>,
    h: Option<f64>,
    turns: Option<usize>,
) -> Res {
    let mut grid = || -> Result<_, Failure> {
        let grid = s.grid_flag()?.ok_or_else(|| Failure::usage(anyhow!("this base kind needs --grid")))?;
        Ok(grid.spec().clone())
    };
    let kind = match kind {
        BaseKindArg::SphereMinusNode => {
            let node = node.ok_or_else(|| Failure::usage(anyhow!("sphere-minus-node needs --node")))?;
            BaseKind::SphereMinusNode { grid: grid()?, node }
        }
        BaseKindArg::FullSphere => BaseKind::FullSphere { grid: grid()? },
        BaseKindArg::Helix => BaseKind::Helix {
            h: h.ok_or_else(|| Failure::usage(anyhow!("helix needs --h")))?,
            turns: turns.ok_or_else(|| Failure::usage(anyhow!("helix needs --turns")))?,
        },
    };
    let base = build_base(&kind)?;
    Ok(Outcome::new(Artifact::json(&BaseJson::from_base(&base))?, Status::Pass, "base"))
}

pub fn env_maximalize(s: &mut Session, base: &Path, domain: &Path) -> Res {
    let base = load_base(s, base)?;
    let doc: DomainJson = s.load(domain)?;
    let dom = doc.to_domain(Some(base.grid().clone()))?;
    let result = maximalize_in_e(&base, &dom)?;
    let artifact = |d: &CausalDomain| {
        let mut j = DomainJson::from_domain(d);
        j.grid = None;
        Artifact::json(&j)
    };
    let out = match &result.outcome {
        EOutcome::Domain(d) => Outcome::new(artifact(d)?, Status::Pass, "domain"),
        EOutcome::FullFibers(d) => Outcome::new(artifact(d)?, Status::FullSpace, "full_fibers"),
        EOutcome::Rejected(diag) => {
            let mut out = Outcome::new(Artifact::json(diag)?, Status::Fail, "rejected");
            for v in &diag.violations {
                out = out.witness(v);
            }
            out
        }
    };
    Ok(out.tol("r_inj", base.r_inj()).tol("slack", base.slack()).warnings(result.warnings))
}

#[derive(Serialize)]
struct EnvClassifyOut {
    relation: &'static str,
    developed: &'static str,
    base_distance: f64,
}

pub fn env_classify(s: &mut Session, base: &Path, points: &Path) -> Res {
    let base = load_base(s, base)?;
    let pair: PointPair<EPoint> = s.load(points)?;
    for p in [&pair.p, &pair.q] {
        if p.base_node >= base.len() {
            return Err(Failure::usage(anyhow!("node {} is not a base node", p.base_node)));
        }
        if !p.t.is_finite() {
            return Err(Failure::usage(anyhow!("time coordinate must be finite")));
        }
    }
    let rel = e_causal_relation(&base, &pair.p, &pair.q);
    let developed = causal_relation(&develop(&base, &pair.p), &develop(&base, &pair.q))?;
    let out = EnvClassifyOut {
        relation: rel.tag(),
        developed: developed.tag(),
        base_distance: base.distances_from(pair.p.base_node)[pair.q.base_node],
    };
    Ok(Outcome::new(Artifact::json(&out)?, Status::Pass, rel.tag()).tol("relation_tol", base.relation_tol()))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn plot_data(s: &mut Session, path: &Path) -> Res {
    let dom = load_domain(s, path)?;
    let grid = dom.grid();
    let envelopes = eikonal_envelopes(&dom).ok();
    let mut warnings = Vec::new();
    if envelopes.is_none() {
        warnings.push("eikonal envelopes not applicable; g columns left empty".to_string());
    }
    let planar = grid.sphere_dim() == 1;
    let mut nodes = dom.region().closure();
    if planar {
        nodes.sort_by(|&a, &b| grid.node(a).angle().total_cmp(&grid.node(b).angle()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["node_index"];
    header.extend(if planar { vec!["angle"] } else { vec!["x", "y", "z"] });
    header.extend(["f_minus", "f_plus", "g_minus", "g_plus"]);
    w.write_record(&header).map_err(Failure::usage)?;
    for x in nodes {
        let mut row = vec![x.to_string()];
        if planar {
            row.push(grid.node(x).angle().to_string());
        } else {
            row.extend(grid.node(x).coords().iter().map(f64::to_string));
        }
        row.push(cell(dom.f_minus().value_at(x)));
        row.push(cell(dom.f_plus().value_at(x)));
        match &envelopes {
            Some((gm, gp)) => {
                row.push(cell(gm.value_at(x)));
                row.push(cell(gp.value_at(x)));
            }
            None => row.extend([String::new(), String::new()]),
        }
        w.write_record(&row).map_err(Failure::usage)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(anyhow!("{e}")))?;
    let text = String::from_utf8(bytes).expect("csv output is UTF-8");
    Ok(Outcome::new(Artifact::Csv(text), Status::Pass, "csv").warnings(warnings))
}
