//! Serializable report shapes for the CLI and FFI surfaces.
//!
//! Vertex indices are 1-based everywhere in serialized output; complex
//! eigenvalues are `[re, im]` pairs. Shipped JSON schemas for these shapes
//! live under `schemas/`.

use serde::Serialize;

use crate::dynamics::DomainParams;
use crate::equilibria::{
    self, EquilibriaError, Equilibrium, LimitKind, LimitSet, Stability,
};
use crate::graph::{BipartiteClass, Graph};
use crate::urn::{MonteCarloSummary, TrialConfig};

#[derive(Serialize, Debug, Clone)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: usize,
}

impl GraphJson {
    pub fn of(g: &Graph) -> Self {
        GraphJson {
            vertices: g.vertex_count(),
            edges: g.edge_count(),
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct BipartiteJson {
    pub class: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<usize>>,
}

impl BipartiteJson {
    pub fn of(class: &BipartiteClass) -> Self {
        let kind = match class {
            BipartiteClass::NotBipartite => "not-bipartite",
            BipartiteClass::UnbalancedBipartite { .. } => "unbalanced-bipartite",
            BipartiteClass::BalancedBipartite { .. } => "balanced-bipartite",
        };
        let one_based = |vs: &[usize]| vs.iter().map(|v| v + 1).collect::<Vec<_>>();
        let (a, b) = match class.parts() {
            Some((a, b)) => (Some(one_based(a)), Some(one_based(b))),
            None => (None, None),
        };
        BipartiteJson {
            class: kind.to_string(),
            a,
            b,
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct LimitSetJson {
    pub kind: String,
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    pub eta_range: [f64; 2],
    pub endpoints: [Vec<f64>; 2],
}

impl LimitSetJson {
    pub fn of(ls: &LimitSet) -> Self {
        LimitSetJson {
            kind: match ls.kind {
                LimitKind::Singleton => "singleton".to_string(),
                LimitKind::Interval => "interval".to_string(),
            },
            base: ls.base.coords().to_vec(),
            direction: ls.direction.clone(),
            eta_range: [ls.eta_range.0, ls.eta_range.1],
            endpoints: [
                ls.endpoints.0.coords().to_vec(),
                ls.endpoints.1.coords().to_vec(),
            ],
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct EquilibriumJson {
    pub point: Vec<f64>,
    /// 1-based support vertices.
    pub support: Vec<usize>,
    pub gradient: Vec<f64>,
    pub stability: String,
    pub marginal: bool,
    /// Tangent-space eigenvalues as `[re, im]` pairs, real part descending.
    pub eigenvalues: Vec<[f64; 2]>,
}

#[derive(Serialize, Debug, Clone)]
pub struct EquilibriaReport {
    pub graph: GraphJson,
    pub bipartite: BipartiteJson,
    pub c: f64,
    pub equilibria: Vec<EquilibriumJson>,
    pub limit_set: LimitSetJson,
    pub warnings: Vec<String>,
}

/// Full analysis report: census, spectra, predicted limit, floor warnings.
pub fn equilibria_report(g: &Graph, dom: &DomainParams) -> Result<EquilibriaReport, EquilibriaError> {
    let records = equilibria::enumerate_equilibria(g, dom)?;
    let limit = equilibria::predict_limit(g, dom)?;
    let warnings = equilibria::boundary_warnings(g, dom, &records);
    let mut out = Vec::with_capacity(records.len());
    for e in &records {
        let spectrum = equilibria::tangent_spectrum(g, &e.point)?;
        out.push(equilibrium_json(e, &spectrum.eigenvalues));
    }
    Ok(EquilibriaReport {
        graph: GraphJson::of(g),
        bipartite: BipartiteJson::of(&g.classify_bipartiteness()),
        c: dom.c(),
        equilibria: out,
        limit_set: LimitSetJson::of(&limit),
        warnings,
    })
}

fn equilibrium_json(e: &Equilibrium, eigenvalues: &[nalgebra::Complex<f64>]) -> EquilibriumJson {
    EquilibriumJson {
        point: e.point.coords().to_vec(),
        support: e.support.iter().map(|i| i + 1).collect(),
        gradient: e.gradient.clone(),
        stability: match e.stability {
            Stability::Unstable => "unstable".to_string(),
            Stability::NonUnstable => "non-unstable".to_string(),
        },
        marginal: e.marginal,
        eigenvalues: eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct TrialOutcomeJson {
    pub trial: u64,
    pub seed: u64,
    #[serde(rename = "final")]
    pub final_point: Vec<f64>,
    pub dist_inf: f64,
    pub dist_euclid: f64,
    pub eta: Option<f64>,
    pub nearest_unstable: Option<f64>,
}

#[derive(Serialize, Debug, Clone)]
pub struct SummaryStatsJson {
    pub mean_dist_inf: f64,
    pub max_dist_inf: f64,
    pub eta_std: Option<f64>,
    pub min_nearest_unstable: Option<f64>,
}

#[derive(Serialize, Debug, Clone)]
pub struct SimulationSummaryJson {
    pub graph: GraphJson,
    pub seed: u64,
    pub trials: u64,
    pub steps: u64,
    pub alpha: f64,
    pub sample_stride: u64,
    pub c: f64,
    pub b0: Vec<u64>,
    pub limit_set: LimitSetJson,
    pub unstable_equilibria: Vec<Vec<f64>>,
    pub per_trial: Vec<TrialOutcomeJson>,
    pub stats: SummaryStatsJson,
}

pub fn simulation_summary(
    g: &Graph,
    dom: &DomainParams,
    b0: &[u64],
    cfg: &TrialConfig,
    summary: &MonteCarloSummary,
) -> SimulationSummaryJson {
    SimulationSummaryJson {
        graph: GraphJson::of(g),
        seed: cfg.seed,
        trials: summary.outcomes.len() as u64,
        steps: cfg.steps,
        alpha: cfg.alpha,
        sample_stride: cfg.sample_stride,
        c: dom.c(),
        b0: b0.to_vec(),
        limit_set: LimitSetJson::of(&summary.limit),
        unstable_equilibria: summary
            .unstable_points
            .iter()
            .map(|p| p.coords().to_vec())
            .collect(),
        per_trial: summary
            .outcomes
            .iter()
            .map(|o| TrialOutcomeJson {
                trial: o.trial,
                seed: o.seed,
                final_point: o.final_point.coords().to_vec(),
                dist_inf: o.dist_inf,
                dist_euclid: o.dist_euclid,
                eta: o.eta,
                nearest_unstable: o.nearest_unstable,
            })
            .collect(),
        stats: SummaryStatsJson {
            mean_dist_inf: summary.mean_dist_inf(),
            max_dist_inf: summary.max_dist_inf(),
            eta_std: summary.eta_std(),
            min_nearest_unstable: summary.min_nearest_unstable(),
        },
    }
}

/// Per-trial CSV rows mirroring the summary (`summary.csv` when the CSV
/// format is selected).
pub fn summary_csv(summary: &SimulationSummaryJson) -> String {
    let m = summary.graph.vertices;
    let mut out = String::from("trial,seed");
    for i in 1..=m {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",dist_inf,dist_euclid,eta,nearest_unstable\n");
    for t in &summary.per_trial {
        out.push_str(&format!("{},{}", t.trial, t.seed));
        for x in &t.final_point {
            out.push(',');
            out.push_str(&x.to_string());
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            ",{},{},{},{}\n",
            t.dist_inf,
            t.dist_euclid,
            opt(t.eta),
            opt(t.nearest_unstable)
        ));
    }
    out
}

#[derive(Serialize, Debug, Clone)]
pub struct CheckJson {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize, Debug, Clone)]
pub struct VerifyReportJson {
    pub budget: String,
    pub passed: bool,
    pub checks: Vec<CheckJson>,
}

/// One-based helper reused when printing equilibria as CSV.
pub fn equilibria_csv(report: &EquilibriaReport) -> String {
    let m = report.graph.vertices;
    let mut out = String::from("stability,marginal,support");
    for i in 1..=m {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for e in &report.equilibria {
        let support: Vec<String> = e.support.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!(
            "{},{},{}",
            e.stability,
            e.marginal,
            support.join(" ")
        ));
        for x in &e.point {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize, Debug, Clone)]
pub struct ClassifyReport {
    pub graph: GraphJson,
    pub bipartite: BipartiteJson,
}

impl ClassifyReport {
    pub fn of(g: &Graph) -> Self {
        ClassifyReport {
            graph: GraphJson::of(g),
            bipartite: BipartiteJson::of(&g.classify_bipartiteness()),
        }
    }
}
