//! Adaptive loop: SOLVE -> ESTIMATE -> MARK -> REFINE.
//!
//! Marking is Dörfler's bulk criterion on squared indicators: the returned
//! set is the minimal descending-order prefix M with
//! `Σ_{T∈M} ind²_T >= θ Σ_T ind²_T` (ties broken by element index).
//! Refinement is newest vertex bisection with conforming closure.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cases;
use crate::estimator::ESTIMATOR_ZERO_TOL;
use crate::mesh::Mesh;
use crate::norms::{ErrorReport, Var};
use crate::study::solve_on_mesh;

#[derive(Debug, Clone)]
pub struct AfemConfig {
    /// Benchmark case name (`example1` or `constant`).
    pub case: String,
    /// Dörfler bulk fraction in (0, 1).
    pub theta: f64,
    pub max_levels: usize,
    /// Stop once the coupled system exceeds this many unknowns.
    pub max_ndof: usize,
    pub sigma: f64,
    pub alpha: f64,
    /// Estimator total below which the loop declares convergence (solver
    /// noise floor for cases solved exactly by the discrete space).
    pub eta_tol: f64,
}

impl Default for AfemConfig {
    fn default() -> Self {
        AfemConfig {
            case: "example1".to_string(),
            theta: 0.4,
            max_levels: 60,
            max_ndof: 100_000,
            sigma: 20.0,
            alpha: 1.0,
            eta_tol: ESTIMATOR_ZERO_TOL,
        }
    }
}

#[derive(Debug, Error)]
pub enum AfemError {
    #[error("unknown case {0:?}")]
    UnknownCase(String),
    #[error("theta must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
}

#[derive(Debug, Clone)]
pub struct MarkResult {
    pub marked: Vec<usize>,
    /// All indicators were zero; nothing to refine.
    pub converged: bool,
}

/// Dörfler marking on squared element indicators.
pub fn dorfler_mark(indicator_sq: &[f64], theta: f64) -> MarkResult {
    assert!(
        theta > 0.0 && theta <= 1.0,
        "bulk fraction must lie in (0, 1], got {theta}"
    );
    let mut order: Vec<usize> = (0..indicator_sq.len()).collect();
    order.sort_by(|&a, &b| {
        indicator_sq[b]
            .partial_cmp(&indicator_sq[a])
            .expect("indicators must be finite")
            .then(a.cmp(&b))
    });
    // Total in descending order so the θ -> 1 limit picks exactly the
    // nonzero indicators.
    let total: f64 = order.iter().map(|&i| indicator_sq[i]).sum();
    if total == 0.0 {
        return MarkResult {
            marked: Vec::new(),
            converged: true,
        };
    }
    let target = theta * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for &i in &order {
        sum += indicator_sq[i];
        marked.push(i);
        if sum >= target {
            break;
        }
    }
    MarkResult {
        marked,
        converged: false,
    }
}

#[derive(Debug, Clone)]
pub struct AfemLevel {
    pub level: usize,
    /// Unknowns of the coupled system at this level.
    pub ndof: usize,
    pub triangles: usize,
    pub h: f64,
    /// Global estimator components η_1..η_8.
    pub eta: [f64; 8],
    pub eta_total: f64,
    pub errors: BTreeMap<Var, ErrorReport>,
    pub efficiency: Option<f64>,
    /// Elements marked at this level (0 on the final level).
    pub marked: usize,
}

#[derive(Debug, Clone)]
pub struct AfemTrace {
    pub levels: Vec<AfemLevel>,
    /// Loop ended because the estimator vanished (up to `eta_tol`).
    pub converged: bool,
    /// Solver failure message, if the loop aborted; the trace holds the
    /// levels completed before the failure.
    pub failure: Option<String>,
}

pub fn run_afem(cfg: &AfemConfig) -> Result<AfemTrace, AfemError> {
    run_afem_with(cfg, |_, _| {})
}

/// [`run_afem`] with a per-level observer (level number and the mesh that
/// level is solved on), used for mesh export.
pub fn run_afem_with(
    cfg: &AfemConfig,
    mut on_level: impl FnMut(usize, &Mesh),
) -> Result<AfemTrace, AfemError> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(AfemError::InvalidTheta(cfg.theta));
    }
    let mut case = cases::by_name(&cfg.case).ok_or_else(|| AfemError::UnknownCase(cfg.case.clone()))?;
    case.alpha = cfg.alpha;

    let mut mesh = Mesh::unit_square(4);
    let mut trace = AfemTrace {
        levels: Vec::new(),
        converged: false,
        failure: None,
    };
    for level in 1..=cfg.max_levels {
        on_level(level, &mesh);
        let out = match solve_on_mesh(&mesh, &case, cfg.sigma) {
            Ok(out) => out,
            Err(e) => {
                trace.failure = Some(e.to_string());
                break;
            }
        };
        let mark = dorfler_mark(&out.estimator.per_element, cfg.theta);
        let converged = mark.converged || out.estimator.total <= cfg.eta_tol;
        let stop = converged || out.ndof_system >= cfg.max_ndof || level == cfg.max_levels;
        trace.levels.push(AfemLevel {
            level,
            ndof: out.ndof_system,
            triangles: mesh.triangles.len(),
            h: mesh.max_diameter(),
            eta: out.estimator.eta,
            eta_total: out.estimator.total,
            errors: out.errors,
            efficiency: out.efficiency,
            marked: if stop { 0 } else { mark.marked.len() },
        });
        if stop {
            trace.converged = converged;
            break;
        }
        mesh = mesh.nvb_refine(&mark.marked);
    }
    Ok(trace)
}
