//! One-level solve pipeline and the uniform refinement study.
//!
//! `solve_on_mesh` runs assembly, the KKT solve, error norms against the
//! case's exact fields, the residual estimator and the efficiency index on a
//! single mesh; the uniform study iterates it over red refinements of the
//! structured base mesh. The adaptive loop in [`crate::afem`] reuses the same
//! per-level pipeline.

use std::collections::BTreeMap;

use crate::assembly::PenaltyConfig;
use crate::cases::ManufacturedCase;
use crate::estimator::{compute_estimator, efficiency_index, EstimatorBreakdown};
use crate::fe::DofMap;
use crate::field::ScalarField;
use crate::kkt::{build_kkt, solve_kkt, variational_residuals, KktResiduals, KktSolution};
use crate::mesh::Mesh;
use crate::norms::{eoc, error_norms, ConvergenceRow, EocError, ErrorReport, Var};
use crate::quad::{edge_rule, tri_rule, EdgeQuadRule, TriQuadRule};
use crate::sparse::SolveError;

/// Quadrature used for data terms, error norms and estimators.
pub fn default_rules() -> (TriQuadRule, EdgeQuadRule) {
    (
        tri_rule(10).expect("degree-10 rule"),
        edge_rule(5).expect("5-point edge rule"),
    )
}

pub struct LevelOutput {
    pub dofs: DofMap,
    pub solution: KktSolution,
    pub errors: BTreeMap<Var, ErrorReport>,
    pub estimator: EstimatorBreakdown,
    pub efficiency: Option<f64>,
    pub residuals: KktResiduals,
    /// Dimension of Q_h (scalar field DOFs).
    pub ndof_scalar: usize,
    /// Total unknowns of the coupled system: 2 |interior| + |all|.
    pub ndof_system: usize,
}

impl LevelOutput {
    /// Sum of the full-energy errors of u, φ, q (denominator of the
    /// efficiency index).
    pub fn total_error(&self) -> f64 {
        Var::ALL.iter().map(|v| self.errors[v].full_energy).sum()
    }
}

/// Solve the control problem on one mesh and evaluate all diagnostics.
pub fn solve_on_mesh(mesh: &Mesh, case: &ManufacturedCase, sigma: f64) -> Result<LevelOutput, SolveError> {
    let dofs = DofMap::build(mesh);
    let cfg = PenaltyConfig::new(sigma);
    let sys = build_kkt(mesh, &dofs, &cfg, case);
    let solution = solve_kkt(&sys, &dofs)?;
    let residuals = variational_residuals(&sys, &dofs, &solution);
    let (tri, edge) = default_rules();

    let mut errors = BTreeMap::new();
    for var in Var::ALL {
        let exact: &dyn ScalarField = match var {
            Var::U => &case.exact_u,
            Var::Phi => &case.exact_phi,
            Var::Q => &case.exact_q,
        };
        let f = match var {
            Var::U => &solution.u,
            Var::Phi => &solution.phi,
            Var::Q => &solution.q,
        };
        errors.insert(var, error_norms(exact, f, mesh, &dofs, &cfg, &tri, &edge));
    }
    let estimator = compute_estimator(&solution, case, mesh, &dofs, &cfg, &tri, &edge);
    let efficiency = efficiency_index(&estimator, &errors);
    let ndof_scalar = dofs.n_dofs;
    let ndof_system = 2 * dofs.interior_dofs.len() + dofs.n_dofs;
    Ok(LevelOutput {
        dofs,
        solution,
        errors,
        estimator,
        efficiency,
        residuals,
        ndof_scalar,
        ndof_system,
    })
}

pub struct UniformStudyLevel {
    pub level: usize,
    /// Cells per side of the structured mesh at this level.
    pub n: usize,
    /// Mesh size (max triangle diameter).
    pub h: f64,
    pub mesh: Mesh,
    pub out: LevelOutput,
}

/// Uniform study: solve on `unit_square(base_n)` and `levels - 1` red
/// refinements of it.
pub fn run_uniform_study(
    case: &ManufacturedCase,
    sigma: f64,
    base_n: usize,
    levels: usize,
) -> Result<Vec<UniformStudyLevel>, SolveError> {
    assert!(levels >= 1);
    let mut mesh = Mesh::unit_square(base_n);
    let mut result = Vec::with_capacity(levels);
    for level in 1..=levels {
        let out = solve_on_mesh(&mesh, case, sigma)?;
        let next = if level < levels {
            Some(mesh.uniform_refine())
        } else {
            None
        };
        result.push(UniformStudyLevel {
            level,
            n: base_n << (level - 1),
            h: mesh.max_diameter(),
            mesh,
            out,
        });
        mesh = match next {
            Some(m) => m,
            None => break,
        };
    }
    Ok(result)
}

/// Convergence rows (with EOC annotations) from a uniform study.
pub fn convergence_rows(study: &[UniformStudyLevel]) -> Result<Vec<ConvergenceRow>, EocError> {
    let mut rows: Vec<ConvergenceRow> = study
        .iter()
        .map(|lvl| ConvergenceRow {
            level: lvl.level,
            h: lvl.h,
            ndof: lvl.out.ndof_system,
            errors: lvl.out.errors.clone(),
            orders: BTreeMap::new(),
        })
        .collect();
    eoc(&mut rows)?;
    Ok(rows)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
