//! Error norms between exact fields and FE functions, and empirical orders
//! of convergence.
//!
//! The mesh-dependent energy norm is
//!
//! ```text
//! ||v||_h^2 = Σ_T ||Δv||_T^2 + Σ_e (σ/|e|) ||[[∂v/∂n]]||_e^2
//! ```
//!
//! with the edge sum over all edges (boundary edges use the single outward
//! trace), and the full energy norm adds the L2 part:
//! `|||v|||_h^2 = ||v||_h^2 + ||v||^2`. For errors, the exact field enters
//! the boundary jumps through `∇exact · n_e` (zero for admissible fields);
//! across interior edges smooth fields have no jumps, so only the FE jump
//! survives there.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::assembly::{edge_geometry, PenaltyConfig};
use crate::exec;
use crate::fe::{DofMap, FeFunction};
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::quad::{edge_rule, EdgeQuadRule, TriQuadRule};

/// Solution variables of the control problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    /// Optimal state u.
    U,
    /// Adjoint state φ.
    Phi,
    /// Optimal control q.
    Q,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::U, Var::Phi, Var::Q];
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::U => write!(f, "u"),
            Var::Phi => write!(f, "phi"),
            Var::Q => write!(f, "q"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l2: f64,
    /// Energy norm: broken Laplacian plus σ-weighted normal-derivative jumps.
    pub energy: f64,
    /// Full energy norm: sqrt(energy^2 + l2^2).
    pub full_energy: f64,
    /// σ-weighted jump part of energy^2 (diagnostic).
    pub energy_jump_sq: f64,
    /// Element-local contributions (volume Laplacian part + L2 part; edge
    /// terms are not attributed to elements here).
    pub per_element: Option<Vec<f64>>,
}

/// L2, energy and full-energy error between `exact` and `fn_`.
pub fn error_norms(
    exact: &dyn ScalarField,
    fn_: &FeFunction,
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
) -> ErrorReport {
    error_norms_impl(exact, fn_, mesh, dofs, cfg, tri, edge, false)
}

pub fn error_norms_seq(
    exact: &dyn ScalarField,
    fn_: &FeFunction,
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
) -> ErrorReport {
    error_norms_impl(exact, fn_, mesh, dofs, cfg, tri, edge, true)
}

#[allow(clippy::too_many_arguments)]
fn error_norms_impl(
    exact: &dyn ScalarField,
    fn_: &FeFunction,
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
    sequential: bool,
) -> ErrorReport {
    assert_eq!(
        fn_.coeffs.len(),
        dofs.n_dofs,
        "FE function does not match the DOF map"
    );
    // (l2^2, volume-energy^2) per element.
    let volume = exec::run_indexed(mesh.triangles.len(), sequential, |t| {
        let p = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        let lap_fn = fn_.eval_laplacian(mesh, dofs, t);
        let mut l2 = 0.0;
        let mut en = 0.0;
        for (q, &w) in tri.points.iter().zip(&tri.weights) {
            let x = q[0] * p[0][0] + q[1] * p[1][0] + q[2] * p[2][0];
            let y = q[0] * p[0][1] + q[1] * p[1][1] + q[2] * p[2][1];
            let dv = exact.value(x, y) - fn_.eval(mesh, dofs, t, *q);
            let dl = exact.laplacian(x, y) - lap_fn;
            l2 += area * w * dv * dv;
            en += area * w * dl * dl;
        }
        (l2, en)
    });

    let geo = edge_geometry(mesh);
    let jumps = exec::run_indexed(mesh.edges.len(), sequential, |e| {
        jump_term_sq(mesh, dofs, &geo[e], edge, e, Some(exact), fn_)
    });

    let l2_sq: f64 = volume.iter().map(|v| v.0).sum();
    let vol_sq: f64 = volume.iter().map(|v| v.1).sum();
    let jump_sq: f64 = cfg.sigma * jumps.iter().sum::<f64>();
    let energy = (vol_sq + jump_sq).sqrt();
    let l2 = l2_sq.sqrt();
    ErrorReport {
        l2,
        energy,
        full_energy: (energy * energy + l2 * l2).sqrt(),
        energy_jump_sq: jump_sq,
        per_element: Some(volume.iter().map(|v| v.0 + v.1).collect()),
    }
}

/// `|e|^{-1} ∫_e [[∂(exact - fn)/∂n]]^2` for one edge; `exact = None` measures
/// the FE function itself.
fn jump_term_sq(
    mesh: &Mesh,
    dofs: &DofMap,
    geo: &crate::assembly::EdgeGeometry,
    rule: &EdgeQuadRule,
    e: usize,
    exact: Option<&dyn ScalarField>,
    fn_: &FeFunction,
) -> f64 {
    let edge = &mesh.edges[e];
    let a = mesh.vertices[edge.v[0]];
    let b = mesh.vertices[edge.v[1]];
    let bary_on = |t: usize, s: f64| {
        let tri = &mesh.triangles[t];
        let la = tri.v.iter().position(|&v| v == edge.v[0]).unwrap();
        let lb = tri.v.iter().position(|&v| v == edge.v[1]).unwrap();
        let mut bary = [0.0; 3];
        bary[la] = 1.0 - s;
        bary[lb] = s;
        bary
    };
    let mut acc = 0.0;
    for (k, &s) in rule.points.iter().enumerate() {
        let w = rule.weights[k];
        let jump = match edge.tris.1 {
            Some(plus) => {
                // Interior: smooth exact fields cancel across the edge.
                let gm = fn_.eval_gradient(mesh, dofs, edge.tris.0, bary_on(edge.tris.0, s));
                let gp = fn_.eval_gradient(mesh, dofs, plus, bary_on(plus, s));
                (gm[0] - gp[0]) * geo.normal[0] + (gm[1] - gp[1]) * geo.normal[1]
            }
            None => {
                let x = a.x + s * (b.x - a.x);
                let y = a.y + s * (b.y - a.y);
                let gf = fn_.eval_gradient(mesh, dofs, edge.tris.0, bary_on(edge.tris.0, s));
                let ge = exact.map(|f| f.gradient(x, y)).unwrap_or([0.0, 0.0]);
                (ge[0] - gf[0]) * geo.normal[0] + (ge[1] - gf[1]) * geo.normal[1]
            }
        };
        acc += w * jump * jump;
    }
    // ∫ = |e| Σ w (...); the norm weight is 1/|e|.
    acc
}

/// Volume and σ-weighted jump parts of `||v||_h^2` for a plain FE function.
pub fn energy_norm_parts(mesh: &Mesh, dofs: &DofMap, cfg: &PenaltyConfig, v: &FeFunction) -> (f64, f64) {
    let mut vol = 0.0;
    for t in 0..mesh.triangles.len() {
        let lap = v.eval_laplacian(mesh, dofs, t);
        vol += mesh.tri_area(t) * lap * lap;
    }
    let geo = edge_geometry(mesh);
    let rule = edge_rule(3).expect("3-point rule");
    let mut jump = 0.0;
    for e in 0..mesh.edges.len() {
        jump += jump_term_sq(mesh, dofs, &geo[e], &rule, e, None, v);
    }
    (vol, cfg.sigma * jump)
}

/// Orders of convergence for one variable, per norm.
#[derive(Debug, Clone, Copy)]
pub struct NormOrders {
    pub l2: f64,
    pub energy: f64,
    pub full: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub errors: BTreeMap<Var, ErrorReport>,
    /// Empty on the first row; filled by [`eoc`].
    pub orders: BTreeMap<Var, NormOrders>,
}

#[derive(Debug, Error)]
pub enum EocError {
    #[error("need at least 2 rows to compute orders, got {0}")]
    TooFewRows(usize),
    #[error("h sequence is not halving at level {level}: h_prev/h = {ratio}")]
    NonHalving { level: usize, ratio: f64 },
}

/// Annotates rows with `log2(err_prev / err)` per variable and norm.
/// Requires a halving h sequence.
pub fn eoc(rows: &mut [ConvergenceRow]) -> Result<(), EocError> {
    if rows.len() < 2 {
        return Err(EocError::TooFewRows(rows.len()));
    }
    for k in 1..rows.len() {
        let ratio = rows[k - 1].h / rows[k].h;
        if (ratio - 2.0).abs() > 0.01 {
            return Err(EocError::NonHalving {
                level: rows[k].level,
                ratio,
            });
        }
        let prev = rows[k - 1].errors.clone();
        let row = &mut rows[k];
        for (var, err) in &row.errors {
            let p = &prev[var];
            row.orders.insert(
                *var,
                NormOrders {
                    l2: (p.l2 / err.l2).log2(),
                    energy: (p.energy / err.energy).log2(),
                    full: (p.full_energy / err.full_energy).log2(),
                },
            );
        }
    }
    Ok(())
}
