//! Residual a posteriori error estimator.
//!
//! Volume residuals (per element, L2 norms over T):
//! `η_{1,T} = h_T² ||f||_T`, `η_{2,T} = h_T² ||u_h − u_d||_T`.
//!
//! Edge residuals: `η_{3..5,e} = |e|^{1/2} ||[[Δ·]]||_e` for q_h, u_h, φ_h
//! over interior edges, `η_{6..8,e} = |e|^{-1/2} ||[[∂·/∂n]]||_e` for q_h,
//! u_h, φ_h over all edges. The total is the root of the sum of squares of
//! the eight global components.
//!
//! For Dörfler marking, interior edge terms are split evenly between the two
//! adjacent triangles and boundary edge terms are attributed in full, so the
//! per-element squared indicators sum to the squared total exactly.

use std::collections::BTreeMap;

use crate::assembly::{edge_geometry, PenaltyConfig};
use crate::cases::ManufacturedCase;
use crate::exec;
use crate::fe::DofMap;
use crate::field::ScalarField;
use crate::kkt::KktSolution;
use crate::mesh::Mesh;
use crate::norms::{ErrorReport, Var};
use crate::quad::{EdgeQuadRule, TriQuadRule};

/// Below this level estimator totals and errors are treated as zero (cases
/// the discrete space reproduces exactly, limited by solver accuracy); the
/// adaptive loop declares convergence and the efficiency index is undefined.
pub const ESTIMATOR_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EstimatorBreakdown {
    /// Global components η_1..η_8 (not squared).
    pub eta: [f64; 8],
    /// Squared local indicators per element; sums to `total²`.
    pub per_element: Vec<f64>,
    pub total: f64,
}

/// `η_{1,T}²` for every element: h_T⁴ ∫_T f².
pub fn eta1_per_element_sq<F>(mesh: &Mesh, f: &F, rule: &TriQuadRule) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    exec::map_indexed(mesh.triangles.len(), |t| {
        let p = mesh.tri_points(t);
        let h4 = {
            let d2 = mesh.tri_diameter_sq(t);
            d2 * d2
        };
        h4 * rule.integrate(&p, mesh.tri_area(t), |x, y| {
            let v = f(x, y);
            v * v
        })
    })
}

pub fn compute_estimator(
    sol: &KktSolution,
    case: &ManufacturedCase,
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
) -> EstimatorBreakdown {
    compute_estimator_impl(sol, case, mesh, dofs, cfg, tri, edge, false)
}

pub fn compute_estimator_seq(
    sol: &KktSolution,
    case: &ManufacturedCase,
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
) -> EstimatorBreakdown {
    compute_estimator_impl(sol, case, mesh, dofs, cfg, tri, edge, true)
}

#[allow(clippy::too_many_arguments)]
fn compute_estimator_impl(
    sol: &KktSolution,
    case: &ManufacturedCase,
    mesh: &Mesh,
    dofs: &DofMap,
    _cfg: &PenaltyConfig,
    tri: &TriQuadRule,
    edge: &EdgeQuadRule,
    sequential: bool,
) -> EstimatorBreakdown {
    // Volume residuals: (η1², η2²) per element.
    let volume = exec::run_indexed(mesh.triangles.len(), sequential, |t| {
        let p = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        let d2 = mesh.tri_diameter_sq(t);
        let h4 = d2 * d2;
        let mut f_sq = 0.0;
        let mut r_sq = 0.0;
        for (q, &w) in tri.points.iter().zip(&tri.weights) {
            let x = q[0] * p[0][0] + q[1] * p[1][0] + q[2] * p[2][0];
            let y = q[0] * p[0][1] + q[1] * p[1][1] + q[2] * p[2][1];
            let fv = case.f.value(x, y);
            let rv = sol.u.eval(mesh, dofs, t, *q) - case.u_d.value(x, y);
            f_sq += area * w * fv * fv;
            r_sq += area * w * rv * rv;
        }
        (h4 * f_sq, h4 * r_sq)
    });

    // Edge residuals: (η3².., η8²) per edge.
    let geo = edge_geometry(mesh);
    let edge_terms = exec::run_indexed(mesh.edges.len(), sequential, |e| {
        let eg = &mesh.edges[e];
        let len = geo[e].length;
        let n = geo[e].normal;
        let mut sq = [0.0_f64; 6];
        if let Some(plus) = eg.tris.1 {
            // Laplacian jumps (constants per side): ||[[Δv]]||_e² = |e| jump².
            let minus = eg.tris.0;
            for (k, f) in [&sol.q, &sol.u, &sol.phi].iter().enumerate() {
                let j = f.eval_laplacian(mesh, dofs, minus) - f.eval_laplacian(mesh, dofs, plus);
                sq[k] = len * len * j * j;
            }
        }
        // Normal-derivative jumps, |e|^{-1} ∫ [[∂v/∂n]]².
        let bary_on = |t: usize, s: f64| {
            let tri = &mesh.triangles[t];
            let la = tri.v.iter().position(|&v| v == eg.v[0]).unwrap();
            let lb = tri.v.iter().position(|&v| v == eg.v[1]).unwrap();
            let mut bary = [0.0; 3];
            bary[la] = 1.0 - s;
            bary[lb] = s;
            bary
        };
        for (k, f) in [&sol.q, &sol.u, &sol.phi].iter().enumerate() {
            let mut acc = 0.0;
            for (i, &s) in edge.points.iter().enumerate() {
                let w = edge.weights[i];
                let gm = f.eval_gradient(mesh, dofs, eg.tris.0, bary_on(eg.tris.0, s));
                let jump = match eg.tris.1 {
                    Some(plus) => {
                        let gp = f.eval_gradient(mesh, dofs, plus, bary_on(plus, s));
                        (gm[0] - gp[0]) * n[0] + (gm[1] - gp[1]) * n[1]
                    }
                    None => gm[0] * n[0] + gm[1] * n[1],
                };
                acc += w * jump * jump;
            }
            // ∫ = |e| Σ w (..); weight |e|^{-1} cancels the length.
            sq[3 + k] = acc;
        }
        sq
    });

    let mut eta_sq = [0.0_f64; 8];
    for (f_sq, r_sq) in &volume {
        eta_sq[0] += f_sq;
        eta_sq[1] += r_sq;
    }
    for sq in &edge_terms {
        for k in 0..6 {
            eta_sq[2 + k] += sq[k];
        }
    }

    let mut per_element: Vec<f64> = volume.iter().map(|&(a, b)| a + b).collect();
    for (e, sq) in edge_terms.iter().enumerate() {
        let eg = &mesh.edges[e];
        let edge_total: f64 = sq.iter().sum();
        match eg.tris.1 {
            Some(plus) => {
                per_element[eg.tris.0] += 0.5 * edge_total;
                per_element[plus] += 0.5 * edge_total;
            }
            None => per_element[eg.tris.0] += edge_total,
        }
    }

    let total = eta_sq.iter().sum::<f64>().sqrt();
    EstimatorBreakdown {
        eta: eta_sq.map(f64::sqrt),
        per_element,
        total,
    }
}

/// Efficiency index: η divided by the summed full-energy errors of u, φ, q.
/// Undefined (None) when the total error is at solver-noise level.
pub fn efficiency_index(est: &EstimatorBreakdown, errors: &BTreeMap<Var, ErrorReport>) -> Option<f64> {
    let denom: f64 = Var::ALL
        .iter()
        .map(|v| errors.get(v).map(|e| e.full_energy).unwrap_or(0.0))
        .sum();
    if denom <= ESTIMATOR_ZERO_TOL {
        None
    } else {
        Some(est.total / denom)
    }
}

/// Data oscillation `(Σ_T h_T⁴ ||g − ḡ||_T²)^{1/2}` with ḡ the element-wise
/// mean. Used by the local-efficiency property checks.
pub fn data_oscillation(mesh: &Mesh, g: &dyn ScalarField, rule: &TriQuadRule) -> f64 {
    let per = exec::map_indexed(mesh.triangles.len(), |t| {
        let p = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        let d2 = mesh.tri_diameter_sq(t);
        let mean = rule.integrate(&p, area, |x, y| g.value(x, y)) / area;
        let dev = rule.integrate(&p, area, |x, y| {
            let v = g.value(x, y) - mean;
            v * v
        });
        (d2 * d2) * dev
    });
    per.iter().sum::<f64>().sqrt()
}
