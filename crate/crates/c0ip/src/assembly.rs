//! Assembly of the C0 interior penalty bilinear form, the mass matrix and
//! load functionals over the full P2 DOF set.
//!
//! The form on Q_h x Q_h is
//!
//! ```text
//! a_h(p, r) = Σ_T ∫_T Δp Δr
//!           + Σ_e ∫_e {{Δp}} [[∂r/∂n]]
//!           + Σ_e ∫_e {{Δr}} [[∂p/∂n]]
//!           + Σ_e (σ/|e|) ∫_e [[∂p/∂n]] [[∂r/∂n]]
//! ```
//!
//! with edge sums over ALL edges. On boundary edges the average is the single
//! trace and the jump is `∇v · n_e` with the outward normal; this is what
//! enforces the zero normal trace weakly. On interior edges the normal is
//! oriented from the lower-indexed adjacent triangle (the minus side) to the
//! higher-indexed one; `a_h` does not depend on that choice.
//!
//! Element and edge contributions are computed independently (in parallel
//! with the `parallel` feature), then accumulated into coordinate triplets in
//! index order and compressed, so the assembled matrix is identical for any
//! thread count.

use crate::exec;
use crate::fe::{self, DofMap, FeFunction};
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::quad::{edge_rule, tri_rule, EdgeQuadRule};
use crate::sparse::CsrMatrix;

/// Penalty weight σ >= 1 on the normal-derivative jumps.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyConfig {
    pub sigma: f64,
}

impl PenaltyConfig {
    pub fn new(sigma: f64) -> PenaltyConfig {
        assert!(sigma >= 1.0, "penalty parameter must satisfy sigma >= 1, got {sigma}");
        PenaltyConfig { sigma }
    }
}

impl Default for PenaltyConfig {
    /// σ = 20: a conventional stable choice for quadratic C0-IP.
    fn default() -> Self {
        PenaltyConfig { sigma: 20.0 }
    }
}

/// Unit normal and length per edge. Boundary normals point outward; interior
/// normals point from the minus (lower-indexed) triangle to the plus side.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGeometry {
    pub normal: [f64; 2],
    pub length: f64,
}

pub fn edge_geometry(mesh: &Mesh) -> Vec<EdgeGeometry> {
    mesh.edges
        .iter()
        .map(|edge| {
            let a = mesh.vertices[edge.v[0]];
            let b = mesh.vertices[edge.v[1]];
            let (tx, ty) = (b.x - a.x, b.y - a.y);
            let length = (tx * tx + ty * ty).sqrt();
            let mut normal = [ty / length, -tx / length];
            // Point away from the minus triangle: positive component along
            // (edge midpoint - opposite vertex).
            let tri = &mesh.triangles[edge.tris.0];
            let opp = tri
                .v
                .iter()
                .copied()
                .find(|v| *v != edge.v[0] && *v != edge.v[1])
                .expect("edge endpoints belong to its triangle");
            let o = mesh.vertices[opp];
            let mx = 0.5 * (a.x + b.x) - o.x;
            let my = 0.5 * (a.y + b.y) - o.y;
            if normal[0] * mx + normal[1] * my < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            EdgeGeometry { normal, length }
        })
        .collect()
}

/// Per-side data used by the edge terms: local DOFs, constant Laplacians of
/// the local basis, and the barycentric parametrization of the edge.
struct EdgeSide {
    dofs: [usize; 6],
    lap: [f64; 6],
    grads: [[f64; 2]; 3],
    /// local vertex indices of the edge endpoints (first, second in global
    /// sorted order)
    endpoints: [usize; 2],
    sign: f64,
}

fn edge_side(mesh: &Mesh, dofs: &DofMap, t: usize, edge_v: [usize; 2], sign: f64) -> EdgeSide {
    let tri = &mesh.triangles[t];
    let grads = mesh.bary_gradients(t);
    let local = |v: usize| tri.v.iter().position(|&w| w == v).expect("vertex on triangle");
    EdgeSide {
        dofs: dofs.local_dofs(mesh, t),
        lap: fe::shape_laplacians(&grads),
        grads,
        endpoints: [local(edge_v[0]), local(edge_v[1])],
        sign,
    }
}

impl EdgeSide {
    fn bary_at(&self, s: f64) -> [f64; 3] {
        let mut bary = [0.0; 3];
        bary[self.endpoints[0]] = 1.0 - s;
        bary[self.endpoints[1]] = s;
        bary
    }

    /// Contribution of each local basis function to [[∂v/∂n]] at parameter s.
    fn jump_row(&self, s: f64, normal: [f64; 2]) -> [f64; 6] {
        let g = fe::shape_gradients(&self.grads, self.bary_at(s));
        let mut row = [0.0; 6];
        for i in 0..6 {
            row[i] = self.sign * (g[i][0] * normal[0] + g[i][1] * normal[1]);
        }
        row
    }
}

/// Local edge contribution to a_h, flattened over the union of the two
/// sides' local DOFs.
fn edge_local(
    mesh: &Mesh,
    dofs: &DofMap,
    geo: &EdgeGeometry,
    rule: &EdgeQuadRule,
    sigma: f64,
    e: usize,
) -> (Vec<usize>, Vec<f64>) {
    let edge = &mesh.edges[e];
    let mut sides = vec![edge_side(mesh, dofs, edge.tris.0, edge.v, 1.0)];
    if let Some(plus) = edge.tris.1 {
        sides.push(edge_side(mesh, dofs, plus, edge.v, -1.0));
    }
    let avg_factor = if edge.tris.1.is_some() { 0.5 } else { 1.0 };
    let nslots = 6 * sides.len();

    let mut slot_dofs = Vec::with_capacity(nslots);
    let mut avg = Vec::with_capacity(nslots);
    for side in &sides {
        for i in 0..6 {
            slot_dofs.push(side.dofs[i]);
            avg.push(avg_factor * side.lap[i]);
        }
    }

    // ∫_e [[∂φ_i/∂n]] ds and the penalty moments Σ w [[∂φ_i/∂n]][[∂φ_j/∂n]].
    let mut int_jump = vec![0.0; nslots];
    let mut pen = vec![0.0; nslots * nslots];
    for (k, &s) in rule.points.iter().enumerate() {
        let w = rule.weights[k];
        let mut jump = Vec::with_capacity(nslots);
        for side in &sides {
            jump.extend_from_slice(&side.jump_row(s, geo.normal));
        }
        let sw = sigma * w;
        for i in 0..nslots {
            int_jump[i] += w * geo.length * jump[i];
            for j in 0..nslots {
                pen[i * nslots + j] += sw * (jump[i] * jump[j]);
            }
        }
    }

    // a_h entry (test j, trial i): {{Δφ_i}} ∫[[∂φ_j/∂n]] + {{Δφ_j}} ∫[[∂φ_i/∂n]]
    //                             + (σ/|e|) ∫ [[∂φ_i/∂n]][[∂φ_j/∂n]].
    let mut local = vec![0.0; nslots * nslots];
    for j in 0..nslots {
        for i in 0..nslots {
            local[j * nslots + i] = avg[i] * int_jump[j] + avg[j] * int_jump[i] + pen[i * nslots + j];
        }
    }
    (slot_dofs, local)
}

fn assemble_ah_impl(mesh: &Mesh, dofs: &DofMap, cfg: &PenaltyConfig, sequential: bool) -> CsrMatrix {
    let geo = edge_geometry(mesh);
    let rule = edge_rule(3).expect("3-point edge rule");

    let tri_locals = exec::run_indexed(mesh.triangles.len(), sequential, |t| {
        let grads = mesh.bary_gradients(t);
        let lap = fe::shape_laplacians(&grads);
        let area = mesh.tri_area(t);
        let ld = dofs.local_dofs(mesh, t);
        let mut local = [0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                // parenthesized so the local matrix is bit-exactly symmetric
                local[i * 6 + j] = area * (lap[i] * lap[j]);
            }
        }
        (ld, local)
    });

    let edge_locals = exec::run_indexed(mesh.edges.len(), sequential, |e| {
        edge_local(mesh, dofs, &geo[e], &rule, cfg.sigma, e)
    });

    let mut triplets = Vec::with_capacity(36 * tri_locals.len() + 144 * edge_locals.len());
    for (ld, local) in &tri_locals {
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((ld[j], ld[i], local[i * 6 + j]));
            }
        }
    }
    for (slots, local) in &edge_locals {
        let n = slots.len();
        for j in 0..n {
            for i in 0..n {
                triplets.push((slots[j], slots[i], local[j * n + i]));
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_dofs, dofs.n_dofs, triplets)
}

/// Assemble a_h on Q_h x Q_h (all edges, penalty σ). Restriction to
/// `interior_dofs` rows/columns gives the form on V_h.
pub fn assemble_ah(mesh: &Mesh, dofs: &DofMap, cfg: &PenaltyConfig) -> CsrMatrix {
    assemble_ah_impl(mesh, dofs, cfg, false)
}

/// Sequential reference path for [`assemble_ah`].
pub fn assemble_ah_seq(mesh: &Mesh, dofs: &DofMap, cfg: &PenaltyConfig) -> CsrMatrix {
    assemble_ah_impl(mesh, dofs, cfg, true)
}

fn assemble_mass_impl(mesh: &Mesh, dofs: &DofMap, sequential: bool) -> CsrMatrix {
    let rule = tri_rule(4).expect("degree-4 rule");
    let locals = exec::run_indexed(mesh.triangles.len(), sequential, |t| {
        let area = mesh.tri_area(t);
        let ld = dofs.local_dofs(mesh, t);
        let mut local = [0.0; 36];
        for (q, &w) in rule.points.iter().zip(&rule.weights) {
            let n = fe::shape_values(*q);
            let aw = area * w;
            for i in 0..6 {
                for j in 0..6 {
                    local[i * 6 + j] += aw * (n[i] * n[j]);
                }
            }
        }
        (ld, local)
    });
    let mut triplets = Vec::with_capacity(36 * locals.len());
    for (ld, local) in &locals {
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((ld[i], ld[j], local[i * 6 + j]));
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_dofs, dofs.n_dofs, triplets)
}

/// P2 mass matrix (exact: the integrand has degree 4).
pub fn assemble_mass(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    assemble_mass_impl(mesh, dofs, false)
}

pub fn assemble_mass_seq(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    assemble_mass_impl(mesh, dofs, true)
}

fn assemble_load_impl<F>(mesh: &Mesh, dofs: &DofMap, g: &F, sequential: bool) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rule = tri_rule(10).expect("degree-10 rule");
    let locals = exec::run_indexed(mesh.triangles.len(), sequential, |t| {
        let p = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        let ld = dofs.local_dofs(mesh, t);
        let mut local = [0.0; 6];
        for (q, &w) in rule.points.iter().zip(&rule.weights) {
            let x = q[0] * p[0][0] + q[1] * p[1][0] + q[2] * p[2][0];
            let y = q[0] * p[0][1] + q[1] * p[1][1] + q[2] * p[2][1];
            let gv = g(x, y);
            let n = fe::shape_values(*q);
            for i in 0..6 {
                local[i] += area * w * gv * n[i];
            }
        }
        (ld, local)
    });
    let mut b = vec![0.0; dofs.n_dofs];
    for (ld, local) in &locals {
        for i in 0..6 {
            b[ld[i]] += local[i];
        }
    }
    b
}

/// Load vector (g, φ_i) over all DOFs with degree-10 quadrature.
pub fn assemble_load<F>(mesh: &Mesh, dofs: &DofMap, g: &F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    assemble_load_impl(mesh, dofs, g, false)
}

pub fn assemble_load_seq<F>(mesh: &Mesh, dofs: &DofMap, g: &F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    assemble_load_impl(mesh, dofs, g, true)
}

/// Test space selector for functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Interior DOFs only (zero boundary trace).
    V,
    /// All DOFs.
    Q,
}

/// `a_h(I_h g, φ_i)` for every basis function of the selected space, where
/// `I_h` is P2 nodal interpolation. Assembles a_h internally and applies it
/// to the interpolant coefficients.
pub fn apply_ah_to_function(
    mesh: &Mesh,
    dofs: &DofMap,
    cfg: &PenaltyConfig,
    g: &dyn ScalarField,
    space: Space,
) -> Vec<f64> {
    let a = assemble_ah(mesh, dofs, cfg);
    let coeffs = FeFunction::interpolate(mesh, dofs, |x, y| g.value(x, y));
    let y = a.matvec(&coeffs.coeffs);
    match space {
        Space::Q => y,
        Space::V => dofs.interior_dofs.iter().map(|&d| y[d]).collect(),
    }
}
