//! Quadratic Lagrange degrees of freedom and finite element functions.
//!
//! One DOF per vertex and one per edge midpoint; vertices come first (mesh
//! order), then edges (lexicographic order), making the numbering
//! reproducible. A DOF is a boundary DOF iff its node lies on a boundary edge
//! (midpoints of boundary edges and every vertex of a boundary edge).
//!
//! The two discrete spaces are the full P2 space Q_h (no essential
//! condition) and V_h, the zero-trace subspace. V_h never gets its own
//! assembly: operators are assembled on Q_h and restricted to
//! `interior_dofs` rows/columns.
//!
//! Local basis order on a triangle: vertex functions `λ_k (2 λ_k - 1)` for
//! k = 0..3, then midpoint functions `4 λ_i λ_j` for the edge opposite local
//! vertex k (local index 3 + k).

use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dofs: usize,
    pub n_vertices: usize,
    /// Boundary mask per DOF.
    pub boundary: Vec<bool>,
    /// Interior DOFs in increasing order; spans V_h.
    pub interior_dofs: Vec<usize>,
}

impl DofMap {
    pub fn build(mesh: &Mesh) -> DofMap {
        let nv = mesh.vertices.len();
        let n_dofs = nv + mesh.edges.len();
        let mut boundary = vec![false; n_dofs];
        for (e, edge) in mesh.edges.iter().enumerate() {
            if edge.boundary {
                boundary[edge.v[0]] = true;
                boundary[edge.v[1]] = true;
                boundary[nv + e] = true;
            }
        }
        let interior_dofs = (0..n_dofs).filter(|&d| !boundary[d]).collect();
        DofMap {
            n_dofs,
            n_vertices: nv,
            boundary,
            interior_dofs,
        }
    }

    pub fn dof_of_vertex(&self, v: usize) -> usize {
        v
    }

    pub fn dof_of_edge_midpoint(&self, e: usize) -> usize {
        self.n_vertices + e
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    pub fn boundary_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&d| self.boundary[d]).collect()
    }

    /// Maps a DOF to its position within `interior_dofs`, or None for
    /// boundary DOFs. Used to slice Q_h operators down to V_h.
    pub fn interior_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.n_dofs];
        for (i, &d) in self.interior_dofs.iter().enumerate() {
            idx[d] = Some(i);
        }
        idx
    }

    /// Node position of a DOF: the vertex, or the edge midpoint.
    pub fn node_position(&self, mesh: &Mesh, dof: usize) -> [f64; 2] {
        if dof < self.n_vertices {
            let v = mesh.vertices[dof];
            [v.x, v.y]
        } else {
            let edge = &mesh.edges[dof - self.n_vertices];
            let a = mesh.vertices[edge.v[0]];
            let b = mesh.vertices[edge.v[1]];
            [0.5 * (a.x + b.x), 0.5 * (a.y + b.y)]
        }
    }

    /// Global DOFs of triangle `t` in local basis order.
    pub fn local_dofs(&self, mesh: &Mesh, t: usize) -> [usize; 6] {
        let tri = &mesh.triangles[t];
        let edges = &mesh.edge_of_triangle[t];
        [
            tri.v[0],
            tri.v[1],
            tri.v[2],
            self.n_vertices + edges[0],
            self.n_vertices + edges[1],
            self.n_vertices + edges[2],
        ]
    }
}

/// Values of the six P2 shape functions at barycentric coordinates `l`.
pub fn shape_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// Gradients of the shape functions at `l`, given constant barycentric
/// gradients `g`.
pub fn shape_gradients(g: &[[f64; 2]; 3], l: [f64; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for k in 0..3 {
        let c = 4.0 * l[k] - 1.0;
        out[k] = [c * g[k][0], c * g[k][1]];
    }
    for k in 0..3 {
        let i = (k + 1) % 3;
        let j = (k + 2) % 3;
        out[3 + k] = [
            4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
            4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
        ];
    }
    out
}

/// Laplacians of the shape functions (constant on the triangle).
pub fn shape_laplacians(g: &[[f64; 2]; 3]) -> [f64; 6] {
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let mut out = [0.0; 6];
    for k in 0..3 {
        out[k] = 4.0 * dot(g[k], g[k]);
    }
    for k in 0..3 {
        let i = (k + 1) % 3;
        let j = (k + 2) % 3;
        out[3 + k] = 8.0 * dot(g[i], g[j]);
    }
    out
}

/// Piecewise quadratic function given by nodal coefficients (vertex values,
/// then edge midpoint values).
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(n: usize) -> FeFunction {
        FeFunction { coeffs: vec![0.0; n] }
    }

    /// Nodal interpolant: samples `f` at every DOF node.
    pub fn interpolate(mesh: &Mesh, dofs: &DofMap, f: impl Fn(f64, f64) -> f64) -> FeFunction {
        let coeffs = (0..dofs.n_dofs)
            .map(|d| {
                let p = dofs.node_position(mesh, d);
                f(p[0], p[1])
            })
            .collect();
        FeFunction { coeffs }
    }

    pub fn eval(&self, mesh: &Mesh, dofs: &DofMap, t: usize, bary: [f64; 3]) -> f64 {
        assert!(t < mesh.triangles.len(), "triangle index {t} out of range");
        let ld = dofs.local_dofs(mesh, t);
        let n = shape_values(bary);
        (0..6).map(|i| self.coeffs[ld[i]] * n[i]).sum()
    }

    pub fn eval_gradient(&self, mesh: &Mesh, dofs: &DofMap, t: usize, bary: [f64; 3]) -> [f64; 2] {
        assert!(t < mesh.triangles.len(), "triangle index {t} out of range");
        let ld = dofs.local_dofs(mesh, t);
        let g = mesh.bary_gradients(t);
        let gn = shape_gradients(&g, bary);
        let mut out = [0.0; 2];
        for i in 0..6 {
            out[0] += self.coeffs[ld[i]] * gn[i][0];
            out[1] += self.coeffs[ld[i]] * gn[i][1];
        }
        out
    }

    /// Laplacian on triangle `t` (constant for quadratics).
    pub fn eval_laplacian(&self, mesh: &Mesh, dofs: &DofMap, t: usize) -> f64 {
        assert!(t < mesh.triangles.len(), "triangle index {t} out of range");
        let ld = dofs.local_dofs(mesh, t);
        let g = mesh.bary_gradients(t);
        let lap = shape_laplacians(&g);
        (0..6).map(|i| self.coeffs[ld[i]] * lap[i]).sum()
    }
}
