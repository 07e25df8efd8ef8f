//! Conforming triangulations of the unit square with uniform (red) refinement
//! and newest vertex bisection (NVB).
//!
//! Conventions, fixed once so that degree-of-freedom numbering and assembly
//! are reproducible:
//! - triangle vertices are stored counterclockwise;
//! - local edge `k` of a triangle is the edge opposite local vertex `k`;
//! - global edges are numbered lexicographically by their sorted vertex pair;
//! - the structured unit square splits each cell along the lower-left to
//!   upper-right diagonal, and the initial refinement edge is the hypotenuse,
//!   which makes the mesh NVB-compatible.
//!
//! Meshes are immutable after construction; refinement returns a new mesh.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {vertex} out of range")]
    VertexOutOfRange { tri: usize, vertex: usize },
    #[error("triangle {tri} has repeated vertices")]
    RepeatedVertex { tri: usize },
    #[error("triangle {tri} has non-positive signed area {area}")]
    NonPositiveArea { tri: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("non-finite vertex coordinate at vertex {0}")]
    NonFiniteVertex(usize),
    #[error("edge {edge} boundary flag inconsistent with adjacency")]
    BoundaryFlagMismatch { edge: usize },
    #[error("vertex {vertex} hangs on edge {edge}")]
    HangingVertex { vertex: usize, edge: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
}

impl Vertex {
    pub fn new(x: f64, y: f64) -> Self {
        Vertex { x, y }
    }

    fn midpoint(a: Vertex, b: Vertex) -> Vertex {
        Vertex::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    /// Vertex indices, counterclockwise.
    pub v: [usize; 3],
    /// Local index (0..3) of the edge opposite the newest vertex; this is the
    /// edge bisected by NVB.
    pub refinement_edge: usize,
    /// Bisection generation, 0 on initial meshes.
    pub generation: u32,
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Sorted vertex pair.
    pub v: [usize; 2],
    /// Adjacent triangles; `tris.0` is the lower-indexed one and serves as
    /// the minus side for jump and normal orientation.
    pub tris: (usize, Option<usize>),
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
    /// For each triangle, global edge index of local edge k (opposite local
    /// vertex k).
    pub edge_of_triangle: Vec<[usize; 3]>,
}

impl Mesh {
    /// Rebuilds edge topology from a triangle list. Fails on inverted or
    /// degenerate triangles and non-manifold edges.
    pub fn from_triangles(vertices: Vec<Vertex>, triangles: Vec<Triangle>) -> Result<Mesh, MeshError> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(MeshError::NonFiniteVertex(i));
            }
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &vi in &tri.v {
                if vi >= nv {
                    return Err(MeshError::VertexOutOfRange { tri: t, vertex: vi });
                }
            }
            if tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2] {
                return Err(MeshError::RepeatedVertex { tri: t });
            }
            let area = signed_area(
                vertices[tri.v[0]],
                vertices[tri.v[1]],
                vertices[tri.v[2]],
            );
            if area <= 0.0 {
                return Err(MeshError::NonPositiveArea { tri: t, area });
            }
        }

        // Lexicographic edge numbering by sorted vertex pair.
        let mut adjacency: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let pair = sorted_pair(tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
                adjacency.entry(pair).or_default().push(t);
            }
        }
        let mut edges = Vec::with_capacity(adjacency.len());
        let mut edge_id: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for (pair, mut tris) in adjacency {
            tris.sort_unstable();
            let edge = match tris.as_slice() {
                [a] => Edge {
                    v: pair,
                    tris: (*a, None),
                    boundary: true,
                },
                [a, b] => Edge {
                    v: pair,
                    tris: (*a, Some(*b)),
                    boundary: false,
                },
                _ => return Err(MeshError::NonManifoldEdge(pair[0], pair[1])),
            };
            edge_id.insert(pair, edges.len());
            edges.push(edge);
        }
        let edge_of_triangle = triangles
            .iter()
            .map(|tri| {
                let mut e = [0usize; 3];
                for k in 0..3 {
                    e[k] = edge_id[&sorted_pair(tri.v[(k + 1) % 3], tri.v[(k + 2) % 3])];
                }
                e
            })
            .collect();
        Ok(Mesh {
            vertices,
            triangles,
            edges,
            edge_of_triangle,
        })
    }

    /// Structured mesh of the unit square: n x n cells, each split along the
    /// lower-left to upper-right diagonal (2 n^2 triangles). Refinement edges
    /// are the hypotenuses.
    pub fn unit_square(n: usize) -> Mesh {
        assert!(n >= 1, "unit_square requires n >= 1");
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push(Vertex::new(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        let vid = |i: usize, j: usize| j * np + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let ll = vid(i, j);
                let lr = vid(i + 1, j);
                let ur = vid(i + 1, j + 1);
                let ul = vid(i, j + 1);
                for v in [[ll, lr, ur], [ll, ur, ul]] {
                    triangles.push(Triangle {
                        v,
                        refinement_edge: longest_edge_local(&vertices, v),
                        generation: 0,
                    });
                }
            }
        }
        Mesh::from_triangles(vertices, triangles).expect("structured mesh is valid")
    }

    /// Red refinement: every triangle is split into four congruent children
    /// through the edge midpoints. Children take the longest edge as
    /// refinement edge, which on the structured right-isosceles meshes used
    /// here is again the hypotenuse.
    pub fn uniform_refine(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for e in &self.edges {
            vertices.push(Vertex::midpoint(self.vertices[e.v[0]], self.vertices[e.v[1]]));
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [p0, p1, p2] = tri.v;
            let m = |k: usize| nv + self.edge_of_triangle[t][k];
            let children = [
                [p0, m(2), m(1)],
                [m(2), p1, m(0)],
                [m(1), m(0), p2],
                [m(0), m(1), m(2)],
            ];
            for v in children {
                triangles.push(Triangle {
                    v,
                    refinement_edge: longest_edge_local(&vertices, v),
                    generation: tri.generation + 1,
                });
            }
        }
        Mesh::from_triangles(vertices, triangles).expect("red refinement keeps the mesh valid")
    }

    /// Newest vertex bisection of the marked triangles with conforming
    /// closure. Every marked triangle is bisected through its refinement edge
    /// at least once; closure bisections are added until no hanging vertex
    /// remains.
    pub fn nvb_refine(&self, marked: &[usize]) -> Mesh {
        let mut cut = vec![false; self.edges.len()];
        for &t in marked {
            assert!(t < self.triangles.len(), "marked triangle {t} out of range");
            cut[self.edge_of_triangle[t][self.triangles[t].refinement_edge]] = true;
        }
        // Closure: a triangle with any cut edge must also cut its refinement
        // edge. Iterate to a fixpoint; the cut set only grows.
        loop {
            let mut changed = false;
            for (t, tri) in self.triangles.iter().enumerate() {
                let re = self.edge_of_triangle[t][tri.refinement_edge];
                if !cut[re] && self.edge_of_triangle[t].iter().any(|&e| cut[e]) {
                    cut[re] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if cut[e] {
                midpoint.insert(edge.v, vertices.len());
                vertices.push(Vertex::midpoint(
                    self.vertices[edge.v[0]],
                    self.vertices[edge.v[1]],
                ));
            }
        }

        fn split(
            v: [usize; 3],
            refinement_edge: usize,
            generation: u32,
            midpoint: &BTreeMap<[usize; 2], usize>,
            out: &mut Vec<Triangle>,
        ) {
            let a = v[refinement_edge];
            let b = v[(refinement_edge + 1) % 3];
            let c = v[(refinement_edge + 2) % 3];
            match midpoint.get(&sorted_pair(b, c)) {
                None => out.push(Triangle {
                    v,
                    refinement_edge,
                    generation,
                }),
                Some(&m) => {
                    // Children keep the orientation; their refinement edge is
                    // the old edge opposite the new vertex m.
                    split([a, b, m], 2, generation + 1, midpoint, out);
                    split([a, m, c], 1, generation + 1, midpoint, out);
                }
            }
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() + 2 * marked.len());
        for tri in &self.triangles {
            split(tri.v, tri.refinement_edge, tri.generation, &midpoint, &mut triangles);
        }
        Mesh::from_triangles(vertices, triangles).expect("bisection keeps the mesh valid")
    }

    /// Topological conformity checks: adjacency counts, boundary flags,
    /// orientation. Cheap enough to run after every refinement in tests.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (t, tri) in self.triangles.iter().enumerate() {
            let area = self.signed_area(t);
            if area <= 0.0 {
                return Err(MeshError::NonPositiveArea { tri: t, area });
            }
            if tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2] {
                return Err(MeshError::RepeatedVertex { tri: t });
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.boundary != edge.tris.1.is_none() {
                return Err(MeshError::BoundaryFlagMismatch { edge: e });
            }
        }
        Ok(())
    }

    /// Geometric conformity: no vertex may lie strictly inside another
    /// triangle's edge. O(V * E); meant for tests.
    pub fn validate_geometry(&self) -> Result<(), MeshError> {
        for (e, edge) in self.edges.iter().enumerate() {
            let a = self.vertices[edge.v[0]];
            let b = self.vertices[edge.v[1]];
            for (vi, p) in self.vertices.iter().enumerate() {
                if vi == edge.v[0] || vi == edge.v[1] {
                    continue;
                }
                let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
                let dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
                let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
                if cross.abs() < 1e-12 && dot > 1e-12 && dot < len2 * (1.0 - 1e-12) {
                    return Err(MeshError::HangingVertex { vertex: vi, edge: e });
                }
            }
        }
        Ok(())
    }

    pub fn tri_points(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = &self.triangles[t];
        [
            [self.vertices[tri.v[0]].x, self.vertices[tri.v[0]].y],
            [self.vertices[tri.v[1]].x, self.vertices[tri.v[1]].y],
            [self.vertices[tri.v[2]].x, self.vertices[tri.v[2]].y],
        ]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let tri = &self.triangles[t];
        signed_area(
            self.vertices[tri.v[0]],
            self.vertices[tri.v[1]],
            self.vertices[tri.v[2]],
        )
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        self.signed_area(t)
    }

    /// Squared diameter (longest edge) of triangle `t`, computed without a
    /// square root so refinement halves it exactly for dyadic coordinates.
    pub fn tri_diameter_sq(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        let mut d2: f64 = 0.0;
        for k in 0..3 {
            let q = p[(k + 1) % 3];
            let r = p[(k + 2) % 3];
            d2 = d2.max((q[0] - r[0]).powi(2) + (q[1] - r[1]).powi(2));
        }
        d2
    }

    pub fn tri_diameter(&self, t: usize) -> f64 {
        self.tri_diameter_sq(t).sqrt()
    }

    /// Mesh size h: maximum triangle diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.tri_diameter_sq(t))
            .fold(0.0_f64, f64::max)
            .sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.tri_points(t);
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cosang = (u[0] * v[0] + u[1] * v[1])
                    / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                min = min.min(cosang.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Gradients of the three barycentric coordinates on triangle `t`
    /// (constant vectors).
    pub fn bary_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let p = self.tri_points(t);
        let inv2a = 1.0 / (2.0 * self.signed_area(t));
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let b = p[(k + 1) % 3];
            let c = p[(k + 2) % 3];
            g[k] = [(b[1] - c[1]) * inv2a, (c[0] - b[0]) * inv2a];
        }
        g
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let edge = &self.edges[e];
        let a = self.vertices[edge.v[0]];
        let b = self.vertices[edge.v[1]];
        ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()
    }

    /// Plain-text export: `vertices <n>` followed by `x y` lines, then
    /// `triangles <m>` followed by 0-based `i j k` lines.
    pub fn write_text(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {}", v.x, v.y)?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t.v[0], t.v[1], t.v[2])?;
        }
        Ok(())
    }
}

fn signed_area(a: Vertex, b: Vertex, c: Vertex) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Local index of the strictly longest edge (lowest index wins ties).
fn longest_edge_local(vertices: &[Vertex], v: [usize; 3]) -> usize {
    let mut best = 0;
    let mut best_len = -1.0;
    for k in 0..3 {
        let a = vertices[v[(k + 1) % 3]];
        let b = vertices[v[(k + 2) % 3]];
        let len2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
        if len2 > best_len {
            best_len = len2;
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conforming(mesh: &Mesh) {
        mesh.validate().unwrap();
        mesh.validate_geometry().unwrap();
    }

    #[test]
    fn unit_square_counts() {
        let m1 = Mesh::unit_square(1);
        assert_eq!(m1.vertices.len(), 4);
        assert_eq!(m1.triangles.len(), 2);
        assert_eq!(m1.edges.len(), 5);
        assert_eq!(m1.edges.iter().filter(|e| e.boundary).count(), 4);
        assert_eq!(m1.edges.iter().filter(|e| !e.boundary).count(), 1);
        conforming(&m1);

        let m2 = Mesh::unit_square(2);
        assert_eq!(m2.vertices.len(), 9);
        assert_eq!(m2.triangles.len(), 8);
        assert_eq!(m2.edges.len(), 16);
        assert_eq!(m2.edges.iter().filter(|e| e.boundary).count(), 8);
        assert_eq!(m2.edges.iter().filter(|e| !e.boundary).count(), 8);
        conforming(&m2);
    }

    #[test]
    fn unit_square_h_is_hypotenuse() {
        let m = Mesh::unit_square(4);
        assert!((m.max_diameter() - 2.0_f64.sqrt() / 4.0).abs() < 1e-15);
        // All refinement edges are hypotenuses.
        for (t, tri) in m.triangles.iter().enumerate() {
            let e = m.edge_of_triangle[t][tri.refinement_edge];
            let len = m.edge_length(e);
            assert!((len - 2.0_f64.sqrt() / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_refine_quadruples() {
        let m = Mesh::unit_square(1);
        let r = m.uniform_refine();
        assert_eq!(r.triangles.len(), 8);
        conforming(&r);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        assert!((r.max_diameter() - m.max_diameter() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_refine_midpoint_child() {
        // Reference-style triangle (0,0),(1,0),(0,1) plus a mate to keep it a
        // valid mesh is unnecessary: a single triangle is a valid mesh.
        let vertices = vec![Vertex::new(0.0, 0.0), Vertex::new(1.0, 0.0), Vertex::new(0.0, 1.0)];
        let tris = vec![Triangle {
            v: [0, 1, 2],
            refinement_edge: 0,
            generation: 0,
        }];
        let m = Mesh::from_triangles(vertices, tris).unwrap();
        let r = m.uniform_refine();
        assert_eq!(r.triangles.len(), 4);
        let target = [[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];
        let found = r.triangles.iter().any(|t| {
            let mut pts: Vec<[f64; 2]> = t
                .v
                .iter()
                .map(|&v| [r.vertices[v].x, r.vertices[v].y])
                .collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut tgt = target.to_vec();
            tgt.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.iter()
                .zip(&tgt)
                .all(|(p, q)| (p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15)
        });
        assert!(found, "midpoint child missing");
    }

    #[test]
    fn double_uniform_refine_matches_structured() {
        let twice = Mesh::unit_square(1).uniform_refine().uniform_refine();
        let direct = Mesh::unit_square(4);
        let key = |m: &Mesh| {
            let mut v: Vec<(i64, i64)> = m
                .vertices
                .iter()
                .map(|p| ((p.x * 1e12).round() as i64, (p.y * 1e12).round() as i64))
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(key(&twice), key(&direct));
    }

    #[test]
    fn nvb_empty_marking_is_identity() {
        let m = Mesh::unit_square(2);
        let r = m.nvb_refine(&[]);
        assert_eq!(r.triangles.len(), m.triangles.len());
        assert_eq!(r.vertices.len(), m.vertices.len());
        for (a, b) in m.triangles.iter().zip(&r.triangles) {
            assert_eq!(a.v, b.v);
            assert_eq!(a.refinement_edge, b.refinement_edge);
        }
    }

    #[test]
    fn nvb_single_mark_bisects_pair() {
        // On the two-triangle square both triangles share the diagonal as
        // refinement edge, so marking one bisects both.
        let m = Mesh::unit_square(1);
        let r = m.nvb_refine(&[0]);
        assert_eq!(r.triangles.len(), 4);
        conforming(&r);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nvb_mark_all_doubles() {
        let mut m = Mesh::unit_square(2);
        let initial = m.triangles.len();
        let initial_angle = m.min_angle_deg();
        for k in 1..=4 {
            let all: Vec<usize> = (0..m.triangles.len()).collect();
            m = m.nvb_refine(&all);
            assert_eq!(m.triangles.len(), initial << k, "round {k}");
            conforming(&m);
            assert!((m.total_area() - 1.0).abs() < 1e-12);
            assert!(m.min_angle_deg() >= initial_angle / 2.0 - 1e-9);
        }
    }

    #[test]
    fn nvb_closure_keeps_conformity() {
        // Uneven marking forces closure across several patches.
        let mut m = Mesh::unit_square(2);
        for round in 0..6 {
            let marked: Vec<usize> = (0..m.triangles.len()).filter(|t| t % 3 == round % 3).collect();
            m = m.nvb_refine(&marked);
            conforming(&m);
            assert!((m.total_area() - 1.0).abs() < 1e-12);
            assert!(m.min_angle_deg() >= 45.0 / 2.0 - 1e-9);
        }
    }

    #[test]
    fn export_format() {
        let m = Mesh::unit_square(1);
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "vertices 4");
        assert_eq!(lines.next().unwrap(), "0 0");
        let body: Vec<&str> = text.lines().collect();
        assert!(body.contains(&"triangles 2"));
        assert_eq!(body.len(), 1 + 4 + 1 + 2);
    }
}
