//! The coupled discrete optimality system and its direct solve.
//!
//! Unknowns are ordered `[u_f (interior DOFs), φ (interior DOFs), q (all
//! DOFs)]` with `u = u_f + q`. Writing A for a_h and M for the mass matrix,
//! moving all unknowns left gives the three block rows
//!
//! ```text
//! A_VV u_f              + A_VQ q                    =  F_V
//! -M_VV u_f + A_VV φ    - M_VQ q                    = -U_{d,V}
//!  M_QV u_f - A_QV φ    + (α A_QQ + M_QQ) q         =  U_{d,Q} + α G_{p_d}
//! ```
//!
//! where `G_{p_d} = a_h(I_h p_d, φ_i)` carries the shift control through its
//! P2 interpolant. The blocks are row/column restrictions of the same two
//! assembled matrices, so the symmetry `A_QV = A_VQ^T` holds entry-exact.
//! The system is solved monolithically by unsymmetric sparse LU; no
//! definiteness is assumed.

use crate::assembly::{assemble_ah, assemble_load, assemble_mass, PenaltyConfig};
use crate::cases::ManufacturedCase;
use crate::fe::{DofMap, FeFunction};
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::sparse::{lu_solve, norm2, sub, CsrMatrix, SolveError};

/// Relative residual the direct solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub struct KktSystem {
    /// a_h on Q_h x Q_h.
    pub a: CsrMatrix,
    /// Mass matrix on Q_h x Q_h.
    pub mass: CsrMatrix,
    /// Assembled block system, dimension `2 n_interior + n_dofs`.
    pub kkt: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_dofs: usize,
    pub n_interior: usize,
    pub alpha: f64,
}

pub struct KktSolution {
    /// Homogeneous state part, zero on boundary DOFs.
    pub u_f: FeFunction,
    /// Adjoint state, zero on boundary DOFs.
    pub phi: FeFunction,
    /// Control.
    pub q: FeFunction,
    /// State u = u_f + q.
    pub u: FeFunction,
    pub alpha: f64,
    /// Relative residual of the monolithic solve.
    pub residual_norm: f64,
}

/// Relative residuals of the three variational equations after a solve.
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub state: f64,
    pub adjoint: f64,
    pub control: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.state.max(self.adjoint).max(self.control)
    }
}

pub fn build_kkt(mesh: &Mesh, dofs: &DofMap, cfg: &PenaltyConfig, case: &ManufacturedCase) -> KktSystem {
    let a = assemble_ah(mesh, dofs, cfg);
    let mass = assemble_mass(mesh, dofs);
    let n = dofs.n_dofs;
    let ni = dofs.interior_dofs.len();
    let interior = &dofs.interior_dofs;
    let interior_map = dofs.interior_index();
    let identity: Vec<Option<usize>> = (0..n).map(Some).collect();
    let all: Vec<usize> = (0..n).collect();
    let alpha = case.alpha;

    let a_vv = a.restrict(interior, &interior_map, ni);
    let a_vq = a.restrict(interior, &identity, n);
    let a_qv = a.restrict(&all, &interior_map, ni);
    let m_vv = mass.restrict(interior, &interior_map, ni);
    let m_vq = mass.restrict(interior, &identity, n);
    let m_qv = mass.restrict(&all, &interior_map, ni);

    let dim = 2 * ni + n;
    let mut triplets = Vec::with_capacity(2 * a.nnz() + 2 * mass.nnz() + a_vv.nnz() * 2 + m_vv.nnz());
    // Row 1: state equation tested against V_h.
    for (r, c, v) in a_vv.triplets() {
        triplets.push((r, c, v));
    }
    for (r, c, v) in a_vq.triplets() {
        triplets.push((r, 2 * ni + c, v));
    }
    // Row 2: adjoint equation tested against V_h.
    for (r, c, v) in m_vv.triplets() {
        triplets.push((ni + r, c, -v));
    }
    for (r, c, v) in a_vv.triplets() {
        triplets.push((ni + r, ni + c, v));
    }
    for (r, c, v) in m_vq.triplets() {
        triplets.push((ni + r, 2 * ni + c, -v));
    }
    // Row 3: gradient equation tested against Q_h.
    for (r, c, v) in m_qv.triplets() {
        triplets.push((2 * ni + r, c, v));
    }
    for (r, c, v) in a_qv.triplets() {
        triplets.push((2 * ni + r, ni + c, -v));
    }
    for (r, c, v) in a.triplets() {
        triplets.push((2 * ni + r, 2 * ni + c, alpha * v));
    }
    for (r, c, v) in mass.triplets() {
        triplets.push((2 * ni + r, 2 * ni + c, v));
    }
    let kkt = CsrMatrix::from_triplets(dim, dim, triplets);

    let f_vec = assemble_load(mesh, dofs, &|x, y| case.f.value(x, y));
    let ud_vec = assemble_load(mesh, dofs, &|x, y| case.u_d.value(x, y));
    let pd_coeffs = FeFunction::interpolate(mesh, dofs, |x, y| case.p_d.value(x, y));
    let g_pd = a.matvec(&pd_coeffs.coeffs);

    let mut rhs = vec![0.0; dim];
    for (i, &d) in interior.iter().enumerate() {
        rhs[i] = f_vec[d];
        rhs[ni + i] = -ud_vec[d];
    }
    for d in 0..n {
        rhs[2 * ni + d] = ud_vec[d] + alpha * g_pd[d];
    }

    KktSystem {
        a,
        mass,
        kkt,
        rhs,
        n_dofs: n,
        n_interior: ni,
        alpha,
    }
}

/// Scaled (backward-error style) residual `||r|| / (||b|| + ||A||_inf ||x||)`.
/// The unscaled `||r||/||b||` has a rounding floor of `eps ||A|| ||x|| / ||b||`
/// in f64, which exceeds the solver tolerance whenever the data are small
/// against the operator scale (constant case, fine meshes), so the residual
/// contract is enforced against the data-scaled measure.
fn scaled_residual(rnorm: f64, bnorm: f64, anorm: f64, xnorm: f64) -> f64 {
    let denom = bnorm + anorm * xnorm;
    if denom > 0.0 {
        rnorm / denom
    } else {
        rnorm
    }
}

pub fn solve_kkt(sys: &KktSystem, dofs: &DofMap) -> Result<KktSolution, SolveError> {
    let x = lu_solve(&sys.kkt, &sys.rhs)?;
    let r = sub(&sys.rhs, &sys.kkt.matvec(&x));
    let residual = scaled_residual(norm2(&r), norm2(&sys.rhs), sys.kkt.inf_norm(), norm2(&x));
    if residual > RESIDUAL_TOL {
        return Err(SolveError::ResidualTooLarge {
            achieved: residual,
            tol: RESIDUAL_TOL,
        });
    }
    let ni = sys.n_interior;
    let mut u_f = FeFunction::zeros(sys.n_dofs);
    let mut phi = FeFunction::zeros(sys.n_dofs);
    for (i, &d) in dofs.interior_dofs.iter().enumerate() {
        u_f.coeffs[d] = x[i];
        phi.coeffs[d] = x[ni + i];
    }
    let q = FeFunction {
        coeffs: x[2 * ni..].to_vec(),
    };
    let u = FeFunction {
        coeffs: u_f
            .coeffs
            .iter()
            .zip(&q.coeffs)
            .map(|(a, b)| a + b)
            .collect(),
    };
    Ok(KktSolution {
        u_f,
        phi,
        q,
        u,
        alpha: sys.alpha,
        residual_norm: residual,
    })
}

/// Per-equation residuals of a solution, testing each variational equation
/// against every basis function of its test space. Each block residual is
/// scaled by `||b_blk|| + ||K_blk||_inf ||x||` (see [`solve_kkt`]).
pub fn variational_residuals(sys: &KktSystem, dofs: &DofMap, sol: &KktSolution) -> KktResiduals {
    let ni = sys.n_interior;
    let mut x = vec![0.0; 2 * ni + sys.n_dofs];
    for (i, &d) in dofs.interior_dofs.iter().enumerate() {
        x[i] = sol.u_f.coeffs[d];
        x[ni + i] = sol.phi.coeffs[d];
    }
    x[2 * ni..].copy_from_slice(&sol.q.coeffs);
    let r = sub(&sys.rhs, &sys.kkt.matvec(&x));
    let xnorm = norm2(&x);
    let rel = |range: std::ops::Range<usize>| {
        let rn = norm2(&r[range.clone()]);
        let bn = norm2(&sys.rhs[range.clone()]);
        scaled_residual(rn, bn, sys.kkt.inf_norm_rows(range), xnorm)
    };
    KktResiduals {
        state: rel(0..ni),
        adjoint: rel(ni..2 * ni),
        control: rel(2 * ni..2 * ni + sys.n_dofs),
    }
}

/// Export per-DOF solution values as CSV lines `dof,x,y,u,phi,q`.
pub fn write_solution_csv(
    mesh: &Mesh,
    dofs: &DofMap,
    sol: &KktSolution,
    w: &mut impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(w, "dof,x,y,u,phi,q")?;
    for d in 0..dofs.n_dofs {
        let p = dofs.node_position(mesh, d);
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            d, p[0], p[1], sol.u.coeffs[d], sol.phi.coeffs[d], sol.q.coeffs[d]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{constant_case, example1};

    fn setup(n: usize, case: &ManufacturedCase) -> (Mesh, DofMap, KktSystem) {
        let mesh = Mesh::unit_square(n);
        let dofs = DofMap::build(&mesh);
        let sys = build_kkt(&mesh, &dofs, &PenaltyConfig::default(), case);
        (mesh, dofs, sys)
    }

    #[test]
    fn dimensions_follow_block_layout() {
        let case = example1();
        let (_, dofs, sys) = setup(4, &case);
        let dim = 2 * dofs.interior_dofs.len() + dofs.n_dofs;
        assert_eq!(sys.kkt.nrows, dim);
        assert_eq!(sys.kkt.ncols, dim);
        assert_eq!(sys.rhs.len(), dim);
    }

    #[test]
    fn zero_data_gives_zero_rhs_and_zero_solution() {
        let case = constant_case(0.0);
        let (_, dofs, sys) = setup(3, &case);
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
        let sol = solve_kkt(&sys, &dofs).unwrap();
        assert!(sol.u.coeffs.iter().all(|&v| v.abs() < 1e-12));
        assert!(sol.phi.coeffs.iter().all(|&v| v.abs() < 1e-12));
        assert!(sol.q.coeffs.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_case_is_reproduced_exactly() {
        let case = constant_case(1.0);
        let (_, dofs, sys) = setup(4, &case);
        // The exact interpolant has zero residual in every equation.
        let sol_exact = KktSolution {
            u_f: FeFunction::zeros(dofs.n_dofs),
            phi: FeFunction::zeros(dofs.n_dofs),
            q: FeFunction {
                coeffs: vec![1.0; dofs.n_dofs],
            },
            u: FeFunction {
                coeffs: vec![1.0; dofs.n_dofs],
            },
            alpha: 1.0,
            residual_norm: 0.0,
        };
        let res = variational_residuals(&sys, &dofs, &sol_exact);
        assert!(res.max() < 1e-10, "exact interpolant residual {:?}", res);

        let sol = solve_kkt(&sys, &dofs).unwrap();
        for d in 0..dofs.n_dofs {
            assert!((sol.u.coeffs[d] - 1.0).abs() < 1e-8, "u[{d}]");
            assert!(sol.phi.coeffs[d].abs() < 1e-8, "phi[{d}]");
            assert!((sol.q.coeffs[d] - 1.0).abs() < 1e-8, "q[{d}]");
        }
        // Boundary coefficients of u_f and phi are exactly zero.
        for d in dofs.boundary_dofs() {
            assert_eq!(sol.u_f.coeffs[d], 0.0);
            assert_eq!(sol.phi.coeffs[d], 0.0);
        }
    }

    #[test]
    fn solution_scales_linearly_in_the_constant() {
        let (_, dofs1, sys1) = setup(3, &constant_case(1.0));
        let (_, dofs25, sys25) = setup(3, &constant_case(2.5));
        let s1 = solve_kkt(&sys1, &dofs1).unwrap();
        let s25 = solve_kkt(&sys25, &dofs25).unwrap();
        for d in 0..dofs1.n_dofs {
            assert!((s25.u.coeffs[d] - 2.5 * s1.u.coeffs[d]).abs() < 1e-9);
            assert!((s25.q.coeffs[d] - 2.5 * s1.q.coeffs[d]).abs() < 1e-9);
            assert!((s25.phi.coeffs[d] - 2.5 * s1.phi.coeffs[d]).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_row_block_is_transpose_of_state_row_block() {
        let case = example1();
        let (_, dofs, sys) = setup(3, &case);
        let n = dofs.n_dofs;
        let ni = dofs.interior_dofs.len();
        let interior_map = dofs.interior_index();
        let identity: Vec<Option<usize>> = (0..n).map(Some).collect();
        let all: Vec<usize> = (0..n).collect();
        let a_vq = sys.a.restrict(&dofs.interior_dofs, &identity, n);
        let a_qv = sys.a.restrict(&all, &interior_map, ni);
        // Entry-exact transpose equality.
        let transposed = CsrMatrix::from_triplets(
            n,
            ni,
            a_vq.triplets().map(|(r, c, v)| (c, r, v)).collect(),
        );
        assert_eq!(a_qv, transposed);
    }

    #[test]
    fn example1_residuals_are_tiny() {
        let case = example1();
        let (_, dofs, sys) = setup(4, &case);
        let sol = solve_kkt(&sys, &dofs).unwrap();
        assert!(sol.residual_norm <= RESIDUAL_TOL);
        let res = variational_residuals(&sys, &dofs, &sol);
        assert!(res.max() <= 1e-9, "residuals {res:?}");
    }

    #[test]
    fn solution_csv_has_header_and_rows() {
        let case = constant_case(1.0);
        let (mesh, dofs, sys) = setup(2, &case);
        let sol = solve_kkt(&sys, &dofs).unwrap();
        let mut buf = Vec::new();
        write_solution_csv(&mesh, &dofs, &sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dof,x,y,u,phi,q");
        assert_eq!(lines.len(), 1 + dofs.n_dofs);
    }
}
