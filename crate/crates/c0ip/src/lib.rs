//! Quadratic C0 interior penalty (C0-IP) finite elements for the fourth-order
//! Dirichlet boundary control problem on the unit square.
//!
//! The continuous problem minimizes `1/2 ||u - u_d||^2 + alpha/2 |p - p_d|^2_{H^2}`
//! subject to the clamped biharmonic state equation `Δ²u = f`, `u = p`,
//! `∂u/∂n = 0` on the boundary, with the control `p` acting through the
//! boundary trace. Discretization uses continuous piecewise quadratics with
//! interior penalty terms replacing C1 continuity.
//!
//! The crate provides:
//! - [`mesh`]: conforming triangulations with uniform (red) and newest vertex
//!   bisection refinement,
//! - [`fe`]: P2 Lagrange degrees of freedom and the V_h / Q_h distinction,
//! - [`quad`]: triangle and edge quadrature rules,
//! - [`assembly`]: the C0-IP bilinear form, mass matrix and load functionals,
//! - [`kkt`]: the coupled three-field optimality system and its direct solve,
//! - [`cases`]: built-in benchmark problems with exact solutions,
//! - [`norms`]: mesh-dependent energy and L2 error norms plus convergence orders,
//! - [`estimator`]: the residual a posteriori error estimator (eta_1..eta_8),
//! - [`afem`]: the SOLVE -> ESTIMATE -> MARK -> REFINE adaptive loop,
//! - [`study`], [`report`], [`cli`]: study drivers and the `c0ip-control`
//!   command line front end.
//!
//! With the default `parallel` feature, element and edge loops run on the
//! rayon pool; results are collected in index order and reduced sequentially,
//! so outputs do not depend on the number of worker threads. Sequential
//! variants (`*_seq`) of the hot kernels are always available and are compared
//! against the parallel path in the criterion bench suite.

pub mod afem;
pub mod assembly;
pub mod cases;
pub mod cli;
pub mod estimator;
pub mod fe;
pub mod field;
pub mod kkt;
pub mod mesh;
pub mod norms;
pub mod quad;
pub mod report;
pub mod sparse;
pub mod study;

mod exec;
