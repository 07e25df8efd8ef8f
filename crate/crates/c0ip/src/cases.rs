//! Built-in benchmark problems with exact solutions.
//!
//! The trigonometric benchmark has
//!
//! ```text
//! u = sin²πx sin²πy + cosπx cosπy,   φ = sin⁴πx sin⁴πy,   q = cosπx cosπy,
//! f = Δ²u,   u_d = u − Δ²φ,   p_d = q,   α = 1,
//! ```
//!
//! on the unit square; all data derive symbolically from the three exact
//! fields (see [`crate::field`]), and a finite-difference cross-check guards
//! the construction. The constant case `u = q = c`, `φ = 0` solves the
//! optimality system exactly inside Q_h and exercises solver exactness.

use crate::field::{ScalarField, SmoothField, Trig1, TrigField};
use crate::mesh::Mesh;
use crate::quad::TriQuadRule;

pub struct ManufacturedCase {
    pub name: String,
    /// Regularization weight α > 0.
    pub alpha: f64,
    pub exact_u: SmoothField,
    pub exact_phi: SmoothField,
    pub exact_q: SmoothField,
    /// Source term f = Δ²u.
    pub f: SmoothField,
    /// Desired state u_d = u − Δ²φ.
    pub u_d: SmoothField,
    /// Shift control p_d.
    pub p_d: SmoothField,
}

/// Trigonometric benchmark with known smooth solution.
pub fn example1() -> ManufacturedCase {
    use std::f64::consts::PI;
    let u = TrigField::product(Trig1::sin_squared(PI), Trig1::sin_squared(PI))
        .plus(&TrigField::product(Trig1::cos(1.0, PI), Trig1::cos(1.0, PI)));
    let phi = TrigField::product(Trig1::sin_fourth(PI), Trig1::sin_fourth(PI));
    let q = TrigField::product(Trig1::cos(1.0, PI), Trig1::cos(1.0, PI));

    let f = u.bilaplacian_field();
    let u_d = u.clone().plus(&phi.bilaplacian_field().scaled(-1.0));

    ManufacturedCase {
        name: "example1".to_string(),
        alpha: 1.0,
        exact_u: SmoothField::new(u),
        exact_phi: SmoothField::new(phi),
        exact_q: SmoothField::new(q.clone()),
        f: SmoothField::new(f),
        u_d: SmoothField::new(u_d),
        p_d: SmoothField::new(q),
    }
}

/// Exactness smoke test: u = q = c, φ = 0, f = 0, u_d = c, p_d = c. The
/// optimality system is satisfied exactly and every field lies in Q_h.
pub fn constant_case(c: f64) -> ManufacturedCase {
    ManufacturedCase {
        name: format!("constant({c})"),
        alpha: 1.0,
        exact_u: SmoothField::new(TrigField::constant(c)),
        exact_phi: SmoothField::new(TrigField::zero()),
        exact_q: SmoothField::new(TrigField::constant(c)),
        f: SmoothField::new(TrigField::zero()),
        u_d: SmoothField::new(TrigField::constant(c)),
        p_d: SmoothField::new(TrigField::constant(c)),
    }
}

/// Case lookup for the CLI: `example1` or `constant` (c = 1).
pub fn by_name(name: &str) -> Option<ManufacturedCase> {
    match name {
        "example1" => Some(example1()),
        "constant" => Some(constant_case(1.0)),
        _ => None,
    }
}

/// Both sides of the bilinear-form identity `∫ Δp Δr = ∫ D²p : D²r`, valid
/// for fields with zero normal trace, via quadrature over the given mesh.
/// Returns (Laplacian product, Hessian product); closeness is the caller's
/// assertion.
pub fn hessian_identity_check(
    p: &dyn ScalarField,
    r: &dyn ScalarField,
    mesh: &Mesh,
    rule: &TriQuadRule,
) -> (f64, f64) {
    let mut lap = 0.0;
    let mut hess = 0.0;
    for t in 0..mesh.triangles.len() {
        let pts = mesh.tri_points(t);
        let area = mesh.tri_area(t);
        for (q, &w) in rule.points.iter().zip(&rule.weights) {
            let x = q[0] * pts[0][0] + q[1] * pts[1][0] + q[2] * pts[2][0];
            let y = q[0] * pts[0][1] + q[1] * pts[1][1] + q[2] * pts[2][1];
            lap += area * w * p.laplacian(x, y) * r.laplacian(x, y);
            let hp = p.hessian(x, y);
            let hr = r.hessian(x, y);
            hess += area * w * (hp[0] * hr[0] + 2.0 * hp[1] * hr[1] + hp[2] * hr[2]);
        }
    }
    (lap, hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::tri_rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn control_field_values() {
        let case = example1();
        assert!((case.exact_q.value(0.0, 0.0) - 1.0).abs() < 1e-15);
        // ∂q/∂n on the bottom edge is -∂/∂y[cosπx cosπy] at y = 0: zero.
        let g = case.exact_q.gradient(0.3, 0.0);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn source_term_at_center() {
        // Δ²(cosπx cosπy) vanishes at (1/2, 1/2); the sin² product
        // contributes 8π⁴ + 2·4π⁴ + 8π⁴ = 24π⁴.
        let case = example1();
        let expect = 24.0 * PI.powi(4);
        let got = case.f.value(0.5, 0.5);
        assert!((got - expect).abs() < 1e-9 * expect, "{got} vs {expect}");
    }

    #[test]
    fn boundary_admissibility() {
        // |φ|, |∂φ/∂n|, |∂q/∂n|, |∂u/∂n| vanish on the boundary.
        let case = example1();
        let mut worst = 0.0_f64;
        for k in 0..250 {
            let s = (k as f64 + 0.5) / 250.0;
            for (x, y, n) in [
                (s, 0.0, [0.0, -1.0]),
                (s, 1.0, [0.0, 1.0]),
                (0.0, s, [-1.0, 0.0]),
                (1.0, s, [1.0, 0.0]),
            ] {
                let gphi = case.exact_phi.gradient(x, y);
                let gq = case.exact_q.gradient(x, y);
                let gu = case.exact_u.gradient(x, y);
                worst = worst
                    .max(case.exact_phi.value(x, y).abs())
                    .max((gphi[0] * n[0] + gphi[1] * n[1]).abs())
                    .max((gq[0] * n[0] + gq[1] * n[1]).abs())
                    .max((gu[0] * n[0] + gu[1] * n[1]).abs());
            }
        }
        assert!(worst <= 1e-12, "boundary trace violation {worst}");
    }

    /// Fourth-order central difference for d²/dt² with step h.
    fn d2_fd4(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (-f(t - 2.0 * h) + 16.0 * f(t - h) - 30.0 * f(t) + 16.0 * f(t + h) - f(t + 2.0 * h))
            / (12.0 * h * h)
    }

    fn laplacian_fd(f: &dyn ScalarField, x: f64, y: f64, h: f64) -> f64 {
        d2_fd4(|t| f.value(t, y), x, h) + d2_fd4(|t| f.value(x, t), y, h)
    }

    fn bilaplacian_fd(f: &dyn ScalarField, x: f64, y: f64, h: f64) -> f64 {
        let lap = |xx: f64, yy: f64| {
            d2_fd4(|t| f.value(t, yy), xx, h) + d2_fd4(|t| f.value(xx, t), yy, h)
        };
        d2_fd4(|t| lap(t, y), x, h) + d2_fd4(|t| lap(x, t), y, h)
    }

    #[test]
    fn data_consistency_against_finite_differences() {
        // f = Δ²u and u_d = u − Δ²φ at random interior points, central
        // differences with step 1e-2. Guards transcription errors in the
        // closed forms.
        let case = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-2;
        for _ in 0..20 {
            let x = rng.gen_range(0.06..0.94);
            let y = rng.gen_range(0.06..0.94);
            let f_fd = bilaplacian_fd(&case.exact_u, x, y, h);
            let f_v = case.f.value(x, y);
            assert!(
                (f_fd - f_v).abs() <= 1e-4 * f_v.abs().max(1.0),
                "f at ({x},{y}): {f_v} vs fd {f_fd}"
            );
            let ud_fd = case.exact_u.value(x, y) - bilaplacian_fd(&case.exact_phi, x, y, h);
            let ud_v = case.u_d.value(x, y);
            assert!(
                (ud_fd - ud_v).abs() <= 1e-4 * ud_v.abs().max(1.0),
                "u_d at ({x},{y}): {ud_v} vs fd {ud_fd}"
            );
            // Laplacians feed the energy norms; check them too.
            let lap_fd = laplacian_fd(&case.exact_phi, x, y, h);
            assert!((lap_fd - case.exact_phi.laplacian(x, y)).abs() <= 1e-4 * lap_fd.abs().max(1.0));
        }
    }

    #[test]
    fn hessian_identity_on_field_pairs() {
        let mesh = Mesh::unit_square(32);
        let rule = tri_rule(10).unwrap();
        let coscos = SmoothField::new(TrigField::product(Trig1::cos(1.0, PI), Trig1::cos(1.0, PI)));
        let cos2 = SmoothField::new(TrigField::product(
            Trig1::cos(1.0, 2.0 * PI),
            Trig1::cos(1.0, 2.0 * PI),
        ));
        let constant = SmoothField::new(TrigField::constant(3.0));

        // ∫ (Δ cosπx cosπy)² = 4π⁴ · 1/4 = π⁴ and the Hessian product gives
        // the same value.
        let (lap, hess) = hessian_identity_check(&coscos, &coscos, &mesh, &rule);
        let expect = PI.powi(4);
        assert!((lap - hess).abs() < 1e-8, "{lap} vs {hess}");
        assert!((lap - expect).abs() < 1e-8, "{lap} vs {expect}");

        let (lap, hess) = hessian_identity_check(&constant, &constant, &mesh, &rule);
        assert!(lap.abs() < 1e-12 && hess.abs() < 1e-12);

        // Distinct frequencies are L2-orthogonal on the square; both sides
        // vanish.
        let (lap, hess) = hessian_identity_check(&coscos, &cos2, &mesh, &rule);
        assert!((lap - hess).abs() < 1e-8);
        assert!(lap.abs() < 1e-8 && hess.abs() < 1e-8);
    }

    #[test]
    fn constant_case_data() {
        let case = constant_case(2.5);
        assert_eq!(case.exact_u.value(0.3, 0.4), 2.5);
        assert_eq!(case.exact_phi.value(0.3, 0.4), 0.0);
        assert_eq!(case.f.value(0.3, 0.4), 0.0);
        assert_eq!(case.u_d.value(0.3, 0.4), 2.5);
    }

    #[test]
    fn case_lookup() {
        assert!(by_name("example1").is_some());
        assert!(by_name("constant").is_some());
        assert!(by_name("nope").is_none());
    }
}
