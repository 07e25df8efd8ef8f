//! Quadrature on the reference triangle and on edges.
//!
//! Triangle rules are the symmetric Dunavant rules of degree 2, 4, 6 and 10;
//! edge rules are Gauss-Legendre on [0, 1] with the nodes computed by Newton
//! iteration on the Legendre polynomials. Triangle weights are stored
//! relative to the element area (they sum to one), edge weights relative to
//! the edge length.
//!
//! Degree 4 covers products of element-wise quadratics exactly (stiffness and
//! mass assembly); degree 10 is used wherever trigonometric data enters
//! (loads, error norms, estimator terms) so that quadrature error stays far
//! below discretization error on the finest study meshes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("unsupported triangle rule degree {0} (supported: 2, 4, 6, 10)")]
    UnsupportedDegree(usize),
    #[error("unsupported edge rule point count {0} (supported: 1..=6)")]
    UnsupportedPointCount(usize),
}

/// Symmetric rule on the reference triangle, points in barycentric
/// coordinates, weights relative to the triangle area (sum = 1).
#[derive(Debug, Clone)]
pub struct TriQuadRule {
    /// Largest total polynomial degree integrated exactly.
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriQuadRule {
    /// Integral of `f` over the physical triangle with corners `p`.
    pub fn integrate(&self, p: &[[f64; 2]; 3], area: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (q, &w) in self.points.iter().zip(&self.weights) {
            let x = q[0] * p[0][0] + q[1] * p[1][0] + q[2] * p[2][0];
            let y = q[0] * p[0][1] + q[1] * p[1][1] + q[2] * p[2][1];
            s += w * f(x, y);
        }
        area * s
    }
}

/// Gauss-Legendre rule on [0, 1]; exact for polynomials of degree
/// `2 * npoints - 1`. Weights sum to one.
#[derive(Debug, Clone)]
pub struct EdgeQuadRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

fn orbit1(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, w: f64) {
    points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
    weights.push(w);
}

/// Orbit of (a, b, b) with b = (1 - a) / 2: three permutations.
fn orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 0.5 * (1.0 - a);
    for p in [[a, b, b], [b, a, b], [b, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

/// Orbit of (a, b, c) with c = 1 - a - b: six permutations.
fn orbit6(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

/// Symmetric triangle rule exact for total degree <= `degree`.
pub fn tri_rule(degree: usize) -> Result<TriQuadRule, QuadError> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match degree {
        2 => {
            orbit3(&mut points, &mut weights, 2.0 / 3.0, 1.0 / 3.0);
        }
        4 => {
            orbit3(&mut points, &mut weights, 0.108103018168070, 0.223381589678011);
            orbit3(&mut points, &mut weights, 0.816847572980459, 0.109951743655322);
        }
        6 => {
            orbit3(&mut points, &mut weights, 0.501426509658179, 0.116786275726379);
            orbit3(&mut points, &mut weights, 0.873821971016996, 0.050844906370207);
            orbit6(
                &mut points,
                &mut weights,
                0.053145049844817,
                0.310352451033784,
                0.082851075618374,
            );
        }
        10 => {
            orbit1(&mut points, &mut weights, 0.090817990382754);
            orbit3(&mut points, &mut weights, 0.028844733232685, 0.036725957756467);
            orbit3(&mut points, &mut weights, 0.781036849029926, 0.045321059435528);
            orbit6(
                &mut points,
                &mut weights,
                0.141707219414880,
                0.307939838764121,
                0.072757916845420,
            );
            orbit6(
                &mut points,
                &mut weights,
                0.025003534762686,
                0.246672560639903,
                0.028327242531057,
            );
            orbit6(
                &mut points,
                &mut weights,
                0.009540815400299,
                0.066803251012200,
                0.009421666963733,
            );
        }
        d => return Err(QuadError::UnsupportedDegree(d)),
    }
    // Remove the residual rounding of the published coefficients so the
    // weights sum to one at machine precision.
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(TriQuadRule {
        degree,
        points,
        weights,
    })
}

/// Gauss-Legendre rule with `npoints` nodes on [0, 1].
pub fn edge_rule(npoints: usize) -> Result<EdgeQuadRule, QuadError> {
    if npoints == 0 || npoints > 6 {
        return Err(QuadError::UnsupportedPointCount(npoints));
    }
    let n = npoints;
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess on [-1, 1], refined by Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d2) = legendre(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; cos() enumerates nodes right to left.
        points.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    Ok(EdgeQuadRule { points, weights })
}

/// Legendre polynomial P_n and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact integral of x^a y^b over the reference triangle
    /// {(x, y): x, y >= 0, x + y <= 1}: a! b! / (a + b + 2)!.
    fn monomial_integral(a: usize, b: usize) -> f64 {
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    fn integrate_ref(rule: &TriQuadRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1); bary = (1-x-y, x, y).
        let mut s = 0.0;
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            s += w * f(q[1], q[2]);
        }
        0.5 * s
    }

    #[test]
    fn weights_sum_to_one_and_are_positive() {
        for deg in [2, 4, 6, 10] {
            let r = tri_rule(deg).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14, "degree {deg}: sum {sum}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
        for n in 1..=6 {
            let r = edge_rule(n).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.points.iter().all(|&t| (0.0..=1.0).contains(&t)));
        }
    }

    #[test]
    fn unsupported_rules_rejected() {
        assert!(tri_rule(3).is_err());
        assert!(edge_rule(0).is_err());
        assert!(edge_rule(7).is_err());
    }

    #[test]
    fn tri_degree2_integrates_area() {
        let r = tri_rule(2).unwrap();
        let v = integrate_ref(&r, |_, _| 1.0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tri_degree4_integrates_x2y2() {
        let r = tri_rule(4).unwrap();
        let v = integrate_ref(&r, |x, y| x * x * y * y);
        assert!((v - 1.0 / 180.0).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn tri_degree6_integrates_x6() {
        let r = tri_rule(6).unwrap();
        let v = integrate_ref(&r, |x, _| x.powi(6));
        assert!((v - 1.0 / 56.0).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn edge_rules_hit_monomials() {
        let r1 = edge_rule(1).unwrap();
        let m1: f64 = r1.points.iter().zip(&r1.weights).map(|(t, w)| w * t).sum();
        assert!((m1 - 0.5).abs() < 1e-15);

        let r2 = edge_rule(2).unwrap();
        let m3: f64 = r2.points.iter().zip(&r2.weights).map(|(t, w)| w * t.powi(3)).sum();
        assert!((m3 - 0.25).abs() < 1e-15);

        let r3 = edge_rule(3).unwrap();
        let m5: f64 = r3.points.iter().zip(&r3.weights).map(|(t, w)| w * t.powi(5)).sum();
        assert!((m5 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn random_polynomials_integrate_to_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for deg in [2usize, 4, 6, 10] {
            let rule = tri_rule(deg).unwrap();
            for _ in 0..20 {
                // Random polynomial of total degree exactly <= deg.
                let mut coeffs = Vec::new();
                for a in 0..=deg {
                    for b in 0..=(deg - a) {
                        coeffs.push((a, b, rng.gen_range(-1.0..1.0)));
                    }
                }
                let exact: f64 = coeffs.iter().map(|&(a, b, c)| c * monomial_integral(a, b)).sum();
                let quad = integrate_ref(&rule, |x, y| {
                    coeffs
                        .iter()
                        .map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32))
                        .sum()
                });
                let scale = coeffs.iter().map(|&(_, _, c)| c.abs()).sum::<f64>().max(1e-3);
                assert!(
                    (quad - exact).abs() <= 1e-13 * scale,
                    "degree {deg}: quad {quad} vs exact {exact}"
                );
            }
        }
        for n in 1..=6usize {
            let rule = edge_rule(n).unwrap();
            let deg = 2 * n - 1;
            for _ in 0..20 {
                let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let exact: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c / (k as f64 + 1.0))
                    .sum();
                let quad: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&t, &w)| {
                        w * coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * t.powi(k as i32))
                            .sum::<f64>()
                    })
                    .sum();
                assert!((quad - exact).abs() < 1e-13, "n={n}: {quad} vs {exact}");
            }
        }
    }
}
