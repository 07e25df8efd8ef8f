//! Smooth scalar fields with exact derivatives.
//!
//! All benchmark data are finite sums of separable trigonometric terms
//! (e.g. `sin^2 πx = 1/2 - 1/2 cos 2πx`), so every field is represented as a
//! sum of products of one-dimensional harmonic polynomials. Differentiation
//! is closed and exact in this representation; [`SmoothField`] precomputes
//! the derivative fields needed by assembly, norms and estimators (gradient,
//! Laplacian, Hessian, bilaplacian) once at construction.

/// Evaluable field with derivatives up to fourth order, as required by the
/// problem data (`f = Δ²u`, `u_d = u − Δ²φ`).
pub trait ScalarField: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> [f64; 2];
    fn laplacian(&self, x: f64, y: f64) -> f64;
    /// (f_xx, f_xy, f_yy).
    fn hessian(&self, x: f64, y: f64) -> [f64; 3];
    fn bilaplacian(&self, x: f64, y: f64) -> f64;
}

/// The zero field; handy for measuring norms of plain FE functions.
pub struct ZeroField;

impl ScalarField for ZeroField {
    fn value(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn laplacian(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn hessian(&self, _: f64, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
    fn bilaplacian(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Wave {
    Cos,
    Sin,
}

/// `amp * wave(freq * t)`; constants are cosines with zero frequency.
#[derive(Debug, Clone, Copy)]
struct Harmonic {
    amp: f64,
    freq: f64,
    wave: Wave,
}

impl Harmonic {
    fn eval(&self, t: f64) -> f64 {
        match self.wave {
            Wave::Cos => self.amp * (self.freq * t).cos(),
            Wave::Sin => self.amp * (self.freq * t).sin(),
        }
    }

    fn derivative(&self) -> Harmonic {
        match self.wave {
            Wave::Cos => Harmonic {
                amp: -self.amp * self.freq,
                freq: self.freq,
                wave: Wave::Sin,
            },
            Wave::Sin => Harmonic {
                amp: self.amp * self.freq,
                freq: self.freq,
                wave: Wave::Cos,
            },
        }
    }
}

/// Sum of harmonics in one variable.
#[derive(Debug, Clone)]
pub struct Trig1 {
    terms: Vec<Harmonic>,
}

impl Trig1 {
    pub fn constant(c: f64) -> Trig1 {
        Trig1 {
            terms: vec![Harmonic {
                amp: c,
                freq: 0.0,
                wave: Wave::Cos,
            }],
        }
    }

    /// `amp * cos(freq * t)`.
    pub fn cos(amp: f64, freq: f64) -> Trig1 {
        Trig1 {
            terms: vec![Harmonic {
                amp,
                freq,
                wave: Wave::Cos,
            }],
        }
    }

    /// `sin^2(w t) = 1/2 - 1/2 cos(2 w t)`.
    pub fn sin_squared(freq: f64) -> Trig1 {
        Trig1 {
            terms: vec![
                Harmonic {
                    amp: 0.5,
                    freq: 0.0,
                    wave: Wave::Cos,
                },
                Harmonic {
                    amp: -0.5,
                    freq: 2.0 * freq,
                    wave: Wave::Cos,
                },
            ],
        }
    }

    /// `sin^4(w t) = 3/8 - 1/2 cos(2 w t) + 1/8 cos(4 w t)`.
    pub fn sin_fourth(freq: f64) -> Trig1 {
        Trig1 {
            terms: vec![
                Harmonic {
                    amp: 0.375,
                    freq: 0.0,
                    wave: Wave::Cos,
                },
                Harmonic {
                    amp: -0.5,
                    freq: 2.0 * freq,
                    wave: Wave::Cos,
                },
                Harmonic {
                    amp: 0.125,
                    freq: 4.0 * freq,
                    wave: Wave::Cos,
                },
            ],
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|h| h.eval(t)).sum()
    }

    fn derivative(&self) -> Trig1 {
        Trig1 {
            terms: self.terms.iter().map(|h| h.derivative()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct SepTerm {
    fx: Trig1,
    fy: Trig1,
}

/// Sum of separable products `Σ X_k(x) Y_k(y)`.
#[derive(Debug, Clone)]
pub struct TrigField {
    terms: Vec<SepTerm>,
}

impl TrigField {
    pub fn product(fx: Trig1, fy: Trig1) -> TrigField {
        TrigField {
            terms: vec![SepTerm { fx, fy }],
        }
    }

    pub fn constant(c: f64) -> TrigField {
        TrigField::product(Trig1::constant(c), Trig1::constant(1.0))
    }

    pub fn zero() -> TrigField {
        TrigField { terms: Vec::new() }
    }

    pub fn plus(mut self, other: &TrigField) -> TrigField {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scaled(mut self, s: f64) -> TrigField {
        for t in &mut self.terms {
            for h in &mut t.fx.terms {
                h.amp *= s;
            }
        }
        self
    }

    pub fn dx(&self) -> TrigField {
        TrigField {
            terms: self
                .terms
                .iter()
                .map(|t| SepTerm {
                    fx: t.fx.derivative(),
                    fy: t.fy.clone(),
                })
                .collect(),
        }
    }

    pub fn dy(&self) -> TrigField {
        TrigField {
            terms: self
                .terms
                .iter()
                .map(|t| SepTerm {
                    fx: t.fx.clone(),
                    fy: t.fy.derivative(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.fx.eval(x) * t.fy.eval(y)).sum()
    }

    /// `Δ²f = f_xxxx + 2 f_xxyy + f_yyyy`, still a trigonometric field.
    pub fn bilaplacian_field(&self) -> TrigField {
        let dxx = self.dx().dx();
        let dyy = self.dy().dy();
        dxx.dx()
            .dx()
            .plus(&dxx.dy().dy().scaled(2.0))
            .plus(&dyy.dy().dy())
    }
}

/// A trigonometric field bundled with its symbolically derived derivatives.
pub struct SmoothField {
    f: TrigField,
    fx: TrigField,
    fy: TrigField,
    fxx: TrigField,
    fxy: TrigField,
    fyy: TrigField,
    bilap: TrigField,
}

impl SmoothField {
    pub fn new(f: TrigField) -> SmoothField {
        let fx = f.dx();
        let fy = f.dy();
        let fxx = fx.dx();
        let fxy = fx.dy();
        let fyy = fy.dy();
        let bilap = f.bilaplacian_field();
        SmoothField {
            f,
            fx,
            fy,
            fxx,
            fxy,
            fyy,
            bilap,
        }
    }
}

impl ScalarField for SmoothField {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.f.eval(x, y)
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [self.fx.eval(x, y), self.fy.eval(x, y)]
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.fxx.eval(x, y) + self.fyy.eval(x, y)
    }

    fn hessian(&self, x: f64, y: f64) -> [f64; 3] {
        [self.fxx.eval(x, y), self.fxy.eval(x, y), self.fyy.eval(x, y)]
    }

    fn bilaplacian(&self, x: f64, y: f64) -> f64 {
        self.bilap.eval(x, y)
    }
}
