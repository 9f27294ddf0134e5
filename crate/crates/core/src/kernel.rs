//! Exact flows of the model problem `q'' = -q - eps q` and the one-step
//! transfer matrix of a splitting scheme.
//!
//! The semitrace of the transfer matrix is a polynomial in `eps` whose
//! coefficients depend on `h` through trigonometric functions. Rather than
//! fitting it, [`epsilon_polynomial`] multiplies the flow matrices with
//! polynomial entries, so every coefficient is obtained directly.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::schemes::{Family, Flow, SplittingScheme};

/// A real 2x2 matrix `[[a, b], [c, d]]` acting on `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct TransferMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<[f64; 4]> for TransferMatrix {
    fn from([a, b, c, d]: [f64; 4]) -> Self {
        TransferMatrix { a, b, c, d }
    }
}

impl From<TransferMatrix> for [f64; 4] {
    fn from(m: TransferMatrix) -> Self {
        [m.a, m.b, m.c, m.d]
    }
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        TransferMatrix { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Half the trace; the stability polynomial evaluated at this matrix.
    pub fn semitrace(&self) -> f64 {
        0.5 * (self.a + self.d)
    }

    pub fn scale(&self, s: f64) -> Self {
        TransferMatrix::new(s * self.a, s * self.b, s * self.c, s * self.d)
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs())
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = TransferMatrix::IDENTITY;
        for _ in 0..n {
            out = *self * out;
        }
        out
    }

    /// Applies the matrix to `(q, p)`.
    pub fn apply(&self, q: f64, p: f64) -> (f64, f64) {
        (self.a * q + self.b * p, self.c * q + self.d * p)
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, o: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Exact rotation by `t` radians: `[[cos t, sin t], [-sin t, cos t]]`.
pub fn rotation_flow(t: f64) -> TransferMatrix {
    let (s, c) = t.sin_cos();
    TransferMatrix::new(c, s, -s, c)
}

/// Kick of duration `t` on the perturbation `-eps q`.
pub fn kick_flow(t: f64, eps: f64) -> TransferMatrix {
    TransferMatrix::new(1.0, 0.0, -t * eps, 1.0)
}

/// Free drift of duration `t` (unit mass).
pub fn drift_flow(t: f64) -> TransferMatrix {
    TransferMatrix::new(1.0, t, 0.0, 1.0)
}

fn flow_matrix(family: Family, flow: Flow, t: f64, eps: f64) -> TransferMatrix {
    match (flow, family) {
        (Flow::Rotation, _) => rotation_flow(t),
        (Flow::Drift, _) => drift_flow(t),
        (Flow::Kick, Family::RotationKick) => kick_flow(t, eps),
        // the drift/kick splitting kicks with the whole force -(1 + eps) q
        (Flow::Kick, Family::DriftKick) => kick_flow(t, 1.0 + eps),
    }
}

/// One step of `scheme` with steplength `h` on the model problem.
pub fn transfer_matrix(scheme: &SplittingScheme, eps: f64, h: f64) -> TransferMatrix {
    let family = scheme.family();
    scheme
        .flows()
        .into_iter()
        .fold(TransferMatrix::IDENTITY, |acc, (flow, c)| {
            flow_matrix(family, flow, c * h, eps) * acc
        })
}

fn poly_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, a) in x.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        for (j, b) in y.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn poly_add(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| x.get(i).copied().unwrap_or(0.0) + y.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// A 2x2 matrix whose entries are polynomials in `eps` (monomial basis,
/// lowest degree first).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl MatrixPolynomial {
    pub fn identity() -> Self {
        MatrixPolynomial {
            a: vec![1.0],
            b: vec![0.0],
            c: vec![0.0],
            d: vec![1.0],
        }
    }

    pub fn constant(m: TransferMatrix) -> Self {
        MatrixPolynomial {
            a: vec![m.a],
            b: vec![m.b],
            c: vec![m.c],
            d: vec![m.d],
        }
    }

    /// The factor contributed by one flow of duration `t`.
    pub fn flow(family: Family, flow: Flow, t: f64) -> Self {
        match (flow, family) {
            (Flow::Rotation, _) => Self::constant(rotation_flow(t)),
            (Flow::Drift, _) => Self::constant(drift_flow(t)),
            (Flow::Kick, Family::RotationKick) => MatrixPolynomial {
                c: vec![0.0, -t],
                ..Self::identity()
            },
            (Flow::Kick, Family::DriftKick) => MatrixPolynomial {
                c: vec![-t, -t],
                ..Self::identity()
            },
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        MatrixPolynomial {
            a: poly_add(&poly_mul(&self.a, &o.a), &poly_mul(&self.b, &o.c)),
            b: poly_add(&poly_mul(&self.a, &o.b), &poly_mul(&self.b, &o.d)),
            c: poly_add(&poly_mul(&self.c, &o.a), &poly_mul(&self.d, &o.c)),
            d: poly_add(&poly_mul(&self.c, &o.b), &poly_mul(&self.d, &o.d)),
        }
    }

    /// Evaluates every entry at `eps`.
    pub fn eval(&self, eps: f64) -> TransferMatrix {
        TransferMatrix::new(
            horner(&self.a, eps),
            horner(&self.b, eps),
            horner(&self.c, eps),
            horner(&self.d, eps),
        )
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// The semitrace `P(eps, h)` at a fixed `h`, as coefficients in `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolynomial {
    pub coeffs: Vec<f64>,
    pub h: f64,
}

impl EpsilonPolynomial {
    /// Drops trailing coefficients that are exactly zero, keeping the
    /// constant term. Small nonzero coefficients are genuine at small `h`.
    pub fn new(mut coeffs: Vec<f64>, h: f64) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        EpsilonPolynomial { coeffs, h }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `eps^j`, zero past the degree.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, eps: f64) -> f64 {
        horner(&self.coeffs, eps)
    }

    pub fn derivative(&self) -> EpsilonPolynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c)
            .collect();
        EpsilonPolynomial::new(coeffs, self.h)
    }

    /// `d^2 P / d eps^2` at `eps = 0`, i.e. twice the quadratic coefficient.
    pub fn second_derivative_at_zero(&self) -> f64 {
        2.0 * self.coeff(2)
    }

    /// Largest coefficient-wise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|j| (self.coeff(j) - other.coeff(j)).abs())
            .fold(0.0, f64::max)
    }
}

/// Full matrix polynomial of one step of `scheme` with steplength `h`.
pub fn matrix_polynomial(scheme: &SplittingScheme, h: f64) -> MatrixPolynomial {
    let family = scheme.family();
    scheme
        .flows()
        .into_iter()
        .fold(MatrixPolynomial::identity(), |acc, (flow, c)| {
            MatrixPolynomial::flow(family, flow, c * h).mul(&acc)
        })
}

/// Exact `eps`-coefficients of the semitrace of `transfer_matrix(scheme, eps, h)`.
pub fn epsilon_polynomial(scheme: &SplittingScheme, h: f64) -> EpsilonPolynomial {
    let mp = matrix_polynomial(scheme, h);
    let coeffs = poly_add(&mp.a, &mp.d)
        .into_iter()
        .map(|x| 0.5 * x)
        .collect();
    EpsilonPolynomial::new(coeffs, h)
}
