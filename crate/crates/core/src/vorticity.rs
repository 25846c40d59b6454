//! Closed-form vorticity functions ω(ψ).

use serde::{Deserialize, Serialize};

/// Vorticity as a function of the stream-function value.
///
/// Polynomial coefficients are stored constant-first, so `[1, 0, 3]` is
/// `1 + 3p²`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VorticityFn {
    #[default]
    Zero,
    /// ω(p) = a·p + b
    Linear {
        a: f64,
        b: f64,
    },
    Polynomial {
        coefficients: Vec<f64>,
    },
}

fn horner(coefficients: &[f64], p: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

impl VorticityFn {
    pub fn polynomial(coefficients: impl Into<Vec<f64>>) -> Self {
        VorticityFn::Polynomial {
            coefficients: coefficients.into(),
        }
    }

    pub fn linear(a: f64, b: f64) -> Self {
        VorticityFn::Linear { a, b }
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            VorticityFn::Zero => 0.0,
            VorticityFn::Linear { a, b } => a * p + b,
            VorticityFn::Polynomial { coefficients } => horner(coefficients, p),
        }
    }

    pub fn eval_deriv(&self, p: f64) -> f64 {
        match self {
            VorticityFn::Zero => 0.0,
            VorticityFn::Linear { a, .. } => *a,
            VorticityFn::Polynomial { coefficients } => {
                let d: Vec<f64> = coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| k as f64 * c)
                    .collect();
                horner(&d, p)
            }
        }
    }

    pub fn eval_second_deriv(&self, p: f64) -> f64 {
        match self {
            VorticityFn::Zero | VorticityFn::Linear { .. } => 0.0,
            VorticityFn::Polynomial { coefficients } => {
                let d: Vec<f64> = coefficients
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, c)| (k * (k - 1)) as f64 * c)
                    .collect();
                horner(&d, p)
            }
        }
    }

    /// Antiderivative W with W(0) = 0 and W′ = ω.
    pub fn primitive(&self, p: f64) -> f64 {
        match self {
            VorticityFn::Zero => 0.0,
            VorticityFn::Linear { a, b } => 0.5 * a * p * p + b * p,
            VorticityFn::Polynomial { coefficients } => {
                let mut w = vec![0.0];
                w.extend(coefficients.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
                horner(&w, p)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VorticityFn::Zero => true,
            VorticityFn::Linear { a, b } => *a == 0.0 && *b == 0.0,
            VorticityFn::Polynomial { coefficients } => coefficients.iter().all(|c| *c == 0.0),
        }
    }

    /// True when all parameters are finite.
    pub fn is_finite(&self) -> bool {
        match self {
            VorticityFn::Zero => true,
            VorticityFn::Linear { a, b } => a.is_finite() && b.is_finite(),
            VorticityFn::Polynomial { coefficients } => coefficients.iter().all(|c| c.is_finite()),
        }
    }
}
