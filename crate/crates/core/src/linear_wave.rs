//! First-order small-amplitude waves bifurcating from a uniform stream, and
//! the maps that flatten the fluid domain onto a fixed rectangle.

use crate::dispersion::{Dispersion, DispersionError, DispersionSample};
use crate::grid::eval_cosine;
use crate::ode::Profile;
use crate::uniform_stream::UniformStream;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest admissible |t| as a fraction of the depth.
pub const AMPLITUDE_WINDOW: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearWaveError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("amplitude |t| = {t} exceeds the first-order window {limit}")]
    AmplitudeTooLarge { t: f64, limit: f64 },
    #[error("point ({x}, {y}) lies outside the fluid domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("surface touches the bed: min(eta) + h = {min_depth}")]
    SurfaceTouchesBed { min_depth: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    FixedPeriod,
    VariablePeriod,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::FixedPeriod => "fixed_period",
            Regime::VariablePeriod => "variable_period",
        }
    }
}

/// Where the slope defining c* is read off the uniform stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CStarChoice {
    /// c* = −Ψ′(h); the kinematic surface condition then holds to O(t²).
    #[default]
    Surface,
    /// c* = −Ψ′(0).
    Bed,
}

/// ψ and its derivatives up to second order at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldDerivs {
    pub psi: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

#[derive(Debug, Clone)]
pub struct LinearWave {
    pub stream: UniformStream,
    pub tau_star: f64,
    pub c_star: f64,
    pub c_star_choice: CStarChoice,
    pub t: f64,
    pub regime: Regime,
    /// γ(·; τ*) on [−0.2h, 1.2h].
    pub gamma: Profile,
}

pub fn c_star_for(stream: &UniformStream, choice: CStarChoice) -> f64 {
    let y = match choice {
        CStarChoice::Surface => stream.h,
        CStarChoice::Bed => 0.0,
    };
    -stream.eval_clamped(y).1
}

/// First-order wave ψ = Ψ(y) + c*tγ(y;τ*)cos(τ*x), η = t·cos(τ*x).
pub fn build_linear_wave(
    stream: &UniformStream,
    tau_star: f64,
    t: f64,
    regime: Regime,
) -> Result<LinearWave, LinearWaveError> {
    let sample = Dispersion::new(stream)?.gamma_profile(tau_star)?;
    LinearWave::from_sample(stream, &sample, t, regime, CStarChoice::default())
}

impl LinearWave {
    pub fn from_sample(
        stream: &UniformStream,
        sample: &DispersionSample,
        t: f64,
        regime: Regime,
        choice: CStarChoice,
    ) -> Result<Self, LinearWaveError> {
        if !(sample.tau > 0.0) {
            return Err(LinearWaveError::InvalidInput(format!(
                "tau* must be positive, got {}",
                sample.tau
            )));
        }
        let limit = AMPLITUDE_WINDOW * stream.h;
        if !t.is_finite() || t.abs() > limit {
            return Err(LinearWaveError::AmplitudeTooLarge { t, limit });
        }
        Ok(LinearWave {
            stream: stream.clone(),
            tau_star: sample.tau,
            c_star: c_star_for(stream, choice),
            c_star_choice: choice,
            t,
            regime,
            gamma: sample.gamma.clone(),
        })
    }

    /// Λ* = 2π/τ*.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.tau_star
    }

    /// (η, η′, η″) at `x`.
    pub fn eta(&self, x: f64) -> (f64, f64, f64) {
        let w = self.tau_star;
        let (sn, cs) = (w * x).sin_cos();
        (self.t * cs, -self.t * w * sn, -self.t * w * w * cs)
    }

    /// Cosine coefficients of η in x with base wavenumber τ*.
    pub fn eta_coefficients(&self) -> Vec<f64> {
        vec![0.0, self.t]
    }

    /// Analytic derivatives of the composite field; `y` is clamped to the
    /// continued profiles.
    pub fn derivs(&self, x: f64, y: f64) -> FieldDerivs {
        let w = self.tau_star;
        let (p, dp, ddp) = self.stream.eval_clamped(y);
        let (g, dg, ddg) = self.gamma.eval(y);
        let (sn, cs) = (w * x).sin_cos();
        let a = self.c_star * self.t;
        FieldDerivs {
            psi: p + a * g * cs,
            x: -a * w * g * sn,
            y: dp + a * dg * cs,
            xx: -a * w * w * g * cs,
            xy: -a * w * dg * sn,
            yy: ddp + a * ddg * cs,
        }
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.derivs(x, y).psi
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let top = self.stream.h + self.eta(x).0;
        let slack = 1e-12 * self.stream.h;
        x.is_finite() && y >= -slack && y <= top + slack
    }

    /// ψ_x at a point of the closed fluid domain.
    pub fn slope(&self, x: f64, y: f64) -> Result<f64, LinearWaveError> {
        if !self.inside(x, y) {
            return Err(LinearWaveError::OutOfDomain { x, y });
        }
        Ok(self.derivs(x, y).x)
    }

    /// Δψ + ω(ψ).
    pub fn field_residual(&self, x: f64, y: f64) -> f64 {
        let d = self.derivs(x, y);
        d.xx + d.yy + self.stream.vort.eval(d.psi)
    }

    /// ½|∇ψ|² + η − Q on the surface y = h + η(x).
    pub fn bernoulli_residual(&self, x: f64) -> f64 {
        let eta = self.eta(x).0;
        let d = self.derivs(x, self.stream.h + eta);
        0.5 * (d.x * d.x + d.y * d.y) + eta - self.stream.bernoulli
    }

    /// ψ on the surface; the kinematic condition asks for zero.
    pub fn kinematic_residual(&self, x: f64) -> f64 {
        self.psi(x, self.stream.h + self.eta(x).0)
    }

    /// sup |Δψ + ω(ψ)| on an `nx × ny` grid of the half period.
    pub fn max_field_residual(&self, nx: usize, ny: usize) -> f64 {
        let half = 0.5 * self.period();
        let mut worst = 0.0f64;
        for i in 0..nx {
            let x = half * i as f64 / (nx - 1) as f64;
            let top = self.stream.h + self.eta(x).0;
            for j in 0..ny {
                let y = top * j as f64 / (ny - 1) as f64;
                worst = worst.max(self.field_residual(x, y).abs());
            }
        }
        worst
    }

    /// sup of the surface Bernoulli residual over `n` points of the half period.
    pub fn max_bernoulli_residual(&self, n: usize) -> f64 {
        let half = 0.5 * self.period();
        (0..n)
            .map(|i| self.bernoulli_residual(half * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_kinematic_residual(&self, n: usize) -> f64 {
        let half = 0.5 * self.period();
        (0..n)
            .map(|i| self.kinematic_residual(half * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }
}

pub fn linear_wave_slope(w: &LinearWave, x: f64, y: f64) -> Result<f64, LinearWaveError> {
    w.slope(x, y)
}

/// Map from the physical cell (x, y), 0 < y < h + η(x), onto the
/// computational rectangle. Fixed period: X = x, Y ∈ [0, h]. Variable
/// period: X = Λ*x/Λ, Y ∈ [−h, 0] with the surface at Y = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMap {
    pub regime: Regime,
    pub h: f64,
    pub lambda_period: f64,
    pub lambda_star: f64,
    /// Cosine coefficients of η(x), base wavenumber 2π/Λ.
    pub eta: Vec<f64>,
}

pub fn coordinate_map(
    regime: Regime,
    h: f64,
    lambda_period: f64,
    lambda_star: f64,
    eta: Vec<f64>,
) -> Result<CoordinateMap, LinearWaveError> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !positive(h) || !positive(lambda_period) || !positive(lambda_star) {
        return Err(LinearWaveError::InvalidInput(
            "depth and periods must be positive and finite".into(),
        ));
    }
    if regime == Regime::FixedPeriod && lambda_period != lambda_star {
        return Err(LinearWaveError::InvalidInput(
            "fixed-period maps require Lambda = Lambda_star".into(),
        ));
    }
    if eta.iter().any(|c| !c.is_finite()) {
        return Err(LinearWaveError::InvalidInput("eta coefficients must be finite".into()));
    }
    let map = CoordinateMap {
        regime,
        h,
        lambda_period,
        lambda_star,
        eta,
    };
    let min_depth = map.min_depth();
    if min_depth <= 0.0 {
        return Err(LinearWaveError::SurfaceTouchesBed { min_depth });
    }
    Ok(map)
}

impl CoordinateMap {
    fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda_period
    }

    /// x = αX.
    pub fn alpha(&self) -> f64 {
        self.lambda_period / self.lambda_star
    }

    /// (H, H′, H″) with H = h + η, derivatives in x.
    pub fn depth(&self, x: f64) -> (f64, f64, f64) {
        let (e, de, dde) = eval_cosine(&self.eta, self.wavenumber(), x);
        (self.h + e, de, dde)
    }

    /// min over one period of h + η, from a dense sample refined at the
    /// sampled minimum by Newton on η′.
    pub fn min_depth(&self) -> f64 {
        let n = 2048;
        let half = 0.5 * self.lambda_period;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let x = half * i as f64 / n as f64;
            let d = self.depth(x).0;
            if d < best.0 {
                best = (d, x);
            }
        }
        let mut x = best.1;
        for _ in 0..20 {
            let (_, d1, d2) = self.depth(x);
            if d2 <= 0.0 {
                break;
            }
            x = (x - d1 / d2).clamp(0.0, half);
        }
        best.0.min(self.depth(x).0)
    }

    /// Offset of Y in units of h: the surface sits at Y = h(1 + offset).
    fn offset(&self) -> f64 {
        match self.regime {
            Regime::FixedPeriod => 0.0,
            Regime::VariablePeriod => -1.0,
        }
    }

    /// Y-range (bed, surface) of the computational rectangle.
    pub fn y_range(&self) -> (f64, f64) {
        let o = self.offset() * self.h;
        (o, self.h + o)
    }

    pub fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        let (big_h, _, _) = self.depth(x);
        (x / self.alpha(), self.h * (y / big_h + self.offset()))
    }

    pub fn inverse(&self, big_x: f64, big_y: f64) -> (f64, f64) {
        let x = self.alpha() * big_x;
        let (big_h, _, _) = self.depth(x);
        (x, big_h * (big_y / self.h - self.offset()))
    }

    /// ∂(x, y)/∂(X, Y) at a computational point.
    pub fn jacobian(&self, big_x: f64, big_y: f64) -> [[f64; 2]; 2] {
        let a = self.alpha();
        let (big_h, dh, _) = self.depth(a * big_x);
        let s = big_y / self.h - self.offset();
        [[a, 0.0], [a * s * dh, big_h / self.h]]
    }

    pub fn jacobian_determinant(&self, big_x: f64, big_y: f64) -> f64 {
        let j = self.jacobian(big_x, big_y);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}
