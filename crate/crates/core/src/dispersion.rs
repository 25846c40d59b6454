//! Sturm–Liouville spectrum of the linearised vorticity operator, the
//! profile γ(y; τ), the dispersion function σ(τ) and the selection of the
//! bifurcation frequency τ*.

use crate::ode::{integrate, Profile};
use crate::uniform_stream::{solve_uniform_stream, StreamError, UniformStream, EXTENSION};
use crate::vorticity::VorticityFn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Half-width, in τ², of the excluded band around each resonance.
pub const RESONANCE_GUARD: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-11;
const ROOT_TOL: f64 = 1e-10;
const MU_LIMIT: f64 = 1e6;
const MAX_TRACKED_EIGENVALUES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("eigenvalue {index}: {reason}")]
    SolverFailure { index: usize, reason: String },
    #[error("tau = {tau} is resonant with eigenvalue mu = {mu}")]
    ResonantTau { tau: f64, mu: f64 },
    #[error("no bifurcation: sigma(0) = {sigma0} has the wrong sign for kappa = {kappa}")]
    NoBifurcation { sigma0: f64, kappa: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenfunction {
    /// Samples on the uniform grid y_i = i·step of [0, h], unit L² norm.
    pub values: Vec<f64>,
    pub step: f64,
    /// φ′(h) of the normalised eigenfunction.
    pub surface_slope: f64,
    pub interior_zeros: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub mus: Vec<f64>,
    pub eigenfunctions: Vec<Eigenfunction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionSample {
    pub tau: f64,
    /// γ(·; τ) on [−0.2h, 1.2h] with γ(0) = 0, γ(h) = 1.
    pub gamma: Profile,
    pub gamma_prime_h: f64,
    pub sigma: f64,
    pub rho0: f64,
    pub kappa: f64,
    /// γ > 0 on (0, h].
    pub sign_definite: bool,
}

#[derive(Debug, Clone)]
pub struct DispersionCurve {
    pub points: Vec<Result<DispersionSample, DispersionError>>,
    /// σ(τ_max)/(κ τ_max) at the largest admissible τ.
    pub asymptotic_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    Mu1Positive,
    Mu1Nonpositive,
}

impl TauMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TauMode::Mu1Positive => "mu1_positive",
            TauMode::Mu1Nonpositive => "mu1_nonpositive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TauStar {
    pub tau: f64,
    pub mode: TauMode,
    pub sample: DispersionSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversality {
    /// ∂σ/∂λ at fixed τ*.
    pub derivative: f64,
    pub error_estimate: f64,
    pub holds: bool,
}

fn q_of(stream: &UniformStream, y: f64) -> f64 {
    stream.vort.eval_deriv(stream.psi(y))
}

fn steps_for(scale: f64, h: f64) -> usize {
    let n = (40.0 * scale.max(1.0) * h).ceil() as usize;
    let n = n.max(512);
    n + n % 2
}

/// Prüfer angle θ(h; μ) for −w″ − q w = μ w with θ(0) = 0.
fn prufer_angle(stream: &UniformStream, mu: f64, scale: f64, n: usize) -> f64 {
    let h = stream.h;
    let dy = h / n as f64;
    let rhs = |y: f64, th: f64| {
        let (s, c) = th.sin_cos();
        scale * c * c + (mu + q_of(stream, y)) / scale * s * s
    };
    let mut th = 0.0;
    for i in 0..n {
        let y = i as f64 * dy;
        let k1 = rhs(y, th);
        let k2 = rhs(y + 0.5 * dy, th + 0.5 * dy * k1);
        let k3 = rhs(y + 0.5 * dy, th + 0.5 * dy * k2);
        let k4 = rhs(y + dy, th + dy * k3);
        th += dy / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    th
}

fn q_range(stream: &UniformStream) -> (f64, f64) {
    (0..=400)
        .map(|i| q_of(stream, stream.h * i as f64 / 400.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)))
}

/// μ_j (1-based) by bisection on the Prüfer angle at a fixed resolution.
fn eigenvalue_at(stream: &UniformStream, j: usize, n: usize) -> Result<f64, DispersionError> {
    let h = stream.h;
    let (qmin, qmax) = q_range(stream);
    let target = j as f64 * PI;
    let base = (PI / h).powi(2);
    let mut lo = base - qmax - 1.0;
    let mut hi = (j * j) as f64 * base - qmin + 1.0;
    let scale_for = |mu: f64| (mu + 0.5 * (qmin + qmax)).abs().sqrt().max(1.0);
    let angle = |mu: f64| prufer_angle(stream, mu, scale_for(mu), n);
    let fail = |reason: &str| DispersionError::SolverFailure {
        index: j,
        reason: reason.to_string(),
    };
    while angle(lo) >= target {
        lo = lo - lo.abs() - 1.0;
        if lo.abs() > MU_LIMIT {
            return Err(fail("lower bracket expansion exceeded |mu| = 1e6"));
        }
    }
    while angle(hi) <= target {
        hi = hi + hi.abs() + 1.0;
        if hi.abs() > MU_LIMIT {
            return Err(fail("upper bracket expansion exceeded |mu| = 1e6"));
        }
    }
    while hi - lo > EIGEN_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if angle(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn eigenfunction(stream: &UniformStream, mu: f64, n: usize) -> Eigenfunction {
    let dy = stream.h / n as f64;
    let rhs = |y: f64, w: f64, _wp: f64| -(mu + q_of(stream, y)) * w;
    let states = integrate(0.0, 0.0, 1.0, dy, n, &rhs).expect("bounded linear ODE");
    let values: Vec<f64> = states.iter().map(|s| s.0).collect();
    // Simpson's rule (n even)
    let mut norm2 = values[0].powi(2) + values[n].powi(2);
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        norm2 += if i % 2 == 1 { 4.0 } else { 2.0 } * v * v;
    }
    let norm = (norm2 * dy / 3.0).sqrt();
    let scaled: Vec<f64> = values.iter().map(|v| v / norm).collect();
    let peak = scaled.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut zeros = 0;
    let mut last = 0.0;
    for v in &scaled[1..n] {
        if v.abs() <= 1e-10 * peak {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            zeros += 1;
        }
        last = v.signum();
    }
    Eigenfunction {
        values: scaled,
        step: dy,
        surface_slope: states[n].1 / norm,
        interior_zeros: zeros,
    }
}

/// First `k` eigenvalues of −w″ − ω′(Ψ)w = μw with Dirichlet ends, each
/// certified by its oscillation count.
pub fn eigen_spectrum(stream: &UniformStream, k: usize) -> Result<EigenSpectrum, DispersionError> {
    if k == 0 {
        return Err(DispersionError::InvalidInput("k must be at least 1".into()));
    }
    let (qmin, qmax) = q_range(stream);
    let mut mus = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for j in 1..=k {
        let rough = (j as f64 * PI / stream.h).powi(2) + qmax.abs().max(qmin.abs());
        let mut n = steps_for(rough.sqrt(), stream.h);
        let mut mu = eigenvalue_at(stream, j, n)?;
        loop {
            let finer = eigenvalue_at(stream, j, 2 * n)?;
            let done = (finer - mu).abs() <= 1e-10 * mu.abs().max(1.0);
            mu = finer;
            n *= 2;
            if done || n > 1 << 20 {
                break;
            }
        }
        let ef = eigenfunction(stream, mu, n);
        if ef.interior_zeros != j - 1 {
            return Err(DispersionError::SolverFailure {
                index: j,
                reason: format!("expected {} interior zeros, found {}", j - 1, ef.interior_zeros),
            });
        }
        mus.push(mu);
        eigenfunctions.push(ef);
    }
    Ok(EigenSpectrum { mus, eigenfunctions })
}

/// Dispersion analysis bound to one uniform stream; caches the nonpositive
/// part of the spectrum, which fixes the resonant frequencies.
#[derive(Debug, Clone)]
pub struct Dispersion<'a> {
    stream: &'a UniformStream,
    mu1: f64,
    nonpositive: Vec<f64>,
}

impl<'a> Dispersion<'a> {
    pub fn new(stream: &'a UniformStream) -> Result<Self, DispersionError> {
        let mut nonpositive = Vec::new();
        let mut mu1 = f64::NAN;
        for k in 1..=MAX_TRACKED_EIGENVALUES {
            let spec = eigen_spectrum_single(stream, k)?;
            if k == 1 {
                mu1 = spec;
            }
            if spec > 0.0 {
                break;
            }
            nonpositive.push(spec);
        }
        Ok(Dispersion {
            stream,
            mu1,
            nonpositive,
        })
    }

    pub fn stream(&self) -> &UniformStream {
        self.stream
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    /// Nonpositive eigenvalues μ_j ≤ 0 in ascending order.
    pub fn nonpositive_eigenvalues(&self) -> &[f64] {
        &self.nonpositive
    }

    /// ρ₀ = (1 + Ψ′(h)Ψ″(h))/Ψ′(h)² with Ψ″(h) = −ω(0).
    pub fn rho0(&self) -> f64 {
        let s = self.stream;
        let (_, dpsi, ddpsi) = s.eval_clamped(s.h);
        (1.0 + dpsi * ddpsi) / (dpsi * dpsi)
    }

    fn check_tau(&self, tau: f64) -> Result<(), DispersionError> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(DispersionError::InvalidInput(format!(
                "tau must be finite and >= 0, got {tau}"
            )));
        }
        for &mu in &self.nonpositive {
            if (tau * tau + mu).abs() <= RESONANCE_GUARD {
                return Err(DispersionError::ResonantTau { tau, mu });
            }
        }
        Ok(())
    }

    fn shoot(&self, tau: f64, n: usize) -> Profile {
        let s = self.stream;
        let h = s.h;
        let dy = h / n as f64;
        let ext = (EXTENSION * n as f64).ceil() as usize;
        let t2 = tau * tau;
        let rhs = |y: f64, g: f64, _gp: f64| (t2 - q_of(s, y)) * g;
        let up = integrate(0.0, 0.0, 1.0, dy, n + ext, &rhs).expect("bounded linear ODE");
        let down = integrate(0.0, 0.0, 1.0, -dy, ext, &rhs).expect("bounded linear ODE");
        let scale = up[n].0;
        let mut values = Vec::with_capacity(n + 2 * ext + 1);
        let mut first = Vec::with_capacity(n + 2 * ext + 1);
        for &(g, gp) in down.iter().rev().chain(up.iter().skip(1)) {
            values.push(g / scale);
            first.push(gp / scale);
        }
        let start = -(ext as f64) * dy;
        let second = values
            .iter()
            .enumerate()
            .map(|(i, g)| (t2 - q_of(s, start + i as f64 * dy)) * g)
            .collect();
        Profile::new(start, dy, values, first, second)
    }

    /// γ(·; τ) together with γ′(h; τ), ρ₀ and σ(τ).
    pub fn gamma_profile(&self, tau: f64) -> Result<DispersionSample, DispersionError> {
        self.check_tau(tau)?;
        let s = self.stream;
        let h = s.h;
        let top_index = |p: &Profile| p.node_index(h).expect("h is a node");
        let mut n = steps_for(tau, h);
        let mut coarse = self.shoot(tau, n);
        let mut profile = loop {
            let fine = self.shoot(tau, 2 * n);
            let a = coarse.first[top_index(&coarse)];
            let b = fine.first[top_index(&fine)];
            n *= 2;
            if (a - b).abs() <= 1e-12 * b.abs().max(1.0) || n >= 1 << 18 {
                break fine;
            }
            coarse = fine;
        };
        let top = top_index(&profile);
        profile.values[top] = 1.0;
        let bottom = profile.node_index(0.0).expect("0 is a node");
        let gamma_prime_h = profile.first[top];
        let sign_definite = profile.values[bottom + 1..=top].iter().all(|&g| g > 0.0);
        let rho0 = self.rho0();
        let kappa = s.kappa;
        Ok(DispersionSample {
            tau,
            gamma: profile,
            gamma_prime_h,
            sigma: kappa * (gamma_prime_h - rho0),
            rho0,
            kappa,
            sign_definite,
        })
    }

    pub fn sigma(&self, tau: f64) -> Result<f64, DispersionError> {
        Ok(self.gamma_profile(tau)?.sigma)
    }

    /// σ written as κγ′(h) − κ⁻¹ + ω(p) with a free argument `p` of ω;
    /// equals σ when `p` is the surface value Ψ(h) = 0.
    pub fn sigma_alternative_form(&self, tau: f64, omega_argument: f64) -> Result<f64, DispersionError> {
        let sample = self.gamma_profile(tau)?;
        let kappa = sample.kappa;
        Ok(kappa * sample.gamma_prime_h - 1.0 / kappa + self.stream.vort.eval(omega_argument))
    }

    pub fn sigma_scan(&self, taus: &[f64]) -> Result<DispersionCurve, DispersionError> {
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DispersionError::InvalidInput(
                "tau grid must be strictly ascending".into(),
            ));
        }
        let points: Vec<_> = taus.par_iter().map(|&t| self.gamma_profile(t)).collect();
        let asymptotic_ratio = points
            .iter()
            .rev()
            .find_map(|p| p.as_ref().ok())
            .filter(|p| p.tau > 0.0)
            .map(|p| p.sigma / (p.kappa * p.tau));
        Ok(DispersionCurve {
            points,
            asymptotic_ratio,
        })
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, sign_lo: f64) -> Result<f64, DispersionError> {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.sigma(mid)?.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn expand_upper(&self, start: f64, sign_lo: f64) -> Result<f64, DispersionError> {
        let mut hi = start;
        while self.sigma(hi)?.signum() == sign_lo {
            hi *= 2.0;
            if hi > MU_LIMIT {
                return Err(DispersionError::SolverFailure {
                    index: 1,
                    reason: "no sign change of sigma found".into(),
                });
            }
        }
        Ok(hi)
    }

    /// Bifurcation frequency: the unique positive root of σ when μ₁ > 0
    /// (subject to the sign of σ(0)), otherwise the unique root with
    /// τ*² > −μ₁.
    pub fn find_tau_star(&self) -> Result<TauStar, DispersionError> {
        let kappa = self.stream.kappa;
        let h = self.stream.h;
        if self.mu1 > 0.0 {
            let sigma0 = self.sigma(0.0)?;
            let admissible = if kappa > 0.0 { sigma0 < 0.0 } else { sigma0 > 0.0 };
            if !admissible {
                return Err(DispersionError::NoBifurcation { sigma0, kappa });
            }
            let sign_lo = sigma0.signum();
            let hi = self.expand_upper(1.0 / h, sign_lo)?;
            let tau = self.bisect(0.0, hi, sign_lo)?;
            let sample = self.gamma_profile(tau)?;
            return Ok(TauStar {
                tau,
                mode: TauMode::Mu1Positive,
                sample,
            });
        }

        // σ → −κ·∞ as τ² decreases to −μ₁
        let pole = -self.mu1;
        let want = -kappa.signum();
        let mut delta = 1e-3 * pole.abs().max(1.0);
        let lo = loop {
            let t = (pole + delta).sqrt();
            if self.sigma(t)?.signum() == want {
                break t;
            }
            delta *= 0.1;
            if delta < 10.0 * RESONANCE_GUARD {
                return Err(DispersionError::SolverFailure {
                    index: 1,
                    reason: "could not bracket the dispersion root above the pole".into(),
                });
            }
        };
        let hi = self.expand_upper(lo.max(1.0 / h) * 2.0, want)?;
        let tau = self.bisect(lo, hi, want)?;
        let sample = self.gamma_profile(tau)?;
        Ok(TauStar {
            tau,
            mode: TauMode::Mu1Nonpositive,
            sample,
        })
    }
}

fn eigen_spectrum_single(stream: &UniformStream, k: usize) -> Result<f64, DispersionError> {
    let (qmin, qmax) = q_range(stream);
    let rough = (k as f64 * PI / stream.h).powi(2) + qmax.abs().max(qmin.abs());
    let mut n = steps_for(rough.sqrt(), stream.h);
    let mut mu = eigenvalue_at(stream, k, n)?;
    loop {
        let finer = eigenvalue_at(stream, k, 2 * n)?;
        let done = (finer - mu).abs() <= 1e-10 * mu.abs().max(1.0);
        mu = finer;
        n *= 2;
        if done || n > 1 << 20 {
            return Ok(mu);
        }
    }
}

pub fn gamma_profile(stream: &UniformStream, tau: f64) -> Result<DispersionSample, DispersionError> {
    Dispersion::new(stream)?.gamma_profile(tau)
}

pub fn sigma_scan(stream: &UniformStream, taus: &[f64]) -> Result<DispersionCurve, DispersionError> {
    Dispersion::new(stream)?.sigma_scan(taus)
}

pub fn find_tau_star(stream: &UniformStream) -> Result<TauStar, DispersionError> {
    Dispersion::new(stream)?.find_tau_star()
}

/// ∂σ/∂λ at fixed τ* by central differences, rebuilding the stream at λ ± δ;
/// the reported value is Richardson-extrapolated from steps δ and δ/2.
pub fn transversality(
    vort: &VorticityFn,
    h: f64,
    lambda: f64,
    tau_star: f64,
    step: f64,
    nodes: usize,
) -> Result<Transversality, DispersionError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(DispersionError::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let sigma_at = |l: f64| -> Result<f64, DispersionError> {
        let s = solve_uniform_stream(vort, h, l, nodes)?;
        Dispersion::new(&s)?.sigma(tau_star)
    };
    let central =
        |d: f64| -> Result<f64, DispersionError> { Ok((sigma_at(lambda + d)? - sigma_at(lambda - d)?) / (2.0 * d)) };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    let derivative = (4.0 * fine - coarse) / 3.0;
    let error_estimate = (fine - coarse).abs() / 3.0;
    Ok(Transversality {
        derivative,
        error_estimate,
        holds: derivative.abs() > (10.0 * error_estimate).max(1e-10),
    })
}
