//! Uniform (x-independent) shear flows Ψ(y) posed as a Cauchy problem at the
//! free surface: Ψ″ + ω(Ψ) = 0, Ψ(h) = 0, Ψ′(h) = λ.

use crate::ode::{integrate, Profile};
use crate::vorticity::VorticityFn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of the depth by which the solution is continued past either end.
pub const EXTENSION: f64 = 0.2;
pub const DEFAULT_NODES: usize = 512;
const REFINE_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StreamError {
    #[error("surface slope lambda must be nonzero (kappa = Psi'(h) = lambda may not vanish)")]
    DegenerateLambda,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration failed near y = {y}")]
    IntegrationFailure { y: f64 },
    #[error("y = {y} lies outside the stream domain [{lo}, {hi}]")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformStream {
    pub h: f64,
    pub lambda: f64,
    /// Bottom value of the stream function is −m.
    pub m: f64,
    /// Bernoulli constant λ²/2.
    pub bernoulli: f64,
    pub kappa: f64,
    pub vort: VorticityFn,
    profile: Profile,
}

/// Plain fixed-step RK4 solution of the Cauchy problem with `n` steps across
/// the depth, continued by `EXTENSION·h` beyond both ends.
pub fn rk4_cauchy(vort: &VorticityFn, h: f64, lambda: f64, n: usize) -> Result<Profile, StreamError> {
    rk4_cauchy_ext(vort, h, lambda, n, (EXTENSION * n as f64).ceil() as usize)
}

fn rk4_cauchy_ext(vort: &VorticityFn, h: f64, lambda: f64, n: usize, ext: usize) -> Result<Profile, StreamError> {
    let dy = h / n as f64;
    let rhs = |_y: f64, psi: f64, _dpsi: f64| -vort.eval(psi);
    let down = integrate(h, 0.0, lambda, -dy, n + ext, &rhs).map_err(|y| StreamError::IntegrationFailure { y })?;
    let up = integrate(h, 0.0, lambda, dy, ext, &rhs).map_err(|y| StreamError::IntegrationFailure { y })?;
    let total = n + 2 * ext + 1;
    let mut values = Vec::with_capacity(total);
    let mut first = Vec::with_capacity(total);
    for &(f, fp) in down.iter().rev() {
        values.push(f);
        first.push(fp);
    }
    for &(f, fp) in up.iter().skip(1) {
        values.push(f);
        first.push(fp);
    }
    let second = values.iter().map(|&p| -vort.eval(p)).collect();
    Ok(Profile::new(-(ext as f64) * dy, dy, values, first, second))
}

/// Richardson combination of RK4 solutions with `n` and `2n` steps,
/// sampled on the `n`-step grid; fifth order in the step.
pub fn richardson_cauchy(vort: &VorticityFn, h: f64, lambda: f64, n: usize) -> Result<Profile, StreamError> {
    let ext = (EXTENSION * n as f64).ceil() as usize;
    let coarse = rk4_cauchy_ext(vort, h, lambda, n, ext)?;
    let fine = rk4_cauchy_ext(vort, h, lambda, 2 * n, 2 * ext)?;
    let pick = |c: &[f64], f: &[f64]| -> Vec<f64> {
        c.iter()
            .enumerate()
            .map(|(i, &a)| f[2 * i] + (f[2 * i] - a) / 15.0)
            .collect()
    };
    let values = pick(&coarse.values, &fine.values);
    let first = pick(&coarse.first, &fine.first);
    let second = values.iter().map(|&p| -vort.eval(p)).collect();
    Ok(Profile::new(coarse.start, coarse.step, values, first, second))
}

/// Largest discrepancy between a profile and its refinement (which has
/// twice the nodes), with its location.
fn refinement_gap(coarse: &Profile, fine: &Profile) -> (f64, f64) {
    let mut worst = (0.0, coarse.start);
    let shift = ((coarse.start - fine.start) / fine.step).round() as isize;
    for i in 0..coarse.len() {
        let j = 2 * i as isize + shift;
        if j < 0 || j as usize >= fine.len() {
            continue;
        }
        let j = j as usize;
        let a = coarse.values[i];
        let b = fine.values[j];
        let da = coarse.first[i];
        let db = fine.first[j];
        let gap = (a - b).abs().max((da - db).abs());
        if gap > worst.0 || !gap.is_finite() {
            worst = (gap, coarse.node(i));
        }
    }
    worst
}

pub fn solve_uniform_stream(vort: &VorticityFn, h: f64, lambda: f64, n: usize) -> Result<UniformStream, StreamError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(StreamError::InvalidInput(format!("depth must be positive, got {h}")));
    }
    if !lambda.is_finite() {
        return Err(StreamError::InvalidInput(format!(
            "lambda must be finite, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Err(StreamError::DegenerateLambda);
    }
    if n < 16 {
        return Err(StreamError::InvalidInput(format!("need at least 16 nodes, got {n}")));
    }
    if !vort.is_finite() {
        return Err(StreamError::InvalidInput(
            "vorticity coefficients must be finite".into(),
        ));
    }

    let mut steps = n;
    let mut coarse = richardson_cauchy(vort, h, lambda, steps)?;
    let mut converged = None;
    for _ in 0..MAX_DOUBLINGS {
        let fine = richardson_cauchy(vort, h, lambda, 2 * steps)?;
        let (gap, y) = refinement_gap(&coarse, &fine);
        let scale = coarse
            .values
            .iter()
            .chain(coarse.first.iter())
            .fold(1.0f64, |a, v| a.max(v.abs()));
        if gap <= REFINE_TOL * scale {
            converged = Some(fine);
            break;
        }
        steps *= 2;
        if h / steps as f64 <= 1e-14 * h {
            return Err(StreamError::IntegrationFailure { y });
        }
        coarse = fine;
    }
    let profile = match converged {
        Some(p) => p,
        None => {
            let fine = richardson_cauchy(vort, h, lambda, 2 * steps)?;
            let (_, y) = refinement_gap(&coarse, &fine);
            return Err(StreamError::IntegrationFailure { y });
        }
    };
    let bottom = profile.node_index(0.0).expect("y = 0 is a node");
    let top = profile.node_index(h).expect("y = h is a node");
    let m = -profile.values[bottom];
    let kappa = profile.first[top];
    Ok(UniformStream {
        h,
        lambda,
        m,
        bernoulli: 0.5 * lambda * lambda,
        kappa,
        vort: vort.clone(),
        profile,
    })
}

impl UniformStream {
    pub fn domain(&self) -> (f64, f64) {
        (-EXTENSION * self.h, (1.0 + EXTENSION) * self.h)
    }

    /// (Ψ, Ψ′, Ψ″) at `y`; up to `EXTENSION·h` outside [0, h] is served by
    /// the continued solution.
    pub fn eval(&self, y: f64) -> Result<(f64, f64, f64), StreamError> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * self.h;
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(StreamError::OutOfRange { y, lo, hi });
        }
        Ok(self.eval_clamped(y))
    }

    /// Like [`eval`](Self::eval) without the range check; arguments beyond
    /// the stored profile are clamped to its ends.
    pub fn eval_clamped(&self, y: f64) -> (f64, f64, f64) {
        let (psi, dpsi, _) = self.profile.eval(y);
        (psi, dpsi, -self.vort.eval(psi))
    }

    pub fn psi(&self, y: f64) -> f64 {
        self.eval_clamped(y).0
    }

    /// Ψ‴ = −ω′(Ψ)Ψ′.
    pub fn third_derivative(&self, y: f64) -> f64 {
        let (psi, dpsi, _) = self.eval_clamped(y);
        -self.vort.eval_deriv(psi) * dpsi
    }

    /// Stored samples (y, Ψ, Ψ′).
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.profile.len()).map(move |i| (self.profile.node(i), self.profile.values[i], self.profile.first[i]))
    }

    /// Samples restricted to [0, h].
    pub fn samples_on_depth(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let h = self.h;
        self.samples()
            .filter(move |(y, _, _)| *y >= -1e-12 * h && *y <= h * (1.0 + 1e-12))
    }

    /// sup |Ψ″ + ω(Ψ)| over the grid nodes.
    pub fn node_residual(&self) -> f64 {
        (0..self.profile.len())
            .map(|i| (self.profile.second[i] + self.vort.eval(self.profile.values[i])).abs())
            .fold(0.0, f64::max)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }
}

pub fn eval_stream(s: &UniformStream, y: f64) -> Result<(f64, f64, f64), StreamError> {
    s.eval(y)
}
