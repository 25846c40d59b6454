//! Newton solver for the discretised free-boundary problem and
//! arclength continuation of wave branches from a linear seed.
//!
//! Unknowns are the interior rows of ψ, all cosine coefficients of η and one
//! parameter: λ for fixed period (m and Q then follow from the discrete
//! uniform stream at λ) or Λ for variable period (λ, m and Q frozen).

use crate::field::{
    check_nodal, field_equation_residual, physical_derivs, surface_bernoulli, NodalReport, Orientation, WaveField,
};
use crate::grid::{eval_cosine, CellGrid};
use crate::linear_wave::{coordinate_map, LinearWave, LinearWaveError, Regime};
use crate::uniform_stream::{solve_uniform_stream, StreamError};
use crate::vorticity::VorticityFn;
use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest acceptable ratio of LU pivots.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("Newton failed after {iterations} iterations (residual {residual:e}): {reason}")]
    NewtonFailure {
        iterations: usize,
        residual: f64,
        reason: String,
    },
    #[error(transparent)]
    Geometry(#[from] LinearWaveError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iter: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub ds: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Stagnation threshold as a fraction of |λ*|.
    pub stagnation_rel: f64,
    /// Bed-approach threshold as a fraction of h.
    pub bed_rel: f64,
    /// Unbounded threshold as a multiple of the norm at the bifurcation point.
    pub unbounded_factor: f64,
    /// Admissible periods are [Λ*/f, fΛ*].
    pub period_factor: f64,
    pub loop_radius: f64,
    pub max_halvings: usize,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            ds: 0.005,
            max_steps: 20,
            newton_tol: 1e-9,
            newton_max_iter: 25,
            stagnation_rel: 1e-3,
            bed_rel: 1e-3,
            unbounded_factor: 1e3,
            period_factor: 100.0,
            loop_radius: 1e-6,
            max_halvings: 4,
            nx: 17,
            ny: 33,
        }
    }
}

impl ContinuationConfig {
    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
        }
    }

    pub fn validate(&self) -> Result<(), ContinuationError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let checks = [
            ("ds", pos(self.ds)),
            ("newton_tol", pos(self.newton_tol)),
            ("stagnation_rel", pos(self.stagnation_rel)),
            ("bed_rel", pos(self.bed_rel)),
            (
                "unbounded_factor",
                self.unbounded_factor > 1.0 && self.unbounded_factor.is_finite(),
            ),
            (
                "period_factor",
                self.period_factor > 1.0 && self.period_factor.is_finite(),
            ),
            ("loop_radius", pos(self.loop_radius)),
            ("newton_max_iter", self.newton_max_iter > 0),
            ("nx", self.nx >= 4),
            ("ny", self.ny >= 7),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(ContinuationError::InvalidInput(format!(
                "invalid continuation setting {name}"
            ))),
            None => Ok(()),
        }
    }
}

/// What the extra equation fixes.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// First cosine coefficient of η equals t.
    Amplitude(f64),
    /// |z − center| = radius with z = (η coefficients / h, parameter / scale).
    Arclength {
        center: Vec<f64>,
        radius: f64,
        param_scale: f64,
    },
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: WaveField,
    pub iterations: usize,
    pub residual: f64,
}

/// Column of the discrete uniform stream: the discrete field equation on the
/// interior rows, ψ = 0 and Dψ/h = λ on the surface. Returns ψ at all rows.
pub fn discrete_trivial(
    vort: &VorticityFn,
    h: f64,
    lambda: f64,
    grid: &CellGrid,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>, ContinuationError> {
    let ny = grid.ny;
    let mut col: Vec<f64> = match warm {
        Some(w) if w.len() == ny => w.to_vec(),
        _ => {
            let s = solve_uniform_stream(vort, h, lambda, 256)?;
            grid.s.iter().map(|&sj| s.psi(sj * h)).collect()
        }
    };
    col[ny - 1] = 0.0;
    let residual = |c: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = (1..ny - 1)
            .map(|j| grid.dss_at(c, j) / (h * h) + vort.eval(c[j]))
            .collect();
        r.push(grid.ds_at(c, ny - 1) / h - lambda);
        r
    };
    let n = ny - 1;
    let scale = 1.0 + lambda * lambda;
    let mut last = f64::INFINITY;
    for it in 0..50 {
        let r = residual(&col);
        let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm <= 1e-13 * scale || (it > 3 && norm >= last) {
            if norm <= 1e-10 * scale {
                return Ok(col);
            }
            break;
        }
        last = norm;
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let eps = 1e-7 * col[k].abs().max(1.0);
            let mut c = col.clone();
            c[k] += eps;
            let rp = residual(&c);
            for (i, v) in rp.iter().enumerate() {
                jac[(i, k)] = (v - r[i]) / eps;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(r))
            .ok_or_else(|| ContinuationError::NewtonFailure {
                iterations: it,
                residual: norm,
                reason: "singular Jacobian in the uniform-stream solve".into(),
            })?;
        for k in 0..n {
            col[k] -= step[k];
        }
    }
    Err(ContinuationError::NewtonFailure {
        iterations: 50,
        residual: last,
        reason: "uniform-stream column did not converge".into(),
    })
}

#[derive(Debug, Clone)]
struct Params {
    m: f64,
    q: f64,
    alpha: f64,
    lambda: f64,
    column: Vec<f64>,
}

/// Static data of the discrete problem.
#[derive(Debug, Clone)]
struct Problem {
    regime: Regime,
    h: f64,
    vort: VorticityFn,
    period_star: f64,
    lambda_star: f64,
    m_star: f64,
    q_star: f64,
    grid: CellGrid,
}

impl Problem {
    fn from_field(f: &WaveField) -> Self {
        Problem {
            regime: f.regime,
            h: f.h,
            vort: f.vort.clone(),
            period_star: f.period_star,
            lambda_star: f.lambda,
            m_star: f.m,
            q_star: f.bernoulli,
            grid: f.grid(),
        }
    }

    fn nx(&self) -> usize {
        self.grid.nx
    }

    fn interior(&self) -> usize {
        self.grid.nx * (self.grid.ny - 2)
    }

    fn unknowns(&self) -> usize {
        self.interior() + self.nx() + 1
    }

    fn param_index(&self) -> usize {
        self.unknowns() - 1
    }

    fn eta<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[self.interior()..self.interior() + self.nx()]
    }

    fn pack(&self, f: &WaveField) -> Vec<f64> {
        let nx = self.nx();
        let mut u = f.psi[nx..nx * (self.grid.ny - 1)].to_vec();
        let mut eta = f.eta.clone();
        eta.resize(nx, 0.0);
        u.extend(eta);
        u.push(match self.regime {
            Regime::FixedPeriod => f.lambda,
            Regime::VariablePeriod => f.period,
        });
        u
    }

    fn params(&self, p: f64, warm: Option<&[f64]>) -> Result<Params, ContinuationError> {
        match self.regime {
            Regime::FixedPeriod => {
                let column = discrete_trivial(&self.vort, self.h, p, &self.grid, warm)?;
                Ok(Params {
                    m: -column[0],
                    q: 0.5 * p * p,
                    alpha: 1.0,
                    lambda: p,
                    column,
                })
            }
            Regime::VariablePeriod => {
                if !(p > 0.0) {
                    return Err(ContinuationError::InvalidInput(format!(
                        "period must be positive, got {p}"
                    )));
                }
                Ok(Params {
                    m: self.m_star,
                    q: self.q_star,
                    alpha: p / self.period_star,
                    lambda: self.lambda_star,
                    column: Vec::new(),
                })
            }
        }
    }

    fn psi_full(&self, u: &[f64], m: f64) -> Vec<f64> {
        let nx = self.nx();
        let mut psi = vec![-m; nx];
        psi.extend_from_slice(&u[..self.interior()]);
        psi.extend(std::iter::repeat_n(0.0, nx));
        psi
    }

    fn physics(&self, u: &[f64], prm: &Params) -> Vec<f64> {
        let psi = self.psi_full(u, prm.m);
        let eta = self.eta(u);
        let d = physical_derivs(&self.grid, &psi, eta, self.h, prm.alpha);
        let mut r = field_equation_residual(&d, &self.grid, &self.vort);
        r.extend(surface_bernoulli(&d, &self.grid, eta, prm.q));
        r
    }

    fn z(&self, u: &[f64], param_scale: f64) -> Vec<f64> {
        let mut z: Vec<f64> = self.eta(u).iter().map(|c| c / self.h).collect();
        z.push(u[self.param_index()] / param_scale);
        z
    }

    fn constraint(&self, u: &[f64], c: &Constraint) -> f64 {
        match c {
            Constraint::Amplitude(t) => self.eta(u)[1] - t,
            Constraint::Arclength {
                center,
                radius,
                param_scale,
            } => {
                let d2: f64 = self
                    .z(u, *param_scale)
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                (d2 - radius * radius) / (2.0 * radius)
            }
        }
    }

    fn full_residual(&self, u: &[f64], prm: &Params, c: &Constraint) -> Vec<f64> {
        let mut r = self.physics(u, prm);
        r.push(self.constraint(u, c));
        r
    }

    fn min_depth(&self, u: &[f64], alpha: f64) -> Result<f64, ContinuationError> {
        let map = coordinate_map(
            Regime::FixedPeriod,
            self.h,
            self.period_star,
            self.period_star,
            self.eta(u).to_vec(),
        );
        let _ = alpha;
        match map {
            Ok(m) => Ok(m.min_depth()),
            Err(LinearWaveError::SurfaceTouchesBed { min_depth }) => Ok(min_depth),
            Err(e) => Err(e.into()),
        }
    }

    fn unpack(&self, u: &[f64], prm: &Params) -> WaveField {
        let eta = self.eta(u).to_vec();
        WaveField {
            regime: self.regime,
            h: self.h,
            period: prm.alpha * self.period_star,
            period_star: self.period_star,
            lambda: prm.lambda,
            bernoulli: prm.q,
            m: prm.m,
            t: eta[1],
            nx: self.grid.nx,
            ny: self.grid.ny,
            psi: self.psi_full(u, prm.m),
            eta,
            vort: self.vort.clone(),
        }
    }

    fn jacobian(
        &self,
        u: &[f64],
        prm: &Params,
        c: &Constraint,
        base: &[f64],
    ) -> Result<DMatrix<f64>, ContinuationError> {
        let n = self.unknowns();
        let pi = self.param_index();
        let cols: Vec<Result<Vec<f64>, ContinuationError>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let eps = 1e-7 * u[j].abs().max(1.0);
                let mut up = u.to_vec();
                up[j] += eps;
                let r = if j == pi {
                    let shifted = self.params(up[pi], Some(&prm.column))?;
                    self.full_residual(&up, &shifted, c)
                } else {
                    self.full_residual(&up, prm, c)
                };
                Ok(r.iter().zip(base).map(|(a, b)| (a - b) / eps).collect())
            })
            .collect();
        let mut jac = DMatrix::zeros(n, n);
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col?.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        Ok(jac)
    }

    fn solve(
        &self,
        mut u: Vec<f64>,
        c: &Constraint,
        opts: &NewtonOptions,
    ) -> Result<(Vec<f64>, Params, usize, f64), ContinuationError> {
        let pi = self.param_index();
        let fail = |iterations: usize, residual: f64, reason: String| ContinuationError::NewtonFailure {
            iterations,
            residual,
            reason,
        };
        let mut warm: Option<Vec<f64>> = None;
        for it in 0..=opts.max_iter {
            let prm = self.params(u[pi], warm.as_deref())?;
            let depth = self.min_depth(&u, prm.alpha)?;
            if depth <= 0.0 {
                return Err(LinearWaveError::SurfaceTouchesBed { min_depth: depth }.into());
            }
            let r = self.full_residual(&u, &prm, c);
            let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            debug!("newton iteration {it}: residual {norm:e}");
            if !norm.is_finite() {
                return Err(fail(it, norm, "non-finite residual".into()));
            }
            if norm <= opts.tol {
                return Ok((u, prm, it, norm));
            }
            if it == opts.max_iter {
                return Err(fail(it, norm, "iteration limit reached".into()));
            }
            let jac = self.jacobian(&u, &prm, c, &r)?;
            let lu = jac.lu();
            let diag = lu.u().diagonal();
            let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                (lo.min(d.abs()), hi.max(d.abs()))
            });
            if !(lo > 0.0) || hi / lo > CONDITION_LIMIT {
                return Err(fail(it, norm, format!("singular Jacobian (pivot ratio {:e})", hi / lo)));
            }
            let step = lu
                .solve(&DVector::from_vec(r))
                .ok_or_else(|| fail(it, norm, "singular Jacobian".into()))?;
            for (a, d) in u.iter_mut().zip(step.iter()) {
                *a -= d;
            }
            warm = Some(prm.column);
        }
        unreachable!("loop returns on its last iteration")
    }
}

/// Solves the discrete problem from `initial`; the regime parameter is λ
/// (fixed period) or Λ (variable period). Returns immediately when the
/// initial residual already meets the tolerance.
pub fn newton_solve(
    initial: &WaveField,
    constraint: &Constraint,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, ContinuationError> {
    initial.validate().map_err(|e| match e {
        crate::field::FieldError::Geometry(g) => ContinuationError::Geometry(g),
        other => ContinuationError::InvalidInput(other.to_string()),
    })?;
    let problem = Problem::from_field(initial);
    let u0 = problem.pack(initial);
    let (u, prm, iterations, residual) = problem.solve(u0, constraint, opts)?;
    Ok(NewtonOutcome {
        field: if iterations == 0 {
            initial.clone()
        } else {
            problem.unpack(&u, &prm)
        },
        iterations,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxSteps,
    StagnationApproach,
    BedApproach,
    UnboundedSolution,
    PeriodDegenerate,
    LoopDetected,
    NewtonFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::MaxSteps => "max_steps",
            Termination::StagnationApproach => "stagnation_approach",
            Termination::BedApproach => "bed_approach",
            Termination::UnboundedSolution => "unbounded_solution",
            Termination::PeriodDegenerate => "period_degenerate",
            Termination::LoopDetected => "loop_detected",
            Termination::NewtonFailure => "newton_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub field: WaveField,
    /// First cosine coefficient of η.
    pub t: f64,
    /// λ or Λ.
    pub parameter: f64,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub nodal: Option<NodalReport>,
    pub nodal_error: Option<String>,
    pub stagnation_margin: f64,
    pub bernoulli_sup: f64,
    /// min over x of h + η.
    pub min_surface_height: f64,
    pub eta_sup: f64,
    pub norm: f64,
}

impl BranchPoint {
    pub fn from_field(field: WaveField, newton_residual: f64, newton_iterations: usize) -> Self {
        let parameter = match field.regime {
            Regime::FixedPeriod => field.lambda,
            Regime::VariablePeriod => field.period,
        };
        let grid = field.grid();
        let d = field.derivs(&grid);
        let top = grid.ny - 1;
        let stagnation_margin = (0..grid.nx)
            .map(|i| d.x[grid.idx(i, top)].hypot(d.y[grid.idx(i, top)]))
            .fold(f64::INFINITY, f64::min);
        let bernoulli_sup = surface_bernoulli(&d, &grid, &field.eta, field.bernoulli)
            .iter()
            .fold(0.0, |a: f64, v| a.max(v.abs()));
        let (nodal, nodal_error) = match check_nodal(&field, Orientation::Auto) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let map = coordinate_map(
            Regime::FixedPeriod,
            field.h,
            field.period_star,
            field.period_star,
            field.eta.clone(),
        );
        let min_surface_height = match map {
            Ok(m) => m.min_depth(),
            Err(LinearWaveError::SurfaceTouchesBed { min_depth }) => min_depth,
            Err(_) => f64::NAN,
        };
        let n = 8 * field.nx;
        let eta_sup = (0..n)
            .map(|i| {
                eval_cosine(
                    &field.eta,
                    field.tau_star(),
                    0.5 * field.period_star * i as f64 / (n - 1) as f64,
                )
                .0
                .abs()
            })
            .fold(0.0, f64::max);
        let norm = field.sup_norm();
        BranchPoint {
            t: field.eta.get(1).copied().unwrap_or(0.0),
            parameter,
            newton_residual,
            newton_iterations,
            nodal,
            nodal_error,
            stagnation_margin,
            bernoulli_sup,
            min_surface_height,
            eta_sup,
            norm,
            field,
        }
    }

    /// Metric coordinates (η coefficients / h, parameter / scale).
    pub fn z(&self, param_scale: f64) -> Vec<f64> {
        let mut z: Vec<f64> = self.field.eta.iter().map(|c| c / self.field.h).collect();
        z.resize(self.field.nx, 0.0);
        z.push(self.parameter / param_scale);
        z
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub regime: Regime,
    pub vort: VorticityFn,
    pub h: f64,
    pub lambda_star: f64,
    pub tau_star: f64,
    pub period_star: f64,
    /// λ* or Λ*, the unit of the parameter axis in the metric.
    pub param_scale: f64,
    pub config: ContinuationConfig,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    pub loop_report: LoopReport,
    /// Seeded at t = 0: the branch consists of uniform streams.
    pub trivial: bool,
}

impl Branch {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i].z(self.param_scale), self.points[j].z(self.param_scale));
        a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    pub fn thresholds(&self) -> Thresholds {
        let initial_norm = self.points.first().map(|p| p.norm).unwrap_or(1.0);
        Thresholds::new(&self.config, self.lambda_star, self.h, initial_norm, self.period_star)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub stagnation: f64,
    pub bed: f64,
    pub unbounded: f64,
    pub period_min: f64,
    pub period_max: f64,
    pub loop_radius: f64,
}

impl Thresholds {
    pub fn new(cfg: &ContinuationConfig, lambda_star: f64, h: f64, initial_norm: f64, period_star: f64) -> Self {
        Thresholds {
            stagnation: cfg.stagnation_rel * lambda_star.abs(),
            bed: cfg.bed_rel * h,
            unbounded: cfg.unbounded_factor * initial_norm,
            period_min: period_star / cfg.period_factor,
            period_max: period_star * cfg.period_factor,
            loop_radius: cfg.loop_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopCertificate {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub certificate: Option<LoopCertificate>,
    /// (index, parameter) of every point with ‖η‖∞/h below the radius.
    pub uniform_points: Vec<(usize, f64)>,
    /// A second, distinct uniform-stream parameter on a variable-period
    /// branch; cannot occur for exact solutions and signals a numerical artifact.
    pub artifact_warning: bool,
}

/// Closest non-adjacent pair within `radius` in the branch metric, plus the
/// near-uniform points.
pub fn detect_loop(b: &Branch, radius: f64) -> LoopReport {
    let n = b.points.len();
    let zs: Vec<Vec<f64>> = b.points.iter().map(|p| p.z(b.param_scale)).collect();
    let mut certificate: Option<LoopCertificate> = None;
    for i in 0..n {
        for j in i + 2..n {
            let d = zs[i]
                .iter()
                .zip(&zs[j])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            if d < radius && certificate.as_ref().is_none_or(|c| d < c.distance) {
                certificate = Some(LoopCertificate { i, j, distance: d });
            }
        }
    }
    let uniform_points: Vec<(usize, f64)> = b
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.eta_sup / p.field.h < radius)
        .map(|(i, p)| (i, p.parameter))
        .collect();
    let distinct = uniform_points
        .iter()
        .any(|&(_, p)| (p - uniform_points[0].1).abs() > radius * b.param_scale.abs());
    LoopReport {
        certificate,
        artifact_warning: b.regime == Regime::VariablePeriod && distinct,
        uniform_points,
    }
}

/// First triggered stopping reason at the last point, in the order
/// stagnation, bed, unbounded, period range, loop; otherwise max_steps.
pub fn detect_termination(b: &Branch, th: &Thresholds) -> Termination {
    let Some(last) = b.points.last() else {
        return Termination::MaxSteps;
    };
    if last.stagnation_margin < th.stagnation {
        return Termination::StagnationApproach;
    }
    if last.min_surface_height < th.bed {
        return Termination::BedApproach;
    }
    if last.norm > th.unbounded {
        return Termination::UnboundedSolution;
    }
    if b.regime == Regime::VariablePeriod && !(th.period_min..=th.period_max).contains(&last.parameter) {
        return Termination::PeriodDegenerate;
    }
    if b.points.len() >= 10 && detect_loop(b, th.loop_radius).certificate.is_some() {
        return Termination::LoopDetected;
    }
    Termination::MaxSteps
}

fn with_seed_params(seed: &LinearWave, field: &mut WaveField, column: &[f64]) {
    field.m = -column[0];
    field.lambda = seed.stream.lambda;
    field.bernoulli = 0.5 * seed.stream.lambda * seed.stream.lambda;
}

/// Continues the branch through `seed`: point 0 is the bifurcation point,
/// point 1 the solution with t pinned to the seed amplitude, later points
/// are spaced `ds` apart in the metric of (η/h, parameter/parameter*).
pub fn continue_branch(seed: &LinearWave, cfg: &ContinuationConfig) -> Result<Branch, ContinuationError> {
    cfg.validate()?;
    let regime = seed.regime;
    let h = seed.stream.h;
    let lambda_star = seed.stream.lambda;
    let tau_star = seed.tau_star;
    let period_star = 2.0 * PI / tau_star;
    let grid = CellGrid::new(cfg.nx, cfg.ny, tau_star);
    let column = discrete_trivial(&seed.stream.vort, h, lambda_star, &grid, None)?;

    let mut base = WaveField::from_uniform_stream(&seed.stream, period_star, regime, cfg.nx, cfg.ny);
    for (row, &c) in base.psi.chunks_mut(cfg.nx).zip(&column) {
        row.fill(c);
    }
    with_seed_params(seed, &mut base, &column);
    let param_scale = match regime {
        Regime::FixedPeriod => lambda_star,
        Regime::VariablePeriod => period_star,
    };
    let mut branch = Branch {
        regime,
        vort: seed.stream.vort.clone(),
        h,
        lambda_star,
        tau_star,
        period_star,
        param_scale,
        config: *cfg,
        points: vec![BranchPoint::from_field(base.clone(), 0.0, 0)],
        termination: Termination::MaxSteps,
        loop_report: LoopReport::default(),
        trivial: seed.t == 0.0,
    };
    let problem = Problem::from_field(&base);
    let opts = cfg.newton();

    let finish = |mut b: Branch, term: Termination| {
        b.loop_report = detect_loop(&b, cfg.loop_radius);
        b.termination = term;
        info!("branch terminated: {} after {} points", term.as_str(), b.points.len());
        b
    };

    if branch.trivial {
        let mut warm = column.clone();
        for k in 1..=cfg.max_steps {
            let p = param_scale * (1.0 + k as f64 * cfg.ds);
            let prm = problem.params(p, Some(&warm))?;
            warm = prm.column.clone();
            let mut u = vec![0.0; problem.unknowns()];
            for j in 1..cfg.ny - 1 {
                for i in 0..cfg.nx {
                    u[(j - 1) * cfg.nx + i] = match regime {
                        Regime::FixedPeriod => prm.column[j],
                        Regime::VariablePeriod => column[j],
                    };
                }
            }
            u[problem.param_index()] = p;
            let res = problem.physics(&u, &prm).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            branch
                .points
                .push(BranchPoint::from_field(problem.unpack(&u, &prm), res, 0));
            let th = branch.thresholds();
            let term = detect_termination(&branch, &th);
            if term != Termination::MaxSteps {
                return Ok(finish(branch, term));
            }
        }
        return Ok(finish(branch, Termination::MaxSteps));
    }

    // first nontrivial point: amplitude pinned
    let mut seed_field = WaveField::from_linear_wave(seed, cfg.nx, cfg.ny);
    with_seed_params(seed, &mut seed_field, &column);
    seed_field.psi[..cfg.nx].iter_mut().for_each(|p| *p = column[0]);
    seed_field.psi[(cfg.ny - 1) * cfg.nx..]
        .iter_mut()
        .for_each(|p| *p = 0.0);
    let mut packed = vec![problem.pack(&base)];
    let mut t = seed.t;
    let mut attempt = 0;
    loop {
        let mut guess = seed_field.clone();
        let scale = t / seed.t;
        guess.eta[1] = t;
        for (k, p) in guess.psi.iter_mut().enumerate() {
            let j = k / cfg.nx;
            *p = column[j] + scale * (*p - column[j]);
        }
        match problem.solve(problem.pack(&guess), &Constraint::Amplitude(t), &opts) {
            Ok((u, prm, its, res)) => {
                branch
                    .points
                    .push(BranchPoint::from_field(problem.unpack(&u, &prm), res, its));
                packed.push(u);
                break;
            }
            Err(e) => {
                debug!("first step at t = {t} failed: {e}");
                attempt += 1;
                if attempt > cfg.max_halvings {
                    return Ok(finish(branch, Termination::NewtonFailure));
                }
                t *= 0.5;
            }
        }
    }
    let term = detect_termination(&branch, &branch.thresholds());
    if term != Termination::MaxSteps {
        return Ok(finish(branch, term));
    }

    while branch.points.len() - 1 < cfg.max_steps {
        let k = packed.len() - 1;
        let (uk, uprev) = (&packed[k], &packed[k - 1]);
        let zk = problem.z(uk, param_scale);
        let zp = problem.z(uprev, param_scale);
        let dz = zk.iter().zip(&zp).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mut ds = cfg.ds;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let pred: Vec<f64> = uk.iter().zip(uprev).map(|(a, b)| a + ds / dz * (a - b)).collect();
            let c = Constraint::Arclength {
                center: zk.clone(),
                radius: ds,
                param_scale,
            };
            match problem.solve(pred, &c, &opts) {
                Ok(sol) => {
                    accepted = Some(sol);
                    break;
                }
                Err(e) => {
                    debug!("step {} with ds = {ds} failed: {e}", k + 1);
                    ds *= 0.5;
                }
            }
        }
        let Some((u, prm, its, res)) = accepted else {
            return Ok(finish(branch, Termination::NewtonFailure));
        };
        branch
            .points
            .push(BranchPoint::from_field(problem.unpack(&u, &prm), res, its));
        packed.push(u);
        let p = branch.points.last().expect("just pushed");
        info!(
            "point {}: t = {:.6e}, parameter = {:.12e}, residual = {:.2e}",
            branch.points.len() - 1,
            p.t,
            p.parameter,
            p.newton_residual
        );
        let term = detect_termination(&branch, &branch.thresholds());
        if term != Termination::MaxSteps {
            return Ok(finish(branch, term));
        }
    }
    Ok(finish(branch, Termination::MaxSteps))
}
