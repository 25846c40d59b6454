//! Discrete wave fields on the half-period cell, their residuals, and the
//! nodal checker for the sign structure of u = ψ_x.
//!
//! A field stores ψ at the nodes (X_i, s_j) of a [`CellGrid`]; the physical
//! point is x = αX, y = s·H(X) with H = h + η and α = Λ/Λ*.

use crate::grid::{eval_cosine, eval_sine, CellGrid};
use crate::linear_wave::{coordinate_map, CoordinateMap, LinearWave, LinearWaveError, Regime};
use crate::uniform_stream::UniformStream;
use crate::vorticity::VorticityFn;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Relative strictness tolerance for the sign properties.
pub const STRICTNESS: f64 = 1e-10;
/// |ψ_y| ≥ GRAPH_LIKE·|∇ψ| marks a graph-like surface node.
pub const GRAPH_LIKE: f64 = 0.1;
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("degenerate field: max |psi_x| = {max_abs} (psi_x vanishes identically)")]
    DegenerateField { max_abs: f64 },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error(transparent)]
    Geometry(#[from] LinearWaveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub regime: Regime,
    pub h: f64,
    /// Λ
    pub period: f64,
    /// Λ*
    pub period_star: f64,
    pub lambda: f64,
    /// Bernoulli constant Q.
    pub bernoulli: f64,
    pub m: f64,
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    /// ψ at node (i, j) stored at j·nx + i; row 0 is the bed, row ny−1 the surface.
    pub psi: Vec<f64>,
    /// Cosine coefficients of η in X, base wavenumber τ* = 2π/Λ*.
    pub eta: Vec<f64>,
    pub vort: VorticityFn,
}

/// Physical derivatives of ψ at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalDerivs {
    pub psi: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

/// Column data of the map at one X: H, H_X, H_XX.
fn depth_at(eta: &[f64], tau: f64, h: f64, x: f64) -> (f64, f64, f64) {
    let (e, de, dde) = eval_cosine(eta, tau, x);
    (h + e, de, dde)
}

/// Pushes computational derivatives of ψ forward to physical ones.
pub fn physical_derivs(grid: &CellGrid, psi: &[f64], eta: &[f64], h: f64, alpha: f64) -> PhysicalDerivs {
    let (nx, ny) = (grid.nx, grid.ny);
    let p_x = grid.dx_even(psi);
    let p_xx = grid.dxx_even(psi);
    let p_s = grid.ds(psi);
    let p_ss = grid.dss(psi);
    let p_xs = grid.ds(&p_x);
    let n = nx * ny;
    let mut out = PhysicalDerivs {
        psi: psi.to_vec(),
        x: vec![0.0; n],
        y: vec![0.0; n],
        xx: vec![0.0; n],
        xy: vec![0.0; n],
        yy: vec![0.0; n],
    };
    for i in 0..nx {
        let (hh, hx, hxx) = depth_at(eta, grid.tau, h, grid.x[i]);
        let a_s = -hx / hh;
        for j in 0..ny {
            let k = grid.idx(i, j);
            let s = grid.s[j];
            let a = -s * hx / hh;
            let a_x = -s * (hxx * hh - hx * hx) / (hh * hh);
            out.x[k] = (p_x[k] + a * p_s[k]) / alpha;
            out.y[k] = p_s[k] / hh;
            out.xx[k] = (p_xx[k] + 2.0 * a * p_xs[k] + a * a * p_ss[k] + (a_x + a * a_s) * p_s[k]) / (alpha * alpha);
            out.xy[k] = (p_xs[k] + a_s * p_s[k] + a * p_ss[k]) / (alpha * hh);
            out.yy[k] = p_ss[k] / (hh * hh);
        }
    }
    out
}

/// Δψ + ω(ψ) on rows 1..ny−1, stored row by row.
pub fn field_equation_residual(d: &PhysicalDerivs, grid: &CellGrid, vort: &VorticityFn) -> Vec<f64> {
    let nx = grid.nx;
    (nx..nx * (grid.ny - 1))
        .map(|k| d.xx[k] + d.yy[k] + vort.eval(d.psi[k]))
        .collect()
}

/// ½|∇ψ|² + η − Q on the surface row.
pub fn surface_bernoulli(d: &PhysicalDerivs, grid: &CellGrid, eta: &[f64], q: f64) -> Vec<f64> {
    let j = grid.ny - 1;
    (0..grid.nx)
        .map(|i| {
            let k = grid.idx(i, j);
            let e = eval_cosine(eta, grid.tau, grid.x[i]).0;
            0.5 * (d.x[k] * d.x[k] + d.y[k] * d.y[k]) + e - q
        })
        .collect()
}

impl WaveField {
    pub fn tau_star(&self) -> f64 {
        2.0 * PI / self.period_star
    }

    /// x = αX.
    pub fn alpha(&self) -> f64 {
        self.period / self.period_star
    }

    pub fn grid(&self) -> CellGrid {
        CellGrid::new(self.nx, self.ny, self.tau_star())
    }

    pub fn coordinate_map(&self) -> Result<CoordinateMap, FieldError> {
        Ok(coordinate_map(
            self.regime,
            self.h,
            self.period,
            self.period_star,
            self.eta.clone(),
        )?)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: &str| Err(FieldError::InvalidField(m.to_string()));
        if self.nx < 4 || self.ny < 7 {
            return bad("grid must have nx >= 4 and ny >= 7");
        }
        if self.psi.len() != self.nx * self.ny {
            return bad("psi length does not match nx*ny");
        }
        if self.eta.len() > self.nx {
            return bad("more eta coefficients than x nodes");
        }
        let scalars = [
            self.h,
            self.period,
            self.period_star,
            self.lambda,
            self.bernoulli,
            self.m,
            self.t,
        ];
        if scalars.iter().chain(&self.psi).chain(&self.eta).any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if !self.vort.is_finite() {
            return bad("non-finite vorticity coefficients");
        }
        self.coordinate_map()?;
        Ok(())
    }

    /// The uniform stream Ψ(s·h) sampled on the grid with a flat surface.
    pub fn from_uniform_stream(stream: &UniformStream, period_star: f64, regime: Regime, nx: usize, ny: usize) -> Self {
        let mut psi = vec![0.0; nx * ny];
        for j in 0..ny {
            let v = stream.psi(stream.h * j as f64 / (ny - 1) as f64);
            psi[j * nx..(j + 1) * nx].iter_mut().for_each(|p| *p = v);
        }
        psi[..nx].iter_mut().for_each(|p| *p = -stream.m);
        psi[(ny - 1) * nx..].iter_mut().for_each(|p| *p = 0.0);
        WaveField {
            regime,
            h: stream.h,
            period: period_star,
            period_star,
            lambda: stream.lambda,
            bernoulli: stream.bernoulli,
            m: stream.m,
            t: 0.0,
            nx,
            ny,
            psi,
            eta: vec![0.0; nx],
            vort: stream.vort.clone(),
        }
    }

    /// The first-order wave sampled at x = X, y = s(h + t cos τ*X).
    pub fn from_linear_wave(w: &LinearWave, nx: usize, ny: usize) -> Self {
        let grid = CellGrid::new(nx, ny, w.tau_star);
        let mut eta = vec![0.0; nx];
        eta[1] = w.t;
        let mut psi = vec![0.0; nx * ny];
        for i in 0..nx {
            let top = w.stream.h + w.eta(grid.x[i]).0;
            for j in 0..ny {
                psi[grid.idx(i, j)] = w.psi(grid.x[i], grid.s[j] * top);
            }
        }
        WaveField {
            regime: w.regime,
            h: w.stream.h,
            period: w.period(),
            period_star: w.period(),
            lambda: w.stream.lambda,
            bernoulli: w.stream.bernoulli,
            m: w.stream.m,
            t: w.t,
            nx,
            ny,
            psi,
            eta,
            vort: w.stream.vort.clone(),
        }
    }

    pub fn derivs(&self, grid: &CellGrid) -> PhysicalDerivs {
        physical_derivs(grid, &self.psi, &self.eta, self.h, self.alpha())
    }

    /// (η, η_x, η_xx) in physical x.
    pub fn eta_at(&self, x: f64) -> (f64, f64, f64) {
        let a = self.alpha();
        let (e, de, dde) = eval_cosine(&self.eta, self.tau_star(), x / a);
        (e, de / a, dde / (a * a))
    }

    /// Sup-norm of (ψ, η) in computational variables.
    pub fn sup_norm(&self) -> f64 {
        let eta_sup = (0..4 * self.nx)
            .map(|i| {
                let x = 0.5 * self.period_star * i as f64 / (4 * self.nx - 1) as f64;
                eval_cosine(&self.eta, self.tau_star(), x).0.abs()
            })
            .fold(0.0, f64::max);
        self.psi.iter().fold(eta_sup, |a, v| a.max(v.abs()))
    }
}

pub fn pde_residual(f: &WaveField) -> Vec<f64> {
    let grid = f.grid();
    field_equation_residual(&f.derivs(&grid), &grid, &f.vort)
}

pub fn bernoulli_residual(f: &WaveField) -> (f64, Vec<f64>) {
    let grid = f.grid();
    let profile = surface_bernoulli(&f.derivs(&grid), &grid, &f.eta, f.bernoulli);
    (profile.iter().fold(0.0, |a, v| a.max(v.abs())), profile)
}

/// min over surface nodes of |∇ψ|.
pub fn stagnation_margin(f: &WaveField) -> f64 {
    let grid = f.grid();
    let d = f.derivs(&grid);
    let j = grid.ny - 1;
    (0..grid.nx)
        .map(|i| {
            let k = grid.idx(i, j);
            d.x[k].hypot(d.y[k])
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub verdict: Verdict,
    /// Smallest value of the quantity required to be positive.
    pub margin: f64,
}

impl PropertyCheck {
    fn from_margin(margin: f64, tol: f64) -> Self {
        let verdict = if margin > tol {
            Verdict::Holds
        } else if margin < -tol {
            Verdict::Fails
        } else {
            Verdict::Indeterminate
        };
        PropertyCheck { verdict, margin }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    /// +1 when u = ψ_x, −1 when u = −ψ_x.
    pub orientation: f64,
    pub property_i: PropertyCheck,
    pub property_ii_left: PropertyCheck,
    pub property_ii_right: PropertyCheck,
    pub property_ii_bed: PropertyCheck,
    pub property_iii_left: PropertyCheck,
    pub property_iii_right: PropertyCheck,
    pub stagnation_margin: f64,
    pub bernoulli_sup: f64,
    /// NaN when no surface node is graph-like.
    pub robin_sup: f64,
    pub robin_nodes: usize,
    pub surface_monotone: bool,
    /// max |ψ_x| over the checked points.
    pub scale: f64,
}

impl NodalReport {
    pub fn properties(&self) -> [(&'static str, PropertyCheck); 6] {
        [
            ("property_i", self.property_i),
            ("property_ii_left", self.property_ii_left),
            ("property_ii_right", self.property_ii_right),
            ("property_ii_bed", self.property_ii_bed),
            ("property_iii_left", self.property_iii_left),
            ("property_iii_right", self.property_iii_right),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.properties().iter().all(|(_, p)| p.holds())
    }

    pub fn verdicts(&self) -> [Verdict; 6] {
        self.properties().map(|(_, p)| p.verdict)
    }

    /// Smallest property margin.
    pub fn min_margin(&self) -> f64 {
        self.properties()
            .iter()
            .map(|(_, p)| p.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// u = ψ_x and the derivatives the properties need, on an np × nq point set
/// whose first/last columns are the sides and first/last rows bed/surface.
struct Samples {
    np: usize,
    nq: usize,
    u: Vec<f64>,
    u_x: Vec<f64>,
    u_y: Vec<f64>,
    u_xy: Vec<f64>,
}

/// Physical derivatives of v from its computational derivatives.
#[allow(clippy::too_many_arguments)]
fn push_v(
    v: f64,
    v_x: f64,
    v_s: f64,
    v_ss: f64,
    v_xs: f64,
    s: f64,
    col: (f64, f64),
    alpha: f64,
) -> (f64, f64, f64, f64) {
    let (hh, hx) = col;
    let a = -s * hx / hh;
    let a_s = -hx / hh;
    (
        v,
        (v_x + a * v_s) / alpha,
        v_s / hh,
        (v_xs + a_s * v_s + a * v_ss) / (alpha * hh),
    )
}

fn node_samples(f: &WaveField, grid: &CellGrid, d: &PhysicalDerivs) -> Samples {
    let v = &d.x;
    let v_x = grid.dx_odd(v);
    let v_s = grid.ds(v);
    let v_ss = grid.dss(v);
    let v_xs = grid.ds(&v_x);
    let n = grid.len();
    let mut out = Samples {
        np: grid.nx,
        nq: grid.ny,
        u: vec![0.0; n],
        u_x: vec![0.0; n],
        u_y: vec![0.0; n],
        u_xy: vec![0.0; n],
    };
    for i in 0..grid.nx {
        let (hh, hx, _) = depth_at(&f.eta, grid.tau, f.h, grid.x[i]);
        for j in 0..grid.ny {
            let k = grid.idx(i, j);
            let r = push_v(v[k], v_x[k], v_s[k], v_ss[k], v_xs[k], grid.s[j], (hh, hx), f.alpha());
            out.u[k] = r.0;
            out.u_x[k] = r.1;
            out.u_y[k] = r.2;
            out.u_xy[k] = r.3;
        }
    }
    out
}

/// v = ψ_x interpolated to an np × nq point set: sine series in X,
/// six-point Lagrange in s.
fn resampled(f: &WaveField, grid: &CellGrid, d: &PhysicalDerivs, np: usize, nq: usize) -> Samples {
    let nx = grid.nx;
    // per-row sine series of v and of v_s, v_ss
    let v_s = grid.ds(&d.x);
    let v_ss = grid.dss(&d.x);
    let coeffs = |f: &[f64]| -> Vec<Vec<f64>> {
        (0..grid.ny)
            .map(|j| grid.sine_coefficients(&f[j * nx..(j + 1) * nx]))
            .collect()
    };
    let (cv, cs, css) = (coeffs(&d.x), coeffs(&v_s), coeffs(&v_ss));
    let half = grid.half_period();
    let n = np * nq;
    let mut out = Samples {
        np,
        nq,
        u: vec![0.0; n],
        u_x: vec![0.0; n],
        u_y: vec![0.0; n],
        u_xy: vec![0.0; n],
    };
    for p in 0..np {
        let xp = half * p as f64 / (np - 1) as f64;
        let (hh, hx, _) = depth_at(&f.eta, grid.tau, f.h, xp);
        let rows: Vec<(f64, f64, f64, f64, f64)> = (0..grid.ny)
            .map(|j| {
                let (a, ax, _) = eval_sine(&cv[j], grid.tau, xp);
                let (b, bx, _) = eval_sine(&cs[j], grid.tau, xp);
                let (c, _, _) = eval_sine(&css[j], grid.tau, xp);
                (a, ax, b, c, bx)
            })
            .collect();
        for q in 0..nq {
            let s = q as f64 / (nq - 1) as f64;
            let (start, w) = grid.s_weights(s);
            let mut acc = [0.0; 5];
            for (l, wt) in w[0].iter().enumerate() {
                let r = rows[start + l];
                acc[0] += wt * r.0;
                acc[1] += wt * r.1;
                acc[2] += wt * r.2;
                acc[3] += wt * r.3;
                acc[4] += wt * r.4;
            }
            let k = q * np + p;
            let r = push_v(acc[0], acc[1], acc[2], acc[3], acc[4], s, (hh, hx), f.alpha());
            out.u[k] = r.0;
            out.u_x[k] = r.1;
            out.u_y[k] = r.2;
            out.u_xy[k] = r.3;
        }
    }
    out
}

fn assess(
    f: &WaveField,
    grid: &CellGrid,
    d: &PhysicalDerivs,
    samples: Samples,
    orientation: Orientation,
) -> Result<NodalReport, FieldError> {
    let psi_scale = f.psi.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let scale = samples.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale <= DEGENERATE_TOL * psi_scale {
        return Err(FieldError::DegenerateField { max_abs: scale });
    }
    let sign = match orientation {
        Orientation::Positive => 1.0,
        Orientation::Negative => -1.0,
        Orientation::Auto => {
            if samples.u.iter().sum::<f64>() >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    let tol = STRICTNESS * scale;
    let (np, nq) = (samples.np, samples.nq);
    let at = |a: &[f64], p: usize, q: usize| sign * a[q * np + p];
    let min_over = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);

    let p_i = min_over(
        &mut (1..nq)
            .flat_map(|q| (1..np - 1).map(move |p| (p, q)))
            .map(|(p, q)| at(&samples.u, p, q)),
    );
    let p_left = min_over(&mut (1..nq).map(|q| at(&samples.u_x, 0, q)));
    let p_right = min_over(&mut (1..nq).map(|q| -at(&samples.u_x, np - 1, q)));
    let p_bed = min_over(&mut (1..np - 1).map(|p| at(&samples.u_y, p, 0)));
    let c_left = at(&samples.u_xy, 0, 0);
    let c_right = -at(&samples.u_xy, np - 1, 0);

    let top = grid.ny - 1;
    let mut stagnation = f64::INFINITY;
    let mut robin = f64::NAN;
    let mut robin_nodes = 0;
    for i in 0..grid.nx {
        let k = grid.idx(i, top);
        let g = d.x[k].hypot(d.y[k]);
        stagnation = stagnation.min(g);
        if g > 0.0 && d.y[k].abs() >= GRAPH_LIKE * g {
            let normal_u = (d.x[k] * d.xx[k] + d.y[k] * d.xy[k]) / g;
            let rho = (1.0 + d.x[k] * d.xy[k] + d.y[k] * d.yy[k]) / (d.y[k] * g);
            let r = (normal_u - rho * d.x[k]).abs();
            robin = if robin.is_nan() { r } else { robin.max(r) };
            robin_nodes += 1;
        }
    }
    let (bernoulli_sup, _) = {
        let profile = surface_bernoulli(d, grid, &f.eta, f.bernoulli);
        (profile.iter().fold(0.0, |a: f64, v| a.max(v.abs())), profile)
    };
    let slopes: Vec<f64> = (1..8 * (grid.nx - 1))
        .map(|i| {
            let x = 0.5 * f.period * i as f64 / (8 * (grid.nx - 1)) as f64;
            f.eta_at(x).1
        })
        .collect();
    let surface_monotone = slopes.iter().all(|&s| s < 0.0) || slopes.iter().all(|&s| s > 0.0);

    Ok(NodalReport {
        orientation: sign,
        property_i: PropertyCheck::from_margin(p_i, tol),
        property_ii_left: PropertyCheck::from_margin(p_left, tol),
        property_ii_right: PropertyCheck::from_margin(p_right, tol),
        property_ii_bed: PropertyCheck::from_margin(p_bed, tol),
        property_iii_left: PropertyCheck::from_margin(c_left, tol),
        property_iii_right: PropertyCheck::from_margin(c_right, tol),
        stagnation_margin: stagnation,
        bernoulli_sup,
        robin_sup: robin,
        robin_nodes,
        surface_monotone,
        scale,
    })
}

/// Sign properties of u = ±ψ_x at the grid nodes.
pub fn check_nodal(f: &WaveField, orientation: Orientation) -> Result<NodalReport, FieldError> {
    f.validate()?;
    let grid = f.grid();
    let d = f.derivs(&grid);
    let samples = node_samples(f, &grid, &d);
    assess(f, &grid, &d, samples, orientation)
}

/// Same properties evaluated at a different, uniform set of physical points
/// (x_p, s_q·H(x_p)) reached by interpolation.
pub fn check_nodal_physical(
    f: &WaveField,
    orientation: Orientation,
    np: usize,
    nq: usize,
) -> Result<NodalReport, FieldError> {
    f.validate()?;
    if np < 3 || nq < 3 {
        return Err(FieldError::InvalidField("resampling needs at least 3x3 points".into()));
    }
    let grid = f.grid();
    let d = f.derivs(&grid);
    let samples = resampled(f, &grid, &d, np, nq);
    assess(f, &grid, &d, samples, orientation)
}
