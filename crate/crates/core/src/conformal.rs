//! Periodic Hilbert transform on a strip and the conformal map from the
//! strip −h < Y < 0 onto a fluid domain whose surface may overhang.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const DEFAULT_MODES: usize = 128;
/// Floor on |∇V| below which a map is rejected.
pub const GRADIENT_FLOOR: f64 = 1e-8;
/// Distance below which two non-adjacent arcs are said to intersect.
pub const INTERSECTION_TOL: f64 = 1e-8;
pub const POLYLINE_SEGMENTS: usize = 1024;
const ADJACENCY_WINDOW: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConformalError {
    #[error("function has nonzero mean {mean}")]
    NonzeroMean { mean: f64 },
    #[error("degenerate map: min |grad V| = {min_gradient} at ({x}, {y})")]
    DegenerateMap { min_gradient: f64, x: f64, y: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("depth iteration did not converge: {0}")]
    NoConvergence(String),
}

/// Real Λ-periodic function Σ û_k e^{ikτX}, τ = 2π/Λ. The mean û_0 is
/// stored apart; `modes[k-1]` is û_k for k ≥ 1 and û_{−k} is its conjugate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFunction {
    pub period: f64,
    pub mean: f64,
    pub modes: Vec<Complex64>,
}

impl PeriodicFunction {
    pub fn zero(period: f64, modes: usize) -> Self {
        PeriodicFunction {
            period,
            mean: 0.0,
            modes: vec![Complex64::new(0.0, 0.0); modes],
        }
    }

    /// Σ a_k cos(kτX), `a[0]` being the mean.
    pub fn from_cosine(period: f64, a: &[f64]) -> Self {
        PeriodicFunction {
            period,
            mean: a.first().copied().unwrap_or(0.0),
            modes: a.iter().skip(1).map(|&c| Complex64::new(0.5 * c, 0.0)).collect(),
        }
    }

    /// Σ b_k sin(kτX), `b[0]` multiplying sin(τX).
    pub fn from_sine(period: f64, b: &[f64]) -> Self {
        PeriodicFunction {
            period,
            mean: 0.0,
            modes: b.iter().map(|&c| Complex64::new(0.0, -0.5 * c)).collect(),
        }
    }

    /// Interpolant of `values` at X_j = jΛ/N, truncated to `max_modes`
    /// (the Nyquist mode is dropped).
    pub fn from_samples(period: f64, values: &[f64], max_modes: usize) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let keep = max_modes.min((n - 1) / 2);
        PeriodicFunction {
            period,
            mean: buf[0].re / n as f64,
            modes: (1..=keep).map(|k| buf[k] / n as f64).collect(),
        }
    }

    pub fn tau(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn scale(&self) -> f64 {
        self.modes.iter().fold(self.mean.abs(), |a, c| a.max(c.norm())).max(1.0)
    }

    /// Real coefficients (modes real to roundoff).
    pub fn is_even(&self) -> bool {
        let tol = 1e-14 * self.scale();
        self.modes.iter().all(|c| c.im.abs() <= tol)
    }

    pub fn is_odd(&self) -> bool {
        let tol = 1e-14 * self.scale();
        self.mean.abs() <= tol && self.modes.iter().all(|c| c.re.abs() <= tol)
    }

    /// (u, u′, u″) at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let tau = self.tau();
        let mut out = (self.mean, 0.0, 0.0);
        for (i, c) in self.modes.iter().enumerate() {
            let k = (i + 1) as f64 * tau;
            let e = Complex64::from_polar(1.0, k * x) * c;
            out.0 += 2.0 * e.re;
            out.1 += 2.0 * (e * Complex64::new(0.0, k)).re;
            out.2 -= 2.0 * k * k * e.re;
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let tau = self.tau();
        PeriodicFunction {
            period: self.period,
            mean: 0.0,
            modes: self
                .modes
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, (i + 1) as f64 * tau))
                .collect(),
        }
    }

    /// Period average of u·v.
    pub fn inner(&self, other: &Self) -> f64 {
        self.mean * other.mean
            + 2.0
                * self
                    .modes
                    .iter()
                    .zip(&other.modes)
                    .map(|(a, b)| (a * b.conj()).re)
                    .sum::<f64>()
    }

    /// Σ_{k≠0} |û_k|².
    pub fn energy(&self) -> f64 {
        2.0 * self.modes.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Multiplies mode k by −i·coth(kτh); requires zero mean.
    pub fn hilbert(&self, h: f64) -> Result<Self, ConformalError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ConformalError::InvalidInput(format!("depth must be positive, got {h}")));
        }
        if self.mean.abs() > 1e-12 * self.scale() {
            return Err(ConformalError::NonzeroMean { mean: self.mean });
        }
        let tau = self.tau();
        Ok(PeriodicFunction {
            period: self.period,
            mean: 0.0,
            modes: self
                .modes
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, -1.0 / ((i + 1) as f64 * tau * h).tanh()))
                .collect(),
        })
    }
}

pub fn periodic_hilbert(u: &PeriodicFunction, h: f64) -> Result<PeriodicFunction, ConformalError> {
    u.hilbert(h)
}

/// sinh(k(Y+h))/sinh(kh) and cosh(k(Y+h))/sinh(kh) for −h ≤ Y ≤ 0, k > 0,
/// in overflow-free form.
fn vertical_factors(k: f64, y: f64, h: f64) -> (f64, f64) {
    let top = (k * y).exp();
    let a = (-2.0 * k * (y + h)).exp();
    let b = 1.0 - (-2.0 * k * h).exp();
    (top * (1.0 - a) / b, top * (1.0 + a) / b)
}

/// Harmonic pair H = U + iV on the strip −h < Y < 0 with V = 0 on the bed,
/// V = w + h on Y = 0 and U(X + Λ, Y) = U(X, Y) + Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalMap {
    pub h: f64,
    pub w: PeriodicFunction,
}

/// U, V and their first and second partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MapDerivs {
    pub u: f64,
    pub v: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_xx: f64,
    pub v_yy: f64,
    pub u_xx: f64,
    pub u_yy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientFloor {
    pub min_gradient: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    /// Smallest distance between non-adjacent arcs; +∞ when no pair of
    /// arcs comes closer than half its separation along the curve.
    pub min_distance: f64,
    pub intersects: bool,
    /// Closest point on the first arc of the minimising pair.
    pub location: Option<(f64, f64)>,
    /// Segment indices of the minimising pair.
    pub segments: Option<(usize, usize)>,
}

pub fn build_conformal_map(w: &PeriodicFunction, h: f64) -> Result<ConformalMap, ConformalError> {
    let map = conformal_map_unchecked(w, h)?;
    let floor = map.gradient_floor();
    if floor.min_gradient < GRADIENT_FLOOR {
        return Err(ConformalError::DegenerateMap {
            min_gradient: floor.min_gradient,
            x: floor.x,
            y: floor.y,
        });
    }
    Ok(map)
}

/// Map without the |∇V| floor check; for diagnostics on degenerate traces.
pub fn conformal_map_unchecked(w: &PeriodicFunction, h: f64) -> Result<ConformalMap, ConformalError> {
    w.hilbert(h)?;
    if !(w.period > 0.0 && w.period.is_finite()) {
        return Err(ConformalError::InvalidInput(format!(
            "period must be positive, got {}",
            w.period
        )));
    }
    Ok(ConformalMap { h, w: w.clone() })
}

impl ConformalMap {
    pub fn derivs(&self, x: f64, y: f64) -> MapDerivs {
        let h = self.h;
        let tau = self.w.tau();
        let mut d = MapDerivs {
            u: x,
            v: y + h,
            u_x: 1.0,
            v_y: 1.0,
            ..MapDerivs::default()
        };
        for (i, c) in self.w.modes.iter().enumerate() {
            let k = (i + 1) as f64 * tau;
            let (sh, ch) = vertical_factors(k, y, h);
            let e = Complex64::from_polar(1.0, k * x) * c;
            let ie = e * Complex64::new(0.0, 1.0);
            // V_k = 2Re(e)·sh, U_k = 2Re(−i e)·ch
            d.v += 2.0 * e.re * sh;
            d.v_x += 2.0 * k * ie.re * sh;
            d.v_y += 2.0 * k * e.re * ch;
            d.v_xx -= 2.0 * k * k * e.re * sh;
            d.v_yy += 2.0 * k * k * e.re * sh;
            d.u += 2.0 * (-ie).re * ch;
            d.u_x += 2.0 * k * e.re * ch;
            d.u_y += 2.0 * k * (-ie).re * sh;
            d.u_xx += 2.0 * k * k * ie.re * ch;
            d.u_yy -= 2.0 * k * k * ie.re * ch;
        }
        d
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        self.derivs(x, y).u
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        self.derivs(x, y).v
    }

    /// H′(z) = U_X + iV_X and H″(z).
    fn h_prime(&self, x: f64, y: f64) -> (Complex64, Complex64) {
        let d = self.derivs(x, y);
        (Complex64::new(d.u_x, d.v_x), Complex64::new(d.u_xx, d.v_xx))
    }

    /// min |∇V| over the closed strip: grid scan, then Newton on H′ from
    /// the best grid point (interior zeros of H′ are the only interior minima).
    pub fn gradient_floor(&self) -> GradientFloor {
        let (nx, ny) = (256, 65);
        let lp = self.w.period;
        let mut best = GradientFloor {
            min_gradient: f64::INFINITY,
            x: 0.0,
            y: 0.0,
        };
        for i in 0..nx {
            let x = lp * i as f64 / nx as f64;
            for j in 0..ny {
                let y = -self.h * j as f64 / (ny - 1) as f64;
                let g = self.h_prime(x, y).0.norm();
                if g < best.min_gradient {
                    best = GradientFloor { min_gradient: g, x, y };
                }
            }
        }
        let mut z = Complex64::new(best.x, best.y);
        for _ in 0..50 {
            let (hp, hpp) = self.h_prime(z.re, z.im);
            if hpp.norm() == 0.0 {
                break;
            }
            let next = z - hp / hpp;
            let next = Complex64::new(next.re, next.im.clamp(-self.h, 0.0));
            if (next - z).norm() <= 1e-15 * lp {
                z = next;
                break;
            }
            z = next;
        }
        let g = self.h_prime(z.re, z.im).0.norm();
        if g < best.min_gradient {
            best = GradientFloor {
                min_gradient: g,
                x: z.re.rem_euclid(lp),
                y: z.im,
            };
        }
        best
    }

    /// Surface point (X + C_h w(X), w(X) + h).
    pub fn surface(&self, x: f64) -> (f64, f64) {
        let d = self.derivs(x, 0.0);
        (d.u, d.v)
    }

    /// (U_X, V_X) on Y = 0.
    pub fn surface_tangent(&self, x: f64) -> (f64, f64) {
        let d = self.derivs(x, 0.0);
        (d.u_x, d.v_x)
    }

    /// Surface samples (X, x, y) over one period.
    pub fn surface_polyline(&self, n: usize) -> Vec<(f64, f64, f64)> {
        (0..=n)
            .map(|i| {
                let s = self.w.period * i as f64 / n as f64;
                let (x, y) = self.surface(s);
                (s, x, y)
            })
            .collect()
    }
}

/// Period-average height h + ⟨w, C_h w′⟩ of the physical domain.
pub fn mean_height(w: &PeriodicFunction, h: f64) -> Result<f64, ConformalError> {
    let cw = w.derivative().hilbert(h)?;
    Ok(h + w.inner(&cw))
}

/// Conformal depth h with mean height `target`, by secant iteration.
pub fn conformal_depth(w: &PeriodicFunction, target: f64) -> Result<f64, ConformalError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(ConformalError::InvalidInput(format!(
            "target height must be positive, got {target}"
        )));
    }
    let f = |h: f64| mean_height(w, h).map(|m| m - target);
    let mut a = target;
    let mut b = 1.1 * target;
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..100 {
        if fb.abs() <= 1e-13 * target {
            return Ok(b);
        }
        if fb == fa {
            break;
        }
        let next = b - fb * (b - a) / (fb - fa);
        let next = if next <= 0.0 { 0.5 * b } else { next };
        a = b;
        fa = fb;
        b = next;
        fb = f(b)?;
    }
    Err(ConformalError::NoConvergence(format!("last depth {b}, residual {fb}")))
}

fn segment_distance(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> (f64, (f64, f64)) {
    let sub = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0, a.1 - b.1);
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let dot = |a: (f64, f64), b: (f64, f64)| a.0 * b.0 + a.1 * b.1;
    let r = sub(p2, p1);
    let s = sub(q2, q1);
    let denom = cross(r, s);
    if denom != 0.0 {
        let qp = sub(q1, p1);
        let t = cross(qp, s) / denom;
        let u = cross(qp, r) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return (0.0, (p1.0 + t * r.0, p1.1 + t * r.1));
        }
    }
    let point_seg = |p: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        let ab = sub(b, a);
        let len2 = dot(ab, ab);
        let t = if len2 > 0.0 {
            (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = (a.0 + t * ab.0, a.1 + t * ab.1);
        (dot(sub(p, c), sub(p, c)).sqrt(), c)
    };
    [
        (point_seg(p1, q1, q2).0, p1),
        (point_seg(p2, q1, q2).0, p2),
        point_seg(q1, p1, p2),
        point_seg(q2, p1, p2),
    ]
    .into_iter()
    .fold((f64::INFINITY, p1), |a, b| if b.0 < a.0 { b } else { a })
}

/// Self-intersection test for an open polyline. Segments within the
/// adjacency window are skipped, and a pair only counts when its distance
/// is below half its separation along the curve.
pub fn polyline_self_intersection(points: &[(f64, f64)]) -> IntersectionReport {
    let n = points.len().saturating_sub(1);
    let len: Vec<f64> = (0..n)
        .map(|i| ((points[i + 1].0 - points[i].0).powi(2) + (points[i + 1].1 - points[i].1).powi(2)).sqrt())
        .collect();
    let mut arc = vec![0.0; n + 1];
    for i in 0..n {
        arc[i + 1] = arc[i] + len[i];
    }
    let mut report = IntersectionReport {
        min_distance: f64::INFINITY,
        intersects: false,
        location: None,
        segments: None,
    };
    for i in 0..n {
        for j in (i + ADJACENCY_WINDOW + 1)..n {
            let along = arc[j] - arc[i + 1];
            let (d, at) = segment_distance(points[i], points[i + 1], points[j], points[j + 1]);
            if d < 0.5 * along && d < report.min_distance {
                report.min_distance = d;
                report.location = Some(at);
                report.segments = Some((i, j));
            }
        }
    }
    report.intersects = report.min_distance < INTERSECTION_TOL;
    report
}

/// Self-intersection of the surface X ↦ (X + C_h w, w + h) sampled with
/// 1024 segments per period and a quarter period of guard on each side.
pub fn trace_self_intersection(w: &PeriodicFunction, h: f64) -> Result<IntersectionReport, ConformalError> {
    let map = conformal_map_unchecked(w, h)?;
    let per = POLYLINE_SEGMENTS;
    let guard = per / 4;
    let lp = w.period;
    let points: Vec<(f64, f64)> = (0..=per + 2 * guard)
        .map(|i| map.surface(lp * (i as f64 - guard as f64) / per as f64))
        .collect();
    Ok(polyline_self_intersection(&points))
}

pub fn surface_self_intersection(map: &ConformalMap) -> IntersectionReport {
    trace_self_intersection(&map.w, map.h).expect("map already validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU: f64 = 1.3;

    fn period() -> f64 {
        2.0 * PI / TAU
    }

    #[test]
    fn hilbert_of_cosine_and_sine() {
        let h = 0.8;
        let c = PeriodicFunction::from_cosine(period(), &[0.0, 1.0]);
        let hc = c.hilbert(h).unwrap();
        let coth = 1.0 / (TAU * h).tanh();
        for i in 0..20 {
            let x = 0.31 * i as f64;
            assert!((hc.eval(x).0 - coth * (TAU * x).sin()).abs() <= 1e-14);
        }
        let s = PeriodicFunction::from_sine(period(), &[0.0, 0.0, 1.0]);
        let hs = s.hilbert(h).unwrap();
        let coth3 = 1.0 / (3.0 * TAU * h).tanh();
        for i in 0..20 {
            let x = 0.31 * i as f64;
            assert!((hs.eval(x).0 + coth3 * (3.0 * TAU * x).cos()).abs() <= 1e-14);
        }
        assert!(c.is_even() && hc.is_odd());
    }

    #[test]
    fn hilbert_rejects_nonzero_mean() {
        let one = PeriodicFunction::from_cosine(period(), &[1.0]);
        assert!(matches!(one.hilbert(1.0), Err(ConformalError::NonzeroMean { .. })));
    }

    #[test]
    fn samples_roundtrip_through_fft() {
        let lp = period();
        let n = 64;
        let f = |x: f64| 0.3 * (TAU * x).cos() - 0.2 * (2.0 * TAU * x).sin() + 0.05 * (5.0 * TAU * x).cos();
        let values: Vec<f64> = (0..n).map(|j| f(lp * j as f64 / n as f64)).collect();
        let p = PeriodicFunction::from_samples(lp, &values, DEFAULT_MODES);
        assert!(p.mean.abs() <= 1e-15);
        for i in 0..30 {
            let x = 0.17 * i as f64;
            assert!((p.eval(x).0 - f(x)).abs() <= 1e-14);
        }
    }

    proptest! {
        #[test]
        fn hilbert_is_exact_per_mode_and_preserves_weighted_energy(
            re in proptest::collection::vec(-1.0f64..1.0, 1..8),
            im in proptest::collection::vec(-1.0f64..1.0, 8),
            h in 0.2f64..3.0,
        ) {
            let modes: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let u = PeriodicFunction { period: period(), mean: 0.0, modes };
            let hu = u.hilbert(h).unwrap();
            let hhu = hu.hilbert(h).unwrap();
            let mut weighted = 0.0;
            for (k, c) in u.modes.iter().enumerate() {
                let coth = 1.0 / ((k + 1) as f64 * TAU * h).tanh();
                prop_assert!((hhu.modes[k] + c * coth * coth).norm() <= 1e-12 * c.norm().max(1.0));
                weighted += 2.0 * coth * coth * c.norm_sqr();
            }
            prop_assert!((hu.energy() - weighted).abs() <= 1e-12 * weighted.max(1.0));
        }
    }

    #[test]
    fn flat_trace_gives_identity_strip() {
        let m = build_conformal_map(&PeriodicFunction::zero(period(), 4), 1.0).unwrap();
        for &(x, y) in &[(0.0, 0.0), (1.2, -0.4), (3.3, -1.0)] {
            assert_eq!(m.u(x, y), x);
            assert_eq!(m.v(x, y), y + 1.0);
        }
        let r = surface_self_intersection(&m);
        assert!(r.min_distance.is_infinite() && !r.intersects);
    }

    #[test]
    fn single_mode_map_matches_closed_form() {
        let (h, a) = (1.0, 0.2);
        let w = PeriodicFunction::from_cosine(period(), &[0.0, a]);
        let m = build_conformal_map(&w, h).unwrap();
        for i in 0..10 {
            for j in 0..=5 {
                let x = 0.53 * i as f64;
                let y = -h * j as f64 / 5.0;
                let den = (TAU * h).sinh();
                let v = (y + h) + a * (TAU * x).cos() * (TAU * (y + h)).sinh() / den;
                let u = x + a * (TAU * x).sin() * (TAU * (y + h)).cosh() / den;
                assert!((m.v(x, y) - v).abs() <= 1e-14);
                assert!((m.u(x, y) - u).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn cauchy_riemann_harmonicity_and_periodicity() {
        let w = PeriodicFunction::from_cosine(period(), &[0.0, 0.15, -0.04, 0.01]);
        let m = build_conformal_map(&w, 0.9).unwrap();
        for i in 0..16 {
            for j in 0..=8 {
                let x = period() * i as f64 / 16.0;
                let y = -0.9 * j as f64 / 8.0;
                let d = m.derivs(x, y);
                assert!((d.u_x - d.v_y).abs() <= 1e-10);
                assert!((d.u_y + d.v_x).abs() <= 1e-10);
                assert!((d.v_xx + d.v_yy).abs() <= 1e-10);
                assert!((m.u(x + period(), y) - d.u - period()).abs() <= 1e-12);
                assert!((m.v(x + period(), y) - d.v).abs() <= 1e-12);
            }
            let x = period() * i as f64 / 16.0;
            assert!(m.v(x, -0.9).abs() <= 1e-14);
            assert!((m.v(x, 0.0) - w.eval(x).0 - 0.9).abs() <= 1e-14);
        }
        // analytic derivatives against central differences
        let (x, y, e) = (0.7, -0.3, 1e-6);
        let d = m.derivs(x, y);
        assert!(((m.v(x + e, y) - m.v(x - e, y)) / (2.0 * e) - d.v_x).abs() <= 1e-8);
        assert!(((m.u(x, y + e) - m.u(x, y - e)) / (2.0 * e) - d.u_y).abs() <= 1e-8);
    }

    #[test]
    fn surface_tangent_is_parallel_to_trace_formula() {
        let h = 1.0;
        let w = PeriodicFunction::from_cosine(period(), &[0.0, 0.2, 0.05]);
        let m = build_conformal_map(&w, h).unwrap();
        let cwp = w.derivative().hilbert(h).unwrap();
        for i in 0..40 {
            let x = period() * i as f64 / 40.0;
            let d = m.derivs(x, 0.0);
            // tangent built from ∇V: (V_Y, V_X)
            let from_grad = (d.v_y, d.v_x);
            let formula = (1.0 + cwp.eval(x).0, w.eval(x).1);
            let cross = from_grad.0 * formula.1 - from_grad.1 * formula.0;
            assert!(cross.abs() <= 1e-8);
            let t = m.surface_tangent(x);
            assert!((t.0 - formula.0).abs() <= 1e-12 && (t.1 - formula.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn degenerate_map_at_critical_amplitude() {
        let h = 1.0;
        let a_crit = (TAU * h).tanh() / TAU;
        let ok = PeriodicFunction::from_cosine(period(), &[0.0, 0.9 * a_crit]);
        assert!(build_conformal_map(&ok, h).is_ok());
        let mut a = 0.9 * a_crit;
        let tripped = loop {
            a += 0.01 * a_crit;
            let w = PeriodicFunction::from_cosine(period(), &[0.0, a]);
            if let Err(ConformalError::DegenerateMap { min_gradient, x, y }) = build_conformal_map(&w, h) {
                assert!(min_gradient < GRADIENT_FLOOR);
                assert!((x - 0.5 * period()).abs() < 1e-6);
                assert!(y <= 0.0 && y >= -h);
                break a;
            }
            assert!(a < 2.0 * a_crit);
        };
        assert!((tripped - a_crit).abs() <= 0.011 * a_crit);
        let floor = conformal_map_unchecked(&PeriodicFunction::from_cosine(period(), &[0.0, 0.5 * a_crit]), h)
            .unwrap()
            .gradient_floor();
        assert!((floor.min_gradient - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn graph_like_surface_does_not_intersect() {
        let w = PeriodicFunction::from_cosine(period(), &[0.0, 0.1]);
        let r = trace_self_intersection(&w, 1.0).unwrap();
        assert!(!r.intersects);
        assert!(r.min_distance.is_infinite());
    }

    #[test]
    fn looping_trace_intersects_at_predicted_point() {
        // X + b sin X, a cos X crosses itself on x = π where X + b sin X = π
        let (a, b) = (1.0, 3.0);
        let pts: Vec<(f64, f64)> = (0..=1024)
            .map(|i| {
                let s = 2.0 * PI * i as f64 / 1024.0;
                (s + b * s.sin(), a * s.cos())
            })
            .collect();
        let r = polyline_self_intersection(&pts);
        assert!(r.intersects);
        let (x, y) = r.location.unwrap();
        let mut lo = 0.1f64;
        let mut hi = 0.5 * PI;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid + b * mid.sin() < PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((x - PI).abs() < 1e-3);
        assert!((y - lo.cos()).abs() < 1e-3);

        // an overhanging trace w = a cos with a·coth(τh) > 1/τ loops as well
        let w = PeriodicFunction::from_cosine(period(), &[0.0, 3.0 / TAU]);
        assert!(trace_self_intersection(&w, 1.0).unwrap().intersects);
    }

    #[test]
    fn conformal_depth_hits_target_mean_height() {
        let w = PeriodicFunction::from_cosine(period(), &[0.0, 0.2, 0.03]);
        let h = conformal_depth(&w, 1.0).unwrap();
        assert!((mean_height(&w, h).unwrap() - 1.0).abs() <= 1e-12);
        assert!(h < 1.0);
        let flat = PeriodicFunction::zero(period(), 3);
        assert!((conformal_depth(&flat, 0.7).unwrap() - 0.7).abs() <= 1e-14);
    }
}
