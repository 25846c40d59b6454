//! Half-cell collocation grid: cosine/sine spectral nodes in X and a uniform
//! grid with 4th-order finite differences in the normalized vertical
//! coordinate s ∈ [0, 1].

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Finite-difference weights (Fornberg) for derivatives `0..=max_order` at
/// `x0` using the given nodes. `result[m][j]` multiplies `f(nodes[j])`.
pub fn fd_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Window of `width` consecutive indices in `0..n` centred on `center`.
fn window(center: usize, width: usize, n: usize) -> usize {
    let half = width / 2;
    center.saturating_sub(half).min(n - width)
}

/// Sparse row of a finite-difference operator.
#[derive(Debug, Clone)]
struct StencilRow {
    start: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CellGrid {
    pub nx: usize,
    pub ny: usize,
    /// Base wavenumber 2π/Λ of the computational period.
    pub tau: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    cos_inv: DMatrix<f64>,
    sin_inv: DMatrix<f64>,
    dx_even: DMatrix<f64>,
    dxx_even: DMatrix<f64>,
    dx_odd: DMatrix<f64>,
    ds1: Vec<StencilRow>,
    ds2: Vec<StencilRow>,
}

impl CellGrid {
    /// `nx` nodes X_i = iπ/((nx−1)τ) on the half period, `ny` nodes on [0,1].
    pub fn new(nx: usize, ny: usize, tau: f64) -> Self {
        assert!(nx >= 4 && ny >= 7, "grid too small");
        assert!(tau > 0.0 && tau.is_finite());
        let x: Vec<f64> = (0..nx).map(|i| i as f64 * PI / ((nx - 1) as f64 * tau)).collect();
        let s: Vec<f64> = (0..ny).map(|j| j as f64 / (ny - 1) as f64).collect();

        let kt = |k: usize| k as f64 * tau;
        let cos_m = DMatrix::from_fn(nx, nx, |i, k| (kt(k) * x[i]).cos());
        let cos_inv = cos_m.clone().try_inverse().expect("cosine collocation matrix");
        let dcos = DMatrix::from_fn(nx, nx, |i, k| -kt(k) * (kt(k) * x[i]).sin());
        let ddcos = DMatrix::from_fn(nx, nx, |i, k| -kt(k) * kt(k) * (kt(k) * x[i]).cos());
        let dx_even = &dcos * &cos_inv;
        let dxx_even = &ddcos * &cos_inv;

        let m = nx - 2;
        let sin_m = DMatrix::from_fn(m, m, |i, k| (kt(k + 1) * x[i + 1]).sin());
        let sin_inv = sin_m.try_inverse().expect("sine collocation matrix");
        let dsin = DMatrix::from_fn(nx, m, |i, k| kt(k + 1) * (kt(k + 1) * x[i]).cos());
        let interior = &dsin * &sin_inv;
        let mut dx_odd = DMatrix::zeros(nx, nx);
        for i in 0..nx {
            for k in 0..m {
                dx_odd[(i, k + 1)] = interior[(i, k)];
            }
        }

        let ds1 = (0..ny)
            .map(|j| {
                let start = window(j, 5, ny);
                let w = fd_weights(s[j], &s[start..start + 5], 1);
                StencilRow {
                    start,
                    weights: w[1].clone(),
                }
            })
            .collect();
        let ds2 = (0..ny)
            .map(|j| {
                // central 5-point in the interior, 6-point one-sided near the ends
                let width = if j >= 2 && j + 2 < ny { 5 } else { 6 };
                let start = window(j, width, ny);
                let w = fd_weights(s[j], &s[start..start + width], 2);
                StencilRow {
                    start,
                    weights: w[2].clone(),
                }
            })
            .collect();

        CellGrid {
            nx,
            ny,
            tau,
            x,
            s,
            cos_inv,
            sin_inv,
            dx_even,
            dxx_even,
            dx_odd,
            ds1,
            ds2,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn half_period(&self) -> f64 {
        PI / self.tau
    }

    fn apply_x(&self, m: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &f[j * nx..(j + 1) * nx];
            for i in 0..nx {
                let mut acc = 0.0;
                for k in 0..nx {
                    acc += m[(i, k)] * row[k];
                }
                out[j * nx + i] = acc;
            }
        }
        out
    }

    fn apply_s(&self, rows: &[StencilRow], f: &[f64]) -> Vec<f64> {
        let nx = self.nx;
        let mut out = vec![0.0; nx * self.ny];
        for (j, r) in rows.iter().enumerate() {
            for (l, w) in r.weights.iter().enumerate() {
                let src = &f[(r.start + l) * nx..(r.start + l + 1) * nx];
                let dst = &mut out[j * nx..(j + 1) * nx];
                for i in 0..nx {
                    dst[i] += w * src[i];
                }
            }
        }
        out
    }

    /// ∂_X of a field even in X.
    pub fn dx_even(&self, f: &[f64]) -> Vec<f64> {
        self.apply_x(&self.dx_even, f)
    }

    pub fn dxx_even(&self, f: &[f64]) -> Vec<f64> {
        self.apply_x(&self.dxx_even, f)
    }

    /// ∂_X of a field odd in X (its side values are ignored).
    pub fn dx_odd(&self, f: &[f64]) -> Vec<f64> {
        self.apply_x(&self.dx_odd, f)
    }

    pub fn ds(&self, f: &[f64]) -> Vec<f64> {
        self.apply_s(&self.ds1, f)
    }

    pub fn dss(&self, f: &[f64]) -> Vec<f64> {
        self.apply_s(&self.ds2, f)
    }

    /// First s-derivative of a single column at row `j`.
    pub fn ds_at(&self, column: &[f64], j: usize) -> f64 {
        let r = &self.ds1[j];
        r.weights.iter().enumerate().map(|(l, w)| w * column[r.start + l]).sum()
    }

    pub fn dss_at(&self, column: &[f64], j: usize) -> f64 {
        let r = &self.ds2[j];
        r.weights.iter().enumerate().map(|(l, w)| w * column[r.start + l]).sum()
    }

    /// Cosine coefficients c_k of nodal values of an even function.
    pub fn cosine_coefficients(&self, values: &[f64]) -> Vec<f64> {
        mat_vec(&self.cos_inv, values)
    }

    /// Sine coefficients b_k (k = 1..nx−2) from the interior values of an
    /// odd function.
    pub fn sine_coefficients(&self, values: &[f64]) -> Vec<f64> {
        mat_vec(&self.sin_inv, &values[1..self.nx - 1])
    }

    /// Weights (value, first, second derivative) for interpolation in s.
    pub fn s_weights(&self, s: f64) -> (usize, Vec<Vec<f64>>) {
        let width = 6;
        let pos = (s.clamp(0.0, 1.0) * (self.ny - 1) as f64).round() as usize;
        let start = window(pos, width, self.ny);
        (start, fd_weights(s, &self.s[start..start + width], 2))
    }
}

/// Evaluate Σ c_k cos(kτX) and its first two X-derivatives.
pub fn eval_cosine(coeffs: &[f64], tau: f64, x: f64) -> (f64, f64, f64) {
    let mut f = 0.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let w = k as f64 * tau;
        let (sn, cs) = (w * x).sin_cos();
        f += c * cs;
        d -= c * w * sn;
        dd -= c * w * w * cs;
    }
    (f, d, dd)
}

/// Evaluate Σ b_k sin(kτX) (k starting at 1) and its first two X-derivatives.
pub fn eval_sine(coeffs: &[f64], tau: f64, x: f64) -> (f64, f64, f64) {
    let mut f = 0.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    for (k, b) in coeffs.iter().enumerate() {
        let w = (k + 1) as f64 * tau;
        let (sn, cs) = (w * x).sin_cos();
        f += b * sn;
        d += b * w * cs;
        dd -= b * w * w * sn;
    }
    (f, d, dd)
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)] * v[k]).sum())
        .collect()
}
