//! Fixed-step RK4 for scalar second-order ODEs and C² dense output.

use serde::{Deserialize, Serialize};

/// One classical RK4 step for `f'' = rhs(y, f, f')`.
#[inline]
pub fn rk4_step<F>(y: f64, f: f64, fp: f64, dy: f64, rhs: &F) -> (f64, f64)
where
    F: Fn(f64, f64, f64) -> f64,
{
    let k1f = fp;
    let k1p = rhs(y, f, fp);
    let k2f = fp + 0.5 * dy * k1p;
    let k2p = rhs(y + 0.5 * dy, f + 0.5 * dy * k1f, fp + 0.5 * dy * k1p);
    let k3f = fp + 0.5 * dy * k2p;
    let k3p = rhs(y + 0.5 * dy, f + 0.5 * dy * k2f, fp + 0.5 * dy * k2p);
    let k4f = fp + dy * k3p;
    let k4p = rhs(y + dy, f + dy * k3f, fp + dy * k3p);
    (
        f + dy / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f),
        fp + dy / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Integrates `steps` RK4 steps of signed size `dy` starting at `y0`.
///
/// Returns the states at the `steps + 1` nodes, or the location where the
/// solution stopped being finite.
pub fn integrate<F>(y0: f64, f0: f64, fp0: f64, dy: f64, steps: usize, rhs: &F) -> Result<Vec<(f64, f64)>, f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let mut out = Vec::with_capacity(steps + 1);
    let (mut f, mut fp) = (f0, fp0);
    out.push((f, fp));
    for i in 0..steps {
        let y = y0 + i as f64 * dy;
        let next = rk4_step(y, f, fp, dy, rhs);
        f = next.0;
        fp = next.1;
        if !f.is_finite() || !fp.is_finite() {
            return Err(y + dy);
        }
        out.push((f, fp));
    }
    Ok(out)
}

/// Sampled function on a uniform grid with values, first and second
/// derivatives; evaluated by piecewise quintic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Profile {
    pub fn new(start: f64, step: f64, values: Vec<f64>, first: Vec<f64>, second: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && values.len() == first.len() && values.len() == second.len());
        assert!(step > 0.0);
        Profile {
            start,
            step,
            values,
            first,
            second,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn contains(&self, y: f64) -> bool {
        let slack = 1e-12 * self.step;
        y >= self.start - slack && y <= self.end() + slack
    }

    /// Index of the node closest to `y`, if `y` is (numerically) a node.
    pub fn node_index(&self, y: f64) -> Option<usize> {
        let r = (y - self.start) / self.step;
        let i = r.round();
        if (r - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.values.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Value and first two derivatives at `y`; `y` is clamped to the domain.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let n = self.values.len();
        if let Some(i) = self.node_index(y) {
            return (self.values[i], self.first[i], self.second[i]);
        }
        let r = ((y - self.start) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (r.floor() as usize).min(n - 2);
        let t = r - i as f64;
        let d = self.step;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.first[i] * d, self.first[i + 1] * d);
        let (s0, s1) = (self.second[i] * d * d, self.second[i + 1] * d * d);

        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        // quintic Hermite basis and its derivatives in t
        let h = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        ];
        let dh = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        ];
        let ddh = [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
            3.0 * t - 12.0 * t2 + 10.0 * t3,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
        ];
        let c = [f0, d0, s0, s1, d1, f1];
        let dot = |b: &[f64; 6]| b.iter().zip(c.iter()).map(|(x, y)| x * y).sum::<f64>();
        (dot(&h), dot(&dh) / d, dot(&ddh) / (d * d))
    }
}
