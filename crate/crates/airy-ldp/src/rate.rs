//! The lower-tail rate function, its variational characterization, the
//! optimal control, and the Girsanov tilt profile built from it.
//!
//! The closed form
//! `Φ(z) = (4/15π⁶)(1-π²z)^{5/2} - 4/15π⁶ + (2/3π⁴)z - (1/2π²)z²`
//! interpolates between a cubic law `|z|³/12` near zero and a 5/2-power
//! law `(4/15π)|z|^{5/2}` at large `|z|`. It equals the minimum of the
//! control functional
//! `∫ (2L/3π)((ζ-x-(2/√β)v)₊)^{3/2} + ½v² dx`
//! after the parameter scaling of the scaled rate, with the minimizer
//! `v_*` available in closed form; the independent cell-wise minimizer
//! here recovers it numerically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::brownian::DriftProfile;
use crate::error::{Error, Result};

/// Fixed model parameters `(β, L, ζ)`, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub l: f64,
    pub zeta: f64,
}

impl ModelParams {
    pub fn new(beta: f64, l: f64, zeta: f64) -> Result<Self> {
        if !(beta > 0.0 && l > 0.0 && zeta > 0.0) {
            return Err(Error::Config(format!(
                "parameters must be strictly positive: beta={beta}, L={l}, zeta={zeta}"
            )));
        }
        Ok(Self { beta, l, zeta })
    }
}

/// Piecewise-constant control: `values[i]` on `(grid[i], grid[i+1]]`,
/// zero beyond the last grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Control {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || values.len() != grid.len() - 1 {
            return Err(Error::Config(format!(
                "control needs grid.len()-1 values, got {} for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if grid[0] != 0.0 || !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("control grid must increase from 0".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Control value at `x` (zero outside the grid).
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= 0.0 || x > self.x_max() {
            return 0.0;
        }
        let k = self.grid.partition_point(|&g| g < x);
        self.values[k - 1]
    }

    /// Sample a function as a piecewise-constant control on `n` equal
    /// cells over `[0, x_max]`, using cell midpoints.
    pub fn from_fn(x_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || !(x_max > 0.0) {
            return Err(Error::Config("control needs at least one cell".into()));
        }
        let dx = x_max / n as f64;
        let grid = (0..=n).map(|i| i as f64 * dx).collect();
        let values = (0..n).map(|i| f((i as f64 + 0.5) * dx)).collect();
        Self::new(grid, values)
    }
}

const PHI_SERIES_CUTOFF: f64 = 1e-4;

/// Rate function `Φ(z)` for `z ≤ 0`.
///
/// The four terms cancel to third order at zero, so for `|z| < 1e-4` the
/// value comes from the series `-z³/12 - π²z⁴/96 - π⁴z⁵/320 - π⁶z⁶/768`
/// instead of the catastrophically cancelling closed form.
pub fn phi(z: f64) -> Result<f64> {
    if z > 0.0 {
        return Err(Error::Config(format!("rate function needs z ≤ 0, got {z}")));
    }
    Ok(phi_unchecked(z))
}

fn phi_unchecked(z: f64) -> f64 {
    if z.abs() < PHI_SERIES_CUTOFF {
        let z3 = z * z * z;
        let p2 = PI * PI;
        return -z3 / 12.0 * (1.0 + p2 * z * (1.0 / 8.0 + p2 * z * (3.0 / 80.0 + p2 * z / 64.0)));
    }
    let a = 4.0 / (15.0 * PI.powi(6));
    a * (1.0 - PI * PI * z).powf(2.5) - a + 2.0 / (3.0 * PI.powi(4)) * z
        - z * z / (2.0 * PI * PI)
}

/// Scaled rate `L (2L/β)⁵ Φ(-(β/2L)² ζ)` — the magnitude of the limit;
/// callers negate.
pub fn scaled_rate(params: &ModelParams) -> f64 {
    let ratio = params.beta / (2.0 * params.l);
    params.l * ratio.powi(-5) * phi_unchecked(-(ratio * ratio) * params.zeta)
}

/// Optimal control `v_*(x) = 4L²π⁻²β^{-3/2}(-1 + √(1 + (πβ/2L)²(ζ-x)₊))`;
/// zero for `x ≥ ζ`.
pub fn v_star(x: f64, params: &ModelParams) -> f64 {
    let (beta, l, zeta) = (params.beta, params.l, params.zeta);
    let excess = (zeta - x).max(0.0);
    if excess == 0.0 {
        return 0.0;
    }
    let p = PI * beta / (2.0 * l);
    4.0 * l * l / (PI * PI * beta.powf(1.5)) * ((1.0 + p * p * excess).sqrt() - 1.0)
}

/// Exact integral of `((ζ - c - x)₊)^{3/2}` over `[xl, xr]`:
/// `(2/5)[((ζ-c-xl)₊)^{5/2} - ((ζ-c-xr)₊)^{5/2}]`. The kink of the
/// positive part is absorbed by the antiderivative, so each control cell
/// integrates exactly.
fn kink_integral(zeta_minus_c: f64, xl: f64, xr: f64) -> f64 {
    let al = (zeta_minus_c - xl).max(0.0);
    let ar = (zeta_minus_c - xr).max(0.0);
    0.4 * (al.powf(2.5) - ar.powf(2.5))
}

/// Control objective
/// `∫₀^∞ (2L/3π)((ζ-x-(2/√β)v(x))₊)^{3/2} + ½v²(x) dx` for a
/// piecewise-constant `v` (zero beyond its grid). Each cell is integrated
/// in closed form. The control grid must cover `[0, ζ]`.
pub fn objective(control: &Control, params: &ModelParams) -> Result<f64> {
    if control.x_max() < params.zeta * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "control grid ends at {} but must cover [0, {}]",
            control.x_max(),
            params.zeta
        )));
    }
    let k = 2.0 * params.l / (3.0 * PI);
    let c = 2.0 / params.beta.sqrt();
    let mut total = 0.0;
    for (i, &v) in control.values().iter().enumerate() {
        let (xl, xr) = (control.grid()[i], control.grid()[i + 1]);
        total += k * kink_integral(params.zeta - c * v, xl, xr);
        total += 0.5 * v * v * (xr - xl);
    }
    // v = 0 beyond the grid
    total += k * kink_integral(params.zeta, control.x_max(), f64::INFINITY);
    Ok(total)
}

/// Objective restricted to one cell as a function of that cell's value.
fn cell_objective(v: f64, xl: f64, xr: f64, params: &ModelParams) -> f64 {
    let k = 2.0 * params.l / (3.0 * PI);
    let c = 2.0 / params.beta.sqrt();
    k * kink_integral(params.zeta - c * v, xl, xr) + 0.5 * v * v * (xr - xl)
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force recovery of the optimal control by projected cell-wise
/// descent from `v ≡ 0` on a `grid_size`-cell grid over `[0, ζ]`.
///
/// The objective decouples across cells for piecewise-constant controls,
/// so one golden-section pass per cell solves each scalar problem; passes
/// repeat until the objective decrease drops below 1e-10.
pub fn minimize_objective(params: &ModelParams, grid_size: usize) -> Result<Control> {
    if grid_size < 100 {
        return Err(Error::Config(format!(
            "minimizer grid needs at least 100 cells, got {grid_size}"
        )));
    }
    let cap = 2.0 * v_star(0.0, params);
    let mut control = Control::from_fn(params.zeta, grid_size, |_| 0.0)?;
    let mut prev = objective(&control, params)?;
    for _pass in 0..100 {
        for i in 0..grid_size {
            let (xl, xr) = (control.grid()[i], control.grid()[i + 1]);
            let best = golden_min(0.0, cap, 1e-12 * cap.max(1.0), |v| {
                cell_objective(v, xl, xr, params)
            });
            control.values[i] = best;
        }
        let cur = objective(&control, params)?;
        if prev - cur < 1e-10 {
            return Ok(control);
        }
        prev = cur;
    }
    // estimate the remaining gradient for the report
    let mut grad_norm: f64 = 0.0;
    for i in 0..grid_size {
        let (xl, xr) = (control.grid()[i], control.grid()[i + 1]);
        let v = control.values[i];
        let d = 1e-7 * cap.max(1.0);
        let g = (cell_objective(v + d, xl, xr, params) - cell_objective((v - d).max(0.0), xl, xr, params))
            / (2.0 * d);
        grad_norm = grad_norm.max(g.abs());
    }
    Err(Error::NoConvergence(format!(
        "cell descent still improving after 100 passes (gradient norm {grad_norm:.3e})"
    )))
}

/// Girsanov tilt profile: partition `x_i = i t^α` up to
/// `i_* = ⌈ζ t^{2/3-α}⌉ + 1`, with level `V_i = t^{2/3} v_*(t^{-2/3} x_{i-1})`
/// on each cell. Requires `α ∈ (-1/3, 2/3)`.
pub fn tilt_profile(t: f64, alpha: f64, params: &ModelParams) -> Result<DriftProfile> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("t must be positive, got {t}")));
    }
    if !(-1.0 / 3.0 < alpha && alpha < 2.0 / 3.0) {
        return Err(Error::Config(format!(
            "alpha = {alpha} outside (-1/3, 2/3)"
        )));
    }
    let width = t.powf(alpha);
    let i_star = (params.zeta * t.powf(2.0 / 3.0 - alpha)).ceil() as usize + 1;
    let t23 = t.powf(2.0 / 3.0);
    let breakpoints: Vec<f64> = (0..=i_star).map(|i| i as f64 * width).collect();
    let levels: Vec<f64> = (1..=i_star)
        .map(|i| t23 * v_star(breakpoints[i - 1] / t23, params))
        .collect();
    DriftProfile::new(breakpoints, levels)
}

/// The scalar Gaussian reduction behind the per-interval bound: the
/// function `F(y) = (2L/3π) t^{1/3+α} ((t^{2/3}ζ - x_i - (2/√β) t^{-α/2} y)₊)^{3/2} + ½y²`
/// with its analytic minimizer `y_* = t^{2/3+α/2} v_*(t^{-2/3} x_i)`.
/// `F'' ≥ 1` away from the kink and `F` is C¹ there, so
/// `F(y) ≥ F(y_*) + ½(y - y_*)²`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianReduction {
    params: ModelParams,
    t: f64,
    alpha: f64,
    x_i: f64,
}

impl GaussianReduction {
    pub fn new(params: ModelParams, t: f64, alpha: f64, x_i: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Config(format!("t must be positive, got {t}")));
        }
        Ok(Self { params, t, alpha, x_i })
    }

    pub fn f(&self, y: f64) -> f64 {
        let (t, alpha) = (self.t, self.alpha);
        let c = 2.0 / self.params.beta.sqrt();
        let arg = (t.powf(2.0 / 3.0) * self.params.zeta - self.x_i - c * t.powf(-alpha / 2.0) * y)
            .max(0.0);
        2.0 * self.params.l / (3.0 * PI) * t.powf(1.0 / 3.0 + alpha) * arg.powf(1.5)
            + 0.5 * y * y
    }

    pub fn y_star(&self) -> f64 {
        let t23 = self.t.powf(2.0 / 3.0);
        self.t.powf(2.0 / 3.0 + self.alpha / 2.0) * v_star(self.x_i / t23, &self.params)
    }

    pub fn f_min(&self) -> f64 {
        self.f(self.y_star())
    }

    /// One-sided derivative `F'(y)` (the powered branch contributes only
    /// where its argument is positive).
    pub fn f_prime(&self, y: f64) -> f64 {
        let (t, alpha) = (self.t, self.alpha);
        let c = 2.0 / self.params.beta.sqrt();
        let arg = (t.powf(2.0 / 3.0) * self.params.zeta - self.x_i - c * t.powf(-alpha / 2.0) * y)
            .max(0.0);
        y - self.params.l / PI
            * t.powf(1.0 / 3.0 + alpha)
            * c
            * t.powf(-alpha / 2.0)
            * arg.sqrt()
    }

    /// Location of the positive-part kink `y_c`.
    pub fn y_kink(&self) -> f64 {
        let c = 2.0 / self.params.beta.sqrt();
        (self.t.powf(2.0 / 3.0) * self.params.zeta - self.x_i)
            / (c * self.t.powf(-self.alpha / 2.0))
    }
}
