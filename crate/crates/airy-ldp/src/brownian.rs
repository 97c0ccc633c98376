//! Discretized Brownian sample paths.
//!
//! A path holds nodal values of `B` on a uniform grid, with `B(0) = 0` and
//! i.i.d. Gaussian increments of variance equal to the grid step. The white
//! noise `B'` is never materialized: every consumer works with increments.
//! Paths can be drifted by a piecewise-constant profile (the cumulative
//! drift is integrated exactly), mollified by a compactly supported bump,
//! and reweighted through the Girsanov log-density of the drift.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PathGrid;

/// Piecewise-constant drift profile: level `levels[i]` on
/// `(breakpoints[i], breakpoints[i+1]]`, zero beyond the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl DriftProfile {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Config("drift profile needs at least two breakpoints".into()));
        }
        if levels.len() != breakpoints.len() - 1 {
            return Err(Error::Config(format!(
                "drift profile needs {} levels for {} breakpoints, got {}",
                breakpoints.len() - 1,
                breakpoints.len(),
                levels.len()
            )));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("drift breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, levels })
    }

    /// The zero profile on a trivial partition.
    pub fn zero() -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            levels: vec![0.0],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&v| v == 0.0)
    }

    /// Drift value `V(x)`; zero outside `(x_0, x_m]`.
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= self.breakpoints[0] || x > *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        let k = self.breakpoints.partition_point(|&b| b < x);
        self.levels[k - 1]
    }

    /// Cumulative drift `∫_0^x V(y) dy`, exact for the step profile.
    pub fn integral_to(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in self.levels.iter().enumerate() {
            let lo = self.breakpoints[i];
            let hi = self.breakpoints[i + 1];
            if x <= lo {
                break;
            }
            acc += v * (x.min(hi) - lo);
        }
        acc
    }

    /// `∫_0^∞ V²(x) dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, &v)| v * v * (self.breakpoints[i + 1] - self.breakpoints[i]))
            .sum()
    }
}

/// A Brownian path sampled on a uniform grid. `values[0] = 0`; identical
/// `(grid, seed, stream)` reproduce bit-identical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    grid: PathGrid,
    values: Vec<f64>,
    seed: u64,
    stream: u64,
    drift_applied: Option<DriftProfile>,
}

impl BrownianPath {
    pub fn grid(&self) -> &PathGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn drift_applied(&self) -> Option<&DriftProfile> {
        self.drift_applied.as_ref()
    }

    /// Build a path from explicit nodal values (for deterministic tests
    /// and file import). Requires `values[0] = 0` and matching length.
    pub fn from_values(grid: PathGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Domain(format!(
                "expected {} nodal values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::Domain(format!("values[0] must be 0, got {}", values[0])));
        }
        Ok(Self {
            grid,
            values,
            seed: 0,
            stream: 0,
            drift_applied: None,
        })
    }

    /// The zero path (B ≡ 0).
    pub fn zero(grid: PathGrid) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![0.0; n],
            seed: 0,
            stream: 0,
            drift_applied: None,
        }
    }

    /// Value at `x` by linear interpolation between grid nodes.
    pub fn value_at(&self, x: f64) -> f64 {
        let h = self.grid.step();
        let t = (x / h).clamp(0.0, (self.values.len() - 1) as f64);
        let j = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    /// Increment `B(x_{j+1}) - B(x_j)` over grid cell `j`.
    pub fn increment(&self, j: usize) -> f64 {
        self.values[j + 1] - self.values[j]
    }
}

/// Draw a standard Brownian path on `grid`, deterministic in `seed`.
pub fn sample_path(grid: &PathGrid, seed: u64) -> BrownianPath {
    sample_path_stream(grid, seed, 0)
}

/// Draw the `stream`-th path of the family keyed by `seed`. Distinct
/// streams use non-overlapping generator streams, so parallel workers can
/// each take one without coordination.
pub fn sample_path_stream(grid: &PathGrid, seed: u64, stream: u64) -> BrownianPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sqrt_h = grid.step().sqrt();
    let mut values = Vec::with_capacity(grid.n_points());
    let mut b = 0.0;
    values.push(0.0);
    for _ in 0..grid.n_cells() {
        let z: f64 = rng.sample(StandardNormal);
        b += sqrt_h * z;
        values.push(b);
    }
    BrownianPath {
        grid: *grid,
        values,
        seed,
        stream,
        drift_applied: None,
    }
}

/// Add the cumulative drift `∫_0^x V` to every node: the drifted path
/// `B + ∫V` of the tilted measure. Breakpoints beyond the path domain are
/// clipped to it.
pub fn add_drift(path: &BrownianPath, drift: &DriftProfile) -> BrownianPath {
    let mut out = path.clone();
    // Cumulative drift is piecewise linear, so evaluating it node by node
    // is exact; a running scan over profile pieces keeps it O(n).
    let h = path.grid.step();
    let bps = drift.breakpoints();
    let mut piece = 0usize;
    let mut acc = 0.0;
    let mut x_prev = 0.0f64;
    for (j, v) in out.values.iter_mut().enumerate() {
        let x = j as f64 * h;
        // advance across whole pieces that end before x
        while piece < drift.levels().len() && bps[piece + 1] <= x {
            acc += drift.levels()[piece] * (bps[piece + 1] - x_prev.max(bps[piece]));
            x_prev = bps[piece + 1];
            piece += 1;
        }
        let mut cum = acc;
        if piece < drift.levels().len() && x > bps[piece] {
            cum += drift.levels()[piece] * (x - x_prev.max(bps[piece]));
        }
        *v += cum;
    }
    out.drift_applied = Some(drift.clone());
    out
}

/// Mollify the path by discrete convolution with a smooth bump of radius
/// `epsilon`, reflecting at both ends. Kernel weights are normalized to
/// unit mass on the grid, so constants map to themselves exactly.
pub fn mollify(path: &BrownianPath, epsilon: f64) -> Result<BrownianPath> {
    let h = path.grid.step();
    if epsilon < h {
        return Err(Error::Config(format!(
            "mollifier width {epsilon} below grid step {h}"
        )));
    }
    let half = (epsilon / h).floor() as isize;
    let mut weights = Vec::with_capacity((2 * half + 1) as usize);
    for k in -half..=half {
        let u = k as f64 * h / epsilon;
        let w = if u.abs() < 1.0 {
            (-1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        };
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let n = path.values.len() as isize;
    let reflect = |mut idx: isize| -> usize {
        loop {
            if idx < 0 {
                idx = -idx;
            } else if idx > n - 1 {
                idx = 2 * (n - 1) - idx;
            } else {
                return idx as usize;
            }
        }
    };

    let mut out = path.clone();
    for j in 0..n {
        let mut acc = 0.0;
        for (ki, w) in weights.iter().enumerate() {
            let k = ki as isize - half;
            acc += w * path.values[reflect(j - k)];
        }
        out.values[j as usize] = acc;
    }
    // the smoothed path may pick up an O(ε^{1/2}·modulus) offset at 0
    // from the boundary reflection; consumers read increments, so it is
    // left in place rather than re-anchored
    Ok(out)
}

/// `max_{x ∈ [a,b]} |B(x) - B(a)|` over grid nodes (endpoints included by
/// interpolation).
pub fn increment_max(path: &BrownianPath, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::Interval {
            a,
            b,
            reason: "empty or reversed interval".into(),
        });
    }
    if !path.grid().contains(a) || !path.grid().contains(b) {
        return Err(Error::Interval {
            a,
            b,
            reason: format!("outside path domain [0, {}]", path.grid().length()),
        });
    }
    let base = path.value_at(a);
    let h = path.grid().step();
    let j_lo = (a / h).ceil() as usize;
    let j_hi = (b / h).floor() as usize;
    let mut best: f64 = (path.value_at(b) - base).abs();
    for j in j_lo..=j_hi.min(path.values.len() - 1) {
        best = best.max((path.values[j] - base).abs());
    }
    Ok(best)
}

/// Itô integral `∫_0^∞ V(x) dB(x)` of a piecewise-constant integrand
/// against the path: `Σ_i V_i (B(x_i) - B(x_{i-1}))`, exact for step `V`.
/// Profile pieces are clipped to the path domain.
pub fn stochastic_integral(path: &BrownianPath, drift: &DriftProfile) -> f64 {
    let x_max = path.grid().length();
    let mut acc = 0.0;
    for (i, &v) in drift.levels().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let lo = drift.breakpoints()[i].min(x_max);
        let hi = drift.breakpoints()[i + 1].min(x_max);
        if hi <= lo {
            break;
        }
        acc += v * (path.value_at(hi) - path.value_at(lo));
    }
    acc
}

/// Girsanov log-density `-∫ V dB + ½ ∫ V² dx` evaluated along `path`.
///
/// Evaluated on an undrifted sample, `exp(-weight)` is the exponential
/// martingale with unit mean. Evaluated on the drifted sample
/// `B = B̃ + ∫V` it collapses to `-∫ V dB̃ - ½ ∫ V²`, and `exp(+weight)`
/// is then the importance factor that makes tilted-sample averages of any
/// functional of `B` unbiased.
pub fn girsanov_log_weight(path: &BrownianPath, drift: &DriftProfile) -> f64 {
    -stochastic_integral(path, drift) + 0.5 * drift.l2_norm_sq()
}

/// Write a path in the flat CSV dump format: a `h,x_max,seed` header pair
/// of lines, then one nodal value per line.
pub fn write_path_csv<W: std::io::Write>(path: &BrownianPath, mut w: W) -> Result<()> {
    writeln!(w, "h,x_max,seed")?;
    writeln!(
        w,
        "{:.16e},{:.16e},{}",
        path.grid().step(),
        path.grid().length(),
        path.seed()
    )?;
    writeln!(w, "value")?;
    for v in path.values() {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_path(slope: f64, h: f64, x_max: f64) -> BrownianPath {
        let grid = PathGrid::new(h, x_max).unwrap();
        let values = (0..grid.n_points()).map(|j| slope * grid.node(j)).collect();
        BrownianPath::from_values(grid, values).unwrap()
    }

    #[test]
    fn sample_starts_at_zero_with_right_length() {
        let grid = PathGrid::new(0.5, 1.0).unwrap();
        let p = sample_path(&grid, 12345);
        assert_eq!(p.values().len(), 3);
        assert_eq!(p.values()[0], 0.0);
    }

    #[test]
    fn sample_is_deterministic_in_seed() {
        let grid = PathGrid::new(0.01, 2.0).unwrap();
        let p1 = sample_path(&grid, 7);
        let p2 = sample_path(&grid, 7);
        assert_eq!(p1.values(), p2.values());
        let p3 = sample_path(&grid, 8);
        assert_ne!(p1.values(), p3.values());
    }

    #[test]
    fn streams_do_not_collide() {
        let grid = PathGrid::new(0.1, 1.0).unwrap();
        let a = sample_path_stream(&grid, 7, 0);
        let b = sample_path_stream(&grid, 7, 1);
        assert_ne!(a.values(), b.values());
    }

    #[test]
    fn terminal_variance_matches_brownian_scaling() {
        // Law of large numbers oracle: Var[B(1)] = 1 over many seeds.
        let grid = PathGrid::new(0.01, 1.0).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for stream in 0..n {
            let p = sample_path_stream(&grid, 42, stream);
            let b1 = *p.values().last().unwrap();
            sum += b1;
            sum_sq += b1 * b1;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(
            (var - 1.0).abs() < 0.02,
            "sample variance at x=1 was {var}, expected 1.0 ± 0.02"
        );
    }

    #[test]
    fn zero_drift_is_identity() {
        let grid = PathGrid::new(0.01, 2.0).unwrap();
        let p = sample_path(&grid, 3);
        let zero = DriftProfile::new(vec![0.0, 2.0], vec![0.0]).unwrap();
        let q = add_drift(&p, &zero);
        assert_eq!(p.values(), q.values());
    }

    #[test]
    fn unit_drift_is_linear_ramp() {
        let grid = PathGrid::new(0.25, 1.0).unwrap();
        let p = BrownianPath::zero(grid);
        let v = DriftProfile::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        let q = add_drift(&p, &v);
        assert!((q.value_at(0.5) - 0.5).abs() < 1e-15);
        assert!((q.value_at(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_drift_integrates_exactly() {
        // V = 2 on (0, 0.5], 0 after: adds 1.0 at x = 1.
        let grid = PathGrid::new(0.25, 1.0).unwrap();
        let p = BrownianPath::zero(grid);
        let v = DriftProfile::new(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        let q = add_drift(&p, &v);
        assert!((q.value_at(1.0) - 1.0).abs() < 1e-15);
        assert!((q.value_at(0.25) - 0.5).abs() < 1e-15);
        assert!((q.value_at(0.75) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn drift_breakpoints_clip_to_domain() {
        let grid = PathGrid::new(0.25, 1.0).unwrap();
        let p = BrownianPath::zero(grid);
        let v = DriftProfile::new(vec![0.0, 5.0], vec![1.0]).unwrap();
        let q = add_drift(&p, &v);
        assert!((q.value_at(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mollify_fixes_constants_and_linears() {
        let grid = PathGrid::new(0.01, 1.0).unwrap();
        let p = linear_path(3.0, 0.01, 1.0);
        let q = mollify(&p, 0.05).unwrap();
        // linear away from the endpoints: the symmetric kernel reproduces
        // linear data wherever the stencil does not touch the boundary
        for j in 6..95 {
            assert!(
                (q.values()[j] - p.values()[j]).abs() < 1e-12,
                "node {j}: {} vs {}",
                q.values()[j],
                p.values()[j]
            );
        }
        let flat = BrownianPath::zero(grid);
        let qf = mollify(&flat, 0.05).unwrap();
        for v in qf.values() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn mollify_at_minimal_width_stays_close() {
        let grid = PathGrid::new(0.01, 1.0).unwrap();
        let p = sample_path(&grid, 11);
        let q = mollify(&p, 0.01).unwrap();
        let max_inc = (0..grid.n_cells())
            .map(|j| p.increment(j).abs())
            .fold(0.0f64, f64::max);
        let sup_dev = p
            .values()
            .iter()
            .zip(q.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            sup_dev < 2.0 * max_inc,
            "sup deviation {sup_dev} vs 2·max increment {}",
            2.0 * max_inc
        );
    }

    #[test]
    fn mollify_rejects_subgrid_width() {
        let grid = PathGrid::new(0.01, 1.0).unwrap();
        let p = sample_path(&grid, 1);
        assert!(mollify(&p, 0.005).is_err());
    }

    #[test]
    fn mollify_smooths_second_differences() {
        let grid = PathGrid::new(0.001, 1.0).unwrap();
        let p = sample_path(&grid, 5);
        let eps = 0.01;
        let q = mollify(&p, eps).unwrap();
        let sup_b = p.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = grid.step();
        let mut worst = 0.0f64;
        for j in 1..grid.n_points() - 1 {
            let d2 = (q.values()[j + 1] - 2.0 * q.values()[j] + q.values()[j - 1]) / h;
            worst = worst.max(d2.abs());
        }
        // once-divided second differences scale like max|B| / epsilon
        assert!(
            worst <= 30.0 * sup_b / eps,
            "second differences {worst} vs bound {}",
            30.0 * sup_b / eps
        );
    }

    #[test]
    fn increment_max_trivial_cases() {
        let grid = PathGrid::new(0.25, 2.0).unwrap();
        let z = BrownianPath::zero(grid);
        assert_eq!(increment_max(&z, 0.0, 2.0).unwrap(), 0.0);
        let lin = linear_path(1.0, 0.25, 2.0);
        assert!((increment_max(&lin, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(increment_max(&z, 1.0, 1.0).is_err());
        assert!(increment_max(&z, 1.5, 0.5).is_err());
    }

    #[test]
    fn increment_max_matches_naive_scan() {
        let grid = PathGrid::new(0.01, 3.0).unwrap();
        let p = sample_path(&grid, 99);
        let (a, b) = (0.5, 2.25);
        let got = increment_max(&p, a, b).unwrap();
        let base = p.value_at(a);
        let mut naive = 0.0f64;
        for j in 0..grid.n_points() {
            let x = grid.node(j);
            if x >= a && x <= b {
                naive = naive.max((p.values()[j] - base).abs());
            }
        }
        assert!((got - naive).abs() < 1e-15, "{got} vs naive {naive}");
    }

    #[test]
    fn girsanov_weight_zero_drift() {
        let grid = PathGrid::new(0.01, 2.0).unwrap();
        let p = sample_path(&grid, 21);
        let v = DriftProfile::new(vec![0.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(girsanov_log_weight(&p, &v), 0.0);
    }

    #[test]
    fn girsanov_weight_degenerate_path() {
        // path ≡ 0, V = 1 on (0,1]: only the quadratic term survives.
        let grid = PathGrid::new(0.25, 1.0).unwrap();
        let p = BrownianPath::zero(grid);
        let v = DriftProfile::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!((girsanov_log_weight(&p, &v) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn girsanov_weight_is_unit_mean_martingale() {
        // E[exp(-weight)] = 1 over undrifted samples.
        let grid = PathGrid::new(0.05, 2.0).unwrap();
        let v = DriftProfile::new(vec![0.0, 0.5, 1.5], vec![0.8, -0.4]).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for stream in 0..n {
            let p = sample_path_stream(&grid, 1234, stream);
            let w = (-girsanov_log_weight(&p, &v)).exp();
            sum += w;
            sum_sq += w * w;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se + 1e-12,
            "martingale mean {mean} ± {se}"
        );
    }

    #[test]
    fn tilted_averages_match_untilted_ones() {
        // For the drifted sample B = X̃ + ∫V, the factor exp(+weight(B))
        // makes tilted averages of bounded functionals agree with plain
        // ones; test functional: clipped polynomial of B(1).
        let grid = PathGrid::new(0.05, 1.0).unwrap();
        let v = DriftProfile::new(vec![0.0, 1.0], vec![0.7]).unwrap();
        let g = |b1: f64| (b1 + 0.2 * b1 * b1).clamp(-2.0, 2.0);
        let n = 200_000;
        let (mut plain, mut tilted) = (0.0, 0.0);
        let mut tilted_sq = 0.0;
        for stream in 0..n {
            let x = sample_path_stream(&grid, 555, stream);
            plain += g(x.value_at(1.0));
            let b = add_drift(&x, &v);
            let w = girsanov_log_weight(&b, &v).exp();
            let val = w * g(b.value_at(1.0));
            tilted += val;
            tilted_sq += val * val;
        }
        let plain_mean = plain / n as f64;
        let tilted_mean = tilted / n as f64;
        let tilted_se =
            ((tilted_sq / n as f64 - tilted_mean * tilted_mean).max(0.0) / n as f64).sqrt();
        assert!(
            (plain_mean - tilted_mean).abs() < 4.0 * tilted_se + 1e-3,
            "plain {plain_mean} vs tilted {tilted_mean} (se {tilted_se})"
        );
    }

    #[test]
    fn mollify_preserves_endpoint_values_approximately() {
        let grid = PathGrid::new(0.001, 1.0).unwrap();
        let p = sample_path(&grid, 31);
        let eps = 0.02;
        let q = mollify(&p, eps).unwrap();
        // modulus of continuity at scale eps, as the natural yardstick
        let mut modulus = 0.0f64;
        let k = (eps / grid.step()) as usize;
        for j in 0..grid.n_points() - k {
            modulus = modulus.max((p.values()[j + k] - p.values()[j]).abs());
        }
        let end = grid.n_points() - 1;
        assert!((q.values()[0] - p.values()[0]).abs() <= 2.0 * modulus);
        assert!((q.values()[end] - p.values()[end]).abs() <= 2.0 * modulus);
    }
}
