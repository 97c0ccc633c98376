//! Uniform spatial grids and interval partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[0, x_max]` with spacing `step`.
///
/// Nodes are `x_j = j * step` for `j = 0 .. n_points`, with
/// `n_points = round(x_max / step) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    step: f64,
    length: f64,
    n_points: usize,
}

impl PathGrid {
    /// Build a grid with spacing `step` on `[0, x_max]`.
    ///
    /// Rejects non-positive step or length, and grids with fewer than
    /// two nodes.
    pub fn new(step: f64, x_max: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Grid(format!("step must be positive, got {step}")));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::Grid(format!("length must be positive, got {x_max}")));
        }
        let n_cells = (x_max / step).round() as usize;
        if n_cells < 1 {
            return Err(Error::Grid(format!(
                "grid needs at least 2 nodes (step {step}, length {x_max})"
            )));
        }
        let realized = n_cells as f64 * step;
        if (realized - x_max).abs() > step * 1e-6 {
            return Err(Error::Grid(format!(
                "length {x_max} is not a multiple of step {step}"
            )));
        }
        Ok(Self {
            step,
            length: realized,
            n_points: n_cells + 1,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_cells(&self) -> usize {
        self.n_points - 1
    }

    /// Node coordinate `x_j`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let j = (x / self.step).round();
        (j.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Whether `x` lies within `[0, length]` up to rounding slack.
    pub fn contains(&self, x: f64) -> bool {
        x >= -self.step * 1e-9 && x <= self.length + self.step * 1e-9
    }
}

/// Partition of `[0, ∞)` by finitely many breakpoints
/// `0 = x_0 < x_1 < … < x_m`; bucket `i < m` is `(x_i, x_{i+1}]` and the
/// final bucket is `(x_m, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl Partition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Config("partition needs at least one breakpoint".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::Config(format!(
                "partition must start at 0, got {}",
                breakpoints[0]
            )));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("partition breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints })
    }

    /// Equispaced partition `x_i = i * width`, `i = 0..=n`.
    pub fn equispaced(width: f64, n: usize) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config(format!("partition width must be positive, got {width}")));
        }
        Self::new((0..=n).map(|i| i as f64 * width).collect())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of buckets, including the trailing unbounded one.
    pub fn n_buckets(&self) -> usize {
        self.breakpoints.len()
    }

    /// Bucket index of `x > 0`: the `i` with `x ∈ (x_i, x_{i+1}]`, or the
    /// last bucket when `x` exceeds every breakpoint.
    pub fn bucket_of(&self, x: f64) -> usize {
        // partition_point gives the count of breakpoints < x; bucket i
        // covers (x_i, x_{i+1}], so subtract one.
        let k = self.breakpoints.partition_point(|&b| b < x);
        k.saturating_sub(1).min(self.n_buckets() - 1)
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_node_count() {
        let g = PathGrid::new(0.5, 1.0).unwrap();
        assert_eq!(g.n_points(), 3);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(2), 1.0);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(PathGrid::new(0.0, 1.0).is_err());
        assert!(PathGrid::new(-0.1, 1.0).is_err());
        assert!(PathGrid::new(0.1, 0.0).is_err());
        assert!(PathGrid::new(0.1, -2.0).is_err());
    }

    #[test]
    fn grid_length_reproduced() {
        let g = PathGrid::new(1e-3, 10.0).unwrap();
        let reproduced = (g.n_points() - 1) as f64 * g.step();
        assert!((reproduced - 10.0).abs() < 1e-9);
    }

    #[test]
    fn partition_buckets() {
        let p = Partition::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.n_buckets(), 4);
        assert_eq!(p.bucket_of(0.5), 0);
        assert_eq!(p.bucket_of(1.0), 0);
        assert_eq!(p.bucket_of(1.0 + 1e-12), 1);
        assert_eq!(p.bucket_of(2.5), 2);
        assert_eq!(p.bucket_of(3.0), 2);
        assert_eq!(p.bucket_of(7.0), 3);
    }

    #[test]
    fn partition_rejects_unsorted() {
        assert!(Partition::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(Partition::new(vec![1.0, 2.0]).is_err());
        assert!(Partition::new(vec![]).is_err());
    }
}
