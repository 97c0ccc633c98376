//! Riccati-transform eigenvalue counting along sampled paths.
//!
//! The counting function of the operators at hand equals the number of
//! blow-downs to `-∞` of the first-order flow
//! `f' = drift(x) - λ - f² + (2/√β) B'(x)`, restarted at `+∞` after each
//! blow-down; `drift(x) = x` for the full-line operator with linear
//! confinement and `0` for the finite-interval one.
//!
//! The path is piecewise linear between nodes, so within one grid cell the
//! equation has a constant coefficient `c = drift - λ + (2/√β) ΔB/h` and
//! the flow of `f' = c - f²` is available in closed form: a rotating
//! phase `f = ω tan θ`, `θ' = -ω`, for `c = -ω² < 0` (each crossing of
//! `-π/2 mod π` is one explosion), and a hyperbolic pull toward `+√c`
//! for `c > 0` (at most one explosion per cell, at an explicit time).
//! Cells are advanced exactly, so the integration is stiffness-free and
//! the count is exactly monotone in `λ` path by path. No eigenvalues are
//! ever reconstructed from the trace; consumers work with counts.

use serde::{Deserialize, Serialize};

use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::grid::Partition;

/// Drift shape of the Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `drift(x) = x - λ`: the full-line operator with linear confinement.
    Airy,
    /// `drift(x) = -λ`: the finite-interval operator.
    Flat,
}

/// Initial value of the flow; `+∞` is the canonical Dirichlet start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialValue {
    PlusInfinity,
    Finite(f64),
}

/// Terminal value of a solve; tagged when the right endpoint coincides
/// with an explosion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TerminalValue {
    Finite(f64),
    NegInfinity,
}

/// Margin added to `λ₊` for the full-line solve domain: beyond `x > λ`
/// the drift pushes the flow onto the stable branch, and the tail
/// monitor guards the cutoff.
pub const SAO_STOP_MARGIN: f64 = 10.0;

/// Length of the monitored window past the cutoff.
pub const SAO_MONITOR_WINDOW: f64 = 5.0;

/// Default monitor level: the flow must stay above `-M` past the cutoff.
pub const DEFAULT_EXPLOSION_THRESHOLD: f64 = 1e4;

/// Domain cutoff `x_stop(λ) = λ₊ + 10` for the full-line solve.
pub fn x_stop(lambda: f64) -> f64 {
    lambda.max(0.0) + SAO_STOP_MARGIN
}

/// Solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiccatiConfig {
    pub beta: f64,
    pub lambda: f64,
    pub potential_kind: PotentialKind,
    /// Solve interval `[a, b]`; endpoints snap to the nearest path nodes.
    pub interval: (f64, f64),
    pub initial_value: InitialValue,
    /// Monitor level `M` for the no-explosion tail certificate.
    pub explosion_threshold: f64,
    /// Coefficient-freezing substep for the linear drift; defaults to the
    /// path grid step.
    pub step: Option<f64>,
}

impl RiccatiConfig {
    pub fn new(beta: f64, lambda: f64, kind: PotentialKind, interval: (f64, f64)) -> Self {
        Self {
            beta,
            lambda,
            potential_kind: kind,
            interval,
            initial_value: InitialValue::PlusInfinity,
            explosion_threshold: DEFAULT_EXPLOSION_THRESHOLD,
            step: None,
        }
    }

    fn validate(&self, path: &BrownianPath) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.explosion_threshold < 100.0 {
            return Err(Error::Config(format!(
                "explosion threshold must be at least 100, got {}",
                self.explosion_threshold
            )));
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(Error::Config(format!("substep must be positive, got {s}")));
            }
        }
        let (a, b) = self.interval;
        if !(b > a) {
            return Err(Error::Interval { a, b, reason: "empty or reversed".into() });
        }
        if a < -1e-9 || b > path.grid().length() + path.grid().step() * 1e-6 {
            return Err(Error::Interval {
                a,
                b,
                reason: format!("outside path domain [0, {}]", path.grid().length()),
            });
        }
        Ok(())
    }
}

/// Solution record: explosion times, their count, and the terminal value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiccatiTrace {
    pub explosion_times: Vec<f64>,
    pub count: usize,
    pub terminal_value: TerminalValue,
    pub lambda: f64,
}

/// Full-line count together with the tail certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaoCount {
    pub count: usize,
    /// Whether the flow stayed above `-M` with no explosions on the
    /// monitored window past the cutoff.
    pub tail_ok: bool,
}

/// Localized full-line counts, bucketed by a partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizedCounts {
    pub buckets: Vec<usize>,
    pub tail_ok: bool,
}

/// Flow state: `f ∈ ℝ ∪ {+∞}` encoded as an `f64` (`f64::INFINITY` is the
/// restart value).
#[derive(Debug, Clone, Copy)]
struct CellOutcome {
    f_end: f64,
    explosions: usize,
    /// Offset of the first explosion inside the cell, when any.
    first_explosion: f64,
    /// Period between subsequent explosions (oscillatory cells).
    period: f64,
}

/// Advance the exact flow of `f' = c - f²` by `dt`.
fn advance_cell(f: f64, c: f64, dt: f64) -> CellOutcome {
    use std::f64::consts::{FRAC_PI_2, PI};
    if c < 0.0 {
        let omega = (-c).sqrt();
        let theta0 = if f.is_infinite() { FRAC_PI_2 } else { (f / omega).atan() };
        let drop = omega * dt;
        // crossings of -π/2 (mod π): t_m = (θ0 + π/2 + (m-1)π) / ω
        let slack = drop - theta0 - FRAC_PI_2;
        let explosions = if slack >= 0.0 { (slack / PI).floor() as usize + 1 } else { 0 };
        CellOutcome {
            f_end: omega * (theta0 - drop).tan(),
            explosions,
            first_explosion: (theta0 + FRAC_PI_2) / omega,
            period: PI / omega,
        }
    } else if c > 0.0 {
        let omega = c.sqrt();
        if f.is_infinite() {
            return CellOutcome {
                f_end: omega / (omega * dt).tanh(),
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            };
        }
        if f >= -omega {
            let th = (omega * dt).tanh();
            return CellOutcome {
                f_end: omega * (f + omega * th) / (omega + f * th),
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            };
        }
        // f < -ω: finite-time blow-down at tanh(ω t*) = ω / (-f)
        let x = omega / (-f);
        let t_star = x.atanh() / omega;
        if t_star <= dt {
            let remaining = dt - t_star;
            CellOutcome {
                f_end: if remaining > 0.0 { omega / (omega * remaining).tanh() } else { f64::INFINITY },
                explosions: 1,
                first_explosion: t_star,
                period: f64::INFINITY,
            }
        } else {
            let th = (omega * dt).tanh();
            CellOutcome {
                f_end: omega * (f + omega * th) / (omega + f * th),
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            }
        }
    } else {
        // c = 0: pure quadratic decay f' = -f²
        if f.is_infinite() {
            return CellOutcome {
                f_end: 1.0 / dt,
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            };
        }
        if f >= 0.0 {
            return CellOutcome {
                f_end: f / (1.0 + f * dt),
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            };
        }
        let t_star = -1.0 / f;
        if t_star <= dt {
            let remaining = dt - t_star;
            CellOutcome {
                f_end: if remaining > 0.0 { 1.0 / remaining } else { f64::INFINITY },
                explosions: 1,
                first_explosion: t_star,
                period: f64::INFINITY,
            }
        } else {
            CellOutcome {
                f_end: f / (1.0 + f * dt),
                explosions: 0,
                first_explosion: f64::INFINITY,
                period: f64::INFINITY,
            }
        }
    }
}

/// One sweep of the flow across path cells `[j_start, j_end)`, invoking
/// `on_cell(x_left, outcome)` after each (sub)cell.
fn sweep<F: FnMut(f64, f64, &CellOutcome)>(
    path: &BrownianPath,
    config: &RiccatiConfig,
    j_start: usize,
    j_end: usize,
    f0: f64,
    mut on_cell: F,
) -> f64 {
    let h = path.grid().step();
    let coupling = 2.0 / config.beta.sqrt();
    let n_sub = match config.step {
        Some(s) if s < h => (h / s).ceil() as usize,
        _ => 1,
    };
    let sub = h / n_sub as f64;
    let mut f = f0;
    for j in j_start..j_end {
        let noise = coupling * path.increment(j) / h;
        let x_left_cell = path.grid().node(j);
        match config.potential_kind {
            PotentialKind::Flat => {
                let c = -config.lambda + noise;
                let out = advance_cell(f, c, h);
                on_cell(x_left_cell, h, &out);
                f = out.f_end;
            }
            PotentialKind::Airy => {
                for k in 0..n_sub {
                    let x_left = x_left_cell + k as f64 * sub;
                    let c = (x_left + 0.5 * sub) - config.lambda + noise;
                    let out = advance_cell(f, c, sub);
                    on_cell(x_left, sub, &out);
                    f = out.f_end;
                }
            }
        }
    }
    f
}

fn node_index(path: &BrownianPath, x: f64) -> usize {
    path.grid().nearest_node(x)
}

/// Integrate the configured Riccati equation across its interval,
/// recording every explosion time.
pub fn solve_riccati(path: &BrownianPath, config: &RiccatiConfig) -> Result<RiccatiTrace> {
    config.validate(path)?;
    let (a, b) = config.interval;
    let ja = node_index(path, a);
    let jb = node_index(path, b);
    if jb <= ja {
        return Err(Error::Interval { a, b, reason: "snaps to an empty cell range".into() });
    }
    let f0 = match config.initial_value {
        InitialValue::PlusInfinity => f64::INFINITY,
        InitialValue::Finite(v) => v,
    };
    let mut times = Vec::new();
    let f_end = sweep(path, config, ja, jb, f0, |x_left, dt, out| {
        if out.explosions > 0 {
            let mut t = out.first_explosion;
            for _ in 0..out.explosions {
                times.push(x_left + t);
                t += out.period;
            }
        }
        let _ = dt;
    });
    if f_end.is_nan() {
        return Err(Error::Integration { x: b, reason: "flow produced NaN".into() });
    }
    let terminal = match times.last() {
        Some(&t) if b - t < path.grid().step() * 1e-9 => TerminalValue::NegInfinity,
        _ => TerminalValue::Finite(f_end),
    };
    Ok(RiccatiTrace {
        count: times.len(),
        explosion_times: times,
        terminal_value: terminal,
        lambda: config.lambda,
    })
}

/// Node-by-node profile `(x, explosions so far, f)` of a solve, in the
/// lexicographic state space used by the ordering property.
pub fn riccati_profile(
    path: &BrownianPath,
    config: &RiccatiConfig,
) -> Result<Vec<(f64, usize, f64)>> {
    config.validate(path)?;
    let (a, b) = config.interval;
    let ja = node_index(path, a);
    let jb = node_index(path, b);
    let f0 = match config.initial_value {
        InitialValue::PlusInfinity => f64::INFINITY,
        InitialValue::Finite(v) => v,
    };
    let mut out = vec![(path.grid().node(ja), 0usize, f0)];
    let mut total = 0usize;
    sweep(path, config, ja, jb, f0, |x_left, dt, cell| {
        total += cell.explosions;
        out.push((x_left + dt, total, cell.f_end));
    });
    Ok(out)
}

fn require_domain(path: &BrownianPath, needed: f64) -> Result<()> {
    let have = path.grid().length();
    if have + path.grid().step() * 1e-6 < needed {
        return Err(Error::PathTooShort { needed, available: have });
    }
    Ok(())
}

/// Full-line explosion count with the `f(0) = +∞` start: explosions on
/// `(0, x_stop(λ)]`, plus a no-explosion certificate on the following
/// monitor window. The path must cover `[0, x_stop(λ) + 5]`.
pub fn count_sao(path: &BrownianPath, beta: f64, lambda: f64) -> Result<SaoCount> {
    count_sao_with(path, beta, lambda, DEFAULT_EXPLOSION_THRESHOLD, None)
}

/// As [`count_sao`], with an explicit monitor level and optional
/// coefficient-freezing substep.
pub fn count_sao_with(
    path: &BrownianPath,
    beta: f64,
    lambda: f64,
    threshold: f64,
    step: Option<f64>,
) -> Result<SaoCount> {
    let stop = x_stop(lambda);
    require_domain(path, stop + SAO_MONITOR_WINDOW)?;
    let mut config = RiccatiConfig::new(beta, lambda, PotentialKind::Airy, (0.0, stop));
    config.explosion_threshold = threshold;
    config.step = step;
    config.validate(path)?;

    let j_stop = node_index(path, stop);
    let j_mon = node_index(path, stop + SAO_MONITOR_WINDOW);
    let mut count = 0usize;
    let f_at_stop = sweep(path, &config, 0, j_stop, f64::INFINITY, |_, _, out| {
        count += out.explosions;
    });
    // monitored tail: no explosions and no dip below -M
    let mut tail_ok = true;
    let m = config.explosion_threshold;
    let f_tail = sweep(path, &config, j_stop, j_mon, f_at_stop, |_, _, out| {
        if out.explosions > 0 {
            tail_ok = false;
        }
        if out.f_end < -m {
            tail_ok = false;
        }
    });
    if f_tail.is_nan() {
        return Err(Error::Integration { x: stop, reason: "tail flow produced NaN".into() });
    }
    Ok(SaoCount { count, tail_ok })
}

/// Finite-interval explosion count: flow started at `+∞` at `a`,
/// explosions counted on `(a, b]`.
pub fn count_hill(path: &BrownianPath, beta: f64, lambda: f64, interval: (f64, f64)) -> Result<usize> {
    let config = RiccatiConfig::new(beta, lambda, PotentialKind::Flat, interval);
    config.validate(path)?;
    let ja = node_index(path, interval.0);
    let jb = node_index(path, interval.1);
    if jb <= ja {
        return Err(Error::Interval {
            a: interval.0,
            b: interval.1,
            reason: "snaps to an empty cell range".into(),
        });
    }
    let mut count = 0usize;
    sweep(path, &config, ja, jb, f64::INFINITY, |_, _, out| {
        count += out.explosions;
    });
    Ok(count)
}

/// Single full-line solve with explosions bucketed by `partition`; the
/// bucket sums equal [`count_sao`] for the same inputs. The partition
/// must cover `[0, x_stop(λ)]`.
pub fn localized_counts(
    path: &BrownianPath,
    beta: f64,
    lambda: f64,
    partition: &Partition,
) -> Result<LocalizedCounts> {
    let stop = x_stop(lambda);
    if partition.last_breakpoint() < stop {
        return Err(Error::Config(format!(
            "partition ends at {} but must cover [0, {stop}]",
            partition.last_breakpoint()
        )));
    }
    require_domain(path, stop + SAO_MONITOR_WINDOW)?;
    let config = RiccatiConfig::new(beta, lambda, PotentialKind::Airy, (0.0, stop));
    config.validate(path)?;

    let j_stop = node_index(path, stop);
    let j_mon = node_index(path, stop + SAO_MONITOR_WINDOW);
    let mut buckets = vec![0usize; partition.n_buckets()];
    let f_at_stop = sweep(path, &config, 0, j_stop, f64::INFINITY, |x_left, _, out| {
        let mut t = out.first_explosion;
        for _ in 0..out.explosions {
            buckets[partition.bucket_of(x_left + t)] += 1;
            t += out.period;
        }
    });
    let mut tail_ok = true;
    let m = config.explosion_threshold;
    sweep(path, &config, j_stop, j_mon, f_at_stop, |_, _, out| {
        if out.explosions > 0 || out.f_end < -m {
            tail_ok = false;
        }
    });
    Ok(LocalizedCounts { buckets, tail_ok })
}

/// [`count_sao`] across an ascending `λ` grid on one shared path. The
/// output counts are non-decreasing.
pub fn monotone_lambda_scan(
    path: &BrownianPath,
    beta: f64,
    lambdas: &[f64],
) -> Result<Vec<SaoCount>> {
    if !lambdas.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::Config("lambda grid must be sorted ascending".into()));
    }
    lambdas.iter().map(|&l| count_sao(path, beta, l)).collect()
}

/// Lexicographic order on `(explosions so far, f)` states: more
/// explosions ranks lower; equal counts compare by value.
pub fn state_le(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1)
}
