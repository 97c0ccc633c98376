//! Executable invariant suites.
//!
//! Each suite runs a battery of the library's mathematical invariants —
//! closed forms, oracle agreements, inequality chains, Monte Carlo
//! cross-checks — and reports one pass/fail line per check with its
//! margin. The acceptance tests and the `validate` CLI command both run
//! through these functions, so a criterion is asserted in exactly one
//! place.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::brownian::{mollify, sample_path_stream, BrownianPath};
use crate::cost::{double_exp_proxy, negative_part, w_t, w_t_deriv};
use crate::error::{Error, Result};
use crate::estimator::{convergence_scan, estimate_plain, estimate_tilted, EstimatorConfig, Mode};
use crate::grid::{Partition, PathGrid};
use crate::oracle::{
    check_interlacing, comparison_bound_check, discretize, eigen_count, eigensum_variational_check,
    flat_bound_rhs, lowest_eigenvalues, truncated_eigensum, BoundaryCondition, LinearTerm,
};
use crate::rate::{
    minimize_objective, objective, phi, scaled_rate, v_star, Control, GaussianReduction,
    ModelParams,
};
use crate::riccati::{count_hill, count_sao, localized_counts, x_stop};

/// One validated invariant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst margin observed (positive = slack, negative = violation);
    /// semantics vary per check and are spelled out in `details`.
    pub margin: f64,
    pub details: String,
}

impl Check {
    fn new(name: &str, pass: bool, margin: f64, details: String) -> Self {
        Self { name: name.into(), pass, margin, details }
    }
}

/// Result of one suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl SuiteReport {
    fn collect(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        Self { suite: suite.into(), seed, checks, all_pass }
    }
}

/// Suite selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Riccati,
    Oracle,
    Interlace,
    Rate,
    Estimator,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riccati" => Ok(Suite::Riccati),
            "oracle" => Ok(Suite::Oracle),
            "interlace" => Ok(Suite::Interlace),
            "rate" => Ok(Suite::Rate),
            "estimator" => Ok(Suite::Estimator),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!("unknown suite '{other}'"))),
        }
    }
}

/// Tuning knobs for the Monte Carlo heavy suite.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorEffort {
    pub n_samples: usize,
    pub repetitions: usize,
    pub threads: Option<usize>,
}

impl Default for EstimatorEffort {
    fn default() -> Self {
        Self { n_samples: 10_000, repetitions: 20, threads: None }
    }
}

/// Run one suite (`All` concatenates every suite).
pub fn run_suite(suite: Suite, seed: u64, effort: EstimatorEffort) -> Result<Vec<SuiteReport>> {
    Ok(match suite {
        Suite::Riccati => vec![riccati_suite(seed)?],
        Suite::Oracle => vec![oracle_suite(seed)?],
        Suite::Interlace => vec![interlace_suite(seed)?],
        Suite::Rate => vec![rate_suite(seed)?],
        Suite::Estimator => vec![estimator_suite(seed, effort)?],
        Suite::All => vec![
            riccati_suite(seed)?,
            oracle_suite(seed)?,
            interlace_suite(seed)?,
            rate_suite(seed)?,
            estimator_suite(seed, effort)?,
        ],
    })
}

// ---------------------------------------------------------------- riccati

/// Counting monotonicity, coupling sandwich, zero-noise closed forms, and
/// finite-difference oracle agreement for the Riccati counts.
pub fn riccati_suite(seed: u64) -> Result<SuiteReport> {
    let checks = vec![
        counting_monotonicity_check(seed)?,
        coupling_sandwich_check(seed, 100)?,
        zero_noise_closed_form_check(seed, 50)?,
        oracle_agreement_check(seed, 200)?,
        order_preservation_check(seed)?,
    ];
    Ok(SuiteReport::collect("riccati", seed, checks))
}

/// λ ↦ N(λ) is non-decreasing on a 100-point grid, per sampled path.
pub fn counting_monotonicity_check(seed: u64) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 30.0)?;
    let mut pass = true;
    for stream in 0..3u64 {
        let path = sample_path_stream(&grid, seed, stream);
        let mut prev = 0usize;
        for k in 0..100 {
            let lam = -6.0 + 0.2 * k as f64;
            let c = count_sao(&path, 2.0, lam)?.count;
            if c < prev {
                pass = false;
            }
            prev = c;
        }
    }
    Ok(Check::new(
        "riccati-counting-monotonicity",
        pass,
        if pass { 0.0 } else { -1.0 },
        "N(λ) non-decreasing over a 100-point λ grid on 3 paths".into(),
    ))
}

/// Per-interval sandwich between localized full-line counts and interval
/// counts at shifted spectral parameters, exact on every coupled trial.
pub fn coupling_sandwich_check(seed: u64, trials: usize) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 22.0)?;
    let partition = Partition::new(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 17.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut stream = 0u64;
    while checked < trials {
        let lam: f64 = rng.gen_range(-2.0..6.5);
        if x_stop(lam) > 17.0 {
            continue;
        }
        let path = sample_path_stream(&grid, seed, 7_000 + stream);
        stream += 1;
        let loc = localized_counts(&path, 2.0, lam, &partition)?;
        for i in 0..6 {
            let (xl, xr) = (partition.breakpoints()[i], partition.breakpoints()[i + 1]);
            let lower = count_hill(&path, 2.0, lam - xr, (xl, xr))?;
            let upper = count_hill(&path, 2.0, lam - xl, (xl, xr))?;
            if !(lower <= loc.buckets[i] && loc.buckets[i] <= upper + 1) {
                violations += 1;
            }
        }
        checked += 1;
    }
    Ok(Check::new(
        "riccati-coupling-sandwich",
        violations == 0,
        -(violations as f64),
        format!("{checked} coupled (path, λ) trials, 6 intervals each, {violations} violations"),
    ))
}

/// Zero-noise interval counts equal `⌊ℓ√λ₊/π⌋` exactly on non-resonant
/// points.
pub fn zero_noise_closed_form_check(seed: u64, points: usize) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 3.0)?;
    let path = BrownianPath::zero(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
    let mut mismatches = 0usize;
    let mut tested = 0usize;
    while tested < points {
        let ell: f64 = rng.gen_range(0.3..3.0);
        let lam: f64 = rng.gen_range(0.5..250.0);
        // snap the interval to the grid, then test the closed form there
        let b = (ell / 1e-3).round() * 1e-3;
        let winding = b * lam.sqrt() / std::f64::consts::PI;
        // stay away from resonances where the count is about to jump
        if (winding - winding.round()).abs() < 1e-3 {
            continue;
        }
        let got = count_hill(&path, 2.0, lam, (0.0, b))?;
        let expected = winding.floor() as usize;
        if got != expected {
            mismatches += 1;
        }
        tested += 1;
    }
    Ok(Check::new(
        "riccati-zero-noise-closed-form",
        mismatches == 0,
        -(mismatches as f64),
        format!("⌊ℓ√λ/π⌋ reproduced exactly on {tested} non-resonant (ℓ, λ), {mismatches} mismatches"),
    ))
}

/// Riccati interval counts vs tridiagonal inertia counts on shared paths:
/// within ±1 in ≥ 95% of trials and exact in ≥ 80%.
pub fn oracle_agreement_check(seed: u64, trials: usize) -> Result<Check> {
    let h = 1e-3;
    let grid = PathGrid::new(h, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0eac1e);
    let mut exact = 0usize;
    let mut within_one = 0usize;
    for k in 0..trials {
        let path = sample_path_stream(&grid, seed, 20_000 + k as u64);
        let lam: f64 = rng.gen_range(-5.0..80.0);
        let riccati = count_hill(&path, 2.0, lam, (0.0, 2.0))?;
        let op = discretize(&path, 2.0, (0.0, 2.0), h, BoundaryCondition::Dirichlet, LinearTerm::None)?;
        let inertia = eigen_count(&op, lam);
        let diff = riccati.abs_diff(inertia);
        if diff == 0 {
            exact += 1;
        }
        if diff <= 1 {
            within_one += 1;
        }
    }
    let frac_within = within_one as f64 / trials as f64;
    let frac_exact = exact as f64 / trials as f64;
    Ok(Check::new(
        "riccati-oracle-agreement",
        frac_within >= 0.95 && frac_exact >= 0.80,
        (frac_within - 0.95).min(frac_exact - 0.80),
        format!(
            "{trials} (path, λ) trials at h = 1e-3: {:.1}% within ±1, {:.1}% exact",
            100.0 * frac_within,
            100.0 * frac_exact
        ),
    ))
}

/// Order preservation of the flow in the lexicographic explosion order.
pub fn order_preservation_check(seed: u64) -> Result<Check> {
    use crate::riccati::{riccati_profile, state_le, InitialValue, PotentialKind, RiccatiConfig};
    let grid = PathGrid::new(1e-3, 4.0)?;
    let mut violations = 0usize;
    for stream in 0..10u64 {
        let path = sample_path_stream(&grid, seed, 31_000 + stream);
        let mut profiles = Vec::new();
        for init in [
            InitialValue::PlusInfinity,
            InitialValue::Finite(1.0),
            InitialValue::Finite(-4.0),
        ] {
            let mut c = RiccatiConfig::new(2.0, 25.0, PotentialKind::Flat, (0.0, 4.0));
            c.initial_value = init;
            profiles.push(riccati_profile(&path, &c)?);
        }
        for k in 0..profiles[0].len() {
            for pair in [(1usize, 0usize), (2, 1)] {
                let lo = (profiles[pair.0][k].1, profiles[pair.0][k].2);
                let hi = (profiles[pair.1][k].1, profiles[pair.1][k].2);
                if !state_le(lo, hi) {
                    violations += 1;
                }
            }
        }
    }
    Ok(Check::new(
        "riccati-order-preservation",
        violations == 0,
        -(violations as f64),
        format!("ordered initial data stay ordered at every node; {violations} violations"),
    ))
}

// ----------------------------------------------------------------- oracle

/// Laplacian spectra, boundary-condition ordering, flat-potential
/// domination, the comparison lemma, and the Weyl count bound.
pub fn oracle_suite(seed: u64) -> Result<SuiteReport> {
    let checks = vec![
        dirichlet_spectrum_check()?,
        bc_ordering_check(seed, 100)?,
        flat_domination_check(seed, 100)?,
        comparison_lemma_check(seed, 100)?,
        airy_weyl_check()?,
    ];
    Ok(SuiteReport::collect("oracle", seed, checks))
}

/// Dirichlet Laplacian eigenvalues `{n²π²/ℓ²}` to 1e-3 relative.
pub fn dirichlet_spectrum_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for &ell in &[0.5f64, 1.0, 2.0] {
        let grid = PathGrid::new(1e-3, ell)?;
        let path = BrownianPath::zero(grid);
        let op = discretize(&path, 2.0, (0.0, ell), 1e-3, BoundaryCondition::Dirichlet, LinearTerm::None)?;
        let ev = lowest_eigenvalues(&op, 5)?;
        for (k, &got) in ev.eigenvalues.iter().enumerate() {
            let exact = ((k + 1) as f64 * std::f64::consts::PI / ell).powi(2);
            worst = worst.max(((got - exact) / exact).abs());
        }
    }
    Ok(Check::new(
        "oracle-dirichlet-spectrum",
        worst < 1e-3,
        1e-3 - worst,
        format!("worst relative eigenvalue error {worst:.2e} over ℓ ∈ {{0.5, 1, 2}}, first 5 levels"),
    ))
}

/// `λ₁(Neumann) ≤ λ₁(periodic) ≤ λ₁(Dirichlet)` on mollified samples.
pub fn bc_ordering_check(seed: u64, samples: usize) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 1.0)?;
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for stream in 0..samples as u64 {
        let path = mollify(&sample_path_stream(&grid, seed, 40_000 + stream), 5e-3)?;
        let mut l1 = [0.0f64; 3];
        for (i, bc) in [
            BoundaryCondition::Neumann,
            BoundaryCondition::Periodic,
            BoundaryCondition::Dirichlet,
        ]
        .into_iter()
        .enumerate()
        {
            let op = discretize(&path, 2.0, (0.0, 1.0), 1e-3, bc, LinearTerm::None)?;
            l1[i] = lowest_eigenvalues(&op, 1)?.eigenvalues[0];
        }
        let scale = l1.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-7 * scale;
        let m = (l1[1] - l1[0]).min(l1[2] - l1[1]);
        worst = worst.min(m);
        if m < -tol {
            violations += 1;
        }
    }
    Ok(Check::new(
        "oracle-bc-ordering",
        violations == 0,
        worst,
        format!("Neumann ≤ periodic ≤ Dirichlet ground states on {samples} mollified samples, {violations} violations"),
    ))
}

/// Truncated periodic eigensum dominates the flat Fourier bound, and the
/// finite-m eigenvalue sums obey the Fourier-family variational bound.
pub fn flat_domination_check(seed: u64, samples: usize) -> Result<Check> {
    let h = 1e-3;
    let ell = 1.0;
    let grid = PathGrid::new(h, ell)?;
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for stream in 0..samples as u64 {
        let path = sample_path_stream(&grid, seed, 50_000 + stream);
        let op = discretize(&path, 2.0, (0.0, ell), h, BoundaryCondition::Periodic, LinearTerm::None)?;
        let b_avg = (path.value_at(ell) - path.value_at(0.0)) / ell;
        for &r in &[20.0, 60.0] {
            let lhs = truncated_eigensum(&op, r);
            let rhs = flat_bound_rhs(r, b_avg, 2.0, ell, 400)?;
            let margin = lhs - rhs;
            worst = worst.min(margin);
            if margin < -1e-6 * lhs.abs().max(1.0) {
                violations += 1;
            }
        }
        for m in 0..=10 {
            if !eigensum_variational_check(&op, m, b_avg, 2.0)? {
                violations += 1;
            }
        }
    }
    Ok(Check::new(
        "oracle-flat-domination",
        violations == 0,
        worst,
        format!(
            "truncated periodic eigensum ≥ flat Fourier bound and m = 0..10 \
             variational sums on {samples} samples, {violations} violations"
        ),
    ))
}

/// Two-potential comparison inequality over random pairs and κ ∈ {1,2,8}.
pub fn comparison_lemma_check(seed: u64, pairs: usize) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 1.0)?;
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for k in 0..pairs as u64 {
        let j1 = sample_path_stream(&grid, seed, 60_000 + 2 * k);
        let j2 = sample_path_stream(&grid, seed, 60_001 + 2 * k);
        for &kappa in &[1.0, 2.0, 8.0] {
            let rep = comparison_bound_check(&j1, &j2, 2.0, (0.0, 1.0), kappa, 10)?;
            let m = rep.margins.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.min(m);
            if !rep.pass {
                violations += 1;
            }
        }
    }
    Ok(Check::new(
        "oracle-comparison-lemma",
        violations == 0,
        worst,
        format!("{pairs} random (J₁, J₂) pairs, κ ∈ {{1, 2, 8}}, n = 1..10, {violations} violations"),
    ))
}

/// Weyl-law count bound for the confined zero-noise operator.
pub fn airy_weyl_check() -> Result<Check> {
    let grid: Vec<f64> = (3..=15).map(|k| 2.0 * k as f64).collect();
    let rep = crate::oracle::airy_count_bound_check(&grid)?;
    let worst = rep
        .counts
        .iter()
        .zip(&rep.bounds)
        .map(|(&c, &b)| b - c as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(Check::new(
        "oracle-airy-weyl-bound",
        rep.pass,
        worst,
        format!("N(λ) within the 10%-slack Weyl bound on λ ∈ [6, 30], counts {:?}", rep.counts),
    ))
}

// -------------------------------------------------------------- interlace

/// Dirichlet/periodic interlacing on mollified samples.
pub fn interlace_suite(seed: u64) -> Result<SuiteReport> {
    let checks = vec![interlacing_check(seed, 100)?, interlacing_negative_control(seed)?];
    Ok(SuiteReport::collect("interlace", seed, checks))
}

/// First 10 eigenvalues interlace at 1e-8 tolerance on every sample.
pub fn interlacing_check(seed: u64, samples: usize) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 1.0)?;
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    for stream in 0..samples as u64 {
        let path = sample_path_stream(&grid, seed, 70_000 + stream);
        let rep = check_interlacing(&path, 2.0, (0.0, 1.0), 5e-3, 10)?;
        let m = rep.margins.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.min(m);
        if !rep.pass {
            failures += 1;
        }
    }
    Ok(Check::new(
        "interlace-dirichlet-periodic",
        failures == 0,
        worst,
        format!("{samples} mollified paths, first 10 eigenvalues, {failures} failures"),
    ))
}

/// Swapping the roles in the chain must fail.
pub fn interlacing_negative_control(seed: u64) -> Result<Check> {
    let grid = PathGrid::new(1e-3, 1.0)?;
    let path = mollify(&sample_path_stream(&grid, seed, 71_000), 5e-3)?;
    let per = discretize(&path, 2.0, (0.0, 1.0), 1e-3, BoundaryCondition::Periodic, LinearTerm::None)?;
    let dir = discretize(&path, 2.0, (0.0, 1.0), 1e-3, BoundaryCondition::Dirichlet, LinearTerm::None)?;
    let per_ev = lowest_eigenvalues(&per, 5)?.eigenvalues;
    let dir_ev = lowest_eigenvalues(&dir, 5)?.eigenvalues;
    let swapped_holds = (0..4).all(|i| dir_ev[i] <= per_ev[i] && per_ev[i] <= dir_ev[i + 1]);
    Ok(Check::new(
        "interlace-negative-control",
        !swapped_holds,
        if swapped_holds { -1.0 } else { 1.0 },
        "interlacing chain with swapped boundary conditions is rejected".into(),
    ))
}

// ------------------------------------------------------------------- rate

/// Closed-form rate function, variational consistency, minimizer
/// recovery, the Gaussian reduction, and the cost-function bounds.
pub fn rate_suite(seed: u64) -> Result<SuiteReport> {
    let checks = vec![
        cubic_law_check()?,
        five_halves_law_check()?,
        variational_consistency_check(seed, 20)?,
        minimizer_recovery_check()?,
        minimizer_uniqueness_check(seed, 100)?,
        vstar_identity_check(seed, 1000)?,
        gaussian_reduction_check()?,
        cost_bounds_check(seed, 1000)?,
        double_exp_sandwich_check(seed, 1000)?,
    ];
    Ok(SuiteReport::collect("rate", seed, checks))
}

/// `Φ'''(0) = -1/2` by one-sided finite differences.
pub fn cubic_law_check() -> Result<Check> {
    let h = 1e-3;
    let f: Vec<f64> = (0..5)
        .map(|k| phi(-(k as f64) * h))
        .collect::<Result<_>>()?;
    let d3 = (2.5 * f[0] - 9.0 * f[1] + 12.0 * f[2] - 7.0 * f[3] + 1.5 * f[4]) / (h * h * h);
    let err = (d3 + 0.5).abs();
    Ok(Check::new(
        "rate-cubic-law",
        err < 1e-4,
        1e-4 - err,
        format!("finite-difference Φ'''(0) = {d3:.8} vs -1/2"),
    ))
}

/// `Φ(z)|z|^{-5/2} → 4/(15π)` within 1% at `z = -10⁴`.
pub fn five_halves_law_check() -> Result<Check> {
    let z = -1e4;
    let ratio = phi(z)? / (-z).powf(2.5);
    let target = 4.0 / (15.0 * std::f64::consts::PI);
    let rel = ((ratio - target) / target).abs();
    Ok(Check::new(
        "rate-five-halves-law",
        rel < 0.01,
        0.01 - rel,
        format!("Φ(-10⁴)|z|^(-5/2) = {ratio:.8} vs 4/(15π) = {target:.8} ({:.3}%)", 100.0 * rel),
    ))
}

/// `objective(v_*) = scaled_rate` to 1e-6 relative over random triples.
pub fn variational_consistency_check(seed: u64, triples: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a7e);
    let mut worst = 0.0f64;
    for _ in 0..triples {
        let params = ModelParams::new(
            rng.gen_range(0.5..4.0),
            rng.gen_range(0.5..4.0),
            rng.gen_range(0.5..4.0),
        )?;
        let ctrl = Control::from_fn(params.zeta, 10_000, |x| v_star(x, &params))?;
        let obj = objective(&ctrl, &params)?;
        let rate = scaled_rate(&params);
        worst = worst.max(((obj - rate) / rate).abs());
    }
    Ok(Check::new(
        "rate-variational-consistency",
        worst < 1e-6,
        1e-6 - worst,
        format!("objective(v_*) vs closed form over {triples} random (β, L, ζ): worst rel {worst:.2e}"),
    ))
}

/// The cell-wise descent recovers `v_*` to 1e-3 sup-norm.
pub fn minimizer_recovery_check() -> Result<Check> {
    let params = ModelParams::new(2.0, 1.0, 1.0)?;
    let ctrl = minimize_objective(&params, 1000)?;
    let mut sup = 0.0f64;
    for i in 0..ctrl.values().len() {
        let mid = 0.5 * (ctrl.grid()[i] + ctrl.grid()[i + 1]);
        sup = sup.max((ctrl.values()[i] - v_star(mid, &params)).abs());
    }
    Ok(Check::new(
        "rate-minimizer-recovery",
        sup < 1e-3,
        1e-3 - sup,
        format!("independent cell-wise minimizer within {sup:.2e} of v_* on a 1000-cell grid"),
    ))
}

/// Random perturbations of `v_*` strictly increase the objective.
pub fn minimizer_uniqueness_check(seed: u64, trials: usize) -> Result<Check> {
    let params = ModelParams::new(2.0, 1.0, 1.0)?;
    let base = Control::from_fn(params.zeta, 2000, |x| v_star(x, &params))?;
    let obj0 = objective(&base, &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbead);
    let mut increases = 0usize;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let i0 = rng.gen_range(0..1500usize);
        let len = rng.gen_range(100..500usize);
        let sign: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let values: Vec<f64> = base
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i >= i0 && i < (i0 + len).min(2000) {
                    (v + sign * 1e-2).max(0.0)
                } else {
                    v
                }
            })
            .collect();
        let bumped = Control::new(base.grid().to_vec(), values)?;
        let delta = objective(&bumped, &params)? - obj0;
        worst = worst.min(delta);
        if delta > 0.0 {
            increases += 1;
        }
    }
    Ok(Check::new(
        "rate-minimizer-uniqueness",
        increases == trials,
        worst,
        format!("{increases}/{trials} sup-norm 1e-2 perturbations increased the objective"),
    ))
}

/// Pointwise algebraic identity tying `v_*` to the kink argument.
pub fn vstar_identity_check(seed: u64, points: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1dea);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let params = ModelParams::new(
            rng.gen_range(0.5..4.0),
            rng.gen_range(0.5..4.0),
            rng.gen_range(0.5..4.0),
        )?;
        let x: f64 = rng.gen_range(0.0..1.5 * params.zeta);
        let v = v_star(x, &params);
        let lhs = (params.zeta - x - 2.0 / params.beta.sqrt() * v).max(0.0);
        let rhs = (params.beta.sqrt() * std::f64::consts::PI / (2.0 * params.l) * v).powi(2);
        worst = worst.max((lhs - rhs).abs() / lhs.max(1.0));
    }
    Ok(Check::new(
        "rate-vstar-identity",
        worst < 1e-12,
        1e-12 - worst,
        format!("(ζ-x-(2/√β)v_*)₊ = ((√βπ/2L)v_*)² to {worst:.2e} on {points} random points"),
    ))
}

/// Analytic minimizer of the scalar Gaussian reduction, its quadratic
/// lower bound, and smoothness at the kink.
pub fn gaussian_reduction_check() -> Result<Check> {
    let params = ModelParams::new(2.0, 1.0, 1.0)?;
    let mut worst = f64::INFINITY;
    let mut pass = true;
    for &(t, alpha, frac) in &[(1.0f64, 0.0f64, 0.0f64), (4.0, 1.0 / 6.0, 0.3), (2.0, 0.25, 0.7)] {
        let x_i = frac * params.zeta * t.powf(2.0 / 3.0);
        let g = GaussianReduction::new(params, t, alpha, x_i)?;
        let y_star = g.y_star();
        // golden-section oracle
        let (mut lo, mut hi) = (-10.0 * (y_star.abs() + 1.0), 10.0 * (y_star.abs() + 1.0));
        for _ in 0..200 {
            let m1 = lo + 0.381_966_011_250_105 * (hi - lo);
            let m2 = hi - 0.381_966_011_250_105 * (hi - lo);
            if g.f(m1) <= g.f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let y_num = 0.5 * (lo + hi);
        let rel = (y_num - y_star).abs() / y_star.abs().max(1e-9);
        if rel > 1e-6 {
            pass = false;
        }
        worst = worst.min(1e-6 - rel);
        let fmin = g.f_min();
        for k in -30..=30 {
            let y = y_star + k as f64 * 0.15 * (y_star.abs() + 1.0);
            if g.f(y) + 1e-9 < fmin + 0.5 * (y - y_star).powi(2) {
                pass = false;
            }
        }
        let yc = g.y_kink();
        let d = 1e-12 * (yc.abs() + 1.0);
        let jump = (g.f_prime(yc - d) - g.f_prime(yc + d)).abs();
        if jump > 1e-6 * yc.abs().max(1.0) {
            pass = false;
        }
    }
    Ok(Check::new(
        "rate-gaussian-reduction",
        pass,
        worst,
        "numeric minimizer matches y_*, F ≥ F(y_*) + ½(y-y_*)², C¹ at the kink".into(),
    ))
}

/// `w_t(λ) - t^{1/3}λ₋ ∈ (0, log 2]` on random inputs.
pub fn cost_bounds_check(seed: u64, points: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc057);
    let mut worst = f64::INFINITY;
    let mut pass = true;
    for _ in 0..points {
        let t = 10f64.powf(rng.gen_range(-1.0f64..1.5));
        let lam: f64 = rng.gen_range(-30.0..30.0);
        let gap = w_t(lam, t) - t.cbrt() * negative_part(lam);
        let strict = t.cbrt() * lam.abs() < 30.0;
        if gap < 0.0 || gap > std::f64::consts::LN_2 + 1e-15 || (strict && gap <= 0.0) {
            pass = false;
        }
        worst = worst.min((std::f64::consts::LN_2 - gap).min(gap));
        // derivative stays in (-t^{1/3}, 0)
        let d = w_t_deriv(lam, t);
        if !(d <= 0.0 && d >= -t.cbrt()) {
            pass = false;
        }
    }
    Ok(Check::new(
        "rate-cost-bounds",
        pass,
        worst,
        format!("w_t - t^(1/3)λ₋ ∈ (0, log 2] and w'_t ∈ (-t^(1/3), 0) on {points} random inputs"),
    ))
}

/// Pointwise double-exponential sandwich around the indicator.
pub fn double_exp_sandwich_check(seed: u64, points: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdeef);
    let mut violations = 0usize;
    for _ in 0..points {
        let x: f64 = rng.gen_range(-25.0..25.0);
        let delta: f64 = rng.gen_range(0.01..3.0);
        let t: f64 = rng.gen_range(0.5..10.0);
        let b: f64 = rng.gen_range(0.05..20.0);
        let ind = if x < 0.0 { 1.0 } else { 0.0 };
        let up = double_exp_proxy(x + delta * t, b);
        if up > ind + (-b * (delta * t).exp()).exp() + 1e-15 {
            violations += 1;
        }
        let lo = double_exp_proxy(x - delta * t, b);
        if lo + 1e-15 < (-b * (-delta * t).exp()).exp() * ind {
            violations += 1;
        }
    }
    Ok(Check::new(
        "rate-double-exp-sandwich",
        violations == 0,
        -(violations as f64),
        format!("indicator sandwich on {points} random (x, δ, t, b), {violations} violations"),
    ))
}

// -------------------------------------------------------------- estimator

/// Unbiasedness bridge, ζ-monotonicity, determinism, the overflow canary,
/// and the variance comparison note.
pub fn estimator_suite(seed: u64, effort: EstimatorEffort) -> Result<SuiteReport> {
    let checks = vec![
        unbiasedness_bridge_check(seed, effort)?,
        zeta_monotonicity_check(seed, effort.threads)?,
        determinism_check(seed, effort.threads)?,
        overflow_canary_check(seed, effort.threads)?,
        variance_note_check(seed, effort.threads)?,
    ];
    Ok(SuiteReport::collect("estimator", seed, checks))
}

fn bridge_config(t: f64, n: usize, seed: u64, threads: Option<usize>) -> Result<EstimatorConfig> {
    let params = ModelParams::new(2.0, 1.0, 1.0)?;
    let mut c = EstimatorConfig::new(params, t, Mode::Plain, n, seed);
    c.riccati_step = 2e-2;
    c.lambda_quadrature.hi = Some(c.threshold() + 18.0 * t.powf(-1.0 / 3.0));
    c.threads = threads;
    Ok(c)
}

/// Plain and tilted log-estimates agree within 2 combined standard errors
/// in ≥ 95% of seed repetitions at `(t, β, L, ζ, α) = (1, 2, 1, 1, 1/6)`.
pub fn unbiasedness_bridge_check(seed: u64, effort: EstimatorEffort) -> Result<Check> {
    let mut agree = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for rep in 0..effort.repetitions {
        let rep_seed = seed.wrapping_add(7919 * rep as u64);
        let mut config = bridge_config(1.0, effort.n_samples, rep_seed, effort.threads)?;
        let plain = estimate_plain(&config)?;
        config.mode = Mode::Tilted;
        let tilted = estimate_tilted(&config)?;
        let gap = (plain.log_estimate - tilted.log_estimate).abs();
        let combined = (plain.std_error_log.powi(2) + tilted.std_error_log.powi(2)).sqrt();
        let sigmas = gap / combined;
        worst = worst.max(sigmas);
        if sigmas <= 2.0 {
            agree += 1;
        }
    }
    let needed = (0.95 * effort.repetitions as f64).ceil() as usize;
    Ok(Check::new(
        "estimator-unbiasedness-bridge",
        agree >= needed,
        agree as f64 - needed as f64,
        format!(
            "{agree}/{} repetitions within 2σ (needed {needed}; worst {worst:.2}σ, n = {})",
            effort.repetitions, effort.n_samples
        ),
    ))
}

/// `log Ĝ` non-increasing in ζ with shared sample streams.
pub fn zeta_monotonicity_check(seed: u64, threads: Option<usize>) -> Result<Check> {
    let mut estimates = Vec::new();
    for &zeta in &[0.5, 1.0, 1.5] {
        let params = ModelParams::new(2.0, 1.0, zeta)?;
        let mut c = EstimatorConfig::new(params, 1.0, Mode::Plain, 64, seed);
        c.riccati_step = 2e-2;
        c.lambda_quadrature.hi = Some(1.5 + 18.0);
        c.threads = threads;
        estimates.push(estimate_plain(&c)?.log_estimate);
    }
    let pass = estimates.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let worst = estimates
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    Ok(Check::new(
        "estimator-zeta-monotonicity",
        pass,
        worst,
        format!("log Ĝ across ζ ∈ {{0.5, 1, 1.5}} with shared streams: {estimates:?}"),
    ))
}

/// Identical `(config, seed)` produce identical reports.
pub fn determinism_check(seed: u64, threads: Option<usize>) -> Result<Check> {
    let config = bridge_config(1.0, 32, seed, threads)?;
    let a = estimate_plain(&config)?;
    let b = estimate_plain(&config)?;
    let pass = a == b;
    Ok(Check::new(
        "estimator-determinism",
        pass,
        if pass { 0.0 } else { -1.0 },
        "two runs of the same (config, seed) agree bit for bit".into(),
    ))
}

/// Aggregation survives `t = 8` without leaving log space.
pub fn overflow_canary_check(seed: u64, threads: Option<usize>) -> Result<Check> {
    let config = bridge_config(8.0, 8, seed, threads)?;
    let report = estimate_plain(&config)?;
    let pass = report.log_estimate.is_finite() && report.normalized.is_finite();
    Ok(Check::new(
        "estimator-overflow-canary",
        pass,
        report.log_estimate,
        format!("t = 8 plain estimate stays finite: log Ĝ = {:.4}", report.log_estimate),
    ))
}

/// Variance comparison at `t = 4` (reported, not asserted).
pub fn variance_note_check(seed: u64, threads: Option<usize>) -> Result<Check> {
    let mut config = bridge_config(4.0, 400, seed, threads)?;
    let plain = estimate_plain(&config)?;
    config.mode = Mode::Tilted;
    let tilted = estimate_tilted(&config)?;
    let margin = plain.std_error_log - tilted.std_error_log;
    Ok(Check::new(
        "estimator-variance-note",
        true,
        margin,
        format!(
            "t = 4 rare-event regime: plain se {:.4}, tilted se {:.4} (informational)",
            plain.std_error_log, tilted.std_error_log
        ),
    ))
}

/// Convergence trend: `t^{-2} log Ĝ` decreasing over `t ∈ {1, 2, 4}` and
/// the `t = 4` value inside a factor-of-two band of the LDP target (a
/// desk-scale band, not an asymptotic claim).
pub fn scan_trend_check(seed: u64, n_samples: usize, threads: Option<usize>) -> Result<Check> {
    let params = ModelParams::new(2.0, 1.0, 1.0)?;
    let configs: Vec<EstimatorConfig> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&t| {
            let mut c = EstimatorConfig::new(params, t, Mode::Tilted, n_samples, seed);
            c.riccati_step = 1e-2;
            c.lambda_quadrature.hi = Some(c.threshold() + 20.0 * t.powf(-1.0 / 3.0));
            c.threads = threads;
            c
        })
        .collect();
    let rows = convergence_scan(&configs)?;
    // the finite-t values sit below the limit and climb toward it, so the
    // monotone-decrease reads on the distance to the target (equivalently
    // on |t^{-2} log Ĝ|)
    let target = rows[0].target;
    let monotone = rows
        .windows(2)
        .all(|w| (w[1].t2_log_estimate - target).abs() < (w[0].t2_log_estimate - target).abs());
    let last = rows.last().unwrap().t2_log_estimate;
    let ratio = last / target;
    let in_band = (0.5..=2.0).contains(&ratio);
    let values: Vec<f64> = rows.iter().map(|r| r.t2_log_estimate).collect();
    Ok(Check::new(
        "estimator-scan-trend",
        monotone && in_band,
        (ratio - 0.5).min(2.0 - ratio),
        format!(
            "t^(-2) log Ĝ over t ∈ {{1,2,4}}: {values:?}, target {target:.6}, t=4 ratio {ratio:.3}"
        ),
    ))
}
