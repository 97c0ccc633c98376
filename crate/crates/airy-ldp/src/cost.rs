//! The spectral cost function `w_t(λ) = log(1 + exp(-t^{1/3} λ))` and the
//! double-exponential indicator proxy `exp(-b e^x)`.
//!
//! Both are evaluated on stable branches so that no finite input overflows;
//! every consumer in the crate goes through this module.

/// `w_t(λ) = log(1 + exp(-t^{1/3} λ))`, evaluated without overflow:
/// `log1p(exp(-u))` for `u ≥ 0` and `-u + log1p(exp(u))` for `u < 0`,
/// with `u = t^{1/3} λ`.
pub fn w_t(lambda: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let u = t.cbrt() * lambda;
    if u >= 0.0 {
        (-u).exp().ln_1p()
    } else {
        -u + u.exp().ln_1p()
    }
}

/// `w'_t(λ) = -t^{1/3} σ(-t^{1/3} λ)` with the logistic `σ`; always in
/// `(-t^{1/3}, 0)`.
pub fn w_t_deriv(lambda: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let c = t.cbrt();
    let u = c * lambda;
    let sigma = if u >= 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    };
    -c * sigma
}

/// Negative part `λ₋ = max(-λ, 0)`.
pub fn negative_part(lambda: f64) -> f64 {
    (-lambda).max(0.0)
}

/// Positive part `λ₊ = max(λ, 0)`.
pub fn positive_part(lambda: f64) -> f64 {
    lambda.max(0.0)
}

/// Double-exponential proxy `F(x) = exp(-b e^x)`; underflows to zero for
/// large `x`, use [`log_double_exp_proxy`] in log space.
pub fn double_exp_proxy(x: f64, b: f64) -> f64 {
    debug_assert!(b > 0.0);
    log_double_exp_proxy(x, b).exp()
}

/// `log F(x) = -b e^x` (overflows to `-inf`, never to `+inf`).
pub fn log_double_exp_proxy(x: f64, b: f64) -> f64 {
    debug_assert!(b > 0.0);
    -b * x.exp()
}
