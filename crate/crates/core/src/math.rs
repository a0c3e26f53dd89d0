//! Special functions and simplex helpers shared by every update equation.

use crate::error::{ClsmError, Result};

pub use statrs::function::gamma::ln_gamma;

/// Digamma function `ψ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(ClsmError::Domain(format!("digamma requires a positive finite argument, got {x}")));
    }
    Ok(digamma_pos(x))
}

/// Digamma without argument checks. Callers guarantee `x > 0`.
///
/// Shifts the argument upward with `ψ(x) = ψ(x + 1) - 1/x` until `x >= 6`,
/// then evaluates the asymptotic expansion through the `x^-12` term.
#[inline]
pub(crate) fn digamma_pos(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// `E[log x_i]` under `Dirichlet(params)`: `ψ(params_i) - ψ(Σ params)`.
pub fn dirichlet_expect_log(params: &[f64]) -> Result<Vec<f64>> {
    if params.is_empty() {
        return Err(ClsmError::Domain("dirichlet_expect_log of an empty vector".into()));
    }
    if let Some(bad) = params.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(ClsmError::Domain(format!("Dirichlet parameters must be positive, got {bad}")));
    }
    let mut out = vec![0.0; params.len()];
    dirichlet_expect_log_into(params, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn dirichlet_expect_log_into(params: &[f64], out: &mut [f64]) {
    let total = digamma_pos(params.iter().sum());
    for (o, &p) in out.iter_mut().zip(params) {
        *o = digamma_pos(p) - total;
    }
}

/// `(E[log β], E[log(1 - β)])` under `Beta(a, b)`.
pub fn beta_expect_logs(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(ClsmError::Domain(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    let total = digamma_pos(a + b);
    Ok((digamma_pos(a) - total, digamma_pos(b) - total))
}

/// Stable `log Σ exp(v_i)`. Returns `-inf` when every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Maps log-weights onto the probability simplex (softmax).
pub fn normalize_log_simplex(log_weights: &[f64]) -> Result<Vec<f64>> {
    let mut out = log_weights.to_vec();
    normalize_log_in_place(&mut out)?;
    Ok(out)
}

/// In-place softmax. Fails when the input is empty, contains NaN or `+inf`,
/// or every entry is `-inf`.
pub fn normalize_log_in_place(values: &mut [f64]) -> Result<()> {
    if values.is_empty() {
        return Err(ClsmError::Degenerate("cannot normalize an empty vector".into()));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(ClsmError::Degenerate("non-finite log-weight".into()));
    }
    if max == f64::NEG_INFINITY {
        return Err(ClsmError::Degenerate("all log-weights are -inf".into()));
    }
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
    Ok(())
}

/// Rescales a non-negative vector to sum to one. Returns `false` (leaving the
/// input untouched) when the total is zero or not finite.
pub(crate) fn normalize_in_place(values: &mut [f64]) -> bool {
    let total: f64 = values.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return false;
    }
    values.iter_mut().for_each(|v| *v /= total);
    true
}

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Log normalizer of a Dirichlet: `Σ ln Γ(a_i) - ln Γ(Σ a_i)`.
pub(crate) fn ln_multivariate_beta(params: &[f64]) -> f64 {
    params.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(params.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_known_values() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-12);
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-12);
        assert_abs_diff_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -0.5772156649, epsilon = 1e-10);
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 0.4227843351, epsilon = 1e-10);
        assert_abs_diff_eq!(digamma(0.5).unwrap(), -1.9635100260, epsilon = 1e-10);
    }

    #[test]
    fn digamma_small_and_large_arguments() {
        // ψ(x) = ψ(1 + x) - 1/x, and ψ(1 + x) ≈ -γ + ζ(2)x for tiny x
        let x = 1e-6;
        let expected = -EULER_GAMMA + std::f64::consts::PI.powi(2) / 6.0 * x - 1.0 / x;
        assert_abs_diff_eq!(digamma(x).unwrap(), expected, epsilon = 1e-9);
        // ψ(x) ≈ ln x - 1/(2x) for huge x
        let x = 1e8;
        assert_abs_diff_eq!(digamma(x).unwrap(), x.ln() - 0.5 / x, epsilon = 1e-12);
    }

    #[test]
    fn digamma_rejects_non_positive() {
        assert!(matches!(digamma(0.0), Err(ClsmError::Domain(_))));
        assert!(matches!(digamma(-1.5), Err(ClsmError::Domain(_))));
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn dirichlet_expectations() {
        let v = dirichlet_expect_log(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-12);
        let v = dirichlet_expect_log(&[2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(v[0], -5.0 / 6.0, epsilon = 1e-12);
        let v = dirichlet_expect_log(&[3.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-14);
        assert!(dirichlet_expect_log(&[]).is_err());
        assert!(dirichlet_expect_log(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn beta_expectations() {
        let (a, b) = beta_expect_logs(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(a, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -1.0, epsilon = 1e-12);
        let (a, b) = beta_expect_logs(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(a, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -1.5, epsilon = 1e-12);
        let (a, b) = beta_expect_logs(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(a, -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -0.5, epsilon = 1e-12);
        assert!(beta_expect_logs(0.0, 1.0).is_err());
    }

    #[test]
    fn softmax_examples() {
        let v = normalize_log_simplex(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        let v = normalize_log_simplex(&[3f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.25, epsilon = 1e-15);
        let v = normalize_log_simplex(&[1000.0, 1000.0 + 4f64.ln()]).unwrap();
        assert_abs_diff_eq!(v[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.8, epsilon = 1e-12);
        let v = normalize_log_simplex(&[-700.0, 700.0]).unwrap();
        assert_abs_diff_eq!(v.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn softmax_degenerate() {
        assert!(matches!(
            normalize_log_simplex(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            Err(ClsmError::Degenerate(_))
        ));
        assert!(normalize_log_simplex(&[]).is_err());
        assert!(normalize_log_simplex(&[0.0, f64::NAN]).is_err());
        let v = normalize_log_simplex(&[f64::NEG_INFINITY, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn logsumexp_matches_direct() {
        let v = [0.1, -2.0, 3.5];
        let direct = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(logsumexp(&v), direct, epsilon = 1e-14);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn digamma_recurrence(x in 0.1f64..100.0) {
            let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            prop_assert!((lhs - 1.0 / x).abs() < 1e-9);
        }

        #[test]
        fn softmax_shift_invariant(v in prop::collection::vec(-300.0f64..300.0, 1..12), c in -400.0f64..400.0) {
            let a = normalize_log_simplex(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = normalize_log_simplex(&shifted).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn dirichlet_permutation_equivariant(v in prop::collection::vec(0.01f64..50.0, 1..8), seed in any::<u64>()) {
            let out = dirichlet_expect_log(&v).unwrap();
            let mut idx: Vec<usize> = (0..v.len()).collect();
            // deterministic shuffle from the seed
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let permuted: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            let out_p = dirichlet_expect_log(&permuted).unwrap();
            for (j, &i) in idx.iter().enumerate() {
                prop_assert!((out_p[j] - out[i]).abs() < 1e-12);
            }
            if v.len() > 1 {
                prop_assert!(out.iter().all(|x| *x < 0.0));
            }
        }

        #[test]
        fn beta_swap_symmetry(a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let (x, y) = beta_expect_logs(a, b).unwrap();
            let (y2, x2) = beta_expect_logs(b, a).unwrap();
            prop_assert!((x - x2).abs() < 1e-12 && (y - y2).abs() < 1e-12);
        }
    }
}
