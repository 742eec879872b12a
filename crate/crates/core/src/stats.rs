//! Small statistical helpers: the exact binomial test used by verification and
//! the k-sigma frequency checks used by reports and tests.

use statrs::function::factorial::ln_binomial;

/// Two-sided exact binomial p-value for `successes` out of `trials` against
/// success probability 1/2.
///
/// Sums the probability of every outcome no more likely than the observed
/// one; by symmetry that is `min(1, 2 · P(X ≤ min(k, n − k)))`. Returns 1 for
/// zero trials.
pub fn binomial_two_sided_half(successes: u64, trials: u64) -> f64 {
    assert!(successes <= trials, "successes {successes} > trials {trials}");
    if trials == 0 {
        return 1.0;
    }
    let m = successes.min(trials - successes);
    if 2 * m >= trials {
        return 1.0;
    }
    // Sum pmf(j) for j ≤ m relative to pmf(m), walking down the tail.
    let mut ratio = 1.0_f64;
    let mut sum = 1.0_f64;
    for j in (1..=m).rev() {
        ratio *= j as f64 / (trials - j + 1) as f64;
        sum += ratio;
        if ratio < sum * f64::EPSILON * 1e-3 {
            break;
        }
    }
    let ln_tail = ln_binomial(trials, m) - trials as f64 * std::f64::consts::LN_2 + sum.ln();
    (2.0 * ln_tail.exp()).min(1.0)
}

/// Binomial standard deviation `sqrt(n p (1 − p))`.
pub fn binomial_sigma(trials: u64, p: f64) -> f64 {
    (trials as f64 * p * (1.0 - p)).sqrt()
}

/// Whether `count` lies within `k` binomial standard deviations of `trials · p`.
///
/// For `p` of exactly 0 or 1 the band collapses and the count must match exactly.
pub fn within_sigmas(count: u64, trials: u64, p: f64, k: f64) -> bool {
    let expected = trials as f64 * p;
    (count as f64 - expected).abs() <= k * binomial_sigma(trials, p)
}
