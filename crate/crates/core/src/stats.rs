//! Paired sign test used to compare strategies over seed sweeps.

/// One-sided exact sign test: the probability of at least `wins` successes
/// in `wins + losses` fair coin flips. Ties must be dropped by the caller.
pub fn sign_test_p(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if wins == 0 {
        return 1.0;
    }
    // Accumulate C(n, k) / 2^n in log space so large n stays finite.
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0; // ln C(n, 0)
    let mut p = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            p += (ln_choose + ln_half_n).exp();
        }
    }
    p.min(1.0)
}

/// Counts pairs where `a` beats `b`, pairs where it loses, and ties.
pub fn paired_outcomes<T: PartialOrd>(pairs: impl IntoIterator<Item = (T, T)>) -> (u64, u64, u64) {
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in pairs {
        if a > b {
            wins += 1;
        } else if a < b {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    (wins, losses, ties)
}
