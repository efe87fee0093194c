//! Binomial coefficients.

/// Exact C(n, k); zero when k > n. Panics on u64 overflow, which needs n
/// far beyond the 64-user limit.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflow")
}

/// C(n, k) as a float; switches to log-gamma above n = 40.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 40 {
        return binomial(n, k) as f64;
    }
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp()
}
