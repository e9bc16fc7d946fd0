//! Small numeric helpers shared across modules.

/// Kahan compensated summation over a fixed iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in values {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `(sum_i exp(p * logs[i]))^(1/p)` computed in the log domain, returning the
/// log of the result. Stable for exponents well below 1.
pub fn log_power_sum(logs: &[f64], p: f64) -> f64 {
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum = kahan_sum(logs.iter().map(|&l| (p * (l - top)).exp()));
    top + sum.ln() / p
}

/// Derived per-trial seed: splitmix64 step over `seed ^ index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
