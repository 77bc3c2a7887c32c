/// Probability mass of Binomial(trials, p), coefficients by multiplicative
/// recurrence. Exact enough for the small trial counts used here (v <= 64).
pub(crate) fn pmf(trials: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(trials + 1);
    let mut coeff = 1.0_f64;
    for k in 0..=trials {
        out.push(coeff * p.powi(k as i32) * q.powi((trials - k) as i32));
        coeff = coeff * (trials - k) as f64 / (k + 1) as f64;
    }
    out
}

/// `sum_{k=0}^{m} 1/(k+1) C(m,k) x^k (1-x)^{m-k}`: the chance a given member
/// is picked when choosing uniformly among itself and the other `m`
/// independent members that qualify with probability `x`.
pub(crate) fn inverse_share(m: usize, x: f64) -> f64 {
    pmf(m, x)
        .iter()
        .enumerate()
        .map(|(k, w)| w / (k + 1) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_sums_to_one() {
        for n in 0..=30 {
            for p in [0.0, 0.13, 0.5, 0.99, 1.0] {
                let s: f64 = pmf(n, p).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} p={p} s={s}");
            }
        }
    }

    #[test]
    fn pmf_matches_factorial_coefficients() {
        let row = pmf(6, 0.5);
        let expect = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0].map(|c| c / 64.0);
        for (a, b) in row.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
