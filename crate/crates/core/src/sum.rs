//! Order-fixed pairwise summation.
//!
//! Every reduction in the crate goes through these helpers so that results do
//! not depend on how work was split across threads.

use num_complex::Complex64;

const BLOCK: usize = 32;

pub fn pairwise(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

pub fn pairwise_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_complex(&values[..mid]) + pairwise_complex(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise(&v), 55.0);
    }

    #[test]
    fn beats_naive_on_long_input() {
        let v = vec![0.1; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        let naive: f64 = v.iter().sum();
        assert!((pairwise(&v) - exact).abs() <= (naive - exact).abs());
        assert!((pairwise(&v) - exact).abs() < 1e-8);
    }
}
