//! Small numeric helpers shared by the selection, simulation and pipeline
//! modules.

/// Linear-interpolation quantile (R type 7) of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&sorted, p)
}

/// Same as [`quantile`] but assumes ascending order.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.iter().sum::<f64>() / values.len() as f64
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorr(values: &[f64]) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let m = mean(values);
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..n {
        let d = values[t] - m;
        den += d * d;
        if t + 1 < n {
            num += d * (values[t + 1] - m);
        }
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-12);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile(&v, 0.75) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn singleton_quantile() {
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn quantile_is_permutation_invariant() {
        let a = [3.0, 1.0, 4.0, 2.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        for p in [0.1, 0.25, 0.5, 0.9] {
            assert_eq!(quantile(&a, p), quantile(&b, p));
        }
    }
}
