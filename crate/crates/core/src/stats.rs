//! Small statistics helpers: KS distance, quantiles, batched means,
//! periodic trapezoid quadrature.

/// Sorts a sample ascending. NaNs sort last.
pub fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n − F|` for an already
/// sorted sample.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted_xs: &[f64], cdf: F) -> f64 {
    let n = sorted_xs.len() as f64;
    sorted_xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Linear-interpolated quantile of a sorted sample.
pub fn quantile(sorted_xs: &[f64], q: f64) -> f64 {
    assert!(!sorted_xs.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted_xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted_xs[lo] * (1.0 - w) + sorted_xs[hi] * w
}

/// Mean and standard error of a sequence of batch statistics.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Trapezoid rule on `[a, b]` with panel doubling until the relative
/// change drops below `rel_tol·|I| + abs_tol`. Converges geometrically for smooth
/// integrands that are periodic over the interval (or even extensions
/// thereof, as for functions of `cos θ` on `[0, π]`).
///
/// Returns `None` if the integrand produces a non-finite value or the
/// panel budget is exhausted.
pub fn trapezoid_doubling<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_level: u32,
) -> Option<f64> {
    let h0 = b - a;
    let mut sum = 0.5 * (f(a) + f(b));
    if !sum.is_finite() {
        return None;
    }
    let mut n = 1usize;
    let mut prev = sum * h0;
    for _ in 0..max_level {
        let h = h0 / n as f64;
        let mut add = 0.0;
        for k in 0..n {
            add += f(a + (k as f64 + 0.5) * h);
        }
        if !add.is_finite() {
            return None;
        }
        sum += add;
        n *= 2;
        let est = sum * h0 / n as f64;
        if n >= 16 && (est - prev).abs() <= rel_tol * est.abs() + abs_tol.max(f64::MIN_POSITIVE) {
            return Some(est);
        }
        prev = est;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ks_of_perfect_grid_is_half_step() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let ks = ks_statistic(&xs, |x| x);
        assert!((ks - 0.005).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&xs, 0.0), 0.0);
        assert_eq!(quantile(&xs, 1.0), 3.0);
        assert!((quantile(&xs, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn batch_se() {
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn trapezoid_on_cosine_integrands() {
        // ∫_0^π 1/(2 - cos θ) dθ = π/√3
        let v = trapezoid_doubling(|t| 1.0 / (2.0 - t.cos()), 0.0, PI, 1e-14, 0.0, 20).unwrap();
        assert!((v - PI / 3f64.sqrt()).abs() < 1e-13);
        assert!(trapezoid_doubling(|t| 1.0 / t, 0.0, 1.0, 1e-12, 0.0, 20).is_none());
    }
}
