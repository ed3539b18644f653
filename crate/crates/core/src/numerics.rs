//! Small numerical kernels shared across modules: quadrature, finite
//! differences on an interval, polynomial interpolation and extrapolation.

use num_complex::Complex64;

/// Trapezoidal rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite Simpson rule on uniformly spaced samples; a 3/8 panel closes
/// an odd number of intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    if n.is_multiple_of(2) {
        let v = &values[n - 4..];
        let tail = 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
        return simpson(&values[..n - 3], h) + tail;
    }
    let mut s = values[0] + values[n - 1];
    for (i, x) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
    }
    h / 3.0 * s
}

/// Trapezoidal rule on arbitrary abscissae.
pub fn trapezoid_xy(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Cumulative trapezoid, `out[0] = 0`.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    if !xs.is_empty() {
        out.push(0.0);
    }
    for (x, y) in xs.windows(2).zip(ys.windows(2)) {
        acc += 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation of `(xs, ys)` at `x`, clamped at the ends.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    ys[j] * (1.0 - w) + ys[j + 1] * w
}

/// Value and first derivative at `x` of the Lagrange polynomial through
/// `(xs, ys)`.
pub fn lagrange_with_derivative(xs: &[f64], ys: &[Complex64], x: f64) -> (Complex64, Complex64) {
    let n = xs.len();
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let mut l = 1.0;
        let mut dl = 0.0;
        for m in 0..n {
            if m == j {
                continue;
            }
            let denom = xs[j] - xs[m];
            // product rule accumulated incrementally
            dl = dl * (x - xs[m]) / denom + l / denom;
            l *= (x - xs[m]) / denom;
        }
        value += ys[j] * l;
        deriv += ys[j] * dl;
    }
    (value, deriv)
}

/// Neville tableau evaluated at zero. Returns the diagonal extrapolants
/// `T_0, T_1, ..., T_{n-1}` where `T_k` uses the first `k+1` samples.
pub fn extrapolate_to_zero(hs: &[f64], values: &[f64]) -> Vec<f64> {
    let n = hs.len();
    let mut p = values.to_vec();
    let mut diag = Vec::with_capacity(n);
    diag.push(p[0]);
    for level in 1..n {
        for i in 0..n - level {
            let (h_lo, h_hi) = (hs[i], hs[i + level]);
            p[i] = (h_lo * p[i + 1] - h_hi * p[i]) / (h_lo - h_hi);
        }
        diag.push(p[0]);
    }
    diag
}

/// Least-squares line `y = slope*x + intercept`; returns `(slope, intercept, rms residual)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// First derivative of `f` on `lo..hi` (at least 3 samples). Centered
/// fourth order where two neighbours exist on both sides inside the range,
/// one-sided second order at the two ends.
pub fn derivative_on_interval(f: &[Complex64], lo: usize, hi: usize, h: f64) -> Vec<Complex64> {
    let n = hi - lo;
    assert!(n >= 3, "derivative needs at least 3 samples");
    let s = &f[lo..hi];
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-s[i + 2] + 8.0 * s[i + 1] - 8.0 * s[i - 1] + s[i - 2]) / (12.0 * h)
            } else if i + 2 < n {
                (-3.0 * s[i] + 4.0 * s[i + 1] - s[i + 2]) / (2.0 * h)
            } else {
                (3.0 * s[i] - 4.0 * s[i - 1] + s[i - 2]) / (2.0 * h)
            }
        })
        .collect()
}

/// Second derivative on `lo..hi` (at least 4 samples), same stencil layout
/// as [`derivative_on_interval`].
pub fn second_derivative_on_interval(f: &[Complex64], lo: usize, hi: usize, h: f64) -> Vec<Complex64> {
    let n = hi - lo;
    assert!(n >= 4, "second derivative needs at least 4 samples");
    let s = &f[lo..hi];
    let h2 = h * h;
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-s[i + 2] + 16.0 * s[i + 1] - 30.0 * s[i] + 16.0 * s[i - 1] - s[i - 2]) / (12.0 * h2)
            } else if i + 3 < n {
                (2.0 * s[i] - 5.0 * s[i + 1] + 4.0 * s[i + 2] - s[i + 3]) / h2
            } else {
                (2.0 * s[i] - 5.0 * s[i - 1] + 4.0 * s[i - 2] - s[i - 3]) / h2
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_for_cubics() {
        for n in [3usize, 4, 5, 8, 11] {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let ys: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&ys, 0.1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lagrange_recovers_cubic_and_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = |x: f64| Complex64::new(x * x * x - 2.0 * x, 0.5 * x * x);
        let ys: Vec<_> = xs.iter().map(|&x| f(x)).collect();
        let (v, d) = lagrange_with_derivative(&xs, &ys, 0.3);
        assert!((v - f(0.3)).norm() < 1e-12);
        let exact_d = Complex64::new(3.0 * 0.09 - 2.0, 0.3);
        assert!((d - exact_d).norm() < 1e-12);
    }

    #[test]
    fn extrapolation_exact_for_polynomials() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let vals: Vec<f64> = hs.iter().map(|h| 3.0 + 2.0 * h - 7.0 * h * h).collect();
        let diag = extrapolate_to_zero(&hs, &vals);
        assert!((diag[2] - 3.0).abs() < 1e-12);
        assert!((diag[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_line_recovers_slope() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (s, c, r) = fit_line(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn derivative_stencils_on_quadratic() {
        let h = 0.1;
        let f: Vec<Complex64> = (0..10)
            .map(|i| {
                let x = i as f64 * h;
                Complex64::new(x * x, -x)
            })
            .collect();
        let d = derivative_on_interval(&f, 0, 10, h);
        let d2 = second_derivative_on_interval(&f, 0, 10, h);
        for i in 0..10 {
            let x = i as f64 * h;
            assert!((d[i] - Complex64::new(2.0 * x, -1.0)).norm() < 1e-12);
            assert!((d2[i] - Complex64::new(2.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn cumulative_matches_total() {
        let xs = [0.0, 0.5, 1.5, 2.0];
        let ys = [1.0, 2.0, 0.0, 4.0];
        let c = cumulative_trapezoid(&xs, &ys);
        assert_eq!(c.len(), 4);
        assert!((c[3] - trapezoid_xy(&xs, &ys)).abs() < 1e-15);
    }
}
