//! Small numerical kernels shared by the solvers: root bracketing, quadrature
//! on uniform grids, finite differences and interpolation.

use crate::error::{PpwError, Result};

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

/// Brent's method on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`.
///
/// Stops when the bracket is narrower than `xtol + 4·eps·|x|` or `f` hits zero.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(PpwError::Numeric(format!(
            "brent: no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(PpwError::Numeric(format!(
        "brent: no convergence after {max_iter} iterations (bracket width {})",
        (c - b).abs()
    )))
}

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals is closed with the 3/8 rule on the last three.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (f[0] + f[1]),
        3 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals % 2 == 0 {
                (n - 1, 0.0)
            } else {
                let k = n - 4;
                (
                    k,
                    3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]),
                )
            };
            let mut s = f[0] + f[even_end];
            for (i, v) in f.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0 + tail
        }
    }
}

/// Running integral `∫_{x_0}^{x_i} f` on uniform samples, fourth order:
/// each interval uses the four nearest samples, one-sided at the ends.
pub fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let incr = if n < 4 {
            0.5 * h * (f[i - 1] + f[i])
        } else if i == 1 {
            h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if i == n - 1 {
            h * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) / 24.0
        } else {
            h * (-f[i - 2] + 13.0 * f[i - 1] + 13.0 * f[i] - f[i + 1]) / 24.0
        };
        out[i] = out[i - 1] + incr;
    }
    out
}

/// First derivative of uniformly spaced samples, fourth order in the
/// interior and one-sided fourth order at the ends.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative needs at least five samples");
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    let fwd = |k: usize| {
        (-25.0 * f[k] + 48.0 * f[k + 1] - 36.0 * f[k + 2] + 16.0 * f[k + 3] - 3.0 * f[k + 4])
            / (12.0 * h)
    };
    let bwd = |k: usize| {
        (25.0 * f[k] - 48.0 * f[k - 1] + 36.0 * f[k - 2] - 16.0 * f[k - 3] + 3.0 * f[k - 4])
            / (12.0 * h)
    };
    d[0] = fwd(0);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    d[n - 1] = bwd(n - 1);
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5])
        / (12.0 * h);
    d
}

/// Second derivative of uniformly spaced samples, fourth order where a
/// centred five-point stencil fits, second order at the two outer points.
pub fn second_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "second_derivative needs at least five samples");
    let h2 = h * h;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
            / (12.0 * h2);
    }
    d[1] = (f[0] - 2.0 * f[1] + f[2]) / h2;
    d[n - 2] = (f[n - 3] - 2.0 * f[n - 2] + f[n - 1]) / h2;
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    d
}

/// Piecewise linear interpolation on increasing abscissae, clamped at the ends.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Quintic Hermite interpolation of a function from its values, first and
/// second derivatives at the ends of one interval. Returns `(f, f')` at
/// `a + t·h`, `t ∈ [0, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn hermite5(t: f64, h: f64, f0: f64, d0: f64, s0: f64, f1: f64, d1: f64, s1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    let dh00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let dh10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let dh20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let dh01 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let dh11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let dh21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let hh = h * h;
    let f = h00 * f0 + h10 * h * d0 + h20 * hh * s0 + h01 * f1 + h11 * h * d1 + h21 * hh * s1;
    let df = (dh00 * f0 + dh10 * h * d0 + dh20 * hh * s0 + dh01 * f1 + dh11 * h * d1 + dh21 * hh * s1)
        / h;
    (f, df)
}

/// Volume `C_n` of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface area of the unit sphere `S^{n-1}`, i.e. `n·C_n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Least-squares polynomial fit of degree `deg`; coefficients in increasing
/// order of power.
pub fn polyfit(xs: &[f64], ys: &[f64], deg: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() <= deg {
        return Err(PpwError::Contract(format!(
            "polyfit of degree {deg} needs more than {deg} paired samples"
        )));
    }
    let a = nalgebra::DMatrix::from_fn(xs.len(), deg + 1, |i, j| xs[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(ys);
    let c = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| PpwError::Numeric(format!("polyfit: {e}")))?;
    Ok(c.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn brent_finds_cosine_root() {
        let x = brent(|x| Ok(x.cos()), 1.0, 2.0, 1e-15, 100).unwrap();
        assert_relative_eq!(x, PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn simpson_handles_both_parities() {
        for n in [21usize, 22, 101, 102] {
            let xs = linspace(0.0, PI, n);
            let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            assert_relative_eq!(simpson(&f, xs[1] - xs[0]), 2.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn cumulative_integral_of_cosine() {
        let xs = linspace(0.0, 2.0, 401);
        let f: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        let c = cumulative_integral(&f, xs[1] - xs[0]);
        for (x, v) in xs.iter().zip(&c) {
            assert!((v - x.sin()).abs() < 1e-9, "{x}: {v}");
        }
    }

    #[test]
    fn derivatives_of_exponential() {
        let xs = linspace(0.0, 1.0, 201);
        let h = xs[1] - xs[0];
        let f: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let d1 = derivative(&f, h);
        let d2 = second_derivative(&f, h);
        for i in 0..xs.len() {
            assert!((d1[i] - f[i]).abs() < 1e-8);
            assert!((d2[i] - f[i]).abs() < 1e-3);
        }
        for i in 2..xs.len() - 2 {
            assert!((d2[i] - f[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn hermite_reproduces_quintic() {
        let p = |x: f64| 1.0 + x - 2.0 * x.powi(3) + 0.5 * x.powi(5);
        let dp = |x: f64| 1.0 - 6.0 * x * x + 2.5 * x.powi(4);
        let ddp = |x: f64| -12.0 * x + 10.0 * x.powi(3);
        let (a, b) = (0.3, 0.8);
        let h = b - a;
        for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let (f, df) = hermite5(t, h, p(a), dp(a), ddp(a), p(b), dp(b), ddp(b));
            assert_relative_eq!(f, p(a + t * h), epsilon = 1e-13);
            assert_relative_eq!(df, dp(a + t * h), epsilon = 1e-12);
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let xs = linspace(-1.0, 2.0, 30);
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x + 0.25 * x * x).collect();
        let c = polyfit(&xs, &ys, 2).unwrap();
        for (a, b) in c.iter().zip([1.5, -2.0, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(polyfit(&xs[..2], &ys[..2], 2).is_err());
    }
}
