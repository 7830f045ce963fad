//! Bessel functions of the first kind and their positive zeros.
//!
//! Small arguments use the ascending series. Larger arguments use Steed's
//! method: the continued fraction for `J'_ν/J_ν`, downward recurrence to an
//! order `μ ∈ [ν − ⌊ν⌋ …]` with `|μ| ≤ 1/2`, the complex continued fraction for
//! `(J'_μ + iY'_μ)/(J_μ + iY_μ)`, and the Wronskian to fix the scale.

use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::brent;

/// Upper end of the supported argument range.
pub const MAX_ARGUMENT: f64 = 200.0;
const SERIES_LIMIT: f64 = 12.0;
const SERIES_MAX_TERMS: usize = 200;
const FPMIN: f64 = 1e-300;
const MAX_CF_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselZero {
    pub nu: f64,
    pub k: usize,
    pub value: f64,
    /// `|J_ν(value)|`
    pub residual: f64,
}

/// `J_ν(x)` for `ν ≥ 0`, `0 ≤ x ≤ 200`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(PpwError::Range(format!("order must be nonnegative, got {nu}")));
    }
    if !(x >= 0.0) || x > MAX_ARGUMENT {
        return Err(PpwError::Range(format!(
            "argument {x} outside [0, {MAX_ARGUMENT}]"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x <= SERIES_LIMIT || x * x < 0.5 * (nu + 1.0) {
        Ok(series(nu, x))
    } else {
        steed(nu, x)
    }
}

/// Ascending series `Σ (−1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1))`.
fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let lead = (nu * half.ln() - statrs::function::gamma::ln_gamma(nu + 1.0)).exp();
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn steed(nu: f64, x: f64) -> Result<f64> {
    let nl = ((nu - x + 1.5).floor()).max(0.0) as usize;
    let mu = nu - nl as f64;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / std::f64::consts::PI;

    // J'_ν/J_ν by the modified Lentz algorithm; track the sign of J_ν.
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAX_CF_ITER {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PpwError::Numeric(format!("J'/J continued fraction diverged at x = {x}")));
    }

    let mut jl = isign * 1e-30;
    let mut jpl = h * jl;
    let jl_top = jl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let jt = fact * jl + jpl;
        fact -= xi;
        jpl = fact * jt - jl;
        jl = jt;
        if jl.abs() > 1e250 {
            return Err(PpwError::Numeric("downward recurrence overflow".into()));
        }
    }
    if jl == 0.0 {
        jl = f64::EPSILON;
    }
    let f = jpl / jl;

    // p + iq = (J'_μ + iY'_μ)/(J_μ + iY_μ)
    let mut a = 0.25 - mu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    let mut converged = false;
    for i in 2..MAX_CF_ITER {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PpwError::Numeric(format!("complex continued fraction diverged at x = {x}")));
    }
    let gam = (p - f) / q;
    let jmu = (w / ((p - f) * gam + q)).sqrt().copysign(jl);
    Ok(jl_top * (jmu / jl))
}

/// `J'_ν(x) = (ν/x) J_ν(x) − J_{ν+1}(x)`.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(if nu == 1.0 {
            0.5
        } else if nu == 0.0 || nu > 1.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(nu / x * bessel_j(nu, x)? - bessel_j(nu + 1.0, x)?)
}

/// The `k`th positive zero `j_{ν,k}` of `J_ν`, `k ≥ 1`.
pub fn bessel_zero(nu: f64, k: usize) -> Result<BesselZero> {
    if k == 0 || k > 20 {
        return Err(PpwError::Range(format!("zero index must be in 1..=20, got {k}")));
    }
    if !(0.0..=50.0).contains(&nu) {
        return Err(PpwError::Range(format!("order must be in [0, 50], got {nu}")));
    }
    const STEP: f64 = 0.5;
    // J_ν > 0 on (0, j_{ν,1}) and j_{ν,1} > ν.
    let mut lo = nu.max(STEP);
    let mut f_lo = bessel_j(nu, lo)?;
    let mut found = 0;
    while lo + STEP <= MAX_ARGUMENT {
        let hi = lo + STEP;
        let f_hi = bessel_j(nu, hi)?;
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            found += 1;
            if found == k {
                let root = brent(|x| bessel_j(nu, x), lo, hi, 1e-15, 200)?;
                let root = newton_polish(nu, root)?;
                let residual = bessel_j(nu, root)?.abs();
                return Ok(BesselZero { nu, k, value: root, residual });
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(PpwError::Numeric(format!(
        "zero {k} of J_{nu} not bracketed below x = {MAX_ARGUMENT}"
    )))
}

fn newton_polish(nu: f64, mut x: f64) -> Result<f64> {
    for _ in 0..3 {
        let f = bessel_j(nu, x)?;
        let df = bessel_j_prime(nu, x)?;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x)
}

/// `j²_{n/2,1} / j²_{n/2−1,1}`: the ratio `λ₂/λ₁` of the Dirichlet
/// Laplacian on any ball in `ℝⁿ`.
pub fn ppw_constant(n: usize) -> Result<f64> {
    if !(2..=20).contains(&n) {
        return Err(PpwError::Range(format!("dimension must be in 2..=20, got {n}")));
    }
    let upper = bessel_zero(n as f64 / 2.0, 1)?.value;
    let lower = bessel_zero(n as f64 / 2.0 - 1.0, 1)?.value;
    Ok((upper / lower).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 30-digit arbitrary precision evaluation.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (0.0, 0.5, 0.938_469_807_240_812_9),
        (0.0, 5.0, -0.177_596_771_314_338_3),
        (0.0, 12.5, 0.146_884_054_700_421_1),
        (0.0, 30.0, -0.086_367_983_581_040_21),
        (0.0, 100.0, 0.019_985_850_304_223_12),
        (0.0, 199.5, -0.039_613_637_334_785_15),
        (0.5, 20.0, 0.162_880_763_855_029_9),
        (1.0, 3.7, 0.053_833_987_745_461_79),
        (1.0, 57.3, -0.002_900_797_342_395_092),
        (2.5, 15.0, -0.100_880_349_790_011_8),
        (7.3, 40.0, -0.126_012_240_702_046_3),
        (10.0, 12.1, 0.298_020_362_871_994_5),
        (10.0, 150.0, -0.020_612_788_945_218_59),
        (25.0, 30.0, 0.084_292_740_643_031_73),
        (50.0, 60.0, -0.137_982_731_485_352_1),
        (50.0, 120.0, 0.042_320_263_440_220_08),
        (3.5, 0.01, 7.598_858_363_056_526e-10),
    ];

    #[test]
    fn matches_reference_values() {
        for &(nu, x, want) in REFERENCE {
            let got = bessel_j(nu, x).unwrap();
            assert!((got - want).abs() <= 1e-12, "J_{nu}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn origin_values() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(matches!(bessel_j(0.0, 250.0), Err(PpwError::Range(_))));
        assert!(matches!(bessel_j(-1.0, 1.0), Err(PpwError::Range(_))));
    }

    #[test]
    fn series_and_steed_agree_on_overlap() {
        for nu in [0.0, 0.5, 1.0, 3.3, 8.0] {
            for x in [2.0, 5.0, 9.0, 12.0] {
                let a = series(nu, x);
                let b = steed(nu, x).unwrap();
                assert!((a - b).abs() < 1e-12, "nu={nu} x={x}: {a} vs {b}");
            }
        }
    }

    /// Independent route: truncated power series plus plain bisection.
    fn series_oracle_zero(nu: f64, lo: f64, hi: f64) -> f64 {
        let j = |x: f64| {
            let mut term = (0.5 * x).powf(nu) / statrs::function::gamma::gamma(nu + 1.0);
            let mut sum = term;
            for k in 1..80 {
                term *= -(0.25 * x * x) / (k as f64 * (k as f64 + nu));
                sum += term;
            }
            sum
        };
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if j(a).signum() == j(m).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn first_zeros_match_series_oracle() {
        let z0 = bessel_zero(0.0, 1).unwrap();
        assert!((z0.value - series_oracle_zero(0.0, 2.0, 3.0)).abs() < 1e-13);
        assert!((z0.value - 2.404_825_557_695_773).abs() < 1e-14);
        assert!(z0.residual <= 1e-12);
        assert!(bessel_j(0.0, 2.404_825_557_695_773).unwrap().abs() <= 1e-12);
        let z1 = bessel_zero(1.0, 1).unwrap();
        assert!((z1.value - series_oracle_zero(1.0, 3.5, 4.0)).abs() < 1e-13);
        assert!((z1.value - 3.831_705_970_207_512).abs() < 1e-14);
    }

    #[test]
    fn higher_zeros_match_reference() {
        let cases = [
            (0.0, 5, 14.930_917_708_487_786),
            (0.5, 2, 2.0 * std::f64::consts::PI),
            (1.5, 5, 17.220_755_271_930_768),
            (2.5, 1, 5.763_459_196_894_55),
            (10.0, 2, 18.433_463_666_966_583),
            (50.0, 20, 130.918_153_721_952_16),
        ];
        for (nu, k, want) in cases {
            let z = bessel_zero(nu, k).unwrap();
            assert!((z.value - want).abs() < 1e-11, "j_({nu},{k}) = {} want {want}", z.value);
            assert!(z.residual <= 1e-12);
        }
    }

    #[test]
    fn zeros_increase_in_k() {
        for nu in [0.0, 0.5, 1.0] {
            let a = bessel_zero(nu, 1).unwrap().value;
            let b = bessel_zero(nu, 2).unwrap().value;
            assert!(b > a);
        }
    }

    #[test]
    fn classical_constant() {
        let c2 = ppw_constant(2).unwrap();
        let oracle = (3.831_705_970_207_512f64 / 2.404_825_557_695_773).powi(2);
        assert!((c2 - oracle).abs() < 1e-12);
        assert!((c2 - 2.539).abs() < 1e-3);
        for n in 2..=20 {
            assert!(ppw_constant(n).unwrap() > 1.0);
        }
        assert!(ppw_constant(1).is_err());
    }
}
