//! The Riccati picture of the ratio `g = z₂/z₁` of the first two radial
//! eigenfunctions of a ball: `q = r g'/g`, `p = z₁'/z₁`, the quadratic `T`
//! whose zero set controls `q`, and the algebraic constants around it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::{brent, derivative, linspace, polyfit};
use crate::radial::{BallProblem, EigenPair, SmoothEigenfunction};

/// Part of `(0, R₁)` covered by the diagnostic grid. The quotients `g`, `q`
/// and `p` are 0/0 or ∞/∞ at the two ends and are extrapolated there.
const WINDOW: (f64, f64) = (0.01, 0.99);
/// Fit interval, relative to `R₁`, for the behaviour of `q` at the origin.
const ORIGIN_FIT: (f64, f64) = (0.01, 0.05);
const BOUNDARY_FIT: (f64, f64) = (0.95, 0.99);
/// Slack for the sign and monotonicity facts.
pub const FACT_SLACK: f64 = 1e-6;
pub const T_SCAN_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiccatiFacts {
    /// `−ε ≤ q ≤ 1 + ε` on the grid.
    pub q_in_01: bool,
    /// `q' ≤ ε` on the grid.
    pub q_decreasing: bool,
    #[serde(rename = "B_decreasing")]
    pub b_decreasing: bool,
    pub g_increasing: bool,
}

impl RiccatiFacts {
    pub fn all(&self) -> bool {
        self.q_in_01 && self.q_decreasing && self.b_decreasing && self.g_increasing
    }
}

/// Sampled Riccati quantities of a ball problem on `[0.01 R₁, 0.99 R₁]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiDiagnostics {
    pub n: usize,
    pub radius: f64,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    /// `B = g'² + (n−1) g²/r²`.
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub q: Vec<f64>,
    /// `q'` by finite differences of the sampled `q`.
    pub q_prime: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `Ṽ(0)`.
    pub v0: f64,
    /// `E = λ₂ − λ₁`.
    pub e: f64,
    /// `ν = n − 2`.
    pub nu: f64,
    /// Largest pointwise defect of `q' = (λ₁−λ₂) r + (1−q)(q+n−1)/r − 2qp`,
    /// relative to the sum of the magnitudes of its terms.
    pub residual_ric_q: f64,
    /// Same for `p' + p² + (n−1)p/r + λ₁ − Ṽ = 0`.
    pub residual_ric_p: f64,
    /// `q(0⁺)` and `q(R₁⁻)` extrapolated from the grid.
    pub q_origin: f64,
    pub q_boundary: f64,
    /// `g(R₁) = z₂'(R₁)/z₁'(R₁)`.
    pub g_boundary: f64,
    pub facts: RiccatiFacts,
}

impl RiccatiDiagnostics {
    /// `T(r_i, y)` at grid index `i`.
    pub fn t_at(&self, i: usize, y: f64) -> f64 {
        t_value(self.n, self.e, y, self.r[i], self.p[i])
    }

    /// Largest pointwise `|T(r, q(r)) − q'(r)|` relative to the size of the
    /// terms of `T`.
    pub fn t_of_q_defect(&self) -> f64 {
        (0..self.r.len())
            .map(|i| {
                let (r, q, p) = (self.r[i], self.q[i], self.p[i]);
                let s = t_scale(self.n, self.e, q, r, p) + self.q_prime[i].abs();
                (self.t_at(i, q) - self.q_prime[i]).abs() / s
            })
            .fold(0.0, f64::max)
    }
}

fn t_value(n: usize, e: f64, y: f64, r: f64, p: f64) -> f64 {
    let nu = n as f64 - 2.0;
    let n_y = y * y - n as f64 + 1.0;
    -2.0 * p * y - (nu * y + n_y) / r - e * r
}

fn t_scale(n: usize, e: f64, y: f64, r: f64, p: f64) -> f64 {
    let nu = n as f64 - 2.0;
    let n_y = y * y - n as f64 + 1.0;
    (2.0 * p * y).abs() + ((nu * y + n_y) / r).abs() + (e * r).abs()
}

pub(crate) fn check_pair(prob: &BallProblem, z1: &EigenPair, z2: &EigenPair) -> Result<()> {
    if z1.ell != 0 || z1.k != 1 || z2.ell != 1 || z2.k != 1 {
        return Err(PpwError::Contract(
            "diagnostics need the ground state and the first ℓ = 1 eigenfunction".into(),
        ));
    }
    if z1.r.len() != z2.r.len() || (z1.radius() - z2.radius()).abs() > 1e-12 * z1.radius() {
        return Err(PpwError::Contract("eigenfunctions sampled on different grids".into()));
    }
    if (z1.radius() - prob.radius).abs() > 1e-12 * prob.radius {
        return Err(PpwError::Contract("eigenfunctions do not belong to this ball".into()));
    }
    if z1.r.len() < 200 {
        return Err(PpwError::Contract("diagnostics need at least 200 samples".into()));
    }
    let m = z1.r.len();
    if let Some(i) = (1..m - 1).find(|&i| !(z1.z[i] > 0.0)) {
        return Err(PpwError::Contract(format!(
            "ground state is not positive at r = {}",
            z1.r[i]
        )));
    }
    Ok(())
}

/// Computes `g`, `B`, `q`, `p` and the Riccati residuals from the ground
/// state `z1` (ℓ = 0) and the first `ℓ = 1` eigenfunction `z2` of `prob`.
pub fn diagnostics(prob: &BallProblem, z1: &EigenPair, z2: &EigenPair) -> Result<RiccatiDiagnostics> {
    check_pair(prob, z1, z2)?;
    let n = prob.n;
    let nf = n as f64;
    let big_r = prob.radius;
    let h = z1.step();
    let (l1, l2) = (z1.lambda, z2.lambda);
    let e = l2 - l1;

    // All interior samples; the window is cut out after differentiating.
    let inner = 1..z1.r.len() - 1;
    let r: Vec<f64> = z1.r[inner.clone()].to_vec();
    let p_all: Vec<f64> = inner.clone().map(|i| z1.dz[i] / z1.z[i]).collect();
    let g_all: Vec<f64> = inner.clone().map(|i| z2.z[i] / z1.z[i]).collect();
    let gp_all: Vec<f64> = inner
        .clone()
        .map(|i| (z2.dz[i] * z1.z[i] - z2.z[i] * z1.dz[i]) / (z1.z[i] * z1.z[i]))
        .collect();
    // q = r (z₂'/z₂ − z₁'/z₁) avoids dividing g' by a small g near 0.
    let q_all: Vec<f64> = inner
        .clone()
        .zip(&r)
        .map(|(i, &ri)| ri * (z2.dz[i] / z2.z[i] - z1.dz[i] / z1.z[i]))
        .collect();
    let qp_all = derivative(&q_all, h);
    let pp_all = derivative(&p_all, h);

    let lo = r.partition_point(|&x| x < WINDOW.0 * big_r);
    let hi = r.partition_point(|&x| x <= WINDOW.1 * big_r);
    if hi <= lo + 5 {
        return Err(PpwError::Contract("diagnostic window holds too few samples".into()));
    }
    let win = lo..hi;

    let mut res_q = 0.0f64;
    let mut res_p = 0.0f64;
    for i in win.clone() {
        let (ri, q, p) = (r[i], q_all[i], p_all[i]);
        let terms = [(l1 - l2) * ri, (1.0 - q) * (q + nf - 1.0) / ri, -2.0 * q * p];
        let rhs: f64 = terms.iter().sum();
        let scale = qp_all[i].abs() + terms.iter().map(|t| t.abs()).sum::<f64>();
        res_q = res_q.max((qp_all[i] - rhs).abs() / scale);

        let v = prob.potential.value(ri);
        let terms = [pp_all[i], p * p, (nf - 1.0) * p / ri, l1, -v];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        res_p = res_p.max(terms.iter().sum::<f64>().abs() / scale);
    }

    let fit_at = |range: (f64, f64), at: f64| -> Result<f64> {
        let a = r.partition_point(|&x| x < range.0 * big_r);
        let b = r.partition_point(|&x| x <= range.1 * big_r);
        let c = polyfit(&r[a..b], &q_all[a..b], 2)?;
        Ok(c[0] + c[1] * at + c[2] * at * at)
    };
    let q_origin = fit_at(ORIGIN_FIT, 0.0)?;
    let q_boundary = fit_at(BOUNDARY_FIT, big_r)?;
    let m = z1.r.len();
    let g_boundary = z2.dz[m - 1] / z1.dz[m - 1];

    let g = g_all[win.clone()].to_vec();
    let g_prime = gp_all[win.clone()].to_vec();
    let q = q_all[win.clone()].to_vec();
    let q_prime = qp_all[win.clone()].to_vec();
    let rw = r[win.clone()].to_vec();
    let b: Vec<f64> = rw
        .iter()
        .zip(g.iter().zip(&g_prime))
        .map(|(&ri, (&gi, &gpi))| gpi * gpi + (nf - 1.0) * gi * gi / (ri * ri))
        .collect();
    let b_max = b.iter().fold(0.0f64, |a, &x| a.max(x));
    let facts = RiccatiFacts {
        q_in_01: q.iter().all(|&x| (-FACT_SLACK..=1.0 + FACT_SLACK).contains(&x)),
        q_decreasing: q_prime.iter().all(|&x| x <= FACT_SLACK),
        b_decreasing: b.windows(2).all(|w| w[1] <= w[0] + 1e-12 * b_max),
        g_increasing: g.windows(2).all(|w| w[1] > w[0]),
    };
    Ok(RiccatiDiagnostics {
        n,
        radius: big_r,
        r: rw,
        g,
        g_prime,
        b,
        q,
        q_prime,
        p: p_all[win].to_vec(),
        lambda1: l1,
        lambda2: l2,
        v0: prob.potential.value(0.0),
        e,
        nu: nf - 2.0,
        residual_ric_q: res_q,
        residual_ric_p: res_p,
        q_origin,
        q_boundary,
        g_boundary,
        facts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSecondDerivative {
    /// `(2/n)((1 + 2/n)λ₁ − λ₂)`. Its sign is that of `q''(0)`, and it is
    /// nonpositive exactly when `λ₂ ≥ (1 + 2/n)λ₁`.
    pub sign_form: f64,
    /// `(2/n²) Q₁`, the same number written through `Q_y` at `y = 1`.
    pub via_q1: f64,
    /// `q''(0) = 2((λ₁ − V(0))/n − (λ₂ − V(0))/(n+2))` from the power series
    /// of `z₁` and `z₂` at the origin; `n/(n+2)` times `sign_form` when
    /// `V(0) = 0`.
    pub closed_form: f64,
    /// Twice the quadratic coefficient of a fit of `q` on `(0, 0.05 R₁]`.
    pub numeric: f64,
    pub agree: bool,
}

/// `q''(0)` in closed form against a quadratic fit of the sampled `q`.
pub fn q_second_derivative_check(diag: &RiccatiDiagnostics) -> Result<QSecondDerivative> {
    let n = diag.n as f64;
    let (l1, l2) = (diag.lambda1, diag.lambda2);
    let sign_form = 2.0 / n * ((1.0 + 2.0 / n) * l1 - l2);
    let via_q1 = 2.0 / (n * n) * sector_constants(diag.n, 1.0, l1, l2)?.q_y;
    let closed_form = 2.0 * ((l1 - diag.v0) / n - (l2 - diag.v0) / (n + 2.0));
    let end = diag.r.partition_point(|&x| x <= ORIGIN_FIT.1 * diag.radius);
    let c = polyfit(&diag.r[..end], &diag.q[..end], 2)?;
    let numeric = 2.0 * c[2];
    let agree = (numeric - closed_form).abs() <= 5e-2 * closed_form.abs();
    Ok(QSecondDerivative { sign_form, via_q1, closed_form, numeric, agree })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorConstants {
    pub n: usize,
    pub y: f64,
    pub nu: f64,
    pub e: f64,
    /// `N_y = y² − n + 1`.
    pub n_y: f64,
    /// `M_y = N_y²/(2y) − ν²y/2`.
    pub m_y: f64,
    /// `Q_y = 2yλ₁ + E N_y/y − 2E`.
    pub q_y: f64,
}

impl SectorConstants {
    /// `y M_y` through its factorization
    /// `½(y²−1)((y−1)−(n−2))((y+1)+(n−2))`.
    pub fn factored_y_m(&self) -> f64 {
        let y = self.y;
        0.5 * (y * y - 1.0) * ((y - 1.0) - self.nu) * ((y + 1.0) + self.nu)
    }

    /// `Z_y(r) = M_y/r² + E²r²/(2y) + Q_y − 2yṼ(r)`.
    pub fn z_value(&self, r: f64, v: f64) -> f64 {
        self.m_y / (r * r) + self.e * self.e * r * r / (2.0 * self.y) + self.q_y - 2.0 * self.y * v
    }

    fn z_scale(&self, r: f64, v: f64) -> f64 {
        (self.m_y / (r * r)).abs()
            + self.e * self.e * r * r / (2.0 * self.y)
            + self.q_y.abs()
            + (2.0 * self.y * v).abs()
    }
}

pub fn sector_constants(n: usize, y: f64, lambda1: f64, lambda2: f64) -> Result<SectorConstants> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(PpwError::Range(format!("y must be positive, got {y}")));
    }
    let nu = n as f64 - 2.0;
    let e = lambda2 - lambda1;
    let n_y = y * y - n as f64 + 1.0;
    let c = SectorConstants {
        n,
        y,
        nu,
        e,
        n_y,
        m_y: n_y * n_y / (2.0 * y) - nu * nu * y / 2.0,
        q_y: 2.0 * y * lambda1 + e * n_y / y - 2.0 * e,
    };
    let lhs = y * c.m_y;
    let rhs = c.factored_y_m();
    let scale = (n_y * n_y / 2.0).abs() + (nu * nu * y * y / 2.0).abs();
    if (lhs - rhs).abs() > 1e-12 * scale.max(1.0) {
        return Err(PpwError::Numeric(format!(
            "y·M_y = {lhs} disagrees with its factorization {rhs}"
        )));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TZeroCheck {
    pub r: f64,
    /// `∂T/∂r` by central differences.
    pub t_prime: f64,
    pub z_y: f64,
    /// `|T' − Z_y|` relative to the size of the terms of `Z_y`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TzReport {
    pub y: f64,
    pub constants: SectorConstants,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub zeros: Vec<TZeroCheck>,
    pub worst_zero_gap: f64,
    /// Signs of `T` next to the origin and next to `R₁`.
    pub t_origin_positive: bool,
    pub t_boundary_positive: bool,
}

/// Samples `T(·, y)` and `Z_y` on the diagnostic grid, locates the zeros of
/// `T(·, y)` in `(0, R₁)` and compares `∂T/∂r` there with `Z_y`.
pub fn t_and_z(prob: &BallProblem, z1: &EigenPair, diag: &RiccatiDiagnostics, y: f64) -> Result<TzReport> {
    if !(y > 0.0 && y <= 3.0) {
        return Err(PpwError::Range(format!("y must lie in (0, 3], got {y}")));
    }
    if z1.lambda != diag.lambda1 || z1.radius() != diag.radius {
        return Err(PpwError::Contract("ground state does not match the diagnostics".into()));
    }
    let constants = sector_constants(prob.n, y, diag.lambda1, diag.lambda2)?;
    let (n, e) = (prob.n, diag.e);
    let t: Vec<f64> = (0..diag.r.len()).map(|i| diag.t_at(i, y)).collect();
    let z: Vec<f64> = diag
        .r
        .iter()
        .map(|&r| constants.z_value(r, prob.potential.value(r)))
        .collect();

    let smooth = SmoothEigenfunction::new(prob, z1);
    let t_fn = |r: f64| {
        let (z, dz) = smooth.eval(r);
        t_value(n, e, y, r, dz / z)
    };
    let big_r = prob.radius;
    let scan = linspace(1e-3 * big_r, (1.0 - 1e-3) * big_r, T_SCAN_POINTS);
    let values: Vec<f64> = scan.iter().map(|&r| t_fn(r)).collect();
    let mut zeros = Vec::new();
    for k in 0..scan.len() - 1 {
        if values[k] == 0.0 || values[k].signum() == values[k + 1].signum() {
            continue;
        }
        let r_hat = brent(|r| Ok(t_fn(r)), scan[k], scan[k + 1], 1e-14 * big_r, 200)?;
        let d = 1e-4 * big_r;
        let t_prime = (t_fn(r_hat + d) - t_fn(r_hat - d)) / (2.0 * d);
        let v = prob.potential.value(r_hat);
        let z_y = constants.z_value(r_hat, v);
        let relative_gap = (t_prime - z_y).abs() / constants.z_scale(r_hat, v);
        zeros.push(TZeroCheck { r: r_hat, t_prime, z_y, relative_gap });
    }
    let worst_zero_gap = zeros.iter().map(|c| c.relative_gap).fold(0.0, f64::max);
    Ok(TzReport {
        y,
        constants,
        r: diag.r.clone(),
        t,
        z,
        zeros,
        worst_zero_gap,
        t_origin_positive: values[0] > 0.0,
        t_boundary_positive: values[values.len() - 1] > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioShift {
    pub lhs: f64,
    pub rhs: f64,
    /// Where `(a+x)/(b+x)` and `(c+x)/(d+x)` meet.
    pub x0: f64,
    /// `lhs < rhs`.
    pub holds: bool,
}

/// Compares `(a+x)/(b+x)` with `(c+x)/(d+x)` for positive numbers with
/// `a ≥ b`, `d ≥ b` and `a/b < c/d`; the first stays below the second for
/// every `x > 0`, the two meeting at `x₀ = −(bc−ad)/(b+c−a−d) < 0`.
pub fn ratio_shift(a: f64, b: f64, c: f64, d: f64, x: f64) -> Result<RatioShift> {
    for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("x", x)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(PpwError::Contract(format!("{name} must be positive, got {v}")));
        }
    }
    if a < b {
        return Err(PpwError::Contract(format!("needs a ≥ b, got a = {a}, b = {b}")));
    }
    if d < b {
        return Err(PpwError::Contract(format!("needs d ≥ b, got d = {d}, b = {b}")));
    }
    if !(a / b < c / d) {
        return Err(PpwError::Contract(format!("needs a/b < c/d, got {} ≥ {}", a / b, c / d)));
    }
    let lhs = (a + x) / (b + x);
    let rhs = (c + x) / (d + x);
    let x0 = -(b * c - a * d) / (b + c - a - d);
    Ok(RatioShift { lhs, rhs, x0, holds: lhs < rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioShiftSweep {
    pub samples: usize,
    pub seed: u64,
    /// Cases with `lhs ≥ rhs`.
    pub failures: usize,
    /// Cases with `x₀ ≥ 0`.
    pub x0_nonnegative: usize,
    /// Smallest `rhs − lhs` seen.
    pub min_gap: f64,
}

impl RatioShiftSweep {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.x0_nonnegative == 0
    }
}

/// [`ratio_shift`] on `samples` random admissible quadruples with
/// `x ∈ (0, 100]`. `b` is log-uniform in `[0.1, 10]`, `a` and `d` lie in
/// `[b, 5b)` and `c` in `(1.001, 5.001) · ad/b`, so `a/b < c/d` by a margin
/// well above rounding.
pub fn ratio_shift_sweep(samples: usize, seed: u64) -> Result<RatioShiftSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut x0_nonnegative = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..samples {
        let b = 10f64.powf(rng.random_range(-1.0..1.0));
        let a = b * (1.0 + 4.0 * rng.random::<f64>());
        let d = b * (1.0 + 4.0 * rng.random::<f64>());
        let c = a * d / b * (1.001 + 4.0 * rng.random::<f64>());
        let x = 100.0 * (1.0 - rng.random::<f64>());
        let s = ratio_shift(a, b, c, d, x)?;
        if !s.holds {
            failures += 1;
        }
        if s.x0 >= 0.0 {
            x0_nonnegative += 1;
        }
        min_gap = min_gap.min(s.rhs - s.lhs);
    }
    Ok(RatioShiftSweep { samples, seed, failures, x0_nonnegative, min_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::RadialPotential;
    use crate::radial::{solve_sector, SolveOptions};

    fn setup(n: usize, v: RadialPotential) -> (BallProblem, EigenPair, RiccatiDiagnostics) {
        let prob = BallProblem::new(n, 1.0, 0, v).unwrap();
        let opts = SolveOptions { tol: 1e-11, samples: 4096 };
        let z1 = crate::radial::solve_sector_with(&prob, 1, &opts).unwrap();
        let z2 = crate::radial::solve_sector_with(&prob.with_sector(1), 1, &opts).unwrap();
        let d = diagnostics(&prob, &z1, &z2).unwrap();
        (prob, z1, d)
    }

    #[test]
    fn free_disk_boundary_values_and_residuals() {
        let (_, _, d) = setup(2, RadialPotential::Zero);
        assert!((d.q_origin - 1.0).abs() < 1e-3, "q(0) = {}", d.q_origin);
        assert!(d.q_boundary.abs() < 1e-3, "q(R) = {}", d.q_boundary);
        assert!(d.residual_ric_q <= 1e-4, "{}", d.residual_ric_q);
        assert!(d.residual_ric_p <= 1e-4, "{}", d.residual_ric_p);
        assert!(d.facts.all(), "{:?}", d.facts);
        assert!(d.t_of_q_defect() <= 1e-4);
    }

    #[test]
    fn harmonic_b_strictly_decreasing() {
        let (_, _, d) = setup(2, RadialPotential::harmonic());
        assert!(d.b.windows(2).all(|w| w[1] < w[0]));
        assert!(d.facts.all());
    }

    #[test]
    fn boundary_ratio_is_slope_ratio() {
        let (_, _, d) = setup(3, RadialPotential::Zero);
        let last = *d.g.last().unwrap();
        assert!((last - d.g_boundary).abs() < 2e-2 * d.g_boundary.abs());
    }

    #[test]
    fn q_second_derivative_matches_fit() {
        let (_, _, d) = setup(2, RadialPotential::Zero);
        let c = q_second_derivative_check(&d).unwrap();
        assert!(c.agree && c.closed_form < 0.0, "{c:?}");
        assert!((c.via_q1 - c.sign_form).abs() <= 1e-12 * c.sign_form.abs());
        // J₁(j₁r)/J₀(j₀r) = (j₁r/2)(1 + (j₀²/4 − j₁²/8) r² + …), so q''(0) = λ₁ − λ₂/2.
        assert!((c.closed_form - (d.lambda1 - d.lambda2 / 2.0)).abs() < 1e-12);
        assert!((c.numeric - c.closed_form).abs() < 5e-3 * c.closed_form.abs());
    }

    #[test]
    fn q_second_derivative_in_three_dimensions_with_potential() {
        for v in [RadialPotential::harmonic(), RadialPotential::power(1.0, 4.0).unwrap()] {
            let (_, _, d) = setup(3, v);
            let c = q_second_derivative_check(&d).unwrap();
            assert!(c.agree, "{c:?}");
            assert_eq!(c.closed_form.signum(), c.sign_form.signum());
        }
    }

    #[test]
    fn closed_form_examples() {
        let d = RiccatiDiagnostics {
            n: 2,
            lambda1: 2.0,
            lambda2: 4.0,
            ..setup(2, RadialPotential::Zero).2
        };
        let c = q_second_derivative_check(&d).unwrap();
        assert_eq!(c.sign_form, 0.0);
        // (n, λ₁, λ₂) = (3, 5, 9)
        let (n, l1, l2) = (3.0, 5.0, 9.0);
        let closed = 2.0 / n * ((1.0 + 2.0 / n) * l1 - l2);
        let q1 = sector_constants(3, 1.0, l1, l2).unwrap().q_y;
        assert!((2.0 / (n * n) * q1 - closed).abs() <= 1e-12 * closed.abs());
        assert!((closed + 2.0 / 9.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn sector_constant_values() {
        for n in 2..=6 {
            assert_eq!(sector_constants(n, 1.0, 3.0, 7.0).unwrap().m_y, 0.0);
        }
        let c = sector_constants(2, 0.5, 1.0, 2.0).unwrap();
        assert_eq!((c.n_y, c.nu, c.m_y), (-0.75, 0.0, 0.5625));
        let c = sector_constants(4, 0.5, 1.0, 2.0).unwrap();
        assert_eq!(c.m_y.signum(), c.factored_y_m().signum());
        assert!(sector_constants(2, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn m_is_positive_below_one() {
        for n in 2..=8 {
            for k in 1..100 {
                let y = k as f64 / 100.0;
                assert!(sector_constants(n, y, 1.0, 2.0).unwrap().m_y > 0.0);
            }
        }
    }

    #[test]
    fn t_zeros_match_z() {
        for v in [RadialPotential::Zero, RadialPotential::harmonic()] {
            let (prob, z1, d) = setup(2, v);
            for y in [0.5, 0.9] {
                let rep = t_and_z(&prob, &z1, &d, y).unwrap();
                assert!(rep.t_origin_positive && rep.t_boundary_positive);
                assert!(rep.worst_zero_gap <= 1e-3, "y={y}: {:?}", rep.zeros);
                // Z_y blows up at the origin when M_y > 0.
                assert!(rep.z[0] > 100.0 * rep.z[rep.z.len() / 2].abs());
            }
        }
    }

    #[test]
    fn rejects_wrong_sectors() {
        let prob = BallProblem::new(2, 1.0, 0, RadialPotential::Zero).unwrap();
        let z1 = solve_sector(&prob, 1, 1e-10).unwrap();
        let z = solve_sector(&prob, 2, 1e-10).unwrap();
        assert!(matches!(diagnostics(&prob, &z1, &z), Err(PpwError::Contract(_))));
        assert!(t_and_z(&prob, &z1, &diagnostics(&prob, &z1, &solve_sector(&prob.with_sector(1), 1, 1e-10).unwrap()).unwrap(), 3.5).is_err());
    }

    #[test]
    fn ratio_shift_examples() {
        let s = ratio_shift(2.0, 1.0, 5.0, 2.0, 1.0).unwrap();
        assert_eq!((s.lhs, s.rhs), (1.5, 2.0));
        assert!(s.holds);
        assert_eq!(s.x0, -0.5);
        assert!(matches!(ratio_shift(0.5, 1.0, 5.0, 2.0, 1.0), Err(PpwError::Contract(m)) if m.contains("a ≥ b")));
        assert!(matches!(ratio_shift(2.0, 1.0, 5.0, 0.5, 1.0), Err(PpwError::Contract(m)) if m.contains("d ≥ b")));
        assert!(matches!(ratio_shift(2.0, 1.0, 3.0, 2.0, 1.0), Err(PpwError::Contract(m)) if m.contains("a/b < c/d")));
    }

    #[test]
    fn ratio_shift_sweep_is_clean_and_reproducible() {
        let a = ratio_shift_sweep(10_000, 7).unwrap();
        assert!(a.passed() && a.min_gap > 0.0, "{a:?}");
        assert_eq!(a, ratio_shift_sweep(10_000, 7).unwrap());
        assert_ne!(a.min_gap, ratio_shift_sweep(10_000, 8).unwrap().min_gap);
    }
}
