//! Dirichlet eigenvalues of the Gaussian-weighted Laplacians
//! `−e^{∓r²} div(e^{±r²} ∇Ψ)` on balls and planar domains. The ground-state
//! transform `Ψ = e^{∓r²/2} u` turns them into `−Δ + r² ± n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{solve_extrapolated, DomainGrid, DomainPotential};
use crate::error::{PpwError, Result};
use crate::potentials::RadialPotential;
use crate::radial::{self, first_two, first_two_weighted, EigenPair, WeightSign};
use crate::riccati::ratio_shift;
use crate::verify::{comparison_ball, MATCH_TOL};

/// Largest radius for the density `e^{−r²}`.
pub const MAX_RADIUS_MINUS: f64 = 8.0;
/// Largest radius for the density `e^{+r²}`.
pub const MAX_RADIUS_PLUS: f64 = 6.0;
/// Tolerance for `λ±ᵢ = λᵢ(r²) ± n`.
pub const RELATION_TOL: f64 = 1e-7;

fn check_sign(sign: WeightSign) -> Result<f64> {
    match sign {
        WeightSign::Plus | WeightSign::Minus => Ok(sign.exponent()),
        WeightSign::None => Err(PpwError::Range("a Gaussian weight needs sign plus or minus".into())),
    }
}

fn check_radius(sign: WeightSign, radius: f64) -> Result<()> {
    let cap = if sign == WeightSign::Plus { MAX_RADIUS_PLUS } else { MAX_RADIUS_MINUS };
    if !(radius > 0.0 && radius <= cap) {
        return Err(PpwError::Range(format!(
            "radius {radius} outside (0, {cap}] for the {sign} weight"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// `λᵢ(B_R, r²)`.
    pub oscillator: f64,
    /// `λᵢ(B_R, r²) ± n`.
    pub expected: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpectrum {
    pub sign: WeightSign,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub crosscheck: [CrossCheck; 2],
    /// Largest `|Ψ±ᵢ e^{±r²/2} − zᵢ|` over the samples, relative to
    /// `max|zᵢ|`, with `zᵢ` the oscillator eigenfunction.
    pub eigenfunction_deviation: [f64; 2],
    /// Relation `λ±ᵢ = λᵢ(r²) ± n` holds within [`RELATION_TOL`].
    pub relation_holds: bool,
    #[serde(skip)]
    pub psi: Option<[EigenPair; 2]>,
}

fn shape_deviation(psi: &EigenPair, z: &EigenPair, w: f64) -> f64 {
    let peak = z.z.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    psi.r
        .iter()
        .zip(&psi.z)
        .map(|(&r, &p)| (p * (0.5 * w * r * r).exp() - z.eval(r).0).abs())
        .fold(0.0, f64::max)
        / peak
}

/// First two eigenvalues of the weighted problem on `B_R` (sectors ℓ = 0
/// and ℓ = 1), cross-checked against `−Δ + r²`.
pub fn solve_gaussian(sign: WeightSign, n: usize, radius: f64, tol: f64) -> Result<GaussianSpectrum> {
    let w = check_sign(sign)?;
    check_radius(sign, radius)?;
    let shift = w * n as f64;
    let weighted = first_two_weighted(n, radius, &RadialPotential::Zero, sign, tol)?;
    let osc = first_two(n, radius, &RadialPotential::harmonic(), tol)?;
    let check = |lam: f64, o: f64| CrossCheck { oscillator: o, expected: o + shift, deviation: (lam - o - shift).abs() };
    let crosscheck = [check(weighted.lambda1, osc.lambda1), check(weighted.lambda2, osc.lambda2)];
    let eigenfunction_deviation =
        [shape_deviation(&weighted.z1, &osc.z1, w), shape_deviation(&weighted.z2, &osc.z2, w)];
    Ok(GaussianSpectrum {
        sign,
        n,
        radius,
        lambda1: weighted.lambda1,
        lambda2: weighted.lambda2,
        relation_holds: crosscheck.iter().all(|c| c.deviation <= RELATION_TOL),
        crosscheck,
        eigenfunction_deviation,
        psi: Some([weighted.z1, weighted.z2]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBoundReport {
    pub sign: WeightSign,
    /// `λ±ᵢ(Ω) = λᵢ(Ω, r²) ± 2`, extrapolated.
    pub lambda1_omega: f64,
    pub lambda2_omega: f64,
    pub lambda1_error: f64,
    pub lambda2_error: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    /// From the weighted radial solver on `S₁`.
    #[serde(rename = "lambda1_S1")]
    pub lambda1_s1: f64,
    #[serde(rename = "lambda2_S1")]
    pub lambda2_s1: f64,
    /// `λ±₂(S₁) − λ±₂(Ω)`.
    pub margin: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Checks `λ±₂(Ω) ≤ λ±₂(S₁)` for a planar domain, `S₁` being the disk about
/// the grid origin with `λ±₁(S₁) = λ±₁(Ω)`.
pub fn verify_gaussian_bound(grid: &DomainGrid, sign: WeightSign, tol: f64) -> Result<GaussianBoundReport> {
    let w = check_sign(sign)?;
    let shift = 2.0 * w;
    let harmonic = RadialPotential::harmonic();
    let (_, _, ex) = solve_extrapolated(grid, &DomainPotential::Radial(harmonic.clone()), 2, tol)?;
    let (l1, l2) = (ex.lambda1() + shift, ex.lambda2() + shift);
    let (e1, e2) = (ex.errors[0], ex.errors[1]);
    // The shift is common to both sides, so S₁ matches λ₁(·, r²).
    let r1 = comparison_ball(2, ex.lambda1(), &harmonic, MATCH_TOL)?;
    let rtol = radial::DEFAULT_TOL;
    let s1 = solve_gaussian(sign, 2, r1, rtol)?;
    let d = 1e-4 * r1;
    let up = first_two(2, r1 + d, &harmonic, rtol)?;
    let down = first_two(2, r1 - d, &harmonic, rtol)?;
    let kappa = (up.lambda2 - down.lambda2) / (up.lambda1 - down.lambda1);
    let radial_err = RELATION_TOL + MATCH_TOL * kappa.abs() * ex.lambda1().abs();
    let slack = 3.0 * (e2 + kappa.abs() * e1 + radial_err);
    let margin = s1.lambda2 - l2;
    Ok(GaussianBoundReport {
        sign,
        lambda1_omega: l1,
        lambda2_omega: l2,
        lambda1_error: e1,
        lambda2_error: e2,
        r1,
        lambda1_s1: s1.lambda1,
        lambda2_s1: s1.lambda2,
        margin,
        slack,
        passed: margin >= -slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioLimitRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `None` when `λ±₁` is not resolved away from zero.
    pub ratio: Option<f64>,
    pub divergent: bool,
}

/// `λ±₂/λ±₁` on balls of increasing radius.
pub fn ratio_limits(sign: WeightSign, n: usize, radii: &[f64], tol: f64) -> Result<Vec<RatioLimitRow>> {
    check_sign(sign)?;
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PpwError::Range("radii must be strictly increasing".into()));
    }
    radii
        .par_iter()
        .map(|&r| {
            let s = solve_gaussian(sign, n, r, tol)?;
            let divergent = s.lambda1 <= 10.0 * tol * s.lambda2.abs();
            Ok(RatioLimitRow {
                r,
                lambda1: s.lambda1,
                lambda2: s.lambda2,
                ratio: (!divergent).then(|| s.lambda2 / s.lambda1),
                divergent,
            })
        })
        .collect()
}

/// One step of the argument that `λ⁺₂/λ⁺₁` decreases with the radius:
/// with `a, b = λ₂, λ₁` of `B_{R+x}` and `c, d = λ₂, λ₁` of `B_R` (potential
/// `r²`), `(a+n)/(b+n) < (c+n)/(d+n)`. Returns whether it holds.
pub fn gaussian_ratio_step(a: f64, b: f64, c: f64, d: f64, n: usize) -> Result<bool> {
    Ok(ratio_shift(a, b, c, d, n as f64)?.holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRatioStep {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `(a+n)/(b+n)` and `(c+n)/(d+n)`.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// [`gaussian_ratio_step`] on solved oscillator eigenvalues for `B_R` and
/// `B_{R+dx}`.
pub fn gaussian_ratio_step_for(n: usize, r: f64, dx: f64, tol: f64) -> Result<GaussianRatioStep> {
    if !(dx > 0.0) {
        return Err(PpwError::Range(format!("radius step must be positive, got {dx}")));
    }
    let v = RadialPotential::harmonic();
    let outer = first_two(n, r + dx, &v, tol)?;
    let inner = first_two(n, r, &v, tol)?;
    let (a, b, c, d) = (outer.lambda2, outer.lambda1, inner.lambda2, inner.lambda1);
    let s = ratio_shift(a, b, c, d, n as f64)?;
    Ok(GaussianRatioStep { a, b, c, d, lhs: s.lhs, rhs: s.rhs, holds: s.holds })
}
