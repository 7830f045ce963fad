//! Radial Dirichlet eigenproblems on balls by shooting.
//!
//! For a sector `ℓ` the radial part `z` of an eigenfunction solves
//!
//! ```text
//! z'' + ((n−1)/r + 2wr) z' + (λ − V − ℓ(ℓ+n−2)/r²) z = 0,   z(R) = 0,
//! ```
//!
//! with `w = 0` for the flat Laplacian and `w = ±1` for the densities
//! `e^{±r²}`. The solver integrates `y = r^{(n−1)/2} z` from just off the
//! origin, counts interior zeros, brackets the `k`th eigenvalue by bisection
//! on the zero count and polishes with Brent on the boundary value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::{
    brent, derivative, hermite5, linspace, second_derivative, simpson, unit_sphere_area,
};
use crate::ode::{advance, Cursor, State, Tolerance};
use crate::potentials::{validate_conditions, RadialPotential};
use crate::special::bessel_zero;

pub const DEFAULT_SAMPLES: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_K: usize = 10;

/// Radii outside this window are solved on the unit ball and scaled back.
const RESCALE_BELOW: f64 = 1e-2;
const RESCALE_ABOVE: f64 = 1e2;
const START_FRACTION: f64 = 1e-6;
const RENORM_THRESHOLD: f64 = 1e150;
/// Samples below this fraction of the peak are ignored when counting nodes.
const NODE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSign {
    #[default]
    None,
    Plus,
    Minus,
}

impl WeightSign {
    /// The `w` in the density `e^{w r²}`.
    pub fn exponent(self) -> f64 {
        match self {
            WeightSign::None => 0.0,
            WeightSign::Plus => 1.0,
            WeightSign::Minus => -1.0,
        }
    }

    pub fn density(self, r: f64) -> f64 {
        match self {
            WeightSign::None => 1.0,
            _ => (self.exponent() * r * r).exp(),
        }
    }
}

impl fmt::Display for WeightSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightSign::None => "none",
            WeightSign::Plus => "plus",
            WeightSign::Minus => "minus",
        })
    }
}

impl FromStr for WeightSign {
    type Err = PpwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "" => Ok(WeightSign::None),
            "plus" | "+" => Ok(WeightSign::Plus),
            "minus" | "-" => Ok(WeightSign::Minus),
            other => Err(PpwError::Parse(format!("unknown weight sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallProblem {
    pub n: usize,
    pub radius: f64,
    pub ell: usize,
    pub potential: RadialPotential,
    pub weight: WeightSign,
}

impl BallProblem {
    pub fn new(n: usize, radius: f64, ell: usize, potential: RadialPotential) -> Result<Self> {
        let prob = BallProblem { n, radius, ell, potential, weight: WeightSign::None };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_weight(mut self, weight: WeightSign) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_sector(&self, ell: usize) -> Self {
        BallProblem { ell, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(PpwError::Range(format!("dimension must be at least 2, got {}", self.n)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(PpwError::Range(format!("radius must be positive, got {}", self.radius)));
        }
        self.potential.eval(self.radius)?;
        Ok(())
    }

    /// `ℓ(ℓ+n−2)`.
    pub fn centrifugal(&self) -> f64 {
        let l = self.ell as f64;
        l * (l + self.n as f64 - 2.0)
    }

    /// `z''` from the radial equation at `r > 0`.
    pub fn second_derivative(&self, lambda: f64, r: f64, z: f64, dz: f64) -> f64 {
        let w = self.weight.exponent();
        let drift = (self.n as f64 - 1.0) / r + 2.0 * w * r;
        -drift * dz - (lambda - self.potential.value(r) - self.centrifugal() / (r * r)) * z
    }
}

/// A solved radial eigenpair with its eigenfunction sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub ell: usize,
    pub k: usize,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// `z'` at the same radii, taken from the integrated state.
    pub dz: Vec<f64>,
    pub node_count: usize,
    pub residual: f64,
    /// `|z(R)| / max|z|` after the final integration.
    pub boundary_defect: f64,
}

impl EigenPair {
    pub fn radius(&self) -> f64 {
        *self.r.last().expect("eigenpair has samples")
    }

    pub fn step(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.z.iter().copied())
    }

    /// `(z, z')` at `r` by cubic Hermite interpolation; zero beyond `R`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let m = self.r.len();
        let big_r = self.radius();
        if r >= big_r {
            return if r == big_r { (self.z[m - 1], self.dz[m - 1]) } else { (0.0, 0.0) };
        }
        let h = self.step();
        let x = (r.max(0.0) / h).min((m - 1) as f64);
        let i = (x.floor() as usize).min(m - 2);
        let t = x - i as f64;
        let (f0, f1) = (self.z[i], self.z[i + 1]);
        let (d0, d1) = (self.dz[i] * h, self.dz[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let f = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1;
        let df = ((6.0 * t2 - 6.0 * t) * f0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * f1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        (f, df)
    }
}

/// An eigenpair together with `z''` from the radial equation, evaluated
/// between samples by quintic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct SmoothEigenfunction<'a> {
    pub pair: &'a EigenPair,
    dd: Vec<f64>,
}

impl<'a> SmoothEigenfunction<'a> {
    /// `prob` supplies the potential and dimension; the sector is the pair's.
    pub fn new(prob: &BallProblem, pair: &'a EigenPair) -> Self {
        let prob = prob.with_sector(pair.ell);
        let dd = pair
            .r
            .iter()
            .zip(pair.z.iter().zip(&pair.dz))
            .map(|(&r, (&z, &dz))| {
                if r > 0.0 {
                    prob.second_derivative(pair.lambda, r, z, dz)
                } else {
                    f64::NAN
                }
            })
            .collect();
        SmoothEigenfunction { pair, dd }
    }

    /// `(z, z')` at `r`; zero beyond `R`. The first interval, where `z''`
    /// is singular in the equation, falls back to cubic interpolation.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let z = self.pair;
        let m = z.r.len();
        if r >= z.radius() {
            return z.eval(r);
        }
        let h = z.step();
        let x = r.max(0.0) / h;
        let i = (x.floor() as usize).min(m - 2);
        if i == 0 {
            return z.eval(r);
        }
        hermite5(x - i as f64, h, z.z[i], z.dz[i], self.dd[i], z.z[i + 1], z.dz[i + 1], self.dd[i + 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub samples: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, samples: DEFAULT_SAMPLES }
    }
}

/// `k`th Dirichlet eigenvalue of the sector `prob.ell`, with default sampling.
pub fn solve_sector(prob: &BallProblem, k: usize, tol: f64) -> Result<EigenPair> {
    solve_sector_with(prob, k, &SolveOptions { tol, ..SolveOptions::default() })
}

pub fn solve_sector_with(prob: &BallProblem, k: usize, opts: &SolveOptions) -> Result<EigenPair> {
    prob.validate()?;
    if k == 0 || k > MAX_K {
        return Err(PpwError::Range(format!("eigenvalue index must be in 1..={MAX_K}, got {k}")));
    }
    if !(opts.tol >= 1e-12) {
        return Err(PpwError::Range(format!("tolerance must be at least 1e-12, got {}", opts.tol)));
    }
    if opts.samples < 16 {
        return Err(PpwError::Range(format!("need at least 16 samples, got {}", opts.samples)));
    }
    let big_r = prob.radius;
    let extreme = !(RESCALE_BELOW..=RESCALE_ABOVE).contains(&big_r);
    if extreme && prob.weight == WeightSign::None {
        let unit = BallProblem {
            radius: 1.0,
            potential: prob.potential.rescaled(big_r),
            ..prob.clone()
        };
        let mut pair = solve_unscaled(&unit, k, opts)?;
        let amp = big_r.powf(-(prob.n as f64) / 2.0);
        pair.lambda /= big_r * big_r;
        for v in &mut pair.r {
            *v *= big_r;
        }
        for v in &mut pair.z {
            *v *= amp;
        }
        for v in &mut pair.dz {
            *v *= amp / big_r;
        }
        pair.residual = ode_residual(&pair, prob);
        return Ok(pair);
    }
    solve_unscaled(prob, k, opts)
}

struct Shooter<'a> {
    prob: &'a BallProblem,
    a: f64,
    coeff: f64,
    shift: f64,
    w: f64,
    r0: f64,
    tol: Tolerance,
}

impl<'a> Shooter<'a> {
    fn new(prob: &'a BallProblem, rtol: f64) -> Self {
        let n = prob.n as f64;
        let a = 0.5 * (n - 1.0);
        let w = prob.weight.exponent();
        Shooter {
            prob,
            a,
            coeff: prob.centrifugal() + a * (a - 1.0),
            shift: w * (n - 1.0),
            w,
            r0: START_FRACTION * prob.radius,
            tol: Tolerance { rtol, h_min: 1e-15 * prob.radius },
        }
    }

    fn rhs(&self, lambda: f64) -> impl Fn(f64, &State) -> State + '_ {
        move |r: f64, y: &State| {
            let v = self.prob.potential.value(r);
            let q = lambda - v - self.shift - self.coeff / (r * r);
            [y[1], -2.0 * self.w * r * y[1] - q * y[0]]
        }
    }

    /// Frobenius start `z ≈ r^ℓ(1 + c r²)`, scaled so that `y(r₀) ≈ 1`.
    fn start(&self, lambda: f64) -> Cursor {
        let n = self.prob.n as f64;
        let l = self.prob.ell as f64;
        let v0 = self.prob.potential.value(0.0);
        let c = -(lambda - v0 + 2.0 * self.w * l) / (2.0 * (2.0 * l + n));
        let r0 = self.r0;
        let p = l + self.a;
        let y0 = 1.0 + c * r0 * r0;
        let dy0 = (p + (p + 2.0) * c * r0 * r0) / r0;
        Cursor::new(r0, [y0, dy0], 0.1 * r0)
    }

    /// Zero count on `(0, R)` and a bounded measure of the boundary value.
    fn shoot(&self, lambda: f64) -> Result<(usize, f64)> {
        let f = self.rhs(lambda);
        let mut cur = self.start(lambda);
        let big_r = self.prob.radius;
        let mut count = 0;
        // Segments keep the state within range; the problem is linear.
        let segments = 64;
        for s in 1..=segments {
            let r_end = if s == segments { big_r } else { big_r * s as f64 / segments as f64 };
            if r_end <= cur.r {
                continue;
            }
            count += advance(&f, &mut cur, r_end, self.tol)?;
            let scale = cur.y[0].abs().max(cur.y[1].abs() * big_r);
            if scale > RENORM_THRESHOLD || (scale < 1.0 / RENORM_THRESHOLD && scale > 0.0) {
                cur.rescale(scale);
            }
        }
        // A sign change landing exactly at R is not interior.
        let boundary = cur.y[0] / cur.y[0].hypot(cur.y[1] * big_r);
        Ok((count, boundary))
    }
}

fn solve_unscaled(prob: &BallProblem, k: usize, opts: &SolveOptions) -> Result<EigenPair> {
    let rtol = (opts.tol * 1e-2).clamp(1e-13, 1e-9);
    let shooter = Shooter::new(prob, rtol);
    let big_r = prob.radius;
    let n = prob.n;

    let probes = linspace(0.0, big_r, 129);
    let v_min = probes.iter().map(|&r| prob.potential.value(r)).fold(f64::INFINITY, f64::min);
    let v_max = probes.iter().map(|&r| prob.potential.value(r)).fold(0.0, f64::max);
    let j = bessel_zero(n as f64 / 2.0, 1)?.value;
    let base = (4.0 * (j / big_r).powi(2)).max(4.0 * prob.potential.value(big_r)).max(4.0 * v_max);
    let mut lo = v_min.min(0.0) - 1.0 - 2.0 * n as f64;
    let mut hi = base;
    let mut doublings = 0;
    loop {
        let (count, _) = shooter.shoot(hi)?;
        if count >= k {
            break;
        }
        if doublings == 10 {
            return Err(PpwError::Numeric(format!(
                "eigenvalue {k} of sector {} not found in [{lo}, {hi}]",
                prob.ell
            )));
        }
        lo = lo.max(hi);
        hi *= 2.0;
        doublings += 1;
    }
    let (mut n_lo, mut b_lo) = shooter.shoot(lo)?;
    if n_lo >= k {
        return Err(PpwError::Numeric(format!(
            "lower search bound {lo} already has {n_lo} nodes"
        )));
    }
    let (mut n_hi, mut b_hi) = shooter.shoot(hi)?;
    let width_floor = 1e-15 * hi.abs().max(1.0);
    let mut iters = 0;
    while !(n_lo + 1 == k && n_hi == k) && hi - lo > width_floor && iters < 200 {
        let mid = 0.5 * (lo + hi);
        let (c, b) = shooter.shoot(mid)?;
        if c >= k {
            hi = mid;
            n_hi = c;
            b_hi = b;
        } else {
            lo = mid;
            n_lo = c;
            b_lo = b;
        }
        iters += 1;
    }
    let xtol = opts.tol * lo.abs().max(hi.abs()).max(1.0) * 1e-2;
    let lambda = if b_lo == 0.0 {
        lo
    } else if b_hi == 0.0 || b_lo.signum() == b_hi.signum() {
        // Only reachable when the bracket collapsed onto noise.
        0.5 * (lo + hi)
    } else {
        brent(|lam| Ok(shooter.shoot(lam)?.1), lo, hi, xtol, 200)?
    };

    sample_eigenfunction(prob, &shooter, lambda, k, opts.samples)
}

fn sample_eigenfunction(
    prob: &BallProblem,
    shooter: &Shooter,
    lambda: f64,
    k: usize,
    m: usize,
) -> Result<EigenPair> {
    let big_r = prob.radius;
    let a = shooter.a;
    let f = shooter.rhs(lambda);
    let r = linspace(0.0, big_r, m);
    let mut z = vec![0.0; m];
    let mut dz = vec![0.0; m];
    let mut cur = shooter.start(lambda);
    let to_z = |r: f64, y: &State| {
        let ra = r.powf(-a);
        (y[0] * ra, ra * (y[1] - a * y[0] / r))
    };
    for i in 1..m {
        advance(&f, &mut cur, r[i], shooter.tol)?;
        let (zi, dzi) = to_z(cur.r, &cur.y);
        z[i] = zi;
        dz[i] = dzi;
        let scale = zi.abs().max(cur.y[0].abs()).max(cur.y[1].abs() * big_r);
        if scale > RENORM_THRESHOLD {
            cur.rescale(scale);
            for v in z[..=i].iter_mut().chain(dz[..=i].iter_mut()) {
                *v /= scale;
            }
        }
    }
    // Values at the origin from the Frobenius form `z ≈ r^ℓ(1 + c r²)`.
    match prob.ell {
        0 => {
            let c = -(lambda - prob.potential.value(0.0)) / (2.0 * prob.n as f64);
            z[0] = z[1] / (1.0 + c * r[1] * r[1]);
        }
        1 => dz[0] = (4.0 * z[1] / r[1] - z[2] / r[2]) / 3.0,
        _ => {}
    }

    let peak = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(PpwError::Numeric("eigenfunction vanished or overflowed".into()));
    }
    let boundary_defect = z[m - 1].abs() / peak;

    let h = r[1] - r[0];
    let integrand: Vec<f64> = r
        .iter()
        .zip(&z)
        .map(|(&ri, &zi)| zi * zi * ri.powi(prob.n as i32 - 1) * prob.weight.density(ri))
        .collect();
    let norm = (unit_sphere_area(prob.n) * simpson(&integrand, h)).sqrt();
    let first = z.iter().copied().find(|v| v.abs() > NODE_FLOOR * peak).unwrap_or(1.0);
    let s = first.signum() / norm;
    for v in z.iter_mut().chain(dz.iter_mut()) {
        *v *= s;
    }

    let mut pair = EigenPair {
        lambda,
        ell: prob.ell,
        k,
        node_count: count_nodes(&z),
        r,
        z,
        dz,
        residual: 0.0,
        boundary_defect,
    };
    pair.residual = ode_residual(&pair, prob);
    Ok(pair)
}

/// Sign changes of the interior samples, ignoring values at the noise floor.
fn count_nodes(z: &[f64]) -> usize {
    let m = z.len();
    let peak = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = NODE_FLOOR * peak;
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in &z[1..m - 1] {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Largest scaled defect of the radial equation evaluated with fourth-order
/// finite differences of the samples.
pub fn ode_residual(pair: &EigenPair, prob: &BallProblem) -> f64 {
    let m = pair.r.len();
    if m < 8 {
        return f64::INFINITY;
    }
    let h = pair.step();
    let d1 = derivative(&pair.z, h);
    let d2 = second_derivative(&pair.z, h);
    let w = prob.weight.exponent();
    let nm1 = prob.n as f64 - 1.0;
    let cf = prob.centrifugal();
    let mut max_d2 = 0.0f64;
    let mut max_lz = 0.0f64;
    let mut worst = 0.0f64;
    for i in 2..m - 2 {
        let r = pair.r[i];
        let z = pair.z[i];
        let v = prob.potential.value(r);
        let defect = d2[i] + (nm1 / r + 2.0 * w * r) * d1[i] - (v + cf / (r * r) - pair.lambda) * z;
        worst = worst.max(defect.abs());
        max_d2 = max_d2.max(d2[i].abs());
        max_lz = max_lz.max(((pair.lambda - v) * z).abs());
    }
    let scale = max_d2 + max_lz;
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Lowest two Dirichlet eigenvalues on a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstTwo {
    pub lambda1: f64,
    pub lambda2: f64,
    pub z1: EigenPair,
    pub z2: EigenPair,
    /// Sector of the second eigenfunction (1 unless the cross-check won).
    pub second_sector: usize,
    /// Set when `rV` is not convex and the second eigenvalue had to be
    /// cross-checked against the second radial mode.
    pub warning: Option<String>,
}

impl FirstTwo {
    pub fn ratio(&self) -> f64 {
        self.lambda2 / self.lambda1
    }
}

pub fn first_two(n: usize, radius: f64, potential: &RadialPotential, tol: f64) -> Result<FirstTwo> {
    first_two_weighted(n, radius, potential, WeightSign::None, tol)
}

pub fn first_two_weighted(
    n: usize,
    radius: f64,
    potential: &RadialPotential,
    weight: WeightSign,
    tol: f64,
) -> Result<FirstTwo> {
    let base = BallProblem::new(n, radius, 0, potential.clone())?.with_weight(weight);
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    let z1 = solve_sector_with(&base, 1, &opts)?;
    let mut z2 = solve_sector_with(&base.with_sector(1), 1, &opts)?;
    let mut second_sector = 1;
    let mut warning = None;
    let conditions = validate_conditions(potential, radius, potential.default_tolerance())?;
    if !conditions.rv_convex {
        let radial2 = solve_sector_with(&base, 2, &opts)?;
        let msg = format!(
            "rV is not convex on [0, {radius}]; second eigenvalue cross-checked against the second radial mode ({} vs {})",
            z2.lambda, radial2.lambda
        );
        if radial2.lambda < z2.lambda {
            z2 = radial2;
            second_sector = 0;
        }
        warning = Some(msg);
    }
    if !(z1.lambda < z2.lambda) {
        return Err(PpwError::Numeric(format!(
            "first eigenvalue {} not below second {}",
            z1.lambda, z2.lambda
        )));
    }
    Ok(FirstTwo {
        lambda1: z1.lambda,
        lambda2: z2.lambda,
        z1,
        z2,
        second_sector,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel_j, ppw_constant};

    fn flat(n: usize, radius: f64, ell: usize) -> BallProblem {
        BallProblem::new(n, radius, ell, RadialPotential::Zero).unwrap()
    }

    #[test]
    fn disk_ground_state_is_bessel_zero_squared() {
        let p = solve_sector(&flat(2, 1.0, 0), 1, 1e-10).unwrap();
        let j = 2.404_825_557_695_773f64;
        assert!((p.lambda - j * j).abs() < 1e-8, "{}", p.lambda);
        assert!((p.lambda - 5.783_185_962_9).abs() < 1e-9);
        assert_eq!(p.node_count, 0);
        assert!(p.residual <= 1e-6, "residual {}", p.residual);
    }

    #[test]
    fn disk_first_sector_one() {
        let p = solve_sector(&flat(2, 1.0, 1), 1, 1e-10).unwrap();
        let j = 3.831_705_970_207_512f64;
        assert!((p.lambda - j * j).abs() < 1e-8);
        assert!(p.z[0].abs() < 1e-12);
        assert!(p.z[1..p.z.len() - 1].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn oscillator_on_large_disk() {
        let prob = BallProblem::new(2, 8.0, 0, RadialPotential::harmonic()).unwrap();
        let p = solve_sector(&prob, 1, 1e-10).unwrap();
        assert!((p.lambda - 2.0).abs() < 1e-6, "{}", p.lambda);
    }

    #[test]
    fn three_ball_ground_state_is_pi_squared() {
        let f = first_two(3, 1.0, &RadialPotential::Zero, 1e-10).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((f.lambda1 - pi2).abs() < 1e-8);
    }

    #[test]
    fn flat_ratio_matches_bessel_constant() {
        for n in [2, 3, 5] {
            let f = first_two(n, 1.0, &RadialPotential::Zero, 1e-10).unwrap();
            let c = ppw_constant(n).unwrap();
            assert!((f.ratio() - c).abs() < 1e-8, "n={n}: {} vs {c}", f.ratio());
            assert!(f.warning.is_none());
        }
    }

    #[test]
    fn harmonic_second_eigenvalue_bound() {
        let f = first_two(2, 1.0, &RadialPotential::harmonic(), 1e-10).unwrap();
        assert!(f.lambda2 >= 2.0 * f.lambda1);
    }

    #[test]
    fn perturbed_eigenvalue_is_detected() {
        let prob = flat(2, 1.0, 0);
        let mut p = solve_sector(&prob, 1, 1e-10).unwrap();
        assert!(ode_residual(&p, &prob) <= 1e-6);
        p.lambda += 0.1;
        assert!(ode_residual(&p, &prob) > 1e-3);
    }

    #[test]
    fn eigenfunction_matches_bessel_profile() {
        let prob = flat(2, 1.0, 0);
        let p = solve_sector(&prob, 1, 1e-10).unwrap();
        let j = 2.404_825_557_695_773f64;
        let exact: Vec<f64> = p.r.iter().map(|&r| bessel_j(0.0, j * r).unwrap()).collect();
        let integrand: Vec<f64> = p.r.iter().zip(&exact).map(|(r, e)| e * e * r).collect();
        let norm = (2.0 * std::f64::consts::PI * simpson(&integrand, p.step())).sqrt();
        let dev = p
            .z
            .iter()
            .zip(&exact)
            .map(|(z, e)| (z - e / norm).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-8, "max deviation {dev}");
    }

    #[test]
    fn node_counts_follow_index() {
        for ell in [0, 1, 2] {
            for k in 1..=4 {
                let p = solve_sector(&flat(3, 1.0, ell), k, 1e-10).unwrap();
                assert_eq!(p.node_count, k - 1, "ell={ell} k={k}");
            }
        }
    }

    #[test]
    fn higher_radial_modes_match_zeros() {
        let p = solve_sector(&flat(2, 1.0, 0), 5, 1e-10).unwrap();
        let j = 14.930_917_708_487_786f64;
        assert!((p.lambda - j * j).abs() < 1e-7 * j * j);
        let p = solve_sector(&flat(2, 1.0, 10), 2, 1e-10).unwrap();
        let j = 18.433_463_666_966_583f64;
        assert!((p.lambda - j * j).abs() < 1e-7 * j * j);
    }

    #[test]
    fn scaling_law_for_both_eigenvalues() {
        let v = RadialPotential::power(1.5, 3.0).unwrap();
        for beta in [0.5, 2.0, 3.0] {
            let a = first_two(2, 1.5, &v, 1e-11).unwrap();
            let b = first_two(2, 1.5 / beta, &v.rescaled(beta), 1e-11).unwrap();
            let b2 = beta * beta;
            assert!((b.lambda1 - b2 * a.lambda1).abs() <= 1e-8 * b.lambda1);
            assert!((b.lambda2 - b2 * a.lambda2).abs() <= 1e-8 * b.lambda2);
        }
    }

    #[test]
    fn extreme_radii_are_rescaled() {
        let j = 2.404_825_557_695_773f64;
        for radius in [1e-4, 5e3] {
            let p = solve_sector(&flat(2, radius, 0), 1, 1e-10).unwrap();
            let want = (j / radius).powi(2);
            assert!((p.lambda - want).abs() < 1e-8 * want);
            assert!((p.radius() - radius).abs() < 1e-12 * radius);
            assert!(p.residual < 1e-6);
        }
    }

    #[test]
    fn ground_state_decreases_with_radius() {
        let v = RadialPotential::harmonic();
        let mut last = f64::INFINITY;
        for radius in [0.5, 0.8, 1.0, 1.5, 2.5] {
            let l = solve_sector(&BallProblem::new(2, radius, 0, v.clone()).unwrap(), 1, 1e-10)
                .unwrap()
                .lambda;
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn sector_ordering_with_convex_rv() {
        let pots = [
            RadialPotential::Zero,
            RadialPotential::harmonic(),
            RadialPotential::power(1.0, 4.0).unwrap(),
        ];
        for v in pots {
            let base = BallProblem::new(2, 1.0, 0, v).unwrap();
            let l1 = solve_sector(&base.with_sector(1), 1, 1e-10).unwrap().lambda;
            let l02 = solve_sector(&base, 2, 1e-10).unwrap().lambda;
            assert!(l1 <= l02);
        }
    }

    #[test]
    fn weighted_problems_differ_by_twice_the_dimension() {
        // e^{-r²}ψ turns the e^{r²}-weighted equation into the e^{-r²} one
        // shifted by 2n.
        for n in [2, 3] {
            for ell in [0, 1] {
                let plus = BallProblem::new(n, 1.5, ell, RadialPotential::Zero)
                    .unwrap()
                    .with_weight(WeightSign::Plus);
                let minus = plus.clone().with_weight(WeightSign::Minus);
                let lp = solve_sector(&plus, 1, 1e-11).unwrap().lambda;
                let lm = solve_sector(&minus, 1, 1e-11).unwrap().lambda;
                assert!((lp - lm - 2.0 * n as f64).abs() < 1e-8, "{lp} {lm}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_samples() {
        let p = solve_sector(&flat(2, 1.0, 0), 1, 1e-10).unwrap();
        let i = 700;
        let (z, dz) = p.eval(p.r[i]);
        assert!((z - p.z[i]).abs() < 1e-14);
        assert!((dz - p.dz[i]).abs() < 1e-10);
        let (zm, _) = p.eval(0.5 * (p.r[i] + p.r[i + 1]));
        assert!(zm < p.z[i] && zm > p.z[i + 1]);
        assert_eq!(p.eval(1.5), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BallProblem::new(1, 1.0, 0, RadialPotential::Zero).is_err());
        assert!(BallProblem::new(2, -1.0, 0, RadialPotential::Zero).is_err());
        let prob = flat(2, 1.0, 0);
        assert!(solve_sector(&prob, 0, 1e-10).is_err());
        assert!(solve_sector(&prob, 11, 1e-10).is_err());
        assert!(solve_sector(&prob, 1, 1e-14).is_err());
    }

    #[test]
    fn weight_sign_round_trip() {
        for w in [WeightSign::None, WeightSign::Plus, WeightSign::Minus] {
            assert_eq!(w.to_string().parse::<WeightSign>().unwrap(), w);
        }
    }
}
