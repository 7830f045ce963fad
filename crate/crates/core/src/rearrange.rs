//! Spherical rearrangements of cell data, the measure coordinate
//! `s = C_n rⁿ`, and the comparison of a rearranged ground state with the
//! ground state of a ball.

use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::{cumulative_integral, unit_ball_volume};
use crate::potentials::{RadialFunction, RadialPotential};
use crate::radial::EigenPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// A monotone radial step function: value `values[i]` on the shell of
/// measure `cell_measure` centred (in measure) at `radii[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub direction: Direction,
    pub dim: usize,
    /// Volume of the unit ball, `C_n`.
    pub c_n: f64,
    pub cell_measure: f64,
    pub total_measure: f64,
}

impl RadialProfile {
    /// Radius of the ball with the profile's total measure.
    pub fn outer_radius(&self) -> f64 {
        (self.total_measure / self.c_n).powf(1.0 / self.dim as f64)
    }

    /// Value at radius `r`, linear between shell centres. Beyond the outer
    /// radius a decreasing profile vanishes and an increasing one keeps its
    /// last value.
    pub fn eval(&self, r: f64) -> f64 {
        let m = self.radii.len();
        if r > self.outer_radius() && self.direction == Direction::Decreasing {
            return 0.0;
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[m - 1] {
            return self.values[m - 1];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// `∫ f(r) · profile(r)^p` over the ball, taken shell by shell.
    pub fn integrate_power(&self, p: i32, f: impl Fn(f64) -> f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r) * v.powi(p))
            .sum::<f64>()
            * self.cell_measure
    }

    pub fn l2_norm(&self) -> f64 {
        self.integrate_power(2, |_| 1.0).sqrt()
    }
}

impl RadialFunction for RadialProfile {
    fn value_at(&self, r: f64) -> f64 {
        self.eval(r)
    }
}

/// Sorts cell values into a radially monotone profile. `cell_measure` is
/// the measure of one cell (`h²` on a planar grid) and `dim` the dimension
/// of the ball the profile lives on.
pub fn rearrange(
    values: &[f64],
    cell_measure: f64,
    dim: usize,
    direction: Direction,
) -> Result<RadialProfile> {
    if values.is_empty() {
        return Err(PpwError::Contract("cannot rearrange an empty set of samples".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PpwError::Contract("samples must be finite".into()));
    }
    if direction == Direction::Increasing && values.iter().any(|&v| v < 0.0) {
        return Err(PpwError::Contract("potentials to rearrange must be nonnegative".into()));
    }
    if !(cell_measure > 0.0) || dim < 1 {
        return Err(PpwError::Range("cell measure and dimension must be positive".into()));
    }
    let mut sorted = values.to_vec();
    match direction {
        Direction::Increasing => sorted.sort_by(f64::total_cmp),
        Direction::Decreasing => sorted.sort_by(|a, b| b.total_cmp(a)),
    }
    let c_n = unit_ball_volume(dim);
    let radii = (0..sorted.len())
        .map(|i| ((i as f64 + 0.5) * cell_measure / c_n).powf(1.0 / dim as f64))
        .collect();
    Ok(RadialProfile {
        radii,
        values: sorted,
        direction,
        dim,
        c_n,
        cell_measure,
        total_measure: values.len() as f64 * cell_measure,
    })
}

/// A function of the measure coordinate `s = C_n rⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpSamples {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl SharpSamples {
    /// Back to radial samples.
    pub fn to_radial(&self) -> (Vec<f64>, Vec<f64>) {
        let c_n = unit_ball_volume(self.dim);
        let r = self.s.iter().map(|&s| (s / c_n).powf(1.0 / self.dim as f64)).collect();
        (r, self.values.clone())
    }
}

/// `f^#(s) = f((s/C_n)^{1/n})` sampled at the profile's shells.
pub fn sharp_transform(profile: &RadialProfile) -> SharpSamples {
    let n = profile.dim as i32;
    SharpSamples {
        s: profile.radii.iter().map(|&r| profile.c_n * r.powi(n)).collect(),
        values: profile.values.clone(),
        dim: profile.dim,
    }
}

/// `f^#` of a radial function at the given measure coordinates.
pub fn sharp_function(f: impl Fn(f64) -> f64, dim: usize, s: &[f64]) -> SharpSamples {
    let c_n = unit_ball_volume(dim);
    SharpSamples {
        s: s.to_vec(),
        values: s.iter().map(|&si| f((si / c_n).powf(1.0 / dim as f64))).collect(),
        dim,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    /// Sign changes of `u⋆ − z` outside the tolerance band.
    pub count: usize,
    /// Midpoint of the bracket of the crossing when `count = 1`.
    pub r0: Option<f64>,
    /// Excursions into the band that leave with the sign they entered with.
    pub tangencies: usize,
    pub band: f64,
    /// Largest shell-mean difference `|u⋆ − z|`.
    pub max_difference: f64,
    pub shells: usize,
}

/// Default number of equal-measure shells for `m` cells.
pub fn default_shells(m: usize) -> usize {
    (((m as f64).sqrt() / 2.0) as usize).clamp(16, 256)
}

/// Counts the crossings of a decreasing rearrangement `u⋆` with a ball
/// ground state `z` (extended by zero beyond its radius). Both are expected
/// to be normalized in `L²`.
///
/// A grid function has many cells with equal values (lattice symmetries)
/// and its sorted values follow `u⋆` only up to a staircase of roughly one
/// cell in radius. The two functions are therefore compared through their
/// means over `shells` shells of equal measure. Differences below `tol`
/// (default `1e−4·max(u⋆, z)`) are ignored.
pub fn chiti_crossings(
    u_star: &RadialProfile,
    z: &EigenPair,
    tol: Option<f64>,
    shells: Option<usize>,
) -> CrossingReport {
    let m = u_star.values.len();
    let shells = shells.unwrap_or_else(|| default_shells(m)).clamp(1, m);
    let z_max = z.z.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let u_max = u_star.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let band = tol.unwrap_or(1e-4 * z_max.max(u_max));
    let cm = u_star.cell_measure;
    let radius_of = |s: f64| (s / u_star.c_n).powf(1.0 / u_star.dim as f64);
    const SUBSAMPLES: usize = 64;

    let mut count = 0;
    let mut tangencies = 0;
    let mut r0 = None;
    let mut max_difference = 0.0f64;
    // Last shell outside the band (radius, sign), and whether the band was
    // entered since.
    let mut last: Option<(f64, f64)> = None;
    let mut in_band = false;
    for b in 0..shells {
        let (lo, hi) = (b * m / shells, (b + 1) * m / shells);
        if hi <= lo {
            continue;
        }
        let u_mean = u_star.values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        let (s_lo, s_hi) = (lo as f64 * cm, hi as f64 * cm);
        let z_mean = (0..SUBSAMPLES)
            .map(|k| {
                let s = s_lo + (k as f64 + 0.5) / SUBSAMPLES as f64 * (s_hi - s_lo);
                z.eval(radius_of(s)).0
            })
            .sum::<f64>()
            / SUBSAMPLES as f64;
        let r = radius_of(0.5 * (s_lo + s_hi));
        let d = u_mean - z_mean;
        max_difference = max_difference.max(d.abs());
        if d.abs() < band {
            in_band = true;
            continue;
        }
        if let Some((r_prev, s_prev)) = last {
            if d.signum() != s_prev {
                count += 1;
                r0 = Some(0.5 * (r_prev + r));
            } else if in_band {
                tangencies += 1;
            }
        }
        last = Some((r, d.signum()));
        in_band = false;
    }
    CrossingReport {
        count,
        r0: if count == 1 { r0 } else { None },
        tangencies,
        band,
        max_difference,
        shells,
    }
}

/// `n⁻² C_n^{−2/n} s^{2/n−2}`, the factor linking `−df^#/ds` to the mass
/// integral `∫₀ˢ (λ − Ṽ_#) f^#`.
fn level_set_factor(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let c_n = unit_ball_volume(dim);
    (n * n).recip() * c_n.powf(-2.0 / n) * s.powf(2.0 / n - 2.0)
}

/// Defect of the first-order identity satisfied by a ball ground state in
/// the measure coordinate:
///
/// ```text
/// −dz^#/ds = n⁻² C_n^{−2/n} s^{2/n−2} ∫₀ˢ (λ₁ − Ṽ_#(w)) z^#(w) dw.
/// ```
///
/// Returned as the largest difference relative to `max|dz^#/ds|`.
pub fn level_set_ode_residual(
    z: &EigenPair,
    dim: usize,
    v_tilde: &RadialPotential,
    lambda1: f64,
) -> f64 {
    let n = dim as f64;
    let c_n = unit_ball_volume(dim);
    let h = z.step();
    // ∫₀ˢ … dw = ∫₀ʳ (λ − Ṽ) z n C_n ρ^{n−1} dρ
    let integrand: Vec<f64> = z
        .r
        .iter()
        .zip(&z.z)
        .map(|(&r, &zr)| (lambda1 - v_tilde.value(r)) * zr * n * c_n * r.powi(dim as i32 - 1))
        .collect();
    let mass = cumulative_integral(&integrand, h);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 1..z.r.len() {
        let r = z.r[i];
        let s = c_n * r.powi(dim as i32);
        let lhs = -z.dz[i] / (n * c_n * r.powi(dim as i32 - 1));
        let rhs = level_set_factor(dim, s) * mass[i];
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetInequality {
    /// Whether `−du^#/ds ≤ RHS + slack·max|du^#/ds|` on every bin.
    pub holds: bool,
    /// Smallest `(RHS − LHS)/max|du^#/ds|` over the bins.
    pub worst_margin: f64,
    pub worst_s: f64,
    pub slack: f64,
    pub bins: usize,
}

/// Checks the inequality counterpart of [`level_set_ode_residual`] for the
/// rearranged ground state of a general domain:
///
/// ```text
/// −du^#/ds ≤ n⁻² C_n^{−2/n} s^{2/n−2} ∫₀ˢ (λ₁ − Ṽ_#(w)) u^#(w) dw.
/// ```
///
/// The sorted cell values are grouped into `bins` shells of equal measure.
/// The derivative is the difference quotient of consecutive shell means and
/// is compared with the mean of the right-hand side between the two shell
/// centres, which is the inequality integrated over that interval.
pub fn level_set_inequality(
    u_star: &RadialProfile,
    v_tilde: &RadialPotential,
    lambda1: f64,
    bins: usize,
    slack: f64,
) -> Result<LevelSetInequality> {
    if u_star.direction != Direction::Decreasing {
        return Err(PpwError::Contract("expects a decreasing rearrangement".into()));
    }
    let m = u_star.values.len();
    let bins = bins.clamp(2, m / 2);
    let dim = u_star.dim;
    let cm = u_star.cell_measure;
    // Right-hand side at each cell centre, with the mass integral taken up
    // to that centre.
    let mut rhs_cell = Vec::with_capacity(m);
    let mut acc = 0.0;
    for (i, (&r, &u)) in u_star.radii.iter().zip(&u_star.values).enumerate() {
        let dm = (lambda1 - v_tilde.value(r)) * u * cm;
        let s = (i as f64 + 0.5) * cm;
        rhs_cell.push(level_set_factor(dim, s) * (acc + 0.5 * dm));
        acc += dm;
    }
    // Shell means of u⋆, compared between consecutive shell centres with
    // the right-hand side averaged over the cells in between.
    let edge = |b: usize| (b * m) / bins;
    let shells: Vec<(f64, f64)> = (0..bins)
        .map(|b| {
            let (lo, hi) = (edge(b), edge(b + 1));
            let mean = u_star.values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            (0.5 * (lo + hi) as f64, mean)
        })
        .collect();
    let mut rows = Vec::with_capacity(bins);
    let mut scale = 0.0f64;
    for w in shells.windows(2) {
        let ((c0, u0), (c1, u1)) = (w[0], w[1]);
        let ds = (c1 - c0) * cm;
        let lhs = (u0 - u1) / ds;
        let (i0, i1) = (c0.round() as usize, (c1.round() as usize).min(m));
        let rhs = rhs_cell[i0..i1].iter().sum::<f64>() / (i1 - i0) as f64;
        scale = scale.max(lhs.abs());
        rows.push((0.5 * (c0 + c1) * cm, lhs, rhs));
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_s = 0.0;
    for &(s, lhs, rhs) in &rows {
        let margin = (rhs - lhs) / scale;
        if margin < worst_margin {
            worst_margin = margin;
            worst_s = s;
        }
    }
    Ok(LevelSetInequality {
        holds: worst_margin >= -slack,
        worst_margin,
        worst_s,
        slack,
        bins,
    })
}
