//! Comparison balls, the second-eigenvalue bound for a domain against its
//! comparison ball, the gap bound built from `g = z₂/z₁`, and scans of the
//! eigenvalue ratio over radii.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{solve_extrapolated, DomainGrid, DomainPotential};
use crate::error::{PpwError, Result};
use crate::numerics::{brent, linspace, simpson, unit_sphere_area};
use crate::potentials::{dominates, validate_conditions, ConditionReport, DominationReport, RadialPotential};
use crate::radial::{self, first_two, solve_sector, BallProblem, EigenPair, SmoothEigenfunction};
use crate::rearrange::{rearrange, Direction};
use crate::riccati::check_pair;

/// Relative tolerance for matching `λ₁` of a domain and its comparison ball.
pub const MATCH_TOL: f64 = 1e-8;
/// Largest radius tried when growing a comparison ball.
pub const MAX_BALL_RADIUS: f64 = 1e4;
/// Absolute slack for monotonicity and sign checks in radius scans.
pub const SCAN_SLACK: f64 = 1e-8;
/// Share of the gap numerator carried outside `R₁` above which a report is
/// flagged.
pub const EXTERIOR_FLAG: f64 = 0.01;
const CENTER_MAX_ITER: usize = 200;

fn ball_lambda1(n: usize, radius: f64, v: &RadialPotential, tol: f64) -> Result<f64> {
    let prob = BallProblem::new(n, radius, 0, v.clone())?;
    Ok(solve_sector(&prob, 1, tol)?.lambda)
}

/// Radius `R₁` of the origin-centred ball with `λ₁(B_{R₁}, Ṽ) = target`,
/// to relative accuracy `tol`. `R ↦ λ₁(B_R, Ṽ)` decreases strictly, so the
/// root is bracketed by halving or doubling from `R = 1` and polished in
/// `log R`.
pub fn comparison_ball(n: usize, target: f64, v_tilde: &RadialPotential, tol: f64) -> Result<f64> {
    if !target.is_finite() {
        return Err(PpwError::Range(format!("target eigenvalue must be finite, got {target}")));
    }
    let rtol = (tol * 1e-2).clamp(1e-13, radial::DEFAULT_TOL);
    let r_max = MAX_BALL_RADIUS.min(v_tilde.max_radius());
    let lam = |r: f64| ball_lambda1(n, r, v_tilde, rtol);

    let mut lo = 1.0f64.min(r_max);
    let mut l_lo = lam(lo)?;
    while l_lo < target {
        lo *= 0.5;
        if lo < 1e-8 {
            return Err(PpwError::Numeric(format!("no ball radius above 1e-8 reaches λ₁ = {target}")));
        }
        l_lo = lam(lo)?;
    }
    let mut hi = lo;
    let mut l_hi = l_lo;
    while l_hi >= target {
        let next = (2.0 * hi).min(r_max);
        if next <= hi {
            return Err(PpwError::NoSolution { target, limit: l_hi });
        }
        let l_next = lam(next)?;
        // Once λ₁ no longer moves at the matching tolerance, a target within
        // that tolerance of it cannot be told apart from the limit.
        let resolution = tol * l_next.abs().max(1.0);
        if (l_hi - l_next).abs() <= resolution && l_next >= target - resolution {
            return Err(PpwError::NoSolution { target, limit: l_next });
        }
        lo = hi;
        hi = next;
        l_hi = l_next;
    }
    if l_hi == target {
        return Ok(hi);
    }
    let t = brent(|t| Ok(lam(t.exp())? - target), lo.ln(), hi.ln(), 1e-14, 200)?;
    let r1 = t.exp();
    let got = lam(r1)?;
    if r1 < r_max {
        let far = lam((2.0 * r1).min(r_max))?;
        if (got - far).abs() <= tol * got.abs().max(1.0) {
            return Err(PpwError::NoSolution { target, limit: far });
        }
    }
    if (got - target).abs() > tol * target.abs().max(1.0) {
        return Err(PpwError::Numeric(format!(
            "comparison ball R = {r1} gives λ₁ = {got}, target {target}"
        )));
    }
    Ok(r1)
}

/// `g = z₂/z₁` of a ball and `B = g'² + (n−1)g²/r²`, extended to all radii:
/// `g` keeps its boundary value `z₂'(R₁)/z₁'(R₁)` beyond `R₁`, where `g' = 0`.
pub struct GapFunctions<'a> {
    n: usize,
    r1: f64,
    z1: SmoothEigenfunction<'a>,
    z2: SmoothEigenfunction<'a>,
    lambda1: f64,
    lambda2: f64,
    g_boundary: f64,
    slope_origin: f64,
    /// Start of the last stretch before `R₁`, bridged by a cubic from
    /// `(g, g')` there to `(g(R₁), 0)`; both `z` vanish at `R₁` and their
    /// ratio loses accuracy.
    blend_from: f64,
    blend_start: (f64, f64),
}

const BLEND: f64 = 0.01;

impl<'a> GapFunctions<'a> {
    pub fn new(prob: &BallProblem, z1: &'a EigenPair, z2: &'a EigenPair) -> Result<Self> {
        check_pair(prob, z1, z2)?;
        let m = z1.r.len();
        let r1 = prob.radius;
        let z1s = SmoothEigenfunction::new(prob, z1);
        let z2s = SmoothEigenfunction::new(prob, z2);
        let blend_from = r1 * (1.0 - BLEND);
        let raw = |r: f64| {
            let (a, da) = z1s.eval(r);
            let (b, db) = z2s.eval(r);
            (b / a, (db * a - b * da) / (a * a))
        };
        let blend_start = raw(blend_from);
        Ok(GapFunctions {
            n: prob.n,
            r1,
            lambda1: z1.lambda,
            lambda2: z2.lambda,
            g_boundary: z2.dz[m - 1] / z1.dz[m - 1],
            slope_origin: z2.dz[0] / z1.z[0],
            z1: z1s,
            z2: z2s,
            blend_from,
            blend_start,
        })
    }

    pub fn radius(&self) -> f64 {
        self.r1
    }

    pub fn boundary_value(&self) -> f64 {
        self.g_boundary
    }

    /// `(g(r), g'(r))`.
    pub fn g_and_prime(&self, r: f64) -> (f64, f64) {
        if r <= 0.0 {
            return (0.0, self.slope_origin);
        }
        if r >= self.r1 {
            return (self.g_boundary, 0.0);
        }
        if r >= self.blend_from {
            let h = self.r1 - self.blend_from;
            let t = (r - self.blend_from) / h;
            let (f0, d0) = self.blend_start;
            let f1 = self.g_boundary;
            let (t2, t3) = (t * t, t * t * t);
            let f = (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * f1;
            let df = ((6.0 * t2 - 6.0 * t) * f0 + (3.0 * t2 - 4.0 * t + 1.0) * h * d0 + (-6.0 * t2 + 6.0 * t) * f1) / h;
            return (f, df);
        }
        let (a, da) = self.z1.eval(r);
        let (b, db) = self.z2.eval(r);
        (b / a, (db * a - b * da) / (a * a))
    }

    pub fn g(&self, r: f64) -> f64 {
        self.g_and_prime(r).0
    }

    pub fn b(&self, r: f64) -> f64 {
        let (g, gp) = self.g_and_prime(r);
        if r <= 0.0 {
            return self.n as f64 * gp * gp;
        }
        gp * gp + (self.n as f64 - 1.0) * g * g / (r * r)
    }

    /// `∫_{B_{R₁}} f(r) z₁² dⁿx` by Simpson's rule on the solver grid.
    fn ball_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let z = self.z1.pair;
        let n = self.n as i32;
        let vals: Vec<f64> = z
            .r
            .iter()
            .zip(&z.z)
            .map(|(&r, &zr)| f(r) * zr * zr * r.powi(n - 1))
            .collect();
        unit_sphere_area(self.n) * simpson(&vals, z.step())
    }

    /// `∫ B z₁² / ∫ g² z₁²` over the ball, which equals `λ₂ − λ₁` there.
    pub fn ball_quotient(&self) -> (f64, f64) {
        let num = self.ball_integral(|r| self.b(r));
        let den = self.ball_integral(|r| self.g(r).powi(2));
        (num / den, self.lambda2 - self.lambda1)
    }
}

fn check_planar(grid: &DomainGrid, u1: &[f64], gf: &GapFunctions) -> Result<()> {
    if gf.n != 2 {
        return Err(PpwError::Contract(format!(
            "planar domain needs a two-dimensional ball, got n = {}",
            gf.n
        )));
    }
    if u1.len() != grid.nx * grid.ny {
        return Err(PpwError::Contract(format!(
            "eigenfunction has {} values, grid has {} cells",
            u1.len(),
            grid.nx * grid.ny
        )));
    }
    Ok(())
}

/// Interior cells as `(x, y, u²·h²)`.
fn weighted_cells(grid: &DomainGrid, u1: &[f64]) -> Vec<(f64, f64, f64)> {
    let h2 = grid.h * grid.h;
    grid.interior_indices()
        .into_iter()
        .map(|k| {
            let (x, y) = grid.cell_center(k % grid.nx, k / grid.nx);
            (x, y, u1[k] * u1[k] * h2)
        })
        .collect()
}

/// `W(c) = ∫ g(|x−c|) (x−c)/|x−c| u₁²` and `∫ g(|x−c|) u₁²`.
fn moment(cells: &[(f64, f64, f64)], gf: &GapFunctions, c: (f64, f64)) -> ([f64; 2], f64) {
    let mut w = [0.0; 2];
    let mut mass = 0.0;
    for &(x, y, m) in cells {
        let (dx, dy) = (x - c.0, y - c.1);
        let r = dx.hypot(dy);
        let g = gf.g(r);
        mass += g * m;
        if r > 0.0 {
            w[0] += g * dx / r * m;
            w[1] += g * dy / r * m;
        }
    }
    (w, mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub x: f64,
    pub y: f64,
    /// `|W(c)| / ∫ g u₁²` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Origin `c` about which the test functions `g(|x−c|)(x−c)_i/|x−c|` are
/// orthogonal to `u₁²`: damped Newton on `W(c) = 0` from the centroid of
/// `u₁²`, with a finite-difference Jacobian.
pub fn center_find(grid: &DomainGrid, u1: &[f64], gf: &GapFunctions, tol: f64) -> Result<Center> {
    check_planar(grid, u1, gf)?;
    let cells = weighted_cells(grid, u1);
    let total: f64 = cells.iter().map(|c| c.2).sum();
    let mut c = (
        cells.iter().map(|c| c.0 * c.2).sum::<f64>() / total,
        cells.iter().map(|c| c.1 * c.2).sum::<f64>() / total,
    );
    let norm = |w: [f64; 2]| w[0].hypot(w[1]);
    let (mut w, mut mass) = moment(&cells, gf, c);
    let step = 1e-6 * (grid.nx.max(grid.ny) as f64 * grid.h);
    for it in 0..CENTER_MAX_ITER {
        if norm(w) <= tol * mass {
            return Ok(Center { x: c.0, y: c.1, residual: norm(w) / mass, iterations: it });
        }
        let col = |dx: f64, dy: f64| {
            let (wp, _) = moment(&cells, gf, (c.0 + dx, c.1 + dy));
            let (wm, _) = moment(&cells, gf, (c.0 - dx, c.1 - dy));
            [(wp[0] - wm[0]) / (2.0 * step), (wp[1] - wm[1]) / (2.0 * step)]
        };
        let (jx, jy) = (col(step, 0.0), col(0.0, step));
        let det = jx[0] * jy[1] - jy[0] * jx[1];
        if det == 0.0 || !det.is_finite() {
            return Err(PpwError::Numeric(format!("singular Jacobian at centre {c:?}")));
        }
        let d = (
            -(jy[1] * w[0] - jy[0] * w[1]) / det,
            -(-jx[1] * w[0] + jx[0] * w[1]) / det,
        );
        let mut t = 1.0;
        loop {
            let trial = (c.0 + t * d.0, c.1 + t * d.1);
            let (wt, mt) = moment(&cells, gf, trial);
            if norm(wt) < norm(w) {
                c = trial;
                w = wt;
                mass = mt;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(PpwError::Numeric(format!(
                    "centre search stalled at {c:?} with |W| = {:e}",
                    norm(w) / mass
                )));
            }
        }
    }
    Err(PpwError::Numeric(format!(
        "centre search did not converge in {CENTER_MAX_ITER} iterations; |W| = {:e}",
        norm(w) / mass
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    /// `∫ B(|x−c|) u₁²`.
    pub numerator: f64,
    /// `∫ g(|x−c|)² u₁²`.
    pub denominator: f64,
    pub rhs: f64,
    /// `λ₂ − λ₁` of the domain.
    pub gap: f64,
    /// `gap ≤ rhs + slack`.
    pub holds: bool,
    /// Share of the numerator from cells beyond `R₁`.
    pub exterior_fraction: f64,
    pub exterior_flagged: bool,
}

/// Upper bound `∫ B u₁² / ∫ g² u₁²` for `λ₂ − λ₁` of a planar domain, with
/// the test functions centred at `center`.
pub fn gap_bound(
    grid: &DomainGrid,
    u1: &[f64],
    gap: f64,
    gf: &GapFunctions,
    center: (f64, f64),
    slack: f64,
) -> Result<GapBound> {
    check_planar(grid, u1, gf)?;
    let mut numerator = 0.0;
    let mut exterior = 0.0;
    let mut denominator = 0.0;
    for (x, y, m) in weighted_cells(grid, u1) {
        let r = (x - center.0).hypot(y - center.1);
        let b = gf.b(r) * m;
        numerator += b;
        if r > gf.r1 {
            exterior += b;
        }
        denominator += gf.g(r).powi(2) * m;
    }
    let rhs = numerator / denominator;
    let exterior_fraction = exterior / numerator;
    Ok(GapBound {
        numerator,
        denominator,
        rhs,
        gap,
        holds: gap <= rhs + slack,
        exterior_fraction,
        exterior_flagged: exterior_fraction > EXTERIOR_FLAG,
    })
}

/// The two chains that carry the gap bound from the domain to the ball:
///
/// ```text
/// ∫_Ω B u₁² ≤ ∫_{Ω⋆} B⋆ u₁⋆² ≤ ∫_{Ω⋆} B u₁⋆² ≤ ∫_{S₁} B z₁²
/// ∫_Ω g² u₁² ≥ ∫_{Ω⋆} (g²)⋆ u₁⋆² ≥ ∫_{Ω⋆} g² u₁⋆² ≥ ∫_{S₁} g² z₁²
/// ```
///
/// with `B⋆` the decreasing and `(g²)⋆` the increasing rearrangement of the
/// values on `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RearrangementChains {
    pub b: [f64; 4],
    pub g2: [f64; 4],
}

impl RearrangementChains {
    /// Whether each step of the two chains holds up to `slack` relative to
    /// the larger side.
    pub fn steps_hold(&self, slack: f64) -> ([bool; 3], [bool; 3]) {
        let le = |a: f64, b: f64| a <= b + slack * a.abs().max(b.abs());
        let b = [le(self.b[0], self.b[1]), le(self.b[1], self.b[2]), le(self.b[2], self.b[3])];
        let g = [le(self.g2[1], self.g2[0]), le(self.g2[2], self.g2[1]), le(self.g2[3], self.g2[2])];
        (b, g)
    }

    /// Largest relative violation over all six steps (0 when all hold).
    pub fn worst_violation(&self) -> f64 {
        let over = |a: f64, b: f64| ((a - b) / a.abs().max(b.abs())).max(0.0);
        [
            over(self.b[0], self.b[1]),
            over(self.b[1], self.b[2]),
            over(self.b[2], self.b[3]),
            over(self.g2[1], self.g2[0]),
            over(self.g2[2], self.g2[1]),
            over(self.g2[3], self.g2[2]),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn rearrangement_chains(
    grid: &DomainGrid,
    u1: &[f64],
    gf: &GapFunctions,
    center: (f64, f64),
) -> Result<RearrangementChains> {
    check_planar(grid, u1, gf)?;
    let h2 = grid.h * grid.h;
    let cells = grid.interior_indices();
    let u: Vec<f64> = cells.iter().map(|&k| u1[k]).collect();
    let radii: Vec<f64> = cells
        .iter()
        .map(|&k| {
            let (x, y) = grid.cell_center(k % grid.nx, k / grid.nx);
            (x - center.0).hypot(y - center.1)
        })
        .collect();
    let b_vals: Vec<f64> = radii.iter().map(|&r| gf.b(r)).collect();
    let g_vals: Vec<f64> = radii.iter().map(|&r| gf.g(r).powi(2)).collect();

    let star = rearrange(&u, h2, 2, Direction::Decreasing)?;
    let u2: Vec<f64> = star.values.iter().map(|v| v * v).collect();
    let mut b_desc = b_vals.clone();
    b_desc.sort_by(|a, b| b.total_cmp(a));
    let mut g_asc = g_vals.clone();
    g_asc.sort_by(f64::total_cmp);
    let pair = |f: &[f64]| f.iter().zip(&u2).map(|(a, b)| a * b).sum::<f64>() * h2;

    let b0: f64 = b_vals.iter().zip(&u).map(|(b, v)| b * v * v).sum::<f64>() * h2;
    let g0: f64 = g_vals.iter().zip(&u).map(|(g, v)| g * v * v).sum::<f64>() * h2;
    let b2: Vec<f64> = star.radii.iter().map(|&r| gf.b(r)).collect();
    let g2: Vec<f64> = star.radii.iter().map(|&r| gf.g(r).powi(2)).collect();
    Ok(RearrangementChains {
        b: [b0, pair(&b_desc), pair(&b2), gf.ball_integral(|r| gf.b(r))],
        g2: [g0, pair(&g_asc), pair(&g2), gf.ball_integral(|r| gf.g(r).powi(2))],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub lambda1_omega: f64,
    pub lambda2_omega: f64,
    /// Richardson error estimates of the two domain eigenvalues.
    pub lambda1_error: f64,
    pub lambda2_error: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "lambda1_S1")]
    pub lambda1_s1: f64,
    #[serde(rename = "lambda2_S1")]
    pub lambda2_s1: f64,
    /// `λ₂(S₁, Ṽ) − λ₂(Ω, V)`.
    pub margin: f64,
    /// Three times the combined error estimate.
    pub slack: f64,
    pub gap_bound_rhs: Option<f64>,
    pub gap_exterior_fraction: Option<f64>,
    pub center: Option<(f64, f64)>,
    pub chains: Option<RearrangementChains>,
    pub conditions: ConditionReport,
    pub domination: DominationReport,
    /// `margin ≥ −slack`.
    pub passed: bool,
    pub warnings: Vec<String>,
}

/// Largest distance from the potential origin to an interior cell corner.
fn grid_reach(grid: &DomainGrid) -> f64 {
    let half_diag = grid.h * std::f64::consts::FRAC_1_SQRT_2;
    grid.interior_indices()
        .into_iter()
        .map(|k| grid.radius_at(k % grid.nx, k / grid.nx) + half_diag)
        .fold(0.0, f64::max)
}

/// Checks `λ₂(Ω, V) ≤ λ₂(S₁, Ṽ)` for the planar domain `grid`, where `S₁` is
/// the origin-centred disk with `λ₁(S₁, Ṽ) = λ₁(Ω, V)`. Domain eigenvalues
/// come from `grid` and its refinement with Richardson extrapolation; `tol`
/// is the eigen-solver tolerance.
pub fn verify_second_eigenvalue_bound(
    grid: &DomainGrid,
    v: &DomainPotential,
    v_tilde: &RadialPotential,
    tol: f64,
) -> Result<ComparisonReport> {
    let reach = grid_reach(grid).min(v_tilde.max_radius());
    let conditions = validate_conditions(v_tilde, reach, v_tilde.default_tolerance())?;
    if !conditions.a_holds {
        return Err(PpwError::Contract(
            "comparison potential violates Ṽ(0) = Ṽ'(0) = 0".into(),
        ));
    }
    if !conditions.b_holds {
        return Err(PpwError::Contract(format!(
            "comparison potential violates monotone convex Ṽ' near r = {}",
            conditions.worst_location
        )));
    }

    let (_, fine, ex) = solve_extrapolated(grid, v, 2, tol)?;
    let (l1, l2) = (ex.lambda1(), ex.lambda2());
    let (e1, e2) = (ex.errors[0], ex.errors[1]);
    let mut warnings = Vec::new();
    if fine.near_double {
        warnings.push("second eigenvalue of the domain is nearly double".to_string());
    }

    let r1 = comparison_ball(2, l1, v_tilde, MATCH_TOL)?;

    // V⋆ against Ṽ on the comparison disk. V⋆ comes from sorted cell values
    // and follows the true rearrangement within about one cell in radius.
    let values = v.sample(grid)?;
    let interior: Vec<f64> = grid.interior_indices().iter().map(|&k| values[k]).collect();
    let v_star = rearrange(&interior, grid.h * grid.h, 2, Direction::Increasing)?;
    let slope = linspace(0.0, r1, 256)
        .into_iter()
        .map(|r| v_tilde.eval_unchecked(r).1.abs())
        .fold(0.0, f64::max);
    let dom_tol = 2.0 * grid.h * slope + v_tilde.default_tolerance();
    let domination = dominates(v_tilde, &v_star, r1, dom_tol);
    if !domination.holds {
        return Err(PpwError::Contract(format!(
            "Ṽ exceeds the increasing rearrangement of V by {} at r = {}",
            -domination.worst_margin, domination.worst_location
        )));
    }

    let rtol = radial::DEFAULT_TOL;
    let s1 = first_two(2, r1, v_tilde, rtol)?;
    if let Some(w) = &s1.warning {
        warnings.push(w.clone());
    }
    // Sensitivity of λ₂(S₁) to an error in the matched λ₁.
    let d = 1e-4 * r1;
    let up = first_two(2, r1 + d, v_tilde, rtol)?;
    let down = first_two(2, r1 - d, v_tilde, rtol)?;
    let kappa = (up.lambda2 - down.lambda2) / (up.lambda1 - down.lambda1);
    let radial_err = rtol * s1.lambda2.abs() + MATCH_TOL * kappa.abs() * l1.abs();
    let slack = 3.0 * (e2 + kappa.abs() * e1 + radial_err);
    let margin = s1.lambda2 - l2;

    let prob = BallProblem::new(2, r1, 0, v_tilde.clone())?;
    let gf = GapFunctions::new(&prob, &s1.z1, &s1.z2)?;
    let (center, gap, chains) = match center_find(&fine.grid, fine.u1(), &gf, 1e-10) {
        Ok(c) => {
            let gb = gap_bound(&fine.grid, fine.u1(), l2 - l1, &gf, (c.x, c.y), slack)?;
            if gb.exterior_flagged {
                warnings.push(format!(
                    "{:.1}% of the gap numerator lies outside R₁",
                    100.0 * gb.exterior_fraction
                ));
            }
            let ch = rearrangement_chains(&fine.grid, fine.u1(), &gf, (c.x, c.y))?;
            (Some((c.x, c.y)), Some(gb), Some(ch))
        }
        Err(e) => {
            warnings.push(format!("gap bound skipped: {e}"));
            (None, None, None)
        }
    };

    Ok(ComparisonReport {
        lambda1_omega: l1,
        lambda2_omega: l2,
        lambda1_error: e1,
        lambda2_error: e2,
        r1,
        lambda1_s1: s1.lambda1,
        lambda2_s1: s1.lambda2,
        margin,
        slack,
        gap_bound_rhs: gap.map(|g| g.rhs),
        gap_exterior_fraction: gap.map(|g| g.exterior_fraction),
        center,
        chains,
        conditions,
        domination,
        passed: margin >= -slack,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub ratio: f64,
    /// `λ₂ − (1 + 2/n) λ₁`.
    pub gap_ratio_margin: f64,
}

/// First two eigenvalues of `B_R` with potential `v` for `steps` equally
/// spaced radii in `[r_min, r_max]`.
pub fn scan_ratio(
    n: usize,
    v: &RadialPotential,
    r_min: f64,
    r_max: f64,
    steps: usize,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    if !(r_min > 0.0 && r_max >= r_min) || steps < 2 {
        return Err(PpwError::Range(format!(
            "scan needs 0 < r_min ≤ r_max and at least two steps, got [{r_min}, {r_max}] × {steps}"
        )));
    }
    linspace(r_min, r_max, steps)
        .into_par_iter()
        .map(|r| {
            let f = first_two(n, r, v, tol)?;
            Ok(ScanRow {
                r,
                lambda1: f.lambda1,
                lambda2: f.lambda2,
                ratio: f.ratio(),
                gap_ratio_margin: f.lambda2 - (1.0 + 2.0 / n as f64) * f.lambda1,
            })
        })
        .collect()
}

/// Index of the first row whose ratio exceeds its predecessor's by more
/// than `slack`.
pub fn first_ratio_increase(rows: &[ScanRow], slack: f64) -> Option<usize> {
    rows.windows(2).position(|w| w[1].ratio > w[0].ratio + slack).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub eps: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap_ratio_margin: f64,
    /// `gap_ratio_margin < −SCAN_SLACK`.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub rows: Vec<SharpnessRow>,
    pub violations: usize,
    /// Smallest margin per `ε`, in input order.
    pub min_margin: Vec<(f64, f64)>,
}

/// Scans `λ₂ − (1 + 2/n)λ₁` for `V = r^{2−ε}` over radii; `ε = 0` is the
/// harmonic potential.
pub fn sharpness_scan(
    n: usize,
    epsilons: &[f64],
    r_min: f64,
    r_max: f64,
    steps: usize,
    tol: f64,
) -> Result<SharpnessReport> {
    let mut rows = Vec::new();
    let mut min_margin = Vec::new();
    for &eps in epsilons {
        if !(0.0..1.0).contains(&eps) {
            return Err(PpwError::Range(format!("ε must lie in [0, 1), got {eps}")));
        }
        let v = RadialPotential::power(1.0, 2.0 - eps)?;
        let scan = scan_ratio(n, &v, r_min, r_max, steps, tol)?;
        let lowest = scan.iter().map(|s| s.gap_ratio_margin).fold(f64::INFINITY, f64::min);
        min_margin.push((eps, lowest));
        rows.extend(scan.into_iter().map(|s| SharpnessRow {
            eps,
            r: s.r,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            gap_ratio_margin: s.gap_ratio_margin,
            violation: s.gap_ratio_margin < -SCAN_SLACK,
        }));
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(SharpnessReport { rows, violations, min_margin })
}

/// The rescaling argument behind monotonicity of `λ₂/λ₁` in the radius,
/// carried out numerically for `R₁ < R₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingChain {
    pub r1: f64,
    pub r2: f64,
    /// `β₀ > 1` with `ρ(β₀) = R₁`, where `λ₁(B_ρ, V) = λ₁(B_{R₂/β}, β²V(β·))`.
    pub beta0: f64,
    /// `√(λ₁(R₁)/λ₁(R₂))`, which `β₀` equals by the scaling law.
    pub beta0_scaling: f64,
    /// `λ₂(R₂/β₀, β₀²V(β₀·))` and `λ₂(R₁, V)`.
    pub lambda2_scaled: f64,
    pub lambda2_r1: f64,
    /// `λ₂/λ₁` on `(R₂/β₀, β₀²V(β₀·))`, on `R₁` and on `R₂`.
    pub ratio_scaled: f64,
    pub ratio_r1: f64,
    pub ratio_r2: f64,
    /// `λ₂(R₂/β₀, β₀²V(β₀·)) ≤ λ₂(R₁, V)`.
    pub second_eigenvalue_holds: bool,
    /// `λ₂/λ₁` is invariant under the rescaling.
    pub scaling_holds: bool,
    /// `λ₂/λ₁(R₁) ≥ λ₂/λ₁(R₂)`.
    pub ratio_holds: bool,
}

pub fn rescaling_chain(n: usize, v: &RadialPotential, r1: f64, r2: f64, tol: f64) -> Result<RescalingChain> {
    if !(r1 > 0.0 && r2 > r1) {
        return Err(PpwError::Range(format!("needs 0 < R₁ < R₂, got {r1}, {r2}")));
    }
    let rho = |beta: f64| -> Result<f64> {
        let target = ball_lambda1(n, r2 / beta, &v.rescaled(beta), tol)?;
        comparison_ball(n, target, v, MATCH_TOL)
    };
    let mut hi = 2.0;
    while rho(hi)? > r1 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(PpwError::Numeric("ρ(β) did not fall below R₁".into()));
        }
    }
    let beta0 = brent(|b| Ok(rho(b)? - r1), 1.0, hi, 1e-12, 200)?;

    let base = first_two(n, r1, v, tol)?;
    let far = first_two(n, r2, v, tol)?;
    let scaled = first_two(n, r2 / beta0, &v.rescaled(beta0), tol)?;
    let slack = SCAN_SLACK.max(1e3 * MATCH_TOL * base.lambda2.abs());
    Ok(RescalingChain {
        r1,
        r2,
        beta0,
        beta0_scaling: (base.lambda1 / far.lambda1).sqrt(),
        lambda2_scaled: scaled.lambda2,
        lambda2_r1: base.lambda2,
        ratio_scaled: scaled.ratio(),
        ratio_r1: base.ratio(),
        ratio_r2: far.ratio(),
        second_eigenvalue_holds: scaled.lambda2 <= base.lambda2 + slack,
        scaling_holds: (scaled.ratio() - far.ratio()).abs() <= SCAN_SLACK,
        ratio_holds: base.ratio() >= far.ratio() - SCAN_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{solve_domain, Shape};
    use crate::special::{bessel_zero, ppw_constant};
    use std::f64::consts::PI;

    #[test]
    fn comparison_ball_for_the_square() {
        let j0 = bessel_zero(0.0, 1).unwrap().value;
        let r1 = comparison_ball(2, 2.0 * PI * PI, &RadialPotential::Zero, MATCH_TOL).unwrap();
        assert!((r1 - j0 / (PI * 2f64.sqrt())).abs() < 1e-8, "{r1}");
        assert!((r1 - 0.5412).abs() < 1e-4);
    }

    #[test]
    fn comparison_ball_identity() {
        let v = RadialPotential::harmonic();
        for r in [0.5, 1.0, 2.0] {
            let target = ball_lambda1(2, r, &v, 1e-12).unwrap();
            let r1 = comparison_ball(2, target, &v, MATCH_TOL).unwrap();
            assert!((r1 - r).abs() < 1e-8 * r, "{r} → {r1}");
        }
    }

    #[test]
    fn harmonic_limit_has_no_ball() {
        match comparison_ball(2, 2.0, &RadialPotential::harmonic(), MATCH_TOL) {
            Err(PpwError::NoSolution { target, limit }) => {
                assert_eq!(target, 2.0);
                assert!((limit - 2.0).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            comparison_ball(2, -1.0, &RadialPotential::Zero, MATCH_TOL),
            Err(PpwError::NoSolution { .. })
        ));
    }

    fn ball(n: usize, r: f64, v: RadialPotential) -> (BallProblem, EigenPair, EigenPair) {
        let prob = BallProblem::new(n, r, 0, v).unwrap();
        let f = first_two(n, r, &prob.potential, 1e-11).unwrap();
        (prob, f.z1, f.z2)
    }

    #[test]
    fn ball_quotient_is_the_gap() {
        for (n, v) in [(2, RadialPotential::Zero), (2, RadialPotential::harmonic()), (3, RadialPotential::power(1.0, 4.0).unwrap())] {
            let (prob, z1, z2) = ball(n, 1.0, v);
            let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
            let (q, gap) = gf.ball_quotient();
            assert!((q - gap).abs() < 1e-6 * gap, "n={n}: {q} vs {gap}");
        }
    }

    #[test]
    fn extended_g_and_b_are_monotone() {
        let (prob, z1, z2) = ball(2, 1.0, RadialPotential::harmonic());
        let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
        let rs = linspace(0.0, 2.0, 4001);
        let g: Vec<f64> = rs.iter().map(|&r| gf.g(r)).collect();
        let b: Vec<f64> = rs.iter().map(|&r| gf.b(r)).collect();
        assert!(g.windows(2).all(|w| w[1] >= w[0]));
        if let Some(i) = b.windows(2).position(|w| w[1] > w[0]) {
            panic!("B increases at r = {}: {} → {}", rs[i], b[i], b[i + 1]);
        }
        // Continuity across the blend and across R₁.
        for r in [0.99, 1.0] {
            assert!((gf.g(r - 1e-9) - gf.g(r + 1e-9)).abs() < 1e-6);
            assert!((gf.b(r - 1e-9) - gf.b(r + 1e-9)).abs() < 1e-5);
        }
    }

    fn ground_state(shape: Shape, h: f64, v: RadialPotential) -> (DomainGrid, Vec<f64>, f64, f64) {
        let grid = DomainGrid::from_shape(shape, h).unwrap();
        let s = solve_domain(&grid, &DomainPotential::Radial(v), 2, 1e-10).unwrap();
        (grid, s.u1().to_vec(), s.lambda1(), s.lambda2())
    }

    fn comparison(l1: f64, v: &RadialPotential) -> (BallProblem, EigenPair, EigenPair) {
        let r1 = comparison_ball(2, l1, v, MATCH_TOL).unwrap();
        ball(2, r1, v.clone())
    }

    #[test]
    fn symmetric_domains_centre_at_their_centre() {
        for shape in [Shape::square(1.0), Shape::disk(0.7).centered_at(0.2, -0.1)] {
            let (grid, u, l1, _) = ground_state(shape, 1.0 / 48.0, RadialPotential::Zero);
            let (prob, z1, z2) = comparison(l1, &RadialPotential::Zero);
            let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
            let c = center_find(&grid, &u, &gf, 1e-10).unwrap();
            let (cx, cy) = shape.center();
            assert!((c.x - cx).abs() < 1e-8 && (c.y - cy).abs() < 1e-8, "{shape}: {c:?}");
        }
    }

    #[test]
    fn l_shape_centre_lies_inside() {
        let shape = Shape::l_shape(1.0);
        let (grid, u, l1, _) = ground_state(shape, 1.0 / 32.0, RadialPotential::Zero);
        let (prob, z1, z2) = comparison(l1, &RadialPotential::Zero);
        let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
        let c = center_find(&grid, &u, &gf, 1e-10).unwrap();
        assert!(c.residual <= 1e-10);
        let (cx, cy) = shape.center();
        let (hx, hy) = shape.half_extent();
        assert!((c.x - cx).abs() < hx && (c.y - cy).abs() < hy, "{c:?}");
        // Not the bounding-box centre: the L is asymmetric.
        assert!((c.x - cx).abs() + (c.y - cy).abs() > 1e-3);
    }

    #[test]
    fn square_gap_bound_exceeds_gap() {
        let (grid, u, l1, l2) = ground_state(Shape::square(1.0), 1.0 / 48.0, RadialPotential::Zero);
        let (prob, z1, z2) = comparison(l1, &RadialPotential::Zero);
        let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
        let c = center_find(&grid, &u, &gf, 1e-10).unwrap();
        let gb = gap_bound(&grid, &u, l2 - l1, &gf, (c.x, c.y), 0.0).unwrap();
        assert!(gb.holds && gb.rhs > 3.0 * PI * PI, "{gb:?}");
        let ch = rearrangement_chains(&grid, &u, &gf, (c.x, c.y)).unwrap();
        let (b, g) = ch.steps_hold(1e-3);
        assert!(b.iter().chain(&g).all(|&x| x), "{ch:?}");
    }

    #[test]
    fn disk_gap_bound_is_tight() {
        let v = RadialPotential::harmonic();
        let (grid, u, l1, _) = ground_state(Shape::disk(1.0), 1.0 / 64.0, v.clone());
        let (prob, z1, z2) = comparison(l1, &v);
        let gf = GapFunctions::new(&prob, &z1, &z2).unwrap();
        let c = center_find(&grid, &u, &gf, 1e-10).unwrap();
        let gb = gap_bound(&grid, &u, 0.0, &gf, (c.x, c.y), 0.0).unwrap();
        let gap = z2.lambda - z1.lambda;
        assert!((gb.rhs - gap).abs() < 1e-3 * gap, "{} vs {gap}", gb.rhs);
    }

    #[test]
    fn square_satisfies_the_bound() {
        let grid = DomainGrid::from_shape(Shape::square(1.0), 1.0 / 32.0).unwrap();
        let rep = verify_second_eigenvalue_bound(
            &grid,
            &DomainPotential::Radial(RadialPotential::Zero),
            &RadialPotential::Zero,
            1e-10,
        )
        .unwrap();
        assert!(rep.passed && rep.margin > 0.0, "{rep:?}");
        assert!((rep.lambda2_omega / rep.lambda1_omega - 2.5).abs() < 1e-3);
        assert!((rep.lambda2_s1 / rep.lambda1_s1 - ppw_constant(2).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn bound_rejects_bad_comparison_potentials() {
        let grid = DomainGrid::from_shape(Shape::square(1.0), 1.0 / 16.0).unwrap();
        let zero = DomainPotential::Radial(RadialPotential::Zero);
        let shifted = RadialPotential::parse("poly:c0=1,c2=1");
        if let Ok(p) = shifted {
            assert!(matches!(verify_second_eigenvalue_bound(&grid, &zero, &p, 1e-10), Err(PpwError::Contract(_))));
        }
        let r32 = RadialPotential::power(1.0, 1.5).unwrap();
        assert!(matches!(verify_second_eigenvalue_bound(&grid, &zero, &r32, 1e-10), Err(PpwError::Contract(m)) if m.contains("convex")));
        // Ṽ = r² is not dominated by V = 0.
        let r2 = RadialPotential::harmonic();
        assert!(matches!(verify_second_eigenvalue_bound(&grid, &zero, &r2, 1e-10), Err(PpwError::Contract(m)) if m.contains("rearrangement")));
    }

    #[test]
    fn free_ratio_is_constant() {
        let rows = scan_ratio(2, &RadialPotential::Zero, 0.5, 4.0, 6, 1e-11).unwrap();
        let c = ppw_constant(2).unwrap();
        for row in &rows {
            assert!((row.ratio - c).abs() < 1e-8, "{row:?}");
            assert!(row.gap_ratio_margin > 0.0);
        }
    }

    #[test]
    fn harmonic_ratio_decreases_to_oscillator_limit() {
        let rows = scan_ratio(2, &RadialPotential::harmonic(), 0.5, 6.0, 8, 1e-11).unwrap();
        assert_eq!(first_ratio_increase(&rows, SCAN_SLACK), None);
        assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        assert!((rows.last().unwrap().ratio - 2.0).abs() < 1e-3);
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        assert!(scan_ratio(2, &RadialPotential::Zero, 0.0, 1.0, 4, 1e-10).is_err());
        assert!(scan_ratio(2, &RadialPotential::Zero, 1.0, 2.0, 1, 1e-10).is_err());
    }

    #[test]
    fn sharpness_without_perturbation_has_no_violations() {
        let rep = sharpness_scan(2, &[0.0, 0.5], 0.25, 8.0, 6, 1e-11).unwrap();
        assert_eq!(rep.rows.len(), 12);
        assert!(rep.rows.iter().filter(|r| r.eps == 0.0).all(|r| !r.violation));
        assert_eq!(rep.min_margin.len(), 2);
        assert!(sharpness_scan(2, &[1.0], 0.25, 8.0, 3, 1e-10).is_err());
    }

    #[test]
    fn rescaling_chain_for_harmonic_potential() {
        let c = rescaling_chain(2, &RadialPotential::harmonic(), 1.0, 2.0, 1e-11).unwrap();
        assert!(c.beta0 > 1.0);
        assert!((c.beta0 - c.beta0_scaling).abs() < 1e-6 * c.beta0, "{c:?}");
        assert!(c.second_eigenvalue_holds && c.scaling_holds && c.ratio_holds, "{c:?}");
    }
}
