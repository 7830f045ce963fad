//! Radial potentials `V(r) ≥ 0` and the structural checks the comparison
//! argument needs: V(0) = V'(0) = 0, monotone convex V' and convex rV.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::linspace;

/// Number of probe points used by the condition and domination checks.
pub const PROBE_POINTS: usize = 1024;
/// Default tolerance for parametric families.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default tolerance for tabulated potentials.
pub const DEFAULT_TABLE_TOL: f64 = 1e-6;

/// Anything that can be sampled as a function of the radius.
pub trait RadialFunction {
    fn value_at(&self, r: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RadialPotential {
    Zero,
    /// `k·r^alpha`
    Power { k: f64, alpha: f64 },
    /// `Σ c_{2j} r^{2j}` for `j ≥ 1`; `coeffs[0]` multiplies `r²`.
    Polynomial { coeffs: Vec<f64> },
    /// Monotone cubic interpolant through `(radii[i], values[i])`.
    Table(TablePotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePotential {
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TablePotential {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(PpwError::Contract(
                "table potential needs at least two (r, value) rows".into(),
            ));
        }
        if radii[0] != 0.0 {
            return Err(PpwError::Contract("table radii must start at 0".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PpwError::Contract("table radii must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PpwError::Contract("table values must be finite and nonnegative".into()));
        }
        let slopes = pchip_slopes(&radii, &values);
        Ok(TablePotential { radii, values, slopes })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Reads the two-column `r value` format; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| PpwError::Parse(format!("line {}: expected two columns", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| PpwError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            radii.push(parse(parts.next())?);
            values.push(parse(parts.next())?);
            if parts.next().is_some() {
                return Err(PpwError::Parse(format!("line {}: trailing columns", lineno + 1)));
            }
        }
        TablePotential::new(radii, values)
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let n = self.radii.len();
        let i = self
            .radii
            .partition_point(|&x| x <= r)
            .saturating_sub(1)
            .min(n - 2);
        let (x0, x1) = (self.radii[i], self.radii[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * h * m1)
            / h;
        let ddv = ((12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * h * m0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * h * m1)
            / (h * h);
        (v, dv, ddv)
    }
}

/// Fritsch–Carlson slopes: the cubic Hermite interpolant stays monotone on
/// every interval where the data are monotone.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            s = 0.0;
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

impl RadialPotential {
    pub fn power(k: f64, alpha: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(PpwError::Contract(format!("power potential needs k > 0, got {k}")));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(PpwError::Contract(format!(
                "power potential needs alpha >= 1, got {alpha}"
            )));
        }
        Ok(RadialPotential::Power { k, alpha })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(PpwError::Contract(
                "polynomial coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(RadialPotential::Polynomial { coeffs })
    }

    /// The harmonic potential `r²`.
    pub fn harmonic() -> Self {
        RadialPotential::Power { k: 1.0, alpha: 2.0 }
    }

    /// Largest radius at which the potential is defined.
    pub fn max_radius(&self) -> f64 {
        match self {
            RadialPotential::Table(t) => t.max_radius(),
            _ => f64::INFINITY,
        }
    }

    /// `(V, V', V'')` at `r`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r >= 0.0) {
            return Err(PpwError::Range(format!("radius must be nonnegative, got {r}")));
        }
        if r > self.max_radius() * (1.0 + 1e-12) {
            return Err(PpwError::Range(format!(
                "radius {r} beyond table range [0, {}]",
                self.max_radius()
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    /// Evaluation without the range check; tables clamp to their last knot.
    pub fn eval_unchecked(&self, r: f64) -> (f64, f64, f64) {
        match self {
            RadialPotential::Zero => (0.0, 0.0, 0.0),
            RadialPotential::Power { k, alpha } => {
                let (k, a) = (*k, *alpha);
                if r == 0.0 {
                    let d1 = if a == 1.0 { k } else { 0.0 };
                    // Even extension of r^a has a kink (a = 1) or an
                    // unbounded curvature (1 < a < 2) at the origin.
                    let d2 = if a < 2.0 {
                        f64::INFINITY
                    } else if a == 2.0 {
                        2.0 * k
                    } else {
                        0.0
                    };
                    (0.0, d1, d2)
                } else {
                    let v = k * r.powf(a);
                    (v, a * v / r, a * (a - 1.0) * v / (r * r))
                }
            }
            RadialPotential::Polynomial { coeffs } => {
                let r2 = r * r;
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                let mut rp = 1.0; // r^{2j-2}
                for (j, c) in coeffs.iter().enumerate() {
                    let p = 2.0 * (j + 1) as f64;
                    // c r^p, c p r^{p-1}, c p (p-1) r^{p-2}
                    v += c * rp * r2;
                    d1 += c * p * rp * r;
                    d2 += c * p * (p - 1.0) * rp;
                    rp *= r2;
                }
                (v, d1, d2)
            }
            RadialPotential::Table(t) => t.eval(r.min(t.max_radius())),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval_unchecked(r).0
    }

    /// The potential `β²·V(β r)`, which on `B_{R/β}` has eigenvalues `β²`
    /// times those of `V` on `B_R`.
    pub fn rescaled(&self, beta: f64) -> Self {
        let b2 = beta * beta;
        match self {
            RadialPotential::Zero => RadialPotential::Zero,
            RadialPotential::Power { k, alpha } => RadialPotential::Power {
                k: k * b2 * beta.powf(*alpha),
                alpha: *alpha,
            },
            RadialPotential::Polynomial { coeffs } => RadialPotential::Polynomial {
                coeffs: coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * b2 * beta.powi(2 * (j as i32 + 1)))
                    .collect(),
            },
            RadialPotential::Table(t) => {
                let radii: Vec<f64> = t.radii.iter().map(|r| r / beta).collect();
                let values: Vec<f64> = t.values.iter().map(|v| v * b2).collect();
                RadialPotential::Table(
                    TablePotential::new(radii, values).expect("rescaling keeps a valid table"),
                )
            }
        }
    }

    /// Canonical spec string (`table:` potentials print their knot count only).
    pub fn spec_string(&self) -> String {
        self.to_string()
    }

    pub fn is_table(&self) -> bool {
        matches!(self, RadialPotential::Table(_))
    }

    pub fn default_tolerance(&self) -> f64 {
        if self.is_table() {
            DEFAULT_TABLE_TOL
        } else {
            DEFAULT_TOL
        }
    }

    /// Parses `zero`, `power:k=..,alpha=..`, `poly:c2=..[,c4=..]` or
    /// `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        spec.parse()
    }
}

impl RadialFunction for RadialPotential {
    fn value_at(&self, r: f64) -> f64 {
        self.value(r)
    }
}

impl fmt::Display for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialPotential::Zero => write!(f, "zero"),
            RadialPotential::Power { k, alpha } => write!(f, "power:k={k},alpha={alpha}"),
            RadialPotential::Polynomial { coeffs } => {
                write!(f, "poly:")?;
                for (j, c) in coeffs.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "c{}={c}", 2 * (j + 1))?;
                }
                Ok(())
            }
            RadialPotential::Table(t) => write!(f, "table:<{} knots>", t.radii.len()),
        }
    }
}

impl FromStr for RadialPotential {
    type Err = PpwError;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "zero" {
            return Ok(RadialPotential::Zero);
        }
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| PpwError::Parse(format!("unknown potential spec `{spec}`")))?;
        let pairs = |rest: &str| -> Result<Vec<(String, f64)>> {
            rest.split(',')
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| PpwError::Parse(format!("expected key=value, got `{kv}`")))?;
                    let v = v
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| PpwError::Parse(format!("`{kv}`: {e}")))?;
                    Ok((k.trim().to_string(), v))
                })
                .collect()
        };
        match kind {
            "power" => {
                let (mut k, mut alpha) = (None, None);
                for (key, v) in pairs(rest)? {
                    match key.as_str() {
                        "k" => k = Some(v),
                        "alpha" => alpha = Some(v),
                        other => return Err(PpwError::Parse(format!("unknown power key `{other}`"))),
                    }
                }
                let k = k.ok_or_else(|| PpwError::Parse("power potential needs k".into()))?;
                let alpha = alpha.ok_or_else(|| PpwError::Parse("power potential needs alpha".into()))?;
                RadialPotential::power(k, alpha)
            }
            "poly" => {
                let mut coeffs: Vec<f64> = Vec::new();
                for (key, v) in pairs(rest)? {
                    let deg: usize = key
                        .strip_prefix('c')
                        .and_then(|d| d.parse().ok())
                        .filter(|d: &usize| *d >= 2 && d % 2 == 0)
                        .ok_or_else(|| {
                            PpwError::Parse(format!("poly keys are c2, c4, ...; got `{key}`"))
                        })?;
                    let j = deg / 2 - 1;
                    if coeffs.len() <= j {
                        coeffs.resize(j + 1, 0.0);
                    }
                    coeffs[j] = v;
                }
                RadialPotential::polynomial(coeffs)
            }
            "table" => Ok(RadialPotential::Table(TablePotential::from_file(Path::new(rest))?)),
            other => Err(PpwError::Parse(format!("unknown potential family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `V(0) = V'(0) = 0`
    pub a_holds: bool,
    /// `V'` nondecreasing and convex
    pub b_holds: bool,
    /// `r·V(r)` convex
    pub rv_convex: bool,
    /// Most negative margin among the monotonicity and convexity tests.
    pub worst_violation: f64,
    pub worst_location: f64,
    pub tol: f64,
}

/// Checks the origin condition, monotone convex `V'`, and convexity of
/// `r·V(r)` on `[0, radius]`.
pub fn validate_conditions(p: &RadialPotential, radius: f64, tol: f64) -> Result<ConditionReport> {
    if !(radius > 0.0) {
        return Err(PpwError::Contract(format!("radius must be positive, got {radius}")));
    }
    if radius > p.max_radius() * (1.0 + 1e-12) {
        return Err(PpwError::Range(format!(
            "potential not defined on [0, {radius}] (table ends at {})",
            p.max_radius()
        )));
    }
    let rs = linspace(0.0, radius, PROBE_POINTS);
    let ev: Vec<(f64, f64, f64)> = rs.iter().map(|&r| p.eval_unchecked(r)).collect();

    let (v0, d0, _) = ev[0];
    let a_holds = v0.abs() <= tol && d0.abs() <= tol;

    let mut worst = f64::INFINITY;
    let mut worst_at = 0.0;
    let mut note = |margin: f64, r: f64| {
        let m = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if m < worst {
            worst = m;
            worst_at = r;
        }
        m
    };

    let mut b_holds = true;
    for i in 0..rs.len() - 1 {
        let dv1 = ev[i + 1].1 - ev[i].1;
        let dv2 = ev[i + 1].2 - ev[i].2;
        let m1 = note(dv1 + tol, rs[i]);
        let m2 = note(dv2 + tol * (1.0 + ev[i].2.abs().min(1e300)), rs[i]);
        if m1 < 0.0 || m2 < 0.0 {
            b_holds = false;
        }
    }

    let rv: Vec<f64> = rs.iter().zip(&ev).map(|(r, e)| r * e.0).collect();
    let mut rv_convex = true;
    for i in 1..rv.len() - 1 {
        let second = rv[i - 1] - 2.0 * rv[i] + rv[i + 1];
        if note(second + tol * (1.0 + rv[i].abs()), rs[i]) < 0.0 {
            rv_convex = false;
        }
    }

    Ok(ConditionReport {
        a_holds,
        b_holds,
        rv_convex,
        worst_violation: worst.min(0.0),
        worst_location: worst_at,
        tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub holds: bool,
    /// `min_r (high(r) − low(r))` over the probe grid.
    pub worst_margin: f64,
    pub worst_location: f64,
}

/// Whether `low(r) ≤ high(r) + tol` on `[0, r1]`.
pub fn dominates(
    low: &RadialPotential,
    high: &dyn RadialFunction,
    r1: f64,
    tol: f64,
) -> DominationReport {
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for r in linspace(0.0, r1, PROBE_POINTS) {
        let m = high.value_at(r) - low.value(r);
        if m < worst {
            worst = m;
            at = r;
        }
    }
    DominationReport {
        holds: worst >= -tol,
        worst_margin: worst,
        worst_location: at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_values() {
        let p = RadialPotential::power(1.0, 2.0).unwrap();
        assert_eq!(p.eval(2.0).unwrap(), (4.0, 4.0, 2.0));
        let p = RadialPotential::power(3.0, 3.0).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), (3.0, 9.0, 18.0));
        assert_eq!(RadialPotential::Zero.eval(0.7).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn polynomial_matches_power_sum() {
        let p = RadialPotential::parse("poly:c2=1,c4=0.5").unwrap();
        let (v, d1, d2) = p.eval(1.5).unwrap();
        assert!((v - (2.25 + 0.5 * 1.5f64.powi(4))).abs() < 1e-12);
        assert!((d1 - (3.0 + 2.0 * 1.5f64.powi(3))).abs() < 1e-12);
        assert!((d2 - (2.0 + 6.0 * 2.25)).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in [
            RadialPotential::power(1.0, 2.0).unwrap(),
            RadialPotential::power(2.5, 3.7).unwrap(),
            RadialPotential::power(0.3, 1.5).unwrap(),
            RadialPotential::parse("poly:c2=1,c6=2").unwrap(),
        ] {
            for r in [0.1, 1.0, 2.0] {
                let e = 1e-5 * r;
                let (_, d1, d2) = p.eval(r).unwrap();
                let fd1 = (p.value(r + e) - p.value(r - e)) / (2.0 * e);
                let fd2 = (p.eval(r + e).unwrap().1 - p.eval(r - e).unwrap().1) / (2.0 * e);
                assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1e-12), "{p} r={r}");
                assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1e-12), "{p} r={r}");
            }
        }
    }

    #[test]
    fn conditions_for_examples() {
        let r2 = RadialPotential::power(1.0, 2.0).unwrap();
        let rep = validate_conditions(&r2, 1.0, DEFAULT_TOL).unwrap();
        assert!(rep.a_holds && rep.b_holds && rep.rv_convex);

        let r15 = RadialPotential::power(1.0, 1.5).unwrap();
        let rep = validate_conditions(&r15, 1.0, DEFAULT_TOL).unwrap();
        assert!(!rep.b_holds);

        let rep = validate_conditions(&RadialPotential::Zero, 1.0, DEFAULT_TOL).unwrap();
        assert!(rep.a_holds && rep.b_holds && rep.rv_convex);

        let lin = RadialPotential::power(1.0, 1.0).unwrap();
        let rep = validate_conditions(&lin, 1.0, DEFAULT_TOL).unwrap();
        assert!(!rep.a_holds && !rep.b_holds && rep.rv_convex);
    }

    #[test]
    fn domination_examples() {
        let r2 = RadialPotential::power(1.0, 2.0).unwrap();
        let r4 = RadialPotential::power(1.0, 4.0).unwrap();
        let same = dominates(&r2, &r2, 1.0, 0.0);
        assert!(same.holds && same.worst_margin == 0.0);
        assert!(!dominates(&r2, &r4, 0.5, 1e-9).holds);
        assert!(dominates(&RadialPotential::Zero, &r4, 3.0, 0.0).holds);
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["zero", "power:k=1,alpha=2", "poly:c2=1,c4=0.25"] {
            let p = RadialPotential::parse(s).unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!(RadialPotential::parse("power:k=1").is_err());
        assert!(RadialPotential::parse("power:k=1,alpha=0.5").is_err());
        assert!(RadialPotential::parse("poly:c3=1").is_err());
        assert!(RadialPotential::parse("gauss:s=1").is_err());
    }

    #[test]
    fn table_file_and_range() {
        let dir = std::env::temp_dir().join(format!("ppw-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("v.txt");
        std::fs::write(&path, "# r value\n0 0\n0.5 0.25\n1.0 1.0 # end\n\n1.5 2.25\n").unwrap();
        let p = RadialPotential::parse(&format!("table:{}", path.display())).unwrap();
        assert_eq!(p.max_radius(), 1.5);
        assert!(p.eval(0.75).unwrap().0 > 0.25 && p.eval(0.75).unwrap().0 < 1.0);
        assert!(matches!(p.eval(2.0), Err(PpwError::Range(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(TablePotential::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(TablePotential::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(TablePotential::new(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn rescaling_matches_definition() {
        let beta = 1.7;
        for p in [
            RadialPotential::power(2.0, 3.0).unwrap(),
            RadialPotential::parse("poly:c2=1,c4=2").unwrap(),
        ] {
            let q = p.rescaled(beta);
            for r in [0.2, 0.9] {
                let want = beta * beta * p.value(beta * r);
                assert!((q.value(r) - want).abs() < 1e-12 * want.max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn power_b_condition_tracks_alpha(k in 0.01f64..10.0, alpha in 1.0f64..5.0, radius in 0.1f64..5.0) {
            let p = RadialPotential::power(k, alpha).unwrap();
            let rep = validate_conditions(&p, radius, DEFAULT_TOL).unwrap();
            prop_assert_eq!(rep.b_holds, alpha >= 2.0);
            if rep.a_holds && rep.b_holds {
                prop_assert!(rep.rv_convex);
            }
        }

        #[test]
        fn table_interpolation_stays_monotone(
            steps in proptest::collection::vec(0.0f64..2.0, 3..12),
            gaps in proptest::collection::vec(0.05f64..1.0, 12),
        ) {
            let mut radii = vec![0.0];
            let mut values = vec![0.0];
            for (i, s) in steps.iter().enumerate() {
                radii.push(radii[i] + gaps[i]);
                values.push(values[i] + s);
            }
            let t = RadialPotential::Table(TablePotential::new(radii.clone(), values).unwrap());
            let rs = linspace(0.0, *radii.last().unwrap(), 500);
            for w in rs.windows(2) {
                prop_assert!(t.value(w[1]) >= t.value(w[0]) - 1e-12);
            }
        }
    }
}
