use serde_json::{json, Value};

use ppw_core::domain::{solve_domain, solve_extrapolated, DomainGrid, DomainPotential, Shape};
use ppw_core::gaussian::{ratio_limits, solve_gaussian, verify_gaussian_bound};
use ppw_core::potentials::{validate_conditions, RadialPotential};
use ppw_core::radial::{solve_sector, solve_sector_with, BallProblem, SolveOptions, WeightSign};
use ppw_core::rearrange::{chiti_crossings, rearrange, Direction};
use ppw_core::riccati::{diagnostics, q_second_derivative_check, ratio_shift_sweep, t_and_z};
use ppw_core::special::ppw_constant;
use ppw_core::verify::{
    comparison_ball, first_ratio_increase, scan_ratio, sharpness_scan, verify_second_eigenvalue_bound,
    MATCH_TOL, SCAN_SLACK,
};
use ppw_core::{PpwError, Result};

use crate::output::{Cell, Check, Table};
use crate::{Command, DomainArgs, What};

/// Bounds used by `diagnostics` for its asserted checks.
const RESIDUAL_TOL: f64 = 1e-4;
const ENDPOINT_TOL: f64 = 1e-3;
const ZERO_GAP_TOL: f64 = 1e-3;

pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
    pub slack: Option<f64>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome { result, table: None, checks: Vec::new(), slack: None }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

impl DomainArgs {
    fn grid(&self) -> Result<Option<DomainGrid>> {
        match (&self.mask, &self.shape) {
            (Some(p), _) => DomainGrid::read_mask(p).map(Some),
            (None, Some(s)) => DomainGrid::from_shape(s.parse::<Shape>()?, self.h).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn require_grid(&self) -> Result<DomainGrid> {
        self.grid()?.ok_or_else(|| PpwError::Contract("a domain is required: pass --mask or --shape".into()))
    }
}

pub fn dispatch(cmd: &Command, tol: f64, seed: u64) -> Result<Outcome> {
    match cmd {
        Command::Constant { dim } => constant(*dim),
        Command::SolveBall { dim, radius, potential, sector, k, weight } => {
            solve_ball(*dim, *radius, potential, *sector, *k, weight, tol)
        }
        Command::SolveDomain { domain, potential, k, extrapolate } => {
            solve_dom(domain, potential, *k, *extrapolate, tol)
        }
        Command::Rearrange { domain, potential, what, comparison } => {
            rearrange_cmd(domain, potential, *what, comparison.as_deref(), tol)
        }
        Command::Diagnostics { dim, radius, potential, y } => diagnostics_cmd(*dim, *radius, potential, y, tol),
        Command::Verify { domain, potential, comparison } => verify_cmd(domain, potential, comparison, tol),
        Command::Scan { dim, potential, rmin, rmax, steps } => scan_cmd(*dim, potential, *rmin, *rmax, *steps, tol),
        Command::Sharpness { dim, eps, rmin, rmax, steps } => sharpness_cmd(*dim, eps, *rmin, *rmax, *steps, tol),
        Command::Gaussian { sign, dim, radius, radii, domain } => gaussian_cmd(sign, *dim, *radius, radii, domain, tol),
        Command::Sweep { samples } => sweep_cmd(*samples, seed),
    }
}

fn constant(dim: usize) -> Result<Outcome> {
    let c = ppw_constant(dim)?;
    let mut out = Outcome::new(json!({ "dim": dim, "constant": c }));
    out.table = Some(Table { header: vec!["dim", "constant"], rows: vec![vec![dim.into(), c.into()]] });
    Ok(out)
}

fn solve_ball(
    dim: usize,
    radius: f64,
    potential: &str,
    sector: usize,
    k: usize,
    weight: &str,
    tol: f64,
) -> Result<Outcome> {
    let v: RadialPotential = potential.parse()?;
    let weight: WeightSign = weight.parse()?;
    let prob = BallProblem::new(dim, radius, sector, v)?.with_weight(weight);
    let pair = solve_sector_with(&prob, k, &SolveOptions { tol, ..SolveOptions::default() })?;
    let samples: Vec<[f64; 2]> = pair.samples().map(|(r, z)| [r, z]).collect();
    let mut out = Outcome::new(json!({
        "dim": dim,
        "R": radius,
        "sector": sector,
        "k": k,
        "weight": weight,
        "lambda": pair.lambda,
        "node_count": pair.node_count,
        "residual": pair.residual,
        "boundary_defect": pair.boundary_defect,
        "samples": samples,
    }));
    out.table = Some(Table {
        header: vec!["r", "z", "dz"],
        rows: (0..pair.r.len()).map(|i| vec![pair.r[i].into(), pair.z[i].into(), pair.dz[i].into()]).collect(),
    });
    out.checks.push(Check::new("node_count", pair.node_count == k - 1).value(pair.node_count as f64));
    Ok(out)
}

fn solve_dom(domain: &DomainArgs, potential: &str, k: usize, extrapolate: bool, tol: f64) -> Result<Outcome> {
    let grid = domain.require_grid()?;
    let v = DomainPotential::Radial(potential.parse()?);
    let (spec, ex) = if extrapolate {
        let (_, fine, ex) = solve_extrapolated(&grid, &v, k, tol)?;
        (fine, Some(ex))
    } else {
        (solve_domain(&grid, &v, k, tol)?, None)
    };
    let mut out = Outcome::new(json!({
        "nx": grid.nx,
        "ny": grid.ny,
        "h": grid.h,
        "cells": grid.interior_count(),
        "lambdas": spec.lambdas,
        "residuals": spec.residuals,
        "disconnected": spec.disconnected,
        "near_double": spec.near_double,
        "extrapolation": ex,
    }));
    let mut table = Table { header: vec!["index", "lambda", "residual", "extrapolated", "error"], rows: Vec::new() };
    for i in 0..spec.lambdas.len() {
        let (e, err) = match &ex {
            Some(x) if i < x.lambdas.len() => (Some(x.lambdas[i]), Some(x.errors[i])),
            _ => (None, None),
        };
        table.rows.push(vec![(i + 1).into(), spec.lambdas[i].into(), spec.residuals[i].into(), e.into(), err.into()]);
    }
    out.table = Some(table);
    out.checks.push(Check::info("connected", !spec.disconnected));
    Ok(out)
}

fn rearrange_cmd(
    domain: &DomainArgs,
    potential: &str,
    what: What,
    comparison: Option<&str>,
    tol: f64,
) -> Result<Outcome> {
    let grid = domain.require_grid()?;
    let v: RadialPotential = potential.parse()?;
    let dv = DomainPotential::Radial(v);
    let cells = grid.interior_indices();
    let cm = grid.h * grid.h;
    let mut checks = Vec::new();
    let mut extra = Value::Null;
    let profile = match what {
        What::Potential => {
            let vals = dv.sample(&grid)?;
            let vals: Vec<f64> = cells.iter().map(|&c| vals[c]).collect();
            rearrange(&vals, cm, 2, Direction::Increasing)?
        }
        What::Eigenfunction => {
            let spec = solve_domain(&grid, &dv, 1, tol)?;
            let u: Vec<f64> = cells.iter().map(|&c| spec.u1()[c]).collect();
            let p = rearrange(&u, cm, 2, Direction::Decreasing)?;
            if let Some(cmp) = comparison {
                let vt: RadialPotential = cmp.parse()?;
                let r1 = comparison_ball(2, spec.lambda1(), &vt, MATCH_TOL)?;
                let z = solve_sector(&BallProblem::new(2, r1, 0, vt)?, 1, tol)?;
                let rep = chiti_crossings(&p, &z, None, None);
                checks.push(Check::new("single_crossing", rep.count == 1).value(rep.count as f64));
                extra = json!({ "lambda1": spec.lambda1(), "R1": r1, "crossings": rep });
            }
            p
        }
    };
    let mut out = Outcome::new(json!({
        "what": what,
        "r": profile.radii,
        "value": profile.values,
        "comparison": extra,
    }));
    out.table = Some(Table {
        header: vec!["r", "value"],
        rows: profile.radii.iter().zip(&profile.values).map(|(&r, &v)| vec![r.into(), v.into()]).collect(),
    });
    out.checks = checks;
    Ok(out)
}

fn diagnostics_cmd(dim: usize, radius: f64, potential: &str, ys: &[f64], tol: f64) -> Result<Outcome> {
    let v: RadialPotential = potential.parse()?;
    let cond = validate_conditions(&v, radius, v.default_tolerance())?;
    let applies = cond.a_holds && cond.b_holds;
    let prob = BallProblem::new(dim, radius, 0, v)?;
    let z1 = solve_sector(&prob, 1, tol)?;
    let z2 = solve_sector(&prob.with_sector(1), 1, tol)?;
    let d = diagnostics(&prob, &z1, &z2)?;
    let q2 = q_second_derivative_check(&d)?;
    let t_of_q = d.t_of_q_defect();
    let tz = ys.iter().map(|&y| t_and_z(&prob, &z1, &d, y)).collect::<Result<Vec<_>>>()?;

    let check = |name: &str, ok: bool| if applies { Check::new(name, ok) } else { Check::info(name, ok) };
    let mut checks = vec![
        check("q_in_01", d.facts.q_in_01),
        check("q_decreasing", d.facts.q_decreasing),
        check("B_decreasing", d.facts.b_decreasing),
        check("g_increasing", d.facts.g_increasing),
        Check::new("q_origin", (d.q_origin - 1.0).abs() <= ENDPOINT_TOL).value(d.q_origin),
        Check::new("q_boundary", d.q_boundary.abs() <= ENDPOINT_TOL).value(d.q_boundary),
        Check::new("q_second_derivative", q2.agree).value(q2.numeric),
        Check::new("residual_ric_q", d.residual_ric_q <= RESIDUAL_TOL).value(d.residual_ric_q),
        Check::new("residual_ric_p", d.residual_ric_p <= RESIDUAL_TOL).value(d.residual_ric_p),
        Check::new("t_of_q", t_of_q <= RESIDUAL_TOL).value(t_of_q),
    ];
    for t in &tz {
        checks.push(Check::new(&format!("t_zeros_y={}", t.y), t.worst_zero_gap <= ZERO_GAP_TOL).value(t.worst_zero_gap));
    }
    let mut out = Outcome::new(json!({
        "dim": dim,
        "R": radius,
        "lambda1": d.lambda1,
        "lambda2": d.lambda2,
        "conditions": cond,
        "r": d.r,
        "q": d.q,
        "q_prime": d.q_prime,
        "B": d.b,
        "g": d.g,
        "g_prime": d.g_prime,
        "p": d.p,
        "q_origin": d.q_origin,
        "q_boundary": d.q_boundary,
        "g_boundary": d.g_boundary,
        "residuals": { "ric_q": d.residual_ric_q, "ric_p": d.residual_ric_p, "t_of_q": t_of_q },
        "facts": d.facts,
        "q_second_derivative": q2,
        "t": tz,
    }));
    out.table = Some(Table {
        header: vec!["r", "q", "q_prime", "g", "g_prime", "B", "p"],
        rows: (0..d.r.len())
            .map(|i| {
                vec![d.r[i].into(), d.q[i].into(), d.q_prime[i].into(), d.g[i].into(), d.g_prime[i].into(), d.b[i].into(), d.p[i].into()]
            })
            .collect(),
    });
    out.checks = checks;
    Ok(out)
}

fn verify_cmd(domain: &DomainArgs, potential: &str, comparison: &str, tol: f64) -> Result<Outcome> {
    let grid = domain.require_grid()?;
    let v = DomainPotential::Radial(potential.parse()?);
    let vt: RadialPotential = comparison.parse()?;
    let rep = verify_second_eigenvalue_bound(&grid, &v, &vt, tol)?;
    let mut out = Outcome::new(to_value(&rep));
    out.slack = Some(rep.slack);
    out.checks.push(Check::new("second_eigenvalue_bound", rep.passed).value(rep.margin));
    if let Some(rhs) = rep.gap_bound_rhs {
        let gap = rep.lambda2_omega - rep.lambda1_omega;
        out.checks.push(Check::info("gap_bound", rhs >= gap - rep.slack).value(rhs - gap));
    }
    if let Some(ch) = rep.chains {
        out.checks.push(Check::info("rearrangement_chains", ch.worst_violation() <= rep.slack).value(ch.worst_violation()));
    }
    Ok(out)
}

fn scan_cmd(dim: usize, potential: &str, rmin: f64, rmax: f64, steps: usize, tol: f64) -> Result<Outcome> {
    let v: RadialPotential = potential.parse()?;
    let cond = validate_conditions(&v, rmax, v.default_tolerance())?;
    let applies = cond.a_holds && cond.b_holds;
    let rows = scan_ratio(dim, &v, rmin, rmax, steps, tol)?;
    let increase = first_ratio_increase(&rows, SCAN_SLACK);
    let worst = rows.iter().map(|r| r.gap_ratio_margin).fold(f64::INFINITY, f64::min);
    let check = |name: &str, ok: bool| if applies { Check::new(name, ok) } else { Check::info(name, ok) };
    let mut out = Outcome::new(json!({ "dim": dim, "potential": v.to_string(), "conditions": cond, "rows": rows }));
    out.slack = Some(SCAN_SLACK);
    let mut mono = check("ratio_nonincreasing", increase.is_none());
    if let Some(i) = increase {
        mono = mono.detail(format!("ratio increases at R = {}", rows[i].r));
    }
    out.checks.push(mono);
    out.checks.push(check("gap_ratio_margin", worst >= -SCAN_SLACK).value(worst));
    out.table = Some(Table {
        header: vec!["R", "lambda1", "lambda2", "ratio", "gap_ratio_margin"],
        rows: rows
            .iter()
            .map(|r| vec![r.r.into(), r.lambda1.into(), r.lambda2.into(), r.ratio.into(), r.gap_ratio_margin.into()])
            .collect(),
    });
    Ok(out)
}

fn sharpness_cmd(dim: usize, eps: &[f64], rmin: f64, rmax: f64, steps: usize, tol: f64) -> Result<Outcome> {
    let rep = sharpness_scan(dim, eps, rmin, rmax, steps, tol)?;
    let mut out = Outcome::new(to_value(&rep));
    out.slack = Some(SCAN_SLACK);
    // Only ε = 0 is expected to be violation-free; positive ε probes sharpness.
    for &(e, m) in &rep.min_margin {
        let ok = m >= -SCAN_SLACK;
        let name = format!("eps={e}");
        out.checks.push(if e == 0.0 { Check::new(&name, ok) } else { Check::info(&name, ok) }.value(m));
    }
    out.table = Some(Table {
        header: vec!["eps", "R", "lambda1", "lambda2", "gap_ratio_margin", "violation"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![r.eps.into(), r.r.into(), r.lambda1.into(), r.lambda2.into(), r.gap_ratio_margin.into(), r.violation.into()]
            })
            .collect(),
    });
    Ok(out)
}

fn gaussian_cmd(
    sign: &str,
    dim: usize,
    radius: Option<f64>,
    radii: &[f64],
    domain: &DomainArgs,
    tol: f64,
) -> Result<Outcome> {
    let sign: WeightSign = sign.parse()?;
    if let Some(grid) = domain.grid()? {
        if dim != 2 {
            return Err(PpwError::Contract("domains are planar; use --dim 2".into()));
        }
        let rep = verify_gaussian_bound(&grid, sign, tol)?;
        let mut out = Outcome::new(to_value(&rep));
        out.slack = Some(rep.slack);
        out.checks.push(Check::new("second_eigenvalue_bound", rep.passed).value(rep.margin));
        return Ok(out);
    }
    if !radii.is_empty() {
        let rows = ratio_limits(sign, dim, radii, tol)?;
        let mut out = Outcome::new(json!({ "sign": sign, "dim": dim, "rows": rows }));
        if sign == WeightSign::Plus {
            let dec = rows.windows(2).all(|w| match (w[0].ratio, w[1].ratio) {
                (Some(a), Some(b)) => b < a - 1e-10,
                _ => false,
            });
            out.checks.push(Check::new("ratio_strictly_decreasing", dec));
        }
        out.table = Some(Table {
            header: vec!["R", "lambda1", "lambda2", "ratio", "divergent"],
            rows: rows
                .iter()
                .map(|r| vec![r.r.into(), r.lambda1.into(), r.lambda2.into(), r.ratio.into(), r.divergent.into()])
                .collect(),
        });
        return Ok(out);
    }
    let radius = radius.ok_or_else(|| PpwError::Contract("pass --radius, --radii, --mask or --shape".into()))?;
    let s = solve_gaussian(sign, dim, radius, tol)?;
    let mut out = Outcome::new(to_value(&s));
    out.checks.push(
        Check::new("shifted_oscillator", s.relation_holds)
            .value(s.crosscheck.iter().map(|c| c.deviation).fold(0.0, f64::max)),
    );
    out.table = Some(Table {
        header: vec!["i", "lambda", "oscillator", "deviation"],
        rows: [s.lambda1, s.lambda2]
            .iter()
            .zip(&s.crosscheck)
            .enumerate()
            .map(|(i, (&l, c))| vec![Cell::from(i + 1), l.into(), c.oscillator.into(), c.deviation.into()])
            .collect(),
    });
    Ok(out)
}

fn sweep_cmd(samples: usize, seed: u64) -> Result<Outcome> {
    let rep = ratio_shift_sweep(samples, seed)?;
    let mut out = Outcome::new(to_value(&rep));
    out.checks.push(Check::new("no_failures", rep.failures == 0).value(rep.failures as f64));
    out.checks.push(Check::new("x0_negative", rep.x0_nonnegative == 0).value(rep.x0_nonnegative as f64));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_outcome_has_csv_row() {
        let out = constant(2).unwrap();
        let c = out.result["constant"].as_f64().unwrap();
        assert!((c - 2.5387).abs() < 1e-3);
        assert_eq!(out.table.unwrap().rows.len(), 1);
    }

    #[test]
    fn missing_domain_is_a_contract_error() {
        let d = DomainArgs { mask: None, shape: None, h: 0.1 };
        assert!(matches!(d.require_grid(), Err(PpwError::Contract(_))));
    }
}
