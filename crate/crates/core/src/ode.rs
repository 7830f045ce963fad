//! Dormand–Prince 5(4) stepping for two-component linear systems.
//!
//! The radial eigenproblems reduce to `y'' = F(r, y, y')`; the integrator
//! advances `(y, y')` across one segment with adaptive steps and counts the
//! sign changes of `y` at accepted steps.

use crate::error::{PpwError, Result};

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    /// Smallest step accepted before declaring failure.
    pub h_min: f64,
}

/// Running integration state carried between segments.
#[derive(Debug, Clone, Copy)]
pub struct Cursor {
    pub r: f64,
    pub y: State,
    /// Step size suggestion for the next segment.
    pub h: f64,
    /// Largest component magnitudes seen so far; sets the absolute error floor.
    pub peak: State,
}

impl Cursor {
    pub fn new(r: f64, y: State, h: f64) -> Self {
        Cursor {
            r,
            y,
            h,
            peak: [y[0].abs().max(1e-300), y[1].abs().max(1e-300)],
        }
    }

    /// Divides the state by `s`; the problem is linear so this only changes
    /// the normalization.
    pub fn rescale(&mut self, s: f64) {
        self.y[0] /= s;
        self.y[1] /= s;
        self.peak[0] /= s;
        self.peak[1] /= s;
    }
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Advances `cur` to `r_end`, returning the number of sign changes of `y[0]`
/// observed at accepted steps.
pub fn advance<F>(f: &F, cur: &mut Cursor, r_end: f64, tol: Tolerance) -> Result<usize>
where
    F: Fn(f64, &State) -> State,
{
    let mut sign_changes = 0usize;
    let mut h = cur.h.min(r_end - cur.r);
    let mut k1 = f(cur.r, &cur.y);
    let mut rejected_last = false;
    while cur.r < r_end {
        let last = cur.r + h >= r_end * (1.0 - 4.0 * f64::EPSILON);
        if last {
            h = r_end - cur.r;
        }
        let r = cur.r;
        let y = &cur.y;
        let k2 = f(r + C2 * h, &axpy(y, h, &[(A21, &k1)]));
        let k3 = f(r + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(r + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            r + C5 * h,
            &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            r + h,
            &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(r + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.rtol * (y[i].abs().max(y_new[i].abs()) + 1e-3 * cur.peak[i]);
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }

        if err <= 1.0 {
            if y_new[0] != 0.0 && cur.y[0] != 0.0 && y_new[0].signum() != cur.y[0].signum() {
                sign_changes += 1;
            }
            cur.r = if last { r_end } else { r + h };
            cur.y = y_new;
            cur.peak[0] = cur.peak[0].max(y_new[0].abs());
            cur.peak[1] = cur.peak[1].max(y_new[1].abs());
            k1 = k7;
            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            rejected_last = false;
            if !last {
                cur.h = h * fac;
            }
            h *= fac;
        } else {
            rejected_last = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < tol.h_min {
                return Err(PpwError::Numeric(format!(
                    "step size underflow at r = {r:e} (h = {h:e})"
                )));
            }
        }
    }
    Ok(sign_changes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_motion_is_accurate() {
        let f = |_r: f64, y: &State| [y[1], -4.0 * y[0]];
        let mut cur = Cursor::new(0.0, [0.0, 2.0], 1e-3);
        let tol = Tolerance { rtol: 1e-12, h_min: 1e-14 };
        let changes = advance(&f, &mut cur, 10.0, tol).unwrap();
        assert!((cur.y[0] - (20.0f64).sin()).abs() < 1e-9);
        assert!((cur.y[1] - 2.0 * (20.0f64).cos()).abs() < 1e-9);
        // sin(2r) changes sign at r = kπ/2, k = 1..6 inside (0, 10)
        assert_eq!(changes, 6);
    }

    #[test]
    fn segments_compose() {
        let f = |_r: f64, y: &State| [y[1], y[0]];
        let tol = Tolerance { rtol: 1e-12, h_min: 1e-14 };
        let mut cur = Cursor::new(0.0, [1.0, 1.0], 1e-2);
        for k in 1..=10 {
            advance(&f, &mut cur, 0.3 * k as f64, tol).unwrap();
        }
        assert!((cur.y[0] - 3.0f64.exp()).abs() < 1e-9 * 3.0f64.exp());
    }
}
