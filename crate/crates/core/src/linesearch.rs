//! Exact line search along a descent direction.
//!
//! Each endpoint function is minimized along the ray `x + α d` and the
//! smaller of the two minimizers is taken as the step, so both endpoints
//! still decrease at the chosen point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivfunc::{default_fd_step, IvFunction, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Largest step considered before a ray is declared unbounded.
    pub alpha_max: f64,
    /// Final bracket width of the 1-D minimizer.
    pub tol: f64,
    pub max_bracket_doublings: u32,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams {
            alpha_max: 1e6,
            tol: 1e-8,
            max_bracket_doublings: 60,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.alpha_max >= self.tol) {
            return Err(Error::Invalid(format!(
                "line search needs tol > 0 and alpha_max >= tol (tol = {}, alpha_max = {})",
                self.tol, self.alpha_max
            )));
        }
        Ok(())
    }
}

const BACKTRACK_LIMIT: usize = 30;

fn checked(v: f64, alpha: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!("objective is {v} at alpha = {alpha}")))
    }
}

/// Changes of `phi` within this many ulps of `1 + |phi(0)|` count as flat.
const NOISE_ULPS: f64 = 16.0;

/// First local minimizer of `phi` on `(0, alpha_max]`.
///
/// Samples `0, tol, 2 tol, 4 tol, ...` until `phi` rises clearly above the
/// best sample so far, then runs a golden-section search between the
/// samples on either side of the best one. Rounding-level changes are
/// ignored while bracketing. A ray that stays flat up to `alpha_max` is
/// treated as minimized at the first step.
pub fn minimize_1d<F>(phi: F, params: &LineSearchParams) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    params.validate()?;
    let eval = |a: f64| phi(a).and_then(|v| checked(v, a));

    let f0 = eval(0.0)?;
    let noise = NOISE_ULPS * f64::EPSILON * (1.0 + f0.abs());
    // (alpha, value) of the best sample and of the sample before it
    let mut before_best = 0.0;
    let mut best = (0.0, f0);
    let mut last = 0.0;
    let mut next = params.tol;
    let mut doublings = 0;
    loop {
        let f_next = eval(next)?;
        if f_next > best.1 + noise {
            return golden_section(&eval, before_best, next, params.tol);
        }
        if f_next < best.1 {
            before_best = last;
            best = (next, f_next);
        }
        if next >= params.alpha_max || doublings >= params.max_bracket_doublings {
            if best.1 >= f0 - noise {
                return golden_section(&eval, 0.0, params.tol, params.tol);
            }
            return Err(Error::Unbounded {
                alpha_max: params.alpha_max,
            });
        }
        last = next;
        next = (2.0 * next).min(params.alpha_max);
        doublings += 1;
    }
}

fn golden_section<F>(eval: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLength {
    pub alpha: f64,
    /// Minimizers along the ray; `+inf` for an endpoint unbounded below.
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    /// Number of halvings applied after the 1-D searches.
    pub backtracks: usize,
}

fn along(x: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

/// Step `min(argmin F_lo, argmin F_hi)` along `d`, halved if needed until
/// `F(x + α d)` is strictly below `F(x)` in both endpoints.
///
/// An endpoint that decreases without bound along the ray has minimizer
/// `+inf` and leaves the step to the other one; the ray is unbounded only
/// when both are.
pub fn step_length(
    f: &IvFunction,
    x: &[f64],
    d: &[f64],
    params: &LineSearchParams,
) -> Result<StepLength> {
    let ray = |side: Side| {
        let endpoint = f.bound_fn(side);
        move |a: f64| endpoint(&along(x, d, a))
    };
    let alpha_lower = unbounded_as_infinite(minimize_1d(ray(Side::Lower), params))?;
    let alpha_upper = unbounded_as_infinite(minimize_1d(ray(Side::Upper), params))?;
    let mut alpha = alpha_lower.min(alpha_upper);
    if alpha.is_infinite() {
        return Err(Error::Unbounded {
            alpha_max: params.alpha_max,
        });
    }
    let f0 = f.evaluate(x)?;
    for backtracks in 0..=BACKTRACK_LIMIT {
        if f.evaluate(&along(x, d, alpha))?.strictly_precedes(&f0) {
            return Ok(StepLength {
                alpha,
                alpha_lower,
                alpha_upper,
                backtracks,
            });
        }
        alpha *= 0.5;
    }
    Err(Error::LineSearch(format!(
        "no strict decrease of {f0} along {d:?} after {BACKTRACK_LIMIT} halvings"
    )))
}

fn unbounded_as_infinite(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::Unbounded { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Step from the first positive roots of the directional derivatives of
/// both endpoint functions. Only meaningful when both restrictions to the
/// ray are convex.
pub fn convex_step_by_derivative_root(
    f: &IvFunction,
    x: &[f64],
    d: &[f64],
    params: &LineSearchParams,
) -> Result<f64> {
    params.validate()?;
    let root = |side: Side| -> Result<f64> {
        let endpoint = f.bound_fn(side);
        let slope = |a: f64| -> Result<f64> {
            let h = default_fd_step(a);
            let up = endpoint(&along(x, d, a + h))?;
            let down = endpoint(&along(x, d, a - h))?;
            checked((up - down) / (2.0 * h), a)
        };
        let mut lo = 0.0;
        let mut hi = params.tol;
        let mut doublings = 0;
        while slope(hi)? < 0.0 {
            if hi >= params.alpha_max || doublings >= params.max_bracket_doublings {
                return Ok(f64::INFINITY);
            }
            lo = hi;
            hi = (2.0 * hi).min(params.alpha_max);
            doublings += 1;
        }
        while hi - lo > params.tol {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let alpha = root(Side::Lower)?.min(root(Side::Upper)?);
    if alpha.is_infinite() {
        return Err(Error::Unbounded {
            alpha_max: params.alpha_max,
        });
    }
    Ok(alpha)
}
