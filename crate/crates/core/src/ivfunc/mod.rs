//! Interval-valued functions `F(x) = [F_lo(x), F_hi(x)]` on `R^n`.
//!
//! A function is either an [`IvExpr`] (interval coefficients times real
//! basis functions, folded with `⊕` and the Markov difference) or a pair
//! of user-supplied endpoint functions.

mod expr;
mod parse;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalBox, DEFAULT_TAU};

pub use expr::{Func, IvExpr, RealExpr, Term, TermOp};
pub use parse::{parse, parse_real};

/// Bundled two-variable quadratic with interval coefficients and a trailing
/// Markov difference. Default start point is `(1, 1)`.
pub const EXAMPLE_EXPR: &str = "[2,4]*x1^2 + [2,3]*x1*x2 + [1,2]*x2^2 + [1,2]*x1 -M [1,3]*x2";

type BoundFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Expr(IvExpr),
    Bounds { lo: BoundFn, hi: BoundFn },
}

/// An interval-valued function of `dim` real variables.
#[derive(Clone)]
pub struct IvFunction {
    dim: usize,
    source: Source,
}

impl fmt::Debug for IvFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Expr(e) => write!(f, "IvFunction(dim={}, {e})", self.dim),
            Source::Bounds { .. } => write!(f, "IvFunction(dim={}, <bounds>)", self.dim),
        }
    }
}

/// Which endpoint function to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// How partial derivatives are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central differences of both endpoint functions. `None` uses
    /// `h = max(1e-6, 1e-8 (1 + |x_i|))`.
    FiniteDiff { step: Option<f64> },
    /// Exact differentiation of the expression tree; fails at kinks.
    Analytic,
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::Analytic
    }
}

/// Default central-difference step for coordinate value `xi`.
pub fn default_fd_step(xi: f64) -> f64 {
    1e-6f64.max(1e-8 * (1.0 + xi.abs()))
}

impl IvFunction {
    pub fn from_expr(expr: IvExpr, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if expr.arity() > dim {
            return Err(Error::Invalid(format!(
                "expression uses x{} but dimension is {dim}",
                expr.arity()
            )));
        }
        Ok(IvFunction {
            dim,
            source: Source::Expr(expr),
        })
    }

    /// Parses `text` and wraps it as a function of `dim` variables.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        Self::from_expr(parse(text, dim)?, dim)
    }

    /// Wraps a pair of endpoint functions. Both must be pure, and
    /// `lo(x) <= hi(x)` must hold wherever the function is evaluated.
    pub fn from_bounds<L, H>(dim: usize, lo: L, hi: H) -> Result<Self>
    where
        L: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        Ok(IvFunction {
            dim,
            source: Source::Bounds {
                lo: Arc::new(lo),
                hi: Arc::new(hi),
            },
        })
    }

    /// Endpoint functions given as real expressions.
    pub fn from_real_bounds(dim: usize, lo: RealExpr, hi: RealExpr) -> Result<Self> {
        if lo.arity().max(hi.arity()) > dim {
            return Err(Error::Invalid(format!(
                "bound expressions exceed dimension {dim}"
            )));
        }
        Self::from_bounds(dim, move |x| lo.eval(x), move |x| hi.eval(x))
    }

    /// The bundled example function ([`EXAMPLE_EXPR`]).
    pub fn example() -> Self {
        Self::parse(EXAMPLE_EXPR, 2).expect("bundled example parses")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> Option<&IvExpr> {
        match &self.source {
            Source::Expr(e) => Some(e),
            Source::Bounds { .. } => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Interval> {
        self.check_dim(x)?;
        match &self.source {
            Source::Expr(e) => e.eval(x),
            Source::Bounds { lo, hi } => {
                let (l, h) = (lo(x), hi(x));
                if !l.is_finite() || !h.is_finite() {
                    return Err(Error::Range(format!("bounds [{l}, {h}] at {x:?}")));
                }
                if l > h + DEFAULT_TAU {
                    return Err(Error::BoundInversion { lo: l, hi: h });
                }
                Interval::new(l, h)
            }
        }
    }

    /// One endpoint function `x -> evaluate(x).lo` (or `.hi`).
    pub fn bound_fn(&self, side: Side) -> impl Fn(&[f64]) -> Result<f64> + '_ {
        move |x| {
            let v = self.evaluate(x)?;
            Ok(match side {
                Side::Lower => v.lo(),
                Side::Upper => v.hi(),
            })
        }
    }

    /// Partial derivative box along coordinate `i` (zero-based).
    pub fn partial(&self, i: usize, x: &[f64], method: GradientMethod) -> Result<Interval> {
        if i >= self.dim {
            return Err(Error::Invalid(format!(
                "coordinate {i} out of range for dim {}",
                self.dim
            )));
        }
        match method {
            GradientMethod::Analytic => Ok(self.gradient_box(x, method)?[i]),
            GradientMethod::FiniteDiff { step } => {
                self.check_dim(x)?;
                self.fd_partial(i, x, step)
            }
        }
    }

    fn fd_partial(&self, i: usize, x: &[f64], step: Option<f64>) -> Result<Interval> {
        let h = step.unwrap_or_else(|| default_fd_step(x[i]));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fp = self.evaluate(&xp)?;
        let fm = self.evaluate(&xm)?;
        let d_lo = (fp.lo() - fm.lo()) / (2.0 * h);
        let d_hi = (fp.hi() - fm.hi()) / (2.0 * h);
        Interval::new(d_lo, d_hi)
    }

    /// The gradient box `g(x)`, one interval per coordinate hulling the
    /// partial derivatives of both endpoint functions.
    pub fn gradient_box(&self, x: &[f64], method: GradientMethod) -> Result<IntervalBox> {
        self.check_dim(x)?;
        match method {
            GradientMethod::Analytic => {
                let expr = self.expr().ok_or(Error::NoAnalyticForm)?;
                let jet = expr.eval_jet(x)?;
                let comps = jet
                    .d_lo
                    .iter()
                    .zip(&jet.d_hi)
                    .map(|(a, b)| Interval::new(*a, *b))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IntervalBox::new(comps))
            }
            GradientMethod::FiniteDiff { step } => {
                let comps = (0..self.dim)
                    .map(|i| self.fd_partial(i, x, step))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IntervalBox::new(comps))
            }
        }
    }

    /// Analytic gradient box when available, otherwise central differences.
    pub fn gradient_box_or_fd(&self, x: &[f64], method: GradientMethod) -> Result<IntervalBox> {
        match self.gradient_box(x, method) {
            Err(Error::Kink { .. } | Error::NoAnalyticForm) => {
                self.gradient_box(x, GradientMethod::FiniteDiff { step: None })
            }
            other => other,
        }
    }

    /// Samples the mean-value inclusion `F(v) ⊖ F(u) ⊆ ∪_c Σ (v_i - u_i) g_i(c)`
    /// on `samples` equally spaced points `c` of the segment `[u, v]`.
    pub fn mean_value_check(
        &self,
        u: &[f64],
        v: &[f64],
        samples: usize,
        method: GradientMethod,
    ) -> Result<MeanValueReport> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        if u == v {
            return Err(Error::Invalid("mean-value check needs u != v".into()));
        }
        if samples < 2 {
            return Err(Error::Invalid(
                "mean-value check needs at least 2 samples".into(),
            ));
        }
        let lhs = self.evaluate(v)?.markov_sub(self.evaluate(u)?)?;
        let delta: Vec<f64> = u.iter().zip(v).map(|(a, b)| b - a).collect();
        let mut hull: Option<Interval> = None;
        let mut skipped = 0;
        for j in 0..samples {
            let s = j as f64 / (samples - 1) as f64;
            let c: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + s * d).collect();
            let g = match self.gradient_box(&c, method) {
                Ok(g) => g,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let mut term = Interval::ZERO;
            for (gi, di) in g.iter().zip(&delta) {
                term = term.add(gi.scale(*di)?)?;
            }
            hull = Some(hull.map_or(term, |h| h.hull(&term)));
        }
        if skipped * 10 > samples {
            return Err(Error::Inconclusive {
                skipped,
                total: samples,
            });
        }
        let rhs_hull = hull.ok_or(Error::Inconclusive {
            skipped,
            total: samples,
        })?;
        let eta = 1e-6 + 1e-3 * rhs_hull.width();
        Ok(MeanValueReport {
            lhs,
            rhs_hull,
            eta,
            skipped,
            contained: rhs_hull.inflate(eta).contains(&lhs),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueReport {
    pub lhs: Interval,
    pub rhs_hull: Interval,
    pub eta: f64,
    pub skipped: usize,
    pub contained: bool,
}
