//! Expression trees for interval-valued functions.
//!
//! An [`IvExpr`] is a chain of terms `coeff ⊙ basis(x)` folded left to right
//! with either `⊕` (`+`) or the binary Markov difference (`-M`). The basis of
//! each term is an ordinary real expression ([`RealExpr`]).

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
        }
    }

    fn derivative(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.cos(),
            Func::Cos => -v.sin(),
        }
    }
}

/// Real-valued expression over the variables `x1..xn` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub enum RealExpr {
    Const(f64),
    Var(usize),
    Neg(Box<RealExpr>),
    Add(Box<RealExpr>, Box<RealExpr>),
    Sub(Box<RealExpr>, Box<RealExpr>),
    Mul(Box<RealExpr>, Box<RealExpr>),
    Pow(Box<RealExpr>, i32),
    Call(Func, Box<RealExpr>),
}

impl RealExpr {
    pub fn var(i: usize) -> Self {
        RealExpr::Var(i)
    }

    pub fn mul(a: RealExpr, b: RealExpr) -> Self {
        RealExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn pow(a: RealExpr, n: i32) -> Self {
        RealExpr::Pow(Box::new(a), n)
    }

    /// Largest variable index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            RealExpr::Const(_) => 0,
            RealExpr::Var(i) => i + 1,
            RealExpr::Neg(a) | RealExpr::Pow(a, _) | RealExpr::Call(_, a) => a.arity(),
            RealExpr::Add(a, b) | RealExpr::Sub(a, b) | RealExpr::Mul(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RealExpr::Const(c) => *c,
            RealExpr::Var(i) => x[*i],
            RealExpr::Neg(a) => -a.eval(x),
            RealExpr::Add(a, b) => a.eval(x) + b.eval(x),
            RealExpr::Sub(a, b) => a.eval(x) - b.eval(x),
            RealExpr::Mul(a, b) => a.eval(x) * b.eval(x),
            RealExpr::Pow(a, n) => a.eval(x).powi(*n),
            RealExpr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Value and gradient with respect to `x`, by forward-mode differentiation.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        match self {
            RealExpr::Const(c) => (*c, vec![0.0; n]),
            RealExpr::Var(i) => {
                let mut g = vec![0.0; n];
                g[*i] = 1.0;
                (x[*i], g)
            }
            RealExpr::Neg(a) => {
                let (v, g) = a.eval_grad(x);
                (-v, g.into_iter().map(|d| -d).collect())
            }
            RealExpr::Add(a, b) | RealExpr::Sub(a, b) => {
                let (va, ga) = a.eval_grad(x);
                let (vb, gb) = b.eval_grad(x);
                let sign = if matches!(self, RealExpr::Add(..)) {
                    1.0
                } else {
                    -1.0
                };
                let g = ga.iter().zip(&gb).map(|(p, q)| p + sign * q).collect();
                (va + sign * vb, g)
            }
            RealExpr::Mul(a, b) => {
                let (va, ga) = a.eval_grad(x);
                let (vb, gb) = b.eval_grad(x);
                let g = ga.iter().zip(&gb).map(|(p, q)| p * vb + va * q).collect();
                (va * vb, g)
            }
            RealExpr::Pow(a, k) => {
                let (va, ga) = a.eval_grad(x);
                let outer = if *k == 0 {
                    0.0
                } else {
                    f64::from(*k) * va.powi(*k - 1)
                };
                (va.powi(*k), ga.into_iter().map(|d| outer * d).collect())
            }
            RealExpr::Call(f, a) => {
                let (va, ga) = a.eval_grad(x);
                let outer = f.derivative(va);
                (f.apply(va), ga.into_iter().map(|d| outer * d).collect())
            }
        }
    }

    // Precedence levels: 1 sum, 2 product, 3 unary minus, 4 power, 5 atom.
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>,
                    own: u8,
                    body: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
            if ctx > own {
                write!(f, "(")?;
                body(f)?;
                write!(f, ")")
            } else {
                body(f)
            }
        };
        match self {
            RealExpr::Const(c) if *c < 0.0 => wrap(f, 3, &|f| write!(f, "-{}", -c)),
            RealExpr::Const(c) => write!(f, "{c}"),
            RealExpr::Var(i) => write!(f, "x{}", i + 1),
            RealExpr::Neg(a) => wrap(f, 3, &|f| {
                write!(f, "-")?;
                a.write_prec(f, 3)
            }),
            RealExpr::Add(a, b) => wrap(f, 1, &|f| {
                a.write_prec(f, 1)?;
                write!(f, " + ")?;
                b.write_prec(f, 2)
            }),
            RealExpr::Sub(a, b) => wrap(f, 1, &|f| {
                a.write_prec(f, 1)?;
                write!(f, " - ")?;
                b.write_prec(f, 2)
            }),
            RealExpr::Mul(a, b) => wrap(f, 2, &|f| {
                a.write_prec(f, 2)?;
                write!(f, "*")?;
                b.write_prec(f, 3)
            }),
            RealExpr::Pow(a, k) => wrap(f, 4, &|f| {
                a.write_prec(f, 5)?;
                write!(f, "^{k}")
            }),
            RealExpr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// How a term is combined with the accumulated value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermOp {
    /// `⊕`, written `+`.
    Plus,
    /// Binary Markov difference, written `-M`.
    MarkovMinus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub op: TermOp,
    pub coeff: Interval,
    pub basis: RealExpr,
}

/// Interval-valued expression: `t1 op2 t2 op3 t3 ...`, folded left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct IvExpr {
    terms: Vec<Term>,
}

/// Value of an interval-valued expression together with the gradients of
/// its lower and upper endpoints.
#[derive(Debug, Clone)]
pub(crate) struct IntervalJet {
    pub value: Interval,
    pub d_lo: Vec<f64>,
    pub d_hi: Vec<f64>,
}

const KINK_TOL: f64 = 1e-9;

impl IvExpr {
    /// Builds an expression; the first term's operator is forced to `Plus`.
    pub fn new(mut terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid(
                "an expression needs at least one term".into(),
            ));
        }
        terms[0].op = TermOp::Plus;
        Ok(IvExpr { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.basis.arity())
            .max()
            .unwrap_or(0)
    }

    pub fn has_degenerate_coefficients(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_degenerate())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Interval> {
        let mut acc = Interval::ZERO;
        for term in &self.terms {
            let b = term.basis.eval(x);
            if !b.is_finite() {
                return Err(Error::Range(format!(
                    "basis {} evaluated to {b}",
                    term.basis
                )));
            }
            let v = term.coeff.scale(b)?;
            acc = match term.op {
                TermOp::Plus => acc.add(v)?,
                TermOp::MarkovMinus => acc.markov_sub(v)?,
            };
        }
        Ok(acc)
    }

    /// Forward-mode evaluation of both endpoint gradients.
    ///
    /// Fails with [`Error::Kink`] when an endpoint function is not
    /// differentiable at `x`: a basis with non-degenerate coefficient
    /// vanishes, or an intermediate Markov difference has tied candidates
    /// with different slopes.
    pub(crate) fn eval_jet(&self, x: &[f64]) -> Result<IntervalJet> {
        let n = x.len();
        let mut acc = IntervalJet {
            value: Interval::ZERO,
            d_lo: vec![0.0; n],
            d_hi: vec![0.0; n],
        };
        let last = self.terms.len() - 1;
        for (k, term) in self.terms.iter().enumerate() {
            let (b, gb) = term.basis.eval_grad(x);
            if !b.is_finite() || gb.iter().any(|d| !d.is_finite()) {
                return Err(Error::Range(format!(
                    "basis {} is not finite at {x:?}",
                    term.basis
                )));
            }
            if b.abs() <= KINK_TOL && !term.coeff.is_degenerate() {
                return Err(Error::Kink { index: k });
            }
            // endpoint of the coefficient that is active for lo / hi
            let (c_lo, c_hi) = if b >= 0.0 {
                (term.coeff.lo(), term.coeff.hi())
            } else {
                (term.coeff.hi(), term.coeff.lo())
            };
            let t_lo = b * c_lo;
            let t_hi = b * c_hi;
            let dt_lo: Vec<f64> = gb.iter().map(|d| c_lo * d).collect();
            let dt_hi: Vec<f64> = gb.iter().map(|d| c_hi * d).collect();

            acc = match term.op {
                TermOp::Plus => IntervalJet {
                    value: acc.value.add(Interval::new(t_lo, t_hi)?)?,
                    d_lo: acc.d_lo.iter().zip(&dt_lo).map(|(a, b)| a + b).collect(),
                    d_hi: acc.d_hi.iter().zip(&dt_hi).map(|(a, b)| a + b).collect(),
                },
                TermOp::MarkovMinus => {
                    let p = acc.value.lo() - t_lo;
                    let q = acc.value.hi() - t_hi;
                    let dp: Vec<f64> = acc.d_lo.iter().zip(&dt_lo).map(|(a, b)| a - b).collect();
                    let dq: Vec<f64> = acc.d_hi.iter().zip(&dt_hi).map(|(a, b)| a - b).collect();
                    let tie = (p - q).abs() <= KINK_TOL * (1.0 + p.abs().max(q.abs()));
                    // A tie in the last step is harmless: the gradient box is
                    // the hull of both slopes whichever side is called "lower".
                    if tie && k != last && dp != dq {
                        return Err(Error::Kink { index: k });
                    }
                    let value = acc.value.markov_sub(Interval::new(t_lo, t_hi)?)?;
                    if p <= q {
                        IntervalJet {
                            value,
                            d_lo: dp,
                            d_hi: dq,
                        }
                    } else {
                        IntervalJet {
                            value,
                            d_lo: dq,
                            d_hi: dp,
                        }
                    }
                }
            };
        }
        Ok(acc)
    }
}

impl fmt::Display for IvExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                match t.op {
                    TermOp::Plus => write!(f, " + ")?,
                    TermOp::MarkovMinus => write!(f, " -M ")?,
                }
            }
            write!(f, "[{},{}]*{}", t.coeff.lo(), t.coeff.hi(), t.basis)?;
        }
        Ok(())
    }
}
