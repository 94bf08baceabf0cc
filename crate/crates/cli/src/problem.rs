use ivdescent::ivfunc::{self, EXAMPLE_EXPR};
use ivdescent::IvFunction;
use serde::Serialize;

use crate::CliError;

/// Where a problem's function comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Expr(String),
    Bounds { lower: String, upper: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_x0: Option<Vec<f64>>,
}

/// Builtin problems: id, expression, dimension, default start.
const BUILTINS: &[(&str, &str, usize, &[f64])] = &[
    ("example", EXAMPLE_EXPR, 2, &[1.0, 1.0]),
    // alias of `example`
    ("paper-ex1", EXAMPLE_EXPR, 2, &[1.0, 1.0]),
    ("quadratic", "[1,1]*x1^2 + [1,1]*x2^2", 2, &[1.0, 1.0]),
];

impl ProblemSpec {
    pub fn builtin(id: &str) -> Result<Self, CliError> {
        let (name, expr, dim, x0) =
            BUILTINS
                .iter()
                .find(|(name, ..)| *name == id)
                .ok_or_else(|| {
                    let known: Vec<&str> = BUILTINS.iter().map(|b| b.0).collect();
                    CliError::Usage(format!(
                        "unknown problem {id:?}; known: {}",
                        known.join(", ")
                    ))
                })?;
        Ok(ProblemSpec {
            name: name.to_string(),
            dim: *dim,
            source: Source::Expr(expr.to_string()),
            default_x0: Some(x0.to_vec()),
        })
    }

    /// An expression problem; `dim` defaults to the highest variable used.
    pub fn from_expr(text: &str, dim: Option<usize>) -> Result<Self, CliError> {
        let dim = match dim {
            Some(d) => d,
            None => ivfunc::parse(text, usize::MAX).map_err(usage)?.arity(),
        };
        let spec = ProblemSpec {
            name: "expr".into(),
            dim,
            source: Source::Expr(text.into()),
            default_x0: None,
        };
        spec.function()?;
        Ok(spec)
    }

    pub fn from_bounds(lower: &str, upper: &str, dim: Option<usize>) -> Result<Self, CliError> {
        let dim = match dim {
            Some(d) => d,
            None => {
                let lo = ivfunc::parse_real(lower, usize::MAX).map_err(usage)?;
                let hi = ivfunc::parse_real(upper, usize::MAX).map_err(usage)?;
                lo.arity().max(hi.arity())
            }
        };
        let spec = ProblemSpec {
            name: "bounds".into(),
            dim,
            source: Source::Bounds {
                lower: lower.into(),
                upper: upper.into(),
            },
            default_x0: None,
        };
        spec.function()?;
        Ok(spec)
    }

    pub fn function(&self) -> Result<IvFunction, CliError> {
        if self.dim == 0 {
            return Err(CliError::Usage(
                "the problem uses no variables; pass --dim".into(),
            ));
        }
        match &self.source {
            Source::Expr(text) => IvFunction::parse(text, self.dim).map_err(usage),
            Source::Bounds { lower, upper } => {
                let lo = ivfunc::parse_real(lower, self.dim).map_err(usage)?;
                let hi = ivfunc::parse_real(upper, self.dim).map_err(usage)?;
                IvFunction::from_real_bounds(self.dim, lo, hi).map_err(usage)
            }
        }
    }

    /// Checks that `x` matches the problem dimension.
    pub fn check_point(&self, what: &str, x: &[f64]) -> Result<(), CliError> {
        if x.len() != self.dim {
            return Err(CliError::Usage(format!(
                "{what} has {} components, problem dimension is {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

fn usage(e: ivdescent::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// A point or direction given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<f64>);

impl std::str::FromStr for Vector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_vector(s).map(Vector)
    }
}

/// Parses `1,2.5,-3` (optionally wrapped in parentheses).
pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
    if inner.trim().is_empty() {
        return Err("empty vector".into());
    }
    inner
        .split(',')
        .map(|c| {
            let c = c.trim();
            match c.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("{c:?} is not a finite number")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (id, ..) in BUILTINS {
            let p = ProblemSpec::builtin(id).unwrap();
            p.function().unwrap();
        }
        assert!(matches!(
            ProblemSpec::builtin("nope"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn dimension_is_inferred() {
        assert_eq!(
            ProblemSpec::from_expr("[1,2]*x3 + [0,1]*x1", None)
                .unwrap()
                .dim,
            3
        );
        assert_eq!(ProblemSpec::from_expr("[1,2]*x1", Some(4)).unwrap().dim, 4);
        assert!(ProblemSpec::from_expr("[1,2]*x3", Some(2)).is_err());
        assert_eq!(
            ProblemSpec::from_bounds("x1^2", "x1^2 + x2^2", None)
                .unwrap()
                .dim,
            2
        );
        assert!(ProblemSpec::from_expr("[1,2]", None).is_err());
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("1,-1").unwrap(), vec![1.0, -1.0]);
        assert_eq!(parse_vector("(0.5, 2)").unwrap(), vec![0.5, 2.0]);
        assert!(parse_vector("").is_err());
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_vector("1,inf").is_err());
    }
}
