//! `key = value` experiment files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys mirror the
//! long flag names with `_` or `-` accepted interchangeably; `x0` takes one
//! or more vectors separated by `;`.

use std::path::PathBuf;

use ivdescent::TStrategy;

use crate::problem::parse_vector;
use crate::{CliError, Format, GradientKind};

#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    pub name: Option<String>,
    pub problem: Option<String>,
    pub expr: Option<String>,
    pub lower: Option<String>,
    pub upper: Option<String>,
    pub dim: Option<usize>,
    pub x0: Vec<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub t_strategy: Option<TStrategy>,
    pub seed: Option<u64>,
    pub redraw_t: Option<bool>,
    pub gradient: Option<GradientKind>,
    pub fd_step: Option<f64>,
    pub ls_tol: Option<f64>,
    pub alpha_max: Option<f64>,
    pub stall_tolerance: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = FileConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| CliError::Usage(format!("config line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value".into()))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let num = |v: &str| v.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
            match key.as_str() {
                "name" => c.name = Some(value.into()),
                "problem" => c.problem = Some(value.into()),
                "expr" => c.expr = Some(value.into()),
                "lower" => c.lower = Some(value.into()),
                "upper" => c.upper = Some(value.into()),
                "dim" => c.dim = Some(value.parse().map_err(|e| bad(format!("dim: {e}")))?),
                "x0" => {
                    c.x0 = value
                        .split(';')
                        .filter(|v| !v.trim().is_empty())
                        .map(parse_vector)
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(format!("x0: {e}")))?
                }
                "epsilon" => c.epsilon = Some(num(value)?),
                "max_iters" => {
                    c.max_iters = Some(value.parse().map_err(|e| bad(format!("max_iters: {e}")))?)
                }
                "t_strategy" => {
                    c.t_strategy = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "seed" => c.seed = Some(value.parse().map_err(|e| bad(format!("seed: {e}")))?),
                "redraw_t" => {
                    c.redraw_t = Some(value.parse().map_err(|e| bad(format!("redraw_t: {e}")))?)
                }
                "gradient" => c.gradient = Some(enum_value(value).map_err(bad)?),
                "fd_step" => c.fd_step = Some(num(value)?),
                "ls_tol" => c.ls_tol = Some(num(value)?),
                "alpha_max" => c.alpha_max = Some(num(value)?),
                "stall_tolerance" => c.stall_tolerance = Some(num(value)?),
                "format" => c.format = Some(enum_value(value).map_err(bad)?),
                "out" => c.out = Some(value.into()),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn enum_value<T: clap::ValueEnum>(value: &str) -> Result<T, String> {
    T::from_str(value, true).map_err(|e| format!("{value:?}: {e}"))
}
