//! Browser bindings for the descent solver.
//!
//! Every exported function takes plain strings and numbers and returns a
//! JSON string, so the page needs no generated type definitions. The
//! `*_json` functions hold the logic and are usable from native code.

use ivdescent::descent::{candidate_direction, in_descent_set};
use ivdescent::solver::{self, SolverConfig};
use ivdescent::{
    certify, criticality_oracle, is_critical, GradientMethod, Interval, IvFunction, TStrategy,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request per axis.
pub const MAX_GRID: usize = 400;

fn function(expr: &str) -> Result<IvFunction, String> {
    IvFunction::parse(expr, 2).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Grid {
    nx: usize,
    ny: usize,
    /// Row-major, `y` outer; `null` where the function cannot be evaluated.
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    min: f64,
    max: f64,
}

/// Endpoint values of `expr` on an `nx` by `ny` grid over the rectangle.
pub fn grid_json(
    expr: &str,
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<String, String> {
    if !(2..=MAX_GRID).contains(&nx) || !(2..=MAX_GRID).contains(&ny) {
        return Err(format!(
            "grid size must be between 2 and {MAX_GRID} per axis"
        ));
    }
    if !(x_range.0 < x_range.1 && y_range.0 < y_range.1) {
        return Err("empty plotting range".into());
    }
    let f = function(expr)?;
    let mut grid = Grid {
        nx,
        ny,
        lower: Vec::with_capacity(nx * ny),
        upper: Vec::with_capacity(nx * ny),
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    let at = |r: (f64, f64), i: usize, n: usize| r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64;
    for j in 0..ny {
        for i in 0..nx {
            let x = [at(x_range, i, nx), at(y_range, j, ny)];
            match f.evaluate(&x) {
                Ok(v) => {
                    grid.min = grid.min.min(v.lo());
                    grid.max = grid.max.max(v.hi());
                    grid.lower.push(Some(v.lo()));
                    grid.upper.push(Some(v.hi()));
                }
                Err(_) => {
                    grid.lower.push(None);
                    grid.upper.push(None);
                }
            }
        }
    }
    if grid.min > grid.max {
        return Err("the function cannot be evaluated anywhere in the range".into());
    }
    to_json(&grid)
}

#[derive(Serialize)]
struct PathStep {
    x: Vec<f64>,
    #[serde(rename = "F")]
    value: Interval,
    d: Vec<f64>,
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct Path {
    steps: Vec<PathStep>,
    termination: String,
    message: Option<String>,
    critical: Option<bool>,
    table: String,
}

/// Descent path from `(x, y)` with the given `t` strategy text.
pub fn solve_json(
    expr: &str,
    x: f64,
    y: f64,
    t_strategy: &str,
    redraw_t: bool,
) -> Result<String, String> {
    let f = function(expr)?;
    let t_strategy: TStrategy = t_strategy
        .parse()
        .map_err(|e: ivdescent::Error| e.to_string())?;
    let cfg = SolverConfig {
        t_strategy,
        redraw_t,
        ..SolverConfig::default()
    };
    let tr = solver::run(&f, &[x, y], &cfg).map_err(|e| e.to_string())?;
    let path = Path {
        steps: tr
            .records
            .iter()
            .map(|r| PathStep {
                x: r.x.clone(),
                value: r.value,
                d: r.d.clone(),
                alpha: r.alpha,
            })
            .collect(),
        termination: format!("{:?}", tr.termination),
        message: tr.message.clone(),
        critical: tr.final_critical,
        table: tr.to_table(),
    };
    to_json(&path)
}

#[derive(Serialize)]
struct Inspection {
    #[serde(rename = "F")]
    value: Interval,
    gradient: Vec<Interval>,
    /// Candidate direction with `t = 0`.
    candidate: Vec<f64>,
    direction: Vec<f64>,
    certificate: Interval,
    is_descent: bool,
    in_descent_set: bool,
    critical: bool,
    witness: Option<Vec<f64>>,
}

/// Gradient box, criticality and the certificate of `(dx, dy)` at `(x, y)`.
pub fn inspect_json(expr: &str, x: f64, y: f64, dx: f64, dy: f64) -> Result<String, String> {
    let f = function(expr)?;
    let p = [x, y];
    let value = f.evaluate(&p).map_err(|e| e.to_string())?;
    let g = f
        .gradient_box_or_fd(&p, GradientMethod::Analytic)
        .map_err(|e| e.to_string())?;
    let d = [dx, dy];
    let c = certify(&d, &g).map_err(|e| e.to_string())?;
    let report = criticality_oracle(&g).map_err(|e| e.to_string())?;
    to_json(&Inspection {
        value,
        candidate: candidate_direction(&g, &[0.0, 0.0]),
        direction: d.to_vec(),
        certificate: c.s,
        is_descent: c.is_descent,
        in_descent_set: in_descent_set(&d, &g),
        critical: is_critical(&g),
        witness: report.witness,
        gradient: g.0,
    })
}

#[wasm_bindgen]
pub fn grid(
    expr: &str,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
) -> Result<String, JsError> {
    grid_json(expr, (x_min, x_max), (y_min, y_max), nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(
    expr: &str,
    x: f64,
    y: f64,
    t_strategy: &str,
    redraw_t: bool,
) -> Result<String, JsError> {
    solve_json(expr, x, y, t_strategy, redraw_t).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn inspect(expr: &str, x: f64, y: f64, dx: f64, dy: f64) -> Result<String, JsError> {
    inspect_json(expr, x, y, dx, dy).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn example_expr() -> String {
    ivdescent::ivfunc::EXAMPLE_EXPR.to_string()
}
