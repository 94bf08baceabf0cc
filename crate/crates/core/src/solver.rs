//! Iterative descent for interval-valued functions.
//!
//! Each iteration builds a candidate direction from the gradient box,
//! certifies it, and steps with the exact line search. The loop stops when
//! the direction is shorter than `epsilon`, when the gradient box is
//! critical, or when a budget or line-search failure intervenes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::descent::{
    candidate_direction, certify, criticality_oracle, is_critical, CriticalityReport, TSampler,
    TStrategy, ORACLE_MAX_DIM,
};
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalBox};
use crate::ivfunc::{GradientMethod, IvFunction};
use crate::linesearch::{step_length, LineSearchParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop once the Euclidean norm of the direction drops below this.
    pub epsilon: f64,
    /// Maximum number of steps.
    pub max_iters: usize,
    pub t_strategy: TStrategy,
    /// Draw fresh `t` values every iteration instead of once up front.
    pub redraw_t: bool,
    pub ls: LineSearchParams,
    pub gradient_method: GradientMethod,
    /// When no representable decrease exists along a certified direction,
    /// the iterate counts as critical if widening every gradient component
    /// by this much makes the box critical.
    pub stall_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-5,
            max_iters: 200,
            t_strategy: TStrategy::Zero,
            redraw_t: false,
            ls: LineSearchParams::default(),
            gradient_method: GradientMethod::Analytic,
            stall_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.stall_tolerance >= 0.0) {
            return Err(Error::Invalid(format!(
                "stall tolerance must be non-negative, got {}",
                self.stall_tolerance
            )));
        }
        self.ls.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    #[serde(rename = "F")]
    pub value: Interval,
    pub d: Vec<f64>,
    /// Present iff a step was taken from this iterate.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    SmallDirection,
    CriticalBox,
    MaxIters,
    LineSearchFailure,
    Unbounded,
    EvaluationFailure,
}

impl Termination {
    /// Whether the run ended at a point the method regards as critical.
    pub fn converged(self) -> bool {
        matches!(self, Termination::SmallDirection | Termination::CriticalBox)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Detail for failure terminations.
    pub message: Option<String>,
    /// Closed-form verdict at the last iterate.
    pub final_critical: Option<bool>,
    /// Orthant report at the last iterate, on converged runs of dimension
    /// at most [`ORACLE_MAX_DIM`].
    pub final_critical_check: Option<CriticalityReport>,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a trace always holds the start point")
    }

    pub fn steps(&self) -> usize {
        self.records.iter().filter(|r| r.alpha.is_some()).count()
    }

    /// One row per record: `k, x1.., F_lo, F_hi, d1.., alpha`.
    pub fn to_csv(&self) -> String {
        let n = self.records.first().map_or(0, |r| r.x.len());
        let mut out = String::from("k");
        for i in 1..=n {
            write!(out, ",x{i}").unwrap();
        }
        out.push_str(",F_lo,F_hi");
        for i in 1..=n {
            write!(out, ",d{i}").unwrap();
        }
        out.push_str(",alpha\n");
        for r in &self.records {
            write!(out, "{}", r.k).unwrap();
            for v in &r.x {
                write!(out, ",{v}").unwrap();
            }
            write!(out, ",{},{}", r.value.lo(), r.value.hi()).unwrap();
            for v in &r.d {
                write!(out, ",{v}").unwrap();
            }
            match r.alpha {
                Some(a) => writeln!(out, ",{a}").unwrap(),
                None => out.push_str(",\n"),
            }
        }
        out
    }

    /// Fixed-width table with five decimals, one line per iterate.
    pub fn to_table(&self) -> String {
        let vec5 = |v: &[f64]| {
            let parts: Vec<String> = v.iter().map(|c| format!("{:.5}", c)).collect();
            format!("({})", parts.join(", "))
        };
        let mut out = String::from("k | x^k | F(x^k) | d^k | alpha_k\n");
        for r in &self.records {
            let alpha = r.alpha.map_or("-".to_string(), |a| format!("{a:.5}"));
            writeln!(
                out,
                "{} | {} | {:.5} | {} | {}",
                r.k,
                vec5(&r.x),
                r.value,
                vec5(&r.d),
                alpha
            )
            .unwrap();
        }
        out
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn stop(records: Vec<IterationRecord>, termination: Termination, message: Option<String>) -> Trace {
    Trace {
        records,
        termination,
        message,
        final_critical: None,
        final_critical_check: None,
    }
}

/// Runs the descent iteration from `x0`.
///
/// Errors only for invalid configuration or when `F` or its gradient box
/// cannot be computed at `x0`; later failures end the trace with a reason.
pub fn run(f: &IvFunction, x0: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    cfg.validate()?;
    f.evaluate(x0)?;
    f.gradient_box_or_fd(x0, cfg.gradient_method)?;

    let n = f.dim();
    let mut sampler = TSampler::new(cfg.t_strategy.clone(), n);
    let mut t = sampler.next_t()?;
    let mut x = x0.to_vec();
    let mut records = Vec::new();

    for k in 0.. {
        let value = match f.evaluate(&x) {
            Ok(v) => v,
            Err(e) => {
                return Ok(stop(
                    records,
                    Termination::EvaluationFailure,
                    Some(e.to_string()),
                ))
            }
        };
        let g = match f.gradient_box_or_fd(&x, cfg.gradient_method) {
            Ok(g) => g,
            Err(e) => {
                return Ok(stop(
                    records,
                    Termination::EvaluationFailure,
                    Some(e.to_string()),
                ))
            }
        };
        if cfg.redraw_t && k > 0 {
            t = sampler.next_t()?;
        }
        let mut d = candidate_direction(&g, &t);
        records.push(IterationRecord {
            k,
            x: x.clone(),
            value,
            d: d.clone(),
            alpha: None,
        });

        let termination = if norm2(&d) < cfg.epsilon {
            Some(Termination::SmallDirection)
        } else if is_critical(&g) {
            Some(Termination::CriticalBox)
        } else {
            None
        };
        if let Some(termination) = termination {
            let mut trace = stop(records, termination, None);
            trace.final_critical = Some(is_critical(&g));
            if n <= ORACLE_MAX_DIM {
                trace.final_critical_check = Some(criticality_oracle(&g)?);
            }
            return Ok(trace);
        }

        if !certify(&d, &g)?.is_descent {
            let fallback = candidate_direction(&g, &vec![0.0; n]);
            if cfg.t_strategy != TStrategy::Zero && certify(&fallback, &g)?.is_descent {
                d = fallback;
                records.last_mut().unwrap().d = d.clone();
            } else {
                return Ok(stop(
                    records,
                    Termination::LineSearchFailure,
                    Some(format!(
                        "candidate {d:?} is not a certified descent direction"
                    )),
                ));
            }
        }

        if k >= cfg.max_iters {
            return Ok(stop(records, Termination::MaxIters, None));
        }

        let step = match step_length(f, &x, &d, &cfg.ls) {
            Ok(s) => s,
            Err(e @ Error::Unbounded { .. }) => {
                return Ok(stop(records, Termination::Unbounded, Some(e.to_string())))
            }
            Err(e @ Error::LineSearch(_)) => {
                let widened =
                    IntervalBox::new(g.iter().map(|c| c.inflate(cfg.stall_tolerance)).collect());
                if !is_critical(&widened) {
                    return Ok(stop(
                        records,
                        Termination::LineSearchFailure,
                        Some(e.to_string()),
                    ));
                }
                let mut trace = stop(
                    records,
                    Termination::CriticalBox,
                    Some(format!(
                        "critical within {}: no representable decrease remains",
                        cfg.stall_tolerance
                    )),
                );
                trace.final_critical = Some(true);
                if n <= ORACLE_MAX_DIM {
                    trace.final_critical_check = Some(criticality_oracle(&widened)?);
                }
                return Ok(trace);
            }
            Err(e) => {
                return Ok(stop(
                    records,
                    Termination::LineSearchFailure,
                    Some(e.to_string()),
                ))
            }
        };
        records.last_mut().unwrap().alpha = Some(step.alpha);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += step.alpha * di;
        }
    }
    unreachable!("the iteration loop only exits by returning")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed used for start `index` of a multi-start run with base `seed`.
/// The first start keeps `seed`, so a single start matches [`run`].
pub fn sub_seed(seed: u64, index: usize) -> u64 {
    if index == 0 {
        return seed;
    }
    splitmix64(seed ^ splitmix64(index as u64))
}

fn config_for_start(cfg: &SolverConfig, index: usize) -> SolverConfig {
    let mut c = cfg.clone();
    if let TStrategy::Random { seed } = c.t_strategy {
        c.t_strategy = TStrategy::Random {
            seed: sub_seed(seed, index),
        };
    }
    c
}

/// Independent runs from each start point, returned in start order.
pub fn multi_start(
    f: &IvFunction,
    starts: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<Vec<Result<Trace>>> {
    if starts.is_empty() {
        return Err(Error::Invalid(
            "multi-start needs at least one start point".into(),
        ));
    }
    let configs: Vec<SolverConfig> = (0..starts.len())
        .map(|i| config_for_start(cfg, i))
        .collect();

    #[cfg(not(target_arch = "wasm32"))]
    let traces = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .zip(&configs)
            .map(|(x0, c)| scope.spawn(move || run(f, x0, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    #[cfg(target_arch = "wasm32")]
    let traces = starts
        .iter()
        .zip(&configs)
        .map(|(x0, c)| run(f, x0, c))
        .collect();

    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_row_of_example() {
        let f = IvFunction::example();
        let tr = run(&f, &[1.0, 1.0], &SolverConfig::default()).unwrap();
        let r0 = &tr.records[0];
        assert_eq!(r0.value, Interval::new(5.0, 8.0).unwrap());
        assert_eq!(r0.d, vec![-13.0, -4.0]);
        let alpha = (11.0 + 3.0 * 47f64.sqrt()) / 302.0;
        assert!((r0.alpha.unwrap() - alpha).abs() < 1e-7);
        let r1 = &tr.records[1];
        assert!((r1.x[0] - (1.0 - 13.0 * alpha)).abs() < 1e-6);
        assert!((r1.x[1] - (1.0 - 4.0 * alpha)).abs() < 1e-6);
        assert!(tr.termination.converged(), "{:?}", tr.termination);
        assert!(tr.last().alpha.is_none());
    }

    #[test]
    fn zero_budget_stops_immediately() {
        let f = IvFunction::example();
        let cfg = SolverConfig {
            max_iters: 0,
            ..SolverConfig::default()
        };
        let tr = run(&f, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(tr.termination, Termination::MaxIters);
        assert_eq!(tr.records.len(), 1);
        assert!(!tr.termination.converged());
    }

    #[test]
    fn classical_quadratic_converges_to_origin() {
        let f = IvFunction::parse("[1,1]*x1^2 + [1,1]*x2^2", 2).unwrap();
        let tr = run(&f, &[1.0, 1.0], &SolverConfig::default()).unwrap();
        assert!(tr.termination.converged());
        assert!(
            tr.last().x.iter().all(|v| v.abs() < 1e-6),
            "{:?}",
            tr.last().x
        );
    }

    #[test]
    fn bad_start_is_an_error() {
        let f = IvFunction::example();
        assert!(run(&f, &[1.0], &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            epsilon: 0.0,
            ..SolverConfig::default()
        };
        assert!(run(&f, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn unbounded_ray_is_reported() {
        let f = IvFunction::parse("[1,2]*x1", 1).unwrap();
        let tr = run(&f, &[0.5], &SolverConfig::default()).unwrap();
        assert_eq!(tr.termination, Termination::Unbounded);
        assert!(tr.message.is_some());
    }

    #[test]
    fn csv_and_table_layout() {
        let f = IvFunction::example();
        let tr = run(&f, &[1.0, 1.0], &SolverConfig::default()).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,x1,x2,F_lo,F_hi,d1,d2,alpha");
        assert!(lines
            .next()
            .unwrap()
            .starts_with("0,1,1,5,8,-13,-4,0.10452"));
        assert!(csv.trim_end().ends_with(','));
        let table = tr.to_table();
        let row0 = table.lines().nth(1).unwrap();
        assert_eq!(
            row0,
            "0 | (1.00000, 1.00000) | [5.00000, 8.00000] | (-13.00000, -4.00000) | 0.10453"
        );
    }

    #[test]
    fn sub_seeds_are_stable_and_distinct() {
        assert_eq!(sub_seed(3, 1), sub_seed(3, 1));
        assert_ne!(sub_seed(3, 0), sub_seed(3, 1));
    }

    #[test]
    fn multi_start_keeps_order() {
        let f = IvFunction::example();
        let starts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
        let out = multi_start(&f, &starts, &SolverConfig::default()).unwrap();
        let a = out[0].as_ref().unwrap();
        let c = out[2].as_ref().unwrap();
        assert_eq!(a, c);
        assert_eq!(out[1].as_ref().unwrap().records[0].x, vec![1.0, -1.0]);
        assert!(multi_start(&f, &[], &SolverConfig::default()).is_err());
    }

    #[test]
    fn single_start_matches_run() {
        let f = IvFunction::example();
        let cfg = SolverConfig {
            t_strategy: TStrategy::Random { seed: 5 },
            ..SolverConfig::default()
        };
        let x0 = vec![1.0, -1.0];
        let multi = multi_start(&f, &[x0.clone()], &cfg).unwrap();
        assert_eq!(multi[0].as_ref().unwrap(), &run(&f, &x0, &cfg).unwrap());
    }
}
