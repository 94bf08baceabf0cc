//! Descent directions, descent certificates and criticality tests.
//!
//! A direction `d` is certified as descent at `x` when
//! `S = Σ d_i ⊙ g_i(x)` lies strictly below `[0, 0]`. Candidates are picked
//! from the negated gradient box, `d_i = -hi_i + t_i (hi_i - lo_i)`, with
//! `d_i = 0` on coordinates whose box has zero in its interior.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalBox, DEFAULT_TAU};

/// How the per-coordinate parameters `t_i ∈ [0, 1]` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TStrategy {
    /// `t_i = 0`, i.e. `d_i = -hi_i`.
    #[default]
    Zero,
    /// `t_i = 1/2`.
    Midpoint,
    /// Uniform draws from a seeded generator.
    Random { seed: u64 },
    /// Explicit values; the last one is reused if the list is short.
    Fixed { t: Vec<f64> },
}

impl TStrategy {
    /// Draws `n` values of `t`.
    pub fn draw(&self, n: usize) -> Result<Vec<f64>> {
        TSampler::new(self.clone(), n).next_t()
    }
}

/// Stream of `t` vectors; successive random draws continue one generator.
#[derive(Debug, Clone)]
pub struct TSampler {
    strategy: TStrategy,
    n: usize,
    rng: Option<ChaCha8Rng>,
}

impl TSampler {
    pub fn new(strategy: TStrategy, n: usize) -> Self {
        let rng = match &strategy {
            TStrategy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        TSampler { strategy, n, rng }
    }

    pub fn next_t(&mut self) -> Result<Vec<f64>> {
        let n = self.n;
        match &self.strategy {
            TStrategy::Zero => Ok(vec![0.0; n]),
            TStrategy::Midpoint => Ok(vec![0.5; n]),
            TStrategy::Random { .. } => {
                let rng = self.rng.as_mut().expect("random strategy owns a generator");
                Ok((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect())
            }
            TStrategy::Fixed { t } => {
                let last = *t
                    .last()
                    .ok_or_else(|| Error::Invalid("fixed t list is empty".into()))?;
                if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Invalid(format!("t value {bad} outside [0, 1]")));
                }
                Ok((0..n).map(|i| t.get(i).copied().unwrap_or(last)).collect())
            }
        }
    }
}

impl fmt::Display for TStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TStrategy::Zero => write!(f, "zero"),
            TStrategy::Midpoint => write!(f, "midpoint"),
            TStrategy::Random { seed } => write!(f, "random:{seed}"),
            TStrategy::Fixed { t } => {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                write!(f, "fixed:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for TStrategy {
    type Err = Error;

    /// Parses `zero`, `midpoint`, `random`, `random:SEED` or `fixed:t1,t2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        let bad = |msg: String| Error::Invalid(format!("t strategy {s:?}: {msg}"));
        match (kind, arg) {
            ("zero", None) => Ok(TStrategy::Zero),
            ("midpoint", None) => Ok(TStrategy::Midpoint),
            ("random", None) => Ok(TStrategy::Random { seed: 0 }),
            ("random", Some(a)) => a
                .parse()
                .map(|seed| TStrategy::Random { seed })
                .map_err(|e| bad(format!("bad seed: {e}"))),
            ("fixed", Some(a)) => {
                let t = a
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| bad(format!("bad value: {e}")))?;
                if let Some(v) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(bad(format!("value {v} outside [0, 1]")));
                }
                Ok(TStrategy::Fixed { t })
            }
            _ => Err(bad(
                "expected zero, midpoint, random[:SEED] or fixed:T1,T2,...".into(),
            )),
        }
    }
}

/// Candidate direction from the gradient box for the given `t` values.
pub fn candidate_direction(g: &IntervalBox, t: &[f64]) -> Vec<f64> {
    candidate_direction_tau(g, t, DEFAULT_TAU)
}

pub fn candidate_direction_tau(g: &IntervalBox, t: &[f64], tau: f64) -> Vec<f64> {
    g.iter()
        .zip(t)
        .map(|(gi, ti)| {
            if gi.zero_in_interior(tau) {
                0.0
            } else {
                -gi.hi() + ti * (gi.hi() - gi.lo())
            }
        })
        .collect()
}

/// A direction together with `S = Σ d_i ⊙ g_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentCertificate {
    pub d: Vec<f64>,
    pub s: Interval,
    pub is_descent: bool,
}

pub fn certify(d: &[f64], g: &IntervalBox) -> Result<DescentCertificate> {
    if d.len() != g.dim() {
        return Err(Error::Dimension {
            expected: g.dim(),
            got: d.len(),
        });
    }
    let mut s = Interval::ZERO;
    for (gi, di) in g.iter().zip(d) {
        s = s.add(gi.scale(*di)?)?;
    }
    Ok(DescentCertificate {
        d: d.to_vec(),
        s,
        is_descent: s.strictly_precedes(&Interval::ZERO),
    })
}

/// `lo·d < 0` and `hi·d < 0` for the endpoint vectors of the box.
pub fn in_descent_set(d: &[f64], g: &IntervalBox) -> bool {
    let lo: f64 = g.iter().zip(d).map(|(gi, di)| gi.lo() * di).sum();
    let hi: f64 = g.iter().zip(d).map(|(gi, di)| gi.hi() * di).sum();
    lo < 0.0 && hi < 0.0
}

/// No direction decreases every linear model `p·d` with `p` in the box.
/// Equivalent to every component containing zero.
pub fn is_critical(g: &IntervalBox) -> bool {
    g.iter().all(Interval::zero_in_closure)
}

/// Largest dimension accepted by [`criticality_oracle`].
pub const ORACLE_MAX_DIM: usize = 16;

/// One sign pattern of direction space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthantRow {
    /// `true` for `d_i >= 0`, `false` for `d_i <= 0`.
    pub signs: Vec<bool>,
    /// Coefficients of the worst-case linear model on this orthant.
    pub coeffs: Vec<f64>,
    /// Infimum of the worst-case model over the orthant's unit cube.
    pub infimum: f64,
    pub feasible: bool,
}

impl OrthantRow {
    pub fn same_sign(&self) -> bool {
        self.signs.iter().all(|s| *s) || self.signs.iter().all(|s| !*s)
    }

    pub fn sign_label(&self) -> String {
        self.signs
            .iter()
            .enumerate()
            .map(|(i, s)| format!("d{}{}0", i + 1, if *s { ">=" } else { "<=" }))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub critical: bool,
    pub witness: Option<Vec<f64>>,
    pub orthants: Vec<OrthantRow>,
}

/// Enumerates the `2^n` orthants of direction space. On each orthant the
/// worst case of `p·d` over the box is linear, `Σ c_i d_i` with `c_i = hi_i`
/// where `d_i >= 0` and `c_i = lo_i` where `d_i <= 0`; the point is critical
/// when no orthant lets that sum go negative.
pub fn criticality_oracle(g: &IntervalBox) -> Result<CriticalityReport> {
    let n = g.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::Invalid(format!(
            "orthant enumeration limited to dimension {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    let mut orthants = Vec::with_capacity(1 << n);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0..(1u32 << n) {
        // first coordinate is the most significant bit, all-positive first
        let signs: Vec<bool> = (0..n).map(|i| mask & (1 << (n - 1 - i)) == 0).collect();
        let coeffs: Vec<f64> = g
            .iter()
            .zip(&signs)
            .map(|(gi, pos)| if *pos { gi.hi() } else { gi.lo() })
            .collect();
        let mut infimum = 0.0;
        let mut vertex = vec![0.0; n];
        for i in 0..n {
            // d_i ranges over [0, 1] or [-1, 0]
            let unit = if signs[i] { 1.0 } else { -1.0 };
            let contrib = coeffs[i] * unit;
            if contrib < 0.0 {
                infimum += contrib;
                vertex[i] = unit;
            }
        }
        let feasible = infimum < 0.0;
        if feasible && best.as_ref().is_none_or(|(v, _)| infimum < *v) {
            best = Some((infimum, vertex));
        }
        orthants.push(OrthantRow {
            signs,
            coeffs,
            infimum,
            feasible,
        });
    }
    Ok(CriticalityReport {
        critical: best.is_none(),
        witness: best.map(|(_, w)| w),
        orthants,
    })
}

impl fmt::Display for CriticalityReport {
    /// Two-group table: same-sign orthants first, then mixed-sign ones.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let groups = [
            ("Case 1: all components of d share a sign", true),
            ("Case 2: components of d have mixed signs", false),
        ];
        for (title, same) in groups {
            let rows: Vec<&OrthantRow> = self
                .orthants
                .iter()
                .filter(|r| r.same_sign() == same)
                .collect();
            if rows.is_empty() {
                continue;
            }
            writeln!(f, "{title}")?;
            for r in rows {
                let model: Vec<String> = r
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{c:.5}*d{}", i + 1))
                    .collect();
                writeln!(
                    f,
                    "  {:<28} max model {} < 0 : {}",
                    r.sign_label(),
                    model.join(" + "),
                    if r.feasible {
                        "feasible"
                    } else {
                        "no solution"
                    }
                )?;
            }
        }
        match &self.witness {
            None => write!(
                f,
                "critical: yes (no sign pattern admits a descent direction)"
            ),
            Some(w) => write!(f, "critical: no, witness direction {w:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(v: &[(f64, f64)]) -> IntervalBox {
        IntervalBox::new(
            v.iter()
                .map(|(a, b)| Interval::new(*a, *b).unwrap())
                .collect(),
        )
    }

    fn at_1_m1() -> IntervalBox {
        bx(&[(2.0, 8.0), (-3.0, -2.0)])
    }

    fn at_x4() -> IntervalBox {
        bx(&[(-2.25136, 2.87704), (-0.65506, 0.56692)])
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(
            candidate_direction(&at_1_m1(), &[5.0 / 6.0, 0.0]),
            vec![-3.0, 2.0]
        );
        let g0 = bx(&[(7.0, 13.0), (3.0, 4.0)]);
        assert_eq!(candidate_direction(&g0, &[0.0, 0.0]), vec![-13.0, -4.0]);
        let g = bx(&[(-1.0, 1.0), (-2.0, 2.0)]);
        assert_eq!(candidate_direction(&g, &[0.3, 0.9]), vec![0.0, 0.0]);
    }

    #[test]
    fn certify_examples() {
        let c = certify(&[-3.0, 2.0], &at_1_m1()).unwrap();
        assert_eq!(c.s, Interval::new(-30.0, -10.0).unwrap());
        assert!(c.is_descent);
        let c = certify(&[0.0, 0.0], &at_1_m1()).unwrap();
        assert_eq!(c.s, Interval::ZERO);
        assert!(!c.is_descent);
        let c = certify(&[1.0, 0.0], &at_1_m1()).unwrap();
        assert_eq!(c.s, Interval::new(2.0, 8.0).unwrap());
        assert!(!c.is_descent);
        assert!(certify(&[1.0], &at_1_m1()).is_err());
    }

    #[test]
    fn descent_set_examples() {
        assert!(in_descent_set(&[-3.0, 2.0], &at_1_m1()));
        assert!(!in_descent_set(&[0.0, 0.0], &at_1_m1()));
        assert!(!in_descent_set(&[-1.0, -1.0], &at_1_m1()));
    }

    #[test]
    fn critical_examples() {
        assert!(is_critical(&at_x4()));
        assert!(!is_critical(&at_1_m1()));
        assert!(is_critical(&bx(&[(0.0, 1.0), (0.0, 2.0)])));
        assert!(
            criticality_oracle(&bx(&[(0.0, 1.0), (0.0, 2.0)]))
                .unwrap()
                .critical
        );
    }

    #[test]
    fn oracle_at_critical_point_matches_case_analysis() {
        let r = criticality_oracle(&at_x4()).unwrap();
        assert!(r.critical);
        assert_eq!(r.orthants.len(), 4);
        assert!(r.orthants.iter().all(|o| !o.feasible && o.infimum == 0.0));
        assert_eq!(r.orthants.iter().filter(|o| o.same_sign()).count(), 2);
        let text = r.to_string();
        assert!(text.contains("Case 1") && text.contains("Case 2"));
        assert!(text.contains("critical: yes"));
    }

    #[test]
    fn oracle_witness_sits_in_mixed_orthant() {
        let g = at_1_m1();
        let r = criticality_oracle(&g).unwrap();
        assert!(!r.critical);
        let w = r.witness.unwrap();
        assert_eq!(w, vec![-1.0, 1.0]);
        assert!(certify(&w, &g).unwrap().is_descent);
        assert!(
            criticality_oracle(&bx(&[(0.0, 0.0), (0.0, 0.0)]))
                .unwrap()
                .critical
        );
    }

    #[test]
    fn oracle_refuses_large_dimension() {
        let g = IntervalBox::new(vec![Interval::ONE; ORACLE_MAX_DIM + 1]);
        assert!(criticality_oracle(&g).is_err());
    }

    #[test]
    fn t_strategies() {
        assert_eq!(TStrategy::Zero.draw(3).unwrap(), vec![0.0; 3]);
        assert_eq!(TStrategy::Midpoint.draw(2).unwrap(), vec![0.5; 2]);
        let r = TStrategy::Random { seed: 7 };
        let a = r.draw(5).unwrap();
        assert_eq!(a, r.draw(5).unwrap());
        assert!(a.iter().all(|t| (0.0..=1.0).contains(t)));
        let fixed = TStrategy::Fixed { t: vec![0.25, 1.0] };
        assert_eq!(fixed.draw(3).unwrap(), vec![0.25, 1.0, 1.0]);
        assert!(TStrategy::Fixed { t: vec![1.5] }.draw(1).is_err());
        assert!(TStrategy::Fixed { t: vec![] }.draw(1).is_err());
    }

    #[test]
    fn strategy_text_round_trip() {
        for text in ["zero", "midpoint", "random:42", "fixed:0.25,1"] {
            let t: TStrategy = text.parse().unwrap();
            assert_eq!(t.to_string(), text);
        }
        assert_eq!(
            "random".parse::<TStrategy>().unwrap(),
            TStrategy::Random { seed: 0 }
        );
        assert!("fixed:1.5".parse::<TStrategy>().is_err());
        assert!("fixed:".parse::<TStrategy>().is_err());
        assert!("steepest".parse::<TStrategy>().is_err());
    }
}
