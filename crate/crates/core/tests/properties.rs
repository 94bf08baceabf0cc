use ivdescent::descent::{
    candidate_direction, certify, criticality_oracle, in_descent_set, is_critical,
};
use ivdescent::interval::DEFAULT_TAU;
use ivdescent::ivfunc::{default_fd_step, parse, Func, IvExpr, RealExpr, Term, TermOp};
use ivdescent::linesearch::{convex_step_by_derivative_root, step_length, LineSearchParams};
use ivdescent::solver::{self, multi_start, SolverConfig, Termination};
use ivdescent::{GradientMethod, Interval, IntervalBox, IvFunction, TStrategy};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = Interval> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| Interval::new(a, b).unwrap())
}

fn gradient_box(max_dim: usize) -> impl Strategy<Value = IntervalBox> {
    prop::collection::vec(interval(), 1..=max_dim).prop_map(IntervalBox::new)
}

/// Boxes whose components keep zero out of their interior.
fn signed_box(max_dim: usize) -> impl Strategy<Value = IntervalBox> {
    prop::collection::vec((0.0..20.0f64, 0.0..20.0f64, any::<bool>()), 1..=max_dim).prop_map(|v| {
        IntervalBox::new(
            v.into_iter()
                .map(|(a, b, neg)| {
                    let s = if neg { -1.0 } else { 1.0 };
                    Interval::new(s * a, s * b).unwrap()
                })
                .collect(),
        )
    })
}

// Endpoint pairs of the example, one per sign region of (x1, x2).
fn region_pair(x1: f64, x2: f64) -> (f64, f64) {
    let (a, b) = (x1, x2);
    match (a >= 0.0, b >= 0.0) {
        (true, true) => (
            2.0 * a * a + 2.0 * a * b + b * b + a - b,
            4.0 * a * a + 3.0 * a * b + 2.0 * b * b + 2.0 * a - 3.0 * b,
        ),
        (false, true) => (
            2.0 * a * a + 3.0 * a * b + b * b + 2.0 * a - b,
            4.0 * a * a + 2.0 * a * b + 2.0 * b * b + a - 3.0 * b,
        ),
        (false, false) => (
            2.0 * a * a + 2.0 * a * b + b * b + 2.0 * a - 3.0 * b,
            4.0 * a * a + 3.0 * a * b + 2.0 * b * b + a - b,
        ),
        (true, false) => (
            2.0 * a * a + 3.0 * a * b + b * b + a - 3.0 * b,
            4.0 * a * a + 2.0 * a * b + 2.0 * b * b + 2.0 * a - b,
        ),
    }
}

// Partial derivative pairs of the example, per sign region.
fn region_gradient(a: f64, b: f64) -> [(f64, f64); 2] {
    match (a >= 0.0, b >= 0.0) {
        (true, true) => [
            (4.0 * a + 2.0 * b + 1.0, 8.0 * a + 3.0 * b + 2.0),
            (2.0 * a + 2.0 * b - 1.0, 3.0 * a + 4.0 * b - 3.0),
        ],
        (false, true) => [
            (4.0 * a + 3.0 * b + 2.0, 8.0 * a + 2.0 * b + 1.0),
            (3.0 * a + 2.0 * b - 1.0, 2.0 * a + 4.0 * b - 3.0),
        ],
        (false, false) => [
            (4.0 * a + 2.0 * b + 2.0, 8.0 * a + 3.0 * b + 1.0),
            (2.0 * a + 2.0 * b - 3.0, 3.0 * a + 4.0 * b - 1.0),
        ],
        (true, false) => [
            (4.0 * a + 3.0 * b + 1.0, 8.0 * a + 2.0 * b + 2.0),
            (3.0 * a + 2.0 * b - 3.0, 2.0 * a + 4.0 * b - 1.0),
        ],
    }
}

fn near_kink(x: &[f64]) -> bool {
    // basis terms x1^2, x1 x2, x2^2, x1, x2 and the final Markov tie
    let f = IvFunction::example();
    let v = f.evaluate(x).unwrap();
    x.iter().any(|c| c.abs() < 0.05) || v.width() < 1e-3
}

#[test]
fn example_matches_piecewise_display_on_grid() {
    let f = IvFunction::example();
    let steps = 41;
    for i in 0..steps {
        for j in 0..steps {
            let x1 = -2.0 + 4.0 * i as f64 / (steps - 1) as f64;
            let x2 = -2.0 + 4.0 * j as f64 / (steps - 1) as f64;
            let (p, q) = region_pair(x1, x2);
            let v = f.evaluate(&[x1, x2]).unwrap();
            assert!((v.lo() - p.min(q)).abs() < 1e-12, "({x1}, {x2}): {v}");
            assert!((v.hi() - p.max(q)).abs() < 1e-12, "({x1}, {x2}): {v}");
            if let Ok(g) = f.gradient_box(&[x1, x2], GradientMethod::Analytic) {
                for (k, (a, b)) in region_gradient(x1, x2).into_iter().enumerate() {
                    assert!((g[k].lo() - a.min(b)).abs() < 1e-12);
                    assert!((g[k].hi() - a.max(b)).abs() < 1e-12);
                }
            }
        }
    }
}

fn real_expr() -> impl Strategy<Value = RealExpr> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|v| RealExpr::Const(f64::from(v) / 8.0)),
        (0usize..3).prop_map(RealExpr::Var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| RealExpr::Neg(Box::new(a))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RealExpr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RealExpr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RealExpr::mul(a, b)),
            (inner.clone(), -3i32..5).prop_map(|(a, k)| RealExpr::pow(a, k)),
            (
                inner,
                prop_oneof![Just(Func::Exp), Just(Func::Sin), Just(Func::Cos)]
            )
                .prop_map(|(a, f)| RealExpr::Call(f, Box::new(a))),
        ]
    })
}

fn iv_expr() -> impl Strategy<Value = IvExpr> {
    prop::collection::vec((interval(), real_expr(), any::<bool>()), 1..5).prop_map(|terms| {
        IvExpr::new(
            terms
                .into_iter()
                .map(|(coeff, basis, markov)| Term {
                    op: if markov {
                        TermOp::MarkovMinus
                    } else {
                        TermOp::Plus
                    },
                    coeff,
                    basis,
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn markov_self_difference_is_zero(a in interval()) {
        prop_assert_eq!(a.markov_sub(a).unwrap(), Interval::ZERO);
    }

    #[test]
    fn markov_from_zero_is_negation(a in interval()) {
        let n = Interval::ZERO.markov_sub(a).unwrap();
        prop_assert_eq!(n, a.negate());
        prop_assert_eq!(n, a.scale(-1.0).unwrap());
    }

    #[test]
    fn strict_order_via_markov(a in interval(), b in interval()) {
        let diff = a.markov_sub(b).unwrap();
        prop_assert!(diff.lo() <= diff.hi());
        prop_assert_eq!(
            a.strictly_precedes(&b),
            diff.strictly_precedes(&Interval::ZERO)
        );
    }

    #[test]
    fn metric_to_zero_is_norm(a in interval()) {
        prop_assert_eq!(a.metric(&Interval::ZERO), a.norm());
        prop_assert!(a.norm() >= 0.0);
        prop_assert_eq!(a.metric(&a), 0.0);
    }

    #[test]
    fn scaling_composes(a in interval(), c in -10.0..10.0f64, k in -10.0..10.0f64) {
        let lhs = a.scale(k).unwrap().scale(c).unwrap();
        let rhs = a.scale(c * k).unwrap();
        prop_assert!(lhs.metric(&rhs) <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn candidate_rule_is_sound(g in signed_box(8), seed in any::<u64>()) {
        let t = TStrategy::Random { seed }.draw(g.dim()).unwrap();
        let d = candidate_direction(&g, &t);
        // a component [0, 0] gives d_i = 0 and contributes nothing
        let all_zero = g.iter().all(|c| c.lo() == 0.0 && c.hi() == 0.0);
        let touches = g.iter().any(|c| c.lo() == 0.0 || c.hi() == 0.0);
        let c = certify(&d, &g).unwrap();
        if !all_zero && !touches {
            prop_assert!(c.is_descent, "{:?} {:?}", g, c);
        }
    }

    #[test]
    fn certificate_implies_descent_set(g in gradient_box(6), d in prop::collection::vec(-5.0..5.0f64, 6)) {
        let d = &d[..g.dim()];
        if certify(d, &g).unwrap().is_descent {
            prop_assert!(in_descent_set(d, &g));
        }
    }

    #[test]
    fn closed_form_matches_orthant_oracle(g in gradient_box(8)) {
        prop_assert_eq!(is_critical(&g), criticality_oracle(&g).unwrap().critical);
    }

    #[test]
    fn oracle_witness_certifies(g in gradient_box(6)) {
        let r = criticality_oracle(&g).unwrap();
        if let Some(w) = r.witness {
            prop_assert!(certify(&w, &g).unwrap().is_descent);
        }
    }

    #[test]
    fn critical_boxes_admit_no_certified_candidate(
        g in gradient_box(6).prop_filter("critical", is_critical),
        seed in any::<u64>(),
    ) {
        let t = TStrategy::Random { seed }.draw(g.dim()).unwrap();
        prop_assert!(!certify(&candidate_direction(&g, &t), &g).unwrap().is_descent);
        prop_assert!(!certify(&candidate_direction(&g, &vec![0.0; g.dim()]), &g).unwrap().is_descent);
    }

    #[test]
    fn certificate_is_scale_invariant(
        g in gradient_box(6),
        d in prop::collection::vec(-5.0..5.0f64, 6),
        lambda in 1e-3..1e3f64,
    ) {
        let d = &d[..g.dim()];
        let scaled: Vec<f64> = d.iter().map(|v| lambda * v).collect();
        prop_assert_eq!(
            certify(d, &g).unwrap().is_descent,
            certify(&scaled, &g).unwrap().is_descent
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn certified_directions_decrease_the_example(
        x1 in -2.0..2.0f64, x2 in -2.0..2.0f64,
        d in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let x = [x1, x2];
        prop_assume!(!near_kink(&x));
        let f = IvFunction::example();
        let g = f.gradient_box(&x, GradientMethod::Analytic).unwrap();
        if certify(&d, &g).unwrap().is_descent {
            let f0 = f.evaluate(&x).unwrap();
            let decreased = [1e-3, 1e-4, 1e-5].iter().any(|a| {
                let y = [x1 + a * d[0], x2 + a * d[1]];
                f.evaluate(&y).unwrap().strictly_precedes(&f0)
            });
            prop_assert!(decreased);
        }
    }

    #[test]
    fn finite_differences_agree_with_analytic(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let x = [x1, x2];
        prop_assume!(!near_kink(&x));
        let f = IvFunction::example();
        let a = f.gradient_box(&x, GradientMethod::Analytic).unwrap();
        let fd = f.gradient_box(&x, GradientMethod::FiniteDiff { step: None }).unwrap();
        let scale = f.evaluate(&x).unwrap().norm() + 1.0;
        for i in 0..2 {
            let h = default_fd_step(x[i]);
            // truncation (zero for quadratics) plus rounding of the stencil
            let tol = 10.0 * h * h + 8.0 * f64::EPSILON * scale / h;
            prop_assert!(a[i].metric(&fd[i]) <= tol, "{} vs {}", a[i], fd[i]);
        }
    }

    #[test]
    fn degenerate_boxes_match_classical_differences(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let f = IvFunction::parse("[1.5,1.5]*x1^2 + [-2,-2]*x1*x2 + [1,1]*sin(x2)", 2).unwrap();
        let x = [x1, x2];
        let g = f.gradient_box(&x, GradientMethod::Analytic).unwrap();
        let fd = f.gradient_box(&x, GradientMethod::FiniteDiff { step: None }).unwrap();
        for i in 0..2 {
            prop_assert!(g[i].is_degenerate());
            prop_assert!((g[i].lo() - fd[i].lo()).abs() < 1e-7);
        }
    }

    #[test]
    fn parser_round_trip(e in iv_expr()) {
        let printed = e.to_string();
        let back = parse(&printed, 3).unwrap();
        prop_assert_eq!(back.to_string(), printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mean_value_inclusion_holds(
        u in prop::collection::vec(-2.0..2.0f64, 2),
        v in prop::collection::vec(-2.0..2.0f64, 2),
    ) {
        prop_assume!(u != v);
        let f = IvFunction::example();
        let r = f.mean_value_check(&u, &v, 1000, GradientMethod::Analytic).unwrap();
        prop_assert!(r.contained, "{:?}", r);
    }

    #[test]
    fn line_search_strictly_decreases(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let x = [x1, x2];
        prop_assume!(!near_kink(&x));
        let f = IvFunction::example();
        let g = f.gradient_box(&x, GradientMethod::Analytic).unwrap();
        let d = candidate_direction(&g, &[0.0, 0.0]);
        prop_assume!(certify(&d, &g).unwrap().is_descent);
        let params = LineSearchParams::default();
        let s = step_length(&f, &x, &d, &params).unwrap();
        let y = [x1 + s.alpha * d[0], x2 + s.alpha * d[1]];
        prop_assert!(f.evaluate(&y).unwrap().strictly_precedes(&f.evaluate(&x).unwrap()));
        prop_assert!(s.alpha <= s.alpha_lower.min(s.alpha_upper));
        for a in [s.alpha_lower, s.alpha_upper] {
            prop_assert!(a == f64::INFINITY || a <= params.alpha_max);
        }

    }

    #[test]
    fn root_and_search_agree_on_convex_rays(
        q in prop::collection::vec(0.5..5.0f64, 4),
        x in prop::collection::vec(-2.0..2.0f64, 2),
    ) {
        // positive-definite diagonal quadratics with an interval shift
        let f = IvFunction::from_bounds(
            2,
            {
                let q = q.clone();
                move |x: &[f64]| q[0] * x[0] * x[0] + q[1] * x[1] * x[1]
            },
            move |x: &[f64]| {
                (q[0] + q[2]) * x[0] * x[0] + (q[1] + q[3]) * x[1] * x[1] + 1.0
            },
        ).unwrap();
        let g = f.gradient_box(&x, GradientMethod::FiniteDiff { step: None }).unwrap();
        let d = candidate_direction(&g, &[0.0, 0.0]);
        prop_assume!(certify(&d, &g).unwrap().is_descent);
        let params = LineSearchParams::default();
        let s = step_length(&f, &x, &d, &params).unwrap();
        let r = convex_step_by_derivative_root(&f, &x, &d, &params).unwrap();
        prop_assert!((s.alpha_lower.min(s.alpha_upper) - r).abs() <= 10.0 * params.tol, "{:?} {}", s, r);

        // shrinking the tolerance barely moves the step
        let finer = LineSearchParams { tol: params.tol / 10.0, ..params };
        let s2 = step_length(&f, &x, &d, &finer).unwrap();
        prop_assert!((s.alpha - s2.alpha).abs() <= 10.0 * params.tol, "{} {}", s.alpha, s2.alpha);
    }

    #[test]
    fn solver_traces_are_monotone_and_certified(
        x1 in -2.0..2.0f64, x2 in -2.0..2.0f64, seed in any::<u64>(), redraw in any::<bool>(),
    ) {
        let f = IvFunction::example();
        let cfg = SolverConfig {
            t_strategy: TStrategy::Random { seed },
            redraw_t: redraw,
            ..SolverConfig::default()
        };
        let tr = solver::run(&f, &[x1, x2], &cfg).unwrap();
        prop_assert!(tr.steps() <= cfg.max_iters);
        for w in tr.records.windows(2) {
            prop_assert!(w[0].alpha.is_some());
            prop_assert!(w[1].value.strictly_precedes(&w[0].value));
            let g = f.gradient_box_or_fd(&w[0].x, GradientMethod::Analytic).unwrap();
            prop_assert!(certify(&w[0].d, &g).unwrap().is_descent);
        }
        if tr.termination == Termination::SmallDirection {
            let g = f.gradient_box_or_fd(&tr.last().x, GradientMethod::Analytic).unwrap();
            prop_assert!(g.iter().all(|c| c.lo() <= DEFAULT_TAU && c.hi() >= -DEFAULT_TAU), "{}", g);
        }
        prop_assert_eq!(&tr, &solver::run(&f, &[x1, x2], &cfg).unwrap());
    }
}

#[test]
fn multi_start_endpoints_are_critical() {
    let f = IvFunction::example();
    let starts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]];
    let cfg = SolverConfig {
        t_strategy: TStrategy::Random { seed: 11 },
        ..SolverConfig::default()
    };
    let traces = multi_start(&f, &starts, &cfg).unwrap();
    let again = multi_start(&f, &starts, &cfg).unwrap();
    assert_eq!(traces, again);
    for (tr, x0) in traces.iter().zip(&starts) {
        let tr = tr.as_ref().unwrap();
        assert_eq!(&tr.records[0].x, x0);
        assert!(
            tr.termination.converged(),
            "{}\n{:?} {:?}",
            tr.to_table(),
            tr.termination,
            tr.message
        );
        assert_eq!(tr.final_critical, Some(true));
        let g = f
            .gradient_box_or_fd(&tr.last().x, GradientMethod::Analytic)
            .unwrap();
        let widened = IntervalBox::new(g.iter().map(|c| c.inflate(cfg.stall_tolerance)).collect());
        assert!(criticality_oracle(&widened).unwrap().critical, "{g}");
    }
}
