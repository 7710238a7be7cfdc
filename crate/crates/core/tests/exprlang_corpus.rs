use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use wronski::exprlang::{parse, parse_expr, Expr, Func};

type Derivs = fn(f64) -> [f64; 4];

/// Expressions with their first four derivatives worked out by hand.
fn corpus() -> Vec<(&'static str, Derivs)> {
    vec![
        ("exp(2*t)", |t| {
            let e = (2.0 * t).exp();
            [e, 2.0 * e, 4.0 * e, 8.0 * e]
        }),
        ("t^2 - 3*t + 1", |t| {
            [t * t - 3.0 * t + 1.0, 2.0 * t - 3.0, 2.0, 0.0]
        }),
        ("sin(t)", |t| [t.sin(), t.cos(), -t.sin(), -t.cos()]),
        ("cos(3*t)", |t| {
            let (s, c) = (3.0 * t).sin_cos();
            [c, -3.0 * s, -9.0 * c, 27.0 * s]
        }),
        ("t*exp(t)", |t| {
            let e = t.exp();
            [t * e, (t + 1.0) * e, (t + 2.0) * e, (t + 3.0) * e]
        }),
        ("log(t)", |t| {
            [t.ln(), 1.0 / t, -1.0 / (t * t), 2.0 / t.powi(3)]
        }),
        ("1/t", |t| {
            [1.0 / t, -1.0 / (t * t), 2.0 / t.powi(3), -6.0 / t.powi(4)]
        }),
        ("exp(0.5*log(t))", |t| {
            let s = t.sqrt();
            [s, 0.5 / s, -0.25 / (s * t), 0.375 / (s * t * t)]
        }),
        ("t^-2", |t| {
            [
                t.powi(-2),
                -2.0 * t.powi(-3),
                6.0 * t.powi(-4),
                -24.0 * t.powi(-5),
            ]
        }),
        ("sin(t)*cos(t)", |t| {
            let (s, c) = (2.0 * t).sin_cos();
            [0.5 * s, c, -2.0 * s, -4.0 * c]
        }),
        ("exp(sin(t))", |t| {
            let (s, c) = t.sin_cos();
            let e = s.exp();
            [e, c * e, (c * c - s) * e, (c * c * c - 3.0 * s * c - c) * e]
        }),
        ("(t + 1)^3 / 2", |t| {
            let u = t + 1.0;
            [u.powi(3) / 2.0, 1.5 * u * u, 3.0 * u, 3.0]
        }),
    ]
}

#[test]
fn derivatives_match_closed_forms() {
    let mut rng = StdRng::seed_from_u64(7);
    for (src, derivs) in corpus() {
        let spec = parse(src).unwrap();
        for _ in 0..20 {
            let t: f64 = rng.random_range(0.2..3.0);
            let jet = spec.eval_jet(t, 3).unwrap();
            let want = derivs(t);
            for (d, w) in want.iter().enumerate() {
                let got = jet.derivative(d);
                let rel = (got - w).abs() / w.abs().max(1e-300);
                assert!(
                    rel <= 1e-9 || (got - w).abs() <= 1e-12,
                    "{src} at {t}: derivative {d} is {got}, expected {w}"
                );
            }
        }
    }
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::Var),
        (0.0f64..100.0).prop_map(Expr::Num),
        (0u32..20).prop_map(|i| Expr::Num(i as f64)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), -4i32..5).prop_map(|(a, e)| Expr::Pow(Box::new(a), e)),
            (
                inner,
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Log)
                ]
            )
                .prop_map(|(a, f)| Expr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_trees_reparse_identically(e in expr()) {
        let printed = e.to_string();
        let back = parse_expr(&printed);
        prop_assert_eq!(back.as_ref(), Ok(&e), "printed as {}", printed);
    }

    #[test]
    fn parser_never_panics(s in "[t0-9.+*/^()e -]{0,24}|[a-z()t^0-9 ]{0,16}") {
        let _ = parse_expr(&s);
    }
}
