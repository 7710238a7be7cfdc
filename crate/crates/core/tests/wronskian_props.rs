use nalgebra::DMatrix;
use proptest::prelude::*;
use wronski::exprlang::Interval;
use wronski::verify::{range_equivalent, verify_abel_liouville, EquivalenceOptions};
use wronski::wronskian::{
    basis_column, phi, reconstruct_coefficients, wronskian_direct, wronskian_via_bell, BellFormula,
    CoefficientVector, Frame, MultiIndex,
};

struct Fixture {
    f: Frame,
    a: CoefficientVector,
}

fn fixture(f: &[&str], a: &[&str], lo: f64, hi: f64) -> Fixture {
    let domain = Interval::new(lo, hi).unwrap();
    Fixture {
        f: Frame::parse(f, domain).unwrap(),
        a: CoefficientVector::parse(a, domain).unwrap(),
    }
}

fn fixtures() -> Vec<Fixture> {
    vec![
        fixture(&["exp(t)", "exp(2*t)"], &["3", "-2"], -1.0, 1.0),
        fixture(&["1", "exp(t)", "exp(-t)"], &["0", "1", "0"], -1.0, 1.0),
        fixture(&["t", "t^2"], &["2/t", "-2/t^2"], 0.5, 3.0),
        fixture(
            &["exp(t)", "exp(-t)", "exp(2*t)", "exp(-2*t)"],
            &["0", "5", "0", "-4"],
            -1.0,
            1.0,
        ),
    ]
}

fn close(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * (1.0 + reference.abs())
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn random_unimodular_ish(n: usize, entries: &[i32]) -> Option<Vec<f64>> {
    let a: Vec<f64> = entries[..n * n].iter().map(|&e| e as f64).collect();
    let det = DMatrix::from_row_slice(n, n, &a).determinant();
    (det.abs() >= 1.0).then_some(a)
}

fn point_in(fx: &Fixture, u: f64) -> f64 {
    let (lo, hi) = fx.f.domain().sampling_window();
    lo + u * (hi - lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bell_route_matches_direct(which in 0usize..4, u in 0.0f64..1.0, raw in prop::collection::vec(0usize..8, 4)) {
        let fx = &fixtures()[which];
        let n = fx.f.n();
        let mut k: Vec<usize> = raw[..n].iter().map(|v| v % (n + 4)).collect();
        k.dedup();
        let k = MultiIndex::new(k);
        prop_assume!(k.len() == n);
        let t = point_in(fx, u);
        let direct = wronskian_direct(&fx.f, &k, t).unwrap();
        let via = wronskian_via_bell(&fx.f, &fx.a, &k, t).unwrap();
        prop_assert!(close(via, direct, 1e-8), "k={k} t={t}: {via} vs {direct}");
    }

    #[test]
    fn permuting_k_multiplies_by_sign(which in 0usize..4, u in 0.0f64..1.0, perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let fx = &fixtures()[which];
        let n = fx.f.n();
        let base: Vec<usize> = (0..n).map(|i| 2 * i + 1).collect();
        let order: Vec<usize> = perm.iter().copied().filter(|&p| p < n).collect();
        let permuted: Vec<usize> = order.iter().map(|&p| base[p]).collect();
        let t = point_in(fx, u);
        let w0 = wronskian_direct(&fx.f, &MultiIndex::new(base.clone()), t).unwrap();
        let w1 = wronskian_direct(&fx.f, &MultiIndex::new(permuted), t).unwrap();
        prop_assert!(close(w1, permutation_sign(&order) * w0, 1e-12));
        if n > 1 {
            let mut repeated = base.clone();
            repeated[1] = repeated[0];
            prop_assert_eq!(wronskian_direct(&fx.f, &MultiIndex::new(repeated), t).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_transform_scales_wronskians_and_keeps_phi(which in 0usize..4, u in 0.0f64..1.0, entries in prop::collection::vec(-3i32..=3, 16)) {
        let fx = &fixtures()[which];
        let n = fx.f.n();
        let a = random_unimodular_ish(n, &entries);
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let det = DMatrix::from_row_slice(n, n, &a).determinant();
        let af = fx.f.transformed(&a).unwrap();
        let t = point_in(fx, u);
        for k in [MultiIndex::standard(n), MultiIndex::replacing(n, 1, 0)] {
            let w = wronskian_direct(&fx.f, &k, t).unwrap();
            let wa = wronskian_direct(&af, &k, t).unwrap();
            prop_assert!((wa - det * w).abs() <= 1e-9 * (1.0 + (det * w).abs()));
        }
        for j in 0..n {
            let p = phi(&fx.f, j, t).unwrap();
            let pa = phi(&af, j, t).unwrap();
            prop_assert!((p - pa).abs() <= 1e-9 * (1.0 + p.abs()), "j={j}: {p} vs {pa}");
        }
    }
}

// f^(k) = Y_f B_i e_{n+i-k} for every admissible i, not only the smallest.
#[test]
fn frame_columns_agree_for_every_admissible_shift() {
    let m = 6;
    for fx in fixtures() {
        let n = fx.f.n();
        for t in fx.f.sample_points(None, 5) {
            let sample = fx.f.sample(t, m + n).unwrap();
            let y = sample.frame().unwrap();
            let bell = BellFormula::at(&fx.f, &fx.a, t, m).unwrap();
            for k in 0..=m + n - 1 {
                let lo = (k + 1).saturating_sub(n);
                for i in lo..=k.min(m) {
                    let col = (&y * bell.bell_matrix(i))
                        .column(basis_column(n + i - k))
                        .into_owned();
                    let expected = sample.derivative(k);
                    for r in 0..n {
                        assert!(
                            close(col[r], expected[r], 1e-8),
                            "k={k} i={i} t={t}: {} vs {}",
                            col[r],
                            expected[r]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn abel_liouville_holds_on_fixtures() {
    for fx in fixtures() {
        let points = fx.f.sample_points(None, 11);
        let report = verify_abel_liouville(&fx.f, &fx.a, &points, 1e-8).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.evaluated_points, 11);
    }
}

#[test]
fn reconstruction_recovers_fixture_coefficients() {
    for fx in fixtures() {
        for t in fx.f.sample_points(None, 7) {
            let got = reconstruct_coefficients(&fx.f, t).unwrap();
            let want: Vec<f64> =
                fx.a.spec()
                    .jets(t, 0)
                    .unwrap()
                    .iter()
                    .map(|j| j.value())
                    .collect();
            for (g, w) in got.iter().zip(&want) {
                assert!(close(*g, *w, 1e-8), "t={t}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn scalar_frame_has_logarithmic_derivative_as_coefficient() {
    let f = Frame::parse(&["exp(t^2) + 2"], Interval::REAL_LINE).unwrap();
    for t in [-0.7f64, 0.0, 0.3, 0.9] {
        let e = (t * t).exp();
        let expected = 2.0 * t * e / (e + 2.0);
        assert!(close(phi(&f, 0, t).unwrap(), expected, 1e-12));
        assert!(close(
            reconstruct_coefficients(&f, t).unwrap()[0],
            expected,
            1e-12
        ));
    }
}

#[test]
fn equivalence_is_reflexive_and_symmetric() {
    let opts = EquivalenceOptions::default();
    for fx in fixtures() {
        let n = fx.f.n();
        let points = fx.f.sample_points(None, 11);
        let same = range_equivalent(&fx.f, &fx.f, &points, &opts).unwrap();
        assert!(same.equivalent);
        let id = DMatrix::<f64>::identity(n, n);
        let got = DMatrix::from_row_slice(n, n, same.matrix.as_ref().unwrap());
        assert!((got - &id).amax() <= 1e-8);

        let a: Vec<f64> = (0..n * n)
            .map(|i| {
                if i % (n + 1) == 0 {
                    2.0
                } else if i % 3 == 1 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let af = fx.f.transformed(&a).unwrap();
        let forward = range_equivalent(&af, &fx.f, &points, &opts).unwrap();
        let backward = range_equivalent(&fx.f, &af, &points, &opts).unwrap();
        assert!(forward.equivalent && backward.equivalent);
        let fa = DMatrix::from_row_slice(n, n, forward.matrix.as_ref().unwrap());
        let ba = DMatrix::from_row_slice(n, n, backward.matrix.as_ref().unwrap());
        let inv = fa.clone().try_inverse().unwrap();
        assert!((ba - inv).amax() <= 1e-8);
        assert!((fa - DMatrix::from_row_slice(n, n, &a)).amax() <= 1e-8);
    }
}
