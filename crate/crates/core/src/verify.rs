//! Sampled identity checks and the range-equivalence decision.
//!
//! Every verifier evaluates an identity at a list of sample points and
//! returns a [`VerificationReport`] with one [`Residual`] per case and
//! point. Relative residuals are `|value - reference| / (1 + |reference|)`
//! where the reference is the side computed straight from the definition.
//! Points where a function is undefined or the Wronskian vanishes are
//! skipped and listed with the reason; any other error aborts the check.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::VectorFunctionSpec;
use crate::jets::MatrixOfJets;
use crate::ncbell::{bell_eval_jets, bell_table};
use crate::par;
use crate::wronskian::{
    basis_column, check_budget, sign, wronskian_jet, BellFormula, CoefficientSource,
    CoefficientVector, Frame, FrameSample, MultiIndex, Reconstructed, DEGENERACY_REL,
};

/// Default relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default absolute floor used when comparing `Phi` values near zero.
pub const DEFAULT_ABS_FLOOR: f64 = 1e-10;
/// Largest accepted condition estimate of the point-value matrix.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub t: f64,
    pub case: String,
    pub abs: f64,
    pub rel: f64,
}

impl Residual {
    pub fn scalar(t: f64, case: impl Into<String>, value: f64, reference: f64) -> Self {
        let abs = (value - reference).abs();
        Self {
            t,
            case: case.into(),
            abs,
            rel: abs / (1.0 + reference.abs()),
        }
    }

    /// Worst entry of `value - reference`, each entry scaled by its own
    /// reference magnitude.
    pub fn entrywise(t: f64, case: impl Into<String>, value: &[f64], reference: &[f64]) -> Self {
        let (mut abs, mut rel) = (0.0f64, 0.0f64);
        for (v, r) in value.iter().zip(reference) {
            let d = (v - r).abs();
            abs = abs.max(d);
            rel = rel.max(d / (1.0 + r.abs()));
        }
        Self {
            t,
            case: case.into(),
            abs,
            rel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: String,
    pub tolerance: f64,
    pub points: Vec<f64>,
    pub evaluated_points: usize,
    pub residuals: Vec<Residual>,
    pub skipped: Vec<SkippedPoint>,
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst: Option<Residual>,
    pub passed: bool,
}

impl VerificationReport {
    fn assemble(
        identity: &str,
        tolerance: f64,
        points: &[f64],
        outcomes: Vec<Result<Vec<Residual>>>,
    ) -> Result<Self> {
        let mut residuals = Vec::new();
        let mut skipped = Vec::new();
        let mut evaluated = 0;
        for (&t, outcome) in points.iter().zip(outcomes) {
            match outcome {
                Ok(rs) => {
                    evaluated += 1;
                    residuals.extend(rs);
                }
                Err(e) if is_pointwise(&e) => skipped.push(SkippedPoint {
                    t,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        let max_abs = residuals.iter().map(|r| r.abs).fold(0.0, f64::max);
        let worst = residuals
            .iter()
            .max_by(|a, b| a.rel.total_cmp(&b.rel))
            .cloned();
        let max_rel = worst.as_ref().map_or(0.0, |w| w.rel);
        let passed = evaluated > 0 && max_rel <= tolerance && max_rel.is_finite();
        Ok(Self {
            identity: identity.to_string(),
            tolerance,
            points: points.to_vec(),
            evaluated_points: evaluated,
            residuals,
            skipped,
            max_abs,
            max_rel,
            worst,
            passed,
        })
    }
}

/// Errors that only disqualify a single sample point.
fn is_pointwise(e: &Error) -> bool {
    matches!(
        e,
        Error::DomainViolation(_) | Error::VanishingWronskian { .. }
    )
}

fn run<F>(identity: &str, tol: f64, points: &[f64], eval: F) -> Result<VerificationReport>
where
    F: Fn(f64) -> Result<Vec<Residual>> + Sync + Send,
{
    let outcomes = par::map(points, |&t| eval(t));
    VerificationReport::assemble(identity, tol, points, outcomes)
}

/// Reads an `n*n`-component vector function as a row-major matrix function.
fn matrix_dim(x: &VectorFunctionSpec) -> Result<usize> {
    let len = x.dim();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: len,
        });
    }
    Ok(n)
}

/// Checks `B_{j+1}(X, ..., X^(j)) = X B_j(X, ..., X^(j-1)) + (B_j(X, ..., X^(j-1)))'`
/// for `j = 0..=j_max`, where `x` lists the entries of `X` row by row.
pub fn verify_bell_recursion(
    x: &VectorFunctionSpec,
    j_max: usize,
    points: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let n = matrix_dim(x)?;
    let table = bell_table();
    table.get(j_max + 1)?;
    run("bell-derivative-recursion", tol, points, |t| {
        let order = j_max + 1;
        let xm = MatrixOfJets::new(n, n, x.jets(t, order)?)?;
        let x0 = xm.truncate(0);
        (0..=j_max)
            .map(|j| {
                let lhs = bell_eval_jets(table.get(j + 1)?, &xm, 0)?;
                let bj = bell_eval_jets(table.get(j)?, &xm, 1)?;
                let rhs = x0.try_mul(&bj.truncate(0))?.try_add(&bj.differentiate()?)?;
                Ok(Residual::entrywise(
                    t,
                    format!("j={j}"),
                    &rhs.values(),
                    &lhs.values(),
                ))
            })
            .collect()
    })
}

/// Checks `Y_f^(j) = Y_f B_j(X_a, ..., X_a^(j-1))` entrywise for `j = 0..=j_max`.
pub fn verify_frame_derivatives(
    f: &Frame,
    a: &dyn CoefficientSource,
    j_max: usize,
    points: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let n = f.n();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    bell_table().get(j_max)?;
    run("frame-derivatives", tol, points, |t| {
        let sample = f.sample(t, n - 1 + j_max)?;
        let y = sample.frame()?;
        let bell = BellFormula::at(f, a, t, j_max)?;
        (0..=j_max)
            .map(|j| {
                let shifted: Vec<usize> = (0..n).rev().map(|i| i + j).collect();
                let lhs = sample.columns(&shifted)?;
                let rhs = &y * bell.bell_matrix(j);
                Ok(Residual::entrywise(
                    t,
                    format!("j={j}"),
                    rhs.transpose().as_slice(),
                    lhs.transpose().as_slice(),
                ))
            })
            .collect()
    })
}

/// Compares [`crate::wronskian::wronskian_direct`] with the Bell-polynomial
/// route for every multi-index in `ks`. With `a = None` the coefficients
/// are reconstructed from `f` itself.
pub fn verify_bell_wronskian(
    f: &Frame,
    a: Option<&CoefficientVector>,
    ks: &[MultiIndex],
    points: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let n = f.n();
    let reconstructed = Reconstructed(f);
    let source: &dyn CoefficientSource = match a {
        Some(a) => a,
        None => &reconstructed,
    };
    for k in ks {
        check_budget(k, n, source)?;
    }
    let max_k = ks.iter().map(MultiIndex::max).max().unwrap_or(0);
    let max_ell = ks.iter().flat_map(|k| k.ells()).max().unwrap_or(0);
    let identity = if a.is_some() {
        "bell-wronskian"
    } else {
        "bell-wronskian-reconstructed"
    };
    run(identity, tol, points, |t| {
        let sample = f.sample(t, max_k.max(n - 1))?;
        let bell = BellFormula::at(f, source, t, max_ell)?;
        ks.iter()
            .map(|k| {
                let direct = sample.generalized_wronskian(k)?;
                let via = bell.generalized_wronskian(k)?;
                Ok(Residual::scalar(t, format!("k={k}"), via, direct))
            })
            .collect()
    })
}

/// Right-hand side factor of `W_f^(n+d, n-1, .., j+1, j-1, .., 0) = (-1)^(n-j-1) W_f * c`,
/// i.e. `c = <B_{d+1}(X_a, ..., X_a^(d)) e_1, e_{n-j}>`. For `d <= 2` the
/// expanded polynomial in the coefficients and their derivatives is used;
/// larger `d` read the entry off the evaluated Bell matrix.
fn replaced_column_factor(a: &[Vec<f64>], x: &MatrixOfJets, d: usize, j: usize) -> Result<f64> {
    let n = a.len();
    let p = n - j;
    // a_i^(r), zero for i > n
    let c = |i: usize, r: usize| if i <= n { a[i - 1][r] } else { 0.0 };
    Ok(match d {
        0 => c(p, 0),
        1 => c(1, 0) * c(p, 0) + c(p + 1, 0) + c(p, 1),
        2 => {
            c(1, 0) * c(1, 0) * c(p, 0)
                + c(1, 0) * c(p + 1, 0)
                + c(2, 0) * c(p, 0)
                + c(p + 2, 0)
                + c(1, 0) * c(p, 1)
                + 2.0 * c(1, 1) * c(p, 0)
                + 2.0 * c(p + 1, 1)
                + c(p, 2)
        }
        _ => {
            let b = bell_eval_jets(bell_table().get(d + 1)?, x, 0)?;
            b.get(basis_column(p), basis_column(1)).value()
        }
    })
}

/// Checks the replaced-first-column Wronskians
/// `W_f^(n+d, n-1, .., j+1, j-1, .., 0) = (-1)^(n-j-1) W_f <B_{d+1} e_1, e_{n-j}>`
/// for every `j`, with the closed forms in `a, a', a''` for `d <= 2`.
pub fn verify_replaced_column(
    f: &Frame,
    a: &CoefficientVector,
    d: usize,
    points: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let n = f.n();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    for j in 0..n {
        check_budget(&MultiIndex::replacing(n, d, j), n, a)?;
    }
    run(&format!("replaced-column-d{d}"), tol, points, |t| {
        let sample = f.sample(t, n + d)?;
        let w = sample.wronskian()?;
        let order = d.max(2);
        let jets = a.coefficient_jets(t, order)?;
        let derivs: Vec<Vec<f64>> = jets.iter().map(|j| j.derivatives()).collect();
        let x = if d > 2 {
            crate::wronskian::companion_matrix(a, t, d)?
        } else {
            MatrixOfJets::identity(1, t, 0)
        };
        (0..n)
            .map(|j| {
                let k = MultiIndex::replacing(n, d, j);
                let direct = sample.generalized_wronskian(&k)?;
                let closed = sign(n - j - 1) * w * replaced_column_factor(&derivs, &x, d, j)?;
                Ok(Residual::scalar(t, format!("j={j}"), closed, direct))
            })
            .collect()
    })
}

/// Checks `W_f' = a_1 W_f`, differentiating the Wronskian as a jet.
pub fn verify_abel_liouville(
    f: &Frame,
    a: &dyn CoefficientSource,
    points: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    if a.dim() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: a.dim(),
        });
    }
    run("abel-liouville", tol, points, |t| {
        let w = wronskian_jet(f, t, 1)?;
        let a1 = a.coefficient_jets(t, 0)?[0].value();
        Ok(vec![Residual::scalar(
            t,
            "W'=a1*W",
            a1 * w.value(),
            w.derivative(1),
        )])
    })
}

/// Checks that every component of `f` solves
/// `y^(n) = sum_j Phi_f^[j] y^(j)` with the `Phi` reconstructed from `f`.
pub fn verify_reconstructed_ode(f: &Frame, points: &[f64], tol: f64) -> Result<VerificationReport> {
    let n = f.n();
    run("reconstructed-ode", tol, points, |t| {
        let sample = f.sample(t, n)?;
        let phis = sample.phis()?;
        (0..n)
            .map(|i| {
                let lhs = sample.derivative(n)[i];
                let rhs: f64 = (0..n).map(|j| phis[j] * sample.derivative(j)[i]).sum();
                Ok(Residual::scalar(t, format!("f{}", i + 1), rhs, lhs))
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceOptions {
    pub tol: f64,
    pub abs_floor: f64,
    pub max_condition: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            abs_floor: DEFAULT_ABS_FLOOR,
            max_condition: MAX_CONDITION,
        }
    }
}

/// First point and index where `Phi_f^[j]` and `Phi_g^[j]` disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiWitness {
    pub j: usize,
    pub t: f64,
    pub phi_f: f64,
    pub phi_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceResult {
    pub equivalent: bool,
    /// Row-major `A` with `f = A g`, present when equivalent.
    pub matrix: Option<Vec<f64>>,
    pub max_phi_mismatch: f64,
    pub max_validation_residual: Option<f64>,
    pub witness: Option<PhiWitness>,
    pub usable_points: Vec<f64>,
    pub solve_points: Vec<f64>,
    pub skipped: Vec<SkippedPoint>,
}

struct PairSample {
    t: f64,
    f: FrameSample,
    g: FrameSample,
    phi_f: Vec<f64>,
    phi_g: Vec<f64>,
}

/// Smallest singular value of the columns `g(t)` for the chosen points.
fn min_singular(cols: &[&[f64]]) -> f64 {
    let n = cols[0].len();
    let m = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]);
    m.singular_values().min()
}

/// Decides whether `f = A g` for a constant nonsingular `A`.
///
/// Stage 1 compares `Phi_f^[j]` and `Phi_g^[j]` at every usable point; a
/// mismatch returns a non-equivalent result with a witness. Stage 2 solves
/// `f(t_i) = A g(t_i)` on `n` points picked greedily for conditioning.
/// Stage 3 validates `Y_f = A Y_g` (derivative orders `0..n`) at every
/// usable point.
pub fn range_equivalent(
    f: &Frame,
    g: &Frame,
    points: &[f64],
    opts: &EquivalenceOptions,
) -> Result<EquivalenceResult> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.n(),
        });
    }
    let outcomes = par::map(points, |&t| -> Result<PairSample> {
        let fs = f.sample(t, n)?;
        let gs = g.sample(t, n)?;
        let phi_f = fs.phis()?;
        let phi_g = gs.phis()?;
        Ok(PairSample {
            t,
            f: fs,
            g: gs,
            phi_f,
            phi_g,
        })
    });
    let mut usable = Vec::new();
    let mut skipped = Vec::new();
    for (&t, o) in points.iter().zip(outcomes) {
        match o {
            Ok(s) => usable.push(s),
            Err(e) if is_pointwise(&e) => skipped.push(SkippedPoint {
                t,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if usable.is_empty() {
        return Err(Error::NoUsablePoints {
            skipped: skipped.len(),
        });
    }
    let usable_points: Vec<f64> = usable.iter().map(|s| s.t).collect();

    // Stage 1. Indices run j = n-1 down to 0, i.e. in the order a_1, ..., a_n.
    let mut max_mismatch = 0.0f64;
    let mut witness = None;
    for s in &usable {
        for j in (0..n).rev() {
            let (pf, pg) = (s.phi_f[j], s.phi_g[j]);
            let scale = pf.abs().max(pg.abs()).max(opts.abs_floor / opts.tol);
            let mismatch = (pf - pg).abs() / scale;
            max_mismatch = max_mismatch.max(mismatch);
            if mismatch > opts.tol && witness.is_none() {
                witness = Some(PhiWitness {
                    j,
                    t: s.t,
                    phi_f: pf,
                    phi_g: pg,
                });
            }
        }
    }
    if witness.is_some() {
        return Ok(EquivalenceResult {
            equivalent: false,
            matrix: None,
            max_phi_mismatch: max_mismatch,
            max_validation_residual: None,
            witness,
            usable_points,
            solve_points: Vec::new(),
            skipped,
        });
    }

    // Stage 2.
    if usable.len() < n {
        return Err(Error::IllConditionedSample {
            condition: f64::INFINITY,
        });
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    while chosen.len() < n {
        let best = (0..usable.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| {
                let cols: Vec<&[f64]> = chosen
                    .iter()
                    .chain(std::iter::once(&i))
                    .map(|&c| usable[c].g.derivative(0))
                    .collect();
                (i, min_singular(&cols))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("enough candidates");
        chosen.push(best.0);
    }
    let gmat = DMatrix::from_fn(n, n, |r, c| usable[chosen[c]].g.derivative(0)[r]);
    let fmat = DMatrix::from_fn(n, n, |r, c| usable[chosen[c]].f.derivative(0)[r]);
    let sv = gmat.singular_values();
    let condition = sv.max() / sv.min();
    if condition.is_nan() || condition > opts.max_condition {
        return Err(Error::IllConditionedSample { condition });
    }
    // A G = F  <=>  G^T A^T = F^T
    let at = gmat
        .transpose()
        .lu()
        .solve(&fmat.transpose())
        .ok_or(Error::IllConditionedSample {
            condition: f64::INFINITY,
        })?;
    let a = at.transpose();

    // Stage 3.
    let mut max_residual = 0.0f64;
    for s in &usable {
        let yf = s.f.frame()?;
        let ayg = &a * s.g.frame()?;
        let scale = 1.0 + yf.amax();
        max_residual = max_residual.max((&yf - &ayg).amax() / scale);
    }
    let det = a.determinant();
    let nonsingular = det.abs() > DEGENERACY_REL * (1.0 + a.amax()).powi(n as i32);
    if max_residual.is_nan() || max_residual > opts.tol || !nonsingular {
        return Err(Error::ValidationFailure {
            residual: max_residual,
            tolerance: opts.tol,
        });
    }
    Ok(EquivalenceResult {
        equivalent: true,
        matrix: Some(a.transpose().as_slice().to_vec()),
        max_phi_mismatch: max_mismatch,
        max_validation_residual: Some(max_residual),
        witness: None,
        usable_points,
        solve_points: chosen.iter().map(|&i| usable[i].t).collect(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Interval;

    fn exp12() -> Frame {
        Frame::parse(&["exp(t)", "exp(2*t)"], Interval::REAL_LINE).unwrap()
    }

    #[test]
    fn bell_recursion_constant_matrix_and_scalar_t() {
        let x = VectorFunctionSpec::parse(&["1", "2", "-0.5", "3"], Interval::REAL_LINE).unwrap();
        let r = verify_bell_recursion(&x, 4, &[0.0, 1.0], 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        let x = VectorFunctionSpec::parse(&["t"], Interval::REAL_LINE).unwrap();
        let r = verify_bell_recursion(&x, 1, &[0.0, 0.5], 1e-14).unwrap();
        assert!(r.passed);
        let bad = VectorFunctionSpec::parse(&["t", "t"], Interval::REAL_LINE).unwrap();
        assert!(matches!(
            verify_bell_recursion(&bad, 1, &[0.0], 1e-8),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn standard_index_gives_zero_residual() {
        let a = CoefficientVector::parse(&["3", "-2"], Interval::REAL_LINE).unwrap();
        let r = verify_bell_wronskian(
            &exp12(),
            Some(&a),
            &[MultiIndex::standard(2)],
            &[0.1, 0.9],
            0.0,
        )
        .unwrap();
        assert!(r.passed);
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn wrong_coefficients_fail() {
        let a = CoefficientVector::parse(&["3", "-1"], Interval::REAL_LINE).unwrap();
        let r = verify_bell_wronskian(
            &exp12(),
            Some(&a),
            &[MultiIndex::new(vec![2, 1])],
            &[0.0],
            1e-8,
        )
        .unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst.unwrap().case, "k=(2,1)");
    }

    #[test]
    fn replaced_column_d1_example() {
        // W^(3,0) = -7 e^{3t} for f = (e^t, e^{2t})
        let a = CoefficientVector::parse(&["3", "-2"], Interval::REAL_LINE).unwrap();
        let r = verify_replaced_column(&exp12(), &a, 1, &[0.0, 0.5], 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        let w = crate::wronskian::wronskian_direct(&exp12(), &MultiIndex::new(vec![3, 0]), 0.5)
            .unwrap();
        assert!((w + 7.0 * 1.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn replaced_column_beyond_closed_forms() {
        let ce = Frame::parse(&["t", "t^2"], Interval::new(0.0, f64::INFINITY).unwrap()).unwrap();
        let a = CoefficientVector::parse(&["2/t", "-2/t^2"], ce.domain()).unwrap();
        for d in 0..5 {
            let r = verify_replaced_column(&ce, &a, d, &[0.5, 1.0, 2.5], 1e-8).unwrap();
            assert!(r.passed, "d={d}: {r:?}");
        }
    }

    #[test]
    fn skipped_points_are_reported() {
        let ce = Frame::parse(&["t", "t^2"], Interval::REAL_LINE).unwrap();
        let r = verify_reconstructed_ode(&ce, &[0.0, 1.0], 1e-8).unwrap();
        assert_eq!(r.evaluated_points, 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].t, 0.0);
        assert!(r.passed);

        let none = verify_reconstructed_ode(&ce, &[0.0], 1e-8).unwrap();
        assert!(!none.passed);
    }

    #[test]
    fn equivalence_examples() {
        let pts = Interval::REAL_LINE.sample_grid(11);
        let f = exp12();
        let same = range_equivalent(&f, &f, &pts, &EquivalenceOptions::default()).unwrap();
        assert!(same.equivalent);
        let a = same.matrix.unwrap();
        for (x, y) in a.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((x - y).abs() < 1e-10);
        }

        let g = Frame::parse(&["exp(t)", "exp(3*t)"], Interval::REAL_LINE).unwrap();
        let r = range_equivalent(&f, &g, &pts, &EquivalenceOptions::default()).unwrap();
        assert!(!r.equivalent);
        let w = r.witness.unwrap();
        assert_eq!(w.j, 1);
        assert!((w.phi_f - 3.0).abs() < 1e-10 && (w.phi_g - 4.0).abs() < 1e-10);
    }

    #[test]
    fn mismatched_dimensions() {
        let g = Frame::parse(&["exp(t)"], Interval::REAL_LINE).unwrap();
        assert!(matches!(
            range_equivalent(&exp12(), &g, &[0.0], &EquivalenceOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
