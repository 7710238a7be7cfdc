//! Frames, companion matrices and generalized Wronskians.
//!
//! For `f: I -> R^n` the frame is `Y_f = (f^(n-1) ... f' f)` and the
//! generalized Wronskian for a multi-index `k` is `W_f^k = |f^(k_1) ... f^(k_n)|`.
//! When `f` is a fundamental system of `y^(n) = a_1 y^(n-1) + ... + a_n y`,
//! `W_f^k` can also be computed as `W_f` times the determinant whose `i`-th
//! column is `B_{l_i}(X_a, ..., X_a^(l_i - 1)) e_{n + l_i - k_i}` with
//! `l_i = (k_i - n + 1)^+` and `X_a = (a e_1 ... e_{n-1})`. Both routes are
//! implemented here ([`wronskian_direct`] and [`wronskian_via_bell`]) so
//! they can be checked against each other.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exprlang::{Interval, VectorFunctionSpec};
use crate::jets::{det_jets, Jet, MatrixOfJets};
use crate::ncbell::{bell_eval_jets, bell_table};

/// Relative factor in the vanishing-Wronskian test.
pub const DEGENERACY_REL: f64 = 1e-9;

/// Number of automatic sample points.
pub const DEFAULT_SAMPLE_COUNT: usize = 11;

/// Column of `e_i` (1-based basis vector) in 0-based storage.
///
/// This is the only place where the 1-based basis numbering meets array
/// indexing.
#[inline]
pub fn basis_column(i: usize) -> usize {
    debug_assert!(i >= 1, "basis vectors are numbered from 1");
    i - 1
}

/// Multi-index `k = (k_1, ..., k_n)` of derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(k: Vec<usize>) -> Self {
        Self(k)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `l_i = (k_i - n + 1)^+` with `n = len()`.
    pub fn ells(&self) -> Vec<usize> {
        let n = self.0.len();
        self.0.iter().map(|&k| (k + 1).saturating_sub(n)).collect()
    }

    /// `(n-1, n-2, ..., 0)`, the index of the ordinary Wronskian.
    pub fn standard(n: usize) -> Self {
        Self((0..n).rev().collect())
    }

    /// `(n + d, n-1, ..., j+1, j-1, ..., 0)`.
    pub fn replacing(n: usize, d: usize, j: usize) -> Self {
        assert!(j < n);
        let mut k = vec![n + d];
        k.extend((0..n).rev().filter(|&i| i != j));
        Self(k)
    }

    /// `(n, n-1, ..., j+1, j-1, ..., 0)`, the numerator index of `Phi^[j]`.
    pub fn phi_index(n: usize, j: usize) -> Self {
        Self::replacing(n, 0, j)
    }

    /// Every ordered `n`-tuple of pairwise distinct entries from `0..=max`.
    pub fn all_distinct(n: usize, max: usize) -> Vec<Self> {
        fn rec(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() == n {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in 0..=max {
                if !cur.contains(&v) {
                    cur.push(v);
                    rec(n, max, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(n, max, &mut Vec::with_capacity(n), &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// `f: I -> R^n`, the function whose frame `Y_f` is studied.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    spec: VectorFunctionSpec,
}

impl Frame {
    pub fn new(spec: VectorFunctionSpec) -> Self {
        Self { spec }
    }

    pub fn parse<S: AsRef<str>>(sources: &[S], domain: Interval) -> Result<Self> {
        Ok(Self::new(VectorFunctionSpec::parse(sources, domain)?))
    }

    pub fn n(&self) -> usize {
        self.spec.dim()
    }

    pub fn spec(&self) -> &VectorFunctionSpec {
        &self.spec
    }

    pub fn domain(&self) -> Interval {
        self.spec.domain()
    }

    /// `A f` for a constant row-major `n x n` matrix.
    pub fn transformed(&self, a: &[f64]) -> Result<Self> {
        Ok(Self::new(self.spec.transformed(a, self.n())?))
    }

    /// Derivatives `f^(i)(t0)` for `i = 0..=order`.
    pub fn sample(&self, t0: f64, order: usize) -> Result<FrameSample> {
        let jets = self.spec.jets(t0, order)?;
        let derivs = (0..=order)
            .map(|i| jets.iter().map(|j| j.derivative(i)).collect())
            .collect();
        Ok(FrameSample {
            t0,
            n: self.n(),
            derivs,
        })
    }

    /// `count` points of the domain's automatic grid, or the given points.
    pub fn sample_points(&self, points: Option<&[f64]>, count: usize) -> Vec<f64> {
        match points {
            Some(p) => p.to_vec(),
            None => self.domain().sample_grid(count),
        }
    }
}

/// Raw derivatives of a frame at one point: `derivs[i][r] = f_r^(i)(t0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    t0: f64,
    n: usize,
    derivs: Vec<Vec<f64>>,
}

impl FrameSample {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_order(&self) -> usize {
        self.derivs.len() - 1
    }

    /// `f^(i)(t0)` as a vector.
    pub fn derivative(&self, i: usize) -> &[f64] {
        &self.derivs[i]
    }

    /// Matrix with columns `f^(k_1), ..., f^(k_m)`.
    pub fn columns(&self, k: &[usize]) -> Result<DMatrix<f64>> {
        if let Some(&bad) = k.iter().find(|&&ki| ki > self.max_order()) {
            return Err(Error::InsufficientJetOrder {
                needed: bad,
                available: self.max_order(),
            });
        }
        Ok(DMatrix::from_fn(self.n, k.len(), |r, c| {
            self.derivs[k[c]][r]
        }))
    }

    /// `Y_f(t0)`.
    pub fn frame(&self) -> Result<DMatrix<f64>> {
        self.columns(MultiIndex::standard(self.n).as_slice())
    }

    pub fn generalized_wronskian(&self, k: &MultiIndex) -> Result<f64> {
        if k.len() != self.n {
            return Err(Error::InvalidMultiIndex(format!(
                "{k} has length {}, expected {}",
                k.len(),
                self.n
            )));
        }
        let cols = self.columns(k.as_slice())?;
        let ks = k.as_slice();
        if (1..ks.len()).any(|i| ks[..i].contains(&ks[i])) {
            return Ok(0.0);
        }
        Ok(cols.determinant())
    }

    pub fn wronskian(&self) -> Result<f64> {
        self.generalized_wronskian(&MultiIndex::standard(self.n))
    }

    /// `DEGENERACY_REL * (1 + max column norm of Y_f(t0))`.
    pub fn degeneracy_threshold(&self) -> Result<f64> {
        let y = self.frame()?;
        let norm = y.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(DEGENERACY_REL * (1.0 + norm))
    }

    /// `W_f(t0)`, or an error if it is below the degeneracy threshold.
    pub fn nonvanishing_wronskian(&self) -> Result<f64> {
        let w = self.wronskian()?;
        let threshold = self.degeneracy_threshold()?;
        if w.abs() > threshold {
            Ok(w)
        } else {
            Err(Error::VanishingWronskian {
                t: self.t0,
                value: w,
                threshold,
            })
        }
    }

    /// `Phi^[j]` for `j = 0..n`; requires derivatives up to order `n`.
    pub fn phis(&self) -> Result<Vec<f64>> {
        let w = self.nonvanishing_wronskian()?;
        let n = self.n;
        (0..n)
            .map(|j| {
                let wk = self.generalized_wronskian(&MultiIndex::phi_index(n, j))?;
                Ok(sign(n - j - 1) * wk / w)
            })
            .collect()
    }
}

/// `(-1)^e`.
pub(crate) fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Coefficients `a = (a_1, ..., a_n)` of `y^(n) = a_1 y^(n-1) + ... + a_n y`;
/// indices above `n` read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    spec: VectorFunctionSpec,
    smoothness: Option<usize>,
}

impl CoefficientVector {
    pub fn new(spec: VectorFunctionSpec) -> Self {
        Self {
            spec,
            smoothness: None,
        }
    }

    pub fn parse<S: AsRef<str>>(sources: &[S], domain: Interval) -> Result<Self> {
        Ok(Self::new(VectorFunctionSpec::parse(sources, domain)?))
    }

    /// Declares `a` to be only `m - 1` times continuously differentiable,
    /// which limits admissible multi-indices to `max k_i <= m + n - 1`.
    pub fn with_smoothness(mut self, m: usize) -> Self {
        self.smoothness = Some(m);
        self
    }

    pub fn spec(&self) -> &VectorFunctionSpec {
        &self.spec
    }
}

/// Anything that yields the coefficient functions `a_1, ..., a_n` as jets.
pub trait CoefficientSource: Sync {
    fn dim(&self) -> usize;

    fn coefficient_jets(&self, t0: f64, order: usize) -> Result<Vec<Jet>>;

    /// The `m` in "a is (m-1)-times continuously differentiable", if limited.
    fn smoothness(&self) -> Option<usize> {
        None
    }
}

impl CoefficientSource for CoefficientVector {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn coefficient_jets(&self, t0: f64, order: usize) -> Result<Vec<Jet>> {
        self.spec.jets(t0, order)
    }

    fn smoothness(&self) -> Option<usize> {
        self.smoothness
    }
}

/// Coefficients reconstructed from a frame, `a_j = Phi_f^[n-j]`.
#[derive(Debug, Clone, Copy)]
pub struct Reconstructed<'a>(pub &'a Frame);

impl CoefficientSource for Reconstructed<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn coefficient_jets(&self, t0: f64, order: usize) -> Result<Vec<Jet>> {
        reconstruct_coefficient_jets(self.0, t0, order)
    }
}

/// `Y_f` as a matrix of jets of order `p`; column `c` (0-based) holds
/// `f^(n-1-c)`.
pub fn frame_matrix(f: &Frame, t0: f64, p: usize) -> Result<MatrixOfJets> {
    let n = f.n();
    let jets = f.spec.jets(t0, p + n - 1)?;
    let derived = (0..n)
        .map(|c| {
            jets.iter()
                .map(|j| Ok(j.differentiate_n(n - 1 - c)?.truncate(p)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixOfJets::from_fn(n, n, |r, c| derived[c][r].clone())
}

/// `X_a = (a e_1 ... e_{n-1})` as a matrix of jets of order `p`.
pub fn companion_matrix(a: &dyn CoefficientSource, t0: f64, p: usize) -> Result<MatrixOfJets> {
    let n = a.dim();
    let col0 = a.coefficient_jets(t0, p)?;
    if col0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: col0.len(),
        });
    }
    MatrixOfJets::from_fn(n, n, |r, c| {
        if c == 0 {
            col0[r].clone()
        } else {
            // column c holds e_c
            Jet::constant(t0, if r == basis_column(c) { 1.0 } else { 0.0 }, p)
        }
    })
}

/// `W_f^k(t0)` straight from the definition.
pub fn wronskian_direct(f: &Frame, k: &MultiIndex, t0: f64) -> Result<f64> {
    f.sample(t0, k.max())?.generalized_wronskian(k)
}

/// `W_f(t0)`.
pub fn wronskian(f: &Frame, t0: f64) -> Result<f64> {
    wronskian_direct(f, &MultiIndex::standard(f.n()), t0)
}

/// `W_f` as a jet of order `p`.
pub fn wronskian_jet(f: &Frame, t0: f64, p: usize) -> Result<Jet> {
    det_jets(&frame_matrix(f, t0, p)?)
}

pub(crate) fn check_budget(k: &MultiIndex, n: usize, a: &dyn CoefficientSource) -> Result<()> {
    if k.len() != n {
        return Err(Error::InvalidMultiIndex(format!(
            "{k} has length {}, expected {n}",
            k.len()
        )));
    }
    let max_bell = bell_table().max_order();
    let m = a.smoothness().map_or(max_bell, |m| m.min(max_bell));
    let budget = m + n - 1;
    match k.as_slice().iter().find(|&&ki| ki > budget) {
        Some(&ki) => Err(Error::SmoothnessBudgetExceeded { k: ki, budget }),
        None => Ok(()),
    }
}

/// `B_l(X_a, ..., X_a^(l-1))(t0)` for `l = 0..=max_ell`, together with
/// `W_f(t0)`: everything the Bell-polynomial route needs at one point.
#[derive(Debug, Clone)]
pub struct BellFormula {
    n: usize,
    wronskian: f64,
    bell: Vec<DMatrix<f64>>,
}

impl BellFormula {
    pub fn at(f: &Frame, a: &dyn CoefficientSource, t0: f64, max_ell: usize) -> Result<Self> {
        let n = f.n();
        if a.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.dim(),
            });
        }
        let wronskian = f.sample(t0, n - 1)?.wronskian()?;
        let x = companion_matrix(a, t0, max_ell.saturating_sub(1))?;
        let table = bell_table();
        let bell = (0..=max_ell)
            .map(|l| {
                let b = bell_eval_jets(table.get(l)?, &x, 0)?;
                Ok(DMatrix::from_row_slice(n, n, &b.values()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, wronskian, bell })
    }

    pub fn wronskian(&self) -> f64 {
        self.wronskian
    }

    /// `B_l` evaluated at the point.
    pub fn bell_matrix(&self, l: usize) -> &DMatrix<f64> {
        &self.bell[l]
    }

    /// The matrix whose `i`-th column is `B_{l_i} e_{n + l_i - k_i}`.
    pub fn coefficient_matrix(&self, k: &MultiIndex) -> Result<DMatrix<f64>> {
        let n = self.n;
        let ells = k.ells();
        if let Some(&l) = ells.iter().find(|&&l| l >= self.bell.len()) {
            return Err(Error::InsufficientJetOrder {
                needed: l,
                available: self.bell.len() - 1,
            });
        }
        Ok(DMatrix::from_fn(n, n, |r, i| {
            let e = n + ells[i] - k.as_slice()[i];
            self.bell[ells[i]][(r, basis_column(e))]
        }))
    }

    pub fn generalized_wronskian(&self, k: &MultiIndex) -> Result<f64> {
        Ok(self.wronskian * self.coefficient_matrix(k)?.determinant())
    }
}

/// `W_f^k(t0)` through the Bell-polynomial formula, with `a` the coefficient
/// vector of the equation `f` solves.
pub fn wronskian_via_bell(
    f: &Frame,
    a: &dyn CoefficientSource,
    k: &MultiIndex,
    t0: f64,
) -> Result<f64> {
    check_budget(k, f.n(), a)?;
    let max_ell = k.ells().into_iter().max().unwrap_or(0);
    BellFormula::at(f, a, t0, max_ell)?.generalized_wronskian(k)
}

/// [`wronskian_via_bell`] with `a` reconstructed from `f` itself.
pub fn wronskian_via_bell_reconstructed(f: &Frame, k: &MultiIndex, t0: f64) -> Result<f64> {
    wronskian_via_bell(f, &Reconstructed(f), k, t0)
}

/// `Phi_f^[j](t0) = (-1)^(n-j-1) W_f^(n, ..., j+1, j-1, ..., 0) / W_f`.
pub fn phi(f: &Frame, j: usize, t0: f64) -> Result<f64> {
    let n = f.n();
    if j >= n {
        return Err(Error::InvalidMultiIndex(format!(
            "Phi index {j} out of range 0..{n}"
        )));
    }
    Ok(f.sample(t0, n)?.phis()?[j])
}

/// `(a_1, ..., a_n)(t0)` with `a_j = Phi_f^[n-j]`.
pub fn reconstruct_coefficients(f: &Frame, t0: f64) -> Result<Vec<f64>> {
    let phis = f.sample(t0, f.n())?.phis()?;
    Ok(phis.into_iter().rev().collect())
}

/// Reconstructed coefficients as jets of order `q`, so that their
/// derivatives are available too.
pub fn reconstruct_coefficient_jets(f: &Frame, t0: f64, q: usize) -> Result<Vec<Jet>> {
    let n = f.n();
    let base = f.spec.jets(t0, n + q)?;
    let derived: Vec<Vec<Jet>> = (0..=n)
        .map(|i| {
            base.iter()
                .map(|j| Ok(j.differentiate_n(i)?.truncate(q)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let det_of = |k: &MultiIndex| {
        let m = MatrixOfJets::from_fn(n, n, |r, c| derived[k.as_slice()[c]][r].clone())?;
        det_jets(&m)
    };
    // Same degeneracy rule as the scalar path.
    f.sample(t0, n - 1)?.nonvanishing_wronskian()?;
    let w = det_of(&MultiIndex::standard(n))?;
    (1..=n)
        .map(|j| {
            let idx = n - j;
            let wk = det_of(&MultiIndex::phi_index(n, idx))?;
            Ok(wk.try_div(&w)?.scale(sign(n - idx - 1)))
        })
        .collect()
}
