//! Truncated Taylor series ("jets") in one real variable, and matrices of them.
//!
//! A [`Jet`] of order `p` at basepoint `t0` stores the Taylor coefficients
//! `c[i] = f^(i)(t0) / i!` for `i = 0..=p`. Arithmetic is exact up to the
//! truncation order, so derivatives of closed-form expressions come out
//! without any step-size error.
//!
//! The `std::ops` impls on `&Jet` panic when the operands disagree on
//! basepoint or order; use the `try_*` methods when the operands come from
//! untrusted sources.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// `i!` as a float.
pub fn factorial(i: usize) -> f64 {
    (1..=i).fold(1.0, |acc, k| acc * k as f64)
}

/// Truncated Taylor expansion of a scalar function at a basepoint.
#[derive(Clone, PartialEq)]
pub struct Jet {
    t0: f64,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(t0={}, {:?})", self.t0, self.coeffs)
    }
}

/// Elementary functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    Log,
    /// Integer power; negative exponents require a nonzero constant term.
    Pow(i32),
}

impl Jet {
    /// Builds a jet from Taylor coefficients. Panics on an empty slice.
    pub fn from_coeffs(t0: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { t0, coeffs }
    }

    /// Builds a jet from raw derivatives `f(t0), f'(t0), ...`.
    pub fn from_derivatives(t0: f64, derivatives: &[f64]) -> Self {
        let coeffs = derivatives
            .iter()
            .enumerate()
            .map(|(i, d)| d / factorial(i))
            .collect();
        Self::from_coeffs(t0, coeffs)
    }

    pub fn constant(t0: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { t0, coeffs }
    }

    pub fn zero(t0: f64, order: usize) -> Self {
        Self::constant(t0, 0.0, order)
    }

    /// The identity function `t` expanded at `t0`.
    pub fn variable(t0: f64, order: usize) -> Self {
        let mut jet = Self::constant(t0, t0, order);
        if order >= 1 {
            jet.coeffs[1] = 1.0;
        }
        jet
    }

    pub fn basepoint(&self) -> f64 {
        self.t0
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Function value at the basepoint.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `i`-th derivative at the basepoint, `i! * c[i]`.
    pub fn derivative(&self, i: usize) -> f64 {
        factorial(i) * self.coeffs[i]
    }

    /// All raw derivatives `f(t0), ..., f^(p)(t0)`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|i| self.derivative(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Drops every coefficient above `order`; pads with zeros if `order`
    /// exceeds the current order.
    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        Self {
            t0: self.t0,
            coeffs,
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.t0 != other.t0 {
            return Err(Error::BasepointMismatch {
                left: self.t0,
                right: other.t0,
            });
        }
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// Truncated series quotient. Fails if the divisor has a zero constant term.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let b0 = other.coeffs[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::DomainViolation(format!(
                "division by a jet with constant term {b0} at t = {}",
                self.t0
            )));
        }
        let p = self.order();
        let mut q = vec![0.0; p + 1];
        for k in 0..=p {
            let mut acc = self.coeffs[k];
            for j in 0..k {
                acc -= q[j] * other.coeffs[k - j];
            }
            q[k] = acc / b0;
        }
        finite(Jet {
            t0: self.t0,
            coeffs: q,
        })
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            t0: self.t0,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Derivative as a jet of one lower order.
    pub fn differentiate(&self) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::ZeroOrderJet);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * c)
            .collect();
        Ok(Jet {
            t0: self.t0,
            coeffs,
        })
    }

    /// Differentiates `times` times.
    pub fn differentiate_n(&self, times: usize) -> Result<Jet> {
        if times > self.order() {
            return Err(Error::InsufficientJetOrder {
                needed: times,
                available: self.order(),
            });
        }
        let coeffs = (times..=self.order())
            .map(|i| self.coeffs[i] * factorial(i) / factorial(i - times))
            .collect();
        Ok(Jet {
            t0: self.t0,
            coeffs,
        })
    }

    pub fn exp(&self) -> Jet {
        let p = self.order();
        let u = &self.coeffs;
        let mut y = vec![0.0; p + 1];
        y[0] = u[0].exp();
        for k in 1..=p {
            let s: f64 = (1..=k).map(|j| j as f64 * u[j] * y[k - j]).sum();
            y[k] = s / k as f64;
        }
        Jet {
            t0: self.t0,
            coeffs: y,
        }
    }

    /// `(sin u, cos u)` by the coupled recurrence.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let p = self.order();
        let u = &self.coeffs;
        let mut s = vec![0.0; p + 1];
        let mut c = vec![0.0; p + 1];
        s[0] = u[0].sin();
        c[0] = u[0].cos();
        for k in 1..=p {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                ds += j as f64 * u[j] * c[k - j];
                dc -= j as f64 * u[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (
            Jet {
                t0: self.t0,
                coeffs: s,
            },
            Jet {
                t0: self.t0,
                coeffs: c,
            },
        )
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }

    /// Natural logarithm; the constant term must be positive.
    pub fn ln(&self) -> Result<Jet> {
        let u = &self.coeffs;
        if u[0].is_nan() || u[0] <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "log of nonpositive value {} at t = {}",
                u[0], self.t0
            )));
        }
        let p = self.order();
        let mut y = vec![0.0; p + 1];
        y[0] = u[0].ln();
        for k in 1..=p {
            let s: f64 = (1..k).map(|j| j as f64 * y[j] * u[k - j]).sum();
            y[k] = (u[k] - s / k as f64) / u[0];
        }
        Ok(Jet {
            t0: self.t0,
            coeffs: y,
        })
    }

    /// Integer power by repeated squaring; negative exponents go through the
    /// reciprocal.
    pub fn powi(&self, exponent: i32) -> Result<Jet> {
        let base = if exponent < 0 {
            Jet::constant(self.t0, 1.0, self.order()).try_div(self)?
        } else {
            self.clone()
        };
        let mut e = exponent.unsigned_abs();
        let mut acc = Jet::constant(self.t0, 1.0, self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        finite(acc)
    }

    pub(crate) fn add_unchecked(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a + b)
    }

    pub(crate) fn mul_unchecked(&self, other: &Jet) -> Jet {
        let p = self.order();
        let mut out = vec![0.0; p + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs[..=p - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet {
            t0: self.t0,
            coeffs: out,
        }
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            t0: self.t0,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        }
    }
}

fn finite(jet: Jet) -> Result<Jet> {
    if jet.coeffs.iter().all(|c| c.is_finite()) {
        Ok(jet)
    } else {
        Err(Error::DomainViolation(format!(
            "non-finite Taylor coefficient at t = {}",
            jet.t0
        )))
    }
}

/// Composes an elementary function with `inner`.
pub fn jet_elementary(kind: Elementary, inner: &Jet) -> Result<Jet> {
    let out = match kind {
        Elementary::Exp => inner.exp(),
        Elementary::Sin => inner.sin(),
        Elementary::Cos => inner.cos(),
        Elementary::Log => inner.ln()?,
        Elementary::Pow(e) => inner.powi(e)?,
    };
    finite(out)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("incompatible jets")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("incompatible jets")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("incompatible jets")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Rectangular array of jets sharing one basepoint and order, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOfJets {
    rows: usize,
    cols: usize,
    entries: Vec<Jet>,
}

impl MatrixOfJets {
    /// Validates shape and that all entries share basepoint and order.
    pub fn new(rows: usize, cols: usize, entries: Vec<Jet>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        for e in &entries[1..] {
            entries[0].check_compatible(e)?;
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Jet,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self::new(rows, cols, entries)
    }

    /// Constant matrix from row-major values.
    pub fn from_constants(
        rows: usize,
        cols: usize,
        t0: f64,
        order: usize,
        values: &[f64],
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Self::from_fn(rows, cols, |r, c| {
            Jet::constant(t0, values[r * cols + c], order)
        })
    }

    pub fn identity(n: usize, t0: f64, order: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            Jet::constant(t0, if r == c { 1.0 } else { 0.0 }, order)
        })
        .expect("identity of positive size")
    }

    pub fn zeros(rows: usize, cols: usize, t0: f64, order: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Jet::zero(t0, order)).expect("positive size")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> usize {
        self.entries[0].order()
    }

    pub fn basepoint(&self) -> f64 {
        self.entries[0].basepoint()
    }

    pub fn get(&self, r: usize, c: usize) -> &Jet {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Jet] {
        &self.entries
    }

    pub fn column(&self, c: usize) -> Vec<Jet> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    /// Row-major values of the `i`-th derivative at the basepoint.
    pub fn derivative_values(&self, i: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.derivative(i)).collect()
    }

    /// Row-major values at the basepoint.
    pub fn values(&self) -> Vec<f64> {
        self.derivative_values(0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.truncate(order)).collect(),
        }
    }

    /// Entrywise derivative.
    pub fn differentiate(&self) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(Jet::differentiate)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Entrywise `times`-fold derivative.
    pub fn differentiate_n(&self, times: usize) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.differentiate_n(times))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.entries[0].check_compatible(&other.entries[0])
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        self.check_compatible(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add_unchecked(b))
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-1.0))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        self.check_compatible(other)?;
        let (t0, p) = (self.basepoint(), self.order());
        Self::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = Jet::zero(t0, p);
            for k in 0..self.cols {
                acc = acc.add_unchecked(&self.get(r, k).mul_unchecked(other.get(k, c)));
            }
            acc
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    /// Determinant in the commutative jet ring.
    pub fn det(&self) -> Result<Jet> {
        det_jets(self)
    }
}

/// Entrywise derivative of a matrix of jets.
pub fn matrix_jet_derivative(m: &MatrixOfJets) -> Result<MatrixOfJets> {
    m.differentiate()
}

/// Largest size handled by cofactor expansion; larger matrices use
/// fraction-free elimination.
pub const COFACTOR_LIMIT: usize = 4;

/// Determinant of a square matrix of jets.
pub fn det_jets(m: &MatrixOfJets) -> Result<Jet> {
    if m.rows != m.cols {
        return Err(Error::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if m.rows <= COFACTOR_LIMIT {
        let cols: Vec<usize> = (0..m.cols).collect();
        Ok(cofactor(m, 0, &cols))
    } else {
        bareiss(m)
    }
}

// Laplace expansion along row `row` over the remaining columns.
fn cofactor(m: &MatrixOfJets, row: usize, cols: &[usize]) -> Jet {
    if cols.len() == 1 {
        return m.get(row, cols[0]).clone();
    }
    let (t0, p) = (m.basepoint(), m.order());
    let mut acc = Jet::zero(t0, p);
    let mut rest = Vec::with_capacity(cols.len() - 1);
    for (idx, &c) in cols.iter().enumerate() {
        let entry = m.get(row, c);
        if entry.is_zero() {
            continue;
        }
        rest.clear();
        rest.extend(cols.iter().copied().filter(|&x| x != c));
        let minor = cofactor(m, row + 1, &rest);
        let term = entry.mul_unchecked(&minor);
        acc = if idx % 2 == 0 {
            acc.add_unchecked(&term)
        } else {
            acc.add_unchecked(&term.scale(-1.0))
        };
    }
    acc
}

// Bareiss elimination with row pivoting on the largest constant term. Falls
// back to the minor expansion when no pivot has a usable constant term.
fn bareiss(m: &MatrixOfJets) -> Result<Jet> {
    let n = m.rows;
    let (t0, p) = (m.basepoint(), m.order());
    let scale = m
        .entries
        .iter()
        .flat_map(|e| e.coeffs().iter())
        .fold(0.0f64, |acc, c| acc.max(c.abs()));
    let mut a: Vec<Vec<Jet>> = (0..n)
        .map(|r| (0..n).map(|c| m.get(r, c).clone()).collect())
        .collect();
    let mut negate = false;
    let mut prev = Jet::constant(t0, 1.0, p);
    let mut prev_mag = 1.0;
    for k in 0..n - 1 {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i][k].value().abs().total_cmp(&a[j][k].value().abs()))
            .expect("nonempty range");
        // Entries at step k carry a factor of roughly prev_mag * scale.
        if a[pivot][k].value().abs() <= PIVOT_REL * prev_mag * scale.max(1.0) {
            return Ok(minor_expansion(m));
        }
        if pivot != k {
            a.swap(pivot, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k]
                    .mul_unchecked(&a[i][j])
                    .add_unchecked(&a[i][k].mul_unchecked(&a[k][j]).scale(-1.0));
                a[i][j] = num.try_div(&prev)?;
            }
        }
        prev = a[k][k].clone();
        prev_mag = prev.value().abs();
    }
    let det = a[n - 1][n - 1].clone();
    Ok(if negate { det.scale(-1.0) } else { det })
}

/// Pivots below this fraction of the working scale are treated as zero.
const PIVOT_REL: f64 = 1e-12;

// Division-free Laplace expansion with the minors of the trailing rows
// memoized by column set; exponential in n but only used for singular
// or near-singular leading blocks.
fn minor_expansion(m: &MatrixOfJets) -> Jet {
    use std::collections::HashMap;
    let n = m.rows;
    let (t0, p) = (m.basepoint(), m.order());
    let full: u64 = (1u64 << n) - 1;
    // minors[mask] = det of the last popcount(mask) rows restricted to the columns in mask
    let mut minors: HashMap<u64, Jet> = HashMap::new();
    minors.insert(0, Jet::constant(t0, 1.0, p));
    for size in 1..=n {
        let row = n - size;
        let mut next = HashMap::new();
        for &mask in minors.keys() {
            for c in 0..n {
                if mask & (1 << c) != 0 {
                    continue;
                }
                let cols = mask | (1 << c);
                if next.contains_key(&cols) {
                    continue;
                }
                let mut acc = Jet::zero(t0, p);
                let mut parity = 0usize;
                for cc in 0..n {
                    if cols & (1 << cc) == 0 {
                        continue;
                    }
                    let entry = m.get(row, cc);
                    if !entry.is_zero() {
                        let sub = &minors[&(cols & !(1 << cc))];
                        let term = entry.mul_unchecked(sub);
                        acc = if parity.is_multiple_of(2) {
                            acc.add_unchecked(&term)
                        } else {
                            acc.add_unchecked(&term.scale(-1.0))
                        };
                    }
                    parity += 1;
                }
                next.insert(cols, acc);
            }
        }
        minors = next;
    }
    minors.remove(&full).expect("full minor computed")
}
