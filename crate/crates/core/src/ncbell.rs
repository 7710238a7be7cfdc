//! Noncommutative complete Bell polynomials.
//!
//! `B_0 = 1` and `B_{m+1} = sum_{j=0}^{m} C(m, j) B_j X_{m+1-j}`, expanded in
//! the free associative algebra over `X_1, X_2, ...` with integer
//! coefficients. Expanded polynomials can be evaluated on real matrices
//! ([`bell_eval`]) or on a matrix of jets together with its derivatives
//! ([`bell_eval_jets`]).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::MatrixOfJets;

/// Default cap on the Bell index; `B_12` has 2048 words.
pub const DEFAULT_MAX_ORDER: usize = 12;

/// A monomial `X_{i1} X_{i2} ... X_{ir}` over 1-based indeterminate indices.
///
/// Words order longest-first, then lexicographically, which is the display
/// order of [`NCPolynomial`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    /// Panics if an index is zero.
    pub fn new(indices: Vec<usize>) -> Self {
        assert!(
            indices.iter().all(|&i| i >= 1),
            "indeterminate indices start at 1"
        );
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of the indices.
    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    fn appended(&self, index: usize) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(index);
        Self(v)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .len()
            .cmp(&self.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    /// Adjacent equal indices collapse to powers: `X1^2 X2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let idx = self.0[i];
            let run = self.0[i..].iter().take_while(|&&x| x == idx).count();
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if run > 1 {
                write!(f, "X{idx}^{run}")?;
            } else {
                write!(f, "X{idx}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Integer combination of words; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCPolynomial {
    order: usize,
    terms: BTreeMap<Word, i64>,
}

impl NCPolynomial {
    /// Builds a polynomial from raw terms, collecting like words and
    /// dropping zeros. `order` is only a label.
    pub fn from_terms(order: usize, terms: impl IntoIterator<Item = (Word, i64)>) -> Self {
        let mut map = BTreeMap::new();
        for (w, c) in terms {
            *map.entry(w).or_insert(0) += c;
        }
        map.retain(|_, c| *c != 0);
        Self { order, terms: map }
    }

    /// The Bell index this polynomial was expanded for.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in display order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, i64)> {
        self.terms.iter().map(|(w, c)| (w, *c))
    }

    pub fn coefficient(&self, indices: &[usize]) -> i64 {
        self.terms
            .get(&Word(indices.to_vec()))
            .copied()
            .unwrap_or(0)
    }

    pub fn coefficient_sum(&self) -> i64 {
        self.terms.values().sum()
    }

    /// Largest indeterminate index that occurs, 0 for a constant.
    pub fn max_index(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|w| w.0.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for NCPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, &c)) in self.terms.iter().enumerate() {
            let mag = c.unsigned_abs();
            match (i, c < 0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if w.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{w}")?;
            } else {
                write!(f, "{mag} {w}")?;
            }
        }
        Ok(())
    }
}

/// Pascal triangle rows `0..=max`.
fn binomials(max: usize) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(max + 1);
    for m in 0..=max {
        let mut row = vec![1i64; m + 1];
        for j in 1..m {
            row[j] = rows[m - 1][j - 1] + rows[m - 1][j];
        }
        rows.push(row);
    }
    rows
}

/// Memoized expansions `B_0 ..= B_max`. Immutable once built, so a table can
/// be shared freely between threads.
#[derive(Debug, Clone)]
pub struct BellTable {
    polys: Vec<NCPolynomial>,
}

impl BellTable {
    pub fn new(max_order: usize) -> Result<Self> {
        let binom = binomials(max_order);
        let mut polys = vec![NCPolynomial {
            order: 0,
            terms: BTreeMap::from([(Word::empty(), 1)]),
        }];
        for m in 0..max_order {
            let mut terms: BTreeMap<Word, i64> = BTreeMap::new();
            for (j, lower) in polys.iter().enumerate() {
                let weight = binom[m][j];
                let letter = m + 1 - j;
                for (w, &c) in &lower.terms {
                    let add = c
                        .checked_mul(weight)
                        .ok_or(Error::CoefficientOverflow { order: m + 1 })?;
                    let slot = terms.entry(w.appended(letter)).or_insert(0);
                    *slot = slot
                        .checked_add(add)
                        .ok_or(Error::CoefficientOverflow { order: m + 1 })?;
                }
            }
            terms.retain(|_, c| *c != 0);
            polys.push(NCPolynomial {
                order: m + 1,
                terms,
            });
        }
        Ok(Self { polys })
    }

    pub fn max_order(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn get(&self, m: usize) -> Result<&NCPolynomial> {
        self.polys.get(m).ok_or(Error::OrderLimitExceeded {
            requested: m,
            max: self.max_order(),
        })
    }
}

/// Process-wide table up to [`DEFAULT_MAX_ORDER`].
pub fn bell_table() -> &'static BellTable {
    static TABLE: OnceLock<BellTable> = OnceLock::new();
    TABLE.get_or_init(|| BellTable::new(DEFAULT_MAX_ORDER).expect("default order fits in i64"))
}

/// Expanded `B_m`, subject to the default order cap.
pub fn bell_expand(m: usize) -> Result<NCPolynomial> {
    bell_expand_with_limit(m, DEFAULT_MAX_ORDER)
}

/// Expanded `B_m` under a caller-chosen order cap.
pub fn bell_expand_with_limit(m: usize, max_order: usize) -> Result<NCPolynomial> {
    if m > max_order {
        return Err(Error::OrderLimitExceeded {
            requested: m,
            max: max_order,
        });
    }
    if m <= DEFAULT_MAX_ORDER {
        return bell_table().get(m).cloned();
    }
    Ok(BellTable::new(m)?.polys.pop().expect("nonempty table"))
}

/// Real `n x n` matrix with `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    /// From row-major entries.
    pub fn from_row_slice(n: usize, values: &[f64]) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(Self(DMatrix::from_row_slice(n, n, values)))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NonSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).amax()
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 * &rhs.0)
    }
}

/// Substitutes `X_i := args[i-1]` and evaluates each word as a left-to-right
/// product. The dimension is taken from `args[0]`, so at least one matrix is
/// required even for `B_0`; surplus arguments are ignored.
pub fn bell_eval(poly: &NCPolynomial, args: &[SquareMatrix]) -> Result<SquareMatrix> {
    let needed = poly.max_index().max(1);
    if args.len() < needed {
        return Err(Error::InsufficientArguments {
            needed,
            given: args.len(),
        });
    }
    let n = args[0].dim();
    if let Some(bad) = args.iter().find(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let mut acc = DMatrix::zeros(n, n);
    for (w, c) in poly.terms() {
        let mut prod = DMatrix::identity(n, n);
        for &i in w.indices() {
            prod = &prod * args[i - 1].as_matrix();
        }
        acc += prod * c as f64;
    }
    Ok(SquareMatrix(acc))
}

/// Evaluates `poly` at `X_i := X^(i-1)`, where the derivatives are read off
/// the jet entries of `x`. The result carries jets of order `out_order`,
/// which requires `x.order() >= max_index - 1 + out_order`.
pub fn bell_eval_jets(
    poly: &NCPolynomial,
    x: &MatrixOfJets,
    out_order: usize,
) -> Result<MatrixOfJets> {
    if x.rows() != x.cols() {
        return Err(Error::NonSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let letters = poly.max_index();
    let needed = letters.saturating_sub(1) + out_order;
    if letters > 0 && x.order() < needed {
        return Err(Error::InsufficientJetOrder {
            needed,
            available: x.order(),
        });
    }
    let n = x.rows();
    let t0 = x.basepoint();
    let derivs = (0..letters)
        .map(|i| Ok(x.differentiate_n(i)?.truncate(out_order)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = MatrixOfJets::zeros(n, n, t0, out_order);
    for (w, c) in poly.terms() {
        let mut prod = MatrixOfJets::identity(n, t0, out_order);
        for &i in w.indices() {
            prod = prod.try_mul(&derivs[i - 1])?;
        }
        acc = acc.try_add(&prod.scale(c as f64))?;
    }
    Ok(acc)
}

/// Classical (commutative) complete Bell polynomial `Y_m(x_1, ..., x_m)`,
/// computed from its own scalar recursion rather than through word
/// expansion.
pub fn commutative_bell(m: usize, args: &[f64]) -> Result<f64> {
    if args.len() < m {
        return Err(Error::InsufficientArguments {
            needed: m,
            given: args.len(),
        });
    }
    let mut y = vec![1.0f64];
    let mut row = vec![1.0f64];
    for k in 0..m {
        let next: f64 = (0..=k).map(|j| row[j] * y[j] * args[k - j]).sum();
        y.push(next);
        let mut new_row = vec![1.0; k + 2];
        for j in 1..=k {
            new_row[j] = row[j - 1] + row[j];
        }
        row = new_row;
    }
    Ok(y[m])
}
