//! Matrices (and column vectors) with [`TruncSeries`] entries.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, RatMatrix};
use crate::series::{rat, Cap, Rational, TruncSeries};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TruncSeries>,
}

impl SeriesMatrix {
    pub fn zero(rows: usize, cols: usize, nq: usize, nv: usize, cap: Cap) -> Self {
        SeriesMatrix { rows, cols, entries: vec![TruncSeries::zero(nq, nv, cap); rows * cols] }
    }

    pub fn identity(n: usize, nq: usize, nv: usize, cap: Cap) -> Self {
        let mut m = Self::zero(n, n, nq, nv, cap);
        for i in 0..n {
            m.set(i, i, TruncSeries::one(nq, nv, cap));
        }
        m
    }

    pub fn from_rational(a: &RatMatrix, nq: usize, nv: usize, cap: Cap) -> Self {
        let rows = a.len();
        let cols = a.first().map_or(0, |r| r.len());
        let mut m = Self::zero(rows, cols, nq, nv, cap);
        for (i, row) in a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                m.set(i, j, TruncSeries::constant(x.clone(), nq, nv, cap));
            }
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<TruncSeries>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        SeriesMatrix { rows, cols, entries }
    }

    /// Column vector from its entries.
    pub fn column(entries: Vec<TruncSeries>) -> Self {
        let n = entries.len();
        Self::from_entries(n, 1, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn arity(&self) -> (usize, usize) {
        self.entries[0].arity()
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: TruncSeries) {
        self.entries[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[TruncSeries] {
        &self.entries
    }

    pub fn col(&self, j: usize) -> Vec<TruncSeries> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn col_matrix(&self, j: usize) -> SeriesMatrix {
        SeriesMatrix::column(self.col(j))
    }

    /// Componentwise minimum of the entry caps.
    pub fn cap(&self) -> Cap {
        self.entries.iter().map(|e| e.cap()).reduce(Cap::min).expect("empty matrix")
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn map(&self, f: impl Fn(&TruncSeries) -> TruncSeries) -> Self {
        SeriesMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&TruncSeries) -> Result<TruncSeries>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn truncate(&self, cap: Cap) -> Self {
        self.map(|e| e.truncate(cap))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn scale_series(&self, s: &TruncSeries) -> Self {
        self.map(|e| e * s)
    }

    pub fn diff_v(&self, i: usize) -> Self {
        self.map(|e| e.diff_v(i))
    }

    pub fn integrate_v(&self, i: usize) -> Self {
        self.map(|e| e.integrate_v(i))
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        SeriesMatrix { rows: self.cols, cols: self.rows, entries }
    }

    pub fn constant_part(&self) -> RatMatrix {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).constant_term()).collect()).collect()
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.agrees_with(b))
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ArityMismatch { left: (self.rows, self.cols), right: (other.rows, other.cols) });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.checked_add(b)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.checked_sub(b)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ArityMismatch { left: (self.rows, self.cols), right: (other.rows, other.cols) });
        }
        let (nq, nv) = self.arity();
        let cap = self.cap().min(other.cap());
        let mut out = Self::zero(self.rows, other.cols, nq, nv, cap);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).checked_mul(other.get(0, j))?;
                for k in 1..self.cols {
                    acc = acc.checked_add(&self.get(i, k).checked_mul(other.get(k, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Matrix inverse through the cap: invert the constant term exactly, then
    /// refine with Newton's iteration `X <- X (2 - A X)`.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::ArityMismatch { left: (self.rows, self.cols), right: (self.cols, self.rows) });
        }
        let (nq, nv) = self.arity();
        let cap = self.cap();
        let c0 = linalg::inverse(&self.constant_part())?;
        let mut x = Self::from_rational(&c0, nq, nv, cap);
        let two = Self::identity(self.rows, nq, nv, cap).scale(&rat(2));
        for _ in 0..64 {
            let ax = self * &x;
            let next = &x * &(&two - &ax);
            if next == x {
                return Ok(x);
            }
            x = next;
        }
        Ok(x)
    }

    /// Substitutes every coordinate, entrywise (see [`TruncSeries::compose`]).
    pub fn compose(&self, subs: &[TruncSeries]) -> Result<Self> {
        self.try_map(|e| e.compose(subs))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a SeriesMatrix> for &'a SeriesMatrix {
            type Output = SeriesMatrix;
            fn $method(self, rhs: &'a SeriesMatrix) -> SeriesMatrix {
                self.$checked(rhs).expect("matrix shape mismatch")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &SeriesMatrix {
    type Output = SeriesMatrix;
    fn neg(self) -> SeriesMatrix {
        self.scale(&rat(-1))
    }
}

impl fmt::Display for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ratio;

    #[test]
    fn inverse_of_series_matrix() {
        let cap = Cap::new(6, 0);
        let v0 = TruncSeries::var(0, 0, 2, cap);
        let v1 = TruncSeries::var(1, 0, 2, cap);
        let one = TruncSeries::one(0, 2, cap);
        let a = SeriesMatrix::from_entries(
            2,
            2,
            vec![&one + &v0, v1.clone(), v0.scale(&ratio(1, 3)), (&one - &v1).scale(&rat(2))],
        );
        let inv = a.inverse().unwrap();
        assert_eq!(&a * &inv, SeriesMatrix::identity(2, 0, 2, cap));
        assert_eq!(&inv * &a, SeriesMatrix::identity(2, 0, 2, cap));
    }

    #[test]
    fn singular_constant_term() {
        let cap = Cap::new(3, 0);
        let m = SeriesMatrix::zero(2, 2, 0, 1, cap);
        assert_eq!(m.inverse(), Err(Error::SingularMatrix));
    }
}
