//! Laurent objects in `u = (q - 1)^{-1}`.
//!
//! A [`ULaurent`] stores finitely many coefficients of powers of `u` and
//! records how far its expansion is known. A value whose `known_through` is
//! `None` is *complete*: every monomial has finite `u`-support and the
//! stored terms are the whole object. Otherwise all powers above
//! `known_through` are unknown, and operations that need the full object
//! (substituting `q -> 1/q`, evaluating at a point, projecting) refuse it.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::SeriesMatrix;
use crate::series::{binomial, rat, Rational, TruncSeries};

/// Coefficient rings usable inside a [`ULaurent`].
pub trait Coefficient: Clone + Debug + PartialEq
where
    for<'a> &'a Self: Add<&'a Self, Output = Self> + Sub<&'a Self, Output = Self> + Mul<&'a Self, Output = Self>,
{
    fn is_zero_coeff(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn scale_by(&self, c: &Rational) -> Self;
    fn try_inverse(&self) -> Result<Self>;
}

impl Coefficient for Rational {
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn scale_by(&self, c: &Rational) -> Self {
        self * c
    }
    fn try_inverse(&self) -> Result<Self> {
        if self.is_zero() {
            Err(Error::NotAUnit)
        } else {
            Ok(self.recip())
        }
    }
}

impl Coefficient for TruncSeries {
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        TruncSeries::zero(self.nq(), self.nv(), self.cap())
    }
    fn scale_by(&self, c: &Rational) -> Self {
        self.scale(c)
    }
    fn try_inverse(&self) -> Result<Self> {
        self.invert()
    }
}

impl Coefficient for SeriesMatrix {
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        let (nq, nv) = self.arity();
        SeriesMatrix::zero(self.rows(), self.cols(), nq, nv, self.cap())
    }
    fn scale_by(&self, c: &Rational) -> Self {
        self.scale(c)
    }
    fn try_inverse(&self) -> Result<Self> {
        self.inverse()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ULaurent<C>
where
    C: Coefficient,
    for<'a> &'a C: Add<&'a C, Output = C> + Sub<&'a C, Output = C> + Mul<&'a C, Output = C>,
{
    terms: BTreeMap<i32, C>,
    zero: C,
    known_through: Option<i32>,
}

impl<C> ULaurent<C>
where
    C: Coefficient,
    for<'a> &'a C: Add<&'a C, Output = C> + Sub<&'a C, Output = C> + Mul<&'a C, Output = C>,
{
    /// A complete object from `(power, coefficient)` pairs; `zero` fixes the
    /// coefficient shape.
    pub fn from_terms(zero: C, terms: impl IntoIterator<Item = (i32, C)>) -> Self {
        let mut out = ULaurent { terms: BTreeMap::new(), zero: zero.zero_like(), known_through: None };
        for (k, c) in terms {
            out.add_term(k, c);
        }
        out
    }

    pub fn zero(zero: C) -> Self {
        Self::from_terms(zero, [])
    }

    pub fn constant(c: C) -> Self {
        let z = c.zero_like();
        Self::from_terms(z, [(0, c)])
    }

    /// Marks the object as known only through `u^k`, dropping anything above.
    pub fn truncated(mut self, k: i32) -> Self {
        self.terms.retain(|&p, _| p <= k);
        self.known_through = Some(self.known_through.map_or(k, |old| old.min(k)));
        self
    }

    fn add_term(&mut self, k: i32, c: C) {
        if let Some(kt) = self.known_through {
            if k > kt {
                return;
            }
        }
        let next = match self.terms.remove(&k) {
            Some(old) => &old + &c,
            None => c,
        };
        if !next.is_zero_coeff() {
            self.terms.insert(k, next);
        }
    }

    pub fn coeff(&self, k: i32) -> C {
        self.terms.get(&k).cloned().unwrap_or_else(|| self.zero.clone())
    }

    pub fn zero_coeff(&self) -> &C {
        &self.zero
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i32, &C)> {
        self.terms.iter()
    }

    pub fn is_complete(&self) -> bool {
        self.known_through.is_none()
    }

    pub fn known_through(&self) -> Option<i32> {
        self.known_through
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn valuation(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn map<D>(&self, f: impl Fn(&C) -> D) -> ULaurent<D>
    where
        D: Coefficient,
        for<'a> &'a D: Add<&'a D, Output = D> + Sub<&'a D, Output = D> + Mul<&'a D, Output = D>,
    {
        let mut out = ULaurent::from_terms(f(&self.zero), self.terms.iter().map(|(k, c)| (*k, f(c))));
        out.known_through = self.known_through;
        out
    }

    pub fn try_map<D>(&self, f: impl Fn(&C) -> Result<D>) -> Result<ULaurent<D>>
    where
        D: Coefficient,
        for<'a> &'a D: Add<&'a D, Output = D> + Sub<&'a D, Output = D> + Mul<&'a D, Output = D>,
    {
        let zero = f(&self.zero)?;
        let terms = self.terms.iter().map(|(k, c)| Ok((*k, f(c)?))).collect::<Result<Vec<_>>>()?;
        let mut out = ULaurent::from_terms(zero, terms);
        out.known_through = self.known_through;
        Ok(out)
    }

    fn combine_known(a: Option<i32>, b: Option<i32>) -> Option<i32> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.known_through = Self::combine_known(self.known_through, other.known_through);
        if let Some(kt) = out.known_through {
            out.terms.retain(|&p, _| p <= kt);
        }
        for (k, c) in &other.terms {
            out.add_term(*k, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&rat(-1))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.map(|x| x.scale_by(c));
        out.known_through = self.known_through;
        out
    }

    /// Multiplication by `u^k`.
    pub fn shift(&self, k: i32) -> Self {
        let mut out = Self::zero(self.zero.clone());
        out.known_through = self.known_through.map(|t| t + k);
        for (p, c) in &self.terms {
            out.terms.insert(p + k, c.clone());
        }
        out
    }

    fn known_after_mul(a: &Self, b: &Self) -> Option<i32> {
        let (Some(va), Some(vb)) = (a.valuation(), b.valuation()) else {
            // product with a zero object
            return match (a.known_through, b.known_through) {
                (None, None) => None,
                _ if a.is_zero() && a.is_complete() => None,
                _ if b.is_zero() && b.is_complete() => None,
                (x, y) => Self::combine_known(x, y),
            };
        };
        let from_a = a.known_through.map(|k| k + vb);
        let from_b = b.known_through.map(|k| k + va);
        Self::combine_known(from_a, from_b)
    }

    /// Applies `f` to every pair of coefficients and collects by total power.
    fn convolve<D, E>(&self, other: &ULaurent<D>, zero: E, known: Option<i32>, f: impl Fn(&C, &D) -> E) -> ULaurent<E>
    where
        D: Coefficient,
        for<'a> &'a D: Add<&'a D, Output = D> + Sub<&'a D, Output = D> + Mul<&'a D, Output = D>,
        E: Coefficient,
        for<'a> &'a E: Add<&'a E, Output = E> + Sub<&'a E, Output = E> + Mul<&'a E, Output = E>,
    {
        let mut out = ULaurent::zero(zero);
        out.known_through = known;
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if known.is_some_and(|kt| i + j > kt) {
                    continue;
                }
                out.add_term(i + j, f(a, b));
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let known = Self::known_after_mul(self, other);
        let zero = &self.zero * &other.zero;
        self.convolve::<C, C>(other, zero, known, |a, b| a * b)
    }

    /// Multiplication by a scalar Laurent object in `u`.
    pub fn mul_scalar(&self, f: &ULaurent<Rational>) -> Self {
        let known = match (self.valuation(), f.valuation()) {
            (Some(va), Some(vb)) => {
                Self::combine_known(self.known_through.map(|k| k + vb), f.known_through.map(|k| k + va))
            }
            _ => Self::combine_known(self.known_through, f.known_through),
        };
        self.convolve::<Rational, C>(f, self.zero.clone(), known, |a, c| a.scale_by(c))
    }

    /// Inverse in the Laurent ring. The lowest coefficient must be invertible.
    /// For complete inputs the expansion stops as soon as it provably
    /// terminates; otherwise it is carried through `u^{val + max_terms - 1}`.
    pub fn invert(&self, max_terms: usize) -> Result<Self> {
        let val = self.valuation().ok_or(Error::NotAUnit)?;
        let a: Vec<C> = {
            let top = self.max_power().unwrap();
            (val..=top).map(|k| self.coeff(k)).collect()
        };
        let deg = a.len() - 1;
        let a0_inv = a[0].try_inverse()?;
        let mut b: Vec<C> = vec![a0_inv.clone()];
        // relative to the valuation, the input is known through `kt_rel`
        let kt_rel = self.known_through.map(|k| k - val);
        let limit = match kt_rel {
            Some(k) => max_terms.min((k + 1).max(1) as usize),
            None => max_terms.max(1),
        };
        let mut terminated = deg == 0;
        while !terminated && b.len() < limit {
            let k = b.len();
            let mut acc = self.zero.clone();
            for j in 1..=deg.min(k) {
                acc = &acc + &(&a[j] * &b[k - j]);
            }
            b.push((&a0_inv * &acc).scale_by(&rat(-1)));
            terminated = b.len() > deg && b[b.len() - deg..].iter().all(|c| c.is_zero_coeff());
        }
        let mut out = Self::zero(self.zero.clone());
        for (k, c) in b.iter().enumerate() {
            out.add_term(k as i32 - val, c.clone());
        }
        let known_rel = match (terminated, kt_rel) {
            (true, None) => None,
            (true, Some(k)) => Some(k),
            (false, _) => Some(b.len() as i32 - 1),
        };
        if let Some(k) = known_rel {
            out = out.truncated(k - val);
        }
        Ok(out)
    }

    /// Substitutes `u -> -(1 + u)`, i.e. `q -> 1/q`. Negative powers expand
    /// into infinite series, so the result is then known only through `u^u_cap`.
    pub fn u_substitute_qinv(&self, u_cap: i32) -> Result<Self> {
        if !self.is_complete() {
            return Err(Error::IncompleteLaurent("q -> 1/q substitution needs a complete expansion".into()));
        }
        let mut out = Self::zero(self.zero.clone());
        let mut any_negative = false;
        for (&k, c) in &self.terms {
            let sign = if k.rem_euclid(2) == 0 { rat(1) } else { rat(-1) };
            if k >= 0 {
                for j in 0..=k as u32 {
                    out.add_term(j as i32, c.scale_by(&(&sign * binomial(k as i64, j))));
                }
            } else {
                any_negative = true;
                for j in 0..=u_cap.max(-1) {
                    out.add_term(j, c.scale_by(&(&sign * binomial(k as i64, j as u32))));
                }
            }
        }
        if any_negative {
            out = out.truncated(u_cap);
        }
        Ok(out)
    }

    /// The coefficient of `u^{n+1}`, which equals `-Res_{q=inf} (q-1)^n a(q) dq`.
    pub fn residue_at_infinity(&self, n: i32) -> Result<C> {
        if let Some(kt) = self.known_through {
            if kt < n + 1 {
                return Err(Error::CapExceeded { needed: n + 1, available: kt });
            }
        }
        Ok(self.coeff(n + 1))
    }

    /// Evaluates at `u = u0` (exact, needs a complete object).
    pub fn evaluate_u(&self, u0: &Rational) -> Result<C> {
        if !self.is_complete() {
            return Err(Error::IncompleteLaurent("evaluation needs a complete expansion".into()));
        }
        let mut acc = self.zero.clone();
        for (&k, c) in &self.terms {
            if k < 0 && u0.is_zero() {
                return Err(Error::InvalidArgument("negative power evaluated at u = 0".into()));
            }
            let p = pow_rational(u0, k);
            acc = &acc + &c.scale_by(&p);
        }
        Ok(acc)
    }

    /// Evaluates at `q = q0`, i.e. `u = 1/(q0 - 1)`.
    pub fn evaluate_q(&self, q0: &Rational) -> Result<C> {
        if q0.is_one() {
            return Err(Error::PoleAtOne);
        }
        self.evaluate_u(&(q0 - rat(1)).recip())
    }
}

pub fn pow_rational(x: &Rational, k: i32) -> Rational {
    let base = if k < 0 { x.recip() } else { x.clone() };
    let mut acc = rat(1);
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

/// `2/(1+q)` as a series in `u`: `2u/(1+2u) = sum_k 2(-2)^k u^{k+1}`, known through `u^cap`.
pub fn two_over_one_plus_q(cap: i32) -> ULaurent<Rational> {
    let mut terms = Vec::new();
    let mut c = rat(2);
    for k in 1..=cap.max(0) {
        terms.push((k, c.clone()));
        c *= rat(-2);
    }
    ULaurent::from_terms(rat(0), terms).truncated(cap)
}

/// `1 - q = -u^{-1}`.
pub fn one_minus_q() -> ULaurent<Rational> {
    ULaurent::from_terms(rat(0), [(-1, rat(-1))])
}
