//! Truncated multivariate power series with exact rational coefficients.
//!
//! A [`TruncSeries`] lives in `Q[[Q_1..Q_r, v_0..v_N]]` modulo the ideal of
//! monomials whose total `v`-degree exceeds `cap.v` or whose total `Q`-degree
//! exceeds `cap.q`. The cap is the precision of the value: every coefficient
//! inside it is exact, everything outside it is unknown. Operations propagate
//! the cap honestly, so differentiation lowers it and integration raises it.
//!
//! The second block of variables is generic. The same type carries series in
//! the descendant variables `t_{k,i}` and in Miura coordinates `w`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Exponent vector: the first `nq` entries are Novikov exponents, the rest
/// belong to the coordinate block.
pub type Exponent = Vec<u16>;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(Rational::one(), |acc, k| acc * rat(k))
}

/// Binomial coefficient `C(n, k)` for arbitrary integer `n` and `k >= 0`.
pub fn binomial(n: i64, k: u32) -> Rational {
    let mut acc = Rational::one();
    for j in 0..k as i64 {
        acc = acc * rat(n - j) / rat(j + 1);
    }
    acc
}

/// Precision of a series: coefficients are known for monomials with
/// `v`-degree `<= v` and `Q`-degree `<= q`. Negative values mean nothing is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Cap {
    pub v: i32,
    pub q: i32,
}

impl Cap {
    pub fn new(v: i32, q: i32) -> Self {
        Cap { v, q }
    }

    pub fn min(self, other: Cap) -> Cap {
        Cap { v: self.v.min(other.v), q: self.q.min(other.q) }
    }

    fn admits(&self, dv: i32, dq: i32) -> bool {
        dv <= self.v && dq <= self.q
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries {
    nq: usize,
    nv: usize,
    cap: Cap,
    coeffs: BTreeMap<Exponent, Rational>,
}

impl TruncSeries {
    pub fn zero(nq: usize, nv: usize, cap: Cap) -> Self {
        TruncSeries { nq, nv, cap, coeffs: BTreeMap::new() }
    }

    pub fn one(nq: usize, nv: usize, cap: Cap) -> Self {
        Self::constant(rat(1), nq, nv, cap)
    }

    pub fn constant(c: Rational, nq: usize, nv: usize, cap: Cap) -> Self {
        let mut s = Self::zero(nq, nv, cap);
        s.insert(vec![0; nq + nv], c);
        s
    }

    /// The coordinate `v_i`.
    pub fn var(i: usize, nq: usize, nv: usize, cap: Cap) -> Self {
        assert!(i < nv, "coordinate index {i} out of range");
        let mut e = vec![0; nq + nv];
        e[nq + i] = 1;
        Self::monomial(e, rat(1), nq, nv, cap)
    }

    /// The Novikov variable `Q_{i+1}`.
    pub fn novikov(i: usize, nq: usize, nv: usize, cap: Cap) -> Self {
        assert!(i < nq, "Novikov index {i} out of range");
        let mut e = vec![0; nq + nv];
        e[i] = 1;
        Self::monomial(e, rat(1), nq, nv, cap)
    }

    pub fn monomial(exp: Exponent, c: Rational, nq: usize, nv: usize, cap: Cap) -> Self {
        assert_eq!(exp.len(), nq + nv, "exponent length does not match arity");
        let mut s = Self::zero(nq, nv, cap);
        s.insert(exp, c);
        s
    }

    pub fn from_terms<I>(terms: I, nq: usize, nv: usize, cap: Cap) -> Self
    where
        I: IntoIterator<Item = (Exponent, Rational)>,
    {
        let mut s = Self::zero(nq, nv, cap);
        for (e, c) in terms {
            assert_eq!(e.len(), nq + nv, "exponent length does not match arity");
            s.accumulate(e, c);
        }
        s
    }

    /// Inserts (replacing) a coefficient, dropping it if zero or over the cap.
    fn insert(&mut self, exp: Exponent, c: Rational) {
        if c.is_zero() || !self.in_cap(&exp) {
            self.coeffs.remove(&exp);
        } else {
            self.coeffs.insert(exp, c);
        }
    }

    fn accumulate(&mut self, exp: Exponent, c: Rational) {
        if c.is_zero() || !self.in_cap(&exp) {
            return;
        }
        match self.coeffs.entry(exp) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    fn in_cap(&self, exp: &[u16]) -> bool {
        self.cap.admits(self.v_degree(exp), self.q_degree(exp))
    }

    pub fn v_degree(&self, exp: &[u16]) -> i32 {
        exp[self.nq..].iter().map(|&d| d as i32).sum()
    }

    pub fn q_degree(&self, exp: &[u16]) -> i32 {
        exp[..self.nq].iter().map(|&d| d as i32).sum()
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.nq, self.nv)
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, exp: &[u16]) -> Rational {
        self.coeffs.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&vec![0; self.nq + self.nv])
    }

    /// Smallest total `v`-degree among stored terms (`None` for zero).
    pub fn v_valuation(&self) -> Option<i32> {
        self.coeffs.keys().map(|e| self.v_degree(e)).min()
    }

    /// Largest total `v`-degree among stored terms.
    pub fn v_max_degree(&self) -> Option<i32> {
        self.coeffs.keys().map(|e| self.v_degree(e)).max()
    }

    /// Reduces the precision to `cap` (componentwise minimum with the current one).
    pub fn truncate(&self, cap: Cap) -> Self {
        let cap = self.cap.min(cap);
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (e, c) in &self.coeffs {
            if out.in_cap(e) {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Replaces the recorded precision without dropping terms beyond the old
    /// one. Only valid when the value is known to be exact there, e.g. a
    /// polynomial built from closed-form data.
    pub fn with_cap(&self, cap: Cap) -> Self {
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (e, c) in &self.coeffs {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    /// True if the two values coincide at the smaller of the two caps.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let cap = self.cap.min(other.cap);
        self.truncate(cap).coeffs == other.truncate(cap).coeffs
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch { left: self.arity(), right: other.arity() });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = self.truncate(other.cap);
        for (e, c) in &other.coeffs {
            out.accumulate(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = self.truncate(other.cap);
        for (e, c) in &other.coeffs {
            out.accumulate(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let cap = self.cap.min(other.cap);
        let mut out = Self::zero(self.nq, self.nv, cap);
        if self.is_zero() || other.is_zero() {
            return Ok(out);
        }
        let rhs: Vec<_> = other
            .coeffs
            .iter()
            .map(|(e, c)| (e, c, other.v_degree(e), other.q_degree(e)))
            .collect();
        for (ea, ca) in &self.coeffs {
            let (va, qa) = (self.v_degree(ea), self.q_degree(ea));
            if !cap.admits(va, qa) {
                continue;
            }
            for (eb, cb, vb, qb) in &rhs {
                if !cap.admits(va + vb, qa + qb) {
                    continue;
                }
                let e: Exponent = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                out.accumulate(e, ca * *cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.nq, self.nv, self.cap);
        if c.is_zero() {
            return out;
        }
        for (e, x) in &self.coeffs {
            out.coeffs.insert(e.clone(), x * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nq, self.nv, self.cap);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplicative inverse through the cap.
    pub fn invert(&self) -> Result<Self> {
        let a0 = self.constant_term();
        if a0.is_zero() {
            return Err(Error::NotAUnit);
        }
        // a = a0 (1 + n) with n in the maximal ideal; the geometric series
        // terminates because n raises the total degree.
        let inv0 = a0.recip();
        let n = &self.scale(&inv0) - &Self::one(self.nq, self.nv, self.cap);
        let steps = (self.cap.v.max(0) + self.cap.q.max(0)) as u32;
        let mut term = Self::one(self.nq, self.nv, self.cap);
        let mut acc = term.clone();
        for _ in 0..steps {
            term = -&(&term * &n);
            if term.is_zero() {
                break;
            }
            acc = &acc + &term;
        }
        Ok(acc.scale(&inv0))
    }

    /// Partial derivative in `v_i`; the result is known through `cap.v - 1`.
    pub fn diff_v(&self, i: usize) -> Self {
        let idx = self.nq + i;
        let cap = Cap { v: self.cap.v - 1, q: self.cap.q };
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (e, c) in &self.coeffs {
            if e[idx] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            let k = e2[idx];
            e2[idx] -= 1;
            out.accumulate(e2, c * rat(k as i64));
        }
        out
    }

    /// Partial derivative in `Q_{i+1}`; the result is known through `cap.q - 1`.
    pub fn diff_q(&self, i: usize) -> Self {
        let cap = Cap { v: self.cap.v, q: self.cap.q - 1 };
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (e, c) in &self.coeffs {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            let k = e2[i];
            e2[i] -= 1;
            out.accumulate(e2, c * rat(k as i64));
        }
        out
    }

    /// Antiderivative in `v_i` with zero constant of integration; known through `cap.v + 1`.
    pub fn integrate_v(&self, i: usize) -> Self {
        let idx = self.nq + i;
        let cap = Cap { v: self.cap.v + 1, q: self.cap.q };
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (e, c) in &self.coeffs {
            let mut e2 = e.clone();
            e2[idx] += 1;
            let k = e2[idx];
            out.accumulate(e2, c / rat(k as i64));
        }
        out
    }

    /// Sets `v_i = 0`.
    pub fn restrict_v_zero(&self, i: usize) -> Self {
        let idx = self.nq + i;
        let mut out = Self::zero(self.nq, self.nv, self.cap);
        for (e, c) in &self.coeffs {
            if e[idx] == 0 {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Part of the series independent of every coordinate (a series in `Q` only).
    pub fn q_part(&self) -> Self {
        let mut out = Self::zero(self.nq, self.nv, self.cap);
        for (e, c) in &self.coeffs {
            if self.v_degree(e) == 0 {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Re-embeds the series into a coordinate block of a different size. The
    /// first `min(nv, new_nv)` coordinates are kept; terms in dropped
    /// coordinates must be absent.
    pub fn with_nv(&self, new_nv: usize, cap: Cap) -> Self {
        let mut out = Self::zero(self.nq, new_nv, cap);
        for (e, c) in &self.coeffs {
            let mut e2 = vec![0u16; self.nq + new_nv];
            e2[..self.nq].copy_from_slice(&e[..self.nq]);
            for j in 0..self.nv {
                if e[self.nq + j] != 0 {
                    assert!(j < new_nv, "term depends on a dropped coordinate");
                    e2[self.nq + j] = e[self.nq + j];
                }
            }
            out.accumulate(e2, c.clone());
        }
        out
    }

    /// Substitutes `v_b <- subs[b]`. Every substituted series must share the
    /// Novikov block and have no term of `v`-degree zero, so the result is a
    /// well-defined truncated series in the new coordinate block.
    pub fn compose(&self, subs: &[TruncSeries]) -> Result<Self> {
        if subs.len() != self.nv {
            return Err(Error::ArityMismatch { left: self.arity(), right: (self.nq, subs.len()) });
        }
        let Some(first) = subs.first() else {
            return Ok(self.clone());
        };
        let (nq, nv_new) = first.arity();
        if nq != self.nq {
            return Err(Error::ArityMismatch { left: self.arity(), right: first.arity() });
        }
        let mut cap = Cap { v: i32::MAX, q: self.cap.q };
        let mut min_val = i32::MAX;
        for s in subs {
            if s.arity() != (nq, nv_new) {
                return Err(Error::ArityMismatch { left: first.arity(), right: s.arity() });
            }
            cap = cap.min(s.cap);
            if let Some(val) = s.v_valuation() {
                if val == 0 {
                    return Err(Error::InvalidArgument(
                        "substituted series must vanish at the coordinate origin".into(),
                    ));
                }
                min_val = min_val.min(val);
            }
        }
        // Unknown source terms have v-degree > cap.v and land in degree >= (cap.v + 1) * min_val.
        if min_val != i32::MAX {
            let bound = (self.cap.v.max(-1) as i64 + 1) * min_val as i64 - 1;
            cap.v = cap.v.min(bound.min(i32::MAX as i64) as i32);
        }
        let mut out = Self::zero(nq, nv_new, cap);
        if out.cap.v < 0 || out.cap.q < 0 {
            return Ok(out);
        }
        let mut powers: Vec<Vec<TruncSeries>> =
            subs.iter().map(|s| vec![Self::one(nq, nv_new, cap), s.truncate(cap)]).collect();
        for (e, c) in &self.coeffs {
            let mut term = Self::zero(nq, nv_new, cap);
            let mut qexp = vec![0u16; nq + nv_new];
            qexp[..nq].copy_from_slice(&e[..nq]);
            term.insert(qexp, c.clone());
            for b in 0..self.nv {
                let k = e[nq + b] as usize;
                if k == 0 {
                    continue;
                }
                while powers[b].len() <= k {
                    let next = &powers[b][powers[b].len() - 1] * &powers[b][1];
                    powers[b].push(next);
                }
                term = &term * &powers[b][k];
                if term.is_zero() {
                    break;
                }
            }
            for (e2, c2) in term.coeffs {
                out.accumulate(e2, c2);
            }
        }
        Ok(out)
    }

    /// Substitutes numeric values for the Novikov variables. The result is
    /// exact only if the series is a polynomial in `Q` within its cap.
    pub fn specialize_q(&self, values: &[Rational]) -> Self {
        assert_eq!(values.len(), self.nq);
        let cap = Cap { v: self.cap.v, q: 0 };
        let mut out = Self::zero(0, self.nv, cap);
        for (e, c) in &self.coeffs {
            let mut w = c.clone();
            for (j, x) in values.iter().enumerate() {
                for _ in 0..e[j] {
                    w *= x;
                }
            }
            out.accumulate(e[self.nq..].to_vec(), w);
        }
        out
    }

    pub fn eval_f64(&self, q: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.coeffs {
            let mut m = c.to_f64().unwrap_or(f64::NAN);
            for (j, &d) in e.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                let x = if j < self.nq { q[j] } else { v[j - self.nq] };
                m *= x.powi(d as i32);
            }
            acc += m;
        }
        acc
    }

    /// `exp(self)` for a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::InvalidArgument("exp needs a series without constant term".into()));
        }
        let steps = (self.cap.v.max(0) + self.cap.q.max(0)) as u32;
        let mut term = Self::one(self.nq, self.nv, self.cap);
        let mut acc = term.clone();
        for k in 1..=steps {
            term = (&term * self).scale(&ratio(1, k as i64));
            if term.is_zero() {
                break;
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// `log(1 + self)` for a series with zero constant term.
    pub fn log1p(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::InvalidArgument("log1p needs a series without constant term".into()));
        }
        let steps = (self.cap.v.max(0) + self.cap.q.max(0)) as u32;
        let mut power = Self::one(self.nq, self.nv, self.cap);
        let mut acc = Self::zero(self.nq, self.nv, self.cap);
        for k in 1..=steps {
            power = &power * self;
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = &acc + &power.scale(&ratio(sign, k as i64));
        }
        Ok(acc)
    }

    /// Largest absolute numerator/denominator bit size; a cheap growth monitor.
    pub fn max_bits(&self) -> u64 {
        self.coeffs
            .values()
            .map(|c| c.numer().abs().bits().max(c.denom().bits()))
            .max()
            .unwrap_or(0)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a TruncSeries> for &'a TruncSeries {
            type Output = TruncSeries;
            fn $method(self, rhs: &'a TruncSeries) -> TruncSeries {
                self.$checked(rhs).expect("series arity mismatch")
            }
        }
        impl $tr<TruncSeries> for TruncSeries {
            type Output = TruncSeries;
            fn $method(self, rhs: TruncSeries) -> TruncSeries {
                self.$checked(&rhs).expect("series arity mismatch")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> TruncSeries {
        self.scale(&rat(-1))
    }
}

impl Neg for TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> TruncSeries {
        self.scale(&rat(-1))
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (j, &d) in e.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                let name = if j < self.nq { format!("Q{}", j + 1) } else { format!("v{}", j - self.nq) };
                if d == 1 {
                    write!(f, "*{name}")?;
                } else {
                    write!(f, "*{name}^{d}")?;
                }
            }
        }
        Ok(())
    }
}

/// Renders a monomial such as `Q1*v0^2` (or `1` for the empty monomial).
pub fn format_monomial(exp: &[u16], nq: usize, names: &dyn Fn(usize) -> String) -> String {
    let mut parts = Vec::new();
    for (j, &d) in exp.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let name = if j < nq { format!("Q{}", j + 1) } else { names(j - nq) };
        if d == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{d}"));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// Exact `p/q` rendering used by every table writer.
pub fn format_rational(c: &Rational) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.contains('.') || t.contains('e') || t.contains('E') {
        return Err(Error::Schema(format!("rational '{s}' must be an exact p/q string")));
    }
    t.parse::<Rational>().map_err(|_| Error::Schema(format!("cannot parse rational '{s}'")))
}
