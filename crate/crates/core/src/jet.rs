//! Differential polynomials in the jet variables `∂^k v_i` (`k >= 1`) with
//! truncated power-series coefficients in `(Q, v)`.
//!
//! Dependence on `v_i` itself lives in the coefficients, so `∂` acts on a
//! coefficient by the chain rule `Σ_i (∂_{v_i} c) ∂v_i`. A [`JetPoly`] carries
//! the `v`-precision of its coefficients; every derivative of a coefficient
//! lowers it by one.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::metric::MetricData;
use crate::series::{rat, ratio, Cap, Rational, TruncSeries};

/// A product of jet variables: sorted `(coordinate, order)` factors, with
/// repetition for powers.
pub type JetMonomial = Vec<(u16, u16)>;

fn mono_mul(a: &[(u16, u16)], b: &[(u16, u16)]) -> JetMonomial {
    let mut out: JetMonomial = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetPoly {
    nq: usize,
    nv: usize,
    cap: Cap,
    terms: BTreeMap<JetMonomial, TruncSeries>,
}

impl JetPoly {
    pub fn zero(nq: usize, nv: usize, cap: Cap) -> Self {
        JetPoly { nq, nv, cap, terms: BTreeMap::new() }
    }

    /// The jet-free polynomial with the given coefficient.
    pub fn from_series(c: &TruncSeries) -> Self {
        let mut p = Self::zero(c.nq(), c.nv(), c.cap());
        p.accumulate(Vec::new(), c.clone());
        p
    }

    pub fn constant(c: Rational, nq: usize, nv: usize, cap: Cap) -> Self {
        Self::from_series(&TruncSeries::constant(c, nq, nv, cap))
    }

    /// `∂^k v_i` for `k >= 1`; `k = 0` gives the coordinate `v_i` as a coefficient.
    pub fn jet(i: usize, k: u16, nq: usize, nv: usize, cap: Cap) -> Self {
        if k == 0 {
            return Self::from_series(&TruncSeries::var(i, nq, nv, cap));
        }
        Self::monomial(vec![(i as u16, k)], TruncSeries::one(nq, nv, cap))
    }

    pub fn monomial(mut m: JetMonomial, c: TruncSeries) -> Self {
        assert!(m.iter().all(|&(_, k)| k >= 1), "jet order 0 belongs in the coefficient");
        m.sort_unstable();
        let mut p = Self::zero(c.nq(), c.nv(), c.cap());
        p.accumulate(m, c);
        p
    }

    fn accumulate(&mut self, m: JetMonomial, c: TruncSeries) {
        let c = c.truncate(self.cap);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                let next = slot.get() + &c;
                if next.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = next;
                }
            }
        }
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.nq, self.nv)
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&JetMonomial, &TruncSeries)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[(u16, u16)]) -> TruncSeries {
        self.terms.get(m).cloned().unwrap_or_else(|| TruncSeries::zero(self.nq, self.nv, self.cap))
    }

    pub fn jet_free_part(&self) -> TruncSeries {
        self.coeff(&[])
    }

    pub fn is_jet_free(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    /// Largest jet order present (0 for jet-free polynomials).
    pub fn max_order(&self) -> u16 {
        self.terms.keys().flat_map(|m| m.iter().map(|&(_, k)| k)).max().unwrap_or(0)
    }

    /// True if every term carries exactly one jet factor, of order one.
    pub fn is_hydrodynamic(&self) -> bool {
        self.terms.keys().all(|m| m.len() == 1 && m[0].1 == 1)
    }

    pub fn truncate(&self, cap: Cap) -> Self {
        let cap = self.cap.min(cap);
        let mut out = Self::zero(self.nq, self.nv, cap);
        for (m, c) in &self.terms {
            out.accumulate(m.clone(), c.clone());
        }
        out
    }

    /// True if the two agree at the smaller precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let cap = self.cap.min(other.cap);
        self.truncate(cap) == other.truncate(cap)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch { left: self.arity(), right: other.arity() });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.truncate(other.cap);
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.truncate(other.cap);
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.nq, self.nv, self.cap.min(other.cap));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.accumulate(mono_mul(ma, mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.nq, self.nv, self.cap);
        for (m, x) in &self.terms {
            out.accumulate(m.clone(), x.scale(c));
        }
        out
    }

    pub fn mul_series(&self, c: &TruncSeries) -> Self {
        let mut out = Self::zero(self.nq, self.nv, self.cap.min(c.cap()));
        for (m, x) in &self.terms {
            out.accumulate(m.clone(), x * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(rat(1), self.nq, self.nv, self.cap);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn lowered(&self, by: i32) -> Cap {
        Cap { v: self.cap.v - by, q: self.cap.q }
    }

    /// The total `x`-derivative.
    pub fn total_derivative(&self) -> Self {
        let mut out = Self::zero(self.nq, self.nv, self.lowered(1));
        for (m, c) in &self.terms {
            for i in 0..self.nv {
                let dc = c.diff_v(i);
                if !dc.is_zero() {
                    out.accumulate(mono_mul(m, &[(i as u16, 1)]), dc);
                }
            }
            for idx in 0..m.len() {
                if idx > 0 && m[idx] == m[idx - 1] {
                    continue;
                }
                let mult = m.iter().filter(|f| **f == m[idx]).count() as i64;
                let mut rest = m.clone();
                let (i, k) = rest.remove(idx);
                rest.push((i, k + 1));
                rest.sort_unstable();
                out.accumulate(rest, c.scale(&rat(mult)));
            }
        }
        out
    }

    /// `∂^n` applied `n` times.
    pub fn total_derivative_n(&self, n: u16) -> Self {
        (0..n).fold(self.clone(), |acc, _| acc.total_derivative())
    }

    /// Partial derivative in the jet variable `∂^k v_i`; `k = 0` differentiates
    /// the coefficients in `v_i`.
    pub fn diff_jet(&self, i: usize, k: u16) -> Self {
        if k == 0 {
            let mut out = Self::zero(self.nq, self.nv, self.lowered(1));
            for (m, c) in &self.terms {
                out.accumulate(m.clone(), c.diff_v(i));
            }
            return out;
        }
        let var = (i as u16, k);
        let mut out = Self::zero(self.nq, self.nv, self.cap);
        for (m, c) in &self.terms {
            let mult = m.iter().filter(|f| **f == var).count();
            if mult == 0 {
                continue;
            }
            let mut rest = m.clone();
            let pos = rest.iter().position(|f| *f == var).unwrap();
            rest.remove(pos);
            out.accumulate(rest, c.scale(&rat(mult as i64)));
        }
        out
    }

    /// The Euler-Lagrange operator `δ/δv_i = Σ_ℓ (-∂)^ℓ ∂/∂(∂^ℓ v_i)`.
    pub fn variational_derivative(&self, i: usize) -> Self {
        let mut acc = self.diff_jet(i, 0);
        for l in 1..=self.max_order() {
            let mut term = self.diff_jet(i, l);
            for _ in 0..l {
                term = -&term.total_derivative();
            }
            acc = &acc + &term;
        }
        acc
    }

    /// `true` iff every variational derivative vanishes (at the precision it
    /// carries) and there is no jet-free part: the density is a total derivative.
    pub fn is_exact(&self) -> bool {
        self.jet_free_part().is_zero() && (0..self.nv).all(|i| self.variational_derivative(i).is_zero())
    }

    /// Constructs `w` with `∂w = self` (at the precision of the result) by
    /// integrating out the highest-order jets, or `None` if the density is
    /// not a total derivative.
    pub fn exactness_witness(&self) -> Option<JetPoly> {
        let mut rest = self.clone();
        let mut witness = Self::zero(self.nq, self.nv, Cap { v: self.cap.v + 1, q: self.cap.q });
        loop {
            if rest.is_zero() {
                return Some(witness.truncate(Cap { v: rest.cap.v + 1, q: rest.cap.q }));
            }
            let top = rest.max_order();
            if top == 0 {
                return None;
            }
            let w_top = rest.integrate_top_order(top)?;
            let next = &rest - &w_top.total_derivative();
            if next.max_order() >= top && !next.is_zero() {
                return None;
            }
            witness = &witness + &w_top;
            rest = next;
        }
    }

    /// For `p = Σ_i A_i ∂^K v_i + B` with `A_i, B` free of order-`K` jets,
    /// returns `Σ_i ∫_0^1 A_i(λy) y_i dλ` where `y = ∂^{K-1} v`.
    fn integrate_top_order(&self, top: u16) -> Option<JetPoly> {
        let mut out = if top == 1 {
            Self::zero(self.nq, self.nv, Cap { v: self.cap.v + 1, q: self.cap.q })
        } else {
            Self::zero(self.nq, self.nv, self.cap)
        };
        for (m, c) in &self.terms {
            let count = m.iter().filter(|&&(_, k)| k == top).count();
            if count == 0 {
                continue;
            }
            if count > 1 {
                return None;
            }
            let pos = m.iter().position(|&(_, k)| k == top).unwrap();
            let i = m[pos].0 as usize;
            let mut a = m.clone();
            a.remove(pos);
            if top == 1 {
                // y = v: integrate inside the coefficient, monomial of degree d gets 1/(d+1)
                let mut w = TruncSeries::zero(self.nq, self.nv, Cap { v: c.cap().v + 1, q: c.cap().q });
                for (e, x) in c.terms() {
                    let d = c.v_degree(e) as i64;
                    let mut e2 = e.clone();
                    e2[self.nq + i] += 1;
                    w = &w + &TruncSeries::monomial(e2, x * ratio(1, d + 1), self.nq, self.nv, w.cap());
                }
                out.accumulate(a, w);
            } else {
                let d = a.iter().filter(|&&(_, k)| k == top - 1).count() as i64;
                let mut a2 = a.clone();
                a2.push((i as u16, top - 1));
                a2.sort_unstable();
                out.accumulate(a2, c.scale(&ratio(1, d + 1)));
            }
        }
        Some(out)
    }

    /// Substitutes the coordinates: coefficients are composed with
    /// `v = v_of_w` and every jet `∂^k v_b` is replaced by `jet_image(b, k)`.
    pub fn substitute(&self, v_of_w: &[TruncSeries], jet_image: &dyn Fn(usize, u16) -> JetPoly) -> Result<JetPoly> {
        let first = v_of_w.first().ok_or_else(|| Error::InvalidArgument("empty substitution".into()))?;
        let (nq, nv) = first.arity();
        let cap = v_of_w.iter().map(|s| s.cap()).fold(self.cap, Cap::min);
        let mut out = Self::zero(nq, nv, cap);
        let mut images: BTreeMap<(u16, u16), JetPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let c2 = c.compose(v_of_w)?;
            let mut term = JetPoly::from_series(&c2);
            for &(b, k) in m {
                let img = images.entry((b, k)).or_insert_with(|| jet_image(b as usize, k));
                term = &term * img;
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Numeric value at a point of the jet space.
    pub fn eval_f64(&self, q: &[f64], v: &[f64], jet: &dyn Fn(usize, u16) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(c.eval_f64(q, v), |acc, &(b, k)| acc * jet(b as usize, k)))
            .sum()
    }
}

pub fn format_jet_monomial(m: &[(u16, u16)]) -> String {
    if m.is_empty() {
        return "1".to_string();
    }
    let mut parts: Vec<String> = Vec::new();
    let mut idx = 0;
    while idx < m.len() {
        let f = m[idx];
        let n = m[idx..].iter().take_while(|g| **g == f).count();
        let base = if f.1 == 1 { format!("∂v{}", f.0) } else { format!("∂^{}v{}", f.1, f.0) };
        parts.push(if n == 1 { base } else { format!("({base})^{n}") });
        idx += n;
    }
    parts.join("·")
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, c)| format!("({c})·{}", format_jet_monomial(m))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a JetPoly> for &'a JetPoly {
            type Output = JetPoly;
            fn $method(self, rhs: &'a JetPoly) -> JetPoly {
                self.$checked(rhs).expect("jet polynomial arity mismatch")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &JetPoly {
    type Output = JetPoly;
    fn neg(self) -> JetPoly {
        self.scale(&rat(-1))
    }
}

/// A class in `𝒜/∂𝒜`, represented by a density.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFunctional {
    pub density: JetPoly,
}

impl LocalFunctional {
    pub fn new(density: JetPoly) -> Self {
        LocalFunctional { density }
    }

    pub fn variational_derivative(&self, i: usize) -> JetPoly {
        self.density.variational_derivative(i)
    }

    /// Equality in the quotient: the difference of densities is a total derivative.
    pub fn equivalent(&self, other: &Self) -> bool {
        (&self.density - &other.density).is_exact()
    }
}

/// An evolutionary vector field `v_a -> P_a(v, ∂v, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub components: Vec<JetPoly>,
    pub label: Option<(usize, usize)>,
}

impl Flow {
    pub fn new(components: Vec<JetPoly>) -> Self {
        Flow { components, label: None }
    }

    pub fn labelled(components: Vec<JetPoly>, n: usize, i: usize) -> Self {
        Flow { components, label: Some((n, i)) }
    }

    pub fn zero(nq: usize, nv: usize, cap: Cap) -> Self {
        Flow::new(vec![JetPoly::zero(nq, nv, cap); nv])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn cap(&self) -> Cap {
        self.components.iter().map(|c| c.cap()).reduce(Cap::min).expect("empty flow")
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn is_hydrodynamic(&self) -> bool {
        self.components.iter().all(|c| c.is_hydrodynamic())
    }

    pub fn truncate(&self, cap: Cap) -> Flow {
        Flow { components: self.components.iter().map(|c| c.truncate(cap)).collect(), label: self.label }
    }

    pub fn agrees_with(&self, other: &Flow) -> bool {
        self.dim() == other.dim() && self.components.iter().zip(&other.components).all(|(a, b)| a.agrees_with(b))
    }

    pub fn add(&self, other: &Flow) -> Flow {
        Flow::new(self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Flow) -> Flow {
        Flow::new(self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &Rational) -> Flow {
        Flow::new(self.components.iter().map(|a| a.scale(c)).collect())
    }

    /// The prolonged evolutionary derivation `D_f(p) = Σ_{b,k} ∂p/∂(∂^k v_b) ∂^k f_b`.
    pub fn derive(&self, p: &JetPoly) -> JetPoly {
        let (nq, nv) = p.arity();
        let mut acc = JetPoly::zero(nq, nv, p.cap());
        let top = p.max_order();
        for (b, fb) in self.components.iter().enumerate() {
            let mut dkf = fb.clone();
            for k in 0..=top {
                if k > 0 {
                    dkf = dkf.total_derivative();
                }
                acc = &acc + &(&p.diff_jet(b, k) * &dkf);
            }
        }
        acc
    }

    /// Commutator of evolutionary derivations: `[D_f, D_g] v = D_f(g) - D_g(f)`.
    pub fn commutator(&self, other: &Flow) -> Flow {
        Flow::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(f, g)| &self.derive(g) - &other.derive(f))
                .collect(),
        )
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, c) in self.components.iter().enumerate() {
            writeln!(f, "∂_t v{a} = {c}")?;
        }
        Ok(())
    }
}

/// The Dubrovin-Novikov operator `A^{ij} = G^{ij}∂ - Σ_{s,k} G^{is}Γ^j_{sk} ∂v_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonOperator {
    g_inv: Vec<Vec<TruncSeries>>,
    /// `b[i][j][k] = Σ_s G^{is} Γ^j_{sk}`.
    b: Vec<Vec<Vec<TruncSeries>>>,
}

pub fn poisson_operator(metric: &MetricData) -> PoissonOperator {
    let n = metric.dim();
    let g_inv: Vec<Vec<TruncSeries>> =
        (0..n).map(|i| (0..n).map(|j| metric.g_inv.get(i, j).clone()).collect()).collect();
    let zero = metric.g_inv.get(0, 0).scale(&rat(0));
    let b = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (0..n).fold(zero.clone(), |acc, s| &acc + &(&g_inv[i][s] * metric.gamma(j, s, k)))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    PoissonOperator { g_inv, b }
}

impl PoissonOperator {
    pub fn dim(&self) -> usize {
        self.g_inv.len()
    }

    pub fn apply(&self, i: usize, j: usize, f: &JetPoly) -> JetPoly {
        let (nq, nv) = f.arity();
        let cap = f.cap();
        let mut acc = f.total_derivative().mul_series(&self.g_inv[i][j]);
        for k in 0..self.dim() {
            let dv = JetPoly::jet(k, 1, nq, nv, cap);
            acc = &acc - &(&dv * f).mul_series(&self.b[i][j][k]);
        }
        acc
    }

    /// `X_H(v_i) = Σ_j A^{ij} δH/δv_j`.
    pub fn hamiltonian_derivation(&self, h: &LocalFunctional) -> Flow {
        let grads: Vec<JetPoly> = (0..self.dim()).map(|j| h.variational_derivative(j)).collect();
        let comps = (0..self.dim())
            .map(|i| {
                let mut acc = self.apply(i, 0, &grads[0]);
                for (j, gj) in grads.iter().enumerate().skip(1) {
                    acc = &acc + &self.apply(i, j, gj);
                }
                acc
            })
            .collect();
        Flow::new(comps)
    }

    /// Density of `{h1, h2} = ∫ Σ δh1/δv_i A^{ij} δh2/δv_j`.
    pub fn bracket(&self, h1: &LocalFunctional, h2: &LocalFunctional) -> LocalFunctional {
        let x2 = self.hamiltonian_derivation(h2);
        let mut acc: Option<JetPoly> = None;
        for i in 0..self.dim() {
            let term = &h1.variational_derivative(i) * &x2.components[i];
            acc = Some(match acc {
                None => term,
                Some(a) => &a + &term,
            });
        }
        LocalFunctional::new(acc.expect("positive dimension"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(d: i32) -> Cap {
        Cap::new(d, 0)
    }

    fn v(d: i32) -> JetPoly {
        JetPoly::jet(0, 0, 0, 1, cap(d))
    }

    fn vx(d: i32) -> JetPoly {
        JetPoly::jet(0, 1, 0, 1, cap(d))
    }

    #[test]
    fn total_derivative_examples() {
        let d = 6;
        assert!(v(d).total_derivative().agrees_with(&vx(d)));
        let p = &v(d) * &vx(d);
        let want = &vx(d).pow(2) + &(&v(d) * &JetPoly::jet(0, 2, 0, 1, cap(d)));
        assert!(p.total_derivative().agrees_with(&want));
        assert!(JetPoly::constant(rat(3), 0, 1, cap(d)).total_derivative().is_zero());
    }

    #[test]
    fn variational_derivative_examples() {
        let d = 6;
        let half_vx2 = vx(d).pow(2).scale(&ratio(1, 2));
        let want = -&JetPoly::jet(0, 2, 0, 1, cap(d));
        assert!(half_vx2.variational_derivative(0).agrees_with(&want));
        let cubic = v(d).pow(3).scale(&ratio(1, 6));
        assert!(cubic.variational_derivative(0).agrees_with(&v(d).pow(2).scale(&ratio(1, 2))));
    }

    #[test]
    fn exactness_examples() {
        let d = 6;
        let p = &vx(d) * &v(d);
        assert!(p.is_exact());
        let w = p.exactness_witness().expect("witness");
        assert!(w.total_derivative().agrees_with(&p));
        assert!(!v(d).is_exact());
        assert!(v(d).exactness_witness().is_none());
        assert!(!(&vx(d).pow(2) * &v(d)).is_exact());
    }

    #[test]
    fn point_poisson_operator() {
        use crate::metric::metric;
        use crate::model::FrobeniusModel;
        use crate::smatrix::solve_s;
        let d = 8;
        let pt = FrobeniusModel::point();
        let s = solve_s(&pt, cap(d), 8).unwrap();
        let md = metric(&pt, &s).unwrap();
        let a = poisson_operator(&md);
        // A(f) = e^{-v}∂f - ½ e^{-v} ∂v f
        let e_minus_v = TruncSeries::var(0, 0, 1, cap(d)).scale(&rat(-1)).exp().unwrap();
        let f = v(d).pow(2);
        let want = &f.total_derivative().mul_series(&e_minus_v) - &(&vx(d) * &f).mul_series(&e_minus_v.scale(&ratio(1, 2)));
        assert!(a.apply(0, 0, &f).agrees_with(&want));
        let one = JetPoly::constant(rat(1), 0, 1, cap(d));
        assert!(a.apply(0, 0, &one).agrees_with(&(-&vx(d)).mul_series(&e_minus_v.scale(&ratio(1, 2)))));
    }
}
