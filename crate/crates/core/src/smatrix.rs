//! The fundamental solution `S(v, q) = 1 + Σ_n S_n(v) u^n` of the quantum
//! differential equations, the J-function and the one-point correlators.

use crate::error::{Error, Result};
use crate::laurent::{one_minus_q, ULaurent};
use crate::matrix::SeriesMatrix;
use crate::model::FrobeniusModel;
use crate::report::{describe_matrix_residual, Report};
use crate::series::{rat, Cap, Rational, TruncSeries};

/// Solved coefficients `S_0 = Id, S_1, S_2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct SMatrix {
    s: Vec<SeriesMatrix>,
    complete: bool,
    cap: Cap,
}

impl SMatrix {
    /// `S_n`; zero beyond the last nonzero order when the expansion is complete.
    pub fn get(&self, n: usize) -> Result<SeriesMatrix> {
        if let Some(m) = self.s.get(n) {
            return Ok(m.clone());
        }
        if self.complete {
            return Ok(self.s[0].map(|e| TruncSeries::zero(e.nq(), e.nv(), self.cap)));
        }
        Err(Error::OrderExceedsSolved { requested: n, available: self.s.len() - 1 })
    }

    /// Number of stored orders (`S_0` included).
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn orders(&self) -> &[SeriesMatrix] {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s[0].rows()
    }

    /// `S(v, q)` as a Laurent object in `u`.
    pub fn as_laurent(&self) -> ULaurent<SeriesMatrix> {
        let zero = self.get(self.s.len()).unwrap_or_else(|_| self.s[0].scale(&rat(0)));
        let out = ULaurent::from_terms(zero, self.s.iter().enumerate().map(|(n, m)| (n as i32, m.clone())));
        if self.complete {
            out
        } else {
            out.truncated(self.s.len() as i32 - 1)
        }
    }

    /// Composes every `S_n` with a coordinate substitution `v <- subs`.
    pub fn compose(&self, subs: &[TruncSeries]) -> Result<SMatrix> {
        let s = self.s.iter().map(|m| m.compose(subs)).collect::<Result<Vec<_>>>()?;
        let cap = s[0].cap();
        Ok(SMatrix { s, complete: self.complete, cap })
    }
}

/// Solves `∂_{v_i} S_{n+1} = Ω_i S_n` order by order, integrating along the
/// staircase path from the origin with constants `S_n(0)` from the model.
/// Solving continues past `n_u` until the expansion provably terminates.
pub fn solve_s(model: &FrobeniusModel, cap: Cap, n_u: usize) -> Result<SMatrix> {
    if n_u == 0 {
        return Err(Error::InvalidArgument("N_u must be at least 1".into()));
    }
    let (nq, nv) = model.arity();
    let omegas = model.omegas(cap);
    let cap = omegas.iter().map(|o| o.cap()).fold(cap, Cap::min);
    let mut s = vec![SeriesMatrix::identity(model.dim, nq, nv, cap)];
    let bound = n_u.max(model.s_origin_len()) + (cap.v.max(0) as usize + 1) * (cap.q.max(0) as usize + 1) + 2;
    let mut complete = false;
    while s.len() <= bound {
        let n = s.len() - 1;
        let prev = &s[n];
        if prev.is_zero() && n > model.s_origin_len() && n >= 1 {
            complete = true;
            s.pop();
            break;
        }
        let rhs: Vec<SeriesMatrix> = omegas.iter().map(|o| o * prev).collect();
        let mut next = model.s_origin(n + 1, cap);
        for i in 0..nv {
            let mut r = rhs[i].clone();
            for j in (i + 1)..nv {
                r = r.map(|e| e.restrict_v_zero(j));
            }
            next = &next + &r.integrate_v(i);
        }
        let next = next.truncate(cap);
        for (i, r) in rhs.iter().enumerate() {
            let residual = &next.diff_v(i) - r;
            if !residual.is_zero() {
                return Err(Error::IncompatibleSystem {
                    order: n + 1,
                    detail: format!("∂_{i}S_{} - Ω_{i}S_{n}: {}", n + 1, describe_matrix_residual(&residual)),
                });
            }
        }
        s.push(next);
    }
    if s.len() <= n_u && !complete {
        return Err(Error::OrderExceedsSolved { requested: n_u, available: s.len() - 1 });
    }
    Ok(SMatrix { s, complete, cap })
}

/// QDE residuals `∂_i S_{n+1} - Ω_i S_n` for every stored order.
pub fn qde_report(model: &FrobeniusModel, s: &SMatrix) -> Report {
    let mut r = Report::new("quantum differential equations");
    let omegas = model.omegas(s.cap);
    let mut ok = true;
    let mut detail = format!("orders 0..{}, residual cap v={}", s.len().saturating_sub(1), s.cap.v - 1);
    for n in 0..s.len() {
        let next = s.get(n + 1).expect("complete or stored");
        for (i, o) in omegas.iter().enumerate() {
            let res = &next.diff_v(i) - &(o * &s.s[n]);
            if !res.is_zero() && ok {
                ok = false;
                detail = format!("order {n}, direction {i}: {}", describe_matrix_residual(&res));
            }
        }
    }
    r.push("QDE residual ∂_iS_{n+1} = Ω_iS_n", ok, detail);
    let mut origin_ok = true;
    for n in 1..s.len() {
        let at0 = s.s[n].map(|e| (0..e.nv()).fold(e.clone(), |acc, j| acc.restrict_v_zero(j)));
        if at0 != model.s_origin(n, s.cap) {
            origin_ok = false;
        }
    }
    r.push("S_n(0) matches the model normalization", origin_ok, "");
    r
}

/// `S(v, q0)` for a rational `q0 != 1`.
pub fn evaluate_s_at_q(s: &SMatrix, q0: &Rational) -> Result<SeriesMatrix> {
    if !s.complete {
        return Err(Error::IncompleteLaurent("S is not known to terminate; cannot evaluate".into()));
    }
    s.as_laurent().evaluate_q(q0)
}

/// `S(v, q)^{-1}` in the `u`-ring.
pub fn s_inverse(s: &SMatrix) -> Result<ULaurent<SeriesMatrix>> {
    let max_terms = 2 * s.len() + 2 * (s.cap.v.max(0) as usize + 1) * (s.cap.q.max(0) as usize + 1) + 4;
    s.as_laurent().invert(max_terms)
}

/// `J(v, q) = (1 - q) S(v, q)^{-1} 1` as a column in the basis `Φ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct JFunction {
    pub j: ULaurent<SeriesMatrix>,
}

impl JFunction {
    /// Components `g(Φ_i, J)`, i.e. the coordinates in the dual basis `Φ^i`.
    pub fn dual_components(&self, model: &FrobeniusModel) -> ULaurent<SeriesMatrix> {
        let cap = self.j.zero_coeff().cap();
        let g = model.g_matrix(cap);
        self.j.map(|c| &g * c)
    }
}

pub fn j_function(model: &FrobeniusModel, s: &SMatrix) -> Result<JFunction> {
    let inv = s_inverse(s)?;
    let unit = model.unit_column(s.cap);
    let col = inv.map(|m| m * &unit);
    Ok(JFunction { j: col.mul_scalar(&one_minus_q()) })
}

/// `J(v, 0)` as a column.
pub fn j_at_zero(model: &FrobeniusModel, s: &SMatrix) -> Result<SeriesMatrix> {
    let s0 = evaluate_s_at_q(s, &rat(0))?;
    Ok(&s0.inverse()? * &model.unit_column(s.cap))
}

/// `⟨Φ_i / (1 - qL)⟩_{0,1}(v) = g(Φ_i, J - (1 - q) - v)` in the `u`-ring.
pub fn one_point_correlator(model: &FrobeniusModel, jf: &JFunction, i: usize) -> ULaurent<TruncSeries> {
    let cap = jf.j.zero_coeff().cap();
    let (nq, nv) = model.arity();
    let unit = model.unit_column(cap);
    let v = SeriesMatrix::column((0..nv).map(|a| TruncSeries::var(a, nq, nv, cap)).collect());
    let shift = ULaurent::from_terms(v.scale(&rat(0)), [(-1, unit.scale(&rat(-1))), (0, v)]);
    let rest = jf.j.sub(&shift);
    let g = model.g_matrix(cap);
    rest.map(|c| (&g * c).get(i, 0).clone())
}

/// The same correlator with `q` replaced by `q^{-1}`.
pub fn one_point_correlator_qinv(model: &FrobeniusModel, jf: &JFunction, i: usize, u_cap: i32) -> Result<ULaurent<TruncSeries>> {
    one_point_correlator(model, jf, i).u_substitute_qinv(u_cap)
}

/// Checks `g S(v, q^{-1})^{-1} = S(v, q)^T G` coefficientwise through `u^u_cap`,
/// together with its `q = 0` slice `g = G S(v, 0)`.
pub fn check_symplectic(model: &FrobeniusModel, s: &SMatrix, metric_g: &SeriesMatrix, u_cap: i32) -> Result<Report> {
    let mut r = Report::new("symplectic property of S");
    let cap = s.cap;
    let g = model.g_matrix(cap);
    let s_qinv = s.as_laurent().u_substitute_qinv(u_cap)?;
    let max_terms = (u_cap.max(0) as usize) + 2 * s.len() + 4;
    let lhs = s_qinv.invert(max_terms)?.map(|m| &g * m);
    let rhs = s.as_laurent().map(|m| &m.transpose() * metric_g);
    let mut ok = true;
    let mut detail = format!("u^0..u^{u_cap}");
    for k in 0..=u_cap {
        let d = &lhs.coeff(k) - &rhs.coeff(k);
        if !d.is_zero() && ok {
            ok = false;
            detail = format!("u^{k}: {}", describe_matrix_residual(&d));
        }
    }
    r.push("g S(q^-1)^-1 = S(q)^T G", ok, detail);
    let s0 = evaluate_s_at_q(s, &rat(0))?;
    let d = &(metric_g * &s0) - &g;
    r.push("g = G S(v,0)", d.is_zero(), describe_matrix_residual(&d));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::factorial;

    fn cap(d: i32) -> Cap {
        Cap::new(d, 0)
    }

    #[test]
    fn point_s_is_exponential() {
        let pt = FrobeniusModel::point();
        let s = solve_s(&pt, cap(10), 8).unwrap();
        assert!(s.is_complete());
        for n in 0..=12u32 {
            let want = TruncSeries::var(0, 0, 1, cap(10)).pow(n).scale(&factorial(n).recip());
            assert_eq!(s.get(n as usize).unwrap().get(0, 0), &want, "n = {n}");
        }
    }

    #[test]
    fn two_points_is_diagonal() {
        let m = FrobeniusModel::two_points();
        let s = solve_s(&m, cap(6), 4).unwrap();
        for n in 0..=4u32 {
            let sn = s.get(n as usize).unwrap();
            for a in 0..2 {
                let want = TruncSeries::var(a, 0, 2, cap(6)).pow(n).scale(&factorial(n).recip());
                assert_eq!(sn.get(a, a), &want);
            }
            assert!(sn.get(0, 1).is_zero() && sn.get(1, 0).is_zero());
        }
    }

    #[test]
    fn point_s_at_zero_is_exp_minus_v() {
        let pt = FrobeniusModel::point();
        let s = solve_s(&pt, cap(8), 8).unwrap();
        let s0 = evaluate_s_at_q(&s, &rat(0)).unwrap();
        let want = TruncSeries::var(0, 0, 1, cap(8)).scale(&rat(-1)).exp().unwrap();
        assert_eq!(s0.get(0, 0), &want);
        assert_eq!(evaluate_s_at_q(&s, &rat(1)), Err(Error::PoleAtOne));
    }

    #[test]
    fn point_j_function() {
        // (1 - q) e^{v/(1-q)} = -u^{-1} e^{-v u}
        let pt = FrobeniusModel::point();
        let d = 7;
        let s = solve_s(&pt, cap(d), 8).unwrap();
        let j = j_function(&pt, &s).unwrap();
        assert!(j.j.is_complete());
        let v = TruncSeries::var(0, 0, 1, cap(d));
        for k in -1..=d {
            let n = (k + 1) as u32;
            let sign = if n.is_multiple_of(2) { -1 } else { 1 };
            let want = v.pow(n).scale(&(factorial(n).recip() * rat(sign)));
            assert_eq!(j.j.coeff(k).get(0, 0), &want, "u^{k}");
        }
        let corr = one_point_correlator(&pt, &j, 0);
        assert_eq!(corr.valuation(), Some(1));
        assert_eq!(corr.coeff(1), v.pow(2).scale(&crate::series::ratio(-1, 2)));
    }

    #[test]
    fn incompatible_data_is_detected() {
        // ∂_0Ω_1 != ∂_1Ω_0 slips past when the check is skipped
        let pt2 = FrobeniusModel::two_points();
        let bad = pt2.with_perturbed_omega(1, vec![1, 0], vec![vec![rat(0), rat(0)], vec![rat(0), rat(1)]]);
        assert!(matches!(solve_s(&bad, cap(4), 3), Err(Error::IncompatibleSystem { .. })));
    }
}
