//! Hamiltonians, flows and the verification predicates of the hierarchy.

use crate::error::{Error, Result};
use crate::jet::{poisson_operator, Flow, JetPoly, LocalFunctional, PoissonOperator};
use crate::laurent::{two_over_one_plus_q, ULaurent};
use crate::linalg;
use crate::matrix::SeriesMatrix;
use crate::metric::{metric, MetricData};
use crate::model::FrobeniusModel;
use crate::report::describe_matrix_residual;
use crate::series::{binomial, rat, Cap, Rational, TruncSeries};
use crate::smatrix::{evaluate_s_at_q, j_function, one_point_correlator_qinv, solve_s, JFunction, SMatrix};

/// Everything derived from a model at a fixed precision.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub model: FrobeniusModel,
    pub s: SMatrix,
    pub metric: MetricData,
    pub j: JFunction,
    pub poisson: PoissonOperator,
}

impl Hierarchy {
    pub fn new(model: FrobeniusModel, cap: Cap, n_u: usize) -> Result<Self> {
        let s = solve_s(&model, cap, n_u)?;
        let metric = metric(&model, &s)?;
        let j = j_function(&model, &s)?;
        let poisson = poisson_operator(&metric);
        Ok(Hierarchy { model, s, metric, j, poisson })
    }

    pub fn cap(&self) -> Cap {
        self.s.cap()
    }

    pub fn flow(&self, n: usize, i: usize) -> Result<Flow> {
        flow(&self.model, &self.s, n, i)
    }

    pub fn hamiltonian(&self, n: usize, i: usize) -> Result<LocalFunctional> {
        hamiltonian_density(&self.model, &self.j, n, i)
    }

    pub fn hamiltonian_flow(&self, n: usize, i: usize) -> Result<Flow> {
        Ok(self.poisson.hamiltonian_derivation(&self.hamiltonian(n, i)?))
    }
}

fn check_index(model: &FrobeniusModel, i: usize) -> Result<()> {
    if i >= model.dim {
        return Err(Error::InvalidArgument(format!("basis index {i} out of range for dimension {}", model.dim)));
    }
    Ok(())
}

/// `P_{n,i} = ∂v • S_n Φ_i`: component `a` is `Σ_ℓ (Ω_ℓ S_n)_{ai} ∂v_ℓ`.
pub fn flow(model: &FrobeniusModel, s: &SMatrix, n: usize, i: usize) -> Result<Flow> {
    check_index(model, i)?;
    let sn = s.get(n)?;
    let cap = s.cap();
    let (nq, nv) = model.arity();
    let omegas = model.omegas(cap);
    let prods: Vec<SeriesMatrix> = omegas.iter().map(|o| o * &sn).collect();
    let comps = (0..model.dim)
        .map(|a| {
            let mut acc = JetPoly::zero(nq, nv, cap);
            for (l, p) in prods.iter().enumerate() {
                acc = &acc + &JetPoly::monomial(vec![(l as u16, 1)], p.get(a, i).clone());
            }
            acc
        })
        .collect();
    Ok(Flow::labelled(comps, n, i))
}

/// The residue definition: the coefficient of `u^{n+1}` in `∂_x(S(v,q)Φ_i)`.
pub fn flow_by_residue(model: &FrobeniusModel, s: &SMatrix, n: usize, i: usize) -> Result<Flow> {
    check_index(model, i)?;
    let c = vector_polynomial_unit(model.dim, i, n);
    let mut f = flow_from_c_residue(model, s, &c)?;
    f.label = Some((n, i));
    Ok(f)
}

/// `H_i(v,q) = (2/(1+q)) (g(v, Φ_i) + ⟨Φ_i/(1 - q^{-1}L)⟩_{0,1}(v))` in the `u`-ring,
/// known through `u^u_cap`.
pub fn hamiltonian_generating(model: &FrobeniusModel, jf: &JFunction, i: usize, u_cap: i32) -> Result<ULaurent<TruncSeries>> {
    check_index(model, i)?;
    let cap = jf.j.zero_coeff().cap();
    let (nq, nv) = model.arity();
    let mut gv = TruncSeries::zero(nq, nv, cap);
    for a in 0..model.dim {
        gv = &gv + &TruncSeries::var(a, nq, nv, cap).scale(&model.pairing_g[a][i]);
    }
    let corr = one_point_correlator_qinv(model, jf, i, u_cap)?;
    let inner = corr.add(&ULaurent::constant(gv));
    Ok(inner.mul_scalar(&two_over_one_plus_q(u_cap)))
}

/// `H_{n,i}`: the coefficient of `u^{n+1}` in `H_i(v,q)`, a jet-free density.
pub fn hamiltonian_density(model: &FrobeniusModel, jf: &JFunction, n: usize, i: usize) -> Result<LocalFunctional> {
    let h = hamiltonian_generating(model, jf, i, n as i32 + 1)?;
    let density = h.residue_at_infinity(n as i32)?;
    Ok(LocalFunctional::new(JetPoly::from_series(&density)))
}

/// True iff `[D_{f1}, D_{f2}] v = 0` at the precision of the commutator.
pub fn check_commute(f1: &Flow, f2: &Flow) -> bool {
    f1.commutator(f2).is_zero()
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvolutionCheck {
    /// The bracket density is a total derivative.
    pub exact: bool,
    /// Precision at which the bracket density was tested.
    pub bracket_cap: Cap,
    /// Sampled witness identity results, per `(q1, q2)`.
    pub witness: Vec<((Rational, Rational), bool)>,
}

impl InvolutionCheck {
    pub fn passed(&self) -> bool {
        self.exact && self.witness.iter().all(|(_, ok)| *ok)
    }
}

pub fn default_involution_samples() -> Vec<(Rational, Rational)> {
    vec![(rat(2), rat(3)), (rat(3), rat(-2)), (crate::series::ratio(1, 2), rat(5))]
}

/// `{H_{n1,i1}, H_{n2,i2}}` is `∂`-exact, plus the sampled identity
/// `S(q2^{-1})^{-1} Ω_ℓ S(q1) = ∂_ℓ(c (S(q2^{-1})^{-1} S(q1) - 1))`,
/// `c = (q1-1)(q2-1)/(q1 q2 - 1)`.
pub fn check_involution(
    h: &Hierarchy,
    (n1, i1): (usize, usize),
    (n2, i2): (usize, usize),
    samples: &[(Rational, Rational)],
) -> Result<InvolutionCheck> {
    let h1 = h.hamiltonian(n1, i1)?;
    let h2 = h.hamiltonian(n2, i2)?;
    let bracket = h.poisson.bracket(&h1, &h2);
    let exact = bracket.density.is_exact();
    let mut witness = Vec::new();
    for (q1, q2) in samples {
        witness.push(((q1.clone(), q2.clone()), involution_witness(&h.model, &h.s, q1, q2)?));
    }
    Ok(InvolutionCheck { exact, bracket_cap: bracket.density.cap(), witness })
}

pub fn involution_witness(model: &FrobeniusModel, s: &SMatrix, q1: &Rational, q2: &Rational) -> Result<bool> {
    let one = rat(1);
    if q1 * q2 == one || q2 == &rat(0) || q1 == &one || q2 == &one {
        return Err(Error::SingularSample { q1: q1.to_string(), q2: q2.to_string() });
    }
    let c = (q1 - &one) * (q2 - &one) / (q1 * q2 - &one);
    let s1 = evaluate_s_at_q(s, q1)?;
    let s2inv = evaluate_s_at_q(s, &q2.recip())?.inverse()?;
    let (nq, nv) = model.arity();
    let prod = &s2inv * &s1;
    let inner = (&prod - &SeriesMatrix::identity(model.dim, nq, nv, s.cap())).scale(&c);
    let omegas = model.omegas(s.cap());
    for (l, o) in omegas.iter().enumerate() {
        let lhs = &(&s2inv * o) * &s1;
        let rhs = inner.diff_v(l);
        if !lhs.agrees_with(&rhs) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A polynomial `C(q) = Σ_k C_k q^k` with coefficients in `K(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPolynomial {
    /// `coeffs[k]` is the vector `C_k` in the basis `Φ_i`.
    pub coeffs: Vec<Vec<Rational>>,
}

impl VectorPolynomial {
    /// Coefficients `D_m` of the expansion `C(q) = Σ_m D_m (q-1)^m`.
    pub fn shifted_coeffs(&self) -> Vec<Vec<Rational>> {
        let dim = self.coeffs.first().map_or(0, |c| c.len());
        let deg = self.coeffs.len();
        (0..deg)
            .map(|m| {
                (0..dim)
                    .map(|i| (m..deg).map(|k| &self.coeffs[k][i] * binomial(k as i64, m as u32)).sum())
                    .collect()
            })
            .collect()
    }
}

/// `Φ_i (q-1)^n` as a [`VectorPolynomial`].
pub fn vector_polynomial_unit(dim: usize, i: usize, n: usize) -> VectorPolynomial {
    // (q-1)^n = Σ_k C(n,k)(-1)^{n-k} q^k
    let coeffs = (0..=n)
        .map(|k| {
            let c = binomial(n as i64, k as u32) * rat(if (n - k).is_multiple_of(2) { 1 } else { -1 });
            (0..dim).map(|a| if a == i { c.clone() } else { rat(0) }).collect()
        })
        .collect();
    VectorPolynomial { coeffs }
}

fn flow_from_c_residue(model: &FrobeniusModel, s: &SMatrix, c: &VectorPolynomial) -> Result<Flow> {
    let cap = s.cap();
    let (nq, nv) = model.arity();
    let d = c.shifted_coeffs();
    let zero_col = SeriesMatrix::zero(model.dim, 1, nq, nv, cap);
    let c_laurent = ULaurent::from_terms(
        zero_col,
        d.iter().enumerate().map(|(m, col)| {
            let entries = col.iter().map(|x| TruncSeries::constant(x.clone(), nq, nv, cap)).collect();
            (-(m as i32), SeriesMatrix::column(entries))
        }),
    );
    let s_laurent = s.as_laurent();
    let mut comps = vec![JetPoly::zero(nq, nv, Cap::new(cap.v - 1, cap.q)); model.dim];
    for l in 0..nv {
        let ds = s_laurent.map(|m| m.diff_v(l));
        let prod = ds.mul(&c_laurent);
        let coeff = prod.residue_at_infinity(0)?;
        for (a, comp) in comps.iter_mut().enumerate() {
            *comp = &*comp + &JetPoly::monomial(vec![(l as u16, 1)], coeff.get(a, 0).clone());
        }
    }
    Ok(Flow::new(comps))
}

/// The residue flow of `C(q)` and its decomposition `Σ D_{m,i} P_{m,i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowFromC {
    pub flow: Flow,
    pub decomposition: Vec<((usize, usize), Rational)>,
}

impl FlowFromC {
    /// Rebuilds the flow from the decomposition and the hierarchy flows.
    pub fn reconstruct(&self, model: &FrobeniusModel, s: &SMatrix) -> Result<Flow> {
        let (nq, nv) = model.arity();
        let mut acc = Flow::zero(nq, nv, s.cap());
        for ((m, i), c) in &self.decomposition {
            acc = acc.add(&flow(model, s, *m, *i)?.scale(c));
        }
        Ok(acc)
    }
}

pub fn flow_from_c(model: &FrobeniusModel, s: &SMatrix, c: &VectorPolynomial) -> Result<FlowFromC> {
    if c.coeffs.iter().any(|v| v.len() != model.dim) {
        return Err(Error::InvalidArgument(format!("C(q) coefficients must have {} components", model.dim)));
    }
    let flow = flow_from_c_residue(model, s, c)?;
    let mut decomposition = Vec::new();
    for (m, col) in c.shifted_coeffs().into_iter().enumerate() {
        for (i, x) in col.into_iter().enumerate() {
            if x != rat(0) {
                decomposition.push(((m, i), x));
            }
        }
    }
    Ok(FlowFromC { flow, decomposition })
}

/// For a jet-free density `f`: `∂²f/∂v_i∂v_a = Σ_k (Ω_i)_{ka} ∂_1 ∂_k f`,
/// where `∂_1` is the derivative along the unit.
pub fn conserved_density_check(model: &FrobeniusModel, f: &JetPoly) -> Result<bool> {
    if !f.is_jet_free() {
        return Err(Error::JetsNotAllowed);
    }
    let f = f.jet_free_part();
    let omegas = model.omegas(f.cap());
    let first: Vec<TruncSeries> = (0..model.dim).map(|k| f.diff_v(k)).collect();
    let mut d_unit_first = Vec::new();
    for fk in &first {
        let mut acc = fk.diff_v(0).scale(&model.unit[0]);
        for m in 1..model.dim {
            acc = &acc + &fk.diff_v(m).scale(&model.unit[m]);
        }
        d_unit_first.push(acc);
    }
    for i in 0..model.dim {
        for a in 0..model.dim {
            let lhs = first[a].diff_v(i);
            let mut rhs = lhs.scale(&rat(0));
            for (k, duk) in d_unit_first.iter().enumerate() {
                rhs = &rhs + &(omegas[i].get(k, a) * duk);
            }
            if !(&lhs - &rhs).is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Inverts `w = M(v)` (with `M(0) = 0`) as a series `v = V(w)`.
pub fn invert_change(change: &[TruncSeries]) -> Result<Vec<TruncSeries>> {
    let n = change.len();
    let first = change.first().ok_or_else(|| Error::InvalidArgument("empty coordinate change".into()))?;
    let (nq, nv) = first.arity();
    if nv != n {
        return Err(Error::InvalidArgument("coordinate change must map N+1 coordinates to N+1".into()));
    }
    for m in change {
        if !m.q_part().is_zero() {
            return Err(Error::InvalidArgument("coordinate change must fix the origin (M(0) = 0)".into()));
        }
    }
    let cap = change.iter().map(|m| m.cap()).reduce(Cap::min).unwrap();
    let lin: Vec<Vec<Rational>> = change
        .iter()
        .map(|m| {
            (0..n)
                .map(|b| {
                    let mut e = vec![0u16; nq + nv];
                    e[nq + b] = 1;
                    m.coeff(&e)
                })
                .collect()
        })
        .collect();
    let lin_inv = linalg::inverse(&lin).map_err(|_| Error::NonInvertibleLinearPart)?;
    let w: Vec<TruncSeries> = (0..n).map(|b| TruncSeries::var(b, nq, nv, cap)).collect();
    let lin_part = |v: &[TruncSeries]| -> Vec<TruncSeries> {
        (0..n)
            .map(|a| (0..n).fold(TruncSeries::zero(nq, nv, cap), |acc, b| &acc + &v[b].scale(&lin[a][b])))
            .collect()
    };
    let apply_inv = |x: &[TruncSeries]| -> Vec<TruncSeries> {
        (0..n)
            .map(|a| (0..n).fold(TruncSeries::zero(nq, nv, cap), |acc, b| &acc + &x[b].scale(&lin_inv[a][b])))
            .collect()
    };
    let mut v = apply_inv(&w);
    for _ in 0..(cap.v.max(0) as usize + 2) {
        // v <- L^{-1}(w - N(v)), N = M - L
        let mv: Vec<TruncSeries> = change.iter().map(|m| m.compose(&v)).collect::<Result<_>>()?;
        let lv = lin_part(&v);
        let nonlin: Vec<TruncSeries> = mv.iter().zip(&lv).map(|(a, b)| a - b).collect();
        let rhs: Vec<TruncSeries> = w.iter().zip(&nonlin).map(|(a, b)| a - b).collect();
        let next = apply_inv(&rhs);
        if next == v {
            break;
        }
        v = next;
    }
    Ok(v)
}

/// Pushes an evolutionary flow forward along `w = M(v)`:
/// `∂_t w_a = Σ_b (∂M_a/∂v_b)(V(w)) P_b(V(w), ∂V(w), ...)`.
pub fn miura_push(flow: &Flow, change: &[TruncSeries]) -> Result<Flow> {
    let v_of_w = invert_change(change)?;
    let n = change.len();
    let jets: Vec<JetPoly> = v_of_w.iter().map(JetPoly::from_series).collect();
    let image = |b: usize, k: u16| jets[b].total_derivative_n(k);
    let pushed: Vec<JetPoly> = flow.components.iter().map(|p| p.substitute(&v_of_w, &image)).collect::<Result<_>>()?;
    let comps = (0..n)
        .map(|a| {
            let mut acc: Option<JetPoly> = None;
            for (b, pb) in pushed.iter().enumerate() {
                let jac = change[a].diff_v(b).compose(&v_of_w)?;
                let term = pb.mul_series(&jac);
                acc = Some(match acc {
                    None => term,
                    Some(x) => &x + &term,
                });
            }
            Ok(acc.expect("positive dimension"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Flow { components: comps, label: flow.label })
}

/// Residual of `∂_i S_{n+1} = Ω_i S_n` in the form of a message, for reports.
pub fn qde_residual_message(model: &FrobeniusModel, s: &SMatrix, n: usize) -> Result<String> {
    let omegas = model.omegas(s.cap());
    let next = s.get(n + 1)?;
    let sn = s.get(n)?;
    for (i, o) in omegas.iter().enumerate() {
        let r = &next.diff_v(i) - &(o * &sn);
        if !r.is_zero() {
            return Ok(describe_matrix_residual(&r));
        }
    }
    Ok("zero".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{factorial, ratio};

    fn pt(d: i32) -> Hierarchy {
        Hierarchy::new(FrobeniusModel::point(), Cap::new(d, 0), 8).unwrap()
    }

    #[test]
    fn point_flows_are_dispersionless_kdv() {
        let h = pt(10);
        for n in 0..=6u32 {
            let f = h.flow(n as usize, 0).unwrap();
            let c = TruncSeries::var(0, 0, 1, Cap::new(10, 0)).pow(n).scale(&factorial(n).recip());
            let want = JetPoly::monomial(vec![(0, 1)], c);
            assert_eq!(f.components[0], want);
            let r = flow_by_residue(&h.model, &h.s, n as usize, 0).unwrap();
            assert!(r.agrees_with(&f));
            assert_eq!(r.cap().v, 9);
        }
    }

    #[test]
    fn point_hamiltonian_reproduces_flow() {
        let h = pt(10);
        for n in 0..=4 {
            let x = h.hamiltonian_flow(n, 0).unwrap();
            let f = h.flow(n, 0).unwrap();
            assert!(x.agrees_with(&f), "n = {n}: {x} vs {f}");
            assert!(x.cap().v >= 8);
        }
    }

    #[test]
    fn point_witness_identity() {
        let h = pt(8);
        assert!(involution_witness(&h.model, &h.s, &rat(2), &rat(3)).unwrap());
        assert!(matches!(
            involution_witness(&h.model, &h.s, &rat(2), &ratio(1, 2)),
            Err(Error::SingularSample { .. })
        ));
    }

    #[test]
    fn conserved_density_examples() {
        let pt2 = FrobeniusModel::two_points();
        let cap = Cap::new(6, 0);
        let f = &TruncSeries::var(0, 0, 2, cap) * &TruncSeries::var(1, 0, 2, cap);
        assert!(!conserved_density_check(&pt2, &JetPoly::from_series(&f)).unwrap());
        let g = TruncSeries::var(0, 0, 2, cap).exp().unwrap();
        assert!(conserved_density_check(&pt2, &JetPoly::from_series(&g)).unwrap());
        let jet = JetPoly::jet(0, 1, 0, 2, cap);
        assert_eq!(conserved_density_check(&pt2, &jet), Err(Error::JetsNotAllowed));
    }

    #[test]
    fn miura_of_point_flow() {
        let d = 8;
        let cap = Cap::new(d, 0);
        let h = pt(d);
        let m = vec![TruncSeries::var(0, 0, 1, cap).exp().unwrap() - TruncSeries::one(0, 1, cap)];
        let w = TruncSeries::var(0, 0, 1, cap);
        let log = w.log1p().unwrap();
        for n in 0..=4u32 {
            let pushed = miura_push(&h.flow(n as usize, 0).unwrap(), &m).unwrap();
            let want = JetPoly::monomial(vec![(0, 1)], log.pow(n).scale(&factorial(n).recip()));
            assert!(pushed.components[0].agrees_with(&want));
            assert!(pushed.cap().v >= d - 1);
        }
    }

    #[test]
    fn flat_change_is_rejected() {
        let cap = Cap::new(4, 0);
        let m = vec![TruncSeries::var(0, 0, 1, cap).pow(2)];
        assert_eq!(invert_change(&m), Err(Error::NonInvertibleLinearPart));
    }
}
