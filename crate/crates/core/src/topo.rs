//! The topological solution: the fixed point `τ(Q, t)`, the Miura image
//! `w(t) = J(τ, 0) - 1`, descendant two-point functions and the TRR check,
//! and a string-equation oracle for invariants of the point.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::hierarchy::{flow, miura_push};
use crate::jet::JetPoly;
use crate::laurent::{pow_rational, ULaurent};
use crate::matrix::SeriesMatrix;
use crate::model::FrobeniusModel;
use crate::report::{describe_residual, Report};
use crate::series::{binomial, factorial, format_monomial, format_rational, rat, Cap, Exponent, Rational, TruncSeries};
use crate::smatrix::{evaluate_s_at_q, SMatrix};

/// Descendant variables `t_{k,i}`, `0 <= k <= k_max`, encoded as series
/// variables with index `k * dim + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DescendantInput {
    pub dim: usize,
    pub nq: usize,
    pub k_max: usize,
    /// Total degree in the `t`-variables through which results are exact.
    pub d_t: i32,
    pub d_q: i32,
    active: BTreeSet<(usize, usize)>,
}

impl DescendantInput {
    pub fn new(model: &FrobeniusModel, k_max: usize, d_t: i32, d_q: i32) -> Self {
        let active = (0..=k_max).flat_map(|k| (0..model.dim).map(move |i| (k, i))).collect();
        DescendantInput { dim: model.dim, nq: model.novikov_rank, k_max, d_t, d_q, active }
    }

    /// Keeps only the listed `(k, i)`; the others are set to zero.
    pub fn with_active(mut self, active: impl IntoIterator<Item = (usize, usize)>) -> Self {
        self.active = active.into_iter().filter(|&(k, i)| k <= self.k_max && i < self.dim).collect();
        self
    }

    pub fn is_active(&self, k: usize, i: usize) -> bool {
        self.active.contains(&(k, i))
    }

    pub fn n_vars(&self) -> usize {
        (self.k_max + 1) * self.dim
    }

    pub fn var_index(&self, k: usize, i: usize) -> usize {
        k * self.dim + i
    }

    pub fn cap(&self) -> Cap {
        Cap::new(self.d_t, self.d_q)
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.nq, self.n_vars())
    }

    /// `t0, t1, ...` for a one-dimensional target, `t{k}_{i}` otherwise.
    pub fn name(&self, j: usize) -> String {
        let (k, i) = (j / self.dim, j % self.dim);
        if self.dim == 1 {
            format!("t{k}")
        } else {
            format!("t{k}_{i}")
        }
    }

    pub fn var(&self, k: usize, i: usize) -> TruncSeries {
        if self.is_active(k, i) {
            TruncSeries::var(self.var_index(k, i), self.nq, self.n_vars(), self.cap())
        } else {
            TruncSeries::zero(self.nq, self.n_vars(), self.cap())
        }
    }

    /// `t_k` as a column in the basis `Φ_i`.
    pub fn t_vector(&self, k: usize) -> SeriesMatrix {
        SeriesMatrix::column((0..self.dim).map(|i| self.var(k, i)).collect())
    }

    /// `t(q) = Σ_k t_k (q-1)^k = Σ_k t_k u^{-k}`.
    pub fn t_laurent(&self) -> ULaurent<SeriesMatrix> {
        let zero = SeriesMatrix::zero(self.dim, 1, self.nq, self.n_vars(), self.cap());
        ULaurent::from_terms(zero, (0..=self.k_max).map(|k| (-(k as i32), self.t_vector(k))))
    }

    /// Every exponent of total `t`-degree in `1..=max_degree` with no `Q`.
    pub fn monomials(&self, max_degree: u32) -> Vec<Exponent> {
        let n = self.n_vars();
        let mut out = Vec::new();
        let mut cur = vec![0u16; n];
        fn rec(j: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
            if j == cur.len() {
                out.push(cur.clone());
                return;
            }
            for d in 0..=left {
                cur[j] = d as u16;
                rec(j + 1, left - d, cur, out);
            }
            cur[j] = 0;
        }
        rec(0, max_degree, &mut cur, &mut out);
        out.retain(|e| e.iter().any(|&d| d > 0));
        out.sort_by_key(|e| (e.iter().map(|&d| d as u32).sum::<u32>(), std::cmp::Reverse(e.clone())));
        out.into_iter()
            .map(|e| {
                let mut full = vec![0u16; self.nq];
                full.extend(e);
                full
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauSolution {
    pub input: DescendantInput,
    pub tau: Vec<TruncSeries>,
    pub iterations: usize,
}

impl TauSolution {
    pub fn cap(&self) -> Cap {
        self.tau.iter().map(|t| t.cap()).fold(self.input.cap(), Cap::min)
    }
}

fn check_arity(model: &FrobeniusModel, input: &DescendantInput) -> Result<()> {
    if input.dim != model.dim || input.nq != model.novikov_rank {
        return Err(Error::InvalidArgument("descendant input does not match the model".into()));
    }
    Ok(())
}

/// `Σ_n S_n(τ) t_n`.
pub fn fixed_point_map(s: &SMatrix, tau: &[TruncSeries], input: &DescendantInput) -> Result<Vec<TruncSeries>> {
    let mut acc = input.t_vector(0);
    for k in 1..=input.k_max {
        let sk = s.get(k)?.compose(tau)?;
        acc = &acc + &(&sk * &input.t_vector(k));
    }
    let cap = acc.cap();
    Ok(acc.col(0).into_iter().map(|x| x.truncate(cap)).collect())
}

/// `[S(τ, q) t(q)]_+` evaluated at `q = 1`, computed in the `u`-ring.
pub fn plus_project_at_one(s: &SMatrix, tau: &[TruncSeries], input: &DescendantInput) -> Result<Vec<TruncSeries>> {
    if !s.is_complete() {
        return Err(Error::IncompleteLaurent("projection to Laurent polynomials needs a terminating S".into()));
    }
    let s_tau = s.compose(tau)?.as_laurent();
    let prod = s_tau.mul(&input.t_laurent());
    if !prod.is_complete() {
        return Err(Error::IncompleteLaurent("S(τ, q) t(q) has unknown pole orders".into()));
    }
    let mut acc = prod.zero_coeff().clone();
    for (&p, c) in prod.terms() {
        if p <= 0 {
            // u^p = (q - 1)^{-p} at q = 1
            acc = &acc + &c.scale(&pow_rational(&rat(0), -p));
        }
    }
    Ok(acc.col(0))
}

/// Iterates `τ <- [S(τ, q) t(q)]_+|_{q=1}` from `τ = 0`, one `t`-degree per step.
pub fn solve_tau(model: &FrobeniusModel, s: &SMatrix, input: &DescendantInput) -> Result<TauSolution> {
    check_arity(model, input)?;
    let (nq, nv) = input.arity();
    let cap = input.cap();
    let mut tau = vec![TruncSeries::zero(nq, nv, cap); model.dim];
    let steps = input.d_t.max(0) as usize + 1;
    for _ in 0..steps {
        tau = fixed_point_map(s, &tau, input)?;
    }
    let again = fixed_point_map(s, &tau, input)?;
    if again.iter().zip(&tau).any(|(a, b)| !a.agrees_with(b)) {
        return Err(Error::NotStabilized { iterations: steps });
    }
    Ok(TauSolution { input: input.clone(), tau, iterations: steps })
}

/// `τ - [S(τ, q) t(q)]_+|_{q=1}`, computed through the full Laurent product.
pub fn fixed_point_residual(s: &SMatrix, sol: &TauSolution) -> Result<Vec<TruncSeries>> {
    let proj = plus_project_at_one(s, &sol.tau, &sol.input)?;
    Ok(sol.tau.iter().zip(&proj).map(|(a, b)| a - b).collect())
}

/// The Miura map `v -> g(J(v, 0) - 1)`, in dual components.
pub fn miura_map(model: &FrobeniusModel, s: &SMatrix) -> Result<Vec<TruncSeries>> {
    let cap = s.cap();
    let s0 = evaluate_s_at_q(s, &rat(0))?;
    let j0 = &s0.inverse()? * &model.unit_column(cap);
    let w = &model.g_matrix(cap) * &(&j0 - &model.unit_column(cap));
    Ok(w.col(0))
}

/// `w(t) = J(τ(t), 0) - 1` in dual components `w_a = g(Φ_a, J - 1)`.
pub fn topological_solution(model: &FrobeniusModel, s: &SMatrix, sol: &TauSolution) -> Result<Vec<TruncSeries>> {
    miura_map(model, s)?.iter().map(|m| m.compose(&sol.tau)).collect()
}

/// `∂_x = Σ_m 1_m ∂/∂t_{0,m}`, the derivative along the unit in the `t_0` directions.
pub fn d_x(model: &FrobeniusModel, input: &DescendantInput, f: &TruncSeries) -> TruncSeries {
    let mut acc = f.scale(&rat(0)).diff_v(0);
    for (m, c) in model.unit.iter().enumerate() {
        if c != &rat(0) {
            acc = &acc + &f.diff_v(input.var_index(0, m)).scale(c);
        }
    }
    acc
}

fn evaluate_flow_along(
    components: &[JetPoly],
    point: &[TruncSeries],
    dx: &[TruncSeries],
) -> Result<Vec<TruncSeries>> {
    let image = |b: usize, k: u16| -> JetPoly {
        match k {
            0 => JetPoly::from_series(&point[b]),
            1 => JetPoly::from_series(&dx[b]),
            _ => JetPoly::from_series(&point[b].scale(&rat(0))),
        }
    };
    components
        .iter()
        .map(|p| {
            if p.max_order() > 1 {
                return Err(Error::InvalidArgument("only hydrodynamic flows can be evaluated along τ".into()));
            }
            Ok(p.substitute(point, &image)?.jet_free_part())
        })
        .collect()
}

/// `∂τ/∂t_{n,i} = P_{n,i}(τ, ∂_xτ)` for `n <= max_n`, together with the
/// Miura image `∂w/∂t_{n,i} = P^w_{n,i}(w, ∂_xw)`.
pub fn verify_theorem2(model: &FrobeniusModel, s: &SMatrix, sol: &TauSolution, max_n: usize) -> Result<Report> {
    let input = &sol.input;
    let mut r = Report::new("topological solution");
    let target = input.d_t - 1;
    let residual = fixed_point_residual(s, sol)?;
    let res_ok = residual.iter().all(|x| x.is_zero() && x.cap().v >= input.d_t.min(s.cap().v));
    r.push(
        format!("τ = [S(τ,q)t(q)]_+ at q = 1 through degree {}", input.d_t),
        res_ok,
        residual.iter().map(describe_residual).collect::<Vec<_>>().join("; "),
    );
    let dx_tau: Vec<TruncSeries> = sol.tau.iter().map(|t| d_x(model, input, t)).collect();
    let change = miura_map(model, s)?;
    let w = topological_solution(model, s, sol)?;
    let dx_w: Vec<TruncSeries> = w.iter().map(|t| d_x(model, input, t)).collect();
    for n in 0..=max_n.min(input.k_max) {
        for i in 0..model.dim {
            if !input.is_active(n, i) {
                continue;
            }
            let p = flow(model, s, n, i)?;
            let rhs = evaluate_flow_along(&p.components, &sol.tau, &dx_tau)?;
            let lhs: Vec<TruncSeries> = sol.tau.iter().map(|t| t.diff_v(input.var_index(n, i))).collect();
            let (ok, detail) = compare_vectors(&lhs, &rhs, target);
            r.push(format!("∂τ/∂t_({n},{i}) = P_({n},{i})(τ, ∂_xτ)"), ok, detail);

            let pw = miura_push(&p, &change)?;
            let rhs = evaluate_flow_along(&pw.components, &w, &dx_w)?;
            let lhs: Vec<TruncSeries> = w.iter().map(|t| t.diff_v(input.var_index(n, i))).collect();
            let (ok, detail) = compare_vectors(&lhs, &rhs, target);
            r.push(format!("∂w/∂t_({n},{i}) solves the Miura image of P_({n},{i})"), ok, detail);
        }
    }
    Ok(r)
}

fn compare_vectors(lhs: &[TruncSeries], rhs: &[TruncSeries], min_cap: i32) -> (bool, String) {
    let mut detail = Vec::new();
    let mut ok = true;
    for (a, (x, y)) in lhs.iter().zip(rhs).enumerate() {
        let d = x - y;
        if !d.is_zero() {
            ok = false;
            detail.push(format!("component {a}: {}", describe_residual(&d)));
        }
        if d.cap().v < min_cap {
            ok = false;
            detail.push(format!("component {a}: compared only through degree {} < {min_cap}", d.cap().v));
        }
    }
    (ok, detail.join("; "))
}

/// Reduction rules available to [`PointOracle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleMode {
    /// String equation and the three-point base case only.
    Minimal,
    /// Additionally, a correlator on `M_{0,n}`, `n > 3`, with every
    /// insertion divisible by `L - 1` vanishes, since the product has
    /// filtration degree above `dim M_{0,n} = n - 3`.
    WithDimensionVanishing,
}

/// Genus-zero K-theoretic invariants of the point with insertions `(L-1)^k`.
#[derive(Clone, Debug)]
pub struct PointOracle {
    mode: OracleMode,
    memo: HashMap<Vec<u32>, Rational>,
}

pub fn format_insertion(k: u32) -> String {
    match k {
        0 => "1".into(),
        1 => "(L-1)".into(),
        _ => format!("(L-1)^{k}"),
    }
}

pub fn format_correlator(ks: &[u32]) -> String {
    let inner: Vec<String> = ks.iter().map(|&k| format_insertion(k)).collect();
    format!("⟨{}⟩_{{0,{}}}", inner.join(","), ks.len())
}

impl PointOracle {
    pub fn new(mode: OracleMode) -> Self {
        PointOracle { mode, memo: HashMap::new() }
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    /// `⟨(L-1)^{k_1}, ..., (L-1)^{k_n}⟩_{0,n}`.
    pub fn correlator(&mut self, ks: &[u32]) -> Result<Rational> {
        if ks.len() < 3 {
            return Err(Error::InvalidArgument(format!("unstable correlator {}", format_correlator(ks))));
        }
        let mut key = ks.to_vec();
        key.sort_unstable();
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let value = self.reduce(&key)?;
        self.memo.insert(key, value.clone());
        Ok(value)
    }

    fn reduce(&mut self, ks: &[u32]) -> Result<Rational> {
        if ks.len() == 3 {
            let all_one = ks.iter().all(|&k| k == 0);
            return Ok(rat(all_one as i64));
        }
        let Some(pos) = ks.iter().position(|&k| k == 0) else {
            return match self.mode {
                OracleMode::WithDimensionVanishing => Ok(rat(0)),
                OracleMode::Minimal => Err(Error::OracleIncomplete(format_correlator(ks))),
            };
        };
        let mut rest = ks.to_vec();
        rest.remove(pos);
        let mut total = self.correlator(&rest)?;
        for j in 0..rest.len() {
            if rest[j] == 0 {
                continue;
            }
            let mut shifted = rest.clone();
            shifted[j] -= 1;
            total += self.correlator(&shifted)?;
        }
        Ok(total)
    }

    /// Coefficient of `Π t_k^{m_k}` in `Σ_{n>=1} (1/n!) ⟨1, 1, t(L), ..., t(L)⟩_{0,n+2}`,
    /// with `t(L) = Σ_k t_k (L-1)^k`.
    pub fn w_coefficient(&mut self, multiplicities: &[u32]) -> Result<Rational> {
        let mut ks = vec![0, 0];
        let mut denom = rat(1);
        for (k, &m) in multiplicities.iter().enumerate() {
            ks.extend(std::iter::repeat_n(k as u32, m as usize));
            denom *= factorial(m);
        }
        if ks.len() < 3 {
            return Ok(rat(0));
        }
        Ok(self.correlator(&ks)? / denom)
    }

    /// `⟨1, 1, 1, L^k⟩_{0,4}` obtained by expanding `L^k` in powers of `L - 1`.
    pub fn four_point_line_power(&mut self, k: u32) -> Result<Rational> {
        let mut total = rat(0);
        for j in 0..=k {
            total += binomial(k as i64, j) * self.correlator(&[0, 0, 0, j])?;
        }
        Ok(total)
    }
}

pub fn string_oracle_point(ks: &[u32], mode: OracleMode) -> Result<Rational> {
    PointOracle::new(mode).correlator(ks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantRow {
    pub insertions: Vec<u32>,
    pub value: Rational,
}

impl InvariantRow {
    pub fn label(&self) -> String {
        format_correlator(&self.insertions)
    }
}

/// All `⟨1, 1, (L-1)^{k_1}, ..., (L-1)^{k_m}⟩_{0,m+2}` with `1 <= m <= max_degree`,
/// `k_j <= max_k`, in canonical order.
pub fn invariants_table(max_degree: usize, max_k: u32, mode: OracleMode) -> Result<Vec<InvariantRow>> {
    let mut oracle = PointOracle::new(mode);
    let mut rows = Vec::new();
    for m in 1..=max_degree {
        let mut ks = vec![0u32; m];
        loop {
            let mut full = vec![0, 0];
            full.extend(ks.iter().copied());
            rows.push(InvariantRow { value: oracle.correlator(&full)?, insertions: full });
            // next non-decreasing sequence
            let Some(j) = (0..m).rev().find(|&j| ks[j] < max_k) else { break };
            let nv = ks[j] + 1;
            for x in ks.iter_mut().skip(j) {
                *x = nv;
            }
        }
    }
    Ok(rows)
}

/// Compares every coefficient of `w(t)` (point target) through total degree
/// `max_degree` with the string-equation oracle.
pub fn compare_with_oracle(w: &TruncSeries, input: &DescendantInput, max_degree: u32, mode: OracleMode) -> Result<Report> {
    if input.dim != 1 || input.nq != 0 {
        return Err(Error::InvalidArgument("the oracle covers the point target only".into()));
    }
    let mut r = Report::new(format!("point invariants through degree {max_degree}"));
    let mut oracle = PointOracle::new(mode);
    let mut bad = Vec::new();
    let mut count = 0usize;
    let capped = w.cap().v < max_degree as i32;
    for e in input.monomials(max_degree) {
        let mults: Vec<u32> = e.iter().map(|&d| d as u32).collect();
        let want = oracle.w_coefficient(&mults)?;
        let got = w.coeff(&e);
        count += 1;
        if got != want {
            bad.push(format!(
                "{}: w has {}, oracle {}",
                format_monomial(&e, 0, &|j| input.name(j)),
                format_rational(&got),
                format_rational(&want)
            ));
        }
    }
    let mut detail = format!("{count} coefficients compared");
    if capped {
        detail.push_str(&format!("; w is only exact through degree {}", w.cap().v));
    }
    if !bad.is_empty() {
        detail = format!("{detail}; {}", bad.join("; "));
    }
    r.push("w(t) coefficients equal string-equation values", bad.is_empty() && !capped, detail);
    Ok(r)
}

/// Descendant two-point functions `⟨Φ_a L^A, Φ_b L^B⟩_{0,2}(τ)` from
/// `⟨a/(1-xL), b/(1-yL)⟩(τ) = (G(S(τ,1/x)a, S(τ,1/y)b) - g(a,b)) / (1 - xy)`.
#[derive(Clone, Debug)]
pub struct TwoPointFunction {
    s_tau: Vec<SeriesMatrix>,
    /// `G(τ)`.
    pub metric: SeriesMatrix,
    /// `G(τ)^{-1}`.
    pub metric_inv: SeriesMatrix,
    g0: SeriesMatrix,
    blocks: HashMap<usize, SeriesMatrix>,
    raw: HashMap<(usize, usize), SeriesMatrix>,
}

impl TwoPointFunction {
    pub fn new(model: &FrobeniusModel, metric_g: &SeriesMatrix, s: &SMatrix, tau: &[TruncSeries]) -> Result<Self> {
        let s_tau = s.compose(tau)?.orders().to_vec();
        let metric = metric_g.compose(tau)?;
        let metric_inv = metric.inverse()?;
        let cap = metric.cap();
        let (nq, nv) = metric.arity();
        let g0 = SeriesMatrix::from_rational(&model.pairing_g, nq, nv, cap);
        Ok(TwoPointFunction { s_tau, metric, metric_inv, g0, blocks: HashMap::new(), raw: HashMap::new() })
    }

    /// `[x^a] S(τ, 1/x)`, using `u = x/(1-x)` and `[x^a] u^n = C(a-1, n-1)`.
    fn block(&mut self, a: usize) -> SeriesMatrix {
        if let Some(b) = self.blocks.get(&a) {
            return b.clone();
        }
        let mut acc = self.s_tau[0].scale(&rat(if a == 0 { 1 } else { 0 }));
        for n in 1..=a.min(self.s_tau.len().saturating_sub(1)) {
            acc = &acc + &self.s_tau[n].scale(&binomial(a as i64 - 1, n as u32 - 1));
        }
        self.blocks.insert(a, acc.clone());
        acc
    }

    fn raw_coeff(&mut self, a: usize, b: usize) -> SeriesMatrix {
        if let Some(m) = self.raw.get(&(a, b)) {
            return m.clone();
        }
        let sa = self.block(a);
        let sb = self.block(b);
        let mut m = &(&sa.transpose() * &self.metric) * &sb;
        if a == 0 && b == 0 {
            m = &m - &self.g0;
        }
        self.raw.insert((a, b), m.clone());
        m
    }

    /// Matrix of `⟨Φ_i L^a, Φ_j L^b⟩_{0,2}(τ)`.
    pub fn line_powers(&mut self, a: usize, b: usize) -> SeriesMatrix {
        let mut acc = self.raw_coeff(a, b);
        for j in 1..=a.min(b) {
            acc = &acc + &self.raw_coeff(a - j, b - j);
        }
        acc
    }

    /// Matrix of `⟨Φ_i f(L), Φ_j h(L)⟩_{0,2}(τ)` for polynomials given by
    /// coefficients of powers of `L`.
    pub fn pairing(&mut self, f: &[Rational], h: &[Rational]) -> SeriesMatrix {
        let mut acc = self.g0.scale(&rat(0));
        for (a, fa) in f.iter().enumerate() {
            if fa == &rat(0) {
                continue;
            }
            for (b, hb) in h.iter().enumerate() {
                if hb == &rat(0) {
                    continue;
                }
                acc = &acc + &self.line_powers(a, b).scale(&(fa * hb));
            }
        }
        acc
    }
}

/// `(L-1)^k` in powers of `L`.
pub fn shifted_line_power(k: usize) -> Vec<Rational> {
    (0..=k)
        .map(|j| binomial(k as i64, j as u32) * rat(if (k - j).is_multiple_of(2) { 1 } else { -1 }))
        .collect()
}

/// `L^k` in powers of `L`.
pub fn line_power(k: usize) -> Vec<Rational> {
    let mut v = vec![rat(0); k + 1];
    v[k] = rat(1);
    v
}

/// `L (L-1)^{k-1}` in powers of `L`.
pub fn trr_insertion(k: usize) -> Vec<Rational> {
    let mut v = vec![rat(0)];
    v.extend(shifted_line_power(k - 1));
    v
}

/// The descendant TRR for `⟨Φ_i(L-1)^k, Φ_j L^{k2}, Φ_l L^{k3}⟩_{0,3}(t)`,
/// all `i, j, l`, with three-point functions obtained as `t`-derivatives of
/// two-point functions at `τ(t)`.
pub fn verify_trr(
    model: &FrobeniusModel,
    metric_g: &SeriesMatrix,
    s: &SMatrix,
    sol: &TauSolution,
    k: usize,
    k2: usize,
    k3: usize,
) -> Result<Report> {
    if k == 0 {
        return Err(Error::InvalidArgument("the recursion needs k >= 1".into()));
    }
    let input = &sol.input;
    if k > input.k_max {
        return Err(Error::InvalidArgument(format!("t_({k},i) is not among the descendant variables")));
    }
    let mut r = Report::new(format!("TRR k = {k}, k2 = {k2}, k3 = {k3}"));
    let mut tp = TwoPointFunction::new(model, metric_g, s, &sol.tau)?;
    let n = model.dim;
    let two = tp.line_powers(k2, k3);
    let left = tp.pairing(&trr_insertion(k), &line_power(0));
    let target = input.d_t - 1;

    let metric_check = &(&tp.line_powers(0, 0) + &tp.g0) - &tp.metric;
    r.push("G(t) = g + ⟨Φ_a, Φ_b⟩(t)", metric_check.is_zero(), "");
    let g_at_zero = tp.metric.constant_part() == model.pairing_g;
    r.push("G(t) at t = 0 equals g", g_at_zero, "");

    let mut ok = true;
    let mut details = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let lhs = two.get(j, l).diff_v(input.var_index(k, i));
                let mut rhs = lhs.scale(&rat(0));
                for a in 0..n {
                    for b in 0..n {
                        let d = two.get(j, l).diff_v(input.var_index(0, b));
                        rhs = &rhs + &(&(left.get(i, a) * tp.metric_inv.get(a, b)) * &d);
                    }
                }
                let d = &lhs - &rhs;
                if !d.is_zero() || d.cap().v < target {
                    ok = false;
                    details.push(format!("(i,j,l) = ({i},{j},{l}): {}", describe_residual(&d)));
                }
            }
        }
    }
    r.push(format!("TRR identity through t-degree {target}"), ok, details.join("; "));

    if n == 1 && model.novikov_rank == 0 {
        let lhs0 = two.get(0, 0).diff_v(input.var_index(k, 0)).constant_term();
        let mut oracle = PointOracle::new(OracleMode::WithDimensionVanishing);
        // ⟨(L-1)^k, L^{k2}, L^{k3}⟩_{0,3} with L^m = Σ C(m,j)(L-1)^j
        let mut want = rat(0);
        for a in 0..=k2 {
            for b in 0..=k3 {
                want += binomial(k2 as i64, a as u32)
                    * binomial(k3 as i64, b as u32)
                    * oracle.correlator(&[k as u32, a as u32, b as u32])?;
            }
        }
        r.push("three-point value at t = 0 matches the string oracle", lhs0 == want, format!("{} vs {}", format_rational(&lhs0), format_rational(&want)));
    }
    Ok(r)
}

/// `ℱ(t) = ½⟨q(L), q(L)⟩_{0,2}(τ)` with `q(L) = t(L) + 1 - L`.
pub fn genus_zero_potential(model: &FrobeniusModel, metric_g: &SeriesMatrix, s: &SMatrix, sol: &TauSolution) -> Result<TruncSeries> {
    let input = &sol.input;
    let mut tp = TwoPointFunction::new(model, metric_g, s, &sol.tau)?;
    let (nq, nv) = input.arity();
    let cap = tp.metric.cap();
    let n = model.dim;
    let max_a = input.k_max.max(1);
    // q_A[i]: coefficient of Φ_i L^A in q(L)
    let mut q: Vec<Vec<TruncSeries>> = vec![vec![TruncSeries::zero(nq, nv, cap); n]; max_a + 1];
    for kk in 0..=input.k_max {
        let coeffs = shifted_line_power(kk);
        for (a, c) in coeffs.iter().enumerate() {
            for i in 0..n {
                q[a][i] = &q[a][i] + &input.var(kk, i).scale(c);
            }
        }
    }
    for i in 0..n {
        q[0][i] = &q[0][i] + &TruncSeries::constant(model.unit[i].clone(), nq, nv, cap);
        q[1][i] = &q[1][i] - &TruncSeries::constant(model.unit[i].clone(), nq, nv, cap);
    }
    let mut total = TruncSeries::zero(nq, nv, cap);
    for a in 0..=max_a {
        for b in 0..=max_a {
            let m = tp.line_powers(a, b);
            for i in 0..n {
                for j in 0..n {
                    total = &total + &(&(&q[a][i] * m.get(i, j)) * &q[b][j]);
                }
            }
        }
    }
    Ok(total.scale(&crate::series::ratio(1, 2)))
}

/// Rows `(component, monomial, value)` of a vector of series, in canonical order.
pub fn coefficient_rows(values: &[TruncSeries], names: &dyn Fn(usize) -> String) -> Vec<(usize, String, String)> {
    let mut rows = Vec::new();
    for (a, series) in values.iter().enumerate() {
        let nq = series.nq();
        let mut terms: Vec<(&Exponent, &Rational)> = series.terms().collect();
        terms.sort_by_key(|(e, _)| (e.iter().map(|&d| d as u32).sum::<u32>(), std::cmp::Reverse((*e).clone())));
        for (e, c) in terms {
            rows.push((a, format_monomial(e, nq, names), format_rational(c)));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric;
    use crate::smatrix::solve_s;

    fn pt_setup(k_max: usize, d_t: i32) -> (FrobeniusModel, SMatrix, DescendantInput) {
        let m = FrobeniusModel::point();
        let s = solve_s(&m, Cap::new(10, 0), 8).unwrap();
        let input = DescendantInput::new(&m, k_max, d_t, 0);
        (m, s, input)
    }

    #[test]
    fn tau_with_t0_only_is_t0() {
        let (m, s, input) = pt_setup(2, 5);
        let input = input.with_active([(0, 0)]);
        let sol = solve_tau(&m, &s, &input).unwrap();
        assert_eq!(sol.tau[0], input.var(0, 0));
    }

    #[test]
    fn tau_with_t0_t1_is_geometric() {
        let (m, s, input) = pt_setup(1, 5);
        let sol = solve_tau(&m, &s, &input).unwrap();
        let t0 = input.var(0, 0);
        let t1 = input.var(1, 0);
        let one = TruncSeries::one(0, 2, input.cap());
        let want = &t0 * &(&one - &t1).invert().unwrap();
        assert_eq!(sol.tau[0], want);
        assert!(fixed_point_residual(&s, &sol).unwrap().iter().all(|x| x.is_zero()));
    }

    #[test]
    fn zero_input_gives_zero() {
        let (m, s, input) = pt_setup(2, 4);
        let sol = solve_tau(&m, &s, &input.with_active([])).unwrap();
        assert!(sol.tau[0].is_zero());
    }

    #[test]
    fn projection_of_first_descendant() {
        let (m, s, input) = pt_setup(1, 4);
        let input = input.with_active([(1, 0)]);
        let tau = vec![input.var(1, 0).scale(&rat(3))];
        let got = plus_project_at_one(&s, &tau, &input).unwrap();
        let s1 = s.get(1).unwrap().compose(&tau).unwrap();
        assert_eq!(got[0], s1.get(0, 0) * &input.var(1, 0));
        assert_eq!(fixed_point_map(&s, &tau, &input).unwrap(), got);
        assert_eq!(m.dim, 1);
    }

    #[test]
    fn point_w_spot_values() {
        let (m, s, input) = pt_setup(2, 5);
        let sol = solve_tau(&m, &s, &input).unwrap();
        let w = topological_solution(&m, &s, &sol).unwrap();
        let mut e = vec![0u16; 3];
        e[0] = 1;
        e[1] = 1;
        assert_eq!(w[0].coeff(&e), rat(1));
        let mut e1 = vec![0u16; 3];
        e1[1] = 1;
        assert_eq!(w[0].coeff(&e1), rat(0));
        let t0_only = solve_tau(&m, &s, &input.clone().with_active([(0, 0)])).unwrap();
        let w0 = topological_solution(&m, &s, &t0_only).unwrap();
        assert_eq!(w0[0], &input.var(0, 0).exp().unwrap() - &TruncSeries::one(0, 3, input.cap()));
    }

    #[test]
    fn oracle_small_values() {
        for mode in [OracleMode::Minimal, OracleMode::WithDimensionVanishing] {
            assert_eq!(string_oracle_point(&[0, 0, 0], mode).unwrap(), rat(1));
            assert_eq!(string_oracle_point(&[0, 0, 0, 1], mode).unwrap(), rat(1));
            assert_eq!(string_oracle_point(&[0, 0, 1], mode).unwrap(), rat(0));
        }
        assert!(matches!(
            string_oracle_point(&[0, 0, 1, 1, 1, 1], OracleMode::Minimal),
            Err(Error::OracleIncomplete(_))
        ));
        let mut o = PointOracle::new(OracleMode::Minimal);
        for k in 0..6 {
            assert_eq!(o.four_point_line_power(k).unwrap(), rat(k as i64 + 1));
        }
    }

    #[test]
    fn w_matches_oracle_through_degree_five() {
        let (m, s, input) = pt_setup(2, 5);
        let sol = solve_tau(&m, &s, &input).unwrap();
        let w = topological_solution(&m, &s, &sol).unwrap();
        let r = compare_with_oracle(&w[0], &input, 5, OracleMode::WithDimensionVanishing).unwrap();
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn theorem2_on_point() {
        let (m, s, input) = pt_setup(3, 5);
        let sol = solve_tau(&m, &s, &input).unwrap();
        let r = verify_theorem2(&m, &s, &sol, 3).unwrap();
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn trr_on_point() {
        let (m, s, input) = pt_setup(3, 5);
        let md = metric(&m, &s).unwrap();
        let sol = solve_tau(&m, &s, &input).unwrap();
        let r = verify_trr(&m, &md.g, &s, &sol, 1, 0, 0).unwrap();
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn potential_second_derivatives_are_two_point_functions() {
        let (m, s, input) = pt_setup(2, 5);
        let md = metric(&m, &s).unwrap();
        let sol = solve_tau(&m, &s, &input).unwrap();
        let f = genus_zero_potential(&m, &md.g, &s, &sol).unwrap();
        let mut e = vec![0u16; 3];
        e[0] = 3;
        assert_eq!(f.coeff(&e) * factorial(3), rat(1));
        let mut tp = TwoPointFunction::new(&m, &md.g, &s, &sol.tau).unwrap();
        for a in 0..=2 {
            for b in 0..=2 {
                let d2 = f.diff_v(a).diff_v(b);
                let want = tp.pairing(&shifted_line_power(a), &shifted_line_power(b)).get(0, 0).clone();
                assert!(d2.agrees_with(&want), "({a},{b})");
            }
        }
    }
}
