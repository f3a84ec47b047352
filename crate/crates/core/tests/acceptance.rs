//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use kthier::hierarchy::{
    check_commute, check_involution, default_involution_samples, flow_by_residue, flow_from_c, miura_push, Hierarchy,
};
use kthier::jet::{poisson_operator, Flow, JetPoly, LocalFunctional};
use kthier::loopsim::{
    characteristics_error, commute_defect, compile_density, conserved_drift, Integrator, LoopState, NumericFlow,
    SimConfig,
};
use kthier::metric::metric;
use kthier::series::{factorial, rat};
use kthier::smatrix::{check_symplectic, solve_s};
use kthier::testing::{random_cross_perturbation, random_jet_poly, random_vector_polynomial};
use kthier::topo::{
    compare_with_oracle, fixed_point_residual, solve_tau, string_oracle_point, topological_solution, verify_theorem2,
    verify_trr, DescendantInput, OracleMode, PointOracle,
};
use kthier::{Cap, FrobeniusModel, TruncSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const D_V: i32 = 10;
const N_U: usize = 8;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self, n: u32, title: &str, started: Instant, budget_s: f64) {
        let elapsed = started.elapsed().as_secs_f64();
        let mut failures = self.failures;
        if elapsed > budget_s {
            failures.push(format!("runtime {elapsed:.1}s exceeds {budget_s}s"));
        }
        let status = if failures.is_empty() { "PASS" } else { "FAIL" };
        let mut detail = self.notes;
        detail.extend(failures.iter().cloned());
        let line = format!("criterion {n}: {status} ({title}; {elapsed:.2}s) {}\n", detail.join("; "));
        // the raw handle is not captured by the test harness, so every line shows up
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        assert!(failures.is_empty(), "criterion {n} failed: {}", failures.join("; "));
    }
}

fn hierarchy(model: FrobeniusModel, d_v: i32) -> Hierarchy {
    Hierarchy::new(model, Cap::new(d_v, 0), N_U).expect("hierarchy")
}

fn pt_var(d: i32) -> TruncSeries {
    TruncSeries::var(0, 0, 1, Cap::new(d, 0))
}

#[test]
fn criterion_01_kdv_flows() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let h = hierarchy(FrobeniusModel::point(), D_V);
    for n in 0..=6u32 {
        let f = h.flow(n as usize, 0).unwrap();
        let coeff = pt_var(D_V).pow(n).scale(&factorial(n).recip());
        let want = JetPoly::monomial(vec![(0, 1)], coeff);
        out.check(f.components[0] == want, format!("flow({n},0) = {}", f.components[0]));
        let r = flow_by_residue(&h.model, &h.s, n as usize, 0).unwrap();
        out.check(r.agrees_with(&f), format!("residue route differs at n = {n}"));
    }
    out.note("flow(n,0) = v^n/n! ∂v for n <= 6 at D_v = 10, N_u = 8");
    out.finish(1, "dispersionless KdV flows", start, 5.0);
}

#[test]
fn criterion_02_miura_image() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let h = hierarchy(FrobeniusModel::point(), D_V);
    let cap = Cap::new(D_V, 0);
    let change = vec![&pt_var(D_V).exp().unwrap() - &TruncSeries::one(0, 1, cap)];
    let log = pt_var(D_V).log1p().unwrap();
    for n in 0..=4u32 {
        let pushed = miura_push(&h.flow(n as usize, 0).unwrap(), &change).unwrap();
        let want = JetPoly::monomial(vec![(0, 1)], log.pow(n).scale(&factorial(n).recip()));
        out.check(pushed.components[0].agrees_with(&want), format!("n = {n}"));
        out.check(pushed.cap().v >= D_V - 1, format!("n = {n}: compared only to degree {}", pushed.cap().v));
    }
    out.note(format!("compared to v-degree {}", D_V - 1));
    out.finish(2, "Miura image under w = e^v - 1", start, 10.0);
}

#[test]
fn criterion_03_hamiltonianity() {
    let start = Instant::now();
    let mut out = Outcome::new();
    for model in [FrobeniusModel::point(), FrobeniusModel::two_points()] {
        let name = model.name.clone();
        let h = hierarchy(model, D_V);
        for n in 0..=4 {
            for i in 0..h.model.dim {
                let x = h.hamiltonian_flow(n, i).unwrap();
                let f = h.flow(n, i).unwrap();
                out.check(x.agrees_with(&f), format!("{name} ({n},{i})"));
                out.check(x.cap().v >= D_V - 2, format!("{name} ({n},{i}): cap {}", x.cap().v));
            }
        }
    }
    out.note(format!("X_H(n,i) = P(n,i) to v-degree {}", D_V - 2));
    out.finish(3, "Hamiltonianity", start, 30.0);
}

#[test]
fn criterion_04_commutation_and_involution() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let mut pairs = 0;
    for model in [FrobeniusModel::point(), FrobeniusModel::two_points()] {
        let name = model.name.clone();
        let h = hierarchy(model, D_V);
        let labels: Vec<(usize, usize)> = (0..=6).flat_map(|n| (0..h.model.dim).map(move |i| (n, i))).collect();
        let flows: Vec<Flow> = labels.iter().map(|&(n, i)| h.flow(n, i).unwrap()).collect();
        for (x, &(n1, i1)) in labels.iter().enumerate() {
            for (y, &(n2, i2)) in labels.iter().enumerate().skip(x) {
                if n1 + n2 > 6 {
                    continue;
                }
                pairs += 1;
                let comm = flows[x].commutator(&flows[y]);
                out.check(check_commute(&flows[x], &flows[y]), format!("{name} [P({n1},{i1}), P({n2},{i2})]"));
                out.check(comm.cap().v >= D_V - 2, format!("{name} commutator cap {}", comm.cap().v));
                let inv = check_involution(&h, (n1, i1), (n2, i2), &[]).unwrap();
                out.check(inv.exact, format!("{name} bracket of H({n1},{i1}), H({n2},{i2}) not exact"));
                out.check(inv.bracket_cap.v >= D_V - 4, format!("{name} bracket cap {}", inv.bracket_cap.v));
            }
        }
        let samples = default_involution_samples();
        let inv = check_involution(&h, (1, 0), (2, 0), &samples).unwrap();
        for ((q1, q2), ok) in &inv.witness {
            out.check(*ok, format!("{name} witness at ({q1}, {q2})"));
        }
    }
    out.note(format!("{pairs} pairs with n1 + n2 <= 6; witness at (2,3), (3,-2), (1/2,5)"));
    out.finish(4, "commutation and involution", start, 60.0);
}

#[test]
fn criterion_05_symplecticity_and_metric() {
    let start = Instant::now();
    let mut out = Outcome::new();
    for model in [FrobeniusModel::point(), FrobeniusModel::two_points()] {
        let name = model.name.clone();
        let s = solve_s(&model, Cap::new(D_V, 0), N_U).unwrap();
        let md = metric(&model, &s).unwrap();
        let r = check_symplectic(&model, &s, &md.g, N_U as i32).unwrap();
        for e in r.failures() {
            out.check(false, format!("{name}: {} {}", e.name, e.detail));
        }
        if model.dim == 1 {
            out.check(md.g.get(0, 0) == &pt_var(D_V).exp().unwrap(), "pt: G is not the truncated exponential");
        }
    }
    out.note("g S(q^{-1})^{-1} = S^T G through u^8; g = G S(v,0); pt G = e^v");
    out.finish(5, "symplecticity and metric", start, 5.0);
}

#[test]
fn criterion_06_theorem2() {
    let start = Instant::now();
    let mut out = Outcome::new();
    for model in [FrobeniusModel::point(), FrobeniusModel::two_points()] {
        let name = model.name.clone();
        let s = solve_s(&model, Cap::new(D_V, 0), N_U).unwrap();
        let input = DescendantInput::new(&model, 3, 5, 0);
        let sol = solve_tau(&model, &s, &input).unwrap();
        let res = fixed_point_residual(&s, &sol).unwrap();
        out.check(res.iter().all(|r| r.is_zero() && r.cap().v >= 5), format!("{name} fixed-point residual"));
        let r = verify_theorem2(&model, &s, &sol, 3).unwrap();
        for e in r.failures() {
            out.check(false, format!("{name}: {} {}", e.name, e.detail));
        }
    }
    out.note("fixed point to D_t = 5; ∂τ/∂t(n,i) = P(n,i)(τ, ∂_xτ) to degree 4 for n <= 3");
    out.finish(6, "topological solution", start, 60.0);
}

#[test]
fn criterion_07_point_invariants() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let model = FrobeniusModel::point();
    let s = solve_s(&model, Cap::new(D_V, 0), N_U).unwrap();
    let input = DescendantInput::new(&model, 2, 5, 0);
    let sol = solve_tau(&model, &s, &input).unwrap();
    let w = topological_solution(&model, &s, &sol).unwrap();
    let r = compare_with_oracle(&w[0], &input, 5, OracleMode::WithDimensionVanishing).unwrap();
    for e in r.failures() {
        out.check(false, format!("{} {}", e.name, e.detail));
    }
    out.note(r.entries[0].detail.clone());
    let three = string_oracle_point(&[0, 0, 0], OracleMode::Minimal).unwrap();
    out.check(three == rat(1), "⟨1,1,1⟩ != 1");
    let mut e = vec![0u16; 3];
    e[0] = 1;
    e[1] = 1;
    let c01 = w[0].coeff(&e);
    out.check(c01 == rat(1), format!("coefficient of t0*t1 is {c01}"));
    let mut oracle = PointOracle::new(OracleMode::Minimal);
    let chi = oracle.four_point_line_power(1).unwrap() - oracle.four_point_line_power(0).unwrap();
    out.check(chi == rat(1) && c01 == chi, "χ(O(1)) - χ(O) on M_{0,4} disagrees");
    out.finish(7, "point invariants against the string equation", start, 30.0);
}

#[test]
fn criterion_08_trr() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let model = FrobeniusModel::point();
    let s = solve_s(&model, Cap::new(D_V, 0), N_U).unwrap();
    let md = metric(&model, &s).unwrap();
    let input = DescendantInput::new(&model, 3, 5, 0);
    let sol = solve_tau(&model, &s, &input).unwrap();
    for k in 1..=3 {
        for k2 in 0..=1 {
            for k3 in 0..=1 {
                let r = verify_trr(&model, &md.g, &s, &sol, k, k2, k3).unwrap();
                for e in r.failures() {
                    out.check(false, format!("(k,k2,k3) = ({k},{k2},{k3}): {} {}", e.name, e.detail));
                }
            }
        }
    }
    out.note("k in 1..=3, k2, k3 in 0..=1, D_t = 5");
    out.finish(8, "topological recursion", start, 60.0);
}

#[test]
fn criterion_09_completeness_properties() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = hierarchy(FrobeniusModel::two_points(), D_V);
    let budget: Vec<Flow> =
        (0..=4).flat_map(|n| (0..2).map(move |i| (n, i))).map(|(n, i)| h.flow(n, i).unwrap()).collect();
    for trial in 0..20 {
        let c = random_vector_polynomial(&mut rng, 2, 4);
        let res = flow_from_c(&h.model, &h.s, &c).unwrap();
        for p in &budget {
            out.check(check_commute(&res.flow, p), format!("C #{trial} does not commute with {:?}", p.label));
        }
        let rebuilt = res.reconstruct(&h.model, &h.s).unwrap();
        out.check(rebuilt.agrees_with(&res.flow), format!("C #{trial}: decomposition does not reconstruct the flow"));
    }
    let p10 = h.flow(1, 0).unwrap();
    let mut failing = 0;
    for _ in 0..20 {
        let delta = random_cross_perturbation(&mut rng, 2, Cap::new(D_V, 0));
        let perturbed = p10.add(&delta);
        if budget.iter().any(|p| !check_commute(&perturbed, p)) {
            failing += 1;
        }
    }
    out.check(failing == 20, format!("only {failing}/20 perturbed flows fail to commute"));
    out.note(format!("pt2, 20 random C(q) of degree <= 4 against P(n,i), n <= 4; {failing}/20 perturbations detected"));
    out.finish(9, "completeness property tests", start, 120.0);
}

fn sine(x: f64) -> f64 {
    0.1 * (2.0 * PI * x).sin()
}

fn dsine(x: f64) -> f64 {
    0.2 * PI * (2.0 * PI * x).cos()
}

#[test]
fn criterion_10_loop_space() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let h = hierarchy(FrobeniusModel::point(), D_V);
    let cfg = SimConfig { m: 256, dt: 1e-4, t_end: 0.1, ..SimConfig::default() };
    let integ = Integrator::new(cfg.clone()).unwrap();
    let v0 = LoopState::sine(256, &[0.1], &[0.0]).unwrap();
    let p1 = NumericFlow::compile(&h.flow(1, 0).unwrap(), &[]).unwrap();
    let p2 = NumericFlow::compile(&h.flow(2, 0).unwrap(), &[]).unwrap();

    let densities: Vec<(String, _)> =
        (0..=4).map(|m| (format!("H_({m},0)"), compile_density(&h.hamiltonian(m, 0).unwrap()).unwrap())).collect();
    let mut states = vec![v0.clone()];
    let mut cur = v0.clone();
    let chunk = cfg.t_end / 10.0;
    for _ in 0..10 {
        cur = integ.evolve(&cur, &p1, chunk, &[]).unwrap().0;
        states.push(cur.clone());
    }
    let err = characteristics_error(&cur, &sine, &dsine, &|v| v, &|_| 1.0);
    out.check(err <= 1e-6, format!("characteristics L2 error {err:.3e}"));
    let drift = conserved_drift(&states, &densities);
    let worst = drift.iter().map(|d| d.relative).fold(0.0, f64::max);
    out.check(worst <= 1e-8, format!("relative drift {worst:.3e}"));
    let defect = commute_defect(&integ, &v0, &p1, &p2, 0.05, 0.05).unwrap();
    out.check(defect <= 1e-6, format!("commute defect (1,0),(2,0) {defect:.3e}"));

    let sin_flow = NumericFlow::custom(
        "sin(v) ∂v",
        1,
        1.0,
        Arc::new(|_, v: &[f64], vx: &[f64], o: &mut [f64]| o[0] = v[0].sin() * vx[0]),
    );
    let control = commute_defect(&integ, &v0, &p1, &sin_flow, 0.05, 0.05).unwrap();
    out.check(control > 1e-3, format!("sin(v) control defect {control:.3e} does not exceed 1e-3"));

    let advect = NumericFlow::custom(
        "cos(2πx) ∂v",
        1,
        1.0,
        Arc::new(|x: f64, _: &[f64], vx: &[f64], o: &mut [f64]| o[0] = (2.0 * PI * x).cos() * vx[0]),
    );
    let coarse = Integrator::new(SimConfig { dt: 1e-3, ..cfg.clone() }).unwrap();
    let x_control = commute_defect(&coarse, &v0, &p1, &advect, 0.05, 0.05).unwrap();
    out.note(format!(
        "L2 error {err:.2e}, drift {worst:.2e}, defect {defect:.2e}, sin control {control:.2e}, x-dependent control {x_control:.2e}"
    ));
    out.finish(10, "loop-space simulation", start, 60.0);
}

#[test]
fn criterion_11_jet_foundations() {
    let start = Instant::now();
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cap = Cap::new(8, 0);
    for k in 0..100 {
        let nv = 1 + k % 2;
        let p = random_jet_poly(&mut rng, nv, cap, 3, 3, 4);
        let dp = LocalFunctional::new(p.total_derivative());
        for i in 0..nv {
            out.check(dp.variational_derivative(i).is_zero(), format!("δ/δv{i} ∂p != 0 for sample {k}"));
        }
    }
    let pt = FrobeniusModel::point();
    let s = solve_s(&pt, Cap::new(16, 0), N_U).unwrap();
    let md = metric(&pt, &s).unwrap();
    let a = poisson_operator(&md);
    let dcap = Cap::new(16, 0);
    let mut samples = Vec::new();
    for _ in 0..6 {
        samples.push(LocalFunctional::new(random_jet_poly(&mut rng, 1, dcap, 1, 1, 3)));
    }
    for x in 0..samples.len() {
        for y in 0..samples.len() {
            let s1 = a.bracket(&samples[x], &samples[y]).density;
            let s2 = a.bracket(&samples[y], &samples[x]).density;
            out.check((&s1 + &s2).is_exact(), format!("antisymmetry ({x},{y})"));
        }
    }
    for t in 0..3 {
        let (f, g, hh) = (&samples[t], &samples[t + 1], &samples[t + 2]);
        let j = &(&a.bracket(&a.bracket(f, g), hh).density + &a.bracket(&a.bracket(g, hh), f).density)
            + &a.bracket(&a.bracket(hh, f), g).density;
        out.check(j.is_exact(), format!("Jacobi triple {t}"));
    }
    for t in 0..20 {
        let h1 = LocalFunctional::new(random_jet_poly(&mut rng, 1, dcap, 1, 1, 2));
        let h2 = LocalFunctional::new(random_jet_poly(&mut rng, 1, dcap, 1, 1, 2));
        let x1 = a.hamiltonian_derivation(&h1);
        let x2 = a.hamiltonian_derivation(&h2);
        let lhs = x1.commutator(&x2);
        let rhs = a.hamiltonian_derivation(&a.bracket(&h1, &h2)).scale(&rat(-1));
        out.check(lhs.agrees_with(&rhs), format!("[X_H1, X_H2] != -X_(H1,H2) for pair {t}"));
    }
    out.note("100 random δ∘∂ samples; antisymmetry and Jacobi on N = 0; 20 Poisson-module pairs");
    out.finish(11, "jet-algebra foundations", start, 60.0);
}
