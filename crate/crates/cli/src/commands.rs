use anyhow::{bail, Context, Result};
use kthier::canonical::{frame_report, idempotents};
use kthier::hierarchy::{check_commute, check_involution, default_involution_samples, Hierarchy};
use kthier::jet::{format_jet_monomial, Flow};
use kthier::loopsim::{
    characteristics_error, compile_density, history_drift, Dealias, Integrator, LoopState, NumericFlow, SimConfig,
};
use kthier::metric::metric;
use kthier::model::{load_model, verify_frobenius};
use kthier::report::Report;
use kthier::series::{format_monomial, format_rational};
use kthier::smatrix::{check_symplectic, solve_s};
use kthier::topo::{
    coefficient_rows, fixed_point_residual, invariants_table, solve_tau, topological_solution, verify_theorem2,
    verify_trr, DescendantInput, OracleMode,
};
use kthier::{Cap, Error, FrobeniusModel, Rational, TruncSeries};

use crate::output::{print_table, Sink, FLOAT_FORMAT, TABLE_FORMAT};
use crate::{Common, FlowsArgs, InvariantsArgs, Mode, SimulateArgs, TauArgs, TrrArgs, VerifyArgs};

fn model_of(c: &Common) -> Result<FrobeniusModel> {
    match &c.model_file {
        Some(p) => load_model(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(FrobeniusModel::builtin(&c.model)?),
    }
}

fn cap_of(c: &Common) -> Cap {
    Cap::new(c.d_v, c.d_q)
}

fn hierarchy_of(c: &Common) -> Result<Hierarchy> {
    Ok(Hierarchy::new(model_of(c)?, cap_of(c), c.n_u as usize)?)
}

fn v_name(dim: usize) -> impl Fn(usize) -> String {
    move |a| if dim == 1 { "v".to_string() } else { format!("v{a}") }
}

fn jet_name(dim: usize, m: &[(u16, u16)]) -> String {
    let s = format_jet_monomial(m);
    if dim == 1 {
        s.replace("v0", "v")
    } else {
        s
    }
}

/// `(v^3/6)·∂v` style rendering of a single term.
fn term(coeff: &Rational, monomial: &str, jet: &str) -> String {
    let c = if monomial == "1" {
        format_rational(coeff)
    } else if coeff.denom() == &1.into() {
        match coeff.numer().to_string().as_str() {
            "1" => monomial.to_string(),
            "-1" => format!("-{monomial}"),
            n => format!("{n}*{monomial}"),
        }
    } else {
        let n = coeff.numer().to_string();
        let top = match n.as_str() {
            "1" => monomial.to_string(),
            "-1" => format!("-{monomial}"),
            n => format!("{n}*{monomial}"),
        };
        format!("{top}/{}", coeff.denom())
    };
    format!("({c})·{jet}")
}

fn flow_rows(flow: &Flow, n: usize, i: usize) -> Vec<Vec<String>> {
    let dim = flow.dim();
    let names = v_name(dim);
    let mut rows = Vec::new();
    for (a, comp) in flow.components.iter().enumerate() {
        for (m, series) in comp.terms() {
            let jet = jet_name(dim, m);
            for (e, c) in series.terms() {
                let mono = format_monomial(e, series.nq(), &names);
                rows.push(vec![
                    n.to_string(),
                    i.to_string(),
                    names(a),
                    jet.clone(),
                    mono.clone(),
                    format_rational(c),
                    term(c, &mono, &jet),
                ]);
            }
        }
    }
    rows
}

fn finish(sink: &Sink, command: &str, config: &impl serde::Serialize, reports: &[Report]) -> Result<bool> {
    for r in reports {
        println!("{r}");
    }
    sink.report("report.json", command, config, reports)?;
    let ok = reports.iter().all(Report::all_passed);
    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
    if ok {
        println!("summary: all checks passed");
    } else {
        println!("summary: {failed} check(s) failed");
    }
    Ok(ok)
}

pub fn flows(a: &FlowsArgs) -> Result<bool> {
    let h = hierarchy_of(&a.common)?;
    let sink = Sink::new(a.common.out_dir.clone())?;
    let ns: Vec<usize> = match a.n {
        Some(n) => vec![n],
        None => (0..=a.max_n).collect(),
    };
    let header = ["n", "i", "component", "jet", "monomial", "coefficient", "term"];
    let mut rows = Vec::new();
    for &n in &ns {
        for i in 0..h.model.dim {
            rows.extend(flow_rows(&h.flow(n, i)?, n, i));
        }
    }
    println!("flows of {} at D_v = {}, precision v-degree {}", h.model.name, a.common.d_v, h.cap().v);
    print_table(&header, &rows);
    sink.table("flows.csv", TABLE_FORMAT, &header, &rows)?;
    Ok(true)
}

pub fn verify(a: &VerifyArgs) -> Result<bool> {
    let c = &a.common;
    let model = model_of(c)?;
    let cap = cap_of(c);
    let n_u = c.n_u as usize;
    let sink = Sink::new(c.out_dir.clone())?;
    let mut reports = vec![verify_frobenius(&model, cap, n_u)];

    let s = solve_s(&model, cap, n_u)?;
    let md = metric(&model, &s)?;
    reports.push(check_symplectic(&model, &s, &md.g, n_u as i32)?);
    let mut frame = Report::new("canonical frame");
    match idempotents(&model, &md, cap, c.seed) {
        Ok(f) => frame.extend(frame_report(&model, &md, &f)),
        Err(Error::NotSemisimple(why)) => frame.push("semisimplicity", true, format!("not semisimple, frame skipped: {why}")),
        Err(e) => return Err(e.into()),
    }
    reports.push(frame);

    let h = Hierarchy::new(model, cap, n_u)?;
    let labels: Vec<(usize, usize)> = (0..=a.max_n).flat_map(|n| (0..h.model.dim).map(move |i| (n, i))).collect();
    let flows: Vec<Flow> = labels.iter().map(|&(n, i)| h.flow(n, i)).collect::<kthier::Result<_>>()?;

    let mut ham = Report::new("Hamiltonianity X_H(n,i) = P(n,i)");
    for (&(n, i), f) in labels.iter().zip(&flows) {
        ham.push(format!("P({n},{i}) hydrodynamic"), f.is_hydrodynamic(), "");
        let x = h.hamiltonian_flow(n, i)?;
        ham.push(format!("X_H({n},{i}) = P({n},{i})"), x.agrees_with(f), format!("to v-degree {}", x.cap().v));
    }
    reports.push(ham);

    let mut comm = Report::new("commutation and involution");
    for (x, &(n1, i1)) in labels.iter().enumerate() {
        for (y, &(n2, i2)) in labels.iter().enumerate().skip(x + 1) {
            if n1 + n2 > a.max_n {
                continue;
            }
            let cm = flows[x].commutator(&flows[y]);
            comm.push(
                format!("[P({n1},{i1}), P({n2},{i2})] = 0"),
                check_commute(&flows[x], &flows[y]),
                format!("to v-degree {}", cm.cap().v),
            );
            let inv = check_involution(&h, (n1, i1), (n2, i2), &[])?;
            comm.push(
                format!("{{H({n1},{i1}), H({n2},{i2})}} = 0"),
                inv.exact,
                format!("to v-degree {}", inv.bracket_cap.v),
            );
        }
    }
    if a.max_n >= 1 {
        let inv = check_involution(&h, (0, 0), (1, 0), &default_involution_samples())?;
        for ((q1, q2), ok) in &inv.witness {
            comm.push(format!("generating identity at (q1, q2) = ({q1}, {q2})"), *ok, "");
        }
    }
    reports.push(comm);
    finish(&sink, "verify", a, &reports)
}

fn descendant_setup(c: &Common, k_t: usize, d_t: i32) -> Result<(FrobeniusModel, kthier::smatrix::SMatrix, DescendantInput)> {
    let model = model_of(c)?;
    let s = solve_s(&model, cap_of(c), c.n_u as usize)?;
    if s.cap().v < d_t {
        bail!("D_v = {} must be at least D_t = {d_t}", c.d_v);
    }
    let input = DescendantInput::new(&model, k_t, d_t, c.d_q);
    Ok((model, s, input))
}

pub fn tau(a: &TauArgs) -> Result<bool> {
    let (model, s, input) = descendant_setup(&a.common, a.k_t, a.d_t)?;
    let sink = Sink::new(a.common.out_dir.clone())?;
    let sol = solve_tau(&model, &s, &input)?;
    let w = topological_solution(&model, &s, &sol)?;
    let names = |j: usize| input.name(j);
    let header = ["component", "monomial", "coefficient"];
    let to_rows = |values: &[TruncSeries]| -> Vec<Vec<String>> {
        coefficient_rows(values, &names).into_iter().map(|(a, m, c)| vec![a.to_string(), m, c]).collect()
    };
    let tau_rows = to_rows(&sol.tau);
    let w_rows = to_rows(&w);
    println!("τ(t) for {} through total degree {} ({} iterations)", model.name, a.d_t, sol.iterations);
    print_table(&header, &tau_rows);
    println!("w(t)");
    print_table(&header, &w_rows);
    sink.table("tau.csv", TABLE_FORMAT, &header, &tau_rows)?;
    sink.table("w.csv", TABLE_FORMAT, &header, &w_rows)?;

    let mut r = Report::new("fixed point τ = Σ S_n(τ) t_n");
    let res = fixed_point_residual(&s, &sol)?;
    let zero = res.iter().all(TruncSeries::is_zero);
    let floor = res.iter().map(|x| x.cap().v).min().unwrap_or(0);
    r.push("residual vanishes", zero, format!("to total degree {floor}"));
    let mut reports = vec![r];
    if let Some(max_n) = a.check_flows {
        reports.push(verify_theorem2(&model, &s, &sol, max_n)?);
    }
    finish(&sink, "tau", a, &reports)
}

pub fn invariants(a: &InvariantsArgs) -> Result<bool> {
    let sink = Sink::new(a.out_dir.clone())?;
    let mode = match a.mode {
        Mode::Minimal => OracleMode::Minimal,
        Mode::DimensionVanishing => OracleMode::WithDimensionVanishing,
    };
    let table = invariants_table(a.max_degree, a.max_k, mode)?;
    let header = ["correlator", "insertions", "value"];
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            let ks: Vec<String> = r.insertions.iter().map(u32::to_string).collect();
            vec![r.label(), ks.join(" "), format_rational(&r.value)]
        })
        .collect();
    for r in &table {
        println!("{} = {}", r.label(), format_rational(&r.value));
    }
    sink.table("invariants.csv", TABLE_FORMAT, &header, &rows)?;
    sink.report("report.json", "invariants", a, &[])?;
    Ok(true)
}

pub fn simulate(a: &SimulateArgs) -> Result<bool> {
    let c = &a.common;
    let h = hierarchy_of(c)?;
    let sink = Sink::new(c.out_dir.clone())?;
    let dim = h.model.dim;
    let novikov = if a.novikov.is_empty() { vec![0.0; h.model.novikov_rank] } else { a.novikov.clone() };
    if novikov.len() != h.model.novikov_rank {
        bail!("--novikov needs {} value(s)", h.model.novikov_rank);
    }
    if a.flow_i >= dim {
        bail!("--flow-i must be below the model dimension {dim}");
    }
    let config = SimConfig {
        m: a.m,
        dt: a.dt,
        t_end: a.t_end,
        dealias: if a.no_dealias { Dealias::None } else { Dealias::TwoThirds },
        cadence: a.cadence.max(1),
        ..SimConfig::default()
    };
    let integ = Integrator::new(config)?;
    let flow = NumericFlow::compile(&h.flow(a.flow_n, a.flow_i)?, &novikov)?;
    let v0 = LoopState::sine(a.m, &vec![a.amplitude; dim], &vec![a.mean; dim])?;
    let mut densities = Vec::new();
    for m in 0..=a.max_density {
        for i in 0..dim {
            densities.push((format!("H({m},{i})"), compile_density(&h.hamiltonian(m, i)?)?));
        }
    }
    let mut r = Report::new(format!("loop simulation of P({},{}) on {}", a.flow_n, a.flow_i, h.model.name));
    let (end, history) = match integ.evolve(&v0, &flow, a.t_end, &densities) {
        Ok(x) => x,
        Err(Error::BlowupDetected { t }) => {
            r.push("no gradient blow-up", false, format!("blow-up at t = {t}"));
            return finish(&sink, "simulate", a, &[r]);
        }
        Err(e) => return Err(e.into()),
    };
    r.push("no gradient blow-up", true, format!("t_end = {}", end.t));

    let mut header: Vec<String> = vec!["t".into()];
    header.extend(history.names.iter().cloned());
    header.push("max_gradient".into());
    let rows: Vec<Vec<String>> = history
        .rows
        .iter()
        .map(|row| {
            let mut out = vec![format!("{:e}", row.t)];
            out.extend(row.conserved.iter().map(|x| format!("{x:e}")));
            out.push(format!("{:e}", row.max_gradient));
            out
        })
        .collect();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    sink.table("history.csv", FLOAT_FORMAT, &hdr, &rows)?;

    let mut snap_header = vec!["x".to_string()];
    snap_header.extend((0..dim).map(|i| format!("v{i}")));
    let snap: Vec<Vec<String>> = (0..end.m())
        .map(|j| {
            let mut out = vec![format!("{:e}", end.x(j))];
            out.extend(end.point(j).iter().map(|x| format!("{x:e}")));
            out
        })
        .collect();
    let shdr: Vec<&str> = snap_header.iter().map(String::as_str).collect();
    sink.table("snapshot.csv", FLOAT_FORMAT, &shdr, &snap)?;

    for d in history_drift(&history, &v0, &densities) {
        r.push(
            format!("conservation of {}", d.name),
            d.relative <= a.drift_tol,
            format!("relative drift {:.3e}", d.relative),
        );
    }
    if dim == 1 && h.model.novikov_rank == 0 && a.flow_i == 0 {
        let n = a.flow_n as i32;
        let inv = 1.0 / (1..=a.flow_n).map(|k| k as f64).product::<f64>();
        let (amp, mean) = (a.amplitude, a.mean);
        let f = move |x: f64| mean + amp * (2.0 * std::f64::consts::PI * x).sin();
        let df = move |x: f64| 2.0 * std::f64::consts::PI * amp * (2.0 * std::f64::consts::PI * x).cos();
        let speed = move |v: f64| inv * v.powi(n);
        let dspeed = move |v: f64| if n == 0 { 0.0 } else { inv * n as f64 * v.powi(n - 1) };
        let err = characteristics_error(&end, &f, &df, &speed, &dspeed);
        r.push("characteristics solution", err <= 1e-6, format!("L2 error {err:.3e}"));
    }
    finish(&sink, "simulate", a, &[r])
}

pub fn trr(a: &TrrArgs) -> Result<bool> {
    let k_max = a.k.iter().chain(&a.k2).chain(&a.k3).copied().max().unwrap_or(1);
    let (model, s, input) = descendant_setup(&a.common, k_max, a.d_t)?;
    let sink = Sink::new(a.common.out_dir.clone())?;
    let md = metric(&model, &s)?;
    let sol = solve_tau(&model, &s, &input)?;
    let mut reports = Vec::new();
    for &k in &a.k {
        for &k2 in &a.k2 {
            for &k3 in &a.k3 {
                let mut r = verify_trr(&model, &md.g, &s, &sol, k, k2, k3)?;
                r.title = format!("{} (k, k2, k3) = ({k}, {k2}, {k3})", r.title);
                reports.push(r);
            }
        }
    }
    finish(&sink, "trr", a, &reports)
}
