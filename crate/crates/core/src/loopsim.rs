//! Pseudo-spectral time integration of hydrodynamic flows on the circle
//! `x ∈ [0, 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::jet::{Flow, LocalFunctional};
use crate::series::TruncSeries;

/// A truncated series converted to floating point once.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledSeries {
    nq: usize,
    terms: Vec<(Vec<u16>, f64)>,
}

impl CompiledSeries {
    pub fn new(s: &TruncSeries) -> Self {
        let terms = s.terms().map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN))).collect();
        CompiledSeries { nq: s.nq(), terms }
    }

    pub fn eval(&self, q: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (j, &d) in e.iter().enumerate() {
                if d > 0 {
                    let x = if j < self.nq { q[j] } else { v[j - self.nq] };
                    m *= x.powi(d as i32);
                }
            }
            acc += m;
        }
        acc
    }
}

/// Right-hand side `∂_t v_a = F_a(x, v, ∂_x v)` evaluated pointwise.
pub type CustomRhs = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// A flow ready for numerical integration.
#[derive(Clone)]
pub enum NumericFlow {
    /// `∂_t v_a = Σ_b c_{ab}(v) ∂_x v_b` with coefficients from a symbolic flow.
    Hydrodynamic { label: String, coeffs: Vec<Vec<Option<CompiledSeries>>>, novikov: Vec<f64> },
    /// Any pointwise first-order right-hand side; used for controls.
    Custom { label: String, dim: usize, rhs: CustomRhs, speed: f64 },
}

impl fmt::Debug for NumericFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NumericFlow({})", self.label())
    }
}

impl NumericFlow {
    /// Compiles a hydrodynamic flow, evaluating Novikov variables at `novikov`.
    pub fn compile(flow: &Flow, novikov: &[f64]) -> Result<Self> {
        if !flow.is_hydrodynamic() {
            return Err(Error::InvalidArgument("loop simulation needs a hydrodynamic flow".into()));
        }
        let dim = flow.dim();
        let mut coeffs = vec![vec![None; dim]; dim];
        for (a, comp) in flow.components.iter().enumerate() {
            for (m, c) in comp.terms() {
                match m.as_slice() {
                    [] if c.is_zero() => {}
                    [(b, 1)] => coeffs[a][*b as usize] = Some(CompiledSeries::new(c)),
                    _ => return Err(Error::InvalidArgument("loop simulation needs a hydrodynamic flow".into())),
                }
            }
        }
        if let Some(first) = flow.components.first() {
            if novikov.len() != first.arity().0 {
                return Err(Error::InvalidArgument(format!(
                    "expected {} Novikov values, got {}",
                    first.arity().0,
                    novikov.len()
                )));
            }
        }
        let label = match flow.label {
            Some((n, i)) => format!("P_({n},{i})"),
            None => "flow".into(),
        };
        Ok(NumericFlow::Hydrodynamic { label, coeffs, novikov: novikov.to_vec() })
    }

    pub fn custom(label: impl Into<String>, dim: usize, speed: f64, rhs: CustomRhs) -> Self {
        NumericFlow::Custom { label: label.into(), dim, rhs, speed }
    }

    pub fn label(&self) -> &str {
        match self {
            NumericFlow::Hydrodynamic { label, .. } | NumericFlow::Custom { label, .. } => label,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NumericFlow::Hydrodynamic { coeffs, .. } => coeffs.len(),
            NumericFlow::Custom { dim, .. } => *dim,
        }
    }

    fn eval(&self, x: f64, v: &[f64], vx: &[f64], out: &mut [f64]) {
        match self {
            NumericFlow::Hydrodynamic { coeffs, novikov, .. } => {
                for (a, row) in coeffs.iter().enumerate() {
                    out[a] = row
                        .iter()
                        .zip(vx)
                        .filter_map(|(c, d)| c.as_ref().map(|c| c.eval(novikov, v) * d))
                        .sum();
                }
            }
            NumericFlow::Custom { rhs, .. } => rhs(x, v, vx, out),
        }
    }

    /// Bound on characteristic speeds at a point: the maximal absolute row sum.
    fn speed(&self, v: &[f64]) -> f64 {
        match self {
            NumericFlow::Hydrodynamic { coeffs, novikov, .. } => coeffs
                .iter()
                .map(|row| row.iter().flatten().map(|c| c.eval(novikov, v).abs()).sum::<f64>())
                .fold(0.0, f64::max),
            NumericFlow::Custom { speed, .. } => *speed,
        }
    }
}

/// Samples of `v: S^1 -> R^{N+1}` on `M` equispaced points.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopState {
    /// `v[a][j] = v_a(j / M)`.
    pub v: Vec<Vec<f64>>,
    pub t: f64,
    pub label: String,
}

impl LoopState {
    pub fn new(v: Vec<Vec<f64>>) -> Result<Self> {
        let m = v.first().map_or(0, |c| c.len());
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid size {m} must be a power of two >= 4")));
        }
        if v.iter().any(|c| c.len() != m || c.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("samples must be finite and of equal length".into()));
        }
        Ok(LoopState { v, t: 0.0, label: "initial".into() })
    }

    /// `v_a(x) = amplitude[a] sin(2πx) + mean[a]`.
    pub fn sine(m: usize, amplitude: &[f64], mean: &[f64]) -> Result<Self> {
        let v = amplitude
            .iter()
            .zip(mean)
            .map(|(a, c)| (0..m).map(|j| a * (2.0 * PI * j as f64 / m as f64).sin() + c).collect())
            .collect();
        Self::new(v)
    }

    pub fn from_fn(m: usize, dim: usize, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        Self::new((0..dim).map(|a| (0..m).map(|j| f(a, j as f64 / m as f64)).collect()).collect())
    }

    pub fn m(&self) -> usize {
        self.v[0].len()
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.m() as f64
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        self.v.iter().map(|c| c[j]).collect()
    }

    /// `(Σ_a ∫ |v_a - w_a|^2 dx)^{1/2}` by the rectangle rule.
    pub fn l2_distance(&self, other: &LoopState) -> f64 {
        let m = self.m() as f64;
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / m)
            .sum::<f64>()
            .sqrt()
    }
}

/// Spectral differentiation and filtering on a fixed grid.
pub struct Spectral {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Spectral(m = {})", self.m)
    }
}

impl Spectral {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.m / 2 {
            j as i64
        } else {
            j as i64 - self.m as i64
        }
    }

    fn transform(&self, f: &[f64], modify: impl Fn(i64, Complex<f64>) -> Complex<f64>) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (j, z) in buf.iter_mut().enumerate() {
            *z = modify(self.wavenumber(j), *z);
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// `∂_x f` with the Nyquist mode removed.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let nyq = (self.m / 2) as i64;
        self.transform(f, |k, z| if k.abs() == nyq { Complex::new(0.0, 0.0) } else { z * Complex::new(0.0, 2.0 * PI * k as f64) })
    }

    /// Removes modes with `|k| > M/3`.
    pub fn dealias(&self, f: &[f64]) -> Vec<f64> {
        let cut = (self.m / 3) as i64;
        self.transform(f, |k, z| if k.abs() > cut { Complex::new(0.0, 0.0) } else { z })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    TwoThirds,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: Dealias,
    /// Record a history row every `cadence` steps.
    pub cadence: usize,
    /// Largest admissible `dt · speed · π M`; larger steps are subdivided.
    pub stability_bound: f64,
    /// Abort once `max |∂_x v|` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            m: 256,
            dt: 1e-4,
            t_end: 0.1,
            dealias: Dealias::TwoThirds,
            cadence: 100,
            stability_bound: 2.5,
            blowup_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub t: f64,
    pub conserved: Vec<f64>,
    pub max_gradient: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct History {
    pub names: Vec<String>,
    pub rows: Vec<HistoryRow>,
}

/// Integrator bound to a grid size.
#[derive(Debug)]
pub struct Integrator {
    spectral: Spectral,
    pub config: SimConfig,
}

impl Integrator {
    pub fn new(config: SimConfig) -> Result<Self> {
        if config.m < 4 || !config.m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid size {} must be a power of two >= 4", config.m)));
        }
        if !(config.dt > 0.0) || !(config.t_end >= 0.0) || config.cadence == 0 {
            return Err(Error::InvalidArgument("dt must be positive, t_end non-negative and cadence >= 1".into()));
        }
        Ok(Integrator { spectral: Spectral::new(config.m), config })
    }

    pub fn derivative(&self, state: &LoopState) -> Vec<Vec<f64>> {
        state.v.iter().map(|c| self.spectral.derivative(c)).collect()
    }

    pub fn max_gradient(&self, state: &LoopState) -> f64 {
        self.derivative(state).iter().flatten().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
    }

    fn rhs(&self, flow: &NumericFlow, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dim = v.len();
        let m = self.config.m;
        let vx: Vec<Vec<f64>> = v.iter().map(|c| self.spectral.derivative(c)).collect();
        let mut out = vec![vec![0.0; m]; dim];
        let mut pt = vec![0.0; dim];
        let mut dpt = vec![0.0; dim];
        let mut res = vec![0.0; dim];
        for j in 0..m {
            for a in 0..dim {
                pt[a] = v[a][j];
                dpt[a] = vx[a][j];
            }
            flow.eval(j as f64 / m as f64, &pt, &dpt, &mut res);
            for a in 0..dim {
                out[a][j] = res[a];
            }
        }
        match self.config.dealias {
            Dealias::TwoThirds => out.iter().map(|c| self.spectral.dealias(c)).collect(),
            Dealias::None => out,
        }
    }

    fn rk4(&self, flow: &NumericFlow, v: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
        let axpy = |base: &[Vec<f64>], k: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
            base.iter().zip(k).map(|(b, k)| b.iter().zip(k).map(|(x, y)| x + c * y).collect()).collect()
        };
        let k1 = self.rhs(flow, v);
        let k2 = self.rhs(flow, &axpy(v, &k1, h / 2.0));
        let k3 = self.rhs(flow, &axpy(v, &k2, h / 2.0));
        let k4 = self.rhs(flow, &axpy(v, &k3, h));
        v.iter()
            .enumerate()
            .map(|(a, c)| {
                c.iter()
                    .enumerate()
                    .map(|(j, x)| x + h / 6.0 * (k1[a][j] + 2.0 * k2[a][j] + 2.0 * k3[a][j] + k4[a][j]))
                    .collect()
            })
            .collect()
    }

    fn substeps(&self, flow: &NumericFlow, state: &LoopState, dt: f64) -> usize {
        let speed = (0..state.m()).map(|j| flow.speed(&state.point(j))).fold(0.0, f64::max);
        let cfl = dt * speed * PI * self.config.m as f64;
        if cfl <= self.config.stability_bound || !cfl.is_finite() {
            1
        } else {
            (cfl / self.config.stability_bound).ceil() as usize
        }
    }

    /// One classical fourth-order step of size `dt`, subdivided when the
    /// stability bound requires it.
    pub fn step(&self, state: &LoopState, flow: &NumericFlow, dt: f64) -> Result<LoopState> {
        if flow.dim() != state.dim() || state.m() != self.config.m {
            return Err(Error::InvalidArgument("flow, state and grid sizes disagree".into()));
        }
        let n = self.substeps(flow, state, dt);
        let h = dt / n as f64;
        let mut v = state.v.clone();
        for _ in 0..n {
            v = self.rk4(flow, &v, h);
        }
        let t = state.t + dt;
        if v.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::BlowupDetected { t });
        }
        Ok(LoopState { v, t, label: flow.label().to_string() })
    }

    /// Integrates for `duration`, recording conserved quantities.
    pub fn evolve(
        &self,
        state: &LoopState,
        flow: &NumericFlow,
        duration: f64,
        densities: &[(String, CompiledSeries)],
    ) -> Result<(LoopState, History)> {
        let dt = self.config.dt;
        let steps = (duration / dt).round() as usize;
        let last = duration - dt * steps as f64;
        let g0 = self.max_gradient(state);
        let limit = if g0 > 0.0 { self.config.blowup_factor * g0 } else { f64::INFINITY };
        let mut history = History { names: densities.iter().map(|(n, _)| n.clone()).collect(), rows: Vec::new() };
        let record = |s: &LoopState, g: f64, h: &mut History| {
            h.rows.push(HistoryRow { t: s.t, conserved: densities.iter().map(|(_, d)| integral(s, d)).collect(), max_gradient: g });
        };
        record(state, g0, &mut history);
        let mut cur = state.clone();
        let total = steps + usize::from(last.abs() > 1e-15 * dt.max(1.0));
        for k in 0..total {
            let h = if k < steps { dt } else { last };
            cur = self.step(&cur, flow, h)?;
            let g = self.max_gradient(&cur);
            if !(g <= limit) {
                return Err(Error::BlowupDetected { t: cur.t });
            }
            if (k + 1) % self.config.cadence == 0 || k + 1 == total {
                record(&cur, g, &mut history);
            }
        }
        Ok((cur, history))
    }
}

/// `∫_0^1 f(v(x)) dx` by the rectangle rule (spectrally accurate for periodic data).
pub fn integral(state: &LoopState, density: &CompiledSeries) -> f64 {
    let m = state.m();
    (0..m).map(|j| density.eval(&[], &state.point(j))).sum::<f64>() / m as f64
}

fn integral_abs(state: &LoopState, density: &CompiledSeries) -> f64 {
    let m = state.m();
    (0..m).map(|j| density.eval(&[], &state.point(j)).abs()).sum::<f64>() / m as f64
}

/// Compiles a jet-free local functional for numerical integration.
pub fn compile_density(h: &LocalFunctional) -> Result<CompiledSeries> {
    if !h.density.is_jet_free() {
        return Err(Error::JetsNotAllowed);
    }
    Ok(CompiledSeries::new(&h.density.jet_free_part()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRow {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max_t |I(t) - I(0)| / max(|I(0)|, ∫|density(v(x,0))|dx)`; zero when the drift is zero.
    pub relative: f64,
}

/// Drift of `∫ density dx` over a sequence of states.
pub fn conserved_drift(states: &[LoopState], densities: &[(String, CompiledSeries)]) -> Vec<DriftRow> {
    let Some(first) = states.first() else { return Vec::new() };
    densities
        .iter()
        .map(|(name, d)| {
            let i0 = integral(first, d);
            let scale = i0.abs().max(integral_abs(first, d));
            let drift = states.iter().map(|s| (integral(s, d) - i0).abs()).fold(0.0, f64::max);
            let relative = if drift == 0.0 { 0.0 } else { drift / scale };
            DriftRow { name: name.clone(), initial: i0, max_abs_drift: drift, relative }
        })
        .collect()
}

/// The same drift computed from a recorded history.
pub fn history_drift(history: &History, initial_state: &LoopState, densities: &[(String, CompiledSeries)]) -> Vec<DriftRow> {
    densities
        .iter()
        .enumerate()
        .map(|(k, (name, d))| {
            let i0 = history.rows.first().map_or(0.0, |r| r.conserved[k]);
            let scale = i0.abs().max(integral_abs(initial_state, d));
            let drift = history.rows.iter().map(|r| (r.conserved[k] - i0).abs()).fold(0.0, f64::max);
            let relative = if drift == 0.0 { 0.0 } else { drift / scale };
            DriftRow { name: name.clone(), initial: i0, max_abs_drift: drift, relative }
        })
        .collect()
}

/// L² distance between `B(t_b) ∘ A(t_a)` and `A(t_a) ∘ B(t_b)` applied to `v0`.
pub fn commute_defect(
    integrator: &Integrator,
    v0: &LoopState,
    flow_a: &NumericFlow,
    flow_b: &NumericFlow,
    t_a: f64,
    t_b: f64,
) -> Result<f64> {
    let (ab, _) = integrator.evolve(v0, flow_a, t_a, &[])?;
    let (ab, _) = integrator.evolve(&ab, flow_b, t_b, &[])?;
    let (ba, _) = integrator.evolve(v0, flow_b, t_b, &[])?;
    let (ba, _) = integrator.evolve(&ba, flow_a, t_a, &[])?;
    Ok(ab.l2_distance(&ba))
}

/// Solves `v = f(x + t c(v))`, the solution of `∂_t v = c(v) ∂_x v` with
/// `v(x, 0) = f(x)` before the gradient catastrophe, by Newton's method.
pub fn characteristics_solution(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    c: &dyn Fn(f64) -> f64,
    dc: &dyn Fn(f64) -> f64,
    x: f64,
    t: f64,
) -> f64 {
    let mut v = f(x);
    for _ in 0..100 {
        let arg = x + t * c(v);
        let r = v - f(arg);
        let dr = 1.0 - df(arg) * t * dc(v);
        let next = v - r / dr;
        if (next - v).abs() <= 1e-16 * (1.0 + v.abs()) {
            return next;
        }
        v = next;
    }
    v
}

/// L² error of a scalar state against the characteristics solution.
pub fn characteristics_error(
    state: &LoopState,
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    c: &dyn Fn(f64) -> f64,
    dc: &dyn Fn(f64) -> f64,
) -> f64 {
    let m = state.m();
    let exact = (0..m).map(|j| characteristics_solution(f, df, c, dc, state.x(j), state.t));
    (exact.zip(&state.v[0]).map(|(e, v)| (e - v).powi(2)).sum::<f64>() / m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::Hierarchy;
    use crate::model::FrobeniusModel;
    use crate::series::Cap;

    fn pt() -> Hierarchy {
        Hierarchy::new(FrobeniusModel::point(), Cap::new(10, 0), 8).unwrap()
    }

    fn sine0(x: f64) -> f64 {
        0.1 * (2.0 * PI * x).sin()
    }

    fn dsine0(x: f64) -> f64 {
        0.2 * PI * (2.0 * PI * x).cos()
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let s = LoopState::sine(32, &[1.0], &[0.0]).unwrap();
        let i = Integrator::new(SimConfig { m: 32, ..SimConfig::default() }).unwrap();
        let d = i.derivative(&s);
        for j in 0..32 {
            let want = 2.0 * PI * (2.0 * PI * s.x(j)).cos();
            assert!((d[0][j] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_loop_is_stationary() {
        let h = pt();
        let f = NumericFlow::compile(&h.flow(2, 0).unwrap(), &[]).unwrap();
        let i = Integrator::new(SimConfig { m: 16, dt: 1e-2, t_end: 0.1, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(16, &[0.0], &[0.3]).unwrap();
        let (out, _) = i.evolve(&s, &f, 0.1, &[]).unwrap();
        assert!(out.l2_distance(&s) < 1e-15);
    }

    #[test]
    fn transport_flow_translates() {
        let h = pt();
        let f = NumericFlow::compile(&h.flow(0, 0).unwrap(), &[]).unwrap();
        let i = Integrator::new(SimConfig { m: 64, dt: 1e-3, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(64, &[0.1], &[0.0]).unwrap();
        let (out, _) = i.evolve(&s, &f, 0.25, &[]).unwrap();
        let err = characteristics_error(&out, &sine0, &dsine0, &|_| 1.0, &|_| 0.0);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn burgers_matches_characteristics() {
        let h = pt();
        let f = NumericFlow::compile(&h.flow(1, 0).unwrap(), &[]).unwrap();
        let i = Integrator::new(SimConfig { m: 128, dt: 1e-3, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(128, &[0.1], &[0.0]).unwrap();
        let (out, _) = i.evolve(&s, &f, 0.1, &[]).unwrap();
        let err = characteristics_error(&out, &sine0, &dsine0, &|v| v, &|_| 1.0);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn zero_flow_has_zero_drift() {
        let zero = NumericFlow::custom("zero", 1, 0.0, Arc::new(|_, _, _, out: &mut [f64]| out[0] = 0.0));
        let i = Integrator::new(SimConfig { m: 32, dt: 1e-2, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(32, &[0.1], &[0.2]).unwrap();
        let (out, _) = i.evolve(&s, &zero, 0.1, &[]).unwrap();
        let d = vec![("v".to_string(), CompiledSeries::new(&TruncSeries::var(0, 0, 1, Cap::new(3, 0))))];
        let drift = conserved_drift(&[s, out], &d);
        assert_eq!(drift[0].relative, 0.0);
    }

    #[test]
    fn gradient_catastrophe_is_reported() {
        let h = pt();
        let f = NumericFlow::compile(&h.flow(1, 0).unwrap(), &[]).unwrap();
        let i = Integrator::new(SimConfig { m: 64, dt: 1e-2, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(64, &[0.5], &[0.0]).unwrap();
        assert!(matches!(i.evolve(&s, &f, 2.0, &[]), Err(Error::BlowupDetected { .. })));
    }

    #[test]
    fn flow_commutes_with_itself_exactly() {
        let h = pt();
        let f = NumericFlow::compile(&h.flow(1, 0).unwrap(), &[]).unwrap();
        let i = Integrator::new(SimConfig { m: 32, dt: 1e-2, ..SimConfig::default() }).unwrap();
        let s = LoopState::sine(32, &[0.1], &[0.0]).unwrap();
        assert!(commute_defect(&i, &s, &f, &f, 0.05, 0.05).unwrap() < 1e-15);
    }
}
