//! The ingested Frobenius-type structure: pairing, quantum multiplication
//! operators and the normalization of the fundamental solution.
//!
//! The operator `Ω_ℓ` is quantum multiplication by `Φ_ℓ` written in the basis
//! `Φ_0..Φ_N`, with the image in the column index:
//! `Φ_ℓ • Φ_a = Σ_k (Ω_ℓ)_{ka} Φ_k`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RatMatrix};
use crate::matrix::SeriesMatrix;
use crate::report::{describe_matrix_residual, Report};
use crate::series::{format_rational, parse_rational, rat, Cap, Exponent, Rational, TruncSeries};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusModel {
    pub name: String,
    pub dim: usize,
    pub novikov_rank: usize,
    /// Coordinates of the unit `1` in the basis `Φ_i`.
    pub unit: Vec<Rational>,
    pub pairing_g: RatMatrix,
    omega: Vec<Vec<(Exponent, RatMatrix)>>,
    s_origin: Vec<Vec<(Exponent, RatMatrix)>>,
    /// Precision of the ingested data; `None` for exact polynomial data.
    pub data_cap: Option<Cap>,
}

impl FrobeniusModel {
    /// Builds and validates a model from polynomial data. Every `omega` entry
    /// lists `(exponent over (Q, v), matrix)` terms; `s_origin[n - 1]` lists
    /// `(Q-exponent, matrix)` terms of `S_n(0)`.
    pub fn new(
        name: impl Into<String>,
        novikov_rank: usize,
        unit: Vec<Rational>,
        pairing_g: RatMatrix,
        omega: Vec<Vec<(Exponent, RatMatrix)>>,
        s_origin: Vec<Vec<(Exponent, RatMatrix)>>,
        data_cap: Option<Cap>,
    ) -> Result<Self> {
        let dim = pairing_g.len();
        let model = FrobeniusModel {
            name: name.into(),
            dim,
            novikov_rank,
            unit,
            pairing_g,
            omega,
            s_origin,
            data_cap,
        };
        model.validate_shapes()?;
        model.validate_axioms()?;
        Ok(model)
    }

    /// The point: `K(pt) = Q`, `g = 1`, `Ω_0 = 1`.
    pub fn point() -> Self {
        Self::new("pt", 0, vec![rat(1)], vec![vec![rat(1)]], vec![vec![(vec![0], vec![vec![rat(1)]])]], vec![], None)
            .expect("built-in point model is valid")
    }

    /// Two disjoint points in the idempotent basis: `g = Id`, componentwise product.
    pub fn two_points() -> Self {
        let z = vec![0, 0];
        let o0 = vec![vec![rat(1), rat(0)], vec![rat(0), rat(0)]];
        let o1 = vec![vec![rat(0), rat(0)], vec![rat(0), rat(1)]];
        Self::new("pt2", 0, vec![rat(1), rat(1)], linalg::identity(2), vec![vec![(z.clone(), o0)], vec![(z, o1)]], vec![], None)
            .expect("built-in two-point model is valid")
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "pt" => Ok(Self::point()),
            "pt2" => Ok(Self::two_points()),
            other => Err(Error::InvalidModel(format!("unknown built-in model '{other}' (expected pt or pt2)"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.into_model()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&ModelFile::from_model(self)).expect("model serializes")
    }

    /// Index of the unit when it is a basis vector.
    pub fn unit_index(&self) -> Option<usize> {
        let ones: Vec<usize> = (0..self.dim).filter(|&i| self.unit[i] == rat(1)).collect();
        let zeros = self.unit.iter().filter(|x| **x == rat(0)).count();
        (ones.len() == 1 && zeros + 1 == self.dim).then(|| ones[0])
    }

    /// The coordinate arity `(r, N + 1)` of every series attached to the model.
    pub fn arity(&self) -> (usize, usize) {
        (self.novikov_rank, self.dim)
    }

    fn effective(&self, cap: Cap) -> Cap {
        match self.data_cap {
            Some(d) => d.min(cap),
            None => cap,
        }
    }

    fn build(&self, terms: &[(Exponent, RatMatrix)], nv: usize, cap: Cap) -> SeriesMatrix {
        let mut m = SeriesMatrix::zero(self.dim, self.dim, self.novikov_rank, nv, cap);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let entry = TruncSeries::from_terms(
                    terms.iter().map(|(e, a)| {
                        let mut full = e.clone();
                        full.resize(self.novikov_rank + nv, 0);
                        (full, a[i][j].clone())
                    }),
                    self.novikov_rank,
                    nv,
                    cap,
                );
                m.set(i, j, entry);
            }
        }
        m
    }

    /// `Ω_ℓ(v)` at the requested precision (never finer than the data).
    pub fn omega(&self, l: usize, cap: Cap) -> SeriesMatrix {
        self.build(&self.omega[l], self.dim, self.effective(cap))
    }

    pub fn omegas(&self, cap: Cap) -> Vec<SeriesMatrix> {
        (0..self.dim).map(|l| self.omega(l, cap)).collect()
    }

    /// `S_n(0)` for `n >= 1` (zero beyond the supplied data).
    pub fn s_origin(&self, n: usize, cap: Cap) -> SeriesMatrix {
        let cap = self.effective(cap);
        match self.s_origin.get(n.wrapping_sub(1)) {
            Some(terms) if n >= 1 => self.build(terms, self.dim, cap),
            _ => SeriesMatrix::zero(self.dim, self.dim, self.novikov_rank, self.dim, cap),
        }
    }

    pub fn s_origin_len(&self) -> usize {
        self.s_origin.len()
    }

    pub fn g_matrix(&self, cap: Cap) -> SeriesMatrix {
        SeriesMatrix::from_rational(&self.pairing_g, self.novikov_rank, self.dim, cap)
    }

    pub fn unit_column(&self, cap: Cap) -> SeriesMatrix {
        let (nq, nv) = self.arity();
        SeriesMatrix::column(self.unit.iter().map(|c| TruncSeries::constant(c.clone(), nq, nv, cap)).collect())
    }

    /// Quantum product of two vectors (columns in the basis `Φ_i`).
    pub fn product(&self, omegas: &[SeriesMatrix], a: &SeriesMatrix, b: &SeriesMatrix) -> SeriesMatrix {
        &self.mult_operator(omegas, a) * b
    }

    /// Operator of quantum multiplication by the vector `a`: `Σ_ℓ a_ℓ Ω_ℓ`.
    pub fn mult_operator(&self, omegas: &[SeriesMatrix], a: &SeriesMatrix) -> SeriesMatrix {
        let mut acc = omegas[0].scale_series(a.get(0, 0));
        for l in 1..self.dim {
            acc = &acc + &omegas[l].scale_series(a.get(l, 0));
        }
        acc
    }

    fn validate_shapes(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let square = |m: &RatMatrix| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.pairing_g) {
            return Err(Error::InvalidModel(format!("pairing_g must be {n}x{n}")));
        }
        if self.unit.len() != n {
            return Err(Error::InvalidModel(format!("unit must have {n} components")));
        }
        if self.omega.len() != n {
            return Err(Error::InvalidModel(format!("expected {n} omega operators, found {}", self.omega.len())));
        }
        for (l, terms) in self.omega.iter().enumerate() {
            for (e, m) in terms {
                if e.len() != self.novikov_rank + n || !square(m) {
                    return Err(Error::InvalidModel(format!(
                        "omega[{l}]: exponent must have {} entries and matrices must be {n}x{n}",
                        self.novikov_rank + n
                    )));
                }
            }
        }
        for (k, terms) in self.s_origin.iter().enumerate() {
            for (e, m) in terms {
                if e.len() != self.novikov_rank || !square(m) {
                    return Err(Error::InvalidModel(format!(
                        "s_origin[{}]: exponent must have {} Novikov entries and matrices must be {n}x{n}",
                        k + 1,
                        self.novikov_rank
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the ingestion invariants: symmetric invertible `g`, the unit
    /// axiom, commutativity of the product and flatness.
    fn validate_axioms(&self) -> Result<()> {
        if !linalg::is_symmetric(&self.pairing_g) {
            return Err(Error::InvalidModel("pairing_g is not symmetric".into()));
        }
        if linalg::inverse(&self.pairing_g).is_err() {
            return Err(Error::InvalidModel("pairing_g is not invertible".into()));
        }
        let report = self.algebra_report(self.validation_cap());
        if let Some(bad) = report.failures().next() {
            return Err(Error::InvalidModel(format!("{} fails: {}", bad.name, bad.detail)));
        }
        Ok(())
    }

    fn validation_cap(&self) -> Cap {
        self.data_cap.unwrap_or_else(|| {
            let dv = self.omega.iter().flatten().map(|(e, _)| e[self.novikov_rank..].iter().map(|&d| d as i32).sum::<i32>()).max().unwrap_or(0);
            let dq = self.omega.iter().flatten().map(|(e, _)| e[..self.novikov_rank].iter().map(|&d| d as i32).sum::<i32>()).max().unwrap_or(0);
            Cap::new(2 * dv + 2, 2 * dq)
        })
    }

    /// Identities involving only `Ω`: unit, commutativity, associativity and flatness.
    pub fn algebra_report(&self, cap: Cap) -> Report {
        let mut r = Report::new(format!("algebra of model {}", self.name));
        let om = self.omegas(cap);
        let (nq, nv) = self.arity();
        let id = SeriesMatrix::identity(self.dim, nq, nv, cap);
        let mut unit_op = om[0].scale(&self.unit[0]);
        for l in 1..self.dim {
            unit_op = &unit_op + &om[l].scale(&self.unit[l]);
        }
        let res = &unit_op - &id;
        r.push("unit axiom Σ unit_ℓ Ω_ℓ = Id", res.is_zero(), describe_matrix_residual(&res));
        let mut comm_ok = true;
        let mut comm_detail = String::from("zero");
        for l in 0..self.dim {
            for a in 0..self.dim {
                for k in 0..self.dim {
                    let d = om[l].get(k, a) - om[a].get(k, l);
                    if !d.is_zero() && comm_ok {
                        comm_ok = false;
                        comm_detail = format!("Φ_{l}•Φ_{a} vs Φ_{a}•Φ_{l}, component {k}: {}", crate::report::describe_residual(&d));
                    }
                }
            }
        }
        r.push("commutativity Φ_i•Φ_j = Φ_j•Φ_i", comm_ok, comm_detail);
        let mut assoc = (true, String::from("zero"));
        let mut flat = (true, String::from("zero"));
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let c = &(&om[i] * &om[j]) - &(&om[j] * &om[i]);
                if !c.is_zero() && assoc.0 {
                    assoc = (false, format!("[Ω_{i},Ω_{j}] {}", describe_matrix_residual(&c)));
                }
                let d = &om[j].diff_v(i) - &om[i].diff_v(j);
                if !d.is_zero() && flat.0 {
                    flat = (false, format!("∂_{i}Ω_{j} - ∂_{j}Ω_{i} {}", describe_matrix_residual(&d)));
                }
            }
        }
        r.push("associativity [Ω_i, Ω_j] = 0", assoc.0, assoc.1);
        r.push("flatness ∂_iΩ_j = ∂_jΩ_i", flat.0, flat.1);
        r
    }

    /// Returns a copy with one `Ω_ℓ` coefficient replaced, bypassing
    /// validation. Used to build negative controls.
    pub fn with_perturbed_omega(&self, l: usize, exponent: Exponent, delta: RatMatrix) -> Self {
        let mut m = self.clone();
        m.name = format!("{}-perturbed", self.name);
        m.omega[l].push((exponent, delta));
        m
    }
}

/// Full ledger of the structure axioms at the given precision: the algebra
/// identities, the quantum differential equations and the metric identities.
pub fn verify_frobenius(model: &FrobeniusModel, cap: Cap, n_u: usize) -> Report {
    let mut r = Report::new(format!("Frobenius structure of {}", model.name));
    r.extend(model.algebra_report(cap));
    match crate::smatrix::solve_s(model, cap, n_u) {
        Err(e) => r.push("solve quantum differential equations", false, e.to_string()),
        Ok(s) => {
            r.extend(crate::smatrix::qde_report(model, &s));
            match crate::metric::metric(model, &s) {
                Err(e) => r.push("metric G = g S(v,0)^-1", false, e.to_string()),
                Ok(md) => r.extend(crate::metric::metric_report(model, &md)),
            }
        }
    }
    r
}

/// Reads a model file and verifies every structure axiom before returning it.
pub fn load_model(path: impl AsRef<Path>) -> Result<FrobeniusModel> {
    let model = FrobeniusModel::load(path)?;
    let cap = model.data_cap.unwrap_or_else(|| model.validation_cap());
    let report = verify_frobenius(&model, cap, 1);
    if let Some(bad) = report.failures().next() {
        return Err(Error::InvalidModel(format!("{} fails: {}", bad.name, bad.detail)));
    }
    Ok(model)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    name: String,
    dim: usize,
    #[serde(default)]
    novikov_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<Vec<String>>,
    pairing_g: Vec<Vec<String>>,
    omega: Vec<MatrixSeriesFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    s_origin: Vec<MatrixSeriesFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    caps: Option<CapsFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixSeriesFile {
    #[serde(default)]
    terms: Vec<TermFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    exponent: Vec<u16>,
    matrix: Vec<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapsFile {
    d_v: i32,
    #[serde(default)]
    d_q: i32,
}

fn parse_matrix(m: &[Vec<String>]) -> Result<RatMatrix> {
    m.iter().map(|row| row.iter().map(|s| parse_rational(s)).collect()).collect()
}

fn render_matrix(m: &RatMatrix) -> Vec<Vec<String>> {
    m.iter().map(|row| row.iter().map(format_rational).collect()).collect()
}

impl ModelFile {
    fn into_model(self) -> Result<FrobeniusModel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let unit = match (self.unit_index, &self.unit) {
            (Some(_), Some(_)) => return Err(Error::Schema("give either unit_index or unit, not both".into())),
            (Some(i), None) => {
                if i >= self.dim {
                    return Err(Error::Schema(format!("unit_index {i} out of range for dim {}", self.dim)));
                }
                (0..self.dim).map(|k| rat((k == i) as i64)).collect()
            }
            (None, Some(u)) => u.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?,
            (None, None) => return Err(Error::Schema("missing unit_index (or unit vector)".into())),
        };
        let g = parse_matrix(&self.pairing_g)?;
        if g.len() != self.dim {
            return Err(Error::Schema(format!("pairing_g has {} rows, dim is {}", g.len(), self.dim)));
        }
        let conv = |list: &[MatrixSeriesFile]| -> Result<Vec<Vec<(Exponent, RatMatrix)>>> {
            list.iter()
                .map(|s| s.terms.iter().map(|t| Ok((t.exponent.clone(), parse_matrix(&t.matrix)?))).collect())
                .collect()
        };
        let omega = conv(&self.omega)?;
        let s_origin = conv(&self.s_origin)?;
        let cap = self.caps.map(|c| Cap::new(c.d_v, c.d_q));
        if let Some(c) = cap {
            if c.v < 0 || c.q < 0 {
                return Err(Error::Schema("caps must be non-negative".into()));
            }
        }
        FrobeniusModel::new(self.name, self.novikov_rank, unit, g, omega, s_origin, cap)
    }

    fn from_model(m: &FrobeniusModel) -> Self {
        let conv = |list: &[Vec<(Exponent, RatMatrix)>]| {
            list.iter()
                .map(|terms| MatrixSeriesFile {
                    terms: terms.iter().map(|(e, a)| TermFile { exponent: e.clone(), matrix: render_matrix(a) }).collect(),
                })
                .collect()
        };
        let (unit_index, unit) = match m.unit_index() {
            Some(i) => (Some(i), None),
            None => (None, Some(m.unit.iter().map(format_rational).collect())),
        };
        ModelFile {
            schema_version: SCHEMA_VERSION,
            name: m.name.clone(),
            dim: m.dim,
            novikov_rank: m.novikov_rank,
            unit_index,
            unit,
            pairing_g: render_matrix(&m.pairing_g),
            omega: conv(&m.omega),
            s_origin: conv(&m.s_origin),
            caps: m.data_cap.map(|c| CapsFile { d_v: c.v, d_q: c.q }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        let pt = FrobeniusModel::point();
        assert_eq!(pt.unit_index(), Some(0));
        let pt2 = FrobeniusModel::two_points();
        assert_eq!(pt2.unit_index(), None);
        assert!(pt2.algebra_report(Cap::new(5, 0)).all_passed());
    }

    #[test]
    fn wrong_unit_is_rejected() {
        let text = r#"
schema_version = 1
name = "bad-unit"
dim = 1
unit_index = 0
pairing_g = [["1"]]
[[omega]]
terms = [{ exponent = [0], matrix = [["2"]] }]
"#;
        let err = FrobeniusModel::from_toml(text).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(ref m) if m.contains("unit axiom")), "{err:?}");
    }

    #[test]
    fn non_symmetric_pairing_is_rejected() {
        let text = r#"
schema_version = 1
name = "asym"
dim = 2
unit_index = 0
pairing_g = [["1", "1"], ["0", "1"]]
[[omega]]
terms = [{ exponent = [0, 0], matrix = [["1", "0"], ["0", "1"]] }]
[[omega]]
terms = [{ exponent = [0, 0], matrix = [["0", "0"], ["1", "1"]] }]
"#;
        assert_eq!(FrobeniusModel::from_toml(text), Err(Error::InvalidModel("pairing_g is not symmetric".into())));
    }

    #[test]
    fn decimal_entries_are_a_schema_error() {
        let text = r#"
schema_version = 1
name = "decimal"
dim = 1
unit_index = 0
pairing_g = [["0.5"]]
[[omega]]
terms = [{ exponent = [0], matrix = [["1"]] }]
"#;
        assert!(matches!(FrobeniusModel::from_toml(text), Err(Error::Schema(_))));
    }

    #[test]
    fn round_trip_through_toml() {
        for m in [FrobeniusModel::point(), FrobeniusModel::two_points()] {
            let text = m.to_toml();
            assert_eq!(FrobeniusModel::from_toml(&text).unwrap(), m);
        }
    }
}
