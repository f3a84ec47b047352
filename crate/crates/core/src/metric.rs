//! The flat metric `G = g S(v, 0)^{-1}`, its inverse and Christoffel symbols.

use crate::error::Result;
use crate::matrix::SeriesMatrix;
use crate::model::FrobeniusModel;
use crate::report::{describe_residual, Report};
use crate::series::{ratio, TruncSeries};
use crate::smatrix::{evaluate_s_at_q, SMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricData {
    pub g: SeriesMatrix,
    pub g_inv: SeriesMatrix,
    /// `christoffel[j][s][k] = Γ^j_{sk}`.
    pub christoffel: Vec<Vec<Vec<TruncSeries>>>,
}

impl MetricData {
    pub fn gamma(&self, j: usize, s: usize, k: usize) -> &TruncSeries {
        &self.christoffel[j][s][k]
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }
}

pub fn metric(model: &FrobeniusModel, s: &SMatrix) -> Result<MetricData> {
    let cap = s.cap();
    let s0 = evaluate_s_at_q(s, &crate::series::rat(0))?;
    let g = &model.g_matrix(cap) * &s0.inverse()?;
    let g_inv = g.inverse()?;
    let omegas = model.omegas(cap);
    let n = model.dim;
    // G(Φ_s • Φ_k, Φ_l) = Σ_m (Ω_s)_{mk} G_{ml}
    let mut christoffel = vec![vec![vec![TruncSeries::zero(model.novikov_rank, n, cap); n]; n]; n];
    let half = ratio(1, 2);
    for sidx in 0..n {
        let prod = &omegas[sidx].transpose() * &g;
        for k in 0..n {
            for j in 0..n {
                let mut acc = TruncSeries::zero(model.novikov_rank, n, cap);
                for l in 0..n {
                    acc = &acc + &(g_inv.get(j, l) * prod.get(k, l));
                }
                christoffel[j][sidx][k] = acc.scale(&half);
            }
        }
    }
    Ok(MetricData { g, g_inv, christoffel })
}

/// Symmetry of `G`, total symmetry of `G(Φ_i•Φ_j, Φ_k)`, the Levi-Civita
/// characterization of `Γ`, and the closed form `Γ^j_{sk} = ½ (Ω_s)_{jk}`.
pub fn metric_report(model: &FrobeniusModel, md: &MetricData) -> Report {
    let mut r = Report::new("metric and connection");
    let n = md.dim();
    let cap = md.g.cap();
    let omegas = model.omegas(cap);
    let first_bad = |ok: &mut bool, detail: &mut String, d: TruncSeries, what: String| {
        if !d.is_zero() && *ok {
            *ok = false;
            *detail = format!("{what}: {}", describe_residual(&d));
        }
    };
    let (mut ok, mut detail) = (true, String::new());
    for i in 0..n {
        for j in 0..n {
            first_bad(&mut ok, &mut detail, md.g.get(i, j) - md.g.get(j, i), format!("G_{i}{j}"));
        }
    }
    r.push("G symmetric", ok, detail);

    let (mut ok, mut detail) = (true, String::new());
    let triple = |i: usize, j: usize, k: usize| -> TruncSeries {
        let mut acc = TruncSeries::zero(model.novikov_rank, n, cap);
        for m in 0..n {
            acc = &acc + &(omegas[i].get(m, j) * md.g.get(m, k));
        }
        acc
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t = triple(i, j, k);
                first_bad(&mut ok, &mut detail, &t - &triple(j, i, k), format!("({i},{j},{k}) vs ({j},{i},{k})"));
                first_bad(&mut ok, &mut detail, &t - &triple(i, k, j), format!("({i},{j},{k}) vs ({i},{k},{j})"));
            }
        }
    }
    r.push("G(Φ_i•Φ_j, Φ_k) totally symmetric", ok, detail);

    let id = SeriesMatrix::identity(n, model.novikov_rank, n, cap);
    let d = &(&md.g * &md.g_inv) - &id;
    r.push("G G^{-1} = Id", d.is_zero(), crate::report::describe_matrix_residual(&d));

    let (mut ok, mut detail) = (true, String::new());
    let half = ratio(1, 2);
    for j in 0..n {
        for s in 0..n {
            for k in 0..n {
                first_bad(&mut ok, &mut detail, md.gamma(j, s, k) - md.gamma(j, k, s), format!("Γ^{j}_{s}{k} symmetry"));
                first_bad(&mut ok, &mut detail, md.gamma(j, s, k) - &omegas[s].get(j, k).scale(&half), format!("Γ^{j}_{s}{k} vs ½(Ω_{s})_{j}{k}"));
            }
        }
    }
    r.push("Γ^j_{sk} symmetric and equal to ½(Ω_s)_{jk}", ok, detail);

    let (mut ok, mut detail) = (true, String::new());
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut rhs = TruncSeries::zero(model.novikov_rank, n, cap);
                for l in 0..n {
                    rhs = &rhs + &(md.gamma(l, k, i) * md.g.get(l, j));
                    rhs = &rhs + &(md.gamma(l, k, j) * md.g.get(i, l));
                }
                first_bad(&mut ok, &mut detail, &md.g.get(i, j).diff_v(k) - &rhs, format!("∂_{k}G_{i}{j}"));
            }
        }
    }
    r.push("Levi-Civita: ∂_kG_ij = Σ Γ^l_ki G_lj + Γ^l_kj G_il", ok, detail);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rat, Cap};
    use crate::smatrix::solve_s;

    #[test]
    fn point_metric_is_exponential() {
        let pt = FrobeniusModel::point();
        let cap = Cap::new(9, 0);
        let s = solve_s(&pt, cap, 8).unwrap();
        let md = metric(&pt, &s).unwrap();
        let v = TruncSeries::var(0, 0, 1, cap);
        assert_eq!(md.g.get(0, 0), &v.exp().unwrap());
        assert_eq!(md.gamma(0, 0, 0), &TruncSeries::constant(ratio(1, 2), 0, 1, cap));
        assert!(metric_report(&pt, &md).all_passed());
    }

    #[test]
    fn two_point_metric_is_block_diagonal() {
        let m = FrobeniusModel::two_points();
        let cap = Cap::new(6, 0);
        let s = solve_s(&m, cap, 6).unwrap();
        let md = metric(&m, &s).unwrap();
        for a in 0..2 {
            assert_eq!(md.g.get(a, a), &TruncSeries::var(a, 0, 2, cap).exp().unwrap());
        }
        assert!(md.g.get(0, 1).is_zero());
        assert_eq!(md.g.get(0, 0).constant_term(), rat(1));
        assert!(metric_report(&m, &md).all_passed());
    }
}
