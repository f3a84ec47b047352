//! Idempotent frames of a semisimple quantum product and the associated
//! canonical-coordinate data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, RatMatrix};
use crate::matrix::SeriesMatrix;
use crate::metric::MetricData;
use crate::model::FrobeniusModel;
use crate::report::{describe_matrix_residual, Report};
use crate::series::{format_rational, rat, Cap, Rational, TruncSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct IdempotentFrame {
    /// Idempotent vector fields as columns in the basis `Φ_i`.
    pub e: Vec<SeriesMatrix>,
    /// `Δ_i = G(e_i, e_i)`.
    pub delta: Vec<TruncSeries>,
    /// `Ψ_{ai} = ∂v_a/∂u_i`: the columns are the idempotents.
    pub psi: SeriesMatrix,
}

fn projector_seed(model: &FrobeniusModel, omega0: &[RatMatrix], seed: u64) -> Result<Vec<Vec<Rational>>> {
    let n = model.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_detail = String::new();
    for attempt in 0..32 {
        let coeffs: Vec<Rational> = if attempt == 0 {
            (0..n).map(|l| rat(l as i64 + 1)).collect()
        } else {
            (0..n).map(|_| rat(rng.gen_range(-7..=7))).collect()
        };
        let mut m = linalg::zeros(n, n);
        for (l, c) in coeffs.iter().enumerate() {
            m = linalg::add(&m, &linalg::scale(&omega0[l], c));
        }
        let mut roots = linalg::rational_roots(&linalg::char_poly(&m));
        roots.sort();
        if roots.len() < n {
            last_detail = "eigenvalues of the generic combination are not all rational".into();
            continue;
        }
        if roots.windows(2).any(|w| w[0] == w[1]) {
            let shown: Vec<String> = coeffs.iter().map(format_rational).collect();
            last_detail = format!("repeated eigenvalue of Σ c_ℓ Ω_ℓ(0) for c = ({})", shown.join(", "));
            continue;
        }
        let unit = model.unit.clone();
        let id = linalg::identity(n);
        let mut out = Vec::new();
        for (i, li) in roots.iter().enumerate() {
            let mut p = id.clone();
            for (j, lj) in roots.iter().enumerate() {
                if i == j {
                    continue;
                }
                let shifted = linalg::add(&m, &linalg::scale(&id, &-lj.clone()));
                p = linalg::scale(&linalg::mul(&p, &shifted), &(li - lj).recip());
            }
            out.push(linalg::mul_vec(&p, &unit));
        }
        return Ok(out);
    }
    Err(Error::NotSemisimple(format!("order 0: {last_detail}")))
}

/// Idempotents `e_i` with `e_i • e_j = δ_ij e_j`, lifted from the origin by
/// Newton's iteration `e <- e - (2 M_e - 1)^{-1}(e•e - e)`.
pub fn idempotents(model: &FrobeniusModel, metric: &MetricData, cap: Cap, seed: u64) -> Result<IdempotentFrame> {
    let (nq, nv) = model.arity();
    let omegas = model.omegas(cap);
    let cap = omegas.iter().map(|o| o.cap()).fold(cap.min(metric.g.cap()), Cap::min);
    let omega0: Vec<RatMatrix> = omegas.iter().map(|o| o.constant_part()).collect();
    let seeds = projector_seed(model, &omega0, seed)?;
    let id = SeriesMatrix::identity(model.dim, nq, nv, cap);
    let mut frame = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        let mut e = SeriesMatrix::column(s.iter().map(|c| TruncSeries::constant(c.clone(), nq, nv, cap)).collect());
        let mut converged = false;
        for _ in 0..64 {
            let me = model.mult_operator(&omegas, &e);
            let defect = &(&me * &e) - &e;
            if defect.is_zero() {
                converged = true;
                break;
            }
            let jac = &me.scale(&rat(2)) - &id;
            let jac_inv = jac
                .inverse()
                .map_err(|_| Error::NotSemisimple(format!("Newton step for e_{i} is singular")))?;
            e = &e - &(&jac_inv * &defect);
        }
        if !converged {
            return Err(Error::NotSemisimple(format!("Newton iteration for e_{i} did not converge")));
        }
        frame.push(e);
    }
    let g = metric.g.truncate(cap);
    let delta = frame.iter().map(|e| (&(&e.transpose() * &g) * e).get(0, 0).clone()).collect();
    let mut psi = SeriesMatrix::zero(model.dim, model.dim, nq, nv, cap);
    for (i, e) in frame.iter().enumerate() {
        for a in 0..model.dim {
            psi.set(a, i, e.get(a, 0).clone());
        }
    }
    Ok(IdempotentFrame { e: frame, delta, psi })
}

/// Lie bracket of vector fields given as columns.
pub fn lie_bracket(x: &SeriesMatrix, y: &SeriesMatrix) -> SeriesMatrix {
    let n = x.rows();
    let entries = (0..n)
        .map(|a| {
            let mut acc = x.get(0, 0).diff_v(0).scale(&rat(0));
            for b in 0..n {
                acc = &acc + &(x.get(b, 0) * &y.get(a, 0).diff_v(b));
                acc = &acc - &(y.get(b, 0) * &x.get(a, 0).diff_v(b));
            }
            acc
        })
        .collect();
    SeriesMatrix::column(entries)
}

/// Checks the frame: idempotency and orthogonality under `•`, orthogonality
/// under `G`, commuting vector fields and diagonalization of every `Ω_ℓ`.
pub fn frame_report(model: &FrobeniusModel, metric: &MetricData, frame: &IdempotentFrame) -> Report {
    let mut r = Report::new("idempotent frame");
    let cap = frame.psi.cap();
    let omegas = model.omegas(cap);
    let g = metric.g.truncate(cap);
    let n = model.dim;
    let (mut prod_ok, mut prod_detail) = (true, String::new());
    let (mut orth_ok, mut orth_detail) = (true, String::new());
    let (mut br_ok, mut br_detail) = (true, String::new());
    for i in 0..n {
        for j in 0..n {
            let p = model.product(&omegas, &frame.e[i], &frame.e[j]);
            let want = if i == j { frame.e[j].clone() } else { frame.e[j].scale(&rat(0)) };
            let d = &p - &want;
            if !d.is_zero() && prod_ok {
                prod_ok = false;
                prod_detail = format!("e_{i}•e_{j}: {}", describe_matrix_residual(&d));
            }
            let gij = (&(&frame.e[i].transpose() * &g) * &frame.e[j]).get(0, 0).clone();
            let want = if i == j { frame.delta[i].clone() } else { gij.scale(&rat(0)) };
            if gij != want && orth_ok {
                orth_ok = false;
                orth_detail = format!("G(e_{i}, e_{j})");
            }
            let b = lie_bracket(&frame.e[i], &frame.e[j]);
            if !b.is_zero() && br_ok {
                br_ok = false;
                br_detail = format!("[e_{i}, e_{j}]: {}", describe_matrix_residual(&b));
            }
        }
    }
    r.push("e_i • e_j = δ_ij e_j", prod_ok, prod_detail);
    r.push("G(e_i, e_j) = Δ_i δ_ij", orth_ok, orth_detail);
    r.push("[e_i, e_j] = 0", br_ok, br_detail);
    let mut diag_ok = true;
    if let Ok(psi_inv) = frame.psi.inverse() {
        for o in &omegas {
            let d = &(&psi_inv * o) * &frame.psi;
            for i in 0..n {
                for j in 0..n {
                    if i != j && !d.get(i, j).is_zero() {
                        diag_ok = false;
                    }
                }
            }
        }
    } else {
        diag_ok = false;
    }
    r.push("Ψ^{-1} Ω_ℓ Ψ diagonal", diag_ok, "");
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric;
    use crate::smatrix::solve_s;

    fn frame_for(model: &FrobeniusModel, cap: Cap) -> Result<(MetricData, IdempotentFrame)> {
        let s = solve_s(model, cap, 4)?;
        let md = metric(model, &s)?;
        let f = idempotents(model, &md, cap, 7)?;
        Ok((md, f))
    }

    #[test]
    fn point_frame() {
        let pt = FrobeniusModel::point();
        let cap = Cap::new(6, 0);
        let (md, f) = frame_for(&pt, cap).unwrap();
        assert_eq!(f.e[0].get(0, 0), &TruncSeries::one(0, 1, cap));
        assert_eq!(f.delta[0], TruncSeries::var(0, 0, 1, cap).exp().unwrap());
        assert!(frame_report(&pt, &md, &f).all_passed());
    }

    #[test]
    fn two_point_frame_is_standard() {
        let m = FrobeniusModel::two_points();
        let cap = Cap::new(5, 0);
        let (md, f) = frame_for(&m, cap).unwrap();
        let mut es: Vec<Vec<Rational>> = f.e.iter().map(|e| e.constant_part().into_iter().map(|r| r[0].clone()).collect()).collect();
        es.sort();
        assert_eq!(es, vec![vec![rat(0), rat(1)], vec![rat(1), rat(0)]]);
        for (i, e) in f.e.iter().enumerate() {
            let a = if e.get(0, 0).is_zero() { 1 } else { 0 };
            assert_eq!(f.delta[i], TruncSeries::var(a, 0, 2, cap).exp().unwrap());
        }
        assert!(frame_report(&m, &md, &f).all_passed());
    }

    #[test]
    fn nilpotent_product_is_not_semisimple() {
        let z = vec![0, 0];
        let m = FrobeniusModel::new(
            "dual-numbers",
            0,
            vec![rat(1), rat(0)],
            vec![vec![rat(0), rat(1)], vec![rat(1), rat(0)]],
            vec![
                vec![(z.clone(), linalg::identity(2))],
                vec![(z, vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]])],
            ],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(frame_for(&m, Cap::new(4, 0)), Err(Error::NotSemisimple(_))));
    }
}
