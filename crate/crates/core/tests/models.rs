use std::path::PathBuf;

use kthier::canonical::{frame_report, idempotents};
use kthier::hierarchy::{check_commute, Hierarchy};
use kthier::metric::metric;
use kthier::model::{load_model, verify_frobenius};
use kthier::smatrix::{check_symplectic, solve_s};
use kthier::topo::{solve_tau, verify_theorem2, DescendantInput};
use kthier::{Cap, Error, FrobeniusModel, TruncSeries};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn unit_basis_two_points_passes_everything() {
    let m = load_model(fixture("pt2_unit_basis.toml")).unwrap();
    assert_eq!(m.unit_index(), Some(0));
    let cap = Cap::new(8, 0);
    assert!(verify_frobenius(&m, cap, 6).all_passed());
    let h = Hierarchy::new(m.clone(), cap, 6).unwrap();
    for n in 0..=3 {
        for i in 0..2 {
            let f = h.flow(n, i).unwrap();
            assert!(f.is_hydrodynamic());
            assert!(h.hamiltonian_flow(n, i).unwrap().agrees_with(&f), "({n},{i})");
            assert!(check_commute(&f, &h.flow(1, 1).unwrap()));
        }
    }
    assert!(check_symplectic(&m, &h.s, &h.metric.g, 6).unwrap().all_passed());
    let frame = idempotents(&m, &h.metric, cap, 3).unwrap();
    assert!(frame_report(&m, &h.metric, &frame).all_passed());
    let input = DescendantInput::new(&m, 2, 4, 0);
    let sol = solve_tau(&m, &h.s, &input).unwrap();
    assert!(verify_theorem2(&m, &h.s, &sol, 2).unwrap().all_passed());
}

#[test]
fn shifted_point_carries_the_novikov_variable() {
    let m = load_model(fixture("pt_shifted.toml")).unwrap();
    assert_eq!(m.novikov_rank, 1);
    let cap = Cap::new(8, 4);
    let s = solve_s(&m, cap, 8).unwrap();
    let md = metric(&m, &s).unwrap();
    // G = exp(v + Q)
    let vq = &TruncSeries::var(0, 1, 1, cap) + &TruncSeries::novikov(0, 1, 1, cap);
    assert!(md.g.get(0, 0).agrees_with(&vq.exp().unwrap()));
    let h = Hierarchy::new(m, cap, 8).unwrap();
    for n in 0..=3 {
        assert!(h.hamiltonian_flow(n, 0).unwrap().agrees_with(&h.flow(n, 0).unwrap()));
    }
}

#[test]
fn dual_numbers_are_not_semisimple_but_still_hamiltonian() {
    let m = load_model(fixture("dual_numbers.toml")).unwrap();
    let cap = Cap::new(6, 0);
    let h = Hierarchy::new(m.clone(), cap, 6).unwrap();
    assert!(matches!(idempotents(&m, &h.metric, cap, 1), Err(Error::NotSemisimple(_))));
    for n in 0..=2 {
        for i in 0..2 {
            assert!(h.hamiltonian_flow(n, i).unwrap().agrees_with(&h.flow(n, i).unwrap()));
        }
    }
}

#[test]
fn malformed_files_are_rejected() {
    assert!(matches!(FrobeniusModel::load(fixture("decimal_entry.toml")), Err(Error::Schema(_))));
    assert!(matches!(load_model(fixture("broken_unit.toml")), Err(Error::InvalidModel(_))));
    assert!(matches!(FrobeniusModel::load(fixture("missing.toml")), Err(Error::Schema(_))));
}

#[test]
fn builtins_round_trip_through_files() {
    for name in ["pt", "pt2"] {
        let m = FrobeniusModel::builtin(name).unwrap();
        assert_eq!(FrobeniusModel::from_toml(&m.to_toml()).unwrap(), m);
    }
}
