//! Seeded random inputs for property checks.

use rand::Rng;

use crate::hierarchy::VectorPolynomial;
use crate::jet::{Flow, JetMonomial, JetPoly};
use crate::series::{rat, ratio, Cap, Rational, TruncSeries};

fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = rng.gen_range(-5i64..=5);
    let den = rng.gen_range(1i64..=3);
    ratio(num, den)
}

fn nonzero_rational<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let c = small_rational(rng);
        if c != rat(0) {
            return c;
        }
    }
}

/// A polynomial in `v` with at most `terms` monomials of degree `<= degree`.
pub fn random_series<R: Rng>(rng: &mut R, nv: usize, cap: Cap, degree: u32, terms: usize) -> TruncSeries {
    let mut acc = TruncSeries::zero(0, nv, cap);
    for _ in 0..terms {
        let d = rng.gen_range(0..=degree);
        let mut exp = vec![0u16; nv];
        for _ in 0..d {
            exp[rng.gen_range(0..nv)] += 1;
        }
        acc = &acc + &TruncSeries::monomial(exp, small_rational(rng), 0, nv, cap);
    }
    acc
}

/// A differential polynomial: sums of random coefficients times jet monomials
/// with at most `max_factors` factors of order `<= max_order`.
pub fn random_jet_poly<R: Rng>(
    rng: &mut R,
    nv: usize,
    cap: Cap,
    max_order: u16,
    max_factors: usize,
    terms: usize,
) -> JetPoly {
    let mut acc = JetPoly::zero(0, nv, cap);
    for _ in 0..terms {
        let n_factors = rng.gen_range(0..=max_factors);
        let m: JetMonomial = (0..n_factors)
            .map(|_| (rng.gen_range(0..nv) as u16, rng.gen_range(1..=max_order.max(1))))
            .collect();
        let c = random_series(rng, nv, cap, 2, 2);
        acc = &acc + &JetPoly::monomial(m, c);
    }
    acc
}

/// `C(q)` of degree `<= degree` with small rational vector coefficients.
pub fn random_vector_polynomial<R: Rng>(rng: &mut R, dim: usize, degree: usize) -> VectorPolynomial {
    let deg = rng.gen_range(0..=degree);
    VectorPolynomial {
        coeffs: (0..=deg).map(|_| (0..dim).map(|_| small_rational(rng)).collect()).collect(),
    }
}

/// A hydrodynamic perturbation with at least one off-diagonal term
/// `c(v) ∂v_b` in component `a != b`; requires `nv >= 2`.
pub fn random_cross_perturbation<R: Rng>(rng: &mut R, nv: usize, cap: Cap) -> Flow {
    assert!(nv >= 2, "cross-component perturbations need two coordinates");
    let mut comps = vec![JetPoly::zero(0, nv, cap); nv];
    let a = rng.gen_range(0..nv);
    let b = (a + rng.gen_range(1..nv)) % nv;
    let mut coeff = random_series(rng, nv, cap, 2, 2);
    coeff = &coeff + &TruncSeries::constant(nonzero_rational(rng), 0, nv, cap);
    comps[a] = JetPoly::monomial(vec![(b as u16, 1)], coeff);
    for _ in 0..rng.gen_range(0..=2) {
        let a2 = rng.gen_range(0..nv);
        let b2 = rng.gen_range(0..nv);
        comps[a2] = &comps[a2] + &JetPoly::monomial(vec![(b2 as u16, 1)], random_series(rng, nv, cap, 2, 1));
    }
    Flow::new(comps)
}
