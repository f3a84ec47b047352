//! Dense linear algebra over exact rationals, used for constant terms,
//! numeric specializations and eigenvalue separation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::series::{rat, Rational};

pub type RatMatrix = Vec<Vec<Rational>>;

pub fn identity(n: usize) -> RatMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { rat(1) } else { rat(0) }).collect()).collect()
}

pub fn zeros(rows: usize, cols: usize) -> RatMatrix {
    vec![vec![rat(0); cols]; rows]
}

pub fn mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let k = b.len();
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn mul_vec(a: &RatMatrix, x: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn add(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn scale(a: &RatMatrix, c: &Rational) -> RatMatrix {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

pub fn transpose(a: &RatMatrix) -> RatMatrix {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn is_symmetric(a: &RatMatrix) -> bool {
    a.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, x)| *x == a[j][i]))
}

/// Gauss-Jordan inverse.
pub fn inverse(a: &RatMatrix) -> Result<RatMatrix> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero()).ok_or(Error::SingularMatrix)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].recip();
        for j in 0..n {
            m[col][j] *= &p;
            inv[col][j] *= &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                let a = &m[col][j] * &f;
                m[r][j] -= a;
                let b = &inv[col][j] * &f;
                inv[r][j] -= b;
            }
        }
    }
    Ok(inv)
}

/// Characteristic polynomial `det(x I - a)` by Faddeev-LeVerrier, returned as
/// coefficients `c_0 .. c_n` of `x^0 .. x^n` (monic).
pub fn char_poly(a: &RatMatrix) -> Vec<Rational> {
    let n = a.len();
    let mut coeffs = vec![rat(0); n + 1];
    coeffs[n] = rat(1);
    let mut m = zeros(n, n);
    let id = identity(n);
    for k in 1..=n {
        let am = mul(a, &m);
        m = add(&am, &scale(&id, &coeffs[n + 1 - k]));
        let am = mul(a, &m);
        let tr: Rational = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -tr / rat(k as i64);
    }
    coeffs
}

fn eval_poly(c: &[Rational], x: &Rational) -> Rational {
    c.iter().rev().fold(rat(0), |acc, a| acc * x + a)
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            let e = &n / &d;
            if e != d {
                out.push(e);
            }
        }
        d += 1;
    }
    out
}

/// Rational roots of a polynomial (coefficients low to high), with multiplicity.
pub fn rational_roots(c: &[Rational]) -> Vec<Rational> {
    let mut poly: Vec<Rational> = c.to_vec();
    while poly.last().is_some_and(|x| x.is_zero()) {
        poly.pop();
    }
    let mut roots = Vec::new();
    while poly.len() > 1 && poly[0].is_zero() {
        roots.push(rat(0));
        poly.remove(0);
    }
    if poly.len() <= 1 {
        return roots;
    }
    loop {
        if poly.len() <= 1 {
            break;
        }
        let lcm = poly.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = poly.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let lead = ints.last().unwrap().clone();
        let constant = ints[0].clone();
        let mut found = None;
        'search: for p in divisors(&constant) {
            for q in divisors(&lead) {
                for sign in [1, -1] {
                    let cand = Rational::new(&p * sign, q.clone());
                    if eval_poly(&poly, &cand).is_zero() {
                        found = Some(cand);
                        break 'search;
                    }
                }
            }
        }
        let Some(r) = found else { break };
        // synthetic division by (x - r)
        let deg = poly.len() - 1;
        let mut quotient = vec![rat(0); deg];
        let mut carry = rat(0);
        for k in (0..=deg).rev() {
            let val = &poly[k] + &carry * &r;
            if k > 0 {
                quotient[k - 1] = val.clone();
            }
            carry = val;
        }
        poly = quotient;
        roots.push(r);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ratio;

    #[test]
    fn inverse_of_two_by_two() {
        let a = vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(mul(&a, &inv), identity(2));
        assert_eq!(inverse(&vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)]]), Err(Error::SingularMatrix));
    }

    #[test]
    fn char_poly_and_roots() {
        let a = vec![vec![rat(2), rat(0)], vec![rat(1), ratio(-1, 2)]];
        let c = char_poly(&a);
        // (x - 2)(x + 1/2) = x^2 - 3/2 x - 1
        assert_eq!(c, vec![rat(-1), ratio(-3, 2), rat(1)]);
        let mut r = rational_roots(&c);
        r.sort();
        assert_eq!(r, vec![ratio(-1, 2), rat(2)]);
        let nil = vec![vec![rat(0), rat(1)], vec![rat(0), rat(0)]];
        assert_eq!(rational_roots(&char_poly(&nil)), vec![rat(0), rat(0)]);
    }
}
