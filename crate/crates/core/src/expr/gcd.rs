//! Multivariate polynomial GCD over the rationals, by primitive
//! pseudo-remainder sequences with recursion on the variable set.
//!
//! Inputs here are small (catalog denominators are low-degree), so the
//! classical primitive PRS is plenty; no modular or sparse interpolation
//! machinery is needed.

use num::{One, Signed, Zero};

use super::atom::Atom;
use super::poly::{rational_content, Poly, Q};

/// Primitive associate: integer coefficients, coprime, positive leading
/// coefficient. Zero maps to zero.
pub fn primitive(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let mut c = rational_content(p);
    if p.leading().unwrap().1.is_negative() {
        c = -c;
    }
    p.scale(&(Q::one() / c))
}

/// GCD of two polynomials, returned in primitive form (`1` for coprime
/// inputs, including the case where either input is a nonzero constant).
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return primitive(b);
    }
    if b.is_zero() {
        return primitive(a);
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    // Fast paths: equal up to a rational factor, or one divides the other.
    let (pa, pb) = (primitive(a), primitive(b));
    if pa == pb {
        return pa;
    }
    if pa.num_terms() <= pb.num_terms() && pb.div_exact(&pa).is_some() {
        return pa;
    }
    if pb.num_terms() < pa.num_terms() && pa.div_exact(&pb).is_some() {
        return pb;
    }
    let mut vars_a = pa.atoms();
    let vars_b = pb.atoms();
    vars_a.retain(|v| vars_b.contains(v));
    if vars_a.is_empty() {
        // no common variable: gcd is the (unit) content
        return Poly::one();
    }
    if certified_coprime(&pa, &pb, &vars_a) {
        return Poly::one();
    }
    let main = vars_a.pop().unwrap();
    gcd_univariate(&pa, &pb, &main)
}

/// Sound coprimality certificate by univariate evaluation images.
///
/// For a variable `v` and an evaluation point of the remaining variables
/// where neither leading-in-`v` coefficient vanishes, any common factor with
/// positive degree in `v` survives into the images with positive degree. So
/// a constant image gcd rules out common factors involving `v`; if that
/// succeeds for every shared variable the gcd is constant. Points where a
/// leading coefficient vanishes are resampled; on exhaustion the caller
/// falls back to the exact remainder sequence.
fn certified_coprime(a: &Poly, b: &Poly, shared_vars: &[Atom]) -> bool {
    use num::BigInt;
    'vars: for v in shared_vars {
        let others: Vec<Atom> = {
            let mut set: Vec<Atom> = a.atoms();
            for x in b.atoms() {
                if !set.contains(&x) {
                    set.push(x);
                }
            }
            set.retain(|x| x != v);
            set
        };
        for salt in 0..4u64 {
            let assign = |atom: &Atom| -> Q {
                // deterministic, spread-out small integers
                let mut h = std::collections::hash_map::DefaultHasher::new();
                use std::hash::{Hash, Hasher};
                atom.hash(&mut h);
                salt.hash(&mut h);
                let r = (h.finish() % 37) as i64 + 2;
                Q::from_integer(BigInt::from(r))
            };
            let img_a = univariate_image(a, v, &others, &assign);
            let img_b = univariate_image(b, v, &others, &assign);
            let (Some(ia), Some(ib)) = (img_a, img_b) else {
                continue;
            };
            // leading coefficients must survive the evaluation
            if ia.len() - 1 != a.max_degree_in(v) as usize
                || ib.len() - 1 != b.max_degree_in(v) as usize
            {
                continue;
            }
            if univariate_gcd_degree(&ia, &ib) == 0 {
                continue 'vars;
            }
            return false; // plausible common factor: do the exact work
        }
        return false;
    }
    true
}

/// Coefficients (by degree in `v`) of the image of `p` under an assignment
/// of every other variable; `None` when the image collapses to zero.
fn univariate_image(
    p: &Poly,
    v: &Atom,
    others: &[Atom],
    assign: &dyn Fn(&Atom) -> Q,
) -> Option<Vec<Q>> {
    let deg = p.max_degree_in(v) as usize;
    let mut coeffs = vec![Q::zero(); deg + 1];
    for (m, c) in p.terms() {
        let mut val = c.clone();
        let mut dv = 0usize;
        for (atom, e) in m.factors() {
            if atom == v {
                dv = *e as usize;
            } else {
                debug_assert!(others.contains(atom));
                let x = assign(atom);
                for _ in 0..*e {
                    val *= &x;
                }
            }
        }
        coeffs[dv] += val;
    }
    while coeffs.last().map_or(false, |c| c.is_zero()) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        None
    } else {
        Some(coeffs)
    }
}

fn univariate_gcd_degree(a: &[Q], b: &[Q]) -> usize {
    let mut f: Vec<Q> = a.to_vec();
    let mut g: Vec<Q> = b.to_vec();
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    while g.len() > 1 {
        // f mod g
        let dg = g.len() - 1;
        let lg = g.last().unwrap().clone();
        while f.len() > dg {
            let lf = f.last().unwrap().clone();
            let q = lf / &lg;
            let shift = f.len() - 1 - dg;
            for (i, gc) in g.iter().enumerate() {
                let t = gc * &q;
                f[i + shift] -= t;
            }
            while f.last().map_or(false, |c| c.is_zero()) {
                f.pop();
            }
            if f.is_empty() {
                return dg;
            }
        }
        std::mem::swap(&mut f, &mut g);
    }
    if g.is_empty() {
        f.len().saturating_sub(1)
    } else {
        0
    }
}

fn gcd_many<'a>(polys: impl Iterator<Item = &'a Poly>) -> Poly {
    let mut acc = Poly::zero();
    for p in polys {
        acc = poly_gcd(&acc, p);
        if acc.as_constant().map_or(false, |c| c.is_one()) {
            return acc;
        }
    }
    acc
}

/// Coefficient list of `p` viewed as univariate in `main`, index = degree.
fn to_univariate(p: &Poly, main: &Atom) -> Vec<Poly> {
    let deg = p.max_degree_in(main) as usize;
    let mut coeffs = vec![Poly::zero(); deg + 1];
    for (m, c) in p.terms() {
        let e = m.exponent(main) as usize;
        coeffs[e].add_term(c.clone(), m.with_exponent(main, 0));
    }
    coeffs
}

fn from_univariate(coeffs: &[Poly], main: &Atom) -> Poly {
    let mut out = Poly::zero();
    for (e, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let pow = Poly::atom(main.clone()).pow(e as u32);
        out = out.add(&c.mul(&pow));
    }
    out
}

fn trim(coeffs: &mut Vec<Poly>) {
    while coeffs.last().map_or(false, |c| c.is_zero()) {
        coeffs.pop();
    }
}

fn content(coeffs: &[Poly]) -> Poly {
    gcd_many(coeffs.iter().filter(|c| !c.is_zero()))
}

fn divide_coeffs(coeffs: &[Poly], d: &Poly) -> Vec<Poly> {
    coeffs
        .iter()
        .map(|c| {
            if c.is_zero() {
                Poly::zero()
            } else {
                c.div_exact(d).expect("content divides coefficients")
            }
        })
        .collect()
}

/// Pseudo-remainder of `f` by `g` (both univariate coefficient lists,
/// `g` nonzero, deg f >= deg g).
fn pseudo_rem(f: &[Poly], g: &[Poly]) -> Vec<Poly> {
    let mut r: Vec<Poly> = f.to_vec();
    let dg = g.len() - 1;
    let lc_g = &g[dg];
    loop {
        trim(&mut r);
        if r.len() < g.len() {
            return r;
        }
        let dr = r.len() - 1;
        let lc_r = r.last().unwrap().clone();
        // r := lc_g * r - lc_r * x^(dr-dg) * g
        for c in r.iter_mut() {
            *c = c.mul(lc_g);
        }
        let shift = dr - dg;
        for (i, gc) in g.iter().enumerate() {
            r[i + shift] = r[i + shift].sub(&gc.mul(&lc_r));
        }
    }
}

fn gcd_univariate(a: &Poly, b: &Poly, main: &Atom) -> Poly {
    let mut fa = to_univariate(a, main);
    let mut fb = to_univariate(b, main);
    trim(&mut fa);
    trim(&mut fb);
    let cont_a = content(&fa);
    let cont_b = content(&fb);
    let cont = poly_gcd(&cont_a, &cont_b);
    let mut f = divide_coeffs(&fa, &cont_a);
    let mut g = divide_coeffs(&fb, &cont_b);
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        let mut r = pseudo_rem(&f, &g);
        trim(&mut r);
        if r.is_empty() {
            let prim = divide_coeffs(&g, &content(&g));
            return primitive(&cont.mul(&from_univariate(&prim, main)));
        }
        if r.len() == 1 {
            // nontrivial constant (in main) remainder: coprime in main
            return primitive(&cont);
        }
        let rc = content(&r);
        f = g;
        g = divide_coeffs(&r, &rc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::poly::q_int;

    fn var(n: &str) -> Poly {
        Poly::atom(Atom::dep(n))
    }

    #[test]
    fn gcd_of_difference_of_squares() {
        let u = var("u");
        let v = var("v");
        let p = u.mul(&u).sub(&v.mul(&v)); // (u-v)(u+v)
        let d = u.sub(&v);
        assert_eq!(poly_gcd(&p, &d), primitive(&d));
    }

    #[test]
    fn gcd_detects_common_multivariate_factor() {
        let u = var("u");
        let v = var("v");
        let w = var("w");
        let g = u.add(&v.mul(&w)); // u + v*w
        let a = g.mul(&u.add(&Poly::constant(q_int(3))));
        let b = g.mul(&w.sub(&v));
        let got = poly_gcd(&a, &b);
        assert_eq!(got, primitive(&g));
    }

    #[test]
    fn coprime_inputs_give_one() {
        let u = var("u");
        let v = var("v");
        assert_eq!(poly_gcd(&u, &v), Poly::one());
        assert_eq!(
            poly_gcd(&u.add(&Poly::one()), &u.sub(&Poly::one())),
            Poly::one()
        );
    }
}
