//! The canonical normal form: a reduced ratio of two polynomials.
//!
//! Invariants after [`RatFn::canonical`]:
//!   - `gcd(num, den) = 1`,
//!   - the denominator is monic under graded lex (fixed sign convention),
//!   - the denominator is free of atoms that carry a declared square
//!     (rationalized by conjugation),
//!   - zero is exactly `0/1`.

use num::One;

use super::atom::Atom;
use super::gcd::poly_gcd;
use super::poly::{Poly, Q};
use super::ExprError;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFn {
    pub num: Poly,
    pub den: Poly,
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        let (num, den) = p.fold_squares();
        RatFn::canonical(num, den)
    }

    pub fn constant(c: Q) -> Self {
        RatFn {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.as_constant().map_or(false, |c| c.is_one()) {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut a = self.num.atoms();
        for b in self.den.atoms() {
            if !a.contains(&b) {
                a.push(b);
            }
        }
        a
    }

    /// Canonicalization that trusts `gcd(num, den) = 1` and the absence of
    /// square-carrying atoms in the denominator: only the sign convention is
    /// applied. Used after cross-cancelled products of reduced fractions,
    /// where the result is reduced by construction.
    fn canonical_assume_reduced(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFn::zero();
        }
        let (mut num, mut den) = (num, den);
        let lc = den.leading().expect("nonzero denominator").1.clone();
        if !lc.is_one() {
            let inv = Q::one() / lc;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RatFn { num, den }
    }

    /// Puts `num/den` into canonical form. `den` must be nonzero.
    pub fn canonical(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator in normal form");
        if num.is_zero() {
            return RatFn::zero();
        }
        let (mut num, mut den) = (num, den);
        // clear declared-square atoms out of the denominator
        loop {
            let sq_atom = den.atoms().into_iter().find(|a| a.square().is_some());
            let Some(a) = sq_atom else { break };
            // den = d0 + d1*a  (exponents of `a` are 0/1 after folding)
            let (fn_, fd_) = den.fold_squares();
            if !fd_.as_constant().map_or(false, |c| c.is_one()) {
                // fold introduced its own denominator: den := fn_/fd_
                num = num.mul(&fd_);
                den = fn_;
                continue;
            }
            den = fn_;
            if den.max_degree_in(&a) == 0 {
                continue;
            }
            let d1 = den.diff(&a); // coefficient of `a`
            let d0 = den.sub(&d1.mul(&Poly::atom(a.clone())));
            let conj = d0.sub(&d1.mul(&Poly::atom(a.clone())));
            if conj.is_zero() {
                // den is a pure multiple of `a`: multiply by `a` instead
                let (n2, d2) = num.mul(&Poly::atom(a.clone())).fold_squares();
                let (dn, dd) = den.mul(&Poly::atom(a.clone())).fold_squares();
                num = n2.mul(&dd);
                den = dn.mul(&d2);
            } else {
                let (n2, d2) = num.mul(&conj).fold_squares();
                let (dn, dd) = den.mul(&conj).fold_squares();
                num = n2.mul(&dd);
                den = dn.mul(&d2);
            }
        }
        if num.is_zero() {
            return RatFn::zero();
        }
        if den.as_constant().is_none() {
            let g = poly_gcd(&num, &den);
            if g.as_constant().is_none() || g != Poly::one() {
                if let (Some(nq), Some(dq)) = (num.div_exact(&g), den.div_exact(&g)) {
                    num = nq;
                    den = dq;
                }
            }
        }
        // monic denominator
        let lc = den.leading().expect("nonzero denominator").1.clone();
        if !lc.is_one() {
            let inv = Q::one() / lc;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RatFn { num, den }
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            let (n, nd) = self.num.add(&other.num).fold_squares();
            return RatFn::canonical(n, self.den.mul(&nd));
        }
        // split off the common denominator factor before cross-multiplying
        let g = poly_gcd(&self.den, &other.den);
        let (num, den) = if g.as_constant().is_some() {
            (
                self.num.mul(&other.den).add(&other.num.mul(&self.den)),
                self.den.mul(&other.den),
            )
        } else {
            let d1 = self.den.div_exact(&g).expect("gcd divides");
            let d2 = other.den.div_exact(&g).expect("gcd divides");
            (
                self.num.mul(&d2).add(&other.num.mul(&d1)),
                self.den.mul(&d2),
            )
        };
        let (n, nd) = num.fold_squares();
        RatFn::canonical(n, den.mul(&nd))
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        // cross-cancel: the product of reduced fractions with coprime
        // cross-pairs is reduced, so no further gcd is needed unless square
        // folding rewrites it
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        if num.has_square_atoms() || den.has_square_atoms() {
            let (n, nd) = num.fold_squares();
            let (d, dd) = den.fold_squares();
            RatFn::canonical(n.mul(&dd), d.mul(&nd))
        } else {
            RatFn::canonical_assume_reduced(num, den)
        }
    }

    /// Multiplicative inverse; the caller records the nonzero side condition.
    pub fn inv(&self) -> Result<RatFn, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(RatFn::canonical(self.den.clone(), self.num.clone()))
    }

    pub fn pow_int(&self, e: i64) -> Result<RatFn, ExprError> {
        if e < 0 {
            return self.inv()?.pow_int(-e);
        }
        let mut acc = RatFn::constant(Q::one());
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Minimal radical support: the square root of an exact square.
    pub fn sqrt(&self) -> Result<RatFn, ExprError> {
        let n = poly_sqrt(&self.num).ok_or(ExprError::UnsupportedRadical)?;
        let d = poly_sqrt(&self.den).ok_or(ExprError::UnsupportedRadical)?;
        Ok(RatFn::canonical(n, d))
    }
}

impl std::fmt::Debug for RatFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den.as_constant().map_or(false, |c| c.is_one()) {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?})/({:?})", self.num, self.den)
        }
    }
}

/// Exact polynomial square root, or `None` when `p` is not a perfect square.
fn poly_sqrt(p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return Some(Poly::zero());
    }
    let (lm, lc) = p.leading()?;
    let s_lc = rational_sqrt(lc)?;
    let mut half: Vec<(Atom, u32)> = Vec::new();
    for (a, e) in lm.factors() {
        if e % 2 != 0 {
            return None;
        }
        half.push((a.clone(), e / 2));
    }
    let mut s = Poly::term(s_lc.clone(), {
        let mut m = super::poly::Mono::one();
        for (a, e) in &half {
            for _ in 0..*e {
                m = m.mul(&super::poly::Mono::atom(a.clone()));
            }
        }
        m
    });
    let two_s0 = s.scale(&Q::from_integer(2.into()));
    // digit-by-digit completion: rem = p - s^2, next digit = lead(rem)/(2*s0)
    let mut guard = p.num_terms() * p.num_terms() + 16;
    loop {
        let rem = p.sub(&s.mul(&s));
        if rem.is_zero() {
            return Some(s);
        }
        let (rm, rc) = rem.leading().unwrap();
        let t = Poly::term(rc.clone(), rm.clone());
        let digit = t.div_exact(&two_s0)?;
        if digit.is_zero() {
            return None;
        }
        s = s.add(&digit);
        guard -= 1;
        if guard == 0 {
            return None;
        }
    }
}

fn rational_sqrt(q: &Q) -> Option<Q> {
    use num::bigint::Sign;
    if q.numer().sign() == Sign::Minus {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Q::new(n, d))
    } else {
        None
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
    fn cancellation_reduces_to_lowest_terms() {
        // (u^2 - 1)/(u - 1) -> (u + 1)/1
        let u = var("u");
        let r = RatFn::canonical(
            u.mul(&u).sub(&Poly::one()),
            u.sub(&Poly::one()),
        );
        assert_eq!(r.num, u.add(&Poly::one()));
        assert_eq!(r.den, Poly::one());
    }

    #[test]
    fn denominator_is_monic() {
        // 1/(2u) -> (1/2)/u
        let u = var("u");
        let r = RatFn::canonical(Poly::one(), u.scale(&q_int(2)));
        assert_eq!(r.den, u);
        assert_eq!(r.num, Poly::constant(Q::new(1.into(), 2.into())));
    }

    #[test]
    fn sqrt_of_square() {
        let u = var("u");
        let v = var("v");
        let p = u.add(&v);
        let r = RatFn::from_poly(p.mul(&p).scale(&q_int(9)));
        let s = r.sqrt().unwrap();
        assert_eq!(s.num, p.scale(&q_int(3)));
        assert!(RatFn::from_poly(u).sqrt().is_err());
    }

    #[test]
    fn square_atom_leaves_denominator() {
        use crate::expr::atom::FieldSym;
        use std::sync::Arc;
        // s with s^2 = d  =>  1/s = s/d
        let d = var("d");
        let s = Atom::Field(Arc::new(FieldSym {
            name: "s".into(),
            square: Some((d.clone(), Poly::one())),
        }));
        let r = RatFn::canonical(Poly::one(), Poly::atom(s.clone()));
        assert_eq!(r.num, Poly::atom(s));
        assert_eq!(r.den, d);
    }
}
