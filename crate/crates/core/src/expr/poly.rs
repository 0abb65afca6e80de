//! Sparse multivariate polynomials over the exact rationals, with atoms as
//! indeterminates. This is the substrate of the canonical normal form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Signed, Zero};
use smallvec::SmallVec;

use super::atom::Atom;

type FactorVec = SmallVec<[(Atom, u32); 3]>;

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// A power product of atoms, exponents >= 1, sorted by atom.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Mono(FactorVec);

impl Mono {
    pub fn one() -> Self {
        Mono(FactorVec::new())
    }

    pub fn atom(a: Atom) -> Self {
        let mut v = FactorVec::new();
        v.push((a, 1));
        Mono(v)
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn exponent(&self, a: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = FactorVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// Exact division; `None` when some exponent would go negative.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            let pos = out.iter().position(|(b, _)| b == a)?;
            if out[pos].1 < *e {
                return None;
            }
            out[pos].1 -= e;
            if out[pos].1 == 0 {
                out.remove(pos);
            }
        }
        Some(Mono(out))
    }

    pub fn with_exponent(&self, a: &Atom, e: u32) -> Mono {
        let mut out: FactorVec =
            self.0.iter().filter(|(b, _)| b != a).cloned().collect();
        if e > 0 {
            let pos = out.partition_point(|(b, _)| b < a);
            out.insert(pos, (a.clone(), e));
        }
        Mono(out)
    }
}

/// Graded lexicographic order: total degree first, then exponents compared
/// from the largest atom downward (a genuine term order, so leading-term
/// division is multiplication-compatible).
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let deg = self.degree().cmp(&other.degree());
        if deg != Ordering::Equal {
            return deg;
        }
        let mut i = self.0.iter().rev();
        let mut j = other.0.iter().rev();
        loop {
            match (i.next(), j.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Less => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    },
                },
            }
        }
    }
}
impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (a, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{a:?}")?;
            } else {
                write!(f, "{a:?}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial: monomial -> nonzero rational coefficient.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly(BTreeMap<Mono, Q>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Mono::one(), c);
        }
        Poly(m)
    }

    pub fn atom(a: Atom) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Mono::atom(a), Q::one());
        Poly(m)
    }

    pub fn term(c: Q, m: Mono) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(m, c);
        }
        Poly(map)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.0.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    /// The constant value when the polynomial is constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Leading (greatest) monomial and coefficient under graded lex.
    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.0.iter().next_back()
    }

    pub fn add_term(&mut self, c: Q, m: Mono) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(c.clone(), m.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    /// Plain polynomial product. Declared squares are NOT folded here; see
    /// [`Poly::fold_squares`].
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ca * cb, ma.mul(mb));
            }
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// All atoms occurring in the polynomial, deduplicated.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut set = std::collections::BTreeSet::new();
        for (m, _) in self.terms() {
            for (a, _) in m.factors() {
                set.insert(a.clone());
            }
        }
        set.into_iter().collect()
    }

    pub fn max_degree_in(&self, a: &Atom) -> u32 {
        self.terms().map(|(m, _)| m.exponent(a)).max().unwrap_or(0)
    }

    /// True when any monomial contains an atom with a declared square.
    pub fn has_square_atoms(&self) -> bool {
        self.terms()
            .any(|(m, _)| m.factors().iter().any(|(a, _)| a.square().is_some()))
    }

    /// Rewrites even powers of atoms that carry a declared square.
    /// Returns `(num, den)` with `self = num/den` in the quotient ring.
    pub fn fold_squares(&self) -> (Poly, Poly) {
        let foldable: Vec<Atom> = self
            .atoms()
            .into_iter()
            .filter(|a| a.square().is_some() && self.max_degree_in(a) >= 2)
            .collect();
        if foldable.is_empty() {
            return (self.clone(), Poly::one());
        }
        let mut num = Poly::zero();
        let mut den = Poly::one();
        for (m, c) in self.terms() {
            let mut t_num = Poly::term(c.clone(), m.clone());
            let mut t_den = Poly::one();
            for a in &foldable {
                let e = m.exponent(a);
                if e >= 2 {
                    let (sq_num, sq_den) = a.square().expect("foldable atom has square");
                    let k = e / 2;
                    t_num = t_num
                        .map_monos(|mm| mm.with_exponent(a, e % 2))
                        .mul(&sq_num.pow(k));
                    t_den = t_den.mul(&sq_den.pow(k));
                }
            }
            // bring the running sum and the new term over a common denominator
            if t_den == den {
                num = num.add(&t_num);
            } else {
                num = num.mul(&t_den).add(&t_num.mul(&den));
                den = den.mul(&t_den);
            }
        }
        (num, den)
    }

    fn map_monos(&self, f: impl Fn(&Mono) -> Mono) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in self.terms() {
            out.add_term(c.clone(), f(m));
        }
        out
    }

    /// Formal partial derivative with respect to a single atom, treating all
    /// other atoms as independent (no chain rule at this level).
    pub fn diff(&self, a: &Atom) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in self.terms() {
            let e = m.exponent(a);
            if e > 0 {
                out.add_term(c * q_int(e as i64), m.with_exponent(a, e - 1));
            }
        }
        out
    }

    /// Exact multivariate division; `None` when `other` does not divide.
    pub fn div_exact(&self, other: &Poly) -> Option<Poly> {
        if other.is_zero() {
            return None;
        }
        if let Some(c) = other.as_constant() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let (lm, lc) = other.leading().unwrap();
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let qm = rm.div(lm)?;
            let qc = rc / lc;
            let t = Poly::term(qc, qm);
            quo = quo.add(&t);
            rem = rem.sub(&t.mul(other));
        }
        Some(quo)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.0.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        Ok(())
    }
}

/// Content of the coefficients: a positive rational `g` such that scaling by
/// `1/g` makes all coefficients coprime integers.
pub fn rational_content(p: &Poly) -> Q {
    use num::BigInt;
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for (_, c) in p.terms() {
        num_gcd = num::Integer::gcd(&num_gcd, &c.numer().abs());
        den_lcm = num::Integer::lcm(&den_lcm, &c.denom().abs());
    }
    if num_gcd.is_zero() {
        Q::one()
    } else {
        Q::new(num_gcd, den_lcm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Poly {
        Poly::atom(Atom::dep("u"))
    }
    fn v() -> Poly {
        Poly::atom(Atom::dep("v"))
    }

    #[test]
    fn binomial_square_expands() {
        let s = u().add(&v());
        let sq = s.mul(&s);
        let expect = u()
            .mul(&u())
            .add(&u().mul(&v()).scale(&q_int(2)))
            .add(&v().mul(&v()));
        assert_eq!(sq, expect);
    }

    #[test]
    fn division_is_exact() {
        // (u^2 - v^2) / (u - v) = u + v
        let p = u().mul(&u()).sub(&v().mul(&v()));
        let d = u().sub(&v());
        assert_eq!(p.div_exact(&d), Some(u().add(&v())));
        assert_eq!(u().div_exact(&v()), None);
    }

    #[test]
    fn square_folding_uses_declared_square() {
        use super::super::atom::FieldSym;
        use std::sync::Arc;
        let r = Poly::atom(Atom::indep("r"));
        let b = Atom::Field(Arc::new(FieldSym {
            name: "B".into(),
            square: Some((r.mul(&r), Poly::one())),
        }));
        // B^3 -> r^2 * B
        let b3 = Poly::atom(b.clone()).pow(3);
        let (num, den) = b3.fold_squares();
        assert_eq!(den, Poly::one());
        assert_eq!(num, r.mul(&r).mul(&Poly::atom(b)));
    }
}
