//! Expression kernel: exact-rational symbolic trees over jet coordinates,
//! parameters, field symbols and opaque function applications, with a
//! canonical rational normal form used for all zero tests.

pub mod atom;
pub mod display;
pub mod eval;
mod gcd;
pub mod poly;
pub mod ratfn;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use num::{BigRational, One, Signed, Zero};
use thiserror::Error;

pub use atom::{Atom, FieldSym, FnApp, MultiIndex};
pub use eval::{EvalPoint, FnInstantiation, Value};
pub use poly::{Poly, Q};
pub use ratfn::RatFn;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("a rational-power subterm cannot be canonicalized")]
    UnsupportedRadical,
    #[error("division by an identically zero expression")]
    DivisionByZero,
    #[error("division by zero at the sample point")]
    DivisionByZeroAtPoint,
    #[error("unbound atom in exact evaluation: {0}")]
    UnboundAtom(String),
    #[error("no instantiation for function {0}")]
    MissingInstantiation(String),
    #[error("at most one distinct square-carrying atom may be evaluated")]
    MultipleRadicalAtoms,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum ExprNode {
    Const(BigRational),
    Atom(Atom),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, BigRational),
}

struct ExprInner {
    node: ExprNode,
    nf: OnceLock<Result<Arc<RatFn>, ExprError>>,
}

/// An immutable expression tree. Clones are cheap (shared), and the canonical
/// normal form is computed once per shared node.
#[derive(Clone)]
pub struct Expr(Arc<ExprInner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}
impl Eq for Expr {}
impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.node.cmp(&other.0.node)
    }
}
impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.node.hash(state);
    }
}
impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

fn wrap(node: ExprNode) -> Expr {
    Expr(Arc::new(ExprInner {
        node,
        nf: OnceLock::new(),
    }))
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        wrap(ExprNode::Const(BigRational::from_integer(n.into())))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        wrap(ExprNode::Const(BigRational::new(n.into(), d.into())))
    }

    pub fn constant(q: BigRational) -> Expr {
        wrap(ExprNode::Const(q))
    }

    pub fn atom(a: Atom) -> Expr {
        wrap(ExprNode::Atom(a))
    }

    pub fn indep(name: &str) -> Expr {
        Expr::atom(Atom::indep(name))
    }

    pub fn param(name: &str) -> Expr {
        Expr::atom(Atom::param(name))
    }

    pub fn jet(dep: &str, dirs: &[u8]) -> Expr {
        Expr::atom(Atom::jet(dep, dirs))
    }

    pub fn dep(dep: &str) -> Expr {
        Expr::atom(Atom::dep(dep))
    }

    pub fn field(sym: Arc<FieldSym>) -> Expr {
        Expr::atom(Atom::Field(sym))
    }

    /// An application of an opaque function; arguments are canonicalized so
    /// that structurally different spellings of the same argument coincide.
    pub fn fn_app(name: &str, orders: &[u32], args: &[Expr]) -> Result<Expr, ExprError> {
        assert_eq!(orders.len(), args.len(), "one derivative order per argument");
        let args = args
            .iter()
            .map(|a| a.normalized())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Expr::atom(Atom::Fn(Arc::new(FnApp {
            name: name.into(),
            orders: orders.to_vec(),
            args,
        }))))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(terms.len());
        let mut c = BigRational::zero();
        for t in terms {
            match &t.0.node {
                ExprNode::Add(inner) => flat.extend(inner.iter().cloned()),
                ExprNode::Const(q) => c += q,
                _ => flat.push(t),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::constant(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => wrap(ExprNode::Add(flat)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(factors.len());
        let mut c = BigRational::one();
        for t in factors {
            match &t.0.node {
                ExprNode::Mul(inner) => flat.extend(inner.iter().cloned()),
                ExprNode::Const(q) => c *= q,
                _ => flat.push(t),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if !c.is_one() {
            flat.insert(0, Expr::constant(c));
        }
        match flat.len() {
            0 => Expr::one(),
            1 => flat.pop().unwrap(),
            _ => wrap(ExprNode::Mul(flat)),
        }
    }

    pub fn pow_i(&self, e: i64) -> Expr {
        match e {
            0 => Expr::one(),
            1 => self.clone(),
            _ => wrap(ExprNode::Pow(
                self.clone(),
                BigRational::from_integer(e.into()),
            )),
        }
    }

    pub fn pow_q(&self, e: BigRational) -> Expr {
        wrap(ExprNode::Pow(self.clone(), e))
    }

    /// Square root as a rational power; normalization accepts exact squares
    /// only and reports `UnsupportedRadical` otherwise.
    pub fn sqrt(&self) -> Expr {
        self.pow_q(BigRational::new(1.into(), 2.into()))
    }

    pub fn neg(&self) -> Expr {
        Expr::product(vec![Expr::int(-1), self.clone()])
    }

    /// The canonical normal form (cached per shared node).
    pub fn nf(&self) -> Result<Arc<RatFn>, ExprError> {
        self.0
            .nf
            .get_or_init(|| self.compute_nf().map(Arc::new))
            .clone()
    }

    fn compute_nf(&self) -> Result<RatFn, ExprError> {
        Ok(match &self.0.node {
            ExprNode::Const(c) => RatFn::constant(c.clone()),
            ExprNode::Atom(a) => RatFn::from_poly(Poly::atom(a.clone())),
            ExprNode::Add(ts) => {
                // accumulate over a common denominator and reduce once at
                // the end; per-term reduction attempts dominate the cost on
                // long sums with shared denominators
                let mut num = Poly::zero();
                let mut den = Poly::one();
                for t in ts {
                    let nf = t.nf()?;
                    if nf.is_zero() {
                        continue;
                    }
                    if nf.den == den {
                        num = num.add(&nf.num);
                    } else {
                        let g = gcd::poly_gcd(&den, &nf.den);
                        let da = den.div_exact(&g).expect("gcd divides");
                        let dt = nf.den.div_exact(&g).expect("gcd divides");
                        num = num.mul(&dt).add(&nf.num.mul(&da));
                        den = den.mul(&dt);
                    }
                }
                if num.has_square_atoms() || den.has_square_atoms() {
                    let (n, nd) = num.fold_squares();
                    let (d, dd) = den.fold_squares();
                    RatFn::canonical(n.mul(&dd), d.mul(&nd))
                } else {
                    RatFn::canonical(num, den)
                }
            }
            ExprNode::Mul(ts) => {
                let mut acc = RatFn::constant(BigRational::one());
                for t in ts {
                    if acc.is_zero() {
                        break;
                    }
                    acc = acc.mul(&*t.nf()?);
                }
                acc
            }
            ExprNode::Pow(b, e) => {
                let base = b.nf()?;
                if e.is_integer() {
                    let k = e
                        .to_integer()
                        .try_into()
                        .map_err(|_| ExprError::UnsupportedRadical)?;
                    base.pow_int(k)?
                } else if *e.denom() == 2.into() {
                    let p: i64 = e
                        .numer()
                        .try_into()
                        .map_err(|_| ExprError::UnsupportedRadical)?;
                    base.pow_int(p)?.sqrt()?
                } else {
                    return Err(ExprError::UnsupportedRadical);
                }
            }
        })
    }

    /// Canonical-form rebuild: the unique tree `num/den` of the normal form.
    /// Idempotent: `e.normalized()?.normalized()? == e.normalized()?`.
    pub fn normalized(&self) -> Result<Expr, ExprError> {
        let nf = self.nf()?;
        let e = ratfn_to_expr(&nf);
        let _ = e.0.nf.set(Ok(nf));
        Ok(e)
    }

    /// Canonical form together with the nonzero side conditions assumed by
    /// divisions performed along the way (denominators, in canonical form).
    pub fn normalized_with_conditions(&self) -> Result<(Expr, Vec<Expr>), ExprError> {
        let mut conds = BTreeSet::new();
        self.collect_denominators(&mut conds)?;
        let e = self.normalized()?;
        Ok((e, conds.into_iter().collect()))
    }

    fn collect_denominators(&self, out: &mut BTreeSet<Expr>) -> Result<(), ExprError> {
        match &self.0.node {
            ExprNode::Const(_) | ExprNode::Atom(_) => {}
            ExprNode::Add(ts) | ExprNode::Mul(ts) => {
                for t in ts {
                    t.collect_denominators(out)?;
                }
            }
            ExprNode::Pow(b, e) => {
                b.collect_denominators(out)?;
                if e.is_negative() {
                    let nf = b.nf()?;
                    if nf.as_constant().is_none() {
                        out.insert(ratfn_to_expr(&nf));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> Result<bool, ExprError> {
        Ok(self.nf()?.is_zero())
    }

    pub fn equivalent(&self, other: &Expr) -> Result<bool, ExprError> {
        (self - other).is_zero()
    }

    pub fn as_constant(&self) -> Result<Option<BigRational>, ExprError> {
        Ok(self.nf()?.as_constant())
    }

    /// All atoms occurring in the tree, including inside function arguments.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut set = BTreeSet::new();
        self.collect_atoms(&mut set);
        set
    }

    fn collect_atoms(&self, set: &mut BTreeSet<Atom>) {
        match &self.0.node {
            ExprNode::Const(_) => {}
            ExprNode::Atom(a) => {
                if let Atom::Fn(app) = a {
                    for arg in &app.args {
                        arg.collect_atoms(set);
                    }
                }
                set.insert(a.clone());
            }
            ExprNode::Add(ts) | ExprNode::Mul(ts) => {
                for t in ts {
                    t.collect_atoms(set);
                }
            }
            ExprNode::Pow(b, _) => b.collect_atoms(set),
        }
    }

    /// Jet atoms occurring in the tree (including inside function arguments).
    pub fn jet_atoms(&self) -> Vec<Atom> {
        self.atoms().into_iter().filter(Atom::is_jet).collect()
    }

    /// Partial derivative with respect to a single atom. Every other atom is
    /// treated as independent, except that function applications chain into
    /// their arguments with the derivative order raised.
    pub fn diff_atom(&self, a: &Atom) -> Expr {
        match &self.0.node {
            ExprNode::Const(_) => Expr::zero(),
            ExprNode::Atom(b) => {
                if b == a {
                    return Expr::one();
                }
                if let Atom::Fn(app) = b {
                    let mut terms = Vec::new();
                    for (j, arg) in app.args.iter().enumerate() {
                        let inner = arg.diff_atom(a);
                        if matches!(&inner.0.node, ExprNode::Const(c) if c.is_zero()) {
                            continue;
                        }
                        terms.push(Expr::product(vec![fn_bump(app, j), inner]));
                    }
                    return Expr::sum(terms);
                }
                Expr::zero()
            }
            ExprNode::Add(ts) => Expr::sum(ts.iter().map(|t| t.diff_atom(a)).collect()),
            ExprNode::Mul(ts) => {
                let mut terms = Vec::new();
                for (i, t) in ts.iter().enumerate() {
                    let dt = t.diff_atom(a);
                    if matches!(&dt.0.node, ExprNode::Const(c) if c.is_zero()) {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(ts.len());
                    fs.push(dt);
                    fs.extend(
                        ts.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, f)| f.clone()),
                    );
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            ExprNode::Pow(b, e) => {
                let db = b.diff_atom(a);
                if matches!(&db.0.node, ExprNode::Const(c) if c.is_zero()) {
                    return Expr::zero();
                }
                Expr::product(vec![
                    Expr::constant(e.clone()),
                    b.pow_q(e - BigRational::one()),
                    db,
                ])
            }
        }
    }

    /// Simultaneous substitution of atoms by expressions, then normalization.
    /// A function application that is itself a key is replaced wholesale;
    /// otherwise substitution descends into its arguments.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, ExprError> {
        self.substitute_raw(bindings)?.normalized()
    }

    /// Substitution without the final normalization pass.
    pub fn substitute_raw(&self, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, ExprError> {
        Ok(match &self.0.node {
            ExprNode::Const(_) => self.clone(),
            ExprNode::Atom(a) => {
                if let Some(e) = bindings.get(a) {
                    return Ok(e.clone());
                }
                if let Atom::Fn(app) = a {
                    let new_args = app
                        .args
                        .iter()
                        .map(|arg| arg.substitute_raw(bindings))
                        .collect::<Result<Vec<_>, _>>()?;
                    if new_args != app.args {
                        return Expr::fn_app(&app.name, &app.orders, &new_args);
                    }
                }
                self.clone()
            }
            ExprNode::Add(ts) => Expr::sum(
                ts.iter()
                    .map(|t| t.substitute_raw(bindings))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            ExprNode::Mul(ts) => Expr::product(
                ts.iter()
                    .map(|t| t.substitute_raw(bindings))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            ExprNode::Pow(b, e) => b.substitute_raw(bindings)?.pow_q(e.clone()),
        })
    }

    pub(crate) fn node(&self) -> &ExprNode {
        &self.0.node
    }
}

/// The function application with one more derivative in argument `j`.
pub(crate) fn fn_bump(app: &FnApp, j: usize) -> Expr {
    let mut orders = app.orders.clone();
    orders[j] += 1;
    Expr::atom(Atom::Fn(Arc::new(FnApp {
        name: app.name.clone(),
        orders,
        args: app.args.clone(),
    })))
}

pub fn poly_to_expr(p: &Poly) -> Expr {
    let mut terms = Vec::with_capacity(p.num_terms());
    for (m, c) in p.terms() {
        let mut factors = Vec::new();
        if !c.is_one() || m.is_one() {
            factors.push(Expr::constant(c.clone()));
        }
        for (a, e) in m.factors() {
            let ax = Expr::atom(a.clone());
            factors.push(if *e == 1 { ax } else { ax.pow_i(*e as i64) });
        }
        terms.push(Expr::product(factors));
    }
    terms.reverse(); // leading monomial first
    Expr::sum(terms)
}

pub(crate) fn ratfn_to_expr(nf: &RatFn) -> Expr {
    let num = poly_to_expr(&nf.num);
    match nf.den.as_constant() {
        Some(c) if c.is_one() => num,
        _ => Expr::product(vec![num, poly_to_expr(&nf.den).pow_i(-1)]),
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $build:expr) => {
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self.clone(), rhs)
            }
        }
    };
}

impl_binop!(Add, add, |a, b| Expr::sum(vec![a, b]));
impl_binop!(Sub, sub, |a, b| Expr::sum(vec![a, b.neg()]));
impl_binop!(Mul, mul, |a, b| Expr::product(vec![a, b]));
impl_binop!(Div, div, |a, b| Expr::product(vec![a, b.pow_i(-1)]));

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expr {
        Expr::dep("u")
    }
    fn v() -> Expr {
        Expr::dep("v")
    }

    #[test]
    fn binomial_identity_normalizes_to_zero() {
        let e = (u() + v()).pow_i(2) - u().pow_i(2) - Expr::int(2) * u() * v() - v().pow_i(2);
        assert!(e.is_zero().unwrap());
    }

    #[test]
    fn self_quotient_is_one_with_condition() {
        let e = &u() / &u();
        let (n, conds) = e.normalized_with_conditions().unwrap();
        assert!(n.equivalent(&Expr::one()).unwrap());
        assert_eq!(conds.len(), 1);
        assert!(conds[0].equivalent(&u()).unwrap());
    }

    #[test]
    fn fn_atoms_commute() {
        let w = Expr::dep("w");
        let f = Expr::fn_app("f", &[0], &[w.clone()]).unwrap();
        let e = &f * &w - &w * &f;
        assert!(e.is_zero().unwrap());
    }

    #[test]
    fn normalize_is_idempotent() {
        let e = (u() + v()).pow_i(3) * (u() - v()) / (u() + Expr::int(1));
        let n1 = e.normalized().unwrap();
        let n2 = n1.normalized().unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn diff_atom_examples() {
        // d(u_t * u_x)/d(u_t) = u_x
        let ut = Expr::jet("u", &[0]);
        let ux = Expr::jet("u", &[1]);
        let d = (&ut * &ux).diff_atom(&Atom::jet("u", &[0]));
        assert!(d.equivalent(&ux).unwrap());

        // d f(w) / d w = f'(w)
        let w = Expr::dep("w");
        let f = Expr::fn_app("f", &[0], &[w.clone()]).unwrap();
        let fp = Expr::fn_app("f", &[1], &[w.clone()]).unwrap();
        assert!(f.diff_atom(&Atom::dep("w")).equivalent(&fp).unwrap());

        // d(u_x^2/2)/d(u_x) = u_x
        let e = Expr::rat(1, 2) * ux.pow_i(2);
        assert!(e.diff_atom(&Atom::jet("u", &[1])).equivalent(&ux).unwrap());
    }

    #[test]
    fn substitute_examples() {
        // (w - u2_1 + u1_2) with w -> u2_1 - u1_2 gives 0
        let w = Expr::dep("w");
        let e = &w - Expr::jet("u2", &[0]) + Expr::jet("u1", &[1]);
        let mut b = BTreeMap::new();
        b.insert(
            Atom::dep("w"),
            Expr::jet("u2", &[0]) - Expr::jet("u1", &[1]),
        );
        assert!(e.substitute(&b).unwrap().is_zero().unwrap());

        let mut b2 = BTreeMap::new();
        b2.insert(Atom::dep("u"), Expr::int(2));
        b2.insert(Atom::dep("v"), Expr::int(3));
        assert!((u() * v())
            .substitute(&b2)
            .unwrap()
            .equivalent(&Expr::int(6))
            .unwrap());

        // f(w) with w -> z gives f(z)
        let f = Expr::fn_app("f", &[0], &[w.clone()]).unwrap();
        let mut b3 = BTreeMap::new();
        b3.insert(Atom::dep("w"), Expr::dep("z"));
        let fz = Expr::fn_app("f", &[0], &[Expr::dep("z")]).unwrap();
        assert_eq!(f.substitute(&b3).unwrap(), fz);
    }

    #[test]
    fn unsupported_radical_is_reported() {
        let e = u().sqrt();
        assert_eq!(e.nf().unwrap_err(), ExprError::UnsupportedRadical);
        // but sqrt of a product square is fine: sqrt(u^2 v^2) = u v
        let s = (u().pow_i(2) * v().pow_i(2)).sqrt();
        assert!(s.equivalent(&(u() * v())).unwrap());
    }

    #[test]
    fn leibniz_rule_for_diff_atom() {
        let a = Atom::jet("u", &[1]);
        let f = (u() + Expr::jet("u", &[1]).pow_i(2)) * (v() + Expr::jet("u", &[1]));
        let g = Expr::jet("u", &[1]) * v() + u();
        let lhs = (&f * &g).diff_atom(&a);
        let rhs = f.diff_atom(&a) * &g + &f * g.diff_atom(&a);
        assert!(lhs.equivalent(&rhs).unwrap());
    }
}
