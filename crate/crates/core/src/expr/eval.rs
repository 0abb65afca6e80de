//! Exact numeric evaluation: the probabilistic zero oracle.
//!
//! Evaluation walks the original tree, independently of the normal-form
//! pipeline it cross-checks. Values live in `Q[s]/(s^2 - d)` where `s` is the
//! (at most one) square-carrying field atom in play and `d` the exact value
//! of its declared square at the sample point; radical-free expressions stay
//! in plain `Q`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::poly::Poly;
use super::{Atom, Expr, ExprError, ExprNode, Q};

/// An element `rat + rad * s` of the quadratic extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Value {
    pub rat: Q,
    pub rad: Q,
}

impl Value {
    pub fn rational(q: Q) -> Value {
        Value {
            rat: q,
            rad: Q::zero(),
        }
    }

    pub fn zero() -> Value {
        Value::rational(Q::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.rad.is_zero()
    }

    /// The plain rational value; `None` when a radical part remains.
    pub fn as_rational(&self) -> Option<&Q> {
        self.rad.is_zero().then_some(&self.rat)
    }

    fn add(&self, o: &Value) -> Value {
        Value {
            rat: &self.rat + &o.rat,
            rad: &self.rad + &o.rad,
        }
    }

    fn mul(&self, o: &Value, d: &Q) -> Value {
        Value {
            rat: &self.rat * &o.rat + &self.rad * &o.rad * d,
            rad: &self.rat * &o.rad + &self.rad * &o.rat,
        }
    }

    fn inv(&self, d: &Q) -> Result<Value, ExprError> {
        // 1/(a + b s) = (a - b s)/(a^2 - b^2 d)
        let norm = &self.rat * &self.rat - &self.rad * &self.rad * d;
        if norm.is_zero() {
            return Err(ExprError::DivisionByZeroAtPoint);
        }
        Ok(Value {
            rat: &self.rat / &norm,
            rad: -(&self.rad) / &norm,
        })
    }

    fn pow(&self, e: i64, d: &Q) -> Result<Value, ExprError> {
        if e < 0 {
            return self.inv(d)?.pow(-e, d);
        }
        let mut acc = Value::rational(Q::one());
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, d);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base, d);
            }
        }
        Ok(acc)
    }
}

/// A polynomial in one or several formal slots: the concrete stand-in for an
/// opaque function during numeric evaluation. Derivatives are taken formally,
/// so `f` and `f'` are always consistent.
#[derive(Debug, Clone)]
pub struct SlotPoly {
    pub arity: usize,
    pub terms: Vec<(Vec<u32>, Q)>,
}

impl SlotPoly {
    pub fn new(arity: usize, terms: Vec<(Vec<u32>, Q)>) -> SlotPoly {
        for (e, _) in &terms {
            assert_eq!(e.len(), arity, "exponent tuple arity mismatch");
        }
        SlotPoly { arity, terms }
    }

    /// `slot_j^k` convenience for a single power of one slot.
    pub fn monomial(arity: usize, slot: usize, k: u32) -> SlotPoly {
        let mut e = vec![0; arity];
        e[slot] = k;
        SlotPoly::new(arity, vec![(e, Q::one())])
    }

    pub fn derivative(&self, orders: &[u32]) -> SlotPoly {
        assert_eq!(orders.len(), self.arity);
        let mut terms = Vec::new();
        'term: for (exps, c) in &self.terms {
            let mut exps = exps.clone();
            let mut coeff = c.clone();
            for (j, &k) in orders.iter().enumerate() {
                for _ in 0..k {
                    if exps[j] == 0 {
                        continue 'term;
                    }
                    coeff *= Q::from_integer(exps[j].into());
                    exps[j] -= 1;
                }
            }
            terms.push((exps, coeff));
        }
        SlotPoly::new(self.arity, terms)
    }

    fn eval(&self, args: &[Value], d: &Q) -> Result<Value, ExprError> {
        let mut acc = Value::zero();
        for (exps, c) in &self.terms {
            let mut t = Value::rational(c.clone());
            for (j, &k) in exps.iter().enumerate() {
                t = t.mul(&args[j].pow(k as i64, d)?, d);
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    pub fn random(arity: usize, max_degree: u32, rng: &mut impl Rng) -> SlotPoly {
        let mut terms = Vec::new();
        let mut stack = vec![vec![]];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == arity {
                let deg: u32 = prefix.iter().sum();
                if deg <= max_degree {
                    let c: i64 = rng.gen_range(-9..=9);
                    if c != 0 {
                        terms.push((prefix, Q::from_integer(c.into())));
                    }
                }
                continue;
            }
            for k in 0..=max_degree {
                let mut p = prefix.clone();
                p.push(k);
                stack.push(p);
            }
        }
        if terms.is_empty() {
            // keep the instantiation nondegenerate
            terms.push((vec![1; arity.max(1)][..arity].to_vec(), Q::one()));
            if arity == 0 {
                terms[0].0.clear();
            }
        }
        SlotPoly::new(arity, terms)
    }
}

/// Consistent instantiations of the opaque functions, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct FnInstantiation {
    map: BTreeMap<Arc<str>, SlotPoly>,
}

impl FnInstantiation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, poly: SlotPoly) {
        self.map.insert(name.into(), poly);
    }

    pub fn get(&self, name: &str) -> Option<&SlotPoly> {
        self.map.get(name)
    }
}

/// Rational values for the non-function atoms of an expression.
#[derive(Debug, Clone, Default)]
pub struct EvalPoint {
    pub bindings: BTreeMap<Atom, Q>,
}

fn random_rational(rng: &mut impl Rng) -> Q {
    let n: i64 = rng.gen_range(-12..=12);
    let d: i64 = rng.gen_range(1..=6);
    Q::new(n.into(), d.into())
}

fn nonzero_random_rational(rng: &mut impl Rng) -> Q {
    loop {
        let q = random_rational(rng);
        if !q.is_zero() {
            return q;
        }
    }
}

struct Evaluator<'a> {
    point: &'a EvalPoint,
    inst: &'a FnInstantiation,
    sq_atom: Option<Atom>,
    d: Q,
}

impl<'a> Evaluator<'a> {
    fn eval_poly(&self, p: &Poly) -> Result<Value, ExprError> {
        let mut acc = Value::zero();
        for (m, c) in p.terms() {
            let mut t = Value::rational(c.clone());
            for (a, e) in m.factors() {
                t = t.mul(&self.eval_atom(a)?.pow(*e as i64, &self.d)?, &self.d);
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    fn eval_atom(&self, a: &Atom) -> Result<Value, ExprError> {
        if self.sq_atom.as_ref() == Some(a) {
            return Ok(Value {
                rat: Q::zero(),
                rad: Q::one(),
            });
        }
        if let Atom::Fn(app) = a {
            let poly = self
                .inst
                .get(&app.name)
                .ok_or_else(|| ExprError::MissingInstantiation(app.name.to_string()))?;
            let args = app
                .args
                .iter()
                .map(|arg| self.eval(arg))
                .collect::<Result<Vec<_>, _>>()?;
            return poly.derivative(&app.orders).eval(&args, &self.d);
        }
        self.point
            .bindings
            .get(a)
            .map(|q| Value::rational(q.clone()))
            .ok_or_else(|| ExprError::UnboundAtom(format!("{a:?}")))
    }

    fn eval(&self, e: &Expr) -> Result<Value, ExprError> {
        match e.node() {
            ExprNode::Const(q) => Ok(Value::rational(q.clone())),
            ExprNode::Atom(a) => self.eval_atom(a),
            ExprNode::Add(ts) => {
                let mut acc = Value::zero();
                for t in ts {
                    acc = acc.add(&self.eval(t)?);
                }
                Ok(acc)
            }
            ExprNode::Mul(ts) => {
                let mut acc = Value::rational(Q::one());
                for t in ts {
                    acc = acc.mul(&self.eval(t)?, &self.d);
                }
                Ok(acc)
            }
            ExprNode::Pow(b, q) => {
                let base = self.eval(b)?;
                if q.is_integer() {
                    let k: i64 = q
                        .to_integer()
                        .try_into()
                        .map_err(|_| ExprError::UnsupportedRadical)?;
                    base.pow(k, &self.d)
                } else {
                    Err(ExprError::UnsupportedRadical)
                }
            }
        }
    }
}

/// Finds the (at most one) square-carrying atom of `e`.
fn square_atom(e: &Expr) -> Result<Option<Atom>, ExprError> {
    let mut found: Option<Atom> = None;
    for a in e.atoms() {
        if a.square().is_some() {
            match &found {
                Some(prev) if *prev != a => return Err(ExprError::MultipleRadicalAtoms),
                _ => found = Some(a),
            }
        }
    }
    Ok(found)
}

/// Evaluates `e` exactly at `point` with functions instantiated by `inst`.
pub fn eval_exact(
    e: &Expr,
    point: &EvalPoint,
    inst: &FnInstantiation,
) -> Result<Value, ExprError> {
    let sq_atom = square_atom(e)?;
    let d = match &sq_atom {
        None => Q::zero(),
        Some(a) => {
            let (num, den) = a.square().unwrap();
            let tmp = Evaluator {
                point,
                inst,
                sq_atom: None,
                d: Q::zero(),
            };
            let n = tmp.eval_poly(num)?;
            let den = tmp.eval_poly(den)?;
            let n = n.as_rational().ok_or(ExprError::MultipleRadicalAtoms)?;
            let dv = den.as_rational().ok_or(ExprError::MultipleRadicalAtoms)?;
            if dv.is_zero() {
                return Err(ExprError::DivisionByZeroAtPoint);
            }
            n / dv
        }
    };
    Evaluator {
        point,
        inst,
        sq_atom,
        d,
    }
    .eval(e)
}

/// Outcome of the probabilistic zero oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OracleOutcome {
    pub points: u32,
    pub failures: u32,
}

/// Samples a random point binding every non-function atom of `e`, plus a
/// random instantiation (degree <= 3) per function name.
pub fn random_sample(e: &Expr, rng: &mut impl Rng) -> (EvalPoint, FnInstantiation) {
    let mut point = EvalPoint::default();
    let mut inst = FnInstantiation::new();
    for a in e.atoms() {
        match &a {
            Atom::Fn(app) => {
                if inst.get(&app.name).is_none() {
                    inst.insert(&app.name, SlotPoly::random(app.args.len(), 3, rng));
                }
            }
            _ if a.square().is_some() => {} // played by the radical generator
            _ => {
                // keep independent variables nonzero: they often sit in
                // denominators (weights 1/r) and in declared squares
                let q = if matches!(a, Atom::Indep(_)) {
                    nonzero_random_rational(rng)
                } else {
                    random_rational(rng)
                };
                point.bindings.insert(a.clone(), q);
            }
        }
    }
    (point, inst)
}

/// Checks `e = 0` at `points` seeded random rational points. Division by zero
/// at a point triggers a bounded reseed (8 attempts) before counting as a
/// failure.
pub fn confirm_zero(e: &Expr, seed: u64, points: u32) -> OracleOutcome {
    let mut failures = 0;
    for i in 0..points {
        let mut ok = false;
        for attempt in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9E3779B97F4A7C15)
                    .wrapping_add(i as u64)
                    .wrapping_add(attempt << 32),
            );
            let (point, inst) = random_sample(e, &mut rng);
            match eval_exact(e, &point, &inst) {
                Ok(v) => {
                    ok = v.is_zero();
                    break;
                }
                Err(ExprError::DivisionByZeroAtPoint) => continue,
                Err(_) => break,
            }
        }
        if !ok {
            failures += 1;
        }
    }
    OracleOutcome { points, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_polynomials() {
        let u = Expr::dep("u");
        let e = &u * &u - &u * &u;
        let mut point = EvalPoint::default();
        point.bindings.insert(Atom::dep("u"), Q::from_integer(7.into()));
        let v = eval_exact(&e, &point, &FnInstantiation::new()).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn instantiation_is_consistent_across_orders() {
        // f -> slot^3 at w=2: f(w) = 8, f'(w) = 12
        let w = Expr::dep("w");
        let f = Expr::fn_app("f", &[0], &[w.clone()]).unwrap();
        let fp = Expr::fn_app("f", &[1], &[w.clone()]).unwrap();
        let mut inst = FnInstantiation::new();
        inst.insert("f", SlotPoly::monomial(1, 0, 3));
        let mut point = EvalPoint::default();
        point.bindings.insert(Atom::dep("w"), Q::from_integer(2.into()));
        let vf = eval_exact(&f, &point, &inst).unwrap();
        let vfp = eval_exact(&fp, &point, &inst).unwrap();
        assert_eq!(vf.as_rational().unwrap(), &Q::from_integer(8.into()));
        assert_eq!(vfp.as_rational().unwrap(), &Q::from_integer(12.into()));
    }

    #[test]
    fn oracle_confirms_identities() {
        let u = Expr::dep("u");
        let v = Expr::dep("v");
        let f = Expr::fn_app("f", &[0], &[(&u + &v).normalized().unwrap()]).unwrap();
        let e = (&u + &v).pow_i(2) * &f - (&u * &u + Expr::int(2) * &u * &v + &v * &v) * &f;
        let out = confirm_zero(&e, 42, 20);
        assert_eq!(out.failures, 0);
    }

    #[test]
    fn square_atoms_evaluate_in_the_extension() {
        use crate::expr::FieldSym;
        use std::sync::Arc;
        // s^2 = r^2/(r^2+1); check s^2*(r^2+1) - r^2 == 0 numerically
        let r = Expr::indep("r");
        let sq_num = r.nf().unwrap().num.clone();
        let den = (&r * &r + Expr::one()).nf().unwrap().num.clone();
        let s = Expr::field(Arc::new(FieldSym {
            name: "s".into(),
            square: Some((sq_num.mul(&sq_num), den)),
        }));
        let e = &s * &s * (&r * &r + Expr::one()) - &r * &r;
        let out = confirm_zero(&e, 7, 10);
        assert_eq!(out.failures, 0);
    }
}
