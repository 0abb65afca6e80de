//! Jet-space calculus: total derivatives, prolongations of evolutionary
//! fields, Euler operators, the Noether operator decomposition and
//! (optionally weighted) divergences.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::atom::{Atom, FieldSym, MultiIndex};
use crate::expr::{Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("field {field} has no derivative rule for direction {dir}")]
    MissingDerivativeRule { field: String, dir: String },
    #[error("unknown independent variable index {0}")]
    UnknownDirection(usize),
    #[error("unknown dependent variable {0}")]
    UnknownDependent(String),
    #[error("field square must be a rational function of base atoms: {0}")]
    InvalidFieldSquare(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug)]
struct FieldInfo {
    sym: Arc<FieldSym>,
    /// one rule per independent variable; `None` = not registered yet
    rules: Vec<Option<Expr>>,
}

#[derive(Debug)]
/// Declaration of the ambient jet space: independent and dependent variables,
/// registered field symbols with their derivative rules, optional divergence
/// weights, and ranking blocks used by solved-form reduction.
pub struct JetContext {
    indep: Vec<Arc<str>>,
    dep: Vec<Arc<str>>,
    params: Vec<Arc<str>>,
    fields: BTreeMap<Arc<str>, FieldInfo>,
    /// per-direction (outer, inner) factors of the weighted divergence
    weights: Option<Vec<(Expr, Expr)>>,
    /// ranking priority per dependent variable (higher reduces first)
    blocks: BTreeMap<Arc<str>, u32>,
}

impl JetContext {
    pub fn new(indep: &[&str], dep: &[&str]) -> JetContext {
        assert!(!indep.is_empty() && !dep.is_empty());
        JetContext {
            indep: indep.iter().map(|s| Arc::from(*s)).collect(),
            dep: dep.iter().map(|s| Arc::from(*s)).collect(),
            params: Vec::new(),
            fields: BTreeMap::new(),
            weights: None,
            blocks: BTreeMap::new(),
        }
    }

    pub fn num_indep(&self) -> usize {
        self.indep.len()
    }

    pub fn num_dep(&self) -> usize {
        self.dep.len()
    }

    pub fn indep_names(&self) -> &[Arc<str>] {
        &self.indep
    }

    pub fn dep_names(&self) -> &[Arc<str>] {
        &self.dep
    }

    pub fn params(&self) -> &[Arc<str>] {
        &self.params
    }

    pub fn declare_param(&mut self, name: &str) {
        self.params.push(name.into());
    }

    pub fn direction(&self, name: &str) -> Option<u8> {
        self.indep.iter().position(|n| &**n == name).map(|i| i as u8)
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.dep.iter().position(|n| &**n == name)
    }

    pub fn field_sym(&self, name: &str) -> Option<Arc<FieldSym>> {
        self.fields.get(name).map(|f| f.sym.clone())
    }

    pub fn field_names(&self) -> Vec<Arc<str>> {
        self.fields.keys().cloned().collect()
    }

    pub fn field_rule(&self, name: &str, dir: u8) -> Option<&Expr> {
        self.fields
            .get(name)
            .and_then(|f| f.rules.get(dir as usize))
            .and_then(Option::as_ref)
    }

    pub fn blocks(&self) -> &BTreeMap<Arc<str>, u32> {
        &self.blocks
    }

    /// Registers a field symbol. The optional `square` must normalize to a
    /// rational function free of jet atoms and of square-carrying atoms.
    pub fn declare_field(
        &mut self,
        name: &str,
        square: Option<&Expr>,
    ) -> Result<Arc<FieldSym>, JetError> {
        let square = match square {
            None => None,
            Some(e) => {
                let nf = e.nf()?;
                for a in nf.atoms() {
                    if a.is_jet() || a.square().is_some() {
                        return Err(JetError::InvalidFieldSquare(format!("{a:?}")));
                    }
                }
                Some((nf.num.clone(), nf.den.clone()))
            }
        };
        let sym = Arc::new(FieldSym {
            name: name.into(),
            square,
        });
        self.fields.insert(
            sym.name.clone(),
            FieldInfo {
                sym: sym.clone(),
                rules: vec![None; self.indep.len()],
            },
        );
        Ok(sym)
    }

    /// Registers the total-derivative rule `D_dir(field) = rule`.
    pub fn set_field_rule(&mut self, name: &str, dir: u8, rule: Expr) {
        let info = self
            .fields
            .get_mut(name)
            .unwrap_or_else(|| panic!("undeclared field {name}"));
        info.rules[dir as usize] = Some(rule);
    }

    /// Declares a field constant in every direction except those listed.
    pub fn declare_field_on(
        &mut self,
        name: &str,
        square: Option<&Expr>,
        varying: &[u8],
    ) -> Result<Arc<FieldSym>, JetError> {
        let sym = self.declare_field(name, square)?;
        for d in 0..self.indep.len() as u8 {
            if !varying.contains(&d) {
                self.set_field_rule(name, d, Expr::zero());
            }
        }
        Ok(sym)
    }

    pub fn set_weight(&mut self, dir: u8, outer: Expr, inner: Expr) {
        let p = self.indep.len();
        let w = self
            .weights
            .get_or_insert_with(|| vec![(Expr::one(), Expr::one()); p]);
        w[dir as usize] = (outer, inner);
    }

    pub fn weights(&self) -> Option<&[(Expr, Expr)]> {
        self.weights.as_deref()
    }

    pub fn set_block(&mut self, dep: &str, block: u32) {
        self.blocks.insert(dep.into(), block);
    }

    pub fn block_of(&self, dep: &str) -> u32 {
        self.blocks.get(dep).copied().unwrap_or(0)
    }

    /// Ranking key of a jet atom: block, total order, count of derivatives in
    /// the first (time-like) direction, dependent index, then the index.
    /// Higher keys reduce first.
    pub fn rank(&self, dep: &str, index: &MultiIndex) -> (u32, usize, usize, usize, MultiIndex) {
        (
            self.block_of(dep),
            index.order(),
            index.count(0),
            self.dep_index(dep).unwrap_or(usize::MAX),
            index.clone(),
        )
    }

    fn atom_derivative(&self, a: &Atom, dir: u8) -> Result<Expr, JetError> {
        Ok(match a {
            Atom::Indep(n) => {
                if self.direction(n) == Some(dir) {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Atom::Param(_) => Expr::zero(),
            Atom::Jet { dep, index } => Expr::atom(Atom::Jet {
                dep: dep.clone(),
                index: index.push(dir),
            }),
            Atom::Field(sym) => {
                let info = self
                    .fields
                    .get(&sym.name)
                    .ok_or_else(|| JetError::MissingDerivativeRule {
                        field: sym.name.to_string(),
                        dir: self.indep[dir as usize].to_string(),
                    })?;
                info.rules[dir as usize]
                    .clone()
                    .ok_or_else(|| JetError::MissingDerivativeRule {
                        field: sym.name.to_string(),
                        dir: self.indep[dir as usize].to_string(),
                    })?
            }
            Atom::Fn(app) => {
                let mut terms = Vec::new();
                for (j, arg) in app.args.iter().enumerate() {
                    let darg = self.total_derivative(arg, dir)?;
                    terms.push(crate::expr::fn_bump(app, j) * darg);
                }
                Expr::sum(terms)
            }
        })
    }

    /// The total derivative `D_i e`: the chain rule through every atom, with
    /// jet coordinates treated as functions of the independent variables.
    pub fn total_derivative(&self, e: &Expr, dir: u8) -> Result<Expr, JetError> {
        use crate::expr::ExprNode;
        Ok(match e.node() {
            ExprNode::Const(_) => Expr::zero(),
            ExprNode::Atom(a) => self.atom_derivative(a, dir)?,
            ExprNode::Add(ts) => Expr::sum(
                ts.iter()
                    .map(|t| self.total_derivative(t, dir))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            ExprNode::Mul(ts) => {
                let mut terms = Vec::new();
                for (i, t) in ts.iter().enumerate() {
                    let dt = self.total_derivative(t, dir)?;
                    let mut fs = vec![dt];
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
            ExprNode::Pow(b, q) => {
                let db = self.total_derivative(b, dir)?;
                Expr::product(vec![
                    Expr::constant(q.clone()),
                    b.pow_q(q - num::BigRational::from_integer(1.into())),
                    db,
                ])
            }
        })
    }

    /// `D_J e` for a multi-index `J` (order of application is immaterial).
    pub fn total_derivative_multi(&self, e: &Expr, index: &MultiIndex) -> Result<Expr, JetError> {
        let mut acc = e.clone();
        for &d in index.dirs() {
            acc = self.total_derivative(&acc, d)?;
        }
        Ok(acc)
    }

    /// `(-D)_J e = (-1)^{|J|} D_J e`.
    pub fn adjoint_derivative_multi(&self, e: &Expr, index: &MultiIndex) -> Result<Expr, JetError> {
        let d = self.total_derivative_multi(e, index)?;
        Ok(if index.order() % 2 == 0 { d } else { d.neg() })
    }

    /// Applies the prolonged evolutionary field:
    /// `X e = sum_{a,J} (D_J phi^a) * de/du^a_J` over the jet atoms of `e`.
    pub fn prolong_apply(&self, field: &EvolutionaryField, e: &Expr) -> Result<Expr, JetError> {
        let mut terms = Vec::new();
        for atom in e.jet_atoms() {
            let (dep, index) = atom.as_jet().expect("jet atom");
            let Some(a) = self.dep_index(dep) else {
                return Err(JetError::UnknownDependent(dep.to_string()));
            };
            let phi = &field.characteristics[a];
            if phi.nf()?.is_zero() {
                continue;
            }
            let coeff = self.total_derivative_multi(phi, index)?;
            terms.push(coeff * e.diff_atom(&atom));
        }
        Ok(Expr::sum(terms))
    }

    /// The Euler operator `E_a e = sum_J (-D)_J de/du^a_J`.
    pub fn euler_op(&self, e: &Expr, dep: &str) -> Result<Expr, JetError> {
        if self.dep_index(dep).is_none() {
            return Err(JetError::UnknownDependent(dep.to_string()));
        }
        let mut terms = Vec::new();
        for atom in e.jet_atoms() {
            let (d, index) = atom.as_jet().expect("jet atom");
            if &**d != dep {
                continue;
            }
            terms.push(self.adjoint_derivative_multi(&e.diff_atom(&atom), index)?);
        }
        Ok(Expr::sum(terms))
    }

    /// The Noether operator tuple `R^i(e)`, satisfying the operator identity
    /// `X e = sum_a phi^a E_a(e) + sum_i D_i R^i(e)` exactly.
    ///
    /// Index-splitting convention: for each jet atom `u^a_M` the directions of
    /// `M` are peeled smallest-first; peeling `j` from the remainder `{j} + K`
    /// contributes `(D_K phi^a) * g` to `R^j` and replaces the working factor
    /// `g` by `-D_j g`. This telescoping reproduces the classical first- and
    /// second-order formulas; `R` is unique only up to identically
    /// divergence-free tuples, so tests assert the identity, never a shape.
    pub fn noether_r(&self, field: &EvolutionaryField, e: &Expr) -> Result<Vec<Expr>, JetError> {
        let mut flux = vec![Vec::new(); self.indep.len()];
        for atom in e.jet_atoms() {
            let (dep, index) = atom.as_jet().expect("jet atom");
            if index.is_empty() {
                continue;
            }
            let Some(a) = self.dep_index(dep) else {
                return Err(JetError::UnknownDependent(dep.to_string()));
            };
            let phi = &field.characteristics[a];
            if phi.nf()?.is_zero() {
                continue;
            }
            let dirs = index.dirs().to_vec();
            let mut g = e.diff_atom(&atom);
            for (t, &j) in dirs.iter().enumerate() {
                let rest = MultiIndex::new(dirs[t + 1..].to_vec());
                let coeff = self.total_derivative_multi(phi, &rest)?;
                flux[j as usize].push(coeff * &g);
                if t + 1 < dirs.len() {
                    g = self.total_derivative(&g, j)?.neg();
                }
            }
        }
        Ok(flux.into_iter().map(Expr::sum).collect())
    }

    /// Canonical (evolutionary) form of a general field:
    /// `phi_hat^a = phi^a - u^a_i xi^i`.
    pub fn canonicalize_field(&self, x: &GeneralField) -> EvolutionaryField {
        let characteristics = (0..self.dep.len())
            .map(|a| {
                let mut terms = vec![x.components[a].clone()];
                for (i, xi) in x.frame.iter().enumerate() {
                    let u_i = Expr::atom(Atom::Jet {
                        dep: self.dep[a].clone(),
                        index: MultiIndex::new(vec![i as u8]),
                    });
                    terms.push((xi * u_i).neg());
                }
                Expr::sum(terms)
            })
            .collect();
        EvolutionaryField { characteristics }
    }

    /// The (weighted) divergence `sum_i s_i D_i (m_i K^i)`; flat when no
    /// weights are declared.
    pub fn divergence(&self, flux: &[Expr]) -> Result<Expr, JetError> {
        assert_eq!(flux.len(), self.indep.len(), "one component per direction");
        let mut terms = Vec::new();
        for (i, k) in flux.iter().enumerate() {
            match &self.weights {
                None => terms.push(self.total_derivative(k, i as u8)?),
                Some(w) => {
                    let (outer, inner) = &w[i];
                    terms.push(outer * self.total_derivative(&(inner * k), i as u8)?);
                }
            }
        }
        Ok(Expr::sum(terms))
    }

    /// The flat divergence `sum_i D_i K^i`, ignoring any declared weights.
    /// The Noether operator identity is stated in these terms.
    pub fn flat_divergence(&self, flux: &[Expr]) -> Result<Expr, JetError> {
        assert_eq!(flux.len(), self.indep.len(), "one component per direction");
        let mut terms = Vec::new();
        for (i, k) in flux.iter().enumerate() {
            terms.push(self.total_derivative(k, i as u8)?);
        }
        Ok(Expr::sum(terms))
    }

    /// True iff `e` equals the (weighted) divergence of `flux` identically.
    pub fn divergence_verify(&self, e: &Expr, flux: &[Expr]) -> Result<bool, JetError> {
        Ok((e - self.divergence(flux)?).is_zero()?)
    }

    /// Attempts to write `e = D_i M^i` (flat divergence) for expressions
    /// linear in their highest-order derivatives. Deliberately weak: peels
    /// top-order atoms largest-direction-first, then reconstructs the
    /// first-order potential by homogeneous-degree integration. Returns
    /// `None` rather than guessing.
    pub fn divergence_invert(&self, e: &Expr) -> Result<Option<Vec<Expr>>, JetError> {
        let p = self.indep.len();
        let mut flux = vec![Expr::zero(); p];
        let mut work = e.normalized()?;
        for _ in 0..64 {
            let top = work
                .jet_atoms()
                .into_iter()
                .filter(|a| a.as_jet().unwrap().1.order() >= 2)
                .max_by_key(|a| {
                    let (d, j) = a.as_jet().unwrap();
                    (j.order(), d.clone(), j.clone())
                });
            let Some(atom) = top else { break };
            let (_, index) = atom.as_jet().unwrap();
            let c = work.diff_atom(&atom).normalized()?;
            if !c.diff_atom(&atom).is_zero()? {
                return Ok(None); // nonlinear in the top derivative
            }
            let max_c_order = c
                .jet_atoms()
                .iter()
                .map(|a| a.as_jet().unwrap().1.order())
                .max()
                .unwrap_or(0);
            if max_c_order >= index.order() {
                return Ok(None);
            }
            let j = *index.dirs().last().unwrap();
            let peeled = Expr::atom(Atom::Jet {
                dep: atom.as_jet().unwrap().0.clone(),
                index: index.remove(j).unwrap(),
            });
            let part = &c * &peeled;
            flux[j as usize] = &flux[j as usize] + &part;
            work = (&work - self.total_derivative(&part, j)?).normalized()?;
        }
        if work
            .jet_atoms()
            .iter()
            .any(|a| a.as_jet().unwrap().1.order() >= 2)
        {
            return Ok(None);
        }
        // first-order endgame: e = c_{a,i} u^a_i + (order-0 part)
        for i in 0..p {
            let mut potential_input = Vec::new();
            for dep in &self.dep {
                let atom = Atom::Jet {
                    dep: dep.clone(),
                    index: MultiIndex::new(vec![i as u8]),
                };
                let c = work.diff_atom(&atom).normalized()?;
                if c.is_zero()? {
                    continue;
                }
                if c.jet_atoms()
                    .iter()
                    .any(|a| !a.as_jet().unwrap().1.is_empty())
                {
                    return Ok(None); // nonlinear or coefficient not order 0
                }
                potential_input.push((dep.clone(), c));
            }
            if potential_input.is_empty() {
                continue;
            }
            let combined = Expr::sum(
                potential_input
                    .iter()
                    .map(|(dep, c)| c * Expr::atom(Atom::Jet {
                        dep: dep.clone(),
                        index: MultiIndex::empty(),
                    }))
                    .collect(),
            );
            let Some(f) = integrate_homogeneous(&combined)? else {
                return Ok(None);
            };
            // compatibility: the reconstructed potential must reproduce the
            // coefficients exactly
            for (dep, c) in &potential_input {
                let got = f.diff_atom(&Atom::Jet {
                    dep: dep.clone(),
                    index: MultiIndex::empty(),
                });
                if !got.equivalent(c)? {
                    return Ok(None);
                }
            }
            flux[i] = &flux[i] + &f;
            work = (&work - self.total_derivative(&f, i as u8)?).normalized()?;
        }
        if work.is_zero()? {
            Ok(Some(
                flux.into_iter()
                    .map(|f| f.normalized())
                    .collect::<Result<Vec<_>, _>>()?,
            ))
        } else {
            Ok(None)
        }
    }
}

/// Reconstructs `F` with `sum_a u^a dF/du^a = g` by scaling each monomial of
/// `g` by the inverse of its degree in the bare dependent variables.
/// `None` when `g` has a degree-0 part.
fn integrate_homogeneous(g: &Expr) -> Result<Option<Expr>, ExprError> {
    use crate::expr::poly::Poly;
    let nf = g.nf()?;
    if nf
        .den
        .atoms()
        .iter()
        .any(Atom::is_jet)
    {
        return Ok(None);
    }
    let mut scaled = Poly::zero();
    for (m, c) in nf.num.terms() {
        let deg: u32 = m
            .factors()
            .iter()
            .filter(|(a, _)| a.is_jet())
            .map(|(_, e)| *e)
            .sum();
        if deg == 0 {
            return Ok(None);
        }
        scaled.add_term(
            c / num::BigRational::from_integer(deg.into()),
            m.clone(),
        );
    }
    let num = crate::expr::poly_to_expr(&scaled);
    let den = crate::expr::poly_to_expr(&nf.den);
    Ok(Some(num / den))
}

/// A general vector field `xi^i d_i + phi^a d_{u^a} + ...` before
/// canonicalization.
#[derive(Debug, Clone)]
pub struct GeneralField {
    /// coefficients on the independent directions (length p)
    pub frame: Vec<Expr>,
    /// coefficients on the dependent variables (length q)
    pub components: Vec<Expr>,
}

/// An evolutionary field, acting only on dependent variables; prolongation
/// coefficients for `u^a_J` are `D_J phi^a`.
#[derive(Debug, Clone)]
pub struct EvolutionaryField {
    pub characteristics: Vec<Expr>,
}

impl EvolutionaryField {
    pub fn new(characteristics: Vec<Expr>) -> Self {
        EvolutionaryField { characteristics }
    }

    /// Builds from (dependent name, characteristic) pairs; unmentioned
    /// dependents get zero.
    pub fn from_pairs(ctx: &JetContext, pairs: &[(&str, Expr)]) -> Self {
        let mut characteristics = vec![Expr::zero(); ctx.num_dep()];
        for (dep, e) in pairs {
            let idx = ctx
                .dep_index(dep)
                .unwrap_or_else(|| panic!("unknown dependent {dep}"));
            characteristics[idx] = e.clone();
        }
        EvolutionaryField { characteristics }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_txy() -> JetContext {
        JetContext::new(&["t", "x"], &["u"])
    }

    #[test]
    fn total_derivative_of_square() {
        // D_x(u^2) = 2 u u_x
        let ctx = ctx_txy();
        let u = Expr::dep("u");
        let d = ctx.total_derivative(&(&u * &u), 1).unwrap();
        let expect = Expr::int(2) * &u * Expr::jet("u", &[1]);
        assert!(d.equivalent(&expect).unwrap());
    }

    #[test]
    fn total_derivative_chains_through_functions() {
        // D_x f(u) = f'(u) u_x
        let ctx = ctx_txy();
        let u = Expr::dep("u");
        let f = Expr::fn_app("f", &[0], &[u.clone()]).unwrap();
        let fp = Expr::fn_app("f", &[1], &[u.clone()]).unwrap();
        let d = ctx.total_derivative(&f, 1).unwrap();
        assert!(d.equivalent(&(fp * Expr::jet("u", &[1]))).unwrap());
    }

    #[test]
    fn total_derivatives_commute() {
        let ctx = ctx_txy();
        let u = Expr::dep("u");
        let f = Expr::fn_app("f", &[0], &[u.clone()]).unwrap();
        let e = &u * Expr::jet("u", &[0, 1]) + f * Expr::jet("u", &[1]).pow_i(3);
        let dtx = ctx
            .total_derivative(&ctx.total_derivative(&e, 0).unwrap(), 1)
            .unwrap();
        let dxt = ctx
            .total_derivative(&ctx.total_derivative(&e, 1).unwrap(), 0)
            .unwrap();
        assert!(dtx.equivalent(&dxt).unwrap());
    }

    #[test]
    fn field_rule_consistency_for_declared_square() {
        // B with B^2 = r^2/(a^2 r^2 + b^2) and D_r B = b^2 B^3 / r^3:
        // D_r(B^2) computed via the rule must equal D_r of the square.
        let mut ctx = JetContext::new(&["r"], &["u"]);
        let r = Expr::indep("r");
        let a = Expr::param("a");
        let b = Expr::param("b");
        let p = &a * &a * &r * &r + &b * &b;
        let square = &r * &r / &p;
        let bsym = ctx.declare_field("B", Some(&square)).unwrap();
        let bx = Expr::field(bsym);
        let rule = &b * &b * bx.pow_i(3) / r.pow_i(3);
        ctx.set_field_rule("B", 0, rule.clone());

        let via_rule = Expr::int(2) * &bx * &rule; // D_r(B^2) = 2 B B'
        let direct = ctx.total_derivative(&square, 0).unwrap();
        assert!(via_rule.equivalent(&direct).unwrap());
    }

    #[test]
    fn missing_field_rule_is_reported() {
        let mut ctx = JetContext::new(&["t", "r"], &["u"]);
        let g = ctx.declare_field("g", None).unwrap();
        ctx.set_field_rule("g", 1, Expr::zero());
        let e = Expr::field(g);
        assert!(matches!(
            ctx.total_derivative(&e, 0),
            Err(JetError::MissingDerivativeRule { .. })
        ));
        assert!(ctx.total_derivative(&e, 1).is_ok());
    }

    #[test]
    fn prolongation_of_vorticity_transport() {
        // X = f(w) d_w applied to w_t + u1 w_1 + u2 w_2 gives f'(w) times it
        let ctx = JetContext::new(&["t", "x1", "x2"], &["u1", "u2", "w"]);
        let w = Expr::dep("w");
        let f = Expr::fn_app("f", &[0], &[w.clone()]).unwrap();
        let fp = Expr::fn_app("f", &[1], &[w.clone()]).unwrap();
        let x = EvolutionaryField::from_pairs(&ctx, &[("w", f.clone())]);
        let delta3 = Expr::jet("w", &[0])
            + Expr::dep("u1") * Expr::jet("w", &[1])
            + Expr::dep("u2") * Expr::jet("w", &[2]);
        let got = ctx.prolong_apply(&x, &delta3).unwrap();
        assert!(got.equivalent(&(fp * &delta3)).unwrap());

        // X Delta_5 = f(w) for Delta_5 = w - (u2_1 - u1_2)
        let delta5 = &w - (Expr::jet("u2", &[1]) - Expr::jet("u1", &[2]));
        let got5 = ctx.prolong_apply(&x, &delta5).unwrap();
        assert!(got5.equivalent(&f).unwrap());
    }

    #[test]
    fn prolongation_scales_quadratic_combination() {
        // X = u d_u + v d_v doubles any expression quadratic in the jets
        let ctx = JetContext::new(&["t", "x"], &["u", "v"]);
        let x = EvolutionaryField::from_pairs(
            &ctx,
            &[("u", Expr::dep("u")), ("v", Expr::dep("v"))],
        );
        let g = Expr::dep("u") * Expr::jet("u", &[0]) + Expr::dep("v") * Expr::jet("v", &[0])
            + Expr::dep("u") * Expr::jet("v", &[1, 1])
            - Expr::dep("v") * Expr::jet("u", &[1, 1]);
        let got = ctx.prolong_apply(&x, &g).unwrap();
        assert!(got.equivalent(&(Expr::int(2) * &g)).unwrap());
    }

    #[test]
    fn euler_operator_annihilates_divergences() {
        let ctx = ctx_txy();
        // K = (u u_x, u_t u + u_x^2): E_u(D_t K^t + D_x K^x) = 0
        let kt = Expr::dep("u") * Expr::jet("u", &[1]);
        let kx = Expr::jet("u", &[0]) * Expr::dep("u") + Expr::jet("u", &[1]).pow_i(2);
        let div = ctx.divergence(&[kt, kx]).unwrap();
        assert!(ctx.euler_op(&div, "u").unwrap().is_zero().unwrap());
    }

    #[test]
    fn euler_operator_frozen_example() {
        // E_u(u_t u_x) = -2 u_{tx}
        let ctx = ctx_txy();
        let e = Expr::jet("u", &[0]) * Expr::jet("u", &[1]);
        let got = ctx.euler_op(&e, "u").unwrap();
        let expect = Expr::int(-2) * Expr::jet("u", &[0, 1]);
        assert!(got.equivalent(&expect).unwrap());
    }

    #[test]
    fn noether_r_first_order_shape() {
        // p = 1, e = u_x^2/2, characteristic alpha(u): R^x = alpha u_x
        let ctx = JetContext::new(&["x"], &["u"]);
        let alpha = Expr::fn_app("alpha", &[0], &[Expr::dep("u")]).unwrap();
        let x = EvolutionaryField::new(vec![alpha.clone()]);
        let e = Expr::rat(1, 2) * Expr::jet("u", &[0]).pow_i(2);
        let r = ctx.noether_r(&x, &e).unwrap();
        assert!(r[0].equivalent(&(alpha * Expr::jet("u", &[0]))).unwrap());

        // order-0 expression: R = 0
        let r0 = ctx.noether_r(&x, &(Expr::dep("u").pow_i(3))).unwrap();
        assert!(r0[0].is_zero().unwrap());
    }

    #[test]
    fn noether_operator_identity_wave_energy() {
        // L = (u_t^2 - u_x^2)/2, phi = -u_t:
        // R(L) = (-u_t^2, u_t u_x), M - R L = (u_t^2/2 + u_x^2/2, -u_t u_x),
        // and D_i(M - RL)^i = u_t (u_tt - u_xx).
        let ctx = ctx_txy();
        let ut = Expr::jet("u", &[0]);
        let ux = Expr::jet("u", &[1]);
        let lagr = Expr::rat(1, 2) * (ut.pow_i(2) - ux.pow_i(2));
        let phi = ut.neg();
        let x = EvolutionaryField::new(vec![phi.clone()]);
        let r = ctx.noether_r(&x, &lagr).unwrap();
        assert!(r[0].equivalent(&ut.pow_i(2).neg()).unwrap());
        assert!(r[1].equivalent(&(&ut * &ux)).unwrap());

        // identity: X L = phi E(L) + D_i R^i
        let lhs = ctx.prolong_apply(&x, &lagr).unwrap();
        let rhs = &phi * ctx.euler_op(&lagr, "u").unwrap() + ctx.divergence(&r).unwrap();
        assert!(lhs.equivalent(&rhs).unwrap());
    }

    #[test]
    fn noether_identity_on_mixed_derivatives() {
        // p = 2 case with a cross derivative: the naive double-sum form
        // over-counts; the telescoped construction must not.
        let ctx = ctx_txy();
        let e = Expr::jet("u", &[0, 1]) * Expr::dep("u") + Expr::jet("u", &[0, 0, 1]).pow_i(2);
        let phi = Expr::dep("u") * Expr::jet("u", &[1]) + Expr::indep("x");
        let x = EvolutionaryField::new(vec![phi.clone()]);
        let lhs = ctx.prolong_apply(&x, &e).unwrap();
        let r = ctx.noether_r(&x, &e).unwrap();
        let rhs = &phi * ctx.euler_op(&e, "u").unwrap() + ctx.divergence(&r).unwrap();
        assert!(lhs.equivalent(&rhs).unwrap());
    }

    #[test]
    fn canonicalize_field_examples() {
        let ctx = ctx_txy();
        // d_t: xi = (1, 0), phi = 0 -> phi_hat = -u_t
        let time = GeneralField {
            frame: vec![Expr::one(), Expr::zero()],
            components: vec![Expr::zero()],
        };
        let e = ctx.canonicalize_field(&time);
        assert!(e.characteristics[0]
            .equivalent(&Expr::jet("u", &[0]).neg())
            .unwrap());

        // x d_x -> phi_hat = -x u_x
        let scale = GeneralField {
            frame: vec![Expr::zero(), Expr::indep("x")],
            components: vec![Expr::zero()],
        };
        let e2 = ctx.canonicalize_field(&scale);
        assert!(e2.characteristics[0]
            .equivalent(&(Expr::indep("x") * Expr::jet("u", &[1])).neg())
            .unwrap());

        // already evolutionary: unchanged
        let evo = GeneralField {
            frame: vec![Expr::zero(), Expr::zero()],
            components: vec![Expr::dep("u")],
        };
        let e3 = ctx.canonicalize_field(&evo);
        assert!(e3.characteristics[0].equivalent(&Expr::dep("u")).unwrap());
    }

    #[test]
    fn prolongation_commutes_with_total_derivative() {
        let ctx = ctx_txy();
        let phi = Expr::dep("u").pow_i(2) + Expr::jet("u", &[1]);
        let x = EvolutionaryField::new(vec![phi]);
        let e = Expr::dep("u") * Expr::jet("u", &[0]) + Expr::jet("u", &[1]).pow_i(2);
        for dir in 0..2u8 {
            let lhs = ctx
                .prolong_apply(&x, &ctx.total_derivative(&e, dir).unwrap())
                .unwrap();
            let rhs = ctx
                .total_derivative(&ctx.prolong_apply(&x, &e).unwrap(), dir)
                .unwrap();
            assert!(lhs.equivalent(&rhs).unwrap());
        }
    }

    #[test]
    fn flat_divergence_examples() {
        // D_t(div u) + div(-d_t u) = 0
        let ctx = JetContext::new(&["t", "x1", "x2"], &["u1", "u2"]);
        let div_u = Expr::jet("u1", &[1]) + Expr::jet("u2", &[2]);
        let flux = vec![
            div_u,
            Expr::jet("u1", &[0]).neg(),
            Expr::jet("u2", &[0]).neg(),
        ];
        assert!(ctx.divergence(&flux).unwrap().is_zero().unwrap());
    }

    #[test]
    fn divergence_inversion_heuristic() {
        let ctx = ctx_txy();
        // D_x(u^3) is recovered
        let u = Expr::dep("u");
        let e = Expr::int(3) * u.pow_i(2) * Expr::jet("u", &[1]);
        let m = ctx.divergence_invert(&e).unwrap().expect("invertible");
        assert!(ctx.divergence_verify(&e, &m).unwrap());

        // u v_x is not a total divergence
        let ctx2 = JetContext::new(&["x"], &["u", "v"]);
        let bad = Expr::dep("u") * Expr::jet("v", &[0]);
        assert!(ctx2.divergence_invert(&bad).unwrap().is_none());

        // second order: D_x(u_x^2) = 2 u_x u_xx
        let e2 = Expr::int(2) * Expr::jet("u", &[1]) * Expr::jet("u", &[1, 1]);
        let m2 = ctx.divergence_invert(&e2).unwrap();
        if let Some(m2) = m2 {
            assert!(ctx.divergence_verify(&e2, &m2).unwrap());
        }
    }

    #[test]
    fn weighted_divergence_uses_declared_weights() {
        // weights: D_t M^t + (1/r) D_r (r M^r)
        let mut ctx = JetContext::new(&["t", "r"], &["u"]);
        let r = Expr::indep("r");
        ctx.set_weight(1, Expr::one() / &r, r.clone());
        let m = vec![Expr::zero(), Expr::dep("u")];
        let got = ctx.divergence(&m).unwrap();
        let expect = Expr::jet("u", &[1]) + Expr::dep("u") / &r;
        assert!(got.equivalent(&expect).unwrap());
    }
}
