//! Name resolution: lowering a parsed document onto the engine types.

use std::collections::BTreeMap;

use super::ast::*;
use super::parse::ParseError;
use crate::expr::atom::{Atom, MultiIndex};
use crate::expr::{Expr, ExprError};
use crate::jet::{EvolutionaryField, GeneralField, JetContext, JetError};
use crate::system::{Combination, DifferentialSystem, SyzygyApplication, SystemError};


#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("semantic error at {span}: {message}")]
    Semantic { span: Span, message: String },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn sem<T>(span: Span, message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Semantic {
        span,
        message: message.into(),
    })
}

#[derive(Debug)]
pub enum ResolvedCheck {
    Zero {
        expr: Expr,
    },
    ZeroOnSolutions {
        expr: Expr,
        cert: Option<Combination>,
    },
    NonzeroOnSolutions {
        expr: Expr,
    },
    Law {
        flux: Vec<Expr>,
        cert: Combination,
    },
    Divergence {
        combo: Combination,
        flux: Vec<Expr>,
    },
    NotDivergence {
        expr: Expr,
    },
    InvertDivergence {
        expr: Expr,
        flux: Vec<Expr>,
    },
    Quasi {
        combo: Combination,
    },
    Subsym {
        field: String,
        combo: Combination,
        cert: Option<Combination>,
    },
    NotSubsym {
        field: String,
        combo: Combination,
    },
    Apply {
        field: String,
        expr: Expr,
        expected: Expr,
    },
    Claw {
        field: String,
        combo: Combination,
        flux: Vec<Expr>,
        cert: Option<Combination>,
    },
    Deform {
        field: String,
        base_flux: Vec<Expr>,
        combo: Combination,
        expected: Vec<Expr>,
        cert: Option<Combination>,
    },
    Classify {
        cert: Combination,
        apps: Vec<SyzygyApplication>,
        nontrivial: bool,
        chars: Option<Vec<Expr>>,
    },
    Reduce {
        expr: Expr,
        expected: Expr,
    },
}

/// A fully resolved document, ready to run.
#[derive(Debug)]
pub struct ResolvedDocument {
    pub system: DifferentialSystem,
    pub vectorfields: BTreeMap<String, EvolutionaryField>,
    pub multipliers: BTreeMap<String, Combination>,
    pub certificates: BTreeMap<String, Combination>,
    pub fluxes: BTreeMap<String, Vec<Expr>>,
    pub checks: Vec<(String, ResolvedCheck)>,
}

struct Resolver {
    ctx: JetContext,
    lets: BTreeMap<String, Expr>,
    functions: BTreeMap<String, usize>,
    equation_index: BTreeMap<String, usize>,
}

impl Resolver {
    fn direction(&self, name: &str, span: Span) -> Result<u8, DslError> {
        self.ctx
            .direction(name)
            .ok_or(())
            .or_else(|_| sem(span, format!("unknown independent variable `{name}`")))
    }

    fn resolve(&self, ast: &ExprAst) -> Result<Expr, DslError> {
        Ok(match ast {
            ExprAst::Int(n, _) => Expr::int(*n),
            ExprAst::Name { base, index, span } => {
                if !index.is_empty() {
                    if self.ctx.dep_index(base).is_none() {
                        return sem(
                            *span,
                            format!("`{base}` is not a dependent variable, it cannot carry a jet index"),
                        );
                    }
                    let mut dirs = Vec::new();
                    for d in index {
                        dirs.push(self.direction(d, *span)?);
                    }
                    return Ok(Expr::atom(Atom::Jet {
                        dep: base.as_str().into(),
                        index: MultiIndex::new(dirs),
                    }));
                }
                if let Some(e) = self.lets.get(base) {
                    e.clone()
                } else if self.ctx.direction(base).is_some() {
                    Expr::indep(base)
                } else if self.ctx.dep_index(base).is_some() {
                    Expr::dep(base)
                } else if self.ctx.params().iter().any(|p| &**p == base) {
                    Expr::param(base)
                } else if let Some(sym) = self.ctx.field_sym(base) {
                    Expr::field(sym)
                } else {
                    return sem(*span, format!("unknown name `{base}`"));
                }
            }
            ExprAst::Call {
                name,
                orders,
                args,
                span,
            } => {
                let Some(arity) = self.functions.get(name) else {
                    return sem(*span, format!("unknown function `{name}`"));
                };
                if args.len() != *arity || orders.len() != *arity {
                    return sem(
                        *span,
                        format!(
                            "function `{name}` has arity {arity}, called with {} argument(s)",
                            args.len()
                        ),
                    );
                }
                let args = args
                    .iter()
                    .map(|a| self.resolve(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Expr::fn_app(name, orders, &args)?
            }
            ExprAst::TotalD { dirs, arg, span } => {
                let mut e = self.resolve(arg)?;
                for d in dirs {
                    let dir = self.direction(d, *span)?;
                    e = self.ctx.total_derivative(&e, dir)?;
                }
                e
            }
            ExprAst::Add(ts) => Expr::sum(
                ts.iter()
                    .map(|t| self.resolve(t))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            ExprAst::Sub(a, b) => self.resolve(a)? - self.resolve(b)?,
            ExprAst::Mul(ts) => Expr::product(
                ts.iter()
                    .map(|t| self.resolve(t))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            ExprAst::Div(a, b) => self.resolve(a)? / self.resolve(b)?,
            ExprAst::Neg(a) => self.resolve(a)?.neg(),
            ExprAst::Pow(b, n, d) => {
                let base = self.resolve(b)?;
                if *d == 1 {
                    base.pow_i(*n)
                } else {
                    base.pow_q(num::BigRational::new((*n).into(), (*d).into()))
                }
            }
        })
    }

    fn resolve_atom(&self, ast: &ExprAst) -> Result<Atom, DslError> {
        let e = self.resolve(ast)?;
        let atoms = e.atoms();
        if atoms.len() == 1 && e.equivalent(&Expr::atom(atoms.iter().next().unwrap().clone()))? {
            Ok(atoms.into_iter().next().unwrap())
        } else {
            sem(ast.span(), "expected a single atom here")
        }
    }

    fn resolve_combo_entries(&self, entries: &[ComboEntry]) -> Result<Combination, DslError> {
        let mut combo = Combination::new();
        for entry in entries {
            let Some(&v) = self.equation_index.get(&entry.equation) else {
                return sem(entry.span, format!("unknown equation `{}`", entry.equation));
            };
            let mut dirs = Vec::new();
            for d in &entry.dirs {
                dirs.push(self.direction(d, entry.span)?);
            }
            combo.add(v, MultiIndex::new(dirs), self.resolve(&entry.coefficient)?);
        }
        Ok(combo)
    }

    fn resolve_combo(
        &self,
        ast: &ComboAst,
        named: &BTreeMap<String, Combination>,
        named2: &BTreeMap<String, Combination>,
        n_equations: usize,
    ) -> Result<Combination, DslError> {
        match ast {
            ComboAst::Vector(v, span) => {
                if v.len() != n_equations {
                    return sem(
                        *span,
                        format!(
                            "combination vector has {} entries, the system has {} equations",
                            v.len(),
                            n_equations
                        ),
                    );
                }
                let coeffs = v
                    .iter()
                    .map(|e| self.resolve(e))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Combination::from_functions(&coeffs))
            }
            ComboAst::Entries(entries, _) => self.resolve_combo_entries(entries),
            ComboAst::Named(name, span) => named
                .get(name)
                .or_else(|| named2.get(name))
                .cloned()
                .ok_or(())
                .or_else(|_| sem(*span, format!("unknown multiplier or certificate `{name}`"))),
        }
    }

    fn resolve_flux(
        &self,
        ast: &FluxAst,
        named: &BTreeMap<String, Vec<Expr>>,
    ) -> Result<Vec<Expr>, DslError> {
        match ast {
            FluxAst::Vector(v, span) => {
                if v.len() != self.ctx.num_indep() {
                    return sem(
                        *span,
                        format!(
                            "flux has {} components, the context has {} independent variables",
                            v.len(),
                            self.ctx.num_indep()
                        ),
                    );
                }
                v.iter().map(|e| self.resolve(e)).collect()
            }
            FluxAst::Named(name, span) => named
                .get(name)
                .cloned()
                .ok_or(())
                .or_else(|_| sem(*span, format!("unknown flux `{name}`"))),
        }
    }
}

/// Resolves a parsed document into engine objects, validating every name.
pub fn resolve_document(doc: &Document) -> Result<ResolvedDocument, DslError> {
    let Some(ctx_decl) = &doc.context else {
        return sem(
            Span { line: 1, col: 1 },
            "a document must declare a `context { ... }` block",
        );
    };
    let indep: Vec<&str> = ctx_decl.indep.iter().map(|(s, _)| s.as_str()).collect();
    let dep: Vec<&str> = ctx_decl.dep.iter().map(|(s, _)| s.as_str()).collect();
    {
        let mut seen = std::collections::BTreeSet::new();
        for (name, span) in ctx_decl
            .indep
            .iter()
            .chain(&ctx_decl.dep)
            .chain(&ctx_decl.params)
        {
            if name.contains('_') {
                return sem(*span, format!("name `{name}` may not contain `_`"));
            }
            if !seen.insert(name.clone()) {
                return sem(*span, format!("name `{name}` declared twice"));
            }
        }
    }
    let mut ctx = JetContext::new(&indep, &dep);
    for (p, _) in &ctx_decl.params {
        ctx.declare_param(p);
    }
    for (dep_name, block, span) in &ctx_decl.ranks {
        if ctx.dep_index(dep_name).is_none() {
            return sem(*span, format!("unknown dependent variable `{dep_name}`"));
        }
        ctx.set_block(dep_name, *block);
    }

    let mut resolver = Resolver {
        ctx,
        lets: BTreeMap::new(),
        functions: BTreeMap::new(),
        equation_index: BTreeMap::new(),
    };
    for (name, arity, _) in &doc.functions {
        resolver.functions.insert(name.clone(), *arity);
    }

    // fields, in declaration order (rules may reference earlier fields and
    // the field itself)
    for fd in &doc.fields {
        let square = fd.square.as_ref().map(|s| resolver.resolve(s)).transpose()?;
        let varying: Vec<u8> = fd
            .varying
            .iter()
            .map(|(d, s)| resolver.direction(d, *s))
            .collect::<Result<Vec<_>, _>>()?;
        resolver
            .ctx
            .declare_field_on(&fd.name, square.as_ref(), &varying)?;
        for (dir_name, rule, span) in &fd.rules {
            let dir = resolver.direction(dir_name, *span)?;
            if !varying.contains(&dir) {
                return sem(
                    *span,
                    format!("field `{}` does not vary in `{dir_name}`", fd.name),
                );
            }
            let rule = resolver.resolve(rule)?;
            resolver.ctx.set_field_rule(&fd.name, dir, rule);
        }
    }

    // weights (may reference fields)
    for (dir_name, outer, inner, span) in &ctx_decl.weights {
        let dir = resolver.direction(dir_name, *span)?;
        let outer = resolver.resolve(outer)?;
        let inner = resolver.resolve(inner)?;
        resolver.ctx.set_weight(dir, outer, inner);
    }

    // lets, in order
    for (name, e, span) in &doc.lets {
        let resolved = resolver.resolve(e)?;
        if resolver.lets.insert(name.clone(), resolved).is_some() {
            return sem(*span, format!("`{name}` bound twice"));
        }
    }

    // equations
    let mut equations = Vec::new();
    let mut names = Vec::new();
    for (i, eq) in doc.equations.iter().enumerate() {
        if resolver
            .equation_index
            .insert(eq.name.clone(), i)
            .is_some()
        {
            return sem(eq.span, format!("equation `{}` declared twice", eq.name));
        }
        names.push(eq.name.clone());
        equations.push(resolver.resolve(&eq.lhs)?);
    }

    // named combinations and fluxes
    let mut multipliers = BTreeMap::new();
    for (name, c, _) in &doc.multipliers {
        let combo = resolver.resolve_combo(c, &multipliers, &BTreeMap::new(), equations.len())?;
        multipliers.insert(name.clone(), combo);
    }
    let mut certificates = BTreeMap::new();
    for (name, c, _) in &doc.certificates {
        let combo = resolver.resolve_combo(c, &certificates, &multipliers, equations.len())?;
        certificates.insert(name.clone(), combo);
    }
    let mut fluxes = BTreeMap::new();
    for (name, v, span) in &doc.fluxes {
        if v.len() != resolver.ctx.num_indep() {
            return sem(*span, "flux component count must match the independent variables");
        }
        let resolved = v
            .iter()
            .map(|e| resolver.resolve(e))
            .collect::<Result<Vec<_>, _>>()?;
        fluxes.insert(name.clone(), resolved);
    }

    // vector fields
    let mut vectorfields = BTreeMap::new();
    for vf in &doc.vectorfields {
        let mut components = vec![Expr::zero(); resolver.ctx.num_dep()];
        for (dep_name, e, span) in &vf.rows {
            let Some(idx) = resolver.ctx.dep_index(dep_name) else {
                return sem(*span, format!("unknown dependent variable `{dep_name}`"));
            };
            components[idx] = resolver.resolve(e)?;
        }
        let field = match &vf.frame {
            None => EvolutionaryField::new(components),
            Some(frame) => {
                if frame.len() != resolver.ctx.num_indep() {
                    return sem(vf.span, "frame component count must match the independent variables");
                }
                let frame = frame
                    .iter()
                    .map(|e| resolver.resolve(e))
                    .collect::<Result<Vec<_>, _>>()?;
                resolver.ctx.canonicalize_field(&GeneralField {
                    frame,
                    components,
                })
            }
        };
        vectorfields.insert(vf.name.clone(), field);
    }

    // syzygy bodies and solved forms are resolved before the context moves
    // into the system
    let mut syzygy_bodies = Vec::new();
    for s in &doc.syzygies {
        syzygy_bodies.push((s.name.clone(), resolver.resolve_combo_entries(&s.entries)?));
    }
    let syzygy_index: BTreeMap<String, usize> = syzygy_bodies
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), i))
        .collect();
    let mut solved = Vec::new();
    for (i, eq) in doc.equations.iter().enumerate() {
        if let Some(s) = &eq.solve {
            let atom = resolver.resolve_atom(s)?;
            if !atom.is_jet() {
                return sem(s.span(), "solved forms must lead with a jet coordinate");
            }
            solved.push((i, atom));
        }
    }

    // checks
    let mut checks = Vec::new();
    for check in &doc.checks {
        let r = resolve_check(
            &resolver,
            &check.kind,
            check.span,
            &multipliers,
            &certificates,
            &fluxes,
            &vectorfields,
            &syzygy_index,
            equations.len(),
        )?;
        checks.push((check.label.clone(), r));
    }

    let mut system = DifferentialSystem::new(resolver.ctx, equations).with_names(names);
    for (i, atom) in solved {
        system.solve_for(i, atom)?;
    }
    for (name, body) in syzygy_bodies {
        system.add_syzygy(&name, body)?;
    }

    Ok(ResolvedDocument {
        system,
        vectorfields,
        multipliers,
        certificates,
        fluxes,
        checks,
    })
}

#[allow(clippy::too_many_arguments)]
fn resolve_check(
    resolver: &Resolver,
    ast: &CheckAst,
    span: Span,
    multipliers: &BTreeMap<String, Combination>,
    certificates: &BTreeMap<String, Combination>,
    fluxes: &BTreeMap<String, Vec<Expr>>,
    vectorfields: &BTreeMap<String, EvolutionaryField>,
    syzygy_index: &BTreeMap<String, usize>,
    n: usize,
) -> Result<ResolvedCheck, DslError> {
    let combo = |c: &ComboAst| resolver.resolve_combo(c, multipliers, certificates, n);
    let cert = |c: &ComboAst| resolver.resolve_combo(c, certificates, multipliers, n);
    let flux = |f: &FluxAst| resolver.resolve_flux(f, fluxes);
    let field = |name: &String| -> Result<String, DslError> {
        if vectorfields.contains_key(name) {
            Ok(name.clone())
        } else {
            sem(span, format!("unknown vector field `{name}`"))
        }
    };
    Ok(match ast {
        CheckAst::Zero { expr } => ResolvedCheck::Zero {
            expr: resolver.resolve(expr)?,
        },
        CheckAst::ZeroOnSolutions { expr, cert: c } => ResolvedCheck::ZeroOnSolutions {
            expr: resolver.resolve(expr)?,
            cert: c.as_ref().map(cert).transpose()?,
        },
        CheckAst::NonzeroOnSolutions { expr } => ResolvedCheck::NonzeroOnSolutions {
            expr: resolver.resolve(expr)?,
        },
        CheckAst::Law { flux: f, cert: c } => ResolvedCheck::Law {
            flux: flux(f)?,
            cert: cert(c)?,
        },
        CheckAst::Divergence { combo: c, flux: f } => ResolvedCheck::Divergence {
            combo: combo(c)?,
            flux: flux(f)?,
        },
        CheckAst::NotDivergence { expr } => ResolvedCheck::NotDivergence {
            expr: resolver.resolve(expr)?,
        },
        CheckAst::InvertDivergence { expr, flux: f } => ResolvedCheck::InvertDivergence {
            expr: resolver.resolve(expr)?,
            flux: flux(f)?,
        },
        CheckAst::Quasi { combo: c } => ResolvedCheck::Quasi { combo: combo(c)? },
        CheckAst::Subsym {
            field: f,
            combo: c,
            cert: l,
        } => ResolvedCheck::Subsym {
            field: field(f)?,
            combo: combo(c)?,
            cert: l.as_ref().map(cert).transpose()?,
        },
        CheckAst::NotSubsym { field: f, combo: c } => ResolvedCheck::NotSubsym {
            field: field(f)?,
            combo: combo(c)?,
        },
        CheckAst::Apply {
            field: f,
            expr,
            expected,
        } => ResolvedCheck::Apply {
            field: field(f)?,
            expr: resolver.resolve(expr)?,
            expected: resolver.resolve(expected)?,
        },
        CheckAst::Claw {
            field: f,
            combo: c,
            flux: m,
            cert: l,
        } => ResolvedCheck::Claw {
            field: field(f)?,
            combo: combo(c)?,
            flux: flux(m)?,
            cert: l.as_ref().map(cert).transpose()?,
        },
        CheckAst::Deform {
            field: f,
            base_flux,
            combo: c,
            expected,
            cert: l,
        } => ResolvedCheck::Deform {
            field: field(f)?,
            base_flux: flux(base_flux)?,
            combo: combo(c)?,
            expected: flux(expected)?,
            cert: l.as_ref().map(cert).transpose()?,
        },
        CheckAst::Classify {
            cert: c,
            syzygy_apps,
            nontrivial,
            chars,
        } => {
            let mut apps = Vec::new();
            for (name, mult) in syzygy_apps {
                let Some(&idx) = syzygy_index.get(name) else {
                    return sem(span, format!("unknown syzygy `{name}`"));
                };
                apps.push(SyzygyApplication {
                    syzygy: idx,
                    multiplier: resolver.resolve(mult)?,
                });
            }
            ResolvedCheck::Classify {
                cert: cert(c)?,
                apps,
                nontrivial: *nontrivial,
                chars: chars
                    .as_ref()
                    .map(|f|

 {
                        // expected characteristics: one per equation
                        match f {
                            FluxAst::Vector(v, vspan) => {
                                if v.len() != n {
                                    return sem(
                                        *vspan,
                                        "expected one characteristic per equation",
                                    );
                                }
                                v.iter().map(|e| resolver.resolve(e)).collect()
                            }
                            FluxAst::Named(name, nspan) => fluxes
                                .get(name)
                                .cloned()
                                .ok_or(())
                                .or_else(|_| sem(*nspan, format!("unknown flux `{name}`"))),
                        }
                    })
                    .transpose()?,
            }
        }
        CheckAst::Reduce { expr, expected } => ResolvedCheck::Reduce {
            expr: resolver.resolve(expr)?,
            expected: resolver.resolve(expected)?,
        },
    })
}
