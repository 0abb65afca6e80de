//! Canonical printer: renders a resolved document back to parseable text.

use std::fmt::Write as _;

use super::resolve::{ResolvedCheck, ResolvedDocument};
use crate::expr::atom::MultiIndex;
use crate::expr::display::pretty;
use crate::expr::{Expr, poly_to_expr};
use crate::system::Combination;

struct Printer<'a> {
    doc: &'a ResolvedDocument,
    out: String,
}

impl<'a> Printer<'a> {
    fn names(&self) -> &[std::sync::Arc<str>] {
        self.doc.system.ctx().indep_names()
    }

    fn expr(&self, e: &Expr) -> String {
        let canon = e.normalized().unwrap_or_else(|_| e.clone());
        pretty(&canon, self.names())
    }

    fn combo_block(&self, c: &Combination) -> String {
        let mut s = String::from("{ ");
        for ((v, j), coeff) in &c.entries {
            let name = &self.doc.system.names()[*v];
            if j.is_empty() {
                let _ = write!(s, "{name}: {}; ", self.expr(coeff));
            } else {
                let dirs: Vec<String> = j
                    .dirs()
                    .iter()
                    .map(|d| self.names()[*d as usize].to_string())
                    .collect();
                let _ = write!(s, "{name}[{}]: {}; ", dirs.join(","), self.expr(coeff));
            }
        }
        s.push('}');
        s
    }

    fn flux_vec(&self, f: &[Expr]) -> String {
        let items: Vec<String> = f.iter().map(|e| self.expr(e)).collect();
        format!("[{}]", items.join(", "))
    }

    fn print(mut self) -> String {
        let ctx = self.doc.system.ctx();
        let names: Vec<String> = ctx.indep_names().iter().map(|s| s.to_string()).collect();
        self.out.push_str("context {\n");
        let _ = writeln!(self.out, "  indep {};", names.join(", "));
        let deps: Vec<String> = ctx.dep_names().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(self.out, "  dep {};", deps.join(", "));
        if !ctx.params().is_empty() {
            let ps: Vec<String> = ctx.params().iter().map(|s| s.to_string()).collect();
            let _ = writeln!(self.out, "  param {};", ps.join(", "));
        }
        if let Some(w) = ctx.weights() {
            for (i, (outer, inner)) in w.iter().enumerate() {
                if outer.equivalent(&Expr::one()).unwrap_or(false)
                    && inner.equivalent(&Expr::one()).unwrap_or(false)
                {
                    continue;
                }
                let _ = writeln!(
                    self.out,
                    "  weight {}: outer {}, inner {};",
                    names[i],
                    self.expr(outer),
                    self.expr(inner)
                );
            }
        }
        for (dep, block) in ctx.blocks() {
            let _ = writeln!(self.out, "  rank {dep} = {block};");
        }
        self.out.push_str("}\n");

        // functions: collected from every expression in the document
        let mut fns: std::collections::BTreeMap<String, usize> = Default::default();
        let mut scan = |e: &Expr| {
            for a in e.atoms() {
                if let crate::expr::Atom::Fn(app) = a {
                    fns.insert(app.name.to_string(), app.args.len());
                }
            }
        };
        for e in self.doc.system.equations() {
            scan(e);
        }
        for f in self.doc.vectorfields.values() {
            f.characteristics.iter().for_each(&mut scan);
        }
        for c in self
            .doc
            .multipliers
            .values()
            .chain(self.doc.certificates.values())
        {
            c.entries.values().for_each(&mut scan);
        }
        for f in self.doc.fluxes.values() {
            f.iter().for_each(&mut scan);
        }
        for (name, arity) in &fns {
            let _ = writeln!(self.out, "function {name}({arity});");
        }

        for fname in ctx.field_names() {
            let sym = ctx.field_sym(&fname).unwrap();
            let mut varying = Vec::new();
            let mut rules = Vec::new();
            for d in 0..ctx.num_indep() as u8 {
                match ctx.field_rule(&fname, d) {
                    Some(rule) if !rule.is_zero().unwrap_or(false) => {
                        varying.push(names[d as usize].clone());
                        rules.push((names[d as usize].clone(), self.expr(rule)));
                    }
                    None => {
                        varying.push(names[d as usize].clone());
                    }
                    _ => {}
                }
            }
            let _ = writeln!(self.out, "field {fname}({}) {{", varying.join(", "));
            if let Some((num, den)) = &sym.square {
                let sq = poly_to_expr(num) / poly_to_expr(den);
                let _ = writeln!(self.out, "  square = {};", self.expr(&sq));
            }
            for (d, rule) in rules {
                let _ = writeln!(self.out, "  d/d{d} = {rule};");
            }
            self.out.push_str("}\n");
        }

        self.out.push_str("system {\n");
        for (v, eq) in self.doc.system.equations().iter().enumerate() {
            let name = &self.doc.system.names()[v];
            let solve = match self.doc.system.solved_leading(v) {
                Some(atom) => {
                    let mut s = String::from(" solve ");
                    crate::expr::display::write_atom(&mut s, atom, Some(self.names()));
                    s
                }
                None => String::new(),
            };
            let _ = writeln!(self.out, "  {name}: {} = 0{solve};", self.expr(eq));
        }
        for s in self.doc.system.syzygies() {
            let _ = writeln!(self.out, "  syzygy {} {};", s.name, self.combo_block(&s.body));
        }
        self.out.push_str("}\n");

        for (name, field) in &self.doc.vectorfields {
            let _ = writeln!(self.out, "vectorfield {name} {{");
            for (a, phi) in field.characteristics.iter().enumerate() {
                if phi.is_zero().unwrap_or(false) {
                    continue;
                }
                let _ = writeln!(
                    self.out,
                    "  {} -> {};",
                    self.doc.system.ctx().dep_names()[a],
                    self.expr(phi)
                );
            }
            self.out.push_str("}\n");
        }
        for (name, c) in &self.doc.multipliers {
            let _ = writeln!(self.out, "multiplier {name} {};", self.combo_block(c));
        }
        for (name, c) in &self.doc.certificates {
            let _ = writeln!(self.out, "certificate {name} {};", self.combo_block(c));
        }
        for (name, f) in &self.doc.fluxes {
            let _ = writeln!(self.out, "flux {name} = {};", self.flux_vec(f));
        }

        for (_, check) in &self.doc.checks {
            let line = match check {
                ResolvedCheck::Zero { expr } => format!("zero {}", self.expr(expr)),
                ResolvedCheck::ZeroOnSolutions { expr, cert } => match cert {
                    Some(c) => format!("onsol {} cert {}", self.expr(expr), self.combo_block(c)),
                    None => format!("onsol {}", self.expr(expr)),
                },
                ResolvedCheck::NonzeroOnSolutions { expr } => {
                    format!("nonzero {}", self.expr(expr))
                }
                ResolvedCheck::Law { flux, cert } => {
                    format!("law {} cert {}", self.flux_vec(flux), self.combo_block(cert))
                }
                ResolvedCheck::Divergence { combo, flux } => {
                    format!("divergence {} = {}", self.combo_block(combo), self.flux_vec(flux))
                }
                ResolvedCheck::NotDivergence { expr } => {
                    format!("nodivergence {}", self.expr(expr))
                }
                ResolvedCheck::InvertDivergence { expr, flux } => {
                    format!("invert {} = {}", self.expr(expr), self.flux_vec(flux))
                }
                ResolvedCheck::Quasi { combo } => format!("quasi {}", self.combo_block(combo)),
                ResolvedCheck::Subsym { field, combo, cert } => match cert {
                    Some(cert) => format!(
                        "subsym {field} on {} cert {}",
                        self.combo_block(combo),
                        self.combo_block(cert)
                    ),
                    None => format!("subsym {field} on {}", self.combo_block(combo)),
                },
                ResolvedCheck::NotSubsym { field, combo } => {
                    format!("notsubsym {field} on {}", self.combo_block(combo))
                }
                ResolvedCheck::Apply {
                    field,
                    expr,
                    expected,
                } => format!(
                    "apply {field} {} = {}",
                    self.expr(expr),
                    self.expr(expected)
                ),
                ResolvedCheck::Claw {
                    field,
                    combo,
                    flux,
                    cert,
                } => {
                    let mut s = format!(
                        "claw {field} on {} = {}",
                        self.combo_block(combo),
                        self.flux_vec(flux)
                    );
                    if let Some(c) = cert {
                        let _ = write!(s, " cert {}", self.combo_block(c));
                    }
                    s
                }
                ResolvedCheck::Deform {
                    field,
                    base_flux,
                    combo,
                    expected,
                    cert,
                } => {
                    let mut s = format!(
                        "deform {field} flux {} on {} = {}",
                        self.flux_vec(base_flux),
                        self.combo_block(combo),
                        self.flux_vec(expected)
                    );
                    if let Some(c) = cert {
                        let _ = write!(s, " cert {}", self.combo_block(c));
                    }
                    s
                }
                ResolvedCheck::Classify {
                    cert,
                    apps,
                    nontrivial,
                    chars,
                } => {
                    let mut s = format!("classify {}", self.combo_block(cert));
                    if !apps.is_empty() {
                        s.push_str(" using ");
                        let parts: Vec<String> = apps
                            .iter()
                            .map(|a| {
                                format!(
                                    "{}: {}",
                                    self.doc.system.syzygies()[a.syzygy].name,
                                    self.expr(&a.multiplier)
                                )
                            })
                            .collect();
                        s.push_str(&parts.join(", "));
                    }
                    let _ = write!(
                        s,
                        " = {}",
                        if *nontrivial { "nontrivial" } else { "trivial" }
                    );
                    if let Some(chars) = chars {
                        let _ = write!(s, " chars {}", self.flux_vec(chars));
                    }
                    s
                }
                ResolvedCheck::Reduce { expr, expected } => {
                    format!("reduce {} -> {}", self.expr(expr), self.expr(expected))
                }
            };
            let _ = writeln!(self.out, "check {line};");
        }
        self.out
    }
}

/// Renders a resolved document as canonical `.pde` text; parsing the output
/// reproduces the same resolved content.
pub fn print_document(doc: &ResolvedDocument) -> String {
    Printer {
        doc,
        out: String::new(),
    }
    .print()
}

// used by the printer for multi-index rendering in solved forms
#[allow(unused)]
fn _unused(_: &MultiIndex) {}
