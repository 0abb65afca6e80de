//! Text and JSON rendering of expressions.
//!
//! Jet indices are direction numbers internally; pretty output needs the
//! independent-variable names, so the context-aware [`pretty`] / [`to_json`]
//! take them explicitly. The plain `Display` impl falls back to numeric
//! directions and is meant for diagnostics.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use num::{One, Signed};

use super::{Atom, Expr, ExprNode, Q};

const PREC_SUM: u8 = 0;
const PREC_PROD: u8 = 1;
const PREC_POW: u8 = 2;

fn dir_name(names: Option<&[Arc<str>]>, d: u8) -> String {
    match names.and_then(|ns| ns.get(d as usize)) {
        Some(n) => n.to_string(),
        None => format!("#{d}"),
    }
}

fn write_rational(out: &mut String, q: &Q) {
    if q.denom().is_one() {
        let _ = write!(out, "{}", q.numer());
    } else {
        let _ = write!(out, "{}/{}", q.numer(), q.denom());
    }
}

pub fn write_atom(out: &mut String, a: &Atom, names: Option<&[Arc<str>]>) {
    match a {
        Atom::Indep(n) | Atom::Param(n) => out.push_str(n),
        Atom::Field(s) => out.push_str(&s.name),
        Atom::Jet { dep, index } => {
            out.push_str(dep);
            match index.dirs() {
                [] => {}
                [d] => {
                    out.push('_');
                    out.push_str(&dir_name(names, *d));
                }
                ds => {
                    out.push_str("_{");
                    for (i, d) in ds.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push_str(&dir_name(names, *d));
                    }
                    out.push('}');
                }
            }
        }
        Atom::Fn(app) => {
            let total: u32 = app.orders.iter().sum();
            if app.orders.len() == 1 && total <= 3 {
                out.push_str(&app.name);
                for _ in 0..total {
                    out.push('\'');
                }
            } else if total == 0 {
                out.push_str(&app.name);
            } else {
                out.push_str("diff(");
                out.push_str(&app.name);
                for k in &app.orders {
                    let _ = write!(out, ",{k}");
                }
                out.push(')');
            }
            out.push('(');
            for (i, arg) in app.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg, names, PREC_SUM);
            }
            out.push(')');
        }
    }
}

fn write_expr(out: &mut String, e: &Expr, names: Option<&[Arc<str>]>, prec: u8) {
    match e.node() {
        ExprNode::Const(q) => {
            let negative = q.is_negative();
            let fraction = !q.denom().is_one();
            let need = (negative && prec > PREC_SUM) || (fraction && prec > PREC_PROD);
            if need {
                out.push('(');
            }
            write_rational(out, q);
            if need {
                out.push(')');
            }
        }
        ExprNode::Atom(a) => write_atom(out, a, names),
        ExprNode::Add(ts) => {
            let need = prec > PREC_SUM;
            if need {
                out.push('(');
            }
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(out, t, names, PREC_SUM + 1);
                    continue;
                }
                // absorb a leading negative constant into " - "
                if let Some(neg) = strip_negation(t) {
                    out.push_str(" - ");
                    write_expr(out, &neg, names, PREC_SUM + 1);
                } else {
                    out.push_str(" + ");
                    write_expr(out, t, names, PREC_SUM + 1);
                }
            }
            if need {
                out.push(')');
            }
        }
        ExprNode::Mul(ts) => {
            let need = prec > PREC_PROD;
            if need {
                out.push('(');
            }
            let mut first = true;
            let mut rest = ts.as_slice();
            if let ExprNode::Const(c) = ts[0].node() {
                if *c == -Q::one() && ts.len() > 1 {
                    out.push('-');
                    rest = &ts[1..];
                }
            }
            for t in rest {
                if !first {
                    out.push('*');
                }
                write_expr(out, t, names, PREC_PROD + 1);
                first = false;
            }
            if need {
                out.push(')');
            }
        }
        ExprNode::Pow(b, q) => {
            let need = prec > PREC_POW;
            if need {
                out.push('(');
            }
            write_expr(out, b, names, PREC_POW + 1);
            out.push('^');
            if q.denom().is_one() && !q.is_negative() {
                let _ = write!(out, "{}", q.numer());
            } else {
                out.push('(');
                write_rational(out, q);
                out.push(')');
            }
            if need {
                out.push(')');
            }
        }
    }
}

fn strip_negation(e: &Expr) -> Option<Expr> {
    if let ExprNode::Mul(ts) = e.node() {
        if let ExprNode::Const(c) = ts[0].node() {
            if c.is_negative() {
                let mut fs = vec![Expr::constant(-c.clone())];
                fs.extend(ts[1..].iter().cloned());
                return Some(Expr::product(fs));
            }
        }
    }
    if let ExprNode::Const(c) = e.node() {
        if c.is_negative() {
            return Some(Expr::constant(-c.clone()));
        }
    }
    None
}

/// Renders with named directions (parseable by the document parser).
pub fn pretty(e: &Expr, names: &[Arc<str>]) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, Some(names), PREC_SUM);
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, None, PREC_SUM);
        f.write_str(&s)
    }
}

/// JSON tree form used in reports.
pub fn to_json(e: &Expr, names: &[Arc<str>]) -> serde_json::Value {
    use serde_json::json;
    match e.node() {
        ExprNode::Const(q) => {
            if q.denom().is_one() {
                json!({ "int": q.numer().to_string() })
            } else {
                json!({ "num": q.numer().to_string(), "den": q.denom().to_string() })
            }
        }
        ExprNode::Atom(a) => {
            let mut s = String::new();
            write_atom(&mut s, a, Some(names));
            json!({ "atom": s })
        }
        ExprNode::Add(ts) => json!({
            "sum": ts.iter().map(|t| to_json(t, names)).collect::<Vec<_>>()
        }),
        ExprNode::Mul(ts) => json!({
            "product": ts.iter().map(|t| to_json(t, names)).collect::<Vec<_>>()
        }),
        ExprNode::Pow(b, q) => json!({
            "base": to_json(b, names),
            "exponent": q.to_string()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_jet_indices_with_names() {
        let names: Vec<Arc<str>> = vec!["t".into(), "x1".into()];
        let e = Expr::jet("u", &[0, 1]) + Expr::int(2) * Expr::jet("u", &[1]);
        let s = pretty(&e.normalized().unwrap(), &names);
        assert_eq!(s, "u_{t,x1} + 2*u_x1");
    }

    #[test]
    fn renders_function_primes() {
        let names: Vec<Arc<str>> = vec!["t".into()];
        let w = Expr::dep("w");
        let fp = Expr::fn_app("f", &[1], &[w]).unwrap();
        assert_eq!(pretty(&fp, &names), "f'(w)");
    }
}
