//! Text format for contexts, systems, fields, multipliers, certificates and
//! check directives (`.pde` files). See the repository README for the
//! grammar.

pub mod ast;
pub mod parse;
mod print;
pub mod resolve;

pub use parse::ParseError;
pub use print::print_document;
pub use resolve::{resolve_document, DslError, ResolvedCheck, ResolvedDocument};

use ast::Document;

/// Parses `.pde` text into a surface document.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    parse::Parser::new(text)?.document()
}

/// Parses and resolves in one step.
pub fn load_document(text: &str) -> Result<ResolvedDocument, DslError> {
    Ok(resolve_document(&parse_document(text)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    const SMALL: &str = r#"
# two-dimensional vorticity transport, abridged
context {
  indep t, x1, x2;
  dep u1, u2, w, p;
  rank w = 1;
}
function f(1);

system {
  D3: w_t + u1*w_x1 + u2*w_x2 = 0 solve w_t;
  D4: u1_x1 + u2_x2 = 0 solve u2_x2;
}

vectorfield X { w -> f(w); }
multiplier C = [1, w];
certificate L { D3: f'(w); D4: f(w); }
flux M = [w, u1*w, u2*w];

check divergence C = M;
check subsym X on C cert L;
"#;

    #[test]
    fn parses_and_resolves_a_small_document() {
        let doc = load_document(SMALL).expect("document loads");
        assert_eq!(doc.system.len(), 2);
        assert_eq!(doc.system.names(), &["D3", "D4"]);
        assert_eq!(doc.checks.len(), 2);
        let m = &doc.fluxes["M"];
        assert!(m[1]
            .equivalent(&(Expr::dep("u1") * Expr::dep("w")))
            .unwrap());
    }

    #[test]
    fn jet_suffix_is_order_insensitive() {
        let doc = load_document(
            "context { indep t, x; dep u; }\ncheck zero u_{t,x} - u_{x,t};",
        )
        .unwrap();
        match &doc.checks[0].1 {
            ResolvedCheck::Zero { expr } => assert!(expr.is_zero().unwrap()),
            _ => panic!(),
        }
    }

    #[test]
    fn located_errors() {
        // undeclared dependent in a jet coordinate
        let err = load_document("context { indep t; dep u; }\ncheck zero q_t;").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2:"), "location missing: {msg}");

        // unknown direction
        let err2 = load_document("context { indep t; dep u; }\ncheck zero u_y;").unwrap_err();
        assert!(err2.to_string().contains("unknown independent"));

        // parse error carries position and expectation
        let err3 = parse_document("context { indep t dep u; }").unwrap_err();
        assert!(err3.to_string().contains("expected"));
    }

    #[test]
    fn arity_mismatch_is_semantic_error() {
        let err = load_document(
            "context { indep t; dep u; }\nfunction f(2);\ncheck zero f(u);",
        )
        .unwrap_err();
        assert!(err.to_string().contains("arity"));
    }

    #[test]
    fn printer_round_trips() {
        let doc = load_document(SMALL).unwrap();
        let printed = print_document(&doc);
        let doc2 = load_document(&printed).unwrap();
        let printed2 = print_document(&doc2);
        assert_eq!(printed, printed2, "printing is a fixed point after one pass");
        // semantic agreement of the systems
        for (a, b) in doc.system.equations().iter().zip(doc2.system.equations()) {
            assert!(a.equivalent(b).unwrap());
        }
    }
}
