//! Lexer and recursive-descent parser for `.pde` documents.

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Underscore,
    Prime,
    Arrow,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::Prime => write!(f, "`'`"),
            Tok::Arrow => write!(f, "`->`"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("parse error at {span}: expected {expected}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>,
                        line: &mut u32,
                        col: &mut u32| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars, &mut line, &mut col);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars, &mut line, &mut col);
                }
            }
            'a'..='z' | 'A'..='Z' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() {
                        s.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), span));
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                let n: i64 = s.parse().map_err(|_| ParseError {
                    span,
                    expected: "an integer small enough to fit 64 bits".into(),
                })?;
                out.push((Tok::Int(n), span));
            }
            _ => {
                let c = bump(&mut chars, &mut line, &mut col);
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '-' => {
                        if chars.peek() == Some(&'>') {
                            bump(&mut chars, &mut line, &mut col);
                            Tok::Arrow
                        } else {
                            Tok::Minus
                        }
                    }
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '_' => Tok::Underscore,
                    '\'' => Tok::Prime,
                    other => {
                        return Err(ParseError {
                            span,
                            expected: format!("a token (found {other:?})"),
                        })
                    }
                };
                out.push((tok, span));
            }
        }
    }
    Ok(out)
}

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|(_, s)| *s)
            .unwrap_or(Span { line: 0, col: 0 })
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            expected: expected.to_string(),
        })
    }

    fn prev(&self) -> Option<&Tok> {
        self.pos.checked_sub(1).and_then(|i| self.toks.get(i)).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(&format!("{t}"))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let Some(Tok::Ident(s)) = self.next() else {
                    unreachable!()
                };
                Ok((s, span))
            }
            _ => self.err("an identifier"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError {
                span,
                expected: format!("`{kw}`"),
            }),
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(_)) => {
                let Some(Tok::Int(n)) = self.next() else {
                    unreachable!()
                };
                Ok(n)
            }
            _ => self.err("an integer"),
        }
    }

    // ---- expressions ----------------------------------------------------

    pub fn expr(&mut self) -> Result<ExprAst, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.term()?;
                acc = match acc {
                    ExprAst::Add(mut v) => {
                        v.push(rhs);
                        ExprAst::Add(v)
                    }
                    other => ExprAst::Add(vec![other, rhs]),
                };
            } else if self.eat(&Tok::Minus) {
                let rhs = self.term()?;
                acc = ExprAst::Sub(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ExprAst, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.unary()?;
                acc = match acc {
                    ExprAst::Mul(mut v) => {
                        v.push(rhs);
                        ExprAst::Mul(v)
                    }
                    other => ExprAst::Mul(vec![other, rhs]),
                };
            } else if self.eat(&Tok::Slash) {
                let rhs = self.unary()?;
                acc = ExprAst::Div(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<ExprAst, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        let _ = self.eat(&Tok::Plus);
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst, ParseError> {
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            let (num, den) = self.exponent()?;
            return Ok(ExprAst::Pow(Box::new(base), num, den));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<(i64, i64), ParseError> {
        if self.eat(&Tok::LParen) {
            let neg = self.eat(&Tok::Minus);
            let n = self.int()?;
            let mut den = 1;
            if self.eat(&Tok::Slash) {
                den = self.int()?;
            }
            self.expect(Tok::RParen)?;
            Ok((if neg { -n } else { n }, den))
        } else {
            Ok((self.int()?, 1))
        }
    }

    fn primary(&mut self) -> Result<ExprAst, ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Int(_)) => Ok(ExprAst::Int(self.int()?, span)),
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                // total derivative D[dirs](expr)
                if name == "D" && self.peek() == Some(&Tok::LBracket) {
                    self.pos += 1;
                    let mut dirs = vec![self.ident()?.0];
                    while self.eat(&Tok::Comma) {
                        dirs.push(self.ident()?.0);
                    }
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(ExprAst::TotalD {
                        dirs,
                        arg: Box::new(arg),
                        span,
                    });
                }
                // diff(f, k1, ...)(args)
                if name == "diff" && self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let (fname, _) = self.ident()?;
                    let mut orders = Vec::new();
                    while self.eat(&Tok::Comma) {
                        orders.push(self.int()? as u32);
                    }
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::LParen)?;
                    let args = self.call_args()?;
                    return Ok(ExprAst::Call {
                        name: fname,
                        orders,
                        args,
                        span,
                    });
                }
                // primes then call: f''(w)
                let mut primes = 0u32;
                while self.eat(&Tok::Prime) {
                    primes += 1;
                }
                if primes > 0 || self.peek() == Some(&Tok::LParen) {
                    self.expect(Tok::LParen)?;
                    let args = self.call_args()?;
                    let orders = if args.len() == 1 {
                        vec![primes]
                    } else if primes == 0 {
                        vec![0; args.len()]
                    } else {
                        return Err(ParseError {
                            span,
                            expected: "diff(...) notation for derivatives of multi-argument functions".into(),
                        });
                    };
                    return Ok(ExprAst::Call {
                        name,
                        orders,
                        args,
                        span,
                    });
                }
                // jet index suffix
                let mut index = Vec::new();
                if self.eat(&Tok::Underscore) {
                    if self.eat(&Tok::LBrace) {
                        index.push(self.ident()?.0);
                        while self.eat(&Tok::Comma) {
                            index.push(self.ident()?.0);
                        }
                        self.expect(Tok::RBrace)?;
                    } else {
                        index.push(self.ident()?.0);
                    }
                }
                Ok(ExprAst::Name {
                    base: name,
                    index,
                    span,
                })
            }
            _ => self.err("an expression"),
        }
    }

    fn call_args(&mut self) -> Result<Vec<ExprAst>, ParseError> {
        let mut args = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // ---- declarations ---------------------------------------------------

    fn name_list(&mut self) -> Result<Vec<(String, Span)>, ParseError> {
        let mut v = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn context_decl(&mut self) -> Result<ContextDecl, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut ctx = ContextDecl {
            indep: Vec::new(),
            dep: Vec::new(),
            params: Vec::new(),
            weights: Vec::new(),
            ranks: Vec::new(),
        };
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            let (kw, _) = self.ident()?;
            match kw.as_str() {
                "indep" => ctx.indep.extend(self.name_list()?),
                "dep" => ctx.dep.extend(self.name_list()?),
                "param" => ctx.params.extend(self.name_list()?),
                "weight" => {
                    let (dir, _) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    self.keyword("outer")?;
                    let outer = self.expr()?;
                    self.expect(Tok::Comma)?;
                    self.keyword("inner")?;
                    let inner = self.expr()?;
                    ctx.weights.push((dir, outer, inner, span));
                }
                "rank" => {
                    let (dep, _) = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let block = self.int()? as u32;
                    ctx.ranks.push((dep, block, span));
                }
                _ => {
                    return Err(ParseError {
                        span,
                        expected: "`indep`, `dep`, `param`, `weight` or `rank`".into(),
                    })
                }
            }
            self.expect(Tok::Semi)?;
        }
        Ok(ctx)
    }

    fn field_decl(&mut self) -> Result<FieldDecl, ParseError> {
        let span = self.span();
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let varying = self.name_list()?;
        self.expect(Tok::RParen)?;
        let mut decl = FieldDecl {
            name,
            varying,
            square: None,
            rules: Vec::new(),
            span,
        };
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            if self.peek_keyword("square") {
                self.pos += 1;
                self.expect(Tok::Eq)?;
                decl.square = Some(self.expr()?);
            } else {
                // d/d<dir> = rule
                self.keyword("d")?;
                self.expect(Tok::Slash)?;
                let (dname, dspan) = self.ident()?;
                let dir = dname.strip_prefix('d').map(str::to_string).ok_or(ParseError {
                    span: dspan,
                    expected: "`d<direction>` after `d/`".into(),
                })?;
                self.expect(Tok::Eq)?;
                let rule = self.expr()?;
                decl.rules.push((dir, rule, span));
            }
            self.expect(Tok::Semi)?;
        }
        Ok(decl)
    }

    fn combo_entries(&mut self) -> Result<Vec<ComboEntry>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            let (equation, _) = self.ident()?;
            let mut dirs = Vec::new();
            if self.eat(&Tok::LBracket) {
                dirs.push(self.ident()?.0);
                while self.eat(&Tok::Comma) {
                    dirs.push(self.ident()?.0);
                }
                self.expect(Tok::RBracket)?;
            }
            self.expect(Tok::Colon)?;
            let coefficient = self.expr()?;
            self.expect(Tok::Semi)?;
            entries.push(ComboEntry {
                equation,
                dirs,
                coefficient,
                span,
            });
        }
        Ok(entries)
    }

    fn combo(&mut self) -> Result<ComboAst, ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::LBracket) => {
                self.pos += 1;
                let mut v = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    v.push(self.expr()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(ComboAst::Vector(v, span))
            }
            Some(Tok::LBrace) => Ok(ComboAst::Entries(self.combo_entries()?, span)),
            Some(Tok::Ident(_)) => {
                let (name, _) = self.ident()?;
                Ok(ComboAst::Named(name, span))
            }
            _ => self.err("a combination: `[...]`, `{...}` or a name"),
        }
    }

    fn flux(&mut self) -> Result<FluxAst, ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::LBracket) => {
                self.pos += 1;
                let mut v = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    v.push(self.expr()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(FluxAst::Vector(v, span))
            }
            Some(Tok::Ident(_)) => {
                let (name, _) = self.ident()?;
                Ok(FluxAst::Named(name, span))
            }
            _ => self.err("a flux: `[...]` or a name"),
        }
    }

    fn system_decl(&mut self, doc: &mut Document) -> Result<(), ParseError> {
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            if self.peek_keyword("syzygy") {
                self.pos += 1;
                let (name, _) = self.ident()?;
                let entries = self.combo_entries()?;
                let _ = self.eat(&Tok::Semi);
                doc.syzygies.push(SyzygyDecl {
                    name,
                    entries,
                    span,
                });
                continue;
            }
            let (name, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let lhs = self.expr()?;
            self.expect(Tok::Eq)?;
            let zero_span = self.span();
            if self.int()? != 0 {
                return Err(ParseError {
                    span: zero_span,
                    expected: "`0` (equations are written `expr = 0`)".into(),
                });
            }
            let solve = if self.peek_keyword("solve") {
                self.pos += 1;
                Some(self.primary()?)
            } else {
                None
            };
            self.expect(Tok::Semi)?;
            doc.equations.push(EquationDecl {
                name,
                lhs,
                solve,
                span,
            });
        }
        Ok(())
    }

    fn vectorfield_decl(&mut self) -> Result<VectorFieldDecl, ParseError> {
        let span = self.span();
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        let mut frame = None;
        while !self.eat(&Tok::RBrace) {
            let rspan = self.span();
            if self.peek_keyword("frame") {
                self.pos += 1;
                self.expect(Tok::Eq)?;
                self.expect(Tok::LBracket)?;
                let mut v = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    v.push(self.expr()?);
                }
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Semi)?;
                frame = Some(v);
                continue;
            }
            let (dep, _) = self.ident()?;
            self.expect(Tok::Arrow)?;
            let e = self.expr()?;
            self.expect(Tok::Semi)?;
            rows.push((dep, e, rspan));
        }
        Ok(VectorFieldDecl {
            name,
            rows,
            frame,
            span,
        })
    }

    fn check_decl(&mut self, index: usize) -> Result<CheckDecl, ParseError> {
        let span = self.span();
        let (kw, _) = self.ident()?;
        let kind = match kw.as_str() {
            "zero" => CheckAst::Zero { expr: self.expr()? },
            "onsol" => {
                let expr = self.expr()?;
                let cert = if self.peek_keyword("cert") {
                    self.pos += 1;
                    Some(self.combo()?)
                } else {
                    None
                };
                CheckAst::ZeroOnSolutions { expr, cert }
            }
            "nonzero" => CheckAst::NonzeroOnSolutions { expr: self.expr()? },
            "law" => {
                let flux = self.flux()?;
                self.keyword("cert")?;
                let cert = self.combo()?;
                CheckAst::Law { flux, cert }
            }
            "divergence" => {
                let combo = self.combo()?;
                self.expect(Tok::Eq)?;
                let flux = self.flux()?;
                CheckAst::Divergence { combo, flux }
            }
            "nodivergence" => CheckAst::NotDivergence { expr: self.expr()? },
            "invert" => {
                let expr = self.expr()?;
                self.expect(Tok::Eq)?;
                let flux = self.flux()?;
                CheckAst::InvertDivergence { expr, flux }
            }
            "quasi" => CheckAst::Quasi {
                combo: self.combo()?,
            },
            "subsym" => {
                let (field, _) = self.ident()?;
                self.keyword("on")?;
                let combo = self.combo()?;
                let cert = if self.peek_keyword("cert") {
                    self.pos += 1;
                    Some(self.combo()?)
                } else {
                    None
                };
                CheckAst::Subsym { field, combo, cert }
            }
            "notsubsym" => {
                let (field, _) = self.ident()?;
                self.keyword("on")?;
                let combo = self.combo()?;
                CheckAst::NotSubsym { field, combo }
            }
            "apply" => {
                let (field, _) = self.ident()?;
                let expr = self.expr()?;
                self.expect(Tok::Eq)?;
                let expected = self.expr()?;
                CheckAst::Apply {
                    field,
                    expr,
                    expected,
                }
            }
            "claw" => {
                let (field, _) = self.ident()?;
                self.keyword("on")?;
                let combo = self.combo()?;
                self.expect(Tok::Eq)?;
                let flux = self.flux()?;
                let cert = if self.peek_keyword("cert") {
                    self.pos += 1;
                    Some(self.combo()?)
                } else {
                    None
                };
                CheckAst::Claw {
                    field,
                    combo,
                    flux,
                    cert,
                }
            }
            "deform" => {
                let (field, _) = self.ident()?;
                self.keyword("flux")?;
                let base_flux = self.flux()?;
                self.keyword("on")?;
                let combo = self.combo()?;
                self.expect(Tok::Eq)?;
                let expected = self.flux()?;
                let cert = if self.peek_keyword("cert") {
                    self.pos += 1;
                    Some(self.combo()?)
                } else {
                    None
                };
                CheckAst::Deform {
                    field,
                    base_flux,
                    combo,
                    expected,
                    cert,
                }
            }
            "classify" => {
                let cert = self.combo()?;
                let mut syzygy_apps = Vec::new();
                if self.peek_keyword("using") {
                    self.pos += 1;
                    loop {
                        let (name, _) = self.ident()?;
                        self.expect(Tok::Colon)?;
                        let mult = self.expr()?;
                        syzygy_apps.push((name, mult));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::Eq)?;
                let (verdict, vspan) = self.ident()?;
                let nontrivial = match verdict.as_str() {
                    "nontrivial" => true,
                    "trivial" => false,
                    _ => {
                        return Err(ParseError {
                            span: vspan,
                            expected: "`nontrivial` or `trivial`".into(),
                        })
                    }
                };
                let chars = if self.peek_keyword("chars") {
                    self.pos += 1;
                    Some(self.flux()?)
                } else {
                    None
                };
                CheckAst::Classify {
                    cert,
                    syzygy_apps,
                    nontrivial,
                    chars,
                }
            }
            "reduce" => {
                let expr = self.expr()?;
                self.expect(Tok::Arrow)?;
                let expected = self.expr()?;
                CheckAst::Reduce { expr, expected }
            }
            _ => {
                return Err(ParseError {
                    span,
                    expected: "a check directive".into(),
                })
            }
        };
        Ok(CheckDecl {
            label: format!("check {} #{}", kw, index + 1),
            kind,
            span,
        })
    }

    pub fn document(&mut self) -> Result<Document, ParseError> {
        let mut doc = Document::default();
        while let Some(tok) = self.peek() {
            let span = self.span();
            let Tok::Ident(kw) = tok.clone() else {
                return self.err("a declaration keyword");
            };
            self.pos += 1;
            match kw.as_str() {
                "context" => doc.context = Some(self.context_decl()?),
                "function" => {
                    let (name, _) = self.ident()?;
                    self.expect(Tok::LParen)?;
                    let arity = self.int()? as usize;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Semi)?;
                    doc.functions.push((name, arity, span));
                }
                "field" => doc.fields.push(self.field_decl()?),
                "let" => {
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let e = self.expr()?;
                    self.expect(Tok::Semi)?;
                    doc.lets.push((name, e, span));
                }
                "system" => self.system_decl(&mut doc)?,
                "vectorfield" => doc.vectorfields.push(self.vectorfield_decl()?),
                "multiplier" => {
                    let (name, _) = self.ident()?;
                    let c = if self.eat(&Tok::Eq) {
                        let c = self.combo()?;
                        self.expect(Tok::Semi)?;
                        c
                    } else {
                        let c = ComboAst::Entries(self.combo_entries()?, span);
                        let _ = self.eat(&Tok::Semi);
                        c
                    };
                    doc.multipliers.push((name, c, span));
                }
                "certificate" => {
                    let (name, _) = self.ident()?;
                    let c = if self.eat(&Tok::Eq) {
                        let c = self.combo()?;
                        self.expect(Tok::Semi)?;
                        c
                    } else {
                        let c = ComboAst::Entries(self.combo_entries()?, span);
                        let _ = self.eat(&Tok::Semi);
                        c
                    };
                    doc.certificates.push((name, c, span));
                }
                "flux" => {
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Eq)?;
                    self.expect(Tok::LBracket)?;
                    let mut v = vec![self.expr()?];
                    while self.eat(&Tok::Comma) {
                        v.push(self.expr()?);
                    }
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Semi)?;
                    doc.fluxes.push((name, v, span));
                }
                "check" => {
                    let idx = doc.checks.len();
                    let c = self.check_decl(idx)?;
                    // the terminator is optional after a `}`-delimited block
                    if !self.eat(&Tok::Semi) && !matches!(self.prev(), Some(Tok::RBrace)) {
                        return self.err("`;`");
                    }
                    doc.checks.push(c);
                }
                _ => {
                    return Err(ParseError {
                        span,
                        expected: "`context`, `function`, `field`, `let`, `system`, \
                                   `vectorfield`, `multiplier`, `certificate`, `flux` or `check`"
                            .into(),
                    })
                }
            }
        }
        Ok(doc)
    }
}
