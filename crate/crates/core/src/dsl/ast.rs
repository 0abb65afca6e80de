//! Surface syntax tree for `.pde` documents, with source spans.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum ExprAst {
    Int(i64, Span),
    /// plain name or jet coordinate `u_t`, `u_{t,x1}`
    Name {
        base: String,
        index: Vec<String>,
        span: Span,
    },
    /// `f'(args)` or `diff(f,1,0)(args)`
    Call {
        name: String,
        orders: Vec<u32>,
        args: Vec<ExprAst>,
        span: Span,
    },
    /// total derivative `D[t,x](expr)`
    TotalD {
        dirs: Vec<String>,
        arg: Box<ExprAst>,
        span: Span,
    },
    Add(Vec<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Vec<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    Neg(Box<ExprAst>),
    Pow(Box<ExprAst>, i64, i64),
}

impl ExprAst {
    pub fn span(&self) -> Span {
        match self {
            ExprAst::Int(_, s)
            | ExprAst::Name { span: s, .. }
            | ExprAst::Call { span: s, .. }
            | ExprAst::TotalD { span: s, .. } => *s,
            ExprAst::Add(v) | ExprAst::Mul(v) => v[0].span(),
            ExprAst::Sub(a, _) | ExprAst::Div(a, _) | ExprAst::Pow(a, _, _) => a.span(),
            ExprAst::Neg(a) => a.span(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContextDecl {
    pub indep: Vec<(String, Span)>,
    pub dep: Vec<(String, Span)>,
    pub params: Vec<(String, Span)>,
    /// (direction, outer, inner)
    pub weights: Vec<(String, ExprAst, ExprAst, Span)>,
    /// ranking blocks: (dependent, block)
    pub ranks: Vec<(String, u32, Span)>,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub name: String,
    pub varying: Vec<(String, Span)>,
    pub square: Option<ExprAst>,
    /// (direction, rule)
    pub rules: Vec<(String, ExprAst, Span)>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct EquationDecl {
    pub name: String,
    pub lhs: ExprAst,
    /// leading atom of the solved form, when declared
    pub solve: Option<ExprAst>,
    pub span: Span,
}

/// One `EqName[dirs]: coefficient` entry of a combination block.
#[derive(Debug, Clone)]
pub struct ComboEntry {
    pub equation: String,
    pub dirs: Vec<String>,
    pub coefficient: ExprAst,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum ComboAst {
    /// `[e1, ..., en]`: function-valued by equation order
    Vector(Vec<ExprAst>, Span),
    /// `{ Eq[dirs]: coeff; ... }`
    Entries(Vec<ComboEntry>, Span),
    /// reference to a named multiplier/certificate
    Named(String, Span),
}

#[derive(Debug, Clone)]
pub enum FluxAst {
    Vector(Vec<ExprAst>, Span),
    Named(String, Span),
}

#[derive(Debug, Clone)]
pub struct SyzygyDecl {
    pub name: String,
    pub entries: Vec<ComboEntry>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct VectorFieldDecl {
    pub name: String,
    /// (dependent, characteristic)
    pub rows: Vec<(String, ExprAst, Span)>,
    /// optional frame coefficients (general field, canonicalized on use)
    pub frame: Option<Vec<ExprAst>>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum CheckAst {
    Zero {
        expr: ExprAst,
    },
    ZeroOnSolutions {
        expr: ExprAst,
        cert: Option<ComboAst>,
    },
    NonzeroOnSolutions {
        expr: ExprAst,
    },
    /// `Div(flux) = combination(cert)` exactly
    Law {
        flux: FluxAst,
        cert: ComboAst,
    },
    /// `combination(mult) = Div(flux)` exactly
    Divergence {
        combo: ComboAst,
        flux: FluxAst,
    },
    NotDivergence {
        expr: ExprAst,
    },
    InvertDivergence {
        expr: ExprAst,
        flux: FluxAst,
    },
    Quasi {
        combo: ComboAst,
    },
    Subsym {
        field: String,
        combo: ComboAst,
        cert: Option<ComboAst>,
    },
    NotSubsym {
        field: String,
        combo: ComboAst,
    },
    Apply {
        field: String,
        expr: ExprAst,
        expected: ExprAst,
    },
    Claw {
        field: String,
        combo: ComboAst,
        flux: FluxAst,
        cert: Option<ComboAst>,
    },
    Deform {
        field: String,
        base_flux: FluxAst,
        combo: ComboAst,
        expected: FluxAst,
        cert: Option<ComboAst>,
    },
    Classify {
        cert: ComboAst,
        syzygy_apps: Vec<(String, ExprAst)>,
        nontrivial: bool,
        chars: Option<FluxAst>,
    },
    Reduce {
        expr: ExprAst,
        expected: ExprAst,
    },
}

#[derive(Debug, Clone)]
pub struct CheckDecl {
    pub kind: CheckAst,
    pub label: String,
    pub span: Span,
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub context: Option<ContextDecl>,
    pub functions: Vec<(String, usize, Span)>,
    pub fields: Vec<FieldDecl>,
    pub lets: Vec<(String, ExprAst, Span)>,
    pub equations: Vec<EquationDecl>,
    pub syzygies: Vec<SyzygyDecl>,
    pub vectorfields: Vec<VectorFieldDecl>,
    pub multipliers: Vec<(String, ComboAst, Span)>,
    pub certificates: Vec<(String, ComboAst, Span)>,
    pub fluxes: Vec<(String, Vec<ExprAst>, Span)>,
    pub checks: Vec<CheckDecl>,
}
