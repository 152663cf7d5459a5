#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    Gt,
    LtE,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompKind {
    List,
    Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompClause {
    For { target: String, iter: Expr },
    If(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Name(String),
    List(Vec<Expr>),
    Attr(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call { func: Box<Expr>, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Lambda { param: String, body: Box<Expr> },
    Comp { kind: CompKind, elt: Box<Expr>, clauses: Vec<CompClause> },
    Bool(BoolOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Compare(Box<Expr>, CmpOp, Box<Expr>),
    Arith(Box<Expr>, ArithOp, Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { target: String, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    For { target: String, iter: Expr, body: Vec<Stmt> },
    If { cond: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    Pass,
}

/// A parsed `def answer(): ...` program.
#[derive(Debug, Clone, PartialEq)]
pub struct PymrAst {
    /// Return annotation as written, e.g. `List[State]`.
    pub returns: Option<Expr>,
    pub body: Vec<Stmt>,
}
