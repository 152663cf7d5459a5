use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::PymrError;

/// Builtins that accept a bare generator expression as their only argument.
const GENERATOR_CONSUMERS: &[&str] = &["any", "all", "max", "min", "sum", "list", "set", "sorted"];

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "while", "import", "from", "class", "try", "with", "yield", "global", "nonlocal", "del", "assert", "raise",
    "break", "continue", "async", "await", "except", "finally",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, PymrError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(PymrError::Syntax { line, col, message: message.into() })
    }

    fn unsupported<T>(&self, construct: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(PymrError::Unsupported { construct: construct.into(), line, col })
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected {op:?}, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected {kw:?}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                self.bump();
                Ok(n)
            }
            other => self.err(format!("expected a name, found {}", describe(&other))),
        }
    }

    fn program(&mut self) -> PResult<PymrAst> {
        while matches!(self.peek(), Tok::Newline) {
            self.bump();
        }
        if self.is_kw("import") || self.is_kw("from") {
            return self.unsupported("import");
        }
        if self.is_kw("class") {
            return self.unsupported("class");
        }
        self.expect_kw("def")?;
        let name = self.ident()?;
        if name != "answer" {
            return self.err(format!("the program must define answer(), found {name}()"));
        }
        self.expect_op("(")?;
        if !self.is_op(")") {
            return self.err("answer() takes no parameters");
        }
        self.expect_op(")")?;
        let returns = if self.eat_op("->") { Some(self.expr()?) } else { None };
        self.expect_op(":")?;
        let body = self.block()?;
        while matches!(self.peek(), Tok::Newline) {
            self.bump();
        }
        match self.peek() {
            Tok::Eof => Ok(PymrAst { returns, body }),
            Tok::Name(n) if n == "def" => self.unsupported("additional top-level function"),
            _ => self.unsupported("top-level statement outside answer()"),
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if !matches!(self.peek(), Tok::Newline) {
            // `def answer(): return 1`
            let s = self.simple_stmt()?;
            self.end_of_line()?;
            return Ok(vec![s]);
        }
        self.bump();
        if !matches!(self.peek(), Tok::Indent) {
            return self.err("expected an indented block");
        }
        self.bump();
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::Dedent | Tok::Eof) {
            out.push(self.stmt()?);
        }
        if matches!(self.peek(), Tok::Dedent) {
            self.bump();
        }
        Ok(out)
    }

    fn end_of_line(&mut self) -> PResult<()> {
        if self.is_op(";") {
            return self.unsupported("semicolon-separated statements");
        }
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            other => self.err(format!("expected end of line, found {}", describe(other))),
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if let Tok::Name(kw) = self.peek().clone() {
            if UNSUPPORTED_KEYWORDS.contains(&kw.as_str()) {
                return self.unsupported(kw);
            }
            match kw.as_str() {
                "def" => return self.unsupported("nested function"),
                "for" => {
                    self.bump();
                    let target = self.for_target()?;
                    self.expect_kw("in")?;
                    let iter = self.expr()?;
                    self.expect_op(":")?;
                    let body = self.block()?;
                    if self.is_kw("else") {
                        return self.unsupported("for-else");
                    }
                    return Ok(Stmt::For { target, iter, body });
                }
                "if" => {
                    self.bump();
                    return self.if_rest();
                }
                _ => {}
            }
        }
        let s = self.simple_stmt()?;
        self.end_of_line()?;
        Ok(s)
    }

    fn if_rest(&mut self) -> PResult<Stmt> {
        let cond = self.expr()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = if self.eat_kw("elif") {
            vec![self.if_rest()?]
        } else if self.eat_kw("else") {
            self.expect_op(":")?;
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::If { cond, body, orelse })
    }

    fn for_target(&mut self) -> PResult<String> {
        let name = self.ident()?;
        if self.is_op(",") {
            return self.unsupported("tuple unpacking");
        }
        Ok(name)
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        if self.eat_kw("return") {
            if matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                return Ok(Stmt::Return(None));
            }
            let e = self.expr()?;
            if self.is_op(",") {
                return self.unsupported("tuple");
            }
            return Ok(Stmt::Return(Some(e)));
        }
        if self.eat_kw("pass") {
            return Ok(Stmt::Pass);
        }
        let e = self.expr()?;
        if self.is_op(",") {
            return self.unsupported("tuple");
        }
        if let Tok::Op(op) = self.peek() {
            if op.len() >= 2 && op.ends_with('=') && !matches!(*op, "==" | "!=" | "<=" | ">=") {
                return self.unsupported("augmented assignment");
            }
            if *op == ":" {
                return self.unsupported("annotated assignment");
            }
        }
        if self.eat_op("=") {
            let target = match e {
                Expr::Name(n) => n,
                Expr::Attr(..) => return self.unsupported("attribute assignment"),
                Expr::Index(..) => return self.unsupported("item assignment"),
                _ => return self.err("invalid assignment target"),
            };
            let value = self.expr()?;
            if self.is_op("=") {
                return self.unsupported("chained assignment");
            }
            if self.is_op(",") {
                return self.unsupported("tuple");
            }
            return Ok(Stmt::Assign { target, value });
        }
        Ok(Stmt::Expr(e))
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.is_kw("lambda") {
            return self.unsupported("lambda outside argument position");
        }
        let e = self.or_test()?;
        if self.is_kw("if") {
            return self.unsupported("conditional expression");
        }
        Ok(e)
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let mut e = self.and_test()?;
        while self.eat_kw("or") {
            e = Expr::Bool(BoolOp::Or, Box::new(e), Box::new(self.and_test()?));
        }
        Ok(e)
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let mut e = self.not_test()?;
        while self.eat_kw("and") {
            e = Expr::Bool(BoolOp::And, Box::new(e), Box::new(self.not_test()?));
        }
        Ok(e)
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.bump();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.bump();
                CmpOp::NotIn
            }
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.arith()?;
        let Some(op) = self.cmp_op() else { return Ok(left) };
        let right = self.arith()?;
        let save = self.pos;
        if self.cmp_op().is_some() {
            self.pos = save;
            return self.unsupported("chained comparison");
        }
        Ok(Expr::Compare(Box::new(left), op, Box::new(right)))
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                ArithOp::Add
            } else if self.eat_op("-") {
                ArithOp::Sub
            } else {
                return Ok(e);
            };
            e = Expr::Arith(Box::new(e), op, Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        loop {
            if let Tok::Op(op @ ("%" | "//" | "@")) = self.peek() {
                let op = *op;
                return self.unsupported(format!("operator {op}"));
            }
            let op = if self.eat_op("*") {
                ArithOp::Mul
            } else if self.eat_op("/") {
                ArithOp::Div
            } else {
                return Ok(e);
            };
            e = Expr::Arith(Box::new(e), op, Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat_op("+") {
            return self.factor();
        }
        let e = self.postfix()?;
        if self.is_op("**") {
            return self.unsupported("operator **");
        }
        Ok(e)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let name = self.ident()?;
                e = Expr::Attr(Box::new(e), name);
            } else if self.is_op("(") {
                self.bump();
                e = self.call_rest(e)?;
            } else if self.eat_op("[") {
                if self.is_op(":") {
                    return self.unsupported("slicing");
                }
                let idx = self.expr()?;
                if self.is_op(":") {
                    return self.unsupported("slicing");
                }
                if self.is_op(",") {
                    return self.unsupported("tuple index");
                }
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn arg_value(&mut self) -> PResult<Expr> {
        if self.eat_kw("lambda") {
            let param = self.ident()?;
            if self.is_op(",") {
                return self.unsupported("lambda with several parameters");
            }
            self.expect_op(":")?;
            let body = self.expr()?;
            return Ok(Expr::Lambda { param, body: Box::new(body) });
        }
        self.expr()
    }

    fn call_rest(&mut self, func: Expr) -> PResult<Expr> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while !self.is_op(")") {
            if self.is_op("*") || self.is_op("**") {
                return self.unsupported("argument unpacking");
            }
            let is_kw =
                matches!(self.peek(), Tok::Name(n) if !is_keyword(n)) && matches!(self.peek_at(1), Tok::Op("="));
            if is_kw {
                let name = self.ident()?;
                self.bump();
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return self.err(format!("keyword argument {name} repeated"));
                }
                kwargs.push((name, self.arg_value()?));
            } else {
                if !kwargs.is_empty() {
                    return self.err("positional argument follows keyword argument");
                }
                let value = self.arg_value()?;
                if self.is_kw("for") {
                    let callee_ok = matches!(&func, Expr::Name(n) if GENERATOR_CONSUMERS.contains(&n.as_str()));
                    if !callee_ok || !args.is_empty() {
                        return self.unsupported("generator expression");
                    }
                    let clauses = self.comp_clauses()?;
                    if !self.is_op(")") {
                        return self.unsupported("generator expression");
                    }
                    args.push(Expr::Comp { kind: CompKind::Generator, elt: Box::new(value), clauses });
                    break;
                }
                args.push(value);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(Expr::Call { func: Box::new(func), args, kwargs })
    }

    fn comp_clauses(&mut self) -> PResult<Vec<CompClause>> {
        let mut clauses = Vec::new();
        while self.eat_kw("for") {
            let target = self.for_target()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            clauses.push(CompClause::For { target, iter });
            while self.eat_kw("if") {
                clauses.push(CompClause::If(self.or_test()?));
            }
        }
        Ok(clauses)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match tok {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(n)))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Lit(Literal::Float(f)))
            }
            Tok::Str(mut s) => {
                self.bump();
                while let Tok::Str(more) = self.peek().clone() {
                    self.bump();
                    s.push_str(&more);
                }
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Name(n) => match n.as_str() {
                "None" => {
                    self.bump();
                    Ok(Expr::Lit(Literal::None))
                }
                "True" | "False" => {
                    self.bump();
                    Ok(Expr::Lit(Literal::Bool(n == "True")))
                }
                "lambda" => self.unsupported("lambda outside argument position"),
                "yield" | "await" => self.unsupported(n),
                _ if is_keyword(&n) => self.err(format!("unexpected keyword {n:?}")),
                _ => {
                    self.bump();
                    Ok(Expr::Name(n))
                }
            },
            Tok::Op("(") => {
                self.bump();
                if self.is_op(")") {
                    return self.unsupported("tuple");
                }
                let e = self.expr()?;
                if self.is_kw("for") {
                    return self.unsupported("generator expression");
                }
                if self.is_op(",") {
                    return self.unsupported("tuple");
                }
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Op("[") => {
                self.bump();
                let mut items = Vec::new();
                if self.eat_op("]") {
                    return Ok(Expr::List(items));
                }
                let first = self.expr()?;
                if self.is_kw("for") {
                    let clauses = self.comp_clauses()?;
                    self.expect_op("]")?;
                    return Ok(Expr::Comp { kind: CompKind::List, elt: Box::new(first), clauses });
                }
                items.push(first);
                while self.eat_op(",") {
                    if self.is_op("]") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => self.unsupported("dict or set display"),
            other => self.err(format!("unexpected {}", describe(&other))),
        }
    }
}

fn is_keyword(n: &str) -> bool {
    matches!(
        n,
        "def"
            | "return"
            | "for"
            | "in"
            | "if"
            | "elif"
            | "else"
            | "and"
            | "or"
            | "not"
            | "is"
            | "lambda"
            | "None"
            | "True"
            | "False"
            | "pass"
    ) || UNSUPPORTED_KEYWORDS.contains(&n)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("{n:?}"),
        Tok::Int(n) => n.to_string(),
        Tok::Float(f) => f.to_string(),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Op(o) => format!("{o:?}"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_pymr(text: &str) -> Result<PymrAst, PymrError> {
    let toks = tokenize(text)?;
    Parser { toks, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unsupported(src: &str) -> String {
        match parse_pymr(src) {
            Err(PymrError::Unsupported { construct, .. }) => construct,
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn minimal() {
        let ast = parse_pymr("def answer(): return 1").unwrap();
        assert_eq!(ast.body, [Stmt::Return(Some(Expr::Lit(Literal::Int(1))))]);
    }

    #[test]
    fn geo_table_program() {
        let src = "def answer() -> int:\n    largest_state = max(geo_model.states, key=lambda x: x.size)\n    return largest_state.high_point.elevation\n";
        let ast = parse_pymr(src).unwrap();
        assert_eq!(ast.body.len(), 2);
        assert!(
            matches!(&ast.body[0], Stmt::Assign { target, value: Expr::Call { kwargs, .. } } if target == "largest_state" && kwargs[0].0 == "key")
        );
    }

    #[test]
    fn nested_comprehension_generator() {
        let src = "def answer():\n    return [p for p in api.people if p.education and any(e.start_date == a.end_date for e in p.education for a in alice.employment)]\n";
        parse_pymr(src).unwrap();
    }

    #[test]
    fn if_elif_else_and_for() {
        let src = "def answer():\n    out = []\n    for s in geo_model.states:\n        if s.area > 1:\n            out.append(s)\n        elif s.area < 0:\n            pass\n        else:\n            out.remove(s)\n    return out\n";
        let ast = parse_pymr(src).unwrap();
        assert!(matches!(&ast.body[1], Stmt::For { body, .. } if body.len() == 1));
    }

    #[test]
    fn rejects_outside_subset() {
        assert_eq!(unsupported("def answer():\n    while True:\n        pass\n"), "while");
        assert_eq!(unsupported("import os\ndef answer(): return 1"), "import");
        assert_eq!(unsupported("def answer():\n    x = [1, 2]\n    return x[0:1]\n"), "slicing");
        assert_eq!(unsupported("def answer():\n    x = 1\n    x += 1\n    return x\n"), "augmented assignment");
        assert_eq!(unsupported("def answer():\n    return 1 if True else 2\n"), "conditional expression");
        assert_eq!(unsupported("def answer():\n    def f(): return 1\n    return 1\n"), "nested function");
        assert_eq!(unsupported("def answer():\n    geo_model.x = 1\n"), "attribute assignment");
        assert_eq!(unsupported("def answer():\n    return f'{1}'\n"), "f-string");
        assert_eq!(unsupported("def answer():\n    return len(x for x in [1])\n"), "generator expression");
        assert_eq!(unsupported("def answer():\n    return 1 < 2 < 3\n"), "chained comparison");
        assert_eq!(unsupported("def answer():\n    f = lambda x: x\n"), "lambda outside argument position");
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_pymr("def answer():\n    return (1\n") {
            Err(PymrError::Syntax { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_pymr("def other(): return 1"), Err(PymrError::Syntax { .. })));
    }
}
