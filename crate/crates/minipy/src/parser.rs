//! Recursive-descent parser producing [`crate::ast`] nodes.

use std::rc::Rc;

use crate::ast::*;
use crate::exception::{Exception, PyResult};
use crate::lexer::{tokenize, Tok, Token};

pub fn parse_module(source: &str) -> PyResult<Vec<Stmt>> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    while !p.at(&Tok::Eof) {
        if p.eat(&Tok::Newline) {
            continue;
        }
        body.extend(p.statement()?);
    }
    Ok(body)
}

/// Parses a single expression (used for f-string fields).
pub fn parse_expression(source: &str, line: usize) -> PyResult<Expr> {
    let tokens = tokenize(source).map_err(|e| Exception::syntax(line, e.message))?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.expr_or_tuple()?;
    p.eat(&Tok::Newline);
    if !p.at(&Tok::Eof) {
        return Err(Exception::syntax(line, "f-string: invalid expression"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn line(&self) -> usize {
        self.tokens[self.pos].line
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PyResult<T> {
        Err(Exception::syntax(self.line(), msg))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Int(i) => i.to_string(),
            Tok::Float(f) => f.to_string(),
            Tok::Str(_) | Tok::FStr(_) => "string".into(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_op(&mut self, op: &str) -> PyResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(format!("expected '{op}', found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PyResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected '{kw}', found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PyResult<String> {
        match self.peek().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.advance();
                Ok(n)
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn end_of_simple(&mut self) -> PyResult<()> {
        if self.eat(&Tok::Newline) || self.at(&Tok::Eof) || self.at(&Tok::Dedent) {
            Ok(())
        } else {
            self.error(format!("invalid syntax near {}", self.describe()))
        }
    }

    // ---- statements ----

    fn statement(&mut self) -> PyResult<Vec<Stmt>> {
        let line = self.line();
        let kind = match self.peek() {
            Tok::Name(n) => n.clone(),
            Tok::Indent => return self.error("unexpected indent"),
            _ => String::new(),
        };
        let stmt = match kind.as_str() {
            "def" => self.function_def()?,
            "if" => self.if_stmt()?,
            "for" => self.for_stmt()?,
            "while" => self.while_stmt()?,
            "try" => self.try_stmt()?,
            "class" => return self.error("class definitions are not supported"),
            "with" => return self.error("'with' statements are not supported"),
            "async" | "yield" | "await" => return self.error(format!("'{kind}' is not supported")),
            "@" => return self.error("decorators are not supported"),
            _ => return self.simple_statements(),
        };
        Ok(vec![Stmt { line, kind: stmt }])
    }

    fn simple_statements(&mut self) -> PyResult<Vec<Stmt>> {
        if self.at_op("@") {
            return self.error("decorators are not supported");
        }
        let mut out = Vec::new();
        loop {
            let line = self.line();
            let kind = self.small_statement()?;
            out.push(Stmt { line, kind });
            if !self.eat_op(";") || self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                break;
            }
        }
        self.end_of_simple()?;
        Ok(out)
    }

    fn small_statement(&mut self) -> PyResult<StmtKind> {
        if let Tok::Name(n) = self.peek().clone() {
            match n.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(StmtKind::Pass);
                }
                "break" => {
                    self.advance();
                    return Ok(StmtKind::Break);
                }
                "continue" => {
                    self.advance();
                    return Ok(StmtKind::Continue);
                }
                "return" => {
                    self.advance();
                    if self.at(&Tok::Newline) || self.at_op(";") || self.at(&Tok::Eof) {
                        return Ok(StmtKind::Return(None));
                    }
                    return Ok(StmtKind::Return(Some(self.expr_or_tuple()?)));
                }
                "raise" => {
                    self.advance();
                    if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                        return Ok(StmtKind::Raise(None));
                    }
                    let e = self.expression()?;
                    if self.eat_kw("from") {
                        self.expression()?;
                    }
                    return Ok(StmtKind::Raise(Some(e)));
                }
                "assert" => {
                    self.advance();
                    let cond = self.expression()?;
                    let msg = if self.eat_op(",") { Some(self.expression()?) } else { None };
                    return Ok(StmtKind::Assert(cond, msg));
                }
                "del" => {
                    self.advance();
                    let e = self.expr_or_tuple()?;
                    let targets = match self.to_target(e)? {
                        Target::Tuple(ts) => ts,
                        t => vec![t],
                    };
                    return Ok(StmtKind::Delete(targets));
                }
                "global" | "nonlocal" => {
                    self.advance();
                    let mut names = vec![self.ident()?];
                    while self.eat_op(",") {
                        names.push(self.ident()?);
                    }
                    return Ok(StmtKind::Global(names));
                }
                "import" => {
                    self.advance();
                    let mut names = Vec::new();
                    loop {
                        let module = self.dotted_name()?;
                        let alias = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                        names.push((module, alias));
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    return Ok(StmtKind::Import(names));
                }
                "from" => {
                    self.advance();
                    let mut module = String::new();
                    while self.at_op(".") || self.at_op("...") {
                        if let Tok::Op(o) = self.advance() {
                            module.push_str(o);
                        }
                    }
                    if !self.at_kw("import") {
                        module.push_str(&self.dotted_name()?);
                    }
                    self.expect_kw("import")?;
                    let paren = self.eat_op("(");
                    let mut names = Vec::new();
                    if self.eat_op("*") {
                        names.push(("*".to_string(), None));
                    } else {
                        loop {
                            if paren && self.at_op(")") {
                                break;
                            }
                            let name = self.ident()?;
                            let alias = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                            names.push((name, alias));
                            if !self.eat_op(",") {
                                break;
                            }
                        }
                    }
                    if paren {
                        self.expect_op(")")?;
                    }
                    return Ok(StmtKind::ImportFrom(module, names));
                }
                _ => {}
            }
        }
        self.expression_statement()
    }

    fn dotted_name(&mut self) -> PyResult<String> {
        let mut name = self.ident()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn expression_statement(&mut self) -> PyResult<StmtKind> {
        let first = self.expr_or_tuple_with_star()?;
        // annotated assignment: `x: int = 1`
        if self.at_op(":") {
            self.advance();
            self.expression()?;
            let target = self.to_target(first)?;
            if self.eat_op("=") {
                let value = self.expr_or_tuple_with_star()?;
                return Ok(StmtKind::Assign(vec![target], value));
            }
            return Ok(StmtKind::Pass);
        }
        let aug = match self.peek() {
            Tok::Op(o) => match *o {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                "&=" => Some(BinOp::BitAnd),
                "|=" => Some(BinOp::BitOr),
                "^=" => Some(BinOp::BitXor),
                "<<=" => Some(BinOp::LShift),
                ">>=" => Some(BinOp::RShift),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = aug {
            self.advance();
            let target = self.to_target(first)?;
            if matches!(target, Target::Tuple(_)) {
                return self.error("illegal expression for augmented assignment");
            }
            let value = self.expr_or_tuple()?;
            return Ok(StmtKind::AugAssign(target, op, value));
        }
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.expr_or_tuple_with_star()?);
            }
            let value = exprs.pop().unwrap();
            let targets = exprs
                .into_iter()
                .map(|e| self.to_target(e))
                .collect::<PyResult<Vec<_>>>()?;
            return Ok(StmtKind::Assign(targets, value));
        }
        Ok(StmtKind::Expr(first))
    }

    fn to_target(&self, e: Expr) -> PyResult<Target> {
        Ok(match e {
            Expr::Name(n) => Target::Name(n),
            Expr::Attribute(obj, attr) => Target::Attribute(*obj, attr),
            Expr::Subscript(obj, idx) => Target::Subscript(*obj, *idx),
            Expr::Tuple(items) | Expr::List(items) => Target::Tuple(
                items
                    .into_iter()
                    .map(|i| self.to_target(i))
                    .collect::<PyResult<_>>()?,
            ),
            Expr::Starred(inner) => Target::Starred(Box::new(self.to_target(*inner)?)),
            _ => return self.error("cannot assign to expression"),
        })
    }

    fn block(&mut self) -> PyResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if !self.eat(&Tok::Newline) {
            return self.simple_statements();
        }
        if !self.eat(&Tok::Indent) {
            return self.error("expected an indented block");
        }
        let mut body = Vec::new();
        while !self.eat(&Tok::Dedent) {
            if self.at(&Tok::Eof) {
                break;
            }
            if self.eat(&Tok::Newline) {
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(body)
    }

    fn params(&mut self, closing: &str) -> PyResult<Vec<Param>> {
        let mut params: Vec<Param> = Vec::new();
        while !self.at_op(closing) {
            let kind = if self.eat_op("**") {
                ParamKind::KwArgs
            } else if self.eat_op("*") {
                if self.at_op(",") {
                    // bare `*` marks keyword-only parameters
                    self.advance();
                    continue;
                }
                ParamKind::VarArgs
            } else if self.eat_op("/") {
                if !self.eat_op(",") {
                    break;
                }
                continue;
            } else {
                ParamKind::Normal
            };
            let name = self.ident()?;
            if closing == ")" && self.eat_op(":") {
                self.expression()?;
            }
            let default = if self.eat_op("=") { Some(self.expression()?) } else { None };
            if params.iter().any(|p| p.name == name) {
                return self.error(format!("duplicate argument '{name}' in function definition"));
            }
            params.push(Param { name, default, kind });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn function_def(&mut self) -> PyResult<StmtKind> {
        let line = self.line();
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let params = self.params(")")?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            // annotations are not evaluated
            self.expression()?;
        }
        let body = self.block()?;
        Ok(StmtKind::FunctionDef(Rc::new(FunctionDef {
            name,
            params,
            body: Rc::new(body),
            line,
        })))
    }

    fn if_stmt(&mut self) -> PyResult<StmtKind> {
        self.advance();
        let mut branches = vec![(self.named_expression()?, self.block()?)];
        let mut orelse = Vec::new();
        loop {
            if self.eat_kw("elif") {
                branches.push((self.named_expression()?, self.block()?));
            } else if self.eat_kw("else") {
                orelse = self.block()?;
                break;
            } else {
                break;
            }
        }
        Ok(StmtKind::If(branches, orelse))
    }

    fn for_stmt(&mut self) -> PyResult<StmtKind> {
        self.advance();
        let target_expr = self.target_list()?;
        let target = self.to_target(target_expr)?;
        self.expect_kw("in")?;
        let iter = self.expr_or_tuple()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        Ok(StmtKind::For {
            target,
            iter,
            body,
            orelse,
        })
    }

    /// `a, (b, c)` in for-loops and comprehensions; stops before `in`.
    fn target_list(&mut self) -> PyResult<Expr> {
        let mut items = vec![self.bitor()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.at_kw("in") {
                break;
            }
            items.push(self.bitor()?);
        }
        Ok(if tuple { Expr::Tuple(items) } else { items.pop().unwrap() })
    }

    fn while_stmt(&mut self) -> PyResult<StmtKind> {
        self.advance();
        let cond = self.named_expression()?;
        let body = self.block()?;
        if self.at_kw("else") {
            return self.error("while-else is not supported");
        }
        Ok(StmtKind::While(cond, body))
    }

    fn try_stmt(&mut self) -> PyResult<StmtKind> {
        self.advance();
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.eat_kw("except") {
            let (class, name) = if self.at_op(":") {
                (None, None)
            } else {
                let class = self.expression()?;
                let class = if self.at_op(",") {
                    let mut items = vec![class];
                    while self.eat_op(",") {
                        items.push(self.expression()?);
                    }
                    Expr::Tuple(items)
                } else {
                    class
                };
                let name = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                (Some(class), name)
            };
            let body = self.block()?;
            handlers.push(ExceptHandler { class, name, body });
        }
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        let finally = if self.eat_kw("finally") { self.block()? } else { Vec::new() };
        if handlers.is_empty() && finally.is_empty() {
            return self.error("expected 'except' or 'finally' block");
        }
        Ok(StmtKind::Try {
            body,
            handlers,
            orelse,
            finally,
        })
    }

    // ---- expressions ----

    fn expr_or_tuple(&mut self) -> PyResult<Expr> {
        let first = self.expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.expression_ends() {
                break;
            }
            items.push(self.expression()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn expr_or_tuple_with_star(&mut self) -> PyResult<Expr> {
        let item = |p: &mut Parser| -> PyResult<Expr> {
            if p.eat_op("*") {
                Ok(Expr::Starred(Box::new(p.bitor()?)))
            } else {
                p.expression()
            }
        };
        let first = item(self)?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.expression_ends() {
                break;
            }
            items.push(item(self)?);
        }
        Ok(Expr::Tuple(items))
    }

    fn expression_ends(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent)
            || matches!(self.peek(), Tok::Op(o) if matches!(*o, "=" | ")" | "]" | "}" | ":" | ";"))
    }

    fn named_expression(&mut self) -> PyResult<Expr> {
        if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op(":=")) {
            return self.error("assignment expressions are not supported");
        }
        self.expression()
    }

    fn expression(&mut self) -> PyResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.or_test()?;
        if self.at_kw("if") {
            // only a conditional expression when an `else` follows
            let save = self.pos;
            self.advance();
            let cond = self.or_test()?;
            if self.eat_kw("else") {
                let orelse = self.expression()?;
                return Ok(Expr::IfElse {
                    cond: Box::new(cond),
                    then: Box::new(body),
                    orelse: Box::new(orelse),
                });
            }
            self.pos = save;
        }
        Ok(body)
    }

    fn expression_nocond(&mut self) -> PyResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        self.or_test()
    }

    fn lambda(&mut self) -> PyResult<Expr> {
        self.expect_kw("lambda")?;
        let params = self.params(":")?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr::Lambda(Rc::new(params), Rc::new(body)))
    }

    fn or_test(&mut self) -> PyResult<Expr> {
        let mut left = self.and_test()?;
        while self.eat_kw("or") {
            let right = self.and_test()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_test(&mut self) -> PyResult<Expr> {
        let mut left = self.not_test()?;
        while self.eat_kw("and") {
            let right = self.not_test()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_test(&mut self) -> PyResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PyResult<Expr> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        loop {
            let op = match self.peek() {
                Tok::Op("==") => CmpOp::Eq,
                Tok::Op("!=") => CmpOp::NotEq,
                Tok::Op("<") => CmpOp::Lt,
                Tok::Op("<=") => CmpOp::LtE,
                Tok::Op(">") => CmpOp::Gt,
                Tok::Op(">=") => CmpOp::GtE,
                Tok::Name(n) if n == "in" => CmpOp::In,
                Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                    self.advance();
                    CmpOp::NotIn
                }
                Tok::Name(n) if n == "is" => {
                    if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                        self.advance();
                        CmpOp::IsNot
                    } else {
                        CmpOp::Is
                    }
                }
                _ => break,
            };
            self.advance();
            ops.push((op, self.bitor()?));
        }
        Ok(if ops.is_empty() {
            left
        } else {
            Expr::Compare(Box::new(left), ops)
        })
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Parser) -> PyResult<Expr>,
    ) -> PyResult<Expr> {
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.at_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    left = Expr::Binary(*op, Box::new(left), Box::new(right));
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn bitor(&mut self) -> PyResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Parser::bitxor)
    }

    fn bitxor(&mut self) -> PyResult<Expr> {
        self.binary_level(&[("^", BinOp::BitXor)], Parser::bitand)
    }

    fn bitand(&mut self) -> PyResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Parser::shift)
    }

    fn shift(&mut self) -> PyResult<Expr> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Parser::arith)
    }

    fn arith(&mut self) -> PyResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Parser::term)
    }

    fn term(&mut self) -> PyResult<Expr> {
        self.binary_level(
            &[
                ("*", BinOp::Mul),
                ("/", BinOp::Div),
                ("//", BinOp::FloorDiv),
                ("%", BinOp::Mod),
            ],
            Parser::factor,
        )
    }

    fn factor(&mut self) -> PyResult<Expr> {
        let op = match self.peek() {
            Tok::Op("-") => UnaryOp::Neg,
            Tok::Op("+") => UnaryOp::Pos,
            Tok::Op("~") => UnaryOp::Invert,
            _ => return self.power(),
        };
        self.advance();
        let operand = self.factor()?;
        // fold negative literals so `-1` stays a literal
        if let (UnaryOp::Neg, Expr::Literal(Literal::Int(i))) = (op, &operand) {
            return Ok(Expr::Literal(Literal::Int(-i)));
        }
        if let (UnaryOp::Neg, Expr::Literal(Literal::Float(f))) = (op, &operand) {
            return Ok(Expr::Literal(Literal::Float(-f)));
        }
        Ok(Expr::Unary(op, Box::new(operand)))
    }

    fn power(&mut self) -> PyResult<Expr> {
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PyResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let name = match self.advance() {
                    Tok::Name(n) => n,
                    _ => return self.error("expected attribute name"),
                };
                e = Expr::Attribute(Box::new(e), name);
            } else if self.at_op("(") {
                self.advance();
                let args = self.call_args()?;
                self.expect_op(")")?;
                e = Expr::Call(Box::new(e), args);
            } else if self.at_op("[") {
                self.advance();
                let idx = self.subscript_list()?;
                self.expect_op("]")?;
                e = Expr::Subscript(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PyResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("**") {
                args.push(Arg::DoubleStar(self.expression()?));
            } else if self.eat_op("*") {
                args.push(Arg::Star(self.expression()?));
            } else if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let name = self.ident()?;
                self.advance();
                args.push(Arg::Keyword(name, self.expression()?));
            } else {
                let e = self.expression()?;
                if self.at_kw("for") {
                    let comps = self.comprehensions()?;
                    args.push(Arg::Positional(Expr::ListComp(Box::new(e), comps)));
                } else {
                    args.push(Arg::Positional(e));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn subscript_list(&mut self) -> PyResult<Expr> {
        let first = self.subscript_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.subscript_item()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn subscript_item(&mut self) -> PyResult<Expr> {
        let lower = if self.at_op(":") { None } else { Some(self.expression()?) };
        if !self.at_op(":") {
            return lower.ok_or_else(|| Exception::syntax(self.line(), "empty subscript"));
        }
        self.advance();
        let bound = |p: &mut Parser| -> PyResult<Option<Box<Expr>>> {
            if p.at_op(":") || p.at_op("]") || p.at_op(",") {
                Ok(None)
            } else {
                Ok(Some(Box::new(p.expression()?)))
            }
        };
        let upper = bound(self)?;
        let step = if self.eat_op(":") { bound(self)? } else { None };
        Ok(Expr::Slice(lower.map(Box::new), upper, step))
    }

    fn comprehensions(&mut self) -> PyResult<Vec<Comprehension>> {
        let mut comps = Vec::new();
        while self.eat_kw("for") {
            let target_expr = self.target_list()?;
            let target = self.to_target(target_expr)?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut conditions = Vec::new();
            while self.eat_kw("if") {
                conditions.push(self.expression_nocond()?);
            }
            comps.push(Comprehension {
                target,
                iter,
                conditions,
            });
        }
        Ok(comps)
    }

    fn atom(&mut self) -> PyResult<Expr> {
        let line = self.line();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Literal(Literal::Int(i)))
            }
            Tok::Float(f) => {
                self.advance();
                Ok(Expr::Literal(Literal::Float(f)))
            }
            Tok::Str(_) | Tok::FStr(_) => {
                let mut parts: Vec<FStringPart> = Vec::new();
                let mut formatted = false;
                while let Tok::Str(_) | Tok::FStr(_) = self.peek() {
                    match self.advance() {
                        Tok::Str(s) => parts.push(FStringPart::Literal(s)),
                        Tok::FStr(s) => {
                            formatted = true;
                            parts.extend(parse_fstring(&s, line)?);
                        }
                        _ => unreachable!(),
                    }
                }
                if formatted {
                    Ok(Expr::FString(parts))
                } else {
                    let text: String = parts
                        .into_iter()
                        .map(|p| match p {
                            FStringPart::Literal(s) => s,
                            FStringPart::Expr { .. } => unreachable!(),
                        })
                        .collect();
                    Ok(Expr::Literal(Literal::Str(text.into())))
                }
            }
            Tok::Name(n) => match n.as_str() {
                "None" => {
                    self.advance();
                    Ok(Expr::Literal(Literal::None))
                }
                "True" => {
                    self.advance();
                    Ok(Expr::Literal(Literal::Bool(true)))
                }
                "False" => {
                    self.advance();
                    Ok(Expr::Literal(Literal::Bool(false)))
                }
                "lambda" => self.lambda(),
                _ if KEYWORDS.contains(&n.as_str()) => self.error(format!("invalid syntax near '{n}'")),
                _ => {
                    self.advance();
                    Ok(Expr::Name(n))
                }
            },
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.star_or_expression()?;
                if self.at_kw("for") {
                    let comps = self.comprehensions()?;
                    self.expect_op(")")?;
                    return Ok(Expr::ListComp(Box::new(first), comps));
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.star_or_expression()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.star_or_expression()?;
                if self.at_kw("for") {
                    let comps = self.comprehensions()?;
                    self.expect_op("]")?;
                    return Ok(Expr::ListComp(Box::new(first), comps));
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    items.push(self.star_or_expression()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => {
                self.advance();
                self.dict_or_set()
            }
            Tok::Op("...") => {
                self.advance();
                Ok(Expr::Literal(Literal::None))
            }
            _ => self.error(format!("invalid syntax near {}", self.describe())),
        }
    }

    fn star_or_expression(&mut self) -> PyResult<Expr> {
        if self.eat_op("*") {
            return Ok(Expr::Starred(Box::new(self.bitor()?)));
        }
        self.expression()
    }

    fn dict_or_set(&mut self) -> PyResult<Expr> {
        if self.eat_op("}") {
            return Ok(Expr::Dict(Vec::new()));
        }
        if self.eat_op("**") {
            let first = self.bitor()?;
            return self.dict_rest(vec![(None, first)]);
        }
        let first = self.star_or_expression()?;
        if self.eat_op(":") {
            let value = self.expression()?;
            if self.at_kw("for") {
                let comps = self.comprehensions()?;
                self.expect_op("}")?;
                return Ok(Expr::DictComp(Box::new(first), Box::new(value), comps));
            }
            return self.dict_rest(vec![(Some(first), value)]);
        }
        if self.at_kw("for") {
            let comps = self.comprehensions()?;
            self.expect_op("}")?;
            return Ok(Expr::SetComp(Box::new(first), comps));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(self.star_or_expression()?);
        }
        self.expect_op("}")?;
        Ok(Expr::Set(items))
    }

    fn dict_rest(&mut self, mut entries: Vec<(Option<Expr>, Expr)>) -> PyResult<Expr> {
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            if self.eat_op("**") {
                entries.push((None, self.bitor()?));
                continue;
            }
            let key = self.expression()?;
            self.expect_op(":")?;
            entries.push((Some(key), self.expression()?));
        }
        self.expect_op("}")?;
        Ok(Expr::Dict(entries))
    }
}

/// Splits an f-string body into literal text and `{expr!conv:spec}` fields.
fn parse_fstring(body: &str, line: usize) -> PyResult<Vec<FStringPart>> {
    let chars: Vec<char> = body.chars().collect();
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            lit.push('{');
            i += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            lit.push('}');
            i += 2;
            continue;
        }
        if c == '}' {
            return Err(Exception::syntax(line, "f-string: single '}' is not allowed"));
        }
        if c != '{' {
            lit.push(c);
            i += 1;
            continue;
        }
        if !lit.is_empty() {
            parts.push(FStringPart::Literal(std::mem::take(&mut lit)));
        }
        i += 1;
        let mut depth = 0usize;
        let mut quote: Option<char> = None;
        let start = i;
        let mut expr_end = None;
        let mut conversion = None;
        while i < chars.len() {
            let ch = chars[i];
            if let Some(q) = quote {
                if ch == q {
                    quote = None;
                }
            } else if ch == '\'' || ch == '"' {
                quote = Some(ch);
            } else if matches!(ch, '(' | '[' | '{') {
                depth += 1;
            } else if matches!(ch, ')' | ']') || (ch == '}' && depth > 0) {
                depth -= 1;
            } else if depth == 0 && ch == '!' && chars.get(i + 1) != Some(&'=') {
                expr_end.get_or_insert(i);
                conversion = chars.get(i + 1).copied();
                i += 2;
                continue;
            } else if depth == 0 && (ch == ':' || ch == '}') {
                break;
            }
            i += 1;
        }
        let end = expr_end.unwrap_or(i);
        let expr_src: String = chars[start..end].iter().collect();
        let mut spec = String::new();
        if chars.get(i) == Some(&':') {
            i += 1;
            while i < chars.len() && chars[i] != '}' {
                spec.push(chars[i]);
                i += 1;
            }
        }
        if chars.get(i) != Some(&'}') {
            return Err(Exception::syntax(line, "f-string: expecting '}'"));
        }
        i += 1;
        if expr_src.trim().is_empty() {
            return Err(Exception::syntax(line, "f-string: empty expression not allowed"));
        }
        let expr = parse_expression(expr_src.trim(), line)?;
        parts.push(FStringPart::Expr {
            expr,
            conversion,
            spec,
        });
    }
    if !lit.is_empty() {
        parts.push(FStringPart::Literal(lit));
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_function_with_docstring_and_annotation() {
        let src = "import geopandas as gpd\n\ndef execute(df_1, df_2) -> GeoDataFrame:\n    \"\"\"Doc.\"\"\"\n    df_1['Flooded'] = df_1.intersects(df_2.unary_union)\n    return df_1\n";
        let module = parse_module(src).unwrap();
        assert_eq!(module.len(), 2);
        let StmtKind::FunctionDef(def) = &module[1].kind else {
            panic!("expected def")
        };
        assert_eq!(def.params.len(), 2);
        assert_eq!(def.body.len(), 3);
        assert_eq!(def.line, 3);
    }

    #[test]
    fn precedence() {
        let e = parse_expression("1 + 2 * 3 ** 2", 1).unwrap();
        let Expr::Binary(BinOp::Add, _, rhs) = e else {
            panic!()
        };
        assert!(matches!(*rhs, Expr::Binary(BinOp::Mul, _, _)));
        let e = parse_expression("(a > 1) & ~(b == 2)", 1).unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::BitAnd, _, _)));
    }

    #[test]
    fn comprehensions_and_conditionals() {
        parse_expression("[x * 2 for x in xs if x > 1]", 1).unwrap();
        parse_expression("{k: v for k, v in d.items()}", 1).unwrap();
        parse_expression("a if b else c", 1).unwrap();
        parse_expression("sum(x for x in xs)", 1).unwrap();
        parse_expression("lambda f: {'color': 'red'}", 1).unwrap();
    }

    #[test]
    fn fstrings() {
        let e = parse_expression("f'{name!r}: {value:.2f} {{literal}}'", 1).unwrap();
        let Expr::FString(parts) = e else { panic!() };
        assert_eq!(parts.len(), 4);
        assert!(matches!(&parts[2], FStringPart::Expr { spec, .. } if spec == ".2f"));
        assert_eq!(parts[3], FStringPart::Literal(" {literal}".into()));
    }

    #[test]
    fn slices_and_tuples_in_subscripts() {
        parse_expression("df.loc[mask, 'col']", 1).unwrap();
        parse_expression("xs[1:-1:2]", 1).unwrap();
        parse_expression("xs[:3]", 1).unwrap();
    }

    #[test]
    fn statements() {
        let src = "fig, ax = plt.subplots(figsize=(10, 8))\nfor i, row in enumerate(rows):\n    if row > 2:\n        continue\n    elif row < 0: break\n    else:\n        total += row\ntry:\n    x = 1\nexcept (KeyError, ValueError) as e:\n    pass\nfinally:\n    y = 2\n";
        let module = parse_module(src).unwrap();
        assert_eq!(module.len(), 3);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = parse_module("x = 1\ndef f(:\n    pass\n").unwrap_err();
        assert_eq!(err.kind, "SyntaxError");
        assert_eq!(err.line(), Some(2));
        assert!(parse_module("class A:\n    pass\n").is_err());
    }
}
