//! Tree-walking evaluator.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::ast::*;
use crate::builtins;
use crate::exception::{Exception, PyResult, ISOLATION_ERROR};
use crate::libs;
use crate::libs::plot::PyplotState;
use crate::policy::{FileSink, Policy};
use crate::value::*;

enum Flow {
    Normal,
    Return(Value),
    Break,
    Continue,
}

/// One evaluation context. Every run gets a fresh interpreter, so nothing
/// leaks between runs.
pub struct Interp {
    pub policy: Policy,
    pub sink: Rc<dyn FileSink>,
    pub stdout: String,
    pub pyplot: PyplotState,
    depth: usize,
    steps: u64,
    handling: Vec<Exception>,
    modules: HashMap<String, Value>,
}

impl Interp {
    /// Writes through the sink. Paths that leave the working directory are
    /// a `PermissionError`; other sink failures are an `OSError`.
    pub fn write_file(&mut self, path: &str, contents: &[u8]) -> PyResult<()> {
        if let Err(e) = crate::policy::check_relative(path) {
            return Err(Exception::new("PermissionError", e));
        }
        self.sink.write(path, contents).map_err(|e| Exception::new("OSError", e))
    }

    pub fn new(policy: Policy, sink: Rc<dyn FileSink>) -> Self {
        Interp {
            policy,
            sink,
            stdout: String::new(),
            pyplot: PyplotState::default(),
            depth: 0,
            steps: 0,
            handling: Vec::new(),
            modules: HashMap::new(),
        }
    }

    /// Executes a module body in `scope`.
    pub fn exec_module(&mut self, body: &[Stmt], scope: &Rc<Scope>) -> PyResult<()> {
        match self.exec_block(body, scope) {
            Ok(Flow::Normal) => Ok(()),
            Ok(Flow::Return(_)) => Err(Exception::syntax(0, "'return' outside function")),
            Ok(_) => Err(Exception::syntax(0, "'break' or 'continue' outside loop")),
            Err(mut e) => {
                e.push_frame("<module>");
                Err(e)
            }
        }
    }

    fn tick(&mut self) -> PyResult<()> {
        self.steps += 1;
        if self.steps > self.policy.step_limit {
            return Err(Exception::new(
                "TimeoutError",
                format!("evaluation exceeded {} steps", self.policy.step_limit),
            ));
        }
        Ok(())
    }

    fn exec_block(&mut self, body: &[Stmt], scope: &Rc<Scope>) -> PyResult<Flow> {
        for stmt in body {
            match self.exec_stmt(stmt, scope) {
                Ok(Flow::Normal) => {}
                Ok(flow) => return Ok(flow),
                Err(mut e) => {
                    e.note_line(stmt.line);
                    return Err(e);
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, scope: &Rc<Scope>) -> PyResult<Flow> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::Expr(e) => {
                self.eval(e, scope)?;
            }
            StmtKind::Assign(targets, value) => {
                let v = self.eval(value, scope)?;
                for t in targets {
                    self.assign(t, v.clone(), scope)?;
                }
            }
            StmtKind::AugAssign(target, op, value) => {
                let current = match target {
                    Target::Name(n) => self.lookup(n, scope)?,
                    Target::Attribute(obj, attr) => {
                        let o = self.eval(obj, scope)?;
                        libs::get_attr(self, &o, attr)?
                    }
                    Target::Subscript(obj, idx) => {
                        let o = self.eval(obj, scope)?;
                        let i = self.eval(idx, scope)?;
                        libs::get_item(self, &o, &i)?
                    }
                    _ => return Err(Exception::syntax(stmt.line, "illegal augmented assignment")),
                };
                let rhs = self.eval(value, scope)?;
                let result = match (&current, op) {
                    // in-place list extension keeps aliasing semantics
                    (Value::List(l), BinOp::Add) => {
                        let items = iterate(&rhs)?;
                        l.borrow_mut().extend(items);
                        current.clone()
                    }
                    _ => self.binary(*op, &current, &rhs)?,
                };
                self.assign(target, result, scope)?;
            }
            StmtKind::Import(names) => {
                for (module, alias) in names {
                    let value = self.import(module)?;
                    match alias {
                        Some(a) => self.set_var(a, value, scope),
                        None => {
                            let root = module.split('.').next().unwrap_or(module);
                            let root_value = self.import(root)?;
                            self.set_var(root, root_value, scope);
                        }
                    }
                }
            }
            StmtKind::ImportFrom(module, names) => {
                if module == "__future__" {
                    self.check_import(module)?;
                    return Ok(Flow::Normal);
                }
                let m = self.import(module)?;
                for (name, alias) in names {
                    if name == "*" {
                        return Err(Exception::syntax(stmt.line, "wildcard imports are not supported"));
                    }
                    let value = match libs::get_attr(self, &m, name) {
                        Ok(v) => v,
                        Err(_) => self
                            .import(&format!("{module}.{name}"))
                            .map_err(|_| {
                                Exception::new(
                                    "ImportError",
                                    format!("cannot import name '{name}' from '{module}'"),
                                )
                            })?,
                    };
                    self.set_var(alias.as_ref().unwrap_or(name), value, scope);
                }
            }
            StmtKind::FunctionDef(def) => {
                let defaults = def
                    .params
                    .iter()
                    .map(|p| p.default.as_ref().map(|d| self.eval(d, scope)).transpose())
                    .collect::<PyResult<Vec<_>>>()?;
                let f = Function {
                    name: def.name.clone(),
                    params: Rc::new(def.params.clone()),
                    defaults,
                    body: FunctionBody::Def(def.clone()),
                    closure: scope.clone(),
                };
                self.set_var(&def.name, Value::Function(Rc::new(f)), scope);
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e, scope)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::If(branches, orelse) => {
                for (cond, body) in branches {
                    if self.eval(cond, scope)?.truthy()? {
                        return self.exec_block(body, scope);
                    }
                }
                return self.exec_block(orelse, scope);
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
            } => {
                let iterable = self.eval(iter, scope)?;
                for item in iterate(&iterable)? {
                    self.assign(target, item, scope)?;
                    match self.exec_block(body, scope)? {
                        Flow::Break => return Ok(Flow::Normal),
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                return self.exec_block(orelse, scope);
            }
            StmtKind::While(cond, body) => {
                while self.eval(cond, scope)?.truthy()? {
                    self.tick()?;
                    match self.exec_block(body, scope)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finally,
            } => {
                let outcome = match self.exec_block(body, scope) {
                    Ok(Flow::Normal) => self.exec_block(orelse, scope),
                    Ok(flow) => Ok(flow),
                    Err(e) => self.handle(e, handlers, scope),
                };
                if !finally.is_empty() {
                    match self.exec_block(finally, scope)? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                }
                return outcome;
            }
            StmtKind::Raise(value) => {
                let exc = match value {
                    None => self
                        .handling
                        .last()
                        .cloned()
                        .ok_or_else(|| Exception::new("RuntimeError", "No active exception to reraise"))?,
                    Some(e) => {
                        let v = self.eval(e, scope)?;
                        self.to_exception(v)?
                    }
                };
                return Err(exc);
            }
            StmtKind::Assert(cond, msg) => {
                if !self.eval(cond, scope)?.truthy()? {
                    let message = match msg {
                        Some(m) => to_str(&self.eval(m, scope)?),
                        None => String::new(),
                    };
                    return Err(Exception::new("AssertionError", message));
                }
            }
            StmtKind::Delete(targets) => {
                for t in targets {
                    self.delete(t, scope)?;
                }
            }
            StmtKind::Global(names) => {
                scope.globals_decl.borrow_mut().extend(names.iter().cloned());
            }
            StmtKind::Pass => {}
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
        }
        Ok(Flow::Normal)
    }

    fn handle(&mut self, exc: Exception, handlers: &[ExceptHandler], scope: &Rc<Scope>) -> PyResult<Flow> {
        for h in handlers {
            let matched = match &h.class {
                None => exc.kind != ISOLATION_ERROR,
                Some(class) => {
                    let c = self.eval(class, scope)?;
                    let classes = match &c {
                        Value::Tuple(items) => (**items).clone(),
                        other => vec![other.clone()],
                    };
                    classes.iter().any(|c| match c {
                        Value::Type(t) => builtins::exception_matches(&exc.kind, t.name),
                        _ => false,
                    })
                }
            };
            if matched {
                if let Some(name) = &h.name {
                    self.set_var(name, Value::Exception(Rc::new(exc.clone())), scope);
                }
                self.handling.push(exc);
                let result = self.exec_block(&h.body, scope);
                self.handling.pop();
                return result;
            }
        }
        Err(exc)
    }

    fn to_exception(&mut self, v: Value) -> PyResult<Exception> {
        match v {
            Value::Exception(e) => Ok((*e).clone()),
            Value::Type(t) if t.exception => Ok(Exception::new(t.name, "")),
            other => Err(Exception::type_error(format!(
                "exceptions must derive from BaseException, not {}",
                other.type_name()
            ))),
        }
    }

    fn check_import(&self, module: &str) -> PyResult<()> {
        let root = module.split('.').next().unwrap_or(module);
        if !self.policy.allows(root) {
            return Err(Exception::new(
                ISOLATION_ERROR,
                format!("import of '{module}' is not permitted; allowed tools: {}", self.policy.describe()),
            ));
        }
        Ok(())
    }

    pub fn import(&mut self, module: &str) -> PyResult<Value> {
        self.check_import(module)?;
        if let Some(m) = self.modules.get(module) {
            return Ok(m.clone());
        }
        if let Some(source) = self.policy.user_modules.get(module).cloned() {
            let body = crate::parser::parse_module(&source)?;
            let scope = Scope::root();
            self.exec_module(&body, &scope)?;
            let m = Value::Module(Rc::new(Module::User { name: module.to_string(), scope }));
            self.modules.insert(module.to_string(), m.clone());
            return Ok(m);
        }
        let m = libs::import(module)
            .ok_or_else(|| Exception::new("ModuleNotFoundError", format!("No module named '{module}'")))?;
        self.modules.insert(module.to_string(), m.clone());
        Ok(m)
    }

    // ---- variables ----

    fn lookup(&self, name: &str, scope: &Rc<Scope>) -> PyResult<Value> {
        if let Some(v) = scope.lookup(name) {
            return Ok(v);
        }
        builtins::lookup(name).ok_or_else(|| Exception::name_error(name))
    }

    fn set_var(&self, name: &str, value: Value, scope: &Rc<Scope>) {
        if scope.globals_decl.borrow().iter().any(|n| n == name) {
            scope.global_root().vars.borrow_mut().insert(name.to_string(), value);
        } else {
            scope.vars.borrow_mut().insert(name.to_string(), value);
        }
    }

    fn assign(&mut self, target: &Target, value: Value, scope: &Rc<Scope>) -> PyResult<()> {
        match target {
            Target::Name(n) => self.set_var(n, value, scope),
            Target::Attribute(obj, attr) => {
                let o = self.eval(obj, scope)?;
                libs::set_attr(self, &o, attr, value)?;
            }
            Target::Subscript(obj, idx) => {
                let o = self.eval(obj, scope)?;
                let i = self.eval(idx, scope)?;
                libs::set_item(self, &o, &i, value)?;
            }
            Target::Tuple(targets) => {
                let items = iterate(&value)?;
                let star = targets.iter().position(|t| matches!(t, Target::Starred(_)));
                match star {
                    None => {
                        if items.len() != targets.len() {
                            return Err(Exception::value_error(if items.len() > targets.len() {
                                format!("too many values to unpack (expected {})", targets.len())
                            } else {
                                format!(
                                    "not enough values to unpack (expected {}, got {})",
                                    targets.len(),
                                    items.len()
                                )
                            }));
                        }
                        for (t, v) in targets.iter().zip(items) {
                            self.assign(t, v, scope)?;
                        }
                    }
                    Some(pos) => {
                        let after = targets.len() - pos - 1;
                        if items.len() < pos + after {
                            return Err(Exception::value_error("not enough values to unpack"));
                        }
                        for (t, v) in targets[..pos].iter().zip(&items) {
                            self.assign(t, v.clone(), scope)?;
                        }
                        let mid = items[pos..items.len() - after].to_vec();
                        if let Target::Starred(inner) = &targets[pos] {
                            self.assign(inner, Value::list(mid), scope)?;
                        }
                        for (t, v) in targets[pos + 1..].iter().zip(&items[items.len() - after..]) {
                            self.assign(t, v.clone(), scope)?;
                        }
                    }
                }
            }
            Target::Starred(_) => {
                return Err(Exception::syntax(0, "starred assignment target must be in a list or tuple"))
            }
        }
        Ok(())
    }

    fn delete(&mut self, target: &Target, scope: &Rc<Scope>) -> PyResult<()> {
        match target {
            Target::Name(n) => {
                if scope.vars.borrow_mut().remove(n).is_none() {
                    return Err(Exception::name_error(n));
                }
            }
            Target::Subscript(obj, idx) => {
                let o = self.eval(obj, scope)?;
                let i = self.eval(idx, scope)?;
                libs::del_item(self, &o, &i)?;
            }
            Target::Tuple(ts) => {
                for t in ts {
                    self.delete(t, scope)?;
                }
            }
            _ => return Err(Exception::syntax(0, "cannot delete target")),
        }
        Ok(())
    }

    // ---- expressions ----

    pub fn eval(&mut self, expr: &Expr, scope: &Rc<Scope>) -> PyResult<Value> {
        match expr {
            Expr::Literal(lit) => Ok(match lit {
                Literal::None => Value::None,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(f) => Value::Float(*f),
                Literal::Str(s) => Value::Str(s.clone()),
            }),
            Expr::FString(parts) => {
                let mut out = String::new();
                for part in parts {
                    match part {
                        FStringPart::Literal(s) => out.push_str(s),
                        FStringPart::Expr { expr, conversion, spec } => {
                            let v = self.eval(expr, scope)?;
                            let v = match conversion {
                                Some('r') => Value::str(repr(&v)),
                                Some('s') => Value::str(to_str(&v)),
                                _ => v,
                            };
                            out.push_str(&format_spec(&v, spec)?);
                        }
                    }
                }
                Ok(Value::str(out))
            }
            Expr::Name(n) => self.lookup(n, scope),
            Expr::Attribute(obj, attr) => {
                let o = self.eval(obj, scope)?;
                libs::get_attr(self, &o, attr)
            }
            Expr::Subscript(obj, idx) => {
                let o = self.eval(obj, scope)?;
                let i = self.eval(idx, scope)?;
                libs::get_item(self, &o, &i)
            }
            Expr::Slice(lo, hi, step) => {
                let mut bound = |e: &Option<Box<Expr>>| -> PyResult<Option<i64>> {
                    match e {
                        None => Ok(None),
                        Some(e) => match self.eval(e, scope)? {
                            Value::None => Ok(None),
                            v => Ok(Some(v.expect_int("slice indices")?)),
                        },
                    }
                };
                Ok(Value::Slice(bound(lo)?, bound(hi)?, bound(step)?))
            }
            Expr::Call(func, args) => {
                let callee = self.eval(func, scope)?;
                let args = self.eval_args(args, scope)?;
                self.call(&callee, args)
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval(l, scope)?;
                let b = self.eval(r, scope)?;
                self.binary(*op, &a, &b)
            }
            Expr::Unary(op, operand) => {
                let v = self.eval(operand, scope)?;
                self.unary(*op, &v)
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(first, scope)?;
                let mut result = Value::Bool(true);
                for (op, right) in rest {
                    let r = self.eval(right, scope)?;
                    result = self.compare(*op, &left, &r)?;
                    if rest.len() > 1 && !result.truthy()? {
                        return Ok(result);
                    }
                    left = r;
                }
                Ok(result)
            }
            Expr::And(a, b) => {
                let l = self.eval(a, scope)?;
                if !l.truthy()? {
                    return Ok(l);
                }
                self.eval(b, scope)
            }
            Expr::Or(a, b) => {
                let l = self.eval(a, scope)?;
                if l.truthy()? {
                    return Ok(l);
                }
                self.eval(b, scope)
            }
            Expr::IfElse { cond, then, orelse } => {
                if self.eval(cond, scope)?.truthy()? {
                    self.eval(then, scope)
                } else {
                    self.eval(orelse, scope)
                }
            }
            Expr::List(items) => Ok(Value::list(self.eval_items(items, scope)?)),
            Expr::Tuple(items) => Ok(Value::tuple(self.eval_items(items, scope)?)),
            Expr::Set(items) => {
                let items = self.eval_items(items, scope)?;
                Ok(builtins::make_set(items))
            }
            Expr::Dict(entries) => {
                let mut d = Dict::default();
                for (k, v) in entries {
                    match k {
                        Some(k) => {
                            let key = self.eval(k, scope)?;
                            let value = self.eval(v, scope)?;
                            d.insert(key, value);
                        }
                        None => match self.eval(v, scope)? {
                            Value::Dict(other) => {
                                for (k, v) in other.borrow().entries.iter() {
                                    d.insert(k.clone(), v.clone());
                                }
                            }
                            other => {
                                return Err(Exception::type_error(format!(
                                    "'{}' object is not a mapping",
                                    other.type_name()
                                )))
                            }
                        },
                    }
                }
                Ok(Value::Dict(Rc::new(RefCell::new(d))))
            }
            Expr::ListComp(elt, comps) => {
                let mut out = Vec::new();
                let inner = Scope::child(scope);
                self.comprehension(comps, &inner, &mut |me, s| {
                    out.push(me.eval(elt, s)?);
                    Ok(())
                })?;
                Ok(Value::list(out))
            }
            Expr::SetComp(elt, comps) => {
                let mut out = Vec::new();
                let inner = Scope::child(scope);
                self.comprehension(comps, &inner, &mut |me, s| {
                    out.push(me.eval(elt, s)?);
                    Ok(())
                })?;
                Ok(builtins::make_set(out))
            }
            Expr::DictComp(key, value, comps) => {
                let mut d = Dict::default();
                let inner = Scope::child(scope);
                self.comprehension(comps, &inner, &mut |me, s| {
                    let k = me.eval(key, s)?;
                    let v = me.eval(value, s)?;
                    d.insert(k, v);
                    Ok(())
                })?;
                Ok(Value::Dict(Rc::new(RefCell::new(d))))
            }
            Expr::Lambda(params, body) => {
                let defaults = params
                    .iter()
                    .map(|p| p.default.as_ref().map(|d| self.eval(d, scope)).transpose())
                    .collect::<PyResult<Vec<_>>>()?;
                Ok(Value::Function(Rc::new(Function {
                    name: "<lambda>".into(),
                    params: params.clone(),
                    defaults,
                    body: FunctionBody::Lambda(body.clone()),
                    closure: scope.clone(),
                })))
            }
            Expr::Starred(_) => Err(Exception::syntax(0, "can't use starred expression here")),
        }
    }

    fn eval_items(&mut self, items: &[Expr], scope: &Rc<Scope>) -> PyResult<Vec<Value>> {
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Expr::Starred(inner) => {
                    let v = self.eval(inner, scope)?;
                    out.extend(iterate(&v)?);
                }
                e => out.push(self.eval(e, scope)?),
            }
        }
        Ok(out)
    }

    fn comprehension(
        &mut self,
        comps: &[Comprehension],
        scope: &Rc<Scope>,
        emit: &mut dyn FnMut(&mut Interp, &Rc<Scope>) -> PyResult<()>,
    ) -> PyResult<()> {
        let Some((first, rest)) = comps.split_first() else {
            return emit(self, scope);
        };
        let iterable = self.eval(&first.iter, scope)?;
        'items: for item in iterate(&iterable)? {
            self.tick()?;
            self.assign(&first.target, item, scope)?;
            for cond in &first.conditions {
                if !self.eval(cond, scope)?.truthy()? {
                    continue 'items;
                }
            }
            self.comprehension(rest, scope, emit)?;
        }
        Ok(())
    }

    fn eval_args(&mut self, args: &[Arg], scope: &Rc<Scope>) -> PyResult<Args> {
        let mut out = Args::default();
        for a in args {
            match a {
                Arg::Positional(e) => out.pos.push(self.eval(e, scope)?),
                Arg::Keyword(k, e) => {
                    let v = self.eval(e, scope)?;
                    out.kw.push((k.clone(), v));
                }
                Arg::Star(e) => {
                    let v = self.eval(e, scope)?;
                    out.pos.extend(iterate(&v)?);
                }
                Arg::DoubleStar(e) => match self.eval(e, scope)? {
                    Value::Dict(d) => {
                        for (k, v) in d.borrow().entries.iter() {
                            out.kw.push((k.expect_str("keywords")?, v.clone()));
                        }
                    }
                    other => {
                        return Err(Exception::type_error(format!(
                            "argument after ** must be a mapping, not {}",
                            other.type_name()
                        )))
                    }
                },
            }
        }
        Ok(out)
    }

    // ---- calls ----

    pub fn call(&mut self, callee: &Value, args: Args) -> PyResult<Value> {
        match callee {
            Value::Function(f) => self.call_function(f, args),
            Value::Builtin(b) => (b.func)(self, args),
            Value::Method(recv, name) => libs::call_method(self, recv, name, args),
            Value::Type(t) => match t.ctor {
                Some(ctor) => ctor(self, args),
                None if t.exception => {
                    let message = args.pos.first().map(to_str).unwrap_or_default();
                    Ok(Value::Exception(Rc::new(Exception::new(t.name, message))))
                }
                None => Err(Exception::type_error(format!("cannot create '{}' instances", t.name))),
            },
            Value::Object(o) => match &**o {
                Object::TypingAlias(_) => Ok(Value::None),
                Object::Colormap(name) => libs::plot::colormap_call(name, args),
                _ => Err(not_callable(callee)),
            },
            _ => Err(not_callable(callee)),
        }
    }

    pub fn call_function(&mut self, f: &Rc<Function>, args: Args) -> PyResult<Value> {
        if self.depth >= self.policy.max_depth {
            return Err(Exception::new("RecursionError", "maximum recursion depth exceeded"));
        }
        let scope = Scope::child(&f.closure);
        self.bind(f, args, &scope)?;
        self.depth += 1;
        let result = stacker::maybe_grow(256 * 1024, 4 * 1024 * 1024, || match &f.body {
            FunctionBody::Def(def) => match self.exec_block(&def.body, &scope) {
                Ok(Flow::Return(v)) => Ok(v),
                Ok(_) => Ok(Value::None),
                Err(e) => Err(e),
            },
            FunctionBody::Lambda(body) => self.eval(body, &scope),
        });
        self.depth -= 1;
        result.map_err(|mut e| {
            e.push_frame(&f.name);
            e
        })
    }

    fn bind(&mut self, f: &Function, args: Args, scope: &Rc<Scope>) -> PyResult<()> {
        let mut vars = scope.vars.borrow_mut();
        let normal: Vec<usize> = f
            .params
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == ParamKind::Normal)
            .map(|(i, _)| i)
            .collect();
        let varargs = f.params.iter().position(|p| p.kind == ParamKind::VarArgs);
        let kwargs = f.params.iter().position(|p| p.kind == ParamKind::KwArgs);
        // positional parameters before `*args`
        let positional_slots: Vec<usize> = match varargs {
            Some(v) => normal.iter().copied().filter(|&i| i < v).collect(),
            None => normal.clone(),
        };
        let mut pos = args.pos.into_iter();
        let mut extra = Vec::new();
        for (n, value) in pos.by_ref().enumerate() {
            match positional_slots.get(n) {
                Some(&slot) => {
                    vars.insert(f.params[slot].name.clone(), value);
                }
                None => extra.push(value),
            }
        }
        if !extra.is_empty() {
            match varargs {
                Some(v) => {
                    vars.insert(f.params[v].name.clone(), Value::tuple(extra));
                }
                None => {
                    return Err(Exception::type_error(format!(
                        "{}() takes {} positional argument{} but {} were given",
                        f.name,
                        positional_slots.len(),
                        if positional_slots.len() == 1 { "" } else { "s" },
                        positional_slots.len() + extra.len()
                    )))
                }
            }
        } else if let Some(v) = varargs {
            vars.insert(f.params[v].name.clone(), Value::tuple(Vec::new()));
        }
        let mut extra_kw = Dict::default();
        for (k, v) in args.kw {
            let slot = normal.iter().find(|&&i| f.params[i].name == k);
            match slot {
                Some(_) if vars.contains_key(&k) => {
                    return Err(Exception::type_error(format!(
                        "{}() got multiple values for argument '{k}'",
                        f.name
                    )))
                }
                Some(_) => {
                    vars.insert(k, v);
                }
                None if kwargs.is_some() => extra_kw.insert(Value::str(&k), v),
                None => {
                    return Err(Exception::type_error(format!(
                        "{}() got an unexpected keyword argument '{k}'",
                        f.name
                    )))
                }
            }
        }
        if let Some(k) = kwargs {
            vars.insert(f.params[k].name.clone(), Value::Dict(Rc::new(RefCell::new(extra_kw))));
        }
        let mut missing = Vec::new();
        for &i in &normal {
            let p = &f.params[i];
            if !vars.contains_key(&p.name) {
                match &f.defaults[i] {
                    Some(d) => {
                        vars.insert(p.name.clone(), d.clone());
                    }
                    None => missing.push(format!("'{}'", p.name)),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Exception::type_error(format!(
                "{}() missing {} required positional argument{}: {}",
                f.name,
                missing.len(),
                if missing.len() == 1 { "" } else { "s" },
                missing.join(" and ")
            )));
        }
        Ok(())
    }

    // ---- operators ----

    pub fn binary(&mut self, op: BinOp, a: &Value, b: &Value) -> PyResult<Value> {
        if matches!(a, Value::Series(_) | Value::Array(_)) || matches!(b, Value::Series(_) | Value::Array(_)) {
            return libs::series::binary(op, a, b);
        }
        if let (Some(x), Some(y)) = (int_like(a), int_like(b)) {
            return int_binary(op, x, y);
        }
        if let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) {
            if !matches!(a, Value::Str(_)) && !matches!(b, Value::Str(_)) {
                return float_binary(op, x, y);
            }
        }
        match (op, a, b) {
            (BinOp::Add, Value::Str(x), Value::Str(y)) => Ok(Value::str(format!("{x}{y}"))),
            (BinOp::Mul, Value::Str(s), n) | (BinOp::Mul, n, Value::Str(s)) if n.as_int().is_some() => {
                Ok(Value::str(s.repeat(n.as_int().unwrap().max(0) as usize)))
            }
            (BinOp::Mod, Value::Str(fmt), args) => builtins::percent_format(fmt, args),
            (BinOp::Add, Value::List(x), Value::List(y)) => {
                let mut items = x.borrow().clone();
                items.extend(y.borrow().iter().cloned());
                Ok(Value::list(items))
            }
            (BinOp::Add, Value::Tuple(x), Value::Tuple(y)) => {
                let mut items = (**x).clone();
                items.extend(y.iter().cloned());
                Ok(Value::tuple(items))
            }
            (BinOp::Mul, Value::List(l), n) | (BinOp::Mul, n, Value::List(l)) if n.as_int().is_some() => {
                let items = l.borrow();
                let times = n.as_int().unwrap().max(0) as usize;
                Ok(Value::list(items.iter().cloned().cycle().take(items.len() * times).collect()))
            }
            (BinOp::BitOr, Value::Set(_), Value::Set(_))
            | (BinOp::BitAnd, Value::Set(_), Value::Set(_))
            | (BinOp::Sub, Value::Set(_), Value::Set(_))
            | (BinOp::BitXor, Value::Set(_), Value::Set(_)) => builtins::set_op(op, a, b),
            (BinOp::BitOr, Value::Dict(x), Value::Dict(y)) => {
                let mut d = x.borrow().clone();
                for (k, v) in y.borrow().entries.iter() {
                    d.insert(k.clone(), v.clone());
                }
                Ok(Value::Dict(Rc::new(RefCell::new(d))))
            }
            (_, Value::Geometry(_), Value::Geometry(_)) => libs::geom::binary(op, a, b),
            _ => Err(Exception::type_error(format!(
                "unsupported operand type(s) for {}: '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ))),
        }
    }

    fn unary(&mut self, op: UnaryOp, v: &Value) -> PyResult<Value> {
        match (op, v) {
            (UnaryOp::Not, v) => Ok(Value::Bool(!v.truthy()?)),
            (_, Value::Series(_)) | (_, Value::Array(_)) => libs::series::unary(op, v),
            (UnaryOp::Neg, v) if int_like(v).is_some() => Ok(Value::Int(-int_like(v).unwrap())),
            (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
            (UnaryOp::Pos, v) if v.as_f64().is_some() => Ok(v.clone()),
            (UnaryOp::Invert, v) if int_like(v).is_some() => Ok(Value::Int(!int_like(v).unwrap())),
            _ => Err(Exception::type_error(format!(
                "bad operand type for unary operator: '{}'",
                v.type_name()
            ))),
        }
    }

    pub fn compare(&mut self, op: CmpOp, a: &Value, b: &Value) -> PyResult<Value> {
        let elementwise = matches!(a, Value::Series(_) | Value::Array(_)) || matches!(b, Value::Series(_) | Value::Array(_));
        if elementwise && !matches!(op, CmpOp::In | CmpOp::NotIn | CmpOp::Is | CmpOp::IsNot) {
            return libs::series::compare(op, a, b);
        }
        Ok(Value::Bool(match op {
            CmpOp::Eq => py_eq(a, b),
            CmpOp::NotEq => !py_eq(a, b),
            CmpOp::Lt => py_cmp(a, b)?.is_lt(),
            CmpOp::LtE => py_cmp(a, b)?.is_le(),
            CmpOp::Gt => py_cmp(a, b)?.is_gt(),
            CmpOp::GtE => py_cmp(a, b)?.is_ge(),
            CmpOp::In => builtins::contains(b, a)?,
            CmpOp::NotIn => !builtins::contains(b, a)?,
            CmpOp::Is => identical(a, b),
            CmpOp::IsNot => !identical(a, b),
        }))
    }
}

fn not_callable(v: &Value) -> Exception {
    Exception::type_error(format!("'{}' object is not callable", v.type_name()))
}

fn identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::List(x), Value::List(y)) => Rc::ptr_eq(x, y),
        (Value::Dict(x), Value::Dict(y)) => Rc::ptr_eq(x, y),
        (Value::None, _) | (_, Value::None) | (Value::Bool(_), _) | (_, Value::Bool(_)) => false,
        _ => py_eq(a, b),
    }
}

fn int_like(v: &Value) -> Option<i64> {
    match v {
        Value::Int(i) => Some(*i),
        Value::Bool(b) => Some(i64::from(*b)),
        _ => None,
    }
}

fn zero_division(what: &str) -> Exception {
    Exception::new("ZeroDivisionError", what.to_string())
}

pub fn int_binary(op: BinOp, x: i64, y: i64) -> PyResult<Value> {
    let overflow = || Exception::new("OverflowError", "integer overflow");
    Ok(match op {
        BinOp::Add => Value::Int(x.checked_add(y).ok_or_else(overflow)?),
        BinOp::Sub => Value::Int(x.checked_sub(y).ok_or_else(overflow)?),
        BinOp::Mul => Value::Int(x.checked_mul(y).ok_or_else(overflow)?),
        BinOp::Div => {
            if y == 0 {
                return Err(zero_division("division by zero"));
            }
            Value::Float(x as f64 / y as f64)
        }
        BinOp::FloorDiv => {
            if y == 0 {
                return Err(zero_division("integer division or modulo by zero"));
            }
            Value::Int(x.div_euclid(y) - i64::from(y < 0 && x.rem_euclid(y) != 0))
        }
        BinOp::Mod => {
            if y == 0 {
                return Err(zero_division("integer division or modulo by zero"));
            }
            let r = x % y;
            Value::Int(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r })
        }
        BinOp::Pow => {
            if y < 0 {
                Value::Float((x as f64).powf(y as f64))
            } else {
                Value::Int(x.checked_pow(u32::try_from(y).map_err(|_| overflow())?).ok_or_else(overflow)?)
            }
        }
        BinOp::BitAnd => Value::Int(x & y),
        BinOp::BitOr => Value::Int(x | y),
        BinOp::BitXor => Value::Int(x ^ y),
        BinOp::LShift => Value::Int(x.checked_shl(y as u32).ok_or_else(overflow)?),
        BinOp::RShift => Value::Int(x >> y.min(63)),
    })
}

pub fn float_binary(op: BinOp, x: f64, y: f64) -> PyResult<Value> {
    Ok(Value::Float(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(zero_division("float division by zero"));
            }
            x / y
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                return Err(zero_division("float floor division by zero"));
            }
            (x / y).floor()
        }
        BinOp::Mod => {
            if y == 0.0 {
                return Err(zero_division("float modulo"));
            }
            x - y * (x / y).floor()
        }
        BinOp::Pow => x.powf(y),
        _ => {
            return Err(Exception::type_error(format!(
                "unsupported operand type(s) for {}: 'float' and 'float'",
                op.symbol()
            )))
        }
    }))
}
