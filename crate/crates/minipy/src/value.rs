//! Runtime values.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;

use geoframe::{format_float, geometry, ColumnData, Frame, Geometry, Scalar};

use crate::ast::{FunctionDef, Param};
use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::folium::Element;
use crate::libs::plot::FigureState;
use crate::libs::series::Series;

pub type BuiltinFn = fn(&mut Interp, Args) -> PyResult<Value>;

#[derive(Clone)]
pub struct Builtin {
    pub name: &'static str,
    pub func: BuiltinFn,
}

/// A callable type object, also usable with `isinstance`.
pub struct TypeObj {
    pub name: &'static str,
    /// Kind names (see [`Value::kind`]) that are instances of this type.
    pub instances: &'static [&'static str],
    pub ctor: Option<BuiltinFn>,
    /// Set for exception classes.
    pub exception: bool,
}

pub struct Function {
    pub name: String,
    pub params: Rc<Vec<Param>>,
    pub defaults: Vec<Option<Value>>,
    pub body: FunctionBody,
    pub closure: Rc<Scope>,
}

pub enum FunctionBody {
    Def(Rc<FunctionDef>),
    Lambda(Rc<crate::ast::Expr>),
}

/// A variable scope. The root scope holds module globals.
#[derive(Default)]
pub struct Scope {
    pub vars: RefCell<HashMap<String, Value>>,
    pub parent: Option<Rc<Scope>>,
    pub globals_decl: RefCell<Vec<String>>,
}

impl Scope {
    pub fn root() -> Rc<Scope> {
        Rc::new(Scope::default())
    }

    pub fn child(parent: &Rc<Scope>) -> Rc<Scope> {
        Rc::new(Scope {
            parent: Some(parent.clone()),
            ..Scope::default()
        })
    }

    pub fn lookup(&self, name: &str) -> Option<Value> {
        if let Some(v) = self.vars.borrow().get(name) {
            return Some(v.clone());
        }
        self.parent.as_ref().and_then(|p| p.lookup(name))
    }

    pub fn global_root(self: &Rc<Scope>) -> Rc<Scope> {
        let mut s = self.clone();
        while let Some(p) = s.parent.clone() {
            s = p;
        }
        s
    }
}

pub enum Module {
    Native(&'static str),
    User { name: String, scope: Rc<Scope> },
}

/// Miscellaneous native helper objects.
pub enum Object {
    Loc(Value),
    ILoc(Value),
    StrAccessor(Rc<Series>),
    GroupBy { frame: Rc<RefCell<Frame>>, by: String, column: Option<String> },
    Provider(String),
    /// `typing` aliases such as `List[int]`: inert and subscriptable.
    TypingAlias(String),
    MapRoot(Rc<RefCell<Element>>),
    MapHtml(Rc<RefCell<Element>>),
    Iterator(RefCell<std::vec::IntoIter<Value>>),
    Row { columns: Rc<Vec<String>>, values: Vec<Value> },
    Colormap(String),
    Crs(geoframe::Crs),
}

#[derive(Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    Tuple(Rc<Vec<Value>>),
    Dict(Rc<RefCell<Dict>>),
    Set(Rc<RefCell<Vec<Value>>>),
    /// One-dimensional numeric array.
    Array(Rc<Vec<Value>>),
    Frame(Rc<RefCell<Frame>>),
    Series(Rc<Series>),
    Geometry(Rc<Geometry>),
    Figure(Rc<RefCell<FigureState>>),
    Axes(Rc<RefCell<FigureState>>, usize),
    Folium(Rc<RefCell<Element>>),
    Object(Rc<Object>),
    Module(Rc<Module>),
    Function(Rc<Function>),
    Builtin(Builtin),
    Method(Rc<Value>, Rc<str>),
    Type(Rc<TypeObj>),
    Exception(Rc<Exception>),
    Slice(Option<i64>, Option<i64>, Option<i64>),
    Range(i64, i64, i64),
}

/// Insertion-ordered dictionary with linear lookup.
#[derive(Clone, Default)]
pub struct Dict {
    pub entries: Vec<(Value, Value)>,
}

impl Dict {
    pub fn get(&self, key: &Value) -> Option<Value> {
        self.entries
            .iter()
            .find(|(k, _)| py_eq(k, key))
            .map(|(_, v)| v.clone())
    }

    pub fn get_str(&self, key: &str) -> Option<Value> {
        self.entries.iter().find_map(|(k, v)| match k {
            Value::Str(s) if &**s == key => Some(v.clone()),
            _ => None,
        })
    }

    pub fn insert(&mut self, key: Value, value: Value) {
        if let Some(slot) = self.entries.iter_mut().find(|(k, _)| py_eq(k, &key)) {
            slot.1 = value;
        } else {
            self.entries.push((key, value));
        }
    }

    pub fn remove(&mut self, key: &Value) -> Option<Value> {
        let idx = self.entries.iter().position(|(k, _)| py_eq(k, key))?;
        Some(self.entries.remove(idx).1)
    }
}

/// Positional and keyword call arguments.
#[derive(Default)]
pub struct Args {
    pub pos: Vec<Value>,
    pub kw: Vec<(String, Value)>,
}

impl Args {
    pub fn new(pos: Vec<Value>) -> Self {
        Args { pos, kw: Vec::new() }
    }

    /// Argument by keyword, falling back to position `idx`.
    pub fn get(&self, idx: usize, name: &str) -> Option<Value> {
        self.kw
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.clone())
            .or_else(|| self.pos.get(idx).cloned())
            .filter(|v| !matches!(v, Value::None))
    }

    /// Keyword-only argument.
    pub fn kw(&self, name: &str) -> Option<Value> {
        self.kw
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.clone())
            .filter(|v| !matches!(v, Value::None))
    }

    pub fn require(&self, idx: usize, name: &str, func: &str) -> PyResult<Value> {
        self.get(idx, name).ok_or_else(|| {
            Exception::type_error(format!("{func}() missing required argument: '{name}'"))
        })
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.kw.is_empty()
    }
}

impl Value {
    pub fn str(s: impl AsRef<str>) -> Value {
        Value::Str(Rc::from(s.as_ref()))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Rc::new(items))
    }

    pub fn dict(entries: Vec<(Value, Value)>) -> Value {
        Value::Dict(Rc::new(RefCell::new(Dict { entries })))
    }

    pub fn frame(frame: Frame) -> Value {
        Value::Frame(Rc::new(RefCell::new(frame)))
    }

    pub fn series(series: Series) -> Value {
        Value::Series(Rc::new(series))
    }

    pub fn geometry(g: Geometry) -> Value {
        Value::Geometry(Rc::new(g))
    }

    pub fn object(o: Object) -> Value {
        Value::Object(Rc::new(o))
    }

    pub fn method(recv: Value, name: &str) -> Value {
        Value::Method(Rc::new(recv), Rc::from(name))
    }

    /// Fully qualified kind name used by type checks.
    pub fn kind(&self) -> String {
        match self {
            Value::None => "None".into(),
            Value::Bool(_) => "bool".into(),
            Value::Int(_) => "int".into(),
            Value::Float(_) => "float".into(),
            Value::Str(_) => "str".into(),
            Value::List(_) => "list".into(),
            Value::Tuple(_) => "tuple".into(),
            Value::Dict(_) => "dict".into(),
            Value::Set(_) => "set".into(),
            Value::Array(_) => "numpy.ndarray".into(),
            Value::Frame(f) => {
                if f.borrow().is_geo() {
                    "geopandas.GeoDataFrame".into()
                } else {
                    "pandas.DataFrame".into()
                }
            }
            Value::Series(s) => {
                if s.is_geo() {
                    "geopandas.GeoSeries".into()
                } else {
                    "pandas.Series".into()
                }
            }
            Value::Geometry(g) => format!("shapely.{}", geometry::geom_type(g)),
            Value::Figure(_) => "matplotlib.Figure".into(),
            Value::Axes(..) => "matplotlib.Axes".into(),
            Value::Folium(e) => format!("folium.{}", e.borrow().kind),
            Value::Object(o) => match &**o {
                Object::Loc(_) => "pandas.Loc".into(),
                Object::ILoc(_) => "pandas.ILoc".into(),
                Object::StrAccessor(_) => "pandas.StringMethods".into(),
                Object::GroupBy { .. } => "pandas.GroupBy".into(),
                Object::Provider(_) => "xyzservices.TileProvider".into(),
                Object::TypingAlias(_) => "typing".into(),
                Object::MapRoot(_) => "branca.Figure".into(),
                Object::MapHtml(_) => "branca.Element".into(),
                Object::Iterator(_) => "iterator".into(),
                Object::Row { .. } => "pandas.Series".into(),
                Object::Colormap(_) => "matplotlib.Colormap".into(),
                Object::Crs(_) => "pyproj.CRS".into(),
            },
            Value::Module(_) => "module".into(),
            Value::Function(_) => "function".into(),
            Value::Builtin(_) | Value::Method(..) => "builtin_function_or_method".into(),
            Value::Type(_) => "type".into(),
            Value::Exception(e) => e.kind.clone(),
            Value::Slice(..) => "slice".into(),
            Value::Range(..) => "range".into(),
        }
    }

    /// Short type name for error messages.
    pub fn type_name(&self) -> String {
        let kind = self.kind();
        match kind.rsplit_once('.') {
            Some((_, short)) => short.to_string(),
            None => kind,
        }
    }

    pub fn truthy(&self) -> PyResult<bool> {
        Ok(match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) | Value::Set(l) => !l.borrow().is_empty(),
            Value::Tuple(t) => !t.is_empty(),
            Value::Dict(d) => !d.borrow().entries.is_empty(),
            Value::Range(a, b, s) => range_len(*a, *b, *s) > 0,
            Value::Frame(_) | Value::Series(_) | Value::Array(_) => {
                return Err(Exception::value_error(format!(
                    "The truth value of a {} is ambiguous. Use a.empty, a.bool(), a.item(), a.any() or a.all().",
                    self.type_name()
                )))
            }
            _ => true,
        })
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(i64::from(*b)),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            Value::Bool(b) => Some(f64::from(u8::from(*b))),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn expect_str(&self, what: &str) -> PyResult<String> {
        self.as_str()
            .map(str::to_string)
            .ok_or_else(|| Exception::type_error(format!("{what} must be str, not {}", self.type_name())))
    }

    pub fn expect_int(&self, what: &str) -> PyResult<i64> {
        self.as_int()
            .ok_or_else(|| Exception::type_error(format!("{what} must be int, not {}", self.type_name())))
    }

    pub fn expect_f64(&self, what: &str) -> PyResult<f64> {
        self.as_f64().ok_or_else(|| {
            Exception::type_error(format!("{what} must be a real number, not {}", self.type_name()))
        })
    }

    /// Converts a cell value.
    pub fn from_scalar(s: Scalar) -> Value {
        match s {
            Scalar::Null => Value::None,
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Int(i) => Value::Int(i),
            Scalar::Float(f) => Value::Float(f),
            Scalar::Str(s) => Value::str(s),
            Scalar::Geometry(g) => Value::geometry(g),
        }
    }

    pub fn to_scalar(&self) -> PyResult<Scalar> {
        Ok(match self {
            Value::None => Scalar::Null,
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Int(i) => Scalar::Int(*i),
            Value::Float(f) if f.is_nan() => Scalar::Null,
            Value::Float(f) => Scalar::Float(*f),
            Value::Str(s) => Scalar::Str(s.to_string()),
            Value::Geometry(g) => Scalar::Geometry((**g).clone()),
            other => {
                return Err(Exception::type_error(format!(
                    "cannot store a {} value in a column",
                    other.type_name()
                )))
            }
        })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Value::None)
    }

    pub fn is_exception_type(&self) -> bool {
        matches!(self, Value::Type(t) if t.exception)
    }
}

pub fn range_len(start: i64, stop: i64, step: i64) -> usize {
    if step > 0 && stop > start {
        ((stop - start + step - 1) / step) as usize
    } else if step < 0 && start > stop {
        ((start - stop - step - 1) / -step) as usize
    } else {
        0
    }
}

/// Python `==`.
pub fn py_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => seq_eq(&x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => seq_eq(x, y),
        (Value::Set(x), Value::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|v| y.iter().any(|w| py_eq(v, w)))
        }
        (Value::Dict(x), Value::Dict(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.entries.len() == y.entries.len()
                && x.entries
                    .iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| py_eq(v, &w)))
        }
        (Value::Geometry(x), Value::Geometry(y)) => x == y,
        (Value::Range(a1, b1, c1), Value::Range(a2, b2, c2)) => (a1, b1, c1) == (a2, b2, c2),
        (Value::Frame(x), Value::Frame(y)) => Rc::ptr_eq(x, y),
        (Value::Series(x), Value::Series(y)) => Rc::ptr_eq(x, y),
        (Value::Figure(x), Value::Figure(y)) => Rc::ptr_eq(x, y),
        (Value::Axes(x, i), Value::Axes(y, j)) => Rc::ptr_eq(x, y) && i == j,
        (Value::Folium(x), Value::Folium(y)) => Rc::ptr_eq(x, y),
        (Value::Module(x), Value::Module(y)) => Rc::ptr_eq(x, y),
        (Value::Function(x), Value::Function(y)) => Rc::ptr_eq(x, y),
        (Value::Type(x), Value::Type(y)) => x.name == y.name,
        (Value::Builtin(x), Value::Builtin(y)) => x.name == y.name,
        (Value::Object(x), other) | (other, Value::Object(x)) if matches!(&**x, Object::Crs(_)) => {
            let Object::Crs(c) = &**x else { unreachable!() };
            match other {
                Value::Object(o) => matches!(&**o, Object::Crs(d) if d == c),
                Value::Str(s) => geoframe::Crs::new(&**s) == *c,
                Value::Int(i) => c.epsg() == Some(*i as u32),
                _ => false,
            }
        }
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn seq_eq(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| py_eq(x, y))
}

/// Python ordering for `<`, `sorted`, `min` and `max`.
pub fn py_cmp(a: &Value, b: &Value) -> PyResult<Ordering> {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => Ok(x.cmp(y)),
        (Value::List(x), Value::List(y)) => seq_cmp(&x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => seq_cmp(x, y),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => Ok(x.partial_cmp(&y).unwrap_or(Ordering::Equal)),
            _ => Err(Exception::type_error(format!(
                "'<' not supported between instances of '{}' and '{}'",
                a.type_name(),
                b.type_name()
            ))),
        },
    }
}

fn seq_cmp(a: &[Value], b: &[Value]) -> PyResult<Ordering> {
    for (x, y) in a.iter().zip(b) {
        if !py_eq(x, y) {
            return py_cmp(x, y);
        }
    }
    Ok(a.len().cmp(&b.len()))
}

/// Python `str()`.
pub fn to_str(v: &Value) -> String {
    match v {
        Value::Str(s) => s.to_string(),
        Value::Exception(e) => e.message.clone(),
        Value::Frame(f) => crate::libs::dataframe::render(&f.borrow()),
        Value::Series(s) => s.render(),
        Value::Geometry(g) => geometry::to_wkt(g),
        Value::Object(o) if matches!(&**o, Object::Crs(_)) => {
            let Object::Crs(c) = &**o else { unreachable!() };
            c.to_string()
        }
        _ => repr(v),
    }
}

/// Python `repr()`.
pub fn repr(v: &Value) -> String {
    match v {
        Value::None => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => format_float(*f),
        Value::Str(s) => quote(s),
        Value::List(l) => format!("[{}]", join_repr(&l.borrow())),
        Value::Tuple(t) if t.len() == 1 => format!("({},)", repr(&t[0])),
        Value::Tuple(t) => format!("({})", join_repr(t)),
        Value::Set(s) if s.borrow().is_empty() => "set()".into(),
        Value::Set(s) => format!("{{{}}}", join_repr(&s.borrow())),
        Value::Dict(d) => {
            let d = d.borrow();
            let items: Vec<String> = d
                .entries
                .iter()
                .map(|(k, v)| format!("{}: {}", repr(k), repr(v)))
                .collect();
            format!("{{{}}}", items.join(", "))
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(repr).collect();
            format!("array([{}])", items.join(", "))
        }
        Value::Frame(_) | Value::Series(_) => to_str(v),
        Value::Geometry(g) => format!("<{}>", geometry::to_wkt(g)),
        Value::Figure(f) => {
            let f = f.borrow();
            format!(
                "<Figure size {}x{} with {} Axes>",
                (f.size.0 * 100.0).round(),
                (f.size.1 * 100.0).round(),
                f.axes.len()
            )
        }
        Value::Axes(..) => "<Axes>".into(),
        Value::Folium(e) => format!("<folium.{} object>", e.borrow().kind),
        Value::Object(o) => match &**o {
            Object::Provider(name) => format!("<TileProvider {name}>"),
            Object::TypingAlias(name) => format!("typing.{name}"),
            Object::Crs(c) => format!("<CRS: {c}>"),
            _ => format!("<{} object>", v.kind()),
        },
        Value::Module(m) => match &**m {
            Module::Native(name) => format!("<module '{name}'>"),
            Module::User { name, .. } => format!("<module '{name}'>"),
        },
        Value::Function(f) => format!("<function {}>", f.name),
        Value::Builtin(b) => format!("<built-in function {}>", b.name),
        Value::Method(_, name) => format!("<bound method {name}>"),
        Value::Type(t) => format!("<class '{}'>", t.name),
        Value::Exception(e) => format!("{}({})", e.kind, quote(&e.message)),
        Value::Slice(a, b, c) => {
            let f = |x: &Option<i64>| x.map_or("None".to_string(), |v| v.to_string());
            format!("slice({}, {}, {})", f(a), f(b), f(c))
        }
        Value::Range(a, b, 1) => format!("range({a}, {b})"),
        Value::Range(a, b, s) => format!("range({a}, {b}, {s})"),
    }
}

fn join_repr(items: &[Value]) -> String {
    items.iter().map(repr).collect::<Vec<_>>().join(", ")
}

pub fn quote(s: &str) -> String {
    let q = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// Applies a format spec such as `.2f`, `>10`, `,` or `.1%`.
pub fn format_spec(v: &Value, spec: &str) -> PyResult<String> {
    if spec.is_empty() {
        return Ok(to_str(v));
    }
    let chars: Vec<char> = spec.chars().collect();
    let mut i = 0;
    let mut fill = ' ';
    let mut align = None;
    if chars.len() >= 2 && matches!(chars[1], '<' | '>' | '^') {
        fill = chars[0];
        align = Some(chars[1]);
        i = 2;
    } else if matches!(chars[0], '<' | '>' | '^') {
        align = Some(chars[0]);
        i = 1;
    }
    let mut sign = false;
    if chars.get(i) == Some(&'+') {
        sign = true;
        i += 1;
    }
    if chars.get(i) == Some(&'0') && align.is_none() {
        fill = '0';
        align = Some('=');
        i += 1;
    }
    let mut width = 0usize;
    while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
        width = width * 10 + d as usize;
        i += 1;
    }
    let mut grouping = false;
    if chars.get(i) == Some(&',') || chars.get(i) == Some(&'_') {
        grouping = true;
        i += 1;
    }
    let mut precision = None;
    if chars.get(i) == Some(&'.') {
        i += 1;
        let mut p = 0usize;
        while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
            p = p * 10 + d as usize;
            i += 1;
        }
        precision = Some(p);
    }
    let ty = chars.get(i).copied();
    if i + usize::from(ty.is_some()) != chars.len() {
        return Err(Exception::value_error(format!("Invalid format specifier '{spec}'")));
    }
    let number = |v: &Value| -> PyResult<f64> {
        v.as_f64()
            .ok_or_else(|| Exception::value_error(format!("Unknown format code for object of type '{}'", v.type_name())))
    };
    let mut body = match ty {
        Some('f') | Some('F') => format!("{:.*}", precision.unwrap_or(6), number(v)?),
        Some('e') => format!("{:.*e}", precision.unwrap_or(6), number(v)?),
        Some('%') => format!("{:.*}%", precision.unwrap_or(6), number(v)? * 100.0),
        Some('d') => match v.as_int() {
            Some(i) => i.to_string(),
            None => return Err(Exception::value_error("Unknown format code 'd' for non-integer")),
        },
        Some('g') => format_float(number(v)?),
        Some('s') | None => match (precision, v) {
            (Some(p), Value::Float(f)) => format!("{:.*}", p, f),
            (Some(p), Value::Str(s)) => s.chars().take(p).collect(),
            _ => to_str(v),
        },
        Some(c) => return Err(Exception::value_error(format!("Unknown format code '{c}'"))),
    };
    if grouping {
        body = group_thousands(&body);
    }
    if sign && !body.starts_with('-') {
        body.insert(0, '+');
    }
    let len = body.chars().count();
    if len >= width {
        return Ok(body);
    }
    let pad = width - len;
    let numeric = v.as_f64().is_some() && !matches!(v, Value::Str(_));
    let align = align.unwrap_or(if numeric { '>' } else { '<' });
    let fill_str = |n: usize| std::iter::repeat(fill).take(n).collect::<String>();
    Ok(match align {
        '<' => format!("{body}{}", fill_str(pad)),
        '^' => format!("{}{body}{}", fill_str(pad / 2), fill_str(pad - pad / 2)),
        '=' => {
            let (sign, digits) = if body.starts_with('-') || body.starts_with('+') {
                body.split_at(1)
            } else {
                ("", body.as_str())
            };
            format!("{sign}{}{digits}", fill_str(pad))
        }
        _ => format!("{}{body}", fill_str(pad)),
    })
}

fn group_thousands(s: &str) -> String {
    let (sign, rest) = if let Some(r) = s.strip_prefix('-') { ("-", r) } else { ("", s) };
    let (int, frac) = match rest.find('.') {
        Some(p) => rest.split_at(p),
        None => (rest, ""),
    };
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let mut out = String::new();
    let _ = write!(out, "{sign}{grouped}{frac}");
    out
}

/// Collects the items of an iterable value.
pub fn iterate(v: &Value) -> PyResult<Vec<Value>> {
    Ok(match v {
        Value::List(l) | Value::Set(l) => l.borrow().clone(),
        Value::Tuple(t) => (**t).clone(),
        Value::Array(a) => (**a).clone(),
        Value::Str(s) => s.chars().map(|c| Value::str(c.to_string())).collect(),
        Value::Dict(d) => d.borrow().entries.iter().map(|(k, _)| k.clone()).collect(),
        Value::Range(a, b, s) => {
            let n = range_len(*a, *b, *s);
            (0..n as i64).map(|i| Value::Int(a + i * s)).collect()
        }
        Value::Series(s) => s.values(),
        Value::Frame(f) => f
            .borrow()
            .column_names()
            .into_iter()
            .map(Value::str)
            .collect(),
        Value::Object(o) => match &**o {
            Object::Iterator(it) => it.borrow_mut().by_ref().collect(),
            Object::Row { values, .. } => values.clone(),
            Object::GroupBy { frame, by, .. } => crate::libs::dataframe::groupby_items(frame, by)?,
            _ => return Err(not_iterable(v)),
        },
        _ => return Err(not_iterable(v)),
    })
}

fn not_iterable(v: &Value) -> Exception {
    Exception::type_error(format!("'{}' object is not iterable", v.type_name()))
}

/// Length of a sized value.
pub fn length(v: &Value) -> PyResult<usize> {
    Ok(match v {
        Value::Str(s) => s.chars().count(),
        Value::List(l) | Value::Set(l) => l.borrow().len(),
        Value::Tuple(t) => t.len(),
        Value::Array(a) => a.len(),
        Value::Dict(d) => d.borrow().entries.len(),
        Value::Range(a, b, s) => range_len(*a, *b, *s),
        Value::Frame(f) => f.borrow().n_rows(),
        Value::Series(s) => s.len(),
        Value::Object(o) => match &**o {
            Object::Row { values, .. } => values.len(),
            Object::GroupBy { frame, by, .. } => crate::libs::dataframe::groupby_items(frame, by)?.len(),
            _ => return Err(no_len(v)),
        },
        _ => return Err(no_len(v)),
    })
}

fn no_len(v: &Value) -> Exception {
    Exception::type_error(format!("object of type '{}' has no len()", v.type_name()))
}

/// Converts a list-like value into column data.
pub fn column_from_values(values: &[Value]) -> PyResult<ColumnData> {
    let scalars = values
        .iter()
        .map(Value::to_scalar)
        .collect::<PyResult<Vec<_>>>()?;
    Ok(ColumnData::from_scalars(&scalars))
}

/// Normalizes a possibly negative index against `len`.
pub fn norm_index(idx: i64, len: usize) -> PyResult<usize> {
    let i = if idx < 0 { idx + len as i64 } else { idx };
    if i < 0 || i as usize >= len {
        return Err(Exception::index_error("index out of range"));
    }
    Ok(i as usize)
}

/// Resolves slice bounds to the selected indices.
pub fn slice_indices(lo: Option<i64>, hi: Option<i64>, step: Option<i64>, len: usize) -> PyResult<Vec<usize>> {
    let step = step.unwrap_or(1);
    if step == 0 {
        return Err(Exception::value_error("slice step cannot be zero"));
    }
    let len = len as i64;
    let clamp = |v: i64, lo: i64, hi: i64| v.max(lo).min(hi);
    let resolve = |v: Option<i64>, default: i64, lo: i64, hi: i64| match v {
        None => default,
        Some(x) if x < 0 => clamp(x + len, lo, hi),
        Some(x) => clamp(x, lo, hi),
    };
    let mut out = Vec::new();
    if step > 0 {
        let start = resolve(lo, 0, 0, len);
        let stop = resolve(hi, len, 0, len);
        let mut i = start;
        while i < stop {
            out.push(i as usize);
            i += step;
        }
    } else {
        let start = resolve(lo, len - 1, -1, len - 1);
        let stop = resolve(hi, -1, -1, len - 1);
        let mut i = start;
        while i > stop {
            out.push(i as usize);
            i += step;
        }
    }
    Ok(out)
}
