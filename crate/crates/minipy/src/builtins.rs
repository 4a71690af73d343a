//! Built-in functions, types and methods of the core value types.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;

use crate::ast::BinOp;
use crate::exception::{Exception, PyResult, ISOLATION_ERROR};
use crate::interp::Interp;
use crate::value::*;

macro_rules! builtin {
    ($name:expr, $f:expr) => {
        Value::Builtin(Builtin { name: $name, func: $f })
    };
}

pub fn type_value(
    name: &'static str,
    instances: &'static [&'static str],
    ctor: Option<BuiltinFn>,
) -> Value {
    Value::Type(Rc::new(TypeObj {
        name,
        instances,
        ctor,
        exception: false,
    }))
}

fn exception_type(name: &'static str) -> Value {
    Value::Type(Rc::new(TypeObj {
        name,
        instances: &[],
        ctor: None,
        exception: true,
    }))
}

const EXCEPTIONS: &[&str] = &[
    "BaseException",
    "Exception",
    "ValueError",
    "TypeError",
    "KeyError",
    "IndexError",
    "LookupError",
    "AttributeError",
    "RuntimeError",
    "NotImplementedError",
    "ZeroDivisionError",
    "ArithmeticError",
    "OverflowError",
    "ImportError",
    "ModuleNotFoundError",
    "NameError",
    "AssertionError",
    "StopIteration",
    "OSError",
    "IOError",
    "FileNotFoundError",
    "PermissionError",
    "RecursionError",
    "UserWarning",
    "Warning",
];

/// Exceptions that generated code can never catch: policy violations and
/// the step budget must always surface.
const UNCATCHABLE: &[&str] = &[ISOLATION_ERROR, "TimeoutError"];

pub fn exception_matches(kind: &str, class: &str) -> bool {
    if UNCATCHABLE.contains(&kind) {
        return false;
    }
    if kind == class || class == "BaseException" || class == "Exception" {
        return true;
    }
    let parent = match kind {
        "KeyError" | "IndexError" => "LookupError",
        "ZeroDivisionError" | "OverflowError" => "ArithmeticError",
        "ModuleNotFoundError" => "ImportError",
        "FileNotFoundError" | "PermissionError" | "IOError" => "OSError",
        "RecursionError" | "NotImplementedError" => "RuntimeError",
        "UserWarning" => "Warning",
        _ => return false,
    };
    exception_matches(parent, class)
}

pub fn lookup(name: &str) -> Option<Value> {
    if let Some(&n) = EXCEPTIONS.iter().find(|&&e| e == name) {
        return Some(exception_type(n));
    }
    Some(match name {
        "print" => builtin!("print", print),
        "len" => builtin!("len", |_, a| Ok(Value::Int(length(&one(&a, "len")?)? as i64))),
        "range" => builtin!("range", range),
        "enumerate" => builtin!("enumerate", enumerate),
        "zip" => builtin!("zip", zip),
        "sorted" => builtin!("sorted", sorted),
        "reversed" => builtin!("reversed", |_, a| {
            let mut items = iterate(&one(&a, "reversed")?)?;
            items.reverse();
            Ok(Value::list(items))
        }),
        "min" => builtin!("min", |i, a| extremum(i, a, Ordering::Less)),
        "max" => builtin!("max", |i, a| extremum(i, a, Ordering::Greater)),
        "sum" => builtin!("sum", sum),
        "abs" => builtin!("abs", |_, a| match one(&a, "abs")? {
            Value::Int(i) => Ok(Value::Int(i.abs())),
            Value::Float(f) => Ok(Value::Float(f.abs())),
            Value::Bool(b) => Ok(Value::Int(i64::from(b))),
            v @ Value::Series(_) => crate::libs::series::abs(&v),
            v => Err(Exception::type_error(format!("bad operand type for abs(): '{}'", v.type_name()))),
        }),
        "round" => builtin!("round", round),
        "isinstance" => builtin!("isinstance", isinstance),
        "type" => builtin!("type", |_, a| Ok(type_of(&one(&a, "type")?))),
        "any" => builtin!("any", |_, a| {
            for v in iterate(&one(&a, "any")?)? {
                if v.truthy()? {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(false))
        }),
        "all" => builtin!("all", |_, a| {
            for v in iterate(&one(&a, "all")?)? {
                if !v.truthy()? {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }),
        "map" => builtin!("map", |i, a| {
            let f = a.require(0, "function", "map")?;
            let seqs = a.pos[1..].iter().map(iterate).collect::<PyResult<Vec<_>>>()?;
            let n = seqs.iter().map(Vec::len).min().unwrap_or(0);
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                out.push(i.call(&f, Args::new(seqs.iter().map(|s| s[k].clone()).collect()))?);
            }
            Ok(Value::list(out))
        }),
        "filter" => builtin!("filter", |i, a| {
            let f = a.pos.first().cloned().unwrap_or(Value::None);
            let mut out = Vec::new();
            for v in iterate(&a.require(1, "iterable", "filter")?)? {
                let keep = if f.is_none() { v.truthy()? } else { i.call(&f, Args::new(vec![v.clone()]))?.truthy()? };
                if keep {
                    out.push(v);
                }
            }
            Ok(Value::list(out))
        }),
        "hasattr" => builtin!("hasattr", |i, a| {
            let obj = a.require(0, "obj", "hasattr")?;
            let name = a.require(1, "name", "hasattr")?.expect_str("attribute name")?;
            Ok(Value::Bool(crate::libs::get_attr(i, &obj, &name).is_ok()))
        }),
        "getattr" => builtin!("getattr", |i, a| {
            let obj = a.require(0, "obj", "getattr")?;
            let name = a.require(1, "name", "getattr")?.expect_str("attribute name")?;
            match (crate::libs::get_attr(i, &obj, &name), a.pos.get(2)) {
                (Ok(v), _) => Ok(v),
                (Err(_), Some(default)) => Ok(default.clone()),
                (Err(e), None) => Err(e),
            }
        }),
        "repr" => builtin!("repr", |_, a| Ok(Value::str(repr(&one(&a, "repr")?)))),
        "format" => builtin!("format", |_, a| {
            let v = a.require(0, "value", "format")?;
            let spec = a.get(1, "format_spec").map(|s| to_str(&s)).unwrap_or_default();
            Ok(Value::str(format_spec(&v, &spec)?))
        }),
        "iter" => builtin!("iter", |_, a| {
            let items = iterate(&one(&a, "iter")?)?;
            Ok(Value::object(Object::Iterator(RefCell::new(items.into_iter()))))
        }),
        "next" => builtin!("next", |_, a| match a.pos.first() {
            Some(Value::Object(o)) => match &**o {
                Object::Iterator(it) => match it.borrow_mut().next() {
                    Some(v) => Ok(v),
                    None => a.pos.get(1).cloned().ok_or_else(|| Exception::new("StopIteration", "")),
                },
                _ => Err(Exception::type_error("object is not an iterator")),
            },
            _ => Err(Exception::type_error("object is not an iterator")),
        }),
        "divmod" => builtin!("divmod", |i, a| {
            let x = a.require(0, "a", "divmod")?;
            let y = a.require(1, "b", "divmod")?;
            let q = i.binary(BinOp::FloorDiv, &x, &y)?;
            let r = i.binary(BinOp::Mod, &x, &y)?;
            Ok(Value::tuple(vec![q, r]))
        }),
        "pow" => builtin!("pow", |i, a| {
            let x = a.require(0, "base", "pow")?;
            let y = a.require(1, "exp", "pow")?;
            i.binary(BinOp::Pow, &x, &y)
        }),
        "chr" => builtin!("chr", |_, a| {
            let c = one(&a, "chr")?.expect_int("chr() argument")?;
            char::from_u32(c as u32)
                .map(|c| Value::str(c.to_string()))
                .ok_or_else(|| Exception::value_error("chr() arg not in range"))
        }),
        "ord" => builtin!("ord", |_, a| {
            let s = one(&a, "ord")?.expect_str("ord() argument")?;
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(Value::Int(c as i64)),
                _ => Err(Exception::type_error("ord() expected a character")),
            }
        }),
        "callable" => builtin!("callable", |_, a| Ok(Value::Bool(matches!(
            one(&a, "callable")?,
            Value::Function(_) | Value::Builtin(_) | Value::Method(..) | Value::Type(_)
        )))),
        "open" => builtin!("open", |_, _| Err(Exception::new(
            "PermissionError",
            "open() is not available; write files with to_file(), to_csv(), savefig() or save()"
        ))),
        "int" => type_value("int", &["int", "bool"], Some(to_int)),
        "float" => type_value("float", &["float"], Some(to_float)),
        "str" => type_value("str", &["str"], Some(|_, a| {
            Ok(Value::str(a.pos.first().map(to_str).unwrap_or_default()))
        })),
        "bool" => type_value("bool", &["bool"], Some(|_, a| {
            Ok(Value::Bool(match a.pos.first() {
                Some(v) => v.truthy()?,
                None => false,
            }))
        })),
        "list" => type_value("list", &["list"], Some(|_, a| {
            Ok(Value::list(match a.pos.first() {
                Some(v) => iterate(v)?,
                None => Vec::new(),
            }))
        })),
        "tuple" => type_value("tuple", &["tuple"], Some(|_, a| {
            Ok(Value::tuple(match a.pos.first() {
                Some(v) => iterate(v)?,
                None => Vec::new(),
            }))
        })),
        "set" => type_value("set", &["set"], Some(|_, a| {
            Ok(make_set(match a.pos.first() {
                Some(v) => iterate(v)?,
                None => Vec::new(),
            }))
        })),
        "dict" => type_value("dict", &["dict"], Some(make_dict)),
        "object" => type_value("object", &[], None),
        _ => return None,
    })
}

fn one(a: &Args, func: &str) -> PyResult<Value> {
    a.pos
        .first()
        .cloned()
        .ok_or_else(|| Exception::type_error(format!("{func}() takes exactly one argument (0 given)")))
}

fn print(interp: &mut Interp, a: Args) -> PyResult<Value> {
    let sep = a.kw("sep").map(|v| to_str(&v)).unwrap_or_else(|| " ".into());
    let end = a.kw("end").map(|v| to_str(&v)).unwrap_or_else(|| "\n".into());
    let text: Vec<String> = a.pos.iter().map(to_str).collect();
    interp.stdout.push_str(&text.join(&sep));
    interp.stdout.push_str(&end);
    Ok(Value::None)
}

fn range(_: &mut Interp, a: Args) -> PyResult<Value> {
    let ints = a
        .pos
        .iter()
        .map(|v| v.expect_int("range() argument"))
        .collect::<PyResult<Vec<_>>>()?;
    let (start, stop, step) = match ints.as_slice() {
        [stop] => (0, *stop, 1),
        [start, stop] => (*start, *stop, 1),
        [start, stop, step] => (*start, *stop, *step),
        _ => return Err(Exception::type_error("range expected 1 to 3 arguments")),
    };
    if step == 0 {
        return Err(Exception::value_error("range() arg 3 must not be zero"));
    }
    Ok(Value::Range(start, stop, step))
}

fn enumerate(_: &mut Interp, a: Args) -> PyResult<Value> {
    let items = iterate(&a.require(0, "iterable", "enumerate")?)?;
    let start = a.get(1, "start").map(|v| v.expect_int("start")).transpose()?.unwrap_or(0);
    Ok(Value::list(
        items
            .into_iter()
            .enumerate()
            .map(|(i, v)| Value::tuple(vec![Value::Int(start + i as i64), v]))
            .collect(),
    ))
}

fn zip(_: &mut Interp, a: Args) -> PyResult<Value> {
    let seqs = a.pos.iter().map(iterate).collect::<PyResult<Vec<_>>>()?;
    let n = seqs.iter().map(Vec::len).min().unwrap_or(0);
    Ok(Value::list(
        (0..n)
            .map(|i| Value::tuple(seqs.iter().map(|s| s[i].clone()).collect()))
            .collect(),
    ))
}

/// Stable sort with an optional key function.
pub fn sort_values(interp: &mut Interp, items: Vec<Value>, key: Option<&Value>, reverse: bool) -> PyResult<Vec<Value>> {
    let keys = match key {
        Some(k) => items
            .iter()
            .map(|v| interp.call(k, Args::new(vec![v.clone()])))
            .collect::<PyResult<Vec<_>>>()?,
        None => items.clone(),
    };
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let mut err = None;
    idx.sort_by(|&x, &y| match py_cmp(&keys[x], &keys[y]) {
        Ok(o) => {
            if reverse {
                o.reverse()
            } else {
                o
            }
        }
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(idx.into_iter().map(|i| items[i].clone()).collect())
}

fn sorted(interp: &mut Interp, a: Args) -> PyResult<Value> {
    let items = iterate(&a.require(0, "iterable", "sorted")?)?;
    let reverse = a.kw("reverse").map(|v| v.truthy()).transpose()?.unwrap_or(false);
    let key = a.kw("key");
    Ok(Value::list(sort_values(interp, items, key.as_ref(), reverse)?))
}

fn extremum(interp: &mut Interp, a: Args, want: Ordering) -> PyResult<Value> {
    let items = if a.pos.len() == 1 { iterate(&a.pos[0])? } else { a.pos.clone() };
    let key = a.kw("key");
    if items.is_empty() {
        return match a.kw("default") {
            Some(d) => Ok(d),
            None => Err(Exception::value_error("arg is an empty sequence")),
        };
    }
    let mut best = items[0].clone();
    let mut best_key = match &key {
        Some(k) => interp.call(k, Args::new(vec![best.clone()]))?,
        None => best.clone(),
    };
    for v in items.into_iter().skip(1) {
        let k = match &key {
            Some(k) => interp.call(k, Args::new(vec![v.clone()]))?,
            None => v.clone(),
        };
        if py_cmp(&k, &best_key)? == want {
            best = v;
            best_key = k;
        }
    }
    Ok(best)
}

fn sum(interp: &mut Interp, a: Args) -> PyResult<Value> {
    let items = iterate(&a.require(0, "iterable", "sum")?)?;
    let mut acc = a.get(1, "start").unwrap_or(Value::Int(0));
    for v in items {
        acc = interp.binary(BinOp::Add, &acc, &v)?;
    }
    Ok(acc)
}

/// Round half to even, as Python does.
pub fn round_half_even(x: f64, digits: i32) -> f64 {
    let factor = 10f64.powi(digits);
    let scaled = x * factor;
    if !scaled.is_finite() {
        return x;
    }
    let r = scaled.round();
    let rounded = if (scaled - scaled.trunc()).abs() == 0.5 {
        2.0 * (scaled / 2.0).round()
    } else {
        r
    };
    let out = rounded / factor;
    // go through the decimal representation to avoid artifacts like 0.30000000000000004
    format!("{:.*}", digits.max(0) as usize, out).parse().unwrap_or(out)
}

fn round(_: &mut Interp, a: Args) -> PyResult<Value> {
    let v = a.require(0, "number", "round")?;
    let digits = a.get(1, "ndigits");
    match (&v, digits) {
        (Value::Series(_), d) | (Value::Array(_), d) => crate::libs::series::round(&v, d.map(|d| d.expect_int("ndigits")).transpose()?.unwrap_or(0)),
        (Value::Int(_), _) | (Value::Bool(_), _) => Ok(Value::Int(v.as_int().unwrap())),
        (Value::Float(f), None) => {
            if !f.is_finite() {
                return Err(Exception::value_error("cannot convert float NaN or infinity to integer"));
            }
            Ok(Value::Int(round_half_even(*f, 0) as i64))
        }
        (Value::Float(f), Some(d)) => Ok(Value::Float(round_half_even(*f, d.expect_int("ndigits")? as i32))),
        _ => Err(Exception::type_error(format!(
            "type {} doesn't define __round__ method",
            v.type_name()
        ))),
    }
}

fn isinstance(_: &mut Interp, a: Args) -> PyResult<Value> {
    let v = a.require(0, "obj", "isinstance")?;
    let class = a.require(1, "class", "isinstance")?;
    let classes = match class {
        Value::Tuple(items) => (*items).clone(),
        other => vec![other],
    };
    let kind = v.kind();
    for c in classes {
        match c {
            Value::Type(t) if t.exception => {
                if let Value::Exception(e) = &v {
                    if exception_matches(&e.kind, t.name) {
                        return Ok(Value::Bool(true));
                    }
                }
            }
            Value::Type(t) => {
                if t.instances.contains(&kind.as_str()) {
                    return Ok(Value::Bool(true));
                }
            }
            Value::Object(o) if matches!(&*o, Object::TypingAlias(_)) => {}
            other => {
                return Err(Exception::type_error(format!(
                    "isinstance() arg 2 must be a type, not {}",
                    other.type_name()
                )))
            }
        }
    }
    Ok(Value::Bool(false))
}

fn type_of(v: &Value) -> Value {
    match lookup(&v.kind()) {
        Some(t @ Value::Type(_)) => t,
        _ => match v {
            Value::Frame(_) | Value::Series(_) | Value::Figure(_) | Value::Folium(_) | Value::Array(_) => {
                crate::libs::type_for_kind(&v.kind()).unwrap_or_else(|| type_value("object", &[], None))
            }
            _ => type_value("object", &[], None),
        },
    }
}

fn to_int(_: &mut Interp, a: Args) -> PyResult<Value> {
    let Some(v) = a.pos.first() else {
        return Ok(Value::Int(0));
    };
    match v {
        Value::Int(i) => Ok(Value::Int(*i)),
        Value::Bool(b) => Ok(Value::Int(i64::from(*b))),
        Value::Float(f) => {
            if !f.is_finite() {
                return Err(Exception::value_error("cannot convert float NaN or infinity to integer"));
            }
            Ok(Value::Int(f.trunc() as i64))
        }
        Value::Str(s) => s
            .trim()
            .replace('_', "")
            .parse()
            .map(Value::Int)
            .map_err(|_| Exception::value_error(format!("invalid literal for int() with base 10: {}", quote(s)))),
        other => Err(Exception::type_error(format!(
            "int() argument must be a string or a number, not '{}'",
            other.type_name()
        ))),
    }
}

fn to_float(_: &mut Interp, a: Args) -> PyResult<Value> {
    let Some(v) = a.pos.first() else {
        return Ok(Value::Float(0.0));
    };
    match v {
        Value::Str(s) => {
            let t = s.trim().to_ascii_lowercase();
            let parsed = match t.as_str() {
                "nan" => Some(f64::NAN),
                "inf" | "infinity" => Some(f64::INFINITY),
                "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
                _ => t.parse().ok(),
            };
            parsed
                .map(Value::Float)
                .ok_or_else(|| Exception::value_error(format!("could not convert string to float: {}", quote(s))))
        }
        other => other.as_f64().map(Value::Float).ok_or_else(|| {
            Exception::type_error(format!(
                "float() argument must be a string or a real number, not '{}'",
                other.type_name()
            ))
        }),
    }
}

fn make_dict(_: &mut Interp, a: Args) -> PyResult<Value> {
    let mut d = Dict::default();
    if let Some(src) = a.pos.first() {
        match src {
            Value::Dict(other) => d = other.borrow().clone(),
            other => {
                for item in iterate(other)? {
                    let pair = iterate(&item)?;
                    if pair.len() != 2 {
                        return Err(Exception::value_error("dictionary update sequence element has wrong length"));
                    }
                    d.insert(pair[0].clone(), pair[1].clone());
                }
            }
        }
    }
    for (k, v) in a.kw {
        d.insert(Value::str(k), v);
    }
    Ok(Value::Dict(Rc::new(RefCell::new(d))))
}

pub fn make_set(items: Vec<Value>) -> Value {
    let mut out: Vec<Value> = Vec::new();
    for v in items {
        if !out.iter().any(|w| py_eq(w, &v)) {
            out.push(v);
        }
    }
    Value::Set(Rc::new(RefCell::new(out)))
}

pub fn set_op(op: BinOp, a: &Value, b: &Value) -> PyResult<Value> {
    let x = iterate(a)?;
    let y = iterate(b)?;
    let in_y = |v: &Value| y.iter().any(|w| py_eq(v, w));
    let in_x = |v: &Value| x.iter().any(|w| py_eq(v, w));
    let items: Vec<Value> = match op {
        BinOp::BitOr => x.iter().chain(y.iter()).cloned().collect(),
        BinOp::BitAnd => x.iter().filter(|v| in_y(v)).cloned().collect(),
        BinOp::Sub => x.iter().filter(|v| !in_y(v)).cloned().collect(),
        _ => x
            .iter()
            .filter(|v| !in_y(v))
            .chain(y.iter().filter(|v| !in_x(v)))
            .cloned()
            .collect(),
    };
    Ok(make_set(items))
}

/// Python `item in container`.
pub fn contains(container: &Value, item: &Value) -> PyResult<bool> {
    Ok(match container {
        Value::Str(s) => match item {
            Value::Str(sub) => s.contains(&**sub),
            _ => return Err(Exception::type_error("'in <string>' requires string as left operand")),
        },
        Value::Dict(d) => d.borrow().get(item).is_some(),
        Value::Frame(f) => match item {
            Value::Str(name) => f.borrow().column(name).is_some(),
            _ => false,
        },
        Value::Range(a, b, s) => match item.as_int() {
            Some(i) => {
                let n = range_len(*a, *b, *s) as i64;
                (i - a) % s == 0 && (0..n).contains(&((i - a) / s))
            }
            None => false,
        },
        other => iterate(other)?.iter().any(|v| py_eq(v, item)),
    })
}

/// `"%s and %d" % args`
pub fn percent_format(fmt: &str, args: &Value) -> PyResult<Value> {
    let values = match args {
        Value::Tuple(t) => (**t).clone(),
        other => vec![other.clone()],
    };
    let mut it = values.into_iter();
    let mut out = String::new();
    let chars: Vec<char> = fmt.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '%' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        i += 1;
        let mut spec = String::new();
        while i < chars.len() && !chars[i].is_ascii_alphabetic() && chars[i] != '%' {
            spec.push(chars[i]);
            i += 1;
        }
        let Some(&conv) = chars.get(i) else {
            return Err(Exception::value_error("incomplete format"));
        };
        i += 1;
        if conv == '%' {
            out.push('%');
            continue;
        }
        let v = it
            .next()
            .ok_or_else(|| Exception::type_error("not enough arguments for format string"))?;
        let text = match conv {
            's' => format_spec(&Value::str(to_str(&v)), &spec)?,
            'r' => format_spec(&Value::str(repr(&v)), &spec)?,
            'd' | 'i' => format_spec(&Value::Int(v.as_f64().map(|f| f as i64).unwrap_or(0)), &format!("{spec}d"))?,
            'f' | 'e' | 'g' => format_spec(&v, &format!("{spec}{conv}"))?,
            c => return Err(Exception::value_error(format!("unsupported format character '{c}'"))),
        };
        out.push_str(&text);
    }
    Ok(Value::str(out))
}

/// `str.format` replacement fields.
fn str_format(fmt: &str, a: &Args) -> PyResult<String> {
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = String::new();
    let mut auto = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            out.push('{');
            i += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            out.push('}');
            i += 2;
            continue;
        }
        if c != '{' {
            out.push(c);
            i += 1;
            continue;
        }
        let end = chars[i..]
            .iter()
            .position(|&c| c == '}')
            .ok_or_else(|| Exception::value_error("Single '{' encountered in format string"))?;
        let field: String = chars[i + 1..i + end].iter().collect();
        i += end + 1;
        let (name, spec) = field.split_once(':').unwrap_or((&field, ""));
        let (name, conv) = match name.split_once('!') {
            Some((n, c)) => (n, Some(c)),
            None => (name, None),
        };
        let v = if name.is_empty() {
            let v = a.pos.get(auto).cloned();
            auto += 1;
            v
        } else if let Ok(idx) = name.parse::<usize>() {
            a.pos.get(idx).cloned()
        } else {
            a.kw.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone())
        }
        .ok_or_else(|| Exception::new("IndexError", format!("Replacement index {name} out of range")))?;
        let v = match conv {
            Some("r") => Value::str(repr(&v)),
            _ => v,
        };
        out.push_str(&format_spec(&v, spec)?);
    }
    Ok(out)
}

pub const STR_METHODS: &[&str] = &[
    "lower", "upper", "strip", "lstrip", "rstrip", "split", "rsplit", "join", "replace", "startswith",
    "endswith", "format", "title", "capitalize", "find", "count", "isdigit", "isalpha", "isnumeric",
    "splitlines", "zfill", "ljust", "rjust", "center", "index", "isupper", "islower", "isspace",
];

pub fn str_method(interp: &mut Interp, s: &str, name: &str, a: Args) -> PyResult<Value> {
    let arg_str = |i: usize, n: &str| -> PyResult<Option<String>> {
        a.get(i, n).map(|v| v.expect_str(n)).transpose()
    };
    let _ = interp;
    Ok(match name {
        "lower" => Value::str(s.to_lowercase()),
        "upper" => Value::str(s.to_uppercase()),
        "strip" | "lstrip" | "rstrip" => {
            let chars = arg_str(0, "chars")?;
            let pred = |c: char| match &chars {
                Some(set) => set.contains(c),
                None => c.is_whitespace(),
            };
            Value::str(match name {
                "strip" => s.trim_matches(pred),
                "lstrip" => s.trim_start_matches(pred),
                _ => s.trim_end_matches(pred),
            })
        }
        "split" | "rsplit" => {
            let sep = arg_str(0, "sep")?;
            let maxsplit = a.get(1, "maxsplit").map(|v| v.expect_int("maxsplit")).transpose()?.unwrap_or(-1);
            let parts: Vec<String> = match (&sep, maxsplit) {
                (None, _) => s.split_whitespace().map(str::to_string).collect(),
                (Some(sep), m) if m < 0 => s.split(sep.as_str()).map(str::to_string).collect(),
                (Some(sep), m) if name == "split" => s.splitn(m as usize + 1, sep.as_str()).map(str::to_string).collect(),
                (Some(sep), m) => {
                    let mut v: Vec<String> = s.rsplitn(m as usize + 1, sep.as_str()).map(str::to_string).collect();
                    v.reverse();
                    v
                }
            };
            Value::list(parts.into_iter().map(Value::str).collect())
        }
        "splitlines" => Value::list(s.lines().map(Value::str).collect()),
        "join" => {
            let items = iterate(&a.require(0, "iterable", "join")?)?;
            let parts = items
                .iter()
                .map(|v| {
                    v.as_str().map(str::to_string).ok_or_else(|| {
                        Exception::type_error(format!("sequence item: expected str instance, {} found", v.type_name()))
                    })
                })
                .collect::<PyResult<Vec<_>>>()?;
            Value::str(parts.join(s))
        }
        "replace" => {
            let old = a.require(0, "old", "replace")?.expect_str("old")?;
            let new = a.require(1, "new", "replace")?.expect_str("new")?;
            Value::str(s.replace(&old, &new))
        }
        "startswith" | "endswith" => {
            let p = a.require(0, "prefix", name)?;
            let options = match &p {
                Value::Tuple(t) => t.iter().map(|v| v.expect_str("prefix")).collect::<PyResult<Vec<_>>>()?,
                v => vec![v.expect_str("prefix")?],
            };
            Value::Bool(options.iter().any(|o| {
                if name == "startswith" {
                    s.starts_with(o.as_str())
                } else {
                    s.ends_with(o.as_str())
                }
            }))
        }
        "format" => Value::str(str_format(s, &a)?),
        "title" => {
            let mut out = String::new();
            let mut prev_alpha = false;
            for c in s.chars() {
                if prev_alpha {
                    out.extend(c.to_lowercase());
                } else {
                    out.extend(c.to_uppercase());
                }
                prev_alpha = c.is_alphabetic();
            }
            Value::str(out)
        }
        "capitalize" => {
            let mut chars = s.chars();
            Value::str(match chars.next() {
                Some(f) => f.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect::<String>(),
                None => String::new(),
            })
        }
        "find" | "index" => {
            let sub = a.require(0, "sub", name)?.expect_str("sub")?;
            match s.find(&sub) {
                Some(byte) => Value::Int(s[..byte].chars().count() as i64),
                None if name == "find" => Value::Int(-1),
                None => return Err(Exception::value_error("substring not found")),
            }
        }
        "count" => {
            let sub = a.require(0, "sub", "count")?.expect_str("sub")?;
            Value::Int(if sub.is_empty() { s.chars().count() as i64 + 1 } else { s.matches(&sub).count() as i64 })
        }
        "isdigit" | "isnumeric" => Value::Bool(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())),
        "isalpha" => Value::Bool(!s.is_empty() && s.chars().all(char::is_alphabetic)),
        "isupper" => Value::Bool(s.chars().any(char::is_alphabetic) && !s.chars().any(char::is_lowercase)),
        "islower" => Value::Bool(s.chars().any(char::is_alphabetic) && !s.chars().any(char::is_uppercase)),
        "isspace" => Value::Bool(!s.is_empty() && s.chars().all(char::is_whitespace)),
        "zfill" | "ljust" | "rjust" | "center" => {
            let width = a.require(0, "width", name)?.expect_int("width")?.max(0) as usize;
            let fill = arg_str(1, "fillchar")?.and_then(|f| f.chars().next()).unwrap_or(' ');
            let spec = match name {
                "zfill" => format!("0{width}"),
                "ljust" => format!("{fill}<{width}"),
                "rjust" => format!("{fill}>{width}"),
                _ => format!("{fill}^{width}"),
            };
            if name == "zfill" {
                let len = s.chars().count();
                Value::str(format!("{}{s}", "0".repeat(width.saturating_sub(len))))
            } else {
                Value::str(format_spec(&Value::str(s), &spec)?)
            }
        }
        _ => return Err(Exception::attribute_error("str", name)),
    })
}

pub const LIST_METHODS: &[&str] = &[
    "append", "extend", "insert", "pop", "remove", "index", "count", "sort", "reverse", "copy", "clear",
];

pub fn list_method(
    interp: &mut Interp,
    list: &Rc<RefCell<Vec<Value>>>,
    name: &str,
    a: Args,
) -> PyResult<Value> {
    Ok(match name {
        "append" => {
            let v = a.require(0, "object", "append")?;
            list.borrow_mut().push(v);
            Value::None
        }
        "extend" => {
            let items = iterate(&a.require(0, "iterable", "extend")?)?;
            list.borrow_mut().extend(items);
            Value::None
        }
        "insert" => {
            let idx = a.require(0, "index", "insert")?.expect_int("index")?;
            let v = a.require(1, "object", "insert")?;
            let mut l = list.borrow_mut();
            let len = l.len() as i64;
            let i = if idx < 0 { (idx + len).max(0) } else { idx.min(len) };
            l.insert(i as usize, v);
            Value::None
        }
        "pop" => {
            let mut l = list.borrow_mut();
            if l.is_empty() {
                return Err(Exception::index_error("pop from empty list"));
            }
            let idx = match a.pos.first() {
                Some(v) => norm_index(v.expect_int("index")?, l.len())?,
                None => l.len() - 1,
            };
            l.remove(idx)
        }
        "remove" => {
            let v = a.require(0, "value", "remove")?;
            let mut l = list.borrow_mut();
            let idx = l
                .iter()
                .position(|w| py_eq(w, &v))
                .ok_or_else(|| Exception::value_error("list.remove(x): x not in list"))?;
            l.remove(idx);
            Value::None
        }
        "index" => {
            let v = a.require(0, "value", "index")?;
            let idx = list
                .borrow()
                .iter()
                .position(|w| py_eq(w, &v))
                .ok_or_else(|| Exception::value_error(format!("{} is not in list", repr(&v))))?;
            Value::Int(idx as i64)
        }
        "count" => {
            let v = a.require(0, "value", "count")?;
            Value::Int(list.borrow().iter().filter(|w| py_eq(w, &v)).count() as i64)
        }
        "sort" => {
            let items = list.borrow().clone();
            let reverse = a.kw("reverse").map(|v| v.truthy()).transpose()?.unwrap_or(false);
            let sorted = sort_values(interp, items, a.kw("key").as_ref(), reverse)?;
            *list.borrow_mut() = sorted;
            Value::None
        }
        "reverse" => {
            list.borrow_mut().reverse();
            Value::None
        }
        "copy" => Value::list(list.borrow().clone()),
        "clear" => {
            list.borrow_mut().clear();
            Value::None
        }
        _ => return Err(Exception::attribute_error("list", name)),
    })
}

pub const DICT_METHODS: &[&str] = &["get", "keys", "values", "items", "update", "pop", "setdefault", "copy", "clear"];

pub fn dict_method(d: &Rc<RefCell<Dict>>, name: &str, a: Args) -> PyResult<Value> {
    Ok(match name {
        "get" => {
            let k = a.require(0, "key", "get")?;
            d.borrow().get(&k).unwrap_or_else(|| a.pos.get(1).cloned().unwrap_or(Value::None))
        }
        "keys" => Value::list(d.borrow().entries.iter().map(|(k, _)| k.clone()).collect()),
        "values" => Value::list(d.borrow().entries.iter().map(|(_, v)| v.clone()).collect()),
        "items" => Value::list(
            d.borrow()
                .entries
                .iter()
                .map(|(k, v)| Value::tuple(vec![k.clone(), v.clone()]))
                .collect(),
        ),
        "update" => {
            if let Some(Value::Dict(other)) = a.pos.first() {
                let entries = other.borrow().entries.clone();
                for (k, v) in entries {
                    d.borrow_mut().insert(k, v);
                }
            }
            for (k, v) in a.kw {
                d.borrow_mut().insert(Value::str(k), v);
            }
            Value::None
        }
        "pop" => {
            let k = a.require(0, "key", "pop")?;
            let removed = d.borrow_mut().remove(&k);
            match (removed, a.pos.get(1)) {
                (Some(v), _) => v,
                (None, Some(default)) => default.clone(),
                (None, None) => return Err(Exception::key_error(repr(&k))),
            }
        }
        "setdefault" => {
            let k = a.require(0, "key", "setdefault")?;
            let existing = d.borrow().get(&k);
            match existing {
                Some(v) => v,
                None => {
                    let v = a.pos.get(1).cloned().unwrap_or(Value::None);
                    d.borrow_mut().insert(k, v.clone());
                    v
                }
            }
        }
        "copy" => Value::Dict(Rc::new(RefCell::new(d.borrow().clone()))),
        "clear" => {
            d.borrow_mut().entries.clear();
            Value::None
        }
        _ => return Err(Exception::attribute_error("dict", name)),
    })
}

pub const SET_METHODS: &[&str] = &["add", "update", "discard", "remove", "union", "intersection", "difference", "issubset", "copy"];

pub fn set_method(s: &Rc<RefCell<Vec<Value>>>, name: &str, a: Args) -> PyResult<Value> {
    let this = Value::Set(s.clone());
    Ok(match name {
        "add" => {
            let v = a.require(0, "elem", "add")?;
            if !s.borrow().iter().any(|w| py_eq(w, &v)) {
                s.borrow_mut().push(v);
            }
            Value::None
        }
        "update" => {
            for src in &a.pos {
                for v in iterate(src)? {
                    if !s.borrow().iter().any(|w| py_eq(w, &v)) {
                        s.borrow_mut().push(v);
                    }
                }
            }
            Value::None
        }
        "discard" | "remove" => {
            let v = a.require(0, "elem", name)?;
            let pos = s.borrow().iter().position(|w| py_eq(w, &v));
            match pos {
                Some(p) => {
                    s.borrow_mut().remove(p);
                }
                None if name == "remove" => return Err(Exception::key_error(repr(&v))),
                None => {}
            }
            Value::None
        }
        "union" | "intersection" | "difference" => {
            let other = make_set(iterate(&a.require(0, "other", name)?)?);
            let op = match name {
                "union" => BinOp::BitOr,
                "intersection" => BinOp::BitAnd,
                _ => BinOp::Sub,
            };
            set_op(op, &this, &other)?
        }
        "issubset" => {
            let other = iterate(&a.require(0, "other", name)?)?;
            Value::Bool(s.borrow().iter().all(|v| other.iter().any(|w| py_eq(v, w))))
        }
        "copy" => make_set(s.borrow().clone()),
        _ => return Err(Exception::attribute_error("set", name)),
    })
}
