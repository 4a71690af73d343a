//! The pure standard-library modules plus a small `numpy`.

use std::rc::Rc;

use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::geom::{json_to_value, value_to_json};
use crate::libs::series;
use crate::value::*;

pub const MATH_FUNCTIONS: &[&str] = &[
    "sqrt", "floor", "ceil", "log", "log10", "log2", "exp", "sin", "cos", "tan", "asin", "acos", "atan", "atan2",
    "radians", "degrees", "isnan", "isinf", "isfinite", "isclose", "hypot", "fabs", "pow", "trunc", "fsum",
];

pub fn math_constant(name: &str) -> Option<Value> {
    Some(Value::Float(match name {
        "pi" => std::f64::consts::PI,
        "e" => std::f64::consts::E,
        "tau" => std::f64::consts::TAU,
        "inf" => f64::INFINITY,
        "nan" => f64::NAN,
        _ => return None,
    }))
}

fn num(a: &Args, i: usize, func: &str) -> PyResult<f64> {
    a.pos
        .get(i)
        .ok_or_else(|| Exception::type_error(format!("{func}() missing argument")))?
        .expect_f64("must be real number")
}

pub fn math_call(name: &str, a: Args) -> PyResult<Value> {
    let x = || num(&a, 0, name);
    let domain = |ok: bool, v: f64| {
        if ok {
            Ok(Value::Float(v))
        } else {
            Err(Exception::value_error("math domain error"))
        }
    };
    match name {
        "sqrt" => {
            let v = x()?;
            domain(v >= 0.0, v.sqrt())
        }
        "floor" => Ok(Value::Int(x()?.floor() as i64)),
        "ceil" => Ok(Value::Int(x()?.ceil() as i64)),
        "trunc" => Ok(Value::Int(x()?.trunc() as i64)),
        "log" => {
            let v = x()?;
            let base = a.pos.get(1).map(|b| b.expect_f64("base")).transpose()?;
            domain(v > 0.0, base.map_or(v.ln(), |b| v.ln() / b.ln()))
        }
        "log10" => {
            let v = x()?;
            domain(v > 0.0, v.log10())
        }
        "log2" => {
            let v = x()?;
            domain(v > 0.0, v.log2())
        }
        "exp" => Ok(Value::Float(x()?.exp())),
        "sin" => Ok(Value::Float(x()?.sin())),
        "cos" => Ok(Value::Float(x()?.cos())),
        "tan" => Ok(Value::Float(x()?.tan())),
        "asin" => {
            let v = x()?;
            domain((-1.0..=1.0).contains(&v), v.asin())
        }
        "acos" => {
            let v = x()?;
            domain((-1.0..=1.0).contains(&v), v.acos())
        }
        "atan" => Ok(Value::Float(x()?.atan())),
        "atan2" => Ok(Value::Float(x()?.atan2(num(&a, 1, name)?))),
        "radians" => Ok(Value::Float(x()?.to_radians())),
        "degrees" => Ok(Value::Float(x()?.to_degrees())),
        "isnan" => Ok(Value::Bool(x()?.is_nan())),
        "isinf" => Ok(Value::Bool(x()?.is_infinite())),
        "isfinite" => Ok(Value::Bool(x()?.is_finite())),
        "isclose" => {
            let (p, q) = (x()?, num(&a, 1, name)?);
            let rel = a.kw("rel_tol").map(|v| v.expect_f64("rel_tol")).transpose()?.unwrap_or(1e-9);
            let abs = a.kw("abs_tol").map(|v| v.expect_f64("abs_tol")).transpose()?.unwrap_or(0.0);
            Ok(Value::Bool((p - q).abs() <= (rel * p.abs().max(q.abs())).max(abs)))
        }
        "hypot" => Ok(Value::Float(a.pos.iter().map(|v| v.expect_f64("x")).collect::<PyResult<Vec<_>>>()?.iter().map(|v| v * v).sum::<f64>().sqrt())),
        "fabs" => Ok(Value::Float(x()?.abs())),
        "pow" => Ok(Value::Float(x()?.powf(num(&a, 1, name)?))),
        "fsum" => {
            let items = iterate(&a.require(0, "seq", name)?)?;
            Ok(Value::Float(items.iter().map(|v| v.expect_f64("item")).sum::<PyResult<f64>>()?))
        }
        _ => Err(Exception::attribute_error("math", name)),
    }
}

pub fn json_call(name: &str, a: Args) -> PyResult<Value> {
    match name {
        "dumps" => {
            let v = value_to_json(&a.require(0, "obj", name)?)?;
            let text = match a.kw("indent") {
                Some(_) => serde_json::to_string_pretty(&v),
                None => serde_json::to_string(&v),
            };
            Ok(Value::str(text.map_err(|e| Exception::value_error(e.to_string()))?))
        }
        "loads" => {
            let s = a.require(0, "s", name)?.expect_str("s")?;
            let v: serde_json::Value = serde_json::from_str(&s)
                .map_err(|e| Exception::new("JSONDecodeError", e.to_string()))?;
            Ok(json_to_value(&v))
        }
        "dump" | "load" => Err(Exception::new(
            "PermissionError",
            "file objects are not available; use json.dumps/json.loads",
        )),
        _ => Err(Exception::attribute_error("json", name)),
    }
}

pub const TYPING_NAMES: &[&str] = &[
    "List", "Dict", "Optional", "Tuple", "Any", "Union", "Callable", "Iterable", "Sequence", "Set", "Mapping",
];

pub fn warnings_call(interp: &mut Interp, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "warn" => {
            let msg = a.pos.first().map(to_str).unwrap_or_default();
            interp.stdout.push_str(&format!("UserWarning: {msg}\n"));
            Ok(Value::None)
        }
        "filterwarnings" | "simplefilter" | "resetwarnings" => Ok(Value::None),
        _ => Err(Exception::attribute_error("warnings", name)),
    }
}

// ---- numpy ----

pub const NUMPY_FUNCTIONS: &[&str] = &[
    "array", "isnan", "mean", "sum", "min", "max", "sqrt", "abs", "arange", "linspace", "where", "unique",
    "round", "zeros", "ones", "median", "std", "log", "exp", "clip", "concatenate", "asarray",
];

pub fn numpy_constant(name: &str) -> Option<Value> {
    Some(match name {
        "nan" | "NaN" => Value::Float(f64::NAN),
        "inf" => Value::Float(f64::INFINITY),
        "pi" => Value::Float(std::f64::consts::PI),
        "e" => Value::Float(std::f64::consts::E),
        _ => return None,
    })
}

fn array(items: Vec<Value>) -> Value {
    Value::Array(Rc::new(items))
}

fn elementwise(v: &Value, f: impl Fn(f64) -> Value) -> PyResult<Value> {
    match v {
        Value::Series(s) => {
            let out = s.values().iter().map(|x| x.as_f64().map_or(Value::None, &f)).collect::<Vec<_>>();
            Ok(Value::series(s.with_data(column_from_values(&out)?)))
        }
        Value::Array(_) | Value::List(_) | Value::Tuple(_) => Ok(array(
            iterate(v)?.iter().map(|x| x.as_f64().map_or(Value::Float(f64::NAN), &f)).collect(),
        )),
        scalar => Ok(f(scalar.expect_f64("x")?)),
    }
}

fn reduce(interp: &mut Interp, name: &str, v: &Value) -> PyResult<Value> {
    let s = match v {
        Value::Series(s) => s.clone(),
        other => Rc::new(series::from_value(other, None)?),
    };
    series::method(interp, &s, name, Args::default())
}

pub fn numpy_call(interp: &mut Interp, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "array" | "asarray" => Ok(array(iterate(&a.require(0, "object", name)?)?)),
        "isnan" => elementwise(&a.require(0, "x", name)?, |x| Value::Bool(x.is_nan())),
        "sqrt" => elementwise(&a.require(0, "x", name)?, |x| Value::Float(x.sqrt())),
        "abs" => elementwise(&a.require(0, "x", name)?, |x| Value::Float(x.abs())),
        "log" => elementwise(&a.require(0, "x", name)?, |x| Value::Float(x.ln())),
        "exp" => elementwise(&a.require(0, "x", name)?, |x| Value::Float(x.exp())),
        "round" => {
            let d = a.get(1, "decimals").map(|v| v.expect_int("decimals")).transpose()?.unwrap_or(0);
            series::round(&a.require(0, "a", name)?, d)
        }
        "clip" => {
            let lo = a.require(1, "a_min", name)?.expect_f64("a_min")?;
            let hi = a.require(2, "a_max", name)?.expect_f64("a_max")?;
            elementwise(&a.require(0, "a", name)?, |x| Value::Float(x.clamp(lo, hi)))
        }
        "mean" | "sum" | "min" | "max" | "median" | "std" => {
            let v = a.require(0, "a", name)?;
            if name == "std" {
                let s = Rc::new(series::from_value(&v, None)?);
                return series::method(interp, &s, "std", Args { pos: vec![], kw: vec![("ddof".into(), Value::Int(0))] });
            }
            reduce(interp, name, &v)
        }
        "unique" => {
            let s = series::from_value(&a.require(0, "ar", name)?, None)?;
            let mut vals = series::unique_values(&s);
            vals.sort_by(|x, y| py_cmp(x, y).unwrap_or(std::cmp::Ordering::Equal));
            Ok(array(vals))
        }
        "arange" => {
            let nums: Vec<f64> = a.pos.iter().map(|v| v.expect_f64("arange")).collect::<PyResult<_>>()?;
            let (start, stop, step) = match nums.as_slice() {
                [stop] => (0.0, *stop, 1.0),
                [start, stop] => (*start, *stop, 1.0),
                [start, stop, step] => (*start, *stop, *step),
                _ => return Err(Exception::type_error("arange() takes 1 to 3 arguments")),
            };
            if step == 0.0 {
                return Err(Exception::value_error("step cannot be zero"));
            }
            let ints = a.pos.iter().all(|v| matches!(v, Value::Int(_)));
            let n = ((stop - start) / step).ceil().max(0.0) as usize;
            Ok(array(
                (0..n)
                    .map(|i| {
                        let x = start + step * i as f64;
                        if ints { Value::Int(x as i64) } else { Value::Float(x) }
                    })
                    .collect(),
            ))
        }
        "linspace" => {
            let start = num(&a, 0, name)?;
            let stop = num(&a, 1, name)?;
            let n = a.get(2, "num").map(|v| v.expect_int("num")).transpose()?.unwrap_or(50).max(0) as usize;
            let step = if n > 1 { (stop - start) / (n - 1) as f64 } else { 0.0 };
            Ok(array((0..n).map(|i| Value::Float(start + step * i as f64)).collect()))
        }
        "zeros" | "ones" => {
            let n = a.require(0, "shape", name)?.expect_int("shape")?.max(0) as usize;
            Ok(array(vec![Value::Float(if name == "ones" { 1.0 } else { 0.0 }); n]))
        }
        "where" => {
            let cond = iterate(&a.require(0, "condition", name)?)?;
            let pick = |v: &Value, i: usize| -> PyResult<Value> {
                match v {
                    Value::Series(_) | Value::Array(_) | Value::List(_) => {
                        iterate(v)?.get(i).cloned().ok_or_else(|| Exception::value_error("operands could not be broadcast together"))
                    }
                    scalar => Ok(scalar.clone()),
                }
            };
            let x = a.require(1, "x", name)?;
            let y = a.require(2, "y", name)?;
            let out = cond
                .iter()
                .enumerate()
                .map(|(i, c)| if c.truthy()? { pick(&x, i) } else { pick(&y, i) })
                .collect::<PyResult<Vec<_>>>()?;
            Ok(array(out))
        }
        "concatenate" => {
            let mut out = Vec::new();
            for part in iterate(&a.require(0, "arrays", name)?)? {
                out.extend(iterate(&part)?);
            }
            Ok(array(out))
        }
        _ => Err(Exception::attribute_error("numpy", name)),
    }
}
