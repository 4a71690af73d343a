//! One-dimensional labelled columns (`pandas.Series` / `geopandas.GeoSeries`).

use std::rc::Rc;

use geoframe::{geometry, ColumnData, Crs, DType, Geometry, Scalar};

use crate::ast::{BinOp, CmpOp, UnaryOp};
use crate::builtins::round_half_even;
use crate::exception::{Exception, PyResult};
use crate::interp::{float_binary, int_binary, Interp};
use crate::libs::geom;
use crate::value::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: Option<String>,
    pub data: ColumnData,
    /// Row labels; `None` means the default positional index.
    pub index: Option<Vec<Scalar>>,
    pub crs: Option<Crs>,
}

impl Series {
    pub fn new(name: Option<String>, data: ColumnData) -> Self {
        Series {
            name,
            data,
            index: None,
            crs: None,
        }
    }

    pub fn with_data(&self, data: ColumnData) -> Series {
        Series {
            name: self.name.clone(),
            index: self.index.clone(),
            crs: if data.dtype() == DType::Geometry { self.crs.clone() } else { None },
            data,
        }
    }

    pub fn is_geo(&self) -> bool {
        self.data.dtype() == DType::Geometry
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> Value {
        Value::from_scalar(self.data.get(i))
    }

    pub fn values(&self) -> Vec<Value> {
        self.data.iter().map(Value::from_scalar).collect()
    }

    pub fn label(&self, i: usize) -> Scalar {
        match &self.index {
            Some(idx) => idx[i].clone(),
            None => Scalar::Int(i as i64),
        }
    }

    pub fn geometries(&self) -> PyResult<&[Option<Geometry>]> {
        match &self.data {
            ColumnData::Geometry(g) => Ok(g),
            _ => Err(Exception::attribute_error("Series", "geometry operations (not a GeoSeries)")),
        }
    }

    pub fn take(&self, indices: &[usize]) -> Series {
        Series {
            name: self.name.clone(),
            data: self.data.take(indices),
            index: self.index.as_ref().map(|idx| indices.iter().map(|&i| idx[i].clone()).collect()),
            crs: self.crs.clone(),
        }
    }

    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        let labels: Vec<String> = (0..self.len()).map(|i| self.label(i).to_string()).collect();
        let width = labels.iter().map(String::len).max().unwrap_or(0);
        for (i, label) in labels.iter().enumerate() {
            let v = self.data.get(i);
            let text = match v {
                Scalar::Null => "NaN".to_string(),
                other => other.to_string(),
            };
            lines.push(format!("{label:<width$}    {text}"));
        }
        let mut footer = Vec::new();
        if let Some(n) = &self.name {
            footer.push(format!("Name: {n}"));
        }
        footer.push(format!("dtype: {}", self.data.dtype().name()));
        lines.push(footer.join(", "));
        lines.join("\n")
    }
}

fn series_values(v: &Value, len: usize) -> PyResult<Vec<Value>> {
    Ok(match v {
        Value::Series(s) => {
            if s.len() != len {
                return Err(Exception::value_error(format!(
                    "Can only compare identically-labeled Series objects (lengths {} and {len})",
                    s.len()
                )));
            }
            s.values()
        }
        Value::Array(a) => {
            if a.len() != len {
                return Err(Exception::value_error(format!(
                    "operands could not be broadcast together with shapes ({len},) ({},)",
                    a.len()
                )));
            }
            (**a).clone()
        }
        Value::List(l) if l.borrow().len() == len => l.borrow().clone(),
        scalar => vec![scalar.clone(); len],
    })
}

/// Result container matching the left-most vector operand. An empty
/// result keeps the operand's dtype.
fn wrap_like(template: &Value, values: Vec<Value>) -> PyResult<Value> {
    match template {
        Value::Series(s) if values.is_empty() => Ok(Value::series(s.with_data(s.data.take(&[])))),
        Value::Series(s) => Ok(Value::series(s.with_data(column_from_values(&values)?))),
        _ => Ok(Value::Array(Rc::new(values))),
    }
}

fn vector_operand<'a>(a: &'a Value, b: &'a Value) -> (&'a Value, usize) {
    for v in [a, b] {
        match v {
            Value::Series(s) => return (v, s.len()),
            Value::Array(arr) => return (v, arr.len()),
            _ => {}
        }
    }
    (a, 0)
}

pub fn scalar_binary(op: BinOp, a: &Value, b: &Value) -> PyResult<Value> {
    match (a, b) {
        (Value::None, _) | (_, Value::None) => Ok(Value::None),
        (Value::Float(f), _) | (_, Value::Float(f)) if f.is_nan() => Ok(Value::Float(f64::NAN)),
        (Value::Bool(x), Value::Bool(y)) if matches!(op, BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor) => {
            Ok(Value::Bool(match op {
                BinOp::BitAnd => *x && *y,
                BinOp::BitOr => *x || *y,
                _ => x != y,
            }))
        }
        (Value::Str(x), Value::Str(y)) if op == BinOp::Add => Ok(Value::str(format!("{x}{y}"))),
        _ => match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) if !matches!(a, Value::Float(_)) && !matches!(b, Value::Float(_)) => {
                int_binary(op, x, y)
            }
            _ => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => match float_binary(op, x, y) {
                    Err(e) if e.kind == "ZeroDivisionError" => Ok(Value::Float(if x == 0.0 {
                        f64::NAN
                    } else {
                        f64::INFINITY.copysign(x)
                    })),
                    other => other,
                },
                _ => Err(Exception::type_error(format!(
                    "unsupported operand type(s) for {}: '{}' and '{}'",
                    op.symbol(),
                    a.type_name(),
                    b.type_name()
                ))),
            },
        },
    }
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> PyResult<Value> {
    let (template, len) = vector_operand(a, b);
    let xs = series_values(a, len)?;
    let ys = series_values(b, len)?;
    let out = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| scalar_binary(op, x, y))
        .collect::<PyResult<Vec<_>>>()?;
    wrap_like(template, out)
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> PyResult<Value> {
    let (template, len) = vector_operand(a, b);
    let xs = series_values(a, len)?;
    let ys = series_values(b, len)?;
    let out = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            if x.is_none() || y.is_none() {
                return Ok(Value::Bool(op == CmpOp::NotEq));
            }
            Ok(Value::Bool(match op {
                CmpOp::Eq => py_eq(x, y),
                CmpOp::NotEq => !py_eq(x, y),
                CmpOp::Lt => py_cmp(x, y)?.is_lt(),
                CmpOp::LtE => py_cmp(x, y)?.is_le(),
                CmpOp::Gt => py_cmp(x, y)?.is_gt(),
                CmpOp::GtE => py_cmp(x, y)?.is_ge(),
                _ => unreachable!("membership is not elementwise"),
            }))
        })
        .collect::<PyResult<Vec<_>>>()?;
    match template {
        // Bool dtype even when empty, so the result still works as a mask.
        Value::Series(s) => {
            let mask = out.iter().map(|v| Some(matches!(v, Value::Bool(true)))).collect();
            Ok(Value::series(s.with_data(ColumnData::Bool(mask))))
        }
        _ => wrap_like(template, out),
    }
}

pub fn unary(op: UnaryOp, v: &Value) -> PyResult<Value> {
    let len = match v {
        Value::Series(s) => s.len(),
        Value::Array(a) => a.len(),
        _ => 0,
    };
    let out = series_values(v, len)?
        .into_iter()
        .map(|x| match (op, &x) {
            (_, Value::None) => Ok(Value::None),
            (UnaryOp::Invert, Value::Bool(b)) => Ok(Value::Bool(!b)),
            (UnaryOp::Invert, Value::Int(i)) => Ok(Value::Int(!i)),
            (UnaryOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
            (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
            (UnaryOp::Pos, _) if x.as_f64().is_some() => Ok(x.clone()),
            _ => Err(Exception::type_error(format!("bad operand type for unary operator: '{}'", x.type_name()))),
        })
        .collect::<PyResult<Vec<_>>>()?;
    wrap_like(v, out)
}

pub fn abs(v: &Value) -> PyResult<Value> {
    map_numeric(v, |x| match x {
        Value::Int(i) => Value::Int(i.abs()),
        Value::Float(f) => Value::Float(f.abs()),
        other => other,
    })
}

pub fn round(v: &Value, digits: i64) -> PyResult<Value> {
    map_numeric(v, |x| match x {
        Value::Float(f) => Value::Float(round_half_even(f, digits as i32)),
        other => other,
    })
}

fn map_numeric(v: &Value, f: impl Fn(Value) -> Value) -> PyResult<Value> {
    let items = match v {
        Value::Series(s) => s.values(),
        Value::Array(a) => (**a).clone(),
        _ => return Ok(f(v.clone())),
    };
    wrap_like(v, items.into_iter().map(f).collect())
}

pub const METHODS: &[&str] = &[
    "unique", "tolist", "to_list", "value_counts", "sum", "mean", "median", "min", "max", "count", "nunique",
    "std", "var", "isin", "isna", "isnull", "notna", "notnull", "astype", "apply", "map", "fillna", "dropna",
    "head", "tail", "copy", "sort_values", "reset_index", "any", "all", "round", "abs", "idxmax", "idxmin",
    "intersects", "within", "contains", "touches", "disjoint", "distance", "to_crs", "set_crs", "plot",
    "union_all", "between", "cumsum", "item", "to_numpy", "rename", "sample", "to_frame", "explore",
    "simplify", "buffer", "describe",
];

pub fn attr(interp: &mut Interp, s: &Rc<Series>, name: &str) -> PyResult<Option<Value>> {
    let _ = interp;
    Ok(Some(match name {
        "name" => s.name.clone().map_or(Value::None, Value::str),
        "values" => Value::Array(Rc::new(s.values())),
        "index" => Value::list((0..s.len()).map(|i| Value::from_scalar(s.label(i))).collect()),
        "dtype" => Value::str(s.data.dtype().name()),
        "shape" => Value::tuple(vec![Value::Int(s.len() as i64)]),
        "size" => Value::Int(s.len() as i64),
        "empty" => Value::Bool(s.is_empty()),
        "str" => {
            if s.data.dtype() != DType::Str {
                return Err(Exception::attribute_error("Can only use .str accessor with string values", ""));
            }
            Value::object(Object::StrAccessor(s.clone()))
        }
        "iloc" => Value::object(Object::ILoc(Value::Series(s.clone()))),
        "loc" => Value::object(Object::Loc(Value::Series(s.clone()))),
        "crs" if s.is_geo() => s.crs.as_ref().map_or(Value::None, |c| Value::object(Object::Crs(c.clone()))),
        "geometry" if s.is_geo() => Value::Series(s.clone()),
        _ if s.is_geo() => match geom::series_property(s, name)? {
            Some(v) => v,
            None => return Ok(None),
        },
        _ => return Ok(None),
    }))
}

fn numeric(s: &Series, what: &str) -> PyResult<Vec<f64>> {
    s.data.numeric_values().ok_or_else(|| {
        Exception::type_error(format!("cannot perform {what} with type {}", s.data.dtype().name()))
    })
}

fn number(x: f64, int_like: bool) -> Value {
    if int_like && x.fract() == 0.0 && x.abs() < 9e15 {
        Value::Int(x as i64)
    } else {
        Value::Float(x)
    }
}

/// Sample variance with `ddof` degrees of freedom.
pub fn variance(values: &[f64], ddof: usize) -> Option<f64> {
    if values.len() <= ddof {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Some(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - ddof) as f64)
}

pub fn unique_values(s: &Series) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::new();
    for v in s.values() {
        if !out.iter().any(|w| py_eq(w, &v) || (w.is_none() && v.is_none())) {
            out.push(v);
        }
    }
    out
}

pub fn method(interp: &mut Interp, s: &Rc<Series>, name: &str, a: Args) -> PyResult<Value> {
    let int_like = matches!(s.data.dtype(), DType::Int64 | DType::Bool);
    Ok(match name {
        "unique" => Value::Array(Rc::new(unique_values(s))),
        "tolist" | "to_list" => Value::list(s.values()),
        "to_numpy" => Value::Array(Rc::new(s.values())),
        "item" => {
            if s.len() != 1 {
                return Err(Exception::value_error("can only convert an array of size 1 to a Python scalar"));
            }
            s.get(0)
        }
        "value_counts" => {
            let mut counts: Vec<(Value, i64)> = Vec::new();
            for v in s.values() {
                if v.is_none() {
                    continue;
                }
                match counts.iter_mut().find(|(k, _)| py_eq(k, &v)) {
                    Some(slot) => slot.1 += 1,
                    None => counts.push((v, 1)),
                }
            }
            counts.sort_by(|x, y| y.1.cmp(&x.1));
            let index = counts.iter().map(|(k, _)| k.to_scalar()).collect::<PyResult<Vec<_>>>()?;
            Value::series(Series {
                name: Some("count".into()),
                data: ColumnData::Int(counts.iter().map(|(_, c)| Some(*c)).collect()),
                index: Some(index),
                crs: None,
            })
        }
        "sum" => {
            let v = numeric(s, "sum")?;
            number(v.iter().sum(), int_like)
        }
        "cumsum" => {
            let mut acc = 0.0;
            let out: Vec<Value> = s
                .values()
                .into_iter()
                .map(|v| match v.as_f64() {
                    Some(x) => {
                        acc += x;
                        number(acc, int_like)
                    }
                    None => Value::None,
                })
                .collect();
            Value::series(s.with_data(column_from_values(&out)?))
        }
        "mean" => {
            let v = numeric(s, "mean")?;
            if v.is_empty() {
                Value::Float(f64::NAN)
            } else {
                Value::Float(v.iter().sum::<f64>() / v.len() as f64)
            }
        }
        "median" => {
            let mut v = numeric(s, "median")?;
            if v.is_empty() {
                Value::Float(f64::NAN)
            } else {
                v.sort_by(f64::total_cmp);
                let n = v.len();
                Value::Float(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
            }
        }
        "std" | "var" => {
            let ddof = a.kw("ddof").map(|d| d.expect_int("ddof")).transpose()?.unwrap_or(1) as usize;
            let var = variance(&numeric(s, name)?, ddof).unwrap_or(f64::NAN);
            Value::Float(if name == "std" { var.sqrt() } else { var })
        }
        "min" | "max" => {
            let vals: Vec<Value> = s.values().into_iter().filter(|v| !v.is_none()).collect();
            let mut best: Option<Value> = None;
            for v in vals {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let ord = py_cmp(&v, &b)?;
                        if (name == "min" && ord.is_lt()) || (name == "max" && ord.is_gt()) {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            best.unwrap_or(Value::Float(f64::NAN))
        }
        "idxmax" | "idxmin" => {
            let mut best: Option<(usize, Value)> = None;
            for (i, v) in s.values().into_iter().enumerate() {
                if v.is_none() {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((_, b)) => {
                        let ord = py_cmp(&v, b)?;
                        if name == "idxmax" {
                            ord.is_gt()
                        } else {
                            ord.is_lt()
                        }
                    }
                };
                if better {
                    best = Some((i, v));
                }
            }
            match best {
                Some((i, _)) => Value::from_scalar(s.label(i)),
                None => return Err(Exception::value_error("attempt to get argmax of an empty sequence")),
            }
        }
        "count" => Value::Int((s.len() - s.data.null_count()) as i64),
        "nunique" => Value::Int(unique_values(s).iter().filter(|v| !v.is_none()).count() as i64),
        "describe" => {
            let v = numeric(s, "describe")?;
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let q = |p: f64| -> f64 {
                if sorted.is_empty() {
                    return f64::NAN;
                }
                let pos = p * (sorted.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
            };
            let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            let stats = [
                ("count", v.len() as f64),
                ("mean", mean),
                ("std", variance(&v, 1).unwrap_or(f64::NAN).sqrt()),
                ("min", q(0.0)),
                ("25%", q(0.25)),
                ("50%", q(0.5)),
                ("75%", q(0.75)),
                ("max", q(1.0)),
            ];
            Value::series(Series {
                name: s.name.clone(),
                data: ColumnData::Float(stats.iter().map(|(_, x)| Some(*x)).collect()),
                index: Some(stats.iter().map(|(k, _)| Scalar::Str(k.to_string())).collect()),
                crs: None,
            })
        }
        "isin" => {
            let options = iterate(&a.require(0, "values", "isin")?)?;
            let out: Vec<Option<bool>> = s
                .values()
                .iter()
                .map(|v| Some(options.iter().any(|o| py_eq(o, v))))
                .collect();
            Value::series(s.with_data(ColumnData::Bool(out)))
        }
        "between" => {
            let lo = a.require(0, "left", "between")?;
            let hi = a.require(1, "right", "between")?;
            let mut out = Vec::with_capacity(s.len());
            for v in s.values() {
                out.push(Some(!v.is_none() && py_cmp(&v, &lo)?.is_ge() && py_cmp(&v, &hi)?.is_le()));
            }
            Value::series(s.with_data(ColumnData::Bool(out)))
        }
        "isna" | "isnull" | "notna" | "notnull" => {
            let want_null = name.starts_with("is");
            let out: Vec<Option<bool>> = s
                .data
                .iter()
                .map(|v| {
                    let null = v.is_null() || matches!(v, Scalar::Float(f) if f.is_nan());
                    Some(null == want_null)
                })
                .collect();
            Value::series(s.with_data(ColumnData::Bool(out)))
        }
        "astype" => {
            let target = a.require(0, "dtype", "astype")?;
            let tname = match &target {
                Value::Type(t) => t.name.to_string(),
                Value::Str(s) => s.to_string(),
                other => other.type_name(),
            };
            let converted: Vec<Value> = s
                .values()
                .into_iter()
                .map(|v| -> PyResult<Value> {
                    if v.is_none() {
                        return Ok(Value::None);
                    }
                    Ok(match tname.as_str() {
                        "str" | "object" | "string" => Value::str(to_str(&v)),
                        "int" | "int64" | "int32" => match v {
                            Value::Str(ref t) => Value::Int(t.trim().parse().map_err(|_| {
                                Exception::value_error(format!("invalid literal for int() with base 10: {}", quote(t)))
                            })?),
                            other => Value::Int(other.expect_f64("value")? as i64),
                        },
                        "float" | "float64" | "float32" => match v {
                            Value::Str(ref t) => Value::Float(t.trim().parse().map_err(|_| {
                                Exception::value_error(format!("could not convert string to float: {}", quote(t)))
                            })?),
                            other => Value::Float(other.expect_f64("value")?),
                        },
                        "bool" => Value::Bool(v.truthy()?),
                        "category" => v,
                        other => return Err(Exception::type_error(format!("data type '{other}' not understood"))),
                    })
                })
                .collect::<PyResult<_>>()?;
            Value::series(s.with_data(column_from_values(&converted)?))
        }
        "apply" | "map" => {
            let f = a.require(0, "func", name)?;
            let mut out = Vec::with_capacity(s.len());
            for v in s.values() {
                out.push(match &f {
                    Value::Dict(d) => d.borrow().get(&v).unwrap_or(Value::None),
                    Value::Series(lookup) => {
                        let pos = (0..lookup.len()).find(|&i| py_eq(&Value::from_scalar(lookup.label(i)), &v));
                        pos.map_or(Value::None, |i| lookup.get(i))
                    }
                    func => interp.call(func, Args::new(vec![v]))?,
                });
            }
            Value::series(s.with_data(column_from_values(&out)?))
        }
        "fillna" => {
            let fill = a.require(0, "value", "fillna")?;
            let out: Vec<Value> = s
                .values()
                .into_iter()
                .map(|v| match v {
                    Value::None => fill.clone(),
                    Value::Float(f) if f.is_nan() => fill.clone(),
                    other => other,
                })
                .collect();
            Value::series(s.with_data(column_from_values(&out)?))
        }
        "dropna" => {
            let keep: Vec<usize> = (0..s.len()).filter(|&i| !s.data.get(i).is_null()).collect();
            Value::series(s.take(&keep))
        }
        "head" | "tail" => {
            let n = a.get(0, "n").map(|v| v.expect_int("n")).transpose()?.unwrap_or(5).max(0) as usize;
            let n = n.min(s.len());
            let idx: Vec<usize> = if name == "head" { (0..n).collect() } else { (s.len() - n..s.len()).collect() };
            Value::series(s.take(&idx))
        }
        "sample" => {
            let n = a.get(0, "n").map(|v| v.expect_int("n")).transpose()?.unwrap_or(1).max(0) as usize;
            let idx: Vec<usize> = (0..n.min(s.len())).collect();
            Value::series(s.take(&idx))
        }
        "copy" => Value::series((**s).clone()),
        "rename" => {
            let mut out = (**s).clone();
            out.name = a.get(0, "index").map(|v| to_str(&v));
            Value::series(out)
        }
        "to_frame" => {
            let name = a.get(0, "name").map(|v| to_str(&v)).or_else(|| s.name.clone()).unwrap_or_else(|| "0".into());
            let geometry = if s.is_geo() { Some(name.as_str()) } else { None };
            let frame = geoframe::Frame::from_columns(
                vec![geoframe::Column::new(name.clone(), s.data.clone())],
                geometry,
                s.crs.clone(),
            )
            .map_err(|e| Exception::value_error(e.to_string()))?;
            Value::frame(frame)
        }
        "sort_values" => {
            let ascending = a.get(0, "ascending").map(|v| v.truthy()).transpose()?.unwrap_or(true);
            let values = s.values();
            let mut idx: Vec<usize> = (0..s.len()).collect();
            let mut err = None;
            idx.sort_by(|&x, &y| {
                // nulls go last regardless of direction
                match (values[x].is_none(), values[y].is_none()) {
                    (true, true) => return std::cmp::Ordering::Equal,
                    (true, false) => return std::cmp::Ordering::Greater,
                    (false, true) => return std::cmp::Ordering::Less,
                    _ => {}
                }
                match py_cmp(&values[x], &values[y]) {
                    Ok(o) => {
                        if ascending {
                            o
                        } else {
                            o.reverse()
                        }
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        std::cmp::Ordering::Equal
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Value::series(s.take(&idx))
        }
        "reset_index" => {
            let mut out = (**s).clone();
            out.index = None;
            Value::series(out)
        }
        "any" => Value::Bool(s.values().iter().map(Value::truthy).collect::<PyResult<Vec<_>>>()?.into_iter().any(|b| b)),
        "all" => Value::Bool(s.values().iter().map(Value::truthy).collect::<PyResult<Vec<_>>>()?.into_iter().all(|b| b)),
        "round" => round(
            &Value::Series(s.clone()),
            a.get(0, "decimals").map(|v| v.expect_int("decimals")).transpose()?.unwrap_or(0),
        )?,
        "abs" => abs(&Value::Series(s.clone()))?,
        "plot" => crate::libs::plot::plot_series(interp, s, a)?,
        _ if s.is_geo() => geom::series_method(interp, s, name, a)?,
        _ => return Err(Exception::attribute_error("Series", name)),
    })
}

/// `series[key]`
pub fn get_item(s: &Rc<Series>, key: &Value) -> PyResult<Value> {
    match key {
        Value::Series(mask) if mask.data.dtype() == DType::Bool => {
            let keep = bool_mask(mask, s.len())?;
            let idx: Vec<usize> = (0..s.len()).filter(|&i| keep[i]).collect();
            Ok(Value::series(s.take(&idx)))
        }
        Value::Slice(lo, hi, step) => {
            let idx = slice_indices(*lo, *hi, *step, s.len())?;
            Ok(Value::series(s.take(&idx)))
        }
        Value::List(_) | Value::Array(_) => {
            let keys = iterate(key)?;
            if keys.iter().all(|k| matches!(k, Value::Bool(_))) && keys.len() == s.len() {
                let idx: Vec<usize> = (0..s.len()).filter(|&i| matches!(keys[i], Value::Bool(true))).collect();
                return Ok(Value::series(s.take(&idx)));
            }
            let idx = keys
                .iter()
                .map(|k| label_position(s, k))
                .collect::<PyResult<Vec<_>>>()?;
            Ok(Value::series(s.take(&idx)))
        }
        k => Ok(s.get(label_position(s, k)?)),
    }
}

fn label_position(s: &Series, key: &Value) -> PyResult<usize> {
    match &s.index {
        Some(idx) => {
            let target = key.to_scalar()?;
            idx.iter()
                .position(|l| *l == target || (l.as_f64().is_some() && l.as_f64() == target.as_f64()))
                .ok_or_else(|| Exception::key_error(repr(key)))
        }
        None => {
            let i = key.as_int().ok_or_else(|| Exception::key_error(repr(key)))?;
            if i < 0 || i as usize >= s.len() {
                return Err(Exception::key_error(i));
            }
            Ok(i as usize)
        }
    }
}

/// Positional access (`series.iloc[i]`).
pub fn iloc(s: &Rc<Series>, key: &Value) -> PyResult<Value> {
    match key {
        Value::Slice(lo, hi, step) => {
            let idx = slice_indices(*lo, *hi, *step, s.len())?;
            Ok(Value::series(s.take(&idx)))
        }
        Value::List(_) => {
            let idx = iterate(key)?
                .iter()
                .map(|k| norm_index(k.expect_int("index")?, s.len()))
                .collect::<PyResult<Vec<_>>>()?;
            Ok(Value::series(s.take(&idx)))
        }
        k => Ok(s.get(norm_index(k.expect_int("index")?, s.len()).map_err(|_| {
            Exception::index_error("single positional indexer is out-of-bounds")
        })?)),
    }
}

pub fn bool_mask(mask: &Series, len: usize) -> PyResult<Vec<bool>> {
    let ColumnData::Bool(values) = &mask.data else {
        return Err(Exception::type_error("boolean mask expected"));
    };
    if values.len() != len {
        return Err(Exception::value_error(format!(
            "Item wrong length {} instead of {len}.",
            values.len()
        )));
    }
    Ok(values.iter().map(|v| v.unwrap_or(false)).collect())
}

pub const STR_ACCESSOR_METHODS: &[&str] = &[
    "contains", "lower", "upper", "strip", "startswith", "endswith", "replace", "len", "title", "split",
];

pub fn str_accessor(interp: &mut Interp, s: &Rc<Series>, name: &str, a: Args) -> PyResult<Value> {
    let case = a.kw("case").map(|v| v.truthy()).transpose()?.unwrap_or(true);
    let mut out = Vec::with_capacity(s.len());
    for v in s.values() {
        let Value::Str(text) = &v else {
            out.push(Value::None);
            continue;
        };
        out.push(match name {
            "contains" => {
                let pat = a.require(0, "pat", "contains")?.expect_str("pat")?;
                Value::Bool(if case {
                    text.contains(pat.as_str())
                } else {
                    text.to_lowercase().contains(&pat.to_lowercase())
                })
            }
            "len" => Value::Int(text.chars().count() as i64),
            "lower" | "upper" | "strip" | "startswith" | "endswith" | "replace" | "title" | "split" => {
                let args = Args {
                    pos: a.pos.clone(),
                    kw: a.kw.iter().filter(|(k, _)| k != "case" && k != "regex").cloned().collect(),
                };
                crate::builtins::str_method(interp, text, name, args)?
            }
            _ => return Err(Exception::attribute_error("StringMethods", name)),
        });
    }
    if name == "contains" {
        // missing values are treated as non-matching
        let out: Vec<Value> = out.into_iter().map(|v| if v.is_none() { Value::Bool(false) } else { v }).collect();
        return Ok(Value::series(s.with_data(column_from_values(&out)?)));
    }
    if name == "split" {
        return Ok(Value::series(s.with_data(ColumnData::Str(
            out.iter().map(|v| if v.is_none() { None } else { Some(repr(v)) }).collect(),
        ))));
    }
    Ok(Value::series(s.with_data(column_from_values(&out)?)))
}

/// Builds a series from a Python value (list, dict, scalar, array).
pub fn from_value(data: &Value, name: Option<String>) -> PyResult<Series> {
    match data {
        Value::Series(s) => {
            let mut out = (**s).clone();
            if name.is_some() {
                out.name = name;
            }
            Ok(out)
        }
        Value::Dict(d) => {
            let d = d.borrow();
            let index = d.entries.iter().map(|(k, _)| k.to_scalar()).collect::<PyResult<Vec<_>>>()?;
            let values: Vec<Value> = d.entries.iter().map(|(_, v)| v.clone()).collect();
            Ok(Series {
                name,
                data: column_from_values(&values)?,
                index: Some(index),
                crs: None,
            })
        }
        other => {
            let values = iterate(other)?;
            Ok(Series::new(name, column_from_values(&values)?))
        }
    }
}

/// Geometry helpers shared with frames.
pub fn geo_series(name: Option<String>, geoms: Vec<Option<Geometry>>, crs: Option<Crs>) -> Series {
    Series {
        name,
        data: ColumnData::Geometry(geoms),
        index: None,
        crs,
    }
}

pub fn total_bounds(s: &Series) -> PyResult<Value> {
    let b = geometry::total_bounds(s.geometries()?.iter().flatten());
    Ok(match b {
        Some(b) => Value::Array(Rc::new(b.iter().map(|v| Value::Float(*v)).collect())),
        None => Value::Array(Rc::new(vec![Value::Float(f64::NAN); 4])),
    })
}
