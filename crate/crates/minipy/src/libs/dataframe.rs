//! Tabular frames (`pandas.DataFrame` / `geopandas.GeoDataFrame`).
//!
//! Rows are addressed positionally: filtering does not keep the original
//! row labels.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;

use geoframe::{geometry, Column, ColumnData, Crs, DType, Frame, FrameError, Geometry, Scalar};

use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::geom;
use crate::libs::series::{self, Series};
use crate::value::*;

pub type FrameRef = Rc<RefCell<Frame>>;

pub fn frame_err(e: FrameError) -> Exception {
    match e {
        FrameError::UnknownColumn(c) => Exception::key_error(quote(&c)),
        FrameError::NoGeometry => Exception::attribute_error(
            "GeoDataFrame",
            "geometry (no active geometry column; use set_geometry)",
        ),
        other => Exception::value_error(other.to_string()),
    }
}

// ---- rendering ----

const MAX_ROWS: usize = 60;

fn cell(s: &Scalar) -> String {
    match s {
        Scalar::Null => "NaN".into(),
        Scalar::Float(f) if f.is_nan() => "NaN".into(),
        other => other.to_string(),
    }
}

/// Text table in the style of pandas.
pub fn render(f: &Frame) -> String {
    let names = f.column_names();
    if f.n_rows() == 0 {
        let kind = if f.is_geo() { "GeoDataFrame" } else { "DataFrame" };
        return format!("Empty {kind}\nColumns: [{}]\nIndex: []", names.join(", "));
    }
    let rows: Vec<Option<usize>> = if f.n_rows() > MAX_ROWS {
        (0..5).map(Some).chain([None]).chain((f.n_rows() - 5..f.n_rows()).map(Some)).collect()
    } else {
        (0..f.n_rows()).map(Some).collect()
    };
    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(names.iter().map(|n| n.to_string()));
    table.push(header);
    for r in &rows {
        let mut line = Vec::with_capacity(names.len() + 1);
        match r {
            Some(i) => {
                line.push(i.to_string());
                line.extend(f.columns().iter().map(|c| cell(&c.data.get(*i))));
            }
            None => line.extend(std::iter::repeat("...".to_string()).take(names.len() + 1)),
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..=names.len())
        .map(|k| table.iter().map(|row| row[k].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out: Vec<String> = table
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, text)| {
                    if k == 0 {
                        format!("{text:<w$}", w = widths[k])
                    } else {
                        format!("{text:>w$}", w = widths[k])
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
        })
        .collect();
    if f.n_rows() > MAX_ROWS {
        out.push(String::new());
        out.push(format!("[{} rows x {} columns]", f.n_rows(), names.len()));
    }
    out.join("\n")
}

// ---- helpers ----

pub fn column_series(f: &Frame, name: &str) -> PyResult<Series> {
    let col = f
        .column(name)
        .ok_or_else(|| Exception::key_error(quote(name)))?;
    let mut s = Series::new(Some(name.to_string()), col.data.clone());
    if col.dtype() == DType::Geometry {
        s.crs = f.crs().cloned();
    }
    Ok(s)
}

pub fn geometry_series(f: &Frame) -> PyResult<Series> {
    let name = f.geometry_name().ok_or_else(|| frame_err(FrameError::NoGeometry))?.to_string();
    column_series(f, &name)
}

/// Broadcasts a value to a column of `len` rows.
pub fn to_column(v: &Value, len: usize) -> PyResult<ColumnData> {
    let data = match v {
        Value::Series(s) => s.data.clone(),
        Value::Array(_) | Value::List(_) | Value::Tuple(_) | Value::Range(..) => column_from_values(&iterate(v)?)?,
        scalar => return Ok(ColumnData::repeat(&scalar.to_scalar()?, len)),
    };
    if data.len() != len {
        return Err(Exception::value_error(format!(
            "Length of values ({}) does not match length of index ({len})",
            data.len()
        )));
    }
    Ok(data)
}

fn mask_of(key: &Value, len: usize) -> PyResult<Option<Vec<bool>>> {
    Ok(match key {
        Value::Series(m) if m.data.dtype() == DType::Bool => Some(series::bool_mask(m, len)?),
        Value::List(_) | Value::Array(_) => {
            let items = iterate(key)?;
            if !items.is_empty() && items.iter().all(|v| matches!(v, Value::Bool(_))) {
                if items.len() != len {
                    return Err(Exception::value_error(format!(
                        "Item wrong length {} instead of {len}.",
                        items.len()
                    )));
                }
                Some(items.iter().map(|v| matches!(v, Value::Bool(true))).collect())
            } else {
                None
            }
        }
        _ => None,
    })
}

fn names_of(v: &Value) -> PyResult<Vec<String>> {
    match v {
        Value::Str(s) => Ok(vec![s.to_string()]),
        other => iterate(other)?.iter().map(|n| n.expect_str("column name")).collect(),
    }
}

pub fn scalar_cmp(a: &Scalar, b: &Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Null, Scalar::Null) => Ordering::Equal,
        (Scalar::Null, _) => Ordering::Greater,
        (_, Scalar::Null) => Ordering::Less,
        (Scalar::Str(x), Scalar::Str(y)) => x.cmp(y),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
            _ => Ordering::Equal,
        },
    }
}

fn scalar_eq(a: &Scalar, b: &Scalar) -> bool {
    a == b || matches!((a.as_f64(), b.as_f64()), (Some(x), Some(y)) if x == y)
}

pub fn row_value(f: &Frame, i: usize) -> Value {
    Value::object(Object::Row {
        columns: Rc::new(f.column_names().iter().map(|s| s.to_string()).collect()),
        values: f.row(i).into_iter().map(Value::from_scalar).collect(),
    })
}

fn named_series(name: Option<&str>, labels: Vec<Scalar>, values: &[Value]) -> PyResult<Value> {
    Ok(Value::series(Series {
        name: name.map(str::to_string),
        data: column_from_values(values)?,
        index: Some(labels),
        crs: None,
    }))
}

fn build_frame(columns: Vec<(String, ColumnData)>, geometry: Option<&str>, crs: Option<Crs>) -> PyResult<Frame> {
    let cols = columns.into_iter().map(|(n, d)| Column::new(n, d)).collect();
    Frame::from_columns(cols, geometry, crs).map_err(frame_err)
}

fn usize_arg(a: &Args, idx: usize, name: &str, default: usize) -> PyResult<usize> {
    match a.get(idx, name) {
        Some(v) => Ok(v.expect_int(name)?.max(0) as usize),
        None => Ok(default),
    }
}

fn bool_kw(a: &Args, name: &str, default: bool) -> PyResult<bool> {
    a.kw(name).map(|v| v.truthy()).transpose().map(|v| v.unwrap_or(default))
}

// ---- attributes ----

pub const METHODS: &[&str] = &[
    "head", "tail", "copy", "to_crs", "set_crs", "to_file", "to_csv", "to_json", "to_dict", "drop", "rename",
    "dropna", "fillna", "reset_index", "sort_values", "groupby", "merge", "apply", "iterrows", "itertuples",
    "assign", "explore", "plot", "dissolve", "sjoin", "set_geometry", "nunique", "count", "sum", "mean", "min",
    "max", "insert", "get", "items", "drop_duplicates", "nlargest", "nsmallest", "union_all", "intersects",
    "within", "contains", "touches", "disjoint", "distance", "buffer", "simplify", "isna", "notna", "describe",
    "set_index", "astype", "to_wkt", "info", "query",
];

const GEO_PROPERTIES: &[&str] = &[
    "total_bounds", "bounds", "unary_union", "area", "length", "centroid", "geom_type", "is_valid", "is_empty",
    "x", "y",
];

pub fn attr(f: &FrameRef, name: &str) -> PyResult<Option<Value>> {
    let fr = f.borrow();
    Ok(Some(match name {
        "columns" => Value::Array(Rc::new(fr.column_names().into_iter().map(Value::str).collect())),
        "shape" => Value::tuple(vec![Value::Int(fr.n_rows() as i64), Value::Int(fr.columns().len() as i64)]),
        "size" => Value::Int((fr.n_rows() * fr.columns().len()) as i64),
        "empty" => Value::Bool(fr.n_rows() == 0 || fr.columns().is_empty()),
        "index" => Value::Range(0, fr.n_rows() as i64, 1),
        "dtypes" => {
            let labels = fr.column_names().into_iter().map(|n| Scalar::Str(n.into())).collect();
            let values: Vec<Value> = fr.columns().iter().map(|c| Value::str(c.dtype().name())).collect();
            named_series(None, labels, &values)?
        }
        "values" => Value::list((0..fr.n_rows()).map(|i| Value::list(fr.row(i).into_iter().map(Value::from_scalar).collect())).collect()),
        "loc" => Value::object(Object::Loc(Value::Frame(f.clone()))),
        "iloc" => Value::object(Object::ILoc(Value::Frame(f.clone()))),
        "crs" if fr.is_geo() => fr.crs().map_or(Value::None, |c| Value::object(Object::Crs(c.clone()))),
        "geometry" if fr.is_geo() => Value::series(geometry_series(&fr)?),
        "__geo_interface__" if fr.is_geo() => geom::json_to_value(&fr.to_geojson_value()),
        "T" => return Err(Exception::new("NotImplementedError", "transpose is not supported")),
        p if fr.is_geo() && GEO_PROPERTIES.contains(&p) => {
            let s = Rc::new(geometry_series(&fr)?);
            drop(fr);
            return geom::series_property(&s, p);
        }
        _ => return Ok(None),
    }))
}

pub fn set_attr(f: &FrameRef, name: &str, value: Value) -> PyResult<()> {
    let mut fr = f.borrow_mut();
    match name {
        "crs" => {
            let crs = match value {
                Value::None => None,
                other => geom::crs_value(&other)?,
            };
            fr.set_crs(crs);
        }
        "geometry" => {
            let n = fr.n_rows();
            let data = to_column(&value, n)?;
            if data.dtype() != DType::Geometry {
                return Err(Exception::type_error("geometry must be set to geometries"));
            }
            let col = fr.geometry_name().unwrap_or("geometry").to_string();
            fr.set_column(&col, data).map_err(frame_err)?;
            fr.set_geometry(&col).map_err(frame_err)?;
        }
        "columns" => {
            let new = names_of(&value)?;
            let old: Vec<String> = fr.column_names().iter().map(|s| s.to_string()).collect();
            if new.len() != old.len() {
                return Err(Exception::value_error(format!(
                    "Length mismatch: Expected axis has {} elements, new values have {} elements",
                    old.len(),
                    new.len()
                )));
            }
            let mapping: Vec<(String, String)> = old.into_iter().zip(new).collect();
            *fr = fr.rename(&mapping);
        }
        _ => {
            if fr.column(name).is_some() {
                let n = fr.n_rows();
                fr.set_column(name, to_column(&value, n)?).map_err(frame_err)?;
            } else {
                return Err(Exception::new(
                    "AttributeError",
                    format!("cannot set attribute '{name}'; use df['{name}'] = ... to add a column"),
                ));
            }
        }
    }
    Ok(())
}

// ---- indexing ----

pub fn get_item(f: &FrameRef, key: &Value) -> PyResult<Value> {
    let fr = f.borrow();
    if let Some(mask) = mask_of(key, fr.n_rows())? {
        return Ok(Value::frame(fr.filter(&mask)));
    }
    match key {
        Value::Str(name) => Ok(Value::series(column_series(&fr, name)?)),
        Value::Slice(lo, hi, step) => {
            let idx = slice_indices(*lo, *hi, *step, fr.n_rows())?;
            Ok(Value::frame(fr.take(&idx)))
        }
        Value::List(_) | Value::Tuple(_) | Value::Array(_) => {
            let names = names_of(key)?;
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Ok(Value::frame(fr.select(&refs).map_err(frame_err)?))
        }
        Value::Series(s) => Err(Exception::key_error(format!(
            "cannot index with a {} Series",
            s.data.dtype().name()
        ))),
        other => Err(Exception::key_error(repr(other))),
    }
}

pub fn set_item(f: &FrameRef, key: &Value, value: Value) -> PyResult<()> {
    let name = key.expect_str("column key")?;
    let mut fr = f.borrow_mut();
    let n = if fr.columns().is_empty() {
        match &value {
            Value::Series(s) => s.len(),
            Value::List(_) | Value::Array(_) | Value::Tuple(_) => length(&value)?,
            _ => 0,
        }
    } else {
        fr.n_rows()
    };
    let mut data = to_column(&value, n)?;
    if let Value::Series(s) = &value {
        if s.is_geo() && fr.crs().is_none() {
            fr.set_crs(s.crs.clone());
        }
    }
    if data.dtype() == DType::Geometry && fr.crs().is_some() {
        if let Value::Series(s) = &value {
            if let (Some(from), Some(to)) = (s.crs.as_ref(), fr.crs()) {
                if from != to && fr.geometry_name() == Some(name.as_str()) {
                    // mirrors geopandas: assigning a GeoSeries with another CRS is an error
                    return Err(Exception::value_error(format!(
                        "CRS mismatch between CRS of the passed geometries ({}) and CRS of existing geometry column ({})",
                        from.as_str(),
                        to.as_str()
                    )));
                }
            }
        }
    }
    if data.len() != n {
        data = ColumnData::repeat(&Scalar::Null, n);
    }
    fr.set_column(&name, data).map_err(frame_err)?;
    if name == "geometry" && !fr.is_geo() {
        fr.set_geometry("geometry").map_err(frame_err)?;
    }
    Ok(())
}

pub fn del_item(f: &FrameRef, key: &Value) -> PyResult<()> {
    let name = key.expect_str("column key")?;
    let mut fr = f.borrow_mut();
    *fr = fr.drop_columns(&[name.as_str()]).map_err(frame_err)?;
    Ok(())
}

fn row_positions(key: &Value, len: usize) -> PyResult<Vec<usize>> {
    if let Some(mask) = mask_of(key, len)? {
        return Ok((0..len).filter(|&i| mask[i]).collect());
    }
    match key {
        Value::Slice(lo, hi, step) => slice_indices(*lo, *hi, *step, len),
        Value::List(_) | Value::Array(_) | Value::Range(..) => iterate(key)?
            .iter()
            .map(|k| norm_index(k.expect_int("row label")?, len).map_err(|_| Exception::key_error(repr(k))))
            .collect(),
        Value::Series(s) => s
            .values()
            .iter()
            .map(|k| norm_index(k.expect_int("row label")?, len).map_err(|_| Exception::key_error(repr(k))))
            .collect(),
        k => Ok(vec![norm_index(k.expect_int("row label")?, len).map_err(|_| Exception::key_error(repr(k)))?]),
    }
}

fn is_single_row(key: &Value) -> bool {
    matches!(key, Value::Int(_) | Value::Bool(_))
}

/// `df.loc[...]` and `df.iloc[...]`; rows are positional in both.
pub fn loc_get(f: &FrameRef, key: &Value, positional: bool) -> PyResult<Value> {
    let fr = f.borrow();
    let (rows, cols) = match key {
        Value::Tuple(t) if t.len() == 2 => (&t[0], Some(&t[1])),
        k => (k, None),
    };
    let idx = row_positions(rows, fr.n_rows())?;
    let single = is_single_row(rows);
    let Some(cols) = cols else {
        return Ok(if single { row_value(&fr, idx[0]) } else { Value::frame(fr.take(&idx)) });
    };
    let names: Vec<String> = match cols {
        Value::Slice(None, None, None) => fr.column_names().iter().map(|s| s.to_string()).collect(),
        Value::Int(j) if positional => {
            let j = norm_index(*j, fr.columns().len())?;
            vec![fr.columns()[j].name.clone()]
        }
        Value::Str(s) => vec![s.to_string()],
        other => names_of(other)?,
    };
    let single_col = matches!(cols, Value::Str(_) | Value::Int(_));
    let sub = fr.take(&idx);
    if single_col {
        let s = column_series(&sub, &names[0])?;
        return Ok(if single { s.get(0) } else { Value::series(s) });
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let sel = sub.select(&refs).map_err(frame_err)?;
    Ok(if single { row_value(&sel, 0) } else { Value::frame(sel) })
}

pub fn loc_set(f: &FrameRef, key: &Value, value: Value) -> PyResult<()> {
    let (rows, col) = match key {
        Value::Tuple(t) if t.len() == 2 => (t[0].clone(), t[1].expect_str("column")?),
        _ => return Err(Exception::new("NotImplementedError", "row assignment through .loc needs a column: df.loc[rows, 'col'] = value")),
    };
    let mut fr = f.borrow_mut();
    let n = fr.n_rows();
    let idx = row_positions(&rows, n)?;
    let mut current: Vec<Value> = match fr.column(&col) {
        Some(c) => c.data.iter().map(Value::from_scalar).collect(),
        None => vec![Value::None; n],
    };
    let incoming: Vec<Value> = match &value {
        Value::Series(s) if s.len() == n && idx.len() != n => idx.iter().map(|&i| s.get(i)).collect(),
        Value::Series(_) | Value::List(_) | Value::Array(_) => {
            let vals = iterate(&value)?;
            if vals.len() != idx.len() {
                return Err(Exception::value_error("Must have equal len keys and value when setting with an iterable"));
            }
            vals
        }
        scalar => vec![scalar.clone(); idx.len()],
    };
    for (i, v) in idx.into_iter().zip(incoming) {
        current[i] = v;
    }
    fr.set_column(&col, column_from_values(&current)?).map_err(frame_err)
}

// ---- row objects ----

pub fn row_get(columns: &[String], values: &[Value], key: &Value) -> PyResult<Value> {
    match key {
        Value::Str(s) => columns
            .iter()
            .position(|c| c == &**s)
            .map(|i| values[i].clone())
            .ok_or_else(|| Exception::key_error(quote(s))),
        Value::Int(i) => Ok(values[norm_index(*i, values.len())?].clone()),
        other => Err(Exception::key_error(repr(other))),
    }
}

pub fn row_attr(columns: &[String], values: &[Value], name: &str) -> Option<Value> {
    match name {
        "index" => Some(Value::list(columns.iter().map(Value::str).collect())),
        "values" => Some(Value::list(values.to_vec())),
        _ => columns.iter().position(|c| c == name).map(|i| values[i].clone()),
    }
}

pub fn row_method(columns: &[String], values: &[Value], name: &str, a: Args) -> PyResult<Value> {
    match name {
        "get" => {
            let key = a.require(0, "key", "get")?;
            Ok(row_get(columns, values, &key).unwrap_or_else(|_| a.pos.get(1).cloned().unwrap_or(Value::None)))
        }
        "to_dict" => Ok(Value::dict(columns.iter().map(Value::str).zip(values.iter().cloned()).collect())),
        "keys" => Ok(Value::list(columns.iter().map(Value::str).collect())),
        "items" => Ok(Value::list(
            columns
                .iter()
                .zip(values)
                .map(|(c, v)| Value::tuple(vec![Value::str(c), v.clone()]))
                .collect(),
        )),
        "tolist" => Ok(Value::list(values.to_vec())),
        _ => Err(Exception::attribute_error("Series", name)),
    }
}

// ---- groupby ----

/// Row positions per group key, with keys sorted.
pub fn groups(f: &Frame, by: &str) -> PyResult<Vec<(Scalar, Vec<usize>)>> {
    let col = f.column(by).ok_or_else(|| Exception::key_error(quote(by)))?;
    let mut out: Vec<(Scalar, Vec<usize>)> = Vec::new();
    for (i, k) in col.data.iter().enumerate() {
        if k.is_null() {
            continue;
        }
        match out.iter_mut().find(|(g, _)| scalar_eq(g, &k)) {
            Some(g) => g.1.push(i),
            None => out.push((k, vec![i])),
        }
    }
    out.sort_by(|a, b| scalar_cmp(&a.0, &b.0));
    Ok(out)
}

pub fn groupby_items(frame: &FrameRef, by: &str) -> PyResult<Vec<Value>> {
    let f = frame.borrow();
    Ok(groups(&f, by)?
        .into_iter()
        .map(|(k, idx)| Value::tuple(vec![Value::from_scalar(k), Value::frame(f.take(&idx))]))
        .collect())
}

fn aggregate(interp: &mut Interp, s: &Series, how: &str) -> PyResult<Value> {
    match how {
        "size" => Ok(Value::Int(s.len() as i64)),
        "first" => Ok(s.values().into_iter().find(|v| !v.is_none()).unwrap_or(Value::None)),
        "last" => Ok(s.values().into_iter().rev().find(|v| !v.is_none()).unwrap_or(Value::None)),
        "list" => Ok(Value::list(s.values())),
        _ => series::method(interp, &Rc::new(s.clone()), how, Args::default()),
    }
}

pub const GROUPBY_METHODS: &[&str] = &[
    "size", "count", "sum", "mean", "median", "min", "max", "first", "last", "nunique", "agg", "aggregate",
    "get_group", "std",
];

pub fn groupby_method(
    interp: &mut Interp,
    frame: &FrameRef,
    by: &str,
    column: Option<&str>,
    name: &str,
    a: Args,
) -> PyResult<Value> {
    let f = frame.borrow().clone();
    let groups = groups(&f, by)?;
    let keys: Vec<Scalar> = groups.iter().map(|(k, _)| k.clone()).collect();
    if name == "get_group" {
        let key = a.require(0, "name", name)?.to_scalar()?;
        let idx = groups
            .iter()
            .find(|(k, _)| scalar_eq(k, &key))
            .map(|(_, i)| i.clone())
            .ok_or_else(|| Exception::key_error(key.to_string()))?;
        return Ok(Value::frame(f.take(&idx)));
    }
    let how = match name {
        "agg" | "aggregate" => match a.require(0, "func", name)? {
            Value::Str(s) => s.to_string(),
            Value::Builtin(b) => b.name.to_string(),
            other => {
                return Err(Exception::type_error(format!(
                    "agg expects a function name, got {}",
                    other.type_name()
                )))
            }
        },
        n => n.to_string(),
    };
    if how == "size" {
        let values: Vec<Value> = groups.iter().map(|(_, i)| Value::Int(i.len() as i64)).collect();
        return named_series(None, keys, &values);
    }
    let targets: Vec<String> = match column {
        Some(c) => vec![c.to_string()],
        None => f
            .columns()
            .iter()
            .filter(|c| c.name != by && c.dtype() != DType::Geometry)
            .filter(|c| c.dtype().is_numeric() || matches!(how.as_str(), "count" | "first" | "last" | "nunique"))
            .map(|c| c.name.clone())
            .collect(),
    };
    let mut columns = vec![(by.to_string(), ColumnData::from_scalars(&keys))];
    for t in &targets {
        let s = column_series(&f, t)?;
        let mut out = Vec::with_capacity(groups.len());
        for (_, idx) in &groups {
            out.push(aggregate(interp, &s.take(idx), &how)?);
        }
        if column.is_some() {
            return named_series(Some(t), keys, &out);
        }
        columns.push((t.clone(), column_from_values(&out)?));
    }
    Ok(Value::frame(build_frame(columns, None, None)?))
}

// ---- methods ----

fn geo_frame(f: &Frame) -> PyResult<()> {
    if f.is_geo() {
        Ok(())
    } else {
        Err(frame_err(FrameError::NoGeometry))
    }
}

fn sort_rows(f: &Frame, by: &[String], ascending: &[bool]) -> PyResult<Vec<usize>> {
    let cols = by
        .iter()
        .map(|b| f.column(b).ok_or_else(|| Exception::key_error(quote(b))))
        .collect::<PyResult<Vec<_>>>()?;
    let mut idx: Vec<usize> = (0..f.n_rows()).collect();
    idx.sort_by(|&x, &y| {
        for (k, c) in cols.iter().enumerate() {
            let (a, b) = (c.data.get(x), c.data.get(y));
            let asc = ascending.get(k).copied().unwrap_or(true);
            let ord = match (a.is_null(), b.is_null()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                _ if asc => scalar_cmp(&a, &b),
                _ => scalar_cmp(&b, &a),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
    Ok(idx)
}

fn reduce_columns(interp: &mut Interp, f: &Frame, how: &str) -> PyResult<Value> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for c in f.columns() {
        let wanted = match how {
            "count" | "nunique" => c.dtype() != DType::Geometry,
            _ => c.dtype().is_numeric(),
        };
        if !wanted {
            continue;
        }
        labels.push(Scalar::Str(c.name.clone()));
        let s = Rc::new(Series::new(Some(c.name.clone()), c.data.clone()));
        values.push(series::method(interp, &s, how, Args::default())?);
    }
    named_series(None, labels, &values)
}

pub fn method(interp: &mut Interp, f: &FrameRef, name: &str, a: Args) -> PyResult<Value> {
    let snapshot = f.borrow().clone();
    let fr = &snapshot;
    let n = fr.n_rows();
    Ok(match name {
        "head" => Value::frame(fr.head(usize_arg(&a, 0, "n", 5)?)),
        "tail" => {
            let k = usize_arg(&a, 0, "n", 5)?.min(n);
            Value::frame(fr.take(&(n - k..n).collect::<Vec<_>>()))
        }
        "copy" | "reset_index" | "to_wkt" => {
            if name == "reset_index" && !bool_kw(&a, "drop", false)? {
                let mut out = Frame::new();
                out.push_column(Column::new("index", ColumnData::Int((0..n as i64).map(Some).collect())))
                    .map_err(frame_err)?;
                for c in fr.columns() {
                    out.push_column(c.clone()).map_err(frame_err)?;
                }
                if let Some(g) = fr.geometry_name() {
                    out.set_geometry(g).map_err(frame_err)?;
                    out.set_crs(fr.crs().cloned());
                }
                Value::frame(out)
            } else {
                Value::frame(fr.clone())
            }
        }
        "info" => {
            let mut text = format!("<class '{}'>\nRangeIndex: {n} entries\n", Value::Frame(f.clone()).kind());
            for c in fr.columns() {
                text.push_str(&format!("{}  {} non-null  {}\n", c.name, n - c.data.null_count(), c.dtype().name()));
            }
            interp.stdout.push_str(&text);
            Value::None
        }
        "to_crs" | "set_crs" => {
            geo_frame(fr)?;
            let target = geom::crs_arg(&a)?.ok_or_else(|| Exception::value_error("Must pass either crs or epsg."))?;
            let out = if name == "to_crs" {
                if fr.crs().is_none() {
                    return Err(Exception::value_error(
                        "Cannot transform naive geometries.  Please set a crs on the object first.",
                    ));
                }
                fr.to_crs(&target).map_err(frame_err)?
            } else {
                if let Some(cur) = fr.crs() {
                    if cur != &target && !bool_kw(&a, "allow_override", false)? {
                        return Err(Exception::value_error(format!(
                            "The GeoDataFrame already has a CRS which is not equal to the passed CRS ({}). Specify 'allow_override=True' to allow replacing the existing CRS without doing any transformation.",
                            cur.as_str()
                        )));
                    }
                }
                let mut out = fr.clone();
                out.set_crs(Some(target));
                out
            };
            if bool_kw(&a, "inplace", false)? {
                *f.borrow_mut() = out;
                Value::None
            } else {
                Value::frame(out)
            }
        }
        "set_geometry" => {
            let col = a.require(0, "col", name)?;
            let mut out = fr.clone();
            match col {
                Value::Str(c) => out.set_geometry(&c).map_err(frame_err)?,
                other => {
                    let data = to_column(&other, n)?;
                    out.set_column("geometry", data).map_err(frame_err)?;
                    out.set_geometry("geometry").map_err(frame_err)?;
                    if let Value::Series(s) = &other {
                        if out.crs().is_none() {
                            out.set_crs(s.crs.clone());
                        }
                    }
                }
            }
            if let Some(c) = geom::crs_arg(&Args { pos: vec![], kw: a.kw.clone() })? {
                out.set_crs(Some(c));
            }
            Value::frame(out)
        }
        "to_file" => {
            let path = a.require(0, "filename", name)?.expect_str("filename")?;
            to_file(interp, fr, &path, a.kw("driver"))?;
            Value::None
        }
        "to_csv" => {
            let text = to_csv(fr, bool_kw(&a, "index", true)?);
            match a.get(0, "path_or_buf") {
                Some(p) => {
                    let path = p.expect_str("path")?;
                    interp.write_file(&path, text.as_bytes())?;
                    Value::None
                }
                None => Value::str(text),
            }
        }
        "to_json" => {
            let text = if fr.is_geo() {
                fr.to_geojson_string()
            } else {
                let records = records(fr)?;
                serde_json::to_string(&geom::value_to_json(&records)?).unwrap_or_default()
            };
            match a.get(0, "path_or_buf") {
                Some(p) => {
                    let path = p.expect_str("path")?;
                    interp.write_file(&path, text.as_bytes())?;
                    Value::None
                }
                None => Value::str(text),
            }
        }
        "to_dict" => {
            let orient = a.get(0, "orient").map(|v| v.expect_str("orient")).transpose()?.unwrap_or_else(|| "dict".into());
            match orient.as_str() {
                "records" => records(fr)?,
                "list" => Value::dict(
                    fr.columns()
                        .iter()
                        .map(|c| (Value::str(&c.name), Value::list(c.data.iter().map(Value::from_scalar).collect())))
                        .collect(),
                ),
                _ => Value::dict(
                    fr.columns()
                        .iter()
                        .map(|c| {
                            let inner = c
                                .data
                                .iter()
                                .enumerate()
                                .map(|(i, v)| (Value::Int(i as i64), Value::from_scalar(v)))
                                .collect();
                            (Value::str(&c.name), Value::dict(inner))
                        })
                        .collect(),
                ),
            }
        }
        "drop" => {
            let axis_cols = matches!(a.kw("axis"), Some(Value::Int(1)) | Some(Value::Str(_)));
            if let Some(cols) = a.kw("columns").or_else(|| if axis_cols { a.get(0, "labels") } else { None }) {
                let names = names_of(&cols)?;
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                let out = fr.drop_columns(&refs).map_err(frame_err)?;
                return inplace(f, &a, out);
            }
            let labels = a.kw("index").or_else(|| a.get(0, "labels")).ok_or_else(|| Exception::type_error("drop() needs labels, index or columns"))?;
            let rows = row_positions(&labels, n)?;
            let keep: Vec<usize> = (0..n).filter(|i| !rows.contains(i)).collect();
            return inplace(f, &a, fr.take(&keep));
        }
        "rename" => {
            let mapping = a.kw("columns").or_else(|| a.get(0, "mapper")).unwrap_or(Value::dict(vec![]));
            let Value::Dict(d) = mapping else {
                return Err(Exception::type_error("rename(columns=...) expects a dict"));
            };
            let pairs = d
                .borrow()
                .entries
                .iter()
                .map(|(k, v)| Ok((k.expect_str("column")?, v.expect_str("column")?)))
                .collect::<PyResult<Vec<_>>>()?;
            return inplace(f, &a, fr.rename(&pairs));
        }
        "dropna" => {
            let subset = a.kw("subset").map(|s| names_of(&s)).transpose()?;
            let cols: Vec<&Column> = fr
                .columns()
                .iter()
                .filter(|c| subset.as_ref().map_or(true, |s| s.contains(&c.name)))
                .collect();
            let keep: Vec<bool> = (0..n)
                .map(|i| cols.iter().all(|c| !matches!(c.data.get(i), Scalar::Null)))
                .collect();
            return inplace(f, &a, fr.filter(&keep));
        }
        "fillna" => {
            let fill = a.require(0, "value", name)?;
            let mut out = fr.clone();
            for c in fr.columns() {
                let value = match &fill {
                    Value::Dict(d) => match d.borrow().get_str(&c.name) {
                        Some(v) => v,
                        None => continue,
                    },
                    v => v.clone(),
                };
                if c.data.null_count() == 0 {
                    continue;
                }
                let vals: Vec<Value> = c
                    .data
                    .iter()
                    .map(|s| if s.is_null() { value.clone() } else { Value::from_scalar(s) })
                    .collect();
                if let Ok(data) = column_from_values(&vals) {
                    out.set_column(&c.name, data).map_err(frame_err)?;
                }
            }
            return inplace(f, &a, out);
        }
        "sort_values" => {
            let by = names_of(&a.require(0, "by", name)?)?;
            let ascending = match a.get(1, "ascending") {
                Some(Value::List(l)) => l.borrow().iter().map(Value::truthy).collect::<PyResult<Vec<_>>>()?,
                Some(v) => vec![v.truthy()?; by.len()],
                None => vec![true; by.len()],
            };
            let idx = sort_rows(fr, &by, &ascending)?;
            return inplace(f, &a, fr.take(&idx));
        }
        "nlargest" | "nsmallest" => {
            let k = usize_arg(&a, 0, "n", 5)?;
            let by = names_of(&a.require(1, "columns", name)?)?;
            let idx = sort_rows(fr, &by, &vec![name == "nsmallest"; by.len()])?;
            Value::frame(fr.take(&idx[..k.min(idx.len())]))
        }
        "groupby" => {
            let by = a.require(0, "by", name)?;
            let by = match by {
                Value::Str(s) => s.to_string(),
                Value::List(l) if l.borrow().len() == 1 => l.borrow()[0].expect_str("by")?,
                _ => return Err(Exception::new("NotImplementedError", "groupby supports a single column")),
            };
            if fr.column(&by).is_none() {
                return Err(Exception::key_error(quote(&by)));
            }
            Value::object(Object::GroupBy {
                frame: f.clone(),
                by,
                column: None,
            })
        }
        "merge" => merge(fr, &a)?,
        "apply" => {
            let func = a.require(0, "func", name)?;
            let axis = a.kw("axis").map(|v| match v {
                Value::Str(s) if &*s == "columns" => 1,
                v => v.as_int().unwrap_or(0),
            });
            if axis != Some(1) {
                let mut labels = Vec::new();
                let mut values = Vec::new();
                for c in fr.columns() {
                    labels.push(Scalar::Str(c.name.clone()));
                    values.push(interp.call(&func, Args::new(vec![Value::series(column_series(fr, &c.name)?)]))?);
                }
                return named_series(None, labels, &values);
            }
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                out.push(interp.call(&func, Args::new(vec![row_value(fr, i)]))?);
            }
            Value::series(Series::new(None, column_from_values(&out)?))
        }
        "iterrows" => Value::list((0..n).map(|i| Value::tuple(vec![Value::Int(i as i64), row_value(fr, i)])).collect()),
        "itertuples" => {
            let mut cols: Vec<String> = vec!["Index".into()];
            cols.extend(fr.column_names().iter().map(|s| s.to_string()));
            let cols = Rc::new(cols);
            Value::list(
                (0..n)
                    .map(|i| {
                        let mut values = vec![Value::Int(i as i64)];
                        values.extend(fr.row(i).into_iter().map(Value::from_scalar));
                        Value::object(Object::Row { columns: cols.clone(), values })
                    })
                    .collect(),
            )
        }
        "items" => Value::list(
            fr.columns()
                .iter()
                .map(|c| Ok(Value::tuple(vec![Value::str(&c.name), Value::series(column_series(fr, &c.name)?)])))
                .collect::<PyResult<_>>()?,
        ),
        "assign" => {
            let out = Rc::new(RefCell::new(fr.clone()));
            for (k, v) in &a.kw {
                let value = match v {
                    Value::Function(_) | Value::Builtin(_) => interp.call(v, Args::new(vec![Value::Frame(out.clone())]))?,
                    other => other.clone(),
                };
                set_item(&out, &Value::str(k), value)?;
            }
            let result = out.borrow().clone();
            Value::frame(result)
        }
        "insert" => {
            let pos = a.require(0, "loc", name)?.expect_int("loc")? as usize;
            let col = a.require(1, "column", name)?.expect_str("column")?;
            let data = to_column(&a.require(2, "value", name)?, n)?;
            let mut cols: Vec<Column> = fr.columns().to_vec();
            if cols.iter().any(|c| c.name == col) {
                return Err(Exception::value_error(format!("cannot insert {col}, already exists")));
            }
            cols.insert(pos.min(cols.len()), Column::new(col, data));
            let out = Frame::from_columns(cols, fr.geometry_name(), fr.crs().cloned()).map_err(frame_err)?;
            *f.borrow_mut() = out;
            Value::None
        }
        "set_index" => {
            return Err(Exception::new(
                "NotImplementedError",
                "set_index is not supported; rows are addressed by position",
            ))
        }
        "query" => return Err(Exception::new("NotImplementedError", "query strings are not supported; use boolean masks")),
        "get" => {
            let key = a.require(0, "key", name)?;
            match get_item(f, &key) {
                Ok(v) => v,
                Err(_) => a.get(1, "default").unwrap_or(Value::None),
            }
        }
        "drop_duplicates" => {
            let subset = a.kw("subset").or_else(|| a.get(0, "subset")).map(|s| names_of(&s)).transpose()?;
            let cols: Vec<&Column> = fr
                .columns()
                .iter()
                .filter(|c| subset.as_ref().map_or(true, |s| s.contains(&c.name)))
                .collect();
            let mut seen: Vec<Vec<Scalar>> = Vec::new();
            let mut keep = Vec::with_capacity(n);
            for i in 0..n {
                let key: Vec<Scalar> = cols.iter().map(|c| c.data.get(i)).collect();
                let dup = seen.iter().any(|s| s.iter().zip(&key).all(|(x, y)| scalar_eq(x, y)));
                keep.push(!dup);
                if !dup {
                    seen.push(key);
                }
            }
            return inplace(f, &a, fr.filter(&keep));
        }
        "astype" => {
            let Value::Dict(d) = a.require(0, "dtype", name)? else {
                return Err(Exception::new("NotImplementedError", "astype on a frame expects a {column: type} dict"));
            };
            let mut out = fr.clone();
            for (k, t) in d.borrow().entries.iter() {
                let col = k.expect_str("column")?;
                let s = Rc::new(column_series(fr, &col)?);
                if let Value::Series(conv) = series::method(interp, &s, "astype", Args::new(vec![t.clone()]))? {
                    out.set_column(&col, conv.data.clone()).map_err(frame_err)?;
                }
            }
            Value::frame(out)
        }
        "isna" | "notna" => {
            let want_null = name == "isna";
            let cols = fr
                .columns()
                .iter()
                .map(|c| (c.name.clone(), ColumnData::Bool(c.data.iter().map(|s| Some(s.is_null() == want_null)).collect())))
                .collect();
            Value::frame(build_frame(cols, None, None)?)
        }
        "describe" => {
            let mut cols = vec![(
                "statistic".to_string(),
                ColumnData::Str(["count", "mean", "std", "min", "max"].iter().map(|s| Some(s.to_string())).collect()),
            )];
            for c in fr.columns().iter().filter(|c| c.dtype().is_numeric()) {
                let v = c.data.numeric_values().unwrap_or_default();
                let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
                let std = series::variance(&v, 1).map_or(f64::NAN, f64::sqrt);
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                cols.push((c.name.clone(), ColumnData::Float(vec![Some(v.len() as f64), Some(mean), Some(std), Some(min), Some(max)])));
            }
            Value::frame(build_frame(cols, None, None)?)
        }
        "nunique" | "count" | "sum" | "mean" | "min" | "max" => reduce_columns(interp, fr, name)?,
        "explore" => {
            geo_frame(fr)?;
            crate::libs::folium::explore(interp, fr, a)?
        }
        "plot" => crate::libs::plot::plot_frame(interp, fr, a)?,
        "dissolve" => dissolve(fr, a.get(0, "by"))?,
        "sjoin" => {
            let right = a.require(0, "df", name)?;
            sjoin(fr, &right, &a)?
        }
        "union_all" => {
            geo_frame(fr)?;
            Value::geometry(geometry::union_all(fr.geometries().map_err(frame_err)?.iter().flatten()))
        }
        "intersects" | "within" | "contains" | "touches" | "disjoint" | "distance" | "buffer" | "simplify" => {
            geo_frame(fr)?;
            let s = Rc::new(geometry_series(fr)?);
            geom::series_method(interp, &s, name, a)?
        }
        _ => return Err(Exception::attribute_error(&Value::Frame(f.clone()).type_name(), name)),
    })
}

fn inplace(f: &FrameRef, a: &Args, out: Frame) -> PyResult<Value> {
    if bool_kw(a, "inplace", false)? {
        *f.borrow_mut() = out;
        Ok(Value::None)
    } else {
        Ok(Value::frame(out))
    }
}

fn records(f: &Frame) -> PyResult<Value> {
    let names: Vec<Value> = f.column_names().into_iter().map(Value::str).collect();
    Ok(Value::list(
        (0..f.n_rows())
            .map(|i| Value::dict(names.iter().cloned().zip(f.row(i).into_iter().map(Value::from_scalar)).collect()))
            .collect(),
    ))
}

fn csv_field(s: &Scalar) -> String {
    let text = match s {
        Scalar::Null => String::new(),
        other => other.to_string(),
    };
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text
    }
}

pub fn to_csv(f: &Frame, index: bool) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    if index {
        header.push(String::new());
    }
    header.extend(f.column_names().iter().map(|n| csv_field(&Scalar::Str(n.to_string()))));
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..f.n_rows() {
        let mut line: Vec<String> = Vec::new();
        if index {
            line.push(i.to_string());
        }
        line.extend(f.row(i).iter().map(csv_field));
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn to_file(interp: &mut Interp, f: &Frame, path: &str, driver: Option<Value>) -> PyResult<()> {
    let driver = match driver {
        Some(d) => d.expect_str("driver")?,
        None => {
            let ext = path.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase()).unwrap_or_default();
            match ext.as_str() {
                "geojson" | "json" => "GeoJSON".into(),
                "gpkg" => "GPKG".into(),
                "shp" => "ESRI Shapefile".into(),
                "csv" => "CSV".into(),
                other => {
                    return Err(Exception::value_error(format!(
                        "Cannot infer a driver for extension '.{other}'; pass driver='GeoJSON'"
                    )))
                }
            }
        }
    };
    let bytes = match driver.as_str() {
        "GeoJSON" => {
            geo_frame(f)?;
            f.to_geojson_string().into_bytes()
        }
        "CSV" => to_csv(f, false).into_bytes(),
        other => {
            return Err(Exception::value_error(format!(
                "The '{other}' driver is not available in this runtime; supported drivers: GeoJSON, CSV"
            )))
        }
    };
    interp.write_file(path, &bytes)
}

fn merge(left: &Frame, a: &Args) -> PyResult<Value> {
    let right = match a.require(0, "right", "merge")? {
        Value::Frame(r) => r.borrow().clone(),
        other => return Err(Exception::type_error(format!("Can only merge DataFrame objects, not {}", other.type_name()))),
    };
    let how = a.kw("how").map(|v| v.expect_str("how")).transpose()?.unwrap_or_else(|| "inner".into());
    let on = a.kw("on").map(|v| v.expect_str("on")).transpose()?;
    let left_on = a.kw("left_on").map(|v| v.expect_str("left_on")).transpose()?.or(on.clone());
    let right_on = a.kw("right_on").map(|v| v.expect_str("right_on")).transpose()?.or(on.clone());
    let (Some(lk), Some(rk)) = (left_on, right_on) else {
        return Err(Exception::new("MergeError", "No common columns to perform merge on; pass on="));
    };
    let lcol = left.column(&lk).ok_or_else(|| Exception::key_error(quote(&lk)))?;
    let rcol = right.column(&rk).ok_or_else(|| Exception::key_error(quote(&rk)))?;
    let mut pairs: Vec<(usize, Option<usize>)> = Vec::new();
    for i in 0..left.n_rows() {
        let key = lcol.data.get(i);
        let matches: Vec<usize> = (0..right.n_rows())
            .filter(|&j| !key.is_null() && scalar_eq(&key, &rcol.data.get(j)))
            .collect();
        if matches.is_empty() {
            if how == "left" {
                pairs.push((i, None));
            }
        } else {
            pairs.extend(matches.into_iter().map(|j| (i, Some(j))));
        }
    }
    if how != "inner" && how != "left" {
        return Err(Exception::new("NotImplementedError", format!("merge how='{how}' is not supported")));
    }
    join_frames(left, &right, &pairs, Some(rk.as_str()).filter(|_| on.is_some()), None)
}

/// Builds the joined frame for row pairs. Colliding column names get
/// `_x`/`_y` (merge) or `_left`/`_right` (spatial join) suffixes.
fn join_frames(
    left: &Frame,
    right: &Frame,
    pairs: &[(usize, Option<usize>)],
    skip_right: Option<&str>,
    index_right: Option<&str>,
) -> PyResult<Value> {
    let spatial = index_right.is_some();
    let (ls, rs) = if spatial { ("_left", "_right") } else { ("_x", "_y") };
    let right_geom = right.geometry_name().map(str::to_string);
    let right_cols: Vec<&Column> = right
        .columns()
        .iter()
        .filter(|c| Some(c.name.as_str()) != skip_right)
        .filter(|c| !(spatial && Some(&c.name) == right_geom.as_ref()))
        .collect();
    let left_geom = left.geometry_name();
    let collides = |name: &str| left.column(name).is_some() && right_cols.iter().any(|c| c.name == name);
    let mut columns: Vec<(String, ColumnData)> = Vec::new();
    let left_idx: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    for c in left.columns() {
        let n = if collides(&c.name) && Some(c.name.as_str()) != left_geom {
            format!("{}{ls}", c.name)
        } else {
            c.name.clone()
        };
        columns.push((n, c.data.take(&left_idx)));
    }
    if let Some(ir) = index_right {
        let vals: Vec<Scalar> = pairs.iter().map(|p| p.1.map_or(Scalar::Null, |j| Scalar::Int(j as i64))).collect();
        columns.push((ir.to_string(), ColumnData::from_scalars(&vals)));
    }
    for c in right_cols.iter() {
        let n = if collides(&c.name) { format!("{}{rs}", c.name) } else { c.name.clone() };
        let vals: Vec<Scalar> = pairs.iter().map(|p| p.1.map_or(Scalar::Null, |j| c.data.get(j))).collect();
        let data = if vals.iter().all(Scalar::is_null) {
            ColumnData::repeat(&Scalar::Null, vals.len())
        } else if pairs.iter().all(|p| p.1.is_some()) {
            c.data.take(&pairs.iter().filter_map(|p| p.1).collect::<Vec<_>>())
        } else {
            ColumnData::from_scalars(&vals)
        };
        columns.push((n, data));
    }
    let crs = left.crs().cloned();
    Ok(Value::frame(build_frame(columns, left_geom, crs)?))
}

pub fn sjoin(left: &Frame, right: &Value, a: &Args) -> PyResult<Value> {
    let right = match right {
        Value::Frame(r) => r.borrow().clone(),
        other => return Err(Exception::type_error(format!("sjoin expects a GeoDataFrame, got {}", other.type_name()))),
    };
    geo_frame(left)?;
    geo_frame(&right)?;
    let how = a.kw("how").map(|v| v.expect_str("how")).transpose()?.unwrap_or_else(|| "inner".into());
    let predicate = a
        .kw("predicate")
        .or_else(|| a.kw("op"))
        .map(|v| v.expect_str("predicate"))
        .transpose()?
        .unwrap_or_else(|| "intersects".into());
    if left.crs() != right.crs() {
        return Err(Exception::value_error(format!(
            "CRS mismatch between left ({}) and right ({}) frames; reproject with to_crs first",
            left.crs().map_or("None", |c| c.as_str()),
            right.crs().map_or("None", |c| c.as_str())
        )));
    }
    let lg = left.geometries().map_err(frame_err)?;
    let rg = right.geometries().map_err(frame_err)?;
    let mut pairs = Vec::new();
    for (i, g) in lg.iter().enumerate() {
        let mut hit = false;
        if let Some(g) = g {
            for (j, h) in rg.iter().enumerate() {
                if let Some(h) = h {
                    if geom::predicate(&predicate, g, h)? {
                        pairs.push((i, Some(j)));
                        hit = true;
                    }
                }
            }
        }
        if !hit && how == "left" {
            pairs.push((i, None));
        }
    }
    if how != "inner" && how != "left" {
        return Err(Exception::new("NotImplementedError", format!("sjoin how='{how}' is not supported")));
    }
    join_frames(left, &right, &pairs, None, Some("index_right"))
}

fn dissolve(f: &Frame, by: Option<Value>) -> PyResult<Value> {
    geo_frame(f)?;
    let gname = f.geometry_name().unwrap_or("geometry").to_string();
    let geoms = f.geometries().map_err(frame_err)?;
    let groups: Vec<(Option<Scalar>, Vec<usize>)> = match &by {
        Some(b) => groups(f, &b.expect_str("by")?)?.into_iter().map(|(k, i)| (Some(k), i)).collect(),
        None => vec![(None, (0..f.n_rows()).collect())],
    };
    let union: Vec<Option<Geometry>> = groups
        .iter()
        .map(|(_, idx)| Some(geometry::union_all(idx.iter().filter_map(|&i| geoms[i].as_ref()))))
        .collect();
    let firsts: Vec<usize> = groups.iter().map(|(_, i)| i[0]).collect();
    let mut columns = Vec::new();
    columns.push((gname.clone(), ColumnData::Geometry(union)));
    for c in f.columns().iter().filter(|c| c.name != gname) {
        columns.push((c.name.clone(), c.data.take(&firsts)));
    }
    if let Some(b) = &by {
        let b = b.expect_str("by")?;
        let pos = columns.iter().position(|(n, _)| *n == b).unwrap_or(0);
        let col = columns.remove(pos);
        columns.insert(0, col);
    }
    Ok(Value::frame(build_frame(columns, Some(&gname), f.crs().cloned())?))
}

// ---- module functions ----

fn dict_columns(d: &Dict, n_hint: Option<usize>) -> PyResult<Vec<(String, ColumnData)>> {
    let len = n_hint.or_else(|| {
        d.entries.iter().find_map(|(_, v)| match v {
            Value::Series(s) => Some(s.len()),
            Value::List(_) | Value::Array(_) | Value::Tuple(_) => length(v).ok(),
            _ => None,
        })
    });
    d.entries
        .iter()
        .map(|(k, v)| Ok((k.expect_str("column name")?, to_column(v, len.unwrap_or(1))?)))
        .collect()
}

fn frame_from_data(data: Option<Value>, columns: Option<Value>) -> PyResult<Frame> {
    let cols: Vec<(String, ColumnData)> = match data {
        None => Vec::new(),
        Some(Value::Frame(f)) => {
            let f = f.borrow();
            f.columns().iter().map(|c| (c.name.clone(), c.data.clone())).collect()
        }
        Some(Value::Dict(d)) => dict_columns(&d.borrow(), None)?,
        Some(Value::Series(s)) => vec![(s.name.clone().unwrap_or_else(|| "0".into()), s.data.clone())],
        Some(other) => {
            let rows = iterate(&other)?;
            if rows.iter().all(|r| matches!(r, Value::Dict(_))) {
                let mut names: Vec<String> = Vec::new();
                for r in &rows {
                    if let Value::Dict(d) = r {
                        for (k, _) in d.borrow().entries.iter() {
                            let k = k.expect_str("column name")?;
                            if !names.contains(&k) {
                                names.push(k);
                            }
                        }
                    }
                }
                names
                    .iter()
                    .map(|n| {
                        let vals: Vec<Value> = rows
                            .iter()
                            .map(|r| match r {
                                Value::Dict(d) => d.borrow().get_str(n).unwrap_or(Value::None),
                                _ => Value::None,
                            })
                            .collect();
                        Ok((n.clone(), column_from_values(&vals)?))
                    })
                    .collect::<PyResult<_>>()?
            } else {
                let names = match &columns {
                    Some(c) => names_of(c)?,
                    None => {
                        let width = rows.first().map(|r| length(r)).transpose()?.unwrap_or(0);
                        (0..width).map(|i| i.to_string()).collect()
                    }
                };
                let table = rows.iter().map(iterate).collect::<PyResult<Vec<_>>>()?;
                names
                    .iter()
                    .enumerate()
                    .map(|(k, n)| {
                        let vals: Vec<Value> = table.iter().map(|r| r.get(k).cloned().unwrap_or(Value::None)).collect();
                        Ok((n.clone(), column_from_values(&vals)?))
                    })
                    .collect::<PyResult<_>>()?
            }
        }
    };
    let cols = match columns {
        Some(c) if !cols.is_empty() => {
            let wanted = names_of(&c)?;
            let mut out = Vec::new();
            for w in wanted {
                match cols.iter().find(|(n, _)| *n == w) {
                    Some(col) => out.push(col.clone()),
                    None => {
                        let n = cols.first().map_or(0, |c| c.1.len());
                        out.push((w, ColumnData::repeat(&Scalar::Null, n)));
                    }
                }
            }
            out
        }
        _ => cols,
    };
    build_frame(cols, None, None)
}

pub fn dataframe_ctor(a: &Args) -> PyResult<Value> {
    let mut f = frame_from_data(a.get(0, "data"), a.kw("columns"))?;
    f.clear_geometry();
    Ok(Value::frame(f))
}

pub fn geodataframe_ctor(a: &Args) -> PyResult<Value> {
    let data = a.get(0, "data");
    let source_crs = match &data {
        Some(Value::Frame(f)) => f.borrow().crs().cloned(),
        _ => None,
    };
    let source_geom = match &data {
        Some(Value::Frame(f)) => f.borrow().geometry_name().map(str::to_string),
        _ => None,
    };
    let mut f = frame_from_data(data, a.kw("columns"))?;
    let crs = geom::crs_arg(&Args { pos: vec![], kw: a.kw.iter().filter(|(k, _)| k == "crs").cloned().collect() })?;
    let mut geom_crs = None;
    match a.kw("geometry") {
        Some(Value::Str(name)) => f.set_geometry(&name).map_err(frame_err)?,
        Some(g) => {
            if let Value::Series(s) = &g {
                geom_crs = s.crs.clone();
            }
            let n = if f.columns().is_empty() { length(&g)? } else { f.n_rows() };
            let data = to_column(&g, n)?;
            if data.dtype() != DType::Geometry {
                return Err(Exception::type_error("Input geometry column must contain valid geometry objects."));
            }
            f.set_column("geometry", data).map_err(frame_err)?;
            f.set_geometry("geometry").map_err(frame_err)?;
        }
        None => {
            if let Some(g) = source_geom {
                f.set_geometry(&g).map_err(frame_err)?;
            } else if f.column("geometry").is_some_and(|c| c.dtype() == DType::Geometry) {
                f.set_geometry("geometry").map_err(frame_err)?;
            }
        }
    }
    f.set_crs(crs.or(geom_crs).or(source_crs));
    Ok(Value::frame(f))
}

pub fn read_file(interp: &mut Interp, a: &Args) -> PyResult<Value> {
    let path = a.require(0, "filename", "read_file")?.expect_str("filename")?;
    let bytes = interp.sink.read(&path).map_err(|e| Exception::new("DataSourceError", e))?;
    let text = String::from_utf8(bytes).map_err(|_| Exception::value_error("file is not UTF-8 text"))?;
    let f = Frame::from_geojson_str(&text).map_err(|e| Exception::new("DataSourceError", format!("{path}: {e}")))?;
    Ok(Value::frame(f))
}

pub fn concat(a: &Args) -> PyResult<Value> {
    let items = iterate(&a.require(0, "objs", "concat")?)?;
    if items.iter().all(|v| matches!(v, Value::Series(_))) {
        let mut data: Option<ColumnData> = None;
        let mut crs = None;
        for s in &items {
            let Value::Series(s) = s else { unreachable!() };
            crs = crs.or(s.crs.clone());
            data = Some(match data {
                None => s.data.clone(),
                Some(d) => d.concat(&s.data).ok_or_else(|| Exception::type_error("cannot concatenate series of different types"))?,
            });
        }
        let mut s = Series::new(None, data.unwrap_or(ColumnData::Float(vec![])));
        s.crs = crs;
        return Ok(Value::series(s));
    }
    let frames = items
        .iter()
        .map(|v| match v {
            Value::Frame(f) => Ok(f.borrow().clone()),
            other => Err(Exception::type_error(format!(
                "cannot concatenate object of type '{}'; only Series and DataFrame objs are valid",
                other.type_name()
            ))),
        })
        .collect::<PyResult<Vec<_>>>()?;
    let refs: Vec<&Frame> = frames.iter().collect();
    Ok(Value::frame(Frame::concat(&refs).map_err(frame_err)?))
}

pub fn points_from_xy(a: &Args) -> PyResult<Value> {
    let xs = iterate(&a.require(0, "x", "points_from_xy")?)?;
    let ys = iterate(&a.require(1, "y", "points_from_xy")?)?;
    if xs.len() != ys.len() {
        return Err(Exception::value_error("x and y arrays must be equal length"));
    }
    let geoms = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => Some(Geometry::Point(geoframe::geo::Point::new(x, y))),
            _ => None,
        })
        .collect();
    let crs = geom::crs_arg(&Args { pos: vec![], kw: a.kw.iter().filter(|(k, _)| k == "crs").cloned().collect() })?;
    Ok(Value::series(series::geo_series(None, geoms, crs)))
}

pub fn geoseries_ctor(a: &Args) -> PyResult<Value> {
    let data = a.get(0, "data").unwrap_or(Value::list(vec![]));
    let mut s = match &data {
        Value::Geometry(g) => series::geo_series(None, vec![Some((**g).clone())], None),
        other => series::from_value(other, None)?,
    };
    if !s.is_geo() && !s.is_empty() {
        return Err(Exception::type_error("Non geometry data passed to GeoSeries constructor"));
    }
    if s.is_empty() {
        s.data = ColumnData::Geometry(vec![]);
    }
    if let Some(n) = a.kw("name") {
        s.name = Some(n.expect_str("name")?);
    }
    let crs = geom::crs_arg(&Args { pos: vec![], kw: a.kw.iter().filter(|(k, _)| k == "crs").cloned().collect() })?;
    if crs.is_some() {
        s.crs = crs;
    }
    Ok(Value::series(s))
}

pub fn series_ctor(a: &Args) -> PyResult<Value> {
    let data = a.get(0, "data").unwrap_or(Value::list(vec![]));
    let name = a.kw("name").map(|n| n.expect_str("name")).transpose()?;
    let mut s = series::from_value(&data, name)?;
    if let Some(idx) = a.kw("index") {
        let labels = iterate(&idx)?.iter().map(Value::to_scalar).collect::<PyResult<Vec<_>>>()?;
        if labels.len() != s.len() {
            return Err(Exception::value_error("Length of values does not match length of index"));
        }
        s.index = Some(labels);
    }
    Ok(Value::series(s))
}

pub fn isna(a: &Args) -> PyResult<Value> {
    let v = a.pos.first().cloned().unwrap_or(Value::None);
    Ok(match v {
        Value::None => Value::Bool(true),
        Value::Float(f) => Value::Bool(f.is_nan()),
        Value::Series(s) => Value::series(s.with_data(ColumnData::Bool(s.data.iter().map(|x| Some(x.is_null())).collect()))),
        _ => Value::Bool(false),
    })
}
