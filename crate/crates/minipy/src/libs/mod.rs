//! Native modules and attribute/method/item dispatch for all value kinds.

pub mod dataframe;
pub mod folium;
pub mod geom;
pub mod plot;
pub mod series;
pub mod stdlib;

use std::rc::Rc;

use crate::builtins::{self, type_value};
use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::value::*;

pub const MODULES: &[&str] = &[
    "__future__",
    "json",
    "math",
    "typing",
    "warnings",
    "numpy",
    "pandas",
    "geopandas",
    "matplotlib",
    "matplotlib.pyplot",
    "matplotlib.cm",
    "matplotlib.patches",
    "matplotlib.lines",
    "folium",
    "folium.plugins",
    "contextily",
    "shapely",
    "shapely.geometry",
    "shapely.ops",
];

pub fn import(name: &str) -> Option<Value> {
    MODULES
        .iter()
        .find(|m| **m == name)
        .map(|m| Value::Module(Rc::new(Module::Native(m))))
}

const GEOPANDAS_FUNCTIONS: &[&str] = &["read_file", "sjoin", "points_from_xy"];
const PANDAS_FUNCTIONS: &[&str] = &["concat", "isna", "isnull", "notna", "notnull"];
const SHAPELY_FUNCTIONS: &[&str] = &["box", "shape", "mapping", "unary_union", "union_all"];

macro_rules! ty {
    ($name:expr, [$($inst:expr),*], $ctor:expr) => {
        type_value($name, &[$($inst),*], Some($ctor))
    };
}

fn shapely_type(name: &str) -> Option<Value> {
    Some(match name {
        "Point" => ty!("Point", ["shapely.Point"], |_, a| geom::shapely_ctor("Point", &a)),
        "LineString" => ty!("LineString", ["shapely.LineString"], |_, a| geom::shapely_ctor("LineString", &a)),
        "Polygon" => ty!("Polygon", ["shapely.Polygon"], |_, a| geom::shapely_ctor("Polygon", &a)),
        "MultiPoint" => ty!("MultiPoint", ["shapely.MultiPoint"], |_, a| geom::shapely_ctor("MultiPoint", &a)),
        "MultiPolygon" => ty!("MultiPolygon", ["shapely.MultiPolygon"], |_, a| geom::shapely_ctor("MultiPolygon", &a)),
        _ => return None,
    })
}

fn frame_type(name: &str) -> Option<Value> {
    Some(match name {
        "DataFrame" => ty!("DataFrame", ["pandas.DataFrame", "geopandas.GeoDataFrame"], |_, a| dataframe::dataframe_ctor(&a)),
        "GeoDataFrame" => ty!("GeoDataFrame", ["geopandas.GeoDataFrame"], |_, a| dataframe::geodataframe_ctor(&a)),
        "Series" => ty!("Series", ["pandas.Series", "geopandas.GeoSeries"], |_, a| dataframe::series_ctor(&a)),
        "GeoSeries" => ty!("GeoSeries", ["geopandas.GeoSeries"], |_, a| dataframe::geoseries_ctor(&a)),
        _ => return None,
    })
}

/// Type object for a value kind, used by `type()`.
pub fn type_for_kind(kind: &str) -> Option<Value> {
    match kind {
        "pandas.DataFrame" => frame_type("DataFrame"),
        "geopandas.GeoDataFrame" => frame_type("GeoDataFrame"),
        "pandas.Series" => frame_type("Series"),
        "geopandas.GeoSeries" => frame_type("GeoSeries"),
        "matplotlib.Figure" => Some(figure_type()),
        "numpy.ndarray" => Some(type_value("ndarray", &["numpy.ndarray"], None)),
        k if k.starts_with("folium.") => Some(map_type()),
        k => k.strip_prefix("shapely.").and_then(shapely_type),
    }
}

fn figure_type() -> Value {
    ty!("Figure", ["matplotlib.Figure"], |i, a| plot::pyplot_call(i, "figure", a))
}

fn map_type() -> Value {
    ty!("Map", ["folium.Map"], |i, a| folium::construct(i, "folium", "Map", a))
}

fn module_value(name: &'static str) -> Value {
    Value::Module(Rc::new(Module::Native(name)))
}

fn module_attr(m: &'static str, name: &str) -> Option<Value> {
    let full = format!("{m}.{name}");
    if let Some(sub) = MODULES.iter().find(|x| **x == full) {
        return Some(module_value(sub));
    }
    let func = || Some(Value::method(module_value(m), name));
    match m {
        "math" => stdlib::math_constant(name).or_else(|| stdlib::MATH_FUNCTIONS.contains(&name).then(func).flatten()),
        "json" => ["dumps", "loads", "dump", "load"].contains(&name).then(func).flatten(),
        "typing" => stdlib::TYPING_NAMES
            .contains(&name)
            .then(|| Value::object(Object::TypingAlias(name.to_string()))),
        "warnings" => ["warn", "filterwarnings", "simplefilter", "resetwarnings"].contains(&name).then(func).flatten(),
        "__future__" => (name == "annotations").then_some(Value::None),
        "numpy" => match name {
            "ndarray" => type_for_kind("numpy.ndarray"),
            _ => stdlib::numpy_constant(name).or_else(|| stdlib::NUMPY_FUNCTIONS.contains(&name).then(func).flatten()),
        },
        "pandas" => frame_type(name)
            .filter(|_| matches!(name, "DataFrame" | "Series"))
            .or_else(|| PANDAS_FUNCTIONS.contains(&name).then(func).flatten()),
        "geopandas" => frame_type(name)
            .filter(|_| matches!(name, "GeoDataFrame" | "GeoSeries"))
            .or_else(|| GEOPANDAS_FUNCTIONS.contains(&name).then(func).flatten()),
        "matplotlib" => (name == "use").then(func).flatten(),
        "matplotlib.pyplot" => match name {
            "Figure" => Some(figure_type()),
            "cm" => Some(module_value("matplotlib.cm")),
            _ => plot::PYPLOT_FUNCTIONS.contains(&name).then(func).flatten(),
        },
        "matplotlib.cm" => match name {
            "get_cmap" => func(),
            n if plot::COLORMAPS.contains(&n) => Some(Value::object(Object::Colormap(n.to_string()))),
            _ => None,
        },
        "matplotlib.patches" => ["Patch", "Rectangle", "Circle"].contains(&name).then(func).flatten(),
        "matplotlib.lines" => (name == "Line2D").then(func).flatten(),
        "folium" | "folium.plugins" => {
            if m == "folium" && name == "Map" {
                Some(map_type())
            } else {
                folium::has_constructor(m, name).then(func).flatten()
            }
        }
        "contextily" => match name {
            "providers" => Some(Value::object(Object::Provider(String::new()))),
            "add_basemap" => func(),
            _ => None,
        },
        "shapely" | "shapely.geometry" | "shapely.ops" => shapely_type(name)
            .filter(|_| m != "shapely.ops")
            .or_else(|| SHAPELY_FUNCTIONS.contains(&name).then(func).flatten()),
        _ => None,
    }
}

fn module_call(interp: &mut Interp, m: &str, name: &str, a: Args) -> PyResult<Value> {
    match m {
        "math" => stdlib::math_call(name, a),
        "json" => stdlib::json_call(name, a),
        "warnings" => stdlib::warnings_call(interp, name, a),
        "numpy" => stdlib::numpy_call(interp, name, a),
        "pandas" => match name {
            "concat" => dataframe::concat(&a),
            "isna" | "isnull" => dataframe::isna(&a),
            "notna" | "notnull" => {
                match dataframe::isna(&a)? {
                    Value::Bool(b) => Ok(Value::Bool(!b)),
                    v => series::unary(crate::ast::UnaryOp::Invert, &v),
                }
            }
            _ => Err(Exception::attribute_error("pandas", name)),
        },
        "geopandas" => match name {
            "read_file" => dataframe::read_file(interp, &a),
            "points_from_xy" => dataframe::points_from_xy(&a),
            "sjoin" => match a.require(0, "left_df", name)? {
                Value::Frame(left) => {
                    let right = a.require(1, "right_df", name)?;
                    let left = left.borrow().clone();
                    dataframe::sjoin(&left, &right, &a)
                }
                other => Err(Exception::type_error(format!("sjoin expects a GeoDataFrame, got {}", other.type_name()))),
            },
            _ => Err(Exception::attribute_error("geopandas", name)),
        },
        "matplotlib" => Ok(Value::None),
        "matplotlib.pyplot" => plot::pyplot_call(interp, name, a),
        "matplotlib.cm" => plot::pyplot_call(interp, "get_cmap", a),
        "matplotlib.patches" | "matplotlib.lines" => Ok(plot::artist(name, &a)),
        "folium" | "folium.plugins" => folium::construct(interp, m, name, a),
        "contextily" => plot::add_basemap(a),
        "shapely" | "shapely.geometry" | "shapely.ops" => geom::shapely_ctor(name, &a),
        _ => Err(Exception::attribute_error(m, name)),
    }
}

fn no_attr(v: &Value, name: &str) -> Exception {
    Exception::attribute_error(&v.type_name(), name)
}

fn method_if(v: &Value, name: &str, table: &[&str]) -> PyResult<Value> {
    if table.contains(&name) {
        Ok(Value::method(v.clone(), name))
    } else {
        Err(no_attr(v, name))
    }
}

const ARRAY_OWN_METHODS: &[&str] = &["flatten", "ravel", "tolist", "reshape", "astype", "copy"];
const TUPLE_METHODS: &[&str] = &["index", "count"];
const CRS_METHODS: &[&str] = &["to_epsg", "to_string", "to_authority", "equals"];
const ROW_METHODS: &[&str] = &["get", "to_dict", "keys", "items", "tolist"];

pub fn get_attr(interp: &mut Interp, v: &Value, name: &str) -> PyResult<Value> {
    match v {
        Value::Module(m) => match &**m {
            Module::Native(mn) => module_attr(mn, name).ok_or_else(|| {
                Exception::new("AttributeError", format!("module '{mn}' has no attribute '{name}'"))
            }),
            Module::User { name: mn, scope } => scope.vars.borrow().get(name).cloned().ok_or_else(|| {
                Exception::new("AttributeError", format!("module '{mn}' has no attribute '{name}'"))
            }),
        },
        Value::Frame(f) => {
            if let Some(a) = dataframe::attr(f, name)? {
                return Ok(a);
            }
            if dataframe::METHODS.contains(&name) {
                return Ok(Value::method(v.clone(), name));
            }
            let fr = f.borrow();
            if fr.column(name).is_some() {
                return Ok(Value::series(dataframe::column_series(&fr, name)?));
            }
            Err(no_attr(v, name))
        }
        Value::Series(s) => {
            if let Some(a) = series::attr(interp, s, name)? {
                return Ok(a);
            }
            method_if(v, name, series::METHODS)
        }
        Value::Geometry(g) => match geom::geometry_attr(g, name)? {
            Some(a) => Ok(a),
            None => method_if(v, name, geom::GEOMETRY_METHODS),
        },
        Value::Str(_) => method_if(v, name, builtins::STR_METHODS),
        Value::List(_) => method_if(v, name, builtins::LIST_METHODS),
        Value::Tuple(_) => method_if(v, name, TUPLE_METHODS),
        Value::Dict(_) => method_if(v, name, builtins::DICT_METHODS),
        Value::Set(_) => method_if(v, name, builtins::SET_METHODS),
        Value::Array(arr) => match name {
            "shape" => Ok(Value::tuple(vec![Value::Int(arr.len() as i64)])),
            "size" => Ok(Value::Int(arr.len() as i64)),
            "ndim" => Ok(Value::Int(1)),
            "dtype" => Ok(Value::str(series::from_value(v, None).map(|s| s.data.dtype().name()).unwrap_or("object"))),
            _ if ARRAY_OWN_METHODS.contains(&name) || series::METHODS.contains(&name) => Ok(Value::method(v.clone(), name)),
            _ => Err(no_attr(v, name)),
        },
        Value::Float(f) => match name {
            "is_integer" => Ok(Value::method(v.clone(), name)),
            "real" => Ok(Value::Float(*f)),
            _ => Err(no_attr(v, name)),
        },
        Value::Int(i) => match name {
            "real" | "numerator" => Ok(Value::Int(*i)),
            _ => Err(no_attr(v, name)),
        },
        Value::Figure(fig) => match plot::figure_attr(fig, name) {
            Some(a) => Ok(a),
            None => method_if(v, name, plot::FIGURE_METHODS),
        },
        Value::Axes(fig, i) => match plot::axes_attr(fig, *i, name) {
            Some(a) => Ok(a),
            None => method_if(v, name, plot::AXES_METHODS),
        },
        Value::Folium(el) => match folium::attr(el, name) {
            Some(a) => Ok(a),
            None => method_if(v, name, folium::METHODS),
        },
        Value::Object(o) => match &**o {
            Object::Provider(path) => match name {
                "name" | "url" => Ok(Value::str(path)),
                _ => plot::provider_attr(path, name),
            },
            Object::MapRoot(el) => match name {
                "html" | "header" | "script" => Ok(Value::object(Object::MapHtml(el.clone()))),
                _ => method_if(v, name, &["add_child", "render"]),
            },
            Object::MapHtml(_) => method_if(v, name, &["add_child"]),
            Object::StrAccessor(_) => method_if(v, name, series::STR_ACCESSOR_METHODS),
            Object::GroupBy { frame, by, .. } => {
                if dataframe::GROUPBY_METHODS.contains(&name) {
                    return Ok(Value::method(v.clone(), name));
                }
                if frame.borrow().column(name).is_some() {
                    return Ok(Value::object(Object::GroupBy {
                        frame: frame.clone(),
                        by: by.clone(),
                        column: Some(name.to_string()),
                    }));
                }
                Err(no_attr(v, name))
            }
            Object::Row { columns, values } => match dataframe::row_attr(columns, values, name) {
                Some(a) => Ok(a),
                None => method_if(v, name, ROW_METHODS),
            },
            Object::TypingAlias(_) => Ok(v.clone()),
            Object::Colormap(n) => match name {
                "name" => Ok(Value::str(n)),
                "N" => Ok(Value::Int(256)),
                _ => Err(no_attr(v, name)),
            },
            Object::Crs(c) => match name {
                "name" | "srs" => Ok(Value::str(c.as_str())),
                "is_geographic" => Ok(Value::Bool(c.is_geographic())),
                "is_projected" => Ok(Value::Bool(!c.is_geographic())),
                _ => method_if(v, name, CRS_METHODS),
            },
            Object::Loc(_) | Object::ILoc(_) | Object::Iterator(_) => Err(no_attr(v, name)),
        },
        Value::Exception(e) => match name {
            "args" => Ok(Value::tuple(vec![Value::str(&e.message)])),
            _ => Err(no_attr(v, name)),
        },
        Value::Type(t) => match name {
            "__name__" => Ok(Value::str(t.name)),
            _ => Err(no_attr(v, name)),
        },
        Value::Function(f) => match name {
            "__name__" => Ok(Value::str(&f.name)),
            "__doc__" => Ok(Value::None),
            _ => Err(no_attr(v, name)),
        },
        _ => Err(no_attr(v, name)),
    }
}

pub fn set_attr(interp: &mut Interp, v: &Value, name: &str, value: Value) -> PyResult<()> {
    let _ = interp;
    match v {
        Value::Frame(f) => dataframe::set_attr(f, name, value),
        Value::Module(m) => match &**m {
            Module::User { scope, .. } => {
                scope.vars.borrow_mut().insert(name.to_string(), value);
                Ok(())
            }
            Module::Native(mn) => Err(Exception::new(
                "AttributeError",
                format!("cannot set attributes on module '{mn}'"),
            )),
        },
        _ => Err(Exception::new(
            "AttributeError",
            format!("'{}' object attribute '{name}' is read-only", v.type_name()),
        )),
    }
}

fn seq_index<T: Clone>(items: &[T], key: &Value, wrap: impl Fn(Vec<T>) -> Value, single: impl Fn(T) -> Value, what: &str) -> PyResult<Value> {
    match key {
        Value::Slice(lo, hi, step) => {
            let idx = slice_indices(*lo, *hi, *step, items.len())?;
            Ok(wrap(idx.into_iter().map(|i| items[i].clone()).collect()))
        }
        k => {
            let i = k.as_int().ok_or_else(|| {
                Exception::type_error(format!("{what} indices must be integers or slices, not {}", k.type_name()))
            })?;
            let i = norm_index(i, items.len()).map_err(|_| Exception::index_error(format!("{what} index out of range")))?;
            Ok(single(items[i].clone()))
        }
    }
}

pub fn get_item(interp: &mut Interp, obj: &Value, key: &Value) -> PyResult<Value> {
    let _ = interp;
    match obj {
        Value::List(l) => seq_index(&l.borrow(), key, Value::list, |v| v, "list"),
        Value::Tuple(t) => seq_index(t, key, Value::tuple, |v| v, "tuple"),
        Value::Array(arr) => {
            if let Value::Tuple(parts) = key {
                let mut cur = obj.clone();
                for p in parts.iter() {
                    cur = get_item(interp, &cur, p)?;
                }
                return Ok(cur);
            }
            if matches!(key, Value::List(_) | Value::Array(_) | Value::Series(_)) {
                let keys = iterate(key)?;
                if keys.len() == arr.len() && keys.iter().all(|k| matches!(k, Value::Bool(_))) {
                    return Ok(Value::Array(Rc::new(
                        arr.iter().zip(&keys).filter(|(_, k)| matches!(k, Value::Bool(true))).map(|(v, _)| v.clone()).collect(),
                    )));
                }
            }
            seq_index(arr, key, |v| Value::Array(Rc::new(v)), |v| v, "array")
        }
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            seq_index(&chars, key, |c| Value::str(c.into_iter().collect::<String>()), |c| Value::str(c.to_string()), "string")
        }
        Value::Range(a, b, s) => {
            let items: Vec<i64> = (0..range_len(*a, *b, *s) as i64).map(|i| a + i * s).collect();
            seq_index(&items, key, |v| Value::list(v.into_iter().map(Value::Int).collect()), Value::Int, "range")
        }
        Value::Dict(d) => d.borrow().get(key).ok_or_else(|| Exception::key_error(repr(key))),
        Value::Frame(f) => dataframe::get_item(f, key),
        Value::Series(s) => series::get_item(s, key),
        Value::Object(o) => match &**o {
            Object::Loc(Value::Frame(f)) => dataframe::loc_get(f, key, false),
            Object::ILoc(Value::Frame(f)) => dataframe::loc_get(f, key, true),
            Object::Loc(Value::Series(s)) => series::get_item(s, key),
            Object::ILoc(Value::Series(s)) => series::iloc(s, key),
            Object::Row { columns, values } => dataframe::row_get(columns, values, key),
            Object::GroupBy { frame, by, .. } => match key {
                Value::Str(c) => {
                    if frame.borrow().column(c).is_none() {
                        return Err(Exception::key_error(format!("Column not found: {c}")));
                    }
                    Ok(Value::object(Object::GroupBy {
                        frame: frame.clone(),
                        by: by.clone(),
                        column: Some(c.to_string()),
                    }))
                }
                _ => Err(Exception::new("NotImplementedError", "select a single column from a groupby")),
            },
            Object::TypingAlias(_) => Ok(obj.clone()),
            _ => Err(not_subscriptable(obj)),
        },
        Value::Type(t) => Ok(Value::object(Object::TypingAlias(t.name.to_string()))),
        _ => Err(not_subscriptable(obj)),
    }
}

fn not_subscriptable(v: &Value) -> Exception {
    Exception::type_error(format!("'{}' object is not subscriptable", v.type_name()))
}

pub fn set_item(interp: &mut Interp, obj: &Value, key: &Value, value: Value) -> PyResult<()> {
    let _ = interp;
    match obj {
        Value::List(l) => {
            let mut l = l.borrow_mut();
            let i = key.expect_int("list index")?;
            let i = norm_index(i, l.len()).map_err(|_| Exception::index_error("list assignment index out of range"))?;
            l[i] = value;
            Ok(())
        }
        Value::Dict(d) => {
            d.borrow_mut().insert(key.clone(), value);
            Ok(())
        }
        Value::Frame(f) => dataframe::set_item(f, key, value),
        Value::Object(o) => match &**o {
            Object::Loc(Value::Frame(f)) | Object::ILoc(Value::Frame(f)) => dataframe::loc_set(f, key, value),
            _ => Err(no_item_assignment(obj)),
        },
        Value::Series(_) => Err(Exception::type_error(
            "Series values cannot be assigned in place; assign through the frame: df.loc[mask, 'col'] = value",
        )),
        _ => Err(no_item_assignment(obj)),
    }
}

fn no_item_assignment(v: &Value) -> Exception {
    Exception::type_error(format!("'{}' object does not support item assignment", v.type_name()))
}

pub fn del_item(interp: &mut Interp, obj: &Value, key: &Value) -> PyResult<()> {
    let _ = interp;
    match obj {
        Value::List(l) => {
            let mut l = l.borrow_mut();
            let i = norm_index(key.expect_int("list index")?, l.len())
                .map_err(|_| Exception::index_error("list assignment index out of range"))?;
            l.remove(i);
            Ok(())
        }
        Value::Dict(d) => d.borrow_mut().remove(key).map(|_| ()).ok_or_else(|| Exception::key_error(repr(key))),
        Value::Frame(f) => dataframe::del_item(f, key),
        _ => Err(Exception::type_error(format!(
            "'{}' object does not support item deletion",
            obj.type_name()
        ))),
    }
}

fn flatten(v: &Value, out: &mut Vec<Value>) {
    match v {
        Value::Array(items) => items.iter().for_each(|i| flatten(i, out)),
        other => out.push(other.clone()),
    }
}

fn array_method(interp: &mut Interp, recv: &Value, arr: &Rc<Vec<Value>>, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "flatten" | "ravel" => {
            let mut out = Vec::new();
            flatten(recv, &mut out);
            Ok(Value::Array(Rc::new(out)))
        }
        "tolist" => Ok(Value::list(arr.iter().map(|v| match v {
            Value::Array(inner) => Value::list((**inner).clone()),
            other => other.clone(),
        }).collect())),
        "copy" => Ok(Value::Array(Rc::new((**arr).clone()))),
        "reshape" => Err(Exception::new("NotImplementedError", "reshape is not supported")),
        _ => {
            let s = Rc::new(series::from_value(recv, None)?);
            match series::method(interp, &s, name, a)? {
                Value::Series(out) if out.index.is_none() => Ok(Value::Array(Rc::new(out.values()))),
                other => Ok(other),
            }
        }
    }
}

pub fn call_method(interp: &mut Interp, recv: &Value, name: &str, a: Args) -> PyResult<Value> {
    match recv {
        Value::Module(m) => match &**m {
            Module::Native(mn) => module_call(interp, mn, name, a),
            Module::User { .. } => {
                let f = get_attr(interp, recv, name)?;
                interp.call(&f, a)
            }
        },
        Value::Str(s) => builtins::str_method(interp, s, name, a),
        Value::List(l) => builtins::list_method(interp, l, name, a),
        Value::Tuple(t) => {
            let tmp = Rc::new(std::cell::RefCell::new((**t).clone()));
            builtins::list_method(interp, &tmp, name, a)
        }
        Value::Dict(d) => builtins::dict_method(d, name, a),
        Value::Set(s) => builtins::set_method(s, name, a),
        Value::Array(arr) => array_method(interp, recv, arr, name, a),
        Value::Float(f) if name == "is_integer" => Ok(Value::Bool(f.fract() == 0.0)),
        Value::Frame(f) => dataframe::method(interp, f, name, a),
        Value::Series(s) => series::method(interp, s, name, a),
        Value::Geometry(g) => geom::geometry_method(g, name, a),
        Value::Figure(fig) => plot::figure_method(interp, fig, name, a),
        Value::Axes(fig, i) => plot::axes_method(interp, fig, *i, name, a),
        Value::Folium(el) => folium::method(interp, el, name, a),
        Value::Object(o) => match &**o {
            Object::StrAccessor(s) => series::str_accessor(interp, s, name, a),
            Object::GroupBy { frame, by, column } => {
                dataframe::groupby_method(interp, frame, by, column.as_deref(), name, a)
            }
            Object::MapRoot(el) | Object::MapHtml(el) => match (name, a.pos.first()) {
                ("add_child", Some(Value::Folium(c))) if matches!(&**o, Object::MapRoot(_)) && c.borrow().kind != "Element" => {
                    el.borrow_mut().children.push(c.clone());
                    Ok(Value::None)
                }
                ("add_child", _) => folium::html_add_child(el, a),
                ("render", _) => Ok(Value::str(el.borrow().render_html())),
                _ => Err(no_attr(recv, name)),
            },
            Object::Row { columns, values } => dataframe::row_method(columns, values, name, a),
            Object::Crs(c) => match name {
                "to_epsg" => Ok(c.epsg().map_or(Value::None, |e| Value::Int(e as i64))),
                "to_string" => Ok(Value::str(c.as_str())),
                "to_authority" => Ok(match c.as_str().split_once(':') {
                    Some((auth, code)) => Value::tuple(vec![Value::str(auth), Value::str(code)]),
                    None => Value::None,
                }),
                "equals" => Ok(Value::Bool(py_eq(recv, &a.require(0, "other", name)?))),
                _ => Err(no_attr(recv, name)),
            },
            _ => Err(no_attr(recv, name)),
        },
        _ => Err(no_attr(recv, name)),
    }
}
