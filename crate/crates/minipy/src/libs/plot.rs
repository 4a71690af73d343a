//! Figures and axes (`matplotlib`) plus basemap tiles (`contextily`).
//!
//! Nothing is rasterized: a figure records its axes and the layers drawn on
//! them, and `savefig` writes that record as an SVG document.

use std::cell::RefCell;
use std::rc::Rc;

use geoframe::{DType, Frame};
use serde_json::{json, Map, Value as Json};

use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::geom::value_to_json;
use crate::libs::series::{self, Series};
use crate::value::*;

pub type FigureRef = Rc<RefCell<FigureState>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AxesState {
    pub props: Map<String, Json>,
    pub layers: Vec<Json>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureState {
    pub size: (f64, f64),
    pub axes: Vec<AxesState>,
    pub suptitle: Option<String>,
    pub saved: Vec<String>,
}

impl Default for FigureState {
    fn default() -> Self {
        FigureState {
            size: (6.4, 4.8),
            axes: Vec::new(),
            suptitle: None,
            saved: Vec::new(),
        }
    }
}

impl FigureState {
    pub fn to_json(&self) -> Json {
        json!({
            "size": [self.size.0, self.size.1],
            "suptitle": self.suptitle,
            "axes": self.axes.iter().map(|a| json!({"props": a.props, "layers": a.layers})).collect::<Vec<_>>(),
        })
    }

    fn to_svg(&self) -> String {
        let (w, h) = ((self.size.0 * 72.0).round(), (self.size.1 * 72.0).round());
        let spec = serde_json::to_string(&self.to_json()).unwrap_or_default();
        let spec = spec.replace('&', "&amp;").replace('<', "&lt;");
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}pt\" height=\"{h}pt\">\n<desc>{spec}</desc>\n</svg>\n"
        )
    }
}

#[derive(Default)]
pub struct PyplotState {
    pub current: Option<FigureRef>,
    pub figures: Vec<FigureRef>,
}

fn figsize(a: &Args) -> PyResult<Option<(f64, f64)>> {
    match a.kw("figsize") {
        None => Ok(None),
        Some(v) => {
            let items = iterate(&v)?;
            if items.len() != 2 {
                return Err(Exception::value_error("figsize must be a (width, height) pair"));
            }
            Ok(Some((items[0].expect_f64("width")?, items[1].expect_f64("height")?)))
        }
    }
}

fn new_figure(interp: &mut Interp, size: Option<(f64, f64)>, n_axes: usize) -> FigureRef {
    let mut fig = FigureState::default();
    if let Some(s) = size {
        fig.size = s;
    }
    fig.axes = vec![AxesState::default(); n_axes];
    let fig = Rc::new(RefCell::new(fig));
    interp.pyplot.current = Some(fig.clone());
    interp.pyplot.figures.push(fig.clone());
    fig
}

fn current_axes(interp: &mut Interp) -> Value {
    let fig = match interp.pyplot.current.clone() {
        Some(f) => f,
        None => new_figure(interp, None, 0),
    };
    if fig.borrow().axes.is_empty() {
        fig.borrow_mut().axes.push(AxesState::default());
    }
    let last = fig.borrow().axes.len() - 1;
    Value::Axes(fig, last)
}

/// JSON form of simple keyword arguments; callables and objects are named
/// by type only.
fn kw_json(a: &Args, skip: &[&str]) -> Map<String, Json> {
    let mut out = Map::new();
    for (k, v) in &a.kw {
        if skip.contains(&k.as_str()) {
            continue;
        }
        let j = value_to_json(v).unwrap_or_else(|_| Json::String(format!("<{}>", v.type_name())));
        out.insert(k.clone(), j);
    }
    out
}

fn axes_arg(interp: &mut Interp, a: &Args) -> PyResult<Value> {
    match a.kw("ax") {
        Some(ax @ Value::Axes(..)) => Ok(ax),
        Some(other) => Err(Exception::type_error(format!(
            "ax must be a matplotlib Axes, not {}",
            other.type_name()
        ))),
        None => {
            let size = figsize(a)?;
            let fig = new_figure(interp, size, 1);
            Ok(Value::Axes(fig, 0))
        }
    }
}

fn push_layer(ax: &Value, layer: Json) {
    if let Value::Axes(fig, i) = ax {
        fig.borrow_mut().axes[*i].layers.push(layer);
    }
}

fn geometry_layer(s: &Series, a: &Args, column: Option<(&str, &Series)>) -> PyResult<Json> {
    let geoms = s.geometries()?;
    let mut types: Vec<&str> = geoms.iter().flatten().map(geoframe::geometry::geom_type).collect();
    types.sort_unstable();
    types.dedup();
    let mut layer = json!({
        "kind": "geometries",
        "count": geoms.iter().flatten().count(),
        "geom_types": types,
    });
    let obj = layer.as_object_mut().expect("object literal");
    obj.extend(kw_json(a, &["ax", "figsize", "column"]));
    if let Some((name, col)) = column {
        obj.insert("column".into(), json!(name));
        let categorical = a.kw("categorical").map(|v| v.truthy()).transpose()?.unwrap_or(false) || !col.data.dtype().is_numeric();
        obj.insert("categorical".into(), json!(categorical));
        if categorical {
            obj.insert("categories".into(), json!(series::unique_values(col).iter().filter(|v| !v.is_none()).count()));
        } else if let Some(v) = col.data.numeric_values() {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            obj.insert("range".into(), json!([min, max]));
        }
    }
    Ok(layer)
}

pub fn plot_frame(interp: &mut Interp, f: &Frame, a: Args) -> PyResult<Value> {
    if !f.is_geo() {
        return plot_table(interp, f, a);
    }
    let column = match a.get(0, "column") {
        Some(c) => {
            let name = c.expect_str("column")?;
            let s = crate::libs::dataframe::column_series(f, &name)?;
            Some((name, s))
        }
        None => None,
    };
    let geoms = crate::libs::dataframe::geometry_series(f)?;
    let layer = geometry_layer(&geoms, &a, column.as_ref().map(|(n, s)| (n.as_str(), s)))?;
    let ax = axes_arg(interp, &a)?;
    push_layer(&ax, layer);
    Ok(ax)
}

fn plot_table(interp: &mut Interp, f: &Frame, a: Args) -> PyResult<Value> {
    let kind = a.kw("kind").map(|k| k.expect_str("kind")).transpose()?.unwrap_or_else(|| "line".into());
    for key in ["x", "y"] {
        if let Some(Value::Str(c)) = a.kw(key) {
            if f.column(&c).is_none() {
                return Err(Exception::key_error(quote(&c)));
            }
        }
    }
    let mut layer = Map::new();
    layer.insert("kind".into(), json!(kind));
    layer.insert("rows".into(), json!(f.n_rows()));
    layer.extend(kw_json(&a, &["ax", "figsize", "kind"]));
    let ax = axes_arg(interp, &a)?;
    push_layer(&ax, Json::Object(layer));
    Ok(ax)
}

pub fn plot_series(interp: &mut Interp, s: &Rc<Series>, a: Args) -> PyResult<Value> {
    let layer = if s.is_geo() {
        geometry_layer(s, &a, None)?
    } else {
        if s.data.dtype() != DType::Bool && !s.data.dtype().is_numeric() && a.kw("kind").is_none() {
            return Err(Exception::type_error("no numeric data to plot"));
        }
        let mut m = Map::new();
        m.insert("kind".into(), json!(a.kw("kind").map(|k| to_str(&k)).unwrap_or_else(|| "line".into())));
        m.insert("points".into(), json!(s.len()));
        m.extend(kw_json(&a, &["ax", "figsize", "kind"]));
        Json::Object(m)
    };
    let ax = axes_arg(interp, &a)?;
    push_layer(&ax, layer);
    Ok(ax)
}

// ---- figure / axes objects ----

pub const FIGURE_METHODS: &[&str] = &[
    "savefig", "suptitle", "tight_layout", "add_subplot", "gca", "set_size_inches", "legend", "colorbar",
    "subplots_adjust", "show", "get_axes", "set_dpi", "text",
];

pub fn figure_attr(fig: &FigureRef, name: &str) -> Option<Value> {
    match name {
        "axes" => Some(Value::list((0..fig.borrow().axes.len()).map(|i| Value::Axes(fig.clone(), i)).collect())),
        _ => None,
    }
}

fn save(interp: &mut Interp, fig: &FigureRef, a: &Args) -> PyResult<()> {
    let path = a.require(0, "fname", "savefig")?.expect_str("fname")?;
    let ext = path.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase()).unwrap_or_else(|| "png".into());
    if !["png", "svg", "pdf", "jpg", "jpeg"].contains(&ext.as_str()) {
        return Err(Exception::value_error(format!("Format '{ext}' is not supported")));
    }
    let svg = fig.borrow().to_svg();
    interp.write_file(&path, svg.as_bytes())?;
    fig.borrow_mut().saved.push(path);
    Ok(())
}

pub fn figure_method(interp: &mut Interp, fig: &FigureRef, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "savefig" => save(interp, fig, &a)?,
        "suptitle" => fig.borrow_mut().suptitle = Some(to_str(&a.require(0, "t", name)?)),
        "set_size_inches" => {
            let w = a.require(0, "w", name)?;
            let (w, h) = match (&w, a.pos.get(1)) {
                (_, Some(h)) => (w.expect_f64("w")?, h.expect_f64("h")?),
                _ => {
                    let items = iterate(&w)?;
                    (items[0].expect_f64("w")?, items[1].expect_f64("h")?)
                }
            };
            fig.borrow_mut().size = (w, h);
        }
        "add_subplot" | "gca" => {
            let needs_new = name == "add_subplot" || fig.borrow().axes.is_empty();
            if needs_new {
                fig.borrow_mut().axes.push(AxesState::default());
            }
            let last = fig.borrow().axes.len() - 1;
            return Ok(Value::Axes(fig.clone(), last));
        }
        "get_axes" => return Ok(figure_attr(fig, "axes").unwrap_or(Value::None)),
        "legend" | "colorbar" | "text" => {
            if fig.borrow().axes.is_empty() {
                fig.borrow_mut().axes.push(AxesState::default());
            }
            return axes_method(interp, fig, 0, name, a);
        }
        "tight_layout" | "subplots_adjust" | "show" | "set_dpi" => {}
        _ => return Err(Exception::attribute_error("Figure", name)),
    }
    Ok(Value::None)
}

pub const AXES_METHODS: &[&str] = &[
    "set_title", "set_xlabel", "set_ylabel", "set_xlim", "set_ylim", "set_axis_off", "set_axis_on", "axis",
    "legend", "grid", "set_aspect", "plot", "scatter", "bar", "barh", "hist", "text", "annotate", "get_figure",
    "get_legend", "set_xticks", "set_yticks", "set_xticklabels", "set_yticklabels", "tick_params", "margins",
    "axhline", "axvline", "set_facecolor", "get_xlim", "get_ylim", "pie", "colorbar", "add_patch", "fill",
    "imshow", "invert_yaxis", "set", "get_title", "get_legend_handles_labels",
];

pub fn axes_attr(fig: &FigureRef, _i: usize, name: &str) -> Option<Value> {
    match name {
        "figure" => Some(Value::Figure(fig.clone())),
        _ => None,
    }
}

fn prop(fig: &FigureRef, i: usize, key: &str, value: Json) {
    fig.borrow_mut().axes[i].props.insert(key.to_string(), value);
}

fn pair(a: &Args, name: &str) -> PyResult<Json> {
    let vals: Vec<Value> = if a.pos.len() >= 2 {
        a.pos[..2].to_vec()
    } else if let Some(v) = a.pos.first() {
        iterate(v)?
    } else {
        let lo = a.kw("left").or_else(|| a.kw("bottom")).unwrap_or(Value::None);
        let hi = a.kw("right").or_else(|| a.kw("top")).unwrap_or(Value::None);
        vec![lo, hi]
    };
    if vals.len() != 2 {
        return Err(Exception::value_error(format!("{name} expects two limits")));
    }
    Ok(json!([value_to_json(&vals[0])?, value_to_json(&vals[1])?]))
}

pub fn axes_method(interp: &mut Interp, fig: &FigureRef, i: usize, name: &str, a: Args) -> PyResult<Value> {
    let _ = interp;
    match name {
        "set_title" | "set_xlabel" | "set_ylabel" => {
            let text = to_str(&a.require(0, "label", name)?);
            prop(fig, i, &name[4..], json!(text));
        }
        "get_title" => {
            return Ok(fig.borrow().axes[i].props.get("title").and_then(Json::as_str).map_or(Value::str(""), Value::str))
        }
        "set_xlim" | "set_ylim" => prop(fig, i, &name[4..], pair(&a, name)?),
        "get_xlim" | "get_ylim" => {
            let key = &name[4..];
            let stored = fig.borrow().axes[i].props.get(key).cloned();
            let (lo, hi) = match stored.as_ref().and_then(Json::as_array) {
                Some(v) if v.len() == 2 => (v[0].as_f64().unwrap_or(0.0), v[1].as_f64().unwrap_or(1.0)),
                _ => (0.0, 1.0),
            };
            return Ok(Value::tuple(vec![Value::Float(lo), Value::Float(hi)]));
        }
        "set_axis_off" => prop(fig, i, "axis", json!("off")),
        "set_axis_on" => prop(fig, i, "axis", json!("on")),
        "axis" => {
            if let Some(v) = a.pos.first() {
                match v {
                    Value::Str(s) => prop(fig, i, "axis", json!(&**s)),
                    other => {
                        let lim = iterate(other)?;
                        if lim.len() != 4 {
                            return Err(Exception::value_error("axis() limits must be [xmin, xmax, ymin, ymax]"));
                        }
                        prop(fig, i, "xlim", json!([value_to_json(&lim[0])?, value_to_json(&lim[1])?]));
                        prop(fig, i, "ylim", json!([value_to_json(&lim[2])?, value_to_json(&lim[3])?]));
                    }
                }
            }
        }
        "legend" => {
            let mut opts = kw_json(&a, &[]);
            if let Some(labels) = a.pos.get(1).or(a.pos.first()) {
                opts.insert("entries".into(), json!(length(labels).unwrap_or(0)));
            }
            prop(fig, i, "legend", Json::Object(opts));
        }
        "get_legend" => return Ok(Value::None),
        "get_legend_handles_labels" => return Ok(Value::tuple(vec![Value::list(vec![]), Value::list(vec![])])),
        "grid" => prop(fig, i, "grid", json!(a.pos.first().map(Value::truthy).transpose()?.unwrap_or(true))),
        "set_aspect" | "set_facecolor" | "margins" | "tick_params" | "invert_yaxis" => {
            let v = a.pos.first().map(value_to_json).transpose()?.unwrap_or(Json::Bool(true));
            prop(fig, i, name, v);
        }
        "set_xticks" | "set_yticks" | "set_xticklabels" | "set_yticklabels" => {
            let v = a.pos.first().map(value_to_json).transpose()?.unwrap_or(Json::Null);
            prop(fig, i, name, v);
        }
        "set" => {
            for (k, v) in &a.kw {
                prop(fig, i, k, value_to_json(v)?);
            }
        }
        "get_figure" => return Ok(Value::Figure(fig.clone())),
        "plot" | "scatter" | "bar" | "barh" | "hist" | "pie" | "fill" | "imshow" | "axhline" | "axvline" | "text"
        | "annotate" | "add_patch" | "colorbar" => {
            let mut layer = Map::new();
            layer.insert("kind".into(), json!(name));
            let sizes: Vec<Json> = a.pos.iter().map(|v| json!(length(v).ok())).collect();
            layer.insert("args".into(), Json::Array(sizes));
            if matches!(name, "text" | "annotate") {
                if let Some(t) = a.pos.iter().find_map(|v| v.as_str().map(str::to_string)) {
                    layer.insert("text".into(), json!(t));
                }
            }
            layer.extend(kw_json(&a, &[]));
            fig.borrow_mut().axes[i].layers.push(Json::Object(layer));
            if name == "plot" {
                return Ok(Value::list(vec![]));
            }
        }
        _ => return Err(Exception::attribute_error("Axes", name)),
    }
    Ok(Value::None)
}

// ---- pyplot ----

pub const PYPLOT_FUNCTIONS: &[&str] = &[
    "subplots", "figure", "gca", "gcf", "title", "xlabel", "ylabel", "xlim", "ylim", "legend", "axis", "grid",
    "plot", "scatter", "bar", "barh", "hist", "text", "annotate", "tight_layout", "show", "close", "savefig",
    "suptitle", "colorbar", "xticks", "yticks", "get_cmap", "subplots_adjust", "pie",
];

pub fn pyplot_call(interp: &mut Interp, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "subplots" => {
            let nrows = a.get(0, "nrows").map(|v| v.expect_int("nrows")).transpose()?.unwrap_or(1).max(1) as usize;
            let ncols = a.get(1, "ncols").map(|v| v.expect_int("ncols")).transpose()?.unwrap_or(1).max(1) as usize;
            let fig = new_figure(interp, figsize(&a)?, nrows * ncols);
            let axes = if nrows * ncols == 1 {
                Value::Axes(fig.clone(), 0)
            } else {
                let items: Vec<Value> = (0..nrows * ncols).map(|i| Value::Axes(fig.clone(), i)).collect();
                if nrows > 1 && ncols > 1 {
                    Value::Array(Rc::new(items.chunks(ncols).map(|c| Value::Array(Rc::new(c.to_vec()))).collect()))
                } else {
                    Value::Array(Rc::new(items))
                }
            };
            Ok(Value::tuple(vec![Value::Figure(fig), axes]))
        }
        "figure" => Ok(Value::Figure(new_figure(interp, figsize(&a)?, 0))),
        "gcf" => {
            let ax = current_axes(interp);
            match ax {
                Value::Axes(fig, _) => Ok(Value::Figure(fig)),
                _ => unreachable!(),
            }
        }
        "gca" => Ok(current_axes(interp)),
        "show" | "tight_layout" | "subplots_adjust" => Ok(Value::None),
        "close" => {
            interp.pyplot.current = None;
            Ok(Value::None)
        }
        "savefig" | "suptitle" => {
            let Value::Axes(fig, _) = current_axes(interp) else { unreachable!() };
            figure_method(interp, &fig, name, a)
        }
        "get_cmap" => Ok(Value::object(Object::Colormap(
            a.get(0, "name").map(|v| v.expect_str("name")).transpose()?.unwrap_or_else(|| "viridis".into()),
        ))),
        _ => {
            let Value::Axes(fig, i) = current_axes(interp) else { unreachable!() };
            let method = match name {
                "title" | "xlabel" | "ylabel" | "xlim" | "ylim" => format!("set_{name}"),
                "xticks" => "set_xticks".into(),
                "yticks" => "set_yticks".into(),
                other => other.to_string(),
            };
            axes_method(interp, &fig, i, &method, a)
        }
    }
}

// ---- colormaps ----

pub const COLORMAPS: &[&str] = &[
    "viridis", "plasma", "inferno", "magma", "cividis", "tab10", "tab20", "Set1", "Set2", "Set3", "Paired",
    "Pastel1", "Accent", "Dark2", "Blues", "Reds", "Greens", "Oranges", "Purples", "Greys", "YlOrRd", "jet",
    "rainbow", "coolwarm", "hsv", "Spectral", "RdYlGn", "terrain",
];

/// Deterministic RGBA for a colormap sample in `[0, 1]` (or an integer slot).
pub fn colormap_call(name: &str, a: Args) -> PyResult<Value> {
    let x = a.require(0, "x", name)?;
    let t = match x {
        Value::Int(i) => (i.rem_euclid(20) as f64) / 19.0,
        other => other.expect_f64("x")?.clamp(0.0, 1.0),
    };
    let seed = name.bytes().fold(7u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b)));
    let phase = f64::from(seed % 360) / 360.0;
    let hue = (phase + t) % 1.0;
    let (r, g, b) = hsv_to_rgb(hue, 0.65, 0.85);
    Ok(Value::tuple(vec![Value::Float(r), Value::Float(g), Value::Float(b), Value::Float(1.0)]))
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    match i as i64 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

/// `matplotlib.patches.Patch`, `matplotlib.lines.Line2D`: legend handles
/// kept as plain dicts.
pub fn artist(kind: &str, a: &Args) -> Value {
    let mut entries = vec![(Value::str("artist"), Value::str(kind))];
    entries.extend(a.kw.iter().map(|(k, v)| (Value::str(k), v.clone())));
    Value::dict(entries)
}

// ---- contextily ----

const PROVIDERS: &[(&str, &[&str])] = &[
    ("OpenStreetMap", &["Mapnik", "HOT", "DE", "France", "CH"]),
    ("CartoDB", &["Positron", "DarkMatter", "Voyager", "PositronNoLabels", "DarkMatterNoLabels"]),
    ("Stamen", &["Terrain", "Toner", "TonerLite", "Watercolor"]),
    ("Esri", &["WorldImagery", "WorldStreetMap", "WorldTopoMap", "WorldGrayCanvas"]),
    ("OpenTopoMap", &[]),
    ("Stadia", &["AlidadeSmooth", "AlidadeSmoothDark", "StamenTerrain", "StamenToner"]),
];

pub fn provider_attr(path: &str, name: &str) -> PyResult<Value> {
    let known = if path.is_empty() {
        PROVIDERS.iter().any(|(p, _)| *p == name)
    } else {
        PROVIDERS.iter().any(|(p, leaves)| *p == path && leaves.contains(&name))
    };
    if !known {
        return Err(Exception::new("AttributeError", format!("provider '{name}' is not available")));
    }
    let full = if path.is_empty() { name.to_string() } else { format!("{path}.{name}") };
    Ok(Value::object(Object::Provider(full)))
}

pub fn add_basemap(a: Args) -> PyResult<Value> {
    let ax = a.require(0, "ax", "add_basemap")?;
    let Value::Axes(fig, i) = &ax else {
        return Err(Exception::type_error(format!("add_basemap expects an Axes, got {}", ax.type_name())));
    };
    let source = match a.get(2, "source") {
        Some(Value::Object(o)) => match &*o {
            Object::Provider(p) => p.clone(),
            _ => "custom".into(),
        },
        Some(Value::Str(s)) => s.to_string(),
        Some(other) => return Err(Exception::type_error(format!("invalid tile source: {}", other.type_name()))),
        None => "OpenStreetMap.Mapnik".into(),
    };
    let mut layer = Map::new();
    layer.insert("kind".into(), json!("basemap"));
    layer.insert("source".into(), json!(source));
    if let Some(c) = a.get(1, "crs") {
        layer.insert("crs".into(), json!(to_str(&c)));
    }
    if let Some(z) = a.kw("zoom") {
        layer.insert("zoom".into(), value_to_json(&z)?);
    }
    fig.borrow_mut().axes[*i].layers.push(Json::Object(layer));
    Ok(Value::None)
}
