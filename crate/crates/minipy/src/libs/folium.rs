//! Interactive web maps (`folium`). Elements form a tree that `save`
//! serializes into a self-contained HTML page.

use std::cell::RefCell;
use std::rc::Rc;

use geoframe::{Crs, Frame};
use serde_json::{json, Map, Value as Json};

use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::geom::{json_to_value, value_to_json};
use crate::value::*;

pub type ElementRef = Rc<RefCell<Element>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Element {
    pub kind: String,
    pub options: Map<String, Json>,
    pub children: Vec<ElementRef>,
    /// Raw HTML added through `get_root().html.add_child(...)`.
    pub html: Vec<String>,
}

impl Element {
    pub fn new(kind: &str) -> Self {
        Element {
            kind: kind.to_string(),
            ..Element::default()
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "kind": self.kind,
            "options": self.options,
            "children": self.children.iter().map(|c| c.borrow().to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn render_html(&self) -> String {
        let spec = serde_json::to_string(&self.to_json()).unwrap_or_default().replace("</", "<\\/");
        let mut out = String::from("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\"/>\n<title>map</title>\n</head>\n<body>\n");
        out.push_str("<div class=\"folium-map\" id=\"map\"></div>\n");
        out.push_str(&format!("<script type=\"application/json\" id=\"map-spec\">{spec}</script>\n"));
        for h in &self.html {
            out.push_str(h);
            out.push('\n');
        }
        out.push_str("</body>\n</html>\n");
        out
    }
}

/// Positional parameter names per constructor.
const CONSTRUCTORS: &[(&str, &[&str])] = &[
    ("Map", &["location", "width", "height", "tiles"]),
    ("GeoJson", &["data"]),
    ("GeoJsonTooltip", &["fields", "aliases"]),
    ("GeoJsonPopup", &["fields", "aliases"]),
    ("Marker", &["location", "popup", "tooltip", "icon"]),
    ("CircleMarker", &["location", "radius", "popup", "tooltip"]),
    ("Circle", &["location", "radius", "popup", "tooltip"]),
    ("Icon", &["color", "icon_color", "icon"]),
    ("LayerControl", &["position"]),
    ("FeatureGroup", &["name"]),
    ("Element", &["template"]),
    ("Popup", &["html"]),
    ("Tooltip", &["text"]),
    ("PolyLine", &["locations", "popup", "tooltip"]),
    ("Polygon", &["locations", "popup", "tooltip"]),
    ("Rectangle", &["bounds", "popup", "tooltip"]),
    ("Choropleth", &["geo_data", "data", "columns", "key_on"]),
    ("TileLayer", &["tiles"]),
    ("DivIcon", &["html"]),
];

const PLUGINS: &[(&str, &[&str])] = &[
    ("MarkerCluster", &["locations", "popups"]),
    ("Fullscreen", &["position"]),
    ("MiniMap", &["tile_layer"]),
    ("HeatMap", &["data"]),
    ("MeasureControl", &["position"]),
];

pub fn has_constructor(module: &str, name: &str) -> bool {
    let table = if module == "folium.plugins" { PLUGINS } else { CONSTRUCTORS };
    table.iter().any(|(n, _)| *n == name)
}

fn location(v: &Value, what: &str) -> PyResult<Json> {
    let items = iterate(v).map_err(|_| Exception::type_error(format!("{what} must be a [lat, lon] pair")))?;
    if items.len() != 2 {
        return Err(Exception::value_error(format!(
            "Expected two (lat, lon) values for {what}, instead got: {}",
            repr(v)
        )));
    }
    let lat = items[0].expect_f64("latitude")?;
    let lon = items[1].expect_f64("longitude")?;
    if lat.is_nan() || lon.is_nan() {
        return Err(Exception::value_error(format!("{what} values cannot contain NaNs.")));
    }
    Ok(json!([lat, lon]))
}

/// GeoJSON for a layer's `data` argument, in WGS84.
fn geojson_data(interp: &mut Interp, v: &Value) -> PyResult<Json> {
    match v {
        Value::Frame(f) => {
            let f = f.borrow();
            let f = to_wgs84(&f)?;
            Ok(f.to_geojson_value())
        }
        Value::Series(s) if s.is_geo() => {
            let geoms = s.geometries()?;
            let features: Vec<Json> = geoms
                .iter()
                .flatten()
                .map(|g| json!({"type": "Feature", "properties": {}, "geometry": geoframe::geojson::geometry_to_value(g)}))
                .collect();
            Ok(json!({"type": "FeatureCollection", "features": features}))
        }
        Value::Geometry(g) => Ok(geoframe::geojson::geometry_to_value(g)),
        Value::Dict(_) => value_to_json(v),
        Value::Str(s) => match serde_json::from_str(s) {
            Ok(j) => Ok(j),
            Err(_) => {
                let bytes = interp.sink.read(s).map_err(|e| Exception::value_error(format!("Cannot render objects with any missing geometries: {e}")))?;
                serde_json::from_slice(&bytes).map_err(|e| Exception::value_error(e.to_string()))
            }
        },
        other => Err(Exception::value_error(format!(
            "Cannot render objects with any missing geometries: {}",
            other.type_name()
        ))),
    }
}

fn to_wgs84(f: &Frame) -> PyResult<Frame> {
    match f.crs() {
        Some(c) if c.as_str() != Crs::WGS84 => f
            .to_crs(&Crs::wgs84())
            .map_err(crate::libs::dataframe::frame_err),
        _ => Ok(f.clone()),
    }
}

fn features(data: &Json) -> Vec<Json> {
    match data.get("features").and_then(Json::as_array) {
        Some(f) => f.clone(),
        None if data.get("type").and_then(Json::as_str) == Some("Feature") => vec![data.clone()],
        None => Vec::new(),
    }
}

fn check_fields(kind: &str, fields: &Json, data: &Json) -> PyResult<()> {
    let Some(fields) = fields.as_array() else { return Ok(()) };
    let feats = features(data);
    let Some(first) = feats.first() else { return Ok(()) };
    let props: Vec<String> = first
        .get("properties")
        .and_then(Json::as_object)
        .map(|m| m.keys().cloned().collect())
        .unwrap_or_default();
    for f in fields {
        let name = f.as_str().unwrap_or_default();
        if !props.iter().any(|p| p == name) {
            return Err(Exception::new(
                "AssertionError",
                format!(
                    "The field {name} is not available in the data. Choose from: ({}). ({kind})",
                    props.join(", ")
                ),
            ));
        }
    }
    Ok(())
}

pub fn construct(interp: &mut Interp, module: &str, kind: &str, a: Args) -> PyResult<Value> {
    let table = if module == "folium.plugins" { PLUGINS } else { CONSTRUCTORS };
    let params = table
        .iter()
        .find(|(n, _)| *n == kind)
        .map(|(_, p)| *p)
        .ok_or_else(|| Exception::attribute_error(module, kind))?;
    if a.pos.len() > params.len() {
        return Err(Exception::type_error(format!(
            "{kind}() takes at most {} positional arguments",
            params.len()
        )));
    }
    let mut named: Vec<(String, Value)> = params.iter().zip(&a.pos).map(|(p, v)| (p.to_string(), v.clone())).collect();
    named.extend(a.kw.iter().cloned());
    let mut el = Element::new(kind);
    let mut children = Vec::new();
    let mut style_fns = Vec::new();
    for (k, v) in &named {
        match (k.as_str(), v) {
            ("location", v) if !v.is_none() => {
                el.options.insert(k.clone(), location(v, "location")?);
            }
            ("data" | "geo_data", v) if matches!(kind, "GeoJson" | "Choropleth") => {
                el.options.insert(k.clone(), geojson_data(interp, v)?);
            }
            ("data", Value::Frame(f)) => {
                el.options.insert(k.clone(), f.borrow().to_geojson_value());
            }
            ("style_function" | "highlight_function", f) if !f.is_none() => style_fns.push((k.clone(), f.clone())),
            ("tooltip" | "popup" | "icon", Value::Folium(child)) => {
                el.options.insert(k.clone(), json!(child.borrow().kind));
                children.push(child.clone());
            }
            (_, Value::Function(_)) | (_, Value::Builtin(_)) => {
                el.options.insert(k.clone(), json!("<function>"));
            }
            (_, v) => {
                let j = value_to_json(v).unwrap_or_else(|_| json!(format!("<{}>", v.type_name())));
                el.options.insert(k.clone(), j);
            }
        }
    }
    if matches!(kind, "Marker" | "CircleMarker" | "Circle") && !el.options.contains_key("location") {
        return Err(Exception::type_error(format!("{kind}() missing required argument: 'location'")));
    }
    let data = el.options.get("data").cloned();
    if let Some(data) = &data {
        for (k, f) in style_fns {
            let mut styles = Vec::new();
            for feat in features(data) {
                let out = interp.call(&f, Args::new(vec![json_to_value(&feat)]))?;
                if !matches!(out, Value::Dict(_)) {
                    return Err(Exception::type_error(format!("{k} should return a dict, not {}", out.type_name())));
                }
                styles.push(value_to_json(&out)?);
            }
            el.options.insert(format!("{k}_result"), Json::Array(styles));
        }
        for c in &children {
            let c = c.borrow();
            if let Some(fields) = c.options.get("fields") {
                check_fields(&c.kind, fields, data)?;
            }
        }
    }
    el.children = children;
    Ok(Value::Folium(Rc::new(RefCell::new(el))))
}

pub const METHODS: &[&str] = &[
    "add_to", "add_child", "save", "fit_bounds", "get_root", "_repr_html_", "get_name", "keep_in_front",
];

pub fn method(interp: &mut Interp, el: &ElementRef, name: &str, a: Args) -> PyResult<Value> {
    match name {
        "add_to" => {
            let parent = a.require(0, "parent", name)?;
            let target = match &parent {
                Value::Folium(p) => p.clone(),
                Value::Object(o) => match &**o {
                    Object::MapRoot(p) | Object::MapHtml(p) => p.clone(),
                    _ => return Err(Exception::type_error("add_to expects a map element")),
                },
                other => return Err(Exception::type_error(format!("add_to expects a map element, got {}", other.type_name()))),
            };
            if Rc::ptr_eq(&target, el) {
                return Err(Exception::value_error("cannot add an element to itself"));
            }
            if let Some(data) = target.borrow().options.get("data") {
                if let Some(fields) = el.borrow().options.get("fields") {
                    check_fields(&el.borrow().kind, fields, data)?;
                }
            }
            target.borrow_mut().children.push(el.clone());
            Ok(Value::Folium(el.clone()))
        }
        "add_child" => {
            let child = match a.require(0, "child", name)? {
                Value::Folium(c) => c,
                other => return Err(Exception::type_error(format!("add_child expects a map element, got {}", other.type_name()))),
            };
            el.borrow_mut().children.push(child);
            Ok(Value::Folium(el.clone()))
        }
        "save" => {
            let path = a.require(0, "outfile", name)?.expect_str("outfile")?;
            let html = el.borrow().render_html();
            interp.write_file(&path, html.as_bytes())?;
            Ok(Value::None)
        }
        "fit_bounds" => {
            let b = a.require(0, "bounds", name)?;
            let corners = iterate(&b)?;
            if corners.len() != 2 {
                return Err(Exception::value_error("fit_bounds expects [[south, west], [north, east]]"));
            }
            let sw = location(&corners[0], "bounds")?;
            let ne = location(&corners[1], "bounds")?;
            el.borrow_mut().options.insert("fit_bounds".into(), json!([sw, ne]));
            Ok(Value::None)
        }
        "get_root" => Ok(Value::object(Object::MapRoot(el.clone()))),
        "_repr_html_" => Ok(Value::str(el.borrow().render_html())),
        "get_name" => Ok(Value::str(format!("{}_{}", el.borrow().kind.to_lowercase(), Rc::as_ptr(el) as usize % 100_000))),
        "keep_in_front" => Ok(Value::None),
        _ => Err(Exception::attribute_error(&el.borrow().kind, name)),
    }
}

pub fn attr(el: &ElementRef, name: &str) -> Option<Value> {
    let e = el.borrow();
    match name {
        "location" => e.options.get("location").map(json_to_value),
        "options" => Some(json_to_value(&Json::Object(e.options.clone()))),
        "data" => e.options.get("data").map(json_to_value),
        "_children" => Some(Value::dict(
            e.children
                .iter()
                .enumerate()
                .map(|(i, c)| (Value::str(format!("{}_{i}", c.borrow().kind)), Value::Folium(c.clone())))
                .collect(),
        )),
        _ => None,
    }
}

/// `root.html.add_child(folium.Element(html))`
pub fn html_add_child(el: &ElementRef, a: Args) -> PyResult<Value> {
    let child = a.require(0, "child", "add_child")?;
    let text = match &child {
        Value::Folium(c) => c
            .borrow()
            .options
            .get("template")
            .and_then(Json::as_str)
            .map(str::to_string)
            .ok_or_else(|| Exception::type_error("only folium.Element children carry HTML"))?,
        Value::Str(s) => s.to_string(),
        other => return Err(Exception::type_error(format!("add_child expects an Element, got {}", other.type_name()))),
    };
    el.borrow_mut().html.push(text);
    Ok(Value::None)
}

/// `GeoDataFrame.explore()`
pub fn explore(_interp: &mut Interp, f: &Frame, a: Args) -> PyResult<Value> {
    let wgs = to_wgs84(f)?;
    if let Some(Value::Str(c)) = a.get(0, "column") {
        if wgs.column(&c).is_none() {
            return Err(Exception::key_error(quote(&c)));
        }
    }
    let map = match a.kw("m") {
        Some(Value::Folium(m)) => m,
        Some(other) => return Err(Exception::type_error(format!("m must be a folium.Map, got {}", other.type_name()))),
        None => {
            let mut m = Element::new("Map");
            if let Some([minx, miny, maxx, maxy]) = wgs.total_bounds() {
                m.options.insert("location".into(), json!([(miny + maxy) / 2.0, (minx + maxx) / 2.0]));
                m.options.insert("fit_bounds".into(), json!([[miny, minx], [maxy, maxx]]));
            }
            if let Some(t) = a.kw("tiles") {
                m.options.insert("tiles".into(), value_to_json(&t)?);
            }
            Rc::new(RefCell::new(m))
        }
    };
    let mut layer = Element::new("GeoJson");
    layer.options.insert("data".into(), wgs.to_geojson_value());
    for (k, v) in &a.kw {
        if k == "m" || k == "tiles" {
            continue;
        }
        let j = value_to_json(v).unwrap_or_else(|_| json!(format!("<{}>", v.type_name())));
        layer.options.insert(k.clone(), j);
    }
    if let Some(c) = a.pos.first() {
        layer.options.insert("column".into(), value_to_json(c)?);
    }
    map.borrow_mut().children.push(Rc::new(RefCell::new(layer)));
    Ok(Value::Folium(map))
}
