//! Owned results handed back to the host.

use geoframe::{ColumnData, Crs, Frame, Geometry, Scalar};
use serde_json::Value as Json;

use crate::libs::plot::FigureState;
use crate::value::{repr, Object, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutput {
    pub name: Option<String>,
    pub data: ColumnData,
    pub index: Option<Vec<Scalar>>,
    pub crs: Option<Crs>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Output>),
    Tuple(Vec<Output>),
    Dict(Vec<(Output, Output)>),
    Frame(Frame),
    Series(SeriesOutput),
    Geometry(Geometry),
    Figure(FigureState),
    /// An axes object and the figure that owns it.
    Axes(FigureState, usize),
    /// A web map element: its tree and the page `save` would write.
    Map { kind: String, spec: Json, html: String },
    Other { kind: String, repr: String },
}

impl Output {
    pub fn from_value(v: &Value) -> Output {
        match v {
            Value::None => Output::None,
            Value::Bool(b) => Output::Bool(*b),
            Value::Int(i) => Output::Int(*i),
            Value::Float(f) => Output::Float(*f),
            Value::Str(s) => Output::Str(s.to_string()),
            Value::List(l) | Value::Set(l) => Output::List(l.borrow().iter().map(Output::from_value).collect()),
            Value::Array(a) => Output::List(a.iter().map(Output::from_value).collect()),
            Value::Tuple(t) => Output::Tuple(t.iter().map(Output::from_value).collect()),
            Value::Dict(d) => Output::Dict(
                d.borrow()
                    .entries
                    .iter()
                    .map(|(k, v)| (Output::from_value(k), Output::from_value(v)))
                    .collect(),
            ),
            Value::Frame(f) => Output::Frame(f.borrow().clone()),
            Value::Series(s) => Output::Series(SeriesOutput {
                name: s.name.clone(),
                data: s.data.clone(),
                index: s.index.clone(),
                crs: s.crs.clone(),
            }),
            Value::Geometry(g) => Output::Geometry((**g).clone()),
            Value::Figure(f) => Output::Figure(f.borrow().clone()),
            Value::Axes(f, i) => Output::Axes(f.borrow().clone(), *i),
            Value::Folium(el) => {
                let el = el.borrow();
                Output::Map {
                    kind: el.kind.clone(),
                    spec: el.to_json(),
                    html: el.render_html(),
                }
            }
            Value::Object(o) if matches!(&**o, Object::Row { .. }) => {
                let Object::Row { columns, values } = &**o else { unreachable!() };
                Output::Series(SeriesOutput {
                    name: None,
                    data: crate::value::column_from_values(values)
                        .unwrap_or_else(|_| ColumnData::Str(values.iter().map(|v| Some(repr(v))).collect())),
                    index: Some(columns.iter().map(|c| Scalar::Str(c.clone())).collect()),
                    crs: None,
                })
            }
            other => Output::Other {
                kind: other.kind(),
                repr: repr(other),
            },
        }
    }

    /// Fully qualified kind name, as used for return-type checks.
    pub fn kind(&self) -> String {
        match self {
            Output::None => "None".into(),
            Output::Bool(_) => "bool".into(),
            Output::Int(_) => "int".into(),
            Output::Float(_) => "float".into(),
            Output::Str(_) => "str".into(),
            Output::List(_) => "list".into(),
            Output::Tuple(_) => "tuple".into(),
            Output::Dict(_) => "dict".into(),
            Output::Frame(f) if f.is_geo() => "geopandas.GeoDataFrame".into(),
            Output::Frame(_) => "pandas.DataFrame".into(),
            Output::Series(s) if matches!(s.data, ColumnData::Geometry(_)) => "geopandas.GeoSeries".into(),
            Output::Series(_) => "pandas.Series".into(),
            Output::Geometry(g) => format!("shapely.{}", geoframe::geometry::geom_type(g)),
            Output::Figure(_) => "matplotlib.Figure".into(),
            Output::Axes(..) => "matplotlib.Axes".into(),
            Output::Map { kind, .. } => format!("folium.{kind}"),
            Output::Other { kind, .. } => kind.clone(),
        }
    }

    pub fn as_frame(&self) -> Option<&Frame> {
        match self {
            Output::Frame(f) => Some(f),
            _ => None,
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            Output::Frame(f) => format!("{} ({} rows x {} columns)", self.kind(), f.n_rows(), f.columns().len()),
            Output::Series(s) => format!("{} ({} values)", self.kind(), s.data.len()),
            Output::Str(s) => format!("str {s:?}"),
            Output::Int(i) => format!("int {i}"),
            Output::Float(x) => format!("float {}", geoframe::format_float(*x)),
            Output::Bool(b) => format!("bool {b}"),
            Output::List(items) => format!("list of {} items", items.len()),
            Output::Tuple(items) => format!("tuple of {} items", items.len()),
            Output::Dict(items) => format!("dict of {} items", items.len()),
            Output::Figure(f) => format!("matplotlib.Figure with {} Axes", f.axes.len()),
            Output::Axes(f, _) => format!("matplotlib.Axes ({} layers)", f.axes.iter().map(|a| a.layers.len()).sum::<usize>()),
            Output::Map { kind, spec, .. } => format!(
                "folium.{kind} with {} layers",
                spec.get("children").and_then(Json::as_array).map_or(0, Vec::len)
            ),
            Output::Geometry(g) => geoframe::geometry::to_wkt(g),
            Output::None => "None".into(),
            Output::Other { kind, repr } => format!("{kind} {repr}"),
        }
    }
}
