//! GeoJSON `FeatureCollection` reading and writing.

use geo::{Coord, LineString, MultiLineString, MultiPoint, MultiPolygon, Point, Polygon};
use serde_json::{json, Map, Value};

use crate::column::{Column, ColumnData, Scalar};
use crate::geometry::Crs;
use crate::{Frame, FrameError, Geometry, Result};

fn err(msg: impl Into<String>) -> FrameError {
    FrameError::GeoJson(msg.into())
}

fn coord(v: &Value) -> Result<Coord> {
    let arr = v.as_array().ok_or_else(|| err("position must be an array"))?;
    match (arr.first().and_then(Value::as_f64), arr.get(1).and_then(Value::as_f64)) {
        (Some(x), Some(y)) => Ok(Coord { x, y }),
        _ => Err(err("position needs two numbers")),
    }
}

fn coords(v: &Value) -> Result<Vec<Coord>> {
    v.as_array()
        .ok_or_else(|| err("expected an array of positions"))?
        .iter()
        .map(coord)
        .collect()
}

fn polygon(v: &Value) -> Result<Polygon> {
    let rings = v.as_array().ok_or_else(|| err("polygon needs rings"))?;
    let mut rings = rings.iter().map(|r| coords(r).map(LineString));
    let exterior = rings.next().ok_or_else(|| err("polygon without exterior ring"))??;
    Ok(Polygon::new(exterior, rings.collect::<Result<_>>()?))
}

/// Parses a GeoJSON geometry object.
pub fn geometry_from_value(v: &Value) -> Result<Geometry> {
    let kind = v.get("type").and_then(Value::as_str).ok_or_else(|| err("geometry without type"))?;
    if kind == "GeometryCollection" {
        let parts = v
            .get("geometries")
            .and_then(Value::as_array)
            .ok_or_else(|| err("collection without geometries"))?
            .iter()
            .map(geometry_from_value)
            .collect::<Result<Vec<_>>>()?;
        return Ok(Geometry::GeometryCollection(geo::GeometryCollection(parts)));
    }
    let c = v.get("coordinates").ok_or_else(|| err("geometry without coordinates"))?;
    let list = |c: &Value| -> Result<Vec<Value>> {
        c.as_array().cloned().ok_or_else(|| err("expected an array"))
    };
    Ok(match kind {
        "Point" => Geometry::Point(Point(coord(c)?)),
        "MultiPoint" => Geometry::MultiPoint(MultiPoint(coords(c)?.into_iter().map(Point).collect())),
        "LineString" => Geometry::LineString(LineString(coords(c)?)),
        "MultiLineString" => Geometry::MultiLineString(MultiLineString(
            list(c)?.iter().map(|l| coords(l).map(LineString)).collect::<Result<_>>()?,
        )),
        "Polygon" => Geometry::Polygon(polygon(c)?),
        "MultiPolygon" => Geometry::MultiPolygon(MultiPolygon(
            list(c)?.iter().map(polygon).collect::<Result<_>>()?,
        )),
        other => return Err(err(format!("unsupported geometry type `{other}`"))),
    })
}

fn pos(c: &Coord) -> Value {
    json!([c.x, c.y])
}

fn ring(ls: &LineString) -> Value {
    Value::Array(ls.0.iter().map(pos).collect())
}

fn poly(p: &Polygon) -> Value {
    let mut rings = vec![ring(p.exterior())];
    rings.extend(p.interiors().iter().map(ring));
    Value::Array(rings)
}

/// Serializes a geometry as a GeoJSON geometry object.
pub fn geometry_to_value(g: &Geometry) -> Value {
    match g {
        Geometry::Point(p) => json!({"type": "Point", "coordinates": pos(&p.0)}),
        Geometry::Line(l) => json!({"type": "LineString", "coordinates": [pos(&l.start), pos(&l.end)]}),
        Geometry::LineString(ls) => json!({"type": "LineString", "coordinates": ring(ls)}),
        Geometry::Polygon(p) => json!({"type": "Polygon", "coordinates": poly(p)}),
        Geometry::Rect(r) => geometry_to_value(&Geometry::Polygon(r.to_polygon())),
        Geometry::Triangle(t) => geometry_to_value(&Geometry::Polygon(t.to_polygon())),
        Geometry::MultiPoint(mp) => json!({
            "type": "MultiPoint",
            "coordinates": mp.0.iter().map(|p| pos(&p.0)).collect::<Vec<_>>(),
        }),
        Geometry::MultiLineString(mls) => json!({
            "type": "MultiLineString",
            "coordinates": mls.0.iter().map(ring).collect::<Vec<_>>(),
        }),
        Geometry::MultiPolygon(mp) => json!({
            "type": "MultiPolygon",
            "coordinates": mp.0.iter().map(poly).collect::<Vec<_>>(),
        }),
        Geometry::GeometryCollection(gc) => json!({
            "type": "GeometryCollection",
            "geometries": gc.0.iter().map(geometry_to_value).collect::<Vec<_>>(),
        }),
    }
}

fn scalar_from_json(v: &Value) -> Scalar {
    match v {
        Value::Null => Scalar::Null,
        Value::Bool(b) => Scalar::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Scalar::Int(i),
            None => Scalar::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => Scalar::Str(s.clone()),
        other => Scalar::Str(other.to_string()),
    }
}

fn scalar_to_json(s: &Scalar) -> Value {
    match s {
        Scalar::Null => Value::Null,
        Scalar::Bool(b) => Value::Bool(*b),
        Scalar::Int(i) => json!(i),
        Scalar::Float(f) if f.is_finite() => json!(f),
        Scalar::Float(_) => Value::Null,
        Scalar::Str(s) => Value::String(s.clone()),
        Scalar::Geometry(g) => geometry_to_value(g),
    }
}

fn parse_crs(root: &Value) -> Crs {
    let name = root
        .pointer("/crs/properties/name")
        .and_then(Value::as_str)
        .unwrap_or(Crs::WGS84);
    // urn:ogc:def:crs:EPSG::4326 and OGC:CRS84 both denote lon/lat WGS84
    if name.ends_with("CRS84") {
        return Crs::wgs84();
    }
    match name.rsplit_once("::") {
        Some((prefix, code)) if prefix.to_ascii_uppercase().contains("EPSG") => Crs::new(code),
        _ => Crs::new(name),
    }
}

impl Frame {
    /// Reads a GeoJSON `FeatureCollection`. Property columns keep their
    /// first-seen order; the active geometry column is named `geometry`.
    pub fn from_geojson_str(text: &str) -> Result<Frame> {
        let root: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
        if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
            return Err(err("expected a FeatureCollection"));
        }
        let features = root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| err("FeatureCollection without features"))?;

        let mut names: Vec<String> = Vec::new();
        for f in features {
            if let Some(props) = f.get("properties").and_then(Value::as_object) {
                for k in props.keys() {
                    if !names.contains(k) && k != "geometry" {
                        names.push(k.clone());
                    }
                }
            }
        }
        let mut cells: Vec<Vec<Scalar>> = vec![Vec::with_capacity(features.len()); names.len()];
        let mut geoms = Vec::with_capacity(features.len());
        for f in features {
            let props = f.get("properties").and_then(Value::as_object);
            for (i, name) in names.iter().enumerate() {
                let v = props.and_then(|p| p.get(name)).unwrap_or(&Value::Null);
                cells[i].push(scalar_from_json(v));
            }
            geoms.push(match f.get("geometry") {
                None | Some(Value::Null) => None,
                Some(g) => Some(geometry_from_value(g)?),
            });
        }
        let mut columns: Vec<Column> = names
            .into_iter()
            .zip(cells)
            .map(|(name, values)| {
                let data = if values.is_empty() {
                    ColumnData::Float(Vec::new())
                } else {
                    ColumnData::from_scalars(&values)
                };
                Column::new(name, data)
            })
            .collect();
        columns.push(Column::new("geometry", ColumnData::Geometry(geoms)));
        Frame::from_columns(columns, Some("geometry"), Some(parse_crs(&root)))
    }

    /// Writes the frame as a GeoJSON `FeatureCollection`. Plain frames are
    /// written with null geometries.
    pub fn to_geojson_value(&self) -> Value {
        let geom_name = self.geometry_name();
        let props: Vec<&Column> = self
            .columns()
            .iter()
            .filter(|c| Some(c.name.as_str()) != geom_name && c.dtype() != crate::DType::Geometry)
            .collect();
        let geoms = self.geometries().ok();
        let features: Vec<Value> = (0..self.n_rows())
            .map(|row| {
                let mut p = Map::new();
                for c in &props {
                    p.insert(c.name.clone(), scalar_to_json(&c.data.get(row)));
                }
                let geometry = geoms
                    .and_then(|g| g[row].as_ref())
                    .map_or(Value::Null, geometry_to_value);
                json!({"type": "Feature", "properties": p, "geometry": geometry})
            })
            .collect();
        let mut root = json!({"type": "FeatureCollection", "features": features});
        if let Some(crs) = self.crs().filter(|c| !c.is_geographic()) {
            root["crs"] = json!({"type": "name", "properties": {"name": crs.as_str()}});
        }
        root
    }

    pub fn to_geojson_string(&self) -> String {
        serde_json::to_string(&self.to_geojson_value()).expect("GeoJSON values always serialize")
    }
}
