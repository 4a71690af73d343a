//! Geometry objects (`shapely`) and element-wise GeoSeries operations.

use std::rc::Rc;

use geoframe::geo::{
    Area, BooleanOps, BoundingRect, Centroid, ConvexHull, Coord, EuclideanDistance, EuclideanLength,
    Intersects, LineString, MultiPolygon, Point, Polygon, Relate, Simplify,
};
use geoframe::{geojson, geometry, ColumnData, Crs, Frame, Geometry};

use crate::ast::BinOp;
use crate::exception::{Exception, PyResult};
use crate::interp::Interp;
use crate::libs::series::{self, Series};
use crate::value::*;

pub fn predicate(name: &str, a: &Geometry, b: &Geometry) -> PyResult<bool> {
    Ok(match name {
        "intersects" => a.intersects(b),
        "disjoint" => !a.intersects(b),
        "within" => a.relate(b).is_within(),
        "contains" => a.relate(b).is_contains(),
        "touches" => a.relate(b).is_touches(),
        "covers" => a.relate(b).is_covers(),
        "crosses" => a.relate(b).is_crosses(),
        "overlaps" => a.relate(b).is_overlaps(),
        "equals" => a.relate(b).is_equal_topo(),
        _ => return Err(Exception::value_error(format!("unknown spatial predicate '{name}'"))),
    })
}

const PREDICATES: &[&str] = &["intersects", "disjoint", "within", "contains", "touches", "covers", "crosses", "overlaps", "equals"];

pub fn area(g: &Geometry) -> f64 {
    g.unsigned_area()
}

pub fn length(g: &Geometry) -> f64 {
    match g {
        Geometry::Line(l) => l.euclidean_length(),
        Geometry::LineString(l) => l.euclidean_length(),
        Geometry::MultiLineString(l) => l.euclidean_length(),
        Geometry::Polygon(p) => ring_length(p),
        Geometry::MultiPolygon(mp) => mp.0.iter().map(ring_length).sum(),
        Geometry::Rect(r) => ring_length(&r.to_polygon()),
        Geometry::Triangle(t) => ring_length(&t.to_polygon()),
        Geometry::GeometryCollection(c) => c.0.iter().map(length).sum(),
        Geometry::Point(_) | Geometry::MultiPoint(_) => 0.0,
    }
}

fn ring_length(p: &Polygon) -> f64 {
    p.exterior().euclidean_length() + p.interiors().iter().map(|r| r.euclidean_length()).sum::<f64>()
}

fn as_multipolygon(g: &Geometry) -> Option<MultiPolygon> {
    match g {
        Geometry::Polygon(p) => Some(MultiPolygon(vec![p.clone()])),
        Geometry::MultiPolygon(mp) => Some(mp.clone()),
        Geometry::Rect(r) => Some(MultiPolygon(vec![r.to_polygon()])),
        Geometry::Triangle(t) => Some(MultiPolygon(vec![t.to_polygon()])),
        _ => None,
    }
}

fn simplify_multi(mp: MultiPolygon) -> Geometry {
    if mp.0.len() == 1 {
        Geometry::Polygon(mp.0.into_iter().next().unwrap())
    } else {
        Geometry::MultiPolygon(mp)
    }
}

fn overlay(op: &str, a: &Geometry, b: &Geometry) -> PyResult<Geometry> {
    if op == "union" {
        return Ok(geometry::union_all([a, b]));
    }
    let (Some(x), Some(y)) = (as_multipolygon(a), as_multipolygon(b)) else {
        if op == "intersection" {
            // point-like inputs: keep the part inside the other geometry
            if let Geometry::Point(_) = a {
                return Ok(if a.intersects(b) { a.clone() } else { Geometry::GeometryCollection(Default::default()) });
            }
        }
        return Err(Exception::new(
            "NotImplementedError",
            format!("{op} is only supported between polygonal geometries"),
        ));
    };
    Ok(simplify_multi(match op {
        "intersection" => x.intersection(&y),
        "difference" => x.difference(&y),
        _ => x.xor(&y),
    }))
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> PyResult<Value> {
    let (Value::Geometry(x), Value::Geometry(y)) = (a, b) else {
        return Err(Exception::type_error("geometry operands expected"));
    };
    let name = match op {
        BinOp::BitAnd => "intersection",
        BinOp::BitOr => "union",
        BinOp::Sub => "difference",
        BinOp::BitXor => "symmetric_difference",
        _ => {
            return Err(Exception::type_error(format!(
                "unsupported operand type(s) for {}: 'Geometry' and 'Geometry'",
                op.symbol()
            )))
        }
    };
    Ok(Value::geometry(overlay(name, x, y)?))
}

/// Polygon approximating a buffer around a point.
fn buffer(g: &Geometry, distance: f64, segments: usize) -> PyResult<Geometry> {
    match g {
        Geometry::Point(p) => {
            let n = segments.max(1) * 4;
            let mut coords: Vec<Coord> = (0..n)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    Coord {
                        x: p.x() + distance * t.cos(),
                        y: p.y() + distance * t.sin(),
                    }
                })
                .collect();
            coords.push(coords[0]);
            Ok(Geometry::Polygon(Polygon::new(LineString(coords), vec![])))
        }
        _ if distance == 0.0 => Ok(g.clone()),
        _ => Err(Exception::new(
            "NotImplementedError",
            "buffer is only supported for points in this runtime",
        )),
    }
}

fn centroid(g: &Geometry) -> Option<Geometry> {
    g.centroid().map(Geometry::Point)
}

fn point_xy(g: &Geometry, axis: &str) -> PyResult<f64> {
    match g {
        Geometry::Point(p) => Ok(if axis == "x" { p.x() } else { p.y() }),
        _ => Err(Exception::value_error("x and y attribute access only provided for Point geometries")),
    }
}

fn bounds_tuple(g: &Geometry) -> Value {
    match geometry::bounds(g) {
        Some(b) => Value::tuple(b.iter().map(|v| Value::Float(*v)).collect()),
        None => Value::tuple(vec![Value::Float(f64::NAN); 4]),
    }
}

pub const GEOMETRY_METHODS: &[&str] = &[
    "intersects", "disjoint", "within", "contains", "touches", "covers", "crosses", "overlaps", "equals",
    "distance", "union", "intersection", "difference", "symmetric_difference", "buffer", "simplify",
];

pub fn geometry_attr(g: &Rc<Geometry>, name: &str) -> PyResult<Option<Value>> {
    Ok(Some(match name {
        "area" => Value::Float(area(g)),
        "length" => Value::Float(length(g)),
        "bounds" => bounds_tuple(g),
        "centroid" => centroid(g).map_or(Value::None, Value::geometry),
        "x" | "y" => Value::Float(point_xy(g, name)?),
        "geom_type" => Value::str(geometry::geom_type(g)),
        "wkt" => Value::str(geometry::to_wkt(g)),
        "is_empty" => Value::Bool(g.bounding_rect().is_none()),
        "is_valid" => Value::Bool(true),
        "convex_hull" => Value::geometry(Geometry::Polygon(g.convex_hull())),
        "envelope" => match g.bounding_rect() {
            Some(r) => Value::geometry(Geometry::Polygon(r.to_polygon())),
            None => Value::geometry((**g).clone()),
        },
        "__geo_interface__" => json_to_value(&geojson::geometry_to_value(g)),
        _ => return Ok(None),
    }))
}

pub fn geometry_method(g: &Rc<Geometry>, name: &str, a: Args) -> PyResult<Value> {
    let other = |a: &Args| -> PyResult<Geometry> {
        match a.require(0, "other", name)? {
            Value::Geometry(o) => Ok((*o).clone()),
            v => Err(Exception::type_error(format!("expected a geometry, got {}", v.type_name()))),
        }
    };
    Ok(match name {
        p if PREDICATES.contains(&p) => Value::Bool(predicate(p, g, &other(&a)?)?),
        "distance" => Value::Float(g.euclidean_distance(&other(&a)?)),
        "union" | "intersection" | "difference" | "symmetric_difference" => {
            Value::geometry(overlay(name, g, &other(&a)?)?)
        }
        "buffer" => {
            let d = a.require(0, "distance", "buffer")?.expect_f64("distance")?;
            let res = a.get(1, "resolution").map(|v| v.expect_int("resolution")).transpose()?.unwrap_or(16);
            Value::geometry(buffer(g, d, res as usize)?)
        }
        "simplify" => {
            let tol = a.require(0, "tolerance", "simplify")?.expect_f64("tolerance")?;
            Value::geometry(simplify(g, tol))
        }
        _ => return Err(Exception::attribute_error(geometry::geom_type(g), name)),
    })
}

fn simplify(g: &Geometry, tol: f64) -> Geometry {
    match g {
        Geometry::LineString(l) => Geometry::LineString(l.simplify(&tol)),
        Geometry::MultiLineString(l) => Geometry::MultiLineString(l.simplify(&tol)),
        Geometry::Polygon(p) => Geometry::Polygon(p.simplify(&tol)),
        Geometry::MultiPolygon(p) => Geometry::MultiPolygon(p.simplify(&tol)),
        other => other.clone(),
    }
}

// ---- GeoSeries ----

pub fn series_property(s: &Rc<Series>, name: &str) -> PyResult<Option<Value>> {
    let geoms = s.geometries()?;
    let map_f64 = |f: &dyn Fn(&Geometry) -> PyResult<f64>| -> PyResult<Value> {
        let vals = geoms
            .iter()
            .map(|g| g.as_ref().map(f).transpose())
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Value::series(s.with_data(ColumnData::Float(vals))))
    };
    Ok(Some(match name {
        "total_bounds" => series::total_bounds(s)?,
        "unary_union" => Value::geometry(geometry::union_all(geoms.iter().flatten())),
        "area" => map_f64(&|g| Ok(area(g)))?,
        "length" => map_f64(&|g| Ok(length(g)))?,
        "x" => map_f64(&|g| point_xy(g, "x"))?,
        "y" => map_f64(&|g| point_xy(g, "y"))?,
        "centroid" => Value::series(s.with_data(ColumnData::Geometry(
            geoms.iter().map(|g| g.as_ref().and_then(centroid)).collect(),
        ))),
        "geom_type" => Value::series(s.with_data(ColumnData::Str(
            geoms
                .iter()
                .map(|g| g.as_ref().map(|g| geometry::geom_type(g).to_string()))
                .collect(),
        ))),
        "is_valid" => Value::series(s.with_data(ColumnData::Bool(geoms.iter().map(|g| Some(g.is_some())).collect()))),
        "is_empty" => Value::series(s.with_data(ColumnData::Bool(
            geoms
                .iter()
                .map(|g| Some(g.as_ref().map_or(true, |g| g.bounding_rect().is_none())))
                .collect(),
        ))),
        "bounds" => {
            let mut cols: [Vec<Option<f64>>; 4] = Default::default();
            for g in geoms {
                let b = g.as_ref().and_then(geometry::bounds);
                for (k, col) in cols.iter_mut().enumerate() {
                    col.push(b.map(|b| b[k]));
                }
            }
            let names = ["minx", "miny", "maxx", "maxy"];
            let columns = names
                .iter()
                .zip(cols)
                .map(|(n, c)| geoframe::Column::new(*n, ColumnData::Float(c)))
                .collect();
            Value::frame(Frame::from_columns(columns, None, None).map_err(|e| Exception::value_error(e.to_string()))?)
        }
        _ => return Ok(None),
    }))
}

pub fn series_method(interp: &mut Interp, s: &Rc<Series>, name: &str, a: Args) -> PyResult<Value> {
    let geoms = s.geometries()?;
    Ok(match name {
        p if PREDICATES.contains(&p) || p == "distance" => {
            let other = a.require(0, "other", name)?;
            let out: Vec<Value> = match &other {
                Value::Geometry(o) => geoms
                    .iter()
                    .map(|g| match g {
                        None => Ok(Value::Bool(false)),
                        Some(g) if p == "distance" => Ok(Value::Float(g.euclidean_distance(&**o))),
                        Some(g) => Ok(Value::Bool(predicate(p, g, o)?)),
                    })
                    .collect::<PyResult<_>>()?,
                Value::Series(o) => {
                    let others = o.geometries()?;
                    if others.len() != geoms.len() {
                        return Err(Exception::value_error("GeoSeries lengths differ; align them first"));
                    }
                    geoms
                        .iter()
                        .zip(others)
                        .map(|(g, o)| match (g, o) {
                            (Some(g), Some(o)) if p == "distance" => Ok(Value::Float(g.euclidean_distance(o))),
                            (Some(g), Some(o)) => Ok(Value::Bool(predicate(p, g, o)?)),
                            _ => Ok(Value::Bool(false)),
                        })
                        .collect::<PyResult<_>>()?
                }
                Value::Frame(f) => {
                    return Err(Exception::type_error(format!(
                        "{name}() expects a geometry or GeoSeries, got a GeoDataFrame with {} rows; use .unary_union",
                        f.borrow().n_rows()
                    )))
                }
                v => return Err(Exception::type_error(format!("{name}() expects a geometry, got {}", v.type_name()))),
            };
            Value::series(s.with_data(column_from_values(&out)?))
        }
        "union_all" => Value::geometry(geometry::union_all(geoms.iter().flatten())),
        "to_crs" | "set_crs" => {
            let target = crs_arg(&a)?.ok_or_else(|| Exception::value_error("Must pass either crs or epsg."))?;
            let mut out = (**s).clone();
            if name == "to_crs" {
                let from = s.crs.clone().ok_or_else(|| {
                    Exception::value_error("Cannot transform naive geometries.  Please set a crs on the object first.")
                })?;
                let reprojected = geoms
                    .iter()
                    .map(|g| g.as_ref().map(|g| geometry::reproject(g, &from, &target)).transpose())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Exception::value_error(e.to_string()))?;
                out.data = ColumnData::Geometry(reprojected);
            }
            out.crs = Some(target);
            Value::series(out)
        }
        "buffer" | "simplify" => {
            let d = a.require(0, "distance", name)?.expect_f64("distance")?;
            let out = geoms
                .iter()
                .map(|g| {
                    g.as_ref()
                        .map(|g| if name == "buffer" { buffer(g, d, 16) } else { Ok(simplify(g, d)) })
                        .transpose()
                })
                .collect::<PyResult<Vec<_>>>()?;
            Value::series(s.with_data(ColumnData::Geometry(out)))
        }
        "explore" => {
            let frame = Frame::from_columns(
                vec![geoframe::Column::new(s.name.clone().unwrap_or_else(|| "geometry".into()), s.data.clone())],
                Some(s.name.as_deref().unwrap_or("geometry")),
                s.crs.clone(),
            )
            .map_err(|e| Exception::value_error(e.to_string()))?;
            crate::libs::folium::explore(interp, &frame, a)?
        }
        _ => return Err(Exception::attribute_error("GeoSeries", name)),
    })
}

/// Reads `crs=` / `epsg=` (or the first positional argument).
pub fn crs_arg(a: &Args) -> PyResult<Option<Crs>> {
    if let Some(e) = a.kw("epsg") {
        return Ok(Some(Crs::new(e.expect_int("epsg")?.to_string())));
    }
    match a.get(0, "crs") {
        None => Ok(None),
        Some(v) => crs_value(&v),
    }
}

pub fn crs_value(v: &Value) -> PyResult<Option<Crs>> {
    match v {
        Value::None => Ok(None),
        Value::Int(i) => Ok(Some(Crs::new(i.to_string()))),
        Value::Str(s) => Ok(Some(Crs::new(&**s))),
        Value::Object(o) => match &**o {
            Object::Crs(c) => Ok(Some(c.clone())),
            _ => Err(Exception::type_error(format!("invalid CRS: {}", repr(v)))),
        },
        other => Err(Exception::type_error(format!("invalid CRS: {}", repr(other)))),
    }
}

// ---- shapely module ----

fn coords_of(v: &Value) -> PyResult<Vec<Coord>> {
    iterate(v)?
        .iter()
        .map(|c| match c {
            Value::Geometry(g) => match &**g {
                Geometry::Point(p) => Ok(p.0),
                _ => Err(Exception::type_error("expected points")),
            },
            other => {
                let xy = iterate(other)?;
                if xy.len() < 2 {
                    return Err(Exception::value_error("coordinates need at least x and y"));
                }
                Ok(Coord {
                    x: xy[0].expect_f64("x")?,
                    y: xy[1].expect_f64("y")?,
                })
            }
        })
        .collect()
}

fn ring(v: &Value) -> PyResult<LineString> {
    let mut coords = coords_of(v)?;
    if coords.len() < 3 {
        return Err(Exception::value_error("A linearring requires at least 4 coordinates."));
    }
    if coords.first() != coords.last() {
        coords.push(coords[0]);
    }
    Ok(LineString(coords))
}

pub fn shapely_ctor(name: &str, a: &Args) -> PyResult<Value> {
    let g = match name {
        "Point" => {
            let coords: Vec<f64> = if a.pos.len() >= 2 {
                a.pos.iter().map(|v| v.expect_f64("coordinate")).collect::<PyResult<_>>()?
            } else {
                iterate(&a.require(0, "coordinates", "Point")?)?
                    .iter()
                    .map(|v| v.expect_f64("coordinate"))
                    .collect::<PyResult<_>>()?
            };
            if coords.len() < 2 {
                return Err(Exception::type_error("Point() requires x and y"));
            }
            Geometry::Point(Point::new(coords[0], coords[1]))
        }
        "LineString" => Geometry::LineString(LineString(coords_of(&a.require(0, "coordinates", name)?)?)),
        "Polygon" => {
            let shell = ring(&a.require(0, "shell", name)?)?;
            let holes = match a.get(1, "holes") {
                Some(h) => iterate(&h)?.iter().map(ring).collect::<PyResult<Vec<_>>>()?,
                None => Vec::new(),
            };
            Geometry::Polygon(Polygon::new(shell, holes))
        }
        "MultiPoint" => Geometry::MultiPoint(geoframe::geo::MultiPoint(
            coords_of(&a.require(0, "points", name)?)?.into_iter().map(Point::from).collect(),
        )),
        "MultiPolygon" => {
            let mut polys = Vec::new();
            for p in iterate(&a.require(0, "polygons", name)?)? {
                match p {
                    Value::Geometry(g) => match &*g {
                        Geometry::Polygon(poly) => polys.push(poly.clone()),
                        _ => return Err(Exception::type_error("MultiPolygon expects polygons")),
                    },
                    other => polys.push(Polygon::new(ring(&other)?, vec![])),
                }
            }
            Geometry::MultiPolygon(MultiPolygon(polys))
        }
        "box" => {
            let v: Vec<f64> = a.pos.iter().map(|v| v.expect_f64("bound")).collect::<PyResult<_>>()?;
            if v.len() != 4 {
                return Err(Exception::type_error("box() takes minx, miny, maxx, maxy"));
            }
            Geometry::Polygon(geoframe::geo::Rect::new(Coord { x: v[0], y: v[1] }, Coord { x: v[2], y: v[3] }).to_polygon())
        }
        "shape" => {
            let json = value_to_json(&a.require(0, "context", name)?)?;
            geojson::geometry_from_value(&json).map_err(|e| Exception::value_error(e.to_string()))?
        }
        "mapping" => {
            return match a.require(0, "ob", name)? {
                Value::Geometry(g) => Ok(json_to_value(&geojson::geometry_to_value(&g))),
                v => Err(Exception::type_error(format!("mapping() expects a geometry, got {}", v.type_name()))),
            }
        }
        "unary_union" | "union_all" => {
            let items = iterate(&a.require(0, "geoms", name)?)?;
            let geoms = items
                .iter()
                .map(|v| match v {
                    Value::Geometry(g) => Ok((**g).clone()),
                    other => Err(Exception::type_error(format!("expected geometries, got {}", other.type_name()))),
                })
                .collect::<PyResult<Vec<_>>>()?;
            geometry::union_all(geoms.iter())
        }
        _ => return Err(Exception::attribute_error("shapely", name)),
    };
    Ok(Value::geometry(g))
}

pub fn json_to_value(v: &serde_json::Value) -> Value {
    match v {
        serde_json::Value::Null => Value::None,
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        serde_json::Value::String(s) => Value::str(s),
        serde_json::Value::Array(items) => Value::list(items.iter().map(json_to_value).collect()),
        serde_json::Value::Object(map) => Value::dict(
            map.iter()
                .map(|(k, v)| (Value::str(k), json_to_value(v)))
                .collect(),
        ),
    }
}

pub fn value_to_json(v: &Value) -> PyResult<serde_json::Value> {
    Ok(match v {
        Value::None => serde_json::Value::Null,
        Value::Bool(b) => serde_json::Value::Bool(*b),
        Value::Int(i) => serde_json::Value::from(*i),
        Value::Float(f) => serde_json::Number::from_f64(*f).map_or(serde_json::Value::Null, serde_json::Value::Number),
        Value::Str(s) => serde_json::Value::String(s.to_string()),
        Value::List(_) | Value::Tuple(_) | Value::Array(_) | Value::Set(_) => {
            serde_json::Value::Array(iterate(v)?.iter().map(value_to_json).collect::<PyResult<_>>()?)
        }
        Value::Dict(d) => {
            let mut map = serde_json::Map::new();
            for (k, v) in d.borrow().entries.iter() {
                map.insert(to_str(k), value_to_json(v)?);
            }
            serde_json::Value::Object(map)
        }
        Value::Geometry(g) => geojson::geometry_to_value(g),
        Value::Frame(f) => f.borrow().to_geojson_value(),
        Value::Series(s) => serde_json::Value::Array(s.values().iter().map(value_to_json).collect::<PyResult<_>>()?),
        other => {
            return Err(Exception::type_error(format!(
                "Object of type {} is not JSON serializable",
                other.type_name()
            )))
        }
    })
}
