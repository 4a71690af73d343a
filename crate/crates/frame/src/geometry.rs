//! Geometry helpers: WKT rendering, type names, bounds, unions and a
//! minimal CRS model.

use std::fmt;
use std::fmt::Write as _;

use geo::{BooleanOps, BoundingRect, Coord, LineString, MultiPolygon, Polygon};

use crate::{FrameError, Geometry};

/// Coordinate reference system identifier, e.g. `EPSG:4326`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Crs(String);

impl Crs {
    pub const WGS84: &'static str = "EPSG:4326";
    pub const WEB_MERCATOR: &'static str = "EPSG:3857";

    /// Normalizes `epsg:4326`, `4326` and `EPSG:4326` to the same identifier.
    pub fn new(id: impl AsRef<str>) -> Self {
        let raw = id.as_ref().trim();
        if raw.chars().all(|c| c.is_ascii_digit()) && !raw.is_empty() {
            return Crs(format!("EPSG:{raw}"));
        }
        match raw.split_once(':') {
            Some((authority, code)) => Crs(format!("{}:{}", authority.to_ascii_uppercase(), code)),
            None => Crs(raw.to_string()),
        }
    }

    pub fn wgs84() -> Self {
        Crs(Self::WGS84.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn epsg(&self) -> Option<u32> {
        self.0.strip_prefix("EPSG:")?.parse().ok()
    }

    pub fn is_geographic(&self) -> bool {
        self.epsg() == Some(4326)
    }
}

impl fmt::Display for Crs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

const EARTH_RADIUS: f64 = 6_378_137.0;

fn to_web_mercator(c: Coord) -> Coord {
    let x = EARTH_RADIUS * c.x.to_radians();
    let lat = c.y.clamp(-85.051_128_78, 85.051_128_78).to_radians();
    let y = EARTH_RADIUS * (std::f64::consts::FRAC_PI_4 + lat / 2.0).tan().ln();
    Coord { x, y }
}

fn from_web_mercator(c: Coord) -> Coord {
    let x = (c.x / EARTH_RADIUS).to_degrees();
    let y = (2.0 * (c.y / EARTH_RADIUS).exp().atan() - std::f64::consts::FRAC_PI_2).to_degrees();
    Coord { x, y }
}

/// Reprojects between WGS84 and Web Mercator. Identity when the CRS match.
pub fn reproject(geom: &Geometry, from: &Crs, to: &Crs) -> Result<Geometry, FrameError> {
    use geo::MapCoords;
    match (from.epsg(), to.epsg()) {
        (a, b) if a == b && a.is_some() => Ok(geom.clone()),
        (Some(4326), Some(3857)) => Ok(geom.map_coords(to_web_mercator)),
        (Some(3857), Some(4326)) => Ok(geom.map_coords(from_web_mercator)),
        _ if from == to => Ok(geom.clone()),
        _ => Err(FrameError::Crs {
            from: from.to_string(),
            to: to.to_string(),
        }),
    }
}

/// The OGC type name of a geometry (`Point`, `Polygon`, ...).
pub fn geom_type(g: &Geometry) -> &'static str {
    match g {
        Geometry::Point(_) => "Point",
        Geometry::Line(_) | Geometry::LineString(_) => "LineString",
        Geometry::Polygon(_) | Geometry::Rect(_) | Geometry::Triangle(_) => "Polygon",
        Geometry::MultiPoint(_) => "MultiPoint",
        Geometry::MultiLineString(_) => "MultiLineString",
        Geometry::MultiPolygon(_) => "MultiPolygon",
        Geometry::GeometryCollection(_) => "GeometryCollection",
    }
}

/// `[minx, miny, maxx, maxy]`, or `None` for empty geometries.
pub fn bounds(g: &Geometry) -> Option<[f64; 4]> {
    g.bounding_rect()
        .map(|r| [r.min().x, r.min().y, r.max().x, r.max().y])
}

/// Union of bounds over many geometries.
pub fn total_bounds<'a>(geoms: impl IntoIterator<Item = &'a Geometry>) -> Option<[f64; 4]> {
    geoms.into_iter().filter_map(bounds).reduce(|a, b| {
        [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])]
    })
}

/// Unary union: polygonal parts are dissolved, other parts are kept as-is
/// inside a collection.
pub fn union_all<'a>(geoms: impl IntoIterator<Item = &'a Geometry>) -> Geometry {
    let mut polygons: Option<MultiPolygon> = None;
    let mut others = Vec::new();
    for g in geoms {
        let part = match g {
            Geometry::Polygon(p) => MultiPolygon(vec![p.clone()]),
            Geometry::MultiPolygon(mp) => mp.clone(),
            Geometry::Rect(r) => MultiPolygon(vec![r.to_polygon()]),
            Geometry::Triangle(t) => MultiPolygon(vec![t.to_polygon()]),
            other => {
                others.push(other.clone());
                continue;
            }
        };
        polygons = Some(match polygons {
            None => part.union(&MultiPolygon::<f64>(vec![])),
            Some(acc) => acc.union(&part),
        });
    }
    match (polygons, others.is_empty()) {
        (Some(mp), true) if mp.0.len() == 1 => Geometry::Polygon(mp.0.into_iter().next().unwrap()),
        (Some(mp), true) => Geometry::MultiPolygon(mp),
        (None, _) if others.len() == 1 => others.pop().unwrap(),
        (polys, _) => {
            let mut parts: Vec<Geometry> = polys.map(Geometry::MultiPolygon).into_iter().collect();
            parts.extend(others);
            Geometry::GeometryCollection(geo::GeometryCollection(parts))
        }
    }
}

fn write_coord(out: &mut String, c: &Coord) {
    let _ = write!(out, "{} {}", c.x, c.y);
}

fn write_line(out: &mut String, ls: &LineString) {
    out.push('(');
    for (i, c) in ls.0.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_coord(out, c);
    }
    out.push(')');
}

fn write_polygon(out: &mut String, p: &Polygon) {
    out.push('(');
    write_line(out, p.exterior());
    for ring in p.interiors() {
        out.push_str(", ");
        write_line(out, ring);
    }
    out.push(')');
}

fn write_wkt(out: &mut String, g: &Geometry) {
    match g {
        Geometry::Point(p) => {
            out.push_str("POINT (");
            write_coord(out, &p.0);
            out.push(')');
        }
        Geometry::Line(l) => {
            out.push_str("LINESTRING ");
            write_line(out, &LineString(vec![l.start, l.end]));
        }
        Geometry::LineString(ls) => {
            out.push_str("LINESTRING ");
            write_line(out, ls);
        }
        Geometry::Polygon(p) => {
            out.push_str("POLYGON ");
            write_polygon(out, p);
        }
        Geometry::Rect(r) => write_wkt(out, &Geometry::Polygon(r.to_polygon())),
        Geometry::Triangle(t) => write_wkt(out, &Geometry::Polygon(t.to_polygon())),
        Geometry::MultiPoint(mp) => {
            out.push_str("MULTIPOINT (");
            for (i, p) in mp.0.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('(');
                write_coord(out, &p.0);
                out.push(')');
            }
            out.push(')');
        }
        Geometry::MultiLineString(mls) => {
            out.push_str("MULTILINESTRING (");
            for (i, ls) in mls.0.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_line(out, ls);
            }
            out.push(')');
        }
        Geometry::MultiPolygon(mp) => {
            out.push_str("MULTIPOLYGON (");
            for (i, p) in mp.0.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_polygon(out, p);
            }
            out.push(')');
        }
        Geometry::GeometryCollection(gc) => {
            out.push_str("GEOMETRYCOLLECTION (");
            for (i, g) in gc.0.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_wkt(out, g);
            }
            out.push(')');
        }
    }
}

/// Well-known text rendering with shortest round-trip coordinates.
pub fn to_wkt(g: &Geometry) -> String {
    let mut out = String::new();
    write_wkt(&mut out, g);
    out
}
