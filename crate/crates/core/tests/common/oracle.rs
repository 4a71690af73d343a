//! Reference computations straight from the GeoJSON text, without the
//! frame library.

use serde_json::Value;

fn features(name: &str) -> Vec<Value> {
    let path = super::crate_dir().join("data").join(name);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    doc["features"].as_array().unwrap().clone()
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn walk(v: &Value, out: &mut Vec<(f64, f64)>) {
    match v.as_array() {
        Some(items) if items.first().is_some_and(Value::is_number) => out.push(pair(v)),
        Some(items) => items.iter().for_each(|i| walk(i, out)),
        None => {}
    }
}

/// [minx, miny, maxx, maxy] over every coordinate of every feature.
pub fn bounds(name: &str) -> [f64; 4] {
    let mut pts = Vec::new();
    for f in features(name) {
        walk(&f["geometry"]["coordinates"], &mut pts);
    }
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for (x, y) in pts {
        b[0] = b[0].min(x);
        b[1] = b[1].min(y);
        b[2] = b[2].max(x);
        b[3] = b[3].max(y);
    }
    b
}

fn in_ring(p: (f64, f64), ring: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = ring.len() - 1;
    for i in 0..ring.len() {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn polygons(name: &str) -> Vec<Vec<Vec<(f64, f64)>>> {
    let mut out = Vec::new();
    for f in features(name) {
        let g = &f["geometry"];
        let polys: Vec<&Value> = match g["type"].as_str().unwrap() {
            "Polygon" => vec![&g["coordinates"]],
            "MultiPolygon" => g["coordinates"].as_array().unwrap().iter().collect(),
            other => panic!("unexpected {other}"),
        };
        for p in polys {
            out.push(p.as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(pair).collect()).collect());
        }
    }
    out
}

/// For each point feature of `points`, whether it lies inside any polygon
/// of `areas` (inside the shell and outside every hole).
pub fn points_in_areas(points: &str, areas: &str) -> Vec<bool> {
    let polys = polygons(areas);
    features(points)
        .iter()
        .map(|f| {
            let p = pair(&f["geometry"]["coordinates"]);
            polys.iter().any(|rings| in_ring(p, &rings[0]) && !rings[1..].iter().any(|h| in_ring(p, h)))
        })
        .collect()
}

/// Property values of one column, as text.
pub fn column(name: &str, col: &str) -> Vec<String> {
    features(name)
        .iter()
        .map(|f| match &f["properties"][col] {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect()
}
