mod common;

use smartframe::geoframe::Frame;
use smartframe::metadata::{derive_automated_metadata, merge_linked_metadata, row_line};
use smartframe::{Descriptor, FrameMetadata, PublicDescriptor, RedactingDescriptor};

use common::*;

fn geojson(features: &[(&str, &str)]) -> Frame {
    let fs: Vec<String> = features
        .iter()
        .map(|(geom, props)| format!(r#"{{"type": "Feature", "geometry": {geom}, "properties": {props}}}"#))
        .collect();
    Frame::from_geojson_str(&format!(r#"{{"type": "FeatureCollection", "features": [{}]}}"#, fs.join(","))).unwrap()
}

#[test]
fn bounds_match_brute_force() {
    let b = derive_automated_metadata(&load("flooded_areas.geojson")).spatial.bounds.unwrap();
    let expected = oracle::bounds("flooded_areas.geojson");
    for (got, want) in b.iter().zip(expected) {
        assert!((got - want).abs() < 5e-5, "{got} vs {want}");
    }
    let rounded: Vec<f64> = b.iter().map(|v| (v * 1e4).round() / 1e4).collect();
    assert_eq!(rounded, vec![-116.5164, 43.6623, -116.2989, 43.6948]);
}

#[test]
fn stats_match_a_direct_computation() {
    let m = derive_automated_metadata(&load("flooded_areas.geojson"));
    let depths: Vec<f64> = oracle::column("flooded_areas.geojson", "depth_m").iter().map(|s| s.parse().unwrap()).collect();
    let n = depths.len() as f64;
    let mean = depths.iter().sum::<f64>() / n;
    let var = depths.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let s = m.stats.iter().find(|s| s.column == "depth_m").unwrap();
    assert!((s.mean - mean).abs() <= mean.abs() * 1e-5);
    assert!((s.variance - var).abs() <= var.abs() * 1e-5);
    assert_eq!(s.count, 4);
    // only numeric columns get statistics
    assert_eq!(m.stats.len(), 1);
    assert_eq!(m.spatial.rows, 4);
    assert_eq!(m.spatial.crs.as_deref(), Some("EPSG:4326"));
}

#[test]
fn constant_column() {
    let f = geojson(&[
        (r#"{"type": "Point", "coordinates": [0, 0]}"#, r#"{"v": 7}"#),
        (r#"{"type": "Point", "coordinates": [1, 1]}"#, r#"{"v": 7}"#),
        (r#"{"type": "Point", "coordinates": [2, 2]}"#, r#"{"v": 7}"#),
    ]);
    let s = &derive_automated_metadata(&f).stats[0];
    assert_eq!((s.mean, s.variance, s.min, s.max), (7.0, 0.0, 7.0, 7.0));
}

#[test]
fn mixed_geometry_types() {
    let f = geojson(&[
        (r#"{"type": "Point", "coordinates": [0, 0]}"#, "{}"),
        (r#"{"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 0]]]}"#, "{}"),
        (r#"{"type": "Point", "coordinates": [3, 3]}"#, "{}"),
    ]);
    assert_eq!(derive_automated_metadata(&f).spatial.geometry_types, vec!["Point", "Polygon"]);
}

#[test]
fn empty_frame_has_no_bounds() {
    let m = derive_automated_metadata(&load("flooded_areas.geojson").head(0));
    assert!(m.spatial.bounds.is_none());
    assert!(m.stats.is_empty());
    assert_eq!(m.schema.len(), 3);
}

fn rows_in(text: &str, frame: &Frame) -> Vec<usize> {
    (0..frame.n_rows()).filter(|&i| text.contains(&row_line(frame, i))).collect()
}

#[test]
fn excerpt_size_bounds_the_rows() {
    let f = load("facilities.geojson");
    let meta = FrameMetadata::new(&f, FACILITIES_DESCRIPTION);
    let ids = oracle::column("facilities.geojson", "id");
    for n in [0, 2, 5] {
        let utd = PublicDescriptor::new(n).describe(&f, &meta);
        assert_eq!(rows_in(&utd, &f), (0..n).collect::<Vec<_>>());
        let seen: Vec<&String> = ids.iter().filter(|id| utd.contains(id.as_str())).collect();
        assert_eq!(seen.len(), n);
    }
}

#[test]
fn description_is_verbatim() {
    let f = load("flooded_areas.geojson");
    let d = "  Odd   spacing,\nnew lines and {{braces}} ";
    let meta = FrameMetadata::new(&f, d);
    assert_eq!(meta.description, d);
    assert!(PublicDescriptor::default().describe(&f, &meta).contains(d));
}

#[test]
fn linked_frames_show_no_rows() {
    let fac = load("facilities.geojson");
    let fl = load("flooded_areas.geojson");
    let base = FrameMetadata::new(&fl, FLOODED_DESCRIPTION);
    let merged = merge_linked_metadata(&base, &[FrameMetadata::new(&fac, FACILITIES_DESCRIPTION)]);
    assert_eq!(merge_linked_metadata(&base, &[]), base);
    assert_eq!(
        merged.canonical(),
        merge_linked_metadata(&base, &[FrameMetadata::new(&fac, FACILITIES_DESCRIPTION)]).canonical()
    );
    let utd = PublicDescriptor::new(100).describe(&fl, &merged);
    assert!(utd.contains("Frame df_1:") && utd.contains("Frame df_2:"));
    assert!(utd.contains(FACILITIES_DESCRIPTION));
    assert!(utd.contains("amenity"));
    assert!(rows_in(&utd, &fac).is_empty());
    assert!(!oracle::column("facilities.geojson", "id").iter().any(|id| utd.contains(id.as_str())));
    assert_eq!(rows_in(&utd, &fl).len(), 4);
}

#[test]
fn redaction_removes_name_and_values() {
    let f = load("facilities.geojson");
    let meta = FrameMetadata::new(&f, "Facilities with a contact number.");
    let d = RedactingDescriptor::new(PublicDescriptor::new(5), &[("contact", "col_1")]);
    let utd = d.describe(&f, &meta);
    assert!(!utd.contains("contact"));
    assert!(utd.contains("col_1"));
    for c in oracle::column("facilities.geojson", "contact") {
        assert!(!utd.contains(c.as_str()), "{c}");
    }
    // other columns are untouched
    assert!(utd.contains("F0001"));
}

#[test]
fn utd_is_deterministic() {
    let f = load("highways.geojson");
    let a = PublicDescriptor::default().describe(&f, &FrameMetadata::new(&f, HIGHWAYS_DESCRIPTION));
    let b = PublicDescriptor::default().describe(&f.clone(), &FrameMetadata::new(&f, HIGHWAYS_DESCRIPTION));
    assert_eq!(a, b);
    assert!(a.contains("CRS: EPSG:4326"));
}
