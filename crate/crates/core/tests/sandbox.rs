mod common;

use std::collections::BTreeSet;

use smartframe::geoframe::{ColumnData, Frame};
use smartframe::metadata::{derive_automated_metadata, SyntheticGenerator};
use smartframe::minipy::Output;
use smartframe::sandbox::{make_validation_frames, RunKind, Sandbox, SandboxStats, ValidationMode};
use smartframe::state::default_toolset;
use smartframe::{PublicDescriptor, SandboxError};

use common::*;

const FLOODED_CODE: &str = "import geopandas\n\ndef execute(df_1, df_2):\n    df_1['Flooded'] = df_1.intersects(df_2.unary_union)\n    return df_1\n";

fn tools(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn run(code: &str, frames: &[Frame], kind: &str, toolset: &BTreeSet<String>) -> Result<Output, SandboxError> {
    let dir = tempfile::tempdir().unwrap();
    let stats = SandboxStats::default();
    Sandbox::new(dir.path(), &stats).run(code, frames, kind, toolset, RunKind::Real).map(|o| o.value)
}

#[test]
fn flooded_column_matches_point_in_polygon() {
    let facilities = load("facilities.geojson");
    let out = run(FLOODED_CODE, &[facilities.clone(), load("flooded_areas.geojson")], "geopandas.GeoDataFrame", &default_toolset()).unwrap();
    let Output::Frame(f) = out else { panic!("not a frame") };
    let ColumnData::Bool(values) = &f.column("Flooded").unwrap().data else { panic!("not boolean") };
    let got: Vec<bool> = values.iter().map(|v| v.unwrap()).collect();
    let expected = oracle::points_in_areas("facilities.geojson", "flooded_areas.geojson");
    assert_eq!(got, expected);
    assert!(got.iter().filter(|b| **b).count() >= 30);
    // the caller's frame is untouched
    assert!(facilities.column("Flooded").is_none());
}

#[test]
fn wrong_kind_is_a_type_error() {
    let code = "def execute(df_1):\n    return 'three'\n";
    let err = run(code, &[load("flooded_areas.geojson")], "int", &default_toolset()).unwrap_err();
    assert_eq!(err, SandboxError::TypeMismatch { expected: "int".into(), observed: "str".into() });
}

#[test]
fn none_kind_accepts_no_result() {
    let code = "def execute(df_1):\n    x = len(df_1)\n";
    assert_eq!(run(code, &[load("flooded_areas.geojson")], "None", &default_toolset()).unwrap(), Output::None);
}

#[test]
fn imports_outside_the_toolset_are_refused() {
    let code = "import folium\n\ndef execute(df_1):\n    return 1\n";
    let err = run(code, &[load("flooded_areas.geojson")], "int", &tools(&["pandas"])).unwrap_err();
    assert!(matches!(err, SandboxError::Isolation(_)), "{err:?}");
    // the standard library stays available
    let code = "import math\n\ndef execute(df_1):\n    return math.floor(2.5)\n";
    assert_eq!(run(code, &[load("flooded_areas.geojson")], "int", &tools(&[])).unwrap(), Output::Int(2));
    for code in ["import os\n\ndef execute(df_1):\n    return 1\n", "import subprocess\n\ndef execute(df_1):\n    return 1\n"] {
        assert!(matches!(run(code, &[load("flooded_areas.geojson")], "int", &default_toolset()), Err(SandboxError::Isolation(_))));
    }
}

#[test]
fn absolute_paths_are_refused() {
    let code = "def execute(df_1):\n    df_1.to_file('/tmp/escape.geojson', driver='GeoJSON')\n";
    assert!(run(code, &[load("flooded_areas.geojson")], "None", &default_toolset()).is_err());
    let code = "def execute(df_1):\n    df_1.to_file('../escape.geojson', driver='GeoJSON')\n";
    assert!(run(code, &[load("flooded_areas.geojson")], "None", &default_toolset()).is_err());
}

#[test]
fn exceptions_carry_a_traceback() {
    let code = "def execute(df_1):\n    return df_1['missing']\n";
    let dir = tempfile::tempdir().unwrap();
    let stats = SandboxStats::default();
    let err = Sandbox::new(dir.path(), &stats)
        .run(code, &[load("flooded_areas.geojson")], "int", &default_toolset(), RunKind::Validation)
        .unwrap_err();
    let SandboxError::Execution { kind, traceback } = err else { panic!() };
    assert_eq!(kind, "KeyError");
    assert!(traceback.contains("line 2"));
    assert_eq!(stats.last_traceback(), Some(traceback));
    assert_eq!((stats.validation_runs(), stats.real_runs()), (1, 0));
}

#[test]
fn runs_share_no_globals() {
    let code = "counter = []\n\ndef execute(df_1):\n    counter.append(1)\n    return len(counter)\n";
    let dir = tempfile::tempdir().unwrap();
    let stats = SandboxStats::default();
    let sb = Sandbox::new(dir.path(), &stats);
    let frames = [load("flooded_areas.geojson")];
    for _ in 0..3 {
        let out = sb.run(code, &frames, "int", &default_toolset(), RunKind::Real).unwrap();
        assert_eq!(out.value, Output::Int(1));
    }
    let leak = "def execute(df_1):\n    return counter\n";
    assert!(sb.run(leak, &frames, "list", &default_toolset(), RunKind::Real).is_err());
}

#[test]
fn validation_writes_stay_in_memory() {
    let code = "def execute(df_1):\n    df_1.to_file('out.geojson', driver='GeoJSON')\n";
    let dir = tempfile::tempdir().unwrap();
    let stats = SandboxStats::default();
    let sb = Sandbox::new(dir.path(), &stats);
    let frames = [load("flooded_areas.geojson")];
    let out = sb.run(code, &frames, "None", &default_toolset(), RunKind::Validation).unwrap();
    assert_eq!(out.written, vec!["out.geojson"]);
    assert!(!dir.path().join("out.geojson").exists());
    sb.run(code, &frames, "None", &default_toolset(), RunKind::Real).unwrap();
    assert!(dir.path().join("out.geojson").exists());
}

#[test]
fn excerpt_frames() {
    let facilities = load("facilities.geojson");
    let v = make_validation_frames(&[&facilities], &PublicDescriptor::new(5), ValidationMode::Excerpt).unwrap();
    assert_eq!(v.frames[0].n_rows(), 5);
    assert_eq!(v.frames[0], facilities.head(5));

    let small = facilities.head(3);
    let v = make_validation_frames(&[&small], &PublicDescriptor::new(5), ValidationMode::Excerpt).unwrap();
    assert_eq!(v.frames[0].n_rows(), 3);

    let v = make_validation_frames(&[&facilities], &PublicDescriptor::new(0), ValidationMode::Excerpt).unwrap();
    assert_eq!(v.frames[0].n_rows(), 1);

    let empty = facilities.head(0);
    let v = make_validation_frames(&[&empty], &PublicDescriptor::new(5), ValidationMode::Excerpt).unwrap();
    assert_eq!(v.frames[0].n_rows(), 0);
    assert!(v.frames[0].schema_eq(&facilities));
}

fn dtypes(f: &Frame) -> Vec<(String, String)> {
    derive_automated_metadata(f).schema.iter().map(|c| (c.name.clone(), c.dtype.clone())).collect()
}

#[test]
fn synthetic_frames_keep_the_schema() {
    let facilities = load("facilities.geojson");
    let descriptor = PublicDescriptor::new(5).with_synthetic(SyntheticGenerator::new(10, 7));
    let v = make_validation_frames(&[&facilities], &descriptor, ValidationMode::Synthetic).unwrap();
    let synth = &v.frames[0];
    assert_eq!(synth.n_rows(), 10);
    assert_eq!(dtypes(synth), dtypes(&facilities));
    assert_eq!(synth.crs(), facilities.crs());
    // no real values are copied
    let real = oracle::column("facilities.geojson", "contact");
    for i in 0..synth.n_rows() {
        let row = smartframe::metadata::row_line(synth, i);
        assert!(!real.iter().any(|c| row.contains(c.as_str())));
    }
    let err = make_validation_frames(&[&facilities], &PublicDescriptor::new(5), ValidationMode::Synthetic).unwrap_err();
    assert!(matches!(err, SandboxError::Config(_)));
}
