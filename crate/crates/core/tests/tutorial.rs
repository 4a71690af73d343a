mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use smartframe::geoframe::{ColumnData, Frame};
use smartframe::metadata::row_line;
use smartframe::minipy::Output;

use common::*;

#[test]
#[ignore = "rewrites fixtures/tutorial.json"]
fn record_tutorial_fixtures() {
    let n = record_fixtures();
    println!("recorded {n} exchanges");
}

fn flooded_values(f: &Frame) -> Vec<bool> {
    let ColumnData::Bool(v) = &f.column("Flooded").expect("Flooded column").data else { panic!("not boolean") };
    v.iter().map(|b| b.expect("no nulls")).collect()
}

#[test]
fn replay_reproduces_the_walkthrough() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (engine, backend) = replay_engine(dir.path(), public2());
    let t = run_tutorial(&engine).unwrap();
    assert!(start.elapsed().as_secs() < 30);

    let expected_bounds = oracle::bounds("flooded_areas.geojson");
    let Output::List(b) = &t.bounds else { panic!("{:?}", t.bounds) };
    for (got, want) in b.iter().zip(expected_bounds) {
        let Output::Float(got) = got else { panic!() };
        assert_eq!(*got, (want * 1e4).round() / 1e4);
    }
    assert_eq!(
        t.amenities,
        Output::List(["school", "hospital", "fire_station"].iter().map(|s| Output::Str(s.to_string())).collect())
    );
    assert_eq!(flooded_values(t.flooded_facilities.frame()), oracle::points_in_areas("facilities.geojson", "flooded_areas.geojson"));

    assert!(matches!(&t.flooded_map, Output::Map { kind, .. } if kind == "Map"));
    let Output::Map { html, .. } = &t.roads_map else { panic!() };
    assert!(html.contains("overflow-y:auto"));
    assert!(matches!(t.facilities_figure, Output::Figure(_)));
    assert_eq!(t.highways.history().len(), 2);

    // the export recovered from the unsupported format on its second attempt
    let export = &t.flooded_facilities.history()[0];
    assert_eq!(export.attempts.len(), 2);
    assert!(export.attempts[0].error.as_deref().unwrap().contains("GPKG"));
    assert_eq!(t.export_written, vec!["Out/floodedSchools.geojson"]);
    let written = std::fs::read_to_string(dir.path().join("work/Out/floodedSchools.geojson")).unwrap();
    let out = Frame::from_geojson_str(&written).unwrap();
    let inside = oracle::points_in_areas("facilities.geojson", "flooded_areas.geojson").iter().filter(|b| **b).count();
    assert_eq!(out.n_rows(), inside);
    assert!(flooded_values(&out).iter().all(|b| *b));

    assert!(dir.path().join("work/map.html").exists());
    assert!(matches!(t.saved_map, Output::Map { .. }));
    assert!(t.inspect.starts_with("Prompt 1: Add a Flooded column"));
    assert!(t.inspect.contains("df_1['Flooded'] = df_1.intersects(df_2.unary_union)"));
    // type questions only where more than one return type was allowed
    assert_eq!(backend.calls().iter().filter(|c| c.request.messages[1].content.starts_with("Permitted")).count(), 7);
}

#[test]
fn network_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (engine, _) = replay_engine(dir.path(), public2());
    let n = run_network(&engine).unwrap();
    assert!(start.elapsed().as_secs() < 5);
    assert_eq!(n.stib.history().len(), 2);
    let Output::Figure(fig) = &n.figure else { panic!("{:?}", n.figure) };
    assert!(format!("{fig:?}").contains("Line 1"));
    let module = std::fs::read_to_string(dir.path().join("work/ai.py")).unwrap();
    assert!(module.contains("def plot_network(df_1):"));
    assert!(engine.console().iter().any(|l| l.contains("Manual injection procedure")));
}

/// Every row of `frame` past the excerpt must be absent from `text`.
fn leaked_rows(text: &str, frame: &Frame, excerpt: usize) -> Vec<usize> {
    (excerpt..frame.n_rows()).filter(|&i| text.contains(&row_line(frame, i))).collect()
}

#[test]
fn public_descriptor_sends_only_the_excerpt() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, backend) = replay_engine(dir.path(), public2());
    let t = run_tutorial(&engine).unwrap();
    let outbound = backend.outbound();
    assert!(outbound.len() > 20);
    let ids = oracle::column("facilities.geojson", "id");
    let contacts = oracle::column("facilities.geojson", "contact");
    let mut seen = BTreeSet::new();
    for text in &outbound {
        for f in [t.flooded.frame(), t.facilities.frame(), t.highways.frame(), t.flooded_facilities.frame()] {
            assert!(leaked_rows(text, f, 2).is_empty());
        }
        for (i, (id, contact)) in ids.iter().zip(&contacts).enumerate() {
            if text.contains(id.as_str()) || text.contains(contact.as_str()) {
                seen.insert(i);
            }
        }
    }
    assert_eq!(seen, BTreeSet::from([0, 1]));
}

#[test]
fn redacted_values_never_leave() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, backend) = replay_engine(dir.path(), redacting());
    run_tutorial(&engine).unwrap();
    let contacts = oracle::column("facilities.geojson", "contact");
    let outbound = backend.outbound();
    assert!(outbound.iter().any(|t| t.contains("col_1")));
    for text in &outbound {
        assert!(!text.contains("contact"));
        assert!(!contacts.iter().any(|c| text.contains(c.as_str())));
    }
}
