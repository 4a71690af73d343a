use std::rc::Rc;

use geoframe::{ColumnData, Frame, Scalar};
use minipy::{run, FileSink, MemorySink, Output, Policy, RunFailure, RunOutput};

const FLOODED: &str = r#"{"type":"FeatureCollection","crs":{"type":"name","properties":{"name":"EPSG:4326"}},"features":[
 {"type":"Feature","properties":{"name":"north"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]]]}},
 {"type":"Feature","properties":{"name":"east"},"geometry":{"type":"Polygon","coordinates":[[[10,10],[12,10],[12,12],[10,12],[10,10]]]}}
]}"#;

const FACILITIES: &str = r#"{"type":"FeatureCollection","features":[
 {"type":"Feature","properties":{"name":"A","amenity":"school","beds":null},"geometry":{"type":"Point","coordinates":[1,1]}},
 {"type":"Feature","properties":{"name":"B","amenity":"hospital","beds":120},"geometry":{"type":"Point","coordinates":[5,5]}},
 {"type":"Feature","properties":{"name":"C","amenity":"school","beds":null},"geometry":{"type":"Point","coordinates":[11,11]}},
 {"type":"Feature","properties":{"name":"D","amenity":"fire_station","beds":null},"geometry":{"type":"Point","coordinates":[20,1]}}
]}"#;

const ROADS: &str = r#"{"type":"FeatureCollection","features":[
 {"type":"Feature","properties":{"name":"Main St","highway":"primary"},"geometry":{"type":"LineString","coordinates":[[0,0],[3,4]]}},
 {"type":"Feature","properties":{"name":"Main St","highway":"primary"},"geometry":{"type":"LineString","coordinates":[[3,4],[6,8]]}},
 {"type":"Feature","properties":{"name":"Oak Ave","highway":"residential"},"geometry":{"type":"LineString","coordinates":[[20,20],[21,20]]}}
]}"#;

fn frame(text: &str) -> Frame {
    let mut f = Frame::from_geojson_str(text).unwrap();
    if f.crs().is_none() {
        f.set_crs(Some(geoframe::Crs::wgs84()));
    }
    f
}

fn tools() -> Policy {
    Policy::with_tools(["geopandas", "pandas", "matplotlib", "folium", "contextily", "shapely"])
}

fn exec_with(src: &str, inputs: &[Frame], sink: Rc<MemorySink>) -> Result<RunOutput, RunFailure> {
    run(src, "execute", inputs, tools(), sink)
}

fn ok(src: &str, inputs: &[Frame]) -> RunOutput {
    match exec_with(src, inputs, Rc::new(MemorySink::new())) {
        Ok(out) => out,
        Err(e) => panic!("{}\n{}", e.exception, e.exception.traceback()),
    }
}

#[test]
fn flooded_column_from_union_intersection() {
    let src = "import geopandas as gpd\n\ndef execute(df_1, df_2):\n    df_1['Flooded'] = df_1.intersects(df_2.unary_union)\n    return df_1\n";
    let facilities = frame(FACILITIES);
    let before = facilities.clone();
    let out = ok(src, &[facilities.clone(), frame(FLOODED)]);
    let result = out.value.as_frame().expect("frame");
    assert_eq!(out.value.kind(), "geopandas.GeoDataFrame");
    assert_eq!(
        result.column("Flooded").unwrap().data,
        ColumnData::Bool(vec![Some(true), Some(false), Some(true), Some(false)])
    );
    assert_eq!(facilities, before);
}

#[test]
fn sjoin_matches_point_in_polygon() {
    let src = r#"
import geopandas as gpd

def execute(df_1, df_2):
    joined = gpd.sjoin(df_1, df_2[["name", "geometry"]], how="inner", predicate="within")
    return sorted(joined["name_left"].tolist())
"#;
    let out = ok(src, &[frame(FACILITIES), frame(FLOODED)]);
    assert_eq!(out.value, Output::List(vec![Output::Str("A".into()), Output::Str("C".into())]));
}

#[test]
fn sjoin_rejects_mismatched_crs() {
    let src = r#"
import geopandas as gpd

def execute(df_1, df_2):
    return gpd.sjoin(df_1, df_2.to_crs(epsg=3857))
"#;
    let err = exec_with(src, &[frame(FACILITIES), frame(FLOODED)], Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "ValueError");
}

#[test]
fn bounds_and_unique_values() {
    let src = "def execute(df_1):\n    return list(df_1.total_bounds)\n";
    assert_eq!(
        ok(src, &[frame(FLOODED)]).value,
        Output::List(vec![Output::Float(0.0), Output::Float(0.0), Output::Float(12.0), Output::Float(12.0)])
    );
    let src = "def execute(df_1):\n    return df_1['amenity'].unique().tolist()\n";
    assert_eq!(
        ok(src, &[frame(FACILITIES)]).value,
        Output::List(vec![
            Output::Str("school".into()),
            Output::Str("hospital".into()),
            Output::Str("fire_station".into())
        ])
    );
}

#[test]
fn boolean_masks_and_column_math() {
    let src = r#"
def execute(df_1):
    schools = df_1[(df_1["amenity"] == "school") | (df_1["name"].str.startswith("B"))].copy()
    schools["label"] = schools["name"] + "-" + schools["amenity"].str.upper()
    schools["beds"] = schools["beds"].fillna(0) * 2
    return schools.drop(columns=["geometry"])
"#;
    let out = ok(src, &[frame(FACILITIES)]);
    let f = out.value.as_frame().unwrap();
    assert_eq!(out.value.kind(), "pandas.DataFrame");
    assert_eq!(f.n_rows(), 3);
    assert_eq!(f.get(1, "label"), Some(Scalar::Str("B-HOSPITAL".into())));
    assert_eq!(f.get(1, "beds").and_then(|s| s.as_f64()), Some(240.0));
    assert_eq!(f.get(0, "beds").and_then(|s| s.as_f64()), Some(0.0));
}

#[test]
fn groupby_and_value_counts() {
    let src = r#"
def execute(df_1):
    counts = df_1["amenity"].value_counts()
    sizes = df_1.groupby("amenity").size()
    return int(counts["school"]), int(sizes["hospital"]), len(df_1.groupby("amenity"))
"#;
    assert_eq!(
        ok(src, &[frame(FACILITIES)]).value,
        Output::Tuple(vec![Output::Int(2), Output::Int(1), Output::Int(3)])
    );
}

#[test]
fn reprojection_round_trips() {
    let src = r#"
def execute(df_1):
    web = df_1.to_crs(epsg=3857)
    back = web.to_crs("EPSG:4326")
    return web.crs.to_epsg(), [round(v, 6) for v in back.total_bounds]
"#;
    let out = ok(src, &[frame(FLOODED)]).value;
    assert_eq!(
        out,
        Output::Tuple(vec![
            Output::Int(3857),
            Output::List(vec![Output::Float(0.0), Output::Float(0.0), Output::Float(12.0), Output::Float(12.0)])
        ])
    );
}

#[test]
fn geojson_export_goes_to_the_sink() {
    let src = r#"
def execute(df_1):
    df_1[df_1["amenity"] == "school"].to_file("Out/schools.geojson", driver="GeoJSON")
"#;
    let sink = Rc::new(MemorySink::new());
    let out = exec_with(src, &[frame(FACILITIES)], sink.clone()).unwrap();
    assert_eq!(out.value, Output::None);
    assert_eq!(out.written, vec!["Out/schools.geojson".to_string()]);
    let text = String::from_utf8(sink.get("Out/schools.geojson").unwrap()).unwrap();
    let back = Frame::from_geojson_str(&text).unwrap();
    assert_eq!(back.n_rows(), 2);
}

#[test]
fn unsupported_drivers_and_escaping_paths_fail() {
    let gpkg = "def execute(df_1):\n    df_1.to_file('Out/x.gpkg')\n";
    let err = exec_with(gpkg, &[frame(FACILITIES)], Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "ValueError");
    assert!(err.exception.message.contains("GPKG"));
    let escape = "def execute(df_1):\n    df_1.to_file('../x.geojson')\n";
    let err = exec_with(escape, &[frame(FACILITIES)], Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "PermissionError");
    let abs = "def execute(df_1):\n    df_1.to_csv('/tmp/x.csv')\n";
    let err = exec_with(abs, &[frame(FACILITIES)], Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "PermissionError");
}

#[test]
fn plots_return_figures_with_layers() {
    let src = r#"
import matplotlib.pyplot as plt
import contextily as ctx

def execute(df_1, df_2):
    fig, ax = plt.subplots(figsize=(10, 10))
    df_2.plot(ax=ax, color="blue", alpha=0.4)
    df_1.plot(ax=ax, column="amenity", legend=True, markersize=30)
    ctx.add_basemap(ax, crs=df_1.crs.to_string())
    ax.set_title("Facilities")
    ax.set_axis_off()
    return fig
"#;
    let out = ok(src, &[frame(FACILITIES), frame(FLOODED)]);
    assert_eq!(out.value.kind(), "matplotlib.Figure");
    let Output::Figure(fig) = &out.value else { panic!() };
    assert_eq!(fig.axes.len(), 1);
    assert!(fig.axes[0].layers.len() >= 3);
    assert_eq!(fig.axes[0].props.get("title").and_then(|v| v.as_str()), Some("Facilities"));
}

#[test]
fn savefig_writes_svg() {
    let src = r#"
import matplotlib.pyplot as plt

def execute(df_1):
    ax = df_1.plot(column="name", legend=True, cmap="tab20")
    plt.savefig("roads.svg")
    return ax
"#;
    let sink = Rc::new(MemorySink::new());
    let out = exec_with(src, &[frame(ROADS)], sink.clone()).unwrap();
    assert_eq!(out.value.kind(), "matplotlib.Axes");
    let svg = String::from_utf8(sink.get("roads.svg").unwrap()).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn folium_map_with_styled_layers_and_save() {
    let src = r#"
import folium

def execute(df_1, df_2):
    m = folium.Map(location=[df_1.geometry.centroid.y.mean(), df_1.geometry.centroid.x.mean()], zoom_start=12)
    colors = {"Main St": "red", "Oak Ave": "green"}
    folium.GeoJson(
        df_1,
        name="roads",
        style_function=lambda f: {"color": colors.get(f["properties"]["name"], "gray")},
        tooltip=folium.GeoJsonTooltip(fields=["name"]),
    ).add_to(m)
    for _, row in df_2.iterrows():
        folium.Marker([row.geometry.y, row.geometry.x], popup=row["name"]).add_to(m)
    folium.LayerControl().add_to(m)
    m.save("map.html")
    return m
"#;
    let sink = Rc::new(MemorySink::new());
    let out = exec_with(src, &[frame(ROADS), frame(FACILITIES)], sink.clone()).unwrap();
    assert_eq!(out.value.kind(), "folium.Map");
    let Output::Map { spec, html, .. } = &out.value else { panic!() };
    let children = spec["children"].as_array().unwrap();
    assert_eq!(children.len(), 1 + 4 + 1);
    let styles = children[0]["options"]["style_function_result"].as_array().unwrap();
    assert_eq!(styles[0]["color"], "red");
    assert_eq!(styles[2]["color"], "green");
    assert_eq!(String::from_utf8(sink.get("map.html").unwrap()).unwrap(), *html);
}

#[test]
fn tooltip_fields_must_exist() {
    let src = r#"
import folium

def execute(df_1):
    m = folium.Map()
    folium.GeoJson(df_1, tooltip=folium.GeoJsonTooltip(fields=["nope"])).add_to(m)
    return m
"#;
    let err = exec_with(src, &[frame(ROADS)], Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "AssertionError");
}

#[test]
fn shapely_constructors_and_predicates() {
    let policy = Policy::with_tools(["shapely"]);
    let src = r#"
from shapely.geometry import Point, Polygon, box

def execute():
    p = Point(1, 1)
    poly = box(0, 0, 2, 2)
    tri = Polygon([(0, 0), (4, 0), (0, 4)])
    return poly.contains(p), round(tri.area, 3), p.buffer(1).intersects(Point(1.5, 1.5)), tri.bounds
"#;
    let out = run(src, "execute", &[], policy, Rc::new(MemorySink::new())).unwrap();
    assert_eq!(
        out.value,
        Output::Tuple(vec![
            Output::Bool(true),
            Output::Float(8.0),
            Output::Bool(true),
            Output::Tuple(vec![Output::Float(0.0), Output::Float(0.0), Output::Float(4.0), Output::Float(4.0)])
        ])
    );
}

#[test]
fn index_dependent_calls_are_reported() {
    let err = exec_with("def execute(df_1):\n    return df_1.set_index('name')\n", &[frame(ROADS)], Rc::new(MemorySink::new()))
        .unwrap_err();
    assert_eq!(err.exception.kind, "NotImplementedError");
}

#[test]
fn read_file_uses_sink_inputs() {
    let mut files = std::collections::BTreeMap::new();
    files.insert("data/roads.geojson".to_string(), ROADS.as_bytes().to_vec());
    let sink = Rc::new(MemorySink::with_inputs(files));
    let src = "import geopandas as gpd\n\ndef execute():\n    return len(gpd.read_file('data/roads.geojson'))\n";
    let out = run(src, "execute", &[], tools(), sink.clone()).unwrap();
    assert_eq!(out.value, Output::Int(3));
    assert!(sink.written().is_empty());
}
