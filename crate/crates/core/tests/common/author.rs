//! Hand-written answers for the tutorial and the transit example. Used
//! only to record the replay fixtures.

use smartframe::backend::BackendRequest;
use smartframe::{BackendError, Role};

const BOUNDS: &str = r##"The total bounds of the frame give the extent of all flooded areas.

```python
import geopandas


def execute(df_1):
    minx, miny, maxx, maxy = df_1.total_bounds
    return [round(float(minx), 4), round(float(miny), 4), round(float(maxx), 4), round(float(maxy), 4)]
```"##;

const AMENITIES: &str = r##"```python
import pandas


def execute(df_1):
    return list(df_1["amenity"].unique())
```"##;

const PLOT_FLOODED: &str = r##"```python
import folium


def execute(df_1):
    minx, miny, maxx, maxy = df_1.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=12)
    folium.GeoJson(
        df_1,
        name="Flooded areas",
        style_function=lambda feature: {"color": "red", "fillColor": "red", "fillOpacity": 0.4},
        tooltip=folium.GeoJsonTooltip(fields=["zone", "depth_m"]),
    ).add_to(m)
    m.fit_bounds([[miny, minx], [maxy, maxx]])
    return m
```"##;

const PLOT_ROADS: &str = r##"```python
import folium


def execute(df_1):
    minx, miny, maxx, maxy = df_1.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=11)
    folium.GeoJson(df_1, name="Roads", style_function=lambda feature: {"color": "blue", "weight": 3}).add_to(m)
    return m
```"##;

const ROADS_LEGEND: &str = r##"Each road name gets its own colour and the legend lists them.

```python
import folium

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def execute(df_1):
    names = sorted(df_1["name"].unique())
    colors = {}
    for i, name in enumerate(names):
        colors[name] = PALETTE[i % len(PALETTE)]
    minx, miny, maxx, maxy = df_1.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=11)
    folium.GeoJson(
        df_1,
        name="Roads",
        style_function=lambda feature: {"color": colors[feature["properties"]["name"]], "weight": 4},
        tooltip=folium.GeoJsonTooltip(fields=["name"]),
    ).add_to(m)
    items = "".join(
        f'<div><span style="background:{colors[n]};width:12px;height:4px;display:inline-block"></span> {n}</div>'
        for n in names
    )
    legend = f'<div style="position:fixed;bottom:30px;left:30px;z-index:9999;background:white;padding:6px">{items}</div>'
    m.get_root().html.add_child(folium.Element(legend))
    return m
```"##;

const ROADS_SCROLL: &str = r##"The legend now has a fixed height and scrolls when the list is longer.

```python
import folium

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def execute(df_1):
    names = sorted(df_1["name"].unique())
    colors = {}
    for i, name in enumerate(names):
        colors[name] = PALETTE[i % len(PALETTE)]
    minx, miny, maxx, maxy = df_1.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=11)
    folium.GeoJson(
        df_1,
        name="Roads",
        style_function=lambda feature: {"color": colors[feature["properties"]["name"]], "weight": 4},
        tooltip=folium.GeoJsonTooltip(fields=["name"]),
    ).add_to(m)
    items = "".join(
        f'<div><span style="background:{colors[n]};width:12px;height:4px;display:inline-block"></span> {n}</div>'
        for n in names
    )
    legend = (
        '<div class="legend" style="position:fixed;bottom:30px;left:30px;z-index:9999;background:white;'
        f'padding:6px;max-height:120px;overflow-y:auto">{items}</div>'
    )
    m.get_root().html.add_child(folium.Element(legend))
    return m
```"##;

const PLOT_FACILITIES: &str = r##"```python
import matplotlib.pyplot as plt


def execute(df_1):
    fig, ax = plt.subplots(figsize=(8, 8))
    df_1.plot(ax=ax, column="amenity", categorical=True, legend=True, markersize=20)
    ax.set_title("Facilities by amenity")
    ax.set_axis_off()
    return fig
```"##;

const FLOODED_COLUMN: &str = r##"```python
import geopandas
import geopandas as gpd

def execute(df_1, df_2) -> GeoDataFrame:
    """Add a Flooded column to the facilities.

    :param df_1: GeoDataFrame containing facilities.
    :type df_1: geopandas.GeoDataFrame
    :param df_2: GeoDataFrame containing flooded areas.
    :type df_2: geopandas.GeoDataFrame
    :return: GeoDataFrame with a new 'Flooded' column.
    :rtype: geopandas.geodataframe.GeoDataFrame
    """
    df_1['Flooded'] = df_1.intersects(df_2.unary_union)
    return df_1
```"##;

const EXPORT_GPKG: &str = r##"```python
import geopandas


def execute(df_1):
    flooded = df_1[df_1["Flooded"]]
    flooded.to_file("Out/floodedSchools.gpkg", driver="GPKG")
```"##;

const EXPORT_GEOJSON: &str = r##"GeoPackage output is not available here, so the flooded facilities are written as GeoJSON instead.

```python
import geopandas


def execute(df_1):
    flooded = df_1[df_1["Flooded"]]
    flooded.to_file("Out/floodedSchools.geojson", driver="GeoJSON")
```"##;

const JOINT_MAP: &str = r##"```python
import folium


def execute(df_1, df_2, df_3):
    schools = df_3[df_3["amenity"] == "school"]
    minx, miny, maxx, maxy = df_2.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=11)
    folium.GeoJson(
        df_2,
        name="Flooded areas",
        style_function=lambda feature: {"color": "red", "fillColor": "red", "fillOpacity": 0.4},
    ).add_to(m)
    folium.GeoJson(df_1, name="Highways", style_function=lambda feature: {"color": "blue", "weight": 3}).add_to(m)
    for point, name in zip(schools.geometry, schools["name"]):
        folium.CircleMarker(location=[point.y, point.x], radius=5, color="green", fill=True, popup=name).add_to(m)
    folium.LayerControl().add_to(m)
    return m
```"##;

const JOINT_MAP_SAVED: &str = r##"```python
import folium


def execute(df_1, df_2, df_3):
    schools = df_3[df_3["amenity"] == "school"]
    minx, miny, maxx, maxy = df_2.total_bounds
    m = folium.Map(location=[(miny + maxy) / 2, (minx + maxx) / 2], zoom_start=11)
    folium.GeoJson(
        df_2,
        name="Flooded areas",
        style_function=lambda feature: {"color": "red", "fillColor": "red", "fillOpacity": 0.4},
    ).add_to(m)
    folium.GeoJson(df_1, name="Highways", style_function=lambda feature: {"color": "blue", "weight": 3}).add_to(m)
    for point, name in zip(schools.geometry, schools["name"]):
        folium.CircleMarker(location=[point.y, point.x], radius=5, color="green", fill=True, popup=name).add_to(m)
    folium.LayerControl().add_to(m)
    m.save("map.html")
    return m
```"##;

const NETWORK: &str = r##"```python
import matplotlib.pyplot as plt


def execute(df_1):
    fig, ax = plt.subplots(figsize=(10, 10))
    df_1.plot(ax=ax, linewidth=2)
    ax.set_title("Public transport network")
    ax.set_axis_off()
    return fig
```"##;

const NETWORK_LEGEND: &str = r##"```python
import matplotlib.pyplot as plt


def execute(df_1):
    fig, ax = plt.subplots(figsize=(10, 10))
    for route, color in zip(df_1["route_short_name"], df_1["route_color"]):
        part = df_1[df_1["route_short_name"] == route]
        part.plot(ax=ax, color=color, linewidth=2, label=f"Line {route}")
    ax.legend(title="Line", loc="upper right")
    ax.set_title("Public transport network")
    ax.set_axis_off()
    return fig
```"##;

/// (query, type answer, code answer, code answer after a failed attempt)
const SCRIPT: &[(&str, &str, &str, Option<&str>)] = &[
    ("What are the the bounds of the flooded areas.", "TYPE: list", BOUNDS, None),
    ("Find unique amenities.", "TYPE: list", AMENITIES, None),
    ("Plot the flooded areas.", "TYPE: folium.Map", PLOT_FLOODED, None),
    ("Plot the roads.", "TYPE: folium.Map", PLOT_ROADS, None),
    ("Add a legend. Roads with the same name should have the same color.", "TYPE: folium.Map", ROADS_LEGEND, None),
    ("Improve the legend, it does not fit in its box. Make it scrollable.", "TYPE: folium.Map", ROADS_SCROLL, None),
    ("Plot the facilities.", "TYPE: matplotlib.Figure", PLOT_FACILITIES, None),
    (
        "Add a Flooded column to the facilities based on whether they are in the flooded areas",
        "TYPE: geopandas.GeoDataFrame",
        FLOODED_COLUMN,
        None,
    ),
    (
        "Export to the Out/floodedSchools.gpkg. Keep only the facilities flooded.",
        "TYPE: None",
        EXPORT_GPKG,
        Some(EXPORT_GEOJSON),
    ),
    ("Plot the highways the schools, and flooded areas.", "TYPE: folium.Map", JOINT_MAP, None),
    ("Save in map.html file", "TYPE: folium.Map", JOINT_MAP_SAVED, None),
    ("Plot the netword", "TYPE: matplotlib.Figure", NETWORK, None),
    ("add a legend", "TYPE: matplotlib.Figure", NETWORK_LEGEND, None),
];

fn entry(query: &str) -> Result<&'static (&'static str, &'static str, &'static str, Option<&'static str>), BackendError> {
    SCRIPT
        .iter()
        .find(|(q, ..)| *q == query)
        .ok_or_else(|| BackendError::Config(format!("no scripted answer for {query:?}")))
}

fn request_line(text: &str) -> Option<&str> {
    text.lines().rev().find_map(|l| l.strip_prefix("Request: "))
}

/// Newest query of a type question. Improve steps send every query so far,
/// one per line, oldest first.
fn type_query(text: &str) -> Option<&str> {
    let (_, rest) = text.split_once("Request: ")?;
    let (queries, _) = rest.split_once("\n\nAnswer with")?;
    queries.lines().last()
}

/// Answers type questions, first attempts and retries by looking up the
/// request text.
pub fn answer(req: &BackendRequest) -> Result<String, BackendError> {
    let missing = || BackendError::Config("unrecognised request".into());
    let first_user = req.messages.iter().find(|m| m.role == Role::User).ok_or_else(missing)?;
    if first_user.content.starts_with("Permitted return types:") {
        let query = type_query(&first_user.content).ok_or_else(missing)?;
        return entry(query).map(|e| e.1.to_string());
    }
    let query = request_line(&first_user.content).ok_or_else(missing)?;
    let (_, _, code, retry) = entry(query)?;
    let retrying = req.messages.last().is_some_and(|m| m.content.starts_with("The previous code failed"));
    Ok(match (retrying, retry) {
        (true, Some(fixed)) => fixed.to_string(),
        _ => code.to_string(),
    })
}
