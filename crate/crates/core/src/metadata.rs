//! Automated frame metadata and the descriptors that turn it, plus an
//! optional row excerpt, into the text sent to the model.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use geoframe::geo::{Coord, Geometry, LineString, MultiPolygon, Point, Rect};
use geoframe::{format_float, Column, ColumnData, DType, Frame, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSchema {
    pub name: String,
    pub dtype: String,
    pub nullable: bool,
}

/// Summary of a numeric column over its non-null values. Values are
/// rounded to 6 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub column: String,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialProperties {
    pub crs: Option<String>,
    pub geometry_column: Option<String>,
    pub geometry_types: Vec<String>,
    pub bounds: Option<[f64; 4]>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomatedMetadata {
    pub schema: Vec<ColumnSchema>,
    pub stats: Vec<ColumnStats>,
    pub spatial: SpatialProperties,
}

/// Automated metadata and description of a frame linked into a
/// conversation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkedSummary {
    pub automated: AutomatedMetadata,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameMetadata {
    pub automated: AutomatedMetadata,
    pub description: String,
    pub linked: Vec<LinkedSummary>,
}

impl FrameMetadata {
    pub fn new(frame: &Frame, description: impl Into<String>) -> Self {
        FrameMetadata {
            automated: derive_automated_metadata(frame),
            description: description.into(),
            linked: Vec::new(),
        }
    }

    /// Canonical JSON used for digests.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("metadata serializes")
    }

    pub fn summary(&self) -> LinkedSummary {
        LinkedSummary {
            automated: self.automated.clone(),
            description: self.description.clone(),
        }
    }
}

pub(crate) fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn derive_automated_metadata(frame: &Frame) -> AutomatedMetadata {
    let schema = frame
        .columns()
        .iter()
        .map(|c| ColumnSchema {
            name: c.name.clone(),
            dtype: c.dtype().name().to_string(),
            nullable: c.data.null_count() > 0,
        })
        .collect();
    let stats = frame
        .columns()
        .iter()
        .filter(|c| c.dtype().is_numeric())
        .filter_map(|c| {
            let values = c.data.numeric_values()?;
            if values.is_empty() {
                return None;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Some(ColumnStats {
                column: c.name.clone(),
                count: values.len(),
                mean: sig6(mean),
                variance: sig6(variance),
                min: sig6(values.iter().copied().fold(f64::INFINITY, f64::min)),
                max: sig6(values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            })
        })
        .collect();
    let spatial = SpatialProperties {
        crs: frame.crs().map(|c| c.as_str().to_string()),
        geometry_column: frame.geometry_name().map(str::to_string),
        geometry_types: frame.geometry_types().into_iter().collect(),
        bounds: frame.total_bounds().filter(|b| b.iter().all(|v| v.is_finite())),
        rows: frame.n_rows(),
    };
    AutomatedMetadata { schema, stats, spatial }
}

/// Attaches linked-frame summaries, in the given order, to `base`.
pub fn merge_linked_metadata(base: &FrameMetadata, linked: &[FrameMetadata]) -> FrameMetadata {
    FrameMetadata {
        automated: base.automated.clone(),
        description: base.description.clone(),
        linked: linked.iter().map(FrameMetadata::summary).collect(),
    }
}

/// Positional frame label, matching the generated function's parameters.
pub fn frame_label(position: usize) -> String {
    format!("df_{}", position + 1)
}

/// One row as it appears in an excerpt.
pub fn row_line(frame: &Frame, row: usize) -> String {
    frame.row(row).iter().map(cell).collect::<Vec<_>>().join(" | ")
}

fn cell(s: &Scalar) -> String {
    match s {
        Scalar::Str(v) => format!("{v:?}"),
        other => other.to_string(),
    }
}

fn write_automated(out: &mut String, meta: &AutomatedMetadata) {
    let kind = if meta.spatial.geometry_column.is_some() { "GeoDataFrame" } else { "DataFrame" };
    let _ = writeln!(out, "{kind} with {} rows and {} columns.", meta.spatial.rows, meta.schema.len());
    let _ = writeln!(out, "Columns:");
    for c in &meta.schema {
        let null = if c.nullable { ", nullable" } else { "" };
        let _ = writeln!(out, "  - {} ({}{null})", c.name, c.dtype);
    }
    if !meta.stats.is_empty() {
        let _ = writeln!(out, "Numeric summaries:");
        for s in &meta.stats {
            let _ = writeln!(
                out,
                "  - {}: mean {}, variance {}, min {}, max {}",
                s.column,
                format_float(s.mean),
                format_float(s.variance),
                format_float(s.min),
                format_float(s.max)
            );
        }
    }
    let sp = &meta.spatial;
    if let Some(g) = &sp.geometry_column {
        let types = if sp.geometry_types.is_empty() { "none".to_string() } else { sp.geometry_types.join(", ") };
        let _ = writeln!(out, "Geometry column '{g}', geometry types: {types}.");
        let _ = writeln!(out, "CRS: {}.", sp.crs.as_deref().unwrap_or("not set"));
        if let Some(b) = sp.bounds {
            let b: Vec<String> = b.iter().map(|v| format_float(sig6(*v))).collect();
            let _ = writeln!(out, "Bounds [minx, miny, maxx, maxy]: [{}].", b.join(", "));
        }
    }
}

fn describe_frames(frame: &Frame, metadata: &FrameMetadata, excerpt: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Frame {}:", frame_label(0));
    let d = metadata.description.trim();
    if !d.is_empty() {
        let _ = writeln!(out, "Description: {}", metadata.description);
    }
    write_automated(&mut out, &metadata.automated);
    let n = excerpt.min(frame.n_rows());
    if n > 0 {
        let _ = writeln!(out, "First {n} of {} rows:", frame.n_rows());
        let _ = writeln!(out, "  {}", frame.column_names().join(" | "));
        for i in 0..n {
            let _ = writeln!(out, "  {}", row_line(frame, i));
        }
    }
    for (i, linked) in metadata.linked.iter().enumerate() {
        let _ = writeln!(out, "\nFrame {}:", frame_label(i + 1));
        if !linked.description.trim().is_empty() {
            let _ = writeln!(out, "Description: {}", linked.description);
        }
        write_automated(&mut out, &linked.automated);
    }
    out.trim_end().to_string()
}

/// Decides what frame-derived text may leave the process.
pub trait Descriptor: Send + Sync {
    /// Text describing `frame` and its metadata. Must be a pure function
    /// of its inputs.
    fn describe(&self, frame: &Frame, metadata: &FrameMetadata) -> String;

    /// Rows taken from the head of each frame for validation runs.
    fn excerpt_size(&self) -> usize {
        PublicDescriptor::DEFAULT_EXCERPT
    }

    /// A stand-in frame with the same schema, when supported.
    fn synthesize(&self, _frame: &Frame) -> Option<Frame> {
        None
    }
}

/// Builds the unified description for `frame`.
pub fn build_utd(descriptor: &dyn Descriptor, frame: &Frame, metadata: &FrameMetadata) -> String {
    descriptor.describe(frame, metadata)
}

/// Schema, statistics, spatial properties, linked summaries and the first
/// `excerpt` rows of the primary frame.
#[derive(Debug, Clone)]
pub struct PublicDescriptor {
    pub excerpt: usize,
    pub synthetic: Option<SyntheticGenerator>,
}

impl PublicDescriptor {
    pub const DEFAULT_EXCERPT: usize = 5;

    pub fn new(excerpt: usize) -> Self {
        PublicDescriptor { excerpt, synthetic: None }
    }

    pub fn with_synthetic(mut self, generator: SyntheticGenerator) -> Self {
        self.synthetic = Some(generator);
        self
    }
}

impl Default for PublicDescriptor {
    fn default() -> Self {
        Self::new(Self::DEFAULT_EXCERPT)
    }
}

impl Descriptor for PublicDescriptor {
    fn describe(&self, frame: &Frame, metadata: &FrameMetadata) -> String {
        describe_frames(frame, metadata, self.excerpt)
    }

    fn excerpt_size(&self) -> usize {
        self.excerpt
    }

    fn synthesize(&self, frame: &Frame) -> Option<Frame> {
        self.synthetic.as_ref().map(|g| g.generate(frame))
    }
}

/// Renames sensitive columns, masks their excerpt values and drops their
/// statistics. Any remaining whole-word occurrence of a redacted name is
/// replaced by its alias.
#[derive(Debug, Clone)]
pub struct RedactingDescriptor {
    pub inner: PublicDescriptor,
    pub columns: Vec<(String, String)>,
}

impl RedactingDescriptor {
    pub const MASK: &'static str = "<redacted>";

    pub fn new(inner: PublicDescriptor, columns: &[(&str, &str)]) -> Self {
        RedactingDescriptor {
            inner,
            columns: columns.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    fn alias(&self, name: &str) -> Option<&str> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, a)| a.as_str())
    }

    fn redact_meta(&self, meta: &AutomatedMetadata) -> AutomatedMetadata {
        let mut m = meta.clone();
        m.stats.retain(|s| self.alias(&s.column).is_none());
        for c in &mut m.schema {
            if let Some(a) = self.alias(&c.name) {
                c.name = a.to_string();
            }
        }
        if let Some(g) = &m.spatial.geometry_column {
            if let Some(a) = self.alias(g) {
                m.spatial.geometry_column = Some(a.to_string());
            }
        }
        m
    }
}

impl Descriptor for RedactingDescriptor {
    fn describe(&self, frame: &Frame, metadata: &FrameMetadata) -> String {
        let mut masked = frame.clone();
        for (name, _) in &self.columns {
            if let Some(col) = frame.column(name) {
                if col.dtype() != DType::Geometry {
                    let data = ColumnData::Str(vec![Some(Self::MASK.to_string()); col.len()]);
                    let _ = masked.set_column(name, data);
                }
            }
        }
        let masked = masked.rename(&self.columns);
        let meta = FrameMetadata {
            automated: self.redact_meta(&metadata.automated),
            description: metadata.description.clone(),
            linked: metadata
                .linked
                .iter()
                .map(|l| LinkedSummary {
                    automated: self.redact_meta(&l.automated),
                    description: l.description.clone(),
                })
                .collect(),
        };
        let mut text = describe_frames(&masked, &meta, self.inner.excerpt);
        for (name, alias) in &self.columns {
            let re = Regex::new(&format!(r"\b{}\b", regex::escape(name))).expect("escaped pattern");
            text = re.replace_all(&text, alias.as_str()).into_owned();
        }
        text
    }

    fn excerpt_size(&self) -> usize {
        self.inner.excerpt
    }

    fn synthesize(&self, frame: &Frame) -> Option<Frame> {
        self.inner.synthesize(frame)
    }
}

/// Seeded generator of stand-in rows that share the source schema. Numeric
/// values are drawn within the observed range, strings are placeholders and
/// geometries are drawn inside the source bounds with the source's types.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGenerator {
    pub rows: usize,
    pub seed: u64,
}

impl SyntheticGenerator {
    pub fn new(rows: usize, seed: u64) -> Self {
        SyntheticGenerator { rows, seed }
    }

    pub fn generate(&self, frame: &Frame) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.rows;
        let bounds = frame.total_bounds().unwrap_or([0.0, 0.0, 1.0, 1.0]);
        let types: BTreeSet<String> = frame.geometry_types();
        let columns = frame
            .columns()
            .iter()
            .map(|c| {
                let range = c.data.numeric_values().and_then(|v| {
                    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    lo.is_finite().then_some((lo, hi))
                });
                let data = match &c.data {
                    ColumnData::Bool(_) => ColumnData::Bool((0..n).map(|_| Some(rng.gen_bool(0.5))).collect()),
                    ColumnData::Int(_) => {
                        let (lo, hi) = range.map_or((0, 100), |(a, b)| (a as i64, b as i64));
                        ColumnData::Int((0..n).map(|_| Some(rng.gen_range(lo..=hi))).collect())
                    }
                    ColumnData::Float(_) => {
                        let (lo, hi) = range.unwrap_or((0.0, 1.0));
                        ColumnData::Float((0..n).map(|_| Some(if hi > lo { rng.gen_range(lo..hi) } else { lo })).collect())
                    }
                    ColumnData::Str(_) => ColumnData::Str((0..n).map(|i| Some(format!("{}_{i}", c.name))).collect()),
                    ColumnData::Geometry(_) => {
                        ColumnData::Geometry((0..n).map(|_| Some(random_geometry(&mut rng, bounds, &types))).collect())
                    }
                };
                Column::new(c.name.clone(), data)
            })
            .collect();
        Frame::from_columns(columns, frame.geometry_name(), frame.crs().cloned()).expect("schema copied from a valid frame")
    }
}

fn random_geometry(rng: &mut ChaCha8Rng, b: [f64; 4], types: &BTreeSet<String>) -> Geometry {
    let pick = |rng: &mut ChaCha8Rng| Coord {
        x: if b[2] > b[0] { rng.gen_range(b[0]..b[2]) } else { b[0] },
        y: if b[3] > b[1] { rng.gen_range(b[1]..b[3]) } else { b[1] },
    };
    let kind = types.iter().next().map(String::as_str).unwrap_or("Point");
    let box_at = |c: Coord| {
        let w = ((b[2] - b[0]) / 20.0).max(1e-6);
        let h = ((b[3] - b[1]) / 20.0).max(1e-6);
        Rect::new(c, Coord { x: c.x + w, y: c.y + h }).to_polygon()
    };
    match kind {
        "LineString" | "MultiLineString" => Geometry::LineString(LineString::new(vec![pick(rng), pick(rng)])),
        "Polygon" => Geometry::Polygon(box_at(pick(rng))),
        "MultiPolygon" => Geometry::MultiPolygon(MultiPolygon::new(vec![box_at(pick(rng))])),
        _ => Geometry::Point(Point(pick(rng))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> Frame {
        Frame::from_geojson_str(
            r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"v":7,"ssn":"123-45"},"geometry":{"type":"Point","coordinates":[1,2]}},
            {"type":"Feature","properties":{"v":7,"ssn":"999-00"},"geometry":{"type":"Point","coordinates":[3,4]}}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn constant_column_has_zero_variance() {
        let m = derive_automated_metadata(&frame());
        assert_eq!(m.stats.len(), 1);
        let s = &m.stats[0];
        assert_eq!((s.mean, s.variance, s.min, s.max), (7.0, 0.0, 7.0, 7.0));
    }

    #[test]
    fn sig6_rounds() {
        assert_eq!(sig6(-116.51638), -116.516);
        assert_eq!(sig6(1234567.0), 1234570.0);
        assert_eq!(sig6(0.0), 0.0);
    }

    #[test]
    fn redaction_hides_names_and_values() {
        let f = frame();
        let meta = FrameMetadata::new(&f, "has an ssn column");
        let d = RedactingDescriptor::new(PublicDescriptor::new(2), &[("ssn", "col_1")]);
        let text = d.describe(&f, &meta);
        assert!(!text.contains("ssn"), "{text}");
        assert!(!text.contains("123-45"));
        assert!(text.contains("col_1"));
    }

    #[test]
    fn synthetic_frames_keep_schema() {
        let f = frame();
        let s = SyntheticGenerator::new(10, 1).generate(&f);
        assert_eq!(s.n_rows(), 10);
        assert!(s.schema_eq(&f));
        assert_eq!(SyntheticGenerator::new(10, 1).generate(&f), s);
    }
}
