use std::collections::BTreeSet;

use crate::column::{Column, ColumnData, DType, Scalar};
use crate::geometry::{self, Crs};
use crate::{FrameError, Geometry, Result};

/// Columnar frame. When `geometry` names a geometry column the frame is
/// geospatial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    columns: Vec<Column>,
    geometry: Option<String>,
    crs: Option<Crs>,
    rows: usize,
}

impl Frame {
    /// An empty plain frame.
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a frame from columns. `geometry` selects the active geometry
    /// column, which must exist and hold geometries.
    pub fn from_columns(columns: Vec<Column>, geometry: Option<&str>, crs: Option<Crs>) -> Result<Self> {
        let mut frame = Frame {
            rows: columns.first().map_or(0, Column::len),
            ..Frame::default()
        };
        for col in columns {
            frame.push_column(col)?;
        }
        if let Some(name) = geometry {
            frame.set_geometry(name)?;
        }
        frame.crs = crs;
        Ok(frame)
    }

    /// An empty geospatial frame with a declared schema.
    pub fn empty_geo(schema: &[(&str, DType)], geometry: &str, crs: Option<Crs>) -> Result<Self> {
        let columns = schema
            .iter()
            .map(|(name, dtype)| Column::new(*name, ColumnData::empty(*dtype)))
            .collect();
        Frame::from_columns(columns, Some(geometry), crs)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn crs(&self) -> Option<&Crs> {
        self.crs.as_ref()
    }

    pub fn set_crs(&mut self, crs: Option<Crs>) {
        self.crs = crs;
    }

    pub fn is_geo(&self) -> bool {
        self.geometry.is_some()
    }

    pub fn geometry_name(&self) -> Option<&str> {
        self.geometry.as_deref()
    }

    /// Activates an existing geometry column.
    pub fn set_geometry(&mut self, name: &str) -> Result<()> {
        let col = self
            .column(name)
            .ok_or_else(|| FrameError::UnknownColumn(name.into()))?;
        if col.dtype() != DType::Geometry {
            return Err(FrameError::NotGeometry(name.into()));
        }
        self.geometry = Some(name.into());
        Ok(())
    }

    /// Drops the active geometry designation, leaving a plain frame.
    pub fn clear_geometry(&mut self) {
        self.geometry = None;
    }

    /// Geometries of the active geometry column.
    pub fn geometries(&self) -> Result<&[Option<Geometry>]> {
        let name = self.geometry.as_deref().ok_or(FrameError::NoGeometry)?;
        match self.column(name).map(|c| &c.data) {
            Some(ColumnData::Geometry(g)) => Ok(g),
            _ => Err(FrameError::NotGeometry(name.into())),
        }
    }

    /// Appends a column. The first column of an empty frame fixes the row count.
    pub fn push_column(&mut self, col: Column) -> Result<()> {
        if self.column(&col.name).is_some() {
            return Err(FrameError::DuplicateColumn(col.name));
        }
        if self.columns.is_empty() {
            self.rows = col.len();
        } else if col.len() != self.rows {
            return Err(FrameError::LengthMismatch {
                actual: col.len(),
                name: col.name,
                expected: self.rows,
            });
        }
        self.columns.push(col);
        Ok(())
    }

    /// Replaces a column in place, or appends it when absent.
    pub fn set_column(&mut self, name: &str, data: ColumnData) -> Result<()> {
        if let Some(i) = self.column_index(name) {
            if data.len() != self.rows && self.columns.len() > 1 {
                return Err(FrameError::LengthMismatch {
                    name: name.into(),
                    expected: self.rows,
                    actual: data.len(),
                });
            }
            if self.geometry.as_deref() == Some(name) && data.dtype() != DType::Geometry {
                self.geometry = None;
            }
            self.rows = data.len();
            self.columns[i].data = data;
            Ok(())
        } else {
            self.push_column(Column::new(name, data))
        }
    }

    pub fn get(&self, row: usize, column: &str) -> Option<Scalar> {
        (row < self.rows).then(|| self.column(column).map(|c| c.data.get(row)))?
    }

    pub fn row(&self, row: usize) -> Vec<Scalar> {
        self.columns.iter().map(|c| c.data.get(row)).collect()
    }

    fn with_columns(&self, columns: Vec<Column>, rows: usize) -> Frame {
        let geometry = self
            .geometry
            .clone()
            .filter(|g| columns.iter().any(|c| &c.name == g));
        Frame {
            columns,
            geometry,
            crs: self.crs.clone(),
            rows,
        }
    }

    pub fn take(&self, indices: &[usize]) -> Frame {
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(c.name.clone(), c.data.take(indices)))
            .collect();
        self.with_columns(columns, indices.len())
    }

    pub fn filter(&self, mask: &[bool]) -> Frame {
        let rows = mask.iter().take(self.rows).filter(|m| **m).count();
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(c.name.clone(), c.data.filter(mask)))
            .collect();
        self.with_columns(columns, rows)
    }

    pub fn head(&self, n: usize) -> Frame {
        let idx: Vec<usize> = (0..n.min(self.rows)).collect();
        self.take(&idx)
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Frame> {
        let columns = names
            .iter()
            .map(|n| {
                self.column(n)
                    .cloned()
                    .ok_or_else(|| FrameError::UnknownColumn((*n).into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_columns(columns, self.rows))
    }

    pub fn drop_columns(&self, names: &[&str]) -> Result<Frame> {
        if let Some(missing) = names.iter().find(|n| self.column(n).is_none()) {
            return Err(FrameError::UnknownColumn((*missing).into()));
        }
        let columns = self
            .columns
            .iter()
            .filter(|c| !names.contains(&c.name.as_str()))
            .cloned()
            .collect();
        Ok(self.with_columns(columns, self.rows))
    }

    pub fn rename(&self, mapping: &[(String, String)]) -> Frame {
        let lookup = |name: &str| {
            mapping
                .iter()
                .find(|(from, _)| from == name)
                .map_or_else(|| name.to_string(), |(_, to)| to.clone())
        };
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(lookup(&c.name), c.data.clone()))
            .collect();
        Frame {
            columns,
            geometry: self.geometry.as_deref().map(lookup),
            crs: self.crs.clone(),
            rows: self.rows,
        }
    }

    /// Row-wise concatenation. Columns are matched by name; columns missing
    /// on one side are filled with nulls.
    pub fn concat(frames: &[&Frame]) -> Result<Frame> {
        let Some(first) = frames.first() else {
            return Ok(Frame::new());
        };
        let mut names: Vec<String> = Vec::new();
        for f in frames {
            for c in &f.columns {
                if !names.contains(&c.name) {
                    names.push(c.name.clone());
                }
            }
        }
        let mut columns = Vec::with_capacity(names.len());
        for name in &names {
            let mut acc: Option<ColumnData> = None;
            for f in frames {
                let part = match f.column(name) {
                    Some(c) => c.data.clone(),
                    None => {
                        let dtype = frames
                            .iter()
                            .find_map(|g| g.column(name).map(Column::dtype))
                            .unwrap_or(DType::Float64);
                        null_column(dtype, f.rows)
                    }
                };
                acc = Some(match acc {
                    None => part,
                    Some(prev) => prev.concat(&part).unwrap_or_else(|| {
                        let mut values: Vec<Scalar> = prev.iter().collect();
                        values.extend(part.iter());
                        ColumnData::from_scalars(&values)
                    }),
                });
            }
            columns.push(Column::new(name.clone(), acc.unwrap_or(ColumnData::Float(vec![]))));
        }
        let rows = frames.iter().map(|f| f.rows).sum();
        let mut out = Frame {
            columns: Vec::new(),
            geometry: None,
            crs: first.crs.clone(),
            rows,
        };
        for c in columns {
            out.push_column(c)?;
        }
        out.rows = rows;
        if let Some(g) = &first.geometry {
            if out.column(g).is_some_and(|c| c.dtype() == DType::Geometry) {
                out.geometry = Some(g.clone());
            }
        }
        Ok(out)
    }

    /// `[minx, miny, maxx, maxy]` over all non-null geometries.
    pub fn total_bounds(&self) -> Option<[f64; 4]> {
        let geoms = self.geometries().ok()?;
        geometry::total_bounds(geoms.iter().flatten())
    }

    /// Distinct geometry type names, sorted.
    pub fn geometry_types(&self) -> BTreeSet<String> {
        self.geometries()
            .map(|g| {
                g.iter()
                    .flatten()
                    .map(|g| geometry::geom_type(g).to_string())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Same column names and types, in the same order.
    pub fn schema_eq(&self, other: &Frame) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.dtype() == b.dtype())
            && self.geometry == other.geometry
    }

    /// Returns a copy with every geometry reprojected to `to`.
    pub fn to_crs(&self, to: &Crs) -> Result<Frame> {
        let from = self.crs.clone().unwrap_or_else(Crs::wgs84);
        let mut out = self.clone();
        for col in &mut out.columns {
            if let ColumnData::Geometry(geoms) = &mut col.data {
                for g in geoms.iter_mut().flatten() {
                    *g = geometry::reproject(g, &from, to)?;
                }
            }
        }
        out.crs = Some(to.clone());
        Ok(out)
    }
}

fn null_column(dtype: DType, len: usize) -> ColumnData {
    match dtype {
        DType::Bool => ColumnData::Bool(vec![None; len]),
        DType::Int64 => ColumnData::Int(vec![None; len]),
        DType::Float64 => ColumnData::Float(vec![None; len]),
        DType::Str => ColumnData::Str(vec![None; len]),
        DType::Geometry => ColumnData::Geometry(vec![None; len]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use geo::point;

    fn sample() -> Frame {
        Frame::from_columns(
            vec![
                Column::new("name", ColumnData::Str(vec![Some("a".into()), Some("b".into()), None])),
                Column::new("value", ColumnData::Int(vec![Some(1), Some(2), Some(3)])),
                Column::new(
                    "geometry",
                    ColumnData::Geometry(vec![
                        Some(Geometry::Point(point!(x: 0.0, y: 0.0))),
                        Some(Geometry::Point(point!(x: 2.0, y: -1.0))),
                        None,
                    ]),
                ),
            ],
            Some("geometry"),
            Some(Crs::wgs84()),
        )
        .unwrap()
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut f = sample();
        let err = f
            .push_column(Column::new("x", ColumnData::Int(vec![Some(1)])))
            .unwrap_err();
        assert!(matches!(err, FrameError::LengthMismatch { .. }));
    }

    #[test]
    fn bounds_and_types() {
        let f = sample();
        assert_eq!(f.total_bounds(), Some([0.0, -1.0, 2.0, 0.0]));
        assert_eq!(f.geometry_types().into_iter().collect::<Vec<_>>(), vec!["Point"]);
    }

    #[test]
    fn filter_keeps_geometry_and_crs() {
        let f = sample().filter(&[false, true, true]);
        assert_eq!(f.n_rows(), 2);
        assert!(f.is_geo());
        assert_eq!(f.crs(), Some(&Crs::wgs84()));
        assert_eq!(f.get(0, "value"), Some(Scalar::Int(2)));
    }

    #[test]
    fn dropping_geometry_yields_plain_frame() {
        let f = sample().drop_columns(&["geometry"]).unwrap();
        assert!(!f.is_geo());
        assert_eq!(f.column_names(), vec!["name", "value"]);
    }

    #[test]
    fn empty_geo_frame_keeps_schema() {
        let f = Frame::empty_geo(&[("id", DType::Int64), ("geometry", DType::Geometry)], "geometry", None).unwrap();
        assert_eq!(f.n_rows(), 0);
        assert!(f.is_geo());
        assert!(f.schema_eq(&f.head(3)));
        assert_eq!(f.total_bounds(), None);
    }

    #[test]
    fn concat_widens_and_fills() {
        let a = sample();
        let b = sample().drop_columns(&["name"]).unwrap();
        let c = Frame::concat(&[&a, &b]).unwrap();
        assert_eq!(c.n_rows(), 6);
        assert_eq!(c.get(4, "name"), Some(Scalar::Null));
        assert!(c.is_geo());
    }
}
