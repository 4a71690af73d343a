use std::fmt;

use crate::geometry;
use crate::Geometry;

/// Logical data type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DType {
    Bool,
    Int64,
    Float64,
    Str,
    Geometry,
}

impl DType {
    pub fn name(self) -> &'static str {
        match self {
            DType::Bool => "bool",
            DType::Int64 => "int64",
            DType::Float64 => "float64",
            DType::Str => "object",
            DType::Geometry => "geometry",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, DType::Int64 | DType::Float64)
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Geometry(Geometry),
}

impl Scalar {
    pub fn is_null(&self) -> bool {
        matches!(self, Scalar::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(v) => Some(*v as f64),
            Scalar::Float(v) => Some(*v),
            Scalar::Bool(b) => Some(f64::from(u8::from(*b))),
            _ => None,
        }
    }
}

/// Formats a float the way Python's `repr` does for the common cases:
/// shortest round-trip digits, always with a fractional part.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") {
        s
    } else {
        format!("{s}.0")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Null => f.write_str("None"),
            Scalar::Bool(true) => f.write_str("True"),
            Scalar::Bool(false) => f.write_str("False"),
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => f.write_str(&format_float(*v)),
            Scalar::Str(s) => f.write_str(s),
            Scalar::Geometry(g) => f.write_str(&geometry::to_wkt(g)),
        }
    }
}

/// Typed storage for one column. Missing values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Bool(Vec<Option<bool>>),
    Int(Vec<Option<i64>>),
    Float(Vec<Option<f64>>),
    Str(Vec<Option<String>>),
    Geometry(Vec<Option<Geometry>>),
}

macro_rules! each_variant {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            ColumnData::Bool($v) => $body,
            ColumnData::Int($v) => $body,
            ColumnData::Float($v) => $body,
            ColumnData::Str($v) => $body,
            ColumnData::Geometry($v) => $body,
        }
    };
}

macro_rules! map_variant {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            ColumnData::Bool($v) => ColumnData::Bool($body),
            ColumnData::Int($v) => ColumnData::Int($body),
            ColumnData::Float($v) => ColumnData::Float($body),
            ColumnData::Str($v) => ColumnData::Str($body),
            ColumnData::Geometry($v) => ColumnData::Geometry($body),
        }
    };
}

impl ColumnData {
    pub fn len(&self) -> usize {
        each_variant!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            ColumnData::Bool(_) => DType::Bool,
            ColumnData::Int(_) => DType::Int64,
            ColumnData::Float(_) => DType::Float64,
            ColumnData::Str(_) => DType::Str,
            ColumnData::Geometry(_) => DType::Geometry,
        }
    }

    /// An empty column of the given type.
    pub fn empty(dtype: DType) -> Self {
        match dtype {
            DType::Bool => ColumnData::Bool(Vec::new()),
            DType::Int64 => ColumnData::Int(Vec::new()),
            DType::Float64 => ColumnData::Float(Vec::new()),
            DType::Str => ColumnData::Str(Vec::new()),
            DType::Geometry => ColumnData::Geometry(Vec::new()),
        }
    }

    /// A column of `len` copies of `value`.
    pub fn repeat(value: &Scalar, len: usize) -> Self {
        match value {
            Scalar::Null => ColumnData::Float(vec![None; len]),
            Scalar::Bool(b) => ColumnData::Bool(vec![Some(*b); len]),
            Scalar::Int(v) => ColumnData::Int(vec![Some(*v); len]),
            Scalar::Float(v) => ColumnData::Float(vec![Some(*v); len]),
            Scalar::Str(s) => ColumnData::Str(vec![Some(s.clone()); len]),
            Scalar::Geometry(g) => ColumnData::Geometry(vec![Some(g.clone()); len]),
        }
    }

    /// Builds a column from scalars, inferring the narrowest type that fits.
    /// Mixed ints and floats widen to float; anything else mixed falls back
    /// to strings.
    pub fn from_scalars(values: &[Scalar]) -> Self {
        let mut kind: Option<DType> = None;
        for v in values {
            let k = match v {
                Scalar::Null => continue,
                Scalar::Bool(_) => DType::Bool,
                Scalar::Int(_) => DType::Int64,
                Scalar::Float(_) => DType::Float64,
                Scalar::Str(_) => DType::Str,
                Scalar::Geometry(_) => DType::Geometry,
            };
            kind = Some(match kind {
                None => k,
                Some(prev) if prev == k => k,
                Some(DType::Int64) if k == DType::Float64 => DType::Float64,
                Some(DType::Float64) if k == DType::Int64 => DType::Float64,
                Some(_) => DType::Str,
            });
        }
        match kind.unwrap_or(DType::Float64) {
            DType::Bool => ColumnData::Bool(
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::Bool(b) => Some(*b),
                        _ => None,
                    })
                    .collect(),
            ),
            DType::Int64 => ColumnData::Int(
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::Int(i) => Some(*i),
                        _ => None,
                    })
                    .collect(),
            ),
            DType::Float64 => ColumnData::Float(values.iter().map(Scalar::as_f64).collect()),
            DType::Str => ColumnData::Str(
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::Null => None,
                        other => Some(other.to_string()),
                    })
                    .collect(),
            ),
            DType::Geometry => ColumnData::Geometry(
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::Geometry(g) => Some(g.clone()),
                        _ => None,
                    })
                    .collect(),
            ),
        }
    }

    pub fn get(&self, i: usize) -> Scalar {
        match self {
            ColumnData::Bool(v) => v[i].map_or(Scalar::Null, Scalar::Bool),
            ColumnData::Int(v) => v[i].map_or(Scalar::Null, Scalar::Int),
            ColumnData::Float(v) => v[i].map_or(Scalar::Null, Scalar::Float),
            ColumnData::Str(v) => v[i].clone().map_or(Scalar::Null, Scalar::Str),
            ColumnData::Geometry(v) => v[i].clone().map_or(Scalar::Null, Scalar::Geometry),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Scalar> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn null_count(&self) -> usize {
        each_variant!(self, v => v.iter().filter(|x| x.is_none()).count())
    }

    pub fn take(&self, indices: &[usize]) -> Self {
        map_variant!(self, v => indices.iter().map(|&i| v[i].clone()).collect())
    }

    pub fn filter(&self, mask: &[bool]) -> Self {
        map_variant!(self, v => v
            .iter()
            .zip(mask)
            .filter(|(_, keep)| **keep)
            .map(|(x, _)| x.clone())
            .collect())
    }

    /// Non-null values as floats, for numeric and boolean columns.
    pub fn numeric_values(&self) -> Option<Vec<f64>> {
        match self {
            ColumnData::Int(v) => Some(v.iter().flatten().map(|x| *x as f64).collect()),
            ColumnData::Float(v) => Some(v.iter().flatten().copied().filter(|x| !x.is_nan()).collect()),
            ColumnData::Bool(v) => Some(v.iter().flatten().map(|b| f64::from(u8::from(*b))).collect()),
            _ => None,
        }
    }

    /// Appends `other`, widening int to float when needed.
    pub fn concat(&self, other: &ColumnData) -> Option<ColumnData> {
        Some(match (self, other) {
            (ColumnData::Bool(a), ColumnData::Bool(b)) => ColumnData::Bool([a.as_slice(), b].concat()),
            (ColumnData::Int(a), ColumnData::Int(b)) => ColumnData::Int([a.as_slice(), b].concat()),
            (ColumnData::Float(a), ColumnData::Float(b)) => ColumnData::Float([a.as_slice(), b].concat()),
            (ColumnData::Str(a), ColumnData::Str(b)) => ColumnData::Str([a.as_slice(), b].concat()),
            (ColumnData::Geometry(a), ColumnData::Geometry(b)) => {
                ColumnData::Geometry([a.as_slice(), b].concat())
            }
            (ColumnData::Int(_), ColumnData::Float(_)) | (ColumnData::Float(_), ColumnData::Int(_)) => {
                let a: Vec<Scalar> = self.iter().collect();
                let b: Vec<Scalar> = other.iter().collect();
                ColumnData::from_scalars(&[a, b].concat())
            }
            _ => return None,
        })
    }
}

/// A named column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
