//! Shape genomes: `N` rows of shape parameters, each entry in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    Triangle,
    Rectangle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Circle, ShapeKind::Triangle, ShapeKind::Rectangle];

    /// Parameters per shape.
    ///
    /// Circle: center (2), radius, RGB, alpha. Triangle: three vertices (6),
    /// RGB, alpha. Rectangle: two corners (4), RGB, alpha.
    pub const fn arity(self) -> usize {
        match self {
            ShapeKind::Circle => 7,
            ShapeKind::Triangle => 10,
            ShapeKind::Rectangle => 8,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Rectangle => "rectangle",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "circle" | "circles" => Ok(ShapeKind::Circle),
            "triangle" | "triangles" => Ok(ShapeKind::Triangle),
            "rectangle" | "rectangles" | "square" => Ok(ShapeKind::Rectangle),
            _ => Err(GenomeError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenomeError {
    #[error("genome needs at least one shape")]
    Empty,
    #[error("{kind} genome with {rows} rows needs {expected} values, got {got}")]
    Shape {
        kind: ShapeKind,
        rows: usize,
        expected: usize,
        got: usize,
    },
    #[error("genome entry ({row}, {col}) = {value} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("unknown shape kind {0:?}")]
    UnknownKind(String),
}

/// An `N x arity(kind)` matrix, row-major, all entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGenome", into = "RawGenome")]
pub struct Genome {
    kind: ShapeKind,
    rows: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGenome {
    kind: ShapeKind,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawGenome> for Genome {
    type Error = GenomeError;

    fn try_from(raw: RawGenome) -> Result<Self, Self::Error> {
        Genome::from_rows(raw.kind, &raw.rows)
    }
}

impl From<Genome> for RawGenome {
    fn from(g: Genome) -> Self {
        RawGenome {
            kind: g.kind,
            rows: g.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Genome {
    pub fn new(kind: ShapeKind, rows: usize, data: Vec<f64>) -> Result<Self, GenomeError> {
        if rows == 0 {
            return Err(GenomeError::Empty);
        }
        let a = kind.arity();
        if data.len() != rows * a {
            return Err(GenomeError::Shape {
                kind,
                rows,
                expected: rows * a,
                got: data.len(),
            });
        }
        if let Some((i, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(GenomeError::OutOfRange {
                row: i / a,
                col: i % a,
                value,
            });
        }
        Ok(Self { kind, rows, data })
    }

    pub fn from_rows(kind: ShapeKind, rows: &[Vec<f64>]) -> Result<Self, GenomeError> {
        let a = kind.arity();
        if let Some(bad) = rows.iter().find(|r| r.len() != a) {
            return Err(GenomeError::Shape {
                kind,
                rows: 1,
                expected: a,
                got: bad.len(),
            });
        }
        Self::new(kind, rows.len(), rows.concat())
    }

    /// Every entry drawn from `U(0, 1)`.
    pub fn random(kind: ShapeKind, rows: usize, rng: &mut RandomStream) -> Self {
        assert!(rows > 0, "genome needs at least one shape");
        let data = (0..rows * kind.arity()).map(|_| rng.unit()).collect();
        Self { kind, rows, data }
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn num_shapes(&self) -> usize {
        self.rows
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let a = self.arity();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.arity())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Raw mutable storage. Callers must restore the `[0, 1]` bound via
    /// [`Genome::clip`] before the genome escapes.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn clip(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}
