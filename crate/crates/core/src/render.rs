//! Rasterization of genomes, alpha compositing and L∞ projection.
//!
//! Pixel coordinates are integer (row, col) pairs; a pixel is identified with
//! its center. Genome entries are mapped to pixels with [`scaled_index`].
//! Shapes are composited in row order over the attacked image and the result
//! is clipped into `{ |x_adv - x|∞ <= eps } ∩ [0, 1]`.

use thiserror::Error;

use crate::genome::{Genome, ShapeKind};
use crate::image::{Image, ImageError, CHANNELS};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("expected a {expected} genome, got {got}")]
    KindMismatch { expected: ShapeKind, got: ShapeKind },
    #[error("shape covers pixel ({row}, {col}) outside a {height}x{width} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("beta must be positive and finite, got {0}")]
    Beta(f64),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// `round(v * s)` with halves rounded up.
pub fn scaled_round(v: f64, s: usize) -> usize {
    (v * s as f64 + 0.5).floor().max(0.0) as usize
}

/// [`scaled_round`] clamped into a valid index `[0, dim - 1]`.
pub fn scaled_index(v: f64, dim: usize) -> usize {
    scaled_round(v, dim).min(dim.saturating_sub(1))
}

/// Largest circle radius, `(h + w) / beta`, kept real.
pub fn max_radius(height: usize, width: usize, beta: f64) -> f64 {
    (height + width) as f64 / beta
}

/// Inclusive column run `[start, end]` on one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub row: usize,
    pub start: usize,
    pub end: usize,
}

/// A shape's pixel footprint with its colour and opacity.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterShape {
    spans: Vec<Span>,
    color: [f64; 3],
    alpha: f64,
}

impl RasterShape {
    /// Validates that every span lies inside a `height x width` image.
    pub fn new(
        spans: Vec<Span>,
        color: [f64; 3],
        alpha: f64,
        height: usize,
        width: usize,
    ) -> Result<Self, RenderError> {
        for s in &spans {
            let (row, col) = (s.row, s.start.max(s.end));
            if row >= height || col >= width {
                return Err(RenderError::OutOfBounds {
                    row,
                    col,
                    height,
                    width,
                });
            }
        }
        Ok(Self {
            spans,
            color: color.map(|c| c.clamp(0.0, 1.0)),
            alpha: alpha.clamp(0.0, 1.0),
        })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn color(&self) -> [f64; 3] {
        self.color
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.spans
            .iter()
            .any(|s| s.row == row && s.start <= col && col <= s.end)
    }

    /// Covered pixels in scan order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.spans
            .iter()
            .flat_map(|s| (s.start..=s.end).map(move |c| (s.row, c)))
    }

    pub fn area(&self) -> usize {
        self.spans.iter().map(|s| s.end + 1 - s.start).sum()
    }
}

/// Blends one channel value. Shared by every compositing path so results
/// are bit-identical.
#[inline]
pub fn blend(under: f64, color: f64, alpha: f64) -> f64 {
    ((1.0 - alpha) * under + alpha * color).clamp(0.0, 1.0)
}

fn composite_spans(image: &mut Image, spans: &[Span], color: [f64; 3], alpha: f64) {
    let width = image.width();
    let data = image.data_mut();
    for s in spans {
        let lo = (s.row * width + s.start) * CHANNELS;
        let hi = (s.row * width + s.end + 1) * CHANNELS;
        for px in data[lo..hi].chunks_exact_mut(CHANNELS) {
            for (v, c) in px.iter_mut().zip(color) {
                *v = blend(*v, c, alpha);
            }
        }
    }
}

/// Alpha-over composite of `shape` onto a copy of `image`.
pub fn composite(image: &Image, shape: &RasterShape) -> Result<Image, RenderError> {
    let mut out = image.clone();
    composite_in_place(&mut out, shape)?;
    Ok(out)
}

pub fn composite_in_place(image: &mut Image, shape: &RasterShape) -> Result<(), RenderError> {
    let (height, width) = image.dims();
    if let Some(s) = shape
        .spans
        .iter()
        .find(|s| s.row >= height || s.end >= width)
    {
        return Err(RenderError::OutOfBounds {
            row: s.row,
            col: s.end,
            height,
            width,
        });
    }
    composite_spans(image, &shape.spans, shape.color, shape.alpha);
    Ok(())
}

/// Pushes the spans of a circle centred at `(row, col)`; boundary inclusive.
fn circle_spans(center: (usize, usize), radius: usize, height: usize, width: usize, out: &mut Vec<Span>) {
    let (cr, cc) = (center.0 as i64, center.1 as i64);
    let r = radius as i64;
    let top = (cr - r).max(0);
    let bottom = (cr + r).min(height as i64 - 1);
    for row in top..=bottom {
        let dy = row - cr;
        let half = ((r * r - dy * dy) as u64).isqrt() as i64;
        let start = (cc - half).max(0);
        let end = (cc + half).min(width as i64 - 1);
        if start <= end {
            out.push(Span {
                row: row as usize,
                start: start as usize,
                end: end as usize,
            });
        }
    }
}

/// Pushes the spans of a triangle with integer (row, col) vertices.
///
/// A pixel is inside when all three edge functions, oriented by the sign of
/// the area, are non-negative. Zero-area triangles cover nothing.
fn triangle_spans(v: [(i64, i64); 3], height: usize, width: usize, out: &mut Vec<Span>) {
    let area2 = edge(v[0], v[1], v[2]);
    if area2 == 0 {
        return;
    }
    let sign = area2.signum();
    let top = v.iter().map(|p| p.0).min().unwrap().max(0);
    let bottom = v.iter().map(|p| p.0).max().unwrap().min(height as i64 - 1);
    let left = v.iter().map(|p| p.1).min().unwrap().max(0);
    let right = v.iter().map(|p| p.1).max().unwrap().min(width as i64 - 1);
    let edges = [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])];
    for row in top..=bottom {
        let (mut start, mut end) = (left, right);
        for &(a, b) in &edges {
            // sign * edge(a, b, (row, q)) = slope * q + offset
            let slope = sign * (b.0 - a.0);
            let offset = sign * (-(b.0 - a.0) * a.1 - (b.1 - a.1) * (row - a.0));
            match slope.cmp(&0) {
                std::cmp::Ordering::Greater => start = start.max(ceil_div(-offset, slope)),
                std::cmp::Ordering::Less => end = end.min(offset.div_euclid(-slope)),
                std::cmp::Ordering::Equal => {
                    if offset < 0 {
                        start = 1;
                        end = 0;
                    }
                }
            }
        }
        if start <= end {
            out.push(Span {
                row: row as usize,
                start: start as usize,
                end: end as usize,
            });
        }
    }
}

/// Twice the signed area of `(a, b, p)`; coordinates are (row, col).
#[inline]
pub fn edge(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn ceil_div(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    -((-num).div_euclid(den))
}

fn rect_spans(r: (usize, usize), c: (usize, usize), out: &mut Vec<Span>) {
    let (start, end) = (c.0.min(c.1), c.0.max(c.1));
    for row in r.0.min(r.1)..=r.0.max(r.1) {
        out.push(Span { row, start, end });
    }
}

/// Decoded geometry of one genome row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Circle { center: (usize, usize), radius: usize },
    Triangle { vertices: [(usize, usize); 3] },
    Rectangle { rows: (usize, usize), cols: (usize, usize) },
}

/// Decodes a genome row into geometry, colour and alpha for a `height x width` image.
///
/// Circle rows are `[col, row, radius, r, g, b, alpha]`: entry 1 maps to the
/// row axis and entry 0 to the column axis. Triangle rows are
/// `[r0, c0, r1, c1, r2, c2, r, g, b, alpha]`. Rectangle rows are
/// `[r1, c1, c2, r2, r, g, b, alpha]`.
pub fn decode_row(
    kind: ShapeKind,
    y: &[f64],
    height: usize,
    width: usize,
    beta: f64,
) -> (Geometry, [f64; 3], f64) {
    match kind {
        ShapeKind::Circle => {
            let center = (scaled_index(y[1], height), scaled_index(y[0], width));
            let radius = (y[2] * max_radius(height, width, beta) + 0.5).floor() as usize;
            (Geometry::Circle { center, radius }, [y[3], y[4], y[5]], y[6])
        }
        ShapeKind::Triangle => {
            let vertices = [
                (scaled_index(y[0], height), scaled_index(y[1], width)),
                (scaled_index(y[2], height), scaled_index(y[3], width)),
                (scaled_index(y[4], height), scaled_index(y[5], width)),
            ];
            (Geometry::Triangle { vertices }, [y[6], y[7], y[8]], y[9])
        }
        ShapeKind::Rectangle => {
            let rows = (scaled_index(y[0], height), scaled_index(y[3], height));
            let cols = (scaled_index(y[1], width), scaled_index(y[2], width));
            (Geometry::Rectangle { rows, cols }, [y[4], y[5], y[6]], y[7])
        }
    }
}

fn geometry_spans(g: Geometry, height: usize, width: usize, out: &mut Vec<Span>) {
    match g {
        Geometry::Circle { center, radius } => circle_spans(center, radius, height, width, out),
        Geometry::Triangle { vertices } => {
            triangle_spans(vertices.map(|(r, c)| (r as i64, c as i64)), height, width, out)
        }
        Geometry::Rectangle { rows, cols } => rect_spans(rows, cols, out),
    }
}

/// The raster shapes of a genome, in compositing order.
pub fn raster_shapes(genome: &Genome, height: usize, width: usize, beta: f64) -> Vec<RasterShape> {
    genome
        .rows()
        .map(|y| {
            let (g, color, alpha) = decode_row(genome.kind(), y, height, width, beta);
            let mut spans = Vec::new();
            geometry_spans(g, height, width, &mut spans);
            RasterShape {
                spans,
                color,
                alpha,
            }
        })
        .collect()
}

/// Composites every shape of `genome` over `canvas`, without projection.
pub fn render_unprojected(genome: &Genome, canvas: &Image, beta: f64) -> Result<Image, RenderError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(RenderError::Beta(beta));
    }
    let (height, width) = canvas.dims();
    let mut out = canvas.clone();
    let mut spans = Vec::with_capacity(height);
    for y in genome.rows() {
        let (g, color, alpha) = decode_row(genome.kind(), y, height, width, beta);
        spans.clear();
        geometry_spans(g, height, width, &mut spans);
        composite_spans(&mut out, &spans, color, alpha);
    }
    Ok(out)
}

/// Renders any genome onto `x` and projects into the ε-ball. `beta` is only
/// used by circle genomes.
pub fn render(genome: &Genome, x: &Image, epsilon: f64, beta: f64) -> Result<Image, RenderError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(RenderError::Epsilon(epsilon));
    }
    let mut out = render_unprojected(genome, x, beta)?;
    project_in_place(&mut out, x, epsilon);
    Ok(out)
}

fn expect_kind(genome: &Genome, expected: ShapeKind) -> Result<(), RenderError> {
    if genome.kind() == expected {
        Ok(())
    } else {
        Err(RenderError::KindMismatch {
            expected,
            got: genome.kind(),
        })
    }
}

pub fn render_circles(genome: &Genome, x: &Image, epsilon: f64, beta: f64) -> Result<Image, RenderError> {
    expect_kind(genome, ShapeKind::Circle)?;
    render(genome, x, epsilon, beta)
}

pub fn render_triangles(genome: &Genome, x: &Image, epsilon: f64) -> Result<Image, RenderError> {
    expect_kind(genome, ShapeKind::Triangle)?;
    render(genome, x, epsilon, 1.0)
}

pub fn render_rectangles(genome: &Genome, x: &Image, epsilon: f64) -> Result<Image, RenderError> {
    expect_kind(genome, ShapeKind::Rectangle)?;
    render(genome, x, epsilon, 1.0)
}

/// Elementwise `min(max(x_adv, x - eps, 0), x + eps, 1)`.
pub fn project_linf(x_adv: &Image, x: &Image, epsilon: f64) -> Result<Image, RenderError> {
    x_adv.check_same_dims(x)?;
    let mut out = x_adv.clone();
    project_in_place(&mut out, x, epsilon);
    Ok(out)
}

pub(crate) fn project_in_place(x_adv: &mut Image, x: &Image, epsilon: f64) {
    project_values(x_adv.data_mut(), x.as_slice(), epsilon);
}

/// The projection on raw values, which may lie outside `[0, 1]` before clipping.
pub fn project_values(x_adv: &mut [f64], x: &[f64], epsilon: f64) {
    for (v, &orig) in x_adv.iter_mut().zip(x) {
        *v = v.max(orig - epsilon).max(0.0).min(orig + epsilon).min(1.0);
    }
}
