//! Deterministic grid families on the unit square.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Point, PolyMesh};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Uniform squares.
    Square,
    /// Squares with interior vertices displaced in a checkerboard pattern.
    Quad,
    /// Honeycomb clipped to the square: hexagons, pentagons, quadrilaterals.
    Polygon,
}

impl GridKind {
    pub fn generate(self, n: usize) -> Result<PolyMesh> {
        match self {
            GridKind::Square => gen_square_grid(n),
            GridKind::Quad => gen_quad_grid(n),
            GridKind::Polygon => gen_polygon_grid(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Square => "square",
            GridKind::Quad => "quad",
            GridKind::Polygon => "polygon",
        }
    }
}

fn tensor_grid(n: usize, displace: impl Fn(usize, usize) -> [f64; 2]) -> Result<PolyMesh> {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let d = if i == 0 || j == 0 || i == n || j == n {
                [0.0, 0.0]
            } else {
                displace(i, j)
            };
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x + d[0], y + d[1]]);
        }
    }
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::new(vertices, elements)
}

/// `n x n` uniform squares on `(0,1)^2`.
pub fn gen_square_grid(n: usize) -> Result<PolyMesh> {
    if n < 1 {
        return Err(Error::InvalidInput("square grid needs n >= 1".into()));
    }
    tensor_grid(n, |_, _| [0.0, 0.0])
}

/// `n x n` convex quadrilaterals: interior vertex `(i, j)` moves by
/// `(0.2 h, -0.1 h)` times `(-1)^(i+j)`.
pub fn gen_quad_grid(n: usize) -> Result<PolyMesh> {
    if n < 2 {
        return Err(Error::InvalidInput("quadrilateral grid needs n >= 2".into()));
    }
    let h = 1.0 / n as f64;
    tensor_grid(n, |i, j| {
        let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        [0.2 * h * s, -0.1 * h * s]
    })
}

/// Honeycomb of pointy-top hexagons clipped to `(0,1)^2`.
///
/// Cell centres sit on rows `y = j/n`, `j = 0..=n`; even rows at `x = i/n`,
/// odd rows at `x = (i + 1/2)/n`. Each cell is the Voronoi region of its
/// centre, with vertices at `(±1/2, ±3/8)/n` and `(0, ±5/8)/n` relative to
/// it. Cells centred on the boundary are cut in half (pentagons along the
/// bottom and top, quadrilaterals on the sides) and the corner cells are
/// quarters.
pub fn gen_polygon_grid(n: usize) -> Result<PolyMesh> {
    if n < 2 {
        return Err(Error::InvalidInput("polygon grid needs n >= 2".into()));
    }
    // Vertices live on the lattice x = a / (2n), y = b / (8n).
    let (xs, ys) = (2 * n as i64, 8 * n as i64);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut vertex = |a: i64, b: i64| -> usize {
        *index.entry((a, b)).or_insert_with(|| {
            vertices.push([a as f64 / xs as f64, b as f64 / ys as f64]);
            vertices.len() - 1
        })
    };

    // Hexagon around the lattice centre (ca, cb), counter-clockwise from the
    // bottom vertex, in lattice units.
    const HEX: [(i64, i64); 6] = [(0, -5), (1, -3), (1, 3), (0, 5), (-1, 3), (-1, -3)];
    let mut elements = Vec::new();
    for j in 0..=n as i64 {
        let cb = 8 * j;
        let centres: Vec<i64> = if j % 2 == 0 {
            (0..=n as i64).map(|i| 2 * i).collect()
        } else {
            (0..n as i64).map(|i| 2 * i + 1).collect()
        };
        for ca in centres {
            let hex: Vec<(i64, i64)> = HEX.iter().map(|&(a, b)| (ca + a, cb + b)).collect();
            let clipped = clip_to_box(&hex, xs, ys);
            let cycle: Vec<usize> = clipped.iter().map(|&(a, b)| vertex(a, b)).collect();
            elements.push(cycle);
        }
    }
    PolyMesh::new(vertices, elements)
}

/// Sutherland-Hodgman clip of a lattice polygon to `[0, xs] x [0, ys]`.
/// Clip lines pass through hexagon centres or along hexagon edges, so every
/// intersection lands on the lattice and the integer divisions are exact.
fn clip_to_box(poly: &[(i64, i64)], xs: i64, ys: i64) -> Vec<(i64, i64)> {
    // (axis, bound, keep_greater)
    let planes = [(0, 0, true), (0, xs, false), (1, 0, true), (1, ys, false)];
    let mut out: Vec<(i64, i64)> = poly.to_vec();
    for &(axis, bound, greater) in &planes {
        let inside = |p: (i64, i64)| {
            let v = if axis == 0 { p.0 } else { p.1 };
            if greater {
                v >= bound
            } else {
                v <= bound
            }
        };
        let input = std::mem::take(&mut out);
        let m = input.len();
        for i in 0..m {
            let (p, q) = (input[i], input[(i + 1) % m]);
            let (pin, qin) = (inside(p), inside(q));
            if pin {
                out.push(p);
            }
            if pin != qin {
                let (pv, qv) = if axis == 0 { (p.0, q.0) } else { (p.1, q.1) };
                // Intersection parameter t = (bound - pv) / (qv - pv).
                let num = bound - pv;
                let den = qv - pv;
                let ix = p.0 * den + num * (q.0 - p.0);
                let iy = p.1 * den + num * (q.1 - p.1);
                debug_assert!(ix % den == 0 && iy % den == 0);
                let r = (ix / den, iy / den);
                if out.last() != Some(&r) {
                    out.push(r);
                }
            }
        }
        out.dedup();
        if out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
    }
    out
}
