//! Planar polygonal meshes.
//!
//! A [`PolyMesh`] stores vertices and counter-clockwise vertex cycles; edges,
//! element-edge incidence, centroids, areas and diameters are derived on
//! construction. Local edge `i` of an element runs from its vertex `i` to
//! vertex `i + 1`. Every edge carries a global orientation from its lower to
//! its higher vertex index; edge polynomials are parameterized along it.

mod generators;
mod io;
mod subtri;

pub use generators::{gen_polygon_grid, gen_quad_grid, gen_square_grid, GridKind};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh, MeshFile};
pub use subtri::{subtriangulate, subtriangulate_polygon, SubEdge, SubTriangulation};

use std::collections::HashMap;

use crate::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Vertex indices, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// First incident element.
    pub left: usize,
    /// Second incident element; `None` on the domain boundary.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    elements: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    element_edges: Vec<Vec<usize>>,
    centroids: Vec<Point>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
}

pub(crate) fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Area centroid of a simple polygon, computed relative to its first vertex.
pub(crate) fn polygon_centroid(poly: &[Point]) -> Point {
    let o = poly[0];
    let n = poly.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let q = [poly[(i + 1) % n][0] - o[0], poly[(i + 1) % n][1] - o[1]];
        let c = p[0] * q[1] - q[0] * p[1];
        a2 += c;
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    [o[0] + cx / (3.0 * a2), o[1] + cy / (3.0 * a2)]
}

fn diameter(poly: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in poly.iter().enumerate() {
        for b in &poly[i + 1..] {
            d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    d
}

impl PolyMesh {
    /// Builds a mesh from vertices and counter-clockwise element cycles,
    /// validating connectivity and element shape.
    pub fn new(vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        if elements.is_empty() {
            return Err(Error::Connectivity("mesh has no elements".into()));
        }
        for (e, cycle) in elements.iter().enumerate() {
            if cycle.len() < 3 {
                return Err(Error::Connectivity(format!(
                    "element {e} has {} vertices",
                    cycle.len()
                )));
            }
            for &v in cycle {
                if v >= nv {
                    return Err(Error::Connectivity(format!(
                        "element {e} references vertex {v}, but the mesh has {nv} vertices"
                    )));
                }
            }
            let mut sorted = cycle.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cycle.len() {
                return Err(Error::Connectivity(format!(
                    "element {e} repeats a vertex"
                )));
            }
        }

        let mut centroids = Vec::with_capacity(elements.len());
        let mut areas = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        for (e, cycle) in elements.iter().enumerate() {
            let poly: Vec<Point> = cycle.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&poly);
            let h = diameter(&poly);
            if !(area > 1e-14 * h * h) {
                return Err(Error::ZeroArea { element: e, area });
            }
            let c = polygon_centroid(&poly);
            subtri::check_star_shaped(&poly, c).map_err(|_| Error::NotStarShaped { element: e })?;
            centroids.push(c);
            areas.push(area);
            diameters.push(h);
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        for (e, cycle) in elements.iter().enumerate() {
            let n = cycle.len();
            let mut local = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (cycle[i], cycle[(i + 1) % n]);
                let key = [a.min(b), a.max(b)];
                let id = match edge_ids.get(&key) {
                    Some(&id) => {
                        let edge = &mut edges[id];
                        if edge.right.is_some() || edge.left == e {
                            return Err(Error::Connectivity(format!(
                                "edge ({}, {}) is shared by more than two elements",
                                key[0], key[1]
                            )));
                        }
                        // Two consistently oriented neighbours traverse the
                        // shared edge in opposite directions.
                        let prev = &elements[edge.left];
                        let pi = prev.iter().position(|&v| v == a).unwrap();
                        if prev[(pi + prev.len() - 1) % prev.len()] != b {
                            return Err(Error::Connectivity(format!(
                                "elements {} and {e} traverse edge ({}, {}) in the same direction",
                                edge.left, key[0], key[1]
                            )));
                        }
                        edge.right = Some(e);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(Edge {
                            vertices: key,
                            left: e,
                            right: None,
                        });
                        edge_ids.insert(key, id);
                        id
                    }
                };
                local.push(id);
            }
            element_edges.push(local);
        }

        Ok(Self {
            vertices,
            elements,
            edges,
            element_edges,
            centroids,
            areas,
            diameters,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Global edge ids of element `e`, in local (counter-clockwise) order.
    pub fn element_edges(&self, e: usize) -> &[usize] {
        &self.element_edges[e]
    }

    pub fn element_polygon(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn centroid(&self, e: usize) -> Point {
        self.centroids[e]
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    /// Element diameter `h_T`.
    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    /// Mesh size `h = max h_T`.
    pub fn h(&self) -> f64 {
        self.diameters.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn edge_length(&self, id: usize) -> f64 {
        let [a, b] = self.edges[id].vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Element-local geometry in scaled coordinates `(x - x_T) / h_T`.
    pub fn element_geometry(&self, e: usize) -> ElementGeometry {
        let cycle = &self.elements[e];
        let c = self.centroids[e];
        let h = self.diameters[e];
        let scale = |p: Point| [(p[0] - c[0]) / h, (p[1] - c[1]) / h];
        let n = cycle.len();
        let vertices: Vec<Point> = cycle.iter().map(|&v| scale(self.vertices[v])).collect();
        let edges = (0..n)
            .map(|i| {
                let id = self.element_edges[e][i];
                let [lo, hi] = self.edges[id].vertices;
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let reversed = cycle[i] != lo;
                let (start, end) = if reversed { (b, a) } else { (a, b) };
                debug_assert!(!reversed || cycle[i] == hi);
                LocalEdge {
                    global: id,
                    start,
                    end,
                    normal: [d[1] / len, -d[0] / len],
                    length: len,
                    reversed,
                    boundary: self.edges[id].is_boundary(),
                }
            })
            .collect();
        ElementGeometry {
            id: e,
            centroid: c,
            h,
            area_scaled: self.areas[e] / (h * h),
            vertices,
            edges,
        }
    }

    /// A copy of the mesh with elements listed in the order given by `perm`
    /// (new element `i` is old element `perm[i]`).
    pub fn permuted_elements(&self, perm: &[usize]) -> Result<Self> {
        let elements = perm.iter().map(|&i| self.elements[i].clone()).collect();
        Self::new(self.vertices.clone(), elements)
    }
}

/// One edge of an element, seen from that element.
#[derive(Clone, Debug)]
pub struct LocalEdge {
    pub global: usize,
    /// Start and end of the edge in its global orientation (scaled
    /// coordinates). The edge parameter `s` runs from `start` to `end`.
    pub start: Point,
    pub end: Point,
    /// Outward unit normal of the element.
    pub normal: Point,
    /// Length in scaled coordinates.
    pub length: f64,
    /// Whether the counter-clockwise traversal opposes the global orientation.
    pub reversed: bool,
    pub boundary: bool,
}

impl LocalEdge {
    #[inline]
    pub fn point(&self, s: f64) -> Point {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }
}

/// Element geometry in scaled coordinates: the centroid maps to the origin
/// and the diameter to one.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    pub id: usize,
    pub centroid: Point,
    pub h: f64,
    pub area_scaled: f64,
    /// Counter-clockwise vertices, scaled.
    pub vertices: Vec<Point>,
    pub edges: Vec<LocalEdge>,
}

impl ElementGeometry {
    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn to_physical(&self, p: Point) -> Point {
        [
            self.centroid[0] + self.h * p[0],
            self.centroid[1] + self.h * p[1],
        ]
    }

    #[inline]
    pub fn to_scaled(&self, p: Point) -> Point {
        [
            (p[0] - self.centroid[0]) / self.h,
            (p[1] - self.centroid[1]) / self.h,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PolyMesh {
        PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_square_geometry() {
        let m = unit_square();
        assert_eq!(m.n_edges(), 4);
        assert_eq!(m.centroid(0), [0.5, 0.5]);
        assert!((m.diameter(0) - 2f64.sqrt()).abs() < 1e-15);
        let g = m.element_geometry(0);
        assert!((g.area_scaled - 0.5).abs() < 1e-15);
        // Only the closing edge 3 -> 0 runs against the global orientation.
        let rev: Vec<bool> = g.edges.iter().map(|e| e.reversed).collect();
        assert_eq!(rev, vec![false, false, false, true]);
        assert_eq!(g.edges[0].normal, [0.0, -1.0]);
        assert_eq!(g.edges[3].normal, [-1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_connectivity() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            PolyMesh::new(v.clone(), vec![vec![0, 1, 5]]),
            Err(Error::Connectivity(_))
        ));
        assert!(matches!(
            PolyMesh::new(v.clone(), vec![vec![0, 2, 1]]),
            Err(Error::ZeroArea { .. })
        ));
        let flat = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(
            PolyMesh::new(flat, vec![vec![0, 1, 2]]),
            Err(Error::ZeroArea { .. })
        ));
        // Three triangles on one edge.
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 0.5]];
        let r = PolyMesh::new(v, vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]]);
        assert!(matches!(r, Err(Error::Connectivity(_))));
    }

    #[test]
    fn rejects_non_star_shaped() {
        // A thin "C" shape whose centroid lies outside the polygon.
        let v = vec![
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 0.2],
            [0.2, 0.2],
            [0.2, 2.8],
            [3.0, 2.8],
            [3.0, 3.0],
            [0.0, 3.0],
        ];
        let r = PolyMesh::new(v, vec![(0..8).collect()]);
        assert!(matches!(r, Err(Error::NotStarShaped { element: 0 })));
    }
}
