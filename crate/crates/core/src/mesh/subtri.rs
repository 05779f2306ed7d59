use super::{polygon_centroid, signed_area, Point, PolyMesh};
use crate::{Error, Result};

/// Interior edge of a sub-triangulation, shared by two sub-triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct SubEdge {
    pub left: usize,
    pub right: usize,
    pub a: Point,
    pub b: Point,
    /// Unit normal pointing from `left` into `right`.
    pub normal: Point,
}

/// Fan triangulation of one polygon from its centroid.
///
/// Triangle `i` is `(centroid, v_i, v_{i+1})` and contains parent edge `i`
/// as its edge opposite the centroid. A triangular parent is kept whole.
#[derive(Clone, Debug, PartialEq)]
pub struct SubTriangulation {
    pub parent: usize,
    pub triangles: Vec<[Point; 3]>,
    pub interior_edges: Vec<SubEdge>,
}

impl SubTriangulation {
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Index of the sub-triangle containing parent edge `edge`.
    pub fn triangle_of_edge(&self, edge: usize) -> usize {
        if self.triangles.len() == 1 {
            0
        } else {
            edge
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }
}

pub(crate) fn check_star_shaped(poly: &[Point], c: Point) -> Result<()> {
    let n = poly.len();
    let area = signed_area(poly);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let tri = 0.5 * ((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]));
        if !(tri > 1e-12 * area) {
            return Err(Error::NotStarShaped { element: 0 });
        }
    }
    Ok(())
}

/// Fan sub-triangulation of a counter-clockwise polygon.
pub fn subtriangulate_polygon(poly: &[Point], parent: usize) -> Result<SubTriangulation> {
    let n = poly.len();
    if n == 3 {
        return Ok(SubTriangulation {
            parent,
            triangles: vec![[poly[0], poly[1], poly[2]]],
            interior_edges: Vec::new(),
        });
    }
    let c = polygon_centroid(poly);
    check_star_shaped(poly, c).map_err(|_| Error::NotStarShaped { element: parent })?;
    let triangles = (0..n).map(|i| [c, poly[i], poly[(i + 1) % n]]).collect();
    // Sub-edge c -> v_i separates triangle i-1 (left) from triangle i.
    let interior_edges = (0..n)
        .map(|i| {
            let v = poly[i];
            let d = [c[0] - v[0], c[1] - v[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            SubEdge {
                left: (i + n - 1) % n,
                right: i,
                a: c,
                b: v,
                normal: [d[1] / len, -d[0] / len],
            }
        })
        .collect();
    Ok(SubTriangulation {
        parent,
        triangles,
        interior_edges,
    })
}

/// Fan sub-triangulation of element `element` in physical coordinates.
pub fn subtriangulate(mesh: &PolyMesh, element: usize) -> Result<SubTriangulation> {
    subtriangulate_polygon(&mesh.element_polygon(element), element)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regular(n: usize, r: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [r * t.cos() + 0.3, r * t.sin() - 0.1]
            })
            .collect()
    }

    #[test]
    fn triangle_is_kept() {
        let t = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let s = subtriangulate_polygon(&t, 0).unwrap();
        assert_eq!(s.n_triangles(), 1);
        assert!(s.interior_edges.is_empty());
        assert_eq!(s.triangles[0], [t[0], t[1], t[2]]);
    }

    #[test]
    fn square_fan() {
        let q = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let s = subtriangulate_polygon(&q, 0).unwrap();
        assert_eq!(s.n_triangles(), 4);
        assert_eq!(s.interior_edges.len(), 4);
        let total: f64 = (0..4).map(|t| s.triangle_area(t)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hexagon_fan_areas_and_normals() {
        let hex = regular(6, 0.7);
        let s = subtriangulate_polygon(&hex, 3).unwrap();
        assert_eq!(s.n_triangles(), 6);
        let total: f64 = (0..6).map(|t| s.triangle_area(t)).sum();
        // Shoelace area as the independent reference.
        let shoelace = signed_area(&hex);
        assert!((total - shoelace).abs() <= 1e-12 * shoelace);
        for t in 0..6 {
            assert!(s.triangle_area(t) > 0.0);
            // Parent edge t is the edge opposite the centroid.
            assert_eq!(s.triangles[t][1], hex[t]);
            assert_eq!(s.triangles[t][2], hex[(t + 1) % 6]);
        }
        for e in &s.interior_edges {
            let len = (e.normal[0].powi(2) + e.normal[1].powi(2)).sqrt();
            assert!((len - 1.0).abs() < 1e-14);
            // The normal points away from the left triangle's centroid.
            let tl = s.triangles[e.left];
            let gl = [
                (tl[0][0] + tl[1][0] + tl[2][0]) / 3.0,
                (tl[0][1] + tl[1][1] + tl[2][1]) / 3.0,
            ];
            let m = [(e.a[0] + e.b[0]) / 2.0, (e.a[1] + e.b[1]) / 2.0];
            let dot = (m[0] - gl[0]) * e.normal[0] + (m[1] - gl[1]) * e.normal[1];
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn non_star_shaped_is_rejected() {
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
        assert!(matches!(
            subtriangulate_polygon(&v, 7),
            Err(Error::NotStarShaped { element: 7 })
        ));
    }
}
