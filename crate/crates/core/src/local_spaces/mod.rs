//! Per-element polynomial bases.
//!
//! All bases live in scaled coordinates `ξ = (x - x_T) / h_T`. Vector-valued
//! interior and edge functions carry one scalar monomial in one component.

mod lambda;

pub use lambda::{
    build_lambda_basis, lambda_basis_for, project_onto_lambda, LambdaBasis, LambdaTabulation,
};

use nalgebra::{DMatrix, DVector};

use crate::mesh::{ElementGeometry, PolyMesh, SubTriangulation};
use crate::polynomial::{eval_monomials, n_monomials};
use crate::quadrature::{edge_rule, map_rule, triangle_rule, Domain, QuadRule};

/// Local degrees of freedom of one element.
///
/// Velocity DOFs are ordered interior first (`c * dim P_k + m` for
/// component `c` and monomial `m`), then edge by edge in counter-clockwise
/// order (`c * (k + 2) + j` within an edge, for the edge function `s^j`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementBasis {
    pub element: usize,
    pub k: usize,
    pub n_edges: usize,
}

pub fn build_element_basis(mesh: &PolyMesh, element: usize, k: usize) -> ElementBasis {
    ElementBasis {
        element,
        k,
        n_edges: mesh.element_edges(element).len(),
    }
}

impl ElementBasis {
    pub fn n_interior_scalar(&self) -> usize {
        n_monomials(2, self.k)
    }

    pub fn n_interior(&self) -> usize {
        2 * self.n_interior_scalar()
    }

    /// Scalar edge functions per edge.
    pub fn n_edge_scalar(&self) -> usize {
        self.k + 2
    }

    pub fn n_per_edge(&self) -> usize {
        2 * self.n_edge_scalar()
    }

    pub fn n_velocity(&self) -> usize {
        self.n_interior() + self.n_edges * self.n_per_edge()
    }

    pub fn n_pressure(&self) -> usize {
        n_monomials(2, self.k + 1)
    }

    #[inline]
    pub fn interior_dof(&self, c: usize, m: usize) -> usize {
        c * self.n_interior_scalar() + m
    }

    #[inline]
    pub fn edge_dof(&self, edge: usize, c: usize, j: usize) -> usize {
        self.n_interior() + edge * self.n_per_edge() + c * self.n_edge_scalar() + j
    }

    /// Interior velocity function `i` at scaled point `xi`.
    pub fn eval_interior(&self, i: usize, xi: [f64; 2]) -> [f64; 2] {
        let nm = self.n_interior_scalar();
        let mut vals = vec![0.0; nm];
        eval_monomials(self.k, xi[0], xi[1], &mut vals);
        let mut out = [0.0; 2];
        out[i / nm] = vals[i % nm];
        out
    }

    /// Pressure function `i` at scaled point `xi`.
    pub fn eval_pressure(&self, i: usize, xi: [f64; 2]) -> f64 {
        let mut vals = vec![0.0; self.n_pressure()];
        eval_monomials(self.k + 1, xi[0], xi[1], &mut vals);
        vals[i]
    }

    /// Edge function `i` (`c * (k + 2) + j`) at edge parameter `s`.
    pub fn eval_edge(&self, i: usize, s: f64) -> [f64; 2] {
        let ne = self.n_edge_scalar();
        let mut out = [0.0; 2];
        out[i / ne] = s.powi((i % ne) as i32);
        out
    }
}

/// Quadrature over a polygon through its sub-triangles, one rule per piece.
pub fn subtriangle_rules(sub: &SubTriangulation, degree: usize) -> Vec<QuadRule> {
    let reference = triangle_rule(degree);
    sub.triangles
        .iter()
        .map(|&[a, b, c]| map_rule(&reference, &Domain::Triangle(a, b, c)).expect("valid sub-triangle"))
        .collect()
}

/// Same as [`subtriangle_rules`] for the scaled element itself.
pub fn element_rules(geom: &ElementGeometry, degree: usize) -> Vec<QuadRule> {
    let sub = crate::mesh::subtriangulate_polygon(&geom.vertices, geom.id)
        .expect("element was validated on construction");
    subtriangle_rules(&sub, degree)
}

/// Extra quadrature degree used when projecting non-polynomial data.
pub const DATA_QUAD_BUMP: usize = 4;

/// `L²` projection of a scalar function onto `P_degree` of the element, in
/// scaled monomials. `f` takes physical coordinates; `quad_degree` is the
/// rule's exactness.
pub fn project_scalar(
    geom: &ElementGeometry,
    degree: usize,
    quad_degree: usize,
    f: impl Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    let nm = n_monomials(2, degree);
    let mut mass = DMatrix::<f64>::zeros(nm, nm);
    let mut rhs = DVector::<f64>::zeros(nm);
    let mut mon = vec![0.0; nm];
    for rule in element_rules(geom, quad_degree.max(2 * degree)) {
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(degree, p[0], p[1], &mut mon);
            let v = f(geom.to_physical(*p));
            for a in 0..nm {
                rhs[a] += w * v * mon[a];
                for b in 0..nm {
                    mass[(a, b)] += w * mon[a] * mon[b];
                }
            }
        }
    }
    solve_spd(mass, rhs)
}

/// `L²` projection onto `P_degree` of the segment `a -> b` (physical
/// points), in the monomials `s^j` of the parameter `s ∈ [0, 1]`.
pub fn project_on_segment(
    a: [f64; 2],
    b: [f64; 2],
    degree: usize,
    quad_degree: usize,
    f: impl Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    let n = degree + 1;
    let rule = edge_rule(quad_degree.max(2 * degree));
    let mut mass = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (p, &w) in rule.points.iter().zip(&rule.weights) {
        let s = p[0];
        let v = f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        for i in 0..n {
            let si = s.powi(i as i32);
            rhs[i] += w * v * si;
            for j in 0..n {
                mass[(i, j)] += w * si * s.powi(j as i32);
            }
        }
    }
    solve_spd(mass, rhs)
}

fn solve_spd(mass: DMatrix<f64>, rhs: DVector<f64>) -> Vec<f64> {
    let chol = nalgebra::Cholesky::new(mass).expect("monomial mass matrix is positive definite");
    chol.solve(&rhs).iter().copied().collect()
}

/// Local velocity DOFs of the projection `Q_h u`: interior part onto
/// `[P_k(T)]²`, edge parts onto `[P_{k+1}(e)]²` in the global edge
/// orientation.
pub fn project_velocity_local(
    geom: &ElementGeometry,
    k: usize,
    quad_degree: usize,
    u: impl Fn([f64; 2]) -> [f64; 2],
) -> Vec<f64> {
    let nm0 = n_monomials(2, k);
    let n_edges = geom.n_edges();
    let mut out = vec![0.0; 2 * nm0 + n_edges * 2 * (k + 2)];
    for c in 0..2 {
        let q0 = project_scalar(geom, k, quad_degree, |x| u(x)[c]);
        out[c * nm0..(c + 1) * nm0].copy_from_slice(&q0);
        for (l, e) in geom.edges.iter().enumerate() {
            let (a, b) = (geom.to_physical(e.start), geom.to_physical(e.end));
            let qb = project_on_segment(a, b, k + 1, quad_degree, |x| u(x)[c]);
            let off = 2 * nm0 + l * 2 * (k + 2) + c * (k + 2);
            out[off..off + k + 2].copy_from_slice(&qb);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_square_grid, PolyMesh};

    #[test]
    fn dof_counts() {
        let tri = PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let b = build_element_basis(&tri, 0, 0);
        assert_eq!((b.n_velocity(), b.n_pressure()), (14, 3));
        let sq = gen_square_grid(1).unwrap();
        let b = build_element_basis(&sq, 0, 1);
        assert_eq!((b.n_interior(), b.n_velocity(), b.n_pressure()), (6, 30, 6));
        for k in 0..4 {
            let b = build_element_basis(&sq, 0, k);
            assert_eq!(b.n_interior(), (k + 1) * (k + 2));
            assert_eq!(b.n_pressure(), (k + 2) * (k + 3) / 2);
            assert_eq!(b.n_per_edge(), 2 * (k + 2));
        }
    }

    #[test]
    fn dof_layout_is_a_bijection() {
        let sq = gen_square_grid(1).unwrap();
        let b = build_element_basis(&sq, 0, 2);
        let mut seen = vec![false; b.n_velocity()];
        for c in 0..2 {
            for m in 0..b.n_interior_scalar() {
                seen[b.interior_dof(c, m)] = true;
            }
            for e in 0..4 {
                for j in 0..b.n_edge_scalar() {
                    seen[b.edge_dof(e, c, j)] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn bases_are_finite_at_vertices() {
        let sq = gen_square_grid(3).unwrap();
        let g = sq.element_geometry(4);
        let b = build_element_basis(&sq, 4, 2);
        for &v in &g.vertices {
            assert!(v[0].abs() <= 1.0 && v[1].abs() <= 1.0);
            for i in 0..b.n_interior() {
                assert!(b.eval_interior(i, v).iter().all(|x| x.is_finite()));
            }
            for i in 0..b.n_pressure() {
                assert!(b.eval_pressure(i, v).abs() <= 1.0);
            }
        }
        assert_eq!(b.eval_edge(b.n_edge_scalar() + 1, 0.5), [0.0, 0.5]);
    }

    #[test]
    fn projections_reproduce_polynomials() {
        let m = crate::mesh::gen_polygon_grid(3).unwrap();
        let g = m.element_geometry(7);
        let u = |x: [f64; 2]| [x[0] * x[1] - 2.0, x[1].powi(2) + x[0]];
        let v = project_velocity_local(&g, 2, 4, u);
        let b = build_element_basis(&m, 7, 2);
        let p = [0.1, -0.2];
        let mut got = [0.0; 2];
        for i in 0..b.n_interior() {
            let f = b.eval_interior(i, p);
            got[0] += v[i] * f[0];
            got[1] += v[i] * f[1];
        }
        let want = u(g.to_physical(p));
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
        let e = &g.edges[2];
        let s = 0.3;
        let mut got = [0.0; 2];
        for i in 0..b.n_per_edge() {
            let f = b.eval_edge(i, s);
            let c = v[b.edge_dof(2, 0, 0) + i];
            got[0] += c * f[0];
            got[1] += c * f[1];
        }
        let want = u(g.to_physical(e.point(s)));
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn element_rules_cover_the_area() {
        let sq = gen_square_grid(2).unwrap();
        let g = sq.element_geometry(1);
        let area: f64 = element_rules(&g, 3).iter().map(|r| r.integrate(|_| 1.0)).sum();
        assert!((area - g.area_scaled).abs() < 1e-14);
    }
}
