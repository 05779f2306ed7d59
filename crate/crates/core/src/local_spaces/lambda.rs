//! The weak-gradient space on one element.
//!
//! Members are 2x2 matrix fields, piecewise `[P_{k+1}]^{2x2}` on the fan
//! sub-triangulation, whose rows have continuous normal traces across the
//! interior sub-edges and whose row divergences form one polynomial of
//! degree `k` on the whole element. The constraints act row by row with the
//! same coefficients, so the space is the row-wise product of a vector space
//! `Σ` with itself: member `r * dim Σ + j` has row `r` equal to `σ_j` and the
//! other row zero.
//!
//! `Σ` is computed as the null space of the constraint system, with an
//! auxiliary unknown standing for the common divergence, and then
//! orthonormalized in `L²` of the scaled element. In physical coordinates the
//! members are `σ_j / h_T`, which makes them orthonormal in `L²(T)`.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::subtriangle_rules;
use crate::mesh::{subtriangulate_polygon, ElementGeometry, PolyMesh, SubTriangulation};
use crate::polynomial::{eval_monomials, eval_monomials_grad, n_monomials, Axis, Polynomial};
use crate::quadrature::{edge_rule, map_rule, Domain};
use crate::{Error, Result};

const RANK_CUTOFF: f64 = 1e-10;
const GRAM_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LambdaBasis {
    pub element: usize,
    pub k: usize,
    pub h: f64,
    sub: SubTriangulation,
    /// Column `j` holds `σ_j` over the broken space, indexed
    /// `(t * 2 + c) * dim P_{k+1} + m`.
    coeffs: DMatrix<f64>,
}

/// Values and divergences of every `σ_j` at one point.
#[derive(Clone, Debug)]
pub struct LambdaTabulation {
    pub values: Vec<[f64; 2]>,
    pub divergence: Vec<f64>,
}

pub fn build_lambda_basis(mesh: &PolyMesh, element: usize, k: usize) -> Result<LambdaBasis> {
    lambda_basis_for(&mesh.element_geometry(element), k)
}

pub fn lambda_basis_for(geom: &ElementGeometry, k: usize) -> Result<LambdaBasis> {
    let sub = subtriangulate_polygon(&geom.vertices, geom.id)?;
    let nm1 = n_monomials(2, k + 1);
    let nm0 = n_monomials(2, k);
    let n_tri = sub.n_triangles();
    let n_sig = n_tri * 2 * nm1;
    let n_unk = n_sig + nm0;
    let var = |t: usize, c: usize, m: usize| (t * 2 + c) * nm1 + m;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut mon = vec![0.0; nm1];
    let mut dx = vec![0.0; nm1];
    let mut dy = vec![0.0; nm1];

    let erule = edge_rule(2 * k + 2);
    for e in &sub.interior_edges {
        let seg = map_rule(&erule, &Domain::Segment(e.a, e.b))?;
        for j in 0..=k + 1 {
            let mut row = vec![0.0; n_unk];
            for ((p, w), s) in seg.points.iter().zip(&seg.weights).zip(&erule.points) {
                eval_monomials(k + 1, p[0], p[1], &mut mon);
                let ws = w * s[0].powi(j as i32);
                for c in 0..2 {
                    for m in 0..nm1 {
                        let v = ws * mon[m] * e.normal[c];
                        row[var(e.left, c, m)] += v;
                        row[var(e.right, c, m)] -= v;
                    }
                }
            }
            rows.push(row);
        }
    }

    let trules = subtriangle_rules(&sub, 2 * k + 1);
    for (t, rule) in trules.iter().enumerate() {
        for mt in 0..nm0 {
            let mut row = vec![0.0; n_unk];
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                eval_monomials_grad(k + 1, p[0], p[1], &mut mon, &mut dx, &mut dy);
                let test = w * mon[mt];
                for m in 0..nm1 {
                    row[var(t, 0, m)] += test * dx[m];
                    row[var(t, 1, m)] += test * dy[m];
                }
                for m in 0..nm0 {
                    row[n_sig + m] -= test * mon[m];
                }
            }
            rows.push(row);
        }
    }

    // The SVD is thin, so pad to square to get a full set of right singular
    // vectors.
    let mut c = DMatrix::<f64>::zeros(n_unk, n_unk);
    for (i, row) in rows.iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, v) in row.iter().enumerate() {
            c[(i, j)] = v / norm;
        }
    }
    let svd = SVD::new(c, false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let mut null = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let ratio = s / sigma_max;
        if ratio > 0.1 * RANK_CUTOFF && ratio < 10.0 * RANK_CUTOFF {
            return Err(Error::AmbiguousRank {
                element: geom.id,
                ratio,
                cutoff: RANK_CUTOFF,
            });
        }
        if ratio <= RANK_CUTOFF {
            null.push(i);
        }
    }
    // Sort for a reproducible basis independent of the SVD's internal order.
    null.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    let mut n_sigma = DMatrix::<f64>::zeros(n_sig, null.len());
    for (col, &i) in null.iter().enumerate() {
        for r in 0..n_sig {
            n_sigma[(r, col)] = v_t[(i, r)];
        }
    }

    let mass = broken_mass(&sub, k, 2 * k + 2);
    let gram = n_sigma.transpose() * &mass * &n_sigma;
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.max();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > GRAM_CUTOFF * lmax)
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut coeffs = DMatrix::<f64>::zeros(n_sig, order.len());
    for (col, &i) in order.iter().enumerate() {
        let v = &n_sigma * eig.eigenvectors.column(i);
        let s = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..n_sig {
            coeffs[(r, col)] = v[r] * s;
        }
    }
    // One more pass removes the rounding left by the eigen-solve.
    let g2 = coeffs.transpose() * &mass * &coeffs;
    let n = g2.nrows();
    let l = nalgebra::Cholesky::new((&g2 + g2.transpose()) * 0.5)
        .ok_or(Error::SingularMass { element: geom.id })?
        .unpack();
    let linv = l
        .solve_lower_triangular(&DMatrix::<f64>::identity(n, n))
        .ok_or(Error::SingularMass { element: geom.id })?;
    let mut coeffs = coeffs * linv.transpose();
    // Fix the sign of each member for reproducibility.
    for mut col in coeffs.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }

    Ok(LambdaBasis {
        element: geom.id,
        k,
        h: geom.h,
        sub,
        coeffs,
    })
}

/// Block-diagonal `L²` Gram matrix of the broken monomial space.
fn broken_mass(sub: &SubTriangulation, k: usize, degree: usize) -> DMatrix<f64> {
    let nm1 = n_monomials(2, k + 1);
    let n = sub.n_triangles() * 2 * nm1;
    let mut mass = DMatrix::<f64>::zeros(n, n);
    let mut mon = vec![0.0; nm1];
    for (t, rule) in subtriangle_rules(sub, degree).iter().enumerate() {
        let mut block = DMatrix::<f64>::zeros(nm1, nm1);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(k + 1, p[0], p[1], &mut mon);
            for a in 0..nm1 {
                for b in 0..nm1 {
                    block[(a, b)] += w * mon[a] * mon[b];
                }
            }
        }
        for c in 0..2 {
            let off = (t * 2 + c) * nm1;
            mass.view_mut((off, off), (nm1, nm1)).copy_from(&block);
        }
    }
    mass
}

impl LambdaBasis {
    pub fn n_tri(&self) -> usize {
        self.sub.n_triangles()
    }

    /// `dim Σ`.
    pub fn row_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// `dim Λ = 2 dim Σ`.
    pub fn dim(&self) -> usize {
        2 * self.row_dim()
    }

    /// Sub-triangulation in scaled coordinates.
    pub fn sub_triangulation(&self) -> &SubTriangulation {
        &self.sub
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    fn nm1(&self) -> usize {
        n_monomials(2, self.k + 1)
    }

    /// `σ_j` restricted to sub-triangle `t`, as two polynomials in scaled
    /// coordinates.
    pub fn row_polynomials(&self, j: usize, t: usize) -> [Polynomial; 2] {
        let nm1 = self.nm1();
        let piece = |c: usize| {
            let off = (t * 2 + c) * nm1;
            let cf = self.coeffs.column(j).rows(off, nm1).iter().copied().collect();
            Polynomial::from_coeffs(2, self.k + 1, cf).expect("coefficient count")
        };
        [piece(0), piece(1)]
    }

    /// Values and divergences of all `σ_j` on sub-triangle `t` at scaled
    /// point `xi`.
    pub fn tabulate(&self, t: usize, xi: [f64; 2]) -> LambdaTabulation {
        let nm1 = self.nm1();
        let mut mon = vec![0.0; nm1];
        let mut dx = vec![0.0; nm1];
        let mut dy = vec![0.0; nm1];
        eval_monomials_grad(self.k + 1, xi[0], xi[1], &mut mon, &mut dx, &mut dy);
        let (o0, o1) = (2 * t * nm1, (2 * t + 1) * nm1);
        let n = self.row_dim();
        let mut values = Vec::with_capacity(n);
        let mut divergence = Vec::with_capacity(n);
        for col in self.coeffs.column_iter() {
            let (mut v0, mut v1, mut div) = (0.0, 0.0, 0.0);
            for m in 0..nm1 {
                let (a, b) = (col[o0 + m], col[o1 + m]);
                v0 += a * mon[m];
                v1 += b * mon[m];
                div += a * dx[m] + b * dy[m];
            }
            values.push([v0, v1]);
            divergence.push(div);
        }
        LambdaTabulation { values, divergence }
    }

    /// Member `i` in physical scaling, on sub-triangle `t` at scaled point
    /// `xi`.
    pub fn eval(&self, i: usize, t: usize, xi: [f64; 2]) -> [[f64; 2]; 2] {
        let n = self.row_dim();
        let (r, j) = (i / n, i % n);
        let v = self.tabulate(t, xi).values[j];
        let mut out = [[0.0; 2]; 2];
        out[r] = [v[0] / self.h, v[1] / self.h];
        out
    }

    /// `Σ_i coeffs[i] τ_i` on sub-triangle `t` at scaled point `xi`.
    pub fn evaluate(&self, coeffs: &[f64], t: usize, xi: [f64; 2]) -> [[f64; 2]; 2] {
        let n = self.row_dim();
        let tab = self.tabulate(t, xi);
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            for j in 0..n {
                let c = coeffs[r * n + j] / self.h;
                out[r][0] += c * tab.values[j][0];
                out[r][1] += c * tab.values[j][1];
            }
        }
        out
    }

    /// `L²(T)` projection coefficients of a matrix field given piecewise by
    /// `tau(t, xi)` in physical units; `degree` bounds its polynomial degree.
    pub fn project(&self, tau: impl Fn(usize, [f64; 2]) -> [[f64; 2]; 2], degree: usize) -> Vec<f64> {
        let n = self.row_dim();
        let mut out = vec![0.0; 2 * n];
        for (t, rule) in subtriangle_rules(&self.sub, degree + self.k + 1).iter().enumerate() {
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                let v = tau(t, *p);
                let tab = self.tabulate(t, *p);
                // Physical measure h² times the member scaling 1/h.
                let wh = w * self.h;
                for r in 0..2 {
                    for j in 0..n {
                        out[r * n + j] += wh * (v[r][0] * tab.values[j][0] + v[r][1] * tab.values[j][1]);
                    }
                }
            }
        }
        out
    }

    /// Largest violation of the two constraint families over all members,
    /// relative to the member's largest coefficient. Normal jumps are
    /// sampled pointwise along each sub-edge; divergences are compared
    /// coefficient by coefficient after exact differentiation.
    pub fn constraint_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.row_dim() {
            let pieces: Vec<[Polynomial; 2]> =
                (0..self.n_tri()).map(|t| self.row_polynomials(j, t)).collect();
            let scale = self.coeffs.column(j).amax();
            for e in &self.sub.interior_edges {
                for q in 0..=8 {
                    let s = q as f64 / 8.0;
                    let x = e.a[0] + s * (e.b[0] - e.a[0]);
                    let y = e.a[1] + s * (e.b[1] - e.a[1]);
                    let flux = |p: &[Polynomial; 2]| p[0].eval2(x, y) * e.normal[0] + p[1].eval2(x, y) * e.normal[1];
                    let jump = flux(&pieces[e.left]) - flux(&pieces[e.right]);
                    worst = worst.max(jump.abs() / scale);
                }
            }
            let divs: Vec<Polynomial> = pieces
                .iter()
                .map(|p| &p[0].diff(Axis::X) + &p[1].diff(Axis::Y))
                .collect();
            for d in &divs[1..] {
                let diff = d - &divs[0];
                worst = worst.max(diff.max_abs_coeff() / scale);
            }
        }
        worst
    }

    /// Largest relative `L²` distance from a global matrix monomial to the
    /// span of the basis.
    pub fn containment_residual(&self) -> f64 {
        let nm1 = self.nm1();
        let n_tri = self.n_tri();
        let mass = broken_mass(&self.sub, self.k, 2 * self.k + 2);
        let mut worst = 0.0f64;
        // Rows decouple, so testing one row of each matrix monomial suffices
        // for both rows.
        for c in 0..2 {
            for m in 0..nm1 {
                let mut psi = nalgebra::DVector::<f64>::zeros(n_tri * 2 * nm1);
                for t in 0..n_tri {
                    psi[(t * 2 + c) * nm1 + m] = 1.0;
                }
                let proj = self.coeffs.transpose() * (&mass * &psi);
                let resid = &psi - &self.coeffs * proj;
                let norm2 = psi.dot(&(&mass * &psi));
                let r2 = resid.dot(&(&mass * &resid)).max(0.0);
                worst = worst.max((r2 / norm2).sqrt());
            }
        }
        worst
    }

    /// `max |G - I|` for the Gram matrix of the members, recomputed with a
    /// higher-order rule.
    pub fn gram_defect(&self) -> f64 {
        let mass = broken_mass(&self.sub, self.k, 2 * self.k + 6);
        let g = self.coeffs.transpose() * mass * &self.coeffs;
        let n = g.nrows();
        (g - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Free-function form of [`LambdaBasis::project`].
pub fn project_onto_lambda(
    tau: impl Fn(usize, [f64; 2]) -> [[f64; 2]; 2],
    degree: usize,
    basis: &LambdaBasis,
) -> Vec<f64> {
    basis.project(tau, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_polygon_grid, gen_square_grid};

    fn triangle() -> PolyMesh {
        PolyMesh::new(vec![[0.1, 0.0], [1.0, 0.2], [0.3, 0.9]], vec![vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn triangle_space_is_full() {
        for k in 0..4 {
            let b = build_lambda_basis(&triangle(), 0, k).unwrap();
            assert_eq!(b.dim(), 2 * (k + 2) * (k + 3), "k = {k}");
        }
    }

    #[test]
    fn square_dimensions() {
        let m = gen_square_grid(1).unwrap();
        let b0 = build_lambda_basis(&m, 0, 0).unwrap();
        assert!(b0.dim() >= 12);
        assert_eq!(b0.dim(), 26);
        assert_eq!(build_lambda_basis(&m, 0, 1).unwrap().dim(), 54);
    }

    #[test]
    fn basis_is_valid_on_every_shape() {
        let m = gen_polygon_grid(3).unwrap();
        for k in 0..3 {
            for e in 0..m.n_elements() {
                let b = build_lambda_basis(&m, e, k).unwrap();
                let r = [b.constraint_residual(), b.containment_residual(), b.gram_defect()];
                assert!(r.iter().all(|&v| v <= 1e-10), "e {e} k {k}: {r:?}");
            }
        }
    }

    #[test]
    fn dimension_is_invariant_under_similarity() {
        let hex: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 3.0 + 0.1 * (i % 2) as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let place = |scale: f64, angle: f64, shift: [f64; 2]| {
            let (s, c) = angle.sin_cos();
            let v = hex
                .iter()
                .map(|p| [scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]])
                .collect();
            PolyMesh::new(v, vec![(0..6).collect()]).unwrap()
        };
        for k in 0..3 {
            let d0 = build_lambda_basis(&place(1.0, 0.0, [0.0, 0.0]), 0, k).unwrap().dim();
            let d1 = build_lambda_basis(&place(1e-3, 0.7, [5.0, -2.0]), 0, k).unwrap().dim();
            let d2 = build_lambda_basis(&place(40.0, 2.0, [0.3, 0.3]), 0, k).unwrap().dim();
            assert_eq!((d0, d1), (d1, d2));
        }
    }

    #[test]
    fn projection_reproduces_members_and_gradients() {
        let m = gen_polygon_grid(2).unwrap();
        let e = (0..m.n_elements()).find(|&e| m.element_edges(e).len() == 6).unwrap();
        let b = build_lambda_basis(&m, e, 1).unwrap();
        let g = m.element_geometry(e);

        let constant = [[1.5, -0.25], [0.75, 2.0]];
        let c = b.project(|_, _| constant, 0);
        for t in 0..b.n_tri() {
            let back = b.evaluate(&c, t, [0.01, -0.02]);
            for r in 0..2 {
                for s in 0..2 {
                    assert!((back[r][s] - constant[r][s]).abs() <= 1e-11 * 2.0);
                }
            }
        }

        // Gradient of u = (x^2 y, x y^2 - y^3) in physical coordinates.
        let grad = |p: [f64; 2]| {
            let [x, y] = g.to_physical(p);
            [[2.0 * x * y, x * x], [y * y, 2.0 * x * y - 3.0 * y * y]]
        };
        let c = b.project(|_, p| grad(p), 3);
        let p = [0.05, 0.1];
        let back = b.evaluate(&c, 0, p);
        let want = grad(p);
        for r in 0..2 {
            for s in 0..2 {
                assert!((back[r][s] - want[r][s]).abs() <= 1e-11, "{back:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let m = gen_square_grid(2).unwrap();
        let b = build_lambda_basis(&m, 3, 1).unwrap();
        // A discontinuous piecewise field.
        let tau = |t: usize, p: [f64; 2]| {
            let s = t as f64 + 1.0;
            [[s * p[0] * p[1], p[0].powi(3)], [s.sqrt() - p[1], (s * p[0]).sin()]]
        };
        let once = b.project(tau, 6);
        let twice = b.project(|t, p| b.evaluate(&once, t, p), b.k + 1);
        for (a, c) in once.iter().zip(&twice) {
            assert!((a - c).abs() <= 1e-12 * once.iter().fold(1.0f64, |m, v| m.max(v.abs())));
        }
    }
}
