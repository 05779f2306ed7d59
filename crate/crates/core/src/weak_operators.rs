//! Element-local weak gradient and weak divergence.
//!
//! For a local velocity `v = {v_0, v_b}` the weak gradient is the member of
//! `Λ_k(T)` with
//! `(∇_w v, τ)_T = -(v_0, ∇·τ)_T + <v_b, τ n>_{∂T}` for all `τ ∈ Λ_k(T)`,
//! and the weak divergence is the member of `P_{k+1}(T)` with
//! `(∇_w·v, w)_T = -(v_0, ∇w)_T + <v_b·n, w>_{∂T}`.
//! The gradient matrix `G` holds coefficients in the orthonormal `Λ` basis,
//! so `|∇_w v|² = |G v|²`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::local_spaces::{
    element_rules, lambda_basis_for, ElementBasis, LambdaBasis,
};
use crate::mesh::{ElementGeometry, PolyMesh};
use crate::polynomial::{eval_monomials, eval_monomials_grad, n_monomials};
use crate::quadrature::edge_rule;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LocalOperators {
    pub element: usize,
    pub k: usize,
    pub geometry: ElementGeometry,
    pub basis: ElementBasis,
    pub lambda: LambdaBasis,
    /// `dim Λ x n_vel`.
    pub g: DMatrix<f64>,
    /// `dim P_{k+1} x n_vel`, coefficients of the weak divergence.
    pub d: DMatrix<f64>,
    /// `GᵀG`.
    pub a: DMatrix<f64>,
    /// `(∇_w·φ_j, w_i)_T`.
    pub b: DMatrix<f64>,
    /// Pressure mass matrix on `T`.
    pub mass_p: DMatrix<f64>,
    /// Scalar `P_k` mass matrix on `T`.
    pub mass_0: DMatrix<f64>,
    /// `∫_T w_i`.
    pub pressure_mean: Vec<f64>,
}

/// Gradient matrix in the orthonormal `Λ` basis.
pub fn weak_gradient(
    geom: &ElementGeometry,
    basis: &ElementBasis,
    lambda: &LambdaBasis,
) -> DMatrix<f64> {
    let k = basis.k;
    let nm0 = n_monomials(2, k);
    let nrow = lambda.row_dim();
    // Scalar block: rows σ_j, columns interior monomials then edge powers.
    let n_edge = basis.n_edge_scalar();
    let n_scalar = nm0 + basis.n_edges * n_edge;
    let mut gs = DMatrix::<f64>::zeros(nrow, n_scalar);
    let mut mon = vec![0.0; nm0];
    let sub = lambda.sub_triangulation();
    for (t, rule) in crate::local_spaces::subtriangle_rules(sub, 2 * k).iter().enumerate() {
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(k, p[0], p[1], &mut mon);
            let tab = lambda.tabulate(t, *p);
            for j in 0..nrow {
                let wd = w * tab.divergence[j];
                for m in 0..nm0 {
                    gs[(j, m)] -= wd * mon[m];
                }
            }
        }
    }
    let erule = edge_rule(2 * k + 2);
    for (l, e) in geom.edges.iter().enumerate() {
        let t = sub.triangle_of_edge(l);
        for (p, &w) in erule.points.iter().zip(&erule.weights) {
            let s = p[0];
            let tab = lambda.tabulate(t, e.point(s));
            let wl = w * e.length;
            for j in 0..nrow {
                let flux = tab.values[j][0] * e.normal[0] + tab.values[j][1] * e.normal[1];
                for i in 0..n_edge {
                    gs[(j, nm0 + l * n_edge + i)] += wl * flux * s.powi(i as i32);
                }
            }
        }
    }

    let mut g = DMatrix::<f64>::zeros(2 * nrow, basis.n_velocity());
    for r in 0..2 {
        for j in 0..nrow {
            for m in 0..nm0 {
                g[(r * nrow + j, basis.interior_dof(r, m))] = gs[(j, m)];
            }
            for l in 0..basis.n_edges {
                for i in 0..n_edge {
                    g[(r * nrow + j, basis.edge_dof(l, r, i))] = gs[(j, nm0 + l * n_edge + i)];
                }
            }
        }
    }
    g
}

/// Pressure-velocity coupling `(∇_w·φ_j, w_i)_T` and the pressure mass
/// matrix, both in physical units.
pub fn divergence_coupling(geom: &ElementGeometry, basis: &ElementBasis) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = basis.k;
    let nm0 = n_monomials(2, k);
    let np = basis.n_pressure();
    let mut b = DMatrix::<f64>::zeros(np, basis.n_velocity());
    let mut mp = DMatrix::<f64>::zeros(np, np);
    let mut m0 = vec![0.0; nm0];
    let (mut w, mut wx, mut wy) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
    for rule in element_rules(geom, 2 * k + 2) {
        for (p, &wq) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(k, p[0], p[1], &mut m0);
            eval_monomials_grad(k + 1, p[0], p[1], &mut w, &mut wx, &mut wy);
            for i in 0..np {
                for m in 0..nm0 {
                    b[(i, basis.interior_dof(0, m))] -= wq * m0[m] * wx[i];
                    b[(i, basis.interior_dof(1, m))] -= wq * m0[m] * wy[i];
                }
                for j in 0..np {
                    mp[(i, j)] += wq * w[i] * w[j];
                }
            }
        }
    }
    let erule = edge_rule(2 * k + 2);
    for (l, e) in geom.edges.iter().enumerate() {
        for (p, &wq) in erule.points.iter().zip(&erule.weights) {
            let s = p[0];
            let x = e.point(s);
            eval_monomials(k + 1, x[0], x[1], &mut w);
            let wl = wq * e.length;
            for i in 0..np {
                for c in 0..2 {
                    for j in 0..basis.n_edge_scalar() {
                        b[(i, basis.edge_dof(l, c, j))] += wl * e.normal[c] * s.powi(j as i32) * w[i];
                    }
                }
            }
        }
    }
    // Coupling scales with h, mass with h².
    let h = geom.h;
    (b * h, mp * (h * h))
}

/// Weak divergence coefficients `M_p⁻¹ B` in the pressure basis.
pub fn weak_divergence(geom: &ElementGeometry, basis: &ElementBasis) -> Result<DMatrix<f64>> {
    let (b, mp) = divergence_coupling(geom, basis);
    let chol = nalgebra::Cholesky::new(mp).ok_or(Error::SingularMass { element: geom.id })?;
    Ok(chol.solve(&b))
}

fn scalar_mass(geom: &ElementGeometry, degree: usize) -> (DMatrix<f64>, Vec<f64>) {
    let nm = n_monomials(2, degree);
    let mut m = DMatrix::<f64>::zeros(nm, nm);
    let mut mean = vec![0.0; nm];
    let mut mon = vec![0.0; nm];
    for rule in element_rules(geom, 2 * degree) {
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(degree, p[0], p[1], &mut mon);
            for a in 0..nm {
                mean[a] += w * mon[a];
                for b in 0..nm {
                    m[(a, b)] += w * mon[a] * mon[b];
                }
            }
        }
    }
    let h2 = geom.h * geom.h;
    (m * h2, mean.into_iter().map(|v| v * h2).collect())
}

/// All local matrices of one element.
pub fn local_matrices(mesh: &PolyMesh, element: usize, k: usize) -> Result<LocalOperators> {
    let geometry = mesh.element_geometry(element);
    let basis = ElementBasis {
        element,
        k,
        n_edges: geometry.n_edges(),
    };
    let lambda = lambda_basis_for(&geometry, k)?;
    let g = weak_gradient(&geometry, &basis, &lambda);
    let a = g.transpose() * &g;
    let a = (&a + a.transpose()) * 0.5;
    let (b, mass_p) = divergence_coupling(&geometry, &basis);
    let chol = nalgebra::Cholesky::new(mass_p.clone()).ok_or(Error::SingularMass { element })?;
    let d = chol.solve(&b);
    let (mass_0, _) = scalar_mass(&geometry, k);
    let (_, pressure_mean) = scalar_mass(&geometry, k + 1);
    Ok(LocalOperators {
        element,
        k,
        geometry,
        basis,
        lambda,
        g,
        d,
        a,
        b,
        mass_p,
        mass_0,
        pressure_mean,
    })
}

/// Local matrices for every element, computed in parallel and returned in
/// element order.
pub fn all_local_matrices(mesh: &PolyMesh, k: usize) -> Result<Vec<LocalOperators>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| local_matrices(mesh, e, k))
        .collect()
}

/// Matrix of the discrete `H¹` norm
/// `‖v‖²_{1,h} = ‖∇v_0‖²_T + h_T⁻¹ ‖v_0 - v_b‖²_{∂T}` on one element.
pub fn norm_1h_matrix(geom: &ElementGeometry, basis: &ElementBasis) -> DMatrix<f64> {
    let k = basis.k;
    let nm0 = n_monomials(2, k);
    let n = basis.n_velocity();
    let mut out = DMatrix::<f64>::zeros(n, n);
    let (mut v, mut dx, mut dy) = (vec![0.0; nm0], vec![0.0; nm0], vec![0.0; nm0]);
    // Both terms are invariant under the scaling, so work in scaled
    // coordinates throughout.
    for rule in element_rules(geom, 2 * k) {
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials_grad(k, p[0], p[1], &mut v, &mut dx, &mut dy);
            for c in 0..2 {
                for a in 0..nm0 {
                    for b in 0..nm0 {
                        let val = w * (dx[a] * dx[b] + dy[a] * dy[b]);
                        out[(basis.interior_dof(c, a), basis.interior_dof(c, b))] += val;
                    }
                }
            }
        }
    }
    let erule = edge_rule(2 * k + 2);
    let mut trace = DVector::<f64>::zeros(n);
    for (l, e) in geom.edges.iter().enumerate() {
        for (p, &w) in erule.points.iter().zip(&erule.weights) {
            let s = p[0];
            let x = e.point(s);
            eval_monomials(k, x[0], x[1], &mut v);
            for c in 0..2 {
                trace.fill(0.0);
                for m in 0..nm0 {
                    trace[basis.interior_dof(c, m)] = v[m];
                }
                for j in 0..basis.n_edge_scalar() {
                    trace[basis.edge_dof(l, c, j)] = -s.powi(j as i32);
                }
                out.ger(w * e.length, &trace, &trace, 1.0);
            }
        }
    }
    out
}

impl LocalOperators {
    /// Local stiffness energy `vᵀ A v`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let gv = &self.g * DVector::from_column_slice(v);
        gv.norm_squared()
    }

    /// Weak-gradient coefficients `G v`.
    pub fn gradient_coefficients(&self, v: &[f64]) -> Vec<f64> {
        (&self.g * DVector::from_column_slice(v)).iter().copied().collect()
    }
}
