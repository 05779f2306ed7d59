use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{Cholesky, DVector, Dyn};

use super::{DofMap, SaddleSystem};
use crate::mesh::PolyMesh;
use crate::weak_operators::LocalOperators;
use crate::{Error, Result};

const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Debug)]
pub struct Solution {
    pub dofmap: DofMap,
    /// The full unknown vector `[u; p; λ]`.
    pub x: Vec<f64>,
    /// Relative algebraic residual, or absolute when the right-hand side
    /// vanishes.
    pub residual: f64,
    /// Local velocity vectors including prescribed boundary values.
    pub element_velocity: Vec<Vec<f64>>,
    pub element_pressure: Vec<Vec<f64>>,
}

impl Solution {
    pub fn multiplier(&self) -> f64 {
        self.x[self.dofmap.multiplier]
    }

    pub fn velocity(&self) -> &[f64] {
        &self.x[..self.dofmap.n_velocity]
    }

    pub fn pressure(&self) -> &[f64] {
        &self.x[self.dofmap.n_velocity..self.dofmap.multiplier]
    }

    /// `‖B u_h‖` and `‖u_h‖` (Euclidean, over all local velocity vectors
    /// including boundary values).
    pub fn divergence_residual(&self, ops: &[LocalOperators]) -> (f64, f64) {
        let mut div = 0.0;
        let mut norm = 0.0;
        for (o, v) in ops.iter().zip(&self.element_velocity) {
            let bv = &o.b * DVector::from_column_slice(v);
            div += bv.norm_squared();
            norm += v.iter().map(|x| x * x).sum::<f64>();
        }
        (div.sqrt(), norm.sqrt())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve of the saddle-point system followed by iterative refinement
/// until the residual contract holds: relative residual `1e-10`, or absolute
/// `1e-12` for a vanishing right-hand side.
///
/// The velocity block is factored by sparse Cholesky; the pressure Schur
/// complement `B A⁻¹ Bᵀ` is solved by conjugate gradients preconditioned
/// with the pressure mass matrix, restricted to mean-zero pressures.
pub fn solve(sys: &SaddleSystem, mesh: &PolyMesh) -> Result<Solution> {
    solve_with_tolerance(sys, mesh, None)
}

const CG_TOL: f64 = 1e-14;
const CG_MAX_ITER: usize = 2000;

struct SchurSolver {
    nv: usize,
    np: usize,
    llt: Llt<usize, f64>,
    /// Entries of the `-B` block as `(pressure row, velocity col, value)`.
    coupling: Vec<(usize, usize, f64)>,
    mass_chol: Vec<Cholesky<f64, Dyn>>,
    block: usize,
    /// Pressure means `m` and the constant pressure `c = M_p⁻¹ m`.
    mean: Vec<f64>,
    constant: Vec<f64>,
}

impl SchurSolver {
    fn new(sys: &SaddleSystem) -> Result<Self> {
        let d = &sys.dofmap;
        let (nv, np) = (d.n_velocity, d.n_pressure);
        let mut a = Vec::new();
        let mut coupling = Vec::new();
        let mut mean = vec![0.0; np];
        for &(r, c, v) in &sys.entries {
            if r < nv && c < nv {
                a.push(Triplet::new(r, c, v));
            } else if (nv..nv + np).contains(&r) && c < nv {
                coupling.push((r - nv, c, v));
            } else if (nv..nv + np).contains(&r) && c == d.multiplier {
                mean[r - nv] = v;
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(nv, nv, &a)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("velocity block is not positive definite: {e:?}")))?;
        let mass_chol = sys
            .pressure_mass
            .iter()
            .enumerate()
            .map(|(e, m)| Cholesky::new(m.clone()).ok_or(Error::SingularMass { element: e }))
            .collect::<Result<Vec<_>>>()?;
        let block = d.n_pressure_local();
        let mut solver = SchurSolver {
            nv,
            np,
            llt,
            coupling,
            mass_chol,
            block,
            mean: mean.clone(),
            constant: Vec::new(),
        };
        solver.constant = solver.apply_mass_inverse(&mean);
        Ok(solver)
    }

    fn solve_velocity(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.nv, 1, |i, _| rhs[i]);
        self.llt.solve_in_place(x.as_mut());
        (0..self.nv).map(|i| x[(i, 0)]).collect()
    }

    /// `B u`.
    fn apply_b(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.np];
        for &(r, c, v) in &self.coupling {
            out[r] -= v * u[c];
        }
        out
    }

    /// `Bᵀ p`.
    fn apply_bt(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nv];
        for &(r, c, v) in &self.coupling {
            out[c] -= v * p[r];
        }
        out
    }

    fn apply_schur(&self, p: &[f64]) -> Vec<f64> {
        self.apply_b(&self.solve_velocity(&self.apply_bt(p)))
    }

    fn apply_mass_inverse(&self, r: &[f64]) -> Vec<f64> {
        let mut out = r.to_vec();
        for (e, chol) in self.mass_chol.iter().enumerate() {
            let s = e * self.block..(e + 1) * self.block;
            let mut v = DVector::from_column_slice(&r[s.clone()]);
            chol.solve_mut(&mut v);
            out[s].copy_from_slice(v.as_slice());
        }
        out
    }

    /// Removes the constant-pressure component so that `mᵀ p = 0`.
    fn project_mean(&self, p: &mut [f64]) {
        let s = dot(&self.mean, p) / dot(&self.mean, &self.constant);
        for (x, c) in p.iter_mut().zip(&self.constant) {
            *x -= s * c;
        }
    }

    /// Solves the full system for right-hand side `r`.
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let (nv, np) = (self.nv, self.np);
        let (rv, rp, rl) = (&r[..nv], &r[nv..nv + np], r[nv + np]);
        // u = A⁻¹ (r_v + Bᵀ p) turns the pressure rows into S p - m λ = h.
        let a_rv = self.solve_velocity(rv);
        let b_a_rv = self.apply_b(&a_rv);
        let h: Vec<f64> = (0..np).map(|i| -(rp[i] + b_a_rv[i])).collect();
        // S annihilates the constant pressure, which fixes λ.
        let lambda = -dot(&self.constant, &h) / dot(&self.constant, &self.mean);
        let rhs: Vec<f64> = (0..np).map(|i| h[i] + lambda * self.mean[i]).collect();
        let mut p = self.pcg(&rhs)?;
        let shift = rl / dot(&self.mean, &self.constant);
        for (x, c) in p.iter_mut().zip(&self.constant) {
            *x += shift * c;
        }
        let bt_p = self.apply_bt(&p);
        let rhs_v: Vec<f64> = (0..nv).map(|i| rv[i] + bt_p[i]).collect();
        let mut x = self.solve_velocity(&rhs_v);
        x.extend_from_slice(&p);
        x.push(lambda);
        Ok(x)
    }

    fn pcg(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.np];
        let mut r = b.to_vec();
        let mut z = self.apply_mass_inverse(&r);
        self.project_mean(&mut z);
        let mut rz = dot(&r, &z);
        let target = CG_TOL * CG_TOL * rz;
        if rz <= 0.0 {
            return Ok(x);
        }
        let mut d = z.clone();
        for _ in 0..CG_MAX_ITER {
            let sd = self.apply_schur(&d);
            let dsd = dot(&d, &sd);
            if !(dsd > 0.0) {
                return Err(Error::Solver(format!("pressure Schur complement is not positive definite ({dsd:e})")));
            }
            let alpha = rz / dsd;
            for i in 0..self.np {
                x[i] += alpha * d[i];
                r[i] -= alpha * sd[i];
            }
            z = self.apply_mass_inverse(&r);
            self.project_mean(&mut z);
            let rz_new = dot(&r, &z);
            if rz_new <= target {
                return Ok(x);
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..self.np {
                d[i] = z[i] + beta * d[i];
            }
        }
        Err(Error::Solver(format!("pressure iteration did not converge in {CG_MAX_ITER} steps")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// [`solve`] with the relative residual tolerance overridden.
pub fn solve_with_tolerance(sys: &SaddleSystem, mesh: &PolyMesh, tol: Option<f64>) -> Result<Solution> {
    let n = sys.n();
    let solver = SchurSolver::new(sys)?;
    let b_norm = norm(&sys.rhs);
    let (scale, tol) = if b_norm > 0.0 {
        (b_norm, tol.unwrap_or(1e-10))
    } else {
        (1.0, 1e-12)
    };
    let mut x = vec![0.0; n];
    let mut r = sys.rhs.clone();
    let mut residual = norm(&r) / scale;
    for step in 0..=REFINEMENT_STEPS {
        if step > 0 && residual <= 0.01 * tol {
            break;
        }
        let dx = solver.solve(&r)?;
        let candidate: Vec<f64> = (0..n).map(|i| x[i] + dx[i]).collect();
        let mx = sys.apply(&candidate);
        let r_new: Vec<f64> = (0..n).map(|i| sys.rhs[i] - mx[i]).collect();
        let res_new = norm(&r_new) / scale;
        if !res_new.is_finite() {
            return Err(Error::Solver("non-finite solution; the system is singular".into()));
        }
        if step > 0 && res_new >= residual {
            break;
        }
        x = candidate;
        r = r_new;
        residual = res_new;
    }
    if !(residual <= tol) {
        return Err(Error::Residual {
            residual,
            tolerance: tol,
            diagnostics: format!("n = {n}, nnz = {}, |b| = {b_norm:e}", sys.entries.len()),
        });
    }

    let d = &sys.dofmap;
    let element_velocity = (0..d.n_elements)
        .map(|e| {
            let map = d.velocity_map(mesh, e);
            let mut v: Vec<f64> = map.iter().map(|g| g.map_or(0.0, |g| x[g])).collect();
            let n_int = 2 * d.n_interior_scalar();
            let per_edge = 2 * (d.k + 2);
            for (l, &edge) in mesh.element_edges(e).iter().enumerate() {
                if let Some(vals) = &sys.boundary[edge] {
                    let off = n_int + l * per_edge;
                    v[off..off + per_edge].copy_from_slice(vals);
                }
            }
            v
        })
        .collect();
    let np = d.n_pressure_local();
    let element_pressure = (0..d.n_elements)
        .map(|e| x[d.pressure_offset(e)..d.pressure_offset(e) + np].to_vec())
        .collect();
    Ok(Solution {
        dofmap: d.clone(),
        x,
        residual,
        element_velocity,
        element_pressure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_polygon_grid, gen_square_grid};
    use crate::system::{assemble, zero_dirichlet};
    use crate::weak_operators::all_local_matrices;

    #[test]
    fn zero_load_gives_zero_solution() {
        let m = gen_polygon_grid(2).unwrap();
        let ops = all_local_matrices(&m, 1).unwrap();
        let sys = assemble(&m, &ops, |_| [0.0, 0.0], 1, zero_dirichlet(&m, 1)).unwrap();
        let sol = solve(&sys, &m).unwrap();
        assert!(norm(&sol.x) <= 1e-12);
    }

    #[test]
    fn residual_contract_and_mean_zero_pressure() {
        let m = gen_square_grid(4).unwrap();
        let ops = all_local_matrices(&m, 1).unwrap();
        let sys = assemble(&m, &ops, |x| [x[1].sin(), x[0] * x[0]], 8, zero_dirichlet(&m, 1)).unwrap();
        let sol = solve(&sys, &m).unwrap();
        assert!(sol.residual <= 1e-10);
        let mean: f64 = ops
            .iter()
            .zip(&sol.element_pressure)
            .map(|(o, p)| o.pressure_mean.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        assert!(mean.abs() <= 1e-10);
        let (div, un) = sol.divergence_residual(&ops);
        assert!(div <= 1e-9 * un.max(1.0));
    }

    #[test]
    fn constant_pressure_load_is_absorbed_by_the_multiplier() {
        let m = gen_square_grid(3).unwrap();
        let ops = all_local_matrices(&m, 0).unwrap();
        let f = |x: [f64; 2]| [x[1] - 0.5, 0.5 - x[0]];
        let sys = assemble(&m, &ops, f, 4, zero_dirichlet(&m, 0)).unwrap();
        let base = solve(&sys, &m).unwrap();
        // Add M (0, c, 0) for the constant pressure c = 0.25 to the
        // right-hand side; only the pressure may change, and by exactly c.
        let d = &sys.dofmap;
        let mut shift = vec![0.0; sys.n()];
        for e in 0..d.n_elements {
            shift[d.pressure_offset(e)] = 1.0;
        }
        let mshift = sys.apply(&shift);
        let mut sys2 = sys.clone();
        for (b, s) in sys2.rhs.iter_mut().zip(&mshift) {
            *b += 0.25 * s;
        }
        let shifted = solve(&sys2, &m).unwrap();
        for e in 0..d.n_elements {
            let i = d.pressure_offset(e);
            assert!((shifted.x[i] - base.x[i] - 0.25).abs() < 1e-10);
        }
        for i in 0..d.n_velocity {
            assert!((shifted.x[i] - base.x[i]).abs() < 1e-10);
        }
    }
}
