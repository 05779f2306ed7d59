use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use super::build_dofmap;
use crate::mesh::PolyMesh;
use crate::weak_operators::all_local_matrices;
use crate::{Error, Result};

/// Largest velocity-plus-pressure size accepted by [`infsup_constant`].
pub const INFSUP_LIMIT: usize = 6000;

/// Discrete inf-sup constant `β_h`: the square root of the smallest
/// eigenvalue of `B A⁻¹ Bᵀ q = β² M_p q` over mean-zero pressures, with
/// homogeneous boundary values. Dense; meant for small meshes.
pub fn infsup_constant(mesh: &PolyMesh, k: usize) -> Result<f64> {
    let d = build_dofmap(mesh, k);
    let size = d.n_velocity + d.n_pressure;
    if size > INFSUP_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: INFSUP_LIMIT,
        });
    }
    let ops = all_local_matrices(mesh, k)?;
    let (nv, np) = (d.n_velocity, d.n_pressure);
    let mut a = DMatrix::<f64>::zeros(nv, nv);
    let mut b = DMatrix::<f64>::zeros(np, nv);
    let mut mp = DMatrix::<f64>::zeros(np, np);
    let npl = d.n_pressure_local();
    for (e, o) in ops.iter().enumerate() {
        let map = d.velocity_map(mesh, e);
        let p0 = e * npl;
        for (i, gi) in map.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in map.iter().enumerate() {
                if let Some(gj) = *gj {
                    a[(gi, gj)] += o.a[(i, j)];
                }
            }
            for r in 0..npl {
                b[(p0 + r, gi)] += o.b[(r, i)];
            }
        }
        mp.view_mut((p0, p0), (npl, npl)).copy_from(&o.mass_p);
    }

    let la = Cholesky::new(a).ok_or_else(|| Error::Solver("velocity block is not positive definite".into()))?;
    // X = L_A⁻¹ Bᵀ, so B A⁻¹ Bᵀ = XᵀX.
    let x = la
        .l()
        .solve_lower_triangular(&b.transpose())
        .ok_or_else(|| Error::Solver("triangular solve failed".into()))?;
    let s = x.transpose() * x;
    let lp = Cholesky::new(mp).ok_or_else(|| Error::Solver("pressure mass matrix is singular".into()))?;
    let lp = lp.l();
    let y = lp
        .solve_lower_triangular(&s)
        .ok_or_else(|| Error::Solver("triangular solve failed".into()))?;
    let c = lp
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Solver("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;

    // The constant pressure maps to z0 = L_pᵀ 1. Lift it out of the spectrum.
    let mut z0 = lp.transpose() * nalgebra::DVector::<f64>::from_element(np, 1.0);
    z0.normalize_mut();
    let lift = 10.0 * c.trace().max(1.0);
    let c = c + (&z0 * z0.transpose()) * lift;
    let eig = SymmetricEigen::new(c);
    let lmin = eig.eigenvalues.min();
    Ok(lmin.max(0.0).sqrt())
}
