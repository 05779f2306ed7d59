//! Projections of exact solutions, error norms and convergence rates.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::local_spaces::{element_rules, project_scalar, project_velocity_local};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{Point, PolyMesh};
use crate::polynomial::{eval_monomials, n_monomials};
use crate::system::Solution;
use crate::weak_operators::LocalOperators;
use crate::{Error, Result};

/// `Q_h u` as one local velocity vector per element. Edge values agree
/// between neighbours up to rounding.
pub fn project_velocity(
    mesh: &PolyMesh,
    k: usize,
    quad_degree: usize,
    u: impl Fn(Point) -> [f64; 2] + Sync,
) -> Vec<Vec<f64>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| project_velocity_local(&mesh.element_geometry(e), k, quad_degree, &u))
        .collect()
}

/// `𝒬_h p`, one `P_{k+1}` coefficient vector per element.
pub fn project_pressure(
    mesh: &PolyMesh,
    k: usize,
    quad_degree: usize,
    p: impl Fn(Point) -> f64 + Sync,
) -> Vec<Vec<f64>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| project_scalar(&mesh.element_geometry(e), k + 1, quad_degree, &p))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    /// `‖Q_0 u - u_0‖`.
    pub velocity_l2: f64,
    /// `|||Q_h u - u_h|||`.
    pub velocity_energy: f64,
    /// `‖p - p_h‖`.
    pub pressure_l2: f64,
}

/// Error norms of a discrete solution against a manufactured case.
/// `quad_bump` raises every quadrature degree above the exact one.
pub fn compute_errors(
    mesh: &PolyMesh,
    ops: &[LocalOperators],
    solution: &Solution,
    case: &ManufacturedCase,
    quad_bump: usize,
) -> Errors {
    errors_against(
        mesh,
        ops,
        &solution.element_velocity,
        &solution.element_pressure,
        case,
        quad_bump,
    )
}

/// [`compute_errors`] for arbitrary local coefficient vectors.
pub fn errors_against(
    mesh: &PolyMesh,
    ops: &[LocalOperators],
    velocity: &[Vec<f64>],
    pressure: &[Vec<f64>],
    case: &ManufacturedCase,
    quad_bump: usize,
) -> Errors {
    let k = ops.first().map_or(0, |o| o.k);
    let u_deg = case.velocity_degree() + k + 1 + quad_bump;
    let p_deg = 2 * case.pressure_degree().max(k + 1) + quad_bump;
    let qu = project_velocity(mesh, k, u_deg, |x| case.velocity(x));
    let nm0 = n_monomials(2, k);
    let np = n_monomials(2, k + 1);
    let per_element: Vec<[f64; 3]> = (0..ops.len())
        .into_par_iter()
        .map(|e| {
            let o = &ops[e];
            let diff: Vec<f64> = qu[e].iter().zip(&velocity[e]).map(|(a, b)| a - b).collect();
            let mut l2 = 0.0;
            for c in 0..2 {
                let d = DVector::from_column_slice(&diff[c * nm0..(c + 1) * nm0]);
                l2 += d.dot(&(&o.mass_0 * &d));
            }
            let energy = o.energy(&diff);
            let g = &o.geometry;
            let mut mon = vec![0.0; np];
            let mut press = 0.0;
            for rule in element_rules(g, p_deg) {
                for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                    eval_monomials(k + 1, pt[0], pt[1], &mut mon);
                    let ph: f64 = mon.iter().zip(&pressure[e]).map(|(a, b)| a * b).sum();
                    let r = case.pressure(g.to_physical(*pt)) - ph;
                    press += w * g.h * g.h * r * r;
                }
            }
            [l2, energy, press]
        })
        .collect();
    let mut sums = [0.0; 3];
    for v in &per_element {
        for i in 0..3 {
            sums[i] += v[i];
        }
    }
    Errors {
        velocity_l2: sums[0].max(0.0).sqrt(),
        velocity_energy: sums[1].max(0.0).sqrt(),
        pressure_l2: sums[2].max(0.0).sqrt(),
    }
}

/// Errors below this are treated as exact reproduction.
pub const EXACT_THRESHOLD: f64 = 1e-9;
/// Rates are not reported when either error is at round-off level.
pub const ROUNDOFF_FLOOR: f64 = 1e3 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Rate {
    Value(f64),
    /// Both errors at or below [`EXACT_THRESHOLD`].
    Exact,
    /// One error is at round-off level and the other is not small.
    Undefined,
}

/// Order of convergence between two levels. Uses `log2` of the error ratio
/// when `h` halves to within `1e-12`, otherwise `log(e ratio) / log(h ratio)`.
pub fn eoc(e_prev: f64, e_cur: f64, h_prev: f64, h_cur: f64) -> Result<Rate> {
    for e in [e_prev, e_cur] {
        if !e.is_finite() || e < 0.0 {
            return Err(Error::Eoc(format!("invalid error value {e}")));
        }
    }
    if !(h_prev > 0.0 && h_cur > 0.0) || h_prev == h_cur {
        return Err(Error::Eoc(format!("invalid mesh sizes {h_prev}, {h_cur}")));
    }
    if e_prev <= EXACT_THRESHOLD && e_cur <= EXACT_THRESHOLD {
        return Ok(Rate::Exact);
    }
    if e_prev <= ROUNDOFF_FLOOR || e_cur <= ROUNDOFF_FLOOR {
        return Ok(Rate::Undefined);
    }
    let ratio = h_cur / h_prev;
    let r = if (ratio - 0.5).abs() <= 1e-12 {
        (e_prev / e_cur).log2()
    } else {
        (e_prev / e_cur).ln() / (h_prev / h_cur).ln()
    };
    Ok(Rate::Value(r))
}

impl Rate {
    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub velocity_l2: Rate,
    pub velocity_energy: Rate,
    pub pressure_l2: Rate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub n_elements: usize,
    pub n_unknowns: usize,
    pub errors: Errors,
    /// Against the previous level; absent on the first.
    pub rates: Option<Rates>,
    pub solver_residual: f64,
    /// `‖B u_h‖`.
    pub divergence_residual: f64,
    /// `‖u_h‖`, Euclidean over all local velocity coefficients.
    pub velocity_norm: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
}

impl ConvergenceReport {
    /// Appends a level and fills in its rates against the previous one.
    pub fn push(&mut self, mut level: LevelResult) -> Result<()> {
        level.rates = match self.levels.last() {
            Some(prev) => {
                let r = |a: f64, b: f64| eoc(a, b, prev.h, level.h);
                Some(Rates {
                    velocity_l2: r(prev.errors.velocity_l2, level.errors.velocity_l2)?,
                    velocity_energy: r(prev.errors.velocity_energy, level.errors.velocity_energy)?,
                    pressure_l2: r(prev.errors.pressure_l2, level.errors.pressure_l2)?,
                })
            }
            None => None,
        };
        self.levels.push(level);
        Ok(())
    }

    pub fn last_rates(&self) -> Option<Rates> {
        self.levels.last().and_then(|l| l.rates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::case_s1;
    use crate::mesh::{gen_polygon_grid, gen_square_grid};
    use crate::weak_operators::all_local_matrices;

    #[test]
    fn eoc_examples() {
        assert_eq!(eoc(0.4, 0.1, 0.5, 0.25).unwrap(), Rate::Value(2.0));
        assert_eq!(eoc(1e-12, 1e-13, 0.5, 0.25).unwrap(), Rate::Exact);
        assert_eq!(eoc(1.0, 1e-14, 0.5, 0.25).unwrap(), Rate::Undefined);
        assert!(eoc(f64::NAN, 1.0, 0.5, 0.25).is_err());
        // Non-halving h.
        let r = eoc(1.0, 1.0 / 27.0, 0.3, 0.1).unwrap().value().unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn projections_reproduce_constants_and_low_degree() {
        let m = gen_polygon_grid(3).unwrap();
        let k = 1;
        let v = project_velocity(&m, k, 0, |_| [2.0, -1.0]);
        let nm0 = n_monomials(2, k);
        for local in &v {
            assert!((local[0] - 2.0).abs() < 1e-13 && (local[nm0] + 1.0).abs() < 1e-13);
            for (i, x) in local.iter().enumerate() {
                if i != 0 && i != nm0 && i < 2 * nm0 {
                    assert!(x.abs() < 1e-12);
                }
            }
        }
        let p = project_pressure(&m, k, 0, |x| 1.0 + x[0] * x[1]);
        for (e, local) in p.iter().enumerate() {
            let g = m.element_geometry(e);
            let pt = [0.1, 0.05];
            let mut mon = vec![0.0; 6];
            eval_monomials(2, pt[0], pt[1], &mut mon);
            let val: f64 = mon.iter().zip(local).map(|(a, b)| a * b).sum();
            let x = g.to_physical(pt);
            assert!((val - 1.0 - x[0] * x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_pressure_converges_at_order_k_plus_2() {
        let case = case_s1();
        let k = 1;
        let err = |n: usize| {
            let m = gen_square_grid(n).unwrap();
            let q = project_pressure(&m, k, 2 * 6, |x| case.pressure(x));
            let mut s = 0.0;
            for (e, c) in q.iter().enumerate() {
                let g = m.element_geometry(e);
                let mut mon = vec![0.0; 6];
                for rule in element_rules(&g, 14) {
                    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                        eval_monomials(2, pt[0], pt[1], &mut mon);
                        let v: f64 = mon.iter().zip(c).map(|(a, b)| a * b).sum();
                        s += w * g.h * g.h * (v - case.pressure(g.to_physical(*pt))).powi(2);
                    }
                }
            }
            s.sqrt()
        };
        let r = (err(8) / err(16)).log2();
        assert!((r - 3.0).abs() < 0.15, "{r}");
    }

    #[test]
    fn zero_solution_error_is_the_projection_norm() {
        let m = gen_square_grid(4).unwrap();
        let ops = all_local_matrices(&m, 0).unwrap();
        let case = case_s1();
        let zero_v: Vec<Vec<f64>> = ops.iter().map(|o| vec![0.0; o.basis.n_velocity()]).collect();
        let zero_p: Vec<Vec<f64>> = ops.iter().map(|o| vec![0.0; o.basis.n_pressure()]).collect();
        let e = errors_against(&m, &ops, &zero_v, &zero_p, &case, 0);
        assert!(e.velocity_l2 > 0.0 && e.velocity_energy > 0.0 && e.pressure_l2 > 0.0);
        let qu = project_velocity(&m, 0, 8, |x| case.velocity(x));
        let qp: Vec<Vec<f64>> = ops.iter().map(|o| vec![0.0; o.basis.n_pressure()]).collect();
        let e = errors_against(&m, &ops, &qu, &qp, &case, 0);
        assert!(e.velocity_l2 < 1e-14 && e.velocity_energy < 1e-13);
    }
}
