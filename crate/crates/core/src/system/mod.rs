//! Global numbering, assembly and solution of the saddle-point system
//!
//! ```text
//! [  A  -Bᵀ  0 ] [u]   [F]
//! [ -B   0   m ] [p] = [0]
//! [  0   mᵀ  0 ] [λ]   [0]
//! ```
//!
//! where `m_i = ∫ w_i` enforces a mean-zero pressure. Boundary edges carry no
//! unknowns: their values are prescribed and moved to the right-hand side.

mod infsup;
mod solve;

pub use infsup::{infsup_constant, INFSUP_LIMIT};
pub use solve::{solve, solve_with_tolerance, Solution};

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::local_spaces::{element_rules, project_on_segment};
use crate::mesh::{Point, PolyMesh};
use crate::polynomial::{eval_monomials, n_monomials};
use crate::weak_operators::LocalOperators;
use crate::{Error, Result};

/// Unknown numbering: interior velocity by element, then interior edges by
/// edge index, then pressure by element, then the multiplier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub k: usize,
    pub n_elements: usize,
    /// First unknown of each edge, `None` on the boundary.
    pub edge_offset: Vec<Option<usize>>,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub multiplier: usize,
}

pub fn build_dofmap(mesh: &PolyMesh, k: usize) -> DofMap {
    let nm0 = n_monomials(2, k);
    let np = n_monomials(2, k + 1);
    let per_edge = 2 * (k + 2);
    let mut next = mesh.n_elements() * 2 * nm0;
    let edge_offset = mesh
        .edges()
        .iter()
        .map(|e| {
            if e.is_boundary() {
                None
            } else {
                next += per_edge;
                Some(next - per_edge)
            }
        })
        .collect();
    let n_velocity = next;
    let n_pressure = mesh.n_elements() * np;
    DofMap {
        k,
        n_elements: mesh.n_elements(),
        edge_offset,
        n_velocity,
        n_pressure,
        multiplier: n_velocity + n_pressure,
    }
}

impl DofMap {
    pub fn n_total(&self) -> usize {
        self.multiplier + 1
    }

    pub fn n_interior_scalar(&self) -> usize {
        n_monomials(2, self.k)
    }

    pub fn n_pressure_local(&self) -> usize {
        n_monomials(2, self.k + 1)
    }

    pub fn interior_offset(&self, e: usize) -> usize {
        e * 2 * self.n_interior_scalar()
    }

    pub fn pressure_offset(&self, e: usize) -> usize {
        self.n_velocity + e * self.n_pressure_local()
    }

    /// Global index of every local velocity DOF of element `e`, `None` for
    /// DOFs on the domain boundary.
    pub fn velocity_map(&self, mesh: &PolyMesh, e: usize) -> Vec<Option<usize>> {
        let n_int = 2 * self.n_interior_scalar();
        let per_edge = 2 * (self.k + 2);
        let base = self.interior_offset(e);
        let mut out: Vec<Option<usize>> = (0..n_int).map(|i| Some(base + i)).collect();
        for &edge in mesh.element_edges(e) {
            match self.edge_offset[edge] {
                Some(off) => out.extend((0..per_edge).map(|i| Some(off + i))),
                None => out.extend(std::iter::repeat_n(None, per_edge)),
            }
        }
        out
    }
}

/// Prescribed edge values `Q_b g` on the boundary edges, `None` elsewhere.
/// Values are ordered `c * (k + 2) + j` in the global edge orientation.
pub fn dirichlet_values(
    mesh: &PolyMesh,
    k: usize,
    quad_degree: usize,
    g: impl Fn(Point) -> [f64; 2],
) -> Vec<Option<Vec<f64>>> {
    mesh.edges()
        .iter()
        .map(|edge| {
            edge.is_boundary().then(|| {
                let [a, b] = edge.vertices.map(|v| mesh.vertices()[v]);
                let mut vals = project_on_segment(a, b, k + 1, quad_degree, |x| g(x)[0]);
                vals.extend(project_on_segment(a, b, k + 1, quad_degree, |x| g(x)[1]));
                vals
            })
        })
        .collect()
}

/// Homogeneous boundary data.
pub fn zero_dirichlet(mesh: &PolyMesh, k: usize) -> Vec<Option<Vec<f64>>> {
    mesh.edges()
        .iter()
        .map(|e| e.is_boundary().then(|| vec![0.0; 2 * (k + 2)]))
        .collect()
}

/// Assembled system in coordinate form. Entries are unique and sorted by
/// `(row, col)`.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub dofmap: DofMap,
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub boundary: Vec<Option<Vec<f64>>>,
    /// Element pressure mass matrices; they precondition the solve.
    pub pressure_mass: Vec<DMatrix<f64>>,
}

/// `F_j = (f, φ_{j,0})_T` for the interior velocity functions of one
/// element; `quad_degree` is the exactness of the rule for `f · φ`.
pub fn local_load(ops: &LocalOperators, quad_degree: usize, f: &(impl Fn(Point) -> [f64; 2] + ?Sized)) -> Vec<f64> {
    let geom = &ops.geometry;
    let nm0 = n_monomials(2, ops.k);
    let mut out = vec![0.0; 2 * nm0];
    let mut mon = vec![0.0; nm0];
    let h2 = geom.h * geom.h;
    for rule in element_rules(geom, quad_degree) {
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(ops.k, p[0], p[1], &mut mon);
            let v = f(geom.to_physical(*p));
            for m in 0..nm0 {
                out[m] += h2 * w * v[0] * mon[m];
                out[nm0 + m] += h2 * w * v[1] * mon[m];
            }
        }
    }
    out
}

/// Assembles the global system from precomputed local operators.
pub fn assemble(
    mesh: &PolyMesh,
    ops: &[LocalOperators],
    f: impl Fn(Point) -> [f64; 2] + Sync,
    quad_degree: usize,
    boundary: Vec<Option<Vec<f64>>>,
) -> Result<SaddleSystem> {
    let k = ops.first().map(|o| o.k).unwrap_or(0);
    if ops.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            left: ops.len(),
            right: mesh.n_elements(),
        });
    }
    if let Some(o) = ops.iter().find(|o| o.k != k) {
        return Err(Error::OrderMismatch {
            expected: k,
            found: o.k,
        });
    }
    let dofmap = build_dofmap(mesh, k);
    let loads: Vec<Vec<f64>> = ops.par_iter().map(|o| local_load(o, quad_degree, &f)).collect();

    let n = dofmap.n_total();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; n];
    let per_edge = 2 * (k + 2);
    for (e, o) in ops.iter().enumerate() {
        let map = dofmap.velocity_map(mesh, e);
        // Prescribed local values (zero for free DOFs).
        let mut fixed = vec![0.0; map.len()];
        for (l, &edge) in mesh.element_edges(e).iter().enumerate() {
            if let Some(vals) = &boundary[edge] {
                let off = o.basis.edge_dof(l, 0, 0);
                fixed[off..off + per_edge].copy_from_slice(vals);
            }
        }
        let fixed_v = DVector::from_column_slice(&fixed);
        let a_fixed = &o.a * &fixed_v;
        let b_fixed = &o.b * &fixed_v;

        for (i, gi) in map.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in map.iter().enumerate() {
                if let Some(gj) = *gj {
                    triplets.push((gi, gj, o.a[(i, j)]));
                }
            }
            rhs[gi] -= a_fixed[i];
        }
        for (m, &v) in loads[e].iter().enumerate() {
            rhs[map[m].expect("interior DOFs are free")] += v;
        }
        let p0 = dofmap.pressure_offset(e);
        for r in 0..o.b.nrows() {
            for (j, gj) in map.iter().enumerate() {
                if let Some(gj) = *gj {
                    let v = -o.b[(r, j)];
                    triplets.push((p0 + r, gj, v));
                    triplets.push((gj, p0 + r, v));
                }
            }
            rhs[p0 + r] += b_fixed[r];
            triplets.push((p0 + r, dofmap.multiplier, o.pressure_mean[r]));
            triplets.push((dofmap.multiplier, p0 + r, o.pressure_mean[r]));
        }
    }
    Ok(SaddleSystem {
        dofmap,
        entries: merge_triplets(triplets),
        rhs,
        boundary,
        pressure_mass: ops.iter().map(|o| o.mass_p.clone()).collect(),
    })
}

/// Sorts by `(row, col)` and sums duplicates in insertion order, so the
/// result does not depend on the sort algorithm.
fn merge_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    // Stable sort keeps equal keys in insertion order.
    t.sort_by_key(|&(r, c, _)| (r, c));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out
}

impl SaddleSystem {
    pub fn n(&self) -> usize {
        self.dofmap.n_total()
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let map: std::collections::HashMap<(usize, usize), f64> =
            self.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - map.get(&(c, r)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `matrix.mtx` (Matrix Market, coordinate, general) and `rhs.txt`
    /// into `dir`.
    pub fn dump(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut m = String::new();
        m.push_str("%%MatrixMarket matrix coordinate real general\n");
        writeln!(m, "{} {} {}", self.n(), self.n(), self.entries.len()).unwrap();
        for &(r, c, v) in &self.entries {
            writeln!(m, "{} {} {:e}", r + 1, c + 1, v).unwrap();
        }
        std::fs::write(dir.join("matrix.mtx"), m)?;
        let mut b = String::new();
        for v in &self.rhs {
            writeln!(b, "{v:e}").unwrap();
        }
        std::fs::write(dir.join("rhs.txt"), b)?;
        Ok(())
    }
}
