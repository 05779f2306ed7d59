#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wg_stokes::local_spaces::{project_scalar, project_velocity_local};
use wg_stokes::mesh::{Point, PolyMesh};
use wg_stokes::polynomial::{Axis, Polynomial};
use wg_stokes::weak_operators::LocalOperators;

/// A single-element mesh: a random triangle, convex quadrilateral or
/// star-shaped hexagon inside the unit square.
pub fn random_element(rng: &mut ChaCha8Rng, sides: usize) -> PolyMesh {
    let c = [rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)];
    let r = rng.random_range(0.05..0.25);
    let step = std::f64::consts::TAU / sides as f64;
    let phase = rng.random_range(0.0..step);
    let verts: Vec<Point> = (0..sides)
        .map(|i| {
            let a = phase + step * (i as f64 + rng.random_range(-0.2..0.2));
            let rr = r * rng.random_range(0.75..1.0);
            [c[0] + rr * a.cos(), c[1] + rr * a.sin()]
        })
        .collect();
    PolyMesh::new(verts, vec![(0..sides).collect()]).expect("valid random element")
}

pub fn random_polynomial(rng: &mut ChaCha8Rng, degree: usize) -> Polynomial {
    let n = (degree + 1) * (degree + 2) / 2;
    let coeffs = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Polynomial::from_coeffs(2, degree, coeffs).unwrap()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Coefficient-norm defects of `∇_w Q_h φ = ℚ_h ∇φ` and
/// `∇_w·Q_h φ = 𝒬_h ∇·φ` on one element, relative to the size of the
/// right-hand sides.
pub fn commutation_defects(ops: &LocalOperators, phi: &[Polynomial; 2]) -> (f64, f64) {
    let geom = &ops.geometry;
    let deg = phi[0].degree().max(phi[1].degree());
    let qd = deg + ops.k + 2;
    let u = |x: [f64; 2]| [phi[0].eval2(x[0], x[1]), phi[1].eval2(x[0], x[1])];
    let v = project_velocity_local(geom, ops.k, qd, u);

    let lhs = ops.gradient_coefficients(&v);
    let grads = [
        [phi[0].diff(Axis::X), phi[0].diff(Axis::Y)],
        [phi[1].diff(Axis::X), phi[1].diff(Axis::Y)],
    ];
    let rhs = ops.lambda.project(
        |_, xi| {
            let x = geom.to_physical(xi);
            grads.clone().map(|row| row.map(|p| p.eval2(x[0], x[1])))
        },
        deg,
    );
    let grad = max_abs(lhs.iter().zip(&rhs).map(|(a, b)| a - b)) / max_abs(rhs.iter().copied()).max(1.0);

    let div = &grads[0][0] + &grads[1][1];
    let lhs = &ops.d * DVector::from_column_slice(&v);
    let rhs = project_scalar(geom, ops.k + 1, qd, |x| div.eval2(x[0], x[1]));
    let d = max_abs(lhs.iter().zip(&rhs).map(|(a, b)| a - b)) / max_abs(rhs.iter().copied()).max(1.0);
    (grad, d)
}

type Q = BigRational;

fn q(x: f64) -> Q {
    Q::from_float(x).expect("finite coordinate")
}

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Bivariate polynomial with exact coefficients, keyed by exponents.
#[derive(Clone, Default)]
struct RPoly(BTreeMap<(usize, usize), Q>);

impl RPoly {
    fn term(a: usize, b: usize, c: Q) -> Self {
        let mut m = BTreeMap::new();
        m.insert((a, b), c);
        RPoly(m)
    }

    fn linear(c0: Q, cs: Q, ct: Q) -> Self {
        let mut p = RPoly::term(0, 0, c0);
        p.0.insert((1, 0), cs);
        p.0.insert((0, 1), ct);
        p
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out = BTreeMap::<(usize, usize), Q>::new();
        for (&(a, b), c) in &self.0 {
            for (&(d, e), f) in &o.0 {
                *out.entry((a + d, b + e)).or_insert_with(Q::zero) += c * f;
            }
        }
        RPoly(out)
    }

    fn pow(&self, n: usize) -> Self {
        (0..n).fold(RPoly::term(0, 0, Q::one()), |acc, _| acc.mul(self))
    }
}

fn factorial(n: usize) -> Q {
    (1..=n as i64).fold(Q::one(), |acc, i| acc * qi(i))
}

/// `∫` over the reference triangle `{s, t ≥ 0, s + t ≤ 1}`.
fn integrate_reference_triangle(p: &RPoly) -> Q {
    p.0.iter()
        .map(|(&(a, b), c)| c * factorial(a) * factorial(b) / factorial(a + b + 2))
        .fold(Q::zero(), |acc, x| acc + x)
}

/// `∫_0^1` of a polynomial in `s` (the `t` exponent must be zero).
fn integrate_unit_interval(p: &RPoly) -> Q {
    p.0.iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(&(a, b), c)| {
            assert_eq!(b, 0);
            c / qi(a as i64 + 1)
        })
        .fold(Q::zero(), |acc, x| acc + x)
}

fn monomials(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect()
}

fn rank(mut m: Vec<Vec<Q>>) -> usize {
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &pivot;
                for j in c..cols {
                    let delta = &f * &m[rank][j];
                    m[r][j] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dimension of `Λ_k(T)` by exact rank computation, independent of the
/// floating-point construction: the per-row space is the nullspace of
/// the normal-jump and divergence constraints on the centroid fan, with
/// the auxiliary divergence polynomial eliminated.
pub fn lambda_dimension_exact(poly: &[Point], k: usize) -> usize {
    let n = poly.len();
    let v: Vec<[Q; 2]> = poly.iter().map(|p| [q(p[0]), q(p[1])]).collect();
    let tris: Vec<[[Q; 2]; 3]> = if n == 3 {
        vec![[v[0].clone(), v[1].clone(), v[2].clone()]]
    } else {
        // Area centroid, exactly.
        let (mut a, mut cx, mut cy) = (Q::zero(), Q::zero(), Q::zero());
        for i in 0..n {
            let (p, r) = (&v[i], &v[(i + 1) % n]);
            let cr = &p[0] * &r[1] - &r[0] * &p[1];
            cx += (&p[0] + &r[0]) * &cr;
            cy += (&p[1] + &r[1]) * &cr;
            a += cr;
        }
        let c = [&cx / (qi(3) * &a), &cy / (qi(3) * &a)];
        (0..n)
            .map(|i| [c.clone(), v[i].clone(), v[(i + 1) % n].clone()])
            .collect()
    };
    let nt = tris.len();
    let mon1 = monomials(k + 1);
    let mon0 = monomials(k);
    let (n1, n0) = (mon1.len(), mon0.len());
    // Unknowns: ψ_{t,c,m} then q_m.
    let n_unknowns = nt * 2 * n1 + n0;
    let col = |t: usize, c: usize, m: usize| (t * 2 + c) * n1 + m;
    let mut rows: Vec<Vec<Q>> = Vec::new();

    let pull = |x0: &[Q; 2], e1: [Q; 2], e2: [Q; 2]| {
        [
            RPoly::linear(x0[0].clone(), e1[0].clone(), e2[0].clone()),
            RPoly::linear(x0[1].clone(), e1[1].clone(), e2[1].clone()),
        ]
    };
    let mono = |xy: &[RPoly; 2], (a, b): (usize, usize)| xy[0].pow(a).mul(&xy[1].pow(b));

    // Normal jumps across the spokes c -> v_i, between fan triangles i-1 and i.
    if nt > 1 {
        for i in 0..nt {
            let (a, b) = (&tris[i][0], &tris[i][1]);
            let d = [&b[0] - &a[0], &b[1] - &a[1]];
            let normal = [d[1].clone(), -d[0].clone()];
            let xy = pull(a, d.clone(), [Q::zero(), Q::zero()]);
            let (left, right) = ((i + nt - 1) % nt, i);
            for j in 0..=k + 1 {
                let sj = RPoly::term(j, 0, Q::one());
                let mut row = vec![Q::zero(); n_unknowns];
                for (m, &e) in mon1.iter().enumerate() {
                    let val = integrate_unit_interval(&mono(&xy, e).mul(&sj));
                    for c in 0..2 {
                        let w = &val * &normal[c];
                        row[col(left, c, m)] += &w;
                        row[col(right, c, m)] -= &w;
                    }
                }
                rows.push(row);
            }
        }
    }

    // ∫_{T_t} (∇·ψ − q) w = 0 for w ∈ P_k.
    for (t, tri) in tris.iter().enumerate() {
        let e1 = [&tri[1][0] - &tri[0][0], &tri[1][1] - &tri[0][1]];
        let e2 = [&tri[2][0] - &tri[0][0], &tri[2][1] - &tri[0][1]];
        let jac = (&e1[0] * &e2[1] - &e1[1] * &e2[0]).abs();
        let xy = pull(&tri[0], e1, e2);
        let integral = |p: &RPoly| integrate_reference_triangle(p) * &jac;
        for &w in &mon0 {
            let mut row = vec![Q::zero(); n_unknowns];
            let wp = mono(&xy, w);
            for (m, &(a, b)) in mon1.iter().enumerate() {
                if a > 0 {
                    let dx = mono(&xy, (a - 1, b)).mul(&wp);
                    row[col(t, 0, m)] += integral(&dx) * qi(a as i64);
                }
                if b > 0 {
                    let dy = mono(&xy, (a, b - 1)).mul(&wp);
                    row[col(t, 1, m)] += integral(&dy) * qi(b as i64);
                }
            }
            for (m, &e) in mon0.iter().enumerate() {
                row[nt * 2 * n1 + m] -= integral(&mono(&xy, e).mul(&wp));
            }
            rows.push(row);
        }
    }
    2 * (n_unknowns - rank(rows))
}
