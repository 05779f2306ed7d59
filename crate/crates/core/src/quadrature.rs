//! Gauss rules on the unit segment and collapsed (Duffy) Gauss rules on the
//! unit triangle, parameterized by the polynomial degree they integrate
//! exactly.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::{Error, Result};

/// Reference domain of a rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// `[0, 1]`, points stored as `[t, 0]`.
    UnitSegment,
    /// `{x, y >= 0, x + y <= 1}`.
    UnitTriangle,
    /// A rule already mapped onto a physical segment or triangle.
    Physical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
    pub reference: Reference,
}

/// Physical domain for [`map_rule`].
#[derive(Clone, Copy, Debug)]
pub enum Domain {
    Segment([f64; 2], [f64; 2]),
    Triangle([f64; 2], [f64; 2], [f64; 2]),
}

/// Gauss-Legendre nodes and weights on `[0, 1]` with `n` points.
fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("at least one point"));
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

pub fn edge_rule(exact_degree: usize) -> QuadRule {
    let n = exact_degree / 2 + 1;
    let (points, weights) = gauss_unit(n).into_iter().map(|(x, w)| ([x, 0.0], w)).unzip();
    QuadRule {
        points,
        weights,
        exact_degree,
        reference: Reference::UnitSegment,
    }
}

/// Collapsed tensor rule: `x = u (1 - v)`, `y = v`, Jacobian `1 - v`.
pub fn triangle_rule(exact_degree: usize) -> QuadRule {
    let nu = exact_degree / 2 + 1;
    // The Jacobian adds one degree in v.
    let nv = exact_degree.div_ceil(2) + 1;
    let gu = gauss_unit(nu);
    let gv = gauss_unit(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for &(v, wv) in &gv {
        for &(u, wu) in &gu {
            points.push([u * (1.0 - v), v]);
            weights.push(wu * wv * (1.0 - v));
        }
    }
    QuadRule {
        points,
        weights,
        exact_degree,
        reference: Reference::UnitTriangle,
    }
}

fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Maps a reference rule onto a physical segment or triangle. Weights are
/// scaled by the segment length or by `|det J|`.
pub fn map_rule(rule: &QuadRule, domain: &Domain) -> Result<QuadRule> {
    let (points, weights) = match (*domain, rule.reference) {
        (Domain::Segment(a, b), Reference::UnitSegment) => {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if !(len > 0.0) {
                return Err(Error::DegenerateDomain("zero-length segment".into()));
            }
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let t = p[0];
                    (
                        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                        w * len,
                    )
                })
                .unzip()
        }
        (Domain::Triangle(a, b, c), Reference::UnitTriangle) => {
            let det = cross(a, b, c);
            if det == 0.0 || !det.is_finite() {
                return Err(Error::DegenerateDomain("zero-area triangle".into()));
            }
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let (s, t) = (p[0], p[1]);
                    (
                        [
                            a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                            a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
                        ],
                        w * det.abs(),
                    )
                })
                .unzip()
        }
        _ => {
            return Err(Error::InvalidInput(
                "rule reference domain does not match the target domain".into(),
            ))
        }
    };
    Ok(QuadRule {
        points,
        weights,
        exact_degree: rule.exact_degree,
        reference: Reference::Physical,
    })
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}
