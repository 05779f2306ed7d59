//! Polynomial manufactured solutions on the unit square.
//!
//! Velocities come from a stream function, `u = (∂_y g, -∂_x g)`, so they are
//! divergence free by construction; the load `f = -Δu + ∇p` is formed by
//! exact polynomial calculus.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::polynomial::{Axis, Polynomial};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: [Polynomial; 2],
    /// Mean-zero on the unit square.
    pub p: Polynomial,
    pub f: [Polynomial; 2],
}

pub fn from_stream_function(name: &str, g: &Polynomial, p: &Polynomial) -> ManufacturedCase {
    let u = [g.diff(Axis::Y), -&g.diff(Axis::X)];
    let mean = p.integrate_unit_square();
    let p = p - &Polynomial::constant(2, mean);
    let f = [
        &(-&u[0].laplacian()) + &p.diff(Axis::X),
        &(-&u[1].laplacian()) + &p.diff(Axis::Y),
    ];
    ManufacturedCase {
        name: name.to_string(),
        u: u.map(|c| c.trimmed()),
        p: p.trimmed(),
        f: f.map(|c| c.trimmed()),
    }
}

/// `g = 16 (x - x²)² (y - y²)²`, `p = ∂_x ∂_y g`.
pub fn case_s1() -> ManufacturedCase {
    let x = Polynomial::x();
    let y = Polynomial::y();
    let bx = &x - &(&x * &x);
    let by = &y - &(&y * &y);
    let g = (&bx.pow(2) * &by.pow(2)).scale(16.0);
    let p = g.diff(Axis::X).diff(Axis::Y);
    from_stream_function("s1", &g, &p)
}

/// `u = (y, x)`, `p = x - 1/2`, so `f = (1, 0)`.
pub fn case_linear() -> ManufacturedCase {
    let x = Polynomial::x();
    let y = Polynomial::y();
    let g = (&(&y * &y) - &(&x * &x)).scale(0.5);
    from_stream_function("linear", &g, &x)
}

/// One polynomial in a stream-function file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialFile {
    pub degree: usize,
    /// Graded-lex coefficients: `1, x, y, x², xy, y², ...`.
    pub coeffs: Vec<f64>,
}

/// `{"stream": {...}, "pressure": {...}}`; the pressure is optional and
/// defaults to zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamFile {
    pub stream: PolynomialFile,
    #[serde(default)]
    pub pressure: Option<PolynomialFile>,
}

impl PolynomialFile {
    fn to_polynomial(&self) -> Result<Polynomial> {
        Polynomial::from_coeffs(2, self.degree, self.coeffs.clone())
    }
}

pub fn case_from_stream_json(name: &str, text: &str) -> Result<ManufacturedCase> {
    let file: StreamFile = serde_json::from_str(text)?;
    let g = file.stream.to_polynomial()?;
    let p = match &file.pressure {
        Some(p) => p.to_polynomial()?,
        None => Polynomial::zero(2, 0),
    };
    Ok(from_stream_function(name, &g, &p))
}

pub fn load_stream_case(path: impl AsRef<Path>) -> Result<ManufacturedCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    case_from_stream_json(&format!("stream:{}", path.display()), &text)
}

/// Resolves `s1`, `linear` or `stream:<file>`.
pub fn case_by_name(name: &str) -> Result<ManufacturedCase> {
    match name {
        "s1" => Ok(case_s1()),
        "linear" => Ok(case_linear()),
        _ => match name.strip_prefix("stream:") {
            Some(path) => load_stream_case(path),
            None => Err(Error::Config(format!(
                "unknown case `{name}` (expected s1, linear or stream:<file>)"
            ))),
        },
    }
}

impl ManufacturedCase {
    // Evaluation is compensated: expanded coefficients of the cases cancel
    // strongly near the boundary.
    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.u[0].eval2_accurate(x[0], x[1]),
            self.u[1].eval2_accurate(x[0], x[1]),
        ]
    }

    pub fn pressure(&self, x: [f64; 2]) -> f64 {
        self.p.eval2_accurate(x[0], x[1])
    }

    pub fn load(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.f[0].eval2_accurate(x[0], x[1]),
            self.f[1].eval2_accurate(x[0], x[1]),
        ]
    }

    pub fn velocity_degree(&self) -> usize {
        self.u[0].degree().max(self.u[1].degree())
    }

    pub fn load_degree(&self) -> usize {
        self.f[0].degree().max(self.f[1].degree())
    }

    pub fn pressure_degree(&self) -> usize {
        self.p.degree()
    }

    /// Largest coefficient of `∂_x u_1 + ∂_y u_2`.
    pub fn divergence_defect(&self) -> f64 {
        (&self.u[0].diff(Axis::X) + &self.u[1].diff(Axis::Y)).max_abs_coeff()
    }

    /// Largest coefficient of `f + Δu - ∇p`.
    pub fn momentum_defect(&self) -> f64 {
        let r0 = &(&self.f[0] + &self.u[0].laplacian()) - &self.p.diff(Axis::X);
        let r1 = &(&self.f[1] + &self.u[1].laplacian()) - &self.p.diff(Axis::Y);
        r0.max_abs_coeff().max(r1.max_abs_coeff())
    }
}
