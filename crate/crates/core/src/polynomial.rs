//! Dense polynomials in one or two variables.
//!
//! Coefficients are stored over the monomial basis of total degree at most
//! `degree`, in graded-lexicographic order. In two variables the monomial
//! `x^a y^b` sits at index `d(d+1)/2 + b` where `d = a + b`, so the order is
//! `1, x, y, x^2, xy, y^2, x^3, ...`. In one variable the index is the power.
//!
//! Element-local polynomials throughout the crate live in scaled coordinates
//! `(x - x_T) / h_T`; [`AffineMap`] converts between the two frames.

use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

/// Number of monomials of total degree `<= degree` in `dim` variables.
pub fn n_monomials(dim: usize, degree: usize) -> usize {
    match dim {
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        _ => panic!("unsupported polynomial dimension {dim}"),
    }
}

/// Graded-lex index of `x^a y^b`.
#[inline]
pub fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Exponents `(a, b)` of the monomial at graded-lex index `idx`.
pub fn monomial_exponents(idx: usize) -> (usize, usize) {
    let mut d = 0;
    while (d + 1) * (d + 2) / 2 <= idx {
        d += 1;
    }
    let b = idx - d * (d + 1) / 2;
    (d - b, b)
}

/// Writes the values of all 2D monomials of degree `<= degree` at `(x, y)`
/// into `out` (graded-lex order).
pub fn eval_monomials(degree: usize, x: f64, y: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= n_monomials(2, degree));
    out[0] = 1.0;
    let mut start = 0;
    for d in 1..=degree {
        let next = start + d;
        // x * (row d-1) gives x^d ... x y^(d-1); the last entry is y * y^(d-1).
        for j in 0..d {
            out[next + j] = out[start + j] * x;
        }
        out[next + d] = out[start + d - 1] * y;
        start = next;
    }
}

/// Values and first derivatives of all 2D monomials of degree `<= degree`.
pub fn eval_monomials_grad(
    degree: usize,
    x: f64,
    y: f64,
    val: &mut [f64],
    dx: &mut [f64],
    dy: &mut [f64],
) {
    eval_monomials(degree, x, y, val);
    for idx in 0..n_monomials(2, degree) {
        let (a, b) = monomial_exponents(idx);
        dx[idx] = if a > 0 {
            a as f64 * val[monomial_index(a - 1, b)]
        } else {
            0.0
        };
        dy[idx] = if b > 0 {
            b as f64 * val[monomial_index(a, b - 1)]
        } else {
            0.0
        };
    }
}

/// Coordinate axis for differentiation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Affine change of variables `x -> (x - origin) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub origin: [f64; 2],
    pub scale: f64,
}

impl AffineMap {
    pub fn new(origin: [f64; 2], scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateDomain(format!(
                "affine map scale must be positive, got {scale}"
            )));
        }
        Ok(Self { origin, scale })
    }

    pub fn identity() -> Self {
        Self {
            origin: [0.0, 0.0],
            scale: 1.0,
        }
    }

    #[inline]
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.origin[0]) / self.scale,
            (p[1] - self.origin[1]) / self.scale,
        ]
    }

    #[inline]
    pub fn inverse(&self, q: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.scale * q[0],
            self.origin[1] + self.scale * q[1],
        ]
    }
}

/// Unevaluated sum `hi + lo`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        Self::two_sum(s.hi, lo)
    }

    fn mul(self, x: f64) -> Dd {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p);
        Self::two_sum(p, e + self.lo * x)
    }

    fn mul_add(self, x: f64, c: f64) -> Dd {
        self.mul(x).add(Dd { hi: c, lo: 0.0 })
    }
}

/// A dense polynomial in one (`dim == 1`) or two (`dim == 2`) variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim == 1 || dim == 2, "polynomial dimension must be 1 or 2");
        Self {
            dim,
            degree,
            coeffs: vec![0.0; n_monomials(dim, degree)],
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim, 0);
        p.coeffs[0] = c;
        p
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::DimensionMismatch { left: dim, right: 2 });
        }
        if coeffs.len() != n_monomials(dim, degree) {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients for degree {degree} in {dim}D, got {}",
                n_monomials(dim, degree),
                coeffs.len()
            )));
        }
        Ok(Self {
            dim,
            degree,
            coeffs,
        })
    }

    /// The monomial `c x^a y^b` in two variables.
    pub fn monomial(a: usize, b: usize, c: f64) -> Self {
        let mut p = Self::zero(2, a + b);
        p.coeffs[monomial_index(a, b)] = c;
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    /// The variable `t` of a one-variable polynomial.
    pub fn t() -> Self {
        Self {
            dim: 1,
            degree: 1,
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^a y^b` (or `t^a` in one variable); zero beyond the
    /// stored degree.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        match self.dim {
            1 => {
                debug_assert_eq!(b, 0);
                self.coeffs.get(a).copied().unwrap_or(0.0)
            }
            _ => {
                if a + b > self.degree {
                    0.0
                } else {
                    self.coeffs[monomial_index(a, b)]
                }
            }
        }
    }

    fn exponents(&self, idx: usize) -> (usize, usize) {
        match self.dim {
            1 => (idx, 0),
            _ => monomial_exponents(idx),
        }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        match self.dim {
            1 => a,
            _ => monomial_index(a, b),
        }
    }

    /// Same polynomial stored at a larger degree (zero padded).
    pub fn padded(&self, degree: usize) -> Self {
        assert!(degree >= self.degree);
        let mut out = Self::zero(self.dim, degree);
        for (i, &c) in self.coeffs.iter().enumerate() {
            let (a, b) = self.exponents(i);
            let j = out.index(a, b);
            out.coeffs[j] = c;
        }
        out
    }

    /// Drops trailing degrees whose coefficients are exactly zero.
    pub fn trimmed(&self) -> Self {
        let mut deg = self.degree;
        while deg > 0 {
            let lo = n_monomials(self.dim, deg - 1);
            if self.coeffs[lo..n_monomials(self.dim, deg)]
                .iter()
                .any(|&c| c != 0.0)
            {
                break;
            }
            deg -= 1;
        }
        Self {
            dim: self.dim,
            degree: deg,
            coeffs: self.coeffs[..n_monomials(self.dim, deg)].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = self.padded(self.degree.max(other.degree));
        for (i, &c) in other.coeffs.iter().enumerate() {
            let (a, b) = other.exponents(i);
            let j = out.index(a, b);
            out.coeffs[j] += sign * c;
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (a, b) = self.exponents(i);
            for (j, &d) in other.coeffs.iter().enumerate() {
                let (a2, b2) = other.exponents(j);
                let k = out.index(a + a2, b + b2);
                out.coeffs[k] += c * d;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Exact partial derivative. The result has degree `degree - 1` (or 0).
    pub fn diff(&self, axis: Axis) -> Self {
        if self.dim == 1 && axis == Axis::Y {
            return Self::zero(1, 0);
        }
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(1));
        for (i, &c) in self.coeffs.iter().enumerate() {
            let (a, b) = self.exponents(i);
            match axis {
                Axis::X if a > 0 => {
                    let j = out.index(a - 1, b);
                    out.coeffs[j] += a as f64 * c;
                }
                Axis::Y if b > 0 => {
                    let j = out.index(a, b - 1);
                    out.coeffs[j] += b as f64 * c;
                }
                _ => {}
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let xx = self.diff(Axis::X).diff(Axis::X);
        let yy = self.diff(Axis::Y).diff(Axis::Y);
        &xx + &yy
    }

    /// Evaluates at `point` (`point.len()` must equal the dimension).
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim, "evaluation point dimension");
        match self.dim {
            1 => self
                .coeffs
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * point[0] + c),
            _ => self.eval2(point[0], point[1]),
        }
    }

    /// Two-variable evaluation: Horner in `x` for each power of `y`.
    pub fn eval2(&self, x: f64, y: f64) -> f64 {
        debug_assert_eq!(self.dim, 2);
        let n = self.degree;
        let mut result = 0.0;
        for b in (0..=n).rev() {
            let mut inner = 0.0;
            for a in (0..=n - b).rev() {
                inner = inner * x + self.coeffs[monomial_index(a, b)];
            }
            result = result * y + inner;
        }
        result
    }

    /// Like [`Polynomial::eval2`] but carried out in double-double
    /// arithmetic, so cancellation between large coefficients does not
    /// show in the result.
    pub fn eval2_accurate(&self, x: f64, y: f64) -> f64 {
        debug_assert_eq!(self.dim, 2);
        let n = self.degree;
        let mut result = Dd::ZERO;
        for b in (0..=n).rev() {
            let mut inner = Dd::ZERO;
            for a in (0..=n - b).rev() {
                inner = inner.mul_add(x, self.coeffs[monomial_index(a, b)]);
            }
            result = result.mul(y).add(inner);
        }
        result.hi + result.lo
    }

    /// `q(z) = p((z - origin) / scale)`, expanded exactly.
    pub fn compose_affine(&self, map: &AffineMap) -> Self {
        let s = 1.0 / map.scale;
        match self.dim {
            1 => {
                let lin = Self {
                    dim: 1,
                    degree: 1,
                    coeffs: vec![-map.origin[0] * s, s],
                };
                let mut out = Self::zero(1, self.degree);
                let mut power = Self::constant(1, 1.0);
                for &c in &self.coeffs {
                    out = &out + &power.scale(c);
                    power = &power * &lin;
                }
                out
            }
            _ => {
                let lx = Self::from_coeffs(2, 1, vec![-map.origin[0] * s, s, 0.0]).unwrap();
                let ly = Self::from_coeffs(2, 1, vec![-map.origin[1] * s, 0.0, s]).unwrap();
                let n = self.degree;
                let px: Vec<Self> = (0..=n).map(|i| lx.pow(i as u32)).collect();
                let py: Vec<Self> = (0..=n).map(|i| ly.pow(i as u32)).collect();
                let mut out = Self::zero(2, n);
                for (i, &c) in self.coeffs.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let (a, b) = monomial_exponents(i);
                    let term = (&px[a] * &py[b]).scale(c);
                    out = &out + &term;
                }
                out
            }
        }
    }

    /// Restriction of a two-variable polynomial to the line
    /// `t -> start + t * direction`.
    pub fn restrict_to_line(&self, start: [f64; 2], direction: [f64; 2]) -> Self {
        assert_eq!(self.dim, 2);
        let lx = Self {
            dim: 1,
            degree: 1,
            coeffs: vec![start[0], direction[0]],
        };
        let ly = Self {
            dim: 1,
            degree: 1,
            coeffs: vec![start[1], direction[1]],
        };
        let mut out = Self::zero(1, self.degree);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (a, b) = monomial_exponents(i);
            out = &out + &(&lx.pow(a as u32) * &ly.pow(b as u32)).scale(c);
        }
        out
    }

    /// Exact integral over the unit square `(0,1)^2`.
    pub fn integrate_unit_square(&self) -> f64 {
        assert_eq!(self.dim, 2);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (a, b) = monomial_exponents(i);
                c / ((a + 1) * (b + 1)) as f64
            })
            .sum()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
