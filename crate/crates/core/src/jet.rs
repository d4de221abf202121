//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `∂^α f / α!` of a scalar function
//! at a base point for every multi-index `α` with `|α| ≤ order`. Storage is
//! dense in graded-lexicographic order, so a jet of order `k` is a prefix of
//! the order-4 coefficient table and truncation is just zeroing a tail.
//!
//! Dimension is capped at 4 and order at 4, which bounds the coefficient
//! count at 70. Multiplication, differentiation and lookup tables are built
//! once per dimension and shared.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

pub const MAX_DIM: usize = 4;
pub const MAX_ORDER: usize = 4;
/// `C(MAX_ORDER + MAX_DIM, MAX_DIM)`
pub const MAX_COEFFS: usize = 70;

const NO_INDEX: u8 = u8::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet dimension {0} is outside 1..=4")]
    BadDim(usize),
    #[error("jet order {0} exceeds the cap of 4")]
    BadOrder(usize),
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("jet shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: Shape, right: Shape },
    #[error("division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("{func} is undefined at {at}")]
    Domain { func: &'static str, at: f64 },
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    DegreeExceedsOrder { degree: usize, order: usize },
    #[error("multi-index has {got} exponents but the jet has dimension {dim}")]
    MultiIndexDim { got: usize, dim: usize },
    #[error("cannot truncate an order-{from} jet up to order {to}")]
    TruncateUp { from: usize, to: usize },
}

/// Exponent vector of a partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: [u8; MAX_DIM],
    dim: u8,
}

impl MultiIndex {
    pub fn new(exps: &[u8]) -> Result<Self, JetError> {
        if exps.is_empty() || exps.len() > MAX_DIM {
            return Err(JetError::BadDim(exps.len()));
        }
        let degree: usize = exps.iter().map(|&e| e as usize).sum();
        if degree > MAX_ORDER {
            return Err(JetError::BadOrder(degree));
        }
        let mut arr = [0u8; MAX_DIM];
        arr[..exps.len()].copy_from_slice(exps);
        Ok(MultiIndex {
            exps: arr,
            dim: exps.len() as u8,
        })
    }

    pub fn zero(dim: usize) -> Result<Self, JetError> {
        Self::new(&vec![0; dim])
    }

    /// The multi-index `e_i`.
    pub fn unit(i: usize, dim: usize) -> Result<Self, JetError> {
        if i >= dim {
            return Err(JetError::IndexOutOfRange { index: i, dim });
        }
        let mut e = vec![0u8; dim];
        e[i] = 1;
        Self::new(&e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.exps[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn degree(&self) -> usize {
        self.exponents().iter().map(|&e| e as usize).sum()
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.exponents().iter().map(|&e| (1..=e as u32).product::<u32>() as f64).product()
    }
}

/// Dimension and truncation order shared by every jet in a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    dim: u8,
    order: u8,
}

impl Shape {
    pub fn new(dim: usize, order: usize) -> Result<Self, JetError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(JetError::BadDim(dim));
        }
        if order > MAX_ORDER {
            return Err(JetError::BadOrder(order));
        }
        Ok(Shape {
            dim: dim as u8,
            order: order as u8,
        })
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }

    pub fn order(self) -> usize {
        self.order as usize
    }

    /// Number of stored coefficients.
    pub fn len(self) -> usize {
        layout(self.dim()).upto[self.order()]
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn with_order(self, order: usize) -> Result<Self, JetError> {
        Shape::new(self.dim(), order)
    }

    pub fn zero(self) -> Jet {
        Jet {
            shape: self,
            c: [0.0; MAX_COEFFS],
        }
    }

    pub fn constant(self, value: f64) -> Jet {
        let mut j = self.zero();
        j.c[0] = value;
        j
    }

    /// Jet of the coordinate function `x_i` at a point whose `i`-th
    /// coordinate is `value`.
    pub fn variable(self, i: usize, value: f64) -> Result<Jet, JetError> {
        if i >= self.dim() {
            return Err(JetError::IndexOutOfRange { index: i, dim: self.dim() });
        }
        let mut j = self.constant(value);
        if self.order > 0 {
            // degree-1 block follows the constant in graded order: e_0, e_1, ...
            j.c[1 + i] = 1.0;
        }
        Ok(j)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(dim {}, order {})", self.dim, self.order)
    }
}

struct Layout {
    exps: Vec<[u8; MAX_DIM]>,
    /// `upto[k]` = number of multi-indices with degree ≤ k.
    upto: [usize; MAX_ORDER + 1],
    lookup: Vec<u8>,
    /// `(a, b, a+b)` for every ordered pair with `|a| + |b| ≤ MAX_ORDER`,
    /// sorted by result degree.
    mul: Vec<(u8, u8, u8)>,
    mul_upto: [usize; MAX_ORDER + 1],
    /// `shift[m][idx]` = index of `α + e_m`, or `NO_INDEX`.
    shift: Vec<[u8; MAX_COEFFS]>,
}

fn encode(e: &[u8; MAX_DIM]) -> usize {
    e.iter().fold(0usize, |acc, &x| acc * (MAX_ORDER + 1) + x as usize)
}

fn degree_of(e: &[u8; MAX_DIM]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut exps: Vec<[u8; MAX_DIM]> = Vec::new();
        let mut upto = [0usize; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            let mut block = Vec::new();
            collect_degree(dim, deg, 0, &mut [0u8; MAX_DIM], &mut block);
            // lexicographically descending: x0-heavy first
            block.sort_by(|a, b| b.cmp(a));
            exps.extend(block);
            upto[deg] = exps.len();
        }
        let mut lookup = vec![NO_INDEX; (MAX_ORDER + 1).pow(MAX_DIM as u32)];
        for (i, e) in exps.iter().enumerate() {
            lookup[encode(e)] = i as u8;
        }
        let mut mul = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            for (b, eb) in exps.iter().enumerate() {
                if degree_of(ea) + degree_of(eb) > MAX_ORDER {
                    continue;
                }
                let mut s = [0u8; MAX_DIM];
                for k in 0..MAX_DIM {
                    s[k] = ea[k] + eb[k];
                }
                mul.push((a as u8, b as u8, lookup[encode(&s)]));
            }
        }
        mul.sort_by_key(|&(_, _, r)| degree_of(&exps[r as usize]));
        let mut mul_upto = [0usize; MAX_ORDER + 1];
        for (k, slot) in mul_upto.iter_mut().enumerate() {
            *slot = mul.iter().take_while(|&&(_, _, r)| degree_of(&exps[r as usize]) <= k).count();
        }
        let mut shift = Vec::with_capacity(dim);
        for m in 0..dim {
            let mut row = [NO_INDEX; MAX_COEFFS];
            for (i, e) in exps.iter().enumerate() {
                if degree_of(e) < MAX_ORDER {
                    let mut s = *e;
                    s[m] += 1;
                    row[i] = lookup[encode(&s)];
                }
            }
            shift.push(row);
        }
        Layout {
            exps,
            upto,
            lookup,
            mul,
            mul_upto,
            shift,
        }
    }

    fn index_of(&self, alpha: &MultiIndex) -> usize {
        self.lookup[encode(&alpha.exps)] as usize
    }
}

fn collect_degree(dim: usize, remaining: usize, pos: usize, cur: &mut [u8; MAX_DIM], out: &mut Vec<[u8; MAX_DIM]>) {
    if pos == dim - 1 {
        cur[pos] = remaining as u8;
        out.push(*cur);
        cur[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        cur[pos] = e as u8;
        collect_degree(dim, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

fn layout(dim: usize) -> &'static Layout {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    &LAYOUTS.get_or_init(|| (1..=MAX_DIM).map(Layout::build).collect())[dim - 1]
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    shape: Shape,
    c: [f64; MAX_COEFFS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.shape.dim)
            .field("order", &self.shape.order)
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl Jet {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    /// Constant term.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficients in graded-lexicographic order.
    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.shape.len()]
    }

    /// Multi-indices matching [`Jet::coeffs`] position by position.
    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        let lay = layout(self.dim());
        lay.exps[..self.shape.len()]
            .iter()
            .map(|e| MultiIndex {
                exps: *e,
                dim: self.shape.dim,
            })
            .collect()
    }

    fn check_index(&self, alpha: &MultiIndex) -> Result<usize, JetError> {
        if alpha.dim() != self.dim() {
            return Err(JetError::MultiIndexDim {
                got: alpha.dim(),
                dim: self.dim(),
            });
        }
        if alpha.degree() > self.order() {
            return Err(JetError::DegreeExceedsOrder {
                degree: alpha.degree(),
                order: self.order(),
            });
        }
        Ok(layout(self.dim()).index_of(alpha))
    }

    /// Taylor coefficient `∂^α f / α!`.
    pub fn coeff(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        Ok(self.c[self.check_index(alpha)?])
    }

    /// Partial derivative `∂^α f` at the base point.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        Ok(self.c[self.check_index(alpha)?] * alpha.factorial())
    }

    /// Partial derivative from a plain exponent slice.
    pub fn partial_of(&self, exps: &[u8]) -> Result<f64, JetError> {
        self.partial(&MultiIndex::new(exps)?)
    }

    /// First partial `∂_i f` at the base point.
    pub fn d(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim() && self.order() >= 1);
        self.c[1 + i]
    }

    /// Jet of `∂f/∂x_m`, one order lower.
    pub fn derivative(&self, m: usize) -> Result<Jet, JetError> {
        if m >= self.dim() {
            return Err(JetError::IndexOutOfRange { index: m, dim: self.dim() });
        }
        if self.order() == 0 {
            return Err(JetError::DegreeExceedsOrder { degree: 1, order: 0 });
        }
        let lay = layout(self.dim());
        let shape = self.shape.with_order(self.order() - 1)?;
        let mut out = shape.zero();
        let row = &lay.shift[m];
        for (i, slot) in out.c[..shape.len()].iter_mut().enumerate() {
            let j = row[i] as usize;
            *slot = (lay.exps[i][m] as f64 + 1.0) * self.c[j];
        }
        Ok(out)
    }

    /// Drop every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet, JetError> {
        if order > self.order() {
            return Err(JetError::TruncateUp {
                from: self.order(),
                to: order,
            });
        }
        let shape = self.shape.with_order(order)?;
        let mut out = *self;
        out.shape = shape;
        out.c[shape.len()..].iter_mut().for_each(|x| *x = 0.0);
        Ok(out)
    }

    /// Truncate to `order`, leaving lower-order jets untouched.
    pub fn at_most(&self, order: usize) -> Jet {
        if order >= self.order() {
            *self
        } else {
            self.truncate(order).expect("order checked")
        }
    }

    fn same_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.shape != other.shape {
            return Err(JetError::ShapeMismatch {
                left: self.shape,
                right: other.shape,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let mut out = *self;
        for i in 0..self.shape.len() {
            out.c[i] += other.c[i];
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let mut out = *self;
        for i in 0..self.shape.len() {
            out.c[i] -= other.c[i];
        }
        Ok(out)
    }

    /// Truncated Cauchy product.
    pub fn checked_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let lay = layout(self.dim());
        let mut out = self.shape.zero();
        for &(a, b, r) in &lay.mul[..lay.mul_upto[self.order()]] {
            out.c[r as usize] += self.c[a as usize] * other.c[b as usize];
        }
        Ok(out)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        self.checked_mul(&other.recip()?)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        out.c[..self.shape.len()].iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = *self;
        out.c[0] += s;
        out
    }

    /// Evaluate the univariate Taylor polynomial `Σ d_m h^m` at
    /// `h = self − value`, where `d` holds the coefficients of the outer
    /// function at the constant term.
    fn compose_series(&self, d: &[f64]) -> Jet {
        let k = self.order();
        let mut h = *self;
        h.c[0] = 0.0;
        let mut acc = self.shape.constant(d[k]);
        for m in (0..k).rev() {
            acc = acc.checked_mul(&h).expect("same shape").add_scalar(d[m]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::ZeroDivisor);
        }
        let d: Vec<f64> = (0..=self.order()).map(|m| (-1f64).powi(m as i32) / c.powi(m as i32 + 1)).collect();
        Ok(self.compose_series(&d))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&[s, c, -s / 2.0, -c / 6.0, s / 24.0][..=self.order()])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&[c, -s, -c / 2.0, s / 6.0, c / 24.0][..=self.order()])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose_series(&[e, e, e / 2.0, e / 6.0, e / 24.0][..=self.order()])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose_series(&[s, c, s / 2.0, c / 6.0, s / 24.0][..=self.order()])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose_series(&[c, s, c / 2.0, s / 6.0, c / 24.0][..=self.order()])
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain { func: "sqrt", at: c });
        }
        // binomial series of (c + h)^(1/2)
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for m in 0..=self.order() {
            if m > 0 {
                binom *= (0.5 - (m as f64 - 1.0)) / m as f64;
            }
            d.push(binom * c.powf(0.5 - m as f64));
        }
        Ok(self.compose_series(&d))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain { func: "log", at: c });
        }
        let mut d = vec![c.ln()];
        for m in 1..=self.order() {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign / (m as f64 * c.powi(m as i32)));
        }
        Ok(self.compose_series(&d))
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        let base = if n < 0 { self.recip()? } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = self.shape.constant(1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq;
            }
            e >>= 1;
            if e > 0 {
                sq = sq * sq;
            }
        }
        Ok(acc)
    }

    pub fn apply(&self, f: Elementary) -> Result<Jet, JetError> {
        match f {
            Elementary::Sin => Ok(self.sin()),
            Elementary::Cos => Ok(self.cos()),
            Elementary::Exp => Ok(self.exp()),
            Elementary::Sinh => Ok(self.sinh()),
            Elementary::Cosh => Ok(self.cosh()),
            Elementary::Sqrt => self.sqrt(),
            Elementary::Log => self.ln(),
            Elementary::PowInt(n) => self.powi(n),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Elementary functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
    Sqrt,
    Log,
    PowInt(i32),
}

impl Elementary {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Elementary::Sin => x.sin(),
            Elementary::Cos => x.cos(),
            Elementary::Exp => x.exp(),
            Elementary::Sinh => x.sinh(),
            Elementary::Cosh => x.cosh(),
            Elementary::Sqrt => x.sqrt(),
            Elementary::Log => x.ln(),
            Elementary::PowInt(n) => x.powi(n),
        }
    }
}

// Operator impls panic on shape mismatch; use the `checked_*` methods when
// shapes come from user input.

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.checked_add(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.checked_sub(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.checked_mul(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self.checked_div(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.add_scalar(-rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{nested_partial, Stencil};
    use proptest::prelude::*;

    fn shape(dim: usize, order: usize) -> Shape {
        Shape::new(dim, order).unwrap()
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(shape(4, 4).len(), 70);
        assert_eq!(shape(2, 2).len(), 6);
        assert_eq!(shape(3, 0).len(), 1);
        assert_eq!(shape(1, 4).len(), 5);
    }

    #[test]
    fn variable_jet() {
        let x = shape(2, 2).variable(0, 2.0).unwrap();
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.partial_of(&[1, 0]).unwrap(), 1.0);
        assert_eq!(x.partial_of(&[0, 1]).unwrap(), 0.0);
        assert_eq!(x.partial_of(&[2, 0]).unwrap(), 0.0);
        assert_eq!(x.partial_of(&[1, 1]).unwrap(), 0.0);

        let y = shape(2, 4).variable(1, -1.0).unwrap();
        assert_eq!(y.partial_of(&[0, 1]).unwrap(), 1.0);
        assert_eq!(y.partial_of(&[0, 0]).unwrap(), -1.0);

        assert!(matches!(
            shape(2, 2).variable(2, 0.0),
            Err(JetError::IndexOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn constant_has_no_derivatives() {
        let c = shape(3, 4).constant(5.0);
        for alpha in c.multi_indices().iter().skip(1) {
            assert_eq!(c.partial(alpha).unwrap(), 0.0);
        }
        assert_eq!(c.partial(&MultiIndex::zero(3).unwrap()).unwrap(), 5.0);
    }

    #[test]
    fn product_mixed_partial() {
        let s = shape(2, 2);
        let xy = s.variable(0, 2.0).unwrap() * s.variable(1, 3.0).unwrap();
        assert_eq!(xy.value(), 6.0);
        assert_eq!(xy.partial_of(&[1, 1]).unwrap(), 1.0);
        assert_eq!(xy.partial_of(&[1, 0]).unwrap(), 3.0);
        assert_eq!(xy.partial_of(&[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn geometric_series() {
        let s = shape(1, 3);
        let one_plus_x = s.variable(0, 0.0).unwrap() + 1.0;
        let r = s.constant(1.0) / one_plus_x;
        assert_eq!(r.coeffs(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn sine_series() {
        let x = shape(1, 3).variable(0, 0.0).unwrap();
        let s = x.sin();
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (a, b) in s.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_of_zero_fills_inverse_factorials() {
        let s = shape(2, 4);
        let e = s.constant(0.0).exp();
        assert_eq!(e.value(), 1.0);
        // a constant inner jet has no derivative content
        assert!(e.coeffs()[1..].iter().all(|&c| c == 0.0));
        // with a variable inside, coefficients are 1/α!
        let x = s.variable(0, 0.0).unwrap() + s.variable(1, 0.0).unwrap();
        let e = x.exp();
        for alpha in e.multi_indices() {
            // exp(x+y) = Σ x^a y^b / (a! b!)
            let want = 1.0 / alpha.factorial();
            assert!((e.coeff(&alpha).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        let a = shape(2, 2).constant(1.0);
        let b = shape(2, 3).constant(1.0);
        assert!(matches!(a.checked_mul(&b), Err(JetError::ShapeMismatch { .. })));
        assert_eq!(a.checked_div(&shape(2, 2).constant(0.0)), Err(JetError::ZeroDivisor));
        assert!(matches!(
            shape(1, 2).constant(-1.0).sqrt(),
            Err(JetError::Domain { func: "sqrt", .. })
        ));
        assert!(matches!(shape(1, 2).constant(0.0).ln(), Err(JetError::Domain { func: "log", .. })));
        assert!(matches!(
            a.partial_of(&[2, 1]),
            Err(JetError::DegreeExceedsOrder { degree: 3, order: 2 })
        ));
        assert!(Shape::new(5, 1).is_err());
        assert!(Shape::new(2, 5).is_err());
        assert!(a.derivative(2).is_err());
        assert!(shape(2, 0).constant(1.0).derivative(0).is_err());
        assert!(a.truncate(3).is_err());
    }

    #[test]
    fn derivative_lowers_order() {
        let s = shape(2, 3);
        let x = s.variable(0, 0.5).unwrap();
        let y = s.variable(1, -0.2).unwrap();
        let f = x * x * y; // ∂x f = 2xy, ∂x∂y = 2x
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 2.0 * 0.5 * -0.2).abs() < 1e-15);
        assert!((fx.partial_of(&[0, 1]).unwrap() - 1.0).abs() < 1e-15);
        assert!((fx.partial_of(&[1, 0]).unwrap() - 2.0 * -0.2).abs() < 1e-15);
    }

    /// Brute-force polynomial product: coefficients in monomials about the
    /// origin, multiplied by convolution, then differentiated exactly at a
    /// point.
    #[test]
    fn product_of_quadratics_matches_expansion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let monos: Vec<(u32, u32)> = vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        for _ in 0..20 {
            let p: Vec<f64> = monos.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q: Vec<f64> = monos.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pt: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            // brute force product
            let mut prod: std::collections::BTreeMap<(u32, u32), f64> = Default::default();
            for (i, a) in monos.iter().enumerate() {
                for (j, b) in monos.iter().enumerate() {
                    *prod.entry((a.0 + b.0, a.1 + b.1)).or_default() += p[i] * q[j];
                }
            }
            let falling = |n: u32, k: u32| -> f64 {
                if k > n {
                    0.0
                } else {
                    (0..k).map(|t| (n - t) as f64).product()
                }
            };
            let exact = |ax: u32, ay: u32| -> f64 {
                prod.iter()
                    .map(|(&(ex, ey), &c)| {
                        if ex < ax || ey < ay {
                            0.0
                        } else {
                            c * falling(ex, ax) * falling(ey, ay) * pt[0].powi((ex - ax) as i32) * pt[1].powi((ey - ay) as i32)
                        }
                    })
                    .sum()
            };
            let s = shape(2, 4);
            let x = s.variable(0, pt[0]).unwrap();
            let y = s.variable(1, pt[1]).unwrap();
            let build = |c: &[f64]| {
                let terms = [s.constant(1.0), x, y, x * x, x * y, y * y];
                terms.iter().zip(c).fold(s.zero(), |acc, (t, &k)| acc + *t * k)
            };
            let jp = build(&p) * build(&q);
            for alpha in jp.multi_indices() {
                let e = alpha.exponents();
                let want = exact(e[0] as u32, e[1] as u32);
                let got = jp.partial(&alpha).unwrap();
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{alpha:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn composite_matches_finite_differences() {
        let s = shape(2, 4);
        let p = [0.3, 0.1];
        let x = s.variable(0, p[0]).unwrap();
        let y = s.variable(1, p[1]).unwrap();
        let j = (x * x + y).sin();
        let f = |q: &[f64]| (q[0] * q[0] + q[1]).sin();
        for alpha in j.multi_indices() {
            let fd = nested_partial(&f, &p, alpha.exponents(), Stencil::Eighth, 0.05);
            let got = j.partial(&alpha).unwrap();
            assert!((got - fd).abs() <= 1e-7 * fd.abs().max(1.0), "{alpha:?}: jet {got} fd {fd}");
        }
    }

    #[test]
    fn every_elementary_matches_finite_differences() {
        let s = shape(2, 4);
        let p = [0.4, 0.7];
        let funcs = [
            Elementary::Sin,
            Elementary::Cos,
            Elementary::Exp,
            Elementary::Sinh,
            Elementary::Cosh,
            Elementary::Sqrt,
            Elementary::Log,
            Elementary::PowInt(3),
            Elementary::PowInt(-2),
        ];
        for func in funcs {
            // inner g = 1 + x y + 0.5 y² keeps sqrt/log in their domains
            let x = s.variable(0, p[0]).unwrap();
            let y = s.variable(1, p[1]).unwrap();
            let inner = x * y + y * y * 0.5 + 1.0;
            let j = inner.apply(func).unwrap();
            let f = |q: &[f64]| func.eval(1.0 + q[0] * q[1] + 0.5 * q[1] * q[1]);
            for alpha in j.multi_indices() {
                let fd = nested_partial(&f, &p, alpha.exponents(), Stencil::Eighth, 0.05);
                let got = j.partial(&alpha).unwrap();
                assert!(
                    (got - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                    "{func:?} {alpha:?}: jet {got} fd {fd}"
                );
            }
        }
    }

    #[test]
    fn chain_rule_on_polynomial_inner() {
        // exp(g) for polynomial g versus the jet of exp(g) built from exp and
        // products directly: exp(x + y²) = exp(x)·exp(y²)
        let s = shape(2, 4);
        let x = s.variable(0, 0.2).unwrap();
        let y = s.variable(1, -0.3).unwrap();
        let a = (x + y * y).exp();
        let b = x.exp() * (y * y).exp();
        for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    fn jet_strategy() -> impl Strategy<Value = Jet> {
        (1usize..=4, 0usize..=4)
            .prop_flat_map(|(dim, order)| {
                let len = Shape::new(dim, order).unwrap().len();
                (Just(dim), Just(order), prop::collection::vec(-4i32..=4, len))
            })
            .prop_map(|(dim, order, cs)| {
                // small integers keep products exact in f64
                let s = Shape::new(dim, order).unwrap();
                let mut j = s.zero();
                for (i, c) in cs.iter().enumerate() {
                    j.c[i] = *c as f64;
                }
                j
            })
    }

    fn triple() -> impl Strategy<Value = (Jet, Jet, Jet)> {
        jet_strategy().prop_flat_map(|a| {
            let s = a.shape();
            let len = s.len();
            (
                Just(a),
                prop::collection::vec(-4i32..=4, len),
                prop::collection::vec(-4i32..=4, len),
            )
                .prop_map(move |(a, b, c)| {
                    let mk = |v: &[i32]| {
                        let mut j = s.zero();
                        for (i, x) in v.iter().enumerate() {
                            j.c[i] = *x as f64;
                        }
                        j
                    };
                    (a, mk(&b), mk(&c))
                })
        })
    }

    proptest! {
        #[test]
        fn ring_laws_are_exact((a, b, c) in triple()) {
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }

        #[test]
        fn reciprocal_is_inverse(a in jet_strategy()) {
            let mut a = a;
            a.c[0] = if a.c[0] == 0.0 { 3.0 } else { a.c[0] };
            let one = a * a.recip().unwrap();
            prop_assert!((one.value() - 1.0).abs() < 1e-12);
            for c in &one.coeffs()[1..] {
                prop_assert!(c.abs() < 1e-9);
            }
        }
    }
}
