//! Sparse multivariate polynomials with exchangeable coefficient field.
//!
//! Mass action vector fields reduced to stoichiometric-class coordinates are
//! polynomial, so all derivatives used by the bifurcation machinery are taken
//! symbolically here rather than by finite differences. Coefficients are
//! generic: `f64` for numerical work, `BigRational` where exact polynomial
//! identities are asserted. Exponents may be negative (Laurent terms), which
//! is how the epsilon^-1 rate schedules enter before clearing denominators.

use std::collections::BTreeMap;
use std::fmt;

use crate::exact::{rat_to_f64, Rat};
use num_traits::{One, Signed, Zero};

/// Coefficient field for polynomials: implemented for `f64` and `BigRational`.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rat(r: &Rat) -> Self;
    fn from_int(i: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_rat(r: &Rat) -> Self {
        rat_to_f64(r)
    }
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn is_zero(&self) -> bool {
        <Rat as Zero>::is_zero(self)
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn from_int(i: i64) -> Self {
        crate::exact::rat(i)
    }
    fn to_f64(&self) -> f64 {
        rat_to_f64(self)
    }
}

/// A sparse Laurent polynomial in `nvars` variables.
#[derive(Clone, PartialEq)]
pub struct Poly<S: Scalar> {
    pub nvars: usize,
    /// monomial exponent vector -> coefficient; zero coefficients are never stored
    pub terms: BTreeMap<Vec<i32>, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(exps, S::one());
        p
    }

    /// Monomial c * prod(x_i^e_i); negative exponents allowed.
    pub fn monomial(nvars: usize, exps: Vec<i32>, c: S) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, exps: Vec<i32>, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let v = existing.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = v;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exps: Vec<i32> = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                out.insert_add(exps, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        let mut out = Poly::zero(self.nvars);
        for (e, k) in &self.terms {
            out.terms.insert(e.clone(), k.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Poly::constant(self.nvars, S::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by a single variable raised to an (possibly negative) power.
    pub fn mul_var_pow(&self, var: usize, pow: i32) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps[var] += pow;
            out.terms.insert(exps, c.clone());
        }
        out
    }

    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars);
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let reps = p.unsigned_abs();
                let mut f = S::one();
                for _ in 0..reps {
                    f = f * point[i].clone();
                }
                if p > 0 {
                    t = t * f;
                } else {
                    t = t / f;
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn partial(&self, var: usize) -> Self {
        assert!(var < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let p = e[var];
            if p == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[var] = p - 1;
            out.insert_add(exps, c.clone() * S::from_int(p as i64));
        }
        out
    }

    /// Substitute a numeric value for one variable, producing a polynomial in
    /// the remaining variables (the substituted variable slot is removed).
    pub fn substitute(&self, var: usize, value: &S) -> Poly<S> {
        let mut out = Poly::zero(self.nvars - 1);
        for (e, c) in &self.terms {
            let p = e[var];
            let mut coeff = c.clone();
            if p != 0 {
                let mut f = S::one();
                for _ in 0..p.unsigned_abs() {
                    f = f * value.clone();
                }
                if p > 0 {
                    coeff = coeff * f;
                } else {
                    coeff = coeff / f;
                }
            }
            let mut exps = e.clone();
            exps.remove(var);
            out.insert_add(exps, coeff);
        }
        out
    }

    /// Largest total degree over positive exponents (Laurent parts ignored).
    pub fn total_degree(&self) -> i32 {
        self.terms
            .keys()
            .map(|e| e.iter().filter(|&&p| p > 0).sum::<i32>())
            .max()
            .unwrap_or(0)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }
}

impl Poly<Rat> {
    pub fn to_f64_poly(&self) -> Poly<f64> {
        self.map_coeffs(rat_to_f64)
    }
}

impl<S: Scalar> fmt::Debug for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{:?}", c)?;
            for (i, &p) in e.iter().enumerate() {
                if p != 0 {
                    write!(f, "*x{}^{}", i, p)?;
                }
            }
        }
        Ok(())
    }
}

/// Format a rational scalar for display (integer when possible).
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() || r.denom().abs().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn eval_and_partial() {
        // p = 2 x0^2 x1 - 3 x1
        let x0 = Poly::<f64>::var(2, 0);
        let x1 = Poly::<f64>::var(2, 1);
        let p = x0.pow(2).mul(&x1).scale(&2.0).sub(&x1.scale(&3.0));
        assert_eq!(p.eval(&[2.0, 5.0]), 2.0 * 4.0 * 5.0 - 15.0);
        let dp0 = p.partial(0);
        assert_eq!(dp0.eval(&[2.0, 5.0]), 4.0 * 2.0 * 5.0);
        let dp1 = p.partial(1);
        assert_eq!(dp1.eval(&[2.0, 5.0]), 2.0 * 4.0 - 3.0);
    }

    #[test]
    fn laurent_eval_and_derivative() {
        // p = x0^-1
        let p = Poly::<f64>::monomial(1, vec![-1], 1.0);
        assert_eq!(p.eval(&[4.0]), 0.25);
        let dp = p.partial(0);
        assert_eq!(dp.eval(&[2.0]), -0.25);
    }

    #[test]
    fn exact_rational_identity() {
        // (1+t)(1-k-t^2) expanded == 1 - k + t - kt - t^2 - t^3
        let t = Poly::<Rat>::var(2, 0);
        let k = Poly::<Rat>::var(2, 1);
        let one = Poly::constant(2, rat(1));
        let lhs = one.add(&t).mul(&one.sub(&k).sub(&t.pow(2)));
        let rhs = one
            .sub(&k)
            .add(&t)
            .sub(&k.mul(&t))
            .sub(&t.pow(2))
            .sub(&t.pow(3));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_removes_variable() {
        // p(x, e) = x * e^-1; substitute e = 1/2 -> 2x
        let p = Poly::<f64>::monomial(2, vec![1, -1], 1.0);
        let q = p.substitute(1, &0.5);
        assert_eq!(q.nvars, 1);
        assert_eq!(q.eval(&[3.0]), 6.0);
    }
}
