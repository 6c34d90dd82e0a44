//! Homogeneous polynomials over `f64` or exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{arg, Result, TensorError};

/// Scalar field for polynomial coefficients.
pub trait Coefficient:
    Clone + PartialEq + PartialOrd + Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_count(n: u64) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// Nonnegative `k`-th root, if representable in this field.
    fn root(&self, k: u32) -> Option<Self>;
}

impl Coefficient for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn div(&self, other: &Self) -> Self {
        self / other
    }

    fn root(&self, k: u32) -> Option<Self> {
        match k {
            _ if *self < 0.0 => None,
            1 => Some(*self),
            2 => Some(self.sqrt()),
            _ => Some(self.powf(1.0 / k as f64)),
        }
    }
}

impl Coefficient for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn div(&self, other: &Self) -> Self {
        self / other
    }

    fn root(&self, k: u32) -> Option<Self> {
        if self.is_negative() || k == 0 {
            return None;
        }
        let exact = |v: &BigInt| {
            let r = v.nth_root(k);
            (num_traits::pow(r.clone(), k as usize) == *v).then_some(r)
        };
        Some(BigRational::new(exact(self.numer())?, exact(self.denom())?))
    }
}

/// Exponent vector; entries sum to the degree.
pub type Exponent = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    degree: usize,
    nvars: usize,
    terms: BTreeMap<Exponent, T>,
}

pub type HomogeneousPolynomial = Poly<f64>;
pub type RationalPolynomial = Poly<BigRational>;

impl<T: Coefficient> Poly<T> {
    pub fn zero(degree: usize, nvars: usize) -> Self {
        Self { degree, nvars, terms: BTreeMap::new() }
    }

    /// Collect terms, summing repeated exponents and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (Exponent, T)>>(degree: usize, nvars: usize, terms: I) -> Result<Self> {
        let mut p = Self::zero(degree, nvars);
        for (exp, c) in terms {
            if exp.len() != nvars {
                return arg(format!("exponent {exp:?} has length {}, expected {nvars}", exp.len()));
            }
            let d: u32 = exp.iter().sum();
            if d as usize != degree {
                return arg(format!("exponent {exp:?} has degree {d}, expected {degree}"));
            }
            p.add_term(exp, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exp: Exponent, c: T) {
        let slot = self.terms.entry(exp).or_insert_with(T::zero);
        *slot = slot.clone() + c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn coef(&self, exp: &[u32]) -> T {
        self.terms.get(exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree || self.nvars != other.nvars {
            return arg("polynomials differ in degree or number of variables");
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.degree, self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), c.clone() * v.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars {
            return arg("polynomials have different numbers of variables");
        }
        let mut out = Self::zero(self.degree + other.degree, self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> Self {
        self.mul(self).expect("same number of variables")
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        let mut out = Poly::zero(self.degree, self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }
}

impl Poly<f64> {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return arg(format!("point has length {}, polynomial has {} variables", x.len(), self.nvars));
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: PolyFile = serde_json::from_str(s).map_err(|e| TensorError::Parse(e.to_string()))?;
        if let Some(t) = f.terms.iter().find(|t| !t.coef.is_finite()) {
            return arg(format!("coefficient of {:?} is not finite", t.exp));
        }
        Self::from_terms(f.degree, f.nvars, f.terms.into_iter().map(|t| (t.exp, t.coef)))
    }

    pub fn to_json(&self) -> String {
        let f = PolyFile {
            degree: self.degree,
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, &c)| TermFile { exp: e.clone(), coef: c }).collect(),
        };
        serde_json::to_string(&f).expect("polynomial serialization cannot fail")
    }
}

impl Poly<BigRational> {
    /// Exact embedding of a float polynomial.
    pub fn from_float(p: &Poly<f64>) -> Self {
        p.map(|&c| BigRational::from_float(c).expect("finite coefficient"))
    }
}

#[derive(Serialize, Deserialize)]
struct PolyFile {
    degree: usize,
    nvars: usize,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    exp: Exponent,
    coef: f64,
}
