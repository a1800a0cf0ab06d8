//! Sparse multivariate polynomials with `f64` coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A polynomial in `dim` variables stored as a map from multi-exponent to
/// coefficient. Duplicate exponents are always merged and exact zeros dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialRepr", from = "PolynomialRepr")]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn monomial(dim: usize, exponents: Vec<u32>, coefficient: f64) -> Self {
        assert_eq!(exponents.len(), dim, "exponent length must equal dimension");
        let mut p = Self::zero(dim);
        p.add_term(exponents, coefficient);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(dim, e, 1.0)
    }

    /// `c + <g, x>`.
    pub fn affine(c: f64, gradient: &[f64]) -> Self {
        let dim = gradient.len();
        let mut p = Self::constant(dim, c);
        for (i, &g) in gradient.iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = 1;
            p.add_term(e, g);
        }
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, Vec<u32>)>,
    {
        let mut p = Self::zero(dim);
        for (c, e) in terms {
            assert_eq!(e.len(), dim, "exponent length must equal dimension");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(coefficient);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coefficient;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(coefficient, exponents)` in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (f64, &[u32])> {
        self.terms.iter().map(|(e, &c)| (c, e.as_slice()))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().map(|(e, &c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, terms: self.terms.iter().map(|(e, &c)| (e.clone(), c * s)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.dim, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * e[i] as f64);
        }
        out
    }

    /// Substitutes `x = A y + b`, giving a polynomial in `y` (dimension = columns of `A`).
    pub fn compose_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Self {
        assert_eq!(a.nrows(), self.dim);
        assert_eq!(b.len(), self.dim);
        let m = a.ncols();
        let coords: Vec<Polynomial> = (0..self.dim)
            .map(|i| {
                let row: Vec<f64> = (0..m).map(|j| a[(i, j)]).collect();
                Polynomial::affine(b[i], &row)
            })
            .collect();
        // cache powers of each substituted coordinate
        let mut powers: Vec<Vec<Polynomial>> =
            coords.iter().map(|c| vec![Polynomial::constant(m, 1.0), c.clone()]).collect();
        let mut out = Self::zero(m);
        for (e, &c) in &self.terms {
            let mut term = Polynomial::constant(m, c);
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap() * &coords[i];
                    powers[i].push(next);
                }
                if k > 0 {
                    term = &term * &powers[i][k as usize];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Drops terms with `|c| <= eps`.
    pub fn pruned(&self, eps: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(_, c)| c.abs() > eps).map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        Self { dim: p.dim, terms: p.terms.into_iter().map(|(e, c)| (c, e)).collect() }
    }
}

impl From<PolynomialRepr> for Polynomial {
    fn from(r: PolynomialRepr) -> Self {
        let mut p = Polynomial::zero(r.dim);
        for (c, e) in r.terms {
            if e.len() == r.dim {
                p.add_term(e, c);
            }
        }
        p
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Polynomial { dim: self.dim, terms: acc }
    }
}

impl fmt::Display for Polynomial {
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
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

/// All multi-exponents in `dim` variables with total degree `<= max_degree`,
/// ordered by total degree, then lexicographically descending.
pub fn multi_indices(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut cur = vec![0u32; dim];
        fill(dim, 0, deg, &mut cur, &mut out);
    }
    out
}

fn fill(dim: usize, pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if dim == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == dim - 1 {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        fill(dim, pos + 1, remaining - k, cur, out);
    }
    cur[pos] = 0;
}
