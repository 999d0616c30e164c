use std::ops::{Add, Mul, Neg, Sub};

use super::VarId;

/// `constant + Σ coeff_i · x_i`. Terms are kept merged and sorted by variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.terms
            .binary_search_by_key(&v, |&(w, _)| w)
            .map_or(0.0, |i| self.terms[i].1)
    }

    pub fn add_term(&mut self, v: VarId, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => {
                self.terms[i].1 += coeff;
                if self.terms[i].1 == 0.0 {
                    self.terms.remove(i);
                }
            }
            Err(i) => self.terms.insert(i, (v, coeff)),
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn scale(&mut self, s: f64) {
        if s == 0.0 {
            self.terms.clear();
        }
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
    }

    pub fn add_scaled(&mut self, other: &AffineExpr, s: f64) {
        for &(v, c) in &other.terms {
            self.add_term(v, s * c);
        }
        self.constant += s * other.constant;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v)
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(mut self) -> AffineExpr {
        self.scale(-1.0);
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, s: f64) -> AffineExpr {
        self.scale(s);
        self
    }
}

impl std::iter::Sum for AffineExpr {
    fn sum<I: Iterator<Item = AffineExpr>>(iter: I) -> Self {
        iter.fold(AffineExpr::zero(), |acc, e| acc + e)
    }
}
