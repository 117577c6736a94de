//! Exact elements of a finite Grassmann algebra.
//!
//! Basis monomials are subsets of the generators `1..=n`, stored as bitmasks
//! (generator `i` is bit `i - 1`) with ascending generator order; every sign
//! that arises from reordering is absorbed into the rational coefficient.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Signed, Zero};

use super::{Parity, Rational, SuperError};

/// Largest supported generator count (one bit per generator in a `u64`).
pub const MAX_GENERATORS: u32 = 63;

/// An element of the Grassmann algebra over the rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GrassmannNumber {
    generators: u32,
    terms: BTreeMap<u64, Rational>,
}

/// Sign of the product of two basis monomials, or `None` when they share a generator.
pub fn monomial_product_sign(a: u64, b: u64) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    // Count pairs (x in a, y in b) with x > y: each such pair needs one swap.
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if y >= 63 { 0 } else { a >> (y + 1) };
        swaps += above.count_ones();
    }
    Some(swaps % 2 == 1)
}

fn mask_from_subset(subset: &[usize], generators: u32) -> Result<(u64, bool), SuperError> {
    // Returns the mask and whether sorting the (possibly unordered) list flips the sign.
    let mut mask = 0u64;
    let mut negative = false;
    for &g in subset {
        if g == 0 || g as u32 > generators {
            return Err(SuperError::IndexOutOfRange { index: g, count: generators as usize });
        }
        let bit = 1u64 << (g - 1);
        if mask & bit != 0 {
            return Err(SuperError::RepeatedGenerator(g));
        }
        // Moving the new generator left past every larger one already present.
        let larger = (mask >> (g - 1)).count_ones();
        if larger % 2 == 1 {
            negative = !negative;
        }
        mask |= bit;
    }
    Ok((mask, negative))
}

/// Ascending 1-based generator list of a mask.
pub fn mask_to_subset(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize + 1);
        rest &= rest - 1;
    }
    out
}

impl GrassmannNumber {
    pub fn zero(generators: u32) -> Self {
        assert!(generators <= MAX_GENERATORS, "too many Grassmann generators");
        GrassmannNumber { generators, terms: BTreeMap::new() }
    }

    pub fn one(generators: u32) -> Self {
        Self::scalar(generators, Rational::one())
    }

    pub fn scalar(generators: u32, value: Rational) -> Self {
        let mut x = Self::zero(generators);
        if !value.is_zero() {
            x.terms.insert(0, value);
        }
        x
    }

    pub fn from_int(generators: u32, value: i64) -> Self {
        Self::scalar(generators, Rational::from_integer(value.into()))
    }

    /// The generator ζ^i (1-based).
    pub fn generator(generators: u32, index: usize) -> Result<Self, SuperError> {
        Self::monomial(generators, &[index], Rational::one())
    }

    /// `coeff · ζ^{i1} ζ^{i2} …` in the written order; the sign of sorting is absorbed.
    pub fn monomial(generators: u32, subset: &[usize], coeff: Rational) -> Result<Self, SuperError> {
        let mut x = Self::zero(generators);
        match mask_from_subset(subset, generators) {
            Ok((mask, negative)) => {
                if !coeff.is_zero() {
                    x.terms.insert(mask, if negative { -coeff } else { coeff });
                }
                Ok(x)
            }
            Err(SuperError::RepeatedGenerator(_)) => Ok(x),
            Err(e) => Err(e),
        }
    }

    /// Builds from raw `(mask, coefficient)` pairs, summing duplicates.
    pub fn from_masks<I: IntoIterator<Item = (u64, Rational)>>(generators: u32, items: I) -> Self {
        let mut x = Self::zero(generators);
        for (mask, c) in items {
            x.add_term(mask, c);
        }
        x
    }

    fn add_term(&mut self, mask: u64, c: Rational) {
        if c.is_zero() {
            return;
        }
        debug_assert!(mask >> self.generators == 0);
        let remove = match self.terms.get_mut(&mask) {
            Some(v) => {
                *v += c;
                v.is_zero()
            }
            None => {
                self.terms.insert(mask, c);
                false
            }
        };
        if remove {
            self.terms.remove(&mask);
        }
    }

    pub fn generator_count(&self) -> u32 {
        self.generators
    }

    /// Same value viewed in an algebra with at least `n` generators.
    pub fn widened(&self, n: u32) -> Self {
        let mut x = self.clone();
        x.generators = x.generators.max(n);
        x
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    /// True when the only stored term is the body.
    pub fn is_scalar(&self) -> bool {
        self.terms.keys().all(|&m| m == 0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `[x]_J`: coefficient of the basis monomial named by `subset` (ascending or not).
    pub fn coeff(&self, subset: &[usize]) -> Result<Rational, SuperError> {
        let (mask, negative) = mask_from_subset(subset, self.generators)?;
        let c = self.terms.get(&mask).cloned().unwrap_or_else(Rational::zero);
        Ok(if negative { -c } else { c })
    }

    pub fn body(&self) -> Rational {
        self.terms.get(&0).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.terms.remove(&0);
        s
    }

    pub fn body_soul_split(&self) -> (Self, Self) {
        (Self::scalar(self.generators, self.body()), self.soul())
    }

    pub fn has_zero_body(&self) -> bool {
        !self.terms.contains_key(&0)
    }

    /// Parity of a homogeneous element; zero counts as even, mixed elements give `None`.
    pub fn parity(&self) -> Option<Parity> {
        let mut found: Option<Parity> = None;
        for &m in self.terms.keys() {
            let p = Parity::from_count(m.count_ones() as usize);
            match found {
                None => found = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        Some(found.unwrap_or(Parity::Even))
    }

    /// Whether the element may sit where parity `p` is required (zero always fits).
    pub fn fits_parity(&self, p: Parity) -> bool {
        self.terms.keys().all(|m| Parity::from_count(m.count_ones() as usize) == p)
    }

    pub fn is_mixed(&self) -> bool {
        self.parity().is_none()
    }

    /// Component of the given parity.
    pub fn part(&self, p: Parity) -> Self {
        let mut x = Self::zero(self.generators);
        for (m, c) in &self.terms {
            if Parity::from_count(m.count_ones() as usize) == p {
                x.terms.insert(*m, c.clone());
            }
        }
        x
    }

    /// Largest monomial degree present (0 for scalars and zero).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero(self.generators);
        }
        GrassmannNumber {
            generators: self.generators,
            terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect(),
        }
    }

    /// Product with a generator-count check.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, SuperError> {
        if self.generators != other.generators {
            return Err(SuperError::GeneratorMismatch { left: self.generators, right: other.generators });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.generators.max(other.generators));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(negative) = monomial_product_sign(*ma, *mb) {
                    let c = ca * cb;
                    out.add_term(ma | mb, if negative { -c } else { c });
                }
            }
        }
        out
    }

    /// `x^{-1}` via the terminating geometric series in the nilpotent soul.
    pub fn inverse(&self) -> Result<Self, SuperError> {
        let x0 = self.body();
        if x0.is_zero() {
            return Err(SuperError::ZeroBody);
        }
        let inv0 = x0.recip();
        // x = x0 (1 + s), s = soul / x0
        let s = self.soul().scale(&inv0);
        let minus_s = -&s;
        let mut term = Self::one(self.generators);
        let mut acc = Self::one(self.generators);
        loop {
            term = &term * &minus_s;
            if term.is_zero() {
                break;
            }
            acc += &term;
        }
        Ok(acc.scale(&inv0))
    }

    /// Complex conjugation with real generators: `(ab)* = b* a*`, so a degree-k
    /// monomial picks up `(-1)^{k(k-1)/2}`.
    pub fn conj(&self) -> Self {
        GrassmannNumber {
            generators: self.generators,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let k = m.count_ones() as u64;
                    let flip = (k * k.saturating_sub(1) / 2) % 2 == 1;
                    (*m, if flip { -c.clone() } else { c.clone() })
                })
                .collect(),
        }
    }

    /// Floating-point body (used by numerical code).
    pub fn body_f64(&self) -> f64 {
        rational_to_f64(&self.body())
    }

    /// Renders with generator names `zeta1, zeta2, …`.
    pub fn render(&self) -> String {
        self.render_with(&|i| format!("zeta{i}"))
    }

    pub fn render_with(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factors: Vec<String> = mask_to_subset(*m).into_iter().map(name).collect();
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for GrassmannNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<'a> Add<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn add(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        let mut out = self.widened(rhs.generators);
        out += rhs;
        out
    }
}

impl Add for GrassmannNumber {
    type Output = GrassmannNumber;
    fn add(self, rhs: GrassmannNumber) -> GrassmannNumber {
        &self + &rhs
    }
}

impl<'a> AddAssign<&'a GrassmannNumber> for GrassmannNumber {
    fn add_assign(&mut self, rhs: &GrassmannNumber) {
        self.generators = self.generators.max(rhs.generators);
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl<'a> SubAssign<&'a GrassmannNumber> for GrassmannNumber {
    fn sub_assign(&mut self, rhs: &GrassmannNumber) {
        self.generators = self.generators.max(rhs.generators);
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl<'a> Sub<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn sub(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        let mut out = self.widened(rhs.generators);
        out -= rhs;
        out
    }
}

impl Sub for GrassmannNumber {
    type Output = GrassmannNumber;
    fn sub(self, rhs: GrassmannNumber) -> GrassmannNumber {
        &self - &rhs
    }
}

impl<'a> Mul<&'a GrassmannNumber> for &'a GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: &GrassmannNumber) -> GrassmannNumber {
        self.mul_unchecked(rhs)
    }
}

impl Mul for GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: GrassmannNumber) -> GrassmannNumber {
        self.mul_unchecked(&rhs)
    }
}

impl Neg for &GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        GrassmannNumber {
            generators: self.generators,
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}

impl Neg for GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        -&self
    }
}
