use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::superalgebra::{GrassmannNumber, Parity, Rational};

use super::table::{VarId, VarKind, VariableTable};
use super::SymError;

/// Product of even powers (ascending ids) times an ascending list of odd factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub even: Vec<(VarId, u32)>,
    pub odd: Vec<VarId>,
}

/// Linear form `Σ a_v v` in even variables, the argument of an exponential factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ExpForm(pub Vec<(VarId, Rational)>);

impl ExpForm {
    pub fn is_trivial(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, v: VarId) -> Rational {
        self.0.iter().find(|(w, _)| *w == v).map(|(_, a)| a.clone()).unwrap_or_else(Rational::zero)
    }

    fn plus(&self, other: &ExpForm) -> ExpForm {
        let mut m: BTreeMap<VarId, Rational> = self.0.iter().cloned().collect();
        for (v, a) in &other.0 {
            *m.entry(*v).or_insert_with(Rational::zero) += a;
        }
        ExpForm(m.into_iter().filter(|(_, a)| !a.is_zero()).collect())
    }
}

impl Monomial {
    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.even.iter().map(|(_, k)| k).sum::<u32>() + self.odd.len() as u32
    }

    pub fn power_of(&self, v: VarId) -> u32 {
        self.even.iter().find(|(w, _)| *w == v).map(|(_, k)| *k).unwrap_or(0) + u32::from(self.odd.contains(&v))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.even.iter().map(|(v, _)| *v).chain(self.odd.iter().copied())
    }
}

pub type TermKey = (Monomial, ExpForm);

/// Normal-form polynomial (with exponential factors) over a graded variable table.
///
/// A term is `c · exp(L) · x^k ⋯ θ₁θ₂⋯` with the Grassmann coefficient `c`
/// written on the left and odd factors in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedExpr {
    generators: u32,
    terms: BTreeMap<TermKey, GrassmannNumber>,
}

/// Sign of concatenating two ascending odd lists, or `None` on a repeat.
fn merge_odd(a: &[VarId], b: &[VarId]) -> Option<(Vec<VarId>, bool)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut negative = false;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            // b[j] jumps over the remaining a.len() - i factors of a.
            if (a.len() - i) % 2 == 1 {
                negative = !negative;
            }
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((out, negative))
}

fn merge_even(a: &[(VarId, u32)], b: &[(VarId, u32)]) -> Vec<(VarId, u32)> {
    let mut m: BTreeMap<VarId, u32> = a.iter().copied().collect();
    for (v, k) in b {
        *m.entry(*v).or_insert(0) += k;
    }
    m.into_iter().collect()
}

/// `c` moved to the right of `n` odd factors.
fn pass_odd(c: &GrassmannNumber, n: usize) -> GrassmannNumber {
    if n % 2 == 0 {
        c.clone()
    } else {
        &c.part(Parity::Even) - &c.part(Parity::Odd)
    }
}

impl GradedExpr {
    pub fn zero(generators: u32) -> Self {
        GradedExpr { generators, terms: BTreeMap::new() }
    }

    pub fn constant(c: GrassmannNumber) -> Self {
        let g = c.generator_count();
        let mut e = Self::zero(g);
        if !c.is_zero() {
            e.terms.insert(TermKey::default(), c);
        }
        e
    }

    pub fn scalar(generators: u32, q: Rational) -> Self {
        Self::constant(GrassmannNumber::scalar(generators, q))
    }

    pub fn from_int(generators: u32, v: i64) -> Self {
        Self::constant(GrassmannNumber::from_int(generators, v))
    }

    pub fn one(generators: u32) -> Self {
        Self::from_int(generators, 1)
    }

    /// Variable with the parity recorded in `table`.
    pub fn var(table: &VariableTable, v: VarId) -> Self {
        if let VarKind::GrassmannConst(i) = table.kind(v) {
            return Self::constant(GrassmannNumber::generator(table.generators(), i).expect("declared generator"));
        }
        Self::var_with_parity(table.generators(), v, table.parity(v))
    }

    pub fn var_with_parity(generators: u32, v: VarId, parity: Parity) -> Self {
        let mono = match parity {
            Parity::Even => Monomial { even: vec![(v, 1)], odd: vec![] },
            Parity::Odd => Monomial { even: vec![], odd: vec![v] },
        };
        Self::from_term(mono, ExpForm::default(), GrassmannNumber::one(generators))
    }

    /// `exp(form)` with unit coefficient.
    pub fn exp_of(generators: u32, form: ExpForm) -> Self {
        Self::from_term(Monomial::default(), form, GrassmannNumber::one(generators))
    }

    pub fn from_term(mono: Monomial, form: ExpForm, c: GrassmannNumber) -> Self {
        let g = c.generator_count();
        let mut e = Self::zero(g);
        e.add_term((mono, form), c);
        e
    }

    pub fn from_terms<I: IntoIterator<Item = (TermKey, GrassmannNumber)>>(generators: u32, items: I) -> Self {
        let mut e = Self::zero(generators);
        for (k, c) in items {
            e.add_term(k, c);
        }
        e
    }

    fn add_term(&mut self, key: TermKey, c: GrassmannNumber) {
        if c.is_zero() {
            return;
        }
        self.generators = self.generators.max(c.generator_count());
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn generators(&self) -> u32 {
        self.generators
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &GrassmannNumber)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Constant value when the expression involves no variables.
    pub fn as_constant(&self) -> Option<GrassmannNumber> {
        match self.terms.len() {
            0 => Some(GrassmannNumber::zero(self.generators)),
            1 => self.terms.get(&TermKey::default()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// Overall parity; `None` when terms disagree or a coefficient is mixed.
    pub fn parity(&self) -> Option<Parity> {
        let mut out: Option<Parity> = None;
        for ((m, _), c) in &self.terms {
            let cp = c.parity()?;
            let p = cp.plus(Parity::from_count(m.odd.len()));
            match out {
                None => out = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        Some(out.unwrap_or(Parity::Even))
    }

    pub fn require_parity(&self) -> Result<Parity, SymError> {
        self.parity().ok_or(SymError::MixedParity)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero(self.generators);
        }
        GradedExpr { generators: self.generators, terms: self.terms.iter().map(|(k, c)| (k.clone(), c.scale(q))).collect() }
    }

    /// `c · self` with `c` multiplied from the left.
    pub fn left_mul_constant(&self, c: &GrassmannNumber) -> Self {
        Self::from_terms(
            self.generators.max(c.generator_count()),
            self.terms.iter().map(|(k, d)| (k.clone(), c * d)),
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.generators);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Every variable that occurs (in monomials or exponents).
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut s = BTreeSet::new();
        for (m, f) in self.terms.keys() {
            s.extend(m.vars());
            s.extend(f.0.iter().map(|(v, _)| *v));
        }
        s
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.keys().any(|(m, f)| m.power_of(v) > 0 || f.0.iter().any(|(w, _)| *w == v))
    }

    pub fn has_exp(&self) -> bool {
        self.terms.keys().any(|(_, f)| !f.is_trivial())
    }

    /// Largest total degree in `vars`; `None` if one of them sits in an exponent.
    pub fn degree_in(&self, vars: &BTreeSet<VarId>) -> Option<u32> {
        let mut d = 0;
        for (m, f) in self.terms.keys() {
            if f.0.iter().any(|(v, _)| vars.contains(v)) {
                return None;
            }
            let k: u32 = m.even.iter().filter(|(v, _)| vars.contains(v)).map(|(_, k)| *k).sum::<u32>()
                + m.odd.iter().filter(|v| vars.contains(v)).count() as u32;
            d = d.max(k);
        }
        Some(d)
    }

    /// Terms whose total degree in `vars` equals `degree`.
    pub fn homogeneous_part(&self, vars: &BTreeSet<VarId>, degree: u32) -> Self {
        Self::from_terms(
            self.generators,
            self.terms
                .iter()
                .filter(|((m, _), _)| {
                    m.even.iter().filter(|(v, _)| vars.contains(v)).map(|(_, k)| *k).sum::<u32>()
                        + m.odd.iter().filter(|v| vars.contains(v)).count() as u32
                        == degree
                })
                .map(|(k, c)| (k.clone(), c.clone())),
        )
    }

    /// Graded left derivative `∂F/∂v`.
    pub fn left_derivative(&self, v: VarId, parity: Parity) -> Self {
        let mut out = Self::zero(self.generators);
        for ((m, f), c) in &self.terms {
            match parity {
                Parity::Odd => {
                    if let Some(i) = m.odd.iter().position(|w| *w == v) {
                        let mut rest = m.clone();
                        rest.odd.remove(i);
                        let mut c2 = pass_odd(c, 1);
                        if i % 2 == 1 {
                            c2 = -c2;
                        }
                        out.add_term((rest, f.clone()), c2);
                    }
                }
                Parity::Even => {
                    let a = f.coeff(v);
                    if !a.is_zero() {
                        out.add_term((m.clone(), f.clone()), c.scale(&a));
                    }
                    if let Some(i) = m.even.iter().position(|(w, _)| *w == v) {
                        let k = m.even[i].1;
                        let mut rest = m.clone();
                        if k == 1 {
                            rest.even.remove(i);
                        } else {
                            rest.even[i].1 -= 1;
                        }
                        out.add_term((rest, f.clone()), c.scale(&Rational::from_integer(k.into())));
                    }
                }
            }
        }
        out
    }

    /// Graded right derivative (factor stripped from the right end).
    pub fn right_derivative(&self, v: VarId, parity: Parity) -> Self {
        if parity == Parity::Even {
            return self.left_derivative(v, parity);
        }
        let mut out = Self::zero(self.generators);
        for ((m, f), c) in &self.terms {
            if let Some(i) = m.odd.iter().position(|w| *w == v) {
                let mut rest = m.clone();
                rest.odd.remove(i);
                let c2 = if (m.odd.len() - 1 - i) % 2 == 1 { -c } else { c.clone() };
                out.add_term((rest, f.clone()), c2);
            }
        }
        out
    }

    /// Left derivative using the parity recorded in the table.
    pub fn d(&self, table: &VariableTable, v: VarId) -> Self {
        self.left_derivative(v, table.parity(v))
    }

    /// Simultaneous substitution `v ↦ image`, preserving factor order.
    /// Variables inside exponents may only be mapped to linear forms in even variables.
    pub fn substitute(&self, images: &BTreeMap<VarId, GradedExpr>) -> Result<Self, SymError> {
        if images.is_empty() {
            return Ok(self.clone());
        }
        let g = images.values().map(|e| e.generators).fold(self.generators, u32::max);
        let mut out = Self::zero(g);
        for ((m, f), c) in &self.terms {
            if !m.vars().any(|v| images.contains_key(&v)) && !f.0.iter().any(|(v, _)| images.contains_key(v)) {
                out.add_term((m.clone(), f.clone()), c.clone());
                continue;
            }
            let mut form = ExpForm::default();
            for (v, a) in &f.0 {
                match images.get(v) {
                    None => form = form.plus(&ExpForm(vec![(*v, a.clone())])),
                    Some(img) => form = form.plus(&linear_form_of(img)?.scaled(a)),
                }
            }
            let mut acc = GradedExpr::from_term(Monomial::default(), form, c.widened(g));
            for (v, k) in &m.even {
                let factor = match images.get(v) {
                    Some(img) => img.clone(),
                    None => GradedExpr::var_with_parity(g, *v, Parity::Even),
                };
                acc = &acc * &factor.pow(*k);
            }
            for v in &m.odd {
                let factor = match images.get(v) {
                    Some(img) => img.clone(),
                    None => GradedExpr::var_with_parity(g, *v, Parity::Odd),
                };
                acc = &acc * &factor;
            }
            out = &out + &acc;
        }
        Ok(out)
    }

    pub fn substitute_one(&self, v: VarId, image: &GradedExpr) -> Result<Self, SymError> {
        let mut m = BTreeMap::new();
        m.insert(v, image.clone());
        self.substitute(&m)
    }

    /// Hermitian conjugate: products reversed, `p† = (−1)^{#p} p`, everything else self-conjugate.
    pub fn conj(&self, table: &VariableTable) -> Self {
        let mut out = Self::zero(self.generators);
        for ((m, f), c) in &self.terms {
            let k = m.odd.len();
            // (c X)† = X† c†; reversing k odd factors gives (−1)^{k(k−1)/2}.
            let mut negative = (k * k.saturating_sub(1) / 2) % 2 == 1;
            for v in m.odd.iter().chain(m.even.iter().map(|(v, _)| v)) {
                if table.kind(*v) == VarKind::Momentum && table.parity(*v) == Parity::Odd {
                    negative = !negative;
                }
            }
            let cc = pass_odd(&c.conj(), k);
            out.add_term((m.clone(), f.clone()), if negative { -cc } else { cc });
        }
        out
    }

    /// Applies `op` to every coefficient (used for body/soul projections).
    pub fn map_coefficients(&self, op: impl Fn(&GrassmannNumber) -> GrassmannNumber) -> Self {
        Self::from_terms(self.generators, self.terms.iter().map(|(k, c)| (k.clone(), op(c))))
    }

    pub fn widened(&self, g: u32) -> Self {
        self.map_coefficients(|c| c.widened(g.max(c.generator_count())))
    }
}

impl ExpForm {
    fn scaled(&self, a: &Rational) -> ExpForm {
        ExpForm(self.0.iter().map(|(v, b)| (*v, b * a)).filter(|(_, b)| !b.is_zero()).collect())
    }
}

/// Reads `Σ a_v v` (even variables, rational coefficients, no constant term).
pub fn linear_form_of(e: &GradedExpr) -> Result<ExpForm, SymError> {
    let mut form = Vec::new();
    for ((m, f), c) in e.terms() {
        if !f.is_trivial() || !m.odd.is_empty() || m.even.len() != 1 || m.even[0].1 != 1 || !c.is_scalar() {
            return Err(SymError::NonLinearExponent);
        }
        form.push((m.even[0].0, c.body()));
    }
    form.sort_by_key(|(v, _)| *v);
    Ok(ExpForm(form))
}

fn mul_exprs(a: &GradedExpr, b: &GradedExpr) -> GradedExpr {
    let g = a.generators.max(b.generators);
    let mut out = GradedExpr::zero(g);
    for ((m1, f1), c1) in &a.terms {
        for ((m2, f2), c2) in &b.terms {
            let Some((odd, negative)) = merge_odd(&m1.odd, &m2.odd) else { continue };
            let mut c = c1 * &pass_odd(c2, m1.odd.len());
            if negative {
                c = -c;
            }
            let mono = Monomial { even: merge_even(&m1.even, &m2.even), odd };
            out.add_term((mono, f1.plus(f2)), c);
        }
    }
    out
}

impl<'a> Add<&'a GradedExpr> for &'a GradedExpr {
    type Output = GradedExpr;
    fn add(self, rhs: &'a GradedExpr) -> GradedExpr {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a GradedExpr> for &'a GradedExpr {
    type Output = GradedExpr;
    fn sub(self, rhs: &'a GradedExpr) -> GradedExpr {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a GradedExpr> for &'a GradedExpr {
    type Output = GradedExpr;
    fn mul(self, rhs: &'a GradedExpr) -> GradedExpr {
        mul_exprs(self, rhs)
    }
}

impl Neg for &GradedExpr {
    type Output = GradedExpr;
    fn neg(self) -> GradedExpr {
        self.scale(&-Rational::one())
    }
}

impl Add for GradedExpr {
    type Output = GradedExpr;
    fn add(self, rhs: GradedExpr) -> GradedExpr {
        &self + &rhs
    }
}

impl Sub for GradedExpr {
    type Output = GradedExpr;
    fn sub(self, rhs: GradedExpr) -> GradedExpr {
        &self - &rhs
    }
}

impl Mul for GradedExpr {
    type Output = GradedExpr;
    fn mul(self, rhs: GradedExpr) -> GradedExpr {
        &self * &rhs
    }
}

impl Neg for GradedExpr {
    type Output = GradedExpr;
    fn neg(self) -> GradedExpr {
        -&self
    }
}
