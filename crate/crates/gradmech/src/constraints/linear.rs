//! Linear algebra over Grassmann constants with expression right-hand sides, and
//! ideal reduction by pivot substitution.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::superalgebra::{GrassmannNumber, Parity, Rational};
use crate::symalg::{GradedExpr, VarId, VariableTable};

use super::ConstraintError;

/// `c` moved to the right of a factor of parity `p`.
pub(crate) fn pass_parity(c: &GrassmannNumber, p: Parity) -> GrassmannNumber {
    match p {
        Parity::Even => c.clone(),
        Parity::Odd => &c.part(Parity::Even) - &c.part(Parity::Odd),
    }
}

/// Splits `e = Σ c_j x_j + rest` with constant `c_j` and `rest` free of every `x_j`.
/// `None` when `e` is not affine in `xs` with constant coefficients.
pub(crate) fn affine_parts(e: &GradedExpr, xs: &[VarId]) -> Option<(Vec<GrassmannNumber>, GradedExpr)> {
    let g = e.generators();
    let set: BTreeSet<VarId> = xs.iter().copied().collect();
    let mut coeffs = vec![GrassmannNumber::zero(g); xs.len()];
    let mut rest = GradedExpr::zero(g);
    for ((m, form), c) in e.terms() {
        let touches = m.vars().any(|v| set.contains(&v)) || form.0.iter().any(|(v, _)| set.contains(v));
        if !touches {
            rest = &rest + &GradedExpr::from_term(m.clone(), form.clone(), c.clone());
            continue;
        }
        if !form.is_trivial() {
            return None;
        }
        let single = match (m.even.as_slice(), m.odd.as_slice()) {
            ([(v, 1)], []) => *v,
            ([], [v]) => *v,
            _ => return None,
        };
        let j = xs.iter().position(|x| *x == single)?;
        coeffs[j] = &coeffs[j] + c;
    }
    Some((coeffs, rest))
}

/// One linear equation `Σ_j coeffs[j]·x_j = rhs`, remembering which input rows it combines.
#[derive(Clone, Debug)]
pub(crate) struct LinRow {
    pub coeffs: Vec<GrassmannNumber>,
    pub rhs: GradedExpr,
    pub combo: Vec<GrassmannNumber>,
}

impl LinRow {
    pub fn new(coeffs: Vec<GrassmannNumber>, rhs: GradedExpr, index: usize, count: usize) -> Self {
        let g = rhs.generators();
        let mut combo = vec![GrassmannNumber::zero(g); count];
        combo[index] = GrassmannNumber::one(g);
        LinRow { coeffs, rhs, combo }
    }

    fn left_scale(&mut self, f: &GrassmannNumber) {
        for c in self.coeffs.iter_mut().chain(self.combo.iter_mut()) {
            *c = f * &*c;
        }
        self.rhs = self.rhs.left_mul_constant(f);
    }

    /// `self −= f · other`
    fn sub_scaled(&mut self, f: &GrassmannNumber, other: &LinRow) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = &*a - &(f * b);
        }
        for (a, b) in self.combo.iter_mut().zip(&other.combo) {
            *a = &*a - &(f * b);
        }
        self.rhs = &self.rhs - &other.rhs.left_mul_constant(f);
    }

    pub fn is_zero_lhs(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Gauss–Jordan elimination visiting columns in `cols` order; a pivot needs a nonzero body.
/// Returns `(row, column)` pivots; pivot rows end with coefficient 1 and zeros elsewhere in
/// their column.
pub(crate) fn reduce_rows(rows: &mut [LinRow], cols: &[usize]) -> Vec<(usize, usize)> {
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; rows.len()];
    for &c in cols {
        let Some(r) = (0..rows.len()).find(|&r| !used[r] && !rows[r].coeffs[c].body().is_zero()) else {
            continue;
        };
        let inv = rows[r].coeffs[c].inverse().expect("nonzero body");
        rows[r].left_scale(&inv);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row.coeffs[c].is_zero() {
                let f = row.coeffs[c].clone();
                row.sub_scaled(&f, &pivot_row);
            }
        }
        used[r] = true;
        pivots.push((r, c));
    }
    pivots
}

/// Result of `F = restriction + Σ_h φ_h F^h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub restriction: GradedExpr,
    pub coefficients: Vec<GradedExpr>,
}

#[derive(Clone, Debug)]
struct Solved {
    pivot: VarId,
    /// `r` in `φ′ = pivot + r`
    rest: GradedExpr,
    /// `φ′ = Σ_h combo[h] φ_h`
    combo: Vec<GrassmannNumber>,
}

/// Affine constraints brought to pivot-solved form (momenta preferred, lowest index first).
#[derive(Clone, Debug)]
pub struct ConstraintBasis {
    constraints: Vec<GradedExpr>,
    parities: Vec<Parity>,
    solved: Vec<Solved>,
}

/// Phase-space variables in pivot preference order: momenta, then positions.
pub(crate) fn pivot_order(table: &VariableTable) -> Vec<VarId> {
    let pairs = table.canonical_pairs();
    pairs.iter().map(|(_, p)| *p).chain(pairs.iter().map(|(q, _)| *q)).collect()
}

impl ConstraintBasis {
    pub fn new(constraints: &[GradedExpr], table: &VariableTable) -> Result<Self, ConstraintError> {
        let g = table.generators();
        let xs = pivot_order(table);
        let mut rows = Vec::with_capacity(constraints.len());
        let mut parities = Vec::with_capacity(constraints.len());
        for (h, phi) in constraints.iter().enumerate() {
            let p = phi.parity().ok_or_else(|| ConstraintError::NonAffine(phi.render(table)))?;
            parities.push(p);
            let (coeffs, rest) = affine_parts(phi, &xs).ok_or_else(|| ConstraintError::NonAffine(phi.render(table)))?;
            rows.push(LinRow::new(coeffs, -rest.widened(g), h, constraints.len()));
        }
        let cols: Vec<usize> = (0..xs.len()).collect();
        let pivots = reduce_rows(&mut rows, &cols);
        let pivot_rows: BTreeSet<usize> = pivots.iter().map(|(r, _)| *r).collect();
        for (r, row) in rows.iter().enumerate() {
            if pivot_rows.contains(&r) {
                continue;
            }
            if !row.is_zero_lhs() {
                return Err(ConstraintError::GrassmannBasisRequired(format!(
                    "constraint combination with nilpotent-only coefficients: {}",
                    affine_render(row, &xs, table)
                )));
            }
            if row.rhs.is_zero() {
                return Err(ConstraintError::Dependent(constraints[r].render(table)));
            }
            return Err(ConstraintError::Inconsistent(row.rhs.render(table)));
        }
        let solved = pivots
            .iter()
            .map(|&(r, c)| {
                let row = &rows[r];
                let mut rest = -&row.rhs;
                for (j, x) in xs.iter().enumerate() {
                    if j != c && !row.coeffs[j].is_zero() {
                        rest = &rest + &GradedExpr::var(table, *x).left_mul_constant(&row.coeffs[j]);
                    }
                }
                Solved { pivot: xs[c], rest, combo: row.combo.clone() }
            })
            .collect();
        Ok(ConstraintBasis { constraints: constraints.to_vec(), parities, solved })
    }

    pub fn constraints(&self) -> &[GradedExpr] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Solved variables, one per constraint.
    pub fn pivots(&self) -> Vec<VarId> {
        self.solved.iter().map(|s| s.pivot).collect()
    }

    /// Value each pivot takes on the constraint surface.
    pub fn pivot_values(&self) -> Vec<(VarId, GradedExpr)> {
        self.solved.iter().map(|s| (s.pivot, -&s.rest)).collect()
    }

    /// `F|_𝒱`: every pivot replaced by its solved value.
    pub fn restrict(&self, f: &GradedExpr) -> Result<GradedExpr, ConstraintError> {
        let images = self.pivot_values().into_iter().collect();
        Ok(f.substitute(&images)?)
    }

    pub fn is_weakly_zero(&self, f: &GradedExpr) -> Result<bool, ConstraintError> {
        Ok(self.restrict(f)?.is_zero())
    }

    /// `F = F|_𝒱 + Σ_h φ_h F^h`.
    pub fn reduce(&self, f: &GradedExpr, table: &VariableTable) -> Result<Reduction, ConstraintError> {
        let g = f.generators().max(table.generators());
        let mut current = f.widened(g);
        let mut per_pivot = Vec::with_capacity(self.solved.len());
        for s in &self.solved {
            let (restricted, coeff) = peel(&current, s, table)?;
            per_pivot.push(coeff);
            current = restricted;
        }
        let mut coefficients = vec![GradedExpr::zero(g); self.constraints.len()];
        for (s, gk) in self.solved.iter().zip(&per_pivot) {
            for (h, c) in s.combo.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let moved = pass_parity(c, self.parities[h]);
                coefficients[h] = &coefficients[h] + &gk.left_mul_constant(&moved);
            }
        }
        Ok(Reduction { restriction: current, coefficients })
    }
}

/// Splits `F = F|_{x=−r} + (x + r)·G` for a single pivot.
fn peel(f: &GradedExpr, s: &Solved, table: &VariableTable) -> Result<(GradedExpr, GradedExpr), ConstraintError> {
    let x = s.pivot;
    let g = f.generators();
    if !f.contains_var(x) {
        return Ok((f.clone(), GradedExpr::zero(g)));
    }
    let minus_r = -&s.rest;
    let restricted = f.substitute_one(x, &minus_r)?;
    if table.parity(x) == Parity::Odd {
        return Ok((restricted, f.left_derivative(x, Parity::Odd)));
    }
    let only_x: BTreeSet<VarId> = [x].into_iter().collect();
    let top = f.degree_in(&only_x).ok_or_else(|| {
        ConstraintError::Unsupported(format!("exponential of solved variable {} in {}", table.name(x), f.render(table)))
    })?;
    let xe = GradedExpr::var(table, x);
    let mut coeff = GradedExpr::zero(g);
    let mut factorial = Rational::from_integer(1.into());
    for n in 1..=top {
        factorial *= Rational::from_integer(n.into());
        let mut fn_ = f.homogeneous_part(&only_x, n);
        for _ in 0..n {
            fn_ = fn_.left_derivative(x, Parity::Even);
        }
        let fn_ = fn_.scale(&(Rational::from_integer(1.into()) / &factorial));
        // (xⁿ − (−r)ⁿ)/(x + r) = Σ_j x^j (−r)^{n−1−j}
        for j in 0..n {
            coeff = &coeff + &(&(&xe.pow(j) * &minus_r.pow(n - 1 - j)) * &fn_);
        }
    }
    Ok((restricted, coeff))
}

fn affine_render(row: &LinRow, xs: &[VarId], table: &VariableTable) -> String {
    let mut e = -&row.rhs;
    for (j, x) in xs.iter().enumerate() {
        e = &e + &GradedExpr::var(table, *x).left_mul_constant(&row.coeffs[j]);
    }
    e.render(table)
}

/// `F = restriction + Σ_h φ_h F^h` over affine constraints.
pub fn ideal_reduce(f: &GradedExpr, constraints: &[GradedExpr], table: &VariableTable) -> Result<Reduction, ConstraintError> {
    ConstraintBasis::new(constraints, table)?.reduce(f, table)
}
