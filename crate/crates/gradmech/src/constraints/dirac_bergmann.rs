//! Consistency iteration, multiplier solving, classification and Hamiltonians.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::brackets::{build_second_class, poisson, SecondClassSet};
use crate::superalgebra::{canonical_form_antihermitian, GrassmannNumber, Parity, Rational, SuperMatrix};
use crate::symalg::{explicit_time_derivative, GradedExpr, VarId, VariableTable};

use super::linear::{affine_parts, pivot_order, reduce_rows, ConstraintBasis, LinRow};
use super::model::{fresh_auxiliary, multiplier_name, HamiltonianModel};
use super::ConstraintError;

/// Outcome of the constraint analysis of a Hamiltonian model.
#[derive(Clone, Debug)]
pub struct ConstraintReport {
    /// Model table extended by the multiplier symbols introduced here.
    pub table: VariableTable,
    /// `(φ_h, tier)`; tier 1 is primary.
    pub chain: Vec<(GradedExpr, u32)>,
    /// `[φ_h, φ_h′}` restricted to the constraint surface.
    pub omega_full: SuperMatrix,
    /// Particular solution `U^m`.
    pub multiplier_particular: Vec<GradedExpr>,
    /// Kernel vectors `V^m_i` of `Σ_m [φ_h, φ_m} V^m`.
    pub multiplier_kernel: Vec<Vec<GrassmannNumber>>,
    /// `v^i`, one per kernel vector.
    pub free_multipliers: Vec<VarId>,
    /// `u^m = U^m + V^m_i v^i`.
    pub multipliers: Vec<GradedExpr>,
    pub determined: Vec<bool>,
    /// Chain indices labelling first-class directions and their first-class combinations.
    pub first_class: Vec<usize>,
    pub first_class_constraints: Vec<GradedExpr>,
    pub second_class: Vec<usize>,
    pub second_class_set: SecondClassSet,
    /// `φ_m V^m_i`
    pub primary_first_class: Vec<GradedExpr>,
    /// First-class constraints completing the primary ones, with their `H_E` multipliers.
    pub secondary_first_class: Vec<GradedExpr>,
    pub extended_multipliers: Vec<VarId>,
    pub total_hamiltonian: GradedExpr,
    pub extended_hamiltonian: GradedExpr,
    pub dof: Rational,
    /// `(k_minus, k_plus)` of the primary bracket matrix in antihermitian canonical form.
    pub primary_ranks: (usize, usize),
    pub caveats: Vec<String>,
}

impl ConstraintReport {
    pub fn constraints(&self) -> Vec<GradedExpr> {
        self.chain.iter().map(|(c, _)| c.clone()).collect()
    }

    pub fn basis(&self) -> Result<ConstraintBasis, ConstraintError> {
        ConstraintBasis::new(&self.constraints(), &self.table)
    }
}

/// Witness `φ̇_h = Σ_h′ φ_h′ T^{h′}_h` together with the analysis of the verified chain.
#[derive(Clone, Debug)]
pub struct Verification {
    /// `t[h′][h]`
    pub t: Vec<Vec<GradedExpr>>,
    pub report: ConstraintReport,
}

pub fn run_dirac_bergmann(hm: &HamiltonianModel) -> Result<ConstraintReport, ConstraintError> {
    let chain = hm.primary.iter().map(|p| (p.clone(), 1)).collect();
    analyze(hm, chain, true)
}

/// Checks that a user-supplied chain (starting with the primaries) is preserved in time.
/// `t_hint`, if given, is checked exactly and returned instead of the computed witness.
pub fn verify_constraint_set(
    hm: &HamiltonianModel,
    constraints: &[GradedExpr],
    t_hint: Option<Vec<Vec<GradedExpr>>>,
) -> Result<Verification, ConstraintError> {
    let mut chain: Vec<(GradedExpr, u32)> = hm.primary.iter().map(|p| (p.clone(), 1)).collect();
    for c in constraints {
        if !hm.primary.contains(c) {
            chain.push((c.clone(), 2));
        }
    }
    let report = analyze(hm, chain, false)?;
    let t = &report.table;
    let phis = report.constraints();
    let basis = report.basis()?;
    let n = phis.len();
    let mut witness = vec![vec![GradedExpr::zero(t.generators()); n]; n];
    let mut dots = Vec::with_capacity(n);
    for (h, phi) in phis.iter().enumerate() {
        let dot = &poisson(phi, &report.total_hamiltonian, t)? + &explicit_time_derivative(phi, t);
        let red = basis.reduce(&dot, t)?;
        if !red.restriction.is_zero() {
            return Err(not_preserved(h, phi, &red.restriction, t));
        }
        for (k, c) in red.coefficients.into_iter().enumerate() {
            witness[k][h] = c;
        }
        dots.push(dot);
    }
    if let Some(hint) = t_hint {
        for (h, dot) in dots.iter().enumerate() {
            let mut combo = GradedExpr::zero(t.generators());
            for (k, phi) in phis.iter().enumerate() {
                let entry = hint.get(k).and_then(|r| r.get(h)).ok_or_else(|| {
                    ConstraintError::BadModel(format!("T hint has no entry ({k},{h})"))
                })?;
                combo = &combo + &(phi * entry);
            }
            if &combo != dot {
                return Err(not_preserved(h, &phis[h], &(dot - &combo), t));
            }
        }
        witness = hint;
    }
    Ok(Verification { t: witness, report })
}

fn not_preserved(h: usize, phi: &GradedExpr, residual: &GradedExpr, t: &VariableTable) -> ConstraintError {
    ConstraintError::NotPreserved { index: h, constraint: phi.render(t), residual: residual.render(t) }
}

fn constant_entry(
    e: &GradedExpr,
    row: usize,
    col: usize,
    g: u32,
    t: &VariableTable,
) -> Result<GrassmannNumber, ConstraintError> {
    e.as_constant()
        .map(|c| c.widened(g))
        .ok_or_else(|| ConstraintError::NonConstantOmega { row, col, expr: e.render(t) })
}

/// Brings an affine constraint to unit leading coefficient in pivot order.
fn normalize(e: &GradedExpr, t: &VariableTable) -> Result<GradedExpr, ConstraintError> {
    let xs = pivot_order(t);
    let (coeffs, _) = affine_parts(e, &xs).ok_or_else(|| ConstraintError::NonAffineResidual(e.render(t)))?;
    if coeffs.iter().all(|c| c.is_zero()) {
        return Err(ConstraintError::Inconsistent(e.render(t)));
    }
    let lead = coeffs
        .iter()
        .find(|c| !c.body().is_zero())
        .ok_or_else(|| ConstraintError::GrassmannBasisRequired(format!("residual with nilpotent coefficients: {}", e.render(t))))?;
    Ok(e.left_mul_constant(&lead.inverse()?))
}

/// Leading variable of an affine constraint in pivot order.
fn leading_var(e: &GradedExpr, t: &VariableTable) -> Option<VarId> {
    let xs = pivot_order(t);
    let (coeffs, _) = affine_parts(e, &xs)?;
    xs.iter().zip(&coeffs).find(|(_, c)| !c.body().is_zero()).map(|(x, _)| *x)
}

fn combination(phis: &[GradedExpr], a: &[GrassmannNumber], g: u32) -> GradedExpr {
    let mut out = GradedExpr::zero(g);
    for (phi, c) in phis.iter().zip(a) {
        if !c.is_zero() {
            out = &out + &(phi * &GradedExpr::constant(c.clone()));
        }
    }
    out
}

/// Kernel of `Σ_j rows[i][j] x_j = 0` over `ncols` unknowns: `(pivot columns, free columns, basis)`.
fn kernel(
    rows: &mut [LinRow],
    ncols: usize,
    g: u32,
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<Vec<GrassmannNumber>>) {
    let cols: Vec<usize> = (0..ncols).collect();
    let pivots = reduce_rows(rows, &cols);
    let pivot_cols: BTreeSet<usize> = pivots.iter().map(|(_, c)| *c).collect();
    let free: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();
    let vectors = free
        .iter()
        .map(|&f| {
            let mut v = vec![GrassmannNumber::zero(g); ncols];
            v[f] = GrassmannNumber::one(g);
            for &(r, c) in &pivots {
                v[c] = -&rows[r].coeffs[f];
            }
            v
        })
        .collect();
    (pivots, free, vectors)
}

fn analyze(hm: &HamiltonianModel, mut chain: Vec<(GradedExpr, u32)>, discover: bool) -> Result<ConstraintReport, ConstraintError> {
    let t = &hm.table;
    let g = t.generators();
    let m = hm.primary.len();
    let n = t.canonical_pairs().len() as u32;
    let cap = 2 * n + 1;

    let (basis, rows, pivots) = loop {
        let phis: Vec<GradedExpr> = chain.iter().map(|(c, _)| c.clone()).collect();
        let basis = ConstraintBasis::new(&phis, t)?;
        let mut rows = Vec::with_capacity(phis.len());
        for (h, phi) in phis.iter().enumerate() {
            let mut coeffs = Vec::with_capacity(m);
            for (k, prim) in hm.primary.iter().enumerate() {
                let e = basis.restrict(&poisson(phi, prim, t)?)?;
                coeffs.push(constant_entry(&e, h, k, g, t)?);
            }
            let b = basis.restrict(&(&poisson(phi, &hm.hamiltonian, t)? + &explicit_time_derivative(phi, t)))?;
            rows.push(LinRow::new(coeffs, -b, h, phis.len()));
        }
        let pivots = reduce_rows(&mut rows, &(0..m).collect::<Vec<_>>());
        let pivot_rows: BTreeSet<usize> = pivots.iter().map(|(r, _)| *r).collect();
        let mut fresh = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if pivot_rows.contains(&r) {
                continue;
            }
            if !row.is_zero_lhs() {
                return Err(ConstraintError::GrassmannBasisRequired(
                    "multiplier system has nilpotent-only coefficients".into(),
                ));
            }
            let residual = basis.restrict(&-&row.rhs)?;
            if residual.is_zero() {
                continue;
            }
            if !discover {
                let h = row.combo.iter().rposition(|c| !c.is_zero()).unwrap_or(r);
                return Err(not_preserved(h, &phis[h], &residual, t));
            }
            fresh.push(residual);
        }
        if fresh.is_empty() {
            break (basis, rows, pivots);
        }
        let tier = chain.iter().map(|(_, k)| *k).max().unwrap_or(0) + 1;
        if tier > cap {
            return Err(ConstraintError::IterationCapExceeded(cap));
        }
        for cand in fresh {
            let current: Vec<GradedExpr> = chain.iter().map(|(c, _)| c.clone()).collect();
            let cand = ConstraintBasis::new(&current, t)?.restrict(&cand)?;
            if cand.is_zero() {
                continue;
            }
            chain.push((normalize(&cand, t)?, tier));
        }
    };

    let phis: Vec<GradedExpr> = chain.iter().map(|(c, _)| c.clone()).collect();
    let parities: Vec<Parity> = phis.iter().map(|p| p.parity().expect("checked by basis")).collect();
    let mut table = t.clone();

    // Multipliers: particular solution with free u set to zero, plus the kernel.
    let mut particular = vec![GradedExpr::zero(g); m];
    for &(r, c) in &pivots {
        particular[c] = basis.restrict(&rows[r].rhs)?;
    }
    let pivot_cols: BTreeSet<usize> = pivots.iter().map(|(_, c)| *c).collect();
    let free_cols: Vec<usize> = (0..m).filter(|c| !pivot_cols.contains(c)).collect();
    let mut kernel_vectors = Vec::with_capacity(free_cols.len());
    let mut free_multipliers = Vec::with_capacity(free_cols.len());
    for &f in &free_cols {
        let mut v = vec![GrassmannNumber::zero(g); m];
        v[f] = GrassmannNumber::one(g);
        for &(r, c) in &pivots {
            v[c] = -&rows[r].coeffs[f];
        }
        let unit = v.iter().enumerate().all(|(k, c)| k == f || c.is_zero());
        let sym = if unit {
            hm.multipliers[f]
        } else {
            fresh_auxiliary(&mut table, &format!("v{}", free_multipliers.len() + 1), parities[f])?
        };
        kernel_vectors.push(v);
        free_multipliers.push(sym);
    }
    let mut multipliers = particular.clone();
    for (v, sym) in kernel_vectors.iter().zip(&free_multipliers) {
        let s = GradedExpr::var(&table, *sym);
        for (k, c) in v.iter().enumerate() {
            if !c.is_zero() {
                multipliers[k] = &multipliers[k] + &s.left_mul_constant(c);
            }
        }
    }
    let determined: Vec<bool> = (0..m).map(|k| kernel_vectors.iter().all(|v| v[k].is_zero())).collect();
    let mut h_t = hm.hamiltonian.widened(g);
    for (phi, u) in hm.primary.iter().zip(&multipliers) {
        h_t = &h_t + &(phi * u);
    }

    // First/second class from the kernel of the full bracket matrix.
    let mut c_rows = Vec::with_capacity(phis.len());
    let mut omega_entries = Vec::with_capacity(phis.len());
    for (h, a) in phis.iter().enumerate() {
        let mut row = Vec::with_capacity(phis.len());
        for (k, b) in phis.iter().enumerate() {
            let e = basis.restrict(&poisson(a, b, t)?)?;
            row.push(constant_entry(&e, h, k, g, t)?);
        }
        c_rows.push(LinRow::new(row.clone(), GradedExpr::zero(g), h, phis.len()));
        omega_entries.push(row);
    }
    let omega_full = SuperMatrix::new(g, parities.clone(), parities.clone(), omega_entries)?;
    let (c_pivots, first_class, first_vectors) = kernel(&mut c_rows, phis.len(), g);
    if c_rows.iter().enumerate().any(|(r, row)| !c_pivots.iter().any(|(pr, _)| *pr == r) && !row.is_zero_lhs()) {
        return Err(ConstraintError::GrassmannBasisRequired("bracket matrix has nilpotent-only rank".into()));
    }
    let mut second_class: Vec<usize> = c_pivots.iter().map(|(_, c)| *c).collect();
    second_class.sort_unstable();
    let first_class_constraints: Vec<GradedExpr> = first_vectors.iter().map(|a| combination(&phis, a, g)).collect();
    let second_class_set = build_second_class(second_class.iter().map(|&s| phis[s].clone()).collect(), t)?;

    let primary_first_class: Vec<GradedExpr> = kernel_vectors.iter().map(|v| combination(&hm.primary, v, g)).collect();

    // Complete the primary first-class directions to a basis of the first-class space.
    let embed = |v: &[GrassmannNumber]| {
        let mut out = vec![GrassmannNumber::zero(g); phis.len()];
        out[..v.len()].clone_from_slice(v);
        out
    };
    let mut span: Vec<Vec<GrassmannNumber>> = kernel_vectors.iter().map(|v| embed(v)).collect();
    let mut secondary_first_class = Vec::new();
    let mut extended_multipliers = Vec::new();
    let mut h_e = h_t.clone();
    for (a, label) in first_vectors.iter().zip(&first_class) {
        let mut trial = span.clone();
        trial.push(a.clone());
        let mut rows: Vec<LinRow> = trial
            .iter()
            .enumerate()
            .map(|(i, v)| LinRow::new(v.clone(), GradedExpr::zero(g), i, trial.len()))
            .collect();
        if reduce_rows(&mut rows, &(0..phis.len()).collect::<Vec<_>>()).len() < trial.len() {
            continue;
        }
        span.push(a.clone());
        let phi = combination(&phis, a, g);
        let base = match leading_var(&phis[*label], t) {
            Some(x) => multiplier_name('v', t.name(x)),
            None => format!("w{}", extended_multipliers.len() + 1),
        };
        let sym = fresh_auxiliary(&mut table, &base, parities[*label])?;
        h_e = &h_e + &(&phi * &GradedExpr::var(&table, sym));
        secondary_first_class.push(phi);
        extended_multipliers.push(sym);
    }

    let f = first_class.len() as i64;
    let s = second_class.len() as i64;
    let dof = Rational::from_integer((n as i64 - f).into()) - Rational::new(s.into(), 2.into());

    let mut caveats = Vec::new();
    if !secondary_first_class.is_empty() {
        caveats.push(format!(
            "{} secondary first-class constraint(s): the degree-of-freedom count assumes every first-class \
             constraint generates a gauge transformation (Dirac's conjecture), which can fail",
            secondary_first_class.len()
        ));
    }

    // Self-check: the chain is preserved by H_T with the solved multipliers.
    for (h, phi) in phis.iter().enumerate() {
        let dot = &poisson(phi, &h_t, &table)? + &explicit_time_derivative(phi, &table);
        let r = basis.restrict(&dot)?;
        if !r.is_zero() {
            return Err(not_preserved(h, phi, &r, &table));
        }
    }

    let primary_omega = omega_full.submatrix(&(0..m).collect::<Vec<_>>(), &(0..m).collect::<Vec<_>>());
    let cf = canonical_form_antihermitian(&primary_omega)?;
    let primary_ranks = (cf.rank("k_minus").unwrap_or(0), cf.rank("k_plus").unwrap_or(0));

    Ok(ConstraintReport {
        table,
        chain,
        omega_full,
        multiplier_particular: particular,
        multiplier_kernel: kernel_vectors,
        free_multipliers,
        multipliers,
        determined,
        first_class,
        first_class_constraints,
        second_class,
        second_class_set,
        primary_first_class,
        secondary_first_class,
        extended_multipliers,
        total_hamiltonian: h_t,
        extended_hamiltonian: h_e,
        dof,
        primary_ranks,
        caveats,
    })
}

/// How the multipliers of `H_T` are filled in.
#[derive(Clone, Copy, Debug)]
pub enum MultiplierChoice<'a> {
    /// Every `u^m` stays a free symbol.
    Free,
    /// `u^m = U^m + V^m_i v^i` from a completed analysis.
    Solved(&'a ConstraintReport),
}

/// `H + φ_m u^m + ½ Σ φ_h φ_h′ w^{hh′}`; `quadratic` refers to primaries for `Free` and to the
/// chain for `Solved`.
pub fn total_hamiltonian(
    hm: &HamiltonianModel,
    choice: MultiplierChoice<'_>,
    quadratic: &[(usize, usize, GradedExpr)],
) -> Result<GradedExpr, ConstraintError> {
    let g = hm.table.generators();
    let (mut h, list) = match choice {
        MultiplierChoice::Free => {
            let mut h = hm.hamiltonian.widened(g);
            for (phi, u) in hm.primary.iter().zip(&hm.multipliers) {
                h = &h + &(phi * &GradedExpr::var(&hm.table, *u));
            }
            (h, hm.primary.clone())
        }
        MultiplierChoice::Solved(report) => (report.total_hamiltonian.clone(), report.constraints()),
    };
    let half = Rational::new(1.into(), 2.into());
    for (a, b, w) in quadratic {
        let (pa, pb) = match (list.get(*a), list.get(*b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(ConstraintError::UnknownMultiplier(format!("w^({a},{b})"))),
        };
        h = &h + &(&(pa * pb) * w).scale(&half);
    }
    Ok(h)
}

pub fn extended_hamiltonian(report: &ConstraintReport, _hm: &HamiltonianModel) -> GradedExpr {
    report.extended_hamiltonian.clone()
}
