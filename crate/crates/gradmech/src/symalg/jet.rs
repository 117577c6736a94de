//! Jet-space calculus: total time derivative, Euler–Lagrange operator,
//! prolongation and the constructive inverse of `d/dt`.

use num_traits::{One, Zero};

use crate::superalgebra::{Parity, Rational};

use super::expr::{GradedExpr, Monomial};
use super::table::{VarId, VarKind, VariableTable};
use super::SymError;

/// `d/dt = ∂/∂t + Σ v' ∂/∂v` over every variable that has a time-derivative partner.
pub fn total_time_derivative(f: &GradedExpr, table: &VariableTable) -> Result<GradedExpr, SymError> {
    let mut out = f.left_derivative(table.time(), Parity::Even);
    for v in f.vars() {
        if v == table.time() {
            continue;
        }
        match table.derivative(v) {
            Some(next) => {
                let dv = f.d(table, v);
                out = &out + &(&GradedExpr::var(table, next) * &dv);
            }
            None if matches!(table.kind(v), VarKind::Position | VarKind::Jet(_)) => {
                return Err(SymError::JetOverflow(format!(
                    "d/dt of {} exceeds jet order {}",
                    table.name(v),
                    table.max_jet_order()
                )));
            }
            None => {}
        }
    }
    Ok(out)
}

/// `∂/∂t` plus the chain rule through auxiliary symbols that carry a `_dot` partner
/// (phase-space variables are held fixed).
pub fn explicit_time_derivative(f: &GradedExpr, table: &VariableTable) -> GradedExpr {
    let mut out = f.left_derivative(table.time(), Parity::Even);
    for v in f.vars() {
        if table.kind(v) == VarKind::Auxiliary {
            if let Some(next) = table.derivative(v) {
                out = &out + &(&GradedExpr::var(table, next) * &f.d(table, v));
            }
        }
    }
    out
}

/// `(d/dt)ⁿ f`.
pub fn prolong(f: &GradedExpr, n: u32, table: &VariableTable) -> Result<GradedExpr, SymError> {
    let mut g = f.clone();
    for _ in 0..n {
        g = total_time_derivative(&g, table)?;
    }
    Ok(g)
}

/// Highest jet order of `base` occurring in `f` (`None` if absent).
fn top_order(f: &GradedExpr, base: VarId, table: &VariableTable) -> Option<u32> {
    f.vars()
        .into_iter()
        .filter_map(|v| table.jet_info(v))
        .filter(|(b, _)| *b == base)
        .map(|(_, n)| n)
        .max()
}

/// `δF/δq = Σₙ (−d/dt)ⁿ ∂F/∂qₙ`, one entry per position in declaration order.
pub fn euler_lagrange(f: &GradedExpr, table: &VariableTable) -> Result<Vec<(VarId, GradedExpr)>, SymError> {
    let mut out = Vec::new();
    for q in table.positions() {
        let mut acc = GradedExpr::zero(f.generators());
        if let Some(top) = top_order(f, q, table) {
            for n in 0..=top {
                let qn = table.jet(q, n)?;
                let mut term = f.d(table, qn);
                for _ in 0..n {
                    term = -&total_time_derivative(&term, table)?;
                }
                acc = &acc + &term;
            }
        }
        out.push((q, acc));
    }
    Ok(out)
}

/// Antiderivative with respect to `x`, treating every other symbol as constant.
/// Even variables: polynomial × `exp(a x)`; odd variables: `x · F` for `F` free of `x`.
pub fn antiderivative(f: &GradedExpr, x: VarId, parity: Parity) -> Result<GradedExpr, SymError> {
    let g = f.generators();
    if parity == Parity::Odd {
        if f.contains_var(x) {
            return Err(SymError::Unsupported("odd antiderivative of an expression containing the variable".into()));
        }
        return Ok(&GradedExpr::var_with_parity(g, x, Parity::Odd) * f);
    }
    let mut out = GradedExpr::zero(g);
    for ((m, form), c) in f.terms() {
        let k = m.even.iter().find(|(v, _)| *v == x).map(|(_, k)| *k).unwrap_or(0);
        let with_power = |p: u32| -> Monomial {
            let mut mm = m.clone();
            mm.even.retain(|(v, _)| *v != x);
            if p > 0 {
                mm.even.push((x, p));
                mm.even.sort();
            }
            mm
        };
        let a = form.coeff(x);
        if a.is_zero() {
            let coef = c.scale(&Rational::new(1.into(), (k + 1).into()));
            out = &out + &GradedExpr::from_term(with_power(k + 1), form.clone(), coef);
        } else {
            // ∫ xᵏ e^{ax} = e^{ax} Σⱼ (−1)ʲ k!/(k−j)! x^{k−j} / a^{j+1}
            let mut falling = Rational::one();
            let mut apow = a.clone();
            for j in 0..=k {
                let mut w = &falling / &apow;
                if j % 2 == 1 {
                    w = -w;
                }
                out = &out + &GradedExpr::from_term(with_power(k - j), form.clone(), c.scale(&w));
                falling *= Rational::from_integer((k - j).into());
                apow *= &a;
            }
        }
    }
    Ok(out)
}

fn is_jet_var(table: &VariableTable, v: VarId) -> bool {
    table.jet_info(v).is_some()
}

/// `K` with `dK/dt = F`, or `None` when `F` is not a total derivative.
pub fn extract_total_derivative(f: &GradedExpr, table: &VariableTable) -> Result<Option<GradedExpr>, SymError> {
    if euler_lagrange(f, table)?.iter().any(|(_, e)| !e.is_zero()) {
        return Ok(None);
    }
    extract_rec(f, table)
}

fn extract_rec(f: &GradedExpr, table: &VariableTable) -> Result<Option<GradedExpr>, SymError> {
    if f.is_zero() {
        return Ok(Some(GradedExpr::zero(f.generators())));
    }
    let jets: Vec<(VarId, u32)> = f.vars().into_iter().filter_map(|v| table.jet_info(v)).collect();
    let Some(m) = jets.iter().map(|(_, n)| *n).max() else {
        return antiderivative(f, table.time(), Parity::Even).map(Some);
    };
    if m == 0 {
        // Depends on positions but on no velocity: only t-dependence can integrate.
        return Ok(None);
    }
    let mut bases: Vec<VarId> = jets.iter().filter(|(_, n)| *n == m).map(|(b, _)| *b).collect();
    bases.sort();
    bases.dedup();
    let tops: Vec<VarId> = bases.iter().map(|b| table.jet(*b, m)).collect::<Result<_, _>>()?;

    let mut k1 = GradedExpr::zero(f.generators());
    for (b, top) in bases.iter().zip(&tops) {
        let ga = f.d(table, *top);
        if tops.iter().any(|t| ga.contains_var(*t)) {
            return Ok(None);
        }
        let x = table.jet(*b, m - 1)?;
        let r = &ga - &k1.d(table, x);
        let parity = table.parity(x);
        let piece = match antiderivative(&r, x, parity) {
            Ok(p) => p,
            Err(_) => return Ok(None),
        };
        k1 = &k1 + &piece;
    }
    let rest = f - &total_time_derivative(&k1, table)?;
    if rest.vars().into_iter().any(|v| tops.contains(&v)) {
        return Ok(None);
    }
    // Remaining jets must sit strictly below order m now.
    if rest.vars().into_iter().any(|v| is_jet_var(table, v) && table.jet_info(v).is_some_and(|(_, n)| n >= m)) {
        return Ok(None);
    }
    Ok(extract_rec(&rest, table)?.map(|k2| &k1 + &k2))
}
