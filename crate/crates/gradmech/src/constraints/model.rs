use crate::superalgebra::Parity;
use crate::symalg::{GradedExpr, VarId, VarKind, VariableTable};

use super::linear::{affine_parts, reduce_rows, LinRow};
use super::ConstraintError;

/// `L(q, q̇, t)` over a table whose positions all carry momenta.
#[derive(Clone, Debug)]
pub struct LagrangianModel {
    pub table: VariableTable,
    pub lagrangian: GradedExpr,
}

impl LagrangianModel {
    pub fn new(table: VariableTable, lagrangian: GradedExpr) -> Result<Self, ConstraintError> {
        check_phase_space(&table)?;
        if lagrangian.parity() == Some(Parity::Odd) || lagrangian.parity().is_none() {
            return Err(ConstraintError::BadModel(format!("Lagrangian must be even: {}", lagrangian.render(&table))));
        }
        for v in lagrangian.vars() {
            match table.kind(v) {
                VarKind::Position | VarKind::Time | VarKind::Jet(1) | VarKind::Auxiliary => {}
                VarKind::Jet(_) => {
                    return Err(ConstraintError::Unsupported(format!(
                        "higher time derivative {} in the Lagrangian",
                        table.name(v)
                    )))
                }
                _ => {
                    return Err(ConstraintError::BadModel(format!(
                        "Lagrangian may not contain {}",
                        table.name(v)
                    )))
                }
            }
        }
        Ok(LagrangianModel { table, lagrangian })
    }

    /// `L* = L` under the hermitian conjugation of the table.
    pub fn is_real(&self) -> bool {
        self.lagrangian.conj(&self.table) == self.lagrangian
    }
}

pub(crate) fn check_phase_space(table: &VariableTable) -> Result<(), ConstraintError> {
    for q in table.positions() {
        match table.partner(q) {
            Some(p) if table.parity(p) == table.parity(q) => {}
            _ => return Err(ConstraintError::BadModel(format!("position {} has no momentum", table.name(q)))),
        }
    }
    Ok(())
}

/// Canonical Hamiltonian with primary constraints and one multiplier symbol per constraint.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    pub table: VariableTable,
    pub hamiltonian: GradedExpr,
    pub primary: Vec<GradedExpr>,
    /// `u^m`, auxiliary symbols with vanishing brackets.
    pub multipliers: Vec<VarId>,
    pub explicit_time: bool,
}

/// `p3 → u3`, `p_y → u_y`, anything else `x → u_x`.
pub(crate) fn multiplier_name(prefix: char, pivot: &str) -> String {
    match pivot.strip_prefix('p') {
        Some(rest) if !rest.is_empty() => format!("{prefix}{rest}"),
        _ => format!("{prefix}_{pivot}"),
    }
}

/// Adds `base` (or `base_2`, `base_3`, … if taken) as an auxiliary symbol.
pub(crate) fn fresh_auxiliary(table: &mut VariableTable, base: &str, parity: Parity) -> Result<VarId, ConstraintError> {
    let mut name = base.to_string();
    let mut k = 2;
    while table.lookup(&name).is_some() || table.lookup(&format!("{name}_dot")).is_some() {
        name = format!("{base}_{k}");
        k += 1;
    }
    Ok(table.add_auxiliary(&name, parity)?)
}

impl HamiltonianModel {
    /// Validates the model and introduces the multiplier symbols `u^m`, named after the
    /// momentum each constraint is solved for.
    pub fn new(mut table: VariableTable, hamiltonian: GradedExpr, primary: Vec<GradedExpr>) -> Result<Self, ConstraintError> {
        check_phase_space(&table)?;
        if hamiltonian.parity() != Some(Parity::Even) && !hamiltonian.is_zero() {
            return Err(ConstraintError::BadModel(format!("Hamiltonian must be even: {}", hamiltonian.render(&table))));
        }
        let momenta: Vec<VarId> = table.canonical_pairs().iter().map(|(_, p)| *p).collect();
        let mut names: Vec<Option<String>> = vec![None; primary.len()];
        let mut rows = Vec::new();
        let mut row_of = Vec::new();
        for (m, phi) in primary.iter().enumerate() {
            if phi.parity().is_none() {
                return Err(ConstraintError::BadModel(format!("constraint has mixed parity: {}", phi.render(&table))));
            }
            if let Some((coeffs, rest)) = affine_parts(phi, &momenta) {
                rows.push(LinRow::new(coeffs, rest, m, primary.len()));
                row_of.push(m);
            }
        }
        let cols: Vec<usize> = (0..momenta.len()).collect();
        let pivots = reduce_rows(&mut rows, &cols);
        if pivots.len() < rows.len() {
            return Err(ConstraintError::Dependent(
                "primary constraints have momentum gradients of deficient body rank".into(),
            ));
        }
        for (r, c) in pivots {
            names[row_of[r]] = Some(multiplier_name('u', table.name(momenta[c])));
        }
        let mut multipliers = Vec::with_capacity(primary.len());
        for (m, phi) in primary.iter().enumerate() {
            let base = names[m].clone().unwrap_or_else(|| format!("u{}", m + 1));
            multipliers.push(fresh_auxiliary(&mut table, &base, phi.parity().expect("checked"))?);
        }
        let time = table.time();
        let explicit_time = hamiltonian.contains_var(time) || primary.iter().any(|p| p.contains_var(time));
        Ok(HamiltonianModel { table, hamiltonian, primary, multipliers, explicit_time })
    }
}
