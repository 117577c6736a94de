//! Legendre transform in both directions.

use std::collections::{BTreeMap, BTreeSet};

use crate::superalgebra::{canonical_form_generic, Parity, SuperMatrix};
use crate::symalg::{GradedExpr, VarId, VarKind, VariableTable};

use super::linear::{affine_parts, reduce_rows, ConstraintBasis, LinRow};
use super::model::{HamiltonianModel, LagrangianModel};
use super::ConstraintError;

fn velocities(table: &VariableTable) -> Result<Vec<VarId>, ConstraintError> {
    table.canonical_pairs().iter().map(|(q, _)| Ok(table.velocity(*q)?)).collect()
}

/// `p_A = ∂L/∂q̇^A` (left derivative), one per canonical pair.
pub fn momenta(model: &LagrangianModel) -> Result<Vec<GradedExpr>, ConstraintError> {
    let t = &model.table;
    Ok(velocities(t)?
        .into_iter()
        .map(|v| model.lagrangian.left_derivative(v, t.parity(v)))
        .collect())
}

/// Legendre data of a quadratic Lagrangian.
#[derive(Clone, Debug)]
pub struct PrimaryAnalysis {
    pub model: HamiltonianModel,
    /// `p_A(q, q̇, t)`
    pub momenta: Vec<GradedExpr>,
    /// Positions whose momentum stays independent (`a`) and those solved by a constraint (`m`).
    pub independent: Vec<VarId>,
    pub constrained: Vec<VarId>,
    /// `(k1, k2)`: even and odd rank of the velocity map.
    pub velocity_rank: (usize, usize),
    /// `q̇^A(q, p, t)` with the undetermined velocity directions set to zero.
    pub velocities: Vec<(VarId, GradedExpr)>,
    pub caveats: Vec<String>,
}

/// Classifies why `p` is not affine in the velocities with constant coefficients.
fn velocity_map_error(p: &GradedExpr, vel: &BTreeSet<VarId>, table: &VariableTable) -> ConstraintError {
    let soul_coupling = p.terms().any(|((m, _), _)| {
        m.vars().any(|v| vel.contains(&v)) && m.odd.iter().any(|v| !vel.contains(v))
    });
    if soul_coupling {
        ConstraintError::GrassmannBasisRequired(format!("momentum {} couples velocities to odd variables", p.render(table)))
    } else {
        ConstraintError::NonQuadratic(format!("momentum {} is not affine in the velocities", p.render(table)))
    }
}

pub fn primary_constraints(model: &LagrangianModel) -> Result<PrimaryAnalysis, ConstraintError> {
    let t = &model.table;
    let g = t.generators();
    let l = &model.lagrangian;
    let pairs = t.canonical_pairs();
    let vel = velocities(t)?;
    let vel_set: BTreeSet<VarId> = vel.iter().copied().collect();
    let ps = momenta(model)?;

    let mut k_rows = Vec::with_capacity(ps.len());
    let mut offsets = Vec::with_capacity(ps.len());
    for p in &ps {
        let (row, rest) = affine_parts(p, &vel).ok_or_else(|| velocity_map_error(p, &vel_set, t))?;
        k_rows.push(row.into_iter().map(|c| c.widened(g)).collect::<Vec<_>>());
        offsets.push(rest);
    }
    let jointly: BTreeSet<VarId> = pairs.iter().map(|(q, _)| *q).chain(vel.iter().copied()).collect();
    let quadratic = l.degree_in(&jointly).is_some_and(|d| d <= 2)
        && !l.terms().any(|((_, form), _)| form.0.iter().any(|(v, _)| jointly.contains(v)));
    if !quadratic {
        return Err(ConstraintError::NonQuadratic(l.render(t)));
    }

    let parities: Vec<Parity> = pairs.iter().map(|(q, _)| t.parity(*q)).collect();
    let k = SuperMatrix::new(g, parities.clone(), parities.clone(), k_rows)?;
    let cf = canonical_form_generic(&k)?;
    for &(i, j) in &cf.layout.soul_blocks {
        let b = cf.block(i, j);
        if b.entries().iter().flatten().any(|e| !e.is_zero()) {
            return Err(ConstraintError::GrassmannBasisRequired(format!(
                "velocity map has a nilpotent-only block after canonicalisation:\n{}",
                b.render()
            )));
        }
    }
    let (k1, k2) = (cf.rank("k1").unwrap_or(0), cf.rank("k2").unwrap_or(0));
    let n_even = parities.iter().filter(|p| **p == Parity::Even).count();
    let n = parities.len();

    // y = left·(p − c) in canonical row order
    let shifted: Vec<GradedExpr> = pairs
        .iter()
        .zip(&offsets)
        .map(|((_, p), c)| &GradedExpr::var(t, *p) - c)
        .collect();
    let y: Vec<GradedExpr> = (0..n)
        .map(|i| {
            let mut acc = GradedExpr::zero(g);
            for (a, s) in shifted.iter().enumerate() {
                let c = cf.left.entry(i, a);
                if !c.is_zero() {
                    acc = &acc + &s.left_mul_constant(c);
                }
            }
            acc
        })
        .collect();
    let pivot_rows: Vec<usize> = (0..k1).chain(n_even..n_even + k2).collect();
    let null_rows: Vec<usize> = (k1..n_even).chain(n_even + k2..n).collect();

    // Constraints: null rows brought to p_m − f_m form.
    let momenta_ids: Vec<VarId> = pairs.iter().map(|(_, p)| *p).collect();
    let mut rows = Vec::new();
    for (idx, &i) in null_rows.iter().enumerate() {
        let (coeffs, rest) = affine_parts(&y[i], &momenta_ids).expect("affine by construction");
        rows.push(LinRow::new(coeffs, -rest, idx, null_rows.len()));
    }
    let cols: Vec<usize> = (0..momenta_ids.len()).collect();
    let pivots = reduce_rows(&mut rows, &cols);
    let mut ordered = pivots.clone();
    ordered.sort_by_key(|(_, c)| *c);
    let mut primary = Vec::with_capacity(ordered.len());
    let mut constrained = Vec::new();
    for (r, c) in ordered {
        let row = &rows[r];
        let mut phi = -&row.rhs;
        for (j, p) in momenta_ids.iter().enumerate() {
            if !row.coeffs[j].is_zero() {
                phi = &phi + &GradedExpr::var(t, *p).left_mul_constant(&row.coeffs[j]);
            }
        }
        primary.push(phi);
        constrained.push(pairs[c].0);
    }
    let independent: Vec<VarId> = pairs.iter().map(|(q, _)| *q).filter(|q| !constrained.contains(q)).collect();

    // q̇ = right·(y_pivot, 0)
    let mut qdot = Vec::with_capacity(n);
    for (b, v) in vel.iter().enumerate() {
        let mut acc = GradedExpr::zero(g);
        for (slot, &i) in pivot_rows.iter().enumerate() {
            let col = if slot < k1 { slot } else { n_even + (slot - k1) };
            let c = cf.right.entry(b, col);
            if !c.is_zero() {
                acc = &acc + &y[i].left_mul_constant(c);
            }
        }
        qdot.push((*v, acc));
    }

    let basis = ConstraintBasis::new(&primary, t)?;
    let vel_images: BTreeMap<VarId, GradedExpr> = qdot.iter().cloned().collect();
    let mut h_raw = -&l.substitute(&vel_images)?;
    for ((_, qd), (_, p)) in qdot.iter().zip(&pairs) {
        h_raw = &h_raw + &(qd * &GradedExpr::var(t, *p));
    }
    let hamiltonian = basis.restrict(&h_raw)?;

    // H(q, p(q, q̇)) must equal q̇p(q̇) − L identically, and every φ must vanish on p(q̇).
    let p_images: BTreeMap<VarId, GradedExpr> = momenta_ids.iter().copied().zip(ps.iter().cloned()).collect();
    let mut energy = -l;
    for (v, p) in vel.iter().zip(&ps) {
        energy = &energy + &(&GradedExpr::var(t, *v) * p);
    }
    let pulled = hamiltonian.substitute(&p_images)?;
    if pulled != energy {
        return Err(ConstraintError::LegendreCheck(format!(
            "H(p(q̇)) = {} but q̇p − L = {}",
            pulled.render(t),
            energy.render(t)
        )));
    }
    for phi in &primary {
        let on = phi.substitute(&p_images)?;
        if !on.is_zero() {
            return Err(ConstraintError::LegendreCheck(format!(
                "constraint {} does not vanish on the Legendre image: {}",
                phi.render(t),
                on.render(t)
            )));
        }
    }

    let mut caveats = Vec::new();
    if !model.is_real() {
        caveats.push(format!(
            "Lagrangian is not self-conjugate (L* = {}); reality is not enforced",
            l.conj(t).render(t)
        ));
    }
    let hm = HamiltonianModel::new(t.clone(), hamiltonian, primary)?;
    Ok(PrimaryAnalysis {
        model: hm,
        momenta: ps,
        independent,
        constrained,
        velocity_rank: (k1, k2),
        velocities: qdot,
        caveats,
    })
}

/// Inverse Legendre transform: `L = (q̇^A p_A − H_T)|_𝒱` with `p_b` and `u^m` solved from
/// `q̇^A = (−1)^{#A} ∂H_T/∂p_A`.
pub fn hamiltonian_to_lagrangian(hm: &HamiltonianModel) -> Result<LagrangianModel, ConstraintError> {
    let t = &hm.table;
    let g = t.generators();
    let pairs = t.canonical_pairs();
    let basis = ConstraintBasis::new(&hm.primary, t)?;
    let solved: BTreeSet<VarId> = basis.pivots().into_iter().collect();
    if let Some(q) = solved.iter().find(|v| t.kind(**v) != VarKind::Momentum) {
        return Err(ConstraintError::NonInvertibleVelocityMap(format!(
            "primary constraint solved for position {}",
            t.name(*q)
        )));
    }
    let mut unknowns: Vec<VarId> = pairs.iter().map(|(_, p)| *p).filter(|p| !solved.contains(p)).collect();
    unknowns.extend(hm.multipliers.iter().copied());

    let mut h_t = hm.hamiltonian.clone();
    for (phi, u) in hm.primary.iter().zip(&hm.multipliers) {
        h_t = &h_t + &(phi * &GradedExpr::var(t, *u));
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (a, (q, p)) in pairs.iter().enumerate() {
        let pa = t.parity(*q);
        let mut rhs = basis.restrict(&h_t.left_derivative(*p, pa))?;
        if pa.is_odd() {
            rhs = -rhs;
        }
        let (coeffs, rest) = affine_parts(&rhs, &unknowns).ok_or_else(|| {
            ConstraintError::NonInvertibleVelocityMap(format!("velocity {} is not affine in (p_b, u)", rhs.render(t)))
        })?;
        let v = GradedExpr::var(t, t.velocity(*q)?);
        rows.push(LinRow::new(coeffs.into_iter().map(|c| c.widened(g)).collect(), &v - &rest, a, pairs.len()));
    }
    let cols: Vec<usize> = (0..unknowns.len()).collect();
    let pivots = reduce_rows(&mut rows, &cols);
    if pivots.len() < unknowns.len() || pivots.len() < rows.len() {
        return Err(ConstraintError::NonInvertibleVelocityMap(format!(
            "body rank {} for {} unknowns and {} velocities",
            pivots.len(),
            unknowns.len(),
            rows.len()
        )));
    }
    let solution: BTreeMap<VarId, GradedExpr> = pivots.iter().map(|&(r, c)| (unknowns[c], rows[r].rhs.clone())).collect();

    let mut pq = -&h_t;
    for (q, p) in &pairs {
        pq = &pq + &(&GradedExpr::var(t, t.velocity(*q)?) * &GradedExpr::var(t, *p));
    }
    let lagrangian = basis.restrict(&pq)?.substitute(&solution)?;
    LagrangianModel::new(t.clone(), lagrangian)
}
