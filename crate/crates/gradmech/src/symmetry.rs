//! Noether charges, total Noether charges and the symmetry-generator criterion
//! for total Hamiltonian systems.
//!
//! A symmetry is `δq^A` (same parity as `q^A`, parameter stripped) with
//! `δL = d(δK)/dt` off shell. Time-dependent parameters are polynomials in `t`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::brackets::{poisson, BracketError};
use crate::constraints::{ConstraintBasis, ConstraintError, ConstraintReport, HamiltonianModel, LagrangianModel};
use crate::superalgebra::{GrassmannNumber, Parity, Rational};
use crate::symalg::{
    euler_lagrange, explicit_time_derivative, prolong, total_time_derivative, GradedExpr, SymError, VarId, VarKind,
    VariableTable,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryError {
    #[error("not an off-shell symmetry; δL − d(δK)/dt = {0}")]
    Unverified(String),
    #[error("malformed symmetry candidate: {0}")]
    BadCandidate(String),
    #[error("velocity elimination failed: {0}")]
    Elimination(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("model is not static (explicit time dependence in constraints or Hamiltonian)")]
    NonStatic,
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// `δq^A(q, q̇, t)` and `δK(q, q̇, t)`.
#[derive(Clone, Debug)]
pub struct SymmetryCandidate {
    pub delta_q: Vec<(VarId, GradedExpr)>,
    pub delta_k: GradedExpr,
}

impl SymmetryCandidate {
    fn check(&self, table: &VariableTable) -> Result<(), SymmetryError> {
        for (q, d) in &self.delta_q {
            if table.kind(*q) != VarKind::Position {
                return Err(SymmetryError::BadCandidate(format!("{} is not a position", table.name(*q))));
            }
            if !d.is_zero() && d.parity() != Some(table.parity(*q)) {
                return Err(SymmetryError::BadCandidate(format!(
                    "δ{} = {} does not have the parity of {}",
                    table.name(*q),
                    d.render(table),
                    table.name(*q)
                )));
            }
        }
        if !self.delta_k.is_zero() && self.delta_k.parity() != Some(Parity::Even) {
            return Err(SymmetryError::BadCandidate(format!("δK = {} is not even", self.delta_k.render(table))));
        }
        Ok(())
    }

    fn delta_of(&self, q: VarId, g: u32) -> GradedExpr {
        self.delta_q
            .iter()
            .find(|(v, _)| *v == q)
            .map(|(_, d)| d.clone())
            .unwrap_or_else(|| GradedExpr::zero(g))
    }
}

/// `δL − d(δK)/dt` with `δL = Σ_{A,n} (dⁿδq^A/dtⁿ) ∂L/∂q^A_n`.
pub fn invariance_residual(model: &LagrangianModel, s: &SymmetryCandidate) -> Result<GradedExpr, SymmetryError> {
    let t = &model.table;
    s.check(t)?;
    let l = &model.lagrangian;
    let g = t.generators();
    let mut delta_l = GradedExpr::zero(g);
    for q in t.positions() {
        let dq = s.delta_of(q, g);
        if dq.is_zero() {
            continue;
        }
        for n in 0..=t.max_jet_order() {
            let qn = t.jet(q, n)?;
            if !l.contains_var(qn) {
                continue;
            }
            delta_l = &delta_l + &(&prolong(&dq, n, t)? * &l.d(t, qn));
        }
    }
    Ok(&delta_l - &total_time_derivative(&s.delta_k, t)?)
}

/// `Ok(None)` when the candidate is an off-shell symmetry, otherwise the residual.
pub fn verify_offshell_invariance(model: &LagrangianModel, s: &SymmetryCandidate) -> Result<Option<GradedExpr>, SymmetryError> {
    let r = invariance_residual(model, s)?;
    Ok(if r.is_zero() { None } else { Some(r) })
}

/// `Q = δq^A ∂L/∂q̇^A − δK`, checked to satisfy `dQ/dt = −δq^A δL/δq^A` identically.
pub fn noether_charge(model: &LagrangianModel, s: &SymmetryCandidate) -> Result<GradedExpr, SymmetryError> {
    if let Some(r) = verify_offshell_invariance(model, s)? {
        return Err(SymmetryError::Unverified(r.render(&model.table)));
    }
    let t = &model.table;
    let g = t.generators();
    let l = &model.lagrangian;
    let mut q_charge = -&s.delta_k;
    let mut on_shell = GradedExpr::zero(g);
    let el: BTreeMap<VarId, GradedExpr> = euler_lagrange(l, t)?.into_iter().collect();
    for q in t.positions() {
        let dq = s.delta_of(q, g);
        if dq.is_zero() {
            continue;
        }
        let v = t.velocity(q)?;
        q_charge = &q_charge + &(&dq * &l.d(t, v));
        on_shell = &on_shell + &(&dq * &el[&q]);
    }
    let dq_dt = total_time_derivative(&q_charge, t)?;
    if &dq_dt + &on_shell != GradedExpr::zero(g) {
        return Err(SymmetryError::Consistency(format!(
            "dQ/dt = {} differs from −δq·δL/δq = {}",
            dq_dt.render(t),
            (-&on_shell).render(t)
        )));
    }
    Ok(q_charge)
}

/// Velocities `ṽ^A = [q^A, H_T}` with the solved multipliers.
pub fn velocity_images(report: &ConstraintReport) -> Result<BTreeMap<VarId, GradedExpr>, SymmetryError> {
    let t = &report.table;
    let mut out = BTreeMap::new();
    for (q, _) in t.canonical_pairs() {
        let v = poisson(&GradedExpr::var(t, q), &report.total_hamiltonian, t)?;
        out.insert(t.velocity(q)?, v);
    }
    Ok(out)
}

/// `Q_T = Δq^A p_A − δK̃`: velocities replaced by `ṽ`, momenta left unsubstituted.
///
/// Checked on the way out: `[Q_T, q^A} ≃ −Δq^A` on the primary surface, `[Q_T, φ_m}`
/// vanishes on the full constraint surface, and `[Q_T, H_T} + ∂_t Q_T` lies in the ideal.
pub fn total_noether_charge(
    model: &LagrangianModel,
    s: &SymmetryCandidate,
    hm: &HamiltonianModel,
    report: &ConstraintReport,
) -> Result<GradedExpr, SymmetryError> {
    if let Some(r) = verify_offshell_invariance(model, s)? {
        return Err(SymmetryError::Unverified(r.render(&model.table)));
    }
    let t = &report.table;
    let g = t.generators();
    let images = velocity_images(report)?;
    let tilde = |e: &GradedExpr| -> Result<GradedExpr, SymmetryError> {
        for v in e.vars() {
            if matches!(t.kind(v), VarKind::Jet(n) if n >= 2) {
                return Err(SymmetryError::Elimination(format!("{} cannot be eliminated", t.name(v))));
            }
        }
        Ok(e.substitute(&images)?)
    };
    let mut q_t = -&tilde(&s.delta_k)?;
    let mut deltas = Vec::new();
    for (q, p) in t.canonical_pairs() {
        let dq = tilde(&s.delta_of(q, g))?;
        q_t = &q_t + &(&dq * &GradedExpr::var(t, p));
        deltas.push((q, dq));
    }

    let primary = ConstraintBasis::new(&hm.primary, t)?;
    for (q, dq) in &deltas {
        let gen = &poisson(&q_t, &GradedExpr::var(t, *q), t)? + dq;
        if !primary.restrict(&gen)?.is_zero() {
            return Err(SymmetryError::Consistency(format!(
                "[Q_T, {}}} + Δ{} = {} is not weakly zero",
                t.name(*q),
                t.name(*q),
                gen.render(t)
            )));
        }
    }
    let full = report.basis()?;
    for phi in &hm.primary {
        let b = poisson(&q_t, phi, t)?;
        if !full.restrict(&b)?.is_zero() {
            return Err(SymmetryError::Consistency(format!(
                "[Q_T, {}}} = {} does not vanish on shell",
                phi.render(t),
                b.render(t)
            )));
        }
    }
    let cons = &poisson(&q_t, &report.total_hamiltonian, t)? + &explicit_time_derivative(&q_t, t);
    if !full.restrict(&cons)?.is_zero() {
        return Err(SymmetryError::Consistency(format!(
            "[Q_T, H_T}} + ∂Q_T/∂t = {} is not in the constraint ideal",
            cons.render(t)
        )));
    }
    Ok(q_t)
}

/// Verdict of the generator criterion
/// `[Q, H_T} + ∂Q/∂t = φ^{1st}_i δv^i + ½ φ_h φ_h′ δw^{hh′} + f(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorCheckResult {
    pub generator: bool,
    /// Coefficients on the primary first-class constraints.
    pub delta_v: Vec<GradedExpr>,
    /// `(h, h′, δw^{hh′})` on the quadratic ideal.
    pub delta_w: Vec<(usize, usize, GradedExpr)>,
    /// Phase-space independent part `f(t)`, removed by redefining the charge.
    pub time_shift: GradedExpr,
    /// What could not be matched (zero for generators).
    pub residual: GradedExpr,
}

fn is_phase_free(e: &GradedExpr, t: &VariableTable) -> bool {
    e.vars().iter().all(|v| !matches!(t.kind(*v), VarKind::Position | VarKind::Momentum | VarKind::Jet(_)))
}

/// Solves `Σ_i a_i^h x_i = c^h` for each `h` with constant `a`; returns `x` and the residual rows.
fn solve_constant(
    a: &[Vec<GrassmannNumber>],
    c: &[GradedExpr],
    unknowns: usize,
    g: u32,
) -> (Vec<GradedExpr>, Vec<(usize, GradedExpr)>) {
    let mut x = vec![GradedExpr::zero(g); unknowns];
    let mut residual = Vec::new();
    // Gauss–Jordan over the rows `h`, columns `i`.
    let mut rows: Vec<(Vec<GrassmannNumber>, GradedExpr, usize)> =
        a.iter().zip(c).enumerate().map(|(h, (r, e))| (r.clone(), e.clone(), h)).collect();
    let mut used = vec![false; rows.len()];
    let mut pivots = Vec::new();
    for col in 0..unknowns {
        let Some(r) = (0..rows.len()).find(|&r| !used[r] && !num_traits::Zero::is_zero(&rows[r].0[col].body())) else {
            continue;
        };
        let inv = rows[r].0[col].inverse().expect("nonzero body");
        rows[r].0 = rows[r].0.iter().map(|v| &inv * v).collect();
        rows[r].1 = rows[r].1.left_mul_constant(&inv);
        let pr = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row.0[col].is_zero() {
                let f = row.0[col].clone();
                row.0 = row.0.iter().zip(&pr.0).map(|(a, b)| a - &(&f * b)).collect();
                row.1 = &row.1 - &pr.1.left_mul_constant(&f);
            }
        }
        used[r] = true;
        pivots.push((r, col));
    }
    for &(r, col) in &pivots {
        x[col] = rows[r].1.clone();
    }
    for (r, row) in rows.iter().enumerate() {
        if !used[r] {
            // remaining coefficients are nilpotent or zero; anything left over is unmatched
            let mut rest = row.1.clone();
            for (i, coeff) in row.0.iter().enumerate() {
                rest = &rest - &x[i].left_mul_constant(coeff);
            }
            if !rest.is_zero() {
                residual.push((row.2, rest));
            }
        }
    }
    (x, residual)
}

/// Decides whether `Q` generates a symmetry of the total Hamiltonian system.
pub fn is_symmetry_generator(
    q: &GradedExpr,
    _hm: &HamiltonianModel,
    report: &ConstraintReport,
) -> Result<GeneratorCheckResult, SymmetryError> {
    let t = &report.table;
    let g = t.generators();
    if q.parity() != Some(Parity::Even) && !q.is_zero() {
        return Err(SymmetryError::BadCandidate(format!("generator {} is not even", q.render(t))));
    }
    let phis = report.constraints();
    let basis = report.basis()?;
    let rhs = &poisson(q, &report.total_hamiltonian, t)? + &explicit_time_derivative(q, t);
    let red = basis.reduce(&rhs, t)?;
    let zero = GradedExpr::zero(g);
    let not_generator = |residual: GradedExpr, shift: GradedExpr| GeneratorCheckResult {
        generator: false,
        delta_v: Vec::new(),
        delta_w: Vec::new(),
        time_shift: shift,
        residual,
    };

    // Phase-space independent remainder is absorbed into the charge.
    let (time_shift, leftover) = if is_phase_free(&red.restriction, t) {
        (red.restriction.clone(), zero.clone())
    } else {
        (zero.clone(), red.restriction.clone())
    };
    if !leftover.is_zero() {
        return Ok(not_generator(leftover, time_shift));
    }
    // On-shell first-class precondition.
    for phi in &phis {
        let b = basis.restrict(&poisson(q, phi, t)?)?;
        if !b.is_zero() {
            return Ok(not_generator(b, time_shift));
        }
    }

    let mut linear = Vec::with_capacity(phis.len());
    let mut delta_w = Vec::new();
    for (h, coeff) in red.coefficients.iter().enumerate() {
        let inner = basis.reduce(coeff, t)?;
        linear.push(inner.restriction);
        for (k, c) in inner.coefficients.into_iter().enumerate() {
            if !c.is_zero() {
                delta_w.push((h, k, c.scale(&Rational::from_integer(2.into()))));
            }
        }
    }
    // φ^{1st}_i = Σ_m φ_m V^m_i over the primaries (the first entries of the chain).
    let a: Vec<Vec<GrassmannNumber>> = (0..phis.len())
        .map(|h| {
            report
                .multiplier_kernel
                .iter()
                .map(|v| v.get(h).cloned().unwrap_or_else(|| GrassmannNumber::zero(g)))
                .collect()
        })
        .collect();
    let (delta_v, unmatched) = solve_constant(&a, &linear, report.multiplier_kernel.len(), g);
    if !unmatched.is_empty() {
        let mut residual = zero.clone();
        for (h, e) in unmatched {
            residual = &residual + &(&phis[h] * &e);
        }
        return Ok(not_generator(residual, time_shift));
    }

    // Exact identity check.
    let mut rebuilt = time_shift.clone();
    for (phi, dv) in report.primary_first_class.iter().zip(&delta_v) {
        rebuilt = &rebuilt + &(phi * dv);
    }
    let half = Rational::new(1.into(), 2.into());
    for (h, k, w) in &delta_w {
        rebuilt = &rebuilt + &(&(&phis[*h] * &phis[*k]) * w).scale(&half);
    }
    if rebuilt != rhs {
        return Err(SymmetryError::Consistency(format!(
            "generator decomposition does not reproduce {}",
            rhs.render(t)
        )));
    }
    Ok(GeneratorCheckResult { generator: true, delta_v, delta_w, time_shift, residual: zero })
}

/// Static gauge-generator data: `φ̇^{1st}_j = Σ_k φ^{1st}_k 𝒯^k_j` (+ quadratic terms).
#[derive(Clone, Debug)]
pub struct GaugeConditions {
    /// Primary first-class constraints followed by the secondary ones.
    pub first_class: Vec<GradedExpr>,
    pub primary_count: usize,
    /// `tau[k][j] = 𝒯^k_j`.
    pub tau: Vec<Vec<GradedExpr>>,
    /// Whether every `𝒯^k_j` is a constant.
    pub constant: bool,
    /// Per `j`: true if `φ̇^{1st}_j` needs the quadratic ideal.
    pub quadratic: Vec<bool>,
    /// Human-readable notes on expression-valued or quadratic escapes.
    pub flags: Vec<String>,
}

impl GaugeConditions {
    /// Number of ODE rows `dε^s/dt + 𝒯^s_r ε^r + 𝒯^s_a ε^a = 0` (one per secondary).
    pub fn ode_rows(&self) -> usize {
        self.first_class.len() - self.primary_count
    }

    /// Residuals of the ODE rows for polynomial `ε^j(t)`; all zero iff `ε` solves them.
    pub fn ode_residuals(&self, eps: &[GradedExpr], table: &VariableTable) -> Result<Vec<GradedExpr>, SymmetryError> {
        if eps.len() != self.first_class.len() {
            return Err(SymmetryError::BadCandidate(format!(
                "{} parameters for {} first-class constraints",
                eps.len(),
                self.first_class.len()
            )));
        }
        let mut out = Vec::new();
        for s in self.primary_count..self.first_class.len() {
            let mut r = explicit_time_derivative(&eps[s], table);
            for (j, e) in eps.iter().enumerate() {
                r = &r + &(&self.tau[s][j] * e);
            }
            out.push(r);
        }
        Ok(out)
    }

    /// `Σ_j φ^{1st}_j ε^j`
    pub fn generator(&self, eps: &[GradedExpr], g: u32) -> GradedExpr {
        let mut q = GradedExpr::zero(g);
        for (phi, e) in self.first_class.iter().zip(eps) {
            q = &q + &(phi * e);
        }
        q
    }
}

pub fn gauge_generator_conditions(report: &ConstraintReport, hm: &HamiltonianModel) -> Result<GaugeConditions, SymmetryError> {
    if hm.explicit_time {
        return Err(SymmetryError::NonStatic);
    }
    let t = &report.table;
    let g = t.generators();
    let phis = report.constraints();
    let basis = report.basis()?;
    let mut first_class = report.primary_first_class.clone();
    first_class.extend(report.secondary_first_class.iter().cloned());
    let primary_count = report.primary_first_class.len();
    // Express each first-class constraint over the chain: φ^{1st}_k = Σ_h φ_h b_k^h.
    let mut b = Vec::with_capacity(first_class.len());
    for f in &first_class {
        let red = basis.reduce(f, t)?;
        let row: Vec<GrassmannNumber> = red
            .coefficients
            .iter()
            .map(|c| {
                c.as_constant()
                    .map(|x| x.widened(g))
                    .ok_or_else(|| SymmetryError::Consistency(format!("non-constant combination {}", c.render(t))))
            })
            .collect::<Result<_, _>>()?;
        b.push(row);
    }
    let a: Vec<Vec<GrassmannNumber>> = (0..phis.len()).map(|h| b.iter().map(|row| row[h].clone()).collect()).collect();

    let n = first_class.len();
    let mut tau = vec![vec![GradedExpr::zero(g); n]; n];
    let mut quadratic = vec![false; n];
    let mut flags = Vec::new();
    let mut constant = true;
    for (j, f) in first_class.iter().enumerate() {
        let dot = poisson(f, &report.total_hamiltonian, t)?;
        let red = basis.reduce(&dot, t)?;
        if !red.restriction.is_zero() {
            return Err(SymmetryError::Consistency(format!("first-class {} is not preserved", f.render(t))));
        }
        let mut linear = Vec::with_capacity(phis.len());
        for coeff in &red.coefficients {
            let inner = basis.reduce(coeff, t)?;
            if inner.coefficients.iter().any(|c| !c.is_zero()) {
                quadratic[j] = true;
            }
            linear.push(inner.restriction);
        }
        let (x, unmatched) = solve_constant(&a, &linear, n, g);
        if !unmatched.is_empty() {
            flags.push(format!(
                "time derivative of {} has a linear part outside the first-class span",
                f.render(t)
            ));
        }
        for (k, e) in x.into_iter().enumerate() {
            if !e.is_constant() {
                constant = false;
                flags.push(format!("T[{k}][{j}] = {} is expression-valued", e.render(t)));
            }
            tau[k][j] = e;
        }
        if quadratic[j] {
            flags.push(format!(
                "time derivative of {} is quadratic in the constraints (quadratic-ideal escape)",
                f.render(t)
            ));
        }
    }
    Ok(GaugeConditions { first_class, primary_count, tau, constant, quadratic, flags })
}

/// First-order change of the canonical brackets under `δx = [x, Q}`:
/// `[δx^M, x^N} + [x^M, δx^N}` for every ordered pair; all zero for any even `Q`.
pub fn first_order_symplectic_defect(q: &GradedExpr, table: &VariableTable) -> Result<Vec<GradedExpr>, SymmetryError> {
    let pairs = table.canonical_pairs();
    let xs: Vec<VarId> = pairs.iter().map(|(q, _)| *q).chain(pairs.iter().map(|(_, p)| *p)).collect();
    let deltas: Vec<GradedExpr> = xs
        .iter()
        .map(|x| poisson(&GradedExpr::var(table, *x), q, table))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (m, xm) in xs.iter().enumerate() {
        for (n, xn) in xs.iter().enumerate() {
            let a = poisson(&deltas[m], &GradedExpr::var(table, *xn), table)?;
            let b = poisson(&GradedExpr::var(table, *xm), &deltas[n], table)?;
            out.push(&a + &b);
        }
    }
    Ok(out)
}
