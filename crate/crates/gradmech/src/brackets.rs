//! Graded Poisson and Dirac brackets over a declared phase space.
//!
//! With `x = (q, p)` the bracket is `[F,G} = ∂F/∂x^M ← J^{MN} → ∂G/∂x^N`, expanded
//! with left derivatives as
//! `(−1)^{#A#F} ∂F/∂q^A ∂G/∂p_A − (−1)^{#A(#F+1)} ∂F/∂p_A ∂G/∂q^A`.
//! Time and auxiliary symbols have vanishing brackets.

use thiserror::Error;

use crate::superalgebra::{Parity, SuperError, SuperMatrix};
use crate::symalg::{explicit_time_derivative, GradedExpr, SymError, VariableTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BracketError {
    #[error("bracket argument has mixed parity: {0}")]
    MixedParity(String),
    #[error("bracket matrix is degenerate (body rank {rank} < {size}); the set is not purely second class")]
    DegenerateOmega { rank: usize, size: usize },
    #[error("bracket matrix entry ({row},{col}) = {expr} is not constant; symbolic inversion is not attempted")]
    NonConstantOmega { row: usize, col: usize, expr: String },
    #[error("phase space is malformed: {0}")]
    BadPhaseSpace(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Super(#[from] SuperError),
}

/// A variable table whose positions each carry a momentum of equal parity.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    pub table: VariableTable,
}

impl PhaseSpace {
    pub fn new(table: VariableTable) -> Result<Self, BracketError> {
        for q in table.positions() {
            let p = table
                .partner(q)
                .ok_or_else(|| BracketError::BadPhaseSpace(format!("position {} has no momentum", table.name(q))))?;
            if table.parity(p) != table.parity(q) {
                return Err(BracketError::BadPhaseSpace(format!(
                    "{} and {} differ in parity",
                    table.name(q),
                    table.name(p)
                )));
            }
        }
        Ok(PhaseSpace { table })
    }

    /// `J^{MN} = [x^M, x^N}` with `x = (q¹..q^N, p₁..p_N)`, derived from the bracket itself.
    pub fn symplectic_matrix(&self) -> Result<SuperMatrix, BracketError> {
        let t = &self.table;
        let g = t.generators();
        let pairs = t.canonical_pairs();
        let xs: Vec<_> = pairs.iter().map(|(q, _)| *q).chain(pairs.iter().map(|(_, p)| *p)).collect();
        let parities: Vec<Parity> = xs.iter().map(|v| t.parity(*v)).collect();
        let mut rows = Vec::with_capacity(xs.len());
        for &a in &xs {
            let mut row = Vec::with_capacity(xs.len());
            for &b in &xs {
                let e = poisson(&GradedExpr::var(t, a), &GradedExpr::var(t, b), t)?;
                row.push(e.as_constant().expect("canonical brackets are constant"));
            }
            rows.push(row);
        }
        Ok(SuperMatrix::new(g, parities.clone(), parities, rows)?)
    }

    pub fn poisson(&self, f: &GradedExpr, g: &GradedExpr) -> Result<GradedExpr, BracketError> {
        poisson(f, g, &self.table)
    }
}

fn parity_of(e: &GradedExpr, table: &VariableTable) -> Result<Parity, BracketError> {
    e.parity().ok_or_else(|| BracketError::MixedParity(e.render(table)))
}

/// Graded Poisson bracket `[F, G}`.
pub fn poisson(f: &GradedExpr, g: &GradedExpr, table: &VariableTable) -> Result<GradedExpr, BracketError> {
    let pf = parity_of(f, table)?;
    parity_of(g, table)?;
    let gens = f.generators().max(g.generators());
    let mut out = GradedExpr::zero(gens);
    let (fv, gv) = (f.vars(), g.vars());
    for (q, p) in table.canonical_pairs() {
        let pa = table.parity(q);
        let sign1 = pa.is_odd() && pf.is_odd();
        let sign2 = pa.is_odd() && pf.plus(Parity::Odd).is_odd();
        if fv.contains(&q) && gv.contains(&p) {
            let t = &f.left_derivative(q, pa) * &g.left_derivative(p, pa);
            out = if sign1 { &out - &t } else { &out + &t };
        }
        if fv.contains(&p) && gv.contains(&q) {
            let t = &f.left_derivative(p, pa) * &g.left_derivative(q, pa);
            out = if sign2 { &out + &t } else { &out - &t };
        }
    }
    Ok(out)
}

/// Second-class set `ρ_s` with its constant bracket matrix and verified inverse.
#[derive(Clone, Debug)]
pub struct SecondClassSet {
    pub rho: Vec<GradedExpr>,
    pub omega: SuperMatrix,
    pub omega_inverse: SuperMatrix,
}

impl SecondClassSet {
    pub fn parities(&self) -> &[Parity] {
        self.omega.row_parities()
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// Pairwise bracket matrix `Ω_st = [ρ_s, ρ_t}`; entries must be constants.
pub fn bracket_matrix(rho: &[GradedExpr], table: &VariableTable) -> Result<SuperMatrix, BracketError> {
    let g = table.generators();
    let parities: Vec<Parity> = rho.iter().map(|r| parity_of(r, table)).collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(rho.len());
    for (s, a) in rho.iter().enumerate() {
        let mut row = Vec::with_capacity(rho.len());
        for (t, b) in rho.iter().enumerate() {
            let e = poisson(a, b, table)?;
            let c = e
                .as_constant()
                .ok_or_else(|| BracketError::NonConstantOmega { row: s, col: t, expr: e.render(table) })?;
            row.push(c.widened(g));
        }
        rows.push(row);
    }
    Ok(SuperMatrix::new(g, parities.clone(), parities, rows)?)
}

pub fn build_second_class(rho: Vec<GradedExpr>, table: &VariableTable) -> Result<SecondClassSet, BracketError> {
    let omega = bracket_matrix(&rho, table)?;
    let omega_inverse = match omega.inverse() {
        Ok(m) => m,
        Err(SuperError::SingularBody) => {
            return Err(BracketError::DegenerateOmega { rank: omega.body_rank(), size: rho.len() })
        }
        Err(e) => return Err(e.into()),
    };
    debug_assert!(omega.mul(&omega_inverse).map(|m| m.is_identity()).unwrap_or(false));
    Ok(SecondClassSet { rho, omega, omega_inverse })
}

/// `(Ω⁻¹)^{st} = −(−1)^{#s#t+#s+#t} (Ω⁻¹)^{ts}` for every pair.
pub fn inverse_has_graded_symmetry(scs: &SecondClassSet) -> bool {
    let ps = scs.parities();
    let m = &scs.omega_inverse;
    for s in 0..ps.len() {
        for t in 0..ps.len() {
            let (a, b) = (ps[s], ps[t]);
            let flip = (a.is_odd() && b.is_odd()) ^ a.is_odd() ^ b.is_odd();
            let rhs = if flip { m.entry(t, s).clone() } else { -m.entry(t, s) };
            if *m.entry(s, t) != rhs {
                return false;
            }
        }
    }
    true
}

/// Dirac bracket `[F,G} − [F,ρ_s} (Ω⁻¹)^{st} [ρ_t,G}`.
pub fn dirac(f: &GradedExpr, g: &GradedExpr, scs: &SecondClassSet, table: &VariableTable) -> Result<GradedExpr, BracketError> {
    let mut out = poisson(f, g, table)?;
    if scs.is_empty() {
        return Ok(out);
    }
    let left: Vec<GradedExpr> = scs.rho.iter().map(|r| poisson(f, r, table)).collect::<Result<_, _>>()?;
    let right: Vec<GradedExpr> = scs.rho.iter().map(|r| poisson(r, g, table)).collect::<Result<_, _>>()?;
    for (s, l) in left.iter().enumerate() {
        if l.is_zero() {
            continue;
        }
        for (t, r) in right.iter().enumerate() {
            let w = scs.omega_inverse.entry(s, t);
            if r.is_zero() || w.is_zero() {
                continue;
            }
            let mid = GradedExpr::constant(w.clone());
            out = &out - &(&(l * &mid) * r);
        }
    }
    Ok(out)
}

/// Which bracket a generic operation should use.
#[derive(Clone, Copy, Debug)]
pub enum Bracket<'a> {
    Poisson,
    Dirac(&'a SecondClassSet),
}

impl Bracket<'_> {
    pub fn apply(&self, f: &GradedExpr, g: &GradedExpr, table: &VariableTable) -> Result<GradedExpr, BracketError> {
        match self {
            Bracket::Poisson => poisson(f, g, table),
            Bracket::Dirac(scs) => dirac(f, g, scs, table),
        }
    }
}

/// Graded cyclic sum `(−1)^{#F#H}[F,[G,H}} + (−1)^{#G#F}[G,[H,F}} + (−1)^{#H#G}[H,[F,G}}`.
pub fn jacobi_defect(
    f: &GradedExpr,
    g: &GradedExpr,
    h: &GradedExpr,
    bracket: Bracket<'_>,
    table: &VariableTable,
) -> Result<GradedExpr, BracketError> {
    let (pf, pg, ph) = (parity_of(f, table)?, parity_of(g, table)?, parity_of(h, table)?);
    let signed = |odd: bool, e: GradedExpr| if odd { -e } else { e };
    let a = bracket.apply(f, &bracket.apply(g, h, table)?, table)?;
    let b = bracket.apply(g, &bracket.apply(h, f, table)?, table)?;
    let c = bracket.apply(h, &bracket.apply(f, g, table)?, table)?;
    let a = signed(pf.is_odd() && ph.is_odd(), a);
    let b = signed(pg.is_odd() && pf.is_odd(), b);
    let c = signed(ph.is_odd() && pg.is_odd(), c);
    Ok(&(&a + &b) + &c)
}

/// `dF/dt = [F, H_T} + ∂F/∂t + Σ φ_m C^m(F)`; the `C^m` hook is optional and never chosen
/// automatically.
pub fn time_derivative(
    f: &GradedExpr,
    hamiltonian: &GradedExpr,
    bracket: Bracket<'_>,
    table: &VariableTable,
    extension: Option<(&[GradedExpr], &dyn Fn(&GradedExpr) -> Vec<GradedExpr>)>,
) -> Result<GradedExpr, BracketError> {
    let mut out = &bracket.apply(f, hamiltonian, table)? + &explicit_time_derivative(f, table);
    if let Some((phis, hook)) = extension {
        for (phi, c) in phis.iter().zip(hook(f)) {
            out = &out + &(phi * &c);
        }
    }
    Ok(out)
}
