//! BRST operator of a finite-dimensional Lie algebra acting on a ghost-extended algebra.
//!
//! Generators per index `a`: matter `phi<a>` (even, adjoint), ghost `omega<a>` (odd, +1),
//! antighost `omegabar<a>` (odd, −1) and Lagrange field `k<a>` (even). `Q` acts as an odd
//! derivation from the left:
//!
//! ```text
//! Q φ^a = −C_bc^a ω^b φ^c,  Q ω^a = −½ C_bc^a ω^b ω^c,  Q ω̄_a = −k_a,  Q k_a = 0
//! ```

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::random::{self, TestRng};
use crate::superalgebra::{rat, Parity, Rational};
use crate::symalg::{GradedExpr, SymError, VarId, VarKind, VariableTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrstError {
    #[error("structure constants: {0}")]
    BadStructureConstants(String),
    #[error("Jacobi identity fails for (a, b, c, d) = {0:?}: {1}")]
    Jacobi((usize, usize, usize, usize), Rational),
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("exponential factors are not allowed in ghost-algebra expressions")]
    Exponential,
    #[error("expression does not have a definite ghost number: {0}")]
    InhomogeneousGhostNumber(String),
    #[error("expression is not BRST closed; Q of it is {0}")]
    NotClosed(String),
    #[error("decomposition check failed: {0}")]
    Decomposition(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// `c[a][b][d] = C_ab^d`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebraSpec {
    c: Vec<Vec<Vec<Rational>>>,
}

impl LieAlgebraSpec {
    /// Checks shape, antisymmetry and the Jacobi identity.
    pub fn new(c: Vec<Vec<Vec<Rational>>>) -> Result<Self, BrstError> {
        let spec = Self::new_unchecked(c)?;
        if let Some((idx, v)) = spec.jacobi_violation() {
            return Err(BrstError::Jacobi(idx, v));
        }
        Ok(spec)
    }

    /// Shape and antisymmetry only; used to exhibit what a broken algebra does.
    pub fn new_unchecked(c: Vec<Vec<Vec<Rational>>>) -> Result<Self, BrstError> {
        let n = c.len();
        if c.iter().any(|r| r.len() != n || r.iter().any(|s| s.len() != n)) {
            return Err(BrstError::BadStructureConstants(format!("table is not {n}×{n}×{n}")));
        }
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    if c[a][b][d] != -c[b][a][d].clone() {
                        return Err(BrstError::BadStructureConstants(format!(
                            "C_{}{}^{} is not antisymmetric in the lower indices",
                            a + 1,
                            b + 1,
                            d + 1
                        )));
                    }
                }
            }
        }
        Ok(LieAlgebraSpec { c })
    }

    /// From sparse `(a, b, d, C_ab^d)` entries with 1-based indices; `C_ba^d` is filled in.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, Rational)]) -> Result<Self, BrstError> {
        let mut c = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        for (a, b, d, v) in entries {
            if [*a, *b, *d].iter().any(|i| *i == 0 || *i > dim) {
                return Err(BrstError::BadStructureConstants(format!("index out of range in C_{a}{b}^{d}")));
            }
            c[a - 1][b - 1][d - 1] = v.clone();
            c[b - 1][a - 1][d - 1] = -v.clone();
        }
        Self::new(c)
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebraSpec { c: vec![vec![vec![Rational::zero(); dim]; dim]; dim] }
    }

    /// `C_ab^c = ε_abc`
    pub fn su2() -> Self {
        let one = Rational::one();
        Self::from_entries(3, &[(1, 2, 3, one.clone()), (2, 3, 1, one.clone()), (3, 1, 2, one)]).expect("su(2) is a Lie algebra")
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn structure_constant(&self, a: usize, b: usize, d: usize) -> &Rational {
        &self.c[a][b][d]
    }

    /// First nonzero `Σ_e C_ab^e C_ec^d + cyclic(a, b, c)`, 0-based indices.
    pub fn jacobi_violation(&self) -> Option<((usize, usize, usize, usize), Rational)> {
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = Rational::zero();
                        for e in 0..n {
                            s += &self.c[a][b][e] * &self.c[e][c][d];
                            s += &self.c[b][c][e] * &self.c[e][a][d];
                            s += &self.c[c][a][e] * &self.c[e][b][d];
                        }
                        if !s.is_zero() {
                            return Some(((a, b, c, d), s));
                        }
                    }
                }
            }
        }
        None
    }

    /// Structure constants in the basis `e'_a = Σ_b M_ab e_b` (`m` must be invertible).
    pub fn change_basis(&self, m: &[Vec<Rational>]) -> Result<Self, BrstError> {
        let n = self.dim();
        let inv = crate::superalgebra::ratmat::inverse(&m.to_vec())
            .ok_or_else(|| BrstError::BadStructureConstants("basis change is singular".into()))?;
        let mut c = vec![vec![vec![Rational::zero(); n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for f in 0..n {
                    // [e'_a, e'_b] = M_ai M_bj C_ij^k e_k = (M_ai M_bj C_ij^k (M⁻¹)_kf) e'_f
                    let mut s = Rational::zero();
                    for i in 0..n {
                        for j in 0..n {
                            let w = &m[a][i] * &m[b][j];
                            if w.is_zero() {
                                continue;
                            }
                            for k in 0..n {
                                s += &w * &self.c[i][j][k] * &inv[k][f];
                            }
                        }
                    }
                    c[a][b][f] = s;
                }
            }
        }
        Self::new(c)
    }
}

/// Random 3-dimensional Lie algebra: one of a few Bianchi-type algebras in a random
/// integer basis.
pub fn random_lie_algebra_3d(rng: &mut TestRng) -> LieAlgebraSpec {
    let r = |n: i64| rat(n, 1);
    let base = match rng.random_range(0..4) {
        0 => LieAlgebraSpec::su2(),
        // Heisenberg
        1 => LieAlgebraSpec::from_entries(3, &[(1, 2, 3, r(1))]).unwrap(),
        // [e3, e1] = e1, [e3, e2] = λ e2
        2 => {
            let l = r(rng.random_range(-3..=3));
            LieAlgebraSpec::from_entries(3, &[(3, 1, 1, r(1)), (3, 2, 2, l)]).unwrap()
        }
        // [e1,e2] = a e3, [e2,e3] = b e1, [e3,e1] = c e2
        _ => {
            let mut v = || r(rng.random_range(-2..=2));
            let (a, b, c) = (v(), v(), v());
            LieAlgebraSpec::from_entries(3, &[(1, 2, 3, a), (2, 3, 1, b), (3, 1, 2, c)]).unwrap()
        }
    };
    loop {
        let m: Vec<Vec<Rational>> = (0..3).map(|_| (0..3).map(|_| r(rng.random_range(-2..=2))).collect()).collect();
        if let Ok(spec) = base.change_basis(&m) {
            return spec;
        }
    }
}

/// Ghost-extended algebra with the BRST and Hodge operators.
#[derive(Clone, Debug)]
pub struct GhostAlgebra {
    pub spec: LieAlgebraSpec,
    pub table: VariableTable,
    pub phi: Vec<VarId>,
    pub omega: Vec<VarId>,
    pub omegabar: Vec<VarId>,
    pub k: Vec<VarId>,
    brst: BTreeMap<VarId, GradedExpr>,
    hodge: BTreeMap<VarId, GradedExpr>,
}

impl GhostAlgebra {
    pub fn new(spec: LieAlgebraSpec) -> Result<Self, BrstError> {
        let n = spec.dim();
        let mut table = VariableTable::new(0);
        let mut add = |prefix: &str, parity, kind, gh| -> Result<Vec<VarId>, BrstError> {
            (1..=n).map(|a| Ok(table.add(&format!("{prefix}{a}"), parity, kind, gh)?)).collect()
        };
        let phi = add("phi", Parity::Even, VarKind::Auxiliary, 0)?;
        let omega = add("omega", Parity::Odd, VarKind::Ghost, 1)?;
        let omegabar = add("omegabar", Parity::Odd, VarKind::Antighost, -1)?;
        let k = add("k", Parity::Even, VarKind::Auxiliary, 0)?;
        let var = |v: VarId| GradedExpr::var(&table, v);
        let mut brst = BTreeMap::new();
        let mut hodge = BTreeMap::new();
        let half = rat(1, 2);
        for a in 0..n {
            let mut qphi = GradedExpr::zero(0);
            let mut qomega = GradedExpr::zero(0);
            for b in 0..n {
                for c in 0..n {
                    let cc = &spec.c[b][c][a];
                    if cc.is_zero() {
                        continue;
                    }
                    qphi = &qphi - &(&var(omega[b]) * &var(phi[c])).scale(cc);
                    qomega = &qomega - &(&var(omega[b]) * &var(omega[c])).scale(&(cc * &half));
                }
            }
            brst.insert(phi[a], qphi);
            brst.insert(omega[a], qomega);
            brst.insert(omegabar[a], -var(k[a]));
            brst.insert(k[a], GradedExpr::zero(0));
            hodge.insert(phi[a], GradedExpr::zero(0));
            hodge.insert(omega[a], GradedExpr::zero(0));
            hodge.insert(omegabar[a], GradedExpr::zero(0));
            hodge.insert(k[a], -var(omegabar[a]));
        }
        Ok(GhostAlgebra { spec, table, phi, omega, omegabar, k, brst, hodge })
    }

    pub fn generators(&self) -> Vec<VarId> {
        [&self.phi, &self.omega, &self.omegabar, &self.k].into_iter().flatten().copied().collect()
    }

    pub fn parse(&self, s: &str) -> Result<GradedExpr, BrstError> {
        Ok(crate::symalg::parse_expr(s, &self.table)?)
    }

    fn odd_derivation(&self, e: &GradedExpr, images: &BTreeMap<VarId, GradedExpr>) -> Result<GradedExpr, BrstError> {
        let mut out = GradedExpr::zero(0);
        for ((m, form), c) in e.terms() {
            if !form.0.is_empty() {
                return Err(BrstError::Exponential);
            }
            let mut factors = Vec::new();
            for (v, n) in &m.even {
                factors.extend(std::iter::repeat_n(*v, *n as usize));
            }
            factors.extend(m.odd.iter().copied());
            let imgs: Vec<&GradedExpr> = factors
                .iter()
                .map(|v| images.get(v).ok_or_else(|| BrstError::UnknownGenerator(self.table.name(*v).to_string())))
                .collect::<Result<_, _>>()?;
            // suffix[i] = f_i ⋯ f_n
            let mut suffix = vec![GradedExpr::one(0); factors.len() + 1];
            for i in (0..factors.len()).rev() {
                suffix[i] = &GradedExpr::var(&self.table, factors[i]) * &suffix[i + 1];
            }
            for parity in [Parity::Even, Parity::Odd] {
                let cp = c.part(parity);
                if cp.is_zero() {
                    continue;
                }
                let mut prefix = GradedExpr::constant(cp);
                let mut odd = parity.is_odd();
                for (i, v) in factors.iter().enumerate() {
                    if !imgs[i].is_zero() {
                        let term = &(&prefix * imgs[i]) * &suffix[i + 1];
                        out = if odd { &out - &term } else { &out + &term };
                    }
                    prefix = &prefix * &GradedExpr::var(&self.table, *v);
                    if self.table.parity(*v).is_odd() {
                        odd = !odd;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn brst_apply(&self, e: &GradedExpr) -> Result<GradedExpr, BrstError> {
        self.odd_derivation(e, &self.brst)
    }

    pub fn hodge_apply(&self, e: &GradedExpr) -> Result<GradedExpr, BrstError> {
        self.odd_derivation(e, &self.hodge)
    }

    fn counted(&self, m: &crate::symalg::Monomial) -> u32 {
        let even: u32 = m.even.iter().filter(|(v, _)| self.k.contains(v)).map(|(_, n)| n).sum();
        even + m.odd.iter().filter(|v| self.omegabar.contains(v)).count() as u32
    }

    /// `N`: each term times its number of `ω̄` and `k` factors.
    pub fn number_operator(&self, e: &GradedExpr) -> GradedExpr {
        GradedExpr::from_terms(
            0,
            e.terms()
                .map(|(key, c)| (key.clone(), c.scale(&Rational::from_integer(self.counted(&key.0).into())))),
        )
    }

    /// Part of `e` with `N`-eigenvalue `n`.
    pub fn number_part(&self, e: &GradedExpr, n: u32) -> GradedExpr {
        GradedExpr::from_terms(0, e.terms().filter(|(key, _)| self.counted(&key.0) == n).map(|(k, c)| (k.clone(), c.clone())))
    }

    fn term_ghost(&self, m: &crate::symalg::Monomial) -> i32 {
        let even: i32 = m.even.iter().map(|(v, n)| self.table.get(*v).ghost_number * *n as i32).sum();
        even + m.odd.iter().map(|v| self.table.get(*v).ghost_number).sum::<i32>()
    }

    /// Ghost number of a homogeneous expression (`None` for zero).
    pub fn ghost_number(&self, e: &GradedExpr) -> Result<Option<i32>, BrstError> {
        let mut g = None;
        for ((m, _), _) in e.terms() {
            let n = self.term_ghost(m);
            match g {
                None => g = Some(n),
                Some(h) if h != n => return Err(BrstError::InhomogeneousGhostNumber(e.render(&self.table))),
                _ => {}
            }
        }
        Ok(g)
    }

    /// `Υ = Υ₀ + Q Υ̃` with `Υ₀` the `N = 0` part and `Υ̃ = Σ_{N≥1} N⁻¹ Q_Hodge Υ_N`.
    pub fn decompose_closed(&self, upsilon: &GradedExpr) -> Result<(GradedExpr, GradedExpr), BrstError> {
        let q = self.brst_apply(upsilon)?;
        if !q.is_zero() {
            return Err(BrstError::NotClosed(q.render(&self.table)));
        }
        let max = upsilon.terms().map(|((m, _), _)| self.counted(m)).max().unwrap_or(0);
        let base = self.number_part(upsilon, 0);
        let mut tilde = GradedExpr::zero(0);
        for n in 1..=max {
            let part = self.number_part(upsilon, n);
            if !part.is_zero() {
                tilde = &tilde + &self.hodge_apply(&part)?.scale(&rat(1, n as i64));
            }
        }
        if !self.brst_apply(&base)?.is_zero() {
            return Err(BrstError::Decomposition("N = 0 part is not closed".into()));
        }
        if &base + &self.brst_apply(&tilde)? != *upsilon {
            return Err(BrstError::Decomposition("Υ ≠ Υ₀ + QΥ̃".into()));
        }
        Ok((base, tilde))
    }

    /// Random polynomial over all generators with rational coefficients.
    pub fn random_element(&self, rng: &mut TestRng, max_terms: usize, max_degree: u32) -> GradedExpr {
        random::poly(rng, &self.table, &self.generators(), max_terms, max_degree, None, 0)
    }

    /// Random element of definite ghost number (possibly zero).
    pub fn random_homogeneous(&self, rng: &mut TestRng, max_terms: usize, max_degree: u32) -> GradedExpr {
        let x = self.random_element(rng, max_terms, max_degree);
        let Some(((m, _), _)) = x.terms().next() else { return x };
        let g = self.term_ghost(m);
        GradedExpr::from_terms(0, x.terms().filter(|((m, _), _)| self.term_ghost(m) == g).map(|(k, c)| (k.clone(), c.clone())))
    }

    pub fn nilpotency_check(&self, samples: usize, seed: u64) -> Result<NilpotencyReport, BrstError> {
        let mut generator_defects = Vec::new();
        for v in self.generators() {
            let x = GradedExpr::var(&self.table, v);
            let d = self.brst_apply(&self.brst_apply(&x)?)?;
            if !d.is_zero() {
                generator_defects.push((self.table.name(v).to_string(), d.render(&self.table)));
            }
        }
        let mut rng = random::rng(seed);
        let mut sample_defects = Vec::new();
        for _ in 0..samples {
            let x = self.random_element(&mut rng, 4, 4);
            let d = self.brst_apply(&self.brst_apply(&x)?)?;
            if !d.is_zero() {
                sample_defects.push((x.render(&self.table), d.render(&self.table)));
            }
        }
        Ok(NilpotencyReport { generators: self.generators().len(), samples, generator_defects, sample_defects })
    }
}

/// Nonzero `Q²` values found; empty lists mean `Q² = 0` on everything tried.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NilpotencyReport {
    pub generators: usize,
    pub samples: usize,
    /// `(generator, Q² generator)`
    pub generator_defects: Vec<(String, String)>,
    /// `(x, Q² x)`
    pub sample_defects: Vec<(String, String)>,
}

impl NilpotencyReport {
    pub fn passed(&self) -> bool {
        self.generator_defects.is_empty() && self.sample_defects.is_empty()
    }
}
