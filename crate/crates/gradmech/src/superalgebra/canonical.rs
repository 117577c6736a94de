//! Canonical forms of supermatrices under two-sided and congruence transformations.
//!
//! All constructions are exact pivoted eliminations. A pivot must have a
//! nonzero body; the search takes the first column holding such an entry,
//! then the lowest row within it. What survives elimination is pure soul.

use num_traits::Zero;

use super::supermatrix::{gmat_mul, GMat};
use super::{GrassmannNumber, Parity, Rational, SuperError, SuperMatrix};

/// `+` for `Aᵀ = A`, `−` for `Aᵀ = −A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

/// Block partition of a canonical form and the promises made about each block.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BlockLayout {
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    /// Blocks that must be identically zero.
    pub zero_blocks: Vec<(usize, usize)>,
    /// Blocks whose entries must have vanishing body.
    pub soul_blocks: Vec<(usize, usize)>,
    /// Diagonal blocks that must be exactly the identity.
    pub identity_blocks: Vec<usize>,
    /// Diagonal blocks that must be body-invertible.
    pub invertible_blocks: Vec<usize>,
    /// Diagonal blocks that must be diagonal matrices.
    pub diagonal_blocks: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CanonicalFormResult {
    pub left: SuperMatrix,
    pub right: SuperMatrix,
    pub canonical: SuperMatrix,
    pub rank_data: Vec<(&'static str, usize)>,
    pub layout: BlockLayout,
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = vec![0];
    for s in sizes {
        o.push(o.last().unwrap() + s);
    }
    o
}

impl CanonicalFormResult {
    pub fn rank(&self, name: &str) -> Option<usize> {
        self.rank_data.iter().find(|(n, _)| *n == name).map(|(_, k)| *k)
    }

    /// Sub-block `(i, j)` of the canonical matrix.
    pub fn block(&self, i: usize, j: usize) -> SuperMatrix {
        let ro = offsets(&self.layout.row_sizes);
        let co = offsets(&self.layout.col_sizes);
        let rows: Vec<usize> = (ro[i]..ro[i + 1]).collect();
        let cols: Vec<usize> = (co[j]..co[j + 1]).collect();
        self.canonical.submatrix(&rows, &cols)
    }

    /// Re-checks every promise: reconstruction, invertible factors, block shapes.
    pub fn verify(&self, input: &SuperMatrix) -> Result<(), String> {
        let prod = self
            .left
            .mul(input)
            .and_then(|x| x.mul(&self.right))
            .map_err(|e| format!("reconstruction product failed: {e}"))?;
        if prod.entries() != self.canonical.entries() {
            return Err("left·input·right differs from canonical".into());
        }
        if !self.left.is_invertible() {
            return Err("left factor is not invertible".into());
        }
        if !self.right.is_invertible() {
            return Err("right factor is not invertible".into());
        }
        let l = &self.layout;
        if l.row_sizes.iter().sum::<usize>() != self.canonical.nrows()
            || l.col_sizes.iter().sum::<usize>() != self.canonical.ncols()
        {
            return Err("layout does not cover the canonical matrix".into());
        }
        for &(i, j) in &l.zero_blocks {
            if !self.block(i, j).is_zero() {
                return Err(format!("block ({i},{j}) should vanish"));
            }
        }
        for &(i, j) in &l.soul_blocks {
            if !self.block(i, j).is_pure_soul() {
                return Err(format!("block ({i},{j}) should be pure soul"));
            }
        }
        for &i in &l.identity_blocks {
            if !self.block(i, i).is_identity() {
                return Err(format!("block ({i},{i}) should be the identity"));
            }
        }
        for &i in &l.invertible_blocks {
            let b = self.block(i, i);
            if b.nrows() > 0 && !b.is_invertible() {
                return Err(format!("block ({i},{i}) should be body-invertible"));
            }
        }
        for &i in &l.diagonal_blocks {
            let b = self.block(i, i);
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    if r != c && !b.entry(r, c).is_zero() {
                        return Err(format!("block ({i},{i}) should be diagonal"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn zero_blocks_except(nblocks: usize, keep: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..nblocks {
        for j in 0..nblocks {
            if !keep.contains(&(i, j)) {
                out.push((i, j));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Two-sided elimination (independent row and column operations).

struct TwoSided {
    g: u32,
    w: GMat,
    left: GMat,
    right: GMat,
}

impl TwoSided {
    fn new(m: &SuperMatrix) -> Self {
        let g = m.generators();
        TwoSided {
            g,
            w: m.entries().clone(),
            left: SuperMatrix::identity(g, m.row_parities().to_vec()).entries().clone(),
            right: SuperMatrix::identity(g, m.col_parities().to_vec()).entries().clone(),
        }
    }

    /// row_i += f · row_r
    fn row_add(&mut self, i: usize, r: usize, f: &GrassmannNumber) {
        let src = self.w[r].clone();
        for (t, s) in self.w[i].iter_mut().zip(&src) {
            if !s.is_zero() {
                *t += &(f * s);
            }
        }
        let src = self.left[r].clone();
        for (t, s) in self.left[i].iter_mut().zip(&src) {
            if !s.is_zero() {
                *t += &(f * s);
            }
        }
    }

    /// col_j += col_c · f
    fn col_add(&mut self, j: usize, c: usize, f: &GrassmannNumber) {
        for row in self.w.iter_mut() {
            if !row[c].is_zero() {
                let add = &row[c] * f;
                row[j] += &add;
            }
        }
        for row in self.right.iter_mut() {
            if !row[c].is_zero() {
                let add = &row[c] * f;
                row[j] += &add;
            }
        }
    }

    /// row_r ← f · row_r
    fn row_scale(&mut self, r: usize, f: &GrassmannNumber) {
        for x in self.w[r].iter_mut() {
            *x = f * &*x;
        }
        for x in self.left[r].iter_mut() {
            *x = f * &*x;
        }
    }

    fn eliminate(&mut self, r: usize, c: usize, scale: bool) -> Result<(), SuperError> {
        let pinv = self.w[r][c].inverse()?;
        for i in 0..self.w.len() {
            if i != r && !self.w[i][c].is_zero() {
                let f = -(&self.w[i][c] * &pinv);
                self.row_add(i, r, &f);
            }
        }
        let ncols = self.w[r].len();
        for j in 0..ncols {
            if j != c && !self.w[r][j].is_zero() {
                let f = -(&pinv * &self.w[r][j]);
                self.col_add(j, c, &f);
            }
        }
        if scale {
            self.row_scale(r, &pinv);
        }
        Ok(())
    }

    fn find_pivot(
        &self,
        rows: &[usize],
        cols: &[usize],
        used_r: &[bool],
        used_c: &[bool],
    ) -> Option<(usize, usize)> {
        for &c in cols {
            if used_c[c] {
                continue;
            }
            for &r in rows {
                if !used_r[r] && !self.w[r][c].has_zero_body() {
                    return Some((r, c));
                }
            }
        }
        None
    }
}

fn by_parity(ps: &[Parity], p: Parity) -> Vec<usize> {
    ps.iter().enumerate().filter(|(_, q)| **q == p).map(|(i, _)| i).collect()
}

fn rest(all: &[usize], taken: &[usize]) -> Vec<usize> {
    all.iter().copied().filter(|i| !taken.contains(i)).collect()
}

/// Bosonic two-sided form `P′ M P = (Λ 0; 0 s)` with `Λ` diagonal and body-invertible.
pub fn canonical_form_bosonic(m: &SuperMatrix) -> Result<CanonicalFormResult, SuperError> {
    if m.row_parities().iter().chain(m.col_parities()).any(|p| p.is_odd()) {
        return Err(SuperError::Precondition("bosonic canonical form needs all-even indices".into()));
    }
    let mut e = TwoSided::new(m);
    let rows: Vec<usize> = (0..m.nrows()).collect();
    let cols: Vec<usize> = (0..m.ncols()).collect();
    let mut used_r = vec![false; m.nrows()];
    let mut used_c = vec![false; m.ncols()];
    let mut piv_r = Vec::new();
    let mut piv_c = Vec::new();
    while let Some((r, c)) = e.find_pivot(&rows, &cols, &used_r, &used_c) {
        e.eliminate(r, c, false)?;
        used_r[r] = true;
        used_c[c] = true;
        piv_r.push(r);
        piv_c.push(c);
    }
    let k = piv_r.len();
    let mut rorder = piv_r.clone();
    rorder.extend(rest(&rows, &piv_r));
    let mut corder = piv_c.clone();
    corder.extend(rest(&cols, &piv_c));
    let (left, right, canonical) = assemble(m, &e, &rorder, &corder);
    Ok(CanonicalFormResult {
        left,
        right,
        canonical,
        rank_data: vec![("k", k)],
        layout: BlockLayout {
            row_sizes: vec![k, m.nrows() - k],
            col_sizes: vec![k, m.ncols() - k],
            zero_blocks: vec![(0, 1), (1, 0)],
            soul_blocks: vec![(1, 1)],
            identity_blocks: vec![],
            invertible_blocks: vec![0],
            diagonal_blocks: vec![0],
        },
    })
}

fn assemble(m: &SuperMatrix, e: &TwoSided, rorder: &[usize], corder: &[usize]) -> (SuperMatrix, SuperMatrix, SuperMatrix) {
    let g = e.g;
    let w = SuperMatrix::from_parts_unchecked(g, m.row_parities().to_vec(), m.col_parities().to_vec(), e.w.clone());
    let left =
        SuperMatrix::from_parts_unchecked(g, m.row_parities().to_vec(), m.row_parities().to_vec(), e.left.clone());
    let right =
        SuperMatrix::from_parts_unchecked(g, m.col_parities().to_vec(), m.col_parities().to_vec(), e.right.clone());
    (left.permute_rows(rorder), right.permute_cols(corder), w.permute_rows(rorder).permute_cols(corder))
}

/// Generic supermatrix form
/// `P′ M P = (1 0 0 0; 0 s₁ 0 ψ; 0 0 1 0; 0 χ 0 s₂)` with rank data `k1`, `k2`.
pub fn canonical_form_generic(m: &SuperMatrix) -> Result<CanonicalFormResult, SuperError> {
    let mut e = TwoSided::new(m);
    let er = by_parity(m.row_parities(), Parity::Even);
    let or = by_parity(m.row_parities(), Parity::Odd);
    let ec = by_parity(m.col_parities(), Parity::Even);
    let oc = by_parity(m.col_parities(), Parity::Odd);
    let mut used_r = vec![false; m.nrows()];
    let mut used_c = vec![false; m.ncols()];
    let mut phase = |rows: &[usize], cols: &[usize], e: &mut TwoSided| -> Result<(Vec<usize>, Vec<usize>), SuperError> {
        let mut pr = Vec::new();
        let mut pc = Vec::new();
        while let Some((r, c)) = e.find_pivot(rows, cols, &used_r, &used_c) {
            e.eliminate(r, c, true)?;
            used_r[r] = true;
            used_c[c] = true;
            pr.push(r);
            pc.push(c);
        }
        Ok((pr, pc))
    };
    let (pr1, pc1) = phase(&er, &ec, &mut e)?;
    let (pr2, pc2) = phase(&or, &oc, &mut e)?;
    let (k1, k2) = (pr1.len(), pr2.len());
    let mut rorder = pr1.clone();
    rorder.extend(rest(&er, &pr1));
    rorder.extend(pr2.iter().copied());
    rorder.extend(rest(&or, &pr2));
    let mut corder = pc1.clone();
    corder.extend(rest(&ec, &pc1));
    corder.extend(pc2.iter().copied());
    corder.extend(rest(&oc, &pc2));
    let (left, right, canonical) = assemble(m, &e, &rorder, &corder);
    let keep = [(0, 0), (1, 1), (1, 3), (2, 2), (3, 1), (3, 3)];
    Ok(CanonicalFormResult {
        left,
        right,
        canonical,
        rank_data: vec![("k1", k1), ("k2", k2)],
        layout: BlockLayout {
            row_sizes: vec![k1, er.len() - k1, k2, or.len() - k2],
            col_sizes: vec![k1, ec.len() - k1, k2, oc.len() - k2],
            zero_blocks: zero_blocks_except(4, &keep),
            soul_blocks: vec![(1, 1), (1, 3), (3, 1), (3, 3)],
            identity_blocks: vec![0, 2],
            invertible_blocks: vec![],
            diagonal_blocks: vec![],
        },
    })
}

// ---------------------------------------------------------------------------
// Fact 1: graded Gram–Schmidt on the columns of a bosonic matrix.

#[derive(Clone, Debug)]
pub struct Orthogonalized {
    /// Column transformation `Q` (invertible).
    pub q: SuperMatrix,
    /// `M Q = (w_1 … w_k s_1 … s_{m−k})`.
    pub mq: SuperMatrix,
    pub k: usize,
}

fn dot_dagger(u: &[GrassmannNumber], v: &[GrassmannNumber], g: u32) -> GrassmannNumber {
    let mut acc = GrassmannNumber::zero(g);
    for (a, b) in u.iter().zip(v) {
        acc += &(&a.conj() * b);
    }
    acc
}

/// Orthogonalizes the columns with nontrivial body against each other using
/// the `w†w` scalar product; columns whose body lies in the span of earlier
/// ones end up pure soul.
pub fn orthogonalize_columns(m: &SuperMatrix) -> Result<Orthogonalized, SuperError> {
    if m.row_parities().iter().chain(m.col_parities()).any(|p| p.is_odd()) {
        return Err(SuperError::Precondition("orthogonalization needs a bosonic matrix".into()));
    }
    let g = m.generators();
    let (n, k) = (m.nrows(), m.ncols());
    let col = |j: usize| -> Vec<GrassmannNumber> { (0..n).map(|i| m.entry(i, j).clone()).collect() };
    let mut ws: Vec<(Vec<GrassmannNumber>, Vec<GrassmannNumber>, GrassmannNumber)> = Vec::new(); // (w, q, (w†w)^-1)
    let mut souls: Vec<(Vec<GrassmannNumber>, Vec<GrassmannNumber>)> = Vec::new();
    for j in 0..k {
        let v = col(j);
        let mut qv: Vec<GrassmannNumber> =
            (0..k).map(|i| if i == j { GrassmannNumber::one(g) } else { GrassmannNumber::zero(g) }).collect();
        if v.iter().all(|x| x.has_zero_body()) {
            souls.push((v, qv));
            continue;
        }
        let mut w = v.clone();
        for (wi, qi, ninv) in &ws {
            let c = ninv * &dot_dagger(wi, &v, g);
            for (t, s) in w.iter_mut().zip(wi) {
                *t -= &(s * &c);
            }
            for (t, s) in qv.iter_mut().zip(qi) {
                *t -= &(s * &c);
            }
        }
        if w.iter().all(|x| x.has_zero_body()) {
            souls.push((w, qv));
        } else {
            let ninv = dot_dagger(&w, &w, g).inverse()?;
            ws.push((w, qv, ninv));
        }
    }
    let kk = ws.len();
    let mut cols_w: Vec<Vec<GrassmannNumber>> = ws.iter().map(|x| x.0.clone()).collect();
    let mut cols_q: Vec<Vec<GrassmannNumber>> = ws.iter().map(|x| x.1.clone()).collect();
    cols_w.extend(souls.iter().map(|x| x.0.clone()));
    cols_q.extend(souls.iter().map(|x| x.1.clone()));
    let to_mat = |cols: &[Vec<GrassmannNumber>], rows: usize| -> GMat {
        (0..rows).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
    };
    let q = SuperMatrix::from_parts_unchecked(g, vec![Parity::Even; k], vec![Parity::Even; k], to_mat(&cols_q, k));
    let mq = SuperMatrix::from_parts_unchecked(g, vec![Parity::Even; n], vec![Parity::Even; k], to_mat(&cols_w, n));
    Ok(Orthogonalized { q, mq, k: kk })
}

// ---------------------------------------------------------------------------
// Fact 5: removal of the soul of an invertible (anti)symmetric bosonic matrix.

/// Coefficients `a_1 … a_n` of the desouling series, from the recurrence
/// `a_{n+1} = −a_n − ½ Σ_{j=1}^{n} a_j (a_{n+1−j} + a_{n−j})`, `a_0 = 0`, `a_1 = −½`.
pub fn desoul_coefficients(n: usize) -> Vec<Rational> {
    let half = Rational::new(1.into(), 2.into());
    let mut a = vec![Rational::zero(), -half.clone()];
    while a.len() <= n {
        let k = a.len() - 1;
        let mut s = Rational::zero();
        for j in 1..=k {
            s += &a[j] * (&a[k + 1 - j] + &a[k - j]);
        }
        let next = -&a[k] - &half * s;
        a.push(next);
    }
    a.truncate(n + 1);
    a.remove(0);
    a
}

fn check_bosonic_square(a: &SuperMatrix) -> Result<(), SuperError> {
    if a.nrows() != a.ncols() || a.row_parities().iter().chain(a.col_parities()).any(|p| p.is_odd()) {
        return Err(SuperError::Precondition("expected a square bosonic matrix".into()));
    }
    Ok(())
}

fn detect_symmetry(a: &SuperMatrix) -> Result<Symmetry, SuperError> {
    let t = a.transpose();
    if t.entries() == a.entries() {
        return Ok(Symmetry::Symmetric);
    }
    if t.entries() == a.neg().entries() {
        return Ok(Symmetry::Antisymmetric);
    }
    Err(SuperError::SymmetryViolation("matrix is neither symmetric nor antisymmetric".into()))
}

/// Series `P = 1 + Σ a_n X^n`, `X = A_soul A₀⁻¹`; `P A Pᵀ = A₀`.
fn desoul_gmat(a: &GMat, g: u32) -> Result<GMat, SuperError> {
    let n = a.len();
    let body: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|x| x.body()).collect()).collect();
    let inv0 = super::ratmat::inverse(&body).ok_or(SuperError::SingularBody)?;
    let inv0g: GMat = inv0.iter().map(|r| r.iter().map(|x| GrassmannNumber::scalar(g, x.clone())).collect()).collect();
    let soul: GMat = a.iter().map(|r| r.iter().map(|x| x.soul()).collect()).collect();
    let x = gmat_mul(&soul, &inv0g, g);
    let mut p: GMat = SuperMatrix::identity(g, vec![Parity::Even; n]).entries().clone();
    let mut power = p.clone();
    // X is nilpotent with index at most g/2 + 1 (each factor carries ≥ 2 generators).
    let coeffs = desoul_coefficients(g as usize / 2 + 2);
    for c in coeffs {
        power = gmat_mul(&power, &x, g);
        if power.iter().all(|r| r.iter().all(|v| v.is_zero())) {
            break;
        }
        for (pr, wr) in p.iter_mut().zip(&power) {
            for (t, s) in pr.iter_mut().zip(wr) {
                *t += &s.scale(&c);
            }
        }
    }
    Ok(p)
}

/// `P A Pᵀ = A₀` for a body-invertible (anti)symmetric bosonic matrix.
pub fn desoul(a: &SuperMatrix) -> Result<CanonicalFormResult, SuperError> {
    check_bosonic_square(a)?;
    detect_symmetry(a)?;
    let g = a.generators();
    let n = a.nrows();
    let p = desoul_gmat(a.entries(), g)?;
    let ps = vec![Parity::Even; n];
    let left = SuperMatrix::from_parts_unchecked(g, ps.clone(), ps.clone(), p);
    let right = left.transpose();
    let canonical = left.mul(a)?.mul(&right)?;
    Ok(CanonicalFormResult {
        left,
        right,
        canonical,
        rank_data: vec![("k", n)],
        layout: BlockLayout {
            row_sizes: vec![n],
            col_sizes: vec![n],
            invertible_blocks: vec![0],
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Congruence elimination Ω → L Ω Lᵀ.

struct Congruence {
    g: u32,
    par: Vec<Parity>,
    w: GMat,
    left: GMat,
}

impl Congruence {
    fn new(m: &SuperMatrix) -> Self {
        let g = m.generators();
        Congruence {
            g,
            par: m.row_parities().to_vec(),
            w: m.entries().clone(),
            left: SuperMatrix::identity(g, m.row_parities().to_vec()).entries().clone(),
        }
    }

    /// Ω ← E Ω Eᵀ with E = 1 + f e_i e_rᵀ.
    fn add(&mut self, i: usize, r: usize, f: &GrassmannNumber) {
        let src = self.w[r].clone();
        for (t, s) in self.w[i].iter_mut().zip(&src) {
            if !s.is_zero() {
                *t += &(f * s);
            }
        }
        let src = self.left[r].clone();
        for (t, s) in self.left[i].iter_mut().zip(&src) {
            if !s.is_zero() {
                *t += &(f * s);
            }
        }
        // (Eᵀ)_{r i} = (−1)^{#r(#r+#i)} f
        let flip = self.par[r].is_odd() && self.par[r].plus(self.par[i]).is_odd();
        let ft = if flip { -f } else { f.clone() };
        for row in self.w.iter_mut() {
            if !row[r].is_zero() {
                let add = &row[r] * &ft;
                row[i] += &add;
            }
        }
    }

    /// Zero out the pivot columns in every other row using the pivot block.
    fn eliminate_block(&mut self, piv: &[usize]) -> Result<(), SuperError> {
        let g = self.g;
        let bpar: Vec<Parity> = piv.iter().map(|&i| self.par[i]).collect();
        let block: GMat = piv.iter().map(|&i| piv.iter().map(|&j| self.w[i][j].clone()).collect()).collect();
        let binv = SuperMatrix::from_parts_unchecked(g, bpar.clone(), bpar, block).inverse()?;
        for k in 0..self.w.len() {
            if piv.contains(&k) {
                continue;
            }
            let rowv: GMat = vec![piv.iter().map(|&j| self.w[k][j].clone()).collect()];
            if rowv[0].iter().all(|x| x.is_zero()) {
                continue;
            }
            let f = gmat_mul(&rowv, binv.entries(), g);
            for (x, &pi) in piv.iter().enumerate() {
                let fx = -&f[0][x];
                if !fx.is_zero() {
                    self.add(k, pi, &fx);
                }
            }
        }
        Ok(())
    }

    fn desoul_block(&mut self, idx: &[usize]) -> Result<(), SuperError> {
        if idx.is_empty() {
            return Ok(());
        }
        let g = self.g;
        let sub: GMat = idx.iter().map(|&i| idx.iter().map(|&j| self.w[i][j].clone()).collect()).collect();
        let p = desoul_gmat(&sub, g)?;
        // The block is decoupled from the rest, so only it and the matching rows of L change.
        let pt: GMat = (0..idx.len()).map(|i| (0..idx.len()).map(|j| p[j][i].clone()).collect()).collect();
        let newsub = gmat_mul(&gmat_mul(&p, &sub, g), &pt, g);
        for (x, &i) in idx.iter().enumerate() {
            for (y, &j) in idx.iter().enumerate() {
                self.w[i][j] = newsub[x][y].clone();
            }
        }
        let lrows: GMat = idx.iter().map(|&i| self.left[i].clone()).collect();
        let newl = gmat_mul(&p, &lrows, g);
        for (x, &i) in idx.iter().enumerate() {
            self.left[i] = newl[x].clone();
        }
        Ok(())
    }

    fn finish(self, order: &[usize]) -> (SuperMatrix, SuperMatrix, SuperMatrix) {
        let g = self.g;
        let w = SuperMatrix::from_parts_unchecked(g, self.par.clone(), self.par.clone(), self.w);
        let l = SuperMatrix::from_parts_unchecked(g, self.par.clone(), self.par.clone(), self.left);
        let left = l.permute_rows(order);
        let canonical = w.permute_rows(order).permute_cols(order);
        let right = left.transpose();
        (left, right, canonical)
    }

    /// Antisymmetric pivot pairs among `idx`; returns pivots in discovery order.
    fn pair_pivots(&mut self, idx: &[usize]) -> Result<Vec<usize>, SuperError> {
        let mut used = vec![false; self.w.len()];
        let mut out = Vec::new();
        loop {
            let mut found = None;
            'scan: for &c in idx {
                if used[c] {
                    continue;
                }
                for &r in idx {
                    if r != c && !used[r] && !self.w[r][c].has_zero_body() {
                        found = Some((r.min(c), r.max(c)));
                        break 'scan;
                    }
                }
            }
            let Some((i, j)) = found else { break };
            self.eliminate_block(&[i, j])?;
            used[i] = true;
            used[j] = true;
            out.push(i);
            out.push(j);
        }
        Ok(out)
    }

    /// Symmetric diagonal pivots among `idx`, combining two indices when no
    /// diagonal entry has a body.
    fn diagonal_pivots(&mut self, idx: &[usize]) -> Result<Vec<usize>, SuperError> {
        let mut used = vec![false; self.w.len()];
        let mut out = Vec::new();
        let one = GrassmannNumber::one(self.g);
        loop {
            let mut pivot = idx.iter().copied().find(|&c| !used[c] && !self.w[c][c].has_zero_body());
            if pivot.is_none() {
                let mut pair = None;
                'scan: for &c in idx {
                    if used[c] {
                        continue;
                    }
                    for &r in idx {
                        if r != c && !used[r] && !self.w[r][c].has_zero_body() {
                            pair = Some((r, c));
                            break 'scan;
                        }
                    }
                }
                if let Some((r, c)) = pair {
                    // row_c += row_r makes the (c,c) body 2·body(Ω_rc) ≠ 0.
                    self.add(c, r, &one);
                    pivot = Some(c);
                }
            }
            let Some(p) = pivot else { break };
            self.eliminate_block(&[p])?;
            used[p] = true;
            out.push(p);
        }
        Ok(out)
    }
}

/// `P A Pᵀ = (b 0; 0 s)` for a bosonic `A = ±Aᵀ`; `b` is desouled and body-invertible.
pub fn canonical_form_antisym(a: &SuperMatrix) -> Result<CanonicalFormResult, SuperError> {
    check_bosonic_square(a)?;
    let sym = detect_symmetry(a)?;
    let n = a.nrows();
    let all: Vec<usize> = (0..n).collect();
    let mut c = Congruence::new(a);
    let piv = match sym {
        Symmetry::Antisymmetric => c.pair_pivots(&all)?,
        Symmetry::Symmetric => c.diagonal_pivots(&all)?,
    };
    c.desoul_block(&piv)?;
    let k = piv.len();
    let mut order = piv.clone();
    order.extend(rest(&all, &piv));
    let (left, right, canonical) = c.finish(&order);
    Ok(CanonicalFormResult {
        left,
        right,
        canonical,
        rank_data: vec![("k", k)],
        layout: BlockLayout {
            row_sizes: vec![k, n - k],
            col_sizes: vec![k, n - k],
            zero_blocks: vec![(0, 1), (1, 0)],
            soul_blocks: vec![(1, 1)],
            invertible_blocks: vec![0],
            ..Default::default()
        },
    })
}

/// Checks `Ω_ab = −(−1)^{#a#b} Ω_ba` on a square supermatrix.
pub(crate) fn check_graded_antisymmetry(m: &SuperMatrix) -> Result<(), SuperError> {
    if m.row_parities() != m.col_parities() {
        return Err(SuperError::NotSquare);
    }
    let p = m.row_parities();
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            let both_odd = p[a].is_odd() && p[b].is_odd();
            let expected = if both_odd { m.entry(b, a).clone() } else { -m.entry(b, a) };
            if m.entry(a, b) != &expected {
                return Err(SuperError::SymmetryViolation(format!("entries ({a},{b}) and ({b},{a})")));
            }
        }
    }
    Ok(())
}

/// Four-block congruence form `L Ω Lᵀ = (b₋ 0 0 0; 0 s₋ 0 ψ; 0 0 b₊ 0; 0 −ψᵀ 0 s₊)`
/// for `Ω_ab = −(−1)^{#a#b} Ω_ba`. The odd–odd block is stored without the
/// imaginary unit, so `b₊` is a real symmetric matrix here.
pub fn canonical_form_antihermitian(omega: &SuperMatrix) -> Result<CanonicalFormResult, SuperError> {
    check_graded_antisymmetry(omega)?;
    let even = by_parity(omega.row_parities(), Parity::Even);
    let odd = by_parity(omega.row_parities(), Parity::Odd);
    let mut c = Congruence::new(omega);
    let pm = c.pair_pivots(&even)?;
    let pp = c.diagonal_pivots(&odd)?;
    c.desoul_block(&pm)?;
    c.desoul_block(&pp)?;
    let (km, kp) = (pm.len(), pp.len());
    let mut order = pm.clone();
    order.extend(rest(&even, &pm));
    order.extend(pp.iter().copied());
    order.extend(rest(&odd, &pp));
    let (left, right, canonical) = c.finish(&order);
    let keep = [(0, 0), (1, 1), (1, 3), (2, 2), (3, 1), (3, 3)];
    Ok(CanonicalFormResult {
        left,
        right,
        canonical,
        rank_data: vec![("k_minus", km), ("k_plus", kp)],
        layout: BlockLayout {
            row_sizes: vec![km, even.len() - km, kp, odd.len() - kp],
            col_sizes: vec![km, even.len() - km, kp, odd.len() - kp],
            zero_blocks: zero_blocks_except(4, &keep),
            soul_blocks: vec![(1, 1), (1, 3), (3, 1), (3, 3)],
            invertible_blocks: vec![0, 2],
            ..Default::default()
        },
    })
}

