//! Supermatrices over a Grassmann algebra.
//!
//! Rows and columns carry parities; entry `(a,b)` must have parity
//! `#a + #b`. The parity lists need not be sorted: the even/odd blocks are
//! recovered from index sets, so `(A Ψ; Θ B)` is a view, not a storage order.

use std::collections::HashMap;

use num_traits::{One, Zero};

use super::ratmat::{self, RatMat};
use super::{GrassmannNumber, Parity, Rational, SuperError};

/// Plain grid of Grassmann numbers (no parity bookkeeping).
pub type GMat = Vec<Vec<GrassmannNumber>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperMatrix {
    generators: u32,
    rows: Vec<Parity>,
    cols: Vec<Parity>,
    entries: GMat,
}

fn gzero(n: u32) -> GrassmannNumber {
    GrassmannNumber::zero(n)
}

pub(crate) fn gmat_mul(a: &GMat, b: &GMat, n: u32) -> GMat {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![gzero(n); cols]; rows];
    for i in 0..rows {
        for l in 0..inner {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..cols {
                if !b[l][j].is_zero() {
                    out[i][j] += &(&a[i][l] * &b[l][j]);
                }
            }
        }
    }
    out
}

pub(crate) fn gmat_sub(a: &GMat, b: &GMat) -> GMat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub(crate) fn gmat_add(a: &GMat, b: &GMat) -> GMat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

fn gmat_neg(a: &GMat) -> GMat {
    a.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

fn gmat_identity(k: usize, n: u32) -> GMat {
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { GrassmannNumber::one(n) } else { gzero(n) }).collect())
        .collect()
}

fn gmat_is_zero(a: &GMat) -> bool {
    a.iter().all(|r| r.iter().all(|x| x.is_zero()))
}

fn body_of(a: &GMat) -> RatMat {
    a.iter().map(|r| r.iter().map(|x| x.body()).collect()).collect()
}

/// Determinant of a square matrix with mutually commuting (even) entries,
/// by Laplace expansion memoised over column subsets.
pub fn det_commuting(a: &GMat, generators: u32) -> GrassmannNumber {
    let n = a.len();
    if n == 0 {
        return GrassmannNumber::one(generators);
    }
    fn rec(a: &GMat, used: u64, memo: &mut HashMap<u64, GrassmannNumber>, g: u32) -> GrassmannNumber {
        let n = a.len();
        let row = used.count_ones() as usize;
        if row == n {
            return GrassmannNumber::one(g);
        }
        if let Some(v) = memo.get(&used) {
            return v.clone();
        }
        let mut acc = GrassmannNumber::zero(g);
        let mut position = 0usize;
        for j in 0..n {
            if used & (1 << j) != 0 {
                continue;
            }
            if !a[row][j].is_zero() {
                let minor = rec(a, used | (1 << j), memo, g);
                let t = &a[row][j] * &minor;
                if position % 2 == 0 {
                    acc += &t;
                } else {
                    acc -= &t;
                }
            }
            position += 1;
        }
        memo.insert(used, acc.clone());
        acc
    }
    let mut memo = HashMap::new();
    rec(a, 0, &mut memo, generators)
}

/// Inverse of a matrix with even entries: body inverse plus the terminating
/// series `Σ_p (−A₀⁻¹ A_soul)^p A₀⁻¹`.
pub(crate) fn inverse_commuting(a: &GMat, generators: u32) -> Result<GMat, SuperError> {
    let n = a.len();
    let body = body_of(a);
    let inv0 = ratmat::inverse(&body).ok_or(SuperError::SingularBody)?;
    let inv0_g: GMat =
        inv0.iter().map(|r| r.iter().map(|x| GrassmannNumber::scalar(generators, x.clone())).collect()).collect();
    let soul: GMat = a.iter().map(|r| r.iter().map(|x| x.soul()).collect()).collect();
    if gmat_is_zero(&soul) {
        return Ok(inv0_g);
    }
    let step = gmat_neg(&gmat_mul(&inv0_g, &soul, generators));
    let mut term = inv0_g.clone();
    let mut acc = inv0_g;
    for _ in 0..=(n * n + 64) {
        term = gmat_mul(&step, &term, generators);
        if gmat_is_zero(&term) {
            break;
        }
        acc = gmat_add(&acc, &term);
    }
    Ok(acc)
}

/// `a − x y⁻¹ z`; the correction vanishes when the inner dimension is empty.
fn schur(a: &GMat, x: &GMat, yinv: &GMat, z: &GMat, g: u32) -> GMat {
    if yinv.is_empty() {
        return a.clone();
    }
    gmat_sub(a, &gmat_mul(&gmat_mul(x, yinv, g), z, g))
}

fn sub_gmat(a: &GMat, rows: &[usize], cols: &[usize]) -> GMat {
    rows.iter().map(|&i| cols.iter().map(|&j| a[i][j].clone()).collect()).collect()
}

impl SuperMatrix {
    pub fn new(generators: u32, rows: Vec<Parity>, cols: Vec<Parity>, entries: GMat) -> Result<Self, SuperError> {
        if entries.len() != rows.len() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(SuperError::DimensionMismatch(format!(
                "expected {}x{} entries",
                rows.len(),
                cols.len()
            )));
        }
        let mut entries = entries;
        for (a, row) in entries.iter_mut().enumerate() {
            for (b, x) in row.iter_mut().enumerate() {
                if x.generator_count() > generators {
                    return Err(SuperError::GeneratorMismatch { left: generators, right: x.generator_count() });
                }
                if x.is_mixed() {
                    return Err(SuperError::MixedParity);
                }
                if !x.fits_parity(rows[a].plus(cols[b])) {
                    return Err(SuperError::ParityViolation { row: a, col: b });
                }
                *x = x.widened(generators);
            }
        }
        Ok(SuperMatrix { generators, rows, cols, entries })
    }

    /// Purely bosonic matrix (all indices even) from rationals.
    pub fn from_rationals(generators: u32, entries: &[Vec<Rational>]) -> Self {
        let n = entries.len();
        let m = entries.first().map_or(0, |r| r.len());
        let e = entries.iter().map(|r| r.iter().map(|x| GrassmannNumber::scalar(generators, x.clone())).collect()).collect();
        SuperMatrix { generators, rows: vec![Parity::Even; n], cols: vec![Parity::Even; m], entries: e }
    }

    pub(crate) fn from_parts_unchecked(generators: u32, rows: Vec<Parity>, cols: Vec<Parity>, entries: GMat) -> Self {
        SuperMatrix { generators, rows, cols, entries }
    }

    pub fn zero(generators: u32, rows: Vec<Parity>, cols: Vec<Parity>) -> Self {
        let entries = vec![vec![gzero(generators); cols.len()]; rows.len()];
        SuperMatrix { generators, rows, cols, entries }
    }

    pub fn identity(generators: u32, parities: Vec<Parity>) -> Self {
        let k = parities.len();
        SuperMatrix { generators, rows: parities.clone(), cols: parities, entries: gmat_identity(k, generators) }
    }

    pub fn generators(&self) -> u32 {
        self.generators
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_parities(&self) -> &[Parity] {
        &self.rows
    }

    pub fn col_parities(&self) -> &[Parity] {
        &self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &GrassmannNumber {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &GMat {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        gmat_is_zero(&self.entries)
    }

    /// Every entry has vanishing body.
    pub fn is_pure_soul(&self) -> bool {
        self.entries.iter().all(|r| r.iter().all(|x| x.has_zero_body()))
    }

    pub fn body(&self) -> RatMat {
        body_of(&self.entries)
    }

    fn indices(ps: &[Parity], p: Parity) -> Vec<usize> {
        ps.iter().enumerate().filter(|(_, q)| **q == p).map(|(i, _)| i).collect()
    }

    pub fn even_rows(&self) -> Vec<usize> {
        Self::indices(&self.rows, Parity::Even)
    }

    pub fn odd_rows(&self) -> Vec<usize> {
        Self::indices(&self.rows, Parity::Odd)
    }

    pub fn even_cols(&self) -> Vec<usize> {
        Self::indices(&self.cols, Parity::Even)
    }

    pub fn odd_cols(&self) -> Vec<usize> {
        Self::indices(&self.cols, Parity::Odd)
    }

    /// Sub-supermatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SuperMatrix {
        SuperMatrix {
            generators: self.generators,
            rows: rows.iter().map(|&i| self.rows[i]).collect(),
            cols: cols.iter().map(|&j| self.cols[j]).collect(),
            entries: sub_gmat(&self.entries, rows, cols),
        }
    }

    pub fn mul(&self, other: &SuperMatrix) -> Result<SuperMatrix, SuperError> {
        if self.cols != other.rows {
            return Err(SuperError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{} (or column/row parities differ)",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let g = self.generators.max(other.generators);
        Ok(SuperMatrix {
            generators: g,
            rows: self.rows.clone(),
            cols: other.cols.clone(),
            entries: gmat_mul(&self.entries, &other.entries, g),
        })
    }

    pub fn add(&self, other: &SuperMatrix) -> Result<SuperMatrix, SuperError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(SuperError::DimensionMismatch("addition of differently shaped supermatrices".into()));
        }
        Ok(SuperMatrix {
            generators: self.generators.max(other.generators),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries: gmat_add(&self.entries, &other.entries),
        })
    }

    pub fn sub(&self, other: &SuperMatrix) -> Result<SuperMatrix, SuperError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(SuperError::DimensionMismatch("subtraction of differently shaped supermatrices".into()));
        }
        Ok(SuperMatrix {
            generators: self.generators.max(other.generators),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries: gmat_sub(&self.entries, &other.entries),
        })
    }

    /// `(Mᵀ)_{ab} = (−1)^{#a(#a+#b)} M_{ba}`.
    pub fn transpose(&self) -> SuperMatrix {
        let rows = self.cols.clone();
        let cols = self.rows.clone();
        let entries = (0..rows.len())
            .map(|a| {
                (0..cols.len())
                    .map(|b| {
                        let x = &self.entries[b][a];
                        let flip = rows[a].is_odd() && rows[a].plus(cols[b]).is_odd();
                        if flip {
                            -x
                        } else {
                            x.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        SuperMatrix { generators: self.generators, rows, cols, entries }
    }

    /// `(M*)_{ab} = (−1)^{#b(#a+#b)} (M_{ab})*`.
    pub fn conjugate(&self) -> SuperMatrix {
        let entries = (0..self.nrows())
            .map(|a| {
                (0..self.ncols())
                    .map(|b| {
                        let x = self.entries[a][b].conj();
                        let flip = self.cols[b].is_odd() && self.rows[a].plus(self.cols[b]).is_odd();
                        if flip {
                            -x
                        } else {
                            x
                        }
                    })
                    .collect()
            })
            .collect();
        SuperMatrix { generators: self.generators, rows: self.rows.clone(), cols: self.cols.clone(), entries }
    }

    /// `M† = (M*)ᵀ`.
    pub fn dagger(&self) -> SuperMatrix {
        self.conjugate().transpose()
    }

    fn require_graded_square(&self) -> Result<(), SuperError> {
        if self.rows != self.cols {
            return Err(SuperError::NotSquare);
        }
        Ok(())
    }

    /// `str M = tr A − tr B`.
    pub fn supertrace(&self) -> Result<GrassmannNumber, SuperError> {
        self.require_graded_square()?;
        let mut acc = GrassmannNumber::zero(self.generators);
        for (i, p) in self.rows.iter().enumerate() {
            match p {
                Parity::Even => acc += &self.entries[i][i],
                Parity::Odd => acc -= &self.entries[i][i],
            }
        }
        Ok(acc)
    }

    fn blocks(&self) -> (GMat, GMat, GMat, GMat) {
        let (er, or, ec, oc) = (self.even_rows(), self.odd_rows(), self.even_cols(), self.odd_cols());
        (
            sub_gmat(&self.entries, &er, &ec),
            sub_gmat(&self.entries, &er, &oc),
            sub_gmat(&self.entries, &or, &ec),
            sub_gmat(&self.entries, &or, &oc),
        )
    }

    fn check_blocks_invertible(&self, a: &GMat, b: &GMat) -> Result<(), SuperError> {
        let da = ratmat::inverse(&body_of(a)).is_some();
        let db = ratmat::inverse(&body_of(b)).is_some();
        if da && db {
            Ok(())
        } else {
            Err(SuperError::SingularBlock)
        }
    }

    /// `sdet M = det(A − ΨB⁻¹Θ) / det B`.
    pub fn superdeterminant(&self) -> Result<GrassmannNumber, SuperError> {
        self.require_graded_square()?;
        let g = self.generators;
        let (a, psi, theta, b) = self.blocks();
        self.check_blocks_invertible(&a, &b)?;
        let binv = inverse_commuting(&b, g)?;
        let schur = schur(&a, &psi, &binv, &theta, g);
        let num = det_commuting(&schur, g);
        let den = det_commuting(&b, g);
        Ok(&num * &den.inverse()?)
    }

    /// `sdet M = det A / det(B − ΘA⁻¹Ψ)`.
    pub fn superdeterminant_alt(&self) -> Result<GrassmannNumber, SuperError> {
        self.require_graded_square()?;
        let g = self.generators;
        let (a, psi, theta, b) = self.blocks();
        self.check_blocks_invertible(&a, &b)?;
        let ainv = inverse_commuting(&a, g)?;
        let schur = schur(&b, &theta, &ainv, &psi, g);
        let num = det_commuting(&a, g);
        let den = det_commuting(&schur, g);
        Ok(&num * &den.inverse()?)
    }

    /// Whether both diagonal blocks have invertible bodies (and are square).
    pub fn is_invertible(&self) -> bool {
        let (er, or, ec, oc) = (self.even_rows(), self.odd_rows(), self.even_cols(), self.odd_cols());
        if er.len() != ec.len() || or.len() != oc.len() {
            return false;
        }
        let (a, _, _, b) = self.blocks();
        ratmat::inverse(&body_of(&a)).is_some() && ratmat::inverse(&body_of(&b)).is_some()
    }

    /// Block-formula inverse with Schur complements; verified before returning.
    pub fn inverse(&self) -> Result<SuperMatrix, SuperError> {
        let g = self.generators;
        let (er, or, ec, oc) = (self.even_rows(), self.odd_rows(), self.even_cols(), self.odd_cols());
        if er.len() != ec.len() || or.len() != oc.len() {
            return Err(SuperError::NotSquare);
        }
        let (a, psi, theta, b) = self.blocks();
        if ratmat::inverse(&body_of(&a)).is_none() || ratmat::inverse(&body_of(&b)).is_none() {
            return Err(SuperError::SingularBody);
        }
        let ainv = inverse_commuting(&a, g)?;
        let binv = inverse_commuting(&b, g)?;
        let sa = schur(&a, &psi, &binv, &theta, g);
        let sb = schur(&b, &theta, &ainv, &psi, g);
        let sainv = inverse_commuting(&sa, g)?;
        let sbinv = inverse_commuting(&sb, g)?;
        let top_right = gmat_neg(&gmat_mul(&gmat_mul(&ainv, &psi, g), &sbinv, g));
        let bottom_left = gmat_neg(&gmat_mul(&gmat_mul(&binv, &theta, g), &sainv, g));
        // Inverse rows are indexed by our columns and vice versa.
        let mut out = vec![vec![gzero(g); self.nrows()]; self.ncols()];
        for (x, &i) in ec.iter().enumerate() {
            for (y, &j) in er.iter().enumerate() {
                out[i][j] = sainv[x][y].clone();
            }
            for (y, &j) in or.iter().enumerate() {
                out[i][j] = top_right[x][y].clone();
            }
        }
        for (x, &i) in oc.iter().enumerate() {
            for (y, &j) in er.iter().enumerate() {
                out[i][j] = bottom_left[x][y].clone();
            }
            for (y, &j) in or.iter().enumerate() {
                out[i][j] = sbinv[x][y].clone();
            }
        }
        let inv = SuperMatrix { generators: g, rows: self.cols.clone(), cols: self.rows.clone(), entries: out };
        debug_assert!(self.mul(&inv).map(|p| p.is_identity()).unwrap_or(false));
        Ok(inv)
    }

    pub fn is_identity(&self) -> bool {
        if self.nrows() != self.ncols() {
            return false;
        }
        self.entries.iter().enumerate().all(|(i, r)| {
            r.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
        })
    }

    /// Row `i` ← Σ_j perm picks: output row `k` is input row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> SuperMatrix {
        SuperMatrix {
            generators: self.generators,
            rows: order.iter().map(|&i| self.rows[i]).collect(),
            cols: self.cols.clone(),
            entries: order.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Output column `k` is input column `order[k]`.
    pub fn permute_cols(&self, order: &[usize]) -> SuperMatrix {
        SuperMatrix {
            generators: self.generators,
            rows: self.rows.clone(),
            cols: order.iter().map(|&j| self.cols[j]).collect(),
            entries: self.entries.iter().map(|r| order.iter().map(|&j| r[j].clone()).collect()).collect(),
        }
    }

    /// Permutation matrix `Π` with `(Π M)` = rows of `M` reordered by `order`.
    pub fn row_permutation(generators: u32, parities: &[Parity], order: &[usize]) -> SuperMatrix {
        let n = parities.len();
        let mut e = vec![vec![gzero(generators); n]; n];
        for (k, &i) in order.iter().enumerate() {
            e[k][i] = GrassmannNumber::one(generators);
        }
        SuperMatrix {
            generators,
            rows: order.iter().map(|&i| parities[i]).collect(),
            cols: parities.to_vec(),
            entries: e,
        }
    }

    pub fn render(&self) -> String {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.render()).collect::<Vec<_>>().join(", ")))
            .collect();
        format!("[{}]", rows.join(", "))
    }

    /// Scalar multiple of the identity check helper: all entries rational.
    pub fn is_scalar_valued(&self) -> bool {
        self.entries.iter().all(|r| r.iter().all(|x| x.is_scalar()))
    }

    pub fn scale(&self, k: &Rational) -> SuperMatrix {
        let mut m = self.clone();
        for r in m.entries.iter_mut() {
            for x in r.iter_mut() {
                *x = x.scale(k);
            }
        }
        m
    }

    pub fn neg(&self) -> SuperMatrix {
        self.scale(&-Rational::one())
    }

    pub fn is_zero_entry(&self, i: usize, j: usize) -> bool {
        self.entries[i][j].is_zero()
    }

    /// Body determinant of a purely bosonic square matrix (helper for tests/diagnostics).
    pub fn body_rank(&self) -> usize {
        ratmat::rank(&self.body())
    }

    pub fn entry_body_is_zero(&self, i: usize, j: usize) -> bool {
        self.entries[i][j].body().is_zero()
    }
}
