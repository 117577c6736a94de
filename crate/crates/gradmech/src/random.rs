//! Seeded random generators for property checks and sampling commands.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::superalgebra::{rat, GrassmannNumber, Parity, Rational, SuperMatrix, Symmetry};
use crate::symalg::{GradedExpr, VarId, VariableTable};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(rng: &mut TestRng) -> Rational {
    let num = rng.random_range(-5i64..=5);
    let den = *[1i64, 1, 1, 2, 3].get(rng.random_range(0..5)).unwrap();
    rat(num, den)
}

fn nonzero_rational(rng: &mut TestRng) -> Rational {
    loop {
        let q = small_rational(rng);
        if q != rat(0, 1) {
            return q;
        }
    }
}

/// Random element of definite parity with up to `max_terms` monomials.
/// `with_body` controls whether the empty monomial may appear (even only).
pub fn grassmann(rng: &mut TestRng, g: u32, parity: Parity, max_terms: usize, with_body: bool) -> GrassmannNumber {
    let mut x = GrassmannNumber::zero(g);
    if g == 0 {
        if parity == Parity::Even && with_body {
            return GrassmannNumber::scalar(0, small_rational(rng));
        }
        return x;
    }
    let n = rng.random_range(0..=max_terms);
    for _ in 0..n {
        let mask: u64 = rng.random_range(0..(1u64 << g));
        let deg = mask.count_ones() as usize;
        if Parity::from_count(deg) != parity || (deg == 0 && !with_body) {
            continue;
        }
        x += &GrassmannNumber::from_masks(g, [(mask, small_rational(rng))]);
    }
    x
}

pub fn soul(rng: &mut TestRng, g: u32, parity: Parity, max_terms: usize) -> GrassmannNumber {
    grassmann(rng, g, parity, max_terms, false)
}

pub fn parities(n_even: usize, n_odd: usize) -> Vec<Parity> {
    let mut v = vec![Parity::Even; n_even];
    v.extend(std::iter::repeat_n(Parity::Odd, n_odd));
    v
}

/// Interleaves a parity list pseudo-randomly (keeps counts).
pub fn shuffled_parities(rng: &mut TestRng, n_even: usize, n_odd: usize) -> Vec<Parity> {
    let mut v = parities(n_even, n_odd);
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

fn int_matrix(rng: &mut TestRng, n: usize, m: usize, lo: i64, hi: i64) -> Vec<Vec<Rational>> {
    (0..n).map(|_| (0..m).map(|_| rat(rng.random_range(lo..=hi), 1)).collect()).collect()
}

/// Rational body of the given rank (product of random integer factors).
pub fn body_of_rank(rng: &mut TestRng, n: usize, m: usize, rank: usize) -> Vec<Vec<Rational>> {
    let u = int_matrix(rng, n, rank, -3, 3);
    let v = int_matrix(rng, rank, m, -3, 3);
    crate::superalgebra::ratmat::mul(&u, &v)
}

fn invertible_body(rng: &mut TestRng, n: usize) -> Vec<Vec<Rational>> {
    loop {
        let b = int_matrix(rng, n, n, -3, 3);
        if crate::superalgebra::ratmat::rank(&b) == n {
            return b;
        }
    }
}

/// Random supermatrix; even blocks get the supplied bodies (if any) plus souls.
pub fn supermatrix_with_bodies(
    rng: &mut TestRng,
    g: u32,
    rows: &[Parity],
    cols: &[Parity],
    even_body: &[Vec<Rational>],
    odd_body: &[Vec<Rational>],
    soul_terms: usize,
) -> SuperMatrix {
    let mut ie = 0;
    let mut entries = Vec::new();
    let mut oe = 0;
    for r in rows {
        let mut row = Vec::new();
        let (mut je, mut jo) = (0, 0);
        for c in cols {
            let p = r.plus(*c);
            let mut x = soul(rng, g, p, soul_terms);
            match (r, c) {
                (Parity::Even, Parity::Even) => {
                    if let Some(b) = even_body.get(ie).and_then(|row| row.get(je)) {
                        x += &GrassmannNumber::scalar(g, b.clone());
                    }
                    je += 1;
                }
                (Parity::Odd, Parity::Odd) => {
                    if let Some(b) = odd_body.get(oe).and_then(|row| row.get(jo)) {
                        x += &GrassmannNumber::scalar(g, b.clone());
                    }
                    jo += 1;
                }
                (Parity::Even, Parity::Odd) => jo += 1,
                (Parity::Odd, Parity::Even) => je += 1,
            }
            row.push(x);
        }
        match r {
            Parity::Even => ie += 1,
            Parity::Odd => oe += 1,
        }
        entries.push(row);
    }
    SuperMatrix::new(g, rows.to_vec(), cols.to_vec(), entries).expect("parity-consistent by construction")
}

/// Random supermatrix with invertible diagonal blocks.
pub fn invertible_supermatrix(rng: &mut TestRng, g: u32, parities: &[Parity], soul_terms: usize) -> SuperMatrix {
    let ne = parities.iter().filter(|p| !p.is_odd()).count();
    let no = parities.len() - ne;
    let a = invertible_body(rng, ne);
    let b = invertible_body(rng, no);
    supermatrix_with_bodies(rng, g, parities, parities, &a, &b, soul_terms)
}

/// Random supermatrix whose even blocks have bodies of the requested ranks.
pub fn supermatrix_of_rank(
    rng: &mut TestRng,
    g: u32,
    rows: &[Parity],
    cols: &[Parity],
    rank_even: usize,
    rank_odd: usize,
    soul_terms: usize,
) -> SuperMatrix {
    let count = |ps: &[Parity], p: Parity| ps.iter().filter(|q| **q == p).count();
    let a = body_of_rank(rng, count(rows, Parity::Even), count(cols, Parity::Even), rank_even);
    let b = body_of_rank(rng, count(rows, Parity::Odd), count(cols, Parity::Odd), rank_odd);
    supermatrix_with_bodies(rng, g, rows, cols, &a, &b, soul_terms)
}

fn symmetrize(m: &[Vec<GrassmannNumber>], sym: Symmetry) -> Vec<Vec<GrassmannNumber>> {
    let n = m.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match sym {
                    Symmetry::Symmetric => &m[i][j] + &m[j][i],
                    Symmetry::Antisymmetric => &m[i][j] - &m[j][i],
                })
                .collect()
        })
        .collect()
}

/// Bosonic `A = ±Aᵀ` with body of the given rank (rank rounded to what the symmetry allows).
pub fn bosonic_symmetric(rng: &mut TestRng, g: u32, n: usize, sym: Symmetry, rank: usize, soul_terms: usize) -> SuperMatrix {
    let body = body_of_rank(rng, n, n, rank.div_ceil(2).min(n));
    let ps = vec![Parity::Even; n];
    let raw = supermatrix_with_bodies(rng, g, &ps, &ps, &body, &[], soul_terms);
    SuperMatrix::new(g, ps.clone(), ps, symmetrize(raw.entries(), sym)).unwrap()
}

/// Body-invertible bosonic `A = ±Aᵀ` (antisymmetric requires even `n`).
pub fn invertible_bosonic_symmetric(rng: &mut TestRng, g: u32, n: usize, sym: Symmetry, soul_terms: usize) -> SuperMatrix {
    loop {
        let a = bosonic_symmetric(rng, g, n, sym, 2 * n, soul_terms);
        if crate::superalgebra::ratmat::rank(&a.body()) == n {
            return a;
        }
    }
}

/// Random `Ω` with `Ω_ab = −(−1)^{#a#b} Ω_ba`.
pub fn graded_antisymmetric(rng: &mut TestRng, g: u32, parities: &[Parity], soul_terms: usize, body_density: f64) -> SuperMatrix {
    let n = parities.len();
    let mut e = vec![vec![GrassmannNumber::zero(g); n]; n];
    for a in 0..n {
        for b in a..n {
            let both_odd = parities[a].is_odd() && parities[b].is_odd();
            let p = parities[a].plus(parities[b]);
            let mut x = soul(rng, g, p, soul_terms);
            if p == Parity::Even && rng.random_bool(body_density) {
                x += &GrassmannNumber::scalar(g, nonzero_rational(rng));
            }
            if a == b {
                if both_odd {
                    e[a][a] = x;
                }
                continue;
            }
            e[b][a] = if both_odd { x.clone() } else { -&x };
            e[a][b] = x;
        }
    }
    SuperMatrix::new(g, parities.to_vec(), parities.to_vec(), e).unwrap()
}

/// Random polynomial in `vars` (degree ≤ `max_degree`). With `parity = Some(p)`
/// every term gets a Grassmann coefficient making it of parity `p`.
pub fn poly(
    rng: &mut TestRng,
    table: &VariableTable,
    vars: &[VarId],
    max_terms: usize,
    max_degree: u32,
    parity: Option<Parity>,
    soul_terms: usize,
) -> GradedExpr {
    let g = table.generators();
    let mut acc = GradedExpr::zero(g);
    let n = rng.random_range(1..=max_terms.max(1));
    for _ in 0..n {
        let d = rng.random_range(0..=max_degree);
        let mut m = GradedExpr::one(g);
        let mut odd = 0usize;
        for _ in 0..d {
            if vars.is_empty() {
                break;
            }
            let v = vars[rng.random_range(0..vars.len())];
            if table.parity(v).is_odd() {
                odd += 1;
            }
            m = &m * &GradedExpr::var(table, v);
        }
        if m.is_zero() {
            continue;
        }
        let c = match parity {
            None => GrassmannNumber::scalar(g, small_rational(rng)),
            Some(p) => {
                let cp = p.plus(Parity::from_count(odd));
                let mut c = grassmann(rng, g, cp, soul_terms, true);
                if cp == Parity::Even && rng.random_bool(0.7) {
                    c += &GrassmannNumber::scalar(g, small_rational(rng));
                }
                c
            }
        };
        acc = &acc + &m.left_mul_constant(&c);
    }
    acc
}
