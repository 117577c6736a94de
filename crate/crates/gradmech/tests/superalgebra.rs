use gradmech::random::{self, TestRng};
use gradmech::superalgebra::*;
use proptest::prelude::*;

fn z(i: usize) -> GrassmannNumber {
    GrassmannNumber::generator(4, i).unwrap()
}

fn n(v: i64) -> GrassmannNumber {
    GrassmannNumber::from_int(4, v)
}

fn q(a: i64, b: i64) -> GrassmannNumber {
    GrassmannNumber::scalar(4, rat(a, b))
}

fn bos(rows: Vec<Vec<GrassmannNumber>>) -> SuperMatrix {
    let k = rows.len();
    let m = rows[0].len();
    SuperMatrix::new(4, vec![Parity::Even; k], vec![Parity::Even; m], rows).unwrap()
}

#[test]
fn products_of_generators() {
    let z12 = &z(1) * &z(2);
    assert_eq!(z12, GrassmannNumber::monomial(4, &[1, 2], rat(1, 1)).unwrap());
    assert_eq!(&z(2) * &z(1), -&z12);
    assert_eq!(&(&n(1) + &z12) * &(&n(1) - &z12), n(1));
    assert!((&z(3) * &z(3)).is_zero());
    let other = GrassmannNumber::generator(2, 1).unwrap();
    assert!(matches!(z(1).checked_mul(&other), Err(SuperError::GeneratorMismatch { .. })));
}

#[test]
fn inverses() {
    let z12 = &z(1) * &z(2);
    assert_eq!((&n(1) + &z12).inverse().unwrap(), &n(1) - &z12);
    assert_eq!(z(1).inverse(), Err(SuperError::ZeroBody));
    assert_eq!(n(2).inverse().unwrap(), q(1, 2));
}

#[test]
fn body_soul_and_coefficients() {
    let z12 = &z(1) * &z(2);
    let x = &(&n(3) + &z(1).scale(&rat(2, 1))) + &z12.scale(&rat(5, 1));
    let (b, s) = x.body_soul_split();
    assert_eq!(b, n(3));
    assert_eq!(s, &z(1).scale(&rat(2, 1)) + &z12.scale(&rat(5, 1)));
    assert_eq!(GrassmannNumber::zero(4).body_soul_split(), (GrassmannNumber::zero(4), GrassmannNumber::zero(4)));
    assert_eq!(z12.body_soul_split(), (GrassmannNumber::zero(4), z12.clone()));

    let y = &n(3) + &z12.scale(&rat(5, 1));
    assert_eq!(y.coeff(&[1, 2]).unwrap(), rat(5, 1));
    assert_eq!(y.coeff(&[]).unwrap(), rat(3, 1));
    assert_eq!(z(2).coeff(&[1]).unwrap(), rat(0, 1));
    assert!(matches!(y.coeff(&[5]), Err(SuperError::IndexOutOfRange { .. })));
}

fn one_one(a: GrassmannNumber, psi: GrassmannNumber, theta: GrassmannNumber, b: GrassmannNumber) -> SuperMatrix {
    let p = vec![Parity::Even, Parity::Odd];
    SuperMatrix::new(4, p.clone(), p, vec![vec![a, psi], vec![theta, b]]).unwrap()
}

#[test]
fn transposes_of_block_diagonal() {
    let p = vec![Parity::Even, Parity::Even, Parity::Odd];
    let m = SuperMatrix::new(
        4,
        p.clone(),
        p,
        vec![vec![n(1), n(2), n(0)], vec![n(3), n(4), n(0)], vec![n(0), n(0), n(5)]],
    )
    .unwrap();
    let t = m.transpose();
    assert_eq!(t.entry(0, 1), &n(3));
    assert_eq!(t.entry(1, 0), &n(2));
    assert_eq!(t.entry(2, 2), &n(5));
}

#[test]
fn supertrace_and_superdeterminant_examples() {
    let m = one_one(n(3), n(0), n(0), n(5));
    assert_eq!(m.supertrace().unwrap(), n(-2));
    let m = one_one(n(2), n(0), n(0), n(4));
    assert_eq!(m.superdeterminant().unwrap(), q(1, 2));
    let m = one_one(n(2), z(1), z(2), n(1));
    // det(A − ΨB⁻¹Θ)/det B with Ψ = ζ¹, Θ = ζ², B = 1: 2 − ζ¹ζ².
    let expected = &n(2) - &(&z(1) * &z(2));
    assert_eq!(m.superdeterminant().unwrap(), expected);
    assert_eq!(m.superdeterminant_alt().unwrap(), expected);
    let inv = m.inverse().unwrap();
    assert!(m.mul(&inv).unwrap().is_identity());
    assert!(inv.mul(&m).unwrap().is_identity());

    let singular = one_one(n(0), z(1), z(2), n(1));
    assert_eq!(singular.superdeterminant(), Err(SuperError::SingularBlock));
    assert_eq!(singular.inverse(), Err(SuperError::SingularBody));
}

#[test]
fn inverse_examples() {
    let d = bos(vec![vec![n(2), n(0)], vec![n(0), n(4)]]);
    assert_eq!(d.inverse().unwrap(), bos(vec![vec![q(1, 2), n(0)], vec![n(0), q(1, 4)]]));
    let s = bos(vec![vec![n(0), &z(1) * &z(2)], vec![&z(3) * &z(4), n(0)]]);
    let id = SuperMatrix::identity(4, vec![Parity::Even; 2]);
    let m = id.add(&s).unwrap();
    let s2 = s.mul(&s).unwrap();
    let series = id.sub(&s).unwrap().add(&s2).unwrap().sub(&s2.mul(&s).unwrap()).unwrap();
    assert_eq!(m.inverse().unwrap(), series);
}

#[test]
fn generic_form_rank_one_bosonic() {
    let m = bos(vec![vec![n(2), n(4)], vec![n(1), n(2)]]);
    let r = canonical_form_generic(&m).unwrap();
    r.verify(&m).unwrap();
    // 2·2 − 4·1 = 0 while entries are nonzero: body rank one.
    assert_eq!(r.rank("k1"), Some(1));
    assert_eq!(r.canonical.entry(0, 0), &n(1));
    assert!(r.canonical.entry(1, 1).is_zero());

    let r = canonical_form_bosonic(&m).unwrap();
    r.verify(&m).unwrap();
    assert_eq!(r.rank("k"), Some(1));
    assert_eq!(r.canonical.entry(0, 0), &n(2));
}

#[test]
fn generic_form_identity_and_odd_pivot() {
    let p = vec![Parity::Even, Parity::Even, Parity::Odd];
    let id = SuperMatrix::identity(4, p);
    let r = canonical_form_generic(&id).unwrap();
    assert!(r.left.is_identity() && r.right.is_identity() && r.canonical.is_identity());

    let m = one_one(n(0), z(1), z(2), n(3));
    let r = canonical_form_generic(&m).unwrap();
    r.verify(&m).unwrap();
    assert_eq!(r.rank("k1"), Some(0));
    assert_eq!(r.rank("k2"), Some(1));
}

#[test]
fn desoul_examples() {
    let z12 = &z(1) * &z(2);
    let dress = &n(1) + &z12;
    let j = bos(vec![vec![n(0), n(1)], vec![n(-1), n(0)]]);
    let a = bos(vec![vec![n(0), dress.clone()], vec![-&dress, n(0)]]);
    let r = desoul(&a).unwrap();
    r.verify(&a).unwrap();
    let half = &n(1) - &z12.scale(&rat(1, 2));
    assert_eq!(r.left, bos(vec![vec![half.clone(), n(0)], vec![n(0), half]]));
    assert_eq!(r.canonical, j);

    let r = desoul(&j).unwrap();
    assert!(r.left.is_identity());

    let two = dress.scale(&rat(2, 1));
    let a = bos(vec![vec![two.clone(), n(0)], vec![n(0), two]]);
    let r = desoul(&a).unwrap();
    r.verify(&a).unwrap();
    assert_eq!(r.canonical, bos(vec![vec![n(2), n(0)], vec![n(0), n(2)]]));

    let singular = bos(vec![vec![z12.clone(), n(0)], vec![n(0), n(1)]]);
    assert_eq!(desoul(&singular).unwrap_err(), SuperError::SingularBody);
}

#[test]
fn desoul_series_is_inverse_square_root() {
    // (1+X)^{-1/2} = Σ binom(−1/2, n) Xⁿ
    let coeffs = desoul_coefficients(8);
    let mut binom = rat(1, 1);
    for (k, c) in coeffs.iter().enumerate() {
        let kk = k as i64;
        binom = binom * (rat(-1, 2) - rat(kk, 1)) / rat(kk + 1, 1);
        assert_eq!(c, &binom, "coefficient {}", k + 1);
    }
}

#[test]
fn antisym_examples() {
    let j = bos(vec![vec![n(0), n(1)], vec![n(-1), n(0)]]);
    let r = canonical_form_antisym(&j).unwrap();
    assert!(r.left.is_identity());
    assert_eq!(r.canonical, j);
    assert_eq!(r.rank("k"), Some(2));

    let zero = bos(vec![vec![n(0), n(0)], vec![n(0), n(0)]]);
    let r = canonical_form_antisym(&zero).unwrap();
    assert_eq!(r.rank("k"), Some(0));
    assert!(r.canonical.is_zero());

    let padded = bos(vec![vec![n(0), n(1), n(0)], vec![n(-1), n(0), n(0)], vec![n(0), n(0), n(0)]]);
    let r = canonical_form_antisym(&padded).unwrap();
    r.verify(&padded).unwrap();
    assert_eq!(r.block(0, 0), j);
    assert!(r.block(1, 1).is_zero());

    let not_sym = bos(vec![vec![n(1), n(2)], vec![n(3), n(4)]]);
    assert!(matches!(canonical_form_antisym(&not_sym), Err(SuperError::SymmetryViolation(_))));
}

#[test]
fn symmetric_without_diagonal_body_needs_a_combination() {
    let m = bos(vec![vec![&z(1) * &z(2), n(1)], vec![n(1), n(0)]]);
    let r = canonical_form_antisym(&m).unwrap();
    r.verify(&m).unwrap();
    assert_eq!(r.rank("k"), Some(2));
}

#[test]
fn antihermitian_examples() {
    let j = bos(vec![vec![n(0), n(1)], vec![n(-1), n(0)]]);
    let r = canonical_form_antihermitian(&j).unwrap();
    assert_eq!(r.canonical, j);
    assert_eq!(r.rank("k_minus"), Some(2));
    assert_eq!(r.rank("k_plus"), Some(0));

    let p = vec![Parity::Even, Parity::Odd, Parity::Odd];
    let zero = SuperMatrix::zero(4, p.clone(), p.clone());
    let r = canonical_form_antihermitian(&zero).unwrap();
    assert!(r.canonical.is_zero());
    assert_eq!((r.rank("k_minus"), r.rank("k_plus")), (Some(0), Some(0)));

    // odd–odd block is symmetric under the graded rule
    let m = SuperMatrix::new(
        4,
        p.clone(),
        p.clone(),
        vec![vec![n(0), z(1), n(0)], vec![-&z(1), n(0), n(2)], vec![n(0), n(2), n(0)]],
    )
    .unwrap();
    let r = canonical_form_antihermitian(&m).unwrap();
    r.verify(&m).unwrap();
    assert_eq!(r.rank("k_plus"), Some(2));

    let bad = SuperMatrix::new(4, p.clone(), p, vec![vec![n(0), z(1), n(0)], vec![z(1), n(0), n(2)], vec![n(0), n(2), n(0)]])
        .unwrap();
    assert!(matches!(canonical_form_antihermitian(&bad), Err(SuperError::SymmetryViolation(_))));
}

#[test]
fn orthogonalization_separates_soul_columns() {
    let z12 = &z(1) * &z(2);
    let m = bos(vec![
        vec![n(1), n(2), z12.clone(), n(1)],
        vec![n(1), &n(2) + &z12, n(0), n(0)],
        vec![n(0), n(0), z12.clone(), n(1)],
    ]);
    let o = orthogonalize_columns(&m).unwrap();
    assert_eq!(o.k, 2);
    assert_eq!(m.mul(&o.q).unwrap(), o.mq);
    assert!(o.q.is_invertible());
    for j in o.k..m.ncols() {
        for i in 0..m.nrows() {
            assert!(o.mq.entry(i, j).has_zero_body());
        }
    }
    // bodies of the w columns are mutually orthogonal
    let body = o.mq.body();
    let dot: Rational = (0..3).map(|i| &body[i][0] * &body[i][1]).sum();
    assert_eq!(dot, rat(0, 1));
}

fn seeded(seed: u64) -> TestRng {
    random::rng(seed)
}

fn random_shape(rng: &mut TestRng) -> Vec<Parity> {
    use rand::Rng;
    let ne = rng.random_range(0..=3);
    let no = rng.random_range(0..=3);
    let (ne, no) = if ne + no == 0 { (1, 1) } else { (ne, no) };
    random::shuffled_parities(rng, ne, no)
}

fn odd_block_sign_flip(m: &SuperMatrix) -> SuperMatrix {
    let mut rows = Vec::new();
    for a in 0..m.nrows() {
        let mut row = Vec::new();
        for b in 0..m.ncols() {
            let x = m.entry(a, b);
            row.push(if m.row_parities()[a] != m.col_parities()[b] { -x } else { x.clone() });
        }
        rows.push(row);
    }
    SuperMatrix::new(m.generators(), m.row_parities().to_vec(), m.col_parities().to_vec(), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_is_associative_and_distributive(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let g = 4;
        let pick = |rng: &mut TestRng| {
            use rand::Rng;
            let p = if rng.random_bool(0.5) { Parity::Even } else { Parity::Odd };
            let mut x = random::grassmann(rng, g, p, 5, true);
            x += &random::grassmann(rng, g, Parity::Even, 3, true);
            x
        };
        let (x, y, w) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        prop_assert_eq!(&(&x * &y) * &w, &x * &(&y * &w));
        prop_assert_eq!(&x * &(&y + &w), &(&x * &y) + &(&x * &w));
        prop_assert_eq!(&(&x + &y) * &w, &(&x * &w) + &(&y * &w));
    }

    #[test]
    fn inverse_exists_iff_body_nonzero(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut x = random::grassmann(&mut rng, 5, Parity::Even, 6, true);
        x += &random::grassmann(&mut rng, 5, Parity::Odd, 4, false);
        match x.inverse() {
            Ok(inv) => {
                prop_assert!(!x.has_zero_body());
                prop_assert!((&x * &inv).is_one());
                prop_assert!((&inv * &x).is_one());
            }
            Err(e) => {
                prop_assert_eq!(e, SuperError::ZeroBody);
                prop_assert!(x.has_zero_body());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn supertrace_is_cyclic(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_shape(&mut rng);
        let a = random::supermatrix_of_rank(&mut rng, 4, &p, &p, 2, 2, 3);
        let b = random::supermatrix_of_rank(&mut rng, 4, &p, &p, 3, 1, 3);
        prop_assert_eq!(a.mul(&b).unwrap().supertrace().unwrap(), b.mul(&a).unwrap().supertrace().unwrap());
    }

    #[test]
    fn superdeterminant_is_multiplicative(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_shape(&mut rng);
        let a = random::invertible_supermatrix(&mut rng, 4, &p, 3);
        let b = random::invertible_supermatrix(&mut rng, 4, &p, 3);
        let sa = a.superdeterminant().unwrap();
        prop_assert_eq!(&sa, &a.superdeterminant_alt().unwrap());
        let sb = b.superdeterminant().unwrap();
        let ab = a.mul(&b).unwrap();
        let sab = ab.superdeterminant().unwrap();
        prop_assert_eq!(&sab, &ab.superdeterminant_alt().unwrap());
        prop_assert_eq!(sab, &sa * &sb);
        let inv = a.inverse().unwrap();
        prop_assert!(a.mul(&inv).unwrap().is_identity());
        prop_assert!(inv.mul(&a).unwrap().is_identity());
    }

    #[test]
    fn transpose_and_dagger_rules(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let rows = random_shape(&mut rng);
        let mid = random_shape(&mut rng);
        let cols = random_shape(&mut rng);
        let m1 = random::supermatrix_of_rank(&mut rng, 4, &rows, &mid, 1, 1, 3);
        let m2 = random::supermatrix_of_rank(&mut rng, 4, &mid, &cols, 1, 1, 3);
        let t2 = m1.transpose().transpose();
        prop_assert_eq!(&t2, &odd_block_sign_flip(&m1));
        prop_assert_eq!(&t2.transpose().transpose(), &m1);
        let prod = m1.mul(&m2).unwrap();
        prop_assert_eq!(prod.transpose(), m2.transpose().mul(&m1.transpose()).unwrap());
        prop_assert_eq!(prod.dagger(), m2.dagger().mul(&m1.dagger()).unwrap());
    }

    #[test]
    fn generic_and_bosonic_forms_reconstruct(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded(seed);
        let rows = random_shape(&mut rng);
        let cols = random_shape(&mut rng);
        let (r1, r2) = (rng.random_range(0..=3), rng.random_range(0..=3));
        let m = random::supermatrix_of_rank(&mut rng, 4, &rows, &cols, r1, r2, 4);
        let r = canonical_form_generic(&m).unwrap();
        prop_assert_eq!(r.verify(&m), Ok(()));
        let body = m.submatrix(&m.even_rows(), &m.even_cols()).body();
        prop_assert_eq!(r.rank("k1").unwrap(), ratmat::rank(&body));

        let nr = rng.random_range(1..=4);
        let nc = rng.random_range(1..=4);
        let ps_r = vec![Parity::Even; nr];
        let ps_c = vec![Parity::Even; nc];
        let k = rng.random_range(0..=3);
        let b = random::supermatrix_of_rank(&mut rng, 4, &ps_r, &ps_c, k, 0, 4);
        let r = canonical_form_bosonic(&b).unwrap();
        prop_assert_eq!(r.verify(&b), Ok(()));
        prop_assert_eq!(r.rank("k").unwrap(), b.body_rank());
    }

    #[test]
    fn congruence_forms_reconstruct(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded(seed);
        let n = rng.random_range(1..=5);
        let sym = if rng.random_bool(0.5) { Symmetry::Symmetric } else { Symmetry::Antisymmetric };
        let rank = rng.random_range(0..=n);
        let a = random::bosonic_symmetric(&mut rng, 4, n, sym, rank, 4);
        let r = canonical_form_antisym(&a).unwrap();
        prop_assert_eq!(r.verify(&a), Ok(()));
        prop_assert_eq!(r.rank("k").unwrap(), a.body_rank());
        prop_assert!(r.block(0, 0).is_scalar_valued());

        let even_n = 2 * rng.random_range(1..=2);
        let inv = random::invertible_bosonic_symmetric(&mut rng, 4, even_n, Symmetry::Antisymmetric, 4);
        let r = desoul(&inv).unwrap();
        prop_assert_eq!(r.verify(&inv), Ok(()));
        prop_assert_eq!(r.canonical.body(), inv.body());
        prop_assert!(r.canonical.is_scalar_valued());
        let inv = random::invertible_bosonic_symmetric(&mut rng, 4, n, Symmetry::Symmetric, 4);
        let r = desoul(&inv).unwrap();
        prop_assert_eq!(r.verify(&inv), Ok(()));
        prop_assert!(r.canonical.is_scalar_valued());

        let p = random_shape(&mut rng);
        let density = rng.random_range(0.0..1.0);
        let omega = random::graded_antisymmetric(&mut rng, 4, &p, 4, density);
        let r = canonical_form_antihermitian(&omega).unwrap();
        prop_assert_eq!(r.verify(&omega), Ok(()));
        prop_assert!(r.block(0, 0).is_scalar_valued() && r.block(2, 2).is_scalar_valued());
    }

    #[test]
    fn orthogonalization_reconstructs(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded(seed);
        let (nr, nc) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let k = rng.random_range(0..=3);
        let m = random::supermatrix_of_rank(&mut rng, 4, &vec![Parity::Even; nr], &vec![Parity::Even; nc], k, 0, 3);
        let o = orthogonalize_columns(&m).unwrap();
        prop_assert_eq!(m.mul(&o.q).unwrap(), o.mq.clone());
        prop_assert!(o.q.is_invertible());
        prop_assert_eq!(o.k, m.body_rank());
    }
}
