use gradmech::brackets::poisson;
use gradmech::constraints::*;
use gradmech::random::{self, TestRng};
use gradmech::superalgebra::Parity;
use gradmech::symalg::*;
use gradmech::symmetry::*;
use proptest::prelude::*;
use rand::Rng;

fn p(t: &VariableTable, s: &str) -> GradedExpr {
    parse_expr(s, t).unwrap()
}

fn lagrangian(g: u32, vars: &[(&str, Parity)], l: &str) -> LagrangianModel {
    let mut t = VariableTable::new(g);
    for (q, par) in vars {
        t.add_canonical_pair(q, *par).unwrap();
    }
    let l = p(&t, l);
    LagrangianModel::new(t, l).unwrap()
}

fn para4() -> LagrangianModel {
    let e = Parity::Even;
    lagrangian(0, &[("q1", e), ("q2", e), ("q3", e), ("q4", e)], "1/2*q1_dot^2 + 1/2*q2_dot^2 - 1/2*q2^2 - 1/2*q4^2")
}

fn candidate(t: &VariableTable, dq: &[(&str, &str)], dk: &str) -> SymmetryCandidate {
    SymmetryCandidate {
        delta_q: dq.iter().map(|(q, e)| (t.require(q).unwrap(), p(t, e))).collect(),
        delta_k: p(t, dk),
    }
}

/// `dQ/dt + Σ δq^A δL/δq^A`, recomputed from scratch.
fn on_shell_identity(m: &LagrangianModel, s: &SymmetryCandidate, q: &GradedExpr) -> GradedExpr {
    let t = &m.table;
    let mut acc = total_time_derivative(q, t).unwrap();
    for (v, el) in euler_lagrange(&m.lagrangian, t).unwrap() {
        if let Some((_, d)) = s.delta_q.iter().find(|(x, _)| *x == v) {
            acc = &acc + &(d * &el);
        }
    }
    acc
}

#[test]
fn lagrangian_charges() {
    let e = Parity::Even;
    let free = lagrangian(0, &[("q", e)], "1/2*q_dot^2");
    let t = &free.table;
    let shift = candidate(t, &[("q", "1")], "0");
    assert_eq!(noether_charge(&free, &shift).unwrap(), p(t, "q_dot"));
    let boost = candidate(t, &[("q", "t")], "q");
    let q = noether_charge(&free, &boost).unwrap();
    assert_eq!(q, p(t, "t*q_dot - q"));
    assert!(on_shell_identity(&free, &boost, &q).is_zero());

    let osc = lagrangian(0, &[("q", e)], "1/2*q_dot^2 - 1/2*q^2");
    let t = &osc.table;
    let shift = candidate(t, &[("q", "1")], "0");
    assert_eq!(verify_offshell_invariance(&osc, &shift).unwrap(), Some(p(t, "-q")));
    assert!(matches!(noether_charge(&osc, &shift), Err(SymmetryError::Unverified(_))));
    // energy from time translation
    let tt = candidate(t, &[("q", "q_dot")], "1/2*q_dot^2 - 1/2*q^2");
    assert_eq!(noether_charge(&osc, &tt).unwrap(), p(t, "1/2*q_dot^2 + 1/2*q^2"));

    let rot = lagrangian(0, &[("q1", e), ("q2", e)], "1/2*q1_dot^2 + 1/2*q2_dot^2 - 1/2*q1^2 - 1/2*q2^2");
    let t = &rot.table;
    let s = candidate(t, &[("q1", "-q2"), ("q2", "q1")], "0");
    assert_eq!(noether_charge(&rot, &s).unwrap(), p(t, "q1*q2_dot - q2*q1_dot"));
}

#[test]
fn fermionic_charges() {
    let f = lagrangian(1, &[("psi", Parity::Odd)], "1/2*psi_dot*psi");
    let t = &f.table;
    // δψ = ζ₁ shifts L by d(½ψζ₁)/dt
    let s = candidate(t, &[("psi", "zeta1")], "1/2*psi*zeta1");
    assert_eq!(verify_offshell_invariance(&f, &s).unwrap(), None);
    let q = noether_charge(&f, &s).unwrap();
    assert_eq!(q, p(t, "zeta1*psi"));
    assert!(on_shell_identity(&f, &s, &q).is_zero());
    // parity mismatch
    let bad = candidate(t, &[("psi", "1")], "0");
    assert!(matches!(verify_offshell_invariance(&f, &bad), Err(SymmetryError::BadCandidate(_))));
}

#[test]
fn total_charges_para4() {
    let m = para4();
    let pa = primary_constraints(&m).unwrap();
    let hm = &pa.model;
    let rep = run_dirac_bergmann(hm).unwrap();
    let t = &rep.table;
    let tt = candidate(
        &m.table,
        &[("q1", "q1_dot"), ("q2", "q2_dot"), ("q3", "q3_dot"), ("q4", "q4_dot")],
        "1/2*q1_dot^2 + 1/2*q2_dot^2 - 1/2*q2^2 - 1/2*q4^2",
    );
    assert_eq!(total_noether_charge(&m, &tt, hm, &rep).unwrap(), rep.total_hamiltonian);
    let gauge = candidate(&m.table, &[("q3", "1")], "0");
    assert_eq!(total_noether_charge(&m, &gauge, hm, &rep).unwrap(), p(t, "p3"));
    let not = candidate(&m.table, &[("q4", "1")], "0");
    assert!(matches!(total_noether_charge(&m, &not, hm, &rep), Err(SymmetryError::Unverified(_))));
}

#[test]
fn total_charge_fermion_pair_time_translation() {
    let o = Parity::Odd;
    let m = lagrangian(2, &[("x", Parity::Even), ("psi1", o), ("psi2", o)], "1/2*x_dot^2 + 1/2*psi1_dot*psi1 + 1/2*psi2_dot*psi2");
    let pa = primary_constraints(&m).unwrap();
    let rep = run_dirac_bergmann(&pa.model).unwrap();
    let tt = candidate(
        &m.table,
        &[("x", "x_dot"), ("psi1", "psi1_dot"), ("psi2", "psi2_dot")],
        "1/2*x_dot^2 + 1/2*psi1_dot*psi1 + 1/2*psi2_dot*psi2",
    );
    let q = total_noether_charge(&m, &tt, &pa.model, &rep).unwrap();
    let basis = rep.basis().unwrap();
    assert_eq!(basis.restrict(&q).unwrap(), basis.restrict(&rep.total_hamiltonian).unwrap());
}

fn diracce() -> HamiltonianModel {
    let mut t = VariableTable::new(0);
    t.add_canonical_pair("x", Parity::Even).unwrap();
    t.add_canonical_pair("y", Parity::Even).unwrap();
    let h = p(&t, "1/2*exp(-y)*p_x^2");
    let py = p(&t, "p_y");
    HamiltonianModel::new(t, h, vec![py]).unwrap()
}

#[test]
fn generator_criterion_diracce() {
    let hm = diracce();
    let v = verify_constraint_set(&hm, &[p(&hm.table, "p_x")], None).unwrap();
    let rep = &v.report;
    let t = &rep.table;
    for eps in ["1", "t", "3*t^2 - t + 2", "t^3"] {
        let q = p(t, &format!("p_y*({eps})"));
        let r = is_symmetry_generator(&q, &hm, rep).unwrap();
        assert!(r.generator, "{eps}");
        let dot = explicit_time_derivative(&p(t, eps), t);
        assert_eq!(r.delta_v, vec![dot]);
        assert_eq!(r.delta_w, vec![(1, 1, p(t, &format!("exp(-y)*({eps})")))]);
        assert!(r.time_shift.is_zero() && r.residual.is_zero());
    }
    let r = is_symmetry_generator(&p(t, "p_x"), &hm, rep).unwrap();
    assert!(r.generator && r.delta_v[0].is_zero() && r.delta_w.is_empty());
    let r = is_symmetry_generator(&p(t, "t*p_x"), &hm, rep).unwrap();
    assert!(!r.generator);
    assert_eq!(r.residual, p(t, "p_x"));
    // pure time functions are absorbed
    let r = is_symmetry_generator(&p(t, "p_x + t^2"), &hm, rep).unwrap();
    assert!(r.generator);
    assert_eq!(r.time_shift, p(t, "2*t"));
    // not first class: [x, H_T} = e^{-y} p_x ≠ 0
    let r = is_symmetry_generator(&p(t, "x"), &hm, rep).unwrap();
    assert!(!r.generator);
}

#[test]
fn generator_criterion_para4() {
    let m = para4();
    let pa = primary_constraints(&m).unwrap();
    let hm = &pa.model;
    let rep = run_dirac_bergmann(hm).unwrap();
    let t = &rep.table;
    let r = is_symmetry_generator(&p(t, "t^2*p3"), hm, &rep).unwrap();
    assert!(r.generator);
    assert_eq!(r.delta_v, vec![p(t, "2*t")]);
    assert!(is_symmetry_generator(&rep.total_hamiltonian, hm, &rep).unwrap().generator);
    assert!(is_symmetry_generator(&p(t, "q1*p2 - q2*p1"), hm, &rep).unwrap().generator == false);
    // free motion of q1: p1 is conserved
    assert!(is_symmetry_generator(&p(t, "p1"), hm, &rep).unwrap().generator);
    // second-class constraints are not generators of anything new but are trivially first class on shell
    let q4 = is_symmetry_generator(&p(t, "q4"), hm, &rep).unwrap();
    assert!(!q4.generator);
}

#[test]
fn gauge_conditions() {
    // DIRACCE: φ̇(p_y) is quadratic in p_x, p_x is conserved.
    let hm = diracce();
    let v = verify_constraint_set(&hm, &[p(&hm.table, "p_x")], None).unwrap();
    let rep = &v.report;
    let t = &rep.table;
    let gc = gauge_generator_conditions(rep, &hm).unwrap();
    assert_eq!(gc.first_class, vec![p(t, "p_y"), p(t, "p_x")]);
    assert_eq!(gc.quadratic, vec![true, false]);
    assert!(gc.constant);
    assert!(gc.flags.iter().any(|f| f.contains("quadratic")));
    assert_eq!(gc.ode_rows(), 1);
    let ok = gc.ode_residuals(&[p(t, "t^2"), p(t, "5")], t).unwrap();
    assert!(ok.iter().all(|r| r.is_zero()));
    let bad = gc.ode_residuals(&[p(t, "0"), p(t, "t")], t).unwrap();
    assert_eq!(bad, vec![p(t, "1")]);

    // L = ½(q̇₁ − q₂)²: Q = ε̇ p₂ + ε p₁ for any ε(t).
    let m = lagrangian(0, &[("q1", Parity::Even), ("q2", Parity::Even)], "1/2*q1_dot^2 - q1_dot*q2 + 1/2*q2^2");
    let pa = primary_constraints(&m).unwrap();
    let rep = run_dirac_bergmann(&pa.model).unwrap();
    let t = &rep.table;
    let gc = gauge_generator_conditions(&rep, &pa.model).unwrap();
    assert_eq!(gc.first_class, vec![p(t, "p2"), p(t, "p1")]);
    assert_eq!(gc.tau[1][0], p(t, "-1"));
    for eps in ["t^3", "1 - t", "7"] {
        let e = p(t, eps);
        let params = [explicit_time_derivative(&e, t), e.clone()];
        assert!(gc.ode_residuals(&params, t).unwrap().iter().all(|r| r.is_zero()));
        let q = gc.generator(&params, t.generators());
        assert!(is_symmetry_generator(&q, &pa.model, &rep).unwrap().generator, "{eps}");
    }
    let wrong = [p(&rep.table, "t"), p(&rep.table, "t")];
    assert!(!gc.ode_residuals(&wrong, t).unwrap()[0].is_zero());
    assert!(!is_symmetry_generator(&gc.generator(&wrong, 0), &pa.model, &rep).unwrap().generator);

    // PARA4 has no secondary first-class constraint.
    let pa = primary_constraints(&para4()).unwrap();
    let rep = run_dirac_bergmann(&pa.model).unwrap();
    let gc = gauge_generator_conditions(&rep, &pa.model).unwrap();
    assert_eq!(gc.ode_rows(), 0);
    assert_eq!(gc.first_class, vec![p(&rep.table, "p3")]);
}

#[test]
fn gauge_conditions_reject_explicit_time() {
    let mut t = VariableTable::new(0);
    t.add_canonical_pair("x", Parity::Even).unwrap();
    t.add_canonical_pair("y", Parity::Even).unwrap();
    let h = p(&t, "1/2*p_x^2 + t*x");
    let hm = HamiltonianModel::new(t.clone(), h, vec![p(&t, "p_y")]).unwrap();
    let rep = run_dirac_bergmann(&hm).unwrap();
    assert_eq!(gauge_generator_conditions(&rep, &hm).unwrap_err(), SymmetryError::NonStatic);
}

fn random_table(rng: &mut TestRng) -> (VariableTable, Vec<VarId>) {
    let g = rng.random_range(0..=2u32);
    let mut t = VariableTable::new(g);
    let n = rng.random_range(1..=3);
    let n_odd = if g == 0 { 0 } else { rng.random_range(0..=2) };
    let mut qs = Vec::new();
    for i in 0..n {
        qs.push(t.add_canonical_pair(&format!("q{}", i + 1), Parity::Even).unwrap().0);
    }
    for i in 0..n_odd {
        qs.push(t.add_canonical_pair(&format!("th{}", i + 1), Parity::Odd).unwrap().0);
    }
    (t, qs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    /// Time translation of any autonomous Lagrangian yields the energy function.
    #[test]
    fn time_translation_gives_energy(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (t, qs) = random_table(&mut rng);
        let vars: Vec<VarId> = qs.iter().flat_map(|q| [*q, t.velocity(*q).unwrap()]).collect();
        let l = random::poly(&mut rng, &t, &vars, 5, 3, Some(Parity::Even), 1);
        let m = LagrangianModel::new(t.clone(), l.clone()).unwrap();
        let s = SymmetryCandidate {
            delta_q: qs.iter().map(|q| (*q, GradedExpr::var(&t, t.velocity(*q).unwrap()))).collect(),
            delta_k: l.clone(),
        };
        let q = noether_charge(&m, &s).unwrap();
        let mut energy = -&l;
        for v in qs.iter().map(|q| t.velocity(*q).unwrap()) {
            energy = &energy + &(&GradedExpr::var(&t, v) * &l.d(&t, v));
        }
        prop_assert_eq!(&q, &energy);
        prop_assert!(on_shell_identity(&m, &s, &q).is_zero());
    }

    /// A cyclic coordinate gives a conserved momentum.
    #[test]
    fn cyclic_coordinate_gives_momentum(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (t, qs) = random_table(&mut rng);
        let k = qs[0];
        let vars: Vec<VarId> = qs.iter().flat_map(|q| [*q, t.velocity(*q).unwrap()]).filter(|v| *v != k).collect();
        let l = random::poly(&mut rng, &t, &vars, 5, 3, Some(Parity::Even), 1);
        let m = LagrangianModel::new(t.clone(), l.clone()).unwrap();
        let s = SymmetryCandidate { delta_q: vec![(k, GradedExpr::one(t.generators()))], delta_k: GradedExpr::zero(t.generators()) };
        let q = noether_charge(&m, &s).unwrap();
        prop_assert_eq!(q, l.d(&t, t.velocity(k).unwrap()));
    }

    /// Adding a random term to an invariant Lagrangian is detected unless it is a total derivative.
    #[test]
    fn residual_matches_variation(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (t, qs) = random_table(&mut rng);
        let k = qs[0];
        let l = random::poly(&mut rng, &t, &[k], 3, 3, Some(Parity::Even), 0);
        let m = LagrangianModel::new(t.clone(), l.clone()).unwrap();
        let s = SymmetryCandidate { delta_q: vec![(k, GradedExpr::one(t.generators()))], delta_k: GradedExpr::zero(t.generators()) };
        let r = invariance_residual(&m, &s).unwrap();
        prop_assert_eq!(r, l.d(&t, k));
    }

    /// δx = [x, Q} preserves the canonical brackets to first order for any even Q.
    #[test]
    fn first_order_transformations_are_canonical(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (t, qs) = random_table(&mut rng);
        let pairs = t.canonical_pairs();
        let vars: Vec<VarId> = qs.iter().copied().chain(pairs.iter().map(|(_, p)| *p)).collect();
        let q = random::poly(&mut rng, &t, &vars, 6, 3, Some(Parity::Even), 1);
        for d in first_order_symplectic_defect(&q, &t).unwrap() {
            prop_assert!(d.is_zero(), "{}", d.render(&t));
        }
        // the generated flow moves positions by the momentum derivative
        let x = GradedExpr::var(&t, pairs[0].0);
        prop_assert_eq!(poisson(&x, &q, &t).unwrap(), q.d(&t, pairs[0].1));
    }
}
